//! Strict `key = value` run configuration with bracketed sections.
//!
//! Unknown sections, unknown keys and malformed lines are hard errors
//! carrying their line number; silent typos would corrupt numerical
//! comparisons downstream.

use crate::error::CliError;
use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use willmore_core::grid::Family;
use willmore_core::metric::{catalog_lookup, MetricChart, Params};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Energy,
    Scan,
    Minimize,
    Residual,
    Verify,
}

impl Command {
    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "energy" => Command::Energy,
            "scan" => Command::Scan,
            "minimize" => Command::Minimize,
            "residual" => Command::Residual,
            "verify" => Command::Verify,
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Command::Energy => "energy",
            Command::Scan => "scan",
            Command::Minimize => "minimize",
            Command::Residual => "residual",
            Command::Verify => "verify",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Clone)]
pub struct ManifoldSpec {
    pub name: String,
    pub params: Params,
}

#[derive(Debug, Clone)]
pub struct ShapeSpec {
    pub family: Option<Family>,
    pub file: Option<PathBuf>,
    pub params: Params,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub manifold: Option<ManifoldSpec>,
    pub shape: Option<ShapeSpec>,
    pub resolution: (usize, usize),
    pub output: PathBuf,
    pub formats: BTreeSet<Format>,
    pub scan_param: Option<String>,
    pub scan_values: Vec<f64>,
    pub mode: Option<String>,
    pub max_iters: Option<usize>,
    pub m_max: Option<usize>,
}

impl RunConfig {
    pub fn verify_defaults() -> Self {
        RunConfig {
            command: Command::Verify,
            manifold: None,
            shape: None,
            resolution: (64, 64),
            output: PathBuf::from("./out"),
            formats: [Format::Csv, Format::Json].into_iter().collect(),
            scan_param: None,
            scan_values: Vec::new(),
            mode: None,
            max_iters: None,
            m_max: None,
        }
    }

    /// The ambient chart of the run: explicit manifold section, else
    /// derived from the shape family.
    pub fn chart(&self) -> Result<MetricChart, CliError> {
        if let Some(m) = &self.manifold {
            return Ok(catalog_lookup(&m.name, &m.params)?);
        }
        if let Some(shape) = &self.shape {
            if let Some(family) = shape.family {
                return Ok(family.chart(&self.merged_shape_params())?);
            }
        }
        Err(CliError::Validation(
            "no manifold given and none derivable from the shape".into(),
        ))
    }

    /// Family parameters: manifold parameters overlaid with shape keys.
    pub fn merged_shape_params(&self) -> Params {
        let mut params = Params::new();
        if let Some(m) = &self.manifold {
            for (k, v) in &m.params.0 {
                params.0.insert(k.clone(), *v);
            }
        }
        if let Some(s) = &self.shape {
            for (k, v) in &s.params.0 {
                params.0.insert(k.clone(), *v);
            }
        }
        params
    }
}

fn err_at(line: usize, message: impl Into<String>) -> CliError {
    CliError::Validation(format!("line {line}: {}", message.into()))
}

fn parse_float(line: usize, key: &str, value: &str) -> Result<f64, CliError> {
    value
        .parse::<f64>()
        .map_err(|_| err_at(line, format!("value of `{key}` is not a number: `{value}`")))
}

fn parse_resolution(line: usize, value: &str) -> Result<(usize, usize), CliError> {
    let parse_one = |tok: &str| {
        tok.trim()
            .parse::<usize>()
            .map_err(|_| err_at(line, format!("invalid resolution component `{tok}`")))
    };
    match value.split_once(['x', 'X']) {
        Some((a, b)) => Ok((parse_one(a)?, parse_one(b)?)),
        None => {
            let n = parse_one(value)?;
            Ok((n, n))
        }
    }
}

/// Parses and validates a configuration document. Every referenced file
/// must exist and every parameter must pass catalog validation before any
/// computation starts.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    #[derive(PartialEq, Clone, Copy)]
    enum Section {
        None,
        Run,
        Manifold,
        Shape,
    }

    let mut section = Section::None;
    let mut command: Option<Command> = None;
    let mut resolution: Option<(usize, usize)> = None;
    let mut output: Option<PathBuf> = None;
    let mut formats: Option<BTreeSet<Format>> = None;
    let mut scan_param: Option<String> = None;
    let mut scan_values: Vec<f64> = Vec::new();
    let mut mode: Option<String> = None;
    let mut max_iters: Option<usize> = None;
    let mut m_max: Option<usize> = None;
    let mut manifold_name: Option<String> = None;
    let mut manifold_params = Params::new();
    let mut shape_family: Option<String> = None;
    let mut shape_file: Option<PathBuf> = None;
    let mut shape_params = Params::new();
    let mut saw_manifold = false;
    let mut saw_shape = false;

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| err_at(line_no, "unterminated section header"))?;
            section = match name {
                "run" => Section::Run,
                "manifold" => {
                    saw_manifold = true;
                    Section::Manifold
                }
                "shape" => {
                    saw_shape = true;
                    Section::Shape
                }
                other => return Err(err_at(line_no, format!("unknown section: {other}"))),
            };
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(err_at(line_no, format!("expected `key = value`, got `{line}`")));
        };
        let key = key.trim();
        let value = value.trim();
        if value.is_empty() {
            return Err(err_at(line_no, format!("empty value for key `{key}`")));
        }

        match section {
            Section::None => {
                return Err(err_at(
                    line_no,
                    "keys must appear inside a [run], [manifold] or [shape] section",
                ))
            }
            Section::Run => match key {
                "command" => {
                    command = Some(Command::from_name(value).ok_or_else(|| {
                        err_at(line_no, format!("unknown command: {value}"))
                    })?);
                }
                "resolution" => resolution = Some(parse_resolution(line_no, value)?),
                "output" => output = Some(PathBuf::from(value)),
                "formats" => formats = Some(parse_formats(line_no, value)?),
                "scan_param" => scan_param = Some(value.to_string()),
                "scan_values" => {
                    scan_values = value
                        .split(',')
                        .map(|tok| parse_float(line_no, "scan_values", tok.trim()))
                        .collect::<Result<_, _>>()?;
                }
                "mode" => {
                    if !["curve-h2", "torus"].contains(&value) {
                        return Err(err_at(
                            line_no,
                            format!("mode must be `curve-h2` or `torus`, got `{value}`"),
                        ));
                    }
                    mode = Some(value.to_string());
                }
                "max_iters" => {
                    max_iters = Some(value.parse().map_err(|_| {
                        err_at(line_no, format!("invalid max_iters: `{value}`"))
                    })?);
                }
                "m_max" => {
                    m_max = Some(value.parse().map_err(|_| {
                        err_at(line_no, format!("invalid m_max: `{value}`"))
                    })?);
                }
                other => return Err(err_at(line_no, format!("unknown key: {other}"))),
            },
            Section::Manifold => match key {
                "name" => manifold_name = Some(value.to_string()),
                "c" | "t" | "lambda" | "mu" => {
                    manifold_params = manifold_params.with(key, parse_float(line_no, key, value)?);
                }
                other => return Err(err_at(line_no, format!("unknown key: {other}"))),
            },
            Section::Shape => match key {
                "family" => shape_family = Some(value.to_string()),
                "file" => shape_file = Some(PathBuf::from(value)),
                "r" | "t" | "root" => {
                    shape_params = shape_params.with(key, parse_float(line_no, key, value)?);
                }
                other => return Err(err_at(line_no, format!("unknown key: {other}"))),
            },
        }
    }

    let command = command
        .ok_or_else(|| CliError::Validation("missing `command` in the [run] section".into()))?;

    let manifold = match (saw_manifold, manifold_name) {
        (false, _) => None,
        (true, None) => {
            return Err(CliError::Validation(
                "manifold section needs a `name` key".into(),
            ))
        }
        (true, Some(name)) => {
            // Validate now: catalog errors carry the violated constraint.
            catalog_lookup(&name, &manifold_params)?;
            Some(ManifoldSpec {
                name,
                params: manifold_params,
            })
        }
    };

    let shape = if saw_shape {
        let family = match &shape_family {
            Some(name) => Some(Family::from_name(name)?),
            None => None,
        };
        if family.is_none() && shape_file.is_none() {
            return Err(CliError::Validation(
                "shape section needs a `family` or a `file` key".into(),
            ));
        }
        if let Some(path) = &shape_file {
            if !path.exists() {
                return Err(CliError::Validation(format!(
                    "shape file does not exist: {}",
                    path.display()
                )));
            }
        }
        Some(ShapeSpec {
            family,
            file: shape_file,
            params: shape_params,
        })
    } else {
        None
    };

    let config = RunConfig {
        command,
        manifold,
        shape,
        resolution: resolution.unwrap_or((64, 64)),
        output: output.unwrap_or_else(|| PathBuf::from("./out")),
        formats: formats
            .unwrap_or_else(|| [Format::Csv, Format::Json].into_iter().collect()),
        scan_param,
        scan_values,
        mode,
        max_iters,
        m_max,
    };
    validate_cross_fields(&config)?;
    Ok(config)
}

fn parse_formats(line: usize, value: &str) -> Result<BTreeSet<Format>, CliError> {
    let mut set = BTreeSet::new();
    for tok in value.split(',') {
        set.insert(match tok.trim() {
            "csv" => Format::Csv,
            "json" => Format::Json,
            "svg" => Format::Svg,
            other => {
                return Err(err_at(line, format!("unknown format: {other}")));
            }
        });
    }
    Ok(set)
}

fn validate_cross_fields(config: &RunConfig) -> Result<(), CliError> {
    match config.command {
        Command::Verify => Ok(()),
        Command::Scan => {
            let shape = config.shape.as_ref().ok_or_else(|| {
                CliError::Validation("scan needs a [shape] section with a family".into())
            })?;
            if shape.family.is_none() {
                return Err(CliError::Validation("scan needs a shape family".into()));
            }
            if config.scan_values.is_empty() {
                return Err(CliError::Validation(
                    "scan needs `scan_values` in the [run] section".into(),
                ));
            }
            check_family_chart(config)
        }
        Command::Energy | Command::Residual | Command::Minimize => {
            if config.shape.is_none() {
                return Err(CliError::Validation(format!(
                    "{} needs a [shape] section",
                    config.command.name()
                )));
            }
            check_family_chart(config)
        }
    }
}

/// A family must live in the chart the manifold section names.
fn check_family_chart(config: &RunConfig) -> Result<(), CliError> {
    let (Some(manifold), Some(shape)) = (&config.manifold, &config.shape) else {
        return Ok(());
    };
    if let Some(family) = shape.family {
        let family_chart = family.chart(&config.merged_shape_params())?;
        if family_chart.name() != manifold.name {
            return Err(CliError::Validation(format!(
                "family `{}` lives in chart `{}`, not `{}`",
                family.name(),
                family_chart.name(),
                manifold.name
            )));
        }
    }
    Ok(())
}

/// Loads and parses a configuration file.
pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        CliError::Validation(format!("cannot read config {}: {e}", path.display()))
    })?;
    parse_config(&text)
}
