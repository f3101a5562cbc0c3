//! Command dispatch: resolves the configured chart and shape, runs the
//! requested operation, and writes the report artifacts.

use crate::config::{Command, Format, RunConfig};
use crate::error::CliError;
use crate::report::{
    energy_report_entries, flat_json, fmt17, write_artifact, JsonValue,
};
use crate::svg;
use std::f64::consts::TAU;
use willmore_core::energy;
use willmore_core::grid::{
    self, ClosedCurve, Family, StoredShape, TorusImmersion,
};
use willmore_core::metric::{MetricChart, Params};
use willmore_core::optim::{
    self, hyperbolic_radius_from_diameter, scan_family, OptimOptions,
};
use willmore_core::residual::el_residual;
use willmore_core::shape::{analyze, classify, shape_csv, AnalysisLevel, SurfaceClass};

/// Executes a validated run configuration. Artifacts land in
/// `config.output`; the error variant fixes the exit code.
pub fn run(config: &RunConfig) -> Result<(), CliError> {
    match config.command {
        Command::Energy => run_energy(config),
        Command::Scan => run_scan(config),
        Command::Minimize => run_minimize(config),
        Command::Residual => run_residual(config),
        Command::Verify => run_verify(config),
    }
}

fn resolve_torus(
    config: &RunConfig,
) -> Result<(MetricChart, TorusImmersion, Option<Family>, Params), CliError> {
    let chart = config.chart()?;
    let shape = config
        .shape
        .as_ref()
        .ok_or_else(|| CliError::Validation("a [shape] section is required".into()))?;
    let params = config.merged_shape_params();

    if let Some(path) = &shape.file {
        let stored = grid::read_shape_file(path)?;
        return match (stored, shape.family) {
            (StoredShape::Torus(imm), family) => {
                let imm = imm.normalize_angles(&chart)?;
                imm.validate(&chart)?;
                Ok((chart, imm, family, params))
            }
            (StoredShape::Curve(curve), Some(Family::CurveProduct)) => {
                let torus = grid::product_torus(&curve, config.resolution.0, config.resolution.1)?;
                torus.validate(&chart)?;
                Ok((chart, torus, Some(Family::CurveProduct), params))
            }
            (StoredShape::Curve(_), _) => Err(CliError::Validation(
                "curve files need the curve-product family (or the curve-h2 minimize mode)"
                    .into(),
            )),
        };
    }

    let family = shape.family.ok_or_else(|| {
        CliError::Validation("shape section needs a family or a file".into())
    })?;
    if family == Family::CurveProduct {
        return Err(CliError::Validation(
            "curve-product needs a curve file in the shape section".into(),
        ));
    }
    let imm = grid::make_family(family, &params, config.resolution)?;
    imm.validate(&chart)?;
    Ok((chart, imm, Some(family), params))
}

fn resolve_curve(config: &RunConfig) -> Result<(f64, ClosedCurve), CliError> {
    let chart = config.chart()?;
    if chart.name() != "h2xs1" {
        return Err(CliError::Validation(format!(
            "curve minimization runs in the h2xs1 chart, got `{}`",
            chart.name()
        )));
    }
    let c = chart.params().get_or("c", 1.0);
    let shape = config
        .shape
        .as_ref()
        .ok_or_else(|| CliError::Validation("a [shape] section is required".into()))?;
    if let Some(path) = &shape.file {
        match grid::read_shape_file(path)? {
            StoredShape::Curve(curve) => return Ok((c, curve)),
            StoredShape::Torus(_) => {
                return Err(CliError::Validation(
                    "curve-h2 minimization needs a curve file, got a torus grid".into(),
                ))
            }
        }
    }
    match shape.family {
        Some(Family::CircleH2xS1) => {
            let params = config.merged_shape_params();
            let r = params.get_or("r", 1f64.asinh() / c.sqrt());
            let euclid = grid::poincare_circle_euclidean_radius(c, r);
            let n = config.resolution.0.max(64);
            let points: Vec<[f64; 2]> = (0..n)
                .map(|i| {
                    let th = TAU * i as f64 / n as f64;
                    [euclid * th.cos(), euclid * th.sin()]
                })
                .collect();
            Ok((c, ClosedCurve::new(TAU, points)?))
        }
        _ => Err(CliError::Validation(
            "curve-h2 minimization needs a curve file or the circle-h2xs1 family".into(),
        )),
    }
}

fn run_energy(config: &RunConfig) -> Result<(), CliError> {
    let (chart, imm, family, params) = resolve_torus(config)?;
    let report = energy::willmore(&imm, &chart)?;
    let closed = family.and_then(|f| energy::closed_form(f, &params));

    if config.formats.contains(&Format::Json) {
        let doc = flat_json(&energy_report_entries(&report, family, &params, closed));
        write_artifact(&config.output, "report.json", &doc)?;
    }
    if config.formats.contains(&Format::Csv) {
        let geom = analyze(&imm, &chart, AnalysisLevel::Full)?;
        write_artifact(&config.output, "shape.csv", &shape_csv(&geom)?)?;
    }
    println!(
        "willmore = {} (area {}, resolution {}x{})",
        fmt17(report.willmore),
        fmt17(report.area),
        report.resolution.0,
        report.resolution.1
    );
    Ok(())
}

fn default_scan_param(family: Family) -> Option<&'static str> {
    match family {
        Family::FlatRadiusR2xS1 | Family::HopfBerger => Some("t"),
        Family::CircleH2xS1 => Some("r"),
        Family::GeodesicR4 => Some("lambda"),
        Family::CliffordS2xS1 | Family::CurveProduct => None,
    }
}

fn run_scan(config: &RunConfig) -> Result<(), CliError> {
    let shape = config.shape.as_ref().unwrap();
    let family = shape.family.unwrap();
    let param = match &config.scan_param {
        Some(p) => p.clone(),
        None => default_scan_param(family)
            .ok_or_else(|| {
                CliError::Validation(format!(
                    "family `{}` has no default scan parameter; set scan_param",
                    family.name()
                ))
            })?
            .to_string(),
    };
    let base = config.merged_shape_params();
    let table = scan_family(family, &base, &param, &config.scan_values, config.resolution);

    if config.formats.contains(&Format::Csv) {
        write_artifact(&config.output, "scan.csv", &table.to_csv())?;
    }
    if config.formats.contains(&Format::Svg) {
        let points: Vec<(f64, f64)> = table
            .rows
            .iter()
            .filter_map(|r| r.willmore.map(|w| (r.value, w)))
            .collect();
        let plot = svg::line_plot(
            &format!("willmore energy: {}", family.name()),
            &param,
            "W",
            &points,
        );
        write_artifact(&config.output, "scan.svg", &plot)?;
    }
    if config.formats.contains(&Format::Json) {
        let ok_rows = table.rows.iter().filter(|r| r.error.is_none()).count();
        let max_err = table
            .rows
            .iter()
            .filter_map(|r| r.abs_error)
            .fold(f64::NAN, f64::max);
        let entries = vec![
            (
                "family".to_string(),
                JsonValue::Text(family.name().to_string()),
            ),
            ("scan_param".to_string(), JsonValue::Text(param.clone())),
            (
                "values".to_string(),
                JsonValue::Int(table.rows.len() as i64),
            ),
            ("ok".to_string(), JsonValue::Int(ok_rows as i64)),
            (
                "max_abs_error".to_string(),
                if max_err.is_nan() {
                    JsonValue::Null
                } else {
                    JsonValue::Number(max_err)
                },
            ),
        ];
        write_artifact(&config.output, "report.json", &flat_json(&entries))?;
    }
    for row in &table.rows {
        match (&row.error, row.willmore) {
            (None, Some(w)) => println!("{} = {}: W = {}", param, row.value, fmt17(w)),
            (Some(e), _) => println!("{} = {}: error: {e}", param, row.value),
            _ => {}
        }
    }
    Ok(())
}

fn run_minimize(config: &RunConfig) -> Result<(), CliError> {
    let curve_mode = match config.mode.as_deref() {
        Some("curve-h2") => true,
        Some("torus") => false,
        _ => {
            // Infer: curve files and the circle family default to curves.
            let shape = config.shape.as_ref().unwrap();
            match (&shape.file, shape.family) {
                (Some(path), _) => matches!(
                    grid::read_shape_file(path)?,
                    StoredShape::Curve(_)
                ),
                (None, Some(Family::CircleH2xS1)) => true,
                _ => false,
            }
        }
    };

    if curve_mode {
        let (c, init) = resolve_curve(config)?;
        let disk = MetricChart::hyperbolic_disk(c)?;
        let mut opts = OptimOptions::curve_defaults();
        opts.resolution = (config.resolution.0.max(64), 1);
        if let Some(n) = config.max_iters {
            opts.max_iters = n;
        }
        if let Some(m) = config.m_max {
            opts.m_max = m;
        }
        let trace = optim::minimize_bending(&disk, &init, &opts)?;
        let radius = hyperbolic_radius_from_diameter(trace.final_curve().unwrap(), c);
        write_trace_outputs(config, &trace)?;
        if config.formats.contains(&Format::Json) {
            let entries = vec![
                ("mode".to_string(), JsonValue::Text("curve-h2".into())),
                (
                    "initial_energy".to_string(),
                    JsonValue::Number(trace.iterates[0].energy),
                ),
                (
                    "final_energy".to_string(),
                    JsonValue::Number(trace.final_energy),
                ),
                (
                    "iterations".to_string(),
                    JsonValue::Int((trace.iterates.len() - 1) as i64),
                ),
                ("converged".to_string(), JsonValue::Bool(trace.converged)),
                (
                    "criterion".to_string(),
                    JsonValue::Text(trace.criterion.clone()),
                ),
                ("hyperbolic_radius".to_string(), JsonValue::Number(radius)),
            ];
            write_artifact(&config.output, "report.json", &flat_json(&entries))?;
        }
        if let Some(curve) = trace.final_curve() {
            let mut buf = Vec::new();
            grid::write_curve(curve, &mut buf).map_err(CliError::from)?;
            write_artifact(
                &config.output,
                "final_shape.txt",
                &String::from_utf8_lossy(&buf),
            )?;
        }
        println!(
            "bending descent: {} -> {} in {} iterations (converged: {})",
            fmt17(trace.iterates[0].energy),
            fmt17(trace.final_energy),
            trace.iterates.len() - 1,
            trace.converged
        );
    } else {
        let (chart, init, _family, _params) = resolve_torus(config)?;
        let mut opts = OptimOptions::torus_defaults();
        opts.resolution = config.resolution;
        if let Some(n) = config.max_iters {
            opts.max_iters = n;
        }
        if let Some(m) = config.m_max {
            opts.m_max = m;
        }
        let trace = optim::minimize_willmore(&chart, &init, &opts)?;
        write_trace_outputs(config, &trace)?;
        if config.formats.contains(&Format::Json) {
            let entries = vec![
                ("mode".to_string(), JsonValue::Text("torus".into())),
                (
                    "initial_energy".to_string(),
                    JsonValue::Number(trace.iterates[0].energy),
                ),
                (
                    "final_energy".to_string(),
                    JsonValue::Number(trace.final_energy),
                ),
                (
                    "iterations".to_string(),
                    JsonValue::Int((trace.iterates.len() - 1) as i64),
                ),
                ("converged".to_string(), JsonValue::Bool(trace.converged)),
                (
                    "criterion".to_string(),
                    JsonValue::Text(trace.criterion.clone()),
                ),
            ];
            write_artifact(&config.output, "report.json", &flat_json(&entries))?;
        }
        if let Some(torus) = trace.final_torus() {
            let mut buf = Vec::new();
            grid::write_torus(torus, &mut buf).map_err(CliError::from)?;
            write_artifact(
                &config.output,
                "final_shape.txt",
                &String::from_utf8_lossy(&buf),
            )?;
        }
        println!(
            "willmore descent: {} -> {} in {} iterations (converged: {})",
            fmt17(trace.iterates[0].energy),
            fmt17(trace.final_energy),
            trace.iterates.len() - 1,
            trace.converged
        );
    }
    Ok(())
}

fn write_trace_outputs(
    config: &RunConfig,
    trace: &optim::OptimizationTrace,
) -> Result<(), CliError> {
    if config.formats.contains(&Format::Csv) {
        write_artifact(&config.output, "trace.csv", &trace.to_csv())?;
    }
    if config.formats.contains(&Format::Svg) {
        let points: Vec<(f64, f64)> = trace
            .iterates
            .iter()
            .enumerate()
            .map(|(i, rec)| (i as f64, rec.energy))
            .collect();
        let plot = svg::line_plot("energy vs iteration", "iteration", "energy", &points);
        write_artifact(&config.output, "trace.svg", &plot)?;
    }
    Ok(())
}

fn run_residual(config: &RunConfig) -> Result<(), CliError> {
    let chart = config.chart()?;
    if chart.dim() != 3 {
        return Err(CliError::Validation(
            "residual requires ambient dimension 3".into(),
        ));
    }
    let (chart, imm, _family, _params) = resolve_torus(config)?;
    let res = el_residual(&imm, &chart)?;
    if config.formats.contains(&Format::Csv) {
        write_artifact(&config.output, "residual.csv", &res.to_csv())?;
    }
    if config.formats.contains(&Format::Json) {
        let entries = vec![
            ("max_abs".to_string(), JsonValue::Number(res.max_abs)),
            (
                "term_sum_defect".to_string(),
                JsonValue::Number(res.term_sum_defect()),
            ),
            (
                "resolution".to_string(),
                JsonValue::Text(format!("{}x{}", res.nu, res.nv)),
            ),
        ];
        write_artifact(&config.output, "report.json", &flat_json(&entries))?;
    }
    println!("residual max |EL| = {}", fmt17(res.max_abs));
    Ok(())
}

fn run_verify(config: &RunConfig) -> Result<(), CliError> {
    if config.shape.is_some() {
        return verify_shape(config);
    }
    let suite = crate::verify::run_suite(config.resolution.0);
    suite.print();
    if config.formats.contains(&Format::Csv) {
        write_artifact(&config.output, "verify.csv", &suite.to_csv())?;
    }
    if config.formats.contains(&Format::Json) {
        let entries = vec![
            (
                "checks".to_string(),
                JsonValue::Int(suite.rows.len() as i64),
            ),
            (
                "passed".to_string(),
                JsonValue::Int(suite.count(crate::verify::Status::Pass) as i64),
            ),
            (
                "failed".to_string(),
                JsonValue::Int(suite.count(crate::verify::Status::Fail) as i64),
            ),
            (
                "inconclusive".to_string(),
                JsonValue::Int(suite.count(crate::verify::Status::Inconclusive) as i64),
            ),
            ("all_pass".to_string(), JsonValue::Bool(suite.all_pass())),
        ];
        write_artifact(&config.output, "report.json", &flat_json(&entries))?;
    }
    if suite.all_pass() {
        Ok(())
    } else {
        Err(CliError::VerificationFailed(format!(
            "{} of {} checks failed",
            suite.count(crate::verify::Status::Fail)
                + suite.count(crate::verify::Status::Inconclusive),
            suite.rows.len()
        )))
    }
}

fn verify_shape(config: &RunConfig) -> Result<(), CliError> {
    let (chart, imm, family, params) = resolve_torus(config)?;
    let report = energy::willmore(&imm, &chart)?;
    let geom = analyze(&imm, &chart, AnalysisLevel::Extrinsic)?;
    let class = classify(&geom.data);
    let el_max = if chart.dim() == 3 && imm.resolution().0 >= 32 && imm.resolution().1 >= 32 {
        Some(el_residual(&imm, &chart)?.max_abs)
    } else {
        None
    };
    let verdict = match (class, el_max) {
        (SurfaceClass::TotallyGeodesic, _) => "totally-geodesic willmore".to_string(),
        (SurfaceClass::TotallyUmbilic, _) => "totally-umbilic willmore".to_string(),
        (SurfaceClass::Generic, Some(el)) if el < 1e-5 => "willmore-candidate".to_string(),
        (SurfaceClass::Generic, _) => "not-willmore".to_string(),
    };
    if config.formats.contains(&Format::Json) {
        let mut entries = vec![
            (
                "family".to_string(),
                match family {
                    Some(f) => JsonValue::Text(f.name().to_string()),
                    None => JsonValue::Text("file".to_string()),
                },
            ),
            ("params".to_string(), JsonValue::Text(params.to_string())),
            ("willmore".to_string(), JsonValue::Number(report.willmore)),
            (
                "max_rho_sq".to_string(),
                JsonValue::Number(report.max_rho_sq),
            ),
            ("max_s".to_string(), JsonValue::Number(report.max_s)),
        ];
        entries.push((
            "el_max_abs".to_string(),
            match el_max {
                Some(el) => JsonValue::Number(el),
                None => JsonValue::Null,
            },
        ));
        entries.push((
            "gauss_residual_max".to_string(),
            JsonValue::Number(report.gauss_residual),
        ));
        entries.push(("verdict".to_string(), JsonValue::Text(verdict.clone())));
        write_artifact(&config.output, "report.json", &flat_json(&entries))?;
    }
    println!(
        "verdict: {verdict} (W = {}, max rho^2 = {})",
        fmt17(report.willmore),
        fmt17(report.max_rho_sq)
    );
    Ok(())
}
