//! Catalog of ambient Riemannian manifolds as coordinate charts.
//!
//! Every chart ships analytic metric components and analytic first
//! derivatives. Christoffel symbols are assembled from those; the curvature
//! tensor needs second derivatives of the metric, which are obtained by
//! central differences of the analytic Christoffel symbols (step `1e-5`
//! relative to the coordinate scale).
//!
//! Chart choices:
//!
//! * `e3` — Euclidean 3-space, identity metric.
//! * `s2xs1` — unit 2-sphere via stereographic projection from the south
//!   pole (factor metric `4/(1+r^2)^2`), times a unit-radius circle with
//!   angle coordinate of period `2*pi`.
//! * `r2xs1` — Euclidean plane times the unit circle, identity metric.
//! * `h2xs1` — hyperbolic plane of curvature `-c` as the Poincare disk with
//!   factor metric `(4/c)/(1-r^2)^2`, times the unit circle.
//! * `berger` — the 3-sphere in Hopf coordinates `(eta, xi1, xi2)` with the
//!   round metric `d eta^2 + cos^2(eta) d xi1^2 + sin^2(eta) d xi2^2`
//!   deformed along the Hopf fiber: `g_t = g_round + (t^2-1) s (x) s` where
//!   `s = cos^2(eta) d xi1 + sin^2(eta) d xi2` is the unit-fiber dual form.
//!   Fiber norms scale by `t`, horizontal norms are unchanged.
//! * `r4-conformal` — R^4 with two conformally deformed plane factors
//!   `e^{a r^2}/(1+r^2)^2 (dx^2+dy^2)`, parameters `0 < lambda, mu <= 3-2*sqrt(2)`.
//! * `sol3` — the solvable 3-geometry `e^{2z} dx^2 + e^{-2z} dy^2 + dz^2`.

use crate::error::{Error, Result};
use crate::tensor::*;
use std::collections::BTreeMap;
use std::fmt;

/// Upper bound for the conformal parameters of `r4-conformal`; beyond it the
/// geodesic radii of the associated torus family are no longer real.
pub const R4_PARAM_MAX: f64 = 0.171_572_875_253_809_9; // 3 - 2*sqrt(2)

/// Named real parameters for catalog lookups and shape families.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Params(pub BTreeMap<String, f64>);

impl Params {
    pub fn new() -> Self {
        Self(BTreeMap::new())
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.0.insert(key.to_string(), value);
        self
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.0.get(key).copied()
    }

    pub fn get_or(&self, key: &str, default: f64) -> f64 {
        self.get(key).unwrap_or(default)
    }
}

impl fmt::Display for Params {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, v) in &self.0 {
            if !first {
                write!(f, ",")?;
            }
            write!(f, "{k}={v}")?;
            first = false;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
enum ChartKind {
    Euclidean3,
    SphereCircle,
    PlaneCircle,
    HyperbolicCircle { c: f64 },
    Berger { t: f64 },
    R4Conformal { lambda: f64, mu: f64 },
    Sol3,
    /// 2-dimensional factor charts, used for closed curves.
    EuclideanPlane,
    HyperbolicDisk { c: f64 },
}

/// A coordinate chart of an ambient Riemannian manifold with analytic
/// metric components, evaluable together with curvature data at any point
/// of its domain.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricChart {
    kind: ChartKind,
    /// Constant conformal scale applied to the metric (`lambda^2`); energies
    /// built from the chart must not depend on it.
    scale: f64,
    name: String,
    params: Params,
}

/// Christoffel symbols and the fully lowered curvature tensor at a point.
pub struct CurvatureData {
    /// `christoffel[a][b][c]` = Gamma^a_{bc}, symmetric in `b, c`.
    pub christoffel: Ten3,
    /// `riemann[a][b][c][d]` with all indices lowered; sign convention such
    /// that the unit round 2-sphere has sectional curvature `+1`.
    pub riemann: Ten4,
}

/// Looks up a catalog manifold by name.
///
/// Names: `e3`, `s2xs1`, `r2xs1`, `h2xs1`, `berger`, `r4-conformal`, `sol3`.
/// Parameters: `c > 0` for `h2xs1`, `t > 0` for `berger`,
/// `0 < lambda, mu <= 3 - 2*sqrt(2)` for `r4-conformal`.
pub fn catalog_lookup(name: &str, params: &Params) -> Result<MetricChart> {
    let kind = match name {
        "e3" => ChartKind::Euclidean3,
        "s2xs1" => ChartKind::SphereCircle,
        "r2xs1" => ChartKind::PlaneCircle,
        "h2xs1" => {
            let c = params.get_or("c", 1.0);
            if c <= 0.0 {
                return Err(Error::ParamRange(format!(
                    "h2xs1 needs curvature parameter c > 0, got c = {c}"
                )));
            }
            ChartKind::HyperbolicCircle { c }
        }
        "berger" => {
            let t = params.get_or("t", 1.0);
            if t <= 0.0 {
                return Err(Error::ParamRange(format!(
                    "berger needs fiber scale t > 0, got t = {t}"
                )));
            }
            ChartKind::Berger { t }
        }
        "r4-conformal" => {
            let lambda = params.get_or("lambda", 0.1);
            let mu = params.get_or("mu", lambda);
            for (label, v) in [("lambda", lambda), ("mu", mu)] {
                if v <= 0.0 || v > R4_PARAM_MAX {
                    return Err(Error::ParamRange(format!(
                        "{label} must satisfy 0 < {label} <= 3 - 2*sqrt(2) (~= {R4_PARAM_MAX:.6}), got {v}"
                    )));
                }
            }
            ChartKind::R4Conformal { lambda, mu }
        }
        "sol3" => ChartKind::Sol3,
        other => return Err(Error::UnknownManifold(other.to_string())),
    };
    Ok(MetricChart {
        kind,
        scale: 1.0,
        name: name.to_string(),
        params: params.clone(),
    })
}

impl MetricChart {
    pub fn euclidean3() -> Self {
        catalog_lookup("e3", &Params::new()).unwrap()
    }

    /// Euclidean plane chart (dimension 2), for curve tests.
    pub fn euclidean_plane() -> Self {
        MetricChart {
            kind: ChartKind::EuclideanPlane,
            scale: 1.0,
            name: "e2".into(),
            params: Params::new(),
        }
    }

    /// Poincare disk of constant curvature `-c` (dimension 2).
    pub fn hyperbolic_disk(c: f64) -> Result<Self> {
        if c <= 0.0 {
            return Err(Error::ParamRange(format!(
                "hyperbolic disk needs c > 0, got c = {c}"
            )));
        }
        Ok(MetricChart {
            kind: ChartKind::HyperbolicDisk { c },
            scale: 1.0,
            name: "h2".into(),
            params: Params::new().with("c", c),
        })
    }

    /// The same chart with the metric multiplied by the constant `factor`
    /// (a conformal rescaling; `factor` plays the role of `lambda^2`).
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if factor <= 0.0 || !factor.is_finite() {
            return Err(Error::ParamRange(format!(
                "conformal scale factor must be positive and finite, got {factor}"
            )));
        }
        let mut out = self.clone();
        out.scale *= factor;
        Ok(out)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn dim(&self) -> usize {
        match self.kind {
            ChartKind::EuclideanPlane | ChartKind::HyperbolicDisk { .. } => 2,
            ChartKind::R4Conformal { .. } => 4,
            _ => 3,
        }
    }

    pub fn coordinate_names(&self) -> &'static [&'static str] {
        match self.kind {
            ChartKind::Euclidean3 => &["x", "y", "z"],
            ChartKind::SphereCircle => &["p1", "p2", "phi"],
            ChartKind::PlaneCircle => &["x", "y", "phi"],
            ChartKind::HyperbolicCircle { .. } => &["rho1", "rho2", "phi"],
            ChartKind::Berger { .. } => &["eta", "xi1", "xi2"],
            ChartKind::R4Conformal { .. } => &["x1", "x2", "x3", "x4"],
            ChartKind::Sol3 => &["x", "y", "z"],
            ChartKind::EuclideanPlane => &["x", "y"],
            ChartKind::HyperbolicDisk { .. } => &["rho1", "rho2"],
        }
    }

    /// Indices of coordinates that are angles of period `2*pi`. Immersion
    /// channels along these coordinates may wind; the metric components
    /// never depend on them.
    pub fn angular_coords(&self) -> &'static [usize] {
        match self.kind {
            ChartKind::SphereCircle
            | ChartKind::PlaneCircle
            | ChartKind::HyperbolicCircle { .. } => &[2],
            ChartKind::Berger { .. } => &[1, 2],
            _ => &[],
        }
    }

    /// Minimum distance to the chart's singular set required of valid
    /// evaluation points.
    pub fn singular_margin(&self) -> f64 {
        match self.kind {
            ChartKind::HyperbolicCircle { .. } | ChartKind::HyperbolicDisk { .. } => 1e-3,
            ChartKind::Berger { .. } => 1e-3,
            _ => 0.0,
        }
    }

    /// Chart-domain predicate, margin included.
    pub fn contains(&self, p: &Vec4) -> bool {
        let m = self.singular_margin();
        match self.kind {
            ChartKind::HyperbolicCircle { .. } | ChartKind::HyperbolicDisk { .. } => {
                p[0].hypot(p[1]) < 1.0 - m
            }
            ChartKind::Berger { .. } => {
                p[0] > m && p[0] < std::f64::consts::FRAC_PI_2 - m
            }
            _ => p.iter().all(|x| x.is_finite()),
        }
    }

    fn check_domain(&self, p: &Vec4) -> Result<()> {
        if !self.contains(p) {
            return Err(Error::OutsideDomain(format!(
                "point [{} {} {} {}] is not a valid `{}` chart point (margin {})",
                p[0],
                p[1],
                p[2],
                p[3],
                self.name,
                self.singular_margin()
            )));
        }
        Ok(())
    }

    /// Metric components `g_ab` at `p`.
    pub fn metric(&self, p: &Vec4) -> Result<Mat4> {
        self.check_domain(p)?;
        Ok(self.metric_unchecked(p))
    }

    fn metric_unchecked(&self, p: &Vec4) -> Mat4 {
        let mut g = ZERO_MAT;
        match self.kind {
            ChartKind::Euclidean3 | ChartKind::PlaneCircle | ChartKind::Sol3 => {
                g[0][0] = 1.0;
                g[1][1] = 1.0;
                g[2][2] = 1.0;
                if let ChartKind::Sol3 = self.kind {
                    g[0][0] = (2.0 * p[2]).exp();
                    g[1][1] = (-2.0 * p[2]).exp();
                }
            }
            ChartKind::EuclideanPlane => {
                g[0][0] = 1.0;
                g[1][1] = 1.0;
            }
            ChartKind::SphereCircle => {
                let r2 = p[0] * p[0] + p[1] * p[1];
                let f = 4.0 / ((1.0 + r2) * (1.0 + r2));
                g[0][0] = f;
                g[1][1] = f;
                g[2][2] = 1.0;
            }
            ChartKind::HyperbolicCircle { c } => {
                let f = poincare_factor(p[0], p[1], c);
                g[0][0] = f;
                g[1][1] = f;
                g[2][2] = 1.0;
            }
            ChartKind::HyperbolicDisk { c } => {
                let f = poincare_factor(p[0], p[1], c);
                g[0][0] = f;
                g[1][1] = f;
            }
            ChartKind::Berger { t } => {
                let (s, c) = p[0].sin_cos();
                let (s2, c2) = (s * s, c * c);
                let ex = t * t - 1.0;
                g[0][0] = 1.0;
                g[1][1] = c2 + ex * c2 * c2;
                g[2][2] = s2 + ex * s2 * s2;
                g[1][2] = ex * c2 * s2;
                g[2][1] = g[1][2];
            }
            ChartKind::R4Conformal { lambda, mu } => {
                let f1 = conformal_plane_factor(p[0], p[1], lambda);
                let f2 = conformal_plane_factor(p[2], p[3], mu);
                g[0][0] = f1;
                g[1][1] = f1;
                g[2][2] = f2;
                g[3][3] = f2;
            }
        }
        if self.scale != 1.0 {
            let n = self.dim();
            for row in g.iter_mut().take(n) {
                for entry in row.iter_mut().take(n) {
                    *entry *= self.scale;
                }
            }
        }
        g
    }

    /// Analytic first derivatives `d[c][a][b]` = Del_c g_ab at `p`.
    pub fn metric_derivs(&self, p: &Vec4) -> Result<Ten3> {
        self.check_domain(p)?;
        Ok(self.metric_derivs_unchecked(p))
    }

    fn metric_derivs_unchecked(&self, p: &Vec4) -> Ten3 {
        let mut d = ZERO_TEN3;
        match self.kind {
            ChartKind::Euclidean3 | ChartKind::PlaneCircle | ChartKind::EuclideanPlane => {}
            ChartKind::Sol3 => {
                d[2][0][0] = 2.0 * (2.0 * p[2]).exp();
                d[2][1][1] = -2.0 * (-2.0 * p[2]).exp();
            }
            ChartKind::SphereCircle => {
                let r2 = p[0] * p[0] + p[1] * p[1];
                let w = 1.0 + r2;
                for k in 0..2 {
                    let df = -16.0 * p[k] / (w * w * w);
                    d[k][0][0] = df;
                    d[k][1][1] = df;
                }
            }
            ChartKind::HyperbolicCircle { c } | ChartKind::HyperbolicDisk { c } => {
                let r2 = p[0] * p[0] + p[1] * p[1];
                let w = 1.0 - r2;
                for k in 0..2 {
                    let df = 16.0 * p[k] / (c * w * w * w);
                    d[k][0][0] = df;
                    d[k][1][1] = df;
                }
            }
            ChartKind::Berger { t } => {
                let (s, c) = p[0].sin_cos();
                let (s2, c2) = (s * s, c * c);
                let ex = t * t - 1.0;
                d[0][1][1] = -2.0 * c * s * (1.0 + 2.0 * ex * c2);
                d[0][2][2] = 2.0 * c * s * (1.0 + 2.0 * ex * s2);
                d[0][1][2] = 2.0 * ex * c * s * (c2 - s2);
                d[0][2][1] = d[0][1][2];
            }
            ChartKind::R4Conformal { lambda, mu } => {
                for (base, a) in [(0usize, lambda), (2usize, mu)] {
                    let (x, y) = (p[base], p[base + 1]);
                    let f = conformal_plane_factor(x, y, a);
                    let w = 1.0 + x * x + y * y;
                    for k in 0..2 {
                        let xk = if k == 0 { x } else { y };
                        let df = f * (2.0 * a * xk - 4.0 * xk / w);
                        d[base + k][base][base] = df;
                        d[base + k][base + 1][base + 1] = df;
                    }
                }
            }
        }
        if self.scale != 1.0 {
            let n = self.dim();
            for slab in d.iter_mut().take(n) {
                for row in slab.iter_mut().take(n) {
                    for entry in row.iter_mut().take(n) {
                        *entry *= self.scale;
                    }
                }
            }
        }
        d
    }

    /// Christoffel symbols of the second kind,
    /// `Gamma^a_{bc} = 1/2 g^{ad} (Del_b g_dc + Del_c g_db - Del_d g_bc)`.
    pub fn christoffels(&self, p: &Vec4) -> Result<Ten3> {
        self.check_domain(p)?;
        self.christoffels_unchecked(p)
    }

    fn christoffels_unchecked(&self, p: &Vec4) -> Result<Ten3> {
        let n = self.dim();
        let g = self.metric_unchecked(p);
        let d = self.metric_derivs_unchecked(p);
        let ginv = invert(&g, n).ok_or_else(|| {
            Error::Degenerate(format!("metric not invertible at chart point of `{}`", self.name))
        })?;
        let mut gamma = ZERO_TEN3;
        for a in 0..n {
            for b in 0..n {
                for c in b..n {
                    let mut acc = 0.0;
                    for e in 0..n {
                        acc += ginv[a][e] * (d[b][e][c] + d[c][e][b] - d[e][b][c]);
                    }
                    gamma[a][b][c] = 0.5 * acc;
                    gamma[a][c][b] = gamma[a][b][c];
                }
            }
        }
        Ok(gamma)
    }

    /// Fully lowered curvature tensor `R_{abcd}` at `p`.
    ///
    /// Assembled from `R^a_{bcd} = Del_c Gamma^a_{db} - Del_d Gamma^a_{cb}
    /// + Gamma^a_{ce} Gamma^e_{db} - Gamma^a_{de} Gamma^e_{cb}`, with the
    /// derivative computed by central differences of the analytic
    /// Christoffel symbols. The unit round 2-sphere factor then carries
    /// sectional curvature `+1`.
    pub fn riemann(&self, p: &Vec4) -> Result<Ten4> {
        self.check_domain(p)?;
        let n = self.dim();
        let g = self.metric_unchecked(p);
        let gamma = self.christoffels_unchecked(p)?;

        // d_gamma[c][a][d][b] = Del_c Gamma^a_{db}
        let mut d_gamma = ZERO_TEN4;
        for c in 0..n {
            let h = 1e-5 * p[c].abs().max(1.0);
            let mut pp = *p;
            pp[c] += h;
            let plus = self.christoffels_unchecked(&pp)?;
            pp[c] = p[c] - h;
            let minus = self.christoffels_unchecked(&pp)?;
            for a in 0..n {
                for dd in 0..n {
                    for b in 0..n {
                        d_gamma[c][a][dd][b] = (plus[a][dd][b] - minus[a][dd][b]) / (2.0 * h);
                    }
                }
            }
        }

        let mut lowered = ZERO_TEN4;
        for b in 0..n {
            for c in 0..n {
                for dd in 0..n {
                    let mut up = ZERO_VEC;
                    for a in 0..n {
                        let mut acc = d_gamma[c][a][dd][b] - d_gamma[dd][a][c][b];
                        for e in 0..n {
                            acc += gamma[a][c][e] * gamma[e][dd][b]
                                - gamma[a][dd][e] * gamma[e][c][b];
                        }
                        up[a] = acc;
                    }
                    for a in 0..n {
                        let mut acc = 0.0;
                        for e in 0..n {
                            acc += g[a][e] * up[e];
                        }
                        lowered[a][b][c][dd] = acc;
                    }
                }
            }
        }
        Ok(lowered)
    }

    /// Christoffel symbols and curvature tensor bundled together.
    pub fn curvature(&self, p: &Vec4) -> Result<CurvatureData> {
        Ok(CurvatureData {
            christoffel: self.christoffels(p)?,
            riemann: self.riemann(p)?,
        })
    }

    /// Sectional curvature of the plane spanned by `u`, `v` at `p`:
    /// `R(u,v,u,v) / (|u|^2 |v|^2 - <u,v>^2)`.
    pub fn sectional(&self, p: &Vec4, u: &Vec4, v: &Vec4) -> Result<f64> {
        let n = self.dim();
        let g = self.metric(p)?;
        let gram = metric_dot(&g, u, u, n) * metric_dot(&g, v, v, n)
            - metric_dot(&g, u, v, n).powi(2);
        let scale_ref = metric_dot(&g, u, u, n) * metric_dot(&g, v, v, n);
        if gram <= 1e-12 * scale_ref.max(1e-300) {
            return Err(Error::Degenerate(
                "sectional curvature of a degenerate tangent plane".into(),
            ));
        }
        let r = self.riemann(p)?;
        Ok(riemann_plane(&r, u, v, n) / gram)
    }

    /// Inner product of tangent vectors at `p`.
    pub fn inner(&self, p: &Vec4, u: &Vec4, v: &Vec4) -> Result<f64> {
        let g = self.metric(p)?;
        Ok(metric_dot(&g, u, v, self.dim()))
    }
}

/// `R(u,v,u,v)` contraction of a lowered curvature tensor.
pub fn riemann_plane(r: &Ten4, u: &Vec4, v: &Vec4, n: usize) -> f64 {
    let mut acc = 0.0;
    for a in 0..n {
        if u[a] == 0.0 {
            continue;
        }
        for b in 0..n {
            if v[b] == 0.0 {
                continue;
            }
            for c in 0..n {
                for d in 0..n {
                    acc += r[a][b][c][d] * u[a] * v[b] * u[c] * v[d];
                }
            }
        }
    }
    acc
}

fn poincare_factor(x: f64, y: f64, c: f64) -> f64 {
    let w = 1.0 - (x * x + y * y);
    4.0 / (c * w * w)
}

fn conformal_plane_factor(x: f64, y: f64, a: f64) -> f64 {
    let r2 = x * x + y * y;
    (a * r2).exp() / ((1.0 + r2) * (1.0 + r2))
}

/// Draws a pseudo-random point from a comfortable interior region of the
/// chart domain. Used by the property suites.
pub fn sample_domain_point<R: rand::Rng>(chart: &MetricChart, rng: &mut R) -> Vec4 {
    let mut p = ZERO_VEC;
    match chart.kind {
        ChartKind::Euclidean3 | ChartKind::PlaneCircle | ChartKind::Sol3 => {
            for x in p.iter_mut().take(3) {
                *x = rng.gen_range(-1.5..1.5);
            }
        }
        ChartKind::EuclideanPlane => {
            p[0] = rng.gen_range(-1.5..1.5);
            p[1] = rng.gen_range(-1.5..1.5);
        }
        ChartKind::SphereCircle => {
            p[0] = rng.gen_range(-2.0..2.0);
            p[1] = rng.gen_range(-2.0..2.0);
            p[2] = rng.gen_range(-3.0..3.0);
        }
        ChartKind::HyperbolicCircle { .. } => {
            let r = rng.gen_range(0.0..0.85);
            let th = rng.gen_range(0.0..std::f64::consts::TAU);
            p[0] = r * th.cos();
            p[1] = r * th.sin();
            p[2] = rng.gen_range(-3.0..3.0);
        }
        ChartKind::HyperbolicDisk { .. } => {
            let r = rng.gen_range(0.0..0.85);
            let th = rng.gen_range(0.0..std::f64::consts::TAU);
            p[0] = r * th.cos();
            p[1] = r * th.sin();
        }
        ChartKind::Berger { .. } => {
            p[0] = rng.gen_range(0.1..std::f64::consts::FRAC_PI_2 - 0.1);
            p[1] = rng.gen_range(0.0..std::f64::consts::TAU);
            p[2] = rng.gen_range(0.0..std::f64::consts::TAU);
        }
        ChartKind::R4Conformal { .. } => {
            for x in p.iter_mut().take(4) {
                *x = rng.gen_range(-2.0..2.0);
            }
        }
    }
    p
}
