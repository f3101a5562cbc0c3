//! Energy minimization over truncated Fourier coefficients of curves and
//! tori, plus one-parameter family scans.
//!
//! The descent is plain gradient descent with a backtracking (Armijo) line
//! search; the trial step length is seeded from the previous iterate pair
//! when that quotient is usable. Gradients are central differences per
//! coefficient (step `1e-6`), evaluated in parallel.

use crate::energy::{curve_curvature_sq, willmore, willmore_value, closed_form};
use crate::error::{Error, Result};
use crate::grid::{
    curve_jet, curve_quadrature, make_family, ClosedCurve, Family, TorusImmersion,
};
use crate::metric::{MetricChart, Params};
use rayon::prelude::*;
use rustfft::num_complex::Complex;
use std::f64::consts::TAU;

// ---------------------------------------------------------------------------
// Fourier-coefficient shape parametrizations
// ---------------------------------------------------------------------------

/// Truncated Fourier description of a closed curve in a 2-manifold chart.
/// Per channel: `a_0`, then `(a_k, b_k)` for `k = 1..m_max`.
#[derive(Debug, Clone)]
pub struct CurveShapeParams {
    pub m_max: usize,
    pub period: f64,
    pub resolution: usize,
    pub coeffs: Vec<f64>,
}

impl CurveShapeParams {
    pub fn channel_len(m_max: usize) -> usize {
        2 * m_max + 1
    }

    /// Projects a sampled curve onto the truncated Fourier basis.
    pub fn from_curve(curve: &ClosedCurve, m_max: usize, resolution: usize) -> Result<Self> {
        if m_max < 1 || 2 * m_max + 2 > resolution {
            return Err(Error::ParamRange(format!(
                "cutoff m_max = {m_max} does not fit the resolution {resolution}"
            )));
        }
        let sampled = curve.resample(resolution)?;
        let n = sampled.resolution();
        let mut coeffs = Vec::with_capacity(2 * Self::channel_len(m_max));
        for ch in 0..2 {
            let data = sampled.channel(ch);
            let spec = forward_fft(&data);
            coeffs.push(spec[0].re / n as f64);
            for k in 1..=m_max {
                coeffs.push(2.0 * spec[k].re / n as f64);
                coeffs.push(-2.0 * spec[k].im / n as f64);
            }
        }
        Ok(Self {
            m_max,
            period: curve.period(),
            resolution,
            coeffs,
        })
    }

    /// Evaluates the trigonometric series on the stored grid resolution.
    pub fn reconstruct(&self) -> Result<ClosedCurve> {
        self.reconstruct_at(&self.coeffs)
    }

    pub fn reconstruct_at(&self, coeffs: &[f64]) -> Result<ClosedCurve> {
        let n = self.resolution;
        let len = Self::channel_len(self.m_max);
        let mut points = vec![[0.0; 2]; n];
        for ch in 0..2 {
            let c = &coeffs[ch * len..(ch + 1) * len];
            for (i, q) in points.iter_mut().enumerate() {
                let th = TAU * i as f64 / n as f64;
                let mut acc = c[0];
                for k in 1..=self.m_max {
                    let (s, co) = (k as f64 * th).sin_cos();
                    acc += c[2 * k - 1] * co + c[2 * k] * s;
                }
                q[ch] = acc;
            }
        }
        ClosedCurve::new(self.period, points)
    }
}

/// Truncated Fourier description of a torus immersion. Per channel:
/// the constant, then `(a, b)` for every mode `(k, l)` of the half
/// lattice `k = 0, l = 1..m` and `k = 1..m, l = -m..m`.
#[derive(Debug, Clone)]
pub struct TorusShapeParams {
    pub m_max: usize,
    pub dim: usize,
    pub periods: (f64, f64),
    pub resolution: (usize, usize),
    pub winding: [[i32; 2]; crate::tensor::MAX_DIM],
    pub coeffs: Vec<f64>,
}

fn half_lattice(m_max: usize) -> Vec<(i64, i64)> {
    let m = m_max as i64;
    let mut modes = Vec::new();
    for l in 1..=m {
        modes.push((0, l));
    }
    for k in 1..=m {
        for l in -m..=m {
            modes.push((k, l));
        }
    }
    modes
}

impl TorusShapeParams {
    pub fn channel_len(m_max: usize) -> usize {
        1 + 2 * half_lattice(m_max).len()
    }

    /// Projects an immersion grid onto the truncated 2-dimensional Fourier
    /// basis (after removing the winding ramps of angle channels).
    pub fn from_torus(imm: &TorusImmersion, m_max: usize, resolution: (usize, usize)) -> Result<Self> {
        let (nu, nv) = imm.resolution();
        if m_max < 1 || 2 * m_max + 2 > nu.min(nv) {
            return Err(Error::ParamRange(format!(
                "cutoff m_max = {m_max} does not fit the {nu}x{nv} grid"
            )));
        }
        let (pu, pv) = imm.periods();
        let modes = half_lattice(m_max);
        let mut coeffs = Vec::with_capacity(imm.dim() * Self::channel_len(m_max));
        for ch in 0..imm.dim() {
            let mut data = imm.channel(ch);
            let [wu, wv] = imm.winding()[ch];
            for iu in 0..nu {
                for iv in 0..nv {
                    let u = pu * iu as f64 / nu as f64;
                    let v = pv * iv as f64 / nv as f64;
                    data[iu * nv + iv] -=
                        TAU * (wu as f64) * u / pu + TAU * (wv as f64) * v / pv;
                }
            }
            let spec = forward_fft_2d(&data, nu, nv);
            let norm = (nu * nv) as f64;
            let at = |k: i64, l: i64| -> Complex<f64> {
                let ku = k.rem_euclid(nu as i64) as usize;
                let lv = l.rem_euclid(nv as i64) as usize;
                spec[ku * nv + lv]
            };
            coeffs.push(at(0, 0).re / norm);
            for &(k, l) in &modes {
                let z = at(k, l);
                coeffs.push(2.0 * z.re / norm);
                coeffs.push(-2.0 * z.im / norm);
            }
        }
        Ok(Self {
            m_max,
            dim: imm.dim(),
            periods: imm.periods(),
            resolution,
            winding: *imm.winding(),
            coeffs,
        })
    }

    pub fn reconstruct(&self) -> Result<TorusImmersion> {
        self.reconstruct_at(&self.coeffs)
    }

    pub fn reconstruct_at(&self, coeffs: &[f64]) -> Result<TorusImmersion> {
        let (nu, nv) = self.resolution;
        let modes = half_lattice(self.m_max);
        let len = Self::channel_len(self.m_max);
        let mut points = vec![crate::tensor::ZERO_VEC; nu * nv];

        // Synthesize each channel by filling the complex spectrum and
        // running one inverse transform; much cheaper than a mode loop.
        let mut planner = rustfft::FftPlanner::new();
        let inv_u = planner.plan_fft_inverse(nu);
        let inv_v = planner.plan_fft_inverse(nv);
        let mut spec = vec![Complex::new(0.0, 0.0); nu * nv];
        let mut col = vec![Complex::new(0.0, 0.0); nu];
        for ch in 0..self.dim {
            let c = &coeffs[ch * len..(ch + 1) * len];
            spec.iter_mut().for_each(|z| *z = Complex::new(0.0, 0.0));
            spec[0] = Complex::new(c[0], 0.0);
            for (mi, &(k, l)) in modes.iter().enumerate() {
                let half = Complex::new(0.5 * c[1 + 2 * mi], -0.5 * c[2 + 2 * mi]);
                let ku = k.rem_euclid(nu as i64) as usize;
                let lv = l.rem_euclid(nv as i64) as usize;
                let ku_neg = (-k).rem_euclid(nu as i64) as usize;
                let lv_neg = (-l).rem_euclid(nv as i64) as usize;
                spec[ku * nv + lv] += half;
                spec[ku_neg * nv + lv_neg] += half.conj();
            }
            for iv in 0..nv {
                for iu in 0..nu {
                    col[iu] = spec[iu * nv + iv];
                }
                inv_u.process(&mut col);
                for iu in 0..nu {
                    spec[iu * nv + iv] = col[iu];
                }
            }
            for iu in 0..nu {
                inv_v.process(&mut spec[iu * nv..(iu + 1) * nv]);
            }
            let [wu, wv] = self.winding[ch];
            for iu in 0..nu {
                let ramp_u = TAU * (wu as f64) * (iu as f64 / nu as f64);
                for iv in 0..nv {
                    let ramp_v = TAU * (wv as f64) * (iv as f64 / nv as f64);
                    points[iu * nv + iv][ch] = spec[iu * nv + iv].re + ramp_u + ramp_v;
                }
            }
        }
        let mut out = TorusImmersion::new(nu, nv, self.periods, self.dim, points)?;
        for ch in 0..self.dim {
            out = out.with_winding(ch, self.winding[ch][0], self.winding[ch][1]);
        }
        Ok(out)
    }
}

fn forward_fft(data: &[f64]) -> Vec<Complex<f64>> {
    let mut buf: Vec<Complex<f64>> = data.iter().map(|&x| Complex::new(x, 0.0)).collect();
    let mut planner = rustfft::FftPlanner::new();
    planner.plan_fft_forward(data.len()).process(&mut buf);
    buf
}

fn forward_fft_2d(data: &[f64], nu: usize, nv: usize) -> Vec<Complex<f64>> {
    let mut grid: Vec<Complex<f64>> = data.iter().map(|&x| Complex::new(x, 0.0)).collect();
    let mut planner = rustfft::FftPlanner::new();
    let fft_v = planner.plan_fft_forward(nv);
    for iu in 0..nu {
        fft_v.process(&mut grid[iu * nv..(iu + 1) * nv]);
    }
    let fft_u = planner.plan_fft_forward(nu);
    let mut col = vec![Complex::new(0.0, 0.0); nu];
    for iv in 0..nv {
        for iu in 0..nu {
            col[iu] = grid[iu * nv + iv];
        }
        fft_u.process(&mut col);
        for iu in 0..nu {
            grid[iu * nv + iv] = col[iu];
        }
    }
    grid
}

// ---------------------------------------------------------------------------
// Descent machinery
// ---------------------------------------------------------------------------

/// Knobs of the coefficient descent.
#[derive(Debug, Clone)]
pub struct OptimOptions {
    pub max_iters: usize,
    pub grad_tol: f64,
    pub fd_step: f64,
    pub m_max: usize,
    /// Working grid: curve node count in `.0` (`.1` ignored), or the torus
    /// grid.
    pub resolution: (usize, usize),
}

impl OptimOptions {
    pub fn curve_defaults() -> Self {
        Self {
            max_iters: 5000,
            grad_tol: 1e-6,
            fd_step: 1e-6,
            m_max: 8,
            resolution: (256, 1),
        }
    }

    pub fn torus_defaults() -> Self {
        Self {
            max_iters: 500,
            grad_tol: 1e-6,
            fd_step: 1e-6,
            m_max: 6,
            resolution: (64, 64),
        }
    }
}

/// One accepted descent step.
#[derive(Debug, Clone, Copy)]
pub struct IterRecord {
    pub energy: f64,
    pub grad_norm: f64,
    pub step: f64,
}

/// The optimized shape.
#[derive(Debug, Clone)]
pub enum FinalShape {
    Curve(ClosedCurve),
    Torus(TorusImmersion),
}

/// Descent history plus the final shape and convergence verdict.
#[derive(Debug, Clone)]
pub struct OptimizationTrace {
    pub mode: &'static str,
    pub iterates: Vec<IterRecord>,
    pub final_energy: f64,
    pub converged: bool,
    pub criterion: String,
    pub final_shape: FinalShape,
}

impl OptimizationTrace {
    pub fn final_curve(&self) -> Option<&ClosedCurve> {
        match &self.final_shape {
            FinalShape::Curve(c) => Some(c),
            _ => None,
        }
    }

    pub fn final_torus(&self) -> Option<&TorusImmersion> {
        match &self.final_shape {
            FinalShape::Torus(t) => Some(t),
            _ => None,
        }
    }

    /// CSV export: `iter, energy, gradnorm, step`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iter,energy,gradnorm,step\n");
        for (i, rec) in self.iterates.iter().enumerate() {
            out.push_str(&format!(
                "{i},{:.16e},{:.16e},{:.16e}\n",
                rec.energy, rec.grad_norm, rec.step
            ));
        }
        out
    }
}

/// Central-difference gradient of `objective` over the coefficients.
/// Falls back to a one-sided difference when a probe leaves the feasible
/// set; errors only when both sides fail.
pub fn fd_gradient<F>(coeffs: &[f64], step: f64, objective: &F) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Option<f64> + Sync,
{
    let center = objective(coeffs);
    let entries: Vec<Result<f64>> = (0..coeffs.len())
        .into_par_iter()
        .map(|i| {
            let mut probe = coeffs.to_vec();
            probe[i] = coeffs[i] + step;
            let plus = objective(&probe);
            probe[i] = coeffs[i] - step;
            let minus = objective(&probe);
            match (plus, minus) {
                (Some(p), Some(m)) => Ok((p - m) / (2.0 * step)),
                (Some(p), None) => center
                    .map(|c| (p - c) / step)
                    .ok_or_else(|| Error::Optimization("infeasible center".into())),
                (None, Some(m)) => center
                    .map(|c| (c - m) / step)
                    .ok_or_else(|| Error::Optimization("infeasible center".into())),
                (None, None) => Err(Error::Optimization(format!(
                    "gradient probe {i} infeasible on both sides"
                ))),
            }
        })
        .collect();
    entries.into_iter().collect()
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

struct DescentOutcome {
    coeffs: Vec<f64>,
    iterates: Vec<IterRecord>,
    converged: bool,
    criterion: String,
}

fn descend<F>(init: Vec<f64>, opts: &OptimOptions, objective: F) -> Result<DescentOutcome>
where
    F: Fn(&[f64]) -> Option<f64> + Sync,
{
    let mut x = init;
    let mut fx = objective(&x).ok_or_else(|| {
        Error::Optimization("initial shape violates the feasibility constraints".into())
    })?;
    let mut iterates = vec![IterRecord {
        energy: fx,
        grad_norm: f64::NAN,
        step: 0.0,
    }];
    let mut prev_x: Option<Vec<f64>> = None;
    let mut prev_grad: Option<Vec<f64>> = None;
    let mut last_alpha: Option<f64> = None;
    let mut converged = false;
    let mut criterion = String::from("max-iterations");

    for _ in 0..opts.max_iters {
        let grad = fd_gradient(&x, opts.fd_step, &objective)?;
        let gnorm = norm2(&grad);
        iterates.last_mut().unwrap().grad_norm = gnorm;
        if gnorm < opts.grad_tol {
            converged = true;
            criterion = format!("gradient-norm < {:e}", opts.grad_tol);
            break;
        }

        // Trial step from the secant pair of the last two gradients,
        // clipped to a sane range; Armijo backtracking safeguards it.
        let warm = last_alpha.map(|a: f64| 2.0 * a);
        let mut alpha = match (&prev_x, &prev_grad) {
            (Some(px), Some(pg)) => {
                let ss: f64 = x.iter().zip(px).map(|(a, b)| (a - b) * (a - b)).sum();
                let sy: f64 = x
                    .iter()
                    .zip(px)
                    .zip(grad.iter().zip(pg))
                    .map(|((a, b), (ga, gb))| (a - b) * (ga - gb))
                    .sum();
                if sy > 1e-30 && ss.is_finite() {
                    (ss / sy).clamp(1e-10, 1e4)
                } else {
                    warm.unwrap_or(1.0 / gnorm.max(1.0))
                }
            }
            _ => warm.unwrap_or((0.1 / gnorm.max(1e-10)).min(1.0)),
        };

        let mut accepted = false;
        let mut feasible_seen = false;
        for _ in 0..60 {
            let candidate: Vec<f64> = x
                .iter()
                .zip(&grad)
                .map(|(xi, gi)| xi - alpha * gi)
                .collect();
            if let Some(fc) = objective(&candidate) {
                feasible_seen = true;
                if fc <= fx - 1e-4 * alpha * gnorm * gnorm {
                    prev_x = Some(std::mem::replace(&mut x, candidate));
                    prev_grad = Some(grad.clone());
                    fx = fc;
                    accepted = true;
                    last_alpha = Some(alpha);
                    iterates.push(IterRecord {
                        energy: fx,
                        grad_norm: f64::NAN,
                        step: alpha,
                    });
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !accepted {
            if feasible_seen {
                // Descent stalled at the resolution of the difference
                // gradient; the trace up to here is still valid.
                criterion = format!("line-search stall at gradient norm {gnorm:.3e}");
                break;
            }
            return Err(Error::Optimization(
                "step rejected 60 times: shape left the feasible set".into(),
            ));
        }
    }

    Ok(DescentOutcome {
        coeffs: x,
        iterates,
        converged,
        criterion,
    })
}

// ---------------------------------------------------------------------------
// Entry points
// ---------------------------------------------------------------------------

/// Minimizes the bending energy of a closed curve in a 2-dimensional chart
/// over its truncated Fourier coefficients.
pub fn minimize_bending(
    chart2d: &MetricChart,
    init: &ClosedCurve,
    opts: &OptimOptions,
) -> Result<OptimizationTrace> {
    if chart2d.dim() != 2 {
        return Err(Error::Dimension(
            "bending minimization needs a 2-dimensional chart".into(),
        ));
    }
    if opts.m_max < 8 {
        return Err(Error::ParamRange(format!(
            "curve cutoff m_max must be at least 8, got {}",
            opts.m_max
        )));
    }
    init.validate(chart2d)?;
    let params = CurveShapeParams::from_curve(init, opts.m_max, opts.resolution.0)?;
    let chart = chart2d.clone();
    let shape = params.clone();
    let objective = move |coeffs: &[f64]| -> Option<f64> {
        let curve = shape.reconstruct_at(coeffs).ok()?;
        curve_bending_fast(&curve, &chart)
    };
    let outcome = descend(params.coeffs.clone(), opts, objective)?;
    let final_curve = params.reconstruct_at(&outcome.coeffs)?;
    let final_energy = outcome.iterates.last().unwrap().energy;
    Ok(OptimizationTrace {
        mode: "curve-h2",
        iterates: outcome.iterates,
        final_energy,
        converged: outcome.converged,
        criterion: outcome.criterion,
        final_shape: FinalShape::Curve(final_curve),
    })
}

/// Bending energy without the validation pass; infeasible shapes yield
/// `None` so the line search can reject them.
fn curve_bending_fast(curve: &ClosedCurve, chart: &MetricChart) -> Option<f64> {
    for q in curve.points() {
        if !chart.contains(&[q[0], q[1], 0.0, 0.0]) {
            return None;
        }
    }
    let jet = curve_jet(curve, chart).ok()?;
    if jet.speed.iter().any(|&w| w <= 1e-8) {
        return None;
    }
    let k2 = curve_curvature_sq(curve, chart).ok()?;
    curve_quadrature(&k2, &jet.speed, curve).ok()
}

/// Minimizes the Willmore energy of a torus over its truncated Fourier
/// coefficients. The quoted (umbilicity-deficit) integrand is the
/// objective.
pub fn minimize_willmore(
    chart: &MetricChart,
    init: &TorusImmersion,
    opts: &OptimOptions,
) -> Result<OptimizationTrace> {
    init.validate(chart)?;
    let normalized = init.normalize_angles(chart)?;
    let params = TorusShapeParams::from_torus(&normalized, opts.m_max, opts.resolution)?;
    let chart_c = chart.clone();
    let shape = params.clone();
    let objective = move |coeffs: &[f64]| -> Option<f64> {
        let imm = shape.reconstruct_at(coeffs).ok()?;
        willmore_value(&imm, &chart_c).ok()
    };
    let outcome = descend(params.coeffs.clone(), opts, objective)?;
    let final_torus = params.reconstruct_at(&outcome.coeffs)?;
    let final_energy = outcome.iterates.last().unwrap().energy;
    Ok(OptimizationTrace {
        mode: "torus-generic",
        iterates: outcome.iterates,
        final_energy,
        converged: outcome.converged,
        criterion: outcome.criterion,
        final_shape: FinalShape::Torus(final_torus),
    })
}

// ---------------------------------------------------------------------------
// Family scans
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct ScanRow {
    pub value: f64,
    pub willmore: Option<f64>,
    pub closed_form: Option<f64>,
    pub abs_error: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct ScanTable {
    pub family: Family,
    pub param_name: String,
    pub rows: Vec<ScanRow>,
}

impl ScanTable {
    pub fn all_ok(&self) -> bool {
        self.rows.iter().all(|r| r.error.is_none())
    }

    /// CSV export: `param, willmore, closed_form, abs_error, status`.
    pub fn to_csv(&self) -> String {
        let fmt = |x: Option<f64>| match x {
            Some(v) => format!("{v:.16e}"),
            None => String::new(),
        };
        let mut out = format!("{},willmore,closed_form,abs_error,status\n", self.param_name);
        for row in &self.rows {
            out.push_str(&format!(
                "{:.16e},{},{},{},{}\n",
                row.value,
                fmt(row.willmore),
                fmt(row.closed_form),
                fmt(row.abs_error),
                row.error.as_deref().unwrap_or("ok")
            ));
        }
        out
    }
}

/// Evaluates the Willmore energy of a family across parameter values,
/// against the closed form when one exists. Per-value failures become rows
/// with an error tag; the scan continues.
pub fn scan_family(
    family: Family,
    base_params: &Params,
    param_name: &str,
    values: &[f64],
    resolution: (usize, usize),
) -> ScanTable {
    let mut rows = Vec::with_capacity(values.len());
    for &value in values {
        let params = base_params.clone().with(param_name, value);
        let row = (|| -> Result<ScanRow> {
            let chart = family.chart(&params)?;
            let imm = make_family(family, &params, resolution)?;
            let report = willmore(&imm, &chart)?;
            let reference = closed_form(family, &params);
            Ok(ScanRow {
                value,
                willmore: Some(report.willmore),
                closed_form: reference,
                abs_error: reference.map(|cf| (report.willmore - cf).abs()),
                error: None,
            })
        })();
        rows.push(row.unwrap_or_else(|err| ScanRow {
            value,
            willmore: None,
            closed_form: closed_form(family, &params),
            abs_error: None,
            error: Some(err.to_string()),
        }));
    }
    ScanTable {
        family,
        param_name: param_name.to_string(),
        rows,
    }
}

// ---------------------------------------------------------------------------
// Measurements on optimized shapes
// ---------------------------------------------------------------------------

/// Geodesic distance between two points of the Poincare disk with
/// curvature `-c`.
pub fn poincare_distance(p: [f64; 2], q: [f64; 2], c: f64) -> f64 {
    // d = (2/sqrt(c)) atanh(|p - q| / |1 - conj(p) q|) in complex notation.
    let num = ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
    let cross_re = 1.0 - (p[0] * q[0] + p[1] * q[1]);
    let cross_im = p[0] * q[1] - p[1] * q[0];
    let den = (cross_re * cross_re + cross_im * cross_im).sqrt();
    let ratio = (num / den).clamp(0.0, 1.0 - 1e-15);
    2.0 / c.sqrt() * ratio.atanh()
}

/// Half the largest pairwise geodesic distance between curve nodes; for a
/// geodesic circle this is its radius, independent of where the disk
/// isometries have moved it.
pub fn hyperbolic_radius_from_diameter(curve: &ClosedCurve, c: f64) -> f64 {
    let pts = curve.points();
    let mut diameter: f64 = 0.0;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            diameter = diameter.max(poincare_distance(pts[i], pts[j], c));
        }
    }
    diameter / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::poincare_circle_euclidean_radius;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn disk_circle(euclid_r: f64, center: [f64; 2], n: usize) -> ClosedCurve {
        let points: Vec<[f64; 2]> = (0..n)
            .map(|i| {
                let th = TAU * i as f64 / n as f64;
                [
                    center[0] + euclid_r * th.cos(),
                    center[1] + euclid_r * th.sin(),
                ]
            })
            .collect();
        ClosedCurve::new(TAU, points).unwrap()
    }

    #[test]
    fn curve_coefficients_round_trip_through_the_grid() {
        let curve = disk_circle(0.4, [0.1, -0.05], 128);
        let params = CurveShapeParams::from_curve(&curve, 8, 128).unwrap();
        let back = params.reconstruct().unwrap();
        for (a, b) in back.points().iter().zip(curve.points()) {
            assert!((a[0] - b[0]).abs() < 1e-12);
            assert!((a[1] - b[1]).abs() < 1e-12);
        }
        let again = CurveShapeParams::from_curve(&back, 8, 128).unwrap();
        for (a, b) in again.coeffs.iter().zip(&params.coeffs) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn torus_coefficients_round_trip_through_the_grid() {
        let imm = make_family(
            Family::FlatRadiusR2xS1,
            &Params::new().with("t", 1.3),
            (32, 32),
        )
        .unwrap();
        let params = TorusShapeParams::from_torus(&imm, 4, (32, 32)).unwrap();
        let back = params.reconstruct().unwrap();
        for (a, b) in back.points().iter().zip(imm.points()) {
            for ch in 0..3 {
                assert!((a[ch] - b[ch]).abs() < 1e-12);
            }
        }
        assert_eq!(back.winding()[2], [0, 1]);
        let again = TorusShapeParams::from_torus(&back, 4, (32, 32)).unwrap();
        for (a, b) in again.coeffs.iter().zip(&params.coeffs) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_assembly_matches_direct_differences() {
        let chart = MetricChart::hyperbolic_disk(1.0).unwrap();
        let curve = disk_circle(0.45, [0.0, 0.0], 64);
        let params = CurveShapeParams::from_curve(&curve, 8, 64).unwrap();
        let shape = params.clone();
        let chart_c = chart.clone();
        let objective = move |coeffs: &[f64]| -> Option<f64> {
            let c = shape.reconstruct_at(coeffs).ok()?;
            curve_bending_fast(&c, &chart_c)
        };
        let mut rng_state = 12345u64;
        let mut rand_f = || {
            rng_state = rng_state.wrapping_mul(6364136223846793005).wrapping_add(1);
            ((rng_state >> 33) as f64 / 2f64.powi(31) - 1.0) * 0.01
        };
        for _ in 0..5 {
            let mut coeffs = params.coeffs.clone();
            for c in coeffs.iter_mut() {
                *c += rand_f();
            }
            if objective(&coeffs).is_none() {
                continue;
            }
            let grad = fd_gradient(&coeffs, 1e-6, &objective).unwrap();
            for &i in &[0usize, 3, 7, 20] {
                let mut probe = coeffs.clone();
                probe[i] += 1e-6;
                let p = objective(&probe).unwrap();
                probe[i] = coeffs[i] - 1e-6;
                let m = objective(&probe).unwrap();
                let direct = (p - m) / 2e-6;
                let denom = direct.abs().max(1e-8);
                assert!(
                    (grad[i] - direct).abs() / denom < 1e-4,
                    "coefficient {i}: assembled {} vs direct {direct}",
                    grad[i]
                );
            }
        }
    }

    #[test]
    fn optimum_circle_converges_immediately() {
        let chart = MetricChart::hyperbolic_disk(1.0).unwrap();
        let r_opt = 1f64.asinh();
        let curve = disk_circle(poincare_circle_euclidean_radius(1.0, r_opt), [0.0, 0.0], 128);
        let mut opts = OptimOptions::curve_defaults();
        opts.resolution = (128, 1);
        opts.grad_tol = 1e-5;
        opts.max_iters = 50;
        let trace = minimize_bending(&chart, &curve, &opts).unwrap();
        assert!(trace.converged, "criterion: {}", trace.criterion);
        assert!(trace.iterates.len() <= 3, "{} iterates", trace.iterates.len());
        assert!((trace.final_energy - 4.0 * PI).abs() < 1e-8);
    }

    #[test]
    fn bending_descent_reaches_the_elastica_minimum() {
        let chart = MetricChart::hyperbolic_disk(1.0).unwrap();
        let start = disk_circle(poincare_circle_euclidean_radius(1.0, 1.2), [0.0, 0.0], 128);
        let mut opts = OptimOptions::curve_defaults();
        opts.resolution = (128, 1);
        opts.max_iters = 1500;
        let trace = minimize_bending(&chart, &start, &opts).unwrap();
        assert!(
            (trace.final_energy - 4.0 * PI).abs() < 1e-4,
            "energy {} vs 4 pi",
            trace.final_energy
        );
        let radius = hyperbolic_radius_from_diameter(trace.final_curve().unwrap(), 1.0);
        assert!(
            (radius - 1f64.asinh()).abs() < 1e-3,
            "radius {radius} vs {}",
            1f64.asinh()
        );
        // Accepted iterates never increase the energy.
        for w in trace.iterates.windows(2) {
            assert!(w[1].energy <= w[0].energy + 1e-12);
        }
    }

    #[test]
    fn descent_is_equivariant_under_disk_rotations() {
        let chart = MetricChart::hyperbolic_disk(1.0).unwrap();
        let base = disk_circle(0.5, [0.08, 0.0], 128);
        let angle = 1.1f64;
        let rotated_pts: Vec<[f64; 2]> = base
            .points()
            .iter()
            .map(|q| {
                [
                    angle.cos() * q[0] - angle.sin() * q[1],
                    angle.sin() * q[0] + angle.cos() * q[1],
                ]
            })
            .collect();
        let rotated = ClosedCurve::new(TAU, rotated_pts).unwrap();
        let mut opts = OptimOptions::curve_defaults();
        opts.resolution = (128, 1);
        opts.max_iters = 800;
        let a = minimize_bending(&chart, &base, &opts).unwrap();
        let b = minimize_bending(&chart, &rotated, &opts).unwrap();
        assert!(
            (a.final_energy - b.final_energy).abs() < 1e-6,
            "{} vs {}",
            a.final_energy,
            b.final_energy
        );
    }

    #[test]
    fn scan_reports_closed_forms_and_survives_bad_rows() {
        let table = scan_family(
            Family::FlatRadiusR2xS1,
            &Params::new(),
            "t",
            &[1.0, 2.0, -1.0, 5.0],
            (32, 32),
        );
        assert_eq!(table.rows.len(), 4);
        assert!(table.rows[0].error.is_none());
        assert!(table.rows[2].error.is_some());
        for row in [&table.rows[0], &table.rows[1], &table.rows[3]] {
            assert!(row.abs_error.unwrap() < 1e-8);
        }
        let csv = table.to_csv();
        assert!(csv.starts_with("t,willmore,closed_form,abs_error,status\n"));
        assert_eq!(csv.lines().count(), 5);
    }

    #[test]
    fn poincare_distance_matches_radial_closed_form() {
        // Distance from the origin to radius rho: 2 atanh(rho), scaled by
        // 1/sqrt(c).
        for c in [1.0, 4.0] {
            let d = poincare_distance([0.0, 0.0], [0.3, 0.0], c);
            assert_relative_eq!(d, 2.0 / c.sqrt() * 0.3f64.atanh(), epsilon = 1e-12);
        }
        let circle = disk_circle(0.3, [0.0, 0.0], 32);
        let r = hyperbolic_radius_from_diameter(&circle, 1.0);
        assert_relative_eq!(r, 2.0 * 0.3f64.atanh(), epsilon = 1e-10);
    }
}
