//! Periodic grids for immersed tori and closed curves, spectral (Fourier)
//! differentiation, periodic quadrature, the built-in analytic shape
//! families, and the plain-text grid interchange format.

use crate::error::{Error, Result};
use crate::metric::{MetricChart, Params};
use crate::tensor::*;
use rand::Rng;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::{FRAC_PI_4, TAU};
use std::cell::RefCell;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::Arc;

// ---------------------------------------------------------------------------
// Spectral helpers
// ---------------------------------------------------------------------------

thread_local! {
    // Per-thread planner: plans are cached inside and the worker threads
    // of a parallel gradient never contend on a lock.
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut planner = p.borrow_mut();
        if forward {
            planner.plan_fft_forward(n)
        } else {
            planner.plan_fft_inverse(n)
        }
    })
}

/// Multiplier `(i k w)^order` for mode index `j` of an `n`-point grid with
/// period `p`. The Nyquist mode is zeroed for odd orders and kept (real)
/// for even orders.
fn mode_multiplier(j: usize, n: usize, p: f64, order: u32) -> Complex<f64> {
    if order == 0 {
        return Complex::new(1.0, 0.0);
    }
    let k = if 2 * j < n {
        j as f64
    } else if 2 * j == n {
        if order % 2 == 1 {
            return Complex::new(0.0, 0.0);
        }
        (n as f64) / 2.0
    } else {
        j as f64 - n as f64
    };
    let ik = Complex::new(0.0, k * TAU / p);
    ik.powi(order as i32)
}

/// Spectral derivative of a periodic sample vector (period `p`).
pub fn deriv_1d(data: &[f64], p: f64, order: u32) -> Vec<f64> {
    let n = data.len();
    let fwd = plan(n, true);
    let inv = plan(n, false);
    let mut buf: Vec<Complex<f64>> = data.iter().map(|&x| Complex::new(x, 0.0)).collect();
    fwd.process(&mut buf);
    for (j, z) in buf.iter_mut().enumerate() {
        *z *= mode_multiplier(j, n, p, order);
    }
    inv.process(&mut buf);
    let scale = 1.0 / n as f64;
    buf.iter().map(|z| z.re * scale).collect()
}

/// Spectral derivatives of a doubly periodic scalar grid stored u-major
/// (`data[iu * nv + iv]`), one output per requested `(du, dv)` order pair.
/// The forward transform is shared across all requested orders.
pub fn deriv_2d_multi(
    data: &[f64],
    nu: usize,
    nv: usize,
    pu: f64,
    pv: f64,
    orders: &[(u32, u32)],
) -> Vec<Vec<f64>> {
    assert_eq!(data.len(), nu * nv);
    let fwd_u = plan(nu, true);
    let inv_u = plan(nu, false);
    let fwd_v = plan(nv, true);
    let inv_v = plan(nv, false);

    // Forward 2D transform, once.
    let mut spec: Vec<Complex<f64>> = data.iter().map(|&x| Complex::new(x, 0.0)).collect();
    for iu in 0..nu {
        fwd_v.process(&mut spec[iu * nv..(iu + 1) * nv]);
    }
    let mut col = vec![Complex::new(0.0, 0.0); nu];
    for iv in 0..nv {
        for iu in 0..nu {
            col[iu] = spec[iu * nv + iv];
        }
        fwd_u.process(&mut col);
        for iu in 0..nu {
            spec[iu * nv + iv] = col[iu];
        }
    }
    let scale = 1.0 / (nu * nv) as f64;

    let mut outputs = Vec::with_capacity(orders.len());
    let mut work = vec![Complex::new(0.0, 0.0); nu * nv];
    for &(du, dv) in orders {
        let mult_u: Vec<Complex<f64>> =
            (0..nu).map(|j| mode_multiplier(j, nu, pu, du)).collect();
        let mult_v: Vec<Complex<f64>> =
            (0..nv).map(|j| mode_multiplier(j, nv, pv, dv)).collect();
        for iu in 0..nu {
            let mu = mult_u[iu] * scale;
            for iv in 0..nv {
                work[iu * nv + iv] = spec[iu * nv + iv] * mu * mult_v[iv];
            }
        }
        // Inverse 2D transform.
        for iv in 0..nv {
            for iu in 0..nu {
                col[iu] = work[iu * nv + iv];
            }
            inv_u.process(&mut col);
            for iu in 0..nu {
                work[iu * nv + iv] = col[iu];
            }
        }
        for iu in 0..nu {
            inv_v.process(&mut work[iu * nv..(iu + 1) * nv]);
        }
        outputs.push(work.iter().map(|z| z.re).collect());
    }
    outputs
}

/// Spectral derivative of a doubly periodic scalar grid, single order.
pub fn deriv_2d(data: &[f64], nu: usize, nv: usize, pu: f64, pv: f64, du: u32, dv: u32) -> Vec<f64> {
    deriv_2d_multi(data, nu, nv, pu, pv, &[(du, dv)])
        .pop()
        .unwrap()
}

fn require_power_of_two(n: usize, min: usize, what: &str) -> Result<()> {
    if n < min || !n.is_power_of_two() {
        return Err(Error::Resolution(format!(
            "{what} must be a power of two >= {min}, got {n}"
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Immersions and curves
// ---------------------------------------------------------------------------

/// Identifier plus parameters of a built-in analytic shape family.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyTag {
    pub family: Family,
    pub params: Params,
}

/// Doubly periodic grid of ambient chart coordinates representing an
/// immersed torus.
///
/// Angle-valued chart coordinates may wind around their period as the
/// parameters traverse the torus; `winding[a]` holds the integer number of
/// `2*pi` turns of channel `a` per u- and v-period. Grid values of winding
/// channels are stored unwrapped (continuous), so that subtracting the
/// linear ramp leaves a genuinely periodic function for spectral work.
#[derive(Debug, Clone)]
pub struct TorusImmersion {
    nu: usize,
    nv: usize,
    periods: (f64, f64),
    dim: usize,
    points: Vec<Vec4>,
    winding: [[i32; 2]; MAX_DIM],
    pub family_tag: Option<FamilyTag>,
}

impl TorusImmersion {
    pub fn new(
        nu: usize,
        nv: usize,
        periods: (f64, f64),
        dim: usize,
        points: Vec<Vec4>,
    ) -> Result<Self> {
        require_power_of_two(nu, 8, "torus resolution N_u")?;
        require_power_of_two(nv, 8, "torus resolution N_v")?;
        if !(2..=MAX_DIM).contains(&dim) {
            return Err(Error::Dimension(format!("ambient dimension {dim}")));
        }
        if points.len() != nu * nv {
            return Err(Error::ShapeMismatch(format!(
                "expected {} grid points, got {}",
                nu * nv,
                points.len()
            )));
        }
        if periods.0 <= 0.0 || periods.1 <= 0.0 {
            return Err(Error::ParamRange("grid periods must be positive".into()));
        }
        for (idx, q) in points.iter().enumerate() {
            if q.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite(format!("grid point {idx}")));
            }
        }
        Ok(Self {
            nu,
            nv,
            periods,
            dim,
            points,
            winding: [[0; 2]; MAX_DIM],
            family_tag: None,
        })
    }

    /// Declares that channel `a` winds `wu` times per u-period and `wv`
    /// times per v-period (in units of `2*pi`).
    pub fn with_winding(mut self, a: usize, wu: i32, wv: i32) -> Self {
        self.winding[a] = [wu, wv];
        self
    }

    pub fn winding(&self) -> &[[i32; 2]; MAX_DIM] {
        &self.winding
    }

    pub fn resolution(&self) -> (usize, usize) {
        (self.nu, self.nv)
    }

    pub fn periods(&self) -> (f64, f64) {
        self.periods
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> &[Vec4] {
        &self.points
    }

    pub fn point(&self, iu: usize, iv: usize) -> &Vec4 {
        &self.points[iu * self.nv + iv]
    }

    pub fn node_count(&self) -> usize {
        self.nu * self.nv
    }

    /// One scalar channel of the grid, as a flat u-major vector.
    pub fn channel(&self, a: usize) -> Vec<f64> {
        self.points.iter().map(|q| q[a]).collect()
    }

    /// Checks chart membership (margin included) and immersion regularity:
    /// the Gram determinant of the two spectral tangent vectors in the
    /// ambient metric must exceed `1e-10` at every node.
    pub fn validate(&self, chart: &MetricChart) -> Result<()> {
        let norm = self.normalize_angles(chart)?;
        for iu in 0..norm.nu {
            for iv in 0..norm.nv {
                if !chart.contains(norm.point(iu, iv)) {
                    return Err(Error::OutsideDomain(format!(
                        "node ({iu},{iv}) violates the `{}` chart margin",
                        chart.name()
                    )));
                }
            }
        }
        let jet = spectral_jet(&norm)?;
        for iu in 0..norm.nu {
            for iv in 0..norm.nv {
                let idx = iu * norm.nv + iv;
                let g = chart.metric(norm.point(iu, iv))?;
                let e = metric_dot(&g, &jet.xu[idx], &jet.xu[idx], self.dim);
                let f = metric_dot(&g, &jet.xu[idx], &jet.xv[idx], self.dim);
                let gg = metric_dot(&g, &jet.xv[idx], &jet.xv[idx], self.dim);
                if e * gg - f * f <= 1e-10 {
                    return Err(Error::Degenerate(format!(
                        "immersion fails regularity at node ({iu},{iv}): tangent Gram determinant {:.3e}",
                        e * gg - f * f
                    )));
                }
            }
        }
        Ok(())
    }

    /// Unwraps the chart's angular channels into continuous grids and
    /// records their integer winding numbers. Idempotent; needed before
    /// spectral differentiation of grids loaded from files, where angle
    /// channels may be stored reduced modulo `2*pi`.
    ///
    /// Assumes less than half a turn of angle advance per grid step.
    pub fn normalize_angles(&self, chart: &MetricChart) -> Result<Self> {
        if chart.dim() != self.dim {
            return Err(Error::Dimension(format!(
                "immersion has ambient dimension {}, chart `{}` has {}",
                self.dim,
                chart.name(),
                chart.dim()
            )));
        }
        let angular = chart.angular_coords();
        if angular.is_empty() {
            return Ok(self.clone());
        }
        let wrap = |d: f64| d - TAU * (d / TAU).round();
        let mut out = self.clone();
        for &a in angular {
            // Unwrap the first u-row, then every v-column from its row value.
            for iu in 1..self.nu {
                let prev = out.points[(iu - 1) * self.nv][a];
                let raw = out.points[iu * self.nv][a];
                out.points[iu * self.nv][a] = prev + wrap(raw - prev);
            }
            for iu in 0..self.nu {
                for iv in 1..self.nv {
                    let prev = out.points[iu * self.nv + iv - 1][a];
                    let raw = out.points[iu * self.nv + iv][a];
                    out.points[iu * self.nv + iv][a] = prev + wrap(raw - prev);
                }
            }
            // Winding along u from closing the first row; along v from
            // closing each column (all columns must agree).
            let first = out.points[0][a];
            let last_u = out.points[(self.nu - 1) * self.nv][a];
            let closed_u = last_u + wrap(out.points[0][a] - last_u);
            let wu = ((closed_u - first) / TAU).round();
            let mut wv = None;
            for iu in 0..self.nu {
                let col_first = out.points[iu * self.nv][a];
                let col_last = out.points[iu * self.nv + self.nv - 1][a];
                let closed_v = col_last + wrap(col_first - col_last);
                let w = ((closed_v - col_first) / TAU).round();
                match wv {
                    None => wv = Some(w),
                    Some(prev) if prev != w => {
                        return Err(Error::Degenerate(format!(
                            "inconsistent angular winding of channel {a} across columns"
                        )));
                    }
                    _ => {}
                }
            }
            out.winding[a] = [wu as i32, wv.unwrap_or(0.0) as i32];
        }
        Ok(out)
    }

    /// Grid restricted to every other node in both directions. Used for
    /// convergence estimates of shapes without an analytic rebuild.
    pub fn subsample(&self) -> Result<Self> {
        let (nu, nv) = (self.nu / 2, self.nv / 2);
        require_power_of_two(nu, 8, "subsampled N_u")?;
        require_power_of_two(nv, 8, "subsampled N_v")?;
        let mut points = Vec::with_capacity(nu * nv);
        for iu in 0..nu {
            for iv in 0..nv {
                points.push(*self.point(2 * iu, 2 * iv));
            }
        }
        let mut out = Self::new(nu, nv, self.periods, self.dim, points)?;
        out.winding = self.winding;
        out.family_tag = self.family_tag.clone();
        Ok(out)
    }
}

/// Singly periodic grid of 2-manifold chart coordinates representing a
/// closed curve.
#[derive(Debug, Clone)]
pub struct ClosedCurve {
    n: usize,
    period: f64,
    points: Vec<[f64; 2]>,
}

impl ClosedCurve {
    pub fn new(period: f64, points: Vec<[f64; 2]>) -> Result<Self> {
        let n = points.len();
        require_power_of_two(n, 8, "curve resolution N_s")?;
        if period <= 0.0 {
            return Err(Error::ParamRange("curve period must be positive".into()));
        }
        for (idx, q) in points.iter().enumerate() {
            if !q[0].is_finite() || !q[1].is_finite() {
                return Err(Error::NonFinite(format!("curve node {idx}")));
            }
        }
        Ok(Self { n, period, points })
    }

    pub fn resolution(&self) -> usize {
        self.n
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn channel(&self, a: usize) -> Vec<f64> {
        self.points.iter().map(|q| q[a]).collect()
    }

    /// Band-limited resampling to `n` nodes by Fourier interpolation.
    pub fn resample(&self, n: usize) -> Result<Self> {
        require_power_of_two(n, 8, "resampled curve resolution")?;
        if n == self.n {
            return Ok(self.clone());
        }
        let mut out = vec![[0.0; 2]; n];
        for ch in 0..2 {
            let data = self.channel(ch);
            let m = self.n;
            let fwd = plan(m, true);
            let mut spec: Vec<Complex<f64>> =
                data.iter().map(|&x| Complex::new(x, 0.0)).collect();
            fwd.process(&mut spec);
            // Redistribute modes into the target spectrum.
            let keep = m.min(n);
            let mut target = vec![Complex::new(0.0, 0.0); n];
            for j in 0..keep / 2 {
                target[j] = spec[j];
            }
            for j in 1..keep / 2 {
                target[n - j] = spec[m - j];
            }
            // Split the shared Nyquist mode symmetrically when upsampling,
            // drop it when downsampling.
            if n > m {
                let nyq = spec[m / 2] * 0.5;
                target[m / 2] = nyq;
                target[n - m / 2] = nyq.conj();
            }
            let inv = plan(n, false);
            inv.process(&mut target);
            let scale = 1.0 / m as f64;
            for (i, z) in target.iter().enumerate() {
                out[i][ch] = z.re * scale;
            }
        }
        Self::new(self.period, out)
    }

    /// Chart membership plus nonvanishing metric speed at every node.
    pub fn validate(&self, chart: &MetricChart) -> Result<()> {
        if chart.dim() != 2 {
            return Err(Error::Dimension(format!(
                "closed curves need a 2-dimensional chart, `{}` has dimension {}",
                chart.name(),
                chart.dim()
            )));
        }
        for (idx, q) in self.points.iter().enumerate() {
            let p = [q[0], q[1], 0.0, 0.0];
            if !chart.contains(&p) {
                return Err(Error::OutsideDomain(format!(
                    "curve node {idx} violates the `{}` chart margin",
                    chart.name()
                )));
            }
        }
        let jet = curve_jet(self, chart)?;
        for (idx, &w) in jet.speed.iter().enumerate() {
            if w <= 1e-8 {
                return Err(Error::Degenerate(format!(
                    "curve has vanishing speed at node {idx}"
                )));
            }
        }
        Ok(())
    }
}

/// First and second parameter derivatives of an immersion grid.
#[derive(Debug, Clone)]
pub struct JetData {
    pub xu: Vec<Vec4>,
    pub xv: Vec<Vec4>,
    pub xuu: Vec<Vec4>,
    pub xuv: Vec<Vec4>,
    pub xvv: Vec<Vec4>,
}

/// Discrete Fourier differentiation of the immersion grid in both periodic
/// directions; exact for band-limited data up to the Nyquist mode.
///
/// Winding channels are differentiated as linear ramp plus periodic
/// remainder; the ramp contributes its constant slope to `x_u`, `x_v`.
pub fn spectral_jet(imm: &TorusImmersion) -> Result<JetData> {
    let (nu, nv) = imm.resolution();
    let (pu, pv) = imm.periods();
    let count = nu * nv;
    let mut jet = JetData {
        xu: vec![ZERO_VEC; count],
        xv: vec![ZERO_VEC; count],
        xuu: vec![ZERO_VEC; count],
        xuv: vec![ZERO_VEC; count],
        xvv: vec![ZERO_VEC; count],
    };
    for a in 0..imm.dim() {
        let mut data = imm.channel(a);
        let [wu, wv] = imm.winding()[a];
        let (slope_u, slope_v) = (TAU * wu as f64 / pu, TAU * wv as f64 / pv);
        if wu != 0 || wv != 0 {
            for iu in 0..nu {
                let u = pu * iu as f64 / nu as f64;
                for iv in 0..nv {
                    let v = pv * iv as f64 / nv as f64;
                    data[iu * nv + iv] -= slope_u * u + slope_v * v;
                }
            }
        }
        let fields = deriv_2d_multi(
            &data,
            nu,
            nv,
            pu,
            pv,
            &[(1, 0), (0, 1), (2, 0), (1, 1), (0, 2)],
        );
        let [du, dv, duu, duv, dvv]: &[Vec<f64>; 5] = fields.as_slice().try_into().unwrap();
        for i in 0..count {
            jet.xu[i][a] = du[i] + slope_u;
            jet.xv[i][a] = dv[i] + slope_v;
            jet.xuu[i][a] = duu[i];
            jet.xuv[i][a] = duv[i];
            jet.xvv[i][a] = dvv[i];
        }
    }
    Ok(jet)
}

/// Per-node derivative data of a closed curve: chart-coordinate first and
/// second derivatives plus the metric speed `|gamma'|`.
#[derive(Debug, Clone)]
pub struct CurveJet {
    pub d1: Vec<[f64; 2]>,
    pub d2: Vec<[f64; 2]>,
    /// `|gamma'|` in the 2-manifold metric, per node; the arc element is
    /// `speed * d parameter`.
    pub speed: Vec<f64>,
}

/// Fourier differentiation of a closed curve in its single periodic
/// parameter, with the metric arc element.
pub fn curve_jet(curve: &ClosedCurve, chart: &MetricChart) -> Result<CurveJet> {
    if chart.dim() != 2 {
        return Err(Error::Dimension(format!(
            "curve_jet needs a 2-dimensional chart, `{}` has dimension {}",
            chart.name(),
            chart.dim()
        )));
    }
    let n = curve.resolution();
    let p = curve.period();
    let mut d1 = vec![[0.0; 2]; n];
    let mut d2 = vec![[0.0; 2]; n];
    for ch in 0..2 {
        let data = curve.channel(ch);
        let first = deriv_1d(&data, p, 1);
        let second = deriv_1d(&data, p, 2);
        for i in 0..n {
            d1[i][ch] = first[i];
            d2[i][ch] = second[i];
        }
    }
    let mut speed = vec![0.0; n];
    for i in 0..n {
        let q = [curve.points[i][0], curve.points[i][1], 0.0, 0.0];
        let g = chart.metric(&q)?;
        let t = [d1[i][0], d1[i][1], 0.0, 0.0];
        speed[i] = metric_dot(&g, &t, &t, 2).max(0.0).sqrt();
    }
    Ok(CurveJet { d1, d2, speed })
}

/// Periodic trapezoid rule: mean of `field * area_element` times the
/// parameter periods. Spectrally accurate for smooth periodic integrands.
pub fn quadrature(field: &[f64], area_element: &[f64], imm: &TorusImmersion) -> Result<f64> {
    let count = imm.node_count();
    if field.len() != count || area_element.len() != count {
        return Err(Error::ShapeMismatch(format!(
            "quadrature arrays of lengths {} and {} on a grid of {} nodes",
            field.len(),
            area_element.len(),
            count
        )));
    }
    let mut acc = 0.0;
    for i in 0..count {
        let term = field[i] * area_element[i];
        if !term.is_finite() {
            return Err(Error::NonFinite(format!("quadrature term at node {i}")));
        }
        acc += term;
    }
    let (pu, pv) = imm.periods();
    Ok(acc / count as f64 * pu * pv)
}

/// Periodic trapezoid rule along a curve: mean of `field * arc_element`
/// times the parameter period.
pub fn curve_quadrature(field: &[f64], arc_element: &[f64], curve: &ClosedCurve) -> Result<f64> {
    let n = curve.resolution();
    if field.len() != n || arc_element.len() != n {
        return Err(Error::ShapeMismatch(
            "curve quadrature arrays do not match the grid".into(),
        ));
    }
    let mut acc = 0.0;
    for i in 0..n {
        let term = field[i] * arc_element[i];
        if !term.is_finite() {
            return Err(Error::NonFinite(format!("quadrature term at node {i}")));
        }
        acc += term;
    }
    Ok(acc / n as f64 * curve.period())
}

// ---------------------------------------------------------------------------
// Families
// ---------------------------------------------------------------------------

/// Built-in analytic shape families, each tied to a catalog chart.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// Product of the equatorial geodesic of the 2-sphere with the circle
    /// factor; totally geodesic in `s2xs1`.
    CliffordS2xS1,
    /// `(t cos u, t sin u, v)` in `r2xs1`: a flat product torus whose first
    /// factor is a circle of radius `t`.
    FlatRadiusR2xS1,
    /// Geodesic circle of hyperbolic radius `r` about the disk origin,
    /// times the circle factor, in `h2xs1`.
    CircleH2xS1,
    /// `(r_l cos u, r_l sin u, r_m cos v, r_m sin v)` in `r4-conformal`,
    /// with the radii at which each factor circle is a geodesic.
    GeodesicR4,
    /// Preimage of a great circle under the Hopf projection: `eta = pi/4`,
    /// `(xi1, xi2) = (u, v)` in the `berger` chart.
    HopfBerger,
    /// Product of a supplied closed curve in the hyperbolic disk with the
    /// circle factor; built via [`product_torus`].
    CurveProduct,
}

pub const FAMILY_NAMES: [&str; 6] = [
    "clifford-s2xs1",
    "flat-rt-r2xs1",
    "circle-h2xs1",
    "geodesic-r4",
    "hopf-berger",
    "curve-product",
];

impl Family {
    pub fn from_name(name: &str) -> Result<Self> {
        Ok(match name {
            "clifford-s2xs1" => Family::CliffordS2xS1,
            "flat-rt-r2xs1" => Family::FlatRadiusR2xS1,
            "circle-h2xs1" => Family::CircleH2xS1,
            "geodesic-r4" => Family::GeodesicR4,
            "hopf-berger" => Family::HopfBerger,
            "curve-product" => Family::CurveProduct,
            other => return Err(Error::UnknownFamily(other.to_string())),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Family::CliffordS2xS1 => "clifford-s2xs1",
            Family::FlatRadiusR2xS1 => "flat-rt-r2xs1",
            Family::CircleH2xS1 => "circle-h2xs1",
            Family::GeodesicR4 => "geodesic-r4",
            Family::HopfBerger => "hopf-berger",
            Family::CurveProduct => "curve-product",
        }
    }

    /// The catalog chart this family immerses into.
    pub fn chart(&self, params: &Params) -> Result<MetricChart> {
        match self {
            Family::CliffordS2xS1 => crate::metric::catalog_lookup("s2xs1", &Params::new()),
            Family::FlatRadiusR2xS1 => crate::metric::catalog_lookup("r2xs1", &Params::new()),
            Family::CircleH2xS1 | Family::CurveProduct => crate::metric::catalog_lookup(
                "h2xs1",
                &Params::new().with("c", params.get_or("c", 1.0)),
            ),
            Family::GeodesicR4 => crate::metric::catalog_lookup(
                "r4-conformal",
                &Params::new()
                    .with("lambda", params.get_or("lambda", 0.1))
                    .with("mu", params.get_or("mu", params.get_or("lambda", 0.1))),
            ),
            Family::HopfBerger => crate::metric::catalog_lookup(
                "berger",
                &Params::new().with("t", params.get_or("t", 1.0)),
            ),
        }
    }
}

/// Geodesic radius of a circle about the origin of a conformally deformed
/// plane factor with parameter `a`; root of `a r^4 + (a-1) r^2 + 1 = 0`.
/// `plus_root` selects the outer branch.
pub fn conformal_factor_geodesic_radius(a: f64, plus_root: bool) -> Result<f64> {
    if a <= 0.0 || a > crate::metric::R4_PARAM_MAX {
        return Err(Error::ParamRange(format!(
            "conformal parameter must satisfy 0 < a <= 3 - 2*sqrt(2), got {a}"
        )));
    }
    let disc = a * a - 6.0 * a + 1.0;
    let root = disc.max(0.0).sqrt();
    let r2 = if plus_root {
        (1.0 - a + root) / (2.0 * a)
    } else {
        (1.0 - a - root) / (2.0 * a)
    };
    if r2 <= 0.0 {
        return Err(Error::ParamRange(format!(
            "no real geodesic radius for conformal parameter {a}"
        )));
    }
    Ok(r2.sqrt())
}

/// Euclidean disk radius of the geodesic circle of hyperbolic radius `r`
/// about the origin of the Poincare disk with curvature `-c`.
pub fn poincare_circle_euclidean_radius(c: f64, r: f64) -> f64 {
    ((c.sqrt() * r) / 2.0).tanh()
}

/// Grid samples of a named analytic family in its catalog chart.
///
/// Parameters: `t` for `flat-rt-r2xs1` and `hopf-berger`; `c` and the
/// hyperbolic radius `r` for `circle-h2xs1` (default `r = asinh(1)/sqrt(c)`);
/// `lambda`, `mu` and `root` (`1` for the outer branch, `-1` for the inner)
/// for `geodesic-r4`. The `curve-product` family needs an explicit curve;
/// see [`product_torus`].
pub fn make_family(
    family: Family,
    params: &Params,
    resolution: (usize, usize),
) -> Result<TorusImmersion> {
    let (nu, nv) = resolution;
    require_power_of_two(nu, 8, "torus resolution N_u")?;
    require_power_of_two(nv, 8, "torus resolution N_v")?;
    let mut points = Vec::with_capacity(nu * nv);
    let grid_uv = |iu: usize, iv: usize| (TAU * iu as f64 / nu as f64, TAU * iv as f64 / nv as f64);

    let mut dim = 3;
    match family {
        Family::CliffordS2xS1 => {
            for iu in 0..nu {
                for iv in 0..nv {
                    let (u, v) = grid_uv(iu, iv);
                    points.push([u.cos(), u.sin(), v, 0.0]);
                }
            }
        }
        Family::FlatRadiusR2xS1 => {
            let t = params.get_or("t", 1.0);
            if t <= 0.0 {
                return Err(Error::ParamRange(format!(
                    "flat-rt-r2xs1 needs t > 0, got {t}"
                )));
            }
            for iu in 0..nu {
                for iv in 0..nv {
                    let (u, v) = grid_uv(iu, iv);
                    points.push([t * u.cos(), t * u.sin(), v, 0.0]);
                }
            }
        }
        Family::CircleH2xS1 => {
            let c = params.get_or("c", 1.0);
            if c <= 0.0 {
                return Err(Error::ParamRange(format!(
                    "circle-h2xs1 needs c > 0, got {c}"
                )));
            }
            let r = params.get_or("r", 1f64.asinh() / c.sqrt());
            if r <= 0.0 {
                return Err(Error::ParamRange(format!(
                    "circle-h2xs1 needs geodesic radius r > 0, got {r}"
                )));
            }
            let rho = poincare_circle_euclidean_radius(c, r);
            if rho >= 1.0 - 2e-3 {
                return Err(Error::OutsideDomain(format!(
                    "geodesic circle of radius {r} does not fit inside the disk chart margin"
                )));
            }
            for iu in 0..nu {
                for iv in 0..nv {
                    let (u, v) = grid_uv(iu, iv);
                    points.push([rho * u.cos(), rho * u.sin(), v, 0.0]);
                }
            }
        }
        Family::GeodesicR4 => {
            dim = 4;
            let lambda = params.get_or("lambda", 0.1);
            let mu = params.get_or("mu", lambda);
            let plus = params.get_or("root", 1.0) >= 0.0;
            let rl = conformal_factor_geodesic_radius(lambda, plus)?;
            let rm = conformal_factor_geodesic_radius(mu, plus)?;
            for iu in 0..nu {
                for iv in 0..nv {
                    let (u, v) = grid_uv(iu, iv);
                    points.push([rl * u.cos(), rl * u.sin(), rm * v.cos(), rm * v.sin()]);
                }
            }
        }
        Family::HopfBerger => {
            let t = params.get_or("t", 1.0);
            if t <= 0.0 {
                return Err(Error::ParamRange(format!("hopf-berger needs t > 0, got {t}")));
            }
            for iu in 0..nu {
                for iv in 0..nv {
                    let (u, v) = grid_uv(iu, iv);
                    points.push([FRAC_PI_4, u, v, 0.0]);
                }
            }
        }
        Family::CurveProduct => {
            return Err(Error::ParamRange(
                "curve-product needs an explicit closed curve; use product_torus".into(),
            ));
        }
    }

    let mut imm = TorusImmersion::new(nu, nv, (TAU, TAU), dim, points)?;
    match family {
        // The circle-factor angle rides along v; Hopf coordinates ride
        // along both parameters.
        Family::CliffordS2xS1 | Family::FlatRadiusR2xS1 | Family::CircleH2xS1 => {
            imm = imm.with_winding(2, 0, 1);
        }
        Family::HopfBerger => {
            imm = imm.with_winding(1, 1, 0).with_winding(2, 0, 1);
        }
        _ => {}
    }
    imm.family_tag = Some(FamilyTag {
        family,
        params: params.clone(),
    });
    Ok(imm)
}

/// Product torus `gamma x S^1`: the curve (Fourier-resampled to `nu` nodes)
/// paired with the angle coordinate of the circle factor.
pub fn product_torus(curve: &ClosedCurve, nu: usize, nv: usize) -> Result<TorusImmersion> {
    let resampled = curve.resample(nu)?;
    let mut points = Vec::with_capacity(nu * nv);
    for iu in 0..nu {
        let q = resampled.points()[iu];
        for iv in 0..nv {
            let v = TAU * iv as f64 / nv as f64;
            points.push([q[0], q[1], v, 0.0]);
        }
    }
    Ok(TorusImmersion::new(nu, nv, (curve.period(), TAU), 3, points)?.with_winding(2, 0, 1))
}

/// Torus of revolution in Euclidean 3-space: tube radius `r` about a circle
/// of radius `big_r` in the xy-plane.
pub fn revolution_torus(big_r: f64, r: f64, resolution: (usize, usize)) -> Result<TorusImmersion> {
    if big_r <= r || r <= 0.0 {
        return Err(Error::ParamRange(format!(
            "torus of revolution needs 0 < r < R, got R = {big_r}, r = {r}"
        )));
    }
    let (nu, nv) = resolution;
    let mut points = Vec::with_capacity(nu * nv);
    for iu in 0..nu {
        for iv in 0..nv {
            let u = TAU * iu as f64 / nu as f64;
            let v = TAU * iv as f64 / nv as f64;
            let w = big_r + r * v.cos();
            points.push([w * u.cos(), w * u.sin(), r * v.sin(), 0.0]);
        }
    }
    TorusImmersion::new(nu, nv, (TAU, TAU), 3, points)
}

/// Pseudo-random smooth embedding of a standard donut: a torus of
/// revolution with seeded low-mode Fourier perturbations of its three
/// coordinate channels. Deterministic in the seed.
pub fn random_donut<R: Rng>(rng: &mut R, resolution: (usize, usize)) -> Result<TorusImmersion> {
    let (nu, nv) = resolution;
    let base = revolution_torus(1.6, 0.6, resolution)?;
    let mut points = base.points().to_vec();
    for ch in 0..3 {
        // Band-limited perturbation, amplitude well below the tube radius
        // so regularity is preserved.
        let mut modes = Vec::new();
        for k in -2i64..=2 {
            for l in -2i64..=2 {
                if k == 0 && l == 0 {
                    continue;
                }
                let denom = 1.0 + (k * k + l * l) as f64;
                let amp = 0.05 / denom;
                modes.push((
                    k as f64,
                    l as f64,
                    rng.gen_range(-amp..amp),
                    rng.gen_range(0.0..TAU),
                ));
            }
        }
        for iu in 0..nu {
            for iv in 0..nv {
                let u = TAU * iu as f64 / nu as f64;
                let v = TAU * iv as f64 / nv as f64;
                let mut delta = 0.0;
                for &(k, l, a, phase) in &modes {
                    delta += a * (k * u + l * v + phase).cos();
                }
                points[iu * nv + iv][ch] += delta;
            }
        }
    }
    TorusImmersion::new(nu, nv, (TAU, TAU), 3, points)
}

/// Pseudo-random smooth closed curve in the Poincare disk: a circle with
/// seeded bounded Fourier perturbations, kept inside the chart margin.
/// Deterministic in the seed.
pub fn random_disk_curve<R: Rng>(rng: &mut R, n: usize) -> Result<ClosedCurve> {
    let base_r = rng.gen_range(0.25..0.55);
    let cx = rng.gen_range(-0.15..0.15);
    let cy = rng.gen_range(-0.15..0.15);
    let mut modes = Vec::new();
    for k in 2i64..=6 {
        let amp = 0.06 / (k * k) as f64;
        modes.push((k as f64, rng.gen_range(-amp..amp), rng.gen_range(0.0..TAU)));
    }
    let mut points = Vec::with_capacity(n);
    for i in 0..n {
        let th = TAU * i as f64 / n as f64;
        let mut r = base_r;
        for &(k, a, phase) in &modes {
            r += a * (k * th + phase).cos();
        }
        points.push([cx + r * th.cos(), cy + r * th.sin()]);
    }
    ClosedCurve::new(TAU, points)
}

// ---------------------------------------------------------------------------
// Plain-text interchange format
// ---------------------------------------------------------------------------

fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes a torus grid: header `torus <N_u> <N_v> <n> <P_u> <P_v>`, then
/// `N_u * N_v` lines of `n` space-separated decimals in u-major order.
pub fn write_torus<W: Write>(imm: &TorusImmersion, mut out: W) -> Result<()> {
    let (nu, nv) = imm.resolution();
    let (pu, pv) = imm.periods();
    writeln!(
        out,
        "torus {} {} {} {} {}",
        nu,
        nv,
        imm.dim(),
        fmt17(pu),
        fmt17(pv)
    )?;
    for q in imm.points() {
        let fields: Vec<String> = (0..imm.dim()).map(|a| fmt17(q[a])).collect();
        writeln!(out, "{}", fields.join(" "))?;
    }
    Ok(())
}

pub fn write_torus_file(imm: &TorusImmersion, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_torus(imm, &mut buf)?;
    std::fs::write(path, buf)?;
    Ok(())
}

/// Writes a curve grid: header `curve <N_s> <dim> <P>`, then `N_s` lines.
pub fn write_curve<W: Write>(curve: &ClosedCurve, mut out: W) -> Result<()> {
    writeln!(
        out,
        "curve {} 2 {}",
        curve.resolution(),
        fmt17(curve.period())
    )?;
    for q in curve.points() {
        writeln!(out, "{} {}", fmt17(q[0]), fmt17(q[1]))?;
    }
    Ok(())
}

pub fn write_curve_file(curve: &ClosedCurve, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_curve(curve, &mut buf)?;
    std::fs::write(path, buf)?;
    Ok(())
}

fn parse_f64(tok: &str, what: &str) -> Result<f64> {
    tok.parse::<f64>()
        .map_err(|_| Error::Parse(format!("invalid {what}: `{tok}`")))
}

fn parse_usize(tok: &str, what: &str) -> Result<usize> {
    tok.parse::<usize>()
        .map_err(|_| Error::Parse(format!("invalid {what}: `{tok}`")))
}

/// Either grid format, as declared by the file header.
pub enum StoredShape {
    Torus(TorusImmersion),
    Curve(ClosedCurve),
}

pub fn read_shape<R: std::io::Read>(input: R) -> Result<StoredShape> {
    let reader = BufReader::new(input);
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty shape file".into()))??;
    let toks: Vec<&str> = header.split_whitespace().collect();
    match toks.first() {
        Some(&"torus") => {
            if toks.len() != 6 {
                return Err(Error::Parse(
                    "torus header must be `torus <N_u> <N_v> <n> <P_u> <P_v>`".into(),
                ));
            }
            let nu = parse_usize(toks[1], "N_u")?;
            let nv = parse_usize(toks[2], "N_v")?;
            let dim = parse_usize(toks[3], "dimension")?;
            if !(2..=MAX_DIM).contains(&dim) {
                return Err(Error::Dimension(format!("ambient dimension {dim}")));
            }
            let pu = parse_f64(toks[4], "P_u")?;
            let pv = parse_f64(toks[5], "P_v")?;
            let mut points = Vec::with_capacity(nu * nv);
            for (i, line) in lines.enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let vals: Vec<&str> = line.split_whitespace().collect();
                if vals.len() != dim {
                    return Err(Error::Parse(format!(
                        "grid line {} has {} fields, expected {}",
                        i + 2,
                        vals.len(),
                        dim
                    )));
                }
                let mut q = ZERO_VEC;
                for (a, tok) in vals.iter().enumerate() {
                    q[a] = parse_f64(tok, "coordinate")?;
                }
                points.push(q);
            }
            Ok(StoredShape::Torus(TorusImmersion::new(
                nu,
                nv,
                (pu, pv),
                dim,
                points,
            )?))
        }
        Some(&"curve") => {
            if toks.len() != 4 {
                return Err(Error::Parse(
                    "curve header must be `curve <N_s> <dim> <P>`".into(),
                ));
            }
            let n = parse_usize(toks[1], "N_s")?;
            let dim = parse_usize(toks[2], "dimension")?;
            if dim != 2 {
                return Err(Error::Dimension(format!(
                    "curve files carry 2-manifold coordinates, got dimension {dim}"
                )));
            }
            let p = parse_f64(toks[3], "period")?;
            let mut points = Vec::with_capacity(n);
            for line in lines {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let vals: Vec<&str> = line.split_whitespace().collect();
                if vals.len() != 2 {
                    return Err(Error::Parse("curve lines carry 2 fields".into()));
                }
                points.push([
                    parse_f64(vals[0], "coordinate")?,
                    parse_f64(vals[1], "coordinate")?,
                ]);
            }
            Ok(StoredShape::Curve(ClosedCurve::new(p, points)?))
        }
        _ => Err(Error::Parse(format!(
            "unrecognized shape header: `{header}`"
        ))),
    }
}

pub fn read_shape_file(path: &Path) -> Result<StoredShape> {
    let file = std::fs::File::open(path)?;
    read_shape(file)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn single_mode_differentiates_exactly() {
        let n = 64;
        let data: Vec<f64> = (0..n).map(|i| (TAU * i as f64 / n as f64).cos()).collect();
        let d1 = deriv_1d(&data, TAU, 1);
        let d2 = deriv_1d(&data, TAU, 2);
        for i in 0..n {
            let x = TAU * i as f64 / n as f64;
            assert_relative_eq!(d1[i], -x.sin(), epsilon = 1e-12);
            assert_relative_eq!(d2[i], -x.cos(), epsilon = 1e-12);
        }
    }

    #[test]
    fn constant_immersion_has_zero_jet() {
        let points = vec![[0.3, 0.7, -0.1, 0.0]; 16 * 16];
        let imm = TorusImmersion::new(16, 16, (TAU, TAU), 3, points).unwrap();
        let jet = spectral_jet(&imm).unwrap();
        for i in 0..imm.node_count() {
            for a in 0..3 {
                assert!(jet.xu[i][a].abs() < 1e-13);
                assert!(jet.xvv[i][a].abs() < 1e-13);
            }
        }
    }

    #[test]
    fn circle_channel_jet_matches_closed_form() {
        let imm =
            make_family(Family::FlatRadiusR2xS1, &Params::new().with("t", 1.0), (64, 64)).unwrap();
        let jet = spectral_jet(&imm).unwrap();
        // At u = 0: x_u = (0, 1, 0), x_uu = (-1, 0, 0).
        let idx = 0;
        assert_relative_eq!(jet.xu[idx][0], 0.0, epsilon = 1e-12);
        assert_relative_eq!(jet.xu[idx][1], 1.0, epsilon = 1e-12);
        assert_relative_eq!(jet.xuu[idx][0], -1.0, epsilon = 1e-12);
        assert_relative_eq!(jet.xuu[idx][1], 0.0, epsilon = 1e-12);
        // Unit speeds everywhere at t = 1 in the Euclidean product chart.
        for i in 0..imm.node_count() {
            let su = jet.xu[i][0].hypot(jet.xu[i][1]);
            assert_relative_eq!(su, 1.0, epsilon = 1e-12);
            assert_relative_eq!(jet.xv[i][2], 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn mixed_partials_commute_spectrally() {
        let imm = revolution_torus(2.0, 1.0, (32, 32)).unwrap();
        let (nu, nv) = imm.resolution();
        for a in 0..3 {
            let data = imm.channel(a);
            let du = deriv_2d(&data, nu, nv, TAU, TAU, 1, 0);
            let dv = deriv_2d(&data, nu, nv, TAU, TAU, 0, 1);
            let duv = deriv_2d(&du, nu, nv, TAU, TAU, 0, 1);
            let dvu = deriv_2d(&dv, nu, nv, TAU, TAU, 1, 0);
            for i in 0..nu * nv {
                assert!((duv[i] - dvu[i]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn quadrature_reproduces_flat_product_area() {
        let imm =
            make_family(Family::FlatRadiusR2xS1, &Params::new().with("t", 2.0), (64, 64)).unwrap();
        // Area element of the flat product torus is |x_u||x_v| = t.
        let ones = vec![1.0; imm.node_count()];
        let area_el = vec![2.0; imm.node_count()];
        let area = quadrature(&ones, &area_el, &imm).unwrap();
        assert_relative_eq!(area, 8.0 * PI * PI, epsilon = 1e-10);

        let zero = vec![0.0; imm.node_count()];
        assert_eq!(quadrature(&zero, &area_el, &imm).unwrap(), 0.0);

        // Integrating 1/(4 t^2) over the same torus gives pi^2 / 2.
        let field = vec![1.0 / 16.0; imm.node_count()];
        let w = quadrature(&field, &area_el, &imm).unwrap();
        assert_relative_eq!(w, PI * PI / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn quadrature_kills_pure_fourier_modes() {
        let imm = make_family(Family::CliffordS2xS1, &Params::new(), (32, 32)).unwrap();
        let (nu, nv) = imm.resolution();
        let ones = vec![1.0; nu * nv];
        for (k, l) in [(1i64, 0i64), (0, 3), (2, 5), (7, 7)] {
            let mut field = vec![0.0; nu * nv];
            for iu in 0..nu {
                for iv in 0..nv {
                    let u = TAU * iu as f64 / nu as f64;
                    let v = TAU * iv as f64 / nv as f64;
                    field[iu * nv + iv] = (k as f64 * u + l as f64 * v).cos();
                }
            }
            let integral = quadrature(&field, &ones, &imm).unwrap();
            assert!(
                integral.abs() < 1e-12,
                "mode ({k},{l}) integrated to {integral}"
            );
        }
    }

    #[test]
    fn quadrature_rejects_bad_inputs() {
        let imm = make_family(Family::CliffordS2xS1, &Params::new(), (16, 16)).unwrap();
        let short = vec![1.0; 7];
        let ones = vec![1.0; imm.node_count()];
        assert!(matches!(
            quadrature(&short, &ones, &imm),
            Err(Error::ShapeMismatch(_))
        ));
        let mut bad = ones.clone();
        bad[3] = f64::NAN;
        assert!(matches!(
            quadrature(&bad, &ones, &imm),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn geodesic_r4_radii_match_the_radical() {
        let imm = make_family(
            Family::GeodesicR4,
            &Params::new().with("lambda", 0.1).with("mu", 0.1),
            (16, 16),
        )
        .unwrap();
        let q = imm.point(0, 0);
        let r = q[0].hypot(q[1]);
        assert_relative_eq!(r, 2.775_17, epsilon = 1e-4);
        // The defining quartic of a factor geodesic circle.
        let lambda = 0.1;
        let r2 = r * r;
        assert!((lambda * r2 * r2 + (lambda - 1.0) * r2 + 1.0).abs() < 1e-10);
        // Inner branch solves the same quartic.
        let r_minus = conformal_factor_geodesic_radius(0.1, false).unwrap();
        let r2m = r_minus * r_minus;
        assert!((lambda * r2m * r2m + (lambda - 1.0) * r2m + 1.0).abs() < 1e-12);
    }

    #[test]
    fn curve_jet_speed_on_euclidean_circle() {
        let n = 64;
        let points: Vec<[f64; 2]> = (0..n)
            .map(|i| {
                let th = TAU * i as f64 / n as f64;
                [th.cos(), th.sin()]
            })
            .collect();
        let curve = ClosedCurve::new(TAU, points).unwrap();
        let chart = MetricChart::euclidean_plane();
        let jet = curve_jet(&curve, &chart).unwrap();
        for w in jet.speed {
            assert_relative_eq!(w, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn curve_jet_speed_uses_the_chart_metric() {
        // Circle of Euclidean radius 1/2 in the Poincare disk (c = 1):
        // speed per unit angle = 0.5 * 2/(1 - 1/4) = 4/3; equivalently the
        // hyperbolic circumference is 2 pi sinh(ln 3) = 2 pi * 4/3.
        let n = 64;
        let points: Vec<[f64; 2]> = (0..n)
            .map(|i| {
                let th = TAU * i as f64 / n as f64;
                [0.5 * th.cos(), 0.5 * th.sin()]
            })
            .collect();
        let curve = ClosedCurve::new(TAU, points).unwrap();
        let chart = MetricChart::hyperbolic_disk(1.0).unwrap();
        let jet = curve_jet(&curve, &chart).unwrap();
        for w in jet.speed {
            assert_relative_eq!(w, 4.0 / 3.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn degenerate_curve_is_rejected() {
        let points = vec![[0.1, 0.2]; 32];
        let curve = ClosedCurve::new(TAU, points).unwrap();
        let chart = MetricChart::euclidean_plane();
        let err = curve.validate(&chart).unwrap_err();
        assert!(matches!(err, Error::Degenerate(_)));
    }

    #[test]
    fn collapsed_grid_is_rejected_with_node_diagnostic() {
        // All v-rows equal: the grid degenerates to a curve.
        let n = 16;
        let mut points = Vec::new();
        for iu in 0..n {
            let u = TAU * iu as f64 / n as f64;
            for _ in 0..n {
                points.push([u.cos(), u.sin(), 0.0, 0.0]);
            }
        }
        let imm = TorusImmersion::new(n, n, (TAU, TAU), 3, points).unwrap();
        let chart = MetricChart::euclidean3();
        let err = imm.validate(&chart).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("node (0,0)"), "diagnostic was: {msg}");
    }

    #[test]
    fn resolution_validation() {
        assert!(make_family(Family::CliffordS2xS1, &Params::new(), (12, 16)).is_err());
        assert!(make_family(Family::CliffordS2xS1, &Params::new(), (4, 16)).is_err());
        let pts: Vec<[f64; 2]> = vec![[0.0, 0.0]; 4];
        assert!(ClosedCurve::new(TAU, pts).is_err());
    }

    #[test]
    fn product_torus_pairs_curve_with_angle() {
        let n = 32;
        let points: Vec<[f64; 2]> = (0..n)
            .map(|i| {
                let th = TAU * i as f64 / n as f64;
                [0.4 * th.cos(), 0.4 * th.sin()]
            })
            .collect();
        let curve = ClosedCurve::new(TAU, points).unwrap();
        let torus = product_torus(&curve, 64, 16).unwrap();
        assert_eq!(torus.resolution(), (64, 16));
        // Fourier interpolation of a band-limited circle is exact.
        let q = torus.point(16, 3);
        let u = TAU * 16.0 / 64.0;
        assert_relative_eq!(q[0], 0.4 * u.cos(), epsilon = 1e-12);
        assert_relative_eq!(q[2], TAU * 3.0 / 16.0, epsilon = 1e-12);
    }

    #[test]
    fn winding_is_inferred_from_wrapped_angle_channels() {
        // Store the circle-factor angle reduced mod 2*pi with an arbitrary
        // offset, as an imported file might.
        let n = 16;
        let mut points = Vec::new();
        for iu in 0..n {
            let u = TAU * iu as f64 / n as f64;
            for iv in 0..n {
                let v = TAU * iv as f64 / n as f64;
                let phi = (v + 5.0) % TAU;
                points.push([2.0 * u.cos(), 2.0 * u.sin(), phi, 0.0]);
            }
        }
        let raw = TorusImmersion::new(n, n, (TAU, TAU), 3, points).unwrap();
        let chart = metric::catalog_lookup("r2xs1", &Params::new()).unwrap();
        let norm = raw.normalize_angles(&chart).unwrap();
        assert_eq!(norm.winding()[2], [0, 1]);
        let jet = spectral_jet(&norm).unwrap();
        for i in 0..norm.node_count() {
            assert_relative_eq!(jet.xv[i][2], 1.0, epsilon = 1e-10);
            assert!(jet.xvv[i][2].abs() < 1e-9);
        }
    }

    #[test]
    fn random_shapes_are_regular() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let chart = metric::catalog_lookup("sol3", &Params::new()).unwrap();
        for _ in 0..3 {
            let donut = random_donut(&mut rng, (32, 32)).unwrap();
            donut.validate(&chart).unwrap();
        }
        let disk = MetricChart::hyperbolic_disk(1.0).unwrap();
        for _ in 0..5 {
            let curve = random_disk_curve(&mut rng, 128).unwrap();
            curve.validate(&disk).unwrap();
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn torus_file_round_trip(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let imm = random_donut(&mut rng, (16, 16)).unwrap();
            let mut buf = Vec::new();
            write_torus(&imm, &mut buf).unwrap();
            let StoredShape::Torus(back) = read_shape(&buf[..]).unwrap() else {
                panic!("expected torus");
            };
            prop_assert_eq!(back.resolution(), imm.resolution());
            prop_assert_eq!(back.dim(), imm.dim());
            for (a, b) in back.points().iter().zip(imm.points()) {
                for ch in 0..3 {
                    // 17 significant digits round-trip doubles exactly.
                    prop_assert_eq!(a[ch], b[ch]);
                }
            }
        }
    }
}
