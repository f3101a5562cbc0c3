//! The Willmore functional of immersed tori, the bending energy of closed
//! curves, the product-torus link between the two, and closed-form
//! reference values for the built-in families.
//!
//! Two integrand forms are evaluated: the quoted value integrates half the
//! umbilicity deficit (`1/2 rho^2`, needing only first-order frame data),
//! while `|H|^2 - K + Ktilde` is kept as a cross-check that ties together
//! the Gauss equation, the intrinsic curvature and the quadrature.

use crate::error::{Error, Result};
use crate::grid::{
    curve_jet, curve_quadrature, make_family, product_torus, quadrature, ClosedCurve,
    Family, TorusImmersion,
};
use crate::metric::{MetricChart, Params};
use crate::shape::{analyze, AnalysisLevel};
use crate::tensor::metric_dot;
use std::f64::consts::PI;

/// Integrals of the alternative Willmore integrand, term by term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Breakdown {
    /// Integral of `|H|^2`.
    pub h2: f64,
    /// Integral of `-K` (intrinsic Gauss curvature, negated).
    pub neg_k: f64,
    /// Integral of `Ktilde` (ambient tangent-plane curvature).
    pub ktilde: f64,
}

/// Willmore energy of one immersion at one resolution, with its
/// convergence estimate and cross-checks.
#[derive(Debug, Clone)]
pub struct EnergyReport {
    /// The quoted Willmore energy: integral of `1/2 rho^2`.
    pub willmore: f64,
    /// The `|H|^2 - K + Ktilde` form of the same energy.
    pub alt_willmore: f64,
    pub area: f64,
    pub breakdown: Breakdown,
    pub resolution: (usize, usize),
    /// `|W(N) - W(N/2)|`, absent when the halved grid would fall below the
    /// minimum resolution.
    pub richardson_delta: Option<f64>,
    pub max_rho_sq: f64,
    pub max_s: f64,
    pub gauss_residual: f64,
}

impl EnergyReport {
    /// Disagreement of the two integrand forms.
    pub fn two_form_diff(&self) -> f64 {
        (self.willmore - self.alt_willmore).abs()
    }
}

/// The quoted Willmore value alone, from the extrinsic pipeline only.
/// This is the optimizer's objective.
pub fn willmore_value(imm: &TorusImmersion, chart: &MetricChart) -> Result<f64> {
    let geom = analyze(imm, chart, AnalysisLevel::Extrinsic)?;
    let half_rho: Vec<f64> = geom.data.rho_sq.iter().map(|r| 0.5 * r).collect();
    quadrature(&half_rho, &geom.data.area_element, &geom.imm)
}

/// Full Willmore evaluation: both integrand forms, the breakdown, and a
/// Richardson convergence estimate against the halved grid (via the family
/// rebuild when the immersion carries a tag, else by subsampling).
pub fn willmore(imm: &TorusImmersion, chart: &MetricChart) -> Result<EnergyReport> {
    imm.validate(chart)?;
    let report = willmore_single(imm, chart)?;
    let (nu, nv) = imm.resolution();
    let richardson_delta = if nu / 2 >= 8 && nv / 2 >= 8 {
        let coarse = match &imm.family_tag {
            Some(tag) => make_family(tag.family, &tag.params, (nu / 2, nv / 2))?,
            None => imm.subsample()?,
        };
        let coarse_w = willmore_single(&coarse, chart)?.willmore;
        Some((report.willmore - coarse_w).abs())
    } else {
        None
    };
    Ok(EnergyReport {
        richardson_delta,
        ..report
    })
}

fn willmore_single(imm: &TorusImmersion, chart: &MetricChart) -> Result<EnergyReport> {
    let geom = analyze(imm, chart, AnalysisLevel::Full)?;
    let data = &geom.data;
    let count = data.node_count();
    let area_el = &data.area_element;

    let half_rho: Vec<f64> = data.rho_sq.iter().map(|r| 0.5 * r).collect();
    let willmore = quadrature(&half_rho, area_el, &geom.imm)?;

    let h2_field: Vec<f64> = (0..count).map(|i| data.mean_norm_sq(i)).collect();
    let gauss = data.gauss_k.as_ref().unwrap();
    let ktilde = data.ambient_k.as_ref().unwrap();
    let neg_k_field: Vec<f64> = gauss.iter().map(|k| -k).collect();

    let h2 = quadrature(&h2_field, area_el, &geom.imm)?;
    let neg_k = quadrature(&neg_k_field, area_el, &geom.imm)?;
    let ktilde_int = quadrature(ktilde, area_el, &geom.imm)?;
    let ones = vec![1.0; count];
    let area = quadrature(&ones, area_el, &geom.imm)?;

    Ok(EnergyReport {
        willmore,
        alt_willmore: h2 + neg_k + ktilde_int,
        area,
        breakdown: Breakdown {
            h2,
            neg_k,
            ktilde: ktilde_int,
        },
        resolution: imm.resolution(),
        richardson_delta: None,
        max_rho_sq: data.max_rho_sq(),
        max_s: data.max_s(),
        gauss_residual: crate::shape::gauss_equation_residual(data)?,
    })
}

/// Squared geodesic curvature per node from the covariant acceleration of
/// the curve: `k^2 = (|A|^2 |T|^2 - <A,T>^2) / |T|^6` with
/// `A = gamma'' + Gamma(gamma', gamma')`.
pub fn curve_curvature_sq(curve: &ClosedCurve, chart: &MetricChart) -> Result<Vec<f64>> {
    let jet = curve_jet(curve, chart)?;
    let n = curve.resolution();
    let mut out = vec![0.0; n];
    for i in 0..n {
        let q = [curve.points()[i][0], curve.points()[i][1], 0.0, 0.0];
        let g = chart.metric(&q)?;
        let gamma = chart.christoffels(&q)?;
        let t = [jet.d1[i][0], jet.d1[i][1], 0.0, 0.0];
        let mut a = [jet.d2[i][0], jet.d2[i][1], 0.0, 0.0];
        for idx in 0..2 {
            let mut acc = 0.0;
            for b in 0..2 {
                for c in 0..2 {
                    acc += gamma[idx][b][c] * t[b] * t[c];
                }
            }
            a[idx] += acc;
        }
        let tt = metric_dot(&g, &t, &t, 2);
        if tt <= 1e-16 {
            return Err(Error::Degenerate(format!(
                "zero-speed curve node {i} in curvature evaluation"
            )));
        }
        let aa = metric_dot(&g, &a, &a, 2);
        let at = metric_dot(&g, &a, &t, 2);
        out[i] = ((aa * tt - at * at) / tt.powi(3)).max(0.0);
    }
    Ok(out)
}

/// Bending energy of a closed curve in a 2-manifold chart:
/// `(integral of k^2 ds, length)`.
pub fn bending_energy(curve: &ClosedCurve, chart2d: &MetricChart) -> Result<(f64, f64)> {
    curve.validate(chart2d)?;
    let jet = curve_jet(curve, chart2d)?;
    let k2 = curve_curvature_sq(curve, chart2d)?;
    let energy = curve_quadrature(&k2, &jet.speed, curve)?;
    let ones = vec![1.0; curve.resolution()];
    let length = curve_quadrature(&ones, &jet.speed, curve)?;
    Ok((energy, length))
}

/// Willmore evaluation of the product torus of a disk curve with the
/// circle factor, reported against `pi/2` times the curve's bending
/// energy. The two agree for every smooth curve.
#[derive(Debug, Clone)]
pub struct CurveTorusReport {
    pub energy: EnergyReport,
    /// Integral of `k^2 ds` of the generating curve.
    pub bending: f64,
    pub half_pi_bending: f64,
    /// `|W - (pi/2) * bending|`.
    pub difference: f64,
}

/// Builds `gamma x S^1` in the product chart and evaluates its Willmore
/// energy alongside the bending identity.
pub fn curve_to_torus_energy(
    curve: &ClosedCurve,
    chart: &MetricChart,
    resolution: (usize, usize),
) -> Result<CurveTorusReport> {
    if chart.name() != "h2xs1" {
        return Err(Error::Dimension(format!(
            "curve-product tori live in the h2xs1 chart, got `{}`",
            chart.name()
        )));
    }
    let c = chart.params().get_or("c", 1.0);
    let disk = MetricChart::hyperbolic_disk(c)?;
    let resampled = curve.resample(resolution.0)?;
    let (bending, _len) = bending_energy(&resampled, &disk)?;
    let torus = product_torus(curve, resolution.0, resolution.1)?;
    let energy = willmore(&torus, chart)?;
    let half_pi_bending = 0.5 * PI * bending;
    let difference = (energy.willmore - half_pi_bending).abs();
    Ok(CurveTorusReport {
        energy,
        bending,
        half_pi_bending,
        difference,
    })
}

/// Analytic reference value of the Willmore energy for a built-in family.
///
/// * `clifford-s2xs1`, `geodesic-r4`: totally geodesic, zero.
/// * `flat-rt-r2xs1`: `pi^2 / t`.
/// * `circle-h2xs1`: `pi^2 sqrt(c) cosh^2(a)/sinh(a)` with `a = sqrt(c) r`,
///   minimized to `2 pi^2 sqrt(c)` at `sinh(a) = 1`.
/// * `hopf-berger`: `2 pi^2 t^3` for the fiber-rescaled round metric: the
///   great-circle Hopf torus has `|H| = 0`, `S = 2 t^2` and area
///   `2 pi^2 t`, so the energy is `(S/2) * area`.
///
/// `curve-product` has no closed form.
pub fn closed_form(family: Family, params: &Params) -> Option<f64> {
    match family {
        Family::CliffordS2xS1 | Family::GeodesicR4 => Some(0.0),
        Family::FlatRadiusR2xS1 => {
            let t = params.get_or("t", 1.0);
            Some(PI * PI / t)
        }
        Family::CircleH2xS1 => {
            let c = params.get_or("c", 1.0);
            let r = params.get_or("r", 1f64.asinh() / c.sqrt());
            let a = c.sqrt() * r;
            Some(PI * PI * c.sqrt() * a.cosh().powi(2) / a.sinh())
        }
        Family::HopfBerger => {
            let t = params.get_or("t", 1.0);
            Some(2.0 * PI * PI * t.powi(3))
        }
        Family::CurveProduct => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{random_disk_curve, revolution_torus};
    use crate::metric::catalog_lookup;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::TAU;

    fn family_battery() -> Vec<(Family, Params)> {
        vec![
            (Family::CliffordS2xS1, Params::new()),
            (Family::FlatRadiusR2xS1, Params::new().with("t", 2.0)),
            (Family::CircleH2xS1, Params::new().with("c", 1.0)),
            (
                Family::GeodesicR4,
                Params::new().with("lambda", 0.1).with("mu", 0.1),
            ),
            (Family::HopfBerger, Params::new().with("t", 0.8)),
        ]
    }

    #[test]
    fn clifford_torus_has_zero_energy() {
        let chart = catalog_lookup("s2xs1", &Params::new()).unwrap();
        let imm = make_family(Family::CliffordS2xS1, &Params::new(), (64, 64)).unwrap();
        let report = willmore(&imm, &chart).unwrap();
        assert!(report.willmore.abs() < 1e-12);
        assert!(report.alt_willmore.abs() < 1e-9);
        assert!(report.max_rho_sq < 1e-12);
        assert!(report.max_s < 1e-12);
    }

    #[test]
    fn flat_product_family_matches_closed_form() {
        let chart = catalog_lookup("r2xs1", &Params::new()).unwrap();
        for t in [1.0, 2.0, 5.0, 10.0] {
            let params = Params::new().with("t", t);
            let imm = make_family(Family::FlatRadiusR2xS1, &params, (64, 64)).unwrap();
            let report = willmore(&imm, &chart).unwrap();
            let expect = closed_form(Family::FlatRadiusR2xS1, &params).unwrap();
            assert!(
                (report.willmore - expect).abs() < 1e-9,
                "t = {t}: W = {} vs {expect}",
                report.willmore
            );
            // Family law: W * t = pi^2.
            assert!((report.willmore * t - PI * PI).abs() < 1e-8);
            // Area of the flat product torus.
            assert_relative_eq!(report.area, 4.0 * PI * PI * t, epsilon = 1e-9);
        }
    }

    #[test]
    fn geodesic_circle_torus_reaches_the_product_minimum() {
        for c in [1.0, 2.0, 4.0] {
            let params = Params::new().with("c", c);
            let chart = Family::CircleH2xS1.chart(&params).unwrap();
            let imm = make_family(Family::CircleH2xS1, &params, (64, 64)).unwrap();
            let report = willmore(&imm, &chart).unwrap();
            let expect = 2.0 * PI * PI * c.sqrt();
            assert!(
                (report.willmore - expect).abs() < 1e-6,
                "c = {c}: W = {} vs {expect}",
                report.willmore
            );
            assert_relative_eq!(
                closed_form(Family::CircleH2xS1, &params).unwrap(),
                expect,
                epsilon = 1e-12
            );
        }
    }

    /// Closed-form fundamental forms of the great-circle Hopf torus in the
    /// fiber-rescaled round metric, written out independently of the chart
    /// code. Metric components on the torus locus (eta = pi/4):
    /// `E = G = (1+t^2)/4`, `F = (t^2-1)/4`, normal projection of the
    /// covariant Hessian `b = diag(t^2/2, -t^2/2)`.
    fn berger_hopf_oracle(t: f64) -> f64 {
        let e = (1.0 + t * t) / 4.0;
        let f = (t * t - 1.0) / 4.0;
        let det_i = e * e - f * f;
        assert!((det_i - t * t / 4.0).abs() < 1e-14);
        let b = [t * t / 2.0, 0.0, -t * t / 2.0];
        // Shape operator A = I^{-1} b.
        let inv = [e / det_i, -f / det_i, e / det_i];
        let a11 = inv[0] * b[0];
        let a12 = inv[1] * b[2];
        let a21 = inv[1] * b[0];
        let a22 = inv[2] * b[2];
        let mean = 0.5 * (a11 + a22);
        assert!(mean.abs() < 1e-14, "the Hopf torus is minimal");
        let s = a11 * a11 + a12 * a21 + a21 * a12 + a22 * a22;
        // Cross-check against the fiber/horizontal frame where the form is
        // [[0, t], [t, 0]]: S = 2 t^2.
        assert!((s - 2.0 * t * t).abs() < 1e-12);
        let area = 4.0 * PI * PI * det_i.sqrt();
        0.5 * s * area
    }

    #[test]
    fn berger_hopf_closed_form_is_confirmed_by_the_oracle() {
        for t in [0.25, 0.5, 0.8, 1.0, 1.7] {
            let oracle = berger_hopf_oracle(t);
            let table = closed_form(Family::HopfBerger, &Params::new().with("t", t)).unwrap();
            assert_relative_eq!(oracle, table, max_relative = 1e-14);
            assert_relative_eq!(oracle, 2.0 * PI * PI * t.powi(3), max_relative = 1e-14);
        }
        // At t = 1 the round value appears.
        assert_relative_eq!(
            berger_hopf_oracle(1.0),
            2.0 * PI * PI,
            max_relative = 1e-14
        );
    }

    #[test]
    fn berger_hopf_numeric_energy_matches_the_oracle() {
        for t in [0.25, 0.5, 1.0] {
            let params = Params::new().with("t", t);
            let chart = Family::HopfBerger.chart(&params).unwrap();
            let imm = make_family(Family::HopfBerger, &params, (32, 32)).unwrap();
            let report = willmore(&imm, &chart).unwrap();
            let oracle = berger_hopf_oracle(t);
            assert!(
                (report.willmore - oracle).abs() < 1e-9,
                "t = {t}: W = {} vs oracle {oracle}",
                report.willmore
            );
        }
    }

    #[test]
    fn two_integrand_forms_agree_on_families_and_generic_shapes() {
        for (family, params) in family_battery() {
            let chart = family.chart(&params).unwrap();
            let imm = make_family(family, &params, (64, 64)).unwrap();
            let report = willmore(&imm, &chart).unwrap();
            assert!(
                report.two_form_diff() < 1e-8,
                "{}: rho-form {} vs alt {}",
                family.name(),
                report.willmore,
                report.alt_willmore
            );
            assert!(report.willmore >= -1e-10);
        }
        // A generic shape without any symmetry.
        let chart = catalog_lookup("sol3", &Params::new()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let donut = crate::grid::random_donut(&mut rng, (64, 64)).unwrap();
        let report = willmore(&donut, &chart).unwrap();
        assert!(report.two_form_diff() < 1e-7, "{}", report.two_form_diff());
        assert!(report.willmore > 1e-4);
    }

    #[test]
    fn energy_vanishes_exactly_when_umbilicity_deficit_does() {
        for (family, params) in family_battery() {
            let chart = family.chart(&params).unwrap();
            let imm = make_family(family, &params, (32, 32)).unwrap();
            let report = willmore(&imm, &chart).unwrap();
            let flat = report.max_rho_sq < 1e-8;
            let zero_energy = report.willmore < 1e-8;
            assert_eq!(
                flat, zero_energy,
                "{}: max rho^2 = {}, W = {}",
                family.name(),
                report.max_rho_sq,
                report.willmore
            );
        }
    }

    #[test]
    fn conformal_scaling_leaves_energies_unchanged() {
        for (family, params) in family_battery() {
            let chart = family.chart(&params).unwrap();
            let imm = make_family(family, &params, (32, 32)).unwrap();
            let base = willmore_value(&imm, &chart).unwrap();
            for factor in [0.25, 9.0] {
                let scaled = chart.scaled(factor).unwrap();
                let w = willmore_value(&imm, &scaled).unwrap();
                let denom = base.abs().max(1.0);
                assert!(
                    (w - base).abs() / denom < 1e-9,
                    "{} scale {factor}: {w} vs {base}",
                    family.name()
                );
            }
        }
    }

    #[test]
    fn spectral_convergence_between_grid_levels() {
        for (family, params) in family_battery() {
            let chart = family.chart(&params).unwrap();
            let fine = make_family(family, &params, (64, 64)).unwrap();
            let report = willmore(&fine, &chart).unwrap();
            let delta = report.richardson_delta.unwrap();
            let denom = report.willmore.abs().max(1.0);
            assert!(
                delta / denom < 1e-9,
                "{}: richardson delta {delta}",
                family.name()
            );
        }
    }

    #[test]
    fn bending_energy_of_euclidean_circle() {
        let chart = MetricChart::euclidean_plane();
        for r in [0.5, 1.0, 2.0] {
            let n = 128;
            let points: Vec<[f64; 2]> = (0..n)
                .map(|i| {
                    let th = TAU * i as f64 / n as f64;
                    [r * th.cos(), r * th.sin()]
                })
                .collect();
            let curve = ClosedCurve::new(TAU, points).unwrap();
            let (energy, length) = bending_energy(&curve, &chart).unwrap();
            assert_relative_eq!(energy, TAU / r, epsilon = 1e-10);
            assert_relative_eq!(length, TAU * r, epsilon = 1e-10);
        }
    }

    #[test]
    fn bending_energy_of_geodesic_circles_matches_closed_form() {
        let chart = MetricChart::hyperbolic_disk(1.0).unwrap();
        for rho in [0.5, 1f64.asinh(), 1.3] {
            let n = 128;
            let euclid = (rho / 2.0).tanh();
            let points: Vec<[f64; 2]> = (0..n)
                .map(|i| {
                    let th = TAU * i as f64 / n as f64;
                    [euclid * th.cos(), euclid * th.sin()]
                })
                .collect();
            let curve = ClosedCurve::new(TAU, points).unwrap();
            let (energy, length) = bending_energy(&curve, &chart).unwrap();
            let expect = TAU * rho.cosh().powi(2) / rho.sinh();
            assert!(
                (energy - expect).abs() < 1e-8,
                "rho = {rho}: energy {energy} vs {expect}"
            );
            assert_relative_eq!(length, TAU * rho.sinh(), epsilon = 1e-10);
        }
        // The closed form is minimized exactly at sinh(rho) = 1.
        let f = |rho: f64| TAU * rho.cosh().powi(2) / rho.sinh();
        let opt = 1f64.asinh();
        assert!((f(opt) - 4.0 * PI).abs() < 1e-12);
        assert!(f(opt - 0.05) > f(opt) && f(opt + 0.05) > f(opt));
    }

    #[test]
    fn product_torus_energy_equals_half_pi_bending() {
        let chart = catalog_lookup("h2xs1", &Params::new().with("c", 1.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..5 {
            let curve = random_disk_curve(&mut rng, 256).unwrap();
            let report = curve_to_torus_energy(&curve, &chart, (256, 32)).unwrap();
            assert!(
                report.difference < 1e-8,
                "identity violated: W = {}, (pi/2) bending = {}",
                report.energy.willmore,
                report.half_pi_bending
            );
        }
    }

    #[test]
    fn optimal_circle_product_torus_for_scaled_curvature() {
        // c = 4: the optimal geodesic circle gives W = 2 pi^2 sqrt(4).
        let c = 4.0;
        let chart = catalog_lookup("h2xs1", &Params::new().with("c", c)).unwrap();
        let r = 1f64.asinh() / c.sqrt();
        let euclid = crate::grid::poincare_circle_euclidean_radius(c, r);
        let n = 128;
        let points: Vec<[f64; 2]> = (0..n)
            .map(|i| {
                let th = TAU * i as f64 / n as f64;
                [euclid * th.cos(), euclid * th.sin()]
            })
            .collect();
        let curve = ClosedCurve::new(TAU, points).unwrap();
        let report = curve_to_torus_energy(&curve, &chart, (128, 16)).unwrap();
        assert!((report.energy.willmore - 4.0 * PI * PI).abs() < 1e-6);
        assert!(report.difference < 1e-8);
    }

    #[test]
    fn langer_singer_bound_holds_on_sampled_curves() {
        let disk = MetricChart::hyperbolic_disk(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..5 {
            let curve = random_disk_curve(&mut rng, 256).unwrap();
            let (energy, _) = bending_energy(&curve, &disk).unwrap();
            assert!(energy >= 4.0 * PI - 1e-6, "bending {energy} below the bound");
        }
    }

    #[test]
    fn revolution_torus_energy_is_positive_and_consistent() {
        let chart = MetricChart::euclidean3();
        let imm = revolution_torus(2.0, 1.0, (64, 64)).unwrap();
        let report = willmore(&imm, &chart).unwrap();
        // In flat ambients the energy reduces to the integral of H^2
        // over the torus, which for R/r = 2 is pi^2 R^2 / (r sqrt(R^2-r^2)).
        let expect = PI * PI * 4.0 / 3f64.sqrt();
        assert!(
            (report.willmore - expect).abs() < 1e-8,
            "W = {} vs {expect}",
            report.willmore
        );
        assert!(report.two_form_diff() < 1e-8);
    }
}
