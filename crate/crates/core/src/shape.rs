//! Pointwise extrinsic and intrinsic geometry of an immersed torus:
//! adapted orthonormal frames, first and second fundamental forms, mean
//! curvature, umbilicity deficit, intrinsic Gauss curvature, and the
//! ambient sectional curvature of the tangent plane.

use crate::error::{Error, Result};
use crate::grid::{deriv_2d, spectral_jet, JetData, TorusImmersion};
use crate::metric::{riemann_plane, MetricChart};
use crate::tensor::*;

/// Orthonormal adapted frames along the surface: two tangent vectors
/// spanning the image of `(x_u, x_v)` and `n - 2` normal vectors, all
/// orthonormal in the ambient metric.
#[derive(Debug, Clone)]
pub struct FrameField {
    pub tangent: Vec<[Vec4; 2]>,
    pub normal: Vec<[Vec4; 2]>,
    n_normals: usize,
}

impl FrameField {
    pub fn normal_count(&self) -> usize {
        self.n_normals
    }

    /// Rotates the tangent pair by a fixed angle. Frame scalars must not
    /// change under this.
    pub fn rotate_tangent(&self, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        let mut out = self.clone();
        for pair in &mut out.tangent {
            let e1 = pair[0];
            let e2 = pair[1];
            for a in 0..MAX_DIM {
                pair[0][a] = c * e1[a] + s * e2[a];
                pair[1][a] = -s * e1[a] + c * e2[a];
            }
        }
        out
    }

    /// Flips the sign of one normal vector.
    pub fn flip_normal(&self, which: usize) -> Self {
        let mut out = self.clone();
        for normals in &mut out.normal {
            for x in normals[which].iter_mut() {
                *x = -*x;
            }
        }
        out
    }
}

/// Per-node shape quantities. The second fundamental form is stored both in
/// the coordinate frame (`b_uu, b_uv, b_vv` per normal) and in the
/// orthonormal tangent frame (`h11, h12, h22` per normal).
#[derive(Debug, Clone)]
pub struct ShapeData {
    pub nu: usize,
    pub nv: usize,
    pub n_normals: usize,
    /// Induced metric in parameter coordinates: `(E, F, G)` per node.
    pub first: Vec<[f64; 3]>,
    /// `sqrt(E G - F^2)` per node.
    pub area_element: Vec<f64>,
    /// Coordinate-frame second fundamental form per node and normal.
    pub b_coord: Vec<[[f64; 3]; 2]>,
    /// Orthonormal-frame second fundamental form per node and normal.
    pub second: Vec<[[f64; 3]; 2]>,
    /// Mean curvature components per node and normal.
    pub mean: Vec<[f64; 2]>,
    /// Norm square of the second fundamental form per node.
    pub s: Vec<f64>,
    /// Umbilicity deficit per node, from the trace-free part of the second
    /// fundamental form (non-negative by construction).
    pub rho_sq: Vec<f64>,
    /// Intrinsic Gauss curvature of the induced metric (full analysis only).
    pub gauss_k: Option<Vec<f64>>,
    /// Ambient sectional curvature of the tangent plane (full analysis only).
    pub ambient_k: Option<Vec<f64>>,
}

impl ShapeData {
    pub fn node_count(&self) -> usize {
        self.nu * self.nv
    }

    pub fn max_rho_sq(&self) -> f64 {
        self.rho_sq.iter().cloned().fold(0.0, f64::max)
    }

    pub fn max_s(&self) -> f64 {
        self.s.iter().cloned().fold(0.0, f64::max)
    }

    /// `|H|^2` at a node.
    pub fn mean_norm_sq(&self, node: usize) -> f64 {
        let h = &self.mean[node];
        (0..self.n_normals).map(|a| h[a] * h[a]).sum()
    }

    /// `sum_a det(h^a)` at a node.
    pub fn det_sum(&self, node: usize) -> f64 {
        (0..self.n_normals)
            .map(|a| {
                let h = &self.second[node][a];
                h[0] * h[2] - h[1] * h[1]
            })
            .sum()
    }
}

/// How much of the pipeline to run: `Extrinsic` stops after the second
/// fundamental form (enough for the quoted energy), `Full` adds intrinsic
/// Gauss curvature and the ambient tangent-plane curvature.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnalysisLevel {
    Extrinsic,
    Full,
}

/// Everything the downstream consumers need, with the angle-normalized
/// immersion and its jets retained.
pub struct SurfaceGeometry {
    pub imm: TorusImmersion,
    pub jet: JetData,
    pub frames: FrameField,
    pub data: ShapeData,
}

/// Gram-Schmidt frames in the ambient metric: `e1` along `x_u`, `e2` from
/// `x_v`, normals seeded from coordinate axes in index order (skipping
/// near-parallel seeds). For 3-dimensional ambients the normal sign is
/// fixed by positive frame orientation, making the field smooth across the
/// grid.
pub fn build_frames(
    imm: &TorusImmersion,
    jet: &JetData,
    chart: &MetricChart,
) -> Result<FrameField> {
    let n = chart.dim();
    let count = imm.node_count();
    let n_normals = n - 2;
    let mut tangent = vec![[ZERO_VEC; 2]; count];
    let mut normal = vec![[ZERO_VEC; 2]; count];

    for idx in 0..count {
        let p = &imm.points()[idx];
        let g = chart.metric(p)?;
        let mut basis: Vec<Vec4> = Vec::with_capacity(n);

        let push_unit = |basis: &mut Vec<Vec4>, seed: &Vec4| -> Option<Vec4> {
            let mut w = *seed;
            for e in basis.iter() {
                let coeff = metric_dot(&g, &w, e, n);
                axpy(&mut w, -coeff, e, n);
            }
            let norm = metric_norm(&g, &w, n);
            if norm < 1e-6 {
                return None;
            }
            let unit = scale(&w, 1.0 / norm, n);
            basis.push(unit);
            Some(unit)
        };

        let e1 = push_unit(&mut basis, &jet.xu[idx]).ok_or_else(|| {
            Error::Degenerate(format!("vanishing x_u at node {idx}"))
        })?;
        let e2 = push_unit(&mut basis, &jet.xv[idx]).ok_or_else(|| {
            Error::Degenerate(format!("tangent vectors parallel at node {idx}"))
        })?;
        tangent[idx] = [e1, e2];

        let mut found = 0;
        for axis in 0..n {
            if found == n_normals {
                break;
            }
            let mut seed = ZERO_VEC;
            seed[axis] = 1.0;
            if let Some(e) = push_unit(&mut basis, &seed) {
                normal[idx][found] = e;
                found += 1;
            }
        }
        if found != n_normals {
            return Err(Error::Degenerate(format!(
                "could not complete the normal frame at node {idx}"
            )));
        }

        // Fix the orientation of the last frame vector so the full frame is
        // positively oriented; for n = 3 this makes the normal field smooth.
        let mut mat = ZERO_MAT;
        for (i, e) in basis.iter().enumerate() {
            mat[i] = *e;
        }
        if det(&mat, n) < 0.0 {
            let last = n_normals - 1;
            for x in normal[idx][last].iter_mut() {
                *x = -*x;
            }
        }
    }

    Ok(FrameField {
        tangent,
        normal,
        n_normals,
    })
}

/// Second fundamental form and mean curvature vector.
///
/// The ambient covariant Hessian of the immersion in coordinates is
/// `D_ij = x_ij + Gamma(x_i, x_j)`; its normal projections give the
/// coordinate-frame form, which is then expressed in the orthonormal
/// tangent frame by the linear change of basis from `(x_u, x_v)`.
pub fn second_fundamental_form(
    imm: &TorusImmersion,
    jet: &JetData,
    frames: &FrameField,
    chart: &MetricChart,
) -> Result<ShapeData> {
    let n = chart.dim();
    let (nu, nv) = imm.resolution();
    let count = imm.node_count();
    let n_normals = frames.normal_count();

    let mut data = ShapeData {
        nu,
        nv,
        n_normals,
        first: vec![[0.0; 3]; count],
        area_element: vec![0.0; count],
        b_coord: vec![[[0.0; 3]; 2]; count],
        second: vec![[[0.0; 3]; 2]; count],
        mean: vec![[0.0; 2]; count],
        s: vec![0.0; count],
        rho_sq: vec![0.0; count],
        gauss_k: None,
        ambient_k: None,
    };

    for idx in 0..count {
        let p = &imm.points()[idx];
        let g = chart.metric(p)?;
        let gamma = chart.christoffels(p)?;

        let xu = &jet.xu[idx];
        let xv = &jet.xv[idx];
        let e = metric_dot(&g, xu, xu, n);
        let f = metric_dot(&g, xu, xv, n);
        let gg = metric_dot(&g, xv, xv, n);
        let gram = e * gg - f * f;
        if gram <= 1e-10 {
            return Err(Error::Degenerate(format!(
                "degenerate induced metric at node {idx}"
            )));
        }
        data.first[idx] = [e, f, gg];
        data.area_element[idx] = gram.sqrt();

        // Covariant second derivatives D_uu, D_uv, D_vv.
        let mut d2 = [jet.xuu[idx], jet.xuv[idx], jet.xvv[idx]];
        let pairs = [(xu, xu), (xu, xv), (xv, xv)];
        for (slot, (ti, tj)) in pairs.iter().enumerate() {
            for a in 0..n {
                let mut acc = 0.0;
                for b in 0..n {
                    for c in 0..n {
                        acc += gamma[a][b][c] * ti[b] * tj[c];
                    }
                }
                d2[slot][a] += acc;
            }
        }

        // Coordinate-frame projections onto each normal.
        for alpha in 0..n_normals {
            let nrm = &frames.normal[idx][alpha];
            for slot in 0..3 {
                data.b_coord[idx][alpha][slot] = metric_dot(&g, &d2[slot], nrm, n);
            }
        }

        // Change of basis to the orthonormal tangent frame: solve
        // [E F; F G] c = [<e_i, x_u>; <e_i, x_v>] per frame vector.
        let mut coeff = [[0.0f64; 2]; 2];
        for (i, ei) in frames.tangent[idx].iter().enumerate() {
            let r0 = metric_dot(&g, ei, xu, n);
            let r1 = metric_dot(&g, ei, xv, n);
            coeff[i][0] = (gg * r0 - f * r1) / gram;
            coeff[i][1] = (e * r1 - f * r0) / gram;
        }
        let b_at = |b: &[f64; 3], x: &[f64; 2], y: &[f64; 2]| {
            b[0] * x[0] * y[0] + b[1] * (x[0] * y[1] + x[1] * y[0]) + b[2] * x[1] * y[1]
        };

        let mut s_total = 0.0;
        let mut rho_total = 0.0;
        for alpha in 0..n_normals {
            let b = &data.b_coord[idx][alpha];
            let h11 = b_at(b, &coeff[0], &coeff[0]);
            let h12 = b_at(b, &coeff[0], &coeff[1]);
            let h22 = b_at(b, &coeff[1], &coeff[1]);
            data.second[idx][alpha] = [h11, h12, h22];
            data.mean[idx][alpha] = 0.5 * (h11 + h22);
            s_total += h11 * h11 + 2.0 * h12 * h12 + h22 * h22;
            rho_total += 0.5 * (h11 - h22) * (h11 - h22) + 2.0 * h12 * h12;
        }
        data.s[idx] = s_total;
        data.rho_sq[idx] = rho_total;
    }

    Ok(data)
}

/// Umbilicity deficit per node together with its grid maximum.
pub fn umbilicity_deficit(data: &ShapeData) -> (&[f64], f64) {
    (&data.rho_sq, data.max_rho_sq())
}

/// Intrinsic Gauss curvature of the induced metric via the Brioschi
/// formula, with spectral derivatives of the metric components. Independent
/// of the second fundamental form, so the Gauss-equation residual is a
/// genuine cross-check of the pipeline.
pub fn gauss_curvature_intrinsic(
    imm: &TorusImmersion,
    first: &[[f64; 3]],
) -> Result<Vec<f64>> {
    let (nu, nv) = imm.resolution();
    let (pu, pv) = imm.periods();
    let count = imm.node_count();
    let e: Vec<f64> = first.iter().map(|x| x[0]).collect();
    let f: Vec<f64> = first.iter().map(|x| x[1]).collect();
    let g: Vec<f64> = first.iter().map(|x| x[2]).collect();

    let e_u = deriv_2d(&e, nu, nv, pu, pv, 1, 0);
    let e_v = deriv_2d(&e, nu, nv, pu, pv, 0, 1);
    let e_vv = deriv_2d(&e, nu, nv, pu, pv, 0, 2);
    let f_u = deriv_2d(&f, nu, nv, pu, pv, 1, 0);
    let f_v = deriv_2d(&f, nu, nv, pu, pv, 0, 1);
    let f_uv = deriv_2d(&f_u, nu, nv, pu, pv, 0, 1);
    let g_u = deriv_2d(&g, nu, nv, pu, pv, 1, 0);
    let g_v = deriv_2d(&g, nu, nv, pu, pv, 0, 1);
    let g_uu = deriv_2d(&g, nu, nv, pu, pv, 2, 0);

    let mut k = vec![0.0; count];
    for i in 0..count {
        let den = e[i] * g[i] - f[i] * f[i];
        if den <= 1e-12 {
            return Err(Error::Degenerate(format!(
                "degenerate induced metric at node {i}"
            )));
        }
        let mut m1 = ZERO_MAT;
        m1[0] = [
            -0.5 * e_vv[i] + f_uv[i] - 0.5 * g_uu[i],
            0.5 * e_u[i],
            f_u[i] - 0.5 * e_v[i],
            0.0,
        ];
        m1[1] = [f_v[i] - 0.5 * g_u[i], e[i], f[i], 0.0];
        m1[2] = [0.5 * g_v[i], f[i], g[i], 0.0];
        let mut m2 = ZERO_MAT;
        m2[0] = [0.0, 0.5 * e_v[i], 0.5 * g_u[i], 0.0];
        m2[1] = [0.5 * e_v[i], e[i], f[i], 0.0];
        m2[2] = [0.5 * g_u[i], f[i], g[i], 0.0];
        k[i] = (det(&m1, 3) - det(&m2, 3)) / (den * den);
    }
    Ok(k)
}

/// Ambient sectional curvature of the tangent plane, per node.
pub fn ambient_tangent_curvature(
    imm: &TorusImmersion,
    jet: &JetData,
    first: &[[f64; 3]],
    chart: &MetricChart,
) -> Result<Vec<f64>> {
    let n = chart.dim();
    let count = imm.node_count();
    let mut out = vec![0.0; count];
    for idx in 0..count {
        let r = chart.riemann(&imm.points()[idx])?;
        let [e, f, g] = first[idx];
        let gram = e * g - f * f;
        out[idx] = riemann_plane(&r, &jet.xu[idx], &jet.xv[idx], n) / gram;
    }
    Ok(out)
}

/// Maximum over nodes of `|K - Ktilde - sum_a det(h^a)|`: the primary
/// cross-validation of the whole pipeline.
pub fn gauss_equation_residual(data: &ShapeData) -> Result<f64> {
    let (Some(gauss), Some(ambient)) = (&data.gauss_k, &data.ambient_k) else {
        return Err(Error::ShapeMismatch(
            "gauss_equation_residual needs a full analysis".into(),
        ));
    };
    let mut worst: f64 = 0.0;
    for i in 0..data.node_count() {
        let r = gauss[i] - ambient[i] - data.det_sum(i);
        worst = worst.max(r.abs());
    }
    Ok(worst)
}

/// Runs jets, frames and the requested level of shape analysis.
pub fn analyze(
    imm: &TorusImmersion,
    chart: &MetricChart,
    level: AnalysisLevel,
) -> Result<SurfaceGeometry> {
    let imm = imm.normalize_angles(chart)?;
    let jet = spectral_jet(&imm)?;
    let frames = build_frames(&imm, &jet, chart)?;
    let mut data = second_fundamental_form(&imm, &jet, &frames, chart)?;
    if level == AnalysisLevel::Full {
        data.gauss_k = Some(gauss_curvature_intrinsic(&imm, &data.first)?);
        data.ambient_k = Some(ambient_tangent_curvature(&imm, &jet, &data.first, chart)?);
    }
    Ok(SurfaceGeometry {
        imm,
        jet,
        frames,
        data,
    })
}

/// Surface classification by the size of the second fundamental form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurfaceClass {
    TotallyGeodesic,
    TotallyUmbilic,
    Generic,
}

impl SurfaceClass {
    pub fn label(&self) -> &'static str {
        match self {
            SurfaceClass::TotallyGeodesic => "totally-geodesic",
            SurfaceClass::TotallyUmbilic => "totally-umbilic",
            SurfaceClass::Generic => "generic",
        }
    }
}

/// `TotallyUmbilic` when `max rho^2 < 1e-8`, additionally `TotallyGeodesic`
/// when `max S < 1e-8`.
pub fn classify(data: &ShapeData) -> SurfaceClass {
    if data.max_rho_sq() < 1e-8 {
        if data.max_s() < 1e-8 {
            SurfaceClass::TotallyGeodesic
        } else {
            SurfaceClass::TotallyUmbilic
        }
    } else {
        SurfaceClass::Generic
    }
}

/// CSV export: one row per node with parameters, the orthonormal second
/// fundamental form per normal, and the derived scalars.
pub fn shape_csv(geom: &SurfaceGeometry) -> Result<String> {
    let data = &geom.data;
    let (nu, nv) = (data.nu, data.nv);
    let (pu, pv) = geom.imm.periods();
    let mut out = String::new();
    let mut header = vec!["u".to_string(), "v".to_string()];
    for alpha in 0..data.n_normals {
        let tag = if data.n_normals == 1 {
            String::new()
        } else {
            format!("_{}", alpha + 1)
        };
        header.push(format!("h11{tag}"));
        header.push(format!("h12{tag}"));
        header.push(format!("h22{tag}"));
    }
    header.extend(
        ["H_norm", "S", "rho_sq", "K", "Ktilde", "gauss_residual"]
            .iter()
            .map(|s| s.to_string()),
    );
    out.push_str(&header.join(","));
    out.push('\n');

    let gauss = data
        .gauss_k
        .as_ref()
        .ok_or_else(|| Error::ShapeMismatch("shape_csv needs a full analysis".into()))?;
    let ambient = data.ambient_k.as_ref().unwrap();

    let fmt = |x: f64| format!("{x:.16e}");
    for iu in 0..nu {
        for iv in 0..nv {
            let i = iu * nv + iv;
            let mut row = vec![
                fmt(pu * iu as f64 / nu as f64),
                fmt(pv * iv as f64 / nv as f64),
            ];
            for alpha in 0..data.n_normals {
                let h = &data.second[i][alpha];
                row.push(fmt(h[0]));
                row.push(fmt(h[1]));
                row.push(fmt(h[2]));
            }
            row.push(fmt(data.mean_norm_sq(i).sqrt()));
            row.push(fmt(data.s[i]));
            row.push(fmt(data.rho_sq[i]));
            row.push(fmt(gauss[i]));
            row.push(fmt(ambient[i]));
            row.push(fmt(gauss[i] - ambient[i] - data.det_sum(i)));
            out.push_str(&row.join(","));
            out.push('\n');
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_family, revolution_torus, Family, TorusImmersion};
    use crate::metric::{catalog_lookup, MetricChart, Params};
    use approx::assert_relative_eq;
    use std::f64::consts::TAU;

    fn family_battery() -> Vec<(MetricChart, TorusImmersion)> {
        let mut out = Vec::new();
        for (family, params) in [
            (Family::CliffordS2xS1, Params::new()),
            (Family::FlatRadiusR2xS1, Params::new().with("t", 2.0)),
            (Family::CircleH2xS1, Params::new().with("c", 1.0)),
            (
                Family::GeodesicR4,
                Params::new().with("lambda", 0.1).with("mu", 0.1),
            ),
            (Family::HopfBerger, Params::new().with("t", 0.8)),
        ] {
            let chart = family.chart(&params).unwrap();
            let imm = make_family(family, &params, (64, 64)).unwrap();
            out.push((chart, imm));
        }
        out
    }

    #[test]
    fn cylinder_frame_matches_closed_form() {
        // Flat cylinder patch in Euclidean space: x = (cos u, sin u, v),
        // with the z channel declared as a ramp of one period per v-cycle.
        let chart = MetricChart::euclidean3();
        let n = 32;
        let mut points = Vec::new();
        for iu in 0..n {
            let u = TAU * iu as f64 / n as f64;
            for iv in 0..n {
                let v = TAU * iv as f64 / n as f64;
                points.push([u.cos(), u.sin(), v, 0.0]);
            }
        }
        let imm = TorusImmersion::new(n, n, (TAU, TAU), 3, points)
            .unwrap()
            .with_winding(2, 0, 1);
        let geom = analyze(&imm, &chart, AnalysisLevel::Extrinsic).unwrap();
        for iu in 0..n {
            for iv in 0..n {
                let i = iu * n + iv;
                let u = TAU * iu as f64 / n as f64;
                let e1 = geom.frames.tangent[i][0];
                let e2 = geom.frames.tangent[i][1];
                let nrm = geom.frames.normal[i][0];
                assert_relative_eq!(e1[0], -u.sin(), epsilon = 1e-10);
                assert_relative_eq!(e1[1], u.cos(), epsilon = 1e-10);
                assert_relative_eq!(e2[2], 1.0, epsilon = 1e-10);
                // Normal is radial up to sign.
                let dot = nrm[0] * u.cos() + nrm[1] * u.sin();
                assert_relative_eq!(dot.abs(), 1.0, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn frames_are_orthonormal_on_all_families() {
        for (chart, imm) in family_battery() {
            let geom = analyze(&imm, &chart, AnalysisLevel::Extrinsic).unwrap();
            let n = chart.dim();
            for idx in 0..imm.node_count() {
                let g = chart.metric(&geom.imm.points()[idx]).unwrap();
                let mut frame: Vec<Vec4> = geom.frames.tangent[idx].to_vec();
                for a in 0..geom.frames.normal_count() {
                    frame.push(geom.frames.normal[idx][a]);
                }
                for i in 0..n {
                    for j in 0..n {
                        let dot = metric_dot(&g, &frame[i], &frame[j], n);
                        let expect = if i == j { 1.0 } else { 0.0 };
                        assert!(
                            (dot - expect).abs() < 1e-10,
                            "family {:?} node {idx}: frame Gram [{i}][{j}] = {dot}",
                            imm.family_tag
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn flat_product_family_has_expected_shape_operator() {
        let chart = catalog_lookup("r2xs1", &Params::new()).unwrap();
        for t in [0.5, 1.0, 2.0] {
            let imm =
                make_family(Family::FlatRadiusR2xS1, &Params::new().with("t", t), (32, 32))
                    .unwrap();
            let geom = analyze(&imm, &chart, AnalysisLevel::Extrinsic).unwrap();
            for i in 0..imm.node_count() {
                let h = &geom.data.second[i][0];
                assert_relative_eq!(h[0].abs(), 1.0 / t, epsilon = 1e-9);
                assert!(h[1].abs() < 1e-10);
                assert!(h[2].abs() < 1e-10);
                assert_relative_eq!(geom.data.rho_sq[i], 0.5 / (t * t), epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn clifford_torus_is_totally_geodesic_with_radial_sphere_normal() {
        let chart = catalog_lookup("s2xs1", &Params::new()).unwrap();
        let imm = make_family(Family::CliffordS2xS1, &Params::new(), (64, 64)).unwrap();
        let geom = analyze(&imm, &chart, AnalysisLevel::Extrinsic).unwrap();
        assert!(geom.data.max_s() < 1e-12);
        assert!(geom.data.max_rho_sq() < 1e-12);
        assert_eq!(classify(&geom.data), SurfaceClass::TotallyGeodesic);
        // The normal is tangent to the sphere factor, radial in the chart.
        let (nu, nv) = imm.resolution();
        for iu in [0usize, 7, 23] {
            let u = TAU * iu as f64 / nu as f64;
            let nrm = geom.frames.normal[iu * nv][0];
            assert!(nrm[2].abs() < 1e-10);
            let radial = nrm[0] * u.cos() + nrm[1] * u.sin();
            assert_relative_eq!(radial.abs(), 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn geodesic_circle_torus_curvature_matches_hyperbolic_circle() {
        // h11 = sqrt(c) coth(sqrt(c) r), other entries zero.
        for (c, r) in [(1.0f64, 1f64.asinh()), (2.0, 0.7), (4.0, 0.45)] {
            let params = Params::new().with("c", c).with("r", r);
            let chart = Family::CircleH2xS1.chart(&params).unwrap();
            let imm = make_family(Family::CircleH2xS1, &params, (32, 32)).unwrap();
            let geom = analyze(&imm, &chart, AnalysisLevel::Extrinsic).unwrap();
            let expect = c.sqrt() / (c.sqrt() * r).tanh();
            for i in 0..imm.node_count() {
                let h = &geom.data.second[i][0];
                assert_relative_eq!(h[0].abs(), expect, epsilon = 1e-8);
                assert!(h[1].abs() < 1e-9);
                assert!(h[2].abs() < 1e-9);
            }
        }
    }

    #[test]
    fn sphere_slice_is_totally_umbilic() {
        // A doubly periodic band sweeping over the round 2-sphere in
        // Euclidean space: umbilic wherever it is an immersion, with
        // rho^2 = 0 but S > 0. (No torus immerses into a sphere globally,
        // so the parameter phase is chosen to keep the isolated rank drops
        // between grid nodes.)
        let chart = MetricChart::euclidean3();
        let n = 64;
        let delta = 0.4418;
        let mut points = Vec::new();
        for iu in 0..n {
            let u = TAU * iu as f64 / n as f64;
            for iv in 0..n {
                let v = TAU * iv as f64 / n as f64;
                let theta = std::f64::consts::FRAC_PI_2 + 0.3 * (v + delta).sin();
                let phi = u + 0.1 * (v + delta).cos();
                points.push([
                    theta.sin() * phi.cos(),
                    theta.sin() * phi.sin(),
                    theta.cos(),
                    0.0,
                ]);
            }
        }
        let imm = TorusImmersion::new(n, n, (TAU, TAU), 3, points).unwrap();
        let geom = analyze(&imm, &chart, AnalysisLevel::Extrinsic).unwrap();
        assert!(geom.data.max_rho_sq() < 1e-8, "{}", geom.data.max_rho_sq());
        assert!(geom.data.max_s() > 1.0);
        assert_eq!(classify(&geom.data), SurfaceClass::TotallyUmbilic);
        // Away from the rank drops the curvatures match the unit sphere:
        // h = identity up to sign, so det(h) = 1.
        for i in 0..geom.data.node_count() {
            let [e, f, g] = geom.data.first[i];
            if e * g - f * f > 1e-2 {
                assert!((geom.data.det_sum(i) - 1.0).abs() < 1e-7);
                assert!((geom.data.mean_norm_sq(i) - 1.0).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn revolution_torus_gauss_curvature_at_outer_equator() {
        let chart = MetricChart::euclidean3();
        let imm = revolution_torus(2.0, 1.0, (64, 64)).unwrap();
        let geom = analyze(&imm, &chart, AnalysisLevel::Full).unwrap();
        let k = geom.data.gauss_k.as_ref().unwrap();
        // Node (any u, v = 0) sits on the outer equator: K = 1/3.
        assert_relative_eq!(k[0], 1.0 / 3.0, epsilon = 1e-8);
        let residual = gauss_equation_residual(&geom.data).unwrap();
        assert!(residual < 1e-6, "gauss residual {residual}");
    }

    #[test]
    fn gauss_equation_and_gauss_bonnet_hold_on_families() {
        for (chart, imm) in family_battery() {
            let geom = analyze(&imm, &chart, AnalysisLevel::Full).unwrap();
            let residual = gauss_equation_residual(&geom.data).unwrap();
            assert!(
                residual < 1e-6,
                "family {:?}: gauss residual {residual}",
                imm.family_tag
            );
            let k = geom.data.gauss_k.as_ref().unwrap();
            let total = crate::grid::quadrature(k, &geom.data.area_element, &geom.imm).unwrap();
            assert!(
                total.abs() < 1e-6,
                "family {:?}: integral of K = {total}",
                imm.family_tag
            );
        }
    }

    #[test]
    fn rho_identity_and_frame_invariances() {
        let chart = MetricChart::euclidean3();
        let imm = revolution_torus(2.0, 0.8, (32, 32)).unwrap();
        let norm = imm.normalize_angles(&chart).unwrap();
        let jet = spectral_jet(&norm).unwrap();
        let frames = build_frames(&norm, &jet, &chart).unwrap();
        let base = second_fundamental_form(&norm, &jet, &frames, &chart).unwrap();

        // rho^2 = S - 2 |H|^2 as an algebraic identity.
        for i in 0..base.node_count() {
            let diff = base.rho_sq[i] - (base.s[i] - 2.0 * base.mean_norm_sq(i));
            assert!(diff.abs() < 1e-12);
        }

        // Tangent-frame rotation leaves the frame scalars unchanged.
        let rotated = frames.rotate_tangent(0.7343);
        let rot = second_fundamental_form(&norm, &jet, &rotated, &chart).unwrap();
        for i in 0..base.node_count() {
            assert!((base.s[i] - rot.s[i]).abs() < 1e-10);
            assert!((base.rho_sq[i] - rot.rho_sq[i]).abs() < 1e-10);
            assert!((base.mean_norm_sq(i) - rot.mean_norm_sq(i)).abs() < 1e-10);
            assert!((base.det_sum(i) - rot.det_sum(i)).abs() < 1e-10);
        }

        // Normal flip negates h and H together; the scalars stay put.
        let flipped = frames.flip_normal(0);
        let flip = second_fundamental_form(&norm, &jet, &flipped, &chart).unwrap();
        for i in 0..base.node_count() {
            for slot in 0..3 {
                assert!((base.second[i][0][slot] + flip.second[i][0][slot]).abs() < 1e-12);
            }
            assert!((base.mean[i][0] + flip.mean[i][0]).abs() < 1e-12);
            assert!((base.s[i] - flip.s[i]).abs() < 1e-12);
            assert!((base.rho_sq[i] - flip.rho_sq[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn csv_export_has_expected_columns() {
        let chart = MetricChart::euclidean3();
        let imm = revolution_torus(2.0, 1.0, (16, 16)).unwrap();
        let geom = analyze(&imm, &chart, AnalysisLevel::Full).unwrap();
        let csv = shape_csv(&geom).unwrap();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "u,v,h11,h12,h22,H_norm,S,rho_sq,K,Ktilde,gauss_residual"
        );
        assert_eq!(lines.count(), 16 * 16);
    }
}
