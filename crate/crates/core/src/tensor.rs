//! Small fixed-capacity tensors for pointwise metric computations.
//!
//! Ambient dimensions are 2, 3 or 4, so everything lives on the stack with
//! capacity [`MAX_DIM`] and an explicit runtime dimension.

/// Largest ambient dimension handled by the catalog.
pub const MAX_DIM: usize = 4;

/// Ambient vector (components beyond the active dimension stay zero).
pub type Vec4 = [f64; MAX_DIM];
/// Rank-2 tensor, e.g. metric components `g[a][b]`.
pub type Mat4 = [[f64; MAX_DIM]; MAX_DIM];
/// Rank-3 tensor, e.g. Christoffel symbols `gamma[a][b][c]`.
pub type Ten3 = [[[f64; MAX_DIM]; MAX_DIM]; MAX_DIM];
/// Rank-4 tensor, e.g. the curvature tensor `r[a][b][c][d]`.
pub type Ten4 = [[[[f64; MAX_DIM]; MAX_DIM]; MAX_DIM]; MAX_DIM];

pub const ZERO_VEC: Vec4 = [0.0; MAX_DIM];
pub const ZERO_MAT: Mat4 = [[0.0; MAX_DIM]; MAX_DIM];
pub const ZERO_TEN3: Ten3 = [[[0.0; MAX_DIM]; MAX_DIM]; MAX_DIM];
pub const ZERO_TEN4: Ten4 = [[[[0.0; MAX_DIM]; MAX_DIM]; MAX_DIM]; MAX_DIM];

/// Inner product of `u` and `v` with respect to the metric `g` (dim `n`).
pub fn metric_dot(g: &Mat4, u: &Vec4, v: &Vec4, n: usize) -> f64 {
    let mut acc = 0.0;
    for a in 0..n {
        for b in 0..n {
            acc += g[a][b] * u[a] * v[b];
        }
    }
    acc
}

pub fn metric_norm(g: &Mat4, u: &Vec4, n: usize) -> f64 {
    metric_dot(g, u, u, n).max(0.0).sqrt()
}

pub fn axpy(y: &mut Vec4, alpha: f64, x: &Vec4, n: usize) {
    for a in 0..n {
        y[a] += alpha * x[a];
    }
}

pub fn scale(x: &Vec4, alpha: f64, n: usize) -> Vec4 {
    let mut out = ZERO_VEC;
    for a in 0..n {
        out[a] = alpha * x[a];
    }
    out
}

/// Determinant of the leading `n`-by-`n` block.
pub fn det(m: &Mat4, n: usize) -> f64 {
    match n {
        1 => m[0][0],
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        3 => {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        }
        4 => {
            let mut acc = 0.0;
            for j in 0..4 {
                let sub = minor(m, 0, j);
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                acc += sign * m[0][j] * det(&sub, 3);
            }
            acc
        }
        _ => panic!("unsupported dimension {n}"),
    }
}

fn minor(m: &Mat4, row: usize, col: usize) -> Mat4 {
    let mut out = ZERO_MAT;
    let mut r = 0;
    for i in 0..4 {
        if i == row {
            continue;
        }
        let mut c = 0;
        for j in 0..4 {
            if j == col {
                continue;
            }
            out[r][c] = m[i][j];
            c += 1;
        }
        r += 1;
    }
    out
}

/// Inverse of the leading `n`-by-`n` block by Gauss-Jordan elimination with
/// partial pivoting. Returns `None` when a pivot falls below `1e-14` times
/// the largest entry.
pub fn invert(m: &Mat4, n: usize) -> Option<Mat4> {
    let mut a = *m;
    let mut inv = ZERO_MAT;
    for i in 0..n {
        inv[i][i] = 1.0;
    }
    let scale_ref = m
        .iter()
        .take(n)
        .flat_map(|row| row.iter().take(n))
        .fold(0.0f64, |acc, &x| acc.max(x.abs()))
        .max(1e-300);
    for col in 0..n {
        let mut pivot = col;
        for row in col + 1..n {
            if a[row][col].abs() > a[pivot][col].abs() {
                pivot = row;
            }
        }
        if a[pivot][col].abs() < 1e-14 * scale_ref {
            return None;
        }
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let d = a[col][col];
        for j in 0..n {
            a[col][j] /= d;
            inv[col][j] /= d;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let f = a[row][col];
            if f == 0.0 {
                continue;
            }
            for j in 0..n {
                a[row][j] -= f * a[col][j];
                inv[row][j] -= f * inv[col][j];
            }
        }
    }
    Some(inv)
}

/// Cholesky-based positive-definiteness probe for a symmetric block.
pub fn is_positive_definite(m: &Mat4, n: usize) -> bool {
    let mut l = ZERO_MAT;
    for i in 0..n {
        for j in 0..=i {
            let mut sum = m[i][j];
            for k in 0..j {
                sum -= l[i][k] * l[j][k];
            }
            if i == j {
                if sum <= 0.0 {
                    return false;
                }
                l[i][j] = sum.sqrt();
            } else {
                l[i][j] = sum / l[j][j];
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn inverts_diagonal_and_dense_blocks() {
        let mut g = ZERO_MAT;
        g[0][0] = 4.0;
        g[1][1] = 0.25;
        g[2][2] = 1.0;
        let inv = invert(&g, 3).unwrap();
        assert_relative_eq!(inv[0][0], 0.25);
        assert_relative_eq!(inv[1][1], 4.0);

        let mut a = ZERO_MAT;
        a[0] = [2.0, 1.0, 0.0, 0.0];
        a[1] = [1.0, 3.0, 1.0, 0.0];
        a[2] = [0.0, 1.0, 2.0, 0.0];
        let inv = invert(&a, 3).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = 0.0;
                for k in 0..3 {
                    acc += a[i][k] * inv[k][j];
                }
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_relative_eq!(acc, expect, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let mut a = ZERO_MAT;
        a[0] = [1.0, 2.0, 0.0, 0.0];
        a[1] = [2.0, 4.0, 0.0, 0.0];
        a[2][2] = 1.0;
        assert!(invert(&a, 3).is_none());
    }

    #[test]
    fn positive_definiteness_probe() {
        let mut g = ZERO_MAT;
        g[0] = [2.0, 0.5, 0.0, 0.0];
        g[1] = [0.5, 2.0, 0.0, 0.0];
        g[2][2] = 1.0;
        assert!(is_positive_definite(&g, 3));
        g[1][1] = -1.0;
        assert!(!is_positive_definite(&g, 3));
    }

    #[test]
    fn determinant_of_four_block() {
        let mut a = ZERO_MAT;
        for i in 0..4 {
            a[i][i] = (i + 1) as f64;
        }
        a[0][3] = 2.0;
        assert_relative_eq!(det(&a, 4), 24.0);
    }
}
