//! Small dense complex linear algebra used inside the path tracker.
//!
//! Matrices are row-major `Vec<C64>` of size `n*n`.

use nalgebra::DMatrix;

use crate::poly::C64;

/// LU factorization with partial pivoting, in place. Returns `false` if a
/// pivot is exactly zero or not finite.
pub fn lu_factor(a: &mut [C64], n: usize, perm: &mut [usize]) -> bool {
    for (i, p) in perm.iter_mut().enumerate().take(n) {
        *p = i;
    }
    for col in 0..n {
        let mut piv = col;
        let mut best = a[col * n + col].norm_sqr();
        for row in col + 1..n {
            let v = a[row * n + col].norm_sqr();
            if v > best {
                best = v;
                piv = row;
            }
        }
        if best == 0.0 || !best.is_finite() {
            return false;
        }
        if piv != col {
            for j in 0..n {
                a.swap(col * n + j, piv * n + j);
            }
            perm.swap(col, piv);
        }
        let inv = C64::new(1.0, 0.0) / a[col * n + col];
        for row in col + 1..n {
            let factor = a[row * n + col] * inv;
            a[row * n + col] = factor;
            if factor != C64::default() {
                for j in col + 1..n {
                    let upd = factor * a[col * n + j];
                    a[row * n + j] -= upd;
                }
            }
        }
    }
    true
}

/// Solves `LU x = P b` given a factorization from [`lu_factor`].
pub fn lu_solve(lu: &[C64], n: usize, perm: &[usize], b: &[C64], x: &mut [C64]) {
    for i in 0..n {
        x[i] = b[perm[i]];
    }
    for i in 0..n {
        let mut s = x[i];
        for j in 0..i {
            s -= lu[i * n + j] * x[j];
        }
        x[i] = s;
    }
    for i in (0..n).rev() {
        let mut s = x[i];
        for j in i + 1..n {
            s -= lu[i * n + j] * x[j];
        }
        x[i] = s / lu[i * n + i];
    }
}

/// Solves `a x = b` for a square system, returning `None` when singular.
pub fn solve(a: &[C64], n: usize, b: &[C64]) -> Option<Vec<C64>> {
    let mut lu = a.to_vec();
    let mut perm = vec![0; n];
    if !lu_factor(&mut lu, n, &mut perm) {
        return None;
    }
    let mut x = vec![C64::default(); n];
    lu_solve(&lu, n, &perm, b, &mut x);
    x.iter().all(|v| v.re.is_finite() && v.im.is_finite()).then_some(x)
}

pub fn inf_norm(v: &[C64]) -> f64 {
    v.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// Singular values, descending, of a row-major `rows × cols` matrix.
fn singular_values(a: &[C64], rows: usize, cols: usize) -> Vec<f64> {
    if rows == 0 || cols == 0 {
        return Vec::new();
    }
    if a.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return vec![f64::NAN; rows.min(cols)];
    }
    let m = DMatrix::from_row_slice(rows, cols, a);
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Column-scales by `max(1, |x_j|)` and shrinks every row whose largest
/// entry exceeds one back to unit max-norm. Rows are never enlarged, so a
/// Jacobian that is small in absolute terms stays small.
pub fn equilibrate(jac: &[C64], rows: usize, cols: usize, x: &[C64]) -> Vec<C64> {
    let mut out = jac.to_vec();
    for r in 0..rows {
        for c in 0..cols {
            out[r * cols + c] *= x[c].norm().max(1.0);
        }
        let row_max = inf_norm(&out[r * cols..(r + 1) * cols]);
        if row_max > 1.0 {
            for c in 0..cols {
                out[r * cols + c] /= row_max;
            }
        }
    }
    out
}

/// `max(σ_max, 1) / σ_min` of the equilibrated Jacobian; `+∞` when singular.
pub fn condition_estimate(jac: &[C64], n: usize, x: &[C64]) -> f64 {
    let eq = equilibrate(jac, n, n, x);
    let s = singular_values(&eq, n, n);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if hi.is_finite() && lo > 0.0 => hi.max(1.0) / lo,
        _ => f64::INFINITY,
    }
}

/// Numerical rank: singular values above `tol * σ_max` of the equilibrated
/// matrix, with rows normalized to unit max-norm first.
pub fn numerical_rank(jac: &[C64], rows: usize, cols: usize, x: &[C64], tol: f64) -> usize {
    let mut eq = equilibrate(jac, rows, cols, x);
    for r in 0..rows {
        let row_max = inf_norm(&eq[r * cols..(r + 1) * cols]);
        if row_max > 0.0 {
            for c in 0..cols {
                eq[r * cols + c] /= row_max;
            }
        }
    }
    let s = singular_values(&eq, rows, cols);
    let Some(&hi) = s.first() else { return 0 };
    if hi.is_nan() || hi <= 0.0 {
        return 0;
    }
    s.iter().filter(|&&v| v > tol * hi).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn solves_small_system() {
        let a = [c(0.0, 1.0), c(2.0, 0.0), c(1.0, -1.0), c(3.0, 0.5)];
        let x_true = [c(1.0, 2.0), c(-0.5, 0.25)];
        let b = [
            a[0] * x_true[0] + a[1] * x_true[1],
            a[2] * x_true[0] + a[3] * x_true[1],
        ];
        let x = solve(&a, 2, &b).unwrap();
        for (u, v) in x.iter().zip(&x_true) {
            assert!((u - v).norm() < 1e-14);
        }
    }

    #[test]
    fn singular_matrix_detected() {
        let a = [c(1.0, 0.0), c(2.0, 0.0), c(2.0, 0.0), c(4.0, 0.0)];
        assert!(solve(&a, 2, &[c(1.0, 0.0), c(1.0, 0.0)]).is_none());
        assert!(condition_estimate(&a, 2, &[c(1.0, 0.0); 2]) > 1e12);
    }

    #[test]
    fn rank_of_rank_one() {
        let a = [c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0), c(2.0, 0.0), c(4.0, 0.0), c(6.0, 0.0)];
        assert_eq!(numerical_rank(&a, 2, 3, &[c(1.0, 0.0); 3], 1e-8), 1);
    }

    #[test]
    fn tiny_scalar_jacobian_is_ill_conditioned() {
        let j = [c(2e-10, 0.0)];
        assert!(condition_estimate(&j, 1, &[c(1e-10, 0.0)]) > 1e8);
        let j = [c(4.0, 0.0)];
        assert!((condition_estimate(&j, 1, &[c(2.0, 0.0)]) - 1.0).abs() < 1e-12);
    }
}
