use crate::linalg::inf_norm;
use crate::poly::C64;

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

fn close(a: &[C64], b: &[C64], tol: f64) -> bool {
    let dist = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max);
    dist < tol * (1.0 + inf_norm(a).max(inf_norm(b)))
}

/// Rounds to ten significant digits so the sort key ignores noise.
fn rounded(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let scale = 10f64.powi(9 - x.abs().log10().floor() as i32);
    (x * scale).round() / scale
}

fn sort_key(a: &[C64], b: &[C64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        let o = rounded(x.re)
            .total_cmp(&rounded(y.re))
            .then_with(|| rounded(x.im).total_cmp(&rounded(y.im)));
        if o.is_ne() {
            return o;
        }
    }
    a.len().cmp(&b.len())
}

/// Clusters points closer than `tol·(1 + |p|)` in max-norm (transitively),
/// keeps the member with the smallest residual from each cluster and
/// returns the representatives in lexicographic order.
pub fn deduplicate_ranked(points: &[Vec<C64>], residuals: &[f64], tol: f64) -> Vec<Vec<C64>> {
    assert_eq!(points.len(), residuals.len());
    let n = points.len();
    let mut parent: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in i + 1..n {
            if close(&points[i], &points[j], tol) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[b.max(a)] = a.min(b);
                }
            }
        }
    }
    let mut best: Vec<Option<usize>> = vec![None; n];
    for i in 0..n {
        let root = find(&mut parent, i);
        match best[root] {
            Some(b) if residuals[b] <= residuals[i] => {}
            _ => best[root] = Some(i),
        }
    }
    let mut out: Vec<Vec<C64>> = best.into_iter().flatten().map(|i| points[i].clone()).collect();
    out.sort_by(|a, b| sort_key(a, b));
    out
}

pub fn deduplicate(points: &[Vec<C64>], tol: f64) -> Vec<Vec<C64>> {
    deduplicate_ranked(points, &vec![0.0; points.len()], tol)
}
