//! Dense reference solver for small SVM duals, used to cross-check SMO.
//!
//! Accelerated projected gradient (FISTA) on `min 0.5 a'Qa` where the
//! feasible set is a product of capped simplices: each block of indices must
//! sum to a fixed value with every coordinate in `[0, upper]`. Both duals
//! used here have that shape:
//!
//! * one-class: one block, `sum a = 1`, `a_i <= 1/(nu m)`;
//! * nu-SVC: one block per class, each summing to `nu l / 2`, `a_i <= 1`.

#[derive(Debug, Clone)]
pub struct Block {
    pub indices: Vec<usize>,
    pub sum: f64,
    pub upper: f64,
}

/// Euclidean projection of `v` onto `{x : 0 <= x_i <= upper, sum x = s}`.
pub fn project_capped_simplex(v: &[f64], s: f64, upper: f64) -> Vec<f64> {
    let clip = |tau: f64| -> f64 { v.iter().map(|&x| (x - tau).clamp(0.0, upper)).sum() };
    let lo0 = v.iter().cloned().fold(f64::INFINITY, f64::min) - upper - 1.0;
    let hi0 = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 1.0;
    let (mut lo, mut hi) = (lo0, hi0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if clip(mid) > s {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let tau = 0.5 * (lo + hi);
    v.iter().map(|&x| (x - tau).clamp(0.0, upper)).collect()
}

fn project(v: &[f64], blocks: &[Block]) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    for b in blocks {
        let sub: Vec<f64> = b.indices.iter().map(|&i| v[i]).collect();
        for (&i, x) in b.indices.iter().zip(project_capped_simplex(&sub, b.sum, b.upper)) {
            out[i] = x;
        }
    }
    out
}

pub fn objective(q: &[Vec<f64>], a: &[f64]) -> f64 {
    let mut s = 0.0;
    for (i, row) in q.iter().enumerate() {
        s += a[i] * row.iter().zip(a).map(|(x, y)| x * y).sum::<f64>();
    }
    s / 2.0
}

/// Minimize `0.5 a'Qa` over the blocks; returns `(a, objective)`.
pub fn solve(q: &[Vec<f64>], blocks: &[Block], iterations: usize) -> (Vec<f64>, f64) {
    let n = q.len();
    // Row-sum bound on the largest eigenvalue.
    let lip = q
        .iter()
        .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
        .max(1e-12);
    let step = 1.0 / lip;
    let start: Vec<f64> = {
        let mut a = vec![0.0; n];
        for b in blocks {
            for &i in &b.indices {
                a[i] = b.sum / b.indices.len() as f64;
            }
        }
        project(&a, blocks)
    };
    let mut x = start.clone();
    let mut yv = start;
    let mut t = 1.0f64;
    for _ in 0..iterations {
        let grad: Vec<f64> = q.iter().map(|r| r.iter().zip(&yv).map(|(a, b)| a * b).sum()).collect();
        let trial: Vec<f64> = yv.iter().zip(&grad).map(|(y, g)| y - step * g).collect();
        let next = project(&trial, blocks);
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        let beta = (t - 1.0) / t_next;
        yv = next.iter().zip(&x).map(|(a, b)| a + beta * (a - b)).collect();
        x = next;
        t = t_next;
    }
    let obj = objective(q, &x);
    (x, obj)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_is_feasible() {
        let p = project_capped_simplex(&[3.0, -1.0, 0.2, 0.4], 1.0, 0.5);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(p.iter().all(|&x| (0.0..=0.5 + 1e-12).contains(&x)));
        assert!((p[0] - 0.5).abs() < 1e-9);
    }
}
