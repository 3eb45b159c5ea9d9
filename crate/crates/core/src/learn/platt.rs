//! Sigmoid calibration of decision values (Platt scaling), fitted with the
//! Newton method and backtracking line search of Lin, Lin and Weng (2007).
//!
//! `P(y = 1 | f) = 1 / (1 + exp(A f + B))`.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sigmoid {
    pub a: f64,
    pub b: f64,
}

impl Sigmoid {
    pub fn prob(&self, f: f64) -> f64 {
        let z = f * self.a + self.b;
        if z >= 0.0 {
            (-z).exp() / (1.0 + (-z).exp())
        } else {
            1.0 / (1.0 + z.exp())
        }
    }

    /// True when higher decision values map to higher probabilities.
    pub fn is_increasing(&self) -> bool {
        self.a < 0.0
    }
}

pub fn fit(dec: &[f64], labels: &[bool]) -> Sigmoid {
    assert_eq!(dec.len(), labels.len());
    let prior1 = labels.iter().filter(|&&l| l).count() as f64;
    let prior0 = labels.len() as f64 - prior1;
    let hi = (prior1 + 1.0) / (prior1 + 2.0);
    let lo = 1.0 / (prior0 + 2.0);
    let t: Vec<f64> = labels.iter().map(|&l| if l { hi } else { lo }).collect();

    let loss = |a: f64, b: f64| -> f64 {
        dec.iter()
            .zip(&t)
            .map(|(&f, &ti)| {
                let z = f * a + b;
                if z >= 0.0 {
                    ti * z + (1.0 + (-z).exp()).ln()
                } else {
                    (ti - 1.0) * z + (1.0 + z.exp()).ln()
                }
            })
            .sum()
    };

    let (mut a, mut b) = (0.0, ((prior0 + 1.0) / (prior1 + 1.0)).ln());
    let mut fval = loss(a, b);
    const SIGMA: f64 = 1e-12;
    const MIN_STEP: f64 = 1e-10;
    for _ in 0..100 {
        let (mut h11, mut h22, mut h21, mut g1, mut g2) = (SIGMA, SIGMA, 0.0, 0.0, 0.0);
        for (&f, &ti) in dec.iter().zip(&t) {
            let z = f * a + b;
            let (p, q) = if z >= 0.0 {
                let e = (-z).exp();
                (e / (1.0 + e), 1.0 / (1.0 + e))
            } else {
                let e = z.exp();
                (1.0 / (1.0 + e), e / (1.0 + e))
            };
            let d2 = p * q;
            h11 += f * f * d2;
            h22 += d2;
            h21 += f * d2;
            let d1 = ti - p;
            g1 += f * d1;
            g2 += d1;
        }
        if g1.abs() < 1e-5 && g2.abs() < 1e-5 {
            break;
        }
        let det = h11 * h22 - h21 * h21;
        let da = -(h22 * g1 - h21 * g2) / det;
        let db = -(-h21 * g1 + h11 * g2) / det;
        let gd = g1 * da + g2 * db;
        let mut step = 1.0;
        while step >= MIN_STEP {
            let (na, nb) = (a + step * da, b + step * db);
            let nf = loss(na, nb);
            if nf < fval + 1e-4 * step * gd {
                a = na;
                b = nb;
                fval = nf;
                break;
            }
            step /= 2.0;
        }
        if step < MIN_STEP {
            break;
        }
    }
    Sigmoid { a, b }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separable_scores_give_increasing_sigmoid() {
        let dec = [-2.0, -1.5, -1.0, -0.5, 0.5, 1.0, 1.5, 2.0];
        let lab = [false, false, false, true, false, true, true, true];
        let s = fit(&dec, &lab);
        assert!(s.is_increasing());
        assert!(s.prob(2.0) > 0.8 && s.prob(-2.0) < 0.2);
        // Monotone: ranking of scores is preserved.
        let probs: Vec<f64> = dec.iter().map(|&f| s.prob(f)).collect();
        assert!(probs.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn uninformative_scores_recover_base_rate() {
        let dec = vec![0.0; 40];
        let lab: Vec<bool> = (0..40).map(|i| i % 4 == 0).collect();
        let s = fit(&dec, &lab);
        assert!((s.prob(0.0) - 10.0 / 40.0).abs() < 0.03);
    }
}
