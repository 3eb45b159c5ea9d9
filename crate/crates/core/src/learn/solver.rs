//! Working-set (SMO) solver for the SVM duals.
//!
//! Solves
//!
//! ```text
//! min_a  0.5 a'Qa + p'a   s.t.  y'a = const,  0 <= a_i <= C_i
//! ```
//!
//! two coordinates at a time, picking the pair with second-order working-set
//! selection (Fan, Chen and Lin, 2005). `Nu` mode keeps both `sum a_i` over
//! each class fixed by only pairing indices from the same class, which is
//! the formulation behind nu-SVC.

const TAU: f64 = 1e-12;

/// Access to rows of `Q` (`Q_ij = y_i y_j K(x_i, x_j)`).
pub trait QMatrix {
    fn size(&self) -> usize;
    fn diag(&self, i: usize) -> f64;
    /// Row `i`; the slice is only valid until the next call.
    fn row(&mut self, i: usize) -> &[f64];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Standard,
    Nu,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub alpha: Vec<f64>,
    pub rho: f64,
    /// `r` of the nu formulation (unused in standard mode).
    pub r: f64,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub struct Problem<'a> {
    pub p: &'a [f64],
    pub y: &'a [f64],
    pub c: &'a [f64],
    pub alpha: Vec<f64>,
    pub eps: f64,
    pub max_iter: usize,
    pub mode: Mode,
}

struct State<'a> {
    y: &'a [f64],
    c: &'a [f64],
    alpha: Vec<f64>,
    g: Vec<f64>,
    qd: Vec<f64>,
}

impl State<'_> {
    fn upper(&self, i: usize) -> bool {
        self.alpha[i] >= self.c[i]
    }
    fn lower(&self, i: usize) -> bool {
        self.alpha[i] <= 0.0
    }
}

pub fn solve<Q: QMatrix>(q: &mut Q, prob: Problem<'_>) -> Solution {
    let l = q.size();
    assert_eq!(prob.p.len(), l);
    assert_eq!(prob.y.len(), l);
    assert_eq!(prob.c.len(), l);
    assert_eq!(prob.alpha.len(), l);
    let qd: Vec<f64> = (0..l).map(|i| q.diag(i)).collect();
    let mut st = State {
        y: prob.y,
        c: prob.c,
        alpha: prob.alpha,
        g: prob.p.to_vec(),
        qd,
    };
    for i in 0..l {
        if st.alpha[i] != 0.0 {
            let a = st.alpha[i];
            let row = q.row(i);
            for (g, &qij) in st.g.iter_mut().zip(row) {
                *g += a * qij;
            }
        }
    }

    let mut row_i = vec![0.0; l];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < prob.max_iter {
        let pair = match prob.mode {
            Mode::Standard => select_standard(q, &st, prob.eps, &mut row_i),
            Mode::Nu => select_nu(q, &st, prob.eps, &mut row_i),
        };
        let Some((i, j)) = pair else {
            converged = true;
            break;
        };
        iterations += 1;
        row_i.copy_from_slice(q.row(i));
        let row_j = q.row(j);
        update_pair(&mut st, i, j, &row_i, row_j);
    }

    let (rho, r) = match prob.mode {
        Mode::Standard => (rho_standard(&st), 0.0),
        Mode::Nu => rho_nu(&st),
    };
    let objective = st
        .alpha
        .iter()
        .zip(&st.g)
        .zip(prob.p)
        .map(|((a, g), p)| a * (g + p))
        .sum::<f64>()
        / 2.0;
    Solution {
        alpha: st.alpha,
        rho,
        r,
        objective,
        iterations,
        converged,
    }
}

fn update_pair(st: &mut State<'_>, i: usize, j: usize, qi: &[f64], qj: &[f64]) {
    let (ci, cj) = (st.c[i], st.c[j]);
    let (old_i, old_j) = (st.alpha[i], st.alpha[j]);
    let (mut ai, mut aj) = (old_i, old_j);
    if st.y[i] != st.y[j] {
        let quad = positive(st.qd[i] + st.qd[j] + 2.0 * qi[j]);
        let delta = (-st.g[i] - st.g[j]) / quad;
        let diff = ai - aj;
        ai += delta;
        aj += delta;
        if diff > 0.0 {
            if aj < 0.0 {
                aj = 0.0;
                ai = diff;
            }
        } else if ai < 0.0 {
            ai = 0.0;
            aj = -diff;
        }
        if diff > ci - cj {
            if ai > ci {
                ai = ci;
                aj = ci - diff;
            }
        } else if aj > cj {
            aj = cj;
            ai = cj + diff;
        }
    } else {
        let quad = positive(st.qd[i] + st.qd[j] - 2.0 * qi[j]);
        let delta = (st.g[i] - st.g[j]) / quad;
        let sum = ai + aj;
        ai -= delta;
        aj += delta;
        if sum > ci {
            if ai > ci {
                ai = ci;
                aj = sum - ci;
            }
        } else if aj < 0.0 {
            aj = 0.0;
            ai = sum;
        }
        if sum > cj {
            if aj > cj {
                aj = cj;
                ai = sum - cj;
            }
        } else if ai < 0.0 {
            ai = 0.0;
            aj = sum;
        }
    }
    st.alpha[i] = ai;
    st.alpha[j] = aj;
    let (di, dj) = (ai - old_i, aj - old_j);
    for (k, g) in st.g.iter_mut().enumerate() {
        *g += qi[k] * di + qj[k] * dj;
    }
}

fn positive(quad: f64) -> f64 {
    if quad > 0.0 {
        quad
    } else {
        TAU
    }
}

fn select_standard<Q: QMatrix>(q: &mut Q, st: &State<'_>, eps: f64, buf: &mut [f64]) -> Option<(usize, usize)> {
    let l = st.alpha.len();
    let mut gmax = f64::NEG_INFINITY;
    let mut imax = None;
    for t in 0..l {
        if st.y[t] > 0.0 {
            if !st.upper(t) && -st.g[t] >= gmax {
                gmax = -st.g[t];
                imax = Some(t);
            }
        } else if !st.lower(t) && st.g[t] >= gmax {
            gmax = st.g[t];
            imax = Some(t);
        }
    }
    let i = imax?;
    buf.copy_from_slice(q.row(i));
    let qi = &*buf;
    let mut gmax2 = f64::NEG_INFINITY;
    let mut jmin = None;
    let mut best = f64::INFINITY;
    #[allow(clippy::needless_range_loop)] // indexes st.y, st.g, st.qd and qi in step
    for j in 0..l {
        if st.y[j] > 0.0 {
            if !st.lower(j) {
                let grad_diff = gmax + st.g[j];
                gmax2 = gmax2.max(st.g[j]);
                if grad_diff > 0.0 {
                    let quad = positive(st.qd[i] + st.qd[j] - 2.0 * st.y[i] * qi[j]);
                    let obj = -(grad_diff * grad_diff) / quad;
                    if obj <= best {
                        best = obj;
                        jmin = Some(j);
                    }
                }
            }
        } else if !st.upper(j) {
            let grad_diff = gmax - st.g[j];
            gmax2 = gmax2.max(-st.g[j]);
            if grad_diff > 0.0 {
                let quad = positive(st.qd[i] + st.qd[j] + 2.0 * st.y[i] * qi[j]);
                let obj = -(grad_diff * grad_diff) / quad;
                if obj <= best {
                    best = obj;
                    jmin = Some(j);
                }
            }
        }
    }
    if gmax + gmax2 < eps {
        return None;
    }
    jmin.map(|j| (i, j))
}

fn select_nu<Q: QMatrix>(q: &mut Q, st: &State<'_>, eps: f64, buf: &mut [f64]) -> Option<(usize, usize)> {
    let l = st.alpha.len();
    let (mut gmaxp, mut gmaxn) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    let (mut ip, mut in_) = (None, None);
    for t in 0..l {
        if st.y[t] > 0.0 {
            if !st.upper(t) && -st.g[t] >= gmaxp {
                gmaxp = -st.g[t];
                ip = Some(t);
            }
        } else if !st.lower(t) && st.g[t] >= gmaxn {
            gmaxn = st.g[t];
            in_ = Some(t);
        }
    }
    // Rows of both candidates are needed; copy the positive one into `buf`
    // and fetch the negative one per use below.
    let mut qp = None;
    if let Some(p) = ip {
        buf.copy_from_slice(q.row(p));
        qp = Some(p);
    }
    let mut qn_row: Option<Vec<f64>> = None;
    if let Some(n) = in_ {
        qn_row = Some(q.row(n).to_vec());
    }
    let (mut gmaxp2, mut gmaxn2) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut jmin = None;
    let mut best = f64::INFINITY;
    for j in 0..l {
        if st.y[j] > 0.0 {
            if !st.lower(j) {
                let grad_diff = gmaxp + st.g[j];
                gmaxp2 = gmaxp2.max(st.g[j]);
                if grad_diff > 0.0 {
                    if let Some(p) = qp {
                        let quad = positive(st.qd[p] + st.qd[j] - 2.0 * buf[j]);
                        let obj = -(grad_diff * grad_diff) / quad;
                        if obj <= best {
                            best = obj;
                            jmin = Some(j);
                        }
                    }
                }
            }
        } else if !st.upper(j) {
            let grad_diff = gmaxn - st.g[j];
            gmaxn2 = gmaxn2.max(-st.g[j]);
            if grad_diff > 0.0 {
                if let (Some(n), Some(row)) = (in_, qn_row.as_ref()) {
                    let quad = positive(st.qd[n] + st.qd[j] - 2.0 * row[j]);
                    let obj = -(grad_diff * grad_diff) / quad;
                    if obj <= best {
                        best = obj;
                        jmin = Some(j);
                    }
                }
            }
        }
    }
    if (gmaxp + gmaxp2).max(gmaxn + gmaxn2) < eps {
        return None;
    }
    let j = jmin?;
    let i = if st.y[j] > 0.0 { ip? } else { in_? };
    Some((i, j))
}

fn rho_standard(st: &State<'_>) -> f64 {
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut nfree, mut sum) = (0usize, 0.0);
    for i in 0..st.alpha.len() {
        let yg = st.y[i] * st.g[i];
        if st.upper(i) {
            if st.y[i] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if st.lower(i) {
            if st.y[i] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            nfree += 1;
            sum += yg;
        }
    }
    if nfree > 0 {
        sum / nfree as f64
    } else {
        midpoint(ub, lb)
    }
}

/// Middle of `[lb, ub]`; when one side is unbounded (every variable at the
/// same bound) the finite side is used.
fn midpoint(ub: f64, lb: f64) -> f64 {
    match (ub.is_finite(), lb.is_finite()) {
        (true, true) => (ub + lb) / 2.0,
        (true, false) => ub,
        (false, true) => lb,
        (false, false) => 0.0,
    }
}

fn rho_nu(st: &State<'_>) -> (f64, f64) {
    let mut side = [(f64::INFINITY, f64::NEG_INFINITY, 0usize, 0.0f64); 2];
    for i in 0..st.alpha.len() {
        let s = &mut side[usize::from(st.y[i] < 0.0)];
        let g = st.g[i];
        if st.upper(i) {
            s.1 = s.1.max(g);
        } else if st.lower(i) {
            s.0 = s.0.min(g);
        } else {
            s.2 += 1;
            s.3 += g;
        }
    }
    let r = |(ub, lb, n, sum): (f64, f64, usize, f64)| if n > 0 { sum / n as f64 } else { midpoint(ub, lb) };
    let r1 = r(side[0]);
    let r2 = r(side[1]);
    ((r1 - r2) / 2.0, (r1 + r2) / 2.0)
}

/// Dense `Q` backed by a full matrix, for tests and small problems.
pub struct DenseQ {
    pub rows: Vec<Vec<f64>>,
}

impl QMatrix for DenseQ {
    fn size(&self) -> usize {
        self.rows.len()
    }
    fn diag(&self, i: usize) -> f64 {
        self.rows[i][i]
    }
    fn row(&mut self, i: usize) -> &[f64] {
        &self.rows[i]
    }
}
