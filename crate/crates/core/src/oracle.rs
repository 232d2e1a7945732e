//! Picard iteration of the claim-indexed recursion for the probability of
//! falling below a fixed barrier αm under a constant retention.
//!
//! ψ_k(x) = ∫_x^∞ (λ/p_R) e^{−λ(z−x)/p_R} E[ψ_{k−1}(z − R(Y))] dz, ψ_0 = 0,
//! with ψ ≡ 1 below αm. The surface is piecewise linear on a uniform grid;
//! above the last node the Lundberg curve e^{−J(z−αm)} closes the integral.

use rayon::prelude::*;
use serde::Serialize;

use crate::adjustment::solve_j;
use crate::error::{Error, Result};
use crate::model::{MarketParams, Severity};
use crate::numeric::Quadrature;
use crate::retention::{net_profit_check, RetentionFn};

/// Probability mass of the kernel below which taps are dropped.
const KERNEL_TAIL: f64 = 1e-17;

#[derive(Debug, Clone, Serialize)]
pub struct PicardGrid {
    /// The fixed barrier αm.
    pub barrier: f64,
    pub h: f64,
    pub x: Vec<f64>,
    pub values: Vec<f64>,
    pub iteration: usize,
    /// Sup-norm change of the last step.
    pub last_change: f64,
    pub p_r: f64,
    pub lundberg_j: f64,
}

impl PicardGrid {
    /// Linear interpolation; 1 below the barrier, Lundberg decay beyond the grid.
    pub fn eval(&self, x: f64) -> f64 {
        if x < self.barrier {
            return 1.0;
        }
        let t = (x - self.barrier) / self.h;
        let i = t.floor() as usize;
        let last = self.x.len() - 1;
        if i >= last {
            return self.values[last] * (-self.lundberg_j * (x - self.x[last])).exp();
        }
        let w = t - i as f64;
        self.values[i] * (1.0 - w) + self.values[i + 1] * w
    }

    /// Largest value of ψ_k(x) − e^{−J(x−αm)} over the nodes.
    pub fn lundberg_excess(&self) -> f64 {
        self.x
            .iter()
            .zip(&self.values)
            .map(|(x, v)| v - (-self.lundberg_j * (x - self.barrier)).exp())
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Precomputed weights of the discretised recursion.
#[derive(Debug, Clone)]
pub struct PicardSolver {
    pub barrier: f64,
    pub h: f64,
    pub nodes: usize,
    pub p_r: f64,
    pub beta: f64,
    pub j: f64,
    /// q_k = E[hat(k − W/h)], W = R(Y), stored in reverse order.
    q_rev: Vec<f64>,
    /// Weight of the barrier node: E[((W − (i−1)h)/h) 1{(i−1)h ≤ W ≤ ih}].
    r: Vec<f64>,
    /// T_i = P(W > ih).
    tail: Vec<f64>,
    w_left: f64,
    w_right: f64,
    closure: f64,
}

impl PicardSolver {
    /// Grid of spacing `h` on [αm, x_max] with e^{−J(x_max − αm)} < 1e-10.
    pub fn new(r: &RetentionFn, p: &MarketParams, s: &Severity, m: f64, h: f64) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::InvalidConfig(format!("grid spacing must be positive, got {h}")));
        }
        let np = net_profit_check(r, p, s);
        if !np.pass {
            return Err(Error::NetProfitViolated { margin: np.margin });
        }
        let j = solve_j(r, p, s)?;
        let barrier = p.alpha * m;
        let span = 10.0 * std::f64::consts::LN_10 / j;
        let nodes = (span / h).ceil() as usize + 2;
        let quad = Quadrature::with_tolerance(1e-16, 1e-12);

        // kernel support: P(W > K h) below KERNEL_TAIL
        let w_survival = |level: f64| -> f64 {
            match r.preimage(level) {
                Some(y) => s.survival(y),
                None => 0.0,
            }
        };
        let mut taps = 1usize;
        while taps < nodes && w_survival(taps as f64 * h) > KERNEL_TAIL {
            taps += 1;
        }
        taps += 2;

        let breaks_at = |levels: &[f64]| -> Vec<f64> {
            levels
                .iter()
                .filter_map(|&l| if l > 0.0 { r.preimage(l) } else { None })
                .collect()
        };
        let mut q = Vec::with_capacity(taps);
        for k in 0..taps {
            let kf = k as f64;
            let br = breaks_at(&[(kf - 1.0) * h, kf * h, (kf + 1.0) * h]);
            let v = r.expect(s, &quad, &br, |_, w| {
                let t = kf - w / h;
                [(1.0 - t.abs()).max(0.0)]
            })[0];
            q.push(v);
        }
        q.reverse();
        let mut rv = Vec::with_capacity(nodes);
        let mut tail = Vec::with_capacity(nodes);
        for i in 0..nodes {
            let lo = (i as f64 - 1.0) * h;
            let hi = i as f64 * h;
            tail.push(w_survival(hi));
            if i > taps {
                rv.push(0.0);
                continue;
            }
            let br = breaks_at(&[lo, hi]);
            let v = r.expect(s, &quad, &br, |_, w| {
                if w >= lo && w <= hi {
                    [(w - lo) / h]
                } else {
                    [0.0]
                }
            })[0];
            rv.push(v);
        }
        let beta = p.lambda / np.p_r;
        let a = beta * h;
        let total = -(-a).exp_m1();
        let w_right = total / a - (-a).exp();
        Ok(Self {
            barrier,
            h,
            nodes,
            p_r: np.p_r,
            beta,
            j,
            q_rev: q,
            r: rv,
            tail,
            w_left: total - w_right,
            w_right,
            closure: beta / (beta + j),
        })
    }

    pub fn initial(&self) -> PicardGrid {
        PicardGrid {
            barrier: self.barrier,
            h: self.h,
            x: (0..self.nodes)
                .map(|i| self.barrier + i as f64 * self.h)
                .collect(),
            values: vec![0.0; self.nodes],
            iteration: 0,
            last_change: f64::INFINITY,
            p_r: self.p_r,
            lundberg_j: self.j,
        }
    }

    /// One application of the recursion.
    pub fn step(&self, grid: &PicardGrid) -> PicardGrid {
        let n = self.nodes;
        let psi = &grid.values;
        let taps = self.q_rev.len();
        let g: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|i| {
                // Σ_{j=max(1, i−taps+1)}^{i} ψ_j q_{i−j}
                let j_lo = (i + 1).saturating_sub(taps).max(1);
                let acc = if j_lo <= i {
                    let k_hi = i - j_lo;
                    dot(&psi[j_lo..=i], &self.q_rev[taps - 1 - k_hi..])
                } else {
                    0.0
                };
                acc + psi[0] * self.r[i] + self.tail[i]
            })
            .collect();
        let decay = (-self.beta * self.h).exp();
        let mut out = vec![0.0; n];
        out[n - 1] = self.closure * g[n - 1];
        for i in (0..n - 1).rev() {
            out[i] = self.w_left * g[i] + self.w_right * g[i + 1] + decay * out[i + 1];
        }
        let change = out
            .iter()
            .zip(psi)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        PicardGrid {
            values: out,
            iteration: grid.iteration + 1,
            last_change: change,
            ..grid.clone()
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for l in 0..8 {
            acc[l] += x[l] * y[l];
        }
    }
    let mut s = acc.iter().sum::<f64>();
    for (x, y) in ra.iter().zip(rb) {
        s += x * y;
    }
    s
}

pub fn picard_step(
    grid: &PicardGrid,
    r: &RetentionFn,
    p: &MarketParams,
    s: &Severity,
    m: f64,
) -> Result<PicardGrid> {
    let solver = PicardSolver::new(r, p, s, m, grid.h)?;
    Ok(solver.step(grid))
}

/// Iteration trace of a Picard solve.
#[derive(Debug, Clone, Serialize)]
pub struct PicardRun {
    pub grid: PicardGrid,
    /// Sup-norm change per iteration.
    pub changes: Vec<f64>,
    /// Largest ψ_k − e^{−J(x−αm)} over all nodes and iterations.
    pub worst_lundberg_excess: f64,
    /// Whether ψ_k was nondecreasing in k at every node.
    pub monotone_in_k: bool,
}

pub const MAX_ITERATIONS: usize = 10_000;

pub fn picard_solve(
    r: &RetentionFn,
    p: &MarketParams,
    s: &Severity,
    m: f64,
    tol: f64,
    h: f64,
) -> Result<PicardRun> {
    let solver = PicardSolver::new(r, p, s, m, h)?;
    let mut grid = solver.initial();
    let mut changes = Vec::new();
    let mut worst = f64::NEG_INFINITY;
    let mut monotone = true;
    for _ in 0..MAX_ITERATIONS {
        let next = solver.step(&grid);
        monotone &= next.values.iter().zip(&grid.values).all(|(a, b)| *a >= *b);
        worst = worst.max(next.lundberg_excess());
        changes.push(next.last_change);
        grid = next;
        if grid.last_change < tol {
            return Ok(PicardRun {
                grid,
                changes,
                worst_lundberg_excess: worst,
                monotone_in_k: monotone,
            });
        }
    }
    Err(Error::MaxIterations(MAX_ITERATIONS))
}
