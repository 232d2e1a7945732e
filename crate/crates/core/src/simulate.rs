//! Monte Carlo drawdown probabilities for the n-scaled surplus under a constant
//! retention, with an exact jump-chain scheme and an Euler scheme for the
//! diffusion approximation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adjustment::{solve_rho_d, solve_rho_n_of_r};
use crate::error::{Error, Result};
use crate::model::{MarketParams, Severity};
use crate::retention::{net_profit_from_moments, profit_margin, RetentionFn};

/// Number of independent RNG streams; fixed so results do not depend on the worker count.
pub const BATCHES: u64 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BarrierMode {
    /// The barrier αM follows the running maximum.
    Drawdown,
    /// The barrier stays at αm0.
    FixedRuin,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scheme {
    JumpExact,
    DiffusionEuler { dt: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimConfig {
    pub n: f64,
    /// Retention on original-scale claims; the scaled process uses R(√n y)/√n.
    pub retention: RetentionFn,
    pub x0: f64,
    pub m0: f64,
    /// Escape level b = barrier_mult · max(m0, 1/ρ_D).
    pub barrier_mult: f64,
    pub paths: u64,
    pub seed: u64,
    pub mode: BarrierMode,
    pub scheme: Scheme,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PathOutcome {
    Drawdown,
    Escaped,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub p_hat: f64,
    pub se: f64,
    pub paths: u64,
    pub hits: u64,
    /// Upper bound on the drawdown probability lost by stopping paths at the escape level.
    pub truncation_bound: f64,
    pub ci95: [f64; 2],
    pub barrier: f64,
    pub drift: f64,
    pub rho_truncation: f64,
    pub dt: Option<f64>,
}

/// Scale-invariance of the net drift.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DriftReport {
    pub n: f64,
    /// p_R + λ(√n − 1)E[R], the slope between claims.
    pub drift_n: f64,
    /// nλ · E[R(Y)/√n].
    pub claim_rate_n: f64,
    pub net_drift: f64,
    /// p_R − λE[R] of the unscaled model.
    pub net_drift_unscaled: f64,
    pub identity_error: f64,
    pub positive: bool,
}

pub fn drift_identity_check(
    cfg: &SimConfig,
    p: &MarketParams,
    s: &Severity,
) -> Result<DriftReport> {
    if !(cfg.n >= 1.0) {
        return Err(Error::InvalidScale { n: cfg.n });
    }
    let m = cfg.retention.moments(s);
    let np = net_profit_from_moments(p, s, &m);
    let sqrt_n = cfg.n.sqrt();
    let drift_n = np.p_r + p.lambda * (sqrt_n - 1.0) * m.er;
    let claim_rate_n = cfg.n * p.lambda * m.er / sqrt_n;
    let net = drift_n - claim_rate_n;
    Ok(DriftReport {
        n: cfg.n,
        drift_n,
        claim_rate_n,
        net_drift: net,
        net_drift_unscaled: np.margin,
        identity_error: (net - np.margin).abs(),
        positive: net > 0.0,
    })
}

/// A validated configuration with every derived rate resolved.
#[derive(Debug, Clone, Copy)]
pub struct PreparedSim {
    pub cfg: SimConfig,
    pub severity: Severity,
    pub alpha: f64,
    pub sqrt_n: f64,
    pub lambda_n: f64,
    pub drift_n: f64,
    pub barrier: f64,
    /// Diffusion drift and volatility.
    pub mu: f64,
    pub sigma: f64,
    pub rho_truncation: f64,
    pub truncation_bound: f64,
}

impl PreparedSim {
    pub fn new(cfg: &SimConfig, p: &MarketParams, s: &Severity) -> Result<Self> {
        cfg.retention.validate()?;
        if cfg.paths == 0 {
            return Err(Error::InvalidConfig("paths must be at least 1".into()));
        }
        if !(cfg.n >= 1.0) || !cfg.n.is_finite() {
            return Err(Error::InvalidScale { n: cfg.n });
        }
        if !(p.alpha * cfg.m0 <= cfg.x0 && cfg.x0 <= cfg.m0) {
            return Err(Error::StateOutsideDomain {
                x: cfg.x0,
                m: cfg.m0,
            });
        }
        if !(cfg.barrier_mult > 1.0) || !cfg.barrier_mult.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "barrier_mult must exceed 1, got {}",
                cfg.barrier_mult
            )));
        }
        let mo = cfg.retention.moments(s);
        let np = net_profit_from_moments(p, s, &mo);
        if !np.pass {
            return Err(Error::NetProfitViolated { margin: np.margin });
        }
        let sqrt_n = cfg.n.sqrt();
        let drift_n = np.p_r + p.lambda * (sqrt_n - 1.0) * mo.er;
        if !(drift_n > 0.0) {
            return Err(Error::DriftNonpositive { drift: drift_n });
        }
        let mu = profit_margin(p, s, &mo);
        let sigma = (p.lambda * mo.er2).sqrt();
        let rho = match cfg.scheme {
            Scheme::JumpExact => solve_rho_n_of_r(&cfg.retention, cfg.n, p, s)?,
            Scheme::DiffusionEuler { dt } => {
                if !(dt > 0.0) {
                    return Err(Error::InvalidConfig(format!("dt must be positive, got {dt}")));
                }
                2.0 * mu / (sigma * sigma)
            }
        };
        let barrier = cfg.barrier_mult * cfg.m0.max(1.0 / solve_rho_d(p, s)?);
        let mut sim = Self {
            cfg: *cfg,
            severity: *s,
            alpha: p.alpha,
            sqrt_n,
            lambda_n: cfg.n * p.lambda,
            drift_n,
            barrier,
            mu,
            sigma,
            rho_truncation: rho,
            truncation_bound: 0.0,
        };
        sim.truncation_bound = sim.truncation_at(barrier);
        Ok(sim)
    }

    /// Replaces the escape level.
    pub fn with_barrier(mut self, b: f64) -> Self {
        self.barrier = b;
        self.truncation_bound = self.truncation_at(b);
        self
    }

    fn truncation_at(&self, b: f64) -> f64 {
        let rho = self.rho_truncation;
        match self.cfg.mode {
            // After escape X = M = b; the drawdown probability from (b, b)
            // under this retention is dominated by the supersolution with ρ.
            BarrierMode::Drawdown => {
                let a = 1.0 - self.alpha;
                let base = -(-rho * a * b).exp_m1();
                1.0 - base.powf(1.0 / a)
            }
            BarrierMode::FixedRuin => (-rho * (b - self.alpha * self.cfg.m0)).exp().min(1.0),
        }
    }

    /// One path of the exact jump chain.
    pub fn simulate_path<G: Rng + ?Sized>(&self, rng: &mut G) -> PathOutcome {
        let r = self.cfg.retention;
        let s = self.severity;
        jump_path(self, rng, &|g: &mut G| s.sample(g), &|y| r.eval(y))
    }

    /// One path of the Euler scheme.
    pub fn simulate_diffusion_path<G: Rng + ?Sized>(&self, rng: &mut G) -> PathOutcome {
        let dt = match self.cfg.scheme {
            Scheme::DiffusionEuler { dt } => dt,
            Scheme::JumpExact => 1e-3,
        };
        euler_path(self, rng, self.mu * dt, self.sigma * dt.sqrt())
    }
}

#[inline(always)]
fn jump_path<G, FS, FR>(sim: &PreparedSim, rng: &mut G, sample: &FS, ret: &FR) -> PathOutcome
where
    G: Rng + ?Sized,
    FS: Fn(&mut G) -> f64,
    FR: Fn(f64) -> f64,
{
    let b = sim.barrier;
    let alpha = sim.alpha;
    let inv_rate = 1.0 / sim.lambda_n;
    let drift = sim.drift_n;
    let inv_sqrt_n = 1.0 / sim.sqrt_n;
    let running = sim.cfg.mode == BarrierMode::Drawdown;
    let mut x = sim.cfg.x0;
    let mut m = sim.cfg.m0;
    let mut floor = alpha * m;
    if x >= b {
        return PathOutcome::Escaped;
    }
    loop {
        let e: f64 = Exp1.sample(rng);
        x += drift * e * inv_rate;
        if x >= b {
            return PathOutcome::Escaped;
        }
        if running && x > m {
            m = x;
            floor = alpha * m;
        }
        x -= ret(sample(rng)) * inv_sqrt_n;
        if x < floor {
            return PathOutcome::Drawdown;
        }
    }
}

#[inline(always)]
fn euler_path<G: Rng + ?Sized>(sim: &PreparedSim, rng: &mut G, step_mu: f64, step_sd: f64) -> PathOutcome {
    let b = sim.barrier;
    let alpha = sim.alpha;
    let running = sim.cfg.mode == BarrierMode::Drawdown;
    let mut x = sim.cfg.x0;
    let mut m = sim.cfg.m0;
    let mut floor = alpha * m;
    if x >= b {
        return PathOutcome::Escaped;
    }
    loop {
        let z: f64 = StandardNormal.sample(rng);
        x += step_mu + step_sd * z;
        if x >= b {
            return PathOutcome::Escaped;
        }
        if running && x > m {
            m = x;
            floor = alpha * m;
        } else if x < floor {
            return PathOutcome::Drawdown;
        }
    }
}

/// The RNG stream of one batch.
pub fn batch_rng(seed: u64, batch: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(batch);
    rng
}

fn batch_sizes(paths: u64) -> Vec<u64> {
    (0..BATCHES)
        .map(|i| paths / BATCHES + u64::from(i < paths % BATCHES))
        .collect()
}

fn run_batches<F>(sim: &PreparedSim, per_batch: F) -> u64
where
    F: Fn(&mut ChaCha8Rng, u64) -> u64 + Sync,
{
    let sizes = batch_sizes(sim.cfg.paths);
    let hits: Vec<u64> = (0..BATCHES)
        .into_par_iter()
        .map(|i| {
            let mut rng = batch_rng(sim.cfg.seed, i);
            per_batch(&mut rng, sizes[i as usize])
        })
        .collect();
    hits.iter().sum()
}

fn count_jump<FS, FR>(sim: &PreparedSim, rng: &mut ChaCha8Rng, count: u64, sample: FS, ret: FR) -> u64
where
    FS: Fn(&mut ChaCha8Rng) -> f64,
    FR: Fn(f64) -> f64,
{
    let mut hits = 0;
    for _ in 0..count {
        if jump_path(sim, rng, &sample, &ret) == PathOutcome::Drawdown {
            hits += 1;
        }
    }
    hits
}

fn with_retention<FS>(sim: &PreparedSim, rng: &mut ChaCha8Rng, count: u64, sample: FS) -> u64
where
    FS: Fn(&mut ChaCha8Rng) -> f64,
{
    match sim.cfg.retention {
        RetentionFn::Full => count_jump(sim, rng, count, sample, |y| y),
        RetentionFn::Proportional { q } => count_jump(sim, rng, count, sample, move |y| q * y),
        RetentionFn::Cap { d } => count_jump(sim, rng, count, sample, move |y: f64| y.min(d)),
        RetentionFn::DiffusionOptimal { rho, theta, eta } => {
            let k = 1.0 / (rho + eta);
            count_jump(sim, rng, count, sample, move |y: f64| ((theta + eta * y) * k).min(y))
        }
        r @ RetentionFn::MaxAdjust { .. } => count_jump(sim, rng, count, sample, move |y| r.eval(y)),
    }
}

fn jump_batch(sim: &PreparedSim, rng: &mut ChaCha8Rng, count: u64) -> u64 {
    match sim.severity {
        Severity::Exponential { rate } => {
            let inv = 1.0 / rate;
            with_retention(sim, rng, count, move |g: &mut ChaCha8Rng| {
                let e: f64 = Exp1.sample(g);
                e * inv
            })
        }
        Severity::Uniform { b } => with_retention(sim, rng, count, move |g: &mut ChaCha8Rng| {
            b * (1.0 - g.random::<f64>())
        }),
        Severity::Deterministic { b } => with_retention(sim, rng, count, move |_: &mut ChaCha8Rng| b),
    }
}

fn finish(sim: &PreparedSim, hits: u64) -> McEstimate {
    let paths = sim.cfg.paths;
    let p_hat = hits as f64 / paths as f64;
    let se = (p_hat * (1.0 - p_hat) / paths as f64).sqrt();
    McEstimate {
        p_hat,
        se,
        paths,
        hits,
        truncation_bound: sim.truncation_bound,
        ci95: [(p_hat - 1.96 * se).max(0.0), (p_hat + 1.96 * se).min(1.0)],
        barrier: sim.barrier,
        drift: match sim.cfg.scheme {
            Scheme::JumpExact => sim.drift_n,
            Scheme::DiffusionEuler { .. } => sim.mu,
        },
        rho_truncation: sim.rho_truncation,
        dt: match sim.cfg.scheme {
            Scheme::JumpExact => None,
            Scheme::DiffusionEuler { dt } => Some(dt),
        },
    }
}

/// Runs a prepared simulation with either scheme.
pub fn run_prepared(sim: &PreparedSim) -> McEstimate {
    let hits = match sim.cfg.scheme {
        Scheme::JumpExact => run_batches(sim, |rng, count| jump_batch(sim, rng, count)),
        Scheme::DiffusionEuler { dt } => {
            let (mu, sd) = (sim.mu * dt, sim.sigma * dt.sqrt());
            run_batches(sim, |rng, count| {
                let mut hits = 0;
                for _ in 0..count {
                    if euler_path(sim, rng, mu, sd) == PathOutcome::Drawdown {
                        hits += 1;
                    }
                }
                hits
            })
        }
    };
    finish(sim, hits)
}

/// Drawdown probability estimate for the configured scheme.
pub fn mc_estimate(cfg: &SimConfig, p: &MarketParams, s: &Severity) -> Result<McEstimate> {
    Ok(run_prepared(&PreparedSim::new(cfg, p, s)?))
}

/// Euler–Maruyama estimate for the diffusion approximation under the configured retention.
pub fn diffusion_estimate(cfg: &SimConfig, p: &MarketParams, s: &Severity) -> Result<McEstimate> {
    if !matches!(cfg.scheme, Scheme::DiffusionEuler { .. }) {
        return Err(Error::InvalidConfig("diffusion_estimate needs the diffusion_euler scheme".into()));
    }
    mc_estimate(cfg, p, s)
}
