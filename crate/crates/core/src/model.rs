//! Market constants, claim severities and the n-scaling of the Cramér–Lundberg model.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{pieces, Quadrature};

/// Constants of the insurance market.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketParams {
    /// Claim arrival rate.
    pub lambda: f64,
    /// Expected-value loading of the reinsurance premium.
    pub theta: f64,
    /// Variance loading of the reinsurance premium.
    pub eta: f64,
    /// Premium income rate.
    pub c: f64,
    /// Drawdown fraction; `alpha = 0` is classical ruin.
    pub alpha: f64,
}

impl MarketParams {
    /// κ = (1+θ)λE[Y] + (η/2)λE[Y²] − c, the shortfall of the premium
    /// against the price of ceding everything.
    pub fn kappa(&self, s: &Severity) -> f64 {
        (1.0 + self.theta) * self.lambda * s.mean() + 0.5 * self.eta * self.lambda * s.moment(2)
            - self.c
    }

    /// Safety loading c − λE[Y]; scale invariant.
    pub fn net_premium(&self, s: &Severity) -> f64 {
        self.c - self.lambda * s.mean()
    }
}

/// Claim-size distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Severity {
    /// Exponential with the given rate.
    Exponential { rate: f64 },
    /// Uniform on (0, b].
    Uniform { b: f64 },
    /// Point mass at b.
    Deterministic { b: f64 },
}

/// Upper bound for `sup_{d ≥ 0} E[e^{a Z_d}]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupBound {
    /// Bound from the tail structure of the distribution.
    pub analytic: f64,
    /// Largest value found on the threshold grid.
    pub grid_max: f64,
    /// The larger of the two.
    pub bound: f64,
}

const GRID_POINTS: usize = 1024;

impl Severity {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Severity::Exponential { rate } => rate.is_finite() && rate > 0.0,
            Severity::Uniform { b } | Severity::Deterministic { b } => b.is_finite() && b > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidMarket(format!("severity parameter must be finite and positive: {self:?}")))
        }
    }

    /// Supremum of exponential orders with finite mgf.
    pub fn tail_radius(&self) -> f64 {
        match *self {
            Severity::Exponential { rate } => rate,
            _ => f64::INFINITY,
        }
    }

    /// Right end of the support.
    pub fn support_max(&self) -> f64 {
        match *self {
            Severity::Exponential { .. } => f64::INFINITY,
            Severity::Uniform { b } | Severity::Deterministic { b } => b,
        }
    }

    /// E[Y^k] for k = 1..4.
    pub fn moment(&self, k: u32) -> f64 {
        assert!((1..=4).contains(&k), "moment order must be in 1..=4");
        match *self {
            Severity::Exponential { rate } => {
                let fact: f64 = (1..=k).map(|i| i as f64).product();
                fact / rate.powi(k as i32)
            }
            Severity::Uniform { b } => b.powi(k as i32) / (k as f64 + 1.0),
            Severity::Deterministic { b } => b.powi(k as i32),
        }
    }

    pub fn mean(&self) -> f64 {
        self.moment(1)
    }

    /// S_Y(y) = P(Y > y).
    pub fn survival(&self, y: f64) -> f64 {
        if y < 0.0 {
            return 1.0;
        }
        match *self {
            Severity::Exponential { rate } => (-rate * y).exp(),
            Severity::Uniform { b } => (1.0 - y / b).max(0.0),
            Severity::Deterministic { b } => {
                if y < b {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// M_Y(t) = E[e^{tY}].
    pub fn mgf(&self, t: f64) -> Result<f64> {
        match *self {
            Severity::Exponential { rate } => {
                if t >= rate {
                    Err(Error::ExponentBeyondRadius { a: t, radius: rate })
                } else {
                    Ok(rate / (rate - t))
                }
            }
            Severity::Uniform { b } => {
                let z = t * b;
                Ok(if z == 0.0 { 1.0 } else { z.exp_m1() / z })
            }
            Severity::Deterministic { b } => Ok((t * b).exp()),
        }
    }

    /// E[f(Y)] for a vector-valued `f` that is smooth between the given breakpoints.
    pub fn expect<const K: usize, F: FnMut(f64) -> [f64; K]>(
        &self,
        quad: &Quadrature,
        breaks: &[f64],
        mut f: F,
    ) -> [f64; K] {
        match *self {
            Severity::Exponential { rate } => {
                let mut g = |y: f64| {
                    let w = rate * (-rate * y).exp();
                    let v = f(y);
                    let mut out = [0.0; K];
                    for k in 0..K {
                        out[k] = if w == 0.0 { 0.0 } else { w * v[k] };
                    }
                    out
                };
                exponential_integral(quad, rate, breaks, &mut g)
            }
            Severity::Uniform { b } => {
                let pts = pieces(0.0, b, breaks);
                let mut v = quad.integrate_pieces_vec(&mut f, &pts);
                for x in v.iter_mut() {
                    *x /= b;
                }
                v
            }
            Severity::Deterministic { b } => f(b),
        }
    }

    /// ∫_0^∞ f(y) S_Y(y) dy.
    pub fn survival_integral<const K: usize, F: FnMut(f64) -> [f64; K]>(
        &self,
        quad: &Quadrature,
        breaks: &[f64],
        mut f: F,
    ) -> [f64; K] {
        match *self {
            Severity::Exponential { rate } => {
                let mut g = |y: f64| {
                    let w = (-rate * y).exp();
                    let v = f(y);
                    let mut out = [0.0; K];
                    for k in 0..K {
                        out[k] = if w == 0.0 { 0.0 } else { w * v[k] };
                    }
                    out
                };
                exponential_integral(quad, rate, breaks, &mut g)
            }
            Severity::Uniform { b } => {
                let pts = pieces(0.0, b, breaks);
                quad.integrate_pieces_vec(
                    &mut |y| {
                        let w = 1.0 - y / b;
                        let v = f(y);
                        let mut out = [0.0; K];
                        for k in 0..K {
                            out[k] = w * v[k];
                        }
                        out
                    },
                    &pts,
                )
            }
            Severity::Deterministic { b } => {
                let pts = pieces(0.0, b, breaks);
                quad.integrate_pieces_vec(&mut f, &pts)
            }
        }
    }

    fn check_threshold(&self, d: f64) -> Result<()> {
        if d < 0.0 || self.survival(d) <= 0.0 {
            Err(Error::ThresholdBeyondSupport { d })
        } else {
            Ok(())
        }
    }

    /// E[Z_d] for the excess variable Z_d = (Y − d) | Y > d.
    pub fn excess_mean(&self, d: f64) -> Result<f64> {
        self.check_threshold(d)?;
        Ok(match *self {
            Severity::Exponential { rate } => 1.0 / rate,
            Severity::Uniform { b } => 0.5 * (b - d),
            Severity::Deterministic { b } => b - d,
        })
    }

    /// (E[e^{aZ_d}], E[Z_d² e^{aZ_d}]).
    pub fn excess_exp_moments(&self, d: f64, a: f64) -> Result<(f64, f64)> {
        self.check_threshold(d)?;
        match *self {
            Severity::Exponential { rate } => {
                if a >= rate {
                    return Err(Error::ExponentBeyondRadius { a, radius: rate });
                }
                let r = rate - a;
                Ok((rate / r, 2.0 * rate / (r * r * r)))
            }
            Severity::Uniform { b } => {
                let len = b - d;
                let quad = Quadrature::with_tolerance(0.0, 1e-12);
                let v = quad.integrate_vec(
                    &mut |z| {
                        let e = (a * z).exp();
                        [e, z * z * e]
                    },
                    0.0,
                    len,
                );
                Ok((v[0] / len, v[1] / len))
            }
            Severity::Deterministic { b } => {
                let z = b - d;
                let e = (a * z).exp();
                Ok((e, z * z * e))
            }
        }
    }

    /// Largest threshold kept on the grid: S_Y(d_max) stays at or above 1e-10.
    fn d_max(&self) -> f64 {
        match *self {
            Severity::Exponential { rate } => 10.0 * std::f64::consts::LN_10 / rate,
            Severity::Uniform { b } | Severity::Deterministic { b } => b * (1.0 - 1e-10),
        }
    }

    /// Threshold grid: 0 followed by a geometric grid ending at `d_max`.
    pub fn threshold_grid(&self) -> Vec<f64> {
        let hi = self.d_max();
        let lo = hi * 1e-6;
        let ratio = (hi / lo).powf(1.0 / (GRID_POINTS - 2) as f64);
        let mut grid = Vec::with_capacity(GRID_POINTS);
        grid.push(0.0);
        let mut d = lo;
        for _ in 0..GRID_POINTS - 1 {
            grid.push(d.min(hi));
            d *= ratio;
        }
        grid
    }

    /// Maximum of a threshold functional over the grid.
    pub fn sup_over_thresholds<F: FnMut(f64) -> Result<f64>>(&self, mut g: F) -> Result<f64> {
        let mut best = f64::NEG_INFINITY;
        for d in self.threshold_grid() {
            best = best.max(g(d)?);
        }
        Ok(best)
    }

    /// Bound for `sup_d E[e^{aZ_d}]`.
    pub fn hazard_tail_check(&self, a: f64) -> Result<SupBound> {
        let t0 = self.tail_radius();
        if a >= t0 {
            return Err(Error::ExponentBeyondRadius { a, radius: t0 });
        }
        let analytic = match *self {
            // Constant hazard rate: Z_d has the law of Y for every d.
            Severity::Exponential { rate } => rate / (rate - a),
            // Z_d ≤ b − d ≤ b.
            Severity::Uniform { b } | Severity::Deterministic { b } => (a.max(0.0) * b).exp(),
        };
        let grid_max = self.sup_over_thresholds(|d| Ok(self.excess_exp_moments(d, a)?.0))?;
        Ok(SupBound {
            analytic,
            grid_max,
            bound: analytic.max(grid_max),
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Severity::Exponential { rate } => {
                let e: f64 = Exp1.sample(rng);
                e / rate
            }
            Severity::Uniform { b } => b * (1.0 - rng.random::<f64>()),
            Severity::Deterministic { b } => b,
        }
    }
}

fn exponential_integral<const K: usize, F: FnMut(f64) -> [f64; K]>(
    quad: &Quadrature,
    rate: f64,
    breaks: &[f64],
    g: &mut F,
) -> [f64; K] {
    let last = breaks
        .iter()
        .copied()
        .filter(|b| b.is_finite() && *b > 0.0)
        .fold(0.0_f64, f64::max);
    let mut total = [0.0; K];
    if last > 0.0 {
        let pts = pieces(0.0, last, breaks);
        total = quad.integrate_pieces_vec(g, &pts);
    }
    let tail = quad.integrate_tail_vec(g, last, 1.0 / rate, last + 45.0 / rate);
    for k in 0..K {
        total[k] += tail[k];
    }
    total
}

/// Parameters of the n-scaled model: rate nλ, claims Y/√n, loading θ/√n and
/// premium c + (√n − 1)λE[Y].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScaledParams {
    pub n: f64,
    pub sqrt_n: f64,
    pub lambda_n: f64,
    pub theta_n: f64,
    pub eta: f64,
    pub c_n: f64,
    pub alpha: f64,
    /// Mean of the scaled claim Y_n = Y/√n.
    pub mean_n: f64,
    /// Second moment of Y_n.
    pub second_n: f64,
}

impl ScaledParams {
    pub fn kappa(&self) -> f64 {
        (1.0 + self.theta_n) * self.lambda_n * self.mean_n
            + 0.5 * self.eta * self.lambda_n * self.second_n
            - self.c_n
    }

    pub fn net_premium(&self) -> f64 {
        self.c_n - self.lambda_n * self.mean_n
    }
}

pub fn scale(p: &MarketParams, s: &Severity, n: f64) -> Result<ScaledParams> {
    if !(n >= 1.0) || !n.is_finite() {
        return Err(Error::InvalidScale { n });
    }
    let sqrt_n = n.sqrt();
    Ok(ScaledParams {
        n,
        sqrt_n,
        lambda_n: n * p.lambda,
        theta_n: p.theta / sqrt_n,
        eta: p.eta,
        c_n: p.c + (sqrt_n - 1.0) * p.lambda * s.mean(),
        alpha: p.alpha,
        mean_n: s.mean() / sqrt_n,
        second_n: s.moment(2) / n,
    })
}

/// A point (x, m) of the drawdown domain αm ≤ x ≤ m.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DrawdownState {
    pub x: f64,
    pub m: f64,
}

impl DrawdownState {
    pub fn new(x: f64, m: f64, alpha: f64) -> Result<Self> {
        let s = Self { x, m };
        if s.in_domain(alpha) {
            Ok(s)
        } else {
            Err(Error::StateOutsideDomain { x, m })
        }
    }

    pub fn in_domain(&self, alpha: f64) -> bool {
        self.m >= 0.0 && self.x <= self.m && self.x >= alpha * self.m
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub pass: bool,
    pub kappa: f64,
    pub net_premium: f64,
    pub full_reinsurance_premium: f64,
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }
}

pub fn validate_market(p: &MarketParams, s: &Severity) -> ValidationReport {
    let mut checks = Vec::new();
    let mut push = |name: &str, pass: bool, detail: String| {
        checks.push(Check {
            name: name.to_string(),
            pass,
            detail,
        })
    };
    let sev_ok = s.validate().is_ok();
    push("severity_parameters", sev_ok, format!("{s:?}"));
    push(
        "lambda_positive",
        p.lambda.is_finite() && p.lambda > 0.0,
        format!("lambda = {}", p.lambda),
    );
    push(
        "theta_nonnegative",
        p.theta.is_finite() && p.theta >= 0.0,
        format!("theta = {}", p.theta),
    );
    push(
        "eta_positive",
        p.eta.is_finite() && p.eta > 0.0,
        format!("eta = {}", p.eta),
    );
    push(
        "alpha_in_unit_interval",
        p.alpha >= 0.0 && p.alpha < 1.0,
        format!("alpha = {}", p.alpha),
    );
    let (kappa, net, full) = if sev_ok {
        (
            p.kappa(s),
            p.net_premium(s),
            (1.0 + p.theta) * p.lambda * s.mean() + 0.5 * p.eta * p.lambda * s.moment(2),
        )
    } else {
        (f64::NAN, f64::NAN, f64::NAN)
    };
    push(
        "positive_safety_loading",
        net > 0.0,
        format!("c - lambda E[Y] = {net}"),
    );
    push(
        "full_reinsurance_unaffordable",
        kappa > 0.0,
        format!("kappa = {kappa} (full reinsurance premium {full}, c = {})", p.c),
    );
    let pass = checks.iter().all(|c| c.pass);
    ValidationReport {
        pass,
        kappa,
        net_premium: net,
        full_reinsurance_premium: full,
        checks,
    }
}

/// Validates and returns κ, or the list of failed checks.
pub fn require_valid(p: &MarketParams, s: &Severity) -> Result<f64> {
    let r = validate_market(p, s);
    if r.pass {
        Ok(r.kappa)
    } else {
        let why: Vec<String> = r
            .failures()
            .iter()
            .map(|c| format!("{}: {}", c.name, c.detail))
            .collect();
        Err(Error::InvalidMarket(why.join("; ")))
    }
}
