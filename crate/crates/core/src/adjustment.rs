//! Adjustment coefficients and the explicit constants of the O(n^{-1/2}) bounds.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{require_valid, MarketParams, Severity};
use crate::numeric::{bisect, expm1_minus_z, smallest_integer, Quadrature};
use crate::retention::{check_r, profit_margin, RetentionFn, RetentionMoments};

const ROOT_REL_TOL: f64 = 1e-14;

/// Root of an increasing function on (0, cap), searching outward from `start`.
fn solve_increasing<F: FnMut(f64) -> f64>(
    mut f: F,
    start: f64,
    cap: f64,
    what: &'static str,
) -> Result<f64> {
    let mut lo = start.min(0.5 * cap);
    let mut hi;
    if f(lo) > 0.0 {
        hi = lo;
        loop {
            lo *= 0.5;
            if lo < 1e-200 {
                return Err(Error::SolverNoBracket { what });
            }
            if f(lo) < 0.0 {
                break;
            }
            hi = lo;
        }
    } else {
        hi = lo;
        loop {
            lo = hi;
            hi = (hi * 2.0).min(cap);
            let v = f(hi);
            if v.is_nan() {
                return Err(Error::SolverNoBracket { what });
            }
            if v > 0.0 {
                break;
            }
            if hi >= cap {
                return Err(Error::SolverNoBracket { what });
            }
        }
    }
    Ok(bisect(&mut f, lo, hi, 0.0, ROOT_REL_TOL, what)?.x)
}

/// λρ∫ R_D(y; ρ) S_Y(y) dy − (c − λE[Y]) divided by c − λE[Y].
pub fn rho_d_residual(p: &MarketParams, s: &Severity, rho: f64) -> f64 {
    let q = Quadrature::default();
    let r = RetentionFn::diffusion_optimal(rho, p);
    let integral = s.survival_integral(&q, &r.breakpoints(), |y| [r.eval(y)])[0];
    let target = p.net_premium(s);
    (p.lambda * rho * integral - target) / target
}

/// The maximal adjustment coefficient ρ_D of the diffusion approximation.
pub fn solve_rho_d(p: &MarketParams, s: &Severity) -> Result<f64> {
    require_valid(p, s)?;
    let guess = 2.0 * p.net_premium(s) / (p.lambda * s.moment(2));
    solve_increasing(|rho| rho_d_residual(p, s, rho), guess, 1e12, "rho_D")
}

/// θE[R] + ηE[YR] − ((ρ + η)/2)E[R²]; at ρ_D and R_D this equals κ/λ.
pub fn hjb_bracket(p: &MarketParams, m: &RetentionMoments, rho: f64) -> f64 {
    p.theta * m.er + p.eta * m.eyr - 0.5 * (rho + p.eta) * m.er2
}

/// √nλ∫(e^{ρŘ(t;ρ)/√n} − 1) S_Y(t) dt − (c − λE[Y]) divided by c − λE[Y].
pub fn rho_n_residual(n: f64, p: &MarketParams, s: &Severity, rho: f64) -> f64 {
    let q = Quadrature::default();
    let sqrt_n = n.sqrt();
    let r = RetentionFn::max_adjust(rho, n, p);
    let threshold = r.breakpoints()[0];
    let integral = s.survival_integral(&q, &[threshold], |y| {
        // above the threshold √n(e^{ρŘ/√n} − 1) = θ + η(y − Ř) exactly
        let v = if y <= threshold {
            sqrt_n * (rho * y / sqrt_n).exp_m1()
        } else {
            let ry = check_r(y, rho, sqrt_n, p.theta, p.eta);
            p.theta + p.eta * (y - ry)
        };
        [v]
    });
    let target = p.net_premium(s);
    (p.lambda * integral[0] - target) / target
}

/// The maximal adjustment coefficient ρ_n of the n-scaled model.
pub fn solve_rho_n(n: f64, p: &MarketParams, s: &Severity) -> Result<f64> {
    require_valid(p, s)?;
    if !(n >= 1.0) {
        return Err(Error::InvalidScale { n });
    }
    let guess = 2.0 * p.net_premium(s) / (p.lambda * s.moment(2));
    solve_increasing(|rho| rho_n_residual(n, p, s, rho), guess, 1e12, "rho_n")
}

/// nλ g_n(ρ; R) with g_n(ρ; R) = (1/ρ) E[e^{ρR/√n} − 1 − ρR/√n].
pub fn n_lambda_g(r: &RetentionFn, n: f64, p: &MarketParams, s: &Severity, rho: f64) -> f64 {
    let sqrt_n = n.sqrt();
    let q = Quadrature::default();
    let e = r.expect(s, &q, &[], |_, x| [expm1_minus_z(rho * x / sqrt_n)])[0];
    n * p.lambda * e / rho
}

fn margin_of(r: &RetentionFn, p: &MarketParams, s: &Severity) -> Result<f64> {
    let m = r.moments(s);
    let a = profit_margin(p, s, &m);
    if a > 0.0 {
        Ok(a)
    } else {
        Err(Error::NetProfitViolated { margin: a })
    }
}

/// Relative residual of nλ g_n(ρ; R) = λ(θE[R] + ηE[YR] − (η/2)E[R²]) − κ.
pub fn rho_n_of_r_residual(r: &RetentionFn, n: f64, p: &MarketParams, s: &Severity, rho: f64) -> f64 {
    let a = profit_margin(p, s, &r.moments(s));
    (n_lambda_g(r, n, p, s, rho) - a) / a
}

/// Adjustment coefficient ρ_n(R) of a fixed retention in the n-scaled model.
pub fn solve_rho_n_of_r(r: &RetentionFn, n: f64, p: &MarketParams, s: &Severity) -> Result<f64> {
    if !(n >= 1.0) {
        return Err(Error::InvalidScale { n });
    }
    let a = margin_of(r, p, s)?;
    let radius = n.sqrt() * r.exp_radius(s);
    let cap = if radius.is_finite() { 0.999 * radius } else { 1e12 };
    let guess = (2.0 * a / (p.lambda * r.moments(s).er2)).min(0.5 * cap);
    solve_increasing(|rho| n_lambda_g(r, n, p, s, rho) - a, guess, cap, "rho_n(R)")
}

/// Relative residual of λ(E[e^{JR}] − 1 − J E[R]) = J·A(R).
pub fn j_residual(r: &RetentionFn, p: &MarketParams, s: &Severity, j: f64) -> f64 {
    let a = profit_margin(p, s, &r.moments(s));
    let q = Quadrature::default();
    let e = r.expect(s, &q, &[], |_, x| [expm1_minus_z(j * x)])[0];
    (p.lambda * e - j * a) / (j * a)
}

/// Lundberg exponent J(R) of the unscaled model.
pub fn solve_j(r: &RetentionFn, p: &MarketParams, s: &Severity) -> Result<f64> {
    let a = margin_of(r, p, s)?;
    let radius = r.exp_radius(s);
    if radius.is_finite() {
        // the root must lie below the radius where E[e^{JR}] blows up
        let cap = 0.999 * radius;
        let at_cap = n_lambda_g(r, 1.0, p, s, cap) - a;
        if !(at_cap > 0.0) {
            return Err(Error::ExponentBeyondRadius { a: cap, radius });
        }
    }
    let cap = if radius.is_finite() { 0.999 * radius } else { 1e12 };
    let guess = (2.0 * a / (p.lambda * r.moments(s).er2)).min(0.5 * cap);
    solve_increasing(|j| n_lambda_g(r, 1.0, p, s, j) - a, guess, cap, "J")
}

/// Explicit constants of the upper and lower bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceConstants {
    #[serde(rename = "rho_D")]
    pub rho_d: f64,
    /// ρ_n evaluated at `n_eval`.
    pub rho_n: f64,
    /// ρ_n(R_D) evaluated at `n_eval`.
    #[serde(rename = "rho_n_of_RD")]
    pub rho_n_of_rd: f64,
    pub n_eval: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub epsilon: f64,
    pub epsilon_frac: f64,
    pub varsigma: f64,
    pub delta: f64,
    pub sup_excess_mean: f64,
    #[serde(rename = "N_lower")]
    pub n_lower: u64,
    #[serde(rename = "N_lemma32")]
    pub n_lemma32: u64,
    #[serde(rename = "M")]
    pub m: u64,
    #[serde(rename = "M_prime")]
    pub m_prime: u64,
    #[serde(rename = "C_prime")]
    pub c_prime: f64,
    #[serde(rename = "N_prime")]
    pub n_prime: u64,
    pub alpha: f64,
}

impl ConvergenceConstants {
    /// Exponent ρ_D − C/√n of the upper bound u_n.
    pub fn upper_exponent(&self, n: f64) -> f64 {
        self.rho_d - self.c / n.sqrt()
    }
}

/// Moments of R_D(·; ρ_D) and the constant C = 1.01·ρ_D² E[R_D³] / (3 E[R_D²]).
pub fn const_c(p: &MarketParams, s: &Severity, rho_d: f64) -> f64 {
    let m = RetentionFn::diffusion_optimal(rho_d, p).moments(s);
    1.01 * rho_d * rho_d * m.er3 / (3.0 * m.er2)
}

/// Both sides of the inequality that defines N in the lower bound on ρ_n.
pub fn lemma32_sides(p: &MarketParams, s: &Severity, rho_d: f64, c: f64, n: f64) -> (f64, f64) {
    let r = RetentionFn::diffusion_optimal(rho_d, p);
    let m = r.moments(s);
    let lhs = m.er2 * c - rho_d * rho_d * m.er3 / 3.0;
    let a = rho_d / n.sqrt();
    if a >= r.exp_radius(s) {
        return (lhs, f64::INFINITY);
    }
    let q = Quadrature::default();
    let e = r.expect(s, &q, &[], |_, x| [x.powi(4) * (a * x).exp()])[0];
    (lhs, rho_d.powi(3) / (3.0 * n.sqrt()) * e)
}

pub fn lemma32_holds(p: &MarketParams, s: &Severity, rho_d: f64, c: f64, n: u64) -> bool {
    let nf = n as f64;
    if !(rho_d - c / nf.sqrt() > 0.0) {
        return false;
    }
    let (lhs, rhs) = lemma32_sides(p, s, rho_d, c, nf);
    lhs > rhs
}

pub fn find_n_lemma32(p: &MarketParams, s: &Severity, rho_d: f64, c: f64) -> Result<u64> {
    smallest_integer(|n| lemma32_holds(p, s, rho_d, c, n), 1, 1 << 52)
        .ok_or(Error::SolverNoBracket { what: "N_lemma32" })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LowerConstants {
    pub epsilon: f64,
    pub varsigma: f64,
    pub delta: f64,
    pub sup_excess_mean: f64,
    pub n_lower: u64,
}

/// sup_d (ρ_D²/√N) E[Z_d² e^{ρ_D Z_d/√N}].
pub fn lower_tail_term(s: &Severity, rho_d: f64, n: f64) -> Result<f64> {
    let a = rho_d / n.sqrt();
    let sup = s.sup_over_thresholds(|d| Ok(s.excess_exp_moments(d, a)?.1))?;
    Ok(rho_d * rho_d / n.sqrt() * sup)
}

pub fn const_delta_n(s: &Severity, rho_d: f64, epsilon_frac: f64) -> Result<LowerConstants> {
    let t0 = s.tail_radius();
    let varsigma = if t0.is_finite() {
        (2.0 * rho_d / t0).powi(2).max(1.0)
    } else {
        1.0
    };
    let check = s
        .hazard_tail_check(rho_d / varsigma.sqrt())
        .map_err(|e| Error::TailConditionFailed(e.to_string()))?;
    if !check.bound.is_finite() {
        return Err(Error::TailConditionFailed(format!("sup bound {}", check.bound)));
    }
    let sup_mean = s.sup_over_thresholds(|d| s.excess_mean(d))?;
    let epsilon = epsilon_frac * rho_d * sup_mean;
    let delta = rho_d * sup_mean + epsilon;
    let floor = (delta * delta).max(4.0 * varsigma);
    let start = floor.floor() as u64 + 1;
    let n_lower = smallest_integer(
        |n| lower_tail_term(s, rho_d, n as f64).map(|v| v <= epsilon).unwrap_or(false),
        start,
        1 << 52,
    )
    .ok_or(Error::SolverNoBracket { what: "N_lower" })?;
    Ok(LowerConstants {
        epsilon,
        varsigma,
        delta,
        sup_excess_mean: sup_mean,
        n_lower,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateConstants {
    pub m: u64,
    pub m_prime: u64,
    pub c_prime: f64,
    pub n_prime: u64,
}

/// (1 − C/(ρ_D√n))^{ρ_D√n/C} ≤ 2/e.
pub fn tangent_condition(rho_d: f64, c: f64, n: u64) -> bool {
    let k = rho_d * (n as f64).sqrt() / c;
    k > 1.0 && (1.0 - 1.0 / k).powf(k) <= 2.0 * (-1.0f64).exp()
}

pub fn const_cprime_nprime(
    rho_d: f64,
    c: f64,
    delta: f64,
    alpha: f64,
    n_lower: u64,
    n_lemma32: u64,
) -> RateConstants {
    let ratio2 = (c / rho_d).powi(2);
    let m = ratio2.floor() as u64 + 1;
    let m_prime = smallest_integer(|n| tangent_condition(rho_d, c, n), m, 1 << 52).unwrap_or(m);
    let weight = (alpha / (1.0 - alpha)).max(1.0);
    let tail = weight * c / rho_d
        + 2.0 * (-1.0f64).exp() * c / (rho_d - c / (m_prime as f64).sqrt());
    RateConstants {
        m,
        m_prime,
        c_prime: delta.max(tail),
        n_prime: n_lower.max(m).max(m_prime).max(n_lemma32),
    }
}

/// All bound constants, with ρ_n and ρ_n(R_D) evaluated at N′.
pub fn compute_constants(
    p: &MarketParams,
    s: &Severity,
    epsilon_frac: f64,
) -> Result<ConvergenceConstants> {
    let rho_d = solve_rho_d(p, s)?;
    constants_from_rho_d(p, s, rho_d, epsilon_frac)
}

pub fn constants_from_rho_d(
    p: &MarketParams,
    s: &Severity,
    rho_d: f64,
    epsilon_frac: f64,
) -> Result<ConvergenceConstants> {
    if !(epsilon_frac > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "epsilon_frac must be positive, got {epsilon_frac}"
        )));
    }
    let c = const_c(p, s, rho_d);
    let n_lemma32 = find_n_lemma32(p, s, rho_d, c)?;
    let low = const_delta_n(s, rho_d, epsilon_frac)?;
    let rate = const_cprime_nprime(rho_d, c, low.delta, p.alpha, low.n_lower, n_lemma32);
    let n_eval = rate.n_prime as f64;
    let rho_n = solve_rho_n(n_eval, p, s)?;
    let rho_n_of_rd = solve_rho_n_of_r(&RetentionFn::diffusion_optimal(rho_d, p), n_eval, p, s)?;
    Ok(ConvergenceConstants {
        rho_d,
        rho_n,
        rho_n_of_rd,
        n_eval,
        c,
        epsilon: low.epsilon,
        epsilon_frac,
        varsigma: low.varsigma,
        delta: low.delta,
        sup_excess_mean: low.sup_excess_mean,
        n_lower: low.n_lower,
        n_lemma32,
        m: rate.m,
        m_prime: rate.m_prime,
        c_prime: rate.c_prime,
        n_prime: rate.n_prime,
        alpha: p.alpha,
    })
}
