//! Retention functions and the moment functionals of retained and ceded losses.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{MarketParams, Severity};
use crate::numeric::{bisect, expm1_minus_z, Quadrature};

/// A retention rule y ↦ R(y) on original-scale claims.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RetentionFn {
    Full,
    Proportional { q: f64 },
    /// R(y) = min(y, d); `d = 0` cedes everything.
    Cap { d: f64 },
    /// R_D(y) = min((θ + ηy)/(ρ + η), y).
    DiffusionOptimal { rho: f64, theta: f64, eta: f64 },
    /// Ř(y; ρ) = √n R_n^ρ(y/√n): the retention maximising the adjustment
    /// coefficient of the n-scaled model, written on original-scale claims.
    MaxAdjust { rho: f64, n: f64, theta: f64, eta: f64 },
}

/// R_D(y) = min((θ + ηy)/(ρ + η), y).
pub fn eval_rd(y: f64, rho: f64, p: &MarketParams) -> f64 {
    rd(y, rho, p.theta, p.eta)
}

fn rd(y: f64, rho: f64, theta: f64, eta: f64) -> f64 {
    ((theta + eta * y) / (rho + eta)).min(y)
}

/// Full-retention threshold (1/ρ) ln(1 + θ_n) of the scaled-claim rule.
pub fn rc_threshold(rho: f64, n: f64, p: &MarketParams) -> f64 {
    (p.theta / n.sqrt()).ln_1p() / rho
}

/// Root R ∈ [0, y) of (1 + θ_n) + η(y − R) − e^{ρR} = 0 for a scaled claim y.
pub fn solve_rc(y: f64, rho: f64, n: f64, p: &MarketParams) -> Result<f64> {
    let threshold = rc_threshold(rho, n, p);
    if y <= threshold {
        return Err(Error::BranchMisuse { y, threshold });
    }
    let theta_n = p.theta / n.sqrt();
    // θ_n + η(y − R) − (e^{ρR} − 1), strictly decreasing in R
    let g = |r: f64| theta_n + p.eta * (y - r) - (rho * r).exp_m1();
    Ok(bisect(g, 0.0, y, 1e-15, 1e-15, "R_c")?.x)
}

/// R_n^ρ(y) on scaled claims: y below the threshold, R_c above.
pub fn eval_rn_rho(y: f64, rho: f64, n: f64, p: &MarketParams) -> f64 {
    let sqrt_n = n.sqrt();
    check_r(y * sqrt_n, rho, sqrt_n, p.theta, p.eta) / sqrt_n
}

/// Ř(y; ρ) on original-scale claims: root of θ + η(y − R) − √n(e^{ρR/√n} − 1) = 0
/// above (√n/ρ) ln(1 + θ/√n), and y below.
pub fn check_r(y: f64, rho: f64, sqrt_n: f64, theta: f64, eta: f64) -> f64 {
    let threshold = check_threshold(rho, sqrt_n, theta);
    if y <= threshold {
        return y;
    }
    let g = |r: f64| theta + eta * (y - r) - sqrt_n * (rho * r / sqrt_n).exp_m1();
    match bisect(g, threshold, y, 1e-15, 1e-15, "R_c") {
        Ok(r) => r.x,
        Err(_) => threshold,
    }
}

fn check_threshold(rho: f64, sqrt_n: f64, theta: f64) -> f64 {
    sqrt_n / rho * (theta / sqrt_n).ln_1p()
}

/// Moments of retained and ceded losses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RetentionMoments {
    pub er: f64,
    pub er2: f64,
    pub er3: f64,
    pub er4: f64,
    pub eyr: f64,
    pub ceded: f64,
    pub ceded2: f64,
}

/// Result of the net-profit test for a retention.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NetProfit {
    /// Premium rate kept after buying reinsurance.
    pub p_r: f64,
    /// p_R − λE[R].
    pub margin: f64,
    pub pass: bool,
    /// |p_R − (−κ + λ[(1+θ)E[R] + ηE[YR] − (η/2)E[R²]])|.
    pub identity_error: f64,
}

impl RetentionFn {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            RetentionFn::Full => true,
            RetentionFn::Proportional { q } => q > 0.0 && q <= 1.0,
            RetentionFn::Cap { d } => d >= 0.0 && d.is_finite(),
            RetentionFn::DiffusionOptimal { rho, theta, eta } => {
                rho > 0.0 && rho.is_finite() && theta >= 0.0 && eta > 0.0
            }
            RetentionFn::MaxAdjust { rho, n, theta, eta } => {
                rho > 0.0 && rho.is_finite() && n >= 1.0 && theta >= 0.0 && eta > 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("invalid retention parameters: {self:?}")))
        }
    }

    pub fn diffusion_optimal(rho: f64, p: &MarketParams) -> Self {
        RetentionFn::DiffusionOptimal {
            rho,
            theta: p.theta,
            eta: p.eta,
        }
    }

    pub fn max_adjust(rho: f64, n: f64, p: &MarketParams) -> Self {
        RetentionFn::MaxAdjust {
            rho,
            n,
            theta: p.theta,
            eta: p.eta,
        }
    }

    #[inline]
    pub fn eval(&self, y: f64) -> f64 {
        match *self {
            RetentionFn::Full => y,
            RetentionFn::Proportional { q } => q * y,
            RetentionFn::Cap { d } => y.min(d),
            RetentionFn::DiffusionOptimal { rho, theta, eta } => rd(y, rho, theta, eta),
            RetentionFn::MaxAdjust {
                rho,
                n,
                theta,
                eta,
            } => check_r(y, rho, n.sqrt(), theta, eta),
        }
    }

    /// Scaled retention R_n(y) = R(√n y)/√n on claims Y/√n.
    pub fn eval_scaled(&self, y: f64, sqrt_n: f64) -> f64 {
        self.eval(y * sqrt_n) / sqrt_n
    }

    /// Claim sizes at which R has a kink.
    pub fn breakpoints(&self) -> Vec<f64> {
        match *self {
            RetentionFn::Full | RetentionFn::Proportional { .. } => vec![],
            RetentionFn::Cap { d } => vec![d],
            RetentionFn::DiffusionOptimal { rho, theta, .. } => vec![theta / rho],
            RetentionFn::MaxAdjust { rho, n, theta, .. } => {
                vec![check_threshold(rho, n.sqrt(), theta)]
            }
        }
    }

    /// The claim size y with R(y) = level, or `None` when R never exceeds `level`.
    pub fn preimage(&self, level: f64) -> Option<f64> {
        if level <= 0.0 {
            return Some(0.0);
        }
        match *self {
            RetentionFn::Full => Some(level),
            RetentionFn::Proportional { q } => Some(level / q),
            RetentionFn::Cap { d } => (level < d).then_some(level),
            RetentionFn::DiffusionOptimal { rho, theta, eta } => Some(if level <= theta / rho {
                level
            } else {
                ((rho + eta) * level - theta) / eta
            }),
            RetentionFn::MaxAdjust {
                rho,
                n,
                theta,
                eta,
            } => {
                let sqrt_n = n.sqrt();
                Some(if level <= check_threshold(rho, sqrt_n, theta) {
                    level
                } else {
                    level + (sqrt_n * (rho * level / sqrt_n).exp_m1() - theta) / eta
                })
            }
        }
    }

    /// Asymptotic slope of R(y) as y → ∞.
    pub fn tail_slope(&self) -> f64 {
        match *self {
            RetentionFn::Full => 1.0,
            RetentionFn::Proportional { q } => q,
            RetentionFn::Cap { .. } | RetentionFn::MaxAdjust { .. } => 0.0,
            RetentionFn::DiffusionOptimal { rho, eta, .. } => eta / (rho + eta),
        }
    }

    /// Supremum of t with E[e^{tR(Y)}] < ∞.
    pub fn exp_radius(&self, s: &Severity) -> f64 {
        let t0 = s.tail_radius();
        let slope = self.tail_slope();
        if !t0.is_finite() || slope == 0.0 {
            f64::INFINITY
        } else {
            t0 / slope
        }
    }

    /// E[f(Y, R(Y))] with the kinks of R as quadrature breakpoints.
    pub fn expect<const K: usize, F: FnMut(f64, f64) -> [f64; K]>(
        &self,
        s: &Severity,
        quad: &Quadrature,
        extra_breaks: &[f64],
        mut f: F,
    ) -> [f64; K] {
        let mut br = self.breakpoints();
        br.extend_from_slice(extra_breaks);
        s.expect(quad, &br, |y| f(y, self.eval(y)))
    }

    pub fn moments(&self, s: &Severity) -> RetentionMoments {
        retention_moments(self, s)
    }

    /// E[e^{tR}].
    pub fn exp_moment(&self, s: &Severity, t: f64) -> Result<f64> {
        let radius = self.exp_radius(s);
        if t >= radius {
            return Err(Error::ExponentBeyondRadius { a: t, radius });
        }
        Ok(1.0 + self.expect(s, &Quadrature::default(), &[], |_, r| [(t * r).exp_m1()])[0])
    }

    /// E[e^{tR} − 1 − tR], without cancellation for small t.
    pub fn phi_moment(&self, s: &Severity, t: f64) -> Result<f64> {
        let radius = self.exp_radius(s);
        if t >= radius {
            return Err(Error::ExponentBeyondRadius { a: t, radius });
        }
        Ok(self.expect(s, &Quadrature::default(), &[], |_, r| [expm1_minus_z(t * r)])[0])
    }
}

pub fn retention_moments(r: &RetentionFn, s: &Severity) -> RetentionMoments {
    let q = Quadrature::default();
    let v = r.expect(s, &q, &[], |y, x| {
        let c = y - x;
        let x2 = x * x;
        [x, x2, x2 * x, x2 * x2, y * x, c, c * c]
    });
    // exact forms where they are available
    let (er, er2, ceded, ceded2, eyr) = match *r {
        RetentionFn::Full => (s.mean(), s.moment(2), 0.0, 0.0, s.moment(2)),
        RetentionFn::Proportional { q } => (
            q * s.mean(),
            q * q * s.moment(2),
            (1.0 - q) * s.mean(),
            (1.0 - q) * (1.0 - q) * s.moment(2),
            q * s.moment(2),
        ),
        _ => (v[0], v[1], v[5], v[6], v[4]),
    };
    RetentionMoments {
        er,
        er2,
        er3: v[2],
        er4: v[3],
        eyr,
        ceded,
        ceded2,
    }
}

/// A(R) = p_R − λE[R], written in its cancellation-free form
/// −κ + λ(θE[R] + ηE[YR] − (η/2)E[R²]).
pub fn profit_margin(p: &MarketParams, s: &Severity, m: &RetentionMoments) -> f64 {
    -p.kappa(s) + p.lambda * (p.theta * m.er + p.eta * m.eyr - 0.5 * p.eta * m.er2)
}

pub fn net_profit_check(r: &RetentionFn, p: &MarketParams, s: &Severity) -> NetProfit {
    let m = r.moments(s);
    net_profit_from_moments(p, s, &m)
}

pub fn net_profit_from_moments(p: &MarketParams, s: &Severity, m: &RetentionMoments) -> NetProfit {
    let p_r = p.c - (1.0 + p.theta) * p.lambda * m.ceded - 0.5 * p.eta * p.lambda * m.ceded2;
    let drift_form = -p.kappa(s)
        + p.lambda * ((1.0 + p.theta) * m.er + p.eta * m.eyr - 0.5 * p.eta * m.er2);
    let margin = p_r - p.lambda * m.er;
    NetProfit {
        p_r,
        margin,
        pass: margin > 0.0,
        identity_error: (p_r - drift_form).abs(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp1() -> (MarketParams, Severity) {
        (
            MarketParams {
                lambda: 1.0,
                theta: 0.1,
                eta: 0.2,
                c: 1.2,
                alpha: 0.3,
            },
            Severity::Exponential { rate: 1.0 },
        )
    }

    #[test]
    fn rd_cases() {
        let (p, _) = exp1();
        assert!((eval_rd(10.0, 0.5, &p) - 3.0).abs() < 1e-15);
        assert_eq!(eval_rd(0.0, 0.5, &p), 0.0);
        assert_eq!(eval_rd(0.1, 0.5, &p), 0.1);
    }

    #[test]
    fn rc_root_and_branch() {
        let (p, _) = exp1();
        let r = solve_rc(2.0, 0.5, 1.0, &p).unwrap();
        let res = 1.1 + 0.2 * (2.0 - r) - (0.5 * r).exp();
        assert!(res.abs() < 1e-12, "{res}");
        assert!(r > 0.0 && r < 2.0);
        let t = rc_threshold(0.5, 1.0, &p);
        assert!(matches!(
            solve_rc(t * 0.9, 0.5, 1.0, &p),
            Err(Error::BranchMisuse { .. })
        ));
        let just_above = solve_rc(t * (1.0 + 1e-9), 0.5, 1.0, &p).unwrap();
        assert!((just_above - t).abs() < 1e-8);
    }

    #[test]
    fn rn_rho_matches_original_scale_and_limit() {
        let (p, _) = exp1();
        for n in [1.0, 4.0, 100.0] {
            let sqrt_n: f64 = f64::sqrt(n);
            for i in 0..200 {
                let y = i as f64 * 0.05;
                let a = eval_rn_rho(y, 0.5, n, &p);
                let b = check_r(sqrt_n * y, 0.5, sqrt_n, p.theta, p.eta) / sqrt_n;
                assert!((a - b).abs() < 1e-10);
                let t = rc_threshold(0.5, n, &p);
                if y > t {
                    assert!((a - solve_rc(y, 0.5, n, &p).unwrap()).abs() < 1e-10);
                }
            }
        }
        // n → ∞: Ř(y; ρ) → R_D(y)
        for y in [0.1, 1.0, 3.0, 10.0] {
            let r = check_r(y, 0.5, 1e3, p.theta, p.eta);
            assert!((r - eval_rd(y, 0.5, &p)).abs() < 1e-2, "{y} {r}");
        }
    }

    #[test]
    fn preimage_inverts() {
        let (p, _) = exp1();
        let rs = [
            RetentionFn::Full,
            RetentionFn::Proportional { q: 0.4 },
            RetentionFn::diffusion_optimal(0.45, &p),
            RetentionFn::max_adjust(0.45, 16.0, &p),
            RetentionFn::max_adjust(0.45, 1.0, &p),
        ];
        for r in rs {
            for level in [0.01, 0.1, 0.5, 1.0, 2.0] {
                let y = r.preimage(level).unwrap();
                assert!((r.eval(y) - level).abs() < 1e-10, "{r:?} {level}");
            }
        }
        let cap = RetentionFn::Cap { d: 1.0 };
        assert_eq!(cap.preimage(0.5), Some(0.5));
        assert_eq!(cap.preimage(1.5), None);
    }

    #[test]
    fn moments_closed_forms() {
        let (p, s) = exp1();
        let m = RetentionFn::Full.moments(&s);
        assert_eq!(m.er, 1.0);
        assert_eq!(m.ceded2, 0.0);
        let m = RetentionFn::Proportional { q: 0.5 }.moments(&s);
        assert!((m.er2 - 0.25 * 2.0).abs() < 1e-15);

        // R_D on Exp(1): pieces split at a = θ/ρ
        let rho = 0.45;
        let a: f64 = p.theta / rho;
        let ea = (-a).exp();
        let k = 1.0 / (rho + p.eta);
        // E[R] = ∫_0^a y e^{-y} + ∫_a^∞ k(θ + ηy) e^{-y}
        let er = 1.0 - ea * (1.0 + a) + k * ea * (p.theta + p.eta * (a + 1.0));
        // E[R²] = ∫_0^a y² e^{-y} + k² ∫_a^∞ (θ + ηy)² e^{-y}
        let lower2 = 2.0 - ea * (a * a + 2.0 * a + 2.0);
        let upper2 = k * k
            * ea
            * (p.theta * p.theta
                + 2.0 * p.theta * p.eta * (a + 1.0)
                + p.eta * p.eta * (a * a + 2.0 * a + 2.0));
        let m = RetentionFn::diffusion_optimal(rho, &p).moments(&s);
        assert!((m.er - er).abs() < 1e-12);
        assert!((m.er2 - (lower2 + upper2)).abs() < 1e-12);
        assert!((m.er + m.ceded - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exp_moments() {
        let (_, s) = exp1();
        assert_eq!(RetentionFn::Cap { d: 1.0 }.exp_moment(&s, 0.0).unwrap(), 1.0);
        let det = Severity::Deterministic { b: 3.0 };
        assert!(
            (RetentionFn::Cap { d: 2.0 }.exp_moment(&det, 1.0).unwrap() - 2f64.exp()).abs() < 1e-13
        );
        assert!((RetentionFn::Full.exp_moment(&s, 0.5).unwrap() - 2.0).abs() < 1e-11);
        assert!(RetentionFn::Full.exp_moment(&s, 1.0).is_err());
        // Cap keeps every exponent finite.
        assert!(RetentionFn::Cap { d: 1.0 }.exp_moment(&s, 5.0).is_ok());
    }

    #[test]
    fn net_profit_cases() {
        let (p, s) = exp1();
        let full = net_profit_check(&RetentionFn::Full, &p, &s);
        assert!((full.p_r - 1.2).abs() < 1e-15);
        assert!(full.pass);
        let none = net_profit_check(&RetentionFn::Cap { d: 0.0 }, &p, &s);
        assert!((none.p_r + 0.1).abs() < 1e-12);
        assert!(!none.pass);
        for r in [
            RetentionFn::Full,
            RetentionFn::Cap { d: 0.0 },
            RetentionFn::Cap { d: 1.5 },
            RetentionFn::Proportional { q: 0.3 },
            RetentionFn::diffusion_optimal(0.45, &p),
        ] {
            assert!(net_profit_check(&r, &p, &s).identity_error < 1e-12);
        }
    }

    #[test]
    fn pointwise_optimality_of_rd_and_check_r() {
        let (p, _) = exp1();
        let mut state = 12345u64;
        let mut unif = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..100 {
            let y = 10.0 * unif();
            let rho = 0.05 + 2.0 * unif();
            let n: f64 = 1.0 + 50.0 * unif();
            let sqrt_n = n.sqrt();
            // bracket θr + ηyr − ((ρ+η)/2)r²
            let bracket = |r: f64| p.theta * r + p.eta * y * r - 0.5 * (rho + p.eta) * r * r;
            // stationarity of j is the equation defining Ř
            let j = |r: f64| {
                (sqrt_n + p.theta) * r + p.eta * (y * r - 0.5 * r * r)
                    - n / rho * (rho * r / sqrt_n).exp_m1()
            };
            let rd_y = eval_rd(y, rho, &p);
            let rc_y = check_r(y, rho, sqrt_n, p.theta, p.eta);
            for _ in 0..100 {
                let r = y * unif();
                assert!(bracket(rd_y) >= bracket(r) - 1e-12);
                assert!(j(rc_y) >= j(r) - 1e-12 * (1.0 + j(r).abs()));
            }
        }
    }
}
