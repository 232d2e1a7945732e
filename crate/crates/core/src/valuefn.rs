//! Closed-form drawdown surfaces, their bounds, and the scaled generator.

use serde::Serialize;

use crate::adjustment::{solve_j, solve_rho_n, solve_rho_n_of_r, ConvergenceConstants};
use crate::error::{Error, Result};
use crate::model::{MarketParams, Severity};
use crate::numeric::Quadrature;
use crate::retention::{RetentionFn, RetentionMoments};

/// A value function on {x ≤ m}, extended by 1 below the barrier αm.
pub trait Surface {
    fn alpha(&self) -> f64;
    fn value(&self, x: f64, m: f64) -> f64;
    fn dx(&self, x: f64, m: f64) -> f64;
    fn dm(&self, x: f64, m: f64) -> f64;
    /// u(x − r, m) − u(x, m).
    fn jump_increment(&self, x: f64, m: f64, r: f64) -> f64 {
        self.value(x - r, m) - self.value(x, m)
    }
}

/// factor · (1 − h(m)(1 − e^{−ρ(x−αm)})) with h(m) = (1 − e^{−ρ(1−α)m})^{α/(1−α)}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DrawdownSurface {
    pub rho: f64,
    pub alpha: f64,
    pub factor: f64,
}

impl DrawdownSurface {
    pub fn new(rho: f64, alpha: f64) -> Self {
        Self {
            rho,
            alpha,
            factor: 1.0,
        }
    }

    pub fn h(&self, m: f64) -> f64 {
        if self.alpha == 0.0 {
            return 1.0;
        }
        let base = -(-self.rho * (1.0 - self.alpha) * m).exp_m1();
        base.powf(self.alpha / (1.0 - self.alpha))
    }
}

impl Surface for DrawdownSurface {
    fn alpha(&self) -> f64 {
        self.alpha
    }

    fn value(&self, x: f64, m: f64) -> f64 {
        let z = x - self.alpha * m;
        if z < 0.0 {
            return 1.0;
        }
        let gap = -(-self.rho * z).exp_m1();
        self.factor * (1.0 - self.h(m) * gap)
    }

    fn dx(&self, x: f64, m: f64) -> f64 {
        let z = x - self.alpha * m;
        if z < 0.0 {
            return 0.0;
        }
        -self.factor * self.rho * self.h(m) * (-self.rho * z).exp()
    }

    fn dm(&self, x: f64, m: f64) -> f64 {
        let z = x - self.alpha * m;
        if z < 0.0 || self.alpha == 0.0 {
            return 0.0;
        }
        let a = self.rho * (1.0 - self.alpha) * m;
        // e^{−ρ(x−αm)} − e^{−ρ(1−α)m} = e^{−ρ(1−α)m}(e^{ρ(m−x)} − 1)
        let diff = (-a).exp() * (self.rho * (m - x)).exp_m1();
        self.factor * self.alpha * self.rho * self.h(m) / (-(-a).exp_m1()) * diff
    }

    fn jump_increment(&self, x: f64, m: f64, r: f64) -> f64 {
        let z = x - self.alpha * m;
        if z - r < 0.0 {
            return 1.0 - self.value(x, m);
        }
        self.factor * self.h(m) * (-self.rho * z).exp() * (self.rho * r).exp_m1()
    }
}

fn check_state(x: f64, m: f64) -> Result<()> {
    if x > m || m < 0.0 || !x.is_finite() || !m.is_finite() {
        Err(Error::StateOutsideDomain { x, m })
    } else {
        Ok(())
    }
}

/// ψ_D, the minimum drawdown probability of the diffusion approximation.
pub fn psi_d(x: f64, m: f64, alpha: f64, rho_d: f64) -> Result<f64> {
    check_state(x, m)?;
    Ok(DrawdownSurface::new(rho_d, alpha).value(x, m))
}

/// Upper bound ψ̄_n built from the maximal coefficient ρ_n.
pub fn psibar_n(x: f64, m: f64, alpha: f64, rho_n: f64) -> Result<f64> {
    check_state(x, m)?;
    Ok(DrawdownSurface::new(rho_n, alpha).value(x, m))
}

/// Upper bound ψ̄_{D,n} built from ρ_n(R_D).
pub fn psibar_dn(x: f64, m: f64, alpha: f64, rho_n_of_rd: f64) -> Result<f64> {
    check_state(x, m)?;
    Ok(DrawdownSurface::new(rho_n_of_rd, alpha).value(x, m))
}

pub fn u_n_surface(n: f64, cc: &ConvergenceConstants) -> Result<DrawdownSurface> {
    if n < cc.n_lemma32 as f64 {
        return Err(Error::ScaleTooSmall {
            n,
            required: cc.n_lemma32 as f64,
        });
    }
    Ok(DrawdownSurface::new(cc.upper_exponent(n), cc.alpha))
}

pub fn ell_n_surface(n: f64, cc: &ConvergenceConstants) -> Result<DrawdownSurface> {
    let required = (cc.n_lower as f64).max(cc.delta * cc.delta);
    if n < cc.n_lower as f64 || n <= cc.delta * cc.delta {
        return Err(Error::ScaleTooSmall { n, required });
    }
    Ok(DrawdownSurface {
        rho: cc.rho_d,
        alpha: cc.alpha,
        factor: 1.0 - cc.delta / n.sqrt(),
    })
}

/// Upper bound u_n with exponent ρ_D − C/√n.
pub fn u_n(x: f64, m: f64, n: f64, cc: &ConvergenceConstants) -> Result<f64> {
    check_state(x, m)?;
    Ok(u_n_surface(n, cc)?.value(x, m))
}

/// Lower bound ℓ_n = (1 − δ/√n) ψ_D on the domain, 1 below the barrier.
pub fn ell_n(x: f64, m: f64, n: f64, cc: &ConvergenceConstants) -> Result<f64> {
    check_state(x, m)?;
    Ok(ell_n_surface(n, cc)?.value(x, m))
}

/// min(1, e^{−J(R)(x − αm)}).
pub fn lundberg_bound(x: f64, m: f64, r: &RetentionFn, p: &MarketParams, s: &Severity) -> Result<f64> {
    let j = solve_j(r, p, s)?;
    Ok(lundberg_from_j(x, m, p.alpha, j))
}

pub fn lundberg_from_j(x: f64, m: f64, alpha: f64, j: f64) -> f64 {
    (-j * (x - alpha * m)).exp().min(1.0)
}

/// Drawdown probability of the diffusion under R_D when paths that reach
/// the level b are stopped and counted as survivors.
pub fn psi_d_barrier(x: f64, m: f64, alpha: f64, rho_d: f64, b: f64) -> Result<f64> {
    check_state(x, m)?;
    if x < alpha * m {
        return Ok(1.0);
    }
    if m >= b {
        return Ok(0.0);
    }
    let a = rho_d * (1.0 - alpha);
    let gap = -(-rho_d * (x - alpha * m)).exp_m1();
    let em = -(-a * m).exp_m1();
    let eb = -(-a * b).exp_m1();
    Ok(1.0 - gap / em * (em / eb).powf(1.0 / (1.0 - alpha)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundBundle {
    pub x: f64,
    pub m: f64,
    pub n: f64,
    pub rho_n: f64,
    #[serde(rename = "rho_n_of_RD")]
    pub rho_n_of_rd: f64,
    #[serde(rename = "psi_D")]
    pub psi_d: f64,
    pub psibar_n: f64,
    /// `None` below the scale where the bound is proved.
    pub u_n: Option<f64>,
    pub ell_n: Option<f64>,
    #[serde(rename = "psibar_Dn")]
    pub psibar_dn: f64,
    /// Lundberg bound for R_D.
    pub lundberg: f64,
}

pub fn bound_bundle(
    x: f64,
    m: f64,
    n: f64,
    p: &MarketParams,
    s: &Severity,
    cc: &ConvergenceConstants,
) -> Result<BoundBundle> {
    check_state(x, m)?;
    let rho_n = solve_rho_n(n, p, s)?;
    let rd = RetentionFn::diffusion_optimal(cc.rho_d, p);
    let rho_n_of_rd = solve_rho_n_of_r(&rd, n, p, s)?;
    let alpha = p.alpha;
    Ok(BoundBundle {
        x,
        m,
        n,
        rho_n,
        rho_n_of_rd,
        psi_d: psi_d(x, m, alpha, cc.rho_d)?,
        psibar_n: psibar_n(x, m, alpha, rho_n)?,
        u_n: u_n(x, m, n, cc).ok(),
        ell_n: ell_n(x, m, n, cc).ok(),
        psibar_dn: psibar_dn(x, m, alpha, rho_n_of_rd)?,
        lundberg: lundberg_bound(x, m, &rd, p, s)?,
    })
}

/// The scaled generator for a fixed retention, with its moments precomputed.
#[derive(Debug, Clone)]
pub struct Generator {
    pub retention: RetentionFn,
    pub n: f64,
    pub sqrt_n: f64,
    pub lambda_n: f64,
    /// −κ + λ[(√n + θ)E[R] + ηE[YR] − (η/2)E[R²]].
    pub drift: f64,
    pub moments: RetentionMoments,
    severity: Severity,
    quad: Quadrature,
}

impl Generator {
    pub fn new(r: &RetentionFn, n: f64, p: &MarketParams, s: &Severity) -> Result<Self> {
        if !(n >= 1.0) {
            return Err(Error::InvalidScale { n });
        }
        let mo = r.moments(s);
        let sqrt_n = n.sqrt();
        let drift = -p.kappa(s)
            + p.lambda * ((sqrt_n + p.theta) * mo.er + p.eta * mo.eyr - 0.5 * p.eta * mo.er2);
        Ok(Self {
            retention: *r,
            n,
            sqrt_n,
            lambda_n: n * p.lambda,
            drift,
            moments: mo,
            severity: *s,
            quad: Quadrature::default(),
        })
    }

    /// E[u(x − R(Y)/√n, m)] − u(x, m).
    pub fn jump_expectation<U: Surface + ?Sized>(&self, u: &U, x: f64, m: f64) -> f64 {
        let room = x - u.alpha() * m;
        let r = self.retention;
        let sqrt_n = self.sqrt_n;
        // claims beyond y_star push the surplus below the barrier
        let y_star = r.preimage(sqrt_n * room);
        match y_star {
            Some(ys) => {
                let below = r.expect(&self.severity, &self.quad, &[ys], |y, ry| {
                    if y <= ys {
                        [u.jump_increment(x, m, ry / sqrt_n)]
                    } else {
                        [0.0]
                    }
                })[0];
                below + (1.0 - u.value(x, m)) * self.severity.survival(ys)
            }
            None => {
                r.expect(&self.severity, &self.quad, &[], |_, ry| {
                    [u.jump_increment(x, m, ry / sqrt_n)]
                })[0]
            }
        }
    }

    pub fn apply<U: Surface + ?Sized>(&self, u: &U, x: f64, m: f64) -> Result<f64> {
        check_state(x, m)?;
        Ok(self.drift * u.dx(x, m) + self.lambda_n * self.jump_expectation(u, x, m))
    }
}

pub fn apply_generator_n<U: Surface + ?Sized>(
    u: &U,
    r: &RetentionFn,
    n: f64,
    p: &MarketParams,
    s: &Severity,
    x: f64,
    m: f64,
) -> Result<f64> {
    Generator::new(r, n, p, s)?.apply(u, x, m)
}

/// The 20×20 certification grid: m in [0.1, 10/ρ_D], x from αm to m.
pub fn certification_grid(alpha: f64, rho_d: f64) -> Vec<(f64, f64)> {
    let k = 20;
    let m_hi = 10.0 / rho_d;
    let mut out = Vec::with_capacity(k * k);
    for j in 0..k {
        let m = 0.1 + (m_hi - 0.1) * j as f64 / (k - 1) as f64;
        for i in 0..k {
            let x = if i == k - 1 {
                m
            } else {
                alpha * m + (1.0 - alpha) * m * i as f64 / (k - 1) as f64
            };
            out.push((x, m));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub name: String,
    /// "le" for Lu ≤ tol, "ge" for Lu ≥ −tol, "eq" for |·| ≤ tol.
    pub sense: &'static str,
    pub tol: f64,
    pub pass: bool,
    pub worst: f64,
    pub worst_x: f64,
    pub worst_m: f64,
    pub nodes: usize,
}

fn certify_grid<F: Fn(f64, f64) -> Result<f64> + Sync>(
    name: &str,
    sense: &'static str,
    tol: f64,
    grid: &[(f64, f64)],
    f: F,
) -> Result<Certificate> {
    use rayon::prelude::*;
    let values: Vec<f64> = grid
        .par_iter()
        .map(|&(x, m)| f(x, m))
        .collect::<Result<Vec<_>>>()?;
    let mut worst = match sense {
        "le" => f64::NEG_INFINITY,
        "ge" => f64::INFINITY,
        _ => 0.0,
    };
    let mut at = grid[0];
    for (v, &node) in values.iter().zip(grid) {
        let better = match sense {
            "le" => *v > worst,
            "ge" => *v < worst,
            _ => v.abs() > worst.abs(),
        };
        if better {
            worst = *v;
            at = node;
        }
    }
    let pass = match sense {
        "le" => worst <= tol,
        "ge" => worst >= -tol,
        _ => worst.abs() <= tol,
    };
    Ok(Certificate {
        name: name.to_string(),
        sense,
        tol,
        pass,
        worst,
        worst_x: at.0,
        worst_m: at.1,
        nodes: grid.len(),
    })
}

/// Generator and boundary-derivative certificates at scale n.
pub fn certify(
    n: f64,
    p: &MarketParams,
    s: &Severity,
    cc: &ConvergenceConstants,
    tol: f64,
) -> Result<Vec<Certificate>> {
    let grid = certification_grid(p.alpha, cc.rho_d);
    let rho_n = solve_rho_n(n, p, s)?;
    let rd = RetentionFn::diffusion_optimal(cc.rho_d, p);
    let rho_n_of_rd = solve_rho_n_of_r(&rd, n, p, s)?;
    let mut out = Vec::new();

    let upper = DrawdownSurface::new(rho_n, p.alpha);
    let g = Generator::new(&RetentionFn::max_adjust(rho_n, n, p), n, p, s)?;
    out.push(certify_grid("generator_psibar_n_max_adjust", "le", tol, &grid, |x, m| {
        g.apply(&upper, x, m)
    })?);

    let upper_d = DrawdownSurface::new(rho_n_of_rd, p.alpha);
    let g = Generator::new(&rd, n, p, s)?;
    out.push(certify_grid("generator_psibar_Dn_RD", "le", tol, &grid, |x, m| {
        g.apply(&upper_d, x, m)
    })?);

    let lower = ell_n_surface(n, cc)?;
    for (label, r) in [
        ("full", RetentionFn::Full),
        ("RD", rd),
        ("cap2", RetentionFn::Cap { d: 2.0 }),
    ] {
        if !crate::retention::net_profit_check(&r, p, s).pass {
            continue;
        }
        let g = Generator::new(&r, n, p, s)?;
        out.push(certify_grid(
            &format!("generator_ell_n_{label}"),
            "ge",
            tol,
            &grid,
            |x, m| g.apply(&lower, x, m),
        )?);
    }

    let diag: Vec<(f64, f64)> = grid.iter().map(|&(_, m)| (m, m)).collect();
    out.push(certify_grid("dm_psibar_n_at_max", "eq", 1e-12, &diag, |x, m| {
        Ok(upper.dm(x, m))
    })?);
    out.push(certify_grid("dm_ell_n_at_max", "eq", 1e-12, &diag, |x, m| {
        Ok(lower.dm(x, m))
    })?);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adjustment::{compute_constants, solve_rho_d};

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
    fn psi_d_identities() {
        let rho = 0.446;
        for m in [0.5, 2.0, 7.0] {
            assert_eq!(psi_d(0.3 * m, m, 0.3, rho).unwrap(), 1.0);
            assert!((psi_d(0.2 * m, m, 0.3, rho).unwrap() - 1.0).abs() == 0.0);
            assert!((psi_d(0.7 * m, m, 0.0, rho).unwrap() - (-rho * 0.7 * m).exp()).abs() < 1e-15);
        }
        let m = 50.0 / rho;
        assert!(psi_d(m, m, 0.3, rho).unwrap() < 1e-8);
        assert!(matches!(psi_d(3.0, 2.0, 0.3, rho), Err(Error::StateOutsideDomain { .. })));
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let s = DrawdownSurface {
            rho: 0.5,
            alpha: 0.3,
            factor: 0.97,
        };
        for &(x, m) in &[(1.0, 2.0), (2.5, 3.0), (1.5, 4.0)] {
            let h = 1e-6;
            let fx = (s.value(x + h, m) - s.value(x - h, m)) / (2.0 * h);
            let fm = (s.value(x, m + h) - s.value(x, m - h)) / (2.0 * h);
            assert!((fx - s.dx(x, m)).abs() < 1e-6);
            assert!((fm - s.dm(x, m)).abs() < 1e-6);
        }
        assert_eq!(s.dm(4.0, 4.0), 0.0);
    }

    #[test]
    fn jump_increment_consistent() {
        let s = DrawdownSurface {
            rho: 0.5,
            alpha: 0.3,
            factor: 0.9,
        };
        for r in [0.0, 0.01, 0.5, 1.3, 5.0] {
            let direct = s.value(2.0 - r, 3.0) - s.value(2.0, 3.0);
            assert!((s.jump_increment(2.0, 3.0, r) - direct).abs() < 1e-14);
        }
    }

    #[test]
    fn supersolution_generator_matches_closed_form() {
        let (p, s) = exp1();
        for n in [1.0, 16.0] {
            let rho_n = solve_rho_n(n, &p, &s).unwrap();
            let u = DrawdownSurface::new(rho_n, p.alpha);
            let r = RetentionFn::max_adjust(rho_n, n, &p);
            let g = Generator::new(&r, n, &p, &s).unwrap();
            let q = Quadrature::default();
            for &(x, m) in &[(1.0, 2.0), (2.0, 2.0), (0.7, 2.0), (3.0, 5.0)] {
                let lu = g.apply(&u, x, m).unwrap();
                // −λ_n h E[(e^{ρ(αm − x + R/√n)} − 1) 1{R/√n > x − αm}]
                let room = x - p.alpha * m;
                let ys = r.preimage(n.sqrt() * room).unwrap();
                let e = r.expect(&s, &q, &[ys], |y, ry| {
                    if y > ys {
                        [(rho_n * (ry / n.sqrt() - room)).exp_m1()]
                    } else {
                        [0.0]
                    }
                })[0];
                let exact = -n * p.lambda * u.h(m) * e;
                assert!((lu - exact).abs() < 1e-10, "n={n} ({x},{m}) {lu} {exact}");
                assert!(lu <= 1e-10);
            }
        }
    }

    #[test]
    fn bundle_ordering_and_lundberg() {
        let (p, s) = exp1();
        let cc = compute_constants(&p, &s, 0.01).unwrap();
        let n = cc.n_prime as f64;
        let b = bound_bundle(2.0, 3.0, n, &p, &s, &cc).unwrap();
        let (u, l) = (b.u_n.unwrap(), b.ell_n.unwrap());
        assert!(l <= b.psi_d && b.psi_d <= b.psibar_n && b.psibar_n <= u);
        assert!(l <= b.psibar_dn && b.psibar_dn <= u);
        let j = solve_j(&RetentionFn::Full, &p, &s).unwrap();
        assert!((lundberg_bound(5.0 + 0.9, 3.0, &RetentionFn::Full, &p, &s).unwrap() - (-5.0 * j).exp()).abs() < 1e-12);
        let small = bound_bundle(2.0, 3.0, 4.0, &p, &s, &cc).unwrap();
        assert!(small.u_n.is_none() && small.ell_n.is_none());
    }

    #[test]
    fn barrier_value_tends_to_psi_d() {
        let rho = solve_rho_d(&exp1().0, &exp1().1).unwrap();
        let full = psi_d(2.0, 2.0, 0.3, rho).unwrap();
        let mut prev = 0.0;
        for b in [5.0, 10.0, 20.0, 200.0] {
            let v = psi_d_barrier(2.0, 2.0, 0.3, rho, b).unwrap();
            assert!(v > prev && v <= full);
            prev = v;
        }
        assert!((prev - full).abs() < 1e-12);
    }
}
