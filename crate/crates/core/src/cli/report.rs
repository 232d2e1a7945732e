//! One machine-readable summary of the market checks, constants and certificates.

use serde::Serialize;

use super::config::Config;
use crate::adjustment::{
    compute_constants, hjb_bracket, solve_rho_n, solve_rho_n_of_r, ConvergenceConstants,
};
use crate::error::Result;
use crate::model::{validate_market, ValidationReport};
use crate::retention::{net_profit_check, RetentionFn};
use crate::valuefn::{certify, Certificate};

pub const CERTIFICATE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Serialize)]
pub struct Claim {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub pass: bool,
    pub validation: ValidationReport,
    pub constants: Option<ConvergenceConstants>,
    pub certificates: Vec<Certificate>,
    pub claims: Vec<Claim>,
}

pub fn run_report(cfg: &Config) -> Result<Report> {
    let p = &cfg.market;
    let s = &cfg.severity;
    let validation = validate_market(p, s);
    let mut claims = vec![Claim {
        name: "market_admissible",
        pass: validation.pass,
        detail: validation
            .failures()
            .iter()
            .map(|c| format!("{}: {}", c.name, c.detail))
            .collect::<Vec<_>>()
            .join("; "),
    }];
    if !validation.pass {
        return Ok(Report {
            pass: false,
            validation,
            constants: None,
            certificates: Vec::new(),
            claims,
        });
    }

    let cc = compute_constants(p, s, cfg.constants.epsilon_frac)?;
    let rd = RetentionFn::diffusion_optimal(cc.rho_d, p);

    let bracket = hjb_bracket(p, &rd.moments(s), cc.rho_d);
    let target = validation.kappa / p.lambda;
    let rel = (bracket - target).abs() / target;
    claims.push(Claim {
        name: "rho_D_solves_hjb",
        pass: rel < 1e-9,
        detail: format!("relative error {rel:.3e}"),
    });

    let np = net_profit_check(&rd, p, s);
    claims.push(Claim {
        name: "R_D_net_profit",
        pass: np.pass,
        detail: format!("p_R − λE[R] = {:.6e}", np.margin),
    });

    let n = cc.n_lemma32 as f64;
    let rho_n = solve_rho_n(n, p, s)?;
    let rho_n_rd = solve_rho_n_of_r(&rd, n, p, s)?;
    let lower = cc.rho_d - cc.c / n.sqrt();
    claims.push(Claim {
        name: "rho_ordering_at_N_lemma32",
        pass: lower < rho_n_rd && rho_n_rd <= rho_n && rho_n < cc.rho_d,
        detail: format!(
            "{lower:.12} < {rho_n_rd:.12} <= {rho_n:.12} < {:.12}",
            cc.rho_d
        ),
    });

    let certificates = certify(cc.n_prime as f64, p, s, &cc, CERTIFICATE_TOL)?;
    let failed: Vec<&str> = certificates
        .iter()
        .filter(|c| !c.pass)
        .map(|c| c.name.as_str())
        .collect();
    claims.push(Claim {
        name: "generator_certificates_at_N_prime",
        pass: failed.is_empty(),
        detail: if failed.is_empty() {
            format!("{} certificates at n = {}", certificates.len(), cc.n_prime)
        } else {
            format!("failed: {}", failed.join(", "))
        },
    });

    Ok(Report {
        pass: claims.iter().all(|c| c.pass),
        validation,
        constants: Some(cc),
        certificates,
        claims,
    })
}
