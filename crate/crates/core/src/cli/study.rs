//! Convergence of the drawdown probability under R_D towards ψ_D as n grows.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{Config, StudySpec};
use crate::adjustment::{compute_constants, ConvergenceConstants};
use crate::error::{Error, Result};
use crate::model::DrawdownState;
use crate::retention::RetentionFn;
use crate::simulate::{mc_estimate, BarrierMode, McEstimate, Scheme, SimConfig};
use crate::valuefn::bound_bundle;

pub const CSV_HEADER: &str =
    "n,x,m,rho_n,rho_n_RD,psi_D,ell_n,u_n,psibar_n,psibar_Dn,mc_p_hat,mc_se,trunc_bound,paths,flag";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Flag {
    Asymptotic,
    PreAsymptotic,
}

impl Flag {
    fn as_str(self) -> &'static str {
        match self {
            Flag::Asymptotic => "asymptotic",
            Flag::PreAsymptotic => "pre-asymptotic",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StudyRow {
    pub n: f64,
    pub x: f64,
    pub m: f64,
    pub rho_n: f64,
    pub rho_n_rd: f64,
    pub psi_d: f64,
    pub ell_n: Option<f64>,
    pub u_n: Option<f64>,
    pub psibar_n: f64,
    pub psibar_dn: f64,
    pub mc: McEstimate,
    pub flag: Flag,
    /// p̂ ∈ [ℓ_n − 3se, u_n + 3se + trunc]; only for asymptotic rows.
    pub sandwich: Option<bool>,
    /// |p̂ − ψ_D| ≤ 2C′/√n + 3se + trunc; only for asymptotic rows.
    pub rate: Option<bool>,
}

impl StudyRow {
    pub fn gap(&self) -> f64 {
        (self.mc.p_hat - self.psi_d).abs()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StateSlope {
    pub x: f64,
    pub m: f64,
    /// Least-squares slope of log|p̂ − ψ_D| against log n.
    pub slope: Option<f64>,
    pub points: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct StudyReport {
    pub constants: ConvergenceConstants,
    pub barrier_mult: f64,
    pub seed: u64,
    pub rows: Vec<StudyRow>,
    pub slopes: Vec<StateSlope>,
    pub asymptotic_rows: usize,
    pub sandwich_pass: bool,
    pub rate_pass: bool,
}

/// Least-squares slope of y against x.
pub fn ls_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let k = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / k;
    let my = points.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx > 0.0 {
        Some(sxy / sxx)
    } else {
        None
    }
}

fn validate_spec(study: &StudySpec, alpha: f64) -> Result<()> {
    if study.n_list.is_empty() {
        return Err(Error::InvalidStudy("n_list is empty".into()));
    }
    if study.states.is_empty() {
        return Err(Error::InvalidStudy("states is empty".into()));
    }
    if let Some(n) = study.n_list.iter().find(|n| !(**n >= 1.0) || !n.is_finite()) {
        return Err(Error::InvalidStudy(format!("scale {n} is below 1")));
    }
    for &[x, m] in &study.states {
        DrawdownState::new(x, m, alpha)?;
    }
    if study.paths == 0 {
        return Err(Error::InvalidStudy("paths must be at least 1".into()));
    }
    Ok(())
}

pub fn run_convergence_study(cfg: &Config) -> Result<StudyReport> {
    let p = &cfg.market;
    let s = &cfg.severity;
    let study = &cfg.study;
    validate_spec(study, p.alpha)?;
    let cc = compute_constants(p, s, cfg.constants.epsilon_frac)?;
    let rd = RetentionFn::diffusion_optimal(cc.rho_d, p);
    let n_prime = cc.n_prime as f64;

    let cells: Vec<(f64, f64, f64)> = study
        .states
        .iter()
        .flat_map(|&[x, m]| study.n_list.iter().map(move |&n| (n, x, m)))
        .collect();
    let rows = cells
        .par_iter()
        .map(|&(n, x, m)| {
            let b = bound_bundle(x, m, n, p, s, &cc)?;
            let sim = SimConfig {
                n,
                retention: rd,
                x0: x,
                m0: m,
                barrier_mult: study.barrier_mult,
                paths: study.paths,
                seed: study.seed,
                mode: BarrierMode::Drawdown,
                scheme: Scheme::JumpExact,
            };
            let mc = mc_estimate(&sim, p, s)?;
            let flag = if n >= n_prime {
                Flag::Asymptotic
            } else {
                Flag::PreAsymptotic
            };
            let (sandwich, rate) = match (flag, b.ell_n, b.u_n) {
                (Flag::Asymptotic, Some(lo), Some(hi)) => {
                    let inside = mc.p_hat >= lo - 3.0 * mc.se
                        && mc.p_hat <= hi + 3.0 * mc.se + mc.truncation_bound;
                    let gap = (mc.p_hat - b.psi_d).abs();
                    let allowed =
                        2.0 * cc.c_prime / n.sqrt() + 3.0 * mc.se + mc.truncation_bound;
                    (Some(inside), Some(gap <= allowed))
                }
                (Flag::Asymptotic, _, _) => (Some(false), Some(false)),
                _ => (None, None),
            };
            Ok(StudyRow {
                n,
                x,
                m,
                rho_n: b.rho_n,
                rho_n_rd: b.rho_n_of_rd,
                psi_d: b.psi_d,
                ell_n: b.ell_n,
                u_n: b.u_n,
                psibar_n: b.psibar_n,
                psibar_dn: b.psibar_dn,
                mc,
                flag,
                sandwich,
                rate,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let slopes = study
        .states
        .iter()
        .map(|&[x, m]| {
            let pts: Vec<(f64, f64)> = rows
                .iter()
                .filter(|r| r.x == x && r.m == m && r.gap() > 0.0)
                .map(|r| (r.n.ln(), r.gap().ln()))
                .collect();
            StateSlope {
                x,
                m,
                slope: ls_slope(&pts),
                points: pts.len(),
            }
        })
        .collect();
    let asymptotic_rows = rows.iter().filter(|r| r.flag == Flag::Asymptotic).count();
    let sandwich_pass = rows.iter().all(|r| r.sandwich != Some(false));
    let rate_pass = rows.iter().all(|r| r.rate != Some(false));
    Ok(StudyReport {
        constants: cc,
        barrier_mult: study.barrier_mult,
        seed: study.seed,
        rows,
        slopes,
        asymptotic_rows,
        sandwich_pass,
        rate_pass,
    })
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl StudyReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(256 * (self.rows.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                r.n,
                r.x,
                r.m,
                r.rho_n,
                r.rho_n_rd,
                r.psi_d,
                cell(r.ell_n),
                cell(r.u_n),
                r.psibar_n,
                r.psibar_dn,
                r.mc.p_hat,
                r.mc.se,
                r.mc.truncation_bound,
                r.mc.paths,
                r.flag.as_str()
            );
        }
        out
    }

    /// Writes `convergence.csv` and `summary.json` into `dir`.
    pub fn write_outputs(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("convergence.csv"), self.to_csv())?;
        let summary = serde_json::to_string_pretty(self).map_err(std::io::Error::other)?;
        std::fs::write(dir.join("summary.json"), summary)
    }
}
