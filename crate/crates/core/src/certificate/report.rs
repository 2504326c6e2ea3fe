//! End-to-end stability bound for one pair.

use std::path::Path;

use serde::Serialize;

use super::size::{estimate_cbot, ComponentCovering};
use super::terms::{g1, g2_to_g5, lemma31_sides, tbot, tlog_parts, TlogMode};
use super::{ConfigConstants, PairConfiguration};
use crate::error::{Error, Result};
use crate::geometry::l1_distance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Holds,
    NonInformative,
    Violated,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TermBreakdown {
    pub lhs_energy: f64,
    pub j1: f64,
    pub j2: f64,
    pub j3: f64,
    pub surface_terms: [f64; 2],
    pub tbot: f64,
    /// `None` when the log-log argument is at most `e`.
    pub tlog: Option<f64>,
    pub tlog1: Option<f64>,
    pub g1: f64,
    pub g2: f64,
    pub g3: f64,
    pub g4: f64,
    pub g5: f64,
    pub z3_norm: f64,
    pub z4_norm: f64,
    pub z5_norm: f64,
    pub z6: f64,
    pub z7: f64,
    /// `None` when the bottoms coincide.
    pub cbot_estimate: Option<f64>,
    pub crho_estimates: Vec<f64>,
    /// `None` (unbounded) when the log-log guard fires.
    pub final_rhs: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GridInfo {
    pub a1: f64,
    pub a2: f64,
    pub n_nodes: usize,
    pub n_sigma: usize,
    pub mesh_size: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificateReport {
    pub constants: ConfigConstants,
    pub grid: GridInfo,
    pub terms: TermBreakdown,
    /// `C_bot·‖b − b0‖_{L¹}`.
    pub lhs: f64,
    /// `(G2 + G3 + Tlog1 + Tbot) / min(E, E0)`; `None` (unbounded) when the
    /// log-log guard fires.
    pub rhs: Option<f64>,
    pub l1_distance: f64,
    pub energy: f64,
    pub energy0: f64,
    pub smallness_ok: bool,
    pub verdict: Verdict,
    pub components: Vec<ComponentCovering>,
}

impl CertificateReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

pub fn theorem46_report(pair: &PairConfiguration, constants: &ConfigConstants) -> Result<CertificateReport> {
    constants.validate()?;
    let l31 = lemma31_sides(pair)?;
    let prop = tlog_parts(pair, constants, TlogMode::Prop32)?;
    let thm = tlog_parts(pair, constants, TlogMode::Thm46)?;
    let g1t = g1(pair)?;
    let gt = g2_to_g5(pair)?;
    let tb = tbot(pair)?;
    let (cbot, components) = match estimate_cbot(pair) {
        Ok(c) => (Some(c.cbot), c.components),
        Err(Error::NoComponents) => (None, Vec::new()),
        Err(e) => return Err(e),
    };
    let (e, e0) = (pair.phi().total_energy(), pair.phi0().total_energy());
    let rhs = thm.value.map(|t| (gt.g2 + gt.g3 + t + tb) / e.min(e0));
    let l1 = l1_distance(pair.bottom(), pair.bottom0())?;
    let lhs = cbot.unwrap_or(0.0) * l1;
    let verdict = match rhs {
        Some(r) if thm.smallness_ok => {
            if lhs <= r * (1.0 + 1e-9) {
                Verdict::Holds
            } else {
                Verdict::Violated
            }
        }
        _ => Verdict::NonInformative,
    };
    let terms = TermBreakdown {
        lhs_energy: l31.lhs,
        j1: l31.j1,
        j2: l31.j2,
        j3: l31.j3,
        surface_terms: l31.surface_terms,
        tbot: tb,
        tlog: prop.value,
        tlog1: thm.value,
        g1: g1t.g1,
        g2: gt.g2,
        g3: gt.g3,
        g4: gt.g4,
        g5: gt.g5,
        z3_norm: g1t.z3_norm,
        z4_norm: gt.z.z4_norm,
        z5_norm: gt.z.z5_norm,
        z6: gt.z.z6,
        z7: gt.z.z7,
        cbot_estimate: cbot,
        crho_estimates: components.iter().map(|c| c.crho).collect(),
        final_rhs: rhs,
    };
    let grid = pair.grid();
    Ok(CertificateReport {
        constants: *constants,
        grid: GridInfo {
            a1: grid.a1(),
            a2: grid.a2(),
            n_nodes: grid.n_nodes(),
            n_sigma: pair.phi().n_sigma(),
            mesh_size: pair.mesh_size(),
        },
        terms,
        lhs,
        rhs,
        l1_distance: l1,
        energy: e,
        energy0: e0,
        smallness_ok: thm.smallness_ok,
        verdict,
        components,
    })
}

/// Writes `(epsilon, l1, rhs)` rows of a sweep; an unbounded RHS is written as `inf`.
pub fn write_sweep_csv(path: &Path, rows: &[(f64, f64, Option<f64>)]) -> Result<()> {
    crate::io::write_atomic(path, |w| {
        writeln!(w, "epsilon,l1_distance,rhs")?;
        for (eps, l1, rhs) in rows {
            writeln!(w, "{eps:e},{l1:e},{:e}", rhs.unwrap_or(f64::INFINITY))?;
        }
        Ok(())
    })
}
