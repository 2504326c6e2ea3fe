//! Free-surface dynamics in Zakharov/Craig–Sulem form on a periodic domain, and
//! the surface measurement taken from a trajectory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::elliptic::{EllipticSolver, Lateral, LateralTrace, SolverOptions};
use crate::error::{Error, Result};
use crate::geometry::build_domain;
use crate::grid::{Grid1D, ScalarField};
use crate::io::{write_atomic, write_json};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveState {
    pub zeta: ScalarField,
    pub psi: ScalarField,
    pub t: f64,
}

impl WaveState {
    pub fn new(zeta: ScalarField, psi: ScalarField, t: f64) -> Result<Self> {
        zeta.check_grid(&psi)?;
        Ok(Self { zeta, psi, t })
    }

    pub fn rest(grid: Grid1D) -> Self {
        let z = ScalarField::constant(grid, 0.0).expect("finite");
        Self { zeta: z.clone(), psi: z, t: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LateralPolicy {
    Periodic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub g: f64,
    pub dt: f64,
    pub t_end: f64,
    pub lateral_policy: LateralPolicy,
    /// Length of the periodic simulation domain in units of the window length.
    pub mother_domain_factor: usize,
    pub n_sigma: usize,
    pub h0: f64,
    pub solver: SolverOptions,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            g: 9.81,
            dt: 1e-2,
            t_end: 1.0,
            lateral_policy: LateralPolicy::Periodic,
            mother_domain_factor: 3,
            n_sigma: 17,
            h0: 0.1,
            solver: SolverOptions::default(),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return bad(format!("dt = {} must be positive", self.dt));
        }
        if !(self.t_end >= self.dt) {
            return bad(format!("t_end = {} must be at least dt", self.t_end));
        }
        if self.mother_domain_factor < 1 {
            return bad("mother_domain_factor must be at least 1".into());
        }
        if !(self.g.is_finite() && self.h0 > 0.0) {
            return bad("g must be finite and h0 positive".into());
        }
        if self.n_sigma < 3 {
            return bad(format!("n_sigma = {} must be at least 3", self.n_sigma));
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt - 1e-9).ceil().max(1.0) as usize
    }
}

/// Periodic grid `factor` times as long as `window`, with the same spacing and the
/// window's nodes among its nodes.
pub fn mother_grid(window: &Grid1D, factor: usize) -> Result<Grid1D> {
    let factor = factor.max(1);
    let cells = window.n_nodes() - 1;
    let shift = (factor - 1) * cells / 2;
    let h = window.spacing();
    let a1 = window.a1() - shift as f64 * h;
    Grid1D::new(a1, a1 + (factor * cells) as f64 * h, factor * cells + 1)
}

/// Right-hand side evaluator that keeps the sparse analysis between calls.
pub struct WaveModel {
    bottom: ScalarField,
    config: SimConfig,
    solver: EllipticSolver,
}

impl WaveModel {
    pub fn new(bottom: ScalarField, config: SimConfig) -> Result<Self> {
        config.validate()?;
        let solver = EllipticSolver::new(config.solver);
        Ok(Self { bottom, config, solver })
    }

    pub fn bottom(&self) -> &ScalarField {
        &self.bottom
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    /// `G(ζ, b)ψ` under the periodic lateral policy.
    pub fn dno(&mut self, state: &WaveState) -> Result<ScalarField> {
        Ok(self.solve(state)?.dno())
    }

    pub fn solve(&mut self, state: &WaveState) -> Result<crate::elliptic::PotentialField> {
        let domain = build_domain(self.bottom.clone(), state.zeta.clone(), self.config.h0)?;
        self.solver.solve(&domain, &state.psi, &Lateral::Periodic, self.config.n_sigma)
    }

    pub fn rhs(&mut self, state: &WaveState) -> Result<(ScalarField, ScalarField)> {
        let g_psi = self.dno(state)?;
        let zx = state.zeta.periodic_derivative();
        let px = state.psi.periodic_derivative();
        let grav = self.config.g;
        let dpsi: Vec<f64> = (0..state.zeta.len())
            .map(|i| {
                let (z, zp, pp, gp) = (state.zeta.get(i), zx.get(i), px.get(i), g_psi.get(i));
                let w = gp + zp * pp;
                -grav * z - 0.5 * pp * pp + w * w / (2.0 * (1.0 + zp * zp))
            })
            .collect();
        let dpsi = ScalarField::new(*state.zeta.grid(), dpsi)?;
        Ok((g_psi, dpsi))
    }

    pub fn step(&mut self, state: &WaveState) -> Result<WaveState> {
        let dt = self.config.dt;
        let stage = |s: &WaveState, k: &(ScalarField, ScalarField), a: f64| -> Result<WaveState> {
            WaveState::new(
                s.zeta.zip_with(&k.0, |u, d| u + a * d)?,
                s.psi.zip_with(&k.1, |u, d| u + a * d)?,
                s.t + a,
            )
        };
        let k1 = self.rhs(state)?;
        let k2 = self.rhs(&stage(state, &k1, 0.5 * dt)?)?;
        let k3 = self.rhs(&stage(state, &k2, 0.5 * dt)?)?;
        let k4 = self.rhs(&stage(state, &k3, dt)?)?;
        let comb = |u: &ScalarField, f: fn(&(ScalarField, ScalarField)) -> &ScalarField| -> Result<ScalarField> {
            let v = (0..u.len())
                .map(|i| {
                    u.get(i) + dt / 6.0 * (f(&k1).get(i) + 2.0 * f(&k2).get(i) + 2.0 * f(&k3).get(i) + f(&k4).get(i))
                })
                .collect();
            ScalarField::new(*u.grid(), v)
        };
        WaveState::new(comb(&state.zeta, |k| &k.0)?, comb(&state.psi, |k| &k.1)?, state.t + dt)
    }

    /// Initial state followed by one state per step.
    pub fn simulate(&mut self, init: WaveState) -> Result<Vec<WaveState>> {
        let n = self.config.n_steps();
        let mut out = Vec::with_capacity(n + 1);
        let mut s = init;
        for _ in 0..n {
            let next = self.step(&s)?;
            out.push(s);
            s = next;
        }
        out.push(s);
        Ok(out)
    }
}

pub fn rhs(state: &WaveState, b: &ScalarField, config: &SimConfig) -> Result<(ScalarField, ScalarField)> {
    WaveModel::new(b.clone(), config.clone())?.rhs(state)
}

pub fn step_rk4(state: &WaveState, b: &ScalarField, config: &SimConfig) -> Result<WaveState> {
    WaveModel::new(b.clone(), config.clone())?.step(state)
}

pub fn simulate(init: WaveState, b: &ScalarField, config: &SimConfig) -> Result<Vec<WaveState>> {
    WaveModel::new(b.clone(), config.clone())?.simulate(init)
}

/// Mean over one period (the repeated last node is left out).
pub fn periodic_mean(f: &ScalarField) -> f64 {
    let v = f.values();
    let m = v.len() - 1;
    v[..m].iter().sum::<f64>() / m as f64
}

/// Surface data on the window at one instant, with the wall traces of the
/// simulation's potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementTuple {
    pub zeta: ScalarField,
    pub dt_zeta: ScalarField,
    pub psi: ScalarField,
    pub b_left: f64,
    pub b_right: f64,
    pub t0: f64,
    pub theta: LateralTrace,
}

impl MeasurementTuple {
    pub fn grid(&self) -> &Grid1D {
        self.zeta.grid()
    }

    pub fn n_sigma(&self) -> usize {
        self.theta.n_sigma()
    }

    /// Writes one CSV per field and an index JSON naming them.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let csv = |name: &str, f: &ScalarField| -> Result<String> {
            let file = format!("{name}.csv");
            write_atomic(&dir.join(&file), |w| f.write_csv(w))?;
            Ok(file)
        };
        let zf = csv("zeta", &self.zeta)?;
        let df = csv("dt_zeta", &self.dt_zeta)?;
        let pf = csv("psi", &self.psi)?;
        let wall = |name: &str, v: &[f64]| -> Result<String> {
            let file = format!("{name}.csv");
            write_atomic(&dir.join(&file), |w| {
                let mut out = csv::Writer::from_writer(w);
                out.write_record(["level", "value"])?;
                for (j, x) in v.iter().enumerate() {
                    out.write_record([j.to_string(), crate::grid::fmt_f64(*x)])?;
                }
                out.flush()?;
                Ok(())
            })?;
            Ok(file)
        };
        let tl = wall("theta_left", &self.theta.left)?;
        let tr = wall("theta_right", &self.theta.right)?;
        let index = serde_json::json!({
            "t0": self.t0,
            "b_left": self.b_left,
            "b_right": self.b_right,
            "files": { "zeta": zf, "dt_zeta": df, "psi": pf, "theta_left": tl, "theta_right": tr },
        });
        let path = dir.join("measurement.json");
        write_json(&path, &index)?;
        Ok(path)
    }

    pub fn read(index: &Path) -> Result<Self> {
        let dir = index.parent().unwrap_or(Path::new("."));
        let v: serde_json::Value = serde_json::from_reader(std::fs::File::open(index)?)?;
        let num = |k: &str| {
            v[k].as_f64().ok_or_else(|| Error::InvalidParameter(format!("measurement index lacks `{k}`")))
        };
        let file = |k: &str| -> Result<PathBuf> {
            let name = v["files"][k]
                .as_str()
                .ok_or_else(|| Error::InvalidParameter(format!("measurement index lacks file `{k}`")))?;
            Ok(dir.join(name))
        };
        let field = |k: &str| ScalarField::read_csv(std::fs::File::open(file(k)?)?);
        let wall = |k: &str| -> Result<Vec<f64>> {
            let mut r = csv::Reader::from_reader(std::fs::File::open(file(k)?)?);
            let mut out = Vec::new();
            for rec in r.records() {
                let rec = rec?;
                let s = rec.get(1).ok_or_else(|| Error::InvalidField("short row".into()))?;
                out.push(s.trim().parse::<f64>().map_err(|e| Error::InvalidField(e.to_string()))?);
            }
            Ok(out)
        };
        let zeta = field("zeta")?;
        let dt_zeta = field("dt_zeta")?;
        let psi = field("psi")?;
        zeta.check_grid(&dt_zeta)?;
        zeta.check_grid(&psi)?;
        Ok(Self {
            zeta,
            dt_zeta,
            psi,
            b_left: num("b_left")?,
            b_right: num("b_right")?,
            t0: num("t0")?,
            theta: LateralTrace::new(wall("theta_left")?, wall("theta_right")?)?,
        })
    }
}

/// Index of the step nearest to `t0`.
pub fn nearest_step(trajectory: &[WaveState], t0: f64) -> Result<usize> {
    let (start, end) = match (trajectory.first(), trajectory.last()) {
        (Some(a), Some(b)) => (a.t, b.t),
        _ => return Err(Error::TimeOutOfRange { t0, start: f64::NAN, end: f64::NAN }),
    };
    let slack = 1e-12 * (1.0 + end.abs());
    if !(t0 >= start - slack && t0 <= end + slack) {
        return Err(Error::TimeOutOfRange { t0, start, end });
    }
    let mut best = 0;
    for (k, s) in trajectory.iter().enumerate() {
        if (s.t - t0).abs() < (trajectory[best].t - t0).abs() {
            best = k;
        }
    }
    Ok(best)
}

/// Node indices of the window's end points on the simulation grid.
pub fn window_indices(mother: &Grid1D, window: &Grid1D) -> Result<(usize, usize)> {
    let err = || Error::WindowOutsideDomain { a1: window.a1(), a2: window.a2() };
    let i1 = mother.node_index(window.a1()).ok_or_else(err)?;
    let i2 = mother.node_index(window.a2()).ok_or_else(err)?;
    if i2 <= i1 || i2 - i1 + 1 != window.n_nodes() {
        return Err(err());
    }
    Ok((i1, i2))
}

/// Surface data on `window` at the step nearest to `t0`.
pub fn measure(
    trajectory: &[WaveState],
    t0: f64,
    b: &ScalarField,
    window: &Grid1D,
    config: &SimConfig,
) -> Result<MeasurementTuple> {
    let k = nearest_step(trajectory, t0)?;
    let state = &trajectory[k];
    state.zeta.check_grid(b)?;
    let (i1, i2) = window_indices(state.zeta.grid(), window)?;
    let mut model = WaveModel::new(b.clone(), config.clone())?;
    let phi = model.solve(state)?;
    let sub = phi.restrict(i1, i2)?;
    Ok(MeasurementTuple {
        zeta: state.zeta.slice(i1, i2)?,
        dt_zeta: phi.dno().slice(i1, i2)?,
        psi: state.psi.slice(i1, i2)?,
        b_left: b.get(i1),
        b_right: b.get(i2),
        t0: state.t,
        theta: sub.wall_trace(),
    })
}

/// One CSV per state plus `index.json` with the times and file names.
pub fn write_trajectory(dir: &Path, trajectory: &[WaveState]) -> Result<PathBuf> {
    let mut files = Vec::with_capacity(trajectory.len());
    for (k, s) in trajectory.iter().enumerate() {
        let name = format!("state_{k:05}.csv");
        write_atomic(&dir.join(&name), |w| {
            let mut out = csv::Writer::from_writer(w);
            out.write_record(["x", "zeta", "psi"])?;
            let g = s.zeta.grid();
            for i in 0..g.n_nodes() {
                out.write_record([
                    crate::grid::fmt_f64(g.x(i)),
                    crate::grid::fmt_f64(s.zeta.get(i)),
                    crate::grid::fmt_f64(s.psi.get(i)),
                ])?;
            }
            out.flush()?;
            Ok(())
        })?;
        files.push(name);
    }
    let times: Vec<f64> = trajectory.iter().map(|s| s.t).collect();
    let path = dir.join("index.json");
    write_json(&path, &serde_json::json!({ "times": times, "files": files }))?;
    Ok(path)
}
