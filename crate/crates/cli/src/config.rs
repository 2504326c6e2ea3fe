//! Experiment configuration: a TOML document with fixed sections, unknown keys
//! rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use bathy_core::certificate::ConfigConstants;
use bathy_core::elliptic::{LinearMethod, SolverOptions};
use bathy_core::inversion::InversionOptions;
use bathy_core::waves::{mother_grid, SimConfig};
use bathy_core::{Grid1D, ScalarField};

use crate::error::{CliError, CliResult};
use crate::expr::Expr;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub grid: GridSection,
    pub physics: PhysicsSection,
    pub profiles: ProfilesSection,
    pub time: TimeSection,
    pub window: WindowSection,
    pub certificate: CertificateSection,
    pub inversion: InversionSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Direct,
    Gmres,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    /// Nodes on the observation window.
    pub n_nodes: usize,
    pub n_sigma: usize,
    /// Length of the periodic simulation domain in window lengths.
    pub mother_factor: usize,
    pub solver: SolverKind,
    pub solver_tol: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { n_nodes: 33, n_sigma: 17, mother_factor: 3, solver: SolverKind::Direct, solver_tol: 1e-10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhysicsSection {
    pub g: f64,
    /// Minimum admissible depth.
    pub h0: f64,
}

impl Default for PhysicsSection {
    fn default() -> Self {
        Self { g: 9.81, h0: 0.1 }
    }
}

/// Profiles as expressions in `X`; the `*0` entries describe the second
/// configuration of a certificate pair and default to the first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProfilesSection {
    pub bottom: String,
    pub surface: String,
    pub psi: String,
    pub bottom0: Option<String>,
    pub surface0: Option<String>,
    pub psi0: Option<String>,
}

impl Default for ProfilesSection {
    fn default() -> Self {
        Self {
            bottom: "-1".into(),
            surface: "0".into(),
            psi: "0".into(),
            bottom0: None,
            surface0: None,
            psi0: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeSection {
    pub dt: f64,
    pub t_end: f64,
    /// Measurement time.
    pub t0: f64,
}

impl Default for TimeSection {
    fn default() -> Self {
        Self { dt: 1e-2, t_end: 1.0, t0: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WindowSection {
    pub a1: f64,
    pub a2: f64,
}

impl Default for WindowSection {
    fn default() -> Self {
        Self { a1: 0.0, a2: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CertificateSection {
    pub s: f64,
    pub big_c: f64,
    pub small_c: f64,
    /// Seed of the randomized checks.
    pub seed: u64,
    /// Random configurations and pairs drawn by `verify`.
    pub samples: usize,
    pub epsilons: Vec<f64>,
}

impl Default for CertificateSection {
    fn default() -> Self {
        let c = ConfigConstants::default();
        Self { s: c.s, big_c: c.big_c, small_c: c.small_c, seed: 2024, samples: 5, epsilons: vec![1e-1, 1e-2, 1e-3] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InversionSection {
    pub alpha_reg: f64,
    pub max_iters: usize,
    pub grad_tol: f64,
    pub step_init: f64,
    pub fd_step: f64,
    pub depth_floor: f64,
    pub memory: usize,
    /// Starting bottom; its end values are replaced by the measured ones.
    pub b_init: String,
    /// Known bottom for the error report; defaults to the one stored with the measurement.
    pub truth: Option<String>,
    /// Noise level δ: adds `δ·max|∂_tζ|·U(−1, 1)` to the measured `∂_tζ`.
    pub noise: f64,
    /// Measurement index; defaults to `<out>/measurement/measurement.json`.
    pub measurement: Option<PathBuf>,
}

impl Default for InversionSection {
    fn default() -> Self {
        let o = InversionOptions::default();
        Self {
            alpha_reg: o.alpha_reg,
            max_iters: o.max_iters,
            grad_tol: o.grad_tol,
            step_init: o.step_init,
            fd_step: o.fd_step,
            depth_floor: o.depth_floor,
            memory: o.memory,
            b_init: "-1".into(),
            truth: None,
            noise: 0.0,
            measurement: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub plots: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), plots: true }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.grid.n_nodes < 2 {
            return bad(format!("grid.n_nodes = {} must be at least 2", self.grid.n_nodes));
        }
        if self.grid.mother_factor == 0 {
            return bad("grid.mother_factor must be positive".into());
        }
        if !(self.window.a2 > self.window.a1) {
            return bad(format!("window [{}, {}] is empty", self.window.a1, self.window.a2));
        }
        if !(self.grid.solver_tol > 0.0) {
            return bad(format!("grid.solver_tol = {} must be positive", self.grid.solver_tol));
        }
        for (name, src) in self.expressions() {
            Expr::parse(src).map_err(|e| CliError::Config(format!("{name} = \"{src}\": {e}")))?;
        }
        self.constants().validate()?;
        self.inversion_options().validate()?;
        Ok(())
    }

    fn expressions(&self) -> Vec<(&'static str, &str)> {
        let p = &self.profiles;
        let mut v = vec![("profiles.bottom", p.bottom.as_str()), ("profiles.surface", p.surface.as_str()), ("profiles.psi", p.psi.as_str())];
        for (name, e) in [("profiles.bottom0", &p.bottom0), ("profiles.surface0", &p.surface0), ("profiles.psi0", &p.psi0)] {
            if let Some(s) = e {
                v.push((name, s.as_str()));
            }
        }
        v.push(("inversion.b_init", self.inversion.b_init.as_str()));
        if let Some(t) = &self.inversion.truth {
            v.push(("inversion.truth", t.as_str()));
        }
        v
    }

    pub fn window_grid(&self) -> CliResult<Grid1D> {
        Ok(Grid1D::new(self.window.a1, self.window.a2, self.grid.n_nodes)?)
    }

    pub fn mother_grid(&self) -> CliResult<Grid1D> {
        Ok(mother_grid(&self.window_grid()?, self.grid.mother_factor)?)
    }

    pub fn solver(&self) -> SolverOptions {
        let method = match self.grid.solver {
            SolverKind::Direct => LinearMethod::Direct,
            SolverKind::Gmres => SolverOptions::gmres(self.grid.solver_tol).method,
        };
        SolverOptions { method, rel_tol: self.grid.solver_tol }
    }

    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            g: self.physics.g,
            dt: self.time.dt,
            t_end: self.time.t_end,
            mother_domain_factor: self.grid.mother_factor,
            n_sigma: self.grid.n_sigma,
            h0: self.physics.h0,
            solver: self.solver(),
            ..SimConfig::default()
        }
    }

    pub fn constants(&self) -> ConfigConstants {
        let c = &self.certificate;
        ConfigConstants { s: c.s, big_c: c.big_c, small_c: c.small_c, ..ConfigConstants::default() }
    }

    pub fn inversion_options(&self) -> InversionOptions {
        let i = &self.inversion;
        InversionOptions {
            alpha_reg: i.alpha_reg,
            max_iters: i.max_iters,
            grad_tol: i.grad_tol,
            step_init: i.step_init,
            fd_step: i.fd_step,
            depth_floor: i.depth_floor,
            memory: i.memory,
        }
    }
}

/// Parses `source` and samples it on `grid`; non-finite values are a config error.
pub fn sample(name: &str, source: &str, grid: Grid1D) -> CliResult<ScalarField> {
    let e = Expr::parse(source).map_err(|e| CliError::Config(format!("{name}: {e}")))?;
    let values: Vec<f64> = grid.nodes().iter().map(|&x| e.eval(x)).collect();
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(CliError::Config(format!("{name} = \"{source}\" is not finite at X = {}", grid.x(i))));
    }
    Ok(ScalarField::new(grid, values)?)
}

/// Closure form of a validated expression.
pub fn function(source: &str) -> CliResult<impl Fn(f64) -> f64> {
    let e = Expr::parse(source).map_err(|e| CliError::Config(format!("\"{source}\": {e}")))?;
    Ok(move |x| e.eval(x))
}
