//! Stability certificates for pairs of solved configurations: the energy
//! inequality between two bottoms, its measurable upper bounds, and the
//! size-estimate lower bound in terms of `‖b − b0‖_{L¹}`.

mod quad;
mod report;
mod sample;
mod size;
mod terms;


use serde::Serialize;

use crate::elliptic::{solve_potential, Lateral, NodeDerivs, PotentialField, SolverOptions};
use crate::error::{Error, Result};
use crate::geometry::{
    build_domain, decompose_interbottom, envelopes, split_surface, zero_threshold, RegionDecomposition,
    SurfaceSplit,
};
use crate::grid::{Grid1D, ScalarField};

pub use report::{theorem46_report, write_sweep_csv, CertificateReport, TermBreakdown, Verdict};
pub use sample::{
    epsilon_pair, epsilon_sweep, random_configuration, random_configuration_with, random_pair, random_pair_with, sample_rng,
    SampleGrid, SAMPLE_H0,
};
pub use size::{distance_to_boundary, estimate_cbot, estimate_crho, CbotEstimate, ComponentCovering};
pub use terms::{
    g1, g2_to_g5, inequality_checks, lemma31_sides, lemma41_check, tbot, tbot_parts, tlog, tlog_formula, tlog_parts,
    G1Terms, GTerms, InequalityCheck, Lemma31Sides, Lemma41Margins, TbotParts, TlogMode, TlogParts, TlogValue,
    ZCoefficients,
};

/// How `‖φ − φ0‖_{H²}` over the common domain is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum H2NormMode {
    /// Trapezoid sum of squared derivatives of order 0 to 2.
    DiscreteSobolev,
}

/// Constants of the log-log estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct ConfigConstants {
    /// Exponent in `(0, 1/2)`.
    pub s: f64,
    pub big_c: f64,
    /// Smallness constant, `> e`.
    pub small_c: f64,
    pub h2_norm_mode: H2NormMode,
}

impl Default for ConfigConstants {
    fn default() -> Self {
        Self { s: 0.25, big_c: 1.0, small_c: std::f64::consts::E + 0.01, h2_norm_mode: H2NormMode::DiscreteSobolev }
    }
}

impl ConfigConstants {
    pub fn validate(&self) -> Result<()> {
        if !(self.s > 0.0 && self.s < 0.5) {
            return Err(Error::InvalidParameter(format!("s = {} must lie in (0, 1/2)", self.s)));
        }
        if !(self.big_c > 0.0 && self.big_c.is_finite()) {
            return Err(Error::InvalidParameter(format!("C = {} must be positive", self.big_c)));
        }
        if !(self.small_c > std::f64::consts::E && self.small_c.is_finite()) {
            return Err(Error::InvalidParameter(format!("c = {} must exceed e", self.small_c)));
        }
        Ok(())
    }
}

/// Inputs of one configuration before solving.
#[derive(Debug, Clone)]
pub struct ConfigurationInput {
    pub bottom: ScalarField,
    pub surface: ScalarField,
    pub psi: ScalarField,
    pub lateral: Lateral,
}

/// Solves on a periodic domain `factor` times longer than `window`, then re-solves
/// on the window with the restricted potential as wall data.
#[allow(clippy::too_many_arguments)]
pub fn solve_window(
    window: &Grid1D,
    factor: usize,
    bottom: impl Fn(f64) -> f64,
    surface: impl Fn(f64) -> f64,
    psi: impl Fn(f64) -> f64,
    h0: f64,
    n_sigma: usize,
    options: &SolverOptions,
) -> Result<PotentialField> {
    let mother = crate::waves::mother_grid(window, factor)?;
    let (i1, i2) = crate::waves::window_indices(&mother, window)?;
    let d = build_domain(ScalarField::from_fn(mother, bottom)?, ScalarField::from_fn(mother, surface)?, h0)?;
    let psi = ScalarField::from_fn(mother, psi)?;
    let outer = solve_potential(&d, &psi, &Lateral::Periodic, n_sigma, options)?;
    let walls = Lateral::Walls(outer.restrict(i1, i2)?.wall_trace());
    solve_potential(&d.slice(i1, i2)?, &psi.slice(i1, i2)?, &walls, n_sigma, options)
}

/// One wall column of the common window.
#[derive(Debug, Clone, Copy)]
pub(crate) struct WallColumn {
    pub i: usize,
    /// Outward normal is `sign · e_X`.
    pub sign: f64,
    pub b: f64,
    pub b0: f64,
    pub upper_bottom: f64,
    pub lower_surface: f64,
}

/// Traces of both potentials on the lower surface `ζ̲`, node by node.
#[derive(Debug, Clone)]
pub(crate) struct SurfaceData {
    /// `φ` on `ζ̲`: its own surface trace on S2, sampled at `ζ0` on S1.
    pub phi: Vec<NodeDerivs>,
    /// `φ0` on `ζ̲`: its own trace on S1, sampled at `ζ` on S2.
    pub phi0: Vec<NodeDerivs>,
    /// Slope of `ζ̲` (that of `ζ0` on S1 and of `ζ` on S2).
    pub slope: Vec<f64>,
    /// Own surface traces.
    pub phi_own: Vec<NodeDerivs>,
    pub phi0_own: Vec<NodeDerivs>,
}

/// Unit normal derivative and the gradient rebuilt from surface data.
#[derive(Debug, Clone)]
pub(crate) struct Measured {
    pub psi: ScalarField,
    pub slope: Vec<f64>,
    pub normal: ScalarField,
    pub dy: ScalarField,
    pub gx: ScalarField,
}

impl Measured {
    fn of(phi: &PotentialField) -> Result<Self> {
        let grid = *phi.grid();
        let top = phi.n_sigma() - 1;
        let psi = ScalarField::new(grid, (0..grid.n_nodes()).map(|i| phi.value(i, top)).collect())?;
        let zeta = phi.sigma_map().domain().surface().clone();
        let slope = phi.surface_slope().to_vec();
        let flux = phi.dno();
        let normal =
            ScalarField::new(grid, flux.values().iter().zip(&slope).map(|(g, s)| g / (1.0 + s * s).sqrt()).collect())?;
        let (dy, gx) = crate::elliptic::traces_from_measurements(&psi, &zeta, &normal)?;
        Ok(Self { psi, slope, normal, dy, gx })
    }
}

/// Two solved configurations on one window with the derived common geometry.
#[derive(Debug, Clone)]
pub struct PairConfiguration {
    phi: PotentialField,
    phi0: PotentialField,
    h0: f64,
    lower_surface: ScalarField,
    upper_bottom: ScalarField,
    split: SurfaceSplit,
    decomposition: RegionDecomposition,
    pub(crate) surf: SurfaceData,
    pub(crate) meas: Measured,
    pub(crate) meas0: Measured,
}

impl PairConfiguration {
    pub fn new(phi: PotentialField, phi0: PotentialField, h0: f64) -> Result<Self> {
        if !phi.grid().same_as(phi0.grid()) {
            return Err(Error::GridMismatch);
        }
        if phi.is_periodic() != phi0.is_periodic() {
            return Err(Error::InvalidParameter("both configurations need the same lateral condition".into()));
        }
        if !(h0 > 0.0) {
            return Err(Error::InvalidParameter(format!("h0 = {h0} must be positive")));
        }
        for f in [&phi, &phi0] {
            let d = f.sigma_map().domain();
            for i in 0..d.grid().n_nodes() {
                if d.depth(i) < h0 {
                    return Err(Error::DepthViolation { depth: d.depth(i), h0, x: d.grid().x(i) });
                }
            }
        }
        let dom = phi.sigma_map().domain();
        let dom0 = phi0.sigma_map().domain();
        let (zeta, zeta0, b, b0) = (dom.surface(), dom0.surface(), dom.bottom(), dom0.bottom());
        let gap = zeta.sub(zeta0)?.max_abs();
        if gap > 0.5 * h0 {
            return Err(Error::SurfaceGap { gap, limit: 0.5 * h0 });
        }
        let (lower_surface, upper_bottom) = envelopes(zeta, zeta0, b, b0)?;
        let split = split_surface(zeta, zeta0)?;
        let decomposition = decompose_interbottom(b, b0)?;
        let surf = surface_data(&phi, &phi0, &split)?;
        let meas = Measured::of(&phi)?;
        let meas0 = Measured::of(&phi0)?;
        Ok(Self { phi, phi0, h0, lower_surface, upper_bottom, split, decomposition, surf, meas, meas0 })
    }

    /// Solves both configurations and pairs them.
    pub fn solve(
        first: &ConfigurationInput,
        second: &ConfigurationInput,
        h0: f64,
        n_sigma: usize,
        options: &SolverOptions,
    ) -> Result<Self> {
        let solve_one = |c: &ConfigurationInput| -> Result<PotentialField> {
            let d = build_domain(c.bottom.clone(), c.surface.clone(), h0)?;
            solve_potential(&d, &c.psi, &c.lateral, n_sigma, options)
        };
        Self::new(solve_one(first)?, solve_one(second)?, h0)
    }

    pub fn phi(&self) -> &PotentialField {
        &self.phi
    }

    pub fn phi0(&self) -> &PotentialField {
        &self.phi0
    }

    pub fn h0(&self) -> f64 {
        self.h0
    }

    pub fn grid(&self) -> &Grid1D {
        self.phi.grid()
    }

    pub fn bottom(&self) -> &ScalarField {
        self.phi.sigma_map().domain().bottom()
    }

    pub fn bottom0(&self) -> &ScalarField {
        self.phi0.sigma_map().domain().bottom()
    }

    pub fn surface(&self) -> &ScalarField {
        self.phi.sigma_map().domain().surface()
    }

    pub fn surface0(&self) -> &ScalarField {
        self.phi0.sigma_map().domain().surface()
    }

    pub fn psi(&self) -> &ScalarField {
        &self.meas.psi
    }

    pub fn psi0(&self) -> &ScalarField {
        &self.meas0.psi
    }

    /// `ζ̲ = min(ζ, ζ0)`.
    pub fn lower_surface(&self) -> &ScalarField {
        &self.lower_surface
    }

    /// `b̄ = max(b, b0)`.
    pub fn upper_bottom(&self) -> &ScalarField {
        &self.upper_bottom
    }

    pub fn split(&self) -> &SurfaceSplit {
        &self.split
    }

    pub fn decomposition(&self) -> &RegionDecomposition {
        &self.decomposition
    }

    /// `‖ζ − ζ0‖_∞`.
    pub fn surface_gap(&self) -> f64 {
        self.surface().sub(self.surface0()).expect("shared grid").max_abs()
    }

    /// Mesh size shared by every `O(h²)` tolerance on this pair.
    pub fn mesh_size(&self) -> f64 {
        self.phi.mesh_size().max(self.phi0.mesh_size())
    }

    pub(crate) fn walls(&self) -> Vec<WallColumn> {
        if self.phi.is_periodic() {
            return Vec::new();
        }
        let n = self.grid().n_nodes();
        [(0, -1.0), (n - 1, 1.0)]
            .into_iter()
            .map(|(i, sign)| WallColumn {
                i,
                sign,
                b: self.bottom().get(i),
                b0: self.bottom0().get(i),
                upper_bottom: self.upper_bottom.get(i),
                lower_surface: self.lower_surface.get(i),
            })
            .collect()
    }

    /// Number of Gauss panels used along a wall segment.
    pub(crate) fn wall_panels(&self) -> usize {
        self.phi.n_sigma().max(self.phi0.n_sigma()) - 1
    }
}

fn surface_data(phi: &PotentialField, phi0: &PotentialField, split: &SurfaceSplit) -> Result<SurfaceData> {
    let n = phi.grid().n_nodes();
    let (top, top0) = (phi.n_sigma() - 1, phi0.n_sigma() - 1);
    let tau = zero_threshold(phi.sigma_map().domain().surface(), phi0.sigma_map().domain().surface());
    let mut out = SurfaceData {
        phi: Vec::with_capacity(n),
        phi0: Vec::with_capacity(n),
        slope: Vec::with_capacity(n),
        phi_own: Vec::with_capacity(n),
        phi0_own: Vec::with_capacity(n),
    };
    for i in 0..n {
        let own = phi.node(i, top);
        let own0 = phi0.node(i, top0);
        let (z, z0) = (phi.surface(i), phi0.surface(i));
        if split.s1_mask[i] {
            out.phi.push(phi.sample_column(i, z0)?);
            out.phi0.push(own0);
            out.slope.push(phi0.surface_slope()[i]);
        } else {
            out.phi.push(own);
            out.phi0.push(if (z - z0).abs() <= tau { own0 } else { phi0.sample_column(i, z)? });
            out.slope.push(phi.surface_slope()[i]);
        }
        out.phi_own.push(own);
        out.phi0_own.push(own0);
    }
    Ok(out)
}
