//! Velocity potential in the fluid domain, the Dirichlet-to-Neumann operator and
//! surface traces.

mod field;
mod linear;
pub(crate) mod scalar;
pub(crate) mod stencil;

use faer::sparse::linalg::solvers::SymbolicLu;
use serde::{Deserialize, Serialize};

pub use field::{GreenReport, NodeDerivs, PotentialField};
pub use linear::{LinearMethod, SolveStats, SolverOptions};
pub(crate) use linear::{factor, solve_direct, Factored, SparseSystem};

use crate::error::{Error, Result};
use crate::geometry::FluidDomainSpec;
use crate::grid::ScalarField;
use stencil::{Geometry, Layout};

/// Terrain-following coordinates `y = b + σ(ζ − b)` with `n_sigma` levels.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaMap {
    domain: FluidDomainSpec,
    n_sigma: usize,
}

impl SigmaMap {
    pub fn new(domain: FluidDomainSpec, n_sigma: usize) -> Result<Self> {
        if n_sigma < 3 {
            return Err(Error::InvalidParameter(format!("n_sigma = {n_sigma} must be at least 3")));
        }
        Ok(Self { domain, n_sigma })
    }

    pub fn domain(&self) -> &FluidDomainSpec {
        &self.domain
    }

    pub fn n_sigma(&self) -> usize {
        self.n_sigma
    }

    pub fn dsigma(&self) -> f64 {
        1.0 / (self.n_sigma - 1) as f64
    }

    pub fn sigma(&self, j: usize) -> f64 {
        j as f64 * self.dsigma()
    }

    pub fn y(&self, i: usize, sigma: f64) -> f64 {
        let b = self.domain.bottom().get(i);
        b + sigma * (self.domain.surface().get(i) - b)
    }
}

/// Potential values on the two lateral walls, one per σ-level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LateralTrace {
    pub left: Vec<f64>,
    pub right: Vec<f64>,
}

impl LateralTrace {
    pub fn new(left: Vec<f64>, right: Vec<f64>) -> Result<Self> {
        if left.len() != right.len() {
            return Err(Error::LateralMismatch { got: right.len(), expected: left.len() });
        }
        if left.iter().chain(&right).any(|v| !v.is_finite()) {
            return Err(Error::InvalidField("non-finite wall value".into()));
        }
        Ok(Self { left, right })
    }

    pub fn constant(n_sigma: usize, c: f64) -> Self {
        Self { left: vec![c; n_sigma], right: vec![c; n_sigma] }
    }

    /// Samples `f(x, y)` along both walls of `map`.
    pub fn from_fn(map: &SigmaMap, f: impl Fn(f64, f64) -> f64) -> Self {
        let grid = map.domain().grid();
        let n = grid.n_nodes();
        let col = |i: usize| -> Vec<f64> {
            (0..map.n_sigma()).map(|j| f(grid.x(i), map.y(i, map.sigma(j)))).collect()
        };
        Self { left: col(0), right: col(n - 1) }
    }

    pub fn n_sigma(&self) -> usize {
        self.left.len()
    }
}

/// Lateral boundary condition of a solve.
#[derive(Debug, Clone, PartialEq)]
pub enum Lateral {
    /// The grid is one period; its last node repeats the first.
    Periodic,
    /// Dirichlet data on the two walls.
    Walls(LateralTrace),
}

/// Potential and its derivatives on the free surface.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceTraces {
    pub phi_on_surface: ScalarField,
    pub grad_x_on_surface: ScalarField,
    pub dy_on_surface: ScalarField,
    pub normal_derivative: ScalarField,
}

/// Solver that keeps the sparse symbolic analysis between solves on one grid.
pub struct EllipticSolver {
    options: SolverOptions,
    symbolic: Option<(Layout, SymbolicLu<usize>)>,
}

impl EllipticSolver {
    pub fn new(options: SolverOptions) -> Self {
        Self { options, symbolic: None }
    }

    pub fn options(&self) -> &SolverOptions {
        &self.options
    }

    pub fn solve(
        &mut self,
        domain: &FluidDomainSpec,
        psi: &ScalarField,
        lateral: &Lateral,
        n_sigma: usize,
    ) -> Result<PotentialField> {
        let map = SigmaMap::new(domain.clone(), n_sigma)?;
        let layout = layout_for(domain, lateral, n_sigma)?;
        psi.check_grid(domain.bottom())?;
        let geom = geometry_f64(domain, layout);
        let sys = assemble(&geom, psi.values(), lateral);
        let (unknowns, stats) = match self.options.method {
            LinearMethod::Direct => {
                let mut slot = match self.symbolic.take() {
                    Some((l, s)) if l == layout => Some(s),
                    _ => None,
                };
                let f = factor(&sys, Some(&mut slot))?;
                self.symbolic = slot.map(|s| (layout, s));
                solve_direct(&sys, &f, self.options.rel_tol)?
            }
            LinearMethod::Gmres { restart, max_iters } => {
                linear::solve_gmres(&sys, self.options.rel_tol, restart, max_iters)?
            }
        };
        Ok(PotentialField::from_unknowns(map, layout, &unknowns, stats))
    }
}

pub(crate) fn layout_for(domain: &FluidDomainSpec, lateral: &Lateral, n_sigma: usize) -> Result<Layout> {
    if n_sigma < 3 {
        return Err(Error::InvalidParameter(format!("n_sigma = {n_sigma} must be at least 3")));
    }
    let nx = domain.grid().n_nodes();
    match lateral {
        Lateral::Periodic => {
            if nx < 4 {
                return Err(Error::InvalidGrid("a periodic grid needs at least 4 nodes".into()));
            }
            Ok(Layout { nx, ns: n_sigma, periodic: true })
        }
        Lateral::Walls(t) => {
            if t.left.len() != n_sigma || t.right.len() != n_sigma {
                return Err(Error::LateralMismatch { got: t.left.len().min(t.right.len()), expected: n_sigma });
            }
            Ok(Layout { nx, ns: n_sigma, periodic: false })
        }
    }
}

pub(crate) fn geometry_f64(domain: &FluidDomainSpec, layout: Layout) -> Geometry<f64> {
    Geometry::new(layout, domain.grid().spacing(), domain.bottom().values(), domain.surface().values())
}

/// Row-normalized system: Dirichlet identity rows on σ = 1 and on the walls,
/// flux balances elsewhere.
pub(crate) fn assemble(geom: &Geometry<f64>, psi: &[f64], lateral: &Lateral) -> SparseSystem {
    let l = geom.layout;
    let n = l.n_unknowns();
    let mut rows = Vec::with_capacity(n);
    let mut rhs = vec![0.0; n];
    let mut buf = Vec::new();
    for c in 0..l.ncols() {
        for j in 0..l.ns {
            let k = l.idx(c, j);
            if j + 1 == l.ns {
                rows.push(vec![(k, 1.0)]);
                rhs[k] = psi[c];
            } else if l.is_wall(c) {
                rows.push(vec![(k, 1.0)]);
                if let Lateral::Walls(t) = lateral {
                    rhs[k] = if c == 0 { t.left[j] } else { t.right[j] };
                }
            } else {
                geom.balance_row(c, j, &mut buf);
                rows.push(buf.clone());
            }
        }
    }
    SparseSystem { n, rows, rhs }
}

/// Linear functionals mapping the unknowns to the surface flux at every node.
pub(crate) fn dno_rows<T: scalar::Real>(geom: &Geometry<T>) -> Vec<Vec<(usize, T)>> {
    let l = geom.layout;
    let mut out = Vec::with_capacity(l.nx);
    let mut buf = Vec::new();
    for i in 0..l.nx {
        geom.dno_row(l.column_of_node(i), &mut buf);
        out.push(buf.clone());
    }
    out
}

pub fn solve_potential(
    domain: &FluidDomainSpec,
    psi: &ScalarField,
    lateral: &Lateral,
    n_sigma: usize,
    options: &SolverOptions,
) -> Result<PotentialField> {
    EllipticSolver::new(*options).solve(domain, psi, lateral, n_sigma)
}

/// `G(ζ, b)ψ = √(1 + ζ'²) ∂_nφ` on the surface.
pub fn dno(
    domain: &FluidDomainSpec,
    psi: &ScalarField,
    lateral: &Lateral,
    n_sigma: usize,
    options: &SolverOptions,
) -> Result<ScalarField> {
    Ok(solve_potential(domain, psi, lateral, n_sigma, options)?.dno())
}

/// Surface values of `φ`, its gradient and its unit normal derivative, from
/// one-sided σ-differences at the surface.
pub fn surface_traces(phi: &PotentialField) -> SurfaceTraces {
    let grid = *phi.grid();
    let n = grid.n_nodes();
    let top = phi.n_sigma() - 1;
    let zp = phi.surface_slope();
    let mut v = vec![0.0; n];
    let mut gx = vec![0.0; n];
    let mut gy = vec![0.0; n];
    let mut dn = vec![0.0; n];
    for i in 0..n {
        let d = phi.node(i, top);
        v[i] = d.phi;
        gx[i] = d.dx;
        gy[i] = d.dy;
        dn[i] = (d.dy - zp[i] * d.dx) / (1.0 + zp[i] * zp[i]).sqrt();
    }
    let mk = |values| ScalarField::new(grid, values).expect("finite traces");
    SurfaceTraces {
        phi_on_surface: mk(v),
        grad_x_on_surface: mk(gx),
        dy_on_surface: mk(gy),
        normal_derivative: mk(dn),
    }
}

/// Surface gradient of `φ` rebuilt from the measurable quantities ψ, ζ and the
/// unit normal derivative.
pub fn traces_from_measurements(
    psi: &ScalarField,
    zeta: &ScalarField,
    normal_deriv: &ScalarField,
) -> Result<(ScalarField, ScalarField)> {
    psi.check_grid(zeta)?;
    psi.check_grid(normal_deriv)?;
    let zp = zeta.derivative();
    let pp = psi.derivative();
    let n = psi.len();
    let mut dy = vec![0.0; n];
    let mut gx = vec![0.0; n];
    for i in 0..n {
        let z = zp.get(i);
        let c2 = 1.0 + z * z;
        dy[i] = (c2.sqrt() * normal_deriv.get(i) + z * pp.get(i)) / c2;
        gx[i] = pp.get(i) - dy[i] * z;
    }
    Ok((ScalarField::new(*psi.grid(), dy)?, ScalarField::new(*psi.grid(), gx)?))
}

#[cfg(test)]
mod tests;
