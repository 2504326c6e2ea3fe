//! Solved potentials: derivatives, interpolation and quadrature.

use std::io::Write;

use serde::Serialize;

use super::linear::SolveStats;
use super::stencil::Layout;
use super::{dno_rows, geometry_f64, SigmaMap};
use crate::error::{Error, Result};
use crate::grid::{derivative, fmt_f64, periodic_derivative, Grid1D, ScalarField};

/// Potential and its physical derivatives up to second order at one point.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct NodeDerivs {
    pub phi: f64,
    pub dx: f64,
    pub dy: f64,
    pub dxx: f64,
    pub dxy: f64,
    pub dyy: f64,
}

impl NodeDerivs {
    pub fn grad_sq(&self) -> f64 {
        self.dx * self.dx + self.dy * self.dy
    }

    /// Integrand of the squared H² norm.
    pub fn h2_sq(&self) -> f64 {
        self.phi * self.phi
            + self.grad_sq()
            + self.dxx * self.dxx
            + 2.0 * self.dxy * self.dxy
            + self.dyy * self.dyy
    }

    pub fn sub(&self, o: &NodeDerivs) -> NodeDerivs {
        NodeDerivs {
            phi: self.phi - o.phi,
            dx: self.dx - o.dx,
            dy: self.dy - o.dy,
            dxx: self.dxx - o.dxx,
            dxy: self.dxy - o.dxy,
            dyy: self.dyy - o.dyy,
        }
    }

    fn lerp(a: &NodeDerivs, b: &NodeDerivs, t: f64) -> NodeDerivs {
        let f = |u: f64, v: f64| u + t * (v - u);
        NodeDerivs {
            phi: f(a.phi, b.phi),
            dx: f(a.dx, b.dx),
            dy: f(a.dy, b.dy),
            dxx: f(a.dxx, b.dxx),
            dxy: f(a.dxy, b.dxy),
            dyy: f(a.dyy, b.dyy),
        }
    }
}

/// Energy accounting of a solved potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GreenReport {
    /// `∫_Ω |∇φ|²`.
    pub energy: f64,
    /// `∫ ψ Gψ dX`.
    pub surface_term: f64,
    /// `∫ φ ∂_nφ` over the walls.
    pub wall_term: f64,
    /// `∫_{∂Ω} ∂_nφ`.
    pub flux_balance: f64,
    /// `∫_{∂Ω} |∂_nφ|`.
    pub flux_scale: f64,
}

impl GreenReport {
    pub fn green_defect(&self) -> f64 {
        self.energy - self.surface_term - self.wall_term
    }
}

/// Discrete velocity potential on the terrain-following grid.
#[derive(Debug, Clone)]
pub struct PotentialField {
    map: SigmaMap,
    periodic: bool,
    values: Vec<f64>,
    derivs: Vec<NodeDerivs>,
    dno: Vec<f64>,
    slope_b: Vec<f64>,
    slope_zeta: Vec<f64>,
    stats: SolveStats,
}

impl PotentialField {
    pub(crate) fn from_unknowns(map: SigmaMap, layout: Layout, unknowns: &[f64], stats: SolveStats) -> Self {
        let nx = layout.nx;
        let ns = layout.ns;
        let mut values = vec![0.0; nx * ns];
        for i in 0..nx {
            let c = layout.column_of_node(i);
            for j in 0..ns {
                values[i * ns + j] = unknowns[layout.idx(c, j)];
            }
        }
        let geom = geometry_f64(map.domain(), layout);
        let rows = dno_rows(&geom);
        let dno = rows.iter().map(|r| r.iter().map(|&(k, v)| v * unknowns[k]).sum()).collect();
        let mut field = Self {
            map,
            periodic: layout.periodic,
            values,
            derivs: Vec::new(),
            dno,
            slope_b: Vec::new(),
            slope_zeta: Vec::new(),
            stats,
        };
        field.slope_b = field.dx_1d(field.map.domain().bottom().values());
        field.slope_zeta = field.dx_1d(field.map.domain().surface().values());
        field.derivs = field.compute_derivs();
        field
    }

    fn dx_1d(&self, v: &[f64]) -> Vec<f64> {
        let h = self.grid().spacing();
        if self.periodic {
            periodic_derivative(v, h)
        } else {
            derivative(v, h)
        }
    }

    fn compute_derivs(&self) -> Vec<NodeDerivs> {
        let nx = self.grid().n_nodes();
        let ns = self.n_sigma();
        let ds = self.map.dsigma();
        let h: Vec<f64> = (0..nx).map(|i| self.depth(i)).collect();
        let slope_h: Vec<f64> = self.slope_zeta.iter().zip(&self.slope_b).map(|(a, b)| a - b).collect();
        let s: Vec<f64> = (0..nx * ns)
            .map(|k| {
                let (i, j) = (k / ns, k % ns);
                -(self.slope_b[i] + j as f64 * ds * slope_h[i]) / h[i]
            })
            .collect();
        let d_x = |a: &[f64]| self.x_diff(a);
        let d_s = |a: &[f64]| sigma_diff(a, nx, ns, ds);
        let phi_x = d_x(&self.values);
        let phi_s = d_s(&self.values);
        let px: Vec<f64> = (0..nx * ns).map(|k| phi_x[k] + s[k] * phi_s[k]).collect();
        let py: Vec<f64> = (0..nx * ns).map(|k| phi_s[k] / h[k / ns]).collect();
        let (px_x, px_s) = (d_x(&px), d_s(&px));
        let (py_x, py_s) = (d_x(&py), d_s(&py));
        (0..nx * ns)
            .map(|k| {
                let hk = h[k / ns];
                NodeDerivs {
                    phi: self.values[k],
                    dx: px[k],
                    dy: py[k],
                    dxx: px_x[k] + s[k] * px_s[k],
                    dxy: 0.5 * (px_s[k] / hk + py_x[k] + s[k] * py_s[k]),
                    dyy: py_s[k] / hk,
                }
            })
            .collect()
    }

    /// Second-order X-difference at fixed σ-level.
    fn x_diff(&self, a: &[f64]) -> Vec<f64> {
        let nx = self.grid().n_nodes();
        let ns = self.n_sigma();
        let dx = self.grid().spacing();
        let mut out = vec![0.0; nx * ns];
        let mut col = vec![0.0; nx];
        for j in 0..ns {
            for i in 0..nx {
                col[i] = a[i * ns + j];
            }
            let d = if self.periodic { periodic_derivative(&col, dx) } else { derivative(&col, dx) };
            for i in 0..nx {
                out[i * ns + j] = d[i];
            }
        }
        out
    }

    pub fn sigma_map(&self) -> &SigmaMap {
        &self.map
    }

    pub fn grid(&self) -> &Grid1D {
        self.map.domain().grid()
    }

    pub fn n_sigma(&self) -> usize {
        self.map.n_sigma()
    }

    pub fn is_periodic(&self) -> bool {
        self.periodic
    }

    /// Larger of the horizontal spacing and the deepest vertical spacing.
    pub fn mesh_size(&self) -> f64 {
        self.grid().spacing().max(self.map.dsigma() * self.map.domain().max_depth())
    }

    pub fn stats(&self) -> SolveStats {
        self.stats
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_sigma() + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn node(&self, i: usize, j: usize) -> NodeDerivs {
        self.derivs[i * self.n_sigma() + j]
    }

    pub fn bottom(&self, i: usize) -> f64 {
        self.map.domain().bottom().get(i)
    }

    pub fn surface(&self, i: usize) -> f64 {
        self.map.domain().surface().get(i)
    }

    pub fn depth(&self, i: usize) -> f64 {
        self.map.domain().depth(i)
    }

    pub fn surface_slope(&self) -> &[f64] {
        &self.slope_zeta
    }

    pub fn bottom_slope(&self) -> &[f64] {
        &self.slope_b
    }

    /// Conservative surface flux `G(ζ, b)ψ` at every node.
    pub fn dno(&self) -> ScalarField {
        ScalarField::new(*self.grid(), self.dno.clone()).expect("finite flux")
    }

    /// Potential values along the two walls.
    pub fn wall_trace(&self) -> super::LateralTrace {
        let ns = self.n_sigma();
        let n = self.grid().n_nodes();
        super::LateralTrace {
            left: (0..ns).map(|j| self.value(0, j)).collect(),
            right: (0..ns).map(|j| self.value(n - 1, j)).collect(),
        }
    }

    /// Potential values along the σ-levels of the column at node `i`.
    pub fn column(&self, i: usize) -> Vec<f64> {
        (0..self.n_sigma()).map(|j| self.value(i, j)).collect()
    }

    fn sigma_at(&self, i: usize, y: f64) -> f64 {
        (y - self.bottom(i)) / self.depth(i)
    }

    /// Values at height `y` over node `i`, linear in σ.
    pub fn sample_column(&self, i: usize, y: f64) -> Result<NodeDerivs> {
        let sigma = self.sigma_at(i, y);
        if !(-1e-9..=1.0 + 1e-9).contains(&sigma) {
            return Err(Error::CurveOutsideDomain { x: self.grid().x(i), sigma });
        }
        Ok(self.at_sigma(i, sigma.clamp(0.0, 1.0)))
    }

    fn at_sigma(&self, i: usize, sigma: f64) -> NodeDerivs {
        let ns = self.n_sigma();
        let pos = sigma / self.map.dsigma();
        let j = (pos.floor() as usize).min(ns - 2);
        let t = pos - j as f64;
        NodeDerivs::lerp(&self.node(i, j), &self.node(i, j + 1), t)
    }

    /// Values at an arbitrary point, bilinear in (X, σ).
    pub fn sample_point(&self, x: f64, y: f64) -> Result<NodeDerivs> {
        let grid = self.grid();
        let pos = (x - grid.a1()) / grid.spacing();
        let n = grid.n_nodes();
        if pos < -1e-9 || pos > (n - 1) as f64 + 1e-9 {
            return Err(Error::RegionOutsideDomain { x });
        }
        let i = (pos.floor().max(0.0) as usize).min(n - 2);
        let tx = (pos - i as f64).clamp(0.0, 1.0);
        let b = self.bottom(i) + tx * (self.bottom(i + 1) - self.bottom(i));
        let z = self.surface(i) + tx * (self.surface(i + 1) - self.surface(i));
        let sigma = (y - b) / (z - b);
        if !(-1e-9..=1.0 + 1e-9).contains(&sigma) {
            return Err(Error::RegionOutsideDomain { x });
        }
        let sigma = sigma.clamp(0.0, 1.0);
        let left = self.at_sigma(i, sigma);
        let right = self.at_sigma(i + 1, sigma);
        Ok(NodeDerivs::lerp(&left, &right, tx))
    }

    /// `∫_{y_lo}^{y_hi} f dy` over node `i`, integrating the piecewise-linear
    /// σ-interpolant of `f` exactly.
    pub fn column_integral(&self, i: usize, y_lo: f64, y_hi: f64, f: impl Fn(&NodeDerivs) -> f64) -> Result<f64> {
        if y_hi <= y_lo {
            return Ok(0.0);
        }
        let h = self.depth(i);
        let s_lo = self.sigma_at(i, y_lo);
        let s_hi = self.sigma_at(i, y_hi);
        let tol = 1e-9;
        if s_lo < -tol || s_hi > 1.0 + tol {
            return Err(Error::RegionOutsideDomain { x: self.grid().x(i) });
        }
        let (s_lo, s_hi) = (s_lo.clamp(0.0, 1.0), s_hi.clamp(0.0, 1.0));
        let ds = self.map.dsigma();
        let ns = self.n_sigma();
        let fv: Vec<f64> = (0..ns).map(|j| f(&self.node(i, j))).collect();
        let interp = |s: f64| {
            let pos = s / ds;
            let j = (pos.floor() as usize).min(ns - 2);
            let t = pos - j as f64;
            fv[j] + t * (fv[j + 1] - fv[j])
        };
        let mut total = 0.0;
        let j0 = ((s_lo / ds).floor() as usize).min(ns - 2);
        let j1 = ((s_hi / ds).ceil() as usize).clamp(j0 + 1, ns - 1);
        for j in j0..j1 {
            let a = (j as f64 * ds).max(s_lo);
            let b = ((j + 1) as f64 * ds).min(s_hi);
            if b > a {
                total += 0.5 * (b - a) * (interp(a) + interp(b));
            }
        }
        Ok(total * h)
    }

    /// `∫∫ f` over `{lower(X) < y < upper(X)}`, trapezoid in X.
    pub fn region_integral(&self, lower: &[f64], upper: &[f64], f: impl Fn(&NodeDerivs) -> f64 + Copy) -> Result<f64> {
        let w = self.grid().trapezoid_weights();
        let mut total = 0.0;
        for i in 0..w.len() {
            total += w[i] * self.column_integral(i, lower[i], upper[i], f)?;
        }
        Ok(total)
    }

    /// `∫ |∇φ|²` over the region between two node-wise bounds.
    pub fn energy(&self, lower: &[f64], upper: &[f64]) -> Result<f64> {
        self.region_integral(lower, upper, |d| d.grad_sq())
    }

    pub fn total_energy(&self) -> f64 {
        let (b, z) = (self.map.domain().bottom().values(), self.map.domain().surface().values());
        self.energy(b, z).expect("whole domain")
    }

    /// Squared discrete H² norm over the region between two bounds.
    pub fn h2_norm_sq(&self, lower: &[f64], upper: &[f64]) -> Result<f64> {
        self.region_integral(lower, upper, |d| d.h2_sq())
    }

    pub fn h2_norm(&self) -> f64 {
        let (b, z) = (self.map.domain().bottom().values(), self.map.domain().surface().values());
        self.h2_norm_sq(b, z).expect("whole domain").sqrt()
    }

    /// Green's first identity and global flux balance, term by term.
    pub fn green_report(&self) -> GreenReport {
        let grid = self.grid();
        let w = grid.trapezoid_weights();
        let n = grid.n_nodes();
        let top = self.n_sigma() - 1;
        let mut surface_term = 0.0;
        let mut flux = 0.0;
        let mut scale = 0.0;
        for i in 0..n {
            surface_term += w[i] * self.value(i, top) * self.dno[i];
            flux += w[i] * self.dno[i];
            scale += w[i] * self.dno[i].abs();
        }
        let mut wall_term = 0.0;
        if !self.periodic {
            for (i, sign) in [(0, -1.0), (n - 1, 1.0)] {
                let (lo, hi) = (self.bottom(i), self.surface(i));
                wall_term += self.column_integral(i, lo, hi, |d| sign * d.phi * d.dx).expect("wall");
                flux += self.column_integral(i, lo, hi, |d| sign * d.dx).expect("wall");
                scale += self.column_integral(i, lo, hi, |d| d.dx.abs()).expect("wall");
            }
        }
        GreenReport { energy: self.total_energy(), surface_term, wall_term, flux_balance: flux, flux_scale: scale }
    }

    /// Restriction of a solution to nodes `i1..=i2` (no new solve).
    pub fn restrict(&self, i1: usize, i2: usize) -> Result<PotentialField> {
        let domain = self.map.domain().slice(i1, i2)?;
        let map = SigmaMap::new(domain, self.n_sigma())?;
        let ns = self.n_sigma();
        let nx = i2 - i1 + 1;
        let layout = Layout { nx, ns, periodic: false };
        let unknowns: Vec<f64> = self.values[i1 * ns..(i2 + 1) * ns].to_vec();
        Ok(PotentialField::from_unknowns(map, layout, &unknowns, self.stats))
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["x", "sigma", "y", "phi"])?;
        let grid = self.grid();
        for i in 0..grid.n_nodes() {
            for j in 0..self.n_sigma() {
                let s = self.map.sigma(j);
                out.write_record([
                    fmt_f64(grid.x(i)),
                    fmt_f64(s),
                    fmt_f64(self.map.y(i, s)),
                    fmt_f64(self.value(i, j)),
                ])?;
            }
        }
        out.flush()?;
        Ok(())
    }

    pub fn diagnostics_json(&self) -> serde_json::Value {
        serde_json::json!({
            "residual": self.stats.residual,
            "iterations": self.stats.iterations,
            "grid": { "n_nodes": self.grid().n_nodes(), "n_sigma": self.n_sigma() },
        })
    }
}

fn sigma_diff(a: &[f64], nx: usize, ns: usize, ds: f64) -> Vec<f64> {
    let mut out = vec![0.0; nx * ns];
    for i in 0..nx {
        let d = derivative(&a[i * ns..(i + 1) * ns], ds);
        out[i * ns..(i + 1) * ns].copy_from_slice(&d);
    }
    out
}
