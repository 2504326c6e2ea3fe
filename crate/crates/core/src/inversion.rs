//! Bottom reconstruction from one surface snapshot: least-squares fit of the
//! kinematic relation `∂_tζ = G(ζ, b)ψ` over the window, with adjoint gradients
//! and a projected limited-memory quasi-Newton descent.

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::elliptic::scalar::{Dual, Real};
use crate::elliptic::stencil::{Geometry, Layout};
use crate::elliptic::{assemble, dno_rows, factor, geometry_f64, solve_direct, Factored, Lateral, LateralTrace, SolverOptions};
use crate::error::{Error, Result};
use crate::geometry::{build_domain, l1_distance};
use crate::grid::ScalarField;
use crate::waves::MeasurementTuple;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InversionOptions {
    /// Weight of `½‖b'‖²`.
    pub alpha_reg: f64,
    pub max_iters: usize,
    /// Stop when the projected gradient is below this in max norm.
    pub grad_tol: f64,
    /// Length of the first trial step along the normalized descent direction.
    pub step_init: f64,
    pub fd_step: f64,
    pub depth_floor: f64,
    /// Curvature pairs kept by the quasi-Newton update.
    pub memory: usize,
}

impl Default for InversionOptions {
    fn default() -> Self {
        Self {
            alpha_reg: 1e-6,
            max_iters: 400,
            grad_tol: 1e-10,
            step_init: 0.05,
            fd_step: 1e-6,
            depth_floor: 0.1,
            memory: 10,
        }
    }
}

impl InversionOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = [("grad_tol", self.grad_tol), ("step_init", self.step_init), ("fd_step", self.fd_step)];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} = {v} must be positive")));
            }
        }
        if !(self.alpha_reg >= 0.0 && self.alpha_reg.is_finite()) {
            return Err(Error::InvalidParameter(format!("alpha_reg = {} must be nonnegative", self.alpha_reg)));
        }
        if !(self.depth_floor > 0.0) {
            return Err(Error::InvalidParameter(format!("depth_floor = {} must be positive", self.depth_floor)));
        }
        if self.memory == 0 {
            return Err(Error::InvalidParameter("memory must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InversionResult {
    pub b_est: ScalarField,
    pub misfit_history: Vec<f64>,
    pub l1_error_vs_truth: Option<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Max norm of the projected gradient at `b_est`.
    pub gradient_norm: f64,
}

impl InversionResult {
    /// Records the distance to a known bottom.
    pub fn with_truth(mut self, truth: &ScalarField) -> Result<Self> {
        self.l1_error_vs_truth = Some(l1_error(&self.b_est, truth)?);
        Ok(self)
    }
}

/// `∫_O |b1 − b2|` by the trapezoid rule.
pub fn l1_error(b1: &ScalarField, b2: &ScalarField) -> Result<f64> {
    l1_distance(b1, b2)
}

/// Fixed data of the fit.
struct Problem<'a> {
    m: &'a MeasurementTuple,
    lateral: Lateral,
    layout: Layout,
    weights: Vec<f64>,
    opts: InversionOptions,
}

struct Evaluation {
    value: f64,
    unknowns: Vec<f64>,
    residual: Vec<f64>,
    factored: Factored,
}

impl<'a> Problem<'a> {
    fn new(m: &'a MeasurementTuple, theta: &LateralTrace, opts: &InversionOptions) -> Result<Self> {
        opts.validate()?;
        m.zeta.check_grid(&m.psi)?;
        m.zeta.check_grid(&m.dt_zeta)?;
        let lateral = Lateral::Walls(theta.clone());
        let nx = m.grid().n_nodes();
        if nx < 4 {
            return Err(Error::InvalidGrid("inversion needs at least 4 nodes".into()));
        }
        if theta.n_sigma() < 3 {
            return Err(Error::InvalidParameter(format!("n_sigma = {} must be at least 3", theta.n_sigma())));
        }
        let layout = Layout { nx, ns: theta.n_sigma(), periodic: false };
        // The wall-node flux uses one-sided stencils that the data do not share;
        // the fit runs over the interior nodes.
        let mut weights = m.grid().trapezoid_weights();
        weights[0] = 0.0;
        weights[nx - 1] = 0.0;
        Ok(Self { m, lateral, layout, weights, opts: *opts })
    }

    fn n(&self) -> usize {
        self.layout.nx
    }

    fn dx(&self) -> f64 {
        self.m.grid().spacing()
    }

    fn regularization(&self, b: &[f64]) -> f64 {
        let dx = self.dx();
        0.5 * self.opts.alpha_reg * b.windows(2).map(|w| (w[1] - w[0]).powi(2) / dx).sum::<f64>()
    }

    fn evaluate(&self, b: &[f64]) -> Result<Evaluation> {
        let bottom = ScalarField::new(*self.m.grid(), b.to_vec())?;
        let domain = build_domain(bottom, self.m.zeta.clone(), self.opts.depth_floor)?;
        let geom = geometry_f64(&domain, self.layout);
        let sys = assemble(&geom, self.m.psi.values(), &self.lateral);
        let factored = factor(&sys, None)?;
        let (unknowns, _) = solve_direct(&sys, &factored, SolverOptions::default().rel_tol)?;
        let rows = dno_rows(&geom);
        let residual: Vec<f64> = rows
            .iter()
            .zip(self.m.dt_zeta.values())
            .map(|(r, d)| r.iter().map(|&(k, v)| v * unknowns[k]).sum::<f64>() - d)
            .collect();
        let fit: f64 = residual.iter().zip(&self.weights).map(|(r, w)| 0.5 * w * r * r).sum();
        Ok(Evaluation { value: fit + self.regularization(b), unknowns, residual, factored })
    }

    /// Adjoint gradient; the two end nodes get zero.
    fn gradient(&self, b: &[f64], ev: &Evaluation) -> Vec<f64> {
        let l = self.layout;
        let n = self.n();
        let zeta: Vec<Dual> = self.m.zeta.values().iter().map(|&z| Dual::from(z)).collect();
        let geom = Geometry::new(l, self.dx(), &b.iter().map(|&v| Dual::from(v)).collect::<Vec<_>>(), &zeta);
        // Aᵀλ = Σ_i w_i r_i R_i.
        let mut src = vec![0.0; l.n_unknowns()];
        for (i, row) in dno_rows(&geom).iter().enumerate() {
            let s = self.weights[i] * ev.residual[i];
            for &(k, v) in row {
                src[k] += s * v.value();
            }
        }
        let lambda = ev.factored.solve_transpose(&src);
        let u = &ev.unknowns;
        let dx = self.dx();
        let alpha = self.opts.alpha_reg;
        let mut grad: Vec<f64> = (1..n - 1)
            .into_par_iter()
            .map(|k| {
                let mut seeded: Vec<Dual> = b.iter().map(|&v| Dual::from(v)).collect();
                seeded[k] = Dual::new(b[k], 1.0);
                let g = Geometry::new(l, dx, &seeded, &zeta);
                let mut row = Vec::new();
                let mut total = 0.0;
                let (lo, hi) = (k.saturating_sub(4), (k + 4).min(n - 1));
                for c in lo..=hi {
                    g.dno_row(c, &mut row);
                    let dr: f64 = row.iter().map(|&(q, v)| v.d * u[q]).sum();
                    total += self.weights[c] * ev.residual[c] * dr;
                    if l.is_wall(c) {
                        continue;
                    }
                    for j in 0..l.ns - 1 {
                        g.balance_row(c, j, &mut row);
                        let da: f64 = row.iter().map(|&(q, v)| v.d * u[q]).sum();
                        total -= lambda[l.idx(c, j)] * da;
                    }
                }
                total + alpha * (2.0 * b[k] - b[k - 1] - b[k + 1]) / dx
            })
            .collect();
        grad.insert(0, 0.0);
        grad.push(0.0);
        grad
    }

    fn ceiling(&self, i: usize) -> f64 {
        self.m.zeta.get(i) - self.opts.depth_floor
    }

    /// Clamps below the depth ceiling and re-pins the end nodes.
    fn project(&self, b: &mut [f64]) {
        let n = self.n();
        for (i, v) in b.iter_mut().enumerate() {
            *v = v.min(self.ceiling(i));
        }
        b[0] = self.m.b_left;
        b[n - 1] = self.m.b_right;
    }

    /// Gradient with pinned nodes and blocked bound directions removed.
    fn projected_gradient(&self, b: &[f64], g: &[f64]) -> Vec<f64> {
        let scale = self.m.zeta.max_abs().max(1.0);
        (0..b.len())
            .map(|i| if g[i] < 0.0 && b[i] >= self.ceiling(i) - 1e-14 * scale { 0.0 } else { g[i] })
            .collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn check_candidate(b: &ScalarField, m: &MeasurementTuple) -> Result<()> {
    b.check_grid(&m.zeta)
}

/// `½‖G(ζ, b)ψ − ∂_tζ‖² + (α/2)‖b'‖²` over the window.
pub fn misfit(b: &ScalarField, m: &MeasurementTuple, theta: &LateralTrace, opts: &InversionOptions) -> Result<f64> {
    check_candidate(b, m)?;
    Ok(Problem::new(m, theta, opts)?.evaluate(b.values())?.value)
}

/// Adjoint gradient of [`misfit`] with respect to the node values of `b`; zero at the end nodes.
pub fn gradient(
    b: &ScalarField,
    m: &MeasurementTuple,
    theta: &LateralTrace,
    opts: &InversionOptions,
) -> Result<ScalarField> {
    check_candidate(b, m)?;
    let p = Problem::new(m, theta, opts)?;
    let ev = p.evaluate(b.values())?;
    ScalarField::new(*b.grid(), p.gradient(b.values(), &ev))
}

/// Central finite differences of [`misfit`] at the interior nodes, with step `fd_step`.
pub fn finite_difference_gradient(
    b: &ScalarField,
    m: &MeasurementTuple,
    theta: &LateralTrace,
    opts: &InversionOptions,
) -> Result<ScalarField> {
    check_candidate(b, m)?;
    let p = Problem::new(m, theta, opts)?;
    let n = p.n();
    let h = opts.fd_step;
    let mut g = (1..n - 1)
        .into_par_iter()
        .map(|k| {
            let mut v = b.values().to_vec();
            v[k] += h;
            let up = p.evaluate(&v)?.value;
            v[k] -= 2.0 * h;
            let down = p.evaluate(&v)?.value;
            Ok((up - down) / (2.0 * h))
        })
        .collect::<Result<Vec<f64>>>()?;
    g.insert(0, 0.0);
    g.push(0.0);
    ScalarField::new(*b.grid(), g)
}

/// Projected limited-memory quasi-Newton descent from `b_init`.
pub fn invert(
    m: &MeasurementTuple,
    theta: &LateralTrace,
    b_init: &ScalarField,
    opts: &InversionOptions,
) -> Result<InversionResult> {
    check_candidate(b_init, m)?;
    let p = Problem::new(m, theta, opts)?;
    let n = p.n();
    for i in 0..n {
        if b_init.get(i) > p.ceiling(i) {
            return Err(Error::InfeasibleInit(format!(
                "depth {} at x = {} is below the floor {}",
                m.zeta.get(i) - b_init.get(i),
                m.grid().x(i),
                opts.depth_floor
            )));
        }
    }
    let mut b = b_init.values().to_vec();
    p.project(&mut b);
    let mut ev = p.evaluate(&b)?;
    let mut g = p.gradient(&b, &ev);
    let mut history = vec![ev.value];
    let mut pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut iterations = 0;
    let result = |b: &[f64], history: &[f64], converged: bool, iterations: usize, gnorm: f64| -> Result<InversionResult> {
        Ok(InversionResult {
            b_est: ScalarField::new(*m.grid(), b.to_vec())?,
            misfit_history: history.to_vec(),
            l1_error_vs_truth: None,
            converged,
            iterations,
            gradient_norm: gnorm,
        })
    };
    loop {
        let pg = p.projected_gradient(&b, &g);
        let gnorm = max_abs(&pg);
        if gnorm <= opts.grad_tol {
            return result(&b, &history, true, iterations, gnorm);
        }
        if iterations >= opts.max_iters {
            return result(&b, &history, false, iterations, gnorm);
        }
        let mut dir = two_loop(&pg, &pairs, p.dx());
        for i in 0..n {
            if pg[i] == 0.0 {
                dir[i] = 0.0;
            }
        }
        if dot(&dir, &pg) >= 0.0 {
            pairs.clear();
            dir = two_loop(&pg, &pairs, p.dx());
        }
        let mut accepted = None;
        for attempt in 0..2 {
            let mut t = if pairs.is_empty() { opts.step_init / max_abs(&dir) } else { 1.0 };
            for _ in 0..50 {
                let mut trial: Vec<f64> = b.iter().zip(&dir).map(|(x, d)| x + t * d).collect();
                p.project(&mut trial);
                let step: Vec<f64> = trial.iter().zip(&b).map(|(x, y)| x - y).collect();
                let decrease = dot(&g, &step);
                if decrease < 0.0 {
                    if let Ok(tev) = p.evaluate(&trial) {
                        if tev.value <= ev.value + 1e-4 * decrease {
                            accepted = Some((trial, tev));
                            break;
                        }
                    }
                }
                t *= 0.5;
            }
            if accepted.is_some() || attempt == 1 || pairs.is_empty() {
                break;
            }
            pairs.clear();
            dir = two_loop(&pg, &pairs, p.dx());
        }
        let Some((next, nev)) = accepted else {
            let last = result(&b, &history, false, iterations, gnorm)?;
            return Err(Error::LineSearchFailure { iterations, misfit: ev.value, last: Box::new(last) });
        };
        let ng = p.gradient(&next, &nev);
        let s: Vec<f64> = next.iter().zip(&b).map(|(x, y)| x - y).collect();
        let y: Vec<f64> = ng.iter().zip(&g).map(|(x, y)| x - y).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() {
            pairs.push_back((s, y, 1.0 / sy));
            if pairs.len() > opts.memory {
                pairs.pop_front();
            }
        }
        b = next;
        ev = nev;
        g = ng;
        history.push(ev.value);
        iterations += 1;
    }
}

/// `(I − ∂²)⁻¹v` on the interior nodes with zero end values (tridiagonal solve).
fn smooth(v: &[f64], dx: f64) -> Vec<f64> {
    let n = v.len();
    let mut out = vec![0.0; n];
    if n < 3 {
        return out;
    }
    let off = -1.0 / (dx * dx);
    let diag = 1.0 + 2.0 / (dx * dx);
    let m = n - 2;
    let mut c = vec![0.0; m];
    let mut d = vec![0.0; m];
    for i in 0..m {
        let denom = diag - if i > 0 { off * c[i - 1] } else { 0.0 };
        c[i] = off / denom;
        d[i] = (v[i + 1] - if i > 0 { off * d[i - 1] } else { 0.0 }) / denom;
    }
    for i in (0..m).rev() {
        out[i + 1] = d[i] - if i + 1 < m { c[i] * out[i + 2] } else { 0.0 };
    }
    out
}

/// `−H·g` from the stored curvature pairs; the initial metric is the smoothing
/// operator scaled by the latest `sᵀy / yᵀPy`.
fn two_loop(g: &[f64], pairs: &VecDeque<(Vec<f64>, Vec<f64>, f64)>, dx: f64) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(pairs.len());
    for (s, y, rho) in pairs.iter().rev() {
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    let mut q = smooth(&q, dx);
    if let Some((s, y, _)) = pairs.back() {
        let gamma = dot(s, y) / dot(y, &smooth(y, dx));
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for ((s, y, rho), a) in pairs.iter().zip(alphas.iter().rev()) {
        let beta = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - beta) * si;
        }
    }
    q.iter().map(|v| -v).collect()
}
