//! Boundary integrals of the energy inequality and their measurable bounds.

use serde::Serialize;

use super::quad::{gauss, gauss_points};
use super::{ConfigConstants, PairConfiguration};
use crate::elliptic::NodeDerivs;
use crate::error::{Error, Result};
use crate::geometry::{boundary_counting_measure, zero_threshold};
use crate::grid::{masked_l2, masked_linf, ScalarField};

/// `√(1+s²)·∂_nφ` on a graph of slope `s`.
fn flux(d: &NodeDerivs, slope: f64) -> f64 {
    -slope * d.dx + d.dy
}

/// Both sides of the energy inequality between the two bottoms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Lemma31Sides {
    /// `∫_{Ω_{b0}\Ω_b}|∇φ0|² + ∫_{Ω_b\Ω_{b0}}|∇φ|²` (both under `ζ̲`).
    pub lhs: f64,
    pub rhs: f64,
    /// The two integrals over `Γ^{ζ̲}`.
    pub surface_terms: [f64; 2],
    pub j1: f64,
    pub j2: f64,
    pub j3: f64,
    /// Sum of the absolute values of the seven integrals.
    pub scale: f64,
    pub tol: f64,
}

impl Lemma31Sides {
    pub fn margin(&self) -> f64 {
        self.rhs - self.lhs
    }

    pub fn holds(&self) -> bool {
        self.margin() >= -self.tol
    }
}

pub fn lemma31_sides(pair: &PairConfiguration) -> Result<Lemma31Sides> {
    let (phi, phi0) = (pair.phi(), pair.phi0());
    let grid = *pair.grid();
    let w = grid.trapezoid_weights();
    let s = &pair.surf;
    let mut t1 = 0.0;
    let mut t2 = 0.0;
    for i in 0..grid.n_nodes() {
        let (d, d0, sl) = (&s.phi[i], &s.phi0[i], s.slope[i]);
        t1 += w[i] * flux(d, sl) * (d.phi - d0.phi);
        t2 += w[i] * d0.phi * (flux(d0, sl) - flux(d, sl));
    }

    let panels = 2 * pair.wall_panels();
    let (mut t3, mut t4, mut t5, mut t6) = (0.0, 0.0, 0.0, 0.0);
    for c in pair.walls() {
        t3 += gauss(c.upper_bottom, c.lower_surface, panels, |y| {
            let (d, d0) = (phi.sample_column(c.i, y)?, phi0.sample_column(c.i, y)?);
            Ok(c.sign * d.dx * (d.phi - d0.phi))
        })?;
        t4 += gauss(c.upper_bottom, c.lower_surface, panels, |y| {
            let (d, d0) = (phi.sample_column(c.i, y)?, phi0.sample_column(c.i, y)?);
            Ok(d0.phi * c.sign * (d0.dx - d.dx))
        })?;
        t5 += gauss(c.b, c.upper_bottom, panels, |y| {
            let d = phi.sample_column(c.i, y)?;
            Ok(c.sign * d.dx * d.phi)
        })?;
        t6 += gauss(c.b0, c.upper_bottom, panels, |y| {
            let d0 = phi0.sample_column(c.i, y)?;
            Ok(c.sign * d0.dx * d0.phi)
        })?;
    }

    // On the part of Γ^{b̄} lying on b the flux of φ vanishes; on the part
    // lying on b0 the flux of φ0 does, and is subtracted.
    let (b, b0) = (pair.bottom(), pair.bottom0());
    let tau = zero_threshold(b, b0);
    let slope0 = phi0.bottom_slope();
    let mut t7 = 0.0;
    for i in 0..grid.n_nodes() {
        let gap = b.get(i) - b0.get(i);
        if gap > tau {
            continue;
        }
        let d0 = phi0.node(i, 0);
        let d = if gap.abs() <= tau { phi.node(i, 0) } else { phi.sample_column(i, b0.get(i))? };
        let bf = |d: &NodeDerivs| slope0[i] * d.dx - d.dy;
        t7 += -2.0 * w[i] * (bf(&d) - bf(&d0)) * d0.phi;
    }

    let ub = pair.upper_bottom().values();
    let lhs = phi0.energy(b0.values(), ub)? + phi.energy(b.values(), ub)?;
    let terms = [t1, t2, t3, t4, t5, t6, t7];
    let rhs: f64 = terms.iter().sum();
    let scale: f64 = terms.iter().map(|t| t.abs()).sum();
    let h = pair.mesh_size();
    Ok(Lemma31Sides {
        lhs,
        rhs,
        surface_terms: [t1, t2],
        j1: t3 + t4,
        j2: t5 + t6,
        j3: t7,
        scale,
        tol: 10.0 * h * h * scale,
    })
}

/// Factors of the bottom-gap term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TbotParts {
    /// `‖∂_nφ‖_{L²(Γ_b^{b̄})}`.
    pub normal_norm: f64,
    /// `‖φ‖_{L∞(Γ_b^{ζ̲})}`.
    pub potential_sup: f64,
    pub normal_norm0: f64,
    pub potential_sup0: f64,
    /// `sup_{∂O}(b̄ − b)`.
    pub sup_gap: f64,
    pub value: f64,
}

pub fn tbot_parts(pair: &PairConfiguration) -> Result<TbotParts> {
    let (phi, phi0) = (pair.phi(), pair.phi0());
    let panels = 2 * pair.wall_panels();
    let (mut n1, mut m1, mut n2, mut m2, mut gap) = (0.0, 0.0f64, 0.0, 0.0f64, 0.0f64);
    for c in pair.walls() {
        n1 += gauss(c.b, c.upper_bottom, panels, |y| Ok(phi.sample_column(c.i, y)?.dx.powi(2)))?;
        n2 += gauss(c.b0, c.upper_bottom, panels, |y| Ok(phi0.sample_column(c.i, y)?.dx.powi(2)))?;
        for y in gauss_points(c.b, c.lower_surface, panels) {
            m1 = m1.max(phi.sample_column(c.i, y)?.phi.abs());
        }
        for y in gauss_points(c.b0, c.lower_surface, panels) {
            m2 = m2.max(phi0.sample_column(c.i, y)?.phi.abs());
        }
        gap = gap.max(c.upper_bottom - c.b);
    }
    let (n1, n2) = (n1.sqrt(), n2.sqrt());
    let value = (n1 * m1 + n2 * m2) * (boundary_counting_measure(pair.grid()) * gap).sqrt();
    Ok(TbotParts { normal_norm: n1, potential_sup: m1, normal_norm0: n2, potential_sup0: m2, sup_gap: gap, value })
}

pub fn tbot(pair: &PairConfiguration) -> Result<f64> {
    Ok(tbot_parts(pair)?.value)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TlogMode {
    /// Denominator from the traces on `Γ^{ζ̲}`.
    Prop32,
    /// Denominator `√G4 + √G5` from surface measurements.
    Thm46,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum TlogValue {
    Value(f64),
    NonInformative,
}

/// Log-log term from its factors; `None` when `ratio ≤ e`.
pub fn tlog_formula(big_c: f64, s: f64, normal_factor: f64, boundary_factor: f64, ratio: f64) -> Option<f64> {
    if !(ratio > std::f64::consts::E) {
        return None;
    }
    let ll = ratio.ln().ln();
    Some(big_c * normal_factor * ll.powf(-0.5 * s) + 3.0 * big_c * boundary_factor * ll.powf(-0.5 * s * s))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TlogParts {
    /// `‖φ − φ0‖_{H²(Ω_{b̄}^{ζ̲})}`.
    pub h2_diff: f64,
    pub denominator: f64,
    /// `‖∂_nφ‖_{L²(Γ_{b̄}^{ζ̲})}`.
    pub wall_normal_norm: f64,
    /// `‖φ0‖_{L²(∂Ω_{b̄}^{ζ̲})}`.
    pub boundary_norm: f64,
    pub ratio: f64,
    pub value: Option<f64>,
    pub smallness_ok: bool,
}

/// `‖φ − φ0‖_{H²}` over the common domain, both fields sampled on shared
/// vertical points between `b̄` and `ζ̲`.
pub(crate) fn common_h2_diff(pair: &PairConfiguration) -> Result<f64> {
    let (phi, phi0) = (pair.phi(), pair.phi0());
    let w = pair.grid().trapezoid_weights();
    let m = phi.n_sigma().max(phi0.n_sigma());
    let mut total = 0.0;
    for i in 0..w.len() {
        let (lo, hi) = (pair.upper_bottom().get(i), pair.lower_surface().get(i));
        let dy = (hi - lo) / (m - 1) as f64;
        let mut col = 0.0;
        for k in 0..m {
            let y = if k == m - 1 { hi } else { lo + k as f64 * dy };
            let v = phi.sample_column(i, y)?.sub(&phi0.sample_column(i, y)?).h2_sq();
            col += if k == 0 || k == m - 1 { 0.5 * v } else { v };
        }
        total += w[i] * col * dy;
    }
    Ok(total.sqrt())
}

/// `(‖φ − φ0‖_{L²(Γ^{ζ̲})}, ‖∇(φ − φ0)‖_{L²(Γ^{ζ̲})})`.
pub(crate) fn surface_diff_norms(pair: &PairConfiguration) -> (f64, f64) {
    let w = pair.grid().trapezoid_weights();
    let s = &pair.surf;
    let (mut a, mut g) = (0.0, 0.0);
    for i in 0..w.len() {
        let d = s.phi[i].sub(&s.phi0[i]);
        let ds = (1.0 + s.slope[i] * s.slope[i]).sqrt();
        a += w[i] * d.phi * d.phi * ds;
        g += w[i] * d.grad_sq() * ds;
    }
    (a.sqrt(), g.sqrt())
}

fn boundary_norm0(pair: &PairConfiguration) -> Result<f64> {
    let (phi, phi0) = (pair.phi(), pair.phi0());
    let w = pair.grid().trapezoid_weights();
    let (b, b0) = (pair.bottom(), pair.bottom0());
    let tau = zero_threshold(b, b0);
    let mut total = 0.0;
    for i in 0..w.len() {
        let s = pair.surf.slope[i];
        total += w[i] * pair.surf.phi0[i].phi.powi(2) * (1.0 + s * s).sqrt();
        let (v, sl) = if b0.get(i) >= b.get(i) - tau {
            (phi0.node(i, 0).phi, phi0.bottom_slope()[i])
        } else {
            (phi0.sample_column(i, b.get(i))?.phi, phi.bottom_slope()[i])
        };
        total += w[i] * v * v * (1.0 + sl * sl).sqrt();
    }
    let panels = 2 * pair.wall_panels();
    for c in pair.walls() {
        total += gauss(c.upper_bottom, c.lower_surface, panels, |y| Ok(phi0.sample_column(c.i, y)?.phi.powi(2)))?;
    }
    Ok(total.sqrt())
}

pub fn tlog_parts(pair: &PairConfiguration, constants: &ConfigConstants, mode: TlogMode) -> Result<TlogParts> {
    constants.validate()?;
    let h2_diff = common_h2_diff(pair)?;
    if h2_diff <= 1e-12 * (pair.phi().h2_norm() + pair.phi0().h2_norm()) {
        return Err(Error::IdenticalPair);
    }
    let denominator = match mode {
        TlogMode::Prop32 => {
            let (a, g) = surface_diff_norms(pair);
            a + g
        }
        TlogMode::Thm46 => {
            let gt = g2_to_g5(pair)?;
            gt.g4.sqrt() + gt.g5.sqrt()
        }
    };
    let phi = pair.phi();
    let panels = 2 * pair.wall_panels();
    let mut a = 0.0;
    for c in pair.walls() {
        a += gauss(c.upper_bottom, c.lower_surface, panels, |y| Ok(phi.sample_column(c.i, y)?.dx.powi(2)))?;
    }
    let wall_normal_norm = a.sqrt();
    let boundary_norm = boundary_norm0(pair)?;
    let ratio = if denominator > 0.0 { h2_diff / denominator } else { f64::INFINITY };
    let value = tlog_formula(constants.big_c, constants.s, wall_normal_norm * h2_diff, boundary_norm * h2_diff, ratio);
    let smallness_ok = denominator <= h2_diff / (2.0 * constants.small_c);
    Ok(TlogParts { h2_diff, denominator, wall_normal_norm, boundary_norm, ratio, value, smallness_ok })
}

pub fn tlog(pair: &PairConfiguration, constants: &ConfigConstants, mode: TlogMode) -> Result<TlogValue> {
    let p = tlog_parts(pair, constants, mode)?;
    match p.value {
        None => Ok(TlogValue::NonInformative),
        Some(_) if !p.smallness_ok => {
            Err(Error::SmallnessViolated { lhs: p.denominator, rhs: p.h2_diff / (2.0 * constants.small_c) })
        }
        Some(v) => Ok(TlogValue::Value(v)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct G1Terms {
    pub g1: f64,
    pub ghat1: f64,
    pub gtilde1: f64,
    pub z3: ScalarField,
    pub z3_norm: f64,
}

pub fn g1(pair: &PairConfiguration) -> Result<G1Terms> {
    let grid = *pair.grid();
    let (m, m0) = (&pair.meas, &pair.meas0);
    let dpsi = m.psi.derivative().sub(&m0.psi.derivative())?;
    let dnormal = m.normal.sub(&m0.normal)?;
    let dslope = m.slope.iter().zip(&m0.slope).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let psi0_x = m0.psi.derivative();
    let z3 = ScalarField::new(
        grid,
        (0..grid.n_nodes())
            .map(|i| m0.normal.get(i).abs() + psi0_x.get(i).abs() + (1.0 + m0.slope[i].abs()) * m0.dy.get(i).abs())
            .collect(),
    )?;
    let (p2, n2, z3n) = (dpsi.l2_norm().powi(2), dnormal.l2_norm().powi(2), z3.l2_norm());
    let ghat1 = 3.0 * p2 + 3.0 * n2 + 3.0 * z3n * z3n * dslope * dslope;
    let slope0_inf = masked_linf(&m0.slope, None);
    let gtilde1 = 3.0 * p2 + 3.0 * slope0_inf * slope0_inf * ghat1 + 3.0 * m.dy.l2_norm().powi(2) * dslope * dslope;
    Ok(G1Terms { g1: ghat1.max(gtilde1), ghat1, gtilde1, z3, z3_norm: z3n })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZCoefficients {
    /// `‖z4‖_{L²(S1)}`.
    pub z4_norm: f64,
    /// `‖z5‖_{L²(O)}`.
    pub z5_norm: f64,
    pub z6: f64,
    pub z7: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GTerms {
    pub g1: f64,
    pub g2: f64,
    pub g3: f64,
    pub g4: f64,
    pub g5: f64,
    pub z: ZCoefficients,
}

pub fn g2_to_g5(pair: &PairConfiguration) -> Result<GTerms> {
    let grid = *pair.grid();
    let n = grid.n_nodes();
    let (m, m0) = (&pair.meas, &pair.meas0);
    let s = &pair.surf;
    let s1 = &pair.split().s1_mask;
    let s2 = &pair.split().s2_mask;
    let l2 = |v: &[f64], mask: Option<&[bool]>| masked_l2(&grid, v, mask);
    let delta = pair.surface_gap();
    let sd = delta.sqrt();
    let (hn, hn0) = (pair.phi().h2_norm(), pair.phi0().h2_norm());

    let z4: Vec<f64> = (0..n).map(|i| if s1[i] { flux(&s.phi[i], m0.slope[i]) } else { 0.0 }).collect();
    let z5 = pair.phi().dno();
    let (z4n, z5n) = (l2(&z4, Some(s1)), z5.l2_norm());
    let dpsi = m.psi.sub(&m0.psi)?.l2_norm();
    let g2 = (z4n * hn + z5n * hn0) * sd + (z4n + z5n) * dpsi;

    let stretch = |sl: &[f64]| sl.iter().map(|v| (1.0 + v * v).sqrt()).fold(0.0, f64::max);
    let z7 = stretch(&m.slope).max(stretch(&m0.slope));
    let psi0 = m0.psi.values();
    let phi0_on_zeta: Vec<f64> = s.phi0.iter().map(|d| d.phi).collect();
    let psi0_n = l2(psi0, None);
    let phi0z_n = l2(&phi0_on_zeta, Some(s2));
    let psi0_slope: Vec<f64> = (0..n).map(|i| psi0[i] * m0.slope[i]).collect();
    let phi0z_slope: Vec<f64> = (0..n).map(|i| phi0_on_zeta[i] * m0.slope[i]).collect();
    let dnormal = m.normal.sub(&m0.normal)?.l2_norm();
    let gx0_on_zeta: Vec<f64> = s.phi0.iter().map(|d| d.dx).collect();
    let cross_normal: Vec<f64> = (0..n).map(|i| z4[i] / (1.0 + m0.slope[i] * m0.slope[i]).sqrt()).collect();
    let z6 = phi0z_n * (l2(&gx0_on_zeta, Some(s2)) + m0.normal.l2_norm())
        + psi0_n * (m.gx.l2_norm() + l2(&cross_normal, Some(s1)));
    let dslope = m.slope.iter().zip(&m0.slope).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let g3 = z7 * (psi0_n + phi0z_n) * dnormal
        + z7 * ((psi0_n + l2(&psi0_slope, None)) * hn + (phi0z_n + l2(&phi0z_slope, Some(s2))) * hn0) * sd
        + z7 * z6 * dslope;

    let g1v = g1(pair)?.g1;
    let g4 = z7 * (4.0 * dpsi * dpsi + 2.0 * (hn * hn + hn0 * hn0) * delta);
    let g5 = 4.0 * z7 * (hn * hn + hn0 * hn0) * delta + 8.0 * z7 * g1v;
    Ok(GTerms { g1: g1v, g2, g3, g4, g5, z: ZCoefficients { z4_norm: z4n, z5_norm: z5n, z6, z7 } })
}

/// Trace differences between `ζ` and `ζ0` over S1 against `‖ζ−ζ0‖_∞^{1/2}‖φ‖_{H²}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Lemma41Margins {
    /// Potential, horizontal and vertical derivative.
    pub lhs: [f64; 3],
    pub rhs: f64,
    pub margins: [f64; 3],
}

pub fn lemma41_check(pair: &PairConfiguration) -> Lemma41Margins {
    let grid = *pair.grid();
    let s = &pair.surf;
    let s1 = &pair.split().s1_mask;
    let n = grid.n_nodes();
    let diff = |f: &dyn Fn(&NodeDerivs) -> f64| -> f64 {
        let v: Vec<f64> = (0..n).map(|i| f(&s.phi_own[i]) - f(&s.phi[i])).collect();
        masked_l2(&grid, &v, Some(s1))
    };
    let lhs = [diff(&|d| d.phi), diff(&|d| d.dx), diff(&|d| d.dy)];
    let rhs = pair.surface_gap().sqrt() * pair.phi().h2_norm();
    Lemma41Margins { lhs, rhs, margins: lhs.map(|l| rhs - l) }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub tol: f64,
}

impl InequalityCheck {
    fn new(name: &str, lhs: f64, rhs: f64, h: f64) -> Self {
        Self { name: name.into(), lhs, rhs, tol: 10.0 * h * h * (lhs.abs() + rhs.abs()) }
    }

    pub fn margin(&self) -> f64 {
        self.rhs - self.lhs
    }

    pub fn holds(&self) -> bool {
        self.margin() >= -self.tol
    }
}

/// The three trace-difference bounds over S1, the two surface-gradient bounds
/// and the four bounds of the `Γ^{ζ̲}` terms by measured quantities.
pub fn inequality_checks(pair: &PairConfiguration) -> Result<Vec<InequalityCheck>> {
    let h = pair.mesh_size();
    let grid = *pair.grid();
    let n = grid.n_nodes();
    let l41 = lemma41_check(pair);
    let gt = g2_to_g5(pair)?;
    let s = &pair.surf;
    let own_diff = |f: &dyn Fn(&NodeDerivs) -> f64| -> f64 {
        let v: Vec<f64> = (0..n).map(|i| f(&s.phi_own[i]) - f(&s.phi0_own[i])).collect();
        masked_l2(&grid, &v, None)
    };
    let l31 = lemma31_sides(pair)?;
    let (a, g) = surface_diff_norms(pair);
    let root_g1 = gt.g1.sqrt();
    Ok(vec![
        InequalityCheck::new("trace_potential_s1", l41.lhs[0], l41.rhs, h),
        InequalityCheck::new("trace_dx_s1", l41.lhs[1], l41.rhs, h),
        InequalityCheck::new("trace_dy_s1", l41.lhs[2], l41.rhs, h),
        InequalityCheck::new("surface_dx_difference", own_diff(&|d| d.dx), root_g1, h),
        InequalityCheck::new("surface_dy_difference", own_diff(&|d| d.dy), root_g1, h),
        InequalityCheck::new("flux_times_difference", l31.surface_terms[0], gt.g2, h),
        InequalityCheck::new("potential_times_flux_difference", l31.surface_terms[1], gt.g3, h),
        InequalityCheck::new("difference_l2", a, gt.g4.sqrt(), h),
        InequalityCheck::new("difference_gradient_l2", g, gt.g5.sqrt(), h),
    ])
}
