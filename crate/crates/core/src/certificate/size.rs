//! Local energy ratios and the covering lower bound for the inter-bottom energy.

use std::collections::BTreeSet;

use serde::Serialize;

use super::quad::{disk_integral, sample_clamped, square_integral};
use super::PairConfiguration;
use crate::elliptic::PotentialField;
use crate::error::{Error, Result};
use crate::geometry::fatness::component_raster;
use crate::geometry::Sign;

fn segment_distance(px: f64, py: f64, (ax, ay): (f64, f64), (bx, by): (f64, f64)) -> f64 {
    let (dx, dy) = (bx - ax, by - ay);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 { (((px - ax) * dx + (py - ay) * dy) / len2).clamp(0.0, 1.0) } else { 0.0 };
    ((px - ax - t * dx).powi(2) + (py - ay - t * dy).powi(2)).sqrt()
}

/// Euclidean distance from `(x, y)` to the boundary of the solved domain
/// (walls excluded for periodic fields).
pub fn distance_to_boundary(field: &PotentialField, x: f64, y: f64) -> f64 {
    let grid = field.grid();
    let mut d = f64::INFINITY;
    if !field.is_periodic() {
        d = d.min(x - grid.a1()).min(grid.a2() - x);
    }
    for k in 0..grid.n_nodes() - 1 {
        let (x1, x2) = (grid.x(k), grid.x(k + 1));
        d = d.min(segment_distance(x, y, (x1, field.bottom(k)), (x2, field.bottom(k + 1))));
        d = d.min(segment_distance(x, y, (x1, field.surface(k)), (x2, field.surface(k + 1))));
    }
    d
}

fn nonzero_energy(field: &PotentialField) -> Result<f64> {
    let e = field.total_energy();
    if !(e > 1e-16 * field.h2_norm().powi(2)) {
        return Err(Error::ZeroEnergy);
    }
    Ok(e)
}

/// Smallest ratio `∫_{B_ρ(p)}|∇φ|² / ∫_Ω|∇φ|²` over the sample points, each of
/// which must lie at distance at least `4ρ` from the boundary.
pub fn estimate_crho(field: &PotentialField, rho: f64, points: &[(f64, f64)]) -> Result<f64> {
    if !(rho > 0.0) || points.is_empty() {
        return Err(Error::InvalidParameter("need rho > 0 and at least one sample point".into()));
    }
    let total = nonzero_energy(field)?;
    let mut best = f64::INFINITY;
    for &(x, y) in points {
        let inside = field.sample_point(x, y).is_ok();
        if !inside || distance_to_boundary(field, x, y) < 4.0 * rho {
            return Err(Error::PointTooNearBoundary { x, y });
        }
        let local = disk_integral(x, y, rho, |u, v| Ok(field.sample_point(u, v)?.grad_sq()))?;
        best = best.min(local / total);
    }
    Ok(best)
}

/// Covering statistics of one inter-bottom component.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentCovering {
    pub sign: Sign,
    pub x_start: f64,
    pub x_end: f64,
    pub area: f64,
    pub rho: f64,
    /// `∫_D |∇·|²` of the potential whose domain contains the component.
    pub region_energy: f64,
    pub total_energy: f64,
    pub squares: usize,
    pub min_square_energy: f64,
    /// Disk-to-total energy ratio at the center of the weakest square.
    pub crho: f64,
    /// `2·C(ρ)/ρ²`.
    pub ctilde: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CbotEstimate {
    pub cbot: f64,
    /// 1 or 2 for each side that has components.
    pub case_positive: Option<u8>,
    pub case_negative: Option<u8>,
    pub components: Vec<ComponentCovering>,
}

/// Per-side constant: the minimum when the constants are comparable, the
/// squared-minimum fallback when they spread over more than three decades.
pub(crate) fn side_constant(c: &[f64]) -> Option<(f64, u8)> {
    if c.is_empty() {
        return None;
    }
    let lo = c.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = c.iter().copied().fold(0.0, f64::max);
    if lo > 0.0 && hi / lo <= 1e3 {
        Some((lo, 1))
    } else {
        Some((lo.min(lo * lo), 2))
    }
}

pub fn estimate_cbot(pair: &PairConfiguration) -> Result<CbotEstimate> {
    let comps = &pair.decomposition().components;
    if comps.is_empty() {
        return Err(Error::NoComponents);
    }
    let (b, b0) = (pair.bottom(), pair.bottom0());
    let n = pair.grid().n_nodes();
    let mut out = Vec::with_capacity(comps.len());
    for c in comps {
        let (field, lower) = match c.sign {
            Sign::Positive => (pair.phi0(), b0),
            Sign::Negative => (pair.phi(), b),
        };
        let total = nonzero_energy(field)?;
        let (s, e) = c.node_range;
        let (lo, hi) = (s.saturating_sub(1), (e + 1).min(n - 1));
        let lower_v = lower.values().to_vec();
        let upper_v: Vec<f64> =
            (0..n).map(|i| if (lo..=hi).contains(&i) { b.get(i).max(b0.get(i)) } else { lower_v[i] }).collect();
        let region_energy = field.energy(&lower_v, &upper_v)?;

        let mut cov = ComponentCovering {
            sign: c.sign,
            x_start: c.x_start,
            x_end: c.x_end,
            area: c.area,
            rho: c.rho,
            region_energy,
            total_energy: total,
            squares: 0,
            min_square_energy: 0.0,
            crho: 0.0,
            ctilde: 0.0,
        };
        if c.fat && c.rho > 0.0 {
            let raster = component_raster(c, b, b0);
            let side = 0.5 * c.rho;
            let mut squares = BTreeSet::new();
            for iy in 0..raster.ny {
                for ix in 0..raster.nx {
                    let k = iy * raster.nx + ix;
                    if raster.inside[k] && raster.dist[k] >= c.rho {
                        let (x, y) = raster.center(ix, iy);
                        let p = ((x - raster.x0) / side).floor() as i64;
                        let q = ((y - raster.y0) / side).floor() as i64;
                        squares.insert((p, q));
                    }
                }
            }
            let mut weakest = (f64::INFINITY, 0.0, 0.0);
            for &(p, q) in &squares {
                let (x0, y0) = (raster.x0 + p as f64 * side, raster.y0 + q as f64 * side);
                let en = square_integral(x0, y0, side, |x, y| Ok(sample_clamped(field, x, y)?.grad_sq()))?;
                if en < weakest.0 {
                    weakest = (en, x0 + 0.5 * side, y0 + 0.5 * side);
                }
            }
            let (en, cx, cy) = weakest;
            let disk = disk_integral(cx, cy, 0.5 * side, |x, y| Ok(sample_clamped(field, x, y)?.grad_sq()))?;
            cov.squares = squares.len();
            cov.min_square_energy = en;
            cov.crho = disk / total;
            cov.ctilde = 2.0 * cov.crho / (c.rho * c.rho);
        }
        out.push(cov);
    }
    let side = |sg: Sign| {
        let v: Vec<f64> = out.iter().filter(|c| c.sign == sg).map(|c| c.ctilde).collect();
        side_constant(&v)
    };
    let (pos, neg) = (side(Sign::Positive), side(Sign::Negative));
    let cbot = [pos, neg].iter().flatten().map(|p| p.0).fold(f64::INFINITY, f64::min);
    Ok(CbotEstimate { cbot, case_positive: pos.map(|p| p.1), case_negative: neg.map(|p| p.1), components: out })
}
