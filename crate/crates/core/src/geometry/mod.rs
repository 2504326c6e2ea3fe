//! Fluid domains, surface splits, envelopes and the inter-bottom region.

pub(crate) mod fatness;

use serde::Serialize;

pub use fatness::{distance_transform, fatness_radius, fatness_of_region, Raster};

use crate::error::{Error, Result};
use crate::grid::{Grid1D, ScalarField};

/// Validated pair (bottom, surface) with a guaranteed minimum depth.
#[derive(Debug, Clone, PartialEq)]
pub struct FluidDomainSpec {
    bottom: ScalarField,
    surface: ScalarField,
    h0: f64,
    lipschitz_r0: f64,
    lipschitz_m0: f64,
}

impl FluidDomainSpec {
    pub fn bottom(&self) -> &ScalarField {
        &self.bottom
    }

    pub fn surface(&self) -> &ScalarField {
        &self.surface
    }

    pub fn grid(&self) -> &Grid1D {
        self.bottom.grid()
    }

    pub fn h0(&self) -> f64 {
        self.h0
    }

    pub fn lipschitz_r0(&self) -> f64 {
        self.lipschitz_r0
    }

    pub fn lipschitz_m0(&self) -> f64 {
        self.lipschitz_m0
    }

    pub fn depth(&self, i: usize) -> f64 {
        self.surface.get(i) - self.bottom.get(i)
    }

    pub fn min_depth(&self) -> f64 {
        (0..self.grid().n_nodes()).map(|i| self.depth(i)).fold(f64::INFINITY, f64::min)
    }

    pub fn max_depth(&self) -> f64 {
        (0..self.grid().n_nodes()).map(|i| self.depth(i)).fold(0.0, f64::max)
    }

    /// Same domain with a different surface, revalidated.
    pub fn with_surface(&self, surface: ScalarField) -> Result<Self> {
        build_domain(self.bottom.clone(), surface, self.h0)
    }

    /// Same domain with a different bottom, revalidated.
    pub fn with_bottom(&self, bottom: ScalarField) -> Result<Self> {
        build_domain(bottom, self.surface.clone(), self.h0)
    }

    /// Restriction to nodes `i1..=i2`.
    pub fn slice(&self, i1: usize, i2: usize) -> Result<Self> {
        build_domain(self.bottom.slice(i1, i2)?, self.surface.slice(i1, i2)?, self.h0)
    }
}

pub fn build_domain(bottom: ScalarField, surface: ScalarField, h0: f64) -> Result<FluidDomainSpec> {
    bottom.check_grid(&surface)?;
    if !(h0 > 0.0 && h0.is_finite()) {
        return Err(Error::InvalidParameter(format!("h0 = {h0} must be positive")));
    }
    let grid = *bottom.grid();
    for i in 0..grid.n_nodes() {
        let depth = surface.get(i) - bottom.get(i);
        if depth < h0 {
            return Err(Error::DepthViolation { depth, h0, x: grid.x(i) });
        }
    }
    let lipschitz_m0 = bottom.derivative().max_abs().max(surface.derivative().max_abs());
    let lipschitz_r0 = h0.min(grid.length()) / 4.0;
    Ok(FluidDomainSpec { bottom, surface, h0, lipschitz_r0, lipschitz_m0 })
}

/// Zero threshold used for every sign classification of profile differences.
pub fn zero_threshold(b: &ScalarField, b0: &ScalarField) -> f64 {
    1e-12 * 1f64.max(b.max_abs()).max(b0.max_abs())
}

/// Pointwise lower surface and upper bottom of two configurations.
pub fn envelopes(
    zeta: &ScalarField,
    zeta0: &ScalarField,
    b: &ScalarField,
    b0: &ScalarField,
) -> Result<(ScalarField, ScalarField)> {
    zeta.check_grid(b)?;
    let lower = zeta.zip_with(zeta0, f64::min)?;
    let upper = b.zip_with(b0, f64::max)?;
    Ok((lower, upper))
}

/// Node masks for where the first surface lies strictly above the second.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurfaceSplit {
    pub s1_mask: Vec<bool>,
    pub s2_mask: Vec<bool>,
}

impl SurfaceSplit {
    pub fn s1_count(&self) -> usize {
        self.s1_mask.iter().filter(|&&m| m).count()
    }
}

pub fn split_surface(zeta: &ScalarField, zeta0: &ScalarField) -> Result<SurfaceSplit> {
    zeta.check_grid(zeta0)?;
    let tau = 1e-12 * 1f64.max(zeta.max_abs()).max(zeta0.max_abs());
    let s1_mask: Vec<bool> =
        zeta.values().iter().zip(zeta0.values()).map(|(a, b)| a - b > tau).collect();
    let s2_mask = s1_mask.iter().map(|m| !m).collect();
    Ok(SurfaceSplit { s1_mask, s2_mask })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sign {
    /// `b > b0`: fluid of the second configuration below the first bottom.
    #[serde(rename = "+")]
    Positive,
    /// `b < b0`.
    #[serde(rename = "-")]
    Negative,
}

/// One connected piece of the region between the two bottoms.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Component {
    /// First and last node (inclusive) where the difference has this sign.
    #[serde(skip)]
    pub node_range: (usize, usize),
    pub sign: Sign,
    pub x_start: f64,
    pub x_end: f64,
    pub area: f64,
    pub rho: f64,
    pub fat: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionDecomposition {
    pub components: Vec<Component>,
}

impl RegionDecomposition {
    pub fn total_area(&self) -> f64 {
        self.components.iter().map(|c| c.area).sum()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Smallest component area kept in a decomposition.
pub fn area_floor(b: &ScalarField, b0: &ScalarField) -> f64 {
    zero_threshold(b, b0) * b.grid().length()
}

fn sign_classes(b: &ScalarField, b0: &ScalarField) -> Vec<i8> {
    let tau = zero_threshold(b, b0);
    let mut s: Vec<i8> = b
        .values()
        .iter()
        .zip(b0.values())
        .map(|(x, y)| {
            let d = x - y;
            if d > tau {
                1
            } else if d < -tau {
                -1
            } else {
                0
            }
        })
        .collect();
    // A lone sub-threshold node between two nodes of one sign does not split a component.
    for i in 1..s.len().saturating_sub(1) {
        if s[i] == 0 && s[i - 1] != 0 && s[i - 1] == s[i + 1] {
            s[i] = s[i - 1];
        }
    }
    s
}

pub fn decompose_interbottom(b: &ScalarField, b0: &ScalarField) -> Result<RegionDecomposition> {
    b.check_grid(b0)?;
    let grid = *b.grid();
    let w = grid.trapezoid_weights();
    let classes = sign_classes(b, b0);
    let floor = area_floor(b, b0);
    let n = grid.n_nodes();
    let mut components = Vec::new();
    let mut i = 0;
    while i < n {
        if classes[i] == 0 {
            i += 1;
            continue;
        }
        let s = classes[i];
        let start = i;
        while i + 1 < n && classes[i + 1] == s {
            i += 1;
        }
        let end = i;
        i += 1;
        let area: f64 = (start..=end).map(|k| w[k] * (b.get(k) - b0.get(k)).abs()).sum();
        if area <= floor {
            continue;
        }
        let sign = if s > 0 { Sign::Positive } else { Sign::Negative };
        let mut comp = Component {
            node_range: (start, end),
            sign,
            x_start: grid.x(start.saturating_sub(1)),
            x_end: grid.x((end + 1).min(n - 1)),
            area,
            rho: 0.0,
            fat: false,
        };
        let (rho, fat) = fatness_radius(&comp, b, b0)?;
        comp.rho = rho;
        comp.fat = fat;
        components.push(comp);
    }
    Ok(RegionDecomposition { components })
}

/// Area between two profiles on a shared grid, by trapezoid quadrature of the
/// vertical extent.
pub fn region_area(lower: &ScalarField, upper: &ScalarField) -> Result<f64> {
    Ok(upper.sub(lower)?.map(|v| v.max(0.0))?.integral())
}

/// Measure of the lateral boundary of the window: its two endpoints.
pub fn boundary_counting_measure(_grid: &Grid1D) -> f64 {
    2.0
}

/// Trapezoid L¹ distance between two profiles.
pub fn l1_distance(b1: &ScalarField, b2: &ScalarField) -> Result<f64> {
    Ok(b1.sub(b2)?.map(f64::abs)?.integral())
}
