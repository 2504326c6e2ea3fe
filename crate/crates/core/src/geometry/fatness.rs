//! Rasterized erosion of inter-bottom components.

use super::{area_floor, Component, Sign};
use crate::error::{Error, Result};
use crate::grid::ScalarField;

const MAX_PIXELS: usize = 4_000_000;

/// Pixel image of a region `{lower(X) < y <= upper(X)}` with, for every inside
/// pixel, the distance from its center to the region's complement.
#[derive(Debug, Clone)]
pub struct Raster {
    pub x0: f64,
    pub y0: f64,
    pub pixel: f64,
    pub nx: usize,
    pub ny: usize,
    pub inside: Vec<bool>,
    pub dist: Vec<f64>,
}

impl Raster {
    /// Rasterizes the region between two piecewise-linear profiles given at
    /// nodes `xs`. `pixel` is the target size; it grows if the image would be huge.
    pub fn from_profiles(xs: &[f64], lower: &[f64], upper: &[f64], pixel: f64) -> Raster {
        let xmin = xs[0];
        let xmax = xs[xs.len() - 1];
        let ymin = lower.iter().copied().fold(f64::INFINITY, f64::min);
        let ymax = upper.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut p = pixel;
        let count = |p: f64| (((xmax - xmin) / p).ceil() as usize + 2) * (((ymax - ymin) / p).ceil() as usize + 2);
        while count(p) > MAX_PIXELS {
            p *= 1.5;
        }
        // One pad ring on every side keeps the complement present at the edges.
        let nx = ((xmax - xmin) / p).ceil() as usize + 2;
        let ny = ((ymax - ymin) / p).ceil() as usize + 2;
        let x0 = xmin - p;
        let y0 = ymin - p;
        let mut inside = vec![false; nx * ny];
        let mut seg = 0;
        for ix in 0..nx {
            let xc = x0 + (ix as f64 + 0.5) * p;
            if xc < xmin || xc > xmax {
                continue;
            }
            while seg + 2 < xs.len() && xc > xs[seg + 1] {
                seg += 1;
            }
            let t = ((xc - xs[seg]) / (xs[seg + 1] - xs[seg])).clamp(0.0, 1.0);
            let lo = lower[seg] + t * (lower[seg + 1] - lower[seg]);
            let hi = upper[seg] + t * (upper[seg + 1] - upper[seg]);
            for iy in 0..ny {
                let yc = y0 + (iy as f64 + 0.5) * p;
                if lo < yc && yc <= hi {
                    inside[iy * nx + ix] = true;
                }
            }
        }
        let sq = distance_transform(&inside, nx, ny);
        let dist = sq
            .iter()
            .zip(&inside)
            .map(|(&d2, &inn)| if inn { d2.sqrt() * p - 0.5 * p } else { 0.0 })
            .collect();
        Raster { x0, y0, pixel: p, nx, ny, inside, dist }
    }

    pub fn center(&self, ix: usize, iy: usize) -> (f64, f64) {
        (
            self.x0 + (ix as f64 + 0.5) * self.pixel,
            self.y0 + (iy as f64 + 0.5) * self.pixel,
        )
    }

    pub fn inside_count(&self) -> usize {
        self.inside.iter().filter(|&&b| b).count()
    }

    pub fn area(&self) -> f64 {
        self.inside_count() as f64 * self.pixel * self.pixel
    }

    /// Measure of the ρ-erosion.
    pub fn eroded_area(&self, rho: f64) -> f64 {
        let n = self.inside.iter().zip(&self.dist).filter(|(&i, &d)| i && d > rho).count();
        n as f64 * self.pixel * self.pixel
    }

    /// Largest ρ keeping at least half of the pixels in the erosion.
    pub fn half_erosion_radius(&self) -> f64 {
        let mut d: Vec<f64> =
            self.inside.iter().zip(&self.dist).filter(|(&i, _)| i).map(|(_, &d)| d).collect();
        if d.is_empty() {
            return 0.0;
        }
        d.sort_by(|a, b| b.total_cmp(a));
        let k = d.len().div_ceil(2);
        d[k - 1].max(0.0)
    }
}

/// Exact squared Euclidean distance (in pixels) from every pixel to the nearest
/// pixel with `inside == false`.
pub fn distance_transform(inside: &[bool], nx: usize, ny: usize) -> Vec<f64> {
    let big = ((nx * nx + ny * ny) as f64 + 1.0) * 4.0;
    let mut g: Vec<f64> = inside.iter().map(|&b| if b { big } else { 0.0 }).collect();
    let mut f = vec![0.0; nx.max(ny)];
    let mut out = vec![0.0; nx.max(ny)];
    for ix in 0..nx {
        for iy in 0..ny {
            f[iy] = g[iy * nx + ix];
        }
        edt_1d(&f[..ny], &mut out[..ny]);
        for iy in 0..ny {
            g[iy * nx + ix] = out[iy];
        }
    }
    for iy in 0..ny {
        f[..nx].copy_from_slice(&g[iy * nx..(iy + 1) * nx]);
        edt_1d(&f[..nx], &mut out[..nx]);
        g[iy * nx..(iy + 1) * nx].copy_from_slice(&out[..nx]);
    }
    g
}

// Lower envelope of parabolas (Felzenszwalb and Huttenlocher).
fn edt_1d(f: &[f64], d: &mut [f64]) {
    let n = f.len();
    let mut v = vec![0usize; n];
    let mut z = vec![0.0f64; n + 1];
    let mut k = 0usize;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    let meet = |q: usize, p: usize| {
        ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64))
    };
    for q in 1..n {
        let mut s = meet(q, v[k]);
        while s <= z[k] {
            k -= 1;
            s = meet(q, v[k]);
        }
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = f64::INFINITY;
    }
    k = 0;
    for (q, dq) in d.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        let diff = q as f64 - p as f64;
        *dq = diff * diff + f[p];
    }
}

/// Half-erosion radius of an arbitrary profile-bounded region and whether it is
/// positive at pixel resolution.
pub fn fatness_of_region(xs: &[f64], lower: &[f64], upper: &[f64], pixel: f64) -> (f64, bool, Raster) {
    let raster = Raster::from_profiles(xs, lower, upper, pixel);
    let rho = raster.half_erosion_radius();
    (rho, rho > 0.0, raster)
}

/// Region of a component as (nodes, lower, upper) including the neighbouring
/// cells where the difference crosses zero.
pub(crate) fn component_profiles(c: &Component, b: &ScalarField, b0: &ScalarField) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let grid = b.grid();
    let n = grid.n_nodes();
    let (s, e) = c.node_range;
    let lo = s.saturating_sub(1);
    let hi = (e + 1).min(n - 1);
    let mut xs = Vec::new();
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    for k in lo..=hi {
        xs.push(grid.x(k));
        let (top, bot) = match c.sign {
            Sign::Positive => (b.get(k), b0.get(k)),
            Sign::Negative => (b0.get(k), b.get(k)),
        };
        lower.push(bot);
        upper.push(top);
    }
    (xs, lower, upper)
}

pub(crate) fn component_pixel(c: &Component, b: &ScalarField, b0: &ScalarField) -> f64 {
    let (_, lower, upper) = component_profiles(c, b, b0);
    let hmax = upper.iter().zip(&lower).map(|(u, l)| u - l).fold(0.0, f64::max);
    (b.grid().spacing() / 8.0).min(hmax / 16.0)
}

pub(crate) fn component_raster(c: &Component, b: &ScalarField, b0: &ScalarField) -> Raster {
    let (xs, lower, upper) = component_profiles(c, b, b0);
    Raster::from_profiles(&xs, &lower, &upper, component_pixel(c, b, b0))
}

/// Largest ρ with μ(D_ρ) ≥ ½μ(D) for the component's region.
pub fn fatness_radius(c: &Component, b: &ScalarField, b0: &ScalarField) -> Result<(f64, bool)> {
    if c.area <= area_floor(b, b0) {
        return Err(Error::DegenerateComponent { area: c.area });
    }
    let raster = component_raster(c, b, b0);
    if raster.inside_count() == 0 {
        return Err(Error::DegenerateComponent { area: c.area });
    }
    let rho = raster.half_erosion_radius();
    Ok((rho, rho > 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force(inside: &[bool], nx: usize, ny: usize) -> Vec<f64> {
        let mut out = vec![0.0; nx * ny];
        for i in 0..nx * ny {
            if !inside[i] {
                continue;
            }
            let (x, y) = ((i % nx) as f64, (i / nx) as f64);
            let mut best = f64::INFINITY;
            for j in 0..nx * ny {
                if !inside[j] {
                    let (u, v) = ((j % nx) as f64, (j / nx) as f64);
                    best = best.min((x - u).powi(2) + (y - v).powi(2));
                }
            }
            out[i] = best;
        }
        out
    }

    #[test]
    fn distance_transform_matches_brute_force() {
        let (nx, ny) = (23, 17);
        let inside: Vec<bool> = (0..nx * ny)
            .map(|i| {
                let (x, y) = ((i % nx) as i64, (i / nx) as i64);
                x > 0 && y > 0 && x < 22 && y < 16 && (x * 7 + y * 3) % 11 != 0
            })
            .collect();
        assert_eq!(distance_transform(&inside, nx, ny), brute_force(&inside, nx, ny));
    }

    #[test]
    fn unit_square_half_erosion() {
        let (rho, fat, raster) = fatness_of_region(&[0.0, 1.0], &[0.0, 0.0], &[1.0, 1.0], 1.0 / 256.0);
        let exact = (1.0 - std::f64::consts::FRAC_1_SQRT_2) / 2.0;
        assert!(fat);
        assert!((rho - exact).abs() <= raster.pixel, "{rho} vs {exact}");
        assert!((raster.area() - 1.0).abs() < 1e-12);
        assert!((raster.eroded_area(0.1) - 0.64).abs() < 0.01);
        assert!((raster.eroded_area(0.2) - 0.36).abs() < 0.01);
    }
}
