//! Gauss rules and point sampling shared by the certificate terms.

use std::f64::consts::PI;

use crate::elliptic::{NodeDerivs, PotentialField};
use crate::error::Result;

const GL_X: [f64; 4] = [-0.861_136_311_594_052_6, -0.339_981_043_584_856_3, 0.339_981_043_584_856_3, 0.861_136_311_594_052_6];
const GL_W: [f64; 4] = [0.347_854_845_137_453_9, 0.652_145_154_862_546_1, 0.652_145_154_862_546_1, 0.347_854_845_137_453_9];

/// Composite 4-point Gauss–Legendre quadrature of `f` over `[lo, hi]`.
pub(crate) fn gauss(lo: f64, hi: f64, panels: usize, mut f: impl FnMut(f64) -> Result<f64>) -> Result<f64> {
    if hi <= lo {
        return Ok(0.0);
    }
    let panels = panels.max(1);
    let w = (hi - lo) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let mid = lo + (p as f64 + 0.5) * w;
        for k in 0..4 {
            total += GL_W[k] * 0.5 * w * f(mid + 0.5 * w * GL_X[k])?;
        }
    }
    Ok(total)
}

/// Gauss points of `[lo, hi]` split into `panels` pieces, plus both ends.
pub(crate) fn gauss_points(lo: f64, hi: f64, panels: usize) -> Vec<f64> {
    let mut pts = vec![lo, hi];
    if hi > lo {
        let panels = panels.max(1);
        let w = (hi - lo) / panels as f64;
        for p in 0..panels {
            let mid = lo + (p as f64 + 0.5) * w;
            pts.extend(GL_X.iter().map(|g| mid + 0.5 * w * g));
        }
    }
    pts
}

/// Tensor Gauss quadrature over an axis-aligned square.
pub(crate) fn square_integral(x0: f64, y0: f64, side: f64, mut f: impl FnMut(f64, f64) -> Result<f64>) -> Result<f64> {
    let mut total = 0.0;
    for (a, wa) in GL_X.iter().zip(GL_W) {
        for (b, wb) in GL_X.iter().zip(GL_W) {
            let x = x0 + 0.5 * side * (1.0 + a);
            let y = y0 + 0.5 * side * (1.0 + b);
            total += wa * wb * f(x, y)?;
        }
    }
    Ok(total * 0.25 * side * side)
}

/// Polar quadrature over a disk: Gauss in the radius, trapezoid in the angle.
pub(crate) fn disk_integral(cx: f64, cy: f64, r: f64, mut f: impl FnMut(f64, f64) -> Result<f64>) -> Result<f64> {
    const N_THETA: usize = 32;
    let mut total = 0.0;
    for p in 0..2 {
        let (lo, hi) = (0.5 * r * p as f64, 0.5 * r * (p + 1) as f64);
        for (g, w) in GL_X.iter().zip(GL_W) {
            let rr = 0.5 * (lo + hi) + 0.5 * (hi - lo) * g;
            let wr = w * 0.5 * (hi - lo) * rr;
            for k in 0..N_THETA {
                let t = 2.0 * PI * k as f64 / N_THETA as f64;
                total += wr * (2.0 * PI / N_THETA as f64) * f(cx + rr * t.cos(), cy + rr * t.sin())?;
            }
        }
    }
    Ok(total)
}

/// Sample at `(x, y)` after clamping the point into the solved domain.
pub(crate) fn sample_clamped(field: &PotentialField, x: f64, y: f64) -> Result<NodeDerivs> {
    let grid = field.grid();
    let x = x.clamp(grid.a1(), grid.a2());
    let pos = (x - grid.a1()) / grid.spacing();
    let i = (pos.floor().max(0.0) as usize).min(grid.n_nodes() - 2);
    let t = (pos - i as f64).clamp(0.0, 1.0);
    let b = field.bottom(i) + t * (field.bottom(i + 1) - field.bottom(i));
    let z = field.surface(i) + t * (field.surface(i + 1) - field.surface(i));
    field.sample_point(x, y.clamp(b, z))
}
