//! Conservative terrain-following discretization of the Laplace equation.
//!
//! With `y = b + σH`, `H = ζ − b`, Laplace's equation becomes
//! `∂_X(H φ_X) + ∂_σ(Hs φ_X + φ_y) = 0`, where `Hs = −(b' + σH')` and
//! `φ_X = Φ_X + sΦ_σ`, `φ_y = Φ_σ / H`. The σ-flux `φ_y − (b' + σH')φ_X` is
//! the physical conormal flux on every σ-level: it vanishes on the bottom and
//! equals the Dirichlet-to-Neumann flux at the surface. Nodes own control
//! volumes (half-cells on σ = 0 and σ = 1), so discrete fluxes telescope.

use super::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Layout {
    pub nx: usize,
    pub ns: usize,
    pub periodic: bool,
}

impl Layout {
    /// Number of distinct node columns (a periodic grid repeats its first node).
    pub fn ncols(&self) -> usize {
        if self.periodic {
            self.nx - 1
        } else {
            self.nx
        }
    }

    pub fn n_unknowns(&self) -> usize {
        self.ncols() * self.ns
    }

    pub fn idx(&self, c: usize, j: usize) -> usize {
        c * self.ns + j
    }

    pub fn column_of_node(&self, i: usize) -> usize {
        if self.periodic {
            i % (self.nx - 1)
        } else {
            i
        }
    }

    pub fn left(&self, c: usize) -> usize {
        if self.periodic {
            (c + self.ncols() - 1) % self.ncols()
        } else {
            c - 1
        }
    }

    pub fn right(&self, c: usize) -> usize {
        if self.periodic {
            (c + 1) % self.ncols()
        } else {
            c + 1
        }
    }

    pub fn is_wall(&self, c: usize) -> bool {
        !self.periodic && (c == 0 || c + 1 == self.nx)
    }
}

/// Profile data the stencil needs, indexed by column.
#[derive(Debug, Clone)]
pub(crate) struct Geometry<T> {
    pub layout: Layout,
    pub dx: f64,
    pub ds: f64,
    pub b: Vec<T>,
    pub h: Vec<T>,
    pub db: Vec<T>,
    pub dh: Vec<T>,
    pub dzeta: Vec<T>,
}

fn nodal_derivative<T: Real>(v: &[T], dx: f64, periodic: bool) -> Vec<T> {
    let n = v.len();
    let c2 = T::from(0.5 / dx);
    let mut d = vec![T::from(0.0); n];
    if periodic {
        for i in 0..n {
            d[i] = (v[(i + 1) % n] - v[(i + n - 1) % n]) * c2;
        }
    } else {
        for i in 1..n - 1 {
            d[i] = (v[i + 1] - v[i - 1]) * c2;
        }
        if n >= 4 {
            let c6 = T::from(1.0 / (6.0 * dx));
            let (mut lo, mut hi) = (T::from(0.0), T::from(0.0));
            for (k, a) in ONE_SIDED_4.iter().enumerate() {
                lo += T::from(*a) * v[k];
                hi += T::from(-a) * v[n - 1 - k];
            }
            d[0] = lo * c6;
            d[n - 1] = hi * c6;
        } else {
            d[0] = (T::from(-3.0) * v[0] + T::from(4.0) * v[1] - v[2]) * c2;
            d[n - 1] = (T::from(3.0) * v[n - 1] - T::from(4.0) * v[n - 2] + v[n - 3]) * c2;
        }
    }
    d
}

impl<T: Real> Geometry<T> {
    pub fn new(layout: Layout, dx: f64, b: &[T], zeta: &[T]) -> Self {
        let m = layout.ncols();
        let b: Vec<T> = b[..m].to_vec();
        let zeta: Vec<T> = zeta[..m].to_vec();
        let h: Vec<T> = zeta.iter().zip(&b).map(|(&z, &bb)| z - bb).collect();
        let db = nodal_derivative(&b, dx, layout.periodic);
        let dh = nodal_derivative(&h, dx, layout.periodic);
        let dzeta = nodal_derivative(&zeta, dx, layout.periodic);
        let ds = 1.0 / (layout.ns - 1) as f64;
        Self { layout, dx, ds, b, h, db, dh, dzeta }
    }

    /// Adds `w · ∂_σΦ(c, j)` (second order, one-sided at σ = 0 and σ = 1).
    fn sigma_diff(&self, c: usize, j: usize, w: T, row: &mut Vec<(usize, T)>) {
        let l = &self.layout;
        let q = w * T::from(0.5 / self.ds);
        if j == 0 {
            row.push((l.idx(c, 0), q * T::from(-3.0)));
            row.push((l.idx(c, 1), q * T::from(4.0)));
            row.push((l.idx(c, 2), -q));
        } else if j + 1 == l.ns {
            row.push((l.idx(c, j), q * T::from(3.0)));
            row.push((l.idx(c, j - 1), q * T::from(-4.0)));
            row.push((l.idx(c, j - 2), q));
        } else {
            row.push((l.idx(c, j + 1), q));
            row.push((l.idx(c, j - 1), -q));
        }
    }

    /// Adds `w · F^X` on the face between column `c` and its right neighbour, level `j`.
    fn xface(&self, c: usize, j: usize, w: T, row: &mut Vec<(usize, T)>) {
        let l = &self.layout;
        let r = l.right(c);
        let inv_dx = T::from(1.0 / self.dx);
        let hm = (self.h[c] + self.h[r]) * T::from(0.5);
        let slope_b = (self.b[r] - self.b[c]) * inv_dx;
        let slope_h = (self.h[r] - self.h[c]) * inv_dx;
        let hs = -(slope_b + T::from(j as f64 * self.ds) * slope_h);
        let a = w * hm * inv_dx;
        row.push((l.idx(r, j), a));
        row.push((l.idx(c, j), -a));
        let half = w * hs * T::from(0.5);
        self.sigma_diff(c, j, half, row);
        self.sigma_diff(r, j, half, row);
    }

    /// Adds `w · F^σ` on the face between levels `j` and `j + 1` of column `c`.
    fn sface(&self, c: usize, j: usize, w: T, row: &mut Vec<(usize, T)>) {
        let l = &self.layout;
        let sigma = T::from((j as f64 + 0.5) * self.ds);
        let hs = -(self.db[c] + sigma * self.dh[c]);
        let cs = w * (hs * hs + T::from(1.0)) / self.h[c] * T::from(1.0 / self.ds);
        row.push((l.idx(c, j + 1), cs));
        row.push((l.idx(c, j), -cs));
        let q = w * hs * T::from(0.25 / self.dx);
        let (lc, rc) = (l.left(c), l.right(c));
        for jj in [j, j + 1] {
            row.push((l.idx(rc, jj), q));
            row.push((l.idx(lc, jj), -q));
        }
    }

    /// Flux balance of the control volume around node `(c, j)`, `j < ns − 1`,
    /// divided by its diagonal coefficient.
    pub fn balance_row(&self, c: usize, j: usize, row: &mut Vec<(usize, T)>) {
        row.clear();
        let l = &self.layout;
        let ws = if j == 0 { 0.5 * self.ds } else { self.ds };
        let wx = T::from(ws);
        self.xface(c, j, wx, row);
        self.xface(l.left(c), j, -wx, row);
        let wsig = T::from(self.dx);
        self.sface(c, j, wsig, row);
        if j > 0 {
            self.sface(c, j - 1, -wsig, row);
        }
        merge(row);
        let me = l.idx(c, j);
        let diag = row.iter().find(|e| e.0 == me).map(|e| e.1).unwrap_or(T::from(1.0));
        for e in row.iter_mut() {
            e.1 = e.1 / diag;
        }
    }

    /// Surface flux `G = φ_y − ζ'φ_X` at column `c` as a linear functional of Φ.
    pub fn dno_row(&self, c: usize, row: &mut Vec<(usize, T)>) {
        row.clear();
        let l = &self.layout;
        let top = l.ns - 1;
        if l.is_wall(c) {
            let zp = self.dzeta[c];
            let wy = (T::from(1.0) + zp * zp) / self.h[c];
            if l.ns >= 4 {
                let q = wy * T::from(1.0 / (6.0 * self.ds));
                for (k, a) in ONE_SIDED_4.iter().enumerate() {
                    row.push((l.idx(c, top - k), q * T::from(-a)));
                }
            } else {
                self.sigma_diff(c, top, wy, row);
            }
            let s = if c == 0 { 1.0 } else { -1.0 };
            let col = |k: usize| if c == 0 { k } else { c - k };
            if l.nx >= 4 {
                let q = -zp * T::from(s / (6.0 * self.dx));
                for (k, a) in ONE_SIDED_4.iter().enumerate() {
                    row.push((l.idx(col(k), top), q * T::from(*a)));
                }
            } else {
                let q = -zp * T::from(0.5 * s / self.dx);
                for (k, a) in [-3.0, 4.0, -1.0].iter().enumerate() {
                    row.push((l.idx(col(k), top), q * T::from(*a)));
                }
            }
        } else {
            // Top half-cell balance solved for the flux through σ = 1.
            self.sface(c, top - 1, T::from(1.0), row);
            let w = T::from(0.5 * self.ds / self.dx);
            self.xface(c, top, -w, row);
            self.xface(l.left(c), top, w, row);
        }
        merge(row);
    }
}

/// Weights of `6h·f'(x0)` on `f(x0), f(x0 + h), f(x0 + 2h), f(x0 + 3h)`.
const ONE_SIDED_4: [f64; 4] = [-11.0, 18.0, -9.0, 2.0];

fn merge<T: Real>(row: &mut Vec<(usize, T)>) {
    row.sort_by_key(|e| e.0);
    let mut out: Vec<(usize, T)> = Vec::with_capacity(row.len());
    for &(k, v) in row.iter() {
        match out.last_mut() {
            Some(last) if last.0 == k => last.1 += v,
            _ => out.push((k, v)),
        }
    }
    *row = out;
}
