//! Uniform 1D grids and sampled scalar fields.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid over the closed interval `[a1, a2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    a1: f64,
    a2: f64,
    n_nodes: usize,
}

impl Grid1D {
    pub fn new(a1: f64, a2: f64, n_nodes: usize) -> Result<Self> {
        if !(a1.is_finite() && a2.is_finite()) {
            return Err(Error::InvalidGrid("endpoints must be finite".into()));
        }
        if a2 <= a1 {
            return Err(Error::InvalidGrid(format!("a2 = {a2} must exceed a1 = {a1}")));
        }
        if n_nodes < 3 {
            return Err(Error::InvalidGrid(format!("n_nodes = {n_nodes} must be at least 3")));
        }
        Ok(Self { a1, a2, n_nodes })
    }

    pub fn a1(&self) -> f64 {
        self.a1
    }

    pub fn a2(&self) -> f64 {
        self.a2
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn length(&self) -> f64 {
        self.a2 - self.a1
    }

    pub fn spacing(&self) -> f64 {
        (self.a2 - self.a1) / (self.n_nodes - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        if i + 1 == self.n_nodes {
            self.a2
        } else {
            self.a1 + i as f64 * self.spacing()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_nodes).map(|i| self.x(i)).collect()
    }

    /// Trapezoid weights; they sum to the interval length.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let h = self.spacing();
        let mut w = vec![h; self.n_nodes];
        w[0] = 0.5 * h;
        w[self.n_nodes - 1] = 0.5 * h;
        w
    }

    /// Index of the node at `x`, if `x` sits on a node up to a small relative tolerance.
    pub fn node_index(&self, x: f64) -> Option<usize> {
        let s = (x - self.a1) / self.spacing();
        let r = s.round();
        if r < 0.0 || r > (self.n_nodes - 1) as f64 || (s - r).abs() > 1e-8 {
            return None;
        }
        Some(r as usize)
    }

    pub fn same_as(&self, other: &Grid1D) -> bool {
        self.n_nodes == other.n_nodes
            && (self.a1 - other.a1).abs() <= 1e-12 * (1.0 + self.a1.abs())
            && (self.a2 - other.a2).abs() <= 1e-12 * (1.0 + self.a2.abs())
    }

    /// Sub-grid spanning nodes `i1..=i2`.
    pub fn slice(&self, i1: usize, i2: usize) -> Result<Grid1D> {
        if i2 >= self.n_nodes || i2 < i1 + 2 {
            return Err(Error::InvalidGrid(format!("cannot slice nodes {i1}..={i2}")));
        }
        Grid1D::new(self.x(i1), self.x(i2), i2 - i1 + 1)
    }
}

/// First derivative of uniformly spaced samples: centered inside, four-point
/// one-sided at the ends (three-point on three nodes).
pub fn derivative(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        d[i] = (values[i + 1] - values[i - 1]) / (2.0 * h);
    }
    let v = values;
    if n >= 4 {
        d[0] = (-11.0 * v[0] + 18.0 * v[1] - 9.0 * v[2] + 2.0 * v[3]) / (6.0 * h);
        d[n - 1] = (11.0 * v[n - 1] - 18.0 * v[n - 2] + 9.0 * v[n - 3] - 2.0 * v[n - 4]) / (6.0 * h);
    } else {
        d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h);
        d[n - 1] = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * h);
    }
    d
}

/// Centered derivative on a periodic grid whose last node repeats the first.
pub fn periodic_derivative(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    let m = n - 1;
    let mut d = vec![0.0; n];
    for i in 0..m {
        let ip = (i + 1) % m;
        let im = (i + m - 1) % m;
        d[i] = (values[ip] - values[im]) / (2.0 * h);
    }
    d[m] = d[0];
    d
}

/// Real function sampled on a [`Grid1D`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarField {
    grid: Grid1D,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid1D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_nodes() {
            return Err(Error::InvalidField(format!(
                "{} values for {} nodes",
                values.len(),
                grid.n_nodes()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidField(format!("non-finite value at node {i}")));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid1D, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.nodes().into_iter().map(f).collect();
        Self::new(grid, values)
    }

    pub fn constant(grid: Grid1D, c: f64) -> Result<Self> {
        Self::new(grid, vec![c; grid.n_nodes()])
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn check_grid(&self, other: &ScalarField) -> Result<()> {
        if self.grid.same_as(&other.grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<ScalarField> {
        Self::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_with(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Result<ScalarField> {
        self.check_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Self::new(self.grid, values)
    }

    pub fn sub(&self, other: &ScalarField) -> Result<ScalarField> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn derivative(&self) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: derivative(&self.values, self.grid.spacing()),
        }
    }

    pub fn periodic_derivative(&self) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: periodic_derivative(&self.values, self.grid.spacing()),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Trapezoid integral over the grid.
    pub fn integral(&self) -> f64 {
        self.grid
            .trapezoid_weights()
            .iter()
            .zip(&self.values)
            .map(|(w, v)| w * v)
            .sum()
    }

    pub fn l2_norm(&self) -> f64 {
        masked_l2(&self.grid, &self.values, None)
    }

    /// Restriction to nodes `i1..=i2`.
    pub fn slice(&self, i1: usize, i2: usize) -> Result<ScalarField> {
        let grid = self.grid.slice(i1, i2)?;
        Self::new(grid, self.values[i1..=i2].to_vec())
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["x", "value"])?;
        for (i, v) in self.values.iter().enumerate() {
            out.write_record([fmt_f64(self.grid.x(i)), fmt_f64(*v)])?;
        }
        out.flush()?;
        Ok(())
    }

    /// Reads a `x,value` table; the nodes must be uniform.
    pub fn read_csv<R: Read>(r: R) -> Result<ScalarField> {
        let mut reader = csv::Reader::from_reader(r);
        let mut xs = Vec::new();
        let mut vs = Vec::new();
        for rec in reader.records() {
            let rec = rec?;
            let parse = |k: usize| -> Result<f64> {
                rec.get(k)
                    .ok_or_else(|| Error::InvalidField("short row".into()))?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidField(e.to_string()))
            };
            xs.push(parse(0)?);
            vs.push(parse(1)?);
        }
        if xs.len() < 3 {
            return Err(Error::InvalidField("need at least three rows".into()));
        }
        let grid = Grid1D::new(xs[0], xs[xs.len() - 1], xs.len())?;
        for (i, x) in xs.iter().enumerate() {
            if (grid.x(i) - x).abs() > 1e-9 * (1.0 + x.abs()) {
                return Err(Error::InvalidGrid(format!("non-uniform node {x}")));
            }
        }
        ScalarField::new(grid, vs)
    }
}

/// Trapezoid L² norm, optionally restricted to masked nodes.
pub fn masked_l2(grid: &Grid1D, values: &[f64], mask: Option<&[bool]>) -> f64 {
    let w = grid.trapezoid_weights();
    let mut s = 0.0;
    for i in 0..values.len() {
        if mask.is_none_or(|m| m[i]) {
            s += w[i] * values[i] * values[i];
        }
    }
    s.sqrt()
}

/// Max norm over masked nodes (0 on an empty mask).
pub fn masked_linf(values: &[f64], mask: Option<&[bool]>) -> f64 {
    let mut m: f64 = 0.0;
    for (i, v) in values.iter().enumerate() {
        if mask.is_none_or(|mk| mk[i]) {
            m = m.max(v.abs());
        }
    }
    m
}

pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}
