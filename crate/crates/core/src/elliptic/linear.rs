//! Sparse linear algebra for the potential solve.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMat, Triplet};
use faer::Col;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the assembled system is solved.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LinearMethod {
    /// Sparse LU with partial pivoting.
    Direct,
    /// Restarted GMRES, stopped as soon as the tolerance is met.
    Gmres { restart: usize, max_iters: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub method: LinearMethod,
    /// Bound on `‖AΦ − f‖₂ / ‖f‖₂` for the row-normalized system.
    pub rel_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { method: LinearMethod::Direct, rel_tol: 1e-10 }
    }
}

impl SolverOptions {
    pub fn gmres(rel_tol: f64) -> Self {
        Self { method: LinearMethod::Gmres { restart: 60, max_iters: 20_000 }, rel_tol }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolveStats {
    pub residual: f64,
    pub iterations: usize,
}

/// Row-wise sparse matrix with a right-hand side.
#[derive(Debug, Clone)]
pub(crate) struct SparseSystem {
    pub n: usize,
    pub rows: Vec<Vec<(usize, f64)>>,
    pub rhs: Vec<f64>,
}

impl SparseSystem {
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|r| r.iter().map(|&(k, v)| v * x[k]).sum()).collect()
    }

    pub fn residual(&self, x: &[f64]) -> Vec<f64> {
        self.matvec(x).iter().zip(&self.rhs).map(|(a, f)| f - a).collect()
    }

    pub fn relative_residual(&self, x: &[f64]) -> f64 {
        let r = norm(&self.residual(x));
        let f = norm(&self.rhs);
        if f > 0.0 {
            r / f
        } else {
            r
        }
    }

    fn to_faer(&self) -> Result<SparseColMat<usize, f64>> {
        let triplets: Vec<Triplet<usize, usize, f64>> = self
            .rows
            .iter()
            .enumerate()
            .flat_map(|(i, r)| r.iter().map(move |&(k, v)| Triplet::new(i, k, v)))
            .collect();
        SparseColMat::try_new_from_triplets(self.n, self.n, &triplets)
            .map_err(|e| Error::InvalidParameter(format!("sparse assembly failed: {e:?}")))
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// LU factors kept for repeated (and transposed) solves.
pub(crate) struct Factored {
    lu: Lu<usize, f64>,
}

impl Factored {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let rhs = Col::<f64>::from_fn(b.len(), |i| b[i]);
        let x = self.lu.solve(&rhs);
        (0..b.len()).map(|i| x[i]).collect()
    }

    pub fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        let rhs = Col::<f64>::from_fn(b.len(), |i| b[i]);
        let x = self.lu.solve_transpose(&rhs);
        (0..b.len()).map(|i| x[i]).collect()
    }
}

/// Sparse LU, reusing a symbolic analysis when one with the same pattern is cached.
pub(crate) fn factor(sys: &SparseSystem, cache: Option<&mut Option<SymbolicLu<usize>>>) -> Result<Factored> {
    let a = sys.to_faer()?;
    let fail = |e: String| Error::InvalidParameter(format!("sparse LU failed: {e}"));
    let symbolic = match cache {
        Some(slot) => {
            if slot.is_none() {
                *slot = Some(SymbolicLu::try_new(a.symbolic()).map_err(|e| fail(format!("{e:?}")))?);
            }
            slot.as_ref().cloned().expect("filled above")
        }
        None => SymbolicLu::try_new(a.symbolic()).map_err(|e| fail(format!("{e:?}")))?,
    };
    let lu = Lu::try_new_with_symbolic(symbolic, a.as_ref()).map_err(|e| fail(format!("{e:?}")))?;
    Ok(Factored { lu })
}

/// Direct solve with one step of iterative refinement if the residual is loose.
pub(crate) fn solve_direct(sys: &SparseSystem, f: &Factored, tol: f64) -> Result<(Vec<f64>, SolveStats)> {
    let mut x = f.solve(&sys.rhs);
    let mut iterations = 1;
    let mut res = sys.relative_residual(&x);
    if res > 1e-3 * tol {
        let dx = f.solve(&sys.residual(&x));
        for (xi, di) in x.iter_mut().zip(&dx) {
            *xi += di;
        }
        iterations += 1;
        res = sys.relative_residual(&x);
    }
    if !(res <= tol) {
        return Err(Error::SolverDivergence { residual: res, tol });
    }
    Ok((x, SolveStats { residual: res, iterations }))
}

/// Restarted GMRES from a zero initial guess.
pub(crate) fn solve_gmres(
    sys: &SparseSystem,
    tol: f64,
    restart: usize,
    max_iters: usize,
) -> Result<(Vec<f64>, SolveStats)> {
    let n = sys.n;
    let m = restart.max(1);
    let fnorm = norm(&sys.rhs);
    let mut x = vec![0.0; n];
    if fnorm == 0.0 {
        return Ok((x, SolveStats { residual: 0.0, iterations: 0 }));
    }
    let target = tol * fnorm;
    let mut total = 0;
    loop {
        let r = sys.residual(&x);
        let beta = norm(&r);
        if beta <= target {
            return Ok((x, SolveStats { residual: beta / fnorm, iterations: total }));
        }
        if total >= max_iters {
            return Err(Error::SolverDivergence { residual: beta / fnorm, tol });
        }
        let mut v: Vec<Vec<f64>> = vec![r.iter().map(|ri| ri / beta).collect()];
        let mut hmat = vec![vec![0.0; m]; m + 1];
        let mut cs = vec![0.0; m];
        let mut sn = vec![0.0; m];
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k_used = 0;
        for k in 0..m {
            let mut w = sys.matvec(&v[k]);
            for (i, vi) in v.iter().enumerate() {
                let hik: f64 = w.iter().zip(vi).map(|(a, b)| a * b).sum();
                hmat[i][k] = hik;
                for (wj, vj) in w.iter_mut().zip(vi) {
                    *wj -= hik * vj;
                }
            }
            let hn = norm(&w);
            hmat[k + 1][k] = hn;
            for i in 0..k {
                let t = cs[i] * hmat[i][k] + sn[i] * hmat[i + 1][k];
                hmat[i + 1][k] = -sn[i] * hmat[i][k] + cs[i] * hmat[i + 1][k];
                hmat[i][k] = t;
            }
            let denom = hmat[k][k].hypot(hmat[k + 1][k]);
            cs[k] = if denom > 0.0 { hmat[k][k] / denom } else { 1.0 };
            sn[k] = if denom > 0.0 { hmat[k + 1][k] / denom } else { 0.0 };
            hmat[k][k] = denom;
            hmat[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            total += 1;
            k_used = k + 1;
            if g[k + 1].abs() <= target || hn == 0.0 || total >= max_iters {
                break;
            }
            v.push(w.iter().map(|wi| wi / hn).collect());
        }
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let s: f64 = (i + 1..k_used).map(|j| hmat[i][j] * y[j]).sum();
            y[i] = (g[i] - s) / hmat[i][i];
        }
        for (j, yj) in y.iter().enumerate() {
            for (xi, vji) in x.iter_mut().zip(&v[j]) {
                *xi += yj * vji;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiag(n: usize) -> SparseSystem {
        let rows = (0..n)
            .map(|i| {
                let mut r = vec![(i, 2.5)];
                if i > 0 {
                    r.push((i - 1, -1.0));
                }
                if i + 1 < n {
                    r.push((i + 1, -1.2));
                }
                r
            })
            .collect();
        SparseSystem { n, rows, rhs: (0..n).map(|i| (i as f64).sin()).collect() }
    }

    #[test]
    fn direct_and_gmres_agree() {
        let sys = tridiag(50);
        let f = factor(&sys, None).unwrap();
        let (x, st) = solve_direct(&sys, &f, 1e-12).unwrap();
        assert!(st.residual < 1e-12);
        let (y, _) = solve_gmres(&sys, 1e-12, 10, 1000).unwrap();
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn transpose_solve() {
        let sys = tridiag(20);
        let f = factor(&sys, None).unwrap();
        let rhs: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let x = f.solve_transpose(&rhs);
        // Check Aᵀx = rhs.
        let mut at = vec![0.0; 20];
        for (i, r) in sys.rows.iter().enumerate() {
            for &(k, v) in r {
                at[k] += v * x[i];
            }
        }
        for (a, b) in at.iter().zip(&rhs) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn loose_gmres_stops_early() {
        let sys = tridiag(200);
        let (_, st) = solve_gmres(&sys, 1e-2, 5, 1000).unwrap();
        assert!(st.residual <= 1e-2 && st.residual > 1e-6);
    }
}
