//! Seeded smooth configurations on the unit window, for randomized checks and sweeps.

use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{solve_window, theorem46_report, CertificateReport, ConfigConstants, PairConfiguration};
use crate::elliptic::{PotentialField, SolverOptions};
use crate::error::Result;
use crate::grid::Grid1D;

/// Window `[0, 1]` inside a periodic domain of length 3.
const FACTOR: usize = 3;
const PERIOD: f64 = 3.0;
/// Wavelengths down to the window length.
const MODES: usize = 3;

/// Depth floor used for every sampled configuration.
pub const SAMPLE_H0: f64 = 0.3;

/// Resolution of sampled configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleGrid {
    /// Window nodes; `n − 1` must be even.
    pub n: usize,
    pub n_sigma: usize,
}

impl Default for SampleGrid {
    fn default() -> Self {
        Self { n: 33, n_sigma: 17 }
    }
}

/// Trigonometric polynomial with the period of the outer domain.
#[derive(Debug, Clone, PartialEq)]
struct Trig {
    mean: f64,
    coeffs: [(f64, f64); MODES],
}

impl Trig {
    fn random(rng: &mut impl Rng, mean: f64, amplitude: f64) -> Self {
        let mut coeffs = [(0.0, 0.0); MODES];
        for (k, c) in coeffs.iter_mut().enumerate() {
            let a = amplitude / ((k + 1) * (k + 1)) as f64;
            *c = (rng.random_range(-a..a), rng.random_range(-a..a));
        }
        Self { mean, coeffs }
    }

    fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().enumerate().fold(self.mean, |acc, (k, (a, b))| {
            let w = 2.0 * PI * (k + 1) as f64 * x / PERIOD;
            acc + a * w.cos() + b * w.sin()
        })
    }

    fn plus(&self, other: &Trig) -> Trig {
        let mut coeffs = self.coeffs;
        for (c, o) in coeffs.iter_mut().zip(other.coeffs) {
            *c = (c.0 + o.0, c.1 + o.1);
        }
        Trig { mean: self.mean + other.mean, coeffs }
    }
}

#[derive(Debug, Clone)]
struct Profiles {
    bottom: Trig,
    surface: Trig,
    psi: Trig,
}

impl Profiles {
    fn random(rng: &mut impl Rng) -> Self {
        Self {
            bottom: Trig::random(rng, -1.0, 0.1),
            surface: Trig::random(rng, 0.0, 0.02),
            psi: Trig::random(rng, 0.0, 1.0),
        }
    }

    fn perturbed(&self, rng: &mut impl Rng) -> Self {
        Self {
            bottom: self.bottom.plus(&Trig::random(rng, 0.0, 0.06)),
            surface: self.surface.plus(&Trig::random(rng, 0.0, 0.01)),
            psi: self.psi.plus(&Trig::random(rng, 0.0, 0.1)),
        }
    }

    fn solve(&self, grid: SampleGrid, options: &SolverOptions) -> Result<PotentialField> {
        let window = Grid1D::new(0.0, 1.0, grid.n)?;
        solve_window(
            &window,
            FACTOR,
            |x| self.bottom.eval(x),
            |x| self.surface.eval(x),
            |x| self.psi.eval(x),
            SAMPLE_H0,
            grid.n_sigma,
            options,
        )
    }
}

/// Generator of the randomized checks.
pub fn sample_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// One smooth configuration with wall data taken from a periodic outer solve.
pub fn random_configuration(rng: &mut impl Rng, grid: SampleGrid) -> Result<PotentialField> {
    random_configuration_with(rng, grid, &SolverOptions::default())
}

pub fn random_configuration_with(rng: &mut impl Rng, grid: SampleGrid, options: &SolverOptions) -> Result<PotentialField> {
    Profiles::random(rng).solve(grid, options)
}

/// Two nearby configurations: the second perturbs bottom, surface and potential
/// of the first.
pub fn random_pair(rng: &mut impl Rng, grid: SampleGrid) -> Result<PairConfiguration> {
    random_pair_with(rng, grid, &SolverOptions::default())
}

pub fn random_pair_with(rng: &mut impl Rng, grid: SampleGrid, options: &SolverOptions) -> Result<PairConfiguration> {
    let first = Profiles::random(rng);
    let second = first.perturbed(rng);
    PairConfiguration::new(first.solve(grid, options)?, second.solve(grid, options)?, SAMPLE_H0)
}

/// Pair at fixed bottoms where the first surface potential is `(1 + ε)·ψ0`; the
/// first bottom is the deeper one.
pub fn epsilon_pair(epsilon: f64, grid: SampleGrid) -> Result<PairConfiguration> {
    let psi0 = |x: f64| (2.0 * PI * x / PERIOD).cos() + 0.5 * (4.0 * PI * x / PERIOD).sin();
    let surface = |x: f64| 0.02 * (2.0 * PI * x / PERIOD).sin();
    let bump = |x: f64| 0.15 * (-((x - 0.5) / 0.15).powi(2)).exp();
    let window = Grid1D::new(0.0, 1.0, grid.n)?;
    let opts = SolverOptions::default();
    let phi = solve_window(&window, FACTOR, |_| -1.0, surface, |x| (1.0 + epsilon) * psi0(x), SAMPLE_H0, grid.n_sigma, &opts)?;
    let phi0 = solve_window(&window, FACTOR, |x| -1.0 + bump(x), surface, psi0, SAMPLE_H0, grid.n_sigma, &opts)?;
    PairConfiguration::new(phi, phi0, SAMPLE_H0)
}

/// Certificate reports along the perturbation family, in the order given.
pub fn epsilon_sweep(
    epsilons: &[f64],
    grid: SampleGrid,
    constants: &ConfigConstants,
) -> Result<Vec<(f64, CertificateReport)>> {
    epsilons
        .par_iter()
        .map(|&eps| Ok((eps, theorem46_report(&epsilon_pair(eps, grid)?, constants)?)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampling_is_reproducible() {
        let a = Profiles::random(&mut sample_rng(7));
        let b = Profiles::random(&mut sample_rng(7));
        assert_eq!(a.bottom, b.bottom);
        assert_eq!(a.psi, b.psi);
        assert_ne!(Profiles::random(&mut sample_rng(8)).psi, a.psi);
    }

    #[test]
    fn trig_is_periodic_and_bounded() {
        let t = Trig::random(&mut sample_rng(1), -1.0, 0.1);
        for x in [0.0, 0.3, 0.77] {
            assert!((t.eval(x) - t.eval(x + PERIOD)).abs() < 1e-12);
            assert!((t.eval(x) + 1.0).abs() < 0.1 * 1.3612 * 2f64.sqrt());
        }
    }

    #[test]
    fn random_pairs_are_admissible() {
        let mut rng = sample_rng(3);
        for _ in 0..3 {
            let pair = random_pair(&mut rng, SampleGrid::default()).unwrap();
            assert!(pair.surface_gap() <= 0.5 * SAMPLE_H0);
        }
    }
}
