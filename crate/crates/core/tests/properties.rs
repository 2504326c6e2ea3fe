use std::f64::consts::PI;

use proptest::prelude::*;

use bathy_core::certificate::tlog_formula;
use bathy_core::elliptic::{dno, solve_potential, Lateral, LateralTrace, SigmaMap, SolverOptions};
use bathy_core::geometry::{build_domain, decompose_interbottom, envelopes, fatness_of_region, l1_distance, split_surface};
use bathy_core::inversion::{invert, misfit, InversionOptions};
use bathy_core::waves::{measure, mother_grid, step_rk4, SimConfig, WaveState};
use bathy_core::{Error, Grid1D, ScalarField};

fn unit(n: usize) -> Grid1D {
    Grid1D::new(0.0, 1.0, n).unwrap()
}

/// `c0 + Σ c_k sin(kπx + k)` with three modes.
fn series(g: Grid1D, c: &[f64]) -> ScalarField {
    ScalarField::from_fn(g, |x| {
        c[0] + c[1..].iter().enumerate().map(|(k, a)| a * ((k + 1) as f64 * (PI * x + 1.0)).sin()).sum::<f64>()
    })
    .unwrap()
}

fn coeffs(scale: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-scale..scale, 4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn surface_split_partitions_the_nodes(a in coeffs(0.05), b in coeffs(0.05)) {
        let g = unit(41);
        let s = split_surface(&series(g, &a), &series(g, &b)).unwrap();
        for (x, y) in s.s1_mask.iter().zip(&s.s2_mask) {
            prop_assert!(x ^ y);
        }
    }

    #[test]
    fn component_areas_add_up_to_the_l1_distance(a in coeffs(0.1), b in coeffs(0.1)) {
        let g = unit(81);
        let (b1, b2) = (series(g, &a).map(|v| v - 1.0).unwrap(), series(g, &b).map(|v| v - 1.0).unwrap());
        let dec = decompose_interbottom(&b1, &b2).unwrap();
        let l1 = l1_distance(&b1, &b2).unwrap();
        // Crossings between nodes are resolved linearly; the trapezoid rule is not.
        let tol = 2.0 * g.spacing().powi(2) * (b1.max_abs() + b2.max_abs()) + 1e-12;
        prop_assert!((dec.total_area() - l1).abs() <= tol, "{} vs {l1}", dec.total_area());
    }

    #[test]
    fn envelopes_are_symmetric_and_idempotent(z in coeffs(0.05), z0 in coeffs(0.05), b in coeffs(0.1), b0 in coeffs(0.1)) {
        let g = unit(21);
        let (z, z0, b, b0) = (series(g, &z), series(g, &z0), series(g, &b), series(g, &b0));
        let (lo, hi) = envelopes(&z, &z0, &b, &b0).unwrap();
        let (lo2, hi2) = envelopes(&z0, &z, &b0, &b).unwrap();
        prop_assert_eq!(&lo, &lo2);
        prop_assert_eq!(&hi, &hi2);
        let (lo3, hi3) = envelopes(&lo, &lo, &hi, &hi).unwrap();
        prop_assert_eq!(lo3, lo);
        prop_assert_eq!(hi3, hi);
    }

    #[test]
    fn smaller_radii_keep_half_the_area(top in 0.2f64..1.0, tilt in -0.3f64..0.3, width in 0.5f64..2.0, f in 0.0f64..1.0) {
        let xs = [0.0, width];
        let (rho, fat, raster) = fatness_of_region(&xs, &[0.0, 0.0], &[top, top + tilt.max(-0.5 * top)], 0.01);
        prop_assert!(fat);
        prop_assert!(raster.eroded_area(f * rho) >= 0.5 * raster.area());
    }

    #[test]
    fn log_log_term_is_nonincreasing(x in 3.0f64..1e6, step in 1.0f64..100.0, s in 0.1f64..1.0) {
        let a = tlog_formula(1.0, s, 1.0, 1.0, x).unwrap();
        let b = tlog_formula(1.0, s, 1.0, 1.0, x * step).unwrap();
        prop_assert!(b <= a * (1.0 + 1e-14));
    }
}

fn wall_domain(bottom: &[f64], n: usize) -> bathy_core::geometry::FluidDomainSpec {
    let g = unit(n);
    build_domain(
        series(g, bottom).map(|v| v - 1.0).unwrap(),
        ScalarField::from_fn(g, |x| 0.02 * (PI * x).cos()).unwrap(),
        0.3,
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn solves_are_linear(bottom in coeffs(0.1), p1 in coeffs(1.0), p2 in coeffs(1.0), al in -2.0f64..2.0, be in -2.0f64..2.0) {
        let (n, ns) = (17, 9);
        let d = wall_domain(&bottom, n);
        let map = SigmaMap::new(d.clone(), ns).unwrap();
        let g = *d.grid();
        let (psi1, psi2) = (series(g, &p1), series(g, &p2));
        let t1 = LateralTrace::from_fn(&map, |x, _| psi1.get(if x < 0.5 { 0 } else { n - 1 }));
        let t2 = LateralTrace::from_fn(&map, |x, y| y * psi2.get(if x < 0.5 { 0 } else { n - 1 }));
        let opts = SolverOptions::default();
        let s1 = solve_potential(&d, &psi1, &Lateral::Walls(t1.clone()), ns, &opts).unwrap();
        let s2 = solve_potential(&d, &psi2, &Lateral::Walls(t2.clone()), ns, &opts).unwrap();
        let psi = psi1.zip_with(&psi2, |a, b| al * a + be * b).unwrap();
        let mix = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| al * x + be * y).collect::<Vec<_>>();
        let t = LateralTrace::new(mix(&t1.left, &t2.left), mix(&t1.right, &t2.right)).unwrap();
        let s = solve_potential(&d, &psi, &Lateral::Walls(t), ns, &opts).unwrap();
        let expected = mix(s1.values(), s2.values());
        let scale = 1.0 + expected.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (a, b) in s.values().iter().zip(&expected) {
            prop_assert!((a - b).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn dno_is_symmetric_with_homogeneous_walls(bottom in coeffs(0.1), a in coeffs(1.0), b in coeffs(1.0)) {
        let mut constants = Vec::new();
        for n in [33, 65] {
            // Bottom and surface meet the walls at right angles; other corners carry singularities.
            let g = unit(n);
            let floor = ScalarField::from_fn(g, |x| -1.0 + (1..4).map(|k| bottom[k] * (k as f64 * PI * x).cos()).sum::<f64>()).unwrap();
            let d = build_domain(floor, ScalarField::from_fn(g, |x| 0.02 * (PI * x).cos()).unwrap(), 0.3).unwrap();
            let mode = |c: &[f64]| ScalarField::from_fn(g, |x| (1..4).map(|k| c[k] * (k as f64 * PI * x).sin()).sum()).unwrap();
            let (p1, p2) = (mode(&a), mode(&b));
            let ns = (n + 1) / 2;
            let walls = Lateral::Walls(LateralTrace::constant(ns, 0.0));
            let opts = SolverOptions::default();
            let g1 = dno(&d, &p1, &walls, ns, &opts).unwrap();
            let g2 = dno(&d, &p2, &walls, ns, &opts).unwrap();
            let dot = |u: &ScalarField, v: &ScalarField| u.zip_with(v, |x, y| x * y).unwrap().integral();
            let scale = dot(&g1, &p1).abs().sqrt() * dot(&g2, &p2).abs().sqrt();
            prop_assume!(scale > 1e-6);
            constants.push((dot(&g1, &p2) - dot(&p1, &g2)).abs() / scale / g.spacing().powi(2));
        }
        // The same second-order constant bounds the defect on both meshes.
        prop_assert!(constants.iter().all(|&c| c <= 10.0), "{constants:?}");
    }

    #[test]
    fn interior_values_obey_the_maximum_principle(bottom in coeffs(0.1), p in coeffs(1.0)) {
        let (n, ns) = (33, 17);
        let d = wall_domain(&bottom, n);
        let map = SigmaMap::new(d.clone(), ns).unwrap();
        let psi = series(*d.grid(), &p);
        let walls = LateralTrace::from_fn(&map, |x, _| psi.get(if x < 0.5 { 0 } else { n - 1 }));
        let phi = solve_potential(&d, &psi, &Lateral::Walls(walls.clone()), ns, &SolverOptions::default()).unwrap();
        let dirichlet = psi.values().iter().chain(&walls.left).chain(&walls.right).fold(0.0f64, |m, v| m.max(v.abs()));
        let h = phi.mesh_size();
        for i in 1..n - 1 {
            for j in 0..ns - 1 {
                prop_assert!(phi.value(i, j).abs() <= dirichlet * (1.0 + 10.0 * h * h));
            }
        }
    }

    #[test]
    fn rest_is_a_fixed_point(bottom in coeffs(0.2)) {
        let g = Grid1D::new(0.0, 2.0, 17).unwrap();
        let b = ScalarField::from_fn(g, |x| -1.0 + bottom[1] * (PI * x).sin() + bottom[2] * (PI * x).cos()).unwrap();
        let cfg = SimConfig { n_sigma: 9, ..SimConfig::default() };
        let next = step_rk4(&WaveState::rest(g), &b, &cfg).unwrap();
        prop_assert!(next.zeta.max_abs() <= 1e-12 && next.psi.max_abs() <= 1e-12);
    }
}

/// Mother-domain snapshot observed on `[0, 1]` over a random bottom.
fn snapshot(bottom: &[f64], amplitude: f64) -> (bathy_core::waves::MeasurementTuple, ScalarField, SimConfig) {
    let window = unit(17);
    let mother = mother_grid(&window, 3).unwrap();
    let shape = |x: f64| -1.0 + bottom[1] * (2.0 * PI * x / 3.0).sin() + bottom[2] * (4.0 * PI * x / 3.0).cos();
    let b = ScalarField::from_fn(mother, shape).unwrap();
    let zeta = ScalarField::from_fn(mother, |x| 0.02 * (2.0 * PI * x / 3.0).cos()).unwrap();
    let psi = ScalarField::from_fn(mother, |x| amplitude * (2.0 * PI * x / 3.0 + bottom[3]).sin()).unwrap();
    let cfg = SimConfig { mother_domain_factor: 3, n_sigma: 9, h0: 0.3, ..SimConfig::default() };
    let m = measure(&[WaveState::new(zeta, psi, 0.0).unwrap()], 0.0, &b, &window, &cfg).unwrap();
    (m, ScalarField::from_fn(window, shape).unwrap(), cfg)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn measurement_is_deterministic_and_consistent(bottom in coeffs(0.15)) {
        let (m, b, cfg) = snapshot(&bottom, 1.0);
        let (again, _, _) = snapshot(&bottom, 1.0);
        prop_assert_eq!(m.dt_zeta.values(), again.dt_zeta.values());
        prop_assert_eq!(&m.theta, &again.theta);
        let d = build_domain(b, m.zeta.clone(), 0.3).unwrap();
        let g = dno(&d, &m.psi, &Lateral::Walls(m.theta.clone()), cfg.n_sigma, &cfg.solver).unwrap();
        // Walls use one-sided fluxes; the interior matches the periodic solve.
        for i in 1..g.len() - 1 {
            prop_assert!((g.get(i) - m.dt_zeta.get(i)).abs() <= 1e-9);
        }
    }

    #[test]
    fn constant_potential_hides_the_bottom(bottom in coeffs(0.15), c in -2.0f64..2.0, w in coeffs(0.2)) {
        let (mut m, truth, _) = snapshot(&bottom, 0.0);
        m.psi = ScalarField::constant(*m.grid(), c).unwrap();
        m.theta = LateralTrace::constant(m.n_sigma(), c);
        let opts = InversionOptions { alpha_reg: 0.0, ..InversionOptions::default() };
        let other = truth.zip_with(&series(*truth.grid(), &w), |a, d| a + 0.5 * d).unwrap();
        let f1 = misfit(&truth, &m, &m.theta, &opts).unwrap();
        let f2 = misfit(&other, &m, &m.theta, &opts).unwrap();
        prop_assert!((f1 - f2).abs() <= 1e-20);
    }

    #[test]
    fn iterates_stay_feasible(bottom in coeffs(0.15), dip in 0.0f64..0.3) {
        let (m, truth, _) = snapshot(&bottom, 1.0);
        let floor = 0.6;
        let opts = InversionOptions { max_iters: 15, depth_floor: floor, ..InversionOptions::default() };
        let n = truth.len();
        let mut v = vec![-1.0 - dip; n];
        v[0] = m.b_left;
        v[n - 1] = m.b_right;
        let start = ScalarField::new(*truth.grid(), v).unwrap();
        let res = match invert(&m, &m.theta, &start, &opts) {
            Ok(r) => r,
            Err(Error::LineSearchFailure { last, .. }) => *last,
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        prop_assert!(res.misfit_history.windows(2).all(|w| w[1] <= w[0]));
        prop_assert_eq!(res.b_est.get(0), m.b_left);
        prop_assert_eq!(res.b_est.get(n - 1), m.b_right);
        for i in 0..n {
            prop_assert!(m.zeta.get(i) - res.b_est.get(i) >= floor - 1e-12);
        }
    }
}
