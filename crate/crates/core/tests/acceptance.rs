//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

use std::f64::consts::PI;
use std::time::Instant;

use bathy_core::certificate::{
    epsilon_sweep, estimate_cbot, g2_to_g5, inequality_checks, lemma31_sides, random_configuration, random_pair,
    sample_rng, tbot, theorem46_report, ConfigConstants, PairConfiguration, SampleGrid, Verdict,
};
use bathy_core::elliptic::{
    dno, solve_potential, surface_traces, traces_from_measurements, Lateral, LateralTrace, PotentialField, SigmaMap,
    SolverOptions,
};
use bathy_core::geometry::{build_domain, fatness_of_region, l1_distance};
use bathy_core::inversion::{finite_difference_gradient, gradient, invert, l1_error, misfit, InversionOptions, InversionResult};
use bathy_core::waves::{measure, mother_grid, periodic_mean, MeasurementTuple, SimConfig, WaveModel, WaveState};
use bathy_core::Error;
use rand::Rng;
use rayon::prelude::*;
use bathy_core::{Grid1D, ScalarField};

fn report(id: u32, name: &str, pass: bool, detail: String) {
    println!("criterion {id:>2} [{}] {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {id} failed: {detail}");
}

fn sci(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn cosh_mode_error(n: usize) -> f64 {
    let (k, depth) = (PI, 1.0);
    let exact = |x: f64, y: f64| (k * (y + depth)).cosh() * (k * x).cos();
    let g = Grid1D::new(0.0, 1.0, n).unwrap();
    let d = build_domain(ScalarField::constant(g, -depth).unwrap(), ScalarField::constant(g, 0.0).unwrap(), 0.5).unwrap();
    let map = SigmaMap::new(d.clone(), n).unwrap();
    let psi = ScalarField::from_fn(g, |x| exact(x, 0.0)).unwrap();
    let phi = solve_potential(&d, &psi, &Lateral::Walls(LateralTrace::from_fn(&map, exact)), n, &SolverOptions::default()).unwrap();
    let wx = g.trapezoid_weights();
    let ws = Grid1D::new(0.0, 1.0, n).unwrap().trapezoid_weights();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            let y = map.y(i, map.sigma(j));
            let e = phi.value(i, j) - exact(g.x(i), y);
            s += wx[i] * ws[j] * depth * e * e;
        }
    }
    s.sqrt()
}

#[test]
fn criterion_01_elliptic_convergence() {
    let start = Instant::now();
    let ns = [33, 65, 129, 257];
    let errs: Vec<f64> = ns.iter().map(|&n| cosh_mode_error(n)).collect();
    let orders: Vec<f64> = errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let min_order = orders.iter().cloned().fold(f64::INFINITY, f64::min);
    let secs = start.elapsed().as_secs_f64();
    report(
        1,
        "elliptic convergence",
        min_order >= 1.7 && secs < 60.0,
        format!("errors {}, orders {orders:.3?}, {secs:.1} s", sci(&errs)),
    );
}

#[test]
fn criterion_02_dno_dispersion() {
    let n = 257;
    let k = 2.0 * PI;
    let g = Grid1D::new(0.0, 1.0, n).unwrap();
    let d = build_domain(ScalarField::constant(g, -1.0).unwrap(), ScalarField::constant(g, 0.0).unwrap(), 0.5).unwrap();
    let psi = ScalarField::from_fn(g, |x| (k * x).cos()).unwrap();
    let gp = dno(&d, &psi, &Lateral::Periodic, n, &SolverOptions::default()).unwrap();
    let exact = ScalarField::from_fn(g, |x| k * k.tanh() * (k * x).cos()).unwrap();
    let rel = gp.sub(&exact).unwrap().l2_norm() / exact.l2_norm();
    report(2, "DNO dispersion", rel < 0.01, format!("relative L2 error {rel:.3e} at n = {n}"));
}

fn standing_wave(n: usize, ns: usize, steps_per_period: usize, periods: f64) -> (Vec<WaveState>, f64) {
    let k = 2.0 * PI;
    let g = Grid1D::new(0.0, 1.0, n).unwrap();
    let b = ScalarField::constant(g, -1.0).unwrap();
    let period = 2.0 * PI / (9.81 * k * k.tanh()).sqrt();
    let dt = period / steps_per_period as f64;
    let cfg = SimConfig { dt, t_end: periods * period, n_sigma: ns, h0: 0.5, ..SimConfig::default() };
    let init = WaveState::new(
        ScalarField::from_fn(g, |x| 1e-4 * (k * x).cos()).unwrap(),
        ScalarField::constant(g, 0.0).unwrap(),
        0.0,
    )
    .unwrap();
    let traj = WaveModel::new(b, cfg).unwrap().simulate(init).unwrap();
    (traj, period)
}

/// Period from the downward and upward zero crossings of ζ at X = 0.
fn measured_period(traj: &[WaveState]) -> f64 {
    let mut crossings = Vec::new();
    for w in traj.windows(2) {
        let (a, b) = (w[0].zeta.get(0), w[1].zeta.get(0));
        if a != 0.0 && a.signum() != b.signum() {
            crossings.push(w[0].t + (w[1].t - w[0].t) * a / (a - b));
        }
    }
    2.0 * (crossings[1] - crossings[0])
}

#[test]
fn criterion_10_forward_dynamics() {
    let start = Instant::now();
    // Rest state over 1000 steps.
    let g = Grid1D::new(0.0, 1.0, 33).unwrap();
    let b = ScalarField::from_fn(g, |x| -1.0 + 0.1 * (2.0 * PI * x).cos()).unwrap();
    let cfg = SimConfig { dt: 1e-3, t_end: 1.0, n_sigma: 17, ..SimConfig::default() };
    let rest = WaveModel::new(b, cfg).unwrap().simulate(WaveState::rest(g)).unwrap();
    let rest_max = rest.iter().map(|s| s.zeta.max_abs().max(s.psi.max_abs())).fold(0.0, f64::max);
    let rest_ok = rest.len() == 1001 && rest_max <= 1e-12;

    let (traj, period) = standing_wave(65, 65, 64, 1.25);
    let drift = traj
        .windows(2)
        .map(|w| (periodic_mean(&w[1].zeta) - periodic_mean(&w[0].zeta)).abs())
        .fold(0.0, f64::max);
    let t_meas = measured_period(&traj);
    let period_err = (t_meas - period).abs() / period;
    let min_depth_margin = traj.iter().map(|s| s.zeta.min() + 1.0).fold(f64::INFINITY, f64::min);

    // Temporal order against a fine-step reference on the same spatial grid.
    let at_period = |steps: usize| {
        let (t, _) = standing_wave(33, 17, steps, 1.0);
        t.last().unwrap().zeta.clone()
    };
    let reference = at_period(256);
    let e1 = at_period(16).sub(&reference).unwrap().l2_norm();
    let e2 = at_period(32).sub(&reference).unwrap().l2_norm();
    let order = (e1 / e2).log2();
    let secs = start.elapsed().as_secs_f64();
    let pass = rest_ok && drift <= 1e-10 && period_err < 0.02 && order >= 3.5 && min_depth_margin >= 0.5 && secs < 300.0;
    report(
        10,
        "forward dynamics",
        pass,
        format!(
            "rest max {rest_max:.1e}; mean drift/step {drift:.1e}; period {t_meas:.5} vs {period:.5} ({:.2}%); RK4 order {order:.2}; {secs:.1} s",
            100.0 * period_err
        ),
    );
}

const SUITE_SEED: u64 = 2024;
const SUITE_GRID: SampleGrid = SampleGrid { n: 65, n_sigma: 33 };

fn random_configurations(count: usize) -> Vec<PotentialField> {
    let mut rng = sample_rng(SUITE_SEED);
    (0..count).map(|_| random_configuration(&mut rng, SUITE_GRID).unwrap()).collect()
}

fn random_pairs(count: usize) -> Vec<PairConfiguration> {
    let mut rng = sample_rng(SUITE_SEED + 1);
    (0..count).map(|_| random_pair(&mut rng, SUITE_GRID).unwrap()).collect()
}

#[test]
fn criterion_03_measurement_identities() {
    let mut worst = 0.0f64;
    for phi in random_configurations(10) {
        let tr = surface_traces(&phi);
        let slope = phi.surface_slope();
        // Unit normal derivative from the conservative surface flux.
        let normal = ScalarField::new(
            *phi.grid(),
            phi.dno().values().iter().zip(slope).map(|(g, s)| g / (1.0 + s * s).sqrt()).collect(),
        )
        .unwrap();
        let zeta = phi.sigma_map().domain().surface();
        let (dy, gx) = traces_from_measurements(&tr.phi_on_surface, zeta, &normal).unwrap();
        let scale = tr.grad_x_on_surface.max_abs().max(tr.dy_on_surface.max_abs());
        let h = phi.mesh_size();
        let err = dy.sub(&tr.dy_on_surface).unwrap().max_abs().max(gx.sub(&tr.grad_x_on_surface).unwrap().max_abs());
        worst = worst.max(err / (5.0 * h * h * scale));
    }
    report(3, "measurement identities", worst <= 1.0, format!("worst error / (5 h² scale) = {worst:.3} over 10 configurations"));
}

#[test]
fn criterion_04_green_identity() {
    let (mut green, mut flux) = (0.0f64, 0.0f64);
    for phi in random_configurations(10) {
        let r = phi.green_report();
        let h = phi.mesh_size();
        green = green.max(r.green_defect().abs() / (10.0 * h * h * r.energy));
        flux = flux.max(r.flux_balance.abs() / (10.0 * h * h * r.flux_scale));
    }
    report(
        4,
        "Green identity and flux balance",
        green <= 1.0 && flux <= 1.0,
        format!("worst defect / (10 h² scale): Green {green:.3}, flux {flux:.3}"),
    );
}

#[test]
fn criterion_05_energy_inequality() {
    let sides: Vec<_> = random_pairs(20).iter().map(|p| lemma31_sides(p).unwrap()).collect();
    let violations = sides.iter().filter(|s| !s.holds()).count();
    let worst = sides.iter().map(|s| s.margin() / s.tol).fold(f64::INFINITY, f64::min);
    report(
        5,
        "energy inequality between bottoms",
        violations == 0,
        format!("{violations} violations in 20 pairs; smallest margin / tol = {worst:.2}"),
    );
}

#[test]
fn criterion_06_trace_and_measurement_bounds() {
    let mut failed = Vec::new();
    let mut worst = f64::INFINITY;
    let mut count = 0;
    for (k, pair) in random_pairs(20).iter().enumerate() {
        for c in inequality_checks(pair).unwrap() {
            count += 1;
            worst = worst.min(c.margin());
            if !c.holds() {
                failed.push(format!("pair {k}: {}", c.name));
            }
        }
    }
    report(
        6,
        "nine trace and measurement bounds",
        failed.is_empty() && count == 180,
        format!("{count} checks, failures {failed:?}, smallest margin {worst:.3e}"),
    );
}

#[test]
fn criterion_07_identical_pair_zeros() {
    let mut worst = 0.0f64;
    for phi in random_configurations(3) {
        let pair = PairConfiguration::new(phi.clone(), phi, 0.3).unwrap();
        let l = lemma31_sides(&pair).unwrap();
        let g = g2_to_g5(&pair).unwrap();
        for v in [g.g1, g.g2, g.g3, g.g4, g.g5, tbot(&pair).unwrap(), l.lhs, l.rhs] {
            worst = worst.max(v.abs());
        }
    }
    report(7, "identical-pair zeros", worst <= 1e-12, format!("largest term {worst:.1e}"));
}

/// `φ = X` on `[0, 1]` over a flat bottom.
fn linear_potential(depth: f64, n: usize, ns: usize) -> PotentialField {
    let g = Grid1D::new(0.0, 1.0, n).unwrap();
    let d = build_domain(ScalarField::constant(g, -depth).unwrap(), ScalarField::constant(g, 0.0).unwrap(), 0.2).unwrap();
    let psi = ScalarField::from_fn(g, |x| x).unwrap();
    let walls = LateralTrace::new(vec![0.0; ns], vec![1.0; ns]).unwrap();
    solve_potential(&d, &psi, &Lateral::Walls(walls), ns, &SolverOptions::default()).unwrap()
}

#[test]
fn criterion_08_size_estimate_oracle() {
    let pair = PairConfiguration::new(linear_potential(0.8, 65, 33), linear_potential(1.0, 65, 33), 0.2).unwrap();
    let cb = estimate_cbot(&pair).unwrap();
    let c = &cb.components[0];
    let identity_err = (c.region_energy - c.area).abs();
    let measured = lemma31_sides(&pair).unwrap().lhs;
    let l1 = l1_distance(pair.bottom(), pair.bottom0()).unwrap();
    let bound = cb.cbot * l1 * pair.phi0().total_energy();
    report(
        8,
        "size-estimate oracle",
        cb.components.len() == 1 && identity_err <= 1e-6 && bound <= measured,
        format!(
            "energy {:.9} vs area {:.9} (error {identity_err:.1e}); bound {bound:.4e} <= measured {measured:.4e}",
            c.region_energy, c.area
        ),
    );
}

#[test]
fn criterion_09_fatness_oracle() {
    let mut details = Vec::new();
    let mut pass = true;
    for side in [1.0, 0.5, 0.2] {
        let (rho, fat, raster) = fatness_of_region(&[0.0, side], &[0.0, 0.0], &[side, side], side / 256.0);
        let exact = (1.0 - std::f64::consts::FRAC_1_SQRT_2) * side / 2.0;
        pass &= fat && (rho - exact).abs() <= raster.pixel;
        details.push(format!("L = {side}: {rho:.5} vs {exact:.5} (pixel {:.1e})", raster.pixel));
    }
    report(9, "fatness oracle", pass, details.join("; "));
}

#[test]
fn criterion_12_certificate_trend() {
    let constants = ConfigConstants::default();
    let sweep = epsilon_sweep(&[1e-1, 1e-2, 1e-3], SUITE_GRID, &constants).unwrap();
    // An unbounded right-hand side counts as +∞.
    let rhs: Vec<f64> = sweep.iter().map(|(_, r)| r.rhs.unwrap_or(f64::INFINITY)).collect();
    let monotone = rhs.windows(2).all(|w| w[1] <= w[0]);
    let sweep_ok = sweep.iter().all(|(_, r)| r.verdict != Verdict::Violated);
    let verdicts: Vec<Verdict> = random_pairs(20).iter().map(|p| theorem46_report(p, &constants).unwrap().verdict).collect();
    let violated = verdicts.iter().filter(|v| **v == Verdict::Violated).count();
    let sweep_verdicts: Vec<Verdict> = sweep.iter().map(|(_, r)| r.verdict).collect();
    report(
        12,
        "certificate trend",
        monotone && sweep_ok && violated == 0,
        format!("sweep RHS {} verdicts {sweep_verdicts:?}; {violated} VIOLATED in 20 random pairs", sci(&rhs)),
    );
}

fn bump_truth(x: f64) -> f64 {
    -1.0 + 0.2 * (-50.0 * (x - 0.5).powi(2)).exp()
}

/// Shallow snapshot over the bump bottom, observed on `[0, 1]`; `amplitude = 0`
/// gives still water.
fn bump_snapshot(n: usize, n_sigma: usize, amplitude: f64) -> (MeasurementTuple, ScalarField) {
    let factor = 4;
    let window = Grid1D::new(0.0, 1.0, n).unwrap();
    let mother = mother_grid(&window, factor).unwrap();
    let b = ScalarField::from_fn(mother, bump_truth).unwrap();
    let zeta = ScalarField::from_fn(mother, |x| -0.6 + 0.01 * (2.0 * PI * x / 4.0).cos()).unwrap();
    let psi = ScalarField::from_fn(mother, |x| amplitude * (2.0 * PI * (x - 0.5) / 4.0).sin()).unwrap();
    let config = SimConfig { mother_domain_factor: factor, n_sigma, h0: 0.1, ..SimConfig::default() };
    let m = measure(&[WaveState::new(zeta, psi, 0.0).unwrap()], 0.0, &b, &window, &config).unwrap();
    (m, ScalarField::from_fn(window, bump_truth).unwrap())
}

fn pinned_flat(m: &MeasurementTuple) -> ScalarField {
    let n = m.grid().n_nodes();
    let mut v = vec![-1.0; n];
    v[0] = m.b_left;
    v[n - 1] = m.b_right;
    ScalarField::new(*m.grid(), v).unwrap()
}

fn run_inversion(m: &MeasurementTuple, opts: &InversionOptions) -> InversionResult {
    match invert(m, &m.theta, &pinned_flat(m), opts) {
        Ok(r) => r,
        Err(Error::LineSearchFailure { last, .. }) => *last,
        Err(e) => panic!("inversion failed: {e}"),
    }
}

#[test]
fn criterion_11_inversion() {
    let start = Instant::now();
    let (m, truth) = bump_snapshot(129, 17, 100.0);
    let opts = InversionOptions::default();
    let bump_size = l1_error(&truth, &ScalarField::constant(*truth.grid(), -1.0).unwrap()).unwrap();

    let clean = run_inversion(&m, &opts);
    let rel = l1_error(&clean.b_est, &truth).unwrap() / bump_size;

    // Per-node adjoint vs central differences on a random smooth candidate.
    let mut rng = sample_rng(SUITE_SEED + 2);
    let coeffs: Vec<f64> = (1..=6).map(|k| rng.random_range(-0.05..0.05) / k as f64).collect();
    let wobble = |x: f64| coeffs.iter().enumerate().map(|(k, c)| c * ((k + 1) as f64 * PI * x).sin()).sum::<f64>();
    let flat = pinned_flat(&m);
    let last = flat.len() - 1;
    let cand = flat.zip_with(&ScalarField::from_fn(*m.grid(), wobble).unwrap(), |a, w| a + w).unwrap();
    let adj = gradient(&cand, &m, &m.theta, &opts).unwrap();
    let fd = finite_difference_gradient(&cand, &m, &m.theta, &opts).unwrap();
    let fd_err = (1..last)
        .map(|i| (adj.get(i) - fd.get(i)).abs() / fd.get(i).abs())
        .fold(0.0, f64::max);

    // Noise sweep with one fixed pattern, scaled by δ·max|∂_tζ|.
    let xi: Vec<f64> = (0..m.dt_zeta.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let peak = m.dt_zeta.max_abs();
    let noisy: Vec<f64> = [1e-4, 1e-3, 1e-2]
        .par_iter()
        .map(|&delta| {
            let mut mn = m.clone();
            let v: Vec<f64> = m.dt_zeta.values().iter().zip(&xi).map(|(d, e)| d + delta * peak * e).collect();
            mn.dt_zeta = ScalarField::new(*m.grid(), v).unwrap();
            l1_error(&run_inversion(&mn, &opts).b_est, &truth).unwrap() / bump_size
        })
        .collect();
    let noise_ok = noisy.windows(2).all(|w| w[1] >= w[0]);

    // Still water: the misfit does not see the bottom.
    let (mut still, _) = bump_snapshot(129, 17, 0.0);
    still.psi = ScalarField::constant(*still.grid(), 0.7).unwrap();
    still.theta = LateralTrace::constant(still.n_sigma(), 0.7);
    let bare = InversionOptions { alpha_reg: 0.0, ..opts };
    let values: Vec<f64> = (0..5)
        .map(|_| {
            let mut v = pinned_flat(&still).into_values();
            for x in &mut v[1..last] {
                *x += rng.random_range(-0.2..0.2);
            }
            misfit(&ScalarField::new(*still.grid(), v).unwrap(), &still, &still.theta, &bare).unwrap()
        })
        .collect();
    let spread = values.iter().copied().fold(0.0, f64::max) - values.iter().copied().fold(f64::INFINITY, f64::min);
    let flat_ok = spread <= 1e-20;

    let secs = start.elapsed().as_secs_f64();
    let pass = rel <= 0.05 && fd_err <= 1e-4 && noise_ok && flat_ok && secs < 600.0;
    report(
        11,
        "inversion",
        pass,
        format!(
            "bump L1 error {:.2}% ({} iterations, converged {}); adjoint vs FD {fd_err:.1e}; noise sweep errors {}; still-water misfit spread {spread:.1e}; {secs:.1} s",
            100.0 * rel,
            clean.iterations,
            clean.converged,
            sci(&noisy)
        ),
    );
}
