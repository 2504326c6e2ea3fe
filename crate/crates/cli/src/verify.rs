//! Built-in oracle checks at the configured resolution and solver.

use std::f64::consts::PI;

use rand::Rng;
use serde_json::json;

use bathy_core::certificate::{
    inequality_checks, lemma31_sides, random_configuration_with, random_pair_with, sample_rng, PairConfiguration,
    SampleGrid,
};
use bathy_core::elliptic::{
    dno, solve_potential, surface_traces, traces_from_measurements, Lateral, LateralTrace, PotentialField, SigmaMap,
    SolverOptions,
};
use bathy_core::geometry::build_domain;
use bathy_core::inversion::{finite_difference_gradient, gradient, InversionOptions};
use bathy_core::io::write_json;
use bathy_core::waves::{measure, mother_grid, SimConfig, WaveState};
use bathy_core::{Grid1D, ScalarField};

use crate::commands::{Context, RNG_NAME};
use crate::error::{CliError, CliResult};

/// Below these resolutions the h² tolerances are not in their asymptotic range.
const COARSE: (usize, usize) = (17, 9);

struct Outcome {
    pass: bool,
    detail: String,
}

type Check<'a> = (&'static str, Box<dyn Fn() -> CliResult<Outcome> + 'a>);

fn outcome(pass: bool, detail: String) -> CliResult<Outcome> {
    Ok(Outcome { pass, detail })
}

/// L² error of the solve against `cosh(k(y + 1)) cos(kX)` on `n × n_sigma`.
fn cosh_mode_error(n: usize, n_sigma: usize, opts: &SolverOptions) -> CliResult<f64> {
    let k = PI;
    let exact = |x: f64, y: f64| (k * (y + 1.0)).cosh() * (k * x).cos();
    let g = Grid1D::new(0.0, 1.0, n)?;
    let d = build_domain(ScalarField::constant(g, -1.0)?, ScalarField::constant(g, 0.0)?, 0.5)?;
    let map = SigmaMap::new(d.clone(), n_sigma)?;
    let psi = ScalarField::from_fn(g, |x| exact(x, 0.0))?;
    let phi = solve_potential(&d, &psi, &Lateral::Walls(LateralTrace::from_fn(&map, exact)), n_sigma, opts)?;
    let wx = g.trapezoid_weights();
    let ws = Grid1D::new(0.0, 1.0, n_sigma)?.trapezoid_weights();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n_sigma {
            let e = phi.value(i, j) - exact(g.x(i), map.y(i, map.sigma(j)));
            s += wx[i] * ws[j] * e * e;
        }
    }
    Ok(s.sqrt())
}

fn manufactured(n: usize, ns: usize, opts: &SolverOptions) -> CliResult<Outcome> {
    let coarse = cosh_mode_error(n, ns, opts)?;
    let fine = cosh_mode_error(2 * n - 1, 2 * ns - 1, opts)?;
    let order = (coarse / fine).log2();
    outcome(order >= 1.7, format!("errors {coarse:.3e} -> {fine:.3e}, order {order:.2}"))
}

fn dispersion(n: usize, ns: usize, opts: &SolverOptions) -> CliResult<Outcome> {
    let k = 2.0 * PI;
    let g = Grid1D::new(0.0, 1.0, n)?;
    let d = build_domain(ScalarField::constant(g, -1.0)?, ScalarField::constant(g, 0.0)?, 0.5)?;
    let psi = ScalarField::from_fn(g, |x| (k * x).cos())?;
    let gp = dno(&d, &psi, &Lateral::Periodic, ns, opts)?;
    let exact = ScalarField::from_fn(g, |x| k * k.tanh() * (k * x).cos())?;
    let rel = gp.sub(&exact)?.l2_norm() / exact.l2_norm();
    let h = g.spacing().max(1.0 / (ns - 1) as f64);
    // Second-order error constant of the k = 2π mode.
    let tol = 0.01f64.max(10.0 * h * h);
    outcome(rel <= tol, format!("relative error {rel:.3e} (tol {tol:.1e})"))
}

fn identities(configs: &[PotentialField]) -> CliResult<Outcome> {
    let mut worst = 0.0f64;
    for phi in configs {
        let tr = surface_traces(phi);
        let slope = phi.surface_slope();
        let normal = ScalarField::new(
            *phi.grid(),
            phi.dno().values().iter().zip(slope).map(|(g, s)| g / (1.0 + s * s).sqrt()).collect(),
        )?;
        let (dy, gx) = traces_from_measurements(&tr.phi_on_surface, phi.sigma_map().domain().surface(), &normal)?;
        let scale = tr.grad_x_on_surface.max_abs().max(tr.dy_on_surface.max_abs());
        let h = phi.mesh_size();
        let err = dy.sub(&tr.dy_on_surface)?.max_abs().max(gx.sub(&tr.grad_x_on_surface)?.max_abs());
        worst = worst.max(err / (5.0 * h * h * scale));
    }
    outcome(worst <= 1.0, format!("worst error / (5 h² scale) = {worst:.3}"))
}

fn green(configs: &[PotentialField]) -> CliResult<Outcome> {
    let (mut g, mut f) = (0.0f64, 0.0f64);
    for phi in configs {
        let r = phi.green_report();
        let h2 = phi.mesh_size().powi(2);
        g = g.max(r.green_defect().abs() / (10.0 * h2 * r.energy));
        f = f.max(r.flux_balance.abs() / (10.0 * h2 * r.flux_scale));
    }
    outcome(g <= 1.0 && f <= 1.0, format!("worst defect / (10 h² scale): Green {g:.3}, flux {f:.3}"))
}

fn energy_inequality(pairs: &[PairConfiguration]) -> CliResult<Outcome> {
    let mut worst = f64::INFINITY;
    let mut violations = 0;
    for p in pairs {
        let s = lemma31_sides(p)?;
        violations += usize::from(!s.holds());
        worst = worst.min(s.margin() / s.tol);
    }
    outcome(violations == 0, format!("{violations} violations; smallest margin / tol {worst:.2}"))
}

fn bounds(pairs: &[PairConfiguration]) -> CliResult<Outcome> {
    let mut failed = Vec::new();
    let mut count = 0;
    for (k, p) in pairs.iter().enumerate() {
        for c in inequality_checks(p)? {
            count += 1;
            if !c.holds() {
                failed.push(format!("pair {k} {}", c.name));
            }
        }
    }
    let detail = if failed.is_empty() { format!("{count} inequalities hold") } else { failed.join("; ") };
    outcome(failed.is_empty(), detail)
}

/// Adjoint gradient against central differences on a shallow bump snapshot.
fn gradient_check(seed: u64, opts: &SolverOptions) -> CliResult<Outcome> {
    let (n, ns, factor) = (33, 9, 4);
    let window = Grid1D::new(0.0, 1.0, n)?;
    let mother = mother_grid(&window, factor)?;
    let bump = |x: f64| -1.0 + 0.2 * (-50.0 * (x - 0.5) * (x - 0.5)).exp();
    let b = ScalarField::from_fn(mother, bump)?;
    let zeta = ScalarField::from_fn(mother, |x| -0.6 + 0.01 * (PI * x / 2.0).cos())?;
    let psi = ScalarField::from_fn(mother, |x| 100.0 * (PI * (x - 0.5) / 2.0).sin())?;
    let cfg = SimConfig { mother_domain_factor: factor, n_sigma: ns, h0: 0.1, solver: *opts, ..SimConfig::default() };
    let m = measure(&[WaveState::new(zeta, psi, 0.0)?], 0.0, &b, &window, &cfg)?;

    let mut rng = sample_rng(seed);
    let coeffs: Vec<f64> = (1..=4).map(|k| rng.random_range(-0.05..0.05) / k as f64).collect();
    let mut v = vec![-1.0; n];
    for (i, x) in window.nodes().iter().enumerate().take(n - 1).skip(1) {
        v[i] += coeffs.iter().enumerate().map(|(k, c)| c * ((k + 1) as f64 * PI * x).sin()).sum::<f64>();
    }
    v[0] = m.b_left;
    v[n - 1] = m.b_right;
    let cand = ScalarField::new(window, v)?;
    let iopts = InversionOptions::default();
    let adj = gradient(&cand, &m, &m.theta, &iopts)?;
    let fd = finite_difference_gradient(&cand, &m, &m.theta, &iopts)?;
    let rel = (1..n - 1).map(|i| (adj.get(i) - fd.get(i)).abs() / fd.get(i).abs()).fold(0.0, f64::max);
    outcome(rel <= 1e-4, format!("max relative difference {rel:.2e}"))
}

/// Runs `check` on sampled inputs; a failed sampling fails the check.
fn on<T>(sampled: &CliResult<Vec<T>>, check: fn(&[T]) -> CliResult<Outcome>) -> CliResult<Outcome> {
    match sampled {
        Ok(v) => check(v),
        Err(e) => outcome(false, format!("sampling failed: {e}")),
    }
}

pub fn verify(ctx: &Context) -> CliResult<()> {
    let c = &ctx.cfg;
    let (n, ns) = (c.grid.n_nodes, c.grid.n_sigma);
    let opts = c.solver();
    let seed = c.certificate.seed;
    let samples = c.certificate.samples.max(1);
    if n < COARSE.0 || ns < COARSE.1 {
        eprintln!("warning: {n} x {ns} nodes is below the asymptotic range; h² tolerances may not be met");
    }
    let grid = SampleGrid { n, n_sigma: ns };
    let configs = || -> CliResult<Vec<PotentialField>> {
        let mut rng = sample_rng(seed);
        (0..samples).map(|_| Ok(random_configuration_with(&mut rng, grid, &opts)?)).collect()
    };
    let pairs = || -> CliResult<Vec<PairConfiguration>> {
        let mut rng = sample_rng(seed + 1);
        (0..samples).map(|_| Ok(random_pair_with(&mut rng, grid, &opts)?)).collect()
    };
    let configs = configs();
    let pairs = pairs();

    let checks: Vec<Check> = vec![
        ("manufactured harmonic", Box::new(|| manufactured(n, ns, &opts))),
        ("DNO dispersion", Box::new(|| dispersion(n, ns, &opts))),
        ("surface-trace identities", Box::new(|| on(&configs, identities))),
        ("Green identity and flux", Box::new(|| on(&configs, green))),
        ("energy inequality", Box::new(|| on(&pairs, energy_inequality))),
        ("trace and measurement bounds", Box::new(|| on(&pairs, bounds))),
        ("adjoint gradient", Box::new(|| gradient_check(seed + 2, &opts))),
    ];

    let mut rows = Vec::new();
    let mut failed = Vec::new();
    println!("{:<30} {:<6} detail", "check", "result");
    for (name, run) in &checks {
        let (pass, detail) = match run() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        println!("{name:<30} {:<6} {detail}", if pass { "PASS" } else { "FAIL" });
        if !pass {
            failed.push(name.to_string());
        }
        rows.push(json!({ "check": name, "pass": pass, "detail": detail }));
    }
    write_json(
        &ctx.path("verify.json"),
        &json!({ "rng": RNG_NAME, "seed": seed, "samples": samples, "n_nodes": n, "n_sigma": ns, "checks": rows }),
    )?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::ChecksFailed(failed))
    }
}
