use std::fs::File;
use std::path::{Path, PathBuf};

use rand::Rng;
use serde_json::{json, Value};

use bathy_core::certificate::{
    epsilon_sweep, sample_rng, solve_window, theorem46_report, write_sweep_csv, CertificateReport, PairConfiguration,
    SampleGrid, Verdict,
};
use bathy_core::elliptic::PotentialField;
use bathy_core::inversion::{invert as run_inversion, l1_error, InversionResult};
use bathy_core::io::{write_atomic, write_json};
use bathy_core::waves::{measure as take_measurement, write_trajectory, MeasurementTuple, WaveModel, WaveState};
use bathy_core::{Error as CoreError, ScalarField};

use crate::config::{function, sample, ExperimentConfig};
use crate::error::{CliError, CliResult};
use crate::plot::{bar_chart, line_plot, Series};

/// Name recorded next to every seed.
pub const RNG_NAME: &str = "ChaCha8";

pub struct Context {
    pub cfg: ExperimentConfig,
    pub out: PathBuf,
}

impl Context {
    /// Creates the output directory and records the run manifest in it.
    pub fn new(cfg: ExperimentConfig, command: &str) -> CliResult<Self> {
        let out = cfg.output.dir.clone();
        std::fs::create_dir_all(&out)?;
        let manifest = json!({
            "command": command,
            "rng": RNG_NAME,
            "seed": cfg.certificate.seed,
            "config": cfg,
        });
        write_json(&out.join(format!("run_{command}.json")), &manifest)?;
        Ok(Self { cfg, out })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn plot(&self, f: impl FnOnce() -> CliResult<()>) -> CliResult<()> {
        if self.cfg.output.plots {
            f()?;
        }
        Ok(())
    }
}

fn write_field(path: &Path, f: &ScalarField) -> CliResult<()> {
    write_atomic(path, |w| f.write_csv(w))?;
    Ok(())
}

/// Initial state and bottom on the simulation domain.
fn initial(ctx: &Context) -> CliResult<(ScalarField, WaveState)> {
    let p = &ctx.cfg.profiles;
    let g = ctx.cfg.mother_grid()?;
    let b = sample("profiles.bottom", &p.bottom, g)?;
    let zeta = sample("profiles.surface", &p.surface, g)?;
    let psi = sample("profiles.psi", &p.psi, g)?;
    for (name, f) in [("bottom", &b), ("surface", &zeta), ("psi", &psi)] {
        let (first, last) = (f.get(0), f.get(f.len() - 1));
        if (first - last).abs() > 1e-8 * (1.0 + f.max_abs()) {
            eprintln!(
                "warning: profiles.{name} differs at the ends of the periodic domain [{}, {}] ({first} vs {last})",
                g.a1(),
                g.a2()
            );
        }
    }
    Ok((b, WaveState::new(zeta, psi, 0.0)?))
}

fn trajectory(ctx: &Context) -> CliResult<(ScalarField, Vec<WaveState>)> {
    let (b, init) = initial(ctx)?;
    let traj = WaveModel::new(b.clone(), ctx.cfg.sim_config())?.simulate(init)?;
    Ok((b, traj))
}

pub fn simulate(ctx: &Context) -> CliResult<()> {
    let (_, traj) = trajectory(ctx)?;
    let index = write_trajectory(&ctx.path("trajectory"), &traj)?;
    let (first, last) = (&traj[0], &traj[traj.len() - 1]);
    ctx.plot(|| {
        let x = first.zeta.grid().nodes();
        let end = format!("t = {:.3}", last.t);
        line_plot(
            &ctx.path("simulate.svg"),
            "surface elevation",
            "X",
            "zeta",
            &[Series { label: "t = 0", x: &x, y: first.zeta.values() }, Series { label: &end, x: &x, y: last.zeta.values() }],
            false,
        )
    })?;
    println!("simulate: {} states to t = {:.4}, max |zeta| = {:.3e}; index {}", traj.len(), last.t, last.zeta.max_abs(), index.display());
    Ok(())
}

pub fn measure(ctx: &Context) -> CliResult<()> {
    let (b, traj) = trajectory(ctx)?;
    let window = ctx.cfg.window_grid()?;
    let m = take_measurement(&traj, ctx.cfg.time.t0, &b, &window, &ctx.cfg.sim_config())?;
    let dir = ctx.path("measurement");
    let index = m.write(&dir)?;
    let (i1, i2) = bathy_core::waves::window_indices(b.grid(), &window)?;
    write_field(&dir.join("b_true.csv"), &b.slice(i1, i2)?)?;
    ctx.plot(|| {
        let x = window.nodes();
        line_plot(&ctx.path("measure.svg"), &format!("surface data at t0 = {:.3}", m.t0), "X", "", &[
            Series { label: "dt zeta", x: &x, y: m.dt_zeta.values() },
            Series { label: "psi", x: &x, y: m.psi.values() },
        ], false)
    })?;
    println!("measure: t0 = {:.4}, max |dt zeta| = {:.3e}; index {}", m.t0, m.dt_zeta.max_abs(), index.display());
    Ok(())
}

fn window_potential(ctx: &Context, bottom: &str, surface: &str, psi: &str) -> CliResult<PotentialField> {
    let c = &ctx.cfg;
    Ok(solve_window(
        &c.window_grid()?,
        c.grid.mother_factor,
        function(bottom)?,
        function(surface)?,
        function(psi)?,
        c.physics.h0,
        c.grid.n_sigma,
        &c.solver(),
    )?)
}

pub fn solve(ctx: &Context) -> CliResult<()> {
    let p = &ctx.cfg.profiles;
    let phi = window_potential(ctx, &p.bottom, &p.surface, &p.psi)?;
    write_atomic(&ctx.path("potential.csv"), |w| phi.write_csv(w))?;
    let g = phi.dno();
    write_field(&ctx.path("dno.csv"), &g)?;
    let green = phi.green_report();
    let diag = json!({
        "solver": phi.diagnostics_json(),
        "energy": green.energy,
        "green_defect": green.green_defect(),
        "flux_balance": green.flux_balance,
        "mesh_size": phi.mesh_size(),
    });
    write_json(&ctx.path("solve.json"), &diag)?;
    ctx.plot(|| {
        let x = phi.grid().nodes();
        let psi: Vec<f64> = (0..x.len()).map(|i| phi.value(i, phi.n_sigma() - 1)).collect();
        line_plot(&ctx.path("solve.svg"), "surface potential and DNO", "X", "", &[
            Series { label: "psi", x: &x, y: &psi },
            Series { label: "G psi", x: &x, y: g.values() },
        ], false)
    })?;
    println!("solve: energy {:.6e}, Green defect {:.3e}, residual {:.3e}", green.energy, green.green_defect(), phi.stats().residual);
    Ok(())
}

/// Verdict as written in the reports.
fn verdict_name(v: Verdict) -> String {
    serde_json::to_value(v).ok().and_then(|j| j.as_str().map(str::to_owned)).unwrap_or_default()
}

/// `name,value` rows of every numeric entry; arrays are indexed, `null` is written as `inf`.
fn flatten(prefix: &str, v: &Value, rows: &mut Vec<(String, f64)>) {
    match v {
        Value::Number(n) => rows.push((prefix.to_string(), n.as_f64().unwrap_or(f64::NAN))),
        Value::Null => rows.push((prefix.to_string(), f64::INFINITY)),
        Value::Array(a) => {
            for (k, x) in a.iter().enumerate() {
                flatten(&format!("{prefix}_{k}"), x, rows);
            }
        }
        Value::Object(m) => {
            for (k, x) in m {
                let name = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&name, x, rows);
            }
        }
        _ => {}
    }
}

fn write_rows(path: &Path, header: [&str; 2], rows: &[(String, f64)]) -> CliResult<()> {
    write_atomic(path, |w| {
        writeln!(w, "{},{}", header[0], header[1])?;
        for (name, v) in rows {
            writeln!(w, "{name},{v:e}")?;
        }
        Ok(())
    })?;
    Ok(())
}

fn write_certificate(ctx: &Context, report: &CertificateReport) -> CliResult<()> {
    write_atomic(&ctx.path("certificate.json"), |w| {
        writeln!(w, "{}", report.to_json()?)?;
        Ok(())
    })?;
    let mut rows = Vec::new();
    flatten("", &serde_json::to_value(&report.terms).map_err(CoreError::from)?, &mut rows);
    rows.extend([("lhs".to_string(), report.lhs), ("rhs".to_string(), report.rhs.unwrap_or(f64::INFINITY))]);
    write_rows(&ctx.path("terms.csv"), ["term", "value"], &rows)?;
    ctx.plot(|| bar_chart(&ctx.path("terms.svg"), &format!("certificate terms ({})", verdict_name(report.verdict)), &rows))
}

pub fn certify(ctx: &Context) -> CliResult<()> {
    let p = &ctx.cfg.profiles;
    let phi = window_potential(ctx, &p.bottom, &p.surface, &p.psi)?;
    let phi0 = window_potential(
        ctx,
        p.bottom0.as_deref().unwrap_or(&p.bottom),
        p.surface0.as_deref().unwrap_or(&p.surface),
        p.psi0.as_deref().unwrap_or(&p.psi),
    )?;
    let report = PairConfiguration::new(phi, phi0, ctx.cfg.physics.h0)
        .and_then(|pair| theorem46_report(&pair, &ctx.cfg.constants()))
        .map_err(CliError::from);
    let report = match report {
        Ok(r) => r,
        // Unmet preconditions still leave a verdict behind.
        Err(e) if e.exit_code() == 5 => {
            write_json(&ctx.path("certificate.json"), &json!({ "verdict": Verdict::NonInformative, "reason": e.to_string() }))?;
            return Err(CliError::NonInformative(e.to_string()));
        }
        Err(e) => return Err(e),
    };
    write_certificate(ctx, &report)?;
    let rhs = report.rhs.map_or("unbounded".to_string(), |r| format!("{r:.6e}"));
    println!(
        "certify: verdict {}; C_bot L1 = {:.6e}, RHS = {rhs}, L1 = {:.6e}, smallness {}",
        verdict_name(report.verdict), report.lhs, report.l1_distance, report.smallness_ok
    );
    match report.verdict {
        Verdict::NonInformative => Err(CliError::NonInformative(if report.smallness_ok {
            "log-log argument at most e".into()
        } else {
            "smallness condition fails".into()
        })),
        _ => Ok(()),
    }
}

pub fn sweep(ctx: &Context) -> CliResult<()> {
    let eps = &ctx.cfg.certificate.epsilons;
    if eps.is_empty() {
        return Err(CliError::Config("certificate.epsilons is empty".into()));
    }
    let grid = SampleGrid { n: ctx.cfg.grid.n_nodes, n_sigma: ctx.cfg.grid.n_sigma };
    let reports = epsilon_sweep(eps, grid, &ctx.cfg.constants())?;
    let rows: Vec<(f64, f64, Option<f64>)> = reports.iter().map(|(e, r)| (*e, r.l1_distance, r.rhs)).collect();
    write_sweep_csv(&ctx.path("sweep.csv"), &rows)?;
    let verdicts: Vec<Value> = reports.iter().map(|(e, r)| json!({ "epsilon": e, "verdict": r.verdict, "rhs": r.rhs })).collect();
    write_json(&ctx.path("sweep.json"), &verdicts)?;
    ctx.plot(|| {
        let x: Vec<f64> = eps.iter().map(|e| e.log10()).collect();
        let rhs: Vec<f64> = rows.iter().map(|r| r.2.unwrap_or(f64::NAN)).collect();
        let l1: Vec<f64> = rows.iter().map(|r| r.1).collect();
        line_plot(&ctx.path("sweep.svg"), "perturbation sweep", "log10 epsilon", "", &[
            Series { label: "RHS", x: &x, y: &rhs },
            Series { label: "L1 distance", x: &x, y: &l1 },
        ], true)
    })?;
    // An unbounded right-hand side counts as +∞.
    let mut order: Vec<&(f64, f64, Option<f64>)> = rows.iter().collect();
    order.sort_by(|a, b| b.0.total_cmp(&a.0));
    let monotone = order.windows(2).all(|w| w[1].2.unwrap_or(f64::INFINITY) <= w[0].2.unwrap_or(f64::INFINITY));
    for (e, r) in &reports {
        let rhs = r.rhs.map_or("inf".to_string(), |v| format!("{v:.4e}"));
        println!("sweep: epsilon {e:.1e}  L1 {:.4e}  RHS {rhs}  {}", r.l1_distance, verdict_name(r.verdict));
    }
    println!("sweep: RHS nonincreasing as epsilon decreases: {monotone}");
    Ok(())
}

fn measurement_path(ctx: &Context) -> PathBuf {
    ctx.cfg.inversion.measurement.clone().unwrap_or_else(|| ctx.path("measurement").join("measurement.json"))
}

fn load_measurement(ctx: &Context) -> CliResult<(MeasurementTuple, PathBuf)> {
    let path = measurement_path(ctx);
    if !path.exists() {
        return Err(CliError::Config(format!("measurement {} not found (run `bathy measure` first)", path.display())));
    }
    Ok((MeasurementTuple::read(&path)?, path))
}

fn truth_for(ctx: &Context, m: &MeasurementTuple, index: &Path) -> CliResult<Option<ScalarField>> {
    if let Some(src) = &ctx.cfg.inversion.truth {
        return Ok(Some(sample("inversion.truth", src, *m.grid())?));
    }
    let stored = index.parent().unwrap_or(Path::new(".")).join("b_true.csv");
    if stored.exists() {
        let f = ScalarField::read_csv(File::open(&stored)?)?;
        f.check_grid(&m.zeta)?;
        return Ok(Some(f));
    }
    Ok(None)
}

fn write_inversion(ctx: &Context, r: &InversionResult, truth: Option<&ScalarField>, identifiable: bool) -> CliResult<()> {
    write_field(&ctx.path("b_est.csv"), &r.b_est)?;
    let doc = json!({
        "converged": r.converged,
        "iterations": r.iterations,
        "misfit_history": r.misfit_history,
        "l1_error": r.l1_error_vs_truth,
        "gradient_norm": r.gradient_norm,
        "identifiable": identifiable,
        "rng": RNG_NAME,
        "seed": ctx.cfg.certificate.seed,
        "noise": ctx.cfg.inversion.noise,
    });
    write_json(&ctx.path("inversion.json"), &doc)?;
    ctx.plot(|| {
        let it: Vec<f64> = (0..r.misfit_history.len()).map(|k| k as f64).collect();
        line_plot(&ctx.path("convergence.svg"), "misfit", "iteration", "misfit", &[Series { label: "misfit", x: &it, y: &r.misfit_history }], true)?;
        let x = r.b_est.grid().nodes();
        let mut series = vec![Series { label: "estimate", x: &x, y: r.b_est.values() }];
        if let Some(t) = truth {
            series.push(Series { label: "truth", x: &x, y: t.values() });
        }
        line_plot(&ctx.path("bottom.svg"), "bottom", "X", "b", &series, false)
    })
}

pub fn invert(ctx: &Context) -> CliResult<()> {
    let (mut m, index) = load_measurement(ctx)?;
    let opts = ctx.cfg.inversion_options();
    let delta = ctx.cfg.inversion.noise;
    if delta > 0.0 {
        let mut rng = sample_rng(ctx.cfg.certificate.seed);
        let peak = m.dt_zeta.max_abs();
        let noisy: Vec<f64> = m.dt_zeta.values().iter().map(|v| v + delta * peak * rng.random_range(-1.0..1.0)).collect();
        m.dt_zeta = ScalarField::new(*m.grid(), noisy)?;
    }
    let truth = truth_for(ctx, &m, &index)?;
    let mut init = sample("inversion.b_init", &ctx.cfg.inversion.b_init, *m.grid())?.into_values();
    let n = init.len();
    init[0] = m.b_left;
    init[n - 1] = m.b_right;
    let init = ScalarField::new(*m.grid(), init)?;

    let psi = &m.psi;
    let mean = psi.integral() / psi.grid().length();
    let identifiable = psi.values().iter().any(|v| (v - mean).abs() > 1e-12 * (1.0 + psi.max_abs()));
    if !identifiable {
        eprintln!("warning: psi is constant on the window; the data do not determine the bottom (misfit is flat)");
    }
    let (result, failure) = match run_inversion(&m, &m.theta, &init, &opts) {
        Ok(r) => (r, None),
        Err(CoreError::LineSearchFailure { iterations, misfit, last }) => (*last, Some((iterations, misfit))),
        Err(e) => return Err(e.into()),
    };
    let result = match &truth {
        Some(t) => result.with_truth(t)?,
        None => result,
    };
    write_inversion(ctx, &result, truth.as_ref(), identifiable)?;
    let rel = match (&truth, result.l1_error_vs_truth) {
        (Some(t), Some(e)) => {
            let size = l1_error(t, &ScalarField::constant(*t.grid(), t.get(0))?)?;
            let pct = if size > 0.0 { format!(" ({:.2}% of the bump)", 100.0 * e / size) } else { String::new() };
            format!(", L1 error {e:.4e}{pct}")
        }
        _ => String::new(),
    };
    println!(
        "invert: {} after {} iterations, misfit {:.4e}{rel}",
        if result.converged { "converged" } else { "stopped" },
        result.iterations,
        result.misfit_history.last().copied().unwrap_or(f64::NAN)
    );
    match failure {
        Some((iterations, misfit)) => Err(CoreError::LineSearchFailure { iterations, misfit, last: Box::new(result) }.into()),
        None => Ok(()),
    }
}
