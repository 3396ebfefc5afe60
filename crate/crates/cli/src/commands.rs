//! Subcommand drivers. Each writes `<out>/<command>.json` and prints a short
//! report on stdout.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use log::{info, warn};
use rand::Rng;
use rayon::prelude::*;
use urnsim_core::equilibrium::community_has_interior;
use urnsim_core::lyapunov::sign_pairs;
use urnsim_core::{
    boundary_equilibria, classify_consensus, classify_interior, community_closed_form,
    default_starts, derive_rng, descent, expected_map, infer_records, integrate_expected,
    simulate_batch, solve_interior, Equilibrium, RunSpec, Stability,
};

use crate::config::{Instance, RunConfig};
use crate::error::{CliError, Result};
use crate::output::{
    ensure_dir, read_trajectory, trajectory_file_name, write_json, write_trajectory, Aggregate,
    ClosedFormCheck, LyapunovReport, NearZeroSample, RunResult, SolverStats, Summary,
};
use crate::{Args, Command};

/// Descent values above this count as "near zero" in the Lyapunov sweep.
pub const NEAR_ZERO_DESCENT: f64 = -1e-10;
/// A near-zero sample must be this close to a fixed point of `F`.
pub const NEAR_EQUILIBRIUM_GAP: f64 = 1e-4;
/// Largest descent (and sign-pair product) tolerated as roundoff.
pub const DESCENT_SLACK: f64 = 1e-12;
/// Agreement required between numeric and closed-form interior points.
pub const CLOSED_FORM_TOL: f64 = 1e-8;

/// `println!` that ignores a closed stdout (e.g. piped into `head`).
macro_rules! say {
    ($($arg:tt)*) => {{
        let _ = writeln!(std::io::stdout().lock(), $($arg)*);
    }};
}

pub fn run(args: &Args) -> Result<Summary> {
    let loaded = match &args.config {
        Some(path) => Some(load(path, args)?),
        None => None,
    };
    let require = || {
        loaded
            .clone()
            .ok_or_else(|| CliError::Config(format!("{} needs --config", args.command.name())))
    };
    let summary = match &args.command {
        Command::Simulate { expected } => simulate(require()?, args, *expected)?,
        Command::Classify => classify(require()?, &args.out)?,
        Command::Equilibria => equilibria(require()?, &args.out)?,
        Command::Infer { trajectory, window } => {
            infer(loaded.clone(), trajectory, *window, &args.out)?
        }
        Command::LyapunovCheck { samples } => lyapunov_check(require()?, *samples, &args.out)?,
    };
    Ok(summary)
}

#[derive(Debug, Clone)]
struct Loaded {
    cfg: RunConfig,
    base: PathBuf,
}

fn load(path: &Path, args: &Args) -> Result<Loaded> {
    let mut cfg = RunConfig::load(path)?;
    if let Some(seed) = args.seed {
        cfg.seed = Some(seed);
    }
    if let Some(runs) = args.runs {
        if runs == 0 {
            return Err(CliError::Config("--runs: must be >= 1".into()));
        }
        cfg.runs = runs;
    }
    let base = path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    Ok(Loaded { cfg, base })
}

/// Fixes the seed in the config (so the echo replays exactly) and prints it.
fn resolve_seed(cfg: &mut RunConfig) -> u64 {
    let seed = *cfg.seed.get_or_insert_with(|| {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_nanos() as u64)
            .unwrap_or(0)
    });
    say!("seed: {seed}");
    seed
}

fn finish(summary: &Summary, out: &Path) -> Result<PathBuf> {
    ensure_dir(out)?;
    let path = out.join(format!("{}.json", summary.command));
    write_json(&path, summary)?;
    say!("summary: {}", path.display());
    Ok(path)
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.6}")).collect();
    format!("({})", parts.join(", "))
}

fn simulate(Loaded { mut cfg, base }: Loaded, args: &Args, expected: bool) -> Result<Summary> {
    let seed = if expected { 0 } else { resolve_seed(&mut cfg) };
    let Instance { graph, bias, init } = cfg.instance(&base)?;
    let validation = graph.require_valid(args.allow_invalid)?;
    if !validation.ok {
        warn!("simulating on an invalid graph: {validation}");
    }
    let spec = RunSpec {
        steps: cfg.steps,
        seed,
        stride: cfg.stride,
        allow_invalid: args.allow_invalid,
    };
    let trajectories = if expected {
        vec![integrate_expected(&graph, &bias, &init, &spec)?]
    } else {
        simulate_batch(&graph, &bias, &init, &spec, cfg.runs)?
    };

    ensure_dir(&args.out)?;
    let mut runs = Vec::with_capacity(trajectories.len());
    for tr in &trajectories {
        let file = args.out.join(trajectory_file_name(tr.run));
        write_trajectory(&file, &tr.records)?;
        info!("wrote {}", file.display());
        runs.push(RunResult {
            run: tr.run,
            final_beta: tr.final_beta().to_vec(),
            file,
        });
    }
    let finals: Vec<Vec<f64>> = runs.iter().map(|r| r.final_beta.clone()).collect();
    let aggregate = Aggregate::from_finals(&finals);
    say!("runs: {}  T = {}", runs.len(), cfg.steps);
    say!("median beta(T): {}", fmt_vec(&aggregate.median));

    let mut summary = Summary::new("simulate", Some(cfg));
    summary.seed = (!expected).then_some(seed);
    summary.validation = Some(validation);
    summary.runs = Some(runs);
    summary.aggregate = Some(aggregate);
    finish(&summary, &args.out)?;
    Ok(summary)
}

fn classify(Loaded { cfg, base }: Loaded, out: &Path) -> Result<Summary> {
    let Instance { graph, bias, .. } = cfg.instance(&base)?;
    let c = classify_consensus(&graph, &bias, cfg.options.eps_lambda)?;
    say!("lambda0: {:.10}", c.lambda0);
    say!("lambda1: {:.10}", c.lambda1);
    say!("verdict: {:?}{}", c.verdict, if c.marginal { " (marginal)" } else { "" });
    let mut summary = Summary::new("classify", Some(cfg));
    summary.validation = Some(graph.validate());
    summary.classification = Some(c);
    finish(&summary, out)?;
    Ok(summary)
}

fn boundary_label(lambda: f64, eps: f64) -> Stability {
    if lambda < 1.0 - eps {
        Stability::Stable
    } else if lambda > 1.0 + eps {
        Stability::Unstable
    } else {
        Stability::Marginal
    }
}

/// `(gamma_a, p1, p2, swapped)` when the instance is a two-agent network
/// with biases `gamma` and `1 / gamma`.
fn reciprocal_pair(inst: &Instance) -> Option<(f64, f64, f64, bool)> {
    let g = inst.bias.gamma();
    if g.len() != 2 || g[0] == 1.0 || ((g[0] * g[1]) - 1.0).abs() > 1e-12 {
        return None;
    }
    let w = inst.graph.normalized_adjacency().ok()?;
    let (p1, p2) = (w.get(0, 0), w.get(1, 1));
    if g[0] > 1.0 {
        Some((g[0], p1, p2, false))
    } else {
        Some((g[1], p2, p1, true))
    }
}

fn closed_form_check(inst: &Instance, interior: &[Equilibrium]) -> Result<Option<ClosedFormCheck>> {
    let Some((gamma, p1, p2, swapped)) = reciprocal_pair(inst) else {
        return Ok(None);
    };
    let report = community_closed_form(gamma, p1, p2)?;
    let closed = report.interior().next().map(|e| {
        let mut b = e.beta.clone();
        if swapped {
            b.swap(0, 1);
        }
        b
    });
    debug_assert_eq!(closed.is_some(), community_has_interior(gamma, p1, p2));
    let numeric = interior.first().map(|e| e.beta.clone());
    let max_diff = match (&closed, &numeric) {
        (Some(c), Some(n)) => Some(
            c.iter()
                .zip(n)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs())),
        ),
        _ => None,
    };
    let agrees = match (&closed, interior.len()) {
        (Some(_), 1) => max_diff.is_some_and(|d| d < CLOSED_FORM_TOL),
        (None, 0) => true,
        _ => false,
    };
    Ok(Some(ClosedFormCheck {
        gamma,
        p1,
        p2,
        closed_form: closed,
        numeric,
        max_diff,
        agrees,
    }))
}

fn equilibria(Loaded { cfg, base }: Loaded, out: &Path) -> Result<Summary> {
    let inst = cfg.instance(&base)?;
    let (g, bias) = (&inst.graph, &inst.bias);
    let opts = &cfg.options;
    let c = classify_consensus(g, bias, opts.eps_lambda)?;

    let [mut zeros, mut ones] = boundary_equilibria(g.n());
    zeros.lambda_max = Some(c.lambda0);
    zeros.stability = boundary_label(c.lambda0, opts.eps_lambda);
    ones.lambda_max = Some(c.lambda1);
    ones.stability = boundary_label(c.lambda1, opts.eps_lambda);
    let mut all = vec![zeros, ones];

    let report = solve_interior(g, bias, &default_starts(g.n()), &opts.solver())?;
    let mut interior = Vec::new();
    let mut rejected = 0;
    for mut eq in report.equilibria {
        if !(eq.residual < opts.tol) {
            warn!("dropping point with residual {:e}: {:?}", eq.residual, eq.beta);
            rejected += 1;
            continue;
        }
        let (label, lambda) = classify_interior(&eq, g, bias, opts.eps_lambda)?;
        eq.stability = label;
        eq.lambda_max = Some(lambda);
        interior.push(eq);
    }
    if report.failures > 0 {
        warn!("{} of {} starts did not converge", report.failures, report.starts_used);
    }
    let check = closed_form_check(&inst, &interior)?;
    all.extend(interior);

    for e in &all {
        say!(
            "{:<22} beta = {}  residual = {:.1e}  lambda = {:.6}  {:?}",
            format!("{:?}", e.kind),
            fmt_vec(&e.beta),
            e.residual,
            e.lambda_max.unwrap_or(f64::NAN),
            e.stability
        );
    }
    let mut summary = Summary::new("equilibria", Some(cfg));
    summary.validation = Some(g.validate());
    summary.classification = Some(c);
    summary.equilibria = Some(all);
    summary.solver = Some(SolverStats {
        starts: report.starts_used,
        failures: report.failures,
        rejected,
    });
    summary.closed_form = check.clone();
    finish(&summary, out)?;
    if let Some(check) = check {
        say!("closed form agrees: {}", check.agrees);
        if !check.agrees {
            return Err(CliError::CheckFailed(format!(
                "numeric interior points disagree with the closed form (max diff {:?})",
                check.max_diff
            )));
        }
    }
    Ok(summary)
}

fn infer(
    loaded: Option<Loaded>,
    trajectory: &Path,
    window: Option<usize>,
    out: &Path,
) -> Result<Summary> {
    let records = read_trajectory(trajectory)?;
    let opts = loaded.as_ref().map(|l| l.cfg.options.clone()).unwrap_or_default();
    if let Some(Loaded { cfg, base }) = &loaded {
        let n = cfg.instance(base)?.graph.n();
        if records[0].beta.len() != n {
            return Err(CliError::Config(format!(
                "graph has {n} agents but the trajectory has {}",
                records[0].beta.len()
            )));
        }
    }
    let window = window
        .or(opts.window)
        .unwrap_or_else(|| urnsim_core::inference::tail_window(records.len(), opts.window_fraction));
    let estimates = infer_records(&records, window, opts.eps_deg)?;
    for (i, e) in estimates.iter().enumerate() {
        let gamma = e.gamma_hat.map_or("undefined".to_string(), |g| format!("{g:.6}"));
        let phi = e.phi_hat.map_or("undefined".to_string(), |p| (p as u8).to_string());
        say!("agent {}: gamma_hat = {gamma}  phi_hat = {phi}  {:?}", i + 1, e.regime);
    }
    let mut summary = Summary::new("infer", loaded.map(|l| l.cfg));
    summary.window = Some(window);
    summary.estimates = Some(estimates);
    finish(&summary, out)?;
    Ok(summary)
}

fn lyapunov_check(Loaded { mut cfg, base }: Loaded, samples: Option<usize>, out: &Path) -> Result<Summary> {
    let samples = samples.unwrap_or(cfg.options.samples);
    if samples == 0 {
        return Err(CliError::Config("--samples: must be >= 1".into()));
    }
    let seed = resolve_seed(&mut cfg);
    let Instance { graph, bias, .. } = cfg.instance(&base)?;
    let n = graph.n();
    let mut rng = derive_rng(seed, 0);
    let points: Vec<Vec<f64>> = (0..samples)
        .map(|_| (0..n).map(|_| rng.random::<f64>()).collect())
        .collect();

    let evaluated = points
        .par_iter()
        .map(|beta| {
            let d = descent(beta, &graph, &bias)?;
            let f = expected_map(beta, &graph, &bias)?;
            let gap = f.iter().zip(beta).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            let pair = sign_pairs(beta, &graph, &bias)?
                .into_iter()
                .fold(f64::NEG_INFINITY, f64::max);
            Ok((d, gap, pair))
        })
        .collect::<urnsim_core::Result<Vec<_>>>()?;

    let mut max_descent = f64::NEG_INFINITY;
    let mut worst_sign_pair = f64::NEG_INFINITY;
    let mut near_zero = Vec::new();
    for (beta, &(d, gap, pair)) in points.iter().zip(&evaluated) {
        max_descent = max_descent.max(d);
        worst_sign_pair = worst_sign_pair.max(pair);
        if d > NEAR_ZERO_DESCENT {
            near_zero.push(NearZeroSample {
                beta: beta.clone(),
                descent: d,
                gap,
                near_equilibrium: gap < NEAR_EQUILIBRIUM_GAP,
            });
        }
    }
    let boundary_descent = [
        descent(&vec![0.0; n], &graph, &bias)?,
        descent(&vec![1.0; n], &graph, &bias)?,
    ];
    let passed = max_descent <= DESCENT_SLACK
        && worst_sign_pair <= DESCENT_SLACK
        && near_zero.iter().all(|s| s.near_equilibrium)
        && boundary_descent == [0.0, 0.0];

    say!("samples: {samples}");
    say!("max descent: {max_descent:e}");
    say!("worst sign pair: {worst_sign_pair:e}");
    say!(
        "near-zero samples: {} ({} near an equilibrium)",
        near_zero.len(),
        near_zero.iter().filter(|s| s.near_equilibrium).count()
    );
    say!("passed: {passed}");

    let mut summary = Summary::new("lyapunov-check", Some(cfg));
    summary.seed = Some(seed);
    summary.lyapunov = Some(LyapunovReport {
        samples,
        max_descent,
        worst_sign_pair,
        near_zero,
        boundary_descent,
        passed,
    });
    finish(&summary, out)?;
    if !passed {
        return Err(CliError::CheckFailed(format!(
            "descent condition violated (max descent {max_descent:e})"
        )));
    }
    Ok(summary)
}
