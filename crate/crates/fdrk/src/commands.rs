use std::time::Instant;

use anyhow::{bail, Context, Result};
use fdrk_core::bayes::{
    forward_observe_exact, posterior_summary, run_mcmc, simulate_data, InverseProblem, McmcConfig,
    ParamSummary,
};
use fdrk_core::discretize::interpolate;
use fdrk_core::estimate::convergence_order;
use fdrk_core::rkck::CASH_KARP;
use fdrk_core::{solve_with_error, with_benchmark, Benchmark, Linearization, Mesh1D, PdeModel, SolveConfig, TePolicy};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{inference_preset, Settings};
use crate::output::{self, num, write_csv};

/// Mesh widths of the convergence-order table.
pub const ORDER_LADDER: [f64; 4] = [0.0125, 0.0083, 0.00625, 0.005];
/// Mesh widths of the error-estimate comparison.
pub const SWEEP_LADDER: [f64; 3] = [1.0 / 40.0, 1.0 / 80.0, 1.0 / 160.0];
/// Time-step factor of the reproduction runs.
pub const PRESET_ALPHA: f64 = 0.75;

/// Nearest mesh with `N` a positive multiple of `multiple`; warns when `h`
/// had to be adjusted.
pub fn admissible_mesh(h: f64, multiple: usize) -> Result<Mesh1D> {
    if !(h > 0.0) || !h.is_finite() {
        bail!("h must be positive, got {h}");
    }
    let ratio = 1.0 / h;
    let n = ((ratio / multiple as f64).round().max(1.0) as usize) * multiple;
    if (ratio - n as f64).abs() > 1e-9 * ratio {
        eprintln!(
            "warning: h = {h} does not give N divisible by {multiple}; using N = {n} (h = {})",
            1.0 / n as f64
        );
    }
    Ok(Mesh1D::new(0.0, 1.0, n)?)
}

fn solve_config(s: &Settings, alpha: f64, policy: TePolicy, lin: Linearization) -> Result<SolveConfig> {
    let mut cfg = SolveConfig::default()
        .with_alpha(s.alpha.unwrap_or(alpha))
        .with_policy(s.policy(policy)?);
    cfg.fixed_k = s.fixed_k;
    cfg.linearization = s.linearization(lin)?;
    Ok(cfg)
}

pub fn solve(s: &Settings) -> Result<String> {
    let model = s.benchmark()?;
    let mesh = admissible_mesh(s.h.unwrap_or(0.0125), 2)?;
    let mut cfg = solve_config(s, CASH_KARP.default_alpha(), TePolicy::default(), Linearization::default())?;
    cfg.diagnostics = true;
    let tau = model.horizon();
    let k = cfg.fixed_k.unwrap_or(cfg.alpha * mesh.h() * mesh.h());
    let steps = (tau / k).ceil().max(1.0) as usize;
    cfg.snapshot_every = Some(s.snapshot_every.unwrap_or((steps / 50).max(1)));

    let start = Instant::now();
    let r = with_benchmark!(&model, m => solve_with_error(m, &mesh, &cfg))?;
    let wall = start.elapsed().as_secs_f64();

    let dir = s.out_dir();
    output::create_dir(&dir)?;
    let xs: Vec<f64> = match &s.probes {
        Some(p) => {
            if let Some(x) = p.iter().find(|x| !(**x >= 0.0 && **x <= 1.0)) {
                bail!("probe {x} lies outside [0, 1]");
            }
            p.clone()
        }
        None => (0..=mesh.intervals()).map(|i| mesh.node(i)).collect(),
    };
    let mut rows = Vec::new();
    for (t, w) in &r.snapshots {
        let (l, rt) = (model.left(*t), model.right(*t));
        for &x in &xs {
            let u = interpolate(&mesh, l, w, rt, x);
            let exact = model.analytic(x, *t).map(num).unwrap_or_default();
            rows.push(vec![num(x), num(*t), num(u), exact]);
        }
    }
    write_csv(&dir.join("solution.csv"), &output::SOLUTION_HEADER, &rows)?;
    let diag: Vec<Vec<String>> = r
        .diagnostics
        .iter()
        .map(|d| vec![num(d.t), num(d.tau_inf), num(d.eta_inf), num(d.e_inf)])
        .collect();
    write_csv(&dir.join("diagnostics.csv"), &output::DIAGNOSTICS_HEADER, &diag)?;
    Ok(format!(
        "{}: h = {}, k = {}, steps = {}, K_hat = {:e}, wall time = {wall:.3} s",
        model.name(),
        r.h,
        r.k,
        r.steps,
        r.k_hat
    ))
}

/// Observed convergence orders, one row per `h`, one column per model.
pub fn order_table(models: &[Benchmark], ladder: &[f64], cfg: &SolveConfig) -> Result<Vec<Vec<f64>>> {
    let meshes = ladder
        .iter()
        .map(|&h| admissible_mesh(h, 4))
        .collect::<Result<Vec<_>>>()?;
    let cells: Vec<Result<f64>> = std::thread::scope(|scope| {
        let handles: Vec<_> = meshes
            .iter()
            .flat_map(|mesh| models.iter().map(move |m| (mesh, m)))
            .map(|(mesh, model)| {
                scope.spawn(move || {
                    with_benchmark!(model, m => convergence_order(m, mesh, cfg)).with_context(|| {
                        format!("order for {} at N = {}", model.name(), mesh.intervals())
                    })
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("order worker panicked")).collect()
    });
    let mut values = cells.into_iter();
    let mut table = Vec::new();
    for _ in ladder {
        let mut row = Vec::new();
        for _ in models {
            row.push(values.next().expect("one cell per model and h")?);
        }
        table.push(row);
    }
    Ok(table)
}

pub fn order(s: &Settings) -> Result<String> {
    let models: Vec<Benchmark> = match &s.model {
        Some(_) => vec![s.benchmark()?],
        None => Benchmark::NAMES
            .iter()
            .map(|n| {
                Settings {
                    model: Some(n.to_string()),
                    ..s.clone()
                }
                .benchmark()
            })
            .collect::<Result<_>>()?,
    };
    let ladder = s.h_ladder.clone().unwrap_or_else(|| ORDER_LADDER.to_vec());
    if ladder.is_empty() {
        bail!("empty h ladder");
    }
    let cfg = solve_config(s, PRESET_ALPHA, TePolicy::default(), Linearization::NodeSlope)?;
    let table = order_table(&models, &ladder, &cfg)?;

    let mut header = vec!["h".to_string(), "N".to_string()];
    header.extend(models.iter().map(|m| m.name().to_string()));
    let rows: Vec<Vec<String>> = ladder
        .iter()
        .zip(&table)
        .map(|(&h, row)| {
            let n = admissible_mesh_quiet(h);
            let mut r = vec![num(h), n.to_string()];
            r.extend(row.iter().map(|&v| format!("{v:.4}")));
            r
        })
        .collect();
    let dir = s.out_dir();
    output::create_dir(&dir)?;
    write_csv(&dir.join("order.csv"), &header, &rows)?;
    let mut text = header.join("\t");
    for r in &rows {
        text.push('\n');
        text.push_str(&r.join("\t"));
    }
    Ok(text)
}

fn admissible_mesh_quiet(h: f64) -> usize {
    (((1.0 / h) / 4.0).round().max(1.0) as usize) * 4
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub h: f64,
    pub true_err: f64,
    pub k_hat: f64,
}

pub fn error_sweep_rows(model: &Benchmark, ladder: &[f64], cfg: &SolveConfig) -> Result<Vec<SweepRow>> {
    let meshes = ladder
        .iter()
        .map(|&h| admissible_mesh(h, 2))
        .collect::<Result<Vec<_>>>()?;
    std::thread::scope(|scope| {
        let handles: Vec<_> = meshes
            .iter()
            .map(|mesh| {
                scope.spawn(move || -> Result<SweepRow> {
                    let r = with_benchmark!(model, m => solve_with_error(m, mesh, cfg))?;
                    let true_err = r
                        .final_true_error(model)
                        .context("model has no closed-form solution")?;
                    Ok(SweepRow {
                        h: mesh.h(),
                        true_err,
                        k_hat: r.k_hat,
                    })
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("sweep worker panicked")).collect()
    })
}

pub fn error_sweep(s: &Settings) -> Result<String> {
    let model = s.benchmark()?;
    let ladder = s.h_ladder.clone().unwrap_or_else(|| SWEEP_LADDER.to_vec());
    let cfg = solve_config(s, PRESET_ALPHA, TePolicy::default(), Linearization::default())?;
    let rows = error_sweep_rows(&model, &ladder, &cfg)?;
    let dir = s.out_dir();
    output::create_dir(&dir)?;
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| vec![num(r.h), num(r.true_err), num(r.k_hat)])
        .collect();
    write_csv(&dir.join("error_sweep.csv"), &output::SWEEP_HEADER, &csv_rows)?;
    if let Some(r) = rows.iter().find(|r| r.k_hat < r.true_err) {
        bail!(
            "error estimate does not dominate at h = {}: K_hat = {:e} < true error {:e}",
            r.h,
            r.k_hat,
            r.true_err
        );
    }
    let mut text = String::from("h\ttrue_err_inf\tK_hat\tratio");
    for r in &rows {
        text.push_str(&format!(
            "\n{}\t{:e}\t{:e}\t{:.2}",
            r.h,
            r.true_err,
            r.k_hat,
            r.k_hat / r.true_err
        ));
    }
    Ok(text)
}

fn require_seed(s: &Settings) -> Result<u64> {
    s.seed.context("this command is stochastic; pass --seed or set seed in the config")
}

fn problem(s: &Settings, rng: &mut ChaCha8Rng) -> Result<InverseProblem> {
    let model = s.benchmark()?;
    let preset = inference_preset(model.name());
    let mut ip = simulate_data(
        &model,
        s.sigma.unwrap_or(preset.sigma),
        s.m.unwrap_or(preset.m),
        s.t1.unwrap_or(preset.t1),
        rng,
    )?;
    if let Some(prior) = s.priors()? {
        if prior.len() != ip.dim() {
            bail!("{} needs {} priors, got {}", model.name(), ip.dim(), prior.len());
        }
        ip.prior = prior;
    }
    Ok(ip)
}

pub fn simulate(s: &Settings) -> Result<String> {
    let seed = require_seed(s)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ip = problem(s, &mut rng)?;
    let exact = forward_observe_exact(&ip, ip.family.theta())?;
    let rows: Vec<Vec<String>> = (0..ip.m())
        .map(|i| vec![num(ip.x_obs[i]), num(ip.y[i]), num(exact.eta[i])])
        .collect();
    let dir = s.out_dir();
    output::create_dir(&dir)?;
    write_csv(&dir.join("data.csv"), &output::DATA_HEADER, &rows)?;
    Ok(format!(
        "{}: {} observations at t1 = {} written to {}",
        ip.family.name(),
        ip.m(),
        ip.t1,
        dir.join("data.csv").display()
    ))
}

#[derive(Debug, Serialize)]
struct ParamOut {
    name: String,
    truth: f64,
    mean: f64,
    sd: f64,
    ci95: [f64; 2],
}

#[derive(Debug, Serialize)]
struct InferSummary {
    model: String,
    forward_map: &'static str,
    sampler: String,
    te_policy: String,
    seed: u64,
    sigma: f64,
    m: usize,
    t1: f64,
    b: f64,
    #[serde(rename = "B")]
    bound: f64,
    h0: f64,
    final_h: f64,
    refinements: usize,
    bound_respected: bool,
    chain_length: usize,
    burn_in: usize,
    acceptance_rate: f64,
    params: Vec<ParamOut>,
}

pub fn infer(s: &Settings) -> Result<String> {
    let seed = require_seed(s)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ip = problem(s, &mut rng)?;
    let name = ip.family.name().to_string();
    let preset = inference_preset(&name);
    let chain_length = s.chain_length.unwrap_or(10_000);
    let burn_in = s.burn_in.unwrap_or(chain_length / 5);
    let solve = solve_config(s, PRESET_ALPHA, TePolicy::HpOverTau, Linearization::default())?;
    let cfg = McmcConfig {
        h0: s.h0.unwrap_or(preset.h0),
        b: s.b_tol.unwrap_or(0.05),
        chain_length,
        burn_in,
        sampler: s.sampler()?,
        exact: s.exact_fm.unwrap_or(false),
        solve,
        ..McmcConfig::default()
    };
    let start = Instant::now();
    let (chain, trace) = run_mcmc(&ip, &cfg, &mut rng)?;
    let wall = start.elapsed().as_secs_f64();
    let summary = posterior_summary(&chain, burn_in)?;
    let names = Benchmark::param_names(&name)?;

    let dir = s.out_dir();
    output::create_dir(&dir)?;
    let data: Vec<Vec<String>> = (0..ip.m())
        .map(|i| {
            let exact = ip.family.analytic(ip.x_obs[i], ip.t1).map(num).unwrap_or_default();
            vec![num(ip.x_obs[i]), num(ip.y[i]), exact]
        })
        .collect();
    write_csv(&dir.join("data.csv"), &output::DATA_HEADER, &data)?;
    output::write_chain(&dir.join("chain.csv"), &chain, names)?;
    output::write_trace(&dir.join("trace.csv"), &trace)?;
    let params = names
        .iter()
        .zip(&summary)
        .zip(ip.family.theta())
        .map(|((n, p), &truth): ((&&str, &ParamSummary), &f64)| ParamOut {
            name: n.to_string(),
            truth,
            mean: p.mean,
            sd: p.sd,
            ci95: [p.q025, p.q975],
        })
        .collect();
    let out = InferSummary {
        model: name.clone(),
        forward_map: if cfg.exact { "exact" } else { "numeric" },
        sampler: cfg.sampler.to_string(),
        te_policy: cfg.solve.policy.to_string(),
        seed,
        sigma: ip.sigma,
        m: ip.m(),
        t1: ip.t1,
        b: cfg.b,
        bound: trace.bound,
        h0: cfg.h0,
        final_h: trace.final_h,
        refinements: trace.refinements,
        bound_respected: trace.bound_respected(),
        chain_length,
        burn_in,
        acceptance_rate: chain.acceptance_rate(),
        params,
    };
    output::write_json(&dir.join("summary.json"), &out)?;

    let mut text = format!(
        "{name} ({} FM, {}): B = {:.3e}, final h = {}, refinements = {}, acceptance = {:.3}, wall time = {wall:.1} s",
        out.forward_map, out.sampler, trace.bound, trace.final_h, trace.refinements, out.acceptance_rate
    );
    for p in &out.params {
        text.push_str(&format!(
            "\n  {}: mean {:.4}, sd {:.4}, 95% [{:.4}, {:.4}]",
            p.name, p.mean, p.sd, p.ci95[0], p.ci95[1]
        ));
    }
    Ok(text)
}
