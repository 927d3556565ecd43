use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use obfb::bank_gen::{mclt, Window};
use obfb::diagnostics::{
    dispersion_table, hermitian_defects, pr_residual, write_dispersion_csv, write_freq_csv, write_impulse_csv,
    DispersionRow, FREQ_GRID,
};
use obfb::filterbank::ImpulseResponses;
use obfb::inverse_solver::{check_hs_analysis, solve_min_order, solve_min_order_hs, SolverOptions};
use obfb::invertibility::is_fir_invertible;
use obfb::io::{load_analysis, load_bank, load_synthesis, save_analysis, save_synthesis, Bank};
use obfb::objective::{Criterion, CostConfig};
use obfb::optimizer::{design, write_history_csv, OptimOptions};
use serde_json::json;

use crate::config::{pick, FileConfig};
use crate::{Cli, Command, CriterionArg, GenCommand, InvertArgs, MtclArgs, OptimizeArgs, ReportArgs, RoundtripArgs, WindowKind};

const ROUNDTRIP_THRESHOLD: f64 = 1e-8;
const FREQ_FLOOR_DB: f64 = -200.0;

/// Runs one subcommand and returns the process exit code.
pub fn run(cli: Cli) -> Result<u8> {
    let config = FileConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::Gen(GenCommand::Mclt(args)) => gen_mclt(args),
        Command::Check { bank } => check(&bank, &config),
        Command::Invert(args) => invert(args, &config),
        Command::Optimize(args) => optimize(args, &config),
        Command::Report(args) => report(args, &config),
        Command::Roundtrip(args) => roundtrip(args, &config),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn print_json(value: &impl serde::Serialize) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

/// `dir/stem.<suffix>` next to `path`.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

/// `prefix.<suffix>`, keeping any dots already in the prefix.
fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(suffix);
    PathBuf::from(s)
}

fn solver_options(config: &FileConfig, p_max: Option<usize>) -> SolverOptions {
    SolverOptions {
        p_max: p_max.or(config.p_max),
        tol: config.tolerances(),
    }
}

fn gen_mclt(args: MtclArgs) -> Result<u8> {
    let window = match args.window {
        WindowKind::Sine => Window::Sine,
        WindowKind::Kaiser => Window::Kaiser { beta: args.beta },
    };
    let bank = mclt(args.n, args.k, args.kp, &window)?;
    let meta = json!({
        "generator": "mclt",
        "N": args.n,
        "k": args.k,
        "k_prime": args.kp,
        "window": window,
    });
    save_analysis(&args.output, &bank, Some(meta))?;
    log::info!("wrote {} channels to {}", bank.m(), args.output.display());
    Ok(0)
}

fn check(path: &Path, config: &FileConfig) -> Result<u8> {
    let bank = load_analysis(path).with_context(|| format!("loading {}", path.display()))?;
    let report = is_fir_invertible(&bank.polyphase(), &config.tolerances())?;
    print_json(&report)?;
    Ok(if report.invertible { 0 } else { 2 })
}

fn invert(args: InvertArgs, config: &FileConfig) -> Result<u8> {
    let bank = load_analysis(&args.bank).with_context(|| format!("loading {}", args.bank.display()))?;
    let pp = bank.polyphase();
    let hermitian = args.hs || config.hs.unwrap_or(false);
    let opts = solver_options(config, args.p_max);
    let solution = if hermitian {
        if !check_hs_analysis(&pp) {
            bail!("{} is not Hermitian-symmetric; --hs requires an HS analysis bank", args.bank.display());
        }
        solve_min_order_hs(&pp, &opts)?
    } else {
        solve_min_order(&pp, &opts)?
    };
    save_synthesis(&args.output, &solution.bank, Some(serde_json::to_value(solution.metadata())?))?;
    println!("(p1,p2)=({},{})", solution.p1, solution.p2);
    log::info!("residual {:.3e}, rank {}", solution.residual, solution.rank);
    Ok(0)
}

fn write_staged_dispersion(path: &Path, stages: &[(&str, &[DispersionRow])]) -> Result<()> {
    let mut out = create(path)?;
    writeln!(out, "stage,channel,time_centroid,time_dispersion,freq_centroid,freq_dispersion")?;
    for (stage, rows) in stages {
        for r in rows.iter() {
            writeln!(
                out,
                "{stage},{},{:.15e},{:.15e},{:.15e},{:.15e}",
                r.channel, r.time_centroid, r.time_dispersion, r.freq_centroid, r.freq_dispersion
            )?;
        }
    }
    out.flush()?;
    Ok(())
}

fn optimize(args: OptimizeArgs, config: &FileConfig) -> Result<u8> {
    let bank = load_analysis(&args.bank).with_context(|| format!("loading {}", args.bank.display()))?;
    let criterion = match args.criterion {
        Some(CriterionArg::Time) => Criterion::Time,
        Some(CriterionArg::Freq) => Criterion::Freq,
        None => config.criterion.context("--criterion is required (or set \"criterion\" in the config)")?,
    };
    let hermitian = args.hs || config.hs.unwrap_or(false);
    if hermitian && !check_hs_analysis(&bank.polyphase()) {
        bail!("{} is not Hermitian-symmetric; --hs requires an HS analysis bank", args.bank.display());
    }
    let cost = CostConfig {
        criterion,
        alpha: pick(args.alpha, config.alpha, 2.0),
        weights: config.weights.clone(),
        centers: config.centers.clone(),
    };
    let defaults = OptimOptions::default();
    let opts = OptimOptions {
        eps: pick(args.eps, config.eps, defaults.eps),
        max_iter: pick(args.max_iter, config.max_iter, defaults.max_iter),
        min_step: config.min_step.unwrap_or(defaults.min_step),
        max_rejections: config.max_rejections.unwrap_or(defaults.max_rejections),
    };
    let order = args.order.or(config.order.map(|[a, b]| (a, b)));
    let solver = solver_options(config, args.p_max);

    let d = design(&bank, &cost, hermitian, order, &opts, &solver)?;
    let result = &d.optimized.result;
    let initial = result.history.first().map(|r| r.cost).unwrap_or(result.cost);
    let (hs_analysis_defect, hs_defect) = hermitian_defects(&bank, &d.optimized.bank);

    let meta = json!({
        "p1": d.param_space.p1(),
        "p2": d.param_space.p2(),
        "hermitian": hermitian,
        "criterion": criterion,
        "alpha": cost.alpha,
        "initial_cost": initial,
        "final_cost": result.cost,
        "iterations": result.iterations,
        "stop": result.stop,
    });
    save_synthesis(&args.output, &d.optimized.bank, Some(meta))?;

    let history_path = sibling(&args.output, "history.csv");
    let mut out = create(&history_path)?;
    write_history_csv(&result.history, &mut out)?;
    out.flush()?;

    let grid = config.grid.unwrap_or(FREQ_GRID);
    let dispersion_path = sibling(&args.output, "dispersion.csv");
    let minimal = dispersion_table(&d.minimal.bank, grid)?;
    let start = dispersion_table(&d.start, grid)?;
    let optimized = dispersion_table(&d.optimized.bank, grid)?;
    write_staged_dispersion(
        &dispersion_path,
        &[("minimal_pi", &minimal), ("start", &start), ("optimized", &optimized)],
    )?;

    print_json(&json!({
        "criterion": criterion,
        "alpha": cost.alpha,
        "hermitian": hermitian,
        "minimal_order": [d.minimal.p1, d.minimal.p2],
        "order": [d.param_space.p1(), d.param_space.p2()],
        "dimension": d.param_space.dim(),
        "initial_cost": initial,
        "final_cost": result.cost,
        "iterations": result.iterations,
        "stop": result.stop,
        "hs_analysis_defect": hs_analysis_defect,
        "hs_defect": hs_defect,
        "output": args.output,
        "history": history_path,
        "dispersion": dispersion_path,
    }))?;
    Ok(0)
}

fn write_reports<B: ImpulseResponses + Sync>(bank: &B, args: &ReportArgs, grid: usize) -> Result<Vec<PathBuf>> {
    let all = !(args.impulse || args.freq || args.dispersion);
    let mut written = Vec::new();
    if all || args.impulse {
        let path = with_suffix(&args.output, "impulse.csv");
        let mut out = create(&path)?;
        write_impulse_csv(bank, &mut out)?;
        out.flush()?;
        written.push(path);
    }
    if all || args.freq {
        let path = with_suffix(&args.output, "freq.csv");
        let mut out = create(&path)?;
        write_freq_csv(bank, grid, FREQ_FLOOR_DB, &mut out)?;
        out.flush()?;
        written.push(path);
    }
    if all || args.dispersion {
        let path = with_suffix(&args.output, "dispersion.csv");
        let mut out = create(&path)?;
        write_dispersion_csv(&dispersion_table(bank, grid)?, &mut out)?;
        out.flush()?;
        written.push(path);
    }
    Ok(written)
}

fn report(args: ReportArgs, config: &FileConfig) -> Result<u8> {
    let grid = pick(args.grid, config.grid, FREQ_GRID);
    if grid == 0 {
        bail!("--grid must be positive");
    }
    let written = match load_bank(&args.bank).with_context(|| format!("loading {}", args.bank.display()))? {
        Bank::Analysis(b) => write_reports(&b, &args, grid)?,
        Bank::Synthesis(b) => write_reports(&b, &args, grid)?,
    };
    for path in written {
        println!("{}", path.display());
    }
    Ok(0)
}

fn roundtrip(args: RoundtripArgs, config: &FileConfig) -> Result<u8> {
    let analysis = load_analysis(&args.analysis).with_context(|| format!("loading {}", args.analysis.display()))?;
    let synthesis = load_synthesis(&args.synthesis).with_context(|| format!("loading {}", args.synthesis.display()))?;
    let trials = pick(args.trials, config.trials, 10);
    let len = pick(args.len, config.len, 1024);
    let seed = pick(args.seed, config.seed, 0);
    let report = pr_residual(&analysis, &synthesis, trials, len, seed)?;
    let ok = report.max_error < ROUNDTRIP_THRESHOLD;
    let mut value = serde_json::to_value(&report)?;
    value["threshold"] = json!(ROUNDTRIP_THRESHOLD);
    value["pass"] = json!(ok);
    print_json(&value)?;
    Ok(if ok { 0 } else { 2 })
}
