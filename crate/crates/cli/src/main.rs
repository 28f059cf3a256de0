//! `isac-sim`: train, evaluate and sweep the ISAC controller.
//!
//! Every command writes plain-text outputs under `--out`; identical
//! configuration and seed give byte-identical files.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use isac_core::baselines::{self, BaselineKind, EvalSummary};
use isac_core::env::{Environment, SlotRecord};
use isac_core::par::{self, Execution};
use isac_core::report::{self, CsvTable};
use isac_core::rl::{Checkpoint, Mlp};
use isac_core::scenario::load_config;
use isac_core::sweep::{self, SweepParam, SweepPlan};
use isac_core::training;
use isac_core::Config;

#[derive(Debug, Parser)]
#[command(name = "isac-sim", version, about = "Vision-aided UAV ISAC simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a DDPG controller and write its curve and checkpoint.
    Train(Common),
    /// Evaluate baselines over consecutive seeds.
    Eval(EvalArgs),
    /// Sweep one parameter and evaluate baselines at every point.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// TOML configuration; omitted keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory (created if missing).
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override one key, e.g. `--set env.p_max_dbm=4`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Run seeds and sweep points one at a time.
    #[arg(long)]
    sequential: bool,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated baseline names, or `all`.
    #[arg(long, default_value = "all")]
    baseline: String,
    /// Number of consecutive seeds starting at `--seed`.
    #[arg(long, default_value_t = 1)]
    seeds: u64,
    /// 100-slot episodes per seed.
    #[arg(long, default_value_t = 1)]
    episodes: usize,
    /// Controller checkpoint; without one, a controller is trained per seed.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Also write per-slot, per-agent records.
    #[arg(long)]
    trace: bool,
    /// Also write the risk heatmap of the first slot.
    #[arg(long)]
    heatmap: bool,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// One of n_agents, n_antennas, p_max.
    #[arg(long)]
    param: String,
    /// `a,b,c` or the inclusive integer range `a..b`.
    #[arg(long, allow_hyphen_values = true)]
    values: String,
    #[arg(long, default_value = "dediff_copilot,random")]
    baseline: String,
    #[arg(long, default_value_t = 1)]
    seeds: u64,
    #[arg(long, default_value_t = 1)]
    episodes: usize,
    /// Re-evaluate this checkpoint at every point instead of retraining.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
}

fn main() -> ExitCode {
    let result = match Cli::parse().command {
        Command::Train(args) => train(&args),
        Command::Eval(args) => eval(&args),
        Command::Sweep(args) => run_sweep(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn resolve(common: &Common) -> Result<Config> {
    let mut cfg = match &common.config {
        Some(path) => load_config(path)?,
        None => Config::default(),
    };
    for item in &common.overrides {
        let Some((key, value)) = item.split_once('=') else {
            bail!("override `{item}` must look like KEY=VALUE");
        };
        cfg = cfg.with_override(key.trim(), value.trim())?;
    }
    fs::create_dir_all(&common.out).with_context(|| format!("creating {}", common.out.display()))?;
    fs::write(common.out.join("config.toml"), cfg.to_toml_string())
        .with_context(|| format!("writing {}", common.out.display()))?;
    Ok(cfg)
}

fn mode(common: &Common) -> Execution {
    if common.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

fn write(table: &CsvTable, dir: &Path, name: &str, cfg: &Config, seed: u64) -> Result<()> {
    table.write(dir.join(name), &cfg.hash(), seed)?;
    Ok(())
}

fn parse_kinds(text: &str) -> Result<Vec<BaselineKind>> {
    if text.trim() == "all" {
        return Ok(BaselineKind::ALL.to_vec());
    }
    let kinds = text
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<BaselineKind>())
        .collect::<Result<Vec<_>, _>>()?;
    if kinds.is_empty() {
        bail!("no baseline given");
    }
    Ok(kinds)
}

fn load_actor(path: &Path) -> Result<Mlp> {
    Ok(Checkpoint::load(path)?.actor)
}

fn seed_range(start: u64, count: u64) -> Result<Vec<u64>> {
    if count == 0 {
        bail!("--seeds must be at least 1");
    }
    Ok((start..start + count).collect())
}

fn train(args: &Common) -> Result<()> {
    let cfg = resolve(args)?;
    let out = training::train(&cfg, args.seed)?;
    write(&report::curve_table(&out.curve), &args.out, "curve.csv", &cfg, args.seed)?;
    out.agent.checkpoint().save(args.out.join("checkpoint.txt"))?;
    let last = out.curve.len().saturating_sub(200);
    let tail: Vec<f64> = out.curve[last..].iter().map(|s| s.reward).collect();
    println!(
        "trained {} steps; mean reward over the last {} steps {:.4}",
        out.curve.len(),
        tail.len(),
        tail.iter().sum::<f64>() / tail.len().max(1) as f64
    );
    Ok(())
}

fn eval(args: &EvalArgs) -> Result<()> {
    let c = &args.common;
    let cfg = resolve(c)?;
    let kinds = parse_kinds(&args.baseline)?;
    let seeds = seed_range(c.seed, args.seeds)?;
    let loaded = args.checkpoint.as_deref().map(load_actor).transpose()?;
    // one controller per seed, shared by the evaluation and the traces
    let actors: Vec<Option<Mlp>> = match &loaded {
        None if kinds.iter().any(|k| k.needs_agent()) => {
            par::try_map(mode(c), seeds.clone(), |s| training::train(&cfg, s).map(|o| Some(o.agent.actor)))?
        }
        _ => vec![loaded; seeds.len()],
    };
    let mut rows = Vec::new();
    for (seed, actor) in seeds.iter().zip(&actors) {
        rows.extend(sweep::evaluate_point(&cfg, &kinds, actor.as_ref(), &[*seed], args.episodes, mode(c))?);
    }
    // kind-major, then seed
    rows.sort_by_key(|r| (kinds.iter().position(|k| *k == r.kind), r.seed));
    write(&report::eval_table(&rows), &c.out, "eval.csv", &cfg, c.seed)?;
    write(&report::eval_summary_table(&rows), &c.out, "eval_summary.csv", &cfg, c.seed)?;
    if args.trace {
        for (seed, actor) in seeds.iter().zip(&actors) {
            for &kind in &kinds {
                let mut records: Vec<SlotRecord> = Vec::new();
                baselines::evaluate_with(&cfg, kind, actor.as_ref(), *seed, args.episodes, |_, _, recs| {
                    records.extend_from_slice(recs)
                })?;
                write(&report::trace_table(&records), &c.out, &format!("trace_{kind}_seed{seed}.csv"), &cfg, *seed)?;
            }
        }
    }
    if args.heatmap {
        let env = Environment::new(&cfg, kinds[0].token_source(), c.seed, baselines::EVAL_EPISODE_BASE)?;
        write(&report::heatmap_table(env.heatmap()), &c.out, "heatmap.csv", &cfg, c.seed)?;
    }
    print_summary(&rows, &kinds);
    Ok(())
}

fn print_summary(rows: &[EvalSummary], kinds: &[BaselineKind]) {
    for k in kinds {
        let v: Vec<f64> = rows.iter().filter(|r| r.kind == *k).map(|r| r.mean_reward).collect();
        let g = report::group_stats(&v);
        println!("{:<18} mean reward {:+.5} (se {:.5}, {} seeds)", k.as_str(), g.mean, g.se, g.n);
    }
}

fn run_sweep(args: &SweepArgs) -> Result<()> {
    let c = &args.common;
    let param: SweepParam = args.param.parse()?;
    let values = sweep::parse_values(&args.values)?;
    let cfg = resolve(c)?;
    let plan = SweepPlan {
        param,
        values,
        kinds: parse_kinds(&args.baseline)?,
        seeds: seed_range(c.seed, args.seeds)?,
        episodes: args.episodes,
    };
    let actor = args.checkpoint.as_deref().map(load_actor).transpose()?;
    let rows = sweep::run_sweep(&cfg, &plan, actor.as_ref(), mode(c))?;
    write(&report::sweep_table(&rows), &c.out, "sweep.csv", &cfg, c.seed)?;
    for v in &plan.values {
        let value = sweep::format_value(param, *v);
        let line: Vec<String> = plan
            .kinds
            .iter()
            .map(|k| {
                let r: Vec<f64> = rows
                    .iter()
                    .filter(|r| r.value == value && r.summary.kind == *k)
                    .map(|r| r.summary.mean_reward)
                    .collect();
                format!("{k} {:+.4}", report::group_stats(&r).mean)
            })
            .collect();
        println!("{param}={value}: {}", line.join(", "));
    }
    Ok(())
}
