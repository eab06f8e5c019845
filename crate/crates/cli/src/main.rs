//! `onassign` command-line tool.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use onassign::bounds::{run_grid, BoundKind};
use onassign::driver::{draw_certificates, instance_profile, simulate, solve, verify, SamplerKind, SimulationConfig};
use onassign::hardness::{expected_opt_lower_bound, exact_expected_labels, run_gap_experiment};
use onassign::harness::{
    gen_random_distribution, gen_random_distributions, gen_random_graph, gen_random_hypergraph, gen_random_matchoid,
    gen_random_partition, gen_random_transversal, trial_rng, AtomOptions, Experiment, Model,
};
use onassign::instance::{Instance, System};
use onassign::model::{IndependenceSystem, WeightProfile};
use onassign::samplers::{SamplerReport, VerifyMode};
use onassign::scalar::{Rational, Scalar};
use onassign::Error;

#[derive(Parser)]
#[command(name = "onassign", version, about = "Online assignment over independence systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Offline optimum of one weight profile of an instance.
    Solve(SolveArgs),
    /// Repeated online runs with per-trial optimum, CSV rows and a JSON summary.
    Simulate(SimulateArgs),
    /// Check a certificate sampler's value and blocking guarantees on one profile.
    VerifySampler(VerifyArgs),
    /// Evaluate the combinatorial inequalities behind the competitive ratios.
    Constants(ConstantsArgs),
    /// Statistics of the lower-bound instance family.
    Hardness(HardnessArgs),
    /// Write a random instance as JSON.
    Gen(GenArgs),
}

#[derive(Args)]
struct ProfileArgs {
    /// Instance JSON file.
    instance: PathBuf,
    /// Draw the profile from the distributions with this seed instead of taking every agent's first atom.
    #[arg(long)]
    profile_seed: Option<u64>,
    /// Use exact rational arithmetic.
    #[arg(long)]
    exact: bool,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    profile: ProfileArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Iid,
    Pss,
    Secretary,
}

impl From<ModelArg> for Model {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Iid => Model::Iid,
            ModelArg::Pss => Model::Pss,
            ModelArg::Secretary => Model::Secretary,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SamplerArg {
    Hm,
    Directed,
    Matchoid,
}

impl From<SamplerArg> for SamplerKind {
    fn from(s: SamplerArg) -> Self {
        match s {
            SamplerArg::Hm => SamplerKind::Hm,
            SamplerArg::Directed => SamplerKind::Directed,
            SamplerArg::Matchoid => SamplerKind::Matchoid,
        }
    }
}

fn sampler_kind(arg: Option<SamplerArg>, system: &System) -> SamplerKind {
    arg.map(Into::into).unwrap_or_else(|| SamplerKind::for_system(system))
}

#[derive(Args)]
struct SimulateArgs {
    /// Instance JSON file.
    instance: PathBuf,
    #[arg(long, value_enum)]
    model: ModelArg,
    /// Defaults to the sampler matching the instance's system.
    #[arg(long, value_enum)]
    sampler: Option<SamplerArg>,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Override the instance's agent count (iid model).
    #[arg(long)]
    agents: Option<usize>,
    /// Random arrival order in the iid model.
    #[arg(long)]
    shuffle: bool,
    /// Secretary learning probability.
    #[arg(long)]
    p: Option<f64>,
    /// Blocking parameter used to pick the secretary schedule.
    #[arg(long)]
    k: Option<usize>,
    /// Secretary trials sharing one profile.
    #[arg(long, default_value_t = 1)]
    orders: usize,
    /// Use exact rational arithmetic.
    #[arg(long)]
    exact: bool,
    /// Write CSV values as exact `p/q` strings (implies --exact).
    #[arg(long)]
    exact_dump: bool,
    /// CSV output path; rows are skipped when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Fail (exit 1) unless the ratio of means clears this target minus three standard errors.
    #[arg(long)]
    target: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Exact,
    Mc,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    profile: ProfileArgs,
    #[arg(long, value_enum)]
    sampler: Option<SamplerArg>,
    #[arg(long, value_enum, default_value = "exact")]
    mode: ModeArg,
    /// Monte Carlo draws.
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    /// Seed for probes and Monte Carlo draws.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Include one draw of the per-agent certificates in the output.
    #[arg(long)]
    dump_certificates: bool,
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum CheckArg {
    Falling,
    Iid,
    Secretary,
    Hockey,
    All,
}

#[derive(Args)]
struct ConstantsArgs {
    #[arg(long, value_enum, default_value = "all")]
    check: CheckArg,
    #[arg(long, default_value_t = 50)]
    m_max: usize,
    #[arg(long, default_value_t = 6)]
    k_max: usize,
    /// Print every evaluated row, not just the failures and a tally.
    #[arg(long)]
    verbose: bool,
}

#[derive(Args)]
struct HardnessArgs {
    #[arg(long, default_value_t = 8)]
    m: usize,
    #[arg(long, default_value_t = 2000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also run the online algorithm on each draw.
    #[arg(long)]
    gap: bool,
    #[arg(long, value_enum, default_value = "iid")]
    model: ModelArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum SystemArg {
    Hypergraph,
    Graphic,
    Partition,
    Transversal,
    Matchoid,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    system: SystemArg,
    /// Nodes (hypergraph), vertices (graphic), elements (partition, matchoid) or left vertices (transversal).
    #[arg(long, default_value_t = 10)]
    n: usize,
    /// Edges (hypergraph, graphic), parts (partition), right vertices (transversal) or components (matchoid).
    #[arg(long, default_value_t = 8)]
    edges: usize,
    /// Largest hyperedge size.
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long, default_value_t = 6)]
    agents: usize,
    #[arg(long, default_value_t = 3)]
    atoms: usize,
    /// Each weight function is positive on exactly one element.
    #[arg(long)]
    single_minded: bool,
    /// Largest support of a weight function.
    #[arg(long, default_value_t = 3)]
    max_support: usize,
    /// One distribution shared by all agents.
    #[arg(long)]
    iid: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// Bad input is a usage error (2); anything that fails while running is 1.
fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<io::Error>().is_some() {
        return 2;
    }
    match e.downcast_ref::<Error>() {
        Some(
            Error::InvalidInstance(_)
            | Error::InvalidDistribution(_)
            | Error::InvalidParameter(_)
            | Error::InvalidInput(_)
            | Error::Io(_)
            | Error::Json(_),
        ) => 2,
        _ => 1,
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::VerifySampler(a) => cmd_verify(a),
        Command::Constants(a) => cmd_constants(a),
        Command::Hardness(a) => cmd_hardness(a),
        Command::Gen(a) => cmd_gen(a),
    }
}

fn load(path: &Path) -> Result<Instance> {
    Instance::load(path).with_context(|| format!("loading {}", path.display()))
}

fn print_json(v: &Value) -> Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, v)?;
    writeln!(out)?;
    Ok(())
}

fn value_json<S: Scalar>(v: &S) -> Value {
    json!({ "value": v.as_f64(), "exact": v.to_exact_string() })
}

fn cmd_solve(a: SolveArgs) -> Result<bool> {
    let inst = load(&a.profile.instance)?;
    fn go<S: Scalar>(inst: &Instance, seed: Option<u64>) -> Result<Value> {
        let profile: WeightProfile<S> = instance_profile(inst, seed);
        let (asg, value) = solve(inst, &profile)?;
        Ok(json!({ "assignment": asg.0, "value": value.as_f64(), "value_exact": value.to_exact_string() }))
    }
    let v = if a.profile.exact {
        go::<Rational>(&inst, a.profile.profile_seed)?
    } else {
        go::<f64>(&inst, a.profile.profile_seed)?
    };
    print_json(&v)?;
    Ok(true)
}

fn cmd_simulate(a: SimulateArgs) -> Result<bool> {
    let mut inst = load(&a.instance)?;
    if let Some(m) = a.agents {
        inst = Instance::new(inst.system, inst.distributions, Some(m))?;
    }
    let kind = sampler_kind(a.sampler, &inst.system);
    let config = SimulationConfig {
        shuffle: a.shuffle,
        p: a.p,
        k: a.k,
        orders: a.orders,
        ..SimulationConfig::new(a.model.into(), a.trials, a.seed)
    };
    let exact = a.exact || a.exact_dump;
    let summary = if exact {
        report_experiment(&simulate::<Rational>(&inst, kind, &config)?, &a)?
    } else {
        report_experiment(&simulate::<f64>(&inst, kind, &config)?, &a)?
    };
    let mut v = serde_json::to_value(summary)?;
    v["sampler"] = json!(kind.to_string());
    v["model"] = json!(Model::from(a.model));
    v["seed"] = json!(a.seed);
    let pass = a.target.map(|t| summary.clears(t, 3.0));
    if let Some(t) = a.target {
        v["target"] = json!(t);
        v["pass"] = json!(pass);
    }
    print_json(&v)?;
    Ok(pass.unwrap_or(true))
}

fn report_experiment<S: Scalar>(exp: &Experiment<S>, a: &SimulateArgs) -> Result<onassign::harness::SummaryStats> {
    if let Some(path) = &a.out {
        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        exp.write_csv(BufWriter::new(file), a.exact_dump)?;
    }
    Ok(exp.summary()?)
}

fn cmd_verify(a: VerifyArgs) -> Result<bool> {
    let inst = load(&a.profile.instance)?;
    let kind = sampler_kind(a.sampler, &inst.system);
    let mode = match a.mode {
        ModeArg::Exact => VerifyMode::Exact,
        ModeArg::Mc => VerifyMode::MonteCarlo,
    };
    fn go<S: Scalar>(inst: &Instance, kind: SamplerKind, a: &VerifyArgs, mode: VerifyMode) -> Result<(Value, bool)> {
        let profile: WeightProfile<S> = instance_profile(inst, a.profile.profile_seed);
        let r = verify(inst, kind, &profile, mode, a.trials, a.seed)?;
        let mut v = report_json(&r);
        if a.dump_certificates {
            v["certificates"] = serde_json::to_value(draw_certificates(inst, kind, &profile, a.seed)?)?;
        }
        Ok((v, r.approximation_holds() && r.blocking_holds()))
    }
    // Monte Carlo frequencies are estimates; they only make sense as doubles
    let (v, ok) = if a.profile.exact && mode == VerifyMode::Exact {
        go::<Rational>(&inst, kind, &a, mode)?
    } else {
        go::<f64>(&inst, kind, &a, mode)?
    };
    print_json(&v)?;
    Ok(ok || mode == VerifyMode::MonteCarlo)
}

fn report_json<S: Scalar>(r: &SamplerReport<S>) -> Value {
    json!({
        "sampler": r.sampler,
        "method": r.method,
        "expected_value": value_json(&r.expected_value),
        "opt": value_json(&r.opt),
        "gamma_observed": r.gamma_observed,
        "k_observed": value_json(&r.k_observed),
        "k_bound": r.k_bound,
        "probes": r.probes,
        "worst_probe": r.worst_probe.as_ref().map(|c| format!("{c:?}")),
        "approximation_holds": r.approximation_holds(),
        "blocking_holds": r.blocking_holds(),
    })
}

fn cmd_constants(a: ConstantsArgs) -> Result<bool> {
    let kinds: Vec<BoundKind> = match a.check {
        CheckArg::Falling => vec![BoundKind::Falling],
        CheckArg::Iid => vec![BoundKind::Iid],
        CheckArg::Secretary => vec![BoundKind::Secretary],
        CheckArg::Hockey => vec![BoundKind::Hockey],
        CheckArg::All => vec![BoundKind::Falling, BoundKind::Iid, BoundKind::Secretary, BoundKind::Hockey],
    };
    let mut all_ok = true;
    let mut tallies = Vec::new();
    for kind in kinds {
        let rows = run_grid(kind, a.m_max, a.k_max)?;
        let failed: Vec<_> = rows.iter().filter(|r| !r.holds).collect();
        all_ok &= failed.is_empty();
        let shown: Vec<Value> = if a.verbose {
            rows.iter().map(serde_json::to_value).collect::<serde_json::Result<_>>()?
        } else {
            failed.iter().map(serde_json::to_value).collect::<serde_json::Result<_>>()?
        };
        tallies.push(json!({
            "check": format!("{kind:?}").to_lowercase(),
            "evaluated": rows.len(),
            "failed": failed.len(),
            "rows": shown,
        }));
    }
    print_json(&json!({ "m_max": a.m_max, "k_max": a.k_max, "pass": all_ok, "checks": tallies }))?;
    Ok(all_ok)
}

fn cmd_hardness(a: HardnessArgs) -> Result<bool> {
    let exact = exact_expected_labels(a.m);
    let mut v = if a.gap {
        let r = run_gap_experiment(a.m, a.model.into(), a.trials, a.seed)?;
        let mut v = json!({
            "m": r.m,
            "trials": r.trials,
            "model": r.model,
            "mean_L": r.mean_l,
            "se_L": r.se_l,
            "exact_mean_L": r.exact_mean_l,
            "bound": r.bound,
            "mean_alg": r.mean_alg,
            "se_alg": r.se_alg,
            "log2_bound": r.log2_bound,
        });
        v["alg_below_log2"] = json!(r.mean_alg <= r.log2_bound + 3.0 * r.se_alg);
        v
    } else {
        let l = expected_opt_lower_bound(a.m, a.trials, &mut trial_rng(a.seed))?;
        json!({
            "m": a.m,
            "trials": a.trials,
            "mean_L": l.mean,
            "se_L": l.se,
            "exact_mean_L": exact,
            "bound": a.m as f64 * (1.0 - (-1.0f64).exp()),
        })
    };
    let mean = v["mean_L"].as_f64().unwrap_or(f64::NAN);
    let se = v["se_L"].as_f64().unwrap_or(f64::NAN);
    let bound = v["bound"].as_f64().unwrap_or(f64::NAN);
    let l_ok = (mean - exact).abs() <= 3.0 * se + 1e-12 && mean >= bound - 3.0 * se;
    let ok = l_ok && v.get("alg_below_log2").and_then(Value::as_bool).unwrap_or(true);
    v["pass"] = json!(ok);
    print_json(&v)?;
    Ok(ok)
}

fn cmd_gen(a: GenArgs) -> Result<bool> {
    let mut rng = trial_rng(a.seed);
    let system = match a.system {
        SystemArg::Hypergraph => System::Hypergraph(gen_random_hypergraph(a.n, a.edges, a.k, &mut rng)?),
        SystemArg::Graphic => System::Matroid(gen_random_graph(a.n, a.edges, &mut rng)?.into()),
        SystemArg::Partition => System::Matroid(gen_random_partition(a.n, a.edges, &mut rng)?.into()),
        SystemArg::Transversal => System::Matroid(gen_random_transversal(a.n, a.edges, &mut rng)?.into()),
        SystemArg::Matchoid => System::Matchoid(gen_random_matchoid(a.n, a.edges, &mut rng)?),
    };
    let opts = AtomOptions { max_support: a.max_support, single_minded: a.single_minded, ..AtomOptions::default() };
    let ground = IndependenceSystem::ground_size(&system);
    let (dists, agents) = if a.iid {
        (vec![gen_random_distribution::<Rational, _>(ground, a.atoms, &opts, &mut rng)?], Some(a.agents))
    } else {
        (gen_random_distributions::<Rational, _>(ground, a.agents, a.atoms, &opts, &mut rng)?, None)
    };
    let text = Instance::new(system, dists, agents)?.to_json()?;
    match &a.out {
        Some(path) => std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))?,
        None => println!("{text}"),
    }
    Ok(true)
}
