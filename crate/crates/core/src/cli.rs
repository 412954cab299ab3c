//! Batch experiment runner: configuration resolution, seeded reproducible
//! sweeps, and CSV/JSON emission.
//!
//! Subcommands: `bounds`, `simulate`, `verify`, `de`, `sweep`. Parameters
//! come from flags or a JSON file via `--config`; flags override file
//! values. Every emitted file carries the tool version, the resolved
//! experiment configuration, and the seed. Worker count is deliberately
//! excluded from the embedded configuration: the same seed must produce
//! byte-identical output at any `--threads` value, which the per-trial seed
//! derivation plus ordered result merging guarantee.
//!
//! Exit codes: 0 success, 1 validation failure, 2 invalid configuration,
//! 3 enumeration budget exceeded.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::bounds::{self, BoundInputs};
use crate::channels::BmsChannel;
use crate::decoder::{self, TraceRow};
use crate::density_evolution::{self, ThresholdCriterion};
use crate::ensembles::{CodeFamily, DegreeDistribution, TannerGraph};
use crate::math::{derive_seed, mean_and_stderr};
use crate::oracle::{self, ExactCode, KConvention, OracleError};

const TOOL: &str = "mpbounds";
const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("enumeration budget exceeded: {0}")]
    Budget(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::InvalidConfig(_) => 2,
            CliError::Validation(_) | CliError::Io(_) => 1,
            CliError::Budget(_) => 3,
        }
    }
}

fn oracle_err(e: OracleError) -> CliError {
    match e {
        OracleError::BudgetExceeded { .. } => CliError::Budget(e.to_string()),
        other => CliError::InvalidConfig(other.to_string()),
    }
}

#[derive(Parser, Debug)]
#[command(name = TOOL, version, about = "Sparse-graph code simulation and converse-bound toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Evaluate the bound chain from measured or assumed quantities.
    Bounds(BoundsArgs),
    /// Monte-Carlo belief-propagation simulation with per-iteration traces.
    Simulate(SimulateArgs),
    /// Exact small-instance validation of the entropy bound and the
    /// information identity.
    Verify(VerifyArgs),
    /// Density evolution: erasure trajectories, thresholds, population
    /// dynamics.
    De(DeArgs),
    /// Minimal operations-per-bit curve over a gap-from-capacity grid.
    Sweep(SweepArgs),
}

/// Channel description as it appears in JSON configs:
/// {"kind": "bsc"|"bec"|"biawgn", "param": number, "bins": integer}.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub kind: String,
    pub param: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bins: Option<usize>,
}

impl ChannelSpec {
    pub fn build(&self) -> Result<BmsChannel, CliError> {
        let err = |e: crate::channels::ChannelError| CliError::InvalidConfig(e.to_string());
        match self.kind.as_str() {
            "bsc" => BmsChannel::bsc(self.param).map_err(err),
            "bec" => BmsChannel::bec(self.param).map_err(err),
            "biawgn" => {
                BmsChannel::quantized_biawgn(self.param, self.bins.unwrap_or(64)).map_err(err)
            }
            other => Err(CliError::InvalidConfig(format!(
                "unknown channel kind '{other}' (expected bsc, bec, or biawgn)"
            ))),
        }
    }

    fn domain_label(&self) -> &'static str {
        // The bound chain does not apply to erasure channels; reports carry
        // the label so downstream plots can exclude those runs.
        if self.kind == "bec" {
            "bec-outside-bound-domain"
        } else {
            "bms"
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FamilyArg {
    Ldpc,
    Ldgm,
}

impl From<FamilyArg> for CodeFamily {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Ldpc => CodeFamily::Ldpc,
            FamilyArg::Ldgm => CodeFamily::Ldgm,
        }
    }
}

fn meta(seed: u64, config: serde_json::Value) -> serde_json::Value {
    json!({ "tool": TOOL, "version": VERSION, "seed": seed, "config": config })
}

fn csv_header_comment(seed: u64, config: &serde_json::Value) -> String {
    format!("# {TOOL} v{VERSION} seed={seed} config={config}\n")
}

fn write_output(path: Option<&Path>, content: &str) -> Result<(), CliError> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent() {
                if !dir.as_os_str().is_empty() {
                    fs::create_dir_all(dir)?;
                }
            }
            fs::write(p, content)?;
        }
        None => print!("{content}"),
    }
    Ok(())
}

fn load_file_config<T: for<'de> Deserialize<'de> + Default>(
    path: &Option<PathBuf>,
) -> Result<T, CliError> {
    match path {
        Some(p) => {
            let text = fs::read_to_string(p)?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::InvalidConfig(format!("{}: {e}", p.display())))
        }
        None => Ok(T::default()),
    }
}

fn resolve_channel(
    kind: &Option<String>,
    param: Option<f64>,
    bins: Option<usize>,
    file: &Option<ChannelSpec>,
) -> Result<Option<ChannelSpec>, CliError> {
    match (kind, file) {
        (Some(k), _) => {
            let param = param
                .or(file.as_ref().map(|c| c.param))
                .ok_or_else(|| CliError::InvalidConfig("--channel-param is required".into()))?;
            Ok(Some(ChannelSpec {
                kind: k.clone(),
                param,
                bins: bins.or(file.as_ref().and_then(|c| c.bins)),
            }))
        }
        (None, Some(spec)) => {
            let mut spec = spec.clone();
            if let Some(p) = param {
                spec.param = p;
            }
            if let Some(b) = bins {
                spec.bins = Some(b);
            }
            Ok(Some(spec))
        }
        (None, None) => Ok(None),
    }
}

/// Parse a gap grid "start:stop[:points]" into logarithmically spaced
/// values from start to stop inclusive. Defaults to one point per decade.
pub fn parse_eps_grid(text: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() < 2 || parts.len() > 3 {
        return Err(CliError::InvalidConfig(format!(
            "eps grid '{text}' is not start:stop[:points]"
        )));
    }
    let parse = |s: &str| -> Result<f64, CliError> {
        s.parse::<f64>()
            .map_err(|e| CliError::InvalidConfig(format!("bad grid endpoint '{s}': {e}")))
    };
    let start = parse(parts[0])?;
    let stop = parse(parts[1])?;
    if !start.is_finite() || !stop.is_finite() || start <= 0.0 || stop <= 0.0 || start == stop {
        return Err(CliError::InvalidConfig(
            "grid endpoints must be positive and distinct".into(),
        ));
    }
    let decades = (stop.log10() - start.log10()).abs();
    let points = match parts.get(2) {
        Some(s) => s
            .parse::<usize>()
            .map_err(|e| CliError::InvalidConfig(format!("bad point count: {e}")))?,
        None => decades.round().max(1.0) as usize + 1,
    };
    if points < 2 {
        return Err(CliError::InvalidConfig(
            "grid needs at least 2 points".into(),
        ));
    }
    let la = start.log10();
    let lb = stop.log10();
    Ok((0..points)
        .map(|i| 10f64.powf(la + (lb - la) * i as f64 / (points - 1) as f64))
        .collect())
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Bounds(args) => cmd_bounds(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Verify(args) => cmd_verify(args),
        Command::De(args) => cmd_de(args),
        Command::Sweep(args) => cmd_sweep(args),
    }
}

// ---------------------------------------------------------------------------
// bounds

#[derive(Args, Debug)]
pub struct BoundsArgs {
    /// JSON config file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Channel capacity in bits (alternative to a channel spec).
    #[arg(long)]
    pub capacity: Option<f64>,
    /// Marginal output entropy H(Y) in bits (derived from the channel when
    /// one is given).
    #[arg(long)]
    pub output_entropy: Option<f64>,
    #[arg(long)]
    pub channel_kind: Option<String>,
    #[arg(long)]
    pub channel_param: Option<f64>,
    #[arg(long)]
    pub channel_bins: Option<usize>,
    /// Measured entropy decrease per output bit, in bits.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Neighborhood size entering the bound.
    #[arg(long)]
    pub k: Option<f64>,
    /// Operations per information bit (uses the k_bd cap instead of k).
    #[arg(long)]
    pub c: Option<f64>,
    /// Gap grid start:stop[:points] for a c_min curve.
    #[arg(long)]
    pub eps_grid: Option<String>,
    /// Code rate, for the error-probability lower bound.
    #[arg(long)]
    pub rate: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
struct BoundsFile {
    capacity: Option<f64>,
    output_entropy: Option<f64>,
    tau: Option<f64>,
    k: Option<f64>,
    c: Option<f64>,
    eps_grid: Option<String>,
    rate: Option<f64>,
    channel: Option<ChannelSpec>,
    seed: Option<u64>,
}

fn cmd_bounds(args: BoundsArgs) -> Result<(), CliError> {
    let file: BoundsFile = load_file_config(&args.config)?;
    let channel = resolve_channel(
        &args.channel_kind,
        args.channel_param,
        args.channel_bins,
        &file.channel,
    )?;
    let stats = channel
        .as_ref()
        .map(|c| c.build())
        .transpose()?
        .map(|ch| ch.stats());
    let capacity = args
        .capacity
        .or(file.capacity)
        .or(stats.map(|s| s.capacity))
        .ok_or_else(|| CliError::InvalidConfig("supply --capacity or a channel".into()))?;
    let output_entropy = args
        .output_entropy
        .or(file.output_entropy)
        .or(stats.map(|s| s.output_entropy));
    let tau = args
        .tau
        .or(file.tau)
        .ok_or_else(|| CliError::InvalidConfig("missing tau".into()))?;
    let k = args.k.or(file.k);
    let c = args.c.or(file.c);
    let eps_grid = args.eps_grid.or(file.eps_grid);
    let rate = args.rate.or(file.rate);
    let seed = if args.seed != 0 {
        args.seed
    } else {
        file.seed.unwrap_or(0)
    };

    let selectors =
        usize::from(k.is_some()) + usize::from(c.is_some()) + usize::from(eps_grid.is_some());
    if selectors == 0 {
        return Err(CliError::InvalidConfig(
            "supply one of --k, --c, or --eps-grid".into(),
        ));
    }
    if selectors > 1 {
        return Err(CliError::InvalidConfig(
            "supply only one of --k, --c, and --eps-grid".into(),
        ));
    }

    let config = json!({
        "capacity": capacity,
        "output_entropy": output_entropy,
        "tau": tau,
        "k": k,
        "c": c,
        "eps_grid": eps_grid,
        "rate": rate,
        "channel": channel,
        "bounds_domain": channel.as_ref().map(|c| c.domain_label()).unwrap_or("bms"),
    });

    if let Some(grid_text) = eps_grid {
        let grid = parse_eps_grid(&grid_text)?;
        let csv = cmin_curve_csv(&grid, tau, seed, &config)?;
        return write_output(args.out.as_deref(), &csv);
    }

    let inputs = BoundInputs {
        capacity,
        output_entropy,
        tau,
        k,
        ops_per_bit: c,
        rate,
        eps: None,
    };
    let report =
        bounds::evaluate_bounds(&inputs).map_err(|e| CliError::InvalidConfig(e.to_string()))?;
    let doc = json!({
        "meta": meta(seed, config),
        "report": report,
    });
    write_output(
        args.out.as_deref(),
        &format!(
            "{}\n",
            serde_json::to_string_pretty(&doc).expect("serializable")
        ),
    )
}

fn cmin_curve_csv(
    grid: &[f64],
    tau: f64,
    seed: u64,
    config: &serde_json::Value,
) -> Result<String, CliError> {
    let mut out = csv_header_comment(seed, config);
    out.push_str("eps,tau,c_min,k_bd_log2_at_cmin\n");
    for &eps in grid {
        let c_min = bounds::min_ops_per_bit(eps, tau)
            .map_err(|e| CliError::InvalidConfig(e.to_string()))?;
        let kbd = bounds::k_bd(c_min).map_err(|e| CliError::InvalidConfig(e.to_string()))?;
        out.push_str(&format!("{eps},{tau},{c_min},{}\n", kbd.log2));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// sweep

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Decoding-success parameter the curve is computed for.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Gap grid start:stop[:points], logarithmically spaced.
    #[arg(long)]
    pub eps_grid: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
struct SweepFile {
    tau: Option<f64>,
    eps_grid: Option<String>,
    seed: Option<u64>,
}

fn cmd_sweep(args: SweepArgs) -> Result<(), CliError> {
    let file: SweepFile = load_file_config(&args.config)?;
    let tau = args
        .tau
        .or(file.tau)
        .ok_or_else(|| CliError::InvalidConfig("missing tau".into()))?;
    let grid_text = args
        .eps_grid
        .or(file.eps_grid)
        .ok_or_else(|| CliError::InvalidConfig("missing eps grid".into()))?;
    let seed = if args.seed != 0 {
        args.seed
    } else {
        file.seed.unwrap_or(0)
    };
    let grid = parse_eps_grid(&grid_text)?;
    let config = json!({ "tau": tau, "eps_grid": grid_text });
    let csv = cmin_curve_csv(&grid, tau, seed, &config)?;
    write_output(args.out.as_deref(), &csv)
}

// ---------------------------------------------------------------------------
// simulate

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub channel_kind: Option<String>,
    #[arg(long)]
    pub channel_param: Option<f64>,
    #[arg(long)]
    pub channel_bins: Option<usize>,
    /// Variable-node degree.
    #[arg(long)]
    pub dv: Option<usize>,
    /// Check-node degree.
    #[arg(long)]
    pub dc: Option<usize>,
    #[arg(long, value_enum)]
    pub family: Option<FamilyArg>,
    /// Block length.
    #[arg(long)]
    pub n: Option<usize>,
    /// Decoding iterations per trial.
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Independent transmissions (each samples a fresh graph).
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; the output is byte-identical at any value.
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    /// Trace CSV destination (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Summary JSON destination (stdout when omitted and --out is given).
    #[arg(long)]
    pub summary_out: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
struct SimulateFile {
    channel: Option<ChannelSpec>,
    dv: Option<usize>,
    dc: Option<usize>,
    family: Option<String>,
    n: Option<usize>,
    iterations: Option<usize>,
    trials: Option<usize>,
    seed: Option<u64>,
}

struct TrialResult {
    rows: Vec<TraceRow>,
    tau_p10: f64,
    k_max: Option<usize>,
    tree_fraction: Option<f64>,
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), CliError> {
    let file: SimulateFile = load_file_config(&args.config)?;
    let channel_spec = resolve_channel(
        &args.channel_kind,
        args.channel_param,
        args.channel_bins,
        &file.channel,
    )?
    .ok_or_else(|| CliError::InvalidConfig("a channel is required".into()))?;
    let ch = channel_spec.build()?;
    let dv = args
        .dv
        .or(file.dv)
        .ok_or_else(|| CliError::InvalidConfig("missing --dv".into()))?;
    let dc = args
        .dc
        .or(file.dc)
        .ok_or_else(|| CliError::InvalidConfig("missing --dc".into()))?;
    let family: CodeFamily = match (&args.family, file.family.as_deref()) {
        (Some(f), _) => (*f).into(),
        (None, Some("ldgm")) => CodeFamily::Ldgm,
        _ => CodeFamily::Ldpc,
    };
    let n = args
        .n
        .or(file.n)
        .ok_or_else(|| CliError::InvalidConfig("missing --n".into()))?;
    let iterations = args.iterations.or(file.iterations).unwrap_or(20);
    let trials = args.trials.or(file.trials).unwrap_or(10);
    let seed = if args.seed != 0 {
        args.seed
    } else {
        file.seed.unwrap_or(0)
    };
    if iterations == 0 || trials == 0 {
        return Err(CliError::InvalidConfig(
            "iterations and trials must be at least 1".into(),
        ));
    }
    let dd =
        DegreeDistribution::regular(dv, dc).map_err(|e| CliError::InvalidConfig(e.to_string()))?;

    // Worker count is execution infrastructure, not experiment identity:
    // it is kept out of the embedded config so outputs stay byte-identical
    // across --threads values.
    let config = json!({
        "channel": channel_spec,
        "dv": dv,
        "dc": dc,
        "family": if family == CodeFamily::Ldgm { "ldgm" } else { "ldpc" },
        "n": n,
        "iterations": iterations,
        "trials": trials,
        "seed": seed,
        "bounds_domain": channel_spec.domain_label(),
    });

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.threads.max(1))
        .build()
        .map_err(|e| CliError::InvalidConfig(e.to_string()))?;
    let results: Result<Vec<TrialResult>, CliError> = pool.install(|| {
        (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, t as u64));
                let g = decoder::sample_family_graph_with_retries(&dd, n, family, &mut rng)
                    .map_err(|e| CliError::InvalidConfig(e.to_string()))?;
                let tx = vec![0u8; n];
                let received: Vec<usize> = (0..n).map(|_| ch.sample_output(0, &mut rng)).collect();
                let out = decoder::bp_decode(&g, &ch, &received, &tx, iterations)
                    .map_err(|e| CliError::InvalidConfig(e.to_string()))?;
                let h_y = ch.mixture_output_entropy(0.5);
                let decreases: Vec<f64> =
                    out.cond_output_entropies.iter().map(|&m| h_y - m).collect();
                let tau_p10 = crate::math::percentile(&decreases, 0.1);
                // Neighborhood statistics only on the first trial's graph;
                // they describe the ensemble, not the noise realization.
                let (k_max, tree_fraction) = if t == 0 {
                    let mut k_max = 0usize;
                    let mut trees = 0usize;
                    for v in 0..g.n() {
                        let (nb, tree) = g.neighborhood_with_tree_flag(v, iterations);
                        k_max = k_max.max(nb.size());
                        trees += usize::from(tree);
                    }
                    (Some(k_max), Some(trees as f64 / g.n() as f64))
                } else {
                    (None, None)
                };
                Ok(TrialResult {
                    rows: out.trace.rows,
                    tau_p10,
                    k_max,
                    tree_fraction,
                })
            })
            .collect()
    });
    let results = results?;

    let mut csv = csv_header_comment(seed, &config);
    csv.push_str("l,pe,tau_hat,tau_stderr,ops_total,ops_per_info_bit\n");
    let mut final_tau = (0.0, 0.0);
    let mut final_ops_per_bit = 0.0;
    for i in 0..iterations {
        let pes: Vec<f64> = results.iter().map(|r| r.rows[i].pe).collect();
        let taus: Vec<f64> = results.iter().map(|r| r.rows[i].tau_hat).collect();
        let ops: Vec<f64> = results.iter().map(|r| r.rows[i].ops_total).collect();
        let opb: Vec<f64> = results.iter().map(|r| r.rows[i].ops_per_info_bit).collect();
        let (pe, _) = mean_and_stderr(&pes);
        let (tau, tau_err) = mean_and_stderr(&taus);
        let tau_err = if results.len() >= 2 {
            tau_err
        } else {
            results[0].rows[i].tau_stderr
        };
        let (ops_mean, _) = mean_and_stderr(&ops);
        let (opb_mean, _) = mean_and_stderr(&opb);
        csv.push_str(&format!(
            "{},{pe},{tau},{tau_err},{ops_mean},{opb_mean}\n",
            i + 1
        ));
        if i + 1 == iterations {
            final_tau = (tau, tau_err);
            final_ops_per_bit = opb_mean;
        }
    }
    write_output(args.out.as_deref(), &csv)?;

    let stats = ch.stats();
    let k_max = results[0].k_max.unwrap_or(0);
    let tree_fraction = results[0].tree_fraction.unwrap_or(0.0);
    let summary = json!({
        "meta": meta(seed, config.clone()),
        // Flat keys below feed `bounds --config` directly: k already
        // includes the center bit alongside its k_max-size neighborhood.
        "capacity": stats.capacity,
        "output_entropy": stats.output_entropy,
        "cond_output_entropy": stats.cond_output_entropy,
        "tau": final_tau.0,
        "tau_stderr": final_tau.1,
        "tau_p10": results.iter().map(|r| r.tau_p10).sum::<f64>() / results.len() as f64,
        "k": (k_max + 1) as f64,
        "k_max_bfs": k_max,
        "k_estimate": crate::ensembles::paper_k_estimate(dd.alpha(), dd.beta(), iterations),
        "rate": dd.design_rate(),
        "iterations": iterations,
        "ops_per_info_bit": final_ops_per_bit,
        "tree_fraction": tree_fraction,
        "bounds_domain": channel_spec.domain_label(),
    });
    let summary_text = format!(
        "{}\n",
        serde_json::to_string_pretty(&summary).expect("serializable")
    );
    match (&args.summary_out, &args.out) {
        (Some(path), _) => write_output(Some(path), &summary_text),
        (None, Some(_)) => write_output(None, &summary_text),
        (None, None) => Ok(()), // trace already went to stdout
    }
}

// ---------------------------------------------------------------------------
// verify

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Override the built-in instance suite with a single ensemble.
    #[arg(long)]
    pub dv: Option<usize>,
    #[arg(long)]
    pub dc: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Instances per configuration.
    #[arg(long, default_value_t = 2)]
    pub seeds_per_config: usize,
    /// Crossover probabilities to check (BSC).
    #[arg(long, value_delimiter = ',')]
    pub p: Option<Vec<f64>>,
    /// Channel kind for custom runs (bsc, bec, biawgn).
    #[arg(long)]
    pub channel_kind: Option<String>,
    #[arg(long)]
    pub channel_bins: Option<usize>,
    /// Neighborhood depths to check.
    #[arg(long, value_delimiter = ',')]
    pub l: Option<Vec<usize>>,
    /// Use each node's own neighborhood size instead of the worst case.
    #[arg(long, default_value_t = false)]
    pub per_node: bool,
    /// Test hook: shift the bound's right-hand side before checking.
    #[arg(long, hide = true, default_value_t = 0.0, allow_hyphen_values = true)]
    pub rhs_offset: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
struct VerifyFile {
    seed: Option<u64>,
    p: Option<Vec<f64>>,
    l: Option<Vec<usize>>,
}

/// The built-in verification suite: small ensembles with design rate at
/// most 1/2 whose kernels enumerate instantly. Degree-saturated
/// configurations (check degree equal to the block length) are excluded:
/// their unique simple graph defeats the swap repair.
pub const DEFAULT_SUITE: &[(usize, usize, usize)] = &[
    (4, 6, 9),
    (3, 6, 8),
    (3, 6, 10),
    (2, 4, 6),
    (2, 4, 8),
    (2, 4, 10),
    (2, 3, 6),
    (2, 3, 9),
    (3, 4, 8),
    (3, 5, 10),
];

/// Deterministically sample a small LDPC instance and enumerate its kernel.
pub fn small_instance(dv: usize, dc: usize, n: usize, seed: u64) -> Result<ExactCode, CliError> {
    let dd =
        DegreeDistribution::regular(dv, dc).map_err(|e| CliError::InvalidConfig(e.to_string()))?;
    for attempt in 0..64u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, attempt));
        match TannerGraph::sample(&dd, n, CodeFamily::Ldpc, &mut rng) {
            Ok(g) => return ExactCode::from_graph_kernel(&g).map_err(oracle_err),
            Err(crate::ensembles::EnsembleError::ConstructionFailed) => continue,
            Err(e) => return Err(CliError::InvalidConfig(e.to_string())),
        }
    }
    Err(CliError::InvalidConfig(format!(
        "could not realize a simple ({dv},{dc}) graph at n={n}"
    )))
}

fn cmd_verify(args: VerifyArgs) -> Result<(), CliError> {
    let file: VerifyFile = load_file_config(&args.config)?;
    let seed = if args.seed != 0 {
        args.seed
    } else {
        file.seed.unwrap_or(0)
    };
    let ps = args.p.or(file.p).unwrap_or_else(|| vec![0.05, 0.1, 0.2]);
    let ls = args.l.or(file.l).unwrap_or_else(|| vec![1, 2]);
    if ps.is_empty() || ls.is_empty() {
        return Err(CliError::InvalidConfig("empty p or l list".into()));
    }
    let convention = if args.per_node {
        KConvention::PerNode
    } else {
        KConvention::NodeMax
    };

    let suite: Vec<(usize, usize, usize)> = match (args.dv, args.dc, args.n) {
        (Some(dv), Some(dc), Some(n)) => vec![(dv, dc, n)],
        (None, None, None) => DEFAULT_SUITE.to_vec(),
        _ => {
            return Err(CliError::InvalidConfig(
                "custom suites need all of --dv, --dc, --n".into(),
            ))
        }
    };

    let config = json!({
        "suite": suite.iter().map(|&(dv, dc, n)| json!({"dv": dv, "dc": dc, "n": n})).collect::<Vec<_>>(),
        "seeds_per_config": args.seeds_per_config,
        "p": ps,
        "l": ls,
        "convention": if args.per_node { "per-node" } else { "node-max" },
        "rhs_offset": args.rhs_offset,
        "channel_kind": args.channel_kind.clone().unwrap_or_else(|| "bsc".into()),
    });

    let mut instances = Vec::new();
    let mut all_hold = true;
    let mut min_slack = f64::INFINITY;
    let mut max_residual: f64 = 0.0;
    for (idx, &(dv, dc, n)) in suite.iter().enumerate() {
        for rep in 0..args.seeds_per_config {
            let inst_seed = derive_seed(seed, (idx * args.seeds_per_config + rep) as u64);
            let code = small_instance(dv, dc, n, inst_seed)?;
            let label = format!("dv{dv}_dc{dc}_n{n}_r{rep}");
            let mut checks = Vec::new();
            for &p in &ps {
                let ch = match args.channel_kind.as_deref() {
                    None | Some("bsc") => BmsChannel::bsc(p),
                    Some("bec") => BmsChannel::bec(p),
                    Some("biawgn") => {
                        BmsChannel::quantized_biawgn(p, args.channel_bins.unwrap_or(64))
                    }
                    Some(other) => {
                        return Err(CliError::InvalidConfig(format!(
                            "unknown channel kind '{other}'"
                        )))
                    }
                }
                .map_err(|e| CliError::InvalidConfig(e.to_string()))?;
                let fano = oracle::exact_fano_chain(&code, &ch).map_err(oracle_err)?;
                max_residual = max_residual.max(fano.identity_residual);
                let mut depth_reports = Vec::new();
                for &l in &ls {
                    let check = oracle::verify_permutation_bound(&code, &ch, l, convention)
                        .map_err(oracle_err)?;
                    let rhs = check.rhs + args.rhs_offset;
                    let slack = rhs - check.lhs;
                    let holds = slack >= -1e-9;
                    all_hold &= holds;
                    min_slack = min_slack.min(slack);
                    depth_reports.push(json!({
                        "l": l,
                        "lhs": check.lhs,
                        "rhs": rhs,
                        "slack": slack,
                        "holds": holds,
                        "tau_bar": check.tau_bar,
                        "k_bar": check.k_bar,
                    }));
                }
                checks.push(json!({
                    "p": p,
                    "fano_identity_residual": fano.identity_residual,
                    "h_x_given_y": fano.h_x_given_y,
                    "rate": fano.rate,
                    "bounds": depth_reports,
                }));
            }
            instances.push(json!({
                "label": label,
                "n": code.n(),
                "codewords": code.num_codewords(),
                "rate": code.rate(),
                "checks": checks,
            }));
        }
    }

    let identity_ok = max_residual <= 1e-9;
    let doc = json!({
        "meta": meta(seed, config),
        "instances": instances,
        "summary": {
            "instances": instances.len(),
            "all_hold": all_hold,
            "min_slack": min_slack,
            "max_fano_residual": max_residual,
            "identity_ok": identity_ok,
        },
    });
    write_output(
        args.out.as_deref(),
        &format!(
            "{}\n",
            serde_json::to_string_pretty(&doc).expect("serializable")
        ),
    )?;
    if !all_hold {
        return Err(CliError::Validation(format!(
            "entropy bound violated on at least one instance (min slack {min_slack:e})"
        )));
    }
    if !identity_ok {
        return Err(CliError::Validation(format!(
            "information identity residual {max_residual:e} above 1e-9"
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// de

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DeMode {
    /// Exact erasure recursion.
    Trajectory,
    /// Bisection for the largest converging erasure probability.
    Threshold,
    /// Population dynamics on an arbitrary discrete symmetric channel.
    Population,
}

#[derive(Args, Debug)]
pub struct DeArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = DeMode::Trajectory)]
    pub mode: DeMode,
    #[arg(long)]
    pub dv: Option<usize>,
    #[arg(long)]
    pub dc: Option<usize>,
    /// Erasure probability (trajectory mode).
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub channel_kind: Option<String>,
    #[arg(long)]
    pub channel_param: Option<f64>,
    #[arg(long)]
    pub channel_bins: Option<usize>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub pop_size: Option<usize>,
    /// Bisection tolerance (threshold mode).
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
    /// Convergence criterion override: iteration cap.
    #[arg(long)]
    pub max_de_iters: Option<usize>,
    /// Convergence criterion override: terminal erasure probability.
    #[arg(long)]
    pub converge_below: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
struct DeFile {
    dv: Option<usize>,
    dc: Option<usize>,
    eps: Option<f64>,
    channel: Option<ChannelSpec>,
    iterations: Option<usize>,
    pop_size: Option<usize>,
    seed: Option<u64>,
}

fn trajectory_csv(
    traj: &density_evolution::DeTrajectory,
    seed: u64,
    config: &serde_json::Value,
) -> String {
    let mut out = csv_header_comment(seed, config);
    out.push_str("l,x_or_perr,mean_cond_entropy,tau\n");
    for row in &traj.rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            row.iteration, row.x_or_perr, row.mean_cond_entropy, row.tau
        ));
    }
    out
}

fn cmd_de(args: DeArgs) -> Result<(), CliError> {
    let file: DeFile = load_file_config(&args.config)?;
    let dv = args
        .dv
        .or(file.dv)
        .ok_or_else(|| CliError::InvalidConfig("missing --dv".into()))?;
    let dc = args
        .dc
        .or(file.dc)
        .ok_or_else(|| CliError::InvalidConfig("missing --dc".into()))?;
    let dd =
        DegreeDistribution::regular(dv, dc).map_err(|e| CliError::InvalidConfig(e.to_string()))?;
    let iterations = args.iterations.or(file.iterations).unwrap_or(50);
    let seed = if args.seed != 0 {
        args.seed
    } else {
        file.seed.unwrap_or(0)
    };

    match args.mode {
        DeMode::Trajectory => {
            let eps = args
                .eps
                .or(file.eps)
                .ok_or_else(|| CliError::InvalidConfig("trajectory mode needs --eps".into()))?;
            if !(0.0..=1.0).contains(&eps) {
                return Err(CliError::InvalidConfig(format!(
                    "erasure probability {eps} outside [0, 1]"
                )));
            }
            let config = json!({"mode": "trajectory", "dv": dv, "dc": dc, "eps": eps, "iterations": iterations});
            let traj = density_evolution::bec_de(&dd, eps, iterations);
            write_output(args.out.as_deref(), &trajectory_csv(&traj, seed, &config))
        }
        DeMode::Threshold => {
            let mut crit = ThresholdCriterion::default();
            if let Some(m) = args.max_de_iters {
                crit.max_iters = m;
            }
            if let Some(c) = args.converge_below {
                crit.converge_below = c;
            }
            if args.tol <= 0.0 {
                return Err(CliError::InvalidConfig("tolerance must be positive".into()));
            }
            let config = json!({"mode": "threshold", "dv": dv, "dc": dc, "tol": args.tol, "criterion": crit});
            let thr = density_evolution::bec_threshold_with(&dd, args.tol, crit);
            let doc = json!({
                "meta": meta(seed, config),
                "threshold": thr,
                "tol": args.tol,
                "criterion": crit,
            });
            write_output(
                args.out.as_deref(),
                &format!(
                    "{}\n",
                    serde_json::to_string_pretty(&doc).expect("serializable")
                ),
            )
        }
        DeMode::Population => {
            let spec = resolve_channel(
                &args.channel_kind,
                args.channel_param,
                args.channel_bins,
                &file.channel,
            )?
            .ok_or_else(|| CliError::InvalidConfig("population mode needs a channel".into()))?;
            let ch = spec.build()?;
            let pop = args.pop_size.or(file.pop_size).unwrap_or(100_000);
            let config = json!({
                "mode": "population", "dv": dv, "dc": dc, "channel": spec,
                "iterations": iterations, "pop_size": pop, "seed": seed,
                "bounds_domain": spec.domain_label(),
            });
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let traj = density_evolution::population_de(&dd, &ch, iterations, pop, &mut rng)
                .map_err(|e| CliError::InvalidConfig(e.to_string()))?;
            write_output(args.out.as_deref(), &trajectory_csv(&traj, seed, &config))
        }
    }
}
