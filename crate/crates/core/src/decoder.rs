//! Sum-product decoding with operation accounting and Monte-Carlo
//! estimation of the decoding-success parameter tau.
//!
//! Messages are log-likelihood ratios on a flooding schedule: check nodes
//! use the hyperbolic-tangent rule, variable nodes sum. All message
//! arithmetic runs in natural-log units and saturates at the channel
//! module's sentinel, so no update ever produces NaN. tau is measured from
//! the extrinsic posterior of each variable node: the entropy of the output
//! mixture it induces, subtracted from the marginal output entropy.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::channels::{BmsChannel, LLR_SENTINEL_NATS};
use crate::ensembles::{CodeFamily, DegreeDistribution, EnsembleError, TannerGraph};
use crate::math::mean_and_stderr;

#[derive(Debug, Error)]
pub enum DecodeError {
    #[error("received word length {got} does not match block length {want}")]
    DimensionMismatch { got: usize, want: usize },
    #[error("design rate must be positive, got {0}")]
    InvalidRate(f64),
    #[error("at least one iteration is required")]
    NoIterations,
    #[error("at least one trial is required")]
    NoTrials,
    #[error("channel output entropy is zero; tau is undefined")]
    DegenerateChannel,
    #[error(transparent)]
    Ensemble(#[from] EnsembleError),
}

/// One iteration of a decode: error rate, tau estimate, and operation
/// accounting.
#[derive(Debug, Clone, Copy)]
pub struct TraceRow {
    /// Iteration index, 1-based.
    pub iteration: usize,
    /// Bit-error rate against the transmitted codeword; a zero-LLR tie
    /// decodes to 0 and counts as half an error.
    pub pe: f64,
    /// Estimated entropy decrease of an output bit given its neighborhood,
    /// in bits, averaged over the block.
    pub tau_hat: f64,
    /// Spread of the per-node estimates (nodes within one decode are
    /// correlated, so this understates trial-to-trial error).
    pub tau_stderr: f64,
    /// n * (alpha + beta) * l under the flat per-edge accounting.
    pub ops_total: f64,
    /// (alpha + beta) * l / R.
    pub ops_per_info_bit: f64,
    /// Actual messages passed: 2 * edges * l.
    pub message_count: u64,
}

/// Per-iteration record of one decode.
#[derive(Debug, Clone)]
pub struct DecodeTrace {
    pub rows: Vec<TraceRow>,
    /// Realized average variable degree (edges / n).
    pub alpha: f64,
    /// Realized average check degree (edges / m).
    pub beta: f64,
    /// Realized design rate 1 - m/n.
    pub rate: f64,
}

#[derive(Debug, Clone)]
pub struct DecodeOutput {
    pub trace: DecodeTrace,
    /// Hard decisions after the final iteration (ties decode to 0).
    pub decisions: Vec<u8>,
    /// Per-node conditional output entropy (mixture entropy of the extrinsic
    /// posterior) at the final iteration.
    pub cond_output_entropies: Vec<f64>,
}

/// Monte-Carlo tau estimate.
#[derive(Debug, Clone, Copy)]
pub struct TauEstimate {
    /// Mean entropy decrease over sampled nodes and trials, in bits.
    pub tau: f64,
    /// Standard error over trial means (over nodes when only one trial ran).
    pub std_err: f64,
    /// 10th percentile of the per-node entropy decrease, a diagnostic for
    /// how unevenly the decrease is distributed across nodes.
    pub tau_p10: f64,
    /// Fraction of sampled node neighborhoods that are cycle-free at this
    /// depth; the extrinsic posterior is exact on those.
    pub tree_fraction: f64,
    /// Total node samples contributing to the mean.
    pub samples: u64,
}

/// Operations per information bit after `l` iterations at rate `rate`:
/// (alpha + beta) * l / rate.
pub fn ops_per_info_bit(dd: &DegreeDistribution, l: usize, rate: f64) -> Result<f64, DecodeError> {
    if rate <= 0.0 {
        return Err(DecodeError::InvalidRate(rate));
    }
    Ok((dd.alpha() + dd.beta()) * l as f64 / rate)
}

fn clamp_llr(x: f64) -> f64 {
    x.clamp(-LLR_SENTINEL_NATS, LLR_SENTINEL_NATS)
}

struct EdgeIndex {
    edge_var: Vec<usize>,
    var_edges: Vec<Vec<usize>>,
    chk_edges: Vec<Vec<usize>>,
}

impl EdgeIndex {
    fn new(g: &TannerGraph) -> Self {
        let mut edge_var = Vec::with_capacity(g.edge_count());
        let mut var_edges = vec![Vec::new(); g.n()];
        let mut chk_edges = vec![Vec::new(); g.m()];
        for (e, (v, c)) in g.edges().into_iter().enumerate() {
            edge_var.push(v);
            var_edges[v].push(e);
            chk_edges[c].push(e);
        }
        Self {
            edge_var,
            var_edges,
            chk_edges,
        }
    }
}

/// Run sum-product decoding for `max_iter` iterations and record the trace.
///
/// `received` holds output-symbol indices; `transmitted` is the codeword the
/// error rate is measured against.
pub fn bp_decode(
    g: &TannerGraph,
    ch: &BmsChannel,
    received: &[usize],
    transmitted: &[u8],
    max_iter: usize,
) -> Result<DecodeOutput, DecodeError> {
    if received.len() != g.n() {
        return Err(DecodeError::DimensionMismatch {
            got: received.len(),
            want: g.n(),
        });
    }
    if transmitted.len() != g.n() {
        return Err(DecodeError::DimensionMismatch {
            got: transmitted.len(),
            want: g.n(),
        });
    }
    if max_iter == 0 {
        return Err(DecodeError::NoIterations);
    }
    let rate = g.design_rate();
    if rate <= 0.0 {
        return Err(DecodeError::InvalidRate(rate));
    }

    let idx = EdgeIndex::new(g);
    let n_edges = idx.edge_var.len();
    let channel_llr: Vec<f64> = received.iter().map(|&y| ch.llr_nats(y)).collect();
    let mut v2c: Vec<f64> = idx.edge_var.iter().map(|&v| channel_llr[v]).collect();
    let mut c2v = vec![0.0_f64; n_edges];
    let mut tanh_buf: Vec<f64> = Vec::new();
    let h_y = ch.mixture_output_entropy(0.5);

    let alpha = g.avg_var_degree();
    let beta = g.avg_chk_degree();
    let ops_per_iter = g.n() as f64 * (alpha + beta);

    let mut rows = Vec::with_capacity(max_iter);
    let mut totals = vec![0.0_f64; g.n()];
    let mut last_mixes = Vec::new();

    for iter in 1..=max_iter {
        // Check update: prefix/suffix products of tanh(m/2) avoid dividing
        // by zero-valued (erased) messages.
        for c in 0..g.m() {
            let edges = &idx.chk_edges[c];
            let d = edges.len();
            if d == 0 {
                continue;
            }
            tanh_buf.clear();
            tanh_buf.extend(edges.iter().map(|&e| (0.5 * v2c[e]).tanh()));
            if d == 1 {
                c2v[edges[0]] = 0.0;
                continue;
            }
            let mut suffix = vec![1.0_f64; d];
            for k in (0..d - 1).rev() {
                suffix[k] = suffix[k + 1] * tanh_buf[k + 1];
            }
            let mut prefix = 1.0_f64;
            for k in 0..d {
                let prod = prefix * suffix[k];
                c2v[edges[k]] = clamp_llr(2.0 * prod.atanh());
                prefix *= tanh_buf[k];
            }
        }

        // Variable update and posteriors.
        let mut pe_acc = 0.0_f64;
        let mut mixes = Vec::with_capacity(g.n());
        for v in 0..g.n() {
            let extrinsic: f64 = idx.var_edges[v].iter().map(|&e| c2v[e]).sum();
            // Subtract from the unclamped sum: clamping first would cancel a
            // saturated channel term against a saturated check message and
            // turn a confident extrinsic into an erasure.
            let raw_total = channel_llr[v] + extrinsic;
            let total = clamp_llr(raw_total);
            totals[v] = total;
            for &e in &idx.var_edges[v] {
                v2c[e] = clamp_llr(raw_total - c2v[e]);
            }
            pe_acc += if total == 0.0 {
                0.5
            } else {
                let decision = u8::from(total < 0.0);
                f64::from(decision != transmitted[v])
            };
            let q = 1.0 / (1.0 + (-clamp_llr(extrinsic)).exp());
            mixes.push(ch.mixture_output_entropy(q));
        }
        let (mix_mean, mix_err) = mean_and_stderr(&mixes);
        rows.push(TraceRow {
            iteration: iter,
            pe: pe_acc / g.n() as f64,
            tau_hat: h_y - mix_mean,
            tau_stderr: mix_err,
            ops_total: ops_per_iter * iter as f64,
            ops_per_info_bit: (alpha + beta) * iter as f64 / rate,
            message_count: 2 * n_edges as u64 * iter as u64,
        });
        last_mixes = mixes;
    }

    let decisions = totals.iter().map(|&t| u8::from(t < 0.0)).collect();
    Ok(DecodeOutput {
        trace: DecodeTrace {
            rows,
            alpha,
            beta,
            rate,
        },
        decisions,
        cond_output_entropies: last_mixes,
    })
}

/// Estimate tau after `l` iterations on a fixed graph by transmitting the
/// all-zero codeword `trials` times (channel symmetry makes the all-zero
/// word representative).
pub fn estimate_tau_on_graph<R: Rng + ?Sized>(
    g: &TannerGraph,
    ch: &BmsChannel,
    l: usize,
    trials: usize,
    rng: &mut R,
) -> Result<TauEstimate, DecodeError> {
    if trials == 0 {
        return Err(DecodeError::NoTrials);
    }
    let h_y = ch.mixture_output_entropy(0.5);
    if h_y < 1e-12 {
        return Err(DecodeError::DegenerateChannel);
    }
    let tree_nodes = (0..g.n())
        .filter(|&v| g.neighborhood_with_tree_flag(v, l).1)
        .count();
    let tree_fraction = tree_nodes as f64 / g.n() as f64;
    if l == 0 {
        // Empty neighborhood: the extrinsic posterior is 1/2 and the output
        // mixture is the marginal, so the decrease is identically zero.
        return Ok(TauEstimate {
            tau: 0.0,
            std_err: 0.0,
            tau_p10: 0.0,
            tree_fraction,
            samples: (g.n() * trials) as u64,
        });
    }
    let transmitted = vec![0u8; g.n()];
    let mut trial_taus = Vec::with_capacity(trials);
    let mut decreases = Vec::with_capacity(trials * g.n());
    let mut single_trial_err = 0.0;
    for _ in 0..trials {
        let received: Vec<usize> = (0..g.n()).map(|_| ch.sample_output(0, rng)).collect();
        let out = bp_decode(g, ch, &received, &transmitted, l)?;
        let row = out.trace.rows[l - 1];
        trial_taus.push(row.tau_hat);
        single_trial_err = row.tau_stderr;
        decreases.extend(out.cond_output_entropies.iter().map(|&m| h_y - m));
    }
    let (tau, std_err) = mean_and_stderr(&trial_taus);
    Ok(TauEstimate {
        tau,
        std_err: if trials >= 2 {
            std_err
        } else {
            single_trial_err
        },
        tau_p10: crate::math::percentile(&decreases, 0.1),
        tree_fraction,
        samples: (g.n() * trials) as u64,
    })
}

/// Estimate tau for an ensemble: each trial samples a fresh graph of block
/// length `n` from `dd` before transmitting the all-zero codeword.
pub fn estimate_tau<R: Rng + ?Sized>(
    dd: &DegreeDistribution,
    ch: &BmsChannel,
    n: usize,
    l: usize,
    trials: usize,
    rng: &mut R,
) -> Result<TauEstimate, DecodeError> {
    if trials == 0 {
        return Err(DecodeError::NoTrials);
    }
    let h_y = ch.mixture_output_entropy(0.5);
    if h_y < 1e-12 {
        return Err(DecodeError::DegenerateChannel);
    }
    let mut trial_estimates = Vec::with_capacity(trials);
    let mut decreases = Vec::with_capacity(trials * n);
    let mut tree_acc = 0.0;
    let mut samples = 0u64;
    let mut single_trial_err = 0.0;
    for _ in 0..trials {
        let g = sample_graph_with_retries(dd, n, rng)?;
        let est = estimate_tau_on_graph(&g, ch, l, 1, rng)?;
        trial_estimates.push(est.tau);
        tree_acc += est.tree_fraction;
        samples += est.samples;
        single_trial_err = est.std_err;
        decreases.push(est.tau_p10);
    }
    let (tau, std_err) = mean_and_stderr(&trial_estimates);
    // Each trial's percentile already summarizes n nodes; their average is
    // the percentile diagnostic for the ensemble.
    let tau_p10 = decreases.iter().sum::<f64>() / decreases.len() as f64;
    Ok(TauEstimate {
        tau,
        std_err: if trials >= 2 {
            std_err
        } else {
            single_trial_err
        },
        tau_p10,
        tree_fraction: tree_acc / trials as f64,
        samples,
    })
}

/// Configuration-model construction can fail its repair budget on unlucky
/// matchings; retry with derived sub-seeds before giving up.
pub fn sample_graph_with_retries<R: Rng + ?Sized>(
    dd: &DegreeDistribution,
    n: usize,
    rng: &mut R,
) -> Result<TannerGraph, DecodeError> {
    sample_family_graph_with_retries(dd, n, CodeFamily::Ldpc, rng)
}

pub fn sample_family_graph_with_retries<R: Rng + ?Sized>(
    dd: &DegreeDistribution,
    n: usize,
    family: CodeFamily,
    rng: &mut R,
) -> Result<TannerGraph, DecodeError> {
    for _ in 0..16 {
        let seed: u64 = rng.gen();
        let mut sub = ChaCha8Rng::seed_from_u64(seed);
        match TannerGraph::sample(dd, n, family, &mut sub) {
            Ok(g) => return Ok(g),
            Err(EnsembleError::ConstructionFailed) => continue,
            Err(e) => return Err(e.into()),
        }
    }
    Err(EnsembleError::ConstructionFailed.into())
}
