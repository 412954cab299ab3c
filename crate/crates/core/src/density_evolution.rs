//! Infinite-block-length predictions of decoding progress.
//!
//! The binary erasure channel admits an exact scalar recursion for the
//! erasure probability of edge messages; every other discrete symmetric
//! channel is handled by population dynamics, which evolves a finite sample
//! of messages under the exact update rules. Both paths report, per
//! iteration, the edge-message quality, the residual bit uncertainty of a
//! node given its neighborhood, and the implied output-entropy decrease tau.

use rand::Rng;
use thiserror::Error;

use crate::channels::{BmsChannel, LLR_SENTINEL_NATS};
use crate::ensembles::DegreeDistribution;
use crate::math::{binary_entropy, mean_and_stderr};

#[derive(Debug, Error)]
pub enum DeError {
    #[error("population size {0} is too small; need at least 1000")]
    PopulationTooSmall(usize),
}

/// One iteration of a density-evolution trajectory.
#[derive(Debug, Clone, Copy)]
pub struct DeRow {
    pub iteration: usize,
    /// Erasure probability of edge messages (BEC) or message error
    /// probability with the tie-counts-half convention (everything else).
    pub x_or_perr: f64,
    /// Mean residual bit entropy of a variable node given its full
    /// extrinsic neighborhood, in bits.
    pub mean_cond_entropy: f64,
    /// Output-entropy decrease implied by the extrinsic posterior, in bits.
    pub tau: f64,
}

/// Iteration-indexed scalar summaries, plus the final message population
/// when produced by population dynamics (LLRs in natural-log units).
#[derive(Debug, Clone)]
pub struct DeTrajectory {
    pub rows: Vec<DeRow>,
    pub population: Option<Vec<f64>>,
}

/// Exact erasure-probability recursion x_{l+1} = eps * λ(1 - ρ(1 - x_l))
/// starting from x_0 = eps; returns iters+1 rows.
pub fn bec_de(dd: &DegreeDistribution, eps: f64, iters: usize) -> DeTrajectory {
    assert!(
        (0.0..=1.0).contains(&eps),
        "erasure probability out of range"
    );
    let mut rows = Vec::with_capacity(iters + 1);
    let mut x = eps;
    // Before any iteration the neighborhood is empty: the node is fully
    // undetermined by extrinsic information.
    rows.push(DeRow {
        iteration: 0,
        x_or_perr: x,
        mean_cond_entropy: 1.0,
        tau: 0.0,
    });
    for l in 1..=iters {
        let y = 1.0 - dd.rho_eval(1.0 - x);
        let x_node = dd.var_node_eval(y);
        x = eps * dd.lambda_eval(y);
        rows.push(DeRow {
            iteration: l,
            x_or_perr: x,
            mean_cond_entropy: x_node,
            tau: (1.0 - eps) * (1.0 - x_node),
        });
    }
    DeTrajectory {
        rows,
        population: None,
    }
}

/// Node-extrinsic erasure probability after `l` iterations: the chance that
/// all of a variable node's incoming check messages are erased,
/// Λ(1 - ρ(1 - x_{l-1})). Returns 1 for l = 0 (empty neighborhood).
pub fn bec_extrinsic_erasure(dd: &DegreeDistribution, eps: f64, l: usize) -> f64 {
    if l == 0 {
        return 1.0;
    }
    let mut x = eps;
    for _ in 0..l - 1 {
        x = eps * dd.lambda_eval(1.0 - dd.rho_eval(1.0 - x));
    }
    dd.var_node_eval(1.0 - dd.rho_eval(1.0 - x))
}

/// Convergence rule for threshold bisection: the recursion must fall below
/// `converge_below` within `max_iters` iterations. Both constants appear in
/// emitted reports.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct ThresholdCriterion {
    pub max_iters: usize,
    pub converge_below: f64,
}

impl Default for ThresholdCriterion {
    fn default() -> Self {
        Self {
            max_iters: 2000,
            converge_below: 1e-8,
        }
    }
}

/// Largest erasure probability (within `tol`) for which the exact recursion
/// converges to zero, by bisection on [0, 1].
///
/// Monotonicity of convergence in eps makes bisection valid. Degenerate
/// rate-0 ensembles push the threshold toward 1; the operational criterion
/// caps the iteration count, so values very close to 1 read slightly low.
pub fn bec_threshold(dd: &DegreeDistribution, tol: f64) -> f64 {
    bec_threshold_with(dd, tol, ThresholdCriterion::default())
}

pub fn bec_threshold_with(dd: &DegreeDistribution, tol: f64, crit: ThresholdCriterion) -> f64 {
    assert!(tol > 0.0, "tolerance must be positive");
    let converges = |eps: f64| -> bool {
        let mut x = eps;
        for _ in 0..crit.max_iters {
            if x < crit.converge_below {
                return true;
            }
            x = eps * dd.lambda_eval(1.0 - dd.rho_eval(1.0 - x));
        }
        x < crit.converge_below
    };
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if converges(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

fn clamp_llr(x: f64) -> f64 {
    x.clamp(-LLR_SENTINEL_NATS, LLR_SENTINEL_NATS)
}

/// Node-extrinsic sample statistics from the current population.
#[derive(Debug, Clone, Copy)]
pub struct NodeStats {
    pub tau: f64,
    pub tau_stderr: f64,
    pub mean_bit_entropy: f64,
}

/// Population-dynamics density evolution: a finite sample of edge messages
/// resampled each iteration under the exact check and variable update rules
/// with fresh channel observations.
pub struct PopulationDe {
    dd: DegreeDistribution,
    ch: BmsChannel,
    v2c: Vec<f64>,
    c2v: Vec<f64>,
    iteration: usize,
    h_y: f64,
}

impl PopulationDe {
    pub fn new<R: Rng + ?Sized>(
        dd: &DegreeDistribution,
        ch: &BmsChannel,
        pop_size: usize,
        rng: &mut R,
    ) -> Result<Self, DeError> {
        if pop_size < 1000 {
            return Err(DeError::PopulationTooSmall(pop_size));
        }
        let v2c = (0..pop_size)
            .map(|_| ch.llr_nats(ch.sample_output(0, rng)))
            .collect();
        Ok(Self {
            dd: dd.clone(),
            ch: ch.clone(),
            v2c,
            c2v: Vec::new(),
            iteration: 0,
            h_y: ch.mixture_output_entropy(0.5),
        })
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn population(&self) -> &[f64] {
        &self.v2c
    }

    /// One flooding iteration: resample check-to-variable messages, then
    /// variable-to-check messages with fresh channel draws.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let pop = self.v2c.len();
        let mut c2v = Vec::with_capacity(pop);
        for _ in 0..pop {
            let d = self.dd.sample_chk_edge_degree(rng);
            let mut prod = 1.0_f64;
            for _ in 0..d.saturating_sub(1) {
                let m = self.v2c[rng.gen_range(0..pop)];
                prod *= (0.5 * m).tanh();
            }
            c2v.push(clamp_llr(2.0 * prod.atanh()));
        }
        let mut v2c = Vec::with_capacity(pop);
        for _ in 0..pop {
            let d = self.dd.sample_var_edge_degree(rng);
            let mut sum = self.ch.llr_nats(self.ch.sample_output(0, rng));
            for _ in 0..d.saturating_sub(1) {
                sum += c2v[rng.gen_range(0..pop)];
            }
            v2c.push(clamp_llr(sum));
        }
        self.c2v = c2v;
        self.v2c = v2c;
        self.iteration += 1;
    }

    /// Fraction of exactly-zero edge messages.
    pub fn erasure_fraction(&self) -> f64 {
        let zeros = self.v2c.iter().filter(|&&m| m == 0.0).count();
        zeros as f64 / self.v2c.len() as f64
    }

    /// Probability that an edge message decides the wrong bit, ties counting
    /// half, under all-zero transmission.
    pub fn message_error_rate(&self) -> f64 {
        let mut acc = 0.0;
        for &m in &self.v2c {
            if m < 0.0 {
                acc += 1.0;
            } else if m == 0.0 {
                acc += 0.5;
            }
        }
        acc / self.v2c.len() as f64
    }

    /// Edge-message quality in the convention of the trajectory column:
    /// erasure fraction on erasure channels, error probability otherwise.
    pub fn x_or_perr(&self) -> f64 {
        if self.ch.is_erasure_channel() {
            self.erasure_fraction()
        } else {
            self.message_error_rate()
        }
    }

    /// Sample node-extrinsic posteriors: draw a variable-node degree, sum
    /// that many check messages, and evaluate the induced output mixture.
    pub fn node_stats<R: Rng + ?Sized>(&self, samples: usize, rng: &mut R) -> NodeStats {
        if self.iteration == 0 {
            return NodeStats {
                tau: 0.0,
                tau_stderr: 0.0,
                mean_bit_entropy: 1.0,
            };
        }
        let pop = self.c2v.len();
        let mut mixes = Vec::with_capacity(samples);
        let mut bits = 0.0;
        for _ in 0..samples {
            let d = self.dd.sample_var_node_degree(rng);
            let mut sum = 0.0;
            for _ in 0..d {
                sum += self.c2v[rng.gen_range(0..pop)];
            }
            let q = 1.0 / (1.0 + (-clamp_llr(sum)).exp());
            mixes.push(self.ch.mixture_output_entropy(q));
            bits += binary_entropy(q);
        }
        let (mix_mean, mix_err) = mean_and_stderr(&mixes);
        NodeStats {
            tau: self.h_y - mix_mean,
            tau_stderr: mix_err,
            mean_bit_entropy: bits / samples as f64,
        }
    }
}

/// Run population dynamics for `iters` iterations, recording one row per
/// iteration (node statistics use `pop_size` samples per row).
pub fn population_de<R: Rng + ?Sized>(
    dd: &DegreeDistribution,
    ch: &BmsChannel,
    iters: usize,
    pop_size: usize,
    rng: &mut R,
) -> Result<DeTrajectory, DeError> {
    let mut de = PopulationDe::new(dd, ch, pop_size, rng)?;
    let mut rows = Vec::with_capacity(iters + 1);
    let stats = de.node_stats(pop_size, rng);
    rows.push(DeRow {
        iteration: 0,
        x_or_perr: de.x_or_perr(),
        mean_cond_entropy: stats.mean_bit_entropy,
        tau: stats.tau,
    });
    for l in 1..=iters {
        de.step(rng);
        let stats = de.node_stats(pop_size, rng);
        rows.push(DeRow {
            iteration: l,
            x_or_perr: de.x_or_perr(),
            mean_cond_entropy: stats.mean_bit_entropy,
            tau: stats.tau,
        });
    }
    Ok(DeTrajectory {
        rows,
        population: Some(de.population().to_vec()),
    })
}

/// Asymptotic tau predictor: evolve the population for `l` iterations and
/// average the output-mixture entropy decrease over node-extrinsic samples.
pub fn de_tau<R: Rng + ?Sized>(
    dd: &DegreeDistribution,
    ch: &BmsChannel,
    l: usize,
    pop_size: usize,
    rng: &mut R,
) -> Result<f64, DeError> {
    de_tau_with_err(dd, ch, l, pop_size, rng).map(|s| s.tau)
}

/// As [`de_tau`] but exposing the sampling standard error.
pub fn de_tau_with_err<R: Rng + ?Sized>(
    dd: &DegreeDistribution,
    ch: &BmsChannel,
    l: usize,
    pop_size: usize,
    rng: &mut R,
) -> Result<NodeStats, DeError> {
    let mut de = PopulationDe::new(dd, ch, pop_size, rng)?;
    for _ in 0..l {
        de.step(rng);
    }
    Ok(de.node_stats(pop_size, rng))
}
