//! Binary-input memoryless symmetric channels with discrete output alphabets.
//!
//! Every channel is a finite DMC: continuous-output channels are quantized at
//! construction so that all entropies downstream are discrete Shannon
//! entropies. Quantization only discards information, so measurements made
//! through a quantized channel keep the converse bounds valid.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math::{entropy_bits, normal_cdf, ENTROPY_PROB_FLOOR};

/// Saturation magnitude for log-likelihood ratios, in log2 units. Any
/// deterministic symbol maps to this sentinel instead of an IEEE infinity so
/// decoder arithmetic never produces indeterminate forms; larger magnitudes
/// are clamped to it.
pub const LLR_SENTINEL_BITS: f64 = 1e9;

/// The same sentinel expressed in natural-log units (decoder internals run
/// in nats).
pub const LLR_SENTINEL_NATS: f64 = LLR_SENTINEL_BITS * std::f64::consts::LN_2;

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("probability parameter {0} outside [0, 1]")]
    InvalidProbability(f64),
    #[error("noise standard deviation must be positive, got {0}")]
    InvalidSigma(f64),
    #[error("quantizer bin count must be even and at least 2, got {0}")]
    InvalidBins(usize),
    #[error("channel construction violated {0}")]
    BrokenInvariant(&'static str),
}

/// Channel family plus its parameters, as used in CLI configs and reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ChannelKind {
    Bsc { p: f64 },
    Bec { eps: f64 },
    Biawgn { sigma: f64, bins: usize },
}

/// A binary-input memoryless symmetric channel over a discrete, ordered
/// output alphabet. Output symbols are indices into the alphabet.
///
/// Immutable after construction; safe to share across workers. Sampling
/// takes an external random source owned by the caller.
#[derive(Debug, Clone)]
pub struct BmsChannel {
    kind: ChannelKind,
    labels: Vec<String>,
    /// `transition[x][y]` = P(y | x) for x in {0, 1}.
    transition: [Vec<f64>; 2],
    /// Output involution pairing y with its mirror symbol: P(y|0) = P(inv(y)|1).
    involution: Vec<usize>,
    erasure: Option<usize>,
    /// Cumulative rows for sampling.
    cumulative: [Vec<f64>; 2],
}

/// Capacity and entropy summary of a channel, all in bits.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ChannelStats {
    /// Mutual information under uniform input; equals Shannon capacity for
    /// symmetric channels.
    pub capacity: f64,
    /// H(Y) under uniform input.
    pub output_entropy: f64,
    /// H(Y|X).
    pub cond_output_entropy: f64,
}

impl BmsChannel {
    /// Binary symmetric channel with crossover probability `p`.
    pub fn bsc(p: f64) -> Result<Self, ChannelError> {
        if !(0.0..=1.0).contains(&p) || !p.is_finite() {
            return Err(ChannelError::InvalidProbability(p));
        }
        Self::build(
            ChannelKind::Bsc { p },
            vec!["0".into(), "1".into()],
            [vec![1.0 - p, p], vec![p, 1.0 - p]],
            vec![1, 0],
            None,
        )
    }

    /// Binary erasure channel with erasure probability `eps`.
    ///
    /// Included for cross-checks and density-evolution validation; the
    /// converse bound chain does not apply to erasure channels, and reports
    /// label BEC runs accordingly.
    pub fn bec(eps: f64) -> Result<Self, ChannelError> {
        if !(0.0..=1.0).contains(&eps) || !eps.is_finite() {
            return Err(ChannelError::InvalidProbability(eps));
        }
        Self::build(
            ChannelKind::Bec { eps },
            vec!["0".into(), "e".into(), "1".into()],
            [vec![1.0 - eps, eps, 0.0], vec![0.0, eps, 1.0 - eps]],
            vec![2, 1, 0],
            Some(1),
        )
    }

    /// Binary-input AWGN channel (inputs mapped to ±1, noise deviation
    /// `sigma`) quantized to `bins` output intervals symmetric about 0.
    ///
    /// Interior bin edges are uniform over [-(1+4σ), 1+4σ]; the outer bins
    /// absorb the tails, so no probability mass is lost. `bins` must be even
    /// so the edge set is symmetric about 0 and the output involution is a
    /// bin reversal. Capacity converges upward as `bins` grows; doubling
    /// `bins` refines the partition exactly.
    pub fn quantized_biawgn(sigma: f64, bins: usize) -> Result<Self, ChannelError> {
        if !sigma.is_finite() || sigma <= 0.0 {
            return Err(ChannelError::InvalidSigma(sigma));
        }
        if bins < 2 || !bins.is_multiple_of(2) {
            return Err(ChannelError::InvalidBins(bins));
        }
        let span = 1.0 + 4.0 * sigma;
        let step = 2.0 * span / bins as f64;
        // Standardized bin edges for input +1 (bit 0); edge i sits at
        // -span + i*step for i = 1..bins-1, with infinite outer edges.
        let edge = |i: usize| -> f64 {
            if i == 0 {
                f64::NEG_INFINITY
            } else if i == bins {
                f64::INFINITY
            } else {
                -span + i as f64 * step
            }
        };
        let mut row0 = Vec::with_capacity(bins);
        let mut labels = Vec::with_capacity(bins);
        for i in 0..bins {
            let lo = edge(i);
            let hi = edge(i + 1);
            let mass = normal_cdf((hi - 1.0) / sigma) - normal_cdf((lo - 1.0) / sigma);
            row0.push(mass.max(0.0));
            labels.push(format!("q{i}"));
        }
        // Mirror row for input -1; exact by construction since the edges are
        // symmetric about 0.
        let row1: Vec<f64> = row0.iter().rev().copied().collect();
        let involution = (0..bins).rev().collect();
        Self::build(
            ChannelKind::Biawgn { sigma, bins },
            labels,
            [row0, row1],
            involution,
            None,
        )
    }

    fn build(
        kind: ChannelKind,
        labels: Vec<String>,
        transition: [Vec<f64>; 2],
        involution: Vec<usize>,
        erasure: Option<usize>,
    ) -> Result<Self, ChannelError> {
        for row in &transition {
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-12 {
                return Err(ChannelError::BrokenInvariant("transition row sum"));
            }
        }
        for (y, &py) in involution.iter().enumerate() {
            if (transition[0][y] - transition[1][py]).abs() > 1e-12 {
                return Err(ChannelError::BrokenInvariant("output symmetry"));
            }
        }
        let cumulative = [Self::cumsum(&transition[0]), Self::cumsum(&transition[1])];
        Ok(Self {
            kind,
            labels,
            transition,
            involution,
            erasure,
            cumulative,
        })
    }

    fn cumsum(row: &[f64]) -> Vec<f64> {
        let mut acc = 0.0;
        row.iter()
            .map(|&p| {
                acc += p;
                acc
            })
            .collect()
    }

    pub fn kind(&self) -> ChannelKind {
        self.kind
    }

    pub fn is_erasure_channel(&self) -> bool {
        matches!(self.kind, ChannelKind::Bec { .. })
    }

    pub fn alphabet_size(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// P(y | x) row for input bit `x`.
    pub fn transition_row(&self, x: u8) -> &[f64] {
        &self.transition[usize::from(x != 0)]
    }

    /// The symmetry involution: P(y|0) = P(involution(y)|1).
    pub fn involution(&self, y: usize) -> usize {
        self.involution[y]
    }

    pub fn erasure_symbol(&self) -> Option<usize> {
        self.erasure
    }

    /// Capacity and entropy quantities, computed from the transition table.
    pub fn stats(&self) -> ChannelStats {
        let output_entropy = self.mixture_output_entropy(0.5);
        let cond_output_entropy =
            0.5 * entropy_bits(&self.transition[0]) + 0.5 * entropy_bits(&self.transition[1]);
        let capacity = (output_entropy - cond_output_entropy).clamp(0.0, 1.0);
        ChannelStats {
            capacity,
            output_entropy,
            cond_output_entropy,
        }
    }

    /// Entropy in bits of the output mixture q·P(·|0) + (1-q)·P(·|1).
    ///
    /// At q = 1/2 this is H(Y) under uniform input; at q ∈ {0, 1} it is the
    /// entropy of a single transition row.
    pub fn mixture_output_entropy(&self, q: f64) -> f64 {
        let probs: Vec<f64> = self.transition[0]
            .iter()
            .zip(&self.transition[1])
            .map(|(&p0, &p1)| q * p0 + (1.0 - q) * p1)
            .collect();
        entropy_bits(&probs)
    }

    /// Draw an output symbol for input bit `x`. Deterministic given the
    /// random source state.
    pub fn sample_output<R: Rng + ?Sized>(&self, x: u8, rng: &mut R) -> usize {
        let cum = &self.cumulative[usize::from(x != 0)];
        let u: f64 = rng.gen();
        match cum.iter().position(|&c| u < c) {
            Some(i) => i,
            None => cum.len() - 1,
        }
    }

    /// Log-likelihood ratio log2 P(y|0)/P(y|1), saturated at the sentinel.
    ///
    /// The erasure symbol maps to exactly 0. The value is computed in a
    /// canonical form so that `llr(involution(y)) == -llr(y)` holds exactly.
    pub fn llr(&self, y: usize) -> f64 {
        if self.erasure == Some(y) {
            return 0.0;
        }
        let p0 = self.transition[0][y];
        let p1 = self.transition[1][y];
        if p0 < ENTROPY_PROB_FLOOR && p1 < ENTROPY_PROB_FLOOR {
            return 0.0;
        }
        if p1 < ENTROPY_PROB_FLOOR {
            return LLR_SENTINEL_BITS;
        }
        if p0 < ENTROPY_PROB_FLOOR {
            return -LLR_SENTINEL_BITS;
        }
        let mag = if p0 >= p1 {
            (p0 / p1).log2()
        } else {
            -((p1 / p0).log2())
        };
        mag.clamp(-LLR_SENTINEL_BITS, LLR_SENTINEL_BITS)
    }

    /// LLR in natural-log units, for decoder internals.
    pub fn llr_nats(&self, y: usize) -> f64 {
        (self.llr(y) * std::f64::consts::LN_2).clamp(-LLR_SENTINEL_NATS, LLR_SENTINEL_NATS)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn bsc_noiseless_stats() {
        let s = BmsChannel::bsc(0.0).unwrap().stats();
        assert_eq!(s.capacity, 1.0);
        assert_eq!(s.output_entropy, 1.0);
        assert_eq!(s.cond_output_entropy, 0.0);
    }

    #[test]
    fn bsc_half_is_useless() {
        let s = BmsChannel::bsc(0.5).unwrap().stats();
        assert!(s.capacity.abs() < 1e-15);
    }

    #[test]
    fn bec_stats_match_direct_summation() {
        let eps = 0.3_f64;
        let s = BmsChannel::bec(eps).unwrap().stats();
        assert!((s.capacity - 0.7).abs() < 1e-12);
        // Marginal masses {0.35, 0.3, 0.35} summed by hand.
        let direct = -(0.35_f64.log2() * 0.35) * 2.0 - 0.3 * 0.3_f64.log2();
        assert!((s.output_entropy - direct).abs() < 1e-12);
        assert!((s.output_entropy - 1.5813).abs() < 1e-4);
    }

    #[test]
    fn bsc_conditional_entropy_is_binary_entropy() {
        let p = 0.1_f64;
        let s = BmsChannel::bsc(p).unwrap().stats();
        let h = -p * p.log2() - (1.0 - p) * (1.0 - p).log2();
        assert!((s.cond_output_entropy - h).abs() < 1e-12);
        assert!((s.cond_output_entropy - 0.4690).abs() < 1e-4);
    }

    #[test]
    fn stats_identity_holds_for_all_kinds() {
        let channels = [
            BmsChannel::bsc(0.11).unwrap(),
            BmsChannel::bec(0.42).unwrap(),
            BmsChannel::quantized_biawgn(0.8, 16).unwrap(),
        ];
        for ch in &channels {
            let s = ch.stats();
            assert!((s.cond_output_entropy - (s.output_entropy - s.capacity)).abs() < 1e-10);
            assert!((0.0..=1.0).contains(&s.capacity));
        }
    }

    #[test]
    fn sampling_degenerate_channels() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let bsc0 = BmsChannel::bsc(0.0).unwrap();
        for _ in 0..100 {
            assert_eq!(bsc0.sample_output(0, &mut rng), 0);
        }
        let bec1 = BmsChannel::bec(1.0).unwrap();
        for _ in 0..100 {
            assert_eq!(bec1.sample_output(1, &mut rng), 1);
        }
    }

    #[test]
    fn sampling_matches_transition_frequencies() {
        let p = 0.1;
        let ch = BmsChannel::bsc(p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12345);
        let n = 1_000_000;
        let flips = (0..n)
            .filter(|_| ch.sample_output(0, &mut rng) == 1)
            .count();
        let rate = flips as f64 / n as f64;
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        assert!(
            (rate - p).abs() < 3.0 * sigma,
            "flip rate {rate} vs p={p} (3σ={})",
            3.0 * sigma
        );
    }

    #[test]
    fn llr_values() {
        let bec = BmsChannel::bec(0.3).unwrap();
        assert_eq!(bec.llr(1), 0.0);
        let bsc = BmsChannel::bsc(0.1).unwrap();
        assert!((bsc.llr(0) - (0.9_f64 / 0.1).log2()).abs() < 1e-12);
        assert!((bsc.llr(0) - 3.1699).abs() < 1e-4);
        let bsc0 = BmsChannel::bsc(0.0).unwrap();
        assert_eq!(bsc0.llr(0), LLR_SENTINEL_BITS);
        assert_eq!(bsc0.llr(1), -LLR_SENTINEL_BITS);
    }

    #[test]
    fn llr_sign_symmetry_is_exact() {
        let channels = [
            BmsChannel::bsc(0.07).unwrap(),
            BmsChannel::bec(0.5).unwrap(),
            BmsChannel::quantized_biawgn(1.3, 32).unwrap(),
        ];
        for ch in &channels {
            for y in 0..ch.alphabet_size() {
                assert_eq!(ch.llr(ch.involution(y)), -ch.llr(y), "y={y}");
            }
        }
    }

    #[test]
    fn quantizer_rejects_odd_bins() {
        assert!(BmsChannel::quantized_biawgn(1.0, 3).is_err());
        assert!(BmsChannel::quantized_biawgn(1.0, 1).is_err());
        assert!(BmsChannel::quantized_biawgn(0.0, 4).is_err());
        assert!(BmsChannel::quantized_biawgn(1.0, 2).is_ok());
    }

    #[test]
    fn quantizer_noiseless_limit() {
        for bins in [2, 4, 8] {
            let s = BmsChannel::quantized_biawgn(0.01, bins).unwrap().stats();
            assert!(s.capacity >= 1.0 - 1e-9, "bins={bins} cap={}", s.capacity);
        }
    }

    #[test]
    fn quantizer_refinement_never_loses_capacity() {
        for &sigma in &[0.5, 0.8, 1.2] {
            let mut prev = BmsChannel::quantized_biawgn(sigma, 4)
                .unwrap()
                .stats()
                .capacity;
            for bins in [8, 16, 32, 64, 128] {
                let cap = BmsChannel::quantized_biawgn(sigma, bins)
                    .unwrap()
                    .stats()
                    .capacity;
                assert!(cap >= prev - 1e-12, "sigma={sigma} bins={bins}");
                prev = cap;
            }
        }
    }

    /// Independent oracle: continuous BIAWGN mutual information by Simpson
    /// quadrature of the density mixture integral.
    fn biawgn_capacity_quadrature(sigma: f64) -> f64 {
        let lo = -1.0 - 10.0 * sigma;
        let hi = 1.0 + 10.0 * sigma;
        let n = 40_000; // even
        let h = (hi - lo) / n as f64;
        let phi = |y: f64, mu: f64| {
            (-(y - mu) * (y - mu) / (2.0 * sigma * sigma)).exp()
                / (sigma * (2.0 * std::f64::consts::PI).sqrt())
        };
        let integrand = |y: f64| {
            let a = phi(y, 1.0);
            let b = phi(y, -1.0);
            let m = 0.5 * (a + b);
            let mut v = 0.0;
            if a > 0.0 && m > 0.0 {
                v += 0.5 * a * (a / m).log2();
            }
            if b > 0.0 && m > 0.0 {
                v += 0.5 * b * (b / m).log2();
            }
            v
        };
        let mut sum = integrand(lo) + integrand(hi);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            sum += w * integrand(lo + i as f64 * h);
        }
        sum * h / 3.0
    }

    #[test]
    fn quantizer_capacity_approaches_quadrature_oracle() {
        let cont = biawgn_capacity_quadrature(1.0);
        let quant = BmsChannel::quantized_biawgn(1.0, 64)
            .unwrap()
            .stats()
            .capacity;
        assert!(quant <= cont + 1e-12, "quantization cannot add information");
        assert!(
            cont - quant < 1e-3,
            "quantized {quant} vs continuous {cont}"
        );
    }

    #[test]
    fn rows_sum_to_one_and_mirror() {
        for ch in [
            BmsChannel::bsc(0.23).unwrap(),
            BmsChannel::bec(0.9).unwrap(),
            BmsChannel::quantized_biawgn(2.0, 10).unwrap(),
        ] {
            for x in [0u8, 1u8] {
                let sum: f64 = ch.transition_row(x).iter().sum();
                assert!((sum - 1.0).abs() < 1e-12);
            }
            for y in 0..ch.alphabet_size() {
                let py = ch.involution(y);
                assert!((ch.transition_row(0)[y] - ch.transition_row(1)[py]).abs() < 1e-12);
                assert_eq!(ch.involution(py), y, "involution must be self-inverse");
            }
        }
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(BmsChannel::bsc(-0.1).is_err());
        assert!(BmsChannel::bsc(1.5).is_err());
        assert!(BmsChannel::bec(f64::NAN).is_err());
    }
}
