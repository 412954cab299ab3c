//! Converse bounds linking decoding success, neighborhood size, achievable
//! rate, residual error, and operations per information bit.
//!
//! The chain: a decoder that lowers the conditional entropy of an output bit
//! by `tau` bits using a size-`k` neighborhood forces the per-symbol output
//! entropy below H(Y_i) - tau/k, which caps the achievable rate at
//! C - tau/k and lower-bounds the bit-error probability through the binary
//! entropy of the rate excess. Holding the operation budget `c` fixed caps
//! the neighborhood size at k_bd(c) = sup_l (c/l)^(2l+2), which is finite,
//! so finite decoding success at a fixed budget keeps the rate strictly
//! below capacity, and the budget needed at gap `eps` from capacity grows
//! like log(1/eps).
//!
//! k_bd arithmetic lives in the log2 domain: (c/l)^(2l+2) overflows doubles
//! at moderate `c`. Linear values are materialized only below 2^1000.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math::binary_entropy_inv;

#[derive(Debug, Error)]
pub enum BoundError {
    #[error("tau {tau} exceeds the output entropy {h_y}")]
    TauExceedsEntropy { tau: f64, h_y: f64 },
    #[error("tau must be nonnegative and finite, got {0}")]
    InvalidTau(f64),
    #[error("neighborhood size must be at least 1, got {0}")]
    KTooSmall(f64),
    #[error("operations per bit must be positive and finite, got {0}")]
    NonPositiveOps(f64),
    #[error("empty iteration schedule")]
    EmptySchedule,
    #[error("gap from capacity must be positive, got {0}")]
    NonPositiveGap(f64),
    #[error("rate must lie in [0, 1], got {0}")]
    InvalidRate(f64),
    #[error("capacity must lie in [0, 1], got {0}")]
    InvalidCapacity(f64),
    #[error("degree averages must exceed 1, got alpha={alpha} beta={beta}")]
    InvalidDegrees { alpha: f64, beta: f64 },
    #[error("supply a neighborhood size or an operation budget, not both")]
    ConflictingInputs,
}

fn check_tau(tau: f64) -> Result<(), BoundError> {
    if !tau.is_finite() || tau < 0.0 {
        return Err(BoundError::InvalidTau(tau));
    }
    Ok(())
}

fn check_k(k: f64) -> Result<(), BoundError> {
    if !k.is_finite() || k < 1.0 {
        return Err(BoundError::KTooSmall(k));
    }
    Ok(())
}

fn check_capacity(c: f64) -> Result<(), BoundError> {
    if !(0.0..=1.0).contains(&c) {
        return Err(BoundError::InvalidCapacity(c));
    }
    Ok(())
}

/// Upper bound H(Y_i) - tau/k on the per-symbol entropy of the output
/// vector, given that conditioning an output bit on its size-`k`
/// neighborhood removes `tau` bits. Rejects tau > H(Y_i): no decoder can
/// remove more uncertainty than exists.
pub fn permutation_entropy_bound(h_y: f64, tau: f64, k: f64) -> Result<f64, BoundError> {
    check_tau(tau)?;
    check_k(k)?;
    if tau > h_y {
        return Err(BoundError::TauExceedsEntropy { tau, h_y });
    }
    Ok(h_y - tau / k)
}

/// Minimum of the entropy bound over every iteration with known
/// performance: knowing more iterations can only tighten the bound.
pub fn tightened_entropy_bound(h_y: f64, schedule: &[(f64, f64)]) -> Result<f64, BoundError> {
    if schedule.is_empty() {
        return Err(BoundError::EmptySchedule);
    }
    let mut best = f64::INFINITY;
    for &(tau, k) in schedule {
        best = best.min(permutation_entropy_bound(h_y, tau, k)?);
    }
    Ok(best)
}

/// Rate bound C - tau/k with both the raw value (kept for chaining) and a
/// clamped presentation value.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RateBound {
    pub raw: f64,
    pub clamped: f64,
}

/// Upper bound on the achievable rate given decoding success `tau` with a
/// size-`k` neighborhood.
pub fn achievable_rate_bound(capacity: f64, tau: f64, k: f64) -> Result<RateBound, BoundError> {
    check_capacity(capacity)?;
    check_tau(tau)?;
    check_k(k)?;
    let raw = capacity - tau / k;
    Ok(RateBound {
        raw,
        clamped: raw.clamp(0.0, 1.0),
    })
}

/// Lower bound on the bit-error probability of a rate-`rate` code whose
/// decoder achieves success `tau` with a size-`k` neighborhood: the binary
/// entropy of P_e must be at least the rate excess over the rate bound.
///
/// The excess is computed as `rate - (capacity - tau/k)` so that the result
/// is zero exactly when the rate respects [`achievable_rate_bound`].
pub fn fano_pe_lower_bound(rate: f64, capacity: f64, tau: f64, k: f64) -> Result<f64, BoundError> {
    if !(0.0..=1.0).contains(&rate) {
        return Err(BoundError::InvalidRate(rate));
    }
    let bound = achievable_rate_bound(capacity, tau, k)?;
    let delta = rate - bound.raw;
    if delta <= 0.0 {
        return Ok(0.0);
    }
    if delta >= 1.0 {
        return Ok(0.5);
    }
    Ok(binary_entropy_inv(delta))
}

/// sup over integer l >= 1 of (c/l)^(2l+2), in the log2 domain.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct KBd {
    /// log2 of the supremum.
    pub log2: f64,
    /// Linear value when it fits comfortably in a double (below 2^1000).
    pub linear: Option<f64>,
    /// Smallest maximizing iteration count.
    pub argmax_l: usize,
}

fn k_bd_term_log2(c: f64, l: usize) -> f64 {
    (2 * l + 2) as f64 * (c / l as f64).log2()
}

/// Cap on the neighborhood size reachable with `c` operations per
/// information bit: k_bd(c) = sup_{l>=1} (c/l)^(2l+2).
///
/// Finite for every finite c: the l = 1 term is c^4 and the terms vanish as
/// l grows. For c >= 1 every term with l >= c is at most 1 <= c^4, and for
/// c < 1 the terms decrease in l, so scanning l up to ceil(c)+1 suffices;
/// large c instead searches around the single interior maximum of the
/// unimodal term sequence.
pub fn k_bd(c: f64) -> Result<KBd, BoundError> {
    if !c.is_finite() || c <= 0.0 {
        return Err(BoundError::NonPositiveOps(c));
    }
    let mut best_l = 1usize;
    let mut best = k_bd_term_log2(c, 1);
    let consider = |l: usize, best: &mut f64, best_l: &mut usize| {
        let t = k_bd_term_log2(c, l);
        if t > *best {
            *best = t;
            *best_l = l;
        }
    };
    if c <= 10_000.0 {
        let limit = (c.ceil() as usize + 1).max(2);
        for l in 2..=limit {
            consider(l, &mut best, &mut best_l);
        }
    } else {
        // The term sequence is unimodal in l with continuous maximizer near
        // c/e; the integer argmax sits within one step of it.
        let center = (c / std::f64::consts::E) as i64;
        for dl in -3..=3 {
            let l = center + dl;
            if l >= 2 {
                consider(l as usize, &mut best, &mut best_l);
            }
        }
    }
    let linear = if best < 1000.0 {
        Some(f64::exp2(best))
    } else {
        None
    };
    Ok(KBd {
        log2: best,
        linear,
        argmax_l: best_l,
    })
}

/// Rate bound at a fixed operation budget, with the capacity gap kept in
/// log2 form for budgets where k_bd overflows linear doubles.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FixedOpsRateBound {
    pub rate_bound: f64,
    /// log2(tau / k_bd); None when tau = 0. When this is very negative the
    /// linear rate bound is indistinguishable from capacity.
    pub gap_log2: Option<f64>,
    pub k_bd: KBd,
}

/// Upper bound C - tau/k_bd(c) on the achievable rate of any decoder that
/// attains success `tau` within `c` operations per information bit.
pub fn rate_bound_fixed_ops(
    capacity: f64,
    tau: f64,
    c: f64,
) -> Result<FixedOpsRateBound, BoundError> {
    check_capacity(capacity)?;
    check_tau(tau)?;
    let kbd = k_bd(c)?;
    let gap_log2 = if tau > 0.0 {
        Some(tau.log2() - kbd.log2)
    } else {
        None
    };
    let rate_bound = match gap_log2 {
        Some(g) => capacity - f64::exp2(g),
        None => capacity,
    };
    Ok(FixedOpsRateBound {
        rate_bound,
        gap_log2,
        k_bd: kbd,
    })
}

/// Smallest operation budget `c` for which k_bd(c) >= tau/eps, i.e. the
/// budget below which no decoder can achieve success `tau` at gap `eps`
/// from capacity. Bisection to relative tolerance 1e-6, valid because k_bd
/// is nondecreasing in c.
pub fn min_ops_per_bit(eps: f64, tau: f64) -> Result<f64, BoundError> {
    if !eps.is_finite() || eps <= 0.0 {
        return Err(BoundError::NonPositiveGap(eps));
    }
    if !tau.is_finite() || tau <= 0.0 {
        return Err(BoundError::InvalidTau(tau));
    }
    let target_log2 = tau.log2() - eps.log2();
    let reaches = |c: f64| k_bd(c).expect("positive c").log2 >= target_log2;
    let mut hi = 1.0_f64;
    while !reaches(hi) {
        hi *= 2.0;
    }
    let mut lo = hi / 2.0;
    while reaches(lo) {
        lo /= 2.0;
        if lo < 1e-12 {
            break;
        }
    }
    while hi - lo > 1e-6 * hi {
        let mid = 0.5 * (lo + hi);
        if reaches(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Grid scan comparing log2 k_bd(c) against the line c*log2(e).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ExpCrossover {
    /// Smallest grid point from which k_bd(c) < e^c holds through the end
    /// of the grid.
    pub c_star: f64,
    pub grid_step: f64,
    pub grid_max: f64,
    /// k_bd(1) = 1 < e, so the comparison holds at c = 1.
    pub holds_at_1: bool,
    /// k_bd(2) = 16 > e^2: the comparison genuinely needs c large enough.
    pub holds_at_2: bool,
}

/// Locate where k_bd(c) falls below e^c for good: scan c over (0, 200] in
/// steps of 0.01 and report the smallest grid point after the last
/// violation.
pub fn exp_crossover() -> ExpCrossover {
    let step = 0.01;
    let points = 20_000usize;
    let log2_e = std::f64::consts::LOG2_E;
    let holds = |c: f64| k_bd(c).expect("positive c").log2 < c * log2_e;
    let mut last_violation = 0usize; // grid index; 0 means none
    for i in 1..=points {
        let c = i as f64 * step;
        if !holds(c) {
            last_violation = i;
        }
    }
    let c_star = (last_violation + 1) as f64 * step;
    ExpCrossover {
        c_star,
        grid_step: step,
        grid_max: points as f64 * step,
        holds_at_1: holds(1.0),
        holds_at_2: holds(2.0),
    }
}

/// Intermediate caps on the neighborhood size at a fixed budget, evaluated
/// at the iteration count l = floor(c*R/(alpha+beta)) the budget buys.
/// Reported for diagnostics only; the rate bound itself uses k_bd.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct KMaxDiagnostics {
    pub l: usize,
    /// log2 of the tree-growth estimate sum_i ((alpha-1)(beta-1))^i.
    pub k_estimate_log2: f64,
    /// log2 of sum_i (alpha+beta-1)^(2i).
    pub combined_sum_log2: f64,
    /// (2l+2) log2(alpha+beta-1).
    pub combined_power_log2: f64,
    /// (2l+2) log2(alpha+beta).
    pub degree_power_log2: f64,
    /// (2l+2) log2(c*R/l).
    pub budget_power_log2: f64,
    /// (2l+2) log2(c/l): the k_bd term at this l.
    pub k_bd_term_log2: f64,
}

pub fn k_max_diagnostics(
    alpha: f64,
    beta: f64,
    rate: f64,
    c: f64,
) -> Result<KMaxDiagnostics, BoundError> {
    if !alpha.is_finite() || !beta.is_finite() || alpha <= 1.0 || beta <= 1.0 {
        return Err(BoundError::InvalidDegrees { alpha, beta });
    }
    if !(0.0..=1.0).contains(&rate) || rate == 0.0 {
        return Err(BoundError::InvalidRate(rate));
    }
    if !c.is_finite() || c <= 0.0 {
        return Err(BoundError::NonPositiveOps(c));
    }
    let l = ((c * rate / (alpha + beta)).floor() as usize).max(1);
    let geometric_sum_log2 = |g: f64| -> f64 {
        // log2 of sum_{i=1..l} g^i, stable for large l.
        if (g - 1.0).abs() < 1e-12 {
            return (l as f64).log2();
        }
        if l as f64 * g.log2() > 60.0 {
            (g / (g - 1.0)).log2() + l as f64 * g.log2()
        } else {
            let mut sum = 0.0;
            let mut term = 1.0;
            for _ in 0..l {
                term *= g;
                sum += term;
            }
            sum.log2()
        }
    };
    let two_l2 = (2 * l + 2) as f64;
    Ok(KMaxDiagnostics {
        l,
        k_estimate_log2: geometric_sum_log2((alpha - 1.0) * (beta - 1.0)),
        combined_sum_log2: geometric_sum_log2((alpha + beta - 1.0) * (alpha + beta - 1.0)),
        combined_power_log2: two_l2 * (alpha + beta - 1.0).log2(),
        degree_power_log2: two_l2 * (alpha + beta).log2(),
        budget_power_log2: two_l2 * (c * rate / l as f64).log2(),
        k_bd_term_log2: two_l2 * (c / l as f64).log2(),
    })
}

/// Inputs to a full bound-chain evaluation. Exactly one of `k` (measured
/// neighborhood size) or `ops_per_bit` (fixed budget) drives the rate
/// bound; `eps` is the gap from capacity, R = C - eps.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundInputs {
    pub capacity: f64,
    #[serde(default)]
    pub output_entropy: Option<f64>,
    pub tau: f64,
    #[serde(default)]
    pub k: Option<f64>,
    #[serde(default)]
    pub ops_per_bit: Option<f64>,
    #[serde(default)]
    pub rate: Option<f64>,
    #[serde(default)]
    pub eps: Option<f64>,
}

/// Evaluated bound chain. Fields are None when their inputs were not
/// supplied.
#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub entropy_bound: Option<f64>,
    pub rate_bound: Option<f64>,
    pub rate_bound_raw: Option<f64>,
    pub pe_lower: Option<f64>,
    pub k_bd_log2: Option<f64>,
    #[serde(rename = "k_bd_linear_or_null")]
    pub k_bd_linear: Option<f64>,
    pub argmax_l: Option<usize>,
    pub gap_log2: Option<f64>,
    pub c_min: Option<f64>,
}

pub fn evaluate_bounds(inputs: &BoundInputs) -> Result<BoundReport, BoundError> {
    check_capacity(inputs.capacity)?;
    check_tau(inputs.tau)?;
    if inputs.k.is_some() && inputs.ops_per_bit.is_some() {
        return Err(BoundError::ConflictingInputs);
    }
    let mut report = BoundReport {
        entropy_bound: None,
        rate_bound: None,
        rate_bound_raw: None,
        pe_lower: None,
        k_bd_log2: None,
        k_bd_linear: None,
        argmax_l: None,
        gap_log2: None,
        c_min: None,
    };
    if let Some(k) = inputs.k {
        if let Some(h_y) = inputs.output_entropy {
            report.entropy_bound = Some(permutation_entropy_bound(h_y, inputs.tau, k)?);
        }
        let rb = achievable_rate_bound(inputs.capacity, inputs.tau, k)?;
        report.rate_bound_raw = Some(rb.raw);
        report.rate_bound = Some(rb.clamped);
        if let Some(rate) = inputs.rate {
            report.pe_lower = Some(fano_pe_lower_bound(rate, inputs.capacity, inputs.tau, k)?);
        }
    }
    if let Some(c) = inputs.ops_per_bit {
        let fixed = rate_bound_fixed_ops(inputs.capacity, inputs.tau, c)?;
        report.rate_bound_raw = Some(fixed.rate_bound);
        report.rate_bound = Some(fixed.rate_bound.clamp(0.0, 1.0));
        report.k_bd_log2 = Some(fixed.k_bd.log2);
        report.k_bd_linear = fixed.k_bd.linear;
        report.argmax_l = Some(fixed.k_bd.argmax_l);
        report.gap_log2 = fixed.gap_log2;
    }
    if let Some(eps) = inputs.eps {
        if inputs.tau > 0.0 {
            report.c_min = Some(min_ops_per_bit(eps, inputs.tau)?);
        }
    }
    Ok(report)
}
