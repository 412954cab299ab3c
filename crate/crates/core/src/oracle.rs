//! Exact entropy computations on small codes by brute-force enumeration.
//!
//! The ground truth the simulators and bound formulas are validated
//! against. Block lengths are capped at 16 bits; every public operation
//! checks an explicit enumeration budget before doing work. Probabilities
//! accumulate with compensated summation and the per-codeword products are
//! built incrementally along the output-vector enumeration.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::channels::BmsChannel;
use crate::ensembles::{CodeFamily, TannerGraph};
use crate::math::{KahanSum, ENTROPY_PROB_FLOOR};

/// Enumeration ceiling: |alphabet|^coords * |codewords| must stay below
/// this.
pub const ENUM_BUDGET: f64 = 1e8;

const MAX_BLOCK: usize = 16;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("block length {0} exceeds the exact-enumeration cap of 16")]
    BlockTooLong(usize),
    #[error("a code needs at least one codeword")]
    NoCodewords,
    #[error("duplicate codeword at index {0}")]
    DuplicateCodeword(usize),
    #[error("codeword {word} violates parity check {check}")]
    CodewordViolatesCheck { word: usize, check: usize },
    #[error("attached graph has {graph_n} variables but the code has length {code_n}")]
    GraphSizeMismatch { graph_n: usize, code_n: usize },
    #[error("enumeration budget exceeded: needs {required:.3e} states, cap is {cap:.0e}")]
    BudgetExceeded { required: f64, cap: f64 },
    #[error("coordinate {0} appears in the conditioning set")]
    IndexInConditioningSet(usize),
    #[error("coordinate {0} out of range")]
    IndexOutOfRange(usize),
    #[error("operation requires an attached graph")]
    NoGraph,
    #[error("code file parse error: {0}")]
    Parse(String),
}

/// A small code given by its explicit codeword list, with an optional
/// Tanner graph supplying neighborhood structure.
#[derive(Debug, Clone)]
pub struct ExactCode {
    n: usize,
    codewords: Vec<u16>,
    graph: Option<TannerGraph>,
}

impl ExactCode {
    pub fn new(n: usize, codewords: Vec<u16>) -> Result<Self, OracleError> {
        if n > MAX_BLOCK {
            return Err(OracleError::BlockTooLong(n));
        }
        if codewords.is_empty() {
            return Err(OracleError::NoCodewords);
        }
        let mut seen = BTreeSet::new();
        for (idx, &w) in codewords.iter().enumerate() {
            if n < MAX_BLOCK && (w >> n) != 0 {
                return Err(OracleError::Parse(format!(
                    "codeword {idx} has bits beyond position {n}"
                )));
            }
            if !seen.insert(w) {
                return Err(OracleError::DuplicateCodeword(idx));
            }
        }
        Ok(Self {
            n,
            codewords,
            graph: None,
        })
    }

    /// Attach a Tanner graph. For parity-check graphs every codeword must
    /// satisfy every check.
    pub fn with_graph(mut self, graph: TannerGraph) -> Result<Self, OracleError> {
        if graph.n() != self.n {
            return Err(OracleError::GraphSizeMismatch {
                graph_n: graph.n(),
                code_n: self.n,
            });
        }
        if graph.family() == CodeFamily::Ldpc {
            let masks = check_masks(&graph);
            for (word, &w) in self.codewords.iter().enumerate() {
                for (check, &mask) in masks.iter().enumerate() {
                    if (u32::from(w) & mask).count_ones() % 2 != 0 {
                        return Err(OracleError::CodewordViolatesCheck { word, check });
                    }
                }
            }
        }
        self.graph = Some(graph);
        Ok(self)
    }

    /// All words in {0,1}^n satisfying every parity check of `graph`.
    pub fn from_graph_kernel(graph: &TannerGraph) -> Result<Self, OracleError> {
        if graph.n() > MAX_BLOCK {
            return Err(OracleError::BlockTooLong(graph.n()));
        }
        let masks = check_masks(graph);
        let codewords: Vec<u16> = (0u32..1 << graph.n())
            .filter(|&x| masks.iter().all(|&m| (x & m).count_ones() % 2 == 0))
            .map(|x| x as u16)
            .collect();
        Self::new(graph.n(), codewords)?.with_graph(graph.clone())
    }

    /// Parse the plain-text form: first line "n K", then K codeword
    /// bitstrings (most significant written first is not assumed; bit j of
    /// the string is coordinate j).
    pub fn from_text(text: &str) -> Result<Self, OracleError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| OracleError::Parse("empty file".into()))?;
        let mut it = header.split_whitespace();
        let n: usize = it
            .next()
            .ok_or_else(|| OracleError::Parse("missing n".into()))?
            .parse()
            .map_err(|e| OracleError::Parse(format!("{e}")))?;
        let k: usize = it
            .next()
            .ok_or_else(|| OracleError::Parse("missing K".into()))?
            .parse()
            .map_err(|e| OracleError::Parse(format!("{e}")))?;
        let mut codewords = Vec::with_capacity(k);
        for line in lines.take(k) {
            let bits = line.trim();
            if bits.len() != n {
                return Err(OracleError::Parse(format!(
                    "codeword '{bits}' is not {n} bits"
                )));
            }
            let mut w = 0u16;
            for (j, ch) in bits.chars().enumerate() {
                match ch {
                    '0' => {}
                    '1' => w |= 1 << j,
                    _ => return Err(OracleError::Parse(format!("bad bit '{ch}'"))),
                }
            }
            codewords.push(w);
        }
        if codewords.len() != k {
            return Err(OracleError::Parse(format!(
                "expected {k} codewords, found {}",
                codewords.len()
            )));
        }
        Self::new(n, codewords)
    }

    /// Read a code from a codeword file, optionally attaching a graph read
    /// from an edge-list file.
    pub fn read_from_files(
        code_path: &std::path::Path,
        graph_path: Option<&std::path::Path>,
    ) -> Result<Self, OracleError> {
        let io = |e: std::io::Error| OracleError::Parse(e.to_string());
        let code = Self::from_text(&std::fs::read_to_string(code_path).map_err(io)?)?;
        match graph_path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(io)?;
                let graph = TannerGraph::from_edge_list_str(&text, CodeFamily::Ldpc)
                    .map_err(|e| OracleError::Parse(e.to_string()))?;
                code.with_graph(graph)
            }
            None => Ok(code),
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{} {}", self.n, self.codewords.len());
        for &w in &self.codewords {
            for j in 0..self.n {
                s.push(if (w >> j) & 1 == 1 { '1' } else { '0' });
            }
            s.push('\n');
        }
        s
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_codewords(&self) -> usize {
        self.codewords.len()
    }

    /// log2(K)/n: the rate realized by the uniform-codeword source.
    pub fn rate(&self) -> f64 {
        (self.codewords.len() as f64).log2() / self.n as f64
    }

    pub fn bit(&self, word: usize, coord: usize) -> u8 {
        ((self.codewords[word] >> coord) & 1) as u8
    }

    pub fn graph(&self) -> Option<&TannerGraph> {
        self.graph.as_ref()
    }
}

fn check_masks(graph: &TannerGraph) -> Vec<u32> {
    (0..graph.m())
        .map(|c| {
            graph
                .chk_neighbors(c)
                .iter()
                .fold(0u32, |mask, &v| mask | (1 << v))
        })
        .collect()
}

fn check_budget(alphabet: usize, coords: usize, words: usize) -> Result<(), OracleError> {
    let required = (alphabet as f64).powi(coords as i32) * words as f64;
    if required > ENUM_BUDGET {
        return Err(OracleError::BudgetExceeded {
            required,
            cap: ENUM_BUDGET,
        });
    }
    Ok(())
}

/// Enumerate the joint output law restricted to `coords`. For each output
/// vector, `visit` receives the per-codeword probabilities
/// P(y_coords | codeword) and their mean P(y_coords). The per-codeword
/// products build up one coordinate at a time down the recursion.
fn enumerate_outputs<F: FnMut(&[f64], f64)>(
    code: &ExactCode,
    ch: &BmsChannel,
    coords: &[usize],
    visit: &mut F,
) {
    let words = code.num_codewords();
    let mut ladder = vec![vec![1.0_f64; words]; coords.len() + 1];
    fn rec<F: FnMut(&[f64], f64)>(
        code: &ExactCode,
        ch: &BmsChannel,
        coords: &[usize],
        depth: usize,
        ladder: &mut [Vec<f64>],
        visit: &mut F,
    ) {
        if depth == coords.len() {
            let leaf = &ladder[depth];
            let p: f64 = leaf.iter().sum::<f64>() / leaf.len() as f64;
            visit(leaf, p);
            return;
        }
        let coord = coords[depth];
        for y in 0..ch.alphabet_size() {
            let (head, tail) = ladder.split_at_mut(depth + 1);
            let prev = &head[depth];
            let cur = &mut tail[0];
            for w in 0..prev.len() {
                cur[w] = prev[w] * ch.transition_row(code.bit(w, coord))[y];
            }
            rec(code, ch, coords, depth + 1, ladder, visit);
        }
    }
    rec(code, ch, coords, 0, &mut ladder, visit);
}

/// Exact entropy H(Y_coords) in bits of the outputs restricted to `coords`
/// under uniform codeword choice.
pub fn exact_subset_entropy(
    code: &ExactCode,
    ch: &BmsChannel,
    coords: &[usize],
) -> Result<f64, OracleError> {
    for &i in coords {
        if i >= code.n() {
            return Err(OracleError::IndexOutOfRange(i));
        }
    }
    check_budget(ch.alphabet_size(), coords.len(), code.num_codewords())?;
    let mut acc = KahanSum::new();
    enumerate_outputs(code, ch, coords, &mut |_, p| {
        if p >= ENTROPY_PROB_FLOOR {
            acc.add(-p * p.log2());
        }
    });
    Ok(acc.value())
}

/// Exact per-symbol output entropy (1/n) H(Y^n).
pub fn exact_joint_output_entropy(code: &ExactCode, ch: &BmsChannel) -> Result<f64, OracleError> {
    let coords: Vec<usize> = (0..code.n()).collect();
    Ok(exact_subset_entropy(code, ch, &coords)? / code.n() as f64)
}

/// Exact H(Y_i | Y_S) by marginalizing the joint law: H(Y_{S+i}) - H(Y_S).
pub fn exact_conditional_entropy(
    code: &ExactCode,
    ch: &BmsChannel,
    i: usize,
    s: &[usize],
) -> Result<f64, OracleError> {
    if i >= code.n() {
        return Err(OracleError::IndexOutOfRange(i));
    }
    let set: BTreeSet<usize> = s.iter().copied().collect();
    if set.contains(&i) {
        return Err(OracleError::IndexInConditioningSet(i));
    }
    let s_coords: Vec<usize> = set.iter().copied().collect();
    let mut si_coords = s_coords.clone();
    si_coords.push(i);
    let joint = exact_subset_entropy(code, ch, &si_coords)?;
    let marginal = exact_subset_entropy(code, ch, &s_coords)?;
    Ok(joint - marginal)
}

/// Exact decoding-success parameter for node `i` at depth `l`:
/// H(Y_i) - H(Y_i | neighborhood outputs). Needs an attached graph.
pub fn exact_tau(
    code: &ExactCode,
    ch: &BmsChannel,
    i: usize,
    l: usize,
) -> Result<f64, OracleError> {
    let graph = code.graph().ok_or(OracleError::NoGraph)?;
    let members = graph.neighborhood(i, l).members;
    let h_marginal = exact_conditional_entropy(code, ch, i, &[])?;
    let h_cond = exact_conditional_entropy(code, ch, i, &members)?;
    Ok(h_marginal - h_cond)
}

/// The exact per-symbol quantities tying rate, output entropy, and residual
/// input uncertainty together.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FanoChain {
    /// (1/n) H(X^n | Y^n).
    pub h_x_given_y: f64,
    /// (1/n) H(Y^n).
    pub h_y: f64,
    /// (1/n) H(Y^n | X^n).
    pub h_y_given_x: f64,
    /// log2(K)/n.
    pub rate: f64,
    /// | h_x_given_y - (rate - h_y + h_y_given_x) |, all terms computed
    /// independently.
    pub identity_residual: f64,
}

/// Compute all four per-symbol quantities by direct enumeration and check
/// the information identity H(X|Y) = H(X) - H(Y) + H(Y|X) numerically.
pub fn exact_fano_chain(code: &ExactCode, ch: &BmsChannel) -> Result<FanoChain, OracleError> {
    let n = code.n();
    let coords: Vec<usize> = (0..n).collect();
    check_budget(ch.alphabet_size(), n, code.num_codewords())?;
    let words = code.num_codewords() as f64;

    let mut h_y_acc = KahanSum::new();
    let mut h_x_given_y_acc = KahanSum::new();
    enumerate_outputs(code, ch, &coords, &mut |leaf, p| {
        if p >= ENTROPY_PROB_FLOOR {
            h_y_acc.add(-p * p.log2());
            for &pw in leaf {
                let p_xy = pw / words;
                if p_xy >= ENTROPY_PROB_FLOOR {
                    h_x_given_y_acc.add(-p_xy * (p_xy / p).log2());
                }
            }
        }
    });

    let mut h_y_given_x_acc = KahanSum::new();
    for w in 0..code.num_codewords() {
        for i in 0..n {
            h_y_given_x_acc.add(crate::math::entropy_bits(ch.transition_row(code.bit(w, i))));
        }
    }

    let h_y = h_y_acc.value() / n as f64;
    let h_x_given_y = h_x_given_y_acc.value() / n as f64;
    let h_y_given_x = h_y_given_x_acc.value() / (n as f64 * words);
    let rate = code.rate();
    Ok(FanoChain {
        h_x_given_y,
        h_y,
        h_y_given_x,
        rate,
        identity_residual: (h_x_given_y - (rate - h_y + h_y_given_x)).abs(),
    })
}

/// How the neighborhood size enters the entropy bound: the maximum over
/// nodes (uniform, conservative) or each node's own size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum KConvention {
    NodeMax,
    PerNode,
}

/// Result of checking the per-symbol output entropy against the
/// neighborhood bound on one instance.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PermutationBoundCheck {
    /// Exact (1/n) H(Y^n).
    pub lhs: f64,
    /// Node-averaged H(Y_i) minus the tau/(k+1) correction.
    pub rhs: f64,
    /// rhs - lhs; the bound holds when this is >= -1e-9.
    pub slack: f64,
    pub holds: bool,
    /// Node-averaged exact tau at this depth.
    pub tau_bar: f64,
    /// Neighborhood size entering the bound (maximum over nodes under
    /// NodeMax).
    pub k_bar: usize,
    /// Node-averaged marginal output entropy.
    pub h_y_bar: f64,
}

/// Check exact (1/n)H(Y^n) <= mean_i H(Y_i) - tau_bar/(k+1) on `code` at
/// depth `l`.
///
/// The +1 counts the center bit along with its neighborhood in the
/// fraction of orderings where the whole neighborhood precedes the bit;
/// using it (rather than k alone) only weakens the bound, never invalidates
/// it. Under `NodeMax` a single worst-case k is applied to every node.
pub fn verify_permutation_bound(
    code: &ExactCode,
    ch: &BmsChannel,
    l: usize,
    convention: KConvention,
) -> Result<PermutationBoundCheck, OracleError> {
    let graph = code.graph().ok_or(OracleError::NoGraph)?;
    let n = code.n();
    let lhs = exact_joint_output_entropy(code, ch)?;

    let mut h_sum = 0.0;
    let mut tau_sum = 0.0;
    let mut ratio_sum = 0.0;
    let mut k_max = 0usize;
    for i in 0..n {
        let members = graph.neighborhood(i, l).members;
        let h_i = exact_conditional_entropy(code, ch, i, &[])?;
        let tau_i = h_i - exact_conditional_entropy(code, ch, i, &members)?;
        h_sum += h_i;
        tau_sum += tau_i;
        ratio_sum += tau_i / (members.len() + 1) as f64;
        k_max = k_max.max(members.len());
    }
    let h_y_bar = h_sum / n as f64;
    let tau_bar = tau_sum / n as f64;
    let rhs = match convention {
        KConvention::NodeMax => h_y_bar - tau_bar / (k_max + 1) as f64,
        KConvention::PerNode => h_y_bar - ratio_sum / n as f64,
    };
    let slack = rhs - lhs;
    Ok(PermutationBoundCheck {
        lhs,
        rhs,
        slack,
        holds: slack >= -1e-9,
        tau_bar,
        k_bar: k_max,
        h_y_bar,
    })
}
