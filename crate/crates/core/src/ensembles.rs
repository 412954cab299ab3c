//! Degree distributions, Tanner-graph sampling, and computational
//! neighborhoods.
//!
//! Graphs come from the configuration model: degree sockets on both sides
//! are matched by a random permutation and repeated edges are removed by
//! random pair swaps. The l-iteration neighborhood of a variable node is the
//! set of variable nodes within graph distance 2l, found by breadth-first
//! search; the classical tree-growth estimate and the exact regular-tree cap
//! are provided alongside for comparison.

use std::collections::HashMap;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EnsembleError {
    #[error("invalid degree distribution: {0}")]
    InvalidDistribution(&'static str),
    #[error("regular ensemble needs 2 <= dv < dc, got dv={dv} dc={dc}")]
    InvalidRegularDegrees { dv: usize, dc: usize },
    #[error(
        "n*alpha/beta = {0} is not integral; pick a block length divisible by the check balance"
    )]
    NonIntegralCheckCount(f64),
    #[error("block length {n} is smaller than the maximum check degree {dc}")]
    BlockTooSmall { n: usize, dc: usize },
    #[error("configuration-model repair exceeded the retry cap; reseed and retry")]
    ConstructionFailed,
    #[error("inconsistent graph: {0}")]
    InvalidGraph(&'static str),
    #[error("edge list parse error: {0}")]
    Parse(String),
}

/// Whether check nodes are parity constraints (LDPC) or noisy generator
/// outputs (LDGM). The graph structure and all neighborhood machinery are
/// identical; the marker is carried through to reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CodeFamily {
    Ldpc,
    Ldgm,
}

/// Node-perspective degree distributions for both sides of the bipartite
/// graph, with the derived edge-perspective polynomials.
#[derive(Debug, Clone)]
pub struct DegreeDistribution {
    /// `var_node_dist[d]` = fraction of variable nodes with degree d.
    var_node_dist: Vec<f64>,
    /// `chk_node_dist[d]` = fraction of check nodes with degree d.
    chk_node_dist: Vec<f64>,
    alpha: f64,
    beta: f64,
    /// Edge-perspective coefficients: `lambda[d]` is the coefficient of
    /// x^(d-1), i.e. the fraction of edges incident to degree-d variables.
    lambda: Vec<f64>,
    rho: Vec<f64>,
}

impl DegreeDistribution {
    /// Build from node-perspective probability vectors indexed by degree.
    pub fn new(var_node_dist: Vec<f64>, chk_node_dist: Vec<f64>) -> Result<Self, EnsembleError> {
        let validate = |dist: &[f64]| -> Result<f64, EnsembleError> {
            if dist.len() < 2 {
                return Err(EnsembleError::InvalidDistribution("empty distribution"));
            }
            if dist[0] != 0.0 {
                return Err(EnsembleError::InvalidDistribution("degree-0 mass"));
            }
            let sum: f64 = dist.iter().sum();
            if (sum - 1.0).abs() > 1e-12 {
                return Err(EnsembleError::InvalidDistribution("mass does not sum to 1"));
            }
            if dist.iter().any(|&p| p < 0.0) {
                return Err(EnsembleError::InvalidDistribution("negative mass"));
            }
            Ok(dist
                .iter()
                .enumerate()
                .map(|(d, &p)| d as f64 * p)
                .sum::<f64>())
        };
        let alpha = validate(&var_node_dist)?;
        let beta = validate(&chk_node_dist)?;
        let edge_perspective = |dist: &[f64], avg: f64| -> Vec<f64> {
            dist.iter()
                .enumerate()
                .map(|(d, &p)| d as f64 * p / avg)
                .collect()
        };
        Ok(Self {
            lambda: edge_perspective(&var_node_dist, alpha),
            rho: edge_perspective(&chk_node_dist, beta),
            var_node_dist,
            chk_node_dist,
            alpha,
            beta,
        })
    }

    /// Point-mass distributions at variable degree `dv` and check degree
    /// `dc`. Rejects dv < 2 and dv >= dc (non-positive design rate).
    pub fn regular(dv: usize, dc: usize) -> Result<Self, EnsembleError> {
        if dv < 2 || dc <= dv {
            return Err(EnsembleError::InvalidRegularDegrees { dv, dc });
        }
        let mut var = vec![0.0; dv + 1];
        var[dv] = 1.0;
        let mut chk = vec![0.0; dc + 1];
        chk[dc] = 1.0;
        Self::new(var, chk)
    }

    /// Average variable-node degree.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Average check-node degree.
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Design rate 1 - alpha/beta.
    pub fn design_rate(&self) -> f64 {
        1.0 - self.alpha / self.beta
    }

    pub fn var_node_dist(&self) -> &[f64] {
        &self.var_node_dist
    }

    pub fn chk_node_dist(&self) -> &[f64] {
        &self.chk_node_dist
    }

    pub fn lambda_coeffs(&self) -> &[f64] {
        &self.lambda
    }

    pub fn rho_coeffs(&self) -> &[f64] {
        &self.rho
    }

    /// Edge-perspective variable polynomial λ(x) = Σ λ_d x^(d-1).
    pub fn lambda_eval(&self, x: f64) -> f64 {
        self.lambda
            .iter()
            .enumerate()
            .skip(1)
            .map(|(d, &c)| c * x.powi(d as i32 - 1))
            .sum()
    }

    /// Edge-perspective check polynomial ρ(x) = Σ ρ_d x^(d-1).
    pub fn rho_eval(&self, x: f64) -> f64 {
        self.rho
            .iter()
            .enumerate()
            .skip(1)
            .map(|(d, &c)| c * x.powi(d as i32 - 1))
            .sum()
    }

    /// Node-perspective variable polynomial Λ(x) = Σ Λ_d x^d.
    pub fn var_node_eval(&self, x: f64) -> f64 {
        self.var_node_dist
            .iter()
            .enumerate()
            .map(|(d, &p)| p * x.powi(d as i32))
            .sum()
    }

    pub fn max_var_degree(&self) -> usize {
        last_positive(&self.var_node_dist)
    }

    pub fn max_chk_degree(&self) -> usize {
        last_positive(&self.chk_node_dist)
    }

    pub fn sample_var_node_degree<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        sample_index(&self.var_node_dist, rng)
    }

    pub fn sample_var_edge_degree<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        sample_index(&self.lambda, rng)
    }

    pub fn sample_chk_edge_degree<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        sample_index(&self.rho, rng)
    }
}

fn last_positive(dist: &[f64]) -> usize {
    dist.iter()
        .rposition(|&p| p > 0.0)
        .expect("validated distribution has mass")
}

fn sample_index<R: Rng + ?Sized>(dist: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (d, &p) in dist.iter().enumerate() {
        acc += p;
        if u < acc {
            return d;
        }
    }
    last_positive(dist)
}

/// Largest-remainder apportionment of `total` nodes to the degrees of
/// `dist`. Deterministic; returns per-degree counts.
fn apportion(dist: &[f64], total: usize) -> Vec<usize> {
    let mut counts: Vec<usize> = dist.iter().map(|&p| (p * total as f64) as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut fracs: Vec<(usize, f64)> = dist
        .iter()
        .enumerate()
        .map(|(d, &p)| (d, p * total as f64 - counts[d] as f64))
        .filter(|&(d, _)| dist[d] > 0.0)
        .collect();
    fracs.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    for k in 0..total.saturating_sub(assigned) {
        let (d, _) = fracs[k % fracs.len()];
        counts[d] += 1;
    }
    counts
}

/// Explicit bipartite code graph. Adjacency lists are sorted and mirrored;
/// repeated (variable, check) edges are rejected. Immutable after
/// construction and safe to share across workers.
#[derive(Debug, Clone)]
pub struct TannerGraph {
    n: usize,
    m: usize,
    var_adj: Vec<Vec<usize>>,
    chk_adj: Vec<Vec<usize>>,
    family: CodeFamily,
}

impl TannerGraph {
    /// Build from an explicit edge list, validating the graph invariants.
    pub fn from_edges(
        n: usize,
        m: usize,
        edges: &[(usize, usize)],
        family: CodeFamily,
    ) -> Result<Self, EnsembleError> {
        let mut var_adj = vec![Vec::new(); n];
        let mut chk_adj = vec![Vec::new(); m];
        for &(v, c) in edges {
            if v >= n || c >= m {
                return Err(EnsembleError::InvalidGraph("edge endpoint out of range"));
            }
            var_adj[v].push(c);
            chk_adj[c].push(v);
        }
        for adj in var_adj.iter_mut().chain(chk_adj.iter_mut()) {
            adj.sort_unstable();
            if adj.windows(2).any(|w| w[0] == w[1]) {
                return Err(EnsembleError::InvalidGraph("repeated edge"));
            }
        }
        Ok(Self {
            n,
            m,
            var_adj,
            chk_adj,
            family,
        })
    }

    /// Sample a graph from the configuration model.
    ///
    /// Degree sockets on both sides are matched by a random permutation;
    /// repeated edges are repaired by random pair swaps with a bounded retry
    /// budget. The realized degree sequence matches `dd` up to integer
    /// rounding. Fails (recoverably; reseed and retry) if the repair budget
    /// runs out.
    pub fn sample<R: Rng + ?Sized>(
        dd: &DegreeDistribution,
        n: usize,
        family: CodeFamily,
        rng: &mut R,
    ) -> Result<Self, EnsembleError> {
        let m_real = n as f64 * dd.alpha() / dd.beta();
        let m = m_real.round() as usize;
        if (m_real - m as f64).abs() > 1e-6 {
            return Err(EnsembleError::NonIntegralCheckCount(m_real));
        }
        if n < dd.max_chk_degree() {
            return Err(EnsembleError::BlockTooSmall {
                n,
                dc: dd.max_chk_degree(),
            });
        }
        let var_counts = apportion(dd.var_node_dist(), n);
        let mut chk_counts = apportion(dd.chk_node_dist(), m);
        let var_edges: usize = var_counts.iter().enumerate().map(|(d, &c)| d * c).sum();
        let chk_edges: usize = chk_counts.iter().enumerate().map(|(d, &c)| d * c).sum();
        // Rounding on the two sides can leave the socket totals unequal for
        // irregular ensembles; shift single check nodes one degree at a time
        // until they match.
        let mut deficit = var_edges as i64 - chk_edges as i64;
        while deficit != 0 {
            if deficit > 0 {
                let d = (1..chk_counts.len().min(n))
                    .rev()
                    .find(|&d| chk_counts[d] > 0 && d < n)
                    .ok_or(EnsembleError::ConstructionFailed)?;
                if d + 1 >= chk_counts.len() {
                    chk_counts.push(0);
                }
                chk_counts[d] -= 1;
                chk_counts[d + 1] += 1;
                deficit -= 1;
            } else {
                let d = (2..chk_counts.len())
                    .find(|&d| chk_counts[d] > 0)
                    .ok_or(EnsembleError::ConstructionFailed)?;
                chk_counts[d] -= 1;
                chk_counts[d - 1] += 1;
                deficit += 1;
            }
        }

        let expand = |counts: &[usize]| -> Vec<usize> {
            let mut degs = Vec::new();
            for (d, &cnt) in counts.iter().enumerate() {
                for _ in 0..cnt {
                    degs.push(d);
                }
            }
            degs
        };
        let var_degs = expand(&var_counts);
        let chk_degs = expand(&chk_counts);

        let mut var_sockets = Vec::with_capacity(var_edges);
        for (v, &d) in var_degs.iter().enumerate() {
            var_sockets.extend(std::iter::repeat_n(v, d));
        }
        let mut chk_sockets = Vec::with_capacity(var_edges);
        for (c, &d) in chk_degs.iter().enumerate() {
            chk_sockets.extend(std::iter::repeat_n(c, d));
        }
        chk_sockets.shuffle(rng);

        let mut edges: Vec<(usize, usize)> = var_sockets.into_iter().zip(chk_sockets).collect();
        repair_duplicates(&mut edges, rng)?;
        Self::from_edges(n, m, &edges, family)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn family(&self) -> CodeFamily {
        self.family
    }

    pub fn edge_count(&self) -> usize {
        self.var_adj.iter().map(Vec::len).sum()
    }

    pub fn var_neighbors(&self, v: usize) -> &[usize] {
        &self.var_adj[v]
    }

    pub fn chk_neighbors(&self, c: usize) -> &[usize] {
        &self.chk_adj[c]
    }

    /// Realized average variable degree, edges / n.
    pub fn avg_var_degree(&self) -> f64 {
        self.edge_count() as f64 / self.n as f64
    }

    /// Realized average check degree, edges / m.
    pub fn avg_chk_degree(&self) -> f64 {
        self.edge_count() as f64 / self.m as f64
    }

    /// Realized design rate 1 - m/n.
    pub fn design_rate(&self) -> f64 {
        1.0 - self.m as f64 / self.n as f64
    }

    /// All edges sorted by (variable, check).
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for (v, adj) in self.var_adj.iter().enumerate() {
            for &c in adj {
                out.push((v, c));
            }
        }
        out
    }

    /// Plain-text edge list: first line "n m", then one "v c" pair per
    /// line, zero-indexed and sorted so files are byte-stable.
    pub fn to_edge_list_string(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{} {}", self.n, self.m);
        for (v, c) in self.edges() {
            let _ = writeln!(s, "{v} {c}");
        }
        s
    }

    pub fn from_edge_list_str(text: &str, family: CodeFamily) -> Result<Self, EnsembleError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| EnsembleError::Parse("empty edge list".into()))?;
        let mut it = header.split_whitespace();
        let parse = |tok: Option<&str>| -> Result<usize, EnsembleError> {
            tok.ok_or_else(|| EnsembleError::Parse("missing header field".into()))?
                .parse::<usize>()
                .map_err(|e| EnsembleError::Parse(e.to_string()))
        };
        let n = parse(it.next())?;
        let m = parse(it.next())?;
        let mut edges = Vec::new();
        for line in lines {
            let mut it = line.split_whitespace();
            let v = parse(it.next())?;
            let c = parse(it.next())?;
            edges.push((v, c));
        }
        Self::from_edges(n, m, &edges, family)
    }

    /// Variable nodes reachable from `center` within `l` decoding
    /// iterations (graph distance 2l), excluding the center itself.
    pub fn neighborhood(&self, center: usize, l: usize) -> Neighborhood {
        self.neighborhood_with_tree_flag(center, l).0
    }

    /// Neighborhood plus whether the explored region is cycle-free.
    pub fn neighborhood_with_tree_flag(&self, center: usize, l: usize) -> (Neighborhood, bool) {
        let mut var_seen = vec![false; self.n];
        let mut chk_seen = vec![false; self.m];
        var_seen[center] = true;
        // Frontier entries carry the parent on the opposite side so the
        // return edge is not treated as a cycle.
        let mut frontier: Vec<(usize, Option<usize>)> = vec![(center, None)];
        let mut tree = true;
        for _ in 0..l {
            let mut next_chks: Vec<(usize, usize)> = Vec::new();
            for &(v, parent) in &frontier {
                for &c in &self.var_adj[v] {
                    if parent == Some(c) {
                        continue;
                    }
                    if chk_seen[c] {
                        tree = false;
                        continue;
                    }
                    chk_seen[c] = true;
                    next_chks.push((c, v));
                }
            }
            let mut next_vars: Vec<(usize, Option<usize>)> = Vec::new();
            for &(c, parent) in &next_chks {
                for &v in &self.chk_adj[c] {
                    if v == parent {
                        continue;
                    }
                    if var_seen[v] {
                        tree = false;
                        continue;
                    }
                    var_seen[v] = true;
                    next_vars.push((v, Some(c)));
                }
            }
            frontier = next_vars;
            if frontier.is_empty() {
                break;
            }
        }
        let members: Vec<usize> = (0..self.n)
            .filter(|&v| var_seen[v] && v != center)
            .collect();
        (
            Neighborhood {
                center,
                depth: l,
                members,
            },
            tree,
        )
    }
}

fn repair_duplicates<R: Rng + ?Sized>(
    edges: &mut [(usize, usize)],
    rng: &mut R,
) -> Result<(), EnsembleError> {
    if edges.is_empty() {
        return Ok(());
    }
    let mut counts: HashMap<(usize, usize), u32> = HashMap::new();
    for &e in edges.iter() {
        *counts.entry(e).or_insert(0) += 1;
    }
    let cap = 200 * edges.len();
    let mut attempts = 0usize;
    loop {
        let dup_indices: Vec<usize> = {
            let mut seen: HashMap<(usize, usize), bool> = HashMap::new();
            edges
                .iter()
                .enumerate()
                .filter_map(|(i, &e)| {
                    if counts[&e] > 1 && seen.insert(e, true).is_some() {
                        Some(i)
                    } else {
                        None
                    }
                })
                .collect()
        };
        if dup_indices.is_empty() {
            return Ok(());
        }
        for i in dup_indices {
            loop {
                attempts += 1;
                if attempts > cap {
                    return Err(EnsembleError::ConstructionFailed);
                }
                let j = rng.gen_range(0..edges.len());
                if j == i {
                    continue;
                }
                let (vi, ci) = edges[i];
                let (vj, cj) = edges[j];
                // Sharing either endpoint makes the swap a no-op permutation.
                if vi == vj || ci == cj {
                    continue;
                }
                let new_i = (vi, cj);
                let new_j = (vj, ci);
                *counts.get_mut(&(vi, ci)).unwrap() -= 1;
                *counts.get_mut(&(vj, cj)).unwrap() -= 1;
                let ok = counts.get(&new_i).copied().unwrap_or(0) == 0
                    && counts.get(&new_j).copied().unwrap_or(0) == 0;
                if ok {
                    *counts.entry(new_i).or_insert(0) += 1;
                    *counts.entry(new_j).or_insert(0) += 1;
                    edges[i] = new_i;
                    edges[j] = new_j;
                    break;
                }
                *counts.get_mut(&(vi, ci)).unwrap() += 1;
                *counts.get_mut(&(vj, cj)).unwrap() += 1;
            }
        }
    }
}

/// The l-iteration computational neighborhood of a variable node: every
/// variable node whose channel output can influence the center's messages
/// within l iterations, excluding the center.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Neighborhood {
    pub center: usize,
    pub depth: usize,
    /// Sorted member indices; never contains `center`.
    pub members: Vec<usize>,
}

impl Neighborhood {
    pub fn size(&self) -> usize {
        self.members.len()
    }

    pub fn contains(&self, v: usize) -> bool {
        self.members.binary_search(&v).is_ok()
    }
}

/// Tree-growth estimate of the l-iteration neighborhood size,
/// Σ_{i=1..l} ((alpha-1)(beta-1))^i, using average degrees. An
/// approximation: the first level fans out through alpha (not alpha-1) check
/// sockets, so this undercounts; the exact regular-tree count is
/// [`exact_tree_cap`].
pub fn paper_k_estimate(alpha: f64, beta: f64, l: usize) -> f64 {
    let growth = (alpha - 1.0) * (beta - 1.0);
    let mut term = 1.0;
    let mut sum = 0.0;
    for _ in 0..l {
        term *= growth;
        sum += term;
    }
    sum
}

/// Exact variable-node count of a depth-l tree with regular degrees:
/// Σ_{i=1..l} dv (dv-1)^(i-1) (dc-1)^i. BFS on any (dv, dc)-regular graph
/// cannot visit more variables than this. Saturates at u128::MAX.
pub fn exact_tree_cap(dv: usize, dc: usize, l: usize) -> u128 {
    assert!(dv >= 1 && dc >= 1, "tree cap needs positive degrees");
    let dv = dv as u128;
    let dc = dc as u128;
    let mut sum: u128 = 0;
    let mut layer = dv; // dv (dv-1)^(i-1) (dc-1)^(i-1) entering level i
    for _ in 0..l {
        layer = layer.saturating_mul(dc - 1);
        sum = sum.saturating_add(layer);
        layer = layer.saturating_mul(dv - 1);
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn regular_ensemble_averages() {
        let dd = DegreeDistribution::regular(3, 6).unwrap();
        assert_eq!(dd.alpha(), 3.0);
        assert_eq!(dd.beta(), 6.0);
        assert!((dd.design_rate() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn regular_edge_perspective_is_monomial() {
        let dd = DegreeDistribution::regular(4, 8).unwrap();
        // λ(x) = x^3, ρ(x) = x^7
        assert!((dd.lambda_coeffs()[4] - 1.0).abs() < 1e-15);
        assert!((dd.rho_coeffs()[8] - 1.0).abs() < 1e-15);
        for &x in &[0.0, 0.3, 0.7, 1.0] {
            assert!((dd.lambda_eval(x) - x.powi(3)).abs() < 1e-15);
            assert!((dd.rho_eval(x) - x.powi(7)).abs() < 1e-15);
        }
    }

    #[test]
    fn lambda_rho_normalized_at_one() {
        let dd = DegreeDistribution::new(
            vec![0.0, 0.0, 0.5, 0.5],
            vec![0.0, 0.0, 0.0, 0.0, 0.25, 0.75],
        )
        .unwrap();
        assert!((dd.lambda_eval(1.0) - 1.0).abs() < 1e-12);
        assert!((dd.rho_eval(1.0) - 1.0).abs() < 1e-12);
        assert!((dd.alpha() - 2.5).abs() < 1e-12);
        assert!((dd.beta() - 4.75).abs() < 1e-12);
    }

    #[test]
    fn regular_rejects_bad_degrees() {
        assert!(DegreeDistribution::regular(1, 3).is_err());
        assert!(DegreeDistribution::regular(3, 3).is_err());
        assert!(DegreeDistribution::regular(6, 3).is_err());
    }

    #[test]
    fn design_rate_boundaries() {
        let eq =
            DegreeDistribution::new(vec![0.0, 0.0, 0.0, 1.0], vec![0.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(eq.design_rate(), 0.0);
        let dd = DegreeDistribution::regular(3, 4).unwrap();
        assert!((dd.design_rate() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn sampled_graph_counts() {
        let dd = DegreeDistribution::regular(3, 6).unwrap();
        let g = TannerGraph::sample(&dd, 100, CodeFamily::Ldpc, &mut rng(1)).unwrap();
        assert_eq!(g.n(), 100);
        assert_eq!(g.m(), 50);
        assert_eq!(g.edge_count(), 300);
        for v in 0..g.n() {
            assert_eq!(g.var_neighbors(v).len(), 3);
        }
        for c in 0..g.m() {
            assert_eq!(g.chk_neighbors(c).len(), 6);
        }
        // Mirror consistency.
        for (v, c) in g.edges() {
            assert!(g.chk_neighbors(c).contains(&v));
        }
    }

    #[test]
    fn sampling_is_deterministic_in_the_seed() {
        let dd = DegreeDistribution::regular(3, 6).unwrap();
        let a = TannerGraph::sample(&dd, 10, CodeFamily::Ldpc, &mut rng(99)).unwrap();
        let b = TannerGraph::sample(&dd, 10, CodeFamily::Ldpc, &mut rng(99)).unwrap();
        assert_eq!(a.to_edge_list_string(), b.to_edge_list_string());
    }

    #[test]
    fn sparse_graphs_are_locally_treelike() {
        let dd = DegreeDistribution::regular(3, 6).unwrap();
        let mut tree_nodes = 0usize;
        let mut total = 0usize;
        for seed in 0..20 {
            let g = TannerGraph::sample(&dd, 10_000, CodeFamily::Ldpc, &mut rng(seed)).unwrap();
            for v in 0..g.n() {
                let (_, is_tree) = g.neighborhood_with_tree_flag(v, 1);
                tree_nodes += usize::from(is_tree);
                total += 1;
            }
        }
        let fraction = tree_nodes as f64 / total as f64;
        assert!(fraction >= 0.9, "tree fraction {fraction}");
    }

    /// Fixed cycle-free graph: checks {0,1,2}, edges c0-{0,1,2}, c1-{0,3,4},
    /// c2-{1,5}.
    fn fixed_tree_graph() -> TannerGraph {
        TannerGraph::from_edges(
            6,
            3,
            &[
                (0, 0),
                (1, 0),
                (2, 0),
                (0, 1),
                (3, 1),
                (4, 1),
                (1, 2),
                (5, 2),
            ],
            CodeFamily::Ldpc,
        )
        .unwrap()
    }

    #[test]
    fn neighborhood_on_fixed_graph_matches_hand_enumeration() {
        let g = fixed_tree_graph();
        let n0 = g.neighborhood(0, 0);
        assert_eq!(n0.size(), 0);
        let n1 = g.neighborhood(0, 1);
        assert_eq!(n1.members, vec![1, 2, 3, 4]);
        let n2 = g.neighborhood(0, 2);
        assert_eq!(n2.members, vec![1, 2, 3, 4, 5]);
        let (_, tree) = g.neighborhood_with_tree_flag(0, 2);
        assert!(tree);
    }

    #[test]
    fn neighborhood_detects_cycles() {
        // Two checks sharing two variables: a 4-cycle.
        let g = TannerGraph::from_edges(2, 2, &[(0, 0), (1, 0), (0, 1), (1, 1)], CodeFamily::Ldpc)
            .unwrap();
        let (_, tree) = g.neighborhood_with_tree_flag(0, 1);
        assert!(!tree);
    }

    #[test]
    fn neighborhood_respects_tree_fanout_cap() {
        let dd = DegreeDistribution::regular(3, 6).unwrap();
        let g = TannerGraph::sample(&dd, 300, CodeFamily::Ldpc, &mut rng(5)).unwrap();
        for v in 0..g.n() {
            assert!(g.neighborhood(v, 1).size() <= 15);
            assert!(g.neighborhood(v, 2).size() as u128 <= exact_tree_cap(3, 6, 2));
        }
    }

    #[test]
    fn neighborhoods_nest() {
        let dd = DegreeDistribution::regular(3, 6).unwrap();
        for seed in 0..5 {
            let g = TannerGraph::sample(&dd, 120, CodeFamily::Ldpc, &mut rng(seed)).unwrap();
            for v in (0..g.n()).step_by(17) {
                let mut prev = g.neighborhood(v, 0);
                for l in 1..=3 {
                    let next = g.neighborhood(v, l);
                    assert!(prev.members.iter().all(|&u| next.contains(u)));
                    prev = next;
                }
            }
        }
    }

    #[test]
    fn k_estimate_values() {
        assert_eq!(paper_k_estimate(3.0, 6.0, 0), 0.0);
        assert!((paper_k_estimate(3.0, 6.0, 1) - 10.0).abs() < 1e-12);
        assert!((paper_k_estimate(3.0, 6.0, 2) - 110.0).abs() < 1e-12);
    }

    #[test]
    fn tree_cap_values() {
        assert_eq!(exact_tree_cap(3, 6, 0), 0);
        assert_eq!(exact_tree_cap(3, 6, 1), 15);
        assert_eq!(exact_tree_cap(3, 6, 2), 165);
    }

    #[test]
    fn k_estimate_stays_below_tree_cap() {
        for l in 1..=6 {
            assert!(paper_k_estimate(3.0, 6.0, l) <= exact_tree_cap(3, 6, l) as f64);
            assert!(paper_k_estimate(4.0, 8.0, l) <= exact_tree_cap(4, 8, l) as f64);
        }
    }

    #[test]
    fn realized_rate_and_check_balance() {
        let dd = DegreeDistribution::regular(2, 4).unwrap();
        let g = TannerGraph::sample(&dd, 80, CodeFamily::Ldpc, &mut rng(3)).unwrap();
        assert!((g.design_rate() - 0.5).abs() < 1e-12);
        assert!((g.m() as f64 / g.n() as f64 - dd.alpha() / dd.beta()).abs() < 1e-12);
    }

    #[test]
    fn non_integral_check_count_rejected() {
        let dd = DegreeDistribution::regular(3, 6).unwrap();
        assert!(matches!(
            TannerGraph::sample(&dd, 7, CodeFamily::Ldpc, &mut rng(0)),
            Err(EnsembleError::NonIntegralCheckCount(_))
        ));
    }

    #[test]
    fn block_smaller_than_check_degree_rejected() {
        let dd = DegreeDistribution::regular(3, 6).unwrap();
        assert!(matches!(
            TannerGraph::sample(&dd, 4, CodeFamily::Ldpc, &mut rng(0)),
            Err(EnsembleError::BlockTooSmall { .. })
        ));
    }

    #[test]
    fn edge_list_roundtrip_is_byte_stable() {
        let dd = DegreeDistribution::regular(3, 6).unwrap();
        let g = TannerGraph::sample(&dd, 30, CodeFamily::Ldgm, &mut rng(11)).unwrap();
        let text = g.to_edge_list_string();
        let parsed = TannerGraph::from_edge_list_str(&text, CodeFamily::Ldgm).unwrap();
        assert_eq!(parsed.to_edge_list_string(), text);
        assert_eq!(parsed.family(), CodeFamily::Ldgm);
        assert!(text.starts_with("30 15\n"));
    }

    #[test]
    fn edge_list_parse_errors() {
        assert!(TannerGraph::from_edge_list_str("", CodeFamily::Ldpc).is_err());
        assert!(TannerGraph::from_edge_list_str("2 1\n0 x\n", CodeFamily::Ldpc).is_err());
        assert!(TannerGraph::from_edge_list_str("2 1\n5 0\n", CodeFamily::Ldpc).is_err());
        // Repeated edge.
        assert!(TannerGraph::from_edge_list_str("2 1\n0 0\n0 0\n", CodeFamily::Ldpc).is_err());
    }

    #[test]
    fn ldgm_marker_is_carried() {
        let dd = DegreeDistribution::regular(3, 6).unwrap();
        let g = TannerGraph::sample(&dd, 12, CodeFamily::Ldgm, &mut rng(2)).unwrap();
        assert_eq!(g.family(), CodeFamily::Ldgm);
    }
}
