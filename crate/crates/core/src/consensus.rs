//! Communication graphs, consensus weights and the synchronous message
//! exchange between neighbouring nodes.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::sym_eig_slice;

/// Connectivity retries before `random_connected_graph` gives up.
pub const MAX_GRAPH_ATTEMPTS: usize = 1000;

/// Undirected simple graph on nodes `0..n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GraphRepr", into = "GraphRepr")]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct GraphRepr {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl TryFrom<GraphRepr> for Graph {
    type Error = Error;

    fn try_from(r: GraphRepr) -> Result<Self> {
        Graph::new(r.n, r.edges)
    }
}

impl From<Graph> for GraphRepr {
    fn from(g: Graph) -> Self {
        GraphRepr { n: g.n, edges: g.edges }
    }
}

impl Graph {
    /// Normalizes edges to `(min, max)` and drops duplicates. Self-loops
    /// and out-of-range endpoints are rejected.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut norm = Vec::new();
        for (a, b) in edges {
            if a == b {
                return Err(Error::Config(format!("self-loop at node {a}")));
            }
            if a >= n || b >= n {
                return Err(Error::Config(format!("edge ({a}, {b}) out of range for n = {n}")));
            }
            norm.push((a.min(b), a.max(b)));
        }
        norm.sort_unstable();
        norm.dedup();
        let mut neighbors = vec![Vec::new(); n];
        for &(a, b) in &norm {
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        Ok(Graph {
            n,
            edges: norm,
            neighbors,
        })
    }

    pub fn complete(n: usize) -> Self {
        let edges = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j)));
        Graph::new(n, edges).expect("complete graph is valid")
    }

    pub fn path(n: usize) -> Self {
        Graph::new(n, (1..n).map(|i| (i - 1, i))).expect("path graph is valid")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn average_degree(&self) -> f64 {
        2.0 * self.edges.len() as f64 / self.n as f64
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return false;
        }
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = queue.pop_front() {
            for &w in &self.neighbors[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    queue.push_back(w);
                }
            }
        }
        count == self.n
    }

    /// Messages per consensus step: one payload per directed edge.
    pub fn messages_per_step(&self) -> u64 {
        2 * self.edges.len() as u64
    }
}

/// Erdős–Rényi graph with `p = target_avg_degree/(n−1)`, redrawn from the
/// same seeded stream until connected.
pub fn random_connected_graph(n: usize, target_avg_degree: f64, seed: u64) -> Result<Graph> {
    if n < 2 {
        return Err(Error::Config(format!("graph needs at least 2 nodes, got {n}")));
    }
    if !(target_avg_degree > 0.0 && target_avg_degree.is_finite()) {
        return Err(Error::Config(format!("average degree must be positive, got {target_avg_degree}")));
    }
    let p = (target_avg_degree / (n - 1) as f64).min(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_GRAPH_ATTEMPTS {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.gen::<f64>() < p {
                    edges.push((i, j));
                }
            }
        }
        let g = Graph::new(n, edges)?;
        if g.is_connected() {
            return Ok(g);
        }
    }
    Err(Error::ConnectivityAttempts {
        attempts: MAX_GRAPH_ATTEMPTS,
    })
}

/// Symmetric doubly-stochastic weights on a graph with certified
/// `ν = ρ(W − 11ᵀ/n) < 1`.
#[derive(Debug, Clone)]
pub struct ConsensusMatrix {
    graph: Graph,
    w: Vec<f64>,
    nu: f64,
}

/// Metropolis–Hastings weights `W_ij = 1/(1 + max(deg_i, deg_j))`.
pub fn metropolis_weights(graph: &Graph) -> Result<ConsensusMatrix> {
    if !graph.is_connected() {
        return Err(Error::Disconnected);
    }
    let n = graph.n();
    let mut w = vec![0.0; n * n];
    for &(i, j) in graph.edges() {
        let v = 1.0 / (1.0 + graph.degree(i).max(graph.degree(j)) as f64);
        w[i * n + j] = v;
        w[j * n + i] = v;
    }
    for i in 0..n {
        let off: f64 = graph.neighbors(i).iter().map(|&j| w[i * n + j]).sum();
        w[i * n + i] = 1.0 - off;
    }
    ConsensusMatrix::new(graph.clone(), w)
}

/// Spectral radius of `W − 11ᵀ/n`.
pub fn deviation_spectral_radius(n: usize, w: &[f64]) -> Result<f64> {
    let inv = 1.0 / n as f64;
    let dev: Vec<f64> = w.iter().map(|v| v - inv).collect();
    let eig = sym_eig_slice(n, &dev)?;
    Ok(eig.eigenvalues.iter().fold(0.0f64, |m, l| m.max(l.abs())))
}

impl ConsensusMatrix {
    /// Validates the weight conditions and certifies `ν`.
    pub fn new(graph: Graph, w: Vec<f64>) -> Result<Self> {
        let m = Self::unchecked(graph, w)?;
        m.check_conditions()?;
        Ok(m)
    }

    /// Wraps weights without validating them; `ν` is still computed.
    pub fn unchecked(graph: Graph, w: Vec<f64>) -> Result<Self> {
        let n = graph.n();
        if w.len() != n * n {
            return Err(Error::Dimension {
                expected: n * n,
                got: w.len(),
            });
        }
        let nu = deviation_spectral_radius(n, &w)?;
        Ok(ConsensusMatrix { graph, w, nu })
    }

    /// Exact averaging `W = 11ᵀ/n` on the complete graph (`ν = 0`).
    pub fn exact_average(n: usize) -> Self {
        let w = vec![1.0 / n as f64; n * n];
        ConsensusMatrix {
            graph: Graph::complete(n),
            w,
            nu: 0.0,
        }
    }

    /// Sparsity pattern, symmetry, unit row sums, nonnegativity, `ν < 1`.
    pub fn check_conditions(&self) -> Result<()> {
        const TOL: f64 = 1e-12;
        let n = self.n();
        for i in 0..n {
            let mut row = 0.0;
            for j in 0..n {
                let v = self.weight(i, j);
                row += v;
                if v < -TOL {
                    return Err(Error::ConsensusConditions(format!("W[{i}][{j}] = {v} is negative")));
                }
                if (v - self.weight(j, i)).abs() > TOL {
                    return Err(Error::ConsensusConditions(format!("W[{i}][{j}] != W[{j}][{i}]")));
                }
                if i != j && v != 0.0 && self.graph.neighbors(i).binary_search(&j).is_err() {
                    return Err(Error::ConsensusConditions(format!(
                        "W[{i}][{j}] = {v} but ({i}, {j}) is not an edge"
                    )));
                }
            }
            if (row - 1.0).abs() > TOL {
                return Err(Error::ConsensusConditions(format!("row {i} sums to {row}")));
            }
        }
        if self.nu >= 1.0 {
            return Err(Error::ConsensusConditions(format!("ν = {} is not below 1", self.nu)));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    #[inline]
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.w[i * self.n() + j]
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    /// Returns a copy with every weight multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::unchecked(self.graph.clone(), self.w.iter().map(|v| v * factor).collect())
    }

    /// One synchronous exchange: every node sends its payload to each
    /// neighbour, then replaces it with the weighted combination.
    fn mix_once(&self, payloads: &[Vec<f64>]) -> Vec<Vec<f64>> {
        (0..self.n())
            .map(|i| {
                let mut out: Vec<f64> = payloads[i].iter().map(|v| self.weight(i, i) * v).collect();
                for &j in self.graph.neighbors(i) {
                    let wij = self.weight(i, j);
                    for (o, v) in out.iter_mut().zip(&payloads[j]) {
                        *o += wij * v;
                    }
                }
                out
            })
            .collect()
    }

    /// Applies `v ← W v` to the stacked per-node payloads `phi` times,
    /// without message accounting.
    pub fn mix(&self, payloads: &[Vec<f64>], phi: usize) -> Vec<Vec<f64>> {
        let mut cur = payloads.to_vec();
        for _ in 0..phi {
            cur = self.mix_once(&cur);
        }
        cur
    }
}

/// Count of payload transmissions.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MessageLedger {
    pub total_messages: u64,
    pub per_iteration: Vec<u64>,
}

impl MessageLedger {
    pub fn record(&mut self, messages: u64) {
        self.total_messages += messages;
        self.per_iteration.push(messages);
    }
}

/// `phi` consensus steps over the network, charging `phi · 2|E|` messages.
pub fn consensus_round(
    w: &ConsensusMatrix,
    payloads: &[Vec<f64>],
    phi: usize,
    ledger: &mut MessageLedger,
) -> Result<Vec<Vec<f64>>> {
    if phi == 0 {
        return Err(Error::Config("phi must be at least 1".into()));
    }
    if payloads.len() != w.n() {
        return Err(Error::Dimension {
            expected: w.n(),
            got: payloads.len(),
        });
    }
    let out = w.mix(payloads, phi);
    ledger.record(phi as u64 * w.graph().messages_per_step());
    Ok(out)
}

/// Consensus-step threshold above which the agreement results apply.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConsensusStepBound {
    /// `[log β₀ − log(4n(1+d²)(β₀+αM))] / log ν`
    pub phibar: f64,
    /// `log(1/(4n(1+d²))) / log ν`, the `β₀ ≫ αM` simplification.
    pub simplified: f64,
    /// True when `β₀/(αM) > 10³`, so `simplified` is an accurate stand-in.
    pub simplified_applies: bool,
}

pub fn min_consensus_steps(beta0: f64, alpha: f64, m: f64, n: usize, d: usize, nu: f64) -> Result<ConsensusStepBound> {
    if !(0.0..1.0).contains(&nu) {
        if nu >= 1.0 {
            return Err(Error::SpectralGap(nu));
        }
        return Err(Error::Config(format!("nu must be in [0, 1), got {nu}")));
    }
    if !(beta0 >= 0.0 && alpha > 0.0 && m >= 0.0) {
        return Err(Error::Config("beta0, alpha and M must be nonnegative (alpha positive)".into()));
    }
    let scale = 4.0 * n as f64 * (1.0 + (d * d) as f64);
    let ratio = beta0 / (alpha * m);
    if nu == 0.0 {
        return Ok(ConsensusStepBound {
            phibar: 0.0,
            simplified: 0.0,
            simplified_applies: ratio > 1e3,
        });
    }
    let log_nu = nu.ln();
    let phibar = (beta0.ln() - (scale * (beta0 + alpha * m)).ln()) / log_nu;
    let simplified = (1.0 / scale).ln() / log_nu;
    Ok(ConsensusStepBound {
        phibar,
        simplified,
        simplified_applies: ratio > 1e3,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_node_graph_is_single_edge() {
        let g = random_connected_graph(2, 1.0, 3).unwrap();
        assert_eq!(g.edges(), &[(0, 1)]);
    }

    #[test]
    fn graph_generation_is_deterministic() {
        let a = random_connected_graph(100, 3.12, 11).unwrap();
        let b = random_connected_graph(100, 3.12, 11).unwrap();
        assert_eq!(a, b);
        assert!(a.is_connected());
    }

    #[test]
    fn impossible_connectivity_errors() {
        let err = random_connected_graph(200, 0.05, 1).unwrap_err();
        assert!(matches!(err, Error::ConnectivityAttempts { .. }));
    }

    #[test]
    fn graph_rejects_self_loops_and_dedups() {
        assert!(Graph::new(3, [(1, 1)]).is_err());
        assert!(Graph::new(3, [(0, 3)]).is_err());
        let g = Graph::new(3, [(1, 0), (0, 1), (2, 1)]).unwrap();
        assert_eq!(g.edges(), &[(0, 1), (1, 2)]);
        assert_eq!(g.neighbors(1), &[0, 2]);
    }

    #[test]
    fn metropolis_two_node_path() {
        let w = metropolis_weights(&Graph::path(2)).unwrap();
        assert_eq!(w.weights(), &[0.5, 0.5, 0.5, 0.5]);
        assert!(w.nu().abs() < 1e-15);
    }

    #[test]
    fn metropolis_three_node_path() {
        let w = metropolis_weights(&Graph::path(3)).unwrap();
        let third = 1.0 / 3.0;
        assert_eq!(w.weight(0, 1), third);
        assert_eq!(w.weight(1, 2), third);
        assert!((w.weight(0, 0) - 2.0 * third).abs() < 1e-15);
        assert!((w.weight(1, 1) - third).abs() < 1e-15);
        // spectrum {1, 2/3, 0}: (1,0,−1) ↦ 2/3 (1,0,−1), (1,−2,1) ↦ 0
        assert!((w.nu() - 2.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn metropolis_rejects_disconnected() {
        let g = Graph::new(4, [(0, 1), (2, 3)]).unwrap();
        assert!(matches!(metropolis_weights(&g), Err(Error::Disconnected)));
    }

    #[test]
    fn corrupted_weights_fail_conditions() {
        let w = metropolis_weights(&Graph::path(4)).unwrap();
        let bad = w.scaled(1.1).unwrap();
        assert!(matches!(bad.check_conditions(), Err(Error::ConsensusConditions(_))));
    }

    #[test]
    fn exact_averaging_in_one_step() {
        let w = metropolis_weights(&Graph::path(2)).unwrap();
        let mut ledger = MessageLedger::default();
        let out = consensus_round(&w, &[vec![0.0], vec![2.0]], 1, &mut ledger).unwrap();
        assert_eq!(out, vec![vec![1.0], vec![1.0]]);
        assert_eq!(ledger.total_messages, 2);
    }

    #[test]
    fn identical_payloads_are_fixed() {
        let g = random_connected_graph(30, 4.0, 5).unwrap();
        let w = metropolis_weights(&g).unwrap();
        let payloads = vec![vec![0.25, -3.0]; 30];
        let mut ledger = MessageLedger::default();
        let out = consensus_round(&w, &payloads, 7, &mut ledger).unwrap();
        for p in out {
            assert!((p[0] - 0.25).abs() < 1e-14 && (p[1] + 3.0).abs() < 1e-14);
        }
        assert_eq!(ledger.total_messages, 7 * g.messages_per_step());
        assert_eq!(ledger.per_iteration, vec![7 * g.messages_per_step()]);
    }

    #[test]
    fn phibar_formula_examples() {
        let b = min_consensus_steps(1e9, 1.0, 1.0, 100, 0, 0.9).unwrap();
        assert!(b.simplified_applies);
        let expect = (1.0f64 / 400.0).ln() / 0.9f64.ln();
        assert!((b.simplified - expect).abs() < 1e-12);
        assert!((b.simplified - 56.87).abs() < 0.01);
        assert!((b.phibar - b.simplified).abs() < 1e-6);

        let b2 = min_consensus_steps(1e9, 1.0, 1.0, 200, 0, 0.9).unwrap();
        assert!((b2.simplified - b.simplified - 2f64.ln() / 0.9f64.ln().abs()).abs() < 1e-12);

        let tiny = min_consensus_steps(5.0, 1.0, 1.0, 10, 1, 1e-12).unwrap();
        assert!(tiny.phibar > 0.0 && tiny.phibar < 0.2);
        assert!(!tiny.simplified_applies);
        assert!(matches!(min_consensus_steps(1.0, 1.0, 1.0, 10, 0, 1.0), Err(Error::SpectralGap(_))));
    }
}
