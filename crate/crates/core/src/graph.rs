//! Weighted undirected networks and the random-walk operator `W = D^-1 A`.

use std::collections::{HashSet, VecDeque};
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Weighted undirected graph with optional self-loops.
///
/// Built from an edge list so the weight matrix is symmetric by
/// construction. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    weights: Matrix,
    degrees: Vec<f64>,
    walk: Matrix,
}

/// Outcome of the structural checks the convergence theory relies on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub connected: bool,
    pub bipartite: bool,
    pub min_degree: f64,
    pub ok: bool,
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "connected={}, bipartite={}, min_degree={}",
            self.connected, self.bipartite, self.min_degree
        )
    }
}

impl Graph {
    /// Builds a graph on `n` agents from `(i, j, weight)` triples with
    /// **1-based** indices, as in graph files. `(i, j)` with `i != j` sets
    /// both `a_ij` and `a_ji`; `(i, i)` sets a self-loop.
    pub fn build(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyGraph);
        }
        let mut weights = Matrix::zeros(n);
        let mut seen = HashSet::with_capacity(edges.len());
        for &(i, j, w) in edges {
            for idx in [i, j] {
                if idx == 0 || idx > n {
                    return Err(Error::IndexOutOfRange { index: idx, n });
                }
            }
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::NonPositiveWeight { i, j, weight: w });
            }
            let key = (i.min(j), i.max(j));
            if !seen.insert(key) {
                return Err(Error::DuplicateEdge { i: key.0, j: key.1 });
            }
            weights.set(i - 1, j - 1, w);
            weights.set(j - 1, i - 1, w);
        }
        Ok(Self::from_weights(weights))
    }

    fn from_weights(weights: Matrix) -> Self {
        let n = weights.dim();
        let degrees: Vec<f64> = (0..n).map(|i| weights.row(i).iter().sum()).collect();
        let mut walk = Matrix::zeros(n);
        for i in 0..n {
            if degrees[i] > 0.0 {
                for j in 0..n {
                    walk.set(i, j, weights.get(i, j) / degrees[i]);
                }
            }
        }
        Self {
            weights,
            degrees,
            walk,
        }
    }

    /// Complete graph with unit weights, optionally with unit self-loops.
    pub fn complete(n: usize, self_loops: bool) -> Result<Self> {
        let mut edges = Vec::new();
        for i in 1..=n {
            for j in i..=n {
                if i != j || self_loops {
                    edges.push((i, j, 1.0));
                }
            }
        }
        Self::build(n, &edges)
    }

    /// Two-agent community network with in-community proportions `p1`, `p2`.
    ///
    /// Degrees are `(1 - p2, 1 - p1)` so that `A = D W` is symmetric: the
    /// cross edge weighs `(1-p1)(1-p2)` and the self-loops `p1 (1-p2)` and
    /// `p2 (1-p1)`. Requires `p1, p2 < 1` so that the agents are linked.
    pub fn community(p1: f64, p2: f64) -> Result<Self> {
        for (what, p) in [("p1", p1), ("p2", p2)] {
            if !(0.0..1.0).contains(&p) {
                return Err(Error::InvalidArgument(format!(
                    "{what} = {p} must lie in [0, 1) for a connected community network"
                )));
            }
        }
        let mut edges = vec![(1, 2, (1.0 - p1) * (1.0 - p2))];
        if p1 > 0.0 {
            edges.push((1, 1, p1 * (1.0 - p2)));
        }
        if p2 > 0.0 {
            edges.push((2, 2, p2 * (1.0 - p1)));
        }
        Self::build(2, &edges)
    }

    /// Random connected, non-bipartite graph: a random spanning tree, a
    /// triangle on agents 0,1,2 (or a self-loop when `n < 3`), then extra
    /// edges with probability `density`. Weights uniform in `weight_range`.
    pub fn random_connected<R: Rng + ?Sized>(
        n: usize,
        density: f64,
        weight_range: (f64, f64),
        rng: &mut R,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyGraph);
        }
        let (lo, hi) = weight_range;
        let draw = |rng: &mut R| lo + (hi - lo) * rng.random::<f64>();
        let mut present = HashSet::new();
        let mut edges = Vec::new();
        let mut add = |i: usize, j: usize, w: f64, edges: &mut Vec<(usize, usize, f64)>| {
            let key = (i.min(j), i.max(j));
            if present.insert(key) {
                edges.push((key.0 + 1, key.1 + 1, w));
            }
        };
        for v in 1..n {
            let parent = rng.random_range(0..v);
            let w = draw(rng);
            add(parent, v, w, &mut edges);
        }
        if n >= 3 {
            for (i, j) in [(0, 1), (1, 2), (0, 2)] {
                let w = draw(rng);
                add(i, j, w, &mut edges);
            }
        } else {
            let w = draw(rng);
            add(0, 0, w, &mut edges);
        }
        for i in 0..n {
            for j in i..n {
                if rng.random::<f64>() < density {
                    let w = draw(rng);
                    add(i, j, w, &mut edges);
                }
            }
        }
        Self::build(n, &edges)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.degrees.len()
    }

    /// Weighted adjacency matrix `A`.
    pub fn weights(&self) -> &Matrix {
        &self.weights
    }

    #[inline]
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights.get(i, j)
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    #[inline]
    pub fn degree(&self, i: usize) -> f64 {
        self.degrees[i]
    }

    /// Sum of all entries of `A`.
    pub fn total_weight(&self) -> f64 {
        self.degrees.iter().sum()
    }

    pub fn has_self_loop(&self) -> bool {
        (0..self.n()).any(|i| self.weights.get(i, i) > 0.0)
    }

    /// Edge list with 1-based indices, `i <= j`.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for i in 0..self.n() {
            for j in i..self.n() {
                let w = self.weights.get(i, j);
                if w > 0.0 {
                    out.push((i + 1, j + 1, w));
                }
            }
        }
        out
    }

    /// Row-stochastic `W = D^-1 A`. Fails on the first isolated agent.
    pub fn normalized_adjacency(&self) -> Result<&Matrix> {
        self.check_degrees()?;
        Ok(&self.walk)
    }

    /// `W` without the degree check; isolated agents have zero rows.
    #[inline]
    pub(crate) fn walk(&self) -> &Matrix {
        &self.walk
    }

    /// `(A x)_i / deg_i`, summed in the same order as the degrees so that
    /// constant vectors map to themselves exactly. Zero for isolated agents.
    pub(crate) fn average(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n())
            .map(|i| {
                let d = self.degrees[i];
                if d > 0.0 {
                    let s: f64 = self.weights.row(i).iter().zip(x).map(|(a, v)| a * v).sum();
                    s / d
                } else {
                    0.0
                }
            })
            .collect()
    }

    fn check_degrees(&self) -> Result<()> {
        match self.degrees.iter().position(|&d| !(d > 0.0)) {
            Some(i) => Err(Error::IsolatedAgent(i + 1)),
            None => Ok(()),
        }
    }

    pub fn validate(&self) -> ValidationReport {
        let n = self.n();
        let min_degree = self.degrees.iter().copied().fold(f64::INFINITY, f64::min);
        let mut color: Vec<Option<bool>> = vec![None; n];
        let mut components = 0;
        let mut two_colorable = !self.has_self_loop();
        for root in 0..n {
            if color[root].is_some() {
                continue;
            }
            components += 1;
            color[root] = Some(false);
            let mut queue = VecDeque::from([root]);
            while let Some(u) = queue.pop_front() {
                let cu = color[u].unwrap();
                for v in 0..n {
                    if v == u || !(self.weights.get(u, v) > 0.0) {
                        continue;
                    }
                    match color[v] {
                        None => {
                            color[v] = Some(!cu);
                            queue.push_back(v);
                        }
                        Some(cv) if cv == cu => two_colorable = false,
                        _ => {}
                    }
                }
            }
        }
        let connected = components == 1;
        let bipartite = two_colorable;
        ValidationReport {
            connected,
            bipartite,
            min_degree,
            ok: connected && !bipartite && min_degree > 0.0,
        }
    }

    /// Errors on isolated agents always, and on any other validation
    /// failure unless `allow_invalid`.
    pub fn require_valid(&self, allow_invalid: bool) -> Result<ValidationReport> {
        self.check_degrees()?;
        let report = self.validate();
        if !report.ok && !allow_invalid {
            return Err(Error::InvalidGraph(report));
        }
        Ok(report)
    }

    /// `mu = W x` for `x` in the unit cube; exact on constant vectors.
    pub fn neighborhood_average(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n(), x.len())?;
        check_unit_cube("x", x)?;
        self.check_degrees()?;
        Ok(self.average(x))
    }
}

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

pub(crate) fn check_unit_cube(what: &'static str, x: &[f64]) -> Result<()> {
    match x.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        Some(&value) => Err(Error::OutOfUnitInterval { what, value }),
        None => Ok(()),
    }
}
