//! Weighted undirected interaction topology.
//!
//! Stored densely: agent counts are small and every protocol loop walks the
//! neighbour lists, which are precomputed once at construction.

use std::collections::{BTreeSet, VecDeque};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    /// Row-major `n * n` adjacency weights.
    weights: Vec<f64>,
    adjacency: Vec<Vec<(usize, f64)>>,
}

impl Graph {
    /// Builds a graph from an edge list of `(i, j, weight)` triples, 0-based.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGraph("agent count must be positive".into()));
        }
        let mut weights = vec![0.0; n * n];
        let mut seen = BTreeSet::new();
        for &(i, j, w) in edges {
            for idx in [i, j] {
                if idx >= n {
                    return Err(Error::IndexOutOfRange { index: idx, n });
                }
            }
            if i == j {
                return Err(Error::InvalidGraph(format!("self-loop at node {i}")));
            }
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::InvalidGraph(format!(
                    "edge ({i}, {j}) has non-positive weight {w}"
                )));
            }
            if !seen.insert((i.min(j), i.max(j))) {
                return Err(Error::InvalidGraph(format!("duplicate edge ({i}, {j})")));
            }
            weights[i * n + j] = w;
            weights[j * n + i] = w;
        }
        Ok(Self::from_weights(n, weights))
    }

    /// Builds a graph from a full square matrix, validating symmetry, zero
    /// diagonal and nonnegativity.
    pub fn from_matrix(matrix: &[Vec<f64>]) -> Result<Self> {
        let n = matrix.len();
        if n == 0 {
            return Err(Error::InvalidGraph("matrix is empty".into()));
        }
        let mut weights = Vec::with_capacity(n * n);
        for (i, row) in matrix.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidGraph(format!(
                    "row {i} has length {}, expected {n}",
                    row.len()
                )));
            }
            for (j, &w) in row.iter().enumerate() {
                if !(w >= 0.0) || !w.is_finite() {
                    return Err(Error::InvalidGraph(format!("entry ({i}, {j}) = {w} is negative")));
                }
                if i == j && w != 0.0 {
                    return Err(Error::InvalidGraph(format!("nonzero diagonal at ({i}, {i})")));
                }
                if matrix[j].get(i).is_some_and(|&wt| wt != w) {
                    return Err(Error::InvalidGraph(format!("matrix is not symmetric at ({i}, {j})")));
                }
                weights.push(w);
            }
        }
        Ok(Self::from_weights(n, weights))
    }

    fn from_weights(n: usize, weights: Vec<f64>) -> Self {
        let adjacency = (0..n)
            .map(|i| {
                (0..n)
                    .filter_map(|j| {
                        let w = weights[i * n + j];
                        (w > 0.0).then_some((j, w))
                    })
                    .collect()
            })
            .collect();
        Self { n, weights, adjacency }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.n + j]
    }

    pub fn matrix(&self) -> Vec<Vec<f64>> {
        self.weights.chunks(self.n).map(<[f64]>::to_vec).collect()
    }

    /// Unordered edges `(i, j, w)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        (0..self.n)
            .flat_map(|i| {
                self.adjacency[i]
                    .iter()
                    .filter(move |&&(j, _)| j > i)
                    .map(move |&(j, w)| (i, j, w))
            })
            .collect()
    }

    /// Neighbours of `i` with their weights, ascending by index.
    pub fn neighbors(&self, i: usize) -> Result<&[(usize, f64)]> {
        self.adjacency
            .get(i)
            .map(Vec::as_slice)
            .ok_or(Error::IndexOutOfRange { index: i, n: self.n })
    }

    pub(crate) fn adjacency(&self) -> &[Vec<(usize, f64)>] {
        &self.adjacency
    }

    pub fn is_connected(&self) -> bool {
        let mut visited = vec![false; self.n];
        let mut queue = VecDeque::from([0]);
        visited[0] = true;
        let mut count = 1;
        while let Some(i) = queue.pop_front() {
            for &(j, _) in &self.adjacency[i] {
                if !visited[j] {
                    visited[j] = true;
                    count += 1;
                    queue.push_back(j);
                }
            }
        }
        count == self.n
    }

    /// Smallest strictly positive edge weight (kappa in the bound formulas).
    pub fn min_positive_weight(&self) -> Result<f64> {
        self.weights
            .iter()
            .copied()
            .filter(|&w| w > 0.0)
            .min_by(f64::total_cmp)
            .ok_or(Error::NoEdges)
    }
}
