//! Dual-consensus communication graph and its weighted Laplacian.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, Matrix};

/// Symmetric weighted graph with the Laplacian quantities the step rules use.
#[derive(Debug, Clone, PartialEq)]
pub struct CommGraph {
    weights: Matrix,
    laplacian: Matrix,
    degrees: Vec<f64>,
    max_degree: f64,
    op_norm: f64,
    neighbors: Vec<Vec<(usize, f64)>>,
}

impl CommGraph {
    /// Validates `weights` and derives `L`, `Δ`, `κ` and the neighbour lists.
    pub fn build(weights: Matrix) -> Result<Self> {
        let n = weights.rows();
        if n == 0 || weights.cols() != n {
            return Err(Error::Validation(
                "weight matrix must be square and nonempty".into(),
            ));
        }
        for i in 0..n {
            if weights[(i, i)] != 0.0 {
                return Err(Error::Validation(format!("nonzero diagonal weight at node {i}")));
            }
            for j in 0..n {
                let w = weights[(i, j)];
                if !w.is_finite() || w < 0.0 {
                    return Err(Error::Validation(format!(
                        "weight ({i},{j}) must be finite and nonnegative, got {w}"
                    )));
                }
                if (w - weights[(j, i)]).abs() > 1e-12 {
                    return Err(Error::Validation(format!(
                        "weights not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        let components = components(&weights);
        if components.len() > 1 {
            return Err(Error::Disconnected { components });
        }

        let neighbors: Vec<Vec<(usize, f64)>> = (0..n)
            .map(|i| {
                (0..n)
                    .filter(|&j| weights[(i, j)] > 0.0)
                    .map(|j| (j, weights[(i, j)]))
                    .collect()
            })
            .collect();
        let degrees: Vec<f64> = (0..n).map(|i| weights.row(i).iter().sum()).collect();
        let mut laplacian = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                laplacian[(i, j)] = if i == j { degrees[i] } else { -weights[(i, j)] };
            }
        }
        let max_degree = degrees.iter().copied().fold(0.0, f64::max);
        // L is symmetric PSD, so its spectral norm is its top eigenvalue
        let op_norm = match linalg::spectral_norm(&laplacian) {
            Ok(k) => k,
            Err(_) => 2.0 * max_degree,
        };
        Ok(CommGraph {
            weights,
            laplacian,
            degrees,
            max_degree,
            op_norm,
            neighbors,
        })
    }

    /// Graph on a single node.
    pub fn single() -> Self {
        Self::build(Matrix::zeros(1, 1)).expect("one node is connected")
    }

    /// Builds from an undirected weighted edge list.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut w = Matrix::zeros(n, n);
        for &(i, j, weight) in edges {
            if i >= n || j >= n || i == j {
                return Err(Error::Validation(format!("invalid edge ({i},{j}) for {n} nodes")));
            }
            w[(i, j)] = weight;
            w[(j, i)] = weight;
        }
        Self::build(w)
    }

    /// Unit-weight cycle `0-1-…-(n-1)-0`. Two nodes give a single edge.
    pub fn cycle(n: usize) -> Result<Self> {
        Self::cycle_with_chords(n, &[])
    }

    /// Unit-weight cycle plus extra unit chords (0-indexed endpoints).
    pub fn cycle_with_chords(n: usize, chords: &[(usize, usize)]) -> Result<Self> {
        let mut edges: Vec<(usize, usize, f64)> = Vec::new();
        if n >= 2 {
            for i in 0..n {
                let j = (i + 1) % n;
                if n == 2 && i == 1 {
                    break;
                }
                edges.push((i, j, 1.0));
            }
        }
        edges.extend(chords.iter().map(|&(i, j)| (i, j, 1.0)));
        Self::from_edges(n, &edges)
    }

    /// Unit-weight complete graph.
    pub fn complete(n: usize) -> Result<Self> {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                edges.push((i, j, 1.0));
            }
        }
        Self::from_edges(n, &edges)
    }

    pub fn num_nodes(&self) -> usize {
        self.weights.rows()
    }

    pub fn weights(&self) -> &Matrix {
        &self.weights
    }

    pub fn laplacian(&self) -> &Matrix {
        &self.laplacian
    }

    /// Weighted degrees `(W·1)_i`.
    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    /// `Δ = max_i (W·1)_i`.
    pub fn max_degree(&self) -> f64 {
        self.max_degree
    }

    /// `κ = ‖L‖`.
    pub fn op_norm(&self) -> f64 {
        self.op_norm
    }

    /// `(j, w_ij)` for every `j` with `w_ij > 0`, ascending in `j`.
    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.neighbors[i]
    }

    /// Undirected edges `(i, j, w)` with `i < j`.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for i in 0..self.num_nodes() {
            for &(j, w) in &self.neighbors[i] {
                if i < j {
                    out.push((i, j, w));
                }
            }
        }
        out
    }

    /// `((L ⊗ I_m) v)_i = Σ_j w_ij (v_i − v_j)` for the block of node `i`.
    ///
    /// `neighbor(j)` must return the `m`-block of node `j`. Every consumer of
    /// Laplacian rows (centralised or per-agent) goes through this routine, so
    /// both paths perform the same floating-point operations.
    pub fn laplacian_row<'a>(
        &self,
        i: usize,
        own: &[f64],
        neighbor: impl Fn(usize) -> &'a [f64],
        out: &mut [f64],
    ) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for &(j, w) in &self.neighbors[i] {
            let other = neighbor(j);
            for (k, o) in out.iter_mut().enumerate() {
                *o += w * (own[k] - other[k]);
            }
        }
    }

    /// `(L ⊗ I_m) v` without forming the Kronecker product.
    pub fn laplacian_apply(&self, stacked: &[f64], m: usize) -> Result<Vec<f64>> {
        check_dim("laplacian_apply", m * self.num_nodes(), stacked.len())?;
        let mut out = vec![0.0; stacked.len()];
        self.laplacian_apply_into(stacked, m, &mut out);
        Ok(out)
    }

    pub(crate) fn laplacian_apply_into(&self, stacked: &[f64], m: usize, out: &mut [f64]) {
        let block = |j: usize| &stacked[j * m..(j + 1) * m];
        for i in 0..self.num_nodes() {
            self.laplacian_row(i, block(i), block, &mut out[i * m..(i + 1) * m]);
        }
    }

    /// Dense `L ⊗ I_m`, for tests and small-scale certificates.
    pub fn kron_laplacian(&self, m: usize) -> Matrix {
        let n = self.num_nodes();
        let mut k = Matrix::zeros(n * m, n * m);
        for i in 0..n {
            for j in 0..n {
                for r in 0..m {
                    k[(i * m + r, j * m + r)] = self.laplacian[(i, j)];
                }
            }
        }
        k
    }
}

/// Connected components of the positive-weight edge set, via union-find.
fn components(weights: &Matrix) -> Vec<Vec<usize>> {
    let n = weights.rows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if weights[(i, j)] > 0.0 {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(i);
    }
    groups.into_values().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_node_graph() {
        let g = CommGraph::cycle(2).unwrap();
        assert_eq!(g.laplacian().to_rows(), vec![vec![1.0, -1.0], vec![-1.0, 1.0]]);
        assert_eq!(g.max_degree(), 1.0);
        assert!((g.op_norm() - 2.0).abs() < 1e-12);
        let out = g.laplacian_apply(&[3.0, 5.0, 1.0, 2.0], 2).unwrap();
        // blocks a = (3,5), b = (1,2): (a−b, b−a)
        assert_eq!(out, vec![2.0, 3.0, -2.0, -3.0]);
    }

    #[test]
    fn unit_three_cycle() {
        let g = CommGraph::cycle(3).unwrap();
        assert_eq!(g.max_degree(), 2.0);
        assert!((g.op_norm() - 3.0).abs() < 1e-10);
    }

    #[test]
    fn cournot_graph_max_degree() {
        // 20-cycle plus chords (2,15), (6,13) in 1-indexed labels
        let g = CommGraph::cycle_with_chords(20, &[(1, 14), (5, 12)]).unwrap();
        assert_eq!(g.max_degree(), 3.0);
        let k = g.op_norm();
        assert!(k >= 3.0 - 1e-9 && k <= 6.0 + 1e-9);
    }

    #[test]
    fn consensus_is_in_the_kernel() {
        let g = CommGraph::cycle_with_chords(7, &[(0, 3)]).unwrap();
        let block = [0.3, -1.5, 2.0];
        let stacked: Vec<f64> = (0..7).flat_map(|_| block).collect();
        assert!(g.laplacian_apply(&stacked, 3).unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn asymmetric_weights_rejected() {
        let w = Matrix::from_rows(&[vec![0.0, 1.0], vec![0.5, 0.0]]).unwrap();
        assert!(matches!(CommGraph::build(w), Err(Error::Validation(_))));
    }

    #[test]
    fn disconnected_graph_names_components() {
        let err = CommGraph::from_edges(4, &[(0, 1, 1.0), (2, 3, 2.0)]).unwrap_err();
        match err {
            Error::Disconnected { components } => {
                assert_eq!(components, vec![vec![0, 1], vec![2, 3]]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn single_node_is_trivially_connected() {
        let g = CommGraph::single();
        assert_eq!(g.op_norm(), 0.0);
        assert_eq!(g.max_degree(), 0.0);
        assert!(g.neighbors(0).is_empty());
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let g = CommGraph::cycle(3).unwrap();
        assert!(matches!(g.laplacian_apply(&[1.0; 5], 2), Err(Error::Dimension { .. })));
    }
}
