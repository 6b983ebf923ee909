//! The redundancy lattice and Moebius inversion.
//!
//! Redundancies are cumulative: the redundancy of an antichain contains
//! every redundancy below it. The decomposition atoms are the increments,
//! recovered by inverting
//!
//! ```text
//!     I_cap(alpha) = sum over beta below alpha of pi(beta)
//! ```
//!
//! which the partial order turns into a Moebius inversion. At n <= 4 the
//! inversion is done by plain recursion over a topological order rather
//! than precomputed Moebius tables.

use std::collections::BTreeMap;

use crate::antichain::{below, enumerate_antichains, Antichain};
use crate::error::{Error, Result};

/// All antichains for a fixed source count, with the PID partial order.
#[derive(Debug, Clone)]
pub struct RedundancyLattice {
    n: usize,
    nodes: Vec<Antichain>,
    /// `order[i][j]` is true iff `nodes[i]` is below (or equal to) `nodes[j]`.
    order: Vec<Vec<bool>>,
    /// Indices into `nodes`, linearly extended from bottom to top.
    topo: Vec<usize>,
}

impl RedundancyLattice {
    pub fn new(n: usize) -> Result<Self> {
        let nodes = enumerate_antichains(n)?;
        let count = nodes.len();
        let mut order = vec![vec![false; count]; count];
        for i in 0..count {
            for j in 0..count {
                order[i][j] = below(&nodes[i], &nodes[j])?;
            }
        }
        // Downset size strictly increases along the strict order, so sorting
        // by it (name as tie-break) is a linear extension.
        let mut topo: Vec<usize> = (0..count).collect();
        let downset_size: Vec<usize> =
            (0..count).map(|j| (0..count).filter(|&i| order[i][j]).count()).collect();
        topo.sort_by(|&a, &b| {
            downset_size[a]
                .cmp(&downset_size[b])
                .then_with(|| nodes[a].cmp(&nodes[b]))
        });
        Ok(RedundancyLattice { n, nodes, order, topo })
    }

    pub fn n_sources(&self) -> usize {
        self.n
    }

    pub fn nodes(&self) -> &[Antichain] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes from the bottom `{1}..{n}` to the top `{1,..,n}`.
    pub fn topo_order(&self) -> impl Iterator<Item = &Antichain> {
        self.topo.iter().map(|&i| &self.nodes[i])
    }

    pub fn bottom(&self) -> &Antichain {
        &self.nodes[self.topo[0]]
    }

    pub fn top(&self) -> &Antichain {
        &self.nodes[*self.topo.last().expect("lattice is never empty")]
    }

    fn index_of(&self, alpha: &Antichain) -> Result<usize> {
        self.nodes
            .iter()
            .position(|node| node == alpha)
            .ok_or_else(|| Error::IncompleteLattice(alpha.to_string()))
    }

    /// Everything below `alpha`, including `alpha` itself.
    pub fn downset(&self, alpha: &Antichain) -> Result<Vec<&Antichain>> {
        let j = self.index_of(alpha)?;
        Ok((0..self.len())
            .filter(|&i| self.order[i][j])
            .map(|i| &self.nodes[i])
            .collect())
    }

    /// Cover relations of the Hasse diagram as `(lower, upper)` index pairs
    /// into `nodes()`.
    pub fn cover_edges(&self) -> Vec<(usize, usize)> {
        let count = self.len();
        let mut edges = Vec::new();
        for i in 0..count {
            for j in 0..count {
                if i == j || !self.order[i][j] {
                    continue;
                }
                let covered = (0..count).all(|m| {
                    m == i || m == j || !(self.order[i][m] && self.order[m][j])
                });
                if covered {
                    edges.push((i, j));
                }
            }
        }
        edges
    }

    /// Inverts redundancies into atoms: in topological order from the bottom,
    ///
    /// ```text
    ///     pi(alpha) = i_cap(alpha) - sum over beta strictly below of pi(beta)
    /// ```
    ///
    /// Requires a value for every lattice node.
    pub fn moebius_invert(
        &self,
        i_cap: &BTreeMap<Antichain, f64>,
    ) -> Result<BTreeMap<Antichain, f64>> {
        let mut pi_by_index: Vec<f64> = vec![0.0; self.len()];
        for &j in &self.topo {
            let node = &self.nodes[j];
            let value = *i_cap
                .get(node)
                .ok_or_else(|| Error::IncompleteLattice(node.to_string()))?;
            let below_sum: f64 = (0..self.len())
                .filter(|&i| i != j && self.order[i][j])
                .map(|i| pi_by_index[i])
                .sum();
            pi_by_index[j] = value - below_sum;
        }
        Ok(self
            .nodes
            .iter()
            .cloned()
            .zip(pi_by_index)
            .collect())
    }

    /// Re-sums atoms over downsets; the inverse of `moebius_invert`.
    pub fn resum(&self, pi: &BTreeMap<Antichain, f64>) -> Result<BTreeMap<Antichain, f64>> {
        let mut result = BTreeMap::new();
        for (j, node) in self.nodes.iter().enumerate() {
            let mut total = 0.0;
            for i in 0..self.len() {
                if self.order[i][j] {
                    let beta = &self.nodes[i];
                    total += *pi
                        .get(beta)
                        .ok_or_else(|| Error::IncompleteLattice(beta.to_string()))?;
                }
            }
            result.insert(node.clone(), total);
        }
        Ok(result)
    }
}
