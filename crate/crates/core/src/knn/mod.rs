//! Nearest-neighbor estimator for the continuous shared-exclusion
//! redundancy.
//!
//! For an antichain `alpha`, the search region around a sample is the union
//! over collections `a` of boxes that constrain the target block and the
//! sources in `a` while leaving the remaining sources free. The induced
//! distance from sample `i` to sample `j` is
//!
//! ```text
//!     max( d_T , min over a of max over sources in a of d_{S_j} )
//! ```
//!
//! with max-norm block distances, which equals the smallest max-norm
//! distance among the joint subspaces `(T, S_a)`. The kth such distance
//! fixes a per-sample radius; counting samples strictly inside the marginal
//! union and the target ball then yields
//!
//! ```text
//!     psi(k) + psi(N) - <psi(n_alpha)> - <psi(n_T)>     (nats; /ln 2 for bits)
//! ```
//!
//! Counts include the query sample itself, so the minimum count is one and
//! psi is always defined. Note this differs from the classical estimator
//! convention of writing `psi(n + 1)` over counts that exclude the query;
//! both describe the same number.
//!
//! Exact duplicate points can produce a zero radius. The estimate then falls
//! back to counting exact duplicates and reports the affected sample count
//! as a warning instead of silently jittering the data; opt-in jitter lives
//! in the preprocessing module.

mod kdtree;

use rayon::prelude::*;

use crate::antichain::Antichain;
use crate::decomposition::{Method, PidDecomposition, RunMetadata};
use crate::digamma::DigammaTable;
use crate::error::{Error, Result};
use crate::lattice::RedundancyLattice;
use crate::numeric::KahanSum;
use crate::sample::SampleSet;
use kdtree::KdTree;

/// Per-sample kth-neighbor distances for one antichain.
#[derive(Debug, Clone)]
pub struct EpsilonProfile {
    pub eps: Vec<f64>,
    /// Samples whose kth neighbor sits at distance zero (exact duplicates).
    pub degenerate: usize,
}

/// One redundancy estimate plus degeneracy bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RedundancyEstimate {
    pub bits: f64,
    pub degenerate_points: usize,
}

fn subspace_columns<'a>(
    samples: &'a SampleSet,
    set: &[u8],
    with_target: bool,
) -> Vec<&'a [f64]> {
    let mut cols = Vec::new();
    if with_target {
        cols.extend(samples.target_block());
    }
    for &source in set {
        cols.extend(samples.source_block(source as usize - 1));
    }
    cols
}

fn block_distance(samples: &SampleSet, cols: &[usize], i: usize, j: usize) -> f64 {
    cols.iter()
        .map(|&c| {
            let col = samples.column(c);
            (col[i] - col[j]).abs()
        })
        .fold(0.0f64, f64::max)
}

/// Distance from sample `i` to sample `j` in the search region shaped by
/// `alpha`: the smallest radius at which `j` enters the region around `i`.
pub fn region_distance(samples: &SampleSet, i: usize, j: usize, alpha: &Antichain) -> f64 {
    let d_target = block_distance(samples, samples.target_cols(), i, j);
    let d_sources = alpha
        .sets()
        .iter()
        .map(|set| {
            set.iter()
                .map(|&s| {
                    block_distance(samples, samples.source_cols(s as usize - 1), i, j)
                })
                .fold(0.0f64, f64::max)
        })
        .fold(f64::INFINITY, f64::min);
    d_target.max(d_sources)
}

fn check_layout(samples: &SampleSet, alpha: &Antichain) -> Result<()> {
    if alpha.n_sources() != samples.n_sources() {
        return Err(Error::MismatchedSources(
            alpha.n_sources(),
            samples.n_sources(),
        ));
    }
    Ok(())
}

/// kth-nearest region distances for every sample.
///
/// Queries the k nearest neighbors in each joint subspace `(T, S_a)`, merges
/// the candidate lists, evaluates the exact region distance for each
/// candidate and takes the kth smallest; equal to the direct definition on
/// all pairs.
pub fn compute_epsilons(
    samples: &SampleSet,
    alpha: &Antichain,
    k: usize,
) -> Result<EpsilonProfile> {
    check_layout(samples, alpha)?;
    let n = samples.n_samples();
    if k == 0 || n < k + 1 {
        return Err(Error::InsufficientSamples {
            needed: k + 1,
            got: n,
        });
    }
    let trees: Vec<KdTree> = alpha
        .sets()
        .iter()
        .map(|set| KdTree::build(&subspace_columns(samples, set, true)))
        .collect();
    let eps: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut candidates: Vec<(f64, u32)> = Vec::with_capacity(k * trees.len());
            for tree in &trees {
                candidates.extend(tree.k_nearest(i as u32, k));
            }
            candidates.sort_unstable_by_key(|&(_, j)| j);
            candidates.dedup_by_key(|&mut (_, j)| j);
            for entry in candidates.iter_mut() {
                entry.0 = trees
                    .iter()
                    .map(|tree| tree.dist(i as u32, entry.1))
                    .fold(f64::INFINITY, f64::min);
            }
            let kth = k - 1;
            candidates
                .select_nth_unstable_by(kth, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            candidates[kth].0
        })
        .collect();
    let degenerate = eps.iter().filter(|&&e| e == 0.0).count();
    Ok(EpsilonProfile { eps, degenerate })
}

/// Counts samples inside the union of marginal source balls, strictly
/// within `eps[i]`, the query sample included. A zero radius counts exact
/// duplicates instead.
pub fn count_marginal(
    samples: &SampleSet,
    alpha: &Antichain,
    eps: &EpsilonProfile,
) -> Result<Vec<u32>> {
    check_layout(samples, alpha)?;
    let n = samples.n_samples();
    let trees: Vec<KdTree> = alpha
        .sets()
        .iter()
        .map(|set| KdTree::build(&subspace_columns(samples, set, false)))
        .collect();
    let counts: Vec<u32> = if trees.len() == 1 {
        (0..n)
            .into_par_iter()
            .map(|i| trees[0].count_within(i as u32, eps.eps[i], eps.eps[i] == 0.0) as u32)
            .collect()
    } else {
        (0..n)
            .into_par_iter()
            .map_init(
                || vec![u32::MAX; n],
                |stamp, i| {
                    let radius = eps.eps[i];
                    let include_equal = radius == 0.0;
                    let mark = i as u32;
                    let mut count = 0u32;
                    for tree in &trees {
                        tree.visit_within(i as u32, radius, include_equal, &mut |p| {
                            if stamp[p as usize] != mark {
                                stamp[p as usize] = mark;
                                count += 1;
                            }
                        });
                    }
                    count
                },
            )
            .collect()
    };
    Ok(counts)
}

/// Counts samples strictly within `eps[i]` in the target block, the query
/// sample included; zero radii count exact duplicates.
pub fn count_target(samples: &SampleSet, eps: &EpsilonProfile) -> Vec<u32> {
    let cols = samples.target_block();
    let tree = KdTree::build(&cols);
    (0..samples.n_samples())
        .into_par_iter()
        .map(|i| tree.count_within(i as u32, eps.eps[i], eps.eps[i] == 0.0) as u32)
        .collect()
}

/// Combines count vectors into the redundancy estimate, in bits.
fn combine(
    k: usize,
    n: usize,
    n_alpha: &[u32],
    n_target: &[u32],
    table: &DigammaTable,
) -> f64 {
    let mut alpha_sum = KahanSum::default();
    let mut target_sum = KahanSum::default();
    for (&a, &t) in n_alpha.iter().zip(n_target) {
        alpha_sum.add(table.get(a as usize));
        target_sum.add(table.get(t as usize));
    }
    let n_f = n as f64;
    (table.get(k) + table.get(n) - alpha_sum.value() / n_f - target_sum.value() / n_f)
        / std::f64::consts::LN_2
}

/// Estimates the redundancy of `alpha` from samples with parameter `k`.
pub fn estimate_redundancy(
    samples: &SampleSet,
    alpha: &Antichain,
    k: usize,
) -> Result<RedundancyEstimate> {
    let eps = compute_epsilons(samples, alpha, k)?;
    let n_alpha = count_marginal(samples, alpha, &eps)?;
    let n_target = count_target(samples, &eps);
    let table = DigammaTable::new(samples.n_samples());
    Ok(RedundancyEstimate {
        bits: combine(k, samples.n_samples(), &n_alpha, &n_target, &table),
        degenerate_points: eps.degenerate,
    })
}

/// Estimates the full decomposition: every lattice node via
/// `estimate_redundancy`, atoms via Moebius inversion.
pub fn estimate_pid(samples: &SampleSet, k: usize) -> Result<PidDecomposition> {
    let n_sources = samples.n_sources();
    if !(2..=4).contains(&n_sources) {
        return Err(Error::UnsupportedOrder(n_sources));
    }
    let lattice = RedundancyLattice::new(n_sources)?;
    let table = DigammaTable::new(samples.n_samples());
    let mut i_cap = std::collections::BTreeMap::new();
    let mut degenerate_total = 0usize;
    for alpha in lattice.nodes() {
        let eps = compute_epsilons(samples, alpha, k)?;
        let n_alpha = count_marginal(samples, alpha, &eps)?;
        let n_target = count_target(samples, &eps);
        degenerate_total += eps.degenerate;
        i_cap.insert(
            alpha.clone(),
            combine(k, samples.n_samples(), &n_alpha, &n_target, &table),
        );
    }
    let mut metadata = RunMetadata::new(Method::KnnEstimator);
    metadata.k = Some(k as u32);
    metadata.n_samples = Some(samples.n_samples() as u64);
    if degenerate_total > 0 {
        metadata.warning = Some(format!(
            "degenerate geometry: {degenerate_total} zero kth-neighbor distances across lattice \
             nodes; affected counts fall back to exact duplicates"
        ));
    }
    PidDecomposition::from_redundancies(n_sources, &i_cap, metadata)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set_2_sources(s1: &[f64], s2: &[f64], t: &[f64]) -> SampleSet {
        SampleSet::new(
            vec![t.to_vec(), s1.to_vec(), s2.to_vec()],
            vec![0],
            vec![vec![1], vec![2]],
        )
        .unwrap()
    }

    #[test]
    fn region_distance_hand_cases() {
        let samples = set_2_sources(&[0.0, 1.0], &[0.0, 5.0], &[0.0, 0.0]);
        let red = Antichain::parse("{1}{2}", 2).unwrap();
        let top = Antichain::parse("{1,2}", 2).unwrap();
        // query (t,s1,s2)=(0,0,0), other=(0,1,5): max(0, min(1,5)) = 1
        assert_eq!(region_distance(&samples, 0, 1, &red), 1.0);
        // conjunction: plain max-norm over all blocks
        assert_eq!(region_distance(&samples, 0, 1, &top), 5.0);

        let samples = set_2_sources(&[0.0, 1.0], &[0.0, 5.0], &[0.0, 2.0]);
        // query=(0,0,0), other=(2,1,5): max(2, min(1,5)) = 2
        assert_eq!(region_distance(&samples, 0, 1, &red), 2.0);
    }

    #[test]
    fn epsilons_single_source_line() {
        // 1 source, 1D: points (s,t) = (0,0),(1,0),(3,0), k=1.
        let samples = SampleSet::new(
            vec![vec![0.0, 0.0, 0.0], vec![0.0, 1.0, 3.0]],
            vec![0],
            vec![vec![1]],
        )
        .unwrap();
        let alpha = Antichain::parse("{1}", 1).unwrap();
        let profile = compute_epsilons(&samples, &alpha, 1).unwrap();
        assert_eq!(profile.eps, vec![1.0, 1.0, 2.0]);
        assert_eq!(profile.degenerate, 0);
    }

    #[test]
    fn epsilons_two_source_cross_region() {
        // points (s1,s2,t): (0,0,0),(1,5,0),(5,1,0), k=1, alpha={1}{2}
        let samples = set_2_sources(&[0.0, 1.0, 5.0], &[0.0, 5.0, 1.0], &[0.0, 0.0, 0.0]);
        let alpha = Antichain::parse("{1}{2}", 2).unwrap();
        let profile = compute_epsilons(&samples, &alpha, 1).unwrap();
        assert_eq!(profile.eps[0], 1.0);
        // Marginal count at strict radius 1: only the query itself, since
        // both neighbors sit exactly at distance 1 in the union region.
        let counts = count_marginal(&samples, &alpha, &profile).unwrap();
        assert_eq!(counts[0], 1);
    }

    #[test]
    fn duplicated_dataset_degenerates() {
        let samples = set_2_sources(
            &[0.0, 0.0, 1.0, 1.0],
            &[0.5, 0.5, 2.0, 2.0],
            &[3.0, 3.0, 4.0, 4.0],
        );
        let alpha = Antichain::parse("{1}{2}", 2).unwrap();
        let profile = compute_epsilons(&samples, &alpha, 1).unwrap();
        assert_eq!(profile.eps, vec![0.0; 4]);
        assert_eq!(profile.degenerate, 4);
        // Counts fall back to exact duplicates, query included.
        let counts = count_marginal(&samples, &alpha, &profile).unwrap();
        assert_eq!(counts, vec![2, 2, 2, 2]);
        let targets = count_target(&samples, &profile);
        assert_eq!(targets, vec![2, 2, 2, 2]);
    }

    #[test]
    fn target_counts_hand_case() {
        // 1D targets (0, 0.5, 10), eps = 1 everywhere.
        let samples = SampleSet::new(
            vec![vec![0.0, 0.5, 10.0], vec![0.0, 1.0, 2.0]],
            vec![0],
            vec![vec![1]],
        )
        .unwrap();
        let profile = EpsilonProfile {
            eps: vec![1.0, 1.0, 1.0],
            degenerate: 0,
        };
        assert_eq!(count_target(&samples, &profile), vec![2, 2, 1]);
    }

    #[test]
    fn identical_source_points_count_everything() {
        let samples = set_2_sources(&[1.0; 5], &[2.0; 5], &[0.0, 1.0, 2.0, 3.0, 4.0]);
        let alpha = Antichain::parse("{1}{2}", 2).unwrap();
        let profile = EpsilonProfile {
            eps: vec![0.5; 5],
            degenerate: 0,
        };
        let counts = count_marginal(&samples, &alpha, &profile).unwrap();
        assert_eq!(counts, vec![5; 5]);
    }

    #[test]
    fn insufficient_samples_error() {
        let samples = set_2_sources(&[0.0, 1.0], &[0.0, 1.0], &[0.0, 1.0]);
        let alpha = Antichain::parse("{1}{2}", 2).unwrap();
        assert!(matches!(
            compute_epsilons(&samples, &alpha, 2),
            Err(Error::InsufficientSamples { .. })
        ));
        let wrong_n = Antichain::parse("{1}", 1).unwrap();
        assert!(matches!(
            compute_epsilons(&samples, &wrong_n, 1),
            Err(Error::MismatchedSources(..))
        ));
    }

    #[test]
    fn antichain_collection_order_is_irrelevant() {
        let samples = set_2_sources(
            &[0.1, 0.7, -0.3, 1.4, 0.9, -1.2],
            &[1.0, -0.4, 0.2, 0.8, -1.5, 0.3],
            &[0.5, 0.2, -0.9, 1.1, 0.0, -0.6],
        );
        let a = Antichain::new(2, [vec![1], vec![2]]).unwrap();
        let b = Antichain::new(2, [vec![2], vec![1]]).unwrap();
        let ra = estimate_redundancy(&samples, &a, 2).unwrap();
        let rb = estimate_redundancy(&samples, &b, 2).unwrap();
        assert_eq!(ra, rb);
    }
}
