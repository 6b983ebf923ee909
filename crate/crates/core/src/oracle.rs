//! Monte-Carlo oracle for the continuous shared-exclusion redundancy.
//!
//! For a known Gaussian system the local redundancy of an antichain `alpha`
//! at a point is
//!
//! ```text
//!     log2[ sum over a in alpha of f(t, s_a)
//!           / ( f(t) * sum over a in alpha of f(s_a) ) ]
//! ```
//!
//! with all densities known in closed form. The global value is its
//! expectation under the joint, estimated here by plain Monte-Carlo
//! averaging over draws from the gate. Classical mutual information terms
//! (single-collection antichains) use the determinant formula instead, so a
//! full decomposition mixes exact and Monte-Carlo entries.
//!
//! Draws are generated in fixed sub-streams of `SAMPLE_CHUNK` rows and the
//! reduction runs in sub-stream order, so a result depends on the seed and
//! the draw count but never on the number of worker threads.

use rayon::prelude::*;

use crate::antichain::Antichain;
use crate::decomposition::{Method, PidDecomposition, RunMetadata};
use crate::error::{Error, Result};
use crate::gauss::{GateSpec, SAMPLE_CHUNK};
use crate::lattice::RedundancyLattice;
use crate::numeric::{log_sum_exp, KahanSum};
use crate::preprocess::PreprocessMode;

/// Densities entering the local redundancy of one antichain at one point:
/// the target marginal plus, per collection, the source-block marginal and
/// the joint with the target.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityPoint {
    pub target: f64,
    pub sources: Vec<f64>,
    pub joints: Vec<f64>,
}

impl DensityPoint {
    fn checked(&self) -> Result<()> {
        let all = std::iter::once(self.target)
            .chain(self.sources.iter().copied())
            .chain(self.joints.iter().copied());
        for value in all {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::UndefinedLocalValue(format!(
                    "density {value} is not strictly positive"
                )));
            }
        }
        if self.sources.len() != self.joints.len() || self.sources.is_empty() {
            return Err(Error::UndefinedLocalValue(
                "mismatched collection densities".into(),
            ));
        }
        Ok(())
    }

    fn perturbed(&self, direction: &DensityPoint, step: f64) -> DensityPoint {
        DensityPoint {
            target: self.target + step * direction.target,
            sources: self
                .sources
                .iter()
                .zip(&direction.sources)
                .map(|(f, g)| f + step * g)
                .collect(),
            joints: self
                .joints
                .iter()
                .zip(&direction.joints)
                .map(|(f, g)| f + step * g)
                .collect(),
        }
    }
}

/// Local shared-exclusion redundancy in bits at one density point.
pub fn local_redundancy(point: &DensityPoint) -> Result<f64> {
    point.checked()?;
    let joint_sum: f64 = point.joints.iter().sum();
    let source_sum: f64 = point.sources.iter().sum();
    Ok((joint_sum / (point.target * source_sum)).log2())
}

/// Directional derivative of the local redundancy with respect to the
/// underlying densities, both in analytic form and as a central finite
/// difference of step `step`. Both values are rates of bits per unit step.
///
/// The analytic form is derived in natural logs,
///
/// ```text
///     D = sum g_joint / sum f_joint - sum g_src / sum f_src - g_t / f_t ,
/// ```
///
/// and divided by ln 2 to match the log2-valued local redundancy that the
/// finite difference perturbs.
pub fn frechet_derivative(
    point: &DensityPoint,
    direction: &DensityPoint,
    step: f64,
) -> Result<(f64, f64)> {
    point.checked()?;
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::StepTooLarge);
    }
    let joint_sum: f64 = point.joints.iter().sum();
    let source_sum: f64 = point.sources.iter().sum();
    let g_joint: f64 = direction.joints.iter().sum();
    let g_source: f64 = direction.sources.iter().sum();
    let analytic = (g_joint / joint_sum - g_source / source_sum
        - direction.target / point.target)
        / std::f64::consts::LN_2;

    let forward = point.perturbed(direction, step);
    let backward = point.perturbed(direction, -step);
    for side in [&forward, &backward] {
        if side.checked().is_err() {
            return Err(Error::StepTooLarge);
        }
    }
    let difference =
        (local_redundancy(&forward)? - local_redundancy(&backward)?) / (2.0 * step);
    Ok((analytic, difference))
}

/// A Monte-Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub bits: f64,
    pub std_err: f64,
    pub n_samples: u64,
}

struct ChunkSums {
    sum: f64,
    sum_sq: f64,
}

/// Evaluates local redundancies for one antichain on gate draws.
struct LocalEvaluator {
    target: crate::gauss::GaussianBlock,
    sources: Vec<crate::gauss::GaussianBlock>,
    joints: Vec<crate::gauss::GaussianBlock>,
    /// Per-coordinate `(variance, coordinate)` for the copula Jacobian;
    /// empty when no copula transform is applied.
    copula_vars: Vec<f64>,
}

impl LocalEvaluator {
    fn new(gate: &GateSpec, alpha: &Antichain, copula: bool) -> Result<Self> {
        let target_coords = gate.target_coords();
        let mut sources = Vec::new();
        let mut joints = Vec::new();
        for set in alpha.sets() {
            let mut source_coords = Vec::new();
            for &s in set {
                source_coords.extend(gate.source_coords(s as usize));
            }
            let mut joint_coords = target_coords.clone();
            joint_coords.extend(&source_coords);
            sources.push(gate.density(&source_coords)?);
            joints.push(gate.density(&joint_coords)?);
        }
        let copula_vars = if copula {
            (0..gate.dim()).map(|i| gate.covariance()[(i, i)]).collect()
        } else {
            Vec::new()
        };
        Ok(LocalEvaluator {
            target: gate.density(&target_coords)?,
            sources,
            joints,
            copula_vars,
        })
    }

    /// Natural-log of the scalar marginal density at coordinate `i`, the
    /// Jacobian factor of the per-coordinate probability-integral transform.
    #[inline]
    fn log_jacobian(&self, row: &[f64], coords: &[usize]) -> f64 {
        let mut total = 0.0;
        for &c in coords {
            let var = self.copula_vars[c];
            total += -0.5 * (2.0 * std::f64::consts::PI * var).ln()
                - row[c] * row[c] / (2.0 * var);
        }
        total
    }

    /// Local redundancy in bits at one sample row.
    #[inline]
    fn local_bits(&self, row: &[f64]) -> f64 {
        let copula = !self.copula_vars.is_empty();
        let mut log_joints = Vec::with_capacity(self.joints.len());
        let mut log_sources = Vec::with_capacity(self.sources.len());
        for (joint, source) in self.joints.iter().zip(&self.sources) {
            let mut lj = joint.logpdf_row(row);
            let mut ls = source.logpdf_row(row);
            if copula {
                lj -= self.log_jacobian(row, joint.coords());
                ls -= self.log_jacobian(row, source.coords());
            }
            log_joints.push(lj);
            log_sources.push(ls);
        }
        let mut log_target = self.target.logpdf_row(row);
        if copula {
            log_target -= self.log_jacobian(row, self.target.coords());
        }
        (log_sum_exp(&log_joints) - log_target - log_sum_exp(&log_sources))
            / std::f64::consts::LN_2
    }
}

/// Monte-Carlo estimate of the redundancy of `alpha` for a known gate.
/// Deterministic given `(seed, n_samples)`; independent of thread count.
pub fn mc_redundancy(
    gate: &GateSpec,
    alpha: &Antichain,
    n_samples: u64,
    seed: u64,
    mode: PreprocessMode,
) -> Result<McEstimate> {
    if n_samples < 10_000 {
        return Err(Error::InsufficientSamples {
            needed: 10_000,
            got: n_samples as usize,
        });
    }
    if alpha.n_sources() != gate.n_sources() {
        return Err(Error::MismatchedSources(
            alpha.n_sources(),
            gate.n_sources(),
        ));
    }
    // Standardization is a linear change of variables; fold it into the
    // covariance and evaluate as the plain case.
    let gate = match mode {
        PreprocessMode::Standardize => gate.standardized()?,
        _ => gate.clone(),
    };
    let evaluator = LocalEvaluator::new(&gate, alpha, mode == PreprocessMode::Copula)?;
    let sampler = gate.sampler()?;
    let dim = gate.dim();

    let chunk_count = (n_samples as usize).div_ceil(SAMPLE_CHUNK);
    let chunks: Vec<ChunkSums> = (0..chunk_count)
        .into_par_iter()
        .map(|chunk| {
            let rows = SAMPLE_CHUNK.min(n_samples as usize - chunk * SAMPLE_CHUNK);
            let mut buffer = Vec::with_capacity(rows * dim);
            sampler.fill(seed, chunk as u64, rows, &mut buffer);
            let mut sum = KahanSum::default();
            let mut sum_sq = KahanSum::default();
            for row in buffer.chunks_exact(dim) {
                let value = evaluator.local_bits(row);
                sum.add(value);
                sum_sq.add(value * value);
            }
            ChunkSums {
                sum: sum.value(),
                sum_sq: sum_sq.value(),
            }
        })
        .collect();

    let mut sum = KahanSum::default();
    let mut sum_sq = KahanSum::default();
    for chunk in &chunks {
        sum.add(chunk.sum);
        sum_sq.add(chunk.sum_sq);
    }
    let n = n_samples as f64;
    let mean = sum.value() / n;
    let variance = ((sum_sq.value() - sum.value() * sum.value() / n) / (n - 1.0)).max(0.0);
    Ok(McEstimate {
        bits: mean,
        std_err: (variance / n).sqrt(),
        n_samples,
    })
}

/// Full decomposition of a gate: closed-form mutual information for the
/// single-collection antichains, Monte-Carlo redundancy everywhere else,
/// Moebius inversion on top.
pub fn oracle_pid(
    gate: &GateSpec,
    n_mc: u64,
    seed: u64,
    mode: PreprocessMode,
) -> Result<PidDecomposition> {
    let n = gate.n_sources();
    let lattice = RedundancyLattice::new(n)?;
    let mut i_cap = std::collections::BTreeMap::new();
    for alpha in lattice.nodes() {
        let bits = if alpha.is_singleton() {
            let collection: Vec<usize> =
                alpha.sets()[0].iter().map(|&i| i as usize).collect();
            gate.mutual_information(&collection)?
        } else {
            mc_redundancy(gate, alpha, n_mc, seed, mode)?.bits
        };
        i_cap.insert(alpha.clone(), bits);
    }
    let mut metadata = RunMetadata::new(Method::AnalyticOracle);
    metadata.n_samples = Some(n_mc);
    metadata.seed = Some(seed);
    metadata.preprocess = mode;
    PidDecomposition::from_redundancies(n, &i_cap, metadata)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauss::{make_gate, GateKind};
    use approx::assert_abs_diff_eq;

    fn point() -> DensityPoint {
        DensityPoint {
            target: 1.0,
            sources: vec![0.5, 0.3],
            joints: vec![0.6, 0.2],
        }
    }

    #[test]
    fn local_redundancy_hand_cases() {
        // Worked example: (0.6 + 0.2) / (1.0 * (0.5 + 0.3)) = 1.
        assert_abs_diff_eq!(local_redundancy(&point()).unwrap(), 0.0, epsilon = 1e-15);
        // Factorized joints give zero.
        let independent = DensityPoint {
            target: 2.0,
            sources: vec![0.7, 0.1],
            joints: vec![1.4, 0.2],
        };
        assert_abs_diff_eq!(
            local_redundancy(&independent).unwrap(),
            0.0,
            epsilon = 1e-12
        );
        // A singleton is the local mutual information.
        let singleton = DensityPoint {
            target: 0.5,
            sources: vec![0.25],
            joints: vec![0.25],
        };
        assert_abs_diff_eq!(
            local_redundancy(&singleton).unwrap(),
            2.0f64.log2(),
            epsilon = 1e-12
        );
        let bad = DensityPoint {
            target: 0.0,
            sources: vec![0.1],
            joints: vec![0.1],
        };
        assert!(matches!(
            local_redundancy(&bad),
            Err(Error::UndefinedLocalValue(_))
        ));
    }

    #[test]
    fn frechet_zero_and_scaling_directions() {
        let zero = DensityPoint {
            target: 0.0,
            sources: vec![0.0, 0.0],
            joints: vec![0.0, 0.0],
        };
        let (analytic, difference) = frechet_derivative(&point(), &zero, 1e-5).unwrap();
        assert_eq!(analytic, 0.0);
        assert_eq!(difference, 0.0);

        // Direction g = f scales every density: derivative is -1 nat-rate.
        let (analytic, difference) = frechet_derivative(&point(), &point(), 1e-6).unwrap();
        assert_abs_diff_eq!(analytic, -1.0 / std::f64::consts::LN_2, epsilon = 1e-12);
        assert_abs_diff_eq!(difference, analytic, epsilon = 1e-6);
    }

    #[test]
    fn frechet_step_too_large() {
        let direction = DensityPoint {
            target: -2.0,
            sources: vec![0.0, 0.0],
            joints: vec![0.0, 0.0],
        };
        assert!(matches!(
            frechet_derivative(&point(), &direction, 1.0),
            Err(Error::StepTooLarge)
        ));
    }

    #[test]
    fn mc_is_deterministic() {
        let gate = make_gate(GateKind::Sum, 0.01).unwrap();
        let alpha = Antichain::parse("{1}{2}", 2).unwrap();
        let a = mc_redundancy(&gate, &alpha, 20_000, 5, PreprocessMode::None).unwrap();
        let b = mc_redundancy(&gate, &alpha, 20_000, 5, PreprocessMode::None).unwrap();
        assert_eq!(a, b);
        assert!(mc_redundancy(&gate, &alpha, 100, 5, PreprocessMode::None).is_err());
    }

    #[test]
    fn mc_singleton_matches_closed_form() {
        let gate = make_gate(GateKind::Sum, 0.1).unwrap();
        for collection in [vec![1usize], vec![2], vec![1, 2]] {
            let alpha = Antichain::new(2, [collection.clone()]).unwrap();
            let estimate =
                mc_redundancy(&gate, &alpha, 200_000, 11, PreprocessMode::None).unwrap();
            let exact = gate.mutual_information(&collection).unwrap();
            assert!(
                (estimate.bits - exact).abs() < 3.0 * estimate.std_err + 1e-6,
                "{alpha}: {} vs {exact} (se {})",
                estimate.bits,
                estimate.std_err
            );
        }
    }

    #[test]
    fn oracle_pid_sum_gate_consistency() {
        let gate = make_gate(GateKind::Sum, 0.01).unwrap();
        let pid = oracle_pid(&gate, 50_000, 3, PreprocessMode::None).unwrap();
        pid.verify_consistency(1e-9).unwrap();
        let top = Antichain::top(2).unwrap();
        assert_abs_diff_eq!(
            pid.i_cap(&top).unwrap(),
            gate.mutual_information(&[1, 2]).unwrap(),
            epsilon = 1e-12
        );
        // Redundancy should be in the vicinity of 0.353 even at modest
        // draw counts.
        let red = pid
            .i_cap(&Antichain::parse("{1}{2}", 2).unwrap())
            .unwrap();
        assert!((red - 0.353).abs() < 0.05, "red = {red}");
    }

    #[test]
    fn standardize_mode_matches_none_for_equal_scales() {
        // Sources of the sum gate already share their standard deviation, so
        // standardization must not move the redundancy beyond MC noise.
        let gate = make_gate(GateKind::Sum, 0.01).unwrap();
        let alpha = Antichain::parse("{1}{2}", 2).unwrap();
        let plain = mc_redundancy(&gate, &alpha, 100_000, 9, PreprocessMode::None).unwrap();
        let standardized =
            mc_redundancy(&gate, &alpha, 100_000, 9, PreprocessMode::Standardize).unwrap();
        assert!(
            (plain.bits - standardized.bits).abs()
                < 3.0 * (plain.std_err + standardized.std_err) + 1e-3,
            "{} vs {}",
            plain.bits,
            standardized.bits
        );
    }
}
