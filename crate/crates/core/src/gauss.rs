//! Named multivariate Gaussian systems and their closed-form quantities.
//!
//! Each gate is a zero-mean Gaussian over `(target block, source blocks)`
//! whose covariance encodes the mechanism: the redundant gate duplicates one
//! source into target and second source, the copy gate stacks both sources
//! into a two-dimensional target, the unique gate copies only the first
//! source, and the (skewed) sum gates add the sources. Target noise of
//! standard deviation `sigma` keeps the mutual information finite.
//!
//! Mutual information between the target and any set of sources has the
//! closed form `I = log2(det S_T det S_S / det S) / 2` on the marginalized
//! covariance.

use nalgebra::{Cholesky, DMatrix, Dyn};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Off-diagonal regularization for gates with exactly duplicated variables.
pub const REDUNDANT_DELTA: f64 = 1e-9;

/// Rows drawn per RNG sub-stream. Sampling chunk `c` always uses stream `c`
/// of the seeded generator, so results never depend on how many workers
/// consume the chunks.
pub const SAMPLE_CHUNK: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateKind {
    Redundant,
    Copy,
    Unique,
    Sum,
    SkewedSum,
}

impl std::str::FromStr for GateKind {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        match text {
            "redundant" => Ok(GateKind::Redundant),
            "copy" => Ok(GateKind::Copy),
            "unique" => Ok(GateKind::Unique),
            "sum" => Ok(GateKind::Sum),
            "skewed_sum" | "skewed-sum" => Ok(GateKind::SkewedSum),
            other => Err(Error::UnknownGate(other.to_string())),
        }
    }
}

impl std::fmt::Display for GateKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            GateKind::Redundant => "redundant",
            GateKind::Copy => "copy",
            GateKind::Unique => "unique",
            GateKind::Sum => "sum",
            GateKind::SkewedSum => "skewed_sum",
        };
        f.write_str(name)
    }
}

/// A named zero-mean Gaussian system with a target/source coordinate split.
#[derive(Debug, Clone, PartialEq)]
pub struct GateSpec {
    name: String,
    sigma: f64,
    delta: Option<f64>,
    covariance: DMatrix<f64>,
    target_dims: usize,
    source_dims: Vec<usize>,
}

/// Builds one of the named gates with the requested target noise.
pub fn make_gate(kind: GateKind, sigma: f64) -> Result<GateSpec> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidGate(format!("sigma must be positive, got {sigma}")));
    }
    let s2 = sigma * sigma;
    let d = REDUNDANT_DELTA;
    let (cov, target_dims, delta) = match kind {
        GateKind::Redundant => (
            DMatrix::from_row_slice(3, 3, &[
                1.0 + s2, 1.0 - d, 1.0 - d,
                1.0 - d, 1.0, 1.0 - d,
                1.0 - d, 1.0 - d, 1.0,
            ]),
            1,
            Some(d),
        ),
        GateKind::Copy => (
            DMatrix::from_row_slice(4, 4, &[
                1.0 + s2, 0.0, 1.0, 0.0,
                0.0, 1.0 + s2, 0.0, 1.0,
                1.0, 0.0, 1.0, 0.0,
                0.0, 1.0, 0.0, 1.0,
            ]),
            2,
            None,
        ),
        GateKind::Unique => (
            DMatrix::from_row_slice(3, 3, &[
                1.0 + s2, 1.0, 0.0,
                1.0, 1.0, 0.0,
                0.0, 0.0, 1.0,
            ]),
            1,
            None,
        ),
        GateKind::Sum => (
            DMatrix::from_row_slice(3, 3, &[
                2.0 + s2, 1.0, 1.0,
                1.0, 1.0, 0.0,
                1.0, 0.0, 1.0,
            ]),
            1,
            None,
        ),
        GateKind::SkewedSum => (
            DMatrix::from_row_slice(3, 3, &[
                2.2 + s2, 1.2, 1.0,
                1.2, 1.2, 0.0,
                1.0, 0.0, 1.0,
            ]),
            1,
            None,
        ),
    };
    let source_dims = vec![1; cov.nrows() - target_dims];
    let mut gate = GateSpec::from_parts(kind.to_string(), cov, target_dims, source_dims, sigma)?;
    gate.delta = delta;
    Ok(gate)
}

impl GateSpec {
    /// Builds a gate from an explicit covariance and coordinate split. The
    /// covariance must be symmetric positive definite; coordinates are laid
    /// out target block first, then each source block in order.
    pub fn from_parts(
        name: String,
        covariance: DMatrix<f64>,
        target_dims: usize,
        source_dims: Vec<usize>,
        sigma: f64,
    ) -> Result<Self> {
        let dim = covariance.nrows();
        if covariance.ncols() != dim {
            return Err(Error::InvalidGate("covariance is not square".into()));
        }
        if target_dims == 0 || source_dims.is_empty() || source_dims.contains(&0) {
            return Err(Error::InvalidGate("empty target or source block".into()));
        }
        if target_dims + source_dims.iter().sum::<usize>() != dim {
            return Err(Error::InvalidGate(
                "blocks do not partition the coordinates".into(),
            ));
        }
        for i in 0..dim {
            for j in 0..i {
                if (covariance[(i, j)] - covariance[(j, i)]).abs() > 1e-12 {
                    return Err(Error::InvalidGate("covariance is not symmetric".into()));
                }
            }
        }
        Cholesky::new(covariance.clone()).ok_or(Error::NotPositiveDefinite)?;
        Ok(GateSpec {
            name,
            sigma,
            delta: None,
            covariance,
            target_dims,
            source_dims,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn dim(&self) -> usize {
        self.covariance.nrows()
    }

    pub fn n_sources(&self) -> usize {
        self.source_dims.len()
    }

    pub fn target_dims(&self) -> usize {
        self.target_dims
    }

    pub fn source_dims(&self) -> &[usize] {
        &self.source_dims
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    /// Coordinates of the target block.
    pub fn target_coords(&self) -> Vec<usize> {
        (0..self.target_dims).collect()
    }

    /// Coordinates of one source block (1-based source index).
    pub fn source_coords(&self, source: usize) -> Vec<usize> {
        let mut offset = self.target_dims;
        for &dims in &self.source_dims[..source - 1] {
            offset += dims;
        }
        (offset..offset + self.source_dims[source - 1]).collect()
    }

    fn submatrix(&self, coords: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(coords.len(), coords.len(), |i, j| {
            self.covariance[(coords[i], coords[j])]
        })
    }

    fn log_det(&self, coords: &[usize]) -> Result<f64> {
        let chol =
            Cholesky::new(self.submatrix(coords)).ok_or(Error::NotPositiveDefinite)?;
        Ok(2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>())
    }

    /// Closed-form mutual information, in bits, between the target block and
    /// the joint of the given sources (1-based indices).
    pub fn mutual_information(&self, collection: &[usize]) -> Result<f64> {
        let target = self.target_coords();
        let mut sources = Vec::new();
        for &s in collection {
            sources.extend(self.source_coords(s));
        }
        let mut joint = target.clone();
        joint.extend(&sources);
        let log_det =
            self.log_det(&target)? + self.log_det(&sources)? - self.log_det(&joint)?;
        Ok(log_det / (2.0 * std::f64::consts::LN_2))
    }

    /// Marginal density evaluator for a coordinate subset.
    pub fn density(&self, coords: &[usize]) -> Result<GaussianBlock> {
        GaussianBlock::new(self, coords)
    }

    /// The same gate with every coordinate rescaled to unit variance.
    pub fn standardized(&self) -> Result<GateSpec> {
        let dim = self.dim();
        let scale: Vec<f64> = (0..dim)
            .map(|i| 1.0 / self.covariance[(i, i)].sqrt())
            .collect();
        let cov = DMatrix::from_fn(dim, dim, |i, j| {
            self.covariance[(i, j)] * scale[i] * scale[j]
        });
        GateSpec::from_parts(
            self.name.clone(),
            cov,
            self.target_dims,
            self.source_dims.clone(),
            self.sigma,
        )
    }

    pub fn sampler(&self) -> Result<GateSampler> {
        let chol = Cholesky::new(self.covariance.clone()).ok_or(Error::NotPositiveDefinite)?;
        Ok(GateSampler {
            lower: chol.unpack(),
            dim: self.dim(),
        })
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&GateRepr::from(self)).expect("gate serializes")
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let repr: GateRepr =
            serde_json::from_str(text).map_err(|e| Error::InvalidGate(e.to_string()))?;
        repr.try_into()
    }
}

#[derive(Serialize, Deserialize)]
struct GateRepr {
    name: String,
    sigma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    delta: Option<f64>,
    target_dims: usize,
    source_dims: Vec<usize>,
    covariance: Vec<Vec<f64>>,
}

impl From<&GateSpec> for GateRepr {
    fn from(gate: &GateSpec) -> Self {
        GateRepr {
            name: gate.name.clone(),
            sigma: gate.sigma,
            delta: gate.delta,
            target_dims: gate.target_dims,
            source_dims: gate.source_dims.clone(),
            covariance: (0..gate.dim())
                .map(|i| (0..gate.dim()).map(|j| gate.covariance[(i, j)]).collect())
                .collect(),
        }
    }
}

impl TryFrom<GateRepr> for GateSpec {
    type Error = Error;

    fn try_from(repr: GateRepr) -> Result<Self> {
        let dim = repr.covariance.len();
        if repr.covariance.iter().any(|row| row.len() != dim) {
            return Err(Error::InvalidGate("covariance is not square".into()));
        }
        let flat: Vec<f64> = repr.covariance.into_iter().flatten().collect();
        let mut gate = GateSpec::from_parts(
            repr.name,
            DMatrix::from_row_slice(dim, dim, &flat),
            repr.target_dims,
            repr.source_dims,
            repr.sigma,
        )?;
        gate.delta = repr.delta;
        Ok(gate)
    }
}

/// Log-density of a Gaussian marginal over a fixed coordinate subset,
/// evaluated directly on full-dimensional sample rows.
#[derive(Debug, Clone)]
pub struct GaussianBlock {
    coords: Vec<usize>,
    /// Lower Cholesky factor of the marginal covariance, row-major.
    lower: Vec<f64>,
    log_norm: f64,
}

/// Marginal blocks never exceed the full gate dimension; gates cap out at a
/// two-dimensional target plus four sources.
const MAX_BLOCK_DIM: usize = 8;

impl GaussianBlock {
    fn new(gate: &GateSpec, coords: &[usize]) -> Result<Self> {
        let d = coords.len();
        assert!(d <= MAX_BLOCK_DIM, "marginal block too large");
        let chol = Cholesky::new(gate.submatrix(coords)).ok_or(Error::NotPositiveDefinite)?;
        let lower_mat: DMatrix<f64> = chol.unpack();
        let mut lower = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..=i {
                lower[i * d + j] = lower_mat[(i, j)];
            }
        }
        let log_det_sqrt: f64 = (0..d).map(|i| lower[i * d + i].ln()).sum();
        let log_norm =
            -0.5 * d as f64 * (2.0 * std::f64::consts::PI).ln() - log_det_sqrt;
        Ok(GaussianBlock {
            coords: coords.to_vec(),
            lower,
            log_norm,
        })
    }

    pub fn coords(&self) -> &[usize] {
        &self.coords
    }

    /// Natural-log density at the gathered coordinates of a sample row.
    #[inline]
    pub fn logpdf_row(&self, row: &[f64]) -> f64 {
        let d = self.coords.len();
        let mut y = [0.0f64; MAX_BLOCK_DIM];
        // Forward substitution: solve L y = x.
        for i in 0..d {
            let mut value = row[self.coords[i]];
            for j in 0..i {
                value -= self.lower[i * d + j] * y[j];
            }
            y[i] = value / self.lower[i * d + i];
        }
        let quad: f64 = y[..d].iter().map(|v| v * v).sum();
        self.log_norm - 0.5 * quad
    }
}

/// Draws gate samples in deterministic sub-streams.
pub struct GateSampler {
    lower: DMatrix<f64>,
    dim: usize,
}

impl GateSampler {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Appends `rows` samples (row-major) drawn from sub-stream `stream` of
    /// the generator seeded with `seed`.
    pub fn fill(&self, seed: u64, stream: u64, rows: usize, out: &mut Vec<f64>) {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let dim = self.dim;
        let mut z = vec![0.0f64; dim];
        for _ in 0..rows {
            for value in z.iter_mut() {
                *value = StandardNormal.sample(&mut rng);
            }
            for i in 0..dim {
                let mut acc = 0.0;
                for j in 0..=i {
                    acc += self.lower[(i, j)] * z[j];
                }
                out.push(acc);
            }
        }
    }

    /// All `n` samples in chunk order; the layout produced by `fill` for
    /// consecutive streams of `SAMPLE_CHUNK` rows.
    pub fn sample_rows(&self, seed: u64, n: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(n * self.dim);
        let mut stream = 0u64;
        let mut remaining = n;
        while remaining > 0 {
            let rows = remaining.min(SAMPLE_CHUNK);
            self.fill(seed, stream, rows, &mut out);
            stream += 1;
            remaining -= rows;
        }
        out
    }
}
