//! Decomposition results: redundancies, atoms and run provenance.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::antichain::Antichain;
use crate::error::{Error, Result};
use crate::lattice::RedundancyLattice;
use crate::preprocess::PreprocessMode;

/// Version of the JSON output schema.
pub const SCHEMA_VERSION: u32 = 1;

/// Values attached to one lattice node, in bits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtomValues {
    /// Cumulative redundancy of the antichain.
    pub i_cap_bits: f64,
    /// The atom: what this node adds beyond everything below it.
    pub pi_bits: f64,
}

/// How the redundancies were produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    DiscreteExact,
    AnalyticOracle,
    KnnEstimator,
}

/// Provenance carried alongside every decomposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<u32>,
    /// Sample count for the estimator, draw count for the Monte-Carlo oracle.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_samples: Option<u64>,
    pub preprocess: PreprocessMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub tool_version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

impl RunMetadata {
    pub fn new(method: Method) -> Self {
        RunMetadata {
            method,
            k: None,
            n_samples: None,
            preprocess: PreprocessMode::None,
            seed: None,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            warning: None,
        }
    }
}

/// A complete decomposition over the redundancy lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct PidDecomposition {
    pub n_sources: usize,
    pub atoms: BTreeMap<Antichain, AtomValues>,
    pub metadata: RunMetadata,
}

impl PidDecomposition {
    /// Builds the decomposition from per-node redundancies by Moebius
    /// inversion. `i_cap` must cover the full lattice for `n_sources`.
    pub fn from_redundancies(
        n_sources: usize,
        i_cap: &BTreeMap<Antichain, f64>,
        metadata: RunMetadata,
    ) -> Result<Self> {
        let lattice = RedundancyLattice::new(n_sources)?;
        let pi = lattice.moebius_invert(i_cap)?;
        let atoms = i_cap
            .iter()
            .map(|(alpha, &i_cap_bits)| {
                (
                    alpha.clone(),
                    AtomValues {
                        i_cap_bits,
                        pi_bits: pi[alpha],
                    },
                )
            })
            .collect();
        Ok(PidDecomposition {
            n_sources,
            atoms,
            metadata,
        })
    }

    pub fn i_cap(&self, alpha: &Antichain) -> Option<f64> {
        self.atoms.get(alpha).map(|v| v.i_cap_bits)
    }

    pub fn pi(&self, alpha: &Antichain) -> Option<f64> {
        self.atoms.get(alpha).map(|v| v.pi_bits)
    }

    /// Checks the Moebius consistency `i_cap(alpha) = sum of pi over the
    /// downset` at every node, to `tol` bits.
    pub fn verify_consistency(&self, tol: f64) -> Result<()> {
        let lattice = RedundancyLattice::new(self.n_sources)?;
        let pi: BTreeMap<Antichain, f64> = self
            .atoms
            .iter()
            .map(|(a, v)| (a.clone(), v.pi_bits))
            .collect();
        let resummed = lattice.resum(&pi)?;
        for (alpha, values) in &self.atoms {
            let expect = resummed
                .get(alpha)
                .ok_or_else(|| Error::IncompleteLattice(alpha.to_string()))?;
            if (values.i_cap_bits - expect).abs() > tol {
                return Err(Error::IncompleteLattice(format!(
                    "Moebius consistency violated at {alpha}: {} vs {}",
                    values.i_cap_bits, expect
                )));
            }
        }
        Ok(())
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&Repr::from(self)).expect("decomposition serializes")
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let repr: Repr =
            serde_json::from_str(text).map_err(|e| Error::ParseAntichain(e.to_string()))?;
        repr.try_into()
    }
}

impl Serialize for PidDecomposition {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        Repr::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for PidDecomposition {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = Repr::deserialize(deserializer)?;
        repr.try_into().map_err(serde::de::Error::custom)
    }
}

/// Wire form: atoms keyed by canonical antichain strings.
#[derive(Serialize, Deserialize)]
struct Repr {
    schema_version: u32,
    n_sources: usize,
    metadata: RunMetadata,
    atoms: BTreeMap<String, AtomValues>,
}

impl From<&PidDecomposition> for Repr {
    fn from(pid: &PidDecomposition) -> Self {
        Repr {
            schema_version: SCHEMA_VERSION,
            n_sources: pid.n_sources,
            metadata: pid.metadata.clone(),
            atoms: pid
                .atoms
                .iter()
                .map(|(a, v)| (a.to_string(), *v))
                .collect(),
        }
    }
}

impl TryFrom<Repr> for PidDecomposition {
    type Error = Error;

    fn try_from(repr: Repr) -> Result<Self> {
        let mut atoms = BTreeMap::new();
        for (key, values) in repr.atoms {
            atoms.insert(Antichain::parse(&key, repr.n_sources)?, values);
        }
        Ok(PidDecomposition {
            n_sources: repr.n_sources,
            atoms,
            metadata: repr.metadata,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_decomposition() -> PidDecomposition {
        let key = |s| Antichain::parse(s, 2).unwrap();
        let mut i_cap = BTreeMap::new();
        i_cap.insert(key("{1}{2}"), 0.353);
        i_cap.insert(key("{1}"), 0.500);
        i_cap.insert(key("{2}"), 0.500);
        i_cap.insert(key("{1,2}"), 7.144);
        let mut metadata = RunMetadata::new(Method::AnalyticOracle);
        metadata.n_samples = Some(1_000_000);
        metadata.seed = Some(7);
        PidDecomposition::from_redundancies(2, &i_cap, metadata).unwrap()
    }

    #[test]
    fn json_round_trip_is_identity() {
        let pid = sample_decomposition();
        let text = pid.to_json_string();
        let parsed = PidDecomposition::from_json_str(&text).unwrap();
        assert_eq!(parsed, pid);
        assert!(text.contains("\"{1}{2}\""));
        assert!(text.contains("schema_version"));
    }

    #[test]
    fn consistency_check_accepts_and_rejects() {
        let mut pid = sample_decomposition();
        pid.verify_consistency(1e-9).unwrap();
        let key = Antichain::parse("{1,2}", 2).unwrap();
        pid.atoms.get_mut(&key).unwrap().i_cap_bits += 1.0;
        assert!(pid.verify_consistency(1e-9).is_err());
    }
}
