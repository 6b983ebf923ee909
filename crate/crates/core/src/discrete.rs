//! Plug-in shared-exclusion decomposition for finite probability mass
//! functions.
//!
//! The local redundancy of an antichain at a realization is the log change
//! in belief about the target event after learning that at least one of the
//! antichain's source-collection events occurred:
//!
//! ```text
//!     log2[ p(t | exists a in alpha with S_a = s_a) / p(t) ]
//! ```
//!
//! The disjunction probability is obtained by summing the pmf over the
//! explicit event set rather than by inclusion-exclusion expansion, which
//! keeps signs out of the arithmetic entirely. Alphabets are tiny here; this
//! module exists as ground truth for the continuous code paths, not for
//! throughput.

use crate::antichain::Antichain;
use crate::decomposition::{Method, PidDecomposition, RunMetadata};
use crate::error::{Error, Result};
use crate::lattice::RedundancyLattice;

/// A finite joint distribution of one target and n source variables.
#[derive(Debug, Clone)]
pub struct DiscreteJoint {
    target_card: usize,
    source_cards: Vec<usize>,
    /// Dense mass table indexed by `t` (major) then the source tuple in
    /// mixed radix.
    pmf: Vec<f64>,
}

impl DiscreteJoint {
    pub fn new(target_card: usize, source_cards: Vec<usize>, pmf: Vec<f64>) -> Result<Self> {
        let states: usize = target_card * source_cards.iter().product::<usize>();
        if states == 0 || pmf.len() != states {
            return Err(Error::StateOutOfRange(vec![pmf.len()]));
        }
        let mut total = 0.0;
        for (index, &mass) in pmf.iter().enumerate() {
            if mass < 0.0 || !mass.is_finite() {
                return Err(Error::NegativeMass {
                    mass,
                    state: vec![index],
                });
            }
            total += mass;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::UnnormalizedPmf(total));
        }
        Ok(DiscreteJoint {
            target_card,
            source_cards,
            pmf,
        })
    }

    /// Builds the joint from `(state, probability)` rows where a state is
    /// `[t, s_1, .., s_n]`. Alphabet sizes are inferred from the maxima.
    pub fn from_rows(rows: &[(Vec<usize>, f64)]) -> Result<Self> {
        let arity = match rows.first() {
            Some((state, _)) if state.len() >= 2 => state.len(),
            _ => return Err(Error::StateOutOfRange(vec![])),
        };
        let mut cards = vec![0usize; arity];
        for (state, _) in rows {
            if state.len() != arity {
                return Err(Error::StateOutOfRange(state.clone()));
            }
            for (i, &value) in state.iter().enumerate() {
                cards[i] = cards[i].max(value + 1);
            }
        }
        let target_card = cards[0];
        let source_cards: Vec<usize> = cards[1..].to_vec();
        let states: usize = target_card * source_cards.iter().product::<usize>();
        let mut pmf = vec![0.0; states];
        for (state, mass) in rows {
            let mut index = state[0];
            for (i, &value) in state[1..].iter().enumerate() {
                index = index * source_cards[i] + value;
            }
            pmf[index] += mass;
        }
        DiscreteJoint::new(target_card, source_cards, pmf)
    }

    /// Parses `t,s_1,..,s_n,probability` lines; a leading header line is
    /// skipped. Intended for small regression-test fixtures.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let parsed: Option<(Vec<usize>, f64)> = (|| {
                let state = fields[..fields.len() - 1]
                    .iter()
                    .map(|f| f.parse().ok())
                    .collect::<Option<Vec<usize>>>()?;
                let mass = fields.last()?.parse().ok()?;
                Some((state, mass))
            })();
            match parsed {
                Some(row) => rows.push(row),
                None if i == 0 => continue, // header
                None => return Err(Error::ParseAntichain(format!("pmf row {}: {line}", i + 1))),
            }
        }
        DiscreteJoint::from_rows(&rows)
    }

    pub fn n_sources(&self) -> usize {
        self.source_cards.len()
    }

    fn index(&self, t: usize, s: &[usize]) -> Result<usize> {
        if t >= self.target_card || s.len() != self.source_cards.len() {
            return Err(Error::StateOutOfRange(
                std::iter::once(t).chain(s.iter().copied()).collect(),
            ));
        }
        let mut index = t;
        for (i, &value) in s.iter().enumerate() {
            if value >= self.source_cards[i] {
                return Err(Error::StateOutOfRange(
                    std::iter::once(t).chain(s.iter().copied()).collect(),
                ));
            }
            index = index * self.source_cards[i] + value;
        }
        Ok(index)
    }

    pub fn prob(&self, t: usize, s: &[usize]) -> Result<f64> {
        Ok(self.pmf[self.index(t, s)?])
    }

    fn for_each_state<F: FnMut(usize, &[usize], f64)>(&self, mut f: F) {
        let mut s = vec![0usize; self.source_cards.len()];
        for t in 0..self.target_card {
            loop {
                let mut index = t;
                for (i, &value) in s.iter().enumerate() {
                    index = index * self.source_cards[i] + value;
                }
                f(t, &s, self.pmf[index]);
                // Advance the mixed-radix source tuple.
                let mut digit = s.len();
                loop {
                    if digit == 0 {
                        break;
                    }
                    digit -= 1;
                    s[digit] += 1;
                    if s[digit] < self.source_cards[digit] {
                        break;
                    }
                    s[digit] = 0;
                }
                if s.iter().all(|&v| v == 0) {
                    break;
                }
            }
        }
    }

    /// True when the source tuple `other` satisfies the disjunction event of
    /// `alpha` anchored at `s`: some collection of `alpha` matches `s`
    /// exactly on all its indices.
    fn in_event(alpha: &Antichain, s: &[usize], other: &[usize]) -> bool {
        alpha.sets().iter().any(|collection| {
            collection
                .iter()
                .all(|&i| other[i as usize - 1] == s[i as usize - 1])
        })
    }

    /// Local shared-exclusion redundancy of `alpha` at `(t, s)`, in bits.
    pub fn local_redundancy(&self, alpha: &Antichain, t: usize, s: &[usize]) -> Result<f64> {
        self.index(t, s)?;
        let mut p_event = 0.0;
        let mut p_t_and_event = 0.0;
        let mut p_t = 0.0;
        self.for_each_state(|t2, s2, mass| {
            let hit = Self::in_event(alpha, s, s2);
            if hit {
                p_event += mass;
            }
            if t2 == t {
                p_t += mass;
                if hit {
                    p_t_and_event += mass;
                }
            }
        });
        if p_t == 0.0 {
            return Err(Error::UndefinedLocalValue(format!("p(t={t}) = 0")));
        }
        if p_event == 0.0 {
            return Err(Error::UndefinedLocalValue(format!(
                "disjunction of {alpha} at {s:?} has probability 0"
            )));
        }
        Ok((p_t_and_event / p_event / p_t).log2())
    }

    /// Full decomposition: pmf-weighted average of the locals at every
    /// lattice node, then Moebius inversion.
    pub fn pid(&self) -> Result<PidDecomposition> {
        let n = self.n_sources();
        let lattice = RedundancyLattice::new(n)?;
        let mut i_cap = std::collections::BTreeMap::new();
        for alpha in lattice.nodes() {
            let mut states = Vec::new();
            self.for_each_state(|t, s, mass| {
                if mass > 0.0 {
                    states.push((t, s.to_vec(), mass));
                }
            });
            let mut total = 0.0;
            for (t, s, mass) in states {
                total += mass * self.local_redundancy(alpha, t, &s)?;
            }
            i_cap.insert(alpha.clone(), total);
        }
        PidDecomposition::from_redundancies(n, &i_cap, RunMetadata::new(Method::DiscreteExact))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Uniform binary sources with a deterministic target map.
    fn binary_gate(f: impl Fn(usize, usize) -> usize) -> DiscreteJoint {
        let rows: Vec<(Vec<usize>, f64)> = (0..4)
            .map(|i| {
                let (s1, s2) = (i >> 1, i & 1);
                (vec![f(s1, s2), s1, s2], 0.25)
            })
            .collect();
        DiscreteJoint::from_rows(&rows).unwrap()
    }

    #[test]
    fn sum_gate_local_values() {
        let sum = binary_gate(|a, b| a + b);
        let alpha = Antichain::parse("{1}{2}", 2).unwrap();
        let local = sum.local_redundancy(&alpha, 0, &[0, 0]).unwrap();
        assert!((local - (4.0f64 / 3.0).log2()).abs() < 1e-12);
        let local = sum.local_redundancy(&alpha, 1, &[0, 1]).unwrap();
        assert!((local - (2.0f64 / 3.0).log2()).abs() < 1e-12);
    }

    #[test]
    fn top_antichain_is_local_mutual_information() {
        let sum = binary_gate(|a, b| a + b);
        let top = Antichain::top(2).unwrap();
        for (t, s) in [(0, [0, 0]), (1, [0, 1]), (2, [1, 1])] {
            let local = sum.local_redundancy(&top, t, &s).unwrap();
            // i(t : s1, s2) = log2[p(t|s)/p(t)] with deterministic targets.
            let p_t: f64 = match t {
                1 => 0.5,
                _ => 0.25,
            };
            assert!((local - (1.0 / p_t).log2()).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_probability_cases_error() {
        // Mass only at (t=0, s=(0,0)); t=1 and s=(1,1) are in-range but
        // carry no probability.
        let mut pmf = vec![0.0; 8];
        pmf[0] = 1.0;
        let joint = DiscreteJoint::new(2, vec![2, 2], pmf).unwrap();
        let alpha = Antichain::parse("{1}{2}", 2).unwrap();
        assert!(joint.local_redundancy(&alpha, 0, &[0, 0]).is_ok());
        // p(t) = 0
        assert!(matches!(
            joint.local_redundancy(&alpha, 1, &[0, 0]),
            Err(Error::UndefinedLocalValue(_))
        ));
        // disjunction probability 0
        assert!(matches!(
            joint.local_redundancy(&alpha, 0, &[1, 1]),
            Err(Error::UndefinedLocalValue(_))
        ));
        // state outside the alphabets
        assert!(joint.local_redundancy(&alpha, 5, &[0, 0]).is_err());
    }

    #[test]
    fn table_one_discrete_rows() {
        let log2_3 = 3.0f64.log2();
        let checks = [
            // (gate, syn, unq1, unq2, red, mi)
            (
                DiscreteJoint::from_rows(&[(vec![0, 0, 0], 0.5), (vec![1, 1, 1], 0.5)]).unwrap(),
                0.0,
                0.0,
                0.0,
                1.0,
                1.0,
            ),
            (
                binary_gate(|a, b| 2 * a + b),
                2.0 - log2_3,
                log2_3 - 1.0,
                log2_3 - 1.0,
                2.0 - log2_3,
                2.0,
            ),
            (
                binary_gate(|a, _| a),
                2.0 - log2_3,
                log2_3 - 1.0,
                -(2.0 - log2_3),
                2.0 - log2_3,
                1.0,
            ),
            (
                binary_gate(|a, b| a + b),
                2.0 - log2_3,
                log2_3 - 1.0,
                log2_3 - 1.0,
                1.5 - log2_3,
                1.5,
            ),
        ];
        let key = |s| Antichain::parse(s, 2).unwrap();
        for (gate, syn, unq1, unq2, red, mi) in checks {
            let pid = gate.pid().unwrap();
            pid.verify_consistency(1e-12).unwrap();
            assert!((pid.pi(&key("{1,2}")).unwrap() - syn).abs() < 1e-12);
            assert!((pid.pi(&key("{1}")).unwrap() - unq1).abs() < 1e-12);
            assert!((pid.pi(&key("{2}")).unwrap() - unq2).abs() < 1e-12);
            assert!((pid.pi(&key("{1}{2}")).unwrap() - red).abs() < 1e-12);
            assert!((pid.i_cap(&key("{1,2}")).unwrap() - mi).abs() < 1e-12);
        }
    }

    #[test]
    fn self_redundancy_is_plug_in_mutual_information() {
        // Asymmetric pmf so the check is non-trivial.
        let rows = vec![
            (vec![0, 0, 0], 0.35),
            (vec![1, 0, 1], 0.15),
            (vec![0, 1, 0], 0.05),
            (vec![1, 1, 1], 0.25),
            (vec![2, 1, 0], 0.20),
        ];
        let joint = DiscreteJoint::from_rows(&rows).unwrap();
        let pid = joint.pid().unwrap();
        for collection in [vec![1usize], vec![2], vec![1, 2]] {
            let alpha = Antichain::new(2, [collection.clone()]).unwrap();
            // Plug-in mutual information between T and the collection.
            let mut mi = 0.0;
            let mut marg_t = std::collections::HashMap::new();
            let mut marg_s = std::collections::HashMap::new();
            let mut marg_ts = std::collections::HashMap::new();
            joint.for_each_state(|t, s, mass| {
                if mass == 0.0 {
                    return;
                }
                let sub: Vec<usize> = collection.iter().map(|&i| s[i - 1]).collect();
                *marg_t.entry(t).or_insert(0.0) += mass;
                *marg_s.entry(sub.clone()).or_insert(0.0) += mass;
                *marg_ts.entry((t, sub)).or_insert(0.0) += mass;
            });
            for ((t, sub), &mass) in &marg_ts {
                mi += mass * (mass / (marg_t[t] * marg_s[sub])).log2();
            }
            assert!(
                (pid.i_cap(&alpha).unwrap() - mi).abs() < 1e-12,
                "self-redundancy of {alpha}"
            );
        }
    }

    #[test]
    fn source_permutation_permutes_atoms() {
        let rows = vec![
            (vec![0, 0, 0], 0.35),
            (vec![1, 0, 1], 0.15),
            (vec![0, 1, 0], 0.05),
            (vec![1, 1, 1], 0.25),
            (vec![2, 1, 0], 0.20),
        ];
        let joint = DiscreteJoint::from_rows(&rows).unwrap();
        let swapped_rows: Vec<(Vec<usize>, f64)> = rows
            .iter()
            .map(|(state, mass)| (vec![state[0], state[2], state[1]], *mass))
            .collect();
        let swapped = DiscreteJoint::from_rows(&swapped_rows).unwrap();
        let pid = joint.pid().unwrap();
        let pid_swapped = swapped.pid().unwrap();
        for (alpha, values) in &pid.atoms {
            let relabeled = Antichain::new(
                2,
                alpha.sets().iter().map(|set| {
                    set.iter()
                        .map(|&i| if i == 1 { 2usize } else { 1 })
                        .collect::<Vec<_>>()
                }),
            )
            .unwrap();
            let other = pid_swapped.atoms[&relabeled];
            assert!((values.pi_bits - other.pi_bits).abs() < 1e-12);
            assert!((values.i_cap_bits - other.i_cap_bits).abs() < 1e-12);
        }
    }

    #[test]
    fn csv_fixture_round_trip() {
        let text = "t,s1,s2,p\n0,0,0,0.25\n1,0,1,0.25\n1,1,0,0.25\n2,1,1,0.25\n";
        let joint = DiscreteJoint::from_csv_str(text).unwrap();
        let pid = joint.pid().unwrap();
        let red = Antichain::parse("{1}{2}", 2).unwrap();
        assert!((pid.pi(&red).unwrap() - (1.5 - 3.0f64.log2())).abs() < 1e-12);
    }
}
