//! Outcome probabilities under white noise and seeded shot sampling.
//!
//! The prepared state is `rho = (1-lambda)|phi><phi| + (lambda/d) I`. It is
//! never materialized: the probability of basis element `e` for the embedded
//! state `|b>|phi>` is
//!
//! ```text
//! P(e) = (1-lambda) |<e|b,phi>|^2 + (lambda/d) * sum_{k<d} |<e|b*d+k>|^2
//! ```
//!
//! Random draws use ChaCha8 seeded through [`substream_seed`], one
//! independent substream per (trial, setting), so results do not depend on
//! thread count or scheduling.

use std::collections::BTreeMap;
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::bases::{self, MeasurementBasis};
use crate::circuits::{self, OutcomeMap};
use crate::exec::Exec;
use crate::qcore::PureState;
use crate::{Error, Result};

pub const PROBABILITY_SUM_TOLERANCE: f64 = 1e-9;
pub const NEGATIVE_PROBABILITY_TOLERANCE: f64 = 1e-12;

/// Pure target state with a white-noise admixture.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisyPreparation {
    ideal: PureState,
    lambda: f64,
}

impl NoisyPreparation {
    pub fn new(ideal: PureState, lambda: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::InvalidLambda(lambda));
        }
        Ok(Self { ideal, lambda })
    }

    pub fn pure(ideal: PureState) -> Self {
        Self { ideal, lambda: 0.0 }
    }

    pub fn ideal(&self) -> &PureState {
        &self.ideal
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

/// Probability of each basis element (in basis order) when measuring
/// `|ancilla_bit>|phi>` under white noise.
pub fn outcome_probabilities(
    prep: &NoisyPreparation,
    ancilla_bit: u8,
    basis: &MeasurementBasis,
) -> Result<Vec<f64>> {
    let d = prep.ideal.dim();
    if basis.dim() != 2 * d {
        return Err(Error::DimensionMismatch {
            expected: 2 * d,
            actual: basis.dim(),
        });
    }
    let offset = if ancilla_bit == 0 { 0 } else { d };
    let amps = prep.ideal.amplitudes();
    let (keep, mix) = (1.0 - prep.lambda, prep.lambda / d as f64);
    Ok(basis
        .elements()
        .iter()
        .map(|e| {
            let mut overlap = num_complex::Complex64::new(0.0, 0.0);
            let mut block_weight = 0.0;
            for &(l, c) in &e.terms {
                if (offset..offset + d).contains(&l) {
                    overlap += c.conj() * amps[l - offset];
                    block_weight += c.norm_sqr();
                }
            }
            keep * overlap.norm_sqr() + mix * block_weight
        })
        .collect())
}

/// Canonical (`Z`) measurement of the data register.
pub fn z_probabilities(prep: &NoisyPreparation) -> Vec<f64> {
    let d = prep.ideal.dim() as f64;
    prep.ideal
        .probabilities()
        .into_iter()
        .map(|p| (1.0 - prep.lambda) * p + prep.lambda / d)
        .collect()
}

/// Histogram of measurement outcomes for one setting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counts {
    shots: u64,
    setting: String,
    frequencies: BTreeMap<usize, u64>,
}

impl Counts {
    /// Requires `shots >= 1` and `sum(frequencies) <= shots`. Shots not covered
    /// by any listed outcome are attributed to unlisted outcomes.
    pub fn new(
        shots: u64,
        setting: impl Into<String>,
        frequencies: BTreeMap<usize, u64>,
    ) -> Result<Self> {
        if shots == 0 {
            return Err(Error::InvalidCounts("shot count must be at least 1".into()));
        }
        let listed: u64 = frequencies.values().sum();
        if listed > shots {
            return Err(Error::InvalidCounts(format!(
                "listed counts {listed} exceed declared shots {shots}"
            )));
        }
        Ok(Self {
            shots,
            setting: setting.into(),
            frequencies,
        })
    }

    /// Dense convenience constructor: outcome `i` has `counts[i]`.
    pub fn from_slice(shots: u64, setting: impl Into<String>, counts: &[u64]) -> Result<Self> {
        Self::new(
            shots,
            setting,
            counts
                .iter()
                .copied()
                .enumerate()
                .filter(|&(_, n)| n > 0)
                .collect(),
        )
    }

    pub fn shots(&self) -> u64 {
        self.shots
    }

    pub fn setting(&self) -> &str {
        &self.setting
    }

    pub fn with_setting(mut self, setting: impl Into<String>) -> Self {
        self.setting = setting.into();
        self
    }

    pub fn frequencies(&self) -> &BTreeMap<usize, u64> {
        &self.frequencies
    }

    pub fn get(&self, outcome: usize) -> u64 {
        self.frequencies.get(&outcome).copied().unwrap_or(0)
    }

    pub fn listed_total(&self) -> u64 {
        self.frequencies.values().sum()
    }

    /// Shots attributed to outcomes not present in the histogram.
    pub fn unlisted(&self) -> u64 {
        self.shots - self.listed_total()
    }

    pub fn is_partial(&self) -> bool {
        self.unlisted() > 0
    }

    /// `n_k / M`, always over the full declared shot count.
    pub fn probability(&self, outcome: usize) -> f64 {
        self.get(outcome) as f64 / self.shots as f64
    }

    pub fn max_outcome(&self) -> Option<usize> {
        self.frequencies.keys().next_back().copied()
    }

    /// Parses the JSON counts schema. Keys are decimal outcome indices, or
    /// bitstrings with the ancilla first when `"encoding": "bitstring"` is set
    /// or every key is a same-length (>= 2) string of `0`/`1`.
    pub fn from_json(text: &str, outcome_dim: usize) -> Result<Self> {
        let counts: Counts = serde_json::from_str(text)?;
        if let Some(max) = counts.max_outcome() {
            if max >= outcome_dim {
                return Err(Error::InvalidCounts(format!(
                    "outcome {max} outside 0..{outcome_dim}"
                )));
            }
        }
        Ok(counts)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

struct OrderedCounts<'a>(&'a BTreeMap<usize, u64>);

impl Serialize for OrderedCounts<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_map(self.0.iter().map(|(k, v)| (k.to_string(), v)))
    }
}

impl Serialize for Counts {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut s = serializer.serialize_struct("Counts", 3)?;
        s.serialize_field("shots", &self.shots)?;
        s.serialize_field("setting", &self.setting)?;
        s.serialize_field("counts", &OrderedCounts(&self.frequencies))?;
        s.end()
    }
}

#[derive(Deserialize)]
#[serde(rename_all = "lowercase")]
enum KeyEncoding {
    Decimal,
    Bitstring,
}

#[derive(Deserialize)]
struct RawCounts {
    shots: u64,
    #[serde(default)]
    setting: String,
    counts: BTreeMap<String, i64>,
    #[serde(default)]
    encoding: Option<KeyEncoding>,
}

fn looks_like_bitstrings(keys: &[&String]) -> bool {
    let Some(first) = keys.first() else {
        return false;
    };
    first.len() >= 2
        && keys
            .iter()
            .all(|k| k.len() == first.len() && k.bytes().all(|b| b == b'0' || b == b'1'))
}

impl<'de> Deserialize<'de> for Counts {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = RawCounts::deserialize(deserializer)?;
        let keys: Vec<&String> = raw.counts.keys().collect();
        let bitstrings = match raw.encoding {
            Some(KeyEncoding::Bitstring) => true,
            Some(KeyEncoding::Decimal) => false,
            None => looks_like_bitstrings(&keys),
        };
        let mut frequencies = BTreeMap::new();
        for (key, &n) in &raw.counts {
            if n < 0 {
                return Err(D::Error::custom(format!(
                    "negative count {n} for outcome {key}"
                )));
            }
            let index = if bitstrings {
                usize::from_str_radix(key, 2)
            } else {
                key.parse::<usize>()
            }
            .map_err(|_| D::Error::custom(format!("bad outcome key `{key}`")))?;
            if frequencies.insert(index, n as u64).is_some() {
                return Err(D::Error::custom(format!("duplicate outcome {index}")));
            }
        }
        Counts::new(raw.shots, raw.setting, frequencies).map_err(D::Error::custom)
    }
}

/// Exact probabilities standing in for infinitely many shots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactDistribution {
    pub setting: String,
    pub probabilities: Vec<f64>,
}

/// Data from one measurement setting, sampled or exact.
#[derive(Debug, Clone, PartialEq)]
pub enum Observation {
    Counts(Counts),
    Exact(ExactDistribution),
}

impl Observation {
    pub fn probability(&self, outcome: usize) -> f64 {
        match self {
            Observation::Counts(c) => c.probability(outcome),
            Observation::Exact(e) => e.probabilities.get(outcome).copied().unwrap_or(0.0),
        }
    }

    pub fn setting(&self) -> &str {
        match self {
            Observation::Counts(c) => c.setting(),
            Observation::Exact(e) => &e.setting,
        }
    }

    pub fn as_counts(&self) -> Option<&Counts> {
        match self {
            Observation::Counts(c) => Some(c),
            Observation::Exact(_) => None,
        }
    }

    pub fn as_exact(&self) -> Option<&ExactDistribution> {
        match self {
            Observation::Exact(e) => Some(e),
            Observation::Counts(_) => None,
        }
    }
}

impl From<Counts> for Observation {
    fn from(c: Counts) -> Self {
        Observation::Counts(c)
    }
}

/// Per-setting shot budget. `Exact` bypasses sampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Shots {
    Exact,
    Finite(u64),
}

impl Shots {
    /// `0` is the exact-mode sentinel.
    pub fn from_count(n: u64) -> Self {
        if n == 0 {
            Shots::Exact
        } else {
            Shots::Finite(n)
        }
    }

    pub fn as_count(self) -> u64 {
        match self {
            Shots::Exact => 0,
            Shots::Finite(n) => n,
        }
    }
}

impl fmt::Display for Shots {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shots::Exact => f.write_str("exact"),
            Shots::Finite(n) => write!(f, "{n}"),
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent seed from a base seed and a path of stream ids.
pub fn substream_seed(base: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(base), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

fn check_distribution(probs: &[f64]) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::InvalidProbabilities("empty vector".into()));
    }
    if let Some((i, p)) = probs
        .iter()
        .enumerate()
        .find(|(_, p)| **p < -NEGATIVE_PROBABILITY_TOLERANCE || !p.is_finite())
    {
        return Err(Error::InvalidProbabilities(format!("entry {i} is {p}")));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > PROBABILITY_SUM_TOLERANCE {
        return Err(Error::InvalidProbabilities(format!("sum is {total}")));
    }
    Ok(())
}

/// Multinomial draw via sequential conditional binomials.
pub fn sample_counts_with(
    probs: &[f64],
    shots: u64,
    rng: &mut ChaCha8Rng,
    setting: &str,
) -> Result<Counts> {
    check_distribution(probs)?;
    if shots == 0 {
        return Err(Error::InvalidCounts("shot count must be at least 1".into()));
    }
    let mut remaining = shots;
    let mut mass = 1.0f64;
    let mut frequencies = BTreeMap::new();
    let last = probs.len() - 1;
    for (k, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        let p = p.max(0.0);
        let n = if k == last {
            remaining
        } else if mass <= 0.0 {
            0
        } else {
            let q = (p / mass).clamp(0.0, 1.0);
            Binomial::new(remaining, q)
                .map_err(|e| Error::InvalidProbabilities(e.to_string()))?
                .sample(rng)
        };
        if n > 0 {
            frequencies.insert(k, n);
        }
        remaining -= n;
        mass -= p;
    }
    Counts::new(shots, setting, frequencies)
}

/// Seeded multinomial sample of `shots` outcomes.
pub fn sample_counts(probs: &[f64], shots: u64, seed: u64) -> Result<Counts> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_counts_with(probs, shots, &mut rng, "")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Protocol {
    /// One phase setting (`C1`), measured on both `|0>|phi>` and `|1>|phi>`.
    One,
    /// Two phase settings (`D1`, `D2`) on `|0>|phi>`.
    Two,
}

impl Protocol {
    pub fn from_number(n: u8) -> Result<Self> {
        match n {
            1 => Ok(Protocol::One),
            2 => Ok(Protocol::Two),
            other => Err(Error::UnsupportedProtocol(other)),
        }
    }

    pub fn number(self) -> u8 {
        match self {
            Protocol::One => 1,
            Protocol::Two => 2,
        }
    }

    /// Setting labels, `z` first, in the order [`run_protocol`] returns them.
    pub fn setting_labels(self) -> &'static [&'static str] {
        match self {
            Protocol::One => &[Z_SETTING, "c1_phi0", "c1_phi1"],
            Protocol::Two => &[Z_SETTING, "d1", "d2"],
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

pub const Z_SETTING: &str = "z";

/// One phase measurement: basis, embedded ancilla value, and the circuit's
/// outcome labelling.
#[derive(Debug, Clone)]
pub struct PhaseSetting {
    pub label: &'static str,
    pub basis: MeasurementBasis,
    pub ancilla_bit: u8,
    pub outcomes: OutcomeMap,
    /// `element index -> circuit outcome index`.
    pub outcome_of_element: Vec<usize>,
}

impl PhaseSetting {
    fn new(
        label: &'static str,
        basis: MeasurementBasis,
        ancilla_bit: u8,
        outcomes: OutcomeMap,
    ) -> Self {
        let outcome_of_element = outcomes.outcome_of_element();
        Self {
            label,
            basis,
            ancilla_bit,
            outcomes,
            outcome_of_element,
        }
    }

    /// Element probabilities re-indexed by circuit outcome.
    pub fn outcome_probabilities(&self, prep: &NoisyPreparation) -> Result<Vec<f64>> {
        let by_element = outcome_probabilities(prep, self.ancilla_bit, &self.basis)?;
        Ok(self
            .outcomes
            .permutation
            .iter()
            .map(|&e| by_element[e])
            .collect())
    }
}

/// Bases, circuits' outcome maps and labels for one protocol at one size.
#[derive(Debug, Clone)]
pub struct ProtocolLayout {
    protocol: Protocol,
    n_qubits: usize,
    settings: Vec<PhaseSetting>,
}

impl ProtocolLayout {
    pub fn new(protocol: Protocol, n_qubits: usize) -> Result<Self> {
        Self::new_with(protocol, n_qubits, Exec::default())
    }

    pub fn new_with(protocol: Protocol, n_qubits: usize, exec: Exec) -> Result<Self> {
        let d = 1usize << n_qubits;
        let settings = match protocol {
            Protocol::One => {
                let circuit = circuits::build_protocol1_circuit(n_qubits)?;
                let c1 = bases::build_c1(d)?;
                let map = circuits::outcome_map_with(&circuit, &c1, exec)?;
                vec![
                    PhaseSetting::new("c1_phi0", c1.clone(), 0, map.clone()),
                    PhaseSetting::new("c1_phi1", c1, 1, map),
                ]
            }
            Protocol::Two => {
                let (c_d1, c_d2) = circuits::build_protocol2_circuits(n_qubits)?;
                let d1 = bases::build_d1(d)?;
                let d2 = bases::build_d2(d)?;
                let m1 = circuits::outcome_map_with(&c_d1, &d1, exec)?;
                let m2 = circuits::outcome_map_with(&c_d2, &d2, exec)?;
                vec![
                    PhaseSetting::new("d1", d1, 0, m1),
                    PhaseSetting::new("d2", d2, 0, m2),
                ]
            }
        };
        Ok(Self {
            protocol,
            n_qubits,
            settings,
        })
    }

    pub fn protocol(&self) -> Protocol {
        self.protocol
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn settings(&self) -> &[PhaseSetting] {
        &self.settings
    }

    pub fn setting(&self, label: &str) -> Option<&PhaseSetting> {
        self.settings.iter().find(|s| s.label == label)
    }
}

/// Everything one protocol run produces, outcome-indexed like the circuits.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolData {
    pub z: Observation,
    pub phase: Vec<Observation>,
}

/// Simulates every setting of `protocol` on `prep`.
pub fn run_protocol(
    prep: &NoisyPreparation,
    protocol: Protocol,
    shots: Shots,
    seed: u64,
) -> Result<ProtocolData> {
    let layout = ProtocolLayout::new_with(protocol, prep.ideal().n_qubits(), Exec::Sequential)?;
    run_protocol_with(prep, &layout, shots, seed)
}

/// As [`run_protocol`] with a prebuilt layout. Setting `i` (0 = `z`) samples
/// from substream `substream_seed(seed, &[i])`.
pub fn run_protocol_with(
    prep: &NoisyPreparation,
    layout: &ProtocolLayout,
    shots: Shots,
    seed: u64,
) -> Result<ProtocolData> {
    if layout.n_qubits() != prep.ideal().n_qubits() {
        return Err(Error::DimensionMismatch {
            expected: layout.n_qubits(),
            actual: prep.ideal().n_qubits(),
        });
    }
    let observe = |label: &str, probs: Vec<f64>, index: u64| -> Result<Observation> {
        match shots {
            Shots::Exact => Ok(Observation::Exact(ExactDistribution {
                setting: label.to_string(),
                probabilities: probs,
            })),
            Shots::Finite(m) => {
                let mut rng = ChaCha8Rng::seed_from_u64(substream_seed(seed, &[index]));
                sample_counts_with(&probs, m, &mut rng, label).map(Observation::Counts)
            }
        }
    };
    let z = observe(Z_SETTING, z_probabilities(prep), 0)?;
    let phase = layout
        .settings()
        .iter()
        .enumerate()
        .map(|(i, s)| observe(s.label, s.outcome_probabilities(prep)?, i as u64 + 1))
        .collect::<Result<Vec<_>>>()?;
    Ok(ProtocolData { z, phase })
}
