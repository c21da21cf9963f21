//! Amplitude and phase-chain estimation.
//!
//! Amplitudes come from the `Z` setting, `a_k = sqrt(P_k)`. Each Fourier group
//! of a phase setting overlaps two neighbouring labels `(i, j)` and yields the
//! relative phase `delta = theta_j - theta_i`:
//!
//! ```text
//! four-point group:   cos = (4 P_row0 - P_i - P_j) / (2 sqrt(P_i P_j))
//!                     sin = (4 P_row1 - P_i - P_j) / (2 sqrt(P_i P_j))
//! three-point group:  cos           = (3 P_row0 - P_i - P_j) / (2 sqrt(P_i P_j))
//!                     cos(d - 2pi/3) = (3 P_row1 - P_i - P_j) / (2 sqrt(P_i P_j))
//!                     sin = (2 cos(d - 2pi/3) + cos) / sqrt(3)
//! ```
//!
//! Chaining the pairs `(0,1), (1,2), ...` fixes every phase with `theta_0 = 0`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::qcore::{self, PureState};
use crate::sampling::{Counts, Observation, Protocol, ProtocolData, ProtocolLayout};
use crate::{Complex64, Error, Result};

pub const DEFAULT_CONDITIONING_FLOOR: f64 = 1e-6;

/// How a `(cos, sin)` estimate becomes an angle.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhaseEstimator {
    /// Full-circle `atan2(sin, cos)`.
    #[default]
    Atan2,
    /// Principal `atan(sin / cos)` in `(-pi/2, pi/2]`.
    Tangent,
}

impl PhaseEstimator {
    pub fn angle(self, cos: f64, sin: f64) -> f64 {
        match self {
            PhaseEstimator::Atan2 => sin.atan2(cos),
            PhaseEstimator::Tangent if cos == 0.0 => {
                if sin < 0.0 {
                    -PI / 2.0
                } else {
                    PI / 2.0
                }
            }
            PhaseEstimator::Tangent => (sin / cos).atan(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReconstructOptions {
    pub estimator: PhaseEstimator,
    /// Pairs with `sqrt(P_i P_j)` below this are left undetermined.
    pub conditioning_floor: f64,
    /// Clamp three-point cosines to `[-1, 1]` before inverting.
    pub clamp_cosines: bool,
}

impl Default for ReconstructOptions {
    fn default() -> Self {
        Self {
            estimator: PhaseEstimator::Atan2,
            conditioning_floor: DEFAULT_CONDITIONING_FLOOR,
            clamp_cosines: true,
        }
    }
}

/// Diagnostics for one neighbouring-label pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhasePairEstimate {
    /// Setting the pair was read from.
    pub setting: String,
    pub pair: (usize, usize),
    pub cos_raw: f64,
    pub sin_raw: f64,
    /// Raw `cos(delta - 2pi/3)`, three-point groups only.
    pub cos_shifted_raw: Option<f64>,
    pub clamped: bool,
    /// `theta_j - theta_i` in `[-pi, pi)`.
    pub delta: f64,
    /// `sqrt(P_i P_j)`.
    pub conditioning: f64,
    pub undetermined: bool,
    /// `|1 - hypot(cos_raw, sin_raw)|`.
    pub norm_defect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionResult {
    pub protocol: Protocol,
    pub amplitudes: Vec<f64>,
    /// `theta_0 = 0`.
    pub phases: Vec<f64>,
    /// Set from the first undetermined pair onwards.
    pub untrusted: Vec<bool>,
    /// Chain pairs first, then the closing pair if any.
    pub pair_diagnostics: Vec<PhasePairEstimate>,
    /// Closure defect of the phase cycle, protocol 1 only.
    pub wrap_residual: Option<f64>,
    pub estimate: PureState,
}

impl ReconstructionResult {
    pub fn fidelity(&self, target: &PureState) -> Result<f64> {
        qcore::fidelity(&self.estimate, target)
    }

    /// Setting whose pairs deviate most from `cos^2 + sin^2 = 1`.
    pub fn most_discrepant_setting(&self) -> Option<&str> {
        let mut worst: Option<(&str, f64)> = None;
        for p in self.pair_diagnostics.iter().filter(|p| !p.undetermined) {
            if worst.is_none_or(|(_, d)| p.norm_defect > d) {
                worst = Some((&p.setting, p.norm_defect));
            }
        }
        worst.map(|(s, _)| s)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Reduces an angle to `[-pi, pi)`.
pub fn wrap_phase(x: f64) -> f64 {
    let y = x - 2.0 * PI * ((x + PI) / (2.0 * PI)).floor();
    if y >= PI {
        y - 2.0 * PI
    } else {
        y
    }
}

fn check_outcomes(obs: &Observation, dim: usize) -> Result<()> {
    match obs {
        Observation::Counts(c) => match c.max_outcome() {
            Some(m) if m >= dim => Err(Error::InvalidCounts(format!(
                "setting `{}` has outcome {m} outside 0..{dim}",
                c.setting()
            ))),
            _ => Ok(()),
        },
        Observation::Exact(e) if e.probabilities.len() > dim => Err(Error::DimensionMismatch {
            expected: dim,
            actual: e.probabilities.len(),
        }),
        Observation::Exact(_) => Ok(()),
    }
}

/// `a_k = sqrt(P_k)` from the `Z` setting.
pub fn estimate_amplitudes(z: &Observation, n_qubits: usize) -> Result<Vec<f64>> {
    let d = 1usize << n_qubits;
    check_outcomes(z, d)?;
    let a: Vec<f64> = (0..d).map(|k| z.probability(k).max(0.0).sqrt()).collect();
    if a.iter().all(|&x| x == 0.0) {
        return Err(Error::InvalidCounts("Z setting has no counts".into()));
    }
    Ok(a)
}

/// `sum_k a_k e^{i theta_k} |k>`, renormalized.
pub fn assemble_state(amplitudes: &[f64], phases: &[f64]) -> Result<PureState> {
    if amplitudes.len() != phases.len() {
        return Err(Error::DimensionMismatch {
            expected: amplitudes.len(),
            actual: phases.len(),
        });
    }
    if let Some(a) = amplitudes.iter().find(|a| **a < 0.0 || !a.is_finite()) {
        return Err(Error::InvalidProbabilities(format!("amplitude {a}")));
    }
    PureState::normalized(
        amplitudes
            .iter()
            .zip(phases)
            .map(|(&a, &t)| Complex64::from_polar(a, t))
            .collect(),
    )
}

/// Splits a state into moduli and phases relative to `theta_0`. When
/// `a_0 = 0` the phases are taken as absolute.
pub fn decompose_state(state: &PureState) -> (Vec<f64>, Vec<f64>) {
    let amps = state.amplitudes();
    let reference = if amps[0].norm() > 0.0 {
        amps[0].arg()
    } else {
        0.0
    };
    amps.iter()
        .map(|z| {
            let theta = if z.norm() > 0.0 {
                wrap_phase(z.arg() - reference)
            } else {
                0.0
            };
            (z.norm(), theta)
        })
        .unzip()
}

enum GroupKind {
    FourPoint,
    ThreePoint,
}

struct PairSpec {
    setting: usize,
    group: usize,
    pair: (usize, usize),
}

/// Phase reconstruction for one protocol at one size.
#[derive(Debug, Clone)]
pub struct Reconstructor {
    layout: ProtocolLayout,
    options: ReconstructOptions,
}

impl Reconstructor {
    pub fn new(protocol: Protocol, n_qubits: usize, options: ReconstructOptions) -> Result<Self> {
        Ok(Self::from_layout(
            ProtocolLayout::new(protocol, n_qubits)?,
            options,
        ))
    }

    pub fn from_layout(layout: ProtocolLayout, options: ReconstructOptions) -> Self {
        Self { layout, options }
    }

    pub fn layout(&self) -> &ProtocolLayout {
        &self.layout
    }

    pub fn options(&self) -> ReconstructOptions {
        self.options
    }

    pub fn dim(&self) -> usize {
        1 << self.layout.n_qubits()
    }

    /// Chain pairs in order, plus the protocol-1 closing pair.
    fn pair_specs(&self) -> (Vec<PairSpec>, Option<PairSpec>) {
        let d = self.dim();
        let half = d / 2;
        let mut chain = Vec::with_capacity(d - 1);
        for j in 0..d - 1 {
            let (setting, group) = if j % 2 == 0 {
                (0, j / 2)
            } else {
                (1, (j - 1) / 2)
            };
            chain.push(PairSpec {
                setting,
                group,
                pair: (j, j + 1),
            });
        }
        let closing = match self.layout.protocol() {
            Protocol::One => Some(PairSpec {
                setting: 1,
                group: half - 1,
                pair: (d - 1, 0),
            }),
            Protocol::Two => None,
        };
        (chain, closing)
    }

    fn estimate_pair(
        &self,
        spec: &PairSpec,
        amplitudes: &[f64],
        phase: &[Observation],
    ) -> PhasePairEstimate {
        let setting = &self.layout.settings()[spec.setting];
        let kind = match self.layout.protocol() {
            Protocol::One => GroupKind::FourPoint,
            Protocol::Two => GroupKind::ThreePoint,
        };
        let obs = &phase[spec.setting];
        let element_probability =
            |row: usize| obs.probability(setting.outcome_of_element[4 * spec.group + row]);
        let (i, j) = spec.pair;
        let (pi, pj) = (amplitudes[i].powi(2), amplitudes[j].powi(2));
        let conditioning = (pi * pj).sqrt();
        let mut est = PhasePairEstimate {
            setting: setting.label.to_string(),
            pair: spec.pair,
            cos_raw: 0.0,
            sin_raw: 0.0,
            cos_shifted_raw: None,
            clamped: false,
            delta: 0.0,
            conditioning,
            undetermined: conditioning < self.options.conditioning_floor,
            norm_defect: 0.0,
        };
        if est.undetermined {
            return est;
        }
        let den = 2.0 * conditioning;
        let (cos, sin) = match kind {
            GroupKind::FourPoint => {
                est.cos_raw = (4.0 * element_probability(0) - pi - pj) / den;
                est.sin_raw = (4.0 * element_probability(1) - pi - pj) / den;
                est.clamped = est.cos_raw.abs() > 1.0 || est.sin_raw.abs() > 1.0;
                let norm = est.cos_raw.hypot(est.sin_raw);
                if norm > 1.0 {
                    (est.cos_raw / norm, est.sin_raw / norm)
                } else {
                    (est.cos_raw, est.sin_raw)
                }
            }
            GroupKind::ThreePoint => {
                let c = (3.0 * element_probability(0) - pi - pj) / den;
                let cw = (3.0 * element_probability(1) - pi - pj) / den;
                est.cos_raw = c;
                est.cos_shifted_raw = Some(cw);
                est.sin_raw = (2.0 * cw + c) / 3f64.sqrt();
                est.clamped = c.abs() > 1.0 || cw.abs() > 1.0;
                let (c, cw) = if self.options.clamp_cosines {
                    (c.clamp(-1.0, 1.0), cw.clamp(-1.0, 1.0))
                } else {
                    (c, cw)
                };
                (c, (2.0 * cw + c) / 3f64.sqrt())
            }
        };
        est.norm_defect = (1.0 - est.cos_raw.hypot(est.sin_raw)).abs();
        est.delta = wrap_phase(self.options.estimator.angle(cos, sin));
        est
    }

    /// `phase` holds the observations in [`ProtocolLayout::settings`] order.
    pub fn reconstruct(
        &self,
        z: &Observation,
        phase: &[Observation],
    ) -> Result<ReconstructionResult> {
        let n = self.layout.n_qubits();
        let d = self.dim();
        let labels: Vec<&str> = self.layout.settings().iter().map(|s| s.label).collect();
        if phase.len() != labels.len() {
            return Err(Error::MissingSetting(format!(
                "expected settings {labels:?}, got {}",
                phase.len()
            )));
        }
        for obs in phase {
            check_outcomes(obs, 2 * d)?;
        }
        let amplitudes = estimate_amplitudes(z, n)?;
        let (chain, closing) = self.pair_specs();
        let mut phases = vec![0.0; d];
        let mut untrusted = vec![false; d];
        let mut diagnostics = Vec::with_capacity(d);
        for spec in &chain {
            let est = self.estimate_pair(spec, &amplitudes, phase);
            let (i, j) = spec.pair;
            phases[j] = wrap_phase(phases[i] + est.delta);
            untrusted[j] = untrusted[i] || est.undetermined;
            diagnostics.push(est);
        }
        let wrap_residual = closing.map(|spec| {
            let est = self.estimate_pair(&spec, &amplitudes, phase);
            let residual = wrap_phase(phases[d - 1] + est.delta).abs();
            diagnostics.push(est);
            residual
        });
        let estimate = assemble_state(&amplitudes, &phases)?;
        Ok(ReconstructionResult {
            protocol: self.layout.protocol(),
            amplitudes,
            phases,
            untrusted,
            pair_diagnostics: diagnostics,
            wrap_residual,
            estimate,
        })
    }

    pub fn reconstruct_data(&self, data: &ProtocolData) -> Result<ReconstructionResult> {
        self.reconstruct(&data.z, &data.phase)
    }
}

/// Protocol-1 reconstruction with default options.
pub fn phases_protocol1(
    c1_phi0: &Observation,
    c1_phi1: &Observation,
    z: &Observation,
    n_qubits: usize,
) -> Result<ReconstructionResult> {
    Reconstructor::new(Protocol::One, n_qubits, ReconstructOptions::default())?
        .reconstruct(z, &[c1_phi0.clone(), c1_phi1.clone()])
}

/// Protocol-2 reconstruction with default options.
pub fn phases_protocol2(
    d1: &Observation,
    d2: &Observation,
    z: &Observation,
    n_qubits: usize,
) -> Result<ReconstructionResult> {
    Reconstructor::new(Protocol::Two, n_qubits, ReconstructOptions::default())?
        .reconstruct(z, &[d1.clone(), d2.clone()])
}

/// Parses and validates a counts file for an `outcome_dim`-outcome setting.
pub fn parse_counts_file(text: &str, outcome_dim: usize) -> Result<Counts> {
    Counts::from_json(text, outcome_dim)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::haar_random_state;
    use crate::sampling::{run_protocol, NoisyPreparation, Shots};
    use proptest::prelude::*;

    fn counts(setting: &str, c: &[u64]) -> Observation {
        Counts::from_slice(8192, setting, c).unwrap().into()
    }

    fn exact(state: &PureState, protocol: Protocol) -> (Reconstructor, ProtocolData) {
        let r =
            Reconstructor::new(protocol, state.n_qubits(), ReconstructOptions::default()).unwrap();
        let data = run_protocol(
            &NoisyPreparation::pure(state.clone()),
            protocol,
            Shots::Exact,
            0,
        )
        .unwrap();
        (r, data)
    }

    #[test]
    fn amplitudes_from_counts() {
        let z = counts("z", &[8192]);
        assert_eq!(
            estimate_amplitudes(&z, 2).unwrap(),
            vec![1.0, 0.0, 0.0, 0.0]
        );
        let z = counts("z", &[2089, 2005, 1984, 2114]);
        let a = estimate_amplitudes(&z, 2).unwrap();
        for (x, n) in a.iter().zip([2089.0f64, 2005.0, 1984.0, 2114.0]) {
            assert_eq!(*x, (n / 8192.0).sqrt());
        }
        for (x, e) in a.iter().zip([0.5050, 0.4947, 0.4921, 0.5080]) {
            assert!((x - e).abs() < 5e-5, "{x} vs {e}");
        }
        assert!(estimate_amplitudes(&counts("z", &[0, 0, 0, 0, 1]), 2).is_err());
    }

    #[test]
    fn worked_tangent_example() {
        let z = counts("z", &[2089, 2005, 1984, 2114]);
        let phi0 = counts("c1_phi0", &[2114, 1028, 2056, 1014]);
        let phi1 = counts("c1_phi1", &[2000, 998, 2035, 1041]);
        let r = phases_protocol1(&phi0, &phi1, &z, 2).unwrap();
        let p = &r.pair_diagnostics[0];
        assert_eq!(p.pair, (0, 1));
        assert!((p.sin_raw / p.cos_raw - 18.0 / 4362.0).abs() < 1e-15);
        assert!((r.phases[1] - (18.0f64 / 4362.0).atan()).abs() < 1e-12);
        assert!((r.phases[1] - 0.00413).abs() < 5e-6);
    }

    #[test]
    fn assemble_examples() {
        let s = assemble_state(&[1.0, 0.0], &[0.0, 1.7]).unwrap();
        assert_eq!(s, PureState::basis(1, 0).unwrap());
        let s = assemble_state(&[0.5; 4], &[0.0, PI / 2.0, PI, -PI / 2.0]).unwrap();
        let expect = [(0.5, 0.0), (0.0, 0.5), (-0.5, 0.0), (0.0, -0.5)];
        for (z, (re, im)) in s.amplitudes().iter().zip(expect) {
            assert!((z.re - re).abs() < 1e-15 && (z.im - im).abs() < 1e-15);
        }
        assert!(assemble_state(&[0.0, 0.0], &[0.0, 0.0]).is_err());
        assert!(assemble_state(&[1.0], &[0.0, 0.0]).is_err());
        assert!(assemble_state(&[-1.0, 0.0], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn wrap_phase_range() {
        assert_eq!(wrap_phase(PI), -PI);
        assert_eq!(wrap_phase(-PI), -PI);
        assert!((wrap_phase(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
        assert!((wrap_phase(-7.0) - (-7.0 + 2.0 * PI)).abs() < 1e-15);
    }

    #[test]
    fn uniform_exact_protocol2_cosine_is_one() {
        let (r, data) = exact(&PureState::uniform(2).unwrap(), Protocol::Two);
        let res = r.reconstruct_data(&data).unwrap();
        for p in &res.pair_diagnostics {
            assert!((p.cos_raw - 1.0).abs() < 1e-12);
            assert!(p.delta.abs() < 1e-12);
        }
        assert_eq!(res.wrap_residual, None);
    }

    #[test]
    fn protocol2_pairs_skip_uninformative_group() {
        let (r, data) = exact(&haar_random_state(3, 8).unwrap(), Protocol::Two);
        let res = r.reconstruct_data(&data).unwrap();
        let pairs: Vec<_> = res
            .pair_diagnostics
            .iter()
            .map(|p| (p.setting.as_str(), p.pair))
            .collect();
        assert_eq!(
            pairs,
            vec![
                ("d1", (0, 1)),
                ("d2", (1, 2)),
                ("d1", (2, 3)),
                ("d2", (3, 4)),
                ("d1", (4, 5)),
                ("d2", (5, 6)),
                ("d1", (6, 7)),
            ]
        );
    }

    #[test]
    fn zero_amplitude_marks_downstream_untrusted() {
        let mut amps = haar_random_state(2, 3).unwrap().into_amplitudes();
        amps[2] = Complex64::new(0.0, 0.0);
        let state = PureState::normalized(amps).unwrap();
        let (r, data) = exact(&state, Protocol::One);
        let res = r.reconstruct_data(&data).unwrap();
        assert_eq!(res.untrusted, vec![false, false, true, true]);
        assert!(res.pair_diagnostics[1].undetermined);
        assert_eq!(res.pair_diagnostics[1].delta, 0.0);
    }

    #[test]
    fn tangent_estimator_folds_quadrant() {
        assert!((PhaseEstimator::Tangent.angle(-1.0, 0.0)).abs() < 1e-15);
        assert!((PhaseEstimator::Atan2.angle(-1.0, 0.0) - PI).abs() < 1e-15);
        assert_eq!(PhaseEstimator::Tangent.angle(0.0, -2.0), -PI / 2.0);
    }

    #[test]
    fn missing_setting_rejected() {
        let (r, data) = exact(&PureState::uniform(1).unwrap(), Protocol::One);
        assert!(matches!(
            r.reconstruct(&data.z, &data.phase[..1]),
            Err(Error::MissingSetting(_))
        ));
    }

    #[test]
    fn result_serializes() {
        let (r, data) = exact(&haar_random_state(2, 1).unwrap(), Protocol::One);
        let res = r.reconstruct_data(&data).unwrap();
        let back: ReconstructionResult = serde_json::from_str(&res.to_json().unwrap()).unwrap();
        assert_eq!(back.phases.len(), 4);
        assert!(back.wrap_residual.unwrap() < 1e-10);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn exact_round_trip_and_consistency(seed in 0u64..100_000, n in 1usize..6) {
            let state = haar_random_state(n, seed).unwrap();
            let (r1, data1) = exact(&state, Protocol::One);
            let (r2, data2) = exact(&state, Protocol::Two);
            let res1 = r1.reconstruct_data(&data1).unwrap();
            let res2 = r2.reconstruct_data(&data2).unwrap();
            prop_assert!(res1.fidelity(&state).unwrap() >= 1.0 - 1e-9);
            prop_assert!(res2.fidelity(&state).unwrap() >= 1.0 - 1e-9);
            prop_assert!(res1.wrap_residual.unwrap() < 1e-9);
            for (a, b) in res1.phases.iter().zip(&res2.phases) {
                prop_assert!(wrap_phase(a - b).abs() < 1e-8);
            }
            for p in res1.pair_diagnostics.iter().chain(&res2.pair_diagnostics) {
                prop_assert!((p.cos_raw.powi(2) + p.sin_raw.powi(2) - 1.0).abs() < 1e-10);
                prop_assert!(!p.clamped || p.cos_raw.abs() - 1.0 < 1e-12);
            }
        }

        #[test]
        fn global_phase_invariance(seed in 0u64..100_000, n in 1usize..5, alpha in -PI..PI) {
            let state = haar_random_state(n, seed).unwrap();
            for protocol in [Protocol::One, Protocol::Two] {
                let (r, a) = exact(&state, protocol);
                let (_, b) = exact(&state.with_global_phase(alpha), protocol);
                let ra = r.reconstruct_data(&a).unwrap();
                let rb = r.reconstruct_data(&b).unwrap();
                for (x, y) in ra.phases.iter().zip(&rb.phases) {
                    prop_assert!(wrap_phase(x - y).abs() < 1e-10);
                }
                prop_assert_eq!(rb.phases[0], 0.0);
            }
        }

        #[test]
        fn decompose_assemble_round_trip(seed in 0u64..100_000, n in 1usize..7) {
            let state = haar_random_state(n, seed).unwrap();
            let (a, t) = decompose_state(&state);
            prop_assert_eq!(t[0], 0.0);
            let back = assemble_state(&a, &t).unwrap();
            prop_assert!(qcore::fidelity(&back, &state).unwrap() >= 1.0 - 1e-12);
        }
    }
}
