//! Seeded fidelity sweeps over protocol, size, noise and shot budget.
//!
//! Trial `t` at size `N` uses the Haar state seeded by
//! `substream_seed(seed, &[STATE_STREAM, N, t])`, so every protocol, noise
//! level and shot budget sees the same states. Rows are sorted before they
//! are returned, so output does not depend on scheduling.

use std::io::Write;

use serde::Serialize;

use crate::exec::Exec;
use crate::qcore::{fidelity, haar_random_state};
use crate::reconstruct::{ReconstructOptions, Reconstructor};
use crate::sampling::{
    run_protocol_with, substream_seed, NoisyPreparation, Protocol, ProtocolLayout, Shots,
};
use crate::{Error, Result};

const STATE_STREAM: u64 = 0x5354_4154;
const SAMPLE_STREAM: u64 = 0x5341_4d50;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub protocols: Vec<Protocol>,
    pub n_qubits: Vec<usize>,
    pub lambdas: Vec<f64>,
    pub shots: Vec<Shots>,
    pub trials: usize,
    pub seed: u64,
    pub options: ReconstructOptions,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be at least 1".into()));
        }
        if let Some(&l) = self.lambdas.iter().find(|l| !(0.0..=1.0).contains(*l)) {
            return Err(Error::InvalidLambda(l));
        }
        if let Some(&n) = self
            .n_qubits
            .iter()
            .find(|&&n| n == 0 || n > crate::circuits::MAX_SHIFT_QUBITS - 1)
        {
            return Err(Error::QubitRange {
                n,
                min: 1,
                max: crate::circuits::MAX_SHIFT_QUBITS - 1,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub protocol: u8,
    #[serde(rename = "N")]
    pub n: usize,
    pub lambda: f64,
    /// `0` means exact probabilities.
    pub shots: u64,
    pub trial: usize,
    pub fidelity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCell {
    pub protocol: u8,
    #[serde(rename = "N")]
    pub n: usize,
    pub lambda: f64,
    pub shots: u64,
    pub trials: usize,
    pub mean: f64,
    /// Sample standard deviation, `0` for a single trial.
    pub std: f64,
}

/// Fidelity of one reconstruction against its generating state.
pub fn run_trial(
    reconstructor: &Reconstructor,
    lambda: f64,
    shots: Shots,
    seed: u64,
    trial: usize,
) -> Result<f64> {
    let layout = reconstructor.layout();
    let n = layout.n_qubits();
    let state = haar_random_state(
        n,
        substream_seed(seed, &[STATE_STREAM, n as u64, trial as u64]),
    )?;
    let sample_seed = substream_seed(
        seed,
        &[
            SAMPLE_STREAM,
            layout.protocol().number() as u64,
            n as u64,
            lambda.to_bits(),
            shots.as_count(),
            trial as u64,
        ],
    );
    let prep = NoisyPreparation::new(state, lambda)?;
    let data = run_protocol_with(&prep, layout, shots, sample_seed)?;
    let result = reconstructor.reconstruct_data(&data)?;
    fidelity(&result.estimate, prep.ideal())
}

/// Runs every cell of the grid. Trials run concurrently under `Exec::Parallel`.
pub fn run_sweep(config: &SweepConfig, exec: Exec) -> Result<Vec<SweepRow>> {
    config.validate()?;
    let mut jobs = Vec::new();
    for &protocol in &config.protocols {
        for &n in &config.n_qubits {
            let layout = ProtocolLayout::new_with(protocol, n, exec)?;
            let reconstructor = Reconstructor::from_layout(layout, config.options);
            for &lambda in &config.lambdas {
                for &shots in &config.shots {
                    jobs.push((reconstructor.clone(), lambda, shots));
                }
            }
        }
    }
    let tasks: Vec<(usize, usize)> = (0..jobs.len())
        .flat_map(|j| (0..config.trials).map(move |t| (j, t)))
        .collect();
    let results = exec.map_slice(&tasks, |&(j, trial)| {
        let (reconstructor, lambda, shots) = &jobs[j];
        let layout = reconstructor.layout();
        run_trial(reconstructor, *lambda, *shots, config.seed, trial).map(|fidelity| SweepRow {
            protocol: layout.protocol().number(),
            n: layout.n_qubits(),
            lambda: *lambda,
            shots: shots.as_count(),
            trial,
            fidelity,
        })
    });
    let mut rows = results.into_iter().collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| {
        (a.protocol, a.n)
            .cmp(&(b.protocol, b.n))
            .then(a.lambda.total_cmp(&b.lambda))
            .then((a.shots, a.trial).cmp(&(b.shots, b.trial)))
    });
    Ok(rows)
}

/// Mean and sample standard deviation per (protocol, N, lambda, shots).
/// Expects rows in [`run_sweep`] order.
pub fn aggregate(rows: &[SweepRow]) -> Vec<SweepCell> {
    rows.chunk_by(|a, b| {
        (a.protocol, a.n, a.lambda.to_bits(), a.shots)
            == (b.protocol, b.n, b.lambda.to_bits(), b.shots)
    })
    .map(|group| {
        let trials = group.len();
        let mean = group.iter().map(|r| r.fidelity).sum::<f64>() / trials as f64;
        let std = if trials > 1 {
            let ss: f64 = group.iter().map(|r| (r.fidelity - mean).powi(2)).sum();
            (ss / (trials - 1) as f64).sqrt()
        } else {
            0.0
        };
        SweepCell {
            protocol: group[0].protocol,
            n: group[0].n,
            lambda: group[0].lambda,
            shots: group[0].shots,
            trials,
            mean,
            std,
        }
    })
    .collect()
}

fn write_all<T: Serialize, W: Write>(items: &[T], out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    for item in items {
        writer.serialize(item)?;
    }
    writer.flush()?;
    Ok(())
}

/// `protocol,N,lambda,shots,trial,fidelity`.
pub fn write_rows_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    write_all(rows, out)
}

/// `protocol,N,lambda,shots,trials,mean,std`.
pub fn write_cells_csv<W: Write>(cells: &[SweepCell], out: W) -> Result<()> {
    write_all(cells, out)
}
