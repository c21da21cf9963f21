use std::collections::BTreeMap;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use fourier_tomo::bases;
use fourier_tomo::circuits::{self, Circuit};
use fourier_tomo::qcore::PureState;
use fourier_tomo::reconstruct::{ReconstructOptions, ReconstructionResult, Reconstructor};
use fourier_tomo::sampling::{Counts, Observation, Protocol, Shots, Z_SETTING};
use fourier_tomo::sweep::{self, SweepConfig};
use fourier_tomo::verify;
use fourier_tomo::{Complex64, Error, Exec};
use serde::Deserialize;

use crate::{CircuitFormat, GenCircuitArgs, ReconstructArgs, SweepArgs, VerifyArgs};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("verification failed: {0}")]
    Verification(String),
    #[error(transparent)]
    Core(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Verification(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Io { .. } | CliError::Core(Error::Io(_)) => 3,
            CliError::Core(_) => 2,
        }
    }
}

type CliResult<T = ()> = Result<T, CliError>;

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn read_file(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(io_err(path))
}

fn write_file(path: &Path, contents: &str) -> CliResult {
    fs::write(path, contents).map_err(io_err(path))
}

fn create_file(path: &Path) -> CliResult<BufWriter<fs::File>> {
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(io_err(path))
}

fn with_suffix(path: &Path, suffix: &str, default_ext: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    let ext = path
        .extension()
        .and_then(|s| s.to_str())
        .unwrap_or(default_ext);
    path.with_file_name(format!("{stem}{suffix}.{ext}"))
}

fn unitary_dump(c: &Circuit) -> CliResult<String> {
    let u = circuits::circuit_unitary(c)?;
    let dim = u.dim();
    let mut text = format!("# unitary dim={dim} order=column-major fields=re,im\n");
    for col in 0..dim {
        for row in 0..dim {
            let z = u.get(row, col);
            text.push_str(&format!("{} {}\n", z.re, z.im));
        }
    }
    Ok(text)
}

pub fn gen_circuit(args: GenCircuitArgs) -> CliResult {
    let protocol = Protocol::from_number(args.protocol)?;
    let n = args.n;
    let named: Vec<(&str, Circuit, bases::MeasurementBasis)> = match protocol {
        Protocol::One => {
            let c = circuits::build_protocol1_circuit(n)?;
            vec![("c1", c, bases::build_c1(1 << n)?)]
        }
        Protocol::Two => {
            let (c1, c2) = circuits::build_protocol2_circuits(n)?;
            vec![
                ("d1", c1, bases::build_d1(1 << n)?),
                ("d2", c2, bases::build_d2(1 << n)?),
            ]
        }
    };
    let mut outputs = Vec::new();
    for (label, circuit, basis) in &named {
        let check = verify::check_factorization(*label, circuit, basis, Exec::default());
        if !check.passed {
            return Err(CliError::Verification(check.to_string()));
        }
        let text = match args.format {
            CircuitFormat::Qasm => circuits::emit_qasm(circuit, !args.no_measure)?,
            CircuitFormat::UnitaryDump => unitary_dump(circuit)?,
        };
        outputs.push((*label, text));
    }
    let ext = match args.format {
        CircuitFormat::Qasm => "qasm",
        CircuitFormat::UnitaryDump => "txt",
    };
    match (&args.out, outputs.len()) {
        (Some(path), 1) => write_file(path, &outputs[0].1)?,
        (Some(path), _) => {
            for (label, text) in &outputs {
                write_file(&with_suffix(path, &format!("_{label}"), ext), text)?;
            }
        }
        (None, _) => {
            let mut stdout = io::stdout().lock();
            for (label, text) in &outputs {
                if outputs.len() > 1 {
                    let marker = if ext == "qasm" { "//" } else { "#" };
                    writeln!(stdout, "{marker} circuit {label}")
                        .map_err(io_err(Path::new("<stdout>")))?;
                }
                stdout
                    .write_all(text.as_bytes())
                    .map_err(io_err(Path::new("<stdout>")))?;
            }
        }
    }
    Ok(())
}

pub fn sweep(args: SweepArgs) -> CliResult {
    let protocols = args
        .protocol
        .iter()
        .map(|&p| Protocol::from_number(p))
        .collect::<Result<Vec<_>, _>>()?;
    let config = SweepConfig {
        protocols,
        n_qubits: args.n,
        lambdas: args.lambda,
        shots: args.shots.into_iter().map(Shots::from_count).collect(),
        trials: args.trials,
        seed: args.seed,
        options: ReconstructOptions {
            estimator: args.estimator.into(),
            ..Default::default()
        },
    };
    let rows = sweep::run_sweep(&config, args.exec.exec())?;
    let cells = sweep::aggregate(&rows);
    let aggregate_path = args
        .aggregate
        .unwrap_or_else(|| with_suffix(&args.out, "_aggregate", "csv"));
    sweep::write_rows_csv(&rows, create_file(&args.out)?)?;
    sweep::write_cells_csv(&cells, create_file(&aggregate_path)?)?;
    for c in &cells {
        println!(
            "protocol {} N={} lambda={} shots={} mean={:.6} std={:.6}",
            c.protocol,
            c.n,
            c.lambda,
            Shots::from_count(c.shots),
            c.mean,
            c.std
        );
    }
    Ok(())
}

/// Canonical setting label, accepting a few spellings.
fn canonical_setting(raw: &str, protocol: Protocol) -> Option<&'static str> {
    let key = raw.trim().to_ascii_lowercase();
    let label = match key.as_str() {
        "z" => Z_SETTING,
        "c1_phi0" | "phi0" | "c1_0" => "c1_phi0",
        "c1_phi1" | "phi1" | "c1_1" => "c1_phi1",
        "d1" => "d1",
        "d2" => "d2",
        _ => return None,
    };
    protocol.setting_labels().contains(&label).then_some(label)
}

#[derive(Deserialize)]
struct TargetFile {
    amplitudes: Vec<Complex64>,
}

fn load_target(path: &Path) -> CliResult<PureState> {
    let target: TargetFile = serde_json::from_str(&read_file(path)?)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    Ok(PureState::normalized(target.amplitudes)?)
}

fn print_report(result: &ReconstructionResult, target: Option<&PureState>) -> CliResult<()> {
    println!("k  amplitude  phase");
    for (k, (a, t)) in result.amplitudes.iter().zip(&result.phases).enumerate() {
        let mark = if result.untrusted[k] {
            " untrusted"
        } else {
            ""
        };
        println!("{k}  {a:.6}  {t:+.6}{mark}");
    }
    println!("setting  pair  cos_raw  sin_raw  delta  conditioning  flags");
    for p in &result.pair_diagnostics {
        let mut flags = Vec::new();
        if p.clamped {
            flags.push("clamped");
        }
        if p.undetermined {
            flags.push("undetermined");
        }
        println!(
            "{}  ({},{})  {:+.6}  {:+.6}  {:+.6}  {:.6}  {}",
            p.setting,
            p.pair.0,
            p.pair.1,
            p.cos_raw,
            p.sin_raw,
            p.delta,
            p.conditioning,
            flags.join(",")
        );
    }
    if let Some(w) = result.wrap_residual {
        println!("wrap residual: {w:.6}");
    }
    if let Some(s) = result.most_discrepant_setting() {
        println!("most discrepant setting: {s}");
    }
    if let Some(t) = target {
        println!("fidelity: {:.4}", result.fidelity(t)?);
    }
    Ok(())
}

pub fn reconstruct(args: ReconstructArgs) -> CliResult {
    let protocol = Protocol::from_number(args.protocol)?;
    let n = args.n;
    if n == 0 || n >= circuits::MAX_SHIFT_QUBITS {
        return Err(CliError::Usage(format!(
            "--n must be in 1..{}",
            circuits::MAX_SHIFT_QUBITS
        )));
    }
    let d = 1usize << n;
    let mut files: BTreeMap<&'static str, PathBuf> = BTreeMap::new();
    for spec in &args.counts {
        let (raw, path) = spec.split_once('=').ok_or_else(|| {
            CliError::Usage(format!("--counts expects SETTING=PATH, got `{spec}`"))
        })?;
        let label = canonical_setting(raw, protocol).ok_or_else(|| {
            CliError::Usage(format!(
                "unknown setting `{raw}` for protocol {protocol}; expected one of {:?}",
                protocol.setting_labels()
            ))
        })?;
        if files.insert(label, PathBuf::from(path)).is_some() {
            return Err(CliError::Usage(format!("setting `{label}` given twice")));
        }
    }
    let mut observations: BTreeMap<&str, Observation> = BTreeMap::new();
    for &label in protocol.setting_labels() {
        let path = files
            .get(label)
            .ok_or_else(|| CliError::Core(Error::MissingSetting(label.to_string())))?;
        let outcomes = if label == Z_SETTING { d } else { 2 * d };
        let counts = Counts::from_json(&read_file(path)?, outcomes)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let declared = counts.setting().to_string();
        if !declared.is_empty() && canonical_setting(&declared, protocol) != Some(label) {
            eprintln!(
                "warning: {} declares setting `{declared}`, used as `{label}`",
                path.display()
            );
        }
        observations.insert(label, counts.with_setting(label).into());
    }
    let options = ReconstructOptions {
        estimator: args.estimator.into(),
        clamp_cosines: !args.no_clamp,
        ..Default::default()
    };
    let reconstructor = Reconstructor::new(protocol, n, options)?;
    let labels = protocol.setting_labels();
    let phase: Vec<Observation> = labels[1..]
        .iter()
        .map(|l| observations[l].clone())
        .collect();
    let result = reconstructor.reconstruct(&observations[Z_SETTING], &phase)?;
    let target = args.target.as_deref().map(load_target).transpose()?;
    if let Some(t) = &target {
        if t.dim() != d {
            return Err(CliError::Usage(format!(
                "target has dimension {}, expected {d}",
                t.dim()
            )));
        }
    }
    println!("protocol {protocol}, N={n}");
    print_report(&result, target.as_ref())?;
    if let Some(out) = &args.out {
        write_file(out, &result.to_json()?)?;
    }
    Ok(())
}

pub fn verify(args: VerifyArgs) -> CliResult {
    if !(1..=verify::MAX_VERIFY_QUBITS).contains(&args.max_n) {
        return Err(CliError::Usage(format!(
            "--max-n must be in 1..={}",
            verify::MAX_VERIFY_QUBITS
        )));
    }
    let report = verify::run_verify(args.max_n, args.exec.exec())?;
    for check in &report.checks {
        println!("{check}");
    }
    let failed: Vec<&str> = report.failures().map(|c| c.name.as_str()).collect();
    if failed.is_empty() {
        println!("all {} checks passed", report.checks.len());
        Ok(())
    } else {
        Err(CliError::Verification(failed.join(", ")))
    }
}
