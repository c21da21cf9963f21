use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_fourier-tomo"));
    cmd.env_remove("FOURIER_TOMO_SEED");
    cmd
}

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
        .display()
        .to_string()
}

fn run(cmd: &mut Command) -> (i32, String, String) {
    let Output {
        status,
        stdout,
        stderr,
    } = cmd.output().unwrap();
    (
        status.code().unwrap(),
        String::from_utf8(stdout).unwrap(),
        String::from_utf8(stderr).unwrap(),
    )
}

fn fidelity_line(stdout: &str) -> f64 {
    stdout
        .lines()
        .find_map(|l| l.strip_prefix("fidelity: "))
        .expect("fidelity line")
        .parse()
        .unwrap()
}

fn reconstruct(protocol: &str, counts: &[(&str, &str)]) -> (i32, String, String) {
    let mut cmd = bin();
    cmd.args([
        "reconstruct",
        "--protocol",
        protocol,
        "--n",
        "2",
        "--target",
        &data("uniform2.json"),
    ]);
    for (setting, file) in counts {
        cmd.args(["--counts", &format!("{setting}={}", data(file))]);
    }
    run(&mut cmd)
}

#[test]
fn qasm_header_and_protocol2_gate() {
    let (code, out, _) = run(bin().args(["gen-circuit", "--protocol", "1", "--n", "2"]));
    assert_eq!(code, 0);
    assert!(out.starts_with("OPENQASM 2.0;"));
    let (code, out, _) = run(bin().args(["gen-circuit", "--protocol", "2", "--n", "2"]));
    assert_eq!(code, 0);
    assert!(out.contains("cu3(pi/2,-pi/2,2*pi/3)"));
}

#[test]
fn protocol2_writes_two_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p2.qasm");
    let (code, _, _) = run(bin()
        .args(["gen-circuit", "--protocol", "2", "--n", "3", "--out"])
        .arg(&out));
    assert_eq!(code, 0);
    for name in ["p2_d1.qasm", "p2_d2.qasm"] {
        let text = std::fs::read_to_string(dir.path().join(name)).unwrap();
        assert!(text.starts_with("OPENQASM 2.0;"));
    }
}

#[test]
fn unitary_dump_is_column_major_unitary() {
    let (code, out, _) = run(bin().args([
        "gen-circuit",
        "--protocol",
        "1",
        "--n",
        "1",
        "--format",
        "unitary-dump",
    ]));
    assert_eq!(code, 0);
    let entries: Vec<(f64, f64)> = out
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| {
            let mut it = l.split_whitespace().map(|x| x.parse::<f64>().unwrap());
            (it.next().unwrap(), it.next().unwrap())
        })
        .collect();
    assert_eq!(entries.len(), 16);
    for a in 0..4 {
        for b in 0..4 {
            let (mut re, mut im) = (0.0, 0.0);
            for k in 0..4 {
                let (ar, ai) = entries[4 * a + k];
                let (br, bi) = entries[4 * b + k];
                re += ar * br + ai * bi;
                im += ar * bi - ai * br;
            }
            let expect = if a == b { 1.0 } else { 0.0 };
            assert!((re - expect).abs() < 1e-12 && im.abs() < 1e-12);
        }
    }
}

#[test]
fn reconstruct_protocol1_published_counts() {
    let (code, out, err) = reconstruct(
        "1",
        &[
            ("z", "z_sim.json"),
            ("c1_phi0", "p1_sim_phi0.json"),
            ("c1_phi1", "p1_sim_phi1.json"),
        ],
    );
    assert_eq!(code, 0, "{err}");
    assert_eq!(format!("{:.4}", fidelity_line(&out)), "0.9998");
    let (code, out, _) = reconstruct(
        "1",
        &[
            ("z", "z_ibm.json"),
            ("phi0", "p1_ibm_phi0.json"),
            ("phi1", "p1_ibm_phi1.json"),
        ],
    );
    assert_eq!(code, 0);
    assert!((fidelity_line(&out) - 0.9965).abs() <= 0.003);
}

#[test]
fn reconstruct_protocol2_flags_second_circuit() {
    let (code, out, _) = reconstruct(
        "2",
        &[
            ("z", "z_ibm.json"),
            ("d1", "p2_ibm_d1.json"),
            ("d2", "p2_ibm_d2.json"),
        ],
    );
    assert_eq!(code, 0);
    assert!((fidelity_line(&out) - 0.8013).abs() <= 0.01);
    assert!(out.contains("most discrepant setting: d2"));
}

#[test]
fn reconstruct_protocol2_simulator_with_and_without_clamp() {
    let counts = [
        ("z", "z_sim.json"),
        ("d1", "p2_sim_d1.json"),
        ("d2", "p2_sim_d2.json"),
    ];
    let (code, out, _) = reconstruct("2", &counts);
    assert_eq!(code, 0);
    assert!((fidelity_line(&out) - 0.9989).abs() <= 0.003);
    assert!(out.contains("clamped"));
    let mut cmd = bin();
    cmd.args([
        "reconstruct",
        "--protocol",
        "2",
        "--n",
        "2",
        "--no-clamp",
        "--target",
        &data("uniform2.json"),
    ]);
    for (s, f) in counts {
        cmd.args(["--counts", &format!("{s}={}", data(f))]);
    }
    let (code, out, _) = run(&mut cmd);
    assert_eq!(code, 0);
    assert!(out.contains("fidelity: 0.9989"));
}

#[test]
fn reconstruct_writes_json() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("result.json");
    let mut cmd = bin();
    cmd.args(["reconstruct", "--protocol", "2", "--n", "2", "--out"])
        .arg(&path);
    for (s, f) in [
        ("z", "z_sim.json"),
        ("d1", "p2_sim_d1.json"),
        ("d2", "p2_sim_d2.json"),
    ] {
        cmd.args(["--counts", &format!("{s}={}", data(f))]);
    }
    let (code, _, _) = run(&mut cmd);
    assert_eq!(code, 0);
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["phases"][0], 0.0);
    assert_eq!(v["pair_diagnostics"].as_array().unwrap().len(), 3);
    assert!(v["wrap_residual"].is_null());
}

#[test]
fn missing_setting_is_usage_error() {
    let (code, _, err) = reconstruct("2", &[("z", "z_sim.json"), ("d1", "p2_sim_d1.json")]);
    assert_eq!(code, 2);
    assert!(err.contains("d2"));
    let (code, _, _) = reconstruct("2", &[("z", "z_sim.json"), ("c1_phi0", "p1_sim_phi0.json")]);
    assert_eq!(code, 2);
}

#[test]
fn unreadable_file_is_io_error() {
    let (code, _, _) = reconstruct(
        "2",
        &[
            ("z", "nope.json"),
            ("d1", "p2_sim_d1.json"),
            ("d2", "p2_sim_d2.json"),
        ],
    );
    assert_eq!(code, 3);
}

#[test]
fn bad_flags_are_usage_errors() {
    assert_eq!(
        run(bin().args(["gen-circuit", "--protocol", "3", "--n", "2"])).0,
        2
    );
    assert_eq!(run(bin().args(["verify", "--max-n", "7"])).0, 2);
    assert_eq!(run(bin().args(["sweep", "--n", "1"])).0, 2);
}

#[test]
fn verify_passes() {
    let (code, out, _) = run(bin().args(["verify", "--max-n", "3"]));
    assert_eq!(code, 0);
    assert!(out.contains("negative control"));
    assert!(!out.contains("[FAIL]"));
}

#[test]
fn sweep_is_deterministic_and_env_seed_yields_to_flag() {
    let dir = tempfile::tempdir().unwrap();
    let sweep = |name: &str, seed_flag: Option<&str>, env_seed: Option<&str>| {
        let out = dir.path().join(name);
        let mut cmd = bin();
        cmd.args([
            "sweep",
            "--protocol",
            "1,2",
            "--n",
            "2,3",
            "--lambda",
            "0.01",
            "--shots",
            "200",
            "--trials",
            "5",
            "--out",
        ])
        .arg(&out);
        if let Some(s) = seed_flag {
            cmd.args(["--seed", s]);
        }
        if let Some(s) = env_seed {
            cmd.env("FOURIER_TOMO_SEED", s);
        }
        assert_eq!(run(&mut cmd).0, 0);
        std::fs::read_to_string(out).unwrap()
    };
    let a = sweep("a.csv", Some("7"), None);
    let b = sweep("b.csv", Some("7"), Some("99"));
    let c = sweep("c.csv", None, Some("7"));
    let d = sweep("d.csv", None, Some("8"));
    assert_eq!(a, b);
    assert_eq!(a, c);
    assert_ne!(a, d);
    assert!(a.starts_with("protocol,N,lambda,shots,trial,fidelity\n"));
    assert_eq!(a.lines().count(), 1 + 2 * 2 * 5);
    let agg = std::fs::read_to_string(dir.path().join("a_aggregate.csv")).unwrap();
    assert!(agg.starts_with("protocol,N,lambda,shots,trials,mean,std\n"));
    assert_eq!(agg.lines().count(), 1 + 4);
}

#[test]
fn sweep_exact_noiseless_is_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.csv");
    let (code, _, _) = run(bin()
        .args([
            "sweep",
            "--protocol",
            "1",
            "--n",
            "1,2,3,4,5,6,7",
            "--trials",
            "10",
            "--out",
        ])
        .arg(&out));
    assert_eq!(code, 0);
    let text = std::fs::read_to_string(out).unwrap();
    for line in text.lines().skip(1) {
        let f: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!((f - 1.0).abs() < 1e-9, "{line}");
    }
}
