//! Acceptance gate for the command-line surface: identical config and seed
//! must yield byte-identical output, both on stdout and through --out.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_bellspace");

fn tmp(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

const CONFIG: &str = r#"{
  "state": { "type": "singlet" },
  "armA": {
    "bs": { "r": 0.7071067811865476 },
    "omega1": { "theta": 0.0, "phi": 0.0 },
    "omega2": { "theta": "90 deg", "phi": 0.0 }
  },
  "armB": {
    "bs": { "r": 0.7071067811865476 },
    "omega1": { "theta": "45 deg", "phi": 0.0 },
    "omega2": { "theta": "135 deg", "phi": 0.0 }
  },
  "space": 1,
  "scan": {
    "params": [
      { "key": "armA.theta2", "lo": 0.0, "hi": "180 deg", "count": 8 },
      { "key": "armB.theta1", "lo": 0.0, "hi": "180 deg", "count": 8 },
      { "key": "armB.theta2", "lo": 0.0, "hi": "180 deg", "count": 8 }
    ],
    "objective": "standard"
  }
}"#;

#[test]
fn criterion_12_deterministic_outputs() {
    let config = tmp("acceptance_config.json");
    fs::write(&config, CONFIG).unwrap();
    let config = config.to_str().unwrap();

    let invocations: [(&str, Vec<&str>); 4] = [
        ("bell", vec!["bell", "--config", config]),
        ("scan grid", vec!["scan", "grid", "--config", config, "--format", "csv"]),
        ("scan refine", vec!["scan", "refine", "--config", config]),
        (
            "sample",
            vec!["sample", "--config", config, "--n", "100000", "--seed", "20260815"],
        ),
    ];

    let mut failures = Vec::new();
    for (label, args) in &invocations {
        let first = run(args);
        let second = run(args);
        if !first.status.success() || !second.status.success() {
            failures.push(format!(
                "{label}: exit {:?}/{:?}",
                first.status.code(),
                second.status.code()
            ));
            continue;
        }
        if first.stdout != second.stdout {
            failures.push(format!("{label}: stdout differs between runs"));
        }
        let file_a = tmp(&format!("{}_a.out", label.replace(' ', "_")));
        let file_b = tmp(&format!("{}_b.out", label.replace(' ', "_")));
        let mut with_out = args.clone();
        with_out.extend(["--out", file_a.to_str().unwrap()]);
        let status_a = run(&with_out).status;
        with_out.truncate(args.len());
        with_out.extend(["--out", file_b.to_str().unwrap()]);
        let status_b = run(&with_out).status;
        if !status_a.success() || !status_b.success() {
            failures.push(format!("{label}: --out run failed"));
            continue;
        }
        let bytes_a = fs::read(&file_a).unwrap();
        let bytes_b = fs::read(&file_b).unwrap();
        if bytes_a != bytes_b {
            failures.push(format!("{label}: output files differ"));
        }
        if bytes_a != first.stdout {
            failures.push(format!("{label}: file and stdout differ"));
        }
    }

    if failures.is_empty() {
        println!(
            "[PASS] criterion 12: bell, scan and sample are byte-identical across repeated runs"
        );
    } else {
        println!("[FAIL] criterion 12: {}", failures.join("; "));
        panic!("criterion 12 failed: {}", failures.join("; "));
    }
}
