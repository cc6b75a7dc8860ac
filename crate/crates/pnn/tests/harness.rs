use std::process::Command;

use pnn::suite::{execute, write_suite, ExperimentSuite, SuiteSetting, RunSpec};
use pnn::ConfigFile;
use pnn_core::trainer::{train_config, Scenario, TrainingConfig};

fn small(scenario: Scenario, seed: u64) -> TrainingConfig {
    scenario.configure(
        SuiteSetting::COMPARISON
            .apply(&TrainingConfig::default().with_seed(seed))
            .with_iterations(400),
    )
}

#[test]
fn echoed_config_reproduces_the_run() {
    let config = small(Scenario::OrpnnMfPnPf, 9);
    let text = ConfigFile::echo(&config, Some(Scenario::OrpnnMfPnPf)).to_text().unwrap();
    let parsed = ConfigFile::parse(&text).unwrap().apply(TrainingConfig::default()).unwrap();
    assert_eq!(parsed, config);
    let a = train_config(&config).unwrap();
    let b = train_config(&parsed).unwrap();
    assert_eq!(a.loss_history, b.loss_history);
    assert_eq!(a.final_n1, b.final_n1);
}

#[test]
fn pool_size_does_not_change_outcomes() {
    let suite = ExperimentSuite {
        name: "pool".into(),
        runs: [Scenario::Rrpnn, Scenario::OrpnnPf]
            .into_iter()
            .map(|s| RunSpec {
                label: s.name().into(),
                scenario: Some(s),
                config: small(s, 3),
            })
            .collect(),
        repeats: 3,
    };
    let serial = execute(&suite, 1).unwrap();
    let pooled = execute(&suite, 2).unwrap();
    assert_eq!(serial.len(), 6);
    for (a, b) in serial.iter().zip(&pooled) {
        assert_eq!((a.label.as_str(), a.seed), (b.label.as_str(), b.seed));
        assert_eq!(a.result.as_ref().unwrap().loss_history, b.result.as_ref().unwrap().loss_history);
    }
    assert_eq!(serial.iter().map(|o| o.seed).collect::<Vec<_>>(), [3, 4, 5, 3, 4, 5]);
}

#[test]
fn suite_directory_layout() {
    let tmp = tempfile::tempdir().unwrap();
    let suite = ExperimentSuite {
        name: "layout".into(),
        runs: vec![RunSpec {
            label: "ORPNN-MF(P&N)-PF".into(),
            scenario: Some(Scenario::OrpnnMfPnPf),
            config: small(Scenario::OrpnnMfPnPf, 1),
        }],
        repeats: 2,
    };
    let outcomes = execute(&suite, 1).unwrap();
    let rows = write_suite(tmp.path(), &suite, &outcomes).unwrap();
    assert_eq!(rows.len(), 1);
    assert!(tmp.path().join("summary.csv").is_file());
    assert!(tmp.path().join("ranges.csv").is_file());
    for seed in [1, 2] {
        let run = tmp.path().join("ORPNN-MFP_N-PF").join(format!("seed-{seed}"));
        for file in ["config.toml", "loss.csv", "snapshots.csv", "trajectory.csv", "plot.csv", "report.json"] {
            assert!(run.join(file).is_file(), "{file} missing in {run:?}");
        }
    }
}

#[test]
fn cli_run_and_bad_config() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let status = Command::new(env!("CARGO_BIN_EXE_pnn"))
        .args(["run", "--scenario", "ORPNN-PF", "--iterations", "200", "--seed", "4", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    assert!(out.join("loss.csv").is_file());

    let bad = tmp.path().join("bad.toml");
    std::fs::write(&bad, "schema_version = 1\nunknown_key = 3\n").unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_pnn"))
        .args(["run", "--config"])
        .arg(&bad)
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(2));
}
