//! Experiment suites: many seeded runs, a bounded worker pool, summaries.

use std::collections::BTreeSet;
use std::path::Path;

use pnn_core::signal::SignalSpec;
use pnn_core::stats::{median, sample_std};
use pnn_core::trainer::{range_strings, train_config, RunReport, Scenario, TrainingConfig};
use pnn_core::{ForwardMode, LayoutParams};
use rayon::prelude::*;

use crate::error::{HarnessError, Result};
use crate::output;

/// One configuration of a suite, run once per seed.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub label: String,
    pub scenario: Option<Scenario>,
    pub config: TrainingConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSuite {
    pub name: String,
    pub runs: Vec<RunSpec>,
    /// Seeds per run: `config.seed`, `config.seed + 1`, ...
    pub repeats: usize,
}

impl ExperimentSuite {
    pub fn validate(&self) -> Result<()> {
        if self.repeats == 0 {
            return Err(HarnessError::Config("repeats must be at least 1".into()));
        }
        let mut seen = BTreeSet::new();
        for run in &self.runs {
            if !seen.insert(run.label.as_str()) {
                return Err(HarnessError::Config(format!("duplicate run label `{}`", run.label)));
            }
            run.config.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub label: String,
    pub scenario: Option<Scenario>,
    pub seed: u64,
    pub result: std::result::Result<RunReport, pnn_core::Error>,
}

/// Runs every (config, seed) pair on a pool of `jobs` threads (0 = one per
/// core). Outcomes come back in suite order regardless of scheduling.
pub fn execute(suite: &ExperimentSuite, jobs: usize) -> Result<Vec<RunOutcome>> {
    suite.validate()?;
    let tasks: Vec<(&RunSpec, u64)> = suite
        .runs
        .iter()
        .flat_map(|run| (0..suite.repeats as u64).map(move |i| (run, run.config.seed.wrapping_add(i))))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| HarnessError::Config(format!("worker pool: {e}")))?;
    Ok(pool.install(|| {
        tasks
            .par_iter()
            .map(|(run, seed)| {
                let mut config = run.config.clone();
                config.seed = *seed;
                RunOutcome {
                    label: run.label.clone(),
                    scenario: run.scenario,
                    seed: *seed,
                    result: train_config(&config),
                }
            })
            .collect()
    }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub label: String,
    pub scenario: Option<Scenario>,
    pub l_min: usize,
    pub k_max: usize,
    pub runs: usize,
    pub diverged: usize,
    pub corr_median: Option<f64>,
    pub corr_min: Option<f64>,
    pub corr_max: Option<f64>,
    pub log_loss_median: Option<f64>,
    pub pinned: bool,
}

/// One row per run label, in suite order.
pub fn summarize(suite: &ExperimentSuite, outcomes: &[RunOutcome]) -> Vec<SummaryRow> {
    suite
        .runs
        .iter()
        .map(|run| {
            let mine: Vec<&RunOutcome> = outcomes.iter().filter(|o| o.label == run.label).collect();
            let reports: Vec<&RunReport> = mine.iter().filter_map(|o| o.result.as_ref().ok()).collect();
            let corrs: Vec<f64> = reports.iter().filter_map(|r| r.corr_final).collect();
            let losses: Vec<f64> = reports.iter().map(|r| r.final_decile_log_loss()).collect();
            SummaryRow {
                label: run.label.clone(),
                scenario: run.scenario,
                l_min: run.config.layout.l_min,
                k_max: run.config.layout.k_max,
                runs: mine.len(),
                diverged: mine.len() - reports.len(),
                corr_median: median(&corrs),
                corr_min: corrs.iter().copied().reduce(f64::min),
                corr_max: corrs.iter().copied().reduce(f64::max),
                log_loss_median: median(&losses),
                pinned: run.config.layout.pinned(),
            }
        })
        .collect()
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v}")).unwrap_or_default()
}

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record([
        "label", "scenario", "l_min", "k_max", "runs", "diverged", "corr_median", "corr_min", "corr_max",
        "log10_mse_median", "pinned",
    ])?;
    for r in rows {
        w.write_record([
            r.label.clone(),
            r.scenario.map(|s| s.name().to_string()).unwrap_or_default(),
            r.l_min.to_string(),
            r.k_max.to_string(),
            r.runs.to_string(),
            r.diverged.to_string(),
            opt(r.corr_median),
            opt(r.corr_min),
            opt(r.corr_max),
            opt(r.log_loss_median),
            u8::from(r.pinned).to_string(),
        ])?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

/// Range-snapshot matrix: per run, seed and variable, one digit string per
/// synapse across the checkpoints, the std of the final ranges and the final
/// correlation.
pub fn write_ranges(path: &Path, outcomes: &[RunOutcome]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(["label", "seed", "variable", "ranges", "std", "corr"])?;
    for o in outcomes {
        let Ok(report) = &o.result else { continue };
        for (m, row) in report.final_n1.iter().enumerate() {
            let lengths: Vec<f64> = row.iter().map(|&n| n as f64).collect();
            w.write_record([
                o.label.clone(),
                o.seed.to_string(),
                format!("V.{}", m + 1),
                range_strings(report, m).join(" "),
                format!("{:.4}", sample_std(&lengths)),
                opt(report.corr_final),
            ])?;
        }
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

/// Writes per-run directories, `summary.csv` and `ranges.csv` under `dir`.
/// Fails with `AllDiverged` only after everything is written.
pub fn write_suite(dir: &Path, suite: &ExperimentSuite, outcomes: &[RunOutcome]) -> Result<Vec<SummaryRow>> {
    output::create_dir(dir)?;
    for o in outcomes {
        let run_dir = dir.join(sanitize(&o.label)).join(format!("seed-{}", o.seed));
        match &o.result {
            Ok(report) => output::write_run(&run_dir, report, o.scenario)?,
            Err(e) => {
                output::create_dir(&run_dir)?;
                output::write_text(&run_dir.join("error.txt"), &format!("{e}\n"))?;
            }
        }
    }
    let rows = summarize(suite, outcomes);
    write_summary(&dir.join("summary.csv"), &rows)?;
    write_ranges(&dir.join("ranges.csv"), outcomes)?;
    if !outcomes.is_empty() && outcomes.iter().all(|o| o.result.is_err()) {
        return Err(HarnessError::AllDiverged(suite.name.clone()));
    }
    Ok(rows)
}

/// File-system safe form of a run label.
pub fn sanitize(label: &str) -> String {
    label
        .chars()
        .filter(|c| !matches!(c, '(' | ')'))
        .map(|c| match c {
            'a'..='z' | 'A'..='Z' | '0'..='9' | '-' | '_' | '.' => c,
            _ => '_',
        })
        .collect()
}

/// Settings shared by the standard suites.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteSetting {
    pub j_max: usize,
    pub variable_cycle: bool,
}

impl SuiteSetting {
    /// Cosine series, 40000 iterations.
    pub const COMPARISON: SuiteSetting = SuiteSetting { j_max: 40_000, variable_cycle: false };
    /// Variable-cycle series, 80000 iterations with checkpoints every 20000.
    pub const SWEEP: SuiteSetting = SuiteSetting { j_max: 80_000, variable_cycle: true };

    /// Overlays the setting on `base`: signal, iterations and free-running
    /// prediction. Seed, rates and factor parameters stay as in `base`.
    pub fn apply(&self, base: &TrainingConfig) -> TrainingConfig {
        let length = base.signal.length;
        let mut c = base.clone().with_iterations(self.j_max);
        c.signal = if self.variable_cycle {
            SignalSpec::variable_cycle(length)
        } else {
            SignalSpec::cosine(length)
        };
        c.forward_mode = ForwardMode::FreeRunning;
        c
    }
}

pub const SUITE_NAMES: [&str; 5] = ["fig2-4", "fig5", "fig6-11", "tables", "simple-pnn"];

/// The five factor scenarios of the factor comparison.
pub const FACTOR_SCENARIOS: [Scenario; 5] = [
    Scenario::OrpnnPf,
    Scenario::OrpnnMfPPf,
    Scenario::Orpnn,
    Scenario::OrpnnMfP,
    Scenario::OrpnnMfPnPf,
];

pub fn scenario_runs(scenarios: &[Scenario], base: &TrainingConfig) -> Vec<RunSpec> {
    scenarios
        .iter()
        .map(|&s| RunSpec {
            label: s.name().to_string(),
            scenario: Some(s),
            config: s.configure(base.clone()),
        })
        .collect()
}

/// Grid of `l_min` x `k_max` cells for each scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub l_min_values: Vec<usize>,
    pub k_max_values: Vec<usize>,
    pub scenarios: Vec<Scenario>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            l_min_values: vec![2, 3, 4, 5],
            k_max_values: vec![7, 8, 9],
            scenarios: vec![Scenario::OrpnnMfPPf],
        }
    }
}

impl SweepSpec {
    pub fn runs(&self, base: &TrainingConfig) -> Result<Vec<RunSpec>> {
        let mut runs = Vec::new();
        for &scenario in &self.scenarios {
            for &k_max in &self.k_max_values {
                for &l_min in &self.l_min_values {
                    let layout = LayoutParams { k_max, l_min, ..base.layout };
                    layout.validate()?;
                    let config = scenario.configure(TrainingConfig { layout, ..base.clone() });
                    runs.push(RunSpec {
                        label: format!("{}-k{k_max}-l{l_min}", scenario.name()),
                        scenario: Some(scenario),
                        config,
                    });
                }
            }
        }
        Ok(runs)
    }
}

/// Named experiment suite over `base` (seed, rates and factor parameters).
pub fn named_suite(name: &str, base: &TrainingConfig, repeats: usize) -> Result<ExperimentSuite> {
    let runs = match name {
        "fig2-4" => scenario_runs(
            &[Scenario::Crpnn, Scenario::Rrpnn, Scenario::OrpnnMfPPf, Scenario::OrpnnMfPnPf],
            &SuiteSetting::COMPARISON.apply(base),
        ),
        "fig5" => scenario_runs(&FACTOR_SCENARIOS, &SuiteSetting::COMPARISON.apply(base)),
        "fig6-11" => SweepSpec {
            scenarios: FACTOR_SCENARIOS.to_vec(),
            ..SweepSpec::default()
        }
        .runs(&SuiteSetting::SWEEP.apply(base))?,
        "tables" => SweepSpec {
            k_max_values: vec![9],
            scenarios: FACTOR_SCENARIOS.to_vec(),
            ..SweepSpec::default()
        }
        .runs(&SuiteSetting::SWEEP.apply(base))?,
        "simple-pnn" => SweepSpec {
            k_max_values: vec![9],
            scenarios: vec![Scenario::SimplePf, Scenario::SimplePfCorrected],
            ..SweepSpec::default()
        }
        .runs(&SuiteSetting::SWEEP.apply(base))?,
        other => {
            return Err(HarnessError::Config(format!(
                "unknown suite `{other}`; expected one of {}",
                SUITE_NAMES.join(", ")
            )))
        }
    };
    Ok(ExperimentSuite {
        name: name.to_string(),
        runs,
        repeats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn named_suites_are_valid() {
        let base = TrainingConfig::default();
        for name in SUITE_NAMES {
            let suite = named_suite(name, &base, 2).unwrap();
            suite.validate().unwrap();
            assert!(!suite.runs.is_empty());
        }
        assert_eq!(named_suite("fig6-11", &base, 1).unwrap().runs.len(), 60);
        assert_eq!(named_suite("tables", &base, 1).unwrap().runs.len(), 20);
        assert!(named_suite("fig99", &base, 1).is_err());
    }

    #[test]
    fn duplicate_labels_and_zero_repeats_fail() {
        let base = TrainingConfig::default();
        let mut suite = named_suite("fig5", &base, 0).unwrap();
        assert!(suite.validate().is_err());
        suite.repeats = 1;
        suite.runs.push(suite.runs[0].clone());
        assert!(suite.validate().is_err());
    }

    #[test]
    fn pinned_cells_are_flagged() {
        let runs = SweepSpec::default().runs(&TrainingConfig::default()).unwrap();
        let pinned: Vec<&str> = runs
            .iter()
            .filter(|r| r.config.layout.pinned())
            .map(|r| r.label.as_str())
            .collect();
        assert_eq!(pinned, vec!["ORPNN-MF(P)-PF-k9-l5"]);
    }

    #[test]
    fn labels_become_paths() {
        assert_eq!(sanitize("ORPNN-MF(P&N)-PF-k9-l2"), "ORPNN-MFP_N-PF-k9-l2");
        assert_eq!(sanitize("ORPNN-MF(P)"), "ORPNN-MFP");
    }
}
