//! Command orchestration shared by the CLI binary and the examples.
//!
//! A [`RunConfig`] names one of five workflows and the knobs it needs;
//! [`RunConfig::execute`] performs all computation first, then writes every
//! artifact plus a `manifest.json` (config echo and sha256 per artifact)
//! into the output directory. Artifacts contain no timestamps or absolute
//! paths, so rerunning an identical config reproduces identical bytes.

pub mod output;
pub mod verify;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use serde::Serialize;

use crate::bounds;
use crate::error::{Error, Result};
use crate::sim::{monte_carlo, monte_carlo_detailed, StoppingPolicy};
use crate::solver::{psi_star, solve, PolicyTable, SolverConfig};

use output::fmt_sig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CommandKind {
    Solve,
    Profile,
    Simulate,
    Bounds,
    Verify,
}

/// Everything one run needs. `gamma = None` asks for the certified grid
/// derived from `epsilon`; an explicit value is the desk-scale override.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: CommandKind,
    #[serde(rename = "T")]
    pub horizon: usize,
    pub epsilon: f64,
    pub gamma: Option<f64>,
    pub q: f64,
    pub n_paths: u64,
    pub seed: u64,
    #[serde(skip)]
    pub out_dir: PathBuf,
    pub refine_theta: bool,
    pub store_full_grid: bool,
    pub dump_paths: bool,
    /// Slice exported by `profile`; defaults to the horizon.
    pub profile_t: Option<usize>,
}

impl RunConfig {
    pub fn new(command: CommandKind, horizon: usize) -> Self {
        RunConfig {
            command,
            horizon,
            epsilon: 0.1,
            gamma: Some(0.01),
            q: 0.5,
            n_paths: 100_000,
            seed: 42,
            out_dir: PathBuf::from("."),
            refine_theta: true,
            store_full_grid: false,
            dump_paths: false,
            profile_t: None,
        }
    }

    /// The solver parameters this run implies.
    pub fn solver_config(&self) -> Result<SolverConfig> {
        let mut cfg = match self.gamma {
            Some(g) => SolverConfig::with_grid(self.horizon, self.epsilon, g)?,
            None => SolverConfig::from_accuracy(self.horizon, self.epsilon)?,
        };
        cfg.refine_theta = self.refine_theta;
        cfg.store_full_grid = self.store_full_grid;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::ZeroTime);
        }
        if !(self.q > 0.0 && self.q < 1.0) {
            return Err(Error::QualityOutOfRange(self.q));
        }
        if self.n_paths == 0 {
            return Err(Error::OutOfDomain {
                what: "n_paths",
                requirement: ">= 1",
                value: 0.0,
            });
        }
        if let Some(t) = self.profile_t {
            if t == 0 || t > self.horizon {
                return Err(Error::TimeOutOfRange {
                    t,
                    horizon: self.horizon,
                });
            }
        }
        Ok(())
    }

    /// Run the command: compute, write artifacts and manifest, and return
    /// what happened. No files are touched until all computation succeeds.
    pub fn execute(&self) -> Result<Outcome> {
        self.validate()?;
        let started = Instant::now();
        let mut run = match self.command {
            CommandKind::Solve => self.cmd_solve()?,
            CommandKind::Profile => self.cmd_profile()?,
            CommandKind::Simulate => self.cmd_simulate()?,
            CommandKind::Bounds => self.cmd_bounds()?,
            CommandKind::Verify => self.cmd_verify()?,
        };
        let hashes = output::write_artifacts(&self.out_dir, &run.artifacts)?;
        let manifest = Manifest {
            config: self,
            artifacts: &hashes,
        };
        let manifest_bytes = serde_json::to_vec_pretty(&manifest)?;
        output::atomic_write(&self.out_dir.join("manifest.json"), &manifest_bytes)?;
        run.notes
            .push(format!("wall time {:.2}s", started.elapsed().as_secs_f64()));
        Ok(Outcome {
            artifacts: hashes,
            notes: run.notes,
            verify_failures: run.verify_failures,
        })
    }

    fn cmd_solve(&self) -> Result<PendingRun> {
        let cfg = self.solver_config()?;
        let table = solve(&cfg)?;
        let mut run = PendingRun::default();
        run.artifacts
            .insert("policy.json".into(), table.to_json()?.into_bytes());
        run.artifacts
            .insert("policy.csv".into(), policy_csv(&table).into_bytes());
        let horizon = self.horizon;
        run.notes.push(format!(
            "T = {horizon}: theta(T) = {}, psi_T(0) = {}, Psi(T) = {}",
            fmt_sig(table.theta(horizon)?),
            fmt_sig(table.psi0(horizon)?),
            fmt_sig(table.capital_psi(horizon)?),
        ));
        run.notes.push(match table.certified_error_at(horizon) {
            Some(e) => format!("accumulated error bound {} (certified grid)", fmt_sig(e)),
            None => format!(
                "gamma = {} chosen by hand; error budget not certified",
                fmt_sig(cfg.gamma)
            ),
        });
        Ok(run)
    }

    fn cmd_profile(&self) -> Result<PendingRun> {
        let t = self.profile_t.unwrap_or(self.horizon);
        let mut cfg = self.solver_config()?;
        if t < self.horizon {
            cfg.store_full_grid = true;
        }
        let table = solve(&cfg)?;
        let mut run = PendingRun::default();
        run.artifacts
            .insert("figure2.csv".into(), threshold_profile_csv(&table).into_bytes());
        run.artifacts
            .insert("figure3.csv".into(), value_profile_csv(&table, t)?.into_bytes());
        run.notes.push(format!(
            "profiles for T = {} written; value slice at t = {t}",
            self.horizon
        ));
        Ok(run)
    }

    fn cmd_simulate(&self) -> Result<PendingRun> {
        let cfg = self.solver_config()?;
        let table = solve(&cfg)?;
        let mut policies = vec![
            StoppingPolicy::Hindsight,
            StoppingPolicy::Optimal(&table),
            StoppingPolicy::Immediate,
            StoppingPolicy::Final,
        ];
        if self.horizon > 16 {
            policies.insert(2, StoppingPolicy::FixedLil { eps: 0.2 });
        }
        let mut summary = String::from("policy,n,mean_reward,stderr,mean_stop_time\n");
        let mut dump = String::from("path_id,policy,stop_t,reward\n");
        let mut run = PendingRun::default();
        for policy in &policies {
            let result = if self.dump_paths {
                let (result, outcomes) =
                    monte_carlo_detailed(policy, self.horizon, self.n_paths, self.seed)?;
                for (i, o) in outcomes.iter().enumerate() {
                    dump.push_str(&format!(
                        "{i},{},{},{}\n",
                        result.policy,
                        o.stop_t,
                        fmt_sig(o.reward)
                    ));
                }
                result
            } else {
                monte_carlo(policy, self.horizon, self.n_paths, self.seed)?
            };
            summary.push_str(&format!(
                "{},{},{},{},{}\n",
                result.policy,
                result.n_paths,
                fmt_sig(result.mean_reward),
                fmt_sig(result.stderr),
                fmt_sig(result.mean_stop_time)
            ));
            run.notes.push(format!(
                "{}: mean {} (se {}), mean stop {}",
                result.policy,
                fmt_sig(result.mean_reward),
                fmt_sig(result.stderr),
                fmt_sig(result.mean_stop_time)
            ));
        }
        run.artifacts
            .insert("simulate.csv".into(), summary.into_bytes());
        if self.dump_paths {
            run.artifacts.insert("paths.csv".into(), dump.into_bytes());
        }
        Ok(run)
    }

    fn cmd_bounds(&self) -> Result<PendingRun> {
        let t = self.horizon as f64;
        let mut eps_values: Vec<f64> = bounds::upper_eps_grid()
            .chain(bounds::lower_eps_grid())
            .collect();
        eps_values.sort_by(f64::total_cmp);
        eps_values.dedup();
        let mut csv = String::from(
            "T,eps,upper,lower,gamma1,gamma2,admissible_upper,admissible_lower\n",
        );
        for eps in eps_values {
            let up = bounds::psi_upper_bound(t, eps).ok();
            let g1 = bounds::gamma1(t, eps).ok();
            let low = bounds::psi_lower_bound(t, eps).ok();
            let g2 = bounds::gamma2(t, eps).ok();
            let cell = |v: Option<f64>| v.map(fmt_sig).unwrap_or_default();
            csv.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                self.horizon,
                fmt_sig(eps),
                cell(up),
                cell(low),
                cell(g1),
                cell(g2),
                up.is_some(),
                low.is_some()
            ));
        }
        let mut run = PendingRun::default();
        run.artifacts.insert("bounds.csv".into(), csv.into_bytes());
        let report = bounds::bound_report(t);
        match report.best_upper {
            Some((eps, v)) => run.notes.push(format!(
                "best upper bound {} at eps = {eps} (2 log log T = {})",
                fmt_sig(v),
                fmt_sig(report.two_loglog)
            )),
            None => run
                .notes
                .push(format!("upper envelope needs T > 10 (T = {})", self.horizon)),
        }
        match report.best_lower {
            Some((eps, v)) if !report.lower_vacuous => run
                .notes
                .push(format!("best lower bound {} at eps = {eps}", fmt_sig(v))),
            Some((_, v)) => run.notes.push(format!(
                "lower bound vacuous at this horizon (best {})",
                fmt_sig(v)
            )),
            None => run
                .notes
                .push(format!("lower envelope needs T > 16 (T = {})", self.horizon)),
        }
        Ok(run)
    }

    fn cmd_verify(&self) -> Result<PendingRun> {
        let mut cfg = self.solver_config()?;
        cfg.store_full_grid = true;
        let table = solve(&cfg)?;
        let report = verify::run_all(&table, self.q, self.n_paths, self.seed)?;
        let mut csv = String::from("check,pass,detail\n");
        let mut run = PendingRun::default();
        for c in &report.checks {
            csv.push_str(&format!(
                "{},{},\"{}\"\n",
                c.name,
                c.pass,
                c.detail.replace('"', "'")
            ));
            run.notes.push(format!(
                "{} {}: {}",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                c.detail
            ));
        }
        run.artifacts.insert("verify.csv".into(), csv.into_bytes());
        run.verify_failures = report.failures();
        Ok(run)
    }
}

#[derive(Default)]
struct PendingRun {
    artifacts: BTreeMap<String, Vec<u8>>,
    notes: Vec<String>,
    verify_failures: usize,
}

/// What a finished run produced.
#[derive(Debug)]
pub struct Outcome {
    /// Artifact name to sha256, as recorded in the manifest.
    pub artifacts: BTreeMap<String, String>,
    /// Human-readable summary lines for the terminal.
    pub notes: Vec<String>,
    /// Failed checks, nonzero only for `verify`.
    pub verify_failures: usize,
}

#[derive(Serialize)]
struct Manifest<'a> {
    config: &'a RunConfig,
    artifacts: &'a BTreeMap<String, String>,
}

fn policy_csv(table: &PolicyTable) -> String {
    let mut out = String::from("t,theta,theta_sq_over_t,psi0,capital_psi\n");
    for t in 1..=table.horizon() {
        let theta = table.theta(t).expect("in range");
        out.push_str(&format!(
            "{t},{},{},{},{}\n",
            fmt_sig(theta),
            fmt_sig(theta * theta / t as f64),
            fmt_sig(table.psi0(t).expect("in range")),
            fmt_sig(table.capital_psi(t).expect("in range"))
        ));
    }
    out
}

fn threshold_profile_csv(table: &PolicyTable) -> String {
    let mut out = String::from("t,theta_sq_over_t,psi0,two_loglog_t\n");
    for t in 1..=table.horizon() {
        let theta = table.theta(t).expect("in range");
        let two_ll = if t >= 3 {
            fmt_sig(2.0 * (t as f64).ln().ln())
        } else {
            String::new()
        };
        out.push_str(&format!(
            "{t},{},{},{two_ll}\n",
            fmt_sig(theta * theta / t as f64),
            fmt_sig(table.psi0(t).expect("in range")),
        ));
    }
    out
}

fn value_profile_csv(table: &PolicyTable, t: usize) -> Result<String> {
    let row = table.row(t)?;
    let theta = table.theta(t)?;
    let gamma = row.gamma;
    // continuation region on the grid, then one unit into the stop region
    let j_end = ((theta + 1.0) / gamma).ceil() as usize;
    let mut out = String::from("c,psi\n");
    for j in 0..=j_end {
        let c = j as f64 * gamma;
        out.push_str(&format!(
            "{},{}\n",
            fmt_sig(c),
            fmt_sig(psi_star(row, theta, c))
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn temp_run(command: CommandKind, horizon: usize) -> (RunConfig, tempfile::TempDir) {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = RunConfig::new(command, horizon);
        cfg.out_dir = dir.path().to_path_buf();
        cfg.gamma = Some(0.02);
        cfg.n_paths = 5_000;
        (cfg, dir)
    }

    #[test]
    fn solve_writes_expected_artifacts() {
        let (cfg, dir) = temp_run(CommandKind::Solve, 20);
        let outcome = cfg.execute().unwrap();
        assert!(outcome.artifacts.contains_key("policy.json"));
        assert!(outcome.artifacts.contains_key("policy.csv"));
        assert!(dir.path().join("manifest.json").exists());
        let csv = fs::read_to_string(dir.path().join("policy.csv")).unwrap();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "t,theta,theta_sq_over_t,psi0,capital_psi"
        );
        assert_eq!(csv.lines().count(), 21);
        // t = 1 row: theta exactly zero
        assert!(csv.lines().nth(1).unwrap().starts_with("1,0.00000000000e0,"));
        // no temp files left behind
        assert!(fs::read_dir(dir.path())
            .unwrap()
            .all(|e| !e.unwrap().file_name().to_string_lossy().ends_with(".tmp")));
    }

    #[test]
    fn solve_round_trips_from_disk() {
        let (cfg, dir) = temp_run(CommandKind::Solve, 10);
        cfg.execute().unwrap();
        let text = fs::read_to_string(dir.path().join("policy.json")).unwrap();
        let table = PolicyTable::from_json(&text).unwrap();
        let direct = solve(&cfg.solver_config().unwrap()).unwrap();
        assert_eq!(table, direct);
    }

    #[test]
    fn reruns_are_byte_identical() {
        let (cfg_a, dir_a) = temp_run(CommandKind::Solve, 15);
        let (mut cfg_b, dir_b) = temp_run(CommandKind::Solve, 15);
        cfg_b.gamma = cfg_a.gamma;
        cfg_a.execute().unwrap();
        cfg_b.execute().unwrap();
        for name in ["policy.json", "policy.csv", "manifest.json"] {
            let a = fs::read(dir_a.path().join(name)).unwrap();
            let b = fs::read(dir_b.path().join(name)).unwrap();
            assert_eq!(a, b, "{name} differs between identical runs");
        }
    }

    #[test]
    fn profile_emits_both_curves() {
        let (mut cfg, dir) = temp_run(CommandKind::Profile, 12);
        cfg.profile_t = Some(5);
        cfg.execute().unwrap();
        let f2 = fs::read_to_string(dir.path().join("figure2.csv")).unwrap();
        assert!(f2.starts_with("t,theta_sq_over_t,psi0,two_loglog_t\n"));
        // t = 1 and 2 leave the iterated-log column empty
        assert!(f2.lines().nth(1).unwrap().ends_with(','));
        assert!(f2.lines().nth(2).unwrap().ends_with(','));
        assert!(!f2.lines().nth(3).unwrap().ends_with(','));
        let f3 = fs::read_to_string(dir.path().join("figure3.csv")).unwrap();
        assert!(f3.starts_with("c,psi\n"));
        assert!(f3.lines().count() > 10);
    }

    #[test]
    fn simulate_writes_summary_and_optional_dump() {
        let (mut cfg, dir) = temp_run(CommandKind::Simulate, 20);
        cfg.n_paths = 500;
        cfg.execute().unwrap();
        let csv = fs::read_to_string(dir.path().join("simulate.csv")).unwrap();
        assert!(csv.starts_with("policy,n,mean_reward,stderr,mean_stop_time\n"));
        // T = 20 <= 16 is false: lil policy present
        assert_eq!(csv.lines().count(), 6);
        assert!(!dir.path().join("paths.csv").exists());

        cfg.dump_paths = true;
        cfg.execute().unwrap();
        let dump = fs::read_to_string(dir.path().join("paths.csv")).unwrap();
        assert!(dump.starts_with("path_id,policy,stop_t,reward\n"));
        assert_eq!(dump.lines().count(), 1 + 5 * 500);
    }

    #[test]
    fn bounds_covers_grid_with_admissibility() {
        let (cfg, dir) = temp_run(CommandKind::Bounds, 100);
        cfg.execute().unwrap();
        let csv = fs::read_to_string(dir.path().join("bounds.csv")).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(
            lines[0],
            "T,eps,upper,lower,gamma1,gamma2,admissible_upper,admissible_lower"
        );
        // union grid: 0.01..0.49 (49) plus 0.05..3.00 (60) sharing multiples
        // of 0.05 below 0.5 that exactly match: 0.05..0.45 step 0.05 => 9
        assert_eq!(lines.len() - 1, 49 + 60 - 9);
        // eps = 0.6 row: upper admissible, lower not
        let row = lines.iter().find(|l| l.contains(",6.00000000000e-1,")).unwrap();
        assert!(row.ends_with("true,false"));
        assert!(row.split(',').nth(3).unwrap().is_empty(), "lower cell empty");
    }

    #[test]
    fn verify_reports_all_checks_green() {
        let (mut cfg, dir) = temp_run(CommandKind::Verify, 25);
        cfg.n_paths = 10_000;
        let outcome = cfg.execute().unwrap();
        assert_eq!(outcome.verify_failures, 0, "{:?}", outcome.notes);
        let csv = fs::read_to_string(dir.path().join("verify.csv")).unwrap();
        assert!(csv.starts_with("check,pass,detail\n"));
        assert_eq!(csv.lines().count(), 9, "eight checks expected");
        assert!(csv.lines().skip(1).all(|l| l.contains(",true,")));
    }

    #[test]
    fn domain_errors_leave_no_artifacts() {
        let (mut cfg, dir) = temp_run(CommandKind::Solve, 20);
        cfg.q = 1.5;
        assert!(matches!(
            cfg.execute(),
            Err(Error::QualityOutOfRange(_))
        ));
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);

        let (mut cfg, dir) = temp_run(CommandKind::Profile, 20);
        cfg.profile_t = Some(21);
        assert!(cfg.execute().is_err());
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
    }

    #[test]
    fn certified_request_flows_through() {
        let (mut cfg, _dir) = temp_run(CommandKind::Solve, 20);
        cfg.gamma = None;
        cfg.epsilon = 0.3;
        let sc = cfg.solver_config().unwrap();
        assert!(sc.certified);
        let outcome = cfg.execute().unwrap();
        assert!(outcome
            .notes
            .iter()
            .any(|n| n.contains("certified")), "{:?}", outcome.notes);
    }
}
