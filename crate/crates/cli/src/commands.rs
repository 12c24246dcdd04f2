use std::fs;
use std::io::{IsTerminal, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use mabandon::sim::monte_carlo_with_progress;
use mabandon::{
    bound_constants, check_gap_monotonicity, cross_validate_estimators, expected_episode_length, sufficient_condition,
    verify_optimal_policy, BanditInstance, GapOrientation, RegretTrace, ValueSolution,
};
use serde::Serialize;
use serde_json::json;

use crate::config::ExperimentConfig;

/// Probe states reported for the general model.
const PROBES: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

/// Largest `K` used by the estimator cross-check in `validate`.
pub const VALIDATE_MAX_EPISODES: usize = 500;

#[derive(Debug, Clone, Serialize)]
pub struct StateRow {
    pub state: f64,
    pub v_star: f64,
    pub q_star: Vec<f64>,
    pub gap: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub model: &'static str,
    /// Arm means, best first.
    pub means: Vec<f64>,
    pub states: Vec<StateRow>,
    pub orientation: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sufficient_condition: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected_episode_length: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value_monotone: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gap_monotone: Option<bool>,
}

fn orientation_of(instance: &BanditInstance<f64>, solution: &ValueSolution<f64>) -> String {
    match bound_constants(instance, solution, None) {
        Ok(b) => b.orientation.to_string(),
        Err(_) => GapOrientation::Degenerate.to_string(),
    }
}

pub fn solve_report(cfg: &ExperimentConfig) -> Result<SolveReport> {
    let instance = cfg.instance()?;
    let solution = ValueSolution::solve(&instance, cfg.grid())?;
    let means = instance.arms().means().to_vec();
    let row = |s: f64| -> Result<StateRow> {
        Ok(StateRow {
            state: s,
            v_star: solution.v_star(s)?,
            q_star: (0..means.len())
                .map(|a| solution.q_star(s, a))
                .collect::<mabandon::Result<_>>()?,
            gap: (0..means.len())
                .map(|a| solution.gap(s, a))
                .collect::<mabandon::Result<_>>()?,
        })
    };
    let orientation = orientation_of(&instance, &solution);
    Ok(match &solution {
        ValueSolution::Binary(_) => SolveReport {
            model: "binary",
            states: vec![row(0.0)?, row(1.0)?],
            orientation,
            sufficient_condition: Some(sufficient_condition(instance.binary_abandonment()?).to_string()),
            expected_episode_length: Some(expected_episode_length(&instance)?),
            grid_size: None,
            iterations: None,
            value_monotone: None,
            gap_monotone: None,
            means,
        },
        ValueSolution::General(g) => SolveReport {
            model: "general",
            states: PROBES.iter().map(|&s| row(s)).collect::<Result<_>>()?,
            orientation,
            sufficient_condition: None,
            expected_episode_length: None,
            grid_size: Some(g.grid_size()),
            iterations: Some(g.iterations),
            value_monotone: Some(g.is_value_monotone()),
            gap_monotone: Some(check_gap_monotonicity(g)),
            means,
        },
    })
}

pub fn solve(cfg: &ExperimentConfig, as_json: bool, out: &mut dyn Write) -> Result<()> {
    let r = solve_report(cfg)?;
    if as_json {
        writeln!(out, "{}", serde_json::to_string_pretty(&r)?)?;
        return Ok(());
    }
    writeln!(
        out,
        "model: {} ({} arms, means best first: {:?})",
        r.model,
        r.means.len(),
        r.means
    )?;
    if let (Some(n), Some(it)) = (r.grid_size, r.iterations) {
        writeln!(out, "grid: {n} points, {it} sweeps")?;
    }
    for row in &r.states {
        writeln!(out, "s = {}: V* = {}", row.state, row.v_star)?;
        for (a, (q, g)) in row.q_star.iter().zip(&row.gap).enumerate() {
            writeln!(out, "  a_{}: Q* = {q}, gap = {g}", a + 1)?;
        }
    }
    writeln!(out, "orientation: {}", r.orientation)?;
    if let Some(c) = &r.sufficient_condition {
        writeln!(out, "sufficient condition for standard orientation: {c}")?;
    }
    if let Some([e0, e1]) = r.expected_episode_length {
        writeln!(
            out,
            "expected episode length under the best arm: E[I|0] = {e0}, E[I|1] = {e1}"
        )?;
    }
    if let Some(v) = r.value_monotone {
        writeln!(out, "V* non-decreasing: {v}")?;
    }
    if let Some(g) = r.gap_monotone {
        writeln!(out, "gap non-increasing in state: {g}")?;
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundsReport {
    pub orientation: String,
    pub ulcb_ub: f64,
    pub klulcb_ub: f64,
    pub lower_bound: f64,
    pub ucb_ref: f64,
    pub klucb_ref: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub disc_n_bins: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub disc_state: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub disc_ulcb_ub: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub disc_klulcb_ub: Option<f64>,
}

impl BoundsReport {
    /// `(name, value)` pairs for the overlay file.
    pub fn entries(&self) -> Vec<(&'static str, f64)> {
        let mut v = vec![
            ("ulcb_ub", self.ulcb_ub),
            ("klulcb_ub", self.klulcb_ub),
            ("lower_bound", self.lower_bound),
            ("ucb_ref", self.ucb_ref),
            ("klucb_ref", self.klucb_ref),
        ];
        if let (Some(n), Some(s), Some(u), Some(k)) = (
            self.disc_n_bins,
            self.disc_state,
            self.disc_ulcb_ub,
            self.disc_klulcb_ub,
        ) {
            v.extend([
                ("disc_n_bins", n as f64),
                ("disc_state", s),
                ("disc_ulcb_ub", u),
                ("disc_klulcb_ub", k),
            ]);
        }
        v
    }
}

pub fn bounds_report(cfg: &ExperimentConfig, bins: Option<usize>) -> Result<BoundsReport> {
    let instance = cfg.instance()?;
    let solution = ValueSolution::solve(&instance, cfg.grid())?;
    let bins = if instance.is_binary() {
        None
    } else {
        bins.or(cfg.disc_bins())
    };
    let b = bound_constants(&instance, &solution, bins)?;
    Ok(BoundsReport {
        orientation: b.orientation.to_string(),
        ulcb_ub: b.ulcb_ub,
        klulcb_ub: b.klulcb_ub,
        lower_bound: b.lower_bound,
        ucb_ref: b.ucb_ref,
        klucb_ref: b.klucb_ref,
        disc_n_bins: b.disc.as_ref().map(|d| d.n_bins),
        disc_state: b.disc.as_ref().map(|d| d.state),
        disc_ulcb_ub: b.disc.as_ref().map(|d| d.ulcb_ub),
        disc_klulcb_ub: b.disc.as_ref().map(|d| d.klulcb_ub),
    })
}

pub fn bounds(cfg: &ExperimentConfig, bins: Option<usize>, as_json: bool, out: &mut dyn Write) -> Result<()> {
    let r = bounds_report(cfg, bins)?;
    if as_json {
        writeln!(out, "{}", serde_json::to_string_pretty(&r)?)?;
        return Ok(());
    }
    writeln!(out, "orientation: {}", r.orientation)?;
    for (name, v) in r.entries() {
        writeln!(out, "{name:<16} {v}")?;
    }
    Ok(())
}

fn write_bounds_csv(r: &BoundsReport, path: &Path) -> Result<()> {
    let mut text = String::from("name,value\n");
    for (name, v) in r.entries() {
        text.push_str(&format!("{name},{v}\n"));
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn trace_json(t: &RegretTrace) -> serde_json::Value {
    let m = &t.meta;
    json!({
        "policy": m.policy,
        "config_hash": m.config_hash,
        "seed": m.seed,
        "runs": m.runs,
        "estimator": m.estimator,
        "truncations": m.truncations,
        "total_episodes": m.total_episodes,
        "total_steps": m.total_steps,
        "rows": t.rows.iter().map(|r| json!({
            "k": r.k, "mean_regret": r.mean, "std": r.std, "ci95": r.ci95, "regret_over_logk": r.over_logk,
        })).collect::<Vec<_>>(),
    })
}

/// Runs every policy and writes one trace per label into `dir`.
pub fn simulate(cfg: &ExperimentConfig, dir: &Path, out: &mut dyn Write) -> Result<Vec<RegretTrace>> {
    if cfg.policies.is_empty() {
        bail!("config has no [[policy]] sections");
    }
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let tty = std::io::stderr().is_terminal();
    let mut traces = Vec::new();
    for sim in cfg.sim_configs()? {
        let label = sim.label.clone();
        let trace = monte_carlo_with_progress(&sim, |done, total| {
            if tty {
                eprint!("\r{label}: {done}/{total} runs");
            }
            log::debug!("{label}: {done}/{total} runs");
        })
        .with_context(|| format!("simulating {label}"))?;
        if tty {
            eprintln!();
        }
        let stem = ExperimentConfig::file_stem(&label);
        for format in &cfg.output.formats {
            let path = dir.join(format!("{stem}.{format}"));
            let file = fs::File::create(&path).with_context(|| format!("writing {}", path.display()))?;
            let mut w = std::io::BufWriter::new(file);
            match format.as_str() {
                "json" => serde_json::to_writer(&mut w, &trace_json(&trace))?,
                _ => trace.write_csv(&mut w)?,
            }
            w.flush().with_context(|| format!("writing {}", path.display()))?;
        }
        let last = trace.final_row().expect("K ≥ 1");
        writeln!(
            out,
            "{label}: K = {}, mean regret {:.4} ± {:.4}, regret/ln K {:.4}, mean episode length {:.3}",
            last.k,
            last.mean,
            last.ci95.unwrap_or(f64::NAN),
            last.over_logk.unwrap_or(f64::NAN),
            trace.meta.mean_episode_length()
        )?;
        if trace.meta.truncations > 0 {
            writeln!(
                out,
                "  warning: {} episodes hit the {}-step cap",
                trace.meta.truncations, sim.episode_cap
            )?;
        }
        traces.push(trace);
    }
    Ok(traces)
}

/// Simulates all policies, then writes `summary.csv` and the `bounds.csv` overlay.
pub fn compare(cfg: &ExperimentConfig, dir: &Path, as_json: bool, out: &mut dyn Write) -> Result<()> {
    if cfg.policies.len() < 2 {
        bail!("compare needs at least two [[policy]] sections");
    }
    let mut log = Vec::new();
    let traces = simulate(cfg, dir, &mut log)?;
    let bounds = bounds_report(cfg, None);
    match &bounds {
        Ok(b) => write_bounds_csv(b, &dir.join("bounds.csv"))?,
        Err(e) => log::warn!("no bound constants for this instance: {e:#}"),
    }
    let mut summary =
        String::from("policy,episodes,runs,final_mean,final_ci95,final_over_logk,truncations,mean_episode_length\n");
    let mut rows = Vec::new();
    for t in &traces {
        let last = t.final_row().expect("K ≥ 1");
        let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        summary.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            t.meta.policy,
            last.k,
            t.meta.runs,
            last.mean,
            opt(last.ci95),
            opt(last.over_logk),
            t.meta.truncations,
            t.meta.mean_episode_length()
        ));
        rows.push(json!({
            "policy": t.meta.policy, "episodes": last.k, "runs": t.meta.runs, "final_mean": last.mean,
            "final_ci95": last.ci95, "final_over_logk": last.over_logk, "truncations": t.meta.truncations,
        }));
    }
    let path = dir.join("summary.csv");
    fs::write(&path, summary).with_context(|| format!("writing {}", path.display()))?;
    if as_json {
        let b = bounds.ok().map(serde_json::to_value).transpose()?;
        writeln!(
            out,
            "{}",
            serde_json::to_string_pretty(&json!({ "policies": rows, "bounds": b }))?
        )?;
        return Ok(());
    }
    out.write_all(&log)?;
    writeln!(out)?;
    writeln!(
        out,
        "{:<16} {:>14} {:>12} {:>12}",
        "policy", "regret(K)", "ci95", "regret/lnK"
    )?;
    for t in &traces {
        let last = t.final_row().expect("K ≥ 1");
        writeln!(
            out,
            "{:<16} {:>14.4} {:>12.4} {:>12.4}",
            t.meta.policy,
            last.mean,
            last.ci95.unwrap_or(f64::NAN),
            last.over_logk.unwrap_or(f64::NAN)
        )?;
    }
    if let Ok(b) = &bounds {
        writeln!(out)?;
        writeln!(out, "reference constants ({} orientation):", b.orientation)?;
        for (name, v) in b.entries() {
            writeln!(out, "  {name:<16} {v}")?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimatorCheck {
    pub policy: String,
    pub episodes: u64,
    pub decomposition_mean: f64,
    pub decomposition_ci: f64,
    pub direct_mean: f64,
    pub direct_ci: f64,
    pub agree: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidateReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub best_arm_optimal: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gap_monotone: Option<bool>,
    pub estimators: Vec<EstimatorCheck>,
    pub passed: bool,
}

/// Brute-force optimality check (binary model) plus the estimator
/// cross-check for each policy at `K = min(episodes, 500)`.
pub fn validate_report(cfg: &ExperimentConfig) -> Result<ValidateReport> {
    let instance = cfg.instance()?;
    let (best_arm_optimal, gap_monotone) = if instance.is_binary() {
        (Some(verify_optimal_policy(&instance)?), None)
    } else {
        let sol = ValueSolution::solve(&instance, cfg.grid())?;
        (None, sol.as_general().map(check_gap_monotonicity))
    };
    let mut estimators = Vec::new();
    for sim in cfg.sim_configs()? {
        let sim = sim.clone().with_episodes(sim.episodes.min(VALIDATE_MAX_EPISODES));
        let r = cross_validate_estimators(&sim).with_context(|| format!("cross-checking {}", sim.label))?;
        estimators.push(EstimatorCheck {
            policy: sim.label.clone(),
            episodes: r.episodes,
            decomposition_mean: r.decomposition_mean,
            decomposition_ci: r.decomposition_ci,
            direct_mean: r.direct_mean,
            direct_ci: r.direct_ci,
            agree: r.agree,
        });
    }
    let passed = best_arm_optimal != Some(false) && estimators.iter().all(|e| e.agree);
    Ok(ValidateReport {
        best_arm_optimal,
        gap_monotone,
        estimators,
        passed,
    })
}

pub fn validate(cfg: &ExperimentConfig, as_json: bool, out: &mut dyn Write) -> Result<bool> {
    let r = validate_report(cfg)?;
    if as_json {
        writeln!(out, "{}", serde_json::to_string_pretty(&r)?)?;
        return Ok(r.passed);
    }
    if let Some(ok) = r.best_arm_optimal {
        writeln!(
            out,
            "always-best-arm optimal among stationary policies: {}",
            if ok { "PASS" } else { "FAIL" }
        )?;
    }
    if let Some(ok) = r.gap_monotone {
        writeln!(out, "gap non-increasing in state (informational): {ok}")?;
    }
    for e in &r.estimators {
        writeln!(
            out,
            "{} estimator check at K = {}: decomposition {:.4} ± {:.4}, direct {:.4} ± {:.4}: {}",
            e.policy,
            e.episodes,
            e.decomposition_mean,
            e.decomposition_ci,
            e.direct_mean,
            e.direct_ci,
            if e.agree { "PASS" } else { "FAIL" }
        )?;
    }
    writeln!(
        out,
        "{}",
        if r.passed {
            "validation passed"
        } else {
            "validation FAILED"
        }
    )?;
    Ok(r.passed)
}
