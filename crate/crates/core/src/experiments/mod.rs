//! Seeded experiment harness: selected-count sweeps, neighbourhood-size
//! study, subcarrier-policy comparison and imperfect-CSI robustness.
//!
//! Every run draws its randomness from a seed derived from
//! `(master_seed, run kind, run coordinates)` (see [`seeds`]), so tables are
//! reproducible bit for bit and independent of thread count or execution
//! order. Runs are assembled by index, never by completion order.

mod runs;
pub mod seeds;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::capacity::{db_to_linear, Metric, PowerControl};
use crate::channel::{CarrierGrid, PerturbationSpec};
use crate::error::{Error, Result};
use crate::geometry::GeometryConfig;
use crate::selection::SubcarrierPolicy;

pub use runs::{
    build_scenario, compare_subcarrier_policies, csi_robustness, local_params_for, sweep_neighborhood,
    sweep_selected_count, CsiPair, NeighborhoodRow, Scenario,
};

/// Selection algorithms known to the harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Local,
    GreedyForward,
    GreedyBackward,
    Random,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Local, Algorithm::GreedyForward, Algorithm::GreedyBackward, Algorithm::Random];

    pub fn tag(&self) -> &'static str {
        match self {
            Algorithm::Local => "local",
            Algorithm::GreedyForward => "greedy-forward",
            Algorithm::GreedyBackward => "greedy-backward",
            Algorithm::Random => "random",
        }
    }
}

/// Parameters of the local algorithm shared by all experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LocalConfig {
    /// Neighbourhood sizes swept by the sweep and neighbourhood experiments.
    pub k_grid: Vec<usize>,
    /// Independent local runs per neighbourhood size.
    pub seeds_per_k: usize,
    /// Neighbourhood sizes used by the subcarrier and CSI experiments.
    pub compare_k: Vec<usize>,
    pub iterations: usize,
    /// `None` means `1 / N_T`.
    pub mutation_probability: Option<f64>,
    /// `None` means `N_T / 2`.
    pub n_init: Option<usize>,
    pub subcarrier_policy: SubcarrierPolicy,
    pub global_metric: Metric,
    /// Restrict local capacity to users within this many metres.
    pub user_radius: Option<f64>,
}

impl Default for LocalConfig {
    fn default() -> Self {
        LocalConfig {
            k_grid: vec![4, 8, 16, 32, 48, 63],
            seeds_per_k: 5,
            compare_k: vec![8, 16],
            iterations: 30,
            mutation_probability: None,
            n_init: None,
            subcarrier_policy: SubcarrierPolicy::Full,
            global_metric: Metric::ZfWaterfilling,
            user_radius: None,
        }
    }
}

/// Settings specific to the subcarrier and CSI experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StudyConfig {
    /// Fraction of subcarriers drawn per iteration by the random policy.
    pub random_fraction: f64,
    /// Subcarriers kept by the strongest policy.
    pub strongest_count: usize,
    /// Relative CSI error magnitude.
    pub csi_error: f64,
    /// Independent perturbation draws in the CSI experiment.
    pub csi_runs: usize,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig { random_fraction: 0.05, strongest_count: 60, csi_error: 0.3, csi_runs: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    /// Placement parameters; `n_users` is replaced by each entry of `user_counts`.
    pub geometry: GeometryConfig,
    pub grid: CarrierGrid,
    /// Per-user SNR in dB.
    pub snr_db: f64,
    pub power_control: PowerControl,
    pub user_counts: Vec<usize>,
    pub master_seed: u64,
    /// Random selections averaged per selected count.
    pub replication: usize,
    pub local: LocalConfig,
    pub study: StudyConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            geometry: GeometryConfig::default(),
            grid: CarrierGrid::default(),
            snr_db: -5.0,
            power_control: PowerControl::A,
            user_counts: vec![8],
            master_seed: 1,
            replication: 20,
            local: LocalConfig::default(),
            study: StudyConfig::default(),
        }
    }
}

impl ScenarioConfig {
    /// Linear SNR.
    pub fn rho(&self) -> f64 {
        db_to_linear(self.snr_db)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replication == 0 {
            return Err(Error::Parameter("replication must be at least 1".into()));
        }
        if self.user_counts.is_empty() || self.user_counts.contains(&0) {
            return Err(Error::Parameter("user_counts must be non-empty and positive".into()));
        }
        if !self.snr_db.is_finite() {
            return Err(Error::Parameter("snr_db must be finite".into()));
        }
        self.geometry.validate()?;
        self.grid.validate()?;
        let n_tx = self.geometry.n_tx;
        let c = self.grid.n_subcarriers;
        let l = &self.local;
        if l.seeds_per_k == 0 {
            return Err(Error::Parameter("seeds_per_k must be at least 1".into()));
        }
        for &k in l.k_grid.iter().chain(&l.compare_k) {
            local_params_for(self, k, 0)?.validate(n_tx, c)?;
        }
        if let Some(r) = l.user_radius {
            if !(r.is_finite() && r > 0.0) {
                return Err(Error::Parameter("user_radius must be positive".into()));
            }
        }
        let s = &self.study;
        if n_tx >= 2 {
            let mut p = local_params_for(self, 1, 0)?;
            p.subcarrier_policy = SubcarrierPolicy::RandomFraction { fraction: s.random_fraction };
            p.validate(n_tx, c)?;
        }
        if s.strongest_count == 0 || s.strongest_count > c {
            return Err(Error::Parameter(format!("strongest_count {} not in [1, {c}]", s.strongest_count)));
        }
        PerturbationSpec::new(s.csi_error, 0)?;
        if s.csi_runs == 0 {
            return Err(Error::Parameter("csi_runs must be at least 1".into()));
        }
        Ok(())
    }
}

/// One row of an experiment table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub algorithm: String,
    pub power_control: PowerControl,
    pub n_users: usize,
    pub k: Option<usize>,
    pub policy: String,
    pub n_selected: usize,
    pub capacity_eq: f64,
    pub zf_rate: f64,
    pub seed: u64,
    /// Wall time of the selection, milliseconds.
    pub wall_time_ms: f64,
    /// ZF rate minus the mean random-selection rate at the same selected count.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_vs_random: Option<f64>,
    /// Selected count after every iteration of a local run. JSON only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size_trace: Option<Vec<usize>>,
}

pub const CSV_HEADER: [&str; 10] =
    ["algorithm", "power_control", "n_users", "k", "policy", "n_selected", "capacity_eq", "zf_rate", "seed", "wall_time_ms"];

/// Writes the CSV table. When `with_timing` is false the `wall_time_ms`
/// column is left empty so that reruns are byte-identical.
pub fn write_csv<W: Write>(rows: &[RunResult], out: W, with_timing: bool) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        let k = r.k.map(|k| k.to_string()).unwrap_or_default();
        let wall = if with_timing { format!("{:.3}", r.wall_time_ms) } else { String::new() };
        w.write_record([
            r.algorithm.clone(),
            r.power_control.to_string(),
            r.n_users.to_string(),
            k,
            r.policy.clone(),
            r.n_selected.to_string(),
            format!("{}", r.capacity_eq),
            format!("{}", r.zf_rate),
            r.seed.to_string(),
            wall,
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// JSON mirror of a table with the generating configuration embedded.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultDocument {
    pub experiment: String,
    pub config: ScenarioConfig,
    pub rows: Vec<RunResult>,
}

/// Best ZF rate per algorithm tag, in first-appearance order.
pub fn best_rates(rows: &[RunResult]) -> Vec<(String, RunResult)> {
    let mut best: Vec<(String, RunResult)> = Vec::new();
    for r in rows {
        match best.iter_mut().find(|(a, _)| *a == r.algorithm) {
            Some((_, b)) if r.zf_rate > b.zf_rate => *b = r.clone(),
            Some(_) => {}
            None => best.push((r.algorithm.clone(), r.clone())),
        }
    }
    best
}

/// Spearman rank correlation, with average ranks for ties. `NaN` when
/// either input is constant or shorter than two.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "spearman needs paired samples");
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &p in &idx[i..=j] {
            r[p] = avg;
        }
        i = j + 1;
    }
    r
}

/// Mean committed size per `k`, in ascending `k`.
pub fn mean_size_by_k(rows: &[NeighborhoodRow]) -> Vec<(usize, f64)> {
    let mut acc: std::collections::BTreeMap<usize, (f64, usize)> = Default::default();
    for r in rows {
        let e = acc.entry(r.k).or_default();
        e.0 += r.n_selected as f64;
        e.1 += 1;
    }
    acc.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(alg: &str, zf: f64) -> RunResult {
        RunResult {
            algorithm: alg.into(),
            power_control: PowerControl::B,
            n_users: 4,
            k: None,
            policy: "full-300".into(),
            n_selected: 9,
            capacity_eq: 1.5,
            zf_rate: zf,
            seed: 3,
            wall_time_ms: 12.5,
            delta_vs_random: None,
            size_trace: None,
        }
    }

    #[test]
    fn csv_layout() {
        let mut rows = vec![row("random", 0.25)];
        rows[0].k = Some(8);
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf, false).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "algorithm,power_control,n_users,k,policy,n_selected,capacity_eq,zf_rate,seed,wall_time_ms\n\
             random,B,4,8,full-300,9,1.5,0.25,3,\n"
        );
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf, true).unwrap();
        assert!(String::from_utf8(buf).unwrap().ends_with(",3,12.500\n"));
    }

    #[test]
    fn spearman_with_ties() {
        assert!((spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]) + 1.0).abs() < 1e-15);
        assert_eq!(ranks(&[5.0, 1.0, 5.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
        let r = spearman(&[4.0, 8.0, 16.0, 32.0, 48.0, 63.0], &[29.8, 18.0, 13.4, 12.4, 12.4, 12.8]);
        assert!((r - (-14.0 / (17.5f64 * 17.0).sqrt())).abs() < 1e-12);
    }

    #[test]
    fn best_rate_summary() {
        let rows = vec![row("local", 1.0), row("random", 0.5), row("local", 2.0)];
        let best = best_rates(&rows);
        assert_eq!(best.len(), 2);
        assert_eq!(best[0].1.zf_rate, 2.0);
    }

    #[test]
    fn default_config_is_valid() {
        ScenarioConfig::default().validate().unwrap();
        let bad = ScenarioConfig { replication: 0, ..Default::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn config_rejects_unknown_keys() {
        let err = serde_json::from_str::<ScenarioConfig>(r#"{"snr_db": -5.0, "bogus": 1}"#);
        assert!(err.is_err());
        let ok: ScenarioConfig = serde_json::from_str(r#"{"snr_db": 0.0, "local": {"k_grid": [4]}}"#).unwrap();
        assert_eq!(ok.local.k_grid, vec![4]);
        assert_eq!(ok.local.iterations, 30);
    }
}
