use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::seeds::{derive_seed, RunKind};
use super::{Algorithm, RunResult, ScenarioConfig};
use crate::capacity::{capacity_report, PowerControl, SelectionMask};
use crate::channel::{normalize_csi, perturb_csi, synthesize_channel, ChannelTensor, PerturbationSpec};
use crate::error::{Error, Result};
use crate::geometry::{generate_geometry, GeometryConfig, ScenarioGeometry};
use crate::selection::{
    build_neighborhoods, greedy_backward_order, greedy_forward_order, local_select, random_select, LocalParams,
    LocalRunTrace, NeighborhoodTable, SubcarrierPolicy,
};

/// Geometry and normalized channel for one user count.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub n_users: usize,
    pub geometry: ScenarioGeometry,
    pub tensor: ChannelTensor,
}

impl Scenario {
    pub fn all_subcarriers(&self) -> Vec<usize> {
        (0..self.tensor.n_subcarriers()).collect()
    }
}

/// Builds the scenario for `n_users` users. The geometry seed depends on the
/// master seed and the user count only.
pub fn build_scenario(config: &ScenarioConfig, n_users: usize) -> Result<Scenario> {
    let gcfg = GeometryConfig { n_users, ..config.geometry.clone() };
    let seed = derive_seed(config.master_seed, RunKind::Geometry, &[n_users as u64]);
    let geometry = generate_geometry(&gcfg, seed)?;
    let tensor = normalize_csi(&synthesize_channel(&geometry, &config.grid)?)?;
    Ok(Scenario { n_users, geometry, tensor })
}

/// Local-algorithm parameters for neighbourhood size `k` and run seed `seed`.
pub fn local_params_for(config: &ScenarioConfig, k: usize, seed: u64) -> Result<LocalParams> {
    let n_tx = config.geometry.n_tx;
    let l = &config.local;
    let mut p = LocalParams::defaults_for(n_tx, k, seed);
    p.iterations = l.iterations;
    if let Some(pm) = l.mutation_probability {
        p.mutation_probability = pm;
    }
    if let Some(n) = l.n_init {
        p.n_init = n;
    }
    p.subcarrier_policy = l.subcarrier_policy;
    p.global_metric = l.global_metric;
    Ok(p)
}

fn table_for(config: &ScenarioConfig, scn: &Scenario, k: usize) -> Result<NeighborhoodTable> {
    let table = build_neighborhoods(&scn.geometry.tx_positions, k)?;
    match config.local.user_radius {
        Some(r) => table.with_user_radius(&scn.geometry.tx_positions, &scn.geometry.user_positions, r),
        None => Ok(table),
    }
}

fn local_seed(config: &ScenarioConfig, n_users: usize, k: usize, run: usize) -> u64 {
    derive_seed(config.master_seed, RunKind::Local, &[n_users as u64, k as u64, run as u64])
}

fn millis(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

struct Ctx<'a> {
    config: &'a ScenarioConfig,
    scn: &'a Scenario,
    control: PowerControl,
    all: Vec<usize>,
    random_cache: BTreeMap<usize, (f64, f64)>,
}

impl<'a> Ctx<'a> {
    fn new(config: &'a ScenarioConfig, scn: &'a Scenario, control: PowerControl) -> Self {
        Ctx { config, scn, control, all: scn.all_subcarriers(), random_cache: BTreeMap::new() }
    }

    /// (equal-power capacity, ZF rate) of `mask` on the true channel.
    fn score(&self, mask: &SelectionMask) -> Result<(f64, f64)> {
        let rep = capacity_report(&self.scn.tensor, mask, self.control, self.config.rho(), &self.all)?;
        Ok((rep.equal_power_capacity, rep.zf_waterfilling_rate))
    }

    /// Mean scores of `replication` random selections of `n` antennas.
    fn random_mean(&mut self, n: usize) -> Result<(f64, f64)> {
        if let Some(&v) = self.random_cache.get(&n) {
            return Ok(v);
        }
        let n_tx = self.scn.tensor.n_tx();
        let reps = self.config.replication;
        let scores: Vec<(f64, f64)> = (0..reps)
            .into_par_iter()
            .map(|rep| {
                let seed = derive_seed(
                    self.config.master_seed,
                    RunKind::RandomSelection,
                    &[self.scn.n_users as u64, n as u64, rep as u64],
                );
                self.score(&random_select(n, n_tx, seed)?)
            })
            .collect::<Result<_>>()?;
        // offsets from the first replicate keep the mean exact when all agree (N_TS = N_T)
        let (e0, z0) = scores[0];
        let (de, dz) = scores.iter().fold((0.0, 0.0), |(a, b), &(x, y)| (a + (x - e0), b + (y - z0)));
        let v = (e0 + de / reps as f64, z0 + dz / reps as f64);
        self.random_cache.insert(n, v);
        Ok(v)
    }

    fn row(&self, algorithm: &str, k: Option<usize>, policy: String, mask: &SelectionMask, seed: u64) -> Result<RunResult> {
        let (capacity_eq, zf_rate) = self.score(mask)?;
        Ok(RunResult {
            algorithm: algorithm.to_string(),
            power_control: self.control,
            n_users: self.scn.n_users,
            k,
            policy,
            n_selected: mask.count(),
            capacity_eq,
            zf_rate,
            seed,
            wall_time_ms: 0.0,
            delta_vs_random: None,
            size_trace: None,
        })
    }

    fn with_delta(&mut self, mut row: RunResult) -> Result<RunResult> {
        let (_, zf) = self.random_mean(row.n_selected)?;
        row.delta_vs_random = Some(row.zf_rate - zf);
        Ok(row)
    }

    fn local_run(&self, k: usize, policy: SubcarrierPolicy, seed: u64) -> Result<(LocalRunTrace, f64)> {
        let table = table_for(self.config, self.scn, k)?;
        let mut params = local_params_for(self.config, k, seed)?;
        params.subcarrier_policy = policy;
        let start = Instant::now();
        let trace = local_select(&self.scn.tensor, &table, &params, self.config.rho(), self.control)?;
        Ok((trace, millis(start)))
    }

    fn local_row(&mut self, algorithm: &str, k: usize, policy: SubcarrierPolicy, seed: u64) -> Result<RunResult> {
        let (trace, ms) = self.local_run(k, policy, seed)?;
        let c = self.scn.tensor.n_subcarriers();
        let mut row = self.row(algorithm, Some(k), policy.label(c), &trace.committed_mask, seed)?;
        row.wall_time_ms = ms;
        row.size_trace = Some(trace.size_trace());
        self.with_delta(row)
    }

    fn full_label(&self) -> String {
        SubcarrierPolicy::Full.label(self.scn.tensor.n_subcarriers())
    }
}

/// Rate against selected count for every user count: greedy forward and
/// backward and the random mean at each `N_TS` in `1..=N_T`, and one row
/// per local run (`seeds_per_k` runs per `k` in the grid) at its emergent
/// `N_TS`. Greedy rows carry the time of the whole trajectory.
pub fn sweep_selected_count(config: &ScenarioConfig, algorithms: &[Algorithm]) -> Result<Vec<RunResult>> {
    config.validate()?;
    let mut rows = Vec::new();
    for &n_users in &config.user_counts {
        let scn = build_scenario(config, n_users)?;
        let mut ctx = Ctx::new(config, &scn, config.power_control);
        let n_tx = scn.tensor.n_tx();
        let rho = config.rho();
        for alg in Algorithm::ALL.iter().filter(|a| algorithms.contains(a)) {
            match alg {
                Algorithm::GreedyForward => {
                    let start = Instant::now();
                    let order = greedy_forward_order(&scn.tensor, n_tx, rho, ctx.control, &ctx.all)?;
                    let ms = millis(start);
                    for n in 1..=n_tx {
                        let mask = SelectionMask::from_indices(n_tx, &order[..n]);
                        let mut row = ctx.row(alg.tag(), None, ctx.full_label(), &mask, config.master_seed)?;
                        row.wall_time_ms = ms;
                        rows.push(row);
                    }
                }
                Algorithm::GreedyBackward => {
                    let start = Instant::now();
                    let removed = greedy_backward_order(&scn.tensor, 1, rho, ctx.control, &ctx.all)?;
                    let ms = millis(start);
                    for n in 1..=n_tx {
                        let mut mask = SelectionMask::all_on(n_tx);
                        for &t in &removed[..n_tx - n] {
                            mask.set(t, false);
                        }
                        let mut row = ctx.row(alg.tag(), None, ctx.full_label(), &mask, config.master_seed)?;
                        row.wall_time_ms = ms;
                        rows.push(row);
                    }
                }
                Algorithm::Random => {
                    for n in 1..=n_tx {
                        let (capacity_eq, zf_rate) = ctx.random_mean(n)?;
                        rows.push(RunResult {
                            algorithm: alg.tag().into(),
                            power_control: ctx.control,
                            n_users,
                            k: None,
                            policy: ctx.full_label(),
                            n_selected: n,
                            capacity_eq,
                            zf_rate,
                            seed: config.master_seed,
                            wall_time_ms: 0.0,
                            delta_vs_random: None,
                            size_trace: None,
                        });
                    }
                }
                Algorithm::Local => {
                    for &k in &config.local.k_grid {
                        for run in 0..config.local.seeds_per_k {
                            let seed = local_seed(config, n_users, k, run);
                            let policy = config.local.subcarrier_policy;
                            rows.push(ctx.local_row(alg.tag(), k, policy, seed)?);
                        }
                    }
                }
            }
        }
    }
    Ok(rows)
}

/// One local run of the neighbourhood study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborhoodRow {
    pub n_users: usize,
    pub k: usize,
    pub seed: u64,
    pub n_selected: usize,
    pub zf_rate: f64,
    pub capacity_eq: f64,
    /// Selected count after every iteration.
    pub size_trace: Vec<usize>,
    pub best_iteration: usize,
    pub wall_time_ms: f64,
}

/// Committed size and rate of `seeds_per_k` local runs for each `k`.
pub fn sweep_neighborhood(config: &ScenarioConfig, k_grid: &[usize]) -> Result<Vec<NeighborhoodRow>> {
    let config = ScenarioConfig { local: super::LocalConfig { k_grid: k_grid.to_vec(), ..config.local.clone() }, ..config.clone() };
    config.validate()?;
    let mut rows = Vec::new();
    for &n_users in &config.user_counts {
        let scn = build_scenario(&config, n_users)?;
        let ctx = Ctx::new(&config, &scn, config.power_control);
        for &k in k_grid {
            for run in 0..config.local.seeds_per_k {
                let seed = local_seed(&config, n_users, k, run);
                let (trace, ms) = ctx.local_run(k, config.local.subcarrier_policy, seed)?;
                let (capacity_eq, zf_rate) = ctx.score(&trace.committed_mask)?;
                rows.push(NeighborhoodRow {
                    n_users,
                    k,
                    seed,
                    n_selected: trace.committed_mask.count(),
                    zf_rate,
                    capacity_eq,
                    size_trace: trace.size_trace(),
                    best_iteration: trace.best_iteration,
                    wall_time_ms: ms,
                });
            }
        }
    }
    Ok(rows)
}

impl NeighborhoodRow {
    pub fn to_run_result(&self, control: PowerControl) -> RunResult {
        RunResult {
            algorithm: Algorithm::Local.tag().into(),
            power_control: control,
            n_users: self.n_users,
            k: Some(self.k),
            policy: String::new(),
            n_selected: self.n_selected,
            capacity_eq: self.capacity_eq,
            zf_rate: self.zf_rate,
            seed: self.seed,
            wall_time_ms: self.wall_time_ms,
            delta_vs_random: None,
            size_trace: Some(self.size_trace.clone()),
        }
    }
}

/// Local runs under the full, random-fraction and strongest subcarrier
/// policies (same seed for all three), plus greedy forward at every
/// selected count the local runs reached. Every row carries its ZF gain
/// over the random mean at the same count.
pub fn compare_subcarrier_policies(config: &ScenarioConfig) -> Result<Vec<RunResult>> {
    config.validate()?;
    let policies = [
        SubcarrierPolicy::Full,
        SubcarrierPolicy::RandomFraction { fraction: config.study.random_fraction },
        SubcarrierPolicy::Strongest { count: config.study.strongest_count },
    ];
    let mut rows = Vec::new();
    for &n_users in &config.user_counts {
        let scn = build_scenario(config, n_users)?;
        let mut ctx = Ctx::new(config, &scn, config.power_control);
        let n_tx = scn.tensor.n_tx();
        let mut counts = Vec::new();
        for &k in &config.local.compare_k {
            for run in 0..config.local.seeds_per_k {
                let seed = local_seed(config, n_users, k, run);
                for policy in policies {
                    let row = ctx.local_row(Algorithm::Local.tag(), k, policy, seed)?;
                    counts.push(row.n_selected);
                    rows.push(row);
                }
            }
        }
        counts.sort_unstable();
        counts.dedup();
        counts.retain(|&n| n > 0);
        if let Some(&max_n) = counts.last() {
            let start = Instant::now();
            let order = greedy_forward_order(&scn.tensor, max_n, config.rho(), ctx.control, &ctx.all)?;
            let ms = millis(start);
            for n in counts {
                let mask = SelectionMask::from_indices(n_tx, &order[..n]);
                let tag = Algorithm::GreedyForward.tag();
                let mut row = ctx.row(tag, None, ctx.full_label(), &mask, config.master_seed)?;
                row.wall_time_ms = ms;
                rows.push(ctx.with_delta(row)?);
            }
        }
    }
    Ok(rows)
}

/// Clean and perturbed-CSI selections from the same local seed, both scored
/// on the true channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsiPair {
    pub clean: RunResult,
    pub perturbed: RunResult,
    pub perturbation_seed: u64,
}

/// `csi_runs` clean/perturbed pairs for each `k` in `compare_k`, with CSI
/// error magnitude `relative_magnitude`.
pub fn csi_robustness(config: &ScenarioConfig, relative_magnitude: f64) -> Result<Vec<CsiPair>> {
    config.validate()?;
    PerturbationSpec::new(relative_magnitude, 0)?;
    let mut pairs = Vec::new();
    for &n_users in &config.user_counts {
        let scn = build_scenario(config, n_users)?;
        let mut ctx = Ctx::new(config, &scn, config.power_control);
        let policy = config.local.subcarrier_policy;
        let c = scn.tensor.n_subcarriers();
        for &k in &config.local.compare_k {
            let table = table_for(config, &scn, k)?;
            for run in 0..config.study.csi_runs {
                let seed = local_seed(config, n_users, k, run);
                let pseed = derive_seed(config.master_seed, RunKind::Perturbation, &[n_users as u64, k as u64, run as u64]);
                let clean = ctx.local_row("local-clean-csi", k, policy, seed)?;
                let noisy = perturb_csi(&scn.tensor, &PerturbationSpec::new(relative_magnitude, pseed)?)?;
                let params = LocalParams { subcarrier_policy: policy, ..local_params_for(config, k, seed)? };
                let start = Instant::now();
                let trace = local_select(&noisy, &table, &params, config.rho(), ctx.control)?;
                let ms = millis(start);
                let mut perturbed = ctx.row("local-perturbed-csi", Some(k), policy.label(c), &trace.committed_mask, seed)?;
                perturbed.wall_time_ms = ms;
                perturbed.size_trace = Some(trace.size_trace());
                let perturbed = ctx.with_delta(perturbed)?;
                pairs.push(CsiPair { clean, perturbed, perturbation_seed: pseed });
            }
        }
    }
    if pairs.iter().any(|p| !(p.clean.zf_rate.is_finite() && p.perturbed.zf_rate.is_finite())) {
        return Err(Error::InvalidInput("non-finite rate in CSI study".into()));
    }
    Ok(pairs)
}
