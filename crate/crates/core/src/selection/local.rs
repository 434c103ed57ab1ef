//! Self-organising local antenna selection.
//!
//! Every antenna keeps a flag. In each iteration, antenna `i` looks at the
//! currently flagged antennas `S_i` of its neighbourhood and compares the
//! local capacity of `S_i` with that of `S_i + {i}`, both under power
//! control B. It proposes to be on iff the second is strictly larger; the
//! proposal is then inverted with probability `p_M`. All antennas update
//! synchronously from the same flag vector. After `N_i` iterations the flag
//! vector with the highest global capacity is committed.

use num_complex::Complex64;
use rand::seq::index;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::neighborhood::NeighborhoodTable;
use crate::capacity::{mean_over_subcarriers, power_factor, Metric, PowerControl, SelectionMask};
use crate::channel::{random_subcarriers_with, random_subset_len, select_subcarriers_strongest, ChannelTensor};
use crate::error::{Error, Result};
use crate::linalg::{add_column_outer, gram_of_columns, log2_det_identity_plus};

/// Which subcarriers the local decisions are evaluated on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SubcarrierPolicy {
    /// Every subcarrier.
    Full,
    /// A fresh uniform subset of `round(fraction * c)` subcarriers per iteration.
    RandomFraction { fraction: f64 },
    /// The `count` subcarriers of largest mean power, fixed for the run.
    Strongest { count: usize },
}

impl SubcarrierPolicy {
    /// Short label such as `full-300`, `random-15` or `strongest-60`.
    pub fn label(&self, c_total: usize) -> String {
        match *self {
            SubcarrierPolicy::Full => format!("full-{c_total}"),
            SubcarrierPolicy::RandomFraction { fraction } => {
                format!("random-{}", (fraction * c_total as f64).round() as usize)
            }
            SubcarrierPolicy::Strongest { count } => format!("strongest-{count}"),
        }
    }

    fn validate(&self, c_total: usize) -> Result<()> {
        match *self {
            SubcarrierPolicy::Full => Ok(()),
            SubcarrierPolicy::RandomFraction { fraction } => random_subset_len(c_total, fraction).map(|_| ()),
            SubcarrierPolicy::Strongest { count } if count >= 1 && count <= c_total => Ok(()),
            SubcarrierPolicy::Strongest { count } => {
                Err(Error::Parameter(format!("strongest-subcarrier count {count} not in [1, {c_total}]")))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalParams {
    /// Neighbourhood size.
    pub k: usize,
    /// Probability of inverting an antenna's proposed flag, per iteration.
    pub mutation_probability: f64,
    /// Iterations run on one CSI snapshot before committing.
    pub iterations: usize,
    /// Number of flags initially on.
    pub n_init: usize,
    pub subcarrier_policy: SubcarrierPolicy,
    /// Metric used to rank iterations when committing.
    pub global_metric: Metric,
    pub seed: u64,
}

impl LocalParams {
    /// `p_M = 1/N_T`, `n_init = N_T/2`, 30 iterations, all subcarriers.
    pub fn defaults_for(n_tx: usize, k: usize, seed: u64) -> Self {
        LocalParams {
            k,
            mutation_probability: 1.0 / n_tx.max(1) as f64,
            iterations: 30,
            n_init: n_tx / 2,
            subcarrier_policy: SubcarrierPolicy::Full,
            global_metric: Metric::ZfWaterfilling,
            seed,
        }
    }

    pub fn validate(&self, n_tx: usize, c_total: usize) -> Result<()> {
        if self.k == 0 || self.k >= n_tx {
            return Err(Error::Parameter(format!("k = {} not in [1, {}]", self.k, n_tx.saturating_sub(1))));
        }
        if !(0.0..=1.0).contains(&self.mutation_probability) {
            return Err(Error::Parameter(format!("mutation probability {} not in [0, 1]", self.mutation_probability)));
        }
        if self.iterations == 0 {
            return Err(Error::Parameter("at least one iteration required".into()));
        }
        if self.n_init > n_tx {
            return Err(Error::Parameter(format!("n_init {} exceeds antenna count {n_tx}", self.n_init)));
        }
        self.subcarrier_policy.validate(c_total)
    }
}

/// State after one iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub flags: SelectionMask,
    /// Global score of `flags` over all subcarriers, by `LocalParams::global_metric`.
    pub score: f64,
    pub mutated: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalRunTrace {
    pub initial_flags: SelectionMask,
    pub iterations: Vec<IterationRecord>,
    pub best_iteration: usize,
    pub committed_mask: SelectionMask,
}

impl LocalRunTrace {
    pub fn committed_score(&self) -> f64 {
        self.iterations[self.best_iteration].score
    }

    /// Selected-antenna count after every iteration.
    pub fn size_trace(&self) -> Vec<usize> {
        self.iterations.iter().map(|r| r.flags.count()).collect()
    }
}

/// Local capacity under power control B of antennas `cols` (ascending),
/// optionally restricted to `users`.
fn local_capacity_pair(
    tensor: &ChannelTensor,
    users: Option<&[usize]>,
    others: &[usize],
    me: usize,
    rho: f64,
    subcarriers: &[usize],
) -> (f64, f64) {
    let nt = tensor.n_tx();
    let nr = users.map_or(tensor.n_users(), <[usize]>::len);
    if nr == 0 || subcarriers.is_empty() {
        return (0.0, 0.0);
    }
    let n_ts = others.len();
    // control B: f / N_R = rho / N_TS
    let scale_without = if n_ts == 0 { 0.0 } else { rho / n_ts as f64 };
    let scale_with = rho / (n_ts + 1) as f64;

    let mut gram = vec![Complex64::new(0.0, 0.0); nr * nr];
    let mut rows = match users {
        Some(u) => vec![Complex64::new(0.0, 0.0); u.len() * nt],
        None => Vec::new(),
    };
    let (mut without, mut with) = (0.0, 0.0);
    for &s in subcarriers {
        let full = tensor.subcarrier(s);
        let h: &[Complex64] = match users {
            Some(u) => {
                for (dst, &r) in u.iter().enumerate() {
                    rows[dst * nt..(dst + 1) * nt].copy_from_slice(&full[r * nt..(r + 1) * nt]);
                }
                &rows
            }
            None => full,
        };
        gram_of_columns(h, nr, nt, others, &mut gram);
        if n_ts > 0 {
            without += log2_det_identity_plus(&gram, nr, scale_without);
        }
        add_column_outer(&mut gram, h, nr, nt, me, 1.0);
        with += log2_det_identity_plus(&gram, nr, scale_with);
    }
    let n = subcarriers.len() as f64;
    (without / n, with / n)
}

/// `(C_{i-}, C_{i+})` for antenna `i` given the current flags.
pub fn local_capacities(
    tensor: &ChannelTensor,
    flags: &[bool],
    table: &NeighborhoodTable,
    i: usize,
    rho: f64,
    subcarriers: &[usize],
) -> (f64, f64) {
    let mut active: Vec<usize> = table.neighbors(i).iter().copied().filter(|&j| flags[j]).collect();
    active.sort_unstable();
    local_capacity_pair(tensor, table.local_users(i), &active, i, rho, subcarriers)
}

/// Deterministic part of one iteration: every antenna's proposed flag, all
/// computed from the same input `flags`.
pub fn local_proposals(
    tensor: &ChannelTensor,
    flags: &[bool],
    table: &NeighborhoodTable,
    rho: f64,
    subcarriers: &[usize],
) -> Vec<bool> {
    (0..flags.len())
        .into_par_iter()
        .map(|i| {
            let (without, with) = local_capacities(tensor, flags, table, i, rho, subcarriers);
            with > without
        })
        .collect()
}

fn check_step_inputs(tensor: &ChannelTensor, flags: &[bool], table: &NeighborhoodTable, subcarriers: &[usize]) -> Result<()> {
    if flags.len() != tensor.n_tx() || table.n_tx() != tensor.n_tx() {
        return Err(Error::Dimension(format!(
            "flags {} / table {} / tensor {} antennas",
            flags.len(),
            table.n_tx(),
            tensor.n_tx()
        )));
    }
    if let Some(&s) = subcarriers.iter().find(|&&s| s >= tensor.n_subcarriers()) {
        return Err(Error::Dimension(format!("subcarrier {s} out of range")));
    }
    if subcarriers.is_empty() {
        return Err(Error::EmptyInput("subcarrier list"));
    }
    Ok(())
}

/// One synchronous iteration. Mutation draws consume one uniform variate per
/// antenna from `rng`, in ascending antenna order. Returns the new flags and
/// the indices whose proposal was inverted.
pub fn local_step_traced<R: Rng>(
    tensor: &ChannelTensor,
    flags: &[bool],
    table: &NeighborhoodTable,
    rho: f64,
    subcarriers: &[usize],
    mutation_probability: f64,
    rng: &mut R,
) -> Result<(Vec<bool>, Vec<usize>)> {
    check_step_inputs(tensor, flags, table, subcarriers)?;
    let mut next = local_proposals(tensor, flags, table, rho, subcarriers);
    let mut mutated = Vec::new();
    for (i, flag) in next.iter_mut().enumerate() {
        let u: f64 = rng.gen();
        if u < mutation_probability {
            *flag = !*flag;
            mutated.push(i);
        }
    }
    Ok((next, mutated))
}

pub fn local_step<R: Rng>(
    tensor: &ChannelTensor,
    flags: &[bool],
    table: &NeighborhoodTable,
    rho: f64,
    subcarriers: &[usize],
    mutation_probability: f64,
    rng: &mut R,
) -> Result<Vec<bool>> {
    local_step_traced(tensor, flags, table, rho, subcarriers, mutation_probability, rng).map(|(f, _)| f)
}

fn global_score(
    tensor: &ChannelTensor,
    flags: &[bool],
    metric: Metric,
    control: PowerControl,
    rho: f64,
    all: &[usize],
) -> Result<f64> {
    let cols: Vec<usize> = flags.iter().enumerate().filter_map(|(i, &b)| b.then_some(i)).collect();
    if cols.is_empty() {
        return Ok(0.0);
    }
    let f = power_factor(control, rho, cols.len(), tensor.n_users())?;
    Ok(mean_over_subcarriers(tensor, metric, &cols, f, all))
}

/// Runs the local algorithm for `params.iterations` iterations and commits
/// the best flag vector (first one on ties). Pure function of its inputs.
///
/// The random stream seeded by `params.seed` is consumed in this order: the
/// initial flags, then per iteration the subcarrier subset (random policy
/// only) followed by the mutation draws.
pub fn local_select(
    tensor: &ChannelTensor,
    table: &NeighborhoodTable,
    params: &LocalParams,
    rho: f64,
    control_for_scoring: PowerControl,
) -> Result<LocalRunTrace> {
    let (nt, c) = (tensor.n_tx(), tensor.n_subcarriers());
    params.validate(nt, c)?;
    if table.k() != params.k {
        return Err(Error::Parameter(format!("table built for k = {}, params ask k = {}", table.k(), params.k)));
    }
    if table.n_tx() != nt {
        return Err(Error::Dimension(format!("table has {} antennas, tensor {nt}", table.n_tx())));
    }
    if !(rho.is_finite() && rho > 0.0) {
        return Err(Error::Parameter(format!("SNR {rho} must be positive")));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut flags = vec![false; nt];
    for i in index::sample(&mut rng, nt, params.n_init) {
        flags[i] = true;
    }
    let initial_flags = SelectionMask::from_bits(flags.clone());

    let all: Vec<usize> = (0..c).collect();
    let fixed = match params.subcarrier_policy {
        SubcarrierPolicy::Full => Some(all.clone()),
        SubcarrierPolicy::Strongest { count } => {
            let mut s = select_subcarriers_strongest(tensor, count)?;
            s.sort_unstable();
            Some(s)
        }
        SubcarrierPolicy::RandomFraction { .. } => None,
    };

    let mut iterations = Vec::with_capacity(params.iterations);
    for _ in 0..params.iterations {
        let drawn;
        let subcarriers: &[usize] = match (&fixed, params.subcarrier_policy) {
            (Some(s), _) => s,
            (None, SubcarrierPolicy::RandomFraction { fraction }) => {
                drawn = random_subcarriers_with(&mut rng, c, fraction)?;
                &drawn
            }
            (None, _) => unreachable!("only the random policy draws per iteration"),
        };
        let (next, mutated) =
            local_step_traced(tensor, &flags, table, rho, subcarriers, params.mutation_probability, &mut rng)?;
        flags = next;
        let score = global_score(tensor, &flags, params.global_metric, control_for_scoring, rho, &all)?;
        iterations.push(IterationRecord { flags: SelectionMask::from_bits(flags.clone()), score, mutated });
    }

    let mut best_iteration = 0;
    for (i, rec) in iterations.iter().enumerate() {
        if rec.score > iterations[best_iteration].score {
            best_iteration = i;
        }
    }
    let committed_mask = iterations[best_iteration].flags.clone();
    Ok(LocalRunTrace { initial_flags, iterations, best_iteration, committed_mask })
}
