//! Greedy forward (add the best antenna) and backward (drop the least
//! useful antenna) selection on the equal-power capacity.

use rayon::prelude::*;

use crate::capacity::{mean_over_subcarriers, power_factor, Metric, PowerControl, SelectionMask};
use crate::channel::ChannelTensor;
use crate::error::{Error, Result};

fn check(tensor: &ChannelTensor, n_target: usize, rho: f64, subcarriers: &[usize]) -> Result<Vec<usize>> {
    let nt = tensor.n_tx();
    if n_target == 0 || n_target > nt {
        return Err(Error::Parameter(format!("target count {n_target} not in [1, {nt}]")));
    }
    if !(rho.is_finite() && rho > 0.0) {
        return Err(Error::Parameter(format!("SNR {rho} must be positive")));
    }
    if subcarriers.is_empty() {
        return Err(Error::EmptyInput("subcarrier list"));
    }
    if let Some(&s) = subcarriers.iter().find(|&&s| s >= tensor.n_subcarriers()) {
        return Err(Error::Dimension(format!("subcarrier {s} out of range")));
    }
    if !tensor.is_finite() {
        return Err(Error::InvalidInput("channel tensor has non-finite entries".into()));
    }
    let mut sorted = subcarriers.to_vec();
    sorted.sort_unstable();
    Ok(sorted)
}

/// Score of each candidate set, evaluated in parallel; the winner is the
/// first maximum in candidate order.
fn argmax_candidate(
    tensor: &ChannelTensor,
    candidates: &[usize],
    set_for: impl Fn(usize) -> Vec<usize> + Sync,
    f: f64,
    subcarriers: &[usize],
) -> usize {
    let scores: Vec<f64> = candidates
        .par_iter()
        .map(|&t| mean_over_subcarriers(tensor, Metric::EqualPower, &set_for(t), f, subcarriers))
        .collect();
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    candidates[best]
}

fn with_inserted(set: &[usize], t: usize) -> Vec<usize> {
    let mut v = set.to_vec();
    let pos = v.partition_point(|&x| x < t);
    v.insert(pos, t);
    v
}

/// Antennas in the order greedy forward adds them, `n_target` long.
pub fn greedy_forward_order(
    tensor: &ChannelTensor,
    n_target: usize,
    rho: f64,
    control: PowerControl,
    subcarriers: &[usize],
) -> Result<Vec<usize>> {
    let subcarriers = check(tensor, n_target, rho, subcarriers)?;
    let nr = tensor.n_users();
    let mut selected: Vec<usize> = Vec::with_capacity(n_target);
    let mut order = Vec::with_capacity(n_target);
    let mut remaining: Vec<usize> = (0..tensor.n_tx()).collect();
    while order.len() < n_target {
        let f = power_factor(control, rho, selected.len() + 1, nr)?;
        let pick = argmax_candidate(tensor, &remaining, |t| with_inserted(&selected, t), f, &subcarriers);
        remaining.retain(|&t| t != pick);
        selected = with_inserted(&selected, pick);
        order.push(pick);
    }
    Ok(order)
}

pub fn greedy_forward(
    tensor: &ChannelTensor,
    n_target: usize,
    rho: f64,
    control: PowerControl,
    subcarriers: &[usize],
) -> Result<SelectionMask> {
    let order = greedy_forward_order(tensor, n_target, rho, control, subcarriers)?;
    Ok(SelectionMask::from_indices(tensor.n_tx(), &order))
}

/// Antennas in the order greedy backward removes them, until `n_target` remain.
pub fn greedy_backward_order(
    tensor: &ChannelTensor,
    n_target: usize,
    rho: f64,
    control: PowerControl,
    subcarriers: &[usize],
) -> Result<Vec<usize>> {
    let subcarriers = check(tensor, n_target, rho, subcarriers)?;
    let nr = tensor.n_users();
    let mut selected: Vec<usize> = (0..tensor.n_tx()).collect();
    let mut removed = Vec::new();
    while selected.len() > n_target {
        let f = power_factor(control, rho, selected.len() - 1, nr)?;
        let drop = argmax_candidate(
            tensor,
            &selected,
            |t| selected.iter().copied().filter(|&x| x != t).collect(),
            f,
            &subcarriers,
        );
        selected.retain(|&t| t != drop);
        removed.push(drop);
    }
    Ok(removed)
}

pub fn greedy_backward(
    tensor: &ChannelTensor,
    n_target: usize,
    rho: f64,
    control: PowerControl,
    subcarriers: &[usize],
) -> Result<SelectionMask> {
    let removed = greedy_backward_order(tensor, n_target, rho, control, subcarriers)?;
    let mut mask = SelectionMask::all_on(tensor.n_tx());
    for t in removed {
        mask.set(t, false);
    }
    Ok(mask)
}
