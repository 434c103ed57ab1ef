//! Sum-rate metrics for an antenna subset.
//!
//! Per subcarrier the channel is the `N_R x N_TS` column subset `H_c` of the
//! `N_R x N_T` matrix (rows are users). Two metrics are provided:
//!
//! * equal-power capacity `log2 det(I + (f/N_R) H_c H_c^H)`, always evaluated
//!   on the `N_R x N_R` Gram matrix;
//! * zero-forcing with water-filling over the per-user effective gains
//!   `g_r = 1 / [(H_c H_c^H)^{-1}]_rr`, total power `f`.
//!
//! `f` is the power factor of the chosen [`PowerControl`] rule.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelTensor;
use crate::error::{Error, Result};
use crate::linalg::{gram_of_columns, inverse_diagonal_and_condition, log2_det_identity_plus, CMatrix};

/// Gram matrices with a 1-norm condition number above this make zero forcing
/// infeasible (rate 0).
pub const ZF_CONDITION_LIMIT: f64 = 1e12;

/// Transmit power rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PowerControl {
    /// `f = rho * N_R`: array gain raises user SNR.
    A,
    /// `f = rho * N_R / N_TS`: array gain lowers transmit power.
    B,
}

impl fmt::Display for PowerControl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PowerControl::A => f.write_str("A"),
            PowerControl::B => f.write_str("B"),
        }
    }
}

pub fn power_factor(control: PowerControl, rho: f64, n_ts: usize, n_r: usize) -> Result<f64> {
    if !(rho.is_finite() && rho > 0.0) {
        return Err(Error::Parameter(format!("SNR {rho} must be positive")));
    }
    if n_r == 0 {
        return Err(Error::Parameter("at least one user required".into()));
    }
    match control {
        PowerControl::A => Ok(rho * n_r as f64),
        PowerControl::B if n_ts == 0 => Err(Error::UndefinedPowerFactor),
        PowerControl::B => Ok(rho * n_r as f64 / n_ts as f64),
    }
}

/// Converts an SNR in dB to linear scale.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// On/off state of every transmit antenna.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SelectionMask {
    bits: Vec<bool>,
}

impl SelectionMask {
    pub fn all_off(n: usize) -> Self {
        SelectionMask { bits: vec![false; n] }
    }

    pub fn all_on(n: usize) -> Self {
        SelectionMask { bits: vec![true; n] }
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        SelectionMask { bits }
    }

    /// Panics if an index is out of range.
    pub fn from_indices(n: usize, on: &[usize]) -> Self {
        let mut m = Self::all_off(n);
        for &i in on {
            m.bits[i] = true;
        }
        m
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Number of selected antennas, `N_TS`.
    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn get(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn set(&mut self, i: usize, on: bool) {
        self.bits[i] = on;
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Selected antenna indices, ascending.
    pub fn selected(&self) -> Vec<usize> {
        self.bits.iter().enumerate().filter_map(|(i, &b)| b.then_some(i)).collect()
    }
}

impl fmt::Display for SelectionMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Per-subcarrier rate metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    EqualPower,
    ZfWaterfilling,
}

fn check_factor(f: f64) -> Result<()> {
    if f.is_finite() && f > 0.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("power factor {f} must be positive")))
    }
}

/// Equal-power sum capacity of one subcarrier, bits/s/Hz.
pub fn sum_capacity_equal_power(h_sub: &CMatrix, f: f64) -> Result<f64> {
    if !h_sub.is_finite() {
        return Err(Error::InvalidInput("channel matrix has non-finite entries".into()));
    }
    if h_sub.cols() == 0 || h_sub.rows() == 0 {
        return Ok(0.0);
    }
    check_factor(f)?;
    let nr = h_sub.rows();
    Ok(log2_det_identity_plus(&h_sub.gram(), nr, f / nr as f64))
}

/// Optimal power split over parallel channels with gains `gains` and total
/// power `budget`: `p_k = max(0, mu - 1/g_k)`. Exact active-set solution.
pub fn waterfill(gains: &[f64], budget: f64) -> Result<Vec<f64>> {
    if gains.is_empty() {
        return Err(Error::EmptyInput("water-filling gains"));
    }
    if gains.iter().any(|&g| !(g.is_finite() && g > 0.0)) {
        return Err(Error::Parameter("water-filling gains must be positive and finite".into()));
    }
    if !(budget.is_finite() && budget > 0.0) {
        return Err(Error::Parameter(format!("water-filling budget {budget} must be positive")));
    }
    let mut order: Vec<usize> = (0..gains.len()).collect();
    // strongest channel (lowest floor 1/g) first
    order.sort_by(|&a, &b| gains[b].total_cmp(&gains[a]).then(a.cmp(&b)));
    let floors: Vec<f64> = order.iter().map(|&k| 1.0 / gains[k]).collect();

    let mut level = budget + floors[0];
    let mut prefix = 0.0;
    for (m, &floor) in floors.iter().enumerate() {
        prefix += floor;
        let candidate = (budget + prefix) / (m + 1) as f64;
        if candidate > floor {
            level = candidate;
        } else {
            break;
        }
    }
    let mut powers = vec![0.0; gains.len()];
    for (&k, &floor) in order.iter().zip(&floors) {
        powers[k] = (level - floor).max(0.0);
    }
    Ok(powers)
}

/// `sum_k log2(1 + p_k g_k)`.
pub fn parallel_rate(gains: &[f64], powers: &[f64]) -> f64 {
    gains.iter().zip(powers).map(|(g, p)| (1.0 + p * g).log2()).sum()
}

/// Zero-forcing water-filling sum rate of one subcarrier, bits/s/Hz. Zero
/// when `N_TS < N_R` or the Gram matrix is singular or ill-conditioned.
pub fn zf_waterfilling_rate(h_sub: &CMatrix, f: f64) -> Result<f64> {
    if !h_sub.is_finite() {
        return Err(Error::InvalidInput("channel matrix has non-finite entries".into()));
    }
    if h_sub.rows() == 0 || h_sub.cols() < h_sub.rows() {
        return Ok(0.0);
    }
    check_factor(f)?;
    Ok(zf_from_gram(&h_sub.gram(), h_sub.rows(), f))
}

pub(crate) fn zf_from_gram(gram: &[Complex64], nr: usize, f: f64) -> f64 {
    let Some((inv_diag, cond)) = inverse_diagonal_and_condition(gram, nr) else {
        return 0.0;
    };
    if !(cond <= ZF_CONDITION_LIMIT) || inv_diag.iter().any(|&d| !(d > 0.0)) {
        return 0.0;
    }
    let gains: Vec<f64> = inv_diag.iter().map(|d| 1.0 / d).collect();
    match waterfill(&gains, f) {
        Ok(p) => parallel_rate(&gains, &p),
        Err(_) => 0.0,
    }
}

/// Evaluates a metric on a column subset of a row-major `nr x nt` matrix,
/// reusing `gram` as scratch (`nr * nr`).
pub(crate) fn metric_on_columns(
    metric: Metric,
    h: &[Complex64],
    nr: usize,
    nt: usize,
    cols: &[usize],
    f: f64,
    gram: &mut [Complex64],
) -> f64 {
    if cols.is_empty() {
        return 0.0;
    }
    match metric {
        Metric::EqualPower => {
            gram_of_columns(h, nr, nt, cols, gram);
            log2_det_identity_plus(gram, nr, f / nr as f64)
        }
        Metric::ZfWaterfilling => {
            if cols.len() < nr {
                return 0.0;
            }
            gram_of_columns(h, nr, nt, cols, gram);
            zf_from_gram(gram, nr, f)
        }
    }
}

/// Mean of `metric` over `subcarriers` (must be sorted ascending), for the
/// antenna columns `cols` at power factor `f`. No validation.
pub(crate) fn mean_over_subcarriers(
    tensor: &ChannelTensor,
    metric: Metric,
    cols: &[usize],
    f: f64,
    subcarriers: &[usize],
) -> f64 {
    if cols.is_empty() || subcarriers.is_empty() {
        return 0.0;
    }
    let (nr, nt) = (tensor.n_users(), tensor.n_tx());
    let mut gram = vec![Complex64::new(0.0, 0.0); nr * nr];
    let total: f64 = subcarriers
        .iter()
        .map(|&s| metric_on_columns(metric, tensor.subcarrier(s), nr, nt, cols, f, &mut gram))
        .sum();
    total / subcarriers.len() as f64
}

/// Mean per-subcarrier rate of the masked antennas over `subcarriers`, with
/// `f = power_factor(control, rho, N_TS, N_R)`. An all-off mask scores 0.
pub fn score_selection(
    tensor: &ChannelTensor,
    mask: &SelectionMask,
    control: PowerControl,
    rho: f64,
    subcarriers: &[usize],
    metric: Metric,
) -> Result<f64> {
    if mask.len() != tensor.n_tx() {
        return Err(Error::Dimension(format!("mask has {} antennas, tensor {}", mask.len(), tensor.n_tx())));
    }
    if subcarriers.is_empty() {
        return Err(Error::EmptyInput("subcarrier list"));
    }
    if let Some(&s) = subcarriers.iter().find(|&&s| s >= tensor.n_subcarriers()) {
        return Err(Error::Dimension(format!("subcarrier {s} out of range")));
    }
    let cols = mask.selected();
    if cols.is_empty() {
        return Ok(0.0);
    }
    let f = power_factor(control, rho, cols.len(), tensor.n_users())?;
    for &s in subcarriers {
        for r in 0..tensor.n_users() {
            for &t in &cols {
                let z = tensor.get(r, t, s);
                if !(z.re.is_finite() && z.im.is_finite()) {
                    return Err(Error::InvalidInput(format!("non-finite channel entry ({r}, {t}, {s})")));
                }
            }
        }
    }
    let mut sorted = subcarriers.to_vec();
    sorted.sort_unstable();
    Ok(mean_over_subcarriers(tensor, metric, &cols, f, &sorted))
}

/// Both metrics for one selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityReport {
    pub equal_power_capacity: f64,
    pub zf_waterfilling_rate: f64,
    pub n_selected: usize,
    pub power_control: PowerControl,
    pub subcarrier_indices: Vec<usize>,
}

pub fn capacity_report(
    tensor: &ChannelTensor,
    mask: &SelectionMask,
    control: PowerControl,
    rho: f64,
    subcarriers: &[usize],
) -> Result<CapacityReport> {
    Ok(CapacityReport {
        equal_power_capacity: score_selection(tensor, mask, control, rho, subcarriers, Metric::EqualPower)?,
        zf_waterfilling_rate: score_selection(tensor, mask, control, rho, subcarriers, Metric::ZfWaterfilling)?,
        n_selected: mask.count(),
        power_control: control,
        subcarrier_indices: subcarriers.to_vec(),
    })
}
