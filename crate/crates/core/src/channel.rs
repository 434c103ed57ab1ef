//! Multipath channel synthesis and CSI handling.
//!
//! The channel between antenna `t` and user `r` on subcarrier `s` is the sum
//! of a direct ray (amplitude `1/d`) and one single-bounce ray per scatterer
//! (amplitude `1/(d1*d2)`), each with phase `-2*pi*f_s*length/c`. Any ray whose
//! segments cross the obstacle box is dropped.

use std::io::{Read, Write};

use num_complex::Complex64;
use rand::seq::index;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ScenarioGeometry;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Magic number at the start of a tensor file ("ACHT" little-endian).
pub const TENSOR_MAGIC: u32 = u32::from_le_bytes(*b"ACHT");
pub const TENSOR_VERSION: u32 = 1;

/// OFDM subcarrier layout: `n_subcarriers` tones spread uniformly over
/// `bandwidth`, centred on `carrier_frequency`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CarrierGrid {
    pub carrier_frequency: f64,
    pub bandwidth: f64,
    pub n_subcarriers: usize,
}

impl Default for CarrierGrid {
    fn default() -> Self {
        CarrierGrid { carrier_frequency: 2.6e9, bandwidth: 20e6, n_subcarriers: 300 }
    }
}

impl CarrierGrid {
    pub fn new(carrier_frequency: f64, bandwidth: f64, n_subcarriers: usize) -> Result<Self> {
        let grid = CarrierGrid { carrier_frequency, bandwidth, n_subcarriers };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_subcarriers == 0 {
            return Err(Error::Parameter("n_subcarriers must be at least 1".into()));
        }
        if !(self.carrier_frequency.is_finite() && self.carrier_frequency > 0.0) {
            return Err(Error::Parameter("carrier_frequency must be positive".into()));
        }
        if !(self.bandwidth.is_finite() && self.bandwidth >= 0.0) || self.bandwidth >= 2.0 * self.carrier_frequency {
            return Err(Error::Parameter("bandwidth must be non-negative and below twice the carrier".into()));
        }
        if self.n_subcarriers > 1 && self.bandwidth == 0.0 {
            return Err(Error::Parameter("several subcarriers need a positive bandwidth".into()));
        }
        Ok(())
    }

    /// Subcarrier frequencies in Hz, strictly increasing, spanning the bandwidth.
    pub fn frequencies(&self) -> Vec<f64> {
        let n = self.n_subcarriers;
        if n == 1 {
            return vec![self.carrier_frequency];
        }
        let lo = self.carrier_frequency - self.bandwidth / 2.0;
        let step = self.bandwidth / (n - 1) as f64;
        (0..n).map(|s| lo + step * s as f64).collect()
    }
}

/// Complex gains indexed `(user, antenna, subcarrier)`.
///
/// Stored subcarrier-major so that each subcarrier's `N_R x N_T` matrix is one
/// contiguous row-major slice.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelTensor {
    n_users: usize,
    n_tx: usize,
    n_subcarriers: usize,
    data: Vec<Complex64>,
    normalized: bool,
}

impl ChannelTensor {
    pub fn zeros(n_users: usize, n_tx: usize, n_subcarriers: usize) -> Self {
        ChannelTensor {
            n_users,
            n_tx,
            n_subcarriers,
            data: vec![Complex64::new(0.0, 0.0); n_users * n_tx * n_subcarriers],
            normalized: false,
        }
    }

    /// Builds a tensor from `entry(user, antenna, subcarrier)`.
    pub fn from_fn(
        n_users: usize,
        n_tx: usize,
        n_subcarriers: usize,
        mut entry: impl FnMut(usize, usize, usize) -> Complex64,
    ) -> Self {
        let mut t = Self::zeros(n_users, n_tx, n_subcarriers);
        for s in 0..n_subcarriers {
            for r in 0..n_users {
                for a in 0..n_tx {
                    t.set(r, a, s, entry(r, a, s));
                }
            }
        }
        t
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn n_tx(&self) -> usize {
        self.n_tx
    }

    pub fn n_subcarriers(&self) -> usize {
        self.n_subcarriers
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    #[inline]
    fn offset(&self, r: usize, t: usize, s: usize) -> usize {
        debug_assert!(r < self.n_users && t < self.n_tx && s < self.n_subcarriers);
        (s * self.n_users + r) * self.n_tx + t
    }

    #[inline]
    pub fn get(&self, r: usize, t: usize, s: usize) -> Complex64 {
        self.data[self.offset(r, t, s)]
    }

    pub fn set(&mut self, r: usize, t: usize, s: usize, v: Complex64) {
        let o = self.offset(r, t, s);
        self.data[o] = v;
        self.normalized = false;
    }

    /// Row-major `N_R x N_T` channel matrix of subcarrier `s`.
    #[inline]
    pub fn subcarrier(&self, s: usize) -> &[Complex64] {
        let len = self.n_users * self.n_tx;
        &self.data[s * len..(s + 1) * len]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Mean of `|entry|^2` over every `(user, antenna, subcarrier)`.
    pub fn mean_power(&self) -> f64 {
        if self.data.is_empty() {
            return 0.0;
        }
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>() / self.data.len() as f64
    }

    /// Mean of `|entry|^2` over users and antennas for each subcarrier.
    pub fn subcarrier_powers(&self) -> Vec<f64> {
        let denom = (self.n_users * self.n_tx).max(1) as f64;
        (0..self.n_subcarriers)
            .map(|s| self.subcarrier(s).iter().map(|z| z.norm_sqr()).sum::<f64>() / denom)
            .collect()
    }

    pub fn scaled(&self, factor: f64) -> ChannelTensor {
        ChannelTensor {
            n_users: self.n_users,
            n_tx: self.n_tx,
            n_subcarriers: self.n_subcarriers,
            data: self.data.iter().map(|z| z * factor).collect(),
            normalized: false,
        }
    }

    /// Writes the binary interchange format: five little-endian `u32`
    /// (magic, version, N_R, N_T, c) followed by `(re, im)` `f64` pairs in
    /// `[user][antenna][subcarrier]` row-major order.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let dims = [self.n_users, self.n_tx, self.n_subcarriers];
        let mut header = Vec::with_capacity(20);
        header.extend_from_slice(&TENSOR_MAGIC.to_le_bytes());
        header.extend_from_slice(&TENSOR_VERSION.to_le_bytes());
        for d in dims {
            let d = u32::try_from(d).map_err(|_| Error::Format("dimension exceeds u32".into()))?;
            header.extend_from_slice(&d.to_le_bytes());
        }
        w.write_all(&header)?;
        let mut body = Vec::with_capacity(self.data.len() * 16);
        for r in 0..self.n_users {
            for t in 0..self.n_tx {
                for s in 0..self.n_subcarriers {
                    let z = self.get(r, t, s);
                    body.extend_from_slice(&z.re.to_le_bytes());
                    body.extend_from_slice(&z.im.to_le_bytes());
                }
            }
        }
        w.write_all(&body)?;
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_to(&mut out).expect("writing to a Vec cannot fail");
        out
    }

    /// Reads the format produced by [`ChannelTensor::write_to`]. The
    /// normalized flag is restored from the data (mean power within 1e-9 of 1).
    pub fn read_from<R: Read>(mut r: R) -> Result<ChannelTensor> {
        let mut header = [0u8; 20];
        r.read_exact(&mut header).map_err(|e| Error::Format(format!("short header: {e}")))?;
        let word = |i: usize| u32::from_le_bytes(header[4 * i..4 * i + 4].try_into().unwrap());
        if word(0) != TENSOR_MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        if word(1) != TENSOR_VERSION {
            return Err(Error::Format(format!("unsupported version {}", word(1))));
        }
        let (nr, nt, c) = (word(2) as usize, word(3) as usize, word(4) as usize);
        let count = nr
            .checked_mul(nt)
            .and_then(|x| x.checked_mul(c))
            .ok_or_else(|| Error::Format("dimensions overflow".into()))?;
        let mut body = Vec::new();
        r.read_to_end(&mut body)?;
        if body.len() != count * 16 {
            return Err(Error::Format(format!("expected {} payload bytes, found {}", count * 16, body.len())));
        }
        let mut t = ChannelTensor::zeros(nr, nt, c);
        let mut chunks = body.chunks_exact(16);
        for ri in 0..nr {
            for ti in 0..nt {
                for si in 0..c {
                    let b = chunks.next().unwrap();
                    let re = f64::from_le_bytes(b[..8].try_into().unwrap());
                    let im = f64::from_le_bytes(b[8..].try_into().unwrap());
                    t.set(ri, ti, si, Complex64::new(re, im));
                }
            }
        }
        if !t.is_finite() {
            return Err(Error::Format("non-finite entries".into()));
        }
        t.normalized = count > 0 && (t.mean_power() - 1.0).abs() <= 1e-9;
        Ok(t)
    }
}

struct Ray {
    length: f64,
    amplitude: f64,
}

fn rays_between(geometry: &ScenarioGeometry, user: usize, tx: usize) -> Vec<Ray> {
    let u = &geometry.user_positions[user];
    let a = &geometry.tx_positions[tx];
    let obstacle = &geometry.obstacle;
    let mut rays = Vec::with_capacity(geometry.n_scatterers() + 1);
    if !obstacle.intersects_segment(a, u) {
        let d = a.distance(u);
        rays.push(Ray { length: d, amplitude: 1.0 / d });
    }
    for sc in &geometry.scatterer_positions {
        if obstacle.intersects_segment(a, sc) || obstacle.intersects_segment(sc, u) {
            continue;
        }
        let (d1, d2) = (a.distance(sc), sc.distance(u));
        rays.push(Ray { length: d1 + d2, amplitude: 1.0 / (d1 * d2) });
    }
    rays
}

fn check_nondegenerate(geometry: &ScenarioGeometry) -> Result<()> {
    for (t, a) in geometry.tx_positions.iter().enumerate() {
        for (r, u) in geometry.user_positions.iter().enumerate() {
            if a.distance_squared(u) == 0.0 {
                return Err(Error::DegenerateGeometry(format!("antenna {t} coincides with user {r}")));
            }
        }
        for (k, sc) in geometry.scatterer_positions.iter().enumerate() {
            if a.distance_squared(sc) == 0.0 {
                return Err(Error::DegenerateGeometry(format!("antenna {t} coincides with scatterer {k}")));
            }
        }
    }
    for (r, u) in geometry.user_positions.iter().enumerate() {
        for (k, sc) in geometry.scatterer_positions.iter().enumerate() {
            if u.distance_squared(sc) == 0.0 {
                return Err(Error::DegenerateGeometry(format!("user {r} coincides with scatterer {k}")));
            }
        }
    }
    Ok(())
}

/// Synthesizes the (unnormalized) channel tensor for a geometry.
///
/// Each entry sums the direct ray first, then scatterers in index order, so
/// the result does not depend on the number of worker threads.
pub fn synthesize_channel(geometry: &ScenarioGeometry, grid: &CarrierGrid) -> Result<ChannelTensor> {
    geometry.validate()?;
    grid.validate()?;
    check_nondegenerate(geometry)?;
    let freqs = grid.frequencies();
    let (nr, nt) = (geometry.n_users(), geometry.n_tx());

    let links: Vec<Vec<Complex64>> = (0..nr * nt)
        .into_par_iter()
        .map(|idx| {
            let (r, t) = (idx / nt, idx % nt);
            let rays = rays_between(geometry, r, t);
            freqs
                .iter()
                .map(|&f| {
                    let k = -2.0 * std::f64::consts::PI * f / SPEED_OF_LIGHT;
                    rays.iter()
                        .fold(Complex64::new(0.0, 0.0), |acc, ray| acc + Complex64::from_polar(ray.amplitude, k * ray.length))
                })
                .collect()
        })
        .collect();

    let mut tensor = ChannelTensor::zeros(nr, nt, freqs.len());
    for (idx, gains) in links.into_iter().enumerate() {
        let (r, t) = (idx / nt, idx % nt);
        for (s, g) in gains.into_iter().enumerate() {
            tensor.set(r, t, s, g);
        }
    }
    Ok(tensor)
}

/// Scales the tensor by one real constant so that the mean of `|entry|^2` is 1.
pub fn normalize_csi(tensor: &ChannelTensor) -> Result<ChannelTensor> {
    if !tensor.is_finite() {
        return Err(Error::InvalidInput("channel tensor has non-finite entries".into()));
    }
    let p = tensor.mean_power();
    if p == 0.0 {
        return Err(Error::NormalizationImpossible);
    }
    let mut out = tensor.scaled(1.0 / p.sqrt());
    out.normalized = true;
    Ok(out)
}

/// Multiplicative imperfect-CSI model: every entry is scaled by `1 + u`,
/// `u ~ U[-m, m]` drawn independently per entry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationSpec {
    pub relative_magnitude: f64,
    pub seed: u64,
}

impl PerturbationSpec {
    pub fn new(relative_magnitude: f64, seed: u64) -> Result<Self> {
        let spec = PerturbationSpec { relative_magnitude, seed };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.relative_magnitude;
        if !(m.is_finite() && (0.0..1.0).contains(&m)) {
            return Err(Error::Parameter(format!("perturbation magnitude {m} not in [0, 1)")));
        }
        Ok(())
    }
}

/// Applies [`PerturbationSpec`] to a tensor. Draws are made in
/// `[user][antenna][subcarrier]` order. The result is not re-normalized.
pub fn perturb_csi(tensor: &ChannelTensor, spec: &PerturbationSpec) -> Result<ChannelTensor> {
    spec.validate()?;
    let m = spec.relative_magnitude;
    if m == 0.0 {
        return Ok(tensor.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = tensor.clone();
    for r in 0..tensor.n_users {
        for t in 0..tensor.n_tx {
            for s in 0..tensor.n_subcarriers {
                let u: f64 = rng.gen_range(-m..=m);
                out.set(r, t, s, tensor.get(r, t, s) * (1.0 + u));
            }
        }
    }
    Ok(out)
}

/// Draws `round(fraction * c_total)` distinct subcarriers, returned ascending.
pub fn select_subcarriers_random(c_total: usize, fraction: f64, seed: u64) -> Result<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_subcarriers_with(&mut rng, c_total, fraction)
}

pub(crate) fn random_subset_len(c_total: usize, fraction: f64) -> Result<usize> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::Parameter(format!("subcarrier fraction {fraction} not in (0, 1]")));
    }
    let n = (fraction * c_total as f64).round() as usize;
    if n == 0 {
        return Err(Error::EmptyInput("subcarrier subset rounds to zero indices"));
    }
    Ok(n.min(c_total))
}

pub(crate) fn random_subcarriers_with<R: Rng>(rng: &mut R, c_total: usize, fraction: f64) -> Result<Vec<usize>> {
    let n = random_subset_len(c_total, fraction)?;
    let mut picked = index::sample(rng, c_total, n).into_vec();
    picked.sort_unstable();
    Ok(picked)
}

/// The `count` subcarriers with the largest mean power over users and
/// antennas, strongest first; ties go to the lower index.
pub fn select_subcarriers_strongest(tensor: &ChannelTensor, count: usize) -> Result<Vec<usize>> {
    let c = tensor.n_subcarriers();
    if count == 0 || count > c {
        return Err(Error::Parameter(format!("strongest-subcarrier count {count} not in [1, {c}]")));
    }
    let powers = tensor.subcarrier_powers();
    let mut order: Vec<usize> = (0..c).collect();
    order.sort_by(|&a, &b| powers[b].total_cmp(&powers[a]).then(a.cmp(&b)));
    order.truncate(count);
    Ok(order)
}
