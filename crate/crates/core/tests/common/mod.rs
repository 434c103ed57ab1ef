//! Helpers shared by the integration tests: seeded random instances and
//! reference computations that do not go through the crate's kernels.
#![allow(dead_code)]

use antsel::capacity::{power_factor, PowerControl};
use antsel::channel::ChannelTensor;
use antsel::linalg::CMatrix;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn cnum<R: Rng>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

pub fn random_cmatrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| cnum(rng))
}

pub fn random_tensor<R: Rng>(rng: &mut R, nr: usize, nt: usize, c: usize) -> ChannelTensor {
    ChannelTensor::from_fn(nr, nt, c, |_, _, _| cnum(rng))
}

pub fn to_na(h: &CMatrix) -> DMatrix<Complex64> {
    DMatrix::from_fn(h.rows(), h.cols(), |i, j| h.get(i, j))
}

/// `log2 det(I_{N_TS} + (f/N_R) H^H H)` by LU determinant.
pub fn logdet_antenna_side(h: &CMatrix, f: f64) -> f64 {
    if h.cols() == 0 {
        return 0.0;
    }
    let m = to_na(h);
    let nr = h.rows() as f64;
    let a = DMatrix::<Complex64>::identity(h.cols(), h.cols()) + m.adjoint() * &m * Complex64::new(f / nr, 0.0);
    a.determinant().re.log2()
}

/// `log2 det(I_{N_R} + (f/N_R) H H^H)` by LU determinant.
pub fn logdet_user_side(h: &CMatrix, f: f64) -> f64 {
    let m = to_na(h);
    let nr = h.rows() as f64;
    let a = DMatrix::<Complex64>::identity(h.rows(), h.rows()) + &m * m.adjoint() * Complex64::new(f / nr, 0.0);
    a.determinant().re.log2()
}

pub fn columns_at(tensor: &ChannelTensor, s: usize, cols: &[usize]) -> CMatrix {
    CMatrix::from_fn(tensor.n_users(), cols.len(), |r, j| tensor.get(r, cols[j], s))
}

/// Mean equal-power capacity of `cols` over `subs`, computed on the antenna side.
pub fn equal_power_mean(tensor: &ChannelTensor, cols: &[usize], control: PowerControl, rho: f64, subs: &[usize]) -> f64 {
    if cols.is_empty() {
        return 0.0;
    }
    let f = power_factor(control, rho, cols.len(), tensor.n_users()).unwrap();
    subs.iter().map(|&s| logdet_antenna_side(&columns_at(tensor, s, cols), f)).sum::<f64>() / subs.len() as f64
}

/// ZF effective gains `1 / [(H H^H)^{-1}]_rr` by a general matrix inverse.
pub fn zf_gains(h: &CMatrix) -> Vec<f64> {
    let m = to_na(h);
    let inv = (&m * m.adjoint()).try_inverse().expect("invertible Gram matrix");
    (0..h.rows()).map(|r| 1.0 / inv[(r, r)].re).collect()
}

/// Best rate over all power splits on a simplex grid with `steps` divisions.
pub fn grid_rate(gains: &[f64], budget: f64, steps: usize) -> f64 {
    fn rec(g: &[f64], left: usize, unit: f64, acc: f64, best: &mut f64) {
        if g.len() == 1 {
            let r = acc + (1.0 + left as f64 * unit * g[0]).log2();
            if r > *best {
                *best = r;
            }
            return;
        }
        for q in 0..=left {
            rec(&g[1..], left - q, unit, acc + (1.0 + q as f64 * unit * g[0]).log2(), best);
        }
    }
    let mut best = f64::NEG_INFINITY;
    rec(gains, steps, budget / steps as f64, 0.0, &mut best);
    best
}

/// Index of the first maximum.
pub fn first_argmax(v: &[f64]) -> usize {
    let mut b = 0;
    for i in 1..v.len() {
        if v[i] > v[b] {
            b = i;
        }
    }
    b
}

/// Forward selection order re-derived step by step from antenna-side determinants.
pub fn forward_oracle(t: &ChannelTensor, n: usize, rho: f64, control: PowerControl, subs: &[usize]) -> Vec<usize> {
    let mut sel: Vec<usize> = Vec::new();
    let mut order = Vec::new();
    while order.len() < n {
        let cands: Vec<usize> = (0..t.n_tx()).filter(|a| !sel.contains(a)).collect();
        let scores: Vec<f64> = cands
            .iter()
            .map(|&a| {
                let mut s = sel.clone();
                s.push(a);
                equal_power_mean(t, &s, control, rho, subs)
            })
            .collect();
        let pick = cands[first_argmax(&scores)];
        sel.push(pick);
        order.push(pick);
    }
    order
}

/// Backward removal order re-derived step by step: drop the antenna whose
/// removal leaves the largest capacity.
pub fn backward_oracle(t: &ChannelTensor, n: usize, rho: f64, control: PowerControl, subs: &[usize]) -> Vec<usize> {
    let mut sel: Vec<usize> = (0..t.n_tx()).collect();
    let mut removed = Vec::new();
    while sel.len() > n {
        let scores: Vec<f64> = sel
            .iter()
            .map(|&a| {
                let rest: Vec<usize> = sel.iter().copied().filter(|&x| x != a).collect();
                equal_power_mean(t, &rest, control, rho, subs)
            })
            .collect();
        let drop = sel[first_argmax(&scores)];
        sel.retain(|&x| x != drop);
        removed.push(drop);
    }
    removed
}
