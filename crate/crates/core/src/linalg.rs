//! Small dense complex kernels on `N_R x N_R` Hermitian matrices, stored
//! row-major in flat slices.

use num_complex::Complex64;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.data[i * cols + j] = f(i, j);
            }
        }
        m
    }

    /// Wraps a row-major buffer of length `rows * cols`.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<Complex64>) -> Self {
        assert_eq!(data.len(), rows * cols, "buffer length does not match shape");
        CMatrix { rows, cols, data }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { Complex64::new(1.0, 0.0) } else { ZERO })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Keeps the listed columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> CMatrix {
        CMatrix::from_fn(self.rows, cols.len(), |i, j| self.get(i, cols[j]))
    }

    /// `self * self^H`, an `rows x rows` Hermitian matrix.
    pub fn gram(&self) -> Vec<Complex64> {
        let all: Vec<usize> = (0..self.cols).collect();
        let mut g = vec![ZERO; self.rows * self.rows];
        gram_of_columns(&self.data, self.rows, self.cols, &all, &mut g);
        g
    }
}

/// Writes `H_S H_S^H` into `out` (`nr x nr`), where `H_S` keeps the columns
/// `cols` of the row-major `nr x nt` matrix `h`. Columns are accumulated in
/// the order given.
pub fn gram_of_columns(h: &[Complex64], nr: usize, nt: usize, cols: &[usize], out: &mut [Complex64]) {
    debug_assert_eq!(h.len(), nr * nt);
    debug_assert_eq!(out.len(), nr * nr);
    out.fill(ZERO);
    for a in 0..nr {
        let row_a = &h[a * nt..(a + 1) * nt];
        for b in a..nr {
            let row_b = &h[b * nt..(b + 1) * nt];
            let mut acc = ZERO;
            for &t in cols {
                acc += row_a[t] * row_b[t].conj();
            }
            out[a * nr + b] = acc;
            out[b * nr + a] = acc.conj();
        }
    }
}

/// `gram += sign * v v^H` with `v` column `t` of the row-major `nr x nt` matrix `h`.
pub fn add_column_outer(gram: &mut [Complex64], h: &[Complex64], nr: usize, nt: usize, t: usize, sign: f64) {
    for a in 0..nr {
        let va = h[a * nt + t];
        for b in a..nr {
            let v = va * h[b * nt + t].conj() * sign;
            gram[a * nr + b] += v;
            if a != b {
                gram[b * nr + a] += v.conj();
            }
        }
    }
    for a in 0..nr {
        gram[a * nr + a].im = 0.0;
    }
}

/// In-place lower Cholesky factorization of a Hermitian matrix. Returns
/// `false` when a pivot is not strictly positive (matrix not positive definite).
/// The strict upper triangle is left untouched.
pub fn cholesky_in_place(a: &mut [Complex64], n: usize) -> bool {
    for j in 0..n {
        let mut d = a[j * n + j].re;
        for k in 0..j {
            d -= a[j * n + k].norm_sqr();
        }
        if !(d > 0.0) || !d.is_finite() {
            return false;
        }
        let ljj = d.sqrt();
        a[j * n + j] = Complex64::new(ljj, 0.0);
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k].conj();
            }
            a[i * n + j] = s / ljj;
        }
    }
    true
}

/// `log2 det(I + scale * G)` for Hermitian positive semidefinite `G`.
pub fn log2_det_identity_plus(gram: &[Complex64], n: usize, scale: f64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let mut a: Vec<Complex64> = gram.iter().map(|z| z * scale).collect();
    for i in 0..n {
        a[i * n + i] += 1.0;
    }
    if !cholesky_in_place(&mut a, n) {
        // I + scale*G is positive definite for PSD G; only reachable through
        // rounding on wildly scaled input.
        return f64::NAN;
    }
    let ln_det: f64 = (0..n).map(|i| a[i * n + i].re.ln()).sum::<f64>() * 2.0;
    ln_det / std::f64::consts::LN_2
}

/// Diagonal of `G^{-1}` and the 1-norm condition number of a Hermitian
/// positive definite `G`. `None` if the Cholesky factorization breaks down.
pub fn inverse_diagonal_and_condition(gram: &[Complex64], n: usize) -> Option<(Vec<f64>, f64)> {
    let mut l = gram.to_vec();
    if !cholesky_in_place(&mut l, n) {
        return None;
    }
    // Lower-triangular inverse of L by forward substitution, column by column.
    let mut linv = vec![ZERO; n * n];
    for c in 0..n {
        linv[c * n + c] = Complex64::new(1.0 / l[c * n + c].re, 0.0);
        for i in c + 1..n {
            let mut s = ZERO;
            for k in c..i {
                s -= l[i * n + k] * linv[k * n + c];
            }
            linv[i * n + c] = s / l[i * n + i].re;
        }
    }
    // G^{-1} = L^{-H} L^{-1}
    let mut inv = vec![ZERO; n * n];
    for i in 0..n {
        for j in i..n {
            let mut s = ZERO;
            for k in j..n {
                s += linv[k * n + i].conj() * linv[k * n + j];
            }
            inv[i * n + j] = s;
            inv[j * n + i] = s.conj();
        }
    }
    let norm1 = |m: &[Complex64]| (0..n).map(|j| (0..n).map(|i| m[i * n + j].norm()).sum::<f64>()).fold(0.0, f64::max);
    let cond = norm1(gram) * norm1(&inv);
    let diag = (0..n).map(|i| inv[i * n + i].re).collect();
    Some((diag, cond))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn cholesky_reconstructs() {
        let h = CMatrix::from_fn(3, 5, |i, j| c(((i * i + 3 * j) % 4) as f64 - 1.5, ((i + j * j) % 3) as f64 * 0.7));
        let g = h.gram();
        let mut l = g.clone();
        assert!(cholesky_in_place(&mut l, 3));
        for i in 0..3 {
            for j in 0..3 {
                let mut s = ZERO;
                for k in 0..=i.min(j) {
                    s += l[i * 3 + k] * l[j * 3 + k].conj();
                }
                assert!((s - g[i * 3 + j]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn cholesky_rejects_singular() {
        // rank one
        let h = CMatrix::from_fn(2, 1, |i, _| c(1.0 + i as f64, 0.0));
        let mut g = h.gram();
        assert!(!cholesky_in_place(&mut g, 2));
        assert!(inverse_diagonal_and_condition(&h.gram(), 2).is_none());
    }

    #[test]
    fn logdet_identity_case() {
        let g = CMatrix::identity(2).gram();
        assert!((log2_det_identity_plus(&g, 2, 1.0) - 2.0).abs() < 1e-15);
        assert_eq!(log2_det_identity_plus(&[], 0, 1.0), 0.0);
    }

    #[test]
    fn inverse_diagonal_of_diag_matrix() {
        let g = vec![c(2.0, 0.0), ZERO, ZERO, c(0.5, 0.0)];
        let (d, cond) = inverse_diagonal_and_condition(&g, 2).unwrap();
        assert!((d[0] - 0.5).abs() < 1e-15 && (d[1] - 2.0).abs() < 1e-15);
        assert!((cond - 4.0).abs() < 1e-12);
    }

    #[test]
    fn rank_one_update_matches_recompute() {
        let h = CMatrix::from_fn(3, 4, |i, j| c((i * 3 + j) as f64 * 0.17 - 0.9, (j as f64 - i as f64) * 0.31));
        let mut g = vec![ZERO; 9];
        gram_of_columns(h.as_slice(), 3, 4, &[0, 2], &mut g);
        add_column_outer(&mut g, h.as_slice(), 3, 4, 3, 1.0);
        let mut expect = vec![ZERO; 9];
        gram_of_columns(h.as_slice(), 3, 4, &[0, 2, 3], &mut expect);
        assert!(g.iter().zip(&expect).all(|(a, b)| (a - b).norm() < 1e-14));
        add_column_outer(&mut g, h.as_slice(), 3, 4, 0, -1.0);
        gram_of_columns(h.as_slice(), 3, 4, &[2, 3], &mut expect);
        assert!(g.iter().zip(&expect).all(|(a, b)| (a - b).norm() < 1e-14));
    }
}
