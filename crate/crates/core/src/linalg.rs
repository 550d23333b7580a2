//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

/// Thin SVD with singular values sorted in decreasing order.
#[derive(Debug, Clone)]
pub struct ThinSvd {
    pub u: DMatrix<f64>,
    pub singular_values: DVector<f64>,
    pub v_t: DMatrix<f64>,
}

impl ThinSvd {
    pub fn new(a: &DMatrix<f64>) -> Self {
        let svd = a.clone().svd(true, true);
        let u = svd.u.expect("u requested");
        let v_t = svd.v_t.expect("v_t requested");
        let s = svd.singular_values;

        let mut order: Vec<usize> = (0..s.len()).collect();
        order.sort_by(|&i, &j| s[j].total_cmp(&s[i]));

        let r = s.len();
        let mut us = DMatrix::zeros(u.nrows(), r);
        let mut vts = DMatrix::zeros(r, v_t.ncols());
        let mut ss = DVector::zeros(r);
        for (dst, &src) in order.iter().enumerate() {
            us.set_column(dst, &u.column(src));
            vts.set_row(dst, &v_t.row(src));
            ss[dst] = s[src];
        }
        ThinSvd {
            u: us,
            singular_values: ss,
            v_t: vts,
        }
    }

    /// `U diag(values) Vᵀ` for a replacement set of singular values.
    pub fn reconstruct_with(&self, values: &DVector<f64>) -> DMatrix<f64> {
        let mut scaled = self.u.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= values[j];
        }
        scaled * &self.v_t
    }
}

/// Moore–Penrose pseudo-inverse with the usual `max(m, n) · σ_max · ε_mach` cutoff.
pub fn pinv(a: &DMatrix<f64>) -> DMatrix<f64> {
    let svd = ThinSvd::new(a);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let cutoff = a.nrows().max(a.ncols()) as f64 * smax * f64::EPSILON;
    let inv = svd
        .singular_values
        .map(|s| if s > cutoff { 1.0 / s } else { 0.0 });
    // pinv(A) = V diag(1/s) Uᵀ
    let mut v = svd.v_t.transpose();
    for (j, mut col) in v.column_iter_mut().enumerate() {
        col *= inv[j];
    }
    v * svd.u.transpose()
}

pub fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

pub fn max_asymmetry(a: &DMatrix<f64>) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..a.nrows() {
        for j in 0..i {
            worst = worst.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    worst
}

/// Eigenvalues of the symmetric part of `a`, ascending.
pub fn sym_eigenvalues(a: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = symmetrize(a)
        .symmetric_eigenvalues()
        .iter()
        .cloned()
        .collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Principal square root of a symmetric PSD matrix; negative eigenvalues are clamped to 0.
pub fn sym_sqrt(a: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = symmetrize(a).symmetric_eigen();
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    let q = &eig.eigenvectors;
    let mut scaled = q.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= roots[j];
    }
    symmetrize(&(scaled * q.transpose()))
}

/// Spectral condition number of a symmetric matrix; infinite when singular.
pub fn sym_condition_number(a: &DMatrix<f64>) -> f64 {
    let ev = sym_eigenvalues(a);
    let lo = ev.first().copied().unwrap_or(0.0);
    let hi = ev.last().copied().unwrap_or(0.0);
    if lo <= 0.0 || hi <= 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

pub fn frobenius(a: &DMatrix<f64>) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}
