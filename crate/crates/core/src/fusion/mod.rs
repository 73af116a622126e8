//! Reducing a window of CIR snapshots to one time series.
//!
//! *Selection* keeps the single delay bin with the most in-band energy.
//! *Fusion* looks for the linear combination of bins `x = H w` maximizing the
//! in-band energy `w^H A w` subject to unit total energy `w^H B w = 1`, with
//! `A = H^H F_I^H F_I H` (band rows of the DFT) and `B = H^H F^H F H`.
//! Stationarity gives the generalized eigenproblem `A w = lambda B w`; it is
//! solved by whitening with `B`'s eigendecomposition and diagonalizing the
//! whitened `A`.

mod eig;

pub use eig::{hermitian_asymmetry, hermitian_eig, hermitize, HermitianEigen, HERMITIAN_TOL};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{boi_energy, DftPlan};

/// Relative eigenvalue floor below which directions of `B` are discarded.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;
/// Columns carrying less than this fraction of the strongest column's energy
/// are left out of the eigenproblem and get zero weight.
pub const COLUMN_ENERGY_FLOOR: f64 = 1e-12;

/// Window of calibrated, uniformly resampled snapshots: one row per time
/// instant, one column per delay bin.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotMatrix {
    data: DMatrix<Complex64>,
    sample_rate_hz: f64,
}

impl SnapshotMatrix {
    pub fn new(data: DMatrix<Complex64>, sample_rate_hz: f64) -> Result<Self> {
        if !(sample_rate_hz > 0.0 && sample_rate_hz.is_finite()) {
            return Err(Error::config("sample rate must be positive"));
        }
        if data.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::config("snapshot matrix has non-finite entries"));
        }
        Ok(Self {
            data,
            sample_rate_hz,
        })
    }

    /// Builds the matrix from per-instant rows of equal length.
    pub fn from_rows(rows: &[Vec<Complex64>], sample_rate_hz: f64) -> Result<Self> {
        let n_cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != n_cols) {
            return Err(Error::LengthMismatch {
                expected: n_cols,
                actual: bad.len(),
            });
        }
        let data = DMatrix::from_fn(rows.len(), n_cols, |i, j| rows[i][j]);
        Self::new(data, sample_rate_hz)
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn cols(&self) -> usize {
        self.data.ncols()
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn data(&self) -> &DMatrix<Complex64> {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        self.data.column(j).iter().copied().collect()
    }

    /// `H w`.
    pub fn combine(&self, w: &[Complex64]) -> Result<Vec<Complex64>> {
        if w.len() != self.cols() {
            return Err(Error::LengthMismatch {
                expected: self.cols(),
                actual: w.len(),
            });
        }
        Ok((&self.data * DVector::from_column_slice(w))
            .iter()
            .copied()
            .collect())
    }

    fn check_plan(&self, plan: &DftPlan) -> Result<()> {
        if plan.window_len() != self.rows() {
            return Err(Error::Dimension(format!(
                "plan expects {} rows, matrix has {}",
                plan.window_len(),
                self.rows()
            )));
        }
        Ok(())
    }
}

/// Hermitian pair `(A, B)` of the fusion problem.
#[derive(Debug, Clone)]
pub struct GeneralizedPair {
    pub a: DMatrix<Complex64>,
    pub b: DMatrix<Complex64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusionWeights {
    /// One weight per delay bin.
    pub w: Vec<Complex64>,
    /// Achieved ratio `w^H A w / w^H B w`, the KKT multiplier.
    pub lambda: f64,
}

/// Bin with the most in-band energy (lowest index on ties) and its series.
pub fn select_bin(h: &SnapshotMatrix, plan: &DftPlan) -> Result<(usize, Vec<Complex64>)> {
    if h.cols() == 0 || h.rows() == 0 {
        return Err(Error::Empty("snapshot matrix"));
    }
    h.check_plan(plan)?;
    let mut best = (0, f64::NEG_INFINITY);
    for j in 0..h.cols() {
        let energy = boi_energy(&h.column(j), plan)?;
        if energy > best.1 {
            best = (j, energy);
        }
    }
    Ok((best.0, h.column(best.0)))
}

/// `A = (F_I H)^H (F_I H)` and `B = N H^H H`, both Hermitized.
pub fn build_pair(h: &SnapshotMatrix, plan: &DftPlan) -> Result<GeneralizedPair> {
    h.check_plan(plan)?;
    let m = plan.band_rows().len();
    let mut band = DMatrix::<Complex64>::zeros(m, h.cols());
    for j in 0..h.cols() {
        let spectrum = plan.band_spectrum_unchecked(h.data.column(j).as_slice());
        band.column_mut(j).copy_from_slice(&spectrum);
    }
    let a = band.adjoint() * &band;
    let b = (h.data.adjoint() * &h.data).scale(h.rows() as f64);
    Ok(GeneralizedPair {
        a: hermitize(&a),
        b: hermitize(&b),
    })
}

/// Maximizes `w^H A w` subject to `w^H B w = 1`.
///
/// `B = U L U^H` is truncated to eigenvalues above `rank_tol * max(L)`; with
/// the whitener `W = U_r L_r^{-1/2}` every eigenvector `v_i` of `W^H A W`
/// yields a feasible KKT candidate `w_i = W v_i` rescaled by
/// `(w_i^H B w_i)^{-1/2}`. The candidate with the largest `w_i^H A w_i` wins.
pub fn solve_fusion(pair: &GeneralizedPair, rank_tol: f64) -> Result<FusionWeights> {
    let n = pair.b.nrows();
    if !pair.b.is_square() || pair.a.shape() != pair.b.shape() {
        return Err(Error::Dimension(format!(
            "A is {:?} and B is {:?}",
            pair.a.shape(),
            pair.b.shape()
        )));
    }
    if n == 0 {
        return Err(Error::Empty("generalized pair"));
    }
    if !(rank_tol > 0.0 && rank_tol < 1.0) {
        return Err(Error::config("rank_tol must lie in (0, 1)"));
    }
    let b_eig = hermitian_eig(&pair.b)?;
    let top = b_eig.values[0];
    if !(top > 0.0 && top.is_finite()) {
        return Err(Error::DegenerateWindow);
    }
    let kept: Vec<usize> = (0..n)
        .filter(|&i| b_eig.values[i] > rank_tol * top)
        .collect();
    let r = kept.len();
    let whitener = DMatrix::from_fn(n, r, |row, col| {
        let i = kept[col];
        b_eig.vectors[(row, i)] / b_eig.values[i].sqrt()
    });
    let whitened = hermitize(&(whitener.adjoint() * &pair.a * &whitener));
    let m_eig = hermitian_eig(&whitened)?;

    let mut best: Option<(f64, DVector<Complex64>)> = None;
    for i in 0..r {
        let mut w = &whitener * m_eig.vectors.column(i);
        let energy = quadratic_form(&pair.b, &w);
        if !(energy > 0.0) {
            continue;
        }
        w.unscale_mut(energy.sqrt());
        let objective = quadratic_form(&pair.a, &w);
        if best.as_ref().is_none_or(|(o, _)| objective > *o) {
            best = Some((objective, w));
        }
    }
    let (lambda, w) = best.ok_or(Error::DegenerateWindow)?;
    let mut w: Vec<Complex64> = w.iter().copied().collect();
    fix_global_phase(&mut w);
    Ok(FusionWeights { w, lambda })
}

/// Real part of `w^H M w`.
pub fn quadratic_form(m: &DMatrix<Complex64>, w: &DVector<Complex64>) -> f64 {
    w.dotc(&(m * w)).re
}

/// Rotates `w` so its largest-magnitude entry is real and positive.
fn fix_global_phase(w: &mut [Complex64]) {
    let Some(pivot) = w
        .iter()
        .copied()
        .reduce(|best, v| if v.norm() > best.norm() { v } else { best })
    else {
        return;
    };
    if pivot.norm() == 0.0 {
        return;
    }
    let rot = pivot.conj() / pivot.norm();
    for v in w.iter_mut() {
        *v *= rot;
    }
}

/// Fusion weights for a window and the combined series `x* = H w*`.
pub fn fuse(
    h: &SnapshotMatrix,
    plan: &DftPlan,
    rank_tol: f64,
) -> Result<(FusionWeights, Vec<Complex64>)> {
    h.check_plan(plan)?;
    if h.cols() == 0 {
        return Err(Error::Empty("snapshot matrix"));
    }
    let energies: Vec<f64> = h
        .data
        .column_iter()
        .map(|c| c.iter().map(Complex64::norm_sqr).sum())
        .collect();
    let strongest = energies.iter().copied().fold(0.0, f64::max);
    if !(strongest > 0.0) {
        return Err(Error::DegenerateWindow);
    }
    let active: Vec<usize> = (0..h.cols())
        .filter(|&j| energies[j] >= COLUMN_ENERGY_FLOOR * strongest)
        .collect();
    let reduced = if active.len() == h.cols() {
        h.clone()
    } else {
        SnapshotMatrix {
            data: h.data.select_columns(&active),
            sample_rate_hz: h.sample_rate_hz,
        }
    };
    let pair = build_pair(&reduced, plan)?;
    let partial = solve_fusion(&pair, rank_tol)?;
    let mut w = vec![Complex64::new(0.0, 0.0); h.cols()];
    for (&j, &v) in active.iter().zip(&partial.w) {
        w[j] = v;
    }
    let x = reduced.combine(&partial.w)?;
    Ok((
        FusionWeights {
            w,
            lambda: partial.lambda,
        },
        x,
    ))
}
