//! Rank-2 non-negative matrix factorization of `n x 3` pixel matrices.
//!
//! `V ≈ W H` with `W` (`n x 2`) holding per-pixel magnitudes and `H` (`2 x 3`)
//! holding the two basis colors. Initialization is NNDSVD with zero entries
//! filled by the mean of `V`; the solver is Lee–Seung multiplicative updates
//! on `½‖V − WH‖²`, which never increase the objective.
//!
//! The initialization is computed on `V / max(V)` and `W` is scaled back by
//! `max(V)`, so `cV` starts from the same `H` with `W` scaled by `c` and the
//! normalized output does not depend on the overall brightness of the patch.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_ROWS: usize = 64;

/// Denominator floor inside the multiplicative updates.
pub const DENOM_FLOOR: f64 = 1e-12;

/// NNDSVD entries below this are treated as zero before filling.
const NNDSVD_ZERO: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct PatchMatrix {
    rows: Vec<[f64; 3]>,
}

impl PatchMatrix {
    pub fn new(rows: Vec<[f64; 3]>) -> Result<Self> {
        if rows.len() < MIN_ROWS {
            return Err(Error::InsufficientPixels {
                count: rows.len(),
                needed: MIN_ROWS,
            });
        }
        if let Some(v) = rows.iter().flatten().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::Domain(format!("patch entry {v} is negative or not finite")));
        }
        Ok(PatchMatrix { rows })
    }

    pub fn rows(&self) -> &[[f64; 3]] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        PatchMatrix::new(self.rows.iter().map(|r| r.map(|v| v * c)).collect())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.rows.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
    }

    fn mean(&self) -> f64 {
        self.rows.iter().flatten().sum::<f64>() / (3 * self.rows.len()) as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NmfFactors {
    pub w: Vec<[f64; 2]>,
    pub h: [[f64; 3]; 2],
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl NmfFactors {
    /// Mean of column `k` of `W`.
    pub fn w_mean(&self, k: usize) -> f64 {
        self.w.iter().map(|r| r[k]).sum::<f64>() / self.w.len() as f64
    }

    pub fn is_nonnegative(&self) -> bool {
        self.w.iter().flatten().chain(self.h.iter().flatten()).all(|v| *v >= 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NmfOptions {
    pub max_iter: usize,
    /// Stop once the relative residual improvement of one iteration drops below this.
    pub tol: f64,
}

impl Default for NmfOptions {
    fn default() -> Self {
        NmfOptions {
            max_iter: 500,
            tol: 1e-6,
        }
    }
}

impl NmfOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iter == 0 || !(self.tol > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "nmf needs max_iter >= 1 and tol > 0, got {self:?}"
            )));
        }
        Ok(())
    }
}

/// How NNDSVD treats entries that come out as (near) zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZeroFill {
    Keep,
    /// Replace with the mean entry of `V`.
    Mean,
}

/// Frobenius norm of `V − WH`.
pub fn residual(v: &PatchMatrix, w: &[[f64; 2]], h: &[[f64; 3]; 2]) -> f64 {
    let mut acc = 0.0;
    for (row, wr) in v.rows.iter().zip(w) {
        for c in 0..3 {
            let d = row[c] - (wr[0] * h[0][c] + wr[1] * h[1][c]);
            acc += d * d;
        }
    }
    acc.sqrt()
}

fn split_parts(x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    (
        x.iter().map(|v| v.max(0.0)).collect(),
        x.iter().map(|v| (-v).max(0.0)).collect(),
    )
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// NNDSVD initialization with the chosen zero treatment.
pub fn nndsvd(v: &PatchMatrix, fill: ZeroFill) -> Result<NmfFactors> {
    let n = v.len();
    let scale = v.rows.iter().flatten().fold(0.0f64, |m, x| m.max(*x));
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::InitFailed("matrix has no positive singular value".into()));
    }
    let m = DMatrix::from_row_iterator(n, 3, v.rows.iter().flatten().map(|x| x / scale));
    let svd = m.svd(true, true);
    let (u, vt) = match (svd.u, svd.v_t) {
        (Some(u), Some(vt)) => (u, vt),
        _ => return Err(Error::InitFailed("SVD did not produce singular vectors".into())),
    };
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let s0 = svd.singular_values[order[0]];
    if !(s0 > 0.0) || !s0.is_finite() {
        return Err(Error::InitFailed("matrix has no positive singular value".into()));
    }

    let mut w = vec![[0.0; 2]; n];
    let mut h = [[0.0; 3]; 2];

    let u0 = u.column(order[0]);
    let v0 = vt.row(order[0]);
    let root = s0.sqrt();
    for i in 0..n {
        w[i][0] = root * u0[i].abs();
    }
    for c in 0..3 {
        h[0][c] = root * v0[c].abs();
    }

    let s1 = svd.singular_values[order[1]].max(0.0);
    let x: Vec<f64> = u.column(order[1]).iter().copied().collect();
    let y: Vec<f64> = vt.row(order[1]).iter().copied().collect();
    let (xp, xn) = split_parts(&x);
    let (yp, yn) = split_parts(&y);
    let (xpn, ypn, xnn, ynn) = (norm(&xp), norm(&yp), norm(&xn), norm(&yn));
    let (mp, mn) = (xpn * ypn, xnn * ynn);
    let (uu, vv, sigma, un, vn) = if mp > mn {
        (xp, yp, mp, xpn, ypn)
    } else {
        (xn, yn, mn, xnn, ynn)
    };
    if sigma > 0.0 {
        let lbd = (s1 * sigma).sqrt();
        for i in 0..n {
            w[i][1] = lbd * uu[i] / un;
        }
        for c in 0..3 {
            h[1][c] = lbd * vv[c] / vn;
        }
    }

    for e in w.iter_mut().flatten().chain(h.iter_mut().flatten()) {
        if *e < NNDSVD_ZERO {
            *e = 0.0;
        }
    }
    if fill == ZeroFill::Mean {
        let avg = v.mean() / scale;
        for e in w.iter_mut().flatten().chain(h.iter_mut().flatten()) {
            if *e == 0.0 {
                *e = avg;
            }
        }
    }
    for e in w.iter_mut().flatten() {
        *e *= scale;
    }
    let residual = residual(v, &w, &h);
    Ok(NmfFactors {
        w,
        h,
        residual,
        iterations: 0,
        converged: false,
    })
}

/// NNDSVD with mean filling; strictly positive for any non-zero `V`.
pub fn nndsvd_ar_init(v: &PatchMatrix) -> Result<NmfFactors> {
    nndsvd(v, ZeroFill::Mean)
}

/// One iterate as seen by a [`solve_nmf_observed`] observer.
pub struct Iterate<'a> {
    pub iteration: usize,
    pub w: &'a [[f64; 2]],
    pub h: &'a [[f64; 3]; 2],
    pub residual: f64,
}

pub fn solve_nmf(v: &PatchMatrix, init: &NmfFactors, opts: &NmfOptions) -> Result<NmfFactors> {
    solve_nmf_observed(v, init, opts, |_| {})
}

/// Multiplicative-update solve, calling `observer` after every iteration.
pub fn solve_nmf_observed(
    v: &PatchMatrix,
    init: &NmfFactors,
    opts: &NmfOptions,
    mut observer: impl FnMut(&Iterate<'_>),
) -> Result<NmfFactors> {
    opts.validate()?;
    if init.w.len() != v.len() {
        return Err(Error::Domain(format!(
            "init has {} rows, patch has {}",
            init.w.len(),
            v.len()
        )));
    }
    if !init.is_nonnegative() {
        return Err(Error::Domain("initial factors must be non-negative".into()));
    }

    let mut w = init.w.clone();
    let mut h = init.h;
    let mut prev = residual(v, &w, &h);
    let mut iterations = 0;
    let mut converged = false;

    for it in 1..=opts.max_iter {
        // H <- H * (W^T V) / (W^T W H)
        let mut wtv = [[0.0; 3]; 2];
        let mut wtw = [[0.0; 2]; 2];
        for (row, wr) in v.rows.iter().zip(&w) {
            for k in 0..2 {
                for c in 0..3 {
                    wtv[k][c] += wr[k] * row[c];
                }
                for l in 0..2 {
                    wtw[k][l] += wr[k] * wr[l];
                }
            }
        }
        for k in 0..2 {
            for c in 0..3 {
                let den = wtw[k][0] * h[0][c] + wtw[k][1] * h[1][c];
                h[k][c] *= wtv[k][c] / den.max(DENOM_FLOOR);
            }
        }

        // W <- W * (V H^T) / (W H H^T)
        let mut hht = [[0.0; 2]; 2];
        for k in 0..2 {
            for l in 0..2 {
                hht[k][l] = (0..3).map(|c| h[k][c] * h[l][c]).sum();
            }
        }
        for (row, wr) in v.rows.iter().zip(w.iter_mut()) {
            let num = [
                row[0] * h[0][0] + row[1] * h[0][1] + row[2] * h[0][2],
                row[0] * h[1][0] + row[1] * h[1][1] + row[2] * h[1][2],
            ];
            let den = [
                wr[0] * hht[0][0] + wr[1] * hht[1][0],
                wr[0] * hht[0][1] + wr[1] * hht[1][1],
            ];
            for k in 0..2 {
                wr[k] *= num[k] / den[k].max(DENOM_FLOOR);
            }
        }

        let r = residual(v, &w, &h);
        let finite = r.is_finite()
            && h.iter().flatten().all(|x| x.is_finite())
            && w.iter().flatten().all(|x| x.is_finite());
        if !finite {
            return Err(Error::NumericalFailure { iteration: it });
        }
        iterations = it;
        observer(&Iterate {
            iteration: it,
            w: &w,
            h: &h,
            residual: r,
        });
        if prev == 0.0 || (prev - r) < opts.tol * prev {
            converged = true;
            break;
        }
        prev = r;
    }

    // Fold each basis row's scale into W so rows of H are unit length.
    for k in 0..2 {
        let s = norm(&h[k]);
        if s > 0.0 {
            for c in 0..3 {
                h[k][c] /= s;
            }
            for wr in w.iter_mut() {
                wr[k] *= s;
            }
        }
    }
    let residual = residual(v, &w, &h);
    Ok(NmfFactors {
        w,
        h,
        residual,
        iterations,
        converged,
    })
}

/// Initialize with [`nndsvd_ar_init`] and solve.
pub fn factorize(v: &PatchMatrix, opts: &NmfOptions) -> Result<NmfFactors> {
    let init = nndsvd_ar_init(v)?;
    solve_nmf(v, &init, opts)
}
