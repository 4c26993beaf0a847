//! Kernel PCA over diffuse bases with a polynomial kernel
//! `k(x, y) = (γ·x·y + c₀)^d`.
//!
//! Only the leading component is needed. It is found by block subspace
//! iteration with a Rayleigh–Ritz step on the double-centered kernel matrix;
//! with a block wider than the kernel's feature dimension (20 for a cubic
//! kernel on RGB) the range is captured in the first sweep.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::color;
use crate::error::{Error, Result};
use crate::rsr::subsample_indices;
use crate::vec3;

pub const MIN_BASES: usize = 10;

/// Smallest admissible feature-space variance of the leading component.
pub const MIN_EIGENVALUE: f64 = 1e-12;

const BLOCK: usize = 48;
const MAX_SWEEPS: usize = 300;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolynomialKernel {
    pub degree: u32,
    pub gamma: f64,
    pub coef0: f64,
}

impl Default for PolynomialKernel {
    fn default() -> Self {
        PolynomialKernel {
            degree: 3,
            gamma: 1.0 / 3.0,
            coef0: 1.0,
        }
    }
}

impl PolynomialKernel {
    /// Plain inner product; turns KPCA into centered linear PCA.
    pub fn linear() -> Self {
        PolynomialKernel {
            degree: 1,
            gamma: 1.0,
            coef0: 0.0,
        }
    }

    #[inline]
    pub fn eval(&self, x: [f64; 3], y: [f64; 3]) -> f64 {
        (self.gamma * vec3::dot(x, y) + self.coef0).powi(self.degree as i32)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KpcaConfig {
    pub kernel: PolynomialKernel,
    /// Largest number of bases kept for the fit.
    pub cap: usize,
}

impl Default for KpcaConfig {
    fn default() -> Self {
        KpcaConfig {
            kernel: PolynomialKernel::default(),
            cap: 2000,
        }
    }
}

impl KpcaConfig {
    pub fn validate(&self) -> Result<()> {
        let k = &self.kernel;
        if k.degree == 0 || !k.gamma.is_finite() || !k.coef0.is_finite() || self.cap < MIN_BASES {
            return Err(Error::InvalidConfig(format!("kpca settings out of range: {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KpcaFit {
    pub fit_points: Vec<[f64; 3]>,
    pub kernel: PolynomialKernel,
    /// Row means of the uncentered kernel matrix over the fit points.
    pub row_means: Vec<f64>,
    pub grand_mean: f64,
    /// Dual coefficients of the leading component, unit feature-space norm.
    pub alpha: Vec<f64>,
    /// Variance of the fit points' projections.
    pub eigenvalue: f64,
    /// +1 or -1, chosen so projections correlate positively with luminance.
    pub sign_anchor: i8,
    pub seed: u64,
    pub bases_seen: usize,
}

fn kernel_matrix(points: &[[f64; 3]], kernel: &PolynomialKernel) -> DMatrix<f64> {
    let n = points.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = kernel.eval(points[i], points[j]);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

/// Leading eigenpair of a symmetric positive semi-definite matrix.
fn leading_eigenpair(m: &DMatrix<f64>, seed: u64) -> (f64, Vec<f64>) {
    let n = m.nrows();
    let b = n.min(BLOCK);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5EED_CAFE_F00D_D00D);
    let start = DMatrix::from_fn(n, b, |_, _| StandardNormal.sample(&mut rng));
    let mut q = start.qr().q();
    let scale = m.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);

    let mut best = (0.0, vec![0.0; n]);
    for _ in 0..MAX_SWEEPS {
        let y = m * &q;
        q = y.qr().q();
        let t = q.transpose() * m * &q;
        let t = (&t + t.transpose()) * 0.5;
        let eig = SymmetricEigen::new(t);
        let k = (0..eig.eigenvalues.len())
            .max_by(|&a, &c| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[c]))
            .unwrap_or(0);
        let lambda = eig.eigenvalues[k];
        let v = &q * eig.eigenvectors.column(k);
        let v = &v / v.norm();
        let resid = (m * &v - &v * lambda).norm();
        best = (lambda, v.iter().copied().collect());
        if resid <= 1e-12 * scale * (n as f64).sqrt() {
            break;
        }
    }
    best
}

pub fn fit_kpca(bases: &[[f64; 3]], cfg: &KpcaConfig, seed: u64) -> Result<KpcaFit> {
    cfg.validate()?;
    if bases.len() < MIN_BASES {
        return Err(Error::InsufficientData {
            got: bases.len(),
            needed: MIN_BASES,
        });
    }
    if bases.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Domain("non-finite basis".into()));
    }
    let keep = subsample_indices(bases.len(), cfg.cap, seed);
    let points: Vec<[f64; 3]> = keep.iter().map(|&i| bases[i]).collect();
    let n = points.len();
    let nf = n as f64;

    let k = kernel_matrix(&points, &cfg.kernel);
    let row_means: Vec<f64> = (0..n).map(|i| k.row(i).sum() / nf).collect();
    let grand_mean = row_means.iter().sum::<f64>() / nf;
    let kc = DMatrix::from_fn(n, n, |i, j| k[(i, j)] - row_means[i] - row_means[j] + grand_mean);

    let (lambda, v) = leading_eigenpair(&kc, seed);
    let eigenvalue = lambda / nf;
    if !(eigenvalue > MIN_EIGENVALUE) {
        return Err(Error::DegenerateFit(format!(
            "centered kernel has no variance (leading eigenvalue {eigenvalue:e})"
        )));
    }
    let root = lambda.sqrt();
    let alpha: Vec<f64> = v.iter().map(|x| x / root).collect();

    // Training projections are sqrt(lambda)·v; orient them with luminance.
    let lum: Vec<f64> = points.iter().map(|&p| color::luminance_of(p)).collect();
    let lum_mean = lum.iter().sum::<f64>() / nf;
    let cov: f64 = v.iter().zip(&lum).map(|(z, l)| z * (l - lum_mean)).sum();
    let sign_anchor = if cov < 0.0 { -1 } else { 1 };

    Ok(KpcaFit {
        fit_points: points,
        kernel: cfg.kernel,
        row_means,
        grand_mean,
        alpha,
        eigenvalue,
        sign_anchor,
        seed,
        bases_seen: bases.len(),
    })
}

/// Projection of one basis onto the leading kernel component.
pub fn project_kpca(fit: &KpcaFit, basis: [f64; 3]) -> f64 {
    let n = fit.fit_points.len() as f64;
    let row: Vec<f64> = fit.fit_points.iter().map(|&p| fit.kernel.eval(basis, p)).collect();
    let row_mean = row.iter().sum::<f64>() / n;
    let dot: f64 = row
        .iter()
        .zip(&fit.row_means)
        .zip(&fit.alpha)
        .map(|((k, r), a)| a * (k - row_mean - r + fit.grand_mean))
        .sum();
    fit.sign_anchor as f64 * dot
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn cloud(seed: u64, n: usize) -> Vec<[f64; 3]> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| [rng.random(), rng.random(), rng.random()]).collect()
    }

    #[test]
    fn too_few_and_identical_bases() {
        let cfg = KpcaConfig::default();
        assert!(matches!(
            fit_kpca(&cloud(0, 9), &cfg, 0),
            Err(Error::InsufficientData { got: 9, .. })
        ));
        assert!(matches!(
            fit_kpca(&vec![[0.6, 0.5, 0.4]; 50], &cfg, 0),
            Err(Error::DegenerateFit(_))
        ));
    }

    #[test]
    fn projected_variance_equals_eigenvalue() {
        let pts = cloud(1, 120);
        let fit = fit_kpca(&pts, &KpcaConfig::default(), 3).unwrap();
        let z: Vec<f64> = pts.iter().map(|&p| project_kpca(&fit, p)).collect();
        let mean = z.iter().sum::<f64>() / z.len() as f64;
        let var = z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / z.len() as f64;
        assert!(mean.abs() < 1e-9);
        assert!((var - fit.eigenvalue).abs() < 1e-9 * fit.eigenvalue.max(1.0));
    }

    #[test]
    fn fit_is_bit_reproducible() {
        let pts = cloud(2, 300);
        let cfg = KpcaConfig { cap: 150, ..KpcaConfig::default() };
        assert_eq!(fit_kpca(&pts, &cfg, 9).unwrap(), fit_kpca(&pts, &cfg, 9).unwrap());
        assert_eq!(fit_kpca(&pts, &cfg, 9).unwrap().fit_points.len(), 150);
    }

    #[test]
    fn symmetric_pair_projects_to_opposite_values() {
        let p = [0.7, 0.5, 0.4];
        let c = [0.5, 0.45, 0.4];
        let q = [0, 1, 2].map(|i| 2.0 * c[i] - p[i]);
        let mut pts = vec![p; 5];
        pts.extend(vec![q; 5]);
        let fit = fit_kpca(&pts, &KpcaConfig::default(), 0).unwrap();
        let (a, b) = (project_kpca(&fit, p), project_kpca(&fit, q));
        assert!((a + b).abs() < 1e-9 && a.abs() > 1e-6, "{a} {b}");
    }

    #[test]
    fn fit_point_matches_its_training_projection() {
        let pts = cloud(4, 60);
        let fit = fit_kpca(&pts, &KpcaConfig::default(), 0).unwrap();
        let n = pts.len();
        let k = kernel_matrix(&pts, &fit.kernel);
        for j in [0, 17, 59] {
            let train: f64 = (0..n)
                .map(|i| fit.alpha[i] * (k[(j, i)] - fit.row_means[j] - fit.row_means[i] + fit.grand_mean))
                .sum::<f64>()
                * fit.sign_anchor as f64;
            assert!((project_kpca(&fit, pts[j]) - train).abs() < 1e-9);
        }
    }

    #[test]
    fn bad_config_is_rejected() {
        let cfg = KpcaConfig { cap: 5, ..KpcaConfig::default() };
        assert!(matches!(fit_kpca(&cloud(0, 20), &cfg, 0), Err(Error::InvalidConfig(_))));
    }
}
