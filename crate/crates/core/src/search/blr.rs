use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::SearchError;

pub const EVIDENCE_MAX_ITERS: usize = 50;
pub const FALLBACK_ALPHA: f64 = 1.0;
pub const FALLBACK_BETA: f64 = 100.0;

/// Gaussian posterior over linear weights on basis features.
#[derive(Debug, Clone)]
pub struct BlrPosterior {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    /// prior precision
    pub alpha: f64,
    /// noise precision
    pub beta: f64,
}

impl BlrPosterior {
    /// Predictive mean and variance at feature vector `phi`.
    pub fn predict(&self, phi: &[f64]) -> (f64, f64) {
        let p = DVector::from_column_slice(phi);
        let mu = self.mean.dot(&p);
        let var = 1.0 / self.beta + (&self.cov * &p).dot(&p);
        (mu, var.max(0.0))
    }
}

/// `S⁻¹ = αI + βΦᵀΦ`, `m = βSΦᵀy`, inverting with escalating jitter.
pub fn blr_posterior(phi: &DMatrix<f64>, y: &[f64], alpha: f64, beta: f64) -> Result<BlrPosterior, SearchError> {
    if phi.nrows() != y.len() || phi.nrows() == 0 {
        return Err(SearchError::Dimension(format!("{} feature rows, {} targets", phi.nrows(), y.len())));
    }
    let f = phi.ncols();
    let precision = DMatrix::identity(f, f) * alpha + phi.transpose() * phi * beta;
    let mut jitter = 0.0;
    let cov = loop {
        let m = &precision + DMatrix::identity(f, f) * jitter;
        if let Some(ch) = m.cholesky() {
            break ch.inverse();
        }
        jitter = if jitter == 0.0 { 1e-10 } else { jitter * 10.0 };
        if jitter > 1e-4 {
            return Err(SearchError::SingularSystem);
        }
    };
    let yv = DVector::from_column_slice(y);
    let mean = &cov * (phi.transpose() * yv) * beta;
    Ok(BlrPosterior { mean, cov, alpha, beta })
}

/// Posterior with `alpha`, `beta` chosen by evidence maximisation
/// (fixed-point updates); falls back to defaults if the iteration fails.
pub fn fit_blr(phi: &DMatrix<f64>, y: &[f64]) -> Result<BlrPosterior, SearchError> {
    let n = y.len() as f64;
    let eig = SymmetricEigen::new(phi.transpose() * phi).eigenvalues;
    let yv = DVector::from_column_slice(y);
    let (mut alpha, mut beta) = (FALLBACK_ALPHA, FALLBACK_BETA);
    let mut ok = false;
    for _ in 0..EVIDENCE_MAX_ITERS {
        let post = blr_posterior(phi, y, alpha, beta)?;
        let gamma: f64 = eig.iter().map(|&e| beta * e.max(0.0) / (beta * e.max(0.0) + alpha)).sum();
        let m2 = post.mean.norm_squared();
        let resid = (&yv - phi * &post.mean).norm_squared();
        let new_alpha = (gamma / m2).clamp(1e-10, 1e10);
        let new_beta = ((n - gamma) / resid).clamp(1e-10, 1e10);
        if !(new_alpha.is_finite() && new_beta.is_finite()) || n - gamma <= 0.0 {
            ok = false;
            break;
        }
        let converged = ((new_alpha - alpha) / alpha).abs() < 1e-6 && ((new_beta - beta) / beta).abs() < 1e-6;
        alpha = new_alpha;
        beta = new_beta;
        ok = true;
        if converged {
            break;
        }
    }
    if !ok {
        alpha = FALLBACK_ALPHA;
        beta = FALLBACK_BETA;
    }
    blr_posterior(phi, y, alpha, beta)
}
