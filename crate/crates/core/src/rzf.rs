//! Exact regularized zero-forcing solves.
//!
//! The downlink beamformer for channel `H` with per-user power `γ = P/K`,
//! noise power `σ²`, and scale `β` is
//!
//! ```text
//!     W* = β (I_M + (γ/σ²) HᴴH)⁻¹ Hᴴ  =  β Hᴴ (I_K + (γ/σ²) HHᴴ)⁻¹,
//! ```
//!
//! equivalently the minimizer of `‖HW − λβI_K‖_F² + λ‖W‖_F²` with ridge
//! parameter `λ = σ²/γ`. This module provides the complex K-side solve, the
//! complex M-side oracle, and the real dual/primal ridge solves on the
//! embedding from [`crate::realify`]; all agree to working precision and
//! serve as cross-checks for each other and for the sketched iteration.
//!
//! All solves use `β = 1` conventions upstream: callers apply
//! [`power_normalize`] afterwards to meet a transmit-power budget, so exact
//! and sketched solutions share the same right-hand side when errors are
//! measured.

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{frobenius_complex, solve_hermitian_pd, solve_spd};
use crate::realify::{lift, RealEmbedding};

/// Which routine produced a beamforming matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    ExactComplex,
    ExactReal,
    ExactPrimal,
    Sketched,
}

/// A beamforming matrix with the parameters it was solved under.
#[derive(Clone, Debug)]
pub struct BeamformingMatrix {
    /// Precoder `W`, `M × K` (column `j` serves user `j`).
    pub w: Array2<Complex64>,
    /// Target scale `β` used in the solve.
    pub beta: f64,
    /// Per-user power allocation `γ = P/K`.
    pub gamma: f64,
    /// Noise power `σ²`.
    pub sigma2: f64,
    /// Provenance of the solution.
    pub solver: SolverKind,
}

impl BeamformingMatrix {
    /// Rescales so that `‖W‖_F² = p` exactly.
    pub fn power_normalize(&mut self, p: f64) -> Result<()> {
        self.w = power_normalize(&self.w, p)?;
        Ok(())
    }
}

/// Largest embedded dimension (`2M`) the dense primal oracle accepts by
/// default; beyond this the `O((2M)³)` solve stops being a sane cross-check.
pub const PRIMAL_DIM_CAP: usize = 2048;

/// Per-user power allocation `γ = P/K`.
pub fn regularizer(p: f64, k: usize) -> Result<f64> {
    if !(p.is_finite() && p > 0.0) {
        return Err(Error::Config(format!("regularizer: power must be finite and positive, got {p}")));
    }
    if k == 0 {
        return Err(Error::Config("regularizer: user count must be positive".into()));
    }
    Ok(p / k as f64)
}

/// Ridge parameter `λ = σ²/γ` of the equivalent regression problem.
pub fn ridge_lambda(sigma2: f64, gamma: f64) -> Result<f64> {
    if !(sigma2.is_finite() && sigma2 > 0.0) {
        return Err(Error::Config(format!("ridge_lambda: sigma2 must be finite and positive, got {sigma2}")));
    }
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::Config(format!("ridge_lambda: gamma must be finite and positive, got {gamma}")));
    }
    Ok(sigma2 / gamma)
}

fn conj_transpose(h: &Array2<Complex64>) -> Array2<Complex64> {
    let (r, c) = h.dim();
    Array2::from_shape_fn((c, r), |(i, j)| h[[j, i]].conj())
}

/// Exact solve in the `K × K` form: `W = β Hᴴ (I_K + (γ/σ²) HHᴴ)⁻¹`.
pub fn solve_exact_complex(
    h: &Array2<Complex64>,
    gamma: f64,
    sigma2: f64,
    beta: f64,
) -> Result<BeamformingMatrix> {
    let (k, _m) = h.dim();
    if k == 0 {
        return Err(Error::Shape("solve_exact_complex: empty channel".into()));
    }
    let hh = conj_transpose(h);
    let scale = Complex64::new(gamma / sigma2, 0.0);
    let mut g = h.dot(&hh);
    g.mapv_inplace(|z| z * scale);
    for i in 0..k {
        g[[i, i]] += 1.0;
    }
    // W = β Hᴴ G⁻¹  ⇔  Wᴴ = β G⁻¹ H  (G is Hermitian).
    let x = solve_hermitian_pd(g.view(), h.view())?;
    let mut w = conj_transpose(&x);
    w.mapv_inplace(|z| z * beta);
    Ok(BeamformingMatrix { w, beta, gamma, sigma2, solver: SolverKind::ExactComplex })
}

/// Exact solve in the `M × M` form: `W = β (I_M + (γ/σ²) HᴴH)⁻¹ Hᴴ`.
///
/// This is the oracle counterpart of [`solve_exact_complex`]; it refuses
/// embedded dimensions `2M` above [`PRIMAL_DIM_CAP`].
pub fn solve_exact_complex_primal(
    h: &Array2<Complex64>,
    gamma: f64,
    sigma2: f64,
    beta: f64,
) -> Result<BeamformingMatrix> {
    let (k, m) = h.dim();
    if k == 0 {
        return Err(Error::Shape("solve_exact_complex_primal: empty channel".into()));
    }
    if 2 * m > PRIMAL_DIM_CAP {
        return Err(Error::Config(format!(
            "solve_exact_complex_primal: 2M = {} exceeds the dense-oracle cap {}",
            2 * m,
            PRIMAL_DIM_CAP
        )));
    }
    let hh = conj_transpose(h);
    let scale = Complex64::new(gamma / sigma2, 0.0);
    let mut a = hh.dot(h);
    a.mapv_inplace(|z| z * scale);
    for i in 0..m {
        a[[i, i]] += 1.0;
    }
    let mut w = solve_hermitian_pd(a.view(), hh.view())?;
    w.mapv_inplace(|z| z * beta);
    Ok(BeamformingMatrix { w, beta, gamma, sigma2, solver: SolverKind::ExactPrimal })
}

/// Real ridge solve in the dual (`2K × 2K`) form:
/// `M = Qᵀ (QQᵀ + λI)⁻¹ R` for an arbitrary right-hand side `R`.
pub fn ridge_solve_dual(q: &Array2<f64>, rhs: &Array2<f64>, lambda: f64) -> Result<Array2<f64>> {
    let n = q.nrows();
    if rhs.nrows() != n {
        return Err(Error::Shape(format!(
            "ridge_solve_dual: Q has {} rows but the right-hand side has {}",
            n,
            rhs.nrows()
        )));
    }
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::Config(format!("ridge_solve_dual: lambda must be finite and positive, got {lambda}")));
    }
    let mut g = q.dot(&q.t());
    for i in 0..n {
        g[[i, i]] += lambda;
    }
    let x = solve_spd(g.view(), rhs.view())?;
    Ok(q.t().dot(&x))
}

/// Real ridge solve in the primal (`2M × 2M`) form:
/// `M = (QᵀQ + λI)⁻¹ Qᵀ R`. Refuses `2M` above `cap`.
pub fn ridge_solve_primal_with_cap(
    q: &Array2<f64>,
    rhs: &Array2<f64>,
    lambda: f64,
    cap: usize,
) -> Result<Array2<f64>> {
    let (n, d) = q.dim();
    if rhs.nrows() != n {
        return Err(Error::Shape(format!(
            "ridge_solve_primal: Q has {} rows but the right-hand side has {}",
            n,
            rhs.nrows()
        )));
    }
    if d > cap {
        return Err(Error::Config(format!(
            "ridge_solve_primal: embedded dimension {d} exceeds the dense-oracle cap {cap}"
        )));
    }
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::Config(format!("ridge_solve_primal: lambda must be finite and positive, got {lambda}")));
    }
    let mut a = q.t().dot(q);
    for i in 0..d {
        a[[i, i]] += lambda;
    }
    let b = q.t().dot(rhs);
    solve_spd(a.view(), b.view())
}

/// Exact real solution of the embedded problem in the dual form.
pub fn solve_exact_real(emb: &RealEmbedding) -> Result<Array2<f64>> {
    ridge_solve_dual(&emb.q, &emb.target, emb.lambda)
}

/// Exact real solution in the primal form (dense oracle, capped at
/// [`PRIMAL_DIM_CAP`]).
pub fn solve_exact_primal(emb: &RealEmbedding) -> Result<Array2<f64>> {
    ridge_solve_primal_with_cap(&emb.q, &emb.target, emb.lambda, PRIMAL_DIM_CAP)
}

/// Exact real solve lifted back to a complex beamformer.
pub fn solve_exact_real_lifted(emb: &RealEmbedding, gamma: f64, sigma2: f64) -> Result<BeamformingMatrix> {
    let m_real = solve_exact_real(emb)?;
    Ok(BeamformingMatrix {
        w: lift(&m_real)?,
        beta: emb.beta,
        gamma,
        sigma2,
        solver: SolverKind::ExactReal,
    })
}

/// Rescales `w` so that `‖W‖_F² = p`.
pub fn power_normalize(w: &Array2<Complex64>, p: f64) -> Result<Array2<Complex64>> {
    if !(p.is_finite() && p >= 0.0) {
        return Err(Error::Config(format!("power_normalize: power must be finite and non-negative, got {p}")));
    }
    let norm = frobenius_complex(w.view());
    if norm == 0.0 {
        return Err(Error::Config("power_normalize: cannot normalize an all-zero matrix".into()));
    }
    let scale = Complex64::new(p.sqrt() / norm, 0.0);
    Ok(w.mapv(|z| z * scale))
}

// ---------------------------------------------------------------------------
