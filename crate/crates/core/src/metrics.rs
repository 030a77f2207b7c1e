//! Link-quality metrics, rates, and error bounds.
//!
//! Conventions: the channel matrix `H` is `K × M` with row `k` holding user
//! `k`'s conjugated channel vector, so the signal user `k` receives from
//! beam `j` has power `φ_kj = |(HW)_{kj}|²`. Rates are Shannon rates in nats
//! (`ln(1 + SINR)`), with a bits-per-channel-use conversion alongside.
//!
//! The bound evaluators turn a measured sketch quality into predicted
//! per-iteration ceilings: a geometric envelope on the beamformer error, a
//! spectral-tail-aware refinement of it, and a sum-rate gap envelope built
//! from a curvature constant of the rate map. All are plain formulas over
//! norms; nothing here iterates.

use ndarray::{Array2, ArrayView1, ArrayView2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{frobenius, frobenius_complex, spectral_norm};
use crate::sketch::SpectralProfile;

/// Per-user SINRs and rates for one beamforming matrix.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RateReport {
    pub sinr: Vec<f64>,
    pub per_user_nats: Vec<f64>,
    pub sum_nats: f64,
    pub sum_bits: f64,
}

fn check_sigma2(sigma2: f64, who: &str) -> Result<()> {
    if !(sigma2.is_finite() && sigma2 > 0.0) {
        return Err(Error::Config(format!("{who}: sigma2 must be finite and positive, got {sigma2}")));
    }
    Ok(())
}

fn check_hw(h: &Array2<Complex64>, w: &Array2<Complex64>, who: &str) -> Result<()> {
    if h.ncols() != w.nrows() {
        return Err(Error::Shape(format!(
            "{who}: channel is {}×{} but beamformer is {}×{}",
            h.nrows(),
            h.ncols(),
            w.nrows(),
            w.ncols()
        )));
    }
    if h.nrows() != w.ncols() {
        return Err(Error::Shape(format!(
            "{who}: {} users but {} beams",
            h.nrows(),
            w.ncols()
        )));
    }
    Ok(())
}

/// All received powers at once: `φ` is `K × K` with `φ_kj = |(HW)_{kj}|²`.
pub fn phi_matrix(h: &Array2<Complex64>, w: &Array2<Complex64>) -> Result<Array2<f64>> {
    check_hw(h, w, "phi_matrix")?;
    let prod = h.dot(w);
    let phi = prod.mapv(|z| z.norm_sqr());
    if phi.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("phi_matrix: non-finite received power".into()));
    }
    Ok(phi)
}

/// Received power `φ_kj = |(HW)_{kj}|²` for one user/beam pair.
pub fn phi(h: &Array2<Complex64>, w: &Array2<Complex64>, k: usize, j: usize) -> Result<f64> {
    check_hw(h, w, "phi")?;
    if k >= h.nrows() || j >= w.ncols() {
        return Err(Error::Shape(format!(
            "phi: index ({k}, {j}) out of range for {} users",
            h.nrows()
        )));
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..h.ncols() {
        acc += h[[k, i]] * w[[i, j]];
    }
    Ok(acc.norm_sqr())
}

/// Received power for raw (unconjugated) channel and beam vectors:
/// `|h_kᴴ w_j|²`. The first argument is conjugated here; storing conjugated
/// rows in `H` and multiplying directly gives the same number.
pub fn phi_vectors(h_k: ArrayView1<'_, Complex64>, w_j: ArrayView1<'_, Complex64>) -> Result<f64> {
    if h_k.len() != w_j.len() {
        return Err(Error::Shape(format!(
            "phi_vectors: lengths {} and {} differ",
            h_k.len(),
            w_j.len()
        )));
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for (a, b) in h_k.iter().zip(w_j.iter()) {
        acc += a.conj() * b;
    }
    Ok(acc.norm_sqr())
}

/// Received powers recovered from the real embedding: given the product
/// `QM` (`2K × K`, top half real parts, bottom half imaginary parts),
/// `φ_kj = (QM)_{kj}² + (QM)_{k+K,j}²`.
pub fn phi_matrix_from_real(qm: &Array2<f64>) -> Result<Array2<f64>> {
    let (two_k, cols) = qm.dim();
    if two_k == 0 || two_k % 2 != 0 {
        return Err(Error::Shape(format!(
            "phi_matrix_from_real: product must have an even positive row count, got {two_k}"
        )));
    }
    let k = two_k / 2;
    if cols != k {
        return Err(Error::Shape(format!(
            "phi_matrix_from_real: expected {k} columns for {two_k} rows, got {cols}"
        )));
    }
    Ok(Array2::from_shape_fn((k, k), |(r, c)| {
        qm[[r, c]] * qm[[r, c]] + qm[[r + k, c]] * qm[[r + k, c]]
    }))
}

fn sinr_from_phi(phi: &Array2<f64>, sigma2: f64, k: usize) -> f64 {
    let interference: f64 = (0..phi.ncols()).filter(|&j| j != k).map(|j| phi[[k, j]]).sum();
    phi[[k, k]] / (interference + sigma2)
}

/// SINR of user `k` under beamformer `W`.
pub fn sinr(h: &Array2<Complex64>, w: &Array2<Complex64>, sigma2: f64, k: usize) -> Result<f64> {
    check_sigma2(sigma2, "sinr")?;
    let phi = phi_matrix(h, w)?;
    if k >= phi.nrows() {
        return Err(Error::Shape(format!("sinr: user {k} out of range")));
    }
    Ok(sinr_from_phi(&phi, sigma2, k))
}

/// Per-user SINRs and Shannon rates; `sum_nats` is the achievable sum rate.
pub fn sum_rate(h: &Array2<Complex64>, w: &Array2<Complex64>, sigma2: f64) -> Result<RateReport> {
    check_sigma2(sigma2, "sum_rate")?;
    let phi = phi_matrix(h, w)?;
    sum_rate_from_phi(&phi, sigma2)
}

/// Rates from a precomputed received-power matrix.
pub fn sum_rate_from_phi(phi: &Array2<f64>, sigma2: f64) -> Result<RateReport> {
    check_sigma2(sigma2, "sum_rate_from_phi")?;
    let k = phi.nrows();
    if phi.ncols() != k {
        return Err(Error::Shape(format!(
            "sum_rate_from_phi: received-power matrix must be square, got {k}×{}",
            phi.ncols()
        )));
    }
    let mut sinrs = Vec::with_capacity(k);
    let mut rates = Vec::with_capacity(k);
    let mut sum_nats = 0.0;
    for u in 0..k {
        let s = sinr_from_phi(phi, sigma2, u);
        if !s.is_finite() {
            return Err(Error::NonFinite(format!("sum_rate: non-finite SINR for user {u}")));
        }
        let r = s.ln_1p();
        sinrs.push(s);
        rates.push(r);
        sum_nats += r;
    }
    Ok(RateReport {
        sinr: sinrs,
        per_user_nats: rates,
        sum_nats,
        sum_bits: sum_nats / std::f64::consts::LN_2,
    })
}

/// Absolute Frobenius error `‖Ŵ − W*‖_F`.
pub fn solution_error(what: &Array2<Complex64>, wstar: &Array2<Complex64>) -> Result<f64> {
    if what.dim() != wstar.dim() {
        return Err(Error::Shape(format!(
            "solution_error: shapes {:?} and {:?} differ",
            what.dim(),
            wstar.dim()
        )));
    }
    Ok(frobenius_complex((what - wstar).view()))
}

/// Relative Frobenius error `‖Ŵ − W*‖_F / ‖W*‖_F`.
pub fn relative_solution_error(what: &Array2<Complex64>, wstar: &Array2<Complex64>) -> Result<f64> {
    let denom = frobenius_complex(wstar.view());
    if denom == 0.0 {
        return Err(Error::Config("relative_solution_error: reference matrix is zero".into()));
    }
    Ok(solution_error(what, wstar)? / denom)
}

/// Absolute Frobenius error between real embedded solutions.
pub fn solution_error_real(mhat: ArrayView2<'_, f64>, mstar: ArrayView2<'_, f64>) -> Result<f64> {
    if mhat.dim() != mstar.dim() {
        return Err(Error::Shape(format!(
            "solution_error_real: shapes {:?} and {:?} differ",
            mhat.dim(),
            mstar.dim()
        )));
    }
    Ok(frobenius((&mhat - &mstar).view()))
}

/// Number of spectral directions with `σ_i² ≥ λ` (singular values given in
/// descending order). Ranges over `0..=len`: `0` when even the largest
/// direction is dominated by the ridge, `len` when none are.
pub fn xi_index(singular_values: ArrayView1<'_, f64>, lambda: f64) -> usize {
    singular_values.iter().take_while(|&&s| s * s >= lambda).count()
}

/// Geometric error envelope `ε^t ‖W*‖_F`.
pub fn thm1_bound(t: usize, epsilon: f64, wstar_norm: f64) -> Result<f64> {
    check_bound_args(t, epsilon, "thm1_bound")?;
    Ok(epsilon.powi(t as i32) * wstar_norm)
}

/// Spectral-tail error envelope
/// `(ε^t/√2) · (‖W*‖_F² + ‖U_⊥ᵀΛ‖_F²/(2λ))^{1/2}`, where `U_⊥` spans the
/// left singular directions with `σ² < λ`.
pub fn thm2_bound(
    epsilon: f64,
    t: usize,
    wstar: &Array2<Complex64>,
    lambda: f64,
    target: &Array2<f64>,
    profile: &SpectralProfile,
) -> Result<f64> {
    check_bound_args(t, epsilon, "thm2_bound")?;
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::Config(format!("thm2_bound: lambda must be finite and positive, got {lambda}")));
    }
    let tail = tail_target_product(profile, lambda, target)?;
    let tail_f = frobenius(tail.view());
    let w_norm = frobenius_complex(wstar.view());
    let inner = w_norm * w_norm + tail_f * tail_f / (2.0 * lambda);
    Ok(epsilon.powi(t as i32) / std::f64::consts::SQRT_2 * inner.sqrt())
}

/// `U_⊥ᵀΛ`: the target seen through the left singular directions the ridge
/// dominates (`σ_i² < λ`).
fn tail_target_product(
    profile: &SpectralProfile,
    lambda: f64,
    target: &Array2<f64>,
) -> Result<Array2<f64>> {
    let u = &profile.left_vectors;
    if u.nrows() != target.nrows() {
        return Err(Error::Shape(format!(
            "tail_target_product: profile has {} rows but the target has {}",
            u.nrows(),
            target.nrows()
        )));
    }
    let xi = xi_index(profile.singular_values.view(), lambda);
    let u_perp = u.slice(ndarray::s![.., xi..]);
    Ok(u_perp.t().dot(target))
}

/// How the additive slack in the sum-rate envelope is chosen.
///
/// `LiteralZero` uses no slack, matching the envelope that comes with plain
/// quality certificates. `XiTail` adds the ridge-dominated part of the
/// target, `‖U_⊥ᵀΛ‖₂ / √(2λ)`, matching the envelope that comes with ridge
/// certificates.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EtaConvention {
    #[default]
    LiteralZero,
    XiTail,
}

/// Additive slack `η` for [`corollary_bound`] under a convention.
pub fn eta_value(
    convention: EtaConvention,
    lambda: f64,
    target: &Array2<f64>,
    profile: &SpectralProfile,
) -> Result<f64> {
    match convention {
        EtaConvention::LiteralZero => Ok(0.0),
        EtaConvention::XiTail => {
            if !(lambda.is_finite() && lambda > 0.0) {
                return Err(Error::Config(format!(
                    "eta_value: lambda must be finite and positive, got {lambda}"
                )));
            }
            let tail = tail_target_product(profile, lambda, target)?;
            if tail.nrows() == 0 || tail.ncols() == 0 {
                return Ok(0.0);
            }
            Ok(spectral_norm(tail.view())? / (2.0 * lambda).sqrt())
        }
    }
}

/// Curvature constant of the rate map at `W*`:
/// `C = 2 max_k max{ 1/(I_k + σ²), φ_kk/(I_k + σ²)² }` with
/// `I_k = Σ_{j≠k} φ_kj`.
pub fn constant_c(h: &Array2<Complex64>, wstar: &Array2<Complex64>, sigma2: f64) -> Result<f64> {
    check_sigma2(sigma2, "constant_c")?;
    let phi = phi_matrix(h, wstar)?;
    let k = phi.nrows();
    let mut c_half: f64 = 0.0;
    for u in 0..k {
        let interference: f64 = (0..k).filter(|&j| j != u).map(|j| phi[[u, j]]).sum();
        let denom = interference + sigma2;
        c_half = c_half.max(1.0 / denom).max(phi[[u, u]] / (denom * denom));
    }
    if !c_half.is_finite() || c_half <= 0.0 {
        return Err(Error::NonFinite(format!("constant_c: degenerate constant {c_half}")));
    }
    Ok(2.0 * c_half)
}

/// Sum-rate gap bound for an arbitrary approximation:
/// `C ‖H‖_F² (‖Δ‖_F² + 2‖Δ‖_F ‖W*‖_F)` with `Δ = Ŵ − W*`.
pub fn thm_approx_r_bound(
    h: &Array2<Complex64>,
    what: &Array2<Complex64>,
    wstar: &Array2<Complex64>,
    c: f64,
) -> Result<f64> {
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::Config(format!("thm_approx_r_bound: constant must be finite and positive, got {c}")));
    }
    let delta = solution_error(what, wstar)?;
    let w_norm = frobenius_complex(wstar.view());
    let h_f = frobenius_complex(h.view());
    Ok(c * h_f * h_f * (delta * delta + 2.0 * delta * w_norm))
}

/// Per-iteration sum-rate gap envelope
/// `3C ε^t ‖H‖_F² (‖W*‖_F + η)²`.
pub fn corollary_bound(
    t: usize,
    epsilon: f64,
    c: f64,
    h: &Array2<Complex64>,
    wstar: &Array2<Complex64>,
    eta: f64,
) -> Result<f64> {
    check_bound_args(t, epsilon, "corollary_bound")?;
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::Config(format!("corollary_bound: constant must be finite and positive, got {c}")));
    }
    if !(eta.is_finite() && eta >= 0.0) {
        return Err(Error::Config(format!("corollary_bound: eta must be finite and non-negative, got {eta}")));
    }
    let h_f = frobenius_complex(h.view());
    let w_norm = frobenius_complex(wstar.view());
    let base = w_norm + eta;
    Ok(3.0 * c * epsilon.powi(t as i32) * h_f * h_f * base * base)
}

fn check_bound_args(t: usize, epsilon: f64, who: &str) -> Result<()> {
    if t == 0 {
        return Err(Error::Config(format!("{who}: iteration count must be positive")));
    }
    if !(epsilon.is_finite() && epsilon >= 0.0) {
        return Err(Error::Config(format!("{who}: epsilon must be finite and non-negative, got {epsilon}")));
    }
    Ok(())
}

/// Everything the per-iteration bound curves need, evaluated once per
/// (channel, sketch) pair.
#[derive(Clone, Debug, Serialize)]
pub struct BoundReport {
    /// Quality-derived contraction factor for the scheme actually used.
    pub epsilon_effective: f64,
    /// Contraction factor implied by the plain quality certificate (`2q`).
    pub epsilon_thm1: f64,
    /// Contraction factor implied by the ridge certificate (`4√2·q`).
    pub epsilon_thm2: f64,
    /// Geometric error envelope per iteration, `t = 1..`.
    pub thm1_rhs: Vec<f64>,
    /// Spectral-tail error envelope per iteration.
    pub thm2_rhs: Vec<f64>,
    /// Sum-rate gap envelope per iteration.
    pub corollary_rhs: Vec<f64>,
    /// Curvature constant of the rate map.
    pub c: f64,
    /// Spectral cut index (directions with `σ² ≥ λ`).
    pub xi: usize,
    /// Additive slack used in the sum-rate envelope.
    pub eta: f64,
}

/// Inputs for [`bound_report`].
pub struct BoundInputs<'a> {
    /// Measured plain quality `‖VᵀSSᵀV − I‖₂`.
    pub plain_quality: f64,
    /// Measured ridge quality `‖Σ_λVᵀSSᵀVΣ_λ − Σ_λ²‖₂`.
    pub ridge_quality: f64,
    /// Number of iterations to evaluate envelopes for.
    pub iterations: usize,
    pub lambda: f64,
    pub wstar: &'a Array2<Complex64>,
    pub target: &'a Array2<f64>,
    pub profile: &'a SpectralProfile,
    pub h: &'a Array2<Complex64>,
    pub sigma2: f64,
    pub eta_convention: EtaConvention,
    /// Whether the sampling scheme is certified through the ridge quality.
    pub ridge_certified: bool,
}

/// Evaluates every bound curve for one (channel, sketch) pair.
pub fn bound_report(inp: &BoundInputs<'_>) -> Result<BoundReport> {
    if inp.iterations == 0 {
        return Err(Error::Config("bound_report: need at least one iteration".into()));
    }
    let epsilon_thm1 = 2.0 * inp.plain_quality;
    let epsilon_thm2 = 4.0 * std::f64::consts::SQRT_2 * inp.ridge_quality;
    let epsilon_effective = if inp.ridge_certified { epsilon_thm2 } else { epsilon_thm1 };
    let c = constant_c(inp.h, inp.wstar, inp.sigma2)?;
    let eta = eta_value(inp.eta_convention, inp.lambda, inp.target, inp.profile)?;
    let xi = xi_index(inp.profile.singular_values.view(), inp.lambda);
    let w_norm = frobenius_complex(inp.wstar.view());
    let mut thm1_rhs = Vec::with_capacity(inp.iterations);
    let mut thm2_rhs = Vec::with_capacity(inp.iterations);
    let mut corollary_rhs = Vec::with_capacity(inp.iterations);
    for t in 1..=inp.iterations {
        thm1_rhs.push(thm1_bound(t, epsilon_thm1, w_norm)?);
        thm2_rhs.push(thm2_bound(epsilon_thm2, t, inp.wstar, inp.lambda, inp.target, inp.profile)?);
        corollary_rhs.push(corollary_bound(t, epsilon_effective, c, inp.h, inp.wstar, eta)?);
    }
    Ok(BoundReport {
        epsilon_effective,
        epsilon_thm1,
        epsilon_thm2,
        thm1_rhs,
        thm2_rhs,
        corollary_rhs,
        c,
        xi,
        eta,
    })
}

// ---------------------------------------------------------------------------
