//! Column-sampling sketches and their quality certificates.
//!
//! A sketch `S ∈ ℝ^{2M×L}` has one nonzero per column: column `j` picks row
//! `i_j` i.i.d. with replacement from a probability vector `p` and carries the
//! value `(L p_{i_j})^{−1/2}`, so `E[SSᵀ] = I`. Three choices of `p` are
//! provided: uniform, leverage-score (row norms of the right singular
//! factor), and ridge-leverage (the same rows reweighted by the shrinkage
//! profile `σ_i²/(σ_i² + λ)`).
//!
//! The quality of a drawn sketch is certified through the sampled Gram matrix
//! `VᵀSSᵀV`: the plain certificate is its spectral distance from the
//! identity, the ridge certificate the distance after conjugation by the
//! shrinkage profile. Sample-size rules translate a target quality and
//! failure probability into a number of columns.

use ndarray::{Array1, Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{spectral_norm_symmetric, thin_svd};
use crate::rng::SeedStream;

/// Relative singular-value threshold below which the embedded channel is
/// treated as rank deficient for leverage sampling.
pub const RANK_TOLERANCE: f64 = 1e-12;

/// How sketch columns are drawn.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingScheme {
    Uniform,
    Leverage,
    RidgeLeverage,
}

impl SamplingScheme {
    pub fn label(&self) -> &'static str {
        match self {
            SamplingScheme::Uniform => "uniform",
            SamplingScheme::Leverage => "leverage",
            SamplingScheme::RidgeLeverage => "ridge_leverage",
        }
    }
}

/// Normalization used for leverage probabilities.
///
/// `TwoK` divides each score by the total mass `2K`, giving a proper
/// distribution; `TwoM` divides by the row count `2M` instead, which leaves
/// the vector summing to `2K/2M`. The `TwoM` variant exists for side-by-side
/// comparison: drawing renormalizes internally, but the per-column rescaling
/// uses the stored (deficient) values, which inflates the sketch by
/// `√(2M/2K)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeverageDenominator {
    TwoK,
    TwoM,
}

/// A probability vector over the embedded rows, tagged with its scheme.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SamplingProbabilities {
    pub p: Vec<f64>,
    pub scheme: SamplingScheme,
}

/// A one-nonzero-per-column sampling sketch, stored sparsely.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SketchMatrix {
    /// Number of rows (the embedded dimension `2M`).
    pub n_rows: usize,
    /// Per sketch column: (row index, value).
    pub columns: Vec<(usize, f64)>,
}

impl SketchMatrix {
    /// Number of sketch columns `L`.
    pub fn l(&self) -> usize {
        self.columns.len()
    }

    /// The identity sketch `S = I_n`: one column per row with value 1.
    /// Sketched operators then coincide with their exact counterparts.
    pub fn identity(n: usize) -> Self {
        SketchMatrix {
            n_rows: n,
            columns: (0..n).map(|i| (i, 1.0)).collect(),
        }
    }

    /// Dense `n_rows × L` form, for small cross-checks.
    pub fn to_dense(&self) -> Array2<f64> {
        let mut s = Array2::zeros((self.n_rows, self.columns.len()));
        for (j, &(i, v)) in self.columns.iter().enumerate() {
            s[[i, j]] = v;
        }
        s
    }
}

/// Thin SVD of the embedded channel `Q = U diag(σ) Vᵀ`, kept around so
/// probabilities and quality certificates share one factorization.
#[derive(Clone, Debug)]
pub struct SpectralProfile {
    /// Singular values, descending; length `min(2K, 2M)`.
    pub singular_values: Array1<f64>,
    /// Left singular vectors `U`, `2K × r`.
    pub left_vectors: Array2<f64>,
    /// Right singular vectors `V`, `2M × r`.
    pub right_vectors: Array2<f64>,
}

impl SpectralProfile {
    pub fn compute(q: &Array2<f64>) -> Result<Self> {
        let (u, s, v) = thin_svd(q.view())?;
        Ok(SpectralProfile { singular_values: s, left_vectors: u, right_vectors: v })
    }
}

/// Uniform probabilities `p_i = 1/n` over `n` rows.
pub fn uniform_probs(n: usize) -> Result<SamplingProbabilities> {
    if n == 0 {
        return Err(Error::Config("uniform_probs: need at least one row".into()));
    }
    Ok(SamplingProbabilities {
        p: vec![1.0 / n as f64; n],
        scheme: SamplingScheme::Uniform,
    })
}

fn row_scores(profile: &SpectralProfile, weights: Option<&Array1<f64>>) -> Vec<f64> {
    let v = &profile.right_vectors;
    let r = v.ncols();
    let mut scores = vec![0.0; v.nrows()];
    for (i, row) in v.rows().into_iter().enumerate() {
        let mut acc = 0.0;
        for j in 0..r {
            let w = weights.map_or(1.0, |w| w[j]);
            let x = w * row[j];
            acc += x * x;
        }
        scores[i] = acc;
    }
    scores
}

/// Leverage-score probabilities `p_i = ‖V_{i·}‖² / r`, where `r` is the row
/// rank of the embedded channel. Errors if the channel is rank deficient
/// (scores then no longer sum to the nominal rank).
pub fn leverage_probs(profile: &SpectralProfile) -> Result<SamplingProbabilities> {
    leverage_probs_with_denominator(profile, LeverageDenominator::TwoK)
}

/// Leverage probabilities with an explicit normalization choice; see
/// [`LeverageDenominator`].
pub fn leverage_probs_with_denominator(
    profile: &SpectralProfile,
    denom: LeverageDenominator,
) -> Result<SamplingProbabilities> {
    let s = &profile.singular_values;
    if s.is_empty() {
        return Err(Error::Shape("leverage_probs: empty spectrum".into()));
    }
    let smax = s[0];
    if !(smax.is_finite() && smax > 0.0) || s[s.len() - 1] <= RANK_TOLERANCE * smax {
        return Err(Error::RankDeficient(format!(
            "leverage_probs: smallest singular value {:.3e} below tolerance relative to {:.3e}",
            s[s.len() - 1],
            smax
        )));
    }
    let scores = row_scores(profile, None);
    let denom_value = match denom {
        LeverageDenominator::TwoK => s.len() as f64,
        LeverageDenominator::TwoM => profile.right_vectors.nrows() as f64,
    };
    Ok(SamplingProbabilities {
        p: scores.into_iter().map(|t| t / denom_value).collect(),
        scheme: SamplingScheme::Leverage,
    })
}

/// Shrinkage profile `(Σ_λ)_i = sqrt(σ_i²/(σ_i² + λ))`.
pub fn sigma_lambda(singular_values: ArrayView1<'_, f64>, lambda: f64) -> Array1<f64> {
    singular_values.mapv(|s| (s * s / (s * s + lambda)).sqrt())
}

/// Effective dimension `d_λ = Σ_i σ_i²/(σ_i² + λ)`.
pub fn degrees_of_freedom(singular_values: ArrayView1<'_, f64>, lambda: f64) -> f64 {
    singular_values.iter().map(|&s| s * s / (s * s + lambda)).sum()
}

/// Ridge-leverage probabilities `p_i = τ̄_i / d_λ`, where
/// `τ̄_i = ‖Σ_λ V_{i·}ᵀ‖²` are the shrunk row scores.
pub fn ridge_leverage_probs(profile: &SpectralProfile, lambda: f64) -> Result<SamplingProbabilities> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::Config(format!(
            "ridge_leverage_probs: lambda must be finite and positive, got {lambda}"
        )));
    }
    let weights = sigma_lambda(profile.singular_values.view(), lambda);
    let d = degrees_of_freedom(profile.singular_values.view(), lambda);
    if !(d.is_finite() && d > 0.0) {
        return Err(Error::Config(format!(
            "ridge_leverage_probs: degenerate effective dimension {d}"
        )));
    }
    let scores = row_scores(profile, Some(&weights));
    Ok(SamplingProbabilities {
        p: scores.into_iter().map(|t| t / d).collect(),
        scheme: SamplingScheme::RidgeLeverage,
    })
}

/// Ridge parameter implied by keeping `ell` spectral directions:
/// `λ = (Σ_{i>ell} σ_i²) / ell`.
///
/// With `ell = len` the tail is empty and the result is `0.0`; callers that
/// need a positive ridge must treat that case themselves.
pub fn ridge_param_from_rank(singular_values: ArrayView1<'_, f64>, ell: usize) -> Result<f64> {
    let n = singular_values.len();
    if ell == 0 || ell > n {
        return Err(Error::Config(format!(
            "ridge_param_from_rank: ell must be in 1..={n}, got {ell}"
        )));
    }
    let tail: f64 = singular_values.iter().skip(ell).map(|&s| s * s).sum();
    Ok(tail / ell as f64)
}

/// Draws `l` sketch columns i.i.d. with replacement from `probs`.
///
/// If the probabilities do not sum to one (the [`LeverageDenominator::TwoM`]
/// comparison mode) the draw renormalizes internally, but column values still
/// use the stored entries: `(l · p_i)^{−1/2}`.
pub fn draw_sketch(
    probs: &SamplingProbabilities,
    l: usize,
    rng: &mut SeedStream,
) -> Result<SketchMatrix> {
    if l == 0 {
        return Err(Error::Config("draw_sketch: need at least one column".into()));
    }
    if probs.p.is_empty() {
        return Err(Error::Config("draw_sketch: empty probability vector".into()));
    }
    let mut cumulative = Vec::with_capacity(probs.p.len());
    let mut total = 0.0;
    for &pi in &probs.p {
        if !(pi.is_finite() && pi >= 0.0) {
            return Err(Error::Config(format!("draw_sketch: invalid probability {pi}")));
        }
        total += pi;
        cumulative.push(total);
    }
    if !(total.is_finite() && total > 0.0) {
        return Err(Error::Config(format!("draw_sketch: probability mass {total} is unusable")));
    }
    let mut columns = Vec::with_capacity(l);
    let lf = l as f64;
    for _ in 0..l {
        let i = rng.categorical(&cumulative);
        columns.push((i, 1.0 / (lf * probs.p[i]).sqrt()));
    }
    Ok(SketchMatrix { n_rows: probs.p.len(), columns })
}

/// Sampled Gram matrix `VᵀSSᵀV` (size `r × r`).
pub fn sketch_gram(profile: &SpectralProfile, s: &SketchMatrix) -> Result<Array2<f64>> {
    let v = &profile.right_vectors;
    if s.n_rows != v.nrows() {
        return Err(Error::Shape(format!(
            "sketch_gram: sketch has {} rows but the profile has {}",
            s.n_rows,
            v.nrows()
        )));
    }
    let r = v.ncols();
    let mut b = Array2::zeros((s.columns.len(), r));
    for (j, &(i, val)) in s.columns.iter().enumerate() {
        let row = v.row(i);
        let mut out = b.row_mut(j);
        for t in 0..r {
            out[t] = val * row[t];
        }
    }
    Ok(b.t().dot(&b))
}

/// Plain sketch quality `‖VᵀSSᵀV − I‖₂` from a precomputed Gram matrix.
pub fn sketch_quality_from_gram(gram: &Array2<f64>) -> Result<f64> {
    let r = gram.nrows();
    let mut a = gram.clone();
    for i in 0..r {
        a[[i, i]] -= 1.0;
    }
    spectral_norm_symmetric(a.view())
}

/// Plain sketch quality `‖VᵀSSᵀV − I‖₂`.
pub fn sketch_quality(profile: &SpectralProfile, s: &SketchMatrix) -> Result<f64> {
    sketch_quality_from_gram(&sketch_gram(profile, s)?)
}

/// Ridge sketch quality `‖Σ_λ(VᵀSSᵀV)Σ_λ − Σ_λ²‖₂` from a precomputed Gram
/// matrix.
pub fn ridge_sketch_quality_from_gram(
    gram: &Array2<f64>,
    singular_values: ArrayView1<'_, f64>,
    lambda: f64,
) -> Result<f64> {
    let r = gram.nrows();
    if singular_values.len() != r {
        return Err(Error::Shape(format!(
            "ridge_sketch_quality: {} singular values for a {r}×{r} Gram matrix",
            singular_values.len()
        )));
    }
    let d = sigma_lambda(singular_values, lambda);
    let mut a = Array2::zeros((r, r));
    for i in 0..r {
        for j in 0..r {
            a[[i, j]] = d[i] * gram[[i, j]] * d[j];
        }
        a[[i, i]] -= d[i] * d[i];
    }
    spectral_norm_symmetric(a.view())
}

/// Ridge sketch quality `‖Σ_λ(VᵀSSᵀV)Σ_λ − Σ_λ²‖₂`.
pub fn ridge_sketch_quality(
    profile: &SpectralProfile,
    lambda: f64,
    s: &SketchMatrix,
) -> Result<f64> {
    ridge_sketch_quality_from_gram(
        &sketch_gram(profile, s)?,
        profile.singular_values.view(),
        lambda,
    )
}

fn check_eps_delta(epsilon: f64, delta: f64, who: &str) -> Result<()> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::Config(format!("{who}: epsilon must be finite and positive, got {epsilon}")));
    }
    if !(delta.is_finite() && delta > 0.0 && delta < 1.0) {
        return Err(Error::Config(format!("{who}: delta must lie strictly in (0, 1), got {delta}")));
    }
    Ok(())
}

/// Columns sufficient for leverage sampling to reach plain quality `ε` with
/// probability `1 − δ`: `⌈(16K / 3ε²) · ln(4(1 + 2K)/δ)⌉`.
pub fn min_samples_leverage(k: usize, epsilon: f64, delta: f64) -> Result<usize> {
    if k == 0 {
        return Err(Error::Config("min_samples_leverage: k must be positive".into()));
    }
    check_eps_delta(epsilon, delta, "min_samples_leverage")?;
    let kf = k as f64;
    let bound = (16.0 * kf / (3.0 * epsilon * epsilon))
        * (4.0 * (1.0 + 2.0 * kf) / delta).ln();
    Ok(bound.ceil() as usize)
}

/// Columns sufficient for ridge-leverage sampling to reach ridge quality `ε`
/// with probability `1 − δ`: `⌈(8 d_λ / 3ε²) · ln(4(1 + d_λ)/δ)⌉`.
pub fn min_samples_ridge(d_lambda: f64, epsilon: f64, delta: f64) -> Result<usize> {
    if !(d_lambda.is_finite() && d_lambda > 0.0) {
        return Err(Error::Config(format!(
            "min_samples_ridge: effective dimension must be finite and positive, got {d_lambda}"
        )));
    }
    check_eps_delta(epsilon, delta, "min_samples_ridge")?;
    let bound = (8.0 * d_lambda / (3.0 * epsilon * epsilon))
        * (4.0 * (1.0 + d_lambda) / delta).ln();
    Ok(bound.ceil() as usize)
}

// ---------------------------------------------------------------------------
