//! Real embedding of the complex beamforming ridge problem.
//!
//! A complex channel `H` (`K×M`, row `k` holding the conjugate-transposed
//! user vector `h_kᴴ`) is expanded into the block-real matrix
//!
//! ```text
//!     Q = [ Re H  -Im H ]        (2K × 2M)
//!         [ Im H   Re H ]
//! ```
//!
//! together with the stacked right-hand side `Λ = [λβ·I_K; 0]` (`2K × K`),
//! so that the regularized beamforming solution is an ordinary real ridge
//! problem. Real solutions `[Re W; Im W]` (`2M × K`) are mapped back to
//! complex `W` by [`lift`]. The embedding preserves the quantities the rest
//! of the crate relies on: `‖Q‖_F² = 2‖H‖_F²`, every singular value of `H`
//! appears twice in `Q`, and the top/bottom halves of `Q·M` are the real and
//! imaginary parts of `H·W`.

use ndarray::{s, Array2};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// The real-valued ridge problem equivalent to a complex beamforming solve.
#[derive(Clone, Debug)]
pub struct RealEmbedding {
    /// Block-real expansion of the channel, `2K × 2M`.
    pub q: Array2<f64>,
    /// Stacked right-hand side `[λβ·I_K; 0]`, `2K × K`.
    pub target: Array2<f64>,
    /// Ridge parameter `λ > 0`.
    pub lambda: f64,
    /// Target scale `β > 0` baked into the right-hand side.
    pub beta: f64,
    /// Number of users `K`.
    pub users: usize,
    /// Number of antennas `M`.
    pub antennas: usize,
}

/// Builds the real embedding of channel `h` for ridge parameter `lambda`
/// and target scale `beta`.
pub fn embed(h: &Array2<Complex64>, lambda: f64, beta: f64) -> Result<RealEmbedding> {
    let (k, m) = h.dim();
    if k == 0 || m == 0 {
        return Err(Error::Shape("embed: channel must be non-empty".into()));
    }
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::Config(format!("embed: lambda must be finite and positive, got {lambda}")));
    }
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::Config(format!("embed: beta must be finite and positive, got {beta}")));
    }
    if h.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite("embed: channel entries".into()));
    }
    let mut q = Array2::zeros((2 * k, 2 * m));
    for i in 0..k {
        for j in 0..m {
            let z = h[[i, j]];
            q[[i, j]] = z.re;
            q[[i, m + j]] = -z.im;
            q[[k + i, j]] = z.im;
            q[[k + i, m + j]] = z.re;
        }
    }
    let mut target = Array2::zeros((2 * k, k));
    for i in 0..k {
        target[[i, i]] = lambda * beta;
    }
    Ok(RealEmbedding { q, target, lambda, beta, users: k, antennas: m })
}

/// Maps a real solution `[Re W; Im W]` (`2M × K`) back to complex `M × K`.
pub fn lift(m_real: &Array2<f64>) -> Result<Array2<Complex64>> {
    let (rows, cols) = m_real.dim();
    if rows == 0 || rows % 2 != 0 {
        return Err(Error::Shape(format!("lift: row count must be even and positive, got {rows}")));
    }
    let m = rows / 2;
    let re = m_real.slice(s![..m, ..]);
    let im = m_real.slice(s![m.., ..]);
    Ok(Array2::from_shape_fn((m, cols), |(i, j)| Complex64::new(re[[i, j]], im[[i, j]])))
}

// ---------------------------------------------------------------------------
