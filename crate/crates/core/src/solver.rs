//! Sketched preconditioned iteration for the embedded ridge problem.
//!
//! One solve works on the real embedding `min ‖QM − Λ‖_F² + λ‖M‖_F²` and
//! repeats three steps: refresh the residual
//! `Λ^(j) = Λ^(j−1) − λY^(j−1) − Q·M̃^(j−1)`, apply the sketched
//! preconditioner `Y^(j) = (QSSᵀQᵀ + λI)⁻¹ Λ^(j)`, and push back
//! `M̃^(j) = Qᵀ Y^(j)`. The running sum `M̂^(t) = Σ_j M̃^(j)` converges to the
//! exact solution geometrically when the sketch is good.
//!
//! Per-iteration cost is two products with `Q` plus work in the small
//! (`2K`-dimensional) space; the preconditioner is factorized once up front.
//! Nothing here ever forms, inverts, or factorizes an `2M × 2M` matrix.
//!
//! Timings are split into the two bucket kinds so callers can verify the
//! cost structure: `q_product_seconds` covers the products with `Q` and the
//! `2M × K` accumulations, `small_space_seconds` the residual updates and
//! preconditioner applications that do not grow with `M`. Error tracking
//! against an oracle solution is instrumentation and is timed in neither
//! bucket.

use ndarray::linalg::general_mat_mul;
use ndarray::{Array1, Array2};
use serde::Serialize;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::linalg::{frobenius, symmetric_eigen};
use crate::realify::RealEmbedding;
use crate::sketch::SketchMatrix;

/// Factorized form of `(QS)(QS)ᵀ + λI`, applied through its eigensystem.
#[derive(Clone, Debug)]
pub struct Preconditioner {
    /// Eigenvectors of the sketched Gram matrix, `2K × 2K`.
    pub basis: Array2<f64>,
    /// Eigenvalues of the sketched Gram matrix, clamped to be non-negative.
    pub spectrum: Array1<f64>,
    /// Ridge shift added to every eigenvalue on application.
    pub lambda: f64,
}

impl Preconditioner {
    /// Builds the preconditioner from the sketched channel.
    ///
    /// Cost is one `L × 2K` product and one `2K × 2K` eigendecomposition;
    /// rank-deficient sketches are fine because the ridge shift keeps the
    /// operator positive definite.
    pub fn factorize(q: &Array2<f64>, s: &SketchMatrix, lambda: f64) -> Result<Self> {
        let (two_k, two_m) = q.dim();
        if s.n_rows != two_m {
            return Err(Error::Shape(format!(
                "factorize: sketch has {} rows but the embedded channel has {two_m} columns",
                s.n_rows
            )));
        }
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::Config(format!(
                "factorize: lambda must be finite and positive, got {lambda}"
            )));
        }
        // B = (QS)ᵀ, one row per sketch column.
        let mut b = Array2::zeros((s.columns.len(), two_k));
        for (j, &(i, val)) in s.columns.iter().enumerate() {
            let col = q.column(i);
            let mut row = b.row_mut(j);
            for t in 0..two_k {
                row[t] = val * col[t];
            }
        }
        let gram = b.t().dot(&b);
        let (mut vals, vecs) = symmetric_eigen(gram.view())?;
        for v in vals.iter_mut() {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        Ok(Preconditioner { basis: vecs, spectrum: vals, lambda })
    }

    /// Applies `(QSSᵀQᵀ + λI)⁻¹` to `b`.
    pub fn apply_inverse(&self, b: &Array2<f64>) -> Result<Array2<f64>> {
        let mut out = Array2::zeros(b.dim());
        self.apply_inverse_into(b, &mut out)?;
        Ok(out)
    }

    /// Applies the inverse into a preallocated output buffer.
    pub fn apply_inverse_into(&self, b: &Array2<f64>, out: &mut Array2<f64>) -> Result<()> {
        let n = self.basis.nrows();
        if b.nrows() != n || out.dim() != b.dim() {
            return Err(Error::Shape(format!(
                "apply_inverse: operand has {} rows, expected {n}",
                b.nrows()
            )));
        }
        let mut coeff = self.basis.t().dot(b);
        for (i, mut row) in coeff.rows_mut().into_iter().enumerate() {
            let scale = 1.0 / (self.spectrum[i] + self.lambda);
            row.mapv_inplace(|x| x * scale);
        }
        general_mat_mul(1.0, &self.basis, &coeff, 0.0, out);
        Ok(())
    }
}

/// Knobs for one sketched solve.
#[derive(Clone, Copy, Debug, Default)]
pub struct IterateOptions {
    /// Stop once the Frobenius norm of the driving residual falls below this
    /// absolute threshold (checked from the second iteration onward, so at
    /// least one iteration always runs).
    pub early_stop_tol: Option<f64>,
    /// Keep per-iteration matrices in the trace (residual, small-space
    /// partial sum, and partial solution). Off for benchmarking.
    pub record_iterates: bool,
}

/// State captured after one iteration.
#[derive(Clone, Debug)]
pub struct IterationRecord {
    /// Iteration number, starting at 1.
    pub iteration: usize,
    /// Frobenius norm of the residual `Λ^(j)` driving this iteration.
    pub residual_norm: f64,
    /// Relative error `‖M̂^(j) − M*‖_F / ‖M*‖_F` when an oracle was given.
    pub error: Option<f64>,
    /// The residual `Λ^(j)` itself (with `record_iterates`).
    pub residual: Option<Array2<f64>>,
    /// Running sum `Ŷ^(j) = Σ_{i≤j} Y^(i)` (with `record_iterates`).
    pub y_partial_sum: Option<Array2<f64>>,
    /// Partial solution `M̂^(j)` (with `record_iterates`).
    pub partial_solution: Option<Array2<f64>>,
}

/// Wall-clock split of one solve.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct SolveTimings {
    /// Preconditioner assembly and factorization.
    pub setup_seconds: f64,
    /// Products with `Q` and `2M × K` accumulations.
    pub q_product_seconds: f64,
    /// Residual updates and preconditioner applications in the `2K` space.
    pub small_space_seconds: f64,
    /// Whole solve including instrumentation.
    pub total_seconds: f64,
}

/// Everything produced by one sketched solve.
#[derive(Clone, Debug)]
pub struct SolveTrace {
    /// One record per completed iteration.
    pub iterations: Vec<IterationRecord>,
    /// Final accumulated solution `M̂`, `2M × K`.
    pub solution: Array2<f64>,
    /// `Some(n)` when the residual target was met after `n` iterations,
    /// before the requested count.
    pub stopped_early: Option<usize>,
    /// Wall-clock split.
    pub timings: SolveTimings,
    /// Ridge parameter the solve ran with.
    pub lambda: f64,
}

/// Compact, serializable view of a trace.
#[derive(Clone, Debug, Serialize)]
pub struct TraceSummary {
    pub lambda: f64,
    pub iterations: usize,
    pub stopped_early: Option<usize>,
    pub residual_norms: Vec<f64>,
    pub errors: Vec<Option<f64>>,
    pub timings: SolveTimings,
}

impl SolveTrace {
    /// Relative error after the last completed iteration, if tracked.
    pub fn final_error(&self) -> Option<f64> {
        self.iterations.last().and_then(|r| r.error)
    }

    /// The accumulated solution lifted back to a complex beamformer.
    pub fn final_beamformer(&self) -> Result<Array2<num_complex::Complex64>> {
        crate::realify::lift(&self.solution)
    }

    pub fn summary(&self) -> TraceSummary {
        TraceSummary {
            lambda: self.lambda,
            iterations: self.iterations.len(),
            stopped_early: self.stopped_early,
            residual_norms: self.iterations.iter().map(|r| r.residual_norm).collect(),
            errors: self.iterations.iter().map(|r| r.error).collect(),
            timings: self.timings,
        }
    }
}

fn diff_frobenius(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b.iter()) {
        let d = x - y;
        acc += d * d;
    }
    acc.sqrt()
}

/// Runs `t` sketched iterations on the embedded problem.
///
/// When `exact` (the oracle solution, `2M × K`) is given, each record carries
/// the relative error of the partial solution against it.
pub fn iterate(
    emb: &RealEmbedding,
    s: &SketchMatrix,
    t: usize,
    exact: Option<&Array2<f64>>,
    opts: &IterateOptions,
) -> Result<SolveTrace> {
    let q = &emb.q;
    let (two_k, two_m) = q.dim();
    let k_cols = emb.target.ncols();
    if t == 0 {
        return Err(Error::Config("iterate: need at least one iteration".into()));
    }
    if s.n_rows != two_m {
        return Err(Error::Shape(format!(
            "iterate: sketch has {} rows but the embedding has {two_m}",
            s.n_rows
        )));
    }
    if let Some(e) = exact {
        if e.dim() != (two_m, k_cols) {
            return Err(Error::Shape(format!(
                "iterate: oracle solution is {:?}, expected ({two_m}, {k_cols})",
                e.dim()
            )));
        }
    }
    if let Some(tol) = opts.early_stop_tol {
        if !(tol.is_finite() && tol > 0.0) {
            return Err(Error::Config(format!(
                "iterate: early_stop_tol must be finite and positive, got {tol}"
            )));
        }
    }

    let total_start = Instant::now();
    let setup_start = Instant::now();
    let precond = Preconditioner::factorize(q, s, emb.lambda)?;
    let setup_seconds = setup_start.elapsed().as_secs_f64();

    let exact_norm = exact.map(|e| frobenius(e.view()));
    let mut lam = emb.target.clone();
    let mut y = Array2::zeros((two_k, k_cols));
    let mut m_tilde = Array2::zeros((two_m, k_cols));
    let mut m_hat = Array2::zeros((two_m, k_cols));
    let mut y_hat = Array2::zeros((two_k, k_cols));
    let qt = q.t();

    let mut records = Vec::with_capacity(t);
    let mut stopped_early = None;
    let mut q_product_seconds = 0.0;
    let mut small_space_seconds = 0.0;

    for j in 1..=t {
        if j > 1 {
            let t_small = Instant::now();
            lam.scaled_add(-emb.lambda, &y);
            small_space_seconds += t_small.elapsed().as_secs_f64();
            let t_q = Instant::now();
            general_mat_mul(-1.0, q, &m_tilde, 1.0, &mut lam);
            q_product_seconds += t_q.elapsed().as_secs_f64();
        }

        let t_small = Instant::now();
        let residual_norm = frobenius(lam.view());
        if let Some(tol) = opts.early_stop_tol {
            if j > 1 && residual_norm <= tol {
                stopped_early = Some(j - 1);
                break;
            }
        }
        precond.apply_inverse_into(&lam, &mut y)?;
        y_hat += &y;
        small_space_seconds += t_small.elapsed().as_secs_f64();

        let t_q = Instant::now();
        general_mat_mul(1.0, &qt, &y, 0.0, &mut m_tilde);
        m_hat += &m_tilde;
        q_product_seconds += t_q.elapsed().as_secs_f64();

        let error = match (exact, exact_norm) {
            (Some(e), Some(en)) if en > 0.0 => Some(diff_frobenius(&m_hat, e) / en),
            _ => None,
        };
        records.push(IterationRecord {
            iteration: j,
            residual_norm,
            error,
            residual: opts.record_iterates.then(|| lam.clone()),
            y_partial_sum: opts.record_iterates.then(|| y_hat.clone()),
            partial_solution: opts.record_iterates.then(|| m_hat.clone()),
        });
    }

    Ok(SolveTrace {
        iterations: records,
        solution: m_hat,
        stopped_early,
        timings: SolveTimings {
            setup_seconds,
            q_product_seconds,
            small_space_seconds,
            total_seconds: total_start.elapsed().as_secs_f64(),
        },
        lambda: emb.lambda,
    })
}

// ---------------------------------------------------------------------------
