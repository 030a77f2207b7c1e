//! The project's acceptance gate.
//!
//! Each test here checks one numbered claim about the library — solver
//! agreement, certified convergence, sampling quality, rate control, cost
//! scaling, and reproducibility — and prints a single
//! `criterion NN (<label>): PASS|FAIL` line (visible with `--nocapture`).
//! Tests serialize on a process-wide gate so the timing-sensitive checks
//! never share the machine with their siblings.

use std::sync::{Mutex, OnceLock};
use std::time::Instant;

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use sketchbeam::channel::{generate_channel, ChannelConfig};
use sketchbeam::metrics::{constant_c, corollary_bound, phi_matrix_from_real, phi_vectors, sum_rate};
use sketchbeam::realify::{embed, lift};
use sketchbeam::rng::SeedStream;
use sketchbeam::rzf::{
    solve_exact_complex, solve_exact_complex_primal, solve_exact_primal, solve_exact_real,
};
use sketchbeam::sketch::{
    degrees_of_freedom, draw_sketch, leverage_probs, min_samples_leverage, min_samples_ridge,
    ridge_leverage_probs, ridge_sketch_quality, sketch_quality, uniform_probs, SketchMatrix,
    SpectralProfile,
};
use sketchbeam::solver::{iterate, IterateOptions};
use sketchbeam_harness::runner::stream_id;
use sketchbeam_harness::stats::{linear_fit, median};

static GATE: Mutex<()> = Mutex::new(());

/// Runs one criterion body under the gate, prints its verdict line, and
/// enforces the wall-clock budget.
fn criterion<F>(num: u32, label: &str, budget_seconds: f64, body: F)
where
    F: FnOnce() -> Result<String, String>,
{
    let _gate = GATE.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let outcome = body();
    let elapsed = start.elapsed().as_secs_f64();
    match outcome {
        Ok(detail) => {
            let within = elapsed <= budget_seconds;
            let verdict = if within { "PASS" } else { "FAIL" };
            println!("criterion {num:02} ({label}): {verdict} [{elapsed:.1}s] {detail}");
            assert!(
                within,
                "criterion {num:02} exceeded its {budget_seconds:.0}s budget ({elapsed:.1}s)"
            );
        }
        Err(reason) => {
            println!("criterion {num:02} ({label}): FAIL [{elapsed:.1}s] {reason}");
            panic!("criterion {num:02} ({label}): {reason}");
        }
    }
}

// ---------------------------------------------------------------------------
// Shared instance generators
// ---------------------------------------------------------------------------

fn complex_gaussian_matrix(k: usize, m: usize, rng: &mut SeedStream) -> Array2<Complex64> {
    Array2::from_shape_fn((k, m), |_| rng.complex_gaussian())
}

/// A random well-conditioned downlink instance with K ≤ 16, M ≤ 256.
struct RandomInstance {
    h: Array2<Complex64>,
    gamma: f64,
    sigma2: f64,
    beta: f64,
    k: usize,
    m: usize,
}

fn random_instance(seed: u64) -> RandomInstance {
    let mut rng = SeedStream::from_seed(seed);
    let k = 1 + (rng.next_u64() % 16) as usize;
    let m = k + (rng.next_u64() % (257 - k as u64)) as usize;
    let sigma2 = 1.0;
    let gamma = 10f64.powf(rng.uniform(-2.0, 3.0));
    let beta = rng.uniform(0.5, 2.0);
    let h = complex_gaussian_matrix(k, m, &mut rng);
    RandomInstance { h, gamma, sigma2, beta, k, m }
}

fn relative_gap(a: &Array2<Complex64>, b: &Array2<Complex64>) -> f64 {
    let num = (a - b).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let na = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let nb = b.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    num / na.max(nb).max(f64::MIN_POSITIVE)
}

// ---------------------------------------------------------------------------
// Shared full-scale trial set (criteria 03, 04, and 06)
// ---------------------------------------------------------------------------

const DESK_SEED: u64 = 0x5b_2026;
const DESK_TRIALS: usize = 200;
const DESK_T: usize = 20;

struct DeskTrial {
    quality: f64,
    epsilon: f64,
    /// Relative solution error after iterations 1..=DESK_T.
    rel_errors: Vec<f64>,
    /// |R(Ŵ^(j)) − R(W*)| in nats.
    rate_gaps: Vec<f64>,
    /// Curvature envelope on the rate gap at each iteration.
    rate_bounds: Vec<f64>,
}

static DESK_SET: OnceLock<Vec<DeskTrial>> = OnceLock::new();

/// 200 default-scale trials (M = 256, K = 16) with leverage sketches at the
/// certified sample count, sharing one seeding layout so every criterion that
/// quotes "the trial set" sees identical draws.
fn desk_trials() -> &'static [DeskTrial] {
    DESK_SET.get_or_init(|| {
        let cfg = ChannelConfig::default();
        let gamma = cfg.gamma().unwrap();
        let lambda = cfg.ridge_lambda().unwrap();
        let sigma2 = cfg.noise_power;
        let l = min_samples_leverage(cfg.k, 0.5, 0.1).unwrap();
        let opts = IterateOptions { early_stop_tol: None, record_iterates: true };

        let mut out = Vec::with_capacity(DESK_TRIALS);
        for trial in 0..DESK_TRIALS {
            let mut rng = SeedStream::substream(DESK_SEED, stream_id(trial, 0));
            let ch = generate_channel(&cfg, &mut rng).unwrap();
            let wstar = solve_exact_complex(&ch.h, gamma, sigma2, 1.0).unwrap();
            let emb = embed(&ch.h, lambda, 1.0).unwrap();
            let m_star = solve_exact_real(&emb).unwrap();
            let profile = SpectralProfile::compute(&emb.q).unwrap();

            let mut srng = SeedStream::substream(DESK_SEED, stream_id(trial, 1));
            let s = draw_sketch(&leverage_probs(&profile).unwrap(), l, &mut srng).unwrap();
            let quality = sketch_quality(&profile, &s).unwrap();
            let epsilon = 2.0 * quality;

            let trace = iterate(&emb, &s, DESK_T, Some(&m_star), &opts).unwrap();
            let r_star = sum_rate(&ch.h, &wstar.w, sigma2).unwrap().sum_nats;
            let c = constant_c(&ch.h, &wstar.w, sigma2).unwrap();

            let mut rel_errors = Vec::with_capacity(DESK_T);
            let mut rate_gaps = Vec::with_capacity(DESK_T);
            let mut rate_bounds = Vec::with_capacity(DESK_T);
            for rec in &trace.iterations {
                rel_errors.push(rec.error.unwrap());
                let w_hat = lift(rec.partial_solution.as_ref().unwrap()).unwrap();
                let r_hat = sum_rate(&ch.h, &w_hat, sigma2).unwrap().sum_nats;
                rate_gaps.push((r_hat - r_star).abs());
                rate_bounds
                    .push(corollary_bound(rec.iteration, epsilon, c, &ch.h, &wstar.w, 0.0).unwrap());
            }
            out.push(DeskTrial { quality, epsilon, rel_errors, rate_gaps, rate_bounds });
        }
        out
    })
}

// ---------------------------------------------------------------------------
// Criteria
// ---------------------------------------------------------------------------

#[test]
fn criterion_01_exact_solvers_agree_pairwise() {
    criterion(1, "four exact solvers agree pairwise", 30.0, || {
        let mut worst = 0.0f64;
        for seed in 0..100u64 {
            let inst = random_instance(3000 + seed);
            let dual = solve_exact_complex(&inst.h, inst.gamma, inst.sigma2, inst.beta)
                .map_err(|e| e.to_string())?;
            let primal = solve_exact_complex_primal(&inst.h, inst.gamma, inst.sigma2, inst.beta)
                .map_err(|e| e.to_string())?;
            let emb = embed(&inst.h, inst.sigma2 / inst.gamma, inst.beta)
                .map_err(|e| e.to_string())?;
            let real_dual =
                lift(&solve_exact_real(&emb).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
            let real_primal = lift(&solve_exact_primal(&emb).map_err(|e| e.to_string())?)
                .map_err(|e| e.to_string())?;

            let candidates = [&dual.w, &primal.w, &real_dual, &real_primal];
            for i in 0..candidates.len() {
                for j in (i + 1)..candidates.len() {
                    let gap = relative_gap(candidates[i], candidates[j]);
                    worst = worst.max(gap);
                    if gap > 1e-8 {
                        return Err(format!(
                            "solvers {i} and {j} disagree by {gap:.3e} \
                             (seed {seed}, K={}, M={})",
                            inst.k, inst.m
                        ));
                    }
                }
            }
        }
        Ok(format!("100 instances, worst pairwise gap {worst:.3e}"))
    });
}

#[test]
fn criterion_02_identity_sketch_solves_in_one_iteration() {
    criterion(2, "identity sketch solves in one iteration", 10.0, || {
        let mut worst = 0.0f64;
        for seed in 0..50u64 {
            let inst = random_instance(4000 + seed);
            let emb = embed(&inst.h, inst.sigma2 / inst.gamma, inst.beta)
                .map_err(|e| e.to_string())?;
            let m_star = solve_exact_real(&emb).map_err(|e| e.to_string())?;
            let s = SketchMatrix::identity(2 * inst.m);
            let opts = IterateOptions { early_stop_tol: None, record_iterates: false };
            let trace =
                iterate(&emb, &s, 1, Some(&m_star), &opts).map_err(|e| e.to_string())?;
            let err = trace.iterations[0].error.unwrap();
            worst = worst.max(err);
            if err > 1e-9 {
                return Err(format!(
                    "seed {seed} (K={}, M={}): one identity step left error {err:.3e}",
                    inst.k, inst.m
                ));
            }
        }
        Ok(format!("50 instances, worst one-step error {worst:.3e}"))
    });
}

#[test]
fn criterion_03_certified_trials_meet_the_geometric_envelope() {
    criterion(3, "certified trials meet the geometric envelope", 300.0, || {
        let trials = desk_trials();
        let mut qualifying = 0usize;
        let mut passing = 0usize;
        for tr in trials {
            if tr.epsilon >= 1.0 {
                continue;
            }
            qualifying += 1;
            let ok = tr
                .rel_errors
                .iter()
                .enumerate()
                .all(|(i, &e)| e <= tr.epsilon.powi(i as i32 + 1) + 1e-9);
            if ok {
                passing += 1;
            }
        }
        if qualifying == 0 {
            return Err("no trial certified a contraction below one".into());
        }
        let frac = passing as f64 / qualifying as f64;
        if frac < 0.95 {
            return Err(format!(
                "only {passing}/{qualifying} certified trials met the envelope"
            ));
        }
        Ok(format!(
            "{passing}/{qualifying} certified trials met the envelope ({} total)",
            trials.len()
        ))
    });
}

#[test]
fn criterion_04_leverage_sampling_certifies_most_trials() {
    criterion(4, "leverage sampling certifies most trials", 120.0, || {
        let trials = desk_trials();
        let good = trials.iter().filter(|t| t.quality <= 0.5).count();
        let need = (trials.len() as f64 * 0.9).ceil() as usize;
        let med = median(&trials.iter().map(|t| t.quality).collect::<Vec<_>>());
        if good < need {
            return Err(format!(
                "only {good}/{} trials reached quality <= 0.5 (median {med:.3})",
                trials.len()
            ));
        }
        Ok(format!(
            "{good}/{} trials at quality <= 0.5, median quality {med:.3}",
            trials.len()
        ))
    });
}

#[test]
fn criterion_05_ridge_sampling_certifies_most_trials() {
    criterion(5, "ridge sampling certifies most trials", 120.0, || {
        let cfg = ChannelConfig::default();
        let lambda = cfg.ridge_lambda().map_err(|e| e.to_string())?;
        let mut good = 0usize;
        let mut qualities = Vec::with_capacity(DESK_TRIALS);
        let mut sizes = Vec::with_capacity(DESK_TRIALS);
        for trial in 0..DESK_TRIALS {
            let mut rng = SeedStream::substream(DESK_SEED, stream_id(trial, 0));
            let ch = generate_channel(&cfg, &mut rng).map_err(|e| e.to_string())?;
            let emb = embed(&ch.h, lambda, 1.0).map_err(|e| e.to_string())?;
            let profile = SpectralProfile::compute(&emb.q).map_err(|e| e.to_string())?;
            let d_lambda = degrees_of_freedom(profile.singular_values.view(), lambda);
            let l = min_samples_ridge(d_lambda, 0.5, 0.1).map_err(|e| e.to_string())?;
            sizes.push(l as f64);

            let mut srng = SeedStream::substream(DESK_SEED, stream_id(trial, 2));
            let probs = ridge_leverage_probs(&profile, lambda).map_err(|e| e.to_string())?;
            let s = draw_sketch(&probs, l, &mut srng).map_err(|e| e.to_string())?;
            let quality =
                ridge_sketch_quality(&profile, lambda, &s).map_err(|e| e.to_string())?;
            qualities.push(quality);
            if quality <= 0.5 {
                good += 1;
            }
        }
        let need = (DESK_TRIALS as f64 * 0.9).ceil() as usize;
        let med_q = median(&qualities);
        let med_l = median(&sizes);
        if good < need {
            return Err(format!(
                "only {good}/{DESK_TRIALS} trials reached ridge quality <= 0.5 \
                 (median {med_q:.3}, median samples {med_l:.0})"
            ));
        }
        Ok(format!(
            "{good}/{DESK_TRIALS} trials at ridge quality <= 0.5, \
             median quality {med_q:.3}, median samples {med_l:.0}"
        ))
    });
}

#[test]
fn criterion_06_rate_gaps_stay_under_the_curvature_envelope() {
    criterion(6, "rate gaps stay under the curvature envelope", 300.0, || {
        let trials = desk_trials();
        let mut qualifying = 0usize;
        let mut passing = 0usize;
        for tr in trials {
            if tr.epsilon >= 1.0 {
                continue;
            }
            qualifying += 1;
            let ok = tr
                .rate_gaps
                .iter()
                .zip(&tr.rate_bounds)
                .all(|(&gap, &bound)| gap <= bound + 1e-9);
            if ok {
                passing += 1;
            }
        }
        if qualifying == 0 {
            return Err("no trial certified a contraction below one".into());
        }
        let frac = passing as f64 / qualifying as f64;
        if frac < 0.95 {
            return Err(format!(
                "only {passing}/{qualifying} certified trials stayed under the envelope"
            ));
        }
        Ok(format!("{passing}/{qualifying} certified trials stayed under the envelope"))
    });
}

#[test]
fn criterion_07_convergence_is_loglinear_and_steepens_with_l() {
    criterion(7, "log-linear convergence steepens with the sketch", 180.0, || {
        const SIZES: [usize; 3] = [64, 128, 256];
        const TRIALS: usize = 50;
        const T: usize = 20;
        let cfg = ChannelConfig::default();
        let lambda = cfg.ridge_lambda().map_err(|e| e.to_string())?;
        let opts = IterateOptions { early_stop_tol: None, record_iterates: false };

        // errors[size][iteration][trial]
        let mut errors: Vec<Vec<Vec<f64>>> =
            (0..SIZES.len()).map(|_| (0..T).map(|_| Vec::new()).collect()).collect();
        for trial in 0..TRIALS {
            let mut rng = SeedStream::substream(0x07_2026, stream_id(trial, 0));
            let ch = generate_channel(&cfg, &mut rng).map_err(|e| e.to_string())?;
            let emb = embed(&ch.h, lambda, 1.0).map_err(|e| e.to_string())?;
            let m_star = solve_exact_real(&emb).map_err(|e| e.to_string())?;
            let profile = SpectralProfile::compute(&emb.q).map_err(|e| e.to_string())?;
            let probs = leverage_probs(&profile).map_err(|e| e.to_string())?;
            for (si, &l) in SIZES.iter().enumerate() {
                let mut srng = SeedStream::substream(0x07_2026, stream_id(trial, 1 + si));
                let s = draw_sketch(&probs, l, &mut srng).map_err(|e| e.to_string())?;
                let trace =
                    iterate(&emb, &s, T, Some(&m_star), &opts).map_err(|e| e.to_string())?;
                for rec in &trace.iterations {
                    errors[si][rec.iteration - 1].push(rec.error.unwrap());
                }
            }
        }

        let mut slopes = Vec::with_capacity(SIZES.len());
        let mut details = Vec::with_capacity(SIZES.len());
        for (si, &l) in SIZES.iter().enumerate() {
            let mut xs = Vec::with_capacity(T);
            let mut ys = Vec::with_capacity(T);
            for (t, per_trial) in errors[si].iter().enumerate() {
                let med = median(per_trial);
                if med > 1e-12 {
                    xs.push((t + 1) as f64);
                    ys.push(med.log10());
                }
            }
            let (slope, _, r2) = linear_fit(&xs, &ys)
                .ok_or_else(|| format!("L={l}: degenerate fit over {} points", xs.len()))?;
            if slope >= 0.0 {
                return Err(format!("L={l}: slope {slope:.3} is not negative"));
            }
            if r2 < 0.9 {
                return Err(format!("L={l}: fit R^2 {r2:.3} below 0.9 (slope {slope:.3})"));
            }
            slopes.push(slope);
            details.push(format!("L={l}: slope {slope:.3}, R^2 {r2:.3}"));
        }
        for i in 1..slopes.len() {
            if slopes[i] >= slopes[i - 1] {
                return Err(format!(
                    "slopes fail to steepen with the sketch: {details:?}"
                ));
            }
        }
        Ok(details.join("; "))
    });
}

#[test]
fn criterion_08_error_is_monotone_in_sketch_size() {
    criterion(8, "median error is monotone in sketch size", 300.0, || {
        const SIZES: [usize; 4] = [64, 128, 256, 512];
        const TRIALS: usize = 50;
        const T: usize = 10;
        let cfg = ChannelConfig::default();
        let lambda = cfg.ridge_lambda().map_err(|e| e.to_string())?;
        let opts = IterateOptions { early_stop_tol: None, record_iterates: false };
        let schemes = ["uniform", "leverage", "ridge_leverage"];

        // finals[scheme][size][trial]
        let mut finals: Vec<Vec<Vec<f64>>> =
            (0..schemes.len()).map(|_| (0..SIZES.len()).map(|_| Vec::new()).collect()).collect();
        for trial in 0..TRIALS {
            let mut rng = SeedStream::substream(0x08_2026, stream_id(trial, 0));
            let ch = generate_channel(&cfg, &mut rng).map_err(|e| e.to_string())?;
            let emb = embed(&ch.h, lambda, 1.0).map_err(|e| e.to_string())?;
            let m_star = solve_exact_real(&emb).map_err(|e| e.to_string())?;
            let profile = SpectralProfile::compute(&emb.q).map_err(|e| e.to_string())?;
            let probs_by_scheme = [
                uniform_probs(emb.q.ncols()).map_err(|e| e.to_string())?,
                leverage_probs(&profile).map_err(|e| e.to_string())?,
                ridge_leverage_probs(&profile, lambda).map_err(|e| e.to_string())?,
            ];
            let mut lane = 1usize;
            for (ci, probs) in probs_by_scheme.iter().enumerate() {
                for (si, &l) in SIZES.iter().enumerate() {
                    let mut srng = SeedStream::substream(0x08_2026, stream_id(trial, lane));
                    lane += 1;
                    let s = draw_sketch(probs, l, &mut srng).map_err(|e| e.to_string())?;
                    let trace =
                        iterate(&emb, &s, T, Some(&m_star), &opts).map_err(|e| e.to_string())?;
                    finals[ci][si].push(trace.final_error().unwrap());
                }
            }
        }

        let mut details = Vec::new();
        for (ci, scheme) in schemes.iter().enumerate() {
            let medians: Vec<f64> = finals[ci].iter().map(|v| median(v)).collect();
            for i in 1..medians.len() {
                if medians[i] > medians[i - 1] {
                    return Err(format!(
                        "{scheme}: median error rose from {:.3e} (L={}) to {:.3e} (L={})",
                        medians[i - 1],
                        SIZES[i - 1],
                        medians[i],
                        SIZES[i]
                    ));
                }
            }
            details.push(format!(
                "{scheme}: {}",
                medians.iter().map(|m| format!("{m:.2e}")).collect::<Vec<_>>().join(" >= ")
            ));
        }
        Ok(details.join("; "))
    });
}

#[test]
fn criterion_09_scalar_inequalities_hold_pointwise() {
    criterion(9, "scalar rate inequalities hold pointwise", 60.0, || {
        // Log-gap inequality |ln(1+a) - ln(1+b)| <= |a - b| on positive pairs.
        let mut rng = SeedStream::from_seed(0x91_2026);
        let mut log_violations = 0usize;
        for _ in 0..100_000 {
            let a = 10f64.powf(rng.uniform(-6.0, 6.0));
            let b = 10f64.powf(rng.uniform(-6.0, 6.0));
            if (a.ln_1p() - b.ln_1p()).abs() > (a - b).abs() {
                log_violations += 1;
            }
        }
        if log_violations > 0 {
            return Err(format!("{log_violations} log-gap violations in 100000 pairs"));
        }

        // Perturbation inequality for the signal powers:
        // |phi(w+d) - phi(w)| <= ||d|| ||h||^2 (||d|| + 2||w||).
        let mut rng = SeedStream::from_seed(0x92_2026);
        let mut phi_violations = 0usize;
        for _ in 0..10_000 {
            let m = 4 + (rng.next_u64() % 29) as usize;
            let h = Array1::from_shape_fn(m, |_| rng.complex_gaussian());
            let w = Array1::from_shape_fn(m, |_| rng.complex_gaussian());
            let scale = 10f64.powf(rng.uniform(-3.0, 0.0));
            let d = Array1::from_shape_fn(m, |_| rng.complex_gaussian() * scale);
            let w_hat = &w + &d;

            let phi_w = phi_vectors(h.view(), w.view()).map_err(|e| e.to_string())?;
            let phi_hat = phi_vectors(h.view(), w_hat.view()).map_err(|e| e.to_string())?;
            let dn = d.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let hn2 = h.iter().map(|z| z.norm_sqr()).sum::<f64>();
            let wn = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if (phi_hat - phi_w).abs() > dn * hn2 * (dn + 2.0 * wn) + 1e-12 {
                phi_violations += 1;
            }
        }
        if phi_violations > 0 {
            return Err(format!("{phi_violations} perturbation violations in 10000 draws"));
        }

        // The complex and real-embedded signal powers agree.
        let mut rng = SeedStream::from_seed(0x93_2026);
        let mut worst = 0.0f64;
        for _ in 0..10_000 {
            let m = 2 + (rng.next_u64() % 15) as usize;
            let mut h = Array1::from_shape_fn(m, |_| rng.complex_gaussian());
            let mut w = Array1::from_shape_fn(m, |_| rng.complex_gaussian());
            let hn = h.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let wn = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            h.mapv_inplace(|z| z / hn);
            w.mapv_inplace(|z| z / wn);

            let phi_c = phi_vectors(h.view(), w.view()).map_err(|e| e.to_string())?;

            // The matrix pipeline stores conjugated channel rows, so the
            // plain embedded product reproduces the conjugated form above.
            let h_mat = h.mapv(|z| z.conj()).insert_axis(ndarray::Axis(0));
            let emb = embed(&h_mat, 1.0, 1.0).map_err(|e| e.to_string())?;
            let mut w_real = Array2::zeros((2 * m, 1));
            for i in 0..m {
                w_real[[i, 0]] = w[i].re;
                w_real[[m + i, 0]] = w[i].im;
            }
            let qm = emb.q.dot(&w_real);
            let phi_r = phi_matrix_from_real(&qm).map_err(|e| e.to_string())?[[0, 0]];
            let gap = (phi_c - phi_r).abs();
            worst = worst.max(gap);
            if gap > 1e-10 {
                return Err(format!("product forms disagree by {gap:.3e}"));
            }
        }
        Ok(format!(
            "0 violations in 100000 log pairs and 10000 perturbation draws; \
             worst product-form gap {worst:.3e}"
        ))
    });
}

#[test]
fn criterion_10_iteration_cost_stays_in_the_small_space() {
    criterion(10, "small-space cost is flat while exact solves grow", 300.0, || {
        const MS: [usize; 3] = [512, 1024, 2048];
        const L: usize = 128;
        const T: usize = 10;
        const REPS: usize = 20;

        let mut exact_med = Vec::with_capacity(MS.len());
        let mut small_med = Vec::with_capacity(MS.len());
        for (mi, &m) in MS.iter().enumerate() {
            let cfg = ChannelConfig { m, ..ChannelConfig::default() };
            let mut rng = SeedStream::substream(0x10_2026, stream_id(mi, 0));
            let ch = generate_channel(&cfg, &mut rng).map_err(|e| e.to_string())?;
            let lambda = cfg.ridge_lambda().map_err(|e| e.to_string())?;
            let emb = embed(&ch.h, lambda, 1.0).map_err(|e| e.to_string())?;
            let mut srng = SeedStream::substream(0x10_2026, stream_id(mi, 1));
            let probs = uniform_probs(2 * m).map_err(|e| e.to_string())?;
            let s = draw_sketch(&probs, L, &mut srng).map_err(|e| e.to_string())?;
            let opts = IterateOptions::default();

            for _ in 0..2 {
                let _ = solve_exact_real(&emb).map_err(|e| e.to_string())?;
                let _ = iterate(&emb, &s, T, None, &opts).map_err(|e| e.to_string())?;
            }
            let mut exacts = Vec::with_capacity(REPS);
            let mut smalls = Vec::with_capacity(REPS);
            for _ in 0..REPS {
                let t0 = Instant::now();
                let _ = solve_exact_real(&emb).map_err(|e| e.to_string())?;
                exacts.push(t0.elapsed().as_secs_f64());
                let trace = iterate(&emb, &s, T, None, &opts).map_err(|e| e.to_string())?;
                smalls.push(trace.timings.small_space_seconds);
            }
            exact_med.push(median(&exacts));
            small_med.push(median(&smalls));
        }

        for i in 1..MS.len() {
            let ratio = exact_med[i] / exact_med[i - 1];
            if ratio < 1.5 {
                return Err(format!(
                    "exact solve grew only {ratio:.2}x from M={} to M={} \
                     (medians {:.2e}s -> {:.2e}s)",
                    MS[i - 1],
                    MS[i],
                    exact_med[i - 1],
                    exact_med[i]
                ));
            }
        }
        let small_min = small_med.iter().cloned().fold(f64::INFINITY, f64::min);
        let small_max = small_med.iter().cloned().fold(0.0, f64::max);
        let spread = small_max / small_min;
        if spread > 1.5 {
            return Err(format!(
                "small-space time varied {spread:.2}x across M (medians {:?})",
                small_med
            ));
        }
        Ok(format!(
            "exact medians {:.2e}/{:.2e}/{:.2e}s (ratios {:.2}x, {:.2}x); \
             small-space spread {spread:.2}x",
            exact_med[0],
            exact_med[1],
            exact_med[2],
            exact_med[1] / exact_med[0],
            exact_med[2] / exact_med[1]
        ))
    });
}

#[test]
fn criterion_11_reruns_are_byte_identical() {
    criterion(11, "reruns with one seed are byte-identical", f64::INFINITY, || {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let configs = [
            (
                "sampling-compare",
                serde_json::json!({
                    "scenario": "sampling_compare",
                    "channel": { "m": 24, "k": 3 },
                    "sketch_sizes": [12, 24],
                    "schemes": ["uniform", "leverage", "ridge_leverage"],
                    "iterations": 3,
                    "trials": 3,
                    "master_seed": 2026
                }),
            ),
            (
                "convergence",
                serde_json::json!({
                    "scenario": "convergence",
                    "channel": { "m": 16, "k": 2 },
                    "sketch_sizes": [16],
                    "schemes": ["leverage"],
                    "iterations": 4,
                    "trials": 3,
                    "master_seed": 2026
                }),
            ),
            (
                "snr-sweep",
                serde_json::json!({
                    "scenario": "snr_sweep",
                    "channel": { "m": 16, "k": 2 },
                    "sketch_sizes": [16],
                    "schemes": ["uniform"],
                    "iterations": 3,
                    "snr_grid_db": [80.0, 105.0],
                    "trials": 2,
                    "master_seed": 2026
                }),
            ),
        ];
        let mut total = 0usize;
        for (subcommand, value) in &configs {
            let cfg_path = dir.path().join(format!("{subcommand}.json"));
            std::fs::write(&cfg_path, serde_json::to_string(value).unwrap())
                .map_err(|e| e.to_string())?;
            let mut outputs = Vec::new();
            for run in 0..2 {
                let out_path = dir.path().join(format!("{subcommand}-{run}.csv"));
                let status = std::process::Command::new(env!("CARGO_BIN_EXE_sketchbeam"))
                    .args([
                        subcommand,
                        "--config",
                        cfg_path.to_str().unwrap(),
                        "--out",
                        out_path.to_str().unwrap(),
                    ])
                    .output()
                    .map_err(|e| e.to_string())?;
                if !status.status.success() {
                    return Err(format!(
                        "{subcommand} run {run} failed: {}",
                        String::from_utf8_lossy(&status.stderr)
                    ));
                }
                outputs.push(std::fs::read(&out_path).map_err(|e| e.to_string())?);
            }
            if outputs[0] != outputs[1] {
                return Err(format!("{subcommand}: reruns differ"));
            }
            total += outputs[0].len();
        }

        // The timing scenario keeps its layout and keys stable even though
        // the measured seconds differ between runs.
        let bench_cfg = serde_json::json!({
            "scenario": "bench",
            "channel": { "k": 2 },
            "m_grid": [2, 4],
            "sketch_sizes": [2],
            "iterations": 2,
            "trials": 2,
            "master_seed": 2026
        });
        let cfg_path = dir.path().join("bench.json");
        std::fs::write(&cfg_path, serde_json::to_string(&bench_cfg).unwrap())
            .map_err(|e| e.to_string())?;
        let mut keyed = Vec::new();
        for run in 0..2 {
            let out_path = dir.path().join(format!("bench-{run}.csv"));
            let status = std::process::Command::new(env!("CARGO_BIN_EXE_sketchbeam"))
                .args(["bench", "--config", cfg_path.to_str().unwrap(), "--out", out_path.to_str().unwrap()])
                .output()
                .map_err(|e| e.to_string())?;
            if !status.status.success() {
                return Err(format!(
                    "bench run {run} failed: {}",
                    String::from_utf8_lossy(&status.stderr)
                ));
            }
            let text = std::fs::read_to_string(&out_path).map_err(|e| e.to_string())?;
            let keys: Vec<String> = text
                .lines()
                .map(|l| l.split(',').take(7).collect::<Vec<_>>().join(","))
                .collect();
            keyed.push(keys);
        }
        if keyed[0] != keyed[1] {
            return Err("bench reruns changed their non-timing columns".into());
        }
        Ok(format!(
            "3 scenarios byte-identical across reruns ({total} bytes); \
             bench keys stable"
        ))
    });
}
