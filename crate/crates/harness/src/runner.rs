//! Scenario runners: seeded trial loops and deterministic CSV assembly.
//!
//! Every trial derives its random streams from the master seed, so a re-run
//! with the same config reproduces the CSV byte for byte (timing columns
//! excepted). Floats are printed with 17 significant digits; aggregate rows
//! (`stat` = `mean`/`median`) follow the per-trial `sample` rows.

use std::path::Path;
use std::time::Instant;

use anyhow::{Context, Result};
use sketchbeam::channel::generate_channel;
use sketchbeam::metrics::{constant_c, corollary_bound, eta_value, sum_rate};
use sketchbeam::realify::{embed, lift};
use sketchbeam::rng::SeedStream;
use sketchbeam::rzf::{power_normalize, solve_exact_complex, solve_exact_real};
use sketchbeam::sketch::{
    draw_sketch, leverage_probs, leverage_probs_with_denominator, ridge_leverage_probs,
    sketch_quality, uniform_probs, LeverageDenominator, SamplingScheme, SketchMatrix,
    SpectralProfile,
};
use sketchbeam::solver::{iterate, IterateOptions};

use crate::config::{ExperimentConfig, Scenario};
use crate::stats::{mean, median};

/// An assembled CSV: header plus string rows, written verbatim.
#[derive(Clone, Debug)]
pub struct CsvDocument {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvDocument {
    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        let bytes = w.into_inner().context("flushing csv buffer")?;
        String::from_utf8(bytes).context("csv output was not utf-8")
    }

    pub fn write_to(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string()?)
            .with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }
}

/// Fixed-width float formatting: 17 significant digits, round-trippable.
pub fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

/// Stream identifier for lane `lane` of trial `trial`.
///
/// Lane 0 draws the channel; lanes 1.. draw one sketch per sweep point.
pub fn stream_id(trial: usize, lane: usize) -> u64 {
    ((trial as u64) << 16) | lane as u64
}

/// One sweep entry: a sampling scheme, or the identity-sketch override.
#[derive(Clone, Debug)]
struct SchemePick {
    label: &'static str,
    scheme: Option<SamplingScheme>,
}

fn scheme_plan(cfg: &ExperimentConfig) -> Vec<SchemePick> {
    if cfg.identity_sketch {
        vec![SchemePick { label: "identity", scheme: None }]
    } else {
        cfg.schemes
            .iter()
            .map(|s| SchemePick { label: s.label(), scheme: Some(*s) })
            .collect()
    }
}

fn size_plan(cfg: &ExperimentConfig) -> Vec<usize> {
    if cfg.identity_sketch {
        vec![2 * cfg.channel.m]
    } else {
        cfg.sketch_sizes.clone()
    }
}

fn build_sketch(
    pick: &SchemePick,
    l: usize,
    two_m: usize,
    profile: &SpectralProfile,
    lambda: f64,
    deficient_2m: bool,
    rng: &mut SeedStream,
) -> Result<SketchMatrix> {
    let s = match pick.scheme {
        None => SketchMatrix::identity(two_m),
        Some(SamplingScheme::Uniform) => draw_sketch(&uniform_probs(two_m)?, l, rng)?,
        Some(SamplingScheme::Leverage) => {
            let probs = if deficient_2m {
                leverage_probs_with_denominator(profile, LeverageDenominator::TwoM)?
            } else {
                leverage_probs(profile)?
            };
            draw_sketch(&probs, l, rng)?
        }
        Some(SamplingScheme::RidgeLeverage) => {
            draw_sketch(&ridge_leverage_probs(profile, lambda)?, l, rng)?
        }
    };
    Ok(s)
}

/// Everything one (trial, scheme, sketch-size) point produces, per iteration.
#[derive(Clone, Debug)]
pub struct TrialCurves {
    pub trial: usize,
    pub stream: u64,
    pub scheme: &'static str,
    pub sketch_size: usize,
    /// Contraction factor certified by the measured plain quality.
    pub epsilon: f64,
    /// Relative solution error after iterations 1..=t.
    pub errors: Vec<f64>,
    /// |R(Ŵ^(j)) − R(W*)| in nats, raw (un-normalized) solutions.
    pub sumrate_gaps: Vec<f64>,
    /// Relative geometric envelope ε^j.
    pub envelope_rel: Vec<f64>,
    /// Absolute sum-rate envelope per iteration.
    pub sumrate_envelope: Vec<f64>,
}

/// Runs the shared trial loop behind `sampling_compare`, `convergence`, and
/// `sumrate_convergence`: per sweep point, a sketched solve against the
/// exact solution, with quality-certified envelopes alongside.
pub fn collect_convergence(cfg: &ExperimentConfig) -> Result<Vec<TrialCurves>> {
    let picks = scheme_plan(cfg);
    let sizes = size_plan(cfg);
    let t = cfg.iterations;
    let gamma = cfg.channel.gamma()?;
    let lambda = cfg.channel.ridge_lambda()?;
    let sigma2 = cfg.channel.noise_power;
    let two_m = 2 * cfg.channel.m;

    let mut out = Vec::with_capacity(cfg.trials * picks.len() * sizes.len());
    for trial in 0..cfg.trials {
        let chan_stream = stream_id(trial, 0);
        let mut run = || -> Result<()> {
            let mut rng = SeedStream::substream(cfg.master_seed, chan_stream);
            let ch = generate_channel(&cfg.channel, &mut rng)?;
            let wstar = solve_exact_complex(&ch.h, gamma, sigma2, 1.0)?;
            let emb = embed(&ch.h, lambda, 1.0)?;
            let m_star = solve_exact_real(&emb)?;
            let profile = SpectralProfile::compute(&emb.q)?;
            let r_star = sum_rate(&ch.h, &wstar.w, sigma2)?.sum_nats;
            let c = constant_c(&ch.h, &wstar.w, sigma2)?;
            let eta = eta_value(cfg.eta_convention, lambda, &emb.target, &profile)?;

            let mut lane = 1usize;
            for pick in &picks {
                for &l in &sizes {
                    let mut srng = SeedStream::substream(cfg.master_seed, stream_id(trial, lane));
                    lane += 1;
                    let s = build_sketch(
                        pick,
                        l,
                        two_m,
                        &profile,
                        lambda,
                        cfg.leverage_denominator_2m,
                        &mut srng,
                    )?;
                    let epsilon = 2.0 * sketch_quality(&profile, &s)?;
                    let opts = IterateOptions { early_stop_tol: None, record_iterates: true };
                    let trace = iterate(&emb, &s, t, Some(&m_star), &opts)?;

                    let mut errors = Vec::with_capacity(t);
                    let mut gaps = Vec::with_capacity(t);
                    let mut envelope = Vec::with_capacity(t);
                    let mut rate_envelope = Vec::with_capacity(t);
                    for rec in &trace.iterations {
                        errors.push(rec.error.expect("oracle error is recorded"));
                        let w_hat =
                            lift(rec.partial_solution.as_ref().expect("iterates are recorded"))?;
                        let r_hat = sum_rate(&ch.h, &w_hat, sigma2)?.sum_nats;
                        gaps.push((r_hat - r_star).abs());
                        envelope.push(epsilon.powi(rec.iteration as i32));
                        rate_envelope.push(corollary_bound(
                            rec.iteration,
                            epsilon,
                            c,
                            &ch.h,
                            &wstar.w,
                            eta,
                        )?);
                    }
                    out.push(TrialCurves {
                        trial,
                        stream: chan_stream,
                        scheme: pick.label,
                        sketch_size: s.l(),
                        epsilon,
                        errors,
                        sumrate_gaps: gaps,
                        envelope_rel: envelope,
                        sumrate_envelope: rate_envelope,
                    });
                }
            }
            Ok(())
        };
        run().with_context(|| {
            format!(
                "trial {trial} failed (master_seed {}, stream {chan_stream})",
                cfg.master_seed
            )
        })?;
    }
    Ok(out)
}

/// Groups curves by sweep point, preserving the sweep order.
fn group_by_point(curves: &[TrialCurves]) -> Vec<((&'static str, usize), Vec<&TrialCurves>)> {
    let mut points: Vec<(&'static str, usize)> = Vec::new();
    for c in curves {
        if !points.contains(&(c.scheme, c.sketch_size)) {
            points.push((c.scheme, c.sketch_size));
        }
    }
    points
        .into_iter()
        .map(|p| {
            let members = curves
                .iter()
                .filter(|c| (c.scheme, c.sketch_size) == p)
                .collect();
            (p, members)
        })
        .collect()
}

pub fn run_sampling_compare(cfg: &ExperimentConfig) -> Result<CsvDocument> {
    let curves = collect_convergence(cfg)?;
    let t = cfg.iterations;
    let header = vec![
        "scenario",
        "master_seed",
        "trial",
        "stream",
        "scheme",
        "sketch_size",
        "iterations",
        "stat",
        "solution_error",
        "sumrate_error",
    ]
    .into_iter()
    .map(String::from)
    .collect();

    let mut rows = Vec::new();
    for c in &curves {
        rows.push(vec![
            cfg.scenario.label().to_string(),
            cfg.master_seed.to_string(),
            c.trial.to_string(),
            c.stream.to_string(),
            c.scheme.to_string(),
            c.sketch_size.to_string(),
            t.to_string(),
            "sample".to_string(),
            fmt_f(c.errors[t - 1]),
            fmt_f(c.sumrate_gaps[t - 1]),
        ]);
    }
    for ((scheme, l), members) in group_by_point(&curves) {
        let errs: Vec<f64> = members.iter().map(|c| c.errors[t - 1]).collect();
        let gaps: Vec<f64> = members.iter().map(|c| c.sumrate_gaps[t - 1]).collect();
        for (stat, err, gap) in [
            ("mean", mean(&errs), mean(&gaps)),
            ("median", median(&errs), median(&gaps)),
        ] {
            rows.push(vec![
                cfg.scenario.label().to_string(),
                cfg.master_seed.to_string(),
                String::new(),
                String::new(),
                scheme.to_string(),
                l.to_string(),
                t.to_string(),
                stat.to_string(),
                fmt_f(err),
                fmt_f(gap),
            ]);
        }
    }
    Ok(CsvDocument { header, rows })
}

pub fn run_convergence(cfg: &ExperimentConfig) -> Result<CsvDocument> {
    let curves = collect_convergence(cfg)?;
    let t = cfg.iterations;
    let header = vec![
        "scenario",
        "master_seed",
        "trial",
        "stream",
        "scheme",
        "sketch_size",
        "iteration",
        "stat",
        "solution_error",
        "sumrate_error",
        "epsilon",
        "thm1_bound",
        "corollary_bound",
    ]
    .into_iter()
    .map(String::from)
    .collect();

    let mut rows = Vec::new();
    for c in &curves {
        for j in 0..t {
            rows.push(vec![
                cfg.scenario.label().to_string(),
                cfg.master_seed.to_string(),
                c.trial.to_string(),
                c.stream.to_string(),
                c.scheme.to_string(),
                c.sketch_size.to_string(),
                (j + 1).to_string(),
                "sample".to_string(),
                fmt_f(c.errors[j]),
                fmt_f(c.sumrate_gaps[j]),
                fmt_f(c.epsilon),
                fmt_f(c.envelope_rel[j]),
                fmt_f(c.sumrate_envelope[j]),
            ]);
        }
    }
    for ((scheme, l), members) in group_by_point(&curves) {
        for j in 0..t {
            let errs: Vec<f64> = members.iter().map(|c| c.errors[j]).collect();
            let gaps: Vec<f64> = members.iter().map(|c| c.sumrate_gaps[j]).collect();
            let eps: Vec<f64> = members.iter().map(|c| c.epsilon).collect();
            let env: Vec<f64> = members.iter().map(|c| c.envelope_rel[j]).collect();
            let renv: Vec<f64> = members.iter().map(|c| c.sumrate_envelope[j]).collect();
            for (stat, agg) in [("mean", mean as fn(&[f64]) -> f64), ("median", median)] {
                rows.push(vec![
                    cfg.scenario.label().to_string(),
                    cfg.master_seed.to_string(),
                    String::new(),
                    String::new(),
                    scheme.to_string(),
                    l.to_string(),
                    (j + 1).to_string(),
                    stat.to_string(),
                    fmt_f(agg(&errs)),
                    fmt_f(agg(&gaps)),
                    fmt_f(agg(&eps)),
                    fmt_f(agg(&env)),
                    fmt_f(agg(&renv)),
                ]);
            }
        }
    }
    Ok(CsvDocument { header, rows })
}

/// One `(trial, SNR, scheme, L)` measurement of power-normalized rates.
#[derive(Clone, Debug)]
pub struct SnrSample {
    pub trial: usize,
    pub stream: u64,
    pub snr_db: f64,
    pub scheme: &'static str,
    pub sketch_size: usize,
    pub exact_rate_per_user: f64,
    pub sketched_rate_per_user: f64,
}

pub fn collect_snr(cfg: &ExperimentConfig) -> Result<Vec<SnrSample>> {
    let picks = scheme_plan(cfg);
    let sizes = size_plan(cfg);
    let t = cfg.iterations;
    let sigma2 = cfg.channel.noise_power;
    let k = cfg.channel.k;
    let two_m = 2 * cfg.channel.m;

    let mut out = Vec::new();
    for trial in 0..cfg.trials {
        let chan_stream = stream_id(trial, 0);
        let mut run = || -> Result<()> {
            let mut rng = SeedStream::substream(cfg.master_seed, chan_stream);
            let ch = generate_channel(&cfg.channel, &mut rng)?;
            // The channel is held fixed across the SNR grid; only the power
            // (and with it the ridge) moves.
            let mut profile: Option<SpectralProfile> = None;
            let mut lane = 1usize;
            for &snr_db in &cfg.snr_grid_db {
                let p = sigma2 * 10f64.powf(snr_db / 10.0);
                let gamma = p / k as f64;
                let lambda = sigma2 / gamma;
                let wstar = solve_exact_complex(&ch.h, gamma, sigma2, 1.0)?;
                let wn = power_normalize(&wstar.w, p)?;
                let exact_rate = sum_rate(&ch.h, &wn, sigma2)?.sum_nats / k as f64;
                let emb = embed(&ch.h, lambda, 1.0)?;
                if profile.is_none() {
                    profile = Some(SpectralProfile::compute(&emb.q)?);
                }
                let profile = profile.as_ref().expect("profile was just computed");

                for pick in &picks {
                    for &l in &sizes {
                        let mut srng =
                            SeedStream::substream(cfg.master_seed, stream_id(trial, lane));
                        lane += 1;
                        let s = build_sketch(
                            pick,
                            l,
                            two_m,
                            profile,
                            lambda,
                            cfg.leverage_denominator_2m,
                            &mut srng,
                        )?;
                        let opts = IterateOptions::default();
                        let trace = iterate(&emb, &s, t, None, &opts)?;
                        let w_hat = lift(&trace.solution)?;
                        let wn_hat = power_normalize(&w_hat, p)?;
                        let sketched_rate = sum_rate(&ch.h, &wn_hat, sigma2)?.sum_nats / k as f64;
                        out.push(SnrSample {
                            trial,
                            stream: chan_stream,
                            snr_db,
                            scheme: pick.label,
                            sketch_size: s.l(),
                            exact_rate_per_user: exact_rate,
                            sketched_rate_per_user: sketched_rate,
                        });
                    }
                }
            }
            Ok(())
        };
        run().with_context(|| {
            format!(
                "trial {trial} failed (master_seed {}, stream {chan_stream})",
                cfg.master_seed
            )
        })?;
    }
    Ok(out)
}

pub fn run_snr_sweep(cfg: &ExperimentConfig) -> Result<CsvDocument> {
    let samples = collect_snr(cfg)?;
    let header = vec![
        "scenario",
        "master_seed",
        "trial",
        "stream",
        "snr_convention",
        "snr_db",
        "scheme",
        "sketch_size",
        "iterations",
        "stat",
        "exact_rate_per_user",
        "sketched_rate_per_user",
        "rate_gap",
    ]
    .into_iter()
    .map(String::from)
    .collect();

    let mut rows = Vec::new();
    for s in &samples {
        rows.push(vec![
            cfg.scenario.label().to_string(),
            cfg.master_seed.to_string(),
            s.trial.to_string(),
            s.stream.to_string(),
            "p_over_sigma2".to_string(),
            fmt_f(s.snr_db),
            s.scheme.to_string(),
            s.sketch_size.to_string(),
            cfg.iterations.to_string(),
            "sample".to_string(),
            fmt_f(s.exact_rate_per_user),
            fmt_f(s.sketched_rate_per_user),
            fmt_f(s.exact_rate_per_user - s.sketched_rate_per_user),
        ]);
    }

    // Sweep points in emission order: (snr, scheme, L).
    let mut points: Vec<(u64, &'static str, usize)> = Vec::new();
    for s in &samples {
        let key = (s.snr_db.to_bits(), s.scheme, s.sketch_size);
        if !points.contains(&key) {
            points.push(key);
        }
    }
    for (snr_bits, scheme, l) in points {
        let members: Vec<&SnrSample> = samples
            .iter()
            .filter(|s| (s.snr_db.to_bits(), s.scheme, s.sketch_size) == (snr_bits, scheme, l))
            .collect();
        let exact: Vec<f64> = members.iter().map(|s| s.exact_rate_per_user).collect();
        let sketched: Vec<f64> = members.iter().map(|s| s.sketched_rate_per_user).collect();
        let gap: Vec<f64> = members
            .iter()
            .map(|s| s.exact_rate_per_user - s.sketched_rate_per_user)
            .collect();
        for (stat, agg) in [("mean", mean as fn(&[f64]) -> f64), ("median", median)] {
            rows.push(vec![
                cfg.scenario.label().to_string(),
                cfg.master_seed.to_string(),
                String::new(),
                String::new(),
                "p_over_sigma2".to_string(),
                fmt_f(f64::from_bits(snr_bits)),
                scheme.to_string(),
                l.to_string(),
                cfg.iterations.to_string(),
                stat.to_string(),
                fmt_f(agg(&exact)),
                fmt_f(agg(&sketched)),
                fmt_f(agg(&gap)),
            ]);
        }
    }
    Ok(CsvDocument { header, rows })
}

/// One timed repetition at a given antenna count.
#[derive(Clone, Debug)]
pub struct BenchSample {
    pub rep: usize,
    pub m: usize,
    pub sketch_size: usize,
    pub exact_seconds: f64,
    pub factorize_seconds: f64,
    pub q_product_seconds: f64,
    pub small_space_seconds: f64,
    pub iterate_total_seconds: f64,
}

/// Times the exact solve and the sketched iteration over the antenna grid.
///
/// Per `(M, L)` pair the channel and sketch are fixed (uniform sampling, so
/// no factorization is needed to set up) and two untimed warmup runs
/// precede the `trials` timed repetitions.
pub fn collect_bench(cfg: &ExperimentConfig) -> Result<Vec<BenchSample>> {
    let grid = cfg.effective_m_grid();
    let mut out = Vec::new();
    for (mi, &m) in grid.iter().enumerate() {
        let mut chan_cfg = cfg.channel.clone();
        chan_cfg.m = m;
        let lambda = chan_cfg.ridge_lambda()?;
        let mut rng = SeedStream::substream(cfg.master_seed, stream_id(mi, 0));
        let ch = generate_channel(&chan_cfg, &mut rng)?;
        let emb = embed(&ch.h, lambda, 1.0)?;
        for (li, &l) in cfg.sketch_sizes.iter().enumerate() {
            let mut srng = SeedStream::substream(cfg.master_seed, stream_id(mi, 1 + li));
            let s = draw_sketch(&uniform_probs(2 * m)?, l, &mut srng)?;
            let opts = IterateOptions::default();
            for _ in 0..2 {
                let _ = solve_exact_real(&emb)?;
                let _ = iterate(&emb, &s, cfg.iterations, None, &opts)?;
            }
            for rep in 0..cfg.trials {
                let t0 = Instant::now();
                let _ = solve_exact_real(&emb)?;
                let exact_seconds = t0.elapsed().as_secs_f64();
                let trace = iterate(&emb, &s, cfg.iterations, None, &opts)?;
                out.push(BenchSample {
                    rep,
                    m,
                    sketch_size: l,
                    exact_seconds,
                    factorize_seconds: trace.timings.setup_seconds,
                    q_product_seconds: trace.timings.q_product_seconds,
                    small_space_seconds: trace.timings.small_space_seconds,
                    iterate_total_seconds: trace.timings.total_seconds,
                });
            }
        }
    }
    Ok(out)
}

pub fn run_bench(cfg: &ExperimentConfig) -> Result<CsvDocument> {
    let samples = collect_bench(cfg)?;
    let header = vec![
        "scenario",
        "master_seed",
        "rep",
        "m",
        "sketch_size",
        "iterations",
        "stat",
        "exact_solve_seconds",
        "factorize_seconds",
        "q_product_seconds",
        "small_space_seconds",
        "iterate_total_seconds",
    ]
    .into_iter()
    .map(String::from)
    .collect();

    let mut rows = Vec::new();
    for s in &samples {
        rows.push(vec![
            cfg.scenario.label().to_string(),
            cfg.master_seed.to_string(),
            s.rep.to_string(),
            s.m.to_string(),
            s.sketch_size.to_string(),
            cfg.iterations.to_string(),
            "sample".to_string(),
            fmt_f(s.exact_seconds),
            fmt_f(s.factorize_seconds),
            fmt_f(s.q_product_seconds),
            fmt_f(s.small_space_seconds),
            fmt_f(s.iterate_total_seconds),
        ]);
    }

    let grid = cfg.effective_m_grid();
    let mut medians: Vec<((usize, usize), [f64; 5])> = Vec::new();
    for &m in &grid {
        for &l in &cfg.sketch_sizes {
            let members: Vec<&BenchSample> = samples
                .iter()
                .filter(|s| s.m == m && s.sketch_size == l)
                .collect();
            let cols: [Vec<f64>; 5] = [
                members.iter().map(|s| s.exact_seconds).collect(),
                members.iter().map(|s| s.factorize_seconds).collect(),
                members.iter().map(|s| s.q_product_seconds).collect(),
                members.iter().map(|s| s.small_space_seconds).collect(),
                members.iter().map(|s| s.iterate_total_seconds).collect(),
            ];
            for (stat, agg) in [("mean", mean as fn(&[f64]) -> f64), ("median", median)] {
                let vals: Vec<f64> = cols.iter().map(|c| agg(c)).collect();
                if stat == "median" {
                    medians.push(((m, l), [vals[0], vals[1], vals[2], vals[3], vals[4]]));
                }
                rows.push(vec![
                    cfg.scenario.label().to_string(),
                    cfg.master_seed.to_string(),
                    String::new(),
                    m.to_string(),
                    l.to_string(),
                    cfg.iterations.to_string(),
                    stat.to_string(),
                    fmt_f(vals[0]),
                    fmt_f(vals[1]),
                    fmt_f(vals[2]),
                    fmt_f(vals[3]),
                    fmt_f(vals[4]),
                ]);
            }
        }
    }

    // Median-over-median ratios between consecutive antenna counts.
    for window in grid.windows(2) {
        let (prev_m, cur_m) = (window[0], window[1]);
        for &l in &cfg.sketch_sizes {
            let prev = medians.iter().find(|(k, _)| *k == (prev_m, l));
            let cur = medians.iter().find(|(k, _)| *k == (cur_m, l));
            if let (Some((_, p)), Some((_, c))) = (prev, cur) {
                rows.push(vec![
                    cfg.scenario.label().to_string(),
                    cfg.master_seed.to_string(),
                    String::new(),
                    cur_m.to_string(),
                    l.to_string(),
                    cfg.iterations.to_string(),
                    "ratio_vs_prev_m".to_string(),
                    fmt_f(c[0] / p[0]),
                    fmt_f(c[1] / p[1]),
                    fmt_f(c[2] / p[2]),
                    fmt_f(c[3] / p[3]),
                    fmt_f(c[4] / p[4]),
                ]);
            }
        }
    }
    Ok(CsvDocument { header, rows })
}

/// Runs whichever scenario the config names.
pub fn execute(cfg: &ExperimentConfig) -> Result<CsvDocument> {
    match cfg.scenario {
        Scenario::SamplingCompare => run_sampling_compare(cfg),
        Scenario::SnrSweep => run_snr_sweep(cfg),
        Scenario::Convergence | Scenario::SumrateConvergence => run_convergence(cfg),
        Scenario::Bench => run_bench(cfg),
    }
}
