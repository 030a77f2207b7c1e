//! Randomized-sketching solvers for regularized zero-forcing beamforming.
//!
//! The library covers one pipeline end to end:
//!
//! * [`channel`] draws synthetic multi-user MIMO channels with pathloss,
//!   shadowing, and Rayleigh fading from a reproducible seeded stream.
//! * [`realify`] rewrites the complex ridge problem behind the beamformer as
//!   a real least-squares problem on a `2K × 2M` embedding.
//! * [`rzf`] solves that problem exactly (complex and real, dual and primal
//!   forms) for use as oracles and baselines.
//! * [`sketch`] draws one-nonzero-per-column sampling sketches — uniform,
//!   leverage, or ridge-leverage — and certifies their quality.
//! * [`solver`] runs the sketched preconditioned iteration whose cost per
//!   step is two products with the embedded channel plus `O(K³)` work.
//! * [`metrics`] evaluates SINRs, sum rates, solution errors, and the
//!   predicted per-iteration error and rate-gap envelopes.
//!
//! Everything random flows through [`rng::SeedStream`], a counter-keyed
//! generator with documented bit-level behavior, so every experiment is
//! reproducible from a single seed.
//!
//! ```
//! use sketchbeam::channel::{generate_channel_seeded, ChannelConfig};
//! use sketchbeam::realify::{embed, lift};
//! use sketchbeam::rng::SeedStream;
//! use sketchbeam::rzf::solve_exact_real;
//! use sketchbeam::sketch::{draw_sketch, leverage_probs, SpectralProfile};
//! use sketchbeam::solver::{iterate, IterateOptions};
//! use sketchbeam::metrics::relative_solution_error;
//!
//! let cfg = ChannelConfig { m: 64, k: 4, seed: 7, ..ChannelConfig::default() };
//! let ch = generate_channel_seeded(&cfg).unwrap();
//! let emb = embed(&ch.h, cfg.ridge_lambda().unwrap(), 1.0).unwrap();
//!
//! let exact = solve_exact_real(&emb).unwrap();
//! let profile = SpectralProfile::compute(&emb.q).unwrap();
//! let probs = leverage_probs(&profile).unwrap();
//! let mut rng = SeedStream::substream(cfg.seed, 1);
//! let s = draw_sketch(&probs, 96, &mut rng).unwrap();
//!
//! let trace = iterate(&emb, &s, 10, Some(&exact), &IterateOptions::default()).unwrap();
//! let w_hat = lift(&trace.solution).unwrap();
//! let w_star = lift(&exact).unwrap();
//! let err = relative_solution_error(&w_hat, &w_star).unwrap();
//! assert!(err < 1.0);
//! assert!(trace.iterations.len() == 10);
//! ```

pub mod channel;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod realify;
pub mod rng;
pub mod rzf;
pub mod sketch;
pub mod solver;

pub use error::{Error, Result};
