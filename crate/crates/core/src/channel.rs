//! Synthetic urban-macro downlink channels.
//!
//! Users are dropped uniformly in a square cell around the base station and
//! each link gets a distance-based pathloss (decibel-linear in `log₁₀` of the
//! kilometre distance), i.i.d. lognormal shadowing, a fixed antenna gain, and
//! i.i.d. unit-variance complex Gaussian small-scale fading:
//!
//! ```text
//!     h_k = 10^(−L(d_k)/20) · sqrt(φ · s_k) · f_k,      f_k ~ CN(0, I_M),
//!     L(d) = ref_db + slope_db · log₁₀(d / 1 km).
//! ```
//!
//! Everything is driven by an explicit [`SeedStream`](crate::rng::SeedStream)
//! with a documented draw order (all positions first, then per user one
//! shadowing normal followed by the `M` fading entries), so a `(seed, config)`
//! pair pins the channel bit for bit.

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SeedStream;
use crate::rzf::{regularizer, ridge_lambda};

/// Users are kept at least this far (metres) from the base station.
pub const MIN_USER_DISTANCE: f64 = 1.0;

/// Redraw budget per user before falling back to radial projection.
pub const MAX_PLACEMENT_REDRAWS: usize = 1000;

/// Scenario parameters for one cell.
///
/// Omitted fields deserialize to the desk-scale [`Default`] values.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelConfig {
    /// Base-station antennas `M`.
    pub m: usize,
    /// Single-antenna users `K`.
    pub k: usize,
    /// Users land uniformly in `[−w, w]²` (metres).
    pub region_half_width: f64,
    /// Pathloss at 1 km, in dB.
    pub pathloss_ref_db: f64,
    /// Pathloss slope in dB per decade of distance.
    pub pathloss_exponent_db_per_decade: f64,
    /// Lognormal shadowing standard deviation, in dB.
    pub shadowing_std_db: f64,
    /// Base-station antenna gain, in dB.
    pub antenna_gain_db: f64,
    /// Receiver noise power `σ²`, in watts.
    pub noise_power: f64,
    /// Total transmit power `P`, in watts.
    pub transmit_power: f64,
    /// Master seed for the channel draw.
    pub seed: u64,
}

impl Default for ChannelConfig {
    /// A desk-scale cell: `M = 256`, `K = 16`, 5 km square, and powers chosen
    /// so the sketched iteration contracts for moderate sketch sizes.
    fn default() -> Self {
        ChannelConfig {
            m: 256,
            k: 16,
            region_half_width: 2500.0,
            pathloss_ref_db: 128.1,
            pathloss_exponent_db_per_decade: 37.6,
            shadowing_std_db: 8.0,
            antenna_gain_db: 5.0,
            noise_power: 3.98e-14,
            transmit_power: 1.26e-3,
            seed: 0,
        }
    }
}

impl ChannelConfig {
    /// Full-scale shape (`M = 5000`, `K = 50`, 10 km square); same physical
    /// constants as [`Default`].
    pub fn full_scale() -> Self {
        ChannelConfig {
            m: 5000,
            k: 50,
            region_half_width: 5000.0,
            ..ChannelConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.k == 0 {
            return Err(Error::Config("channel: m and k must be positive".into()));
        }
        if !(self.region_half_width.is_finite() && self.region_half_width > 0.0) {
            return Err(Error::Config(format!(
                "channel: region_half_width must be finite and positive, got {}",
                self.region_half_width
            )));
        }
        for (name, v) in [
            ("pathloss_ref_db", self.pathloss_ref_db),
            ("pathloss_exponent_db_per_decade", self.pathloss_exponent_db_per_decade),
            ("antenna_gain_db", self.antenna_gain_db),
        ] {
            if !v.is_finite() {
                return Err(Error::Config(format!("channel: {name} must be finite, got {v}")));
            }
        }
        if !(self.shadowing_std_db.is_finite() && self.shadowing_std_db >= 0.0) {
            return Err(Error::Config(format!(
                "channel: shadowing_std_db must be finite and non-negative, got {}",
                self.shadowing_std_db
            )));
        }
        if !(self.noise_power.is_finite() && self.noise_power > 0.0) {
            return Err(Error::Config(format!(
                "channel: noise_power must be finite and positive, got {}",
                self.noise_power
            )));
        }
        if !(self.transmit_power.is_finite() && self.transmit_power > 0.0) {
            return Err(Error::Config(format!(
                "channel: transmit_power must be finite and positive, got {}",
                self.transmit_power
            )));
        }
        Ok(())
    }

    /// Per-user power allocation `γ = P/K`.
    pub fn gamma(&self) -> Result<f64> {
        regularizer(self.transmit_power, self.k)
    }

    /// Ridge parameter `λ = σ²/γ` of the equivalent regression problem.
    pub fn ridge_lambda(&self) -> Result<f64> {
        ridge_lambda(self.noise_power, self.gamma()?)
    }

    /// Transmit SNR `10 log₁₀(P/σ²)` in dB.
    pub fn snr_db(&self) -> f64 {
        10.0 * (self.transmit_power / self.noise_power).log10()
    }
}

/// A drawn channel with its large-scale bookkeeping.
#[derive(Clone, Debug)]
pub struct ChannelMatrix {
    /// `K × M` channel; row `k` is user `k`'s (conjugated) channel vector.
    pub h: Array2<Complex64>,
    /// User positions in metres, base station at the origin.
    pub positions: Vec<[f64; 2]>,
    /// Per-user large-scale amplitude (pathloss × gain × shadowing).
    pub large_scale: Vec<f64>,
}

/// Drops `count` users uniformly in `[−w, w]²`, at least
/// [`MIN_USER_DISTANCE`] from the origin.
///
/// Draws that land inside the guard radius are redrawn up to
/// [`MAX_PLACEMENT_REDRAWS`] times; if the budget is exhausted (possible only
/// when the region is comparable to the guard) the last draw is pushed
/// radially out to the guard circle, so placement always terminates.
pub fn place_users(half_width: f64, count: usize, rng: &mut SeedStream) -> Result<Vec<[f64; 2]>> {
    if !(half_width.is_finite() && half_width > 0.0) {
        return Err(Error::Config(format!(
            "place_users: half_width must be finite and positive, got {half_width}"
        )));
    }
    let mut positions = Vec::with_capacity(count);
    for _ in 0..count {
        let mut p = [0.0f64; 2];
        let mut ok = false;
        for _ in 0..=MAX_PLACEMENT_REDRAWS {
            p = [rng.uniform(-half_width, half_width), rng.uniform(-half_width, half_width)];
            if p[0].hypot(p[1]) >= MIN_USER_DISTANCE {
                ok = true;
                break;
            }
        }
        if !ok {
            let r = p[0].hypot(p[1]);
            p = if r == 0.0 {
                [MIN_USER_DISTANCE, 0.0]
            } else {
                [p[0] * MIN_USER_DISTANCE / r, p[1] * MIN_USER_DISTANCE / r]
            };
        }
        positions.push(p);
    }
    Ok(positions)
}

/// Large-scale amplitude for one link: pathloss, antenna gain, and a given
/// shadowing realization, all combined in amplitude (not power) units.
pub fn large_scale_amplitude(cfg: &ChannelConfig, distance_m: f64, shadow_db: f64) -> f64 {
    let pathloss_db = cfg.pathloss_ref_db
        + cfg.pathloss_exponent_db_per_decade * (distance_m / 1000.0).log10();
    10f64.powf((-pathloss_db + cfg.antenna_gain_db + shadow_db) / 20.0)
}

/// Draws a channel from `rng`.
///
/// Draw order: first all user positions (via [`place_users`]), then per user
/// one shadowing normal followed by the `M` small-scale fading entries.
pub fn generate_channel(cfg: &ChannelConfig, rng: &mut SeedStream) -> Result<ChannelMatrix> {
    cfg.validate()?;
    let positions = place_users(cfg.region_half_width, cfg.k, rng)?;
    let mut h = Array2::<Complex64>::zeros((cfg.k, cfg.m));
    let mut large_scale = Vec::with_capacity(cfg.k);
    for (k, p) in positions.iter().enumerate() {
        let shadow_db = cfg.shadowing_std_db * rng.standard_normal();
        let amp = large_scale_amplitude(cfg, p[0].hypot(p[1]), shadow_db);
        large_scale.push(amp);
        for j in 0..cfg.m {
            h[[k, j]] = rng.complex_gaussian() * amp;
        }
    }
    if h.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite("generate_channel: non-finite channel entry".into()));
    }
    Ok(ChannelMatrix { h, positions, large_scale })
}

/// Draws the channel from a fresh stream keyed by `cfg.seed`.
pub fn generate_channel_seeded(cfg: &ChannelConfig) -> Result<ChannelMatrix> {
    let mut rng = SeedStream::from_seed(cfg.seed);
    generate_channel(cfg, &mut rng)
}

// ---------------------------------------------------------------------------
