//! Stochastic scenario generation: the two-line deployment geometry, distance
//! path loss, and i.i.d. Rayleigh-fading channel draws with reproducible
//! per-trial seeding.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ChannelRealization, LinkBudget, PhaseResolution};
use crate::units::{db_to_linear, dbm_to_watts};

/// Full description of a simulated scenario. Distances in meters, SNR target
/// in dB, noise power in dBm; conversion to linear units happens in
/// [`ScenarioConfig::link_budget`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    /// AP antennas.
    pub m: usize,
    /// IRS elements; 0 means no IRS.
    pub n: usize,
    /// Phase-shifter bits; `None` means continuous phases.
    pub bits: Option<u32>,
    pub gamma_db: f64,
    pub sigma2_dbm: f64,
    /// AP-IRS horizontal distance.
    pub d0: f64,
    /// Vertical offset of the user line.
    pub dv: f64,
    /// AP-user horizontal distance.
    pub d: f64,
    pub alpha_au: f64,
    pub alpha_ai: f64,
    pub alpha_iu: f64,
    /// Attenuation at the 1 m reference distance, dB.
    pub ref_loss_db: f64,
    pub seed: u64,
    pub trials: u64,
    /// Force h_d = 0 and M = 1 (the asymptotic-analysis setting).
    #[serde(default)]
    pub suppress_direct_link: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        // N, d, seed and trials are artifact defaults; the rest follow the
        // reference simulation setup.
        Self {
            m: 5,
            n: 80,
            bits: Some(1),
            gamma_db: 20.0,
            sigma2_dbm: -80.0,
            d0: 50.0,
            dv: 2.0,
            d: 50.0,
            alpha_au: 3.4,
            alpha_ai: 2.2,
            alpha_iu: 2.8,
            ref_loss_db: 30.0,
            seed: 1,
            trials: 200,
            suppress_direct_link: false,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.effective_m() == 0 {
            return Err(Error::InvalidInput("M must be >= 1".into()));
        }
        if self.trials < 1 {
            return Err(Error::InvalidInput("trials must be >= 1".into()));
        }
        if let Some(b) = self.bits {
            if b < 1 {
                return Err(Error::InvalidInput("bits must be >= 1".into()));
            }
        }
        for (name, v) in [
            ("d0", self.d0),
            ("dv", self.dv),
            ("alpha_au", self.alpha_au),
            ("alpha_ai", self.alpha_ai),
            ("alpha_iu", self.alpha_iu),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!("{name} must be > 0, got {v}")));
            }
        }
        if !(self.d >= 0.0 && self.d.is_finite()) {
            return Err(Error::InvalidInput(format!("d must be >= 0, got {}", self.d)));
        }
        let (d1, d2) = self.derived_distances();
        if !(d1 > 0.0 && d2 > 0.0) {
            return Err(Error::InvalidInput("derived distances must be > 0".into()));
        }
        self.link_budget().map(|_| ())
    }

    /// AP antenna count after the direct-link-suppression flag.
    pub fn effective_m(&self) -> usize {
        if self.suppress_direct_link {
            1
        } else {
            self.m
        }
    }

    pub fn resolution(&self) -> PhaseResolution {
        match self.bits {
            Some(b) => PhaseResolution::Bits(b),
            None => PhaseResolution::Continuous,
        }
    }

    pub fn link_budget(&self) -> Result<LinkBudget> {
        LinkBudget::new(db_to_linear(self.gamma_db), dbm_to_watts(self.sigma2_dbm))
    }

    /// `(d1, d2)`: AP-user and IRS-user link distances on the two-line layout.
    pub fn derived_distances(&self) -> (f64, f64) {
        let d1 = self.d.hypot(self.dv);
        let d2 = (self.d0 - self.d).hypot(self.dv);
        (d1, d2)
    }

    /// Per-entry channel variances `(ap_user, irs_user, ap_irs)`.
    pub fn link_gains(&self) -> (f64, f64, f64) {
        let (d1, d2) = self.derived_distances();
        (
            path_gain(d1, self.alpha_au, self.ref_loss_db),
            path_gain(d2, self.alpha_iu, self.ref_loss_db),
            path_gain(self.d0, self.alpha_ai, self.ref_loss_db),
        )
    }
}

/// Linear power gain `10^(-ref_loss_db/10) * d^(-alpha)`; distances below the
/// 1 m reference clamp to 1 m.
pub fn path_gain(distance_m: f64, alpha: f64, ref_loss_db: f64) -> f64 {
    let d = distance_m.max(1.0);
    db_to_linear(-ref_loss_db) * d.powf(-alpha)
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D049BB133111EB);
    x ^ (x >> 31)
}

/// Independent RNG substream for one Monte Carlo trial. Streams depend only
/// on `(seed, trial)`, so trials can run in any order or in parallel.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mixed = splitmix64(splitmix64(seed) ^ splitmix64(trial.wrapping_add(1)));
    ChaCha8Rng::seed_from_u64(mixed)
}

/// Zero-mean circularly-symmetric complex Gaussian with the given variance.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let sd = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * sd, im * sd)
}

/// One Rayleigh-fading draw for the scenario; per-entry variance equals the
/// corresponding link's path gain. Deterministic given `(cfg.seed, trial)`.
pub fn sample_channels(cfg: &ScenarioConfig, trial: u64) -> ChannelRealization {
    let mut rng = trial_rng(cfg.seed, trial);
    sample_channels_with(cfg, &mut rng)
}

/// As [`sample_channels`] but drawing from a caller-provided stream.
pub fn sample_channels_with<R: Rng + ?Sized>(
    cfg: &ScenarioConfig,
    rng: &mut R,
) -> ChannelRealization {
    let m = cfg.effective_m();
    let (g_au, g_iu, g_ai) = cfg.link_gains();
    let h_d = if cfg.suppress_direct_link {
        DVector::zeros(m)
    } else {
        DVector::from_fn(m, |_, _| complex_gaussian(rng, g_au))
    };
    let h_r = DVector::from_fn(cfg.n, |_, _| complex_gaussian(rng, g_iu));
    let g = DMatrix::from_fn(cfg.n, m, |_, _| complex_gaussian(rng, g_ai));
    ChannelRealization::new(h_d, h_r, g).expect("dimensions consistent by construction")
}

/// Unit-variance draws `(h_r, g)` for the large-N scaling experiments (M = 1).
pub fn sample_unit_variance_channels<R: Rng + ?Sized>(
    n: usize,
    rng: &mut R,
) -> (DVector<Complex64>, DVector<Complex64>) {
    let h_r = DVector::from_fn(n, |_, _| complex_gaussian(rng, 1.0));
    let g = DVector::from_fn(n, |_, _| complex_gaussian(rng, 1.0));
    (h_r, g)
}
