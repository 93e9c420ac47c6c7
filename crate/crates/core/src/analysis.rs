//! Closed-form quantization-loss law and its Monte Carlo verification.
//!
//! In the single-antenna, no-direct-link regime with i.i.d. Rayleigh fading,
//! the average received power with `b`-bit phase shifts (unit transmit power)
//! is
//!
//! ```text
//! P_r(b) = N vh vg + N(N-1) (pi^2 vh vg / 16) * ((2^b/pi) sin(pi/2^b))^2
//! ```
//!
//! and the large-N power ratio to continuous phases is
//! `eta(b) = ((2^b/pi) sin(pi/2^b))^2`.

use std::f64::consts::PI;

use crate::chansim::{sample_unit_variance_channels, trial_rng};
use crate::error::{Error, Result};
use crate::model::{wrap_angle, PhaseResolution};
use crate::solver::discrete_update;
use crate::units::linear_to_db;

/// Mean of the quantization-error phasor, `(2^b/pi) sin(pi/2^b)`; 1 for
/// continuous phases.
pub fn quantization_phasor_mean(resolution: PhaseResolution) -> Result<f64> {
    match resolution {
        PhaseResolution::Continuous => Ok(1.0),
        PhaseResolution::Bits(b) if b >= 1 => {
            let k = (1u64 << b) as f64;
            Ok(k / PI * (PI / k).sin())
        }
        PhaseResolution::Bits(b) => Err(Error::InvalidInput(format!("bits must be >= 1, got {b}"))),
    }
}

/// Asymptotic received-power ratio `eta(b)` of `b`-bit to continuous phase
/// shifts, in `(0, 1]`.
pub fn eta(resolution: PhaseResolution) -> Result<f64> {
    let m = quantization_phasor_mean(resolution)?;
    Ok(m * m)
}

/// `eta(b)` in dB.
pub fn eta_db(resolution: PhaseResolution) -> Result<f64> {
    Ok(linear_to_db(eta(resolution)?))
}

/// Parameters of the large-N scaling experiments (single AP antenna, direct
/// link ignored).
#[derive(Debug, Clone, Copy)]
pub struct ScalingLawParams {
    pub resolution: PhaseResolution,
    /// IRS elements.
    pub n: usize,
    /// Per-entry variance of the IRS-user channel.
    pub rho_h2: f64,
    /// Per-entry variance of the AP-IRS channel.
    pub rho_g2: f64,
}

impl ScalingLawParams {
    pub fn unit(resolution: PhaseResolution, n: usize) -> Self {
        Self {
            resolution,
            n,
            rho_h2: 1.0,
            rho_g2: 1.0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::InvalidInput("N must be >= 1".into()));
        }
        if !(self.rho_h2 > 0.0 && self.rho_g2 > 0.0) {
            return Err(Error::InvalidInput("channel variances must be > 0".into()));
        }
        Ok(())
    }
}

/// Closed-form expected received power at unit transmit power.
pub fn pr_closed_form(p: &ScalingLawParams) -> Result<f64> {
    p.validate()?;
    let v = p.rho_h2 * p.rho_g2;
    let n = p.n as f64;
    Ok(n * v + n * (n - 1.0) * (PI * PI * v / 16.0) * eta(p.resolution)?)
}

/// Per-trial received power samples: draw the two channels, take the optimal
/// continuous phases, quantize to the configured resolution, and evaluate
/// `|h_r^H Theta g|^2`. Deterministic given `(seed, trial)`.
pub fn pr_monte_carlo_samples(p: &ScalingLawParams, trials: u64, seed: u64) -> Result<Vec<f64>> {
    p.validate()?;
    if trials < 1 {
        return Err(Error::InvalidInput("trials must be >= 1".into()));
    }
    let mut samples = Vec::with_capacity(trials as usize);
    for trial in 0..trials {
        let mut rng = trial_rng(seed, trial);
        let (mut h_r, mut g) = sample_unit_variance_channels(p.n, &mut rng);
        let sh = p.rho_h2.sqrt();
        let sg = p.rho_g2.sqrt();
        h_r.iter_mut().for_each(|z| *z *= sh);
        g.iter_mut().for_each(|z| *z *= sg);
        let mut acc = num_complex::Complex64::new(0.0, 0.0);
        for i in 0..p.n {
            // optimal continuous phase aligns the cascaded term to zero phase
            let theta_star = wrap_angle(h_r[i].arg() - g[i].arg());
            let theta = match p.resolution {
                PhaseResolution::Continuous => theta_star,
                PhaseResolution::Bits(b) => {
                    let k = discrete_update(theta_star, b);
                    k as f64 * std::f64::consts::TAU / (1u64 << b) as f64
                }
            };
            acc += h_r[i].conj() * num_complex::Complex64::from_polar(1.0, theta) * g[i];
        }
        samples.push(acc.norm_sqr());
    }
    Ok(samples)
}

/// Sample mean and standard error of the Monte Carlo received power.
pub fn pr_monte_carlo(p: &ScalingLawParams, trials: u64, seed: u64) -> Result<(f64, f64)> {
    let samples = pr_monte_carlo_samples(p, trials, seed)?;
    Ok(mean_and_se(&samples))
}

pub(crate) fn mean_and_se(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() < 2 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Least-squares slope of `y` against `x`.
pub fn least_squares_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InvalidInput("need at least two (x, y) pairs".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidInput("degenerate x values".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    Ok(sxy / sxx)
}

/// Log-log slope of Monte Carlo received power against `N` (unit variances).
/// A slope near 2 is the squared power gain.
pub fn power_gain_slope(
    resolution: PhaseResolution,
    n_list: &[usize],
    trials: u64,
    seed: u64,
) -> Result<f64> {
    let mut distinct = n_list.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::InvalidInput(
            "need at least two distinct N values".into(),
        ));
    }
    let mut xs = Vec::with_capacity(n_list.len());
    let mut ys = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let params = ScalingLawParams::unit(resolution, n);
        let (mean, _) = pr_monte_carlo(&params, trials, seed ^ n as u64)?;
        xs.push((n as f64).ln());
        ys.push(mean.ln());
    }
    least_squares_slope(&xs, &ys)
}
