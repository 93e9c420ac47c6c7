//! Domain types and the deterministic physics of the IRS-aided MISO downlink:
//! combined channel composition, receive SNR, the MRT beamformer, and the
//! transmit power required to meet an SNR target.
//!
//! Convention: all channels are stored in column (non-conjugated) form. The
//! row vectors `h_d^H`, `h_r^H` of the signal model are formed by conjugation
//! inside the operations, never at call sites.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Phase-shifter resolution: ideal continuous phases or `b`-bit discrete
/// levels (`2^b` equally spaced angles in `[0, 2pi)`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseResolution {
    Continuous,
    Bits(u32),
}

impl PhaseResolution {
    pub fn levels(self) -> Option<u64> {
        match self {
            PhaseResolution::Continuous => None,
            PhaseResolution::Bits(b) => Some(1u64 << b),
        }
    }

    pub fn label(self) -> String {
        match self {
            PhaseResolution::Continuous => "cont".to_string(),
            PhaseResolution::Bits(b) => b.to_string(),
        }
    }
}

/// One draw of the three channels: AP-user (`h_d`, length `M`), IRS-user
/// (`h_r`, length `N`), and AP-IRS (`g`, `N x M`). Linear amplitude units.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    h_d: DVector<Complex64>,
    h_r: DVector<Complex64>,
    g: DMatrix<Complex64>,
}

impl ChannelRealization {
    pub fn new(
        h_d: DVector<Complex64>,
        h_r: DVector<Complex64>,
        g: DMatrix<Complex64>,
    ) -> Result<Self> {
        if h_d.len() != g.ncols() || h_r.len() != g.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "h_d len {} vs G cols {}, h_r len {} vs G rows {}",
                h_d.len(),
                g.ncols(),
                h_r.len(),
                g.nrows()
            )));
        }
        let finite = |z: &Complex64| z.re.is_finite() && z.im.is_finite();
        if !(h_d.iter().all(finite) && h_r.iter().all(finite) && g.iter().all(finite)) {
            return Err(Error::InvalidInput("non-finite channel entry".into()));
        }
        Ok(Self { h_d, h_r, g })
    }

    /// Number of AP antennas `M`.
    pub fn num_antennas(&self) -> usize {
        self.h_d.len()
    }

    /// Number of IRS elements `N` (0 means no IRS).
    pub fn num_elements(&self) -> usize {
        self.h_r.len()
    }

    pub fn h_d(&self) -> &DVector<Complex64> {
        &self.h_d
    }

    pub fn h_r(&self) -> &DVector<Complex64> {
        &self.h_r
    }

    pub fn g(&self) -> &DMatrix<Complex64> {
        &self.g
    }
}

/// `N` reflection phases, either free angles or indices into the discrete set
/// `F = {0, dtheta, ..., dtheta*(K-1)}` with `dtheta = 2pi/2^b`.
#[derive(Debug, Clone, PartialEq)]
pub enum PhaseShiftVector {
    Continuous(Vec<f64>),
    Discrete { bits: u32, indices: Vec<u64> },
}

/// Reduce an angle to `[0, 2pi)`.
pub fn wrap_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    // rem_euclid can return TAU itself for tiny negative inputs
    if t >= TAU {
        0.0
    } else {
        t
    }
}

impl PhaseShiftVector {
    /// Continuous phases; angles are wrapped into `[0, 2pi)`.
    pub fn continuous(angles: impl IntoIterator<Item = f64>) -> Result<Self> {
        let values: Vec<f64> = angles.into_iter().map(wrap_angle).collect();
        if values.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidInput("non-finite phase angle".into()));
        }
        Ok(PhaseShiftVector::Continuous(values))
    }

    pub fn discrete(bits: u32, indices: Vec<u64>) -> Result<Self> {
        if bits < 1 {
            return Err(Error::InvalidInput("phase resolution requires b >= 1".into()));
        }
        let levels = 1u64 << bits;
        if let Some(bad) = indices.iter().find(|&&k| k >= levels) {
            return Err(Error::InvalidInput(format!(
                "phase index {bad} out of range for {levels} levels"
            )));
        }
        Ok(PhaseShiftVector::Discrete { bits, indices })
    }

    /// All-zero phases of the given length.
    pub fn zeros(resolution: PhaseResolution, n: usize) -> Self {
        match resolution {
            PhaseResolution::Continuous => PhaseShiftVector::Continuous(vec![0.0; n]),
            PhaseResolution::Bits(bits) => PhaseShiftVector::Discrete {
                bits,
                indices: vec![0; n],
            },
        }
    }

    pub fn len(&self) -> usize {
        match self {
            PhaseShiftVector::Continuous(v) => v.len(),
            PhaseShiftVector::Discrete { indices, .. } => indices.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn resolution(&self) -> PhaseResolution {
        match self {
            PhaseShiftVector::Continuous(_) => PhaseResolution::Continuous,
            PhaseShiftVector::Discrete { bits, .. } => PhaseResolution::Bits(*bits),
        }
    }

    /// The angle of element `n` in `[0, 2pi)`.
    pub fn angle(&self, n: usize) -> f64 {
        match self {
            PhaseShiftVector::Continuous(v) => v[n],
            PhaseShiftVector::Discrete { bits, indices } => {
                indices[n] as f64 * TAU / (1u64 << bits) as f64
            }
        }
    }

    pub fn angles(&self) -> Vec<f64> {
        (0..self.len()).map(|n| self.angle(n)).collect()
    }

    /// Unit phasors `e^{j theta_n}`; every entry has modulus 1 (beta = 1).
    pub fn phasors(&self) -> Vec<Complex64> {
        (0..self.len())
            .map(|n| Complex64::from_polar(1.0, self.angle(n)))
            .collect()
    }
}

/// AP transmit beamforming vector, length `M`, amplitude units sqrt(watts).
#[derive(Debug, Clone, PartialEq)]
pub struct Beamformer {
    w: DVector<Complex64>,
}

impl Beamformer {
    pub fn new(w: DVector<Complex64>) -> Result<Self> {
        if w.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput("non-finite beamformer entry".into()));
        }
        Ok(Self { w })
    }

    pub fn weights(&self) -> &DVector<Complex64> {
        &self.w
    }

    /// Transmit power `||w||^2` in watts.
    pub fn power(&self) -> f64 {
        self.w.norm_squared()
    }
}

/// SNR target (linear) and receiver noise power (watts).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    pub gamma: f64,
    pub sigma2: f64,
}

impl LinkBudget {
    pub fn new(gamma: f64, sigma2: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidInput(format!("gamma must be > 0, got {gamma}")));
        }
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::InvalidInput(format!("sigma2 must be > 0, got {sigma2}")));
        }
        Ok(Self { gamma, sigma2 })
    }
}

/// Column form `h` of the combined channel `h^H = h_r^H Theta G + h_d^H`,
/// with `Theta = diag(e^{j theta_1}, ..., e^{j theta_N})`.
///
/// Entry-wise: `h_m = sum_n h_{r,n} e^{-j theta_n} conj(G_{n,m}) + h_{d,m}`.
pub fn combined_channel(
    ch: &ChannelRealization,
    theta: &PhaseShiftVector,
) -> Result<DVector<Complex64>> {
    if theta.len() != ch.num_elements() {
        return Err(Error::DimensionMismatch(format!(
            "phase vector len {} vs N = {}",
            theta.len(),
            ch.num_elements()
        )));
    }
    let mut h = ch.h_d.clone();
    for n in 0..ch.num_elements() {
        let x = ch.h_r[n] * Complex64::from_polar(1.0, -theta.angle(n));
        for m in 0..ch.num_antennas() {
            h[m] += x * ch.g[(n, m)].conj();
        }
    }
    Ok(h)
}

/// User receive SNR `|(h_r^H Theta G + h_d^H) w|^2 / sigma2`.
pub fn receive_snr(
    ch: &ChannelRealization,
    theta: &PhaseShiftVector,
    w: &Beamformer,
    sigma2: f64,
) -> Result<f64> {
    if !(sigma2 > 0.0) {
        return Err(Error::InvalidInput(format!("sigma2 must be > 0, got {sigma2}")));
    }
    if w.weights().len() != ch.num_antennas() {
        return Err(Error::DimensionMismatch(format!(
            "beamformer len {} vs M = {}",
            w.weights().len(),
            ch.num_antennas()
        )));
    }
    let h = combined_channel(ch, theta)?;
    // h^H w with h in column form
    Ok(h.dotc(w.weights()).norm_sqr() / sigma2)
}

/// MRT beamformer `w = sqrt(p) h / ||h||` for a combined channel `h`.
pub fn mrt_beamformer(combined: &DVector<Complex64>, power: f64) -> Result<Beamformer> {
    if !(power >= 0.0 && power.is_finite()) {
        return Err(Error::InvalidInput(format!("power must be >= 0, got {power}")));
    }
    let norm = combined.norm();
    if norm == 0.0 {
        return Err(Error::DegenerateChannel);
    }
    Beamformer::new(combined * Complex64::new(power.sqrt() / norm, 0.0))
}

/// Minimum transmit power `p* = gamma sigma2 / ||h||^2` meeting the SNR
/// target with MRT.
pub fn required_power(combined: &DVector<Complex64>, budget: &LinkBudget) -> Result<f64> {
    let gain = combined.norm_squared();
    if gain == 0.0 {
        return Err(Error::DegenerateChannel);
    }
    Ok(budget.gamma * budget.sigma2 / gain)
}
