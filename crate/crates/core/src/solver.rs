//! Optimization machinery for the power-minimization problem: the quadratic
//! workspace of the channel-gain objective, the per-element discrete update,
//! the alternating optimization (AO) loop, the continuous benchmark,
//! quantized initialization, and an exhaustive-search oracle.
//!
//! For unit phasors `v_n = e^{j theta_n}`, the combined channel gain is the
//! quadratic form
//!
//! ```text
//! ||h_r^H Theta G + h_d^H||^2
//!   = v^T A conj(v) + 2 Re{ v^T hd_hat } + ||h_d||^2
//! ```
//!
//! with `Phi = diag(h_r^H) G`, `A = Phi Phi^H`, `hd_hat = Phi h_d`. Holding
//! all phases but `theta_n` fixed, the objective is linear in `e^{j theta_n}`
//! and the per-element optimum is closed-form.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{
    mrt_beamformer, required_power, wrap_angle, Beamformer, ChannelRealization, LinkBudget,
    PhaseResolution, PhaseShiftVector,
};

/// Largest `b * N` accepted by [`exhaustive_search`] (2^24 candidates).
pub const EXHAUSTIVE_LIMIT: u32 = 24;

/// Continuous-mode convergence threshold: max per-element angle change, rad.
const CONTINUOUS_TOL: f64 = 1e-8;

/// Precomputed quadratic form of the channel-gain objective.
#[derive(Debug, Clone)]
pub struct SolverWorkspace {
    phi: DMatrix<Complex64>,
    a: DMatrix<Complex64>,
    hd_hat: DVector<Complex64>,
    hd: DVector<Complex64>,
    hd_norm2: f64,
}

impl SolverWorkspace {
    pub fn num_elements(&self) -> usize {
        self.phi.nrows()
    }

    pub fn num_antennas(&self) -> usize {
        self.phi.ncols()
    }

    pub fn phi(&self) -> &DMatrix<Complex64> {
        &self.phi
    }

    pub fn a(&self) -> &DMatrix<Complex64> {
        &self.a
    }

    pub fn hd_hat(&self) -> &DVector<Complex64> {
        &self.hd_hat
    }

    pub fn hd_norm2(&self) -> f64 {
        self.hd_norm2
    }

    /// Combined channel (column form) for the given unit phasors.
    pub fn combined(&self, phasors: &[Complex64]) -> DVector<Complex64> {
        let mut c = self.hd.clone();
        for n in 0..self.num_elements() {
            let vc = phasors[n].conj();
            for m in 0..self.num_antennas() {
                c[m] += self.phi[(n, m)].conj() * vc;
            }
        }
        c
    }

    /// Channel-gain objective via the quadratic form
    /// `v^T A conj(v) + 2 Re{v^T hd_hat} + ||h_d||^2`.
    pub fn objective_quadratic(&self, phasors: &[Complex64]) -> f64 {
        let n = self.num_elements();
        let mut quad = Complex64::new(0.0, 0.0);
        for i in 0..n {
            for k in 0..n {
                quad += phasors[i] * self.a[(i, k)] * phasors[k].conj();
            }
        }
        let mut lin = Complex64::new(0.0, 0.0);
        for i in 0..n {
            lin += phasors[i] * self.hd_hat[i];
        }
        quad.re + 2.0 * lin.re + self.hd_norm2
    }
}

/// Build the `(Phi, A, hd_hat)` workspace for one channel realization.
pub fn build_workspace(ch: &ChannelRealization) -> SolverWorkspace {
    let n = ch.num_elements();
    let m = ch.num_antennas();
    let mut phi = DMatrix::zeros(n, m);
    for i in 0..n {
        let hr_conj = ch.h_r()[i].conj();
        for k in 0..m {
            phi[(i, k)] = hr_conj * ch.g()[(i, k)];
        }
    }
    let a = &phi * phi.adjoint();
    let hd_hat = &phi * ch.h_d();
    SolverWorkspace {
        phi,
        a,
        hd_hat,
        hd: ch.h_d().clone(),
        hd_norm2: ch.h_d().norm_squared(),
    }
}

/// `zeta_n = sum_{k != n} A_{n,k} e^{-j theta_k} + hd_hat_n`, the coefficient
/// of the objective's linear dependence on `e^{j theta_n}`.
pub fn zeta(ws: &SolverWorkspace, theta: &PhaseShiftVector, n: usize) -> Complex64 {
    let mut z = ws.hd_hat[n];
    for k in 0..ws.num_elements() {
        if k != n {
            z += ws.a[(n, k)] * Complex64::from_polar(1.0, -theta.angle(k));
        }
    }
    z
}

/// The maximizing angle `phi_n` of `Re{e^{j theta} zeta_n}`, in `[0, 2pi)`;
/// `None` when `zeta_n = 0` and every angle is equally good.
pub fn preferred_angle(zeta_n: Complex64) -> Option<f64> {
    if zeta_n.norm_sqr() == 0.0 {
        None
    } else {
        // zeta_n = |zeta_n| e^{-j phi_n}
        Some(wrap_angle(-zeta_n.arg()))
    }
}

/// Nearest point of `F = {0, 2pi/K, ..., 2pi(K-1)/K}` to `phi_n` in circular
/// angular distance; exact midpoints break toward the smaller index.
pub fn discrete_update(phi_n: f64, bits: u32) -> u64 {
    let k = 1u64 << bits;
    let step = TAU / k as f64;
    let x = wrap_angle(phi_n) / step;
    let lo = x.floor();
    let frac = x - lo;
    let lo = lo as u64 % k;
    let hi = (lo + 1) % k;
    if frac > 0.5 {
        hi
    } else if frac < 0.5 {
        lo
    } else {
        lo.min(hi)
    }
}

/// Quantize continuous phases element-wise to the nearest discrete level.
pub fn quantize_phases(theta: &PhaseShiftVector, bits: u32) -> Result<PhaseShiftVector> {
    if bits < 1 {
        return Err(Error::InvalidInput("bits must be >= 1".into()));
    }
    let indices = theta
        .angles()
        .iter()
        .map(|&a| discrete_update(a, bits))
        .collect();
    PhaseShiftVector::discrete(bits, indices)
}

/// Solver knobs; defaults match the library-wide convention.
#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub max_sweeps: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { max_sweeps: 100 }
    }
}

/// Outcome of one solve: phases, MRT beamformer, required power, and the
/// (non-decreasing) objective trace of the AO updates.
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub theta: PhaseShiftVector,
    pub w: Beamformer,
    pub power_watts: f64,
    /// Combined channel gain `||h||^2`.
    pub objective: f64,
    /// Full AO sweeps executed.
    pub iterations: usize,
    pub converged: bool,
    pub objective_trace: Vec<f64>,
}

struct AoState {
    angles: Vec<f64>,
    indices: Option<Vec<u64>>,
    combined: DVector<Complex64>,
    a_diag: Vec<f64>,
    trace: Vec<f64>,
}

impl AoState {
    fn new(ws: &SolverWorkspace, theta: &PhaseShiftVector) -> Self {
        let angles = theta.angles();
        let indices = match theta {
            PhaseShiftVector::Discrete { indices, .. } => Some(indices.clone()),
            PhaseShiftVector::Continuous(_) => None,
        };
        let combined = ws.combined(&theta.phasors());
        let a_diag = (0..ws.num_elements())
            .map(|n| ws.phi.row(n).iter().map(|z| z.norm_sqr()).sum())
            .collect();
        let trace = vec![combined.norm_squared()];
        Self {
            angles,
            indices,
            combined,
            a_diag,
            trace,
        }
    }

    /// `zeta_n` from the maintained combined channel: O(M) instead of the
    /// O(N) definition, since `(Phi c)_n = zeta_n + A_{n,n} e^{-j theta_n}`.
    fn zeta(&self, ws: &SolverWorkspace, n: usize) -> Complex64 {
        let mut z = -self.a_diag[n] * Complex64::from_polar(1.0, -self.angles[n]);
        for m in 0..ws.num_antennas() {
            z += ws.phi[(n, m)] * self.combined[m];
        }
        z
    }

    fn set_angle(&mut self, ws: &SolverWorkspace, n: usize, new_angle: f64) {
        let diff = Complex64::from_polar(1.0, -new_angle) - Complex64::from_polar(1.0, -self.angles[n]);
        for m in 0..ws.num_antennas() {
            self.combined[m] += ws.phi[(n, m)].conj() * diff;
        }
        self.angles[n] = new_angle;
        self.trace.push(self.combined.norm_squared());
    }
}

fn finish(
    ws: &SolverWorkspace,
    theta: PhaseShiftVector,
    budget: &LinkBudget,
    iterations: usize,
    converged: bool,
    trace: Vec<f64>,
) -> Result<SolveResult> {
    // recompute from scratch so the reported values carry no incremental drift
    let combined = ws.combined(&theta.phasors());
    let objective = combined.norm_squared();
    let power_watts = required_power(&combined, budget)?;
    let w = mrt_beamformer(&combined, power_watts)?;
    Ok(SolveResult {
        theta,
        w,
        power_watts,
        objective,
        iterations,
        converged,
        objective_trace: trace,
    })
}

fn check_init(ws: &SolverWorkspace, theta: &PhaseShiftVector, options: &SolveOptions) -> Result<()> {
    if options.max_sweeps < 1 {
        return Err(Error::InvalidInput("max_sweeps must be >= 1".into()));
    }
    if theta.len() != ws.num_elements() {
        return Err(Error::DimensionMismatch(format!(
            "initial phases len {} vs N = {}",
            theta.len(),
            ws.num_elements()
        )));
    }
    Ok(())
}

/// Alternating optimization over discrete phases: elements are updated in
/// order `1..N` per sweep, each set to the best level given the others.
/// Stops at the first sweep that changes no index.
pub fn ao_discrete(
    ws: &SolverWorkspace,
    theta_init: &PhaseShiftVector,
    options: &SolveOptions,
    budget: &LinkBudget,
) -> Result<SolveResult> {
    check_init(ws, theta_init, options)?;
    let bits = match theta_init.resolution() {
        PhaseResolution::Bits(b) => b,
        PhaseResolution::Continuous => {
            return Err(Error::InvalidInput(
                "ao_discrete requires a discrete initial phase vector".into(),
            ))
        }
    };
    let n = ws.num_elements();
    let step = TAU / (1u64 << bits) as f64;
    let mut state = AoState::new(ws, theta_init);
    let mut converged = false;
    let mut sweeps = 0;
    while sweeps < options.max_sweeps && !converged {
        let mut changed = false;
        for i in 0..n {
            let Some(phi_n) = preferred_angle(state.zeta(ws, i)) else {
                continue; // zeta = 0: keep the current level
            };
            let k = discrete_update(phi_n, bits);
            let indices = state.indices.as_mut().expect("discrete state");
            if indices[i] != k {
                indices[i] = k;
                state.set_angle(ws, i, k as f64 * step);
                changed = true;
            }
        }
        sweeps += 1;
        if !changed {
            converged = true;
        }
    }
    let theta = PhaseShiftVector::discrete(bits, state.indices.take().expect("discrete state"))?;
    finish(ws, theta, budget, sweeps, converged, state.trace)
}

/// The same AO loop without quantization: each element is set to the angle
/// that exactly maximizes its linear term. Serves as the continuous-phase
/// benchmark. Converges when the largest per-element angle change in a sweep
/// drops below 1e-8 rad.
pub fn continuous_phase_solution(
    ws: &SolverWorkspace,
    theta_init: &PhaseShiftVector,
    options: &SolveOptions,
    budget: &LinkBudget,
) -> Result<SolveResult> {
    check_init(ws, theta_init, options)?;
    if theta_init.resolution() != PhaseResolution::Continuous {
        return Err(Error::InvalidInput(
            "continuous_phase_solution requires a continuous initial phase vector".into(),
        ));
    }
    let n = ws.num_elements();
    let mut state = AoState::new(ws, theta_init);
    let mut converged = false;
    let mut sweeps = 0;
    while sweeps < options.max_sweeps && !converged {
        let mut max_delta: f64 = 0.0;
        for i in 0..n {
            let Some(phi_n) = preferred_angle(state.zeta(ws, i)) else {
                continue;
            };
            let delta = circular_distance(phi_n, state.angles[i]);
            if delta > 0.0 {
                state.set_angle(ws, i, phi_n);
            }
            max_delta = max_delta.max(delta);
        }
        sweeps += 1;
        if max_delta < CONTINUOUS_TOL {
            converged = true;
        }
    }
    let theta = PhaseShiftVector::continuous(state.angles.clone())?;
    finish(ws, theta, budget, sweeps, converged, state.trace)
}

/// Circular angular distance `min(|a-b| mod 2pi, 2pi - |a-b| mod 2pi)`.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// Evaluate a fixed phase vector: objective, required power, MRT beamformer.
/// No optimization is performed (`iterations = 0`).
pub fn evaluate_phases(
    ws: &SolverWorkspace,
    theta: &PhaseShiftVector,
    budget: &LinkBudget,
) -> Result<SolveResult> {
    if theta.len() != ws.num_elements() {
        return Err(Error::DimensionMismatch(format!(
            "phase vector len {} vs N = {}",
            theta.len(),
            ws.num_elements()
        )));
    }
    let combined = ws.combined(&theta.phasors());
    let objective = combined.norm_squared();
    finish(ws, theta.clone(), budget, 0, true, vec![objective])
}

/// Global maximizer of the channel-gain objective over all `K^N` discrete
/// phase vectors; ties break toward the lexicographically smallest index
/// vector. Refuses instances with `b*N > 24`.
pub fn exhaustive_search(
    ws: &SolverWorkspace,
    bits: u32,
    budget: &LinkBudget,
) -> Result<SolveResult> {
    if bits < 1 {
        return Err(Error::InvalidInput("bits must be >= 1".into()));
    }
    let n = ws.num_elements();
    let total_bits = bits * n as u32;
    if total_bits > EXHAUSTIVE_LIMIT {
        return Err(Error::TooLargeInstance {
            bits_times_n: total_bits,
            limit: EXHAUSTIVE_LIMIT,
        });
    }
    let k = 1u64 << bits;
    let count = k.pow(n as u32);
    let step = TAU / k as f64;
    let mut best_indices = vec![0u64; n];
    let mut best = f64::NEG_INFINITY;
    let mut indices = vec![0u64; n];
    let mut phasors = vec![Complex64::new(1.0, 0.0); n];
    for code in 0..count {
        // lexicographic enumeration: element 0 is the most significant digit
        let mut rem = code;
        for i in (0..n).rev() {
            indices[i] = rem % k;
            rem /= k;
        }
        for i in 0..n {
            phasors[i] = Complex64::from_polar(1.0, indices[i] as f64 * step);
        }
        let obj = ws.combined(&phasors).norm_squared();
        if obj > best {
            best = obj;
            best_indices.copy_from_slice(&indices);
        }
    }
    let theta = PhaseShiftVector::discrete(bits, best_indices)?;
    let mut result = evaluate_phases(ws, &theta, budget)?;
    result.objective_trace = vec![result.objective];
    Ok(result)
}

/// Full solve pipeline: continuous AO from a zero-phase start, nearest-level
/// quantization, then discrete AO. In continuous mode the quantization and
/// discrete stages are skipped. `N = 0` degenerates to the no-IRS MRT
/// solution.
pub fn solve_p1(
    ch: &ChannelRealization,
    resolution: PhaseResolution,
    budget: &LinkBudget,
    options: &SolveOptions,
) -> Result<SolveResult> {
    let ws = build_workspace(ch);
    solve_p1_with_workspace(&ws, resolution, budget, options)
}

/// As [`solve_p1`] for a prebuilt workspace.
pub fn solve_p1_with_workspace(
    ws: &SolverWorkspace,
    resolution: PhaseResolution,
    budget: &LinkBudget,
    options: &SolveOptions,
) -> Result<SolveResult> {
    let n = ws.num_elements();
    if n == 0 {
        return evaluate_phases(ws, &PhaseShiftVector::zeros(resolution, 0), budget);
    }
    let zero = PhaseShiftVector::zeros(PhaseResolution::Continuous, n);
    let cont = continuous_phase_solution(ws, &zero, options, budget)?;
    match resolution {
        PhaseResolution::Continuous => Ok(cont),
        PhaseResolution::Bits(bits) => {
            let init = quantize_phases(&cont.theta, bits)?;
            ao_discrete(ws, &init, options, budget)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn budget() -> LinkBudget {
        LinkBudget::new(100.0, 1e-11).unwrap()
    }

    fn random_channel(rng: &mut StdRng, n: usize, m: usize) -> ChannelRealization {
        let draw = |rng: &mut StdRng| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
        ChannelRealization::new(
            DVector::from_fn(m, |_, _| draw(rng)),
            DVector::from_fn(n, |_, _| draw(rng)),
            DMatrix::from_fn(n, m, |_, _| draw(rng)),
        )
        .unwrap()
    }

    fn random_phases(rng: &mut StdRng, n: usize) -> PhaseShiftVector {
        PhaseShiftVector::continuous((0..n).map(|_| rng.gen::<f64>() * TAU)).unwrap()
    }

    fn assert_non_decreasing(trace: &[f64]) {
        for w in trace.windows(2) {
            let slack = 1e-12 * w[0].abs().max(w[1].abs());
            assert!(w[1] >= w[0] - slack, "trace decreased: {} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn workspace_zero_direct_link() {
        let mut rng = StdRng::seed_from_u64(1);
        let mut ch = random_channel(&mut rng, 4, 2);
        ch = ChannelRealization::new(DVector::zeros(2), ch.h_r().clone(), ch.g().clone()).unwrap();
        let ws = build_workspace(&ch);
        assert_eq!(ws.hd_norm2(), 0.0);
        assert!(ws.hd_hat().iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn workspace_single_element_diagonal() {
        let mut rng = StdRng::seed_from_u64(2);
        let ch = random_channel(&mut rng, 1, 3);
        let ws = build_workspace(&ch);
        let g_row_norm2: f64 = (0..3).map(|m| ch.g()[(0, m)].norm_sqr()).sum();
        let expected = ch.h_r()[0].norm_sqr() * g_row_norm2;
        assert!((ws.a()[(0, 0)].re - expected).abs() / expected < 1e-12);
        assert!(ws.a()[(0, 0)].im.abs() < 1e-15);
    }

    #[test]
    fn workspace_hermitian_and_psd_spot_checks() {
        let mut rng = StdRng::seed_from_u64(3);
        let ch = random_channel(&mut rng, 6, 3);
        let ws = build_workspace(&ch);
        let a = ws.a();
        let norm = a.norm();
        for i in 0..6 {
            for k in 0..6 {
                assert!((a[(i, k)] - a[(k, i)].conj()).norm() < 1e-12 * norm);
            }
        }
        // v^H A v >= 0 for random v
        for _ in 0..50 {
            let v = DVector::from_fn(6, |_, _| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
            let q = (v.adjoint() * a * &v)[(0, 0)];
            assert!(q.re >= -1e-10 * norm);
        }
    }

    #[test]
    fn objective_identity_vs_direct_norm() {
        let mut rng = StdRng::seed_from_u64(4);
        let ch = random_channel(&mut rng, 5, 3);
        let ws = build_workspace(&ch);
        for _ in 0..20 {
            let theta = random_phases(&mut rng, 5);
            let q = ws.objective_quadratic(&theta.phasors());
            let direct = crate::model::combined_channel(&ch, &theta)
                .unwrap()
                .norm_squared();
            assert!((q - direct).abs() / direct < 1e-10);
        }
    }

    #[test]
    fn zeta_single_element_is_hd_hat() {
        let mut rng = StdRng::seed_from_u64(5);
        let ch = random_channel(&mut rng, 1, 2);
        let ws = build_workspace(&ch);
        let theta = random_phases(&mut rng, 1);
        assert!((zeta(&ws, &theta, 0) - ws.hd_hat()[0]).norm() < 1e-15);
    }

    #[test]
    fn zeta_diagonal_a_reduces_to_hd_hat() {
        // G = I makes Phi diagonal, so A has no off-diagonal terms
        let mut rng = StdRng::seed_from_u64(6);
        let n = 4;
        let h_r = DVector::from_fn(n, |_, _| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
        let h_d = DVector::from_fn(n, |_, _| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
        let ch = ChannelRealization::new(h_d, h_r, DMatrix::identity(n, n)).unwrap();
        let ws = build_workspace(&ch);
        let theta = random_phases(&mut rng, n);
        for i in 0..n {
            assert!((zeta(&ws, &theta, i) - ws.hd_hat()[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn zeta_decomposes_the_objective() {
        // 2 Re{e^{j theta_n} zeta_n} + (theta_n-independent rest) = objective
        let mut rng = StdRng::seed_from_u64(7);
        let ch = random_channel(&mut rng, 5, 2);
        let ws = build_workspace(&ch);
        let base = random_phases(&mut rng, 5);
        let n_sel = 2;
        let mut rest = None;
        for step in 0..8 {
            let mut angles = base.angles();
            angles[n_sel] = step as f64 * TAU / 8.0;
            let theta = PhaseShiftVector::continuous(angles).unwrap();
            let z = zeta(&ws, &theta, n_sel);
            let lin = 2.0 * (Complex64::from_polar(1.0, theta.angle(n_sel)) * z).re;
            let obj = ws.objective_quadratic(&theta.phasors());
            let r = obj - lin;
            match rest {
                None => rest = Some(r),
                Some(r0) => assert!((r - r0).abs() / obj.abs() < 1e-10),
            }
        }
    }

    #[test]
    fn incremental_zeta_matches_definition() {
        let mut rng = StdRng::seed_from_u64(8);
        let ch = random_channel(&mut rng, 7, 3);
        let ws = build_workspace(&ch);
        let theta = random_phases(&mut rng, 7);
        let state = AoState::new(&ws, &theta);
        for i in 0..7 {
            let a = zeta(&ws, &theta, i);
            let b = state.zeta(&ws, i);
            assert!((a - b).norm() <= 1e-10 * a.norm().max(1.0));
        }
    }

    #[test]
    fn discrete_update_examples() {
        assert_eq!(discrete_update(0.0, 3), 0);
        // b=1: F = {0, pi}; pi/3 is closer to 0
        assert_eq!(discrete_update(PI / 3.0, 1), 0);
        // wrap-around: 2pi - 0.1 is 0.1 from angle 0
        assert_eq!(discrete_update(TAU - 0.1, 2), 0);
        // midpoint ties break to the smaller index
        assert_eq!(discrete_update(PI / 4.0, 2), 0);
        assert_eq!(discrete_update(TAU - PI / 4.0, 2), 0);
    }

    proptest! {
        #[test]
        fn discrete_update_matches_enumeration_oracle(
            phi in -10.0f64..10.0,
            bits in 1u32..6,
        ) {
            let k = discrete_update(phi, bits);
            let levels = 1u64 << bits;
            let step = TAU / levels as f64;
            let chosen = circular_distance(phi, k as f64 * step);
            for cand in 0..levels {
                let d = circular_distance(phi, cand as f64 * step);
                prop_assert!(chosen <= d + 1e-12);
            }
        }
    }

    #[test]
    fn ao_single_element_matches_enumeration() {
        let mut rng = StdRng::seed_from_u64(9);
        for bits in 1..=3u32 {
            let ch = random_channel(&mut rng, 1, 3);
            let ws = build_workspace(&ch);
            let init = PhaseShiftVector::discrete(bits, vec![0]).unwrap();
            let res = ao_discrete(&ws, &init, &SolveOptions::default(), &budget()).unwrap();
            assert!(res.converged);
            let k = 1u64 << bits;
            let best = (0..k)
                .map(|i| {
                    let t = PhaseShiftVector::discrete(bits, vec![i]).unwrap();
                    ws.combined(&t.phasors()).norm_squared()
                })
                .fold(f64::NEG_INFINITY, f64::max);
            assert!((res.objective - best).abs() / best < 1e-12);
        }
    }

    #[test]
    fn ao_fixed_point_at_exhaustive_optimum() {
        let mut rng = StdRng::seed_from_u64(10);
        let ch = random_channel(&mut rng, 4, 2);
        let ws = build_workspace(&ch);
        let opt = exhaustive_search(&ws, 2, &budget()).unwrap();
        let res = ao_discrete(&ws, &opt.theta, &SolveOptions::default(), &budget()).unwrap();
        assert!(res.converged);
        assert_eq!(res.iterations, 1);
        assert_eq!(res.theta, opt.theta);
        assert!((res.objective - opt.objective).abs() / opt.objective < 1e-12);
    }

    #[test]
    fn ao_near_optimal_vs_exhaustive() {
        let cfg = crate::chansim::ScenarioConfig {
            n: 8,
            m: 3,
            seed: 11,
            ..Default::default()
        };
        let budget = cfg.link_budget().unwrap();
        let mut near = 0u64;
        let instances = 200u64;
        for trial in 0..instances {
            let ch = crate::chansim::sample_channels(&cfg, trial);
            let ws = build_workspace(&ch);
            let ex = exhaustive_search(&ws, 1, &budget).unwrap();
            let ao = solve_p1_with_workspace(
                &ws,
                PhaseResolution::Bits(1),
                &budget,
                &SolveOptions::default(),
            )
            .unwrap();
            assert!(ao.objective <= ex.objective * (1.0 + 1e-12));
            assert_non_decreasing(&ao.objective_trace);
            if ao.objective >= 0.95 * ex.objective {
                near += 1;
            }
        }
        assert!(near * 100 >= instances * 95, "near-optimal in {near}/{instances}");
    }

    #[test]
    fn continuous_alignment_single_antenna_no_direct_link() {
        let mut rng = StdRng::seed_from_u64(12);
        let n = 16;
        let h_r = DVector::from_fn(n, |_, _| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
        let g = DMatrix::from_fn(n, 1, |_, _| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
        let ch = ChannelRealization::new(DVector::zeros(1), h_r.clone(), g.clone()).unwrap();
        let ws = build_workspace(&ch);
        let init = PhaseShiftVector::zeros(PhaseResolution::Continuous, n);
        let res = continuous_phase_solution(&ws, &init, &SolveOptions::default(), &budget()).unwrap();
        assert!(res.converged);
        let aligned: f64 = (0..n).map(|i| h_r[i].norm() * g[(i, 0)].norm()).sum();
        let expected = aligned * aligned;
        assert!((res.objective - expected).abs() / expected < 1e-8);
        assert_non_decreasing(&res.objective_trace);
    }

    #[test]
    fn continuous_stationary_at_fixed_point() {
        let mut rng = StdRng::seed_from_u64(13);
        let ch = random_channel(&mut rng, 6, 2);
        let ws = build_workspace(&ch);
        let init = PhaseShiftVector::zeros(PhaseResolution::Continuous, 6);
        let first = continuous_phase_solution(&ws, &init, &SolveOptions::default(), &budget()).unwrap();
        let again =
            continuous_phase_solution(&ws, &first.theta, &SolveOptions::default(), &budget()).unwrap();
        assert!(again.converged);
        assert!((again.objective - first.objective).abs() / first.objective < 1e-10);
    }

    #[test]
    fn continuous_dominates_discrete() {
        let mut rng = StdRng::seed_from_u64(14);
        for _ in 0..20 {
            let ch = random_channel(&mut rng, 6, 2);
            let ws = build_workspace(&ch);
            let cont = solve_p1_with_workspace(
                &ws,
                PhaseResolution::Continuous,
                &budget(),
                &SolveOptions::default(),
            )
            .unwrap();
            for bits in 1..=3 {
                let disc = solve_p1_with_workspace(
                    &ws,
                    PhaseResolution::Bits(bits),
                    &budget(),
                    &SolveOptions::default(),
                )
                .unwrap();
                assert!(disc.objective <= cont.objective * (1.0 + 1e-10));
            }
        }
    }

    #[test]
    fn quantize_identity_support_and_fine_grid_limit() {
        // angles already on the grid are unchanged
        let grid = PhaseShiftVector::discrete(2, vec![0, 1, 2, 3]).unwrap();
        let as_cont = PhaseShiftVector::continuous(grid.angles()).unwrap();
        assert_eq!(quantize_phases(&as_cont, 2).unwrap(), grid);

        // quantization error support is [-pi/2^b, pi/2^b)
        let mut rng = StdRng::seed_from_u64(15);
        for bits in 1..=4u32 {
            let half = PI / (1u64 << bits) as f64;
            for _ in 0..200 {
                let a = rng.gen::<f64>() * TAU;
                let q = discrete_update(a, bits) as f64 * TAU / (1u64 << bits) as f64;
                let mut err = q - a;
                if err >= PI {
                    err -= TAU;
                } else if err < -PI {
                    err += TAU;
                }
                assert!((-half..half + 1e-12).contains(&err), "err {err} at b={bits}");
            }
        }

        // fine grid recovers the continuous objective
        let ch = random_channel(&mut rng, 8, 3);
        let ws = build_workspace(&ch);
        let cont = solve_p1_with_workspace(
            &ws,
            PhaseResolution::Continuous,
            &budget(),
            &SolveOptions::default(),
        )
        .unwrap();
        let q = quantize_phases(&cont.theta, 16).unwrap();
        let quantized = evaluate_phases(&ws, &q, &budget()).unwrap();
        assert!((quantized.objective - cont.objective).abs() / cont.objective < 1e-6);
    }

    #[test]
    fn exhaustive_two_element_hand_enumeration() {
        let mut rng = StdRng::seed_from_u64(16);
        let ch = random_channel(&mut rng, 2, 2);
        let ws = build_workspace(&ch);
        let res = exhaustive_search(&ws, 1, &budget()).unwrap();
        let mut best = f64::NEG_INFINITY;
        for i in 0..2u64 {
            for k in 0..2u64 {
                let t = PhaseShiftVector::discrete(1, vec![i, k]).unwrap();
                best = best.max(ws.combined(&t.phasors()).norm_squared());
            }
        }
        assert!((res.objective - best).abs() / best < 1e-12);
    }

    #[test]
    fn exhaustive_refuses_large_instances() {
        let mut rng = StdRng::seed_from_u64(17);
        let ch = random_channel(&mut rng, 13, 1);
        let ws = build_workspace(&ch);
        assert!(matches!(
            exhaustive_search(&ws, 2, &budget()),
            Err(Error::TooLargeInstance { .. })
        ));
    }

    #[test]
    fn solve_p1_no_irs_closed_form() {
        let mut rng = StdRng::seed_from_u64(18);
        let ch = random_channel(&mut rng, 0, 4);
        let b = budget();
        let res = solve_p1(&ch, PhaseResolution::Bits(1), &b, &SolveOptions::default()).unwrap();
        let expected = b.gamma * b.sigma2 / ch.h_d().norm_squared();
        assert!((res.power_watts - expected).abs() / expected < 1e-12);
    }

    #[test]
    fn solve_p1_power_linear_in_gamma() {
        let mut rng = StdRng::seed_from_u64(19);
        let ch = random_channel(&mut rng, 5, 3);
        let opts = SolveOptions::default();
        let b1 = LinkBudget::new(50.0, 1e-11).unwrap();
        let b2 = LinkBudget::new(100.0, 1e-11).unwrap();
        let r1 = solve_p1(&ch, PhaseResolution::Bits(2), &b1, &opts).unwrap();
        let r2 = solve_p1(&ch, PhaseResolution::Bits(2), &b2, &opts).unwrap();
        assert_eq!(r1.theta, r2.theta);
        assert!((r2.power_watts - 2.0 * r1.power_watts).abs() / r2.power_watts < 1e-12);
    }

    #[test]
    fn solver_determinism() {
        let mut rng = StdRng::seed_from_u64(20);
        let ch = random_channel(&mut rng, 10, 4);
        let opts = SolveOptions::default();
        let a = solve_p1(&ch, PhaseResolution::Bits(1), &budget(), &opts).unwrap();
        let b = solve_p1(&ch, PhaseResolution::Bits(1), &budget(), &opts).unwrap();
        assert_eq!(a.theta, b.theta);
        assert_eq!(a.power_watts, b.power_watts);
        assert_eq!(a.objective_trace, b.objective_trace);
    }

    #[test]
    fn invalid_max_sweeps_rejected() {
        let mut rng = StdRng::seed_from_u64(21);
        let ch = random_channel(&mut rng, 3, 2);
        let ws = build_workspace(&ch);
        let init = PhaseShiftVector::zeros(PhaseResolution::Bits(1), 3);
        let opts = SolveOptions { max_sweeps: 0 };
        assert!(ao_discrete(&ws, &init, &opts, &budget()).is_err());
    }

    #[test]
    fn oracle_dominance_chain() {
        // exhaustive >= ao >= quantize-only, same workspace and init
        let mut rng = StdRng::seed_from_u64(22);
        for _ in 0..20 {
            let ch = random_channel(&mut rng, 6, 2);
            let ws = build_workspace(&ch);
            let b = budget();
            let opts = SolveOptions::default();
            let cont = continuous_phase_solution(
                &ws,
                &PhaseShiftVector::zeros(PhaseResolution::Continuous, 6),
                &opts,
                &b,
            )
            .unwrap();
            let init = quantize_phases(&cont.theta, 1).unwrap();
            let init_only = evaluate_phases(&ws, &init, &b).unwrap();
            let ao = ao_discrete(&ws, &init, &opts, &b).unwrap();
            let ex = exhaustive_search(&ws, 1, &b).unwrap();
            assert!(ao.objective >= init_only.objective * (1.0 - 1e-12));
            assert!(ex.objective >= ao.objective * (1.0 - 1e-12));
        }
    }
}
