//! Quantum witnesses: the Pauli-basis propagator, outcome probabilities
//! with and without a blind intermediate measurement, the standard (x-basis)
//! and optimized (z-basis) witnesses, and the coherence monotone they are
//! compared against.
//!
//! Bloch components follow [`QubitState::bloch`]: x = 2 Re ρ_eg,
//! y = −2 Im ρ_eg, z = ρ_ee − ρ_gg. The final measurement is always
//! Π₊ˣ = (I + σx)/2.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::solver::{self, AmplitudeTrajectory, Tolerances};
use crate::state::{self, QubitState};

/// How the evolution after the blind measurement at τ/2 is propagated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CompositionMode {
    /// Reuse the [0, τ/2] amplitude for the second half-interval, as if the
    /// dynamics were time-homogeneous. Reproduces the published closed forms.
    #[default]
    Homogeneous,
    /// Re-solve the amplitude equation on [τ/2, τ] from C = 1 with an empty
    /// memory and the absolute-time modulation phase.
    ExactSegments,
}

impl CompositionMode {
    pub fn as_str(self) -> &'static str {
        match self {
            CompositionMode::Homogeneous => "homogeneous",
            CompositionMode::ExactSegments => "exact-segments",
        }
    }
}

/// Linear map on the expectation vector (⟨σx⟩, ⟨σy⟩, ⟨σz⟩, 1) generated by
/// an amplitude C:
///
/// ```text
/// ⎡ Re C   Im C   0      0      ⎤
/// ⎢ −Im C  Re C   0      0      ⎥
/// ⎢ 0      0      |C|²   |C|²−1 ⎥
/// ⎣ 0      0      0      1      ⎦
/// ```
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PauliPropagator {
    pub matrix: [[f64; 4]; 4],
}

impl PauliPropagator {
    pub fn identity() -> Self {
        Self::from_amplitude(Complex64::new(1.0, 0.0))
    }

    pub fn from_amplitude(c: Complex64) -> Self {
        let p = c.norm_sqr();
        PauliPropagator {
            matrix: [
                [c.re, c.im, 0.0, 0.0],
                [-c.im, c.re, 0.0, 0.0],
                [0.0, 0.0, p, p - 1.0],
                [0.0, 0.0, 0.0, 1.0],
            ],
        }
    }

    pub fn apply(&self, v: [f64; 4]) -> [f64; 4] {
        let mut out = [0.0; 4];
        for (o, row) in out.iter_mut().zip(&self.matrix) {
            *o = row.iter().zip(&v).map(|(a, b)| a * b).sum();
        }
        out
    }

    /// `self ∘ first`: apply `first`, then `self`.
    pub fn after(&self, first: &PauliPropagator) -> PauliPropagator {
        let mut m = [[0.0; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                *e = (0..4).map(|k| self.matrix[i][k] * first.matrix[k][j]).sum();
            }
        }
        PauliPropagator { matrix: m }
    }
}

/// Expectation vector (⟨σx⟩, ⟨σy⟩, ⟨σz⟩, 1) of a state.
pub fn expectation_vector(s: &QubitState) -> [f64; 4] {
    let [x, y, z] = s.bloch();
    [x, y, z, 1.0]
}

fn initial_expectations(params: &ModelParams) -> [f64; 4] {
    expectation_vector(&state::density_matrix_for(params, Complex64::new(1.0, 0.0), 0.0))
}

/// Blind σx measurement: keeps ⟨σx⟩ and erases the other components.
fn collapse_x(v: [f64; 4]) -> [f64; 4] {
    [v[0], 0.0, 0.0, 1.0]
}

/// Blind σz measurement: keeps the populations, erases the coherences.
fn collapse_z(v: [f64; 4]) -> [f64; 4] {
    [0.0, 0.0, v[2], 1.0]
}

fn prob_plus_from(v: [f64; 4]) -> f64 {
    0.5 * (1.0 + v[0])
}

fn check_index(traj: &AmplitudeTrajectory, k: usize, what: &str) -> Result<()> {
    if k >= traj.len() {
        return Err(Error::domain(format!(
            "{what} index {k} outside a grid of {} points",
            traj.len()
        )));
    }
    Ok(())
}

fn check_tau_index(traj: &AmplitudeTrajectory, tau_index: usize) -> Result<()> {
    check_index(traj, tau_index, "tau")?;
    if !tau_index.is_multiple_of(2) {
        return Err(Error::domain(format!(
            "tau index {tau_index} is odd, so tau/2 is not on the grid"
        )));
    }
    Ok(())
}

pub fn propagator(traj: &AmplitudeTrajectory, k: usize) -> PauliPropagator {
    PauliPropagator::from_amplitude(traj.c[k])
}

/// Tr(ρ(t_k) Π₊ˣ), without any intermediate measurement.
pub fn quantum_probability_plus(traj: &AmplitudeTrajectory, k: usize) -> f64 {
    let rho = state::density_matrix(traj, k).rho;
    0.5 * (rho[0][0] + rho[0][1] + rho[1][0] + rho[1][1]).re
}

/// Propagator of the second segment [t_b, t_τ] under `mode`.
fn second_segment(
    traj: &AmplitudeTrajectory,
    blind_index: usize,
    tau_index: usize,
    mode: CompositionMode,
) -> Result<PauliPropagator> {
    let c = match mode {
        CompositionMode::Homogeneous => traj.c[tau_index - blind_index],
        CompositionMode::ExactSegments => {
            let seg = (traj.times[blind_index], traj.times[tau_index]);
            solver::segment_amplitudes(&traj.params, &[seg], traj.tolerances)?[0]
        }
    };
    Ok(PauliPropagator::from_amplitude(c))
}

/// Standard quantum witness at τ = t_{tau_index} with the blind σx
/// measurement at τ/2, in the closed form
/// ½|sinθ|·|Re[e^{−iφ}C(τ)] − Re C(τ/2)·Re[e^{−iφ}C(τ/2)]|,
/// which for φ = 0 is ½|sinθ|·|Re C(τ) − (Re C(τ/2))²|.
pub fn sqw(traj: &AmplitudeTrajectory, tau_index: usize) -> Result<f64> {
    check_tau_index(traj, tau_index)?;
    let p = &traj.params;
    let rot = Complex64::from_polar(1.0, -p.phi);
    let c_tau = traj.c[tau_index];
    let c_half = traj.c[tau_index / 2];
    let gap = (rot * c_tau).re - c_half.re * (rot * c_half).re;
    Ok(0.5 * p.theta.sin().abs() * gap.abs())
}

/// Standard quantum witness obtained by explicitly composing
/// propagator → blind σx collapse → propagator → final trace.
pub fn sqw_composed(
    traj: &AmplitudeTrajectory,
    tau_index: usize,
    mode: CompositionMode,
) -> Result<f64> {
    check_tau_index(traj, tau_index)?;
    let half = tau_index / 2;
    let v_half = propagator(traj, half).apply(initial_expectations(&traj.params));
    let v_blind = second_segment(traj, half, tau_index, mode)?.apply(collapse_x(v_half));
    Ok((quantum_probability_plus(traj, tau_index) - prob_plus_from(v_blind)).abs())
}

/// State at τ after a blind σz measurement at τ/2, propagated with the
/// half-interval amplitude on both segments:
/// diag(cos²(θ/2)|C(τ/2)|⁴, 1 − cos²(θ/2)|C(τ/2)|⁴).
pub fn classicalized_state(traj: &AmplitudeTrajectory, tau_index: usize) -> Result<QubitState> {
    classicalized_state_with(traj, tau_index, CompositionMode::Homogeneous)
}

/// [`classicalized_state`] under an explicit composition mode.
pub fn classicalized_state_with(
    traj: &AmplitudeTrajectory,
    tau_index: usize,
    mode: CompositionMode,
) -> Result<QubitState> {
    check_tau_index(traj, tau_index)?;
    let half = tau_index / 2;
    let v_half = propagator(traj, half).apply(initial_expectations(&traj.params));
    let v = second_segment(traj, half, tau_index, mode)?.apply(collapse_z(v_half));
    Ok(QubitState::from_bloch([v[0], v[1], v[2]], traj.times[tau_index]))
}

/// Optimized quantum witness ½|sinθ·Re[e^{−iφ}C(τ)]|. The blind σz
/// measurement removes every x, y component and the propagator never
/// regenerates them, so the blind-measurement time drops out.
pub fn oqw(traj: &AmplitudeTrajectory, tau_index: usize) -> f64 {
    let p = &traj.params;
    let x = p.theta.sin() * (Complex64::from_polar(1.0, -p.phi) * traj.c[tau_index]).re;
    0.5 * x.abs()
}

/// Optimized quantum witness by explicit composition, with the blind σz
/// measurement at grid index `blind_index` ∈ [0, tau_index].
pub fn oqw_with_blind_time(
    traj: &AmplitudeTrajectory,
    tau_index: usize,
    blind_index: usize,
    mode: CompositionMode,
) -> Result<f64> {
    check_index(traj, tau_index, "tau")?;
    if blind_index > tau_index {
        return Err(Error::domain(format!(
            "blind measurement index {blind_index} is after tau index {tau_index}"
        )));
    }
    let v_blind = propagator(traj, blind_index).apply(initial_expectations(&traj.params));
    let v = second_segment(traj, blind_index, tau_index, mode)?.apply(collapse_z(v_blind));
    Ok((quantum_probability_plus(traj, tau_index) - prob_plus_from(v)).abs())
}

/// Witness series on a common τ grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessCurves {
    pub taus: Vec<f64>,
    pub sqw: Vec<f64>,
    pub oqw: Vec<f64>,
    /// Half the ℓ1 coherence, the upper bound of the optimized witness.
    pub coherence_half: Vec<f64>,
    pub params: ModelParams,
    pub mode: CompositionMode,
    pub tolerances: Tolerances,
}

impl WitnessCurves {
    pub fn len(&self) -> usize {
        self.taus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taus.is_empty()
    }
}

/// Witness curves at n + 1 values τ_k = k·tau_max/n from one solve on a
/// 2n + 1 point grid, so every τ/2 is a grid point.
pub fn witness_curves(params: &ModelParams, tau_max: f64, n: usize) -> Result<WitnessCurves> {
    witness_curves_with(params, tau_max, n, CompositionMode::Homogeneous)
}

/// [`witness_curves`] with an explicit composition mode for the standard
/// witness.
pub fn witness_curves_with(
    params: &ModelParams,
    tau_max: f64,
    n: usize,
    mode: CompositionMode,
) -> Result<WitnessCurves> {
    if n == 0 {
        return Err(Error::validation("points", "at least one tau interval is required"));
    }
    let traj = solver::solve(params, tau_max, 2 * n + 1)?;
    let idx: Vec<usize> = (0..=n).map(|k| 2 * k).collect();
    let sqw = match mode {
        CompositionMode::Homogeneous => idx.iter().map(|&j| sqw(&traj, j)).collect::<Result<Vec<_>>>()?,
        CompositionMode::ExactSegments => idx
            .par_iter()
            .map(|&j| sqw_composed(&traj, j, mode))
            .collect::<Result<Vec<_>>>()?,
    };
    Ok(WitnessCurves {
        taus: idx.iter().map(|&j| traj.times[j]).collect(),
        sqw,
        oqw: idx.iter().map(|&j| oqw(&traj, j)).collect(),
        coherence_half: idx.iter().map(|&j| 0.5 * state::coherence_l1(&traj, j)).collect(),
        params: *params,
        mode,
        tolerances: traj.tolerances,
    })
}
