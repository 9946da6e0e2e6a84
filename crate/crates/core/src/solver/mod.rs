//! Excited-state amplitude C(t) of the modulated qubit.
//!
//! The memory-kernel equation
//!
//! ```text
//! Ċ(t) = −(γλ/2) e^{iϕ(t)} ∫₀ᵗ e^{−λ(t−t′)} e^{−iϕ(t′)} C(t′) dt′,   ϕ(t) = (δ/Ω) sin Ωt
//! ```
//!
//! is solved two independent ways: as a local ODE system in (C, z) with the
//! memory integral z carried as a state variable ([`solve_ode_reform`]),
//! and by trapezoidal product integration of the history
//! ([`solve_volterra`]). [`analytic_unmodulated`] is the closed form for
//! δ = Ω = 0.

mod dopri;
mod volterra;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::ModelParams;

pub use dopri::Stats as StepStats;
pub use volterra::solve_volterra;

/// Bound on |C| accepted from a solver before it is reported as a failure.
pub const MODULUS_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverTag {
    OdeReform,
    VolterraQuadrature,
    AnalyticUnmodulated,
}

impl SolverTag {
    pub fn as_str(self) -> &'static str {
        match self {
            SolverTag::OdeReform => "ode-reform",
            SolverTag::VolterraQuadrature => "volterra-quadrature",
            SolverTag::AnalyticUnmodulated => "analytic-unmodulated",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    pub rel: f64,
    pub abs: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rel: 1e-9,
            abs: 1e-12,
        }
    }
}

/// Uniform-grid samples of C(t) and Ċ(t).
#[derive(Debug, Clone)]
pub struct AmplitudeTrajectory {
    pub times: Vec<f64>,
    pub c: Vec<Complex64>,
    pub c_dot: Vec<Complex64>,
    /// 1 − C, carried separately so that small population losses are not
    /// lost to cancellation against 1.
    pub deficit: Vec<Complex64>,
    pub params: ModelParams,
    pub solver_tag: SolverTag,
    pub tolerances: Tolerances,
    pub stats: Option<StepStats>,
}

impl AmplitudeTrajectory {
    /// Trajectory from samples of C and Ċ, with the deficit formed as 1 − C.
    pub fn from_samples(
        times: Vec<f64>,
        c: Vec<Complex64>,
        c_dot: Vec<Complex64>,
        params: ModelParams,
        solver_tag: SolverTag,
        tolerances: Tolerances,
    ) -> Self {
        let deficit = c.iter().map(|c| Complex64::new(1.0, 0.0) - c).collect();
        AmplitudeTrajectory {
            times,
            c,
            c_dot,
            deficit,
            params,
            solver_tag,
            tolerances,
            stats: None,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Grid spacing.
    pub fn step(&self) -> f64 {
        self.times[1] - self.times[0]
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().expect("non-empty trajectory")
    }

    /// d²C/dt² at grid point `k`, from the differentiated equation of motion.
    pub fn c_ddot(&self, k: usize) -> Complex64 {
        amplitude_second_derivative(&self.params, self.times[k], self.c[k], self.c_dot[k])
    }

    /// d³C/dt³ at grid point `k`, from the twice-differentiated equation of
    /// motion.
    pub fn c_dddot(&self, k: usize) -> Complex64 {
        amplitude_third_derivative(&self.params, self.times[k], self.c[k], self.c_dot[k])
    }

    /// |C(t_k)|².
    pub fn population(&self, k: usize) -> f64 {
        self.c[k].norm_sqr()
    }

    /// 1 − |C(t_k)|² = 2 Re w − |w|² with w = 1 − C, free of cancellation.
    pub fn population_loss(&self, k: usize) -> f64 {
        let w = self.deficit[k];
        2.0 * w.re - w.norm_sqr()
    }

    /// ∂ₜ|C|² = 2 Re(C* Ċ) at grid point `k`.
    pub fn population_rate(&self, k: usize) -> f64 {
        2.0 * (self.c[k].conj() * self.c_dot[k]).re
    }

    /// Grid index of time `t`, if `t` lies on the grid.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let h = self.step();
        let k = (t / h).round();
        if k < 0.0 || k as usize >= self.len() {
            return None;
        }
        let k = k as usize;
        ((self.times[k] - t).abs() <= 1e-9 * h.max(t.abs())).then_some(k)
    }

    /// C at an arbitrary time inside the grid by cubic Hermite interpolation
    /// of the stored (C, Ċ) samples.
    pub fn amplitude_at(&self, t: f64) -> Result<Complex64> {
        let t_end = self.t_end();
        if !(0.0..=t_end).contains(&t) {
            return Err(Error::domain(format!(
                "t = {t} outside trajectory range [0, {t_end}]"
            )));
        }
        let h = self.step();
        let k = ((t / h).floor() as usize).min(self.len() - 2);
        let s = (t - self.times[k]) / h;
        let (h00, h10, h01, h11) = hermite_basis(s);
        Ok(self.c[k] * h00
            + self.c_dot[k] * (h10 * h)
            + self.c[k + 1] * h01
            + self.c_dot[k + 1] * (h11 * h))
    }

    /// Largest |C| over the grid.
    pub fn max_modulus(&self) -> f64 {
        self.c.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Sup-norm distance to another trajectory on a shared time grid.
    /// `other` may be finer by an integer factor.
    pub fn sup_distance(&self, other: &AmplitudeTrajectory) -> Result<f64> {
        let (coarse, fine) = if self.len() <= other.len() {
            (self, other)
        } else {
            (other, self)
        };
        let ratio = (fine.len() - 1) / (coarse.len() - 1);
        if ratio * (coarse.len() - 1) != fine.len() - 1
            || (coarse.t_end() - fine.t_end()).abs() > 1e-12 * coarse.t_end()
        {
            return Err(Error::domain("trajectory grids are not nested"));
        }
        Ok(coarse
            .c
            .iter()
            .enumerate()
            .map(|(k, c)| (c - fine.c[k * ratio]).norm())
            .fold(0.0, f64::max))
    }

    fn check_modulus(&self) -> Result<()> {
        for (t, c) in self.times.iter().zip(&self.c) {
            if !(c.norm() <= 1.0 + MODULUS_SLACK) {
                return Err(Error::Solver {
                    time: *t,
                    reason: format!("|C| = {} exceeds 1", c.norm()),
                });
            }
        }
        Ok(())
    }
}

pub(crate) fn hermite_basis(s: f64) -> (f64, f64, f64, f64) {
    let s2 = s * s;
    let s3 = s2 * s;
    (
        2.0 * s3 - 3.0 * s2 + 1.0,
        s3 - 2.0 * s2 + s,
        -2.0 * s3 + 3.0 * s2,
        s3 - s2,
    )
}

/// Grid size used when the caller does not pick one: 2001 points per ten
/// time units, never fewer than 2.
pub fn default_points(t_end: f64) -> usize {
    ((t_end / 10.0 * 2000.0).ceil() as usize).max(1) + 1
}

pub(crate) fn uniform_grid(t_end: f64, n_points: usize) -> Vec<f64> {
    let h = t_end / (n_points - 1) as f64;
    let mut t: Vec<f64> = (0..n_points).map(|k| k as f64 * h).collect();
    t[n_points - 1] = t_end;
    t
}

fn check_grid(t_end: f64, n_points: usize) -> Result<()> {
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::validation("t_end", format!("{t_end} must be > 0")));
    }
    if n_points < 2 {
        return Err(Error::validation(
            "n_points",
            format!("{n_points} must be >= 2"),
        ));
    }
    Ok(())
}

/// Memory kernel F(t, t′) = (γλ/2) e^{−λ(t−t′)} e^{i[ϕ(t) − ϕ(t′)]}.
pub fn kernel(params: &ModelParams, t: f64, t_prime: f64) -> Result<Complex64> {
    if t_prime > t {
        return Err(Error::domain(format!(
            "kernel needs t' <= t, got t' = {t_prime} > t = {t}"
        )));
    }
    let phase = params.modulation_phase(t) - params.modulation_phase(t_prime);
    Ok(Complex64::from_polar(
        params.kernel_strength() * (-params.lambda * (t - t_prime)).exp(),
        phase,
    ))
}

/// C̈ = (iϕ̇ − λ) Ċ − (γλ/2) C, obtained by differentiating the equation of
/// motion once; it needs no history.
pub fn amplitude_second_derivative(
    params: &ModelParams,
    t: f64,
    c: Complex64,
    c_dot: Complex64,
) -> Complex64 {
    Complex64::new(-params.lambda, params.modulation_phase_rate(t)) * c_dot
        - c * params.kernel_strength()
}

/// C⃛ = iϕ̈ Ċ + (iϕ̇ − λ) C̈ − (γλ/2) Ċ.
pub fn amplitude_third_derivative(
    params: &ModelParams,
    t: f64,
    c: Complex64,
    c_dot: Complex64,
) -> Complex64 {
    let c_ddot = amplitude_second_derivative(params, t, c, c_dot);
    let phase_accel = -params.delta * params.omega_mod * (params.omega_mod * t).sin();
    Complex64::new(0.0, phase_accel) * c_dot
        + Complex64::new(-params.lambda, params.modulation_phase_rate(t)) * c_ddot
        - c_dot * params.kernel_strength()
}

/// Right-hand side of the local system in the deficit w = 1 − C:
/// ẇ = (γλ/2) e^{iϕ(t)} z,  ż = −λ z + e^{−iϕ(t)} (1 − w).
fn reform_rhs(params: &ModelParams, t: f64, y: &[Complex64; 2]) -> [Complex64; 2] {
    let rot = Complex64::from_polar(1.0, params.modulation_phase(t));
    [
        rot * y[1] * params.kernel_strength(),
        (Complex64::new(1.0, 0.0) - y[0]) * rot.conj() - y[1] * params.lambda,
    ]
}

/// Solves for C on `n_points` uniform samples of [0, t_end] through the
/// auxiliary memory variable z(t) = ∫₀ᵗ e^{−λ(t−t′)} e^{−iϕ(t′)} C(t′) dt′.
pub fn solve_ode_reform(
    params: &ModelParams,
    t_end: f64,
    n_points: usize,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<AmplitudeTrajectory> {
    check_grid(t_end, n_points)?;
    params.validate()?;
    let times = uniform_grid(t_end, n_points);
    let settings = dopri::Settings::new(rel_tol, abs_tol);
    let p = *params;
    let (states, stats) = dopri::integrate(
        |t, y| reform_rhs(&p, t, y),
        0.0,
        [Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)],
        &times,
        &settings,
    )?;
    let mut c = Vec::with_capacity(n_points);
    let mut c_dot = Vec::with_capacity(n_points);
    let mut deficit = Vec::with_capacity(n_points);
    for (t, y) in times.iter().zip(&states) {
        deficit.push(y[0]);
        c.push(Complex64::new(1.0, 0.0) - y[0]);
        c_dot.push(-reform_rhs(&p, *t, y)[0]);
    }
    deficit[0] = Complex64::new(0.0, 0.0);
    c[0] = Complex64::new(1.0, 0.0);
    let traj = AmplitudeTrajectory {
        times,
        c,
        c_dot,
        deficit,
        params: p,
        solver_tag: SolverTag::OdeReform,
        tolerances: Tolerances {
            rel: rel_tol,
            abs: abs_tol,
        },
        stats: Some(stats),
    };
    traj.check_modulus()?;
    Ok(traj)
}

/// [`solve_ode_reform`] with default tolerances.
pub fn solve(params: &ModelParams, t_end: f64, n_points: usize) -> Result<AmplitudeTrajectory> {
    let tol = Tolerances::default();
    solve_ode_reform(params, t_end, n_points, tol.rel, tol.abs)
}

/// Amplitude at each `(t_start, t_stop)` pair when the equation of motion is
/// restarted at `t_start` with C = 1 and an empty memory, keeping the
/// absolute-time modulation phase. This is the segment propagator used by
/// the exact-segments witness composition.
pub fn segment_amplitudes(
    params: &ModelParams,
    segments: &[(f64, f64)],
    tol: Tolerances,
) -> Result<Vec<Complex64>> {
    let settings = dopri::Settings::new(tol.rel, tol.abs);
    let p = *params;
    segments
        .iter()
        .map(|&(t0, t1)| {
            if t1 < t0 {
                return Err(Error::domain(format!("segment [{t0}, {t1}] is reversed")));
            }
            let (states, _) = dopri::integrate(
                |t, y| reform_rhs(&p, t, y),
                t0,
                [Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)],
                &[t1],
                &settings,
            )?;
            Ok(Complex64::new(1.0, 0.0) - states[0][0])
        })
        .collect()
}

/// (C, Ċ) of the unmodulated Lorentzian problem,
/// C = e^{−λt/2}[cosh(dt/2) + (λ/d) sinh(dt/2)], d = √(λ² − 2γλ),
/// continued to the trigonometric branch when 2γ > λ.
fn unmodulated_closed_form(gamma: f64, lambda: f64, t: f64) -> (f64, f64) {
    let d2 = lambda * lambda - 2.0 * gamma * lambda;
    let u2 = d2 * t * t / 4.0; // u = dt/2, possibly imaginary
    let decay = (-0.5 * lambda * t).exp();
    if u2 > 400.0 {
        let d = d2.sqrt();
        let a = (0.5 * (d - lambda) * t).exp();
        let b = (-0.5 * (d + lambda) * t).exp();
        let c = 0.5 * a * (1.0 + lambda / d) + 0.5 * b * (1.0 - lambda / d);
        let c_dot = -(gamma * lambda / d) * 0.5 * (a - b);
        return (c, c_dot);
    }
    // cosh(u) and sinh(u)/u as even functions of u, valid on both branches
    let (cosh_u, sinhc_u) = if u2 >= 0.0 {
        let u = u2.sqrt();
        (u.cosh(), if u < 1e-8 { 1.0 + u2 / 6.0 } else { u.sinh() / u })
    } else {
        let w = (-u2).sqrt();
        (w.cos(), if w < 1e-8 { 1.0 + u2 / 6.0 } else { w.sin() / w })
    };
    let half_t = 0.5 * t;
    let c = decay * (cosh_u + lambda * half_t * sinhc_u);
    let c_dot = -gamma * lambda * half_t * decay * sinhc_u;
    (c, c_dot)
}

/// Closed-form C(t) for δ = Ω = 0.
pub fn analytic_unmodulated(params: &ModelParams, t: f64) -> Result<Complex64> {
    require_unmodulated(params)?;
    let (c, _) = unmodulated_closed_form(params.gamma, params.lambda, t);
    Ok(Complex64::new(c, 0.0))
}

/// Closed-form trajectory for δ = Ω = 0 on a uniform grid.
pub fn analytic_trajectory(
    params: &ModelParams,
    t_end: f64,
    n_points: usize,
) -> Result<AmplitudeTrajectory> {
    require_unmodulated(params)?;
    check_grid(t_end, n_points)?;
    let times = uniform_grid(t_end, n_points);
    let (c, c_dot) = times
        .iter()
        .map(|&t| {
            let (c, cd) = unmodulated_closed_form(params.gamma, params.lambda, t);
            (Complex64::new(c, 0.0), Complex64::new(cd, 0.0))
        })
        .unzip();
    Ok(AmplitudeTrajectory::from_samples(
        times,
        c,
        c_dot,
        *params,
        SolverTag::AnalyticUnmodulated,
        Tolerances { rel: 0.0, abs: 0.0 },
    ))
}

fn require_unmodulated(params: &ModelParams) -> Result<()> {
    if !params.is_unmodulated() {
        return Err(Error::domain(format!(
            "closed form needs δ = Ω = 0, got δ = {}, Ω = {}",
            params.delta, params.omega_mod
        )));
    }
    Ok(())
}
