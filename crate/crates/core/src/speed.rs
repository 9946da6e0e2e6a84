//! BLP non-Markovianity, the quantum speed limit time, the 𝕽g ratio and
//! sweeps of all three over the coupling ratio γ/λ.
//!
//! Time integrals over the trajectory are evaluated on the quintic Hermite
//! interpolant built from the stored samples and their exact derivatives
//! (Ċ, C̈, C⃛ and the first two derivatives of ∂ₜ|C|²). Each grid interval is split at the sign changes of
//! the interpolated population rate, so positive parts and absolute values
//! are integrated without kink errors: the backflow integral exactly, the
//! Schatten-norm integrals by Gauss–Legendre on the smooth sub-pieces.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::solver::{self, AmplitudeTrajectory, Tolerances};
use crate::state;

/// Threshold on N and on 1 − τ_QSLT/τ below which a point counts as
/// Markovian / not sped up.
pub const DEFAULT_EPS: f64 = 1e-6;

/// |1 − ⟨ψ₀|ρ(τ)|ψ₀⟩| below which 𝕽g is reported as NaN.
pub const RG_GUARD: f64 = 1e-12;

/// Solver tolerances for metric evaluation. The speed-limit ratio divides
/// two small quantities at short times, so the trajectory is solved well
/// below the default tolerances.
pub const METRIC_TOLERANCES: Tolerances = Tolerances {
    rel: 1e-12,
    abs: 1e-15,
};

const GAUSS_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683_1,
    0.0,
    0.538_469_310_105_683_1,
    0.906_179_845_938_664,
];
const GAUSS_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

/// Polynomial p(s) = Σ aᵢ sⁱ of degree ≤ 5 on s ∈ [0, 1].
#[derive(Debug, Clone, Copy)]
struct Poly {
    a: [f64; 6],
    degree: usize,
}

impl Poly {
    /// Quintic interpolating value, first and second derivative at both
    /// ends of an interval of length h (derivatives in the unscaled variable).
    fn hermite5(y: [f64; 2], dy: [f64; 2], ddy: [f64; 2], h: f64) -> Self {
        let (y0, y1) = (y[0], y[1]);
        let (d0, d1) = (h * dy[0], h * dy[1]);
        let (e0, e1) = (h * h * ddy[0], h * h * ddy[1]);
        Poly {
            a: [
                y0,
                d0,
                0.5 * e0,
                10.0 * (y1 - y0) - 6.0 * d0 - 4.0 * d1 - 1.5 * e0 + 0.5 * e1,
                15.0 * (y0 - y1) + 8.0 * d0 + 7.0 * d1 + 1.5 * e0 - e1,
                6.0 * (y1 - y0) - 3.0 * (d0 + d1) - 0.5 * (e0 - e1),
            ],
            degree: 5,
        }
    }

    fn eval(&self, s: f64) -> f64 {
        self.a[..=self.degree].iter().rev().fold(0.0, |acc, c| acc * s + c)
    }

    fn derivative(&self) -> Poly {
        let mut a = [0.0; 6];
        for i in 1..=self.degree {
            a[i - 1] = i as f64 * self.a[i];
        }
        Poly {
            a,
            degree: self.degree.saturating_sub(1),
        }
    }

    /// ∫ p(s) ds over [u, v].
    fn integral(&self, u: f64, v: f64) -> f64 {
        let anti = |s: f64| {
            s * self.a[..=self.degree]
                .iter()
                .enumerate()
                .rev()
                .fold(0.0, |acc, (i, c)| acc * s + c / (i + 1) as f64)
        };
        anti(v) - anti(u)
    }

    /// Sign changes of p strictly inside (0, 1), ascending. Roots of p′
    /// split [0, 1] into monotone pieces (recursively), and each piece whose
    /// end values differ in sign holds exactly one root, found by bisection
    /// to full precision.
    fn roots_in_unit(&self) -> Vec<f64> {
        if self.degree == 0 {
            return Vec::new();
        }
        let mut breaks = vec![0.0];
        breaks.extend(self.derivative().roots_in_unit());
        breaks.push(1.0);
        let mut roots = Vec::new();
        for w in breaks.windows(2) {
            let (mut lo, mut hi) = (w[0], w[1]);
            let plo = self.eval(lo);
            if plo * self.eval(hi) >= 0.0 {
                continue;
            }
            let rising = plo < 0.0;
            loop {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if (self.eval(mid) < 0.0) == rising {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        roots
    }

    /// Breakpoints 0 = s₀ < … < s_m = 1 with p of one sign on each piece.
    fn sign_pieces(&self) -> Vec<f64> {
        let mut out = vec![0.0];
        out.extend(self.roots_in_unit());
        out.push(1.0);
        out.dedup();
        out
    }
}

/// Interpolants of the population rate and of Ċ on grid interval k.
struct IntervalModel {
    rate: Poly,
    c_dot_re: Poly,
    c_dot_im: Poly,
}

impl IntervalModel {
    fn new(traj: &AmplitudeTrajectory, k: usize, h: f64) -> Self {
        let j = [k, k + 1];
        let c = j.map(|i| traj.c[i]);
        let v = j.map(|i| traj.c_dot[i]);
        let acc = j.map(|i| traj.c_ddot(i));
        let jerk = j.map(|i| traj.c_dddot(i));
        // f = 2 Re C*Ċ,  f′ = 2(|Ċ|² + Re C*C̈),  f″ = 2(3 Re Ċ*C̈ + Re C*C⃛)
        let rate = [0, 1].map(|i| 2.0 * (c[i].conj() * v[i]).re);
        let rate_d = [0, 1].map(|i| 2.0 * (v[i].norm_sqr() + (c[i].conj() * acc[i]).re));
        let rate_dd = [0, 1]
            .map(|i| 2.0 * (3.0 * (v[i].conj() * acc[i]).re + (c[i].conj() * jerk[i]).re));
        IntervalModel {
            rate: Poly::hermite5(rate, rate_d, rate_dd, h),
            c_dot_re: Poly::hermite5(v.map(|z| z.re), acc.map(|z| z.re), jerk.map(|z| z.re), h),
            c_dot_im: Poly::hermite5(v.map(|z| z.im), acc.map(|z| z.im), jerk.map(|z| z.im), h),
        }
    }
}

/// Running integrals from t = 0 to every grid point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricProfile {
    /// N(t_k): accumulated positive part of ∂ₜ|C|².
    pub n_blp: Vec<f64>,
    /// ∫₀^{t_k} ‖ρ̇‖ for the operator, trace and Hilbert–Schmidt norms.
    pub norm_op: Vec<f64>,
    pub norm_tr: Vec<f64>,
    pub norm_hs: Vec<f64>,
}

/// Cumulative backflow and norm integrals over the whole trajectory.
pub fn metric_profile(traj: &AmplitudeTrajectory) -> MetricProfile {
    let n = traj.len();
    let mut prof = MetricProfile {
        n_blp: vec![0.0; n],
        norm_op: vec![0.0; n],
        norm_tr: vec![0.0; n],
        norm_hs: vec![0.0; n],
    };
    if n < 2 {
        return prof;
    }
    let h = traj.step();
    for k in 0..n - 1 {
        let model = IntervalModel::new(traj, k, h);
        let pieces = model.rate.sign_pieces();
        let mut backflow = 0.0;
        let mut acc = [0.0; 3];
        for w in pieces.windows(2) {
            let (u, v) = (w[0], w[1]);
            if model.rate.eval(0.5 * (u + v)) > 0.0 {
                backflow += model.rate.integral(u, v);
            }
            let half = 0.5 * (v - u);
            for (x, wt) in GAUSS_NODES.iter().zip(GAUSS_WEIGHTS) {
                let s = u + half * (x + 1.0);
                let c_dot = Complex64::new(model.c_dot_re.eval(s), model.c_dot_im.eval(s));
                let d = state::state_derivative_from_rates(
                    &traj.params,
                    model.rate.eval(s),
                    c_dot,
                    traj.times[k] + s * h,
                );
                let [s1, s2] = d.singular_values();
                acc[0] += wt * half * s1;
                acc[1] += wt * half * (s1 + s2);
                acc[2] += wt * half * s1.hypot(s2);
            }
        }
        prof.n_blp[k + 1] = prof.n_blp[k] + h * backflow;
        prof.norm_op[k + 1] = prof.norm_op[k] + h * acc[0];
        prof.norm_tr[k + 1] = prof.norm_tr[k] + h * acc[1];
        prof.norm_hs[k + 1] = prof.norm_hs[k] + h * acc[2];
    }
    prof
}

/// Positive-part integral of the quintic Hermite interpolant through
/// samples (y_k, y′_k, y″_k) on a uniform grid of spacing h.
pub fn hermite_positive_part(h: f64, y: &[f64], dy: &[f64], ddy: &[f64]) -> f64 {
    (0..y.len().saturating_sub(1))
        .map(|k| {
            let p = Poly::hermite5(
                [y[k], y[k + 1]],
                [dy[k], dy[k + 1]],
                [ddy[k], ddy[k + 1]],
                h,
            );
            let pieces = p.sign_pieces();
            h * pieces
                .windows(2)
                .filter(|w| p.eval(0.5 * (w[0] + w[1])) > 0.0)
                .map(|w| p.integral(w[0], w[1]))
                .sum::<f64>()
        })
        .sum()
}

fn check_tau(traj: &AmplitudeTrajectory, tau_index: usize) -> Result<()> {
    if tau_index >= traj.len() {
        return Err(Error::domain(format!(
            "tau index {tau_index} outside a grid of {} points",
            traj.len()
        )));
    }
    if tau_index == 0 {
        return Err(Error::domain("driving time τ must be positive"));
    }
    Ok(())
}

fn truncated(traj: &AmplitudeTrajectory, tau_index: usize) -> AmplitudeTrajectory {
    let m = tau_index + 1;
    AmplitudeTrajectory {
        times: traj.times[..m].to_vec(),
        c: traj.c[..m].to_vec(),
        c_dot: traj.c_dot[..m].to_vec(),
        deficit: traj.deficit[..m].to_vec(),
        params: traj.params,
        solver_tag: traj.solver_tag,
        tolerances: traj.tolerances,
        stats: traj.stats,
    }
}

/// BLP non-Markovianity N(τ) = ∫₀^τ max(∂ₜ|C|², 0) dt, equivalently
/// ½(∫₀^τ |∂ₜ|C|²| dt + |C(τ)|² − 1).
pub fn blp_nonmarkovianity(traj: &AmplitudeTrajectory, tau_index: usize) -> f64 {
    if tau_index == 0 {
        return 0.0;
    }
    metric_profile(&truncated(traj, tau_index)).n_blp[tau_index]
}

fn excited_ratio(n_blp: f64, loss: f64) -> Result<f64> {
    let denom = 2.0 * n_blp + loss;
    if denom <= 0.0 {
        return Err(Error::domain("no evolution up to τ, the speed-limit ratio is undefined"));
    }
    Ok(loss / denom)
}

/// τ_QSLT/τ = (1 − |C(τ)|²)/(2N(τ) + 1 − |C(τ)|²) for the excited initial state.
pub fn qslt_ratio_excited(traj: &AmplitudeTrajectory, tau_index: usize) -> Result<f64> {
    check_tau(traj, tau_index)?;
    require_excited(&traj.params)?;
    excited_ratio(blp_nonmarkovianity(traj, tau_index), traj.population_loss(tau_index))
}

fn require_excited(params: &ModelParams) -> Result<()> {
    if params.theta != 0.0 {
        return Err(Error::domain(format!(
            "the closed form needs the excited initial state (θ = 0), got θ = {}",
            params.theta
        )));
    }
    Ok(())
}

/// τ_QSLT/τ per Schatten norm and the unified (largest) value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QsltRatios {
    pub unified: f64,
    pub op: f64,
    pub tr: f64,
    pub hs: f64,
}

fn general_ratios(loss: f64, integrals: [f64; 3]) -> Result<QsltRatios> {
    if integrals.iter().any(|i| *i <= 0.0) {
        return Err(Error::domain("ρ̇ vanishes on [0, τ], the speed-limit ratio is undefined"));
    }
    let [op, tr, hs] = integrals.map(|i| loss / i);
    Ok(QsltRatios {
        unified: op.max(tr).max(hs),
        op,
        tr,
        hs,
    })
}

/// τ_QSLT/τ = sin²L(ρ(0), ρ(τ)) / ∫₀^τ ‖ρ̇‖ dt for each norm, with
/// sin²L = 1 − ⟨ψ₀|ρ(τ)|ψ₀⟩ and the norms taken from the eigenvalues of ρ̇.
pub fn qslt_ratio_general(traj: &AmplitudeTrajectory, tau_index: usize) -> Result<QsltRatios> {
    check_tau(traj, tau_index)?;
    let prof = metric_profile(&truncated(traj, tau_index));
    general_ratios(
        state::infidelity_to_initial(traj, tau_index),
        [prof.norm_op[tau_index], prof.norm_tr[tau_index], prof.norm_hs[tau_index]],
    )
}

/// Independent route for the |+⟩ initial state (θ = π/2, φ = 0):
/// (1 − Re C(τ)) / ∫₀^τ √(|Ċ|² + (∂ₜ|C|²)²) dt.
pub fn qslt_ratio_plus_state(traj: &AmplitudeTrajectory, tau_index: usize) -> Result<f64> {
    check_tau(traj, tau_index)?;
    let p = &traj.params;
    if (p.theta - std::f64::consts::FRAC_PI_2).abs() > 1e-15 || p.phi != 0.0 {
        return Err(Error::domain("this form needs θ = π/2 and φ = 0"));
    }
    let h = traj.step();
    let mut integral = 0.0;
    for k in 0..tau_index {
        let model = IntervalModel::new(traj, k, h);
        let pieces = model.rate.sign_pieces();
        for w in pieces.windows(2) {
            let half = 0.5 * (w[1] - w[0]);
            for (x, wt) in GAUSS_NODES.iter().zip(GAUSS_WEIGHTS) {
                let s = w[0] + half * (x + 1.0);
                let re = model.c_dot_re.eval(s);
                let im = model.c_dot_im.eval(s);
                let rate = model.rate.eval(s);
                integral += h * wt * half * (re * re + im * im + rate * rate).sqrt();
            }
        }
    }
    if integral <= 0.0 {
        return Err(Error::domain("no evolution up to τ"));
    }
    Ok(traj.deficit[tau_index].re / integral)
}

fn rg_value(n_blp: f64, loss: f64) -> f64 {
    if loss.abs() < RG_GUARD {
        f64::NAN
    } else {
        n_blp / loss
    }
}

/// 𝕽g = N(τ)/(1 − |C(τ)|²) for the excited initial state; NaN when the
/// population has not moved (|1 − |C|²| < [`RG_GUARD`]).
pub fn r_g(traj: &AmplitudeTrajectory, tau_index: usize) -> Result<f64> {
    check_tau(traj, tau_index)?;
    require_excited(&traj.params)?;
    Ok(rg_value(blp_nonmarkovianity(traj, tau_index), traj.population_loss(tau_index)))
}

/// Experimental extension of 𝕽g to any initial state:
/// N(τ)/(1 − ⟨ψ₀|ρ(τ)|ψ₀⟩). Coincides with [`r_g`] for θ = 0.
pub fn r_g_general(traj: &AmplitudeTrajectory, tau_index: usize) -> Result<f64> {
    check_tau(traj, tau_index)?;
    Ok(rg_value(
        blp_nonmarkovianity(traj, tau_index),
        state::infidelity_to_initial(traj, tau_index),
    ))
}

/// All speed-limit quantities at one driving time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpeedMetrics {
    pub tau: f64,
    pub n_blp: f64,
    /// Unified ratio: the largest of the three per-norm ratios.
    pub qslt_ratio: f64,
    pub qslt_ratio_op: f64,
    pub qslt_ratio_tr: f64,
    pub qslt_ratio_hs: f64,
    /// Closed-form ratio for the excited state; `None` when θ ≠ 0.
    pub qslt_ratio_excited: Option<f64>,
    /// 𝕽g; for θ ≠ 0 this is the experimental N/(1 − fidelity) variant.
    pub r_g: f64,
    pub params: ModelParams,
}

fn metrics_from_profile(
    traj: &AmplitudeTrajectory,
    prof: &MetricProfile,
    k: usize,
) -> Result<SpeedMetrics> {
    check_tau(traj, k)?;
    let n_blp = prof.n_blp[k];
    let loss = state::infidelity_to_initial(traj, k);
    let ratios = general_ratios(loss, [prof.norm_op[k], prof.norm_tr[k], prof.norm_hs[k]])?;
    let excited = traj.params.theta == 0.0;
    Ok(SpeedMetrics {
        tau: traj.times[k],
        n_blp,
        qslt_ratio: ratios.unified,
        qslt_ratio_op: ratios.op,
        qslt_ratio_tr: ratios.tr,
        qslt_ratio_hs: ratios.hs,
        qslt_ratio_excited: if excited {
            Some(excited_ratio(n_blp, traj.population_loss(k))?)
        } else {
            None
        },
        r_g: rg_value(n_blp, loss),
        params: traj.params,
    })
}

/// Metrics at grid index `tau_index` of an existing trajectory.
pub fn metrics_at(traj: &AmplitudeTrajectory, tau_index: usize) -> Result<SpeedMetrics> {
    check_tau(traj, tau_index)?;
    metrics_from_profile(traj, &metric_profile(&truncated(traj, tau_index)), tau_index)
}

/// Metrics at every grid point after t = 0, from one pass of the
/// running integrals.
pub fn metrics_series(traj: &AmplitudeTrajectory) -> Result<Vec<SpeedMetrics>> {
    let prof = metric_profile(traj);
    (1..traj.len())
        .map(|k| metrics_from_profile(traj, &prof, k))
        .collect()
}

/// Trajectory on [0, τ] solved at [`METRIC_TOLERANCES`].
pub fn solve_for_metrics(
    params: &ModelParams,
    tau: f64,
    n_points: usize,
) -> Result<AmplitudeTrajectory> {
    solver::solve_ode_reform(params, tau, n_points, METRIC_TOLERANCES.rel, METRIC_TOLERANCES.abs)
}

/// Solve on [0, τ] with `n_points` samples and evaluate the metrics at τ.
pub fn speed_metrics(params: &ModelParams, tau: f64, n_points: usize) -> Result<SpeedMetrics> {
    let traj = solve_for_metrics(params, tau, n_points)?;
    metrics_at(&traj, n_points - 1)
}

/// [`speed_metrics`] with the grid doubled from `n_start` points until N(τ)
/// changes by less than `tol` (at most `max_doublings` times).
pub fn converged_speed_metrics(
    params: &ModelParams,
    tau: f64,
    n_start: usize,
    tol: f64,
    max_doublings: usize,
) -> Result<SpeedMetrics> {
    let mut n = n_start.max(3);
    let mut prev = speed_metrics(params, tau, n)?;
    for _ in 0..max_doublings {
        n = 2 * n - 1;
        let next = speed_metrics(params, tau, n)?;
        let converged = (next.n_blp - prev.n_blp).abs() < tol;
        prev = next;
        if converged {
            return Ok(prev);
        }
    }
    Err(Error::domain(format!(
        "N(τ) not converged to {tol} after {max_doublings} grid doublings"
    )))
}

/// Metrics over a γ/λ axis at fixed τ and λ.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub axis: Vec<f64>,
    pub metrics: Vec<SpeedMetrics>,
    pub tau: f64,
    pub eps: f64,
    /// First axis value with qslt_ratio < 1 − eps.
    pub transition_speedup: Option<f64>,
    /// First axis value with N > eps.
    pub transition_nonmarkov: Option<f64>,
}

/// Evaluate the metrics at driving time `tau` for γ = a·λ with a on `axis`
/// (λ, modulation and initial state from `base`). Points are evaluated in
/// parallel on the current rayon pool; the result is ordered by axis and
/// identical to a sequential run.
pub fn sweep_gamma_lambda(
    base: &ModelParams,
    tau: f64,
    axis: &[f64],
    eps: f64,
) -> Result<SweepResult> {
    if !(eps > 0.0) {
        return Err(Error::validation("eps", "must be positive"));
    }
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::validation("tau", "must be positive and finite"));
    }
    if axis.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::validation("axis", "must be strictly increasing"));
    }
    let n_points = solver::default_points(tau);
    let metrics = axis
        .par_iter()
        .map(|&a| {
            let mut p = *base;
            p.gamma = a * base.lambda;
            speed_metrics(&p, tau, n_points).map_err(|e| Error::AtAxisPoint {
                axis_value: a,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let first = |pred: &dyn Fn(&SpeedMetrics) -> bool| {
        axis.iter().zip(&metrics).find(|(_, m)| pred(m)).map(|(a, _)| *a)
    };
    Ok(SweepResult {
        transition_speedup: first(&|m| m.qslt_ratio < 1.0 - eps),
        transition_nonmarkov: first(&|m| m.n_blp > eps),
        axis: axis.to_vec(),
        metrics,
        tau,
        eps,
    })
}

/// Uniform axis `start, start + step, …` up to `stop` inclusive (with a
/// half-step tolerance), built from integer multiples to avoid drift.
pub fn uniform_axis(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(stop >= start) || !start.is_finite() || !stop.is_finite() {
        return Err(Error::validation("axis", "need finite start ≤ stop and step > 0"));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| start + i as f64 * step).collect())
}

/// Quantity differentiated along the γ/λ axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisQuantity {
    QsltRatio,
    Rg,
}

/// d(quantity)/d(γ/λ) over a sweep.
pub fn derivative_along_axis(result: &SweepResult, quantity: AxisQuantity) -> Result<Vec<f64>> {
    let values: Vec<f64> = result
        .metrics
        .iter()
        .map(|m| match quantity {
            AxisQuantity::QsltRatio => m.qslt_ratio,
            AxisQuantity::Rg => m.r_g,
        })
        .collect();
    finite_difference(&result.axis, &values)
}

/// Central differences inside, one-sided differences at the two ends.
pub fn finite_difference(x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    if x.len() != y.len() {
        return Err(Error::domain("axis and values differ in length"));
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::domain(format!("need at least 3 axis points, got {n}")));
    }
    Ok((0..n)
        .map(|i| {
            let (l, r) = match i {
                0 => (0, 1),
                _ if i == n - 1 => (n - 2, n - 1),
                _ => (i - 1, i + 1),
            };
            (y[r] - y[l]) / (x[r] - x[l])
        })
        .collect())
}

/// Pearson correlation of two equally long series.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len()) as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}
