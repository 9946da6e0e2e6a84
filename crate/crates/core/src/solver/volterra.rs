use num_complex::Complex64;

use super::{check_grid, uniform_grid, AmplitudeTrajectory, SolverTag, Tolerances};
use crate::error::Result;
use crate::params::ModelParams;

/// Trapezoidal product integration of the integro-differential equation.
///
/// With qⱼ = e^{−iϕ(tⱼ)} Cⱼ the memory integral at tₙ is the trapezoid sum
/// Iₙ = h[½e^{−λtₙ}q₀ + Σⱼ e^{−λ(tₙ−tⱼ)}qⱼ + ½qₙ] and Ċₙ = −(γλ/2)e^{iϕ(tₙ)}Iₙ.
/// Cₙ₊₁ follows from the implicit trapezoid step, which is linear in Cₙ₊₁.
/// The full history is re-summed each step, so the cost is O(n²).
pub fn solve_volterra(
    params: &ModelParams,
    t_end: f64,
    n_points: usize,
) -> Result<AmplitudeTrajectory> {
    check_grid(t_end, n_points)?;
    params.validate()?;
    let times = uniform_grid(t_end, n_points);
    let h = t_end / (n_points - 1) as f64;
    let k = params.kernel_strength();

    let rot: Vec<Complex64> = times
        .iter()
        .map(|&t| Complex64::from_polar(1.0, params.modulation_phase(t)))
        .collect();
    let decay: Vec<f64> = (0..n_points)
        .map(|m| (-params.lambda * m as f64 * h).exp())
        .collect();

    let mut c = vec![Complex64::new(0.0, 0.0); n_points];
    let mut c_dot = vec![Complex64::new(0.0, 0.0); n_points];
    let mut q = vec![Complex64::new(0.0, 0.0); n_points];
    c[0] = Complex64::new(1.0, 0.0);
    q[0] = rot[0].conj();

    for n in 0..n_points - 1 {
        // history part of I_{n+1}: everything except the unknown endpoint
        let mut s = q[0] * (0.5 * decay[n + 1]);
        for j in 1..=n {
            s += q[j] * decay[n + 1 - j];
        }
        s *= h;
        let rhs = c[n] + c_dot[n] * (0.5 * h) - rot[n + 1] * s * (0.5 * h * k);
        c[n + 1] = rhs / (1.0 + 0.25 * k * h * h);
        q[n + 1] = rot[n + 1].conj() * c[n + 1];
        let i_next = s + q[n + 1] * (0.5 * h);
        c_dot[n + 1] = -rot[n + 1] * i_next * k;
    }

    let traj = AmplitudeTrajectory::from_samples(
        times,
        c,
        c_dot,
        *params,
        SolverTag::VolterraQuadrature,
        Tolerances { rel: 0.0, abs: 0.0 },
    );
    traj.check_modulus()?;
    Ok(traj)
}
