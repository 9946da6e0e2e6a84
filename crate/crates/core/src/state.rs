//! Reduced density matrix of the qubit, its time derivative, and the
//! quantities read off them.
//!
//! Basis ordering is {|e⟩, |g⟩}: `rho[0][0]` is the excited population.

use num_complex::Complex64;

use crate::params::ModelParams;
use crate::solver::AmplitudeTrajectory;

pub type Mat2 = [[Complex64; 2]; 2];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Lower bound on eigenvalues accepted as positive semidefinite.
pub const POSITIVITY_TOL: f64 = -1e-10;

/// Eigenvalues of a Hermitian 2×2 matrix, ascending.
pub fn hermitian_eigenvalues(m: &Mat2) -> [f64; 2] {
    let mean = 0.5 * (m[0][0].re + m[1][1].re);
    let half_diff = 0.5 * (m[0][0].re - m[1][1].re);
    let r = half_diff.hypot(m[0][1].norm());
    [mean - r, mean + r]
}

fn hermiticity_error(m: &Mat2) -> f64 {
    let off = (m[0][1] - m[1][0].conj()).norm();
    off.max(m[0][0].im.abs()).max(m[1][1].im.abs())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitState {
    pub rho: Mat2,
    pub t: f64,
}

impl QubitState {
    pub fn trace(&self) -> Complex64 {
        self.rho[0][0] + self.rho[1][1]
    }

    pub fn hermiticity_error(&self) -> f64 {
        hermiticity_error(&self.rho)
    }

    pub fn eigenvalues(&self) -> [f64; 2] {
        hermitian_eigenvalues(&self.rho)
    }

    /// Trace one, Hermitian and positive semidefinite within the crate's
    /// tolerances.
    pub fn is_physical(&self) -> bool {
        (self.trace() - 1.0).norm() <= 1e-12
            && self.hermiticity_error() <= 1e-12
            && self.eigenvalues()[0] >= POSITIVITY_TOL
    }

    /// Bloch vector (⟨σx⟩, ⟨σy⟩, ⟨σz⟩).
    pub fn bloch(&self) -> [f64; 3] {
        [
            2.0 * self.rho[0][1].re,
            -2.0 * self.rho[0][1].im,
            self.rho[0][0].re - self.rho[1][1].re,
        ]
    }

    /// Inverse of [`Self::bloch`].
    pub fn from_bloch(v: [f64; 3], t: f64) -> Self {
        let off = Complex64::new(0.5 * v[0], -0.5 * v[1]);
        QubitState {
            rho: [
                [Complex64::new(0.5 * (1.0 + v[2]), 0.0), off],
                [off.conj(), Complex64::new(0.5 * (1.0 - v[2]), 0.0)],
            ],
            t,
        }
    }

    pub fn excited_population(&self) -> f64 {
        self.rho[0][0].re
    }

    /// Sum of absolute off-diagonal entries.
    pub fn l1_coherence(&self) -> f64 {
        self.rho[0][1].norm() + self.rho[1][0].norm()
    }

    /// ⟨ψ|ρ|ψ⟩ for a pure state ψ given by its components.
    pub fn expectation(&self, psi: [Complex64; 2]) -> f64 {
        let mut acc = ZERO;
        for i in 0..2 {
            for j in 0..2 {
                acc += psi[i].conj() * self.rho[i][j] * psi[j];
            }
        }
        acc.re
    }
}

/// dρ/dt at a grid point, with its Schatten norms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateDerivative {
    pub rho_dot: Mat2,
    pub t: f64,
}

impl StateDerivative {
    pub fn trace(&self) -> Complex64 {
        self.rho_dot[0][0] + self.rho_dot[1][1]
    }

    pub fn hermiticity_error(&self) -> f64 {
        hermiticity_error(&self.rho_dot)
    }

    /// Singular values, descending. For a Hermitian matrix these are the
    /// absolute eigenvalues; for a traceless one the two coincide.
    pub fn singular_values(&self) -> [f64; 2] {
        let [lo, hi] = hermitian_eigenvalues(&self.rho_dot);
        let (a, b) = (lo.abs(), hi.abs());
        if a >= b {
            [a, b]
        } else {
            [b, a]
        }
    }

    pub fn trace_norm(&self) -> f64 {
        let [s1, s2] = self.singular_values();
        s1 + s2
    }

    pub fn hilbert_schmidt_norm(&self) -> f64 {
        let [s1, s2] = self.singular_values();
        s1.hypot(s2)
    }

    pub fn operator_norm(&self) -> f64 {
        self.singular_values()[0]
    }

    pub fn norm(&self, kind: NormKind) -> f64 {
        match kind {
            NormKind::Operator => self.operator_norm(),
            NormKind::Trace => self.trace_norm(),
            NormKind::HilbertSchmidt => self.hilbert_schmidt_norm(),
        }
    }
}

/// The three Schatten norms entering the speed-limit bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    Operator,
    Trace,
    HilbertSchmidt,
}

impl NormKind {
    pub const ALL: [NormKind; 3] = [NormKind::Operator, NormKind::Trace, NormKind::HilbertSchmidt];

    /// ‖A‖ / s for the traceless Hermitian 2×2 case, where both singular
    /// values equal s.
    pub fn traceless_factor(self) -> f64 {
        match self {
            NormKind::Operator => 1.0,
            NormKind::Trace => 2.0,
            NormKind::HilbertSchmidt => std::f64::consts::SQRT_2,
        }
    }
}

/// Initial pure state cos(θ/2)|e⟩ + sin(θ/2)e^{iφ}|g⟩.
pub fn initial_vector(params: &ModelParams) -> [Complex64; 2] {
    let half = 0.5 * params.theta;
    [
        Complex64::new(half.cos(), 0.0),
        Complex64::from_polar(half.sin(), params.phi),
    ]
}

/// ρ(t) for amplitude `c`:
/// ρ_ee = cos²(θ/2)|C|², ρ_eg = ½ sinθ e^{−iφ} C.
pub fn density_matrix_for(params: &ModelParams, c: Complex64, t: f64) -> QubitState {
    let pop = (0.5 * params.theta).cos().powi(2) * c.norm_sqr();
    let off = Complex64::from_polar(0.5 * params.theta.sin(), -params.phi) * c;
    QubitState {
        rho: [
            [Complex64::new(pop, 0.0), off],
            [off.conj(), Complex64::new(1.0 - pop, 0.0)],
        ],
        t,
    }
}

pub fn density_matrix(traj: &AmplitudeTrajectory, k: usize) -> QubitState {
    density_matrix_for(&traj.params, traj.c[k], traj.times[k])
}

/// ℓ1 coherence |sinθ|·|C(t_k)|.
pub fn coherence_l1(traj: &AmplitudeTrajectory, k: usize) -> f64 {
    traj.params.theta.sin().abs() * traj.c[k].norm()
}

/// ⟨ψ₀|ρ(t_k)|ψ₀⟩, the squared cosine of the Bures angle to the initial state.
pub fn fidelity_to_initial(traj: &AmplitudeTrajectory, k: usize) -> f64 {
    density_matrix(traj, k).expectation(initial_vector(&traj.params))
}

/// 1 − ⟨ψ₀|ρ(t_k)|ψ₀⟩ = cos⁴(θ/2)(1 − |C|²) + cos²(θ/2) sin²(θ/2)|1 − C|²,
/// evaluated from the stored deficit 1 − C so that it keeps full relative
/// precision when the state has barely moved.
pub fn infidelity_to_initial(traj: &AmplitudeTrajectory, k: usize) -> f64 {
    let (s, c) = (0.5 * traj.params.theta).sin_cos();
    let c2 = c * c;
    c2 * c2 * traj.population_loss(k) + c2 * s * s * traj.deficit[k].norm_sqr()
}

/// dρ/dt from (C, Ċ): the diagonal carries ±cos²(θ/2)·∂ₜ|C|², the
/// off-diagonal ½ sinθ e^{−iφ} Ċ.
pub fn state_derivative_for(
    params: &ModelParams,
    c: Complex64,
    c_dot: Complex64,
    t: f64,
) -> StateDerivative {
    let rate = 2.0 * (c.conj() * c_dot).re;
    state_derivative_from_rates(params, rate, c_dot, t)
}

/// dρ/dt built from a population rate ∂ₜ|C|² and an amplitude rate Ċ that
/// need not come from the same grid point (e.g. interpolated values).
pub fn state_derivative_from_rates(
    params: &ModelParams,
    diag_rate: f64,
    off_rate: Complex64,
    t: f64,
) -> StateDerivative {
    let a = (0.5 * params.theta).cos().powi(2) * diag_rate;
    let b = Complex64::from_polar(0.5 * params.theta.sin(), -params.phi) * off_rate;
    StateDerivative {
        rho_dot: [[Complex64::new(a, 0.0), b], [b.conj(), Complex64::new(-a, 0.0)]],
        t,
    }
}

pub fn state_derivative(traj: &AmplitudeTrajectory, k: usize) -> StateDerivative {
    state_derivative_for(&traj.params, traj.c[k], traj.c_dot[k], traj.times[k])
}

/// d²ρ/dt², from C̈ and ∂ₜ²|C|² = 2(|Ċ|² + Re C*C̈).
pub fn state_second_derivative(traj: &AmplitudeTrajectory, k: usize) -> StateDerivative {
    let c = traj.c[k];
    let c_dot = traj.c_dot[k];
    let c_ddot = traj.c_ddot(k);
    let rate_dot = 2.0 * (c_dot.norm_sqr() + (c.conj() * c_ddot).re);
    state_derivative_from_rates(&traj.params, rate_dot, c_ddot, traj.times[k])
}

#[cfg(test)]
pub(crate) mod tests {
    use std::f64::consts::{FRAC_PI_2, PI};

    use nalgebra::Matrix2;
    use proptest::prelude::*;

    use super::*;
    use crate::solver::{self, SolverTag, Tolerances};

    /// One-point trajectory carrying a chosen (C, Ċ).
    pub(crate) fn point(params: ModelParams, c: Complex64, c_dot: Complex64) -> AmplitudeTrajectory {
        AmplitudeTrajectory::from_samples(
            vec![0.7],
            vec![c],
            vec![c_dot],
            params,
            SolverTag::OdeReform,
            Tolerances::default(),
        )
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn oracle_singular_values(m: &Mat2) -> [f64; 2] {
        let a = Matrix2::new(m[0][0], m[0][1], m[1][0], m[1][1]);
        let svd = a.svd(false, false);
        let mut s = [svd.singular_values[0], svd.singular_values[1]];
        s.sort_by(|x, y| y.partial_cmp(x).unwrap());
        s
    }

    #[test]
    fn excited_initial_state() {
        let p = ModelParams::new(1.0, 1.0);
        let s = density_matrix(&point(p, c(1.0, 0.0), c(0.0, 0.0)), 0);
        assert_eq!(s.rho[0][0], c(1.0, 0.0));
        assert_eq!(s.rho[1][1], c(0.0, 0.0));
        assert_eq!(s.rho[0][1], c(0.0, 0.0));
    }

    #[test]
    fn plus_state_projector() {
        let p = ModelParams::new(1.0, 1.0).with_state(FRAC_PI_2, 0.0);
        let s = density_matrix(&point(p, c(1.0, 0.0), c(0.0, 0.0)), 0);
        for row in s.rho {
            for e in row {
                assert!((e - c(0.5, 0.0)).norm() < 1e-15);
            }
        }
        assert!((s.bloch()[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn substitution_example() {
        let p = ModelParams::new(1.0, 1.0).with_state(FRAC_PI_2, 0.0);
        let s = density_matrix(&point(p, c(0.6, 0.0), c(0.0, 0.0)), 0);
        assert!((s.rho[0][0].re - 0.18).abs() < 1e-15);
        assert!((s.rho[0][1] - c(0.3, 0.0)).norm() < 1e-15);
        assert!(s.is_physical());
    }

    #[test]
    fn coherence_examples() {
        let p0 = ModelParams::new(1.0, 1.0);
        assert_eq!(coherence_l1(&point(p0, c(0.3, 0.4), c(0.0, 0.0)), 0), 0.0);
        let p = p0.with_state(FRAC_PI_2, 0.0);
        assert!((coherence_l1(&point(p, c(1.0, 0.0), c(0.0, 0.0)), 0) - 1.0).abs() < 1e-15);
        assert!((coherence_l1(&point(p, c(0.6, 0.8), c(0.0, 0.0)), 0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn fidelity_examples() {
        let p0 = ModelParams::new(1.0, 1.0);
        let traj = point(p0, c(0.3, 0.4), c(0.0, 0.0));
        assert!((fidelity_to_initial(&traj, 0) - 0.25).abs() < 1e-15);

        let p = ModelParams::new(1.0, 1.0).with_state(1.1, 2.3);
        assert!((fidelity_to_initial(&point(p, c(1.0, 0.0), c(0.0, 0.0)), 0) - 1.0).abs() < 1e-15);

        // |+⟩: explicit quadratic form vs matrix–vector contraction
        let plus = ModelParams::new(1.0, 1.0).with_state(FRAC_PI_2, 0.0);
        for amp in [c(0.6, 0.8), c(-0.2, 0.1), c(0.05, -0.7)] {
            let traj = point(plus, amp, c(0.0, 0.0));
            let rho = density_matrix(&traj, 0).rho;
            let v = [c(FRAC_PI_2 / 2.0, 0.0).cos(), c(FRAC_PI_2 / 2.0, 0.0).sin()];
            let rv = [
                rho[0][0] * v[0] + rho[0][1] * v[1],
                rho[1][0] * v[0] + rho[1][1] * v[1],
            ];
            let contraction = (v[0].conj() * rv[0] + v[1].conj() * rv[1]).re;
            let closed = 0.5 * (1.0 + amp.re);
            assert!((fidelity_to_initial(&traj, 0) - contraction).abs() < 1e-15);
            assert!((closed - contraction).abs() < 1e-15);
        }
    }

    #[test]
    fn derivative_examples() {
        let p0 = ModelParams::new(1.0, 1.0);
        let d = state_derivative(&point(p0, c(0.6, 0.2), c(-0.3, 0.1)), 0);
        let rate = 2.0 * (c(0.6, 0.2).conj() * c(-0.3, 0.1)).re;
        let sv = d.singular_values();
        assert!((sv[0] - rate.abs()).abs() < 1e-15 && (sv[1] - rate.abs()).abs() < 1e-15);
        assert!((d.operator_norm() - rate.abs()).abs() < 1e-15);

        let p = p0.with_state(FRAC_PI_2, 0.0);
        let still = state_derivative(&point(p, c(0.6, 0.0), c(0.0, 0.0)), 0);
        assert_eq!(still.trace_norm(), 0.0);
        assert_eq!(still.hilbert_schmidt_norm(), 0.0);
        assert_eq!(still.operator_norm(), 0.0);
    }

    #[test]
    fn plus_state_operator_norm_closed_form() {
        // θ = π/2: ‖ρ̇‖_op = ½√(|Ċ|² + (∂ₜ|C|²)²)
        let p = ModelParams::new(1.0, 1.0).with_state(FRAC_PI_2, 0.0);
        let (amp, rate) = (c(0.5, -0.3), c(0.2, 0.4));
        let d = state_derivative(&point(p, amp, rate), 0);
        let pop_rate = 2.0 * (amp.conj() * rate).re;
        let want = 0.5 * (rate.norm_sqr() + pop_rate * pop_rate).sqrt();
        assert!((d.operator_norm() - want).abs() < 1e-15);
    }

    #[test]
    fn physical_along_a_trajectory() {
        for (theta, phi) in [(0.0, 0.0), (FRAC_PI_2, 0.0), (2.0, 4.0), (PI, 1.0)] {
            let p = ModelParams::new(1.0, 0.1)
                .with_modulation(5.0, 0.5)
                .with_state(theta, phi);
            let traj = solver::solve(&p, 10.0, 1001).unwrap();
            for k in 0..traj.len() {
                let s = density_matrix(&traj, k);
                assert!(s.is_physical(), "k={k}");
                assert!((coherence_l1(&traj, k) - 2.0 * s.rho[0][1].norm()).abs() < 1e-15);
                let d = state_derivative(&traj, k);
                assert!(d.trace().norm() <= 1e-12 && d.hermiticity_error() <= 1e-12);
                let f = fidelity_to_initial(&traj, k);
                assert!((-1e-12..=1.0 + 1e-12).contains(&f));
            }
        }
    }

    #[test]
    fn bloch_round_trip() {
        let p = ModelParams::new(1.0, 1.0).with_state(1.2, 5.0);
        let s = density_matrix(&point(p, c(0.3, -0.5), c(0.0, 0.0)), 0);
        let back = QubitState::from_bloch(s.bloch(), s.t);
        for i in 0..2 {
            for j in 0..2 {
                assert!((back.rho[i][j] - s.rho[i][j]).norm() < 1e-15);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn closed_form_singular_values_match_svd(
            re in -1.0f64..1.0, im in -1.0f64..1.0,
            dre in -2.0f64..2.0, dim in -2.0f64..2.0,
            theta in 0.0f64..PI, phi in 0.0f64..std::f64::consts::TAU,
        ) {
            let p = ModelParams::new(1.0, 1.0).with_state(theta, phi);
            let d = state_derivative(&point(p, c(re, im), c(dre, dim)), 0);
            let want = oracle_singular_values(&d.rho_dot);
            let got = d.singular_values();
            prop_assert!((got[0] - want[0]).abs() < 1e-12);
            prop_assert!((got[1] - want[1]).abs() < 1e-12);
            prop_assert!(d.operator_norm() <= d.trace_norm() + 1e-15);
            prop_assert!(d.operator_norm() <= std::f64::consts::SQRT_2 * d.hilbert_schmidt_norm() + 1e-15);
            for kind in NormKind::ALL {
                prop_assert!((d.norm(kind) - kind.traceless_factor() * got[0]).abs() < 1e-12);
            }
        }
    }
}
