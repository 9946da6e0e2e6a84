//! Dormand–Prince 5(4) with Hairer's fourth-order continuous extension,
//! specialised to small fixed-size complex state vectors.

use num_complex::Complex64;

use crate::error::{Error, Result};

type State<const N: usize> = [Complex64; N];

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];

// fifth-order minus embedded fourth-order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

#[derive(Debug, Clone, Copy)]
pub struct Settings {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub safety: f64,
    pub fac_min: f64,
    pub fac_max: f64,
    pub max_steps: usize,
}

impl Settings {
    pub fn new(rel_tol: f64, abs_tol: f64) -> Self {
        Settings {
            rel_tol,
            abs_tol,
            safety: 0.9,
            fac_min: 0.2,
            fac_max: 10.0,
            max_steps: 5_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

fn axpy<const N: usize>(y: &State<N>, h: f64, ks: &[State<N>], coef: &[f64]) -> State<N> {
    let mut out = *y;
    for (k, &a) in ks.iter().zip(coef) {
        if a != 0.0 {
            for i in 0..N {
                out[i] += k[i] * (h * a);
            }
        }
    }
    out
}

/// Weighted RMS norm over real and imaginary parts, Hairer style.
fn error_norm<const N: usize>(
    err: &State<N>,
    y0: &State<N>,
    y1: &State<N>,
    s: &Settings,
) -> f64 {
    let mut acc = 0.0;
    for i in 0..N {
        let parts = [
            (err[i].re, y0[i].re, y1[i].re),
            (err[i].im, y0[i].im, y1[i].im),
        ];
        for (e, a, b) in parts {
            let sc = s.abs_tol + s.rel_tol * a.abs().max(b.abs());
            acc += (e / sc) * (e / sc);
        }
    }
    (acc / (2 * N) as f64).sqrt()
}

/// Integrates `y' = f(t, y)` from `t0` and reports the state at every entry
/// of `sample_times` (non-decreasing, all ≥ `t0`) through dense output.
pub fn integrate<const N: usize, F>(
    f: F,
    t0: f64,
    y0: State<N>,
    sample_times: &[f64],
    settings: &Settings,
) -> Result<(Vec<State<N>>, Stats)>
where
    F: Fn(f64, &State<N>) -> State<N>,
{
    let mut out = Vec::with_capacity(sample_times.len());
    let mut stats = Stats::default();
    let Some(&t_end) = sample_times.last() else {
        return Ok((out, stats));
    };
    let mut next = 0;
    while next < sample_times.len() && sample_times[next] <= t0 {
        out.push(y0);
        next += 1;
    }
    if next == sample_times.len() {
        return Ok((out, stats));
    }

    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);
    stats.rhs_evals += 1;
    let mut h = initial_step(&f, t, &y, &k1, t_end - t0, settings, &mut stats);

    while next < sample_times.len() {
        if stats.accepted + stats.rejected >= settings.max_steps {
            return Err(Error::Solver {
                time: t,
                reason: format!("step budget of {} exhausted", settings.max_steps),
            });
        }
        let min_step = 16.0 * f64::EPSILON * t.abs().max(1.0);
        if h < min_step {
            return Err(Error::Solver {
                time: t,
                reason: format!("step size underflow (h = {h:e})"),
            });
        }
        let mut last = false;
        if t + h >= t_end {
            h = t_end - t;
            last = true;
        }

        let mut k = [[Complex64::new(0.0, 0.0); N]; 7];
        k[0] = k1;
        for s in 1..7 {
            let ys = axpy(&y, h, &k[..s], &A[s][..s]);
            k[s] = f(t + C[s] * h, &ys);
        }
        stats.rhs_evals += 6;
        // stage 7 is evaluated at the fifth-order solution (FSAL)
        let y_new = axpy(&y, h, &k[..6], &A[6]);
        let err_vec = axpy(&[Complex64::new(0.0, 0.0); N], h, &k, &E);
        let err = error_norm(&err_vec, &y, &y_new, settings);

        if err <= 1.0 {
            stats.accepted += 1;
            let t_new = if last { t_end } else { t + h };
            // continuous extension coefficients
            let mut r = [[Complex64::new(0.0, 0.0); N]; 5];
            let rd = axpy(&[Complex64::new(0.0, 0.0); N], h, &k, &D);
            for i in 0..N {
                let ydiff = y_new[i] - y[i];
                let bspl = k[0][i] * h - ydiff;
                r[0][i] = y[i];
                r[1][i] = ydiff;
                r[2][i] = bspl;
                r[3][i] = ydiff - k[6][i] * h - bspl;
                r[4][i] = rd[i];
            }
            while next < sample_times.len() && (sample_times[next] <= t_new || last) {
                let s = ((sample_times[next] - t) / h).clamp(0.0, 1.0);
                let s1 = 1.0 - s;
                let mut ys = [Complex64::new(0.0, 0.0); N];
                for i in 0..N {
                    ys[i] = r[0][i] + (r[1][i] + (r[2][i] + (r[3][i] + r[4][i] * s1) * s) * s1) * s;
                }
                out.push(ys);
                next += 1;
            }
            t = t_new;
            y = y_new;
            k1 = k[6];
            if last {
                break;
            }
            let fac = (settings.safety * err.max(1e-10).powf(-0.2))
                .clamp(settings.fac_min, settings.fac_max);
            h *= fac;
        } else {
            stats.rejected += 1;
            let fac = (settings.safety * err.powf(-0.2)).max(settings.fac_min);
            h *= fac;
        }
    }
    Ok((out, stats))
}

fn initial_step<const N: usize, F>(
    f: &F,
    t: f64,
    y: &State<N>,
    f0: &State<N>,
    span: f64,
    s: &Settings,
    stats: &mut Stats,
) -> f64
where
    F: Fn(f64, &State<N>) -> State<N>,
{
    let scale = |i: usize, part: fn(Complex64) -> f64| s.abs_tol + s.rel_tol * part(y[i]).abs();
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for i in 0..N {
        for part in [(|c: Complex64| c.re) as fn(Complex64) -> f64, |c| c.im] {
            let sc = scale(i, part);
            d0 += (part(y[i]) / sc).powi(2);
            d1 += (part(f0[i]) / sc).powi(2);
        }
    }
    let n = (2 * N) as f64;
    let (d0, d1) = ((d0 / n).sqrt(), (d1 / n).sqrt());
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    h0 = h0.min(span);
    let y1 = axpy(y, h0, std::slice::from_ref(f0), &[1.0]);
    let f1 = f(t + h0, &y1);
    stats.rhs_evals += 1;
    let mut d2 = 0.0;
    for i in 0..N {
        for part in [(|c: Complex64| c.re) as fn(Complex64) -> f64, |c| c.im] {
            let sc = scale(i, part);
            d2 += ((part(f1[i]) - part(f0[i])) / sc).powi(2);
        }
    }
    let d2 = (d2 / n).sqrt() / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(span)
}
