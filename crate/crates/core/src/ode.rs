//! Adaptive Dormand–Prince 5(4) integrator for small fixed-size systems.

use crate::error::{Result, StaError};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions<T> {
    pub rtol: T,
    pub atol: T,
    pub initial_step: T,
    pub max_step: T,
    pub max_steps: usize,
}

impl<T: Real> Default for OdeOptions<T> {
    fn default() -> Self {
        OdeOptions {
            rtol: T::lit(1e-11),
            atol: T::lit(1e-12),
            initial_step: T::lit(1e-4),
            max_step: T::infinity(),
            max_steps: 10_000_000,
        }
    }
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// difference between the 5th and embedded 4th order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrates `y' = f(t, y)` from `t0`, returning the state at each of the
/// increasing `outputs` times (hit exactly, never interpolated).
///
/// `guard` is called after every accepted step and may abort the run.
pub fn integrate<T, const N: usize, F, G>(
    f: F,
    t0: T,
    y0: [T; N],
    outputs: &[T],
    opts: &OdeOptions<T>,
    mut guard: G,
) -> Result<Vec<[T; N]>>
where
    T: Real,
    F: Fn(T, &[T; N]) -> [T; N],
    G: FnMut(T, &[T; N]) -> Result<()>,
{
    let mut out = Vec::with_capacity(outputs.len());
    let mut t = t0;
    let mut y = y0;
    let mut h = opts.initial_step;
    let mut k1 = f(t, &y);
    let mut steps = 0usize;
    let tiny = T::epsilon() * T::lit(16.0);

    for &target in outputs {
        while target - t > tiny * (T::one() + t.abs()) {
            steps += 1;
            if steps > opts.max_steps {
                return Err(StaError::StepUnderflow { t: t.as_f64() });
            }
            let remaining = target - t;
            let last = h >= remaining;
            let step = if last { remaining } else { h.min(opts.max_step) };

            let mut k = [[T::zero(); N]; 7];
            k[0] = k1;
            for s in 1..7 {
                let mut ys = y;
                for (j, kj) in k.iter().enumerate().take(s) {
                    let a = T::lit(A[s][j]);
                    if a != T::zero() {
                        for i in 0..N {
                            ys[i] += step * a * kj[i];
                        }
                    }
                }
                k[s] = f(t + step * T::lit(C[s]), &ys);
            }
            // stage 7 is evaluated at the 5th order solution (FSAL)
            let mut y_new = y;
            for (j, kj) in k.iter().enumerate().take(6) {
                let b = T::lit(A[6][j]);
                for i in 0..N {
                    y_new[i] += step * b * kj[i];
                }
            }
            let mut err = T::zero();
            for i in 0..N {
                let mut e = T::zero();
                for (j, kj) in k.iter().enumerate() {
                    e += T::lit(E[j]) * kj[i];
                }
                let scale = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
                let r = step * e / scale;
                err += r * r;
            }
            err = (err / T::from_usize_lossy(N.max(1))).sqrt();

            if err <= T::one() {
                t = if last { target } else { t + step };
                y = y_new;
                k1 = k[6];
                guard(t, &y)?;
                let fac = if err == T::zero() {
                    T::lit(5.0)
                } else {
                    (T::lit(0.9) * err.powf(T::lit(-0.2))).min(T::lit(5.0))
                };
                if !last {
                    h = step * fac;
                }
            } else {
                let fac = if err.is_finite() {
                    (T::lit(0.9) * err.powf(T::lit(-0.25))).max(T::lit(0.1))
                } else {
                    T::lit(0.1)
                };
                h = step * fac;
                if h < tiny * (T::one() + t.abs()) {
                    return Err(StaError::StepUnderflow { t: t.as_f64() });
                }
            }
        }
        out.push(y);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_matches_cosine() {
        let ts: Vec<f64> = (0..=20).map(|i| i as f64 * 0.5).collect();
        let sol = integrate(
            |_, y: &[f64; 2]| [y[1], -y[0]],
            0.0,
            [1.0, 0.0],
            &ts,
            &OdeOptions::default(),
            |_, _| Ok(()),
        )
        .unwrap();
        for (t, y) in ts.iter().zip(&sol) {
            assert!((y[0] - t.cos()).abs() < 1e-9);
        }
    }

    #[test]
    fn guard_aborts() {
        let r = integrate(
            |_, y: &[f64; 1]| [y[0]],
            0.0,
            [1.0],
            &[10.0],
            &OdeOptions::default(),
            |t, y| {
                if y[0] > 100.0 {
                    Err(StaError::BlowUp { t, rho: y[0] })
                } else {
                    Ok(())
                }
            },
        );
        assert!(matches!(r, Err(StaError::BlowUp { .. })));
    }
}
