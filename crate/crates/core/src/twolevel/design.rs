use crate::error::{Result, StaError};
use crate::grid::{SampledFunction, TimeGrid};
use crate::ode::{integrate, OdeOptions};
use crate::scalar::Real;

use super::{from_cartesian, TwoLevelProtocol};

/// Flat pulse of area `pi` and phase `alpha`.
pub fn pi_pulse<T: Real>(tf: T, alpha: T, intervals: usize) -> Result<TwoLevelProtocol<T>> {
    scaled_pulse(tf, alpha, T::PI(), intervals)
}

/// Flat resonant pulse `Ω_c = e^{iα} area / T`.
pub fn scaled_pulse<T: Real>(tf: T, alpha: T, area: T, intervals: usize) -> Result<TwoLevelProtocol<T>> {
    let grid = positive_grid(tf, intervals)?;
    let amp = area / tf;
    let (s, c) = alpha.sin_cos();
    Ok(TwoLevelProtocol::from_fn(grid, "pi-pulse", |_| (amp * c, amp * s, T::zero())))
}

/// Constant coupling with `Δ = rate (t - T/2)`.
pub fn landau_zener<T: Real>(omega_r0: T, rate: T, tf: T, intervals: usize) -> Result<TwoLevelProtocol<T>> {
    let grid = positive_grid(tf, intervals)?;
    let mid = T::lit(0.5) * tf;
    Ok(TwoLevelProtocol::from_fn(grid, "landau-zener", |t| (omega_r0, T::zero(), rate * (t - mid))))
}

/// Landau–Zener-like sweep `Δ = Δ0 (2 S(t/T) - 1)` with the quintic
/// smoothstep `S`, so `Δ'` and `Δ''` vanish at both edges.
pub fn smooth_landau_zener<T: Real>(omega_r0: T, delta0: T, tf: T, intervals: usize) -> Result<TwoLevelProtocol<T>> {
    let grid = positive_grid(tf, intervals)?;
    Ok(TwoLevelProtocol::from_fn(grid, "smooth-landau-zener", |t| {
        let s = t / tf;
        (omega_r0, T::zero(), delta0 * (T::lit(2.0) * smoothstep(s) - T::one()))
    }))
}

fn positive_grid<T: Real>(tf: T, intervals: usize) -> Result<TimeGrid<T>> {
    if !(tf > T::zero()) {
        return Err(StaError::InvalidSpec("protocol duration must be positive".into()));
    }
    TimeGrid::new(tf, intervals)
}

/// `10 s^3 - 15 s^4 + 6 s^5`
pub(crate) fn smoothstep<T: Real>(s: T) -> T {
    s * s * s * (T::lit(10.0) + s * (T::lit(-15.0) + T::lit(6.0) * s))
}

fn smoothstep_d<T: Real>(s: T) -> T {
    T::lit(30.0) * s * s * (T::one() - s) * (T::one() - s)
}

/// Invariant parameters `Θ, α, γ` and their time derivatives on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxiliaryAngles<T> {
    pub theta: SampledFunction<T>,
    pub theta_dot: SampledFunction<T>,
    pub alpha: SampledFunction<T>,
    pub alpha_dot: SampledFunction<T>,
    pub gamma: SampledFunction<T>,
    pub gamma_dot: SampledFunction<T>,
}

impl<T: Real> AuxiliaryAngles<T> {
    /// `f(t) = [Θ, Θ', α, α', γ, γ']`
    pub fn from_fn(grid: TimeGrid<T>, f: impl Fn(T) -> [T; 6]) -> Self {
        let vals: Vec<[T; 6]> = grid.times().into_iter().map(f).collect();
        let col = |k: usize| SampledFunction::new(grid, vals.iter().map(|v| v[k]).collect()).expect("grid length");
        AuxiliaryAngles {
            theta: col(0),
            theta_dot: col(1),
            alpha: col(2),
            alpha_dot: col(3),
            gamma: col(4),
            gamma_dot: col(5),
        }
    }

    /// Derivatives by finite differences.
    pub fn from_samples(theta: SampledFunction<T>, alpha: SampledFunction<T>, gamma: SampledFunction<T>) -> Result<Self> {
        if theta.grid != alpha.grid || theta.grid != gamma.grid {
            return Err(StaError::GridMismatch("angles on different grids".into()));
        }
        Ok(AuxiliaryAngles {
            theta_dot: theta.derivative(),
            alpha_dot: alpha.derivative(),
            gamma_dot: gamma.derivative(),
            theta,
            alpha,
            gamma,
        })
    }

    pub fn grid(&self) -> TimeGrid<T> {
        self.theta.grid
    }

    /// Whether `Θ(0) = 0` and `Θ(T) = π` within `tol`.
    pub fn inverts(&self, tol: T) -> bool {
        self.theta.first().abs() <= tol && (self.theta.last() - T::PI()).abs() <= tol
    }
}

/// `Θ = πt/T, α = -π/2, γ = 0`
pub fn flat_pi_angles<T: Real>(tf: T, intervals: usize) -> Result<AuxiliaryAngles<T>> {
    let grid = positive_grid(tf, intervals)?;
    let w = T::PI() / tf;
    let z = T::zero();
    Ok(AuxiliaryAngles::from_fn(grid, |t| [w * t, w, -T::FRAC_PI_2(), z, z, z]))
}

/// `Θ = πt/T - sin(2πt/T)/12`, `α = -π/4`, `γ = 0`.
pub fn approximate_noise_angles<T: Real>(tf: T, intervals: usize) -> Result<AuxiliaryAngles<T>> {
    let grid = positive_grid(tf, intervals)?;
    let pi = T::PI();
    let z = T::zero();
    let twelve = T::lit(12.0);
    Ok(AuxiliaryAngles::from_fn(grid, |t| {
        let s = t / tf;
        let th = pi * s - (T::lit(2.0) * pi * s).sin() / twelve;
        let thd = (pi - pi / T::lit(6.0) * (T::lit(2.0) * pi * s).cos()) / tf;
        [th, thd, -T::FRAC_PI_4(), z, z, z]
    }))
}

/// `Θ = π S(t/T)` with the quintic smoothstep and the given `α, γ` rules.
pub fn quintic_angles<T: Real>(
    tf: T,
    intervals: usize,
    alpha: T,
    gamma: impl Fn(T, T) -> (T, T),
) -> Result<AuxiliaryAngles<T>> {
    let grid = positive_grid(tf, intervals)?;
    let pi = T::PI();
    Ok(AuxiliaryAngles::from_fn(grid, |t| {
        let s = t / tf;
        let th = pi * smoothstep(s);
        let thd = pi * smoothstep_d(s) / tf;
        let (g, gd) = gamma(th, thd);
        [th, thd, alpha, T::zero(), g, gd]
    }))
}

/// Control fields that make `|1>` follow the invariant eigenvector fixed by
/// the angles.
pub fn invariant_inverse<T: Real>(angles: &AuxiliaryAngles<T>) -> TwoLevelProtocol<T> {
    let grid = angles.grid();
    let n = grid.len();
    let mut r = Vec::with_capacity(n);
    let mut im = Vec::with_capacity(n);
    let mut d = Vec::with_capacity(n);
    for i in 0..n {
        let th = angles.theta.values[i];
        let thd = angles.theta_dot.values[i];
        let (sa, ca) = angles.alpha.values[i].sin_cos();
        let ad = angles.alpha_dot.values[i];
        let gd = angles.gamma_dot.values[i];
        let (st, ct) = th.sin_cos();
        r.push(ca * st * gd - sa * thd);
        im.push(sa * st * gd + ca * thd);
        d.push(-ct * gd - ad);
    }
    let sf = |v| SampledFunction::new(grid, v).expect("grid length");
    TwoLevelProtocol {
        omega_r: sf(r),
        omega_i: sf(im),
        delta: sf(d),
        family: "invariant".into(),
    }
}

/// Integrates the invariant-angle equations for a given protocol from grid
/// index `i0` to `i1`, returning `[Θ, α, γ]` at every grid time in between.
/// Both ends must keep `sin Θ` away from zero.
pub fn forward_angles<T: Real>(
    protocol: &TwoLevelProtocol<T>,
    i0: usize,
    i1: usize,
    init: [T; 3],
) -> Result<Vec<[T; 3]>> {
    let grid = protocol.grid();
    if i0 >= i1 || i1 >= grid.len() {
        return Err(StaError::InvalidSpec("forward angle range is empty".into()));
    }
    let rhs = |t: T, y: &[T; 3]| {
        let (or, oi, de) = from_cartesian(protocol.field(t));
        let (sa, ca) = y[1].sin_cos();
        let (st, ct) = y[0].sin_cos();
        let proj = or * ca + oi * sa;
        [oi * ca - or * sa, -de - ct / st * proj, proj / st]
    };
    let outputs: Vec<T> = (i0 + 1..=i1).map(|i| grid.t(i)).collect();
    let opts = OdeOptions {
        rtol: T::lit(1e-12),
        atol: T::lit(1e-13),
        initial_step: grid.dt() * T::lit(0.1),
        ..OdeOptions::default()
    };
    let mut out = vec![init];
    out.extend(integrate(rhs, grid.t(i0), init, &outputs, &opts, |t, y| {
        if y[0].sin().abs() < T::lit(1e-8) {
            Err(StaError::OutOfDomain {
                t: t.as_f64(),
                tf: grid.tf.as_f64(),
            })
        } else {
            Ok(())
        }
    })?);
    Ok(out)
}

/// `(3 + cos 2Θ) Θ'' = sin 2Θ Θ'^2`
fn noise_ode<T: Real>(_: T, y: &[T; 2]) -> [T; 2] {
    let (s2, c2) = (T::lit(2.0) * y[0]).sin_cos();
    [y[1], s2 * y[1] * y[1] / (T::lit(3.0) + c2)]
}

fn noise_shot<T: Real>(tf: T, v0: T) -> Result<T> {
    let opts = OdeOptions {
        rtol: T::lit(1e-13),
        atol: T::lit(1e-14),
        initial_step: tf * T::lit(1e-4),
        ..OdeOptions::default()
    };
    let y = integrate(noise_ode, T::zero(), [T::zero(), v0], &[tf], &opts, |_, _| Ok(()))?;
    Ok(y[0][0] - T::PI())
}

/// Noise-optimal inversion: `Θ` solves the Euler–Lagrange boundary value
/// problem by shooting on `Θ'(0)`, `α = -π/4`, `γ = 0`.
pub fn optimal_noise_protocol<T: Real>(tf: T, intervals: usize) -> Result<(AuxiliaryAngles<T>, TwoLevelProtocol<T>)> {
    let grid = positive_grid(tf, intervals)?;
    let pi = T::PI();
    let (mut lo, mut hi) = (pi / (T::lit(2.0) * tf), T::lit(4.0) * pi / tf);
    let (flo, fhi) = (noise_shot(tf, lo)?, noise_shot(tf, hi)?);
    if flo.signum() == fhi.signum() {
        return Err(StaError::ShootingFailed(format!(
            "theta(T) - pi has the same sign at both brackets ({flo:e}, {fhi:e})"
        )));
    }
    let tol = T::lit(1e-12) / tf;
    let mut flo = flo;
    while hi - lo > tol {
        let mid = T::lit(0.5) * (lo + hi);
        let fm = noise_shot(tf, mid)?;
        if fm == T::zero() {
            lo = mid;
            hi = mid;
            break;
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    let v0 = T::lit(0.5) * (lo + hi);
    let opts = OdeOptions {
        rtol: T::lit(1e-13),
        atol: T::lit(1e-14),
        initial_step: grid.dt() * T::lit(0.1),
        ..OdeOptions::default()
    };
    let times: Vec<T> = (1..grid.len()).map(|i| grid.t(i)).collect();
    let mut ys = vec![[T::zero(), v0]];
    ys.extend(integrate(noise_ode, T::zero(), [T::zero(), v0], &times, &opts, |_, _| Ok(()))?);
    let z = T::zero();
    let a = -T::FRAC_PI_4();
    let col = |k: usize| SampledFunction::new(grid, ys.iter().map(|y| y[k]).collect()).expect("grid length");
    let cst = |c: T| SampledFunction::constant(grid, c);
    let angles = AuxiliaryAngles {
        theta: col(0),
        theta_dot: col(1),
        alpha: cst(a),
        alpha_dot: cst(z),
        gamma: cst(z),
        gamma_dot: cst(z),
    };
    let mut protocol = invariant_inverse(&angles);
    protocol.family = "noise-optimal".into();
    Ok((angles, protocol))
}

/// Systematic-error-optimal inversion: quintic `Θ`, `α = 0`,
/// `γ = n (2Θ - sin 2Θ)`.
pub fn optimal_systematic_protocol<T: Real>(
    tf: T,
    n: u32,
    intervals: usize,
) -> Result<(AuxiliaryAngles<T>, TwoLevelProtocol<T>)> {
    if n == 0 {
        return Err(StaError::InvalidSpec("systematic-optimal order must be at least 1".into()));
    }
    let nn = T::from_u32(n).expect("small integer");
    let two = T::lit(2.0);
    let angles = quintic_angles(tf, intervals, T::zero(), |th, thd| {
        let (s2, c2) = (two * th).sin_cos();
        (nn * (two * th - s2), nn * (two - two * c2) * thd)
    })?;
    let mut protocol = invariant_inverse(&angles);
    protocol.family = "systematic-optimal".into();
    Ok((angles, protocol))
}
