//! Harmonic-trap expansions and compressions designed through the Ermakov
//! equation `rho'' + omega^2(t) rho = omega0^2 / rho^3`.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Result, StaError};
use crate::grid::{SampledFunction, TimeFunction, TimeGrid};
use crate::interpolant::PolyFunction;
use crate::ode::{integrate, OdeOptions};
use crate::scalar::Real;
use crate::wave::{harmonic_eigenfunction, harmonic_state, propagate, Potential, PropagateOptions, SpatialGrid, WaveState};

/// Default number of time intervals used to sample schedules.
pub const DEFAULT_INTERVALS: usize = 2000;

#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionProtocol<T> {
    pub omega0: T,
    pub omegaf: T,
    pub tf: T,
    /// Scaling factor; `None` for schedules that were not inverse engineered.
    pub rho: Option<PolyFunction<T>>,
    pub omega2: SampledFunction<T>,
    pub imaginary: bool,
}

impl<T: Real> ExpansionProtocol<T> {
    pub fn gamma(&self) -> T {
        (self.omega0 / self.omegaf).sqrt()
    }

    /// Protocol following an arbitrary squared-frequency schedule.
    pub fn from_schedule(omega0: T, omegaf: T, omega2: SampledFunction<T>) -> Self {
        let imaginary = omega2.min() < T::zero();
        ExpansionProtocol {
            omega0,
            omegaf,
            tf: omega2.grid.tf,
            rho: None,
            omega2,
            imaginary,
        }
    }

    /// Trap potential `omega^2(t) x^2 / 2`.
    pub fn potential(&self) -> ScheduledTrap<'_, T> {
        ScheduledTrap {
            omega2: &self.omega2,
            center: T::zero(),
        }
    }

    /// Energy of the n-th expanding mode, from the invariant.
    pub fn mode_energy(&self, n: usize, t: T) -> Option<T> {
        let rho = self.rho.as_ref()?;
        let r = rho.at(t, 0);
        let rd = rho.at(t, 1);
        let w2 = ermakov_omega2(rho, self.omega0, t);
        let nn = T::from_usize_lossy(2 * n + 1);
        Some(nn / (T::lit(4.0) * self.omega0) * (rd * rd + w2 * r * r + self.omega0 * self.omega0 / (r * r)))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,omega2,rho\n");
        let g = self.omega2.grid;
        for (i, w2) in self.omega2.values.iter().enumerate() {
            let t = g.t(i);
            let rho = self.rho.as_ref().map(|r| format!("{:.16e}", r.at(t, 0).as_f64()));
            out.push_str(&format!(
                "{:.16e},{:.16e},{}\n",
                t.as_f64(),
                w2.as_f64(),
                rho.unwrap_or_default()
            ));
        }
        out
    }
}

/// Harmonic trap following a sampled `omega^2(t)`.
pub struct ScheduledTrap<'a, T> {
    pub omega2: &'a SampledFunction<T>,
    pub center: T,
}

impl<T: Real> Potential<T> for ScheduledTrap<'_, T> {
    fn value(&self, x: T, t: T) -> T {
        let d = x - self.center;
        T::lit(0.5) * self.omega2.interpolate(t) * d * d
    }

    fn fill(&self, xs: &[T], t: T, out: &mut [T]) {
        let w2 = self.omega2.interpolate(t);
        for (o, &x) in out.iter_mut().zip(xs) {
            let d = x - self.center;
            *o = T::lit(0.5) * w2 * d * d;
        }
    }
}

#[inline]
fn ermakov_omega2<T: Real>(rho: &PolyFunction<T>, omega0: T, t: T) -> T {
    let r = rho.at(t, 0);
    omega0 * omega0 / r.powi(4) - rho.at(t, 2) / r
}

/// `omega^2(t) = omega0^2 / rho^4 - rho'' / rho` on `grid`, plus a flag that
/// is set when the schedule turns negative (repulsive trap).
pub fn invert_ermakov<T: Real>(
    rho: &PolyFunction<T>,
    omega0: T,
    grid: &TimeGrid<T>,
) -> Result<(SampledFunction<T>, bool)> {
    for i in 0..grid.len() {
        let t = grid.t(i);
        let r = rho.at(t, 0);
        if !(r > T::zero()) {
            return Err(StaError::NonPositiveScaling {
                t: t.as_f64(),
                rho: r.as_f64(),
            });
        }
    }
    let w2 = SampledFunction::from_fn(*grid, |t| ermakov_omega2(rho, omega0, t));
    let imaginary = w2.min() < T::zero();
    Ok((w2, imaginary))
}

/// Integrates the Ermakov equation forward from `rho(0) = 1, rho'(0) = 0`.
pub fn forward_ermakov<T: Real, F: TimeFunction<T>>(
    omega2: &F,
    omega0: T,
    grid: &TimeGrid<T>,
) -> Result<SampledFunction<T>> {
    let opts = OdeOptions {
        rtol: T::lit(1e-12),
        atol: T::lit(1e-13),
        ..OdeOptions::default()
    };
    let w02 = omega0 * omega0;
    let sol = integrate(
        |t, y: &[T; 2]| [y[1], w02 / y[0].powi(3) - omega2.value(t) * y[0]],
        T::zero(),
        [T::one(), T::zero()],
        &grid.times(),
        &opts,
        |t, y| {
            if y[0] > T::lit(1e-6) && y[0] < T::lit(1e6) {
                Ok(())
            } else {
                Err(StaError::BlowUp {
                    t: t.as_f64(),
                    rho: y[0].as_f64(),
                })
            }
        },
    )?;
    SampledFunction::new(*grid, sol.iter().map(|y| y[0]).collect())
}

/// Quintic scaling factor from 1 to `sqrt(omega0/omegaf)` with vanishing
/// first and second derivatives at both ends, and its frequency schedule.
pub fn design_expansion<T: Real>(
    omega0: T,
    omegaf: T,
    tf: T,
    intervals: usize,
) -> Result<ExpansionProtocol<T>> {
    if !(omega0 > T::zero()) || !(omegaf > T::zero()) {
        return Err(StaError::InvalidSpec("trap frequencies must be positive".into()));
    }
    let grid = TimeGrid::new(tf, intervals)?;
    let gamma = (omega0 / omegaf).sqrt();
    let rho = PolyFunction::quintic(tf, T::one(), gamma);
    let (omega2, imaginary) = invert_ermakov(&rho, omega0, &grid)?;
    Ok(ExpansionProtocol {
        omega0,
        omegaf,
        tf,
        rho: Some(rho),
        omega2,
        imaginary,
    })
}

/// `omega(t) = omega0 / (1 - (omegaf - omega0) t / (tf omegaf))`, which
/// keeps `omega' / omega^2` constant.
pub fn fast_adiabatic_ramp<T: Real>(
    omega0: T,
    omegaf: T,
    grid: &TimeGrid<T>,
) -> Result<SampledFunction<T>> {
    let tf = grid.tf;
    let den = |t: T| T::one() - (omegaf - omega0) * t / (tf * omegaf);
    // the denominator is linear, so checking the ends covers the interval
    if !(den(T::zero()) > T::zero()) || !(den(tf) > T::zero()) || !(omegaf != T::zero()) {
        return Err(StaError::PoleInRamp);
    }
    Ok(SampledFunction::from_fn(*grid, |t| omega0 / den(t)))
}

/// Straight-line interpolation of the frequency, used as a non-shortcut
/// reference. Returns `omega^2(t)`.
pub fn linear_frequency_ramp<T: Real>(omega0: T, omegaf: T, grid: &TimeGrid<T>) -> SampledFunction<T> {
    let tf = grid.tf;
    SampledFunction::from_fn(*grid, |t| {
        let w = omega0 + (omegaf - omega0) * t / tf;
        w * w
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBound<T> {
    pub n: usize,
    /// `(2n+1) / (2 omegaf tf^2)`
    pub bound: T,
    /// `tf sqrt(omega0 omegaf)` is small
    pub short_time: bool,
    /// `gamma` is large
    pub large_gamma: bool,
}

impl<T: Real> EnergyBound<T> {
    pub fn in_regime(&self) -> bool {
        self.short_time && self.large_gamma
    }
}

pub const SHORT_TIME_LIMIT: f64 = 0.5;
pub const LARGE_GAMMA_LIMIT: f64 = 3.0;

pub fn energy_bound<T: Real>(n: usize, omega0: T, omegaf: T, tf: T) -> EnergyBound<T> {
    let nn = T::from_usize_lossy(2 * n + 1);
    EnergyBound {
        n,
        bound: nn / (T::lit(2.0) * omegaf * tf * tf),
        short_time: tf * (omega0 * omegaf).sqrt() <= T::lit(SHORT_TIME_LIMIT),
        large_gamma: (omega0 / omegaf).sqrt() >= T::lit(LARGE_GAMMA_LIMIT),
    }
}

/// Shortest duration compatible with a time-averaged energy budget `ebar`.
pub fn minimum_time<T: Real>(n: usize, omegaf: T, ebar: T) -> T {
    (T::from_usize_lossy(2 * n + 1) / (T::lit(2.0) * omegaf * ebar)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AaCheck<T> {
    /// `mean(dH) tf / (h/4)` with `h = 2 pi`
    pub ratio: T,
    /// false when the energy spread vanishes and the relation says nothing
    pub applicable: bool,
}

pub fn aa_bound_check<T: Real>(dh: &SampledFunction<T>) -> AaCheck<T> {
    let mean = dh.mean();
    let ratio = mean * dh.grid.tf / (T::PI() / T::lit(2.0));
    AaCheck {
        ratio,
        applicable: mean > T::lit(1e-12),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GpeVariant {
    FullGpe,
    ThomasFermi,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GpeScalingSchedule<T> {
    pub dimension: u8,
    pub variant: GpeVariant,
    pub coupling: SampledFunction<T>,
    pub omega2: SampledFunction<T>,
    /// Scaled time.
    pub tau: SampledFunction<T>,
    /// Chemical potential of the initial stationary state, when known.
    pub mu: Option<T>,
}

/// Coupling and frequency schedules that keep a condensate self-similar
/// under the protocol's scaling factor.
pub fn gpe_schedule<T: Real>(
    protocol: &ExpansionProtocol<T>,
    dimension: u8,
    g0: T,
    variant: GpeVariant,
) -> Result<GpeScalingSchedule<T>> {
    if !(1..=3).contains(&dimension) {
        return Err(StaError::InvalidSpec(format!("dimension must be 1, 2 or 3, got {dimension}")));
    }
    let rho = protocol.rho.as_ref().ok_or_else(|| StaError::VariantMismatch {
        expected: "inverse-engineered expansion".into(),
        found: "bare frequency schedule".into(),
    })?;
    let grid = protocol.omega2.grid;
    let d = dimension as i32;
    let w02 = protocol.omega0 * protocol.omega0;
    let (coupling, omega2, tau_rate) = match variant {
        GpeVariant::FullGpe => (
            SampledFunction::from_fn(grid, |t| {
                if d == 2 {
                    g0
                } else {
                    g0 / rho.at(t, 0).powi(2 - d)
                }
            }),
            protocol.omega2.clone(),
            SampledFunction::from_fn(grid, |t| T::one() / rho.at(t, 0).powi(2)),
        ),
        GpeVariant::ThomasFermi => (
            SampledFunction::constant(grid, g0),
            SampledFunction::from_fn(grid, |t| {
                let r = rho.at(t, 0);
                w02 / r.powi(d + 2) - rho.at(t, 2) / r
            }),
            SampledFunction::from_fn(grid, |t| T::one() / rho.at(t, 0).powi(d)),
        ),
    };
    Ok(GpeScalingSchedule {
        dimension,
        variant,
        coupling,
        omega2,
        tau: tau_rate.cumulative(),
        mu: None,
    })
}

/// Transverse trapping frequency `omega_perp^2(t)` that realizes a
/// prescribed 1D coupling `g1(t)`. The flag is set if it turns negative.
pub fn transverse_confinement<T: Real>(
    g1: &SampledFunction<T>,
    omega_perp0: T,
) -> Result<(SampledFunction<T>, bool)> {
    let grid = g1.grid;
    for (i, &g) in g1.values.iter().enumerate() {
        if !(g > T::zero()) {
            return Err(StaError::NonPositiveCoupling { t: grid.t(i).as_f64() });
        }
    }
    let d1 = g1.derivative();
    let d2 = d1.derivative();
    let g0 = g1.first();
    let w02 = omega_perp0 * omega_perp0;
    let values = (0..grid.len())
        .map(|i| {
            let g = g1.values[i];
            let r = d1.values[i] / g;
            w02 * (g / g0).powi(2) + T::lit(0.5) * d2.values[i] / g - T::lit(0.75) * r * r
        })
        .collect();
    let out = SampledFunction::new(grid, values)?;
    let negative = out.min() < T::zero();
    Ok((out, negative))
}

/// Squared frequency of the unitarily transformed expansion,
/// `omega'^2 = omega^2 - 3 omega'^2 / (4 omega^2) + omega'' / (2 omega)`.
pub fn unitary_alternative_expansion<T: Real>(omega: &SampledFunction<T>) -> SampledFunction<T> {
    let d1 = omega.derivative();
    let d2 = d1.derivative();
    let values = omega
        .values
        .iter()
        .zip(d1.values.iter().zip(&d2.values))
        .map(|(&w, (&wd, &wdd))| w * w - T::lit(0.75) * wd * wd / (w * w) + T::lit(0.5) * wdd / w)
        .collect();
    SampledFunction {
        grid: omega.grid,
        values,
    }
}

/// Exact dynamical mode of the expanding trap.
#[derive(Debug, Clone, PartialEq)]
pub struct LrMode<T> {
    pub n: usize,
    /// Invariant eigenvalue `(n + 1/2) omega0`.
    pub lambda: T,
    /// Lewis–Riesenfeld phase.
    pub alpha: SampledFunction<T>,
}

pub fn lr_mode<T: Real>(protocol: &ExpansionProtocol<T>, n: usize) -> Result<LrMode<T>> {
    let rho = protocol.rho.as_ref().ok_or_else(|| StaError::VariantMismatch {
        expected: "inverse-engineered expansion".into(),
        found: "bare frequency schedule".into(),
    })?;
    let lambda = (T::from_usize_lossy(n) + T::lit(0.5)) * protocol.omega0;
    let grid = protocol.omega2.grid;
    let rate = SampledFunction::from_fn(grid, |t| -lambda / rho.at(t, 0).powi(2));
    Ok(LrMode {
        n,
        lambda,
        alpha: rate.cumulative(),
    })
}

impl<T: Real> LrMode<T> {
    /// `e^{i alpha} rho^{-1/2} e^{i rho' x^2 / 2 rho} phi_n(x / rho)`
    pub fn wavefunction(
        &self,
        protocol: &ExpansionProtocol<T>,
        grid: SpatialGrid<T>,
        t: T,
    ) -> Result<WaveState<T>> {
        let rho = protocol.rho.as_ref().ok_or_else(|| StaError::VariantMismatch {
            expected: "inverse-engineered expansion".into(),
            found: "bare frequency schedule".into(),
        })?;
        let r = rho.eval(t, 0)?;
        let rd = rho.at(t, 1);
        let alpha = self.alpha.interpolate(t);
        let amp = T::one() / r.sqrt();
        let mut state = WaveState::from_fn(grid, |x| {
            let ph = alpha + rd * x * x / (T::lit(2.0) * r);
            Complex::from_polar(amp * harmonic_eigenfunction(self.n, protocol.omega0, x / r), ph)
        });
        state.t = t;
        Ok(state)
    }
}

/// Largest L2 distance between the propagated n-th trap eigenstate and the
/// exact mode over `samples` evenly spaced times.
pub fn lr_mode_check<T: Real>(
    protocol: &ExpansionProtocol<T>,
    n: usize,
    grid: SpatialGrid<T>,
    dt: T,
    samples: usize,
) -> Result<T> {
    let mode = lr_mode(protocol, n)?;
    let psi0 = harmonic_state(grid, n, protocol.omega0, T::zero());
    let opts = PropagateOptions::new(dt).samples(samples).keep_states(true);
    let (_, report) = propagate(&psi0, &protocol.potential(), T::zero(), protocol.tf, &opts)?;
    let mut worst = T::zero();
    for s in &report.states {
        let exact = mode.wavefunction(protocol, grid, s.t.min(protocol.tf))?;
        let d: T = s
            .psi
            .iter()
            .zip(&exact.psi)
            .map(|(a, b)| (*a - *b).norm_sqr())
            .sum::<T>()
            * grid.dx();
        worst = worst.max(d.sqrt());
    }
    Ok(worst)
}
