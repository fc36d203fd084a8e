//! Rigid transport of harmonic and arbitrary traps without final excitation.

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, StaError};
use crate::grid::{simpson, SampledFunction, TimeGrid};
use crate::interpolant::PolyFunction;
use crate::scalar::Real;
use crate::wave::{
    fidelity, harmonic_eigenfunction, propagate, stationary_state, Potential, PropagateOptions, SpatialGrid,
    StationaryOptions, WaveState,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransportVariant {
    RigidHarmonic,
    CompensatingForce,
    UnitaryAlternative,
}

impl TransportVariant {
    pub fn name(&self) -> &'static str {
        match self {
            TransportVariant::RigidHarmonic => "rigid-harmonic",
            TransportVariant::CompensatingForce => "compensating-force",
            TransportVariant::UnitaryAlternative => "unitary-alternative",
        }
    }
}

/// Trap position as a function of time with its first two derivatives.
pub trait Trajectory<T>: Sync {
    fn position(&self, t: T) -> T;
    fn velocity(&self, t: T) -> T;
    fn acceleration(&self, t: T) -> T;
}

impl<T: Real> Trajectory<T> for PolyFunction<T> {
    fn position(&self, t: T) -> T {
        self.at(t, 0)
    }
    fn velocity(&self, t: T) -> T {
        self.at(t, 1)
    }
    fn acceleration(&self, t: T) -> T {
        self.at(t, 2)
    }
}

/// Sampled trajectory; derivatives by fourth-order differences.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledTrajectory<T> {
    pub q: SampledFunction<T>,
    pub v: SampledFunction<T>,
    pub a: SampledFunction<T>,
}

impl<T: Real> SampledTrajectory<T> {
    pub fn new(q: SampledFunction<T>) -> Self {
        let v = q.derivative();
        let a = v.derivative();
        SampledTrajectory { q, v, a }
    }
}

impl<T: Real> Trajectory<T> for SampledTrajectory<T> {
    fn position(&self, t: T) -> T {
        self.q.interpolate(t)
    }
    fn velocity(&self, t: T) -> T {
        self.v.interpolate(t)
    }
    fn acceleration(&self, t: T) -> T {
        self.a.interpolate(t)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransportProtocol<T> {
    pub variant: TransportVariant,
    pub omega0: T,
    pub d: T,
    pub tf: T,
    pub g: T,
    /// Classical (center-of-mass) trajectory.
    pub qc: PolyFunction<T>,
    /// Trap trajectory.
    pub q0: SampledFunction<T>,
    /// `max |q0 - qc|`
    pub max_excursion: T,
    /// Whether the trap leaves `[0, d]` on the way.
    pub leaves_interval: bool,
}

impl<T: Real> TransportProtocol<T> {
    /// Trap position for the rigid design, exact between grid points.
    pub fn trap_position(&self, t: T) -> T {
        match self.variant {
            TransportVariant::RigidHarmonic => {
                let w2 = self.omega0 * self.omega0;
                self.qc.at(t, 0) + (self.qc.at(t, 2) + self.g) / w2
            }
            _ => self.q0.interpolate(t),
        }
    }

    /// `omega0^2 (x - q0)^2 / 2 + g x`
    pub fn potential(&self) -> HarmonicTransportPotential<'_, T> {
        HarmonicTransportPotential {
            protocol: self,
            alpha: T::zero(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,qc,q0\n");
        let grid = self.q0.grid;
        for (i, q0) in self.q0.values.iter().enumerate() {
            let t = grid.t(i);
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e}\n",
                t.as_f64(),
                self.qc.at(t, 0).as_f64(),
                q0.as_f64()
            ));
        }
        out
    }
}

/// Harmonic (optionally quartic-perturbed) trap following a transport
/// protocol, with a uniform force `g`.
pub struct HarmonicTransportPotential<'a, T> {
    pub protocol: &'a TransportProtocol<T>,
    /// Quartic coefficient: `omega0^2 [u^2 + alpha u^4] / 2`.
    pub alpha: T,
}

impl<T: Real> Potential<T> for HarmonicTransportPotential<'_, T> {
    fn value(&self, x: T, t: T) -> T {
        let q0 = self.protocol.trap_position(t);
        let u = x - q0;
        let w2 = self.protocol.omega0 * self.protocol.omega0;
        T::lit(0.5) * w2 * (u * u + self.alpha * u * u * u * u) + self.protocol.g * x
    }

    fn fill(&self, xs: &[T], t: T, out: &mut [T]) {
        let q0 = self.protocol.trap_position(t);
        let w2 = self.protocol.omega0 * self.protocol.omega0;
        for (o, &x) in out.iter_mut().zip(xs) {
            let u = x - q0;
            let u2 = u * u;
            *o = T::lit(0.5) * w2 * (u2 + self.alpha * u2 * u2) + self.protocol.g * x;
        }
    }
}

/// Quintic classical trajectory from 0 to `d` and the trap trajectory
/// `q0 = qc + (qc'' + g) / omega0^2` that drives it.
pub fn design_transport<T: Real>(
    d: T,
    tf: T,
    omega0: T,
    g: T,
    intervals: usize,
) -> Result<TransportProtocol<T>> {
    if !(omega0 > T::zero()) {
        return Err(StaError::InvalidSpec("trap frequency must be positive".into()));
    }
    let grid = TimeGrid::new(tf, intervals)?;
    let qc = PolyFunction::quintic(tf, T::zero(), d);
    let w2 = omega0 * omega0;
    let q0 = SampledFunction::from_fn(grid, |t| qc.at(t, 0) + (qc.at(t, 2) + g) / w2);
    let max_excursion = (0..grid.len())
        .map(|i| ((qc.at(grid.t(i), 2) + g) / w2).abs())
        .fold(T::zero(), T::max);
    let tol = T::lit(1e-12) * (T::one() + d.abs());
    let (lo, hi) = if d >= T::zero() { (T::zero(), d) } else { (d, T::zero()) };
    let leaves_interval = q0.values.iter().any(|&q| q < lo - tol || q > hi + tol);
    Ok(TransportProtocol {
        variant: TransportVariant::RigidHarmonic,
        omega0,
        d,
        tf,
        g,
        qc,
        q0,
        max_excursion,
        leaves_interval,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExcitationReport<T> {
    /// `|F[q0'](omega0)|`
    pub amplitude: T,
    /// `omega0^2 A^2 / 2`
    pub residual_energy: T,
    /// `(omega, |F[q0'](omega)|)` on `[0, 3 omega0]`.
    pub spectrum: Vec<(T, T)>,
}

/// `|∫ q0'(t) e^{-i w t} dt|` over the protocol, integrated by parts so
/// that only samples of `q0` are needed.
pub fn fourier_transform_velocity<T: Real>(q0: &SampledFunction<T>, omega: T) -> T {
    let grid = q0.grid;
    let tf = grid.tf;
    let re: Vec<T> = (0..grid.len())
        .map(|i| q0.values[i] * (omega * grid.t(i)).cos())
        .collect();
    let im: Vec<T> = (0..grid.len())
        .map(|i| -q0.values[i] * (omega * grid.t(i)).sin())
        .collect();
    let integral = Complex::new(simpson(&re, grid.dt()), simpson(&im, grid.dt()));
    let boundary = Complex::from_polar(q0.last(), -omega * tf) - Complex::new(q0.first(), T::zero());
    (boundary + Complex::new(T::zero(), omega) * integral).norm()
}

pub fn fourier_amplitude<T: Real>(q0: &SampledFunction<T>, omega0: T) -> ExcitationReport<T> {
    let amplitude = fourier_transform_velocity(q0, omega0);
    let spectrum = (0..=64)
        .map(|k| {
            let w = omega0 * T::lit(3.0) * T::from_usize_lossy(k) / T::lit(64.0);
            (w, fourier_transform_velocity(q0, w))
        })
        .collect();
    ExcitationReport {
        amplitude,
        residual_energy: T::lit(0.5) * omega0 * omega0 * amplitude * amplitude,
        spectrum,
    }
}

/// Closed-form state at `tf`, including the dynamical and classical-action phases.
pub fn transported_state<T: Real>(
    protocol: &TransportProtocol<T>,
    n: usize,
    grid: SpatialGrid<T>,
) -> Result<WaveState<T>> {
    if protocol.variant != TransportVariant::RigidHarmonic {
        return Err(StaError::VariantMismatch {
            expected: TransportVariant::RigidHarmonic.name().into(),
            found: protocol.variant.name().into(),
        });
    }
    let w0 = protocol.omega0;
    let tf = protocol.tf;
    let qc = &protocol.qc;
    let lagr = SampledFunction::from_fn(protocol.q0.grid, |t| {
        let v = qc.at(t, 1);
        let u = qc.at(t, 0) - protocol.trap_position(t);
        T::lit(0.5) * v * v - T::lit(0.5) * w0 * w0 * u * u - protocol.g * qc.at(t, 0)
    });
    let action = lagr.integral();
    let en = (T::from_usize_lossy(n) + T::lit(0.5)) * w0;
    let xc = qc.at(tf, 0);
    let pc = qc.at(tf, 1);
    let mut state = WaveState::from_fn(grid, |x| {
        let ph = pc * (x - xc) + action - en * tf;
        Complex::from_polar(harmonic_eigenfunction(n, w0, x - xc), ph)
    });
    state.t = tf;
    Ok(state)
}

/// `V(x, t) = U(x - q0) - x q0''`: keeps any trap-frame state stationary.
pub struct CompensatedPotential<U, Q> {
    pub trap: U,
    pub trajectory: Q,
}

impl<T: Real, U: Fn(T) -> T + Sync, Q: Trajectory<T>> Potential<T> for CompensatedPotential<U, Q> {
    fn value(&self, x: T, t: T) -> T {
        (self.trap)(x - self.trajectory.position(t)) - x * self.trajectory.acceleration(t)
    }

    fn fill(&self, xs: &[T], t: T, out: &mut [T]) {
        let q0 = self.trajectory.position(t);
        let a = self.trajectory.acceleration(t);
        for (o, &x) in out.iter_mut().zip(xs) {
            *o = (self.trap)(x - q0) - x * a;
        }
    }
}

pub struct CompensatingForce<U, Q> {
    pub potential: CompensatedPotential<U, Q>,
    /// Set when the trap moves at either end (a launching rather than a
    /// transport protocol).
    pub launching: bool,
}

pub fn compensating_force<T: Real, U: Fn(T) -> T + Sync, Q: Trajectory<T>>(
    trap: U,
    trajectory: Q,
    tf: T,
) -> CompensatingForce<U, Q> {
    let scale = T::lit(1e-9) * (T::one() + trajectory.position(tf).abs()) / tf;
    let launching = trajectory.velocity(T::zero()).abs() > scale || trajectory.velocity(tf).abs() > scale;
    CompensatingForce {
        potential: CompensatedPotential { trap, trajectory },
        launching,
    }
}

/// `q0' = q0 + q0'' / omega0^2`
pub fn unitary_alternative_transport<T: Real, Q: Trajectory<T>>(
    q0: &Q,
    omega0: T,
    grid: &TimeGrid<T>,
) -> Result<SampledFunction<T>> {
    let tf = grid.tf;
    let scale = T::lit(1e-8) * (T::one() + q0.position(tf).abs()) / (tf * tf);
    for t in [T::zero(), tf] {
        let a = q0.acceleration(t);
        if a.abs() > scale {
            return Err(StaError::EdgeMismatch(format!(
                "trap acceleration {a:e} at t = {t} does not vanish"
            )));
        }
    }
    let w2 = omega0 * omega0;
    Ok(SampledFunction::from_fn(*grid, |t| q0.position(t) + q0.acceleration(t) / w2))
}

/// `6 d^2 / (tf^4 omega0^2)`
pub fn transport_energy_bound<T: Real>(d: T, tf: T, omega0: T) -> T {
    T::lit(6.0) * d * d / (tf.powi(4) * omega0 * omega0)
}

/// Runs a rigid harmonic protocol in the trap `omega0^2 [u^2 + alpha u^4] / 2`
/// with nonlinearity `g1` and returns the final fidelity against the
/// stationary state of the displaced perturbed trap. The step-size guard is
/// off: a lagging packet in a stiff quartic trap fills regions where `|V|`
/// is large, so `dt` is the caller's choice.
pub fn anharmonic_scan<T: Real>(
    protocol: &TransportProtocol<T>,
    alpha: T,
    g1: T,
    grid: SpatialGrid<T>,
    dt: T,
) -> Result<T> {
    if protocol.variant != TransportVariant::RigidHarmonic {
        return Err(StaError::VariantMismatch {
            expected: TransportVariant::RigidHarmonic.name().into(),
            found: protocol.variant.name().into(),
        });
    }
    let pot = HarmonicTransportPotential { protocol, alpha };
    let xs = grid.xs();
    let sample = |t: T| {
        let mut v = vec![T::zero(); xs.len()];
        pot.fill(&xs, t, &mut v);
        v
    };
    let opts = StationaryOptions::default();
    let (psi0, _) = stationary_state(grid, &sample(T::zero()), g1, 0, &opts)?;
    let (target, _) = stationary_state(grid, &sample(protocol.tf), g1, 0, &opts)?;
    let (psi, _) = propagate(&psi0, &pot, g1, protocol.tf, &PropagateOptions::new(dt).step_limit(None))?;
    fidelity(&psi, &target)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnharmonicPoint<T> {
    pub alpha: T,
    pub g1: T,
    pub fidelity: T,
}

/// [`anharmonic_scan`] over an `(alpha, g1)` grid, `alpha` major.
pub fn anharmonic_scan_grid<T: Real>(
    protocol: &TransportProtocol<T>,
    alphas: &[T],
    g1s: &[T],
    grid: SpatialGrid<T>,
    dt: T,
) -> Result<Vec<AnharmonicPoint<T>>> {
    let pts: Vec<(T, T)> = alphas.iter().flat_map(|&a| g1s.iter().map(move |&g| (a, g))).collect();
    pts.par_iter()
        .map(|&(alpha, g1)| {
            Ok(AnharmonicPoint {
                alpha,
                g1,
                fidelity: anharmonic_scan(protocol, alpha, g1, grid, dt)?,
            })
        })
        .collect()
}

pub fn anharmonic_csv<T: Real>(points: &[AnharmonicPoint<T>]) -> String {
    let mut out = String::from("alpha,g1,fidelity\n");
    for p in points {
        out.push_str(&format!(
            "{:.16e},{:.16e},{:.16e}\n",
            p.alpha.as_f64(),
            p.g1.as_f64(),
            p.fidelity.as_f64()
        ));
    }
    out
}
