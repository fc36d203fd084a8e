//! Two-level population inversion: protocols, propagators and error
//! sensitivities.
//!
//! The Hamiltonian is `H = (1/2) [[-Δ, Ω_R - iΩ_I], [Ω_R + iΩ_I, Δ]]`,
//! stored internally in Cartesian form `H = X σx + Y σy + Z σz`.
//! [`to_cartesian`] and [`from_cartesian`] are the only places that know
//! the factor of two.

mod design;
mod frames;
mod sensitivity;

pub use design::*;
pub use frames::*;
pub use sensitivity::*;

use num_complex::Complex;

use crate::error::{Result, StaError};
use crate::grid::{SampledFunction, TimeGrid};
use crate::scalar::Real;

pub type Spinor<T> = [Complex<T>; 2];
pub type Bloch<T> = [T; 3];

/// `(Ω_R, Ω_I, Δ) -> (X, Y, Z)`
pub fn to_cartesian<T: Real>(omega_r: T, omega_i: T, delta: T) -> Bloch<T> {
    let h = T::lit(0.5);
    [h * omega_r, h * omega_i, -h * delta]
}

/// `(X, Y, Z) -> (Ω_R, Ω_I, Δ)`
pub fn from_cartesian<T: Real>(b: Bloch<T>) -> (T, T, T) {
    let two = T::lit(2.0);
    (two * b[0], two * b[1], -two * b[2])
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoLevelProtocol<T> {
    pub omega_r: SampledFunction<T>,
    pub omega_i: SampledFunction<T>,
    pub delta: SampledFunction<T>,
    pub family: String,
}

impl<T: Real> TwoLevelProtocol<T> {
    pub fn new(
        omega_r: SampledFunction<T>,
        omega_i: SampledFunction<T>,
        delta: SampledFunction<T>,
        family: impl Into<String>,
    ) -> Result<Self> {
        if omega_r.grid != omega_i.grid || omega_r.grid != delta.grid {
            return Err(StaError::GridMismatch("protocol components on different grids".into()));
        }
        Ok(TwoLevelProtocol {
            omega_r,
            omega_i,
            delta,
            family: family.into(),
        })
    }

    /// Samples `t -> (Ω_R, Ω_I, Δ)`.
    pub fn from_fn(grid: TimeGrid<T>, family: impl Into<String>, f: impl Fn(T) -> (T, T, T)) -> Self {
        let vals: Vec<(T, T, T)> = grid.times().into_iter().map(f).collect();
        let pick = |k: usize| {
            SampledFunction::new(
                grid,
                vals.iter()
                    .map(|v| match k {
                        0 => v.0,
                        1 => v.1,
                        _ => v.2,
                    })
                    .collect(),
            )
            .expect("grid length")
        };
        TwoLevelProtocol {
            omega_r: pick(0),
            omega_i: pick(1),
            delta: pick(2),
            family: family.into(),
        }
    }

    /// Samples `t -> (X, Y, Z)`.
    pub fn from_cartesian_fn(grid: TimeGrid<T>, family: impl Into<String>, f: impl Fn(T) -> Bloch<T>) -> Self {
        Self::from_fn(grid, family, |t| from_cartesian(f(t)))
    }

    pub fn grid(&self) -> TimeGrid<T> {
        self.omega_r.grid
    }

    pub fn duration(&self) -> T {
        self.omega_r.grid.tf
    }

    /// Cartesian field at grid sample `i`.
    pub fn field_at(&self, i: usize) -> Bloch<T> {
        to_cartesian(self.omega_r.values[i], self.omega_i.values[i], self.delta.values[i])
    }

    /// Cartesian field at any time, interpolated between samples.
    pub fn field(&self, t: T) -> Bloch<T> {
        to_cartesian(
            self.omega_r.interpolate(t),
            self.omega_i.interpolate(t),
            self.delta.interpolate(t),
        )
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,omega_r,omega_i,delta\n");
        let g = self.grid();
        for i in 0..g.len() {
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e}\n",
                g.t(i).as_f64(),
                self.omega_r.values[i].as_f64(),
                self.omega_i.values[i].as_f64(),
                self.delta.values[i].as_f64()
            ));
        }
        out
    }

    /// `max |Ω_c|`
    pub fn max_rabi(&self) -> T {
        self.omega_r
            .values
            .iter()
            .zip(&self.omega_i.values)
            .map(|(r, i)| r.hypot(*i))
            .fold(T::zero(), T::max)
    }

    /// `∫ |Ω_c| dt`
    pub fn pulse_area(&self) -> T {
        let g = self.grid();
        SampledFunction::new(
            g,
            self.omega_r
                .values
                .iter()
                .zip(&self.omega_i.values)
                .map(|(r, i)| r.hypot(*i))
                .collect(),
        )
        .expect("grid length")
        .integral()
    }

    /// Largest `|h|` over the samples.
    fn max_field(&self) -> T {
        (0..self.grid().len())
            .map(|i| norm(self.field_at(i)))
            .fold(T::zero(), T::max)
    }

    /// Number of propagation substeps per grid interval.
    fn substeps(&self, per_step: T) -> usize {
        let h = self.grid().dt() * self.max_field();
        (h / per_step).ceil().to_usize().unwrap_or(1).max(1)
    }
}

pub(crate) fn dot<T: Real>(a: Bloch<T>, b: Bloch<T>) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn cross<T: Real>(a: Bloch<T>, b: Bloch<T>) -> Bloch<T> {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub(crate) fn norm<T: Real>(a: Bloch<T>) -> T {
    dot(a, a).sqrt()
}

/// Rotation by `angle` about the y axis (z turns towards x).
pub(crate) fn rotate_y<T: Real>(v: Bloch<T>, angle: T) -> Bloch<T> {
    let (s, c) = angle.sin_cos();
    [v[0] * c + v[2] * s, v[1], -v[0] * s + v[2] * c]
}

/// Polar angle `arccos(Z / |h|)`.
pub fn polar_angle<T: Real>(h: Bloch<T>) -> T {
    (h[0] * h[0] + h[1] * h[1]).sqrt().atan2(h[2])
}

/// `|1>`
pub fn ground<T: Real>() -> Spinor<T> {
    basis(0)
}

/// `|1>` for `k = 0`, `|2>` otherwise.
pub fn basis<T: Real>(k: usize) -> Spinor<T> {
    let (o, z) = (Complex::new(T::one(), T::zero()), Complex::new(T::zero(), T::zero()));
    if k == 0 {
        [o, z]
    } else {
        [z, o]
    }
}

pub fn bloch_vector<T: Real>(psi: &Spinor<T>) -> Bloch<T> {
    let z = psi[0].conj() * psi[1];
    let two = T::lit(2.0);
    [two * z.re, two * z.im, psi[0].norm_sqr() - psi[1].norm_sqr()]
}

/// Eigenvector of `h·σ` with eigenvalue `+|h|` (`upper`) or `-|h|`.
pub fn eigenstate<T: Real>(h: Bloch<T>, upper: bool) -> Spinor<T> {
    let r = norm(h);
    let n = if r > T::zero() { [h[0] / r, h[1] / r, h[2] / r] } else { [T::zero(), T::zero(), T::one()] };
    let n = if upper { n } else { [-n[0], -n[1], -n[2]] };
    let th = n[0].hypot(n[1]).atan2(n[2]);
    let ph = n[1].atan2(n[0]);
    let half = T::lit(0.5);
    [
        Complex::new((half * th).cos(), T::zero()),
        Complex::from_polar((half * th).sin(), ph),
    ]
}

/// Population of the `+|h|` eigenstate for a state with Bloch vector `r`.
pub fn upper_population<T: Real>(h: Bloch<T>, r: Bloch<T>) -> T {
    let n = norm(h);
    T::lit(0.5) * (T::one() + dot(h, r) / n)
}

/// `|<a|b>|^2`
pub fn overlap<T: Real>(a: &Spinor<T>, b: &Spinor<T>) -> T {
    (a[0].conj() * b[0] + a[1].conj() * b[1]).norm_sqr()
}

/// `exp(-i h·σ dt) psi`
pub fn evolve<T: Real>(h: Bloch<T>, dt: T, psi: &Spinor<T>) -> Spinor<T> {
    let r = norm(h);
    let (s, c) = (r * dt).sin_cos();
    let sr = if r > T::zero() { s / r } else { dt };
    let i = Complex::new(T::zero(), T::one());
    let ci = Complex::new(c, T::zero());
    let hz = Complex::new(h[2], T::zero());
    let hm = Complex::new(h[0], -h[1]);
    let hp = Complex::new(h[0], h[1]);
    [
        ci * psi[0] - i * sr * (hz * psi[0] + hm * psi[1]),
        ci * psi[1] - i * sr * (hp * psi[0] - hz * psi[1]),
    ]
}

#[derive(Debug, Clone)]
pub struct UnitaryRun<T> {
    pub psi: Spinor<T>,
    /// `|<2|psi(T)>|^2`
    pub p2: T,
    /// State at every grid time.
    pub states: Vec<Spinor<T>>,
}

/// Fourth-order commutator-free exponential integrator: two exact 2×2
/// exponentials per substep built from the field at the Gauss points.
pub fn propagate_unitary<T: Real>(protocol: &TwoLevelProtocol<T>, psi0: &Spinor<T>) -> Result<UnitaryRun<T>> {
    let n0 = psi0[0].norm_sqr() + psi0[1].norm_sqr();
    if (n0 - T::one()).abs() > T::lit(1e-10) {
        return Err(StaError::InvalidSpec(format!("initial state norm {n0} is not 1")));
    }
    let grid = protocol.grid();
    let sub = protocol.substeps(T::lit(2e-3));
    let h = grid.dt() / T::from_usize_lossy(sub);
    let r3 = T::lit(3.0).sqrt();
    let (c1, c2) = (T::lit(0.5) - r3 / T::lit(6.0), T::lit(0.5) + r3 / T::lit(6.0));
    let (a1, a2) = ((T::lit(3.0) - T::lit(2.0) * r3) / T::lit(12.0), (T::lit(3.0) + T::lit(2.0) * r3) / T::lit(12.0));
    let mix = |x: Bloch<T>, y: Bloch<T>, p: T, q: T| [p * x[0] + q * y[0], p * x[1] + q * y[1], p * x[2] + q * y[2]];
    let mut psi = *psi0;
    let mut states = Vec::with_capacity(grid.len());
    states.push(psi);
    for i in 0..grid.intervals {
        let t0 = grid.t(i);
        for s in 0..sub {
            let t = t0 + h * T::from_usize_lossy(s);
            let f1 = protocol.field(t + c1 * h);
            let f2 = protocol.field(t + c2 * h);
            psi = evolve(mix(f1, f2, a2, a1), h, &psi);
            psi = evolve(mix(f1, f2, a1, a2), h, &psi);
        }
        states.push(psi);
    }
    Ok(UnitaryRun {
        psi,
        p2: psi[1].norm_sqr(),
        states,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MasterRun<T> {
    pub bloch: Bloch<T>,
    pub p2: T,
}

impl<T: Real> MasterRun<T> {
    /// `ρ = (1 + r·σ)/2`
    pub fn density_matrix(&self) -> [[Complex<T>; 2]; 2] {
        let h = T::lit(0.5);
        let r = self.bloch;
        [
            [Complex::new(h * (T::one() + r[2]), T::zero()), Complex::new(h * r[0], -h * r[1])],
            [Complex::new(h * r[0], h * r[1]), Complex::new(h * (T::one() - r[2]), T::zero())],
        ]
    }
}

/// Master equation with systematic amplitude error `beta` and independent
/// amplitude noise of strength `lambda2` on both Rabi components, integrated
/// by RK4 on the Bloch vector.
pub fn propagate_master<T: Real>(
    protocol: &TwoLevelProtocol<T>,
    lambda2: T,
    beta: T,
    r0: Bloch<T>,
) -> Result<MasterRun<T>> {
    if norm(r0) > T::one() + T::lit(1e-10) {
        return Err(StaError::InvalidSpec("initial Bloch vector outside the unit ball".into()));
    }
    let grid = protocol.grid();
    let sub = protocol.substeps(T::lit(2e-3));
    let h = grid.dt() / T::from_usize_lossy(sub);
    let two = T::lit(2.0);
    let rhs = |t: T, r: Bloch<T>| -> Bloch<T> {
        let f = protocol.field(t);
        let eff = [f[0] * (T::one() + beta), f[1] * (T::one() + beta), f[2]];
        let c = cross(eff, r);
        let gx = two * lambda2 * f[0] * f[0];
        let gy = two * lambda2 * f[1] * f[1];
        [
            two * c[0] - gy * r[0],
            two * c[1] - gx * r[1],
            two * c[2] - (gx + gy) * r[2],
        ]
    };
    let axpy = |a: Bloch<T>, s: T, b: Bloch<T>| [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]];
    let mut r = r0;
    let half = T::lit(0.5);
    let sixth = T::one() / T::lit(6.0);
    for i in 0..grid.intervals {
        let t0 = grid.t(i);
        for s in 0..sub {
            let t = t0 + h * T::from_usize_lossy(s);
            let k1 = rhs(t, r);
            let k2 = rhs(t + half * h, axpy(r, half * h, k1));
            let k3 = rhs(t + half * h, axpy(r, half * h, k2));
            let k4 = rhs(t + h, axpy(r, h, k3));
            for j in 0..3 {
                r[j] += h * sixth * (k1[j] + two * k2[j] + two * k3[j] + k4[j]);
            }
        }
    }
    Ok(MasterRun {
        bloch: r,
        p2: half * (T::one() - r[2]),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn flat(area: f64, t: f64) -> TwoLevelProtocol<f64> {
        TwoLevelProtocol::from_fn(TimeGrid::new(t, 200).unwrap(), "flat", |_| (area / t, 0.0, 0.0))
    }

    #[test]
    fn cartesian_round_trip() {
        let b = to_cartesian(1.5, -0.5, 2.0);
        assert_eq!(b, [0.75, -0.25, -1.0]);
        assert_eq!(from_cartesian(b), (1.5, -0.5, 2.0));
    }

    #[test]
    fn flat_pulses() {
        assert!((propagate_unitary(&flat(PI, 1.0), &ground()).unwrap().p2 - 1.0).abs() < 1e-12);
        let r = propagate_unitary(&flat(0.9 * PI, 1.0), &ground()).unwrap();
        assert!((r.p2 - (0.45 * PI).sin().powi(2)).abs() < 1e-12);
        assert!(propagate_unitary(&flat(2.0 * PI, 1.0), &ground()).unwrap().p2 < 1e-24);
        assert!((propagate_unitary(&flat(PI / 2.0, 1.0), &ground()).unwrap().p2 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn zero_hamiltonian_is_identity() {
        let p = TwoLevelProtocol::from_fn(TimeGrid::new(1.0, 10).unwrap(), "zero", |_| (0.0, 0.0, 0.0));
        let psi = [Complex::new(0.6, 0.0), Complex::new(0.0, 0.8)];
        let r = propagate_unitary(&p, &psi).unwrap();
        assert_eq!(r.psi, psi);
        assert!(propagate_unitary(&p, &[Complex::new(1.0, 0.0); 2]).is_err());
    }

    #[test]
    fn master_matches_unitary_without_noise() {
        let p = TwoLevelProtocol::from_fn(TimeGrid::new(2.0, 400).unwrap(), "mix", |t: f64| {
            (1.0 + t.sin(), 0.3 * t, 0.5 - t)
        });
        let u = propagate_unitary(&p, &ground()).unwrap();
        let m = propagate_master(&p, 0.0, 0.0, [0.0, 0.0, 1.0]).unwrap();
        let b = bloch_vector(&u.psi);
        for k in 0..3 {
            assert!((b[k] - m.bloch[k]).abs() < 1e-10);
        }
        assert!((norm(m.bloch) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn flat_pulse_noise_dephasing() {
        let t = 1.0;
        for l2 in [1e-3f64, 0.05] {
            let m = propagate_master(&flat(PI, t), l2, 0.0, [0.0, 0.0, 1.0]).unwrap();
            let expect = 0.5 * (1.0 + (-l2 * PI * PI / (2.0 * t)).exp());
            assert!((m.p2 - expect).abs() < 1e-10);
            let rho = m.density_matrix();
            assert!((rho[0][0].re + rho[1][1].re - 1.0).abs() < 1e-15);
            assert!(rho[0][1] == rho[1][0].conj());
        }
    }

    #[test]
    fn eigenstate_populations() {
        let h = [0.3f64, -0.4, 1.2];
        let up = eigenstate(h, true);
        let dn = eigenstate(h, false);
        assert!((upper_population(h, bloch_vector(&up)) - 1.0).abs() < 1e-14);
        assert!(upper_population(h, bloch_vector(&dn)).abs() < 1e-14);
        assert!(overlap(&up, &dn) < 1e-28);
        let e = evolve(h, 0.7, &up);
        assert!((overlap(&e, &up) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rotation_helpers() {
        let v = rotate_y([0.0, 0.0, 1.0], PI / 2.0);
        assert!((v[0] - 1.0).abs() < 1e-15 && v[2].abs() < 1e-15);
        assert!((polar_angle([1.0, 0.0, 0.0]) - PI / 2.0).abs() < 1e-15);
        assert_eq!(cross([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]), [0.0, 0.0, 1.0]);
    }
}
