//! One-dimensional Schrödinger / Gross–Pitaevskii simulation on a periodic
//! Fourier grid.

mod propagate;
mod stationary;

pub use propagate::{propagate, propagate_gpe, PropagateOptions, RunReport, RunSample};
pub use stationary::{stationary_state, StationaryOptions};

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Result, StaError};
use crate::scalar::{FftPlan, Real};

/// Uniform periodic grid `x_j = x_min + j dx`, `j < nx`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialGrid<T> {
    pub x_min: T,
    pub x_max: T,
    pub nx: usize,
}

impl<T: Real> SpatialGrid<T> {
    pub fn new(x_min: T, x_max: T, nx: usize) -> Result<Self> {
        if !(x_max > x_min) {
            return Err(StaError::InvalidSpec("x_max must exceed x_min".into()));
        }
        if nx < 16 || !nx.is_power_of_two() {
            return Err(StaError::InvalidSpec(format!(
                "nx must be a power of two >= 16, got {nx}"
            )));
        }
        Ok(SpatialGrid { x_min, x_max, nx })
    }

    pub fn symmetric(half_width: T, nx: usize) -> Result<Self> {
        Self::new(-half_width, half_width, nx)
    }

    #[inline]
    pub fn dx(&self) -> T {
        (self.x_max - self.x_min) / T::from_usize_lossy(self.nx)
    }

    #[inline]
    pub fn length(&self) -> T {
        self.x_max - self.x_min
    }

    #[inline]
    pub fn x(&self, j: usize) -> T {
        self.x_min + self.dx() * T::from_usize_lossy(j)
    }

    pub fn xs(&self) -> Vec<T> {
        (0..self.nx).map(|j| self.x(j)).collect()
    }

    /// Angular wavenumbers in FFT order.
    pub fn ks(&self) -> Vec<T> {
        let dk = T::TAU() / self.length();
        (0..self.nx)
            .map(|j| {
                if j < self.nx / 2 {
                    dk * T::from_usize_lossy(j)
                } else {
                    -dk * T::from_usize_lossy(self.nx - j)
                }
            })
            .collect()
    }

    pub fn k_max(&self) -> T {
        T::PI() / self.dx()
    }
}

/// Spectral operators bound to one grid.
#[derive(Debug, Clone)]
pub struct Spectral<T> {
    pub grid: SpatialGrid<T>,
    pub k: Vec<T>,
    plan: FftPlan<T>,
}

impl<T: Real> Spectral<T> {
    pub fn new(grid: SpatialGrid<T>) -> Self {
        Spectral {
            grid,
            k: grid.ks(),
            plan: T::fft_plan(grid.nx),
        }
    }

    #[inline]
    pub fn forward(&self, buf: &mut [Complex<T>]) {
        (self.plan.forward)(buf)
    }

    /// Inverse transform including the `1/n` normalization.
    #[inline]
    pub fn inverse(&self, buf: &mut [Complex<T>]) {
        (self.plan.inverse)(buf);
        let s = T::one() / T::from_usize_lossy(self.grid.nx);
        for z in buf.iter_mut() {
            *z = *z * s;
        }
    }

    fn apply(&self, psi: &[Complex<T>], sym: impl Fn(T) -> Complex<T>) -> Vec<Complex<T>> {
        let mut buf = psi.to_vec();
        self.forward(&mut buf);
        for (z, &k) in buf.iter_mut().zip(&self.k) {
            *z = *z * sym(k);
        }
        self.inverse(&mut buf);
        buf
    }

    /// `-1/2 d^2/dx^2 psi`
    pub fn kinetic(&self, psi: &[Complex<T>]) -> Vec<Complex<T>> {
        self.apply(psi, |k| Complex::new(k * k / T::lit(2.0), T::zero()))
    }

    /// `d/dx psi`
    pub fn derivative(&self, psi: &[Complex<T>]) -> Vec<Complex<T>> {
        let nyq = self.grid.nx / 2;
        let kn = self.k[nyq];
        self.apply(psi, |k| {
            if k == kn {
                Complex::new(T::zero(), T::zero())
            } else {
                Complex::new(T::zero(), k)
            }
        })
    }

    pub fn derivative_real(&self, f: &[T]) -> Vec<T> {
        let c: Vec<Complex<T>> = f.iter().map(|&v| Complex::new(v, T::zero())).collect();
        self.derivative(&c).iter().map(|z| z.re).collect()
    }

    /// `psi(x - a)` by a Fourier phase ramp.
    pub fn shift(&self, psi: &[Complex<T>], a: T) -> Vec<Complex<T>> {
        self.apply(psi, |k| Complex::from_polar(T::one(), -k * a))
    }

    /// Largest |k| carrying a relative spectral weight above `rel`.
    pub fn occupied_bandwidth(&self, psi: &[Complex<T>], rel: T) -> T {
        let mut buf = psi.to_vec();
        self.forward(&mut buf);
        let peak = buf.iter().map(|z| z.norm_sqr()).fold(T::zero(), T::max);
        buf.iter()
            .zip(&self.k)
            .filter(|(z, _)| z.norm_sqr() > rel * peak)
            .map(|(_, k)| k.abs())
            .fold(T::zero(), T::max)
    }

    /// Norm, energy, potential expectation and energy spread of `psi`.
    pub fn observables(&self, psi: &[Complex<T>], v: &[T], g: T) -> Observables<T> {
        let dx = self.grid.dx();
        let tpsi = self.kinetic(psi);
        let mut norm = T::zero();
        let mut kin = T::zero();
        let mut pot = T::zero();
        let mut inter = T::zero();
        let mut h_mean = T::zero();
        let mut h2 = T::zero();
        for j in 0..psi.len() {
            let d = psi[j].norm_sqr();
            let hpsi = tpsi[j] + psi[j] * (v[j] + g * d);
            norm += d;
            kin += (psi[j].conj() * tpsi[j]).re;
            pot += v[j] * d;
            inter += g * d * d / T::lit(2.0);
            h_mean += (psi[j].conj() * hpsi).re;
            h2 += hpsi.norm_sqr();
        }
        let norm = norm * dx;
        let h_mean = h_mean * dx / norm;
        let spread = (h2 * dx / norm - h_mean * h_mean).max(T::zero()).sqrt();
        Observables {
            norm,
            energy: (kin + pot + inter) * dx / norm,
            kinetic: kin * dx / norm,
            potential: pot * dx / norm,
            dh: spread,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observables<T> {
    pub norm: T,
    pub energy: T,
    pub kinetic: T,
    pub potential: T,
    pub dh: T,
}

/// Complex wavefunction on a [`SpatialGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct WaveState<T> {
    pub grid: SpatialGrid<T>,
    pub psi: Vec<Complex<T>>,
    pub t: T,
    pub g1: T,
}

impl<T: Real> WaveState<T> {
    pub fn new(grid: SpatialGrid<T>, psi: Vec<Complex<T>>) -> Result<Self> {
        if psi.len() != grid.nx {
            return Err(StaError::GridMismatch(format!(
                "{} amplitudes on a grid of {} points",
                psi.len(),
                grid.nx
            )));
        }
        Ok(WaveState {
            grid,
            psi,
            t: T::zero(),
            g1: T::zero(),
        })
    }

    pub fn from_fn(grid: SpatialGrid<T>, f: impl Fn(T) -> Complex<T>) -> Self {
        WaveState {
            grid,
            psi: grid.xs().into_iter().map(f).collect(),
            t: T::zero(),
            g1: T::zero(),
        }
    }

    pub fn from_real(grid: SpatialGrid<T>, f: impl Fn(T) -> T) -> Self {
        Self::from_fn(grid, |x| Complex::new(f(x), T::zero()))
    }

    pub fn norm(&self) -> T {
        self.psi.iter().map(|z| z.norm_sqr()).sum::<T>() * self.grid.dx()
    }

    pub fn normalized(mut self) -> Self {
        let s = T::one() / self.norm().sqrt();
        for z in self.psi.iter_mut() {
            *z = *z * s;
        }
        self
    }

    pub fn density(&self) -> Vec<T> {
        self.psi.iter().map(|z| z.norm_sqr()).collect()
    }

    pub fn inner(&self, other: &Self) -> Result<Complex<T>> {
        if self.grid != other.grid {
            return Err(StaError::GridMismatch("states live on different grids".into()));
        }
        let s: Complex<T> = self
            .psi
            .iter()
            .zip(&other.psi)
            .fold(Complex::new(T::zero(), T::zero()), |acc, (a, b)| acc + a.conj() * b);
        Ok(s * self.grid.dx())
    }

    pub fn mean_x(&self) -> T {
        let xs = self.grid.xs();
        self.psi
            .iter()
            .zip(&xs)
            .map(|(z, &x)| z.norm_sqr() * x)
            .sum::<T>()
            * self.grid.dx()
            / self.norm()
    }

    pub fn variance_x(&self) -> T {
        let m = self.mean_x();
        let xs = self.grid.xs();
        self.psi
            .iter()
            .zip(&xs)
            .map(|(z, &x)| z.norm_sqr() * (x - m) * (x - m))
            .sum::<T>()
            * self.grid.dx()
            / self.norm()
    }

    /// Largest density within `margin` cells of either edge.
    pub fn edge_density(&self, margin: usize) -> T {
        let n = self.psi.len();
        let m = margin.min(n / 2);
        self.psi[..m]
            .iter()
            .chain(&self.psi[n - m..])
            .map(|z| z.norm_sqr())
            .fold(T::zero(), T::max)
    }
}

/// `|<target|psi>|^2`, both assumed normalized.
pub fn fidelity<T: Real>(psi: &WaveState<T>, target: &WaveState<T>) -> Result<T> {
    let ov = target.inner(psi)?;
    Ok(ov.norm_sqr() / (psi.norm() * target.norm()))
}

/// Normalized harmonic-oscillator eigenfunction `phi_n(x)` of frequency `omega`.
pub fn harmonic_eigenfunction<T: Real>(n: usize, omega: T, x: T) -> T {
    let xi = omega.sqrt() * x;
    let mut prev = T::zero();
    let mut cur = (omega / T::PI()).powf(T::lit(0.25)) * (-xi * xi / T::lit(2.0)).exp();
    for k in 0..n {
        let kf = T::from_usize_lossy(k);
        let next = (T::lit(2.0) / (kf + T::one())).sqrt() * xi * cur
            - (kf / (kf + T::one())).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Harmonic eigenstate centred at `x0`.
pub fn harmonic_state<T: Real>(grid: SpatialGrid<T>, n: usize, omega: T, x0: T) -> WaveState<T> {
    WaveState::from_real(grid, |x| harmonic_eigenfunction(n, omega, x - x0))
}

/// Space- and time-dependent potential.
pub trait Potential<T: Copy>: Sync {
    fn value(&self, x: T, t: T) -> T;

    fn fill(&self, xs: &[T], t: T, out: &mut [T]) {
        for (o, &x) in out.iter_mut().zip(xs) {
            *o = self.value(x, t);
        }
    }
}

impl<T: Copy, F: Fn(T, T) -> T + Sync> Potential<T> for F {
    #[inline]
    fn value(&self, x: T, t: T) -> T {
        self(x, t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> SpatialGrid<f64> {
        SpatialGrid::symmetric(12.0, 256).unwrap()
    }

    #[test]
    fn harmonic_states_are_orthonormal() {
        let g = grid();
        let s: Vec<_> = (0..4).map(|n| harmonic_state(g, n, 1.3, 0.2)).collect();
        for a in 0..4 {
            for b in 0..4 {
                let ov = s[a].inner(&s[b]).unwrap().norm();
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!((ov - expect).abs() < 1e-12, "{a} {b} {ov}");
            }
        }
    }

    #[test]
    fn harmonic_energy_and_zero_spread() {
        let g = grid();
        let sp = Spectral::new(g);
        let v: Vec<f64> = g.xs().iter().map(|x| 0.5 * x * x).collect();
        for n in 0..3 {
            let s = harmonic_state(g, n, 1.0, 0.0);
            let o = sp.observables(&s.psi, &v, 0.0);
            assert!((o.energy - (n as f64 + 0.5)).abs() < 1e-10);
            assert!(o.dh < 1e-6);
        }
    }

    #[test]
    fn fidelity_basics() {
        let g = grid();
        let a = harmonic_state(g, 0, 1.0, 0.0);
        let b = harmonic_state(g, 1, 1.0, 0.0);
        assert!((fidelity(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        assert!(fidelity(&a, &b).unwrap() < 1e-24);
        let mix = WaveState::new(
            g,
            a.psi.iter().zip(&b.psi).map(|(x, y)| (x + y) / 2f64.sqrt()).collect(),
        )
        .unwrap();
        assert!((fidelity(&mix, &a).unwrap() - 0.5).abs() < 1e-12);
        let other = harmonic_state(SpatialGrid::symmetric(10.0, 256).unwrap(), 0, 1.0, 0.0);
        assert!(matches!(fidelity(&a, &other), Err(StaError::GridMismatch(_))));
    }

    #[test]
    fn spectral_shift_and_derivative() {
        let g = grid();
        let sp = Spectral::new(g);
        let a = harmonic_state(g, 0, 1.0, 0.0);
        let b = harmonic_state(g, 0, 1.0, 1.7);
        let shifted = sp.shift(&a.psi, 1.7);
        for (x, y) in shifted.iter().zip(&b.psi) {
            assert!((x - y).norm() < 1e-12);
        }
        let f: Vec<f64> = g.xs().iter().map(|x| (-x * x).exp()).collect();
        let d = sp.derivative_real(&f);
        for (x, dv) in g.xs().iter().zip(d) {
            assert!((dv + 2.0 * x * (-x * x).exp()).abs() < 1e-11);
        }
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(SpatialGrid::new(0.0, 1.0, 100).is_err());
        assert!(SpatialGrid::new(1.0, 0.0, 128).is_err());
    }
}
