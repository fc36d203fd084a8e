use num_complex::Complex;

use super::{Spectral, SpatialGrid, WaveState};
use crate::error::{Result, StaError};
use crate::linalg::symmetric_eigen;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy)]
pub struct StationaryOptions<T> {
    /// Required `||H psi - mu psi||`.
    pub tolerance: T,
    pub max_iterations: usize,
}

impl<T: Real> Default for StationaryOptions<T> {
    fn default() -> Self {
        StationaryOptions {
            tolerance: T::lit(1e-9),
            max_iterations: 5000,
        }
    }
}

/// n-th stationary state of `-1/2 d^2/dx^2 + V + g1 |psi|^2` with `V`
/// sampled on `grid`. Returns the state and its energy (linear case) or
/// chemical potential (nonlinear case).
///
/// The linear case diagonalizes the grid Hamiltonian; the nonlinear ground
/// state is relaxed in imaginary time and polished by a preconditioned
/// Rayleigh–Ritz iteration.
pub fn stationary_state<T: Real>(
    grid: SpatialGrid<T>,
    v: &[T],
    g1: T,
    n: usize,
    opts: &StationaryOptions<T>,
) -> Result<(WaveState<T>, T)> {
    if v.len() != grid.nx {
        return Err(StaError::GridMismatch("potential samples do not match the grid".into()));
    }
    let sp = Spectral::new(grid);
    let (psi, mu) = if g1 == T::zero() {
        linear_state(&sp, v, n)?
    } else {
        if n != 0 {
            return Err(StaError::InvalidSpec(
                "nonlinear stationary states are only available for n = 0".into(),
            ));
        }
        nonlinear_ground(&sp, v, g1, opts)?
    };
    let res = residual(&sp, &psi, v, g1, mu);
    if !(res < opts.tolerance) {
        return Err(StaError::NoConvergence {
            iterations: opts.max_iterations,
            residual: res.as_f64(),
        });
    }
    let state = WaveState {
        grid,
        psi,
        t: T::zero(),
        g1,
    };
    Ok((state, mu))
}

fn kinetic_row<T: Real>(sp: &Spectral<T>) -> Vec<T> {
    let mut buf: Vec<Complex<T>> = sp
        .k
        .iter()
        .map(|&k| Complex::new(k * k / T::lit(2.0), T::zero()))
        .collect();
    sp.inverse(&mut buf);
    buf.iter().map(|z| z.re).collect()
}

fn linear_state<T: Real>(sp: &Spectral<T>, v: &[T], n: usize) -> Result<(Vec<Complex<T>>, T)> {
    let nx = sp.grid.nx;
    if n >= nx {
        return Err(StaError::InvalidSpec(format!("state index {n} exceeds the grid size")));
    }
    let row = kinetic_row(sp);
    let h: Vec<Vec<T>> = (0..nx)
        .map(|i| {
            (0..nx)
                .map(|j| {
                    let t = row[(i + nx - j) % nx];
                    if i == j {
                        t + v[i]
                    } else {
                        t
                    }
                })
                .collect()
        })
        .collect();
    let (vals, vecs) = symmetric_eigen(&h);
    let mut psi: Vec<Complex<T>> = (0..nx)
        .map(|i| Complex::new(vecs[i][n], T::zero()))
        .collect();
    normalize(&mut psi, sp.grid.dx());
    fix_sign(&mut psi);
    Ok((psi, vals[n]))
}

fn nonlinear_ground<T: Real>(
    sp: &Spectral<T>,
    v: &[T],
    g: T,
    opts: &StationaryOptions<T>,
) -> Result<(Vec<Complex<T>>, T)> {
    let dx = sp.grid.dx();
    let xs = sp.grid.xs();
    let vmin = v.iter().copied().fold(T::infinity(), T::min);
    let jmin = v.iter().position(|&x| x == vmin).unwrap_or(0);
    let mut psi: Vec<Complex<T>> = xs
        .iter()
        .map(|&x| {
            let d = (x - xs[jmin]) / (sp.grid.length() / T::lit(16.0));
            Complex::new((-d * d).exp(), T::zero())
        })
        .collect();
    normalize(&mut psi, dx);

    // imaginary-time warm start
    let vspan = v.iter().map(|x| *x - vmin).fold(T::zero(), T::max);
    let dtau = (T::lit(0.05) / (T::one() + vspan.sqrt())).max(T::lit(1e-3));
    let kin: Vec<T> = sp.k.iter().map(|&k| (-k * k / T::lit(4.0) * dtau).exp()).collect();
    for _ in 0..400 {
        sp.forward(&mut psi);
        for (z, &f) in psi.iter_mut().zip(&kin) {
            *z = *z * f;
        }
        sp.inverse(&mut psi);
        for (z, &vj) in psi.iter_mut().zip(v) {
            let e = (vj - vmin + g * z.norm_sqr()) * dtau;
            *z = *z * (-e).exp();
        }
        sp.forward(&mut psi);
        for (z, &f) in psi.iter_mut().zip(&kin) {
            *z = *z * f;
        }
        sp.inverse(&mut psi);
        normalize(&mut psi, dx);
    }

    // preconditioned conjugate gradient on the energy, restricted to the unit sphere
    let mut p_prev: Option<Vec<Complex<T>>> = None;
    let mut g_prev: Option<(Vec<Complex<T>>, T)> = None;
    let mut theta_try = T::lit(0.1);
    for _ in 0..opts.max_iterations {
        let veff = effective(v, &psi, g);
        let hpsi = apply_h(sp, &psi, &veff);
        let mu = dot(&psi, &hpsi, dx).re;
        let r: Vec<Complex<T>> = hpsi.iter().zip(&psi).map(|(h, p)| h - p * mu).collect();
        if norm(&r, dx) < opts.tolerance * T::lit(0.1) {
            break;
        }
        let ekin = dot(&psi, &sp.kinetic(&psi), dx).re.max(T::lit(1e-12));
        let vmin_eff = veff.iter().copied().fold(T::infinity(), T::min);
        let cv = psi
            .iter()
            .zip(&veff)
            .map(|(z, &a)| (a - vmin_eff) * z.norm_sqr())
            .sum::<T>()
            * dx;
        let cv = cv.max(ekin);
        let sv: Vec<T> = veff.iter().map(|&a| T::one() / (a - vmin_eff + cv).sqrt()).collect();
        let mut pr: Vec<Complex<T>> = r.iter().zip(&sv).map(|(z, &s)| z * s).collect();
        sp.forward(&mut pr);
        for (z, &k) in pr.iter_mut().zip(&sp.k) {
            *z = *z / (k * k / T::lit(2.0) + ekin);
        }
        sp.inverse(&mut pr);
        for (z, &s) in pr.iter_mut().zip(&sv) {
            *z = *z * s;
        }
        project_out(&mut pr, &psi, dx);
        let rz = dot(&r, &pr, dx).re;
        // Polak-Ribiere with automatic restart
        let beta = match &g_prev {
            Some((r_old, rz_old)) if *rz_old > T::zero() => {
                let diff: Vec<Complex<T>> = r.iter().zip(r_old).map(|(a, b)| a - b).collect();
                (dot(&diff, &pr, dx).re / *rz_old).max(T::zero())
            }
            _ => T::zero(),
        };
        let mut dir: Vec<Complex<T>> = pr.iter().map(|z| -z).collect();
        if let Some(p_old) = &p_prev {
            for (d, o) in dir.iter_mut().zip(p_old) {
                *d += o * beta;
            }
        }
        project_out(&mut dir, &psi, dx);
        let nd = norm(&dir, dx);
        if !(nd > T::zero()) {
            break;
        }
        let unit: Vec<Complex<T>> = dir.iter().map(|z| z / nd).collect();
        let slope = |theta: T| -> T {
            let (c, s) = (theta.cos(), theta.sin());
            let phi: Vec<Complex<T>> = psi.iter().zip(&unit).map(|(a, b)| a * c + b * s).collect();
            let dphi: Vec<Complex<T>> = psi.iter().zip(&unit).map(|(a, b)| b * c - a * s).collect();
            let h = apply_h(sp, &phi, &effective(v, &phi, g));
            T::lit(2.0) * dot(&dphi, &h, dx).re
        };
        let d0 = slope(T::zero());
        if !(d0 < T::zero()) {
            // not a descent direction: restart from the preconditioned residual
            p_prev = None;
            g_prev = None;
            continue;
        }
        let d1 = slope(theta_try);
        let mut theta = if d1 > d0 {
            theta_try * d0 / (d0 - d1)
        } else {
            theta_try * T::lit(2.0)
        };
        theta = theta.min(T::lit(0.5));
        theta_try = theta.max(T::lit(1e-6));
        let (c, s) = (theta.cos(), theta.sin());
        psi = psi.iter().zip(&unit).map(|(a, b)| a * c + b * s).collect();
        normalize(&mut psi, dx);
        p_prev = Some(dir);
        g_prev = Some((r, rz));
    }
    fix_sign(&mut psi);
    let veff = effective(v, &psi, g);
    let mu = dot(&psi, &apply_h(sp, &psi, &veff), dx).re;
    Ok((psi, mu))
}

fn effective<T: Real>(v: &[T], psi: &[Complex<T>], g: T) -> Vec<T> {
    v.iter().zip(psi).map(|(&a, z)| a + g * z.norm_sqr()).collect()
}

fn project_out<T: Real>(x: &mut [Complex<T>], psi: &[Complex<T>], dx: T) {
    let ov = dot(psi, x, dx);
    for (z, p) in x.iter_mut().zip(psi) {
        *z -= p * ov;
    }
}

fn apply_h<T: Real>(sp: &Spectral<T>, psi: &[Complex<T>], veff: &[T]) -> Vec<Complex<T>> {
    let mut out = sp.kinetic(psi);
    for ((o, z), &vj) in out.iter_mut().zip(psi).zip(veff) {
        *o += z * vj;
    }
    out
}

fn dot<T: Real>(a: &[Complex<T>], b: &[Complex<T>], dx: T) -> Complex<T> {
    a.iter()
        .zip(b)
        .fold(Complex::new(T::zero(), T::zero()), |acc, (x, y)| acc + x.conj() * y)
        * dx
}

fn norm<T: Real>(a: &[Complex<T>], dx: T) -> T {
    (a.iter().map(|z| z.norm_sqr()).sum::<T>() * dx).sqrt()
}

fn normalize<T: Real>(psi: &mut [Complex<T>], dx: T) {
    let n = norm(psi, dx);
    for z in psi.iter_mut() {
        *z = *z / n;
    }
}

/// Global phase making the largest component real and positive.
fn fix_sign<T: Real>(psi: &mut [Complex<T>]) {
    let big = psi
        .iter()
        .copied()
        .max_by(|a, b| a.norm_sqr().partial_cmp(&b.norm_sqr()).unwrap())
        .unwrap_or(Complex::new(T::one(), T::zero()));
    if big.norm() > T::zero() {
        let ph = big.conj() / big.norm();
        for z in psi.iter_mut() {
            *z = *z * ph;
        }
    }
}

fn residual<T: Real>(sp: &Spectral<T>, psi: &[Complex<T>], v: &[T], g: T, mu: T) -> T {
    let veff: Vec<T> = v
        .iter()
        .zip(psi)
        .map(|(&a, z)| a + g * z.norm_sqr())
        .collect();
    let h = apply_h(sp, psi, &veff);
    let r: Vec<Complex<T>> = h.iter().zip(psi).map(|(a, b)| a - b * mu).collect();
    norm(&r, sp.grid.dx())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oscillator_levels() {
        let g = SpatialGrid::symmetric(10.0, 128).unwrap();
        let v: Vec<f64> = g.xs().iter().map(|x| 0.5 * x * x).collect();
        for (n, e) in [(0, 0.5), (3, 3.5)] {
            let (s, mu) = stationary_state(g, &v, 0.0, n, &StationaryOptions::default()).unwrap();
            assert!((mu - e).abs() < 1e-8, "n={n} mu={mu}");
            assert!((s.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn thomas_fermi_chemical_potential() {
        let g = SpatialGrid::symmetric(12.0, 256).unwrap();
        let v: Vec<f64> = g.xs().iter().map(|x| 0.5 * x * x).collect();
        let g1 = 10.0;
        let (_, mu) = stationary_state(g, &v, g1, 0, &StationaryOptions::default()).unwrap();
        let tf = (3.0 * g1 / (4.0 * 2f64.sqrt())).powf(2.0 / 3.0);
        assert!(((mu - tf) / tf).abs() < 0.05, "mu={mu} tf={tf}");
    }

    #[test]
    fn nonlinear_excited_rejected() {
        let g = SpatialGrid::symmetric(10.0, 64).unwrap();
        let v = vec![0.0; 64];
        assert!(stationary_state(g, &v, 1.0, 1, &StationaryOptions::default()).is_err());
    }
}
