use num_complex::Complex;

use super::{Observables, Potential, Spectral, WaveState};
use crate::error::{Result, StaError};
use crate::grid::simpson;
use crate::scalar::Real;

#[derive(Debug, Clone)]
pub struct PropagateOptions<T> {
    /// Requested time step; shortened so that it divides the run evenly.
    pub dt: T,
    /// Number of output intervals (observables are recorded `samples + 1` times).
    pub samples: usize,
    pub target: Option<WaveState<T>>,
    /// Maximum density tolerated near the box edges; `None` disables the check.
    pub box_tolerance: Option<T>,
    /// Upper limit for `dt * max(|V|, k^2/2)` over the occupied region.
    pub step_limit: Option<T>,
    pub keep_states: bool,
}

impl<T: Real> PropagateOptions<T> {
    pub fn new(dt: T) -> Self {
        PropagateOptions {
            dt,
            samples: 100,
            target: None,
            box_tolerance: Some(T::lit(1e-12)),
            step_limit: Some(T::lit(0.1)),
            keep_states: false,
        }
    }

    pub fn samples(mut self, n: usize) -> Self {
        self.samples = n.max(1);
        self
    }

    pub fn target(mut self, target: WaveState<T>) -> Self {
        self.target = Some(target);
        self
    }

    pub fn box_tolerance(mut self, tol: Option<T>) -> Self {
        self.box_tolerance = tol;
        self
    }

    pub fn step_limit(mut self, limit: Option<T>) -> Self {
        self.step_limit = limit;
        self
    }

    pub fn keep_states(mut self, keep: bool) -> Self {
        self.keep_states = keep;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSample<T> {
    pub t: T,
    pub norm: T,
    pub energy: T,
    pub potential: T,
    pub dh: T,
    pub fidelity: Option<T>,
}

#[derive(Debug, Clone)]
pub struct RunReport<T> {
    pub samples: Vec<RunSample<T>>,
    pub dt: T,
    pub steps: usize,
    /// Time averages over `[0, tf]`.
    pub mean_energy: T,
    pub mean_potential: T,
    pub mean_dh: T,
    pub max_norm_drift: T,
    pub states: Vec<WaveState<T>>,
}

impl<T: Real> RunReport<T> {
    pub fn final_fidelity(&self) -> Option<T> {
        self.samples.last().and_then(|s| s.fidelity)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,norm,E,V_exp,dH,fidelity\n");
        for s in &self.samples {
            let f = s.fidelity.map(|f| format!("{:.16e}", f.as_f64())).unwrap_or_default();
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}\n",
                s.t.as_f64(),
                s.norm.as_f64(),
                s.energy.as_f64(),
                s.potential.as_f64(),
                s.dh.as_f64(),
                f
            ));
        }
        out
    }
}

/// Strang split-operator propagation of `psi0` under `-1/2 d^2/dx^2 + V(x, t)
/// + g1 |psi|^2` from `t = 0` to `tf`.
pub fn propagate<T: Real, V: Potential<T> + ?Sized>(
    psi0: &WaveState<T>,
    potential: &V,
    g1: T,
    tf: T,
    opts: &PropagateOptions<T>,
) -> Result<(WaveState<T>, RunReport<T>)> {
    propagate_gpe(psi0, potential, |_| g1, tf, opts)
}

/// As [`propagate`] with a time-dependent coupling `g1(t)`.
pub fn propagate_gpe<T: Real, V: Potential<T> + ?Sized>(
    psi0: &WaveState<T>,
    potential: &V,
    coupling: impl Fn(T) -> T,
    tf: T,
    opts: &PropagateOptions<T>,
) -> Result<(WaveState<T>, RunReport<T>)> {
    if !(tf >= T::zero()) || !(opts.dt > T::zero()) {
        return Err(StaError::InvalidSpec("propagation needs tf >= 0 and dt > 0".into()));
    }
    if let Some(target) = &opts.target {
        if target.grid != psi0.grid {
            return Err(StaError::GridMismatch("target lives on a different grid".into()));
        }
    }
    let grid = psi0.grid;
    let sp = Spectral::new(grid);
    let xs = grid.xs();
    let n_out = opts.samples.max(1);
    let per = if tf > T::zero() {
        (tf / (opts.dt * T::from_usize_lossy(n_out)))
            .ceil()
            .to_usize()
            .unwrap_or(1)
            .max(1)
    } else {
        1
    };
    let steps = per * n_out;
    let h = tf / T::from_usize_lossy(steps);
    let half = T::lit(0.5);
    let phase = |e: T| Complex::from_polar(T::one(), -e * h);
    let kin_half: Vec<Complex<T>> = sp.k.iter().map(|&k| phase(half * half * k * k)).collect();
    let kin_full: Vec<Complex<T>> = sp.k.iter().map(|&k| phase(half * k * k)).collect();

    let mut psi = psi0.psi.clone();
    let mut v = vec![T::zero(); grid.nx];
    let margin = (grid.nx / 32).max(1);
    let norm0 = psi0.norm();

    let mut samples = Vec::with_capacity(n_out + 1);
    let mut states = Vec::new();
    let mut record = |psi: &[Complex<T>], t: T, v: &mut [T]| -> Result<()> {
        potential.fill(&xs, t, v);
        let g1 = coupling(t);
        let state = WaveState {
            grid,
            psi: psi.to_vec(),
            t,
            g1,
        };
        if let Some(tol) = opts.box_tolerance {
            let edge = state.edge_density(margin);
            if edge > tol {
                return Err(StaError::BoxTooSmall {
                    t: t.as_f64(),
                    density: edge.as_f64(),
                });
            }
        }
        if let Some(limit) = opts.step_limit {
            let product = step_product(&sp, psi, v, g1) * h;
            if product > limit {
                return Err(StaError::StepTooLarge {
                    product: product.as_f64(),
                });
            }
        }
        let o: Observables<T> = sp.observables(psi, v, g1);
        let fid = match &opts.target {
            Some(target) => Some(super::fidelity(&state, target)?),
            None => None,
        };
        samples.push(RunSample {
            t,
            norm: o.norm,
            energy: o.energy,
            potential: o.potential,
            dh: o.dh,
            fidelity: fid,
        });
        if opts.keep_states {
            states.push(state);
        }
        Ok(())
    };

    record(&psi, T::zero(), &mut v)?;
    let mul = |buf: &mut [Complex<T>], f: &[Complex<T>]| {
        for (z, w) in buf.iter_mut().zip(f) {
            *z = *z * *w;
        }
    };
    for out in 0..n_out {
        sp.forward(&mut psi);
        mul(&mut psi, &kin_half);
        sp.inverse(&mut psi);
        for s in 0..per {
            let step = out * per + s;
            let tm = h * (T::from_usize_lossy(step) + half);
            potential.fill(&xs, tm, &mut v);
            let g1 = coupling(tm);
            for (z, &vj) in psi.iter_mut().zip(&v) {
                let e = vj + g1 * z.norm_sqr();
                *z = *z * phase(e);
            }
            sp.forward(&mut psi);
            mul(&mut psi, if s + 1 == per { &kin_half } else { &kin_full });
            sp.inverse(&mut psi);
        }
        let t = if out + 1 == n_out {
            tf
        } else {
            h * T::from_usize_lossy((out + 1) * per)
        };
        record(&psi, t, &mut v)?;
    }

    let dt_out = tf / T::from_usize_lossy(n_out);
    let avg = |f: &dyn Fn(&RunSample<T>) -> T| -> T {
        if tf > T::zero() {
            let vals: Vec<T> = samples.iter().map(f).collect();
            simpson(&vals, dt_out) / tf
        } else {
            f(&samples[0])
        }
    };
    let mean_energy = avg(&|s| s.energy);
    let mean_potential = avg(&|s| s.potential);
    let mean_dh = avg(&|s| s.dh);
    let max_norm_drift = samples
        .iter()
        .map(|s| (s.norm - norm0).abs())
        .fold(T::zero(), T::max);
    let report = RunReport {
        samples,
        dt: h,
        steps,
        mean_energy,
        mean_potential,
        mean_dh,
        max_norm_drift,
        states,
    };
    let fin = WaveState {
        grid,
        psi,
        t: tf,
        g1: coupling(tf),
    };
    Ok((fin, report))
}

/// `max(|V| + g|psi|^2, k^2/2)` over the region the state occupies.
fn step_product<T: Real>(sp: &Spectral<T>, psi: &[Complex<T>], v: &[T], g: T) -> T {
    let rel = T::lit(1e-10);
    let peak = psi.iter().map(|z| z.norm_sqr()).fold(T::zero(), T::max);
    let vmax = psi
        .iter()
        .zip(v)
        .filter(|(z, _)| z.norm_sqr() > rel * peak)
        .map(|(z, &vj)| (vj + g * z.norm_sqr()).abs())
        .fold(T::zero(), T::max);
    let k = sp.occupied_bandwidth(psi, rel);
    vmax.max(k * k / T::lit(2.0))
}
