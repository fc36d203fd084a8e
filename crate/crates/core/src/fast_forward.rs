//! Fast-forward potentials for a designed density, applied to splitting a
//! Gaussian wavepacket into two.

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Result, StaError};
use crate::grid::{cumulative_integral, lagrange_interpolate, simpson, TimeGrid};
use crate::scalar::Real;
use crate::twolevel::{propagate_unitary, TwoLevelProtocol};
use crate::wave::{
    fidelity, propagate, stationary_state, Potential, PropagateOptions, Spectral, SpatialGrid, StationaryOptions,
    WaveState,
};

/// `erfc(y) exp(y^2)`
pub fn erfcx<T: Real>(y: T) -> T {
    let y = y.as_f64();
    let v = if y < 25.0 {
        libm::erfc(y) * (y * y).exp()
    } else {
        let y2 = 1.0 / (2.0 * y * y);
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..8 {
            term *= -((2 * k - 1) as f64) * y2;
            sum += term;
        }
        sum / (y * std::f64::consts::PI.sqrt())
    };
    T::lit(v)
}

/// Splitting density `r = z(t) [G(x - x0) + G(x + x0)]` with Gaussian
/// branches of width `a0` and `x0(s) = xf (3 s^2 - 2 s^3)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityDesign<T> {
    pub a0: T,
    pub xf: T,
    pub tf: T,
    pub grid: SpatialGrid<T>,
}

/// Pointwise design quantities at one `(x, t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Local<T> {
    r: T,
    dr2: T,
    /// `phi_x`
    velocity: T,
    /// `r'' / r`
    curvature: T,
}

pub fn splitting_density<T: Real>(a0: T, xf: T, tf: T, grid: SpatialGrid<T>) -> Result<DensityDesign<T>> {
    if !(a0 > T::zero() && xf > T::zero() && tf > T::zero()) {
        return Err(StaError::InvalidSpec("splitting needs a0, xf, tf > 0".into()));
    }
    Ok(DensityDesign { a0, xf, tf, grid })
}

impl<T: Real> DensityDesign<T> {
    /// `(x0, x0')`, the cubic continued outside `[0, tf]`.
    pub fn centre(&self, t: T) -> (T, T) {
        let s = t / self.tf;
        let (two, three, six) = (T::lit(2.0), T::lit(3.0), T::lit(6.0));
        (
            self.xf * s * s * (three - two * s),
            self.xf * six * s * (T::one() - s) / self.tf,
        )
    }

    /// `(z, z')`
    pub fn normalization(&self, t: T) -> (T, T) {
        let (x0, v0) = self.centre(t);
        let a2 = self.a0 * self.a0;
        let e = (-x0 * x0 / a2).exp();
        let z = (T::lit(2.0) * T::PI().sqrt() * self.a0 * (T::one() + e)).sqrt().recip();
        (z, z * x0 * v0 * e / (a2 * (T::one() + e)))
    }

    pub fn amplitude(&self, x: T, t: T) -> T {
        self.local(x, t).r
    }

    pub fn sample(&self, t: T) -> Vec<T> {
        self.grid.xs().into_iter().map(|x| self.amplitude(x, t)).collect()
    }

    /// `r(x, t) e^{i phi(x, t)}` with the phase gauge of [`solve_phase`].
    pub fn state(&self, t: T) -> WaveState<T> {
        let sol = solve_phase(self, t);
        let r = self.sample(t);
        let psi = r
            .iter()
            .zip(&sol.phi)
            .map(|(&a, &p)| Complex::from_polar(a, p))
            .collect();
        WaveState {
            grid: self.grid,
            psi,
            t,
            g1: T::zero(),
        }
    }

    /// Everything is evaluated for `x <= 0` relative to the left branch and
    /// mirrored: `r`, `dr2`, `r''/r` are even and `phi_x` is odd.
    fn local(&self, x: T, t: T) -> Local<T> {
        let (x0, v0) = self.centre(t);
        let (z, zd) = self.normalization(t);
        let a0 = self.a0;
        let a2 = a0 * a0;
        let xl = -x.abs();
        let up = xl + x0;
        let um = xl - x0;
        let rho = (T::lit(2.0) * xl * x0 / a2).exp();
        let gp = (-up * up / (T::lit(2.0) * a2)).exp();
        let sp = T::PI().sqrt();
        let half = T::lit(0.5);
        let two = T::lit(2.0);
        // F / (z^2 G+^2) and J / (z^2 G+^2) with J = ∫_{-inf}^x ∂t r^2
        let f = half * sp * a0 * (erfcx((x0 - xl) / a0) * rho * rho + erfcx(-up / a0) + two * erfcx(-xl / a0) * rho);
        let j = two * zd / z * f + v0 * (T::one() - rho * rho) - two * sp * x0 * v0 / a0 * erfcx(-xl / a0) * rho;
        let velocity = -j / ((T::one() + rho) * (T::one() + rho));
        let curvature = (rho * (um * um - a2) + (up * up - a2)) / (a2 * a2 * (T::one() + rho));
        let gm = rho * gp;
        let r = z * (gp + gm);
        let dr2 = two * z * zd * (gp + gm) * (gp + gm) + two * z * z * (gp + gm) * (gm * um - gp * up) * v0 / a2;
        Local {
            r,
            dr2,
            velocity: if x > T::zero() { -velocity } else { velocity },
            curvature,
        }
    }
}

/// Phase of the fast-forward state at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSolution<T> {
    pub t: T,
    pub phi_x: Vec<T>,
    /// `phi(x_min, t) = 0`
    pub phi: Vec<T>,
    /// L2 norm of `∂x(r^2 phi_x) + ∂t r^2`.
    pub residual: T,
}

/// Solves `∂x(r^2 ∂x phi) = -∂t r^2` for the splitting design with the flux
/// integral in closed form.
pub fn solve_phase<T: Real>(design: &DensityDesign<T>, t: T) -> PhaseSolution<T> {
    let xs = design.grid.xs();
    let loc: Vec<Local<T>> = xs.iter().map(|&x| design.local(x, t)).collect();
    let phi_x: Vec<T> = loc.iter().map(|l| l.velocity).collect();
    let flux: Vec<T> = loc.iter().map(|l| l.r * l.r * l.velocity).collect();
    let dr2: Vec<T> = loc.iter().map(|l| l.dr2).collect();
    let residual = continuity_residual(design.grid, &flux, &dr2);
    PhaseSolution {
        t,
        phi: cumulative_integral(&phi_x, design.grid.dx()),
        phi_x,
        residual,
    }
}

fn continuity_residual<T: Real>(grid: SpatialGrid<T>, flux: &[T], dr2: &[T]) -> T {
    let div = Spectral::new(grid).derivative_real(flux);
    let sq: Vec<T> = div.iter().zip(dr2).map(|(a, b)| (*a + *b) * (*a + *b)).collect();
    simpson(&sq, grid.dx()).sqrt()
}

/// Same solve for a sampled density: `r` and `∂t r^2` on `grid`, flux by
/// cumulative quadrature from the left edge.
pub fn solve_phase_sampled<T: Real>(grid: SpatialGrid<T>, r: &[T], dr2: &[T], t: T) -> Result<PhaseSolution<T>> {
    if r.len() != grid.nx || dr2.len() != grid.nx {
        return Err(StaError::GridMismatch("density samples do not match the grid".into()));
    }
    let floor = T::lit(1e-300);
    let first = r.iter().position(|v| *v * *v > floor);
    let last = r.iter().rposition(|v| *v * *v > floor);
    if let (Some(a), Some(b)) = (first, last) {
        if let Some(j) = (a..=b).find(|&j| r[j] * r[j] <= floor) {
            return Err(StaError::ZeroDensity { x: grid.x(j).as_f64() });
        }
    }
    let left = cumulative_integral(dr2, grid.dx());
    let total = left[left.len() - 1];
    let r2: Vec<T> = r.iter().map(|a| *a * *a).collect();
    let mass = cumulative_integral(&r2, grid.dx());
    let half = T::lit(0.5) * mass[mass.len() - 1];
    // integrate from the lighter side so tail errors stay small relative to r^2
    let flux: Vec<T> = left
        .iter()
        .zip(&mass)
        .map(|(&j, &m)| if m <= half { j } else { j - total })
        .collect();
    let phi_x: Vec<T> = r
        .iter()
        .zip(&flux)
        .map(|(&a, &j)| if a * a > floor { -j / (a * a) } else { T::zero() })
        .collect();
    let signed: Vec<T> = flux.iter().map(|j| -*j).collect();
    Ok(PhaseSolution {
        t,
        phi: cumulative_integral(&phi_x, grid.dx()),
        residual: continuity_residual(grid, &signed, dr2),
        phi_x,
    })
}

/// Real fast-forward potential
/// `V = -phi_t + (r''/r - phi_x^2)/2 - g1 r^2`, tabulated on a time grid and
/// interpolated in time.
#[derive(Debug, Clone, PartialEq)]
pub struct FFPotential<T> {
    pub design: DensityDesign<T>,
    pub g1: T,
    pub times: TimeGrid<T>,
    /// Point where `phi = 0`.
    pub gauge_x: T,
    pub cap: T,
    /// `v[j]` is the time series at `x_j`.
    pub v: Vec<Vec<T>>,
    /// Continuity residual per time sample.
    pub residuals: Vec<T>,
    /// Fraction of `(x, t)` samples hit by the clamp.
    pub clamped: T,
}

impl<T: Real> FFPotential<T> {
    pub fn max_residual(&self) -> T {
        self.residuals.iter().copied().fold(T::zero(), T::max)
    }

    /// Potential on the spatial grid at `t`.
    pub fn at(&self, t: T) -> Vec<T> {
        let h = self.times.dt();
        let t = t.max(T::zero()).min(self.times.tf);
        self.v.iter().map(|s| lagrange_interpolate(s, h, t)).collect()
    }

    /// `λ θ(x)` added on the right half.
    pub fn with_step(&self, lambda: T) -> StepPerturbed<'_, T> {
        StepPerturbed { base: self, lambda }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,t,V\n");
        for (j, s) in self.v.iter().enumerate() {
            let x = self.design.grid.x(j).as_f64();
            for (i, v) in s.iter().enumerate() {
                out.push_str(&format!("{:.16e},{:.16e},{:.16e}\n", x, self.times.t(i).as_f64(), v.as_f64()));
            }
        }
        out
    }
}

impl<T: Real> Potential<T> for FFPotential<T> {
    fn value(&self, x: T, t: T) -> T {
        let g = self.design.grid;
        let j = ((x - g.x_min) / g.dx()).round().to_usize().unwrap_or(0).min(g.nx - 1);
        let t = t.max(T::zero()).min(self.times.tf);
        lagrange_interpolate(&self.v[j], self.times.dt(), t)
    }

    fn fill(&self, xs: &[T], t: T, out: &mut [T]) {
        if xs.len() != self.v.len() {
            for (o, &x) in out.iter_mut().zip(xs) {
                *o = self.value(x, t);
            }
            return;
        }
        let h = self.times.dt();
        let t = t.max(T::zero()).min(self.times.tf);
        for (o, s) in out.iter_mut().zip(&self.v) {
            *o = lagrange_interpolate(s, h, t);
        }
    }
}

pub struct StepPerturbed<'a, T> {
    pub base: &'a FFPotential<T>,
    pub lambda: T,
}

impl<T: Real> Potential<T> for StepPerturbed<'_, T> {
    fn value(&self, x: T, t: T) -> T {
        self.base.value(x, t) + step(x, self.base.design.a0) * self.lambda
    }

    fn fill(&self, xs: &[T], t: T, out: &mut [T]) {
        self.base.fill(xs, t, out);
        for (o, &x) in out.iter_mut().zip(xs) {
            *o += step(x, self.base.design.a0) * self.lambda;
        }
    }
}

/// Smoothed step `(1 + tanh(x/w))/2` with `w = a0/10`.
fn step<T: Real>(x: T, a0: T) -> T {
    T::lit(0.5) * (T::one() + (x / (T::lit(0.1) * a0)).tanh())
}

pub const DEFAULT_CAP: f64 = 1e6;

/// Fast-forward potential of `design` on `intervals` time steps, with the
/// phase gauge `phi(x_min, t) = 0`.
pub fn ff_potential<T: Real>(design: &DensityDesign<T>, g1: T, intervals: usize) -> Result<FFPotential<T>> {
    ff_potential_with(design, g1, intervals, design.grid.x_min, T::lit(DEFAULT_CAP))
}

/// As [`ff_potential`] with the gauge point and clamp chosen. `phi_t` uses
/// fourth-order central differences in time.
pub fn ff_potential_with<T: Real>(
    design: &DensityDesign<T>,
    g1: T,
    intervals: usize,
    gauge_x: T,
    cap: T,
) -> Result<FFPotential<T>> {
    let times = TimeGrid::new(design.tf, intervals)?;
    let grid = design.grid;
    let xs = grid.xs();
    let h = design.tf * T::lit(1e-4);
    let gauge = |sol: &PhaseSolution<T>| -> Vec<T> {
        let p0 = interp_x(grid, &sol.phi, gauge_x);
        sol.phi.iter().map(|p| *p - p0).collect()
    };
    let rows: Vec<(Vec<T>, T, usize)> = times
        .times()
        .par_iter()
        .map(|&t| {
            let sol = solve_phase(design, t);
            let ph = |dt: T| gauge(&solve_phase(design, t + dt));
            let (p1, m1, p2, m2) = (ph(h), ph(-h), ph(h + h), ph(-h - h));
            let mut clamped = 0;
            let row = xs
                .iter()
                .enumerate()
                .map(|(j, &x)| {
                    let loc = design.local(x, t);
                    let phit = (T::lit(8.0) * (p1[j] - m1[j]) - (p2[j] - m2[j])) / (T::lit(12.0) * h);
                    let v = -phit + T::lit(0.5) * (loc.curvature - sol.phi_x[j] * sol.phi_x[j]) - g1 * loc.r * loc.r;
                    if v.abs() > cap || !v.is_finite() {
                        clamped += 1;
                        cap.copysign(if v.is_nan() { T::one() } else { v })
                    } else {
                        v
                    }
                })
                .collect();
            (row, sol.residual, clamped)
        })
        .collect();
    let mut v = vec![Vec::with_capacity(rows.len()); grid.nx];
    let mut residuals = Vec::with_capacity(rows.len());
    let mut clamped = 0usize;
    for (row, res, c) in rows {
        for (j, val) in row.into_iter().enumerate() {
            v[j].push(val);
        }
        residuals.push(res);
        clamped += c;
    }
    Ok(FFPotential {
        design: *design,
        g1,
        times,
        gauge_x,
        cap,
        v,
        residuals,
        clamped: T::from_usize_lossy(clamped) / T::from_usize_lossy(grid.nx * times.len()),
    })
}

fn interp_x<T: Real>(grid: SpatialGrid<T>, f: &[T], x: T) -> T {
    let u = ((x - grid.x_min) / grid.dx()).max(T::zero());
    let j = u.floor().to_usize().unwrap_or(0).min(grid.nx - 2);
    let w = u - T::from_usize_lossy(j);
    f[j] * (T::one() - w) + f[j + 1] * w
}

/// Outcome of propagating `r(x, 0)` under a fast-forward potential.
#[derive(Debug, Clone)]
pub struct FFRun<T> {
    pub fidelity: T,
    /// `max_t || |psi| - r ||_2` over the output samples.
    pub density_error: T,
    pub norm_drift: T,
    pub state: WaveState<T>,
}

/// Propagates the initial design state under `potential` and compares with
/// the designed amplitude at `samples` output times.
pub fn run_fast_forward<T: Real, V: Potential<T> + ?Sized>(
    design: &DensityDesign<T>,
    potential: &V,
    g1: T,
    dt: T,
    samples: usize,
) -> Result<FFRun<T>> {
    run_fast_forward_with(design, potential, g1, dt, samples, Some(T::lit(1e-12)))
}

/// `run_fast_forward` with an explicit edge-density tolerance.
pub fn run_fast_forward_with<T: Real, V: Potential<T> + ?Sized>(
    design: &DensityDesign<T>,
    potential: &V,
    g1: T,
    dt: T,
    samples: usize,
    box_tolerance: Option<T>,
) -> Result<FFRun<T>> {
    let psi0 = design.state(T::zero());
    let target = design.state(design.tf);
    let opts = PropagateOptions::new(dt)
        .samples(samples)
        .target(target.clone())
        .keep_states(true)
        .step_limit(None)
        .box_tolerance(box_tolerance);
    let (psi, report) = propagate(&psi0, potential, g1, design.tf, &opts)?;
    let dx = design.grid.dx();
    let density_error = report
        .states
        .iter()
        .map(|s| {
            let r = design.sample(s.t);
            let d: Vec<T> = s.psi.iter().zip(&r).map(|(z, a)| (z.norm() - *a) * (z.norm() - *a)).collect();
            simpson(&d, dx).sqrt()
        })
        .fold(T::zero(), T::max);
    Ok(FFRun {
        fidelity: fidelity(&psi, &target)?,
        density_error,
        norm_drift: report.max_norm_drift,
        state: psi,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymmetryPoint<T> {
    pub lambda_step: T,
    pub fidelity_ff: T,
    pub fidelity_adiabatic: T,
}

/// Settings for [`asymmetry_scan`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymmetryOptions<T> {
    pub dt: T,
    /// Time intervals of the tabulated stretched potential.
    pub intervals: usize,
    /// The adiabatic reference runs the same bifurcation over `stretch * tf`.
    pub stretch: T,
    /// Edge-density check; off by default since a perturbed state leaks a
    /// little into the steep tails of the fast-forward potential.
    pub box_tolerance: Option<T>,
}

impl<T: Real> AsymmetryOptions<T> {
    pub fn new(dt: T) -> Self {
        AsymmetryOptions {
            dt,
            intervals: 600,
            stretch: T::lit(50.0),
            box_tolerance: None,
        }
    }
}

/// Final fidelity to the symmetric split state under `V_FF + λ θ(x)` for
/// the shortcut and for the stretched adiabatic reference.
pub fn asymmetry_scan<T: Real>(
    ff: &FFPotential<T>,
    lambdas: &[T],
    opts: &AsymmetryOptions<T>,
) -> Result<Vec<AsymmetryPoint<T>>> {
    let slow_design = DensityDesign {
        tf: ff.design.tf * opts.stretch,
        ..ff.design
    };
    let slow = ff_potential_with(&slow_design, ff.g1, opts.intervals, ff.gauge_x, ff.cap)?;
    let runs: Vec<(T, bool)> = lambdas.iter().flat_map(|&l| [(l, false), (l, true)]).collect();
    let fids: Vec<T> = runs
        .par_iter()
        .map(|&(l, adiabatic)| {
            let pot = if adiabatic { &slow } else { ff };
            run_fast_forward_with(&pot.design, &pot.with_step(l), pot.g1, opts.dt, 2, opts.box_tolerance)
                .map(|r| r.fidelity)
        })
        .collect::<Result<_>>()?;
    Ok(lambdas
        .iter()
        .enumerate()
        .map(|(i, &l)| AsymmetryPoint {
            lambda_step: l,
            fidelity_ff: fids[2 * i],
            fidelity_adiabatic: fids[2 * i + 1],
        })
        .collect())
}

pub fn asymmetry_csv<T: Real>(points: &[AsymmetryPoint<T>]) -> String {
    let mut out = String::from("lambda_step,fidelity_ff,fidelity_adiabatic\n");
    for p in points {
        out.push_str(&format!(
            "{:.16e},{:.16e},{:.16e}\n",
            p.lambda_step.as_f64(),
            p.fidelity_ff.as_f64(),
            p.fidelity_adiabatic.as_f64()
        ));
    }
    out
}

/// `2/tf`
pub fn sudden_threshold<T: Real>(tf: T) -> T {
    T::lit(2.0) / tf
}

/// Which of the two limiting final configurations applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitRegime {
    /// `δ(tf) >> λ`: eigenstates are the symmetric/antisymmetric split states.
    Split,
    /// `δ(tf) << λ`: eigenstates localize in the wells.
    Collapsed,
    Intermediate,
}

impl SplitRegime {
    pub fn classify<T: Real>(delta_final: T, lambda: T) -> Self {
        let ten = T::lit(10.0);
        if delta_final.abs() > ten * lambda.abs() {
            SplitRegime::Split
        } else if ten * delta_final.abs() < lambda.abs() {
            SplitRegime::Collapsed
        } else {
            SplitRegime::Intermediate
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoModeResult<T> {
    pub p_left: T,
    pub p_right: T,
    /// `|<(L + R)/√2|psi(tf)>|^2`
    pub split_fidelity: T,
    pub regime: SplitRegime,
}

/// Two-mode model `H = (1/2)[[λ, -δ], [-δ, -λ]]` in the moving basis
/// `(|R>, |L>)`, started in `(|L> + |R>)/√2`.
pub fn two_mode_dynamics<T: Real>(
    delta: impl Fn(T) -> T,
    lambda: T,
    tf: T,
    intervals: usize,
) -> Result<TwoModeResult<T>> {
    let grid = TimeGrid::new(tf, intervals)?;
    let half = T::lit(0.5);
    let p = TwoLevelProtocol::from_cartesian_fn(grid, "two-mode", |t| [-half * delta(t), T::zero(), half * lambda]);
    let s = T::lit(0.5).sqrt();
    let psi0 = [Complex::new(s, T::zero()), Complex::new(s, T::zero())];
    let run = propagate_unitary(&p, &psi0)?;
    let (pr, pl) = (run.psi[0].norm_sqr(), run.psi[1].norm_sqr());
    let sym = (run.psi[0] + run.psi[1]) * s;
    Ok(TwoModeResult {
        p_left: pl,
        p_right: pr,
        split_fidelity: sym.norm_sqr(),
        regime: SplitRegime::classify(delta(tf), lambda),
    })
}

/// Tunneling splitting `δ(t) = E1 - E0` of the unperturbed fast-forward
/// Hamiltonian at each tabulated time.
pub fn ff_tunneling<T: Real>(ff: &FFPotential<T>, stride: usize) -> Result<Vec<(T, T)>> {
    let grid = ff.design.grid;
    let idx: Vec<usize> = (0..ff.times.len()).step_by(stride.max(1)).collect();
    let opts = StationaryOptions::default();
    idx.par_iter()
        .map(|&i| {
            let v: Vec<T> = ff.v.iter().map(|s| s[i]).collect();
            let (_, e0) = stationary_state(grid, &v, T::zero(), 0, &opts)?;
            let (_, e1) = stationary_state(grid, &v, T::zero(), 1, &opts)?;
            Ok((ff.times.t(i), e1 - e0))
        })
        .collect()
}
