//! Counterdiabatic terms for sampled finite-dimensional Hamiltonians and
//! for the transverse-field Ising momentum modes.

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Result, StaError};
use crate::grid::{fd_derivative, SampledFunction, TimeGrid};
use crate::interpolant::PolyFunction;
use crate::linalg::hermitian_eigen;
use crate::scalar::Real;
use crate::twolevel::{eigenstate, overlap, propagate_unitary, Bloch, TwoLevelProtocol};

/// Dense row-major complex matrix.
pub type Matrix<T> = Vec<Vec<Complex<T>>>;

pub fn zeros<T: Real>(n: usize) -> Matrix<T> {
    vec![vec![Complex::new(T::zero(), T::zero()); n]; n]
}

/// `sup |A_ij - conj(A_ji)|`
pub fn hermiticity_defect<T: Real>(a: &Matrix<T>) -> T {
    let mut d = T::zero();
    for (i, row) in a.iter().enumerate() {
        for (j, z) in row.iter().enumerate() {
            d = d.max((*z - a[j][i].conj()).norm());
        }
    }
    d
}

fn sub<T: Real>(a: &Matrix<T>, b: &Matrix<T>) -> Matrix<T> {
    a.iter()
        .zip(b)
        .map(|(r, s)| r.iter().zip(s).map(|(x, y)| *x - *y).collect())
        .collect()
}

fn mul<T: Real>(a: &Matrix<T>, b: &Matrix<T>) -> Matrix<T> {
    let n = a.len();
    let mut c = zeros(n);
    for i in 0..n {
        for k in 0..n {
            let aik = a[i][k];
            for j in 0..n {
                c[i][j] = c[i][j] + aik * b[k][j];
            }
        }
    }
    c
}

/// Largest entry modulus.
pub fn max_norm<T: Real>(a: &Matrix<T>) -> T {
    a.iter().flatten().map(|z| z.norm()).fold(T::zero(), T::max)
}

fn inner<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Complex<T> {
    a.iter().zip(b).map(|(x, y)| x.conj() * *y).sum()
}

/// `sum_n |v_n> w_n <v_n|` plus the off-diagonal part `sum |v_m> c_mn <v_n|`.
fn from_basis<T: Real>(vecs: &[Vec<Complex<T>>], coeff: &Matrix<T>) -> Matrix<T> {
    let n = vecs.len();
    let mut out = zeros(n);
    for (m, vm) in vecs.iter().enumerate() {
        for (l, vl) in vecs.iter().enumerate() {
            let c = coeff[m][l];
            if c.norm() == T::zero() {
                continue;
            }
            for i in 0..n {
                for j in 0..n {
                    out[i][j] = out[i][j] + vm[i] * c * vl[j].conj();
                }
            }
        }
    }
    out
}

/// Elements `<v_m|A|v_n>`.
pub fn in_basis<T: Real>(a: &Matrix<T>, vecs: &[Vec<Complex<T>>]) -> Matrix<T> {
    let n = vecs.len();
    let av: Vec<Vec<Complex<T>>> = vecs
        .iter()
        .map(|v| (0..n).map(|i| (0..n).map(|j| a[i][j] * v[j]).sum()).collect())
        .collect();
    (0..n)
        .map(|m| (0..n).map(|l| inner(&vecs[m], &av[l])).collect())
        .collect()
}

/// Hermitian matrices sampled on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledHamiltonian<T> {
    pub grid: TimeGrid<T>,
    pub dim: usize,
    pub samples: Vec<Matrix<T>>,
}

impl<T: Real> SampledHamiltonian<T> {
    pub fn new(grid: TimeGrid<T>, samples: Vec<Matrix<T>>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(StaError::GridMismatch(format!(
                "{} samples for a grid of {} points",
                samples.len(),
                grid.len()
            )));
        }
        let dim = samples.first().map_or(0, |m| m.len());
        if dim == 0 {
            return Err(StaError::InvalidSpec("empty Hamiltonian".into()));
        }
        for (i, m) in samples.iter().enumerate() {
            if m.len() != dim || m.iter().any(|r| r.len() != dim) {
                return Err(StaError::InvalidSpec(format!("sample {i} is not {dim}x{dim}")));
            }
            let d = hermiticity_defect(m);
            if d > T::lit(1e-12) {
                return Err(StaError::InvalidSpec(format!("sample {i} is not Hermitian (defect {d:e})")));
            }
        }
        Ok(SampledHamiltonian { grid, dim, samples })
    }

    pub fn from_fn(grid: TimeGrid<T>, f: impl Fn(T) -> Matrix<T>) -> Result<Self> {
        Self::new(grid, grid.times().into_iter().map(f).collect())
    }

    /// `h·σ` for a Cartesian field.
    pub fn from_bloch(grid: TimeGrid<T>, f: impl Fn(T) -> Bloch<T>) -> Result<Self> {
        Self::from_fn(grid, |t| pauli(f(t)))
    }

    /// Smallest level spacing per sample.
    pub fn gaps(&self) -> Vec<T> {
        self.samples.par_iter().map(|m| min_gap(&hermitian_eigen(m).0)).collect()
    }
}

/// `h·σ`
pub fn pauli<T: Real>(h: Bloch<T>) -> Matrix<T> {
    let c = |re: T, im: T| Complex::new(re, im);
    vec![
        vec![c(h[2], T::zero()), c(h[0], -h[1])],
        vec![c(h[0], h[1]), c(-h[2], T::zero())],
    ]
}

fn min_gap<T: Real>(e: &[T]) -> T {
    e.windows(2).map(|w| w[1] - w[0]).fold(T::infinity(), T::min)
}

/// Instantaneous eigenbasis with continuous ordering and fixed gauge.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenFrames<T> {
    pub grid: TimeGrid<T>,
    /// `energies[i][n]`
    pub energies: Vec<Vec<T>>,
    /// `vectors[i][n]` is `|n(t_i)>`.
    pub vectors: Vec<Vec<Vec<Complex<T>>>>,
}

impl<T: Real> EigenFrames<T> {
    /// Diagonalizes every sample; levels are tracked by maximal overlap with
    /// the previous sample and the gauge is fixed.
    pub fn new(h: &SampledHamiltonian<T>) -> Result<Self> {
        let eig: Vec<(Vec<T>, Vec<Vec<Complex<T>>>)> = h.samples.par_iter().map(|m| hermitian_eigen(m)).collect();
        let tol = T::lit(1e-8);
        for (i, (e, _)) in eig.iter().enumerate() {
            let gap = min_gap(e);
            if gap < tol {
                return Err(StaError::DegenerateSpectrum {
                    t: h.grid.t(i).as_f64(),
                    gap: gap.as_f64(),
                });
            }
        }
        let mut energies = Vec::with_capacity(eig.len());
        let mut vectors: Vec<Vec<Vec<Complex<T>>>> = Vec::with_capacity(eig.len());
        for (e, v) in eig {
            match vectors.last() {
                None => {
                    energies.push(e);
                    vectors.push(v);
                }
                Some(prev) => {
                    let order = match_levels(prev, &v);
                    energies.push(order.iter().map(|&k| e[k]).collect());
                    vectors.push(order.iter().map(|&k| v[k].clone()).collect());
                }
            }
        }
        let mut frames = EigenFrames { grid: h.grid, energies, vectors };
        frames.fix_gauge();
        Ok(frames)
    }

    /// Largest component of each vector real positive at `t = 0`; afterwards
    /// `<n(t_i)|n(t_{i+1})>` real positive.
    pub fn fix_gauge(&mut self) {
        for v in self.vectors[0].iter_mut() {
            let big = v.iter().fold(Complex::new(T::zero(), T::zero()), |a, z| if z.norm() > a.norm() { *z } else { a });
            let ph = big.conj() / big.norm();
            v.iter_mut().for_each(|z| *z = *z * ph);
        }
        for i in 1..self.vectors.len() {
            let (done, rest) = self.vectors.split_at_mut(i);
            for (prev, v) in done[i - 1].iter().zip(rest[0].iter_mut()) {
                let o = inner(prev, v);
                let ph = o.conj() / o.norm();
                v.iter_mut().for_each(|z| *z = *z * ph);
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.energies[0].len()
    }

    /// `<m(t_i)|d_t n(t_i)>`, fourth-order differences of the gauge-fixed
    /// vectors.
    fn connections(&self) -> Vec<Matrix<T>> {
        let n = self.dim();
        let dt = self.grid.dt();
        let len = self.vectors.len();
        let mut deriv = vec![vec![vec![Complex::new(T::zero(), T::zero()); n]; n]; len];
        for l in 0..n {
            for c in 0..n {
                let re: Vec<T> = self.vectors.iter().map(|v| v[l][c].re).collect();
                let im: Vec<T> = self.vectors.iter().map(|v| v[l][c].im).collect();
                let (dre, dim) = (fd_derivative(&re, dt), fd_derivative(&im, dt));
                for i in 0..len {
                    deriv[i][l][c] = Complex::new(dre[i], dim[i]);
                }
            }
        }
        (0..len)
            .into_par_iter()
            .map(|i| {
                (0..n)
                    .map(|m| (0..n).map(|l| inner(&self.vectors[i][m], &deriv[i][l])).collect())
                    .collect()
            })
            .collect()
    }
}

fn match_levels<T: Real>(prev: &[Vec<Complex<T>>], next: &[Vec<Complex<T>>]) -> Vec<usize> {
    let n = prev.len();
    let mut taken = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for p in prev {
        let best = (0..n)
            .filter(|&k| !taken[k])
            .max_by(|&a, &b| inner(p, &next[a]).norm().partial_cmp(&inner(p, &next[b]).norm()).unwrap())
            .unwrap();
        taken[best] = true;
        order.push(best);
    }
    order
}

fn cd_from_connections<T: Real>(frames: &EigenFrames<T>, conn: &[Matrix<T>]) -> Vec<Matrix<T>> {
    let n = frames.dim();
    let i = Complex::new(T::zero(), T::one());
    let half = T::lit(0.5);
    (0..conn.len())
        .into_par_iter()
        .map(|s| {
            let mut c = zeros(n);
            for m in 0..n {
                for l in 0..n {
                    if m != l {
                        c[m][l] = (i * conn[s][m][l] + (i * conn[s][l][m]).conj()) * half;
                    }
                }
            }
            from_basis(&frames.vectors[s], &c)
        })
        .collect()
}

/// `i sum_n (|d_t n><n| - <n|d_t n>|n><n|)` from already fixed frames.
pub fn cd_from_frames<T: Real>(frames: &EigenFrames<T>) -> Result<SampledHamiltonian<T>> {
    let conn = frames.connections();
    SampledHamiltonian::new(frames.grid, cd_from_connections(frames, &conn))
}

/// Counterdiabatic Hamiltonian of a sampled reference.
pub fn numeric_cd<T: Real>(h: &SampledHamiltonian<T>) -> Result<SampledHamiltonian<T>> {
    cd_from_frames(&EigenFrames::new(h)?)
}

/// Phase choice for the transitionless Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub enum PhaseChoice<T> {
    /// `xi_n = -∫ E_n dt`, which gives back `H0 + H_cd`.
    Adiabatic,
    Zero,
    Custom(Vec<SampledFunction<T>>),
}

/// `-sum_n |n> xi_n' <n| + i sum_n |d_t n><n|`, with the diagonal
/// connection removed as in the counterdiabatic term.
pub fn transitionless_hamiltonian<T: Real>(
    h: &SampledHamiltonian<T>,
    phases: &PhaseChoice<T>,
) -> Result<SampledHamiltonian<T>> {
    let frames = EigenFrames::new(h)?;
    let n = frames.dim();
    let rates: Vec<Vec<T>> = match phases {
        PhaseChoice::Adiabatic => frames.energies.clone(),
        PhaseChoice::Zero => vec![vec![T::zero(); n]; frames.energies.len()],
        PhaseChoice::Custom(xi) => {
            if xi.len() != n {
                return Err(StaError::InvalidSpec(format!("{} phases for {n} levels", xi.len())));
            }
            let d: Vec<SampledFunction<T>> = xi.iter().map(|x| x.derivative().map(|v| -v)).collect();
            (0..frames.energies.len()).map(|i| d.iter().map(|f| f.values[i]).collect()).collect()
        }
    };
    let cd = cd_from_frames(&frames)?;
    let samples = (0..cd.samples.len())
        .map(|s| {
            let mut c = zeros(n);
            for (k, r) in rates[s].iter().enumerate() {
                c[k][k] = Complex::new(*r, T::zero());
            }
            let diag = from_basis(&frames.vectors[s], &c);
            diag.iter()
                .zip(&cd.samples[s])
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| *x + *y).collect())
                .collect()
        })
        .collect();
    SampledHamiltonian::new(h.grid, samples)
}

/// `max_t ||i dI/dt - [H, I]||` for `I = sum_n |n(t)> lambda_n <n(t)|` built
/// from the eigenbasis of `reference` and `H` the driving Hamiltonian.
pub fn invariant_residual<T: Real>(
    reference: &SampledHamiltonian<T>,
    driving: &SampledHamiltonian<T>,
    lambdas: &[T],
) -> Result<T> {
    let frames = EigenFrames::new(reference)?;
    let n = frames.dim();
    if lambdas.len() != n {
        return Err(StaError::InvalidSpec(format!("{} eigenvalues for {n} levels", lambdas.len())));
    }
    let mut diag = zeros(n);
    for (k, l) in lambdas.iter().enumerate() {
        diag[k][k] = Complex::new(*l, T::zero());
    }
    let inv: Vec<Matrix<T>> = frames.vectors.iter().map(|v| from_basis(v, &diag)).collect();
    let dt = frames.grid.dt();
    let mut deriv = vec![zeros(n); inv.len()];
    for a in 0..n {
        for b in 0..n {
            let re: Vec<T> = inv.iter().map(|m| m[a][b].re).collect();
            let im: Vec<T> = inv.iter().map(|m| m[a][b].im).collect();
            let (dre, dim) = (fd_derivative(&re, dt), fd_derivative(&im, dt));
            for s in 0..inv.len() {
                deriv[s][a][b] = Complex::new(dre[s], dim[s]);
            }
        }
    }
    let i = Complex::new(T::zero(), T::one());
    Ok((0..inv.len())
        .map(|s| {
            let h = &driving.samples[s];
            let comm = sub(&mul(h, &inv[s]), &mul(&inv[s], h));
            let lhs: Matrix<T> = deriv[s].iter().map(|r| r.iter().map(|z| i * *z).collect()).collect();
            max_norm(&sub(&lhs, &comm))
        })
        .fold(T::zero(), T::max))
}

/// Transverse-field Ising modes `a_k(λ) = (sin k, 0, λ + cos k)`, mode
/// Hamiltonian `a_k·σ`, with a quintic ramp of `λ`.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingModeSet<T> {
    pub ks: Vec<T>,
    pub ramp: PolyFunction<T>,
}

impl<T: Real> IsingModeSet<T> {
    /// `k = π(2m - 1)/N`, `m = 1..N`.
    pub fn tfim(n_modes: usize, lambda0: T, lambda1: T, tf: T) -> Result<Self> {
        if n_modes == 0 || !(tf > T::zero()) {
            return Err(StaError::InvalidSpec("need at least one mode and tf > 0".into()));
        }
        let n = T::from_usize_lossy(n_modes);
        let ks = (1..=n_modes)
            .map(|m| T::PI() * (T::from_usize_lossy(2 * m) - T::one()) / n)
            .collect();
        Ok(IsingModeSet {
            ks,
            ramp: PolyFunction::quintic(tf, lambda0, lambda1),
        })
    }

    pub fn tf(&self) -> T {
        self.ramp.tf
    }

    pub fn field(k: T, lambda: T) -> Bloch<T> {
        [k.sin(), T::zero(), lambda + k.cos()]
    }

    /// `∂a_k/∂λ`
    pub fn field_derivative(_k: T) -> Bloch<T> {
        [T::zero(), T::zero(), T::one()]
    }

    /// `a_k(λ(t))`
    pub fn mode_field(&self, k: T, t: T) -> Bloch<T> {
        Self::field(k, self.ramp.at(t, 0))
    }

    pub fn mode_hamiltonian(&self, k: T, grid: TimeGrid<T>) -> Result<SampledHamiltonian<T>> {
        SampledHamiltonian::from_bloch(grid, |t| self.mode_field(k, t))
    }
}

/// `λ'(t) / (2|a_k|^2) (a_k × ∂_λ a_k)`, the Cartesian counterdiabatic field
/// of one mode.
pub fn ising_cd_field<T: Real>(modes: &IsingModeSet<T>, k: T, t: T) -> Result<Bloch<T>> {
    let lambda = modes.ramp.at(t, 0);
    let a = IsingModeSet::field(k, lambda);
    let a2 = a[0] * a[0] + a[1] * a[1] + a[2] * a[2];
    if a2.sqrt() < T::lit(1e-10) {
        return Err(StaError::GapClosure {
            k: k.as_f64(),
            lambda: lambda.as_f64(),
        });
    }
    let da = IsingModeSet::<T>::field_derivative(k);
    let c = [a[1] * da[2] - a[2] * da[1], a[2] * da[0] - a[0] * da[2], a[0] * da[1] - a[1] * da[0]];
    let s = modes.ramp.at(t, 1) / (T::lit(2.0) * a2);
    Ok([s * c[0], s * c[1], s * c[2]])
}

/// Per-mode counterdiabatic matrices on `grid`.
pub fn ising_cd<T: Real>(modes: &IsingModeSet<T>, grid: TimeGrid<T>) -> Result<Vec<SampledHamiltonian<T>>> {
    modes
        .ks
        .par_iter()
        .map(|&k| {
            let samples = grid
                .times()
                .into_iter()
                .map(|t| ising_cd_field(modes, k, t).map(pauli))
                .collect::<Result<Vec<_>>>()?;
            SampledHamiltonian::new(grid, samples)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeResult<T> {
    pub k: T,
    pub p_excited_bare: T,
    pub p_excited_cd: T,
}

/// Propagates every mode from its ground state with and without the
/// counterdiabatic field; `protect(k)` selects the modes that receive it.
pub fn ising_ramp<T: Real>(
    modes: &IsingModeSet<T>,
    intervals: usize,
    protect: impl Fn(T) -> bool + Sync,
) -> Result<Vec<ModeResult<T>>> {
    let grid = TimeGrid::new(modes.tf(), intervals)?;
    let tf = modes.tf();
    modes
        .ks
        .par_iter()
        .map(|&k| {
            let end = modes.mode_field(k, tf);
            let psi0 = eigenstate(modes.mode_field(k, T::zero()), false);
            let excited = |p: &TwoLevelProtocol<T>| -> Result<T> {
                let run = propagate_unitary(p, &psi0)?;
                Ok(overlap(&eigenstate(end, true), &run.psi))
            };
            let bare = TwoLevelProtocol::from_cartesian_fn(grid, "tfim", |t| modes.mode_field(k, t));
            let p_bare = excited(&bare)?;
            let p_cd = if protect(k) {
                for t in grid.times() {
                    ising_cd_field(modes, k, t)?;
                }
                let cd = TwoLevelProtocol::from_cartesian_fn(grid, "tfim+cd", |t| {
                    let a = modes.mode_field(k, t);
                    let c = ising_cd_field(modes, k, t).unwrap_or([T::zero(); 3]);
                    [a[0] + c[0], a[1] + c[1], a[2] + c[2]]
                });
                excited(&cd)?
            } else {
                p_bare
            };
            Ok(ModeResult {
                k,
                p_excited_bare: p_bare,
                p_excited_cd: p_cd,
            })
        })
        .collect()
}

/// Mean excitation probability.
pub fn defect_density<T: Real>(p: &[T]) -> T {
    if p.is_empty() {
        return T::zero();
    }
    p.iter().copied().sum::<T>() / T::from_usize_lossy(p.len())
}

pub fn modes_csv<T: Real>(results: &[ModeResult<T>]) -> String {
    let mut out = String::from("k,p_excited_bare,p_excited_cd\n");
    for r in results {
        out.push_str(&format!(
            "{:.16e},{:.16e},{:.16e}\n",
            r.k.as_f64(),
            r.p_excited_bare.as_f64(),
            r.p_excited_cd.as_f64()
        ));
    }
    out
}
