use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::grid::simpson;
use crate::scalar::Real;

use super::{propagate_master, AuxiliaryAngles, TwoLevelProtocol};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SensitivityMethod {
    ClosedForm,
    FiniteDifference,
}

impl SensitivityMethod {
    pub fn name(&self) -> &'static str {
        match self {
            SensitivityMethod::ClosedForm => "closed-form",
            SensitivityMethod::FiniteDifference => "finite-difference",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensitivityReport<T> {
    /// `-dP2/d(λ^2)` at zero noise.
    pub q_n: T,
    /// `-dP2/d(β^2)` at zero systematic error.
    pub q_s: T,
    pub method: SensitivityMethod,
}

/// Second-order amplitude-noise sensitivity by quadrature.
pub fn noise_sensitivity<T: Real>(angles: &AuxiliaryAngles<T>) -> T {
    let grid = angles.grid();
    let f: Vec<T> = (0..grid.len())
        .map(|i| {
            let (st, ct) = angles.theta.values[i].sin_cos();
            let (sa, ca) = angles.alpha.values[i].sin_cos();
            let thd = angles.theta_dot.values[i];
            let m = -angles.gamma_dot.values[i] * st;
            let a = m * sa - ca * thd;
            let b = m * ca + sa * thd;
            (ct * ct + ca * ca * st * st) * a * a + (ct * ct + sa * sa * st * st) * b * b
        })
        .collect();
    T::lit(0.25) * simpson(&f, grid.dt())
}

/// `|∫ e^{-iγ} Θ' sin^2 Θ dt|^2`
pub fn systematic_sensitivity<T: Real>(angles: &AuxiliaryAngles<T>) -> T {
    let grid = angles.grid();
    let n = grid.len();
    let mut re = Vec::with_capacity(n);
    let mut im = Vec::with_capacity(n);
    for i in 0..n {
        let st = angles.theta.values[i].sin();
        let w = angles.theta_dot.values[i] * st * st;
        let (sg, cg) = angles.gamma.values[i].sin_cos();
        re.push(w * cg);
        im.push(-w * sg);
    }
    Complex::new(simpson(&re, grid.dt()), simpson(&im, grid.dt())).norm_sqr()
}

pub fn closed_form_sensitivities<T: Real>(angles: &AuxiliaryAngles<T>) -> SensitivityReport<T> {
    SensitivityReport {
        q_n: noise_sensitivity(angles),
        q_s: systematic_sensitivity(angles),
        method: SensitivityMethod::ClosedForm,
    }
}

fn richardson_slope<T: Real>(p0: T, p1: T, p2: T, probe: T) -> T {
    let s1 = (p1 - p0) / probe;
    let s2 = (p2 - p0) / (T::lit(2.0) * probe);
    T::lit(2.0) * s1 - s2
}

const START: [f64; 3] = [0.0, 0.0, 1.0];

fn start<T: Real>() -> [T; 3] {
    START.map(T::lit)
}

/// `-dP2/d(λ^2)` from master-equation runs at `λ^2 = 0, p, 2p`.
pub fn fd_noise_sensitivity<T: Real>(protocol: &TwoLevelProtocol<T>, probe: T) -> Result<T> {
    let p = |l2: T| propagate_master(protocol, l2, T::zero(), start()).map(|r| r.p2);
    let two = T::lit(2.0);
    Ok(-richardson_slope(p(T::zero())?, p(probe)?, p(two * probe)?, probe))
}

/// `-(1/2) d^2P2/dβ^2` from symmetric master-equation runs at
/// `β = 0, ±b, ±2b` with `b^2 = probe`; `P2` is not even in `β`.
pub fn fd_systematic_sensitivity<T: Real>(protocol: &TwoLevelProtocol<T>, probe: T) -> Result<T> {
    let p = |b: T| propagate_master(protocol, T::zero(), b, start()).map(|r| r.p2);
    let b = probe.sqrt();
    let two = T::lit(2.0);
    let p0 = p(T::zero())?;
    let d1 = (p(b)? + p(-b)? - two * p0) / (b * b);
    let d2 = (p(two * b)? + p(-two * b)? - two * p0) / (T::lit(4.0) * b * b);
    Ok(-(T::lit(4.0) * d1 - d2) / T::lit(6.0))
}

/// Finite-difference sensitivities with probes `1e-4 T` for `λ^2` and
/// `1e-4` for `β^2`.
pub fn fd_sensitivities<T: Real>(protocol: &TwoLevelProtocol<T>) -> Result<SensitivityReport<T>> {
    let probe = T::lit(1e-4);
    Ok(SensitivityReport {
        q_n: fd_noise_sensitivity(protocol, probe * protocol.duration())?,
        q_s: fd_systematic_sensitivity(protocol, probe)?,
        method: SensitivityMethod::FiniteDifference,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorMapPoint<T> {
    pub lambda: T,
    pub beta: T,
    pub p2_noise_opt: T,
    pub p2_sys_opt: T,
}

/// Final excited population of two protocols over a `(λ, β)` grid; the
/// master equation sees `λ^2`. Rows are ordered `λ` major.
pub fn error_map<T: Real>(
    noise_opt: &TwoLevelProtocol<T>,
    sys_opt: &TwoLevelProtocol<T>,
    lambdas: &[T],
    betas: &[T],
) -> Result<Vec<ErrorMapPoint<T>>> {
    let pts: Vec<(T, T)> = lambdas
        .iter()
        .flat_map(|&l| betas.iter().map(move |&b| (l, b)))
        .collect();
    pts.par_iter()
        .map(|&(l, b)| {
            Ok(ErrorMapPoint {
                lambda: l,
                beta: b,
                p2_noise_opt: propagate_master(noise_opt, l * l, b, start())?.p2,
                p2_sys_opt: propagate_master(sys_opt, l * l, b, start())?.p2,
            })
        })
        .collect()
}

pub fn error_map_csv<T: Real>(points: &[ErrorMapPoint<T>]) -> String {
    let mut out = String::from("lambda,beta,P2_noiseopt,P2_sysopt\n");
    for p in points {
        out.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{:.16e}\n",
            p.lambda.as_f64(),
            p.beta.as_f64(),
            p.p2_noise_opt.as_f64(),
            p.p2_sys_opt.as_f64()
        ));
    }
    out
}
