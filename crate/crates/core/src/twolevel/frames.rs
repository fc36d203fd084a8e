use crate::error::{Result, StaError};
use crate::grid::{fd_derivative, SampledFunction};
use crate::scalar::Real;

use super::{bloch_vector, cross, norm, polar_angle, rotate_y, Bloch, Spinor, TwoLevelProtocol};

fn require_real_coupling<T: Real>(p: &TwoLevelProtocol<T>) -> Result<()> {
    let scale = T::one() + p.omega_r.max_abs();
    if p.omega_i.max_abs() > T::lit(1e-12) * scale {
        return Err(StaError::InvalidSpec("reference protocol must have Ω_I = 0".into()));
    }
    Ok(())
}

/// `Ω_a = (Ω_R Δ' - Ω_R' Δ) / Ω^2`, i.e. the polar-angle rate of the
/// reference field.
pub fn counterdiabatic_term<T: Real>(protocol: &TwoLevelProtocol<T>) -> Result<SampledFunction<T>> {
    require_real_coupling(protocol)?;
    let grid = protocol.grid();
    let rd = protocol.omega_r.derivative();
    let dd = protocol.delta.derivative();
    let mut out = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let r = protocol.omega_r.values[i];
        let d = protocol.delta.values[i];
        let w2 = r * r + d * d;
        if w2.sqrt() < T::lit(1e-12) {
            return Err(StaError::DegenerateGap {
                t: grid.t(i).as_f64(),
                gap: w2.sqrt().as_f64(),
            });
        }
        out.push((r * dd.values[i] - rd.values[i] * d) / w2);
    }
    SampledFunction::new(grid, out)
}

/// Reference protocol with the counterdiabatic field in the `Ω_I` slot.
pub fn with_counterdiabatic<T: Real>(protocol: &TwoLevelProtocol<T>) -> Result<TwoLevelProtocol<T>> {
    let oa = counterdiabatic_term(protocol)?;
    Ok(TwoLevelProtocol {
        omega_r: protocol.omega_r.clone(),
        omega_i: oa,
        delta: protocol.delta.clone(),
        family: format!("{}+cd", protocol.family),
    })
}

/// `max |Ω_a| / (2 Ω)`; small values mean adiabatic following.
pub fn adiabaticity<T: Real>(protocol: &TwoLevelProtocol<T>) -> Result<T> {
    let oa = counterdiabatic_term(protocol)?;
    Ok((0..oa.values.len())
        .map(|i| {
            let w = protocol.omega_r.values[i].hypot(protocol.delta.values[i]);
            oa.values[i].abs() / (T::lit(2.0) * w)
        })
        .fold(T::zero(), T::max))
}

/// Population of the reference Hamiltonian's eigenstate connected to the
/// initial state's, at every grid time.
pub fn adiabatic_populations<T: Real>(reference: &TwoLevelProtocol<T>, states: &[Spinor<T>]) -> Vec<T> {
    let h0 = reference.field_at(0);
    let r0 = bloch_vector(&states[0]);
    let upper = super::dot(h0, r0) >= T::zero();
    states
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let p = super::upper_population(reference.field_at(i), bloch_vector(s));
            if upper {
                p
            } else {
                T::one() - p
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryAlternative<T> {
    /// `H' = P σx + (Z0 - φ'/2) σz`
    pub protocol: TwoLevelProtocol<T>,
    /// Unwrapped rotation angle `φ = arctan(Θ0' / 2 X0)`.
    pub phi: SampledFunction<T>,
    /// `P = [X0^2 + (Θ0'/2)^2]^{1/2}`
    pub coupling: SampledFunction<T>,
}

/// Rotates the counterdiabatic protocol about z so that the `σy` term
/// disappears, trading it for a detuning correction.
pub fn unitary_alternative_twolevel<T: Real>(reference: &TwoLevelProtocol<T>) -> Result<UnitaryAlternative<T>> {
    let oa = counterdiabatic_term(reference)?;
    let grid = reference.grid();
    let half = T::lit(0.5);
    let two_pi = T::TAU();
    let mut phi = Vec::with_capacity(grid.len());
    let mut p = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let x0 = half * reference.omega_r.values[i];
        let y = half * oa.values[i];
        let mut a = y.atan2(x0);
        if let Some(&prev) = phi.last() {
            let prev: T = prev;
            while a - prev > T::PI() {
                a -= two_pi;
            }
            while a - prev < -T::PI() {
                a += two_pi;
            }
        } else if a < T::zero() {
            a += two_pi;
        }
        phi.push(a);
        p.push(x0.hypot(y));
    }
    let wrap = |a: T| {
        let r = a % two_pi;
        r.abs().min(two_pi - r.abs())
    };
    let tol = T::lit(1e-8);
    let (a0, a1) = (wrap(phi[0]), wrap(*phi.last().expect("non-empty grid")));
    if a0 > tol || a1 > tol {
        return Err(StaError::EdgeMismatch(format!(
            "rotation angle does not vanish at the edges ({a0:e}, {a1:e})"
        )));
    }
    let phid = fd_derivative(&phi, grid.dt());
    let phi = SampledFunction::new(grid, phi)?;
    let coupling = SampledFunction::new(grid, p)?;
    let protocol = TwoLevelProtocol::from_cartesian_fn(grid, "unitary-alternative", |_| [T::zero(); 3]);
    let mut protocol = protocol;
    for i in 0..grid.len() {
        let z0 = -half * reference.delta.values[i];
        let b = [coupling.values[i], T::zero(), z0 - half * phid[i]];
        let (r, im, d) = super::from_cartesian(b);
        protocol.omega_r.values[i] = r;
        protocol.omega_i.values[i] = im;
        protocol.delta.values[i] = d;
    }
    Ok(UnitaryAlternative { protocol, phi, coupling })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Superadiabatic<T> {
    /// `H0 + H_cd^(1)`
    pub protocol: TwoLevelProtocol<T>,
    /// First-order counterdiabatic field in Cartesian form, per sample.
    pub cd1: Vec<Bloch<T>>,
    /// Angle of the first-frame Hamiltonian within the plane of `y` and
    /// `R_y(Θ0(0)) z`.
    pub theta1: SampledFunction<T>,
    /// `|K1|` at `t = 0` and `t = T`.
    pub k1_edges: (T, T),
    /// `max |H_cd^(0)|` and `max |H_cd^(1)|` (Cartesian norms).
    pub max_cd0: T,
    pub max_cd1: T,
}

/// First superadiabatic iteration for a real two-level reference.
pub fn superadiabatic_cd1<T: Real>(reference: &TwoLevelProtocol<T>) -> Result<Superadiabatic<T>> {
    let oa = counterdiabatic_term(reference)?;
    let grid = reference.grid();
    let n = grid.len();
    let half = T::lit(0.5);
    let th0: Vec<T> = (0..n).map(|i| polar_angle(reference.field_at(i))).collect();
    // first-frame Hamiltonian: H0 - K0 rotated back by Θ0(t) - Θ0(0)
    let h1: Vec<Bloch<T>> = (0..n)
        .map(|i| {
            let h = reference.field_at(i);
            rotate_y([h[0], -half * oa.values[i], h[2]], th0[0] - th0[i])
        })
        .collect();
    let unit: Vec<Bloch<T>> = h1
        .iter()
        .map(|h| {
            let r = norm(*h);
            [h[0] / r, h[1] / r, h[2] / r]
        })
        .collect();
    let dn: Vec<Vec<T>> = (0..3)
        .map(|k| fd_derivative(&unit.iter().map(|u| u[k]).collect::<Vec<_>>(), grid.dt()))
        .collect();
    let k1: Vec<Bloch<T>> = (0..n)
        .map(|i| {
            let c = cross(unit[i], [dn[0][i], dn[1][i], dn[2][i]]);
            [half * c[0], half * c[1], half * c[2]]
        })
        .collect();
    let edges = (norm(k1[0]), norm(k1[n - 1]));
    let tol = T::lit(1e-8);
    if edges.0 > tol || edges.1 > tol {
        return Err(StaError::BoundaryConditionViolated(format!(
            "first-frame counterdiabatic term at the edges: {:e}, {:e}",
            edges.0, edges.1
        )));
    }
    let cd1: Vec<Bloch<T>> = (0..n).map(|i| rotate_y(k1[i], th0[i] - th0[0])).collect();
    let mut protocol = TwoLevelProtocol::from_cartesian_fn(grid, "superadiabatic-1", |_| [T::zero(); 3]);
    for i in 0..n {
        let h = reference.field_at(i);
        let b = [h[0] + cd1[i][0], h[1] + cd1[i][1], h[2] + cd1[i][2]];
        let (r, im, d) = super::from_cartesian(b);
        protocol.omega_r.values[i] = r;
        protocol.omega_i.values[i] = im;
        protocol.delta.values[i] = d;
    }
    // H1 lies in the plane of y and R_y(Θ0(0)) z
    let theta1 = SampledFunction::new(
        grid,
        (0..n).map(|i| (-half * oa.values[i]).atan2(norm(reference.field_at(i)))).collect(),
    )?;
    let max_cd0 = oa.values.iter().map(|v| (half * *v).abs()).fold(T::zero(), T::max);
    let max_cd1 = cd1.iter().map(|v| norm(*v)).fold(T::zero(), T::max);
    Ok(Superadiabatic {
        protocol,
        cd1,
        theta1,
        k1_edges: edges,
        max_cd0,
        max_cd1,
    })
}

#[cfg(test)]
mod tests {
    use super::super::*;
    use super::*;

    fn start_state(p: &TwoLevelProtocol<f64>) -> Spinor<f64> {
        eigenstate(p.field_at(0), true)
    }

    #[test]
    fn no_sweep_no_correction() {
        let p = TwoLevelProtocol::from_fn(crate::grid::TimeGrid::new(1.0, 50).unwrap(), "c", |_| (2.0, 0.0, 0.0));
        assert!(counterdiabatic_term(&p).unwrap().max_abs() < 1e-15);
        let alt = unitary_alternative_twolevel(&p).unwrap();
        assert!(alt.phi.max_abs() < 1e-15);
        assert!(alt.protocol.omega_r.sup_distance(&p.omega_r) < 1e-15);
        let zero = TwoLevelProtocol::from_fn(crate::grid::TimeGrid::new(1.0, 50).unwrap(), "z", |_| (0.0, 0.0, 0.0));
        assert!(matches!(counterdiabatic_term(&zero), Err(StaError::DegenerateGap { .. })));
    }

    #[test]
    fn landau_zener_transitionless() {
        let lz = landau_zener(1.0, 20.0, 2.0, 2000).unwrap();
        let psi0 = start_state(&lz);
        let bare = propagate_unitary(&lz, &psi0).unwrap();
        let bare_pop = *adiabatic_populations(&lz, &bare.states).last().unwrap();
        assert!(bare_pop < 0.9);
        let cd = with_counterdiabatic(&lz).unwrap();
        assert!(cd.max_rabi() > 0.0);
        let run = propagate_unitary(&cd, &psi0).unwrap();
        let pops = adiabatic_populations(&lz, &run.states);
        assert!(pops.iter().all(|p| 1.0 - p < 1e-8), "{}", 1.0 - pops.last().unwrap());
        assert!(adiabaticity(&lz).unwrap() > 1.0);
    }

    #[test]
    fn unitary_alternative_matches_cd_reference() {
        let lz = smooth_landau_zener(1.0, 6.0, 3.0, 3000).unwrap();
        let psi0 = start_state(&lz);
        let cd = with_counterdiabatic(&lz).unwrap();
        let alt = unitary_alternative_twolevel(&lz).unwrap();
        assert!(alt.protocol.omega_i.max_abs() == 0.0);
        for i in 0..lz.grid().len() {
            assert!(alt.coupling.values[i] >= 0.5 * lz.omega_r.values[i].abs());
        }
        let a = propagate_unitary(&cd, &psi0).unwrap();
        let b = propagate_unitary(&alt.protocol, &psi0).unwrap();
        assert!(1.0 - overlap(&a.psi, &b.psi) < 1e-8);
        let rough = landau_zener(1.0, 4.0, 3.0, 300).unwrap();
        assert!(matches!(unitary_alternative_twolevel(&rough), Err(StaError::EdgeMismatch(_))));
    }

    #[test]
    fn superadiabatic_first_order() {
        let lz = smooth_landau_zener(1.0f64, 6.0, 6.0, 6000).unwrap();
        let sa = superadiabatic_cd1(&lz).unwrap();
        assert!(sa.max_cd1 < sa.max_cd0, "{} {}", sa.max_cd1, sa.max_cd0);
        // direction (cos Θ0, 0, -sin Θ0) with magnitude |Θ1'|/2
        let th1d = sa.theta1.derivative();
        for i in (0..lz.grid().len()).step_by(97) {
            let th0 = polar_angle(lz.field_at(i));
            let v = sa.cd1[i];
            let proj = v[0] * th0.cos() - v[2] * th0.sin();
            assert!((proj.abs() - 0.5 * th1d.values[i].abs()).abs() < 1e-7);
            assert!(v[1].abs() < 1e-12);
        }
        let psi0 = start_state(&lz);
        let run = propagate_unitary(&sa.protocol, &psi0).unwrap();
        let fin = *adiabatic_populations(&lz, &run.states).last().unwrap();
        assert!(1.0 - fin < 1e-6, "{}", 1.0 - fin);
        let lin = landau_zener(1.0, 4.0, 3.0, 300).unwrap();
        assert!(matches!(superadiabatic_cd1(&lin), Err(StaError::BoundaryConditionViolated(_))));
    }
}
