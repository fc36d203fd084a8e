//! Polynomials in the scaled time `s = t / tf` fixed by boundary values and
//! derivatives at both ends.

use serde::{Deserialize, Serialize};

use crate::error::{Result, StaError};
use crate::grid::{SampledFunction, TimeFunction, TimeGrid};
use crate::linalg;
use crate::scalar::Real;

/// Boundary conditions: `(derivative order, value)` pairs at `t = 0` and
/// `t = tf`, derivatives taken with respect to `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundarySpec<T> {
    pub tf: T,
    pub left: Vec<(usize, T)>,
    pub right: Vec<(usize, T)>,
}

impl<T: Real> BoundarySpec<T> {
    pub fn new(tf: T, left: Vec<(usize, T)>, right: Vec<(usize, T)>) -> Self {
        BoundarySpec { tf, left, right }
    }

    /// Value `a` at the start and `b` at the end with the first `flat`
    /// derivatives vanishing on both sides.
    pub fn ramp(tf: T, a: T, b: T, flat: usize) -> Self {
        let side = |v: T| {
            std::iter::once((0, v))
                .chain((1..=flat).map(|k| (k, T::zero())))
                .collect()
        };
        BoundarySpec::new(tf, side(a), side(b))
    }

    pub fn condition_count(&self) -> usize {
        self.left.len() + self.right.len()
    }

    fn validate(&self) -> Result<()> {
        if !(self.tf > T::zero()) || !self.tf.is_finite() {
            return Err(StaError::InvalidSpec(format!("tf must be positive, got {}", self.tf)));
        }
        if self.condition_count() == 0 {
            return Err(StaError::InvalidSpec("no boundary conditions given".into()));
        }
        for (name, side) in [("left", &self.left), ("right", &self.right)] {
            let mut orders: Vec<usize> = side.iter().map(|c| c.0).collect();
            orders.sort_unstable();
            if orders.windows(2).any(|w| w[0] == w[1]) {
                return Err(StaError::InvalidSpec(format!(
                    "repeated derivative order on the {name} boundary"
                )));
            }
            if side.iter().any(|c| !c.1.is_finite()) {
                return Err(StaError::InvalidSpec(format!("non-finite {name} boundary value")));
            }
        }
        Ok(())
    }
}

/// Polynomial `sum_j coeffs[j] s^j` with `s = t / tf`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyFunction<T> {
    pub tf: T,
    pub coeffs: Vec<T>,
}

/// `j (j-1) ... (j-k+1)`
fn falling<T: Real>(j: usize, k: usize) -> T {
    if k > j {
        return T::zero();
    }
    ((j - k + 1)..=j).fold(T::one(), |acc, m| acc * T::from_usize_lossy(m))
}

pub fn build_poly<T: Real>(spec: &BoundarySpec<T>) -> Result<PolyFunction<T>> {
    spec.validate()?;
    let n = spec.condition_count();
    let mut rows = Vec::with_capacity(n);
    let mut rhs = Vec::with_capacity(n);
    for (s0, side) in [(T::zero(), &spec.left), (T::one(), &spec.right)] {
        for &(k, v) in side.iter() {
            let row = (0..n)
                .map(|j| {
                    if j < k {
                        T::zero()
                    } else {
                        falling::<T>(j, k) * s0.powi((j - k) as i32)
                    }
                })
                .collect();
            rows.push(row);
            rhs.push(v * spec.tf.powi(k as i32));
        }
    }
    let coeffs = linalg::solve(&rows, &rhs)?;
    Ok(PolyFunction { tf: spec.tf, coeffs })
}

impl<T: Real> PolyFunction<T> {
    pub fn constant(tf: T, c: T) -> Self {
        PolyFunction { tf, coeffs: vec![c] }
    }

    /// `a + (b - a)(10 s^3 - 15 s^4 + 6 s^5)`
    pub fn quintic(tf: T, a: T, b: T) -> Self {
        let d = b - a;
        PolyFunction {
            tf,
            coeffs: vec![
                a,
                T::zero(),
                T::zero(),
                T::lit(10.0) * d,
                T::lit(-15.0) * d,
                T::lit(6.0) * d,
            ],
        }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// k-th time derivative without a domain check.
    pub fn at(&self, t: T, k: usize) -> T {
        let s = t / self.tf;
        let mut acc = T::zero();
        for j in (k..self.coeffs.len()).rev() {
            acc = acc * s + self.coeffs[j] * falling::<T>(j, k);
        }
        acc / self.tf.powi(k as i32)
    }

    /// k-th time derivative at `t`, rejecting points outside `[0, tf]`.
    pub fn eval(&self, t: T, k: usize) -> Result<T> {
        let slack = T::epsilon() * T::lit(64.0) * self.tf;
        if !(t >= -slack && t <= self.tf + slack) {
            return Err(StaError::OutOfDomain {
                t: t.as_f64(),
                tf: self.tf.as_f64(),
            });
        }
        Ok(self.at(t, k))
    }

    pub fn sample(&self, grid: &TimeGrid<T>, k: usize) -> SampledFunction<T> {
        SampledFunction::from_fn(*grid, |t| self.at(t, k))
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "tf": self.tf.as_f64(),
            "coeffs": self.coeffs.iter().map(|c| c.as_f64()).collect::<Vec<_>>(),
        })
    }
}

impl<T: Real> TimeFunction<T> for PolyFunction<T> {
    fn value(&self, t: T) -> T {
        self.at(t, 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn quintic_ramp_coefficients() {
        let g: f64 = 10.0;
        let p = build_poly(&BoundarySpec::ramp(1.0, 1.0, g, 2)).unwrap();
        let expect = [1.0, 0.0, 0.0, 10.0 * (g - 1.0), -15.0 * (g - 1.0), 6.0 * (g - 1.0)];
        for (c, e) in p.coeffs.iter().zip(expect) {
            assert!((c - e).abs() < 1e-11, "{c} vs {e}");
        }
        assert!((p.eval(0.5, 0).unwrap() - 5.5).abs() < 1e-12);
    }

    #[test]
    fn constant_spec_gives_constant() {
        let p = build_poly(&BoundarySpec::<f64>::ramp(3.0, 2.5, 2.5, 2)).unwrap();
        for t in [0.0, 0.7, 3.0] {
            assert!((p.at(t, 0) - 2.5).abs() < 1e-13);
            assert!(p.at(t, 1).abs() < 1e-13);
        }
    }

    #[test]
    fn cubic_smoothstep() {
        let xf = 5.0;
        let p = build_poly(&BoundarySpec::ramp(2.0, 0.0, xf, 1)).unwrap();
        assert_eq!(p.degree(), 3);
        for t in [0.0, 0.3, 1.1, 2.0] {
            let s: f64 = t / 2.0;
            assert!((p.at(t, 0) - xf * (3.0 * s * s - 2.0 * s * s * s)).abs() < 1e-12);
        }
        assert!(p.eval(2.0, 1).unwrap().abs() < 1e-12);
    }

    #[test]
    fn out_of_domain_and_bad_specs() {
        let p = PolyFunction::quintic(1.0, 0.0, 1.0);
        assert!(matches!(p.eval(1.5, 0), Err(StaError::OutOfDomain { .. })));
        assert!(matches!(
            build_poly(&BoundarySpec::ramp(0.0, 0.0, 1.0, 1)),
            Err(StaError::InvalidSpec(_))
        ));
        // f(0) twice with different values on the same side
        let bad = BoundarySpec::new(1.0, vec![(0, 0.0), (0, 1.0)], vec![]);
        assert!(build_poly(&bad).is_err());
        // only derivative conditions leave the constant term free
        let singular = BoundarySpec::new(1.0, vec![(1, 0.0)], vec![(1, 0.0)]);
        assert!(matches!(build_poly(&singular), Err(StaError::SingularSystem { .. })));
    }

    #[test]
    fn works_in_f32() {
        let p = build_poly(&BoundarySpec::<f32>::ramp(1.0, 1.0, 10.0, 2)).unwrap();
        assert!((p.at(0.5, 0) - 5.5).abs() < 1e-4);
    }

    proptest! {
        #[test]
        fn round_trip_reproduces_conditions(
            tf in 0.01f64..100.0,
            left in proptest::collection::vec(-2.0f64..2.0, 1..4),
            right in proptest::collection::vec(-2.0f64..2.0, 1..4),
        ) {
            let spec = BoundarySpec::new(
                tf,
                left.iter().cloned().enumerate().collect(),
                right.iter().cloned().enumerate().collect(),
            );
            let p = build_poly(&spec).unwrap();
            prop_assert_eq!(p.degree(), spec.condition_count() - 1);
            for &(k, v) in &spec.left {
                prop_assert!((p.eval(0.0, k).unwrap() - v).abs() < 1e-10);
            }
            for &(k, v) in &spec.right {
                prop_assert!((p.eval(tf, k).unwrap() - v).abs() < 1e-10);
            }
        }

        #[test]
        fn antisymmetric_specs_are_point_symmetric(
            tf in 0.1f64..10.0, a in -3.0f64..3.0, b in -3.0f64..3.0, u in 0.0f64..0.5,
        ) {
            let p = build_poly(&BoundarySpec::ramp(tf, a, b, 2)).unwrap();
            let h = tf / 2.0;
            let lhs = p.at(h + u * tf, 0);
            let rhs = -p.at(h - u * tf, 0) + a + b;
            prop_assert!((lhs - rhs).abs() < 1e-10);
        }
    }
}
