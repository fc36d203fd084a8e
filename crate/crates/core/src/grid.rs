//! Uniform time grids, sampled functions and the quadrature/differencing
//! rules shared by all modules.

use serde::{Deserialize, Serialize};

use crate::error::{Result, StaError};
use crate::scalar::Real;

/// Uniform discretization of `[0, tf]` into `intervals` steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid<T> {
    pub tf: T,
    pub intervals: usize,
}

impl<T: Real> TimeGrid<T> {
    pub fn new(tf: T, intervals: usize) -> Result<Self> {
        if !(tf > T::zero()) || !tf.is_finite() {
            return Err(StaError::InvalidSpec(format!("duration must be positive, got {tf}")));
        }
        if intervals < 4 {
            return Err(StaError::InvalidSpec(format!(
                "a time grid needs at least 4 intervals, got {intervals}"
            )));
        }
        Ok(TimeGrid { tf, intervals })
    }

    #[inline]
    pub fn dt(&self) -> T {
        self.tf / T::from_usize_lossy(self.intervals)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.intervals + 1
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn t(&self, i: usize) -> T {
        if i == self.intervals {
            self.tf
        } else {
            self.dt() * T::from_usize_lossy(i)
        }
    }

    pub fn times(&self) -> Vec<T> {
        (0..self.len()).map(|i| self.t(i)).collect()
    }

    /// Same duration, twice as many intervals.
    pub fn refined(&self) -> Self {
        TimeGrid {
            tf: self.tf,
            intervals: self.intervals * 2,
        }
    }
}

/// Anything that can be evaluated as a scalar function of time.
pub trait TimeFunction<T>: Sync {
    fn value(&self, t: T) -> T;
}

/// Adapter turning a closure into a [`TimeFunction`].
pub struct FnTime<F>(pub F);

impl<T, F: Fn(T) -> T + Sync> TimeFunction<T> for FnTime<F> {
    #[inline]
    fn value(&self, t: T) -> T {
        (self.0)(t)
    }
}

/// Real function sampled on a [`TimeGrid`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledFunction<T> {
    pub grid: TimeGrid<T>,
    pub values: Vec<T>,
}

impl<T: Real> SampledFunction<T> {
    pub fn new(grid: TimeGrid<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(StaError::GridMismatch(format!(
                "{} samples for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        Ok(SampledFunction { grid, values })
    }

    pub fn from_fn(grid: TimeGrid<T>, f: impl Fn(T) -> T) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.t(i))).collect();
        SampledFunction { grid, values }
    }

    pub fn constant(grid: TimeGrid<T>, c: T) -> Self {
        SampledFunction {
            grid,
            values: vec![c; grid.len()],
        }
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        SampledFunction {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn first(&self) -> T {
        self.values[0]
    }

    pub fn last(&self) -> T {
        *self.values.last().expect("non-empty")
    }

    pub fn min(&self) -> T {
        self.values.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn max(&self) -> T {
        self.values.iter().copied().fold(T::neg_infinity(), T::max)
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Fourth-order finite-difference derivative.
    pub fn derivative(&self) -> Self {
        SampledFunction {
            grid: self.grid,
            values: fd_derivative(&self.values, self.grid.dt()),
        }
    }

    pub fn integral(&self) -> T {
        simpson(&self.values, self.grid.dt())
    }

    /// Running integral from 0, fourth-order accurate.
    pub fn cumulative(&self) -> Self {
        SampledFunction {
            grid: self.grid,
            values: cumulative_integral(&self.values, self.grid.dt()),
        }
    }

    /// Time average over `[0, tf]`.
    pub fn mean(&self) -> T {
        self.integral() / self.grid.tf
    }

    /// Six-point Lagrange interpolation; exact for quintics.
    pub fn interpolate(&self, t: T) -> T {
        lagrange_interpolate(&self.values, self.grid.dt(), t)
    }

    pub fn sup_distance(&self, other: &Self) -> T {
        self.values
            .iter()
            .zip(&other.values)
            .fold(T::zero(), |m, (a, b)| m.max((*a - *b).abs()))
    }
}

impl<T: Real> TimeFunction<T> for SampledFunction<T> {
    #[inline]
    fn value(&self, t: T) -> T {
        self.interpolate(t)
    }
}

/// Composite Simpson rule on uniformly spaced samples. An odd number of
/// intervals closes with Simpson's 3/8 rule on the last three.
pub fn simpson<T: Real>(f: &[T], h: T) -> T {
    let n = f.len().saturating_sub(1);
    match n {
        0 => T::zero(),
        1 => h * (f[0] + f[1]) / T::lit(2.0),
        2 => h * (f[0] + T::lit(4.0) * f[1] + f[2]) / T::lit(3.0),
        3 => three_eighths(&f[0..4], h),
        _ => {
            let even = if n % 2 == 0 { n } else { n - 3 };
            let mut acc = f[0] + f[even];
            for (i, &v) in f.iter().enumerate().take(even).skip(1) {
                acc += if i % 2 == 1 { T::lit(4.0) * v } else { T::lit(2.0) * v };
            }
            let mut total = acc * h / T::lit(3.0);
            if even != n {
                total += three_eighths(&f[even..=n], h);
            }
            total
        }
    }
}

fn three_eighths<T: Real>(f: &[T], h: T) -> T {
    T::lit(3.0) * h / T::lit(8.0) * (f[0] + T::lit(3.0) * f[1] + T::lit(3.0) * f[2] + f[3])
}

/// Running integral with a four-point (cubic) rule per interval.
pub fn cumulative_integral<T: Real>(f: &[T], h: T) -> Vec<T> {
    let n = f.len();
    let mut out = vec![T::zero(); n];
    if n < 2 {
        return out;
    }
    if n < 4 {
        for i in 1..n {
            out[i] = out[i - 1] + h * (f[i - 1] + f[i]) / T::lit(2.0);
        }
        return out;
    }
    let c24 = h / T::lit(24.0);
    for i in 1..n {
        let seg = if i == 1 {
            c24 * (T::lit(9.0) * f[0] + T::lit(19.0) * f[1] - T::lit(5.0) * f[2] + f[3])
        } else if i == n - 1 {
            c24 * (T::lit(9.0) * f[n - 1] + T::lit(19.0) * f[n - 2] - T::lit(5.0) * f[n - 3]
                + f[n - 4])
        } else {
            c24 * (-f[i - 2] + T::lit(13.0) * f[i - 1] + T::lit(13.0) * f[i] - f[i + 1])
        };
        out[i] = out[i - 1] + seg;
    }
    out
}

/// Fourth-order finite-difference first derivative (one-sided at the ends).
pub fn fd_derivative<T: Real>(f: &[T], h: T) -> Vec<T> {
    let n = f.len();
    assert!(n >= 5, "fourth-order differencing needs at least 5 samples");
    let c = T::lit(12.0) * h;
    let k = |x: f64| T::lit(x);
    let mut d = vec![T::zero(); n];
    d[0] = (k(-25.0) * f[0] + k(48.0) * f[1] - k(36.0) * f[2] + k(16.0) * f[3] - k(3.0) * f[4]) / c;
    d[1] = (k(-3.0) * f[0] - k(10.0) * f[1] + k(18.0) * f[2] - k(6.0) * f[3] + f[4]) / c;
    for i in 2..n - 2 {
        d[i] = (f[i - 2] - k(8.0) * f[i - 1] + k(8.0) * f[i + 1] - f[i + 2]) / c;
    }
    let m = n - 1;
    d[m] = -(k(-25.0) * f[m] + k(48.0) * f[m - 1] - k(36.0) * f[m - 2] + k(16.0) * f[m - 3]
        - k(3.0) * f[m - 4])
        / c;
    d[m - 1] = -(k(-3.0) * f[m] - k(10.0) * f[m - 1] + k(18.0) * f[m - 2] - k(6.0) * f[m - 3]
        + f[m - 4])
        / c;
    d
}

/// Six-point Lagrange interpolation of samples spaced `h` apart from 0.
pub fn lagrange_interpolate<T: Real>(f: &[T], h: T, t: T) -> T {
    let n = f.len();
    let width = 6.min(n);
    let pos = t / h;
    let base = pos.floor().to_isize().unwrap_or(0) - (width as isize / 2 - 1);
    let start = base.clamp(0, (n - width) as isize) as usize;
    let mut acc = T::zero();
    for j in 0..width {
        let xj = T::from_usize_lossy(start + j);
        let mut w = T::one();
        for m in 0..width {
            if m != j {
                let xm = T::from_usize_lossy(start + m);
                w *= (pos - xm) / (xj - xm);
            }
        }
        acc += w * f[start + j];
    }
    acc
}
