//! Uniform time grids and the quadrature / differencing rules used on them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{Cx, Real};

/// Uniform grid: sample `k` sits at `t0 + k * dt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid<T> {
    t0: T,
    dt: T,
    len: usize,
}

impl<T: Real> TimeGrid<T> {
    pub fn new(t0: T, dt: T, len: usize) -> Result<Self> {
        if !(dt > T::zero()) || !dt.is_finite() || !t0.is_finite() {
            return Err(Error::invalid(format!("time step must be positive and finite, got {dt}")));
        }
        if len < 2 {
            return Err(Error::invalid("a grid needs at least two samples"));
        }
        Ok(Self { t0, dt, len })
    }

    /// Grid covering `[start, end]` with the step adjusted down so both ends are samples.
    pub fn spanning(start: T, end: T, max_dt: T) -> Result<Self> {
        if !(end > start) {
            return Err(Error::invalid(format!("empty time span [{start}, {end}]")));
        }
        if !(max_dt > T::zero()) {
            return Err(Error::invalid(format!("time step must be positive, got {max_dt}")));
        }
        let steps = ((end - start) / max_dt).ceil().to_usize().unwrap_or(1).max(1);
        let dt = (end - start) / T::from_usize(steps).unwrap();
        Self::new(start, dt, steps + 1)
    }

    /// Grid on `[-half_width, half_width]`.
    pub fn symmetric(half_width: T, max_dt: T) -> Result<Self> {
        Self::spanning(-half_width, half_width, max_dt)
    }

    #[inline]
    pub fn t0(&self) -> T {
        self.t0
    }

    #[inline]
    pub fn dt(&self) -> T {
        self.dt
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn time(&self, k: usize) -> T {
        self.t0 + T::from_usize(k).unwrap() * self.dt
    }

    #[inline]
    pub fn end(&self) -> T {
        self.time(self.len - 1)
    }

    pub fn times(&self) -> impl Iterator<Item = T> + '_ {
        (0..self.len).map(move |k| self.time(k))
    }

    /// Same span with the step divided by `factor`.
    pub fn refined(&self, factor: usize) -> Self {
        let factor = factor.max(1);
        Self {
            t0: self.t0,
            dt: self.dt / T::from_usize(factor).unwrap(),
            len: (self.len - 1) * factor + 1,
        }
    }

    /// Sample indices whose times fall inside `[start, end]` (with a tolerance of dt/1000).
    pub fn window(&self, start: T, end: T) -> std::ops::Range<usize> {
        let tol = self.dt * T::lit(1e-3);
        let lo = ((start - self.t0 - tol) / self.dt).ceil().max(T::zero());
        let hi = ((end - self.t0 + tol) / self.dt).floor();
        let lo = lo.to_usize().unwrap_or(0).min(self.len);
        if hi < T::zero() {
            return lo..lo;
        }
        let hi = (hi.to_usize().unwrap_or(0) + 1).min(self.len);
        lo..hi.max(lo)
    }

    /// True when `other` has the same origin, step and length.
    pub fn matches(&self, other: &Self) -> bool {
        let tol = self.dt * T::lit(1e-9);
        self.len == other.len && (self.t0 - other.t0).abs() <= tol && (self.dt - other.dt).abs() <= tol
    }
}

/// Trapezoid rule on uniformly spaced samples.
pub fn trapezoid<T: Real>(values: &[T], dt: T) -> T {
    match values.len() {
        0 | 1 => T::zero(),
        n => {
            let inner: T = values[1..n - 1].iter().copied().sum();
            dt * (inner + (values[0] + values[n - 1]) * T::lit(0.5))
        }
    }
}

pub fn trapezoid_complex<T: Real>(values: &[Cx<T>], dt: T) -> Cx<T> {
    match values.len() {
        0 | 1 => Cx::new(T::zero(), T::zero()),
        n => {
            let mut acc = (values[0] + values[n - 1]) * T::lit(0.5);
            for v in &values[1..n - 1] {
                acc = acc + *v;
            }
            acc * dt
        }
    }
}

/// Running trapezoid integral; element `k` integrates samples `0..=k`.
pub fn cumulative_trapezoid<T: Real>(values: &[T], dt: T) -> Vec<T> {
    let half = T::lit(0.5) * dt;
    let mut out = Vec::with_capacity(values.len());
    let mut acc = T::zero();
    for (k, v) in values.iter().enumerate() {
        if k > 0 {
            acc = acc + half * (values[k - 1] + *v);
        }
        out.push(acc);
    }
    out
}

/// Running trapezoid integral from each sample to the last one.
pub fn reverse_cumulative_trapezoid<T: Real>(values: &[T], dt: T) -> Vec<T> {
    let half = T::lit(0.5) * dt;
    let n = values.len();
    let mut out = vec![T::zero(); n];
    let mut acc = T::zero();
    for k in (0..n.saturating_sub(1)).rev() {
        acc = acc + half * (values[k] + values[k + 1]);
        out[k] = acc;
    }
    out
}

/// Cumulative trapezoid with the leading Euler-Maclaurin end correction,
/// `-(dt^2/12) (f'(t_k) - f'(t_0))`, which lifts the rule to fourth order.
pub fn cumulative_trapezoid_corrected<T: Real>(values: &[T], derivative: &[T], dt: T) -> Vec<T> {
    let c = dt * dt / T::lit(12.0);
    let d0 = derivative.first().copied().unwrap_or_else(T::zero);
    cumulative_trapezoid(values, dt)
        .into_iter()
        .zip(derivative)
        .map(|(s, d)| s - c * (*d - d0))
        .collect()
}

/// Reverse counterpart of [`cumulative_trapezoid_corrected`].
pub fn reverse_cumulative_trapezoid_corrected<T: Real>(values: &[T], derivative: &[T], dt: T) -> Vec<T> {
    let c = dt * dt / T::lit(12.0);
    let dn = derivative.last().copied().unwrap_or_else(T::zero);
    reverse_cumulative_trapezoid(values, dt)
        .into_iter()
        .zip(derivative)
        .map(|(s, d)| s - c * (dn - *d))
        .collect()
}

/// Fourth-order finite-difference derivative: five-point central stencil in
/// the interior, five-point one-sided stencils at the two samples nearest
/// each edge.
pub fn derivative4<T: Real>(values: &[T], dt: T) -> Vec<T> {
    let n = values.len();
    let f = |k: usize| values[k];
    let c = |x: f64| T::lit(x);
    if n < 5 {
        // Too short for the stencils; fall back to second order.
        return (0..n)
            .map(|k| match (k, n) {
                (_, 0 | 1) => T::zero(),
                (0, _) => (f(1) - f(0)) / dt,
                (k, n) if k == n - 1 => (f(k) - f(k - 1)) / dt,
                (k, _) => (f(k + 1) - f(k - 1)) / (dt + dt),
            })
            .collect();
    }
    let h12 = c(12.0) * dt;
    (0..n)
        .map(|k| {
            if k == 0 {
                (c(-25.0) * f(0) + c(48.0) * f(1) - c(36.0) * f(2) + c(16.0) * f(3) - c(3.0) * f(4)) / h12
            } else if k == 1 {
                (c(-3.0) * f(0) - c(10.0) * f(1) + c(18.0) * f(2) - c(6.0) * f(3) + f(4)) / h12
            } else if k == n - 2 {
                -(c(-3.0) * f(n - 1) - c(10.0) * f(n - 2) + c(18.0) * f(n - 3) - c(6.0) * f(n - 4) + f(n - 5)) / h12
            } else if k == n - 1 {
                -(c(-25.0) * f(n - 1) + c(48.0) * f(n - 2) - c(36.0) * f(n - 3) + c(16.0) * f(n - 4)
                    - c(3.0) * f(n - 5))
                    / h12
            } else {
                (f(k - 2) - c(8.0) * f(k - 1) + c(8.0) * f(k + 1) - f(k + 2)) / h12
            }
        })
        .collect()
}

/// Removes jumps larger than pi between adjacent samples by adding multiples of 2 pi.
pub fn unwrap_phase<T: Real>(phase: &mut [T]) {
    let two_pi = T::PI() + T::PI();
    let mut offset = T::zero();
    for k in 1..phase.len() {
        let raw_prev = phase[k - 1] - offset;
        let jump = phase[k] - raw_prev;
        if jump.abs() > T::PI() {
            offset = offset - (jump / two_pi).round() * two_pi;
        }
        phase[k] = phase[k] + offset;
    }
}
