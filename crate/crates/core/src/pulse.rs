//! Control pulses that shape single photons emitted by a driven three-level system.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{
    cumulative_trapezoid_corrected, derivative4, reverse_cumulative_trapezoid_corrected,
    trapezoid, unwrap_phase, TimeGrid,
};
use crate::scalar::{ln_one_plus_scaled_exp2, logistic, one_minus_tanh, one_plus_tanh, sech, Cx, Real};

/// A time-dependent complex coupling `g(t) = |g| e^{i phi}`.
pub trait Control<T: Real>: Send + Sync {
    /// Amplitude and continuous (unwrapped) phase at `t`.
    fn polar(&self, t: T) -> (T, T);

    fn at(&self, t: T) -> Cx<T> {
        let (r, p) = self.polar(t);
        Cx::from_polar(r, p)
    }

    /// Fastest local rate (amplitude plus phase rate), used to size integrator substeps.
    fn local_rate(&self, t: T) -> T {
        self.polar(t).0
    }
}

impl<T: Real, C: Control<T> + ?Sized> Control<T> for &C {
    fn polar(&self, t: T) -> (T, T) {
        (**self).polar(t)
    }
    fn local_rate(&self, t: T) -> T {
        (**self).local_rate(t)
    }
}

impl<T: Real, C: Control<T> + ?Sized> Control<T> for Box<C> {
    fn polar(&self, t: T) -> (T, T) {
        (**self).polar(t)
    }
    fn local_rate(&self, t: T) -> T {
        (**self).local_rate(t)
    }
}

impl<T: Real, C: Control<T> + ?Sized> Control<T> for Arc<C> {
    fn polar(&self, t: T) -> (T, T) {
        (**self).polar(t)
    }
    fn local_rate(&self, t: T) -> T {
        (**self).local_rate(t)
    }
}

fn is_one<T: Real>(eta: T) -> bool {
    (eta - T::one()).abs() < T::lit(1e-12)
}

fn check_eta<T: Real>(eta: T) -> Result<()> {
    if !(eta >= T::one()) || !eta.is_finite() {
        return Err(Error::invalid(format!("eta must be >= 1, got {eta}")));
    }
    Ok(())
}

fn check_kappa<T: Real>(kappa: T) -> Result<()> {
    if !(kappa > T::zero()) || !kappa.is_finite() {
        return Err(Error::invalid(format!("kappa must be positive, got {kappa}")));
    }
    Ok(())
}

/// Exact control emitting `sqrt(kappa/(4 eta)) sech(kappa t/(2 eta)) e^{-i delta t}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SechControl<T> {
    pub kappa: T,
    pub delta: T,
    pub eta: T,
}

impl<T: Real> SechControl<T> {
    pub fn new(kappa: T, delta: T, eta: T) -> Result<Self> {
        check_kappa(kappa)?;
        check_eta(eta)?;
        Ok(Self { kappa, delta, eta })
    }

    pub fn amplitude(&self, t: T) -> T {
        let (k, d, eta) = (self.kappa, self.delta, self.eta);
        let two = T::lit(2.0);
        let x = k * t / (two * eta);
        let omt = one_minus_tanh(x);
        let eta_minus_tanh = (eta - T::one()) + omt;
        let num = one_plus_tanh(x) * (T::lit(4.0) * d * d * eta * eta + k * k * eta_minus_tanh * eta_minus_tanh);
        let den = two * (eta - T::one()) + omt;
        (num / den).sqrt() / (two * eta)
    }

    pub fn phase(&self, t: T) -> T {
        let (k, d, eta) = (self.kappa, self.delta, self.eta);
        if d == T::zero() {
            return T::zero();
        }
        let two = T::lit(2.0);
        let x = k * t / (two * eta);
        let omt = one_minus_tanh(x);
        if is_one(eta) {
            d * (t - (k * t).exp() / k) + (-k * omt).atan2(two * d)
        } else {
            let em1 = eta - T::one();
            d * t + (-k * (em1 + omt)).atan2(two * eta * d)
                - d * eta / (k * em1) * ln_one_plus_scaled_exp2(em1 / eta, x)
        }
    }

    pub fn is_divergent(&self) -> bool {
        is_one(self.eta) && self.delta != T::zero()
    }
}

impl<T: Real> Control<T> for SechControl<T> {
    fn polar(&self, t: T) -> (T, T) {
        (self.amplitude(t), self.phase(t))
    }

    fn local_rate(&self, t: T) -> T {
        self.amplitude(t) + phase_rate(t, self.delta, self.eta, self.kappa).abs()
    }
}

/// Closed-form phase rate of [`SechControl`].
pub fn phase_rate<T: Real>(t: T, delta: T, eta: T, kappa: T) -> T {
    if delta == T::zero() {
        return T::zero();
    }
    let one = T::one();
    let four = T::lit(4.0);
    let x = kappa * t / (T::lit(2.0) * eta);
    let k2 = kappa * kappa;
    let dn = four * delta * delta * eta * eta;
    if x <= T::zero() {
        let e = (x + x).exp();
        let chirp = e / (eta + e * (eta - one));
        let s = one + e;
        let p = one + eta + e * (eta - one);
        delta * (one - chirp + four * k2 * e / (dn * s * s + k2 * p * p))
    } else if is_one(eta) {
        // The chirp term e^{2x}/(eta + e^{2x}(eta - 1)) grows without bound here.
        let e = (x + x).exp();
        let u = (-(x + x)).exp();
        let s = u + one;
        let p = (one + eta) * u + (eta - one);
        delta * (one - e + four * k2 * u / (dn * s * s + k2 * p * p))
    } else {
        let u = (-(x + x)).exp();
        let chirp = one / (eta * u + eta - one);
        let s = u + one;
        let p = (one + eta) * u + (eta - one);
        delta * (one - chirp + four * k2 * u / (dn * s * s + k2 * p * p))
    }
}

/// Real control for a resonant photon of reduced bandwidth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonantSechControl<T> {
    pub kappa: T,
    pub eta: T,
}

impl<T: Real> ResonantSechControl<T> {
    pub fn new(kappa: T, eta: T) -> Result<Self> {
        check_kappa(kappa)?;
        check_eta(eta)?;
        Ok(Self { kappa, eta })
    }

    pub fn amplitude(&self, t: T) -> T {
        let two = T::lit(2.0);
        let (k, eta) = (self.kappa, self.eta);
        let x = k * t / (two * eta);
        let omt = one_minus_tanh(x);
        let em1 = eta - T::one();
        k * (em1 + omt) / (two * eta) * (one_plus_tanh(x) / (two * em1 + omt)).sqrt()
    }
}

impl<T: Real> Control<T> for ResonantSechControl<T> {
    fn polar(&self, t: T) -> (T, T) {
        (self.amplitude(t), T::zero())
    }
}

/// Real control that releases a fraction `1/n` of the excitation as a resonant sech photon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FractionalSechControl<T> {
    pub kappa: T,
    pub eta: T,
    pub n: T,
}

impl<T: Real> FractionalSechControl<T> {
    pub fn new(kappa: T, eta: T, n: T) -> Result<Self> {
        check_kappa(kappa)?;
        check_eta(eta)?;
        if !(n >= T::one()) || !n.is_finite() {
            return Err(Error::invalid(format!("fraction n must be >= 1, got {n}")));
        }
        Ok(Self { kappa, eta, n })
    }

    pub fn amplitude(&self, t: T) -> T {
        let two = T::lit(2.0);
        let four = T::lit(4.0);
        let (k, eta, n) = (self.kappa, self.eta, self.n);
        let x = k * t / (two * eta);
        let eps = one_minus_tanh(x);
        let em1 = eta - T::one();
        let den = four * eta * (n - T::one()) + eps * (two * em1 + eps);
        k * sech(x) * (em1 + eps) / (two * eta * den.sqrt())
    }
}

impl<T: Real> Control<T> for FractionalSechControl<T> {
    fn polar(&self, t: T) -> (T, T) {
        (self.amplitude(t), T::zero())
    }
}

/// Control emitting `sqrt(4 kappa/eta^3) kappa t e^{-kappa t/eta} e^{-i delta t}` for `t >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentialControl<T> {
    pub kappa: T,
    pub delta: T,
    pub eta: T,
}

impl<T: Real> ExponentialControl<T> {
    pub fn new(kappa: T, delta: T, eta: T) -> Result<Self> {
        check_kappa(kappa)?;
        check_eta(eta)?;
        let two = T::lit(2.0);
        if eta < two {
            let e = eta.as_f64();
            let k = kappa.as_f64();
            let ts = (e * e + (4.0 * e.powi(3) - e.powi(4)).sqrt()) / (2.0 * (2.0 - e) * k);
            return Err(Error::SingularControl { eta: e, singular_time: ts });
        }
        Ok(Self { kappa, delta, eta })
    }

    pub fn amplitude(&self, t: T) -> T {
        if t < T::zero() {
            return T::zero();
        }
        let (k, d, eta) = (self.kappa, self.delta, self.eta);
        let four = T::lit(4.0);
        let two = T::lit(2.0);
        let em2 = eta - two;
        let kt = k * t;
        let num = four * eta * eta + four * em2 * eta * kt + (four * d * d * eta * eta + em2 * em2 * k * k) * t * t;
        let den = eta * eta * eta + two * eta * eta * kt + two * em2 * kt * kt;
        k / eta * (num / den).sqrt()
    }

    pub fn phase(&self, t: T) -> T {
        let (k, d, eta) = (self.kappa, self.delta, self.eta);
        if d == T::zero() {
            return T::zero();
        }
        let t = t.max(T::zero());
        let two = T::lit(2.0);
        let four = T::lit(4.0);
        let kt = k * t;
        if (eta - two).abs() < T::lit(1e-9) {
            return (-T::one()).atan2(d * t)
                - d * (kt * (kt - T::lit(6.0)) + two * kt.ln_1p()) / (four * k);
        }
        if (eta - four).abs() < T::lit(1e-9) {
            return (-(four + kt)).atan2(four * d * t) - four * d * t / (four + kt)
                + T::lit(8.0) * d * (kt / four).ln_1p() / k;
        }
        let em2 = eta - two;
        let u = kt / eta;
        let c = two * em2 / eta;
        let q = T::one() + two * u + c * u * u;
        let integral = if c > T::one() {
            let s = (c - T::one()).sqrt();
            (((c * u + T::one()) / s).atan() - (T::one() / s).atan()) / s
        } else {
            let r = (T::one() - c).sqrt();
            (((c * u + T::one() - r) / (c * u + T::one() + r)).ln() - ((T::one() - r) / (T::one() + r)).ln())
                / (two * r)
        };
        d * t + (two * kt - eta * (two + kt)).atan2(two * d * eta * t) - two * d * t / em2
            + d * eta * eta / (k * em2 * em2) * q.ln()
            - four * d * eta / (k * em2 * em2) * integral
    }

    pub fn is_divergent(&self) -> bool {
        (self.eta - T::lit(2.0)).abs() < T::lit(1e-9) && self.delta != T::zero()
    }
}

impl<T: Real> Control<T> for ExponentialControl<T> {
    fn polar(&self, t: T) -> (T, T) {
        (self.amplitude(t), self.phase(t))
    }

    fn local_rate(&self, t: T) -> T {
        let h = T::lit(1e-3) / self.kappa;
        let rate = (self.phase(t + h) - self.phase((t - h).max(T::zero()))) / (h + h);
        self.amplitude(t) + rate.abs()
    }
}

/// `min(|g|, g_m)` with the phase left untouched.
#[derive(Debug, Clone)]
pub struct Clamped<C> {
    pub inner: C,
    pub g_max: f64,
}

impl<T: Real, C: Control<T>> Control<T> for Clamped<C> {
    fn polar(&self, t: T) -> (T, T) {
        let (r, p) = self.inner.polar(t);
        (r.min(T::lit(self.g_max)), p)
    }
    fn local_rate(&self, t: T) -> T {
        self.inner.local_rate(t)
    }
}

/// `conj(g(delay - t))`.
#[derive(Debug, Clone)]
pub struct Reversed<C> {
    pub inner: C,
    pub delay: f64,
}

impl<T: Real, C: Control<T>> Control<T> for Reversed<C> {
    fn polar(&self, t: T) -> (T, T) {
        let (r, p) = self.inner.polar(T::lit(self.delay) - t);
        (r, -p)
    }
    fn local_rate(&self, t: T) -> T {
        self.inner.local_rate(T::lit(self.delay) - t)
    }
}

/// `g(t - shift)`.
#[derive(Debug, Clone)]
pub struct Shifted<C> {
    pub inner: C,
    pub shift: f64,
}

impl<T: Real, C: Control<T>> Control<T> for Shifted<C> {
    fn polar(&self, t: T) -> (T, T) {
        self.inner.polar(t - T::lit(self.shift))
    }
    fn local_rate(&self, t: T) -> T {
        self.inner.local_rate(t - T::lit(self.shift))
    }
}

/// `g(t) / (1 + e^{-rate (t - center)})`.
#[derive(Debug, Clone)]
pub struct SigmoidGate<C> {
    pub inner: C,
    pub center: f64,
    pub rate: f64,
}

impl<T: Real, C: Control<T>> Control<T> for SigmoidGate<C> {
    fn polar(&self, t: T) -> (T, T) {
        let (r, p) = self.inner.polar(t);
        (r * logistic(T::lit(self.rate) * (t - T::lit(self.center))), p)
    }
    fn local_rate(&self, t: T) -> T {
        self.inner.local_rate(t) + T::lit(self.rate.abs())
    }
}

/// Pointwise larger-amplitude of two controls.
#[derive(Debug, Clone)]
pub struct MaxAmplitude<A, B> {
    pub first: A,
    pub second: B,
}

impl<T: Real, A: Control<T>, B: Control<T>> Control<T> for MaxAmplitude<A, B> {
    fn polar(&self, t: T) -> (T, T) {
        let a = self.first.polar(t);
        let b = self.second.polar(t);
        if b.0 > a.0 {
            b
        } else {
            a
        }
    }
    fn local_rate(&self, t: T) -> T {
        self.first.local_rate(t).max(self.second.local_rate(t))
    }
}

/// `g(t)` on `[start, end]`, zero elsewhere.
#[derive(Debug, Clone)]
pub struct Windowed<C> {
    pub inner: C,
    pub start: f64,
    pub end: f64,
}

impl<T: Real, C: Control<T>> Control<T> for Windowed<C> {
    fn polar(&self, t: T) -> (T, T) {
        if t < T::lit(self.start) || t > T::lit(self.end) {
            (T::zero(), T::zero())
        } else {
            self.inner.polar(t)
        }
    }
    fn local_rate(&self, t: T) -> T {
        if t < T::lit(self.start) || t > T::lit(self.end) {
            T::zero()
        } else {
            self.inner.local_rate(t)
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Zero;

impl<T: Real> Control<T> for Zero {
    fn polar(&self, _t: T) -> (T, T) {
        (T::zero(), T::zero())
    }
}

/// Shape parameters the waveform was built for.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveformMeta {
    pub kappa: f64,
    pub delta: f64,
    pub eta: f64,
    pub n: f64,
}

/// Sampled control on a uniform grid.
///
/// When built from a closed form, the analytic source is kept and used for
/// evaluation between samples; otherwise values are cubically interpolated.
/// Outside the sampled window the control is zero.
#[derive(Clone, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct ControlWaveform<T: Real> {
    pub t0: T,
    pub dt: T,
    pub amplitude: Vec<T>,
    pub phase: Vec<T>,
    pub carrier_detuning: T,
    pub meta: WaveformMeta,
    pub divergent: bool,
    #[serde(skip)]
    source: Option<Arc<dyn Control<T>>>,
}

impl<T: Real> fmt::Debug for ControlWaveform<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ControlWaveform")
            .field("t0", &self.t0)
            .field("dt", &self.dt)
            .field("len", &self.amplitude.len())
            .field("carrier_detuning", &self.carrier_detuning)
            .field("meta", &self.meta)
            .field("divergent", &self.divergent)
            .field("analytic", &self.source.is_some())
            .finish()
    }
}

impl<T: Real> ControlWaveform<T> {
    /// Samples `source` on `grid` and keeps it for off-grid evaluation.
    pub fn from_control(source: Arc<dyn Control<T>>, grid: &TimeGrid<T>, meta: WaveformMeta, divergent: bool) -> Self {
        let (amplitude, mut phase): (Vec<T>, Vec<T>) = grid.times().map(|t| source.polar(t)).unzip();
        unwrap_phase(&mut phase);
        Self {
            t0: grid.t0(),
            dt: grid.dt(),
            amplitude,
            phase,
            carrier_detuning: T::lit(meta.delta),
            meta,
            divergent,
            source: Some(source),
        }
    }

    /// Waveform defined only by its samples.
    pub fn from_samples(grid: &TimeGrid<T>, amplitude: Vec<T>, mut phase: Vec<T>, meta: WaveformMeta) -> Result<Self> {
        if amplitude.len() != grid.len() {
            return Err(Error::GridMismatch { expected: grid.len(), found: amplitude.len() });
        }
        if phase.len() != grid.len() {
            return Err(Error::GridMismatch { expected: grid.len(), found: phase.len() });
        }
        if let Some(bad) = amplitude.iter().find(|a| !(**a >= T::zero())) {
            return Err(Error::invalid(format!("control amplitude must be non-negative, got {bad}")));
        }
        unwrap_phase(&mut phase);
        Ok(Self {
            t0: grid.t0(),
            dt: grid.dt(),
            amplitude,
            phase,
            carrier_detuning: T::lit(meta.delta),
            meta,
            divergent: false,
            source: None,
        })
    }

    pub fn grid(&self) -> TimeGrid<T> {
        TimeGrid::new(self.t0, self.dt, self.amplitude.len()).expect("waveform grid was validated on construction")
    }

    pub fn len(&self) -> usize {
        self.amplitude.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitude.is_empty()
    }

    pub fn is_analytic(&self) -> bool {
        self.source.is_some()
    }

    pub fn source(&self) -> Option<&Arc<dyn Control<T>>> {
        self.source.as_ref()
    }

    /// Drops the analytic source so that evaluation falls back to interpolation.
    pub fn into_sampled(mut self) -> Self {
        self.source = None;
        self
    }

    pub fn sample(&self, k: usize) -> Cx<T> {
        Cx::from_polar(self.amplitude[k], self.phase[k])
    }

    pub fn samples(&self) -> Vec<Cx<T>> {
        (0..self.len()).map(|k| self.sample(k)).collect()
    }

    pub fn max_amplitude(&self) -> T {
        self.amplitude.iter().copied().fold(T::zero(), T::max)
    }

    fn inside(&self, t: T) -> bool {
        let tol = self.dt * T::lit(1e-9);
        let end = self.t0 + T::from_usize(self.len() - 1).unwrap() * self.dt;
        t >= self.t0 - tol && t <= end + tol
    }

    fn interpolate(&self, values: &[T], t: T) -> T {
        let n = values.len();
        let s = (t - self.t0) / self.dt;
        let k = s.floor().to_isize().unwrap_or(0).clamp(0, n as isize - 2) as usize;
        if n < 4 {
            let f = s - T::from_usize(k).unwrap();
            return values[k] + f * (values[k + 1] - values[k]);
        }
        // Four-point Lagrange stencil, shifted inward at the edges.
        let base = k.saturating_sub(1).min(n - 4);
        let x = s - T::from_usize(base).unwrap();
        let p = [values[base], values[base + 1], values[base + 2], values[base + 3]];
        let one = T::one();
        let two = T::lit(2.0);
        let three = T::lit(3.0);
        let six = T::lit(6.0);
        let l0 = -(x - one) * (x - two) * (x - three) / six;
        let l1 = x * (x - two) * (x - three) / two;
        let l2 = -x * (x - one) * (x - three) / two;
        let l3 = x * (x - one) * (x - two) / six;
        p[0] * l0 + p[1] * l1 + p[2] * l2 + p[3] * l3
    }
}

impl<T: Real> Control<T> for ControlWaveform<T> {
    fn polar(&self, t: T) -> (T, T) {
        if !self.inside(t) {
            return (T::zero(), T::zero());
        }
        if let Some(src) = &self.source {
            return src.polar(t);
        }
        let r = self.interpolate(&self.amplitude, t).max(T::zero());
        (r, self.interpolate(&self.phase, t))
    }

    fn local_rate(&self, t: T) -> T {
        if !self.inside(t) {
            return T::zero();
        }
        if let Some(src) = &self.source {
            return src.local_rate(t);
        }
        let s = ((t - self.t0) / self.dt).floor().to_usize().unwrap_or(0).min(self.len() - 2);
        let dphi = (self.phase[s + 1] - self.phase[s]).abs() / self.dt;
        self.amplitude[s].max(self.amplitude[s + 1]) + dphi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeFamily {
    Sech,
    Exponential,
    Custom,
}

/// Envelope `|gamma(t)|` sampled on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledEnvelope<T> {
    pub t0: T,
    pub dt: T,
    pub values: Vec<T>,
    /// Norm already emitted before `t0`.
    pub prior_emitted: T,
}

impl<T: Real> SampledEnvelope<T> {
    pub fn new(grid: &TimeGrid<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch { expected: grid.len(), found: values.len() });
        }
        if let Some(bad) = values.iter().find(|v| !(**v >= T::zero())) {
            return Err(Error::invalid(format!("envelope must be non-negative, got {bad}")));
        }
        Ok(Self { t0: grid.t0(), dt: grid.dt(), values, prior_emitted: T::zero() })
    }

    pub fn with_prior_emitted(mut self, prior: T) -> Self {
        self.prior_emitted = prior;
        self
    }

    pub fn grid(&self) -> Result<TimeGrid<T>> {
        TimeGrid::new(self.t0, self.dt, self.values.len())
    }
}

/// Target photon: envelope family, detuning, bandwidth reduction and emitted fraction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhotonShape<T> {
    pub family: ShapeFamily,
    pub kappa: T,
    pub delta: T,
    pub eta: T,
    pub fraction_n: T,
    pub envelope: Option<SampledEnvelope<T>>,
}

impl<T: Real> PhotonShape<T> {
    pub fn sech(kappa: T, delta: T, eta: T) -> Result<Self> {
        Self::fractional(kappa, delta, eta, T::one())
    }

    pub fn fractional(kappa: T, delta: T, eta: T, n: T) -> Result<Self> {
        let s = Self { family: ShapeFamily::Sech, kappa, delta, eta, fraction_n: n, envelope: None };
        s.validate()?;
        Ok(s)
    }

    pub fn exponential(kappa: T, delta: T, eta: T) -> Result<Self> {
        let s = Self { family: ShapeFamily::Exponential, kappa, delta, eta, fraction_n: T::one(), envelope: None };
        s.validate()?;
        Ok(s)
    }

    pub fn custom(kappa: T, delta: T, envelope: SampledEnvelope<T>) -> Result<Self> {
        let s = Self {
            family: ShapeFamily::Custom,
            kappa,
            delta,
            eta: T::one(),
            fraction_n: T::one(),
            envelope: Some(envelope),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        check_kappa(self.kappa)?;
        check_eta(self.eta)?;
        if !(self.fraction_n >= T::one()) {
            return Err(Error::invalid(format!("fraction n must be >= 1, got {}", self.fraction_n)));
        }
        if !self.delta.is_finite() {
            return Err(Error::invalid("detuning must be finite"));
        }
        match self.family {
            ShapeFamily::Exponential => {
                ExponentialControl::new(self.kappa, self.delta, self.eta)?;
            }
            ShapeFamily::Custom if self.envelope.is_none() => {
                return Err(Error::invalid("custom shape needs a sampled envelope"));
            }
            _ => {}
        }
        Ok(())
    }

    /// Envelope `|gamma(t)|` for the analytic families.
    pub fn envelope_at(&self, t: T) -> T {
        let two = T::lit(2.0);
        match self.family {
            ShapeFamily::Sech => {
                let x = self.kappa * t / (two * self.eta);
                (self.kappa / (T::lit(4.0) * self.eta * self.fraction_n)).sqrt() * sech(x)
            }
            ShapeFamily::Exponential => {
                if t < T::zero() {
                    return T::zero();
                }
                let eta = self.eta;
                (T::lit(4.0) * self.kappa / (eta * eta * eta)).sqrt() * self.kappa * t * (-self.kappa * t / eta).exp()
            }
            ShapeFamily::Custom => match &self.envelope {
                Some(env) => {
                    let s = ((t - env.t0) / env.dt).round();
                    s.to_usize().and_then(|k| env.values.get(k).copied()).unwrap_or_else(T::zero)
                }
                None => T::zero(),
            },
        }
    }

    /// Complex target photon including its carrier offset `e^{-i delta t}`.
    pub fn photon_at(&self, t: T) -> Cx<T> {
        Cx::from_polar(self.envelope_at(t), -self.delta * t)
    }

    /// `(|gamma|, d|gamma|/dt + kappa |gamma| / 2, kappa (1 - Gamma) - |gamma|^2)` for the analytic families.
    fn analytic_terms(&self, t: T) -> (T, T, T) {
        let (k, eta, n) = (self.kappa, self.eta, self.fraction_n);
        let two = T::lit(2.0);
        let four = T::lit(4.0);
        match self.family {
            ShapeFamily::Sech => {
                let x = k * t / (two * eta);
                let m = self.envelope_at(t);
                let omt = one_minus_tanh(x);
                let drive = k / (two * eta) * (eta - T::one() + omt) * m;
                let den = k / (four * eta * n) * (four * eta * (n - T::one()) + omt * (two * (eta - T::one()) + omt));
                (m, drive, den)
            }
            ShapeFamily::Exponential => {
                if t < T::zero() {
                    return (T::zero(), T::zero(), k);
                }
                let m = self.envelope_at(t);
                let a = (four * k / (eta * eta * eta)).sqrt() * k;
                let drive = a * (-k * t / eta).exp() * (T::one() - k * t / eta + k * t / two);
                let s = two * k * t / eta;
                let den = k * (-s).exp() * (T::one() + s + s * s * (eta - two) / (two * eta));
                (m, drive, den)
            }
            ShapeFamily::Custom => unreachable!("custom envelopes are handled from samples"),
        }
    }
}

fn meta_of<T: Real>(kappa: T, delta: T, eta: T, n: T) -> WaveformMeta {
    WaveformMeta { kappa: kappa.as_f64(), delta: delta.as_f64(), eta: eta.as_f64(), n: n.as_f64() }
}

/// Relative change of the envelope derivative when the grid spacing doubles.
fn derivative_grid_change<T: Real>(values: &[T], dm: &[T], dt: T) -> T {
    let coarse: Vec<T> = values.iter().step_by(2).copied().collect();
    if coarse.len() < 5 {
        return T::zero();
    }
    let dc = derivative4(&coarse, dt + dt);
    let scale = dm.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    if scale == T::zero() {
        return T::zero();
    }
    // Edge stencils are one-sided and less accurate; judge the interior.
    let n = dc.len();
    (2..n - 2).map(|j| (dc[j] - dm[2 * j]).abs()).fold(T::zero(), T::max) / scale
}

/// Control that makes the emitter release `shape`, obtained from the shape alone.
pub fn reverse_engineer_control<T: Real>(shape: &PhotonShape<T>, grid: &TimeGrid<T>) -> Result<ControlWaveform<T>> {
    shape.validate()?;
    let (k, delta) = (shape.kappa, shape.delta);
    let dt = grid.dt();
    let half_k = T::lit(0.5) * k;
    let (m, drive, den): (Vec<T>, Vec<T>, Vec<T>) = match shape.family {
        ShapeFamily::Custom => {
            let env = shape.envelope.as_ref().expect("validated");
            let eg = env.grid()?;
            if !eg.matches(grid) {
                return Err(Error::GridMismatch { expected: grid.len(), found: env.values.len() });
            }
            let m = env.values.clone();
            let dm = derivative4(&m, dt);
            let change = derivative_grid_change(&m, &dm, dt);
            if change > T::lit(0.01) {
                return Err(Error::GridTooCoarse { relative_change: change.as_f64() });
            }
            let m2: Vec<T> = m.iter().map(|v| *v * *v).collect();
            let dm2: Vec<T> = m.iter().zip(&dm).map(|(v, d)| T::lit(2.0) * *v * *d).collect();
            let total = cumulative_trapezoid_corrected(&m2, &dm2, dt).last().copied().unwrap_or_else(T::zero);
            let after = reverse_cumulative_trapezoid_corrected(&m2, &dm2, dt);
            let left = T::one() - env.prior_emitted - total;
            let den = after.iter().zip(&m2).map(|(a, q)| k * (left + *a) - *q).collect();
            let drive = m.iter().zip(&dm).map(|(v, d)| *d + half_k * *v).collect();
            (m, drive, den)
        }
        _ => {
            let mut m = Vec::with_capacity(grid.len());
            let mut drive = Vec::with_capacity(grid.len());
            let mut den = Vec::with_capacity(grid.len());
            for t in grid.times() {
                let (a, b, c) = shape.analytic_terms(t);
                m.push(a);
                drive.push(b);
                den.push(c);
            }
            (m, drive, den)
        }
    };
    if let Some(j) = den.iter().position(|d| !(*d > T::zero())) {
        return Err(Error::NonPhysicalShape { time: grid.time(j).as_f64(), denominator: den[j].as_f64() });
    }
    let amplitude: Vec<T> = (0..m.len())
        .map(|j| ((drive[j] * drive[j] + delta * delta * m[j] * m[j]) / den[j]).sqrt())
        .collect();
    let phase = if delta == T::zero() {
        vec![T::zero(); m.len()]
    } else {
        let rate: Vec<T> = (0..m.len()).map(|j| delta * m[j] * m[j] / den[j]).collect();
        let drate = derivative4(&rate, dt);
        let acc = cumulative_trapezoid_corrected(&rate, &drate, dt);
        let two = T::lit(2.0);
        let mut phase: Vec<T> = grid
            .times()
            .enumerate()
            .map(|(j, t)| delta * t + (-(two * drive[j])).atan2(two * delta * m[j]) - acc[j])
            .collect();
        unwrap_phase(&mut phase);
        phase
    };
    if let Some(bad) = amplitude.iter().position(|a| !a.is_finite()) {
        return Err(Error::NonPhysicalShape { time: grid.time(bad).as_f64(), denominator: den[bad].as_f64() });
    }
    let mut w = ControlWaveform::from_samples(grid, amplitude, phase, meta_of(k, delta, shape.eta, shape.fraction_n))?;
    w.divergent = match shape.family {
        ShapeFamily::Sech => is_one(shape.eta) && delta != T::zero(),
        ShapeFamily::Exponential => (shape.eta - T::lit(2.0)).abs() < T::lit(1e-9) && delta != T::zero(),
        ShapeFamily::Custom => false,
    };
    Ok(w)
}

/// Closed-form control for a detuned sech photon.
pub fn sech_control<T: Real>(delta: T, eta: T, kappa: T, grid: &TimeGrid<T>) -> Result<ControlWaveform<T>> {
    let c = SechControl::new(kappa, delta, eta)?;
    let divergent = c.is_divergent();
    Ok(ControlWaveform::from_control(Arc::new(c), grid, meta_of(kappa, delta, eta, T::one()), divergent))
}

/// Closed-form real control for a resonant sech photon.
pub fn sech_control_resonant<T: Real>(eta: T, kappa: T, grid: &TimeGrid<T>) -> Result<ControlWaveform<T>> {
    let c = ResonantSechControl::new(kappa, eta)?;
    Ok(ControlWaveform::from_control(Arc::new(c), grid, meta_of(kappa, T::zero(), eta, T::one()), false))
}

/// Closed-form real control releasing `1/n` of the excitation.
pub fn fractional_sech_control<T: Real>(fraction_n: T, eta: T, kappa: T, grid: &TimeGrid<T>) -> Result<ControlWaveform<T>> {
    let c = FractionalSechControl::new(kappa, eta, fraction_n)?;
    Ok(ControlWaveform::from_control(Arc::new(c), grid, meta_of(kappa, T::zero(), eta, fraction_n), false))
}

/// Closed-form control for a detuned exponential photon emitted from `t = 0`.
pub fn exp_control<T: Real>(delta: T, eta: T, kappa: T, grid: &TimeGrid<T>) -> Result<ControlWaveform<T>> {
    let c = ExponentialControl::new(kappa, delta, eta)?;
    let divergent = c.is_divergent();
    Ok(ControlWaveform::from_control(Arc::new(c), grid, meta_of(kappa, delta, eta, T::one()), divergent))
}

/// `g'(t) = conj(g(delay - t))` sampled on `grid`.
pub fn time_reverse_for_absorption<T: Real>(control: &ControlWaveform<T>, delay: T, grid: &TimeGrid<T>) -> ControlWaveform<T> {
    let reversed = Reversed { inner: control.clone(), delay: delay.as_f64() };
    let mut meta = control.meta;
    meta.delta = -meta.delta;
    let mut w = ControlWaveform::from_control(Arc::new(reversed), grid, meta, control.divergent);
    if !control.is_analytic() {
        w.source = None;
    }
    w
}

/// Caps the amplitude at `g_max`, keeping the phase.
pub fn clamp_amplitude<T: Real>(control: &ControlWaveform<T>, g_max: T) -> ControlWaveform<T> {
    let mut w = control.clone();
    for a in &mut w.amplitude {
        *a = a.min(g_max);
    }
    if let Some(src) = &control.source {
        w.source = Some(Arc::new(Clamped { inner: src.clone(), g_max: g_max.as_f64() }));
    }
    w
}

/// Norm carried by a sampled envelope (trapezoid).
pub fn envelope_norm<T: Real>(values: &[T], dt: T) -> T {
    let sq: Vec<T> = values.iter().map(|v| *v * *v).collect();
    trapezoid(&sq, dt)
}
