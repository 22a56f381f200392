//! Fourier analysis of controls and the single-pole low-pass filter diagnostic.
//!
//! Transform convention: `G(omega) = (1/sqrt(2 pi)) * integral g(t) e^{-i omega t} dt`,
//! evaluated by FFT on a grid zero-padded to four times its length.
//! The divergent maximum-bandwidth detuned control has no finite spectrum and
//! should not be passed here.

use num_traits::Float;
use rustfft::{FftNum, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{trapezoid, TimeGrid};
use crate::pulse::{ControlWaveform, WaveformMeta};
use crate::scalar::{Cx, Real};

pub const PAD_FACTOR: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct Spectrum<T: Real> {
    /// Ascending, uniform frequencies (rad/s).
    pub omega: Vec<T>,
    pub g: Vec<Cx<T>>,
    pub d_omega: T,
    /// Time grid of the transformed samples.
    pub grid: TimeGrid<T>,
}

impl<T: Real> Spectrum<T> {
    pub fn power(&self) -> Vec<T> {
        self.g.iter().map(|v| v.norm_sqr()).collect()
    }

    /// `sum |G|^2 d_omega`.
    pub fn energy(&self) -> T {
        self.g.iter().map(|v| v.norm_sqr()).sum::<T>() * self.d_omega
    }
}

fn centered_index(j: usize, n: usize) -> isize {
    if j < n / 2 {
        j as isize
    } else {
        j as isize - n as isize
    }
}

/// Spectrum of complex samples on `grid`.
pub fn spectrum_of<T: Real + FftNum>(samples: &[Cx<T>], grid: &TimeGrid<T>) -> Result<Spectrum<T>> {
    if samples.len() != grid.len() {
        return Err(Error::GridMismatch { expected: grid.len(), found: samples.len() });
    }
    let n = grid.len() * PAD_FACTOR;
    let mut buf = vec![Cx::new(T::zero(), T::zero()); n];
    buf[..samples.len()].copy_from_slice(samples);
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let dt = grid.dt();
    let two_pi = T::PI() + T::PI();
    let d_omega = two_pi / (T::from_usize(n).unwrap() * dt);
    let scale = dt / two_pi.sqrt();
    let mut omega = Vec::with_capacity(n);
    let mut g = Vec::with_capacity(n);
    // Reorder so frequencies ascend from -n/2.
    for m in 0..n {
        let j = (m + n - n / 2) % n;
        let w = T::from_isize(centered_index(j, n)).unwrap() * d_omega;
        let phase = Cx::from_polar(T::one(), -w * grid.t0());
        omega.push(w);
        g.push(buf[j] * phase * scale);
    }
    Ok(Spectrum { omega, g, d_omega, grid: *grid })
}

/// Spectrum of a sampled control.
pub fn spectrum<T: Real + FftNum>(control: &ControlWaveform<T>) -> Spectrum<T> {
    spectrum_of(&control.samples(), &control.grid()).expect("waveform samples match their own grid")
}

/// Time samples on the spectrum's grid.
pub fn inverse<T: Real + FftNum>(spec: &Spectrum<T>) -> Vec<Cx<T>> {
    let n = spec.g.len();
    let mut buf = vec![Cx::new(T::zero(), T::zero()); n];
    let t0 = spec.grid.t0();
    for (m, (w, v)) in spec.omega.iter().zip(&spec.g).enumerate() {
        let j = (m + n - n / 2) % n;
        buf[j] = *v * Cx::from_polar(T::one(), *w * t0);
    }
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    let two_pi = T::PI() + T::PI();
    let scale = spec.d_omega / two_pi.sqrt();
    buf.truncate(spec.grid.len());
    buf.into_iter().map(|v| v * scale).collect()
}

/// `|G|^2`-weighted mean frequency.
pub fn spectral_center<T: Real>(spec: &Spectrum<T>) -> T {
    let p = spec.power();
    let total: T = p.iter().copied().sum();
    if total == T::zero() {
        return T::zero();
    }
    spec.omega.iter().zip(&p).map(|(w, q)| *w * *q).sum::<T>() / total
}

/// Frequency of the largest `|G|^2` bin.
pub fn spectral_peak<T: Real>(spec: &Spectrum<T>) -> T {
    let p = spec.power();
    let (j, _) = p.iter().enumerate().fold((0, T::neg_infinity()), |best, (j, v)| if *v > best.1 { (j, *v) } else { best });
    spec.omega[j]
}

/// Single-pole response `omega_co / (omega_co + i omega)` in this crate's transform convention.
pub fn filter_response<T: Real>(omega: T, omega_co: T) -> Cx<T> {
    Cx::new(omega_co, T::zero()) / Cx::new(omega_co, omega)
}

fn filtered_samples<T: Real + FftNum>(samples: &[Cx<T>], grid: &TimeGrid<T>, omega_co: T) -> Result<Vec<Cx<T>>> {
    if !(omega_co > T::zero()) {
        return Err(Error::invalid(format!("cutoff must be positive, got {omega_co}")));
    }
    let mut spec = spectrum_of(samples, grid)?;
    for (w, v) in spec.omega.iter().zip(spec.g.iter_mut()) {
        *v = *v * filter_response(*w, omega_co);
    }
    Ok(inverse(&spec))
}

/// Control after the single-pole low-pass filter.
pub fn low_pass_filter<T: Real + FftNum>(control: &ControlWaveform<T>, omega_co: T) -> Result<ControlWaveform<T>> {
    let grid = control.grid();
    let out = filtered_samples(&control.samples(), &grid, omega_co)?;
    let amplitude = out.iter().map(|v| v.norm()).collect();
    let phase = out.iter().map(|v| v.arg()).collect();
    let meta: WaveformMeta = control.meta;
    let mut w = ControlWaveform::from_samples(&grid, amplitude, phase, meta)?;
    w.carrier_detuning = control.carrier_detuning;
    Ok(w)
}

/// `integral |g_F - g|^2 / integral |g|^2` over `window`.
pub fn filter_mismatch_s<T: Real + FftNum>(control: &ControlWaveform<T>, omega_co: T, window: (T, T)) -> Result<T> {
    let grid = control.grid();
    let g = control.samples();
    let f = filtered_samples(&g, &grid, omega_co)?;
    let range = grid.window(window.0, window.1);
    if range.len() < 2 {
        return Err(Error::invalid("filter window holds fewer than two samples"));
    }
    let diff: Vec<T> = range.clone().map(|k| (f[k] - g[k]).norm_sqr()).collect();
    let base: Vec<T> = range.map(|k| g[k].norm_sqr()).collect();
    let den = trapezoid(&base, grid.dt());
    if den == T::zero() {
        return Ok(T::zero());
    }
    Ok(Float::max(trapezoid(&diff, grid.dt()) / den, T::zero()))
}
