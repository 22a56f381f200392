use wqed_core::spectral::{filter_response, spectrum_of};
use wqed_core::*;

const K: f64 = 1.0;

fn window60() -> TimeGrid64 {
    TimeGrid::symmetric(30.0, 1e-2).unwrap()
}

#[test]
fn real_signal_has_symmetric_power() {
    let g: TimeGrid64 = TimeGrid::new(-10.0, 0.01, 2001).unwrap();
    let x: Vec<Cx<f64>> = g.times().map(|t| Cx::new((-t * t / 3.0).exp(), 0.0)).collect();
    let s = spectrum_of(&x, &g).unwrap();
    let n = s.omega.len();
    // omega[j] = -omega[n - j] for the even padded length.
    for j in 1..n / 2 {
        assert!((s.omega[j] + s.omega[n - j]).abs() < 1e-9);
        assert!((s.g[j].norm() - s.g[n - j].norm()).abs() < 1e-12);
    }
}

#[test]
fn half_bandwidth_photon_spectrum_peaks_at_carrier() {
    let s = spectrum(&sech_control(4.0, 2.0, K, &window60()).unwrap());
    assert!(spectral_peak(&s).abs() <= s.d_omega);
}

#[test]
fn three_halves_bandwidth_spectrum_peaks_at_minus_delta() {
    let s = spectrum(&sech_control(4.0, 1.5, K, &window60()).unwrap());
    assert!((spectral_peak(&s) + 4.0).abs() <= 2.0 * s.d_omega);
}

#[test]
fn resonant_control_is_centered() {
    for eta in [1.0, 2.0, 3.0] {
        let s = spectrum(&sech_control(0.0, eta, K, &window60()).unwrap());
        assert!(spectral_center(&s).abs() < 1e-6);
    }
}

#[test]
fn spectral_center_is_the_power_weighted_phase_rate() {
    // Time-domain oracle: the mean frequency of g = r e^{i phi} is the |g|^2-weighted mean of phi'.
    let g = window60();
    for eta in [1.5, 2.0, 3.0] {
        let w = sech_control(4.0, eta, K, &g).unwrap();
        let num: f64 = g.times().zip(&w.amplitude).map(|(t, a)| a * a * phase_rate(t, 4.0, eta, K)).sum();
        let den: f64 = w.amplitude.iter().map(|a| a * a).sum();
        let c = spectral_center(&spectrum(&w));
        assert!((c - num / den).abs() < 1e-3, "eta={eta}: {c} vs {}", num / den);
    }
}

#[test]
fn spectral_center_approaches_asymptotic_rate_for_long_windows() {
    let d = 4.0;
    let eta = 3.0;
    let target = d * (eta - 2.0) / (eta - 1.0);
    let mut errs = Vec::new();
    for half in [30.0, 60.0, 120.0] {
        let w = sech_control(d, eta, K, &TimeGrid::symmetric(half, 1e-2).unwrap()).unwrap();
        errs.push((spectral_center(&spectrum(&w)) - target).abs());
    }
    assert!(errs.windows(2).all(|p| p[1] < p[0]));
}

#[test]
fn transform_round_trip_and_parseval() {
    let g = window60();
    let w = sech_control(2.0, 2.0, K, &g).unwrap();
    let s = spectrum(&w);
    let back = inverse(&s);
    for (a, b) in w.samples().iter().zip(&back) {
        assert!((a - b).norm() < 1e-10);
    }
    let e_t: f64 = w.amplitude.iter().map(|a| a * a).sum::<f64>() * g.dt();
    assert!((s.energy() - e_t).abs() < 1e-8 * e_t);
}

#[test]
fn wide_filter_is_the_identity() {
    let g = window60();
    let w = sech_control(1.0, 2.0, K, &g).unwrap();
    let f = low_pass_filter(&w, 1e12).unwrap();
    for (a, b) in w.samples().iter().zip(&f.samples()) {
        assert!((a - b).norm() < 1e-8);
    }
    assert!(filter_mismatch_s(&w, 1e12, (-30.0, 30.0)).unwrap() < 1e-16);
}

#[test]
fn filter_passes_dc_and_halves_power_at_cutoff() {
    assert_eq!(filter_response(0.0, 3.0), Cx::new(1.0, 0.0));
    assert!((filter_response(3.0, 3.0).norm() - 0.5f64.sqrt()).abs() < 1e-15);
    assert!((filter_response(-3.0, 3.0).norm() - 0.5f64.sqrt()).abs() < 1e-15);
    // A tone that fits the padded period exactly passes through as a tone.
    let n = 4096;
    let dt = 0.01;
    let g = TimeGrid::new(0.0, dt, n).unwrap();
    let period = (n * 4) as f64 * dt;
    let w0 = 2.0 * std::f64::consts::PI * 200.0 / period;
    let amp = vec![1.0; n];
    let phase: Vec<f64> = g.times().map(|t| w0 * t).collect();
    let meta = wqed_core::pulse::WaveformMeta { kappa: 1.0, delta: 0.0, eta: 1.0, n: 1.0 };
    let tone = ControlWaveform::from_samples(&g, amp.clone(), phase, meta).unwrap();
    let dc = ControlWaveform::from_samples(&g, amp, vec![0.0; n], meta).unwrap();
    let f_dc = low_pass_filter(&dc, w0).unwrap();
    // Away from the window edges the truncation transients have died out.
    let mid = n / 2;
    assert!((f_dc.amplitude[mid] - 1.0).abs() < 1e-2);
    let f_tone = low_pass_filter(&tone, w0).unwrap();
    assert!((f_tone.amplitude[mid] - 0.5f64.sqrt()).abs() < 1e-2);
}

#[test]
fn mismatch_is_invariant_under_global_phase() {
    let g = window60();
    let w = sech_control(10.0, 2.0, K, &g).unwrap();
    let base = filter_mismatch_s(&w, 10.0, (-30.0, 30.0)).unwrap();
    let mut rotated = w.clone().into_sampled();
    for p in &mut rotated.phase {
        *p += 1.234;
    }
    let s = filter_mismatch_s(&rotated, 10.0, (-30.0, 30.0)).unwrap();
    assert!((s - base).abs() < 1e-12 * base);
}

#[test]
fn half_bandwidth_control_is_most_robust_to_filtering() {
    let g = window60();
    let s = |eta: f64| filter_mismatch_s(&sech_control(10.0, eta, K, &g).unwrap(), 10.0, (-30.0, 30.0)).unwrap();
    let best = s(2.0);
    for eta in [1.25, 1.5, 3.0, 4.0] {
        assert!(best < s(eta), "eta={eta}");
    }
}

#[test]
fn filtered_mismatch_value() {
    // Pinned regression value for the kappa tau = 60 window.
    let s = filter_mismatch_s(&sech_control(10.0, 2.0, K, &window60()).unwrap(), 10.0, (-30.0, 30.0)).unwrap();
    assert!((s - 0.0243).abs() < 5e-4, "S = {s}");
}

#[test]
fn mismatched_samples_are_rejected() {
    let g = TimeGrid::new(0.0, 0.1, 10).unwrap();
    assert!(matches!(spectrum_of(&[Cx::new(1.0, 0.0); 3], &g), Err(Error::GridMismatch { .. })));
}
