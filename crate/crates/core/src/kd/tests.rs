use super::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

const RECOIL_HZ: f64 = 3678.0;
const TAU: f64 = 8.75;

/// Bessel integral `(1/pi) int_0^pi cos(n t - x sin t) dt` by the trapezoid rule.
fn bessel_oracle(n: i32, x: f64) -> f64 {
    let m = 2000;
    let h = std::f64::consts::PI / m as f64;
    let f = |t: f64| (n as f64 * t - x * t.sin()).cos();
    let mut s = 0.5 * (f(0.0) + f(std::f64::consts::PI));
    for k in 1..m {
        s += f(k as f64 * h);
    }
    s * h / std::f64::consts::PI
}

#[test]
fn bessel_matches_integral_oracle() {
    for &x in &[0.01, 0.3, 1.0, 2.4048, 5.0, 9.7, 15.0, 20.0] {
        let j = bessel_j_all(30, x);
        for n in 0..=30 {
            let o = bessel_oracle(n, x);
            assert!((j[n as usize] - o).abs() < 1e-13, "n={n} x={x}: {} vs {o}", j[n as usize]);
        }
    }
}

#[test]
fn one_recoil_phase() {
    assert!((kd_phase(1.0, TAU, RECOIL_HZ) - 0.10110).abs() < 1e-4);
    let x = kd_phase(3.7, TAU, RECOIL_HZ);
    assert!((depth_from_phase(x, TAU, RECOIL_HZ) - 3.7).abs() < 1e-12);
}

#[test]
fn zero_depth() {
    let p = diffraction_populations(0.0, TAU, RECOIL_HZ, None);
    assert_eq!(p.get(0), 1.0);
    assert!(p.populations.iter().filter(|(n, _)| **n != 0).all(|(_, v)| *v == 0.0));
}

#[test]
fn first_zero_of_j0() {
    let p = populations_from_phase(2.4048, None);
    assert!(p.get(0) < 1e-4);
}

#[test]
fn populations_sum_to_one_and_are_symmetric() {
    for k in 0..=200 {
        let x = 20.0 * k as f64 / 200.0;
        let p = populations_from_phase(x, None);
        assert!((p.total() - 1.0).abs() < 1e-9, "x={x}: {}", p.total());
        for n in 1..=p.max_order() {
            assert_eq!(p.get(n), p.get(-n));
        }
    }
}

#[test]
fn fixed_truncation() {
    let p = diffraction_populations(5.0, TAU, RECOIL_HZ, Some(2));
    assert_eq!(p.max_order(), 2);
    assert_eq!(p.populations.len(), 5);
}

#[test]
fn p0_decreasing_on_first_branch() {
    let mut prev = 1.0;
    for k in 1..=240 {
        let x = 2.4 * k as f64 / 240.0;
        let p0 = populations_from_phase(x, Some(0)).get(0);
        assert!(p0 < prev);
        prev = p0;
    }
}

#[test]
fn raman_nath_examples() {
    let r = raman_nath_check(5.0, TAU);
    assert_eq!(r.verdict, Verdict::Pass);
    assert!((r.margin - 0.04).abs() < 1e-15);
    assert_eq!(raman_nath_check(125.0, TAU).verdict, Verdict::Warn);
    let z = raman_nath_check(0.0, TAU);
    assert_eq!((z.verdict, z.margin), (Verdict::Pass, 0.0));
    assert_eq!(raman_nath_check_with(30.0, TAU, 0.5).verdict, Verdict::Pass);
}

#[test]
fn pulse_durations() {
    let square = PulseProfile::square(12.0, 1201);
    assert!((effective_pulse_duration(&square).unwrap() - 12.0).abs() < 1e-12);
    let shaped = PulseProfile::exponential_edges(12.0, 1.7, 4801);
    let t = effective_pulse_duration(&shaped).unwrap();
    assert!((t - 8.75).abs() < 0.5, "{t}");
    let half = effective_pulse_duration(&shaped.scaled(0.5)).unwrap();
    assert!((half - 0.5 * t).abs() < 1e-12);
}

#[test]
fn pulse_validation() {
    let mut p = PulseProfile::square(12.0, 200);
    p.envelope[3] = 1.2;
    assert!(matches!(effective_pulse_duration(&p), Err(KdError::InvalidPulse(_))));
    let short = PulseProfile::square(12.0, 50);
    assert!(matches!(effective_pulse_duration(&short), Err(KdError::InvalidPulse(_))));
    let empty = PulseProfile {
        nominal_duration_us: 12.0,
        times_us: vec![],
        envelope: vec![],
        rms_fluctuation: 0.0,
    };
    assert_eq!(effective_pulse_duration(&empty), Err(KdError::EmptyPulse));
}

#[test]
fn intensity_fluctuation_maps_linearly() {
    let pulse = PulseProfile::square(12.0, 200).with_fluctuation(0.023);
    assert!((pulse.depth_fluctuation(4.0) - 0.092).abs() < 1e-15);
}

#[test]
fn noiseless_round_trip() {
    let opts = InversionOptions::default();
    for k in 0..=50 {
        let v0 = 0.1 + (20.0 - 0.1) * k as f64 / 50.0;
        let p = diffraction_populations(v0, TAU, RECOIL_HZ, None);
        let est = invert_depth(&p, TAU, RECOIL_HZ, &opts).unwrap();
        assert!((est.depth_er - v0).abs() < 1e-6 * v0.max(1.0), "{v0}: {}", est.depth_er);
    }
}

#[test]
fn round_trip_up_to_phase_ten() {
    let opts = InversionOptions::default();
    for k in 1..=40 {
        let x = 10.0 * k as f64 / 40.0;
        let p = populations_from_phase(x, None);
        let est = invert_depth(&p, TAU, RECOIL_HZ, &opts).unwrap();
        assert!((est.phase - x).abs() < 1e-6, "{x}: {}", est.phase);
    }
}

#[test]
fn sign_is_not_observable() {
    let p = diffraction_populations(-3.0, TAU, RECOIL_HZ, None);
    let est = invert_depth(&p, TAU, RECOIL_HZ, &InversionOptions::default()).unwrap();
    assert!((est.depth_er - 3.0).abs() < 1e-6);
}

#[test]
fn missing_and_degenerate_inputs() {
    let mut p = diffraction_populations(3.0, TAU, RECOIL_HZ, None);
    p.populations.remove(&-1);
    assert_eq!(invert_depth(&p, TAU, RECOIL_HZ, &InversionOptions::default()), Err(KdError::MissingOrder(-1)));

    let flat = MomentumPopulations::new([(-1, 0.33), (0, 0.34), (1, 0.33)].into_iter().collect())
        .with_sigmas([(-1, 0.05), (0, 0.05), (1, 0.05)].into_iter().collect());
    assert!(matches!(
        invert_depth(&flat, TAU, RECOIL_HZ, &InversionOptions::default()),
        Err(KdError::Unidentifiable(_))
    ));
}

#[test]
fn noisy_round_trip_coverage() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let noise = Normal::new(0.0, 1.0).unwrap();
    let opts = InversionOptions::default();
    let mut inside = 0;
    let trials = 300;
    for t in 0..trials {
        let v0 = 0.5 + 19.5 * (t as f64 + 0.5) / trials as f64;
        let truth = diffraction_populations(v0, TAU, RECOIL_HZ, None);
        let mut pops = std::collections::BTreeMap::new();
        let mut sigmas = std::collections::BTreeMap::new();
        for (&n, &p) in &truth.populations {
            if p < 1e-8 {
                continue;
            }
            pops.insert(n, p * (1.0 + 0.02 * noise.sample(&mut rng)));
            sigmas.insert(n, 0.02 * p);
        }
        let m = MomentumPopulations::new(pops).with_sigmas(sigmas);
        let est = invert_depth(&m, TAU, RECOIL_HZ, &opts).unwrap();
        if (est.depth_er - v0).abs() <= 3.0 * est.sigma_er {
            inside += 1;
        }
    }
    assert!(inside as f64 >= 0.99 * trials as f64, "{inside}/{trials}");
}
