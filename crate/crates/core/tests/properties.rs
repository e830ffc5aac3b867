mod common;

use proptest::prelude::*;
use tuneout_core::atomic::{wigner_3j, Spin};
use tuneout_core::fit::{cos_theta_k, fluctuating_pol_potential, MagneticEnvironment, PolarizationModel, VectorWeight};
use tuneout_core::imaging::{optical_density, FrameMeta, FrameRole, ReferenceKind};
use tuneout_core::kd::{populations_from_phase, kd_phase};
use tuneout_core::stark::{polarization_params, ModelOptions, StarkModel};
use tuneout_core::{Frame, HyperfineState, LightField, SpeciesData, Toggles};

fn spin_triple() -> impl Strategy<Value = (i32, i32, i32, i32, i32)> {
    (0i32..=8, 0i32..=8, 0i32..=8).prop_flat_map(|(a, b, c)| {
        let c = if (a + b + c) % 2 == 0 { c } else { c + 1 };
        let ma = (0..=a).prop_map(move |k| 2 * k - a);
        let mb = (0..=b).prop_map(move |k| 2 * k - b);
        (Just(a), Just(b), Just(c), ma, mb)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn three_j_cyclic_and_flip_symmetry((a, b, c, ma, mb) in spin_triple()) {
        let s = Spin::from_twice;
        let mc = -ma - mb;
        let w = wigner_3j(s(a), s(b), s(c), s(ma), s(mb), s(mc));
        let cyc = wigner_3j(s(b), s(c), s(a), s(mb), s(mc), s(ma));
        prop_assert!((w - cyc).abs() < 1e-13);
        let sign = if ((a + b + c) / 2) % 2 == 0 { 1.0 } else { -1.0 };
        let flipped = wigner_3j(s(a), s(b), s(c), s(-ma), s(-mb), s(-mc));
        prop_assert!((w - sign * flipped).abs() < 1e-13);
        prop_assert!((w - common::three_j(a, b, c, ma, mb, mc)).abs() < 1e-13);
    }

    #[test]
    fn projection_bounded_and_scale_free(
        b in prop::array::uniform3(-2.0f64..2.0),
        b0 in prop::array::uniform3(-1.0f64..1.0),
        k in 0.01f64..100.0,
    ) {
        let env = MagneticEnvironment::new(b, b0);
        prop_assume!(env.total().iter().map(|v| v * v).sum::<f64>() > 1e-12);
        let c = cos_theta_k(&env).unwrap();
        prop_assert!(c.abs() <= 1.0);
        let t = env.total();
        let scaled = MagneticEnvironment::new([k * t[0], k * t[1], k * t[2]], [0.0; 3]);
        prop_assert!((cos_theta_k(&scaled).unwrap() - c).abs() < 1e-14);
    }

    #[test]
    fn fluctuating_potential_bounds(g in -10.0f64..10.0, s in 0.0f64..5.0, ds in 0.0f64..1.0) {
        let v = fluctuating_pol_potential(g, s);
        prop_assert!(v >= g.abs() - 1e-12);
        prop_assert!((v - fluctuating_pol_potential(-g, s)).abs() < 1e-12 * v.max(1.0));
        prop_assert!(fluctuating_pol_potential(g, s + ds) >= v - 1e-12);
    }

    #[test]
    fn kd_populations_normalised_and_symmetric(v0 in 0.0f64..40.0, tau in 1.0f64..20.0) {
        let x = kd_phase(v0, tau, 3678.0);
        let p = populations_from_phase(x, None);
        prop_assert!((p.total() - 1.0).abs() < 1e-9);
        for n in 1..=p.max_order() {
            prop_assert!((p.get(n) - p.get(-n)).abs() < 1e-15);
        }
    }

    #[test]
    fn od_of_scaled_reference(k in 0.0f64..5.0, base in 10.0f64..5e4) {
        let r = Frame::new(3, 2, vec![base; 6], FrameMeta::new("r", FrameRole::Reference)).unwrap();
        let s = Frame::new(3, 2, vec![base * (-k).exp(); 6], FrameMeta::new("s", FrameRole::Signal)).unwrap();
        let od = optical_density(&s, &r, ReferenceKind::Raw).unwrap();
        prop_assert!(od.data().iter().all(|v| (v - k).abs() < 1e-12));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn vector_term_odd_in_projection(l in 700.0f64..775.0, a in -1.0f64..1.0, f in 1i32..=2) {
        let data = SpeciesData::rubidium87();
        let state = HyperfineState::rb87_ground(f, 0).unwrap();
        let model = StarkModel::new(&data, &state, ModelOptions::for_data(&data)).unwrap();
        let params = polarization_params(&LightField::with_circularity(l, 1.0, a));
        for m in 1..=f {
            let up = model.effective_polarizability(l, Spin::integer(m), params, Toggles::ALL).unwrap();
            let down = model.effective_polarizability(l, Spin::integer(-m), params, Toggles::ALL).unwrap();
            let flipped = polarization_params(&LightField::with_circularity(l, 1.0, -a));
            let up_flipped = model.effective_polarizability(l, Spin::integer(m), flipped, Toggles::ALL).unwrap();
            prop_assert!((down - up_flipped).abs() <= 1e-12 * up.abs().max(1.0));
        }
    }

    #[test]
    fn branch_flip_symmetry(dl in -0.2f64..0.2, a0 in -0.05f64..0.05, sa in 0.0f64..0.02) {
        let model = PolarizationModel {
            lambda_m_nm: 790.0185,
            f: Spin::ONE,
            tensor_offset_pm: 0.09,
            ratio_pm: -4800.0,
            weight: VectorWeight::HalfF,
        };
        let l = 790.0185 + dl;
        let plus = model.potential(l, Spin::ONE, 0.01, a0, sa);
        let minus = model.potential(l, -Spin::ONE, 0.01, -a0, sa);
        prop_assert!((plus - minus).abs() <= 1e-12 * plus.max(1.0));
    }
}
