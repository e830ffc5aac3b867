mod common;

use common::{elliptical, linear_at, six_j, sublevel_polarizability, three_j};
use tuneout_core::atomic::{clebsch_gordan, wigner_3j, wigner_6j, MatrixElements};
use tuneout_core::stark::{polarization_params, ModelOptions, StarkModel};
use tuneout_core::{HyperfineState, LightField, SpeciesData, Spin, Toggles};

const D_LINES: Toggles = Toggles {
    tensor: true,
    higher_states: false,
    core: false,
    vector: true,
};

fn s(twice: i32) -> Spin {
    Spin::from_twice(twice)
}

#[test]
fn three_j_matches_racah_oracle() {
    let mut checked = 0;
    for j1 in 0i32..=8 {
        for j2 in 0..=8 {
            for j3 in 0..=8 {
                if (j1 + j2 + j3) % 2 != 0 {
                    continue;
                }
                for m1 in (-j1..=j1).step_by(2) {
                    for m2 in (-j2..=j2).step_by(2) {
                        let m3 = -m1 - m2;
                        if m3.abs() > j3 {
                            continue;
                        }
                        let got = wigner_3j(s(j1), s(j2), s(j3), s(m1), s(m2), s(m3));
                        let want = three_j(j1, j2, j3, m1, m2, m3);
                        assert!((got - want).abs() < 1e-13, "({j1} {j2} {j3}; {m1} {m2} {m3}): {got} vs {want}");
                        checked += 1;
                    }
                }
            }
        }
    }
    assert!(checked > 2_000, "{checked}");
}

#[test]
fn six_j_matches_racah_oracle() {
    for a in 0..=6 {
        for b in 0..=6 {
            for c in 0..=6 {
                for d in 0..=4 {
                    for e in 0..=4 {
                        for f in 0..=4 {
                            let got = wigner_6j(s(a), s(b), s(c), s(d), s(e), s(f));
                            let want = six_j(a, b, c, d, e, f);
                            assert!((got - want).abs() < 1e-13, "{{{a} {b} {c}; {d} {e} {f}}}: {got} vs {want}");
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn three_j_orthogonality() {
    for j1 in 0i32..=8 {
        for j2 in 0..=8 {
            for j3 in ((j1 - j2).abs()..=(j1 + j2)).step_by(2) {
                for j3p in ((j1 - j2).abs()..=(j1 + j2)).step_by(2) {
                    for m3 in (-j3.min(j3p)..=j3.min(j3p)).step_by(2) {
                        let mut sum = 0.0;
                        for m1 in (-j1..=j1).step_by(2) {
                            let m2 = -m1 - m3;
                            if m2.abs() > j2 {
                                continue;
                            }
                            sum += wigner_3j(s(j1), s(j2), s(j3), s(m1), s(m2), s(m3))
                                * wigner_3j(s(j1), s(j2), s(j3p), s(m1), s(m2), s(m3));
                        }
                        let want = if j3 == j3p { 1.0 / f64::from(j3 + 1) } else { 0.0 };
                        assert!((sum - want).abs() < 1e-13);
                    }
                }
            }
        }
    }
}

#[test]
fn six_j_orthogonality() {
    for j1 in 0..=6 {
        for j2 in 0..=6 {
            for j4 in 0..=6 {
                for j5 in 0..=6 {
                    for j3 in 0..=8 {
                        for j3p in 0..=8 {
                            let mut sum = 0.0;
                            for x in 0..=12 {
                                sum += f64::from(x + 1)
                                    * f64::from(j3 + 1)
                                    * wigner_6j(s(j1), s(j2), s(x), s(j4), s(j5), s(j3))
                                    * wigner_6j(s(j1), s(j2), s(x), s(j4), s(j5), s(j3p));
                            }
                            let allowed = Spin::triangle(s(j1), s(j5), s(j3)) && Spin::triangle(s(j4), s(j2), s(j3));
                            let want = if j3 == j3p && allowed { 1.0 } else { 0.0 };
                            assert!((sum - want).abs() < 1e-12, "{j1} {j2} {j4} {j5} {j3} {j3p}: {sum}");
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn clebsch_gordan_matches_oracle() {
    for (j1, j2) in [(1i32, 3i32), (2, 2), (3, 3), (1, 8)] {
        for j in ((j1 - j2).abs()..=j1 + j2).step_by(2) {
            for m1 in (-j1..=j1).step_by(2) {
                for m2 in (-j2..=j2).step_by(2) {
                    let m = m1 + m2;
                    if m.abs() > j {
                        continue;
                    }
                    let got = clebsch_gordan(s(j1), s(m1), s(j2), s(m2), s(j), s(m));
                    assert!((got - common::clebsch(j1, m1, j2, m2, j, m)).abs() < 1e-13);
                }
            }
        }
    }
}

/// Grid of 50 wavelengths across 700-1100 nm, avoiding the D lines.
pub fn oracle_grid() -> Vec<f64> {
    [786.1, 790.0185, 792.3]
        .into_iter()
        .chain(
            (0..50)
                .map(|k| 700.0 + 8.0 * k as f64 + 0.37)
                .filter(|l| !(779.0..=796.0).contains(l)),
        )
        .take(50)
        .collect()
}

fn light_cases() -> Vec<(LightField, common::Polarization)> {
    let mut cases = Vec::new();
    for a in [0.0f64, 0.3, -0.65, 1.0, -1.0] {
        let light = LightField::with_circularity(790.0, 1.0, a);
        cases.push((light, elliptical(light.theta0)));
    }
    for tp in [0.0, 0.7, 1.2] {
        let light = LightField::new(790.0, 1.0, 0.0, std::f64::consts::FRAC_PI_2, tp).unwrap();
        cases.push((light, linear_at(tp)));
    }
    cases
}

#[test]
fn factorised_matches_sublevel_sum() {
    let data = SpeciesData::rubidium87();
    let grid = oracle_grid();
    assert_eq!(grid.len(), 50);
    for elements in [MatrixElements::Ratio, MatrixElements::Direct] {
        for f in [1, 2] {
            let state = HyperfineState::rb87_ground(f, 0).unwrap();
            let options = ModelOptions {
                matrix_elements: elements,
                ..ModelOptions::for_data(&data)
            };
            let model = StarkModel::new(&data, &state, options).unwrap();
            for m in -f..=f {
                for (light, eps) in light_cases() {
                    let params = polarization_params(&light);
                    for &l in &grid {
                        let got = model.effective_polarizability(l, Spin::integer(m), params, D_LINES).unwrap();
                        let (want, scale) = sublevel_polarizability(&data, elements, 2 * f, 2 * m, eps, l);
                        assert!(
                            (got - want).abs() <= 1e-10 * scale,
                            "F={f} m={m} {params:?} {l} nm: {got} vs {want}"
                        );
                    }
                }
            }
        }
    }
}
