use super::*;
use crate::constants::CODATA2018;

fn rb() -> SpeciesData {
    SpeciesData::rubidium87()
}

fn beam() -> LightField {
    LightField::linear(790.0, 1360.0)
}

fn ground(m: i32) -> HyperfineState {
    HyperfineState::rb87_ground(1, m).unwrap()
}

#[test]
fn d_line_root_ratio_parametrisation() {
    let r = find_tuneout(&ground(0), &beam(), &rb(), DEFAULT_BRACKET_NM, Toggles::D_LINES_SCALAR).unwrap();
    assert!((r.wavelength_nm - 790.01374).abs() < 0.5e-3, "{}", r.wavelength_nm);
    assert!(r.sign_change_verified);
    assert_eq!(r.matrix_elements, MatrixElements::Ratio);
}

#[test]
fn full_model_root() {
    let r = find_tuneout(&ground(0), &beam(), &rb(), DEFAULT_BRACKET_NM, Toggles::ALL).unwrap();
    assert!((r.wavelength_nm - 790.01850).abs() < 0.5e-3, "{}", r.wavelength_nm);
}

#[test]
fn direct_elements_fall_inside_row_a() {
    let data = rb();
    let options = ModelOptions {
        matrix_elements: MatrixElements::Direct,
        ..ModelOptions::for_data(&data)
    };
    let solver = TuneoutSolver::with_options(&ground(0), &beam(), &data, options).unwrap();
    let r = solver.find(DEFAULT_BRACKET_NM, Toggles::D_LINES_SCALAR).unwrap();
    assert!((r.wavelength_nm - 790.0181).abs() < 5.6e-3, "{}", r.wavelength_nm);
}

#[test]
fn circular_light_moves_m_plus_minus_roots() {
    let data = rb();
    let circ = LightField::with_circularity(790.0, 1360.0, 1.0);
    let r0 = find_tuneout(&ground(0), &circ, &data, WIDE_BRACKET_NM, Toggles::ALL).unwrap();
    for m in [1, -1] {
        let r = find_tuneout(&ground(m), &circ, &data, WIDE_BRACKET_NM, Toggles::ALL).unwrap();
        assert!((r.wavelength_nm - r0.wavelength_nm).abs() > 2.0, "m={m}: {}", r.wavelength_nm);
    }
}

#[test]
fn depth_orientation_around_root() {
    let solver = TuneoutSolver::new(&ground(0), &beam(), &rb()).unwrap();
    let r = solver.find(DEFAULT_BRACKET_NM, Toggles::ALL).unwrap();
    assert!(solver.depth(r.wavelength_nm - 0.05, Toggles::ALL).unwrap() < 0.0);
    assert!(solver.depth(r.wavelength_nm + 0.05, Toggles::ALL).unwrap() > 0.0);
    assert!(r.slope_er_per_pm > 0.0);
}

#[test]
fn no_sign_change_and_bad_bracket() {
    let solver = TuneoutSolver::new(&ground(0), &beam(), &rb()).unwrap();
    assert!(matches!(
        solver.find((786.0, 789.0), Toggles::ALL),
        Err(TuneoutError::NoSignChange { .. })
    ));
    assert!(matches!(
        solver.find((779.0, 789.0), Toggles::ALL),
        Err(TuneoutError::InvalidBracket { .. })
    ));
    assert!(matches!(
        solver.find((790.0, 789.0), Toggles::ALL),
        Err(TuneoutError::InvalidBracket { .. })
    ));
}

#[test]
fn multiple_roots_reported() {
    let f = |x: f64| -> Result<f64, StarkError> { Ok((x - 1.0) * (x - 2.0) * (x - 3.5)) };
    let opts = SolverOptions::default();
    match solve_single_root(f, (0.0, 4.0), &opts) {
        Err(TuneoutError::MultipleRoots(v)) => {
            assert_eq!(v.len(), 3);
            for (got, want) in v.iter().zip([1.0, 2.0, 3.5]) {
                assert!((got - want).abs() < 0.02);
            }
        }
        other => panic!("{other:?}"),
    }
    let r = solve_single_root(f, (1.5, 3.0), &opts).unwrap();
    assert!((r.root - 2.0).abs() < 1e-10);
}

#[test]
fn physical_rb_cases_have_single_roots() {
    let data = rb();
    for a in [-1.0, -0.3, 0.0, 0.5, 1.0] {
        let light = LightField::with_circularity(790.0, 1360.0, a);
        for (f, m) in [(1, -1), (1, 0), (1, 1), (2, -1), (2, 0), (2, 1)] {
            let state = HyperfineState::rb87_ground(f, m).unwrap();
            let solver = TuneoutSolver::new(&state, &light, &data).unwrap();
            assert_eq!(solver.scan_sign_changes(SEARCH_WINDOW_NM, Toggles::ALL).unwrap().len(), 1);
        }
    }
}

#[test]
fn resonance_inside_bracket_rejected() {
    let mut data = rb();
    data.lines[0].frequency_hz.value = CODATA2018.frequency_from_nm(788.0);
    let solver = TuneoutSolver::new(&ground(0), &beam(), &data).unwrap();
    assert!(matches!(
        solver.find(DEFAULT_BRACKET_NM, Toggles::ALL),
        Err(TuneoutError::ResonanceInBracket(_))
    ));
}

#[test]
fn linear_model_matches_root_on_narrow_grid() {
    let data = rb();
    let solver = TuneoutSolver::new(&ground(0), &beam(), &data).unwrap();
    let root = solver.find(DEFAULT_BRACKET_NM, Toggles::ALL).unwrap();
    let grid: Vec<f64> = (-10..=10).map(|k| root.wavelength_nm + k as f64 * 1e-4).collect();
    let lm = linear_model_with(&solver, &grid, Toggles::ALL).unwrap();
    assert!((lm.wavelength_nm - root.wavelength_nm).abs() * 1e3 < 1e-4);
    assert!((lm.slope_er_per_pm - root.slope_er_per_pm).abs() < 1e-6 * root.slope_er_per_pm.abs());
}

#[test]
fn linear_model_deviation() {
    let data = rb();
    let root = find_tuneout(&ground(0), &beam(), &data, DEFAULT_BRACKET_NM, Toggles::ALL).unwrap();
    let centred: Vec<f64> = (-20..=20).map(|k| root.wavelength_nm + k as f64 * 0.0025).collect();
    let lm = linear_model(&centred, &ground(0), &beam(), &data, Toggles::ALL).unwrap();
    assert!(lm.max_relative_deviation <= 0.0025, "{}", lm.max_relative_deviation);

    let wide: Vec<f64> = (0..=40).map(|k| 789.9 + k as f64 * 0.005).collect();
    let lm = linear_model(&wide, &ground(0), &beam(), &data, Toggles::ALL).unwrap();
    assert!(lm.max_relative_deviation < 0.005, "{}", lm.max_relative_deviation);
}

#[test]
fn linear_model_rejects_bad_grid() {
    let grid = [789.0, 789.1, 789.2];
    assert!(matches!(
        linear_model(&grid, &ground(0), &beam(), &rb(), Toggles::ALL),
        Err(TuneoutError::InvalidGrid)
    ));
    assert!(matches!(
        linear_model(&[790.0, 790.02], &ground(0), &beam(), &rb(), Toggles::ALL),
        Err(TuneoutError::InvalidGrid)
    ));
}

#[test]
fn ledger_components() {
    let l = contribution_ledger(&ground(0), &beam(), &rb()).unwrap();
    assert!((l.tensor_shift_pm.value - 0.091).abs() < 0.02, "{:?}", l.tensor_shift_pm);
    assert!((l.higher_states_shift_pm.value - 1.203).abs() < 0.048 + 0.05);
    assert!((l.core_shift_pm.value - 3.455).abs() < 0.038 + 0.05);
    assert!((l.total_shift_pm.value - 4.749).abs() < 0.1);
    assert!(l.additivity_residual_pm.abs() < 0.01);
    assert_eq!(l.vector_shift_pm.value, 0.0);
    assert!(l.higher_states_shift_pm.sigma > 0.03 && l.higher_states_shift_pm.sigma < 0.07);
    assert!(l.d_lines_nm.sigma < 1e-4);
    assert!(l.dataset.contains("ratio"));
}
