//! Hyperfine level energies and reduced matrix elements in the F basis.

use super::spin::Spin;
use super::wigner::wigner_6j;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HyperfineError {
    #[error("triangle rule violated: F = {f} cannot couple I = {i} and J = {j}")]
    Triangle { i: Spin, j: Spin, f: Spin },
}

fn check_triangle(i: Spin, j: Spin, f: Spin) -> Result<(), HyperfineError> {
    if Spin::triangle(i, j, f) {
        Ok(())
    } else {
        Err(HyperfineError::Triangle { i, j, f })
    }
}

/// Hyperfine shift (Hz) of level `F` relative to the fine-structure centroid.
///
/// Magnetic-dipole and electric-quadrupole terms,
/// `A K/2 + B [3/2 K(K+1) - 2 I(I+1) J(J+1)] / [4 I(2I-1) J(2J-1)]`
/// with `K = F(F+1) - I(I+1) - J(J+1)`. The quadrupole term is dropped when
/// `I` or `J` is below 1, where it is undefined.
pub fn hyperfine_level_energy(
    j: Spin,
    a_hfs_hz: f64,
    b_hfs_hz: f64,
    i: Spin,
    f: Spin,
) -> Result<f64, HyperfineError> {
    check_triangle(i, j, f)?;
    let (iv, jv) = (i.value(), j.value());
    let k = f.casimir() - i.casimir() - j.casimir();
    let mut shift = 0.5 * a_hfs_hz * k;
    if i.twice() >= 2 && j.twice() >= 2 && b_hfs_hz != 0.0 {
        let num = 1.5 * k * (k + 1.0) - 2.0 * i.casimir() * j.casimir();
        let den = 4.0 * iv * (2.0 * iv - 1.0) * jv * (2.0 * jv - 1.0);
        shift += b_hfs_hz * num / den;
    }
    Ok(shift)
}

/// Reduced F-basis dipole element `<F'||d||F>` from the J-basis element `<J'||d||J>`.
///
/// Both elements follow the Wigner-Eckart convention
/// `<F' m'| d_q |F m> = (-1)^(F'-m') (F' 1 F; -m' q m) <F'||d||F>`, for which
/// `sum_F' |<F'||d||F>|^2 = (2F+1)/(2J+1) |<J'||d||J>|^2`.
pub fn reduced_hf_matrix_element(
    j_lower: Spin,
    j_upper: Spin,
    reduced_j: f64,
    i: Spin,
    f_lower: Spin,
    f_upper: Spin,
) -> Result<f64, HyperfineError> {
    check_triangle(i, j_lower, f_lower)?;
    check_triangle(i, j_upper, f_upper)?;
    if !Spin::triangle(f_lower, f_upper, Spin::ONE) {
        return Ok(0.0);
    }
    let phase = (j_upper + i + f_lower + Spin::ONE).twice() / 2;
    let sign = if phase.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    let degeneracy = f64::from(f_lower.multiplicity() * f_upper.multiplicity()).sqrt();
    Ok(sign * degeneracy * wigner_6j(j_upper, f_upper, i, f_lower, j_lower, Spin::ONE) * reduced_j)
}

#[cfg(test)]
mod tests {
    use super::*;

    const RB_GROUND_A: f64 = 3.417_341_305_452_145e9;

    fn sp(s: &str) -> Spin {
        s.parse().unwrap()
    }

    #[test]
    fn ground_state_splitting() {
        let (i, j) = (sp("3/2"), sp("1/2"));
        let e1 = hyperfine_level_energy(j, RB_GROUND_A, 0.0, i, sp("1")).unwrap();
        let e2 = hyperfine_level_energy(j, RB_GROUND_A, 0.0, i, sp("2")).unwrap();
        // A (I + 1/2)
        assert!(((e2 - e1) / (2.0 * RB_GROUND_A) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_constants_give_zero() {
        let (i, j) = (sp("3/2"), sp("3/2"));
        for f in Spin::coupled(i, j) {
            assert_eq!(hyperfine_level_energy(j, 0.0, 0.0, i, f).unwrap(), 0.0);
        }
    }

    #[test]
    fn centroid_is_zero() {
        for (j, a, b) in [("1/2", RB_GROUND_A, 0.0), ("1/2", 408.328e6, 0.0), ("3/2", 84.7185e6, 12.4965e6)] {
            let (i, j) = (sp("3/2"), sp(j));
            let mut weighted = 0.0;
            let mut scale = 0.0;
            for f in Spin::coupled(i, j) {
                let e = hyperfine_level_energy(j, a, b, i, f).unwrap();
                weighted += f64::from(f.multiplicity()) * e;
                scale += f64::from(f.multiplicity()) * e.abs();
            }
            assert!(weighted.abs() <= 1e-12 * scale, "{weighted}");
        }
    }

    #[test]
    fn triangle_violation_is_an_error() {
        let err = hyperfine_level_energy(sp("1/2"), 1.0, 0.0, sp("3/2"), sp("3")).unwrap_err();
        assert!(matches!(err, HyperfineError::Triangle { .. }));
        assert!(reduced_hf_matrix_element(sp("1/2"), sp("3/2"), 1.0, sp("3/2"), sp("1"), sp("4")).is_err());
    }

    #[test]
    fn forbidden_f_change_vanishes() {
        let v = reduced_hf_matrix_element(sp("1/2"), sp("3/2"), 1.0, sp("3/2"), sp("1"), sp("3")).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn line_strength_sum_rule() {
        let i = sp("3/2");
        for (jl, ju) in [("1/2", "1/2"), ("1/2", "3/2")] {
            let (jl, ju) = (sp(jl), sp(ju));
            for f in Spin::coupled(i, jl) {
                let total: f64 = Spin::coupled(i, ju)
                    .map(|fp| reduced_hf_matrix_element(jl, ju, 1.0, i, f, fp).unwrap().powi(2))
                    .sum();
                let expected = f64::from(f.multiplicity()) / f64::from(jl.multiplicity());
                assert!((total - expected).abs() < 1e-14, "F={f}: {total} vs {expected}");
            }
        }
    }
}
