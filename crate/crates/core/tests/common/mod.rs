//! Independent oracles shared by the integration tests: floating-point Racah
//! formulas and an explicit sublevel sum for the dynamic polarizability.
#![allow(dead_code)]

use nalgebra::Complex;
use tuneout_core::atomic::{MatrixElements, SpeciesData};
use tuneout_core::CODATA2018;

fn fact(n: i32) -> f64 {
    (1..=n).map(f64::from).product()
}

fn half(twice: i32) -> Option<i32> {
    (twice % 2 == 0).then_some(twice / 2)
}

fn delta(a: i32, b: i32, c: i32) -> Option<f64> {
    // Arguments are twice the angular momenta.
    let (x, y, z) = (half(a + b - c)?, half(a - b + c)?, half(-a + b + c)?);
    if x < 0 || y < 0 || z < 0 {
        return None;
    }
    Some(fact(x) * fact(y) * fact(z) / fact(half(a + b + c)? + 1))
}

/// Wigner 3j symbol from twice the arguments.
pub fn three_j(j1: i32, j2: i32, j3: i32, m1: i32, m2: i32, m3: i32) -> f64 {
    if m1 + m2 + m3 != 0 || m1.abs() > j1 || m2.abs() > j2 || m3.abs() > j3 {
        return 0.0;
    }
    if (j1 + m1) % 2 != 0 || (j2 + m2) % 2 != 0 || (j3 + m3) % 2 != 0 {
        return 0.0;
    }
    let Some(tri) = delta(j1, j2, j3) else { return 0.0 };
    let h = |x: i32| x / 2;
    let pre = tri
        * fact(h(j1 + m1))
        * fact(h(j1 - m1))
        * fact(h(j2 + m2))
        * fact(h(j2 - m2))
        * fact(h(j3 + m3))
        * fact(h(j3 - m3));
    let kmin = 0.max(h(j2 - j3 - m1)).max(h(j1 - j3 + m2));
    let kmax = h(j1 + j2 - j3).min(h(j1 - m1)).min(h(j2 + m2));
    let mut sum = 0.0;
    for k in kmin..=kmax {
        let den = fact(k)
            * fact(h(j1 + j2 - j3) - k)
            * fact(h(j1 - m1) - k)
            * fact(h(j2 + m2) - k)
            * fact(h(j3 - j2 + m1) + k)
            * fact(h(j3 - j1 - m2) + k);
        sum += if k % 2 == 0 { 1.0 } else { -1.0 } / den;
    }
    let phase = h(j1 - j2 - m3);
    let sign = if phase.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    sign * pre.sqrt() * sum
}

/// Wigner 6j symbol from twice the arguments.
pub fn six_j(j1: i32, j2: i32, j3: i32, j4: i32, j5: i32, j6: i32) -> f64 {
    let triads = [(j1, j2, j3), (j1, j5, j6), (j4, j2, j6), (j4, j5, j3)];
    let mut pre = 1.0;
    for &(a, b, c) in &triads {
        match delta(a, b, c) {
            Some(d) => pre *= d,
            None => return 0.0,
        }
    }
    let h = |x: i32| x / 2;
    let sums = [j1 + j2 + j3, j1 + j5 + j6, j4 + j2 + j6, j4 + j5 + j3];
    let kmin = sums.iter().map(|&s| h(s)).max().unwrap();
    let kmax = h(j1 + j2 + j4 + j5).min(h(j2 + j3 + j5 + j6)).min(h(j3 + j1 + j6 + j4));
    let mut sum = 0.0;
    for k in kmin..=kmax {
        let den = sums.iter().map(|&s| fact(k - h(s))).product::<f64>()
            * fact(h(j1 + j2 + j4 + j5) - k)
            * fact(h(j2 + j3 + j5 + j6) - k)
            * fact(h(j3 + j1 + j6 + j4) - k);
        sum += if k % 2 == 0 { 1.0 } else { -1.0 } * fact(k + 1) / den;
    }
    pre.sqrt() * sum
}

/// `<j1 m1; j2 m2 | j m>` from twice the arguments.
pub fn clebsch(j1: i32, m1: i32, j2: i32, m2: i32, j: i32, m: i32) -> f64 {
    let phase = (j1 - j2 + m) / 2;
    let sign = if phase.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    sign * f64::from(j + 1).sqrt() * three_j(j1, j2, j, m1, m2, -m)
}

fn hyperfine_shift(a: f64, b: f64, i2: i32, j2: i32, f2: i32) -> f64 {
    let (i, j, f) = (i2 as f64 / 2.0, j2 as f64 / 2.0, f2 as f64 / 2.0);
    let k = f * (f + 1.0) - i * (i + 1.0) - j * (j + 1.0);
    let mut e = 0.5 * a * k;
    if i2 >= 2 && j2 >= 2 && b != 0.0 {
        e += b * (1.5 * k * (k + 1.0) - 2.0 * i * (i + 1.0) * j * (j + 1.0)) / (4.0 * i * (2.0 * i - 1.0) * j * (2.0 * j - 1.0));
    }
    e
}

/// Polarization vector in Cartesian components (x, y, z).
pub type Polarization = [Complex<f64>; 3];

pub fn elliptical(theta0: f64) -> Polarization {
    [Complex::new(theta0.cos(), 0.0), Complex::new(0.0, theta0.sin()), Complex::new(0.0, 0.0)]
}

pub fn linear_at(theta_p: f64) -> Polarization {
    [Complex::new(theta_p.sin(), 0.0), Complex::new(0.0, 0.0), Complex::new(theta_p.cos(), 0.0)]
}

/// `<J' mj'| d_q |J mj>` in the Wigner-Eckart convention, arguments doubled.
fn d_spherical(jp: i32, mjp: i32, q: i32, j: i32, mj: i32, reduced: f64) -> f64 {
    let phase = (jp - mjp) / 2;
    let sign = if phase.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    sign * three_j(jp, 2, j, -mjp, 2 * q, mj) * reduced
}

/// Explicit `sum_e |<e|eps.d|g>|^2/(w_e - w) + |<e|eps*.d|g>|^2/(w_e + w)` over every hyperfine
/// sublevel of the excited states, in atomic units. Returns the value and the sum of magnitudes.
pub fn sublevel_polarizability(
    data: &SpeciesData,
    elements: MatrixElements,
    f2: i32,
    m2: i32,
    eps: Polarization,
    wavelength_nm: f64,
) -> (f64, f64) {
    let c = &CODATA2018;
    let omega = 2.0 * std::f64::consts::PI * c.c / (wavelength_nm * 1e-9);
    let hartree = c.hartree / c.hbar;
    let i2 = data.species.nuclear_spin.twice();
    let lower = data.level("5S1/2").unwrap();
    let j2 = lower.j.twice();
    let lower_shift = hyperfine_shift(lower.hyperfine_a_hz.value, lower.b_hz(), i2, j2, f2);
    let (mut total, mut scale) = (0.0, 0.0);
    for line in data.lines_from("5S1/2") {
        let upper = data.level(&line.upper).unwrap();
        let jp2 = upper.j.twice();
        let reduced = data.reduced_dipole(line, elements) * f64::from(j2 + 1).sqrt();
        let mut fp2 = (i2 - jp2).abs();
        while fp2 <= i2 + jp2 {
            let nu = line.frequency_hz.value + hyperfine_shift(upper.hyperfine_a_hz.value, upper.b_hz(), i2, jp2, fp2) - lower_shift;
            let w_e = 2.0 * std::f64::consts::PI * nu;
            let mut mp2 = -fp2;
            while mp2 <= fp2 {
                // Spherical components <F' m'| d_q |F m> through the uncoupled basis.
                let mut dq = [0.0; 3];
                for (slot, q) in [-1, 0, 1].into_iter().enumerate() {
                    let mut acc = 0.0;
                    let mut mj2 = -j2;
                    while mj2 <= j2 {
                        let mi2 = m2 - mj2;
                        let mjp2 = mj2 + 2 * q;
                        if mi2.abs() <= i2 && mjp2.abs() <= jp2 && mjp2 + mi2 == mp2 {
                            acc += clebsch(j2, mj2, i2, mi2, f2, m2)
                                * clebsch(jp2, mjp2, i2, mi2, fp2, mp2)
                                * d_spherical(jp2, mjp2, q, j2, mj2, reduced);
                        }
                        mj2 += 2;
                    }
                    dq[slot] = acc;
                }
                let (dm, d0, dp) = (dq[0], dq[1], dq[2]);
                let s2 = std::f64::consts::SQRT_2;
                let cart = [
                    Complex::new((dm - dp) / s2, 0.0),
                    Complex::new(0.0, (dm + dp) / s2),
                    Complex::new(d0, 0.0),
                ];
                let absorb: Complex<f64> = eps.iter().zip(&cart).map(|(e, d)| e * d).sum();
                let emit: Complex<f64> = eps.iter().zip(&cart).map(|(e, d)| e.conj() * d).sum();
                let a = absorb.norm_sqr() * hartree / (w_e - omega);
                let b = emit.norm_sqr() * hartree / (w_e + omega);
                total += a + b;
                scale += a.abs() + b.abs();
                mp2 += 2;
            }
            fp2 += 2;
        }
    }
    (total, scale)
}
