//! Wigner 3j and 6j symbols.
//!
//! Symbols whose factorial arguments stay below [`EXACT_FACTORIAL_LIMIT`] are
//! evaluated exactly: every factorial is held as a vector of prime exponents,
//! the Racah sum is carried out in big integers after pulling out the common
//! prime power, and only the final square root is taken in floating point.
//! Larger symbols fall back to a log-factorial Racah sum.

use std::sync::OnceLock;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::spin::Spin;

/// Largest factorial argument handled by the exact path.
pub const EXACT_FACTORIAL_LIMIT: u32 = 256;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WignerError {
    #[error("argument {index} of a Wigner symbol is not a half-integer: {value}")]
    NotHalfInteger { index: usize, value: f64 },
}

fn primes() -> &'static [u32] {
    static PRIMES: OnceLock<Vec<u32>> = OnceLock::new();
    PRIMES.get_or_init(|| {
        let n = EXACT_FACTORIAL_LIMIT as usize;
        let mut sieve = vec![true; n + 1];
        let mut out = Vec::new();
        for p in 2..=n {
            if sieve[p] {
                out.push(p as u32);
                let mut q = p * p;
                while q <= n {
                    sieve[q] = false;
                    q += p;
                }
            }
        }
        out
    })
}

/// Adds `sign * exponents(n!)` into `acc` (Legendre's formula).
fn accumulate_factorial(acc: &mut [i32], n: u32, sign: i32) {
    for (slot, &p) in acc.iter_mut().zip(primes()) {
        if p > n {
            break;
        }
        let mut q = n / p;
        let mut e = 0;
        while q > 0 {
            e += q as i32;
            q /= p;
        }
        *slot += sign * e;
    }
}

fn ln_factorial(n: u32) -> f64 {
    libm::lgamma(f64::from(n) + 1.0)
}

/// A product of factorials `prod(num!) / prod(den!)` with a sign.
struct FactorialTerm {
    negative: bool,
    num: Vec<u32>,
    den: Vec<u32>,
}

/// `sign * sqrt(pre_num!/pre_den!) * sum(terms)`.
struct RacahSum {
    negative: bool,
    pre_num: Vec<u32>,
    pre_den: Vec<u32>,
    terms: Vec<FactorialTerm>,
}

impl RacahSum {
    fn max_argument(&self) -> u32 {
        self.pre_num
            .iter()
            .chain(&self.pre_den)
            .chain(self.terms.iter().flat_map(|t| t.num.iter().chain(&t.den)))
            .copied()
            .max()
            .unwrap_or(0)
    }

    fn evaluate(&self) -> f64 {
        if self.terms.is_empty() {
            return 0.0;
        }
        if self.max_argument() <= EXACT_FACTORIAL_LIMIT {
            self.evaluate_exact()
        } else {
            self.evaluate_float()
        }
    }

    fn evaluate_exact(&self) -> f64 {
        let np = primes().len();
        let exps: Vec<Vec<i32>> = self
            .terms
            .iter()
            .map(|t| {
                let mut e = vec![0; np];
                t.num.iter().for_each(|&n| accumulate_factorial(&mut e, n, 1));
                t.den.iter().for_each(|&n| accumulate_factorial(&mut e, n, -1));
                e
            })
            .collect();
        let mut common = exps[0].clone();
        for e in &exps[1..] {
            for (c, &x) in common.iter_mut().zip(e) {
                *c = (*c).min(x);
            }
        }
        let mut sum = BigInt::zero();
        for (term, e) in self.terms.iter().zip(&exps) {
            let mut v = BigUint::one();
            for ((&p, &x), &c) in primes().iter().zip(e).zip(&common) {
                let k = (x - c) as u32;
                if k > 0 {
                    v *= BigUint::from(p).pow(k);
                }
            }
            let v = BigInt::from(v);
            if term.negative {
                sum -= v;
            } else {
                sum += v;
            }
        }
        if sum.is_zero() {
            return 0.0;
        }
        let negative = self.negative ^ sum.is_negative();

        // value^2 = sum^2 * prefactor * P^(2 * common)
        let mut total = vec![0; np];
        self.pre_num.iter().for_each(|&n| accumulate_factorial(&mut total, n, 1));
        self.pre_den.iter().for_each(|&n| accumulate_factorial(&mut total, n, -1));
        let mut num = sum.magnitude() * sum.magnitude();
        let mut den = BigUint::one();
        for ((&p, &t), &c) in primes().iter().zip(&total).zip(&common) {
            let e = t + 2 * c;
            if e > 0 {
                num *= BigUint::from(p).pow(e as u32);
            } else if e < 0 {
                den *= BigUint::from(p).pow((-e) as u32);
            }
        }
        let squared = BigRational::new(BigInt::from(num), BigInt::from(den))
            .to_f64()
            .unwrap_or(f64::NAN);
        let magnitude = squared.sqrt();
        if negative {
            -magnitude
        } else {
            magnitude
        }
    }

    fn evaluate_float(&self) -> f64 {
        let ln_pre = 0.5
            * (self.pre_num.iter().map(|&n| ln_factorial(n)).sum::<f64>()
                - self.pre_den.iter().map(|&n| ln_factorial(n)).sum::<f64>());
        let sum: f64 = self
            .terms
            .iter()
            .map(|t| {
                let ln = t.num.iter().map(|&n| ln_factorial(n)).sum::<f64>()
                    - t.den.iter().map(|&n| ln_factorial(n)).sum::<f64>();
                let v = (ln + ln_pre).exp();
                if t.negative {
                    -v
                } else {
                    v
                }
            })
            .sum();
        if self.negative {
            -sum
        } else {
            sum
        }
    }
}

/// Converts a sum of twice-values into a non-negative integer, if it is one.
fn half_sum(twice: i32) -> Option<u32> {
    if twice < 0 || twice % 2 != 0 {
        None
    } else {
        Some((twice / 2) as u32)
    }
}

/// Triangle factor arguments `(a+b-c)!, (a-b+c)!, (-a+b+c)!` over `(a+b+c+1)!`.
fn triangle_factorials(a: Spin, b: Spin, c: Spin) -> Option<([u32; 3], u32)> {
    if !Spin::triangle(a, b, c) {
        return None;
    }
    let (a, b, c) = (a.twice(), b.twice(), c.twice());
    Some((
        [half_sum(a + b - c)?, half_sum(a - b + c)?, half_sum(-a + b + c)?],
        half_sum(a + b + c + 2)?,
    ))
}

/// The Wigner 3j symbol `(j1 j2 j3; m1 m2 m3)`.
///
/// Returns exactly zero whenever a selection rule is violated.
pub fn wigner_3j(j1: Spin, j2: Spin, j3: Spin, m1: Spin, m2: Spin, m3: Spin) -> f64 {
    match racah_3j(j1, j2, j3, m1, m2, m3) {
        Some(sum) => sum.evaluate(),
        None => 0.0,
    }
}

fn racah_3j(j1: Spin, j2: Spin, j3: Spin, m1: Spin, m2: Spin, m3: Spin) -> Option<RacahSum> {
    if (m1 + m2 + m3).twice() != 0 {
        return None;
    }
    for (j, m) in [(j1, m1), (j2, m2), (j3, m3)] {
        if j.twice() < 0 || m.abs() > j || (j.twice() + m.twice()) % 2 != 0 {
            return None;
        }
    }
    let (tri, tri_den) = triangle_factorials(j1, j2, j3)?;
    let (j1t, j2t, j3t) = (j1.twice(), j2.twice(), j3.twice());
    let (m1t, m2t, m3t) = (m1.twice(), m2.twice(), m3.twice());

    let mut pre_num = tri.to_vec();
    for (j, m) in [(j1t, m1t), (j2t, m2t), (j3t, m3t)] {
        pre_num.push(half_sum(j + m)?);
        pre_num.push(half_sum(j - m)?);
    }
    // k ranges over integers with all denominator arguments non-negative.
    let lo = [0, j2t - j3t - m1t, j1t - j3t + m2t].into_iter().max().unwrap();
    let hi = [j1t + j2t - j3t, j1t - m1t, j2t + m2t].into_iter().min().unwrap();
    let mut terms = Vec::new();
    let mut k = lo;
    while k <= hi {
        terms.push(FactorialTerm {
            negative: (k / 2) % 2 != 0,
            num: Vec::new(),
            den: vec![
                half_sum(k)?,
                half_sum(j3t - j2t + k + m1t)?,
                half_sum(j3t - j1t + k - m2t)?,
                half_sum(j1t + j2t - j3t - k)?,
                half_sum(j1t - k - m1t)?,
                half_sum(j2t - k + m2t)?,
            ],
        });
        k += 2;
    }
    let phase = half_sum((j1t - j2t - m3t).rem_euclid(4))?;
    Some(RacahSum {
        negative: phase % 2 != 0,
        pre_num,
        pre_den: vec![tri_den],
        terms,
    })
}

/// The Wigner 6j symbol `{j1 j2 j3; j4 j5 j6}`.
///
/// Returns exactly zero whenever a triad violates the triangle rule.
pub fn wigner_6j(j1: Spin, j2: Spin, j3: Spin, j4: Spin, j5: Spin, j6: Spin) -> f64 {
    match racah_6j(j1, j2, j3, j4, j5, j6) {
        Some(sum) => sum.evaluate(),
        None => 0.0,
    }
}

fn racah_6j(j1: Spin, j2: Spin, j3: Spin, j4: Spin, j5: Spin, j6: Spin) -> Option<RacahSum> {
    let triads = [(j1, j2, j3), (j1, j5, j6), (j4, j2, j6), (j4, j5, j3)];
    let mut pre_num = Vec::with_capacity(12);
    let mut pre_den = Vec::with_capacity(4);
    let mut a = [0i32; 4];
    for (slot, &(x, y, z)) in a.iter_mut().zip(&triads) {
        let (tri, den) = triangle_factorials(x, y, z)?;
        pre_num.extend_from_slice(&tri);
        pre_den.push(den);
        *slot = x.twice() + y.twice() + z.twice();
    }
    let b = [
        j1.twice() + j2.twice() + j4.twice() + j5.twice(),
        j2.twice() + j3.twice() + j5.twice() + j6.twice(),
        j3.twice() + j1.twice() + j6.twice() + j4.twice(),
    ];
    let lo = *a.iter().max().unwrap();
    let hi = *b.iter().min().unwrap();
    let mut terms = Vec::new();
    let mut t = lo;
    while t <= hi {
        let mut den = Vec::with_capacity(7);
        for &ai in &a {
            den.push(half_sum(t - ai)?);
        }
        for &bi in &b {
            den.push(half_sum(bi - t)?);
        }
        let tt = half_sum(t)?;
        terms.push(FactorialTerm {
            negative: tt % 2 != 0,
            num: vec![tt + 1],
            den,
        });
        t += 2;
    }
    Some(RacahSum {
        negative: false,
        pre_num,
        pre_den,
        terms,
    })
}

/// Clebsch-Gordan coefficient `<j1 m1 j2 m2 | j m>`.
pub fn clebsch_gordan(j1: Spin, m1: Spin, j2: Spin, m2: Spin, j: Spin, m: Spin) -> f64 {
    let w = wigner_3j(j1, j2, j, m1, m2, -m);
    if w == 0.0 {
        return 0.0;
    }
    let phase = (j1 - j2 + m).twice();
    let sign = if (phase / 2).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    sign * f64::from(j.multiplicity()).sqrt() * w
}

fn to_spins(args: [f64; 6]) -> Result<[Spin; 6], WignerError> {
    let mut out = [Spin::ZERO; 6];
    for (index, (slot, value)) in out.iter_mut().zip(args).enumerate() {
        *slot = Spin::from_f64(value).ok_or(WignerError::NotHalfInteger { index, value })?;
    }
    Ok(out)
}

/// [`wigner_3j`] on floating-point arguments.
pub fn wigner_3j_f64(j1: f64, j2: f64, j3: f64, m1: f64, m2: f64, m3: f64) -> Result<f64, WignerError> {
    let [a, b, c, d, e, f] = to_spins([j1, j2, j3, m1, m2, m3])?;
    Ok(wigner_3j(a, b, c, d, e, f))
}

/// [`wigner_6j`] on floating-point arguments.
pub fn wigner_6j_f64(j1: f64, j2: f64, j3: f64, j4: f64, j5: f64, j6: f64) -> Result<f64, WignerError> {
    let [a, b, c, d, e, f] = to_spins([j1, j2, j3, j4, j5, j6])?;
    Ok(wigner_6j(a, b, c, d, e, f))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(x: f64) -> Spin {
        Spin::from_f64(x).unwrap()
    }

    fn w3(j1: f64, j2: f64, j3: f64, m1: f64, m2: f64, m3: f64) -> f64 {
        wigner_3j_f64(j1, j2, j3, m1, m2, m3).unwrap()
    }

    fn w6(j1: f64, j2: f64, j3: f64, j4: f64, j5: f64, j6: f64) -> f64 {
        wigner_6j_f64(j1, j2, j3, j4, j5, j6).unwrap()
    }

    #[test]
    fn coupling_to_zero() {
        assert!((w3(1.0, 1.0, 0.0, 0.0, 0.0, 0.0) + 1.0 / 3f64.sqrt()).abs() < 1e-15);
        // (-1)^(j-m) / sqrt(2j+1)
        for tj in 0..8 {
            let j = f64::from(tj) / 2.0;
            for m in s(j).projections() {
                let expected = if ((s(j) - m).twice() / 2) % 2 == 0 { 1.0 } else { -1.0 }
                    / f64::from(tj + 1).sqrt();
                let got = wigner_3j(s(j), s(j), Spin::ZERO, m, -m, Spin::ZERO);
                assert!((got - expected).abs() < 1e-15, "j={j} m={m}");
            }
        }
    }

    #[test]
    fn selection_rules_give_zero() {
        assert_eq!(w3(1.0, 1.0, 1.0, 1.0, 0.0, 0.0), 0.0);
        assert_eq!(w3(1.0, 1.0, 3.0, 0.0, 0.0, 0.0), 0.0);
        assert_eq!(w3(0.5, 0.5, 1.0, 1.5, -1.5, 0.0), 0.0);
        // odd j sum with all m = 0
        assert_eq!(w3(1.0, 1.0, 1.0, 0.0, 0.0, 0.0), 0.0);
        assert_eq!(w6(1.0, 1.0, 3.0, 1.0, 1.0, 1.0), 0.0);
    }

    #[test]
    fn tabulated_values() {
        // (1/2 1/2 1; 1/2 -1/2 0) = 1/sqrt(6)
        assert!((w3(0.5, 0.5, 1.0, 0.5, -0.5, 0.0) - 1.0 / 6f64.sqrt()).abs() < 1e-15);
        // {1/2 1/2 1; 1/2 1/2 0} = 1/2 ... sign (-1)^(a+b+c)/sqrt((2a+1)(2b+1)) with c=0
        assert!((w6(1.0, 1.0, 1.0, 1.0, 1.0, 1.0) - 1.0 / 6.0).abs() < 1e-15);
        assert!((w6(0.5, 0.5, 1.0, 0.5, 0.5, 0.0) - 0.5).abs() < 1e-15);
        // {2 2 2; 2 2 2} = -3/70
        assert!((w6(2.0, 2.0, 2.0, 2.0, 2.0, 2.0) + 3.0 / 70.0).abs() < 1e-15);
    }

    #[test]
    fn non_half_integer_rejected() {
        assert!(matches!(
            wigner_3j_f64(0.3, 1.0, 1.0, 0.0, 0.0, 0.0),
            Err(WignerError::NotHalfInteger { index: 0, .. })
        ));
        assert!(wigner_6j_f64(1.0, 1.0, 1.0, 1.0, 1.0, 0.25).is_err());
    }

    #[test]
    fn large_arguments_use_float_path_consistently() {
        // Both sides of the cutoff agree on a symbol with a closed form:
        // (j j 0; m -m 0) = (-1)^(j-m)/sqrt(2j+1).
        for j in [100, 140, 200] {
            let js = Spin::integer(j);
            let v = wigner_3j(js, js, Spin::ZERO, Spin::integer(3), Spin::integer(-3), Spin::ZERO);
            let expected = if (j - 3) % 2 == 0 { 1.0 } else { -1.0 } / f64::from(2 * j + 1).sqrt();
            assert!((v - expected).abs() < 1e-9 * expected.abs(), "j={j}: {v} vs {expected}");
        }
    }

    #[test]
    fn clebsch_gordan_two_spin_halves() {
        let h = Spin::HALF;
        let cg = clebsch_gordan(h, h, h, -h, Spin::ONE, Spin::ZERO);
        assert!((cg - 0.5f64.sqrt()).abs() < 1e-15);
        let cg = clebsch_gordan(h, -h, h, h, Spin::ZERO, Spin::ZERO);
        assert!((cg + 0.5f64.sqrt()).abs() < 1e-15);
    }
}
