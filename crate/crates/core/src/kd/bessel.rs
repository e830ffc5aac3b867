//! Bessel functions of the first kind, integer order.

/// `J_0(x) ..= J_n_max(x)` by Miller's backward recurrence, normalised with
/// `J_0 + 2 sum J_2k = 1`.
pub fn bessel_j_all(n_max: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; n_max + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    if x < 0.0 {
        let mut v = bessel_j_all(n_max, -x);
        for (n, j) in v.iter_mut().enumerate() {
            if n % 2 == 1 {
                *j = -*j;
            }
        }
        return v;
    }
    if x < 1e-5 {
        // Two-term series; the next term is below 1e-20 relative.
        let h = 0.5 * x;
        let mut lead = 1.0;
        for (n, j) in out.iter_mut().enumerate() {
            if n > 0 {
                lead *= h / n as f64;
            }
            *j = lead * (1.0 - h * h / (n as f64 + 1.0));
            if lead == 0.0 {
                break;
            }
        }
        return out;
    }
    let start = n_max.max(x as usize) + 20 + (40.0 * x).sqrt() as usize;
    let start = start + start % 2;
    let (mut above, mut current) = (0.0f64, 1e-300f64);
    let mut norm = 0.0;
    for k in (1..=start).rev() {
        let below = 2.0 * k as f64 / x * current - above;
        above = current;
        current = below;
        let n = k - 1;
        if n <= n_max {
            out[n] = current;
        }
        if n % 2 == 0 && n > 0 {
            norm += 2.0 * current;
        }
        if current.abs() > 1e250 {
            let s = 1e-250;
            current *= s;
            above *= s;
            norm *= s;
            for v in out.iter_mut() {
                *v *= s;
            }
        }
    }
    norm += current;
    for v in out.iter_mut() {
        *v /= norm;
    }
    out
}

/// `J_n(x)` for integer `n`, using `J_{-n} = (-1)^n J_n`.
pub fn bessel_j(n: i32, x: f64) -> f64 {
    let m = n.unsigned_abs() as usize;
    let j = bessel_j_all(m, x)[m];
    if n < 0 && m % 2 == 1 {
        -j
    } else {
        j
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        // Abramowitz & Stegun table 9.1.
        assert!((bessel_j(0, 1.0) - 0.765_197_686_557_966_6).abs() < 1e-15);
        assert!((bessel_j(1, 1.0) - 0.440_050_585_744_933_5).abs() < 1e-15);
        assert!((bessel_j(2, 1.0) - 0.114_903_484_931_900_5).abs() < 1e-15);
        assert!((bessel_j(0, 10.0) - (-0.245_935_764_451_348_3)).abs() < 1e-14);
        assert!((bessel_j(5, 10.0) - (-0.234_061_528_186_793_6)).abs() < 1e-14);
        assert!(bessel_j(0, 2.404_825_557_695_773).abs() < 1e-14);
    }

    #[test]
    fn negative_order_and_argument() {
        assert_eq!(bessel_j(-3, 2.0), -bessel_j(3, 2.0));
        assert_eq!(bessel_j(3, -2.0), -bessel_j(3, 2.0));
        assert_eq!(bessel_j(2, -2.0), bessel_j(2, 2.0));
    }

    #[test]
    fn zero_and_tiny_arguments() {
        assert_eq!(bessel_j_all(3, 0.0), vec![1.0, 0.0, 0.0, 0.0]);
        let j = bessel_j_all(2, 1e-7);
        assert!((j[1] - 5e-8).abs() < 1e-22);
        assert!((j[2] - 1.25e-15).abs() < 1e-29);
    }

    #[test]
    fn continuity_at_series_switch() {
        let a = bessel_j_all(4, 0.999_999e-5);
        let b = bessel_j_all(4, 1.000_001e-5);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() <= 1e-5 * x.abs().max(1e-300));
        }
    }

    #[test]
    fn large_orders_decay() {
        let j = bessel_j_all(60, 5.0);
        assert!(j[60] > 0.0 && j[60] < 1e-40);
    }
}
