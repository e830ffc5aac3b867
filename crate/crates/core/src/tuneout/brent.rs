//! Bracketing root finder: bisection safeguarded inverse quadratic interpolation.

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BrentError<E> {
    #[error("f(a) = {fa} and f(b) = {fb} have the same sign")]
    NotBracketed { fa: f64, fb: f64 },
    #[error("no convergence after {0} iterations")]
    MaxIterations(usize),
    #[error(transparent)]
    Function(E),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrentRoot {
    pub root: f64,
    pub value: f64,
    pub iterations: usize,
}

/// Root of `f` in `[a, b]` to absolute tolerance `xtol`.
pub fn brent<E, F>(mut f: F, a: f64, b: f64, xtol: f64, max_iter: usize) -> Result<BrentRoot, BrentError<E>>
where
    F: FnMut(f64) -> Result<f64, E>,
{
    let (mut a, mut b) = (a, b);
    let mut fa = f(a).map_err(BrentError::Function)?;
    let mut fb = f(b).map_err(BrentError::Function)?;
    if fa == 0.0 {
        return Ok(BrentRoot { root: a, value: 0.0, iterations: 0 });
    }
    if fb == 0.0 {
        return Ok(BrentRoot { root: b, value: 0.0, iterations: 0 });
    }
    if fa.signum() == fb.signum() {
        return Err(BrentError::NotBracketed { fa, fb });
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for iter in 1..=max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(BrentRoot { root: b, value: fb, iterations: iter });
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b).map_err(BrentError::Function)?;
    }
    Err(BrentError::MaxIterations(max_iter))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ok(x: f64) -> Result<f64, ()> {
        Ok(x)
    }

    #[test]
    fn cubic_root() {
        let r = brent(|x| ok(x * x * x - 2.0 * x - 5.0), 2.0, 3.0, 1e-14, 100).unwrap();
        assert!((r.root - 2.0945514815423265).abs() < 1e-13);
        assert!(r.iterations < 15);
    }

    #[test]
    fn transcendental_root() {
        let r = brent(|x| ok(x.cos() - x), 0.0, 1.0, 1e-15, 100).unwrap();
        assert!((r.root - 0.7390851332151607).abs() < 1e-14);
    }

    #[test]
    fn flat_then_steep() {
        let r = brent(|x: f64| ok((x - 0.3).powi(9)), -1.0, 2.0, 1e-12, 500).unwrap();
        assert!((r.root - 0.3).abs() < 1e-3);
    }

    #[test]
    fn unbracketed_is_error() {
        assert!(matches!(
            brent(|x| ok(x * x + 1.0), -1.0, 1.0, 1e-10, 50),
            Err(BrentError::NotBracketed { .. })
        ));
    }

    #[test]
    fn endpoint_root() {
        assert_eq!(brent(|x| ok(x - 1.0), 1.0, 2.0, 1e-10, 50).unwrap().root, 1.0);
    }

    #[test]
    fn function_error_propagates() {
        let r: Result<_, BrentError<&str>> = brent(|x| if x > 0.5 { Err("boom") } else { Ok(x - 0.7) }, 0.0, 1.0, 1e-10, 50);
        assert!(matches!(r, Err(BrentError::Function("boom"))));
    }
}
