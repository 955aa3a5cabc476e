use crate::error::{Error, Result};

/// Root of a non-decreasing function on `[a, b]`.
///
/// Returns `a` when `f(a) >= 0` and `b` when `f(b) <= 0`. Otherwise iterates
/// Illinois false position inside the bracket, substituting a bisection step
/// whenever two consecutive steps failed to halve the bracket. Stops once the
/// bracket is narrower than `tol`.
pub(crate) fn increasing_root<F: FnMut(f64) -> f64>(
    mut f: F,
    mut a: f64,
    mut b: f64,
    tol: f64,
    max_iter: usize,
) -> Result<f64> {
    let mut fa = f(a);
    if fa >= 0.0 {
        return Ok(a);
    }
    let mut fb = f(b);
    if fb <= 0.0 {
        return Ok(b);
    }
    let mut side = 0i8;
    let mut width_two_ago = f64::INFINITY;
    let mut width_one_ago = b - a;
    for _ in 0..max_iter {
        let width = b - a;
        if width <= tol {
            return Ok(interpolate(a, fa, b, fb));
        }
        let bisect = width > 0.5 * width_two_ago;
        width_two_ago = width_one_ago;
        width_one_ago = width;

        let mut c = if bisect { 0.5 * (a + b) } else { interpolate(a, fa, b, fb) };
        if !(c > a && c < b) {
            c = 0.5 * (a + b);
        }
        let fc = f(c);
        if fc == 0.0 {
            return Ok(c);
        }
        if fc < 0.0 {
            a = c;
            fa = fc;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        } else {
            b = c;
            fb = fc;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        }
    }
    if b - a <= tol {
        return Ok(interpolate(a, fa, b, fb));
    }
    Err(Error::RootSearch {
        iterations: max_iter,
        context: format!("bracket [{a:e}, {b:e}] still wider than {tol:e}"),
    })
}

fn interpolate(a: f64, fa: f64, b: f64, fb: f64) -> f64 {
    let c = (a * fb - b * fa) / (fb - fa);
    if c.is_finite() && c >= a && c <= b {
        c
    } else {
        0.5 * (a + b)
    }
}

/// Minimizer of a unimodal function on `[a, b]` by golden-section search.
pub(crate) fn golden_min<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}
