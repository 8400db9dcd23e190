//! Small scalar numerics: bracketing, bisection, quadrature, 1D minimization.

/// Bisection on `[lo, hi]` where `f(lo)` and `f(hi)` differ in sign.
///
/// Stops once the bracket width is below `rel_tol * max(|lo|, |hi|)` (or
/// `abs_floor` when the bracket straddles zero). Returns `None` without a sign
/// change.
pub fn bisect<F>(f: F, mut lo: f64, mut hi: f64, rel_tol: f64, abs_floor: f64) -> Option<f64>
where
    F: Fn(f64) -> f64,
{
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Some(lo);
    }
    if fhi == 0.0 {
        return Some(hi);
    }
    if !(flo.is_finite() && fhi.is_finite()) || flo.signum() == fhi.signum() {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let tol = (rel_tol * lo.abs().max(hi.abs())).max(abs_floor);
        if (hi - lo).abs() <= tol {
            return Some(mid);
        }
        let fmid = f(mid);
        if fmid == 0.0 {
            return Some(mid);
        }
        if fmid.signum() == flo.signum() {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Bisection in `ln x` for strictly positive brackets spanning decades.
pub fn bisect_log<F>(f: F, lo: f64, hi: f64, rel_tol: f64) -> Option<f64>
where
    F: Fn(f64) -> f64,
{
    debug_assert!(lo > 0.0 && hi > lo);
    bisect(|u| f(u.exp()), lo.ln(), hi.ln(), 0.0, rel_tol).map(f64::exp)
}

/// Grows a bracket around `guess` by powers of two, clamped to `[min, max]`,
/// until `f` changes sign across one of its octave segments. Returns the
/// segment `(lo, hi)` containing the sign change.
///
/// Segments are tested outward from the guess, alternating below and above,
/// so the crossing nearest to `guess` on a log scale is found first.
pub fn expand_bracket<F>(f: F, guess: f64, min: f64, max: f64) -> Option<(f64, f64)>
where
    F: Fn(f64) -> f64,
{
    let guess = guess.clamp(min, max);
    let f_guess = f(guess);
    if f_guess == 0.0 {
        return Some((guess, guess));
    }
    let (mut lo, mut f_lo) = (guess, f_guess);
    let (mut hi, mut f_hi) = (guess, f_guess);
    while lo > min || hi < max {
        if lo > min {
            let next = (lo / 2.0).max(min);
            let f_next = f(next);
            if f_next == 0.0 || f_next.signum() != f_lo.signum() {
                return Some((next, lo));
            }
            lo = next;
            f_lo = f_next;
        }
        if hi < max {
            let next = (hi * 2.0).min(max);
            let f_next = f(next);
            if f_next == 0.0 || f_next.signum() != f_hi.signum() {
                return Some((hi, next));
            }
            hi = next;
            f_hi = f_next;
        }
    }
    None
}

/// All sign changes of `f` on a uniform grid of `n + 1` points over `[a, b]`,
/// each refined by bisection.
pub fn scan_roots<F>(f: F, a: f64, b: f64, n: usize, abs_tol: f64) -> Vec<f64>
where
    F: Fn(f64) -> f64,
{
    let step = (b - a) / n as f64;
    let mut roots = Vec::new();
    let mut x0 = a;
    let mut f0 = f(x0);
    for i in 1..=n {
        let x1 = a + step * i as f64;
        let f1 = f(x1);
        if f0 == 0.0 {
            roots.push(x0);
        } else if f0.signum() != f1.signum() && f1 != 0.0 {
            if let Some(r) = bisect(&f, x0, x1, 0.0, abs_tol) {
                roots.push(r);
            }
        }
        x0 = x1;
        f0 = f1;
    }
    roots
}

/// Golden-section search for a local minimum of a unimodal `f` on `[a, b]`.
pub fn golden_min<F>(f: F, mut a: f64, mut b: f64, abs_tol: f64) -> f64
where
    F: Fn(f64) -> f64,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > abs_tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn integrate<F>(f: &F, a: f64, b: f64, tol: f64) -> f64
where
    F: Fn(f64) -> f64,
{
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64
where
    F: Fn(f64) -> f64,
{
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// `n` logarithmically spaced points from `a` to `b` inclusive (same sign).
pub fn geomspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    let (la, lb) = (a.abs().ln(), b.abs().ln());
    let sign = a.signum();
    (0..n)
        .map(|i| sign * (la + (lb - la) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// `n` evenly spaced points from `a` to `b` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_finds_sqrt2() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-12, 0.0).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn bisect_rejects_same_sign() {
        assert!(bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-9, 0.0).is_none());
    }

    #[test]
    fn expand_bracket_from_far_guess() {
        let f = |r: f64| r - 3.7e-5;
        let (lo, hi) = expand_bracket(f, 1e-7, 1e-9, 1e-3).unwrap();
        assert!(lo <= 3.7e-5 && hi >= 3.7e-5);
        let (lo, hi) = expand_bracket(f, 5e-4, 1e-9, 1e-3).unwrap();
        assert!(lo <= 3.7e-5 && hi >= 3.7e-5);
        assert!(expand_bracket(f, 1e-7, 1e-9, 1e-6).is_none());
    }

    #[test]
    fn simpson_polynomial_and_step() {
        let v = integrate(&|x: f64| x * x, 0.0, 3.0, 1e-12);
        assert!((v - 9.0).abs() < 1e-10);
        let v = integrate(&|x: f64| if x < 1.0 { 1.0 } else { 0.0 }, 0.0, 2.5, 1e-9);
        assert!((v - 1.0).abs() < 1e-6);
    }

    #[test]
    fn golden_section_parabola() {
        let x = golden_min(|x| (x - 1.25).powi(2), -3.0, 4.0, 1e-10);
        assert!((x - 1.25).abs() < 1e-8);
    }

    #[test]
    fn scan_finds_all_roots() {
        let roots = scan_roots(f64::sin, 0.5, 10.0, 100, 1e-12);
        assert_eq!(roots.len(), 3);
        assert!((roots[2] - 3.0 * std::f64::consts::PI).abs() < 1e-9);
    }

    #[test]
    fn spacings() {
        let g = geomspace(-0.5, -10.0, 3);
        assert!((g[1] + 5f64.sqrt()).abs() < 1e-12);
        let l = linspace(0.0, 1.0, 5);
        assert_eq!(l[2], 0.5);
    }
}
