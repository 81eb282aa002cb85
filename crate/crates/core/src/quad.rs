//! Adaptive Simpson quadrature over finite windows.
//!
//! The integrands in this crate are Gaussian bells, possibly multiplied by
//! a polynomial or a second, much narrower bell. Each integral is taken
//! over a window wide enough that the truncated tails are below any
//! tolerance this crate accepts, and the window is pre-split into seed
//! panels so a feature much narrower than the window is seen by the error
//! estimate before refinement starts.
//!
//! Integration never fails outright: the result always carries the error
//! bound actually achieved, and the caller decides whether that meets its
//! tolerance once the bounds have been propagated to the reported values.

/// An integral value with a running bound on its absolute error.
#[derive(Debug, Clone, Copy)]
pub(crate) struct QuadOutcome {
    pub value: f64,
    pub err_bound: f64,
}

const SEED_PANELS: usize = 16;
const MAX_DEPTH: u32 = 28;

/// Integrates `f` over `[center - 12 sigma, center + 12 sigma]` aiming at
/// absolute tolerance `tol`. Twelve standard deviations leave a relative
/// tail below 1e-30 for the Gaussian-type integrands this crate produces.
pub(crate) fn integrate_window<F: Fn(f64) -> f64>(
    f: F,
    center: f64,
    sigma: f64,
    tol: f64,
) -> QuadOutcome {
    integrate_interval(f, center - 12.0 * sigma, center + 12.0 * sigma, tol)
}

/// Integrates `f` over `[lo, hi]` aiming at absolute tolerance `tol`.
pub(crate) fn integrate_interval<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    tol: f64,
) -> QuadOutcome {
    debug_assert!(lo < hi && tol > 0.0);
    let panel_tol = tol / SEED_PANELS as f64;
    let width = (hi - lo) / SEED_PANELS as f64;
    let mut value = 0.0;
    let mut err_bound = 0.0;
    for i in 0..SEED_PANELS {
        let a = lo + width * i as f64;
        let b = if i + 1 == SEED_PANELS {
            hi
        } else {
            lo + width * (i + 1) as f64
        };
        let m = 0.5 * (a + b);
        let (fa, fm, fb) = (f(a), f(m), f(b));
        let whole = simpson(fa, fm, fb, b - a);
        let (v, e) = refine(&f, a, b, fa, fm, fb, whole, panel_tol, MAX_DEPTH);
        value += v;
        err_bound += e;
    }
    QuadOutcome { value, err_bound }
}

#[inline]
fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
    h / 6.0 * (fa + 4.0 * fm + fb)
}

/// Recursive half of the classic adaptive rule: accept a panel when the
/// two-half Simpson estimate moves by no more than 15x the local budget
/// (the factor is the usual Richardson error constant), else split. A
/// panel is also accepted once its discrepancy falls below the roundoff
/// floor, where splitting cannot help, or when the depth budget runs out;
/// in every case the local discrepancy is surrendered into the error bound
/// rather than hidden.
#[allow(clippy::too_many_arguments)]
fn refine<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> (f64, f64) {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(fa, flm, fm, m - a);
    let right = simpson(fm, frm, fb, b - m);
    let d = left + right - whole;
    // The discrepancy of a converged panel is pure summation roundoff,
    // which can reach a few ulps of the operands; the factor keeps the
    // floor safely above that noise so refinement always terminates
    // instead of splitting on bits that carry no information.
    let floor = 16.0 * f64::EPSILON * (left.abs() + right.abs() + whole.abs());
    if d.abs() <= 15.0 * tol || d.abs() <= floor || depth == 0 {
        return (left + right + d / 15.0, d.abs() / 15.0);
    }
    let (lv, le) = refine(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1);
    let (rv, re) = refine(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
    (lv + rv, le + re)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gauss(z: f64, mean: f64, sigma: f64) -> f64 {
        let t = (z - mean) / sigma;
        (-0.5 * t * t).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
    }

    #[test]
    fn unit_gaussian_mass_is_one() {
        let out = integrate_window(|z| gauss(z, 3.0, 2.5), 3.0, 2.5, 1e-12);
        assert!((out.value - 1.0).abs() <= 1e-12, "{}", out.value);
        assert!(out.err_bound <= 1e-12);
    }

    #[test]
    fn cubic_is_integrated_exactly() {
        // Simpson is exact through cubics, so the seed pass already lands.
        let out = integrate_interval(|z| z * z * z - 2.0 * z + 1.0, -1.0, 3.0, 1e-12);
        let exact = (81.0 - 1.0) / 4.0 - (9.0 - 1.0) + (3.0 - (-1.0));
        assert!((out.value - exact).abs() <= 1e-12);
        assert!(out.err_bound <= 1e-12);
    }

    #[test]
    fn first_moment_of_offset_gaussian() {
        let out = integrate_window(|z| z * gauss(z, 7.0, 1.5), 7.0, 1.5, 1e-12);
        assert!((out.value - 7.0).abs() <= 1e-11, "{}", out.value);
    }

    #[test]
    fn narrow_bump_inside_wide_window_is_not_missed() {
        // Width ratio 1:1000, the regime the seed panels exist for.
        let out = integrate_interval(|z| gauss(z, 402.0, 10.0), -11999.0, 12001.0, 1e-10);
        assert!((out.value - 1.0).abs() <= 1e-10, "{}", out.value);
        assert!(out.err_bound <= 1e-10);
    }

    #[test]
    fn odd_integrand_over_symmetric_window_cancels() {
        let out = integrate_window(|z| z * gauss(z, 0.0, 1000.0), 0.0, 1000.0, 1e-10);
        assert!(out.value.abs() <= 1e-12, "{}", out.value);
    }

    #[test]
    fn impossible_tolerance_reports_honest_error_bound() {
        // 1e-40 is below f64 resolution for an O(1) integral; the refiner
        // must stop at the roundoff floor and say how far it got.
        let out = integrate_window(|z| gauss(z, 0.0, 1.0), 0.0, 1.0, 1e-40);
        assert!((out.value - 1.0).abs() <= 1e-12);
        assert!(out.err_bound > 1e-40);
    }
}
