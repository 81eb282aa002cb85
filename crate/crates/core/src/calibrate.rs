//! Solves detector placements (and optionally couplings) so the exact
//! conditioned pointer means hit requested targets.
//!
//! All solving runs against the exact closed forms, never the leading-order
//! ones: at narrow preparation widths the leading-order error is no longer
//! negligible and would bias the solved centers. The two arms couple only
//! through the kept probability, so the default policy alternates cheap 1-D
//! bracketed solves until both residuals clear the tolerance.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytic::{analytic_report_exact, gauss_overlap, reduced_width, shifted_mean};
use crate::model::{ModelParams, ParamsError};

/// Detector arm being solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arm {
    Cat,
    Tail,
}

impl fmt::Display for Arm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Arm::Cat => "cat",
            Arm::Tail => "tail",
        })
    }
}

/// What the solver is allowed to vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Policy {
    /// Keep the couplings from `base` and move only the window centers.
    /// One unknown per arm, so the mean targets determine the solution.
    #[default]
    FixEpsSolveCenters,
    /// Solve centers and couplings together. Two unknowns per arm need a
    /// second constraint: the kept-probability excess each arm must
    /// contribute, supplied in `target_prob_excess`.
    SolveBoth,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationTarget {
    /// Desired kept-ensemble mean of the cat pointer.
    pub target_mean_x_b: f64,
    /// Desired kept-ensemble mean of the tail pointer.
    pub target_mean_y_b: f64,
    /// Widths and floor are always taken from here; centers and couplings
    /// are starting values or fixed values depending on the policy.
    pub base: ModelParams,
    pub policy: Policy,
    /// Kept-probability excess budgeted to the cat and tail detectors.
    /// Required by `SolveBoth`, ignored by `FixEpsSolveCenters`.
    pub target_prob_excess: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub params: ModelParams,
    /// Target minus achieved, via the exact closed form.
    pub residual_x: f64,
    pub residual_y: f64,
    /// Alternation sweeps used (0 for the degenerate baseline).
    pub iterations: u32,
    /// Always true in a returned result: failing to converge is an error.
    pub converged: bool,
    /// Set when the solver took a shortcut worth telling the caller about.
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CalibrationError {
    #[error("base parameters are invalid: {0}")]
    Params(#[from] ParamsError),
    #[error("calibration targets must be finite")]
    NonFiniteTarget,
    #[error("center solving requires a fixed {arm} coupling in (0, 1]")]
    CouplingRequired { arm: Arm },
    #[error("target {target} for the {arm} mean exceeds the achievable maximum {maximum}")]
    Infeasible { arm: Arm, target: f64, maximum: f64 },
    #[error("no sign change over the {arm} search bracket; the target lies below the zero-center response")]
    NoBracket { arm: Arm },
    #[error("joint solving requires finite positive per-arm kept-probability budgets")]
    BudgetRequired,
    #[error("solved {arm} coupling {value} falls outside (0, 1]")]
    CouplingOutOfRange { arm: Arm, value: f64 },
    #[error("residuals ({residual_x:e}, {residual_y:e}) still above tolerance after {iterations} sweeps")]
    NonConvergence {
        iterations: u32,
        residual_x: f64,
        residual_y: f64,
    },
    #[error("kept ensemble has zero probability; nothing to calibrate against")]
    EmptyEnsemble,
}

const MAX_SWEEPS: u32 = 64;

/// Exact conditioned mean of one arm with that arm's center replaced.
fn mean_for_arm(params: &ModelParams, arm: Arm, center: f64) -> f64 {
    let mut p = *params;
    match arm {
        Arm::Cat => p.u = center,
        Arm::Tail => p.v = center,
    }
    match analytic_report_exact(&p) {
        Ok(r) => match arm {
            Arm::Cat => r.mean_x_b,
            Arm::Tail => r.mean_y_b,
        },
        Err(_) => f64::NAN,
    }
}

/// Largest exact conditioned mean reachable by moving one window center
/// over `[0, 3 Delta]`, and the center that attains it. A coarse grid
/// locates the peak; golden-section search refines it.
pub fn achievable_max(params: &ModelParams, arm: Arm) -> (f64, f64) {
    let hi = 3.0 * params.big_delta;
    let eval = |c: f64| mean_for_arm(params, arm, c);
    const GRID: usize = 64;
    let at = |i: usize| hi * i as f64 / GRID as f64;
    let mut best_i = 0;
    let mut best = f64::NEG_INFINITY;
    for i in 0..=GRID {
        let v = eval(at(i));
        if v > best {
            best = v;
            best_i = i;
        }
    }
    let lo = at(best_i.saturating_sub(1));
    let hi = at((best_i + 1).min(GRID));
    let (c, v) = golden_max(eval, lo, hi);
    if best > v {
        (at(best_i), best)
    } else {
        (c, v)
    }
}

fn golden_max<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..120 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        }
        if hi - lo <= 1e-12 * (1.0 + hi.abs()) {
            break;
        }
    }
    let x = 0.5 * (lo + hi);
    (x, f(x))
}

/// Brent's method on a sign-changing bracket. Stops when the residual
/// drops below `ftol` or the bracket collapses to `xtol`. Returns `None`
/// when the endpoints do not straddle a root.
fn brent_root<F: Fn(f64) -> f64>(
    f: F,
    mut a: f64,
    mut b: f64,
    ftol: f64,
    xtol: f64,
) -> Option<f64> {
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    if fa.is_nan() || fb.is_nan() || fa.signum() == fb.signum() {
        return None;
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
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
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 || fb.abs() <= ftol {
            return Some(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            // Inverse quadratic (or secant) step, falling back to bisection
            // whenever the interpolant leaves the bracket or stalls.
            let s = fb / fa;
            let (mut p, mut q) = if a == c {
                (2.0 * xm * s, 1.0 - s)
            } else {
                let q = fa / fc;
                let r = fb / fc;
                (
                    s * (2.0 * xm * q * (q - r) - (b - a) * (r - 1.0)),
                    (q - 1.0) * (r - 1.0) * (s - 1.0),
                )
            };
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b);
    }
    Some(b)
}

/// Root-finds one window center against its mean target with the other arm
/// held fixed. The bracket runs from zero to the response maximum, which
/// selects the smaller of the two roots a peaked response admits.
fn solve_center(
    params: &ModelParams,
    arm: Arm,
    target: f64,
    ftol: f64,
) -> Result<f64, CalibrationError> {
    let (c_max, m_max) = achievable_max(params, arm);
    if m_max < target || m_max.is_nan() {
        return Err(CalibrationError::Infeasible {
            arm,
            target,
            maximum: m_max,
        });
    }
    let f = |c: f64| mean_for_arm(params, arm, c) - target;
    let xtol = 1e-15 * (1.0 + 3.0 * params.big_delta);
    brent_root(f, 0.0, c_max, ftol, xtol).ok_or(CalibrationError::NoBracket { arm })
}

/// Solves for parameters whose exact conditioned means equal the targets,
/// to absolute residual `tol` on both components.
pub fn fit(target: CalibrationTarget, tol: f64) -> Result<CalibrationResult, CalibrationError> {
    assert!(tol > 0.0 && tol.is_finite(), "tolerance must be positive");
    target.base.validate()?;
    if !(target.target_mean_x_b.is_finite() && target.target_mean_y_b.is_finite()) {
        return Err(CalibrationError::NonFiniteTarget);
    }
    // The detector-free model already yields means (1/2, 0); those targets
    // need no solving at all.
    if target.target_mean_x_b == 0.5 && target.target_mean_y_b == 0.0 {
        return degenerate_baseline(&target);
    }
    match target.policy {
        Policy::FixEpsSolveCenters => fit_centers(&target, tol),
        Policy::SolveBoth => fit_both(&target, tol),
    }
}

fn exact_residuals(
    params: &ModelParams,
    target: &CalibrationTarget,
) -> Result<(f64, f64), CalibrationError> {
    let report = analytic_report_exact(params).map_err(|_| CalibrationError::EmptyEnsemble)?;
    Ok((
        target.target_mean_x_b - report.mean_x_b,
        target.target_mean_y_b - report.mean_y_b,
    ))
}

fn degenerate_baseline(target: &CalibrationTarget) -> Result<CalibrationResult, CalibrationError> {
    let params = target.base.without_noise();
    let (residual_x, residual_y) = exact_residuals(&params, target)?;
    Ok(CalibrationResult {
        params,
        residual_x,
        residual_y,
        iterations: 0,
        converged: true,
        note: Some(
            "targets coincide with the detector-free baseline; couplings set to zero".to_owned(),
        ),
    })
}

fn fit_centers(
    target: &CalibrationTarget,
    tol: f64,
) -> Result<CalibrationResult, CalibrationError> {
    for (arm, eps) in [
        (Arm::Cat, target.base.eps_c),
        (Arm::Tail, target.base.eps_t),
    ] {
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(CalibrationError::CouplingRequired { arm });
        }
    }
    let mut params = target.base;
    // Inner solves aim well below the sweep tolerance so the remaining
    // residual is dominated by the cross-arm coupling, which the
    // alternation then contracts away.
    let ftol = tol / 16.0;
    let mut residual_x = f64::INFINITY;
    let mut residual_y = f64::INFINITY;
    for sweep in 1..=MAX_SWEEPS {
        params.u = solve_center(&params, Arm::Cat, target.target_mean_x_b, ftol)?;
        params.v = solve_center(&params, Arm::Tail, target.target_mean_y_b, ftol)?;
        (residual_x, residual_y) = exact_residuals(&params, target)?;
        if residual_x.abs() <= tol && residual_y.abs() <= tol {
            return Ok(CalibrationResult {
                params,
                residual_x,
                residual_y,
                iterations: sweep,
                converged: true,
                note: None,
            });
        }
    }
    Err(CalibrationError::NonConvergence {
        iterations: MAX_SWEEPS,
        residual_x,
        residual_y,
    })
}

/// Joint solve. The per-arm kept-probability budgets pin the denominator,
/// which decouples the arms: the cat product mean follows linearly, the
/// tail center comes from one 1-D root, and each coupling back-solves from
/// its budget.
fn fit_both(target: &CalibrationTarget, tol: f64) -> Result<CalibrationResult, CalibrationError> {
    let (budget_c, budget_t) = target
        .target_prob_excess
        .ok_or(CalibrationError::BudgetRequired)?;
    if !(budget_c > 0.0 && budget_t > 0.0 && budget_c.is_finite() && budget_t.is_finite()) {
        return Err(CalibrationError::BudgetRequired);
    }
    let base = target.base;
    let (d, dd) = (base.big_delta, base.delta);
    let sum_sq = d * d + dd * dd;
    let kap = reduced_width(d, dd) / d;
    let prob_b = base.p + budget_c + budget_t;

    // Cat arm: budget_c * m(1, u) must supply the kept first moment beyond
    // the silent floor, and m(1, u) is affine in u.
    let mx = (target.target_mean_x_b * prob_b - 0.5 * base.p) / budget_c;
    let u = (mx * sum_sq - dd * dd) / (d * d);
    let eps_c = 2.0 * budget_c / (base.q * kap * gauss_overlap(u - 1.0, d, dd));
    if !(eps_c > 0.0 && eps_c <= 1.0) {
        return Err(CalibrationError::CouplingOutOfRange {
            arm: Arm::Cat,
            value: eps_c,
        });
    }

    // Tail arm: the budget fixes the normalization, so only the weighted
    // average of the two signed product means depends on v. The weight
    // ratio `exp(-2v / sum_sq)` keeps the average well defined even where
    // both overlap factors underflow.
    let r_of = |v: f64| {
        let w = (-2.0 * v / sum_sq).exp();
        (shifted_mean(1.0, v, d, dd) + w * shifted_mean(-1.0, v, d, dd)) / (1.0 + w)
    };
    let r_target = target.target_mean_y_b * prob_b / budget_t;
    let r_abs = r_target.abs();
    let mut hi = d;
    for _ in 0..200 {
        if r_of(hi) >= r_abs {
            break;
        }
        hi *= 2.0;
    }
    if r_of(hi) < r_abs {
        return Err(CalibrationError::NoBracket { arm: Arm::Tail });
    }
    // The mean responds to the average through budget_t / prob_b, which
    // converts the mean tolerance into one on the average itself.
    let ftol_r = (tol / 16.0) * prob_b / budget_t;
    let xtol = 1e-15 * (1.0 + hi);
    let v_mag = brent_root(|v| r_of(v) - r_abs, 0.0, hi, ftol_r, xtol)
        .ok_or(CalibrationError::NoBracket { arm: Arm::Tail })?;
    let v = if r_target < 0.0 { -v_mag } else { v_mag };
    let eps_t = 4.0 * budget_t
        / (base.q * kap * (gauss_overlap(v - 1.0, d, dd) + gauss_overlap(v + 1.0, d, dd)));
    if !(eps_t > 0.0 && eps_t <= 1.0) {
        return Err(CalibrationError::CouplingOutOfRange {
            arm: Arm::Tail,
            value: eps_t,
        });
    }

    let params = ModelParams {
        u,
        v,
        eps_c,
        eps_t,
        ..base
    };
    let (residual_x, residual_y) = exact_residuals(&params, target)?;
    if residual_x.abs() <= tol && residual_y.abs() <= tol {
        Ok(CalibrationResult {
            params,
            residual_x,
            residual_y,
            iterations: 1,
            converged: true,
            note: None,
        })
    } else {
        Err(CalibrationError::NonConvergence {
            iterations: 1,
            residual_x,
            residual_y,
        })
    }
}
