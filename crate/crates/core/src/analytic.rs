//! Conditioned pointer statistics along three routes.
//!
//! The leading-order route keeps the published arrangement in which the
//! post-selection denominator is replaced by its silent floor `p`. The
//! exact route evaluates the closed forms obtained by integrating the
//! joint density against the Gaussian preparation profiles. The quadrature
//! route never touches those product identities: it integrates the same
//! densities numerically, window by window, so exact and quadrature are
//! independent of each other and their agreement checks both.

use serde::{Deserialize, Serialize};

use crate::model::{self, ModelParams};
use crate::quad;

/// Evaluation route.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    /// Leading-order forms with the bare floor `p` in the denominator.
    #[serde(rename = "paper-approx")]
    PaperApprox,
    /// Exact closed forms from the Gaussian product integrals.
    #[serde(rename = "exact")]
    ExactClosedForm,
    /// Direct adaptive quadrature of the joint density.
    #[serde(rename = "quadrature")]
    Quadrature,
}

/// Conditioned statistics from one evaluation route.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticReport {
    pub method: Method,
    /// Probability that a run is kept.
    pub prob_b: f64,
    /// Kept-ensemble mean of the cat pointer.
    pub mean_x_b: f64,
    /// Kept-ensemble mean of the tail pointer.
    pub mean_y_b: f64,
    /// Kept-ensemble mean of the product of both pointers.
    pub crossmoment_b: f64,
    /// Kept-minus-discarded cross moment.
    pub signed_crossmoment: f64,
    /// Requested absolute tolerance (quadrature route only).
    pub quadrature_tol: Option<f64>,
    /// Propagated bound on the absolute error of every field above
    /// (quadrature route only).
    pub quadrature_err_bound: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum AnalyticError {
    /// Nothing is ever kept, so conditioned moments do not exist.
    #[error("kept ensemble has zero probability; conditioned moments are undefined")]
    EmptyEnsemble,
    /// The leading-order forms divide by the silent floor.
    #[error("leading-order route requires a positive silent-keep floor p")]
    ZeroFloor,
    #[error(
        "quadrature did not reach the requested tolerance {requested:e} (achieved {achieved:e})"
    )]
    NonConvergence { requested: f64, achieved: f64 },
}

/// Width of the product of a preparation profile with a detector window:
/// `Delta delta / sqrt(Delta^2 + delta^2)`. Smaller than either width.
pub fn reduced_width(big_delta: f64, delta: f64) -> f64 {
    big_delta * delta / (big_delta * big_delta + delta * delta).sqrt()
}

/// Attenuation of a detector term when its window center sits `w` away
/// from the relevant preparation center: `exp(-w^2 / (2 (Delta^2 + delta^2)))`.
pub fn gauss_overlap(w: f64, big_delta: f64, delta: f64) -> f64 {
    model::gaussian_shape(w / (big_delta * big_delta + delta * delta).sqrt())
}

/// Mean of the normalized product of a preparation profile centered at `s`
/// with a detector window centered at `c`. A variance-weighted average, so
/// it always lies between `s` and `c`.
pub fn shifted_mean(s: f64, c: f64, big_delta: f64, delta: f64) -> f64 {
    let b2 = big_delta * big_delta;
    let d2 = delta * delta;
    (d2 * s + b2 * c) / (b2 + d2)
}

/// Joint density of the final pointer values and the kept flag,
/// marginalized over the hidden path and tail states. The left branch
/// carries the cat pointer shifted by one unit; the right branch splits
/// the tail pointer evenly between the two signed shifts.
pub fn joint_density(params: &ModelParams, x: f64, y: f64, kept: bool) -> f64 {
    let d = params.big_delta;
    let pc = model::noise_prob_cat(params, x);
    let pt = model::noise_prob_tail(params, y);
    // Keep probability given the occupied arm and the final pointer value:
    // heard, or silent and past the floor.
    let (w_left, w_right) = if kept {
        (params.p + params.q * pc, params.p + params.q * pt)
    } else {
        (params.q * (1.0 - pc), params.q * (1.0 - pt))
    };
    0.5 * model::pointer_pdf(x - 1.0, d) * model::pointer_pdf(y, d) * w_left
        + 0.25
            * model::pointer_pdf(x, d)
            * (model::pointer_pdf(y - 1.0, d) + model::pointer_pdf(y + 1.0, d))
            * w_right
}

/// Kept probability in the published leading-order arrangement: the silent
/// floor plus one attenuated overlap term per detector. For this quantity
/// the leading-order and exact routes coincide identically.
pub fn postselect_prob_approx(params: &ModelParams) -> f64 {
    let kap = reduced_width(params.big_delta, params.delta) / params.big_delta;
    let gu = gauss_overlap(params.u - 1.0, params.big_delta, params.delta);
    let gv_up = gauss_overlap(params.v - 1.0, params.big_delta, params.delta);
    let gv_down = gauss_overlap(params.v + 1.0, params.big_delta, params.delta);
    params.p + 0.25 * params.q * kap * (2.0 * params.eps_c * gu + params.eps_t * (gv_up + gv_down))
}

/// Leading-order kept-ensemble mean of the cat pointer.
pub fn mean_x_postselected_approx(params: &ModelParams) -> f64 {
    let kap = reduced_width(params.big_delta, params.delta) / params.big_delta;
    let gu = gauss_overlap(params.u - 1.0, params.big_delta, params.delta);
    let mx = shifted_mean(1.0, params.u, params.big_delta, params.delta);
    0.5 + params.q / (2.0 * params.p) * kap * params.eps_c * mx * gu
}

/// Leading-order kept-ensemble mean of the tail pointer.
pub fn mean_y_postselected_approx(params: &ModelParams) -> f64 {
    let kap = reduced_width(params.big_delta, params.delta) / params.big_delta;
    let gv_up = gauss_overlap(params.v - 1.0, params.big_delta, params.delta);
    let gv_down = gauss_overlap(params.v + 1.0, params.big_delta, params.delta);
    let my_up = shifted_mean(1.0, params.v, params.big_delta, params.delta);
    let my_down = shifted_mean(-1.0, params.v, params.big_delta, params.delta);
    params.q / (4.0 * params.p) * kap * params.eps_t * (my_up * gv_up + my_down * gv_down)
}

/// Leading-order report. The cross moments are identically zero at this
/// order, as they are exactly.
pub fn analytic_report_approx(params: &ModelParams) -> Result<AnalyticReport, AnalyticError> {
    if params.p <= 0.0 {
        return Err(AnalyticError::ZeroFloor);
    }
    Ok(AnalyticReport {
        method: Method::PaperApprox,
        prob_b: postselect_prob_approx(params),
        mean_x_b: mean_x_postselected_approx(params),
        mean_y_b: mean_y_postselected_approx(params),
        crossmoment_b: 0.0,
        signed_crossmoment: 0.0,
        quadrature_tol: None,
        quadrature_err_bound: None,
    })
}

/// Exact closed forms, assembled branch by branch.
pub fn analytic_report_exact(params: &ModelParams) -> Result<AnalyticReport, AnalyticError> {
    let (d, dd) = (params.big_delta, params.delta);
    let kap = reduced_width(d, dd) / d;
    let gu = gauss_overlap(params.u - 1.0, d, dd);
    let gv_up = gauss_overlap(params.v - 1.0, d, dd);
    let gv_down = gauss_overlap(params.v + 1.0, d, dd);

    // Keep weight integrated against each branch density.
    let left_mass = params.p + params.q * params.eps_c * kap * gu;
    let right_mass = 2.0 * params.p + params.q * params.eps_t * kap * (gv_up + gv_down);
    let prob_b = 0.5 * left_mass + 0.25 * right_mass;
    if prob_b <= 0.0 {
        return Err(AnalyticError::EmptyEnsemble);
    }

    // First moments: the plain preparation contributes its center, the
    // detector term pulls the mass toward the window at the product mean.
    let mx = shifted_mean(1.0, params.u, d, dd);
    let my_up = shifted_mean(1.0, params.v, d, dd);
    let my_down = shifted_mean(-1.0, params.v, d, dd);
    let num_x = 0.5 * (params.p + params.q * params.eps_c * kap * gu * mx);
    let num_y = 0.25 * params.q * params.eps_t * kap * (gv_up * my_up + gv_down * my_down);

    Ok(AnalyticReport {
        method: Method::ExactClosedForm,
        prob_b,
        mean_x_b: num_x / prob_b,
        mean_y_b: num_y / prob_b,
        // Every term of the cross moment factorizes through a centered
        // first moment, so it vanishes identically in both ensembles.
        crossmoment_b: 0.0,
        signed_crossmoment: 0.0,
        quadrature_tol: None,
        quadrature_err_bound: None,
    })
}

/// A numerically integrated value carrying its absolute error bound, with
/// first-order propagation through sums, products, and quotients.
#[derive(Debug, Clone, Copy)]
struct Meas {
    v: f64,
    e: f64,
}

impl Meas {
    const ZERO: Meas = Meas { v: 0.0, e: 0.0 };

    fn exactly(v: f64) -> Meas {
        Meas { v, e: 0.0 }
    }

    fn add(self, o: Meas) -> Meas {
        Meas {
            v: self.v + o.v,
            e: self.e + o.e,
        }
    }

    fn sub(self, o: Meas) -> Meas {
        Meas {
            v: self.v - o.v,
            e: self.e + o.e,
        }
    }

    fn mul(self, o: Meas) -> Meas {
        Meas {
            v: self.v * o.v,
            e: self.v.abs() * o.e + o.v.abs() * self.e + self.e * o.e,
        }
    }

    fn scale(self, c: f64) -> Meas {
        Meas {
            v: c * self.v,
            e: c.abs() * self.e,
        }
    }

    /// None when the denominator cannot be certified away from zero.
    fn div(self, o: Meas) -> Option<Meas> {
        let certain = o.v.abs() - o.e;
        if certain <= 0.0 || certain.is_nan() {
            return None;
        }
        let r = self.v / o.v;
        Some(Meas {
            v: r,
            e: (self.e + r.abs() * o.e) / certain,
        })
    }
}

/// Moment of order `k` of the preparation profile shifted to `s`,
/// integrated over its own 12-sigma window.
fn prior_moment(params: &ModelParams, s: f64, k: i32, tol: f64) -> Meas {
    let d = params.big_delta;
    let out = quad::integrate_window(|z| z.powi(k) * model::pointer_pdf(z - s, d), s, d, tol);
    Meas {
        v: out.value,
        e: out.err_bound,
    }
}

/// Moment of order `k` of the shifted preparation profile times the unit
/// detector bell at `center`. All the mass sits near the product mean
/// within the reduced width, which fixes the integration window.
fn window_moment(params: &ModelParams, s: f64, center: f64, k: i32, tol: f64) -> Meas {
    let (d, dd) = (params.big_delta, params.delta);
    let m = shifted_mean(s, center, d, dd);
    let sr = reduced_width(d, dd);
    let out = quad::integrate_window(
        |z| z.powi(k) * model::pointer_pdf(z - s, d) * model::gaussian_shape((z - center) / dd),
        m,
        sr,
        tol,
    );
    Meas {
        v: out.value,
        e: out.err_bound,
    }
}

enum QuadFailure {
    /// A quotient's denominator could not be certified away from zero at
    /// this inner tolerance; a tighter pass may still succeed.
    Uncertain,
    Empty,
}

struct QuadFields {
    prob_b: Meas,
    mean_x: Meas,
    mean_y: Meas,
    xy_kept: Meas,
    signed: Meas,
}

fn quadrature_fields(params: &ModelParams, inner_tol: f64) -> Result<QuadFields, QuadFailure> {
    let p = Meas::exactly(params.p);
    let couple_c = params.q * params.eps_c;
    let couple_t = params.q * params.eps_t;

    // Detector terms with a zero coupling contribute nothing; skip their
    // integrals entirely rather than integrating a zero function.
    let win = |s: f64, center: f64, k: i32, couple: f64| -> Meas {
        if couple == 0.0 {
            return Meas::ZERO;
        }
        window_moment(params, s, center, k, inner_tol).scale(couple)
    };

    let prior_up0 = prior_moment(params, 1.0, 0, inner_tol);
    let prior_up1 = prior_moment(params, 1.0, 1, inner_tol);
    let prior_down0 = prior_moment(params, -1.0, 0, inner_tol);
    let prior_down1 = prior_moment(params, -1.0, 1, inner_tol);
    let center0 = prior_moment(params, 0.0, 0, inner_tol);
    let center1 = prior_moment(params, 0.0, 1, inner_tol);

    // Keep weight integrated along each branch, order zero and one.
    let left0 = p.mul(prior_up0).add(win(1.0, params.u, 0, couple_c));
    let left1 = p.mul(prior_up1).add(win(1.0, params.u, 1, couple_c));
    let right0 = p
        .mul(prior_up0.add(prior_down0))
        .add(win(1.0, params.v, 0, couple_t).add(win(-1.0, params.v, 0, couple_t)));
    let right1 = p
        .mul(prior_up1.add(prior_down1))
        .add(win(1.0, params.v, 1, couple_t).add(win(-1.0, params.v, 1, couple_t)));

    // The two-branch mixture: one half left, one quarter per tail sign.
    let prob_b = left0
        .mul(center0)
        .scale(0.5)
        .add(center0.mul(right0).scale(0.25));
    let num_x = left1
        .mul(center0)
        .scale(0.5)
        .add(center1.mul(right0).scale(0.25));
    let num_y = left0
        .mul(center1)
        .scale(0.5)
        .add(center0.mul(right1).scale(0.25));
    let num_xy = left1
        .mul(center1)
        .scale(0.5)
        .add(center1.mul(right1).scale(0.25));

    // Unconditioned marginal for the discarded-class complement.
    let total = prior_up0
        .mul(center0)
        .scale(0.5)
        .add(center0.mul(prior_up0.add(prior_down0)).scale(0.25));
    let total_xy = prior_up1
        .mul(center1)
        .scale(0.5)
        .add(center1.mul(prior_up1.add(prior_down1)).scale(0.25));

    if prob_b.v <= 0.0 {
        return Err(QuadFailure::Empty);
    }
    let ratio = |num: Meas, den: Meas| num.div(den).ok_or(QuadFailure::Uncertain);
    let mean_x = ratio(num_x, prob_b)?;
    let mean_y = ratio(num_y, prob_b)?;
    let xy_kept = ratio(num_xy, prob_b)?;

    // Discarded-class cross moment; when nothing is discarded it is taken
    // as zero, matching the closed-form convention.
    let lost = total.sub(prob_b);
    let xy_lost = if lost.v <= 0.0 {
        Meas::ZERO
    } else {
        ratio(total_xy.sub(num_xy), lost)?
    };
    let signed = xy_kept.sub(xy_lost);

    Ok(QuadFields {
        prob_b,
        mean_x,
        mean_y,
        xy_kept,
        signed,
    })
}

/// Direct quadrature of the joint density to absolute tolerance `tol` on
/// every reported quantity. The inner per-integral budget starts well
/// below `tol` and tightens further if first-order error propagation
/// cannot certify the requested bound.
pub fn analytic_report_quadrature(
    params: &ModelParams,
    tol: f64,
) -> Result<AnalyticReport, AnalyticError> {
    assert!(tol > 0.0 && tol.is_finite(), "tolerance must be positive");
    let mut best = f64::INFINITY;
    for attempt in 0..3 {
        let inner_tol = tol / 256.0 / 16f64.powi(attempt);
        match quadrature_fields(params, inner_tol) {
            Ok(fields) => {
                let bound = fields
                    .prob_b
                    .e
                    .max(fields.mean_x.e)
                    .max(fields.mean_y.e)
                    .max(fields.xy_kept.e)
                    .max(fields.signed.e);
                if bound <= tol {
                    return Ok(AnalyticReport {
                        method: Method::Quadrature,
                        prob_b: fields.prob_b.v,
                        mean_x_b: fields.mean_x.v,
                        mean_y_b: fields.mean_y.v,
                        crossmoment_b: fields.xy_kept.v,
                        signed_crossmoment: fields.signed.v,
                        quadrature_tol: Some(tol),
                        quadrature_err_bound: Some(bound),
                    });
                }
                best = best.min(bound);
            }
            Err(QuadFailure::Empty) => return Err(AnalyticError::EmptyEnsemble),
            // The denominator could not be certified; try a tighter pass.
            Err(QuadFailure::Uncertain) => {}
        }
    }
    Err(AnalyticError::NonConvergence {
        requested: tol,
        achieved: best,
    })
}
