//! Pohozaev integral in cylindrical and ball form, the invariant with its
//! sign classification, and the drift identity under a radial potential.
//!
//! For radial fields the surface integral collapses to
//! `P(r, U) = sigma_{n-1} H(V, W)` after the cylindrical transform, exactly;
//! both routes are implemented and their agreement is a standing check. The
//! flat-metric drift identity reads, in cylindrical time,
//!
//! `P(r) - P(s) = -sigma_{n-1} int_{t_r}^{t_s} sum_ij B_ij(t) w_i v_j dt`.

use crate::error::{Error, Result};
use crate::model::{hamiltonian, CylState, Dimension, RadialField};
use crate::perturbed::{PerturbedRun, PotentialSpec};

/// Relative zero band for the sign classification: `|P| <= ZERO_BAND * sigma_{n-1}`.
pub const ZERO_BAND: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignClass {
    Negative,
    Zero,
    Positive,
}

/// Pohozaev series along a run with the tail estimate of the invariant.
#[derive(Debug, Clone)]
pub struct PohozaevReport {
    /// `(t, P)` samples at the run nodes
    pub values: Vec<(f64, f64)>,
    /// tail average over the trailing third
    pub limit_estimate: f64,
    /// max - min over the trailing third
    pub cauchy_spread: f64,
    pub sign_class: SignClass,
}

/// Cylindrical Pohozaev integral `P = sigma_{n-1} H(V, W)`.
pub fn p_cyl(n: Dimension, state: &CylState) -> f64 {
    n.sigma_sphere() * hamiltonian(n, state)
}

/// Ball-form Pohozaev surface integral for a radial field at radius `r`.
///
/// The integrand is constant on the sphere, so the integral is
/// `sigma_{n-1} r^{n-1}` times the pointwise value.
pub fn p_ball_radial(n: Dimension, r: f64, field: &RadialField) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::NonpositiveRadius(r));
    }
    let d = n.delta();
    let mut uu = 0.0; // <U, dU/dnu>
    let mut grad_sq = 0.0;
    let mut u_sq = 0.0;
    for i in 0..2 {
        uu += field.u[i] * field.du_dr[i];
        grad_sq += field.du_dr[i] * field.du_dr[i];
        u_sq += field.u[i] * field.u[i];
    }
    // |U|^{2n/(n-2)} via the squared norm
    let u_crit = u_sq * n.norm_pow(u_sq);
    let integrand = d * uu + 0.5 * r * grad_sq + 0.5 * r * d * d * u_crit;
    Ok(n.sigma_sphere() * r.powi(n.n() as i32 - 1) * integrand)
}

fn sign_class_of(p: f64, sigma: f64) -> SignClass {
    if p.abs() <= ZERO_BAND * sigma {
        SignClass::Zero
    } else if p < 0.0 {
        SignClass::Negative
    } else {
        SignClass::Positive
    }
}

/// Estimate the Pohozaev invariant of a run from the tail of its energy
/// series. Errors when the tail spread has not settled.
pub fn p_invariant(run: &PerturbedRun) -> Result<PohozaevReport> {
    let sigma = run.n.sigma_sphere();
    let values: Vec<(f64, f64)> = run.psi.iter().map(|(t, p)| (*t, sigma * p)).collect();
    let (t0, t1) = run.span();
    let third = (t1 - t0) / 3.0;
    let spread_on = |lo: f64, hi: f64| -> (f64, f64, usize) {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        let mut sum = 0.0;
        let mut count = 0;
        for (t, p) in &values {
            if *t >= lo && *t <= hi {
                min = min.min(*p);
                max = max.max(*p);
                sum += *p;
                count += 1;
            }
        }
        (max - min, sum / count.max(1) as f64, count)
    };
    let (mid_spread, _, _) = spread_on(t0 + third, t0 + 2.0 * third);
    let (tail_spread, tail_mean, tail_count) = spread_on(t0 + 2.0 * third, t1);
    if tail_count < 4 {
        return Err(Error::InsufficientTail {
            spread: f64::NAN,
            band: ZERO_BAND * sigma,
        });
    }
    let band = ZERO_BAND * sigma;
    if tail_spread > band && tail_spread >= 0.9 * mid_spread {
        return Err(Error::InsufficientTail {
            spread: tail_spread,
            band,
        });
    }
    Ok(PohozaevReport {
        values,
        limit_estimate: tail_mean,
        cauchy_spread: tail_spread,
        sign_class: sign_class_of(tail_mean, sigma),
    })
}

/// Two sides of the drift identity between radii `s <= r`, plus their
/// relative residual.
#[derive(Debug, Clone, Copy)]
pub struct DriftCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

/// Check the flat-metric Pohozaev drift identity on a run.
///
/// The left side is two ball-form surface evaluations; the right side is
/// adaptive quadrature of the volume term in cylindrical time, with the
/// sphere factor and the radial Jacobian folded in analytically.
pub fn p_drift(
    n: Dimension,
    run: &PerturbedRun,
    r: f64,
    s: f64,
    potential: &PotentialSpec,
) -> Result<DriftCheck> {
    if !(s > 0.0) {
        return Err(Error::NonpositiveRadius(s));
    }
    if s > r {
        return Err(Error::RangeViolation { s, r });
    }
    let t_r = -r.ln();
    let t_s = -s.ln();
    let (t0, t1) = run.span();
    if t_r < t0 - 1e-12 || t_s > t1 + 1e-12 {
        return Err(Error::RangeViolation { s, r });
    }
    if s == r {
        return Ok(DriftCheck {
            lhs: 0.0,
            rhs: 0.0,
            residual: 0.0,
        });
    }

    let state_at = |t: f64| -> Result<CylState> {
        let y = run.trajectory.eval(t)?;
        Ok(CylState::from_slice(t, &y))
    };
    let at_r = state_at(t_r)?;
    let at_s = state_at(t_s)?;
    let (rr, field_r) = crate::model::cyl_to_ball(n, &at_r);
    let (rs, field_s) = crate::model::cyl_to_ball(n, &at_s);
    let lhs = p_ball_radial(n, rr, &field_r)? - p_ball_radial(n, rs, &field_s)?;

    let sigma = n.sigma_sphere();
    let integrand = |t: f64| -> Result<f64> {
        let y = run.trajectory.eval(t)?;
        let b = potential.b(t);
        let mut acc = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                acc += b[i][j] * y[2 + i] * y[j];
            }
        }
        Ok(-sigma * acc)
    };
    let rhs = adaptive_simpson(&integrand, t_r, t_s, 1e-12, 28)?;
    let residual = (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1e-14);
    Ok(DriftCheck { lhs, rhs, residual })
}

/// Adaptive Simpson quadrature with absolute tolerance control.
fn adaptive_simpson<F>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let fa = f(a)?;
    let fb = f(b)?;
    let m = 0.5 * (a + b);
    let fm = f(m)?;
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_rec(f, a, b, fa, fm, fb, whole, tol, depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm)?;
    let frm = f(rm)?;
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    let half_tol = 0.5 * tol;
    Ok(simpson_rec(f, a, m, fa, flm, fm, left, half_tol, depth - 1)?
        + simpson_rec(f, m, b, fm, frm, fb, right, half_tol, depth - 1)?)
}
