//! Mode decomposition of the linearization about a ray solution, the four
//! explicit radial Jacobi fields, and Floquet growth classification.
//!
//! In the orthonormal basis `{Lambda, Lambda_bar}` the linearized system
//! splits exactly into two scalar Hill equations `psi'' + q(t) psi = 0` per
//! sphere eigenvalue `lambda_j = j(j+n-2)`:
//!
//! * tangential: `q = (n(n+2)/4) v^{4/(n-2)} - (n-2)^2/4 - lambda_j`
//! * normal:     `q = (n(n-2)/4) v^{4/(n-2)} - (n-2)^2/4 - lambda_j`
//!
//! The `j = 0` kernel is spanned by the translation field `v' Lambda`, the
//! necksize field `(dv/deps) Lambda`, the rotation field `v Lambda_bar` and
//! a reduction-of-order companion `v int v^{-2} Lambda_bar`; the first and
//! third are periodic, the other two grow linearly.

use crate::error::{Error, Result};
use crate::fowler::{fowler_rhs_flat, profile_from_necksize, FowlerProfile};
use crate::integrator::{integrate, monodromy, IntegratorConfig, Monodromy, Trajectory};
use crate::model::Dimension;

/// A multiplier counts as lying on the unit circle when its modulus is
/// within this band of 1.
pub const UNIT_MODULUS_BAND: f64 = 1e-4;
/// Trace band around +/-2 inside which defectiveness is tested.
pub const TRACE_BAND: f64 = 1e-6;
/// A unit-trace monodromy is defective when it differs from the identity
/// by more than this in any entry.
pub const DEFECT_BAND: f64 = 1e-6;

/// Sphere eigenvalue with its multiplicity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeIndex {
    pub j: u32,
    pub lambda_k: f64,
    pub multiplicity: u64,
}

impl ModeIndex {
    pub fn new(n: Dimension, j: u32) -> Self {
        let nf = n.n() as f64;
        ModeIndex {
            j,
            lambda_k: j as f64 * (j as f64 + nf - 2.0),
            multiplicity: harmonic_multiplicity(n.n(), j),
        }
    }
}

fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Dimension of the space of degree-`j` spherical harmonics on the
/// (n-1)-sphere.
fn harmonic_multiplicity(n: u32, j: u32) -> u64 {
    let (n, j) = (n as u64, j as u64);
    match j {
        0 => 1,
        1 => n,
        _ => binomial(n + j - 1, n - 1) - binomial(n + j - 3, n - 1),
    }
}

/// Eigenvalues `lambda_j = j(j+n-2)` with multiplicities for `j <= jmax`.
pub fn eigenvalue_table(n: Dimension, jmax: u32) -> Vec<ModeIndex> {
    (0..=jmax).map(|j| ModeIndex::new(n, j)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    Tangential,
    Normal,
}

/// The two decoupled Hill coefficients of one mode.
pub struct ModeOperators<'a> {
    profile: &'a FowlerProfile,
    pub mode: ModeIndex,
}

impl<'a> ModeOperators<'a> {
    pub fn q_tangential(&self, t: f64) -> f64 {
        let n = self.profile.n;
        let nf = n.n() as f64;
        let v = self.profile.v(t);
        nf * (nf + 2.0) / 4.0 * n.norm_pow(v * v) - n.delta() * n.delta() - self.mode.lambda_k
    }

    pub fn q_normal(&self, t: f64) -> f64 {
        let n = self.profile.n;
        let v = self.profile.v(t);
        n.coupling() * n.norm_pow(v * v) - n.delta() * n.delta() - self.mode.lambda_k
    }

    pub fn q(&self, component: Component, t: f64) -> f64 {
        match component {
            Component::Tangential => self.q_tangential(t),
            Component::Normal => self.q_normal(t),
        }
    }
}

/// Decoupled coefficient functions for one mode of a profile.
pub fn mode_operators(profile: &FowlerProfile, mode: ModeIndex) -> ModeOperators<'_> {
    ModeOperators { profile, mode }
}

/// Zero-order terms of the full coupled linearization applied to
/// `phi = a Lambda + b Lambda_bar`, minus the decoupled evaluation.
/// The split is exact, so this is roundoff only; the second-derivative
/// terms cancel identically and are omitted.
pub fn decoupling_residual(
    n: Dimension,
    lambda: &crate::model::Direction,
    mode: ModeIndex,
    v: f64,
    a: f64,
    b: f64,
) -> f64 {
    let nf = n.n() as f64;
    let d2 = n.delta() * n.delta();
    let pow = n.norm_pow(v * v);
    let l = lambda.lambda();
    let lb = lambda.lambda_bar();
    let mut worst: f64 = 0.0;
    for i in 0..2 {
        let phi_i = a * l[i] + b * lb[i];
        // coupled form: the <Lambda, phi> coupling plus the diagonal terms
        let coupled = -(d2 + mode.lambda_k) * phi_i + nf * l[i] * a * pow + n.coupling() * pow * phi_i;
        let q_tan = nf * (nf + 2.0) / 4.0 * pow - d2 - mode.lambda_k;
        let q_nor = n.coupling() * pow - d2 - mode.lambda_k;
        let decoupled = q_tan * a * l[i] + q_nor * b * lb[i];
        worst = worst.max((coupled - decoupled).abs());
    }
    worst
}

/// Growth of a single Jacobi field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrowthClass {
    Periodic,
    Linear,
    ExpGrowing,
    ExpDecaying,
}

/// Growth class of a whole mode block, decided from multipliers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeClass {
    Periodic,
    Linear,
    ExponentialDichotomy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JacobiFieldKind {
    /// translation field `v' Lambda`
    Phi1,
    /// necksize field `(dv/deps) Lambda`
    Phi2,
    /// rotation field `v Lambda_bar`
    Phi3,
    /// reduction-of-order field `v (int_0^t v^-2) Lambda_bar`
    Phi4,
    /// a solution of one decoupled mode ODE from given Cauchy data
    ModeSolution,
}

/// One Jacobi field as samples of `(psi, psi')` with its growth class and
/// a normalized residual under the defining linear ODE.
#[derive(Debug, Clone)]
pub struct JacobiField {
    pub kind: JacobiFieldKind,
    pub mode: ModeIndex,
    pub component: Component,
    pub samples: Trajectory,
    pub growth_class: GrowthClass,
    /// sup of `|psi'' + q psi| / (1 + |psi|)` on a stencil grid, except for
    /// the necksize field where it is the sup deviation from the mode-ODE
    /// solution with the same Cauchy data, normalized the same way
    pub residual: f64,
}

/// Integrate one decoupled mode ODE from Cauchy data `(psi, psi')(0)`.
pub fn mode_solution(
    profile: &FowlerProfile,
    mode: ModeIndex,
    component: Component,
    ic: [f64; 2],
    t_end: f64,
    cfg: &IntegratorConfig,
) -> Result<JacobiField> {
    let ops = mode_operators(profile, mode);
    let rhs = |t: f64, y: &[f64], dy: &mut [f64]| {
        dy[0] = y[1];
        dy[1] = -ops.q(component, t) * y[0];
    };
    let samples = integrate(rhs, &ic, (0.0, t_end), cfg)?;
    let residual = stencil_residual(&samples, |t| ops.q(component, t), t_end);
    Ok(JacobiField {
        kind: JacobiFieldKind::ModeSolution,
        mode,
        component,
        samples,
        growth_class: GrowthClass::Periodic, // placeholder; callers classify
        residual,
    })
}

const STENCIL_H: f64 = 0.05;

/// Normalized 5-point finite-difference residual of `psi'' + q psi = 0`
/// over `[lo, lo + window]`, sampled through the dense output.
fn stencil_residual<Q>(field: &Trajectory, q: Q, window: f64) -> f64
where
    Q: Fn(f64) -> f64,
{
    let (lo, hi) = field.span();
    let h = STENCIL_H;
    let t_end = hi.min(lo + window);
    let mut worst: f64 = 0.0;
    let mut t = lo + 2.0 * h;
    while t <= t_end - 2.0 * h {
        let m2 = field.eval_component(t - 2.0 * h, 0).unwrap();
        let m1 = field.eval_component(t - h, 0).unwrap();
        let z = field.eval_component(t, 0).unwrap();
        let p1 = field.eval_component(t + h, 0).unwrap();
        let p2 = field.eval_component(t + 2.0 * h, 0).unwrap();
        let dd = (-m2 + 16.0 * m1 - 30.0 * z + 16.0 * p1 - p2) / (12.0 * h * h);
        let r = (dd + q(t) * z).abs() / (1.0 + z.abs());
        worst = worst.max(r);
        t += h;
    }
    worst
}

/// Same residual on a uniform sample grid, differencing the raw node
/// values directly so no interpolation error enters the stencil.
fn grid_stencil_residual<Q>(ts: &[f64], psi: &[f64], q: Q, window: f64) -> f64
where
    Q: Fn(f64) -> f64,
{
    let dt = ts[1] - ts[0];
    // stride the stencil to a spacing near 0.03 for a good truncation/noise
    // balance
    let stride = (0.03 / dt).round().max(1.0) as usize;
    let h = stride as f64 * dt;
    let mut worst: f64 = 0.0;
    let mut i = 2 * stride;
    while i + 2 * stride < psi.len() && ts[i] <= ts[0] + window {
        let dd = (-psi[i - 2 * stride] + 16.0 * psi[i - stride] - 30.0 * psi[i]
            + 16.0 * psi[i + stride]
            - psi[i + 2 * stride])
            / (12.0 * h * h);
        let r = (dd + q(ts[i]) * psi[i]).abs() / (1.0 + psi[i].abs());
        worst = worst.max(r);
        i += stride;
    }
    worst
}

/// The four explicit `j = 0` Jacobi fields of a profile.
///
/// `family_step` is the centered-differencing step in the necksize for the
/// second field; convergence under halving is checked and failure is an
/// error. Fields are sampled over ten periods.
pub fn explicit_fields(
    profile: &FowlerProfile,
    family_step: f64,
    cfg: &IntegratorConfig,
) -> Result<[JacobiField; 4]> {
    let n = profile.n;
    let mode0 = ModeIndex::new(n, 0);
    let period = profile.period;
    let t_end = 10.0 * period;
    let n_samples = 4000usize;
    let dt = t_end / n_samples as f64;
    let ops = mode_operators(profile, mode0);

    // phi1 = v' on the tangential line
    let mut ts = Vec::with_capacity(n_samples + 1);
    let mut psi = Vec::with_capacity(n_samples + 1);
    let mut ys = Vec::with_capacity(n_samples + 1);
    let mut fs = Vec::with_capacity(n_samples + 1);
    for i in 0..=n_samples {
        let t = i as f64 * dt;
        let vw = profile.eval_periodic(t);
        let mut dy = [0.0; 2];
        fowler_rhs_flat(n, &vw, &mut dy);
        // psi = w, psi' = w'; psi'' = -q_tan psi holds along the orbit
        ts.push(t);
        psi.push(vw[1]);
        ys.push(vec![vw[1], dy[1]]);
        fs.push(vec![dy[1], -ops.q_tangential(t) * vw[1]]);
    }
    let phi1 = JacobiField {
        kind: JacobiFieldKind::Phi1,
        mode: mode0,
        component: Component::Tangential,
        residual: grid_stencil_residual(&ts, &psi, |t| ops.q_tangential(t), period),
        samples: Trajectory::from_samples(ts, ys, fs)?,
        growth_class: GrowthClass::Periodic,
    };

    // phi2 = dv/deps by centered differencing of neighboring profiles,
    // phase-aligned because every profile starts at its minimum
    let phi2 = necksize_field(profile, family_step, t_end, n_samples, cfg)?;

    // phi3 = v on the normal line
    let mut ts = Vec::with_capacity(n_samples + 1);
    let mut psi = Vec::with_capacity(n_samples + 1);
    let mut ys = Vec::with_capacity(n_samples + 1);
    let mut fs = Vec::with_capacity(n_samples + 1);
    for i in 0..=n_samples {
        let t = i as f64 * dt;
        let vw = profile.eval_periodic(t);
        ts.push(t);
        psi.push(vw[0]);
        ys.push(vec![vw[0], vw[1]]);
        fs.push(vec![vw[1], -ops.q_normal(t) * vw[0]]);
    }
    let phi3 = JacobiField {
        kind: JacobiFieldKind::Phi3,
        mode: mode0,
        component: Component::Normal,
        residual: grid_stencil_residual(&ts, &psi, |t| ops.q_normal(t), period),
        samples: Trajectory::from_samples(ts, ys, fs)?,
        growth_class: GrowthClass::Periodic,
    };

    // phi4 = v(t) * int_0^t v^-2 by reduction of order; the quadrature runs
    // through the integrator so the antiderivative has dense output too.
    // The integrand has no state dependence, so error control alone would
    // let steps grow until dense-output error dominates; cap them.
    let quad_cfg = IntegratorConfig {
        max_step: 0.05,
        ..*cfg
    };
    let quad = integrate(
        |t: f64, _y: &[f64], dy: &mut [f64]| {
            let v = profile.v(t);
            dy[0] = 1.0 / (v * v);
        },
        &[0.0],
        (0.0, t_end),
        &quad_cfg,
    )?;
    let mut ts = Vec::with_capacity(n_samples + 1);
    let mut psi = Vec::with_capacity(n_samples + 1);
    let mut ys = Vec::with_capacity(n_samples + 1);
    let mut fs = Vec::with_capacity(n_samples + 1);
    for i in 0..=n_samples {
        let t = i as f64 * dt;
        let vw = profile.eval_periodic(t);
        let integral = quad.eval_component(t, 0)?;
        let value = vw[0] * integral;
        let dvalue = vw[1] * integral + 1.0 / vw[0];
        ts.push(t);
        psi.push(value);
        ys.push(vec![value, dvalue]);
        fs.push(vec![dvalue, -ops.q_normal(t) * value]);
    }
    let phi4 = JacobiField {
        kind: JacobiFieldKind::Phi4,
        mode: mode0,
        component: Component::Normal,
        residual: grid_stencil_residual(&ts, &psi, |t| ops.q_normal(t), period),
        samples: Trajectory::from_samples(ts, ys, fs)?,
        growth_class: GrowthClass::Linear,
    };

    Ok([phi1, phi2, phi3, phi4])
}

fn necksize_field(
    profile: &FowlerProfile,
    family_step: f64,
    t_end: f64,
    n_samples: usize,
    cfg: &IntegratorConfig,
) -> Result<JacobiField> {
    if !(family_step > 0.0) {
        return Err(Error::BadParameter("family_step must be positive".into()));
    }
    let n = profile.n;
    let eps = profile.eps;
    // tighter tolerances than the caller's: the quotient divides the
    // trajectory error by the small step
    let fd_cfg = IntegratorConfig::new(cfg.rel_tol.min(1e-12), cfg.abs_tol.min(1e-14))?;
    let diff = |h: f64| -> Result<Vec<[f64; 2]>> {
        let plus = profile_from_necksize(n, eps + h, &fd_cfg)?;
        let minus = profile_from_necksize(n, eps - h, &fd_cfg)?;
        let dt = t_end / n_samples as f64;
        let mut out = Vec::with_capacity(n_samples + 1);
        for i in 0..=n_samples {
            let t = i as f64 * dt;
            let p = plus.eval_periodic(t);
            let m = minus.eval_periodic(t);
            out.push([(p[0] - m[0]) / (2.0 * h), (p[1] - m[1]) / (2.0 * h)]);
        }
        Ok(out)
    };
    let fd = diff(family_step)?;
    let fd_half = diff(family_step / 2.0)?;
    let mut dmax: f64 = 0.0;
    let mut scale: f64 = 1.0;
    for (a, b) in fd.iter().zip(&fd_half) {
        dmax = dmax.max((a[0] - b[0]).abs());
        scale = scale.max(b[0].abs());
    }
    if dmax / scale > 1e-3 {
        return Err(Error::DifferencingDiverged(dmax / scale));
    }

    let mode0 = ModeIndex::new(n, 0);
    let ops = mode_operators(profile, mode0);
    let dt = t_end / n_samples as f64;
    let ts: Vec<f64> = (0..=n_samples).map(|i| i as f64 * dt).collect();
    let ys: Vec<Vec<f64>> = fd.iter().map(|p| vec![p[0], p[1]]).collect();
    let fs: Vec<Vec<f64>> = ts
        .iter()
        .zip(&fd)
        .map(|(t, p)| vec![p[1], -ops.q_tangential(*t) * p[0]])
        .collect();
    let samples = Trajectory::from_samples(ts, ys, fs)?;

    // residual against the mode-ODE route: dv/deps has exact Cauchy data
    // (1, 0) because v(0) = eps and v'(0) = 0 for the whole family
    let reference = mode_solution(
        profile,
        mode0,
        Component::Tangential,
        [1.0, 0.0],
        2.0 * profile.period,
        &fd_cfg,
    )?;
    let mut residual: f64 = 0.0;
    let mut t = 0.0;
    while t <= 2.0 * profile.period {
        let a = samples.eval_component(t, 0)?;
        let b = reference.samples.eval_component(t, 0)?;
        residual = residual.max((a - b).abs() / (1.0 + b.abs()));
        t += profile.period / 50.0;
    }

    Ok(JacobiField {
        kind: JacobiFieldKind::Phi2,
        mode: mode0,
        component: Component::Tangential,
        samples,
        growth_class: GrowthClass::Linear,
        residual,
    })
}

/// Monodromy of one component ODE of one mode, with its growth class.
#[derive(Debug, Clone)]
pub struct MonodromyReport {
    pub mode: ModeIndex,
    pub component: Component,
    pub monodromy: Monodromy,
    pub classification: ModeClass,
}

/// Decide the growth class of a mode block from its monodromy.
///
/// Unit-circle pair with trace at +/-2 and a non-scalar matrix is the
/// defective (linear growth) case; a clean unit-circle pair is periodic
/// in the bounded, quasi-periodic sense; anything off the circle is a
/// hyperbolic pair `(mu, 1/mu)`.
pub fn classify_monodromy(m: &Monodromy) -> ModeClass {
    let on_circle = m
        .multipliers
        .iter()
        .all(|mu| (mu.norm() - 1.0).abs() <= UNIT_MODULUS_BAND);
    if !on_circle {
        return ModeClass::ExponentialDichotomy;
    }
    let tr = m.trace();
    for sign in [1.0f64, -1.0] {
        if (tr - 2.0 * sign).abs() <= TRACE_BAND {
            let dev = (m.matrix[0][0] - sign)
                .abs()
                .max(m.matrix[0][1].abs())
                .max(m.matrix[1][0].abs())
                .max((m.matrix[1][1] - sign).abs());
            return if dev > DEFECT_BAND {
                ModeClass::Linear
            } else {
                ModeClass::Periodic
            };
        }
    }
    ModeClass::Periodic
}

/// Monodromy and growth classification of both component ODEs of a mode.
pub fn floquet_classify(
    profile: &FowlerProfile,
    mode: ModeIndex,
    cfg: &IntegratorConfig,
) -> Result<(MonodromyReport, MonodromyReport)> {
    let ops = mode_operators(profile, mode);
    let make = |component: Component| -> Result<MonodromyReport> {
        let m = monodromy(|t| ops.q(component, t), profile.period, cfg)?;
        let classification = classify_monodromy(&m);
        Ok(MonodromyReport {
            mode,
            component,
            monodromy: m,
            classification,
        })
    };
    Ok((make(Component::Tangential)?, make(Component::Normal)?))
}
