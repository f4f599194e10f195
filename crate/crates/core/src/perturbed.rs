//! The radially reduced inhomogeneous system with an affine radial
//! potential, hypothesis validation, run diagnostics, and the windowed
//! asymptotic fit of the Fowler-type model.
//!
//! In cylindrical variables the potential enters through
//! `B_ij(t) = e^{-2t} A_ij(e^{-t})`, so every perturbation decays at rate 2
//! and trajectories approach the autonomous limit system as `t` grows.

use crate::error::{Error, Result};
use crate::fowler::{necksize_from_energy, profile_from_necksize};
use crate::integrator::{find_events, integrate_guarded, EventDirection, IntegratorConfig, Trajectory};
use crate::model::{hamiltonian, limit_rhs_flat, CylState, Dimension, Direction};
use crate::pohozaev::{p_invariant, SignClass};

/// Trajectories are truncated once a component magnitude exceeds this;
/// nonglobal solutions are informative, not an error.
pub const V_MAX: f64 = 10.0;

/// Runs shorter than this have no usable tail and classify as undecided.
pub const MIN_CLASSIFIABLE_SPAN: f64 = 12.0;

/// Tail infimum of `|V|` above this counts as bounded away from zero.
pub const TAIL_POSITIVE_FLOOR: f64 = 1e-6;

/// Symmetric affine radial potential `A_ij(r) = c_ij + d_ij r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialSpec {
    pub c: [[f64; 2]; 2],
    pub d: [[f64; 2]; 2],
}

impl PotentialSpec {
    pub fn zero() -> Self {
        PotentialSpec {
            c: [[0.0; 2]; 2],
            d: [[0.0; 2]; 2],
        }
    }

    /// `a * Id`, constant in the radius.
    pub fn scalar(a: f64) -> Self {
        PotentialSpec {
            c: [[a, 0.0], [0.0, a]],
            d: [[0.0; 2]; 2],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().flatten().all(|&x| x == 0.0) && self.d.iter().flatten().all(|&x| x == 0.0)
    }

    /// Pointwise matrix `A(r)`.
    pub fn a(&self, r: f64) -> [[f64; 2]; 2] {
        let mut out = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = self.c[i][j] + self.d[i][j] * r;
            }
        }
        out
    }

    /// Cylindrical coefficient `B(t) = e^{-2t} A(e^{-t})`.
    pub fn b(&self, t: f64) -> [[f64; 2]; 2] {
        let r = (-t).exp();
        let mut out = self.a(r);
        let decay = r * r;
        for row in &mut out {
            for x in row {
                *x *= decay;
            }
        }
        out
    }

    /// Sup of `|A_ij|` over `r` in [0, 1].
    pub fn sup_norm(&self) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                m = m.max(self.c[i][j].abs().max((self.c[i][j] + self.d[i][j]).abs()));
            }
        }
        m
    }
}

/// A single failed hypothesis with its machine-readable code.
#[derive(Debug, Clone, PartialEq)]
pub enum PotentialViolation {
    Asymmetric { what: String },
    CooperativityH1 { what: String },
    IdentityAtOriginH2 { what: String },
}

impl PotentialViolation {
    pub fn code(&self) -> &'static str {
        match self {
            PotentialViolation::Asymmetric { .. } => "SYMMETRY_VIOLATION",
            PotentialViolation::CooperativityH1 { .. } => "H1_VIOLATION",
            PotentialViolation::IdentityAtOriginH2 { .. } => "H2_VIOLATION",
        }
    }

    pub fn message(&self) -> &str {
        match self {
            PotentialViolation::Asymmetric { what }
            | PotentialViolation::CooperativityH1 { what }
            | PotentialViolation::IdentityAtOriginH2 { what } => what,
        }
    }
}

/// Report-style validation outcome; an empty violation list passes.
#[derive(Debug, Clone, Default)]
pub struct PotentialValidation {
    pub violations: Vec<PotentialViolation>,
}

impl PotentialValidation {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Check symmetry, cooperativity of `-A` (off-diagonal nonpositive on
/// [0, 1]) and, in dimension five, that `A(0)` is a multiple of the
/// identity.
pub fn validate_potential(n: Dimension, spec: &PotentialSpec) -> PotentialValidation {
    let mut violations = Vec::new();
    if spec.c[0][1] != spec.c[1][0] || spec.d[0][1] != spec.d[1][0] {
        violations.push(PotentialViolation::Asymmetric {
            what: format!(
                "A12 = {} + {} r differs from A21 = {} + {} r",
                spec.c[0][1], spec.d[0][1], spec.c[1][0], spec.d[1][0]
            ),
        });
    }
    // affine in r: nonpositivity on [0, 1] is nonpositivity at both ends
    for (c12, d12, name) in [
        (spec.c[0][1], spec.d[0][1], "A12"),
        (spec.c[1][0], spec.d[1][0], "A21"),
    ] {
        if c12 > 0.0 || c12 + d12 > 0.0 {
            violations.push(PotentialViolation::CooperativityH1 {
                what: format!(
                    "{name}(r) = {c12} + {d12} r is positive somewhere on [0, 1]"
                ),
            });
            break;
        }
    }
    if n.n() == 5 && (spec.c[0][0] != spec.c[1][1] || spec.c[0][1] != 0.0 || spec.c[1][0] != 0.0) {
        violations.push(PotentialViolation::IdentityAtOriginH2 {
            what: format!(
                "A(0) = [[{}, {}], [{}, {}]] is not a multiple of the identity",
                spec.c[0][0], spec.c[0][1], spec.c[1][0], spec.c[1][1]
            ),
        });
    }
    PotentialValidation { violations }
}

/// Right-hand side of the perturbed system on `[v1, v2, w1, w2]`. Reduces
/// to the unperturbed formula path when the potential is identically zero.
pub fn perturbed_rhs_flat(n: Dimension, t: f64, y: &[f64], dy: &mut [f64], spec: &PotentialSpec) {
    if spec.is_zero() {
        limit_rhs_flat(n, y, dy);
        return;
    }
    let d2 = n.delta() * n.delta();
    let c = n.coupling();
    let q = n.norm_pow(y[0] * y[0] + y[1] * y[1]);
    let b = spec.b(t);
    dy[0] = y[2];
    dy[1] = y[3];
    dy[2] = d2 * y[0] + b[0][0] * y[0] + b[0][1] * y[1] - c * q * y[0];
    dy[3] = d2 * y[1] + b[1][0] * y[0] + b[1][1] * y[1] - c * q * y[1];
}

/// Derivative `(dV/dt, dW/dt)` of the perturbed system at a state.
pub fn perturbed_rhs(n: Dimension, t: f64, state: &CylState, spec: &PotentialSpec) -> ([f64; 2], [f64; 2]) {
    let y = state.to_array();
    let mut dy = [0.0; 4];
    perturbed_rhs_flat(n, t, &y, &mut dy, spec);
    ([dy[0], dy[1]], [dy[2], dy[3]])
}

/// A computed run of the perturbed radial system with its diagnostics.
#[derive(Debug, Clone)]
pub struct PerturbedRun {
    pub n: Dimension,
    pub potential: PotentialSpec,
    pub trajectory: Trajectory,
    pub truncated: bool,
    pub cfg: IntegratorConfig,
    /// energy series `Psi(t) = H(V, W)` at the nodes
    pub psi: Vec<(f64, f64)>,
    /// radial average diagnostic `w(t) = v1 + v2` at the nodes
    pub w_avg: Vec<(f64, f64)>,
    pub sup_norm_v: f64,
    pub inf_norm_v: f64,
}

impl PerturbedRun {
    pub fn span(&self) -> (f64, f64) {
        self.trajectory.span()
    }

    /// Infimum of `|V|` over the trailing third of the run.
    pub fn tail_inf_norm_v(&self) -> f64 {
        let (t0, t1) = self.span();
        let t_tail = t0 + 2.0 * (t1 - t0) / 3.0;
        self.trajectory
            .times()
            .iter()
            .zip(self.trajectory.states())
            .filter(|(t, _)| **t >= t_tail)
            .map(|(_, y)| (y[0] * y[0] + y[1] * y[1]).sqrt())
            .fold(f64::INFINITY, f64::min)
    }
}

/// Integrate the perturbed system from an admissible state at `t >= 0`
/// (so the radius stays inside the unit ball) and populate diagnostics.
pub fn run_perturbed(
    n: Dimension,
    ic: &CylState,
    spec: &PotentialSpec,
    t_end: f64,
    cfg: &IntegratorConfig,
) -> Result<PerturbedRun> {
    if n.n() > 5 {
        return Err(Error::BadParameter(format!(
            "perturbed runs require 3 <= n <= 5, got n = {}",
            n.n()
        )));
    }
    let validation = validate_potential(n, spec);
    if !validation.is_valid() {
        let joined = validation
            .violations
            .iter()
            .map(|v| format!("{}: {}", v.code(), v.message()))
            .collect::<Vec<_>>()
            .join("; ");
        return Err(Error::InvalidPotential(joined));
    }
    if ic.t < 0.0 {
        return Err(Error::BadParameter(format!(
            "initial cylindrical time must be nonnegative, got {}",
            ic.t
        )));
    }
    if !(t_end > ic.t) {
        return Err(Error::DegenerateSpan(ic.t, t_end));
    }
    let y0 = ic.to_array();
    let (trajectory, truncated) = integrate_guarded(
        |t, y, dy| perturbed_rhs_flat(n, t, y, dy, spec),
        &y0,
        (ic.t, t_end),
        cfg,
        |_, y| y[0].abs().max(y[1].abs()) > V_MAX,
    )?;

    let mut psi = Vec::with_capacity(trajectory.times().len());
    let mut w_avg = Vec::with_capacity(trajectory.times().len());
    let mut sup_norm_v: f64 = 0.0;
    let mut inf_norm_v = f64::INFINITY;
    for (t, y) in trajectory.times().iter().zip(trajectory.states()) {
        let state = CylState::from_slice(*t, y);
        psi.push((*t, hamiltonian(n, &state)));
        w_avg.push((*t, y[0] + y[1]));
        let norm = state.norm_v();
        sup_norm_v = sup_norm_v.max(norm);
        inf_norm_v = inf_norm_v.min(norm);
    }
    Ok(PerturbedRun {
        n,
        potential: *spec,
        trajectory,
        truncated,
        cfg: *cfg,
        psi,
        w_avg,
        sup_norm_v,
        inf_norm_v,
    })
}

/// Fitted asymptotic model `V(t) ~ v_eps(t + T) Lambda` with the windowed
/// error decay exponent.
#[derive(Debug, Clone)]
pub struct AsymptoticFit {
    pub eps_star: f64,
    pub t_star: f64,
    pub lambda_star: Direction,
    /// decay exponent of the window errors; `None` when the run already
    /// is the model up to integration noise
    pub alpha: Option<f64>,
    pub exact_model: bool,
    /// per-window `(tau, sup error)` pairs
    pub window_errors: Vec<(f64, f64)>,
    /// windows before this index are burn-in and excluded from the fit
    pub burn_in_index: usize,
    /// length of the longest run of consecutive strictly decreasing errors
    /// at or after the burn-in index
    pub decreasing_streak: usize,
}

/// Fit the asymptotic Fowler-type model of a run.
///
/// The model parameters come from the trailing third: the necksize from the
/// tail-averaged energy, the direction from the averaged `V/|V|`, the phase
/// from the last minimum of `|V|`. Window errors are measured from the
/// start of the run; the first third of the windows is burn-in and the
/// decay exponent is the least-squares slope over the longest strictly
/// decreasing streak after it.
pub fn asymptotic_fit(
    run: &PerturbedRun,
    window_count: usize,
    window_length: f64,
) -> Result<AsymptoticFit> {
    if window_count < 2 || !(window_length > 0.0) {
        return Err(Error::BadParameter(
            "need at least 2 windows of positive length".into(),
        ));
    }
    let (t0, t1) = run.span();
    let needed = window_count as f64 * window_length;
    if needed > (t1 - t0) {
        return Err(Error::RunTooShort {
            needed,
            available: t1 - t0,
        });
    }

    let n = run.n;
    let t_tail = t0 + 2.0 * (t1 - t0) / 3.0;

    // necksize from the tail-averaged energy; the scalar Hamiltonian of the
    // model is exactly twice the vector energy Psi
    let tail: Vec<&(f64, f64)> = run.psi.iter().filter(|(t, _)| *t >= t_tail).collect();
    let psi_bar = tail.iter().map(|(_, p)| p).sum::<f64>() / tail.len() as f64;
    let eps_star = necksize_from_energy(n, 2.0 * psi_bar)?;
    let model_cfg = IntegratorConfig::new(1e-12, 1e-14)?;
    let model = profile_from_necksize(n, eps_star, &model_cfg)?;

    // direction from the tail average of V/|V|
    let mut sum = [0.0f64; 2];
    let mut count = 0usize;
    for (t, y) in run.trajectory.times().iter().zip(run.trajectory.states()) {
        if *t < t_tail {
            continue;
        }
        let norm = (y[0] * y[0] + y[1] * y[1]).sqrt();
        if norm == 0.0 {
            return Err(Error::ZeroNorm { t: *t });
        }
        sum[0] += y[0] / norm;
        sum[1] += y[1] / norm;
        count += 1;
    }
    let lambda_star = Direction::new(sum[0] / count as f64, sum[1] / count as f64)?;

    // phase from the last minimum of |V| in the tail
    let minima = find_events(
        &run.trajectory,
        |y| y[0] * y[2] + y[1] * y[3],
        EventDirection::Rising,
    )?;
    let t_min = minima
        .iter()
        .rev()
        .find(|t| **t >= t_tail)
        .or_else(|| minima.last())
        .ok_or_else(|| Error::PeriodDetection("no minimum of |V| found in the run".into()))?;
    let t_star = (-t_min).rem_euclid(model.period);

    // window errors against the aligned model
    let lam = lambda_star.lambda();
    let samples_per_window = 64usize;
    let mut window_errors = Vec::with_capacity(window_count);
    for k in 0..window_count {
        let tau = t0 + k as f64 * window_length;
        let mut sup: f64 = 0.0;
        for i in 0..=samples_per_window {
            let t = tau + window_length * i as f64 / samples_per_window as f64;
            let y = run.trajectory.eval(t)?;
            let vm = model.v(t + t_star);
            let d0 = y[0] - vm * lam[0];
            let d1 = y[1] - vm * lam[1];
            sup = sup.max((d0 * d0 + d1 * d1).sqrt());
        }
        window_errors.push((tau, sup));
    }

    let burn_in_index = window_count / 3;
    let noise_floor = 1e3 * (run.cfg.rel_tol * run.sup_norm_v + run.cfg.abs_tol);
    let max_err = window_errors
        .iter()
        .map(|(_, e)| *e)
        .fold(0.0f64, f64::max);
    let exact_model = max_err <= noise_floor;

    // longest strictly decreasing streak after burn-in
    let mut best: (usize, usize) = (burn_in_index, burn_in_index); // [start, end)
    let mut cur_start = burn_in_index;
    for k in burn_in_index + 1..window_count {
        if window_errors[k].1 < window_errors[k - 1].1 {
            if k + 1 - cur_start > best.1 - best.0 {
                best = (cur_start, k + 1);
            }
        } else {
            cur_start = k;
        }
    }
    let streak = &window_errors[best.0..best.1];
    let decreasing_streak = streak.len();

    let alpha = if exact_model {
        None
    } else {
        if decreasing_streak < 2 {
            return Err(Error::NoConvergence);
        }
        // least-squares slope of log err vs tau over the streak
        let m = streak.len() as f64;
        let mean_t = streak.iter().map(|(t, _)| t).sum::<f64>() / m;
        let mean_l = streak.iter().map(|(_, e)| e.ln()).sum::<f64>() / m;
        let mut num = 0.0;
        let mut den = 0.0;
        for (t, e) in streak {
            num += (t - mean_t) * (e.ln() - mean_l);
            den += (t - mean_t) * (t - mean_t);
        }
        Some(-num / den)
    };

    Ok(AsymptoticFit {
        eps_star,
        t_star,
        lambda_star,
        alpha,
        exact_model,
        window_errors,
        burn_in_index,
        decreasing_streak,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Removability {
    Removable,
    Nonremovable,
    Undecided,
}

/// Classify the singularity of a run from the Pohozaev sign and the tail
/// behavior. Truncated or short runs are undecided.
pub fn removability_classify(run: &PerturbedRun) -> Removability {
    let (t0, t1) = run.span();
    if run.truncated || t1 - t0 < MIN_CLASSIFIABLE_SPAN {
        return Removability::Undecided;
    }
    let report = match p_invariant(run) {
        Ok(r) => r,
        Err(_) => return Removability::Undecided,
    };
    match report.sign_class {
        SignClass::Negative => {
            if run.tail_inf_norm_v() > TAIL_POSITIVE_FLOOR {
                Removability::Nonremovable
            } else {
                Removability::Undecided
            }
        }
        SignClass::Zero => {
            if w_avg_decaying(run) {
                Removability::Removable
            } else {
                Removability::Undecided
            }
        }
        SignClass::Positive => Removability::Undecided,
    }
}

/// The radial average diagnostic decays over the tail: the mean of
/// `v1 + v2` over the last sixth is at most half its mean over the
/// second-to-last sixth.
fn w_avg_decaying(run: &PerturbedRun) -> bool {
    let (t0, t1) = run.span();
    let sixth = (t1 - t0) / 6.0;
    let mean_on = |lo: f64, hi: f64| {
        let vals: Vec<f64> = run
            .w_avg
            .iter()
            .filter(|(t, _)| *t >= lo && *t < hi)
            .map(|(_, w)| *w)
            .collect();
        vals.iter().sum::<f64>() / vals.len().max(1) as f64
    };
    let prev = mean_on(t1 - 2.0 * sixth, t1 - sixth);
    let last = mean_on(t1 - sixth, t1 + 1e-9);
    last <= 0.5 * prev
}
