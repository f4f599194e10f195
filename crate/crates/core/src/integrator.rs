//! Adaptive explicit Runge-Kutta integration with dense output, zero-crossing
//! event detection and monodromy computation for periodic linear mode ODEs.
//!
//! The stepper is the classic Dormand-Prince 5(4) embedded pair with the
//! standard quartic continuous extension, so every accepted step can be
//! interpolated anywhere inside it. Event times are refined by bisection on
//! the dense output to 1e-10 in `t`, which keeps results reproducible across
//! platforms.

use crate::error::{Error, Result};
use num_complex::Complex64;

/// Tolerances and step limits for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub max_steps: usize,
}

impl IntegratorConfig {
    /// `0 < rel_tol <= 1e-3`, `0 < abs_tol <= rel_tol`, `max_step > 0`.
    pub fn new(rel_tol: f64, abs_tol: f64) -> Result<Self> {
        let cfg = IntegratorConfig {
            rel_tol,
            abs_tol,
            max_step: 0.5,
            max_steps: 1_000_000,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_max_step(mut self, max_step: f64) -> Result<Self> {
        self.max_step = max_step;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol <= 1e-3) {
            return Err(Error::BadConfig(format!(
                "rel_tol must be in (0, 1e-3], got {}",
                self.rel_tol
            )));
        }
        if !(self.abs_tol > 0.0 && self.abs_tol <= self.rel_tol) {
            return Err(Error::BadConfig(format!(
                "abs_tol must be in (0, rel_tol], got {}",
                self.abs_tol
            )));
        }
        if !(self.max_step > 0.0) {
            return Err(Error::BadConfig("max_step must be positive".into()));
        }
        if self.max_steps == 0 {
            return Err(Error::BadConfig("max_steps must be at least 1".into()));
        }
        Ok(())
    }
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_step: 0.5,
            max_steps: 1_000_000,
        }
    }
}

/// Direction of a zero crossing for [`find_events`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventDirection {
    Rising,
    Falling,
    Any,
}

#[derive(Debug, Clone)]
enum Dense {
    /// Quartic continuous extension of the 5(4) pair: stored as the four
    /// nested coefficient vectors on top of the left node state.
    Dopri {
        r2: Vec<f64>,
        r3: Vec<f64>,
        r4: Vec<f64>,
        r5: Vec<f64>,
    },
    /// Cubic Hermite from node values and derivatives, used for sampled
    /// closed-form curves.
    Hermite,
}

#[derive(Debug, Clone)]
struct Step {
    /// Step start in integration order; `h` is signed.
    t_start: f64,
    h: f64,
    dense: Dense,
}

/// Dense-output numerical solution. Nodes are strictly increasing in `t`
/// regardless of integration direction; evaluation outside the span is an
/// error, never extrapolation.
#[derive(Debug, Clone)]
pub struct Trajectory {
    dim: usize,
    /// ascending node times, one more entry than `steps`
    ts: Vec<f64>,
    /// state at each node
    ys: Vec<Vec<f64>>,
    /// derivative at each node
    fs: Vec<Vec<f64>>,
    /// step i covers [ts[i], ts[i+1]]
    steps: Vec<Step>,
    interpolation_order: u32,
    reversed: bool,
}

impl Trajectory {
    /// Build a trajectory from samples of a known curve with known
    /// derivatives; interpolation is cubic Hermite per interval.
    pub fn from_samples(ts: Vec<f64>, ys: Vec<Vec<f64>>, fs: Vec<Vec<f64>>) -> Result<Self> {
        if ts.len() < 2 || ts.len() != ys.len() || ts.len() != fs.len() {
            return Err(Error::BadParameter(
                "from_samples needs matching ts/ys/fs with at least 2 nodes".into(),
            ));
        }
        if ts.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::BadParameter(
                "sample times must be strictly increasing".into(),
            ));
        }
        let dim = ys[0].len();
        let steps = ts
            .windows(2)
            .map(|w| Step {
                t_start: w[0],
                h: w[1] - w[0],
                dense: Dense::Hermite,
            })
            .collect();
        Ok(Trajectory {
            dim,
            ts,
            ys,
            fs,
            steps,
            interpolation_order: 3,
            reversed: false,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn span(&self) -> (f64, f64) {
        (self.ts[0], *self.ts.last().unwrap())
    }

    /// Was the trajectory produced by integrating backward in time?
    pub fn reversed(&self) -> bool {
        self.reversed
    }

    pub fn interpolation_order(&self) -> u32 {
        self.interpolation_order
    }

    pub fn times(&self) -> &[f64] {
        &self.ts
    }

    pub fn states(&self) -> &[Vec<f64>] {
        &self.ys
    }

    pub fn derivatives(&self) -> &[Vec<f64>] {
        &self.fs
    }

    pub fn first(&self) -> &[f64] {
        &self.ys[0]
    }

    pub fn last(&self) -> &[f64] {
        self.ys.last().unwrap()
    }

    pub fn eval(&self, t: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim];
        self.eval_into(t, &mut out)?;
        Ok(out)
    }

    pub fn eval_component(&self, t: f64, i: usize) -> Result<f64> {
        Ok(self.eval(t)?[i])
    }

    pub fn eval_into(&self, t: f64, out: &mut [f64]) -> Result<()> {
        let (t0, t1) = self.span();
        // allow roundoff-level overshoot at the endpoints
        let slack = 1e-12 * (1.0 + t0.abs().max(t1.abs()));
        if t < t0 - slack || t > t1 + slack {
            return Err(Error::OutOfSpan { t, t0, t1 });
        }
        let t = t.clamp(t0, t1);
        // index of the step containing t
        let idx = match self.ts.binary_search_by(|x| x.partial_cmp(&t).unwrap()) {
            Ok(i) => i.min(self.steps.len() - 1),
            Err(i) => i.saturating_sub(1).min(self.steps.len() - 1),
        };
        let step = &self.steps[idx];
        let theta = (t - step.t_start) / step.h;
        match &step.dense {
            Dense::Dopri { r2, r3, r4, r5 } => {
                // node order matches integration order only when not reversed
                let y0 = if self.reversed { &self.ys[idx + 1] } else { &self.ys[idx] };
                let th1 = 1.0 - theta;
                for j in 0..self.dim {
                    out[j] = y0[j]
                        + theta * (r2[j] + th1 * (r3[j] + theta * (r4[j] + th1 * r5[j])));
                }
            }
            Dense::Hermite => {
                let (y0, y1) = (&self.ys[idx], &self.ys[idx + 1]);
                let (f0, f1) = (&self.fs[idx], &self.fs[idx + 1]);
                let h = step.h;
                let s = theta;
                let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
                let h10 = s * (1.0 - s) * (1.0 - s);
                let h01 = s * s * (3.0 - 2.0 * s);
                let h11 = s * s * (s - 1.0);
                for j in 0..self.dim {
                    out[j] = h00 * y0[j] + h * h10 * f0[j] + h01 * y1[j] + h * h11 * f1[j];
                }
            }
        }
        Ok(())
    }
}

// Dormand-Prince 5(4) tableau.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// b - b_hat, for the embedded error estimate
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
// continuous-extension weights
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

struct RawRun {
    ts: Vec<f64>,
    ys: Vec<Vec<f64>>,
    fs: Vec<Vec<f64>>,
    steps: Vec<Step>,
    truncated: bool,
}

/// Integrate `rhs` over `span`; `span.1 < span.0` integrates backward.
pub fn integrate<F>(rhs: F, y0: &[f64], span: (f64, f64), cfg: &IntegratorConfig) -> Result<Trajectory>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let (traj, _) = integrate_guarded(rhs, y0, span, cfg, |_, _| false)?;
    Ok(traj)
}

/// Like [`integrate`], but stops early once `guard` returns true at an
/// accepted node. The flag reports whether truncation happened; truncated
/// runs are informative in blow-up experiments rather than an error.
pub fn integrate_guarded<F, G>(
    mut rhs: F,
    y0: &[f64],
    span: (f64, f64),
    cfg: &IntegratorConfig,
    guard: G,
) -> Result<(Trajectory, bool)>
where
    F: FnMut(f64, &[f64], &mut [f64]),
    G: Fn(f64, &[f64]) -> bool,
{
    cfg.validate()?;
    let (t0, t1) = span;
    if !(t1 - t0).is_finite() || t1 == t0 {
        return Err(Error::DegenerateSpan(t0, t1));
    }
    if y0.iter().any(|x| !x.is_finite()) {
        return Err(Error::BadParameter("initial state must be finite".into()));
    }
    let dir = (t1 - t0).signum();
    let dim = y0.len();

    let mut ts = vec![t0];
    let mut ys = vec![y0.to_vec()];
    let mut steps: Vec<Step> = Vec::new();

    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k: Vec<Vec<f64>> = (0..7).map(|_| vec![0.0; dim]).collect();
    let mut ytmp = vec![0.0; dim];
    let mut y1 = vec![0.0; dim];

    let mut f0 = vec![0.0; dim];
    rhs(t, &y, &mut f0);
    k[0].copy_from_slice(&f0);
    let mut fs = vec![f0.clone()];

    let mut h = initial_step(&mut rhs, t, &y, &k[0].clone(), dir, cfg, &mut ytmp);
    let mut n_steps = 0usize;
    let mut rejected = false;
    let mut truncated = false;

    if guard(t, &y) {
        truncated = true;
    }

    while !truncated && dir * (t1 - t) > 1e-14 * (1.0 + t.abs()) {
        n_steps += 1;
        if n_steps > cfg.max_steps {
            return Err(Error::StepCountExhausted {
                max_steps: cfg.max_steps,
                t,
            });
        }
        let h_min = 1e3 * f64::EPSILON * t.abs().max(1.0);
        if h.abs() < h_min {
            return Err(Error::StepSizeUnderflow { t });
        }
        if dir * (t + h - t1) > 0.0 {
            h = t1 - t;
        }

        // stages 2..6
        for j in 0..dim {
            ytmp[j] = y[j] + h * A21 * k[0][j];
        }
        rhs(t + C2 * h, &ytmp, &mut k[1]);
        for j in 0..dim {
            ytmp[j] = y[j] + h * (A31 * k[0][j] + A32 * k[1][j]);
        }
        rhs(t + C3 * h, &ytmp, &mut k[2]);
        for j in 0..dim {
            ytmp[j] = y[j] + h * (A41 * k[0][j] + A42 * k[1][j] + A43 * k[2][j]);
        }
        rhs(t + C4 * h, &ytmp, &mut k[3]);
        for j in 0..dim {
            ytmp[j] =
                y[j] + h * (A51 * k[0][j] + A52 * k[1][j] + A53 * k[2][j] + A54 * k[3][j]);
        }
        rhs(t + C5 * h, &ytmp, &mut k[4]);
        for j in 0..dim {
            ytmp[j] = y[j]
                + h * (A61 * k[0][j]
                    + A62 * k[1][j]
                    + A63 * k[2][j]
                    + A64 * k[3][j]
                    + A65 * k[4][j]);
        }
        rhs(t + h, &ytmp, &mut k[5]);
        // 5th order solution
        for j in 0..dim {
            y1[j] = y[j]
                + h * (B1 * k[0][j] + B3 * k[2][j] + B4 * k[3][j] + B5 * k[4][j] + B6 * k[5][j]);
        }
        rhs(t + h, &y1, &mut k[6]);

        // weighted rms of the embedded difference
        let mut err_sq = 0.0;
        for j in 0..dim {
            let e = h
                * (E1 * k[0][j] + E3 * k[2][j] + E4 * k[3][j] + E5 * k[4][j] + E6 * k[5][j]
                    + E7 * k[6][j]);
            let sc = cfg.abs_tol + cfg.rel_tol * y[j].abs().max(y1[j].abs());
            err_sq += (e / sc) * (e / sc);
        }
        let err = (err_sq / dim as f64).sqrt();

        if err <= 1.0 {
            // accept: build the continuous extension before moving on
            let mut r2 = vec![0.0; dim];
            let mut r3 = vec![0.0; dim];
            let mut r4 = vec![0.0; dim];
            let mut r5 = vec![0.0; dim];
            for j in 0..dim {
                let ydiff = y1[j] - y[j];
                let bspl = h * k[0][j] - ydiff;
                r2[j] = ydiff;
                r3[j] = bspl;
                r4[j] = ydiff - h * k[6][j] - bspl;
                r5[j] = h
                    * (D1 * k[0][j]
                        + D3 * k[2][j]
                        + D4 * k[3][j]
                        + D5 * k[4][j]
                        + D6 * k[5][j]
                        + D7 * k[6][j]);
            }
            steps.push(Step {
                t_start: t,
                h,
                dense: Dense::Dopri { r2, r3, r4, r5 },
            });
            t += h;
            y.copy_from_slice(&y1);
            let (head, tail) = k.split_at_mut(6);
            head[0].copy_from_slice(&tail[0]);
            ts.push(t);
            ys.push(y.clone());
            fs.push(k[0].clone());
            if guard(t, &y) {
                truncated = true;
            }
            let fac = (0.9 * err.powf(-0.2)).clamp(0.2, if rejected { 1.0 } else { 5.0 });
            h = (h * fac).clamp(-cfg.max_step, cfg.max_step);
            rejected = false;
        } else {
            let fac = (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
            h *= fac;
            rejected = true;
        }
    }

    let raw = RawRun {
        ts,
        ys,
        fs,
        steps,
        truncated,
    };
    let was_truncated = raw.truncated;
    Ok((finish(raw, dim, dir), was_truncated))
}

fn finish(mut raw: RawRun, dim: usize, dir: f64) -> Trajectory {
    let reversed = dir < 0.0;
    if reversed {
        raw.ts.reverse();
        raw.ys.reverse();
        raw.fs.reverse();
        raw.steps.reverse();
    }
    Trajectory {
        dim,
        ts: raw.ts,
        ys: raw.ys,
        fs: raw.fs,
        steps: raw.steps,
        interpolation_order: 4,
        reversed,
    }
}

/// Crude version of the usual starting-step heuristic; a poor guess only
/// costs a few rejected steps.
fn initial_step<F>(
    rhs: &mut F,
    t: f64,
    y: &[f64],
    f0: &[f64],
    dir: f64,
    cfg: &IntegratorConfig,
    ytmp: &mut [f64],
) -> f64
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let dim = y.len();
    let mut d0: f64 = 0.0;
    let mut d1: f64 = 0.0;
    for j in 0..dim {
        let sc = cfg.abs_tol + cfg.rel_tol * y[j].abs();
        d0 += (y[j] / sc).powi(2);
        d1 += (f0[j] / sc).powi(2);
    }
    d0 = (d0 / dim as f64).sqrt();
    d1 = (d1 / dim as f64).sqrt();
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    let h0 = h0.min(cfg.max_step);
    // one explicit Euler probe for the second derivative scale
    for j in 0..dim {
        ytmp[j] = y[j] + dir * h0 * f0[j];
    }
    let mut f1 = vec![0.0; dim];
    rhs(t + dir * h0, ytmp, &mut f1);
    let mut d2: f64 = 0.0;
    for j in 0..dim {
        let sc = cfg.abs_tol + cfg.rel_tol * y[j].abs();
        d2 += ((f1[j] - f0[j]) / sc).powi(2);
    }
    d2 = (d2 / dim as f64).sqrt() / h0;
    let dmax = d1.max(d2);
    let h1 = if dmax <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / dmax).powf(0.2)
    };
    dir * h1.min(100.0 * h0).min(cfg.max_step)
}

const EVENT_SUBSAMPLES: usize = 8;
const EVENT_REFINE_TOL: f64 = 1e-10;

/// Zero crossings of `event(state)` along the trajectory, refined by
/// bisection on the dense output. Each returned time brackets a sign change
/// of the requested direction; the list is ascending and may be empty.
pub fn find_events<F>(traj: &Trajectory, event: F, direction: EventDirection) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64,
{
    let (t0, _) = traj.span();
    let n_steps = traj.steps.len();
    let mut out: Vec<f64> = Vec::new();
    let mut buf = vec![0.0; traj.dim];

    let mut prev_t = t0;
    traj.eval_into(t0, &mut buf)?;
    let mut prev_g = event(&buf);

    for i in 0..n_steps {
        let (a, b) = (traj.ts[i], traj.ts[i + 1]);
        for s in 1..=EVENT_SUBSAMPLES {
            let tq = a + (b - a) * s as f64 / EVENT_SUBSAMPLES as f64;
            traj.eval_into(tq, &mut buf)?;
            let g = event(&buf);
            if crosses(prev_g, g, direction) {
                let te = refine(traj, &event, prev_t, tq, prev_g, &mut buf)?;
                if out.last().map_or(true, |&last| te - last > 1e-9) {
                    out.push(te);
                }
            }
            prev_t = tq;
            prev_g = g;
        }
    }
    Ok(out)
}

fn crosses(ga: f64, gb: f64, dir: EventDirection) -> bool {
    match dir {
        EventDirection::Rising => ga < 0.0 && gb >= 0.0 && gb > ga,
        EventDirection::Falling => ga > 0.0 && gb <= 0.0 && gb < ga,
        EventDirection::Any => (ga < 0.0 && gb >= 0.0) || (ga > 0.0 && gb <= 0.0),
    }
}

fn refine<F>(
    traj: &Trajectory,
    event: &F,
    mut lo: f64,
    mut hi: f64,
    g_lo: f64,
    buf: &mut [f64],
) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let sign_lo = g_lo < 0.0;
    while hi - lo > EVENT_REFINE_TOL {
        let mid = 0.5 * (lo + hi);
        traj.eval_into(mid, buf)?;
        let gm = event(buf);
        if (gm < 0.0) == sign_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Fundamental matrix of `psi'' + q(t) psi = 0` over one period, acting on
/// `(psi, psi')`. The determinant is 1 up to integration error because the
/// first-order coefficient vanishes; it is tracked per integration segment
/// since evaluating it from the final matrix of a strongly hyperbolic mode
/// loses the decaying direction to cancellation.
#[derive(Debug, Clone)]
pub struct Monodromy {
    pub matrix: [[f64; 2]; 2],
    pub period: f64,
    pub multipliers: [Complex64; 2],
    det: f64,
}

impl Monodromy {
    pub fn trace(&self) -> f64 {
        self.matrix[0][0] + self.matrix[1][1]
    }

    pub fn det(&self) -> f64 {
        self.det
    }
}

/// Entry bound at which a monodromy integration segment is cut; keeps the
/// per-segment determinant well conditioned.
const MONODROMY_SEGMENT_BOUND: f64 = 4.0;

/// Integrate the two canonical solutions of `psi'' + q(t) psi = 0` across
/// `[0, period]` and package the fundamental matrix with its multipliers.
///
/// The integration restarts from the identity whenever entries exceed a
/// small bound; the full matrix is the ordered product of the segments and
/// the determinant the product of the segment determinants.
pub fn monodromy<Q>(q: Q, period: f64, cfg: &IntegratorConfig) -> Result<Monodromy>
where
    Q: Fn(f64) -> f64,
{
    if !(period > 0.0) {
        return Err(Error::BadParameter(format!(
            "monodromy period must be positive, got {period}"
        )));
    }
    // both columns at once: y = [psi1, psi1', psi2, psi2']
    let rhs = |t: f64, y: &[f64], dy: &mut [f64]| {
        let qv = q(t);
        dy[0] = y[1];
        dy[1] = -qv * y[0];
        dy[2] = y[3];
        dy[3] = -qv * y[2];
    };
    let mut matrix = [[1.0, 0.0], [0.0, 1.0]];
    let mut det = 1.0;
    let mut t0 = 0.0;
    loop {
        let (traj, truncated) = integrate_guarded(
            &rhs,
            &[1.0, 0.0, 0.0, 1.0],
            (t0, period),
            cfg,
            |_, y| y.iter().any(|x| x.abs() > MONODROMY_SEGMENT_BOUND),
        )?;
        let (_, t1) = traj.span();
        let yb = traj.last();
        let seg = [[yb[0], yb[2]], [yb[1], yb[3]]];
        matrix = [
            [
                seg[0][0] * matrix[0][0] + seg[0][1] * matrix[1][0],
                seg[0][0] * matrix[0][1] + seg[0][1] * matrix[1][1],
            ],
            [
                seg[1][0] * matrix[0][0] + seg[1][1] * matrix[1][0],
                seg[1][0] * matrix[0][1] + seg[1][1] * matrix[1][1],
            ],
        ];
        det *= seg[0][0] * seg[1][1] - seg[0][1] * seg[1][0];
        if !truncated || t1 >= period {
            break;
        }
        if t1 <= t0 {
            return Err(Error::StepSizeUnderflow { t: t1 });
        }
        t0 = t1;
    }

    let tr = matrix[0][0] + matrix[1][1];
    let disc = 0.25 * tr * tr - det;
    let multipliers = if disc >= 0.0 {
        // stable quadratic roots: the larger-magnitude root directly, the
        // other from the determinant
        let s = disc.sqrt();
        let big = 0.5 * tr + tr.signum() * s;
        if big == 0.0 {
            [Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)]
        } else {
            [Complex64::new(big, 0.0), Complex64::new(det / big, 0.0)]
        }
    } else {
        let s = (-disc).sqrt();
        [Complex64::new(0.5 * tr, s), Complex64::new(0.5 * tr, -s)]
    };
    Ok(Monodromy {
        matrix,
        period,
        multipliers,
        det,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Dimension;

    fn tight() -> IntegratorConfig {
        IntegratorConfig::default()
    }

    #[test]
    fn config_validation() {
        assert!(IntegratorConfig::new(1e-8, 1e-10).is_ok());
        assert!(IntegratorConfig::new(1e-2, 1e-10).is_err());
        assert!(IntegratorConfig::new(1e-8, 1e-6).is_err());
        assert!(IntegratorConfig::new(1e-8, 0.0).is_err());
        assert!(IntegratorConfig::new(1e-8, 1e-10)
            .unwrap()
            .with_max_step(0.0)
            .is_err());
    }

    #[test]
    fn harmonic_oscillator_round_trip() {
        let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| {
            dy[0] = y[1];
            dy[1] = -y[0];
        };
        let cfg = IntegratorConfig::new(1e-10, 1e-12).unwrap();
        let traj = integrate(rhs, &[1.0, 0.0], (0.0, 2.0 * std::f64::consts::PI), &cfg).unwrap();
        let y = traj.last();
        assert!((y[0] - 1.0).abs() < 1e-8, "y0 = {}", y[0]);
        assert!(y[1].abs() < 1e-8, "y1 = {}", y[1]);
    }

    #[test]
    fn dense_output_matches_closed_form() {
        // loose tolerance forces large steps so the interpolant does real work
        let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| {
            dy[0] = y[1];
            dy[1] = -y[0];
        };
        let cfg = IntegratorConfig::new(1e-6, 1e-9).unwrap().with_max_step(10.0).unwrap();
        let traj = integrate(rhs, &[0.0, 1.0], (0.0, 10.0), &cfg).unwrap();
        let mut node_err: f64 = 0.0;
        for (t, y) in traj.times().iter().zip(traj.states()) {
            node_err = node_err.max((y[0] - t.sin()).abs());
        }
        let mut dense_err: f64 = 0.0;
        for i in 0..=1000 {
            let t = 10.0 * i as f64 / 1000.0;
            let y = traj.eval(t).unwrap();
            dense_err = dense_err.max((y[0] - t.sin()).abs());
        }
        // interpolation may not degrade accuracy by more than a small factor
        assert!(
            dense_err <= 20.0 * node_err + 1e-12,
            "dense {dense_err} vs node {node_err}"
        );
    }

    #[test]
    fn backward_integration_spans_are_ascending() {
        let rhs = |t: f64, _y: &[f64], dy: &mut [f64]| {
            dy[0] = t.cos();
        };
        let traj = integrate(rhs, &[0.0], (0.0, -3.0), &tight()).unwrap();
        let (a, b) = traj.span();
        assert_eq!(a, -3.0);
        assert_eq!(b, 0.0);
        assert!(traj.times().windows(2).all(|w| w[1] > w[0]));
        let y = traj.eval(-1.5).unwrap();
        assert!((y[0] - (-1.5f64).sin()).abs() < 1e-9);
    }

    #[test]
    fn equilibrium_stays_constant() {
        let n = Dimension::new(4).unwrap();
        let eps_cyl = (0.5f64).sqrt();
        let y0 = [eps_cyl, 0.0, 0.0, 0.0];
        let traj = integrate(
            |_t, y, dy| crate::model::limit_rhs_flat(n, y, dy),
            &y0,
            (0.0, 30.0),
            &tight(),
        )
        .unwrap();
        for y in traj.states() {
            assert!((y[0] - eps_cyl).abs() < 1e-10);
            assert!(y[2].abs() < 1e-10);
        }
    }

    #[test]
    fn events_of_cosine() {
        let rhs = |t: f64, _y: &[f64], dy: &mut [f64]| {
            dy[0] = -t.sin();
        };
        let traj = integrate(rhs, &[1.0], (0.0, 10.0), &tight()).unwrap();
        let events = find_events(&traj, |y| y[0], EventDirection::Any).unwrap();
        let pi = std::f64::consts::PI;
        let expected = [pi / 2.0, 3.0 * pi / 2.0, 5.0 * pi / 2.0];
        assert_eq!(events.len(), 3, "events: {events:?}");
        for (e, x) in events.iter().zip(expected) {
            assert!((e - x).abs() < 1e-9, "event {e} vs {x}");
        }
        let falling = find_events(&traj, |y| y[0], EventDirection::Falling).unwrap();
        assert_eq!(falling.len(), 2);
        assert!((falling[0] - pi / 2.0).abs() < 1e-9);
        assert!((falling[1] - 5.0 * pi / 2.0).abs() < 1e-9);
    }

    #[test]
    fn no_events_on_constant_trajectory() {
        let rhs = |_t: f64, _y: &[f64], dy: &mut [f64]| {
            dy[0] = 0.0;
        };
        let traj = integrate(rhs, &[2.0], (0.0, 5.0), &tight()).unwrap();
        let events = find_events(&traj, |y| y[0] - 1.0, EventDirection::Any).unwrap();
        assert!(events.is_empty());
    }

    #[test]
    fn eval_outside_span_is_an_error() {
        let rhs = |_t: f64, _y: &[f64], dy: &mut [f64]| {
            dy[0] = 1.0;
        };
        let traj = integrate(rhs, &[0.0], (0.0, 1.0), &tight()).unwrap();
        assert!(matches!(traj.eval(1.5), Err(Error::OutOfSpan { .. })));
        assert!(matches!(traj.eval(-0.5), Err(Error::OutOfSpan { .. })));
    }

    #[test]
    fn guard_truncates_growing_solution() {
        let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| {
            dy[0] = y[0];
        };
        let (traj, truncated) =
            integrate_guarded(rhs, &[1.0], (0.0, 10.0), &tight(), |_, y| y[0] > 10.0).unwrap();
        assert!(truncated);
        let (_, t_hi) = traj.span();
        assert!(t_hi < 10.0);
        assert!(traj.last()[0] > 10.0);
        assert!(traj.last()[0] < 20.0);
    }

    #[test]
    fn step_budget_exhaustion_is_reported() {
        let rhs = |t: f64, _y: &[f64], dy: &mut [f64]| {
            dy[0] = (40.0 * t).sin();
        };
        let cfg = IntegratorConfig {
            max_steps: 5,
            ..IntegratorConfig::default()
        };
        match integrate(rhs, &[0.0], (0.0, 50.0), &cfg) {
            Err(Error::StepCountExhausted { max_steps, .. }) => assert_eq!(max_steps, 5),
            other => panic!("expected step exhaustion, got {other:?}"),
        }
    }

    #[test]
    fn blow_up_without_guard_underflows_with_last_time() {
        // y' = y^2 from y(0) = 1 blows up at t = 1
        let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| {
            dy[0] = y[0] * y[0];
        };
        match integrate(rhs, &[1.0], (0.0, 2.0), &tight()) {
            Err(Error::StepSizeUnderflow { t }) => {
                assert!((t - 1.0).abs() < 1e-3, "underflow reported at t = {t}")
            }
            Err(Error::StepCountExhausted { t, .. }) => {
                assert!((t - 1.0).abs() < 1e-3, "exhaustion reported at t = {t}")
            }
            other => panic!("expected failure near the blow-up, got {other:?}"),
        }
    }

    #[test]
    fn monodromy_identity_for_unit_q() {
        let m = monodromy(|_| 1.0, 2.0 * std::f64::consts::PI, &tight()).unwrap();
        assert!((m.matrix[0][0] - 1.0).abs() < 1e-8);
        assert!(m.matrix[0][1].abs() < 1e-8);
        assert!(m.matrix[1][0].abs() < 1e-8);
        assert!((m.matrix[1][1] - 1.0).abs() < 1e-8);
        assert!((m.det() - 1.0).abs() < 1e-8);
        for mu in m.multipliers {
            assert!((mu - Complex64::new(1.0, 0.0)).norm() < 1e-6);
        }
    }

    #[test]
    fn monodromy_hyperbolic_for_negative_q() {
        let t = 1.3;
        let m = monodromy(|_| -1.0, t, &tight()).unwrap();
        assert!((m.matrix[0][0] - t.cosh()).abs() < 1e-9);
        assert!((m.matrix[0][1] - t.sinh()).abs() < 1e-9);
        assert!((m.matrix[1][0] - t.sinh()).abs() < 1e-9);
        assert!((m.matrix[1][1] - t.cosh()).abs() < 1e-9);
        let mus = m.multipliers;
        assert!((mus[0].re - t.exp()).abs() < 1e-8 && mus[0].im.abs() < 1e-12);
        assert!((mus[1].re - (-t).exp()).abs() < 1e-8 && mus[1].im.abs() < 1e-12);
    }

    #[test]
    fn from_samples_hermite_interpolation() {
        let ts: Vec<f64> = (0..=100).map(|i| i as f64 * 0.05).collect();
        let ys: Vec<Vec<f64>> = ts.iter().map(|t| vec![t.sin()]).collect();
        let fs: Vec<Vec<f64>> = ts.iter().map(|t| vec![t.cos()]).collect();
        let traj = Trajectory::from_samples(ts, ys, fs).unwrap();
        for i in 0..=500 {
            let t = 5.0 * i as f64 / 500.0;
            let y = traj.eval(t).unwrap();
            assert!((y[0] - t.sin()).abs() < 1e-7);
        }
        assert_eq!(traj.interpolation_order(), 3);
    }
}
