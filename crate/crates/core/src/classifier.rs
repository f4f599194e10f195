//! Diagnostics for trajectories of the coupled limit system: Wronskian
//! conservation, recovery of the coupling ray, and synthesis of ray
//! solutions from a scalar Fowler profile.
//!
//! For exact solutions `v1'' v2 = v1 v2''`, so the Wronskian
//! `c = w1 v2 - v1 w2` is a first integral; bounded positive solutions force
//! `c = 0` and live on a ray `V = v Lambda`.

use crate::error::{Error, Result};
use crate::fowler::{fowler_rhs_flat, FowlerProfile};
use crate::integrator::Trajectory;
use crate::model::Direction;

/// Tolerance on the angular deviation below which a trajectory counts as a
/// ray; well above integration noise, well below genuine angular drift.
pub const RAY_TOL: f64 = 1e-6;

/// A component whose sup over the trajectory stays below this floor is
/// declared identically zero in the dichotomy check.
pub const ZERO_COMPONENT_FLOOR: f64 = 1e-12;

/// Wronskian samples along a trajectory with their mean and spread.
#[derive(Debug, Clone)]
pub struct WronskianTrace {
    pub series: Vec<(f64, f64)>,
    pub mean: f64,
    /// max - min along the trajectory; integration noise only for exact
    /// solutions of the limit system
    pub spread: f64,
}

/// Outcome of the ray test.
#[derive(Debug, Clone)]
pub enum DirectionResult {
    Ray(Direction),
    NotOnRay { max_deviation: f64 },
}

/// Summary diagnostics for one trajectory of the limit system.
#[derive(Debug, Clone)]
pub struct ClassificationReport {
    pub wronskian_mean: f64,
    pub wronskian_spread: f64,
    pub direction: DirectionResult,
    /// quotient v1/v2 for ray trajectories with positive second component
    pub eta: Option<f64>,
    /// empirical (min |V|, max |V|) over the samples; these are the
    /// two-sided bound constants after transport to the ball
    pub bounds: (f64, f64),
}

fn wronskian(y: &[f64]) -> f64 {
    // state layout [v1, v2, w1, w2]
    y[2] * y[1] - y[0] * y[3]
}

/// Sample `c(t) = w1 v2 - v1 w2` at the trajectory nodes.
pub fn wronskian_trace(traj: &Trajectory) -> WronskianTrace {
    let mut series = Vec::with_capacity(traj.times().len());
    let mut sum = 0.0;
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for (t, y) in traj.times().iter().zip(traj.states()) {
        let c = wronskian(y);
        series.push((*t, c));
        sum += c;
        min = min.min(c);
        max = max.max(c);
    }
    WronskianTrace {
        mean: sum / series.len() as f64,
        spread: max - min,
        series,
    }
}

/// Recover the ray direction, or report the deviation when there is none.
/// Errors if `|V|` vanishes anywhere along the samples.
pub fn direction_of(traj: &Trajectory) -> Result<DirectionResult> {
    let mut sum = [0.0f64; 2];
    let mut dirs = Vec::with_capacity(traj.states().len());
    for (t, y) in traj.times().iter().zip(traj.states()) {
        let norm = (y[0] * y[0] + y[1] * y[1]).sqrt();
        if norm == 0.0 {
            return Err(Error::ZeroNorm { t: *t });
        }
        let d = [y[0] / norm, y[1] / norm];
        sum[0] += d[0];
        sum[1] += d[1];
        dirs.push(d);
    }
    let k = dirs.len() as f64;
    let mean = [sum[0] / k, sum[1] / k];
    let max_deviation = dirs
        .iter()
        .map(|d| ((d[0] - mean[0]).powi(2) + (d[1] - mean[1]).powi(2)).sqrt())
        .fold(0.0f64, f64::max);
    if max_deviation <= RAY_TOL {
        Ok(DirectionResult::Ray(Direction::new(mean[0], mean[1])?))
    } else {
        Ok(DirectionResult::NotOnRay { max_deviation })
    }
}

/// Build the ray solution `V(t) = v_eps(t + shift) Lambda` as a dense
/// 4-dim trajectory over ten periods. The shift is reduced modulo the
/// period; the construction satisfies the limit system by the ray algebra.
pub fn synthesize(profile: &FowlerProfile, lambda: &Direction, shift: f64) -> Trajectory {
    let period = profile.period;
    let s = shift.rem_euclid(period);
    let l = lambda.lambda();
    let n_per_period = 400usize;
    let total = 10 * n_per_period;
    let dt = period / n_per_period as f64;
    let mut ts = Vec::with_capacity(total + 1);
    let mut ys = Vec::with_capacity(total + 1);
    let mut fs = Vec::with_capacity(total + 1);
    for i in 0..=total {
        let t = i as f64 * dt;
        let vw = profile.eval_periodic(t + s);
        let mut dy = [0.0; 2];
        fowler_rhs_flat(profile.n, &vw, &mut dy);
        ts.push(t);
        ys.push(vec![vw[0] * l[0], vw[0] * l[1], vw[1] * l[0], vw[1] * l[1]]);
        fs.push(vec![vw[1] * l[0], vw[1] * l[1], dy[1] * l[0], dy[1] * l[1]]);
    }
    Trajectory::from_samples(ts, ys, fs).expect("uniform grid is strictly increasing")
}

/// Compose the diagnostics the ray classification is built from.
pub fn classify_trajectory(traj: &Trajectory) -> Result<ClassificationReport> {
    let w = wronskian_trace(traj);
    let direction = direction_of(traj)?;
    let mut min_norm = f64::INFINITY;
    let mut max_norm: f64 = 0.0;
    for y in traj.states() {
        let norm = (y[0] * y[0] + y[1] * y[1]).sqrt();
        min_norm = min_norm.min(norm);
        max_norm = max_norm.max(norm);
    }
    let eta = match &direction {
        DirectionResult::Ray(d) => d.eta(),
        DirectionResult::NotOnRay { .. } => None,
    };
    Ok(ClassificationReport {
        wronskian_mean: w.mean,
        wronskian_spread: w.spread,
        direction,
        eta,
        bounds: (min_norm, max_norm),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ComponentClass {
    StrictlyPositive { inf: f64 },
    IdenticallyZero,
    SignChanging,
}

/// Dichotomy check: per component, either the sampled infimum stays
/// positive or the sampled supremum is below the zero floor.
pub fn component_dichotomy(traj: &Trajectory) -> [ComponentClass; 2] {
    let mut inf = [f64::INFINITY; 2];
    let mut sup = [0.0f64; 2];
    for y in traj.states() {
        for i in 0..2 {
            inf[i] = inf[i].min(y[i]);
            sup[i] = sup[i].max(y[i].abs());
        }
    }
    let classify = |i: usize| {
        if sup[i] <= ZERO_COMPONENT_FLOOR {
            ComponentClass::IdenticallyZero
        } else if inf[i] > 0.0 {
            ComponentClass::StrictlyPositive { inf: inf[i] }
        } else {
            ComponentClass::SignChanging
        }
    };
    [classify(0), classify(1)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fowler::profile_from_necksize;
    use crate::integrator::{integrate, integrate_guarded, IntegratorConfig};
    use crate::model::{limit_rhs_flat, Dimension};

    fn dim(n: u32) -> Dimension {
        Dimension::new(n).unwrap()
    }

    fn cfg() -> IntegratorConfig {
        IntegratorConfig::default()
    }

    #[test]
    fn synthesized_ray_has_zero_wronskian() {
        let n = dim(3);
        let p = profile_from_necksize(n, 0.3, &cfg()).unwrap();
        let lam = Direction::new(0.6, 0.8).unwrap();
        let traj = synthesize(&p, &lam, 0.0);
        let w = wronskian_trace(&traj);
        assert!(w.spread <= 1e-10, "spread {}", w.spread);
        assert!(w.mean.abs() <= 1e-10);
    }

    #[test]
    fn wronskian_is_conserved_from_arbitrary_ic() {
        let n = dim(3);
        let y0 = [0.3, 0.4, 0.1, -0.05];
        let (traj, _) = integrate_guarded(
            |_t, y, dy| limit_rhs_flat(n, y, dy),
            &y0,
            (0.0, 40.0),
            &cfg(),
            |_, y| y[0].abs().max(y[1].abs()) > 10.0,
        )
        .unwrap();
        let w = wronskian_trace(&traj);
        assert!((w.mean - 0.055).abs() <= 1e-8, "mean {}", w.mean);
        assert!(w.spread <= 1e-8, "spread {}", w.spread);
        // and this trajectory is not a ray
        match direction_of(&traj).unwrap() {
            DirectionResult::NotOnRay { max_deviation } => assert!(max_deviation > 1e-3),
            DirectionResult::Ray(_) => panic!("c != 0 trajectory classified as a ray"),
        }
    }

    #[test]
    fn nonzero_wronskian_loses_positivity() {
        // recorded observation, not a theorem-level assertion: the c = 0.055
        // initial state leaves the positive quadrant in finite time
        let n = dim(3);
        let y0 = [0.3, 0.4, 0.1, -0.05];
        let (traj, _) = integrate_guarded(
            |_t, y, dy| limit_rhs_flat(n, y, dy),
            &y0,
            (0.0, 60.0),
            &cfg(),
            |_, y| y[0].abs().max(y[1].abs()) > 10.0,
        )
        .unwrap();
        let lost = traj
            .times()
            .iter()
            .zip(traj.states())
            .find(|(_, y)| y[0] < 0.0 || y[1] < 0.0);
        println!("positivity lost at {:?}", lost.map(|(t, _)| *t));
    }

    #[test]
    fn ray_is_recovered_with_its_direction() {
        let n = dim(4);
        let p = profile_from_necksize(n, 0.45, &cfg()).unwrap();
        let lam = Direction::new(0.6, 0.8).unwrap();
        let traj = synthesize(&p, &lam, 1.7);
        match direction_of(&traj).unwrap() {
            DirectionResult::Ray(d) => {
                assert!((d.lambda()[0] - 0.6).abs() < 1e-9);
                assert!((d.lambda()[1] - 0.8).abs() < 1e-9);
            }
            DirectionResult::NotOnRay { max_deviation } => {
                panic!("ray not recognized, deviation {max_deviation}")
            }
        }
    }

    #[test]
    fn scalar_embedding_sits_on_the_quadrant_boundary() {
        let n = dim(3);
        let p = profile_from_necksize(n, 0.2, &cfg()).unwrap();
        let lam = Direction::new(1.0, 0.0).unwrap();
        let traj = synthesize(&p, &lam, 0.0);
        match direction_of(&traj).unwrap() {
            DirectionResult::Ray(d) => assert_eq!(d.lambda(), [1.0, 0.0]),
            _ => panic!("boundary ray not recognized"),
        }
        let classes = component_dichotomy(&traj);
        assert!(matches!(classes[0], ComponentClass::StrictlyPositive { .. }));
        assert_eq!(classes[1], ComponentClass::IdenticallyZero);
    }

    #[test]
    fn synthesized_solution_solves_the_limit_system() {
        // ray algebra: the vector field on the ray equals the scalar field,
        // so the stored node derivatives match limit_rhs exactly
        let n = dim(5);
        let p = profile_from_necksize(n, 0.3, &cfg()).unwrap();
        let lam = Direction::new(2.0, 1.0).unwrap();
        let traj = synthesize(&p, &lam, 0.4);
        let mut worst: f64 = 0.0;
        let mut dy = vec![0.0; 4];
        for (y, f) in traj.states().iter().zip(traj.derivatives()) {
            limit_rhs_flat(n, y, &mut dy);
            for j in 0..4 {
                worst = worst.max((dy[j] - f[j]).abs());
            }
        }
        assert!(worst <= 1e-8, "residual {worst}");
    }

    #[test]
    fn two_sided_bounds_and_dichotomy_on_rays() {
        let n = dim(4);
        let eps = 0.35;
        let p = profile_from_necksize(n, eps, &cfg()).unwrap();
        let lam = Direction::new(0.28, 0.96).unwrap();
        let traj = synthesize(&p, &lam, 0.0);
        let rep = classify_trajectory(&traj).unwrap();
        // c1 = eps, c2 = 1 in cylindrical variables
        assert!(rep.bounds.0 >= eps - 1e-8);
        assert!(rep.bounds.1 < 1.0);
        let classes = component_dichotomy(&traj);
        for (i, cls) in classes.iter().enumerate() {
            match cls {
                ComponentClass::StrictlyPositive { inf } => {
                    assert!(*inf >= eps * lam.lambda()[i] - 1e-8)
                }
                other => panic!("component {i} unexpectedly {other:?}"),
            }
        }
        assert!((rep.eta.unwrap() - 0.28 / 0.96).abs() < 1e-9);
    }

    #[test]
    fn ray_angular_deviation_stays_small_under_the_flow() {
        // integrate from a ray initial condition rather than synthesizing
        let n = dim(3);
        let eps = 0.25;
        let lam = Direction::new(1.0, 2.0).unwrap();
        let p = profile_from_necksize(n, eps, &cfg()).unwrap();
        let y0 = [eps * lam.lambda()[0], eps * lam.lambda()[1], 0.0, 0.0];
        let traj = integrate(
            |_t, y, dy| limit_rhs_flat(n, y, dy),
            &y0,
            (0.0, 10.0 * p.period),
            &cfg(),
        )
        .unwrap();
        match direction_of(&traj).unwrap() {
            DirectionResult::Ray(d) => {
                let dev = ((d.lambda()[0] - lam.lambda()[0]).powi(2)
                    + (d.lambda()[1] - lam.lambda()[1]).powi(2))
                .sqrt();
                assert!(dev <= 1e-8, "direction drift {dev}");
            }
            DirectionResult::NotOnRay { max_deviation } => {
                panic!("ray IC drifted off the ray by {max_deviation}")
            }
        }
    }

    #[test]
    fn rotation_equivariance_of_classification() {
        let n = dim(4);
        let eps = 0.4;
        let p = profile_from_necksize(n, eps, &cfg()).unwrap();
        let theta: f64 = 0.35;
        let (c, s) = (theta.cos(), theta.sin());
        // start on the first axis and on its rotated copy, both in the quadrant
        let y0 = [eps, 0.0, 0.0, 0.0];
        let y0_rot = [eps * c, eps * s, 0.0, 0.0];
        let run = |y: [f64; 4]| {
            integrate(
                |_t, yy, dy| limit_rhs_flat(n, yy, dy),
                &y,
                (0.0, 5.0 * p.period),
                &cfg(),
            )
            .unwrap()
        };
        let d0 = match direction_of(&run(y0)).unwrap() {
            DirectionResult::Ray(d) => d,
            _ => panic!("axis ray lost"),
        };
        let d1 = match direction_of(&run(y0_rot)).unwrap() {
            DirectionResult::Ray(d) => d,
            _ => panic!("rotated ray lost"),
        };
        let rotated = [
            c * d0.lambda()[0] - s * d0.lambda()[1],
            s * d0.lambda()[0] + c * d0.lambda()[1],
        ];
        assert!((d1.lambda()[0] - rotated[0]).abs() < 1e-8);
        assert!((d1.lambda()[1] - rotated[1]).abs() < 1e-8);
    }

    #[test]
    fn direction_errors_on_vanishing_norm() {
        let ts = vec![0.0, 1.0, 2.0];
        let ys = vec![vec![1.0, 0.0, 0.0, 0.0], vec![0.0; 4], vec![1.0, 0.0, 0.0, 0.0]];
        let fs = vec![vec![0.0; 4]; 3];
        let traj = Trajectory::from_samples(ts, ys, fs).unwrap();
        assert!(matches!(direction_of(&traj), Err(Error::ZeroNorm { .. })));
    }
}
