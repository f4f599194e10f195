//! Construction of Fowler (Delaunay-type) periodic profiles by shooting,
//! necksize/energy conversion and the closed-form spherical separatrix.
//!
//! A profile is fixed by the phase convention `v(0) = eps`, `v'(0) = 0`,
//! `v''(0) > 0`: time zero sits at a minimum of `v` and `eps` is the
//! necksize. The admissible necksizes form the open interval
//! `(0, eps_cyl(n))` between the spherical separatrix and the cylinder
//! equilibrium.

use crate::error::{Error, Result};
use crate::integrator::{find_events, integrate, EventDirection, IntegratorConfig, Trajectory};
use crate::model::{scalar_hamiltonian, Dimension};

/// How many periods a constructed profile covers; downstream Floquet and
/// growth checks need ten, plus slack for phase shifts.
pub const PROFILE_PERIODS: f64 = 12.0;

/// A periodic Fowler profile indexed by dimension and necksize.
#[derive(Debug, Clone)]
pub struct FowlerProfile {
    pub n: Dimension,
    pub eps: f64,
    pub period: f64,
    /// scalar Hamiltonian value `H0 = scalar_hamiltonian(n, eps, 0)`
    pub energy: f64,
    /// states `[v, w]` over `[0, PROFILE_PERIODS * period]`
    pub samples: Trajectory,
}

impl FowlerProfile {
    /// `v` at any real time, reduced modulo the period into the sampled span.
    pub fn eval_periodic(&self, t: f64) -> [f64; 2] {
        let (lo, hi) = self.samples.span();
        let mut tt = t;
        if tt < lo || tt > hi {
            tt = lo + (t - lo).rem_euclid(self.period);
        }
        let y = self.samples.eval(tt).expect("reduced time is inside the span");
        [y[0], y[1]]
    }

    pub fn v(&self, t: f64) -> f64 {
        self.eval_periodic(t)[0]
    }

    pub fn w(&self, t: f64) -> f64 {
        self.eval_periodic(t)[1]
    }
}

/// Right-hand side of the scalar Fowler equation as a first-order system
/// on `[v, w]`. The nonlinearity is evaluated through the squared value, so
/// it extends oddly through zero and transient negative values stay finite.
pub fn fowler_rhs_flat(n: Dimension, y: &[f64], dy: &mut [f64]) {
    let d2 = n.delta() * n.delta();
    let c = n.coupling();
    let v = y[0];
    dy[0] = y[1];
    dy[1] = d2 * v - c * n.norm_pow(v * v) * v;
}

/// Necksize of the cylinder equilibrium, `((n-2)/n)^{(n-2)/4}`. Every
/// admissible profile value stays strictly below it at the minima.
pub fn cylinder_necksize(n: Dimension) -> f64 {
    let nf = n.n() as f64;
    ((nf - 2.0) / nf).powf((nf - 2.0) / 4.0)
}

/// Lower endpoint of the admissible scalar energies,
/// `-((n-2)/n)^{n/2} (n-2)/2`; the energy of the cylinder solution.
pub fn energy_lower_endpoint(n: Dimension) -> f64 {
    let nf = n.n() as f64;
    -((nf - 2.0) / nf).powf(nf / 2.0) * (nf - 2.0) / 2.0
}

/// Shoot from the minimum `(eps, 0)` and detect the period as the gap to
/// the next rising zero of `v'`.
pub fn profile_from_necksize(
    n: Dimension,
    eps: f64,
    cfg: &IntegratorConfig,
) -> Result<FowlerProfile> {
    let eps_cyl = cylinder_necksize(n);
    if !(eps > 0.0 && eps < eps_cyl) {
        return Err(Error::NecksizeOutOfRange { eps, eps_cyl });
    }
    let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| fowler_rhs_flat(n, y, dy);

    // probe run to find the period; generous span covers small necksizes,
    // whose period grows like |ln eps|
    let t_lin = 2.0 * std::f64::consts::PI / (n.n() as f64 - 2.0).sqrt();
    let probe_span = (4.0 * t_lin).max(8.0 * (1.0 / eps).ln()).max(40.0);
    let probe = integrate(rhs, &[eps, 0.0], (0.0, probe_span), cfg)?;
    // skip the starting minimum, where w = 0 exactly
    let minima = find_events(&probe, |y| y[1], EventDirection::Rising)?;
    let period = minima
        .iter()
        .copied()
        .find(|&t| t > 0.25 * t_lin)
        .ok_or_else(|| {
            Error::PeriodDetection(format!(
                "no return to a minimum within [0, {probe_span}] for eps = {eps}"
            ))
        })?;

    let samples = integrate(rhs, &[eps, 0.0], (0.0, PROFILE_PERIODS * period), cfg)?;
    let profile = FowlerProfile {
        n,
        eps,
        period,
        energy: scalar_hamiltonian(n, eps, 0.0),
        samples,
    };
    check_profile(&profile)?;
    Ok(profile)
}

/// Construction-time sanity: the minimum value recurs at the detected
/// period, the profile stays inside (0, 1) and the sampled minimum is eps.
fn check_profile(p: &FowlerProfile) -> Result<()> {
    let mut min_v = f64::INFINITY;
    let mut max_v = f64::NEG_INFINITY;
    for y in p.samples.states() {
        min_v = min_v.min(y[0]);
        max_v = max_v.max(y[0]);
    }
    if !(max_v < 1.0) || !(min_v > 0.0) {
        return Err(Error::PeriodDetection(format!(
            "profile range [{min_v}, {max_v}] escapes (0, 1)"
        )));
    }
    if (min_v - p.eps).abs() > 1e-8 {
        return Err(Error::PeriodDetection(format!(
            "sampled minimum {min_v} differs from necksize {}",
            p.eps
        )));
    }
    let y_t = p.samples.eval(p.period)?;
    if (y_t[0] - p.eps).abs() > 1e-7 || y_t[1].abs() > 1e-7 {
        return Err(Error::PeriodDetection(format!(
            "state ({}, {}) at one period is not the starting minimum",
            y_t[0], y_t[1]
        )));
    }
    Ok(())
}

/// Invert `eps -> scalar_hamiltonian(n, eps, 0)` on the monotone branch
/// `(0, eps_cyl)` by bisection to 1e-12; this is the smaller of the two
/// radii on the level set.
pub fn necksize_from_energy(n: Dimension, h0: f64) -> Result<f64> {
    let h_min = energy_lower_endpoint(n);
    if !(h0 > h_min && h0 < 0.0) {
        return Err(Error::EnergyOutOfRange { h0, h_min });
    }
    let g = |e: f64| scalar_hamiltonian(n, e, 0.0) - h0;
    let mut lo = 0.0;
    let mut hi = cylinder_necksize(n);
    // g(lo) = -h0 > 0 and g(hi) = h_min - h0 < 0 on the decreasing branch
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// The spherical separatrix `v(t) = cosh(t)^{-(n-2)/2}` as a sampled
/// trajectory over [-10, 10]; its scalar Hamiltonian is identically zero.
pub fn spherical_profile(n: Dimension) -> Trajectory {
    let d = n.delta();
    let m = 2000usize;
    let mut ts = Vec::with_capacity(m + 1);
    let mut ys = Vec::with_capacity(m + 1);
    let mut fs = Vec::with_capacity(m + 1);
    for i in 0..=m {
        let t = -10.0 + 20.0 * i as f64 / m as f64;
        let ch = t.cosh();
        let v = ch.powf(-d);
        let w = -d * ch.powf(-d - 1.0) * t.sinh();
        // w' straight from the Fowler equation
        let mut dy = [0.0, 0.0];
        fowler_rhs_flat(n, &[v, w], &mut dy);
        ts.push(t);
        ys.push(vec![v, w]);
        fs.push(vec![w, dy[1]]);
    }
    Trajectory::from_samples(ts, ys, fs).expect("static grid is strictly increasing")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn dim(n: u32) -> Dimension {
        Dimension::new(n).unwrap()
    }

    #[test]
    fn cylinder_necksize_closed_forms() {
        assert_abs_diff_eq!(cylinder_necksize(dim(3)), (1.0f64 / 3.0).powf(0.25), epsilon = 1e-15);
        assert_abs_diff_eq!(cylinder_necksize(dim(4)), (0.5f64).sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(cylinder_necksize(dim(5)), (0.6f64).powf(0.75), epsilon = 1e-15);
        assert_abs_diff_eq!(cylinder_necksize(dim(3)), 0.759836, epsilon = 1e-6);
        assert_abs_diff_eq!(cylinder_necksize(dim(4)), 0.707107, epsilon = 1e-6);
        assert_abs_diff_eq!(cylinder_necksize(dim(5)), 0.681732, epsilon = 1e-6);
    }

    #[test]
    fn profile_rejects_out_of_range_necksize() {
        let cfg = IntegratorConfig::default();
        assert!(profile_from_necksize(dim(4), 0.0, &cfg).is_err());
        assert!(profile_from_necksize(dim(4), 0.71, &cfg).is_err());
        assert!(profile_from_necksize(dim(4), -0.1, &cfg).is_err());
    }

    #[test]
    fn profile_basic_invariants_n4() {
        let cfg = IntegratorConfig::default();
        let p = profile_from_necksize(dim(4), 0.5, &cfg).unwrap();
        assert!(p.period > 0.0);
        assert_abs_diff_eq!(p.energy, scalar_hamiltonian(dim(4), 0.5, 0.0), epsilon = 1e-10);
        let mut max_v: f64 = 0.0;
        let mut min_v = f64::INFINITY;
        for y in p.samples.states() {
            max_v = max_v.max(y[0]);
            min_v = min_v.min(y[0]);
        }
        assert!(max_v < 1.0);
        assert_abs_diff_eq!(min_v, 0.5, epsilon = 1e-8);
        // one extra period of periodicity
        for i in 0..=40 {
            let t = p.period * i as f64 / 40.0;
            let a = p.samples.eval(t).unwrap();
            let b = p.samples.eval(t + p.period).unwrap();
            assert!((a[0] - b[0]).abs() < 1e-7, "v mismatch at t={t}");
        }
    }

    #[test]
    fn period_approaches_linearized_limit() {
        let cfg = IntegratorConfig::default();
        for nn in [3u32, 4, 5] {
            let n = dim(nn);
            let eps = 0.999 * cylinder_necksize(n);
            let p = profile_from_necksize(n, eps, &cfg).unwrap();
            let t_lin = 2.0 * std::f64::consts::PI / (nn as f64 - 2.0).sqrt();
            assert!(
                (p.period / t_lin - 1.0).abs() <= 0.01,
                "n={nn}: period {} vs {t_lin}",
                p.period
            );
        }
    }

    #[test]
    fn necksize_energy_round_trip() {
        let n = dim(3);
        for &eps in &[0.05f64, 0.2, 0.5, 0.7] {
            let h0 = scalar_hamiltonian(n, eps, 0.0);
            let back = necksize_from_energy(n, h0).unwrap();
            assert_abs_diff_eq!(back, eps, epsilon = 1e-10);
        }
    }

    #[test]
    fn necksize_from_energy_endpoints() {
        let n = dim(4);
        // just inside the lower endpoint: eps near the cylinder value
        let eps = necksize_from_energy(n, -0.25 + 1e-9).unwrap();
        assert!((eps - cylinder_necksize(n)).abs() < 1e-3);
        // near zero energy: eps near zero
        let eps = necksize_from_energy(n, -1e-10).unwrap();
        assert!(eps < 1e-4);
        // outside the interval
        assert!(necksize_from_energy(n, 0.0).is_err());
        assert!(necksize_from_energy(n, -0.25).is_err());
        assert!(necksize_from_energy(n, 0.1).is_err());
    }

    #[test]
    fn necksize_from_energy_against_grid_scan_n3() {
        // independent fine-grid scan of the monotone branch as oracle
        let n = dim(3);
        let h0 = -0.05;
        let eps_cyl = cylinder_necksize(n);
        let m = 2_000_000;
        let mut best = (f64::INFINITY, 0.0);
        for i in 1..m {
            let e = eps_cyl * i as f64 / m as f64;
            let d = (scalar_hamiltonian(n, e, 0.0) - h0).abs();
            if d < best.0 {
                best = (d, e);
            }
        }
        let eps = necksize_from_energy(n, h0).unwrap();
        assert!((eps - best.1).abs() < 1e-6, "bisection {eps} vs scan {}", best.1);
        // and the defining equation itself
        assert_abs_diff_eq!(-0.25 * eps * eps + 0.25 * eps.powi(6), h0, epsilon = 1e-12);
    }

    #[test]
    fn spherical_profile_is_the_zero_energy_orbit() {
        for nn in [3u32, 4, 5] {
            let n = dim(nn);
            let traj = spherical_profile(n);
            let y0 = traj.eval(0.0).unwrap();
            assert_abs_diff_eq!(y0[0], 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(y0[1], 0.0, epsilon = 1e-12);
            for i in 0..=100 {
                let t = -10.0 + 20.0 * i as f64 / 100.0;
                let y = traj.eval(t).unwrap();
                let h = scalar_hamiltonian(n, y[0], y[1]);
                assert!(h.abs() <= 1e-10, "n={nn}, t={t}: H = {h}");
            }
        }
        let y = spherical_profile(dim(4)).eval(1.0).unwrap();
        assert_abs_diff_eq!(y[0], 1.0f64.cosh().recip(), epsilon = 1e-9);
    }

    #[test]
    fn auxiliary_f_decreases_while_v_decreases() {
        // between a maximum of v and the following minimum, f must drop
        let n = dim(4);
        let p = profile_from_necksize(n, 0.3, &IntegratorConfig::default()).unwrap();
        let maxima =
            crate::integrator::find_events(&p.samples, |y| y[1], crate::integrator::EventDirection::Falling)
                .unwrap();
        let minima =
            crate::integrator::find_events(&p.samples, |y| y[1], crate::integrator::EventDirection::Rising)
                .unwrap();
        let t_max = maxima[0];
        let t_min = minima.iter().copied().find(|t| *t > t_max).unwrap();
        let f_at = |t: f64| {
            let y = p.samples.eval(t).unwrap();
            crate::model::auxiliary_f(n, &crate::model::CylState::scalar(t, y[0], y[1]), 0)
        };
        assert!(f_at(t_min) < f_at(t_max));
        // and f is monotone along the descent, sampled at a few points
        let mut prev = f_at(t_max + 1e-3);
        for i in 1..=20 {
            let t = t_max + (t_min - t_max) * i as f64 / 21.0;
            let f = f_at(t);
            assert!(f <= prev + 1e-12, "f increased during descent at t={t}");
            prev = f;
        }
    }

    #[test]
    fn falling_zeros_of_w_are_spaced_by_one_period() {
        let n = dim(3);
        let p = profile_from_necksize(n, 0.2, &IntegratorConfig::default()).unwrap();
        let maxima =
            crate::integrator::find_events(&p.samples, |y| y[1], crate::integrator::EventDirection::Falling)
                .unwrap();
        assert!(maxima.len() >= 3);
        for pair in maxima.windows(2) {
            assert!(
                (pair[1] - pair[0] - p.period).abs() <= 1e-6,
                "gap {} vs period {}",
                pair[1] - pair[0],
                p.period
            );
        }
        // maxima really are local maxima of v
        for &t in maxima.iter().take(3) {
            let v0 = p.samples.eval(t).unwrap()[0];
            assert!(v0 > p.samples.eval(t - 0.1).unwrap()[0]);
            assert!(v0 > p.samples.eval(t + 0.1).unwrap()[0]);
        }
    }

    #[test]
    fn grid_of_profiles_is_periodic_and_bounded() {
        let cfg = IntegratorConfig::default();
        for nn in [3u32, 4, 5] {
            let n = dim(nn);
            let eps_cyl = cylinder_necksize(n);
            let lo = (0.01f64).ln();
            let hi = (0.99f64).ln();
            let mut periods = Vec::new();
            for i in 0..6 {
                let f = (lo + (hi - lo) * i as f64 / 5.0).exp();
                let p = profile_from_necksize(n, f * eps_cyl, &cfg).unwrap();
                periods.push((f * eps_cyl, p.period));
            }
            // recorded observation: period looks monotone in eps on this grid
            let increasing = periods.windows(2).all(|w| w[1].1 >= w[0].1);
            let decreasing = periods.windows(2).all(|w| w[1].1 <= w[0].1);
            println!(
                "n={nn}: period vs eps {:?} monotone_up={increasing} monotone_down={decreasing}",
                periods
            );
        }
    }
}
