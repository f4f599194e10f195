//! Domain types, the ball/cylinder transform, right-hand sides, Hamiltonians
//! and the auxiliary functions shared by every other module.
//!
//! The transform is `v_i(t) = r^delta u_i(r)` with `t = -ln r` and
//! `delta = (n-2)/2`; it maps radial fields on the punctured unit ball to
//! curves on the half-cylinder. In those variables the limit system is the
//! autonomous second-order system
//!
//! `v_i'' = delta^2 v_i - (n(n-2)/4) |V|^{4/(n-2)} v_i`.

use crate::error::{Error, Result};

/// Spatial dimension together with the derived constants used everywhere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dimension {
    n: u32,
    delta: f64,
    sigma_sphere: f64,
}

impl Dimension {
    /// Requires `n >= 3`. Perturbed-system features additionally require
    /// `n <= 5`; that is checked where those features are entered.
    pub fn new(n: u32) -> Result<Self> {
        if n < 3 {
            return Err(Error::BadDimension(n));
        }
        let delta = (n as f64 - 2.0) / 2.0;
        Ok(Dimension {
            n,
            delta,
            sigma_sphere: unit_sphere_volume(n),
        })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// `(n - 2) / 2`
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Volume of the unit (n-1)-sphere, `2 pi^{n/2} / Gamma(n/2)`.
    pub fn sigma_sphere(&self) -> f64 {
        self.sigma_sphere
    }

    /// Coupling constant `n(n-2)/4` in front of the nonlinearity.
    pub fn coupling(&self) -> f64 {
        let n = self.n as f64;
        n * (n - 2.0) / 4.0
    }

    /// `|V|^{4/(n-2)}` computed from the squared norm, so the value is 0 at
    /// V = 0 without a derivative singularity for n in {3, 4, 5}.
    pub fn norm_pow(&self, norm_sq: f64) -> f64 {
        match self.n {
            3 => norm_sq * norm_sq,
            4 => norm_sq,
            6 => norm_sq.sqrt(),
            _ => norm_sq.powf(2.0 / (self.n as f64 - 2.0)),
        }
    }
}

/// `Gamma(n/2)` for integer `n >= 1`, by the half-integer recurrence.
fn gamma_half(n: u32) -> f64 {
    if n % 2 == 0 {
        // Gamma(m) = (m-1)!
        let m = n / 2;
        (1..m).map(|k| k as f64).product()
    } else {
        // Gamma(1/2) = sqrt(pi), Gamma(x+1) = x Gamma(x)
        let mut g = std::f64::consts::PI.sqrt();
        let mut x = 0.5;
        while x < n as f64 / 2.0 - 0.25 {
            g *= x;
            x += 1.0;
        }
        g
    }
}

fn unit_sphere_volume(n: u32) -> f64 {
    2.0 * std::f64::consts::PI.powf(n as f64 / 2.0) / gamma_half(n)
}

/// Phase-space point of the 2-component cylindrical system: time `t`,
/// value `V = (v1, v2)` and derivative `W = dV/dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CylState {
    pub t: f64,
    pub v: [f64; 2],
    pub w: [f64; 2],
}

impl CylState {
    pub fn new(t: f64, v: [f64; 2], w: [f64; 2]) -> Self {
        CylState { t, v, w }
    }

    /// Scalar state embedded on the first coordinate ray.
    pub fn scalar(t: f64, v: f64, w: f64) -> Self {
        CylState {
            t,
            v: [v, 0.0],
            w: [w, 0.0],
        }
    }

    pub fn norm_v(&self) -> f64 {
        self.norm_v_sq().sqrt()
    }

    pub fn norm_v_sq(&self) -> f64 {
        self.v[0] * self.v[0] + self.v[1] * self.v[1]
    }

    pub fn norm_w_sq(&self) -> f64 {
        self.w[0] * self.w[0] + self.w[1] * self.w[1]
    }

    /// Flat layout `[v1, v2, w1, w2]` used by the integrator.
    pub fn to_array(&self) -> [f64; 4] {
        [self.v[0], self.v[1], self.w[0], self.w[1]]
    }

    pub fn from_slice(t: f64, y: &[f64]) -> Self {
        CylState {
            t,
            v: [y[0], y[1]],
            w: [y[2], y[3]],
        }
    }
}

/// Radial field data at a single radius: values and radial derivatives of
/// both components. Sampled and analytic inputs share this representation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialField {
    pub u: [f64; 2],
    pub du_dr: [f64; 2],
}

/// Unit 2-vector in the closed positive quadrant, with its orthogonal
/// companion `lambda_bar = (-lambda_2, lambda_1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction {
    lambda: [f64; 2],
    lambda_bar: [f64; 2],
}

impl Direction {
    /// Normalizes the input. Components may be negative only by roundoff
    /// (within 1e-9), in which case they are clamped to zero.
    pub fn new(l1: f64, l2: f64) -> Result<Self> {
        let norm = (l1 * l1 + l2 * l2).sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::ZeroDirection);
        }
        let mut lambda = [l1 / norm, l2 / norm];
        for c in &mut lambda {
            if *c < 0.0 {
                if *c < -1e-9 {
                    return Err(Error::DirectionOutsideQuadrant(l1, l2));
                }
                *c = 0.0;
            }
        }
        // renormalize after clamping
        let norm = (lambda[0] * lambda[0] + lambda[1] * lambda[1]).sqrt();
        lambda = [lambda[0] / norm, lambda[1] / norm];
        Ok(Direction {
            lambda,
            lambda_bar: [-lambda[1], lambda[0]],
        })
    }

    pub fn lambda(&self) -> [f64; 2] {
        self.lambda
    }

    pub fn lambda_bar(&self) -> [f64; 2] {
        self.lambda_bar
    }

    /// Quotient `lambda_1 / lambda_2` where `lambda_2 > 0`.
    pub fn eta(&self) -> Option<f64> {
        (self.lambda[1] > 0.0).then(|| self.lambda[0] / self.lambda[1])
    }
}

/// Transport a radial field at radius `r` to the cylinder.
///
/// `t = -ln r`, `v_i = r^delta u_i`, `w_i = -r^{delta+1} u_i' - delta r^delta u_i`.
pub fn ball_to_cyl(n: Dimension, r: f64, field: RadialField) -> Result<CylState> {
    if !(r > 0.0) {
        return Err(Error::NonpositiveRadius(r));
    }
    let d = n.delta();
    let rd = r.powf(d);
    let mut v = [0.0; 2];
    let mut w = [0.0; 2];
    for i in 0..2 {
        v[i] = rd * field.u[i];
        w[i] = -r * rd * field.du_dr[i] - d * rd * field.u[i];
    }
    Ok(CylState { t: -r.ln(), v, w })
}

/// Inverse of [`ball_to_cyl`]; round-trips within 1e-12.
pub fn cyl_to_ball(n: Dimension, state: &CylState) -> (f64, RadialField) {
    let r = (-state.t).exp();
    let d = n.delta();
    let rd = r.powf(d);
    let mut u = [0.0; 2];
    let mut du_dr = [0.0; 2];
    for i in 0..2 {
        u[i] = state.v[i] / rd;
        du_dr[i] = -(state.w[i] + d * state.v[i]) / (r * rd);
    }
    (r, RadialField { u, du_dr })
}

/// Right-hand side of the limit system on the flat layout `[v1, v2, w1, w2]`.
pub fn limit_rhs_flat(n: Dimension, y: &[f64], dy: &mut [f64]) {
    let d2 = n.delta() * n.delta();
    let c = n.coupling();
    let q = n.norm_pow(y[0] * y[0] + y[1] * y[1]);
    dy[0] = y[2];
    dy[1] = y[3];
    dy[2] = d2 * y[0] - c * q * y[0];
    dy[3] = d2 * y[1] - c * q * y[1];
}

/// Derivative `(dV/dt, dW/dt)` of the limit system at a state.
pub fn limit_rhs(n: Dimension, state: &CylState) -> ([f64; 2], [f64; 2]) {
    let y = state.to_array();
    let mut dy = [0.0; 4];
    limit_rhs_flat(n, &y, &mut dy);
    ([dy[0], dy[1]], [dy[2], dy[3]])
}

/// Shared energy kernel on squared norms: `|W|^2 - delta^2 |V|^2 + delta^2 |V|^{2n/(n-2)}`.
///
/// `|V|^{2n/(n-2)} = |V|^2 * |V|^{4/(n-2)}`, so both Hamiltonian
/// normalizations evaluate the same expression and the factor-2 relation
/// between them is exact.
fn energy_kernel(n: Dimension, v_sq: f64, w_sq: f64) -> f64 {
    let d2 = n.delta() * n.delta();
    w_sq - d2 * v_sq + d2 * v_sq * n.norm_pow(v_sq)
}

/// Hamiltonian energy of the coupled system,
/// `H = (|W|^2 - delta^2 |V|^2 + delta^2 |V|^{2n/(n-2)}) / 2`.
///
/// Constant along exact solutions of [`limit_rhs`]. This is the
/// normalization tied to the Pohozaev integral: `P(r, U) = sigma_{n-1} H`.
pub fn hamiltonian(n: Dimension, state: &CylState) -> f64 {
    0.5 * energy_kernel(n, state.norm_v_sq(), state.norm_w_sq())
}

/// Scalar Fowler Hamiltonian without the 1/2 factor,
/// `H = w^2 - delta^2 v^2 + delta^2 v^{2n/(n-2)}`.
///
/// For a scalar state embedded on a coordinate ray this equals exactly
/// twice [`hamiltonian`].
pub fn scalar_hamiltonian(n: Dimension, v: f64, w: f64) -> f64 {
    energy_kernel(n, v * v, w * w)
}

/// Auxiliary function
/// `f_i = -(v_i')^2/2 + (delta^2/2) v_i^2 - (delta^2/2) v_i^{2n/(n-2)}`.
///
/// Along exact solutions its monotonicity matches the monotonicity of `v_i`.
pub fn auxiliary_f(n: Dimension, state: &CylState, i: usize) -> f64 {
    assert!(i < 2, "component index must be 0 or 1");
    let d2 = n.delta() * n.delta();
    let v = state.v[i];
    let w = state.w[i];
    let v_sq = v * v;
    -0.5 * w * w + 0.5 * d2 * v_sq - 0.5 * d2 * v_sq * n.norm_pow(v_sq)
}
