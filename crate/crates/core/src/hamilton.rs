//! The commuting Hamiltonians `H1 = (2/3) f(t)` and `H2 = 2 (x/y)(1 − f(t))`,
//! their vector fields, Poisson brackets and flows.
//!
//! Hamiltonian vector fields follow `ω(X_H, ·) = dH`. Two routes are
//! provided: the closed forms `X_H1 = u∂v − v∂u`,
//! `X_H2 = 2(x∂x + y∂y) − 3(u∂u + v∂v)`, and a linear solve against `ω_f`
//! using a finite-difference gradient. The second never looks at the first.

use std::fmt;
use std::sync::Arc;

use nalgebra::Vector4;

use crate::error::{Error, Result};
use crate::geometry::{jacobian, symplectic_matrix, AmbientPoint, TangentVector};
use crate::numerics::{scaled_step, seven_point, GRADIENT_STEP};
use crate::profile::Profile;

pub type ScalarField = Arc<dyn Fn(&AmbientPoint) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum Hamiltonian {
    H1,
    H2,
    User { name: String, func: ScalarField },
}

impl fmt::Debug for Hamiltonian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::H1 => write!(f, "H1"),
            Self::H2 => write!(f, "H2"),
            Self::User { name, .. } => write!(f, "User({name})"),
        }
    }
}

impl Hamiltonian {
    pub fn user<F>(name: impl Into<String>, func: F) -> Self
    where
        F: Fn(&AmbientPoint) -> f64 + Send + Sync + 'static,
    {
        Self::User {
            name: name.into(),
            func: Arc::new(func),
        }
    }

    pub fn evaluate(&self, p: &AmbientPoint, profile: &Profile) -> Result<f64> {
        match self {
            Self::H1 => h1(p, profile),
            Self::H2 => h2(p, profile),
            Self::User { name, func } => {
                p.check()?;
                let value = func(p);
                if value.is_finite() {
                    Ok(value)
                } else {
                    Err(Error::Domain(format!("{name} is not finite at {:?}", p.coords())))
                }
            }
        }
    }
}

/// `H1 = (2/3) f(y³|w|²)`
pub fn h1(p: &AmbientPoint, profile: &Profile) -> Result<f64> {
    p.check()?;
    Ok(2.0 / 3.0 * profile.at(p.t()).f)
}

/// `H2 = 2 (x/y)(1 − f(y³|w|²))`
pub fn h2(p: &AmbientPoint, profile: &Profile) -> Result<f64> {
    p.check()?;
    Ok(2.0 * p.x / p.y * (1.0 - profile.at(p.t()).f))
}

pub fn x_h1(p: &AmbientPoint) -> TangentVector {
    Vector4::new(0.0, 0.0, -p.v, p.u)
}

pub fn x_h2(p: &AmbientPoint) -> TangentVector {
    Vector4::new(2.0 * p.x, 2.0 * p.y, -3.0 * p.u, -3.0 * p.v)
}

/// Closed-form Hamiltonian fields; user Hamiltonians are unsupported.
pub fn field_closed_form(p: &AmbientPoint, which: &Hamiltonian) -> Result<TangentVector> {
    p.check()?;
    match which {
        Hamiltonian::H1 => Ok(x_h1(p)),
        Hamiltonian::H2 => Ok(x_h2(p)),
        Hamiltonian::User { name, .. } => Err(Error::Unsupported(format!(
            "no closed-form field for user Hamiltonian {name}"
        ))),
    }
}

/// Seven-point central-difference gradient of `h`.
pub fn gradient(h: &Hamiltonian, p: &AmbientPoint, profile: &Profile) -> Result<Vector4<f64>> {
    let coords = p.coords();
    let mut grad = Vector4::zeros();
    for axis in 0..4 {
        let mut step = scaled_step(GRADIENT_STEP, coords[axis]);
        if axis == 1 {
            // relative in y: stays inside y > 0 and resolves the 1/y scale
            step = GRADIENT_STEP * p.y;
        }
        grad[axis] = seven_point(|k| h.evaluate(&p.shifted(axis, k), profile), step)?;
    }
    Ok(grad)
}

/// Residual tolerance for the solve `ω(X, e_a) = dH(e_a)`.
const SOLVE_RESIDUAL: f64 = 1e-9;

/// Solves `ω(X, ·) = dH` for `X`, i.e. `ωᵀ X = ∇H`.
pub fn field_by_solve(p: &AmbientPoint, h: &Hamiltonian, profile: &Profile) -> Result<TangentVector> {
    p.check()?;
    let grad = gradient(h, p, profile)?;
    let omega_t = symplectic_matrix(p, profile).transpose();
    let x = omega_t.lu().solve(&grad).ok_or_else(|| Error::Singular {
        point: p.coords(),
        what: "symplectic matrix is not invertible".into(),
    })?;
    let residual = (omega_t * x - grad).amax();
    if residual > SOLVE_RESIDUAL * grad.amax().max(1.0) {
        return Err(Error::Singular {
            point: p.coords(),
            what: format!("solve residual {residual:e}"),
        });
    }
    Ok(x)
}

/// `{F, G}(p) = ω_p(X_F, X_G)` with both fields from the linear solve.
pub fn poisson(p: &AmbientPoint, f: &Hamiltonian, g: &Hamiltonian, profile: &Profile) -> Result<f64> {
    let xf = field_by_solve(p, f, profile)?;
    let xg = field_by_solve(p, g, profile)?;
    Ok(xf.dot(&(symplectic_matrix(p, profile) * xg)))
}

/// Exact flow of `X_H1`: rotation of the fiber by `θ`.
pub fn flow_h1(p: &AmbientPoint, theta: f64) -> AmbientPoint {
    let (s, c) = theta.sin_cos();
    AmbientPoint {
        u: p.u * c - p.v * s,
        v: p.u * s + p.v * c,
        ..*p
    }
}

/// Exact flow of `X_H2`: `(z, w) ↦ (e^{2s} z, e^{−3s} w)`.
pub fn flow_h2(p: &AmbientPoint, s: f64) -> AmbientPoint {
    let up = (2.0 * s).exp();
    let down = (-3.0 * s).exp();
    AmbientPoint {
        x: up * p.x,
        y: up * p.y,
        u: down * p.u,
        v: down * p.v,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowResult {
    pub endpoint: AmbientPoint,
    pub steps: usize,
    /// Max-norm difference against the same integration at half the step.
    pub error_estimate: f64,
}

/// Fixed-step classical RK4, recording every step as `(t, point)`.
pub fn rk4_trajectory<F>(p: &AmbientPoint, field: F, duration: f64, steps: usize) -> Result<Vec<(f64, AmbientPoint)>>
where
    F: Fn(&AmbientPoint) -> TangentVector,
{
    p.check()?;
    if steps == 0 {
        return Err(Error::Domain("RK4 needs at least one step".into()));
    }
    let dt = duration / steps as f64;
    let mut out = Vec::with_capacity(steps + 1);
    let mut cur = *p;
    out.push((0.0, cur));
    for n in 0..steps {
        let t = n as f64 * dt;
        let stage = |q: AmbientPoint, frac: f64| -> Result<AmbientPoint> {
            if q.y > 0.0 && q.y.is_finite() {
                Ok(q)
            } else {
                let exit = t + frac * dt * cur.y / (cur.y - q.y);
                Err(Error::DomainExit { exit_time: exit })
            }
        };
        let k1 = field(&cur);
        let k2 = field(&stage(cur.displaced(&(k1 * (0.5 * dt))), 0.5)?);
        let k3 = field(&stage(cur.displaced(&(k2 * (0.5 * dt))), 0.5)?);
        let k4 = field(&stage(cur.displaced(&(k3 * dt)), 1.0)?);
        let next = cur.displaced(&((k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0)));
        cur = stage(next, 1.0)?;
        out.push(((n + 1) as f64 * dt, cur));
    }
    Ok(out)
}

/// Integrates `field` from `p` for time `duration` with RK4; the error
/// estimate compares against a run with twice as many steps.
pub fn integrate<F>(p: &AmbientPoint, field: F, duration: f64, steps: usize) -> Result<FlowResult>
where
    F: Fn(&AmbientPoint) -> TangentVector,
{
    let coarse = rk4_trajectory(p, &field, duration, steps)?;
    let fine = rk4_trajectory(p, &field, duration, 2 * steps)?;
    let endpoint = coarse.last().map(|(_, q)| *q).unwrap_or(*p);
    let refined = fine.last().map(|(_, q)| *q).unwrap_or(*p);
    Ok(FlowResult {
        endpoint,
        steps,
        error_estimate: endpoint.distance(&refined),
    })
}

/// Max over `samples` of the max-norm difference `φ*ω_f − ω_f`.
pub fn symplecto_residual<M>(map: M, samples: &[AmbientPoint], profile: &Profile) -> Result<f64>
where
    M: Fn(&AmbientPoint) -> AmbientPoint,
{
    let mut worst = 0.0f64;
    for p in samples {
        p.check()?;
        let image = map(p);
        image.check()?;
        let j = jacobian(&map, p)?;
        let pulled = j.transpose() * symplectic_matrix(&image, profile) * j;
        let diff = (pulled - symplectic_matrix(p, profile)).amax();
        worst = worst.max(diff);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn lin1() -> Profile {
        Profile::linear(1.0).unwrap()
    }

    fn pt(x: f64, y: f64, u: f64, v: f64) -> AmbientPoint {
        AmbientPoint::new(x, y, u, v).unwrap()
    }

    #[test]
    fn hamiltonian_values() {
        let p = lin1();
        assert_eq!(h1(&pt(0.0, 1.0, 1.0, 0.0), &p).unwrap(), -2.0 / 3.0);
        assert_eq!(h1(&pt(0.0, 1.0, 0.0, 0.0), &Profile::quadratic(3.0).unwrap()).unwrap(), 0.0);
        assert!((h1(&pt(0.0, 2.0, 0.5, 0.0), &p).unwrap() + 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(h2(&pt(0.0, 1.0, 0.4, -2.0), &p).unwrap(), 0.0);
        assert_eq!(h2(&pt(1.0, 1.0, 1.0, 0.0), &p).unwrap(), 4.0);
        assert_eq!(h2(&pt(2.0, 2.0, 0.0, 0.0), &Profile::quadratic(1.0).unwrap()).unwrap(), 2.0);
    }

    #[test]
    fn closed_form_fields() {
        let f = field_closed_form(&pt(0.0, 1.0, 1.0, 0.0), &Hamiltonian::H1).unwrap();
        assert_eq!(f, Vector4::new(0.0, 0.0, 0.0, 1.0));
        let f = field_closed_form(&pt(1.0, 1.0, 1.0, 0.0), &Hamiltonian::H2).unwrap();
        assert_eq!(f, Vector4::new(2.0, 2.0, -3.0, 0.0));
        let f = field_closed_form(&pt(0.0, 1.0, 0.0, 0.0), &Hamiltonian::H1).unwrap();
        assert_eq!(f, Vector4::zeros());
        let user = Hamiltonian::user("x", |p| p.x);
        assert!(matches!(
            field_closed_form(&pt(0.0, 1.0, 0.0, 0.0), &user),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn solved_fields_match_closed_forms() {
        let x = field_by_solve(&pt(0.0, 1.0, 1.0, 0.0), &Hamiltonian::H1, &lin1()).unwrap();
        assert!((x - Vector4::new(0.0, 0.0, 0.0, 1.0)).amax() < 1e-7, "{x}");
        let q = pt(1.0, 2.0, 0.2, 0.4);
        let quad = Profile::quadratic(1.0).unwrap();
        let x = field_by_solve(&q, &Hamiltonian::H2, &quad).unwrap();
        assert!((x - x_h2(&q)).amax() < 1e-6, "{x}");
    }

    #[test]
    fn user_field_satisfies_defining_equation() {
        let p = pt(0.3, 1.2, 0.5, -0.1);
        let user = Hamiltonian::user("x", |q| q.x);
        let x = field_by_solve(&p, &user, &lin1()).unwrap();
        let omega = symplectic_matrix(&p, &lin1());
        let contracted = omega.transpose() * x;
        let dx = Vector4::new(1.0, 0.0, 0.0, 0.0);
        assert!((contracted - dx).amax() <= 1e-9);
    }

    #[test]
    fn poisson_examples() {
        let p = pt(1.0, 1.0, 1.0, 0.0);
        let prof = lin1();
        assert!(poisson(&p, &Hamiltonian::H1, &Hamiltonian::H2, &prof).unwrap().abs() < 1e-8);
        assert!(poisson(&p, &Hamiltonian::H1, &Hamiltonian::H1, &prof).unwrap().abs() < 1e-12);
        let x = Hamiltonian::user("x", |q| q.x);
        let b = poisson(&pt(0.0, 1.0, 1.0, 0.0), &x, &Hamiltonian::H1, &prof).unwrap();
        assert!(b.abs() < 1e-8, "{b}");
    }

    #[test]
    fn exact_flows() {
        let p = pt(0.0, 1.0, 1.0, 0.0);
        let full = flow_h1(&p, 2.0 * PI);
        assert!(full.distance(&p) < 1e-15);
        let quarter = flow_h1(&p, FRAC_PI_2);
        assert!(quarter.distance(&pt(0.0, 1.0, 0.0, 1.0)) < 1e-15);

        let q = flow_h2(&p, 0.5);
        assert!((q.y - std::f64::consts::E).abs() < 1e-15);
        assert!((q.u - (-1.5f64).exp()).abs() < 1e-15);
        let back = flow_h2(&q, -0.5);
        assert!(back.distance(&p) < 1e-15);
    }

    #[test]
    fn flows_conserve_hamiltonians() {
        let prof = Profile::quadratic(1.0).unwrap();
        let p = pt(0.7, 1.3, 0.4, -0.9);
        let (a1, a2) = (h1(&p, &prof).unwrap(), h2(&p, &prof).unwrap());
        for q in [flow_h1(&p, 1.1), flow_h2(&p, 0.8), flow_h2(&p, -0.3)] {
            assert!((h1(&q, &prof).unwrap() - a1).abs() < 1e-10);
            assert!((h2(&q, &prof).unwrap() - a2).abs() < 1e-10);
        }
    }

    #[test]
    fn rk4_against_exact_flows() {
        let p = pt(0.0, 1.0, 1.0, 0.0);
        let r = integrate(&p, x_h2, 0.5, 1000).unwrap();
        assert!(r.endpoint.distance(&flow_h2(&p, 0.5)) < 1e-9);
        let r = integrate(&p, x_h1, 2.0 * PI, 1000).unwrap();
        assert!(r.endpoint.distance(&p) < 1e-8);
        let r = integrate(&p, |_| Vector4::zeros(), 3.0, 10).unwrap();
        assert_eq!(r.endpoint, p);
        assert_eq!(r.error_estimate, 0.0);
    }

    #[test]
    fn rk4_reports_domain_exit() {
        let p = pt(0.0, 1.0, 0.0, 0.0);
        let err = integrate(&p, |_| Vector4::new(0.0, -1.0, 0.0, 0.0), 3.0, 30).unwrap_err();
        match err {
            Error::DomainExit { exit_time } => assert!((exit_time - 1.0).abs() < 0.1, "{exit_time}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn symplectic_maps() {
        let samples: Vec<AmbientPoint> = (0..50)
            .map(|i| {
                let s = i as f64;
                pt((s * 0.37).sin(), 0.5 + (s * 0.13).cos().abs(), (s * 0.71).cos(), (s * 0.29).sin())
            })
            .collect();
        let r = symplecto_residual(|q| flow_h1(q, 1.0), &samples, &lin1()).unwrap();
        assert!(r <= 1e-7, "{r}");
        let quad = Profile::quadratic(1.0).unwrap();
        let r = symplecto_residual(|q| flow_h2(q, 0.3), &samples, &quad).unwrap();
        assert!(r <= 1e-7, "{r}");
        let stretch = |q: &AmbientPoint| AmbientPoint { u: 2.0 * q.u, v: 2.0 * q.v, ..*q };
        let r = symplecto_residual(stretch, &samples, &lin1()).unwrap();
        assert!(r > 1e-2, "{r}");
    }
}
