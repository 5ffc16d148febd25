//! Curvature of `g_f`: closed forms at the normal-form points `(i, u)`, a
//! Ricci route through second derivatives of `log det g_f`, a real
//! Levi-Civita route through Christoffel symbols, and the scan for the
//! `scal < 1` bound of the linear profiles.
//!
//! Components use `∂/∂z = (∂x − i∂y)/2`. The inverse metric is the inverse of
//! the Hermitian matrix `g(∂x_j, ∂x_k) + g(∂y_j, ∂y_k) + i(g(∂x_j, ∂y_k) −
//! g(∂y_j, ∂x_k))`; with these normalisations the scalar curvature is a
//! quarter of the Riemannian one.

use nalgebra::{Matrix2, SMatrix};
use num_complex::Complex64;

use crate::actions::normal_form;
use crate::error::{Error, Result};
use crate::geometry::{metric_matrix, AmbientPoint};
use crate::numerics::{mixed_richardson, second_richardson};
use crate::profile::{g_factor_of, Profile};

/// `R_zz̄`, `R_ww̄`, `R_zw̄`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RicciComponents {
    pub zz: f64,
    pub ww: f64,
    pub zw: Complex64,
}

impl RicciComponents {
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (self.zz - other.zz)
            .abs()
            .max((self.ww - other.ww).abs())
            .max((self.zw - other.zw).norm())
    }
}

/// `g^{zz̄}`, `g^{ww̄}`, `g^{zw̄}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InverseMetricComponents {
    pub zz: f64,
    pub ww: f64,
    pub zw: Complex64,
}

impl InverseMetricComponents {
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (self.zz - other.zz)
            .abs()
            .max((self.ww - other.ww).abs())
            .max((self.zw - other.zw).norm())
    }
}

/// `det g_f = (16/9) y² (f')² (1 − f)²`
pub fn det_metric(p: &AmbientPoint, profile: &Profile) -> f64 {
    let d = profile.at(p.t());
    16.0 / 9.0 * p.y * p.y * d.df * d.df * (1.0 - d.f) * (1.0 - d.f)
}

/// Closed-form inverse metric at `(i, u)`.
pub fn inverse_metric_at_iu(u: f64, profile: &Profile) -> InverseMetricComponents {
    let d = profile.at(u * u);
    let one_minus_f = 1.0 - d.f;
    InverseMetricComponents {
        zz: 1.0 / (2.0 * one_minus_f),
        ww: 3.0 * (one_minus_f + 3.0 * d.df * u * u) / (8.0 * d.df * one_minus_f),
        zw: Complex64::new(0.0, 3.0 * u / (4.0 * one_minus_f)),
    }
}

/// Inverse metric obtained by inverting the complexified real metric at `p`.
pub fn inverse_metric_from_real(p: &AmbientPoint, profile: &Profile) -> Result<InverseMetricComponents> {
    p.check()?;
    let g = metric_matrix(p, profile);
    // real indices of (∂x_j, ∂y_j) for j = z, w
    let idx = [(0, 1), (2, 3)];
    let mut h = Matrix2::<Complex64>::zeros();
    for (j, &(xj, yj)) in idx.iter().enumerate() {
        for (k, &(xk, yk)) in idx.iter().enumerate() {
            h[(j, k)] = Complex64::new(g[(xj, xk)] + g[(yj, yk)], g[(xj, yk)] - g[(yj, xk)]);
        }
    }
    let inv = h.try_inverse().ok_or_else(|| Error::Singular {
        point: p.coords(),
        what: "complexified metric".into(),
    })?;
    Ok(InverseMetricComponents {
        zz: inv[(0, 0)].re,
        ww: inv[(1, 1)].re,
        zw: inv[(0, 1)],
    })
}

/// The displayed Ricci components at `(i, u)`.
pub fn ricci_closed(u: f64, profile: &Profile) -> RicciComponents {
    let d = profile.at(u * u);
    let g = g_factor_of(&d);
    let one_minus_f = 1.0 - d.f;
    let bracket = d.d2f / d.df - d.df / one_minus_f;
    let u2 = u * u;
    RicciComponents {
        zz: 0.5 - 3.0 * u2 * bracket + 4.5 * u2 * u2 * g,
        ww: -2.0 * bracket + 2.0 * u2 * g,
        zw: Complex64::new(0.0, 3.0 * u * bracket - 3.0 * u2 * u * g),
    }
}

/// The displayed scalar curvature formula at `(i, u)`.
///
/// This expression equals `g^{zz̄}R_zz̄ + g^{ww̄}R_ww̄ + 2Re(g^{zw̄}R_zw̄)`,
/// which pairs `g^{zw̄}` with `R_zw̄` instead of `R_wz̄`. It agrees with the
/// trace of the Ricci tensor only on the zero section; see
/// [`scalar_from_components`].
pub fn scalar_closed(u: f64, profile: &Profile) -> f64 {
    let d = profile.at(u * u);
    let g = g_factor_of(&d);
    let one_minus_f = 1.0 - d.f;
    let u2 = u * u;
    1.0 / one_minus_f - 0.75 * d.d2f / (d.df * d.df)
        + 1.5 * u2 / one_minus_f
            * (6.0 * u2 * g
                + 5.5 * (d.df / one_minus_f - d.d2f / d.df)
                + g * one_minus_f / (2.0 * d.df))
}

/// Trace `g^{zz̄}R_zz̄ + g^{ww̄}R_ww̄ + g^{zw̄}R_wz̄ + g^{wz̄}R_zw̄` with
/// `R_wz̄ = conj(R_zw̄)`.
pub fn scalar_from_components(inv: &InverseMetricComponents, ric: &RicciComponents) -> f64 {
    inv.zz * ric.zz + inv.ww * ric.ww + 2.0 * (inv.zw * ric.zw.conj()).re
}

/// Trace of the displayed Ricci components against the displayed inverse.
pub fn scalar_traced(u: f64, profile: &Profile) -> f64 {
    scalar_from_components(&inverse_metric_at_iu(u, profile), &ricci_closed(u, profile))
}

/// `R_jk̄ = −∂_j ∂_k̄ log det g_f` at `(i, u)`, second derivatives by
/// Richardson-refined central differences of `det_metric`.
pub fn ricci_numeric_logdet(u: f64, profile: &Profile, step: f64) -> Result<RicciComponents> {
    if !(step > 0.0 && step <= 1e-2) {
        return Err(Error::Domain(format!("step {step} outside (0, 1e-2]")));
    }
    let base = [0.0, 1.0, u, 0.0];
    let log_det = |c: [f64; 4]| det_metric(&AmbientPoint::from_array(c), profile).ln();
    let at = |offsets: &[(usize, f64)]| {
        let mut c = base;
        for &(axis, h) in offsets {
            c[axis] += h;
        }
        log_det(c)
    };
    let pure = |axis: usize| second_richardson(|s| at(&[(axis, s)]), 0.0, step);
    let mixed = |a: usize, b: usize| mixed_richardson(|da, db| at(&[(a, da), (b, db)]), step);
    let (lxx, lyy, luu, lvv) = (pure(0), pure(1), pure(2), pure(3));
    let (lxu, lyv, lxv, lyu) = (mixed(0, 2), mixed(1, 3), mixed(0, 3), mixed(1, 2));
    Ok(RicciComponents {
        zz: -0.25 * (lxx + lyy),
        ww: -0.25 * (luu + lvv),
        zw: Complex64::new(-0.25 * (lxu + lyv), -0.25 * (lxv - lyu)),
    })
}

/// Riemannian scalar curvature `g^{bc}R_bc` of a metric given in coordinates,
/// with `R_bc = ∂_a Γ^a_bc − ∂_c Γ^a_ab + Γ^a_ad Γ^d_bc − Γ^a_cd Γ^d_ab`.
/// The unit 2-sphere has scalar curvature `+2` in this convention.
///
/// Metric derivatives and Christoffel derivatives both use five-point
/// stencils with step `step / 2`, so the metric is sampled within `2·step`
/// of `p` in each coordinate.
pub fn riemannian_scalar<const N: usize, G>(metric: G, p: [f64; N], step: f64) -> Result<f64>
where
    G: Fn(&[f64; N]) -> SMatrix<f64, N, N>,
{
    let h = 0.5 * step;
    let five_point = |f: &dyn Fn(f64) -> SMatrix<f64, N, N>| {
        (f(h) * 8.0 - f(-h) * 8.0 - f(2.0 * h) + f(-2.0 * h)) / (12.0 * h)
    };
    let shifted = |q: &[f64; N], axis: usize, s: f64| {
        let mut r = *q;
        r[axis] += s;
        r
    };
    let singular = || Error::Singular {
        point: [f64::NAN; 4],
        what: "metric in Levi-Civita pipeline".into(),
    };
    // gamma[a][(b, c)] = Γ^a_bc
    let christoffel = |q: &[f64; N]| -> Result<Vec<SMatrix<f64, N, N>>> {
        let g_inv = metric(q).try_inverse().ok_or_else(singular)?;
        let dg: Vec<SMatrix<f64, N, N>> = (0..N)
            .map(|e| five_point(&|s| metric(&shifted(q, e, s))))
            .collect();
        let mut gamma = vec![SMatrix::<f64, N, N>::zeros(); N];
        for a in 0..N {
            for b in 0..N {
                for c in 0..N {
                    let mut sum = 0.0;
                    for d in 0..N {
                        sum += g_inv[(a, d)] * (dg[b][(d, c)] + dg[c][(d, b)] - dg[d][(b, c)]);
                    }
                    gamma[a][(b, c)] = 0.5 * sum;
                }
            }
        }
        Ok(gamma)
    };
    let gamma = christoffel(&p)?;
    // d_gamma[e][a][(b, c)] = ∂_e Γ^a_bc
    let mut d_gamma = Vec::with_capacity(N);
    for e in 0..N {
        let mut samples = Vec::with_capacity(4);
        for s in [h, -h, 2.0 * h, -2.0 * h] {
            samples.push(christoffel(&shifted(&p, e, s))?);
        }
        let derivative: Vec<SMatrix<f64, N, N>> = (0..N)
            .map(|a| (samples[0][a] * 8.0 - samples[1][a] * 8.0 - samples[2][a] + samples[3][a]) / (12.0 * h))
            .collect();
        d_gamma.push(derivative);
    }
    let g_inv = metric(&p).try_inverse().ok_or_else(singular)?;
    let mut scal = 0.0;
    for b in 0..N {
        for c in 0..N {
            let mut r = 0.0;
            for a in 0..N {
                r += d_gamma[a][a][(b, c)] - d_gamma[c][a][(a, b)];
                for d in 0..N {
                    r += gamma[a][(a, d)] * gamma[d][(b, c)] - gamma[a][(c, d)] * gamma[d][(a, b)];
                }
            }
            scal += g_inv[(b, c)] * r;
        }
    }
    Ok(scal)
}

/// Scalar curvature of `g_f` at `p` from the real Levi-Civita connection,
/// rescaled by `1/4` to the normalisation of [`scalar_closed`].
pub fn scalar_numeric_full(p: &AmbientPoint, profile: &Profile, step: f64) -> Result<f64> {
    p.check()?;
    if !(step > 0.0) || p.y <= 2.0 * step {
        return Err(Error::Domain(format!("step {step} too large for y = {}", p.y)));
    }
    let metric = |c: &[f64; 4]| metric_matrix(&AmbientPoint::from_array(*c), profile);
    Ok(0.25 * riemannian_scalar(metric, p.coords(), step)?)
}

/// Default step for [`scalar_numeric_full`].
pub const FULL_PIPELINE_STEP: f64 = 1e-3;
/// Default step for [`ricci_numeric_logdet`].
pub const LOGDET_STEP: f64 = 1e-3;

/// Outcome of [`bound_scan`].
#[derive(Debug, Clone, PartialEq)]
pub struct BoundScan {
    pub k: f64,
    /// Largest displayed scalar curvature over grid points with `w ≠ 0`.
    pub max: f64,
    pub argmax: AmbientPoint,
    /// Largest traced scalar curvature over the same points.
    pub max_traced: f64,
    /// `max |scal − 1|` over the grid points with `w = 0`.
    pub zero_section_deviation: f64,
    pub points: usize,
    pub pass: bool,
}

/// Evaluates the scalar curvature of the linear profile `f = −kt` at the
/// normal forms of all points `(x + iy, u)` of the grid and checks
/// `scal < 1` off the zero section and `scal = 1` on it.
pub fn bound_scan(k: f64, u_grid: &[f64], y_grid: &[f64], x_grid: &[f64]) -> Result<BoundScan> {
    let profile = Profile::linear(k)?;
    if u_grid.is_empty() || y_grid.is_empty() || x_grid.is_empty() {
        return Err(Error::Domain("empty scan grid".into()));
    }
    let mut max = f64::NEG_INFINITY;
    let mut max_traced = f64::NEG_INFINITY;
    let mut argmax = AmbientPoint { x: 0.0, y: 1.0, u: 0.0, v: 0.0 };
    let mut zero_section_deviation = 0.0f64;
    let mut points = 0;
    for &x in x_grid {
        for &y in y_grid {
            let zero = normal_form(&AmbientPoint::new(x, y, 0.0, 0.0)?)?;
            zero_section_deviation =
                zero_section_deviation.max((scalar_closed(zero.u_norm, &profile) - 1.0).abs());
            for &u in u_grid {
                let p = AmbientPoint::new(x, y, u, 0.0)?;
                if p.on_zero_section() {
                    continue;
                }
                let un = normal_form(&p)?.u_norm;
                let s = scalar_closed(un, &profile);
                if s > max {
                    max = s;
                    argmax = p;
                }
                max_traced = max_traced.max(scalar_traced(un, &profile));
                points += 1;
            }
        }
    }
    Ok(BoundScan {
        k,
        max,
        argmax,
        max_traced,
        zero_section_deviation,
        points,
        pass: max < 1.0 && zero_section_deviation <= 1e-12,
    })
}
