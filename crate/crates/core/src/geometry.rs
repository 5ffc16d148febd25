//! The metric `g_f`, the 2-form `ω_f` and the complex structure `I` on
//! `H² × C` as 4×4 matrices in the basis `(∂x, ∂y, ∂u, ∂v)`, with numerical
//! checks of the pseudo-Kähler identities and finite-difference pullbacks.

use nalgebra::{Matrix4, SymmetricEigen, Vector4};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{five_point, scaled_step, FIRST_DERIVATIVE_STEP};
use crate::profile::Profile;

/// A point `(z, w) = (x + iy, u + iv)` of `H² × C`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmbientPoint {
    pub x: f64,
    pub y: f64,
    pub u: f64,
    pub v: f64,
}

pub type TangentVector = Vector4<f64>;

impl AmbientPoint {
    pub fn new(x: f64, y: f64, u: f64, v: f64) -> Result<Self> {
        let p = Self { x, y, u, v };
        p.check()?;
        Ok(p)
    }

    pub fn from_complex(z: Complex64, w: Complex64) -> Self {
        Self {
            x: z.re,
            y: z.im,
            u: w.re,
            v: w.im,
        }
    }

    pub fn from_array(c: [f64; 4]) -> Self {
        Self {
            x: c[0],
            y: c[1],
            u: c[2],
            v: c[3],
        }
    }

    /// Fails unless `y > 0` and all coordinates are finite.
    pub fn check(&self) -> Result<()> {
        if !self.coords().iter().all(|c| c.is_finite()) {
            return Err(Error::Domain(format!("non-finite point {:?}", self.coords())));
        }
        if self.y <= 0.0 {
            return Err(Error::Domain(format!(
                "point {:?} is outside the upper half-plane (y ≤ 0)",
                self.coords()
            )));
        }
        Ok(())
    }

    pub fn coords(&self) -> [f64; 4] {
        [self.x, self.y, self.u, self.v]
    }

    pub fn to_vector(&self) -> Vector4<f64> {
        Vector4::new(self.x, self.y, self.u, self.v)
    }

    pub fn z(&self) -> Complex64 {
        Complex64::new(self.x, self.y)
    }

    pub fn w(&self) -> Complex64 {
        Complex64::new(self.u, self.v)
    }

    /// `t = y³ |w|²`, the argument at which the profile is evaluated.
    pub fn t(&self) -> f64 {
        self.y.powi(3) * (self.u * self.u + self.v * self.v)
    }

    pub fn on_zero_section(&self) -> bool {
        self.u == 0.0 && self.v == 0.0
    }

    pub(crate) fn shifted(&self, axis: usize, h: f64) -> Self {
        let mut c = self.coords();
        c[axis] += h;
        Self::from_array(c)
    }

    pub(crate) fn displaced(&self, d: &Vector4<f64>) -> Self {
        Self::from_array([self.x + d[0], self.y + d[1], self.u + d[2], self.v + d[3]])
    }

    /// Max-norm coordinate distance.
    pub fn distance(&self, other: &Self) -> f64 {
        self.coords()
            .iter()
            .zip(other.coords())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameKind {
    Metric,
    Symplectic,
    ComplexStructure,
    Generic,
}

/// A (0,2)- or (1,1)-tensor at a point, as a matrix in `(∂x, ∂y, ∂u, ∂v)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameMatrix {
    pub matrix: Matrix4<f64>,
    pub kind: FrameKind,
}

impl FrameMatrix {
    pub fn new(matrix: Matrix4<f64>, kind: FrameKind) -> Self {
        Self { matrix, kind }
    }

    pub fn entry(&self, a: usize, b: usize) -> f64 {
        self.matrix[(a, b)]
    }

    /// `α(X, Y) = Xᵀ M Y` for bilinear kinds.
    pub fn pair(&self, x: &TangentVector, y: &TangentVector) -> f64 {
        x.dot(&(self.matrix * y))
    }

    /// `M X` for endomorphism kinds.
    pub fn apply(&self, x: &TangentVector) -> TangentVector {
        self.matrix * x
    }

    /// Largest absolute entry of the difference.
    pub fn max_abs_diff(&self, other: &FrameMatrix) -> f64 {
        max_abs(&(self.matrix - other.matrix))
    }
}

pub(crate) fn max_abs(m: &Matrix4<f64>) -> f64 {
    m.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

fn require_upper_half(p: &AmbientPoint) -> Result<()> {
    if p.y > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("y = {} ≤ 0", p.y)))
    }
}

/// The pseudo-Kähler metric `g_f` at `p`.
pub fn metric(p: &AmbientPoint, profile: &Profile) -> Result<FrameMatrix> {
    require_upper_half(p)?;
    Ok(FrameMatrix::new(metric_matrix(p, profile), FrameKind::Metric))
}

pub(crate) fn metric_matrix(p: &AmbientPoint, profile: &Profile) -> Matrix4<f64> {
    let AmbientPoint { y, u, v, .. } = *p;
    let d = profile.at(p.t());
    let (f, df) = (d.f, d.df);
    let y2 = y * y;
    let y3 = y2 * y;
    let horizontal = (1.0 - f + 3.0 * (u * u + v * v) * y3 * df) / y2;
    let a = 2.0 * df * v * y2;
    let b = 2.0 * df * u * y2;
    let vertical = 4.0 / 3.0 * df * y3;
    #[rustfmt::skip]
    let m = Matrix4::new(
        horizontal, 0.0,        a,        -b,
        0.0,        horizontal, b,         a,
        a,          b,          vertical,  0.0,
        -b,         a,          0.0,       vertical,
    );
    m
}

/// The symplectic form `ω_f` at `p`, `ω_ab = ω(e_a, e_b)`.
pub fn symplectic(p: &AmbientPoint, profile: &Profile) -> Result<FrameMatrix> {
    require_upper_half(p)?;
    Ok(FrameMatrix::new(symplectic_matrix(p, profile), FrameKind::Symplectic))
}

pub(crate) fn symplectic_matrix(p: &AmbientPoint, profile: &Profile) -> Matrix4<f64> {
    let AmbientPoint { y, u, v, .. } = *p;
    let d = profile.at(p.t());
    let (f, df) = (d.f, d.df);
    let y2 = y * y;
    let y3 = y2 * y;
    let mut m = Matrix4::zeros();
    m[(0, 1)] = (-1.0 + f - 3.0 * df * y3 * (u * u + v * v)) / y2;
    m[(2, 3)] = -4.0 / 3.0 * df * y3;
    m[(0, 2)] = -2.0 * y2 * df * u;
    m[(1, 3)] = -2.0 * y2 * df * u;
    m[(2, 1)] = -2.0 * y2 * df * v;
    m[(3, 0)] = 2.0 * y2 * df * v;
    m - m.transpose()
}

/// The complex structure `I`, constant in these coordinates.
pub fn complex_structure(_p: &AmbientPoint) -> FrameMatrix {
    #[rustfmt::skip]
    let m = Matrix4::new(
        0.0, -1.0, 0.0,  0.0,
        1.0,  0.0, 0.0,  0.0,
        0.0,  0.0, 0.0, -1.0,
        0.0,  0.0, 1.0,  0.0,
    );
    FrameMatrix::new(m, FrameKind::ComplexStructure)
}

/// Max-norm residuals of the pseudo-Kähler identities at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompatibilityResiduals {
    /// `I² + Id`
    pub complex_square: f64,
    /// `g(I·, I·) − g`
    pub metric_invariance: f64,
    /// `ω(·,·) − g(·, I·)`
    pub fundamental_form: f64,
    /// `(positive, negative)` eigenvalue counts of `g`.
    pub signature: (usize, usize),
    /// `|pos − 2| + |neg − 2|`
    pub signature_defect: usize,
}

impl CompatibilityResiduals {
    pub fn max_algebraic(&self) -> f64 {
        self.complex_square
            .max(self.metric_invariance)
            .max(self.fundamental_form)
    }
}

pub fn compatibility_residuals(
    p: &AmbientPoint,
    profile: &Profile,
) -> Result<CompatibilityResiduals> {
    let g = metric(p, profile)?.matrix;
    let w = symplectic(p, profile)?.matrix;
    let i = complex_structure(p).matrix;
    let complex_square = max_abs(&(i * i + Matrix4::identity()));
    let metric_invariance = max_abs(&(i.transpose() * g * i - g));
    let fundamental_form = max_abs(&(w - g * i));
    let signature = signature_of(&g);
    let signature_defect = signature.0.abs_diff(2) + signature.1.abs_diff(2);
    Ok(CompatibilityResiduals {
        complex_square,
        metric_invariance,
        fundamental_form,
        signature,
        signature_defect,
    })
}

/// `(positive, negative)` eigenvalue counts of a symmetric matrix.
pub fn signature_of(m: &Matrix4<f64>) -> (usize, usize) {
    let eig = SymmetricEigen::new(*m);
    let pos = eig.eigenvalues.iter().filter(|e| **e > 0.0).count();
    let neg = eig.eigenvalues.iter().filter(|e| **e < 0.0).count();
    (pos, neg)
}

const DOMEGA_COMPONENTS: [(usize, usize, usize); 4] = [(0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)];

/// Max over the four independent components of `dα` for a 2-form field
/// `α`, by central differences of its matrix entries with step
/// `step·max(1, |coordinate|)`. With `richardson` each derivative uses the
/// five-point stencil instead.
pub fn exterior_derivative_residual<F>(
    p: &AmbientPoint,
    form: F,
    step: f64,
    richardson: bool,
) -> Result<f64>
where
    F: Fn(&AmbientPoint) -> Result<Matrix4<f64>>,
{
    let coords = p.coords();
    let mut partials = [Matrix4::zeros(); 4];
    for (axis, slot) in partials.iter_mut().enumerate() {
        let h = scaled_step(step, coords[axis]);
        let at = |s: f64| -> Result<Matrix4<f64>> {
            let q = p.shifted(axis, s);
            q.check()?;
            form(&q)
        };
        *slot = if richardson {
            (8.0 * (at(h)? - at(-h)?) - (at(2.0 * h)? - at(-2.0 * h)?)) / (12.0 * h)
        } else {
            (at(h)? - at(-h)?) / (2.0 * h)
        };
    }
    Ok(DOMEGA_COMPONENTS
        .iter()
        .map(|&(a, b, c)| {
            (partials[a][(b, c)] - partials[b][(a, c)] + partials[c][(a, b)]).abs()
        })
        .fold(0.0, f64::max))
}

/// `dω_f` residual at `p` by plain central differences.
pub fn d_omega_residual(p: &AmbientPoint, profile: &Profile, step: f64) -> Result<f64> {
    if !(p.y > step) {
        return Err(Error::Domain(format!("need y > step, got y = {}, step = {step}", p.y)));
    }
    exterior_derivative_residual(p, |q| Ok(symplectic_matrix(q, profile)), step, false)
}

/// `dω_f` residual with one Richardson level.
pub fn d_omega_residual_richardson(p: &AmbientPoint, profile: &Profile, step: f64) -> Result<f64> {
    if !(p.y > 2.0 * step * p.y.max(1.0)) {
        return Err(Error::Domain(format!("need y > 2·step, got y = {}, step = {step}", p.y)));
    }
    exterior_derivative_residual(p, |q| Ok(symplectic_matrix(q, profile)), step, true)
}

/// Five-point Jacobian of a point map; column `j` is `∂φ/∂x_j`.
pub fn jacobian<M>(map: M, p: &AmbientPoint) -> Result<Matrix4<f64>>
where
    M: Fn(&AmbientPoint) -> AmbientPoint,
{
    let coords = p.coords();
    let mut j = Matrix4::zeros();
    for (axis, &c) in coords.iter().enumerate() {
        let mut h = scaled_step(FIRST_DERIVATIVE_STEP, c);
        if axis == 1 {
            h = FIRST_DERIVATIVE_STEP * p.y;
        }
        let col = five_point(
            |k| {
                let q = p.shifted(axis, k);
                q.check()?;
                let image = map(&q);
                image.check()?;
                Ok(image.to_vector())
            },
            h,
        )?;
        j.set_column(axis, &col);
    }
    Ok(j)
}

/// `(φ*α)_p = Jᵀ α_{φ(p)} J` with `J` the finite-difference Jacobian of `φ`.
pub fn pullback<M, F>(map: M, p: &AmbientPoint, form: F) -> Result<FrameMatrix>
where
    M: Fn(&AmbientPoint) -> AmbientPoint,
    F: Fn(&AmbientPoint) -> Result<FrameMatrix>,
{
    p.check()?;
    let image = map(p);
    image.check()?;
    let j = jacobian(&map, p)?;
    let alpha = form(&image)?;
    Ok(FrameMatrix::new(j.transpose() * alpha.matrix * j, alpha.kind))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn lin(k: f64) -> Profile {
        Profile::linear(k).unwrap()
    }

    fn pt(x: f64, y: f64, u: f64, v: f64) -> AmbientPoint {
        AmbientPoint::new(x, y, u, v).unwrap()
    }

    fn random_points(n: usize, seed: u64) -> Vec<AmbientPoint> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                pt(
                    rng.gen_range(-2.0..2.0),
                    rng.gen_range(0.3..3.0),
                    rng.gen_range(-1.5..1.5),
                    rng.gen_range(-1.5..1.5),
                )
            })
            .collect()
    }

    #[test]
    fn metric_at_base_point() {
        let g = metric(&pt(0.0, 1.0, 0.0, 0.0), &lin(1.0)).unwrap();
        let expected = Matrix4::from_diagonal(&Vector4::new(1.0, 1.0, -4.0 / 3.0, -4.0 / 3.0));
        assert!(max_abs(&(g.matrix - expected)) < 1e-15);
    }

    #[test]
    fn metric_at_unit_fiber_point() {
        let g = metric(&pt(0.0, 1.0, 1.0, 0.0), &lin(1.0)).unwrap();
        assert_eq!(g.entry(0, 0), -1.0);
        assert_eq!(g.entry(2, 2), -4.0 / 3.0);
        assert_eq!(g.entry(0, 2), 0.0);
        assert_eq!(g.entry(0, 3), 2.0);
        assert_eq!(g.entry(1, 2), -2.0);
    }

    #[test]
    fn symplectic_examples() {
        let w = symplectic(&pt(0.0, 1.0, 0.0, 0.0), &lin(1.0)).unwrap();
        assert_eq!(w.entry(0, 1), -1.0);
        assert_eq!(w.entry(2, 3), 4.0 / 3.0);
        assert_eq!(w.entry(0, 2), 0.0);
        assert_eq!(w.entry(1, 3), 0.0);

        // ω(∂x,∂y) = −1 + f − 3f'y³u² = −1 − 1 + 3 at (i, 1)
        let w = symplectic(&pt(0.0, 1.0, 1.0, 0.0), &lin(1.0)).unwrap();
        assert_eq!(w.entry(0, 1), 1.0);
        assert_eq!(w.entry(2, 3), 4.0 / 3.0);
        assert_eq!(w.entry(0, 2), 2.0);
        assert_eq!(w.entry(1, 3), 2.0);
    }

    #[test]
    fn symmetry_and_antisymmetry() {
        for p in random_points(100, 1) {
            let g = metric(&p, &lin(1.3)).unwrap().matrix;
            let w = symplectic(&p, &lin(1.3)).unwrap().matrix;
            assert_eq!(g, g.transpose());
            assert_eq!(w, -w.transpose());
        }
    }

    #[test]
    fn complex_structure_examples() {
        let i = complex_structure(&pt(0.0, 1.0, 0.0, 0.0));
        assert_eq!(i.matrix * i.matrix, -Matrix4::identity());
        let e_x = Vector4::new(1.0, 0.0, 0.0, 0.0);
        assert_eq!(i.apply(&e_x), Vector4::new(0.0, 1.0, 0.0, 0.0));
    }

    #[test]
    fn non_positive_y_is_rejected() {
        let p = AmbientPoint::from_array([0.0, -1.0, 0.0, 0.0]);
        assert!(matches!(metric(&p, &lin(1.0)), Err(Error::Domain(_))));
        assert!(matches!(symplectic(&p, &lin(1.0)), Err(Error::Domain(_))));
        assert!(AmbientPoint::new(0.0, 0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn compatibility_at_examples() {
        let r = compatibility_residuals(&pt(0.0, 1.0, 0.0, 0.0), &lin(1.0)).unwrap();
        assert!(r.max_algebraic() <= 1e-12);
        assert_eq!(r.signature, (2, 2));
        let r = compatibility_residuals(&pt(1.0, 2.0, 0.3, -0.7), &lin(2.0)).unwrap();
        assert!(r.max_algebraic() <= 1e-10, "{r:?}");
        assert_eq!(r.signature_defect, 0);
    }

    #[test]
    fn neutral_signature_at_random_points() {
        for profile in [lin(1.0), Profile::quadratic(1.0).unwrap()] {
            for p in random_points(100, 2) {
                let r = compatibility_residuals(&p, &profile).unwrap();
                assert_eq!(r.signature, (2, 2), "at {p:?}");
            }
        }
    }

    #[test]
    fn closedness_examples() {
        let r = d_omega_residual(&pt(0.0, 1.0, 0.0, 0.0), &lin(1.0), 1e-5).unwrap();
        assert!(r <= 1e-8, "{r}");
        let q = Profile::quadratic(1.0).unwrap();
        let r = d_omega_residual(&pt(2.0, 1.0, 1.0, 1.0), &q, 1e-5).unwrap();
        assert!(r <= 1e-7, "{r}");
    }

    #[test]
    fn perturbed_form_is_detected() {
        let profile = lin(1.0);
        let perturbed = |q: &AmbientPoint| -> Result<Matrix4<f64>> {
            let mut m = symplectic_matrix(q, &profile);
            let df = profile.at(q.t()).df;
            m[(2, 3)] = -4.0 / 3.0 * df * q.y * q.y;
            m[(3, 2)] = -m[(2, 3)];
            Ok(m)
        };
        let r = exterior_derivative_residual(&pt(0.0, 1.0, 0.0, 0.0), perturbed, 1e-5, false).unwrap();
        assert!(r > 1e-2, "{r}");
    }

    #[test]
    fn pullback_examples() {
        let profile = lin(1.0);
        let p = pt(0.0, 1.0, 1.0, 0.0);
        let omega = |q: &AmbientPoint| symplectic(q, &profile);
        let same = pullback(|q: &AmbientPoint| *q, &p, omega).unwrap();
        assert!(same.max_abs_diff(&omega(&p).unwrap()) < 1e-10);

        let quarter_turn = |q: &AmbientPoint| AmbientPoint {
            u: -q.v,
            v: q.u,
            ..*q
        };
        let rotated = pullback(quarter_turn, &p, omega).unwrap();
        assert!(rotated.max_abs_diff(&omega(&p).unwrap()) < 1e-8);

        let scale = |q: &AmbientPoint| AmbientPoint {
            x: 2.0 * q.x,
            y: 2.0 * q.y,
            ..*q
        };
        let scaled = pullback(scale, &p, omega).unwrap();
        assert!(scaled.max_abs_diff(&omega(&p).unwrap()) > 1e-3);
    }

    #[test]
    fn pullback_reports_domain_exit() {
        let profile = lin(1.0);
        let flip = |q: &AmbientPoint| AmbientPoint { y: -q.y, ..*q };
        let err = pullback(flip, &pt(0.0, 1.0, 1.0, 0.0), |q| symplectic(q, &profile)).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }
}
