//! Group actions on `H² × C`: the `SL(2,R)` action
//! `(z, w) ↦ ((az + b)/(cz + d), (cz + d)³ w)`, the fiber rotation, the two
//! reflections `h1(z, w) = (−z̄, w)` and `h2(z, w) = (z, w̄)`, the moment map
//! of the `SL(2,R)` action, orbit normal forms and recovery of isometry
//! parameters from a black-box map.

use std::f64::consts::TAU;

use nalgebra::{Matrix2, Matrix4};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{jacobian, metric_matrix, symplectic_matrix, AmbientPoint, TangentVector};
use crate::hamilton::flow_h1;
use crate::numerics::{scaled_step, seven_point, FIRST_DERIVATIVE_STEP, GRADIENT_STEP};
use crate::profile::Profile;

const DET_TOLERANCE: f64 = 1e-12;

/// An element `(a, b; c, d)` of `SL(2,R)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moebius {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Moebius {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let m = Self { a, b, c, d };
        if (m.det() - 1.0).abs() > DET_TOLERANCE {
            return Err(Error::Domain(format!(
                "matrix ({a}, {b}; {c}, {d}) has determinant {} ≠ 1",
                m.det()
            )));
        }
        Ok(m)
    }

    /// Skips the determinant check; used to build deliberate non-isometries.
    pub fn unchecked(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self { a, b, c, d }
    }

    pub fn identity() -> Self {
        Self::unchecked(1.0, 0.0, 0.0, 1.0)
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn matrix(&self) -> Matrix2<f64> {
        Matrix2::new(self.a, self.b, self.c, self.d)
    }

    pub fn from_matrix(m: &Matrix2<f64>) -> Result<Self> {
        Self::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)])
    }

    pub fn negated(&self) -> Self {
        Self::unchecked(-self.a, -self.b, -self.c, -self.d)
    }

    /// `cz + d`
    pub fn cocycle(&self, z: Complex64) -> Complex64 {
        z * self.c + self.d
    }

    pub fn apply_z(&self, z: Complex64) -> Complex64 {
        (z * self.a + self.b) / self.cocycle(z)
    }

    /// Max entry difference after fixing the sign ambiguity `A ~ −A`.
    pub fn distance_projective(&self, other: &Self) -> f64 {
        let plus = (self.matrix() - other.matrix()).amax();
        let minus = (self.matrix() + other.matrix()).amax();
        plus.min(minus)
    }
}

/// `A ∘ e^{iθ} ∘ h1^{flip1} ∘ h2^{flip2}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsometryElement {
    pub moebius: Moebius,
    pub theta: f64,
    pub flip1: bool,
    pub flip2: bool,
}

impl IsometryElement {
    pub fn new(moebius: Moebius, theta: f64, flip1: bool, flip2: bool) -> Self {
        Self {
            moebius,
            theta: theta.rem_euclid(TAU),
            flip1,
            flip2,
        }
    }

    pub fn identity() -> Self {
        Self::new(Moebius::identity(), 0.0, false, false)
    }
}

/// A traceless real 2×2 matrix, an element of `sl(2,R)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LieAlgebraElement(Matrix2<f64>);

impl LieAlgebraElement {
    pub fn new(m: Matrix2<f64>) -> Result<Self> {
        if m.trace().abs() > 1e-12 {
            return Err(Error::Domain(format!("trace {} ≠ 0", m.trace())));
        }
        Ok(Self(m))
    }

    pub fn from_entries(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        Self::new(Matrix2::new(a, b, c, d))
    }

    /// `diag(1, −1)`
    pub fn hyperbolic() -> Self {
        Self(Matrix2::new(1.0, 0.0, 0.0, -1.0))
    }

    /// `(0, 1; 0, 0)`
    pub fn raising() -> Self {
        Self(Matrix2::new(0.0, 1.0, 0.0, 0.0))
    }

    /// `(0, 0; 1, 0)`
    pub fn lowering() -> Self {
        Self(Matrix2::new(0.0, 0.0, 1.0, 0.0))
    }

    pub fn matrix(&self) -> &Matrix2<f64> {
        &self.0
    }

    /// `exp(sX)`. Since `X² = −det(X)·Id` this is `C(s)·Id + S(s)·X`.
    pub fn exp(&self, s: f64) -> Matrix2<f64> {
        let delta = -self.0.determinant();
        let (c, sn) = if delta > 0.0 {
            let r = delta.sqrt();
            ((r * s).cosh(), (r * s).sinh() / r)
        } else if delta < 0.0 {
            let r = (-delta).sqrt();
            ((r * s).cos(), (r * s).sin() / r)
        } else {
            (1.0, s)
        };
        Matrix2::identity() * c + self.0 * sn
    }
}

pub fn sl2_apply(m: &Moebius, p: &AmbientPoint) -> AmbientPoint {
    let z = p.z();
    let q = m.cocycle(z);
    AmbientPoint::from_complex(m.apply_z(z), q * q * q * p.w())
}

/// `(z, w) ↦ (z, e^{iθ} w)`; the same map as the `H1` flow.
pub fn circle_apply(theta: f64, p: &AmbientPoint) -> AmbientPoint {
    flow_h1(p, theta)
}

/// `h1(z, w) = (−z̄, w)`
pub fn reflect_base(p: &AmbientPoint) -> AmbientPoint {
    AmbientPoint { x: -p.x, ..*p }
}

/// `h2(z, w) = (z, w̄)`
pub fn reflect_fiber(p: &AmbientPoint) -> AmbientPoint {
    AmbientPoint { v: -p.v, ..*p }
}

/// `j(x + iy) = ((x/y, −(x² + y²)/y), (1/y, −x/y))`
pub fn j_map(x: f64, y: f64) -> Result<Matrix2<f64>> {
    if !(y > 0.0) {
        return Err(Error::Domain(format!("j needs y > 0, got {y}")));
    }
    Ok(Matrix2::new(x / y, -(x * x + y * y) / y, 1.0 / y, -x / y))
}

/// The element `Q = ((√y, x/√y), (0, 1/√y))` with `Q·i = z`.
pub fn base_transitive(z: Complex64) -> Result<Moebius> {
    if !(z.im > 0.0) {
        return Err(Error::Domain(format!("{z} is not in the upper half-plane")));
    }
    let r = z.im.sqrt();
    Ok(Moebius::unchecked(r, z.re / r, 0.0, 1.0 / r))
}

/// `⟨μ(z, w), X⟩ = (1 − f(y³|w|²))·tr(j(z) X)`
pub fn moment_map(p: &AmbientPoint, x: &LieAlgebraElement, profile: &Profile) -> Result<f64> {
    p.check()?;
    let j = j_map(p.x, p.y)?;
    Ok((1.0 - profile.at(p.t()).f) * (j * x.matrix()).trace())
}

/// Generator `V_X = d/ds|₀ exp(sX)·p` by a seven-point stencil in `s`.
pub fn infinitesimal_generator(p: &AmbientPoint, x: &LieAlgebraElement) -> Result<TangentVector> {
    p.check()?;
    seven_point(
        |s| {
            let e = x.exp(s);
            Ok(sl2_apply(&Moebius::unchecked(e[(0, 0)], e[(0, 1)], e[(1, 0)], e[(1, 1)]), p).to_vector())
        },
        FIRST_DERIVATIVE_STEP,
    )
}

/// Max-norm residual of `dμ^X − ω(V_X, ·)`, both sides by finite differences.
pub fn moment_residual(p: &AmbientPoint, x: &LieAlgebraElement, profile: &Profile) -> Result<f64> {
    let v = infinitesimal_generator(p, x)?;
    let coords = p.coords();
    let mut dmu = TangentVector::zeros();
    for axis in 0..4 {
        let mut h = scaled_step(GRADIENT_STEP, coords[axis]);
        if axis == 1 {
            h = GRADIENT_STEP * p.y;
        }
        dmu[axis] = seven_point(|k| moment_map(&p.shifted(axis, k), x, profile), h)?;
    }
    let contracted = symplectic_matrix(p, profile).transpose() * v;
    Ok((dmu - contracted).amax())
}

/// Orbit representative `(i, u_norm)` of a point and the element carrying
/// it back: `isometry_apply(element, (i, u_norm, 0)) = p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalForm {
    pub u_norm: f64,
    pub element: IsometryElement,
}

pub fn normal_form(p: &AmbientPoint) -> Result<NormalForm> {
    p.check()?;
    let w = p.w();
    let u_norm = p.y.powf(1.5) * w.norm();
    let theta = if p.on_zero_section() { 0.0 } else { w.arg() };
    Ok(NormalForm {
        u_norm,
        element: IsometryElement::new(base_transitive(p.z())?, theta, false, false),
    })
}

/// Applies `h2`, then `h1`, then the rotation, then the Möbius element.
pub fn isometry_apply(e: &IsometryElement, p: &AmbientPoint) -> AmbientPoint {
    let mut q = *p;
    if e.flip2 {
        q = reflect_fiber(&q);
    }
    if e.flip1 {
        q = reflect_base(&q);
    }
    sl2_apply(&e.moebius, &circle_apply(e.theta, &q))
}

fn pullback_residual<M>(map: M, samples: &[AmbientPoint], form: impl Fn(&AmbientPoint) -> Matrix4<f64>) -> Result<f64>
where
    M: Fn(&AmbientPoint) -> AmbientPoint,
{
    let mut worst = 0.0f64;
    for p in samples {
        p.check()?;
        let image = map(p);
        image.check()?;
        let j = jacobian(&map, p)?;
        let diff = (j.transpose() * form(&image) * j - form(p)).amax();
        worst = worst.max(diff);
    }
    Ok(worst)
}

/// Max over `samples` of `‖e*g_f − g_f‖`.
pub fn isometry_residual(e: &IsometryElement, samples: &[AmbientPoint], profile: &Profile) -> Result<f64> {
    pullback_residual(|q| isometry_apply(e, q), samples, |q| metric_matrix(q, profile))
}

/// Max over `samples` of `‖e*ω_f − ω_f‖`.
pub fn symplectic_residual(e: &IsometryElement, samples: &[AmbientPoint], profile: &Profile) -> Result<f64> {
    pullback_residual(|q| isometry_apply(e, q), samples, |q| symplectic_matrix(q, profile))
}

/// Probe point `(i, 1)` used for orientation and phase read-off.
const PROBE: AmbientPoint = AmbientPoint {
    x: 0.0,
    y: 1.0,
    u: 1.0,
    v: 0.0,
};

const RECOVERY_TOLERANCE: f64 = 1e-6;
const RECOVERY_SAMPLES: usize = 20;

/// Recovers `(A, θ, flip1, flip2)` from a black-box map assumed to be of the
/// form `A ∘ e^{iθ} ∘ h1^a ∘ h2^b`.
///
/// The flips are read from the orientation of the diagonal Jacobian blocks
/// at `(i, 1)`. After undoing them, the image of `i` and the complex
/// derivative of the base map there give `cz + d` at `z = i`, which fixes `A`;
/// the phase left on the probe's fiber coordinate is `θ`. `A` is returned
/// with positive upper-left entry (positive upper-right if that vanishes).
/// The result is checked against the map at 20 seeded points.
pub fn recover_parameters<H>(h: H) -> Result<IsometryElement>
where
    H: Fn(&AmbientPoint) -> AmbientPoint,
{
    let j = jacobian(&h, &PROBE)?;
    let flip1 = j.fixed_view::<2, 2>(0, 0).determinant() < 0.0;
    let flip2 = j.fixed_view::<2, 2>(2, 2).determinant() < 0.0;

    let undo = |q: &AmbientPoint| {
        let mut r = *q;
        if flip1 {
            r = reflect_base(&r);
        }
        if flip2 {
            r = reflect_fiber(&r);
        }
        r
    };
    let g = |q: &AmbientPoint| h(&undo(q));

    let image = g(&PROBE);
    image.check()?;
    let jg = jacobian(g, &PROBE)?;
    // d/dz (az + b)/(cz + d) = (cz + d)⁻²
    let derivative = Complex64::new(jg[(0, 0)], jg[(1, 0)]);
    let mut q = Complex64::new(1.0, 0.0) / derivative.sqrt();
    let zq = image.z() * q;
    let (mut a, mut b, mut c, mut d) = (zq.im, zq.re, q.im, q.re);
    let det = a * d - b * c;
    if !(det > 0.0) {
        return Err(Error::NotCanonicalIsometry { residual: f64::INFINITY });
    }
    let scale = det.sqrt().recip();
    a *= scale;
    b *= scale;
    c *= scale;
    d *= scale;
    q *= scale;
    if a < -1e-9 || (a.abs() <= 1e-9 && b < 0.0) {
        (a, b, c, d) = (-a, -b, -c, -d);
        q = -q;
    }
    let theta = (image.w() / (q * q * q)).arg();
    let element = IsometryElement::new(Moebius::unchecked(a, b, c, d), theta, flip1, flip2);

    let mut rng = ChaCha8Rng::seed_from_u64(0x6d61_7073);
    let mut worst = 0.0f64;
    for _ in 0..RECOVERY_SAMPLES {
        let p = AmbientPoint {
            x: rng.gen_range(-2.0..2.0),
            y: rng.gen_range(0.3..3.0),
            u: rng.gen_range(-1.5..1.5),
            v: rng.gen_range(-1.5..1.5),
        };
        let expected = h(&p);
        let got = isometry_apply(&element, &p);
        for (e, g) in expected.coords().iter().zip(got.coords()) {
            worst = worst.max((e - g).abs() / e.abs().max(1.0));
        }
    }
    if !(worst <= RECOVERY_TOLERANCE) {
        return Err(Error::NotCanonicalIsometry { residual: worst });
    }
    Ok(element)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamilton::h2;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn pt(x: f64, y: f64, u: f64, v: f64) -> AmbientPoint {
        AmbientPoint::new(x, y, u, v).unwrap()
    }

    fn lin1() -> Profile {
        Profile::linear(1.0).unwrap()
    }

    #[test]
    fn sl2_examples() {
        let p = pt(0.3, 1.7, -0.2, 0.9);
        assert!(sl2_apply(&Moebius::identity(), &p).distance(&p) < 1e-15);
        let t = Moebius::new(1.0, 1.0, 0.0, 1.0).unwrap();
        assert!(sl2_apply(&t, &pt(0.0, 1.0, 1.0, 0.0)).distance(&pt(1.0, 1.0, 1.0, 0.0)) < 1e-15);
        let s = Moebius::new(0.0, -1.0, 1.0, 0.0).unwrap();
        assert!(sl2_apply(&s, &pt(0.0, 1.0, 1.0, 0.0)).distance(&pt(0.0, 1.0, 0.0, -1.0)) < 1e-15);
        assert!(Moebius::new(2.0, 0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn circle_examples() {
        let p = pt(0.0, 1.0, 1.0, 0.0);
        assert!(circle_apply(PI, &p).distance(&pt(0.0, 1.0, -1.0, 0.0)) < 1e-15);
        assert!(circle_apply(TAU, &p).distance(&p) < 1e-15);
        let prof = lin1();
        let q = pt(0.4, 1.1, 0.3, -0.6);
        let r = circle_apply(0.77, &q);
        assert!((h2(&r, &prof).unwrap() - h2(&q, &prof).unwrap()).abs() < 1e-12);
        assert!((r.t() - q.t()).abs() < 1e-12);
    }

    #[test]
    fn j_examples() {
        assert_eq!(j_map(0.0, 1.0).unwrap(), Matrix2::new(0.0, -1.0, 1.0, 0.0));
        assert_eq!(j_map(1.0, 1.0).unwrap(), Matrix2::new(1.0, -2.0, 1.0, -1.0));
        let j = j_map(-0.7, 2.3).unwrap();
        assert!((j * j + Matrix2::identity()).amax() < 1e-14);
        assert!(j_map(0.0, 0.0).is_err());
    }

    #[test]
    fn base_transitive_examples() {
        let i = Complex64::new(0.0, 1.0);
        assert_eq!(base_transitive(i).unwrap(), Moebius::identity());
        let q = base_transitive(Complex64::new(1.0, 1.0)).unwrap();
        assert_eq!(q, Moebius::unchecked(1.0, 1.0, 0.0, 1.0));
        let q = base_transitive(Complex64::new(0.0, 2.0)).unwrap();
        assert!((q.a - 2f64.sqrt()).abs() < 1e-15 && (q.d - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((q.apply_z(i) - Complex64::new(0.0, 2.0)).norm() < 1e-15);
        assert!((q.det() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn moment_map_examples() {
        let h = LieAlgebraElement::hyperbolic();
        assert_eq!(moment_map(&pt(0.0, 1.0, 0.3, 0.8), &h, &lin1()).unwrap(), 0.0);
        let p = pt(1.0, 1.0, 1.0, 0.0);
        assert_eq!(moment_map(&p, &h, &lin1()).unwrap(), 4.0);
        assert_eq!(moment_map(&p, &h, &lin1()).unwrap(), h2(&p, &lin1()).unwrap());
        let e = LieAlgebraElement::raising();
        assert_eq!(moment_map(&pt(0.0, 1.0, 1.0, 0.0), &e, &lin1()).unwrap(), 2.0);
    }

    #[test]
    fn moment_residual_examples() {
        let p = pt(1.0, 1.0, 1.0, 0.0);
        let h = LieAlgebraElement::hyperbolic();
        assert!(moment_residual(&p, &h, &lin1()).unwrap() <= 1e-6);
        let v = infinitesimal_generator(&p, &h).unwrap();
        assert!((v - crate::hamilton::x_h2(&p)).amax() < 1e-8, "{v}");
        let quad = Profile::quadratic(1.0).unwrap();
        let r = moment_residual(&pt(0.0, 1.0, 0.5, 0.5), &LieAlgebraElement::raising(), &quad).unwrap();
        assert!(r <= 1e-6, "{r}");
        let zero = LieAlgebraElement::from_entries(0.0, 0.0, 0.0, 0.0).unwrap();
        assert_eq!(moment_residual(&p, &zero, &lin1()).unwrap(), 0.0);
        assert!(LieAlgebraElement::from_entries(1.0, 0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn exponential_matches_series() {
        for x in [
            LieAlgebraElement::hyperbolic(),
            LieAlgebraElement::raising(),
            LieAlgebraElement::from_entries(0.3, -1.2, 0.8, -0.3).unwrap(),
        ] {
            let s = 0.7;
            let mut term = Matrix2::identity();
            let mut sum = Matrix2::identity();
            for n in 1..30 {
                term = term * x.matrix() * (s / n as f64);
                sum += term;
            }
            assert!((x.exp(s) - sum).amax() < 1e-13);
        }
    }

    #[test]
    fn normal_form_examples() {
        let nf = normal_form(&pt(0.0, 1.0, 2.0, 0.0)).unwrap();
        assert_eq!(nf.u_norm, 2.0);
        assert_eq!(nf.element, IsometryElement::identity());
        assert_eq!(normal_form(&pt(1.0, 1.0, 2.0, 0.0)).unwrap().u_norm, 2.0);
        assert!((normal_form(&pt(0.0, 4.0, 0.0, 1.0)).unwrap().u_norm - 8.0).abs() < 1e-14);
        let p = pt(-0.6, 2.2, 0.4, -1.1);
        let nf = normal_form(&p).unwrap();
        let back = isometry_apply(&nf.element, &pt(0.0, 1.0, nf.u_norm, 0.0));
        assert!(back.distance(&p) < 1e-13);
    }

    #[test]
    fn isometry_apply_examples() {
        let base = IsometryElement::new(Moebius::identity(), 0.0, true, false);
        let img = isometry_apply(&base, &pt(1.0, 1.0, 1.0, 1.0));
        assert_eq!(img, pt(-1.0, 1.0, 1.0, 1.0));
        let fiber = IsometryElement::new(Moebius::identity(), 0.0, false, true);
        assert_eq!(isometry_apply(&fiber, &pt(0.0, 1.0, 0.0, 1.0)), pt(0.0, 1.0, 0.0, -1.0));
        let e = IsometryElement::new(Moebius::new(1.0, 1.0, 0.0, 1.0).unwrap(), PI, false, false);
        assert!(isometry_apply(&e, &pt(0.0, 1.0, 1.0, 0.0)).distance(&pt(1.0, 1.0, -1.0, 0.0)) < 1e-15);
    }

    fn samples() -> Vec<AmbientPoint> {
        (0..50)
            .map(|i| {
                let s = i as f64;
                pt((s * 0.37).sin(), 0.5 + (s * 0.13).cos().abs(), (s * 0.71).cos(), (s * 0.29).sin())
            })
            .collect()
    }

    #[test]
    fn orientation_preserving_elements_are_isometries() {
        let a = Moebius::new(1.3, -0.4, 0.5, (1.0 - 0.4 * 0.5) / 1.3).unwrap();
        let e = IsometryElement::new(a, 2.1, false, false);
        assert!(isometry_residual(&e, &samples(), &lin1()).unwrap() <= 1e-7);
        let both = IsometryElement::new(a, 2.1, true, true);
        assert!(isometry_residual(&both, &samples(), &lin1()).unwrap() <= 1e-7);
        assert!(isometry_residual(&IsometryElement::identity(), &samples(), &lin1()).unwrap() <= 1e-9);
    }

    #[test]
    fn non_unimodular_matrix_is_not_an_isometry() {
        let e = IsometryElement::new(Moebius::unchecked(2.0, 0.0, 0.0, 1.0), 0.0, false, false);
        assert!(isometry_residual(&e, &samples(), &lin1()).unwrap() > 1e-2);
    }

    #[test]
    fn single_reflections_do_not_preserve_the_metric() {
        // The cross terms 2f'(v(dx du + dy dv) + u(dy du − dx dv)) change sign
        // under exactly one of the two reflections.
        for (f1, f2) in [(true, false), (false, true)] {
            let e = IsometryElement::new(Moebius::identity(), 0.0, f1, f2);
            assert!(isometry_residual(&e, &samples(), &lin1()).unwrap() > 1e-2);
        }
        // Their composite is anti-holomorphic: it preserves g and reverses ω.
        let both = IsometryElement::new(Moebius::identity(), 0.0, true, true);
        let flipped = |q: &AmbientPoint| isometry_apply(&both, q);
        for p in samples() {
            let j = jacobian(flipped, &p).unwrap();
            let pulled = j.transpose() * symplectic_matrix(&flipped(&p), &lin1()) * j;
            assert!((pulled + symplectic_matrix(&p, &lin1())).amax() < 1e-8);
        }
    }

    #[test]
    fn recover_rotation() {
        let e = recover_parameters(|q| circle_apply(FRAC_PI_2, q)).unwrap();
        assert!(e.moebius.distance_projective(&Moebius::identity()) < 1e-8);
        assert!((e.theta - FRAC_PI_2).abs() < 1e-8);
        assert!(!e.flip1 && !e.flip2);
    }

    #[test]
    fn recover_translation_with_rotation() {
        let t = Moebius::new(1.0, 1.0, 0.0, 1.0).unwrap();
        let e = recover_parameters(|q| sl2_apply(&t, &circle_apply(1.0, q))).unwrap();
        assert!((e.moebius.matrix() - t.matrix()).amax() < 1e-8, "{e:?}");
        assert!((e.theta - 1.0).abs() < 1e-8);
    }

    #[test]
    fn recover_both_flips() {
        let e = recover_parameters(|q| reflect_base(&reflect_fiber(q))).unwrap();
        assert!(e.flip1 && e.flip2);
        assert!(e.moebius.distance_projective(&Moebius::identity()) < 1e-8);
        let circ = (e.theta - 0.0).rem_euclid(TAU);
        assert!(circ.min(TAU - circ) < 1e-8);
    }

    #[test]
    fn recover_prefers_positive_upper_left() {
        let s = Moebius::new(-2.0, 0.5, -1.0, -0.25).unwrap();
        let e = recover_parameters(|q| sl2_apply(&s, q)).unwrap();
        assert!(e.moebius.a > 0.0);
        assert!(e.moebius.distance_projective(&s) < 1e-8);
        // −A acts like A composed with a half-turn of the fiber.
        assert!((e.theta - PI).abs() < 1e-8);
    }

    #[test]
    fn recover_rejects_non_canonical_map() {
        let stretch = |q: &AmbientPoint| AmbientPoint { u: 2.0 * q.u + q.x, ..*q };
        assert!(matches!(
            recover_parameters(stretch),
            Err(Error::NotCanonicalIsometry { .. })
        ));
    }
}
