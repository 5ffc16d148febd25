//! Small numerical kernels shared by the geometry modules: finite-difference
//! stencils and adaptive Simpson quadrature with a reusable panel mesh.

use crate::error::{Error, Result};

/// Relative step of the five-point first-derivative stencil.
pub const FIRST_DERIVATIVE_STEP: f64 = 1e-3;
/// Relative step of the seven-point gradient stencil.
pub const GRADIENT_STEP: f64 = 5e-3;

/// Step scaled to the magnitude of the coordinate it perturbs.
#[inline]
pub fn scaled_step(base: f64, coord: f64) -> f64 {
    base * coord.abs().max(1.0)
}

/// Five-point first derivative of a fallible vector- or scalar-valued
/// function at 0, with step `h`.
pub fn five_point<T, F>(mut f: F, h: f64) -> Result<T>
where
    T: Copy + std::ops::Sub<Output = T> + std::ops::Mul<f64, Output = T>,
    F: FnMut(f64) -> Result<T>,
{
    let d1 = f(h)? - f(-h)?;
    let d2 = f(2.0 * h)? - f(-2.0 * h)?;
    Ok(d1 * (8.0 / (12.0 * h)) - d2 * (1.0 / (12.0 * h)))
}

/// Sixth-order (seven-point) first derivative at 0 with step `h`. Used for
/// gradients of scalars that grow polynomially, where a larger step keeps
/// cancellation error small.
pub fn seven_point<T, F>(mut f: F, h: f64) -> Result<T>
where
    T: Copy + std::ops::Add<Output = T> + std::ops::Sub<Output = T> + std::ops::Mul<f64, Output = T>,
    F: FnMut(f64) -> Result<T>,
{
    let d1 = f(h)? - f(-h)?;
    let d2 = f(2.0 * h)? - f(-2.0 * h)?;
    let d3 = f(3.0 * h)? - f(-3.0 * h)?;
    Ok((d1 * 45.0 - d2 * 9.0 + d3) * (1.0 / (60.0 * h)))
}

/// Two-point central difference.
pub fn central<F: FnMut(f64) -> f64>(mut f: F, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Central difference with one Richardson level (five-point stencil).
pub fn central_richardson<F: FnMut(f64) -> f64>(mut f: F, x: f64, h: f64) -> f64 {
    let d1 = f(x + h) - f(x - h);
    let d2 = f(x + 2.0 * h) - f(x - 2.0 * h);
    (8.0 * d1 - d2) / (12.0 * h)
}

/// Pure second derivative, three-point stencil refined by one Richardson level.
pub fn second_richardson<F: FnMut(f64) -> f64>(mut f: F, x: f64, h: f64) -> f64 {
    let f0 = f(x);
    let coarse = (f(x + 2.0 * h) - 2.0 * f0 + f(x - 2.0 * h)) / (4.0 * h * h);
    let fine = (f(x + h) - 2.0 * f0 + f(x - h)) / (h * h);
    (4.0 * fine - coarse) / 3.0
}

/// Mixed second derivative ∂²/∂a∂b with the four-point stencil, refined by
/// one Richardson level. `f(da, db)` evaluates at the offset point.
pub fn mixed_richardson<F: FnMut(f64, f64) -> f64>(mut f: F, h: f64) -> f64 {
    let mut four_point = |s: f64| {
        (f(s, s) - f(s, -s) - f(-s, s) + f(-s, -s)) / (4.0 * s * s)
    };
    let fine = four_point(h);
    let coarse = four_point(2.0 * h);
    (4.0 * fine - coarse) / 3.0
}

/// A panel accepted by the adaptive integrator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Panel {
    pub a: f64,
    pub b: f64,
}

/// Result of an adaptive quadrature: the value and the mesh it settled on.
#[derive(Debug, Clone)]
pub struct Quadrature {
    pub value: f64,
    pub panels: Vec<Panel>,
    pub evaluations: usize,
}

/// Adaptive Simpson quadrature with the usual `|S₂ − S₁| ≤ 15·tol` acceptance
/// and Richardson correction on accepted panels.
#[derive(Debug, Clone, Copy)]
pub struct AdaptiveSimpson {
    pub tol: f64,
    pub max_depth: u32,
}

impl Default for AdaptiveSimpson {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_depth: 48,
        }
    }
}

impl AdaptiveSimpson {
    pub fn new(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }

    /// Integrates `f` over `[a, b]`. An empty interval integrates to zero;
    /// `b < a` yields the negated integral over `[b, a]`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> Result<Quadrature> {
        if a == b {
            return Ok(Quadrature {
                value: 0.0,
                panels: Vec::new(),
                evaluations: 0,
            });
        }
        let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
        let mut panels = Vec::new();
        let mut evaluations = 3;
        let fa = f(lo);
        let fm = f(0.5 * (lo + hi));
        let fb = f(hi);
        let whole = simpson(lo, hi, fa, fm, fb);
        let value = self.recurse(
            &mut f,
            Span { a: lo, b: hi, fa, fm, fb, whole },
            self.tol,
            self.max_depth,
            &mut panels,
            &mut evaluations,
        )?;
        Ok(Quadrature {
            value: sign * value,
            panels,
            evaluations,
        })
    }

    fn recurse<F: FnMut(f64) -> f64>(
        &self,
        f: &mut F,
        s: Span,
        tol: f64,
        depth: u32,
        panels: &mut Vec<Panel>,
        evaluations: &mut usize,
    ) -> Result<f64> {
        let m = 0.5 * (s.a + s.b);
        let flm = f(0.5 * (s.a + m));
        let frm = f(0.5 * (m + s.b));
        *evaluations += 2;
        if !(flm.is_finite() && frm.is_finite()) {
            return Err(Error::Quadrature(format!(
                "non-finite integrand on [{}, {}]",
                s.a, s.b
            )));
        }
        let left = simpson(s.a, m, s.fa, flm, s.fm);
        let right = simpson(m, s.b, s.fm, frm, s.fb);
        let delta = left + right - s.whole;
        if delta.abs() <= 15.0 * tol {
            panels.push(Panel { a: s.a, b: s.b });
            return Ok(left + right + delta / 15.0);
        }
        if depth == 0 {
            return Err(Error::Quadrature(format!(
                "depth limit reached on [{}, {}] with error estimate {:e}",
                s.a,
                s.b,
                delta.abs() / 15.0
            )));
        }
        let l = self.recurse(
            f,
            Span { a: s.a, b: m, fa: s.fa, fm: flm, fb: s.fm, whole: left },
            0.5 * tol,
            depth - 1,
            panels,
            evaluations,
        )?;
        let r = self.recurse(
            f,
            Span { a: m, b: s.b, fa: s.fm, fm: frm, fb: s.fb, whole: right },
            0.5 * tol,
            depth - 1,
            panels,
            evaluations,
        )?;
        Ok(l + r)
    }
}

#[derive(Clone, Copy)]
struct Span {
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

/// Applies the accepted-panel rule (two half Simpsons plus Richardson
/// correction) to one panel.
pub fn panel_rule<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> f64 {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let (flm, frm) = (f(0.5 * (a + m)), f(0.5 * (m + b)));
    let whole = simpson(a, b, fa, fm, fb);
    let halves = simpson(a, m, fa, flm, fm) + simpson(m, b, fm, frm, fb);
    halves + (halves - whole) / 15.0
}

/// Re-evaluates a quadrature on a frozen mesh. Integrals of nearby
/// integrands then share the same discretisation error pattern, which keeps
/// finite differences across them smooth.
pub fn integrate_on_mesh<F: FnMut(f64) -> f64>(mut f: F, panels: &[Panel]) -> f64 {
    panels.iter().map(|p| panel_rule(&mut f, p.a, p.b)).sum()
}
