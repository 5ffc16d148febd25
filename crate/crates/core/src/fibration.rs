//! The Lagrangian fibration `H = (H1, H2)` over `B = {b1 < 0} × R`, its
//! sections, the action-angle chart built from a section, and the period
//! lattice of the fibers.
//!
//! The naive section `σ0(b) = (x, 1, √t*, 0)` with `f(t*) = (3/2) b1` and
//! `x = b2 / (2(1 − (3/2) b1))` is not Lagrangian. It is corrected by flowing
//! along `X_H2` for time `a2(b) = −∫_{b1_ref}^{b1} h(τ, b2) dτ`, where
//! `h = σ0*ω(∂b1, ∂b2)` is the defect; the corrected section pulls `ω` back
//! to zero, and the chart `(θ, H1, s, H2) ↦ φ_s^{H2} ∘ φ_θ^{H1}(σ(H1, H2))`
//! is then a Darboux chart.

use std::cell::RefCell;
use std::f64::consts::TAU;

use nalgebra::{Matrix4, Vector2, Vector4};

use crate::error::{Error, Result};
use crate::geometry::{symplectic_matrix, AmbientPoint};
use crate::hamilton::{flow_h1, flow_h2, h1, h2};
use crate::numerics::{central_richardson, integrate_on_mesh, panel_rule, AdaptiveSimpson, Panel};
use crate::profile::Profile;

/// A point `(b1, b2)` of the base, `b1 < 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasePoint {
    pub b1: f64,
    pub b2: f64,
}

impl BasePoint {
    pub fn new(b1: f64, b2: f64) -> Result<Self> {
        let b = Self { b1, b2 };
        b.check()?;
        Ok(b)
    }

    pub fn check(&self) -> Result<()> {
        if !(self.b1 < 0.0) || !self.b2.is_finite() {
            return Err(Error::Domain(format!(
                "base point ({}, {}) needs b1 < 0",
                self.b1, self.b2
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SectionKind {
    Naive,
    Lagrangianized,
}

/// Which section to use and, for the corrected one, the reference level
/// `b1_ref` where the correction vanishes and the quadrature tolerance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectionHandle {
    pub kind: SectionKind,
    pub b1_ref: f64,
    pub tol: f64,
}

pub const DEFAULT_B1_REF: f64 = -1.0;
pub const DEFAULT_QUADRATURE_TOL: f64 = 1e-9;

impl SectionHandle {
    pub fn naive() -> Self {
        Self {
            kind: SectionKind::Naive,
            b1_ref: DEFAULT_B1_REF,
            tol: DEFAULT_QUADRATURE_TOL,
        }
    }

    pub fn lagrangianized(b1_ref: f64) -> Result<Self> {
        if !(b1_ref < 0.0) {
            return Err(Error::Domain(format!("b1_ref = {b1_ref} must be negative")));
        }
        Ok(Self {
            kind: SectionKind::Lagrangianized,
            b1_ref,
            tol: DEFAULT_QUADRATURE_TOL,
        })
    }

    pub fn with_tolerance(self, tol: f64) -> Self {
        Self { tol, ..self }
    }
}

impl Default for SectionHandle {
    fn default() -> Self {
        Self {
            kind: SectionKind::Lagrangianized,
            b1_ref: DEFAULT_B1_REF,
            tol: DEFAULT_QUADRATURE_TOL,
        }
    }
}

/// Coordinates `(θ, H1, s, H2)`; `p = φ_s^{H2}(φ_θ^{H1}(σ(H1, H2)))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionAngleCoords {
    pub theta: f64,
    pub h1: f64,
    pub s: f64,
    pub h2: f64,
}

impl ActionAngleCoords {
    pub fn base(&self) -> BasePoint {
        BasePoint {
            b1: self.h1,
            b2: self.h2,
        }
    }

    fn as_array(&self) -> [f64; 4] {
        [self.theta, self.h1, self.s, self.h2]
    }

    fn from_array(c: [f64; 4]) -> Self {
        Self {
            theta: c[0],
            h1: c[1],
            s: c[2],
            h2: c[3],
        }
    }
}

/// `(H1(p), H2(p))`
pub fn project(p: &AmbientPoint, profile: &Profile) -> Result<BasePoint> {
    p.check()?;
    if p.on_zero_section() {
        return Err(Error::OffFibration(p.coords()));
    }
    BasePoint::new(h1(p, profile)?, h2(p, profile)?)
}

pub fn naive_section(b: &BasePoint, profile: &Profile) -> Result<AmbientPoint> {
    b.check()?;
    let t = profile.inverse(1.5 * b.b1)?;
    Ok(AmbientPoint {
        x: b.b2 / (2.0 * (1.0 - 1.5 * b.b1)),
        y: 1.0,
        u: t.sqrt(),
        v: 0.0,
    })
}

/// `σ0*ω(∂b1, ∂b2)` from the explicit derivatives of `σ0`.
fn naive_defect_analytic(b: &BasePoint, profile: &Profile) -> Result<f64> {
    let p = naive_section(b, profile)?;
    let t = p.u * p.u;
    let df = profile.eval(t)?.df;
    let denom = 1.0 - 1.5 * b.b1;
    let d_b1 = Vector4::new(0.75 * b.b2 / (denom * denom), 0.0, 1.5 / (2.0 * p.u * df), 0.0);
    let d_b2 = Vector4::new(0.5 / denom, 0.0, 0.0, 0.0);
    Ok(d_b1.dot(&(symplectic_matrix(&p, profile) * d_b2)))
}

/// Evaluates a section near a fixed base point. For the corrected section the
/// adaptive quadrature mesh of `∫_{b1_ref}^{b1} h` is computed once at the
/// center and reused, so finite differences across nearby base points see a
/// smooth function of `b`.
struct SectionArena<'a> {
    section: SectionHandle,
    profile: &'a Profile,
    center: BasePoint,
    /// Panels covering `[min(b1_ref, b1), max(b1_ref, b1)]` at the center.
    mesh: Vec<Panel>,
    orientation: f64,
}

impl<'a> SectionArena<'a> {
    fn new(section: SectionHandle, profile: &'a Profile, center: BasePoint) -> Result<Self> {
        center.check()?;
        let mut arena = Self {
            section,
            profile,
            center,
            mesh: Vec::new(),
            orientation: 1.0,
        };
        if section.kind == SectionKind::Lagrangianized {
            if !(section.b1_ref < 0.0) {
                return Err(Error::Domain(format!("b1_ref = {} must be negative", section.b1_ref)));
            }
            let failure = RefCell::new(None);
            let integrand = defect_integrand(profile, center.b2, &failure);
            let quad = AdaptiveSimpson::new(section.tol).integrate(integrand, section.b1_ref, center.b1);
            if let Some(e) = failure.into_inner() {
                return Err(e);
            }
            arena.mesh = quad?.panels;
            arena.orientation = if center.b1 >= section.b1_ref { 1.0 } else { -1.0 };
        }
        Ok(arena)
    }

    /// `a2(b) = −∫_{b1_ref}^{b1} h(τ, b2) dτ`
    fn correction(&self, b: &BasePoint) -> Result<f64> {
        let failure = RefCell::new(None);
        let mut integrand = defect_integrand(self.profile, b.b2, &failure);
        let mut value = self.orientation * integrate_on_mesh(&mut integrand, &self.mesh);
        if b.b1 != self.center.b1 {
            value += panel_rule(&mut integrand, self.center.b1, b.b1);
        }
        drop(integrand);
        if let Some(e) = failure.into_inner() {
            return Err(e);
        }
        Ok(-value)
    }

    fn point(&self, b: &BasePoint) -> Result<AmbientPoint> {
        let base = naive_section(b, self.profile)?;
        match self.section.kind {
            SectionKind::Naive => Ok(base),
            SectionKind::Lagrangianized => Ok(flow_h2(&base, self.correction(b)?)),
        }
    }
}

fn defect_integrand<'a>(
    profile: &'a Profile,
    b2: f64,
    failure: &'a RefCell<Option<Error>>,
) -> impl FnMut(f64) -> f64 + 'a {
    move |b1| match naive_defect_analytic(&BasePoint { b1, b2 }, profile) {
        Ok(h) => h,
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            f64::NAN
        }
    }
}

/// The point of the chosen section over `b`.
pub fn section_point(section: &SectionHandle, b: &BasePoint, profile: &Profile) -> Result<AmbientPoint> {
    SectionArena::new(*section, profile, *b)?.point(b)
}

/// `σ(b) = φ^{H2}_{a2(b)}(σ0(b))`
pub fn lagrangianize(b: &BasePoint, profile: &Profile, b1_ref: f64) -> Result<AmbientPoint> {
    section_point(&SectionHandle::lagrangianized(b1_ref)?, b, profile)
}

/// The correction time `a2(b)` of the corrected section.
pub fn correction_time(section: &SectionHandle, b: &BasePoint, profile: &Profile) -> Result<f64> {
    let arena = SectionArena::new(
        SectionHandle {
            kind: SectionKind::Lagrangianized,
            ..*section
        },
        profile,
        *b,
    )?;
    arena.correction(b)
}

const BASE_STEP: f64 = 1e-3;

/// `(σ*ω)(∂b1, ∂b2)` with pushforwards by five-point central differences.
pub fn section_defect(section: &SectionHandle, b: &BasePoint, profile: &Profile) -> Result<f64> {
    let arena = SectionArena::new(*section, profile, *b)?;
    let step = BASE_STEP * (-b.b1).min(1.0);
    let mut pushforward = [Vector4::zeros(); 2];
    for (axis, out) in pushforward.iter_mut().enumerate() {
        for comp in 0..4 {
            let failure = RefCell::new(None);
            let coord = |s: f64| {
                let shifted = if axis == 0 {
                    BasePoint { b1: b.b1 + s, b2: b.b2 }
                } else {
                    BasePoint { b1: b.b1, b2: b.b2 + s }
                };
                match arena.point(&shifted) {
                    Ok(p) => p.coords()[comp],
                    Err(e) => {
                        failure.borrow_mut().get_or_insert(e);
                        f64::NAN
                    }
                }
            };
            out[comp] = central_richardson(coord, 0.0, step);
            if let Some(e) = failure.into_inner() {
                return Err(e);
            }
        }
    }
    let p = arena.point(b)?;
    Ok(pushforward[0].dot(&(symplectic_matrix(&p, profile) * pushforward[1])))
}

pub fn chart(p: &AmbientPoint, section: &SectionHandle, profile: &Profile) -> Result<ActionAngleCoords> {
    let b = project(p, profile)?;
    let sigma = section_point(section, &b, profile)?;
    Ok(ActionAngleCoords {
        theta: (p.w().arg() - sigma.w().arg()).rem_euclid(TAU),
        h1: b.b1,
        s: 0.5 * (p.y / sigma.y).ln(),
        h2: b.b2,
    })
}

pub fn chart_inverse(c: &ActionAngleCoords, section: &SectionHandle, profile: &Profile) -> Result<AmbientPoint> {
    let b = c.base();
    let sigma = section_point(section, &b, profile)?;
    Ok(flow_h2(&flow_h1(&sigma, c.theta), c.s))
}

/// `ω` in the canonical Darboux form for the order `(θ, H1, s, H2)`.
pub fn canonical_darboux() -> Matrix4<f64> {
    let mut m = Matrix4::zeros();
    m[(0, 1)] = 1.0;
    m[(1, 0)] = -1.0;
    m[(2, 3)] = 1.0;
    m[(3, 2)] = -1.0;
    m
}

/// `M_ab = ω(E_a, E_b)` for the coordinate frame `E` of the chart built on
/// `section`, at `p`. The frame is obtained by five-point central differences
/// of the inverse chart.
pub fn darboux_matrix(p: &AmbientPoint, section: &SectionHandle, profile: &Profile) -> Result<Matrix4<f64>> {
    let c = chart(p, section, profile)?;
    let arena = SectionArena::new(*section, profile, c.base())?;
    let at = |coords: [f64; 4]| -> Result<AmbientPoint> {
        let c = ActionAngleCoords::from_array(coords);
        let sigma = arena.point(&c.base())?;
        Ok(flow_h2(&flow_h1(&sigma, c.theta), c.s))
    };
    let center = at(c.as_array())?;
    let step = BASE_STEP * (-c.h1).min(1.0);
    let mut frame = Matrix4::zeros();
    for a in 0..4 {
        for comp in 0..4 {
            let failure = RefCell::new(None);
            let coord = |s: f64| {
                let mut q = c.as_array();
                q[a] += s;
                match at(q) {
                    Ok(r) => r.coords()[comp],
                    Err(e) => {
                        failure.borrow_mut().get_or_insert(e);
                        f64::NAN
                    }
                }
            };
            frame[(comp, a)] = central_richardson(coord, 0.0, step);
            if let Some(e) = failure.into_inner() {
                return Err(e);
            }
        }
    }
    Ok(frame.transpose() * symplectic_matrix(&center, profile) * frame)
}

/// `max |M − canonical|`
pub fn darboux_residual(m: &Matrix4<f64>) -> f64 {
    (m - canonical_darboux()).amax()
}

/// Period lattice of the fiber over `b` and the evidence for it.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodLattice {
    /// Generator of `Λ_b` in the `(dH1, dH2)` basis.
    pub generator: Vector2<f64>,
    /// Distance between `σ0(b)` and its image under the `H1` flow at `2π`.
    pub return_distance: f64,
    /// Smallest distance between `σ0(b)` and its `H2` flow over the scan.
    pub min_scan_distance: f64,
    pub rank: usize,
}

pub const RETURN_TOLERANCE: f64 = 1e-12;
pub const NON_RETURN_THRESHOLD: f64 = 1e-3;
const SCAN_POINTS: usize = 400;

/// Scans `s ∈ [10⁻³, 10]` geometrically for a return of the `H2` flow and
/// checks the `2π` return of the `H1` flow.
pub fn period_generator(b: &BasePoint, profile: &Profile) -> Result<PeriodLattice> {
    let sigma = naive_section(b, profile)?;
    let return_distance = flow_h1(&sigma, TAU).distance(&sigma);
    let (lo, hi) = (1e-3f64.ln(), 10f64.ln());
    let min_scan_distance = (0..SCAN_POINTS)
        .map(|i| {
            let s = (lo + (hi - lo) * i as f64 / (SCAN_POINTS - 1) as f64).exp();
            flow_h2(&sigma, s).distance(&sigma)
        })
        .fold(f64::INFINITY, f64::min);
    let closes = return_distance <= RETURN_TOLERANCE;
    let h2_open = min_scan_distance >= NON_RETURN_THRESHOLD;
    Ok(PeriodLattice {
        generator: Vector2::new(TAU, 0.0),
        return_distance,
        min_scan_distance,
        rank: usize::from(closes) + usize::from(!h2_open),
    })
}
