//! The profile function `f : [0, ∞) → (−∞, 0]` that parametrises the metric
//! family, together with its first three derivatives, its inverse and the
//! curvature factor `G_f`.
//!
//! A profile must satisfy `f(0) = 0`, `f' < 0` everywhere and
//! `f(t) → −∞`. Builtin families are exact closed forms; user profiles come
//! either from a closure or from a sampled table.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};

/// `(f, f', f'', f''')` at one value of `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derivatives {
    pub f: f64,
    pub df: f64,
    pub d2f: f64,
    pub d3f: f64,
}

impl Derivatives {
    pub fn as_array(&self) -> [f64; 4] {
        [self.f, self.df, self.d2f, self.d3f]
    }
}

pub type ProfileFn = Arc<dyn Fn(f64) -> Derivatives + Send + Sync>;

#[derive(Clone)]
pub enum Family {
    /// `f(t) = −k t`
    Linear { k: f64 },
    /// `f(t) = −k t − t²`
    Quadratic { k: f64 },
    /// Cubic Hermite interpolation of a sampled table.
    Table(Arc<ProfileTable>),
    /// Arbitrary closure supplying all four derivative orders.
    Custom { name: String, eval: ProfileFn },
}

#[derive(Clone)]
pub struct Profile {
    family: Family,
}

impl fmt::Debug for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.family {
            Family::Linear { k } => write!(f, "Profile::Linear(k={k})"),
            Family::Quadratic { k } => write!(f, "Profile::Quadratic(k={k})"),
            Family::Table(t) => write!(f, "Profile::Table({} rows)", t.len()),
            Family::Custom { name, .. } => write!(f, "Profile::Custom({name})"),
        }
    }
}

fn check_k(k: f64) -> Result<f64> {
    if k.is_finite() && k > 0.0 {
        Ok(k)
    } else {
        Err(Error::Domain(format!("profile parameter k must be positive, got {k}")))
    }
}

impl Profile {
    pub fn linear(k: f64) -> Result<Self> {
        Ok(Self {
            family: Family::Linear { k: check_k(k)? },
        })
    }

    pub fn quadratic(k: f64) -> Result<Self> {
        Ok(Self {
            family: Family::Quadratic { k: check_k(k)? },
        })
    }

    pub fn from_table(table: ProfileTable) -> Self {
        Self {
            family: Family::Table(Arc::new(table)),
        }
    }

    pub fn custom<F>(name: impl Into<String>, eval: F) -> Self
    where
        F: Fn(f64) -> Derivatives + Send + Sync + 'static,
    {
        Self {
            family: Family::Custom {
                name: name.into(),
                eval: Arc::new(eval),
            },
        }
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    /// The slope parameter of a builtin family.
    pub fn k(&self) -> Option<f64> {
        match self.family {
            Family::Linear { k } | Family::Quadratic { k } => Some(k),
            _ => None,
        }
    }

    pub fn is_linear(&self) -> bool {
        matches!(self.family, Family::Linear { .. })
    }

    /// Evaluates `(f, f', f'', f''')` at `t ≥ 0`.
    pub fn eval(&self, t: f64) -> Result<Derivatives> {
        if !(t >= 0.0) {
            return Err(Error::Domain(format!("profile evaluated at t = {t} < 0")));
        }
        Ok(self.at(t))
    }

    /// Unchecked evaluation for callers that construct `t` as
    /// `y³(u² + v²)`, which is nonnegative by construction.
    pub(crate) fn at(&self, t: f64) -> Derivatives {
        debug_assert!(t >= 0.0, "profile evaluated at negative t = {t}");
        match &self.family {
            Family::Linear { k } => Derivatives {
                f: -k * t,
                df: -k,
                d2f: 0.0,
                d3f: 0.0,
            },
            Family::Quadratic { k } => Derivatives {
                f: -k * t - t * t,
                df: -k - 2.0 * t,
                d2f: -2.0,
                d3f: 0.0,
            },
            Family::Table(table) => table.interpolate(t),
            Family::Custom { eval, .. } => eval(t),
        }
    }

    pub fn value(&self, t: f64) -> Result<f64> {
        self.eval(t).map(|d| d.f)
    }

    /// Solves `f(t) = s` for `t ≥ 0`. Brackets by doubling, bisects, then
    /// polishes with Newton steps.
    pub fn inverse(&self, s: f64) -> Result<f64> {
        if !(s <= 0.0) {
            return Err(Error::Domain(format!("profile inverse needs s ≤ 0, got {s}")));
        }
        if s == 0.0 {
            return Ok(0.0);
        }
        let g = |t: f64| self.at(t).f - s;
        let (mut lo, mut hi) = (0.0, 1.0);
        let mut doublings = 0;
        while g(hi) > 0.0 {
            lo = hi;
            hi *= 2.0;
            doublings += 1;
            if doublings > 200 || !hi.is_finite() {
                return Err(Error::Divergence(format!(
                    "no bracket for f(t) = {s} within 200 doublings"
                )));
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if g(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut t = 0.5 * (lo + hi);
        let mut resid = g(t);
        for _ in 0..4 {
            let d = self.at(t).df;
            if d == 0.0 || !d.is_finite() {
                break;
            }
            let next = (t - resid / d).max(0.0);
            let r = g(next);
            if r.abs() >= resid.abs() {
                break;
            }
            t = next;
            resid = r;
        }
        if resid.abs() > 1e-12 * (1.0 + s.abs()) {
            return Err(Error::Divergence(format!(
                "profile inverse at s = {s} stalled with residual {resid:e}"
            )));
        }
        Ok(t)
    }

    /// `G_f = [f''(1−f) + (f')²]/(1−f)² − [f''' f − (f'')²]/(f')²`
    pub fn g_factor(&self, t: f64) -> Result<f64> {
        let d = self.eval(t)?;
        Ok(g_factor_of(&d))
    }

    /// Checks the profile axioms and derivative consistency on `grid`.
    pub fn validate(&self, grid: &[f64]) -> ValidationReport {
        validate(self, grid)
    }
}

pub(crate) fn g_factor_of(d: &Derivatives) -> f64 {
    let one_minus_f = 1.0 - d.f;
    (d.d2f * one_minus_f + d.df * d.df) / (one_minus_f * one_minus_f)
        - (d.d3f * d.f - d.d2f * d.d2f) / (d.df * d.df)
}

/// Outcome of [`Profile::validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub f_at_zero: f64,
    /// Largest `f'` seen on the grid; must be negative.
    pub max_slope: f64,
    pub unbounded_below: bool,
    /// Worst relative mismatch between supplied `f', f'', f'''` and finite
    /// differences of the next lower order.
    pub derivative_residuals: [f64; 3],
    pub failures: Vec<String>,
    pub pass: bool,
}

const DERIVATIVE_TOLERANCE: f64 = 1e-6;

fn validate(profile: &Profile, grid: &[f64]) -> ValidationReport {
    let mut failures = Vec::new();
    if grid.is_empty() {
        failures.push("empty validation grid".to_string());
    }
    if let Some(bad) = grid.iter().find(|t| !(**t >= 0.0)) {
        failures.push(format!("grid point {bad} is negative"));
    }
    let grid: Vec<f64> = grid.iter().copied().filter(|t| *t >= 0.0).collect();

    let f_at_zero = profile.at(0.0).f;
    if f_at_zero.abs() > 1e-12 {
        failures.push(format!("axiom f(0) = 0 violated: f(0) = {f_at_zero}"));
    }

    let mut max_slope = f64::NEG_INFINITY;
    let mut worst_slope_t = 0.0;
    for &t in grid.iter().chain(std::iter::once(&0.0)) {
        let df = profile.at(t).df;
        if df > max_slope || df.is_nan() {
            max_slope = df;
            worst_slope_t = t;
        }
    }
    if !(max_slope < 0.0) {
        failures.push(format!(
            "axiom f' < 0 violated: f'({worst_slope_t}) = {max_slope}"
        ));
    }

    // f → −∞: strictly decreasing on a geometric grid and still falling
    // substantially between 1e4 and 1e8.
    let geometric: Vec<f64> = (0..=8).map(|e| 10f64.powi(e)).collect();
    let values: Vec<f64> = geometric.iter().map(|&t| profile.at(t).f).collect();
    let decreasing = values.windows(2).all(|w| w[1] < w[0]);
    let unbounded_below = decreasing && values[4] < 0.0 && values[8] < 1.5 * values[4];
    if !unbounded_below {
        failures.push("axiom f(t) → −∞ violated on the geometric sample grid".to_string());
    }

    let mut derivative_residuals = [0.0f64; 3];
    let names = ["f'", "f''", "f'''"];
    for &t in &grid {
        let h = 1e-4 * t.max(1.0);
        let order = |t: f64, i: usize| profile.at(t).as_array()[i];
        for (i, worst) in derivative_residuals.iter_mut().enumerate() {
            let fd = if t >= 2.0 * h {
                (order(t + h, i) - order(t - h, i)) / (2.0 * h)
            } else {
                (-3.0 * order(t, i) + 4.0 * order(t + h, i) - order(t + 2.0 * h, i)) / (2.0 * h)
            };
            let supplied = order(t, i + 1);
            let r = (fd - supplied).abs() / supplied.abs().max(1.0);
            if r > *worst || r.is_nan() {
                *worst = r;
            }
        }
    }
    for (i, r) in derivative_residuals.iter().enumerate() {
        if !(*r <= DERIVATIVE_TOLERANCE) {
            failures.push(format!(
                "derivative mismatch: supplied {} differs from finite differences by {r:e}",
                names[i]
            ));
        }
    }

    ValidationReport {
        f_at_zero,
        max_slope,
        unbounded_below,
        derivative_residuals,
        pass: failures.is_empty(),
        failures,
    }
}

/// Tabulated profile `(t, f, f', f'', f''')` starting at `t = 0`.
///
/// Each order is interpolated by the cubic Hermite polynomial built from its
/// value and the next order's value at the nodes; `f'''` is linear. Past the
/// last node the profile continues as its tangent line.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileTable {
    rows: Vec<[f64; 5]>,
}

impl ProfileTable {
    pub fn new(rows: Vec<[f64; 5]>) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::Table("need at least two rows".into()));
        }
        if rows[0][0] != 0.0 {
            return Err(Error::Table(format!("first row must be t = 0, got {}", rows[0][0])));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Table("non-finite entry".into()));
        }
        if rows.windows(2).any(|w| w[1][0] <= w[0][0]) {
            return Err(Error::Table("t column must be strictly increasing".into()));
        }
        Ok(Self { rows })
    }

    /// Parses whitespace- or comma-separated rows; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .collect();
            if fields.len() != 5 {
                return Err(Error::Table(format!(
                    "line {}: expected 5 columns (t, f, f', f'', f'''), got {}",
                    lineno + 1,
                    fields.len()
                )));
            }
            let mut row = [0.0; 5];
            for (slot, field) in row.iter_mut().zip(&fields) {
                *slot = field.parse().map_err(|_| {
                    Error::Table(format!("line {}: cannot parse {field:?}", lineno + 1))
                })?;
            }
            rows.push(row);
        }
        Self::new(rows)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Table(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    fn interpolate(&self, t: f64) -> Derivatives {
        let last = self.rows[self.rows.len() - 1];
        if t >= last[0] {
            let dt = t - last[0];
            return Derivatives {
                f: last[1] + last[2] * dt,
                df: last[2],
                d2f: 0.0,
                d3f: 0.0,
            };
        }
        let i = self.rows.partition_point(|r| r[0] <= t).saturating_sub(1);
        let (r0, r1) = (self.rows[i], self.rows[i + 1]);
        let h = r1[0] - r0[0];
        let s = (t - r0[0]) / h;
        let hermite = |y0: f64, m0: f64, y1: f64, m1: f64| {
            let s2 = s * s;
            let s3 = s2 * s;
            (2.0 * s3 - 3.0 * s2 + 1.0) * y0
                + (s3 - 2.0 * s2 + s) * h * m0
                + (-2.0 * s3 + 3.0 * s2) * y1
                + (s3 - s2) * h * m1
        };
        Derivatives {
            f: hermite(r0[1], r0[2], r1[1], r1[2]),
            df: hermite(r0[2], r0[3], r1[2], r1[3]),
            d2f: hermite(r0[3], r0[4], r1[3], r1[4]),
            d3f: r0[4] + s * (r1[4] - r0[4]),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn builtin_values() {
        let lin1 = Profile::linear(1.0).unwrap();
        assert_eq!(lin1.eval(0.0).unwrap().as_array(), [0.0, -1.0, 0.0, 0.0]);
        let lin2 = Profile::linear(2.0).unwrap();
        assert_eq!(lin2.eval(3.0).unwrap().as_array(), [-6.0, -2.0, 0.0, 0.0]);
        let quad = Profile::quadratic(1.0).unwrap();
        assert_eq!(quad.eval(2.0).unwrap().as_array(), [-6.0, -5.0, -2.0, 0.0]);
    }

    #[test]
    fn negative_t_is_a_domain_error() {
        let p = Profile::linear(1.0).unwrap();
        assert!(matches!(p.eval(-1e-3), Err(Error::Domain(_))));
        assert!(matches!(p.g_factor(-1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn bad_k_rejected() {
        assert!(Profile::linear(0.0).is_err());
        assert!(Profile::quadratic(-1.0).is_err());
        assert!(Profile::linear(f64::NAN).is_err());
    }

    #[test]
    fn inverse_examples() {
        let lin1 = Profile::linear(1.0).unwrap();
        assert!(close(lin1.inverse(-1.0).unwrap(), 1.0, 1e-12));
        let lin2 = Profile::linear(2.0).unwrap();
        assert!(close(lin2.inverse(-3.0).unwrap(), 1.5, 1e-12));
        // positive root of t² + t − 6 by the quadratic formula
        let root = (-1.0 + (1.0f64 + 24.0).sqrt()) / 2.0;
        let quad = Profile::quadratic(1.0).unwrap();
        assert!(close(quad.inverse(-6.0).unwrap(), root, 1e-12));
        assert_eq!(quad.inverse(0.0).unwrap(), 0.0);
    }

    #[test]
    fn inverse_rejects_positive_and_reports_divergence() {
        let lin = Profile::linear(1.0).unwrap();
        assert!(matches!(lin.inverse(0.5), Err(Error::Domain(_))));
        // bounded below by −1: no bracket for s = −2
        let bounded = Profile::custom("saturating", |t: f64| Derivatives {
            f: -(1.0 - (-t).exp()),
            df: -(-t).exp(),
            d2f: (-t).exp(),
            d3f: -(-t).exp(),
        });
        assert!(matches!(bounded.inverse(-2.0), Err(Error::Divergence(_))));
    }

    #[test]
    fn g_factor_examples() {
        let lin1 = Profile::linear(1.0).unwrap();
        assert!(close(lin1.g_factor(0.0).unwrap(), 1.0, 1e-15));
        assert!(close(lin1.g_factor(1.0).unwrap(), 0.25, 1e-15));
        let lin2 = Profile::linear(2.0).unwrap();
        assert!(close(lin2.g_factor(1.0).unwrap(), 4.0 / 9.0, 1e-15));
    }

    #[test]
    fn validate_builtin_passes() {
        let r = Profile::linear(1.0).unwrap().validate(&[0.0, 1.0, 10.0, 100.0]);
        assert!(r.pass, "{:?}", r.failures);
        let r = Profile::quadratic(1.0).unwrap().validate(&[0.0, 0.5, 3.0, 100.0]);
        assert!(r.pass, "{:?}", r.failures);
    }

    #[test]
    fn validate_flags_increasing_profile() {
        let up = Profile::custom("f(t)=+t", |t| Derivatives {
            f: t,
            df: 1.0,
            d2f: 0.0,
            d3f: 0.0,
        });
        let r = up.validate(&[0.0, 1.0, 10.0]);
        assert!(!r.pass);
        assert!(r.max_slope > 0.0);
        assert!(r.failures.iter().any(|m| m.contains("f' < 0")));
    }

    #[test]
    fn validate_flags_wrong_second_derivative() {
        let wrong = Profile::custom("bad f''", |t| Derivatives {
            f: -t - t * t,
            df: -1.0 - 2.0 * t,
            d2f: 0.0,
            d3f: 0.0,
        });
        let r = wrong.validate(&[0.0, 1.0, 10.0]);
        assert!(!r.pass);
        assert!(r.failures.iter().any(|m| m.contains("f''")));
    }

    #[test]
    fn table_reproduces_quadratic_at_nodes_and_between() {
        let k = 1.0;
        let rows: Vec<[f64; 5]> = (0..=40)
            .map(|i| {
                let t = i as f64 * 0.25;
                [t, -k * t - t * t, -k - 2.0 * t, -2.0, 0.0]
            })
            .collect();
        let table = Profile::from_table(ProfileTable::new(rows).unwrap());
        let quad = Profile::quadratic(k).unwrap();
        for &t in &[0.0, 0.1, 1.3, 7.77, 9.99] {
            let a = table.eval(t).unwrap();
            let b = quad.eval(t).unwrap();
            for (x, y) in a.as_array().iter().zip(b.as_array()) {
                assert!(close(*x, y, 1e-12), "t={t}: {a:?} vs {b:?}");
            }
        }
        assert!(table.validate(&[0.0, 0.25, 1.0, 5.0]).pass);
    }

    #[test]
    fn table_parse_errors() {
        assert!(ProfileTable::parse("0 0 -1 0 0\n").is_err());
        assert!(ProfileTable::parse("0 0 -1 0\n1 -1 -1 0\n").is_err());
        assert!(ProfileTable::parse("1 0 -1 0 0\n2 -1 -1 0 0\n").is_err());
        let ok = ProfileTable::parse("# t f f' f'' f'''\n0, 0, -1, 0, 0\n1 -1 -1 0 0 # tail\n").unwrap();
        assert_eq!(ok.len(), 2);
    }
}
