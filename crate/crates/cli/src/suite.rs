//! The invariant suite behind `pkahler check`: every module invariant
//! evaluated on seeded sample points, reported as a flat list.

use std::f64::consts::{PI, TAU};

use nalgebra::Matrix2;
use pkahler_core::actions::{
    circle_apply, isometry_apply, isometry_residual, moment_map, moment_residual, normal_form,
    recover_parameters, sl2_apply, symplectic_residual,
};
use pkahler_core::curvature::{
    bound_scan, inverse_metric_at_iu, inverse_metric_from_real, ricci_closed, ricci_numeric_logdet,
    scalar_closed, scalar_numeric_full, scalar_traced, FULL_PIPELINE_STEP, LOGDET_STEP,
};
use pkahler_core::fibration::{
    chart, chart_inverse, darboux_matrix, darboux_residual, naive_section, period_generator, project,
    section_defect,
};
use pkahler_core::geometry::{compatibility_residuals, d_omega_residual_richardson, metric};
use pkahler_core::hamilton::{
    field_by_solve, field_closed_form, flow_h1, flow_h2, gradient, h1, h2, poisson, rk4_trajectory,
    symplecto_residual, x_h1, x_h2,
};
use pkahler_core::{
    ActionAngleCoords, AmbientPoint, BasePoint, Hamiltonian, IsometryElement, LieAlgebraElement,
    Moebius, Profile, Result, SectionHandle,
};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{sample_points, Grid, RunConfig};

/// One line of the `check` report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvariantReport {
    pub invariant: String,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub worst_point: Option<[f64; 4]>,
}

/// Tracks the worst residual of one invariant.
struct Probe {
    name: &'static str,
    tolerance: f64,
    worst: f64,
    point: Option<[f64; 4]>,
    seen: bool,
    failed: bool,
}

impl Probe {
    fn new(cfg: &RunConfig, name: &'static str, default_tolerance: f64) -> Self {
        Self {
            name,
            tolerance: cfg.tolerance(name, default_tolerance),
            worst: 0.0,
            point: None,
            seen: false,
            failed: false,
        }
    }

    fn record(&mut self, residual: Result<f64>, at: Option<[f64; 4]>) {
        match residual {
            Ok(r) if !r.is_nan() => {
                if !self.seen || r > self.worst {
                    self.worst = r;
                    self.point = at;
                }
            }
            _ => {
                if !self.failed {
                    self.worst = f64::INFINITY;
                    self.point = at;
                }
                self.failed = true;
            }
        }
        self.seen = true;
    }

    fn finish(self) -> InvariantReport {
        InvariantReport {
            invariant: self.name.to_string(),
            max_residual: self.worst,
            tolerance: self.tolerance,
            pass: !self.failed && self.worst <= self.tolerance,
            worst_point: self.point,
        }
    }

    /// For invariants that must stay strictly below the tolerance.
    fn finish_strict(self) -> InvariantReport {
        let mut r = self.finish();
        r.pass = r.pass && r.max_residual < r.tolerance;
        r
    }
}

fn iu(u: f64) -> AmbientPoint {
    AmbientPoint { x: 0.0, y: 1.0, u, v: 0.0 }
}

pub fn profile_invariants(cfg: &RunConfig, profile: &Profile) -> Vec<InvariantReport> {
    let mut axioms = Probe::new(cfg, "profile_axioms", 1e-6);
    let report = profile.validate(&[0.0, 0.1, 0.5, 1.0, 2.0, 10.0, 100.0, 1000.0]);
    axioms.record(Ok(report.derivative_residuals.iter().cloned().fold(0.0, f64::max)), None);
    axioms.failed |= !report.pass;

    let mut inverse = Probe::new(cfg, "profile_inverse_roundtrip", 1e-10);
    let mut t = 0.0;
    while t <= 1e6 {
        let r = profile
            .value(t)
            .and_then(|s| profile.inverse(s))
            .map(|back| (back - t).abs() / t.max(1.0));
        inverse.record(r, Some([t, 0.0, 0.0, 0.0]));
        t = if t == 0.0 { 1e-3 } else { t * 1.7 };
    }
    vec![axioms.finish(), inverse.finish()]
}

pub fn geometry_invariants(cfg: &RunConfig, profile: &Profile, samples: &[AmbientPoint]) -> Vec<InvariantReport> {
    let mut compat = Probe::new(cfg, "pseudo_kahler_compatibility", 1e-9);
    let mut domega = Probe::new(cfg, "d_omega", 1e-6);
    let mut signature = Probe::new(cfg, "metric_signature_2_2", 0.0);
    let mut det = Probe::new(cfg, "det_metric_closed_form", 1e-8);
    let mut hyperbolic = Probe::new(cfg, "zero_section_hyperbolic_metric", 1e-12);
    for p in samples {
        let at = Some(p.coords());
        let c = compatibility_residuals(p, profile);
        compat.record(c.as_ref().map(|c| c.max_algebraic()).map_err(Clone::clone), at);
        signature.record(c.map(|c| c.signature_defect as f64), at);
        domega.record(d_omega_residual_richardson(p, profile, 1e-4), at);
        det.record(
            metric(p, profile).map(|g| {
                let direct = g.matrix.determinant();
                let closed = pkahler_core::curvature::det_metric(p, profile);
                (direct - closed).abs() / closed.abs()
            }),
            at,
        );
        let base = AmbientPoint { u: 0.0, v: 0.0, ..*p };
        hyperbolic.record(
            metric(&base, profile).map(|g| {
                let block = g.matrix.fixed_view::<2, 2>(0, 0).into_owned();
                (block - Matrix2::identity() / (base.y * base.y)).amax()
            }),
            Some(base.coords()),
        );
    }
    vec![compat.finish(), domega.finish(), signature.finish(), det.finish(), hyperbolic.finish()]
}

pub fn hamilton_invariants(cfg: &RunConfig, profile: &Profile, samples: &[AmbientPoint]) -> Vec<InvariantReport> {
    let hams = [Hamiltonian::H1, Hamiltonian::H2];
    let mut field = [
        Probe::new(cfg, "field_h1_solve_vs_closed_form", 1e-6),
        Probe::new(cfg, "field_h2_solve_vs_closed_form", 1e-6),
    ];
    let mut bracket = Probe::new(cfg, "poisson_bracket_h1_h2", 1e-8);
    let mut conservation = Probe::new(cfg, "dh_i_of_x_hj", 1e-8);
    let mut rk4 = Probe::new(cfg, "rk4_vs_exact_flow", 1e-8);
    let mut exact_conservation = Probe::new(cfg, "exact_flows_conserve_h", 1e-10);
    let mut period = Probe::new(cfg, "flow_h1_period_2pi", 1e-12);
    let mut group = Probe::new(cfg, "flow_h2_one_parameter_group", 1e-12);
    for p in samples {
        let at = Some(p.coords());
        for (i, h) in hams.iter().enumerate() {
            let r = field_by_solve(p, h, profile)
                .and_then(|solved| field_closed_form(p, h).map(|closed| (solved - closed).amax()));
            field[i].record(r, at);
        }
        bracket.record(poisson(p, &hams[0], &hams[1], profile).map(f64::abs), at);
        for h in &hams {
            let r = gradient(h, p, profile).map(|g| g.dot(&x_h1(p)).abs().max(g.dot(&x_h2(p)).abs()));
            conservation.record(r, at);
        }
        let r = rk4_trajectory(p, x_h1, 1.0, 200)
            .map(|tr| tr.last().map_or(f64::INFINITY, |(_, q)| q.distance(&flow_h1(p, 1.0))))
            .and_then(|a| {
                rk4_trajectory(p, x_h2, 1.0, 200)
                    .map(|tr| a.max(tr.last().map_or(f64::INFINITY, |(_, q)| q.distance(&flow_h2(p, 1.0)))))
            });
        rk4.record(r, at);
        let drift = || -> Result<f64> {
            let mut worst = 0.0f64;
            for q in [flow_h1(p, 1.0), flow_h2(p, 0.3), flow_h2(p, -0.7)] {
                worst = worst
                    .max((h1(&q, profile)? - h1(p, profile)?).abs())
                    .max((h2(&q, profile)? - h2(p, profile)?).abs());
            }
            Ok(worst)
        };
        exact_conservation.record(drift(), at);
        period.record(Ok(flow_h1(p, TAU).distance(p)), at);
        let composed = flow_h2(&flow_h2(p, 0.4), -0.15);
        let direct = flow_h2(p, 0.25);
        let rel = composed
            .coords()
            .iter()
            .zip(direct.coords())
            .map(|(a, b)| (a - b).abs() / b.abs().max(1.0))
            .fold(0.0, f64::max);
        group.record(Ok(rel), at);
    }
    let few = &samples[..samples.len().min(50)];
    let mut symplectic = Probe::new(cfg, "flows_preserve_omega", 1e-7);
    symplectic.record(symplecto_residual(|q| flow_h1(q, 1.0), few, profile), None);
    symplectic.record(symplecto_residual(|q| flow_h2(q, 0.3), few, profile), None);
    let [f1, f2] = field;
    vec![
        f1.finish(),
        f2.finish(),
        bracket.finish(),
        conservation.finish(),
        rk4.finish(),
        symplectic.finish(),
        exact_conservation.finish(),
        period.finish(),
        group.finish(),
    ]
}

/// A random element of `SL(2,R)` with entries of moderate size.
pub fn random_moebius(rng: &mut ChaCha8Rng) -> Moebius {
    let a: f64 = rng.gen_range(0.5..2.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    let b: f64 = rng.gen_range(-1.0..1.0);
    let c: f64 = rng.gen_range(-1.0..1.0);
    Moebius::new(a, b, c, (1.0 + b * c) / a).expect("determinant one by construction")
}

pub fn random_isometry(rng: &mut ChaCha8Rng, flip1: bool, flip2: bool) -> IsometryElement {
    let m = random_moebius(rng);
    IsometryElement::new(m, rng.gen_range(0.0..TAU), flip1, flip2)
}

/// Parameter distance modulo `(A, θ) ~ (−A, θ + π)`; infinite if the flips
/// differ.
pub fn parameter_error(a: &IsometryElement, b: &IsometryElement) -> f64 {
    if a.flip1 != b.flip1 || a.flip2 != b.flip2 {
        return f64::INFINITY;
    }
    let circ = |d: f64| {
        let r = d.rem_euclid(TAU);
        r.min(TAU - r)
    };
    let same = (a.moebius.matrix() - b.moebius.matrix()).amax().max(circ(a.theta - b.theta));
    let negated = (a.moebius.matrix() + b.moebius.matrix()).amax().max(circ(a.theta - b.theta - PI));
    same.min(negated)
}

/// Max-norm distance between the actions of two elements on three probes.
pub fn action_distance(a: &IsometryElement, b: &IsometryElement) -> f64 {
    [
        AmbientPoint { x: 0.0, y: 1.0, u: 1.0, v: 0.0 },
        AmbientPoint { x: 0.7, y: 0.4, u: -0.3, v: 1.2 },
        AmbientPoint { x: -1.5, y: 2.5, u: 0.2, v: -0.6 },
    ]
    .iter()
    .map(|p| isometry_apply(a, p).distance(&isometry_apply(b, p)))
    .fold(0.0, f64::max)
}

pub fn action_invariants(
    cfg: &RunConfig,
    profile: &Profile,
    samples: &[AmbientPoint],
    rng: &mut ChaCha8Rng,
) -> Vec<InvariantReport> {
    let mut norm = Probe::new(cfg, "sl2_preserves_t", 1e-10);
    let mut commute = Probe::new(cfg, "sl2_commutes_with_circle", 1e-10);
    let mut moment = Probe::new(cfg, "moment_map_residual", 1e-6);
    let mut moment_h2 = Probe::new(cfg, "moment_map_diag_equals_h2", 1e-12);
    let algebra = [
        LieAlgebraElement::hyperbolic(),
        LieAlgebraElement::raising(),
        LieAlgebraElement::lowering(),
    ];
    for p in samples {
        let at = Some(p.coords());
        let m = random_moebius(rng);
        let theta = rng.gen_range(0.0..TAU);
        let q = sl2_apply(&m, p);
        norm.record(Ok((q.t() - p.t()).abs() / p.t().max(1.0)), at);
        let ab = sl2_apply(&m, &circle_apply(theta, p));
        let ba = circle_apply(theta, &sl2_apply(&m, p));
        let scale = ab.coords().iter().fold(1.0f64, |s, c| s.max(c.abs()));
        commute.record(Ok(ab.distance(&ba) / scale), at);
        for x in &algebra {
            moment.record(moment_residual(p, x, profile), at);
        }
        let r = moment_map(p, &algebra[0], profile).and_then(|mu| Ok((mu - h2(p, profile)?).abs()));
        moment_h2.record(r, at);
    }

    let few = &samples[..samples.len().min(50)];
    let mut pull_g = Probe::new(cfg, "actions_preserve_metric", 1e-7);
    let mut pull_w = Probe::new(cfg, "actions_preserve_omega", 1e-7);
    for _ in 0..10 {
        let e = IsometryElement::new(random_moebius(rng), 0.0, false, false);
        pull_g.record(isometry_residual(&e, few, profile), None);
        pull_w.record(symplectic_residual(&e, few, profile), None);
        let r = IsometryElement::new(Moebius::identity(), rng.gen_range(0.0..TAU), false, false);
        pull_g.record(isometry_residual(&r, few, profile), None);
        pull_w.record(symplectic_residual(&r, few, profile), None);
    }

    let mut recovery = Probe::new(cfg, "isometry_parameter_recovery", 1e-6);
    for i in 0..40 {
        let e = random_isometry(rng, i % 2 == 1, (i / 2) % 2 == 1);
        let r = recover_parameters(|q| isometry_apply(&e, q))
            .map(|got| parameter_error(&got, &e).max(action_distance(&got, &e)));
        recovery.record(r, None);
    }
    vec![
        norm.finish(),
        commute.finish(),
        pull_g.finish(),
        pull_w.finish(),
        moment.finish(),
        moment_h2.finish(),
        recovery.finish(),
    ]
}

/// Values `0, 0.25, …, 3`.
pub fn curvature_u_grid() -> Vec<f64> {
    Grid::new(0.0, 3.0, 13).values()
}

pub fn curvature_invariants(cfg: &RunConfig, profile: &Profile, samples: &[AmbientPoint]) -> Vec<InvariantReport> {
    let mut logdet = Probe::new(cfg, "ricci_logdet_vs_closed_form", 1e-4);
    let mut displayed = Probe::new(cfg, "scal_full_vs_displayed_formula", 5e-3);
    let mut traced = Probe::new(cfg, "scal_full_vs_traced_ricci", 5e-3);
    let mut inverse = Probe::new(cfg, "inverse_metric_closed_vs_real", 1e-9);
    for u in curvature_u_grid() {
        let p = iu(u);
        let at = Some(p.coords());
        logdet.record(
            ricci_numeric_logdet(u, profile, LOGDET_STEP).map(|r| r.max_abs_diff(&ricci_closed(u, profile))),
            at,
        );
        let full = scalar_numeric_full(&p, profile, FULL_PIPELINE_STEP);
        displayed.record(full.clone().map(|s| (s - scalar_closed(u, profile)).abs()), at);
        traced.record(full.map(|s| (s - scalar_traced(u, profile)).abs()), at);
        inverse.record(
            inverse_metric_from_real(&p, profile).map(|m| m.max_abs_diff(&inverse_metric_at_iu(u, profile))),
            at,
        );
    }

    let mut inv_displayed = Probe::new(cfg, "scal_invariance_displayed_formula", 5e-3);
    let mut inv_traced = Probe::new(cfg, "scal_invariance_traced_ricci", 5e-3);
    for p in &samples[..samples.len().min(100)] {
        let at = Some(p.coords());
        let un = normal_form(p).map(|n| n.u_norm);
        let full = scalar_numeric_full(p, profile, FULL_PIPELINE_STEP);
        let pair = full.and_then(|s| un.map(|u| (s, u)));
        inv_displayed.record(pair.clone().map(|(s, u)| (s - scalar_closed(u, profile)).abs()), at);
        inv_traced.record(pair.map(|(s, u)| (s - scalar_traced(u, profile)).abs()), at);
    }

    let mut zero = Probe::new(cfg, "scal_zero_section", 5e-3);
    let r = profile.eval(0.0).and_then(|d| {
        let expected = 1.0 - 0.75 * d.d2f / (d.df * d.df);
        let s = scalar_numeric_full(&iu(0.0), profile, FULL_PIPELINE_STEP)?;
        Ok((s - expected).abs().max((scalar_closed(0.0, profile) - expected).abs()))
    });
    zero.record(r, Some(iu(0.0).coords()));

    let mut out = vec![
        logdet.finish(),
        displayed.finish(),
        traced.finish(),
        inverse.finish(),
        inv_displayed.finish(),
        inv_traced.finish(),
        zero.finish(),
    ];
    if let (true, Some(k)) = (profile.is_linear(), profile.k()) {
        out.extend(scan_bound_reports(cfg, k));
    }
    out
}

pub fn scan_bound_reports(cfg: &RunConfig, k: f64) -> Vec<InvariantReport> {
    let mut below = Probe::new(cfg, "scal_below_one", 1.0);
    let mut slice = Probe::new(cfg, "scal_one_on_zero_section", 1e-12);
    let u_grid = Grid::new(0.1, 5.0, 50).values();
    match bound_scan(k, &u_grid, &[0.5, 1.0, 2.0], &[-1.0, 0.0, 1.0]) {
        Ok(scan) => {
            below.record(Ok(scan.max), Some(scan.argmax.coords()));
            slice.record(Ok(scan.zero_section_deviation), None);
        }
        Err(e) => {
            below.record(Err(e.clone()), None);
            slice.record(Err(e), None);
        }
    }
    vec![below.finish_strict(), slice.finish()]
}

pub fn fibration_invariants(
    cfg: &RunConfig,
    profile: &Profile,
    samples: &[AmbientPoint],
    rng: &mut ChaCha8Rng,
) -> Vec<InvariantReport> {
    let lagr = SectionHandle::default();
    let naive = SectionHandle::naive();

    let mut roundtrip = Probe::new(cfg, "naive_section_projects_back", 1e-10);
    for b1 in Grid::new(-5.0, -0.1, 10).values() {
        for b2 in Grid::new(-5.0, 5.0, 10).values() {
            let b = BasePoint { b1, b2 };
            let r = naive_section(&b, profile)
                .and_then(|s| project(&s, profile))
                .map(|back| (back.b1 - b1).abs().max((back.b2 - b2).abs()));
            roundtrip.record(r, Some([b1, b2, 0.0, 0.0]));
        }
    }

    let mut naive_closed = Probe::new(cfg, "naive_defect_closed_form", 1e-5);
    for b1 in Grid::new(-3.0, -0.3, 10).values() {
        let b = BasePoint { b1, b2: 0.0 };
        let expected = 3.0 / (4.0 * (1.0 - 1.5 * b1));
        naive_closed.record(
            section_defect(&naive, &b, profile).map(|h| (h - expected).abs()),
            Some([b1, 0.0, 0.0, 0.0]),
        );
    }

    let mut lagr_defect = Probe::new(cfg, "lagrangian_section_defect", 1e-5);
    for b1 in Grid::new(-3.0, -0.3, 10).values() {
        for b2 in Grid::new(-4.0, 4.0, 10).values() {
            let b = BasePoint { b1, b2 };
            lagr_defect.record(section_defect(&lagr, &b, profile).map(f64::abs), Some([b1, b2, 0.0, 0.0]));
        }
    }

    let mut darboux = Probe::new(cfg, "darboux_frame_canonical", 1e-4);
    for p in samples.iter().filter(|p| !p.on_zero_section()).take(50) {
        darboux.record(darboux_matrix(p, &lagr, profile).map(|m| darboux_residual(&m)), Some(p.coords()));
    }

    let mut chart_trip = Probe::new(cfg, "chart_roundtrip", 1e-8);
    let mut linear = Probe::new(cfg, "chart_flows_linear", 1e-8);
    let circ = |d: f64| {
        let r = d.rem_euclid(TAU);
        r.min(TAU - r)
    };
    for _ in 0..100 {
        let c = ActionAngleCoords {
            theta: rng.gen_range(0.0..TAU),
            h1: rng.gen_range(-3.0..-0.3),
            s: rng.gen_range(-1.0..1.0),
            h2: rng.gen_range(-4.0..4.0),
        };
        let at = Some([c.theta, c.h1, c.s, c.h2]);
        let r = chart_inverse(&c, &lagr, profile).and_then(|p| {
            let back = chart(&p, &lagr, profile)?;
            let err = circ(back.theta - c.theta)
                .max((back.h1 - c.h1).abs())
                .max((back.s - c.s).abs())
                .max((back.h2 - c.h2).abs());
            Ok((p, err))
        });
        let Ok((p, err)) = r else {
            chart_trip.record(r.map(|(_, e)| e), at);
            continue;
        };
        chart_trip.record(Ok(err), at);
        let delta = rng.gen_range(-1.0..1.0);
        let r = chart(&flow_h1(&p, delta), &lagr, profile).and_then(|a| {
            let b = chart(&flow_h2(&p, delta), &lagr, profile)?;
            Ok(circ(a.theta - c.theta - delta).max((a.s - c.s).abs()).max((b.s - c.s - delta).abs()).max(circ(b.theta - c.theta)))
        });
        linear.record(r, at);
    }

    let mut lattice = Probe::new(cfg, "period_lattice_rank_one", 0.0);
    for _ in 0..20 {
        let b = BasePoint {
            b1: rng.gen_range(-5.0..-0.1),
            b2: rng.gen_range(-5.0..5.0),
        };
        let r = period_generator(&b, profile).map(|l| (l.rank as f64 - 1.0).abs());
        lattice.record(r, Some([b.b1, b.b2, 0.0, 0.0]));
    }

    vec![
        roundtrip.finish(),
        naive_closed.finish(),
        lagr_defect.finish(),
        darboux.finish(),
        chart_trip.finish(),
        linear.finish(),
        lattice.finish(),
    ]
}

/// Runs every invariant for the configured profile.
pub fn run_check(cfg: &RunConfig, profile: &Profile) -> Vec<InvariantReport> {
    let mut rng = cfg.rng();
    let samples = sample_points(&mut rng, cfg.samples.max(1));
    let mut out = profile_invariants(cfg, profile);
    out.extend(geometry_invariants(cfg, profile, &samples));
    out.extend(hamilton_invariants(cfg, profile, &samples));
    out.extend(action_invariants(cfg, profile, &samples, &mut rng));
    out.extend(curvature_invariants(cfg, profile, &samples));
    out.extend(fibration_invariants(cfg, profile, &samples, &mut rng));
    out
}
