//! Subcommand bodies. Each returns the document to write and whether the
//! command's own check passed.

use pkahler_core::actions::{isometry_apply, isometry_residual, recover_parameters, symplectic_residual};
use pkahler_core::curvature::{
    bound_scan, ricci_closed, scalar_closed, scalar_numeric_full, scalar_traced, FULL_PIPELINE_STEP,
};
use pkahler_core::fibration::{
    chart_inverse, darboux_matrix, darboux_residual, section_defect, SectionKind,
};
use pkahler_core::hamilton::{h1, h2, rk4_trajectory, x_h1, x_h2};
use pkahler_core::{ActionAngleCoords, AmbientPoint, BasePoint, IsometryElement, Moebius, Profile, SectionHandle};
use serde_json::{json, Value};

use crate::config::{sample_points, Grid, RunConfig};
use crate::error::CliError;
use crate::output::{num, point_json, Document};
use crate::suite::{action_distance, parameter_error, run_check};

pub struct Outcome {
    pub document: Document,
    pub pass: bool,
}

pub fn cmd_check(cfg: &RunConfig, profile: &Profile) -> Result<Outcome, CliError> {
    let reports = run_check(cfg, profile);
    let pass = reports.iter().all(|r| r.pass);
    let mut doc = Document::table(&["invariant", "max_residual", "tolerance", "pass", "worst_point"]);
    if let Document::Table { rows, .. } = &mut doc {
        for r in &reports {
            rows.push(vec![
                json!(r.invariant),
                num(r.max_residual),
                num(r.tolerance),
                json!(r.pass),
                r.worst_point.map_or(Value::Null, point_json),
            ]);
        }
    }
    Ok(Outcome { document: doc, pass })
}

pub fn cmd_curvature(profile: &Profile, u_grid: &Grid) -> Result<Outcome, CliError> {
    let mut doc = Document::table(&[
        "u",
        "scal_closed",
        "scal_traced",
        "scal_numeric",
        "ricci_zz",
        "ricci_ww",
        "ricci_zw_re",
        "ricci_zw_im",
    ]);
    for u in u_grid.values() {
        let p = AmbientPoint::new(0.0, 1.0, u, 0.0)?;
        let numeric = scalar_numeric_full(&p, profile, FULL_PIPELINE_STEP)?;
        let r = ricci_closed(u, profile);
        doc.push(vec![
            num(u),
            num(scalar_closed(u, profile)),
            num(scalar_traced(u, profile)),
            num(numeric),
            num(r.zz),
            num(r.ww),
            num(r.zw.re),
            num(r.zw.im),
        ]);
    }
    Ok(Outcome { document: doc, pass: true })
}

pub struct DarbouxArgs {
    pub b1: Grid,
    pub b2: Grid,
    pub b1_ref: f64,
}

pub fn cmd_darboux(profile: &Profile, args: &DarbouxArgs) -> Result<Outcome, CliError> {
    let lagr = SectionHandle::lagrangianized(args.b1_ref).map_err(|e| CliError::Usage(e.to_string()))?;
    let naive = SectionHandle::naive();
    let (b1s, b2s) = (args.b1.values(), args.b2.values());
    if b1s.iter().any(|b| !(*b < 0.0)) {
        return Err(CliError::Usage("--b1-range must lie in b1 < 0".into()));
    }
    let (mut max_naive, mut max_lagr, mut max_darboux) = (0.0f64, 0.0f64, 0.0f64);
    let mut worst_darboux_base = Value::Null;
    for &b1 in &b1s {
        for &b2 in &b2s {
            let b = BasePoint::new(b1, b2)?;
            max_naive = max_naive.max(section_defect(&naive, &b, profile)?.abs());
            max_lagr = max_lagr.max(section_defect(&lagr, &b, profile)?.abs());
            let c = ActionAngleCoords { theta: 0.0, h1: b1, s: 0.0, h2: b2 };
            let p = chart_inverse(&c, &lagr, profile)?;
            let r = darboux_residual(&darboux_matrix(&p, &lagr, profile)?);
            if r > max_darboux {
                max_darboux = r;
                worst_darboux_base = json!([b1, b2]);
            }
        }
    }
    let pass = max_lagr <= 1e-5 && max_darboux <= 1e-4;
    let document = Document::Object(json!({
        "grid": {
            "b1": b1s.iter().map(|&x| num(x)).collect::<Vec<_>>(),
            "b2": b2s.iter().map(|&x| num(x)).collect::<Vec<_>>(),
            "b1_ref": num(args.b1_ref),
            "section": match lagr.kind { SectionKind::Naive => "naive", SectionKind::Lagrangianized => "lagrangianized" },
        },
        "max_naive_defect": num(max_naive),
        "max_lagr_defect": num(max_lagr),
        "max_darboux_residual": num(max_darboux),
        "worst_darboux_base": worst_darboux_base,
        "pass": pass,
    }));
    Ok(Outcome { document, pass })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowField {
    H1,
    H2,
}

pub fn cmd_flow(profile: &Profile, field: FlowField, start: &AmbientPoint, time: f64, steps: usize) -> Result<Outcome, CliError> {
    if steps == 0 {
        return Err(CliError::Usage("--steps must be positive".into()));
    }
    let trajectory = match field {
        FlowField::H1 => rk4_trajectory(start, x_h1, time, steps)?,
        FlowField::H2 => rk4_trajectory(start, x_h2, time, steps)?,
    };
    let mut doc = Document::table(&["t", "x", "y", "u", "v", "H1", "H2"]);
    for (t, p) in trajectory {
        doc.push(vec![
            num(t),
            num(p.x),
            num(p.y),
            num(p.u),
            num(p.v),
            num(h1(&p, profile)?),
            num(h2(&p, profile)?),
        ]);
    }
    Ok(Outcome { document: doc, pass: true })
}

pub struct IsometryArgs {
    pub moebius: [f64; 4],
    pub theta: f64,
    pub flip1: bool,
    pub flip2: bool,
}

fn element(args: &IsometryArgs, checked: bool) -> Result<IsometryElement, CliError> {
    let [a, b, c, d] = args.moebius;
    let m = if checked {
        Moebius::new(a, b, c, d).map_err(|e| CliError::Usage(e.to_string()))?
    } else {
        Moebius::unchecked(a, b, c, d)
    };
    Ok(IsometryElement::new(m, args.theta, args.flip1, args.flip2))
}

fn element_json(e: &IsometryElement) -> Value {
    json!({
        "moebius": [num(e.moebius.a), num(e.moebius.b), num(e.moebius.c), num(e.moebius.d)],
        "theta": num(e.theta),
        "flip1": e.flip1,
        "flip2": e.flip2,
    })
}

/// Pullback residuals of `g_f` and `ω_f` at seeded sample points. A matrix
/// with determinant ≠ 1 is accepted here so non-isometries can be probed.
pub fn cmd_isometry_verify(cfg: &RunConfig, profile: &Profile, args: &IsometryArgs) -> Result<Outcome, CliError> {
    let e = element(args, false)?;
    let samples = sample_points(&mut cfg.rng(), cfg.samples.clamp(1, 50));
    let metric = isometry_residual(&e, &samples, profile)?;
    let omega = symplectic_residual(&e, &samples, profile)?;
    let tolerance = cfg.tolerance("isometry_residual", 1e-7);
    let pass = metric <= tolerance;
    let document = Document::Object(json!({
        "element": element_json(&e),
        "determinant": num(e.moebius.det()),
        "samples": samples.len(),
        "isometry_residual": num(metric),
        "symplectic_residual": num(omega),
        "tolerance": num(tolerance),
        "pass": pass,
    }));
    Ok(Outcome { document, pass })
}

/// Treats the element as a black box and recovers its parameters.
pub fn cmd_isometry_recover(args: &IsometryArgs) -> Result<Outcome, CliError> {
    let e = element(args, true)?;
    let recovered = recover_parameters(|q| isometry_apply(&e, q))?;
    let param = parameter_error(&recovered, &e);
    let action = action_distance(&recovered, &e);
    let pass = param <= 1e-6 && action <= 1e-6;
    let document = Document::Object(json!({
        "input": element_json(&e),
        "recovered": element_json(&recovered),
        "parameter_error": num(param),
        "action_distance": num(action),
        "pass": pass,
    }));
    Ok(Outcome { document, pass })
}

pub struct ScanArgs {
    pub u: Grid,
    pub y: Grid,
    pub x: Grid,
}

pub fn cmd_scan_bound(k: f64, args: &ScanArgs) -> Result<Outcome, CliError> {
    let (u, y, x) = (args.u.values(), args.y.values(), args.x.values());
    if y.iter().any(|v| !(*v > 0.0)) {
        return Err(CliError::Usage("--y-grid must lie in y > 0".into()));
    }
    let scan = bound_scan(k, &u, &y, &x).map_err(|e| match e {
        pkahler_core::Error::Domain(m) => CliError::Usage(m),
        other => CliError::Engine(other),
    })?;
    let document = Document::Object(json!({
        "k": num(scan.k),
        "points": scan.points,
        "max_scal": num(scan.max),
        "argmax": point_json(scan.argmax.coords()),
        "max_scal_traced": num(scan.max_traced),
        "zero_section_deviation": num(scan.zero_section_deviation),
        "pass": scan.pass,
    }));
    Ok(Outcome { document, pass: scan.pass })
}
