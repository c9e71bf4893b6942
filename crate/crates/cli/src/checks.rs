//! Rows of the `check` command.

use num_complex::Complex64 as C64;
use serde::Serialize;

use schottky::forms::{sample_points, BersPoles};
use schottky::variational::{IdentityReport, SampleResidual};
use schottky::zhu_matrix::{psi_via_matrix, KernelChoice};
use schottky::{Error, Result, SurfaceFunctionSet};

/// Tolerance of the invariants that involve no finite differences.
const FORMS_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Serialize)]
pub struct Row {
    pub identity: String,
    pub passed: bool,
    /// `pass`, `truncation` or `identity`
    pub classification: String,
    pub max_residual: f64,
    pub tolerance: f64,
    pub truncation_floor: f64,
    pub error: Option<String>,
    pub samples: Vec<SampleResidual>,
}

impl Row {
    pub fn from_report(r: IdentityReport) -> Self {
        let classification = if r.passed {
            "pass"
        } else if r.truncation_limited() {
            "truncation"
        } else {
            "identity"
        };
        Row {
            identity: r.identity,
            passed: r.passed,
            classification: classification.into(),
            max_residual: r.max_residual,
            tolerance: r.tolerance,
            truncation_floor: r.truncation_floor,
            error: None,
            samples: r.samples,
        }
    }

    /// A computation that failed outright; series and quadrature failures count as truncation.
    pub fn from_error(identity: &str, e: &Error) -> Self {
        let classification = match e {
            Error::Convergence(_) | Error::Quadrature(_) | Error::Conditioning(_) | Error::Divergence(_) => "truncation",
            _ => "identity",
        };
        Row {
            identity: identity.into(),
            passed: false,
            classification: classification.into(),
            max_residual: f64::INFINITY,
            tolerance: FORMS_TOL,
            truncation_floor: f64::INFINITY,
            error: Some(format!("{}: {e}", e.name())),
            samples: Vec::new(),
        }
    }
}

fn sample(label: String, lhs: C64, rhs: C64) -> SampleResidual {
    SampleResidual {
        label,
        lhs: [lhs.re, lhs.im],
        rhs: [rhs.re, rhs.im],
        residual: (lhs - rhs).norm(),
    }
}

fn report(identity: &str, samples: Vec<SampleResidual>, floor: f64) -> IdentityReport {
    let max_residual = samples.iter().map(|s| s.residual).fold(0.0, f64::max);
    let finite = samples.iter().all(|s| s.residual.is_finite());
    IdentityReport {
        identity: identity.into(),
        max_residual: if finite { max_residual } else { f64::INFINITY },
        passed: finite && max_residual < FORMS_TOL,
        samples,
        tolerance: FORMS_TOL,
        truncation_floor: floor,
    }
}

fn nu_normalization(set: &SurfaceFunctionSet) -> Result<IdentityReport> {
    let g = set.genus();
    let nodes = set.policy().contour_nodes;
    let mut samples = Vec::new();
    let mut floor: f64 = 0.0;
    for a in 1..=g {
        for b in 1..=g {
            let (v, qerr) = set.alpha_period(a, nodes, |x| Ok(set.holomorphic_one_form(b, x)?.value))?;
            let sp = set.params();
            let edge = sp.w(-(a as i32)) + sp.radius(-(a as i32));
            let tail = set.holomorphic_one_form(b, edge)?.tail_estimate;
            floor = floor.max(qerr + tail);
            let want = if a == b { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
            samples.push(sample(format!("alpha{a} nu{b}"), v, want));
        }
    }
    Ok(report("nu-normalization", samples, floor))
}

fn period_matrix(set: &SurfaceFunctionSet) -> Result<IdentityReport> {
    let pm = set.period_matrix()?;
    let g = pm.genus();
    let mut samples = Vec::new();
    for a in 1..=g {
        for b in (a + 1)..=g {
            samples.push(sample(format!("omega{a}{b} - omega{b}{a}"), pm.get(a, b), pm.get(b, a)));
        }
    }
    let lam = pm.im_min_eigenvalue();
    samples.push(SampleResidual {
        label: "min eigenvalue of Im omega".into(),
        lhs: [lam, 0.0],
        rhs: [0.0, 0.0],
        residual: if lam > 0.0 { 0.0 } else { f64::INFINITY },
    });
    Ok(report("period-matrix", samples, pm.error_estimate()))
}

fn matrix_agreement(set: &SurfaceFunctionSet) -> Result<IdentityReport> {
    let k = KernelChoice::from_surface(set, 1, &BersPoles::FixedPoints)?;
    let pts = sample_points(set.params(), 4, 2.0);
    let cutoff = set.policy().mode_cutoff;
    let mut samples = Vec::new();
    let mut floor: f64 = 0.0;
    for (x, y) in [(pts[0], pts[1]), (pts[2], pts[3])] {
        let m = psi_via_matrix(set.params(), &k, cutoff, x, y)?;
        let s = set.psi1_third_kind(x, y)?;
        floor = floor.max(m.drift + s.tail_estimate);
        samples.push(sample(format!("psi1 at x={x}, y={y}"), m.value, s.value));
    }
    Ok(report("psi1-matrix", samples, floor))
}

/// Checks of the forms that need no moduli derivatives.
pub fn forms_invariants(set: &SurfaceFunctionSet) -> Vec<Row> {
    let checks: [(&str, fn(&SurfaceFunctionSet) -> Result<IdentityReport>); 3] = [
        ("nu-normalization", nu_normalization),
        ("period-matrix", period_matrix),
        ("psi1-matrix", matrix_agreement),
    ];
    checks
        .iter()
        .map(|(name, f)| match f(set) {
            Ok(r) => Row::from_report(r),
            Err(e) => Row::from_error(name, &e),
        })
        .collect()
}

/// Plain-text table of the rows.
pub fn table(rows: &[Row]) -> String {
    let mut s = format!(
        "{:<18} {:<6} {:<11} {:>12} {:>10} {:>12}\n",
        "identity", "result", "class", "residual", "tol", "floor"
    );
    for r in rows {
        s += &format!(
            "{:<18} {:<6} {:<11} {:>12.3e} {:>10.1e} {:>12.3e}\n",
            r.identity,
            if r.passed { "ok" } else { "FAIL" },
            r.classification,
            r.max_residual,
            r.tolerance,
            r.truncation_floor
        );
        if let Some(e) = &r.error {
            s += &format!("    {e}\n");
        }
    }
    s
}
