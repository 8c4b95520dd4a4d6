//! The `check` subcommand: one battery bundling every module's invariants,
//! with a machine-readable summary.

use num_complex::Complex64;
use qrw2d::genfun::{
    build_h_uncleared, check_torality, cleared_det_at, mu_power, LaurentPoly3,
};
use qrw2d::model::{CoinModel, Family};
use qrw2d::tolerances::Tolerances;
use qrw2d::variety::{TorusPoint3, Variety};
use serde::Serialize;
use std::f64::consts::TAU;

#[derive(Debug, Serialize)]
pub struct CheckItem {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub threshold: f64,
    pub detail: String,
}

#[derive(Debug, Serialize)]
pub struct CheckReport {
    pub model: String,
    pub note: String,
    pub checks: Vec<CheckItem>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| !c.passed).count()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("model: {}\n", self.model));
        out.push_str(&format!("note: {}\n", self.note));
        for c in &self.checks {
            out.push_str(&format!(
                "{} {:<28} value={:<12.3e} threshold={:<9.1e} {}\n",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.value,
                c.threshold,
                c.detail
            ));
        }
        out.push_str(&format!(
            "{}: {} checks, {} failed\n",
            if self.passed() { "OK" } else { "FAILED" },
            self.checks.len(),
            self.failures()
        ));
        out
    }
}

/// Low-discrepancy angle sequence for deterministic sampling.
fn golden_angles(count: usize) -> Vec<(f64, f64)> {
    const PHI: f64 = 0.618_033_988_749_894_9;
    const PSI: f64 = 0.754_877_666_246_693;
    (0..count)
        .map(|k| {
            let a = ((k as f64 + 0.5) * PHI).fract() * TAU;
            let b = ((k as f64 + 0.5) * PSI).fract() * TAU;
            (a, b)
        })
        .collect()
}

/// A check that passes when `value` is below `threshold`.
fn below(name: &str, value: f64, threshold: f64, detail: impl Into<String>) -> CheckItem {
    CheckItem {
        name: name.into(),
        passed: value < threshold,
        value,
        threshold,
        detail: detail.into(),
    }
}

/// A check that passes when `value` is above `threshold`.
fn above(name: &str, value: f64, threshold: f64, detail: impl Into<String>) -> CheckItem {
    CheckItem {
        name: name.into(),
        passed: value > threshold,
        value,
        threshold,
        detail: detail.into(),
    }
}

pub fn run_checks(model: &CoinModel, tol: &Tolerances, samples: usize) -> CheckReport {
    let mut checks = Vec::new();

    checks.push(below(
        "coin_unitarity",
        model.unitarity_defect(),
        1e-10,
        "max |(U*U - I)_ij|",
    ));

    let torality = check_torality(model, samples, 2026);
    checks.push(below(
        "torality",
        torality.max_deviation,
        1e-8,
        format!(
            "max ||z|-1| over {} samples, worst at ({:.4}, {:.4})",
            torality.samples, torality.worst.0, torality.worst.1
        ),
    ));

    let variety = Variety::with_tolerances(model.clone(), tol.clone());
    let h = variety.h();

    // Symbolic determinant expansion against direct numeric evaluation.
    let mut det_err = 0.0f64;
    for (a, b) in golden_angles(100) {
        let g = (a * 0.7 + b * 1.3).rem_euclid(TAU);
        let x = Complex64::from_polar(1.0, a);
        let y = Complex64::from_polar(1.0, b);
        let z = Complex64::from_polar(1.0, g);
        det_err = det_err.max((h.eval_raw(x, y, z) - cleared_det_at(model, x, y, z)).norm());
    }
    checks.push(below(
        "h_determinant_consistency",
        det_err,
        1e-11,
        "max |H - xy det(I - zMU)| at sample points",
    ));

    // G/H reproduces the matrix-power series through z^4.
    let powers: Vec<_> = (0..=4).map(|n| mu_power(model, n)).collect();
    let mut series_err = 0.0f64;
    for i in 0..4 {
        for j in 0..4 {
            let g = variety.numerator(i, j);
            let mut series = LaurentPoly3::zero();
            for (n, p) in powers.iter().enumerate() {
                series = series.add(&p[i][j].mul(&LaurentPoly3::monomial(
                    [0, 0, n as i32],
                    Complex64::new(1.0, 0.0),
                )));
            }
            let diff = g.sub(&h.mul(&series));
            for (e, c) in diff.terms() {
                if e[2] <= 4 {
                    series_err = series_err.max(c.norm());
                }
            }
        }
    }
    checks.push(below(
        "series_consistency",
        series_err,
        1e-11,
        "max |G - H * truncated resolvent series| on z-degree <= 4",
    ));

    // Cleared vs uncleared denominators induce the same Gauss map on V1.
    let hu = build_h_uncleared(model);
    let mut gauss_err = 0.0f64;
    for (a, b) in golden_angles(40) {
        for e in variety.sheets(a, b) {
            let p = TorusPoint3::new(a, b, e.gamma);
            let (x, y, z) = p.xyz();
            let gc = h.grad_log_raw(x, y, z);
            let gu = hu.grad_log_raw(x, y, z);
            if gc[2].norm() < 1e-6 || gu[2].norm() < 1e-6 {
                continue;
            }
            let dv1 = ((gc[0] / gc[2]).re - (gu[0] / gu[2]).re).abs();
            let dv2 = ((gc[1] / gc[2]).re - (gu[1] / gu[2]).re).abs();
            gauss_err = gauss_err.max(dv1.max(dv2));
        }
    }
    checks.push(below(
        "cleared_uncleared_gauss_map",
        gauss_err,
        1e-8,
        "max velocity difference on V1",
    ));

    // Sheet count: a unitary nearest-neighbor walk is a four-cover.
    let mut min_sheets = usize::MAX;
    for (a, b) in golden_angles(60) {
        min_sheets = min_sheets.min(variety.sheets(a, b).len());
    }
    checks.push(CheckItem {
        name: "four_sheet_cover".into(),
        passed: min_sheets == 4,
        value: min_sheets as f64,
        threshold: 4.0,
        detail: "z-roots per (alpha, beta)".into(),
    });

    // Smoothness or the known singular set, per family.
    let singulars = variety.singular_points();
    match model.family {
        Family::B { t } => {
            let g0 = (t / 2.0).sqrt().acos();
            let expected = [
                TorusPoint3::new(0.0, 0.0, g0),
                TorusPoint3::new(0.0, 0.0, -g0),
                TorusPoint3::new(std::f64::consts::PI, std::f64::consts::PI, std::f64::consts::PI + g0),
                TorusPoint3::new(std::f64::consts::PI, std::f64::consts::PI, std::f64::consts::PI - g0),
            ];
            checks.push(CheckItem {
                name: "singular_point_count".into(),
                passed: singulars.len() == 4,
                value: singulars.len() as f64,
                threshold: 4.0,
                detail: "isolated singular points on the torus".into(),
            });
            let mut loc_err = 0.0f64;
            for want in &expected {
                let best = singulars
                    .iter()
                    .map(|s| s.point.dist(want))
                    .fold(f64::INFINITY, f64::min);
                loc_err = loc_err.max(best);
            }
            checks.push(below(
                "singular_point_locations",
                loc_err,
                1e-6,
                "max distance to +-(1,1,sqrt(t/2)+-i sqrt(1-t/2))",
            ));
        }
        Family::S { .. } | Family::A { .. } => {
            let mut min_grad = f64::INFINITY;
            let grid = 64usize;
            for ai in 0..grid {
                for bi in 0..grid {
                    let a = TAU * ai as f64 / grid as f64;
                    let b = TAU * bi as f64 / grid as f64;
                    for e in variety.sheets(a, b) {
                        min_grad = min_grad.min(variety.grad_norm(&TorusPoint3::new(a, b, e.gamma)));
                    }
                }
            }
            checks.push(above(
                "smoothness_min_grad",
                min_grad,
                1e-3,
                "min |grad H| over a 64x64x4 sample of V1",
            ));
            checks.push(CheckItem {
                name: "no_singular_points".into(),
                passed: singulars.is_empty(),
                value: singulars.len() as f64,
                threshold: 0.0,
                detail: "multi-start search found none".into(),
            });
        }
        _ => {
            // No smoothness guarantee for other coins (the Grover walk has
            // flat bands at z = +-1 and a positive-dimensional singular
            // set); report what the search saw.
            checks.push(CheckItem {
                name: "singular_points_found".into(),
                passed: true,
                value: singulars.len() as f64,
                threshold: f64::INFINITY,
                detail: "informational: no smoothness guarantee for this family".into(),
            });
        }
    }

    // Curvature: the two closed-form routes agree tightly, the
    // finite-difference area ratio loosely.
    if variety.section().is_some() {
        let mut rel_ig = 0.0f64;
        let mut rel_ga = 0.0f64;
        let mut tested = 0usize;
        for (a, b) in golden_angles(120) {
            if tested >= 60 {
                break;
            }
            for e in variety.sheets(a, b) {
                let p = TorusPoint3::new(a, b, e.gamma);
                let (Ok(kg), Ok(ki)) = (variety.curvature_graph(&p), variety.curvature_implicit(&p))
                else {
                    continue;
                };
                if kg.abs() < 1e-3 {
                    continue;
                }
                rel_ig = rel_ig.max((kg - ki).abs() / kg.abs());
                if let Ok(ka) = variety.curvature_area_ratio(&p, 1e-4) {
                    rel_ga = rel_ga.max((kg - ka).abs() / kg.abs());
                }
                tested += 1;
            }
        }
        checks.push(below(
            "curvature_implicit_vs_graph",
            rel_ig,
            1e-6,
            "max relative difference at smooth sample points",
        ));
        checks.push(below(
            "curvature_vs_area_ratio",
            rel_ga,
            1e-3,
            "max relative difference against the FD Jacobian",
        ));
    }

    // S-family isometry battery.
    if matches!(model.family, Family::S { .. }) {
        let report = variety.symmetry_check(300, 2026);
        checks.push(below(
            "s_isometry_residual",
            report.worst_residual(),
            1e-10,
            "max |H| at mapped points, all seven maps",
        ));
        checks.push(below(
            "s_isometry_velocity",
            report.worst_velocity_error(),
            1e-8,
            "max velocity covariance error",
        ));
    }

    CheckReport {
        model: model.family.to_string(),
        note: "the S(t) coin's (4,4) entry is taken as sqrt(t)/sqrt(2), the unique \
               value completing an orthogonal matrix in the printed sign pattern"
            .into(),
        checks,
    }
}
