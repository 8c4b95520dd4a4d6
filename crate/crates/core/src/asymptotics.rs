//! Stationary-phase asymptotics: critical points of a direction, the
//! pointwise amplitude formula, direction classification, and the feasible
//! region seen through them.
//!
//! For a lattice direction (r, s, n) with velocity v = (r/n, s/n), the
//! critical set W(v) collects the torus points of the variety whose
//! projected logarithmic Gauss map equals v. Writing gamma(alpha, beta) for
//! the sheet function, each critical point contributes
//!
//! ```text
//!   z^-(r,s,n) * e^{-i pi tau/4} * (|r|/n) |det Hess gamma|^{-1/2}
//!       * G(z) / (i z H_z(z))
//! ```
//!
//! and the amplitude estimate is 1/(2 pi |r|) times the sum, with |r| the
//! Euclidean norm of (r, s, n) and tau = sign(n) * signature(Hess gamma) the
//! index of the phase critical point. The tau phase orientation is frozen
//! against the exact simulator (predictions converge to the simulated
//! probabilities as n grows only for this sign). All per-point phases are
//! explicit so the interference between critical points is exact; only one
//! global unit factor is undetermined, and every check compares
//! |amplitude|^2.

use crate::model::Family;
use crate::tolerances::Tolerances;
use crate::variety::{circle_dist, SheetPoint, TorusPoint3, Variety, VarietyError};
use crate::C64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::{PI, TAU};

/// A spacetime lattice direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Direction {
    pub r: i64,
    pub s: i64,
    pub n: i64,
}

impl Direction {
    pub fn new(r: i64, s: i64, n: i64) -> Self {
        assert!(n >= 1, "time must be positive");
        Self { r, s, n }
    }

    /// Velocity (r/n, s/n).
    pub fn velocity(&self) -> [f64; 2] {
        [self.r as f64 / self.n as f64, self.s as f64 / self.n as f64]
    }

    /// Euclidean norm of the integer 3-vector.
    pub fn norm(&self) -> f64 {
        ((self.r * self.r + self.s * self.s + self.n * self.n) as f64).sqrt()
    }

    /// Nearest-neighbor steps change r+s by one per tick, so amplitudes
    /// vanish unless r+s = n (mod 2).
    pub fn parity_ok(&self) -> bool {
        (self.r + self.s - self.n).rem_euclid(2) == 0
    }
}

/// Where a velocity sits relative to the feasible region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DirectionStatus {
    Inside,
    Outside,
    NearBoundary,
    NearSingularDirection,
}

/// A critical point of the phase for one direction.
#[derive(Debug, Clone)]
pub struct CriticalPoint {
    pub point: SheetPoint,
    /// Hessian of the sheet function gamma at the point.
    pub hess_gamma: [[f64; 2]; 2],
    /// Signature sign(n) * signature(Hess gamma), in {-2, 0, 2}.
    pub tau: i32,
}

/// Signature of a symmetric 2x2 matrix; degenerate eigenvalues are an error.
pub fn signature(hess: &[[f64; 2]; 2], eig_tol: f64) -> Result<i32, VarietyError> {
    let tr = hess[0][0] + hess[1][1];
    let det = hess[0][0] * hess[1][1] - hess[0][1] * hess[1][0];
    let disc = (tr * tr - 4.0 * det).max(0.0).sqrt();
    let l1 = 0.5 * (tr + disc);
    let l2 = 0.5 * (tr - disc);
    for l in [l1, l2] {
        if l.abs() < eig_tol {
            return Err(VarietyError::DegenerateCritical { val: l });
        }
    }
    Ok(l1.signum() as i32 + l2.signum() as i32)
}

/// All critical points of the direction's velocity: solutions of
/// gauss_velocity = v on every sheet, found by Newton from a seed grid,
/// deduplicated and polished.
pub fn critical_points(
    variety: &Variety,
    v: [f64; 2],
    tol: &Tolerances,
) -> Vec<CriticalPoint> {
    critical_points_with_grid(variety, v, tol, tol.seed_grid)
}

/// Seed-grid-explicit variant; the doubling test uses it to check solver
/// completeness.
pub fn critical_points_with_grid(
    variety: &Variety,
    v: [f64; 2],
    tol: &Tolerances,
    grid: usize,
) -> Vec<CriticalPoint> {
    assert!(
        v[0].abs() < 1.0 && v[1].abs() < 1.0,
        "velocity outside the open ballistic square"
    );
    let mut found: Vec<TorusPoint3> = (0..grid)
        .into_par_iter()
        .flat_map_iter(|a| {
            let alpha = TAU * a as f64 / grid as f64;
            let mut local = Vec::new();
            for b in 0..grid {
                let beta = TAU * b as f64 / grid as f64;
                for e in variety.sheets(alpha, beta) {
                    if let Some(p) = newton_velocity(variety, alpha, beta, e.gamma, v, tol) {
                        local.push(p);
                    }
                }
            }
            local
        })
        .collect();

    // Exclude hits inside the guard ball around singular points.
    let singulars = variety.singular_points();
    found.retain(|p| {
        singulars
            .iter()
            .all(|s| s.point.dist(p) > tol.singular_ball)
    });

    // Deduplicate on the torus metric; keep deterministic order.
    found.sort_by(|p, q| {
        (p.alpha, p.beta, p.gamma)
            .partial_cmp(&(q.alpha, q.beta, q.gamma))
            .unwrap()
    });
    let mut dedup: Vec<TorusPoint3> = Vec::new();
    for p in found {
        if dedup.iter().all(|q| q.dist(&p) > tol.dedup) {
            dedup.push(p);
        }
    }

    let mut out = Vec::with_capacity(dedup.len());
    for p in dedup {
        let Some(cp) = finish_critical_point(variety, &p) else {
            continue;
        };
        out.push(cp);
    }
    out
}

/// Newton iteration for gauss_velocity(alpha, beta) = v along one sheet.
/// Returns the converged torus point.
fn newton_velocity(
    variety: &Variety,
    alpha0: f64,
    beta0: f64,
    gamma0: f64,
    v: [f64; 2],
    tol: &Tolerances,
) -> Option<TorusPoint3> {
    let mut a = alpha0;
    let mut b = beta0;
    let mut g = gamma0;
    const MAX_STEP: f64 = 0.35;
    for _ in 0..40 {
        g = variety.refine_gamma(a, b, g).ok()?;
        let p = TorusPoint3::new(a, b, g);
        let vel = variety.gauss_velocity(&p).ok()?;
        let res = [vel[0] - v[0], vel[1] - v[1]];
        let rn = (res[0] * res[0] + res[1] * res[1]).sqrt();
        if rn < tol.newton_residual {
            return Some(p);
        }
        // d(velocity)/d(alpha,beta) = -Hess gamma.
        let hg = variety.gamma_hessian(&p).ok()?;
        let det = hg[0][0] * hg[1][1] - hg[0][1] * hg[1][0];
        if det.abs() < 1e-14 {
            return None;
        }
        let mut da = (hg[1][1] * res[0] - hg[0][1] * res[1]) / det;
        let mut db = (-hg[1][0] * res[0] + hg[0][0] * res[1]) / det;
        let step = (da * da + db * db).sqrt();
        if step > MAX_STEP {
            da *= MAX_STEP / step;
            db *= MAX_STEP / step;
        }
        a += da;
        b += db;
    }
    None
}

/// Assemble the CriticalPoint record at a converged location.
fn finish_critical_point(variety: &Variety, p: &TorusPoint3) -> Option<CriticalPoint> {
    // Re-anchor the sheet index against the root list at (alpha, beta).
    let entries = variety.sheets(p.alpha, p.beta);
    let e = entries
        .iter()
        .min_by(|x, y| circle_dist(x.gamma, p.gamma).total_cmp(&circle_dist(y.gamma, p.gamma)))?;
    let point = variety
        .sheet_point(p.alpha, p.beta, e.gamma, e.sheet, e.near_coincident)
        .ok()?;
    let hess_gamma = variety.gamma_hessian(&point.base).ok()?;
    let tau = signature(&hess_gamma, 1e-12).unwrap_or(0);
    Some(CriticalPoint {
        point,
        hess_gamma,
        tau,
    })
}

/// Shared per-direction data: critical points plus the coefficient each one
/// contributes independently of the chirality pair.
#[derive(Debug, Clone)]
pub struct DirectionalData {
    pub direction: Direction,
    pub points: Vec<CriticalPoint>,
    /// Phase-and-curvature coefficient per point; multiply by G(z) and the
    /// prefactor 1/(2 pi |r|) to get that point's term.
    coefficients: Vec<C64>,
    pub degenerate: bool,
}

/// Evaluate the direction-level data once; amplitudes for every chirality
/// pair follow by evaluating numerators at the same points.
pub fn directional_data(variety: &Variety, dir: Direction, tol: &Tolerances) -> DirectionalData {
    let points = critical_points(variety, dir.velocity(), tol);
    assemble_direction(variety, dir, points, tol)
}

/// Build the per-direction coefficients from an already-solved critical set.
/// The critical set depends on the velocity only, so callers comparing the
/// same velocity at several times can reuse it.
pub fn assemble_direction(
    variety: &Variety,
    dir: Direction,
    points: Vec<CriticalPoint>,
    tol: &Tolerances,
) -> DirectionalData {
    let rnorm = dir.norm();
    let mut coefficients = Vec::with_capacity(points.len());
    let mut degenerate = false;
    for cp in &points {
        // |K| below the degeneracy threshold means the stationary-phase
        // denominator is collapsing: flag and bail from estimates.
        if cp.point.curvature.abs() < tol.curvature_degenerate {
            degenerate = true;
        }
        let hg = &cp.hess_gamma;
        let det = hg[0][0] * hg[1][1] - hg[0][1] * hg[1][0];
        if det.abs() < 1e-300 {
            degenerate = true;
            coefficients.push(C64::new(0.0, 0.0));
            continue;
        }
        // tau is the signature of the phase Hessian (n/|r|) Hess gamma.
        let tau = dir.n.signum() as i32 * signature(hg, 0.0).unwrap_or(0);
        let p = &cp.point.base;
        let (x, y, z) = p.xyz();
        let cauchy_phase = C64::from_polar(
            1.0,
            -(dir.r as f64 * p.alpha + dir.s as f64 * p.beta + dir.n as f64 * p.gamma),
        );
        let stationary_phase = C64::from_polar(1.0, -PI * tau as f64 / 4.0);
        let zhz = variety.dlog_h()[2].eval_raw(x, y, z);
        let denom = C64::new(0.0, 1.0) * zhz;
        let scale = (rnorm / dir.n.abs() as f64) / det.abs().sqrt();
        coefficients.push(cauchy_phase * stationary_phase * scale / denom);
    }
    DirectionalData {
        direction: dir,
        points,
        coefficients,
        degenerate,
    }
}

impl DirectionalData {
    /// Asymptotic amplitude of the resolvent entry (i, j) in this direction,
    /// defined up to one global unit factor.
    pub fn amplitude_entry(&self, variety: &Variety, i: usize, j: usize) -> C64 {
        let g = variety.numerator(i, j);
        let mut acc = C64::new(0.0, 0.0);
        for (cp, coef) in self.points.iter().zip(&self.coefficients) {
            let (x, y, z) = cp.point.base.xyz();
            acc += coef * g.eval_raw(x, y, z);
        }
        acc / (2.0 * PI * self.direction.norm())
    }

    /// Triangle-inequality envelope of the amplitude: the sum of the
    /// critical-point term magnitudes. Interference makes the coherent
    /// |amplitude| oscillate in n at fixed velocity; the envelope scales
    /// exactly as 1/n and carries the Theta(1/n) statement.
    pub fn amplitude_envelope(&self, variety: &Variety, i: usize, j: usize) -> f64 {
        let g = variety.numerator(i, j);
        let mut acc = 0.0f64;
        for (cp, coef) in self.points.iter().zip(&self.coefficients) {
            let (x, y, z) = cp.point.base.xyz();
            acc += (coef * g.eval_raw(x, y, z)).norm();
        }
        acc / (2.0 * PI * self.direction.norm())
    }

    /// Predicted per-end-chirality amplitudes for a walk started in the
    /// superposition `start`. The simulator field started at e_i matches the
    /// (j, i) resolvent entry, so starts combine linearly across column
    /// indices.
    pub fn field_amplitudes(&self, variety: &Variety, start: [C64; 4]) -> [C64; 4] {
        std::array::from_fn(|j| {
            let mut acc = C64::new(0.0, 0.0);
            for (i, amp) in start.iter().enumerate() {
                if amp.norm_sqr() > 0.0 {
                    acc += *amp * self.amplitude_entry(variety, j, i);
                }
            }
            acc
        })
    }
}

/// Outcome of an amplitude query for one chirality pair.
#[derive(Debug, Clone)]
pub enum AmplitudeOutcome {
    /// Wrong parity: the amplitude is exactly zero.
    ParityZero,
    /// Stationary-phase estimate (up to one global unit factor).
    Estimate { value: C64 },
    /// Empty critical set: no polynomially-decaying contribution.
    Empty,
    /// A contributing point has |K| under the degeneracy threshold.
    NearBoundary,
}

/// Asymptotic amplitude for the (i, j) resolvent entry at (r, s, n).
pub fn amplitude(
    variety: &Variety,
    i: usize,
    j: usize,
    dir: Direction,
    tol: &Tolerances,
) -> AmplitudeOutcome {
    if !dir.parity_ok() {
        return AmplitudeOutcome::ParityZero;
    }
    let v = dir.velocity();
    if v[0].abs() >= 1.0 || v[1].abs() >= 1.0 {
        return AmplitudeOutcome::Empty;
    }
    let data = directional_data(variety, dir, tol);
    if data.degenerate {
        return AmplitudeOutcome::NearBoundary;
    }
    if data.points.is_empty() {
        return AmplitudeOutcome::Empty;
    }
    AmplitudeOutcome::Estimate {
        value: data.amplitude_entry(variety, i, j),
    }
}

/// Predicted site probability for a start vector: sum over end chiralities
/// of |amplitude|^2.
pub fn predicted_probability(data: &DirectionalData, variety: &Variety, start: [C64; 4]) -> f64 {
    data.field_amplitudes(variety, start)
        .iter()
        .map(|a| a.norm_sqr())
        .sum()
}

/// Classify a velocity against the feasible region.
pub fn classify_direction(variety: &Variety, v: [f64; 2], tol: &Tolerances) -> DirectionStatus {
    let w = critical_points(variety, v, tol);
    if !w.is_empty() {
        if w.iter().all(|cp| cp.point.curvature.abs() > tol.inside_min_curvature) {
            return DirectionStatus::Inside;
        }
        return DirectionStatus::NearBoundary;
    }
    if variety.gauss_distance(v) > tol.outside_distance {
        DirectionStatus::Outside
    } else {
        DirectionStatus::NearBoundary
    }
}

/// For the B family: the direction avoids the normal cone of the singular
/// points iff |v|^2 differs from (2-t)/((1-t) sqrt t); feasible velocities
/// always do because that threshold exceeds 4.
pub fn normal_cone_check_b(t: f64, v: [f64; 2]) -> bool {
    let threshold = (2.0 - t) / ((1.0 - t) * t.sqrt());
    let vsq = v[0] * v[0] + v[1] * v[1];
    (vsq - threshold).abs() > 1e-6
}

/// JSON-facing report for one direction query.
#[derive(Debug, Clone, Serialize)]
pub struct CriticalPointReport {
    pub v: [f64; 2],
    pub r: i64,
    pub s: i64,
    pub n: i64,
    pub status: DirectionStatus,
    pub points: Vec<ReportPoint>,
    pub predicted_probability: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact_probability: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportPoint {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub sheet: usize,
    #[serde(rename = "K")]
    pub curvature: f64,
    pub tau: i32,
}

/// Full per-direction pipeline: classification, critical points, predicted
/// probability for the given start vector, and optional exact probability
/// supplied by the caller.
pub fn direction_report(
    variety: &Variety,
    dir: Direction,
    start: [C64; 4],
    exact_probability: Option<f64>,
    tol: &Tolerances,
) -> CriticalPointReport {
    let v = dir.velocity();
    // On or beyond the light-cone boundary there are no interior critical
    // points; the Gauss image is strictly inside the open square.
    if v[0].abs() >= 1.0 || v[1].abs() >= 1.0 {
        return CriticalPointReport {
            v,
            r: dir.r,
            s: dir.s,
            n: dir.n,
            status: DirectionStatus::Outside,
            points: Vec::new(),
            predicted_probability: Some(0.0),
            exact_probability,
        };
    }
    let data = directional_data(variety, dir, tol);
    let mut status = if !data.points.is_empty() {
        if data.degenerate
            || data
                .points
                .iter()
                .any(|cp| cp.point.curvature.abs() <= tol.inside_min_curvature)
        {
            DirectionStatus::NearBoundary
        } else {
            DirectionStatus::Inside
        }
    } else if variety.gauss_distance(v) > tol.outside_distance {
        DirectionStatus::Outside
    } else {
        DirectionStatus::NearBoundary
    };
    if let Family::B { t } = variety.model().family {
        if !normal_cone_check_b(t, v) {
            status = DirectionStatus::NearSingularDirection;
        }
    }
    let predicted_probability = match status {
        DirectionStatus::Inside => {
            if dir.parity_ok() {
                Some(predicted_probability(&data, variety, start))
            } else {
                Some(0.0)
            }
        }
        DirectionStatus::Outside => Some(0.0),
        _ => None,
    };
    let points = data
        .points
        .iter()
        .map(|cp| ReportPoint {
            alpha: cp.point.base.alpha,
            beta: cp.point.base.beta,
            gamma: cp.point.base.gamma,
            sheet: cp.point.sheet,
            curvature: cp.point.curvature,
            tau: cp.tau,
        })
        .collect();
    CriticalPointReport {
        v,
        r: dir.r,
        s: dir.s,
        n: dir.n,
        status,
        points,
        predicted_probability,
        exact_probability,
    }
}
