//! Central record of numerical thresholds.
//!
//! Every tolerance that is not forced by an exact statement lives here, so a
//! run is auditable and the CLI can override individual values with
//! `--tol name=value`.

use thiserror::Error;

/// Numerical thresholds for the variety / critical-point machinery.
#[derive(Debug, Clone, PartialEq)]
pub struct Tolerances {
    /// Newton is converged when the velocity residual drops below this.
    pub newton_residual: f64,
    /// Torus distance under which two critical points are the same point.
    pub dedup: f64,
    /// |det Hess| below this is a degenerate (fold) critical point.
    pub curvature_degenerate: f64,
    /// Critical points inside this ball around a singular point are dropped.
    pub singular_ball: f64,
    /// A direction is Inside only if every critical point has |K| above this.
    pub inside_min_curvature: f64,
    /// A direction with no critical points is Outside only if it is at least
    /// this far (velocity metric) from the computed Gauss-map image.
    pub outside_distance: f64,
    /// Root gap in z below which a sheet pair is flagged near-coincident.
    pub near_root_gap: f64,
    /// |z H_z| below this is a vertical tangent (cannot occur off the
    /// singular set for these walks).
    pub vertical_tangent: f64,
    /// |grad H| below this declares a singular point of the variety.
    pub singular_grad: f64,
    /// Seed grid resolution per axis for the critical-point search.
    pub seed_grid: usize,
    /// Grid resolution per axis for the cached Gauss-map image.
    pub gauss_image_grid: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            newton_residual: 1e-10,
            dedup: 1e-6,
            curvature_degenerate: 1e-8,
            singular_ball: 1e-3,
            inside_min_curvature: 1e-6,
            outside_distance: 1e-2,
            near_root_gap: 1e-7,
            vertical_tangent: 1e-10,
            singular_grad: 1e-8,
            seed_grid: 64,
            gauss_image_grid: 128,
        }
    }
}

/// Unknown tolerance name in an override.
#[derive(Debug, Error)]
#[error("unknown tolerance `{0}`")]
pub struct UnknownTolerance(pub String);

impl Tolerances {
    /// Set one tolerance by name. Grid sizes take integral values.
    pub fn set(&mut self, name: &str, value: f64) -> Result<(), UnknownTolerance> {
        match name {
            "newton_residual" => self.newton_residual = value,
            "dedup" => self.dedup = value,
            "curvature_degenerate" => self.curvature_degenerate = value,
            "singular_ball" => self.singular_ball = value,
            "inside_min_curvature" => self.inside_min_curvature = value,
            "outside_distance" => self.outside_distance = value,
            "near_root_gap" => self.near_root_gap = value,
            "vertical_tangent" => self.vertical_tangent = value,
            "singular_grad" => self.singular_grad = value,
            "seed_grid" => self.seed_grid = value as usize,
            "gauss_image_grid" => self.gauss_image_grid = value as usize,
            other => return Err(UnknownTolerance(other.to_string())),
        }
        Ok(())
    }
}
