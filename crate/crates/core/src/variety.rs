//! The pole variety on the unit torus: sheet parameterization gamma(alpha,
//! beta), the logarithmic Gauss map and its projected velocity, the
//! Gauss-Kronecker curvature of the surface in flat-torus coordinates,
//! singular points, and the symmetry battery for the S family.
//!
//! In angle coordinates the surface {H = 0} on the torus is the zero set of a
//! real function L(alpha, beta, gamma). For the S and B families L has a
//! closed trigonometric form; for any real-orthogonal coin an equivalent
//! section is obtained by stripping the unit phase `e^{i(alpha+beta+2gamma)}`
//! off `H` composed with exp (the exponent box of the cleared H is centered
//! at (1,1,2)). Coins without such a section fall back to finite differences
//! of the root parameterization.

use crate::genfun::{arg_tau, build_g, build_h, roots_in_z, LaurentPoly3};
use crate::model::{CoinModel, Family};
use crate::tolerances::Tolerances;
use crate::C64;
use rand::prelude::*;
use rayon::prelude::*;
use std::f64::consts::{PI, TAU};
use std::sync::OnceLock;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum VarietyError {
    #[error("vertical tangent: |z H_z| = {mag:.3e} below tolerance")]
    VerticalTangent { mag: f64 },
    #[error("singular point: |grad H| = {mag:.3e} below tolerance")]
    SingularPoint { mag: f64 },
    #[error("no closed real section for this coin; only the area-ratio curvature path applies")]
    NoRealSection,
    #[error("degenerate critical point: Hessian eigenvalue {val:.3e} within tolerance of zero")]
    DegenerateCritical { val: f64 },
    #[error("sheet track lost: no root within {dist:.3e} of the tracked gamma")]
    SheetTrackLost { dist: f64 },
}

/// Angles of a point of the 3-torus, stored in [0, 2pi).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusPoint3 {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

/// Wrap an angle into [0, 2pi).
pub fn wrap_angle(a: f64) -> f64 {
    a.rem_euclid(TAU)
}

/// Distance of two angles on the circle.
pub fn circle_dist(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

impl TorusPoint3 {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Self {
        Self {
            alpha: wrap_angle(alpha),
            beta: wrap_angle(beta),
            gamma: wrap_angle(gamma),
        }
    }

    pub fn x(&self) -> C64 {
        C64::from_polar(1.0, self.alpha)
    }

    pub fn y(&self) -> C64 {
        C64::from_polar(1.0, self.beta)
    }

    pub fn z(&self) -> C64 {
        C64::from_polar(1.0, self.gamma)
    }

    pub fn xyz(&self) -> (C64, C64, C64) {
        (self.x(), self.y(), self.z())
    }

    /// Euclidean torus metric over the three circles.
    pub fn dist(&self, other: &Self) -> f64 {
        let da = circle_dist(self.alpha, other.alpha);
        let db = circle_dist(self.beta, other.beta);
        let dg = circle_dist(self.gamma, other.gamma);
        (da * da + db * db + dg * dg).sqrt()
    }
}

/// One point of the variety on the torus with its cached first- and
/// second-order data.
#[derive(Debug, Clone)]
pub struct SheetPoint {
    pub base: TorusPoint3,
    /// Rank of gamma among the z-roots at (alpha, beta), ordered by argument.
    pub sheet: usize,
    /// (x H_x, y H_y, z H_z) at the point; projectively a real vector.
    pub grad_log_h: [C64; 3],
    /// Projected Gauss-map velocity (r/n, s/n).
    pub velocity: [f64; 2],
    /// Gauss-Kronecker curvature in flat-torus coordinates (graph formula;
    /// finite-difference area-ratio for coins without a real section).
    pub curvature: f64,
    /// Set when the z-root gap at this (alpha, beta) is below tolerance.
    pub near_coincident: bool,
}

/// Raw sheet listing at one (alpha, beta): gamma values ordered by argument.
#[derive(Debug, Clone, Copy)]
pub struct SheetEntry {
    pub gamma: f64,
    pub sheet: usize,
    pub near_coincident: bool,
}

/// Connected components of the S-family variety, by gamma band.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    A,
    B,
    C,
    D,
}

/// Band classification: components sit in gamma bands of half-width pi/4
/// centered at 0, pi/2, pi, 3pi/2.
pub fn component_classify(gamma: f64) -> Component {
    let k = (wrap_angle(gamma) / (PI / 2.0)).round() as i64 % 4;
    match k {
        0 => Component::A,
        1 => Component::B,
        2 => Component::C,
        _ => Component::D,
    }
}

/// A located singular point of the variety with its residual gradient norm.
#[derive(Debug, Clone)]
pub struct SingularPoint {
    pub point: TorusPoint3,
    pub grad_norm: f64,
}

/// Row of the feasible-region point cloud.
#[derive(Debug, Clone)]
pub struct CloudPoint {
    pub alpha: f64,
    pub beta: f64,
    pub sheet: usize,
    pub gamma: f64,
    pub velocity: [f64; 2],
    pub curvature: f64,
}

/// Second-order jet of a real section at a torus point.
#[derive(Debug, Clone, Copy)]
pub struct Jet2 {
    pub value: f64,
    pub grad: [f64; 3],
    pub hess: [[f64; 3]; 3],
}

/// A real function cutting out the variety in angle coordinates.
#[derive(Debug, Clone)]
pub enum RealSection {
    /// sin 2g - sqrt(2t) (sin b cos g + cos a sin g) + cos a sin b
    TrigS { s2t: f64 },
    /// 2 cos^2 g - sqrt(2t)(cos a + cos b) cos g + cos a cos b + t - 1
    TrigB { s2t: f64, t: f64 },
    /// Re or Im of e^{-i(a+b+2g)} H(e^{i a}, e^{i b}, e^{i g}).
    Phase { take_im: bool },
}

const PHASE_CENTER: [f64; 3] = [1.0, 1.0, 2.0];

impl RealSection {
    fn value(&self, v: &Variety, p: &TorusPoint3) -> f64 {
        self.jet2(v, p).value
    }

    fn jet2(&self, v: &Variety, p: &TorusPoint3) -> Jet2 {
        match *self {
            RealSection::TrigS { s2t } => jet_trig_s(s2t, p),
            RealSection::TrigB { s2t, t } => jet_trig_b(s2t, t, p),
            RealSection::Phase { take_im } => jet_phase(v, take_im, p),
        }
    }
}

fn jet_trig_s(s2t: f64, p: &TorusPoint3) -> Jet2 {
    let (sa, ca) = p.alpha.sin_cos();
    let (sb, cb) = p.beta.sin_cos();
    let (sg, cg) = p.gamma.sin_cos();
    let (s2g, c2g) = (2.0 * p.gamma).sin_cos();
    let value = s2g - s2t * (sb * cg + ca * sg) + ca * sb;
    let grad = [
        s2t * sa * sg - sa * sb,
        -s2t * cb * cg + ca * cb,
        2.0 * c2g + s2t * (sb * sg - ca * cg),
    ];
    let hess = [
        [
            s2t * ca * sg - ca * sb,
            -sa * cb,
            s2t * sa * cg,
        ],
        [
            -sa * cb,
            s2t * sb * cg - ca * sb,
            s2t * cb * sg,
        ],
        [
            s2t * sa * cg,
            s2t * cb * sg,
            -4.0 * s2g + s2t * (sb * cg + ca * sg),
        ],
    ];
    Jet2 { value, grad, hess }
}

fn jet_trig_b(s2t: f64, t: f64, p: &TorusPoint3) -> Jet2 {
    let (sa, ca) = p.alpha.sin_cos();
    let (sb, cb) = p.beta.sin_cos();
    let (sg, cg) = p.gamma.sin_cos();
    let (s2g, c2g) = (2.0 * p.gamma).sin_cos();
    let value = 2.0 * cg * cg - s2t * (ca + cb) * cg + ca * cb + t - 1.0;
    let grad = [
        s2t * sa * cg - sa * cb,
        s2t * sb * cg - ca * sb,
        -2.0 * s2g + s2t * (ca + cb) * sg,
    ];
    let hess = [
        [s2t * ca * cg - ca * cb, sa * sb, -s2t * sa * sg],
        [sa * sb, s2t * cb * cg - ca * cb, -s2t * sb * sg],
        [
            -s2t * sa * sg,
            -s2t * sb * sg,
            -4.0 * c2g + s2t * (ca + cb) * cg,
        ],
    ];
    Jet2 { value, grad, hess }
}

fn jet_phase(v: &Variety, take_im: bool, p: &TorusPoint3) -> Jet2 {
    let (x, y, z) = p.xyz();
    let hv = v.h.eval_raw(x, y, z);
    let d: [C64; 3] = std::array::from_fn(|j| v.dh[j].eval_raw(x, y, z));
    let i = C64::new(0.0, 1.0);
    let phase = -(p.alpha * PHASE_CENTER[0] + p.beta * PHASE_CENTER[1] + p.gamma * PHASE_CENTER[2]);
    let e = C64::from_polar(1.0, phase);
    let pick = |w: C64| if take_im { w.im } else { w.re };

    let value = pick(e * hv);
    let mut grad = [0.0; 3];
    for j in 0..3 {
        grad[j] = pick(i * e * (d[j] - hv * PHASE_CENTER[j]));
    }
    let mut hess = [[0.0; 3]; 3];
    for j in 0..3 {
        for k in j..3 {
            let djk = v.d2h[j][k].eval_raw(x, y, z);
            let w = -(e
                * (djk - d[k] * PHASE_CENTER[j] - d[j] * PHASE_CENTER[k]
                    + hv * (PHASE_CENTER[j] * PHASE_CENTER[k])));
            hess[j][k] = pick(w);
            hess[k][j] = hess[j][k];
        }
    }
    Jet2 { value, grad, hess }
}

/// The variety of one model: the cleared denominator, its logarithmic
/// derivatives, the numerators, a real section when one exists, and cached
/// sweeps.
pub struct Variety {
    model: CoinModel,
    tol: Tolerances,
    h: LaurentPoly3,
    dh: [LaurentPoly3; 3],
    d2h: [[LaurentPoly3; 3]; 3],
    g: [[LaurentPoly3; 4]; 4],
    section: Option<RealSection>,
    singulars: OnceLock<Vec<SingularPoint>>,
    gauss_cloud: OnceLock<Vec<CloudPoint>>,
}

impl Variety {
    pub fn new(model: CoinModel) -> Self {
        Self::with_tolerances(model, Tolerances::default())
    }

    pub fn with_tolerances(model: CoinModel, tol: Tolerances) -> Self {
        let h = build_h(&model);
        let dh: [LaurentPoly3; 3] = std::array::from_fn(|j| h.dlog(j));
        let d2h: [[LaurentPoly3; 3]; 3] =
            std::array::from_fn(|j| std::array::from_fn(|k| dh[j].dlog(k)));
        let g: [[LaurentPoly3; 4]; 4] =
            std::array::from_fn(|i| std::array::from_fn(|j| build_g(&model, i, j)));
        let mut v = Self {
            model,
            tol,
            h,
            dh,
            d2h,
            g,
            section: None,
            singulars: OnceLock::new(),
            gauss_cloud: OnceLock::new(),
        };
        v.section = v.pick_section();
        v
    }

    fn pick_section(&self) -> Option<RealSection> {
        match self.model.family {
            Family::S { t } => Some(RealSection::TrigS {
                s2t: (2.0 * t).sqrt(),
            }),
            Family::B { t } => Some(RealSection::TrigB {
                s2t: (2.0 * t).sqrt(),
                t,
            }),
            _ => {
                // Probe whether e^{-i(a+b+2g)} H(e^{i theta}) is real or
                // purely imaginary; holds exactly when det U = +-1 and the
                // coin is real.
                let mut m_re = 0.0f64;
                let mut m_im = 0.0f64;
                for k in 0..9usize {
                    let p = TorusPoint3::new(
                        0.83 + 0.61 * k as f64,
                        1.91 + 0.37 * k as f64,
                        0.29 + 0.83 * k as f64,
                    );
                    let (x, y, z) = p.xyz();
                    let w = C64::from_polar(1.0, -(p.alpha + p.beta + 2.0 * p.gamma))
                        * self.h.eval_raw(x, y, z);
                    m_re = m_re.max(w.re.abs());
                    m_im = m_im.max(w.im.abs());
                }
                let scale = (m_re + m_im).max(1e-300);
                if m_im / scale < 1e-9 {
                    Some(RealSection::Phase { take_im: false })
                } else if m_re / scale < 1e-9 {
                    Some(RealSection::Phase { take_im: true })
                } else {
                    None
                }
            }
        }
    }

    pub fn model(&self) -> &CoinModel {
        &self.model
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tol
    }

    pub fn h(&self) -> &LaurentPoly3 {
        &self.h
    }

    /// x dH/dx, y dH/dy, z dH/dz as polynomials.
    pub fn dlog_h(&self) -> &[LaurentPoly3; 3] {
        &self.dh
    }

    /// Cleared numerator for the (i, j) entry of the resolvent.
    pub fn numerator(&self, i: usize, j: usize) -> &LaurentPoly3 {
        &self.g[i][j]
    }

    pub fn section(&self) -> Option<&RealSection> {
        self.section.as_ref()
    }

    /// Value/gradient/Hessian of the real section at a point.
    pub fn section_jet(&self, p: &TorusPoint3) -> Result<Jet2, VarietyError> {
        let s = self.section.as_ref().ok_or(VarietyError::NoRealSection)?;
        Ok(s.jet2(self, p))
    }

    /// The four gamma values over (alpha, beta), ordered by argument.
    pub fn sheets(&self, alpha: f64, beta: f64) -> Vec<SheetEntry> {
        let x = C64::from_polar(1.0, alpha);
        let y = C64::from_polar(1.0, beta);
        let zr = roots_in_z(&self.h, x, y);
        let gammas: Vec<f64> = zr.roots.iter().map(|z| arg_tau(*z)).collect();
        let m = gammas.len();
        gammas
            .iter()
            .enumerate()
            .map(|(k, &gamma)| {
                let mut gap = f64::INFINITY;
                for (other, &g2) in gammas.iter().enumerate() {
                    if other != k {
                        gap = gap.min(circle_dist(gamma, g2));
                    }
                }
                SheetEntry {
                    gamma,
                    sheet: k,
                    near_coincident: m > 1 && gap < self.tol.near_root_gap,
                }
            })
            .collect()
    }

    /// Projected logarithmic Gauss map at a point of the variety:
    /// v = (Re(x H_x / z H_z), Re(y H_y / z H_z)).
    pub fn gauss_velocity(&self, p: &TorusPoint3) -> Result<[f64; 2], VarietyError> {
        let (x, y, z) = p.xyz();
        let g = self.h.grad_log_raw(x, y, z);
        let mag = g[2].norm();
        if mag < self.tol.vertical_tangent {
            return Err(VarietyError::VerticalTangent { mag });
        }
        let v1 = (g[0] / g[2]).re;
        let v2 = (g[1] / g[2]).re;
        Ok([clamp_ballistic(v1), clamp_ballistic(v2)])
    }

    /// Gradient norm |grad H| at a torus point (equal to the norm of the
    /// logarithmic gradient there).
    pub fn grad_norm(&self, p: &TorusPoint3) -> f64 {
        let (x, y, z) = p.xyz();
        let g = self.h.grad_log_raw(x, y, z);
        (g[0].norm_sqr() + g[1].norm_sqr() + g[2].norm_sqr()).sqrt()
    }

    /// Refine gamma so the point lies on the sheet through (alpha, beta)
    /// nearest to the seed gamma.
    pub fn refine_gamma(&self, alpha: f64, beta: f64, gamma0: f64) -> Result<f64, VarietyError> {
        if let Some(section) = &self.section {
            let mut gamma = gamma0;
            for _ in 0..6 {
                let p = TorusPoint3::new(alpha, beta, gamma);
                let jet = section.jet2(self, &p);
                let lg = jet.grad[2];
                if lg.abs() < 1e-12 {
                    break;
                }
                let step = jet.value / lg;
                gamma -= step;
                if step.abs() < 1e-14 {
                    break;
                }
            }
            let p = TorusPoint3::new(alpha, beta, gamma);
            if section.value(self, &p).abs() < 1e-8 {
                return Ok(wrap_angle(gamma));
            }
            // fall through to the root-matching path on failure
        }
        self.refine_gamma_by_roots(alpha, beta, gamma0)
    }

    fn refine_gamma_by_roots(
        &self,
        alpha: f64,
        beta: f64,
        gamma0: f64,
    ) -> Result<f64, VarietyError> {
        let entries = self.sheets(alpha, beta);
        entries
            .iter()
            .min_by(|a, b| {
                circle_dist(a.gamma, gamma0).total_cmp(&circle_dist(b.gamma, gamma0))
            })
            .map(|e| e.gamma)
            .ok_or(VarietyError::SheetTrackLost { dist: f64::INFINITY })
    }

    /// Hessian of gamma(alpha, beta) along the sheet, by implicit second
    /// differentiation of the real section.
    pub fn gamma_hessian(&self, p: &TorusPoint3) -> Result<[[f64; 2]; 2], VarietyError> {
        match self.section {
            Some(_) => {
                let jet = self.section_jet(p)?;
                let lg = jet.grad[2];
                if lg.abs() < 1e-12 {
                    return Err(VarietyError::VerticalTangent { mag: lg.abs() });
                }
                let ga = -jet.grad[0] / lg;
                let gb = -jet.grad[1] / lg;
                let h = jet.hess;
                let haa = -(h[0][0] + 2.0 * h[0][2] * ga + h[2][2] * ga * ga) / lg;
                let hab = -(h[0][1] + h[0][2] * gb + h[1][2] * ga + h[2][2] * ga * gb) / lg;
                let hbb = -(h[1][1] + 2.0 * h[1][2] * gb + h[2][2] * gb * gb) / lg;
                Ok([[haa, hab], [hab, hbb]])
            }
            None => self.gamma_hessian_fd(p),
        }
    }

    /// Finite-difference Hessian of gamma along the sheet, for coins without
    /// a real section.
    fn gamma_hessian_fd(&self, p: &TorusPoint3) -> Result<[[f64; 2]; 2], VarietyError> {
        let h = 1e-4;
        let g = |da: f64, db: f64| -> Result<f64, VarietyError> {
            self.refine_gamma_by_roots(p.alpha + da, p.beta + db, p.gamma)
        };
        let unwrapped = |v: f64| {
            // keep the branch continuous around p.gamma
            let mut d = v - p.gamma;
            while d > PI {
                d -= TAU;
            }
            while d < -PI {
                d += TAU;
            }
            p.gamma + d
        };
        let gc = unwrapped(g(0.0, 0.0)?);
        let gaa = (unwrapped(g(h, 0.0)?) - 2.0 * gc + unwrapped(g(-h, 0.0)?)) / (h * h);
        let gbb = (unwrapped(g(0.0, h)?) - 2.0 * gc + unwrapped(g(0.0, -h)?)) / (h * h);
        let gab = (unwrapped(g(h, h)?) - unwrapped(g(h, -h)?) - unwrapped(g(-h, h)?)
            + unwrapped(g(-h, -h)?))
            / (4.0 * h * h);
        Ok([[gaa, gab], [gab, gbb]])
    }

    /// Curvature via the graph formula K = det Hess(gamma) / (1+|grad
    /// gamma|^2)^2 with gamma the sheet function over (alpha, beta).
    pub fn curvature_graph(&self, p: &TorusPoint3) -> Result<f64, VarietyError> {
        let hess = self.gamma_hessian(p)?;
        let v = self.gauss_velocity(p)?;
        let det = hess[0][0] * hess[1][1] - hess[0][1] * hess[1][0];
        let denom = 1.0 + v[0] * v[0] + v[1] * v[1];
        Ok(det / (denom * denom))
    }

    /// Curvature via the implicit formula K = ||Q_perp|| / |grad L|^2 with Q
    /// the quadratic part of the real section restricted to the tangent
    /// plane.
    pub fn curvature_implicit(&self, p: &TorusPoint3) -> Result<f64, VarietyError> {
        let jet = self.section_jet(p)?;
        let g = jet.grad;
        let gn = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt();
        if gn < 1e-10 {
            return Err(VarietyError::SingularPoint { mag: gn });
        }
        let n = [g[0] / gn, g[1] / gn, g[2] / gn];
        // Orthonormal basis of the tangent plane: seed with the coordinate
        // axis least aligned with the normal.
        let mut seed = [0.0; 3];
        let axis = (0..3)
            .min_by(|&a, &b| n[a].abs().total_cmp(&n[b].abs()))
            .unwrap();
        seed[axis] = 1.0;
        let dot = seed[0] * n[0] + seed[1] * n[1] + seed[2] * n[2];
        let mut u = [seed[0] - dot * n[0], seed[1] - dot * n[1], seed[2] - dot * n[2]];
        let un = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
        for v in &mut u {
            *v /= un;
        }
        let w = [
            n[1] * u[2] - n[2] * u[1],
            n[2] * u[0] - n[0] * u[2],
            n[0] * u[1] - n[1] * u[0],
        ];
        let quad = |a: &[f64; 3], b: &[f64; 3]| {
            let mut acc = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    acc += a[i] * jet.hess[i][j] * b[j];
                }
            }
            acc
        };
        let b11 = quad(&u, &u);
        let b12 = quad(&u, &w);
        let b22 = quad(&w, &w);
        Ok((b11 * b22 - b12 * b12) / (gn * gn))
    }

    /// Curvature via the finite-difference Jacobian of the velocity map,
    /// scaled by the projective area factor. This is the estimator of last
    /// resort and the cross-check for the closed-form paths.
    pub fn curvature_area_ratio(&self, p: &TorusPoint3, step: f64) -> Result<f64, VarietyError> {
        let vel = |da: f64, db: f64| -> Result<[f64; 2], VarietyError> {
            let gamma = self.refine_gamma(p.alpha + da, p.beta + db, p.gamma)?;
            self.gauss_velocity(&TorusPoint3::new(p.alpha + da, p.beta + db, gamma))
        };
        let vpa = vel(step, 0.0)?;
        let vma = vel(-step, 0.0)?;
        let vpb = vel(0.0, step)?;
        let vmb = vel(0.0, -step)?;
        let j11 = (vpa[0] - vma[0]) / (2.0 * step);
        let j21 = (vpa[1] - vma[1]) / (2.0 * step);
        let j12 = (vpb[0] - vmb[0]) / (2.0 * step);
        let j22 = (vpb[1] - vmb[1]) / (2.0 * step);
        let v = self.gauss_velocity(p)?;
        let denom = 1.0 + v[0] * v[0] + v[1] * v[1];
        // d(v)/d(alpha,beta) = -Hess gamma, whose determinant is even in the
        // sign flip, so the signed Jacobian already matches the graph sign.
        Ok((j11 * j22 - j12 * j21) / (denom * denom))
    }

    /// Full SheetPoint with cached first/second-order data.
    pub fn sheet_point(
        &self,
        alpha: f64,
        beta: f64,
        gamma: f64,
        sheet: usize,
        near_coincident: bool,
    ) -> Result<SheetPoint, VarietyError> {
        let base = TorusPoint3::new(alpha, beta, gamma);
        let (x, y, z) = base.xyz();
        let grad_log_h = self.h.grad_log_raw(x, y, z);
        let velocity = self.gauss_velocity(&base)?;
        let curvature = match self.section {
            Some(_) => self.curvature_graph(&base)?,
            None => self.curvature_area_ratio(&base, 1e-4)?,
        };
        Ok(SheetPoint {
            base,
            sheet,
            grad_log_h,
            velocity,
            curvature,
            near_coincident,
        })
    }

    /// All sheet points over one (alpha, beta); entries that hit a vertical
    /// tangent or singular point come back as errors.
    pub fn sheet_points(&self, alpha: f64, beta: f64) -> Vec<Result<SheetPoint, VarietyError>> {
        self.sheets(alpha, beta)
            .into_iter()
            .map(|e| self.sheet_point(alpha, beta, e.gamma, e.sheet, e.near_coincident))
            .collect()
    }

    /// Velocity cloud of the Gauss-map image over a grid_n x grid_n sweep of
    /// (alpha, beta), all sheets; rows in (a, b, sheet) order. Points where
    /// the map degenerates (singular points of B) are skipped.
    pub fn feasible_region_image(&self, grid_n: usize) -> Vec<CloudPoint> {
        let rows: Vec<Vec<CloudPoint>> = (0..grid_n)
            .into_par_iter()
            .map(|a| {
                let alpha = TAU * a as f64 / grid_n as f64;
                let mut row = Vec::with_capacity(grid_n * 4);
                for b in 0..grid_n {
                    let beta = TAU * b as f64 / grid_n as f64;
                    for p in self.sheet_points(alpha, beta).into_iter().flatten() {
                        row.push(CloudPoint {
                            alpha,
                            beta,
                            sheet: p.sheet,
                            gamma: p.base.gamma,
                            velocity: p.velocity,
                            curvature: p.curvature,
                        });
                    }
                }
                row
            })
            .collect();
        rows.into_iter().flatten().collect()
    }

    /// Cached Gauss-map image at the configured resolution.
    pub fn gauss_cloud(&self) -> &[CloudPoint] {
        self.gauss_cloud
            .get_or_init(|| self.feasible_region_image(self.tol.gauss_image_grid))
    }

    /// Distance from a velocity to the cached Gauss-map image.
    pub fn gauss_distance(&self, v: [f64; 2]) -> f64 {
        self.gauss_cloud()
            .iter()
            .map(|p| {
                let dx = p.velocity[0] - v[0];
                let dy = p.velocity[1] - v[1];
                (dx * dx + dy * dy).sqrt()
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Local minimizers of |grad H|^2 over the variety, found by
    /// multi-start Levenberg-Marquardt on the residual (H, x H_x, y H_y,
    /// z H_z) and filtered at the singular threshold.
    pub fn singular_points(&self) -> &[SingularPoint] {
        self.singulars.get_or_init(|| {
            let grid = 32usize;
            let mut candidates: Vec<(TorusPoint3, f64)> = (0..grid)
                .into_par_iter()
                .flat_map_iter(|a| {
                    let alpha = TAU * a as f64 / grid as f64;
                    let mut local = Vec::new();
                    for b in 0..grid {
                        let beta = TAU * b as f64 / grid as f64;
                        for e in self.sheets(alpha, beta) {
                            if let Some(hit) =
                                self.polish_singular(TorusPoint3::new(alpha, beta, e.gamma))
                            {
                                local.push(hit);
                            }
                        }
                    }
                    local
                })
                .collect();
            candidates.sort_by(|a, b| {
                (a.0.alpha, a.0.beta, a.0.gamma)
                    .partial_cmp(&(b.0.alpha, b.0.beta, b.0.gamma))
                    .unwrap()
            });
            let mut out: Vec<SingularPoint> = Vec::new();
            for (p, gn) in candidates {
                if let Some(existing) = out.iter_mut().find(|s| s.point.dist(&p) < 1e-5) {
                    if gn < existing.grad_norm {
                        existing.point = p;
                        existing.grad_norm = gn;
                    }
                } else {
                    out.push(SingularPoint {
                        point: p,
                        grad_norm: gn,
                    });
                }
            }
            out
        })
    }

    /// Levenberg-Marquardt on the stacked residual (H, x H_x, y H_y, z H_z);
    /// returns the converged point when it clears the singular threshold.
    fn polish_singular(&self, start: TorusPoint3) -> Option<(TorusPoint3, f64)> {
        let mut th = [start.alpha, start.beta, start.gamma];
        let mut lambda = 1e-3;
        let residual = |th: &[f64; 3]| -> [C64; 4] {
            let p = TorusPoint3::new(th[0], th[1], th[2]);
            let (x, y, z) = p.xyz();
            [
                self.h.eval_raw(x, y, z),
                self.dh[0].eval_raw(x, y, z),
                self.dh[1].eval_raw(x, y, z),
                self.dh[2].eval_raw(x, y, z),
            ]
        };
        let cost = |r: &[C64; 4]| r.iter().map(|c| c.norm_sqr()).sum::<f64>();
        let mut r = residual(&th);
        let mut f = cost(&r);
        for _ in 0..60 {
            let p = TorusPoint3::new(th[0], th[1], th[2]);
            let (x, y, z) = p.xyz();
            let i = C64::new(0.0, 1.0);
            // J[k][j] = d residual_k / d theta_j = i * (D_j P_k)(z)
            let mut jac = [[C64::new(0.0, 0.0); 3]; 4];
            for j in 0..3 {
                jac[0][j] = i * self.dh[j].eval_raw(x, y, z);
                for k in 0..3 {
                    jac[k + 1][j] = i * self.d2h[k][j].eval_raw(x, y, z);
                }
            }
            // Normal equations of the stacked real system.
            let mut a = [[0.0f64; 3]; 3];
            let mut b = [0.0f64; 3];
            for k in 0..4 {
                for p1 in 0..3 {
                    b[p1] -= (jac[k][p1].conj() * r[k]).re;
                    for p2 in 0..3 {
                        a[p1][p2] += (jac[k][p1].conj() * jac[k][p2]).re;
                    }
                }
            }
            let mut improved = false;
            for _ in 0..8 {
                let mut am = a;
                for d in 0..3 {
                    am[d][d] += lambda;
                }
                let Some(delta) = solve3(&am, &b) else {
                    lambda *= 10.0;
                    continue;
                };
                let trial = [th[0] + delta[0], th[1] + delta[1], th[2] + delta[2]];
                let rt = residual(&trial);
                let ft = cost(&rt);
                if ft < f {
                    th = trial;
                    r = rt;
                    f = ft;
                    lambda = (lambda * 0.3).max(1e-12);
                    improved = true;
                    break;
                }
                lambda *= 10.0;
            }
            if !improved || f < 1e-26 {
                break;
            }
        }
        let gn = (r[1].norm_sqr() + r[2].norm_sqr() + r[3].norm_sqr()).sqrt();
        let on_variety = r[0].norm() < 1e-8;
        (on_variety && gn < self.tol.singular_grad)
            .then(|| (TorusPoint3::new(th[0], th[1], th[2]), gn))
    }

    /// Verify the seven S-family isometries: each must preserve the variety
    /// and transform velocities by the documented signed swaps.
    pub fn symmetry_check(&self, samples: usize, seed: u64) -> SymmetryReport {
        assert!(
            matches!(self.model.family, Family::S { .. }),
            "the isometry battery applies to the S family"
        );
        let mut rng = StdRng::seed_from_u64(seed);
        let mut max_residual = [0.0f64; 7];
        let mut max_velocity_error = [0.0f64; 7];
        let mut used = 0usize;
        while used < samples {
            let alpha = rng.random_range(0.0..TAU);
            let beta = rng.random_range(0.0..TAU);
            let entries = self.sheets(alpha, beta);
            let pick = rng.random_range(0..entries.len().max(1));
            let Some(e) = entries.get(pick) else { continue };
            let p = TorusPoint3::new(alpha, beta, e.gamma);
            let Ok(v) = self.gauss_velocity(&p) else { continue };
            used += 1;
            for (k, (map, vmap)) in S_ISOMETRIES.iter().enumerate() {
                let q = map(&p);
                let (x, y, z) = q.xyz();
                max_residual[k] = max_residual[k].max(self.h.eval_raw(x, y, z).norm());
                if let Ok(vq) = self.gauss_velocity(&q) {
                    let want = vmap(v);
                    let err = ((vq[0] - want[0]).powi(2) + (vq[1] - want[1]).powi(2)).sqrt();
                    max_velocity_error[k] = max_velocity_error[k].max(err);
                }
            }
        }
        SymmetryReport {
            samples: used,
            max_residual,
            max_velocity_error,
        }
    }
}

fn clamp_ballistic(v: f64) -> f64 {
    // The walk moves at most one site per step; shave rounding overshoot only.
    if v > 1.0 && v < 1.0 + 1e-9 {
        1.0
    } else if v < -1.0 && v > -1.0 - 1e-9 {
        -1.0
    } else {
        v
    }
}

/// Solve a symmetric positive 3x3 system by Gaussian elimination.
fn solve3(a: &[[f64; 3]; 3], b: &[f64; 3]) -> Option<[f64; 3]> {
    let mut m = [
        [a[0][0], a[0][1], a[0][2], b[0]],
        [a[1][0], a[1][1], a[1][2], b[1]],
        [a[2][0], a[2][1], a[2][2], b[2]],
    ];
    for col in 0..3 {
        let piv = (col..3).max_by(|&r1, &r2| m[r1][col].abs().total_cmp(&m[r2][col].abs()))?;
        if m[piv][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, piv);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            for c2 in col..4 {
                m[row][c2] -= f * m[col][c2];
            }
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let mut acc = m[row][3];
        for c2 in row + 1..3 {
            acc -= m[row][c2] * x[c2];
        }
        x[row] = acc / m[row][row];
    }
    Some(x)
}

/// Names, point maps, and velocity covariance of the seven S-family
/// isometries.
pub const S_ISOMETRY_NAMES: [&str; 7] = [
    "phi_A", "phi_B", "phi_C", "phi_D", "phi_1", "phi_2", "phi_3",
];

type PointMap = fn(&TorusPoint3) -> TorusPoint3;
type VelocityMap = fn([f64; 2]) -> [f64; 2];

pub static S_ISOMETRIES: [(PointMap, VelocityMap); 7] = [
    (
        |p| TorusPoint3::new(-p.alpha, -p.beta, -p.gamma),
        |v| v,
    ),
    (
        |p| TorusPoint3::new(p.beta + PI / 2.0, p.alpha + PI / 2.0, p.gamma + PI / 2.0),
        |v| [v[1], v[0]],
    ),
    (
        |p| TorusPoint3::new(p.alpha + PI, p.beta + PI, p.gamma + PI),
        |v| v,
    ),
    (
        |p| {
            TorusPoint3::new(
                p.beta + 3.0 * PI / 2.0,
                p.alpha + 3.0 * PI / 2.0,
                p.gamma + 3.0 * PI / 2.0,
            )
        },
        |v| [v[1], v[0]],
    ),
    (
        |p| TorusPoint3::new(p.alpha, p.beta + PI, -p.gamma),
        |v| [-v[0], -v[1]],
    ),
    (
        |p| TorusPoint3::new(-p.alpha, p.beta, p.gamma),
        |v| [-v[0], v[1]],
    ),
    (
        |p| TorusPoint3::new(p.alpha, PI - p.beta, p.gamma),
        |v| [v[0], -v[1]],
    ),
];

/// Aggregated residuals of the isometry battery.
#[derive(Debug, Clone)]
pub struct SymmetryReport {
    pub samples: usize,
    /// max |H| at mapped points, per map.
    pub max_residual: [f64; 7],
    /// max velocity covariance error, per map.
    pub max_velocity_error: [f64; 7],
}

impl SymmetryReport {
    pub fn worst_residual(&self) -> f64 {
        self.max_residual.iter().copied().fold(0.0, f64::max)
    }

    pub fn worst_velocity_error(&self) -> f64 {
        self.max_velocity_error.iter().copied().fold(0.0, f64::max)
    }
}
