//! The spacetime generating function as a rational object: the cleared
//! denominator `H = xy det(I - z M U)`, the adjugate numerators `G`, their
//! logarithmic gradients, and the roots-in-z / torality machinery.
//!
//! Clearing by `xy` removes the negative exponents of `M`'s diagonal. On the
//! zero set the logarithmic gradient of the cleared and the uncleared
//! denominator differ only by the unit factor `xy`, so the same cleared `H`
//! is used consistently everywhere downstream (Gauss map, curvature,
//! amplitude formula).

use crate::model::{CoinModel, STEPS};
use crate::roots::poly_roots;
use crate::C64;
use rand::prelude::*;
use std::collections::BTreeMap;
use std::f64::consts::TAU;
use thiserror::Error;

/// Coefficients with |c| below this are dropped when a polynomial is
/// normalized; all coin coefficients are O(1) so this is pure noise removal.
const COEF_DROP: f64 = 1e-15;

#[derive(Debug, Error, PartialEq)]
pub enum GenFunError {
    #[error("evaluation at a zero coordinate is outside the Laurent domain")]
    ZeroCoordinate,
}

/// Sparse Laurent polynomial in (x, y, z) with complex coefficients, keyed by
/// exponent triple. BTreeMap keeps term order deterministic.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LaurentPoly3 {
    terms: BTreeMap<[i32; 3], C64>,
}

impl LaurentPoly3 {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn monomial(exps: [i32; 3], coef: C64) -> Self {
        let mut p = Self::default();
        p.add_term(exps, coef);
        p.normalize();
        p
    }

    pub fn from_terms<I: IntoIterator<Item = ([i32; 3], C64)>>(it: I) -> Self {
        let mut p = Self::default();
        for (e, c) in it {
            p.add_term(e, c);
        }
        p.normalize();
        p
    }

    fn add_term(&mut self, exps: [i32; 3], coef: C64) {
        let entry = self.terms.entry(exps).or_insert(C64::new(0.0, 0.0));
        *entry += coef;
    }

    fn normalize(&mut self) {
        self.terms.retain(|_, c| c.norm() >= COEF_DROP);
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[i32; 3], &C64)> {
        self.terms.iter()
    }

    pub fn coeff(&self, exps: [i32; 3]) -> C64 {
        self.terms.get(&exps).copied().unwrap_or(C64::new(0.0, 0.0))
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (&e, &c) in &other.terms {
            out.add_term(e, c);
        }
        out.normalize();
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (&e, &c) in &other.terms {
            out.add_term(e, -c);
        }
        out.normalize();
        out
    }

    pub fn neg(&self) -> Self {
        Self {
            terms: self.terms.iter().map(|(&e, &c)| (e, -c)).collect(),
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = Self {
            terms: self.terms.iter().map(|(&e, &c)| (e, c * s)).collect(),
        };
        out.normalize();
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::default();
        for (&ea, &ca) in &self.terms {
            for (&eb, &cb) in &other.terms {
                out.add_term([ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2]], ca * cb);
            }
        }
        out.normalize();
        out
    }

    /// The logarithmic derivative along one axis: term-wise multiplication by
    /// the exponent. `dlog(0)` is `x dP/dx` and so on. Exact.
    pub fn dlog(&self, axis: usize) -> Self {
        let mut out = Self {
            terms: self
                .terms
                .iter()
                .map(|(&e, &c)| (e, c * e[axis] as f64))
                .collect(),
        };
        out.normalize();
        out
    }

    /// Exponent range along one axis, `None` for the zero polynomial.
    pub fn degree_range(&self, axis: usize) -> Option<(i32, i32)> {
        let mut it = self.terms.keys().map(|e| e[axis]);
        let first = it.next()?;
        let (mut lo, mut hi) = (first, first);
        for v in it {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        Some((lo, hi))
    }

    /// Evaluate without domain checks; the exponent boxes here are tiny, so
    /// per-term integer powers are cheap.
    pub fn eval_raw(&self, x: C64, y: C64, z: C64) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for (&e, &c) in &self.terms {
            acc += c * ipow(x, e[0]) * ipow(y, e[1]) * ipow(z, e[2]);
        }
        acc
    }

    /// Evaluate at a point with all coordinates nonzero.
    pub fn eval(&self, x: C64, y: C64, z: C64) -> Result<C64, GenFunError> {
        if x == C64::new(0.0, 0.0) || y == C64::new(0.0, 0.0) || z == C64::new(0.0, 0.0) {
            return Err(GenFunError::ZeroCoordinate);
        }
        Ok(self.eval_raw(x, y, z))
    }

    /// (dP/dx, dP/dy, dP/dz) at a point with nonzero coordinates.
    pub fn grad(&self, x: C64, y: C64, z: C64) -> Result<[C64; 3], GenFunError> {
        let gl = self.grad_log(x, y, z)?;
        Ok([gl[0] / x, gl[1] / y, gl[2] / z])
    }

    /// The logarithmic gradient (x dP/dx, y dP/dy, z dP/dz).
    pub fn grad_log(&self, x: C64, y: C64, z: C64) -> Result<[C64; 3], GenFunError> {
        if x == C64::new(0.0, 0.0) || y == C64::new(0.0, 0.0) || z == C64::new(0.0, 0.0) {
            return Err(GenFunError::ZeroCoordinate);
        }
        Ok(self.grad_log_raw(x, y, z))
    }

    pub fn grad_log_raw(&self, x: C64, y: C64, z: C64) -> [C64; 3] {
        let mut g = [C64::new(0.0, 0.0); 3];
        for (&e, &c) in &self.terms {
            let v = c * ipow(x, e[0]) * ipow(y, e[1]) * ipow(z, e[2]);
            g[0] += v * e[0] as f64;
            g[1] += v * e[1] as f64;
            g[2] += v * e[2] as f64;
        }
        g
    }

    /// Dump as `a b c re im` lines, exponent-lexicographic. The inverse of
    /// [`LaurentPoly3::parse_dump`]; floats print in shortest round-trip form.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (e, c) in &self.terms {
            out.push_str(&format!("{} {} {} {} {}\n", e[0], e[1], e[2], c.re, c.im));
        }
        out
    }

    pub fn parse_dump(text: &str) -> Option<Self> {
        let mut terms = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let a: i32 = it.next()?.parse().ok()?;
            let b: i32 = it.next()?.parse().ok()?;
            let c: i32 = it.next()?.parse().ok()?;
            let re: f64 = it.next()?.parse().ok()?;
            let im: f64 = it.next()?.parse().ok()?;
            if it.next().is_some() {
                return None;
            }
            terms.push(([a, b, c], C64::new(re, im)));
        }
        Some(Self::from_terms(terms))
    }
}

fn ipow(base: C64, exp: i32) -> C64 {
    if exp >= 0 {
        base.powu(exp as u32)
    } else {
        base.powu((-exp) as u32).finv()
    }
}

/// The diagonal spatial monomial of chirality `j`, i.e. x^a y^b for the step
/// attached to `j`.
fn step_monomial(j: usize, z_deg: i32, coef: C64) -> ([i32; 3], C64) {
    let (a, b) = STEPS[j];
    ([a, b, z_deg], coef)
}

/// The 4x4 matrix `M U` with entries as Laurent polynomials (z-degree 0).
pub fn mu_matrix(model: &CoinModel) -> [[LaurentPoly3; 4]; 4] {
    std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            LaurentPoly3::from_terms([step_monomial(i, 0, model.coin[i][j])])
        })
    })
}

/// `(M U)^n` by repeated sparse multiplication.
pub fn mu_power(model: &CoinModel, n: usize) -> [[LaurentPoly3; 4]; 4] {
    let mut acc: [[LaurentPoly3; 4]; 4] =
        std::array::from_fn(|i| std::array::from_fn(|j| identity_entry(i, j)));
    let step = mu_matrix(model);
    for _ in 0..n {
        acc = mat_mul(&acc, &step);
    }
    acc
}

fn identity_entry(i: usize, j: usize) -> LaurentPoly3 {
    if i == j {
        LaurentPoly3::monomial([0, 0, 0], C64::new(1.0, 0.0))
    } else {
        LaurentPoly3::zero()
    }
}

fn mat_mul(a: &[[LaurentPoly3; 4]; 4], b: &[[LaurentPoly3; 4]; 4]) -> [[LaurentPoly3; 4]; 4] {
    std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            let mut acc = LaurentPoly3::zero();
            for k in 0..4 {
                acc = acc.add(&a[i][k].mul(&b[k][j]));
            }
            acc
        })
    })
}

/// Entries of `I - z M U` as Laurent polynomials.
fn i_minus_zmu(model: &CoinModel) -> [[LaurentPoly3; 4]; 4] {
    std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            let mut p = identity_entry(i, j);
            p = p.sub(&LaurentPoly3::from_terms([step_monomial(
                i,
                1,
                model.coin[i][j],
            )]));
            p
        })
    })
}

fn det3_poly(m: &[[&LaurentPoly3; 3]; 3]) -> LaurentPoly3 {
    let mut acc = LaurentPoly3::zero();
    acc = acc.add(&m[0][0].mul(&m[1][1].mul(m[2][2]).sub(&m[1][2].mul(m[2][1]))));
    acc = acc.sub(&m[0][1].mul(&m[1][0].mul(m[2][2]).sub(&m[1][2].mul(m[2][0]))));
    acc = acc.add(&m[0][2].mul(&m[1][0].mul(m[2][1]).sub(&m[1][1].mul(m[2][0]))));
    acc
}

fn det4_poly(m: &[[LaurentPoly3; 4]; 4]) -> LaurentPoly3 {
    let mut acc = LaurentPoly3::zero();
    for col in 0..4 {
        let minor = minor3(m, 0, col);
        let term = m[0][col].mul(&det3_poly(&minor));
        if col % 2 == 0 {
            acc = acc.add(&term);
        } else {
            acc = acc.sub(&term);
        }
    }
    acc
}

fn minor3(
    m: &[[LaurentPoly3; 4]; 4],
    drop_row: usize,
    drop_col: usize,
) -> [[&LaurentPoly3; 3]; 3] {
    let rows: Vec<usize> = (0..4).filter(|&r| r != drop_row).collect();
    let cols: Vec<usize> = (0..4).filter(|&c| c != drop_col).collect();
    std::array::from_fn(|i| std::array::from_fn(|j| &m[rows[i]][cols[j]]))
}

/// The cleared denominator `H = xy det(I - z M U)`.
///
/// For a nearest-neighbor walk the exponents satisfy 0 <= a,b <= 2 and
/// 0 <= c <= 4; z-degree four comes from det(MU), which has unit modulus for
/// a unitary coin.
pub fn build_h(model: &CoinModel) -> LaurentPoly3 {
    let det = det4_poly(&i_minus_zmu(model));
    det.mul(&LaurentPoly3::monomial([1, 1, 0], C64::new(1.0, 0.0)))
}

/// The uncleared determinant `det(I - z M U)` with its negative exponents.
/// On the zero set its logarithmic gradient is the cleared one divided by
/// the unit `xy`, so both induce the same Gauss map there; the check suite
/// asserts that numerically.
pub fn build_h_uncleared(model: &CoinModel) -> LaurentPoly3 {
    det4_poly(&i_minus_zmu(model))
}

/// The cleared numerator `G = xy adj(I - z M U)_{ij}` (0-based chirality
/// indices), so that `G/H` is the (i,j) entry of `(I - z M U)^{-1}` as a
/// Laurent series. The adjugate orientation (transposed cofactor) is frozen
/// by the series-oracle test.
pub fn build_g(model: &CoinModel, i: usize, j: usize) -> LaurentPoly3 {
    assert!(i < 4 && j < 4, "chirality indices run 0..4");
    let m = i_minus_zmu(model);
    // adj(A)_{ij} = (-1)^{i+j} det(A with row j and column i removed)
    let minor = minor3(&m, j, i);
    let mut g = det3_poly(&minor);
    if (i + j) % 2 == 1 {
        g = g.neg();
    }
    g.mul(&LaurentPoly3::monomial([1, 1, 0], C64::new(1.0, 0.0)))
}

/// Direct numeric evaluation of `xy det(I - z M U)`, used as the independent
/// cross-check for [`build_h`].
pub fn cleared_det_at(model: &CoinModel, x: C64, y: C64, z: C64) -> C64 {
    let mono = [x, x.finv(), y, y.finv()];
    let mut m = [[C64::new(0.0, 0.0); 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            let delta = if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
            m[i][j] = delta - z * mono[i] * model.coin[i][j];
        }
    }
    // Gaussian elimination with partial pivoting on the 4x4.
    let mut det = C64::new(1.0, 0.0);
    for col in 0..4 {
        let (pivot, _) = (col..4)
            .map(|r| (r, m[r][col].norm()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        if m[pivot][col].norm() == 0.0 {
            return C64::new(0.0, 0.0);
        }
        if pivot != col {
            m.swap(pivot, col);
            det = -det;
        }
        det *= m[col][col];
        for r in col + 1..4 {
            let f = m[r][col] / m[col][col];
            for c2 in col..4 {
                let sub = f * m[col][c2];
                m[r][c2] -= sub;
            }
        }
    }
    det * x * y
}

/// Roots of a Laurent polynomial in z at fixed (x, y).
#[derive(Debug, Clone)]
pub struct ZRoots {
    /// Roots ordered by argument in [0, 2pi).
    pub roots: Vec<C64>,
    /// Set when the leading z-coefficient degenerated and the solve dropped
    /// to a lower degree.
    pub degree_reduced: bool,
}

/// All z-roots of `p(x, y, .)`, via the companion matrix of the z-profile
/// polynomial, one Newton polish step included. Deterministically ordered by
/// argument.
pub fn roots_in_z(p: &LaurentPoly3, x: C64, y: C64) -> ZRoots {
    let Some((lo, hi)) = p.degree_range(2) else {
        return ZRoots {
            roots: Vec::new(),
            degree_reduced: false,
        };
    };
    let n = (hi - lo) as usize;
    let mut coeffs = vec![C64::new(0.0, 0.0); n + 1];
    for (&e, &c) in &p.terms {
        coeffs[(e[2] - lo) as usize] += c * ipow(x, e[0]) * ipow(y, e[1]);
    }
    let solved = poly_roots(&coeffs);
    let mut roots = solved.roots;
    roots.retain(|z| z.norm() > 0.0);
    roots.sort_by(|a, b| arg_tau(*a).total_cmp(&arg_tau(*b)).then(a.norm().total_cmp(&b.norm())));
    ZRoots {
        roots,
        degree_reduced: solved.degree_reduced,
    }
}

/// Argument normalized to [0, 2pi).
pub fn arg_tau(z: C64) -> f64 {
    let a = z.arg();
    if a < 0.0 {
        a + TAU
    } else {
        a
    }
}

/// Outcome of the torality sweep: unit-torus (x, y) must force unit-modulus z
/// on the zero set of H whenever the coin is unitary.
#[derive(Debug, Clone)]
pub struct ToralityReport {
    pub samples: usize,
    pub max_deviation: f64,
    /// (alpha, beta) angles of the worst sample.
    pub worst: (f64, f64),
}

/// Sample `samples` uniform (alpha, beta), solve for the z-roots of H, and
/// report the largest | |z| - 1 |. Seeded for reproducible output.
pub fn check_torality(model: &CoinModel, samples: usize, seed: u64) -> ToralityReport {
    let h = build_h(model);
    let mut rng = StdRng::seed_from_u64(seed);
    let mut max_deviation = 0.0f64;
    let mut worst = (0.0, 0.0);
    for _ in 0..samples {
        let alpha = rng.random_range(0.0..TAU);
        let beta = rng.random_range(0.0..TAU);
        let x = C64::from_polar(1.0, alpha);
        let y = C64::from_polar(1.0, beta);
        for z in roots_in_z(&h, x, y).roots {
            let dev = (z.norm() - 1.0).abs();
            if dev > max_deviation {
                max_deviation = dev;
                worst = (alpha, beta);
            }
        }
    }
    ToralityReport {
        samples,
        max_deviation,
        worst,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_b, make_custom_unchecked, make_grover, make_s};
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn unit(theta: f64) -> C64 {
        C64::from_polar(1.0, theta)
    }

    /// The explicit printed form of H for the B family, z-degree four.
    fn printed_h_b(t: f64) -> LaurentPoly3 {
        let s2t = (2.0 * t).sqrt();
        let mut terms: Vec<([i32; 3], C64)> = vec![
            ([1, 1, 4], c(2.0, 0.0)),
            ([1, 1, 0], c(2.0, 0.0)),
            ([1, 1, 2], c(4.0 * t, 0.0)),
            ([2, 0, 2], c(1.0, 0.0)),
            ([2, 2, 2], c(1.0, 0.0)),
            ([0, 0, 2], c(1.0, 0.0)),
            ([0, 2, 2], c(1.0, 0.0)),
        ];
        for zc in [1, 3] {
            for e in [[1, 0], [0, 1], [1, 2], [2, 1]] {
                terms.push(([e[0], e[1], zc], c(-s2t, 0.0)));
            }
        }
        LaurentPoly3::from_terms(terms)
    }

    /// The explicit printed form of H for the S family.
    fn printed_h_s(t: f64) -> LaurentPoly3 {
        let s2t = (2.0 * t).sqrt();
        LaurentPoly3::from_terms([
            ([2, 2, 2], c(1.0, 0.0)),
            ([0, 2, 2], c(1.0, 0.0)),
            ([2, 0, 2], c(-1.0, 0.0)),
            ([0, 0, 2], c(-1.0, 0.0)),
            ([1, 1, 4], c(2.0, 0.0)),
            ([1, 1, 0], c(-2.0, 0.0)),
            ([1, 2, 1], c(-s2t, 0.0)),
            ([0, 1, 1], c(s2t, 0.0)),
            ([1, 0, 1], c(s2t, 0.0)),
            ([2, 1, 1], c(s2t, 0.0)),
            ([0, 1, 3], c(-s2t, 0.0)),
            ([1, 0, 3], c(s2t, 0.0)),
            ([1, 2, 3], c(-s2t, 0.0)),
            ([2, 1, 3], c(-s2t, 0.0)),
        ])
    }

    fn max_coeff_diff(a: &LaurentPoly3, b: &LaurentPoly3) -> f64 {
        let mut worst = 0.0f64;
        let keys: std::collections::BTreeSet<[i32; 3]> =
            a.terms.keys().chain(b.terms.keys()).copied().collect();
        for e in keys {
            worst = worst.max((a.coeff(e) - b.coeff(e)).norm());
        }
        worst
    }

    #[test]
    fn h_b_matches_printed_form() {
        for t in [1.0 / 3.0, 0.5, 2.0 / 3.0] {
            let h = build_h(&make_b(t).unwrap());
            // The printed form carries one global factor of 2 relative to
            // xy det(I - zMU), which is monic at z = 0 up to the xy monomial.
            let diff = max_coeff_diff(&h.scale(c(2.0, 0.0)), &printed_h_b(t));
            assert!(diff < 1e-12, "t = {t}: diff {diff:e}");
        }
    }

    #[test]
    fn h_s_matches_printed_form() {
        for t in [1.0 / 8.0, 0.5, 7.0 / 8.0] {
            let h = build_h(&make_s(t).unwrap());
            // Global factor -2 for this family's printed form.
            let diff = max_coeff_diff(&h.scale(c(-2.0, 0.0)), &printed_h_s(t));
            assert!(diff < 1e-12, "t = {t}: diff {diff:e}");
        }
    }

    #[test]
    fn h_exponent_box() {
        for model in [make_s(0.3).unwrap(), make_b(0.7).unwrap(), make_grover()] {
            let h = build_h(&model);
            for (e, _) in h.terms() {
                assert!((0..=2).contains(&e[0]), "{e:?}");
                assert!((0..=2).contains(&e[1]), "{e:?}");
                assert!((0..=4).contains(&e[2]), "{e:?}");
            }
        }
    }

    #[test]
    fn h_eval_matches_direct_determinant() {
        let mut rng = StdRng::seed_from_u64(7);
        for model in [make_s(0.41).unwrap(), make_b(0.2).unwrap(), make_grover()] {
            let h = build_h(&model);
            for _ in 0..100 {
                let x = unit(rng.random_range(0.0..TAU));
                let y = unit(rng.random_range(0.0..TAU));
                let z = unit(rng.random_range(0.0..TAU));
                let lhs = h.eval(x, y, z).unwrap();
                let rhs = cleared_det_at(&model, x, y, z);
                assert!((lhs - rhs).norm() < 1e-11, "{lhs} vs {rhs}");
            }
        }
    }

    #[test]
    fn g_over_h_series_matches_matrix_powers() {
        // G - H * (truncated series of F^(ij)) must vanish on all monomials
        // of z-degree <= 4; the series coefficients are the entries of
        // (MU)^n.
        for model in [make_s(0.5).unwrap(), make_b(1.0 / 3.0).unwrap(), make_grover()] {
            let h = build_h(&model);
            let powers: Vec<_> = (0..=4).map(|n| mu_power(&model, n)).collect();
            for i in 0..4 {
                for j in 0..4 {
                    let g = build_g(&model, i, j);
                    let mut series = LaurentPoly3::zero();
                    for (n, p) in powers.iter().enumerate() {
                        series = series.add(
                            &p[i][j].mul(&LaurentPoly3::monomial([0, 0, n as i32], c(1.0, 0.0))),
                        );
                    }
                    let prod = h.mul(&series);
                    let diff = g.sub(&prod);
                    for (e, coef) in diff.terms() {
                        if e[2] <= 4 {
                            assert!(
                                coef.norm() < 1e-11,
                                "entry ({i},{j}) exponent {e:?}: {coef}"
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn g_z0_term_is_kronecker_delta() {
        let model = make_s(0.27).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let g = build_g(&model, i, j);
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((g.coeff([1, 1, 0]) - c(expect, 0.0)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn g_vanishes_at_b_singular_points() {
        // At the four singular points the resolvent matrix has rank two, so
        // every adjugate entry vanishes.
        let t: f64 = 0.5;
        let model = make_b(t).unwrap();
        let z0 = c((t / 2.0).sqrt(), (1.0 - t / 2.0).sqrt());
        let pts = [
            (c(1.0, 0.0), c(1.0, 0.0), z0),
            (c(1.0, 0.0), c(1.0, 0.0), z0.conj()),
            (c(-1.0, 0.0), c(-1.0, 0.0), -z0),
            (c(-1.0, 0.0), c(-1.0, 0.0), -z0.conj()),
        ];
        for (x, y, z) in pts {
            for i in 0..4 {
                for j in 0..4 {
                    let g = build_g(&model, i, j);
                    assert!(g.eval(x, y, z).unwrap().norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn eval_at_ones_is_coefficient_sum() {
        let p = LaurentPoly3::from_terms([
            ([2, 1, 3], c(2.0, 0.0)),
            ([0, -1, 1], c(-0.5, 1.5)),
            ([1, 1, 0], c(0.25, 0.0)),
        ]);
        let want: C64 = p.terms().map(|(_, c)| *c).sum();
        let one = c(1.0, 0.0);
        assert!((p.eval(one, one, one).unwrap() - want).norm() < 1e-15);
    }

    #[test]
    fn eval_rejects_zero_coordinate() {
        let p = LaurentPoly3::monomial([1, -1, 0], c(1.0, 0.0));
        assert_eq!(
            p.eval(c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)),
            Err(GenFunError::ZeroCoordinate)
        );
        assert!(p.grad_log(c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)).is_err());
    }

    #[test]
    fn grad_matches_central_differences() {
        let model = make_b(0.37).unwrap();
        let h = build_h(&model);
        let hstep = 1e-6;
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..100 {
            let pt = [
                unit(rng.random_range(0.0..TAU)),
                unit(rng.random_range(0.0..TAU)),
                unit(rng.random_range(0.0..TAU)),
            ];
            let grad = h.grad(pt[0], pt[1], pt[2]).unwrap();
            for axis in 0..3 {
                let mut plus = pt;
                let mut minus = pt;
                plus[axis] += c(hstep, 0.0);
                minus[axis] -= c(hstep, 0.0);
                let fd = (h.eval_raw(plus[0], plus[1], plus[2])
                    - h.eval_raw(minus[0], minus[1], minus[2]))
                    / c(2.0 * hstep, 0.0);
                let denom = grad[axis].norm().max(1.0);
                assert!(
                    (fd - grad[axis]).norm() / denom < 1e-6,
                    "axis {axis}: {fd} vs {:?}",
                    grad[axis]
                );
            }
        }
    }

    proptest! {
        #[test]
        fn grad_log_exact_on_monomials(
            a in -3i32..4, b in -3i32..4, k in -3i32..4,
            re in -2.0f64..2.0, im in -2.0f64..2.0,
            ta in 0.0f64..TAU, tb in 0.0f64..TAU, tc in 0.0f64..TAU,
        ) {
            prop_assume!(re.abs() + im.abs() > 1e-3);
            let p = LaurentPoly3::monomial([a, b, k], c(re, im));
            let (x, y, z) = (unit(ta), unit(tb), unit(tc));
            let v = p.eval(x, y, z).unwrap();
            let gl = p.grad_log(x, y, z).unwrap();
            prop_assert!((gl[0] - v * a as f64).norm() < 1e-12 * v.norm().max(1.0));
            prop_assert!((gl[1] - v * b as f64).norm() < 1e-12 * v.norm().max(1.0));
            prop_assert!((gl[2] - v * k as f64).norm() < 1e-12 * v.norm().max(1.0));
        }

        #[test]
        fn dump_roundtrips(
            terms in proptest::collection::vec(
                ((-3i32..5, -3i32..5, 0i32..5), (-2.0f64..2.0, -2.0f64..2.0)), 0..8)
        ) {
            let p = LaurentPoly3::from_terms(
                terms.into_iter().map(|((a, b, k), (re, im))| ([a, b, k], c(re, im))),
            );
            let q = LaurentPoly3::parse_dump(&p.dump()).unwrap();
            prop_assert_eq!(p, q);
        }
    }

    #[test]
    fn roots_on_torus_have_unit_modulus() {
        let model = make_s(1.0 / 8.0).unwrap();
        let h = build_h(&model);
        let mut rng = StdRng::seed_from_u64(3);
        for _ in 0..200 {
            let x = unit(rng.random_range(0.0..TAU));
            let y = unit(rng.random_range(0.0..TAU));
            let zr = roots_in_z(&h, x, y);
            assert_eq!(zr.roots.len(), 4);
            assert!(!zr.degree_reduced);
            for z in &zr.roots {
                assert!((z.norm() - 1.0).abs() < 1e-8);
                assert!(h.eval_raw(x, y, *z).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn roots_at_origin_angles_match_coin_eigenvalues() {
        // At (x, y) = (1, 1) the z-roots are reciprocals of eigenvalues of U.
        use nalgebra::{Complex, Matrix4};
        for model in [make_s(0.5).unwrap(), make_grover(), make_b(0.66).unwrap()] {
            let h = build_h(&model);
            let one = c(1.0, 0.0);
            let got: Vec<f64> = roots_in_z(&h, one, one)
                .roots
                .iter()
                .map(|z| arg_tau(*z))
                .collect();
            let na = Matrix4::from_fn(|i, j| {
                Complex::new(model.coin[i][j].re, model.coin[i][j].im)
            });
            let schur = nalgebra::linalg::Schur::try_new(na, 1e-13, 100_000).unwrap();
            let (_, tmat) = schur.unpack();
            let mut want: Vec<f64> = (0..4)
                .map(|k| arg_tau(C64::new(tmat[(k, k)].re, tmat[(k, k)].im).finv()))
                .collect();
            // Multiset match on the circle. The tolerance admits the
            // conditioning of repeated eigenvalues (the Grover coin has a
            // triple eigenvalue, cube-root-of-eps territory).
            for g in &got {
                let (idx, d) = want
                    .iter()
                    .enumerate()
                    .map(|(i, w)| {
                        let d = (g - w).abs();
                        (i, d.min(TAU - d))
                    })
                    .min_by(|a, b| a.1.total_cmp(&b.1))
                    .unwrap();
                assert!(d < 2e-5, "{g} unmatched (best {d:e})");
                want.remove(idx);
            }
        }
    }

    #[test]
    fn cleared_and_uncleared_gauss_maps_agree_on_the_variety() {
        let model = make_b(0.3).unwrap();
        let hc = build_h(&model);
        let hu = build_h_uncleared(&model);
        let mut rng = StdRng::seed_from_u64(19);
        for _ in 0..50 {
            let x = unit(rng.random_range(0.0..TAU));
            let y = unit(rng.random_range(0.0..TAU));
            for z in roots_in_z(&hc, x, y).roots {
                let gc = hc.grad_log(x, y, z).unwrap();
                let gu = hu.grad_log(x, y, z).unwrap();
                // projected velocities match
                let vc = [(gc[0] / gc[2]).re, (gc[1] / gc[2]).re];
                let vu = [(gu[0] / gu[2]).re, (gu[1] / gu[2]).re];
                assert!((vc[0] - vu[0]).abs() < 1e-8 && (vc[1] - vu[1]).abs() < 1e-8);
                // and |grad_log| agrees on the torus
                let nc: f64 = gc.iter().map(|c| c.norm_sqr()).sum();
                let nu: f64 = gu.iter().map(|c| c.norm_sqr()).sum();
                assert!((nc.sqrt() - nu.sqrt()).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn torality_sweep_flags_non_unitary_coin() {
        let clean = check_torality(&make_s(1.0 / 8.0).unwrap(), 2000, 42);
        assert!(clean.max_deviation < 1e-8, "{:?}", clean);

        let mut broken = [[c(0.0, 0.0); 4]; 4];
        for i in 0..4 {
            broken[i][i] = c(1.0, 0.0);
        }
        broken[3][3] = c(0.9, 0.0);
        let report = check_torality(&make_custom_unchecked(broken), 500, 42);
        assert!(report.max_deviation > 1e-3, "{:?}", report);
    }
}
