//! Walk parameterization: the nearest-neighbor step set, the 4x4 unitary
//! coin, and the built-in one-parameter coin families.

use crate::C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// 4x4 complex matrix in row-major order.
pub type Mat4 = [[C64; 4]; 4];

/// Chirality order is fixed once: index j carries step `STEPS[j]` and the
/// spatial monomial `x^a y^b` with `(a, b) = STEPS[j]`. Everything downstream
/// (simulation, the diagonal of M, sheet bookkeeping) uses this order.
pub const STEPS: [(i32, i32); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];

/// Factory matrices must be unitary to this entrywise tolerance.
pub const FACTORY_UNITARITY_TOL: f64 = 1e-12;
/// User-supplied coins are accepted up to this entrywise tolerance.
pub const CUSTOM_UNITARITY_TOL: f64 = 1e-10;

/// The ordered nearest-neighbor step set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepSet;

impl StepSet {
    /// Number of chiralities.
    pub const K: usize = 4;

    /// Lattice displacement attached to chirality `j`.
    pub fn step(self, j: usize) -> (i32, i32) {
        STEPS[j]
    }
}

/// Which family (if any) a coin was built from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Family {
    S { t: f64 },
    A { t: f64 },
    B { t: f64 },
    Grover,
    Custom,
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Family::S { t } => write!(f, "S({t})"),
            Family::A { t } => write!(f, "A({t})"),
            Family::B { t } => write!(f, "B({t})"),
            Family::Grover => write!(f, "grover"),
            Family::Custom => write!(f, "custom"),
        }
    }
}

/// A quantum-walk instance: step set plus unitary coin.
///
/// Immutable after construction; safe to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct CoinModel {
    pub step_set: StepSet,
    pub coin: Mat4,
    pub family: Family,
}

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("parameter t = {t} outside the open interval {range} for family {family}")]
    ParamOutOfRange {
        family: &'static str,
        t: f64,
        range: &'static str,
    },
    #[error("coin is not unitary: max |(U*U - I)_ij| = {max_dev:.3e}")]
    NotUnitary { max_dev: f64 },
    #[error("model descriptor: {0}")]
    Descriptor(String),
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Entrywise max of |U* U - I|.
pub fn unitarity_defect(u: &Mat4) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..4 {
        for j in 0..4 {
            let mut s = C64::new(0.0, 0.0);
            for k in 0..4 {
                s += u[k][i].conj() * u[k][j];
            }
            if i == j {
                s -= 1.0;
            }
            worst = worst.max(s.norm());
        }
    }
    worst
}

fn check_factory(coin: Mat4, family: Family) -> CoinModel {
    let defect = unitarity_defect(&coin);
    debug_assert!(
        defect < FACTORY_UNITARITY_TOL,
        "factory coin {family} has unitarity defect {defect:e}"
    );
    CoinModel {
        step_set: StepSet,
        coin,
        family,
    }
}

/// Orthogonal family S(t), t in (0,1). Entries are +-sqrt(t)/sqrt(2) and
/// +-sqrt(1-t)/sqrt(2); the (4,4) entry is sqrt(t)/sqrt(2), the unique choice
/// keeping the rows orthonormal. S(1/2) is the alternative Hadamard coin.
pub fn make_s(t: f64) -> Result<CoinModel, ModelError> {
    if !(t > 0.0 && t < 1.0) {
        return Err(ModelError::ParamOutOfRange {
            family: "S",
            t,
            range: "(0, 1)",
        });
    }
    let p = t.sqrt() / 2f64.sqrt();
    let q = (1.0 - t).sqrt() / 2f64.sqrt();
    let m = [
        [c(p), c(p), c(q), c(q)],
        [c(-p), c(p), c(-q), c(q)],
        [c(q), c(-q), c(-p), c(p)],
        [c(-q), c(-q), c(p), c(p)],
    ];
    Ok(check_factory(m, Family::S { t }))
}

/// Orthogonal family A(t), t in (0, 1/sqrt(3)) so that sqrt(1 - 3t^2) is real.
/// A(1/2) coincides with S(1/2).
pub fn make_a(t: f64) -> Result<CoinModel, ModelError> {
    let hi = 1.0 / 3f64.sqrt();
    if !(t > 0.0 && t < hi) {
        return Err(ModelError::ParamOutOfRange {
            family: "A",
            t,
            range: "(0, 1/sqrt(3))",
        });
    }
    let w = (1.0 - 3.0 * t * t).sqrt();
    let m = [
        [c(t), c(t), c(t), c(w)],
        [c(-t), c(t), c(-w), c(t)],
        [c(t), c(-w), c(-t), c(t)],
        [c(-w), c(-t), c(t), c(t)],
    ];
    Ok(check_factory(m, Family::A { t }))
}

/// Orthogonal family B(t), t in (0,1): S(t) with the third row negated. Its
/// pole variety acquires four isolated singular points on the torus.
pub fn make_b(t: f64) -> Result<CoinModel, ModelError> {
    if !(t > 0.0 && t < 1.0) {
        return Err(ModelError::ParamOutOfRange {
            family: "B",
            t,
            range: "(0, 1)",
        });
    }
    let s = make_s(t)?;
    let mut m = s.coin;
    for j in 0..4 {
        m[2][j] = -m[2][j];
    }
    Ok(check_factory(m, Family::B { t }))
}

/// The Grover coin: the standard Hadamard-type matrix with diagonal 1/2 and
/// off-diagonal -1/2.
pub fn make_grover() -> CoinModel {
    let h = 0.5;
    let m = [
        [c(h), c(-h), c(-h), c(-h)],
        [c(-h), c(h), c(-h), c(-h)],
        [c(-h), c(-h), c(h), c(-h)],
        [c(-h), c(-h), c(-h), c(h)],
    ];
    check_factory(m, Family::Grover)
}

/// Wrap a user-supplied coin, rejecting non-unitary input with the measured
/// deviation.
pub fn make_custom(u: Mat4) -> Result<CoinModel, ModelError> {
    let max_dev = unitarity_defect(&u);
    if max_dev >= CUSTOM_UNITARITY_TOL {
        return Err(ModelError::NotUnitary { max_dev });
    }
    Ok(CoinModel {
        step_set: StepSet,
        coin: u,
        family: Family::Custom,
    })
}

/// Construct a custom model without the unitarity gate. Deliberately broken
/// coins are useful for exercising the failure paths of the diagnostics.
pub fn make_custom_unchecked(u: Mat4) -> CoinModel {
    CoinModel {
        step_set: StepSet,
        coin: u,
        family: Family::Custom,
    }
}

impl CoinModel {
    /// Entrywise unitarity defect of the coin.
    pub fn unitarity_defect(&self) -> f64 {
        unitarity_defect(&self.coin)
    }

    /// det U, by cofactor expansion.
    pub fn coin_det(&self) -> C64 {
        det4(&self.coin)
    }
}

fn det3(m: &[[C64; 3]; 3]) -> C64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

fn det4(m: &Mat4) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for col in 0..4 {
        let mut minor = [[C64::new(0.0, 0.0); 3]; 3];
        for (mi, i) in (1..4).enumerate() {
            let mut mj = 0;
            for j in 0..4 {
                if j == col {
                    continue;
                }
                minor[mi][mj] = m[i][j];
                mj += 1;
            }
        }
        let sign = if col % 2 == 0 { 1.0 } else { -1.0 };
        acc += m[0][col] * sign * det3(&minor);
    }
    acc
}

/// JSON descriptor for a model:
/// `{"family": "S"|"A"|"B"|"grover"|"custom", "t": number?, "coin": [[[re,im]x4]x4]?}`.
/// Unknown fields are rejected.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDescriptor {
    pub family: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coin: Option<[[[f64; 2]; 4]; 4]>,
}

impl ModelDescriptor {
    pub fn parse(json: &str) -> Result<Self, ModelError> {
        serde_json::from_str(json).map_err(|e| ModelError::Descriptor(e.to_string()))
    }

    /// Like [`ModelDescriptor::to_model`] but admits a non-unitary custom
    /// coin, so the diagnostic suite can run on deliberately broken input
    /// and report where it fails.
    pub fn to_model_lenient(&self) -> Result<CoinModel, ModelError> {
        match self.to_model() {
            Err(ModelError::NotUnitary { .. }) if self.family == "custom" => {
                let raw = self.coin.expect("custom coin present when NotUnitary");
                let mut u = [[C64::new(0.0, 0.0); 4]; 4];
                for i in 0..4 {
                    for j in 0..4 {
                        u[i][j] = C64::new(raw[i][j][0], raw[i][j][1]);
                    }
                }
                Ok(make_custom_unchecked(u))
            }
            other => other,
        }
    }

    pub fn to_model(&self) -> Result<CoinModel, ModelError> {
        let need_t = |t: Option<f64>| {
            t.ok_or_else(|| ModelError::Descriptor("family requires field `t`".into()))
        };
        let no_coin = |coin: &Option<_>| {
            if coin.is_some() {
                Err(ModelError::Descriptor(
                    "field `coin` is only valid for family \"custom\"".into(),
                ))
            } else {
                Ok(())
            }
        };
        match self.family.as_str() {
            "S" => {
                no_coin(&self.coin)?;
                make_s(need_t(self.t)?)
            }
            "A" => {
                no_coin(&self.coin)?;
                make_a(need_t(self.t)?)
            }
            "B" => {
                no_coin(&self.coin)?;
                make_b(need_t(self.t)?)
            }
            "grover" => {
                no_coin(&self.coin)?;
                if self.t.is_some() {
                    return Err(ModelError::Descriptor(
                        "family \"grover\" takes no parameter `t`".into(),
                    ));
                }
                Ok(make_grover())
            }
            "custom" => {
                if self.t.is_some() {
                    return Err(ModelError::Descriptor(
                        "family \"custom\" takes no parameter `t`".into(),
                    ));
                }
                let raw = self.coin.ok_or_else(|| {
                    ModelError::Descriptor("family \"custom\" requires field `coin`".into())
                })?;
                let mut u = [[C64::new(0.0, 0.0); 4]; 4];
                for i in 0..4 {
                    for j in 0..4 {
                        u[i][j] = C64::new(raw[i][j][0], raw[i][j][1]);
                    }
                }
                make_custom(u)
            }
            other => Err(ModelError::Descriptor(format!("unknown family `{other}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn s_half_is_the_alternative_hadamard() {
        let m = make_s(0.5).unwrap().coin;
        let expected: [[f64; 4]; 4] = [
            [1.0, 1.0, 1.0, 1.0],
            [-1.0, 1.0, -1.0, 1.0],
            [1.0, -1.0, -1.0, 1.0],
            [-1.0, -1.0, 1.0, 1.0],
        ];
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(m[i][j], c(expected[i][j] / 2.0), "entry ({i},{j})");
            }
        }
    }

    #[test]
    fn factories_are_unitary() {
        for t in [0.1, 0.5, 0.9] {
            assert!(make_s(t).unwrap().unitarity_defect() < FACTORY_UNITARITY_TOL);
            assert!(make_b(t).unwrap().unitarity_defect() < FACTORY_UNITARITY_TOL);
        }
        for t in [0.15, 0.3, 0.45] {
            assert!(make_a(t).unwrap().unitarity_defect() < FACTORY_UNITARITY_TOL);
        }
        assert!(make_b(2.0 / 3.0).unwrap().unitarity_defect() < FACTORY_UNITARITY_TOL);
        assert!(make_grover().unitarity_defect() < FACTORY_UNITARITY_TOL);
    }

    #[test]
    fn domain_errors() {
        assert!(make_s(0.0).is_err());
        assert!(make_s(1.0).is_err());
        assert!(make_b(1.0).is_err());
        assert!(make_a(0.6).is_err()); // 0.6 > 1/sqrt(3)
        assert!(make_a(-0.1).is_err());
    }

    #[test]
    fn a_half_equals_s_half_bitwise() {
        let s = make_s(0.5).unwrap().coin;
        let a = make_a(0.5).unwrap().coin;
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(s[i][j].re.to_bits(), a[i][j].re.to_bits());
                assert_eq!(s[i][j].im.to_bits(), a[i][j].im.to_bits());
            }
        }
    }

    #[test]
    fn factories_are_deterministic() {
        assert_eq!(make_b(0.37).unwrap(), make_b(0.37).unwrap());
    }

    #[test]
    fn b_negates_third_row_of_s() {
        let t = 0.3;
        let s = make_s(t).unwrap().coin;
        let b = make_b(t).unwrap().coin;
        for j in 0..4 {
            assert_eq!(b[2][j], -s[2][j]);
            assert_eq!(b[0][j], s[0][j]);
            assert_eq!(b[1][j], s[1][j]);
            assert_eq!(b[3][j], s[3][j]);
        }
    }

    #[test]
    fn grover_entries_and_symmetry() {
        let g = make_grover().coin;
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(g[i][j].norm(), 0.5);
                assert_eq!(g[i][j], g[j][i]);
            }
        }
        assert_eq!(g[0][0], c(0.5));
        assert_eq!(g[0][1], c(-0.5));
    }

    #[test]
    fn custom_accepts_unitary_rejects_scaled() {
        let mut eye = [[c(0.0); 4]; 4];
        for i in 0..4 {
            eye[i][i] = c(1.0);
        }
        assert!(make_custom(eye).is_ok());
        assert!(make_custom(make_grover().coin).is_ok());
        let mut two = eye;
        for i in 0..4 {
            two[i][i] = c(2.0);
        }
        match make_custom(two) {
            Err(ModelError::NotUnitary { max_dev }) => assert!(max_dev > 1.0),
            other => panic!("expected NotUnitary, got {other:?}"),
        }
    }

    #[test]
    fn descriptor_roundtrip_and_rejections() {
        let m = ModelDescriptor::parse(r#"{"family":"B","t":0.5}"#)
            .unwrap()
            .to_model()
            .unwrap();
        assert_eq!(m.family, Family::B { t: 0.5 });

        // unknown field
        assert!(ModelDescriptor::parse(r#"{"family":"S","t":0.5,"seed":3}"#).is_err());
        // missing t
        assert!(ModelDescriptor::parse(r#"{"family":"S"}"#)
            .unwrap()
            .to_model()
            .is_err());
        // t out of range surfaces the model error
        assert!(ModelDescriptor::parse(r#"{"family":"A","t":0.8}"#)
            .unwrap()
            .to_model()
            .is_err());
        // grover takes no t
        assert!(ModelDescriptor::parse(r#"{"family":"grover","t":0.1}"#)
            .unwrap()
            .to_model()
            .is_err());
        // custom requires coin
        assert!(ModelDescriptor::parse(r#"{"family":"custom"}"#)
            .unwrap()
            .to_model()
            .is_err());
    }

    #[test]
    fn coin_dets_are_unit_modulus() {
        for m in [
            make_s(0.3).unwrap(),
            make_a(0.3).unwrap(),
            make_b(0.7).unwrap(),
            make_grover(),
        ] {
            assert!((m.coin_det().norm() - 1.0).abs() < 1e-12);
        }
    }
}
