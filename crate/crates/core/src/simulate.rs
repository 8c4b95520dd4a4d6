//! Exact discrete-time evolution of the walk on the integer lattice.
//!
//! This is the ground truth that every generating-function prediction is
//! checked against. The stepping rule is defined so that the n-step
//! amplitude array started in chirality i equals coefficient extraction from
//! the matrix power `(M U)^n`: with `a` the start vector,
//! `amps_n(r, s, j) = [x^r y^s] ((M U)^n a)_j`. Concretely each step applies
//! the coin across chiralities and then shifts chirality j by its step
//! vector. The orientation is pinned by the matrix-power oracle tests.

use crate::model::{CoinModel, STEPS};
use crate::C64;
use rayon::prelude::*;
use thiserror::Error;

const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("start vector has norm {norm} but must be 1 within 1e-12")]
    NotNormalized { norm: f64 },
}

/// Complex amplitude per (site, chirality) at a fixed time.
///
/// Dense storage over the box [-half, half]^2 with half >= n; sites outside
/// the light cone hold exact zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveField {
    n: usize,
    half: usize,
    amps: Vec<C64>,
}

impl WaveField {
    /// Delta at the origin in the given chirality superposition.
    pub fn initial(start: [C64; 4]) -> Result<Self, SimError> {
        let norm = start.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(SimError::NotNormalized { norm });
        }
        let mut field = Self::blank(0, 0);
        field.amps.copy_from_slice(&start);
        Ok(field)
    }

    fn blank(n: usize, half: usize) -> Self {
        let w = 2 * half + 1;
        Self {
            n,
            half,
            amps: vec![ZERO; w * w * 4],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half(&self) -> usize {
        self.half
    }

    #[inline]
    fn idx(&self, r: i32, s: i32, j: usize) -> usize {
        let h = self.half as i32;
        let w = 2 * self.half + 1;
        (((r + h) as usize) * w + ((s + h) as usize)) * 4 + j
    }

    /// Amplitude at (r, s, j); exact zero outside the stored box (those sites
    /// are beyond the light cone).
    pub fn amplitude_at(&self, r: i32, s: i32, j: usize) -> C64 {
        let h = self.half as i32;
        if r.abs() > h || s.abs() > h {
            return ZERO;
        }
        self.amps[self.idx(r, s, j)]
    }

    /// Total squared norm; 1 up to rounding for unitary evolution.
    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Copy into a box of at least `half`, preserving contents.
    fn rebox(&self, half: usize) -> Self {
        if half <= self.half {
            return self.clone();
        }
        let mut out = Self::blank(self.n, half);
        let h = self.half as i32;
        for r in -h..=h {
            for s in -h..=h {
                for j in 0..4 {
                    let v = self.amps[self.idx(r, s, j)];
                    if v != ZERO {
                        let oi = out.idx(r, s, j);
                        out.amps[oi] = v;
                    }
                }
            }
        }
        out
    }

    /// P(r, s) = sum_j |amps(r, s, j)|^2.
    pub fn probability_profile(&self) -> ProbabilityGrid {
        let w = 2 * self.half + 1;
        let p: Vec<f64> = self
            .amps
            .chunks_exact(4)
            .map(|cell| cell.iter().map(|a| a.norm_sqr()).sum())
            .collect();
        debug_assert_eq!(p.len(), w * w);
        ProbabilityGrid {
            n: self.n,
            half: self.half,
            p,
        }
    }
}

/// One time step: coin then chirality-directed shift, in the orientation
/// matching `(M U)^n` coefficient extraction.
pub fn step(field: &WaveField, model: &CoinModel) -> WaveField {
    let need = field.n + 1;
    let src = if field.half >= need {
        field.clone()
    } else {
        field.rebox(need)
    };
    let mut out = WaveField::blank(field.n + 1, src.half);
    step_into(&src, &mut out, model);
    out
}

/// Advance `src` (time m) into `out` (time m+1); both share a box size.
/// Each output cell is a pure function of one input site, so rows
/// parallelize with schedule-independent results.
fn step_into(src: &WaveField, out: &mut WaveField, model: &CoinModel) {
    debug_assert_eq!(src.half, out.half);
    let half = src.half;
    let h = half as i32;
    let w = 2 * half + 1;
    let m_next = (src.n + 1) as i32;
    let reach = m_next.min(h);
    let u = &model.coin;
    out.n = src.n + 1;

    out.amps
        .par_chunks_mut(w * 4)
        .enumerate()
        .for_each(|(row, chunk)| {
            let r = row as i32 - h;
            if r.abs() > reach {
                for v in chunk.iter_mut() {
                    *v = ZERO;
                }
                return;
            }
            let smax = reach - r.abs();
            // Parity: after m+1 steps only r + s = m+1 (mod 2) is reachable.
            for s in -h..=h {
                let cell = ((s + h) as usize) * 4;
                let live = s.abs() <= smax && (r + s - m_next) % 2 == 0;
                for j in 0..4 {
                    chunk[cell + j] = if live {
                        let (dr, ds) = STEPS[j];
                        let (pr, ps) = (r - dr, s - ds);
                        if pr.abs() <= h && ps.abs() <= h {
                            let base = src.idx(pr, ps, 0);
                            u[j][0] * src.amps[base]
                                + u[j][1] * src.amps[base + 1]
                                + u[j][2] * src.amps[base + 2]
                                + u[j][3] * src.amps[base + 3]
                        } else {
                            ZERO
                        }
                    } else {
                        ZERO
                    };
                }
            }
        });
}

/// n-fold step from the given start vector, with the box allocated once.
pub fn evolve(model: &CoinModel, start: [C64; 4], n: usize) -> Result<WaveField, SimError> {
    let mut cur = WaveField::initial(start)?.rebox(n);
    if n == 0 {
        return Ok(cur);
    }
    let mut next = WaveField::blank(0, n);
    for _ in 0..n {
        step_into(&cur, &mut next, model);
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(cur)
}

/// Site probabilities at a fixed time.
#[derive(Debug, Clone)]
pub struct ProbabilityGrid {
    n: usize,
    half: usize,
    p: Vec<f64>,
}

impl ProbabilityGrid {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half(&self) -> usize {
        self.half
    }

    pub fn at(&self, r: i32, s: i32) -> f64 {
        let h = self.half as i32;
        if r.abs() > h || s.abs() > h {
            return 0.0;
        }
        let w = 2 * self.half + 1;
        self.p[((r + h) as usize) * w + (s + h) as usize]
    }

    pub fn total(&self) -> f64 {
        self.p.iter().sum()
    }

    /// Row-major iteration over (r, s, p), r then s ascending.
    pub fn iter(&self) -> impl Iterator<Item = (i32, i32, f64)> + '_ {
        let h = self.half as i32;
        let w = 2 * self.half + 1;
        self.p
            .iter()
            .enumerate()
            .map(move |(i, &p)| (((i / w) as i32) - h, ((i % w) as i32) - h, p))
    }
}
