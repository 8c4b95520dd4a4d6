//! Roots of low-degree complex polynomials via companion-matrix QR.
//!
//! The degree here is at most four (the time variable enters the cleared
//! denominator quartically), so an explicit shifted QR on the companion
//! matrix is cheap, deterministic, and robust enough near the almost-double
//! roots that show up next to singular points of the variety. One Newton step
//! against the original polynomial polishes each eigenvalue.

use crate::C64;

const DEFLATE_EPS: f64 = 1e-14;
const MAX_SWEEPS: usize = 300;

/// Result of a root solve.
#[derive(Debug, Clone)]
pub struct PolyRoots {
    pub roots: Vec<C64>,
    /// True when near-zero leading coefficients were stripped, i.e. the
    /// effective degree is lower than the coefficient count suggested.
    pub degree_reduced: bool,
}

/// All complex roots of `c[0] + c[1] z + ... + c[n] z^n`.
///
/// Near-zero leading coefficients (relative to the largest coefficient) are
/// stripped and reported through `degree_reduced`. Constants and the zero
/// polynomial have no roots.
pub fn poly_roots(coeffs: &[C64]) -> PolyRoots {
    let scale = coeffs.iter().map(|c| c.norm()).fold(0.0f64, f64::max);
    if scale == 0.0 || coeffs.is_empty() {
        return PolyRoots {
            roots: Vec::new(),
            degree_reduced: false,
        };
    }
    let mut deg = coeffs.len() - 1;
    let mut reduced = false;
    while deg > 0 && coeffs[deg].norm() <= 1e-13 * scale {
        deg -= 1;
        reduced = true;
    }
    if deg == 0 {
        return PolyRoots {
            roots: Vec::new(),
            degree_reduced: reduced,
        };
    }

    // Monic companion matrix, upper Hessenberg by construction.
    let lead = coeffs[deg];
    let n = deg;
    let mut h = vec![vec![C64::new(0.0, 0.0); n]; n];
    for i in 1..n {
        h[i][i - 1] = C64::new(1.0, 0.0);
    }
    for i in 0..n {
        h[i][n - 1] = -coeffs[i] / lead;
    }

    let mut eigs = Vec::with_capacity(n);
    hessenberg_qr(&mut h, n, &mut eigs);

    for z in &mut eigs {
        *z = newton_polish(coeffs, deg, *z);
    }
    PolyRoots {
        roots: eigs,
        degree_reduced: reduced,
    }
}

/// Evaluate `p` (degree `deg`) and its derivative at `z` by Horner.
fn eval_with_deriv(coeffs: &[C64], deg: usize, z: C64) -> (C64, C64) {
    let mut p = coeffs[deg];
    let mut dp = C64::new(0.0, 0.0);
    for k in (0..deg).rev() {
        dp = dp * z + p;
        p = p * z + coeffs[k];
    }
    (p, dp)
}

fn newton_polish(coeffs: &[C64], deg: usize, z: C64) -> C64 {
    let (p, dp) = eval_with_deriv(coeffs, deg, z);
    if dp.norm() > 1e-8 * (1.0 + z.norm()) {
        let step = p / dp;
        // A QR eigenvalue is already close; a large step means a
        // near-multiple root where the polish would overshoot.
        if step.norm() < 1e-2 {
            return z - step;
        }
    }
    z
}

/// Eigenvalues of the two-by-two block [[a,b],[c,d]].
fn eig2(a: C64, b: C64, c: C64, d: C64) -> (C64, C64) {
    let s = (a + d) * 0.5;
    let det = a * d - b * c;
    let mut q = (s * s - det).sqrt();
    if (s.conj() * q).re < 0.0 {
        q = -q;
    }
    let l1 = s + q;
    if l1.norm() > 0.0 {
        (l1, det / l1)
    } else {
        (l1, s - q)
    }
}

/// Shifted explicit QR with Givens rotations on an upper Hessenberg matrix.
/// Eigenvalues are pushed into `eigs` as blocks deflate off the bottom.
fn hessenberg_qr(h: &mut [Vec<C64>], n: usize, eigs: &mut Vec<C64>) {
    let mut hi = n; // active block occupies rows/cols 0..hi
    let mut sweeps = 0usize;
    while hi > 0 {
        if hi == 1 {
            eigs.push(h[0][0]);
            return;
        }
        // Deflation point: lowest block whose leading subdiagonal entry is
        // negligible.
        let mut lo = 0;
        for k in (1..hi).rev() {
            if h[k][k - 1].norm() <= DEFLATE_EPS * (h[k - 1][k - 1].norm() + h[k][k].norm()) {
                lo = k;
                break;
            }
        }
        if lo == hi - 1 {
            eigs.push(h[hi - 1][hi - 1]);
            hi -= 1;
            continue;
        }
        if lo == hi - 2 {
            let (l1, l2) = eig2(
                h[hi - 2][hi - 2],
                h[hi - 2][hi - 1],
                h[hi - 1][hi - 2],
                h[hi - 1][hi - 1],
            );
            eigs.push(l1);
            eigs.push(l2);
            hi -= 2;
            continue;
        }

        sweeps += 1;
        if sweeps > MAX_SWEEPS {
            // Report what is left; the Newton polish may still recover.
            for k in 0..hi {
                eigs.push(h[k][k]);
            }
            return;
        }

        // Wilkinson shift: eigenvalue of the trailing 2x2 nearest the corner.
        let (l1, l2) = eig2(
            h[hi - 2][hi - 2],
            h[hi - 2][hi - 1],
            h[hi - 1][hi - 2],
            h[hi - 1][hi - 1],
        );
        let corner = h[hi - 1][hi - 1];
        let mut mu = if (l1 - corner).norm() < (l2 - corner).norm() {
            l1
        } else {
            l2
        };
        if sweeps.is_multiple_of(19) {
            // Exceptional shift to break symmetric stalls.
            let kick = h[hi - 1][hi - 2].norm();
            mu += C64::new(0.7 * kick, 0.3 * kick);
        }

        for k in lo..hi {
            h[k][k] -= mu;
        }

        // QR step: left-multiply Givens rotations to kill the subdiagonal...
        let mut rot: Vec<(C64, C64)> = Vec::with_capacity(hi - 1 - lo);
        for k in lo..hi - 1 {
            let a = h[k][k];
            let b = h[k + 1][k];
            let r = (a.norm_sqr() + b.norm_sqr()).sqrt();
            let (c, s) = if r == 0.0 {
                (C64::new(1.0, 0.0), C64::new(0.0, 0.0))
            } else {
                (a / r, b / r)
            };
            for j in k..hi {
                let u = h[k][j];
                let v = h[k + 1][j];
                h[k][j] = c.conj() * u + s.conj() * v;
                h[k + 1][j] = -s * u + c * v;
            }
            rot.push((c, s));
        }
        // ...then right-multiply them back (RQ), restoring Hessenberg form.
        for (idx, &(c, s)) in rot.iter().enumerate() {
            let k = lo + idx;
            for i in lo..(k + 2).min(hi) {
                let u = h[i][k];
                let v = h[i][k + 1];
                h[i][k] = u * c + v * s;
                h[i][k + 1] = -u * s.conj() + v * c.conj();
            }
        }
        for k in lo..hi {
            h[k][k] += mu;
        }
    }
}
