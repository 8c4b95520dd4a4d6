//! File emission: probability CSV, point-cloud CSV, polynomial dumps, and
//! 16-bit PGM images. All output is byte-deterministic: floats print in
//! Rust's shortest round-trip form and orderings are fixed.

use crate::simulate::ProbabilityGrid;
use crate::variety::CloudPoint;

/// Grayscale mapping for probability images.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Linear,
    /// log10 with a hard floor at 1e-16.
    Log,
}

/// Floor used by the log mapping; probabilities below it render as black.
pub const LOG_FLOOR: f64 = 1e-16;

/// `r,s,p` rows for every site with p above `threshold`, r then s ascending.
pub fn profile_csv(grid: &ProbabilityGrid, threshold: f64) -> String {
    let mut out = String::from("r,s,p\n");
    for (r, s, p) in grid.iter() {
        if p > threshold {
            out.push_str(&format!("{r},{s},{p}\n"));
        }
    }
    out
}

/// P5 16-bit big-endian PGM of the probability grid. Row 0 is s = +half so
/// the image reads like a plot with s upward; brighter means more probable.
pub fn profile_pgm(grid: &ProbabilityGrid, scale: Scale) -> Vec<u8> {
    let half = grid.half() as i32;
    let w = (2 * half + 1) as usize;
    let mut pix = Vec::with_capacity(w * w);
    let mut pmax = 0.0f64;
    for (_, _, p) in grid.iter() {
        pmax = pmax.max(p);
    }
    for srow in 0..w {
        let s = half - srow as i32;
        for rcol in 0..w {
            let r = rcol as i32 - half;
            pix.push(scale_value(grid.at(r, s), pmax, scale));
        }
    }
    pgm_bytes(w, w, &pix)
}

fn scale_value(p: f64, pmax: f64, scale: Scale) -> u16 {
    match scale {
        Scale::Linear => {
            if pmax <= 0.0 {
                0
            } else {
                ((65535.0 * p / pmax).round().clamp(0.0, 65535.0)) as u16
            }
        }
        Scale::Log => {
            let pmax = pmax.max(LOG_FLOOR);
            let lo = LOG_FLOOR.log10();
            let hi = pmax.log10();
            if hi <= lo {
                return 0;
            }
            let v = p.max(LOG_FLOOR).log10();
            ((65535.0 * (v - lo) / (hi - lo)).round().clamp(0.0, 65535.0)) as u16
        }
    }
}

/// `alpha,beta,sheet,gamma,v1,v2,K` rows in sweep order.
pub fn cloud_csv(points: &[CloudPoint]) -> String {
    let mut out = String::from("alpha,beta,sheet,gamma,v1,v2,K\n");
    for p in points {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            p.alpha, p.beta, p.sheet, p.gamma, p.velocity[0], p.velocity[1], p.curvature
        ));
    }
    out
}

/// Density image of the velocity cloud over [-1,1]^2: counts per pixel,
/// inverted so that fold accumulation reads dark on white, as in a plotted
/// grid of dots.
pub fn cloud_pgm(points: &[CloudPoint], pixels: usize) -> Vec<u8> {
    let n = pixels.max(1);
    let mut counts = vec![0u32; n * n];
    for p in points {
        let (v1, v2) = (p.velocity[0], p.velocity[1]);
        // v1 maps to columns, v2 upward; clamp the closed upper edge in.
        let col = (((v1 + 1.0) / 2.0) * n as f64).floor().clamp(0.0, (n - 1) as f64) as usize;
        let rowv = (((v2 + 1.0) / 2.0) * n as f64).floor().clamp(0.0, (n - 1) as f64) as usize;
        let row = n - 1 - rowv;
        counts[row * n + col] += 1;
    }
    let max = counts.iter().copied().max().unwrap_or(0).max(1);
    let pix: Vec<u16> = counts
        .iter()
        .map(|&c| {
            let v = (65535.0 * (1.0 - c as f64 / max as f64)).round();
            v.clamp(0.0, 65535.0) as u16
        })
        .collect();
    pgm_bytes(n, n, &pix)
}

/// Assemble a P5 maxval-65535 PGM with big-endian samples.
pub fn pgm_bytes(width: usize, height: usize, pix: &[u16]) -> Vec<u8> {
    assert_eq!(pix.len(), width * height);
    let mut out = format!("P5\n{width} {height}\n65535\n").into_bytes();
    out.reserve(pix.len() * 2);
    for &v in pix {
        out.extend_from_slice(&v.to_be_bytes());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::make_grover;
    use crate::simulate::{evolve, WaveField};
    use crate::C64;

    fn e1() -> [C64; 4] {
        [C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)]
    }

    #[test]
    fn csv_of_delta_is_single_row() {
        let f = WaveField::initial(e1()).unwrap();
        let csv = profile_csv(&f.probability_profile(), 1e-16);
        assert_eq!(csv, "r,s,p\n0,0,1\n");
    }

    #[test]
    fn pgm_header_and_size() {
        let f = evolve(&make_grover(), e1(), 3).unwrap();
        let img = profile_pgm(&f.probability_profile(), Scale::Log);
        let w = 2 * 3 + 1;
        let header = format!("P5\n{w} {w}\n65535\n");
        assert!(img.starts_with(header.as_bytes()));
        assert_eq!(img.len(), header.len() + w * w * 2);
    }

    #[test]
    fn linear_scale_peaks_at_max() {
        let f = WaveField::initial(e1()).unwrap();
        let img = profile_pgm(&f.probability_profile(), Scale::Linear);
        // single pixel image: the delta site saturates
        assert_eq!(&img[img.len() - 2..], &65535u16.to_be_bytes());
    }

    #[test]
    fn log_scale_maps_the_dynamic_range() {
        // pixel = 65535 (log10 p - log10 floor) / (log10 pmax - log10 floor)
        let f = evolve(&make_grover(), e1(), 2).unwrap();
        let grid = f.probability_profile();
        let img = profile_pgm(&grid, Scale::Log);
        let w = 2 * 2 + 1;
        let header = format!("P5\n{w} {w}\n65535\n").len();
        let mut pmax = 0.0f64;
        for (_, _, p) in grid.iter() {
            pmax = pmax.max(p);
        }
        for srow in 0..w {
            for rcol in 0..w {
                let (r, s) = (rcol as i32 - 2, 2 - srow as i32);
                let p = grid.at(r, s);
                let want = if p <= LOG_FLOOR {
                    0
                } else {
                    (65535.0 * (p.log10() - LOG_FLOOR.log10())
                        / (pmax.log10() - LOG_FLOOR.log10()))
                    .round() as u16
                };
                let idx = header + 2 * (srow * w + rcol);
                let got = u16::from_be_bytes([img[idx], img[idx + 1]]);
                assert_eq!(got, want, "pixel ({r},{s})");
            }
        }
    }

    #[test]
    fn byte_determinism() {
        let f = evolve(&make_grover(), e1(), 6).unwrap();
        let a = profile_csv(&f.probability_profile(), 1e-16);
        let b = profile_csv(&evolve(&make_grover(), e1(), 6).unwrap().probability_profile(), 1e-16);
        assert_eq!(a, b);
        assert_eq!(
            profile_pgm(&f.probability_profile(), Scale::Log),
            profile_pgm(&f.probability_profile(), Scale::Log)
        );
    }
}
