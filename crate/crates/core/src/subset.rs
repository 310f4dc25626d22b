//! Choosing a well-spread subset of acquisitions.

use crate::error::{Error, Result};
use crate::insar::StackMetadata;

/// Picks `n` images whose (spatial, temporal) baselines cover the full spans
/// as evenly as possible.
///
/// Baselines are scaled to the unit square. For `n ≥ 4` the images at the
/// extremes of both axes are taken first, so the subset keeps the full
/// spans; otherwise the two most distant images seed the selection. Each
/// further pick is the image farthest from everything chosen so far. Ties go
/// to the lower index. The result is sorted ascending.
pub fn select_uniform_subset(meta: &StackMetadata, n: usize) -> Result<Vec<usize>> {
    meta.validate()?;
    let total = meta.n_images();
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "a subset needs at least 2 images, got {n}"
        )));
    }
    if n > total {
        return Err(Error::InvalidArgument(format!(
            "cannot pick {n} of {total} images"
        )));
    }
    if n == total {
        return Ok((0..total).collect());
    }

    let pts: Vec<[f64; 2]> = {
        let norm = |v: &[f64]| -> Vec<f64> {
            let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let span = hi - lo;
            v.iter()
                .map(|x| if span > 0.0 { (x - lo) / span } else { 0.0 })
                .collect()
        };
        let b = norm(&meta.spatial_baselines);
        let t = norm(&meta.temporal_baselines);
        b.into_iter().zip(t).map(|(b, t)| [b, t]).collect()
    };
    let dist2 = |a: usize, b: usize| {
        let (p, q) = (pts[a], pts[b]);
        (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)
    };

    let mut seed = (0, 1);
    let mut best = -1.0;
    for a in 0..total {
        for b in a + 1..total {
            let d = dist2(a, b);
            if d > best {
                best = d;
                seed = (a, b);
            }
        }
    }

    let mut chosen = vec![seed.0, seed.1];
    if n >= 4 {
        let arg = |axis: usize, better: fn(f64, f64) -> bool| {
            (1..total).fold(0, |k, m| {
                if better(pts[m][axis], pts[k][axis]) {
                    m
                } else {
                    k
                }
            })
        };
        chosen.clear();
        for axis in 0..2 {
            for k in [arg(axis, |a, b| a < b), arg(axis, |a, b| a > b)] {
                if !chosen.contains(&k) {
                    chosen.push(k);
                }
            }
        }
    }
    let mut nearest: Vec<f64> = (0..total)
        .map(|k| {
            chosen
                .iter()
                .map(|&c| dist2(k, c))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    while chosen.len() < n {
        let mut pick = None;
        let mut far = -1.0;
        for (k, &d) in nearest.iter().enumerate() {
            if !chosen.contains(&k) && d > far {
                far = d;
                pick = Some(k);
            }
        }
        let k = pick.expect("fewer chosen than available");
        chosen.push(k);
        for (m, d) in nearest.iter_mut().enumerate() {
            *d = d.min(dist2(m, k));
        }
    }
    chosen.sort_unstable();
    Ok(chosen)
}
