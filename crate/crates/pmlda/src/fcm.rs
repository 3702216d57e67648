//! Fuzzy c-means baseline.
//!
//! Produces soft memberships in the same per-word layout as the sampler so
//! downstream map assembly and evaluation treat both identically.

use crate::error::{invalid, Result};
use rand::Rng;

/// Result of a fuzzy c-means run.
#[derive(Debug, Clone, PartialEq)]
pub struct FcmResult {
    pub centers: Vec<Vec<f64>>,
    /// One simplex row per data point.
    pub memberships: Vec<Vec<f64>>,
    /// Objective value recorded once per iteration; non-increasing.
    pub objective_series: Vec<f64>,
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Memberships of one point given the centers. A point coinciding with a
/// center gets full membership in the lowest-index coincident center.
fn point_memberships(point: &[f64], centers: &[Vec<f64>], m: f64) -> Vec<f64> {
    let c = centers.len();
    let d2: Vec<f64> = centers.iter().map(|ctr| squared_distance(point, ctr)).collect();
    if let Some(hit) = d2.iter().position(|&d| d == 0.0) {
        let mut row = vec![0.0; c];
        row[hit] = 1.0;
        return row;
    }
    let exponent = 1.0 / (m - 1.0);
    let mut row = vec![0.0; c];
    for i in 0..c {
        let denom: f64 = d2.iter().map(|&dj| (d2[i] / dj).powf(exponent)).sum();
        row[i] = 1.0 / denom;
    }
    row
}

fn objective(data: &[Vec<f64>], memberships: &[Vec<f64>], centers: &[Vec<f64>], m: f64) -> f64 {
    let mut j = 0.0;
    for (point, row) in data.iter().zip(memberships) {
        for (u, center) in row.iter().zip(centers) {
            j += u.powf(m) * squared_distance(point, center);
        }
    }
    j
}

/// Standard alternating fuzzy c-means.
///
/// Memberships use the inverse-distance-ratio update, centers the
/// membership-weighted means; iteration stops when the largest center shift
/// drops below `tol` or after `max_iter` rounds. Centers start at `c`
/// distinct random data points.
pub fn fcm<R: Rng + ?Sized>(
    data: &[Vec<f64>],
    c: usize,
    m: f64,
    tol: f64,
    max_iter: usize,
    rng: &mut R,
) -> Result<FcmResult> {
    if c < 2 {
        return Err(invalid("cluster count must be at least 2"));
    }
    if data.len() < c {
        return Err(invalid("need at least as many points as clusters"));
    }
    if !m.is_finite() || m <= 1.0 {
        return Err(invalid("fuzzifier must be greater than 1"));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(invalid("tolerance must be positive"));
    }
    let dim = data[0].len();
    if dim == 0 || data.iter().any(|p| p.len() != dim) {
        return Err(invalid("points must share one non-zero dimension"));
    }

    // c distinct indices by partial Fisher-Yates.
    let mut indices: Vec<usize> = (0..data.len()).collect();
    for i in 0..c {
        let j = rng.random_range(i..indices.len());
        indices.swap(i, j);
    }
    let mut centers: Vec<Vec<f64>> = indices[..c].iter().map(|&i| data[i].clone()).collect();

    let mut memberships: Vec<Vec<f64>> = Vec::new();
    let mut objective_series = Vec::new();
    for _ in 0..max_iter {
        memberships = data.iter().map(|p| point_memberships(p, &centers, m)).collect();
        objective_series.push(objective(data, &memberships, &centers, m));

        let mut shift: f64 = 0.0;
        for (i, center) in centers.iter_mut().enumerate() {
            let mut weight = 0.0;
            let mut num = vec![0.0; dim];
            for (point, row) in data.iter().zip(&memberships) {
                let w = row[i].powf(m);
                weight += w;
                for (n, x) in num.iter_mut().zip(point) {
                    *n += w * x;
                }
            }
            if weight > 0.0 {
                for (j, n) in num.iter().enumerate() {
                    let updated = n / weight;
                    shift = shift.max((updated - center[j]).abs());
                    center[j] = updated;
                }
            }
        }
        if shift < tol {
            memberships = data.iter().map(|p| point_memberships(p, &centers, m)).collect();
            break;
        }
    }

    debug_assert!(memberships
        .iter()
        .all(|row| (row.iter().sum::<f64>() - 1.0).abs() < 1e-9));
    Ok(FcmResult { centers, memberships, objective_series })
}
