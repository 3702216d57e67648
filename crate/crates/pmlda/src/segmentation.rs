//! Membership-map assembly and its crisp / transition derivatives.

use crate::error::{invalid, Result};
use crate::features::DocLayout;

/// Per-topic membership images in [0, 1] plus the mask of pixels covered by
/// at least one word. At every covered pixel the topic values sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct MembershipMap {
    pub height: usize,
    pub width: usize,
    pub k: usize,
    /// Row-major, pixel-major storage: `values[(r * width + c) * k + topic]`.
    pub values: Vec<f64>,
    pub covered: Vec<bool>,
}

impl MembershipMap {
    pub fn pixel(&self, row: usize, col: usize) -> Option<&[f64]> {
        let p = row * self.width + col;
        if self.covered[p] {
            Some(&self.values[p * self.k..(p + 1) * self.k])
        } else {
            None
        }
    }

    /// One topic's image; uncovered pixels read zero.
    pub fn topic_image(&self, topic: usize) -> Vec<f64> {
        (0..self.height * self.width)
            .map(|p| if self.covered[p] { self.values[p * self.k + topic] } else { 0.0 })
            .collect()
    }
}

/// Averages per-word memberships onto pixels through the layout; pixels hit
/// by several words (overlapping windows) take the arithmetic mean, pixels
/// hit by none are flagged uncovered.
pub fn assemble_maps(
    memberships: &[Vec<Vec<f64>>],
    layout: &DocLayout,
    height: usize,
    width: usize,
) -> Result<MembershipMap> {
    if memberships.len() != layout.coords.len() {
        return Err(invalid("membership/layout document count mismatch"));
    }
    if memberships.is_empty() {
        return Err(invalid("no documents to assemble"));
    }
    let k = memberships
        .iter()
        .flat_map(|doc| doc.iter())
        .map(|row| row.len())
        .next()
        .ok_or_else(|| invalid("no words to assemble"))?;
    if k < 2 {
        return Err(invalid("membership rows need at least two topics"));
    }

    let mut sums = vec![0.0; height * width * k];
    let mut counts = vec![0u32; height * width];
    for (doc, coords) in memberships.iter().zip(&layout.coords) {
        if doc.len() != coords.len() {
            return Err(invalid("membership/layout word count mismatch"));
        }
        for (row, &(r, c)) in doc.iter().zip(coords) {
            if row.len() != k {
                return Err(invalid("membership rows must have equal topic count"));
            }
            if (row.iter().sum::<f64>() - 1.0).abs() > 1e-6 {
                return Err(invalid("membership rows must sum to one"));
            }
            if r >= height || c >= width {
                return Err(invalid("layout coordinate outside the requested size"));
            }
            let p = r * width + c;
            counts[p] += 1;
            for (slot, v) in sums[p * k..(p + 1) * k].iter_mut().zip(row) {
                *slot += v;
            }
        }
    }
    let covered: Vec<bool> = counts.iter().map(|&c| c > 0).collect();
    for (p, &count) in counts.iter().enumerate() {
        if count > 0 {
            for slot in sums[p * k..(p + 1) * k].iter_mut() {
                *slot /= count as f64;
            }
        }
    }
    let map = MembershipMap { height, width, k, values: sums, covered };
    debug_assert!((0..height * width).all(|p| {
        !map.covered[p] || (map.values[p * k..(p + 1) * k].iter().sum::<f64>() - 1.0).abs() < 1e-6
    }));
    Ok(map)
}

/// Argmax topic per covered pixel; ties break toward the lowest topic
/// index. Uncovered pixels map to `None`.
pub fn crisp_map(map: &MembershipMap) -> Vec<Option<usize>> {
    (0..map.height * map.width)
        .map(|p| {
            if !map.covered[p] {
                return None;
            }
            let row = &map.values[p * map.k..(p + 1) * map.k];
            let mut best = 0;
            for (t, &v) in row.iter().enumerate().skip(1) {
                if v > row[best] {
                    best = t;
                }
            }
            Some(best)
        })
        .collect()
}

/// True where any topic membership falls inside `[lo, hi]`; uncovered
/// pixels are false.
pub fn transition_map(map: &MembershipMap, lo: f64, hi: f64) -> Result<Vec<bool>> {
    if lo.is_nan() || hi.is_nan() || lo > hi {
        return Err(invalid("transition band: lo must not exceed hi"));
    }
    Ok((0..map.height * map.width)
        .map(|p| {
            map.covered[p]
                && map.values[p * map.k..(p + 1) * map.k]
                    .iter()
                    .any(|&v| v >= lo && v <= hi)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{DocLayout, LayoutScheme};

    fn layout(coords: Vec<Vec<(usize, usize)>>, height: usize, width: usize) -> DocLayout {
        DocLayout { scheme: LayoutScheme::External, height, width, coords }
    }

    #[test]
    fn non_overlapping_words_pass_through() {
        let memberships = vec![vec![vec![0.2, 0.8], vec![0.7, 0.3]]];
        let l = layout(vec![vec![(0, 0), (0, 1)]], 1, 2);
        let map = assemble_maps(&memberships, &l, 1, 2).unwrap();
        assert_eq!(map.pixel(0, 0).unwrap(), &[0.2, 0.8]);
        assert_eq!(map.pixel(0, 1).unwrap(), &[0.7, 0.3]);
    }

    #[test]
    fn overlapping_words_average() {
        let memberships = vec![
            vec![vec![0.2, 0.8]],
            vec![vec![0.4, 0.6]],
        ];
        let l = layout(vec![vec![(0, 0)], vec![(0, 0)]], 1, 2);
        let map = assemble_maps(&memberships, &l, 1, 2).unwrap();
        let px = map.pixel(0, 0).unwrap();
        assert!((px[0] - 0.3).abs() < 1e-15);
        assert!((px[1] - 0.7).abs() < 1e-15);
        assert!(map.pixel(0, 1).is_none());
        assert_eq!(map.covered, vec![true, false]);
    }

    #[test]
    fn covered_rows_stay_on_the_simplex() {
        let memberships = vec![
            vec![vec![0.25, 0.75], vec![0.5, 0.5], vec![0.9, 0.1]],
            vec![vec![0.6, 0.4]],
        ];
        let l = layout(vec![vec![(0, 0), (0, 1), (1, 0)], vec![(0, 0)]], 2, 2);
        let map = assemble_maps(&memberships, &l, 2, 2).unwrap();
        for r in 0..2 {
            for c in 0..2 {
                if let Some(px) = map.pixel(r, c) {
                    assert!((px.iter().sum::<f64>() - 1.0).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn crisp_argmax_and_tie_rule() {
        let memberships = vec![vec![
            vec![0.7, 0.2, 0.1],
            vec![0.5, 0.5, 0.0],
            vec![0.1, 0.2, 0.7],
        ]];
        let l = layout(vec![vec![(0, 0), (0, 1), (0, 2)]], 1, 3);
        let map = assemble_maps(&memberships, &l, 1, 3).unwrap();
        assert_eq!(crisp_map(&map), vec![Some(0), Some(0), Some(2)]);
    }

    #[test]
    fn crisp_is_invariant_under_uniform_rescaling() {
        let base = vec![0.5, 0.3, 0.2];
        let mut map = MembershipMap {
            height: 1,
            width: 1,
            k: 3,
            values: base.clone(),
            covered: vec![true],
        };
        let before = crisp_map(&map);
        map.values = base.iter().map(|v| v * 3.7).collect();
        assert_eq!(crisp_map(&map), before);
    }

    #[test]
    fn transition_band_edges() {
        let map = MembershipMap {
            height: 1,
            width: 3,
            k: 2,
            values: vec![0.55, 0.45, 1.0, 0.0, 0.39, 0.61],
            covered: vec![true; 3],
        };
        let t = transition_map(&map, 0.4, 0.6).unwrap();
        assert_eq!(t, vec![true, false, false]);
        assert!(transition_map(&map, 0.6, 0.4).is_err());
    }

    #[test]
    fn two_topic_transition_pixels_have_no_strong_winner() {
        let map = MembershipMap {
            height: 1,
            width: 4,
            k: 2,
            values: vec![0.58, 0.42, 0.61, 0.39, 0.40, 0.60, 0.99, 0.01],
            covered: vec![true; 4],
        };
        let t = transition_map(&map, 0.4, 0.6).unwrap();
        let crisp = crisp_map(&map);
        for p in 0..4 {
            if t[p] {
                let winner = crisp[p].unwrap();
                assert!(map.values[p * 2 + winner] < 0.61);
            }
        }
    }
}
