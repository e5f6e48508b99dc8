use crate::ingest::BBox;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Association {
    /// `(track index, detection index, iou)`, sorted by track index.
    pub matches: Vec<(usize, usize, f64)>,
    pub unmatched_tracks: Vec<usize>,
    pub unmatched_detections: Vec<usize>,
}

/// Maximum-weight assignment on a rectangular matrix (Kuhn-Munkres, O(n^3)).
/// Returns, for every row, the assigned column if any.
pub fn hungarian_max(weights: &[Vec<f64>]) -> Vec<Option<usize>> {
    let rows = weights.len();
    let cols = weights.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return vec![None; rows];
    }
    let n = rows.max(cols);
    let max_w = weights
        .iter()
        .flatten()
        .fold(0.0f64, |m, &w| m.max(w));
    // square cost matrix for minimisation; padding costs max_w (weight 0)
    let cost = |i: usize, j: usize| -> f64 {
        if i < rows && j < cols {
            max_w - weights[i][j]
        } else {
            max_w
        }
    };

    // 1-based potentials formulation
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out = vec![None; rows];
    for j in 1..=n {
        let i = p[j];
        if i >= 1 && i <= rows && j <= cols {
            out[i - 1] = Some(j - 1);
        }
    }
    out
}

/// Optimal one-to-one matching of predicted track boxes to detections by
/// total IoU. Pairs below `iou_min` are reported unmatched.
pub fn associate(tracks: &[BBox], detections: &[BBox], iou_min: f64) -> Association {
    let ious: Vec<Vec<f64>> = tracks
        .iter()
        .map(|t| detections.iter().map(|d| t.iou(d)).collect())
        .collect();
    let assignment = hungarian_max(&ious);
    let mut out = Association::default();
    let mut det_used = vec![false; detections.len()];
    for (ti, a) in assignment.into_iter().enumerate() {
        match a {
            Some(di) if ious[ti][di] >= iou_min => {
                det_used[di] = true;
                out.matches.push((ti, di, ious[ti][di]));
            }
            _ => out.unmatched_tracks.push(ti),
        }
    }
    out.unmatched_detections = (0..detections.len()).filter(|&d| !det_used[d]).collect();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn permutations(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in permutations(n - 1) {
            for k in 0..=p.len() {
                let mut q = p.clone();
                q.insert(k, n - 1);
                out.push(q);
            }
        }
        out
    }

    #[test]
    fn identical_box() {
        let b = BBox::new(0.0, 0.0, 10.0, 20.0);
        let a = associate(&[b], &[b], 0.3);
        assert_eq!(a.matches, vec![(0, 0, 1.0)]);
        assert!(a.unmatched_tracks.is_empty() && a.unmatched_detections.is_empty());
    }

    #[test]
    fn disjoint_boxes() {
        let a = associate(
            &[BBox::new(0.0, 0.0, 10.0, 10.0)],
            &[BBox::new(50.0, 50.0, 60.0, 60.0)],
            0.3,
        );
        assert!(a.matches.is_empty());
        assert_eq!(a.unmatched_tracks, vec![0]);
        assert_eq!(a.unmatched_detections, vec![0]);
    }

    #[test]
    fn empty_inputs() {
        let b = BBox::new(0.0, 0.0, 1.0, 1.0);
        assert_eq!(associate(&[], &[], 0.3), Association::default());
        assert_eq!(associate(&[b], &[], 0.3).unmatched_tracks, vec![0]);
        assert_eq!(associate(&[], &[b], 0.3).unmatched_detections, vec![0]);
    }

    #[test]
    fn greedy_would_be_wrong() {
        // greedy takes (0,0)=0.9 then (1,1)=0.1; optimum is 0.8 + 0.8
        let w = vec![vec![0.9, 0.8], vec![0.8, 0.1]];
        assert_eq!(hungarian_max(&w), vec![Some(1), Some(0)]);
    }

    #[test]
    fn three_by_three_matches_exhaustive_search() {
        let tracks = [
            BBox::new(0.0, 0.0, 10.0, 10.0),
            BBox::new(4.0, 0.0, 14.0, 10.0),
            BBox::new(8.0, 2.0, 18.0, 12.0),
        ];
        let dets = [
            BBox::new(3.0, 0.0, 13.0, 10.0),
            BBox::new(7.0, 1.0, 17.0, 11.0),
            BBox::new(1.0, 1.0, 11.0, 11.0),
        ];
        let ious: Vec<Vec<f64>> = tracks
            .iter()
            .map(|t| dets.iter().map(|d| t.iou(d)).collect())
            .collect();
        let best = permutations(3)
            .into_iter()
            .max_by(|a, b| {
                let sa: f64 = a.iter().enumerate().map(|(i, &j)| ious[i][j]).sum();
                let sb: f64 = b.iter().enumerate().map(|(i, &j)| ious[i][j]).sum();
                sa.total_cmp(&sb)
            })
            .unwrap();
        let got: Vec<usize> = hungarian_max(&ious).into_iter().map(Option::unwrap).collect();
        assert_eq!(got, best);
    }

    proptest! {
        #[test]
        fn optimal_on_random_matrices(
            rows in 1usize..5, cols in 1usize..5,
            vals in prop::collection::vec(0.0f64..1.0, 25)
        ) {
            let w: Vec<Vec<f64>> = (0..rows).map(|i| vals[i * 5..i * 5 + cols].to_vec()).collect();
            let got = hungarian_max(&w);
            let got_sum: f64 = got.iter().enumerate().filter_map(|(i, c)| c.map(|j| w[i][j])).sum();
            // exhaustive over injective maps from the smaller side
            let n = rows.max(cols);
            let best = permutations(n).into_iter().map(|p| {
                (0..rows).filter(|&i| p[i] < cols).map(|i| w[i][p[i]]).sum::<f64>()
            }).fold(f64::MIN, f64::max);
            prop_assert!((got_sum - best).abs() < 1e-9);
            let mut used: Vec<usize> = got.iter().flatten().copied().collect();
            used.sort();
            used.dedup();
            prop_assert_eq!(used.len(), got.iter().flatten().count());
        }

        #[test]
        fn match_set_ignores_detection_order(
            seed in prop::collection::vec((0.0f64..200.0, 0.0f64..200.0, 10.0f64..60.0, 10.0f64..60.0), 1..6),
            jitter in prop::collection::vec((-8.0f64..8.0, -8.0f64..8.0), 6),
            rot in 0usize..6
        ) {
            let tracks: Vec<BBox> = seed.iter().map(|&(x, y, w, h)| BBox::new(x, y, x + w, y + h)).collect();
            let dets: Vec<BBox> = tracks.iter().zip(&jitter)
                .map(|(b, &(dx, dy))| BBox::new(b.x1 + dx, b.y1 + dy, b.x2 + dx, b.y2 + dy)).collect();
            let n = dets.len();
            let perm: Vec<usize> = (0..n).map(|i| (i + rot) % n).collect();
            let shuffled: Vec<BBox> = perm.iter().map(|&i| dets[i]).collect();
            let a = associate(&tracks, &dets, 0.3);
            let b = associate(&tracks, &shuffled, 0.3);
            let mut ma: Vec<(usize, usize)> = a.matches.iter().map(|m| (m.0, m.1)).collect();
            let mut mb: Vec<(usize, usize)> = b.matches.iter().map(|m| (m.0, perm[m.1])).collect();
            ma.sort();
            mb.sort();
            prop_assert_eq!(ma, mb);
        }
    }
}
