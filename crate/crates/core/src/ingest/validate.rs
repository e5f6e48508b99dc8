use super::{JumpSample, Rejection};
use crate::skeleton::{Joint, JOINT_COUNT};

/// Longest run of missing frames that is repaired by interpolation.
pub const DEFAULT_MAX_GAP: usize = 5;

/// Repairs short occlusion gaps and checks the sample invariants.
///
/// A joint is missing in a frame when any of its coordinates is non-finite.
/// Runs of at most `max_gap` missing frames are linearly interpolated from the
/// nearest valid frames on each side. Longer runs, or runs touching either end
/// of the sequence, reject the sample.
pub fn validate_sample(sample: &JumpSample, max_gap: usize) -> Result<JumpSample, Rejection> {
    let reject = |reason: String| Rejection {
        sample_id: sample.sample_id.clone(),
        reason,
    };
    let mut out = sample.clone();

    let frames = &mut out.pose.frames;
    for j in 0..JOINT_COUNT {
        let missing: Vec<bool> = frames
            .iter()
            .map(|f| f[j].iter().any(|v| !v.is_finite()))
            .collect();
        fill_gaps(&missing, max_gap, |a, b, t| {
            let w = (t - a) as f64 / (b - a) as f64;
            let (pa, pb) = (frames[a][j], frames[b][j]);
            for k in 0..3 {
                frames[t][j][k] = pa[k] + (pb[k] - pa[k]) * w;
            }
        })
        .map_err(|g| reject(g.describe(&format!("joint {}", Joint::ALL[j]))))?;
    }

    if let Some(angles) = out.angles.as_mut() {
        let rows = &mut angles.frames;
        let missing: Vec<bool> = rows
            .iter()
            .map(|r| r.iter().any(|v| !v.is_finite()))
            .collect();
        fill_gaps(&missing, max_gap, |a, b, t| {
            let w = (t - a) as f64 / (b - a) as f64;
            let (ra, rb) = (rows[a], rows[b]);
            for k in 0..3 {
                rows[t][k] = ra[k] + (rb[k] - ra[k]) * w;
            }
        })
        .map_err(|g| reject(g.describe("skate angles")))?;
    }

    out.check().map_err(|e| reject(e.to_string()))?;
    Ok(out)
}

enum Gap {
    Boundary { start: usize, end: usize },
    TooLong { start: usize, end: usize, max: usize },
}

impl Gap {
    fn describe(&self, what: &str) -> String {
        match *self {
            Gap::Boundary { start, end } => format!(
                "occlusion gap at sequence boundary ({what}, frames {start}..={end})"
            ),
            Gap::TooLong { start, end, max } => format!(
                "occlusion gap {} > {max} ({what}, frames {start}..={end})",
                end - start + 1
            ),
        }
    }
}

/// Walks runs of `missing` and calls `fill(prev_valid, next_valid, t)` for
/// every frame `t` of each repairable run.
fn fill_gaps(
    missing: &[bool],
    max_gap: usize,
    mut fill: impl FnMut(usize, usize, usize),
) -> Result<(), Gap> {
    let n = missing.len();
    let mut t = 0;
    while t < n {
        if !missing[t] {
            t += 1;
            continue;
        }
        let start = t;
        while t < n && missing[t] {
            t += 1;
        }
        let end = t - 1;
        if start == 0 || t == n {
            return Err(Gap::Boundary { start, end });
        }
        if end - start + 1 > max_gap {
            return Err(Gap::TooLong {
                start,
                end,
                max: max_gap,
            });
        }
        for k in start..=end {
            fill(start - 1, t, k);
        }
    }
    Ok(())
}
