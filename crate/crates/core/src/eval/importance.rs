use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::classifier::ModelWeights;
use crate::preprocess::{FeatureConfig, FeatureGroup, FeatureLayout};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupImportance {
    pub group: FeatureGroup,
    /// Mean of |coefficient| over the group's frames and axes.
    pub importance: f64,
    pub n_coefficients: usize,
}

/// Per-joint (or per angle axis) importance, sorted descending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport {
    pub config: FeatureConfig,
    pub entries: Vec<GroupImportance>,
}

impl ImportanceReport {
    pub fn rank_of(&self, group: FeatureGroup) -> Option<usize> {
        self.entries.iter().position(|e| e.group == group)
    }

    pub fn get(&self, group: FeatureGroup) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.group == group)
            .map(|e| e.importance)
    }

    /// `tag,config,rank,group,importance` rows.
    pub fn write_csv_rows<W: Write>(&self, wr: &mut csv::Writer<W>, tag: &str) -> csv::Result<()> {
        for (rank, e) in self.entries.iter().enumerate() {
            wr.write_record([
                tag.to_string(),
                self.config.name().to_string(),
                (rank + 1).to_string(),
                e.group.to_string(),
                format!("{:.9}", e.importance),
            ])?;
        }
        Ok(())
    }
}

pub fn feature_importance(model: &ModelWeights) -> ImportanceReport {
    importance_from_weights(model.config, &model.layout, &model.weights)
}

pub fn importance_from_weights(
    config: FeatureConfig,
    layout: &FeatureLayout,
    weights: &[f64],
) -> ImportanceReport {
    let groups = layout.groups();
    let mut sums = vec![(0.0, 0usize); groups.len()];
    for (i, w) in weights.iter().enumerate() {
        let g = layout.index(i).group();
        let slot = groups.iter().position(|x| *x == g).expect("group in layout");
        sums[slot].0 += w.abs();
        sums[slot].1 += 1;
    }
    let mut entries: Vec<GroupImportance> = groups
        .into_iter()
        .zip(sums)
        .map(|(group, (s, n))| GroupImportance {
            group,
            importance: if n == 0 { 0.0 } else { s / n as f64 },
            n_coefficients: n,
        })
        .collect();
    // stable: equal importances keep layout order
    entries.sort_by(|a, b| b.importance.total_cmp(&a.importance));
    ImportanceReport { config, entries }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::skeleton::{Joint, JOINT_COUNT};

    fn layout() -> FeatureLayout {
        FeatureLayout {
            pose_frames: 4,
            angle_frames: 0,
        }
    }

    #[test]
    fn equal_weights() {
        let l = layout();
        let w = vec![-0.25; l.len()];
        let r = importance_from_weights(FeatureConfig::CamPos12, &l, &w);
        assert_eq!(r.entries.len(), JOINT_COUNT);
        assert!(r.entries.iter().all(|e| e.importance == 0.25 && e.n_coefficients == 12));
        // ties keep joint order
        assert_eq!(r.entries[0].group, FeatureGroup::Joint(Joint::Hip));
    }

    #[test]
    fn left_foot_only() {
        let l = layout();
        let w: Vec<f64> = (0..l.len())
            .map(|i| match l.index(i).group() {
                FeatureGroup::Joint(Joint::LFoot) => 0.1 * (i % 3) as f64,
                _ => 0.0,
            })
            .collect();
        let r = importance_from_weights(FeatureConfig::CamPos12, &l, &w);
        assert_eq!(r.entries[0].group, FeatureGroup::Joint(Joint::LFoot));
        assert!(r.entries[0].importance > r.entries[1].importance);
        assert!((r.get(FeatureGroup::Joint(Joint::LFoot)).unwrap() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn angle_groups() {
        let l = FeatureLayout {
            pose_frames: 0,
            angle_frames: 5,
        };
        let w: Vec<f64> = (0..15).map(|i| if i % 3 == 0 { 2.0 } else { 1.0 }).collect();
        let r = importance_from_weights(FeatureConfig::ImuAng60, &l, &w);
        assert_eq!(r.entries.len(), 3);
        assert_eq!(r.entries[0].group, FeatureGroup::Angle(0));
        assert_eq!(r.entries[0].group.to_string(), "angle_roll");
    }
}
