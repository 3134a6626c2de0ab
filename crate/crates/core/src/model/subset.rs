//! Feature subsets, feature grouping and masked-input composition.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A subset `S` of the input features.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SubsetMask {
    selected: Vec<bool>,
}

impl SubsetMask {
    pub fn full(n: usize) -> Self {
        Self {
            selected: vec![true; n],
        }
    }

    pub fn empty(n: usize) -> Self {
        Self {
            selected: vec![false; n],
        }
    }

    pub fn from_bools(selected: Vec<bool>) -> Self {
        Self { selected }
    }

    pub fn from_indices(n: usize, indices: &[usize]) -> Result<Self> {
        let mut selected = vec![false; n];
        for &i in indices {
            if i >= n {
                return Err(Error::Index {
                    what: "subset feature",
                    index: i,
                    limit: n,
                });
            }
            selected[i] = true;
        }
        Ok(Self { selected })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.selected.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.selected.is_empty()
    }

    #[inline]
    pub fn contains(&self, i: usize) -> bool {
        self.selected[i]
    }

    pub fn set(&mut self, i: usize, on: bool) {
        self.selected[i] = on;
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.selected
    }

    pub fn cardinality(&self) -> usize {
        self.selected.iter().filter(|&&s| s).count()
    }

    /// Ascending indices of the selected features.
    pub fn indices(&self) -> Vec<usize> {
        self.selected
            .iter()
            .enumerate()
            .filter_map(|(i, &s)| s.then_some(i))
            .collect()
    }

    pub fn complement(&self) -> Self {
        Self {
            selected: self.selected.iter().map(|s| !s).collect(),
        }
    }

    /// `|S| / n` as a percentage; an empty feature space counts as 0%.
    pub fn size_pct(&self) -> f64 {
        if self.selected.is_empty() {
            0.0
        } else {
            100.0 * self.cardinality() as f64 / self.selected.len() as f64
        }
    }
}

/// How the explanation head treats patch grouping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GroupHead {
    /// One score per feature; a group's score is the mean of its members.
    #[default]
    MeanPool,
    /// One score per group.
    PerGroup,
}

/// Partition of an `height × width` image into `side × side` patches.
///
/// Trailing patches on the right and bottom edges are smaller when the image
/// side is not a multiple of `side`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grouping {
    side: usize,
    height: usize,
    width: usize,
    members: Vec<Vec<usize>>,
    group_of: Vec<usize>,
}

impl Grouping {
    pub fn new(height: usize, width: usize, side: usize) -> Result<Self> {
        if side == 0 || height == 0 || width == 0 {
            return Err(Error::Config(format!(
                "grouping needs positive dimensions, got {height}x{width} with patch side {side}"
            )));
        }
        let gh = height.div_ceil(side);
        let gw = width.div_ceil(side);
        let mut members = vec![Vec::new(); gh * gw];
        let mut group_of = vec![0; height * width];
        for y in 0..height {
            for x in 0..width {
                let g = (y / side) * gw + x / side;
                members[g].push(y * width + x);
                group_of[y * width + x] = g;
            }
        }
        Ok(Self {
            side,
            height,
            width,
            members,
            group_of,
        })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn features(&self) -> usize {
        self.group_of.len()
    }

    pub fn count(&self) -> usize {
        self.members.len()
    }

    pub fn members(&self, group: usize) -> &[usize] {
        &self.members[group]
    }

    pub fn group_of(&self, feature: usize) -> usize {
        self.group_of[feature]
    }
}

/// How the explanation-head output maps onto input features.
#[derive(Debug, Clone, PartialEq)]
pub enum ExplanationLayout {
    PerFeature,
    Grouped { grouping: Grouping, head: GroupHead },
}

impl ExplanationLayout {
    /// Width of the explanation head for `n` input features.
    pub fn head_width(&self, n: usize) -> usize {
        match self {
            ExplanationLayout::PerFeature => n,
            ExplanationLayout::Grouped {
                head: GroupHead::MeanPool,
                ..
            } => n,
            ExplanationLayout::Grouped {
                grouping,
                head: GroupHead::PerGroup,
            } => grouping.count(),
        }
    }

    pub fn grouping(&self) -> Option<&Grouping> {
        match self {
            ExplanationLayout::PerFeature => None,
            ExplanationLayout::Grouped { grouping, .. } => Some(grouping),
        }
    }

    /// Score of each selectable unit (feature, or group), before thresholding.
    pub fn unit_scores(&self, scores: &[f64]) -> Vec<f64> {
        match self {
            ExplanationLayout::PerFeature
            | ExplanationLayout::Grouped {
                head: GroupHead::PerGroup,
                ..
            } => scores.to_vec(),
            ExplanationLayout::Grouped {
                grouping,
                head: GroupHead::MeanPool,
            } => (0..grouping.count())
                .map(|g| {
                    let m = grouping.members(g);
                    m.iter().map(|&i| scores[i]).sum::<f64>() / m.len() as f64
                })
                .collect(),
        }
    }
}

/// Thresholds explanation scores into a feature subset: `S = {i | score_i ≥ τ}`.
///
/// Under grouping every member of a group shares the group's decision.
pub fn extract_subset(scores: &[f64], tau: f64, layout: &ExplanationLayout) -> SubsetMask {
    match layout.grouping() {
        None => SubsetMask::from_bools(scores.iter().map(|&s| s >= tau).collect()),
        Some(grouping) => {
            let units = layout.unit_scores(scores);
            let selected = (0..grouping.features())
                .map(|i| units[grouping.group_of(i)] >= tau)
                .collect();
            SubsetMask::from_bools(selected)
        }
    }
}

fn check_width(op: &'static str, x: usize, other: usize) -> Result<()> {
    if x != other {
        return Err(Error::Dimension {
            op,
            left: (1, x),
            right: (1, other),
        });
    }
    Ok(())
}

/// `(x_S; z_S̄)`: features in `S` come from `x`, the rest from `z`.
pub fn compose_masked_input(x: &[f64], subset: &SubsetMask, z: &[f64]) -> Result<Vec<f64>> {
    check_width("compose_masked_input", x.len(), subset.len())?;
    check_width("compose_masked_input", x.len(), z.len())?;
    Ok(x.iter()
        .zip(z)
        .zip(subset.as_slice())
        .map(|((&xi, &zi), &keep)| if keep { xi } else { zi })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn direct_threshold() {
        let s = extract_subset(&[0.7, 0.4, 0.5], 0.5, &ExplanationLayout::PerFeature);
        assert_eq!(s.indices(), vec![0, 2]);
    }

    #[test]
    fn threshold_is_inclusive() {
        let s = extract_subset(&[0.5; 6], 0.5, &ExplanationLayout::PerFeature);
        assert_eq!(s.cardinality(), 6);
    }

    #[test]
    fn grouped_block_selection() {
        let grouping = Grouping::new(4, 4, 2).unwrap();
        let mut scores = vec![0.1; 16];
        // group 3 is the bottom-right block: rows 2..4, cols 2..4
        for &i in grouping.members(3) {
            scores[i] = 0.6;
        }
        let layout = ExplanationLayout::Grouped {
            grouping,
            head: GroupHead::MeanPool,
        };
        let s = extract_subset(&scores, 0.5, &layout);
        assert_eq!(s.indices(), vec![10, 11, 14, 15]);
    }

    #[test]
    fn per_group_head_expands_to_features() {
        let grouping = Grouping::new(2, 4, 2).unwrap();
        let layout = ExplanationLayout::Grouped {
            grouping,
            head: GroupHead::PerGroup,
        };
        assert_eq!(layout.head_width(8), 2);
        let s = extract_subset(&[0.2, 0.9], 0.5, &layout);
        assert_eq!(s.indices(), vec![2, 3, 6, 7]);
    }

    #[test]
    fn remainder_groups_are_smaller() {
        let g = Grouping::new(5, 5, 2).unwrap();
        assert_eq!(g.count(), 9);
        assert_eq!(g.members(0).len(), 4);
        assert_eq!(g.members(2), &[4, 9]);
        assert_eq!(g.members(8), &[24]);
    }

    #[test]
    fn compose_cases() {
        let x = [1.0, 2.0, 3.0];
        let z = [9.0, 9.0, 9.0];
        let s = SubsetMask::from_indices(3, &[0, 2]).unwrap();
        assert_eq!(compose_masked_input(&x, &s, &z).unwrap(), vec![1.0, 9.0, 3.0]);
        assert_eq!(compose_masked_input(&x, &SubsetMask::full(3), &z).unwrap(), x.to_vec());
        assert_eq!(compose_masked_input(&x, &SubsetMask::empty(3), &z).unwrap(), z.to_vec());
        assert!(compose_masked_input(&x, &SubsetMask::full(2), &z).is_err());
        assert!(compose_masked_input(&x, &s, &z[..2]).is_err());
    }

    #[test]
    fn from_indices_rejects_out_of_range() {
        assert!(SubsetMask::from_indices(3, &[3]).is_err());
    }
}
