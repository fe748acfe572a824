//! Canonical boxes: a nested dyadic family of axis-parallel boxes such that
//! every axis-parallel box is a disjoint union of canonical boxes plus a
//! few leftover points.
//!
//! Points are ordered along each axis by `(coordinate, index)`, so ties are
//! broken by index and every construction is combinatorial.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MAX_ENUMERATION_POINTS: usize = 32;
pub const MAX_ENUMERATION_DIM: usize = 2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("invalid point set: {0}")]
    InvalidPoints(String),
    #[error("box has dimension {got}, point set has dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("tree was built on a different point set")]
    TreeMismatch,
    #[error("refusing exhaustive enumeration for n = {n}, d = {d} (limits n <= {MAX_ENUMERATION_POINTS}, d <= {MAX_ENUMERATION_DIM})")]
    RefuseTooLarge { n: usize, d: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPointSet", into = "RawPointSet")]
pub struct PointSet {
    d: usize,
    points: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct RawPointSet {
    d: usize,
    points: Vec<Vec<f64>>,
}

impl TryFrom<RawPointSet> for PointSet {
    type Error = GeometryError;
    fn try_from(raw: RawPointSet) -> Result<Self, Self::Error> {
        PointSet::new(raw.d, raw.points)
    }
}

impl From<PointSet> for RawPointSet {
    fn from(p: PointSet) -> Self {
        RawPointSet {
            d: p.d,
            points: p.points,
        }
    }
}

impl PointSet {
    pub fn new(d: usize, points: Vec<Vec<f64>>) -> Result<Self, GeometryError> {
        if d == 0 {
            return Err(GeometryError::InvalidPoints("dimension must be at least 1".into()));
        }
        for (i, p) in points.iter().enumerate() {
            if p.len() != d {
                return Err(GeometryError::InvalidPoints(format!(
                    "point {i} has {} coordinates, expected {d}",
                    p.len()
                )));
            }
            if p.iter().any(|x| !x.is_finite()) {
                return Err(GeometryError::InvalidPoints(format!("point {i} is not finite")));
            }
        }
        Ok(Self { d, points })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    fn sort_by_axis(&self, idx: &mut [usize], axis: usize) {
        idx.sort_by(|&a, &b| {
            self.points[a][axis]
                .total_cmp(&self.points[b][axis])
                .then(a.cmp(&b))
        });
    }
}

/// Closed axis-parallel box `[lo_1, hi_1] × … × [lo_d, hi_d]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl AxisBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        Self { lo, hi }
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(x, (l, h))| l <= x && x <= h)
    }

    /// Indices of the points of `p` inside the box, ascending.
    pub fn members(&self, p: &PointSet) -> Vec<usize> {
        (0..p.len()).filter(|&i| self.contains(p.point(i))).collect()
    }

    /// The smallest box with the same point set (`None` if it holds no points).
    pub fn shrink_to(&self, p: &PointSet) -> Option<AxisBox> {
        let m = self.members(p);
        if m.is_empty() {
            return None;
        }
        let d = p.dim();
        let lo = (0..d)
            .map(|k| m.iter().map(|&i| p.point(i)[k]).fold(f64::INFINITY, f64::min))
            .collect();
        let hi = (0..d)
            .map(|k| m.iter().map(|&i| p.point(i)[k]).fold(f64::NEG_INFINITY, f64::max))
            .collect();
        Some(AxisBox { lo, hi })
    }
}

/// `16 (d + ⌈log₂ n⌉)^{d−1}`.
pub fn default_ell(n: usize, d: usize) -> usize {
    16 * (d + ceil_log2(n)).pow(d as u32 - 1)
}

pub fn ceil_log2(n: usize) -> usize {
    if n <= 1 {
        0
    } else {
        (usize::BITS - (n - 1).leading_zeros()) as usize
    }
}

/// Leftover bound `2ℓ (1 + L + … + L^{d−1})` with `L = ⌈log₂ n⌉`.
pub fn leftover_bound(n: usize, d: usize, ell: usize) -> usize {
    let l = ceil_log2(n);
    2 * ell * (0..d).map(|k| l.pow(k as u32)).sum::<usize>()
}

/// Count bound `(2n/ℓ) (d + log₂(n/ℓ))^{d−1}` for an overridden `ℓ`.
pub fn census_bound(n: usize, d: usize, ell: usize) -> f64 {
    if n < ell {
        return 0.0;
    }
    let r = n as f64 / ell as f64;
    2.0 * r * (d as f64 + r.log2()).powi(d as i32 - 1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanonicalBox {
    /// Global point indices, ascending.
    pub points: Vec<usize>,
    /// `(i_1, …, i_d)`: along axis `k` the interval holds `ℓ·2^{i_k}` points.
    pub type_tag: Vec<u32>,
}

#[derive(Debug, Clone)]
struct Node {
    /// Point indices sorted along this node's axis.
    order: Vec<usize>,
    /// `levels[i][j]`: j-th block of size `ℓ·2^i`.
    levels: Vec<Vec<Block>>,
}

#[derive(Debug, Clone)]
enum Block {
    Inner(Box<Node>),
    Leaf(usize),
}

#[derive(Debug, Clone)]
pub struct CanonicalBoxTree {
    ell: usize,
    d: usize,
    points: PointSet,
    subset: Vec<usize>,
    root: Option<Node>,
    leaves: Vec<CanonicalBox>,
}

impl CanonicalBoxTree {
    /// Canonical boxes of the whole point set.
    pub fn build(p: &PointSet, ell_override: Option<usize>) -> Self {
        let all: Vec<usize> = (0..p.len()).collect();
        Self::build_on(p, &all, ell_override)
    }

    /// Canonical boxes of the subset `subset` of `p`; leaves carry global indices.
    pub fn build_on(p: &PointSet, subset: &[usize], ell_override: Option<usize>) -> Self {
        let n = subset.len();
        let ell = ell_override.unwrap_or_else(|| default_ell(n, p.dim())).max(1);
        let mut leaves = Vec::new();
        let root = if n >= ell {
            let mut tag = Vec::with_capacity(p.dim());
            Some(build_node(p, subset.to_vec(), 0, ell, &mut tag, &mut leaves))
        } else {
            None
        };
        let mut subset = subset.to_vec();
        subset.sort_unstable();
        Self {
            ell,
            d: p.dim(),
            points: p.clone(),
            subset,
            root,
            leaves,
        }
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Number of points the tree was built on.
    pub fn size(&self) -> usize {
        self.subset.len()
    }

    pub fn subset(&self) -> &[usize] {
        &self.subset
    }

    pub fn leaves(&self) -> &[CanonicalBox] {
        &self.leaves
    }

    /// Number of canonical boxes per type tag.
    pub fn census(&self) -> BTreeMap<Vec<u32>, usize> {
        let mut c = BTreeMap::new();
        for leaf in &self.leaves {
            *c.entry(leaf.type_tag.clone()).or_insert(0) += 1;
        }
        c
    }

    /// The bound the leaf count must obey: `n/8` for the default `ℓ`, the
    /// pre-simplification count otherwise.
    pub fn count_bound(&self) -> f64 {
        let n = self.size();
        if self.ell == default_ell(n, self.d) {
            n as f64 / 8.0
        } else {
            census_bound(n, self.d, self.ell)
        }
    }

    pub fn leftover_bound(&self) -> usize {
        leftover_bound(self.size().max(1), self.d, self.ell)
    }
}

fn build_node(
    p: &PointSet,
    mut idx: Vec<usize>,
    axis: usize,
    ell: usize,
    tag: &mut Vec<u32>,
    leaves: &mut Vec<CanonicalBox>,
) -> Node {
    p.sort_by_axis(&mut idx, axis);
    let m = idx.len();
    let mut levels = Vec::new();
    let mut size = ell;
    let mut level = 0u32;
    while size <= m {
        let mut blocks = Vec::with_capacity(m / size);
        for j in 0..m / size {
            let part = idx[j * size..(j + 1) * size].to_vec();
            tag.push(level);
            if axis + 1 == p.dim() {
                let mut pts = part;
                pts.sort_unstable();
                leaves.push(CanonicalBox {
                    points: pts,
                    type_tag: tag.clone(),
                });
                blocks.push(Block::Leaf(leaves.len() - 1));
            } else {
                blocks.push(Block::Inner(Box::new(build_node(
                    p,
                    part,
                    axis + 1,
                    ell,
                    tag,
                    leaves,
                ))));
            }
            tag.pop();
        }
        levels.push(blocks);
        size *= 2;
        level += 1;
    }
    Node { order: idx, levels }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxDecomposition {
    /// Indices into `CanonicalBoxTree::leaves`.
    pub parts: Vec<usize>,
    /// Global point indices inside the box not covered by a part, ascending.
    pub leftover: Vec<usize>,
}

impl BoxDecomposition {
    /// Every point accounted for, parts and leftover together, ascending.
    pub fn covered(&self, tree: &CanonicalBoxTree) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .parts
            .iter()
            .flat_map(|&k| tree.leaves[k].points.iter().copied())
            .chain(self.leftover.iter().copied())
            .collect();
        v.sort_unstable();
        v
    }
}

/// Writes the points of `r` (among the tree's points) as a disjoint union of
/// canonical boxes plus leftover points.
pub fn decompose_box(
    r: &AxisBox,
    tree: &CanonicalBoxTree,
    p: &PointSet,
) -> Result<BoxDecomposition, GeometryError> {
    if p != &tree.points {
        return Err(GeometryError::TreeMismatch);
    }
    if r.lo.len() != p.dim() || r.hi.len() != p.dim() {
        return Err(GeometryError::DimensionMismatch {
            expected: p.dim(),
            got: r.lo.len(),
        });
    }
    let mut parts = Vec::new();
    let mut leftover = Vec::new();
    match &tree.root {
        Some(root) => decompose_node(root, 0, r, p, tree.ell, &mut parts, &mut leftover),
        None => leftover.extend(tree.subset.iter().copied().filter(|&i| r.contains(p.point(i)))),
    }
    leftover.sort_unstable();
    Ok(BoxDecomposition { parts, leftover })
}

fn decompose_node(
    node: &Node,
    axis: usize,
    r: &AxisBox,
    p: &PointSet,
    ell: usize,
    parts: &mut Vec<usize>,
    leftover: &mut Vec<usize>,
) {
    let coord = |i: usize| p.point(i)[axis];
    let a = node.order.partition_point(|&i| coord(i) < r.lo[axis]);
    let b = node.order.partition_point(|&i| coord(i) <= r.hi[axis]);
    let mut pos = a;
    while pos < b {
        let mut chosen = None;
        for (level, blocks) in node.levels.iter().enumerate().rev() {
            let size = ell << level;
            if pos % size == 0 && pos + size <= b && pos / size < blocks.len() {
                chosen = Some((level, size));
                break;
            }
        }
        match chosen {
            Some((level, size)) => {
                match &node.levels[level][pos / size] {
                    Block::Leaf(k) => parts.push(*k),
                    Block::Inner(child) => {
                        decompose_node(child, axis + 1, r, p, ell, parts, leftover)
                    }
                }
                pos += size;
            }
            None => {
                let i = node.order[pos];
                if r.contains(p.point(i)) {
                    leftover.push(i);
                }
                pos += 1;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistinctBox {
    pub bounds: AxisBox,
    pub members: Vec<usize>,
}

/// One box per distinct point set cut out by an axis-parallel box,
/// including the empty set. Refuses more than 32 points, and dimensions
/// above 2 unless the `n^{2d}` sweep fits the same budget.
pub fn enumerate_distinct_boxes(p: &PointSet) -> Result<Vec<DistinctBox>, GeometryError> {
    let n = p.len();
    let d = p.dim();
    let work = (n as f64).powi(2 * d as i32);
    let budget = (MAX_ENUMERATION_POINTS as f64).powi(2 * MAX_ENUMERATION_DIM as i32);
    if n > MAX_ENUMERATION_POINTS || (d > MAX_ENUMERATION_DIM && work > budget) {
        return Err(GeometryError::RefuseTooLarge { n, d });
    }
    let axis_values: Vec<Vec<f64>> = (0..d)
        .map(|k| {
            let mut v: Vec<f64> = p.points().iter().map(|x| x[k]).collect();
            v.sort_by(f64::total_cmp);
            v.dedup();
            v
        })
        .collect();
    let intervals: Vec<Vec<(f64, f64)>> = axis_values
        .iter()
        .map(|vals| {
            let mut out = Vec::new();
            for a in 0..vals.len() {
                for b in a..vals.len() {
                    out.push((vals[a], vals[b]));
                }
            }
            out
        })
        .collect();

    let below: Vec<f64> = (0..d)
        .map(|k| axis_values[k].first().copied().unwrap_or(0.0) - 1.0)
        .collect();
    let mut seen: HashSet<u64> = HashSet::new();
    seen.insert(0);
    let mut out = vec![DistinctBox {
        bounds: AxisBox::new(below.clone(), below),
        members: Vec::new(),
    }];

    let mut current = vec![(0.0, 0.0); d];
    enumerate_rec(p, &intervals, 0, &mut current, &mut seen, &mut out);
    Ok(out)
}

fn enumerate_rec(
    p: &PointSet,
    intervals: &[Vec<(f64, f64)>],
    axis: usize,
    current: &mut Vec<(f64, f64)>,
    seen: &mut HashSet<u64>,
    out: &mut Vec<DistinctBox>,
) {
    if axis == intervals.len() {
        let bounds = AxisBox::new(
            current.iter().map(|x| x.0).collect(),
            current.iter().map(|x| x.1).collect(),
        );
        let members = bounds.members(p);
        let mask = members.iter().fold(0u64, |m, &i| m | (1 << i));
        if seen.insert(mask) {
            out.push(DistinctBox { bounds, members });
        }
        return;
    }
    for &iv in &intervals[axis] {
        current[axis] = iv;
        enumerate_rec(p, intervals, axis + 1, current, seen, out);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(n: usize) -> PointSet {
        PointSet::new(1, (0..n).map(|i| vec![i as f64]).collect()).unwrap()
    }

    #[test]
    fn default_ell_exceeds_small_n() {
        let tree = CanonicalBoxTree::build(&line(8), None);
        assert_eq!(tree.ell(), 16);
        assert!(tree.leaves().is_empty());
    }

    #[test]
    fn dyadic_intervals_with_override() {
        let tree = CanonicalBoxTree::build(&line(8), Some(2));
        let mut sets: Vec<Vec<usize>> = tree.leaves().iter().map(|l| l.points.clone()).collect();
        sets.sort();
        let mut expected = vec![
            vec![0, 1],
            vec![2, 3],
            vec![4, 5],
            vec![6, 7],
            vec![0, 1, 2, 3],
            vec![4, 5, 6, 7],
            (0..8).collect(),
        ];
        expected.sort();
        assert_eq!(sets, expected);
    }

    #[test]
    fn decomposition_of_interior_interval() {
        let p = line(8);
        let tree = CanonicalBoxTree::build(&p, Some(2));
        let r = AxisBox::new(vec![1.0], vec![6.0]);
        let dec = decompose_box(&r, &tree, &p).unwrap();
        let mut parts: Vec<Vec<usize>> = dec.parts.iter().map(|&k| tree.leaves()[k].points.clone()).collect();
        parts.sort();
        assert_eq!(parts, vec![vec![2, 3], vec![4, 5]]);
        assert_eq!(dec.leftover, vec![1, 6]);
    }

    #[test]
    fn empty_box_decomposes_to_nothing() {
        let p = line(8);
        let tree = CanonicalBoxTree::build(&p, Some(2));
        let dec = decompose_box(&AxisBox::new(vec![10.0], vec![11.0]), &tree, &p).unwrap();
        assert!(dec.parts.is_empty() && dec.leftover.is_empty());
    }

    #[test]
    fn small_enumerations() {
        let one = PointSet::new(3, vec![vec![0.5, 0.5, 0.5]]).unwrap();
        assert_eq!(enumerate_distinct_boxes(&one).unwrap().len(), 2);
        let two = line(2);
        let mut sets: Vec<Vec<usize>> = enumerate_distinct_boxes(&two)
            .unwrap()
            .into_iter()
            .map(|b| b.members)
            .collect();
        sets.sort();
        assert_eq!(sets, vec![vec![], vec![0], vec![0, 1], vec![1]]);
        assert!(matches!(
            enumerate_distinct_boxes(&line(33)),
            Err(GeometryError::RefuseTooLarge { .. })
        ));
    }

    #[test]
    fn ties_are_broken_by_index() {
        let p = PointSet::new(1, vec![vec![1.0], vec![0.0], vec![1.0], vec![0.0]]).unwrap();
        let tree = CanonicalBoxTree::build(&p, Some(2));
        let mut sets: Vec<Vec<usize>> = tree.leaves().iter().map(|l| l.points.clone()).collect();
        sets.sort();
        assert_eq!(sets, vec![vec![0, 1, 2, 3], vec![0, 2], vec![1, 3]]);
    }

    #[test]
    fn ceil_log2_values() {
        assert_eq!(
            [1, 2, 3, 4, 5, 64, 65].map(ceil_log2),
            [0, 1, 2, 2, 3, 6, 7]
        );
    }
}
