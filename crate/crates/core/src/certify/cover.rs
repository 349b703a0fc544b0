//! Exact minimum set cover over a direction pool.

use crate::bodies::SymBody;
use crate::directions::{Direction, DirectionLabel, DirectionSet};
use crate::error::{Error, Result};
use crate::rational::{fmt_q, Q};
use crate::subdiff::PlPoint;

use super::certify_directions;
use super::vertices::{enumerate_vertices, DEFAULT_VERTEX_CAP};
use super::IlluminationCertificate;

/// Size guard for the vertex × pool incidence computation.
pub const MAX_INCIDENCES: usize = 1_000_000;

/// Incidence structure: `covers[d]` lists the points direction `d` illuminates.
#[derive(Debug, Clone)]
pub struct CoverInstance {
    pub points: usize,
    pub covers: Vec<Vec<usize>>,
}

impl CoverInstance {
    pub fn build(body: &SymBody, points: &[Vec<Q>], pool: &[Direction]) -> Result<Self> {
        let ctx = points.iter().map(|x| PlPoint::new(body, x)).collect::<Result<Vec<_>>>()?;
        let covers = pool
            .iter()
            .map(|y| {
                ctx.iter()
                    .enumerate()
                    .filter(|(_, p)| p.derivative(body, y) < Q::from_integer(0.into()))
                    .map(|(i, _)| i)
                    .collect()
            })
            .collect();
        Ok(Self { points: points.len(), covers })
    }

    /// [`CoverInstance::build`] refusing instances above [`MAX_INCIDENCES`].
    pub fn build_capped(body: &SymBody, points: &[Vec<Q>], pool: &[Direction]) -> Result<Self> {
        if points.len().saturating_mul(pool.len()) > MAX_INCIDENCES {
            return Err(Error::CapExceeded(format!(
                "{} points x {} pool directions > {MAX_INCIDENCES}",
                points.len(),
                pool.len()
            )));
        }
        Self::build(body, points, pool)
    }

    /// First point no set covers, if any.
    pub fn uncoverable(&self) -> Option<usize> {
        let mut hit = vec![false; self.points];
        for c in &self.covers {
            for &i in c {
                hit[i] = true;
            }
        }
        hit.iter().position(|h| !h)
    }

    /// Greedy cover followed by removal of redundant sets. Deterministic:
    /// ties go to the lowest index.
    pub fn greedy(&self) -> Option<Vec<usize>> {
        if self.uncoverable().is_some() {
            return None;
        }
        let mut covered = vec![false; self.points];
        let mut left = self.points;
        let mut chosen = Vec::new();
        while left > 0 {
            let (best, gain) = self
                .covers
                .iter()
                .enumerate()
                .map(|(d, c)| (d, c.iter().filter(|&&i| !covered[i]).count()))
                .fold((0, 0), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
            debug_assert!(gain > 0);
            for &i in &self.covers[best] {
                if !covered[i] {
                    covered[i] = true;
                    left -= 1;
                }
            }
            chosen.push(best);
        }
        // drop sets whose points are all covered by the others
        let mut count = vec![0usize; self.points];
        for &d in &chosen {
            for &i in &self.covers[d] {
                count[i] += 1;
            }
        }
        let mut keep = Vec::new();
        for &d in chosen.iter().rev() {
            if self.covers[d].iter().all(|&i| count[i] > 1) {
                for &i in &self.covers[d] {
                    count[i] -= 1;
                }
            } else {
                keep.push(d);
            }
        }
        keep.sort_unstable();
        Some(keep)
    }

    /// Exact minimum cover by branch and bound.
    pub fn minimum(&self) -> Option<Vec<usize>> {
        let mut best = self.greedy()?;
        let by_point: Vec<Vec<usize>> = {
            let mut v = vec![Vec::new(); self.points];
            for (d, c) in self.covers.iter().enumerate() {
                for &i in c {
                    v[i].push(d);
                }
            }
            // larger sets first
            for list in &mut v {
                list.sort_by_key(|&d| std::cmp::Reverse(self.covers[d].len()));
            }
            v
        };
        let max_set = self.covers.iter().map(Vec::len).max().unwrap_or(1).max(1);
        let mut counts = vec![0usize; self.points];
        let mut stack = Vec::new();
        self.branch(&by_point, max_set, &mut counts, self.points, &mut stack, &mut best);
        best.sort_unstable();
        Some(best)
    }

    fn branch(
        &self,
        by_point: &[Vec<usize>],
        max_set: usize,
        counts: &mut [usize],
        left: usize,
        stack: &mut Vec<usize>,
        best: &mut Vec<usize>,
    ) {
        if left == 0 {
            if stack.len() < best.len() {
                *best = stack.clone();
            }
            return;
        }
        if stack.len() + left.div_ceil(max_set) >= best.len() {
            return;
        }
        // disjoint-candidates lower bound
        let mut blocked = vec![false; self.covers.len()];
        let mut packing = 0;
        for i in 0..self.points {
            if counts[i] == 0 && by_point[i].iter().all(|&d| !blocked[d]) {
                packing += 1;
                for &d in &by_point[i] {
                    blocked[d] = true;
                }
            }
        }
        if stack.len() + packing >= best.len() {
            return;
        }
        let pivot = (0..self.points).filter(|&i| counts[i] == 0).min_by_key(|&i| by_point[i].len()).expect("left > 0");
        for &d in &by_point[pivot] {
            let mut newly = 0;
            for &i in &self.covers[d] {
                if counts[i] == 0 {
                    newly += 1;
                }
                counts[i] += 1;
            }
            stack.push(d);
            self.branch(by_point, max_set, counts, left - newly, stack, best);
            stack.pop();
            for &i in &self.covers[d] {
                counts[i] -= 1;
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct MinIllumination {
    pub size: usize,
    pub subset: DirectionSet,
    pub certificate: IlluminationCertificate,
}

/// Smallest subset of `pool` illuminating every vertex; an upper bound on
/// the illumination number restricted to that pool.
pub fn min_illumination_search(body: &SymBody, pool: &DirectionSet) -> Result<MinIllumination> {
    if pool.is_empty() {
        return Err(Error::EmptyDirections);
    }
    let vertices = enumerate_vertices(body, DEFAULT_VERTEX_CAP)?;
    if body.dim() > 4 && vertices.len().saturating_mul(pool.len()) > MAX_INCIDENCES {
        return Err(Error::CapExceeded(format!(
            "{} vertices x {} pool directions > {MAX_INCIDENCES}",
            vertices.len(),
            pool.len()
        )));
    }
    let inst = CoverInstance::build(body, &vertices, pool.vectors())?;
    if let Some(i) = inst.uncoverable() {
        let v: Vec<String> = vertices[i].iter().map(fmt_q).collect();
        return Err(Error::Uncoverable(format!("({})", v.join(", "))));
    }
    let chosen = inst.minimum().expect("coverable");
    let subset = DirectionSet::new(
        DirectionLabel::Custom,
        body.dim(),
        chosen.iter().map(|&d| pool.vectors()[d].clone()).collect(),
    )?;
    let certificate = certify_directions(body, &subset, Some(&vertices))?;
    Ok(MinIllumination { size: subset.len(), subset, certificate })
}
