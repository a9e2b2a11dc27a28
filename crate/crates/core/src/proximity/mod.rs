//! Finite spatial and descriptive proximity.
//!
//! A [`DescriptiveSpace`] owns a finite set of points, the probes that
//! describe them and a pseudometric. Regions are subsets of one space.
//! Spatial nearness compares metric closures, descriptive nearness compares
//! the descriptions found in those closures.

mod axioms;

pub use axioms::{
    validate_axioms, AxiomId, AxiomReport, AxiomSystem, BrokenSymmetry, Descriptive, Proximity, Sampling, Spatial,
    Verdict, Witness, EXHAUSTIVE_LIMIT,
};

use std::collections::BTreeSet;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::feature::{describe, DescriptionSet, FeatureVector, ProbeSet};

static NEXT_SPACE: AtomicU64 = AtomicU64::new(1);
static NEXT_REGION: AtomicU64 = AtomicU64::new(1);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct PointId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SpaceId(u64);

/// Process-unique identity of a region, used to refer to groupoids and
/// pattern members.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct RegionId(u64);

impl RegionId {
    pub(crate) fn fresh() -> Self {
        RegionId(NEXT_REGION.fetch_add(1, Ordering::Relaxed))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Location {
    Pixel { row: usize, col: usize },
    Index(usize),
}

/// A located point carrying the raw inputs its probes read.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub id: PointId,
    pub location: Location,
    pub raw: Vec<f64>,
}

impl Point {
    /// The id is assigned when the point is added to a space.
    pub fn new(location: Location, raw: Vec<f64>) -> Self {
        Point {
            id: PointId(usize::MAX),
            location,
            raw,
        }
    }
}

#[derive(Debug, Clone)]
pub enum Metric {
    /// 0 for a point and itself, 1 otherwise.
    Discrete,
    /// Euclidean distance between pixel coordinates, or between indices.
    Euclidean,
    /// Explicit row-major `n x n` distance table.
    Table(Arc<[f64]>),
}

#[derive(Debug, Clone)]
pub struct DescriptiveSpace {
    id: SpaceId,
    points: Vec<Point>,
    probes: ProbeSet,
    metric: Metric,
    descriptions: Vec<FeatureVector>,
}

impl DescriptiveSpace {
    /// Builds a space, renumbering point ids to their position in `points`
    /// and describing every point with `probes`.
    pub fn new(mut points: Vec<Point>, probes: ProbeSet, metric: Metric) -> Result<Self> {
        for (i, p) in points.iter_mut().enumerate() {
            p.id = PointId(i);
        }
        if let Metric::Table(table) = &metric {
            check_table(table, points.len())?;
        }
        let descriptions = points
            .iter()
            .map(|p| describe(p, &probes))
            .collect::<Result<Vec<_>>>()?;
        Ok(DescriptiveSpace {
            id: SpaceId(NEXT_SPACE.fetch_add(1, Ordering::Relaxed)),
            points,
            probes,
            metric,
            descriptions,
        })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn probes(&self) -> &ProbeSet {
        &self.probes
    }

    pub fn metric(&self) -> &Metric {
        &self.metric
    }

    /// True when points at distance zero always share a description.
    ///
    /// Every finite metric space qualifies, since its closures are trivial.
    /// Pseudometrics that identify points with different descriptions make
    /// `δ_Φ` violate (dP4) and break `cl_Φ(A) = { x : {x} δ_Φ A }`.
    pub fn descriptions_respect_metric(&self) -> bool {
        if matches!(self.metric, Metric::Discrete) {
            return true;
        }
        let n = self.points.len();
        (0..n).all(|i| {
            (i + 1..n)
                .all(|j| self.distance(PointId(i), PointId(j)) != 0.0 || self.descriptions[i] == self.descriptions[j])
        })
    }

    pub fn description(&self, p: PointId) -> &FeatureVector {
        &self.descriptions[p.0]
    }

    pub fn region<I: IntoIterator<Item = PointId>>(&self, ids: I) -> Result<Region> {
        let points: BTreeSet<PointId> = ids.into_iter().collect();
        if let Some(bad) = points.iter().find(|p| p.0 >= self.points.len()) {
            return Err(Error::UnknownPoint(bad.0));
        }
        Ok(self.region_unchecked(points))
    }

    pub(crate) fn region_unchecked(&self, points: BTreeSet<PointId>) -> Region {
        Region {
            space: self.id,
            id: RegionId::fresh(),
            points,
        }
    }

    pub fn whole(&self) -> Region {
        self.region_unchecked((0..self.points.len()).map(PointId).collect())
    }

    pub fn singleton(&self, p: PointId) -> Result<Region> {
        self.region([p])
    }

    pub fn distance(&self, a: PointId, b: PointId) -> f64 {
        match &self.metric {
            Metric::Discrete => {
                if a == b {
                    0.0
                } else {
                    1.0
                }
            }
            Metric::Euclidean => {
                let (ra, ca) = coords(&self.points[a.0].location);
                let (rb, cb) = coords(&self.points[b.0].location);
                (ra - rb).hypot(ca - cb)
            }
            Metric::Table(t) => t[a.0 * self.points.len() + b.0],
        }
    }

    fn check(&self, r: &Region) -> Result<()> {
        if r.space != self.id {
            return Err(Error::SpaceMismatch);
        }
        Ok(())
    }

    fn check_non_empty(&self, r: &Region) -> Result<()> {
        self.check(r)?;
        if r.points.is_empty() {
            return Err(Error::EmptyRegion);
        }
        Ok(())
    }

    /// `D(x, A) = min { d(x, a) : a ∈ A }`.
    pub fn point_set_distance(&self, x: PointId, a: &Region) -> Result<f64> {
        self.check_non_empty(a)?;
        if x.0 >= self.points.len() {
            return Err(Error::UnknownPoint(x.0));
        }
        Ok(a.points
            .iter()
            .map(|&p| self.distance(x, p))
            .fold(f64::INFINITY, f64::min))
    }

    /// `cl(A) = { x : D(x, A) = 0 }`.
    pub fn spatial_closure(&self, a: &Region) -> Result<Region> {
        self.check_non_empty(a)?;
        if matches!(self.metric, Metric::Discrete) {
            return Ok(self.region_unchecked(a.points.clone()));
        }
        let points = (0..self.points.len())
            .map(PointId)
            .filter(|&x| a.points.contains(&x) || a.points.iter().any(|&p| self.distance(x, p) == 0.0))
            .collect();
        Ok(self.region_unchecked(points))
    }

    /// `A δ B` iff `cl(A) ∩ cl(B) ≠ ∅`.
    pub fn near(&self, a: &Region, b: &Region) -> Result<bool> {
        let ca = self.spatial_closure(a)?;
        let cb = self.spatial_closure(b)?;
        Ok(!ca.points.is_disjoint(&cb.points))
    }

    /// `Q(A)`: the distinct descriptions of the region's points.
    pub fn descriptions_of(&self, a: &Region) -> Result<DescriptionSet> {
        self.check_non_empty(a)?;
        DescriptionSet::from_vectors(a.points.iter().map(|&p| self.descriptions[p.0].clone()), Some(a.id))
    }

    fn description_refs(&self, a: &Region) -> BTreeSet<&FeatureVector> {
        a.points.iter().map(|&p| &self.descriptions[p.0]).collect()
    }

    /// Points of `A ∪ B` whose description occurs in both `Q(A)` and `Q(B)`.
    pub fn descriptive_intersection(&self, a: &Region, b: &Region) -> Result<Region> {
        self.check_non_empty(a)?;
        self.check_non_empty(b)?;
        let qa = self.description_refs(a);
        let qb = self.description_refs(b);
        let points = a
            .points
            .union(&b.points)
            .copied()
            .filter(|&x| {
                let d = &self.descriptions[x.0];
                qa.contains(d) && qb.contains(d)
            })
            .collect();
        Ok(self.region_unchecked(points))
    }

    /// `A δ_Φ B` iff `cl(A) ∩_Φ cl(B) ≠ ∅`.
    pub fn descriptively_near(&self, a: &Region, b: &Region) -> Result<bool> {
        let ca = self.spatial_closure(a)?;
        let cb = self.spatial_closure(b)?;
        let qa = self.description_refs(&ca);
        Ok(cb.points.iter().any(|&p| qa.contains(&self.descriptions[p.0])))
    }

    /// `cl_Φ(A) = { x ∈ X : Φ(x) ∈ Q(cl(A)) }`.
    pub fn descriptive_closure(&self, a: &Region) -> Result<Region> {
        let ca = self.spatial_closure(a)?;
        let q = self.description_refs(&ca);
        let points = (0..self.points.len())
            .map(PointId)
            .filter(|&x| q.contains(&self.descriptions[x.0]))
            .collect();
        Ok(self.region_unchecked(points))
    }
}

fn coords(loc: &Location) -> (f64, f64) {
    match *loc {
        Location::Pixel { row, col } => (row as f64, col as f64),
        Location::Index(i) => (i as f64, 0.0),
    }
}

fn check_table(t: &[f64], n: usize) -> Result<()> {
    if t.len() != n * n {
        return Err(Error::InvalidMetric(format!(
            "table has {} entries, expected {}",
            t.len(),
            n * n
        )));
    }
    let d = |i: usize, j: usize| t[i * n + j];
    for i in 0..n {
        if d(i, i) != 0.0 {
            return Err(Error::InvalidMetric(format!("d({i},{i}) is not zero")));
        }
        for j in 0..n {
            let v = d(i, j);
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidMetric(format!("d({i},{j}) = {v}")));
            }
            if v != d(j, i) {
                return Err(Error::InvalidMetric(format!("d({i},{j}) != d({j},{i})")));
            }
            for k in 0..n {
                if d(i, k) > d(i, j) + d(j, k) + 1e-12 {
                    return Err(Error::InvalidMetric(format!(
                        "triangle inequality fails for ({i},{j},{k})"
                    )));
                }
            }
        }
    }
    Ok(())
}

/// A subset of the points of one space.
#[derive(Debug, Clone)]
pub struct Region {
    space: SpaceId,
    id: RegionId,
    points: BTreeSet<PointId>,
}

impl Region {
    pub fn id(&self) -> RegionId {
        self.id
    }

    pub fn points(&self) -> &BTreeSet<PointId> {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn contains(&self, p: PointId) -> bool {
        self.points.contains(&p)
    }

    pub fn same_space(&self, other: &Region) -> bool {
        self.space == other.space
    }

    pub fn point_ids(&self) -> Vec<usize> {
        self.points.iter().map(|p| p.0).collect()
    }
}

/// Regions are equal when they hold the same points of the same space.
impl PartialEq for Region {
    fn eq(&self, other: &Self) -> bool {
        self.space == other.space && self.points == other.points
    }
}

impl Eq for Region {}
