//! Groupoids over description sets.
//!
//! The carrier of a groupoid is a [`DescriptionSet`]. When the binary
//! operation stays inside the carrier for every pair the groupoid is total;
//! otherwise it is partial and only the pairs whose result lies in the
//! carrier belong to its domain.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::feature::{DescriptionSet, FeatureVector, QuantizedValue};
use crate::proximity::{DescriptiveSpace, Region, RegionId};

pub type OpFn = Arc<dyn Fn(&FeatureVector, &FeatureVector) -> FeatureVector + Send + Sync>;

#[derive(Clone)]
pub enum BinaryOp {
    /// Positionwise minimum of quantized levels.
    Min,
    /// Positionwise maximum of quantized levels.
    Max,
    /// Left projection: `a ∘ b = a`.
    First,
    Custom {
        name: String,
        f: OpFn,
    },
}

impl BinaryOp {
    pub fn custom<F>(name: impl Into<String>, f: F) -> Self
    where
        F: Fn(&FeatureVector, &FeatureVector) -> FeatureVector + Send + Sync + 'static,
    {
        BinaryOp::Custom {
            name: name.into(),
            f: Arc::new(f),
        }
    }

    /// Looks up a named built-in operation.
    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "min" => Some(BinaryOp::Min),
            "max" => Some(BinaryOp::Max),
            "first" => Some(BinaryOp::First),
            _ => None,
        }
    }

    pub fn name(&self) -> &str {
        match self {
            BinaryOp::Min => "min",
            BinaryOp::Max => "max",
            BinaryOp::First => "first",
            BinaryOp::Custom { name, .. } => name,
        }
    }

    pub fn evaluate(&self, a: &FeatureVector, b: &FeatureVector) -> FeatureVector {
        let positionwise = |pick: fn(i64, i64) -> i64| {
            FeatureVector::new(
                a.values()
                    .iter()
                    .zip(b.values())
                    .map(|(x, y)| QuantizedValue {
                        level: pick(x.level, y.level),
                        precision: x.precision,
                    })
                    .collect(),
            )
        };
        match self {
            BinaryOp::Min => positionwise(i64::min),
            BinaryOp::Max => positionwise(i64::max),
            BinaryOp::First => a.clone(),
            BinaryOp::Custom { f, .. } => f(a, b),
        }
    }

    /// True when the result is always one of the operands, which makes the
    /// operation closed on any carrier of vectors of this width.
    fn selects_operand(&self, width: usize) -> bool {
        match self {
            BinaryOp::First => true,
            BinaryOp::Min | BinaryOp::Max => width == 1,
            BinaryOp::Custom { .. } => false,
        }
    }
}

impl fmt::Debug for BinaryOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone)]
pub struct Groupoid {
    elements: Vec<FeatureVector>,
    carrier: DescriptionSet,
    op: BinaryOp,
    /// `None` when total; otherwise the defined pairs as carrier indices.
    domain: Option<BTreeSet<(usize, usize)>>,
}

/// Builds the groupoid `Q(A)(∘)` of a region.
pub fn make_groupoid(space: &DescriptiveSpace, region: &Region, op: BinaryOp) -> Result<Groupoid> {
    Groupoid::new(space.descriptions_of(region)?, op)
}

impl Groupoid {
    pub fn new(carrier: DescriptionSet, op: BinaryOp) -> Result<Self> {
        let elements: Vec<FeatureVector> = carrier.iter().cloned().collect();
        if elements.is_empty() {
            return Err(Error::EmptyRegion);
        }
        let domain = if op.selects_operand(elements[0].len()) {
            None
        } else {
            let n = elements.len();
            let defined: BTreeSet<(usize, usize)> = (0..n)
                .flat_map(|i| (0..n).map(move |j| (i, j)))
                .filter(|&(i, j)| carrier.contains(&op.evaluate(&elements[i], &elements[j])))
                .collect();
            if defined.len() == n * n {
                None
            } else {
                Some(defined)
            }
        };
        Ok(Groupoid {
            elements,
            carrier,
            op,
            domain,
        })
    }

    pub fn carrier(&self) -> &DescriptionSet {
        &self.carrier
    }

    pub fn elements(&self) -> &[FeatureVector] {
        &self.elements
    }

    pub fn op(&self) -> &BinaryOp {
        &self.op
    }

    /// Identity of the region this groupoid was built from.
    pub fn id(&self) -> RegionId {
        self.carrier.source()
    }

    pub fn is_total(&self) -> bool {
        self.domain.is_none()
    }

    /// Defined pairs of a partial groupoid, as carrier elements.
    pub fn domain(&self) -> Option<Vec<(&FeatureVector, &FeatureVector)>> {
        self.domain
            .as_ref()
            .map(|d| d.iter().map(|&(i, j)| (&self.elements[i], &self.elements[j])).collect())
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn index_of(&self, v: &FeatureVector) -> Result<usize> {
        self.elements.binary_search(v).map_err(|_| Error::NotInCarrier)
    }

    pub fn apply(&self, a: &FeatureVector, b: &FeatureVector) -> Result<FeatureVector> {
        let i = self.index_of(a)?;
        let j = self.index_of(b)?;
        if let Some(domain) = &self.domain {
            if !domain.contains(&(i, j)) {
                return Err(Error::UndefinedPair);
            }
        }
        Ok(self.op.evaluate(a, b))
    }

    /// `a` is regular when `(a ∘ y) ∘ a = a` for some `y` in the carrier.
    /// Pairs outside the domain of a partial groupoid are skipped.
    pub fn is_regular_element(&self, a: &FeatureVector) -> Result<bool> {
        self.index_of(a)?;
        Ok(self.elements.iter().any(|y| {
            self.apply(a, y)
                .and_then(|ay| self.apply(&ay, a))
                .is_ok_and(|aya| &aya == a)
        }))
    }

    pub fn regular_count(&self) -> usize {
        self.elements
            .iter()
            .filter(|a| self.is_regular_element(a).unwrap_or(false))
            .count()
    }

    pub fn is_regular_groupoid(&self) -> bool {
        self.elements
            .iter()
            .all(|a| self.is_regular_element(a).unwrap_or(false))
    }

    pub(crate) fn first(&self) -> &FeatureVector {
        &self.elements[0]
    }

    pub fn summary(&self) -> GroupoidSummary {
        GroupoidSummary {
            op: self.op.name().to_string(),
            total: self.is_total(),
            carrier_size: self.len(),
            regular_elements: self.regular_count(),
            carrier: self.elements.iter().map(FeatureVector::levels).collect(),
        }
    }
}

/// JSON view of a groupoid.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GroupoidSummary {
    pub op: String,
    pub total: bool,
    pub carrier_size: usize,
    pub regular_elements: usize,
    pub carrier: Vec<Vec<i64>>,
}

/// Sum of absolute level differences, scaled back to real units.
pub fn pseudometric(a: &FeatureVector, b: &FeatureVector) -> Result<f64> {
    if !a.compatible(b) {
        return Err(Error::ProbeSetMismatch);
    }
    Ok(a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x.level - y.level).abs() as f64 / 10f64.powi(x.precision as i32))
        .sum())
}

pub(crate) fn check_tolerance(tolerance: f64) -> Result<()> {
    if tolerance.is_nan() || tolerance < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be non-negative, got {tolerance}"
        )));
    }
    Ok(())
}

/// Elements are neighbourly when their pseudometric distance is within
/// `tolerance`. A tolerance of zero means matching descriptions.
pub fn elements_neighbourly(a: &FeatureVector, b: &FeatureVector, tolerance: f64) -> Result<bool> {
    check_tolerance(tolerance)?;
    Ok(pseudometric(a, b)? <= tolerance)
}

/// True when some element of `g1` is neighbourly with some element of `g2`.
pub fn groupoids_neighbourly(g1: &Groupoid, g2: &Groupoid, tolerance: f64) -> Result<bool> {
    check_tolerance(tolerance)?;
    if !g1.first().compatible(g2.first()) {
        return Err(Error::ProbeSetMismatch);
    }
    if tolerance == 0.0 {
        let (small, large) = if g1.len() <= g2.len() { (g1, g2) } else { (g2, g1) };
        return Ok(small.elements.iter().any(|v| large.carrier.contains(v)));
    }
    for a in &g1.elements {
        for b in &g2.elements {
            if pseudometric(a, b)? <= tolerance {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fv(levels: &[i64]) -> FeatureVector {
        FeatureVector::from_levels(levels, 2)
    }

    fn groupoid(levels: &[i64], op: BinaryOp) -> Groupoid {
        Groupoid::new(DescriptionSet::from_levels(levels, 2).unwrap(), op).unwrap()
    }

    fn average() -> BinaryOp {
        BinaryOp::custom("average", |a, b| {
            FeatureVector::from_levels(&[(a.levels()[0] + b.levels()[0]) / 2], 2)
        })
    }

    /// A two-element operation given by a lookup table over levels {0, 1}.
    fn table_op(table: [[i64; 2]; 2]) -> BinaryOp {
        BinaryOp::custom("table", move |a, b| {
            fv(&[table[a.levels()[0] as usize][b.levels()[0] as usize]])
        })
    }

    #[test]
    fn make_groupoid_examples() {
        let g = groupoid(&[63, 83], BinaryOp::Min);
        assert!(g.is_total());
        assert!(groupoid(&[50], average()).is_total());

        let partial = groupoid(&[30, 50], average());
        assert!(!partial.is_total());
        assert!(matches!(
            partial.apply(&fv(&[30]), &fv(&[50])),
            Err(Error::UndefinedPair)
        ));
        assert_eq!(partial.apply(&fv(&[30]), &fv(&[30])).unwrap(), fv(&[30]));
        let domain = partial.domain().unwrap();
        assert_eq!(domain.len(), 2);
    }

    #[test]
    fn make_groupoid_from_region() {
        use crate::feature::ProbeSet;
        use crate::proximity::{Location, Metric, Point, PointId};
        let points = [0.63, 0.63, 0.83]
            .iter()
            .enumerate()
            .map(|(i, &v)| Point::new(Location::Index(i), vec![v]))
            .collect();
        let s = DescriptiveSpace::new(points, ProbeSet::intensity(2).unwrap(), Metric::Discrete).unwrap();
        let r = s.region([PointId(0), PointId(1), PointId(2)]).unwrap();
        let g = make_groupoid(&s, &r, BinaryOp::Min).unwrap();
        assert_eq!(g.elements(), &[fv(&[63]), fv(&[83])]);
        assert_eq!(g.id(), r.id());
        let empty = s.region([]).unwrap();
        assert!(matches!(
            make_groupoid(&s, &empty, BinaryOp::Min),
            Err(Error::EmptyRegion)
        ));
    }

    #[test]
    fn apply_examples() {
        let g = groupoid(&[63, 83], BinaryOp::Min);
        assert_eq!(g.apply(&fv(&[63]), &fv(&[83])).unwrap(), fv(&[63]));
        assert_eq!(g.apply(&fv(&[83]), &fv(&[83])).unwrap(), fv(&[83]));
        assert!(matches!(g.apply(&fv(&[10]), &fv(&[83])), Err(Error::NotInCarrier)));

        let first = groupoid(&[10, 20, 30], BinaryOp::First);
        for a in first.elements() {
            for b in first.elements() {
                assert_eq!(&first.apply(a, b).unwrap(), a);
            }
        }
        let max = groupoid(&[63, 83], BinaryOp::Max);
        assert_eq!(max.apply(&fv(&[63]), &fv(&[83])).unwrap(), fv(&[83]));
    }

    #[test]
    fn multi_probe_min_reports_partiality() {
        let carrier = DescriptionSet::from_vectors([fv(&[10, 90]), fv(&[90, 10])], None).unwrap();
        let g = Groupoid::new(carrier, BinaryOp::Min).unwrap();
        assert!(!g.is_total());
        assert!(matches!(
            g.apply(&fv(&[10, 90]), &fv(&[90, 10])),
            Err(Error::UndefinedPair)
        ));

        let lattice =
            DescriptionSet::from_vectors([fv(&[10, 10]), fv(&[10, 90]), fv(&[90, 10]), fv(&[90, 90])], None).unwrap();
        assert!(Groupoid::new(lattice, BinaryOp::Min).unwrap().is_total());
    }

    #[test]
    fn pseudometric_examples() {
        assert_eq!(pseudometric(&fv(&[63]), &fv(&[63])).unwrap(), 0.0);
        assert!((pseudometric(&fv(&[63]), &fv(&[83])).unwrap() - 0.20).abs() < 1e-12);
        assert!(matches!(
            pseudometric(&fv(&[63]), &fv(&[63, 1])),
            Err(Error::ProbeSetMismatch)
        ));
        let other_precision = FeatureVector::from_levels(&[63], 3);
        assert!(pseudometric(&fv(&[63]), &other_precision).is_err());
    }

    #[test]
    fn neighbourly_examples() {
        assert!(elements_neighbourly(&fv(&[63]), &fv(&[63]), 0.0).unwrap());
        assert!(!elements_neighbourly(&fv(&[63]), &fv(&[83]), 0.0).unwrap());
        assert!(elements_neighbourly(&fv(&[63]), &fv(&[64]), 0.01).unwrap());
        assert!(elements_neighbourly(&fv(&[63]), &fv(&[63]), -1.0).is_err());
    }

    #[test]
    fn regularity_examples() {
        let g = groupoid(&[12, 63, 83], BinaryOp::Min);
        assert!(g.elements().iter().all(|a| g.is_regular_element(a).unwrap()));
        assert!(g.is_regular_groupoid());
        assert!(groupoid(&[40], BinaryOp::First).is_regular_groupoid());
        assert!(matches!(g.is_regular_element(&fv(&[1])), Err(Error::NotInCarrier)));

        // Constant map onto 1: (0 ∘ y) ∘ 0 = 1 for every y, so 0 is not regular.
        let constant = groupoid(&[0, 1], table_op([[1, 1], [1, 1]]));
        assert!(constant.is_total());
        assert!(!constant.is_regular_element(&fv(&[0])).unwrap());
        assert!(constant.is_regular_element(&fv(&[1])).unwrap());
        assert!(!constant.is_regular_groupoid());
        assert_eq!(constant.regular_count(), 1);
    }

    #[test]
    fn regular_with_matching_neighbour() {
        // x and y share the description 0.63; with any idempotent op,
        // (x ∘ y) ∘ x = x.
        let g = groupoid(&[63, 70], BinaryOp::custom("right", |_, b| b.clone()));
        assert!(g.is_regular_element(&fv(&[63])).unwrap());
    }

    #[test]
    fn groupoid_neighbourliness() {
        let a = groupoid(&[36, 41, 83], BinaryOp::Min);
        let a2 = groupoid(&[44, 59, 83], BinaryOp::Min);
        let c = groupoid(&[10, 20], BinaryOp::Min);
        assert!(groupoids_neighbourly(&a, &a2, 0.0).unwrap());
        assert!(groupoids_neighbourly(&a, &a, 0.0).unwrap());
        assert!(!groupoids_neighbourly(&a, &c, 0.0).unwrap());
        assert!(groupoids_neighbourly(&a, &c, 0.16).unwrap());

        let wide = Groupoid::new(
            DescriptionSet::from_vectors([fv(&[1, 2])], None).unwrap(),
            BinaryOp::Min,
        )
        .unwrap();
        assert!(matches!(
            groupoids_neighbourly(&a, &wide, 0.0),
            Err(Error::ProbeSetMismatch)
        ));
    }

    #[test]
    fn summary_json() {
        let s = groupoid(&[63, 83], BinaryOp::Min).summary();
        assert_eq!(
            serde_json::to_string(&s).unwrap(),
            r#"{"op":"min","total":true,"carrier_size":2,"regular_elements":2,"carrier":[[63],[83]]}"#
        );
    }

    fn carrier_strategy() -> impl Strategy<Value = Vec<Vec<i64>>> {
        (1usize..4).prop_flat_map(|w| prop::collection::vec(prop::collection::vec(0i64..12, w), 1..24))
    }

    proptest! {
        #[test]
        fn lattice_ops_are_semilattices(carrier in carrier_strategy()) {
            let vs: Vec<FeatureVector> = carrier.iter().map(|l| fv(l)).collect();
            for op in [BinaryOp::Min, BinaryOp::Max] {
                for a in &vs {
                    prop_assert_eq!(&op.evaluate(a, a), a);
                    for b in &vs {
                        prop_assert_eq!(op.evaluate(a, b), op.evaluate(b, a));
                        for c in &vs {
                            prop_assert_eq!(
                                op.evaluate(&op.evaluate(a, b), c),
                                op.evaluate(a, &op.evaluate(b, c))
                            );
                        }
                    }
                }
            }
        }

        #[test]
        fn total_groupoids_are_closed(carrier in carrier_strategy(), use_max in any::<bool>()) {
            let op = if use_max { BinaryOp::Max } else { BinaryOp::Min };
            let set = DescriptionSet::from_vectors(carrier.iter().map(|l| fv(l)), None).unwrap();
            let g = Groupoid::new(set, op).unwrap();
            for a in g.elements() {
                for b in g.elements() {
                    match g.apply(a, b) {
                        Ok(r) => prop_assert!(g.carrier().contains(&r)),
                        Err(Error::UndefinedPair) => prop_assert!(!g.is_total()),
                        Err(e) => prop_assert!(false, "unexpected {e}"),
                    }
                }
            }
        }

        #[test]
        fn pseudometric_axioms(a in prop::collection::vec(-50i64..50, 3),
                               b in prop::collection::vec(-50i64..50, 3),
                               c in prop::collection::vec(-50i64..50, 3)) {
            let (a, b, c) = (fv(&a), fv(&b), fv(&c));
            let d = |x: &FeatureVector, y: &FeatureVector| pseudometric(x, y).unwrap();
            prop_assert!(d(&a, &b) >= 0.0);
            prop_assert_eq!(d(&a, &b), d(&b, &a));
            prop_assert_eq!(d(&a, &a), 0.0);
            prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-12);
            prop_assert_eq!(elements_neighbourly(&a, &b, 0.0).unwrap(), a == b);
        }
    }
}
