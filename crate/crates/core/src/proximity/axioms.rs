use std::collections::BTreeSet;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{DescriptiveSpace, PointId, Region};
use crate::error::{Error, Result};
use crate::feature::FeatureVector;

/// Largest space for which every subset triple is enumerated.
pub const EXHAUSTIVE_LIMIT: usize = 8;

/// A nearness relation on the subsets of a space. The empty region must be
/// reported far from everything.
pub trait Proximity: Sync {
    fn name(&self) -> &str;
    fn is_near(&self, space: &DescriptiveSpace, a: &Region, b: &Region) -> bool;
}

/// Spatial proximity `δ`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Spatial;

impl Proximity for Spatial {
    fn name(&self) -> &str {
        "spatial"
    }

    fn is_near(&self, space: &DescriptiveSpace, a: &Region, b: &Region) -> bool {
        space.near(a, b).unwrap_or(false)
    }
}

/// Descriptive proximity `δ_Φ`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Descriptive;

impl Proximity for Descriptive {
    fn name(&self) -> &str {
        "descriptive"
    }

    fn is_near(&self, space: &DescriptiveSpace, a: &Region, b: &Region) -> bool {
        space.descriptively_near(a, b).unwrap_or(false)
    }
}

/// Fault injection: wraps a relation and drops every pair whose smallest
/// point id on the left exceeds the one on the right.
#[derive(Debug, Clone, Copy, Default)]
pub struct BrokenSymmetry<P>(pub P);

impl<P: Proximity> Proximity for BrokenSymmetry<P> {
    fn name(&self) -> &str {
        "broken-symmetry"
    }

    fn is_near(&self, space: &DescriptiveSpace, a: &Region, b: &Region) -> bool {
        let first = |r: &Region| r.points().iter().next().copied();
        self.0.is_near(space, a, b) && first(a) <= first(b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxiomSystem {
    Spatial,
    Descriptive,
}

impl AxiomSystem {
    pub fn axioms(self) -> [AxiomId; 5] {
        match self {
            AxiomSystem::Spatial => [AxiomId::P0, AxiomId::P1, AxiomId::P2, AxiomId::P3, AxiomId::P4],
            AxiomSystem::Descriptive => [AxiomId::DP0, AxiomId::DP1, AxiomId::DP2, AxiomId::DP3, AxiomId::DP4],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum AxiomId {
    P0,
    P1,
    P2,
    P3,
    P4,
    #[serde(rename = "dP0")]
    DP0,
    #[serde(rename = "dP1")]
    DP1,
    #[serde(rename = "dP2")]
    DP2,
    #[serde(rename = "dP3")]
    DP3,
    #[serde(rename = "dP4")]
    DP4,
}

impl AxiomId {
    fn index(self) -> usize {
        self as usize % 5
    }
}

impl fmt::Display for AxiomId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            AxiomId::P0 => "P0",
            AxiomId::P1 => "P1",
            AxiomId::P2 => "P2",
            AxiomId::P3 => "P3",
            AxiomId::P4 => "P4",
            AxiomId::DP0 => "dP0",
            AxiomId::DP1 => "dP1",
            AxiomId::DP2 => "dP2",
            AxiomId::DP3 => "dP3",
            AxiomId::DP4 => "dP4",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

/// A triple `(A, B, C)` of point-id lists falsifying an axiom. Axioms with
/// fewer arguments leave the trailing sets empty.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub a: Vec<usize>,
    pub b: Vec<usize>,
    pub c: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomReport {
    pub axiom: AxiomId,
    pub verdict: Verdict,
    /// Number of instances examined.
    pub checked: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    /// Combines reports for the same axiom; the first witness wins.
    pub fn merge(mut self, other: &AxiomReport) -> AxiomReport {
        debug_assert_eq!(self.axiom, other.axiom);
        self.checked += other.checked;
        if self.witness.is_none() && other.witness.is_some() {
            self.witness = other.witness.clone();
            self.verdict = Verdict::Fail;
        }
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sampling {
    /// Every subset triple. Limited to spaces of at most [`EXHAUSTIVE_LIMIT`] points.
    Exhaustive,
    /// `triples` random subset triples drawn from a seeded generator.
    Random { triples: usize, seed: u64 },
    /// Exhaustive up to six points, random beyond.
    Auto { triples: usize, seed: u64 },
}

/// Checks the five axioms of `system` for `relation` over `space`.
///
/// The second axiom compares against the matching notion of intersection:
/// ordinary intersection for the spatial system and descriptive
/// intersection for the descriptive one.
pub fn validate_axioms(
    space: &DescriptiveSpace,
    system: AxiomSystem,
    relation: &dyn Proximity,
    sampling: Sampling,
) -> Result<Vec<AxiomReport>> {
    let mut tally = Tally::new(system);
    match sampling {
        Sampling::Exhaustive => {
            if space.len() > EXHAUSTIVE_LIMIT {
                return Err(Error::InvalidParameter(format!(
                    "exhaustive validation supports at most {EXHAUSTIVE_LIMIT} points, got {}",
                    space.len()
                )));
            }
            exhaustive(space, system, relation, &mut tally);
        }
        Sampling::Random { triples, seed } => sampled(space, system, relation, triples, seed, &mut tally),
        Sampling::Auto { triples, seed } => {
            if space.len() <= 6 {
                exhaustive(space, system, relation, &mut tally);
            } else {
                sampled(space, system, relation, triples, seed, &mut tally);
            }
        }
    }
    Ok(tally.finish())
}

struct Tally {
    system: AxiomSystem,
    checked: [u64; 5],
    witness: [Option<Witness>; 5],
}

impl Tally {
    fn new(system: AxiomSystem) -> Self {
        Tally {
            system,
            checked: [0; 5],
            witness: Default::default(),
        }
    }

    fn record(&mut self, axiom: usize, ok: bool, witness: impl FnOnce() -> Witness) {
        self.checked[axiom] += 1;
        if !ok && self.witness[axiom].is_none() {
            self.witness[axiom] = Some(witness());
        }
    }

    fn finish(self) -> Vec<AxiomReport> {
        self.system
            .axioms()
            .into_iter()
            .map(|axiom| {
                let i = axiom.index();
                let witness = self.witness[i].clone();
                AxiomReport {
                    axiom,
                    verdict: if witness.is_some() {
                        Verdict::Fail
                    } else {
                        Verdict::Pass
                    },
                    checked: self.checked[i],
                    witness,
                }
            })
            .collect()
    }
}

fn ids_of(mask: usize) -> Vec<usize> {
    (0..usize::BITS as usize).filter(|i| mask >> i & 1 == 1).collect()
}

fn mask_region(space: &DescriptiveSpace, mask: usize) -> Region {
    space.region_unchecked(ids_of(mask).into_iter().map(PointId).collect())
}

/// Whether two point sets "intersect" in the sense matching `system`.
fn intersects(space: &DescriptiveSpace, system: AxiomSystem, a: &BTreeSet<PointId>, b: &BTreeSet<PointId>) -> bool {
    match system {
        AxiomSystem::Spatial => !a.is_disjoint(b),
        AxiomSystem::Descriptive => {
            let qa: BTreeSet<&FeatureVector> = a.iter().map(|&p| space.description(p)).collect();
            let qb: BTreeSet<&FeatureVector> = b.iter().map(|&p| space.description(p)).collect();
            a.union(b).any(|&x| {
                let d = space.description(x);
                qa.contains(d) && qb.contains(d)
            })
        }
    }
}

fn exhaustive(space: &DescriptiveSpace, system: AxiomSystem, relation: &dyn Proximity, tally: &mut Tally) {
    let n = space.len();
    let subsets = 1usize << n;
    let regions: Vec<Region> = (0..subsets).map(|m| mask_region(space, m)).collect();
    let mut near = vec![false; subsets * subsets];
    for a in 0..subsets {
        for b in 0..subsets {
            near[a * subsets + b] = relation.is_near(space, &regions[a], &regions[b]);
        }
    }
    let rel = |a: usize, b: usize| near[a * subsets + b];
    let w = |a: usize, b: usize, c: usize| Witness {
        a: ids_of(a),
        b: ids_of(b),
        c: ids_of(c),
    };

    for a in 0..subsets {
        tally.record(0, !rel(0, a) && !rel(a, 0), || w(0, a, 0));
    }
    for a in 0..subsets {
        for b in 0..subsets {
            tally.record(1, rel(a, b) == rel(b, a), || w(a, b, 0));
            let meet = intersects(space, system, regions[a].points(), regions[b].points());
            tally.record(2, !meet || rel(a, b), || w(a, b, 0));
        }
    }
    // every_point_near[b][c]: {x} near C for each x in B.
    let every_point_near: Vec<bool> = (0..subsets * subsets)
        .map(|i| {
            let (b, c) = (i / subsets, i % subsets);
            ids_of(b).into_iter().all(|x| rel(1 << x, c))
        })
        .collect();
    for a in 0..subsets {
        for b in 0..subsets {
            for c in 0..subsets {
                let union = rel(a, b | c) == (rel(a, b) || rel(a, c));
                tally.record(3, union, || w(a, b, c));
                let premise = rel(a, b) && every_point_near[b * subsets + c];
                tally.record(4, !premise || rel(a, c), || w(a, b, c));
            }
        }
    }
}

fn random_subset(rng: &mut ChaCha8Rng, n: usize) -> BTreeSet<PointId> {
    let density: f64 = rng.gen_range(0.1..0.5);
    (0..n).filter(|_| rng.gen_bool(density)).map(PointId).collect()
}

fn sampled(
    space: &DescriptiveSpace,
    system: AxiomSystem,
    relation: &dyn Proximity,
    triples: usize,
    seed: u64,
    tally: &mut Tally,
) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = space.len();
    let empty = space.region_unchecked(BTreeSet::new());
    for _ in 0..triples {
        let a = space.region_unchecked(random_subset(&mut rng, n));
        let b = space.region_unchecked(random_subset(&mut rng, n));
        let c = space.region_unchecked(random_subset(&mut rng, n));
        let rel = |x: &Region, y: &Region| relation.is_near(space, x, y);
        let w = |x: &Region, y: &Region, z: &Region| Witness {
            a: x.point_ids(),
            b: y.point_ids(),
            c: z.point_ids(),
        };

        tally.record(0, !rel(&empty, &a) && !rel(&a, &empty), || w(&empty, &a, &empty));
        let ab = rel(&a, &b);
        tally.record(1, ab == rel(&b, &a), || w(&a, &b, &empty));
        let meet = intersects(space, system, a.points(), b.points());
        tally.record(2, !meet || ab, || w(&a, &b, &empty));

        let bc = space.region_unchecked(b.points().union(c.points()).copied().collect());
        let ac = rel(&a, &c);
        tally.record(3, rel(&a, &bc) == (ab || ac), || w(&a, &b, &c));
        let premise = ab
            && b.points().iter().all(|&x| {
                let single = space.region_unchecked([x].into_iter().collect());
                rel(&single, &c)
            });
        tally.record(4, !premise || ac, || w(&a, &b, &c));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feature::ProbeSet;
    use crate::proximity::{Location, Metric, Point};

    fn space(intensities: &[f64]) -> DescriptiveSpace {
        let points = intensities
            .iter()
            .enumerate()
            .map(|(i, &v)| Point::new(Location::Index(i), vec![v]))
            .collect();
        DescriptiveSpace::new(points, ProbeSet::intensity(2).unwrap(), Metric::Discrete).unwrap()
    }

    #[test]
    fn discrete_space_passes_spatial_axioms() {
        for n in 1..=6 {
            let s = space(&vec![0.5; n]);
            let reports = validate_axioms(&s, AxiomSystem::Spatial, &Spatial, Sampling::Exhaustive).unwrap();
            assert_eq!(reports.len(), 5);
            assert!(reports.iter().all(AxiomReport::passed), "{reports:?}");
        }
    }

    #[test]
    fn descriptive_relation_passes() {
        let s = space(&[0.1, 0.2, 0.1, 0.3, 0.2]);
        let reports = validate_axioms(&s, AxiomSystem::Descriptive, &Descriptive, Sampling::Exhaustive).unwrap();
        assert!(reports.iter().all(AxiomReport::passed), "{reports:?}");
        assert_eq!(reports[3].checked, 32 * 32 * 32);
    }

    #[test]
    fn broken_symmetry_fails_p1_with_witness() {
        let s = space(&[0.1, 0.2, 0.3]);
        let reports =
            validate_axioms(&s, AxiomSystem::Spatial, &BrokenSymmetry(Spatial), Sampling::Exhaustive).unwrap();
        let p1 = &reports[1];
        assert_eq!(p1.axiom, AxiomId::P1);
        assert_eq!(p1.verdict, Verdict::Fail);
        let w = p1.witness.as_ref().unwrap();
        let a = s.region(w.a.iter().copied().map(PointId)).unwrap();
        let b = s.region(w.b.iter().copied().map(PointId)).unwrap();
        let rel = BrokenSymmetry(Spatial);
        assert_ne!(rel.is_near(&s, &a, &b), rel.is_near(&s, &b, &a));
    }

    #[test]
    fn sampled_mode_counts_triples() {
        let s = space(&[0.1, 0.2, 0.3, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7]);
        let reports = validate_axioms(
            &s,
            AxiomSystem::Descriptive,
            &Descriptive,
            Sampling::Random { triples: 300, seed: 7 },
        )
        .unwrap();
        assert!(reports.iter().all(|r| r.passed() && r.checked == 300));
    }

    #[test]
    fn incompatible_pseudometric_fails_dp4() {
        // cl({0}) = {0, 1} with descriptions 0.1 and 0.2.
        let table: std::sync::Arc<[f64]> = vec![
            0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 1.0, 0.0,
        ]
        .into();
        let points = [0.1, 0.2, 0.1, 0.2]
            .iter()
            .enumerate()
            .map(|(i, &v)| Point::new(Location::Index(i), vec![v]))
            .collect();
        let s = DescriptiveSpace::new(points, ProbeSet::intensity(2).unwrap(), Metric::Table(table)).unwrap();
        assert!(!s.descriptions_respect_metric());
        let reports = validate_axioms(&s, AxiomSystem::Descriptive, &Descriptive, Sampling::Exhaustive).unwrap();
        assert_eq!(reports[4].verdict, Verdict::Fail);
        let spatial = validate_axioms(&s, AxiomSystem::Spatial, &Spatial, Sampling::Exhaustive).unwrap();
        assert!(spatial.iter().all(AxiomReport::passed));
    }

    #[test]
    fn exhaustive_limit() {
        let s = space(&[0.1; EXHAUSTIVE_LIMIT + 1]);
        assert!(validate_axioms(&s, AxiomSystem::Spatial, &Spatial, Sampling::Exhaustive).is_err());
        let auto = validate_axioms(
            &s,
            AxiomSystem::Spatial,
            &Spatial,
            Sampling::Auto { triples: 10, seed: 1 },
        )
        .unwrap();
        assert_eq!(auto[0].checked, 10);
    }

    #[test]
    fn report_json() {
        let report = AxiomReport {
            axiom: AxiomId::DP1,
            verdict: Verdict::Fail,
            checked: 3,
            witness: Some(Witness {
                a: vec![1],
                b: vec![0, 1],
                c: vec![],
            }),
        };
        assert_eq!(
            serde_json::to_string(&report).unwrap(),
            r#"{"axiom":"dP1","verdict":"fail","checked":3,"witness":{"a":[1],"b":[0,1],"c":[]}}"#
        );
    }
}
