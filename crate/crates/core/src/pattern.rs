//! Proximal algebraic patterns, saliency and image classification.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::groupoid::{check_tolerance, elements_neighbourly, groupoids_neighbourly, Groupoid};
use crate::proximity::RegionId;

/// Default saliency threshold.
pub const DEFAULT_THRESHOLD: f64 = 0.75;

/// A generator groupoid together with every candidate neighbourly with it.
#[derive(Debug, Clone)]
pub struct Pattern {
    generator: Groupoid,
    members: Vec<RegionId>,
    tolerance: f64,
}

impl Pattern {
    pub fn generator(&self) -> &Groupoid {
        &self.generator
    }

    /// Member groupoid ids, generator first, then candidates in input order.
    pub fn members(&self) -> &[RegionId] {
        &self.members
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, id: RegionId) -> bool {
        self.members.contains(&id)
    }
}

/// Collects the generator and every candidate groupoid neighbourly with it.
/// A candidate sharing the generator's identity is not listed twice.
pub fn generate_pattern(generator: &Groupoid, candidates: &[Groupoid], tolerance: f64) -> Result<Pattern> {
    check_tolerance(tolerance)?;
    let matches = candidates
        .par_iter()
        .map(|c| {
            if c.id() == generator.id() {
                Ok(false)
            } else {
                groupoids_neighbourly(generator, c, tolerance)
            }
        })
        .collect::<Result<Vec<bool>>>()?;
    let members = std::iter::once(generator.id())
        .chain(candidates.iter().zip(matches).filter_map(|(c, m)| m.then_some(c.id())))
        .collect();
    Ok(Pattern {
        generator: generator.clone(),
        members,
        tolerance,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SaliencyScore {
    /// Candidate elements neighbourly with some reference element.
    pub matched: usize,
    /// Candidate carrier size.
    pub total: usize,
    pub fraction: f64,
    pub salient: bool,
}

fn check_threshold(threshold: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::InvalidParameter(format!(
            "threshold must lie in [0, 1], got {threshold}"
        )));
    }
    Ok(())
}

/// Scores how much of `candidate` is matched by `reference`.
pub fn saliency(reference: &Groupoid, candidate: &Groupoid, threshold: f64, tolerance: f64) -> Result<SaliencyScore> {
    check_threshold(threshold)?;
    check_tolerance(tolerance)?;
    let mut matched = 0;
    for b in candidate.elements() {
        let hit = if tolerance == 0.0 {
            if !b.compatible(&reference.elements()[0]) {
                return Err(Error::ProbeSetMismatch);
            }
            reference.carrier().contains(b)
        } else {
            let mut hit = false;
            for a in reference.elements() {
                if elements_neighbourly(a, b, tolerance)? {
                    hit = true;
                    break;
                }
            }
            hit
        };
        matched += usize::from(hit);
    }
    let total = candidate.len();
    let fraction = matched as f64 / total as f64;
    Ok(SaliencyScore {
        matched,
        total,
        fraction,
        salient: fraction >= threshold,
    })
}

/// Patterns are neighbourly when their generators are.
pub fn patterns_neighbourly(a: &Pattern, b: &Pattern, tolerance: f64) -> Result<bool> {
    groupoids_neighbourly(&a.generator, &b.generator, tolerance)
}

/// The patterns found in one image.
#[derive(Debug, Clone)]
pub struct PatternSet {
    pub image: String,
    pub patterns: Vec<Pattern>,
}

/// Indices of the candidate and reference patterns behind a verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PatternPair {
    pub candidate: usize,
    pub reference: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassVerdict {
    pub image: String,
    /// The reference image when the candidate belongs to its class.
    pub matched: Option<String>,
    pub best: SaliencyScore,
    /// The salient pattern pair when matched.
    pub witness: Option<PatternPair>,
}

impl ClassVerdict {
    pub fn is_match(&self) -> bool {
        self.matched.is_some()
    }
}

/// Decides whether `candidate` belongs to the class of `reference`.
///
/// A candidate pattern qualifies when it is neighbourly with a reference
/// pattern and its generator is salient against that pattern's generator.
/// Among qualifying pairs the highest fraction wins, then the earliest pair
/// in candidate-major order. Without a qualifying pair the verdict reports
/// the best-scoring pair overall.
pub fn classify(
    candidate: &PatternSet,
    reference: &PatternSet,
    threshold: f64,
    tolerance: f64,
) -> Result<ClassVerdict> {
    check_threshold(threshold)?;
    check_tolerance(tolerance)?;
    if candidate.patterns.is_empty() || reference.patterns.is_empty() {
        return Err(Error::NoPatterns);
    }

    // Per candidate pattern: (best qualifying, best overall), in reference order.
    type Best = Option<(usize, SaliencyScore)>;
    let rows = candidate
        .patterns
        .par_iter()
        .map(|cp| {
            let mut qualifying: Best = None;
            let mut overall: Best = None;
            for (j, rp) in reference.patterns.iter().enumerate() {
                let score = saliency(&rp.generator, &cp.generator, threshold, tolerance)?;
                if overall.is_none_or(|(_, s)| score.fraction > s.fraction) {
                    overall = Some((j, score));
                }
                if score.salient
                    && patterns_neighbourly(cp, rp, tolerance)?
                    && qualifying.is_none_or(|(_, s)| score.fraction > s.fraction)
                {
                    qualifying = Some((j, score));
                }
            }
            Ok((qualifying, overall))
        })
        .collect::<Result<Vec<(Best, Best)>>>()?;

    let pick = |select: fn(&(Best, Best)) -> Best| {
        let mut best: Option<(PatternPair, SaliencyScore)> = None;
        for (i, row) in rows.iter().enumerate() {
            if let Some((j, score)) = select(row) {
                if best.is_none_or(|(_, s)| score.fraction > s.fraction) {
                    best = Some((
                        PatternPair {
                            candidate: i,
                            reference: j,
                        },
                        score,
                    ));
                }
            }
        }
        best
    };

    Ok(match pick(|r| r.0) {
        Some((pair, score)) => ClassVerdict {
            image: candidate.image.clone(),
            matched: Some(reference.image.clone()),
            best: score,
            witness: Some(pair),
        },
        None => {
            let (_, score) = pick(|r| r.1).expect("both pattern lists are non-empty");
            ClassVerdict {
                image: candidate.image.clone(),
                matched: None,
                best: score,
                witness: None,
            }
        }
    })
}
