//! Probe functions, quantized feature vectors and description sets.
//!
//! A probe maps a point to a real number. Every probe carries a decimal
//! precision, and its output is stored as the integer `round(v * 10^p)`, so
//! two descriptions match exactly when their integer levels are equal.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::proximity::{Point, RegionId};

/// Largest supported number of decimal places.
pub const MAX_PRECISION: u32 = 15;

/// A real value rounded to a fixed number of decimal places.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct QuantizedValue {
    pub level: i64,
    pub precision: u32,
}

impl QuantizedValue {
    /// The decimal value represented by this level.
    pub fn value(&self) -> f64 {
        self.level as f64 / 10f64.powi(self.precision as i32)
    }
}

impl fmt::Display for QuantizedValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.*}", self.precision as usize, self.value())
    }
}

/// Rounds `raw` to `precision` decimal places, half away from zero.
///
/// Rounding is carried out on the shortest decimal representation of `raw`
/// rather than on `raw * 10^precision`, so `0.835` rounds to level 84 even
/// though the nearest double lies just below it.
pub fn quantize(raw: f64, precision: u32) -> Result<QuantizedValue> {
    if !raw.is_finite() {
        return Err(Error::InvalidValue(format!("{raw} is not finite")));
    }
    if precision > MAX_PRECISION {
        return Err(Error::InvalidValue(format!(
            "precision {precision} exceeds {MAX_PRECISION}"
        )));
    }
    let text = format!("{}", raw.abs());
    let (int_part, frac_part) = text.split_once('.').unwrap_or((&text, ""));
    let frac = frac_part.as_bytes();

    let overflow = || Error::InvalidValue(format!("{raw} does not fit at precision {precision}"));
    let mut level: i64 = 0;
    let digits = int_part
        .bytes()
        .chain((0..precision as usize).map(|i| frac.get(i).copied().unwrap_or(b'0')));
    for d in digits {
        level = level
            .checked_mul(10)
            .and_then(|l| l.checked_add(i64::from(d - b'0')))
            .ok_or_else(overflow)?;
    }
    if frac.get(precision as usize).is_some_and(|&d| d >= b'5') {
        level = level.checked_add(1).ok_or_else(overflow)?;
    }
    if raw < 0.0 {
        level = -level;
    }
    Ok(QuantizedValue { level, precision })
}

/// A scalar feature extractor over a point's raw inputs.
pub type ScalarMap = Arc<dyn Fn(&[f64]) -> Option<f64> + Send + Sync>;

#[derive(Clone)]
pub enum ProbeKind {
    /// Greyscale intensity: the first raw input of the point.
    Intensity,
    /// Any user supplied map from raw inputs to a real value.
    Scalar(ScalarMap),
}

impl fmt::Debug for ProbeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProbeKind::Intensity => f.write_str("Intensity"),
            ProbeKind::Scalar(_) => f.write_str("Scalar(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ProbeDescriptor {
    pub id: String,
    pub kind: ProbeKind,
    pub precision: u32,
}

impl ProbeDescriptor {
    pub fn intensity(precision: u32) -> Self {
        ProbeDescriptor {
            id: "intensity".to_string(),
            kind: ProbeKind::Intensity,
            precision,
        }
    }

    pub fn scalar<F>(id: impl Into<String>, precision: u32, f: F) -> Self
    where
        F: Fn(&[f64]) -> Option<f64> + Send + Sync + 'static,
    {
        ProbeDescriptor {
            id: id.into(),
            kind: ProbeKind::Scalar(Arc::new(f)),
            precision,
        }
    }

    /// Raw (unquantized) probe value at `point`.
    pub fn evaluate(&self, point: &Point) -> Option<f64> {
        match &self.kind {
            ProbeKind::Intensity => point.raw.first().copied(),
            ProbeKind::Scalar(f) => f(&point.raw),
        }
    }
}

/// An ordered, non-empty set of probes with unique ids.
#[derive(Debug, Clone)]
pub struct ProbeSet {
    probes: Vec<ProbeDescriptor>,
}

impl ProbeSet {
    pub fn new(probes: Vec<ProbeDescriptor>) -> Result<Self> {
        if probes.is_empty() {
            return Err(Error::InvalidProbeSet("a probe set needs at least one probe".into()));
        }
        let mut seen = BTreeSet::new();
        for p in &probes {
            if !seen.insert(p.id.as_str()) {
                return Err(Error::InvalidProbeSet(format!("duplicate probe id `{}`", p.id)));
            }
            if p.precision > MAX_PRECISION {
                return Err(Error::InvalidProbeSet(format!(
                    "probe `{}` precision {} exceeds {MAX_PRECISION}",
                    p.id, p.precision
                )));
            }
        }
        Ok(ProbeSet { probes })
    }

    /// The single greyscale intensity probe.
    pub fn intensity(precision: u32) -> Result<Self> {
        Self::new(vec![ProbeDescriptor::intensity(precision)])
    }

    pub fn probes(&self) -> &[ProbeDescriptor] {
        &self.probes
    }

    pub fn len(&self) -> usize {
        self.probes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// The quantized description `Φ(x)` of a point, one value per probe.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FeatureVector(Vec<QuantizedValue>);

impl FeatureVector {
    pub fn new(values: Vec<QuantizedValue>) -> Self {
        FeatureVector(values)
    }

    /// Builds a vector whose every position shares `precision`.
    pub fn from_levels(levels: &[i64], precision: u32) -> Self {
        FeatureVector(
            levels
                .iter()
                .map(|&level| QuantizedValue { level, precision })
                .collect(),
        )
    }

    pub fn values(&self) -> &[QuantizedValue] {
        &self.0
    }

    pub fn levels(&self) -> Vec<i64> {
        self.0.iter().map(|q| q.level).collect()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// True when both vectors come from probe sets of the same shape.
    pub fn compatible(&self, other: &FeatureVector) -> bool {
        self.0.len() == other.0.len() && self.0.iter().zip(&other.0).all(|(a, b)| a.precision == b.precision)
    }
}

impl Serialize for FeatureVector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.0.iter().map(|q| q.level))
    }
}

impl fmt::Display for FeatureVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, q) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{q}")?;
        }
        f.write_str(")")
    }
}

/// Unquantized probe values at a point, for tolerance comparisons on raw data.
pub fn describe_raw(point: &Point, probes: &ProbeSet) -> Result<Vec<f64>> {
    probes
        .probes()
        .iter()
        .map(|p| {
            p.evaluate(point).ok_or_else(|| Error::ProbeDomain {
                probe: p.id.clone(),
                point: point.id.0,
            })
        })
        .collect()
}

/// True when the summed absolute difference of two raw descriptions is at
/// most `epsilon`.
pub fn raw_within(a: &[f64], b: &[f64], epsilon: f64) -> Result<bool> {
    if a.len() != b.len() {
        return Err(Error::ProbeSetMismatch);
    }
    let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum();
    Ok(d <= epsilon)
}

pub fn describe(point: &Point, probes: &ProbeSet) -> Result<FeatureVector> {
    probes
        .probes()
        .iter()
        .map(|p| {
            let raw = p.evaluate(point).ok_or_else(|| Error::ProbeDomain {
                probe: p.id.clone(),
                point: point.id.0,
            })?;
            quantize(raw, p.precision)
        })
        .collect::<Result<Vec<_>>>()
        .map(FeatureVector)
}

/// The set `Q(A)` of distinct descriptions of a region's points.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DescriptionSet {
    entries: BTreeSet<FeatureVector>,
    source: RegionId,
}

impl DescriptionSet {
    /// Builds a description set directly from vectors. Fails when empty or
    /// when the vectors have differing shapes. Without a source region a
    /// fresh identity is minted.
    pub fn from_vectors<I>(vectors: I, source: Option<RegionId>) -> Result<Self>
    where
        I: IntoIterator<Item = FeatureVector>,
    {
        let entries: BTreeSet<FeatureVector> = vectors.into_iter().collect();
        let first = entries.iter().next().ok_or(Error::EmptyRegion)?;
        if entries.iter().any(|v| !v.compatible(first)) {
            return Err(Error::ProbeSetMismatch);
        }
        Ok(DescriptionSet {
            entries,
            source: source.unwrap_or_else(RegionId::fresh),
        })
    }

    /// Single-probe convenience constructor.
    pub fn from_levels(levels: &[i64], precision: u32) -> Result<Self> {
        Self::from_vectors(
            levels.iter().map(|&l| FeatureVector::from_levels(&[l], precision)),
            None,
        )
    }

    pub fn entries(&self) -> &BTreeSet<FeatureVector> {
        &self.entries
    }

    pub fn source(&self) -> RegionId {
        self.source
    }

    pub fn contains(&self, v: &FeatureVector) -> bool {
        self.entries.contains(v)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &FeatureVector> {
        self.entries.iter()
    }
}
