//! Descriptive-proximity groupoid patterns in greyscale images.
//!
//! Pixels are described by quantized probe values. Tiles of an image become
//! groupoids over their description sets, tiles sharing descriptions with a
//! generator tile form a proximal pattern, and two images are classified
//! together when one holds a salient pattern neighbourly with a pattern of
//! the other.
//!
//! - [`feature`]: probes, quantization, description sets
//! - [`proximity`]: spaces, closures, `δ` and `δ_Φ`, axiom validation
//! - [`groupoid`]: total and partial groupoids, regularity, neighbourliness
//! - [`pattern`]: pattern generation, saliency, classification
//! - [`ingest`]: graymap and PNG loading, tiling
//! - [`cli`]: the `proxgroup` command line

pub mod cli;
pub mod error;
pub mod feature;
pub mod groupoid;
pub mod ingest;
pub mod pattern;
pub mod proximity;

pub use error::{Error, Result};
pub use feature::{describe, quantize, DescriptionSet, FeatureVector, ProbeDescriptor, ProbeSet, QuantizedValue};
pub use groupoid::{elements_neighbourly, groupoids_neighbourly, make_groupoid, pseudometric, BinaryOp, Groupoid};
pub use ingest::{load_image, ImageSpace, RasterImage, TileSpec};
pub use pattern::{classify, generate_pattern, patterns_neighbourly, saliency, ClassVerdict, Pattern, SaliencyScore};
pub use proximity::{DescriptiveSpace, Metric, Point, PointId, Region};
