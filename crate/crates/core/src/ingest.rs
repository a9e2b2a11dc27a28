//! Image loading, intensity normalization and tiling.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::feature::{FeatureVector, ProbeSet};
use crate::proximity::{DescriptiveSpace, Location, Metric, Point, PointId, Region};

/// Upper bound on decoded pixel count, to reject absurd headers early.
pub const MAX_PIXELS: usize = 1 << 28;

/// ITU-R BT.601 luma weights for R, G and B.
pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

/// A greyscale raster with intensities in `[0, 1]`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterImage {
    width: usize,
    height: usize,
    intensities: Vec<f64>,
}

impl RasterImage {
    pub fn new(width: usize, height: usize, intensities: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Format("image dimensions must be positive".into()));
        }
        if width.checked_mul(height) != Some(intensities.len()) {
            return Err(Error::Format(format!(
                "{} intensities for a {width}x{height} image",
                intensities.len()
            )));
        }
        if let Some(v) = intensities.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Format(format!("intensity {v} outside [0, 1]")));
        }
        Ok(RasterImage {
            width,
            height,
            intensities,
        })
    }

    /// Builds an image from 8-bit grey levels, normalized by 255.
    pub fn from_u8(width: usize, height: usize, levels: &[u8]) -> Result<Self> {
        Self::new(width, height, levels.iter().map(|&v| f64::from(v) / 255.0).collect())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn intensities(&self) -> &[f64] {
        &self.intensities
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.intensities[row * self.width + col]
    }
}

/// Reads an image file. Portable graymaps (P2, P5) and PNG are supported.
pub fn load_image(path: impl AsRef<Path>) -> Result<RasterImage> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    decode_image(&bytes)
}

/// Decodes an in-memory image, choosing the format from its magic bytes.
pub fn decode_image(bytes: &[u8]) -> Result<RasterImage> {
    match bytes {
        [b'P', b'2' | b'5', ..] => decode_pgm(bytes),
        [0x89, b'P', b'N', b'G', ..] => decode_png(bytes),
        _ => Err(Error::Format("unrecognized image format".into())),
    }
}

struct Header<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Header<'a> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&c) = self.data.get(self.pos) {
            if c == b'#' {
                while self.data.get(self.pos).is_some_and(|&c| c != b'\n' && c != b'\r') {
                    self.pos += 1;
                }
            } else if c.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u32> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.data.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        let digits = &self.data[start..self.pos];
        if digits.is_empty() {
            return Err(Error::Format(format!("expected {what}")));
        }
        std::str::from_utf8(digits)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Format(format!("{what} is out of range")))
    }
}

/// Decodes a plain (P2) or raw (P5) portable graymap.
///
/// Samples from maps with `maxval < 256` are divided by 255, wider samples
/// by 65535.
pub fn decode_pgm(bytes: &[u8]) -> Result<RasterImage> {
    let binary = match bytes.get(..2) {
        Some(b"P2") => false,
        Some(b"P5") => true,
        _ => return Err(Error::Format("missing P2/P5 magic".into())),
    };
    let mut h = Header { data: bytes, pos: 2 };
    if !h.data.get(h.pos).is_some_and(|c| c.is_ascii_whitespace() || *c == b'#') {
        return Err(Error::Format("malformed magic number".into()));
    }
    let width = h.number("width")? as usize;
    let height = h.number("height")? as usize;
    let maxval = h.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::Format("image dimensions must be positive".into()));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::Format(format!("maxval {maxval} outside 1..=65535")));
    }
    let pixels = width
        .checked_mul(height)
        .filter(|&n| n <= MAX_PIXELS)
        .ok_or_else(|| Error::Format(format!("{width}x{height} is too large")))?;
    let scale = if maxval < 256 { 255.0 } else { 65535.0 };
    let sample = |v: u32| -> Result<f64> {
        if v > maxval {
            return Err(Error::Format(format!("sample {v} exceeds maxval {maxval}")));
        }
        Ok(f64::from(v) / scale)
    };

    let intensities = if binary {
        if !h.data.get(h.pos).is_some_and(u8::is_ascii_whitespace) {
            return Err(Error::Format("expected whitespace before raster".into()));
        }
        let raster = &bytes[h.pos + 1..];
        let width_bytes = if maxval < 256 { 1 } else { 2 };
        let needed = pixels * width_bytes;
        if raster.len() < needed {
            return Err(Error::Format(format!(
                "raster holds {} bytes, expected {needed}",
                raster.len()
            )));
        }
        raster[..needed]
            .chunks_exact(width_bytes)
            .map(|c| match *c {
                [v] => sample(u32::from(v)),
                [hi, lo] => sample(u32::from(u16::from_be_bytes([hi, lo]))),
                _ => unreachable!(),
            })
            .collect::<Result<Vec<_>>>()?
    } else {
        let mut out = Vec::with_capacity(pixels.min(bytes.len()));
        for _ in 0..pixels {
            out.push(sample(h.number("sample")?)?);
        }
        out
    };
    RasterImage::new(width, height, intensities)
}

fn luma(rgb: [f64; 3]) -> f64 {
    (rgb[0] * LUMA_WEIGHTS[0] + rgb[1] * LUMA_WEIGHTS[1] + rgb[2] * LUMA_WEIGHTS[2]).clamp(0.0, 1.0)
}

fn decode_png(bytes: &[u8]) -> Result<RasterImage> {
    use image::DynamicImage;

    let img = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)
        .map_err(|e| Error::Format(e.to_string()))?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    if w.checked_mul(h).is_none_or(|n| n > MAX_PIXELS) {
        return Err(Error::Format(format!("{w}x{h} is too large")));
    }
    let intensities: Vec<f64> = match &img {
        DynamicImage::ImageLuma8(g) => g.pixels().map(|p| f64::from(p.0[0]) / 255.0).collect(),
        DynamicImage::ImageLumaA8(g) => g.pixels().map(|p| f64::from(p.0[0]) / 255.0).collect(),
        DynamicImage::ImageLuma16(g) => g.pixels().map(|p| f64::from(p.0[0]) / 65535.0).collect(),
        DynamicImage::ImageLumaA16(g) => g.pixels().map(|p| f64::from(p.0[0]) / 65535.0).collect(),
        DynamicImage::ImageRgb8(_) | DynamicImage::ImageRgba8(_) => img
            .to_rgb8()
            .pixels()
            .map(|p| luma(p.0.map(|c| f64::from(c) / 255.0)))
            .collect(),
        _ => img
            .to_rgb16()
            .pixels()
            .map(|p| luma(p.0.map(|c| f64::from(c) / 65535.0)))
            .collect(),
    };
    RasterImage::new(w, h, intensities)
}

/// Encodes 8-bit grey levels as a binary (P5) graymap.
pub fn encode_pgm(width: usize, height: usize, levels: &[u8]) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(levels);
    out
}

/// Width and height written `WxH`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Dims {
    pub width: usize,
    pub height: usize,
}

impl FromStr for Dims {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (w, h) = s
            .split_once(['x', 'X'])
            .ok_or_else(|| Error::Spec(format!("expected WxH, got `{s}`")))?;
        let parse = |v: &str| -> Result<usize> {
            match v.trim().parse::<usize>() {
                Ok(n) if n > 0 => Ok(n),
                _ => Err(Error::Spec(format!("`{v}` is not a positive integer"))),
            }
        };
        Ok(Dims {
            width: parse(w)?,
            height: parse(h)?,
        })
    }
}

impl fmt::Display for Dims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.width, self.height)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TileSpec {
    pub tile_width: usize,
    pub tile_height: usize,
    pub stride_x: usize,
    pub stride_y: usize,
}

impl TileSpec {
    pub fn new(tile: Dims, stride: Dims) -> Self {
        TileSpec {
            tile_width: tile.width,
            tile_height: tile.height,
            stride_x: stride.width,
            stride_y: stride.height,
        }
    }

    /// Non-overlapping tiles of the given size.
    pub fn square(side: usize) -> Self {
        let d = Dims {
            width: side,
            height: side,
        };
        Self::new(d, d)
    }
}

/// Top-left corner and size of a tile window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Window {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

/// Windows at stride offsets in row-major order. Partial windows at the
/// right and bottom edges are dropped.
pub fn tile_windows(width: usize, height: usize, spec: &TileSpec) -> Result<Vec<Window>> {
    if spec.tile_width == 0 || spec.tile_height == 0 || spec.stride_x == 0 || spec.stride_y == 0 {
        return Err(Error::Spec("tile sizes and strides must be positive".into()));
    }
    if spec.tile_width > width || spec.tile_height > height {
        return Err(Error::Spec(format!(
            "{}x{} tile does not fit a {width}x{height} image",
            spec.tile_width, spec.tile_height
        )));
    }
    let mut out = Vec::new();
    for y in (0..=height - spec.tile_height).step_by(spec.stride_y) {
        for x in (0..=width - spec.tile_width).step_by(spec.stride_x) {
            out.push(Window {
                x,
                y,
                width: spec.tile_width,
                height: spec.tile_height,
            });
        }
    }
    Ok(out)
}

/// A tile window together with its pixel region.
#[derive(Debug, Clone)]
pub struct Tile {
    pub index: usize,
    pub window: Window,
    pub region: Region,
}

/// A descriptive space whose points are the pixels of an image.
#[derive(Debug, Clone)]
pub struct ImageSpace {
    width: usize,
    height: usize,
    space: DescriptiveSpace,
}

impl ImageSpace {
    /// Pixel `(row, col)` becomes point `row * width + col`, whose single raw
    /// input is its intensity.
    pub fn new(image: &RasterImage, probes: ProbeSet, metric: Metric) -> Result<Self> {
        let points = image
            .intensities
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                Point::new(
                    Location::Pixel {
                        row: i / image.width,
                        col: i % image.width,
                    },
                    vec![v],
                )
            })
            .collect();
        Ok(ImageSpace {
            width: image.width,
            height: image.height,
            space: DescriptiveSpace::new(points, probes, metric)?,
        })
    }

    pub fn space(&self) -> &DescriptiveSpace {
        &self.space
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn window_region(&self, w: &Window) -> Region {
        let ids = (w.y..w.y + w.height)
            .flat_map(|row| (w.x..w.x + w.width).map(move |col| PointId(row * self.width + col)))
            .collect();
        self.space.region_unchecked(ids)
    }

    pub fn tile(&self, spec: &TileSpec) -> Result<Vec<Tile>> {
        Ok(tile_windows(self.width, self.height, spec)?
            .into_iter()
            .enumerate()
            .map(|(index, window)| Tile {
                index,
                region: self.window_region(&window),
                window,
            })
            .collect())
    }

    pub fn export(&self, tile: &Tile) -> RegionExport {
        let mut counts: BTreeMap<&FeatureVector, usize> = BTreeMap::new();
        for &p in tile.region.points() {
            *counts.entry(self.space.description(p)).or_default() += 1;
        }
        RegionExport {
            index: tile.index,
            x: tile.window.x,
            y: tile.window.y,
            width: tile.window.width,
            height: tile.window.height,
            histogram: counts
                .into_iter()
                .map(|(v, count)| HistogramBin {
                    description: v.levels(),
                    count,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HistogramBin {
    pub description: Vec<i64>,
    pub count: usize,
}

/// JSON view of a tile: origin, size and quantized intensity histogram.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RegionExport {
    pub index: usize,
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
    pub histogram: Vec<HistogramBin>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feature::quantize;
    use proptest::prelude::*;

    #[test]
    fn plain_pgm() {
        let img = decode_pgm(b"P2\n# comment\n2 2\n255\n0 255\n128 64\n").unwrap();
        let expected = [0.0, 1.0, 128.0 / 255.0, 64.0 / 255.0];
        assert_eq!(img.intensities(), &expected);
        assert_eq!(quantize(img.get(1, 0), 3).unwrap().level, 502);
        assert_eq!(quantize(img.get(1, 1), 3).unwrap().level, 251);
    }

    #[test]
    fn raw_pgm() {
        let img = decode_pgm(&encode_pgm(3, 1, &[0, 211, 255])).unwrap();
        assert_eq!((img.width(), img.height()), (3, 1));
        assert_eq!(quantize(img.get(0, 1), 2).unwrap().level, 83);

        let sixteen = [b"P5 1 1 65535\n".as_slice(), &[0xff, 0xff]].concat();
        assert_eq!(decode_pgm(&sixteen).unwrap().intensities(), &[1.0]);
    }

    #[test]
    fn all_zero_image() {
        let img = decode_pgm(&encode_pgm(4, 4, &[0; 16])).unwrap();
        assert!(img.intensities().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn malformed_pgm() {
        for bad in [
            b"P3\n1 1\n255\n0".as_slice(),
            b"P2\n",
            b"P2\n0 1\n255\n",
            b"P2\n1 1\n0\n0",
            b"P2\n1 1\n255\n256",
            b"P2\n2 1\n255\n1",
            b"P5\n2 2\n255\n\x00",
            b"P5\n99999999 99999999\n255\n",
            b"P2\n1 1\n99999999999\n1",
            b"P21 1 255 0",
        ] {
            assert!(matches!(decode_pgm(bad), Err(Error::Format(_))), "{bad:?}");
        }
        assert!(matches!(decode_image(b"GIF89a"), Err(Error::Format(_))));
    }

    #[test]
    fn png_uses_bt601_luma() {
        use image::{ImageBuffer, Rgb};
        let buf: ImageBuffer<Rgb<u8>, Vec<u8>> =
            ImageBuffer::from_fn(2, 1, |x, _| if x == 0 { Rgb([255, 0, 0]) } else { Rgb([10, 200, 30]) });
        let mut bytes = Vec::new();
        buf.write_to(&mut std::io::Cursor::new(&mut bytes), image::ImageFormat::Png)
            .unwrap();
        let img = decode_image(&bytes).unwrap();
        assert!((img.get(0, 0) - 0.299).abs() < 1e-12);
        let expected = (0.299 * 10.0 + 0.587 * 200.0 + 0.114 * 30.0) / 255.0;
        assert!((img.get(0, 1) - expected).abs() < 1e-12);
    }

    #[test]
    fn load_missing_file() {
        assert!(matches!(load_image("/nonexistent/x.pgm"), Err(Error::Io { .. })));
    }

    #[test]
    fn load_is_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.pgm");
        std::fs::write(&path, encode_pgm(2, 2, &[1, 2, 3, 4])).unwrap();
        let a = load_image(&path).unwrap();
        let b = load_image(&path).unwrap();
        let bits = |i: &RasterImage| i.intensities().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
    }

    #[test]
    fn dims_parse() {
        assert_eq!("8x4".parse::<Dims>().unwrap(), Dims { width: 8, height: 4 });
        for bad in ["8", "0x4", "ax4", "4x", "-1x2"] {
            assert!(bad.parse::<Dims>().is_err(), "{bad}");
        }
    }

    #[test]
    fn tiling_examples() {
        assert_eq!(tile_windows(4, 4, &TileSpec::square(2)).unwrap().len(), 4);
        let five = tile_windows(5, 5, &TileSpec::square(2)).unwrap();
        assert_eq!(
            five.iter().map(|w| (w.x, w.y)).collect::<Vec<_>>(),
            vec![(0, 0), (2, 0), (0, 2), (2, 2)]
        );
        let spec = TileSpec::new(Dims { width: 3, height: 3 }, Dims { width: 1, height: 1 });
        assert_eq!(tile_windows(3, 3, &spec).unwrap().len(), 1);
        assert!(matches!(tile_windows(2, 2, &TileSpec::square(3)), Err(Error::Spec(_))));
    }

    #[test]
    fn tiles_carry_pixels_and_histograms() {
        let img = RasterImage::from_u8(4, 2, &[0, 0, 10, 20, 0, 255, 30, 40]).unwrap();
        let space = ImageSpace::new(&img, ProbeSet::intensity(2).unwrap(), Metric::Discrete).unwrap();
        let tiles = space.tile(&TileSpec::square(2)).unwrap();
        assert_eq!(tiles.len(), 2);
        assert_eq!(tiles[1].region.point_ids(), vec![2, 3, 6, 7]);
        let export = space.export(&tiles[0]);
        assert_eq!(
            export.histogram,
            vec![
                HistogramBin {
                    description: vec![0],
                    count: 3
                },
                HistogramBin {
                    description: vec![100],
                    count: 1
                },
            ]
        );
    }

    proptest! {
        #[test]
        fn tile_count_formula(w in 1usize..40, h in 1usize..40, tw in 1usize..10, th in 1usize..10,
                              sx in 1usize..6, sy in 1usize..6) {
            let spec = TileSpec { tile_width: tw, tile_height: th, stride_x: sx, stride_y: sy };
            match tile_windows(w, h, &spec) {
                Ok(ws) => {
                    prop_assert_eq!(ws.len(), ((w - tw) / sx + 1) * ((h - th) / sy + 1));
                    for win in ws {
                        prop_assert!(win.x + win.width <= w && win.y + win.height <= h);
                    }
                }
                Err(_) => prop_assert!(tw > w || th > h),
            }
        }

        #[test]
        fn raw_pgm_round_trip(w in 1usize..12, h in 1usize..12, seed in any::<u64>()) {
            let levels: Vec<u8> = (0..w * h).map(|i| (seed.wrapping_mul(i as u64 + 7) >> 13) as u8).collect();
            let img = decode_pgm(&encode_pgm(w, h, &levels)).unwrap();
            prop_assert_eq!(img, RasterImage::from_u8(w, h, &levels).unwrap());
        }
    }
}
