//! RGB images as three scalar bands with unit spacing.

use std::ops::Range;
use std::path::Path;

use image::{DynamicImage, ImageBuffer, Luma, Rgb};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{GridGeometry, ScalarField};
use crate::io::{atomic_write, encode, write_sidecar, AffineMap};
use crate::operators::{GaussianParams, HeterogeneousOperator};
use crate::solver::{reconstruct, SolveReport, SolverConfig};

/// Red, green and blue bands on one grid. Loaded and synthetic images lie
/// in [0, 1]; reconstructions may leave that range slightly.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbImage {
    bands: [ScalarField; 3],
}

impl RgbImage {
    pub fn new(r: ScalarField, g: ScalarField, b: ScalarField) -> Result<Self> {
        r.geometry().ensure_same(g.geometry(), "image bands")?;
        r.geometry().ensure_same(b.geometry(), "image bands")?;
        Ok(RgbImage { bands: [r, g, b] })
    }

    /// Same field in all three bands.
    pub fn from_gray(field: ScalarField) -> Self {
        RgbImage {
            bands: [field.clone(), field.clone(), field],
        }
    }

    pub fn geometry(&self) -> &GridGeometry {
        self.bands[0].geometry()
    }

    pub fn bands(&self) -> &[ScalarField; 3] {
        &self.bands
    }

    pub fn band(&self, k: usize) -> &ScalarField {
        &self.bands[k]
    }

    pub fn into_bands(self) -> [ScalarField; 3] {
        self.bands
    }

    pub fn min(&self) -> f64 {
        self.bands
            .iter()
            .map(ScalarField::min)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.bands
            .iter()
            .map(ScalarField::max)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_in_unit_range(&self) -> bool {
        self.min() >= 0.0 && self.max() <= 1.0
    }
}

fn image_error(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Image {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

/// Reads an 8- or 16-bit PNG or a binary PPM/PGM, scaled to [0, 1].
pub fn load_image(path: &Path) -> Result<RgbImage> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let img = image::load_from_memory(&bytes).map_err(|e| image_error(path, e))?;
    let geometry = GridGeometry::unit(img.width() as usize, img.height() as usize)?;
    let sixteen = matches!(
        img,
        DynamicImage::ImageLuma16(_)
            | DynamicImage::ImageLumaA16(_)
            | DynamicImage::ImageRgb16(_)
            | DynamicImage::ImageRgba16(_)
    );
    let band = |k: usize| -> ScalarField {
        if sixteen {
            let buf = img.to_rgb16();
            ScalarField::from_index_fn(geometry, |i, j| {
                buf.get_pixel(i as u32, j as u32)[k] as f64 / 65535.0
            })
        } else {
            let buf = img.to_rgb8();
            ScalarField::from_index_fn(geometry, |i, j| {
                buf.get_pixel(i as u32, j as u32)[k] as f64 / 255.0
            })
        }
    };
    RgbImage::new(band(0), band(1), band(2))
}

/// Bit depth of saved images.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BitDepth {
    Eight,
    Sixteen,
}

/// Writes an 8-bit image (format from the extension: png, ppm or pgm).
///
/// With `clip`, values are clamped to [0, 1]. Otherwise one affine map
/// shared by all bands sends the image range onto [0, 1]. The map is written
/// to a `.norm` sidecar and returned.
pub fn save_image(img: &RgbImage, path: &Path, clip: bool) -> Result<AffineMap> {
    save_image_with_depth(img, path, clip, BitDepth::Eight)
}

pub fn save_image_with_depth(
    img: &RgbImage,
    path: &Path,
    clip: bool,
    depth: BitDepth,
) -> Result<AffineMap> {
    let map = if clip {
        AffineMap::IDENTITY
    } else {
        AffineMap::spanning(img.min(), img.max())
    };
    let g = img.geometry();
    let (w, h) = (g.width() as u32, g.height() as u32);
    let max_code: u32 = match depth {
        BitDepth::Eight => 255,
        BitDepth::Sixteen => 65535,
    };
    let code = |k: usize, x: u32, y: u32| -> f64 {
        let v = map.normalize(img.bands[k].get(x as usize, y as usize));
        (v.clamp(0.0, 1.0) * max_code as f64).round()
    };
    let gray = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("pgm"));
    let bytes = match (depth, gray) {
        (BitDepth::Eight, false) => encode(
            &ImageBuffer::from_fn(w, h, |x, y| Rgb([0, 1, 2].map(|k| code(k, x, y) as u8))),
            path,
        )?,
        (BitDepth::Eight, true) => encode(
            &ImageBuffer::from_fn(w, h, |x, y| {
                Luma([((code(0, x, y) + code(1, x, y) + code(2, x, y)) / 3.0).round() as u8])
            }),
            path,
        )?,
        (BitDepth::Sixteen, false) => encode(
            &ImageBuffer::from_fn(w, h, |x, y| Rgb([0, 1, 2].map(|k| code(k, x, y) as u16))),
            path,
        )?,
        (BitDepth::Sixteen, true) => encode(
            &ImageBuffer::from_fn(w, h, |x, y| {
                Luma([((code(0, x, y) + code(1, x, y) + code(2, x, y)) / 3.0).round() as u16])
            }),
            path,
        )?,
    };
    atomic_write(path, &bytes)?;
    write_sidecar(path, if clip { "clip" } else { "rescale" }, &map, max_code)?;
    Ok(map)
}

/// Per-band reconstruction with one shared operator.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbReconstruction {
    pub image: RgbImage,
    pub reports: Vec<SolveReport>,
}

/// Reconstructs the three bands independently and in parallel.
pub fn reconstruct_rgb(
    op: &HeterogeneousOperator,
    img: &RgbImage,
    g: &GaussianParams,
    config: &SolverConfig,
) -> Result<RgbReconstruction> {
    op.geometry()
        .ensure_same(img.geometry(), "image reconstruction")?;
    op.matrix();
    let reports: Vec<SolveReport> = img
        .bands
        .par_iter()
        .map(|band| reconstruct(op, band, g, config))
        .collect::<Result<_>>()?;
    let [r, gr, b] = [0, 1, 2].map(|k| reports[k].solution.clone());
    Ok(RgbReconstruction {
        image: RgbImage::new(r, gr, b)?,
        reports,
    })
}

/// Rows covered by a centred horizontal strip of the given height fraction.
pub fn strip_rows(geometry: &GridGeometry, strip_height_fraction: f64) -> Range<usize> {
    let h = geometry.height();
    let count = ((strip_height_fraction * h as f64).round() as usize).clamp(1, h);
    let start = (h - count) / 2;
    start..start + count
}

/// Horizontal ramp from 0 (left column) to 1 (right column) with a uniform
/// grey strip across the middle.
pub fn make_simultaneous_contrast(
    geometry: &GridGeometry,
    strip_height_fraction: f64,
    strip_gray: f64,
) -> Result<RgbImage> {
    if !(strip_height_fraction > 0.0 && strip_height_fraction < 1.0) {
        return Err(Error::Argument(format!(
            "strip height fraction must lie in (0, 1), got {strip_height_fraction}"
        )));
    }
    if !(0.0..=1.0).contains(&strip_gray) {
        return Err(Error::Argument(format!(
            "strip grey must lie in [0, 1], got {strip_gray}"
        )));
    }
    let rows = strip_rows(geometry, strip_height_fraction);
    let last = (geometry.width() - 1) as f64;
    let field = ScalarField::from_index_fn(*geometry, |i, j| {
        if rows.contains(&j) {
            strip_gray
        } else {
            i as f64 / last
        }
    });
    Ok(RgbImage::from_gray(field))
}

/// Smooth deterministic colour test pattern with values in [0.1, 0.9].
pub fn make_smooth_pattern(geometry: &GridGeometry) -> RgbImage {
    use std::f64::consts::PI;
    let (w, h) = (geometry.width() as f64, geometry.height() as f64);
    let band = |phase: f64, fx: f64, fy: f64| {
        ScalarField::from_index_fn(*geometry, |i, j| {
            let (x, y) = (i as f64 / w, j as f64 / h);
            0.5 + 0.25 * (2.0 * PI * fx * x + phase).cos() * (PI * fy * y).cos()
                + 0.15 * (2.0 * PI * (x + y) * 0.75 + 2.0 * phase).sin()
        })
    };
    RgbImage {
        bands: [
            band(0.0, 1.0, 1.0),
            band(1.0, 1.5, 2.0),
            band(2.0, 0.5, 3.0),
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strip_arithmetic() {
        let g = GridGeometry::unit(10, 99).unwrap();
        assert_eq!(strip_rows(&g, 1.0 / 3.0).len(), 33);
        let img = make_simultaneous_contrast(&g, 1.0 / 3.0, 0.5).unwrap();
        let band = img.band(0);
        for j in strip_rows(&g, 1.0 / 3.0) {
            assert!((0..10).all(|i| band.get(i, j) == 0.5));
        }
        assert_eq!(band.get(0, 0), 0.0);
        assert_eq!(band.get(9, 0), 1.0);
        assert!((1..10).all(|i| band.get(i, 98) > band.get(i - 1, 98)));
        assert!(make_simultaneous_contrast(&g, 1.0, 0.5).is_err());
        assert!(make_simultaneous_contrast(&g, 0.3, 1.5).is_err());
    }

    #[test]
    fn pattern_range() {
        let img = make_smooth_pattern(&GridGeometry::unit(40, 30).unwrap());
        assert!(img.min() >= 0.1 - 1e-12 && img.max() <= 0.9 + 1e-12);
    }
}
