//! Text and image exports with atomic writes.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use image::{ImageBuffer, Luma, Rgb};

use crate::error::{Error, Result};
use crate::green::LevelLine;
use crate::grid::{GridGeometry, ScalarField};
use crate::orientation::OrientationMap;

/// Writes `bytes` to a temporary file next to `path`, then renames it over `path`.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| Error::io(path, std::io::Error::other("path has no file name")))?;
    let tmp = path.with_file_name(format!(
        ".{}.tmp-{}",
        name.to_string_lossy(),
        std::process::id()
    ));
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

/// `value = offset + scale · normalized`, where `normalized ∈ [0, 1]` is the
/// stored pixel divided by its maximum code.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineMap {
    pub offset: f64,
    pub scale: f64,
}

impl AffineMap {
    pub const IDENTITY: AffineMap = AffineMap {
        offset: 0.0,
        scale: 1.0,
    };

    /// Maps `[lo, hi]` onto `[0, 1]`; a flat range maps everything to 0.
    pub fn spanning(lo: f64, hi: f64) -> Self {
        AffineMap {
            offset: lo,
            scale: if hi > lo { hi - lo } else { 0.0 },
        }
    }

    pub fn normalize(&self, value: f64) -> f64 {
        if self.scale == 0.0 {
            0.0
        } else {
            (value - self.offset) / self.scale
        }
    }

    pub fn restore(&self, normalized: f64) -> f64 {
        self.offset + self.scale * normalized
    }
}

/// Path of the normalization sidecar written next to an image.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".norm");
    PathBuf::from(s)
}

pub(crate) fn write_sidecar(path: &Path, mode: &str, map: &AffineMap, max_code: u32) -> Result<()> {
    let text = format!(
        "mode = \"{mode}\"\nmax_code = {max_code}\noffset = {:?}\nscale = {:?}\n",
        map.offset, map.scale
    );
    atomic_write(&sidecar_path(path), text.as_bytes())
}

/// Reads a sidecar written by this module.
pub fn read_sidecar(path: &Path) -> Result<AffineMap> {
    let p = sidecar_path(path);
    let text = fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
    let table: toml::Table = text
        .parse()
        .map_err(|e| Error::Parse(format!("{}: {e}", p.display())))?;
    let num = |key: &str| {
        table
            .get(key)
            .and_then(|v| v.as_float().or_else(|| v.as_integer().map(|i| i as f64)))
            .ok_or_else(|| Error::Parse(format!("{}: missing `{key}`", p.display())))
    };
    Ok(AffineMap {
        offset: num("offset")?,
        scale: num("scale")?,
    })
}

/// One grid row per line, comma separated, shortest round-trip decimals.
pub fn field_to_csv(field: &ScalarField) -> String {
    let g = field.geometry();
    let mut s = String::with_capacity(g.len() * 20);
    for j in 0..g.height() {
        for i in 0..g.width() {
            if i > 0 {
                s.push(',');
            }
            let _ = write!(s, "{:?}", field.get(i, j));
        }
        s.push('\n');
    }
    s
}

pub fn field_from_csv(text: &str, spacing: f64) -> Result<ScalarField> {
    let rows: Vec<Vec<f64>> = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(n, line)| {
            line.split(',')
                .map(|t| {
                    t.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Parse(format!("line {}: {e}", n + 1)))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let width = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != width) {
        return Err(Error::Parse("rows have different lengths".into()));
    }
    let g = GridGeometry::new(width, rows.len(), spacing)?;
    ScalarField::from_values(g, rows.into_iter().flatten().collect())
}

pub fn write_field_csv(field: &ScalarField, path: &Path) -> Result<()> {
    atomic_write(path, field_to_csv(field).as_bytes())
}

pub fn read_field_csv(path: &Path, spacing: f64) -> Result<ScalarField> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    field_from_csv(&text, spacing)
}

fn encode_png<P, C>(buffer: &ImageBuffer<P, C>, path: &Path) -> Result<Vec<u8>>
where
    P: image::PixelWithColorType,
    [P::Subpixel]: image::EncodableLayout,
    C: std::ops::Deref<Target = [P::Subpixel]>,
{
    let mut bytes = std::io::Cursor::new(Vec::new());
    buffer
        .write_to(&mut bytes, image::ImageFormat::Png)
        .map_err(|e| Error::Image {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
    Ok(bytes.into_inner())
}

pub(crate) fn encode<P, C>(buffer: &ImageBuffer<P, C>, path: &Path) -> Result<Vec<u8>>
where
    P: image::PixelWithColorType,
    [P::Subpixel]: image::EncodableLayout,
    C: std::ops::Deref<Target = [P::Subpixel]>,
{
    let format = image::ImageFormat::from_path(path).map_err(|e| Error::Image {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    if format == image::ImageFormat::Png {
        return encode_png(buffer, path);
    }
    let mut bytes = std::io::Cursor::new(Vec::new());
    buffer
        .write_to(&mut bytes, format)
        .map_err(|e| Error::Image {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
    Ok(bytes.into_inner())
}

/// 16-bit grayscale PNG of the min-max normalized field plus a sidecar
/// holding the affine map back to field values.
pub fn write_field_png16(field: &ScalarField, path: &Path) -> Result<AffineMap> {
    let g = field.geometry();
    let map = AffineMap::spanning(field.min(), field.max());
    let buffer: ImageBuffer<Luma<u16>, Vec<u16>> =
        ImageBuffer::from_fn(g.width() as u32, g.height() as u32, |x, y| {
            let v = map
                .normalize(field.get(x as usize, y as usize))
                .clamp(0.0, 1.0);
            Luma([(v * 65535.0).round() as u16])
        });
    atomic_write(path, &encode_png(&buffer, path)?)?;
    write_sidecar(path, "rescale", &map, 65535)?;
    Ok(map)
}

/// Reads a PNG written by [`write_field_png16`] back into field values.
pub fn read_field_png16(path: &Path) -> Result<ScalarField> {
    let map = read_sidecar(path)?;
    let img = image::open(path)
        .map_err(|e| Error::Image {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?
        .to_luma16();
    let g = GridGeometry::unit(img.width() as usize, img.height() as usize)?;
    Ok(ScalarField::from_index_fn(g, |i, j| {
        map.restore(img.get_pixel(i as u32, j as u32)[0] as f64 / 65535.0)
    }))
}

fn hsv_to_rgb(h: f64, s: f64, v: f64) -> [f64; 3] {
    let h6 = (h.rem_euclid(1.0)) * 6.0;
    let sector = h6.floor();
    let f = h6 - sector;
    let (p, q, t) = (v * (1.0 - s), v * (1.0 - s * f), v * (1.0 - s * (1.0 - f)));
    match sector as u32 % 6 {
        0 => [v, t, p],
        1 => [q, v, p],
        2 => [p, v, t],
        3 => [p, q, v],
        4 => [t, p, v],
        _ => [v, p, q],
    }
}

/// Orientation map as colour: hue encodes 2θ, full saturation and value.
pub fn write_orientation_png(map: &OrientationMap, path: &Path) -> Result<()> {
    let g = map.geometry();
    let buffer: ImageBuffer<Rgb<u8>, Vec<u8>> =
        ImageBuffer::from_fn(g.width() as u32, g.height() as u32, |x, y| {
            let theta = map.theta(x as usize, y as usize);
            let rgb = hsv_to_rgb(theta / std::f64::consts::PI, 1.0, 1.0);
            Rgb(rgb.map(|c| (c * 255.0).round() as u8))
        });
    atomic_write(path, &encode_png(&buffer, path)?)
}

/// `iteration,value` rows, iterations counted from `first`.
pub fn trace_csv(values: &[f64], first: usize) -> String {
    let mut s = String::from("iteration,value\n");
    for (k, v) in values.iter().enumerate() {
        let _ = writeln!(s, "{},{:?}", first + k, v);
    }
    s
}

/// `level,line,x,y` rows, one per polyline vertex.
pub fn level_lines_csv(lines: &[LevelLine]) -> String {
    let mut s = String::from("level,line,x,y\n");
    for (n, line) in lines.iter().enumerate() {
        for &(x, y) in &line.points {
            let _ = writeln!(s, "{:?},{},{:?},{:?}", line.level, n, x, y);
        }
    }
    s
}
