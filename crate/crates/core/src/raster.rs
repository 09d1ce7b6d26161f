//! Single-channel rasters and pixel-center coverage masks.

use crate::error::MetricError;
use crate::geometry::{BBox, ElementClass, Layout};

/// Row-major single-channel raster with values in `[0, 1]`.
///
/// Used both for saliency maps and for canvas luminance.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    width: u32,
    height: u32,
    values: Vec<f64>,
}

/// Saliency maps are plain rasters.
pub type SaliencyRaster = Raster;

impl Raster {
    pub fn new(width: u32, height: u32, values: Vec<f64>) -> Result<Raster, MetricError> {
        let expected = width as usize * height as usize;
        if values.len() != expected {
            return Err(MetricError::WrongLength { expected, got: values.len() });
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
            return Err(MetricError::OutOfRange { index, value });
        }
        Ok(Raster { width, height, values })
    }

    pub fn filled(width: u32, height: u32, value: f64) -> Result<Raster, MetricError> {
        Raster::new(width, height, vec![value; width as usize * height as usize])
    }

    /// Builds a raster from a per-pixel function `f(x, y)`.
    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> f64) -> Result<Raster, MetricError> {
        let mut values = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                values.push(f(x, y));
            }
        }
        Raster::new(width, height, values)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, x: u32, y: u32) -> f64 {
        self.values[y as usize * self.width as usize + x as usize]
    }

    pub fn check_dims(&self, width: u32, height: u32) -> Result<(), MetricError> {
        if self.width != width || self.height != height {
            return Err(MetricError::DimensionMismatch {
                want_w: width,
                want_h: height,
                got_w: self.width,
                got_h: self.height,
            });
        }
        Ok(())
    }

    /// Pixel-wise maximum of two rasters of equal size.
    pub fn composite_max(&self, other: &Raster) -> Result<Raster, MetricError> {
        other.check_dims(self.width, self.height)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a.max(*b)).collect();
        Ok(Raster { width: self.width, height: self.height, values })
    }
}

/// Compounds two saliency maps by pixel-wise maximum.
pub fn composite_saliency(s1: &Raster, s2: &Raster) -> Result<Raster, MetricError> {
    s1.composite_max(s2)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverageMask {
    width: u32,
    height: u32,
    covered: Vec<bool>,
}

impl CoverageMask {
    pub fn empty(width: u32, height: u32) -> CoverageMask {
        CoverageMask { width, height, covered: vec![false; width as usize * height as usize] }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.covered
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        self.covered[y as usize * self.width as usize + x as usize]
    }

    pub fn count(&self) -> usize {
        self.covered.iter().filter(|&&c| c).count()
    }

    /// Marks every pixel whose center falls in `bbox` (given in raster pixels).
    pub fn fill_box(&mut self, bbox: &BBox) {
        let (xs, ys) = pixel_span(bbox, self.width, self.height);
        for y in ys {
            let row = y as usize * self.width as usize;
            for x in xs.clone() {
                self.covered[row + x as usize] = true;
            }
        }
    }

    /// Pixels set here and not in `other`.
    pub fn minus(&self, other: &CoverageMask) -> CoverageMask {
        let covered = self.covered.iter().zip(&other.covered).map(|(&a, &b)| a && !b).collect();
        CoverageMask { width: self.width, height: self.height, covered }
    }
}

/// Column and row ranges of pixels whose centers lie in the half-open box
/// `[x1, x2) x [y1, y2)`, clamped to the raster.
pub fn pixel_span(bbox: &BBox, width: u32, height: u32) -> (std::ops::Range<u32>, std::ops::Range<u32>) {
    // center c = p + 0.5 lies in [a, b)  <=>  ceil(a - 0.5) <= p < ceil(b - 0.5)
    let axis = |lo: f64, hi: f64, n: u32| {
        let start = (lo - 0.5).ceil().clamp(0.0, n as f64) as u32;
        let end = (hi - 0.5).ceil().clamp(0.0, n as f64) as u32;
        start..end.max(start)
    };
    (axis(bbox.x1, bbox.x2, width), axis(bbox.y1, bbox.y2, height))
}

/// Coverage of the valid elements of the selected classes.
///
/// The raster may be the canvas size or an integer multiple of it (same
/// factor on both axes); boxes are scaled into raster pixels first.
pub fn rasterize_coverage(
    layout: &Layout,
    classes: &[ElementClass],
    width: u32,
    height: u32,
) -> Result<CoverageMask, MetricError> {
    let scale = raster_scale(layout, width, height)?;
    let mut mask = CoverageMask::empty(width, height);
    for e in layout.valid_elements().filter(|e| classes.contains(&e.class)) {
        if let Some(clipped) = e.bbox.clip(layout.canvas_w as f64, layout.canvas_h as f64) {
            let scaled = BBox::new(clipped.x1 * scale, clipped.y1 * scale, clipped.x2 * scale, clipped.y2 * scale);
            mask.fill_box(&scaled);
        }
    }
    Ok(mask)
}

fn raster_scale(layout: &Layout, width: u32, height: u32) -> Result<f64, MetricError> {
    let mismatch = || MetricError::DimensionMismatch {
        want_w: layout.canvas_w,
        want_h: layout.canvas_h,
        got_w: width,
        got_h: height,
    };
    if !width.is_multiple_of(layout.canvas_w) || !height.is_multiple_of(layout.canvas_h) {
        return Err(mismatch());
    }
    let (sx, sy) = (width / layout.canvas_w, height / layout.canvas_h);
    if sx != sy || sx == 0 {
        return Err(mismatch());
    }
    Ok(sx as f64)
}

pub const ALL_CLASSES: [ElementClass; 3] = [ElementClass::Text, ElementClass::Logo, ElementClass::Underlay];
