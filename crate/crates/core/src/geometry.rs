//! Layout domain types and exact axis-aligned rectangle geometry.
//!
//! Boxes are kept in pixel coordinates exactly as annotated. Nothing here
//! clamps to the canvas: whether an element sits inside the canvas is a
//! question the metrics ask, not something ingestion enforces.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::GeometryError;

/// Fraction of the canvas area an element must exceed (strictly) to count as valid.
pub const VALID_AREA_FRACTION: f64 = 0.001;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ElementClass {
    Text,
    Logo,
    Underlay,
    /// Filler produced by fixed-length fitting; never read from annotations.
    Pad,
}

impl ElementClass {
    pub fn as_str(self) -> &'static str {
        match self {
            ElementClass::Text => "text",
            ElementClass::Logo => "logo",
            ElementClass::Underlay => "underlay",
            ElementClass::Pad => "pad",
        }
    }

    /// Text and logo elements, the ones underlays decorate.
    pub fn is_instance(self) -> bool {
        matches!(self, ElementClass::Text | ElementClass::Logo)
    }
}

impl fmt::Display for ElementClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ElementClass {
    type Err = GeometryError;

    /// Parses an annotation class name. `pad` is deliberately not accepted.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "text" => Ok(ElementClass::Text),
            "logo" => Ok(ElementClass::Logo),
            "underlay" => Ok(ElementClass::Underlay),
            other => Err(GeometryError::UnknownClass(other.to_string())),
        }
    }
}

/// Corner-form box `[x1, y1, x2, y2]`: top-left and bottom-right corners.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct BBox {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
}

impl From<[f64; 4]> for BBox {
    fn from([x1, y1, x2, y2]: [f64; 4]) -> Self {
        BBox { x1, y1, x2, y2 }
    }
}

impl From<BBox> for [f64; 4] {
    fn from(b: BBox) -> Self {
        [b.x1, b.y1, b.x2, b.y2]
    }
}

impl BBox {
    pub const ZERO: BBox = BBox { x1: 0.0, y1: 0.0, x2: 0.0, y2: 0.0 };

    pub fn new(x1: f64, y1: f64, x2: f64, y2: f64) -> Self {
        BBox { x1, y1, x2, y2 }
    }

    pub fn is_finite(&self) -> bool {
        self.x1.is_finite() && self.y1.is_finite() && self.x2.is_finite() && self.y2.is_finite()
    }

    pub fn is_canonical(&self) -> bool {
        self.x1 <= self.x2 && self.y1 <= self.y2
    }

    /// Orders each coordinate pair so that `x1 <= x2` and `y1 <= y2`.
    pub fn canonicalize(self) -> Result<BBox, GeometryError> {
        if !self.is_finite() {
            return Err(GeometryError::NonFinite(self.into()));
        }
        Ok(BBox {
            x1: self.x1.min(self.x2),
            y1: self.y1.min(self.y2),
            x2: self.x1.max(self.x2),
            y2: self.y1.max(self.y2),
        })
    }

    pub fn width(&self) -> f64 {
        self.x2 - self.x1
    }

    pub fn height(&self) -> f64 {
        self.y2 - self.y1
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    /// The box cut to `[0, canvas_w] x [0, canvas_h]`, or `None` when disjoint.
    pub fn clip(&self, canvas_w: f64, canvas_h: f64) -> Option<BBox> {
        let clipped =
            BBox { x1: self.x1.max(0.0), y1: self.y1.max(0.0), x2: self.x2.min(canvas_w), y2: self.y2.min(canvas_h) };
        (clipped.x1 <= clipped.x2 && clipped.y1 <= clipped.y2).then_some(clipped)
    }

    /// Area of the part of the box lying on the canvas.
    pub fn clipped_area(&self, canvas_w: u32, canvas_h: u32) -> f64 {
        self.clip(canvas_w as f64, canvas_h as f64).map_or(0.0, |b| b.area())
    }

    pub fn intersection_area(&self, other: &BBox) -> f64 {
        let w = self.x2.min(other.x2) - self.x1.max(other.x1);
        let h = self.y2.min(other.y2) - self.y1.max(other.y1);
        w.max(0.0) * h.max(0.0)
    }

    /// Smallest box enclosing both.
    pub fn hull(&self, other: &BBox) -> BBox {
        BBox {
            x1: self.x1.min(other.x1),
            y1: self.y1.min(other.y1),
            x2: self.x2.max(other.x2),
            y2: self.y2.max(other.y2),
        }
    }

    /// Closed containment: `other` lies inside `self`, boundaries may touch.
    pub fn contains(&self, other: &BBox) -> bool {
        self.x1 <= other.x1 && self.y1 <= other.y1 && other.x2 <= self.x2 && other.y2 <= self.y2
    }

    pub fn iou(&self, other: &BBox) -> f64 {
        let inter = self.intersection_area(other);
        let union = self.area() + other.area() - inter;
        if union <= 0.0 {
            0.0
        } else {
            inter / union
        }
    }

    /// Generalized IoU: `iou - (hull - union) / hull`, 0 for a degenerate hull.
    pub fn giou(&self, other: &BBox) -> f64 {
        let inter = self.intersection_area(other);
        let union = self.area() + other.area() - inter;
        let hull = self.hull(other).area();
        if hull <= 0.0 {
            return 0.0;
        }
        let iou = if union <= 0.0 { 0.0 } else { inter / union };
        iou - (hull - union) / hull
    }

    pub fn to_center(&self) -> CenterBox {
        CenterBox {
            xc: (self.x1 + self.x2) / 2.0,
            yc: (self.y1 + self.y2) / 2.0,
            w: self.x2 - self.x1,
            h: self.y2 - self.y1,
        }
    }
}

/// Center-form box `[xc, yc, w, h]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CenterBox {
    pub xc: f64,
    pub yc: f64,
    pub w: f64,
    pub h: f64,
}

impl CenterBox {
    pub fn to_corners(&self) -> Result<BBox, GeometryError> {
        if self.w < 0.0 || self.h < 0.0 {
            return Err(GeometryError::NegativeExtent { w: self.w, h: self.h });
        }
        let half_w = self.w / 2.0;
        let half_h = self.h / 2.0;
        Ok(BBox { x1: self.xc - half_w, y1: self.yc - half_h, x2: self.xc + half_w, y2: self.yc + half_h })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Element {
    pub class: ElementClass,
    #[serde(rename = "box")]
    pub bbox: BBox,
    /// Position in the source annotation; the tie-break key for every sort.
    pub index: usize,
}

impl Element {
    pub fn new(class: ElementClass, bbox: BBox, index: usize) -> Self {
        Element { class, bbox, index }
    }

    pub fn pad(index: usize) -> Self {
        Element { class: ElementClass::Pad, bbox: BBox::ZERO, index }
    }

    /// In-canvas area strictly above 0.1% of the canvas. Pads never qualify.
    pub fn is_valid(&self, canvas_w: u32, canvas_h: u32) -> bool {
        if self.class == ElementClass::Pad {
            return false;
        }
        let threshold = VALID_AREA_FRACTION * canvas_w as f64 * canvas_h as f64;
        self.bbox.clipped_area(canvas_w, canvas_h) > threshold
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    #[default]
    Train,
    Test,
}

/// One annotated layout on one canvas.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub canvas_id: String,
    /// Distinguishes several layouts on the same canvas; empty when unused.
    pub layout_id: String,
    pub split: Split,
    pub canvas_w: u32,
    pub canvas_h: u32,
    pub elements: Vec<Element>,
}

impl Layout {
    /// Builds a layout from class/box pairs, canonicalizing boxes and
    /// numbering elements in the given order.
    pub fn new(
        canvas_id: impl Into<String>,
        canvas_w: u32,
        canvas_h: u32,
        items: impl IntoIterator<Item = (ElementClass, BBox)>,
    ) -> Result<Layout, GeometryError> {
        if canvas_w == 0 || canvas_h == 0 {
            return Err(GeometryError::EmptyCanvas { w: canvas_w, h: canvas_h });
        }
        let elements = items
            .into_iter()
            .enumerate()
            .map(|(index, (class, bbox))| Ok(Element::new(class, bbox.canonicalize()?, index)))
            .collect::<Result<Vec<_>, GeometryError>>()?;
        Ok(Layout {
            canvas_id: canvas_id.into(),
            layout_id: String::new(),
            split: Split::Train,
            canvas_w,
            canvas_h,
            elements,
        })
    }

    pub fn with_layout_id(mut self, layout_id: impl Into<String>) -> Self {
        self.layout_id = layout_id.into();
        self
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn valid_elements(&self) -> impl Iterator<Item = &Element> + '_ {
        self.elements.iter().filter(|e| e.is_valid(self.canvas_w, self.canvas_h))
    }

    /// Copy of this layout holding only `elements`, in the given order.
    pub fn with_elements(&self, elements: Vec<Element>) -> Layout {
        Layout { elements, ..self.clone() }
    }
}
