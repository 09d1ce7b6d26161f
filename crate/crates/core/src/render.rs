//! Wireframe overlays of layouts on canvases.
//!
//! Fixed colors per class: text red `(230, 25, 75)`, logo blue
//! `(0, 130, 200)`, underlay green `(60, 180, 75)`. Each element tints the
//! pixels whose centers it covers at alpha 1/2 and draws a one-pixel
//! opaque outline. Underlays are drawn first, then logos, then texts.

use image::{Rgb, RgbImage};

use crate::geometry::{Element, ElementClass, Layout};
use crate::raster::pixel_span;

pub fn class_color(class: ElementClass) -> Rgb<u8> {
    match class {
        ElementClass::Text => Rgb([230, 25, 75]),
        ElementClass::Logo => Rgb([0, 130, 200]),
        ElementClass::Underlay => Rgb([60, 180, 75]),
        ElementClass::Pad => Rgb([128, 128, 128]),
    }
}

/// Background used when no canvas image is available.
pub const BLANK: Rgb<u8> = Rgb([255, 255, 255]);

fn draw_rank(class: ElementClass) -> u8 {
    match class {
        ElementClass::Underlay => 0,
        ElementClass::Logo => 1,
        ElementClass::Text => 2,
        ElementClass::Pad => 3,
    }
}

fn blend(base: u8, over: u8) -> u8 {
    (base as u16 + over as u16).div_ceil(2) as u8
}

/// Draws `layout` over `background` (or a white field when `None`).
///
/// The background must match the canvas size; callers fall back to `None`
/// otherwise.
pub fn render_layout(layout: &Layout, background: Option<&RgbImage>) -> RgbImage {
    let (w, h) = (layout.canvas_w, layout.canvas_h);
    let mut img = match background {
        Some(bg) if bg.dimensions() == (w, h) => bg.clone(),
        _ => RgbImage::from_pixel(w, h, BLANK),
    };
    let mut order: Vec<&Element> = layout.elements.iter().filter(|e| e.class != ElementClass::Pad).collect();
    order.sort_by_key(|e| (draw_rank(e.class), e.index));
    for e in order {
        let Some(clipped) = e.bbox.clip(w as f64, h as f64) else { continue };
        let (xs, ys) = pixel_span(&clipped, w, h);
        if xs.is_empty() || ys.is_empty() {
            continue;
        }
        let color = class_color(e.class);
        let (x_last, y_last) = (xs.end - 1, ys.end - 1);
        for y in ys.clone() {
            for x in xs.clone() {
                let px = img.get_pixel_mut(x, y);
                if x == xs.start || x == x_last || y == ys.start || y == y_last {
                    *px = color;
                } else {
                    for c in 0..3 {
                        px.0[c] = blend(px.0[c], color.0[c]);
                    }
                }
            }
        }
    }
    img
}

/// PNG bytes of the rendering; identical inputs give identical bytes.
pub fn render_png(layout: &Layout, background: Option<&RgbImage>) -> Result<Vec<u8>, image::ImageError> {
    let img = render_layout(layout, background);
    let mut bytes = Vec::new();
    img.write_to(&mut std::io::Cursor::new(&mut bytes), image::ImageFormat::Png)?;
    Ok(bytes)
}
