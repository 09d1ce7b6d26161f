//! Seeded layout generators that give the harness something to score
//! without a trained model.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::GenError;
use crate::geometry::{BBox, Element, ElementClass, Layout};
use crate::raster::Raster;

/// Inclusive element-count range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountRange {
    pub min: usize,
    pub max: usize,
}

impl CountRange {
    pub const fn exactly(n: usize) -> Self {
        CountRange { min: n, max: n }
    }
}

/// Generator settings. Readable from TOML; omitted keys take the defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenSpec {
    pub canvas_w: u32,
    pub canvas_h: u32,
    pub texts: CountRange,
    pub logos: CountRange,
    pub underlays: CountRange,
    /// Element width as a fraction of the canvas width, `[min, max]`.
    pub width_frac: [f64; 2],
    pub height_frac: [f64; 2],
    pub seed: u64,
    pub grid_rows: u32,
    pub grid_cols: u32,
}

impl Default for GenSpec {
    fn default() -> Self {
        GenSpec {
            canvas_w: 513,
            canvas_h: 750,
            texts: CountRange { min: 1, max: 4 },
            logos: CountRange { min: 0, max: 1 },
            underlays: CountRange::exactly(0),
            width_frac: [0.2, 0.6],
            height_frac: [0.05, 0.15],
            seed: 0,
            grid_rows: 8,
            grid_cols: 8,
        }
    }
}

impl GenSpec {
    pub fn from_toml_str(s: &str) -> Result<GenSpec, GenError> {
        let spec: GenSpec = toml::from_str(s).map_err(|e| GenError::Infeasible(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_seed(&self, seed: u64) -> GenSpec {
        GenSpec { seed, ..self.clone() }
    }

    pub fn validate(&self) -> Result<(), GenError> {
        let bad = |m: String| Err(GenError::Infeasible(m));
        if self.canvas_w == 0 || self.canvas_h == 0 {
            return bad("canvas must be non-empty".into());
        }
        for (name, r) in [("texts", self.texts), ("logos", self.logos), ("underlays", self.underlays)] {
            if r.min > r.max {
                return bad(format!("{name} range is empty ({} > {})", r.min, r.max));
            }
        }
        for (name, [lo, hi]) in [("width_frac", self.width_frac), ("height_frac", self.height_frac)] {
            if !(lo > 0.0 && lo <= hi && hi <= 1.0) {
                return bad(format!("{name} [{lo}, {hi}] must satisfy 0 < min <= max <= 1"));
            }
        }
        let smallest = Element::new(
            ElementClass::Text,
            BBox::new(0.0, 0.0, self.width_frac[0] * self.canvas_w as f64, self.height_frac[0] * self.canvas_h as f64),
            0,
        );
        if !smallest.is_valid(self.canvas_w, self.canvas_h) {
            return bad("smallest element would not exceed 0.1% of the canvas".into());
        }
        if self.underlays.max > 0 && self.texts.min == 0 {
            return bad("underlays need at least one text to enclose".into());
        }
        if self.grid_rows == 0 || self.grid_cols == 0 {
            return bad("grid must have at least one cell".into());
        }
        Ok(())
    }

    fn draw_counts(&self, rng: &mut ChaCha8Rng) -> (usize, usize, usize) {
        let mut draw = |r: CountRange| rng.random_range(r.min..=r.max);
        let texts = draw(self.texts);
        let logos = draw(self.logos);
        let underlays = draw(self.underlays);
        (texts, logos, underlays)
    }
}

fn enclosing(inner: &BBox, margin: f64, w: f64, h: f64) -> BBox {
    BBox::new(
        (inner.x1 - margin).max(0.0),
        (inner.y1 - margin).max(0.0),
        (inner.x2 + margin).min(w),
        (inner.y2 + margin).min(h),
    )
}

fn build_layout(spec: &GenSpec, items: Vec<(ElementClass, BBox)>) -> Layout {
    let canvas_id = format!("gen-{}", spec.seed);
    Layout::new(canvas_id, spec.canvas_w, spec.canvas_h, items)
        .expect("generated boxes are finite on a non-empty canvas")
}

/// Uniformly random boxes lying fully inside the canvas.
///
/// Texts come first, then logos, then underlays; each underlay encloses a
/// text (round-robin) with a random margin.
pub fn random_layout(spec: &GenSpec) -> Result<Layout, GenError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (w, h) = (spec.canvas_w as f64, spec.canvas_h as f64);
    let (n_text, n_logo, n_under) = spec.draw_counts(&mut rng);

    let random_box = |rng: &mut ChaCha8Rng| {
        let bw = rng.random_range(spec.width_frac[0]..=spec.width_frac[1]) * w;
        let bh = rng.random_range(spec.height_frac[0]..=spec.height_frac[1]) * h;
        let x1 = rng.random_range(0.0..=w - bw);
        let y1 = rng.random_range(0.0..=h - bh);
        BBox::new(x1, y1, x1 + bw, y1 + bh)
    };
    let mut items = Vec::with_capacity(n_text + n_logo + n_under);
    for _ in 0..n_text {
        items.push((ElementClass::Text, random_box(&mut rng)));
    }
    for _ in 0..n_logo {
        items.push((ElementClass::Logo, random_box(&mut rng)));
    }
    for k in 0..n_under {
        let text = items[k % n_text].1;
        let margin = rng.random_range(0.0..=0.05) * w.min(h);
        items.push((ElementClass::Underlay, enclosing(&text, margin, w, h)));
    }
    Ok(build_layout(spec, items))
}

/// Pixel bounds of grid cell `(row, col)`.
fn cell_box(spec: &GenSpec, row: u32, col: u32) -> BBox {
    let edge = |i: u32, n: u32, len: u32| (i as u64 * len as u64 / n as u64) as f64;
    BBox::new(
        edge(col, spec.grid_cols, spec.canvas_w),
        edge(row, spec.grid_rows, spec.canvas_h),
        edge(col + 1, spec.grid_cols, spec.canvas_w),
        edge(row + 1, spec.grid_rows, spec.canvas_h),
    )
}

/// Fraction of a cell's size left empty on each side of a placed element.
const CELL_INSET: f64 = 0.1;

/// Places texts and logos into the grid cells with the lowest mean
/// saliency (ties in row-major order), logos first. Each element is its
/// cell shrunk by 10% per side; underlays take the full cell of a text.
pub fn saliency_grid_layout(saliency: &Raster, spec: &GenSpec) -> Result<Layout, GenError> {
    spec.validate()?;
    saliency.check_dims(spec.canvas_w, spec.canvas_h)?;
    let cells = (spec.grid_rows * spec.grid_cols) as usize;
    let requested = spec.texts.max + spec.logos.max;
    if requested > cells {
        return Err(GenError::Capacity { requested, cells });
    }

    let mut scored: Vec<(f64, usize, BBox)> = Vec::with_capacity(cells);
    for row in 0..spec.grid_rows {
        for col in 0..spec.grid_cols {
            let cell = cell_box(spec, row, col);
            let (x1, y1, x2, y2) = (cell.x1 as u32, cell.y1 as u32, cell.x2 as u32, cell.y2 as u32);
            if x2 == x1 || y2 == y1 {
                return Err(GenError::Infeasible("grid is finer than the canvas".into()));
            }
            let mut sum = 0.0;
            for y in y1..y2 {
                for x in x1..x2 {
                    sum += saliency.get(x, y);
                }
            }
            let mean = sum / ((x2 - x1) as f64 * (y2 - y1) as f64);
            scored.push((mean, (row * spec.grid_cols + col) as usize, cell));
        }
    }
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let inset = |c: &BBox| {
        let (dx, dy) = (c.width() * CELL_INSET, c.height() * CELL_INSET);
        BBox::new(c.x1 + dx, c.y1 + dy, c.x2 - dx, c.y2 - dy)
    };
    let probe = Element::new(ElementClass::Text, inset(&scored[0].2), 0);
    if !probe.is_valid(spec.canvas_w, spec.canvas_h) {
        return Err(GenError::Infeasible("grid cells too small for valid elements".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (n_text, n_logo, n_under) = spec.draw_counts(&mut rng);
    let mut free = scored.iter().map(|s| s.2);
    let mut items = Vec::with_capacity(n_text + n_logo + n_under);
    let mut text_cells = Vec::with_capacity(n_text);
    for _ in 0..n_logo {
        let cell = free.next().expect("capacity checked");
        items.push((ElementClass::Logo, inset(&cell)));
    }
    for _ in 0..n_text {
        let cell = free.next().expect("capacity checked");
        items.push((ElementClass::Text, inset(&cell)));
        text_cells.push(cell);
    }
    for k in 0..n_under {
        items.push((ElementClass::Underlay, text_cells[k % n_text]));
    }
    Ok(build_layout(spec, items))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{metric_occlusion, metric_underlay, metric_validity};

    #[test]
    fn random_layouts_are_valid_and_seeded() {
        for seed in 0..50 {
            let spec = GenSpec { underlays: CountRange { min: 0, max: 2 }, ..GenSpec::default() }.with_seed(seed);
            let l = random_layout(&spec).unwrap();
            assert_eq!(metric_validity(&l), Some(1.0));
            assert!(l.elements.iter().all(|e| e.bbox.x1 >= 0.0 && e.bbox.x2 <= 513.0 && e.bbox.y2 <= 750.0));
            assert_eq!(l, random_layout(&spec).unwrap());
            if let Some((loose, strict)) = metric_underlay(&l) {
                assert_eq!((loose, strict), (1.0, 1.0));
            }
        }
    }

    #[test]
    fn fixed_count_range() {
        let spec = GenSpec { texts: CountRange::exactly(3), logos: CountRange::exactly(1), ..GenSpec::default() };
        for seed in 0..20 {
            let l = random_layout(&spec.with_seed(seed)).unwrap();
            assert_eq!(l.len(), 4);
            assert!(l.elements.iter().all(|e| e.class != ElementClass::Underlay));
        }
    }

    #[test]
    fn infeasible_specs() {
        let too_wide = GenSpec { width_frac: [0.5, 1.5], ..GenSpec::default() };
        assert!(matches!(random_layout(&too_wide), Err(GenError::Infeasible(_))));
        let tiny = GenSpec { width_frac: [0.01, 0.02], height_frac: [0.01, 0.02], ..GenSpec::default() };
        assert!(random_layout(&tiny).is_err());
        let empty = GenSpec { texts: CountRange { min: 3, max: 1 }, ..GenSpec::default() };
        assert!(random_layout(&empty).is_err());
    }

    #[test]
    fn spec_from_toml() {
        let spec =
            GenSpec::from_toml_str("canvas_w = 100\ncanvas_h = 100\nseed = 9\n[texts]\nmin = 2\nmax = 2\n").unwrap();
        assert_eq!(spec.canvas_w, 100);
        assert_eq!(spec.texts, CountRange::exactly(2));
        assert_eq!(spec.grid_rows, 8);
        assert!(GenSpec::from_toml_str("bogus = 1\n").is_err());
    }

    fn grid_spec(texts: usize) -> GenSpec {
        GenSpec {
            canvas_w: 80,
            canvas_h: 80,
            texts: CountRange::exactly(texts),
            logos: CountRange::exactly(0),
            ..GenSpec::default()
        }
    }

    #[test]
    fn grid_fills_row_major_on_flat_map() {
        let s = Raster::filled(80, 80, 0.0).unwrap();
        let l = saliency_grid_layout(&s, &grid_spec(3)).unwrap();
        let x1s: Vec<f64> = l.elements.iter().map(|e| e.bbox.x1).collect();
        assert_eq!(x1s, vec![1.0, 11.0, 21.0]);
        assert!(l.elements.iter().all(|e| e.bbox.y1 == 1.0));
    }

    #[test]
    fn grid_picks_the_quiet_cell() {
        // only cell (row 5, col 2) is zero
        let s = Raster::from_fn(80, 80, |x, y| if (20..30).contains(&x) && (50..60).contains(&y) { 0.0 } else { 0.8 })
            .unwrap();
        let l = saliency_grid_layout(&s, &grid_spec(1)).unwrap();
        assert_eq!(l.elements[0].bbox, BBox::new(21.0, 51.0, 29.0, 59.0));
        assert_eq!(metric_occlusion(&l, &s).unwrap().value, 0.0);
    }

    #[test]
    fn grid_capacity() {
        let spec = GenSpec { grid_rows: 3, grid_cols: 3, ..grid_spec(10) };
        let s = Raster::filled(80, 80, 0.0).unwrap();
        assert_eq!(saliency_grid_layout(&s, &spec), Err(GenError::Capacity { requested: 10, cells: 9 }));
    }

    #[test]
    fn grid_beats_random_placement_on_occlusion() {
        // salient disc in the middle of the canvas
        let s = Raster::from_fn(80, 80, |x, y| {
            let (dx, dy) = (x as f64 - 40.0, y as f64 - 40.0);
            if dx * dx + dy * dy < 25.0 * 25.0 {
                1.0
            } else {
                0.1
            }
        })
        .unwrap();
        let spec = grid_spec(4);
        let grid = saliency_grid_layout(&s, &spec).unwrap();
        let grid_occ = metric_occlusion(&grid, &s).unwrap().value;
        let mut total = 0.0;
        let seeds = 100;
        for seed in 0..seeds {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let moved: Vec<(ElementClass, BBox)> = grid
                .elements
                .iter()
                .map(|e| {
                    let (w, h) = (e.bbox.width(), e.bbox.height());
                    let x = rng.random_range(0.0..=80.0 - w);
                    let y = rng.random_range(0.0..=80.0 - h);
                    (e.class, BBox::new(x, y, x + w, y + h))
                })
                .collect();
            let l = Layout::new("r", 80, 80, moved).unwrap();
            total += metric_occlusion(&l, &s).unwrap().value;
        }
        assert!(grid_occ <= total / seeds as f64);
    }
}
