//! Graphic and content-aware layout metrics.
//!
//! Graphic metrics look only at geometry:
//!
//! * `Val`: share of elements whose in-canvas area exceeds 0.1% of the canvas.
//! * `Ove`: mean pairwise IoU of valid texts and logos.
//! * `Ali`: mean, over valid elements, of the smallest canvas-normalized
//!   distance to any other valid element along one of six alignment lines
//!   (left, x-center, right, top, y-center, bottom). Boxes are clipped to the
//!   canvas first, so the value stays in `[0, 1]`.
//! * `Und_l` / `Und_s`: per valid underlay, the best `area(u ∩ e) / area(e)`
//!   over valid texts and logos (loose) or whether one lies completely
//!   inside it (strict); averaged over valid underlays.
//!
//! Content-aware metrics need a saliency map `S` or the canvas luminance:
//!
//! * `Uti`: `Σ (1 - S)` over covered pixels divided by `Σ (1 - S)` overall.
//! * `Occ`: mean of `S` over covered pixels.
//! * `Rea`: mean gradient magnitude of the canvas over pixels covered by
//!   text but by no underlay. Gradients are undivided central differences
//!   `I(x+1) - I(x-1)` with replicated borders, and the magnitude is
//!   divided by `sqrt(2)` so it lies in `[0, 1]`.
//!
//! Coverage uses the valid elements only and the pixel-center rule.
//! Every metric except `Val` ignores invalid elements.

use std::borrow::Cow;
use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dsf::group_by_underlay;
use crate::error::MetricError;
use crate::geometry::{BBox, Element, ElementClass, Layout};
use crate::raster::{rasterize_coverage, Raster, ALL_CLASSES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Val,
    Ove,
    Ali,
    UndL,
    UndS,
    Uti,
    Occ,
    Rea,
}

impl Metric {
    pub const ALL: [Metric; 8] =
        [Metric::Val, Metric::Ove, Metric::Ali, Metric::UndL, Metric::UndS, Metric::Uti, Metric::Occ, Metric::Rea];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Val => "val",
            Metric::Ove => "ove",
            Metric::Ali => "ali",
            Metric::UndL => "und_l",
            Metric::UndS => "und_s",
            Metric::Uti => "uti",
            Metric::Occ => "occ",
            Metric::Rea => "rea",
        }
    }

    pub fn is_content_aware(self) -> bool {
        matches!(self, Metric::Uti | Metric::Occ | Metric::Rea)
    }

    fn slot(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase();
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s || m.name().replace('_', "") == s)
            .ok_or_else(|| format!("unknown metric {s:?}"))
    }
}

/// Which metrics to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MetricSelection([bool; 8]);

impl MetricSelection {
    pub fn all() -> Self {
        MetricSelection([true; 8])
    }

    pub fn graphic() -> Self {
        MetricSelection(Metric::ALL.map(|m| !m.is_content_aware()))
    }

    pub fn only(metrics: &[Metric]) -> Self {
        MetricSelection(Metric::ALL.map(|m| metrics.contains(&m)))
    }

    pub fn contains(&self, m: Metric) -> bool {
        self.0[m.slot()]
    }

    pub fn needs_saliency(&self) -> bool {
        self.contains(Metric::Uti) || self.contains(Metric::Occ)
    }

    pub fn needs_canvas(&self) -> bool {
        self.contains(Metric::Rea)
    }
}

impl Default for MetricSelection {
    fn default() -> Self {
        MetricSelection::all()
    }
}

impl FromStr for MetricSelection {
    type Err = String;

    /// Comma-separated metric names, or `all` / `graphic` / `content`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut picked = [false; 8];
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part.to_ascii_lowercase().as_str() {
                "all" => picked = [true; 8],
                "graphic" => Metric::ALL.iter().filter(|m| !m.is_content_aware()).for_each(|m| picked[m.slot()] = true),
                "content" => Metric::ALL.iter().filter(|m| m.is_content_aware()).for_each(|m| picked[m.slot()] = true),
                "und" => {
                    picked[Metric::UndL.slot()] = true;
                    picked[Metric::UndS.slot()] = true;
                }
                other => picked[other.parse::<Metric>()?.slot()] = true,
            }
        }
        if !picked.iter().any(|&p| p) {
            return Err("no metrics selected".into());
        }
        Ok(MetricSelection(picked))
    }
}

/// Why a layout has no value, or only a conventional one, for some metric.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "detail")]
pub enum Diagnostic {
    /// No non-pad elements; `Val` undefined.
    EmptyLayout,
    /// Fewer than two valid texts/logos; `Ove` undefined.
    FewOverlayPairs,
    /// No valid underlay; `Und` undefined.
    NoValidUnderlay,
    /// Underlays that decorate no text or logo.
    OrphanUnderlays(usize),
    /// Saliency sums to the full canvas; `Uti` set to 0.
    FullySalient,
    /// Nothing covered; `Occ` set to 0.
    NoCoverage,
    /// No pixel lies under text alone; `Rea` set to 0.
    EmptyReadabilityRegion,
    /// Saliency unavailable; `Uti` and `Occ` excluded.
    MissingSaliency(String),
    /// Canvas image unavailable; `Rea` excluded.
    MissingCanvas(String),
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::EmptyLayout => f.write_str("empty_layout"),
            Diagnostic::FewOverlayPairs => f.write_str("few_overlay_pairs"),
            Diagnostic::NoValidUnderlay => f.write_str("no_valid_underlay"),
            Diagnostic::OrphanUnderlays(n) => write!(f, "orphan_underlays={n}"),
            Diagnostic::FullySalient => f.write_str("fully_salient"),
            Diagnostic::NoCoverage => f.write_str("no_coverage"),
            Diagnostic::EmptyReadabilityRegion => f.write_str("empty_readability_region"),
            Diagnostic::MissingSaliency(why) => write!(f, "missing_saliency({why})"),
            Diagnostic::MissingCanvas(why) => write!(f, "missing_canvas({why})"),
        }
    }
}

/// A content-aware value plus whether it came from a degenerate case.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContentValue {
    pub value: f64,
    pub degenerate: bool,
}

fn non_pad(layout: &Layout) -> impl Iterator<Item = &Element> + '_ {
    layout.elements.iter().filter(|e| e.class != ElementClass::Pad)
}

pub fn metric_validity(layout: &Layout) -> Option<f64> {
    let total = non_pad(layout).count();
    if total == 0 {
        return None;
    }
    let valid = layout.valid_elements().count();
    Some(valid as f64 / total as f64)
}

pub fn metric_overlay(layout: &Layout) -> Option<f64> {
    let boxes: Vec<BBox> = layout.valid_elements().filter(|e| e.class.is_instance()).map(|e| e.bbox).collect();
    if boxes.len() < 2 {
        return None;
    }
    let mut sum = 0.0;
    let mut pairs = 0usize;
    for i in 0..boxes.len() {
        for j in i + 1..boxes.len() {
            sum += boxes[i].iou(&boxes[j]);
            pairs += 1;
        }
    }
    Some(sum / pairs as f64)
}

fn alignment_lines(b: &BBox, w: f64, h: f64) -> [f64; 6] {
    [b.x1 / w, (b.x1 + b.x2) / 2.0 / w, b.x2 / w, b.y1 / h, (b.y1 + b.y2) / 2.0 / h, b.y2 / h]
}

pub fn metric_alignment(layout: &Layout) -> f64 {
    let (w, h) = (layout.canvas_w as f64, layout.canvas_h as f64);
    let lines: Vec<[f64; 6]> =
        layout.valid_elements().filter_map(|e| e.bbox.clip(w, h)).map(|b| alignment_lines(&b, w, h)).collect();
    if lines.len() < 2 {
        return 0.0;
    }
    let total: f64 = (0..lines.len())
        .map(|i| {
            let mut best = f64::INFINITY;
            for (j, other) in lines.iter().enumerate() {
                if i == j {
                    continue;
                }
                for axis in 0..6 {
                    best = best.min((lines[i][axis] - other[axis]).abs());
                }
            }
            best
        })
        .sum();
    total / lines.len() as f64
}

/// `(Und_l, Und_s)`, or `None` without valid underlays.
pub fn metric_underlay(layout: &Layout) -> Option<(f64, f64)> {
    let valid: Vec<&Element> = layout.valid_elements().collect();
    let instances: Vec<&BBox> = valid.iter().filter(|e| e.class.is_instance()).map(|e| &e.bbox).collect();
    let underlays: Vec<&BBox> = valid.iter().filter(|e| e.class == ElementClass::Underlay).map(|e| &e.bbox).collect();
    if underlays.is_empty() {
        return None;
    }
    let mut loose = 0.0;
    let mut strict = 0.0;
    for u in &underlays {
        let best = instances
            .iter()
            .map(|inst| {
                let area = inst.area();
                if area > 0.0 {
                    u.intersection_area(inst) / area
                } else {
                    0.0
                }
            })
            .fold(0.0, f64::max);
        loose += best;
        if instances.iter().any(|inst| u.contains(inst)) {
            strict += 1.0;
        }
    }
    let n = underlays.len() as f64;
    Some((loose / n, strict / n))
}

pub fn metric_utility(layout: &Layout, saliency: &Raster) -> Result<ContentValue, MetricError> {
    saliency.check_dims(layout.canvas_w, layout.canvas_h)?;
    let mask = rasterize_coverage(layout, &ALL_CLASSES, saliency.width(), saliency.height())?;
    let mut covered = 0.0;
    let mut total = 0.0;
    for (&s, &c) in saliency.values().iter().zip(mask.as_slice()) {
        let free = 1.0 - s;
        total += free;
        if c {
            covered += free;
        }
    }
    if total <= 0.0 {
        return Ok(ContentValue { value: 0.0, degenerate: true });
    }
    Ok(ContentValue { value: covered / total, degenerate: false })
}

pub fn metric_occlusion(layout: &Layout, saliency: &Raster) -> Result<ContentValue, MetricError> {
    saliency.check_dims(layout.canvas_w, layout.canvas_h)?;
    let mask = rasterize_coverage(layout, &ALL_CLASSES, saliency.width(), saliency.height())?;
    let mut sum = 0.0;
    let mut n = 0usize;
    for (&s, &c) in saliency.values().iter().zip(mask.as_slice()) {
        if c {
            sum += s;
            n += 1;
        }
    }
    if n == 0 {
        return Ok(ContentValue { value: 0.0, degenerate: true });
    }
    Ok(ContentValue { value: sum / n as f64, degenerate: false })
}

pub fn metric_readability(layout: &Layout, canvas: &Raster) -> Result<ContentValue, MetricError> {
    canvas.check_dims(layout.canvas_w, layout.canvas_h)?;
    let (w, h) = (canvas.width(), canvas.height());
    let text = rasterize_coverage(layout, &[ElementClass::Text], w, h)?;
    let under = rasterize_coverage(layout, &[ElementClass::Underlay], w, h)?;
    let region = text.minus(&under);
    let mut sum = 0.0;
    let mut n = 0usize;
    for y in 0..h {
        for x in 0..w {
            if !region.get(x, y) {
                continue;
            }
            let gx = canvas.get((x + 1).min(w - 1), y) - canvas.get(x.saturating_sub(1), y);
            let gy = canvas.get(x, (y + 1).min(h - 1)) - canvas.get(x, y.saturating_sub(1));
            sum += (gx * gx + gy * gy).sqrt() / std::f64::consts::SQRT_2;
            n += 1;
        }
    }
    if n == 0 {
        return Ok(ContentValue { value: 0.0, degenerate: true });
    }
    Ok(ContentValue { value: sum / n as f64, degenerate: false })
}

/// All eight metric values, e.g. one row of a results table.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricValues {
    pub val: f64,
    pub ove: f64,
    pub ali: f64,
    pub und_l: f64,
    pub und_s: f64,
    pub uti: f64,
    pub occ: f64,
    pub rea: f64,
}

impl MetricValues {
    pub fn from_array(v: [f64; 8]) -> Self {
        let [val, ove, ali, und_l, und_s, uti, occ, rea] = v;
        MetricValues { val, ove, ali, und_l, und_s, uti, occ, rea }
    }

    pub fn to_array(&self) -> [f64; 8] {
        [self.val, self.ove, self.ali, self.und_l, self.und_s, self.uti, self.occ, self.rea]
    }

    /// `other - self`, metric by metric.
    pub fn diff(&self, other: &MetricValues) -> MetricValues {
        let (a, b) = (self.to_array(), other.to_array());
        MetricValues::from_array(std::array::from_fn(|i| b[i] - a[i]))
    }

    /// Sum of absolute per-metric differences.
    pub fn total_abs_diff(&self, other: &MetricValues) -> f64 {
        self.diff(other).to_array().iter().map(|d| d.abs()).sum()
    }
}

/// Metric values of a single layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutMetrics {
    pub canvas_id: String,
    pub layout_id: String,
    pub n_elements: usize,
    pub n_valid: usize,
    pub values: [Option<f64>; 8],
    pub diagnostics: Vec<Diagnostic>,
}

impl LayoutMetrics {
    pub fn get(&self, m: Metric) -> Option<f64> {
        self.values[m.slot()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MetricCount {
    pub evaluated: usize,
    pub excluded: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutDiagnostics {
    pub canvas_id: String,
    pub layout_id: String,
    pub diagnostics: Vec<Diagnostic>,
}

/// Per-metric means over the layouts that define them.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricReport {
    pub n_layouts: usize,
    pub val: Option<f64>,
    pub ove: Option<f64>,
    pub ali: Option<f64>,
    pub und_l: Option<f64>,
    pub und_s: Option<f64>,
    pub uti: Option<f64>,
    pub occ: Option<f64>,
    pub rea: Option<f64>,
    pub counts: std::collections::BTreeMap<Metric, MetricCount>,
    pub diagnostics: Vec<LayoutDiagnostics>,
    /// Per-layout rows in aggregation order.
    #[serde(skip)]
    pub per_layout: Vec<LayoutMetrics>,
}

impl MetricReport {
    pub fn get(&self, m: Metric) -> Option<f64> {
        match m {
            Metric::Val => self.val,
            Metric::Ove => self.ove,
            Metric::Ali => self.ali,
            Metric::UndL => self.und_l,
            Metric::UndS => self.und_s,
            Metric::Uti => self.uti,
            Metric::Occ => self.occ,
            Metric::Rea => self.rea,
        }
    }

    fn set(&mut self, m: Metric, v: Option<f64>) {
        let slot = match m {
            Metric::Val => &mut self.val,
            Metric::Ove => &mut self.ove,
            Metric::Ali => &mut self.ali,
            Metric::UndL => &mut self.und_l,
            Metric::UndS => &mut self.und_s,
            Metric::Uti => &mut self.uti,
            Metric::Occ => &mut self.occ,
            Metric::Rea => &mut self.rea,
        };
        *slot = v;
    }

    /// A report holding just the given values, as for a published table row.
    pub fn from_values(values: &MetricValues) -> Result<MetricReport, MetricError> {
        let mut report = MetricReport::default();
        for (m, v) in Metric::ALL.into_iter().zip(values.to_array()) {
            report.set(m, Some(v));
        }
        report.validate()?;
        Ok(report)
    }

    /// All eight values; fails if any is missing.
    pub fn values(&self) -> Result<MetricValues, MetricError> {
        let mut out = [0.0; 8];
        for m in Metric::ALL {
            out[m.slot()] = self.get(m).ok_or(MetricError::MissingMetric(m.name()))?;
        }
        Ok(MetricValues::from_array(out))
    }

    /// Range checks and `Und_s <= Und_l`.
    pub fn validate(&self) -> Result<(), MetricError> {
        for m in Metric::ALL {
            if let Some(v) = self.get(m) {
                if !(0.0..=1.0).contains(&v) {
                    return Err(MetricError::Invariant(format!("{m} = {v} outside [0, 1]")));
                }
            }
        }
        if let (Some(l), Some(s)) = (self.und_l, self.und_s) {
            if s > l {
                return Err(MetricError::Invariant(format!("und_s {s} exceeds und_l {l}")));
            }
        }
        Ok(())
    }
}

/// Sum of absolute differences of the eight metrics between two reports.
pub fn compute_ae(a: &MetricReport, b: &MetricReport) -> Result<f64, MetricError> {
    Ok(a.values()?.total_abs_diff(&b.values()?))
}

/// Supplies rasters for a layout during evaluation. `Err` carries the reason
/// the raster is unavailable.
pub trait RasterSource: Sync {
    fn saliency(&self, layout: &Layout) -> Result<Raster, String>;
    fn canvas(&self, layout: &Layout) -> Result<Raster, String>;
}

/// A source with no rasters at all.
pub struct NoRasters;

impl RasterSource for NoRasters {
    fn saliency(&self, _: &Layout) -> Result<Raster, String> {
        Err("no saliency maps supplied".into())
    }

    fn canvas(&self, _: &Layout) -> Result<Raster, String> {
        Err("no canvas images supplied".into())
    }
}

/// A layout with whatever rasters are available for it.
#[derive(Debug, Clone)]
pub struct EvalItem {
    pub layout: Layout,
    pub saliency: Option<Raster>,
    pub canvas: Option<Raster>,
}

impl EvalItem {
    pub fn new(layout: Layout) -> Self {
        EvalItem { layout, saliency: None, canvas: None }
    }
}

/// Computes the selected metrics for one layout.
pub fn evaluate_layout(layout: &Layout, selection: MetricSelection, source: &dyn RasterSource) -> LayoutMetrics {
    compute_layout(
        layout,
        selection,
        || source.saliency(layout).map(Cow::Owned),
        || source.canvas(layout).map(Cow::Owned),
    )
}

fn compute_layout<'r>(
    layout: &Layout,
    selection: MetricSelection,
    saliency: impl FnOnce() -> Result<Cow<'r, Raster>, String>,
    canvas: impl FnOnce() -> Result<Cow<'r, Raster>, String>,
) -> LayoutMetrics {
    let mut values = [None; 8];
    let mut diagnostics = Vec::new();
    let wants = |m| selection.contains(m);

    if wants(Metric::Val) {
        values[Metric::Val.slot()] = metric_validity(layout);
        if values[Metric::Val.slot()].is_none() {
            diagnostics.push(Diagnostic::EmptyLayout);
        }
    }
    if wants(Metric::Ove) {
        values[Metric::Ove.slot()] = metric_overlay(layout);
        if values[Metric::Ove.slot()].is_none() {
            diagnostics.push(Diagnostic::FewOverlayPairs);
        }
    }
    if wants(Metric::Ali) {
        values[Metric::Ali.slot()] = Some(metric_alignment(layout));
    }
    if wants(Metric::UndL) || wants(Metric::UndS) {
        match metric_underlay(layout) {
            Some((l, s)) => {
                if wants(Metric::UndL) {
                    values[Metric::UndL.slot()] = Some(l);
                }
                if wants(Metric::UndS) {
                    values[Metric::UndS.slot()] = Some(s);
                }
            }
            None => diagnostics.push(Diagnostic::NoValidUnderlay),
        }
        let orphans = group_by_underlay(layout).orphans.len();
        if orphans > 0 {
            diagnostics.push(Diagnostic::OrphanUnderlays(orphans));
        }
    }

    if selection.needs_saliency() {
        let saliency = saliency().and_then(|s| {
            s.check_dims(layout.canvas_w, layout.canvas_h).map_err(|e| e.to_string())?;
            Ok(s)
        });
        match saliency {
            Ok(s) => {
                if wants(Metric::Uti) {
                    // dimensions already checked, so these cannot fail
                    if let Ok(v) = metric_utility(layout, &s) {
                        values[Metric::Uti.slot()] = Some(v.value);
                        if v.degenerate {
                            diagnostics.push(Diagnostic::FullySalient);
                        }
                    }
                }
                if wants(Metric::Occ) {
                    if let Ok(v) = metric_occlusion(layout, &s) {
                        values[Metric::Occ.slot()] = Some(v.value);
                        if v.degenerate {
                            diagnostics.push(Diagnostic::NoCoverage);
                        }
                    }
                }
            }
            Err(why) => diagnostics.push(Diagnostic::MissingSaliency(why)),
        }
    }
    if selection.needs_canvas() {
        match canvas().and_then(|c| metric_readability(layout, &c).map_err(|e| e.to_string())) {
            Ok(v) => {
                values[Metric::Rea.slot()] = Some(v.value);
                if v.degenerate {
                    diagnostics.push(Diagnostic::EmptyReadabilityRegion);
                }
            }
            Err(why) => diagnostics.push(Diagnostic::MissingCanvas(why)),
        }
    }

    LayoutMetrics {
        canvas_id: layout.canvas_id.clone(),
        layout_id: layout.layout_id.clone(),
        n_elements: non_pad(layout).count(),
        n_valid: layout.valid_elements().count(),
        values,
        diagnostics,
    }
}

fn element_cmp(a: &Element, b: &Element) -> Ordering {
    a.class
        .cmp(&b.class)
        .then(a.bbox.x1.total_cmp(&b.bbox.x1))
        .then(a.bbox.y1.total_cmp(&b.bbox.y1))
        .then(a.bbox.x2.total_cmp(&b.bbox.x2))
        .then(a.bbox.y2.total_cmp(&b.bbox.y2))
        .then(a.index.cmp(&b.index))
}

/// Canonical aggregation order: canvas id, layout id, then content.
pub fn canonical_cmp(a: &Layout, b: &Layout) -> Ordering {
    a.canvas_id
        .cmp(&b.canvas_id)
        .then_with(|| a.layout_id.cmp(&b.layout_id))
        .then_with(|| (a.canvas_w, a.canvas_h).cmp(&(b.canvas_w, b.canvas_h)))
        .then_with(|| {
            a.elements
                .iter()
                .zip(&b.elements)
                .map(|(x, y)| element_cmp(x, y))
                .find(|o| o.is_ne())
                .unwrap_or_else(|| a.elements.len().cmp(&b.elements.len()))
        })
}

/// Folds per-layout rows (already in canonical order) into a report.
pub fn aggregate(selection: MetricSelection, rows: Vec<LayoutMetrics>) -> Result<MetricReport, MetricError> {
    let mut report = MetricReport { n_layouts: rows.len(), ..Default::default() };
    for m in Metric::ALL {
        if !selection.contains(m) {
            continue;
        }
        let mut sum = 0.0;
        let mut count = MetricCount::default();
        for row in &rows {
            match row.get(m) {
                Some(v) => {
                    sum += v;
                    count.evaluated += 1;
                }
                None => count.excluded += 1,
            }
        }
        report.set(m, (count.evaluated > 0).then(|| sum / count.evaluated as f64));
        report.counts.insert(m, count);
    }
    report.diagnostics = rows
        .iter()
        .filter(|r| !r.diagnostics.is_empty())
        .map(|r| LayoutDiagnostics {
            canvas_id: r.canvas_id.clone(),
            layout_id: r.layout_id.clone(),
            diagnostics: r.diagnostics.clone(),
        })
        .collect();
    report.per_layout = rows;
    report.validate()?;
    Ok(report)
}

/// Evaluates layouts whose rasters come from `source`, using up to `jobs`
/// worker threads (`None` = all cores). The result does not depend on the
/// input order or on `jobs`.
pub fn evaluate_with(
    layouts: &[Layout],
    selection: MetricSelection,
    source: &dyn RasterSource,
    jobs: Option<usize>,
) -> Result<MetricReport, MetricError> {
    let mut order: Vec<usize> = (0..layouts.len()).collect();
    order.sort_by(|&a, &b| canonical_cmp(&layouts[a], &layouts[b]));
    let compute = || -> Vec<LayoutMetrics> {
        order.par_iter().map(|&i| evaluate_layout(&layouts[i], selection, source)).collect()
    };
    let rows = match jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| MetricError::Invariant(format!("thread pool: {e}")))?
            .install(compute),
        None => compute(),
    };
    aggregate(selection, rows)
}

fn borrowed<'r>(raster: &'r Option<Raster>, what: &str) -> Result<Cow<'r, Raster>, String> {
    raster.as_ref().map(Cow::Borrowed).ok_or_else(|| format!("no {what}"))
}

/// Evaluates layouts paired with in-memory rasters.
pub fn evaluate(items: &[EvalItem], selection: MetricSelection) -> Result<MetricReport, MetricError> {
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.sort_by(|&a, &b| canonical_cmp(&items[a].layout, &items[b].layout));
    let rows = order
        .par_iter()
        .map(|&i| {
            let item = &items[i];
            compute_layout(
                &item.layout,
                selection,
                || borrowed(&item.saliency, "saliency map"),
                || borrowed(&item.canvas, "canvas image"),
            )
        })
        .collect();
    aggregate(selection, rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ElementClass::{Logo, Text, Underlay};

    fn layout(items: &[(ElementClass, [f64; 4])]) -> Layout {
        Layout::new("c", 100, 100, items.iter().map(|&(c, b)| (c, BBox::from(b)))).unwrap()
    }

    #[test]
    fn validity_ratio() {
        let l = layout(&[
            (Text, [0.0, 0.0, 20.0, 20.0]),
            (Text, [30.0, 30.0, 50.0, 50.0]),
            (Logo, [60.0, 60.0, 80.0, 80.0]),
            (Text, [200.0, 200.0, 220.0, 220.0]),
        ]);
        assert_eq!(metric_validity(&l), Some(0.75));
        assert_eq!(metric_validity(&layout(&[])), None);
        let outside = layout(&[(Text, [-50.0, -50.0, -1.0, -1.0])]);
        assert_eq!(metric_validity(&outside), Some(0.0));
    }

    #[test]
    fn overlay_cases() {
        let same = layout(&[(Text, [0.0, 0.0, 20.0, 20.0]), (Text, [0.0, 0.0, 20.0, 20.0])]);
        assert_eq!(metric_overlay(&same), Some(1.0));
        let apart = layout(&[(Text, [0.0, 0.0, 20.0, 20.0]), (Logo, [50.0, 50.0, 70.0, 70.0])]);
        assert_eq!(metric_overlay(&apart), Some(0.0));
        // scaled copy of the 1/7 pair, plus a distant third text
        let three = layout(&[
            (Text, [0.0, 0.0, 20.0, 20.0]),
            (Text, [10.0, 10.0, 30.0, 30.0]),
            (Text, [60.0, 60.0, 80.0, 80.0]),
        ]);
        assert!((metric_overlay(&three).unwrap() - 1.0 / 21.0).abs() < 1e-12);
        let with_underlay = layout(&[(Text, [0.0, 0.0, 20.0, 20.0]), (Underlay, [0.0, 0.0, 20.0, 20.0])]);
        assert_eq!(metric_overlay(&with_underlay), None);
    }

    #[test]
    fn alignment_cases() {
        let shared_left = layout(&[(Text, [10.0, 10.0, 30.0, 30.0]), (Text, [10.0, 50.0, 60.0, 90.0])]);
        assert_eq!(metric_alignment(&shared_left), 0.0);
        assert_eq!(metric_alignment(&layout(&[(Text, [10.0, 10.0, 30.0, 30.0])])), 0.0);
        let pair = layout(&[(Text, [10.0, 10.0, 30.0, 30.0]), (Text, [12.0, 50.0, 40.0, 70.0])]);
        assert!((metric_alignment(&pair) - 0.02).abs() < 1e-12);
    }

    #[test]
    fn underlay_cases() {
        let inside = layout(&[(Underlay, [0.0, 0.0, 10.0, 10.0]), (Text, [2.0, 2.0, 8.0, 8.0])]);
        assert_eq!(metric_underlay(&inside), Some((1.0, 1.0)));
        let half = layout(&[(Underlay, [0.0, 0.0, 10.0, 10.0]), (Text, [5.0, 2.0, 15.0, 8.0])]);
        assert_eq!(metric_underlay(&half), Some((0.5, 0.0)));
        assert_eq!(metric_underlay(&layout(&[(Text, [0.0, 0.0, 10.0, 10.0])])), None);
        // boundary touching counts as inside
        let touching = layout(&[(Underlay, [0.0, 0.0, 10.0, 10.0]), (Text, [0.0, 0.0, 10.0, 5.0])]);
        assert_eq!(metric_underlay(&touching), Some((1.0, 1.0)));
    }

    #[test]
    fn utility_and_occlusion() {
        let l = layout(&[(Text, [0.0, 0.0, 50.0, 50.0])]);
        let zero = Raster::filled(100, 100, 0.0).unwrap();
        assert_eq!(metric_utility(&l, &zero).unwrap().value, 0.25);
        let none = layout(&[]);
        assert_eq!(metric_utility(&none, &zero).unwrap().value, 0.0);
        let one = Raster::filled(100, 100, 1.0).unwrap();
        assert_eq!(metric_utility(&l, &one).unwrap(), ContentValue { value: 0.0, degenerate: true });

        let half = Raster::filled(100, 100, 0.5).unwrap();
        assert_eq!(metric_occlusion(&l, &half).unwrap().value, 0.5);
        assert_eq!(metric_occlusion(&l, &zero).unwrap().value, 0.0);
        assert_eq!(metric_occlusion(&none, &half).unwrap(), ContentValue { value: 0.0, degenerate: true });

        let small = Raster::filled(50, 50, 0.0).unwrap();
        assert!(metric_utility(&l, &small).is_err());
        assert!(metric_occlusion(&l, &small).is_err());
    }

    #[test]
    fn readability_conventions() {
        let l = layout(&[(Text, [10.0, 10.0, 40.0, 40.0])]);
        let flat = Raster::filled(100, 100, 0.3).unwrap();
        assert_eq!(metric_readability(&l, &flat).unwrap().value, 0.0);
        let covered = layout(&[(Text, [10.0, 10.0, 40.0, 40.0]), (Underlay, [0.0, 0.0, 50.0, 50.0])]);
        let edge = Raster::from_fn(100, 100, |x, _| if x < 50 { 0.0 } else { 1.0 }).unwrap();
        assert_eq!(metric_readability(&covered, &edge).unwrap(), ContentValue { value: 0.0, degenerate: true });
        assert!(metric_readability(&l, &Raster::filled(10, 10, 0.0).unwrap()).is_err());
    }

    #[test]
    fn readability_step_edge_by_hand() {
        // text spans columns 45..55 and rows 0..10; step between columns 49 and 50.
        // Columns 49 and 50 see gx = 1, gy = 0 -> 1/sqrt(2); others 0.
        let l = layout(&[(Text, [45.0, 0.0, 55.0, 10.0])]);
        let edge = Raster::from_fn(100, 100, |x, _| if x < 50 { 0.0 } else { 1.0 }).unwrap();
        let v = metric_readability(&l, &edge).unwrap().value;
        assert!((v - 2.0 / 10.0 / std::f64::consts::SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn evaluate_means_and_exclusions() {
        let a = layout(&[(Text, [0.0, 0.0, 50.0, 50.0])]);
        let b = layout(&[(Text, [0.0, 0.0, 50.0, 50.0]), (Text, [200.0, 0.0, 210.0, 10.0])]);
        let mut items = vec![EvalItem::new(a.clone()), EvalItem::new(b)];
        items[0].saliency = Some(Raster::filled(100, 100, 0.0).unwrap());
        let report = evaluate(&items, MetricSelection::all()).unwrap();
        assert_eq!(report.val, Some(0.75));
        assert_eq!(report.uti, Some(0.25));
        assert_eq!(report.counts[&Metric::Uti], MetricCount { evaluated: 1, excluded: 1 });
        assert_eq!(report.counts[&Metric::Rea], MetricCount { evaluated: 0, excluded: 2 });
        assert_eq!(report.rea, None);
        assert_eq!(report.ove, None);

        let single = evaluate(&[EvalItem::new(a.clone())], MetricSelection::graphic()).unwrap();
        assert_eq!(single.val, Some(1.0));
        assert_eq!(single.ali, Some(0.0));
        assert_eq!(single.uti, None);
        assert!(!single.counts.contains_key(&Metric::Uti));
    }

    #[test]
    fn ae_from_published_diffs() {
        let zero = MetricReport::from_values(&MetricValues::default()).unwrap();
        assert_eq!(compute_ae(&zero, &zero).unwrap(), 0.0);
        let mut partial = zero.clone();
        partial.rea = None;
        assert_eq!(compute_ae(&zero, &partial), Err(MetricError::MissingMetric("rea")));
    }

    #[test]
    fn report_rejects_strict_above_loose() {
        let mut v = MetricValues { und_l: 0.3, und_s: 0.4, ..Default::default() };
        assert!(MetricReport::from_values(&v).is_err());
        v.und_s = 0.3;
        assert!(MetricReport::from_values(&v).is_ok());
    }

    #[test]
    fn selection_parsing() {
        let s: MetricSelection = "val, und ,rea".parse().unwrap();
        assert!(s.contains(Metric::Val) && s.contains(Metric::UndS) && s.contains(Metric::Rea));
        assert!(!s.contains(Metric::Ove));
        assert_eq!("all".parse::<MetricSelection>().unwrap(), MetricSelection::all());
        assert_eq!("graphic".parse::<MetricSelection>().unwrap(), MetricSelection::graphic());
        assert!("bogus".parse::<MetricSelection>().is_err());
    }
}
