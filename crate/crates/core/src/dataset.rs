//! Annotation, raster, and sequence file formats, plus dataset statistics.
//!
//! # Native annotation format
//!
//! UTF-8 JSON lines. The first line is a header
//! `{"format": "layoutbench.annotations", "version": 1}`; every following
//! non-blank line is one layout record:
//!
//! ```json
//! {"canvas_id": "0001", "layout_id": "", "split": "train",
//!  "canvas_w": 513, "canvas_h": 750,
//!  "elements": [{"class": "text", "box": [x1, y1, x2, y2]}]}
//! ```
//!
//! `layout_id` (default `""`) and `split` (`train` | `test`, default
//! `train`) are optional. `class` is one of `text`, `logo`, `underlay`;
//! boxes are corner form in canvas pixels and may be real-valued. Element
//! indices are the positions in `elements`. A file without a header line
//! is read as version 1.
//!
//! # Sequence format
//!
//! Same layout records, under a header naming `layoutbench.sequences` and
//! carrying `strategy`, `seed` and `length`. Each element gains `index`
//! (its position in the source record) and `order` (its position in the
//! sequence); padding entries have class `pad`. Records also list `orphans`,
//! the indices of underlays that decorate nothing.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dsf::DesignSequence;
use crate::error::{DatasetError, GeometryError, RecordError};
use crate::geometry::{BBox, Element, ElementClass, Layout, Split};
use crate::metrics::RasterSource;
use crate::raster::Raster;

pub const ANNOTATION_FORMAT: &str = "layoutbench.annotations";
pub const SEQUENCE_FORMAT: &str = "layoutbench.sequences";
pub const FORMAT_VERSION: u32 = 1;

/// Layouts with more elements than this count as complex.
pub const COMPLEX_LAYOUT_THRESHOLD: usize = 10;

pub const IMAGE_EXTENSIONS: [&str; 5] = ["png", "jpg", "jpeg", "PNG", "JPG"];

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordElement {
    pub class: String,
    #[serde(rename = "box")]
    pub bbox: [f64; 4],
}

/// One line of the native annotation format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotationRecord {
    pub canvas_id: String,
    #[serde(default)]
    pub layout_id: String,
    #[serde(default)]
    pub split: Split,
    pub canvas_w: u32,
    pub canvas_h: u32,
    pub elements: Vec<RecordElement>,
}

impl AnnotationRecord {
    pub fn from_layout(layout: &Layout) -> Self {
        AnnotationRecord {
            canvas_id: layout.canvas_id.clone(),
            layout_id: layout.layout_id.clone(),
            split: layout.split,
            canvas_w: layout.canvas_w,
            canvas_h: layout.canvas_h,
            elements: layout
                .elements
                .iter()
                .map(|e| RecordElement { class: e.class.to_string(), bbox: e.bbox.into() })
                .collect(),
        }
    }

    pub fn into_layout(self) -> Result<Layout, GeometryError> {
        let items = self
            .elements
            .iter()
            .map(|e| Ok((e.class.parse::<ElementClass>()?, BBox::from(e.bbox))))
            .collect::<Result<Vec<_>, GeometryError>>()?;
        let mut layout = Layout::new(self.canvas_id, self.canvas_w, self.canvas_h, items)?;
        layout.layout_id = self.layout_id;
        layout.split = self.split;
        Ok(layout)
    }
}

/// Published-dataset CSV adapter settings.
///
/// Each row names a canvas and one or more class ids and boxes. Class and
/// box cells may hold a scalar or a bracketed list (`[1, 2]`,
/// `[[0, 0, 10, 10], [5, 5, 9, 9]]`). Consecutive rows naming the same
/// canvas are merged into one layout, so both one-row-per-layout and
/// one-row-per-element files work.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TabularConfig {
    pub id_column: String,
    pub class_column: String,
    pub box_column: String,
    pub width_column: Option<String>,
    pub height_column: Option<String>,
    /// Canvas size used when the file has no size columns.
    pub canvas_width: u32,
    pub canvas_height: u32,
    pub split: Split,
    /// Class id (as written in the file) to class name.
    pub class_map: BTreeMap<String, String>,
}

impl Default for TabularConfig {
    fn default() -> Self {
        TabularConfig {
            id_column: "poster_path".into(),
            class_column: "cls_elem".into(),
            box_column: "box_elem".into(),
            width_column: None,
            height_column: None,
            canvas_width: 513,
            canvas_height: 750,
            split: Split::Train,
            class_map: [("1", "text"), ("2", "logo"), ("3", "underlay")]
                .into_iter()
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect(),
        }
    }
}

impl TabularConfig {
    pub fn from_toml_str(s: &str) -> Result<Self, DatasetError> {
        let cfg: TabularConfig = toml::from_str(s).map_err(|e| DatasetError::Config(e.to_string()))?;
        for name in cfg.class_map.values() {
            name.parse::<ElementClass>().map_err(|e| DatasetError::Config(e.to_string()))?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, DatasetError> {
        let text =
            std::fs::read_to_string(path).map_err(|source| DatasetError::Io { path: path.to_path_buf(), source })?;
        Self::from_toml_str(&text)
    }

    fn class_of(&self, id: &str) -> Option<ElementClass> {
        self.class_map.get(id.trim()).and_then(|n| n.parse().ok())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AnnotationFormat {
    Native,
    Tabular(TabularConfig),
}

impl AnnotationFormat {
    /// `.csv` / `.tsv` files use the tabular adapter, everything else is native.
    pub fn detect(path: &Path, tabular: Option<TabularConfig>) -> Self {
        match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
            Some("csv") | Some("tsv") => AnnotationFormat::Tabular(tabular.unwrap_or_default()),
            _ => AnnotationFormat::Native,
        }
    }
}

/// Result of reading an annotation file: the good layouts and per-record errors.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Loaded {
    pub layouts: Vec<Layout>,
    pub errors: Vec<RecordError>,
}

impl Loaded {
    /// Fails on the first bad record.
    pub fn strict(self) -> Result<Vec<Layout>, RecordError> {
        match self.errors.into_iter().next() {
            Some(e) => Err(e),
            None => Ok(self.layouts),
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io { path: path.to_path_buf(), source }
}

pub fn load_annotations(path: &Path, format: &AnnotationFormat) -> Result<Loaded, DatasetError> {
    let file = File::open(path).map_err(io_err(path))?;
    match format {
        AnnotationFormat::Native => read_native(BufReader::new(file)).map_err(|e| match e {
            DatasetError::Io { source, .. } => DatasetError::Io { path: path.to_path_buf(), source },
            other => other,
        }),
        AnnotationFormat::Tabular(cfg) => {
            let delimiter = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("tsv")) { b'\t' } else { b',' };
            read_tabular(file, cfg, delimiter)
        }
    }
}

/// Reads native JSON-lines records.
pub fn read_native(reader: impl BufRead) -> Result<Loaded, DatasetError> {
    let mut loaded = Loaded::default();
    let mut first = true;
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| DatasetError::Io { path: PathBuf::new(), source })?;
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        if std::mem::take(&mut first) {
            if let Ok(header) = serde_json::from_str::<Header>(&line) {
                if header.format != ANNOTATION_FORMAT {
                    return Err(DatasetError::Header(format!(
                        "expected format {ANNOTATION_FORMAT:?}, found {:?}",
                        header.format
                    )));
                }
                if header.version != FORMAT_VERSION {
                    return Err(DatasetError::Header(format!("unsupported version {}", header.version)));
                }
                continue;
            }
        }
        let parsed = serde_json::from_str::<AnnotationRecord>(&line)
            .map_err(|e| e.to_string())
            .and_then(|r| r.into_layout().map_err(|e| e.to_string()));
        match parsed {
            Ok(layout) => loaded.layouts.push(layout),
            Err(message) => loaded.errors.push(RecordError { line: line_no, message }),
        }
    }
    Ok(loaded)
}

pub fn write_native(mut out: impl Write, layouts: &[Layout]) -> Result<(), DatasetError> {
    let header = Header { format: ANNOTATION_FORMAT.into(), version: FORMAT_VERSION };
    let io = |source| DatasetError::Io { path: PathBuf::new(), source };
    writeln!(out, "{}", serde_json::to_string(&header)?).map_err(io)?;
    for layout in layouts {
        writeln!(out, "{}", serde_json::to_string(&AnnotationRecord::from_layout(layout))?).map_err(io)?;
    }
    out.flush().map_err(io)
}

pub fn save_annotations(path: &Path, layouts: &[Layout]) -> Result<(), DatasetError> {
    let file = File::create(path).map_err(io_err(path))?;
    write_native(BufWriter::new(file), layouts)
}

fn split_list(cell: &str) -> impl Iterator<Item = &str> {
    cell.split(|c: char| c == ',' || c.is_whitespace() || "[](){}".contains(c)).filter(|t| !t.is_empty())
}

fn canvas_stem(raw: &str) -> String {
    let raw = raw.trim();
    Path::new(raw).file_stem().and_then(|s| s.to_str()).map(str::to_string).unwrap_or_else(|| raw.to_string())
}

struct PendingLayout {
    canvas_id: String,
    line: usize,
    dims: (u32, u32),
    items: Vec<(ElementClass, BBox)>,
    error: Option<RecordError>,
}

/// Canvas dimensions and the elements of one tabular row.
type TabularRow = ((u32, u32), Vec<(ElementClass, BBox)>);

fn parse_tabular_row(
    record: &csv::StringRecord,
    columns: &TabularColumns,
    cfg: &TabularConfig,
) -> Result<TabularRow, String> {
    let cell = |i: usize| record.get(i).unwrap_or("");
    let dim = |col: Option<usize>, default: u32| -> Result<u32, String> {
        match col {
            Some(i) => cell(i)
                .trim()
                .parse::<f64>()
                .ok()
                .filter(|v| *v >= 1.0 && v.fract() == 0.0)
                .map(|v| v as u32)
                .ok_or_else(|| format!("bad canvas dimension {:?}", cell(i))),
            None => Ok(default),
        }
    };
    let dims = (dim(columns.width, cfg.canvas_width)?, dim(columns.height, cfg.canvas_height)?);

    let classes = split_list(cell(columns.class))
        .map(|id| {
            let id = id.strip_suffix(".0").unwrap_or(id);
            cfg.class_of(id).ok_or_else(|| format!("unknown class id {id:?}"))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let coords = split_list(cell(columns.bbox))
        .map(|t| t.parse::<f64>().map_err(|_| format!("malformed box value {t:?}")))
        .collect::<Result<Vec<_>, _>>()?;
    if coords.len() % 4 != 0 {
        return Err(format!("box cell holds {} numbers, not a multiple of 4", coords.len()));
    }
    if coords.len() / 4 != classes.len() {
        return Err(format!("{} classes but {} boxes", classes.len(), coords.len() / 4));
    }
    let items = classes
        .into_iter()
        .zip(coords.chunks_exact(4))
        .map(|(c, b)| BBox::new(b[0], b[1], b[2], b[3]).canonicalize().map(|bb| (c, bb)).map_err(|e| e.to_string()))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((dims, items))
}

struct TabularColumns {
    id: usize,
    class: usize,
    bbox: usize,
    width: Option<usize>,
    height: Option<usize>,
}

/// Reads the published-dataset CSV layout.
pub fn read_tabular(reader: impl std::io::Read, cfg: &TabularConfig, delimiter: u8) -> Result<Loaded, DatasetError> {
    let mut rdr = csv::ReaderBuilder::new().delimiter(delimiter).flexible(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| DatasetError::Header(format!("missing column {name:?}")))
    };
    let columns = TabularColumns {
        id: find(&cfg.id_column)?,
        class: find(&cfg.class_column)?,
        bbox: find(&cfg.box_column)?,
        width: cfg.width_column.as_deref().map(find).transpose()?,
        height: cfg.height_column.as_deref().map(find).transpose()?,
    };

    let mut loaded = Loaded::default();
    let mut pending: Option<PendingLayout> = None;
    let flush = |p: PendingLayout, loaded: &mut Loaded| match p.error {
        Some(e) => loaded.errors.push(e),
        None => match Layout::new(p.canvas_id, p.dims.0, p.dims.1, p.items) {
            Ok(mut layout) => {
                layout.split = cfg.split;
                loaded.layouts.push(layout);
            }
            Err(e) => loaded.errors.push(RecordError { line: p.line, message: e.to_string() }),
        },
    };

    for result in rdr.records() {
        let record = result?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let canvas_id = canvas_stem(record.get(columns.id).unwrap_or(""));
        if pending.as_ref().is_some_and(|p| p.canvas_id != canvas_id) {
            flush(pending.take().expect("checked"), &mut loaded);
        }
        let row = parse_tabular_row(&record, &columns, cfg);
        let p = pending.get_or_insert_with(|| PendingLayout {
            canvas_id: canvas_id.clone(),
            line,
            dims: (cfg.canvas_width, cfg.canvas_height),
            items: Vec::new(),
            error: None,
        });
        match row {
            Ok((dims, items)) if p.error.is_none() => {
                p.dims = dims;
                p.items.extend(items);
            }
            Ok(_) => {}
            Err(message) => {
                p.error.get_or_insert(RecordError { line, message });
            }
        }
    }
    if let Some(p) = pending {
        flush(p, &mut loaded);
    }
    Ok(loaded)
}

/// Decodes an image into a `[0, 1]` raster.
///
/// Grayscale images map `v -> v / 255`; color images are reduced to
/// luminance `0.299 R + 0.587 G + 0.114 B` first.
pub fn load_raster(path: &Path, expected: Option<(u32, u32)>) -> Result<Raster, DatasetError> {
    let img = image::open(path).map_err(|source| DatasetError::Image { path: path.to_path_buf(), source })?;
    let raster = raster_from_image(&img);
    if let Some((w, h)) = expected {
        if raster.width() != w || raster.height() != h {
            return Err(DatasetError::Dimensions {
                path: path.to_path_buf(),
                want_w: w,
                want_h: h,
                got_w: raster.width(),
                got_h: raster.height(),
            });
        }
    }
    Ok(raster)
}

pub fn raster_from_image(img: &image::DynamicImage) -> Raster {
    use image::DynamicImage;
    let (w, h) = (img.width(), img.height());
    let values: Vec<f64> = match img {
        DynamicImage::ImageLuma8(_) | DynamicImage::ImageLumaA8(_) => {
            img.to_luma8().into_raw().into_iter().map(|v| v as f64 / 255.0).collect()
        }
        _ => img
            .to_rgb8()
            .pixels()
            .map(|p| {
                let [r, g, b] = p.0;
                // integer weights keep pure white at exactly 1.0
                (299 * r as u32 + 587 * g as u32 + 114 * b as u32) as f64 / 255_000.0
            })
            .collect(),
    };
    Raster::new(w, h, values).expect("decoded pixels are within [0, 1]")
}

/// First image file named `<stem>.<ext>` in `dir`.
pub fn find_image(dir: &Path, stem: &str) -> Option<PathBuf> {
    IMAGE_EXTENSIONS.iter().map(|ext| dir.join(format!("{stem}.{ext}"))).find(|p| p.is_file())
}

/// Stems of the image files directly inside `dir`, sorted.
pub fn list_canvas_ids(dir: &Path) -> Result<Vec<String>, DatasetError> {
    let mut ids = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(io_err(dir))? {
        let path = entry.map_err(io_err(dir))?.path();
        let is_image = path.extension().and_then(|e| e.to_str()).is_some_and(|e| IMAGE_EXTENSIONS.contains(&e));
        if is_image && path.is_file() {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                ids.push(stem.to_string());
            }
        }
    }
    ids.sort();
    ids.dedup();
    Ok(ids)
}

/// Rasters read on demand from the directory convention
/// `canvases/<canvas_id>.<ext>` and `saliency_{1,2}/<canvas_id>.<ext>`.
#[derive(Debug, Clone, Default)]
pub struct DirectorySource {
    pub canvas_dir: Option<PathBuf>,
    /// One map is used as is; two are compounded by pixel-wise maximum.
    pub saliency_dirs: Vec<PathBuf>,
}

impl DirectorySource {
    fn load(dir: &Path, layout: &Layout) -> Result<Raster, String> {
        let path = find_image(dir, &layout.canvas_id)
            .ok_or_else(|| format!("no image for {:?} in {}", layout.canvas_id, dir.display()))?;
        load_raster(&path, Some((layout.canvas_w, layout.canvas_h))).map_err(|e| e.to_string())
    }
}

impl RasterSource for DirectorySource {
    fn saliency(&self, layout: &Layout) -> Result<Raster, String> {
        let mut maps = self.saliency_dirs.iter().map(|d| Self::load(d, layout));
        let first = maps.next().ok_or_else(|| "no saliency directory given".to_string())??;
        maps.try_fold(first, |acc, next| acc.composite_max(&next?).map_err(|e| e.to_string()))
    }

    fn canvas(&self, layout: &Layout) -> Result<Raster, String> {
        match &self.canvas_dir {
            Some(dir) => Self::load(dir, layout),
            None => Err("no canvas directory given".into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DatasetStats {
    pub n_pairs: usize,
    pub n_canvases: usize,
    /// Element count per layout -> number of layouts.
    pub histogram: BTreeMap<usize, usize>,
    pub max_elements: usize,
    pub class_counts: BTreeMap<String, usize>,
    /// Layouts with more than ten elements.
    pub n_complex: usize,
}

/// Counts over ingested layouts; `canvas_ids` are the canvases on offer
/// (duplicates count once).
pub fn dataset_stats<'a>(layouts: &[Layout], canvas_ids: impl IntoIterator<Item = &'a str>) -> DatasetStats {
    let mut stats = DatasetStats {
        n_pairs: layouts.len(),
        n_canvases: canvas_ids.into_iter().collect::<BTreeSet<_>>().len(),
        ..Default::default()
    };
    for layout in layouts {
        *stats.histogram.entry(layout.len()).or_default() += 1;
        stats.max_elements = stats.max_elements.max(layout.len());
        if layout.len() > COMPLEX_LAYOUT_THRESHOLD {
            stats.n_complex += 1;
        }
        for e in &layout.elements {
            *stats.class_counts.entry(e.class.to_string()).or_default() += 1;
        }
    }
    stats
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SequenceHeader {
    format: String,
    version: u32,
    strategy: String,
    seed: Option<u64>,
    length: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceElement {
    pub class: ElementClass,
    #[serde(rename = "box")]
    pub bbox: [f64; 4],
    pub index: usize,
    pub order: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceRecord {
    pub canvas_id: String,
    pub layout_id: String,
    pub split: Split,
    pub canvas_w: u32,
    pub canvas_h: u32,
    pub elements: Vec<SequenceElement>,
    pub orphans: Vec<usize>,
}

impl SequenceRecord {
    pub fn new(layout: &Layout, seq: &DesignSequence) -> Self {
        SequenceRecord {
            canvas_id: layout.canvas_id.clone(),
            layout_id: layout.layout_id.clone(),
            split: layout.split,
            canvas_w: layout.canvas_w,
            canvas_h: layout.canvas_h,
            elements: seq
                .entries
                .iter()
                .enumerate()
                .map(|(order, e): (usize, &Element)| SequenceElement {
                    class: e.class,
                    bbox: e.bbox.into(),
                    index: e.index,
                    order,
                })
                .collect(),
            orphans: seq.orphans.clone(),
        }
    }
}

/// Writes design sequences; all of them must share one strategy and length.
pub fn write_sequences(
    mut out: impl Write,
    strategy: crate::dsf::Strategy,
    length: Option<usize>,
    records: &[SequenceRecord],
) -> Result<(), DatasetError> {
    let header = SequenceHeader {
        format: SEQUENCE_FORMAT.into(),
        version: FORMAT_VERSION,
        strategy: strategy.name().into(),
        seed: strategy.seed(),
        length,
    };
    let io = |source| DatasetError::Io { path: PathBuf::new(), source };
    writeln!(out, "{}", serde_json::to_string(&header)?).map_err(io)?;
    for r in records {
        writeln!(out, "{}", serde_json::to_string(r)?).map_err(io)?;
    }
    out.flush().map_err(io)
}
