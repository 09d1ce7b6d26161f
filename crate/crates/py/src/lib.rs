//! Python bindings for the `layoutbench` crate.
//!
//! Boxes cross the boundary as `(x1, y1, x2, y2)` tuples in pixels and
//! rasters as row-major lists of rows with values in `[0, 1]`.

use std::collections::BTreeMap;
use std::path::PathBuf;

use layoutbench::dataset::{self, AnnotationFormat, TabularConfig};
use layoutbench::metrics::{evaluate_with, EvalItem, NoRasters};
use layoutbench::{BBox, ElementClass, MetricReport, MetricSelection, MetricValues, Raster, Strategy};
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

type PyBox = (f64, f64, f64, f64);
type PyElement = (&'static str, PyBox, usize);

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn bbox(b: PyBox) -> BBox {
    BBox::new(b.0, b.1, b.2, b.3)
}

fn tuple(b: &BBox) -> PyBox {
    (b.x1, b.y1, b.x2, b.y2)
}

/// A canvas and its elements. Boxes are canonicalized on construction.
#[pyclass(name = "Layout", module = "layoutbench", from_py_object)]
#[derive(Clone)]
struct PyLayout {
    inner: layoutbench::Layout,
}

#[pymethods]
impl PyLayout {
    #[new]
    #[pyo3(signature = (canvas_id, canvas_w, canvas_h, elements, layout_id = String::new()))]
    fn new(
        canvas_id: String,
        canvas_w: u32,
        canvas_h: u32,
        elements: Vec<(String, PyBox)>,
        layout_id: String,
    ) -> PyResult<Self> {
        let items = elements
            .into_iter()
            .map(|(class, b)| Ok((class.parse::<ElementClass>().map_err(value_error)?, bbox(b))))
            .collect::<PyResult<Vec<_>>>()?;
        let inner = layoutbench::Layout::new(canvas_id, canvas_w, canvas_h, items).map_err(value_error)?;
        Ok(PyLayout { inner: inner.with_layout_id(layout_id) })
    }

    #[getter]
    fn canvas_id(&self) -> &str {
        &self.inner.canvas_id
    }

    #[getter]
    fn layout_id(&self) -> &str {
        &self.inner.layout_id
    }

    #[getter]
    fn canvas_size(&self) -> (u32, u32) {
        (self.inner.canvas_w, self.inner.canvas_h)
    }

    /// `(class, box, index)` per element, in input order.
    #[getter]
    fn elements(&self) -> Vec<PyElement> {
        self.inner.elements.iter().map(|e| (e.class.as_str(), tuple(&e.bbox), e.index)).collect()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Layout({:?}, {}x{}, {} elements)",
            self.inner.canvas_id,
            self.inner.canvas_w,
            self.inner.canvas_h,
            self.inner.len()
        )
    }
}

#[pyfunction]
fn iou(a: PyBox, b: PyBox) -> f64 {
    bbox(a).iou(&bbox(b))
}

#[pyfunction]
fn giou(a: PyBox, b: PyBox) -> f64 {
    bbox(a).giou(&bbox(b))
}

/// Orders a layout. Returns `(elements, orphans)`: elements as
/// `(class, box, index)`, padded or truncated when `length` is given.
#[pyfunction]
#[pyo3(signature = (layout, strategy = "dsf", seed = 0, length = None))]
fn design_sequence(
    layout: &PyLayout,
    strategy: &str,
    seed: u64,
    length: Option<usize>,
) -> PyResult<(Vec<PyElement>, Vec<usize>)> {
    let strategy = match strategy {
        "dsf" => Strategy::Dsf,
        "geometric" => Strategy::Geometric,
        "random" => Strategy::Random(seed),
        other => return Err(PyValueError::new_err(format!("unknown strategy {other:?}"))),
    };
    let mut seq = strategy.apply(&layout.inner);
    if let Some(k) = length {
        seq = seq.fit_length(k).map_err(value_error)?;
    }
    let entries = seq.entries.iter().map(|e| (e.class.as_str(), tuple(&e.bbox), e.index)).collect();
    Ok((entries, seq.orphans))
}

fn raster(rows: Option<Vec<Vec<f64>>>) -> PyResult<Option<Raster>> {
    let Some(rows) = rows else { return Ok(None) };
    let h = rows.len() as u32;
    let w = rows.first().map_or(0, |r| r.len()) as u32;
    if rows.iter().any(|r| r.len() as u32 != w) {
        return Err(PyValueError::new_err("raster rows differ in length"));
    }
    Raster::new(w, h, rows.concat()).map(Some).map_err(value_error)
}

fn report_dict(report: &MetricReport) -> BTreeMap<&'static str, Option<f64>> {
    layoutbench::Metric::ALL.iter().map(|&m| (m.name(), report.get(m))).collect()
}

/// Metrics of one layout as a dict; a metric is `None` where undefined or
/// where its raster was not given.
#[pyfunction]
#[pyo3(signature = (layout, saliency = None, canvas = None, metrics = "all"))]
fn layout_metrics(
    layout: &PyLayout,
    saliency: Option<Vec<Vec<f64>>>,
    canvas: Option<Vec<Vec<f64>>>,
    metrics: &str,
) -> PyResult<BTreeMap<&'static str, Option<f64>>> {
    let selection: MetricSelection = metrics.parse().map_err(|e: String| PyValueError::new_err(e))?;
    let item = EvalItem { layout: layout.inner.clone(), saliency: raster(saliency)?, canvas: raster(canvas)? };
    let report = layoutbench::evaluate(&[item], selection).map_err(value_error)?;
    Ok(report_dict(&report))
}

/// Mean graphic metrics over many layouts.
#[pyfunction]
fn evaluate_graphic(layouts: Vec<PyLayout>) -> PyResult<BTreeMap<&'static str, Option<f64>>> {
    let layouts: Vec<_> = layouts.into_iter().map(|l| l.inner).collect();
    let report = evaluate_with(&layouts, MetricSelection::graphic(), &NoRasters, None).map_err(value_error)?;
    Ok(report_dict(&report))
}

fn values_of(d: &BTreeMap<String, f64>) -> PyResult<MetricValues> {
    let mut out = [0.0; 8];
    for (slot, m) in layoutbench::Metric::ALL.iter().enumerate() {
        out[slot] = *d.get(m.name()).ok_or_else(|| PyValueError::new_err(format!("missing metric {}", m.name())))?;
    }
    Ok(MetricValues::from_array(out))
}

/// Sum of absolute differences of the eight metrics between two dicts.
#[pyfunction]
fn compute_ae(a: BTreeMap<String, f64>, b: BTreeMap<String, f64>) -> PyResult<f64> {
    let ra = MetricReport::from_values(&values_of(&a)?).map_err(value_error)?;
    let rb = MetricReport::from_values(&values_of(&b)?).map_err(value_error)?;
    layoutbench::compute_ae(&ra, &rb).map_err(value_error)
}

/// Reads an annotation file. Native `.jsonl` or tabular `.csv`/`.tsv`;
/// `tabular_config` names a TOML file for the tabular adapter. Bad records
/// raise when `strict`, and are skipped otherwise.
#[pyfunction]
#[pyo3(signature = (path, tabular_config = None, strict = false))]
fn load_annotations(path: PathBuf, tabular_config: Option<PathBuf>, strict: bool) -> PyResult<Vec<PyLayout>> {
    let cfg = tabular_config.as_deref().map(TabularConfig::from_file).transpose().map_err(value_error)?;
    let format = AnnotationFormat::detect(&path, cfg);
    let loaded = dataset::load_annotations(&path, &format).map_err(|e| PyIOError::new_err(e.to_string()))?;
    let layouts = if strict { loaded.strict().map_err(value_error)? } else { loaded.layouts };
    Ok(layouts.into_iter().map(|inner| PyLayout { inner }).collect())
}

#[pyfunction]
fn save_annotations(path: PathBuf, layouts: Vec<PyLayout>) -> PyResult<()> {
    let layouts: Vec<_> = layouts.into_iter().map(|l| l.inner).collect();
    dataset::save_annotations(&path, &layouts).map_err(|e| PyIOError::new_err(e.to_string()))
}

/// Pair and canvas counts, the element-count histogram and the number of
/// layouts with more than ten elements.
#[pyfunction]
fn dataset_stats<'py>(py: Python<'py>, layouts: Vec<PyLayout>) -> PyResult<Bound<'py, PyDict>> {
    let layouts: Vec<_> = layouts.into_iter().map(|l| l.inner).collect();
    let stats = dataset::dataset_stats(&layouts, layouts.iter().map(|l| l.canvas_id.as_str()));
    let d = PyDict::new(py);
    d.set_item("n_pairs", stats.n_pairs)?;
    d.set_item("n_canvases", stats.n_canvases)?;
    d.set_item("max_elements", stats.max_elements)?;
    d.set_item("n_complex", stats.n_complex)?;
    d.set_item("histogram", stats.histogram)?;
    d.set_item("class_counts", stats.class_counts)?;
    Ok(d)
}

#[pymodule]
#[pyo3(name = "layoutbench")]
fn layoutbench_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyLayout>()?;
    m.add_function(wrap_pyfunction!(iou, m)?)?;
    m.add_function(wrap_pyfunction!(giou, m)?)?;
    m.add_function(wrap_pyfunction!(design_sequence, m)?)?;
    m.add_function(wrap_pyfunction!(layout_metrics, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_graphic, m)?)?;
    m.add_function(wrap_pyfunction!(compute_ae, m)?)?;
    m.add_function(wrap_pyfunction!(load_annotations, m)?)?;
    m.add_function(wrap_pyfunction!(save_annotations, m)?)?;
    m.add_function(wrap_pyfunction!(dataset_stats, m)?)?;
    Ok(())
}
