//! Design-sequence formation, layout metrics, and benchmark plumbing for
//! content-aware poster layouts.
//!
//! * [`geometry`]: elements, layouts, and exact box geometry.
//! * [`dsf`]: design sequences and alternative orderings.
//! * [`raster`] / [`metrics`]: coverage masks and the eight layout metrics.
//! * [`dataset`]: annotation and raster files, dataset statistics.
//! * [`baseline`]: seeded layout generators.
//! * [`render`]: wireframe overlays.

pub mod baseline;
pub mod dataset;
pub mod dsf;
pub mod error;
pub mod geometry;
pub mod metrics;
pub mod raster;
pub mod render;

pub use dsf::{form_design_sequence, group_by_underlay, order_geometric, order_random, DesignSequence, Strategy};
pub use error::{DatasetError, GenError, GeometryError, MetricError, RecordError, SequenceError};
pub use geometry::{BBox, CenterBox, Element, ElementClass, Layout, Split};
pub use metrics::{compute_ae, evaluate, Metric, MetricReport, MetricSelection, MetricValues};
pub use raster::{composite_saliency, CoverageMask, Raster, SaliencyRaster};
