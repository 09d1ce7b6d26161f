//! Rendering of reports as tables, JSON and CSV.

use std::fmt::Write as _;

use layoutbench::dataset::DatasetStats;
use layoutbench::metrics::LayoutMetrics;
use layoutbench::{Metric, MetricReport, Strategy};
use serde_json::{json, Map, Value};

pub const SCHEMA_VERSION: u32 = 1;

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn fixed(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into())
}

fn pretty(value: &Value) -> Result<Vec<u8>, serde_json::Error> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn metric_map(get: impl Fn(Metric) -> Option<f64>) -> Value {
    let map: Map<String, Value> = Metric::ALL.iter().map(|&m| (m.name().to_string(), json!(get(m)))).collect();
    Value::Object(map)
}

pub fn report_json(report: &MetricReport, load_errors: &[String]) -> Result<Vec<u8>, serde_json::Error> {
    let mut value = serde_json::to_value(report)?;
    if let Value::Object(map) = &mut value {
        map.insert("schema_version".into(), json!(SCHEMA_VERSION));
        map.insert("load_errors".into(), json!(load_errors));
    }
    pretty(&value)
}

pub fn per_layout_csv(rows: &[LayoutMetrics]) -> Result<Vec<u8>, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["canvas_id", "layout_id", "n_elements", "n_valid"];
    header.extend(Metric::ALL.iter().map(|m| m.name()));
    header.push("diagnostics");
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![r.canvas_id.clone(), r.layout_id.clone(), r.n_elements.to_string(), r.n_valid.to_string()];
        rec.extend(r.values.iter().map(|v| cell(*v)));
        rec.push(r.diagnostics.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(";"));
        w.write_record(&rec)?;
    }
    w.into_inner().map_err(|e| e.into_error().into())
}

pub fn report_table(report: &MetricReport) -> String {
    let mut s = format!(
        "layouts: {}\n{:<8} {:>8} {:>10} {:>9}\n",
        report.n_layouts, "metric", "value", "evaluated", "excluded"
    );
    for m in Metric::ALL {
        let c = report.counts.get(&m).copied().unwrap_or_default();
        let _ = writeln!(s, "{:<8} {:>8} {:>10} {:>9}", m.name(), fixed(report.get(m)), c.evaluated, c.excluded);
    }
    s
}

pub fn report_csv(report: &MetricReport) -> Result<Vec<u8>, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["metric", "value", "evaluated", "excluded"])?;
    for m in Metric::ALL {
        let c = report.counts.get(&m).copied().unwrap_or_default();
        w.write_record([m.name().to_string(), cell(report.get(m)), c.evaluated.to_string(), c.excluded.to_string()])?;
    }
    w.into_inner().map_err(|e| e.into_error().into())
}

const ROW_KINDS: [&str; 3] = ["full", "short", "diff"];

/// One strategy's reports at the full and the truncated length.
pub struct AblationRow {
    pub strategy: Strategy,
    pub full: MetricReport,
    pub short: MetricReport,
}

impl AblationRow {
    pub fn new(strategy: Strategy, full: MetricReport, short: MetricReport) -> Self {
        AblationRow { strategy, full, short }
    }

    /// Truncated minus full; missing when either side is.
    pub fn diff(&self, m: Metric) -> Option<f64> {
        Some(self.short.get(m)? - self.full.get(m)?)
    }

    fn value(&self, kind: &str, m: Metric) -> Option<f64> {
        match kind {
            "full" => self.full.get(m),
            "short" => self.short.get(m),
            _ => self.diff(m),
        }
    }

    /// Sum of absolute differences over all eight metrics, if all are present.
    pub fn ae(&self) -> Option<f64> {
        Metric::ALL.iter().map(|&m| self.diff(m).map(f64::abs)).sum()
    }
}

pub fn ablation_json(full: usize, short: usize, rows: &[AblationRow]) -> Result<Vec<u8>, serde_json::Error> {
    let strategies: Vec<Value> = rows
        .iter()
        .map(|r| {
            json!({
                "strategy": r.strategy.name(),
                "seed": r.strategy.seed(),
                "full": metric_map(|m| r.full.get(m)),
                "short": metric_map(|m| r.short.get(m)),
                "diff": metric_map(|m| r.diff(m)),
                "ae": r.ae(),
            })
        })
        .collect();
    pretty(&json!({
        "schema_version": SCHEMA_VERSION,
        "length_full": full,
        "length_short": short,
        "strategies": strategies,
    }))
}

pub fn ablation_csv(rows: &[AblationRow]) -> Result<Vec<u8>, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["strategy", "row"];
    header.extend(Metric::ALL.iter().map(|m| m.name()));
    header.push("ae");
    w.write_record(&header)?;
    for r in rows {
        for kind in ROW_KINDS {
            let mut rec = vec![r.strategy.name().to_string(), kind.to_string()];
            rec.extend(Metric::ALL.iter().map(|&m| cell(r.value(kind, m))));
            rec.push(cell(if kind == "diff" { r.ae() } else { None }));
            w.write_record(&rec)?;
        }
    }
    w.into_inner().map_err(|e| e.into_error().into())
}

pub fn ablation_table(full: usize, short: usize, rows: &[AblationRow]) -> String {
    let mut s = format!("sequence length {full} -> {short}\n{:<10} {:<6}", "strategy", "row");
    for m in Metric::ALL {
        let _ = write!(s, " {:>8}", m.name());
    }
    s.push_str(&format!(" {:>8}\n", "ae"));
    for r in rows {
        for kind in ROW_KINDS {
            let _ = write!(s, "{:<10} {:<6}", r.strategy.name(), kind);
            for m in Metric::ALL {
                let _ = write!(s, " {:>8}", fixed(r.value(kind, m)));
            }
            let ae = if kind == "diff" { fixed(r.ae()) } else { String::new() };
            let _ = writeln!(s, " {ae:>8}");
        }
    }
    s
}

pub fn stats_json(stats: &DatasetStats) -> Result<Vec<u8>, serde_json::Error> {
    let mut value = serde_json::to_value(stats)?;
    if let Value::Object(map) = &mut value {
        map.insert("schema_version".into(), json!(SCHEMA_VERSION));
    }
    pretty(&value)
}

pub fn stats_table(stats: &DatasetStats) -> String {
    let mut s = format!(
        "pairs: {}\ncanvases: {}\nmax elements: {}\nlayouts with more than 10 elements: {}\n",
        stats.n_pairs, stats.n_canvases, stats.max_elements, stats.n_complex
    );
    for (class, n) in &stats.class_counts {
        let _ = writeln!(s, "{class}: {n}");
    }
    s.push_str("elements  layouts\n");
    for (k, n) in &stats.histogram {
        let _ = writeln!(s, "{k:>8}  {n:>7}");
    }
    s
}

pub fn stats_csv(stats: &DatasetStats) -> Result<Vec<u8>, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["n_elements", "n_layouts"])?;
    for (k, n) in &stats.histogram {
        w.write_record([k.to_string(), n.to_string()])?;
    }
    w.into_inner().map_err(|e| e.into_error().into())
}
