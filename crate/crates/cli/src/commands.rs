use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use layoutbench::baseline::{random_layout, saliency_grid_layout, GenSpec};
use layoutbench::dataset::{
    dataset_stats, find_image, list_canvas_ids, load_annotations, load_raster, write_native, write_sequences,
    AnnotationFormat, DirectorySource, SequenceRecord, TabularConfig,
};
use layoutbench::dsf::max_sequence_length;
use layoutbench::metrics::{evaluate_with, Diagnostic};
use layoutbench::render::render_png;
use layoutbench::{Layout, MetricReport, MetricSelection, Strategy};
use rayon::prelude::*;

use crate::output::{self, AblationRow};
use crate::{BaselineArg, Format, InputArgs, StrategyArg};

pub enum Failure {
    Input(anyhow::Error),
    Internal(anyhow::Error),
}

type CmdResult<T = ()> = Result<T, Failure>;

fn input<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Input(e.into())
}

fn internal<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Internal(e.into())
}

struct Inputs {
    annotations: PathBuf,
    format: AnnotationFormat,
    canvas_dir: Option<PathBuf>,
    saliency_dirs: Vec<PathBuf>,
    image_dir: Option<PathBuf>,
    jobs: Option<usize>,
    strict: bool,
}

fn existing_dir(path: &Path) -> CmdResult<PathBuf> {
    if path.is_dir() {
        Ok(path.to_path_buf())
    } else {
        Err(input(anyhow!("not a directory: {}", path.display())))
    }
}

fn resolve(args: &InputArgs) -> CmdResult<Inputs> {
    let root = args.data_root.as_deref();
    let under_root = |name: &str| root.map(|r| r.join(name));

    let annotations = match &args.annotations {
        Some(p) => p.clone(),
        None => ["annotations.jsonl", "annotations.csv"]
            .iter()
            .filter_map(|n| under_root(n))
            .find(|p| p.is_file())
            .ok_or_else(|| input(anyhow!("no --annotations given and no annotations file under the data root")))?,
    };
    let tabular = args.tabular_config.as_deref().map(TabularConfig::from_file).transpose().map_err(input)?;
    let format = AnnotationFormat::detect(&annotations, tabular);

    let canvas_dir = match &args.canvas_dir {
        Some(d) => Some(existing_dir(d)?),
        None => under_root("canvases").filter(|p| p.is_dir()),
    };
    let saliency_dirs = if args.saliency_dirs.is_empty() {
        ["saliency_1", "saliency_2"].iter().filter_map(|n| under_root(n)).filter(|p| p.is_dir()).collect()
    } else {
        args.saliency_dirs.iter().map(|d| existing_dir(d)).collect::<CmdResult<Vec<_>>>()?
    };
    let image_dir = args.image_dir.as_deref().map(existing_dir).transpose()?;

    Ok(Inputs {
        annotations,
        format,
        canvas_dir,
        saliency_dirs,
        image_dir,
        jobs: args.jobs.map(|j| j as usize),
        strict: args.strict,
    })
}

impl Inputs {
    /// Reads annotations; bad records are warnings unless `--strict`.
    fn load(&self) -> CmdResult<(Vec<Layout>, Vec<String>)> {
        let loaded = load_annotations(&self.annotations, &self.format).map_err(input)?;
        let errors: Vec<String> = loaded.errors.iter().map(|e| e.to_string()).collect();
        if self.strict && !errors.is_empty() {
            return Err(input(anyhow!(
                "{}: {} bad record(s), first: {}",
                self.annotations.display(),
                errors.len(),
                errors[0]
            )));
        }
        for e in &errors {
            eprintln!("warning: {}: skipped {e}", self.annotations.display());
        }
        Ok((loaded.layouts, errors))
    }

    fn source(&self) -> DirectorySource {
        DirectorySource { canvas_dir: self.canvas_dir.clone(), saliency_dirs: self.saliency_dirs.clone() }
    }

    fn pool(&self) -> CmdResult<rayon::ThreadPool> {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = self.jobs {
            builder = builder.num_threads(n);
        }
        builder.build().map_err(internal)
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> CmdResult {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display())).map_err(input)?;
    }
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display())).map_err(input)
}

fn write_stdout(bytes: &[u8]) -> CmdResult {
    let mut out = std::io::stdout().lock();
    out.write_all(bytes).and_then(|_| out.flush()).map_err(internal)
}

fn parse_selection(metrics: &str) -> CmdResult<MetricSelection> {
    metrics.parse().map_err(|e: String| input(anyhow!(e)))
}

fn check_raster_dirs(inputs: &Inputs, selection: MetricSelection) -> CmdResult {
    if !inputs.strict {
        return Ok(());
    }
    if selection.needs_saliency() && inputs.saliency_dirs.is_empty() {
        return Err(input(anyhow!("--strict: content metrics requested but no saliency directory")));
    }
    if selection.needs_canvas() && inputs.canvas_dir.is_none() {
        return Err(input(anyhow!("--strict: readability requested but no canvas directory")));
    }
    Ok(())
}

fn missing_rasters(report: &MetricReport) -> Vec<String> {
    report
        .diagnostics
        .iter()
        .filter_map(|d| {
            let why: Vec<&str> = d
                .diagnostics
                .iter()
                .filter_map(|diag| match diag {
                    Diagnostic::MissingSaliency(why) | Diagnostic::MissingCanvas(why) => Some(why.as_str()),
                    _ => None,
                })
                .collect();
            (!why.is_empty()).then(|| format!("{}/{}: {}", d.canvas_id, d.layout_id, why.join("; ")))
        })
        .collect()
}

fn evaluate_layouts(inputs: &Inputs, layouts: &[Layout], selection: MetricSelection) -> CmdResult<MetricReport> {
    let report = evaluate_with(layouts, selection, &inputs.source(), inputs.jobs).map_err(internal)?;
    let missing = missing_rasters(&report);
    if inputs.strict && !missing.is_empty() {
        return Err(input(anyhow!("--strict: {} missing raster(s), first: {}", missing.len(), missing[0])));
    }
    if !missing.is_empty() {
        eprintln!("warning: {} layout(s) lack rasters for content metrics; excluded from those metrics", missing.len());
    }
    Ok(report)
}

pub fn eval(args: &InputArgs, metrics: &str, out: Option<&Path>, format: Format) -> CmdResult {
    let selection = parse_selection(metrics)?;
    let inputs = resolve(args)?;
    check_raster_dirs(&inputs, selection)?;
    let (layouts, load_errors) = inputs.load()?;
    let report = evaluate_layouts(&inputs, &layouts, selection)?;

    let json = output::report_json(&report, &load_errors).map_err(internal)?;
    if let Some(dir) = out {
        write_file(&dir.join("per_layout.csv"), &output::per_layout_csv(&report.per_layout).map_err(internal)?)?;
        write_file(&dir.join("report.json"), &json)?;
    }
    let shown = match format {
        Format::Table => output::report_table(&report).into_bytes(),
        Format::Json => json,
        Format::Csv => output::report_csv(&report).map_err(internal)?,
    };
    write_stdout(&shown)
}

fn strategy_of(arg: StrategyArg, seed: u64) -> Strategy {
    match arg {
        StrategyArg::Dsf => Strategy::Dsf,
        StrategyArg::Geometric => Strategy::Geometric,
        StrategyArg::Random => Strategy::Random(seed),
    }
}

pub fn dsf(args: &InputArgs, strategy: StrategyArg, seed: u64, length: Option<usize>, out: Option<&Path>) -> CmdResult {
    let inputs = resolve(args)?;
    let (layouts, _) = inputs.load()?;
    let strategy = strategy_of(strategy, seed);
    let records: Vec<SequenceRecord> = inputs.pool()?.install(|| {
        layouts
            .par_iter()
            .map(|l| {
                let seq = strategy.apply(l);
                let seq = match length {
                    Some(k) => seq.fit_length(k).expect("length is at least 1"),
                    None => seq,
                };
                SequenceRecord::new(l, &seq)
            })
            .collect()
    });
    let mut bytes = Vec::new();
    write_sequences(&mut bytes, strategy, length, &records).map_err(internal)?;
    match out {
        Some(path) => write_file(path, &bytes),
        None => write_stdout(&bytes),
    }
}

pub fn ablation(
    args: &InputArgs,
    metrics: &str,
    seed: u64,
    short: usize,
    out: Option<&Path>,
    format: Format,
) -> CmdResult {
    let selection = parse_selection(metrics)?;
    let inputs = resolve(args)?;
    check_raster_dirs(&inputs, selection)?;
    let (layouts, _) = inputs.load()?;
    let full = max_sequence_length(&layouts);
    if full == 0 {
        return Err(input(anyhow!("no elements in any layout; nothing to compare")));
    }

    let pool = inputs.pool()?;
    let mut rows = Vec::new();
    for strategy in [Strategy::Random(seed), Strategy::Geometric, Strategy::Dsf] {
        let fitted = |k: usize| -> Vec<Layout> {
            pool.install(|| {
                layouts
                    .par_iter()
                    .map(|l| strategy.apply(l).fit_length(k).expect("length is at least 1").to_layout(l))
                    .collect()
            })
        };
        let full_report = evaluate_layouts(&inputs, &fitted(full), selection)?;
        let short_report = evaluate_layouts(&inputs, &fitted(short), selection)?;
        rows.push(AblationRow::new(strategy, full_report, short_report));
    }

    let json = output::ablation_json(full, short, &rows).map_err(internal)?;
    let csv = output::ablation_csv(&rows).map_err(internal)?;
    if let Some(dir) = out {
        write_file(&dir.join("ablation.json"), &json)?;
        write_file(&dir.join("ablation.csv"), &csv)?;
    }
    let shown = match format {
        Format::Table => output::ablation_table(full, short, &rows).into_bytes(),
        Format::Json => json,
        Format::Csv => csv,
    };
    write_stdout(&shown)
}

pub fn stats(args: &InputArgs, out: Option<&Path>, format: Format) -> CmdResult {
    let inputs = resolve(args)?;
    let (layouts, _) = inputs.load()?;
    let canvas_ids: Vec<String> = match &inputs.canvas_dir {
        Some(dir) => list_canvas_ids(dir).map_err(input)?,
        None => layouts.iter().map(|l| l.canvas_id.clone()).collect(),
    };
    let stats = dataset_stats(&layouts, canvas_ids.iter().map(String::as_str));
    let json = output::stats_json(&stats).map_err(internal)?;
    if let Some(path) = out {
        write_file(path, &json)?;
    }
    let shown = match format {
        Format::Table => output::stats_table(&stats).into_bytes(),
        Format::Json => json,
        Format::Csv => output::stats_csv(&stats).map_err(internal)?,
    };
    write_stdout(&shown)
}

fn background(inputs: &Inputs, layout: &Layout) -> Option<image::RgbImage> {
    let dir = inputs.image_dir.as_ref().or(inputs.canvas_dir.as_ref())?;
    let Some(path) = find_image(dir, &layout.canvas_id) else {
        eprintln!("warning: no canvas image for {:?}; drawing on a blank field", layout.canvas_id);
        return None;
    };
    match image::open(&path) {
        Ok(img) if img.width() == layout.canvas_w && img.height() == layout.canvas_h => Some(img.to_rgb8()),
        Ok(img) => {
            eprintln!(
                "warning: {} is {}x{}, canvas is {}x{}; drawing on a blank field",
                path.display(),
                img.width(),
                img.height(),
                layout.canvas_w,
                layout.canvas_h
            );
            None
        }
        Err(e) => {
            eprintln!("warning: cannot read {}: {e}; drawing on a blank field", path.display());
            None
        }
    }
}

pub fn render(args: &InputArgs, out: &Path) -> CmdResult {
    let inputs = resolve(args)?;
    let (layouts, _) = inputs.load()?;
    let images: Vec<Vec<u8>> = inputs
        .pool()?
        .install(|| {
            layouts.par_iter().map(|l| render_png(l, background(&inputs, l).as_ref())).collect::<Result<_, _>>()
        })
        .map_err(internal)?;

    let mut used: BTreeMap<String, usize> = BTreeMap::new();
    for (layout, png) in layouts.iter().zip(images) {
        let base = if layout.layout_id.is_empty() {
            layout.canvas_id.clone()
        } else {
            format!("{}__{}", layout.canvas_id, layout.layout_id)
        };
        let n = used.entry(base.clone()).or_insert(0);
        *n += 1;
        let name = if *n == 1 { format!("{base}.png") } else { format!("{base}_{n}.png") };
        write_file(&out.join(name), &png)?;
    }
    Ok(())
}

pub fn generate(
    config: Option<&Path>,
    baseline: BaselineArg,
    count: u64,
    seed: Option<u64>,
    saliency: Option<&Path>,
    out: Option<&Path>,
) -> CmdResult {
    let spec = match config {
        Some(path) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display())).map_err(input)?;
            GenSpec::from_toml_str(&text).map_err(input)?
        }
        None => GenSpec::default(),
    };
    let first = seed.unwrap_or(spec.seed);
    let map = match baseline {
        BaselineArg::Grid => {
            let path = saliency.ok_or_else(|| input(anyhow!("the grid baseline needs --saliency")))?;
            Some(load_raster(path, Some((spec.canvas_w, spec.canvas_h))).map_err(input)?)
        }
        BaselineArg::Random => None,
    };
    let layouts = (0..count)
        .map(|i| {
            let s = spec.with_seed(first.wrapping_add(i));
            match &map {
                Some(m) => saliency_grid_layout(m, &s),
                None => random_layout(&s),
            }
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(input)?;
    let mut bytes = Vec::new();
    write_native(&mut bytes, &layouts).map_err(internal)?;
    match out {
        Some(path) => write_file(path, &bytes),
        None => write_stdout(&bytes),
    }
}
