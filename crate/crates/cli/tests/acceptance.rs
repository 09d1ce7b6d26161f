//! Acceptance suite. Runs every criterion, prints one PASS/FAIL/SKIP line
//! each, and exits nonzero if anything failed.
//!
//! Built with `harness = false` so the lines are always visible under
//! `cargo test`.

use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use layoutbench::baseline::{random_layout, CountRange, GenSpec};
use layoutbench::dataset::save_annotations;
use layoutbench::metrics::{
    metric_alignment, metric_occlusion, metric_overlay, metric_readability, metric_underlay, metric_utility,
    metric_validity,
};
use layoutbench::{compute_ae, form_design_sequence, BBox, ElementClass, Layout, MetricReport, MetricValues, Raster};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Published values are rounded to four decimals.
const AE_TOL: f64 = 5e-4;
/// Integer boxes give exact rationals; allow only float noise.
const EXACT_TOL: f64 = 1e-9;

const GEOMETRY_PAIRS: usize = 1000;
const GEOMETRY_BUDGET: Duration = Duration::from_secs(5);
const CONTENT_BUDGET: Duration = Duration::from_secs(10);
const DSF_LAYOUTS: usize = 1000;
const DSF_MAX_ELEMENTS: usize = 20;
const DSF_BUDGET: Duration = Duration::from_secs(5);
const STATS_BUDGET: Duration = Duration::from_secs(60);

const EXPECTED_PAIRS: u64 = 9974;
const EXPECTED_CANVASES: u64 = 905;

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

// ---------------------------------------------------------------------------
// 1. AE arithmetic on the published ablation values

/// Metric values at the truncated length and the signed change from the
/// full length, per ordering strategy, with the published AE.
struct PublishedAblation {
    name: &'static str,
    short: [f64; 8],
    change: [f64; 8],
    ae: f64,
}

const ABLATION: [PublishedAblation; 3] = [
    PublishedAblation {
        name: "random",
        short: [1.0000, 0.0881, 0.0062, 0.7417, 0.3243, 0.2240, 0.2475, 0.1909],
        change: [0.1454, 0.0666, 0.0007, -0.1380, -0.1499, -0.0328, 0.0361, 0.0035],
        ae: 0.5730,
    },
    PublishedAblation {
        name: "geometric",
        short: [0.9667, 0.0261, 0.0050, 0.7849, 0.4433, 0.2439, 0.2482, 0.1937],
        change: [0.1215, 0.0026, 0.0004, -0.0824, -0.0757, -0.0170, 0.0438, 0.0052],
        ae: 0.3486,
    },
    PublishedAblation {
        name: "dsf",
        short: [0.9572, 0.0362, 0.0043, 0.8850, 0.5824, 0.2526, 0.2341, 0.1910],
        change: [0.0784, 0.0142, -0.0003, 0.0535, 0.1504, -0.0015, 0.0253, 0.0036],
        ae: 0.3272,
    },
];

fn criterion_ae() -> Check {
    let mut parts = Vec::new();
    for row in &ABLATION {
        let full: [f64; 8] = std::array::from_fn(|i| row.short[i] - row.change[i]);
        let a = MetricReport::from_values(&MetricValues::from_array(full)).map_err(|e| e.to_string())?;
        let b = MetricReport::from_values(&MetricValues::from_array(row.short)).map_err(|e| e.to_string())?;
        let ae = compute_ae(&a, &b).map_err(|e| e.to_string())?;
        ensure(close(ae, row.ae, AE_TOL), || format!("{}: AE {ae:.6} vs published {:.4}", row.name, row.ae))?;
        parts.push(format!("{} {ae:.4}", row.name));
    }
    let partial = MetricReport { val: Some(0.5), ..MetricReport::default() };
    ensure(compute_ae(&partial, &partial).is_err(), || "AE accepted a report with missing metrics".into())?;
    Ok(parts.join(", "))
}

// ---------------------------------------------------------------------------
// 2. Und_s <= Und_l on published result rows

const PUBLISHED_ROWS: [(&str, [f64; 8]); 2] = [
    ("ds-gan", [0.8788, 0.0220, 0.0046, 0.8315, 0.4320, 0.2541, 0.2088, 0.1874]),
    ("cgl-gan", [0.7066, 0.0605, 0.0062, 0.8624, 0.4043, 0.2257, 0.1546, 0.1715]),
];

fn criterion_und_order() -> Check {
    for (name, row) in PUBLISHED_ROWS {
        ensure(row[4] <= row[3], || format!("{name}: und_s {} > und_l {}", row[4], row[3]))?;
        MetricReport::from_values(&MetricValues::from_array(row)).map_err(|e| format!("{name}: {e}"))?;
        let mut swapped = row;
        swapped.swap(3, 4);
        ensure(MetricReport::from_values(&MetricValues::from_array(swapped)).is_err(), || {
            format!("{name}: report accepted und_s > und_l")
        })?;
    }
    Ok("both rows hold; swapped rows rejected".into())
}

// ---------------------------------------------------------------------------
// 3. Box geometry against unit-cell counting

fn cells(x1: i64, y1: i64, x2: i64, y2: i64, inside: impl Fn(i64, i64) -> bool) -> u64 {
    let mut n = 0;
    for y in y1..y2 {
        for x in x1..x2 {
            if inside(x, y) {
                n += 1;
            }
        }
    }
    n
}

type IBox = (i64, i64, i64, i64);

fn in_box(b: IBox, x: i64, y: i64) -> bool {
    b.0 <= x && x < b.2 && b.1 <= y && y < b.3
}

fn random_ibox(rng: &mut ChaCha8Rng, lo: i64, hi: i64) -> IBox {
    let (a, b) = (rng.random_range(lo..=hi), rng.random_range(lo..=hi));
    let (c, d) = (rng.random_range(lo..=hi), rng.random_range(lo..=hi));
    (a.min(b), c.min(d), a.max(b), c.max(d))
}

fn to_bbox(b: IBox) -> BBox {
    BBox::new(b.0 as f64, b.1 as f64, b.2 as f64, b.3 as f64)
}

fn criterion_geometry() -> Check {
    const CANVAS: i64 = 48;
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for case in 0..GEOMETRY_PAIRS {
        let (p, q) = (random_ibox(&mut rng, -12, 60), random_ibox(&mut rng, -12, 60));
        let (bp, bq) = (to_bbox(p), to_bbox(q));
        let hull = (p.0.min(q.0), p.1.min(q.1), p.2.max(q.2), p.3.max(q.3));
        let all = |x, y| in_box(hull, x, y);
        let area_p = cells(hull.0, hull.1, hull.2, hull.3, |x, y| in_box(p, x, y)) as f64;
        let area_q = cells(hull.0, hull.1, hull.2, hull.3, |x, y| in_box(q, x, y)) as f64;
        let inter = cells(hull.0, hull.1, hull.2, hull.3, |x, y| in_box(p, x, y) && in_box(q, x, y)) as f64;
        let hull_area = cells(hull.0, hull.1, hull.2, hull.3, all) as f64;
        let union = area_p + area_q - inter;
        let iou = if union > 0.0 { inter / union } else { 0.0 };
        let giou = if hull_area > 0.0 { iou - (hull_area - union) / hull_area } else { 0.0 };
        let clipped = cells(p.0, p.1, p.2, p.3, |x, y| (0..CANVAS).contains(&x) && (0..CANVAS).contains(&y)) as f64;

        let got = [
            bp.intersection_area(&bq),
            bp.iou(&bq),
            bp.giou(&bq),
            bp.clipped_area(CANVAS as u32, CANVAS as u32),
            bp.hull(&bq).area(),
        ];
        let want = [inter, iou, giou, clipped, hull_area];
        for (k, (g, w)) in got.iter().zip(want).enumerate() {
            ensure(close(*g, w, EXACT_TOL), || {
                let what = ["intersection", "iou", "giou", "clipped area", "hull"][k];
                format!("pair {case} {p:?} {q:?}: {what} {g} vs oracle {w}")
            })?;
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed < GEOMETRY_BUDGET, || format!("took {elapsed:?}"))?;
    Ok(format!("{GEOMETRY_PAIRS} pairs in {elapsed:.2?}"))
}

// ---------------------------------------------------------------------------
// 4. Utility and occlusion closed forms and per-pixel oracle

fn layout_of(id: &str, w: u32, h: u32, boxes: &[(ElementClass, IBox)]) -> Layout {
    Layout::new(id, w, h, boxes.iter().map(|&(c, b)| (c, to_bbox(b)))).expect("finite boxes")
}

fn box_area(b: IBox) -> i64 {
    (b.2 - b.0).max(0) * (b.3 - b.1).max(0)
}

/// Union area of boxes by inclusion-exclusion over all subsets.
fn union_area(boxes: &[IBox]) -> i64 {
    let n = boxes.len();
    let mut total = 0;
    for mask in 1u32..(1 << n) {
        let mut acc = (i64::MIN, i64::MIN, i64::MAX, i64::MAX);
        for (i, b) in boxes.iter().enumerate() {
            if mask & (1 << i) != 0 {
                acc = (acc.0.max(b.0), acc.1.max(b.1), acc.2.min(b.2), acc.3.min(b.3));
            }
        }
        let sign = if mask.count_ones() % 2 == 1 { 1 } else { -1 };
        total += sign * box_area(acc);
    }
    total
}

fn random_inner_box(rng: &mut ChaCha8Rng, side: i64) -> IBox {
    let (w, h) = (rng.random_range(20..side / 2), rng.random_range(20..side / 2));
    let (x, y) = (rng.random_range(0..=side - w), rng.random_range(0..=side - h));
    (x, y, x + w, y + h)
}

fn criterion_content() -> Check {
    const SIDE: u32 = 512;
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let classes = [ElementClass::Text, ElementClass::Logo, ElementClass::Underlay];

    for case in 0..12 {
        let n = rng.random_range(1..=4);
        let boxes: Vec<IBox> = (0..n).map(|_| random_inner_box(&mut rng, SIDE as i64)).collect();
        let items: Vec<(ElementClass, IBox)> = boxes.iter().map(|&b| (classes[rng.random_range(0..3)], b)).collect();
        let layout = layout_of("uniform", SIDE, SIDE, &items);
        let covered = union_area(&boxes) as f64 / (SIDE as f64 * SIDE as f64);
        for s in [0.0, 0.25, 0.5, 0.9] {
            let map = Raster::filled(SIDE, SIDE, s).map_err(|e| e.to_string())?;
            let uti = metric_utility(&layout, &map).map_err(|e| e.to_string())?;
            let occ = metric_occlusion(&layout, &map).map_err(|e| e.to_string())?;
            ensure(close(uti.value, covered, EXACT_TOL) && !uti.degenerate, || {
                format!("case {case} s={s}: uti {} vs {covered}", uti.value)
            })?;
            ensure(close(occ.value, s, EXACT_TOL) && !occ.degenerate, || {
                format!("case {case} s={s}: occ {} vs {s}", occ.value)
            })?;
        }
        let saturated = Raster::filled(SIDE, SIDE, 1.0).map_err(|e| e.to_string())?;
        let uti = metric_utility(&layout, &saturated).map_err(|e| e.to_string())?;
        ensure(uti.value == 0.0 && uti.degenerate, || "fully salient map not flagged".into())?;
    }

    for case in 0..6 {
        let map = Raster::from_fn(SIDE, SIDE, |_, _| rng.random_range(0..=255u32) as f64 / 255.0)
            .map_err(|e| e.to_string())?;
        let n = rng.random_range(1..=5);
        let items: Vec<(ElementClass, IBox)> =
            (0..n).map(|_| (classes[rng.random_range(0..3)], random_inner_box(&mut rng, SIDE as i64))).collect();
        let layout = layout_of("random", SIDE, SIDE, &items);
        let (mut free_in, mut free_all, mut sal_in, mut n_in) = (0.0, 0.0, 0.0, 0u64);
        for y in 0..SIDE as i64 {
            for x in 0..SIDE as i64 {
                let s = map.values()[(y * SIDE as i64 + x) as usize];
                free_all += 1.0 - s;
                if items.iter().any(|&(_, b)| in_box(b, x, y)) {
                    free_in += 1.0 - s;
                    sal_in += s;
                    n_in += 1;
                }
            }
        }
        let uti = metric_utility(&layout, &map).map_err(|e| e.to_string())?.value;
        let occ = metric_occlusion(&layout, &map).map_err(|e| e.to_string())?.value;
        ensure(close(uti, free_in / free_all, EXACT_TOL), || {
            format!("random {case}: uti {uti} vs {}", free_in / free_all)
        })?;
        ensure(close(occ, sal_in / n_in as f64, EXACT_TOL), || format!("random {case}: occ {occ}"))?;
    }
    let elapsed = start.elapsed();
    ensure(elapsed < CONTENT_BUDGET, || format!("took {elapsed:?}"))?;
    Ok(format!("12 uniform x 4 levels, 6 random maps at {SIDE}x{SIDE} in {elapsed:.2?}"))
}

// ---------------------------------------------------------------------------
// 5. Design-sequence properties

fn random_layout_ints(rng: &mut ChaCha8Rng, max_elements: usize) -> Layout {
    let classes = [ElementClass::Text, ElementClass::Logo, ElementClass::Underlay];
    let n = rng.random_range(0..=max_elements);
    let items: Vec<(ElementClass, IBox)> = (0..n)
        .map(|_| {
            let (x, y) = (rng.random_range(0..90), rng.random_range(0..90));
            let (w, h) = (rng.random_range(1..40), rng.random_range(1..40));
            (classes[rng.random_range(0..3)], (x, y, x + w, y + h))
        })
        .collect();
    layout_of("dsf", 100, 100, &items)
}

fn overlap(a: &BBox, b: &BBox) -> bool {
    a.x1.max(b.x1) < a.x2.min(b.x2) && a.y1.max(b.y1) < a.y2.min(b.y2)
}

fn check_sequence(l: &Layout) -> Result<(), String> {
    let seq = form_design_sequence(l);
    let els = &l.elements;
    let n = els.len();

    let mut seen: Vec<usize> = seq.entries.iter().map(|e| e.index).collect();
    seen.sort();
    ensure(seen == (0..n).collect::<Vec<_>>(), || format!("not a permutation: {seen:?}"))?;

    let pos = |i: usize| seq.entries.iter().position(|e| e.index == i).expect("permutation");
    let is_instance = |i: usize| els[i].class != ElementClass::Underlay;
    let underlays: Vec<usize> = (0..n).filter(|&i| !is_instance(i)).collect();
    let direct = |u: usize| (0..n).any(|i| is_instance(i) && overlap(&els[u].bbox, &els[i].bbox));

    // Underlays that reach a decorating underlay through non-decorating ones.
    let mut expected_orphans = Vec::new();
    for &u in &underlays {
        let mut reached = vec![u];
        let mut frontier = vec![u];
        let mut anchored = direct(u);
        while let Some(k) = frontier.pop() {
            if anchored {
                break;
            }
            for &j in &underlays {
                if !reached.contains(&j) && overlap(&els[k].bbox, &els[j].bbox) {
                    if direct(j) {
                        anchored = true;
                    } else {
                        reached.push(j);
                        frontier.push(j);
                    }
                }
            }
        }
        if !anchored {
            expected_orphans.push(u);
            continue;
        }
        if direct(u) {
            for i in (0..n).filter(|&i| is_instance(i) && overlap(&els[u].bbox, &els[i].bbox)) {
                ensure(pos(i) < pos(u), || format!("underlay {u} precedes element {i} it decorates"))?;
            }
        } else {
            ensure((0..n).any(|i| is_instance(i) && pos(i) < pos(u)), || {
                format!("underlay {u} has no anchor before it")
            })?;
        }
    }
    let mut got_orphans = seq.orphans.clone();
    got_orphans.sort();
    ensure(got_orphans == expected_orphans, || format!("orphans {got_orphans:?} vs {expected_orphans:?}"))?;
    let tail: Vec<usize> = seq.entries[n - seq.orphans.len()..].iter().map(|e| e.index).collect();
    ensure(tail == seq.orphans, || "orphans are not the sequence tail".into())?;

    // An element is alone in its group when none of its underlays touches another element.
    let singleton = |i: usize| {
        underlays
            .iter()
            .filter(|&&u| overlap(&els[u].bbox, &els[i].bbox))
            .all(|&u| (0..n).all(|j| j == i || !is_instance(j) || !overlap(&els[u].bbox, &els[j].bbox)))
    };
    let texts: Vec<f64> = seq
        .entries
        .iter()
        .filter(|e| e.class == ElementClass::Text && singleton(e.index))
        .map(|e| e.bbox.width() * e.bbox.height())
        .collect();
    ensure(texts.windows(2).all(|w| w[0] >= w[1]), || format!("singleton text areas {texts:?}"))?;
    let logos: Vec<(f64, f64)> = seq
        .entries
        .iter()
        .filter(|e| e.class == ElementClass::Logo && singleton(e.index))
        .map(|e| (e.bbox.y1, e.bbox.x1))
        .collect();
    ensure(logos.windows(2).all(|w| w[0] <= w[1]), || format!("singleton logo positions {logos:?}"))?;

    for k in 1..=n + 3 {
        let fitted = seq.fit_length(k).map_err(|e| e.to_string())?;
        ensure(fitted.entries.len() == k, || format!("fit_length({k}) has {} entries", fitted.entries.len()))?;
        let keep = k.min(n);
        ensure(fitted.entries[..keep] == seq.entries[..keep], || format!("fit_length({k}) changed the prefix"))?;
        ensure(fitted.entries[keep..].iter().all(|e| e.class == ElementClass::Pad), || {
            format!("fit_length({k}) tail is not padding")
        })?;
    }
    ensure(seq.fit_length(0).is_err(), || "fit_length(0) accepted".into())
}

fn criterion_dsf() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for case in 0..DSF_LAYOUTS {
        let l = random_layout_ints(&mut rng, DSF_MAX_ELEMENTS);
        check_sequence(&l).map_err(|e| format!("layout {case}: {e}"))?;
    }
    let elapsed = start.elapsed();
    ensure(elapsed < DSF_BUDGET, || format!("took {elapsed:?}"))?;
    Ok(format!("{DSF_LAYOUTS} layouts in {elapsed:.2?}"))
}

// ---------------------------------------------------------------------------
// 6. Hand-traced example

fn hand_trace_layout() -> Layout {
    layout_of(
        "trace",
        100,
        100,
        &[
            (ElementClass::Text, (10, 50, 12, 52)),    // C
            (ElementClass::Underlay, (5, 35, 40, 60)), // U
            (ElementClass::Logo, (0, 0, 5, 5)),        // A
            (ElementClass::Text, (10, 40, 16, 42)),    // B
        ],
    )
}

fn criterion_hand_trace() -> Check {
    let names = ["C", "U", "A", "B"];
    let order: Vec<&str> = form_design_sequence(&hand_trace_layout()).entries.iter().map(|e| names[e.index]).collect();
    ensure(order == ["A", "B", "C", "U"], || format!("got {order:?}"))?;
    Ok(order.join(", "))
}

// ---------------------------------------------------------------------------
// 7. CLI determinism

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_layoutbench")
}

fn save_png(path: &Path, w: u32, h: u32, f: impl Fn(u32, u32) -> u8) -> Result<(), String> {
    image::GrayImage::from_fn(w, h, |x, y| image::Luma([f(x, y)])).save(path).map_err(|e| e.to_string())
}

/// A small data root with annotations, canvases and two saliency sets.
fn build_data_root(root: &Path) -> Result<(), String> {
    let spec = GenSpec {
        canvas_w: 64,
        canvas_h: 96,
        texts: CountRange { min: 1, max: 5 },
        logos: CountRange { min: 0, max: 2 },
        underlays: CountRange { min: 0, max: 2 },
        ..GenSpec::default()
    };
    let mut layouts = Vec::new();
    for seed in 0..24u64 {
        let mut l = random_layout(&spec.with_seed(seed)).map_err(|e| e.to_string())?;
        l.canvas_id = format!("c{}", seed % 8);
        layouts.push(l.with_layout_id(format!("l{seed}")));
    }
    for sub in ["canvases", "saliency_1", "saliency_2"] {
        std::fs::create_dir_all(root.join(sub)).map_err(|e| e.to_string())?;
    }
    for c in 0..8u32 {
        let name = format!("c{c}.png");
        save_png(&root.join("canvases").join(&name), 64, 96, |x, y| ((x * 7 + y * 3 + c * 11) % 256) as u8)?;
        save_png(&root.join("saliency_1").join(&name), 64, 96, |x, y| ((x * y + c) % 256) as u8)?;
        save_png(&root.join("saliency_2").join(&name), 64, 96, |x, _| (x * 4 % 256) as u8)?;
    }
    save_annotations(&root.join("annotations.jsonl"), &layouts).map_err(|e| e.to_string())
}

fn run(args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(bin()).args(args).output().map_err(|e| e.to_string())?;
    ensure(out.status.success(), || {
        format!("{args:?} exited {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr))
    })?;
    Ok(out.stdout)
}

fn read(path: &Path) -> Result<Vec<u8>, String> {
    std::fs::read(path).map_err(|e| format!("{}: {e}", path.display()))
}

/// Stdout and written files of one eval run and one dsf run per strategy.
fn cli_outputs(root: &Path, out: &Path, jobs: &str) -> Result<Vec<Vec<u8>>, String> {
    let root_s = root.to_str().expect("utf-8 temp path");
    let eval_dir = out.join("eval");
    let mut outputs = vec![run(&[
        "eval",
        "--data-root",
        root_s,
        "--jobs",
        jobs,
        "--format",
        "json",
        "--out",
        eval_dir.to_str().unwrap(),
    ])?];
    outputs.push(read(&eval_dir.join("report.json"))?);
    outputs.push(read(&eval_dir.join("per_layout.csv"))?);
    for strategy in ["dsf", "geometric", "random"] {
        let file = out.join(format!("{strategy}.jsonl"));
        run(&[
            "dsf",
            "--data-root",
            root_s,
            "--jobs",
            jobs,
            "--strategy",
            strategy,
            "--seed",
            "7",
            "--length",
            "6",
            "--out",
            file.to_str().unwrap(),
        ])?;
        outputs.push(read(&file)?);
    }
    Ok(outputs)
}

fn criterion_determinism() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let root = tmp.path().join("data");
    build_data_root(&root)?;
    let reference = cli_outputs(&root, &tmp.path().join("run0"), "1")?;
    let report = String::from_utf8_lossy(&reference[1]).into_owned();
    ensure(report.contains("\"uti\"") && !report.contains("\"uti\": null"), || {
        "content metrics were not computed".into()
    })?;
    for (i, jobs) in ["1", "4", "4"].iter().enumerate() {
        let again = cli_outputs(&root, &tmp.path().join(format!("run{}", i + 1)), jobs)?;
        ensure(again == reference, || format!("run {} with --jobs {jobs} differs", i + 1))?;
    }
    Ok("eval and dsf identical over 4 runs, --jobs 1 and 4".into())
}

// ---------------------------------------------------------------------------
// 8. Invalid elements leave metrics unchanged

fn with_invalid(l: &Layout) -> Layout {
    let mut items: Vec<(ElementClass, BBox)> = l.elements.iter().map(|e| (e.class, e.bbox)).collect();
    let (w, h) = (l.canvas_w as f64, l.canvas_h as f64);
    items.push((ElementClass::Text, BBox::new(w + 5.0, 0.0, w + 40.0, 20.0)));
    items.push((ElementClass::Logo, BBox::new(-30.0, -30.0, -2.0, -1.0)));
    items.push((ElementClass::Underlay, BBox::new(0.0, h, w, h + 50.0)));
    Layout::new(l.canvas_id.clone(), l.canvas_w, l.canvas_h, items).expect("finite boxes")
}

fn all_metrics(l: &Layout, sal: &Raster, canvas: &Raster) -> Result<[Option<f64>; 8], String> {
    let und = metric_underlay(l);
    Ok([
        metric_validity(l),
        metric_overlay(l),
        Some(metric_alignment(l)),
        und.map(|u| u.0),
        und.map(|u| u.1),
        Some(metric_utility(l, sal).map_err(|e| e.to_string())?.value),
        Some(metric_occlusion(l, sal).map_err(|e| e.to_string())?.value),
        Some(metric_readability(l, canvas).map_err(|e| e.to_string())?.value),
    ])
}

fn criterion_invariance() -> Check {
    let mut fixtures = vec![hand_trace_layout()];
    let spec = GenSpec {
        canvas_w: 100,
        canvas_h: 100,
        texts: CountRange { min: 1, max: 6 },
        logos: CountRange { min: 0, max: 3 },
        underlays: CountRange { min: 0, max: 3 },
        ..GenSpec::default()
    };
    for seed in 0..30 {
        fixtures.push(random_layout(&spec.with_seed(seed)).map_err(|e| e.to_string())?);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..30 {
        fixtures.push(random_layout_ints(&mut rng, 12));
    }
    let sal = Raster::from_fn(100, 100, |x, y| ((x * 13 + y * 7) % 101) as f64 / 100.0).map_err(|e| e.to_string())?;
    let canvas = Raster::from_fn(100, 100, |x, y| ((x ^ y) % 17) as f64 / 16.0).map_err(|e| e.to_string())?;
    let mut checked = 0;
    for (i, l) in fixtures.iter().enumerate() {
        let before = all_metrics(l, &sal, &canvas)?;
        let after = all_metrics(&with_invalid(l), &sal, &canvas)?;
        ensure(before[1..] == after[1..], || format!("fixture {i}: {before:?} -> {after:?}"))?;
        if let Some(v) = before[0].filter(|&v| v > 0.0) {
            let a = after[0].unwrap_or(f64::NAN);
            ensure(a < v, || format!("fixture {i}: val {v} -> {a}"))?;
            checked += 1;
        }
    }
    ensure(checked > 0, || "no fixture had a positive validity".into())?;
    Ok(format!("{} fixtures, val lowered in {checked}", fixtures.len()))
}

// ---------------------------------------------------------------------------
// 9. Dataset statistics (needs the dataset)

fn criterion_dataset(root: Option<PathBuf>) -> Outcome {
    let Some(root) = root.filter(|r| r.is_dir()) else {
        return Outcome::Skip("LAYOUTBENCH_DATA_ROOT not set; dataset absent".into());
    };
    let start = Instant::now();
    let result = (|| -> Check {
        let out = run(&["stats", "--data-root", root.to_str().ok_or("non-utf-8 path")?, "--format", "json"])?;
        let v: serde_json::Value = serde_json::from_slice(&out).map_err(|e| e.to_string())?;
        let pairs = v["n_pairs"].as_u64().unwrap_or(0);
        let canvases = v["n_canvases"].as_u64().unwrap_or(0);
        let complex = v["n_complex"].as_u64().unwrap_or(0);
        ensure(pairs == EXPECTED_PAIRS, || format!("{pairs} pairs"))?;
        ensure(canvases == EXPECTED_CANVASES, || format!("{canvases} canvases"))?;
        ensure(complex > 0, || "no layout has more than 10 elements".into())?;
        let elapsed = start.elapsed();
        ensure(elapsed < STATS_BUDGET, || format!("took {elapsed:?}"))?;
        Ok(format!("{pairs} pairs, {canvases} canvases, {complex} complex in {elapsed:.2?}"))
    })();
    match result {
        Ok(msg) => Outcome::Pass(msg),
        Err(msg) => Outcome::Fail(msg),
    }
}

fn main() -> ExitCode {
    let checks: [Criterion; 8] = [
        ("ae_arithmetic", criterion_ae),
        ("und_strict_le_loose", criterion_und_order),
        ("geometry_oracle", criterion_geometry),
        ("content_metric_oracle", criterion_content),
        ("dsf_properties", criterion_dsf),
        ("hand_trace_order", criterion_hand_trace),
        ("cli_determinism", criterion_determinism),
        ("invalid_element_invariance", criterion_invariance),
    ];
    let mut outcomes: Vec<(&str, Outcome)> = checks
        .iter()
        .map(|(name, f)| {
            let outcome = match f() {
                Ok(msg) => Outcome::Pass(msg),
                Err(msg) => Outcome::Fail(msg),
            };
            (*name, outcome)
        })
        .collect();
    let data_root = std::env::var_os("LAYOUTBENCH_DATA_ROOT").map(PathBuf::from);
    outcomes.push(("dataset_stats", criterion_dataset(data_root)));

    let mut failed = 0;
    for (i, (name, outcome)) in outcomes.iter().enumerate() {
        let (tag, msg) = match outcome {
            Outcome::Pass(m) => ("PASS", m),
            Outcome::Fail(m) => {
                failed += 1;
                ("FAIL", m)
            }
            Outcome::Skip(m) => ("SKIP", m),
        };
        println!("{tag} [{}] {name}: {msg}", i + 1);
    }
    println!("acceptance: {} criteria, {failed} failed", outcomes.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
