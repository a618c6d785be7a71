//! Run directories: atomic writes, CSV read-back and SVG plots.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::config::RunConfig;
use crate::curriculum::curriculum_csv;
use crate::ppo::train::{curves_csv, TrainSummary};

pub const CONFIG_FILE: &str = "config.toml";
pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const CURVES_FILE: &str = "curves.csv";
pub const CURRICULUM_FILE: &str = "curriculum.csv";
pub const EVAL_FILE: &str = "eval.csv";

/// Writes through a temporary file in the same directory and renames it
/// over `path`, so readers see either the old or the new contents.
pub fn write_atomic(path: &Path, contents: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Writes the resolved config, checkpoint, curves, curriculum trace and
/// last evaluation of a training run into `dir`.
pub fn write_training_outputs(dir: &Path, cfg: &RunConfig, summary: &TrainSummary) -> std::io::Result<Vec<PathBuf>> {
    let mut files = vec![
        (CONFIG_FILE, cfg.to_toml()),
        (CHECKPOINT_FILE, summary.checkpoint.to_json()),
        (CURVES_FILE, curves_csv(&summary.curves)),
        (CURRICULUM_FILE, curriculum_csv(&summary.curriculum)),
    ];
    if let Some(e) = &summary.last_eval {
        files.push((EVAL_FILE, e.csv()));
    }
    let mut written = Vec::new();
    for (name, text) in files {
        let p = dir.join(name);
        write_atomic(&p, text.as_bytes())?;
        written.push(p);
    }
    Ok(written)
}

/// One row of an evaluation CSV.
#[derive(Clone, Debug, PartialEq, Deserialize)]
pub struct EvalPoint {
    pub index: usize,
    pub mode: String,
    pub target: f64,
    pub achieved: Option<f64>,
    pub error: Option<f64>,
    #[serde(deserialize_with = "flag")]
    pub success: bool,
    #[serde(deserialize_with = "flag")]
    pub out_of_distribution: bool,
    pub termination: Option<String>,
}

fn flag<'de, D: serde::Deserializer<'de>>(d: D) -> Result<bool, D::Error> {
    Ok(u8::deserialize(d)? != 0)
}

/// The subset of a curves CSV that gets plotted.
#[derive(Clone, Debug, PartialEq, Deserialize)]
pub struct CurvePoint {
    pub update: usize,
    pub mean_reward: f64,
    pub train_success: Option<f64>,
    pub eval_success: Option<f64>,
    pub eval_mean_abs_error: Option<f64>,
}

fn read_csv<T: serde::de::DeserializeOwned>(text: &str, header: &str) -> Result<Vec<T>, String> {
    let first = text.lines().next().unwrap_or("");
    if !first.starts_with(header) {
        return Err(format!("expected a `{header}` header line, found `{first}`"));
    }
    let mut rd = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    rd.deserialize().map(|r| r.map_err(|e| e.to_string())).collect()
}

pub fn read_eval_csv(text: &str) -> Result<Vec<EvalPoint>, String> {
    read_csv(text, "# quadjump eval v")
}

pub fn read_curves_csv(text: &str) -> Result<Vec<CurvePoint>, String> {
    read_csv(text, "# quadjump curves v")
}

const W: f64 = 420.0;
const H: f64 = 320.0;
const PAD: (f64, f64, f64, f64) = (56.0, 16.0, 30.0, 44.0);

struct Panel {
    ox: f64,
    x: (f64, f64),
    y: (f64, f64),
}

impl Panel {
    fn px(&self, v: f64) -> f64 {
        self.ox + PAD.0 + (v - self.x.0) / (self.x.1 - self.x.0) * (W - PAD.0 - PAD.1)
    }

    fn py(&self, v: f64) -> f64 {
        H - PAD.3 - (v - self.y.0) / (self.y.1 - self.y.0) * (H - PAD.2 - PAD.3)
    }

    fn frame(&self, out: &mut String, title: &str, xlabel: &str, ylabel: &str) {
        let (l, r, t, b) = (self.ox + PAD.0, self.ox + W - PAD.1, PAD.2, H - PAD.3);
        let _ = writeln!(out, r##"<rect x="{l:.1}" y="{t:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="#444"/>"##, r - l, b - t);
        for i in 0..=4 {
            let f = i as f64 / 4.0;
            let (vx, vy) = (self.x.0 + f * (self.x.1 - self.x.0), self.y.0 + f * (self.y.1 - self.y.0));
            let (x, y) = (self.px(vx), self.py(vy));
            let _ = writeln!(out, r##"<line x1="{x:.1}" y1="{b:.1}" x2="{x:.1}" y2="{:.1}" stroke="#444"/>"##, b + 4.0);
            let _ = writeln!(out, r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, b + 16.0, tick(vx));
            let _ = writeln!(out, r##"<line x1="{:.1}" y1="{y:.1}" x2="{l:.1}" y2="{y:.1}" stroke="#444"/>"##, l - 4.0);
            let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#, l - 6.0, y + 4.0, tick(vy));
        }
        let cx = 0.5 * (l + r);
        let _ = writeln!(out, r#"<text x="{cx:.1}" y="{:.1}" text-anchor="middle" font-weight="bold">{}</text>"#, t - 10.0, esc(title));
        let _ = writeln!(out, r#"<text x="{cx:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, H - 8.0, esc(xlabel));
        let cy = 0.5 * (t + b);
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{cy:.1}" text-anchor="middle" transform="rotate(-90 {:.1} {cy:.1})">{}</text>"#,
            self.ox + 14.0,
            self.ox + 14.0,
            esc(ylabel)
        );
    }

    fn polyline(&self, out: &mut String, pts: &[(f64, f64)], color: &str, dashed: bool) {
        if pts.is_empty() {
            return;
        }
        let d: Vec<String> = pts.iter().map(|(x, y)| format!("{:.1},{:.1}", self.px(*x), self.py(*y))).collect();
        let dash = if dashed { r#" stroke-dasharray="4 3""# } else { "" };
        let _ = writeln!(out, r#"<polyline points="{}" fill="none" stroke="{color}"{dash}/>"#, d.join(" "));
    }

    fn dot(&self, out: &mut String, x: f64, y: f64, color: &str) {
        let _ = writeln!(out, r#"<circle cx="{:.1}" cy="{:.1}" r="2.5" fill="{color}" fill-opacity="0.6"/>"#, self.px(x), self.py(y));
    }
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.1e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    let span = (hi - lo).abs().max(1e-6);
    (lo - 0.05 * span, hi + 0.05 * span)
}

fn svg(panels: usize, body: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{H}\" viewBox=\"0 0 {w} {H}\" font-family=\"sans-serif\" font-size=\"11\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{body}</svg>\n",
        w = W * panels as f64
    )
}

/// Achieved vs commanded target next to the per-jump error. Failed jumps
/// are red, unmeasured ones sit on the axis as crosses.
pub fn eval_svg(points: &[EvalPoint]) -> String {
    let horizontal = points.first().is_some_and(|p| p.mode == "horizontal");
    let (what, unit) = if horizontal { ("landing distance", "m") } else { ("apex height", "m") };
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for p in points {
        for v in std::iter::once(p.target).chain(p.achieved) {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    let range = padded(lo, hi);
    let mut body = String::new();
    let a = Panel { ox: 0.0, x: range, y: range };
    a.frame(&mut body, &format!("achieved vs commanded {what}"), &format!("target ({unit})"), &format!("achieved ({unit})"));
    a.polyline(&mut body, &[(range.0, range.0), (range.1, range.1)], "#888", true);
    for p in points {
        let color = if p.success { "#1f77b4" } else { "#d62728" };
        match p.achieved {
            Some(v) => a.dot(&mut body, p.target, v, color),
            None => {
                let (x, y) = (a.px(p.target), a.py(range.0));
                let _ = writeln!(body, r#"<path d="M{:.1},{:.1}l6,6m0,-6l-6,6" stroke="{color}"/>"#, x - 3.0, y - 3.0);
            }
        }
    }
    let emax = points.iter().filter_map(|p| p.error.map(f64::abs)).fold(0.0, f64::max).max(0.12);
    let b = Panel { ox: W, x: range, y: (0.0, 1.05 * emax) };
    b.frame(&mut body, "per-jump error", &format!("target ({unit})"), &format!("|error| ({unit})"));
    b.polyline(&mut body, &[(range.0, 0.1), (range.1, 0.1)], "#888", true);
    for p in points {
        if let Some(e) = p.error {
            b.dot(&mut body, p.target, e.abs(), if p.success { "#1f77b4" } else { "#d62728" });
        }
    }
    svg(2, &body)
}

/// Mean rollout reward, and success rates with the evaluation error.
pub fn curves_svg(points: &[CurvePoint]) -> String {
    let last = points.last().map_or(1.0, |p| p.update as f64).max(1.0);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in points {
        lo = lo.min(p.mean_reward);
        hi = hi.max(p.mean_reward);
    }
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    let mut body = String::new();
    let a = Panel { ox: 0.0, x: (0.0, last), y: padded(lo, hi) };
    a.frame(&mut body, "mean reward per step", "update", "reward");
    let r: Vec<(f64, f64)> = points.iter().map(|p| (p.update as f64, p.mean_reward)).collect();
    a.polyline(&mut body, &r, "#1f77b4", false);
    let b = Panel { ox: W, x: (0.0, last), y: (0.0, 1.0) };
    b.frame(&mut body, "success (solid: eval, dashed: train)", "update", "rate / error (m)");
    let series = |f: &dyn Fn(&CurvePoint) -> Option<f64>| -> Vec<(f64, f64)> {
        points.iter().filter_map(|p| f(p).map(|v| (p.update as f64, v.min(1.0)))).collect()
    };
    b.polyline(&mut body, &series(&|p| p.train_success), "#2ca02c", true);
    b.polyline(&mut body, &series(&|p| p.eval_success), "#2ca02c", false);
    b.polyline(&mut body, &series(&|p| p.eval_mean_abs_error), "#d62728", false);
    svg(2, &body)
}
