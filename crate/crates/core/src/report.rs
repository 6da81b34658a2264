//! File artifacts: trajectory CSVs, the sweep summary JSON and SVG figures.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::dynamics::{HaltReason, RunResult};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::sweep::{global_barrier_fraction, CellSummary, SweepRun};

pub const TRAJECTORY_HEADER: [&str; 12] = [
    "eta",
    "lambda",
    "run",
    "seed",
    "generation",
    "c_t",
    "c_s",
    "effectiveness",
    "resources",
    "endowment",
    "iterations",
    "halt_reason",
];

/// One recorded generation of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRow<R> {
    pub eta: R,
    pub lambda: R,
    pub run: usize,
    pub seed: u64,
    pub generation: u64,
    pub c_t: usize,
    pub c_s: usize,
    pub effectiveness: R,
    pub resources: R,
    pub endowment: R,
    pub iterations: u64,
    pub halt_reason: HaltReason,
}

impl<R: Real> TrajectoryRow<R> {
    fn run_key(&self) -> (R, R, usize) {
        (self.eta, self.lambda, self.run)
    }
}

/// Rows grouped by run, each run's rows in generation order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrajectoryTable<R> {
    pub rows: Vec<TrajectoryRow<R>>,
}

impl<R: Real> TrajectoryTable<R> {
    pub fn new() -> Self {
        TrajectoryTable { rows: Vec::new() }
    }

    pub fn push_run(&mut self, eta: R, lambda: R, run: usize, result: &RunResult<R>) {
        self.rows.extend(result.trajectory.iter().map(|g| TrajectoryRow {
            eta,
            lambda,
            run,
            seed: result.seed,
            generation: g.generation,
            c_t: g.c_t,
            c_s: g.c_s,
            effectiveness: g.effectiveness,
            resources: g.resources,
            endowment: g.endowment,
            iterations: g.iterations,
            halt_reason: result.halt_reason,
        }));
    }

    pub fn from_runs<'a>(runs: impl IntoIterator<Item = &'a SweepRun<R>>) -> Self {
        let mut table = Self::new();
        for r in runs {
            table.push_run(r.eta, r.lambda, r.run, &r.result);
        }
        table
    }

    /// Consecutive row slices belonging to the same run.
    pub fn runs(&self) -> impl Iterator<Item = &[TrajectoryRow<R>]> {
        self.rows.chunk_by(|a, b| a.run_key() == b.run_key())
    }

    /// Checks that each run is contiguous with strictly increasing
    /// generations.
    pub fn validate(&self) -> Result<()> {
        let mut seen = Vec::new();
        for run in self.runs() {
            let key = run[0].run_key();
            if seen.contains(&key) {
                return Err(Error::invalid(format!(
                    "rows of run {} (eta {}, lambda {}) are not contiguous",
                    key.2, key.0, key.1
                )));
            }
            seen.push(key);
            if let Some(w) = run.windows(2).find(|w| w[1].generation <= w[0].generation) {
                return Err(Error::invalid(format!(
                    "run {} repeats or reverses generation {} after {}",
                    key.2, w[1].generation, w[0].generation
                )));
            }
        }
        Ok(())
    }
}

/// Seventeen significant digits, enough to round-trip any `f64`.
fn fmt_real<R: Real>(v: R) -> String {
    format!("{:.16e}", v.to_f64_lossless())
}

pub fn write_trajectories_to<R: Real, W: Write>(table: &TrajectoryTable<R>, out: W) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(TRAJECTORY_HEADER)?;
    for r in &table.rows {
        w.write_record([
            fmt_real(r.eta),
            fmt_real(r.lambda),
            r.run.to_string(),
            r.seed.to_string(),
            r.generation.to_string(),
            r.c_t.to_string(),
            r.c_s.to_string(),
            fmt_real(r.effectiveness),
            fmt_real(r.resources),
            fmt_real(r.endowment),
            r.iterations.to_string(),
            r.halt_reason.as_str().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trajectories<R: Real>(table: &TrajectoryTable<R>, path: &Path) -> Result<()> {
    table.validate()?;
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_trajectories_to(table, BufWriter::new(file)).map_err(|source| Error::Csv {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_trajectories<R: Real>(path: &Path) -> Result<TrajectoryTable<R>> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::Reader::from_reader(std::io::BufReader::new(file));
    let header = reader.headers().map_err(csv_err)?;
    if header.iter().ne(TRAJECTORY_HEADER) {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            message: format!("unexpected header {:?}", header.iter().collect::<Vec<_>>()),
        });
    }
    let mut table = TrajectoryTable::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let bad = |column: &str| Error::Parse {
            path: path.to_path_buf(),
            message: format!("line {}: bad `{column}` value", i + 2),
        };
        let int = |k: usize| record[k].parse::<u64>().map_err(|_| bad(TRAJECTORY_HEADER[k]));
        let real = |k: usize| {
            record[k]
                .parse::<f64>()
                .ok()
                .and_then(R::from_f64)
                .ok_or_else(|| bad(TRAJECTORY_HEADER[k]))
        };
        table.rows.push(TrajectoryRow {
            eta: real(0)?,
            lambda: real(1)?,
            run: int(2)? as usize,
            seed: int(3)?,
            generation: int(4)?,
            c_t: int(5)? as usize,
            c_s: int(6)? as usize,
            effectiveness: real(7)?,
            resources: real(8)?,
            endowment: real(9)?,
            iterations: int(10)?,
            halt_reason: HaltReason::parse(&record[11]).ok_or_else(|| bad("halt_reason"))?,
        });
    }
    table.validate()?;
    Ok(table)
}

/// Run-weighted aggregates over every cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GlobalSummary<R> {
    pub cells: usize,
    pub runs: usize,
    pub barrier_fraction: R,
}

/// Contents of a summary file. Keys are emitted in field order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryDocument<C, R> {
    pub config: C,
    pub cells: Vec<CellSummary<R>>,
    pub global: GlobalSummary<R>,
}

impl<C, R: Real> SummaryDocument<C, R> {
    pub fn new(config: C, cells: Vec<CellSummary<R>>) -> Self {
        let global = GlobalSummary {
            cells: cells.len(),
            runs: cells.iter().map(|c| c.runs).sum(),
            barrier_fraction: global_barrier_fraction(&cells),
        };
        SummaryDocument { config, cells, global }
    }
}

pub fn summary_json<C: Serialize, R: Real>(config: &C, cells: &[CellSummary<R>]) -> String {
    let doc = SummaryDocument::new(config, cells.to_vec());
    let mut text = serde_json::to_string_pretty(&doc).expect("summary is plain data");
    text.push('\n');
    text
}

pub fn write_summary<C: Serialize, R: Real>(config: &C, cells: &[CellSummary<R>], path: &Path) -> Result<()> {
    std::fs::write(path, summary_json(config, cells)).map_err(|e| Error::io(path, e))
}

pub fn read_summary<C: DeserializeOwned, R: Real>(path: &Path) -> Result<SummaryDocument<C, R>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Colors of the fixed map at 0, 1/4, 1/2, 3/4 and 1.
pub const COLOR_STOPS: [[u8; 3]; 5] = [[68, 1, 84], [59, 82, 139], [33, 145, 140], [94, 201, 98], [253, 231, 37]];

/// Piecewise-linear interpolation between [`COLOR_STOPS`]; `t` is clamped to
/// `[0, 1]` and NaN maps to the low end.
pub fn color_map(t: f64) -> [u8; 3] {
    let t = if t.is_nan() { 0.0 } else { t.clamp(0.0, 1.0) };
    let segments = (COLOR_STOPS.len() - 1) as f64;
    let k = ((t * segments).floor() as usize).min(COLOR_STOPS.len() - 2);
    let u = t * segments - k as f64;
    let (a, b) = (COLOR_STOPS[k], COLOR_STOPS[k + 1]);
    std::array::from_fn(|c| (a[c] as f64 + (b[c] as f64 - a[c] as f64) * u).round() as u8)
}

fn hex([r, g, b]: [u8; 3]) -> String {
    format!("#{r:02x}{g:02x}{b:02x}")
}

fn fmt_label(v: f64) -> String {
    format!("{v:.3}")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HeatmapMetric {
    Log2Survival,
    MeanCT,
    BarrierFraction,
}

impl HeatmapMetric {
    pub const ALL: [HeatmapMetric; 3] = [Self::Log2Survival, Self::MeanCT, Self::BarrierFraction];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Log2Survival => "log2_survival",
            Self::MeanCT => "mean_c_t",
            Self::BarrierFraction => "barrier_fraction",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.as_str() == s)
    }

    pub fn value<R: Real>(self, cell: &CellSummary<R>) -> f64 {
        match self {
            Self::Log2Survival => cell.mean_log2_survival,
            Self::MeanCT => cell.mean_final_c_t,
            Self::BarrierFraction => cell.barrier_fraction,
        }
        .to_f64_lossless()
    }
}

fn distinct_sorted(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

const CELL: f64 = 48.0;

/// SVG heatmap with eta on the horizontal axis and lambda increasing upwards.
pub fn heatmap_svg<R: Real>(cells: &[CellSummary<R>], metric: HeatmapMetric) -> Result<String> {
    if cells.is_empty() {
        return Err(Error::invalid("heatmap needs at least one cell"));
    }
    let etas = distinct_sorted(cells.iter().map(|c| c.eta.to_f64_lossless()));
    let lambdas = distinct_sorted(cells.iter().map(|c| c.lambda.to_f64_lossless()));
    let mut grid: Vec<Option<f64>> = vec![None; etas.len() * lambdas.len()];
    for c in cells {
        let i = etas.binary_search_by(|e| e.total_cmp(&c.eta.to_f64_lossless())).unwrap();
        let j = lambdas.binary_search_by(|l| l.total_cmp(&c.lambda.to_f64_lossless())).unwrap();
        let slot = &mut grid[j * etas.len() + i];
        if slot.is_some() {
            return Err(Error::invalid(format!("duplicate cell eta {} lambda {}", etas[i], lambdas[j])));
        }
        *slot = Some(metric.value(c));
    }
    if let Some(missing) = grid.iter().position(Option::is_none) {
        return Err(Error::invalid(format!(
            "incomplete grid: no cell for eta {} lambda {}",
            etas[missing % etas.len()],
            lambdas[missing / etas.len()]
        )));
    }
    let values: Vec<f64> = grid.into_iter().flatten().collect();
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scale = |v: f64| if max > min { (v - min) / (max - min) } else { 0.0 };

    let (left, top) = (70.0, 40.0);
    let (plot_w, plot_h) = (etas.len() as f64 * CELL, lambdas.len() as f64 * CELL);
    let legend_x = left + plot_w + 30.0;
    let width = legend_x + 90.0;
    let height = top + plot_h + 60.0;

    let mut svg = String::new();
    let w = &mut svg;
    writeln!(w, r#"<?xml version="1.0" encoding="UTF-8"?>"#).unwrap();
    writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="11">"#
    )
    .unwrap();
    writeln!(w, r#"<defs><linearGradient id="scale" x1="0" y1="1" x2="0" y2="0">"#).unwrap();
    for (k, stop) in COLOR_STOPS.iter().enumerate() {
        let offset = k as f64 / (COLOR_STOPS.len() - 1) as f64;
        writeln!(w, r#"<stop offset="{offset}" stop-color="{}"/>"#, hex(*stop)).unwrap();
    }
    writeln!(w, "</linearGradient></defs>").unwrap();
    writeln!(w, r#"<text x="{left}" y="20" font-size="13">{}</text>"#, metric.as_str()).unwrap();
    writeln!(w, r#"<g id="cells">"#).unwrap();
    for (j, &lambda) in lambdas.iter().enumerate() {
        for (i, &eta) in etas.iter().enumerate() {
            let v = values[j * etas.len() + i];
            let x = left + i as f64 * CELL;
            let y = top + plot_h - (j + 1) as f64 * CELL;
            writeln!(
                w,
                r#"<rect x="{x:.2}" y="{y:.2}" width="{CELL}" height="{CELL}" fill="{}"><title>eta={eta} lambda={lambda} value={v}</title></rect>"#,
                hex(color_map(scale(v)))
            )
            .unwrap();
        }
    }
    writeln!(w, "</g>").unwrap();
    for (i, eta) in etas.iter().enumerate() {
        let x = left + (i as f64 + 0.5) * CELL;
        writeln!(w, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{eta}</text>"#, top + plot_h + 16.0).unwrap();
    }
    for (j, lambda) in lambdas.iter().enumerate() {
        let y = top + plot_h - (j as f64 + 0.5) * CELL + 4.0;
        writeln!(w, r#"<text x="{:.2}" y="{y:.2}" text-anchor="end">{lambda}</text>"#, left - 6.0).unwrap();
    }
    writeln!(
        w,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">eta</text>"#,
        left + plot_w / 2.0,
        top + plot_h + 40.0
    )
    .unwrap();
    writeln!(
        w,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">lambda</text>"#,
        top + plot_h / 2.0,
        top + plot_h / 2.0
    )
    .unwrap();
    writeln!(w, r#"<g id="legend">"#).unwrap();
    writeln!(
        w,
        r#"<rect x="{legend_x:.2}" y="{top:.2}" width="16" height="{plot_h:.2}" fill="url(#scale)" stroke="black" stroke-width="0.5"/>"#
    )
    .unwrap();
    writeln!(
        w,
        r#"<text class="max" x="{:.2}" y="{:.2}">{}</text>"#,
        legend_x + 22.0,
        top + 8.0,
        fmt_label(max)
    )
    .unwrap();
    writeln!(
        w,
        r#"<text class="min" x="{:.2}" y="{:.2}">{}</text>"#,
        legend_x + 22.0,
        top + plot_h,
        fmt_label(min)
    )
    .unwrap();
    writeln!(w, "</g>\n</svg>").unwrap();
    Ok(svg)
}

pub fn render_heatmap<R: Real>(cells: &[CellSummary<R>], metric: HeatmapMetric, path: &Path) -> Result<()> {
    let svg = heatmap_svg(cells, metric)?;
    std::fs::write(path, svg).map_err(|e| Error::io(path, e))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrajectoryField {
    CT,
    CS,
    Effectiveness,
}

impl TrajectoryField {
    pub const ALL: [TrajectoryField; 3] = [Self::CT, Self::CS, Self::Effectiveness];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::CT => "c_t",
            Self::CS => "c_s",
            Self::Effectiveness => "effectiveness",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.as_str() == s)
    }

    pub fn value<R: Real>(self, row: &TrajectoryRow<R>) -> f64 {
        match self {
            Self::CT => row.c_t as f64,
            Self::CS => row.c_s as f64,
            Self::Effectiveness => row.effectiveness.to_f64_lossless(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TrajectoryPlot {
    pub field: TrajectoryField,
    pub log_y: bool,
    /// One panel per (eta, lambda) cell instead of a single shared panel.
    pub facet: bool,
}

impl TrajectoryPlot {
    pub fn new(field: TrajectoryField) -> Self {
        TrajectoryPlot {
            field,
            log_y: false,
            facet: false,
        }
    }
}

/// Line color of the `k`-th run in a panel: hues spaced by the golden angle.
pub fn series_color(k: usize) -> String {
    let h = (k as f64 * 137.507_764_050_037_85) % 360.0;
    let (s, l) = (0.65, 0.45);
    let c = (1.0 - (2.0 * l - 1.0f64).abs()) * s;
    let x = c * (1.0 - ((h / 60.0) % 2.0 - 1.0).abs());
    let (r, g, b) = match (h / 60.0) as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = l - c / 2.0;
    hex([r, g, b].map(|v| ((v + m) * 255.0).round() as u8))
}

/// A panel's (eta, lambda) cell and the runs drawn in it.
type Panel<'a, R> = ((f64, f64), Vec<&'a [TrajectoryRow<R>]>);

const PANEL_W: f64 = 420.0;
const PANEL_H: f64 = 260.0;

/// SVG line chart with one polyline per run.
pub fn trajectories_svg<R: Real>(table: &TrajectoryTable<R>, plot: TrajectoryPlot) -> Result<String> {
    if table.rows.is_empty() {
        return Err(Error::invalid("trajectory plot needs at least one row"));
    }
    table.validate()?;
    let field = plot.field;
    let transform = |v: f64| if plot.log_y { v.log10() } else { v };
    if plot.log_y {
        if let Some(r) = table.rows.iter().find(|r| field.value(r).is_nan() || field.value(r) <= 0.0) {
            return Err(Error::invalid(format!(
                "log scale needs positive {} values, run {} has {} at generation {}",
                field.as_str(),
                r.run,
                field.value(r),
                r.generation
            )));
        }
    }

    let mut panels: Vec<Panel<R>> = Vec::new();
    for run in table.runs() {
        let cell = if plot.facet {
            (run[0].eta.to_f64_lossless(), run[0].lambda.to_f64_lossless())
        } else {
            (f64::NAN, f64::NAN)
        };
        match panels.iter_mut().find(|(c, _)| c.0.total_cmp(&cell.0).is_eq() && c.1.total_cmp(&cell.1).is_eq()) {
            Some((_, runs)) => runs.push(run),
            None => panels.push((cell, vec![run])),
        }
    }

    let x_max = table.rows.iter().map(|r| r.generation).max().unwrap().max(1) as f64;
    let ys = table.rows.iter().map(|r| transform(field.value(r)));
    let (mut y_lo, mut y_hi) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), y| (lo.min(y), hi.max(y)));
    if y_hi <= y_lo {
        y_lo -= 1.0;
        y_hi += 1.0;
    }

    let columns = (panels.len() as f64).sqrt().ceil() as usize;
    let rows = panels.len().div_ceil(columns);
    let (left, top, gap) = (64.0, 36.0, 30.0);
    let cell_w = left + PANEL_W + gap;
    let cell_h = top + PANEL_H + gap + 12.0;
    let width = columns as f64 * cell_w;
    let height = rows as f64 * cell_h;
    let y_name = if plot.log_y {
        format!("log10 {}", field.as_str())
    } else {
        field.as_str().to_string()
    };

    let mut svg = String::new();
    let w = &mut svg;
    writeln!(w, r#"<?xml version="1.0" encoding="UTF-8"?>"#).unwrap();
    writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="11">"#
    )
    .unwrap();
    for (p, (cell, runs)) in panels.iter().enumerate() {
        let ox = (p % columns) as f64 * cell_w + left;
        let oy = (p / columns) as f64 * cell_h + top;
        let px = |g: u64| ox + g as f64 / x_max * PANEL_W;
        let py = |v: f64| oy + PANEL_H - (v - y_lo) / (y_hi - y_lo) * PANEL_H;
        writeln!(w, r#"<g class="panel">"#).unwrap();
        if plot.facet {
            writeln!(w, r#"<text x="{ox:.2}" y="{:.2}">eta={} lambda={}</text>"#, oy - 10.0, cell.0, cell.1).unwrap();
        }
        writeln!(
            w,
            r#"<rect x="{ox:.2}" y="{oy:.2}" width="{PANEL_W}" height="{PANEL_H}" fill="none" stroke="black" stroke-width="0.5"/>"#
        )
        .unwrap();
        for (k, run) in runs.iter().enumerate() {
            let points: Vec<String> = run
                .iter()
                .map(|r| format!("{:.2},{:.2}", px(r.generation), py(transform(field.value(r)))))
                .collect();
            writeln!(
                w,
                r#"<polyline fill="none" stroke="{}" stroke-width="1" points="{}"><title>run {} seed {}</title></polyline>"#,
                series_color(k),
                points.join(" "),
                run[0].run,
                run[0].seed
            )
            .unwrap();
        }
        let below = oy + PANEL_H + 14.0;
        writeln!(w, r#"<text x="{ox:.2}" y="{below:.2}">0</text>"#).unwrap();
        writeln!(w, r#"<text x="{:.2}" y="{below:.2}" text-anchor="end">{x_max}</text>"#, ox + PANEL_W).unwrap();
        writeln!(
            w,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">generation</text>"#,
            ox + PANEL_W / 2.0,
            below + 12.0
        )
        .unwrap();
        writeln!(w, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, ox - 4.0, oy + PANEL_H, fmt_label(y_lo)).unwrap();
        writeln!(w, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, ox - 4.0, oy + 8.0, fmt_label(y_hi)).unwrap();
        let mid = oy + PANEL_H / 2.0;
        writeln!(
            w,
            r#"<text x="{:.2}" y="{mid:.2}" text-anchor="middle" transform="rotate(-90 {:.2} {mid:.2})">{y_name}</text>"#,
            ox - 40.0,
            ox - 40.0
        )
        .unwrap();
        writeln!(w, "</g>").unwrap();
    }
    writeln!(w, "</svg>").unwrap();
    Ok(svg)
}

pub fn render_trajectories<R: Real>(table: &TrajectoryTable<R>, plot: TrajectoryPlot, path: &Path) -> Result<()> {
    let svg = trajectories_svg(table, plot)?;
    std::fs::write(path, svg).map_err(|e| Error::io(path, e))
}
