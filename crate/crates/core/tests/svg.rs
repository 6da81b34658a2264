use bitworld::dynamics::Params;
use bitworld::report::{
    color_map, heatmap_svg, trajectories_svg, HeatmapMetric, TrajectoryField, TrajectoryPlot, TrajectoryRow,
    TrajectoryTable,
};
use bitworld::sweep::{run_sweep, CellSummary, SweepConfig};
use bitworld::dynamics::HaltReason;

fn cell(eta: f64, lambda: f64, v: f64) -> CellSummary<f64> {
    CellSummary {
        eta,
        lambda,
        runs: 4,
        mean_log2_survival: v,
        mean_survival: v.exp2(),
        mean_final_c_t: v,
        mean_final_c_s: v,
        barrier_fraction: 1.0,
        survivor_fraction: 0.0,
        ceiling_fraction: 0.0,
    }
}

fn hex(c: [u8; 3]) -> String {
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

fn cell_fills(svg: &str) -> Vec<(String, String)> {
    let doc = roxmltree::Document::parse(svg).expect("well-formed SVG");
    assert_eq!(doc.root_element().tag_name().name(), "svg");
    let group = doc
        .descendants()
        .find(|n| n.attribute("id") == Some("cells"))
        .expect("cell group");
    group
        .children()
        .filter(|n| n.has_tag_name("rect"))
        .map(|r| {
            let title = r.children().find(|c| c.has_tag_name("title")).unwrap().text().unwrap().to_string();
            (title, r.attribute("fill").unwrap().to_string())
        })
        .collect()
}

fn legend(svg: &str, class: &str) -> String {
    let doc = roxmltree::Document::parse(svg).unwrap();
    let node = doc.descendants().find(|n| n.attribute("class") == Some(class)).unwrap();
    node.text().unwrap().to_string()
}

#[test]
fn single_cell_heatmap() {
    let svg = heatmap_svg(&[cell(0.5, 0.5, 7.25)], HeatmapMetric::Log2Survival).unwrap();
    let cells = cell_fills(&svg);
    assert_eq!(cells.len(), 1);
    assert_eq!(legend(&svg, "min"), legend(&svg, "max"));
    assert_eq!(legend(&svg, "min"), "7.250");
}

#[test]
fn extremes_map_to_legend_endpoints() {
    let grid = [0.1, 0.5, 0.9];
    let mut cells = Vec::new();
    for (i, &eta) in grid.iter().enumerate() {
        for (j, &lambda) in grid.iter().enumerate() {
            cells.push(cell(eta, lambda, 2.0 + (i * 3 + j) as f64 * 0.5));
        }
    }
    let svg = heatmap_svg(&cells, HeatmapMetric::MeanCT).unwrap();
    let fills = cell_fills(&svg);
    assert_eq!(fills.len(), 9);
    let of = |eta: f64, lambda: f64| {
        fills
            .iter()
            .find(|(t, _)| t.starts_with(&format!("eta={eta} lambda={lambda} ")))
            .unwrap()
            .1
            .clone()
    };
    assert_eq!(of(0.1, 0.1), hex(color_map(0.0)));
    assert_eq!(of(0.9, 0.9), hex(color_map(1.0)));
    assert_eq!(of(0.5, 0.5), hex(color_map(0.5)));
    assert_eq!(legend(&svg, "min"), "2.000");
    assert_eq!(legend(&svg, "max"), "6.000");
    assert_eq!(svg, heatmap_svg(&cells, HeatmapMetric::MeanCT).unwrap());
}

#[test]
fn constant_run_is_a_horizontal_line() {
    let rows = (0..5)
        .map(|g| TrajectoryRow {
            eta: 0.2,
            lambda: 0.3,
            run: 0,
            seed: 1,
            generation: g,
            c_t: 4,
            c_s: 4,
            effectiveness: 1.0,
            resources: 4.0,
            endowment: 100.0,
            iterations: 4,
            halt_reason: HaltReason::MaxGenerations,
        })
        .collect();
    let svg = trajectories_svg(&TrajectoryTable { rows }, TrajectoryPlot::new(TrajectoryField::CT)).unwrap();
    let doc = roxmltree::Document::parse(&svg).unwrap();
    let line = doc.descendants().find(|n| n.has_tag_name("polyline")).unwrap();
    let ys: Vec<&str> = line
        .attribute("points")
        .unwrap()
        .split(' ')
        .map(|p| p.split(',').nth(1).unwrap())
        .collect();
    assert_eq!(ys.len(), 5);
    assert!(ys.iter().all(|y| *y == ys[0]));
}

#[test]
fn polylines_follow_recorded_generations() {
    let config = SweepConfig {
        eta_grid: vec![0.5, 0.95],
        lambda_grid: vec![0.8],
        runs_per_cell: 3,
        master_seed: 21,
        base: Params {
            max_generations: 120,
            ..Params::default()
        },
        trajectory_thinning: 7,
        ..SweepConfig::default()
    };
    let out = run_sweep(&config).unwrap();
    let table = TrajectoryTable::from_runs(&out.runs);
    for facet in [false, true] {
        let plot = TrajectoryPlot {
            facet,
            ..TrajectoryPlot::new(TrajectoryField::CS)
        };
        let svg = trajectories_svg(&table, plot).unwrap();
        let doc = roxmltree::Document::parse(&svg).unwrap();
        let panels = doc.descendants().filter(|n| n.attribute("class") == Some("panel")).count();
        assert_eq!(panels, if facet { 2 } else { 1 });
        let lines: Vec<_> = doc.descendants().filter(|n| n.has_tag_name("polyline")).collect();
        let with_rows: Vec<_> = out.runs.iter().filter(|r| !r.result.trajectory.is_empty()).collect();
        assert_eq!(lines.len(), with_rows.len());
        for (line, run) in lines.iter().zip(&with_rows) {
            let points = line.attribute("points").unwrap().split(' ').count();
            assert_eq!(points as u64, run.result.generations.div_ceil(7));
        }
        let colors: std::collections::HashSet<_> = lines.iter().map(|l| l.attribute("stroke").unwrap()).collect();
        assert_eq!(colors.len(), if facet { 3 } else { 6 });
    }
}
