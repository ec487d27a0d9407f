use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::complex::PointCloud;
use crate::dynamics::{FlowTrajectory, Snapshot};
use crate::error::{Error, Result};
use crate::persistence::{DiagramPoint, PersistenceDiagram};
use crate::transport::Point2;

const SVG_SIZE: f64 = 600.0;
const SVG_MARGIN: f64 = 40.0;

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|e| Error::io(path, e))
}

fn finish(path: &Path, mut w: csv::Writer<fs::File>) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

/// Point CSV with header `x,y[,z...]`.
pub fn write_points_csv(path: &Path, dim: usize, coords: &[f64]) -> Result<()> {
    let mut w = csv_writer(path)?;
    let header: Vec<String> = (0..dim)
        .map(|c| match c {
            0 => "x".to_string(),
            1 => "y".to_string(),
            2 => "z".to_string(),
            c => format!("x{c}"),
        })
        .collect();
    w.write_record(&header).map_err(|e| Error::io(path, e))?;
    for row in coords.chunks(dim) {
        w.write_record(row.iter().map(|v| v.to_string())).map_err(|e| Error::io(path, e))?;
    }
    finish(path, w)
}

/// Reads a point CSV: a header row naming the coordinates, then one point
/// per row.
pub fn read_points_csv(path: &Path) -> Result<PointCloud> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::io(path, e))?;
    let dim = r.headers().map_err(|e| Error::io(path, e))?.len();
    let mut coords = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| Error::io(path, e))?;
        for field in rec.iter() {
            let v: f64 = field.trim().parse().map_err(|_| {
                Error::InvalidInput(format!("{}: row {}: {field:?} is not a number", path.display(), line + 1))
            })?;
            coords.push(v);
        }
    }
    PointCloud::new(coords, dim)
}

/// Diagram CSV with columns `birth,death,birth_simplex,death_simplex`.
pub fn write_diagram_csv(path: &Path, dgm: &PersistenceDiagram) -> Result<()> {
    let mut w = csv_writer(path)?;
    for p in &dgm.points {
        w.serialize(p).map_err(|e| Error::io(path, e))?;
    }
    if dgm.points.is_empty() {
        w.write_record(["birth", "death", "birth_simplex", "death_simplex"]).map_err(|e| Error::io(path, e))?;
    }
    finish(path, w)
}

/// Parses a diagram CSV back into its points.
pub fn read_diagram_csv(path: &Path) -> Result<Vec<DiagramPoint>> {
    #[derive(serde::Deserialize)]
    struct Row {
        birth: f64,
        death: f64,
        birth_simplex: usize,
        death_simplex: usize,
    }
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::io(path, e))?;
    r.deserialize::<Row>()
        .map(|row| {
            let row = row.map_err(|e| Error::io(path, e))?;
            Ok(DiagramPoint { birth: row.birth, death: row.death, birth_simplex: row.birth_simplex, death_simplex: row.death_simplex })
        })
        .collect()
}

fn write_target_csv(path: &Path, target: &[Point2]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["birth", "death"]).map_err(|e| Error::io(path, e))?;
    for p in target {
        w.write_record([p[0].to_string(), p[1].to_string()]).map_err(|e| Error::io(path, e))?;
    }
    finish(path, w)
}

struct Frame {
    lo: [f64; 2],
    scale: f64,
}

impl Frame {
    /// Square frame around the points, equal scale on both axes.
    fn fit(points: impl Iterator<Item = Point2>) -> Self {
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in points {
            for c in 0..2 {
                lo[c] = lo[c].min(p[c]);
                hi[c] = hi[c].max(p[c]);
            }
        }
        if !lo[0].is_finite() {
            return Self { lo: [0.0, 0.0], scale: SVG_SIZE - 2.0 * SVG_MARGIN };
        }
        let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-9) * 1.05;
        let center = [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])];
        Self { lo: [center[0] - 0.5 * span, center[1] - 0.5 * span], scale: (SVG_SIZE - 2.0 * SVG_MARGIN) / span }
    }

    fn map(&self, p: Point2) -> (f64, f64) {
        (
            SVG_MARGIN + (p[0] - self.lo[0]) * self.scale,
            SVG_SIZE - SVG_MARGIN - (p[1] - self.lo[1]) * self.scale,
        )
    }

    fn span(&self) -> f64 {
        (SVG_SIZE - 2.0 * SVG_MARGIN) / self.scale
    }
}

fn svg_open(title: &str, frame: &Frame, x_label: &str, y_label: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="600" height="600" viewBox="0 0 600 600" font-family="sans-serif" font-size="12">"##
    );
    let _ = writeln!(s, r##"<rect width="600" height="600" fill="white"/>"##);
    let _ = writeln!(s, r##"<text x="300" y="22" text-anchor="middle" font-size="14">{title}</text>"##);
    let (m, e) = (SVG_MARGIN, SVG_SIZE - SVG_MARGIN);
    let _ = writeln!(s, r##"<rect x="{m}" y="{m}" width="{w}" height="{w}" fill="none" stroke="#888"/>"##, w = e - m);
    let (lo, hi) = (frame.lo, [frame.lo[0] + frame.span(), frame.lo[1] + frame.span()]);
    let _ = writeln!(s, r##"<text x="{m}" y="{y}" text-anchor="start">{:.3}</text>"##, lo[0], y = e + 16.0);
    let _ = writeln!(s, r##"<text x="{e}" y="{y}" text-anchor="end">{:.3}</text>"##, hi[0], y = e + 16.0);
    let _ = writeln!(s, r##"<text x="300" y="{y}" text-anchor="middle">{x_label}</text>"##, y = e + 30.0);
    let _ = writeln!(s, r##"<text x="{x}" y="{e}" text-anchor="end">{:.3}</text>"##, lo[1], x = m - 4.0);
    let _ = writeln!(s, r##"<text x="{x}" y="{y}" text-anchor="end">{:.3}</text>"##, hi[1], x = m - 4.0, y = m + 10.0);
    let _ = writeln!(s, r##"<text x="14" y="300" transform="rotate(-90 14 300)" text-anchor="middle">{y_label}</text>"##);
    s
}

fn circles(s: &mut String, frame: &Frame, points: &[Point2], fill: &str) {
    for &p in points {
        let (x, y) = frame.map(p);
        let _ = writeln!(s, r##"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="{fill}" fill-opacity="0.8"/>"##);
    }
}

/// Scatter plot of the first two coordinates of a cloud.
pub fn cloud_svg(title: &str, points: &[Point2]) -> String {
    let frame = Frame::fit(points.iter().copied());
    let mut s = svg_open(title, &frame, "x", "y");
    circles(&mut s, &frame, points, "#1f77b4");
    s.push_str("</svg>\n");
    s
}

/// Persistence diagram with its targets and the diagonal.
pub fn diagram_svg(title: &str, diagram: &[Point2], target: &[Point2]) -> String {
    let frame = Frame::fit(diagram.iter().chain(target).copied().chain([[0.0, 0.0]]));
    let mut s = svg_open(title, &frame, "birth", "death");
    let (a, b) = (frame.lo[0].min(frame.lo[1]), frame.lo[0].max(frame.lo[1]) + frame.span());
    let (x1, y1) = frame.map([a, a]);
    let (x2, y2) = frame.map([b, b]);
    let _ = writeln!(s, r##"<clipPath id="plot"><rect x="{m}" y="{m}" width="{w}" height="{w}"/></clipPath>"##, m = SVG_MARGIN, w = SVG_SIZE - 2.0 * SVG_MARGIN);
    let _ = writeln!(s, r##"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="#444" stroke-dasharray="4 3" clip-path="url(#plot)"/>"##);
    circles(&mut s, &frame, target, "#ff7f0e");
    circles(&mut s, &frame, diagram, "#1f77b4");
    let _ = writeln!(s, r##"<circle cx="{x}" cy="{y}" r="4" fill="#1f77b4"/><text x="{tx}" y="{ty}">diagram</text>"##, x = SVG_MARGIN + 12.0, y = SVG_MARGIN + 14.0, tx = SVG_MARGIN + 22.0, ty = SVG_MARGIN + 18.0);
    let _ = writeln!(s, r##"<circle cx="{x}" cy="{y}" r="4" fill="#ff7f0e"/><text x="{tx}" y="{ty}">target</text>"##, x = SVG_MARGIN + 12.0, y = SVG_MARGIN + 32.0, tx = SVG_MARGIN + 22.0, ty = SVG_MARGIN + 36.0);
    s.push_str("</svg>\n");
    s
}

fn planar(dim: usize, coords: &[f64]) -> Vec<Point2> {
    coords.chunks(dim).map(|p| [p[0], if dim > 1 { p[1] } else { 0.0 }]).collect()
}

fn write_state(dir: &Path, state: &Snapshot) -> Result<()> {
    match state {
        Snapshot::Points { dim, coords } => write_points_csv(&dir.join("points.csv"), *dim, coords),
        Snapshot::Filtration { values } => {
            let path = dir.join("filtration.csv");
            let mut w = csv_writer(&path)?;
            w.write_record(["value"]).map_err(|e| Error::io(&path, e))?;
            for v in values {
                w.write_record([v.to_string()]).map_err(|e| Error::io(&path, e))?;
            }
            finish(&path, w)
        }
    }
}

#[derive(Serialize)]
struct TrajectoryFile<'a, C: Serialize> {
    config: &'a C,
    trajectory: &'a FlowTrajectory,
}

/// Writes `trajectory.json`, one `step_<k>` directory per outer step with
/// the state, diagrams and targets, a `final` directory with the end state,
/// and optionally SVG plots under `plots/`.
pub fn emit_artifacts<C: Serialize>(trajectory: &FlowTrajectory, config: &C, outdir: &Path, plots: bool) -> Result<Vec<PathBuf>> {
    create_dir(outdir)?;
    let mut written = Vec::new();
    let json = serde_json::to_string_pretty(&TrajectoryFile { config, trajectory })
        .map_err(|e| Error::io(outdir.join("trajectory.json"), e))?;
    let path = outdir.join("trajectory.json");
    write_file(&path, &(json + "\n"))?;
    written.push(path);

    let plot_dir = outdir.join("plots");
    if plots {
        create_dir(&plot_dir)?;
    }
    for step in &trajectory.steps {
        let dir = outdir.join(format!("step_{}", step.step));
        create_dir(&dir)?;
        write_state(&dir, &step.state)?;
        for rec in &step.degrees {
            write_diagram_csv(&dir.join(format!("dgm{}.csv", rec.degree)), &rec.diagram)?;
            write_target_csv(&dir.join(format!("target{}.csv", rec.degree)), &rec.target)?;
            if plots {
                let path = plot_dir.join(format!("step_{}_dgm{}.svg", step.step, rec.degree));
                let title = format!("H{} diagram, step {}", rec.degree, step.step);
                write_file(&path, &diagram_svg(&title, &rec.diagram.coords(), &rec.target))?;
            }
        }
        if let (true, Snapshot::Points { dim, coords }) = (plots, &step.state) {
            let path = plot_dir.join(format!("step_{}_cloud.svg", step.step));
            write_file(&path, &cloud_svg(&format!("point cloud, step {}", step.step), &planar(*dim, coords)))?;
        }
        written.push(dir);
    }

    let dir = outdir.join("final");
    create_dir(&dir)?;
    write_state(&dir, &trajectory.final_state)?;
    for d in &trajectory.final_diagrams {
        write_diagram_csv(&dir.join(format!("dgm{}.csv", d.degree)), d)?;
        if plots {
            let path = plot_dir.join(format!("final_dgm{}.svg", d.degree));
            write_file(&path, &diagram_svg(&format!("H{} diagram, final", d.degree), &d.coords(), &[]))?;
        }
    }
    if let (true, Snapshot::Points { dim, coords }) = (plots, &trajectory.final_state) {
        let path = plot_dir.join("final_cloud.svg");
        write_file(&path, &cloud_svg("point cloud, final", &planar(*dim, coords)))?;
    }
    written.push(dir);
    Ok(written)
}
