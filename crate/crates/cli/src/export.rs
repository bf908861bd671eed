//! Export plot-ready files from a completed run directory: an
//! objective/volume history CSV and a field-on-grid CSV sampled from the
//! final checkpoints over the final domain's bounding box.

use shapeopt_core::geometry::{
    contains, BoundaryLoop, BoundaryPoint, Domain2D, Marker, Orientation, Vec2,
};
use shapeopt_core::net::FieldNetwork;
use std::io::Write;
use std::path::Path;

use crate::{EXIT_GEOMETRY, EXIT_MISSING, EXIT_OK};

pub fn cmd_export(run: &Path, grid: usize, out: Option<&Path>) -> u8 {
    match export(run, grid, out.unwrap_or(run)) {
        Ok(()) => EXIT_OK,
        Err(ExportError::Missing(what)) => {
            eprintln!("missing run artifact: {what}");
            EXIT_MISSING
        }
        Err(ExportError::Other(e)) => {
            eprintln!("export failed: {e}");
            EXIT_GEOMETRY
        }
    }
}

enum ExportError {
    Missing(String),
    Other(String),
}

impl From<std::io::Error> for ExportError {
    fn from(e: std::io::Error) -> Self {
        ExportError::Other(e.to_string())
    }
}

fn export(run: &Path, grid: usize, out: &Path) -> Result<(), ExportError> {
    let runlog = run.join("runlog.jsonl");
    if !runlog.exists() {
        return Err(ExportError::Missing(runlog.display().to_string()));
    }
    let text = std::fs::read_to_string(&runlog)?;
    let mut field_names: Vec<String> = Vec::new();
    let mut records: Vec<(usize, f64, f64, f64)> = Vec::new();
    for line in text.lines() {
        let v: serde_json::Value = serde_json::from_str(line)
            .map_err(|e| ExportError::Other(format!("bad runlog line: {e}")))?;
        match v.get("type").and_then(|t| t.as_str()) {
            Some("provenance") => {
                if let Some(fields) = v
                    .pointer("/data/constants/fields")
                    .and_then(|f| f.as_array())
                {
                    for f in fields {
                        if let Some(name) = f.get("name").and_then(|n| n.as_str()) {
                            field_names.push(name.to_string());
                        }
                    }
                }
            }
            Some("iteration") => {
                records.push((
                    v["k"].as_u64().unwrap_or(0) as usize,
                    v["objective"].as_f64().unwrap_or(f64::NAN),
                    v["volume"].as_f64().unwrap_or(f64::NAN),
                    v["alpha"].as_f64().unwrap_or(f64::NAN),
                ));
            }
            _ => {}
        }
    }
    std::fs::create_dir_all(out)?;

    // Objective/volume history.
    let mut f = std::io::BufWriter::new(std::fs::File::create(out.join("objective.csv"))?);
    writeln!(f, "iteration,objective,volume,alpha")?;
    for (k, j, vol, a) in &records {
        writeln!(f, "{k},{j},{vol},{a}")?;
    }
    drop(f);

    // Final domain from the boundary snapshots.
    let domain = read_final_boundary(&run.join("boundary.csv"))?;

    // Checkpoints for every field named in the provenance header.
    let mut nets: Vec<(String, FieldNetwork)> = Vec::new();
    for name in &field_names {
        let path = run.join(format!("checkpoint_{name}.txt"));
        if !path.exists() {
            return Err(ExportError::Missing(path.display().to_string()));
        }
        let net = FieldNetwork::read_checkpoint(&path)
            .map_err(|e| ExportError::Other(format!("{}: {e}", path.display())))?;
        nets.push((name.clone(), net));
    }

    // Field-on-grid CSV over the bounding box.
    let (lo, hi) = domain.bounding_box();
    let mut f = std::io::BufWriter::new(std::fs::File::create(out.join("fields.csv"))?);
    let mut header = String::from("x1,x2,inside");
    for (name, net) in &nets {
        if net.arch.output_dim == 1 {
            header.push_str(&format!(",{name}"));
        } else {
            for c in 1..=net.arch.output_dim {
                header.push_str(&format!(",{name}_{c}"));
            }
        }
    }
    writeln!(f, "{header}")?;
    for iy in 0..grid {
        for ix in 0..grid {
            let frac = |i: usize| {
                if grid == 1 {
                    0.5
                } else {
                    i as f64 / (grid - 1) as f64
                }
            };
            let p = Vec2::new(
                lo.x + frac(ix) * (hi.x - lo.x),
                lo.y + frac(iy) * (hi.y - lo.y),
            );
            let inside = contains(&domain, p);
            let mut row = format!("{},{},{}", p.x, p.y, inside);
            for (_, net) in &nets {
                for v in net.forward(p) {
                    row.push_str(&format!(",{v}"));
                }
            }
            writeln!(f, "{row}")?;
        }
    }
    Ok(())
}

fn read_final_boundary(path: &Path) -> Result<Domain2D, ExportError> {
    if !path.exists() {
        return Err(ExportError::Missing(path.display().to_string()));
    }
    let text = std::fs::read_to_string(path)?;
    let mut rows: Vec<(usize, usize, usize, f64, f64, Marker, bool)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 || line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 7 {
            return Err(ExportError::Other(format!("bad boundary row: {line}")));
        }
        let parse_err = |what: &str| ExportError::Other(format!("bad {what} in: {line}"));
        rows.push((
            cols[0].parse().map_err(|_| parse_err("iteration"))?,
            cols[1].parse().map_err(|_| parse_err("loop_id"))?,
            cols[2].parse().map_err(|_| parse_err("point_id"))?,
            cols[3].parse().map_err(|_| parse_err("x1"))?,
            cols[4].parse().map_err(|_| parse_err("x2"))?,
            Marker::parse(cols[5]).ok_or_else(|| parse_err("marker"))?,
            cols[6].parse().map_err(|_| parse_err("movable"))?,
        ));
    }
    let last = rows
        .iter()
        .map(|r| r.0)
        .max()
        .ok_or_else(|| ExportError::Other("empty boundary csv".into()))?;
    let mut loops: Vec<Vec<(usize, BoundaryPoint)>> = Vec::new();
    for (it, lid, pid, x, y, marker, movable) in rows {
        if it != last {
            continue;
        }
        if loops.len() <= lid {
            loops.resize_with(lid + 1, Vec::new);
        }
        loops[lid].push((pid, BoundaryPoint { position: Vec2::new(x, y), marker, movable }));
    }
    let loops: Vec<BoundaryLoop> = loops
        .into_iter()
        .map(|mut pts| {
            pts.sort_by_key(|(pid, _)| *pid);
            let points: Vec<BoundaryPoint> = pts.into_iter().map(|(_, p)| p).collect();
            let probe = BoundaryLoop::new(points.clone(), Orientation::Outer);
            let orientation = if probe.signed_area() > 0.0 {
                Orientation::Outer
            } else {
                Orientation::Hole
            };
            BoundaryLoop::new(points, orientation)
        })
        .collect();
    Domain2D::new(loops).map_err(|e| ExportError::Other(e.to_string()))
}
