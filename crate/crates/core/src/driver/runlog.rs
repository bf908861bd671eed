//! Run records and their on-disk forms: JSON-lines log, boundary CSV,
//! collocation CSV, checkpoints, and the run summary.

use crate::geometry::{CollocationSet, Domain2D};
use crate::net::FieldNetwork;
use crate::solver::TraceRecord;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

/// Certificate of a rejected boundary update: the offending segment pair at
/// the attempted step length.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RetryCertificate {
    pub alpha: f64,
    pub loop_id: usize,
    pub seg_a: usize,
    pub seg_b: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    pub objective: f64,
    pub volume: f64,
    pub alpha: f64,
    pub retries: usize,
    pub stage_losses: BTreeMap<String, f64>,
    pub stage_iterations: BTreeMap<String, usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub retry_certificates: Vec<RetryCertificate>,
}

/// One boundary snapshot: positions and flags for every loop point.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundarySnapshot {
    pub iteration: usize,
    pub domain: Domain2D,
}

#[derive(Clone, Debug, Default)]
pub struct RunLog {
    pub provenance: serde_json::Value,
    pub records: Vec<IterationRecord>,
    pub snapshots: Vec<BoundarySnapshot>,
    pub solver_trace: Vec<(usize, String, Vec<TraceRecord>)>,
}

impl RunLog {
    /// Bit-level equality of the numeric content (reproducibility checks).
    pub fn bitwise_eq(&self, other: &RunLog) -> bool {
        if self.records.len() != other.records.len()
            || self.snapshots.len() != other.snapshots.len()
        {
            return false;
        }
        for (a, b) in self.records.iter().zip(&other.records) {
            if serde_json::to_string(a).unwrap() != serde_json::to_string(b).unwrap() {
                return false;
            }
        }
        for (a, b) in self.snapshots.iter().zip(&other.snapshots) {
            if a.iteration != b.iteration {
                return false;
            }
            for (la, lb) in a.domain.loops.iter().zip(&b.domain.loops) {
                for (pa, pb) in la.points.iter().zip(&lb.points) {
                    if pa.position.x.to_bits() != pb.position.x.to_bits()
                        || pa.position.y.to_bits() != pb.position.y.to_bits()
                    {
                        return false;
                    }
                }
            }
        }
        true
    }

    pub fn write_jsonl(&self, path: &Path) -> std::io::Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        let header = serde_json::json!({ "type": "provenance", "data": self.provenance });
        writeln!(f, "{header}")?;
        for rec in &self.records {
            let mut v = serde_json::to_value(rec).unwrap();
            v.as_object_mut()
                .unwrap()
                .insert("type".into(), "iteration".into());
            writeln!(f, "{v}")?;
        }
        Ok(())
    }

    pub fn write_boundary_csv(&self, path: &Path) -> std::io::Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "iteration,loop_id,point_id,x1,x2,marker,movable")?;
        for snap in &self.snapshots {
            for (lid, lp) in snap.domain.loops.iter().enumerate() {
                for (pid, p) in lp.points.iter().enumerate() {
                    writeln!(
                        f,
                        "{},{},{},{},{},{},{}",
                        snap.iteration,
                        lid,
                        pid,
                        p.position.x,
                        p.position.y,
                        p.marker.as_str(),
                        p.movable
                    )?;
                }
            }
        }
        Ok(())
    }

    pub fn write_trace_jsonl(&self, path: &Path) -> std::io::Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        for (call_id, stage, records) in &self.solver_trace {
            for r in records {
                let line = serde_json::json!({
                    "call_id": call_id,
                    "stage": stage,
                    "iteration": r.iteration,
                    "loss": r.loss,
                    "gradient_norm": r.gradient_norm,
                    "step_length": r.step_length,
                    "wolfe_ok": r.wolfe_ok,
                });
                writeln!(f, "{line}")?;
            }
        }
        Ok(())
    }
}

pub fn write_collocation_csv(colloc: &CollocationSet, path: &Path) -> std::io::Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "kind,x1,x2,weight,nx,ny,marker")?;
    for s in &colloc.interior {
        writeln!(
            f,
            "interior,{},{},{},,,",
            s.position.x, s.position.y, s.weight
        )?;
    }
    for s in &colloc.boundary {
        writeln!(
            f,
            "boundary,{},{},{},{},{},{}",
            s.position.x,
            s.position.y,
            s.weight,
            s.normal.x,
            s.normal.y,
            s.marker.as_str()
        )?;
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunSummary {
    pub status: String,
    pub initial_objective: f64,
    pub final_objective: f64,
    pub initial_volume: f64,
    pub final_volume: f64,
    pub max_volume_drift: f64,
    pub iterations: usize,
    pub wall_time_seconds: f64,
}

/// Write everything a run produces into `dir`.
pub fn write_run_outputs(
    dir: &Path,
    log: &RunLog,
    nets: &[(String, FieldNetwork)],
    final_colloc: Option<&CollocationSet>,
    summary: &RunSummary,
    write_trace: bool,
) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    log.write_jsonl(&dir.join("runlog.jsonl"))?;
    log.write_boundary_csv(&dir.join("boundary.csv"))?;
    if write_trace {
        log.write_trace_jsonl(&dir.join("solver_trace.jsonl"))?;
    }
    for (name, net) in nets {
        net.write_checkpoint(&dir.join(format!("checkpoint_{name}.txt")))?;
    }
    if let Some(colloc) = final_colloc {
        write_collocation_csv(colloc, &dir.join("collocation_final.csv"))?;
    }
    let mut f = std::fs::File::create(dir.join("summary.json"))?;
    writeln!(f, "{}", serde_json::to_string_pretty(summary)?)?;
    Ok(())
}
