//! Plan dispatch.
//!
//! A plan that passes every gate is handed to a [`PlanSink`]. The shipped
//! sink writes the job file and a G-code rendering next to the report. A
//! robot-controller client would implement the same trait and upload the
//! job instead; none is provided.

use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use spraycell_core::planner::{write_gcode, JobFile};

pub const PLAN_FILE: &str = "plan.json";
pub const GCODE_FILE: &str = "plan.gcode";

pub trait PlanSink {
    /// Delivers one job for the scan whose artifacts live in `out_dir` and
    /// returns the names of any files written there, the primary plan first.
    fn dispatch(&mut self, out_dir: &Path, job: &JobFile) -> Result<Vec<String>>;
}

/// Writes `plan.json` and `plan.gcode` next to the report.
#[derive(Debug, Clone, Copy, Default)]
pub struct FileSink;

impl PlanSink for FileSink {
    fn dispatch(&mut self, out_dir: &Path, job: &JobFile) -> Result<Vec<String>> {
        job.save(out_dir.join(PLAN_FILE)).context("writing plan")?;
        let file = std::fs::File::create(out_dir.join(GCODE_FILE)).context("creating G-code file")?;
        let mut w = std::io::BufWriter::new(file);
        write_gcode(&mut w, job).context("writing G-code")?;
        w.flush().context("writing G-code")?;
        Ok(vec![PLAN_FILE.into(), GCODE_FILE.into()])
    }
}
