//! CSV exports, atomic file writes and the process CPU clock.

use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::Context;
use gnesplit_core::distsim::MessageStats;
use gnesplit_core::solvers::{Clock, RunTrace};
use serde::Serialize;

pub const TRACE_HEADER: [&str; 10] = [
    "iter",
    "fp_res",
    "kkt_stat",
    "kkt_feas",
    "kkt_comp",
    "kkt_cons",
    "rel_dist",
    "cpu_s",
    "comm_rounds",
    "grad_evals",
];

pub const MESSAGES_HEADER: [&str; 4] = ["iter", "phase", "messages", "scalars_sent"];

#[derive(Serialize)]
struct TraceRow {
    iter: usize,
    fp_res: f64,
    kkt_stat: f64,
    kkt_feas: f64,
    kkt_comp: f64,
    kkt_cons: f64,
    rel_dist: Option<f64>,
    cpu_s: f64,
    comm_rounds: u64,
    grad_evals: u64,
}

#[derive(Serialize)]
struct MessageRow {
    iter: usize,
    phase: usize,
    messages: u64,
    scalars_sent: u64,
}

fn to_csv<T: Serialize>(rows: impl Iterator<Item = T>, header: &[&str]) -> anyhow::Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.serialize(row)?;
    }
    Ok(w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?)
}

pub fn trace_csv(trace: &RunTrace) -> anyhow::Result<Vec<u8>> {
    let rows = trace.records.iter().map(|r| TraceRow {
        iter: r.iter,
        fp_res: r.fp_res,
        kkt_stat: r.kkt.stationarity,
        kkt_feas: r.kkt.primal_feasibility,
        kkt_comp: r.kkt.complementarity,
        kkt_cons: r.kkt.dual_consensus,
        rel_dist: r.rel_dist,
        cpu_s: r.cpu_s,
        comm_rounds: r.comm_rounds,
        grad_evals: r.grad_evals,
    });
    to_csv(rows, &TRACE_HEADER)
}

pub fn messages_csv(stats: &[MessageStats]) -> anyhow::Result<Vec<u8>> {
    let rows = stats.iter().map(|s| MessageRow {
        iter: s.iter,
        phase: s.phase,
        messages: s.messages,
        scalars_sent: s.scalars_sent,
    });
    to_csv(rows, &MESSAGES_HEADER)
}

/// Writes through a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let name = path.file_name().context("output path has no file name")?;
    let tmp = dir.join(format!(".{}.tmp", name.to_string_lossy()));
    {
        let mut f = fs::File::create(&tmp).with_context(|| format!("writing {}", tmp.display()))?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).with_context(|| format!("moving into {}", path.display()))?;
    Ok(())
}

/// CPU time consumed by this process.
#[derive(Debug, Clone, Copy, Default)]
pub struct ProcessCpuClock;

impl Clock for ProcessCpuClock {
    fn seconds(&self) -> f64 {
        let mut ts = libc::timespec { tv_sec: 0, tv_nsec: 0 };
        // SAFETY: `ts` is a valid, writable timespec for the duration of the call.
        let rc = unsafe { libc::clock_gettime(libc::CLOCK_PROCESS_CPUTIME_ID, &mut ts) };
        if rc != 0 {
            return 0.0;
        }
        ts.tv_sec as f64 + ts.tv_nsec as f64 * 1e-9
    }
}
