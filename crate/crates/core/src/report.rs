//! CSV emitters and atomic file writes.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use crate::error::Result;
use crate::fedsim::MetricsLog;
use crate::interp::InterpGrid;
use crate::scenes::StatsReport;

/// Writes through a sibling temp file and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(result?)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// `round,global_acc,local_acc,elapsed_s`. Wall time is left blank unless
/// `wall_time` is set, so reruns produce identical bytes.
pub fn metrics_csv(log: &MetricsLog, wall_time: bool) -> String {
    let mut s = String::from("round,global_acc,local_acc,elapsed_s\n");
    for r in &log.records {
        let elapsed = if wall_time { format!("{:.3}", r.elapsed_s) } else { String::new() };
        let _ = writeln!(s, "{},{},{},{}", r.round, opt(r.global_acc), opt(r.local_acc), elapsed);
    }
    s
}

/// `round,client,local_acc`, one row per evaluated client.
pub fn per_client_csv(log: &MetricsLog) -> String {
    let mut s = String::from("round,client,local_acc\n");
    for r in &log.records {
        for (k, a) in &r.per_client {
            let _ = writeln!(s, "{},{k},{a}", r.round);
        }
    }
    s
}

/// `round,mode,name,raw,effective`.
pub fn coefficient_csv(log: &MetricsLog, mode: &str) -> String {
    let mut s = String::from("round,mode,name,raw,effective\n");
    for rec in &log.coefficients {
        for c in &rec.coefficients {
            let _ = writeln!(s, "{},{mode},{},{},{}", rec.round, c.name, c.raw, c.effective);
        }
    }
    s
}

/// `client,class,count` for every client and class.
pub fn stats_csv(stats: &StatsReport) -> String {
    let mut s = String::from("client,class,count\n");
    for (k, row) in stats.histogram.iter().enumerate() {
        for (c, n) in row.iter().enumerate() {
            let _ = writeln!(s, "{k},{c},{n}");
        }
    }
    s
}

/// `alpha,beta,local_acc`.
pub fn heatmap_csv(grid: &InterpGrid) -> String {
    let mut s = String::from("alpha,beta,local_acc\n");
    for (i, a) in grid.alphas.iter().enumerate() {
        for (j, b) in grid.betas.iter().enumerate() {
            let _ = writeln!(s, "{a},{b},{}", grid.acc[i][j]);
        }
    }
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckRow {
    pub check: String,
    pub generator: String,
    pub max_violation: f64,
    pub pass: bool,
}

/// `check,generator,max_violation,pass`.
pub fn check_csv(rows: &[CheckRow]) -> String {
    let mut s = String::from("check,generator,max_violation,pass\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{:e},{}", r.check, r.generator, r.max_violation, r.pass);
    }
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub way: String,
    pub best_lr: f64,
    pub global_acc: Option<f64>,
    pub local_acc: f64,
}

/// `way,best_lr,global_acc,local_acc`.
pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut s = String::from("way,best_lr,global_acc,local_acc\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{},{}", r.way, r.best_lr, opt(r.global_acc), r.local_acc);
    }
    s
}
