//! Output files: CSV with 17 significant digits and LF line endings, written
//! atomically through a temporary file in the target directory.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::classify::ExtinctionStats;
use crate::invasion::{Histogram2d, HistogramSpec, SweepRow};
use crate::sim::Trajectory;

/// 17 significant digits, enough to round-trip any double.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// Writes `bytes` to `path` by creating a sibling temporary file and renaming it.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().ok_or_else(|| std::io::Error::other("output path has no file name"))?;
    let tmp: PathBuf = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> std::io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn csv_bytes<I, R>(header: &[&str], rows: I) -> std::io::Result<Vec<u8>>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.into_iter().collect::<Vec<_>>())?;
    }
    w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))
}

pub fn write_csv<I, R>(path: &Path, header: &[&str], rows: I) -> std::io::Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    write_atomic(path, &csv_bytes(header, rows)?)
}

/// `t,x1,x2,x3,env` with 1-based environments.
pub fn trajectory_csv(traj: &Trajectory) -> std::io::Result<Vec<u8>> {
    csv_bytes(
        &["t", "x1", "x2", "x3", "env"],
        traj.samples
            .iter()
            .map(|s| vec![fmt_f64(s.t), fmt_f64(s.x[0]), fmt_f64(s.x[1]), fmt_f64(s.x[2]), (s.env + 1).to_string()]),
    )
}

/// `t,from,to` with 1-based environments.
pub fn switches_csv(traj: &Trajectory) -> std::io::Result<Vec<u8>> {
    csv_bytes(
        &["t", "from", "to"],
        traj.switches.iter().map(|e| vec![fmt_f64(e.t), (e.from + 1).to_string(), (e.to + 1).to_string()]),
    )
}

pub fn sweep_csv(rows: &[SweepRow]) -> std::io::Result<Vec<u8>> {
    csv_bytes(
        &["face", "invader", "q_scale", "lambda", "stderr", "lambda_avg"],
        rows.iter().map(|r| {
            vec![
                r.face.to_string(),
                r.invader.to_string(),
                fmt_f64(r.q_scale),
                fmt_f64(r.lambda),
                fmt_f64(r.stderr),
                fmt_opt(r.lambda_avg),
            ]
        }),
    )
}

/// `replicate,x1,x2,x3,slope2`; the slope is blank when it could not be fitted.
pub fn extinction_csv(stats: &ExtinctionStats) -> std::io::Result<Vec<u8>> {
    csv_bytes(
        &["replicate", "x1", "x2", "x3", "slope2"],
        stats
            .replicates
            .iter()
            .enumerate()
            .map(|(i, o)| vec![i.to_string(), fmt_f64(o.x[0]), fmt_f64(o.x[1]), fmt_f64(o.x[2]), fmt_opt(o.slopes[1])]),
    )
}

/// One row per horizontal bin: `x_lo,x_hi,` followed by one column per
/// vertical bin, labelled by its lower edge.
pub fn histogram_csv(h: &Histogram2d, spec: &HistogramSpec) -> std::io::Result<Vec<u8>> {
    let xe = spec.x_edges();
    let ye = spec.y_edges();
    let labels: Vec<String> = ye[..ye.len() - 1].iter().map(|y| format!("y_{}", fmt_f64(*y))).collect();
    let mut header = vec!["x_lo", "x_hi"];
    header.extend(labels.iter().map(String::as_str));
    csv_bytes(
        &header,
        h.mass.iter().enumerate().map(|(i, row)| {
            let mut out = vec![fmt_f64(xe[i]), fmt_f64(xe[i + 1])];
            out.extend(row.iter().map(|m| fmt_f64(*m)));
            out
        }),
    )
}
