//! Plot-ready output: per-step CSV logs, plans, strobe poses, heightmaps,
//! sweep and ablation tables, and JSON summaries.
//!
//! Every float is written at 9 significant digits so reruns diff cleanly.
//! Files are never replaced unless `force` is set.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Pose;
use crate::harness::{AblationTable, RunLog, SweepRow};
use crate::terrain::Heightmap;
use crate::trajectory::TrajectoryPlan;

pub const RUN_CSV_HEADER: &str = "t,px,py,pz,yaw,pitch,roll,\
att_px,att_py,att_pz,att_yaw,att_pitch,att_roll,\
plan_px,plan_py,plan_pz,plan_yaw,plan_pitch,plan_roll,\
fx,fy,fz,tx,ty,tz,D1,D2,D3,D4,D5,D6,F1,F2,F3,F4,F5,F6,phase,pstop";

/// `v` rounded to 9 significant digits.
pub fn round_sig9(v: f64) -> f64 {
    if !v.is_finite() || v == 0.0 {
        return if v == 0.0 { 0.0 } else { v };
    }
    format!("{v:.8e}").parse().expect("formatted float parses")
}

/// Shortest decimal text of `v` at 9 significant digits.
pub fn fmt9(v: f64) -> String {
    if v.is_nan() {
        return "NaN".into();
    }
    format!("{}", round_sig9(v))
}

/// Opens `path` for writing, creating parent directories. Existing files
/// are an error unless `force`.
pub fn create_output(path: &Path, force: bool) -> Result<BufWriter<File>> {
    if path.exists() && !force {
        return Err(Error::WouldOverwrite {
            path: path.to_path_buf(),
        });
    }
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| io_error(dir, source))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| io_error(path, source))
}

fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes with `body` into a fresh file, attaching the path to I/O errors.
pub fn write_file(
    path: &Path,
    force: bool,
    body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<PathBuf> {
    let mut w = create_output(path, force)?;
    body(&mut w)
        .and_then(|_| w.flush())
        .map_err(|source| io_error(path, source))?;
    Ok(path.to_path_buf())
}

/// `x, y, z, yaw, pitch, roll` with pitch as the elevation of the cutting
/// direction (nose-down negative), matching the planner.
fn pose_fields(pose: &Pose) -> [f64; 6] {
    let (yaw, pitch, roll) = pose.euler_zyx();
    let p = pose.position;
    [p.x, p.y, p.z, yaw, -pitch, roll]
}

fn join(values: impl IntoIterator<Item = f64>) -> String {
    values.into_iter().map(fmt9).collect::<Vec<_>>().join(",")
}

/// How poses are spelled in step logs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoseFormat {
    /// `x, y, z, yaw, pitch, roll` under [`RUN_CSV_HEADER`].
    #[default]
    Euler,
    /// Row-major rotation `r00..r22` followed by `x, y, z`.
    Matrix,
}

impl std::str::FromStr for PoseFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "euler" => Ok(PoseFormat::Euler),
            "matrix" => Ok(PoseFormat::Matrix),
            other => Err(Error::invalid(
                "pose_format",
                format!("unknown format `{other}` (expected euler or matrix)"),
            )),
        }
    }
}

const MATRIX_POSE_COLUMNS: [&str; 12] = [
    "r00", "r01", "r02", "r10", "r11", "r12", "r20", "r21", "r22", "px", "py", "pz",
];

fn matrix_fields(pose: &Pose) -> [f64; 12] {
    let m = pose.rotation;
    let p = pose.position;
    [
        m[(0, 0)],
        m[(0, 1)],
        m[(0, 2)],
        m[(1, 0)],
        m[(1, 1)],
        m[(1, 2)],
        m[(2, 0)],
        m[(2, 1)],
        m[(2, 2)],
        p.x,
        p.y,
        p.z,
    ]
}

/// Header of a step log in `format`.
pub fn run_csv_header(format: PoseFormat) -> String {
    match format {
        PoseFormat::Euler => RUN_CSV_HEADER.to_string(),
        PoseFormat::Matrix => {
            let pose = |prefix: &'static str| {
                MATRIX_POSE_COLUMNS
                    .iter()
                    .map(move |c| format!("{prefix}{c}"))
            };
            let tail = RUN_CSV_HEADER.split(',').skip(19);
            std::iter::once("t".to_string())
                .chain(pose(""))
                .chain(pose("att_"))
                .chain(pose("plan_"))
                .chain(tail.map(str::to_string))
                .collect::<Vec<_>>()
                .join(",")
        }
    }
}

/// One row per logged step.
pub fn write_run_csv<W: Write>(w: &mut W, log: &RunLog, format: PoseFormat) -> std::io::Result<()> {
    writeln!(w, "{}", run_csv_header(format))?;
    let pose = |p: &Pose| match format {
        PoseFormat::Euler => pose_fields(p).to_vec(),
        PoseFormat::Matrix => matrix_fields(p).to_vec(),
    };
    for r in &log.records {
        let numbers = std::iter::once(r.t)
            .chain(pose(&r.end_effector))
            .chain(pose(&r.attractor))
            .chain(pose(&r.plan))
            .chain(r.wrench.axes())
            .chain(r.ff_gains)
            .chain(r.fb_gains);
        writeln!(w, "{},{},{}", join(numbers), r.phase, u8::from(r.pstop))?;
    }
    Ok(())
}

pub fn write_plan_csv<W: Write>(w: &mut W, plan: &TrajectoryPlan) -> std::io::Result<()> {
    writeln!(w, "t,x,y,z,yaw,pitch,roll,phase")?;
    for s in &plan.samples {
        let p = s.pose.position;
        writeln!(
            w,
            "{},{}",
            join([s.t, p.x, p.y, p.z, s.yaw, s.pitch, s.roll]),
            s.phase
        )?;
    }
    Ok(())
}

/// `n` indices spread evenly over `len` steps, first and last included:
/// `round(i (len - 1) / (n - 1))`.
pub fn strobe_indices(len: usize, n: usize) -> Vec<usize> {
    match (len, n) {
        (0, _) | (_, 0) => Vec::new(),
        (_, 1) => vec![0],
        _ => {
            let n = n.min(len);
            (0..n)
                .map(|i| ((i * (len - 1)) as f64 / (n - 1) as f64).round() as usize)
                .collect()
        }
    }
}

/// End-effector poses at `n` strobe steps, with rotation rows for drawing
/// the scoop frame.
pub fn write_strobe_csv<W: Write>(w: &mut W, log: &RunLog, n: usize) -> std::io::Result<()> {
    writeln!(
        w,
        "step,t,px,py,pz,yaw,pitch,roll,r00,r01,r02,r10,r11,r12,r20,r21,r22"
    )?;
    for i in strobe_indices(log.records.len(), n) {
        let r = &log.records[i];
        let rot = matrix_fields(&r.end_effector).into_iter().take(9);
        writeln!(
            w,
            "{i},{}",
            join(
                std::iter::once(r.t)
                    .chain(pose_fields(&r.end_effector))
                    .chain(rot)
            )
        )?;
    }
    Ok(())
}

/// Dense grid: the first row holds cell-center x, the first column cell-center y.
pub fn write_heightmap_csv<W: Write>(w: &mut W, map: &Heightmap) -> std::io::Result<()> {
    let xs = (0..map.nx).map(|ix| map.cell_center(ix, 0).0);
    writeln!(w, "y\\x,{}", join(xs))?;
    for iy in 0..map.ny {
        let y = map.cell_center(0, iy).1;
        let row = &map.heights[iy * map.nx..(iy + 1) * map.nx];
        writeln!(w, "{},{}", fmt9(y), join(row.iter().copied()))?;
    }
    Ok(())
}

pub fn write_sweep_csv<W: Write>(w: &mut W, rows: &[SweepRow]) -> std::io::Result<()> {
    writeln!(
        w,
        "parameter,level,value,volume_mean,volume_std,pstop_rate,completion_mean"
    )?;
    for r in rows {
        writeln!(
            w,
            "{},{},{}",
            r.parameter,
            r.level,
            join([
                r.value,
                r.volume_mean,
                r.volume_std,
                r.pstop_rate,
                r.completion_mean
            ])
        )?;
    }
    Ok(())
}

pub fn write_ablation_csv<W: Write>(w: &mut W, table: &AblationTable) -> std::io::Result<()> {
    writeln!(
        w,
        "terrain,controller,trajectory,repetitions,volume_mean,volume_std,pstop_rate,completion_mean,completion_std"
    )?;
    for r in &table.rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.terrain,
            r.controller,
            r.trajectory,
            r.repetitions,
            join([
                r.volume_mean,
                r.volume_std,
                r.pstop_rate,
                r.completion_mean,
                r.completion_std
            ])
        )?;
    }
    Ok(())
}

/// Pretty JSON with every float rounded to 9 significant digits.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut v = serde_json::to_value(value)
        .map_err(|e| Error::invalid("json", format!("cannot serialize summary: {e}")))?;
    round_json(&mut v);
    Ok(serde_json::to_string_pretty(&v).expect("json values serialize") + "\n")
}

fn round_json(v: &mut serde_json::Value) {
    match v {
        serde_json::Value::Number(n) if n.is_f64() => {
            if let Some(x) = n
                .as_f64()
                .and_then(|x| serde_json::Number::from_f64(round_sig9(x)))
            {
                *n = x;
            }
        }
        serde_json::Value::Array(a) => a.iter_mut().for_each(round_json),
        serde_json::Value::Object(o) => o.values_mut().for_each(round_json),
        _ => {}
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T, force: bool) -> Result<PathBuf> {
    let text = to_json(value)?;
    write_file(path, force, |w| w.write_all(text.as_bytes()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(fmt9(0.0), "0");
        assert_eq!(fmt9(-0.0), "0");
        assert_eq!(fmt9(1.0), "1");
        assert_eq!(fmt9(std::f64::consts::PI), "3.14159265");
        assert_eq!(fmt9(-1234567890.0), "-1234567890");
        assert_eq!(fmt9(1.0 / 3.0 * 1e-7), "0.0000000333333333");
        assert_eq!(fmt9(f64::NAN), "NaN");
        assert_eq!(round_sig9(0.1 + 0.2), 0.3);
    }

    #[test]
    fn strobe_spacing() {
        assert_eq!(
            strobe_indices(1000, 10),
            vec![0, 111, 222, 333, 444, 555, 666, 777, 888, 999]
        );
        assert_eq!(strobe_indices(5, 10), vec![0, 1, 2, 3, 4]);
        assert_eq!(strobe_indices(7, 1), vec![0]);
        assert!(strobe_indices(0, 3).is_empty());
        assert_eq!(strobe_indices(3, 2), vec![0, 2]);
    }

    #[test]
    fn header_has_expected_columns() {
        let cols: Vec<&str> = RUN_CSV_HEADER.split(',').collect();
        assert_eq!(cols.len(), 39);
        assert_eq!(cols[0], "t");
        assert_eq!(cols[19], "fx");
        assert_eq!(cols[25], "D1");
        assert_eq!(cols[37], "phase");
        assert_eq!(cols[38], "pstop");
        let matrix = run_csv_header(PoseFormat::Matrix);
        let cols: Vec<&str> = matrix.split(',').collect();
        assert_eq!(cols.len(), 1 + 36 + 20);
        assert_eq!(cols[1], "r00");
        assert_eq!(cols[13], "att_r00");
        assert_eq!(cols[37], "fx");
    }

    #[test]
    fn json_floats_are_rounded() {
        let text = to_json(&serde_json::json!({"a": 0.1 + 0.2, "b": [1.0 / 3.0], "n": 3})).unwrap();
        assert!(text.contains("\"a\": 0.3"));
        assert!(text.contains("0.333333333"));
        assert!(!text.contains("0.3333333333"));
        assert!(text.contains("\"n\": 3"));
    }
}
