//! CSV logs for trajectories and training reports.
//!
//! Floats are written in shortest round-trip form, so reading a file back
//! reproduces the in-memory values exactly.

use std::io::{Read, Write};

use crate::error::{HarnessError, Result};
use crate::training::EpochRecord;
use crate::trajectory::{Trajectory, TrajectoryRecord};

pub const TRAJECTORY_HEADER: [&str; 5] = ["iter", "x", "y", "f", "grad_norm"];
pub const REPORT_HEADER: [&str; 5] = ["epoch", "mean_loss", "train_acc", "test_acc", "lr"];

fn num(x: f64) -> String {
    format!("{x:?}")
}

fn check_header(found: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    if found.iter().ne(expected.iter().copied()) {
        return Err(HarnessError::Config(format!(
            "unexpected CSV header {:?}, expected {}",
            found.iter().collect::<Vec<_>>(),
            expected.join(",")
        )));
    }
    Ok(())
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, row: usize) -> Result<T> {
    rec.get(i)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| HarnessError::Config(format!("row {row}: bad value in column {i}")))
}

pub fn write_trajectory<W: Write>(traj: &Trajectory, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(TRAJECTORY_HEADER)?;
    for r in &traj.records {
        w.write_record([
            r.iteration.to_string(),
            num(r.x),
            num(r.y),
            num(r.f),
            num(r.grad_norm),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trajectory<R: Read>(reader: R) -> Result<Trajectory> {
    let mut rdr = csv::Reader::from_reader(reader);
    check_header(rdr.headers()?, &TRAJECTORY_HEADER)?;
    let mut records = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        records.push(TrajectoryRecord {
            iteration: field(&rec, 0, row + 1)?,
            x: field(&rec, 1, row + 1)?,
            y: field(&rec, 2, row + 1)?,
            f: field(&rec, 3, row + 1)?,
            grad_norm: field(&rec, 4, row + 1)?,
        });
    }
    let traj = Trajectory { records };
    traj.validate()?;
    Ok(traj)
}

pub fn write_report<W: Write>(records: &[EpochRecord], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(REPORT_HEADER)?;
    for r in records {
        w.write_record([
            r.epoch.to_string(),
            num(r.mean_loss),
            num(r.train_acc),
            num(r.test_acc),
            num(r.lr),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_report<R: Read>(reader: R) -> Result<Vec<EpochRecord>> {
    let mut rdr = csv::Reader::from_reader(reader);
    check_header(rdr.headers()?, &REPORT_HEADER)?;
    let mut records: Vec<EpochRecord> = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let r = EpochRecord {
            epoch: field(&rec, 0, row + 1)?,
            mean_loss: field(&rec, 1, row + 1)?,
            train_acc: field(&rec, 2, row + 1)?,
            test_acc: field(&rec, 3, row + 1)?,
            lr: field(&rec, 4, row + 1)?,
        };
        if r.epoch != row + 1 {
            return Err(HarnessError::Config(format!(
                "epoch {} out of sequence at row {}",
                r.epoch,
                row + 1
            )));
        }
        if !(0.0..=1.0).contains(&r.train_acc) || !(0.0..=1.0).contains(&r.test_acc) {
            return Err(HarnessError::Config(format!(
                "accuracy outside [0, 1] at epoch {}",
                r.epoch
            )));
        }
        records.push(r);
    }
    Ok(records)
}
