use serde::{Deserialize, Serialize};
use std::io::{Read, Write};

use crate::error::{Error, Result};

/// One control period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub t: f64,
    pub q: Vec<f64>,
    pub q_dot: Vec<f64>,
    pub position: [f64; 3],
    pub axis: [f64; 3],
    pub angle: f64,
    pub pos_err: f64,
    pub ori_err: f64,
    pub sigma: Vec<f64>,
    pub inv_cond: f64,
    pub lyapunov: f64,
    pub flags: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrajectoryLog {
    pub dt: f64,
    pub rows: Vec<LogRow>,
    /// Largest `|q_dot| / (|t| / (gamma sigma_max))` seen, when the resolver
    /// carries that bound. Not part of the CSV.
    pub max_speed_ratio: Option<f64>,
}

impl TrajectoryLog {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dof(&self) -> usize {
        self.rows.first().map_or(0, |r| r.q.len())
    }

    pub fn task_dim(&self) -> usize {
        self.rows.first().map_or(0, |r| r.sigma.len())
    }

    pub fn last(&self) -> Option<&LogRow> {
        self.rows.last()
    }

    pub fn header(n: usize, m: usize) -> Vec<String> {
        let mut h = vec!["t".to_string()];
        h.extend((0..n).map(|i| format!("q{i}")));
        h.extend((0..n).map(|i| format!("qd{i}")));
        h.extend(["px", "py", "pz", "ax", "ay", "az", "theta", "pos_err", "ori_err"].map(String::from));
        h.extend((0..m).map(|i| format!("sig{i}")));
        h.extend(["inv_cond", "lyap", "flags"].map(String::from));
        h
    }

    /// Writes the log as CSV. Floats use the shortest round-trip form, so
    /// [`TrajectoryLog::from_csv`] restores them exactly.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let (n, m) = (self.dof(), self.task_dim());
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(Self::header(n, m)).map_err(csv_err)?;
        for r in &self.rows {
            let mut rec: Vec<String> = Vec::with_capacity(2 * n + m + 13);
            rec.push(r.t.to_string());
            rec.extend(r.q.iter().map(f64::to_string));
            rec.extend(r.q_dot.iter().map(f64::to_string));
            rec.extend(r.position.iter().map(f64::to_string));
            rec.extend(r.axis.iter().map(f64::to_string));
            rec.push(r.angle.to_string());
            rec.push(r.pos_err.to_string());
            rec.push(r.ori_err.to_string());
            rec.extend(r.sigma.iter().map(f64::to_string));
            rec.push(r.inv_cond.to_string());
            rec.push(r.lyapunov.to_string());
            rec.push(r.flags.iter().map(|&f| if f { '1' } else { '0' }).collect());
            wr.write_record(&rec).map_err(csv_err)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Parses a CSV written by [`TrajectoryLog::write_csv`]. `dt` is taken
    /// from the first two time stamps.
    pub fn from_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let header: Vec<String> = rd.headers().map_err(csv_err)?.iter().map(String::from).collect();
        let n = header.iter().filter(|h| is_indexed(h, "q")).count();
        let m = header.iter().filter(|h| is_indexed(h, "sig")).count();
        if header != Self::header(n, m) {
            return Err(Error::Parse("unexpected CSV header".into()));
        }
        let mut rows = Vec::new();
        for (line, rec) in rd.records().enumerate() {
            let rec = rec.map_err(csv_err)?;
            let num = |i: usize| -> Result<f64> {
                rec.get(i)
                    .ok_or_else(|| Error::Parse(format!("row {line}: missing column {i}")))?
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("row {line}, column {}: {e}", header[i])))
            };
            let nums = |from: usize, len: usize| -> Result<Vec<f64>> { (from..from + len).map(num).collect() };
            let mut c = 1;
            let q = nums(c, n)?;
            c += n;
            let q_dot = nums(c, n)?;
            c += n;
            let p = nums(c, 7)?;
            c += 7;
            let pos_err = num(c)?;
            let ori_err = num(c + 1)?;
            c += 2;
            let sigma = nums(c, m)?;
            c += m;
            let flags_s = rec.get(c + 2).unwrap_or("");
            let flags = flags_s
                .chars()
                .map(|ch| match ch {
                    '1' => Ok(true),
                    '0' => Ok(false),
                    _ => Err(Error::Parse(format!("row {line}: bad flag `{ch}`"))),
                })
                .collect::<Result<Vec<bool>>>()?;
            rows.push(LogRow {
                t: num(0)?,
                q,
                q_dot,
                position: [p[0], p[1], p[2]],
                axis: [p[3], p[4], p[5]],
                angle: p[6],
                pos_err,
                ori_err,
                sigma,
                inv_cond: num(c)?,
                lyapunov: num(c + 1)?,
                flags,
            });
        }
        let dt = if rows.len() >= 2 { rows[1].t - rows[0].t } else { 0.0 };
        Ok(TrajectoryLog {
            dt,
            rows,
            max_speed_ratio: None,
        })
    }
}

fn is_indexed(h: &str, prefix: &str) -> bool {
    h.strip_prefix(prefix)
        .is_some_and(|rest| !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}
