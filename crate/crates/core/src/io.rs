//! CSV formats. Every number is written with 17 significant digits so that
//! doubles round-trip exactly.

use std::io::{BufRead, Write};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::integrator::{JumpRecord, Trajectory};

pub fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

/// `t,x1,...,xn,is_jump_pre,is_jump_post`; a pre-jump row precedes the
/// post-jump row at the same `t`.
pub fn write_trajectory_csv(trajectory: &Trajectory, mut out: impl Write) -> Result<()> {
    let n = trajectory.dimension();
    let mut header = String::from("t");
    for i in 1..=n {
        header.push_str(&format!(",x{i}"));
    }
    header.push_str(",is_jump_pre,is_jump_post");
    writeln!(out, "{header}")?;

    let mut jumps = trajectory.jumps.iter().peekable();
    for (t, x) in &trajectory.samples {
        let mut post = false;
        if let Some(j) = jumps.next_if(|j| j.time == *t) {
            writeln!(out, "{}", row(*t, &j.pre, 1, 0))?;
            post = true;
        }
        writeln!(out, "{}", row(*t, x, 0, post as u8))?;
    }
    Ok(())
}

fn row(t: f64, x: &DVector<f64>, pre: u8, post: u8) -> String {
    let mut s = fmt_num(t);
    for v in x.iter() {
        s.push(',');
        s.push_str(&fmt_num(*v));
    }
    s.push_str(&format!(",{pre},{post}"));
    s
}

pub fn read_trajectory_csv(input: impl BufRead) -> Result<Trajectory> {
    let mut lines = input.lines();
    let header = lines.next().ok_or_else(|| Error::Io("empty trajectory CSV".into()))??;
    let cols: Vec<&str> = header.trim().split(',').collect();
    if cols.len() < 4 || cols[0] != "t" || cols[cols.len() - 2..] != ["is_jump_pre", "is_jump_post"] {
        return Err(Error::Io(format!("unexpected trajectory header: {header}")));
    }
    let n = cols.len() - 3;
    let mut samples = Vec::new();
    let mut jumps = Vec::new();
    let mut pending_pre: Option<(f64, DVector<f64>)> = None;
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Io(format!("line {}: {e}", lineno + 2)))?;
        if fields.len() != n + 3 {
            return Err(Error::Io(format!("line {}: expected {} fields", lineno + 2, n + 3)));
        }
        let t = fields[0];
        let x = DVector::from_column_slice(&fields[1..=n]);
        let (pre, post) = (fields[n + 1] != 0.0, fields[n + 2] != 0.0);
        if pre {
            pending_pre = Some((t, x));
            continue;
        }
        if post {
            let (tp, pre_x) = pending_pre
                .take()
                .filter(|(tp, _)| *tp == t)
                .ok_or_else(|| Error::Io(format!("line {}: post-jump row without pre-jump row", lineno + 2)))?;
            jumps.push(JumpRecord { index: jumps.len() + 1, time: tp, pre: pre_x, post: x.clone() });
        }
        samples.push((t, x));
    }
    let h_max = samples
        .windows(2)
        .map(|w| w[1].0 - w[0].0)
        .fold(0.0, f64::max);
    Ok(Trajectory { samples, jumps, h_max })
}

/// `t,norm,is_jump_pre` rows.
pub fn write_norms_csv(rows: impl IntoIterator<Item = (f64, f64, bool)>, mut out: impl Write) -> Result<()> {
    writeln!(out, "t,norm,is_jump_pre")?;
    for (t, v, pre) in rows {
        writeln!(out, "{},{},{}", fmt_num(t), fmt_num(v), pre as u8)?;
    }
    Ok(())
}

/// One header line, then one comma-separated line per matrix row.
pub fn write_matrix_block(header: &str, m: &DMatrix<f64>, mut out: impl Write) -> Result<()> {
    writeln!(out, "{header}")?;
    for r in m.row_iter() {
        let line: Vec<String> = r.iter().map(|v| fmt_num(*v)).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::solve_ivp;
    use crate::model::{CoefficientOperator, Forcing, ImpulseSchedule, ImpulsiveSystem, JumpSequence};

    fn sample_trajectory() -> Trajectory {
        let s = ImpulseSchedule::new(vec![0.5, 1.0], 1.2).unwrap();
        let sys = ImpulsiveSystem::new(
            CoefficientOperator::constant(DMatrix::from_row_slice(2, 2, &[0.1, 0.7, -0.3, 0.2])).unwrap(),
            JumpSequence::repeat(DMatrix::from_row_slice(2, 2, &[0.9, 0.1, 0.0, -1.1]), 2).unwrap(),
            s,
        )
        .unwrap();
        let forcing = Forcing::new(2, None, vec![DVector::from_vec(vec![0.3, 0.0]); 2], 1.2).unwrap();
        solve_ivp(&sys, &forcing, &DVector::from_vec(vec![1.0 / 3.0, -2.0]), 0.05).unwrap()
    }

    #[test]
    fn trajectory_csv_layout() {
        let tr = sample_trajectory();
        let mut buf = Vec::new();
        write_trajectory_csv(&tr, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,x1,x2,is_jump_pre,is_jump_post");
        assert_eq!(lines.len(), 1 + tr.samples.len() + tr.jumps.len());
        let pre_idx = lines.iter().position(|l| l.ends_with(",1,0")).unwrap();
        assert!(lines[pre_idx + 1].ends_with(",0,1"));
        assert_eq!(lines[pre_idx].split(',').next(), lines[pre_idx + 1].split(',').next());
    }

    #[test]
    fn trajectory_csv_round_trips_exactly() {
        let tr = sample_trajectory();
        let mut buf = Vec::new();
        write_trajectory_csv(&tr, &mut buf).unwrap();
        let back = read_trajectory_csv(buf.as_slice()).unwrap();
        assert_eq!(back.samples, tr.samples);
        assert_eq!(back.jumps, tr.jumps);
    }

    #[test]
    fn matrix_block() {
        let mut buf = Vec::new();
        write_matrix_block("# t=1", &DMatrix::from_row_slice(1, 2, &[1.0, 0.1]), &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "# t=1\n1.0000000000000000e0,1.0000000000000001e-1\n"
        );
    }
}
