use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::construction::Instance;
use crate::engine::RunTrace;
use crate::error::{Error, Result};
use crate::verifier::{check_transition, is_wake, Classifier, Stage};

pub const TRACE_HEADER: [&str; 5] = [
    "iteration",
    "points_reassigned",
    "potential",
    "stages",
    "wakes",
];

/// One CSV row: the state after `iteration` rounds.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceFileRow {
    pub iteration: usize,
    pub points_reassigned: usize,
    pub potential: f64,
    /// Stage of every gadget, leaf first.
    pub stages: Vec<Stage>,
    /// Gadgets that woke up at this row.
    pub wakes: Vec<usize>,
}

/// Classifies every row of `trace`. Unclassified stages are kept as such;
/// legality is checked separately.
pub fn trace_rows(trace: &RunTrace, instance: &Instance) -> Result<Vec<TraceFileRow>> {
    let mut classifier = Classifier::new(instance);
    let mut out: Vec<TraceFileRow> = Vec::with_capacity(trace.rows.len());
    let mut stages = Vec::new();
    trace.replay(|k, assignment, _| {
        classifier.classify_into(assignment, &mut stages);
        let prev = out.last().map(|r| r.stages.as_slice());
        let wakes = stages
            .iter()
            .enumerate()
            .filter(|&(g, &st)| is_wake(prev.map(|p| p[g]), st))
            .map(|(g, _)| g)
            .collect();
        let row = &trace.rows[k];
        out.push(TraceFileRow {
            iteration: k,
            points_reassigned: row.points_reassigned(),
            potential: row.potential,
            stages: stages.clone(),
            wakes,
        });
        Ok(())
    })?;
    Ok(out)
}

fn join<T: ToString>(items: impl IntoIterator<Item = T>) -> String {
    items
        .into_iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(";")
}

pub fn write_trace<W: Write>(out: W, rows: &[TraceFileRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for r in rows {
        w.write_record([
            r.iteration.to_string(),
            r.points_reassigned.to_string(),
            format!("{:e}", r.potential),
            join(r.stages.iter()),
            join(r.wakes.iter()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace_file(path: &Path, rows: &[TraceFileRow]) -> Result<()> {
    write_trace(BufWriter::new(File::create(path)?), rows)
}

fn parse_field<T: std::str::FromStr>(s: &str, what: &str, line: usize) -> Result<T> {
    s.parse()
        .map_err(|_| Error::Format(format!("row {line}: bad {what} `{s}`")))
}

pub fn read_trace<R: Read>(input: R) -> Result<Vec<TraceFileRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    if header.iter().ne(TRACE_HEADER) {
        return Err(Error::Format(format!(
            "unexpected trace header `{}`",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| Error::Format(e.to_string()))?;
        let stages = rec[3]
            .split(';')
            .map(|s| s.parse::<Stage>())
            .collect::<Result<Vec<_>>>()?;
        let wakes = if rec[4].is_empty() {
            Vec::new()
        } else {
            rec[4]
                .split(';')
                .map(|s| parse_field(s, "wake gadget", line))
                .collect::<Result<Vec<_>>>()?
        };
        rows.push(TraceFileRow {
            iteration: parse_field(&rec[0], "iteration", line)?,
            points_reassigned: parse_field(&rec[1], "reassignment count", line)?,
            potential: parse_field(&rec[2], "potential", line)?,
            stages,
            wakes,
        });
    }
    Ok(rows)
}

pub fn read_trace_file(path: &Path) -> Result<Vec<TraceFileRow>> {
    read_trace(BufReader::new(File::open(path)?))
}

/// Checks the file on its own: consecutive iterations, one stage per gadget,
/// no unclassified stage, legal transitions, and a wakes column that agrees
/// with the stage column.
pub fn check_stage_rows(rows: &[TraceFileRow], num_gadgets: usize) -> Result<()> {
    let fail = |iteration, gadget, reason: String| Error::VerificationFailure {
        iteration,
        gadget,
        reason,
    };
    let mut prev: Option<&TraceFileRow> = None;
    for (k, row) in rows.iter().enumerate() {
        if row.iteration != k {
            return Err(fail(
                k,
                0,
                format!("row {k} is labelled iteration {}", row.iteration),
            ));
        }
        if row.stages.len() != num_gadgets {
            return Err(fail(
                k,
                0,
                format!("{} stages for {num_gadgets} gadgets", row.stages.len()),
            ));
        }
        let mut expected = Vec::new();
        for (g, &st) in row.stages.iter().enumerate() {
            if st == Stage::Unclassified || (g == 0) != st.is_leaf() {
                return Err(fail(
                    k,
                    g,
                    format!("stage {st} is not a valid gadget state"),
                ));
            }
            let before = prev.map(|p| p.stages[g]);
            if let Some(b) = before {
                if !check_transition(b, st) {
                    return Err(fail(k, g, format!("illegal transition {b} -> {st}")));
                }
            }
            if is_wake(before, st) {
                expected.push(g);
            }
        }
        if expected != row.wakes {
            return Err(fail(
                k,
                0,
                format!(
                    "wakes column {:?} disagrees with stages {:?}",
                    row.wakes, expected
                ),
            ));
        }
        prev = Some(row);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construction::{build_chain, ConstructionParams};
    use crate::engine::{run, RunOptions};

    fn rows(t: usize) -> Vec<TraceFileRow> {
        let inst = build_chain(&ConstructionParams::reference(t).unwrap()).unwrap();
        let res = run(&inst, &RunOptions::default()).unwrap();
        trace_rows(res.trace.as_ref().unwrap(), &inst).unwrap()
    }

    #[test]
    fn header_and_row_count() {
        let r = rows(3);
        let mut out = Vec::new();
        write_trace(&mut out, &r).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "iteration,points_reassigned,potential,stages,wakes"
        );
        assert_eq!(text.lines().count(), r.len() + 1);
        assert!(text.lines().nth(1).unwrap().starts_with("0,0,"));
    }

    #[test]
    fn round_trip_is_exact() {
        let r = rows(5);
        let mut out = Vec::new();
        write_trace(&mut out, &r).unwrap();
        let back = read_trace(out.as_slice()).unwrap();
        assert_eq!(back, r);
        check_stage_rows(&back, 5).unwrap();
    }

    #[test]
    fn wakes_column_checked() {
        let mut r = rows(3);
        r[4].wakes.push(2);
        assert!(check_stage_rows(&r, 3).is_err());
    }

    #[test]
    fn bad_header_rejected() {
        let err = read_trace("iteration,potential\n0,1\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Format(_)));
    }
}
