//! Trace serialization.
//!
//! Columns: `time,kind,coord_index,mode_id`, one column per coordinate, one
//! `v_<name>` column per velocity, then `move,accepted` for interleaved moves.
//! The first row has kind `init` and the last row kind `end`. Coordinate
//! indices are 1-based; mode ids are 16 hex digits.

use std::io::{Read, Write};
use std::sync::Arc;

use super::state::{EventKind, HybridState, MhMoveKind, ModeHash, ModeId};
use super::trace::{EventRecord, EventTrace, Recorder};
use crate::error::{Error, Result};
use crate::real::Real;

/// `t_1, ..., t_{k}` followed by `theta` when `with_theta`.
pub fn coord_names(holding_times: usize, with_theta: bool) -> Vec<String> {
    let mut names: Vec<String> = (1..=holding_times).map(|i| format!("t_{i}")).collect();
    if with_theta {
        names.push("theta".into());
    }
    names
}

/// Streams events to CSV as they happen. Write errors are kept and reported
/// by [`CsvRecorder::finish_result`].
pub struct CsvRecorder<W: Write> {
    writer: csv::Writer<W>,
    width: usize,
    error: Option<Error>,
}

impl<W: Write> CsvRecorder<W> {
    pub fn new(out: W, names: &[String]) -> Result<Self> {
        let mut writer = csv::Writer::from_writer(out);
        let mut header: Vec<String> = ["time", "kind", "coord_index", "mode_id"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        header.extend(names.iter().cloned());
        header.extend(names.iter().map(|n| format!("v_{n}")));
        header.extend(["move".to_string(), "accepted".to_string()]);
        writer.write_record(&header)?;
        Ok(Self {
            writer,
            width: names.len(),
            error: None,
        })
    }

    fn row<M: ModeId, R: Real>(
        &mut self,
        time: R,
        kind: &str,
        coord: Option<usize>,
        mv: Option<(MhMoveKind, bool)>,
        st: &HybridState<M, R>,
    ) {
        if self.error.is_some() {
            return;
        }
        if st.dim() != self.width {
            self.error = Some(Error::config(format!(
                "{} column names for {} coordinates",
                self.width,
                st.dim()
            )));
            return;
        }
        let mut rec = Vec::with_capacity(6 + 2 * self.width);
        rec.push(format!("{}", time.as_f64()));
        rec.push(kind.to_string());
        rec.push(coord.map(|i| (i + 1).to_string()).unwrap_or_default());
        rec.push(format!("{:016x}", st.mode.mode_id()));
        rec.extend(st.coords.iter().map(|x| format!("{}", x.as_f64())));
        rec.extend(st.vels.iter().map(|v| format!("{}", v.as_f64())));
        match mv {
            Some((k, a)) => {
                rec.push(k.as_str().to_string());
                rec.push(u8::from(a).to_string());
            }
            None => {
                rec.push(String::new());
                rec.push(String::new());
            }
        }
        if let Err(e) = self.writer.write_record(&rec) {
            self.error = Some(e.into());
        }
    }

    /// Flushes and returns the first error met while writing.
    pub fn finish_result(mut self) -> Result<W> {
        if let Some(e) = self.error.take() {
            return Err(e);
        }
        self.writer.flush()?;
        self.writer.into_inner().map_err(|e| Error::Io(e.into_error()))
    }
}

impl<W: Write, M: ModeId, R: Real> Recorder<M, R> for CsvRecorder<W> {
    fn start(&mut self, state: &HybridState<M, R>) {
        self.row(R::zero(), "init", None, None, state);
    }

    fn record(&mut self, time: R, kind: EventKind, state: &HybridState<M, R>) {
        let mv = match kind {
            EventKind::MhMove { kind, accepted } => Some((kind, accepted)),
            _ => None,
        };
        self.row(time, kind.name(), kind.coord(), mv, state);
    }

    fn finish(&mut self, time: R, state: &HybridState<M, R>) {
        self.row(time, "end", None, None, state);
    }
}

pub fn write_trace<W, M, R>(out: W, trace: &EventTrace<M, R>, names: &[String]) -> Result<()>
where
    W: Write,
    M: ModeId + Clone,
    R: Real,
{
    let mut rec = CsvRecorder::new(out, names)?;
    rec.start(&trace.initial);
    for e in &trace.events {
        rec.record(e.time, e.kind, &e.state);
    }
    rec.finish(trace.end_time, &trace.final_state());
    rec.finish_result().map(|_| ())
}

/// Reads a trace written by [`write_trace`]. Modes are reduced to their ids.
pub fn read_trace<Rd: Read>(input: Rd) -> Result<(Vec<String>, EventTrace<ModeHash, f64>)> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    if header.len() < 6 || (header.len() - 6) % 2 != 0 || &header[0] != "time" {
        return Err(Error::data("trace header is malformed"));
    }
    let d = (header.len() - 6) / 2;
    let names: Vec<String> = header.iter().skip(4).take(d).map(str::to_string).collect();

    let mut initial = None;
    let mut events = Vec::new();
    let mut end_time = None;
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let bad = |what: &str| Error::data(format!("trace row {}: bad {what}", line + 2));
        let time: f64 = rec[0].parse().map_err(|_| bad("time"))?;
        let mode = u64::from_str_radix(&rec[3], 16).map_err(|_| bad("mode_id"))?;
        let nums = |range: std::ops::Range<usize>| -> Result<Vec<f64>> {
            range
                .map(|j| rec[j].parse::<f64>().map_err(|_| bad("number")))
                .collect()
        };
        let state = HybridState {
            mode: Arc::new(ModeHash(mode)),
            coords: nums(4..4 + d)?,
            vels: nums(4 + d..4 + 2 * d)?,
        };
        let coord = || -> Result<usize> {
            let k: usize = rec[2].parse().map_err(|_| bad("coord_index"))?;
            k.checked_sub(1).ok_or_else(|| bad("coord_index"))
        };
        let kind = match &rec[1] {
            "init" => {
                initial = Some(state);
                continue;
            }
            "end" => {
                end_time = Some(time);
                continue;
            }
            "flip" => EventKind::Flip(coord()?),
            "boundary_cross" => EventKind::BoundaryCross(coord()?),
            "reflect" => EventKind::Reflect(coord()?),
            "refresh" => EventKind::Refresh,
            "mh_move" => EventKind::MhMove {
                kind: MhMoveKind::parse(&rec[4 + 2 * d]).ok_or_else(|| bad("move"))?,
                accepted: &rec[5 + 2 * d] == "1",
            },
            _ => return Err(bad("kind")),
        };
        events.push(EventRecord { time, kind, state });
    }
    let initial = initial.ok_or_else(|| Error::data("trace has no init row"))?;
    let end_time = end_time.ok_or_else(|| Error::data("trace has no end row"))?;
    Ok((
        names,
        EventTrace {
            initial,
            events,
            end_time,
        },
    ))
}
