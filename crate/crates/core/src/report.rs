//! Report assembly and serialization.
//!
//! Reports carry a full echo of their inputs so any number in them can be
//! reproduced from the document alone. Every float is serialized with 17
//! significant digits, which round-trips `f64` bit-exactly; non-finite
//! values become JSON `null` before the formatter is consulted.

use std::io;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::analytic::AnalyticReport;
use crate::calibrate::CalibrationResult;
use crate::model::ModelParams;
use crate::simulate::{EstimateSet, SimConfig};
use crate::stats::Estimate;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Everything one invocation produced, plus the inputs that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub tool_version: String,
    /// Input parameters, echoed bit-exactly.
    pub params: ModelParams,
    /// One entry per analytic route that ran.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub analytic: Vec<AnalyticReport>,
    /// Echo of the sampling configuration when a simulation ran.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sim_config: Option<SimConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<EstimateSet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<CalibrationResult>,
}

impl ReportDocument {
    pub fn new(params: ModelParams) -> Self {
        ReportDocument {
            tool_version: TOOL_VERSION.to_owned(),
            params,
            analytic: Vec::new(),
            sim_config: None,
            simulation: None,
            calibration: None,
        }
    }
}

/// Pretty JSON whose floats carry 17 significant digits. Structure hooks
/// delegate to the stock pretty-printer; only float rendering differs.
struct SciPretty<'a> {
    inner: PrettyFormatter<'a>,
}

impl SciPretty<'_> {
    fn new() -> Self {
        SciPretty {
            inner: PrettyFormatter::new(),
        }
    }
}

impl Formatter for SciPretty<'_> {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        write!(writer, "{value:.16e}")
    }

    fn begin_array<W>(&mut self, writer: &mut W) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        self.inner.begin_array(writer)
    }

    fn end_array<W>(&mut self, writer: &mut W) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        self.inner.end_array(writer)
    }

    fn begin_array_value<W>(&mut self, writer: &mut W, first: bool) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        self.inner.begin_array_value(writer, first)
    }

    fn end_array_value<W>(&mut self, writer: &mut W) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        self.inner.end_array_value(writer)
    }

    fn begin_object<W>(&mut self, writer: &mut W) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        self.inner.begin_object(writer)
    }

    fn end_object<W>(&mut self, writer: &mut W) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        self.inner.end_object(writer)
    }

    fn begin_object_key<W>(&mut self, writer: &mut W, first: bool) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        self.inner.begin_object_key(writer, first)
    }

    fn begin_object_value<W>(&mut self, writer: &mut W) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        self.inner.begin_object_value(writer)
    }

    fn end_object_value<W>(&mut self, writer: &mut W) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        self.inner.end_object_value(writer)
    }
}

/// Serializes any value as pretty JSON with bit-exact floats and a trailing
/// newline.
pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SciPretty::new());
    value
        .serialize(&mut ser)
        .expect("in-memory JSON serialization cannot fail");
    out.push(b'\n');
    String::from_utf8(out).expect("serializer emits UTF-8")
}

fn push_row(out: &mut String, name: &str, est: Option<Estimate>, class_count: u64) {
    match est {
        Some(e) => {
            out.push_str(&format!(
                "{name},{:.16e},{:.16e},{}\n",
                e.value, e.std_error, e.count
            ));
        }
        None => out.push_str(&format!("{name},,,{class_count}\n")),
    }
}

/// Flat estimator table. Estimates whose class holds fewer than two events
/// keep their row with empty value and error cells, so the column layout is
/// stable across runs.
pub fn estimates_csv(est: &EstimateSet) -> String {
    let mut out = String::from("estimator,value,std_error,count\n");
    push_row(&mut out, "prob_b_hat", Some(est.prob_b_hat), est.n_events);
    push_row(&mut out, "mean_x_b", est.mean_x_b, est.n_kept);
    push_row(&mut out, "mean_y_b", est.mean_y_b, est.n_kept);
    push_row(&mut out, "crossmoment_b", est.crossmoment_b, est.n_kept);
    push_row(&mut out, "mean_x_not_b", est.mean_x_not_b, est.n_rejected);
    push_row(&mut out, "mean_y_not_b", est.mean_y_not_b, est.n_rejected);
    push_row(
        &mut out,
        "crossmoment_not_b",
        est.crossmoment_not_b,
        est.n_rejected,
    );
    push_row(&mut out, "mean_x_all", est.mean_x_all, est.n_events);
    push_row(&mut out, "mean_y_all", est.mean_y_all, est.n_events);
    push_row(
        &mut out,
        "crossmoment_all",
        est.crossmoment_all,
        est.n_events,
    );
    push_row(
        &mut out,
        "signed_crossmoment",
        est.signed_crossmoment,
        est.n_events,
    );
    out
}
