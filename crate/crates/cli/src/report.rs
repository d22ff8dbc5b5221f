//! Report serialization. Reports are pretty-printed JSON whose floats carry
//! 17 significant digits; non-finite floats become `null`.

use std::io::{self, Write};

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use renorm_core::boundary_data::CompatibilityVerdict;
use renorm_core::oracle::{RhoRecord, RhoStudy};
use renorm_core::renorm::{EnergyKind, EnergyReport, LandscapePoint};

/// `x` with 17 significant digits.
pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Pretty JSON formatter that prints every float with 17 significant
/// digits.
struct Digits17<'a>(PrettyFormatter<'a>);

impl Formatter for Digits17<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            w.write_all(float(value).as_bytes())
        } else {
            w.write_all(b"null")
        }
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Serializes `value` as a report document.
pub fn to_report<T: Serialize>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Digits17(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("report serializes");
    out.push(b'\n');
    String::from_utf8(out).expect("JSON is UTF-8")
}

#[derive(Debug, Serialize)]
pub struct Terms {
    pub pairwise: f64,
    pub boundary: f64,
    pub regular: f64,
    pub coupling: f64,
    pub topological: f64,
}

#[derive(Debug, Serialize)]
pub struct DiagnosticsOut {
    pub normalization_multiplier: f64,
    pub period_asymmetry: f64,
    pub witness_residual: f64,
    pub search_gap: f64,
    pub beta_residual: f64,
    pub flux_identity_error: f64,
}

#[derive(Debug, Serialize)]
pub struct EnergyOut {
    pub problem: &'static str,
    pub total: f64,
    pub terms: Terms,
    pub regular_parts: Vec<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub theta: Vec<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub alpha: Vec<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub lattice_shifts: Vec<i64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub hole_degrees: Vec<i64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub beta: Vec<f64>,
    pub diagnostics: DiagnosticsOut,
}

impl From<&EnergyReport> for EnergyOut {
    fn from(r: &EnergyReport) -> Self {
        let d = &r.diagnostics;
        EnergyOut {
            problem: match r.kind {
                EnergyKind::Dirichlet => "dirichlet",
                EnergyKind::Neumann => "neumann",
            },
            total: r.total,
            terms: Terms {
                pairwise: r.pairwise,
                boundary: r.boundary,
                regular: r.regular,
                coupling: r.coupling,
                topological: r.topological,
            },
            regular_parts: r.regular_parts.clone(),
            theta: r.theta.clone(),
            alpha: r.alpha.clone(),
            lattice_shifts: r.shifts.clone(),
            hole_degrees: r.degrees.clone(),
            beta: r.beta.clone(),
            diagnostics: DiagnosticsOut {
                normalization_multiplier: d.multiplier,
                period_asymmetry: d.period_asymmetry,
                witness_residual: d.witness_residual,
                search_gap: d.search_gap,
                beta_residual: d.beta_residual,
                flux_identity_error: d.flux_identity_error,
            },
        }
    }
}

#[derive(Debug, Serialize)]
pub struct DegreeOut {
    pub degrees: Vec<i64>,
    pub residuals: Vec<f64>,
    pub sum_punctures: i64,
    pub sum_holes: i64,
    pub holds: bool,
    pub verdict: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sobolev_space_nonempty: Option<bool>,
}

/// `relation holds: 1 = 1 + 0` or `relation fails: 1 ≠ 0 + 0`.
pub fn verdict_line(v: &CompatibilityVerdict) -> String {
    let (word, sign) = if v.holds { ("holds", "=") } else { ("fails", "≠") };
    format!("relation {word}: {} {sign} {} + {}", v.degrees[0], v.sum_punctures, v.sum_holes)
}

#[derive(Debug, Serialize)]
pub struct RhoRecordOut {
    pub rho: f64,
    pub value: f64,
    pub deflated: f64,
    pub constants: Vec<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub lattice_shifts: Vec<i64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub alpha: Vec<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub hole_degrees: Vec<i64>,
    pub gap: f64,
}

impl From<&RhoRecord> for RhoRecordOut {
    fn from(r: &RhoRecord) -> Self {
        RhoRecordOut {
            rho: r.rho,
            value: r.value,
            deflated: r.deflated,
            constants: r.constants.clone(),
            lattice_shifts: r.shifts.clone(),
            alpha: r.alpha.clone(),
            hole_degrees: r.degrees.clone(),
            gap: r.gap,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct VerifyOut {
    pub problem: &'static str,
    pub records: Vec<RhoRecordOut>,
    pub monotonicity: String,
    pub max_decrease: f64,
    pub extrapolated: Option<f64>,
    pub fitted_order: Option<f64>,
    pub fitted_constant: Option<f64>,
    pub closed_form: Option<f64>,
    pub relative_difference: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl VerifyOut {
    pub fn new(problem: &'static str, records: &[RhoRecord], study: Result<&RhoStudy, String>, closed: Option<f64>) -> Self {
        let max_decrease = records.windows(2).fold(0.0f64, |m, w| m.max(w[0].deflated - w[1].deflated));
        let mut out = VerifyOut {
            problem,
            records: records.iter().map(RhoRecordOut::from).collect(),
            monotonicity: String::new(),
            max_decrease,
            extrapolated: None,
            fitted_order: None,
            fitted_constant: None,
            closed_form: closed,
            relative_difference: None,
            error: None,
        };
        out.monotonicity = if max_decrease <= renorm_core::oracle::MONOTONE_SLACK { "PASS" } else { "FAIL" }.into();
        match study {
            Ok(s) => {
                out.extrapolated = Some(s.extrapolated);
                out.fitted_order = s.order;
                out.fitted_constant = s.order.map(|_| s.constant);
                out.relative_difference = closed.map(|w| (w - s.extrapolated).abs() / (1.0 + w.abs()));
            }
            Err(e) => out.error = Some(e),
        }
        out
    }
}

pub const CSV_HEADER: [&str; 7] = ["x", "y", "W", "term_pairwise", "term_boundary", "term_regular", "term_topological"];

/// Landscape table; failed points keep their coordinates and leave the
/// value columns empty.
pub fn landscape_csv(points: &[LandscapePoint]) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for p in points {
        let mut row = vec![float(p.position.x), float(p.position.y)];
        match &p.report {
            Ok(r) => row.extend([r.total, r.pairwise, r.boundary, r.regular, r.topological].map(float)),
            Err(_) => row.extend(std::iter::repeat_n(String::new(), 5)),
        }
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("CSV is UTF-8"))
}

#[derive(Debug, Serialize)]
pub struct LandscapeOut {
    pub problem: &'static str,
    pub puncture: usize,
    pub points: usize,
    pub failed: usize,
    pub min: Option<LandscapeMin>,
    pub failures: Vec<LandscapeFailure>,
}

#[derive(Debug, Serialize)]
pub struct LandscapeMin {
    pub x: f64,
    pub y: f64,
    pub total: f64,
}

#[derive(Debug, Serialize)]
pub struct LandscapeFailure {
    pub x: f64,
    pub y: f64,
    pub reason: String,
}
