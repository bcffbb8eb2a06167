//! Single points, one-axis parameter sweeps and the reference figure
//! datasets, with CSV output.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::csi::{self, CsiCapacityReport, CsiHighSnr};
use crate::error::{Error, Result};
use crate::oracle::{self, ValidationOptions, ValidationReport};
use crate::par::{self, Exec};
use crate::params::ChannelParams;
use crate::rss::{self, RssCapacityReport, RssHighSnr, RssOptions};

/// The swept parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    /// Common SNR of all three terminals, dB.
    SnrDb,
    /// Correlation magnitude `|ρ|`.
    Rho,
    /// Alice's SNR `p/σ²_A`, dB.
    SnrAliceDb,
    /// Eve's SNR `p/σ²_E`, dB.
    SnrEveDb,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::SnrDb => "snr_db",
            Axis::Rho => "rho",
            Axis::SnrAliceDb => "snr_alice_db",
            Axis::SnrEveDb => "snr_eve_db",
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Axis::SnrDb, Axis::Rho, Axis::SnrAliceDb, Axis::SnrEveDb]
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown axis '{s}'")))
    }
}

/// What to compute at each point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Modes {
    pub csi: bool,
    pub rss: bool,
    pub high_snr: bool,
    pub oracle: bool,
}

impl Default for Modes {
    fn default() -> Self {
        Self {
            csi: true,
            rss: true,
            high_snr: true,
            oracle: false,
        }
    }
}

impl FromStr for Modes {
    type Err = Error;

    /// Comma-separated subset of `csi`, `rss`, `high_snr`, `oracle`, or `all`.
    fn from_str(s: &str) -> Result<Self> {
        let mut m = Modes {
            csi: false,
            rss: false,
            high_snr: false,
            oracle: false,
        };
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part {
                "csi" => m.csi = true,
                "rss" => m.rss = true,
                "high_snr" => m.high_snr = true,
                "oracle" => m.oracle = true,
                "all" => {
                    m = Modes {
                        oracle: true,
                        ..Modes::default()
                    }
                }
                other => return Err(Error::InvalidInput(format!("unknown mode '{other}'"))),
            }
        }
        if m == (Modes { csi: false, rss: false, high_snr: false, oracle: false }) {
            return Err(Error::InvalidInput("no modes selected".into()));
        }
        Ok(m)
    }
}

#[derive(Debug, Default, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    pub modes: Modes,
    pub rss: RssOptions,
    pub validation: ValidationOptions,
    /// Report negative lower bounds as zero.
    pub clamp: bool,
    pub exec: Exec,
}

impl EvalOptions {
    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self.rss.exec = exec;
        self.validation.knn.exec = exec;
        self.validation.rss.exec = exec;
        self
    }
}

/// A failed part of a point report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldError {
    pub field: String,
    pub message: String,
    /// Numerical failure rather than an input the formulas reject.
    pub numerical: bool,
}

/// Everything computed at one parameter point. Parts that failed are `None`
/// and have an entry in `errors`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointReport {
    pub params: ChannelParams,
    pub csi: Option<CsiCapacityReport>,
    pub csi_high_snr: Option<CsiHighSnr>,
    pub rss: Option<RssCapacityReport>,
    pub rss_high_snr: Option<RssHighSnr>,
    pub validation: Option<ValidationReport>,
    pub errors: Vec<FieldError>,
}

impl PointReport {
    pub fn has_numerical_error(&self) -> bool {
        self.errors.iter().any(|e| e.numerical)
    }
}

fn keep<T>(field: &str, r: Result<T>, errors: &mut Vec<FieldError>) -> Option<T> {
    r.map_err(|e| {
        errors.push(FieldError {
            field: field.to_string(),
            message: e.to_string(),
            numerical: e.is_numerical(),
        })
    })
    .ok()
}

/// Evaluate every enabled mode at `params`. Invalid parameters are an error;
/// failures inside a mode are recorded in the report.
pub fn point(params: &ChannelParams, opts: &EvalOptions) -> Result<PointReport> {
    let c = params.validate()?;
    let m = opts.modes;
    let mut errors = Vec::new();
    let csi = m.csi.then(|| keep("csi", csi::bounds(&c), &mut errors)).flatten();
    let csi_high_snr = (m.csi && m.high_snr)
        .then(|| keep("csi_high_snr", csi::high_snr(&c), &mut errors))
        .flatten();
    let rss = m.rss.then(|| keep("rss", rss::bounds(&c, &opts.rss), &mut errors)).flatten();
    let rss_high_snr = (m.rss && m.high_snr)
        .then(|| keep("rss_high_snr", rss::high_snr(&c), &mut errors))
        .flatten();
    let validation = m
        .oracle
        .then(|| keep("oracle", oracle::validate_point(&c, &opts.validation), &mut errors))
        .flatten();
    Ok(PointReport {
        params: c,
        csi,
        csi_high_snr,
        rss,
        rss_high_snr,
        validation,
        errors,
    })
}

/// A one-axis sweep. Fixed parameters are given as SNRs in dB relative to
/// the channel power `p`; the swept axis overrides the matching ones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub axis: Axis,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    pub p: f64,
    pub snr_a_db: f64,
    pub snr_b_db: f64,
    pub snr_e_db: f64,
    /// Correlation magnitude; the phase never matters.
    pub rho: f64,
    pub opts: EvalOptions,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            axis: Axis::SnrDb,
            start: 0.0,
            stop: 30.0,
            count: 10,
            p: 1.0,
            snr_a_db: 10.0,
            snr_b_db: 10.0,
            snr_e_db: 10.0,
            rho: 0.9,
            opts: EvalOptions::default(),
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.start, self.stop, self.p, self.snr_a_db, self.snr_b_db, self.snr_e_db, self.rho];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("sweep parameter"));
        }
        if self.count == 0 {
            return Err(Error::InvalidInput("grid count must be at least 1".into()));
        }
        if self.start > self.stop {
            return Err(Error::InvalidInput(format!("start {} exceeds stop {}", self.start, self.stop)));
        }
        if self.axis == Axis::Rho && (self.start < 0.0 || self.stop > 1.0) {
            return Err(Error::InvalidInput("rho grid must lie in [0, 1]".into()));
        }
        Ok(())
    }

    pub fn grid(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let step = (self.stop - self.start) / (self.count - 1) as f64;
        (0..self.count)
            .map(|i| if i + 1 == self.count { self.stop } else { self.start + step * i as f64 })
            .collect()
    }

    /// Channel parameters at axis value `x`.
    pub fn params_at(&self, x: f64) -> ChannelParams {
        let (mut a, mut b, mut e, mut rho) = (self.snr_a_db, self.snr_b_db, self.snr_e_db, self.rho);
        match self.axis {
            Axis::SnrDb => (a, b, e) = (x, x, x),
            Axis::Rho => rho = x,
            Axis::SnrAliceDb => a = x,
            Axis::SnrEveDb => e = x,
        }
        ChannelParams::from_snr_db(self.p, a, b, e, Complex64::new(rho, 0.0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub axis: f64,
    pub report: Option<PointReport>,
    /// Reference values matched to this row, by column name.
    pub reference: Option<Vec<(String, f64)>>,
    pub error: Option<String>,
}

impl Row {
    /// Error text for the CSV: a rejected point, or the failed fields.
    pub fn error_text(&self) -> String {
        if let Some(e) = &self.error {
            return e.clone();
        }
        self.report
            .iter()
            .flat_map(|r| &r.errors)
            .map(|e| format!("{}: {}", e.field, e.message))
            .collect::<Vec<_>>()
            .join("; ")
    }

    pub fn has_numerical_error(&self) -> bool {
        self.report.as_ref().is_some_and(PointReport::has_numerical_error)
    }
}

/// Evaluate a sweep. Rows come back in axis order; a failing row records its
/// error and the others still run. Oracle rows use seed `base + row index`.
pub fn sweep(spec: &SweepSpec) -> Result<Vec<Row>> {
    spec.validate()?;
    let grid = spec.grid();
    let exec = spec.opts.exec;
    Ok(par::map_range(exec, grid.len(), |i| {
        let x = grid[i];
        let mut opts = spec.opts;
        opts.validation.seed = opts.validation.seed.wrapping_add(i as u64);
        match point(&spec.params_at(x), &opts) {
            Ok(report) => Row {
                axis: x,
                report: Some(report),
                reference: None,
                error: None,
            },
            Err(e) => Row {
                axis: x,
                report: None,
                reference: None,
                error: Some(e.to_string()),
            },
        }
    }))
}

/// The reference figures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Figure {
    Fig2,
    Fig4,
    Fig5,
}

impl FromStr for Figure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fig2" => Ok(Figure::Fig2),
            "fig4" => Ok(Figure::Fig4),
            "fig5" => Ok(Figure::Fig5),
            _ => Err(Error::InvalidInput(format!("unknown figure '{s}' (expected fig2, fig4 or fig5)"))),
        }
    }
}

impl Figure {
    pub fn name(self) -> &'static str {
        match self {
            Figure::Fig2 => "fig2",
            Figure::Fig4 => "fig4",
            Figure::Fig5 => "fig5",
        }
    }

    fn data(self) -> &'static str {
        match self {
            Figure::Fig2 => include_str!("../data/fig2.csv"),
            Figure::Fig4 => include_str!("../data/fig4.csv"),
            Figure::Fig5 => include_str!("../data/fig5.csv"),
        }
    }

    /// The embedded reference table.
    pub fn reference(self) -> Result<ReferenceTable> {
        ReferenceTable::parse(self.data())
    }

    /// Sweep specs with their set names.
    pub fn specs(self, opts: &EvalOptions) -> Vec<(&'static str, SweepSpec)> {
        let base = SweepSpec {
            opts: *opts,
            ..SweepSpec::default()
        };
        match self {
            Figure::Fig2 => vec![(
                "equal",
                SweepSpec {
                    axis: Axis::SnrDb,
                    start: 0.0,
                    stop: 30.0,
                    count: 10,
                    rho: 0.9,
                    ..base
                },
            )],
            Figure::Fig4 => [("5db", 5.0), ("20db", 20.0)]
                .map(|(set, snr)| {
                    (
                        set,
                        SweepSpec {
                            axis: Axis::SnrAliceDb,
                            start: 0.0,
                            stop: 30.0,
                            count: 6,
                            snr_b_db: snr,
                            snr_e_db: snr,
                            rho: 0.6,
                            ..base
                        },
                    )
                })
                .to_vec(),
            Figure::Fig5 => [("5db", 5.0), ("20db", 20.0)]
                .map(|(set, snr)| {
                    (
                        set,
                        SweepSpec {
                            axis: Axis::SnrEveDb,
                            start: 0.0,
                            stop: 30.0,
                            count: 6,
                            snr_a_db: snr,
                            snr_b_db: snr,
                            rho: 0.8,
                            ..base
                        },
                    )
                })
                .to_vec(),
        }
    }
}

/// Reference values: per set, rows of axis value and named columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceTable {
    pub columns: Vec<String>,
    /// `(set, axis, values)`, values aligned with `columns`.
    pub rows: Vec<(String, f64, Vec<f64>)>,
}

impl ReferenceTable {
    /// Parse `set,axis,<columns…>` CSV with `#` comment lines.
    pub fn parse(text: &str) -> Result<Self> {
        let bad = |e: csv::Error| Error::InvalidInput(format!("reference data: {e}"));
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
        let header = rdr.headers().map_err(bad)?.clone();
        if header.len() < 3 || &header[0] != "set" || &header[1] != "axis" {
            return Err(Error::InvalidInput("reference data: expected set,axis,… header".into()));
        }
        let columns = header.iter().skip(2).map(String::from).collect();
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(bad)?;
            let num = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::InvalidInput(format!("reference data: bad number '{s}'")))
            };
            let values = rec.iter().skip(2).map(num).collect::<Result<Vec<_>>>()?;
            rows.push((rec[0].to_string(), num(&rec[1])?, values));
        }
        Ok(Self { columns, rows })
    }

    /// Reference values of `set` at axis value `x`.
    pub fn lookup(&self, set: &str, x: f64) -> Option<Vec<(String, f64)>> {
        self.rows
            .iter()
            .find(|(s, a, _)| s == set && (a - x).abs() <= 1e-9 * x.abs().max(1.0))
            .map(|(_, _, v)| self.columns.iter().cloned().zip(v.iter().copied()).collect())
    }
}

/// One output table of a figure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureSet {
    pub figure: Figure,
    pub set: String,
    pub axis: Axis,
    pub rows: Vec<Row>,
    pub reference_columns: Vec<String>,
}

impl FigureSet {
    /// File stem, e.g. `fig4_20db`; single-set figures use the figure name.
    pub fn stem(&self) -> String {
        if self.figure == Figure::Fig2 {
            self.figure.name().to_string()
        } else {
            format!("{}_{}", self.figure.name(), self.set)
        }
    }

    pub fn to_csv(&self, clamp: bool) -> String {
        to_csv(self.axis.name(), &self.rows, &self.reference_columns, clamp)
    }
}

/// Recompute a figure's grids and attach the reference values.
pub fn figure(fig: Figure, opts: &EvalOptions) -> Result<Vec<FigureSet>> {
    let table = fig.reference()?;
    fig.specs(opts)
        .into_iter()
        .map(|(set, spec)| {
            let mut rows = sweep(&spec)?;
            for row in &mut rows {
                row.reference = table.lookup(set, row.axis);
            }
            Ok(FigureSet {
                figure: fig,
                set: set.to_string(),
                axis: spec.axis,
                rows,
                reference_columns: table.columns.clone(),
            })
        })
        .collect()
}

/// Computed counterpart of a reference column.
pub fn computed(report: &PointReport, column: &str, clamp: bool) -> Option<f64> {
    let lb = |raw: f64, clamped: f64| if clamp { clamped } else { raw };
    let c = report.csi.as_ref();
    let r = report.rss.as_ref();
    match column {
        "csi_mi_ab" => c.map(|c| c.mi_ab),
        "csi_mi_ae" => c.map(|c| c.mi_ae),
        "csi_mi_be" => c.map(|c| c.mi_be),
        "csi_cond_mi" => c.map(|c| c.cond_mi_ab_given_e),
        "csi_lb" => c.map(|c| lb(c.lower_bound, c.lower_bound_clamped)),
        "csi_ub" => c.map(|c| c.upper_bound),
        "csi_mi_ab_high_snr" => report.csi_high_snr.map(|h| h.mi_ab_asym),
        "rss_mi_ab" => r.map(|r| r.mi_ab.value),
        "rss_mi_ae" => r.map(|r| r.mi_ae.value),
        "rss_mi_be" => r.map(|r| r.mi_be.value),
        "rss_cond_mi" => r.map(|r| r.cond_mi_ab_given_e.value),
        "rss_lb" => r.map(|r| lb(r.lower_bound.value, r.lower_bound_clamped)),
        "rss_ub" => r.map(|r| r.upper_bound.value),
        "rss_mi_ab_high_snr" => report.rss_high_snr.map(|h| h.mi_ab_asym),
        "rss_tol" => r.map(|r| {
            [r.mi_ab, r.mi_ae, r.mi_be, r.cond_mi_ab_given_e, r.lower_bound, r.upper_bound]
                .iter()
                .map(|e| e.error)
                .fold(0.0, f64::max)
        }),
        _ => None,
    }
}

/// Result columns after the axis and the parameters.
pub const VALUE_COLUMNS: [&str; 13] = [
    "csi_mi_ab",
    "csi_mi_ae",
    "csi_mi_be",
    "csi_cond_mi",
    "csi_lb",
    "csi_ub",
    "rss_mi_ab",
    "rss_mi_ae",
    "rss_mi_be",
    "rss_cond_mi",
    "rss_lb",
    "rss_ub",
    "rss_tol",
];

/// `x` with 9 significant digits, in the style of C's `%.9g`.
pub fn fmt_sig(x: f64) -> String {
    const DIGITS: i32 = 9;
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.into();
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0" } else { "0" }.into();
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent digits");
    let trim = |s: &str| {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if !(-4..DIGITS).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", trim(mantissa), sign, exp.abs())
    } else {
        trim(&format!("{:.*}", (DIGITS - 1 - exp) as usize, x))
    }
}

fn cell(v: Option<f64>) -> String {
    v.map(fmt_sig).unwrap_or_default()
}

/// CSV table: axis, parameters, results, then `ref_*`/`delta_*` pairs for
/// each reference column, then `error`.
pub fn to_csv(axis: &str, rows: &[Row], reference_columns: &[String], clamp: bool) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let mut header: Vec<String> = [axis, "p", "sigma_a2", "sigma_b2", "sigma_e2", "rho_abs"]
        .iter()
        .chain(VALUE_COLUMNS.iter())
        .map(|s| s.to_string())
        .collect();
    for c in reference_columns {
        header.push(format!("ref_{c}"));
        header.push(format!("delta_{c}"));
    }
    header.push("error".into());
    w.write_record(&header).expect("in-memory write");

    for row in rows {
        let mut rec = vec![fmt_sig(row.axis)];
        match &row.report {
            Some(r) => {
                let p = &r.params;
                rec.extend([p.p, p.sigma_a2, p.sigma_b2, p.sigma_e2, p.rho_abs()].map(fmt_sig));
                rec.extend(VALUE_COLUMNS.iter().map(|c| cell(computed(r, c, clamp))));
            }
            None => rec.extend(std::iter::repeat_n(String::new(), 5 + VALUE_COLUMNS.len())),
        }
        for c in reference_columns {
            let reference = row
                .reference
                .as_ref()
                .and_then(|v| v.iter().find(|(n, _)| n == c))
                .map(|(_, v)| *v);
            let ours = row.report.as_ref().and_then(|r| computed(r, c, clamp));
            rec.push(cell(reference));
            rec.push(cell(ours.zip(reference).map(|(a, b)| a - b)));
        }
        rec.push(row.error_text());
        w.write_record(&rec).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
}

/// One line per oracle check: row, axis value, and the check fields.
pub fn validation_csv(axis: &str, rows: &[Row]) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record([
        "row", axis, "p", "sigma_a2", "sigma_b2", "sigma_e2", "rho_abs", "check", "group", "relation",
        "estimate", "reference", "std_error", "sigmas", "passed", "error",
    ])
    .expect("in-memory write");
    for (i, row) in rows.iter().enumerate() {
        let params = row.report.as_ref().map(|r| {
            let p = &r.params;
            [p.p, p.sigma_a2, p.sigma_b2, p.sigma_e2, p.rho_abs()].map(fmt_sig)
        });
        let lead = |rec: &mut Vec<String>| {
            rec.push(i.to_string());
            rec.push(fmt_sig(row.axis));
            match &params {
                Some(p) => rec.extend(p.iter().cloned()),
                None => rec.extend(std::iter::repeat_n(String::new(), 5)),
            }
        };
        match row.report.as_ref().and_then(|r| r.validation.as_ref()) {
            Some(v) => {
                for c in &v.checks {
                    let mut rec = Vec::new();
                    lead(&mut rec);
                    rec.extend([
                        c.name.clone(),
                        format!("{:?}", c.group),
                        format!("{:?}", c.relation),
                        fmt_sig(c.estimate),
                        fmt_sig(c.reference),
                        fmt_sig(c.std_error),
                        fmt_sig(c.sigmas),
                        c.passed.to_string(),
                        String::new(),
                    ]);
                    w.write_record(&rec).expect("in-memory write");
                }
            }
            None => {
                let mut rec = Vec::new();
                lead(&mut rec);
                rec.extend(std::iter::repeat_n(String::new(), 8));
                let mut err = row.error_text();
                if err.is_empty() {
                    err = "oracle not run".into();
                }
                rec.push(err);
                w.write_record(&rec).expect("in-memory write");
            }
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
}

/// True when every row ran the oracle and every check passed.
pub fn validation_passed(rows: &[Row]) -> bool {
    rows.iter()
        .all(|r| r.report.as_ref().and_then(|p| p.validation.as_ref()).is_some_and(ValidationReport::passed))
}

/// The oracle's nine-point default grid as sweep rows.
pub fn validate_default_grid(opts: &EvalOptions) -> Vec<Row> {
    let grid = oracle::default_grid();
    par::map_range(opts.exec, grid.len(), |i| {
        let mut o = *opts;
        o.modes = Modes {
            csi: false,
            rss: false,
            high_snr: false,
            oracle: true,
        };
        o.validation.seed = o.validation.seed.wrapping_add(i as u64);
        let p = &grid[i];
        match point(p, &o) {
            Ok(report) => Row {
                axis: crate::params::snr_db(p.p, p.sigma_a2),
                report: Some(report),
                reference: None,
                error: None,
            },
            Err(e) => Row {
                axis: f64::NAN,
                report: None,
                reference: None,
                error: Some(e.to_string()),
            },
        }
    })
}
