//! Output rows and their CSV/JSON writers.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use raycasimir::assembly::{ConvergenceStudy, EnergyResult, SweepRecord};

/// Fixed 12-significant-digit form used in CSV cells.
pub fn fmt12(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.11e}")
    } else {
        "NaN".to_string()
    }
}

fn opt12(x: Option<f64>) -> String {
    x.map_or_else(|| "NaN".to_string(), fmt12)
}

pub trait Row: Serialize {
    fn header(rows: &[Self]) -> Vec<&'static str>
    where
        Self: Sized;
    fn cells(&self) -> Vec<String>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForceRow {
    pub a: f64,
    pub s: f64,
    pub h: f64,
    #[serde(rename = "F_even")]
    pub f_even: Option<f64>,
    #[serde(rename = "F_odd")]
    pub f_odd: Option<f64>,
    #[serde(rename = "F_pfa")]
    pub f_pfa: f64,
    #[serde(rename = "F_neumann")]
    pub f_neumann: Option<f64>,
    #[serde(rename = "F_dirichlet")]
    pub f_dirichlet: Option<f64>,
    #[serde(rename = "F_total")]
    pub f_total: Option<f64>,
    #[serde(rename = "F_total_over_Fpfa")]
    pub f_total_over_fpfa: Option<f64>,
    pub converged: bool,
    /// `even/odd` final reflection orders.
    pub orders: String,
    /// Present only for sweeps normalized by the piston force.
    #[serde(rename = "F_total_over_Fpiston", default, skip_serializing_if = "Option::is_none")]
    pub f_total_over_fpiston: Option<f64>,
}

impl ForceRow {
    pub fn from_record(r: &SweepRecord, with_piston: bool) -> Self {
        let f = r.forces;
        ForceRow {
            a: r.geometry.a,
            s: r.geometry.s,
            h: r.geometry.h,
            f_even: f.map(|f| f.even_total()),
            f_odd: f.map(|f| f.odd_paths),
            f_pfa: r.f_pfa,
            f_neumann: f.map(|f| f.neumann),
            f_dirichlet: f.map(|f| f.dirichlet),
            f_total: f.map(|f| f.total),
            f_total_over_fpfa: f.map(|f| f.normalized_by_pfa.total),
            converged: r.converged,
            orders: format!("{}/{}", r.even_order, r.odd_order),
            f_total_over_fpiston: if with_piston { Some(r.total_over_reference) } else { None },
        }
    }
}

const FORCE_HEADER: [&str; 12] = [
    "a",
    "s",
    "h",
    "F_even",
    "F_odd",
    "F_pfa",
    "F_neumann",
    "F_dirichlet",
    "F_total",
    "F_total_over_Fpfa",
    "converged",
    "orders",
];

impl Row for ForceRow {
    fn header(rows: &[Self]) -> Vec<&'static str> {
        let mut h = FORCE_HEADER.to_vec();
        if rows.iter().any(|r| r.f_total_over_fpiston.is_some()) {
            h.push("F_total_over_Fpiston");
        }
        h
    }

    fn cells(&self) -> Vec<String> {
        let mut c = vec![
            fmt12(self.a),
            fmt12(self.s),
            fmt12(self.h),
            opt12(self.f_even),
            opt12(self.f_odd),
            fmt12(self.f_pfa),
            opt12(self.f_neumann),
            opt12(self.f_dirichlet),
            opt12(self.f_total),
            opt12(self.f_total_over_fpfa),
            self.converged.to_string(),
            self.orders.clone(),
        ];
        if let Some(v) = self.f_total_over_fpiston {
            c.push(fmt12(v));
        }
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyRow {
    pub a: f64,
    pub s: f64,
    pub h: f64,
    #[serde(rename = "E_even")]
    pub e_even: f64,
    #[serde(rename = "E_odd")]
    pub e_odd: f64,
    #[serde(rename = "E_pfa")]
    pub e_pfa: f64,
    #[serde(rename = "E_neumann")]
    pub e_neumann: f64,
    #[serde(rename = "E_dirichlet")]
    pub e_dirichlet: f64,
    #[serde(rename = "E_total")]
    pub e_total: f64,
    #[serde(rename = "E_total_over_Epfa")]
    pub e_total_over_epfa: f64,
    pub converged: bool,
    pub orders: String,
}

impl EnergyRow {
    pub fn new(a: f64, s: f64, h: f64, r: &EnergyResult) -> Self {
        let e = r.energies;
        EnergyRow {
            a,
            s,
            h,
            e_even: e.even_total(),
            e_odd: e.odd_paths,
            e_pfa: e.pfa,
            e_neumann: e.neumann,
            e_dirichlet: e.dirichlet,
            e_total: e.total,
            e_total_over_epfa: e.total / (2.0 * e.pfa),
            converged: r.converged(),
            orders: format!("{}/{}", r.even.final_order(), r.odd.final_order()),
        }
    }
}

impl Row for EnergyRow {
    fn header(_: &[Self]) -> Vec<&'static str> {
        vec![
            "a",
            "s",
            "h",
            "E_even",
            "E_odd",
            "E_pfa",
            "E_neumann",
            "E_dirichlet",
            "E_total",
            "E_total_over_Epfa",
            "converged",
            "orders",
        ]
    }

    fn cells(&self) -> Vec<String> {
        vec![
            fmt12(self.a),
            fmt12(self.s),
            fmt12(self.h),
            fmt12(self.e_even),
            fmt12(self.e_odd),
            fmt12(self.e_pfa),
            fmt12(self.e_neumann),
            fmt12(self.e_dirichlet),
            fmt12(self.e_total),
            fmt12(self.e_total_over_epfa),
            self.converged.to_string(),
            self.orders.clone(),
        ]
    }
}

/// Closed-form `h = 0` values; even columns include the parallel-plate series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PistonRow {
    pub a: f64,
    pub s: f64,
    #[serde(rename = "Z2")]
    pub z2: f64,
    #[serde(rename = "E_even")]
    pub e_even: f64,
    #[serde(rename = "E_odd")]
    pub e_odd: f64,
    #[serde(rename = "E_total")]
    pub e_total: f64,
    #[serde(rename = "F_even")]
    pub f_even: f64,
    #[serde(rename = "F_odd")]
    pub f_odd: f64,
    #[serde(rename = "F_total")]
    pub f_total: f64,
}

impl Row for PistonRow {
    fn header(_: &[Self]) -> Vec<&'static str> {
        vec!["a", "s", "Z2", "E_even", "E_odd", "E_total", "F_even", "F_odd", "F_total"]
    }

    fn cells(&self) -> Vec<String> {
        [self.a, self.s, self.z2, self.e_even, self.e_odd, self.e_total, self.f_even, self.f_odd, self.f_total]
            .map(fmt12)
            .to_vec()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub channel: String,
    pub r: u64,
    pub partial: f64,
    /// Relative change from the previous order; absent for the first.
    pub successive_rel_diff: Option<f64>,
}

impl ConvergenceRow {
    pub fn from_study(study: &ConvergenceStudy) -> Vec<Self> {
        let mut out = Vec::new();
        for (name, rep) in [("even", &study.even), ("odd", &study.odd)] {
            for (i, (&r, &p)) in rep.orders_evaluated.iter().zip(&rep.partial_values).enumerate() {
                out.push(ConvergenceRow {
                    channel: name.to_string(),
                    r,
                    partial: p,
                    successive_rel_diff: i.checked_sub(1).map(|j| rep.successive_rel_diffs[j]),
                });
            }
        }
        out
    }
}

impl Row for ConvergenceRow {
    fn header(_: &[Self]) -> Vec<&'static str> {
        vec!["channel", "r", "partial", "successive_rel_diff"]
    }

    fn cells(&self) -> Vec<String> {
        vec![
            self.channel.clone(),
            self.r.to_string(),
            fmt12(self.partial),
            self.successive_rel_diff.map(fmt12).unwrap_or_default(),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

pub fn write_csv<R: Row, W: Write>(rows: &[R], out: W) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(R::header(rows))?;
    for r in rows {
        w.write_record(r.cells())?;
    }
    w.flush()
}

pub fn write_json<R: Row, W: Write>(rows: &[R], mut out: W) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut out, rows)?;
    writeln!(out)
}

/// Writes `rows` to `path`, or to stdout when `path` is `None`.
pub fn write_rows<R: Row>(rows: &[R], format: Format, path: Option<&Path>) -> io::Result<()> {
    let sink: Box<dyn Write> = match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    match format {
        Format::Csv => write_csv(rows, sink),
        Format::Json => write_json(rows, sink),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row() -> ForceRow {
        ForceRow {
            a: 1.0,
            s: 1.0,
            h: 0.25,
            f_even: Some(-0.0460511234567891),
            f_odd: Some(7.1e-3),
            f_pfa: -0.0478225,
            f_neumann: Some(-0.039),
            f_dirichlet: Some(-0.053),
            f_total: Some(-0.0921),
            f_total_over_fpfa: Some(0.963),
            converged: true,
            orders: "32/85".into(),
            f_total_over_fpiston: None,
        }
    }

    #[test]
    fn twelve_digits() {
        assert_eq!(fmt12(-0.0460511234567891), "-4.60511234568e-2");
        assert_eq!(fmt12(f64::NAN), "NaN");
    }

    #[test]
    fn one_record_two_lines() {
        let mut buf = Vec::new();
        write_csv(&[row()], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], FORCE_HEADER.join(","));
        assert!(lines[1].ends_with(",true,32/85"));
    }

    #[test]
    fn piston_column_only_when_requested() {
        let mut r = row();
        r.f_total_over_fpiston = Some(0.7);
        let mut buf = Vec::new();
        write_csv(&[r], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().next().unwrap().ends_with(",orders,F_total_over_Fpiston"));
    }

    #[test]
    fn json_round_trip() {
        let rows = vec![row(), ForceRow { f_total_over_fpiston: Some(0.5), converged: false, ..row() }];
        let mut buf = Vec::new();
        write_json(&rows, &mut buf).unwrap();
        let back: Vec<ForceRow> = serde_json::from_slice(&buf).unwrap();
        assert_eq!(back, rows);
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        let keys: Vec<&String> = v[0].as_object().unwrap().keys().collect();
        assert_eq!(keys.len(), FORCE_HEADER.len());
        for k in FORCE_HEADER {
            assert!(v[0].get(k).is_some(), "{k}");
        }
    }

    #[test]
    fn byte_stable() {
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_csv(&[row(), row()], &mut a).unwrap();
        write_csv(&[row(), row()], &mut b).unwrap();
        assert_eq!(a, b);
    }
}
