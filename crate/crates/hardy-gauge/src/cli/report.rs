//! Report rows and their CSV / JSON-lines serializations.
//!
//! Cell conventions, shared by both formats:
//!
//! * a value that does not apply to the scenario's regime is absent
//!   (empty CSV cell, omitted JSON key);
//! * `+inf` is the divergence sentinel and serializes as `inf`;
//! * a numerical failure serializes as `nan`;
//! * finite numbers use the shortest round-trip decimal form.

use std::io::{self, Write};

use super::config::ReportFormat;

/// One report cell: applicable-and-computed, not applicable, or failed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Absent,
    Value(f64),
    Failed,
}

impl Cell {
    /// Folds a computation result into a cell; NaN counts as failure.
    pub fn from_value(x: f64) -> Cell {
        if x.is_nan() {
            Cell::Failed
        } else {
            Cell::Value(x)
        }
    }

    pub fn is_failed(&self) -> bool {
        matches!(self, Cell::Failed)
    }

    fn csv(&self) -> String {
        match self {
            Cell::Absent => String::new(),
            Cell::Value(x) if x.is_infinite() => "inf".to_string(),
            Cell::Value(x) => x.to_string(),
            Cell::Failed => "nan".to_string(),
        }
    }

    /// JSON fragment, or `None` when the key should be omitted.
    fn json(&self) -> Option<String> {
        match self {
            Cell::Absent => None,
            Cell::Value(x) if x.is_infinite() => Some("\"inf\"".to_string()),
            Cell::Value(x) => Some(x.to_string()),
            Cell::Failed => Some("\"nan\"".to_string()),
        }
    }
}

/// One scenario x epsilon result line.
#[derive(Debug, Clone)]
pub struct ReportRow {
    pub scenario_id: String,
    pub p: f64,
    pub q: f64,
    pub epsilon: f64,
    pub a_eps: Cell,
    pub b1_eps: Cell,
    pub b2_eps: Cell,
    pub a_ps: Cell,
    pub muckenhoupt: Cell,
    pub mazya_rosin: Cell,
    pub c_hat: Cell,
    pub witness_lb: Cell,
    pub residual_b1b2: Cell,
    pub grid_n: usize,
}

impl ReportRow {
    pub fn any_failed(&self) -> bool {
        [
            &self.a_eps,
            &self.b1_eps,
            &self.b2_eps,
            &self.a_ps,
            &self.muckenhoupt,
            &self.mazya_rosin,
            &self.c_hat,
            &self.witness_lb,
            &self.residual_b1b2,
        ]
        .into_iter()
        .any(Cell::is_failed)
    }
}

pub const CSV_HEADER: &str = "scenario_id,p,q,epsilon,A_eps,B1_eps,B2_eps,A_PS,muckenhoupt,mazya_rosin,C_hat,witness_lb,residual_b1b2,grid_n";

/// Field names shared between the CSV header and the JSON keys.
const FIELDS: [&str; 14] = [
    "scenario_id",
    "p",
    "q",
    "epsilon",
    "A_eps",
    "B1_eps",
    "B2_eps",
    "A_PS",
    "muckenhoupt",
    "mazya_rosin",
    "C_hat",
    "witness_lb",
    "residual_b1b2",
    "grid_n",
];

fn cells_of(row: &ReportRow) -> [&Cell; 9] {
    [
        &row.a_eps,
        &row.b1_eps,
        &row.b2_eps,
        &row.a_ps,
        &row.muckenhoupt,
        &row.mazya_rosin,
        &row.c_hat,
        &row.witness_lb,
        &row.residual_b1b2,
    ]
}

fn write_csv(rows: &[ReportRow], out: &mut dyn Write) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for row in rows {
        let cells = cells_of(row);
        let mut line = format!("{},{},{},{}", row.scenario_id, row.p, row.q, row.epsilon);
        for cell in cells {
            line.push(',');
            line.push_str(&cell.csv());
        }
        line.push(',');
        line.push_str(&row.grid_n.to_string());
        writeln!(out, "{line}")?;
    }
    Ok(())
}

fn json_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out
}

fn json_number(x: f64) -> String {
    // finite by construction at call sites
    x.to_string()
}

fn write_jsonl(rows: &[ReportRow], out: &mut dyn Write) -> io::Result<()> {
    for row in rows {
        let mut parts: Vec<String> = Vec::with_capacity(FIELDS.len());
        parts.push(format!(
            "\"scenario_id\":\"{}\"",
            json_escape(&row.scenario_id)
        ));
        parts.push(format!("\"p\":{}", json_number(row.p)));
        parts.push(format!("\"q\":{}", json_number(row.q)));
        parts.push(format!("\"epsilon\":{}", json_number(row.epsilon)));
        for (cell, name) in cells_of(row).into_iter().zip(&FIELDS[4..13]) {
            if let Some(fragment) = cell.json() {
                parts.push(format!("\"{name}\":{fragment}"));
            }
        }
        parts.push(format!("\"grid_n\":{}", row.grid_n));
        writeln!(out, "{{{}}}", parts.join(","))?;
    }
    Ok(())
}

/// Serializes the rows in the requested format.
pub fn emit_report(
    rows: &[ReportRow],
    format: ReportFormat,
    out: &mut dyn Write,
) -> io::Result<()> {
    match format {
        ReportFormat::Csv => write_csv(rows, out),
        ReportFormat::Jsonl => write_jsonl(rows, out),
    }
}
