use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use super::number::format_sig9;
use crate::calibration::{IvCurve, IvCurveSet};
use crate::error::{Error, Result};
use crate::experiments::{Phase, TraceRecord};

/// Header of the thermal trace schema.
pub const TRACE_HEADER: [&str; 6] = ["t_s", "t_set_K", "t_air_K", "t_dev_K", "r_ohm", "phase"];

/// Rows of string cells under a fixed header.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        Self {
            header: header.iter().map(|h| h.as_ref().to_string()).collect(),
            rows: Vec::new(),
        }
    }

    /// Appends a row of numbers.
    pub fn push_numbers(&mut self, values: &[f64]) {
        self.rows
            .push(values.iter().map(|&v| format_sig9(v)).collect());
    }

    pub fn push(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.header.len());
        self.rows.push(cells);
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        writer.write_record(&self.header)?;
        for row in &self.rows {
            writer.write_record(row)?;
        }
        writer.into_inner().map_err(|e| Error::Io(e.to_string()))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let bytes = self.to_bytes()?;
        let file = File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let mut out = BufWriter::new(file);
        out.write_all(&bytes)?;
        out.flush()?;
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }
}

pub fn read_table(path: &Path) -> Result<Table> {
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header = reader.headers()?.iter().map(str::to_string).collect();
    let rows = reader
        .records()
        .map(|r| r.map(|r| r.iter().map(str::to_string).collect()))
        .collect::<std::result::Result<_, _>>()?;
    Ok(Table { header, rows })
}

fn require_columns(table: &Table, names: &[&str]) -> Result<Vec<usize>> {
    names
        .iter()
        .map(|n| {
            table
                .column(n)
                .ok_or_else(|| Error::invalid(format!("missing column '{n}'")))
        })
        .collect()
}

fn number(cell: &str) -> Result<f64> {
    cell.trim()
        .parse()
        .map_err(|_| Error::invalid(format!("'{cell}' is not a number")))
}

pub fn trace_table(records: &[TraceRecord]) -> Table {
    let mut table = Table::new(&TRACE_HEADER);
    for r in records {
        let mut row: Vec<String> = [r.t, r.t_set, r.t_air, r.t_dev, r.r]
            .iter()
            .map(|&v| format_sig9(v))
            .collect();
        row.push(r.phase.to_string());
        table.push(row);
    }
    table
}

/// Reads a thermal trace. Pulse index and applied voltage are not part of
/// the schema; the applied voltage comes back as the read voltage.
pub fn read_trace_csv(path: &Path) -> Result<Vec<TraceRecord>> {
    let table = read_table(path)?;
    let cols = require_columns(&table, &TRACE_HEADER)?;
    table
        .rows
        .iter()
        .map(|row| {
            Ok(TraceRecord {
                t: number(&row[cols[0]])?,
                t_set: number(&row[cols[1]])?,
                t_air: number(&row[cols[2]])?,
                t_dev: number(&row[cols[3]])?,
                r: number(&row[cols[4]])?,
                phase: row[cols[5]].parse::<Phase>()?,
                pulse_index: None,
                v_applied: crate::device::V_READ,
            })
        })
        .collect()
}

/// Reads IV curves from `T_K,v_V,i_A` rows, grouped by temperature in order
/// of first appearance.
pub fn read_iv_csv(path: &Path) -> Result<IvCurveSet> {
    let table = read_table(path)?;
    let cols = require_columns(&table, &["T_K", "v_V", "i_A"])?;
    let mut curves: Vec<IvCurve> = Vec::new();
    for row in &table.rows {
        let (t, v, i) = (
            number(&row[cols[0]])?,
            number(&row[cols[1]])?,
            number(&row[cols[2]])?,
        );
        match curves.iter_mut().find(|c| c.temperature == t) {
            Some(c) => c.points.push((v, i)),
            None => curves.push(IvCurve {
                temperature: t,
                points: vec![(v, i)],
            }),
        }
    }
    Ok(IvCurveSet::new(curves))
}

/// Reads a per-step input load series from `step,load` rows. Steps must run
/// 0, 1, 2, ... Consecutive equal loads are merged into one segment.
pub fn read_pattern_csv(path: &Path) -> Result<Vec<(usize, f64)>> {
    let table = read_table(path)?;
    let cols = require_columns(&table, &["step", "load"])?;
    let mut segments: Vec<(usize, f64)> = Vec::new();
    for (expected, row) in table.rows.iter().enumerate() {
        let step: usize = row[cols[0]]
            .trim()
            .parse()
            .map_err(|_| Error::invalid(format!("bad step '{}'", row[cols[0]])))?;
        if step != expected {
            return Err(Error::invalid(format!(
                "pattern step {step} out of sequence, expected {expected}"
            )));
        }
        let load = number(&row[cols[1]])?;
        match segments.last_mut() {
            Some((n, l)) if *l == load => *n += 1,
            _ => segments.push((1, load)),
        }
    }
    Ok(segments)
}
