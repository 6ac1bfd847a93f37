//! CSV tables and plot data.
//!
//! Floats are written with `{:e}`, which round-trips exactly; inapplicable
//! cells are empty.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use super::sweep::{EpsilonRow, SeriesKey, SweepRow};
use crate::error::{Error, Result};
use crate::lower_bound::ProbeResult;

pub const SWEEP_COLUMNS: [&str; 13] = [
    "family",
    "d",
    "p",
    "param",
    "m",
    "n_translates",
    "error_quadrature",
    "error_parseval",
    "epsilon",
    "epsilon_tail",
    "epsilon_variant",
    "predicted",
    "seconds",
];

pub const EPSILON_COLUMNS: [&str; 14] = [
    "family",
    "d",
    "p",
    "param",
    "m",
    "epsilon",
    "epsilon_tail",
    "epsilon_variant",
    "sup_term",
    "gamma_term",
    "delta_lambda_term",
    "delta_gamma_term",
    "alias_term",
    "tail_dominated",
];

pub const PROBE_COLUMNS: [&str; 8] = [
    "n",
    "m",
    "s",
    "omega",
    "statistic",
    "envelope_low",
    "envelope_high",
    "flag",
];

fn float(x: f64) -> String {
    format!("{x:e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(float).unwrap_or_default()
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_COLUMNS)?;
    for r in rows {
        w.write_record([
            r.family.clone(),
            r.d.to_string(),
            float(r.p),
            r.param.clone(),
            r.m.to_string(),
            r.n_translates.to_string(),
            opt(r.error_quadrature),
            opt(r.error_parseval),
            opt(r.epsilon),
            opt(r.epsilon_tail),
            r.epsilon_variant.clone().unwrap_or_default(),
            opt(r.predicted),
            opt(r.seconds),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn sweep_csv_string(rows: &[SweepRow]) -> Result<String> {
    let mut buf = Vec::new();
    write_sweep_csv(rows, &mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Parse(e.to_string()))
}

fn parse_cell<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, line: u64) -> Result<T> {
    rec.get(i).unwrap_or("").parse().map_err(|_| {
        Error::Parse(format!(
            "record {line}: bad `{}` cell `{}`",
            SWEEP_COLUMNS[i],
            rec.get(i).unwrap_or("")
        ))
    })
}

fn parse_opt(rec: &csv::StringRecord, i: usize, line: u64) -> Result<Option<f64>> {
    match rec.get(i).unwrap_or("") {
        "" => Ok(None),
        _ => parse_cell(rec, i, line).map(Some),
    }
}

pub fn read_sweep_csv<R: Read>(input: R) -> Result<Vec<SweepRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    if header.iter().ne(SWEEP_COLUMNS.iter().copied()) {
        return Err(Error::Parse(format!(
            "unexpected sweep header: {}",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i as u64 + 2;
        let variant = rec.get(10).unwrap_or("");
        rows.push(SweepRow {
            family: rec.get(0).unwrap_or("").to_string(),
            d: parse_cell(&rec, 1, line)?,
            p: parse_cell(&rec, 2, line)?,
            param: rec.get(3).unwrap_or("").to_string(),
            m: parse_cell(&rec, 4, line)?,
            n_translates: parse_cell(&rec, 5, line)?,
            error_quadrature: parse_opt(&rec, 6, line)?,
            error_parseval: parse_opt(&rec, 7, line)?,
            epsilon: parse_opt(&rec, 8, line)?,
            epsilon_tail: parse_opt(&rec, 9, line)?,
            epsilon_variant: (!variant.is_empty()).then(|| variant.to_string()),
            predicted: parse_opt(&rec, 11, line)?,
            seconds: parse_opt(&rec, 12, line)?,
        });
    }
    Ok(rows)
}

pub fn write_sweep_csv_file(rows: &[SweepRow], path: &Path) -> Result<()> {
    write_sweep_csv(rows, std::fs::File::create(path)?)
}

pub fn read_sweep_csv_file(path: &Path) -> Result<Vec<SweepRow>> {
    read_sweep_csv(std::fs::File::open(path)?)
}

/// Two-column `(m, error)` blocks, one per series and method, each preceded
/// by `#` header lines and separated by blank lines.
pub fn write_plot_data<W: Write>(rows: &[SweepRow], mut out: W) -> Result<()> {
    let mut order: Vec<SeriesKey> = Vec::new();
    let mut series: BTreeMap<SeriesKey, Vec<&SweepRow>> = BTreeMap::new();
    for r in rows {
        let key = r.series_key();
        if !series.contains_key(&key) {
            order.push(key.clone());
        }
        series.entry(key).or_default().push(r);
    }
    writeln!(out, "# columns: m error")?;
    for key in &order {
        let rs = &series[key];
        type Column = fn(&SweepRow) -> Option<f64>;
        let methods: [(&str, Column); 3] = [
            ("parseval", |r| r.error_parseval),
            ("quadrature", |r| r.error_quadrature),
            ("epsilon", |r| r.epsilon),
        ];
        for (name, get) in methods {
            if rs.iter().all(|r| get(r).is_none()) {
                continue;
            }
            writeln!(out)?;
            writeln!(
                out,
                "# family={} d={} p={} param={} series={}",
                key.0, key.1, key.2, key.3, name
            )?;
            for r in rs {
                if let Some(v) = get(r) {
                    writeln!(out, "{} {}", r.m, float(v))?;
                }
            }
        }
    }
    Ok(())
}

pub fn write_epsilon_csv<W: Write>(rows: &[EpsilonRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(EPSILON_COLUMNS)?;
    for r in rows {
        let c = &r.report.components;
        w.write_record([
            r.family.clone(),
            r.d.to_string(),
            float(r.p),
            r.param.clone(),
            r.m.to_string(),
            float(r.report.value),
            float(r.report.tail_bound),
            r.report.variant.label().to_string(),
            opt(c.sup_term),
            opt(c.gamma_term),
            opt(c.delta_lambda_term),
            opt(c.delta_gamma_term),
            opt(c.alias_term),
            r.report.tail_dominated.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_probe_csv<W: Write>(rows: &[ProbeResult], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(PROBE_COLUMNS)?;
    for r in rows {
        w.write_record([
            r.n.to_string(),
            r.m.to_string(),
            r.s.to_string(),
            float(r.omega),
            float(r.statistic),
            float(r.envelope_low),
            float(r.envelope_high),
            r.flag.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
