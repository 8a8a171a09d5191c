use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use plotters::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::sweep::{Row, Table};

pub const CSV_HEADER: &str = "method,m,Ns,nbar,n,h,H,Pe,Pc,runtime_s";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Plot,
}

#[derive(Serialize, Deserialize)]
struct Record {
    method: String,
    m: usize,
    #[serde(rename = "Ns")]
    ns: f64,
    nbar: f64,
    n: usize,
    h: usize,
    #[serde(rename = "H")]
    big_h: u64,
    #[serde(rename = "Pe")]
    pe: f64,
    #[serde(rename = "Pc")]
    pc: f64,
    runtime_s: f64,
}

#[derive(Serialize)]
struct DiagRecord<'a> {
    method: &'a str,
    #[serde(rename = "Ns")]
    ns: f64,
    nbar: f64,
    trace_deficit: Option<f64>,
    error: &'a str,
}

pub fn write_csv(table: &Table, w: impl Write) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in &table.rows {
        wr.serialize(Record {
            method: r.method.clone(),
            m: r.m,
            ns: r.ns,
            nbar: r.nbar,
            n: r.n,
            h: r.h,
            big_h: r.big_h,
            pe: r.pe,
            pc: r.pc,
            runtime_s: r.runtime_s,
        })?;
    }
    if table.rows.is_empty() {
        wr.write_record(CSV_HEADER.split(','))?;
    }
    wr.flush()?;
    Ok(())
}

/// Reads a table written by [`write_csv`]. Trace deficits are not part of
/// the CSV and come back as NaN.
pub fn read_csv(r: impl Read) -> Result<Table> {
    let mut rd = csv::Reader::from_reader(r);
    let header: Vec<String> = rd.headers()?.iter().map(str::to_owned).collect();
    if header.join(",") != CSV_HEADER {
        return Err(CliError::Spec(format!("unexpected header '{}'", header.join(","))));
    }
    let mut table = Table::default();
    for rec in rd.deserialize() {
        let rec: Record = rec?;
        table.m = rec.m;
        table.rows.push(Row {
            method: rec.method,
            m: rec.m,
            ns: rec.ns,
            nbar: rec.nbar,
            n: rec.n,
            h: rec.h,
            big_h: rec.big_h,
            pe: rec.pe,
            pc: rec.pc,
            runtime_s: rec.runtime_s,
            trace_deficit: f64::NAN,
        });
    }
    Ok(table)
}

/// Per-point trace deficits and failure messages.
pub fn write_diagnostics(table: &Table, w: impl Write) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in &table.rows {
        wr.serialize(DiagRecord {
            method: &r.method,
            ns: r.ns,
            nbar: r.nbar,
            trace_deficit: Some(r.trace_deficit),
            error: "",
        })?;
    }
    for f in &table.failures {
        wr.serialize(DiagRecord {
            method: &f.method,
            ns: f.ns,
            nbar: f.nbar,
            trace_deficit: None,
            error: &f.message,
        })?;
    }
    wr.flush()?;
    Ok(())
}

fn plot_err<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Plot(e.to_string())
}

/// Log-scale `Pe` against `Ns`, one line per (method, nbar).
pub fn write_plot(table: &Table, path: &Path) -> Result<()> {
    let mut curves: BTreeMap<(String, u64), Vec<(f64, f64)>> = BTreeMap::new();
    for r in table.rows.iter().filter(|r| r.pe > 0.0) {
        curves
            .entry((r.method.clone(), r.nbar.to_bits()))
            .or_default()
            .push((r.ns, r.pe));
    }
    if curves.is_empty() {
        return Err(CliError::EmptyTable);
    }
    let xs = table.rows.iter().map(|r| r.ns);
    let (x0, x1) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    let x1 = if x1 > x0 { x1 } else { x0 + 1.0 };
    let ymin = curves
        .values()
        .flatten()
        .map(|p| p.1)
        .fold(f64::INFINITY, f64::min);
    let y0 = 10f64.powf(ymin.log10().floor()).min(0.1);

    // the SVG backend reports io problems late; fail early on a bad path
    File::create(path)?;
    let root = SVGBackend::new(path, (960, 640)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(format!("{}-PPM error probability", table.m), ("sans-serif", 22))
        .margin(16)
        .x_label_area_size(44)
        .y_label_area_size(72)
        .build_cartesian_2d(x0..x1, (y0..1.0).log_scale())
        .map_err(plot_err)?;
    chart
        .configure_mesh()
        .x_desc("Ns")
        .y_desc("Pe")
        .label_style(("sans-serif", 14))
        .axis_desc_style(("sans-serif", 16))
        .y_label_formatter(&|y| format!("{y:.0e}"))
        .draw()
        .map_err(plot_err)?;
    for (idx, ((method, nbar), pts)) in curves.into_iter().enumerate() {
        let color = Palette99::pick(idx).to_rgba();
        let label = format!("{method}, nbar={}", f64::from_bits(nbar));
        chart
            .draw_series(LineSeries::new(pts, color.stroke_width(2)))
            .map_err(plot_err)?
            .label(label)
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 18, y)], color.stroke_width(2)));
    }
    chart
        .configure_series_labels()
        .position(SeriesLabelPosition::LowerLeft)
        .background_style(WHITE.mix(0.85))
        .border_style(BLACK)
        .label_font(("sans-serif", 14))
        .draw()
        .map_err(plot_err)?;
    root.present().map_err(plot_err)?;
    Ok(())
}

/// Writes `sweep_m{m}.csv` (or `.svg`) plus, for CSV, a
/// `diagnostics_m{m}.csv` next to it. Returns the files written.
pub fn render(table: &Table, format: Format, dir: &Path) -> Result<Vec<PathBuf>> {
    if table.rows.is_empty() {
        return Err(CliError::EmptyTable);
    }
    std::fs::create_dir_all(dir)?;
    match format {
        Format::Csv => {
            let main = dir.join(format!("sweep_m{}.csv", table.m));
            write_csv(table, File::create(&main)?)?;
            let diag = dir.join(format!("diagnostics_m{}.csv", table.m));
            write_diagnostics(table, File::create(&diag)?)?;
            Ok(vec![main, diag])
        }
        Format::Plot => {
            let path = dir.join(format!("sweep_m{}.svg", table.m));
            write_plot(table, &path)?;
            Ok(vec![path])
        }
    }
}
