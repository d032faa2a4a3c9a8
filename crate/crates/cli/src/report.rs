//! Report rows and the documents that carry them.

use std::io::Write;
use std::path::Path;

use greensr::{energy_report, pack_linecards, Method, Network, SrConfiguration};
use serde::{Deserialize, Serialize};

use crate::args::{Format, OutputArgs};
use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub instance: String,
    pub mode: String,
    pub theta: f64,
    pub ports_total: usize,
    pub ports_inactive: usize,
    pub linecards_total: usize,
    pub linecards_inactive: usize,
    pub mlu: f64,
    pub energy_saving: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ReportDoc {
    pub schema_version: u32,
    pub rows: Vec<ReportRow>,
}

/// Stored configuration.
#[derive(Debug, Serialize, Deserialize)]
pub struct ConfigDoc {
    pub schema_version: u32,
    pub instance: String,
    pub configuration: SrConfiguration,
}

pub fn method_name(m: Method) -> &'static str {
    match m {
        Method::Spr => "spr",
        Method::Splitting => "2srg",
        Method::NoSplitting => "2srg-ns",
        Method::Exact => "exact",
    }
}

/// Packs linecards for `config` and summarises it. `mlu` overrides the
/// configuration's own value when recomputed.
pub fn row(
    instance: &str,
    network: &Network,
    config: &SrConfiguration,
    mlu: f64,
    linecard_share: f64,
) -> CliResult<ReportRow> {
    let packing = pack_linecards(network, &config.plan, network.linecard_spec().slots)?;
    let e = energy_report(network, &packing, linecard_share)?;
    Ok(ReportRow {
        instance: instance.to_string(),
        mode: method_name(config.method).to_string(),
        theta: config.theta,
        ports_total: e.ports_total,
        ports_inactive: e.ports_inactive,
        linecards_total: e.linecards_total,
        linecards_inactive: e.linecards_inactive,
        mlu,
        energy_saving: e.energy_saving,
    })
}

/// Writes `bytes` to `path`, or to standard output.
pub fn emit(path: Option<&Path>, bytes: &[u8]) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|source| CliError::Write {
            path: p.display().to_string(),
            source,
        }),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)
                .and_then(|_| out.flush())
                .map_err(|source| CliError::Write {
                    path: "<stdout>".into(),
                    source,
                })
        }
    }
}

pub fn to_json<T: Serialize>(value: &T, path: &str) -> CliResult<Vec<u8>> {
    let mut s = serde_json::to_vec_pretty(value).map_err(|source| CliError::Json {
        path: path.into(),
        source,
    })?;
    s.push(b'\n');
    Ok(s)
}

pub fn to_csv<T: Serialize>(rows: &[T]) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner()
        .map_err(|e| CliError::Config(format!("csv buffer: {e}")))
}

pub fn write_rows(rows: Vec<ReportRow>, out: &OutputArgs) -> CliResult<()> {
    let bytes = match out.format {
        Format::Json => to_json(
            &ReportDoc {
                schema_version: SCHEMA_VERSION,
                rows,
            },
            "<report>",
        )?,
        Format::Csv => to_csv(&rows)?,
    };
    emit(out.out.as_deref(), &bytes)
}
