//! File formats. Text outputs start with `#` metadata lines carrying the
//! tool version and the full run configuration.

use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context};
use replab_core::entropy::{EntropyRow, RowKind};
use replab_core::seqstat::{CurveKind, StatCurve};
use replab_core::SymbolSeq;
use serde::{Deserialize, Serialize};

use crate::config::{config_error, Mode, RunConfig};

pub const TOOL: &str = concat!("replab ", env!("CARGO_PKG_VERSION"));

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path)
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

fn metadata(config: &RunConfig, extra: &[String]) -> String {
    let mut s = format!("# {TOOL}\n# config: {}\n", config.to_json());
    for line in extra {
        s.push_str("# ");
        s.push_str(line);
        s.push('\n');
    }
    s
}

/// JSON output: `{"tool", "config", entries...}`.
pub fn write_json(path: &Path, config: &RunConfig, entries: &[(&str, serde_json::Value)]) -> anyhow::Result<()> {
    let mut map = serde_json::Map::new();
    map.insert("tool".into(), TOOL.into());
    map.insert("config".into(), serde_json::to_value(config)?);
    for (k, v) in entries {
        map.insert((*k).into(), v.clone());
    }
    let mut text = serde_json::to_string_pretty(&serde_json::Value::Object(map))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// One row of `curves.csv`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurveRow {
    pub kind: String,
    pub index: u64,
    pub value: u64,
    /// 1 when the true value is only known to be at least `value`.
    pub censored: u8,
}

pub fn curve_rows(curves: &[StatCurve]) -> Vec<CurveRow> {
    curves
        .iter()
        .flat_map(|c| {
            c.points().iter().map(move |p| CurveRow {
                kind: c.kind().name().to_string(),
                index: p.index,
                value: p.value.value,
                censored: p.value.censored as u8,
            })
        })
        .collect()
}

pub fn curves_csv(rows: &[CurveRow], config: &RunConfig, extra: &[String]) -> anyhow::Result<Vec<u8>> {
    let mut out = metadata(config, extra).into_bytes();
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(&mut out);
    w.write_record(["kind", "index", "value", "censored"])?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    drop(w);
    Ok(out)
}

pub fn read_curves_csv(text: &str) -> anyhow::Result<Vec<CurveRow>> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header = r.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != ["kind", "index", "value", "censored"] {
        bail!("curves.csv: unexpected header {:?}", header);
    }
    let rows = r.deserialize().collect::<Result<Vec<CurveRow>, _>>()?;
    for row in &rows {
        if CurveKind::parse(&row.kind).is_none() || row.censored > 1 {
            bail!("curves.csv: bad row {:?}", row);
        }
    }
    Ok(rows)
}

/// One row of `entropy.csv`, in nats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyCsvRow {
    pub gamma: String,
    pub k: usize,
    pub i: u64,
    pub lo: f64,
    pub hi: f64,
    pub kind: RowKind,
}

pub fn gamma_label(gamma: f64) -> String {
    if gamma.is_infinite() {
        "inf".into()
    } else {
        format!("{gamma}")
    }
}

pub fn entropy_rows(rows: &[EntropyRow]) -> Vec<EntropyCsvRow> {
    rows.iter()
        .map(|r| EntropyCsvRow {
            gamma: gamma_label(r.order.value()),
            k: r.k,
            i: r.i,
            lo: r.value.lo,
            hi: r.value.hi,
            kind: r.kind,
        })
        .collect()
}

pub fn entropy_csv(rows: &[EntropyCsvRow], config: &RunConfig) -> anyhow::Result<Vec<u8>> {
    let mut out = metadata(config, &["units: nats".into()]).into_bytes();
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(&mut out);
    w.write_record(["gamma", "k", "i", "lo", "hi", "kind"])?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    drop(w);
    Ok(out)
}

pub fn read_entropy_csv(text: &str) -> anyhow::Result<Vec<EntropyCsvRow>> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    Ok(r.deserialize().collect::<Result<Vec<EntropyCsvRow>, _>>()?)
}

/// Sequence file: `D N`, then `#` metadata, then one symbol per line.
pub fn sequence_file(seq: &SymbolSeq, config: &RunConfig, extra: &[String]) -> Vec<u8> {
    let mut s = format!("{} {}\n", seq.alphabet_size(), seq.len());
    s.push_str(&metadata(config, extra));
    for &x in seq.symbols() {
        s.push_str(&x.to_string());
        s.push('\n');
    }
    s.into_bytes()
}

pub fn read_sequence_file(text: &str) -> anyhow::Result<SymbolSeq> {
    let mut lines = text.lines();
    let first = lines.next().context("sequence file is empty")?;
    let mut head = first.split_whitespace().map(str::parse::<u64>);
    let (d, n) = match (head.next(), head.next(), head.next()) {
        (Some(Ok(d)), Some(Ok(n)), None) => (d, n),
        _ => bail!("sequence file: first line must be `D N`, found {first:?}"),
    };
    let symbols = lines
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            l.parse::<u32>()
                .with_context(|| format!("sequence file: bad symbol {l:?}"))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    if symbols.len() as u64 != n {
        bail!("sequence file: header says {n} symbols, found {}", symbols.len());
    }
    Ok(SymbolSeq::new(symbols, d as u32)?)
}

/// Reads an input file as a symbol sequence.
pub fn ingest(path: &Path, mode: Mode) -> anyhow::Result<SymbolSeq> {
    let bytes = std::fs::read(path).map_err(|e| config_error(format!("cannot read input {}: {e}", path.display())))?;
    Ok(ingest_bytes(bytes, mode))
}

pub fn ingest_bytes(bytes: Vec<u8>, mode: Mode) -> SymbolSeq {
    match mode {
        Mode::Bytes => SymbolSeq::new(bytes.into_iter().map(u32::from).collect(), 256).expect("bytes fit"),
        Mode::Tokens => {
            let text = String::from_utf8_lossy(&bytes);
            SymbolSeq::from_tokens(text.split_whitespace()).0
        }
    }
}

/// Reads `#` metadata lines after an optional first header line.
pub fn metadata_lines(text: &str) -> Vec<&str> {
    text.lines()
        .skip_while(|l| !l.starts_with('#'))
        .take_while(|l| l.starts_with('#'))
        .map(|l| l.trim_start_matches('#').trim())
        .collect()
}
