use std::collections::BTreeSet;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use anyhow::bail;
use fpsum::fp::Precision;
use fpsum::ring::PartyId;
use serde::Serialize;

use crate::config::BenchConfig;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Phase {
    FL2SA,
    SASum,
    SA2FL,
    Total,
    B2A,
}

impl Phase {
    pub const ALL: [Phase; 5] = [Phase::FL2SA, Phase::SASum, Phase::SA2FL, Phase::Total, Phase::B2A];
    pub const FLSUM: [Phase; 4] = [Phase::FL2SA, Phase::SASum, Phase::SA2FL, Phase::Total];

    pub fn name(self) -> &'static str {
        match self {
            Phase::FL2SA => "FL2SA",
            Phase::SASum => "SASum",
            Phase::SA2FL => "SA2FL",
            Phase::Total => "Total",
            Phase::B2A => "B2A",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BenchKind {
    Flsum,
    B2a,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhaseStat {
    pub phase: Phase,
    pub mean_ms: f64,
    pub median_ms: f64,
    pub bits: u64,
    pub rounds: u32,
}

/// Result of one configuration over all its trials.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRecord {
    pub schema_version: u32,
    pub kind: BenchKind,
    pub config: BenchConfig,
    /// Ring width of the computation.
    pub k: u32,
    pub phases: Vec<PhaseStat>,
    /// Bits are those sent by this party alone when set, otherwise totals
    /// over all three.
    pub party_view: Option<PartyId>,
    pub correct: bool,
}

impl BenchRecord {
    pub fn phase(&self, p: Phase) -> Option<&PhaseStat> {
        self.phases.iter().find(|s| s.phase == p)
    }
}

pub fn mean_and_median(ms: &[f64]) -> (f64, f64) {
    if ms.is_empty() {
        return (0.0, 0.0);
    }
    let mean = ms.iter().sum::<f64>() / ms.len() as f64;
    let mut s = ms.to_vec();
    s.sort_by(f64::total_cmp);
    let mid = s.len() / 2;
    let median = if s.len() % 2 == 1 { s[mid] } else { (s[mid - 1] + s[mid]) / 2.0 };
    (mean, median)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Table,
}

impl FromStr for Format {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "table" => Ok(Format::Table),
            _ => bail!("unknown format {s:?} (json, csv or table)"),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Json => "json",
            Format::Csv => "csv",
            Format::Table => "table",
        })
    }
}

pub fn emit_report(records: &[BenchRecord], format: Format) -> anyhow::Result<String> {
    Ok(match format {
        Format::Json => {
            #[derive(Serialize)]
            struct Doc<'a> {
                schema_version: u32,
                records: &'a [BenchRecord],
            }
            let mut s = serde_json::to_string_pretty(&Doc { schema_version: SCHEMA_VERSION, records })?;
            s.push('\n');
            s
        }
        Format::Csv => to_csv(records)?,
        Format::Table => to_table(records),
    })
}

pub fn csv_header() -> Vec<String> {
    let mut h: Vec<String> = [
        "schema_version",
        "kind",
        "precision",
        "w",
        "k",
        "n",
        "trials",
        "transport",
        "seed",
        "generator",
        "party",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for p in Phase::ALL {
        for f in ["mean_ms", "median_ms", "bits", "rounds"] {
            h.push(format!("{}_{f}", p.name().to_lowercase()));
        }
    }
    h.push("correct".into());
    h
}

fn to_csv(records: &[BenchRecord]) -> anyhow::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(csv_header())?;
    for r in records {
        let c = &r.config;
        let mut row = vec![
            SCHEMA_VERSION.to_string(),
            match r.kind {
                BenchKind::Flsum => "flsum".into(),
                BenchKind::B2a => "b2a".into(),
            },
            c.precision.name().to_string(),
            c.w.to_string(),
            r.k.to_string(),
            c.n.to_string(),
            c.trials.to_string(),
            c.transport.to_string(),
            c.seed.to_string(),
            c.generator.name().to_string(),
            r.party_view.map(|p| p.get().to_string()).unwrap_or_default(),
        ];
        for p in Phase::ALL {
            match r.phase(p) {
                Some(s) => row.extend([
                    format!("{:.3}", s.mean_ms),
                    format!("{:.3}", s.median_ms),
                    s.bits.to_string(),
                    s.rounds.to_string(),
                ]),
                None => row.extend(std::iter::repeat_n(String::new(), 4)),
            }
        }
        row.push(r.correct.to_string());
        w.write_record(&row)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn grid(out: &mut String, title: &str, cols: &[String], rows: &[(String, Vec<String>)]) {
    let first = rows.iter().map(|r| r.0.len()).chain([5]).max().unwrap_or(5);
    let widths: Vec<usize> = (0..cols.len())
        .map(|i| rows.iter().map(|r| r.1[i].len()).chain([cols[i].len()]).max().unwrap_or(0))
        .collect();
    let _ = writeln!(out, "{title}");
    let _ = write!(out, "{:<first$}", "");
    for (c, w) in cols.iter().zip(&widths) {
        let _ = write!(out, "  {c:>w$}");
    }
    out.push('\n');
    for (name, cells) in rows {
        let _ = write!(out, "{name:<first$}");
        for (c, w) in cells.iter().zip(&widths) {
            let _ = write!(out, "  {c:>w$}");
        }
        out.push('\n');
    }
    out.push('\n');
}

/// FLSum records as one block per precision with phases as rows and
/// `(w, n)` as columns, first mean runtime then communication. B2A
/// records follow as one row per ring width.
fn to_table(records: &[BenchRecord]) -> String {
    let mut out = String::new();
    for prec in [Precision::Single, Precision::Double] {
        let recs: Vec<&BenchRecord> = records
            .iter()
            .filter(|r| r.kind == BenchKind::Flsum && r.config.precision == prec)
            .collect();
        if recs.is_empty() {
            continue;
        }
        let keys: BTreeSet<(u32, usize)> = recs.iter().map(|r| (r.config.w, r.config.n)).collect();
        let cols: Vec<String> = keys.iter().map(|(w, n)| format!("w={w} n={n}")).collect();
        let cell = |key: &(u32, usize), p: Phase, f: &dyn Fn(&PhaseStat) -> String| {
            recs.iter()
                .find(|r| (r.config.w, r.config.n) == *key)
                .and_then(|r| r.phase(p))
                .map(f)
                .unwrap_or_else(|| "-".into())
        };
        for (label, f) in [
            ("runtime (ms)", &(|s: &PhaseStat| format!("{:.2}", s.mean_ms)) as &dyn Fn(&PhaseStat) -> String),
            ("communication (bits)", &|s: &PhaseStat| s.bits.to_string()),
            ("rounds", &|s: &PhaseStat| s.rounds.to_string()),
        ] {
            let rows: Vec<(String, Vec<String>)> = Phase::FLSUM
                .iter()
                .map(|&p| (p.name().to_string(), keys.iter().map(|k| cell(k, p, f)).collect()))
                .collect();
            grid(&mut out, &format!("FLSum {label}, {} precision", prec.name()), &cols, &rows);
        }
    }
    let b2a: Vec<&BenchRecord> = records.iter().filter(|r| r.kind == BenchKind::B2a).collect();
    if !b2a.is_empty() {
        let ns: BTreeSet<usize> = b2a.iter().map(|r| r.config.n).collect();
        let ks: BTreeSet<u32> = b2a.iter().map(|r| r.k).collect();
        let cols: Vec<String> = ns.iter().map(|n| format!("n={n}")).collect();
        for (label, bits) in [("runtime (ms)", false), ("communication (bits)", true)] {
            let rows: Vec<(String, Vec<String>)> = ks
                .iter()
                .map(|&k| {
                    let cells = ns
                        .iter()
                        .map(|&n| {
                            b2a.iter()
                                .find(|r| r.k == k && r.config.n == n)
                                .and_then(|r| r.phase(Phase::B2A))
                                .map(|s| if bits { s.bits.to_string() } else { format!("{:.2}", s.mean_ms) })
                                .unwrap_or_else(|| "-".into())
                        })
                        .collect();
                    (format!("k={k}"), cells)
                })
                .collect();
            grid(&mut out, &format!("B2A {label}"), &cols, &rows);
        }
    }
    out
}
