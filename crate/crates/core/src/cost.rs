//! Closed-form communication and round counts, and their comparison with
//! measured ledgers.
//!
//! Bits are totals over all three parties. Logarithms are base 2; `γ` and
//! `δ` are ceiled, and every other logarithm of a non-power of two is
//! ceiled as well.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fp::FpParams;
use crate::runtime::{CostLedger, Protocol};

macro_rules! rows {
    ($($name:ident => $label:literal,)*) => {
        /// A row of the cost table.
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum CostRow {
            $($name,)*
        }

        impl CostRow {
            pub const ALL: &'static [CostRow] = &[$(CostRow::$name,)*];

            pub fn name(self) -> &'static str {
                match self {
                    $(CostRow::$name => $label,)*
                }
            }
        }

        impl FromStr for CostRow {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($label => Ok(CostRow::$name),)*
                    _ => Err(Error::InvalidParameter(format!("unknown protocol {s:?}"))),
                }
            }
        }
    };
}

rows! {
    Mult => "Mult",
    Dot => "Dot",
    Open => "Open",
    B2A => "B2A",
    RandBit => "RandBit",
    EdaBit => "edaBit",
    EdaBitShort => "edaBit-short",
    PrefixOr => "PrefixOR",
    PrefixAnd => "PrefixAND",
    Msb => "MSB",
    Eqz => "EQZ",
    Trunc => "Trunc",
    BitDec => "BitDec",
    Convert => "Convert",
    Shift => "Shift",
    B2U => "B2U",
    Normalize => "Normalize",
}

impl fmt::Display for CostRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for CostRow {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

/// Formula arguments. Rows read only the fields they need; `ell` is the
/// table's `ℓ` (or `l` for the float rows, where it defaults to `wβ`) and
/// `k_to` is the target ring of Convert.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CostArgs {
    pub k: u32,
    pub ell: u32,
    pub u: u32,
    pub n: u32,
    pub k_to: u32,
    pub alpha: u32,
    pub beta: u32,
    pub w: u32,
    pub m: u32,
}

impl CostArgs {
    pub fn ring(k: u32) -> Self {
        CostArgs { k, ..Default::default() }
    }

    pub fn from_params(p: &FpParams) -> Self {
        CostArgs {
            k: p.k,
            alpha: p.alpha,
            beta: p.beta,
            w: p.w,
            m: p.m,
            ell: p.w * p.beta,
            ..Default::default()
        }
    }
}

/// Bits (possibly a range) and rounds of one phase of a protocol.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Cost {
    pub bits_lo: f64,
    pub bits_hi: f64,
    pub rounds: f64,
}

impl Cost {
    const ZERO: Cost = Cost { bits_lo: 0.0, bits_hi: 0.0, rounds: 0.0 };

    fn new(bits: f64, rounds: f64) -> Self {
        Cost { bits_lo: bits, bits_hi: bits, rounds }
    }

    fn banded(lo: f64, hi: f64, rounds: f64) -> Self {
        Cost { bits_lo: lo, bits_hi: hi, rounds }
    }

    pub fn is_exact(&self) -> bool {
        self.bits_lo == self.bits_hi
    }
}

/// Evaluated row: precomputable and input-dependent costs per item.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CostFormula {
    pub row: CostRow,
    pub args: CostArgs,
    pub precompute: Cost,
    pub online: Cost,
    /// Multiplicative range of a bracketed constant, when the row has one.
    pub band: Option<(f64, f64)>,
}

impl CostFormula {
    /// Precompute plus online bits, low end.
    pub fn total_lo(&self) -> f64 {
        self.precompute.bits_lo + self.online.bits_lo
    }

    pub fn total_hi(&self) -> f64 {
        self.precompute.bits_hi + self.online.bits_hi
    }
}

fn lg(x: u32) -> f64 {
    if x <= 1 {
        0.0
    } else {
        (32 - (x - 1).leading_zeros()) as f64
    }
}

/// The constant of the B2U precompute term.
pub const B2U_BAND: (f64, f64) = (1.2, 1.5);

fn need(row: CostRow, ok: bool, what: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{row}: {what}")))
    }
}

/// Evaluates one row.
pub fn analytic_cost(row: CostRow, a: &CostArgs) -> Result<CostFormula> {
    use CostRow::*;
    let f = |x: u32| x as f64;
    let (k, kl) = (f(a.k), lg(a.k));
    let ell = f(a.ell);
    let needs_k = !matches!(row, Open | PrefixOr | PrefixAnd);
    need(row, !needs_k || a.k >= 1, "k must be positive")?;
    let mut band = None;
    let (pre, on) = match row {
        Mult | Dot => (Cost::ZERO, Cost::new(3.0 * k, 1.0)),
        Open => {
            need(row, a.ell >= 1, "ℓ must be positive")?;
            (Cost::ZERO, Cost::new(3.0 * ell, 1.0))
        }
        B2A => (Cost::ZERO, Cost::new(3.0 * k, 2.0)),
        RandBit => (Cost::new(3.0 * k, 2.0), Cost::ZERO),
        EdaBit => (Cost::new(3.0 * k * kl + 7.0 * k, kl + 2.0), Cost::ZERO),
        EdaBitShort => {
            need(row, a.ell >= 1 && a.ell < a.k, "needs 0 < ℓ < k")?;
            let ll = lg(a.ell);
            (Cost::new(3.0 * ell * ll + 5.0 * ell + 5.0 * k, ll + 4.0), Cost::ZERO)
        }
        PrefixOr | PrefixAnd => {
            need(row, a.n >= 1, "n must be positive")?;
            let n = f(a.n);
            (Cost::ZERO, Cost::new(1.5 * n * lg(a.n), lg(a.n)))
        }
        Msb => (Cost::new(3.0 * k * kl + 10.0 * k, kl + 2.0), Cost::new(12.0 * k - 12.0, kl + 2.0)),
        Eqz => (Cost::new(3.0 * k * kl + 7.0 * k, kl + 2.0), Cost::new(6.0 * k - 3.0, kl + 1.0)),
        Trunc => {
            need(row, a.u >= 1 && a.u <= a.ell && a.ell <= a.k, "needs 0 < u ≤ ℓ ≤ k")?;
            let ul = lg(a.u);
            (
                Cost::new(3.0 * k * kl + 18.0 * k, ul + 3.0),
                Cost::new(3.0 * k + 3.0 * ell + 6.0 * f(a.u) - 6.0, ul + 3.0),
            )
        }
        BitDec => {
            need(row, a.ell >= 1 && a.ell < a.k, "needs 0 < ℓ < k")?;
            let ll = lg(a.ell);
            (
                Cost::new(3.0 * ell * ll + 5.0 * ell + 5.0 * k, ll + 4.0),
                Cost::new(3.0 * ell * ll + 3.0 * ell, ll + 1.0),
            )
        }
        Convert => {
            need(row, a.k_to > a.k, "needs k' > k")?;
            (
                Cost::new(3.0 * k * kl + 7.0 * k, kl + 2.0),
                Cost::new(3.0 * f(a.k_to) * k + 3.0 * k * kl + 3.0 * k, kl + 3.0),
            )
        }
        Shift => {
            need(row, a.beta >= 1 && a.w >= 2, "needs β ≥ 1, w ≥ 2")?;
            let (b1, g) = (f(a.beta - 1), lg(a.w));
            let gl = lg(lg(a.w) as u32);
            (
                Cost::new(
                    b1 * (3.0 * k * kl + 18.0 * k) + 3.0 * g * gl + 5.0 * g + 5.0 * k,
                    (gl + 4.0).max(g + 3.0),
                ),
                Cost::new(
                    6.0 * b1 * (2.0 * k + f(a.w) - 1.0) + 3.0 * g * (k + gl + 1.0) - 3.0 * k,
                    g + 2.0 * gl + 7.0,
                ),
            )
        }
        B2U => {
            need(row, a.alpha >= 1, "α must be positive")?;
            let d = lg(a.alpha);
            let dl = lg(d as u32);
            let rest = 3.0 * d * dl + 5.0 * d + 5.0 * k;
            let unary = 3.0 * 2f64.powf(d);
            band = Some(B2U_BAND);
            (
                Cost::banded(B2U_BAND.0 * unary + rest, B2U_BAND.1 * unary + rest, 2.0 * dl + 4.0),
                Cost::new(3.0 * f(a.alpha) * k + 3.0 * d, 3.0),
            )
        }
        Normalize => {
            need(row, a.beta >= 1 && a.ell > a.m + 2, "needs β ≥ 1 and l > m + 2")?;
            let b = f(a.beta);
            let (l, ll) = (ell, lg(a.ell));
            let r = a.ell - a.m - 2;
            (
                Cost::new(b * (3.0 * k * kl + 7.0 * k) + 6.0 * l * ll + 17.0 * l, (kl + 2.0).max(ll + 2.0)),
                Cost::new(
                    3.0 * k * (b * l + b * kl + 2.0 * l + b - 1.0)
                        + 1.5 * f(r) * lg(r)
                        + 3.0 * l * (ll + 6.0)
                        - 12.0,
                    2.0 * ll + kl + lg(r) + 10.0,
                ),
            )
        }
    };
    Ok(CostFormula { row, args: *a, precompute: pre, online: on, band })
}

/// A three-party B2A construction: `per_k * k + constant` online bits
/// at ring width `k` in `rounds` rounds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct B2aVariant {
    pub name: &'static str,
    pub per_k: u64,
    pub constant: u64,
    pub rounds: u32,
}

impl B2aVariant {
    pub fn bits(&self, k: u64) -> u64 {
        self.per_k * k + self.constant
    }
}

/// Known B2A constructions, ours last.
pub const B2A_VARIANTS: &[B2aVariant] = &[
    B2aVariant { name: "doubled-ring", per_k: 6, constant: 12, rounds: 2 },
    B2aVariant { name: "two-product", per_k: 6, constant: 0, rounds: 2 },
    B2aVariant { name: "one-round", per_k: 6, constant: 0, rounds: 1 },
    B2aVariant { name: "rss-local-shares", per_k: 3, constant: 0, rounds: 2 },
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    ExactMatch,
    WithinBand,
    Informational,
    Mismatch,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::ExactMatch => "exact-match",
            Verdict::WithinBand => "within-band",
            Verdict::Informational => "informational",
            Verdict::Mismatch => "mismatch",
        })
    }
}

/// One protocol at one parameterization, summed over its invocations.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CostEntry {
    pub row: CostRow,
    pub protocol: Protocol,
    pub width: u32,
    pub arg: u32,
    pub invocations: u64,
    pub items: u64,
    pub measured_bits: u64,
    pub measured_rounds: u32,
    pub analytic: Option<CostFormula>,
    /// Measured bits per item over the analytic total per item.
    pub ratio: Option<f64>,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CostReport {
    pub entries: Vec<CostEntry>,
}

impl CostReport {
    pub fn mismatches(&self) -> impl Iterator<Item = &CostEntry> {
        self.entries.iter().filter(|e| e.verdict == Verdict::Mismatch)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<13} {:>5} {:>5} {:>6} {:>9} {:>14} {:>6} {:>22} {:>7}  verdict",
            "protocol", "width", "arg", "calls", "items", "bits", "rounds", "analytic bits/item", "ratio"
        );
        for e in &self.entries {
            let analytic = match &e.analytic {
                Some(f) if f.total_lo() == f.total_hi() => format!("{:.1}", f.total_lo()),
                Some(f) => format!("{:.1}-{:.1}", f.total_lo(), f.total_hi()),
                None => "-".into(),
            };
            let ratio = e.ratio.map(|r| format!("{r:.3}")).unwrap_or_else(|| "-".into());
            let _ = writeln!(
                out,
                "{:<13} {:>5} {:>5} {:>6} {:>9} {:>14} {:>6} {:>22} {:>7}  {}",
                e.row.name(),
                e.width,
                e.arg,
                e.invocations,
                e.items,
                e.measured_bits,
                e.measured_rounds,
                analytic,
                ratio,
                e.verdict
            );
        }
        out
    }
}

// Table row and arguments for a scope, or `None` if no row models it.
fn row_for(protocol: Protocol, width: u32, arg: u32, params: &FpParams) -> Option<(CostRow, CostArgs)> {
    use Protocol as P;
    let base = CostArgs::from_params(params);
    let ring = CostArgs { k: width, ..base };
    Some(match protocol {
        P::Mult | P::And => (CostRow::Mult, ring),
        P::Dot => (CostRow::Dot, ring),
        P::Open => (CostRow::Open, CostArgs { ell: width, ..base }),
        P::B2A => (CostRow::B2A, ring),
        P::RandBit => (CostRow::RandBit, ring),
        P::EdaBit if arg == width => (CostRow::EdaBit, ring),
        P::EdaBit if arg != 0 => (CostRow::EdaBitShort, CostArgs { ell: arg, ..ring }),
        P::PrefixOr => (CostRow::PrefixOr, CostArgs { n: width, ..base }),
        P::PrefixAnd => (CostRow::PrefixAnd, CostArgs { n: width, ..base }),
        P::Msb => (CostRow::Msb, ring),
        P::Eqz => (CostRow::Eqz, ring),
        P::Trunc => (CostRow::Trunc, CostArgs { ell: width, u: arg, ..base }),
        P::BitDec => (CostRow::BitDec, CostArgs { ell: width, ..base }),
        P::Convert => (CostRow::Convert, CostArgs { k: arg, k_to: width, ..base }),
        P::Shift => (CostRow::Shift, base),
        P::B2U => (CostRow::B2U, CostArgs { alpha: arg, ..base }),
        P::Normalize => (CostRow::Normalize, base),
        _ => return None,
    })
}

fn is_exact_row(row: CostRow) -> bool {
    matches!(row, CostRow::Mult | CostRow::Dot | CostRow::Open | CostRow::B2A)
}

/// Groups the outermost invocations of every modeled protocol by
/// `(protocol, width, arg)` and compares each group with its row.
///
/// Mult, Dot, Open and B2A must match bit for bit and round for round on
/// every invocation. Other rows run their precomputation inline and use
/// different sub-protocols, so they are reported against the sum of both
/// phases and never fail.
pub fn compare(ledger: &CostLedger, params: &FpParams) -> Result<CostReport> {
    if ledger.records.len() <= 1 {
        return Err(Error::InvalidParameter("ledger has no protocol scopes".into()));
    }
    let mut groups: Vec<CostEntry> = Vec::new();
    for p in Protocol::ALL {
        for r in ledger.outermost(*p) {
            let Some((row, args)) = row_for(r.protocol, r.width, r.arg, params) else { continue };
            let analytic = analytic_cost(row, &args).ok();
            let exact_ok = analytic.as_ref().map(|f| {
                let bits = f.online.bits_lo * r.items as f64;
                let rounds = if r.items == 0 { 0.0 } else { f.online.rounds };
                r.bits as f64 == bits && r.rounds as f64 == rounds
            });
            let idx = match groups
                .iter()
                .position(|g| (g.protocol, g.width, g.arg) == (r.protocol, r.width, r.arg))
            {
                Some(i) => i,
                None => {
                    groups.push(CostEntry {
                        row,
                        protocol: r.protocol,
                        width: r.width,
                        arg: r.arg,
                        invocations: 0,
                        items: 0,
                        measured_bits: 0,
                        measured_rounds: 0,
                        analytic,
                        ratio: None,
                        verdict: if is_exact_row(row) { Verdict::ExactMatch } else { Verdict::Informational },
                    });
                    groups.len() - 1
                }
            };
            let g = &mut groups[idx];
            g.invocations += 1;
            g.items += r.items;
            g.measured_bits += r.bits;
            g.measured_rounds = g.measured_rounds.max(r.rounds);
            if is_exact_row(row) && exact_ok != Some(true) {
                g.verdict = Verdict::Mismatch;
            }
        }
    }
    for g in &mut groups {
        let Some(f) = &g.analytic else { continue };
        if g.items == 0 {
            continue;
        }
        let per_item = g.measured_bits as f64 / g.items as f64;
        let (lo, hi) = (f.total_lo(), f.total_hi());
        if hi > 0.0 {
            g.ratio = Some(per_item / ((lo + hi) / 2.0));
        }
        if g.verdict == Verdict::Informational && f.band.is_some() && lo <= per_item && per_item <= hi {
            g.verdict = Verdict::WithinBand;
        }
    }
    Ok(CostReport { entries: groups })
}
