use rand::RngCore;

use super::FpParams;
use crate::error::{Error, Result};
use crate::oracle::{PlainFloat, PlainSuperacc};
use crate::primitives::open;
use crate::ring::{reconstruct_arith, share_arith, to_signed, ArithShares, PartyId};
use crate::runtime::Party;

/// A batch of shared floats. All parts live in `Z_2^k`.
#[derive(Clone, Debug)]
pub struct FloatShared {
    pub b: ArithShares<u64>,
    /// `beta - 1` mantissa blocks of `w` bits, least significant first.
    pub v: Vec<ArithShares<u64>>,
    pub p: ArithShares<u64>,
}

impl FloatShared {
    pub fn len(&self) -> usize {
        self.b.len()
    }

    pub fn is_empty(&self) -> bool {
        self.b.is_empty()
    }

    /// Publicly known floats, e.g. one party's own inputs before sharing.
    pub fn constant(id: PartyId, xs: &[PlainFloat], params: &FpParams) -> Self {
        let parts = decompose(xs, params);
        let k = params.k;
        FloatShared {
            b: ArithShares::constant(id, k, &parts.0),
            v: parts.1.iter().map(|blk| ArithShares::constant(id, k, blk)).collect(),
            p: ArithShares::constant(id, k, &parts.2),
        }
    }
}

/// A batch of shared superaccumulators: `y[i]` holds block `i` of every instance.
#[derive(Clone, Debug)]
pub struct SuperaccShared {
    pub y: Vec<ArithShares<u64>>,
}

impl SuperaccShared {
    pub fn len(&self) -> usize {
        self.y.first().map_or(0, ArithShares::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn slice(&self, range: std::ops::Range<usize>) -> Self {
        SuperaccShared { y: self.y.iter().map(|b| b.slice(range.clone())).collect() }
    }
}

type Parts = (Vec<u64>, Vec<Vec<u64>>, Vec<u64>);

fn decompose(xs: &[PlainFloat], params: &FpParams) -> Parts {
    let blocks = params.beta as usize - 1;
    let mask = (1u64 << params.w) - 1;
    let b = xs.iter().map(|x| x.b as u64).collect();
    let v = (0..blocks)
        .map(|j| xs.iter().map(|x| (x.v >> (j as u32 * params.w)) & mask).collect())
        .collect();
    let p = xs.iter().map(|x| x.p).collect();
    (b, v, p)
}

fn check_format(xs: &[PlainFloat], params: &FpParams) -> Result<()> {
    for x in xs {
        if (x.e, x.m) != (params.e, params.m) || !x.is_finite() {
            return Err(Error::InvalidParameter(format!("input {x:?} does not match the parameters")));
        }
    }
    Ok(())
}

/// Secret-shares floats among the three parties.
pub fn share_floats<R: RngCore>(xs: &[PlainFloat], params: &FpParams, rng: &mut R) -> Result<[FloatShared; 3]> {
    check_format(xs, params)?;
    let (b, v, p) = decompose(xs, params);
    let k = params.k;
    let [b1, b2, b3] = share_arith(&b, k, rng);
    let mut vs: [Vec<ArithShares<u64>>; 3] = Default::default();
    for blk in &v {
        for (i, s) in share_arith(blk, k, rng).into_iter().enumerate() {
            vs[i].push(s);
        }
    }
    let [p1, p2, p3] = share_arith(&p, k, rng);
    let [v1, v2, v3] = vs;
    Ok([
        FloatShared { b: b1, v: v1, p: p1 },
        FloatShared { b: b2, v: v2, p: p2 },
        FloatShared { b: b3, v: v3, p: p3 },
    ])
}

fn assemble(b: &[u64], v: &[Vec<u64>], p: &[u64], params: &FpParams) -> Result<Vec<PlainFloat>> {
    (0..b.len())
        .map(|i| {
            let mant = v.iter().rev().fold(0u128, |acc, blk| (acc << params.w) | blk[i] as u128);
            if b[i] > 1 || mant >> params.m != 0 {
                return Err(Error::InvalidParameter("opened value is not a float".into()));
            }
            Ok(PlainFloat { b: b[i] == 1, v: mant as u64, p: p[i], e: params.e, m: params.m })
        })
        .collect()
}

pub fn reconstruct_floats(parts: [&FloatShared; 3], params: &FpParams) -> Result<Vec<PlainFloat>> {
    let b = reconstruct_arith([&parts[0].b, &parts[1].b, &parts[2].b])?;
    let v = (0..parts[0].v.len())
        .map(|j| reconstruct_arith([&parts[0].v[j], &parts[1].v[j], &parts[2].v[j]]))
        .collect::<Result<Vec<_>>>()?;
    let p = reconstruct_arith([&parts[0].p, &parts[1].p, &parts[2].p])?;
    assemble(&b, &v, &p, params)
}

/// Opens a batch of floats to every party.
pub fn open_floats(p: &mut Party, x: &FloatShared, params: &FpParams) -> Result<Vec<PlainFloat>> {
    let n = x.len();
    let mut parts = vec![&x.b];
    parts.extend(x.v.iter());
    parts.push(&x.p);
    let all = open(p, &ArithShares::concat(&parts)?, params.k)?;
    let rows: Vec<Vec<u64>> = all.chunks(n.max(1)).map(<[u64]>::to_vec).collect();
    let nv = x.v.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    assemble(&rows[0], &rows[1..=nv], &rows[nv + 1], params)
}

fn superacc_from_rows(rows: &[Vec<u64>], params: &FpParams) -> Vec<PlainSuperacc> {
    let n = rows.first().map_or(0, Vec::len);
    (0..n)
        .map(|i| PlainSuperacc {
            w: params.w,
            blocks: rows.iter().map(|r| to_signed(r[i] as u128, params.k) as i64).collect(),
        })
        .collect()
}

pub fn share_superaccs<R: RngCore>(
    accs: &[PlainSuperacc],
    params: &FpParams,
    rng: &mut R,
) -> Result<[SuperaccShared; 3]> {
    let mut ys: [Vec<ArithShares<u64>>; 3] = Default::default();
    for j in 0..params.alpha as usize {
        let col: Vec<u64> = accs
            .iter()
            .map(|a| {
                let b = *a.blocks.get(j).ok_or(Error::LengthMismatch(a.blocks.len(), params.alpha as usize))?;
                Ok(b as u64 & u64::MAX >> (64 - params.k))
            })
            .collect::<Result<_>>()?;
        for (i, s) in share_arith(&col, params.k, rng).into_iter().enumerate() {
            ys[i].push(s);
        }
    }
    Ok(ys.map(|y| SuperaccShared { y }))
}

pub fn reconstruct_superaccs(parts: [&SuperaccShared; 3], params: &FpParams) -> Result<Vec<PlainSuperacc>> {
    let rows = (0..parts[0].y.len())
        .map(|j| reconstruct_arith([&parts[0].y[j], &parts[1].y[j], &parts[2].y[j]]))
        .collect::<Result<Vec<_>>>()?;
    Ok(superacc_from_rows(&rows, params))
}

pub fn open_superaccs(p: &mut Party, acc: &SuperaccShared, params: &FpParams) -> Result<Vec<PlainSuperacc>> {
    let n = acc.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let parts: Vec<&ArithShares<u64>> = acc.y.iter().collect();
    let all = open(p, &ArithShares::concat(&parts)?, params.k)?;
    let rows: Vec<Vec<u64>> = all.chunks(n).map(<[u64]>::to_vec).collect();
    Ok(superacc_from_rows(&rows, params))
}

/// Cuts a concatenation of `parts` equal batches back apart.
pub(crate) fn split(x: &ArithShares<u64>, parts: usize) -> Vec<ArithShares<u64>> {
    let n = x.len() / parts.max(1);
    (0..parts).map(|i| x.slice(i * n..(i + 1) * n)).collect()
}

/// `x` repeated `times` times end to end.
pub(crate) fn tile<W: crate::ring::Word>(x: &ArithShares<W>, times: usize) -> ArithShares<W> {
    ArithShares::concat(&vec![x; times]).expect("same width")
}
