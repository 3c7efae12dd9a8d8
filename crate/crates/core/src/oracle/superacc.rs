//! Integer mirrors of the secure conversion and summation protocols.
//!
//! Every function here computes exactly what the opened output of its
//! secure counterpart is, including which carry gets dropped and which
//! remainder gets a sticky bit, so that outputs can be compared bit for bit.

use num_bigint::BigInt;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use super::codec::PlainFloat;
use crate::error::{Error, Result};
use crate::fp::FpParams;

/// Signed blocks, least significant first, in radix `2^w`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlainSuperacc {
    pub w: u32,
    pub blocks: Vec<i64>,
}

impl PlainSuperacc {
    pub fn zero(w: u32, alpha: usize) -> Self {
        PlainSuperacc { w, blocks: vec![0; alpha] }
    }

    /// The represented integer, in units of the smallest subnormal.
    pub fn value(&self) -> BigInt {
        self.blocks.iter().rev().fold(BigInt::zero(), |acc, &b| (acc << self.w) + b)
    }

    pub fn is_regularized(&self) -> bool {
        let bound = 1i64 << self.w;
        self.blocks.iter().all(|&b| -bound < b && b < bound)
    }
}

/// Multiplies the number held in `blocks` by `2^p` and re-splits it into
/// one more block of `w` bits each.
pub fn plain_shift(blocks: &[u64], p: u32, w: u32) -> Vec<u64> {
    let mask = (1u64 << w) - 1;
    let mut out = Vec::with_capacity(blocks.len() + 1);
    let mut carry = 0;
    for &v in blocks {
        let u = (v as u128) << p;
        out.push((u as u64 & mask) + carry);
        carry = (u >> w) as u64;
    }
    out.push(carry);
    out
}

pub fn plain_fl2sa(x: &PlainFloat, params: &FpParams) -> PlainSuperacc {
    let (w, beta) = (params.w, params.beta as usize);
    let nz = (x.p != 0) as u64;
    let q = x.p - nz;
    let (high, low) = ((q >> params.gamma) as usize, (q & (w as u64 - 1)) as u32);
    let mut v: Vec<u64> = (0..beta - 1).map(|j| (x.v >> (j as u32 * w)) & ((1u64 << w) - 1)).collect();
    v[beta - 2] += nz << params.implicit_bit();
    let shifted = plain_shift(&v, low, w);
    let mut acc = PlainSuperacc::zero(w, params.alpha as usize);
    for (j, s) in shifted.into_iter().enumerate() {
        let s = s as i64;
        acc.blocks[high + j] = if x.b { -s } else { s };
    }
    acc
}

/// One carry step with remainders in `[-2^{w-1}, 2^{w-1})`. Returns the
/// new blocks and the carry out of the top block, which the secure
/// protocol drops.
pub fn plain_regularize(sums: &[i128], w: u32) -> (Vec<i64>, i128) {
    let radix = 1i128 << w;
    let half = radix >> 1;
    let mut carry = 0i128;
    let mut out = Vec::with_capacity(sums.len());
    for &s in sums {
        let c = (s + half).div_euclid(radix);
        out.push((s - c * radix + carry) as i64);
        carry = c;
    }
    (out, carry)
}

/// Sums at most `2^{w-2}` accumulators and regularizes once.
pub fn plain_sasum(accs: &[PlainSuperacc]) -> Result<(PlainSuperacc, i128)> {
    let first = accs.first().ok_or_else(|| Error::InvalidParameter("no accumulators".into()))?;
    let (w, alpha) = (first.w, first.blocks.len());
    if w < 2 || accs.len() > 1usize << (w - 2) {
        return Err(Error::InvalidParameter(format!("{} accumulators exceed 2^(w-2)", accs.len())));
    }
    let mut sums = vec![0i128; alpha];
    for a in accs {
        if a.w != w || a.blocks.len() != alpha {
            return Err(Error::LengthMismatch(a.blocks.len(), alpha));
        }
        for (s, &b) in sums.iter_mut().zip(&a.blocks) {
            *s += b as i128;
        }
    }
    let (blocks, carry) = plain_regularize(&sums, w);
    Ok((PlainSuperacc { w, blocks }, carry))
}

/// Left-filled tree of [`plain_sasum`] calls of arity `2^{w-2}`. Fails if
/// any step would drop a carry.
pub fn plain_layered_sum(mut accs: Vec<PlainSuperacc>) -> Result<PlainSuperacc> {
    let w = accs.first().ok_or_else(|| Error::InvalidParameter("no accumulators".into()))?.w;
    let cap = 1usize << (w - 2);
    loop {
        let mut next = Vec::with_capacity(accs.len().div_ceil(cap));
        for chunk in accs.chunks(cap) {
            let (acc, carry) = plain_sasum(chunk)?;
            if carry != 0 {
                return Err(Error::InvalidParameter("sum exceeds the accumulator range".into()));
            }
            next.push(acc);
        }
        if next.len() == 1 {
            return Ok(next.pop().unwrap());
        }
        accs = next;
    }
}

/// Reads `2 * sum(blocks) + tau` as a signed number and keeps the `m` bits
/// after its leading one. `p` of the result is relative to the window.
pub fn plain_normalize(blocks: &[i64], tau: i64, params: &FpParams) -> PlainFloat {
    let (w, m) = (params.w, params.m);
    let x = blocks.iter().rev().fold(0i128, |acc, &b| (acc << w) + b as i128) * 2 + tau as i128;
    let a = x.unsigned_abs();
    let lead = 127 - a.leading_zeros() as i64;
    let mask = (1u128 << m) - 1;
    let (v, p) = if lead >= m as i64 + 2 {
        ((a >> (lead as u32 - m)) & mask, lead as u64 - m as u64)
    } else {
        ((a >> 1) & mask, ((a >> (m + 1)) & 1) as u64)
    };
    PlainFloat { b: x < 0, v: v as u64, p, e: params.e, m }
}

pub fn plain_sa2fl(acc: &PlainSuperacc, params: &FpParams) -> PlainFloat {
    let beta = params.beta as usize;
    let top = acc.blocks.iter().rposition(|&b| b != 0).map_or(0, |i| i + 1);
    let j = top.max(beta);
    let window = &acc.blocks[j - beta..j];
    let tau = acc.blocks[..j - beta].iter().rev().find(|&&b| b != 0).map_or(0, |b| b.signum());
    let mut x = plain_normalize(window, tau, params);
    x.p += ((j - beta) as u64) * params.w as u64;
    x
}

/// Full plaintext summation: convert, sum in layers, convert back.
pub fn plain_pipeline(xs: &[PlainFloat], params: &FpParams) -> Result<PlainFloat> {
    let accs = xs.iter().map(|x| plain_fl2sa(x, params)).collect();
    Ok(plain_sa2fl(&plain_layered_sum(accs)?, params))
}
