//! Float to superaccumulator: Shift, B2U and FL2SA.

use super::types::{split, tile, FloatShared, SuperaccShared};
use super::FpParams;
use crate::blocks::{all_or, bitdec, trunc, ALL_OR_MAX_BITS};
use crate::error::{Error, Result};
use crate::fp::params::ceil_log2;
use crate::primitives::{accumulate_product, b2a_rows, dot_from_terms, edabit, mult, open};
use crate::ring::{ArithShares, BitBatch};
use crate::runtime::{Party, Protocol};

fn concat(parts: &[ArithShares<u64>]) -> Result<ArithShares<u64>> {
    ArithShares::concat(&parts.iter().collect::<Vec<_>>())
}

/// `2^x` for shared `0 <= x < 2^bits`, as a product of per-bit factors.
fn pow2_of(p: &mut Party, x: &ArithShares<u64>, bits: u32, k: u32) -> Result<ArithShares<u64>> {
    let id = p.id();
    let rows = bitdec(p, x, bits)?;
    let refs: Vec<&BitBatch> = rows.iter().collect();
    let arith = b2a_rows::<u64>(p, &refs, k)?;
    let mut factors: Vec<ArithShares<u64>> = arith
        .iter()
        .enumerate()
        .map(|(j, a)| a.scale((1u64 << (1u32 << j)) - 1).add_scalar(id, 1))
        .collect();
    while factors.len() > 1 {
        let half = factors.len() / 2;
        let lhs = concat(&factors[..half])?;
        let rhs = concat(&factors[half..2 * half])?;
        let mut next = split(&mult(p, &lhs, &rhs)?, half);
        if factors.len() % 2 == 1 {
            next.push(factors.pop().unwrap());
        }
        factors = next;
    }
    Ok(factors.pop().expect("at least one factor"))
}

/// Multiplies the number in `v` (blocks below `2^w`) by `2^shift` for
/// shared `0 <= shift < w`, re-split into one more block.
pub fn shift(
    p: &mut Party,
    v: &[ArithShares<u64>],
    shift: &ArithShares<u64>,
    params: &FpParams,
) -> Result<Vec<ArithShares<u64>>> {
    if v.is_empty() || v.iter().any(|b| b.len() != shift.len()) {
        return Err(Error::InvalidParameter("Shift operand shape".into()));
    }
    let (w, k, nb) = (params.w, params.k, v.len());
    p.scope(Protocol::Shift, k, shift.len(), |p| {
        let s = pow2_of(p, shift, params.gamma, k)?;
        let u = mult(p, &concat(v)?, &tile(&s, nb))?;
        let hi = trunc(p, &u, k, w)?;
        let lo = u.sub(&hi.scale(1u64 << w))?;
        let (hi, lo) = (split(&hi, nb), split(&lo, nb));
        let mut out = Vec::with_capacity(nb + 1);
        out.push(lo[0].clone());
        for i in 1..nb {
            out.push(lo[i].add(&hi[i - 1])?);
        }
        out.push(hi[nb - 1].clone());
        Ok(out)
    })
}

/// Unit vector of length `len` with the one at position `a`, `1 <= a <= len`.
/// Out-of-range `a` gives an unspecified vector.
pub fn b2u(p: &mut Party, a: &ArithShares<u64>, len: usize, k: u32) -> Result<Vec<ArithShares<u64>>> {
    let q = ceil_log2(len as u32).max(1);
    if len == 0 || q as usize > ALL_OR_MAX_BITS || q > a.width() {
        return Err(Error::InvalidParameter(format!("B2U over {len} positions")));
    }
    let n = a.len();
    p.scope(Protocol::B2U, k, n, |p| {
        p.annotate(len as u32);
        let id = p.id();
        let r = edabit::<u64>(p, q, n, q)?;
        let c = open(p, &a.mod_switch(q)?.add_scalar(id, u64::MAX).add(&r.arith)?, q)?;
        // hit[j] is zero exactly where j equals the mask.
        let hit = all_or(p, &r.bits)?;
        let qmask = (1usize << q) - 1;
        let mut rows: Vec<BitBatch> = (0..len).map(|_| BitBatch::zeros(n)).collect();
        for (i, &ci) in c.iter().enumerate() {
            for (t, row) in rows.iter_mut().enumerate() {
                row.set_bit_raw(i, hit[(ci as usize).wrapping_sub(t) & qmask].bit_raw(i));
            }
        }
        let rows: Vec<BitBatch> = rows.iter().map(|r| r.not(id)).collect();
        let refs: Vec<&BitBatch> = rows.iter().collect();
        b2a_rows::<u64>(p, &refs, k)
    })
}

/// Converts a batch of floats into superaccumulators.
pub fn fl2sa(p: &mut Party, x: &FloatShared, params: &FpParams) -> Result<SuperaccShared> {
    let (alpha, beta) = (params.alpha as usize, params.beta as usize);
    let (w, k, n) = (params.w, params.k, x.len());
    if x.v.len() != beta - 1 {
        return Err(Error::LengthMismatch(x.v.len(), beta - 1));
    }
    p.scope(Protocol::FL2SA, k, n, |p| {
        let id = p.id();
        let zero = crate::blocks::eqz(p, &x.p, params.e)?;
        let nz = b2a_rows::<u64>(p, &[&zero.not(id)], k)?.swap_remove(0);
        let q = x.p.sub(&nz)?;
        let high = trunc(p, &q, params.e, params.gamma)?;
        let low = q.sub(&high.scale(w as u64))?;
        let mut v = x.v.clone();
        v[beta - 2] = v[beta - 2].add(&nz.scale(1u64 << params.implicit_bit()))?;
        let blocks = shift(p, &v, &low, params)?;
        let sign = x.b.scale(2).rsub_scalar(id, 1);
        let signed = split(&mult(p, &concat(&blocks)?, &tile(&sign, beta))?, beta);
        let d = b2u(p, &high.add_scalar(id, 1), alpha, k)?;
        let mut t = vec![0u64; alpha * n];
        for (i, acc) in t.chunks_mut(n.max(1)).enumerate().take(alpha) {
            for (j, sv) in signed.iter().enumerate().take(i + 1) {
                accumulate_product(id, acc, &d[i - j], sv);
            }
        }
        let y = dot_from_terms(p, k, t)?;
        Ok(SuperaccShared { y: split(&y, alpha) })
    })
}
