//! Superaccumulator to float: block selection and normalization.

use super::types::{split, tile, FloatShared, SuperaccShared};
use super::FpParams;
use crate::blocks::{convert, bitdec, eqz, msb, prefix_and, prefix_or};
use crate::error::{Error, Result};
use crate::primitives::{and, and_dot, b2a_rows, dot_product, mult};
use crate::ring::{ArithShares, BitBatch};
use crate::runtime::{Party, Protocol};

fn concat<W: crate::ring::Word>(parts: &[ArithShares<W>]) -> Result<ArithShares<W>> {
    ArithShares::concat(&parts.iter().collect::<Vec<_>>())
}

/// Normalizes the signed number `2 * sum_t 2^{w t} blocks[t] + tau`. The
/// mantissa keeps the `m` bits after the leading one; the exponent is in
/// the frame where a value below `2^{m+1}` (in units of `blocks[0]`) is
/// read without an implicit one.
fn normalize_sticky(
    p: &mut Party,
    blocks: &[ArithShares<u64>],
    tau: Option<&ArithShares<u128>>,
    params: &FpParams,
) -> Result<FloatShared> {
    let (w, k, m) = (params.w, params.k, params.m as usize);
    let l = params.norm_width();
    let n = blocks[0].len();
    p.scope(Protocol::Normalize, l, n, |p| {
        let id = p.id();
        let wide = split128(&convert::<u64, u128>(p, &concat(blocks)?, l)?, blocks.len());
        let mut x = tau.cloned().unwrap_or_else(|| ArithShares::zeros(l, n));
        for (t, b) in wide.iter().enumerate() {
            x = x.add(&b.scale(1u128 << (w as usize * t + 1)))?;
        }
        let neg = msb(p, &x)?;
        let sgn = b2a_rows::<u128>(p, &[&neg], l)?.swap_remove(0);
        let a = mult(p, &x, &sgn.scale(2).rsub_scalar(id, 1))?;
        let c = bitdec(p, &a, l)?;
        let l = l as usize;
        // h[i] = OR of bits l-2-i ..= l-2, so h[i] covers leading positions >= l-2-i.
        let top: Vec<BitBatch> = (m + 2..=l - 2).rev().map(|i| c[i].clone()).collect();
        let h = prefix_or(p, &top)?;
        let lead = |pos: usize| -> &BitBatch { &h[l - 2 - pos] };
        let mut marks: Vec<(usize, BitBatch)> = Vec::with_capacity(l - m - 2);
        for pos in m + 2..=l - 2 {
            let mark = if pos == l - 2 { lead(pos).clone() } else { lead(pos).xor(lead(pos + 1)) };
            marks.push((pos, mark));
        }
        let small = lead(m + 2).not(id);
        // Row j < m is mantissa bit j; row m is the implicit-one test of the small case.
        let zero = BitBatch::zeros(n);
        let mut terms: Vec<(BitBatch, BitBatch)> = Vec::with_capacity(marks.len() + 1);
        for (pos, mark) in &marks {
            let sel: Vec<&BitBatch> = (0..=m).map(|j| if j < m { &c[pos - m + j] } else { &zero }).collect();
            terms.push((BitBatch::concat(&vec![mark; m + 1]), BitBatch::concat(&sel)));
        }
        let sel: Vec<&BitBatch> = (0..=m).map(|j| &c[1 + j]).collect();
        terms.push((BitBatch::concat(&vec![&small; m + 1]), BitBatch::concat(&sel)));
        let refs: Vec<(&BitBatch, &BitBatch)> = terms.iter().map(|(a, b)| (a, b)).collect();
        let bits = and_dot(p, &refs)?.split_even(m + 1);
        let mut rows: Vec<&BitBatch> = bits.iter().collect();
        rows.extend(marks.iter().map(|(_, mk)| mk));
        let ar = b2a_rows::<u64>(p, &rows, k)?;
        let nblocks = params.beta as usize - 1;
        let mut v = vec![ArithShares::<u64>::zeros(k, n); nblocks];
        for (j, bit) in ar[..m].iter().enumerate() {
            let blk = j / w as usize;
            v[blk] = v[blk].add(&bit.scale(1u64 << (j % w as usize)))?;
        }
        let mut exp = ar[m].clone();
        for ((pos, _), mk) in marks.iter().zip(&ar[m + 1..]) {
            exp = exp.add(&mk.scale((pos - m) as u64))?;
        }
        Ok(FloatShared { b: sgn.recast::<u64>(k)?, v, p: exp })
    })
}

fn split128(x: &ArithShares<u128>, parts: usize) -> Vec<ArithShares<u128>> {
    let n = x.len() / parts;
    (0..parts).map(|i| x.slice(i * n..(i + 1) * n)).collect()
}

/// Normalizes `beta` signed blocks into a float whose exponent is
/// relative to the lowest block.
pub fn normalize(p: &mut Party, blocks: &[ArithShares<u64>], params: &FpParams) -> Result<FloatShared> {
    if blocks.len() != params.beta as usize {
        return Err(Error::LengthMismatch(blocks.len(), params.beta as usize));
    }
    normalize_sticky(p, blocks, None, params)
}

/// Converts a batch of regularized superaccumulators into floats.
pub fn sa2fl(p: &mut Party, acc: &SuperaccShared, params: &FpParams) -> Result<FloatShared> {
    let (alpha, beta) = (params.alpha as usize, params.beta as usize);
    let (k, n) = (params.k, acc.len());
    if acc.y.len() != alpha {
        return Err(Error::LengthMismatch(acc.y.len(), alpha));
    }
    let below = alpha - beta;
    p.scope(Protocol::SA2FL, k, n, |p| {
        let id = p.id();
        let zero = eqz(p, &concat(&acc.y)?, k)?.split_even(alpha);
        let neg = msb(p, &concat(&acc.y[..below])?)?.split_even(below);
        // above[i] = all blocks i+beta+1 ..= alpha are zero (1-based), top first.
        let top: Vec<BitBatch> = (beta..alpha).rev().map(|i| zero[i].clone()).collect();
        let above = prefix_and(p, &top)?;
        let d = |i: usize| -> &BitBatch { &above[alpha - 1 - i] };
        // Blocks below the window that are nonzero.
        let outside: Vec<BitBatch> = (0..below).map(|i| d(i + beta).not(id)).collect();
        let nonzero: Vec<BitBatch> = (0..below).map(|i| zero[i].not(id)).collect();
        let live = and(p, &BitBatch::concat(&outside.iter().collect::<Vec<_>>()),
            &BitBatch::concat(&nonzero.iter().collect::<Vec<_>>()))?
        .split_even(below);
        let live_top: Vec<BitBatch> = live.into_iter().rev().collect();
        let seen = prefix_or(p, &live_top)?;
        let seen_at = |i: usize| -> &BitBatch { &seen[below - 1 - i] };
        let marks: Vec<BitBatch> = (0..below)
            .map(|i| if i == below - 1 { seen_at(i).clone() } else { seen_at(i).xor(seen_at(i + 1)) })
            .collect();
        let pairs: Vec<(&BitBatch, &BitBatch)> = marks.iter().zip(&neg).collect();
        let rem_neg = and_dot(p, &pairs)?;
        let mut rows: Vec<&BitBatch> = (beta..alpha).map(d).collect();
        let da = b2a_rows::<u64>(p, &rows, k)?;
        rows = vec![seen_at(0), &rem_neg];
        let l = params.norm_width();
        let st = b2a_rows::<u128>(p, &rows, l)?;
        let tau = st[0].sub(&st[1].scale(2))?;
        // u[j]: the window ends at block j + beta (0-based j).
        let dj = |i: usize| &da[i - beta];
        let mut u = Vec::with_capacity(below + 1);
        u.push(dj(beta).clone());
        for j in 1..below {
            u.push(dj(beta + j).sub(dj(beta + j - 1))?);
        }
        u.push(dj(alpha - 1).rsub_scalar(id, 1));
        let mut terms = Vec::with_capacity(below + 1);
        for (j, uj) in u.iter().enumerate() {
            terms.push((tile(uj, beta), concat(&acc.y[j..j + beta])?));
        }
        let refs: Vec<_> = terms.iter().map(|(a, b)| (a, b)).collect();
        let window = split(&dot_product(p, &refs)?, beta);
        let mut out = normalize_sticky(p, &window, Some(&tau), params)?;
        for (j, uj) in u.iter().enumerate().skip(1) {
            out.p = out.p.add(&uj.scale(j as u64 * params.w as u64))?;
        }
        Ok(out)
    })
}
