//! Interactive primitives on replicated shares.
//!
//! All functions operate on batches: `n` independent instances are
//! processed with one message per party per round.

use crate::circuit;
use crate::error::{Error, Result};
use crate::ring::{words_for, ArithShares, BitBatch, PackedBits, PartyId, Word};
use crate::runtime::{Party, Protocol};

#[inline]
fn cross<W: Word>(p2: bool, x0: W, x1: W, y0: W, y1: W) -> W {
    let diag = if p2 { x0.wrapping_mul(y0) } else { x1.wrapping_mul(y1) };
    diag.wrapping_add(x0.wrapping_mul(y1))
        .wrapping_add(x1.wrapping_mul(y0))
}

#[inline]
fn cross_bits(p2: bool, x0: u64, x1: u64, y0: u64, y1: u64) -> u64 {
    let diag = if p2 { x0 & y0 } else { x1 & y1 };
    diag ^ (x0 & y1) ^ (x1 & y0)
}

fn place<T>(id: PartyId, own: Vec<T>, got: Vec<T>) -> [Vec<T>; 2] {
    // The local term becomes sub-share i+1, the received one sub-share i-1.
    if id.slot_of(id.next().get()) == Some(0) {
        [own, got]
    } else {
        [got, own]
    }
}

/// Masks each party's local terms with a zero sharing and resends them so
/// that the result is a replicated sharing again.
fn reshare<W: Word>(p: &mut Party, width: u32, mut t: Vec<W>) -> Result<ArithShares<W>> {
    let id = p.id();
    let m = W::mask(width);
    let n = t.len();
    {
        let (g0, g1) = p.prg_pair();
        let (mut a, mut b): (Vec<W>, Vec<W>) = (g0.elements(width, n), g1.elements(width, n));
        if id == PartyId::P2 {
            std::mem::swap(&mut a, &mut b);
        }
        for (v, (a, b)) in t.iter_mut().zip(a.into_iter().zip(b)) {
            *v = v.wrapping_add(a.wrapping_sub(b)) & m;
        }
    }
    p.send(id.prev(), width, t.clone())?;
    let got = p.recv::<W>(id.next(), width, n)?;
    Ok(ArithShares::from_raw(width, place(id, t, got)))
}

fn reshare_bits(p: &mut Party, len: usize, mut t: Vec<u64>) -> Result<BitBatch> {
    let id = p.id();
    {
        let (g0, g1) = p.prg_pair();
        let a = g0.bit_words(len);
        let b = g1.bit_words(len);
        for (v, (a, b)) in t.iter_mut().zip(a.into_iter().zip(b)) {
            *v ^= a ^ b;
        }
    }
    p.send_bits(id.prev(), len, t.clone())?;
    let got = p.recv_bits(id.next(), len)?;
    Ok(BitBatch::from_raw(len, place(id, t, got)))
}

fn check_pair<W: Word>(x: &ArithShares<W>, y: &ArithShares<W>) -> Result<()> {
    if x.width() != y.width() {
        return Err(Error::WidthMismatch(x.width(), y.width()));
    }
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    Ok(())
}

/// Element-wise product. `3k` bits per element, one round.
pub fn mult<W: Word>(p: &mut Party, x: &ArithShares<W>, y: &ArithShares<W>) -> Result<ArithShares<W>> {
    check_pair(x, y)?;
    let width = x.width();
    p.scope(Protocol::Mult, width, x.len(), |p| {
        let p2 = p.id() == PartyId::P2;
        let t = (0..x.len())
            .map(|i| cross(p2, x.sub[0][i], x.sub[1][i], y.sub[0][i], y.sub[1][i]))
            .collect();
        reshare(p, width, t)
    })
}

/// Batched inner products: output `i` is `sum_j xs_j[i] * ys_j[i]`. Costs
/// the same as a single multiplication per output.
pub fn dot_product<W: Word>(
    p: &mut Party,
    terms: &[(&ArithShares<W>, &ArithShares<W>)],
) -> Result<ArithShares<W>> {
    let Some((x0, _)) = terms.first() else {
        return Err(Error::InvalidParameter("empty dot product".into()));
    };
    let (width, n) = (x0.width(), x0.len());
    for (x, y) in terms {
        check_pair(x, y)?;
        check_pair(x, x0)?;
    }
    p.scope(Protocol::Dot, width, n, |p| {
        let p2 = p.id() == PartyId::P2;
        let mut t = vec![W::ZERO; n];
        for (x, y) in terms {
            for (i, acc) in t.iter_mut().enumerate() {
                *acc = acc.wrapping_add(cross(p2, x.sub[0][i], x.sub[1][i], y.sub[0][i], y.sub[1][i]));
            }
        }
        reshare(p, width, t)
    })
}

/// Adds the local share of `x[i] * y[i]` to `acc[i]`. Together with
/// [`dot_from_terms`] this is a dot product whose operands need not be
/// materialized side by side.
pub(crate) fn accumulate_product<W: Word>(id: PartyId, acc: &mut [W], x: &ArithShares<W>, y: &ArithShares<W>) {
    let p2 = id == PartyId::P2;
    let (x0, x1, y0, y1) = (&x.sub[0], &x.sub[1], &y.sub[0], &y.sub[1]);
    for (i, a) in acc.iter_mut().enumerate() {
        *a = a.wrapping_add(cross(p2, x0[i], x1[i], y0[i], y1[i]));
    }
}

/// Reshares local terms built with [`accumulate_product`].
pub(crate) fn dot_from_terms<W: Word>(p: &mut Party, width: u32, t: Vec<W>) -> Result<ArithShares<W>> {
    p.scope(Protocol::Dot, width, t.len(), |p| reshare(p, width, t))
}

/// Batched product of bits, over `Z_2`.
pub fn and(p: &mut Party, x: &BitBatch, y: &BitBatch) -> Result<BitBatch> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    p.scope(Protocol::And, 1, x.len(), |p| {
        let p2 = p.id() == PartyId::P2;
        let t = (0..words_for(x.len()))
            .map(|w| cross_bits(p2, x.sub[0][w], x.sub[1][w], y.sub[0][w], y.sub[1][w]))
            .collect();
        reshare_bits(p, x.len(), t)
    })
}

/// Several independent ANDs evaluated in one round.
pub fn and_many(p: &mut Party, pairs: &[(&BitBatch, &BitBatch)]) -> Result<Vec<BitBatch>> {
    if pairs.is_empty() {
        return Ok(Vec::new());
    }
    if pairs.len() == 1 {
        return Ok(vec![and(p, pairs[0].0, pairs[0].1)?]);
    }
    let xs: Vec<&BitBatch> = pairs.iter().map(|(x, _)| *x).collect();
    let ys: Vec<&BitBatch> = pairs.iter().map(|(_, y)| *y).collect();
    let z = and(p, &BitBatch::concat(&xs), &BitBatch::concat(&ys))?;
    let mut off = 0;
    Ok(xs
        .iter()
        .map(|x| {
            let s = z.slice(off, x.len());
            off += x.len();
            s
        })
        .collect())
}

/// Batched inner products over `Z_2`: output bit `i` is the XOR over `j`
/// of `xs_j[i] & ys_j[i]`, for the price of one AND per output.
pub fn and_dot(p: &mut Party, terms: &[(&BitBatch, &BitBatch)]) -> Result<BitBatch> {
    let Some((x0, _)) = terms.first() else {
        return Err(Error::InvalidParameter("empty dot product".into()));
    };
    let n = x0.len();
    if let Some((x, _)) = terms.iter().find(|(x, y)| x.len() != n || y.len() != n) {
        return Err(Error::LengthMismatch(x.len(), n));
    }
    p.scope(Protocol::Dot, 1, n, |p| {
        let p2 = p.id() == PartyId::P2;
        let mut t = vec![0u64; words_for(n)];
        for (x, y) in terms {
            for (w, acc) in t.iter_mut().enumerate() {
                *acc ^= cross_bits(p2, x.sub[0][w], x.sub[1][w], y.sub[0][w], y.sub[1][w]);
            }
        }
        reshare_bits(p, n, t)
    })
}

/// Reveals `x mod 2^l` to every party. `3l` bits per element, one round.
pub fn open<W: Word>(p: &mut Party, x: &ArithShares<W>, l: u32) -> Result<Vec<W>> {
    if l == 0 || l > x.width() {
        return Err(Error::WidthMismatch(l, x.width()));
    }
    let m = W::mask(l);
    let n = x.len();
    let red = |v: &[W]| v.iter().map(|&a| a & m).collect::<Vec<W>>();
    p.scope(Protocol::Open, l, n, |p| {
        let missing = match p.id() {
            PartyId::P1 => {
                p.send(PartyId::P2, l, red(&x.sub[0]))?;
                p.send(PartyId::P3, l, red(&x.sub[1]))?;
                p.recv::<W>(PartyId::P2, l, n)?
            }
            PartyId::P2 => {
                p.send(PartyId::P1, l, red(&x.sub[0]))?;
                p.recv::<W>(PartyId::P1, l, n)?
            }
            _ => p.recv::<W>(PartyId::P1, l, n)?,
        };
        Ok((0..n)
            .map(|i| x.sub[0][i].wrapping_add(x.sub[1][i]).wrapping_add(missing[i]) & m)
            .collect())
    })
}

/// Reveals shared bits to every party.
pub fn open_bits(p: &mut Party, x: &BitBatch) -> Result<PackedBits> {
    let n = x.len();
    p.scope(Protocol::Open, 1, n, |p| {
        let missing = match p.id() {
            PartyId::P1 => {
                p.send_bits(PartyId::P2, n, x.sub[0].clone())?;
                p.send_bits(PartyId::P3, n, x.sub[1].clone())?;
                p.recv_bits(PartyId::P2, n)?
            }
            PartyId::P2 => {
                p.send_bits(PartyId::P1, n, x.sub[0].clone())?;
                p.recv_bits(PartyId::P1, n)?
            }
            _ => p.recv_bits(PartyId::P1, n)?,
        };
        let words = (0..words_for(n))
            .map(|w| x.sub[0][w] ^ x.sub[1][w] ^ missing[w])
            .collect();
        Ok(PackedBits::from_words(n, words))
    })
}

#[inline]
fn bit_of<W: Word>(words: &[u64], i: usize) -> W {
    W::from_u64((words[i / 64] >> (i % 64)) & 1)
}

/// Converts bits shared over `Z_2` into shares of the same values over
/// `Z_{2^k}`. `3k` bits per element in two rounds.
///
/// With `a, b, c` the three bit sub-shares lifted to the ring,
/// `a ^ b = a + b - 2ab` is formed first (P3 knows `ab` and reshares it),
/// then `(a ^ b) ^ c` with the product split between P1 and P2.
pub fn b2a<W: Word>(p: &mut Party, x: &BitBatch, k: u32) -> Result<ArithShares<W>> {
    crate::ring::check_width::<W>(k)?;
    let n = x.len();
    let m = W::mask(k);
    let two = W::from_u64(2);
    p.scope(Protocol::B2A, k, n, |p| {
        let bits = |s: usize, i: usize| bit_of::<W>(&x.sub[s], i);
        match p.id() {
            PartyId::P1 => {
                // holds x2, x3
                let s2: Vec<W> = p.prg(2)?.elements(k, n);
                let g3: Vec<W> = p.prg(3)?.elements(k, n);
                let big_s2: Vec<W> = (0..n)
                    .map(|i| bits(0, i).wrapping_sub(two.wrapping_mul(s2[i])) & m)
                    .collect();
                let u2: Vec<W> = (0..n)
                    .map(|i| big_s2[i].wrapping_mul(bits(1, i)).wrapping_sub(g3[i]) & m)
                    .collect();
                p.send(PartyId::P3, k, u2.clone())?;
                let up = p.recv::<W>(PartyId::P2, k, n)?;
                let out2 = (0..n)
                    .map(|i| big_s2[i].wrapping_sub(two.wrapping_mul(u2[i])) & m)
                    .collect();
                let out3 = (0..n)
                    .map(|i| {
                        let u3 = up[i].wrapping_add(g3[i]);
                        bits(1, i).wrapping_sub(two.wrapping_mul(u3)) & m
                    })
                    .collect();
                Ok(ArithShares::from_raw(k, [out2, out3]))
            }
            PartyId::P2 => {
                // holds x1, x3
                let u1: Vec<W> = p.prg(1)?.elements(k, n);
                let g3: Vec<W> = p.prg(3)?.elements(k, n);
                let s1 = p.recv::<W>(PartyId::P3, k, n)?;
                let big_s1: Vec<W> = (0..n)
                    .map(|i| bits(0, i).wrapping_sub(two.wrapping_mul(s1[i])) & m)
                    .collect();
                let up: Vec<W> = (0..n)
                    .map(|i| big_s1[i].wrapping_mul(bits(1, i)).wrapping_sub(u1[i]) & m)
                    .collect();
                p.send(PartyId::P1, k, up.clone())?;
                let out1 = (0..n)
                    .map(|i| big_s1[i].wrapping_sub(two.wrapping_mul(u1[i])) & m)
                    .collect();
                let out3 = (0..n)
                    .map(|i| {
                        let u3 = up[i].wrapping_add(g3[i]);
                        bits(1, i).wrapping_sub(two.wrapping_mul(u3)) & m
                    })
                    .collect();
                Ok(ArithShares::from_raw(k, [out1, out3]))
            }
            _ => {
                // holds x1, x2
                let s2: Vec<W> = p.prg(2)?.elements(k, n);
                let s1: Vec<W> = (0..n)
                    .map(|i| bits(0, i).wrapping_mul(bits(1, i)).wrapping_sub(s2[i]) & m)
                    .collect();
                p.send(PartyId::P2, k, s1.clone())?;
                let u1: Vec<W> = p.prg(1)?.elements(k, n);
                let u2 = p.recv::<W>(PartyId::P1, k, n)?;
                let out1 = (0..n)
                    .map(|i| {
                        let big = bits(0, i).wrapping_sub(two.wrapping_mul(s1[i]));
                        big.wrapping_sub(two.wrapping_mul(u1[i])) & m
                    })
                    .collect();
                let out2 = (0..n)
                    .map(|i| {
                        let big = bits(1, i).wrapping_sub(two.wrapping_mul(s2[i]));
                        big.wrapping_sub(two.wrapping_mul(u2[i])) & m
                    })
                    .collect();
                Ok(ArithShares::from_raw(k, [out1, out2]))
            }
        }
    })
}

/// B2A of several bit rows in one invocation; returns one batch per row.
pub fn b2a_rows<W: Word>(p: &mut Party, rows: &[&BitBatch], k: u32) -> Result<Vec<ArithShares<W>>> {
    let all = b2a::<W>(p, &BitBatch::concat(rows), k)?;
    let mut off = 0;
    Ok(rows
        .iter()
        .map(|r| {
            let s = all.slice(off..off + r.len());
            off += r.len();
            s
        })
        .collect())
}

/// Uniform random bits shared in `Z_2`, drawn without interaction.
pub fn random_bits(p: &mut Party, n: usize) -> BitBatch {
    let (g0, g1) = p.prg_pair();
    let a = g0.bit_words(n);
    let b = g1.bit_words(n);
    BitBatch::from_raw(n, [a, b])
}

/// `n` shared uniform bits over `Z_{2^k}`.
pub fn rand_bit<W: Word>(p: &mut Party, n: usize, k: u32) -> Result<ArithShares<W>> {
    p.scope(Protocol::RandBit, k, n, |p| {
        let bits = random_bits(p, n);
        b2a(p, &bits, k)
    })
}

/// Random `r < 2^n` shared over `Z_{2^k}` together with its bits over `Z_2`.
#[derive(Clone, Debug)]
pub struct EdaBits<W: Word> {
    pub arith: ArithShares<W>,
    /// Bit rows, least significant first; row `i` holds bit `i` of every
    /// instance.
    pub bits: Vec<BitBatch>,
}

impl<W: Word> EdaBits<W> {
    pub fn len(&self) -> usize {
        self.arith.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arith.is_empty()
    }

    pub fn nbits(&self) -> u32 {
        self.bits.len() as u32
    }
}

/// One batch of edaBits of `count` instances with `n` bits each.
pub fn edabit<W: Word>(p: &mut Party, n: u32, count: usize, k: u32) -> Result<EdaBits<W>> {
    Ok(edabits(p, &[(n, count)], k)?.pop().expect("one batch"))
}

/// Several edaBit batches of different bit lengths generated together.
///
/// Each pair of parties jointly draws `r_j` from `G_j`, which is sub-share
/// `j` both arithmetically and bitwise. The three values are added with a
/// carry-save layer and a parallel-prefix adder over `Z_2`; carries out of
/// bit `n` are removed from the arithmetic share with B2A.
pub fn edabits<W: Word>(p: &mut Party, specs: &[(u32, usize)], k: u32) -> Result<Vec<EdaBits<W>>> {
    crate::ring::check_width::<W>(k)?;
    for &(n, _) in specs {
        if n == 0 || n > k {
            return Err(Error::InvalidParameter(format!("edaBit of {n} bits over Z_2^{k}")));
        }
    }
    let total: usize = specs.iter().map(|s| s.1).sum();
    p.scope(Protocol::EdaBit, k, total, |p| {
        if specs.iter().all(|s| s.0 == specs[0].0) {
            p.annotate(specs[0].0);
        }
        let id = p.id();
        let held = id.held();
        // Sub-shares: arithmetic values and their transposed bit rows.
        let mut arith = Vec::with_capacity(specs.len());
        let mut s_rows: Vec<Vec<BitBatch>> = Vec::with_capacity(specs.len());
        let mut ab_rows = Vec::with_capacity(specs.len());
        let mut ac_rows = Vec::with_capacity(specs.len());
        for &(n, count) in specs {
            let (g0, g1) = p.prg_pair();
            let v0: Vec<W> = g0.elements(n, count);
            let v1: Vec<W> = g1.elements(n, count);
            let t0 = crate::ring::transpose_public(&v0, n);
            let t1 = crate::ring::transpose_public(&v1, n);
            let rows: Vec<BitBatch> = t0
                .into_iter()
                .zip(t1)
                .map(|(a, b)| BitBatch::from_raw(count, [a.words().to_vec(), b.words().to_vec()]))
                .collect();
            // a = r1, b = r2, c = r3 each live in one sub-share. a^b keeps
            // sub-shares 1 and 2 of S, a^c keeps 1 and 3.
            let keep = |r: &BitBatch, drop: u8| {
                let mut out = r.clone();
                if let Some(s) = id.slot_of(drop) {
                    out.sub[s].iter_mut().for_each(|w| *w = 0);
                }
                out
            };
            ab_rows.push(rows.iter().map(|r| keep(r, 3)).collect::<Vec<_>>());
            ac_rows.push(rows.iter().map(|r| keep(r, 2)).collect::<Vec<_>>());
            s_rows.push(rows);
            arith.push(ArithShares::from_raw(k, [v0, v1]));
            debug_assert!(held.len() == 2);
        }
        // Majority bits T = a ^ ((a^b) & (a^c)); only rows that matter.
        let need_t: Vec<usize> = specs
            .iter()
            .map(|&(n, _)| if n < k { n as usize } else { n as usize - 1 })
            .collect();
        let mut pairs = Vec::new();
        for (g, &nt) in need_t.iter().enumerate() {
            for i in 0..nt {
                pairs.push((&ab_rows[g][i], &ac_rows[g][i]));
            }
        }
        let prods = and_many(p, &pairs)?;
        let mut prods = prods.into_iter();
        let mut t_rows: Vec<Vec<BitBatch>> = Vec::with_capacity(specs.len());
        for (g, &nt) in need_t.iter().enumerate() {
            let rows = (0..nt)
                .map(|i| {
                    let mut a = ab_rows[g][i].clone();
                    if let Some(s) = id.slot_of(2) {
                        a.sub[s].iter_mut().for_each(|w| *w = 0);
                    }
                    a.xor(&prods.next().expect("product"))
                })
                .collect();
            t_rows.push(rows);
        }
        // Add S + 2T mod 2^n with a prefix adder.
        let mut g_pairs = Vec::new();
        for (g, &(n, _)) in specs.iter().enumerate() {
            for i in 1..n as usize {
                g_pairs.push((&s_rows[g][i], &t_rows[g][i - 1]));
            }
        }
        let gen = and_many(p, &g_pairs)?;
        let mut gen = gen.into_iter();
        let mut lanes = Vec::with_capacity(specs.len());
        let mut props = Vec::with_capacity(specs.len());
        for (g, &(n, count)) in specs.iter().enumerate() {
            let n = n as usize;
            let mut gs = vec![BitBatch::zeros(count)];
            let mut ps = vec![s_rows[g][0].clone()];
            for i in 1..n {
                gs.push(gen.next().expect("generate"));
                ps.push(s_rows[g][i].xor(&t_rows[g][i - 1]));
            }
            // Carry-out is needed only when bits above n must be removed.
            let positions = if n < k as usize { n } else { n - 1 };
            gs.truncate(positions.max(1));
            let pp = ps[..positions.max(1)].to_vec();
            lanes.push((gs, pp));
            props.push(ps);
        }
        let carries = circuit::prefix_gp(p, lanes)?;
        let mut out = Vec::with_capacity(specs.len());
        let mut corr_rows: Vec<BitBatch> = Vec::new();
        for (g, &(n, _)) in specs.iter().enumerate() {
            let n = n as usize;
            let mut bits = Vec::with_capacity(n);
            bits.push(props[g][0].clone());
            for i in 1..n {
                bits.push(props[g][i].xor(&carries[g][i - 1]));
            }
            if n < k as usize {
                corr_rows.push(carries[g][n - 1].clone());
                corr_rows.push(t_rows[g][n - 1].clone());
            }
            out.push(bits);
        }
        let refs: Vec<&BitBatch> = corr_rows.iter().collect();
        let corr = if refs.is_empty() {
            Vec::new()
        } else {
            b2a_rows::<W>(p, &refs, k)?
        };
        let mut corr = corr.into_iter();
        let mut res = Vec::with_capacity(specs.len());
        for ((a, bits), &(n, _)) in arith.into_iter().zip(out).zip(specs) {
            let arith = if n < k {
                let c = corr.next().expect("carry");
                let t = corr.next().expect("top majority");
                a.sub(&c.add(&t)?.scale(W::pow2(n)))?
            } else {
                a
            };
            res.push(EdaBits { arith, bits });
        }
        Ok(res)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::{reconstruct_arith, reconstruct_bits, share_arith, share_bits, untranspose_public};
    use crate::runtime::{run, RunConfig};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn open3<W: Word>(o: &[ArithShares<W>; 3]) -> Vec<W> {
        reconstruct_arith([&o[0], &o[1], &o[2]]).unwrap()
    }

    fn bits3(o: &[BitBatch; 3]) -> PackedBits {
        reconstruct_bits([&o[0], &o[1], &o[2]]).unwrap()
    }

    #[test]
    fn mult_examples_and_cost() {
        for k in [16u32, 32, 60] {
            let mut r = ChaCha8Rng::seed_from_u64(k as u64);
            let m = u64::mask(k);
            let mut xs: Vec<u64> = (0..10_000).map(|_| r.gen::<u64>() & m).collect();
            let mut ys: Vec<u64> = (0..10_000).map(|_| r.gen::<u64>() & m).collect();
            xs[0] = 0;
            (xs[1], ys[1]) = (3, 5);
            let x = share_arith(&xs, k, &mut r);
            let y = share_arith(&ys, k, &mut r);
            let out = run(&RunConfig::seeded(1), |p| {
                let i = p.id().index();
                mult(p, &x[i], &y[i])
            })
            .unwrap();
            let z = open3(&out.outputs);
            assert_eq!(z[0], 0);
            assert_eq!(z[1], 15);
            for i in 0..xs.len() {
                assert_eq!(z[i], xs[i].wrapping_mul(ys[i]) & m);
            }
            let rec = out.ledger.of(Protocol::Mult).next().unwrap();
            assert_eq!((rec.bits, rec.rounds), (3 * k as u64 * 10_000, 1));
        }
    }

    #[test]
    fn mult_exhaustive_small_ring() {
        for k in 1..=6u32 {
            let vals: Vec<(u64, u64)> = (0..1u64 << k).flat_map(|a| (0..1u64 << k).map(move |b| (a, b))).collect();
            let mut r = ChaCha8Rng::seed_from_u64(3);
            let x = share_arith(&vals.iter().map(|v| v.0).collect::<Vec<_>>(), k, &mut r);
            let y = share_arith(&vals.iter().map(|v| v.1).collect::<Vec<_>>(), k, &mut r);
            let out = run(&RunConfig::seeded(k as u64), |p| {
                let i = p.id().index();
                Ok((mult(p, &x[i], &y[i])?, dot_product(p, &[(&x[i], &y[i]), (&y[i], &y[i])])?))
            })
            .unwrap();
            let [a, b, c] = out.outputs;
            let z = open3(&[a.0, b.0, c.0]);
            let d = open3(&[a.1, b.1, c.1]);
            for (i, (u, v)) in vals.iter().enumerate() {
                assert_eq!(z[i], u * v & u64::mask(k));
                assert_eq!(d[i], (u * v + v * v) & u64::mask(k));
            }
        }
    }

    #[test]
    fn dot_product_examples_and_cost() {
        let mut r = ChaCha8Rng::seed_from_u64(11);
        let ones = share_arith(&[1u64], 32, &mut r);
        let abc: Vec<[ArithShares<u64>; 3]> = [7u64, 9, 100].iter().map(|v| share_arith(&[*v], 32, &mut r)).collect();
        let xs: Vec<u64> = (0..64).map(|_| r.gen::<u32>() as u64).collect();
        let ys: Vec<u64> = (0..64).map(|_| r.gen::<u32>() as u64).collect();
        let xsh: Vec<_> = xs.iter().map(|v| share_arith(&[*v], 32, &mut r)).collect();
        let ysh: Vec<_> = ys.iter().map(|v| share_arith(&[*v], 32, &mut r)).collect();
        let out = run(&RunConfig::seeded(2), |p| {
            let i = p.id().index();
            let t: Vec<_> = abc.iter().map(|s| (&ones[i], &s[i])).collect();
            let a = dot_product(p, &t)?;
            let t: Vec<_> = xsh.iter().zip(&ysh).map(|(x, y)| (&x[i], &y[i])).collect();
            let b = dot_product(p, &t)?;
            let c = dot_product(p, &[(&xsh[0][i], &ysh[0][i])])?;
            Ok((a, b, c))
        })
        .unwrap();
        let [a, b, c] = out.outputs;
        assert_eq!(open3(&[a.0, b.0, c.0]), vec![116]);
        let expect = xs.iter().zip(&ys).fold(0u64, |s, (x, y)| s.wrapping_add(x * y)) & u64::mask(32);
        assert_eq!(open3(&[a.1, b.1, c.1]), vec![expect]);
        assert_eq!(open3(&[a.2, b.2, c.2]), vec![xs[0] * ys[0] & u64::mask(32)]);
        let dots: Vec<_> = out.ledger.of(Protocol::Dot).map(|r| (r.bits, r.rounds)).collect();
        assert_eq!(dots, vec![(96, 1), (96, 1), (96, 1)]);
    }

    #[test]
    fn open_examples_and_cost() {
        let mut r = ChaCha8Rng::seed_from_u64(5);
        let x = share_arith(&[9u64], 8, &mut r);
        let out = run(&RunConfig::seeded(0), |p| {
            let i = p.id().index();
            Ok((open(p, &x[i], 8)?, open(p, &x[i], 2)?))
        })
        .unwrap();
        for o in &out.outputs {
            assert_eq!(o.0, vec![9]);
            assert_eq!(o.1, vec![1]);
        }
        let costs: Vec<_> = out.ledger.of(Protocol::Open).map(|r| (r.bits, r.rounds)).collect();
        assert_eq!(costs, vec![(24, 1), (6, 1)]);

        let k = 60;
        let xs: Vec<u64> = (0..1000).map(|_| r.gen::<u64>() & u64::mask(k)).collect();
        let x = share_arith(&xs, k, &mut r);
        let out = run(&RunConfig::seeded(0), |p| {
            let i = p.id().index();
            (1..=k).map(|l| open(p, &x[i], l)).collect::<Result<Vec<_>>>()
        })
        .unwrap();
        for o in &out.outputs {
            for (l, got) in o.iter().enumerate() {
                let l = l as u32 + 1;
                assert!(got.iter().zip(&xs).all(|(g, x)| *g == x & u64::mask(l)));
            }
        }
        for (l, rec) in out.ledger.of(Protocol::Open).enumerate() {
            assert_eq!(rec.bits, 3 * (l as u64 + 1) * 1000);
        }
    }

    #[test]
    fn and_and_open_bits() {
        let mut r = ChaCha8Rng::seed_from_u64(8);
        let a = PackedBits::from_bools((0..300).map(|_| r.gen()));
        let b = PackedBits::from_bools((0..300).map(|_| r.gen()));
        let x = share_bits(&a, &mut r);
        let y = share_bits(&b, &mut r);
        let out = run(&RunConfig::seeded(0), |p| {
            let i = p.id().index();
            let z = and(p, &x[i], &y[i])?;
            let many = and_many(p, &[(&x[i], &y[i]), (&y[i], &y[i])])?;
            let d = and_dot(p, &[(&x[i], &y[i]), (&x[i], &x[i])])?;
            Ok((open_bits(p, &z)?, many, d))
        })
        .unwrap();
        let expect = PackedBits::from_bools(a.iter().zip(b.iter()).map(|(u, v)| u & v));
        assert_eq!(out.outputs[0].0, expect);
        let m0 = out.outputs.clone().map(|o| o.1[0].clone());
        let m1 = out.outputs.clone().map(|o| o.1[1].clone());
        assert_eq!(bits3(&m0), expect);
        assert_eq!(bits3(&m1), b);
        let d = out.outputs.clone().map(|o| o.2);
        assert_eq!(bits3(&d), PackedBits::from_bools(a.iter().zip(b.iter()).map(|(u, v)| (u & v) ^ u)));
    }

    #[test]
    fn b2a_exhaustive_sub_shares() {
        // Every combination of the three bit sub-shares, at several widths.
        for k in [1u32, 2, 6, 32, 64] {
            let mut shares: [BitBatch; 3] = std::array::from_fn(|_| BitBatch::zeros(8));
            for v in 0..8usize {
                let sub = [(v & 1) != 0, (v & 2) != 0, (v & 4) != 0];
                let h = crate::ring::holdings_of(sub);
                for (pi, s) in shares.iter_mut().enumerate() {
                    for slot in 0..2 {
                        if h[pi][slot] {
                            s.sub[slot][0] |= 1 << v;
                        }
                    }
                }
            }
            let out = run(&RunConfig::seeded(k as u64), |p| {
                let i = p.id().index();
                b2a::<u64>(p, &shares[i], k)
            })
            .unwrap();
            let z = open3(&out.outputs);
            for (v, got) in z.iter().enumerate() {
                assert_eq!(*got, (v.count_ones() & 1) as u64);
            }
            let rec = out.ledger.of(Protocol::B2A).next().unwrap();
            assert_eq!((rec.bits, rec.rounds), (3 * k as u64 * 8, 2));
        }
    }

    #[test]
    fn b2a_wide_ring() {
        let mut r = ChaCha8Rng::seed_from_u64(1);
        let bits = PackedBits::from_bools((0..1000).map(|_| r.gen()));
        let x = share_bits(&bits, &mut r);
        let out = run(&RunConfig::seeded(4), |p| {
            let i = p.id().index();
            b2a::<u128>(p, &x[i], 98)
        })
        .unwrap();
        let z = open3(&out.outputs);
        assert!(z.iter().zip(bits.iter()).all(|(v, b)| *v == b as u128));
        assert_eq!(out.ledger.bits_of(Protocol::B2A), 3 * 98 * 1000);
    }

    #[test]
    fn rand_bit_is_binary_balanced_and_reproducible() {
        let go = |seed| {
            run(&RunConfig::seeded(seed), |p| rand_bit::<u64>(p, 10_000, 32))
                .map(|o| open3(&o.outputs))
                .unwrap()
        };
        let a = go(9);
        assert!(a.iter().all(|v| *v <= 1));
        let mean = a.iter().sum::<u64>() as f64 / a.len() as f64;
        assert!((0.47..=0.53).contains(&mean), "{mean}");
        assert_eq!(a, go(9));
        assert_ne!(a, go(10));
    }

    fn open_eda<W: Word>(o: &[EdaBits<W>; 3]) -> (Vec<W>, Vec<W>) {
        let arith = reconstruct_arith([&o[0].arith, &o[1].arith, &o[2].arith]).unwrap();
        let rows: Vec<PackedBits> = (0..o[0].bits.len())
            .map(|j| reconstruct_bits([&o[0].bits[j], &o[1].bits[j], &o[2].bits[j]]).unwrap())
            .collect();
        (arith, untranspose_public(&rows))
    }

    #[test]
    fn edabit_identity_all_lengths() {
        for k in [1u32, 5, 8, 16, 32, 64] {
            for n in [1, k / 2, k.saturating_sub(1), k] {
                if n == 0 {
                    continue;
                }
                let out = run(&RunConfig::seeded(n as u64 * 100 + k as u64), |p| {
                    edabit::<u64>(p, n, 500, k)
                })
                .unwrap();
                let (a, b) = open_eda(&out.outputs);
                for (x, y) in a.iter().zip(&b) {
                    assert!(n == 64 || *y < 1u64 << n);
                    assert_eq!(x, y, "k={k} n={n}");
                }
            }
        }
    }

    #[test]
    fn edabits_of_mixed_lengths_in_one_call() {
        let out = run(&RunConfig::seeded(3), |p| edabits::<u128>(p, &[(3, 10), (70, 7), (98, 5)], 98)).unwrap();
        for g in 0..3 {
            let part = out.outputs.clone().map(|v| v[g].clone());
            let (a, b) = open_eda(&part);
            assert_eq!(a, b);
        }
    }

    #[test]
    fn edabit_uniform_chi_square() {
        let out = run(&RunConfig::seeded(77), |p| edabit::<u64>(p, 8, 10_000, 32)).unwrap();
        let (a, _) = open_eda(&out.outputs);
        let mut hist = [0f64; 256];
        for v in a {
            hist[v as usize] += 1.0;
        }
        let e = 10_000.0 / 256.0;
        let chi: f64 = hist.iter().map(|o| (o - e) * (o - e) / e).sum();
        // 255 degrees of freedom; the 1e-6 upper quantile is about 389.
        assert!(chi < 389.0, "chi-square {chi}");
    }

    #[test]
    fn edabit_rejects_oversized() {
        let err = run(&RunConfig::seeded(0), |p| edabit::<u64>(p, 9, 1, 8)).err().unwrap();
        assert!(matches!(err, Error::InvalidParameter(_)));
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(24))]
        #[test]
        fn mult_open_b2a_match_plaintext(
            xs in proptest::collection::vec(proptest::num::u64::ANY, 1..40),
            k in 1u32..=64,
            seed in proptest::num::u64::ANY,
        ) {
            let m = u64::mask(k);
            let xs: Vec<u64> = xs.into_iter().map(|v| v & m).collect();
            let ys: Vec<u64> = xs.iter().map(|v| v.rotate_right(3) & m).collect();
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            let x = share_arith(&xs, k, &mut r);
            let y = share_arith(&ys, k, &mut r);
            let bits = PackedBits::from_bools(xs.iter().map(|v| v & 1 == 1));
            let b = share_bits(&bits, &mut r);
            let out = run(&RunConfig::seeded(seed), |p| {
                let i = p.id().index();
                let z = mult(p, &x[i], &y[i])?;
                let o = open(p, &z, k)?;
                let c = b2a::<u64>(p, &b[i], k)?;
                Ok((o, open(p, &c, k)?))
            }).unwrap();
            for (i, (x, y)) in xs.iter().zip(&ys).enumerate() {
                proptest::prop_assert_eq!(out.outputs[0].0[i], x.wrapping_mul(*y) & m);
                proptest::prop_assert_eq!(out.outputs[2].1[i], x & 1);
            }
        }
    }
}
