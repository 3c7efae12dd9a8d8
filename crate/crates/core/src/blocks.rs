//! Comparison, truncation and decomposition blocks.
//!
//! Multi-bit values over `Z_2` are vectors of bit rows, least significant
//! first; row `i` holds bit `i` of every instance in the batch. The
//! arithmetic blocks mask their input with an edaBit, open it and finish
//! with a comparison circuit over the bits of the mask.

use crate::circuit;
use crate::error::{Error, Result};
use crate::primitives::{b2a_rows, edabit, edabits, open};
use crate::ring::{check_width, transpose_public, ArithShares, BitBatch, PackedBits, Word};
use crate::runtime::{Party, Protocol};

fn not_public(c: &PackedBits) -> PackedBits {
    c.not()
}

fn lt_lane(p: &Party, c: &[PackedBits], r: &[BitBatch]) -> (Vec<BitBatch>, Vec<BitBatch>) {
    let id = p.id();
    let mut g = Vec::with_capacity(r.len());
    let mut pr = Vec::with_capacity(r.len());
    for (cj, rj) in c.iter().zip(r) {
        let nc = not_public(cj);
        g.push(rj.and_public(&nc));
        pr.push(rj.xor_public(id, &nc));
    }
    (g, pr)
}

/// `[c < r]` for public `c` and shared bits `r`, several lanes at once.
/// Within a lane `c` and `r` have the same number of rows.
pub fn bitlt_many(p: &mut Party, lanes: &[(&[PackedBits], &[BitBatch])]) -> Result<Vec<BitBatch>> {
    for (c, r) in lanes {
        if c.len() != r.len() || r.is_empty() {
            return Err(Error::InvalidParameter("BitLT operand rows".into()));
        }
    }
    let items = lanes.iter().map(|(_, r)| r[0].len()).sum();
    let width = lanes.iter().map(|(_, r)| r.len()).max().unwrap_or(0) as u32;
    p.scope(Protocol::BitLT, width, items, |p| {
        let gp: Vec<_> = lanes.iter().map(|(c, r)| lt_lane(p, c, r)).collect();
        circuit::reduce_gp(p, gp)
    })
}

pub fn bitlt(p: &mut Party, c: &[PackedBits], r: &[BitBatch]) -> Result<BitBatch> {
    Ok(bitlt_many(p, &[(c, r)])?.swap_remove(0))
}

/// `[a = 0]` over the low `l` bits of `a`, as a bit over `Z_2`.
pub fn eqz<W: Word>(p: &mut Party, a: &ArithShares<W>, l: u32) -> Result<BitBatch> {
    if l == 0 || l > a.width() {
        return Err(Error::WidthMismatch(l, a.width()));
    }
    let n = a.len();
    p.scope(Protocol::Eqz, l, n, |p| {
        let id = p.id();
        let r = edabit::<W>(p, l, n, l)?;
        let c = open(p, &a.mod_switch(l)?.add(&r.arith)?, l)?;
        let c = transpose_public(&c, l);
        let eq: Vec<BitBatch> = c
            .iter()
            .zip(&r.bits)
            .map(|(cj, rj)| rj.xor_public(id, &not_public(cj)))
            .collect();
        Ok(circuit::reduce_and(p, vec![eq])?.swap_remove(0))
    })
}

/// Most significant bit of `a` over its full ring width.
pub fn msb<W: Word>(p: &mut Party, a: &ArithShares<W>) -> Result<BitBatch> {
    let k = a.width();
    let n = a.len();
    p.scope(Protocol::Msb, k, n, |p| {
        let id = p.id();
        let r = edabit::<W>(p, k, n, k)?;
        let c = open(p, &a.add(&r.arith)?, k)?;
        let rows = transpose_public(&c, k);
        let top = &rows[k as usize - 1];
        let mut out = r.bits[k as usize - 1].xor_public(id, top);
        if k > 1 {
            let lt = bitlt(p, &rows[..k as usize - 1], &r.bits[..k as usize - 1])?;
            out.xor_assign(&lt);
        }
        Ok(out)
    })
}

/// Exact `floor(x / 2^u)` for `0 <= x < 2^l`.
pub fn trunc<W: Word>(p: &mut Party, x: &ArithShares<W>, l: u32, u: u32) -> Result<ArithShares<W>> {
    let k = x.width();
    if l > k || u > l || l == 0 {
        return Err(Error::InvalidParameter(format!("Trunc(l={l}, u={u}) on Z_2^{k}")));
    }
    if u == 0 {
        return Ok(x.clone());
    }
    let n = x.len();
    p.scope(Protocol::Trunc, l, n, |p| {
        p.annotate(u);
        let id = p.id();
        if u == l {
            return Ok(ArithShares::zeros(k, n));
        }
        let mut e = edabits::<W>(p, &[(u, n), (l - u, n)], k)?;
        let hi = e.pop().expect("high mask");
        let lo = e.pop().expect("low mask");
        let r = lo.arith.add(&hi.arith.scale(W::pow2(u)))?;
        let c = open(p, &x.mod_switch(k)?.add(&r)?, l)?;
        let rows = transpose_public(&c, l);
        let r_bits: Vec<BitBatch> = lo.bits.iter().chain(&hi.bits).cloned().collect();
        let lts = bitlt_many(p, &[(&rows[..u as usize], &lo.bits), (&rows, &r_bits)])?;
        let ar = b2a_rows::<W>(p, &[&lts[0], &lts[1]], k)?;
        let c_hi: Vec<W> = c.iter().map(|&v| v >> u).collect();
        let y = ArithShares::constant(id, k, &c_hi)
            .sub(&hi.arith)?
            .sub(&ar[0])?
            .add(&ar[1].scale(W::pow2(l - u)))?;
        Ok(y)
    })
}

/// Bits of `x mod 2^l`, least significant first.
pub fn bitdec<W: Word>(p: &mut Party, x: &ArithShares<W>, l: u32) -> Result<Vec<BitBatch>> {
    if l == 0 || l > x.width() {
        return Err(Error::WidthMismatch(l, x.width()));
    }
    let n = x.len();
    p.scope(Protocol::BitDec, l, n, |p| {
        let id = p.id();
        let r = edabit::<W>(p, l, n, l)?;
        let c = open(p, &x.mod_switch(l)?.add(&r.arith)?, l)?;
        let rows = transpose_public(&c, l);
        let mut out: Vec<BitBatch> = r
            .bits
            .iter()
            .zip(&rows)
            .map(|(rj, cj)| rj.xor_public(id, cj))
            .collect();
        if l > 1 {
            let lane = lt_lane(p, &rows[..l as usize - 1], &r.bits[..l as usize - 1]);
            let borrows = circuit::prefix_gp(p, vec![lane])?.swap_remove(0);
            for (o, b) in out[1..].iter_mut().zip(&borrows) {
                o.xor_assign(b);
            }
        }
        Ok(out)
    })
}

/// `y_i = x_0 & ... & x_i`.
pub fn prefix_and(p: &mut Party, xs: &[BitBatch]) -> Result<Vec<BitBatch>> {
    if xs.is_empty() {
        return Err(Error::InvalidParameter("empty prefix".into()));
    }
    p.scope(Protocol::PrefixAnd, xs.len() as u32, xs[0].len(), |p| {
        Ok(circuit::prefix_and(p, vec![xs.to_vec()])?.swap_remove(0))
    })
}

/// `y_i = x_0 | ... | x_i`.
pub fn prefix_or(p: &mut Party, xs: &[BitBatch]) -> Result<Vec<BitBatch>> {
    if xs.is_empty() {
        return Err(Error::InvalidParameter("empty prefix".into()));
    }
    p.scope(Protocol::PrefixOr, xs.len() as u32, xs[0].len(), |p| {
        let id = p.id();
        let neg: Vec<BitBatch> = xs.iter().map(|x| x.not(id)).collect();
        let y = circuit::prefix_and(p, vec![neg])?.swap_remove(0);
        Ok(y.iter().map(|v| v.not(id)).collect())
    })
}

fn all_or_many(p: &mut Party, problems: Vec<Vec<BitBatch>>) -> Result<Vec<Vec<BitBatch>>> {
    let id = p.id();
    let mut subs = Vec::new();
    let mut plan = Vec::with_capacity(problems.len());
    for x in &problems {
        if x.len() > 1 {
            let h = x.len() / 2;
            plan.push(Some((subs.len(), h)));
            subs.push(x[..h].to_vec());
            subs.push(x[h..].to_vec());
        } else {
            plan.push(None);
        }
    }
    let solved = if subs.is_empty() { Vec::new() } else { all_or_many(p, subs)? };
    // OR(a, b) = NOT(NOT a AND NOT b), one AND per output.
    let mut negs: Vec<(usize, Vec<BitBatch>, Vec<BitBatch>)> = Vec::new();
    for (pi, pl) in plan.iter().enumerate() {
        if let Some((s, _)) = pl {
            let lo: Vec<BitBatch> = solved[*s].iter().map(|v| v.not(id)).collect();
            let hi: Vec<BitBatch> = solved[*s + 1].iter().map(|v| v.not(id)).collect();
            negs.push((pi, lo, hi));
        }
    }
    let mut pairs = Vec::new();
    for (pi, lo, hi) in &negs {
        let h = plan[*pi].expect("split").1;
        let n = problems[*pi].len();
        for j in 0..1usize << n {
            pairs.push((&lo[j & ((1 << h) - 1)], &hi[j >> h]));
        }
    }
    let mut prods = crate::primitives::and_many(p, &pairs)?.into_iter();
    let mut out = Vec::with_capacity(problems.len());
    for (x, pl) in problems.iter().zip(&plan) {
        match pl {
            None => out.push(vec![x[0].clone(), x[0].not(id)]),
            Some(_) => out.push(
                (0..1usize << x.len())
                    .map(|_| prods.next().expect("product").not(id))
                    .collect(),
            ),
        }
    }
    Ok(out)
}

/// Largest supported AllOr input length.
pub const ALL_OR_MAX_BITS: usize = 12;

/// For bits `x` (least significant first) encoding `v`, returns `2^n`
/// rows with `y_j = OR_i (x_i ^ j_i)`: zero exactly at `j = v`.
pub fn all_or(p: &mut Party, xs: &[BitBatch]) -> Result<Vec<BitBatch>> {
    if xs.is_empty() || xs.len() > ALL_OR_MAX_BITS {
        return Err(Error::InvalidParameter(format!("AllOr over {} bits", xs.len())));
    }
    p.scope(Protocol::AllOr, xs.len() as u32, xs[0].len(), |p| {
        Ok(all_or_many(p, vec![xs.to_vec()])?.swap_remove(0))
    })
}

/// Sign-extends `x` from `Z_2^k` into `Z_2^{k2}`, `k2 > k`.
pub fn convert<W: Word, V: Word>(p: &mut Party, x: &ArithShares<W>, k2: u32) -> Result<ArithShares<V>> {
    let k = x.width();
    check_width::<V>(k2)?;
    if k2 <= k {
        return Err(Error::WidthMismatch(k2, k));
    }
    let n = x.len();
    p.scope(Protocol::Convert, k2, n, |p| {
        p.annotate(k);
        let id = p.id();
        let half = W::pow2(k - 1);
        let u = x.add_scalar(id, half);
        let r = edabit::<V>(p, k, n, k2)?;
        let c = open(p, &u.add(&r.arith.recast::<W>(k)?)?, k)?;
        let rows = transpose_public(&c, k);
        let wrap = bitlt(p, &rows, &r.bits)?;
        let wrap = b2a_rows::<V>(p, &[&wrap], k2)?.swap_remove(0);
        let cv: Vec<V> = c.iter().map(|v| V::from_u128(v.to_u128())).collect();
        let y = ArithShares::constant(id, k2, &cv)
            .sub(&r.arith)?
            .add(&wrap.scale(V::pow2(k)))?
            .add_scalar(id, V::from_u128(half.to_u128()).wrapping_neg());
        Ok(y)
    })
}
