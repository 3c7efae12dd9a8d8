use anyhow::ensure;
use fpsum::blocks::{all_or, bitdec, convert, eqz, msb, prefix_and, prefix_or, trunc, ALL_OR_MAX_BITS};
use fpsum::fp::{b2u, derive_params, shift, Precision};
use fpsum::oracle::superacc::plain_shift;
use fpsum::ring::{
    reconstruct_arith, reconstruct_bits, share_arith, share_bits, transpose_public, ArithShares, BitBatch,
    PackedBits, Word,
};
use fpsum::runtime::{run, Party, RunConfig};
use rand::Rng;

use crate::{rng, Outcome};

const RANDOM: usize = 10_000;

fn session<T: Send>(seed: u64, f: impl Fn(&mut Party) -> fpsum::Result<T> + Sync) -> anyhow::Result<[T; 3]> {
    Ok(run(&RunConfig::seeded(seed), f)?.outputs)
}

fn arith<W: Word>(o: [&ArithShares<W>; 3]) -> anyhow::Result<Vec<W>> {
    Ok(reconstruct_arith(o)?)
}

fn bits(o: [&BitBatch; 3]) -> anyhow::Result<PackedBits> {
    Ok(reconstruct_bits(o)?)
}

fn rows(o: [&Vec<BitBatch>; 3]) -> anyhow::Result<Vec<PackedBits>> {
    (0..o[0].len()).map(|j| bits([&o[0][j], &o[1][j], &o[2][j]])).collect()
}

fn shared_rows(values: &[u64], nbits: u32, seed: u64) -> [Vec<BitBatch>; 3] {
    let mut r = rng(seed);
    let mut out: [Vec<BitBatch>; 3] = Default::default();
    for row in transpose_public(values, nbits) {
        for (o, s) in out.iter_mut().zip(share_bits(&row, &mut r)) {
            o.push(s);
        }
    }
    out
}

fn mask(k: u32) -> u64 {
    if k >= 64 {
        u64::MAX
    } else {
        (1 << k) - 1
    }
}

fn sign_extend(x: u64, k: u32, k2: u32) -> u128 {
    let m2 = if k2 >= 128 { u128::MAX } else { (1u128 << k2) - 1 };
    let neg = (x >> (k - 1)) & 1 == 1;
    let ext = if neg { x as u128 | !(mask(k) as u128) } else { x as u128 };
    ext & m2
}

fn random(n: usize, k: u32, seed: u64) -> Vec<u64> {
    let mut r = rng(seed);
    (0..n).map(|_| r.gen::<u64>() & mask(k)).collect()
}

type Counts = (usize, usize);

fn check_eqz() -> anyhow::Result<Counts> {
    let all: Vec<u64> = (0..1024).collect();
    let x = share_arith(&all, 10, &mut rng(1));
    let out = session(1, |p| (1..=10).map(|l| eqz(p, &x[p.id().index()], l)).collect::<fpsum::Result<Vec<_>>>())?;
    let mut ex = 0;
    for (li, l) in (1..=10u32).enumerate() {
        let z = bits([&out[0][li], &out[1][li], &out[2][li]])?;
        for (i, &v) in all.iter().enumerate() {
            ensure!(z.get(i) == (v & mask(l) == 0), "eqz l={l} v={v}");
            ex += 1;
        }
    }
    let mut big = random(RANDOM, 64, 2);
    for (i, v) in big.iter_mut().enumerate().take(3000) {
        *v = if i < 500 { 0 } else { *v & !mask(40) };
    }
    let y = share_arith(&big, 64, &mut rng(3));
    let out = session(2, |p| {
        let i = p.id().index();
        Ok([eqz(p, &y[i], 64)?, eqz(p, &y[i], 40)?])
    })?;
    let (full, low) = (bits([&out[0][0], &out[1][0], &out[2][0]])?, bits([&out[0][1], &out[1][1], &out[2][1]])?);
    for (i, &v) in big.iter().enumerate() {
        ensure!(full.get(i) == (v == 0) && low.get(i) == (v & mask(40) == 0), "eqz k=64 v={v:#x}");
    }
    Ok((ex, 2 * RANDOM))
}

fn check_msb() -> anyhow::Result<Counts> {
    let inputs: Vec<Vec<u64>> = (1..=10).map(|k| (0..1u64 << k).collect()).collect();
    let sh: Vec<[ArithShares<u64>; 3]> =
        inputs.iter().zip(1..=10u32).map(|(v, k)| share_arith(v, k, &mut rng(k as u64))).collect();
    let out = session(3, |p| sh.iter().map(|s| msb(p, &s[p.id().index()])).collect::<fpsum::Result<Vec<_>>>())?;
    let mut ex = 0;
    for (j, (vals, k)) in inputs.iter().zip(1..=10u32).enumerate() {
        let m = bits([&out[0][j], &out[1][j], &out[2][j]])?;
        for (i, &v) in vals.iter().enumerate() {
            ensure!(m.get(i) == ((v >> (k - 1)) & 1 == 1), "msb k={k} v={v}");
            ex += 1;
        }
    }
    let mut big = random(RANDOM, 64, 4);
    big[..4].copy_from_slice(&[0, 1 << 63, (1 << 63) - 1, u64::MAX]);
    let y = share_arith(&big, 64, &mut rng(5));
    let out = session(4, |p| msb(p, &y[p.id().index()]))?;
    let m = bits([&out[0], &out[1], &out[2]])?;
    for (i, &v) in big.iter().enumerate() {
        ensure!(m.get(i) == (v >> 63 == 1), "msb k=64 v={v:#x}");
    }
    Ok((ex, RANDOM))
}

fn check_trunc() -> anyhow::Result<Counts> {
    let cases: Vec<(u32, u32)> = (1..=10u32).flat_map(|l| (0..=l).map(move |u| (l, u))).collect();
    let sh: Vec<[ArithShares<u64>; 3]> = (1..=10u32)
        .map(|l| share_arith(&(0..1u64 << l).collect::<Vec<_>>(), 10, &mut rng(l as u64)))
        .collect();
    let out = session(5, |p| {
        let i = p.id().index();
        cases.iter().map(|&(l, u)| trunc(p, &sh[l as usize - 1][i], l, u)).collect::<fpsum::Result<Vec<_>>>()
    })?;
    let mut ex = 0;
    for (j, &(l, u)) in cases.iter().enumerate() {
        let got = arith([&out[0][j], &out[1][j], &out[2][j]])?;
        for (x, &g) in got.iter().enumerate() {
            ensure!(g == (x as u64) >> u, "trunc l={l} u={u} x={x}: got {g}");
            ex += 1;
        }
    }
    let mut rn = 0;
    let big: Vec<(u32, u32)> = vec![(60, 1), (60, 17), (60, 32), (60, 59), (60, 60), (64, 20)];
    let inputs: Vec<Vec<u64>> =
        big.iter().enumerate().map(|(s, &(l, _))| random(RANDOM, l, 10 + s as u64)).collect();
    let sh: Vec<[ArithShares<u64>; 3]> =
        inputs.iter().enumerate().map(|(s, v)| share_arith(v, 64, &mut rng(20 + s as u64))).collect();
    let out = session(6, |p| {
        let i = p.id().index();
        big.iter().zip(&sh).map(|(&(l, u), s)| trunc(p, &s[i], l, u)).collect::<fpsum::Result<Vec<_>>>()
    })?;
    for (j, &(l, u)) in big.iter().enumerate() {
        let got = arith([&out[0][j], &out[1][j], &out[2][j]])?;
        for (&x, &g) in inputs[j].iter().zip(&got) {
            let want = if u == 64 { 0 } else { x >> u };
            ensure!(g == want, "trunc k=64 l={l} u={u} x={x:#x}: got {g:#x}");
            rn += 1;
        }
    }
    Ok((ex, rn))
}

fn check_bitdec() -> anyhow::Result<Counts> {
    let all: Vec<u64> = (0..1024).collect();
    let x = share_arith(&all, 10, &mut rng(7));
    let out = session(7, |p| (1..=10).map(|l| bitdec(p, &x[p.id().index()], l)).collect::<fpsum::Result<Vec<_>>>())?;
    let mut ex = 0;
    for (li, l) in (1..=10u32).enumerate() {
        let rs = rows([&out[0][li], &out[1][li], &out[2][li]])?;
        ensure!(rs.len() == l as usize);
        for (i, &v) in all.iter().enumerate() {
            ensure!((0..l).all(|j| rs[j as usize].get(i) == ((v >> j) & 1 == 1)), "bitdec l={l} v={v}");
            ex += 1;
        }
    }
    let big = random(RANDOM, 64, 8);
    let y = share_arith(&big, 64, &mut rng(9));
    let out = session(8, |p| {
        let i = p.id().index();
        Ok([bitdec(p, &y[i], 64)?, bitdec(p, &y[i], 37)?])
    })?;
    for (t, l) in [64u32, 37].into_iter().enumerate() {
        let rs = rows([&out[0][t], &out[1][t], &out[2][t]])?;
        for (i, &v) in big.iter().enumerate() {
            ensure!((0..l).all(|j| rs[j as usize].get(i) == ((v >> j) & 1 == 1)), "bitdec k=64 l={l}");
        }
    }
    Ok((ex, 2 * RANDOM))
}

fn check_prefix() -> anyhow::Result<Counts> {
    let mut ex = 0;
    for m in 1..=10u32 {
        let vals: Vec<u64> = (0..1u64 << m).collect();
        let x = shared_rows(&vals, m, m as u64);
        let out = session(m as u64, |p| {
            let i = p.id().index();
            Ok((prefix_and(p, &x[i])?, prefix_or(p, &x[i])?))
        })?;
        let pa = rows([&out[0].0, &out[1].0, &out[2].0])?;
        let po = rows([&out[0].1, &out[1].1, &out[2].1])?;
        for (i, &v) in vals.iter().enumerate() {
            for j in 0..m {
                let low = v & mask(j + 1);
                ensure!(pa[j as usize].get(i) == (low == mask(j + 1)), "prefix_and m={m} v={v} j={j}");
                ensure!(po[j as usize].get(i) == (low != 0), "prefix_or m={m} v={v} j={j}");
            }
            ex += 1;
        }
    }
    // Rows biased so that prefixes stay undecided deep into the chain.
    let m = 64;
    let mut r = rng(30);
    let dense: Vec<u64> = (0..RANDOM).map(|_| (0..m).fold(0, |a, j| a | ((r.gen_bool(0.97) as u64) << j))).collect();
    let sparse: Vec<u64> = dense.iter().map(|v| !v).collect();
    let (xa, xo) = (shared_rows(&dense, m, 31), shared_rows(&sparse, m, 32));
    let out = session(31, |p| {
        let i = p.id().index();
        Ok((prefix_and(p, &xa[i])?, prefix_or(p, &xo[i])?))
    })?;
    let pa = rows([&out[0].0, &out[1].0, &out[2].0])?;
    let po = rows([&out[0].1, &out[1].1, &out[2].1])?;
    for i in 0..RANDOM {
        for j in 0..m {
            let (d, s) = (dense[i] & mask(j + 1), sparse[i] & mask(j + 1));
            ensure!(pa[j as usize].get(i) == (d == mask(j + 1)), "prefix_and k=64 item {i} j={j}");
            ensure!(po[j as usize].get(i) == (s != 0), "prefix_or k=64 item {i} j={j}");
        }
    }
    Ok((2 * ex, 2 * RANDOM))
}

fn check_all_or() -> anyhow::Result<Counts> {
    let mut ex = 0;
    for nb in 1..=10u32 {
        let vals: Vec<u64> = (0..1u64 << nb).collect();
        let x = shared_rows(&vals, nb, 40 + nb as u64);
        let out = session(nb as u64, |p| all_or(p, &x[p.id().index()]))?;
        let ys = rows([&out[0], &out[1], &out[2]])?;
        ensure!(ys.len() == 1 << nb);
        for (i, &v) in vals.iter().enumerate() {
            ensure!(ys.iter().enumerate().all(|(j, y)| y.get(i) == (j as u64 != v)), "all_or bits={nb} v={v}");
            ex += 1;
        }
    }
    let nb = ALL_OR_MAX_BITS as u32;
    let vals = random(RANDOM, nb, 50);
    let x = shared_rows(&vals, nb, 51);
    let out = session(50, |p| all_or(p, &x[p.id().index()]))?;
    let ys = rows([&out[0], &out[1], &out[2]])?;
    for (i, &v) in vals.iter().enumerate() {
        ensure!(ys.iter().enumerate().all(|(j, y)| y.get(i) == (j as u64 != v)), "all_or bits={nb} v={v}");
    }
    Ok((ex, RANDOM))
}

fn check_convert() -> anyhow::Result<Counts> {
    let mut ex = 0;
    for k in 1..=10u32 {
        let vals: Vec<u64> = (0..1u64 << k).collect();
        let x = share_arith(&vals, k, &mut rng(60 + k as u64));
        let targets = [k + 1, 40, 64];
        let out = session(k as u64, |p| {
            let i = p.id().index();
            targets.iter().map(|&k2| convert::<u64, u64>(p, &x[i], k2)).collect::<fpsum::Result<Vec<_>>>()
        })?;
        for (t, &k2) in targets.iter().enumerate() {
            let got = arith([&out[0][t], &out[1][t], &out[2][t]])?;
            for (&v, &g) in vals.iter().zip(&got) {
                ensure!(g as u128 == sign_extend(v, k, k2), "convert {k}->{k2} x={v}: got {g:#x}");
                ex += 1;
            }
        }
    }
    let mut a = random(RANDOM, 32, 70);
    let mut b = random(RANDOM, 64, 71);
    a[..4].copy_from_slice(&[0, 1 << 31, (1 << 31) - 1, mask(32)]);
    b[..4].copy_from_slice(&[0, 1 << 63, (1 << 63) - 1, u64::MAX]);
    let (xa, xb) = (share_arith(&a, 32, &mut rng(72)), share_arith(&b, 64, &mut rng(73)));
    let out = session(70, |p| {
        let i = p.id().index();
        Ok((convert::<u64, u64>(p, &xa[i], 64)?, convert::<u64, u128>(p, &xb[i], 128)?))
    })?;
    let ga = arith([&out[0].0, &out[1].0, &out[2].0])?;
    let gb = arith([&out[0].1, &out[1].1, &out[2].1])?;
    for i in 0..RANDOM {
        ensure!(ga[i] as u128 == sign_extend(a[i], 32, 64), "convert 32->64 x={:#x}", a[i]);
        ensure!(gb[i] == sign_extend(b[i], 64, 128), "convert 64->128 x={:#x}", b[i]);
    }
    Ok((ex, 2 * RANDOM))
}

fn check_b2u() -> anyhow::Result<Counts> {
    let k = 64;
    let lens: Vec<usize> = (1..=132).collect();
    let sh: Vec<[ArithShares<u64>; 3]> = lens
        .iter()
        .map(|&len| share_arith(&(1..=len as u64).collect::<Vec<_>>(), k, &mut rng(80 + len as u64)))
        .collect();
    let out = session(80, |p| {
        let i = p.id().index();
        lens.iter().zip(&sh).map(|(&len, s)| b2u(p, &s[i], len, k)).collect::<fpsum::Result<Vec<_>>>()
    })?;
    let mut ex = 0;
    for (t, &len) in lens.iter().enumerate() {
        let unit: Vec<Vec<u64>> =
            (0..len).map(|j| arith([&out[0][t][j], &out[1][t][j], &out[2][t][j]])).collect::<anyhow::Result<_>>()?;
        for a in 1..=len {
            ensure!(unit.iter().enumerate().all(|(j, row)| row[a - 1] == (j + 1 == a) as u64), "b2u len={len} a={a}");
            ex += 1;
        }
    }
    let len = 132;
    let mut r = rng(81);
    let a: Vec<u64> = (0..RANDOM).map(|_| r.gen_range(1..=len as u64)).collect();
    let x = share_arith(&a, k, &mut r);
    let out = session(81, |p| b2u(p, &x[p.id().index()], len, k))?;
    let unit: Vec<Vec<u64>> =
        (0..len).map(|j| arith([&out[0][j], &out[1][j], &out[2][j]])).collect::<anyhow::Result<_>>()?;
    for (i, &ai) in a.iter().enumerate() {
        ensure!(unit.iter().enumerate().all(|(j, row)| row[i] == (j as u64 + 1 == ai) as u64), "b2u len=132 a={ai}");
    }
    Ok((ex, RANDOM))
}

fn check_shift() -> anyhow::Result<Counts> {
    let prm = derive_params(Precision::Single, 16)?;
    let w = prm.w;
    let (vals, amts): (Vec<u64>, Vec<u64>) = (0..1u64 << w).flat_map(|v| (0..w as u64).map(move |s| (v, s))).unzip();
    let mut r = rng(90);
    let (xv, xs) = (share_arith(&vals, prm.k, &mut r), share_arith(&amts, prm.k, &mut r));
    let out = session(90, |p| {
        let i = p.id().index();
        shift(p, std::slice::from_ref(&xv[i]), &xs[i], &prm)
    })?;
    let got: Vec<Vec<u64>> =
        (0..2).map(|b| arith([&out[0][b], &out[1][b], &out[2][b]])).collect::<anyhow::Result<_>>()?;
    for i in 0..vals.len() {
        let want = plain_shift(&[vals[i]], amts[i] as u32, w);
        ensure!([got[0][i], got[1][i]] == want[..], "shift w=16 v={} s={}", vals[i], amts[i]);
    }
    let ex = vals.len();

    let prm = derive_params(Precision::Single, 32)?;
    let w = prm.w;
    let blocks: Vec<Vec<u64>> = (0..2).map(|b| random(RANDOM, w, 91 + b)).collect();
    let mut amts: Vec<u64> = random(RANDOM, prm.gamma, 93);
    amts[0] = w as u64 - 1;
    let mut blocks = blocks;
    blocks[0][0] = mask(w);
    blocks[1][0] = mask(w);
    let xv: Vec<[ArithShares<u64>; 3]> = blocks.iter().map(|b| share_arith(b, prm.k, &mut r)).collect();
    let xs = share_arith(&amts, prm.k, &mut r);
    let out = session(91, |p| {
        let i = p.id().index();
        let v: Vec<ArithShares<u64>> = xv.iter().map(|s| s[i].clone()).collect();
        shift(p, &v, &xs[i], &prm)
    })?;
    let got: Vec<Vec<u64>> =
        (0..3).map(|b| arith([&out[0][b], &out[1][b], &out[2][b]])).collect::<anyhow::Result<_>>()?;
    for i in 0..RANDOM {
        let want = plain_shift(&[blocks[0][i], blocks[1][i]], amts[i] as u32, w);
        ensure!(want == [got[0][i], got[1][i], got[2][i]], "shift w=32 item {i}");
    }
    Ok((ex, RANDOM))
}

pub fn check() -> Outcome {
    let suites: [(&str, fn() -> anyhow::Result<Counts>); 9] = [
        ("eqz", check_eqz),
        ("msb", check_msb),
        ("trunc", check_trunc),
        ("bitdec", check_bitdec),
        ("prefix_and/or", check_prefix),
        ("all_or", check_all_or),
        ("convert", check_convert),
        ("b2u", check_b2u),
        ("shift", check_shift),
    ];
    let mut parts = Vec::new();
    for (name, f) in suites {
        let (ex, rn) = f().map_err(|e| e.context(name))?;
        parts.push(format!("{name} {ex}+{rn}"));
    }
    Ok(format!("exhaustive+random cases: {}", parts.join(", ")))
}
