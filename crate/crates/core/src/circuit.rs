//! Parallel-prefix and tree circuits over `Z_2` shares.
//!
//! Inputs are "lanes": independent problems, each a list of bit rows with
//! position 0 least significant. All lanes advance level by level so that
//! every level costs one AND round regardless of how many lanes there are.
//!
//! Generate/propagate pairs combine as
//! `(G, P) o (G', P') = (G ^ (P & G'), P & P')` with the more significant
//! pair on the left. `G` and `P` never hold simultaneously, so XOR stands
//! in for OR.

use crate::error::{Error, Result};
use crate::primitives::and_many;
use crate::ring::BitBatch;
use crate::runtime::Party;

type Lane = (Vec<BitBatch>, Vec<BitBatch>);

fn check_lanes(lanes: &[Lane]) -> Result<()> {
    for (g, p) in lanes {
        if g.is_empty() || g.len() != p.len() {
            return Err(Error::InvalidParameter("prefix lane shape".into()));
        }
    }
    Ok(())
}

/// Sklansky prefix: returns, per lane, `G` of positions `0..=i` for each `i`.
pub fn prefix_gp(p: &mut Party, mut lanes: Vec<Lane>) -> Result<Vec<Vec<BitBatch>>> {
    check_lanes(&lanes)?;
    let n_max = lanes.iter().map(|l| l.0.len()).max().unwrap_or(0);
    let mut l = 0;
    while (1usize << l) < n_max {
        let mut jobs = Vec::new();
        let mut pairs = Vec::new();
        for (li, (g, pr)) in lanes.iter().enumerate() {
            for i in 0..g.len() {
                if (i >> l) & 1 == 1 {
                    let j = ((i >> l) << l) - 1;
                    let need_p = (i >> (l + 1)) != 0;
                    jobs.push((li, i, need_p));
                    pairs.push((&pr[i], &g[j]));
                    if need_p {
                        pairs.push((&pr[i], &pr[j]));
                    }
                }
            }
        }
        let mut prods = and_many(p, &pairs)?.into_iter();
        for (li, i, need_p) in jobs {
            let (g, pr) = &mut lanes[li];
            g[i].xor_assign(&prods.next().expect("product"));
            if need_p {
                pr[i] = prods.next().expect("product");
            }
        }
        l += 1;
    }
    Ok(lanes.into_iter().map(|(g, _)| g).collect())
}

/// Tree reduction: returns `G` over all positions of each lane.
pub fn reduce_gp(p: &mut Party, mut lanes: Vec<Lane>) -> Result<Vec<BitBatch>> {
    check_lanes(&lanes)?;
    while lanes.iter().any(|l| l.0.len() > 1) {
        let mut pairs = Vec::new();
        for (g, pr) in &lanes {
            let final_step = g.len() == 2;
            for h in 0..g.len() / 2 {
                let (lo, hi) = (2 * h, 2 * h + 1);
                pairs.push((&pr[hi], &g[lo]));
                if !final_step {
                    pairs.push((&pr[hi], &pr[lo]));
                }
            }
        }
        let mut prods = and_many(p, &pairs)?.into_iter();
        for (g, pr) in lanes.iter_mut() {
            if g.len() < 2 {
                continue;
            }
            let final_step = g.len() == 2;
            let mut ng = Vec::with_capacity(g.len().div_ceil(2));
            let mut np = Vec::with_capacity(g.len().div_ceil(2));
            for h in 0..g.len() / 2 {
                ng.push(g[2 * h + 1].xor(&prods.next().expect("product")));
                if !final_step {
                    np.push(prods.next().expect("product"));
                } else {
                    np.push(BitBatch::zeros(0));
                }
            }
            if g.len() % 2 == 1 {
                ng.push(g.last().unwrap().clone());
                np.push(pr.last().unwrap().clone());
            }
            *g = ng;
            *pr = np;
        }
    }
    Ok(lanes.into_iter().map(|(mut g, _)| g.swap_remove(0)).collect())
}

/// Sklansky prefix AND: position `i` becomes the AND of positions `0..=i`.
pub fn prefix_and(p: &mut Party, mut lanes: Vec<Vec<BitBatch>>) -> Result<Vec<Vec<BitBatch>>> {
    if lanes.iter().any(|l| l.is_empty()) {
        return Err(Error::InvalidParameter("empty prefix lane".into()));
    }
    let n_max = lanes.iter().map(Vec::len).max().unwrap_or(0);
    let mut l = 0;
    while (1usize << l) < n_max {
        let mut jobs = Vec::new();
        let mut pairs = Vec::new();
        for (li, x) in lanes.iter().enumerate() {
            for i in 0..x.len() {
                if (i >> l) & 1 == 1 {
                    let j = ((i >> l) << l) - 1;
                    jobs.push((li, i));
                    pairs.push((&x[i], &x[j]));
                }
            }
        }
        let prods = and_many(p, &pairs)?;
        for ((li, i), v) in jobs.into_iter().zip(prods) {
            lanes[li][i] = v;
        }
        l += 1;
    }
    Ok(lanes)
}

/// Tree AND of all positions of each lane.
pub fn reduce_and(p: &mut Party, mut lanes: Vec<Vec<BitBatch>>) -> Result<Vec<BitBatch>> {
    if lanes.iter().any(|l| l.is_empty()) {
        return Err(Error::InvalidParameter("empty reduction lane".into()));
    }
    while lanes.iter().any(|l| l.len() > 1) {
        let mut pairs = Vec::new();
        for x in &lanes {
            for h in 0..x.len() / 2 {
                pairs.push((&x[2 * h], &x[2 * h + 1]));
            }
        }
        let mut prods = and_many(p, &pairs)?.into_iter();
        for x in lanes.iter_mut() {
            let mut nx = Vec::with_capacity(x.len().div_ceil(2));
            for _ in 0..x.len() / 2 {
                nx.push(prods.next().expect("product"));
            }
            if x.len() % 2 == 1 {
                nx.push(x.last().unwrap().clone());
            }
            *x = nx;
        }
    }
    Ok(lanes.into_iter().map(|mut x| x.swap_remove(0)).collect())
}
