//! Summation and regularization of superaccumulators, and the full FLSum.

use super::convert::fl2sa;
use super::extract::sa2fl;
use super::types::{split, FloatShared, SuperaccShared};
use super::FpParams;
use crate::blocks::trunc;
use std::ops::Range;

use crate::error::{Error, Result};
use crate::ring::ArithShares;
use crate::runtime::{Party, Protocol};

/// Sums each range of instances and regularizes every range sum with one
/// shared truncation. The carry out of the top block is dropped, so the
/// sums must fit the accumulator.
pub fn sasum_ranges(
    p: &mut Party,
    accs: &SuperaccShared,
    ranges: &[Range<usize>],
    params: &FpParams,
) -> Result<SuperaccShared> {
    let n = accs.len();
    if ranges.is_empty() {
        return Err(Error::InvalidParameter("empty summation".into()));
    }
    for r in ranges {
        if r.is_empty() || r.end > n {
            return Err(Error::InvalidParameter(format!("summation range {r:?} of {n}")));
        }
        if r.len() > params.layer_capacity() {
            return Err(Error::InvalidParameter(format!(
                "{} accumulators per sum exceed 2^(w-2) = {}",
                r.len(),
                params.layer_capacity()
            )));
        }
    }
    let (w, k, alpha) = (params.w, params.k, params.alpha as usize);
    p.scope(Protocol::SASum, k, n, |p| {
        let id = p.id();
        let sums: Vec<ArithShares<u64>> = accs
            .y
            .iter()
            .map(|blk| {
                let parts: Vec<ArithShares<u64>> = ranges.iter().map(|r| blk.slice(r.clone()).sum()).collect();
                ArithShares::concat(&parts.iter().collect::<Vec<_>>())
            })
            .collect::<Result<_>>()?;
        let all = ArithShares::concat(&sums.iter().collect::<Vec<_>>())?;
        // Offsetting by 2^{w-1} centers the remainders; 2^{2w-2} makes the
        // truncated value non-negative.
        let shifted = all.add_scalar(id, (1u64 << (w - 1)) + (1u64 << (2 * w - 2)));
        let carries = trunc(p, &shifted, k, w)?.add_scalar(id, (1u64 << (w - 2)).wrapping_neg());
        let rem = all.sub(&carries.scale(1u64 << w))?;
        let (carries, rem) = (split(&carries, alpha), split(&rem, alpha));
        let mut y = Vec::with_capacity(alpha);
        y.push(rem[0].clone());
        for i in 1..alpha {
            y.push(rem[i].add(&carries[i - 1])?);
        }
        Ok(SuperaccShared { y })
    })
}

fn chunks(start: usize, len: usize, group: usize) -> impl Iterator<Item = Range<usize>> {
    (start..start + len).step_by(group.max(1)).map(move |s| s..(s + group).min(start + len))
}

/// Sums consecutive groups of `group` instances, the last possibly shorter.
pub fn sasum_groups(
    p: &mut Party,
    accs: &SuperaccShared,
    group: usize,
    params: &FpParams,
) -> Result<SuperaccShared> {
    if group == 0 || group > params.layer_capacity() {
        return Err(Error::InvalidParameter(format!("group of {group} accumulators")));
    }
    let ranges: Vec<Range<usize>> = chunks(0, accs.len(), group).collect();
    sasum_ranges(p, accs, &ranges, params)
}

/// Sums all instances of `accs` into one, `n <= 2^{w-2}`.
pub fn sasum(p: &mut Party, accs: &SuperaccShared, params: &FpParams) -> Result<SuperaccShared> {
    sasum_ranges(p, accs, &[0..accs.len()], params)
}

/// Reduces consecutive segments of the given sizes to one accumulator
/// each. Every segment is a left-filled tree of regularizing sums with
/// arity `2^{w-2}`; all segments advance together, one SASum per level.
pub fn layered_sum(
    p: &mut Party,
    mut accs: SuperaccShared,
    sizes: &[usize],
    params: &FpParams,
) -> Result<SuperaccShared> {
    if sizes.is_empty() || sizes.contains(&0) || sizes.iter().sum::<usize>() != accs.len() {
        return Err(Error::InvalidParameter(format!("segments {sizes:?} of {} accumulators", accs.len())));
    }
    let cap = params.layer_capacity();
    let mut counts = sizes.to_vec();
    let mut first = true;
    while first || counts.iter().any(|&c| c > 1) {
        let mut ranges = Vec::new();
        // Segments already reduced to one accumulator are carried over.
        let mut source = Vec::new();
        let mut off = 0;
        for c in counts.iter_mut() {
            if *c > 1 || first {
                for r in chunks(off, *c, cap) {
                    source.push(accs.len() + ranges.len());
                    ranges.push(r);
                }
            } else {
                source.push(off);
            }
            off += *c;
            *c = if *c > 1 || first { c.div_ceil(cap) } else { 1 };
        }
        let summed = sasum_ranges(p, &accs, &ranges, params)?;
        accs = if source.iter().all(|&s| s >= accs.len()) {
            summed
        } else {
            let y = accs
                .y
                .iter()
                .zip(&summed.y)
                .map(|(a, s)| Ok(ArithShares::concat(&[a, s])?.select(&source)))
                .collect::<Result<_>>()?;
            SuperaccShared { y }
        };
        first = false;
    }
    Ok(accs)
}

/// Exact sum of a batch of floats, truncated onto the mantissa.
pub fn flsum(p: &mut Party, xs: &FloatShared, params: &FpParams) -> Result<FloatShared> {
    flsum_segments(p, xs, &[xs.len()], params)
}

/// Independent sums of consecutive segments of `xs`, one output each.
pub fn flsum_segments(p: &mut Party, xs: &FloatShared, sizes: &[usize], params: &FpParams) -> Result<FloatShared> {
    if xs.is_empty() {
        return Err(Error::InvalidParameter("FLSum of no inputs".into()));
    }
    p.scope(Protocol::FLSum, params.k, xs.len(), |p| {
        let accs = fl2sa(p, xs, params)?;
        let total = layered_sum(p, accs, sizes, params)?;
        sa2fl(p, &total, params)
    })
}
