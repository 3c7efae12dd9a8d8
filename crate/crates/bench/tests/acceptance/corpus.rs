use anyhow::{ensure, Context};
use fpsum::fp::{derive_params, flsum_segments, open_floats, share_floats};
use fpsum::oracle::gen::{generate, Generator};
use fpsum::oracle::PlainFloat;
use fpsum::runtime::{run, RunConfig};
use fpsum_bench::check_sum;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::{Outcome, CONFIGS};

const SETS: usize = 1000;
// Inputs per secure session; segments keep the sums independent.
const BATCH: usize = 16384;

pub fn check() -> Outcome {
    let mut sums = 0usize;
    for (ci, (prec, w)) in CONFIGS.into_iter().enumerate() {
        let prm = derive_params(prec, w)?;
        for log_n in 4..=12u32 {
            let n = 1usize << log_n;
            let per = (BATCH / n).max(1);
            for first in (0..SETS).step_by(per) {
                let ids: Vec<usize> = (first..SETS.min(first + per)).collect();
                let sets: Vec<Vec<PlainFloat>> = ids
                    .iter()
                    .map(|&s| {
                        let seed = ((ci as u64) << 40) | ((log_n as u64) << 32) | s as u64;
                        generate(&mut ChaCha12Rng::seed_from_u64(seed), Generator::ALL[s % 4], prec, n)
                    })
                    .collect();
                let xs: Vec<PlainFloat> = sets.concat();
                let seed = ((ci as u64) << 40) | ((log_n as u64) << 32) | first as u64 | 1 << 63;
                let shares = share_floats(&xs, &prm, &mut ChaCha12Rng::seed_from_u64(seed))?;
                let sizes = vec![n; sets.len()];
                let out = run(&RunConfig::seeded(seed), |p| {
                    let y = flsum_segments(p, &shares[p.id().index()], &sizes, &prm)?;
                    open_floats(p, &y, &prm)
                })?;
                let [a, b, c] = &out.outputs;
                ensure!(a == b && b == c, "{prec} w={w} n={n}: parties opened different sums");
                for ((set, got), id) in sets.iter().zip(a).zip(&ids) {
                    check_sum(set, got, &prm)
                        .with_context(|| format!("{prec} w={w} n={n} set {id} ({})", Generator::ALL[id % 4].name()))?;
                    sums += 1;
                }
            }
        }
    }
    Ok(format!("{sums} sums ({SETS} sets x 9 sizes x 4 configs) equal the plaintext pipeline and exact oracle"))
}
