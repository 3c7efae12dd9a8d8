use std::time::{Duration, Instant};

use anyhow::{bail, ensure, Context};
use fpsum::cost::{compare, CostReport};
use fpsum::fp::{derive_params, fl2sa, layered_sum, open_floats, sa2fl, share_floats, FpParams};
use fpsum::oracle::gen::generate;
use fpsum::oracle::{exact_sum, plain_pipeline, truncate_rational, PlainFloat};
use fpsum::primitives::{b2a, open};
use fpsum::ring::{share_bits, PackedBits, PartyId};
use fpsum::runtime::{run, run_tcp_party, CostLedger, Party, PartyRecord, Protocol, RunConfig, ScopeRecord};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::config::{BenchConfig, TransportKind};
use crate::report::{mean_and_median, BenchKind, BenchRecord, Phase, PhaseStat, SCHEMA_VERSION};

struct Session<T> {
    outputs: Vec<T>,
    ledger: CostLedger,
}

// Ledger of a single party's view. Bits are what this party sent.
fn party_ledger(id: PartyId, recs: Vec<PartyRecord>) -> CostLedger {
    let records = recs
        .into_iter()
        .map(|r| {
            let mut per = [0; 3];
            per[id.index()] = r.bits;
            ScopeRecord {
                protocol: r.tag,
                width: r.width,
                items: r.items,
                arg: r.arg,
                bits: r.bits,
                bits_per_party: per,
                exclusive_bits: r.exclusive_bits,
                rounds: r.rounds,
                depth: r.depth,
                parent: r.parent,
            }
        })
        .collect();
    CostLedger { records }
}

fn execute<T, F>(cfg: &BenchConfig, seed: u64, f: F) -> anyhow::Result<Session<T>>
where
    T: Send,
    F: Fn(&mut Party) -> fpsum::Result<T> + Sync,
{
    match (cfg.transport, cfg.endpoints, cfg.party) {
        (TransportKind::Simulated, _, _) => {
            let out = run(&RunConfig::seeded(seed), f)?;
            Ok(Session { outputs: out.outputs.into(), ledger: out.ledger })
        }
        (TransportKind::Tcp, Some(eps), Some(id)) => {
            let (out, recs, _) = run_tcp_party(id, &eps, seed, false, &f)?;
            Ok(Session { outputs: vec![out], ledger: party_ledger(id, recs) })
        }
        (TransportKind::Tcp, Some(eps), None) => {
            let f = &f;
            let results: Vec<fpsum::Result<(T, Vec<PartyRecord>, _)>> = std::thread::scope(|s| {
                let hs: Vec<_> = PartyId::ALL
                    .into_iter()
                    .map(|id| s.spawn(move || run_tcp_party(id, &eps, seed, false, f)))
                    .collect();
                hs.into_iter().map(|h| h.join().unwrap_or(Err(fpsum::Error::PartyPanicked))).collect()
            });
            let mut outputs = Vec::new();
            let mut recs = Vec::new();
            for r in results {
                let (o, rec, _) = r?;
                outputs.push(o);
                recs.push(rec);
            }
            let recs: [Vec<PartyRecord>; 3] = recs.try_into().map_err(|_| anyhow::anyhow!("missing party"))?;
            let ledger = CostLedger::aggregate(recs)?;
            ledger.verify_primitive_costs()?;
            Ok(Session { outputs, ledger })
        }
        (TransportKind::Tcp, None, _) => bail!("tcp transport needs endpoints"),
    }
}

/// Summed bits and rounds of the outermost invocations of `p`.
fn phase_cost(ledger: &CostLedger, p: Protocol) -> (u64, u32) {
    let recs = ledger.outermost(p);
    (recs.iter().map(|r| r.bits).sum(), recs.iter().map(|r| r.rounds).sum())
}

fn params(cfg: &BenchConfig) -> anyhow::Result<FpParams> {
    Ok(derive_params(cfg.precision, cfg.w)?)
}

/// Seeded inputs of one trial.
pub fn trial_inputs(cfg: &BenchConfig, trial: usize) -> Vec<PlainFloat> {
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.trial_seed(trial));
    generate(&mut rng, cfg.generator, cfg.precision, cfg.n)
}

/// Checks an opened sum against the plaintext pipeline and the exact
/// rational sum.
pub fn check_sum(xs: &[PlainFloat], got: &PlainFloat, prm: &FpParams) -> anyhow::Result<()> {
    let plain = plain_pipeline(xs, prm)?;
    let exact = truncate_rational(&exact_sum(xs), prm.e, prm.m);
    ensure!(plain == exact, "plaintext pipeline gives {plain}, exact sum truncates to {exact}");
    ensure!(*got == plain, "secure sum {got} differs from expected {plain}");
    Ok(())
}

struct FlsumTrial {
    times: [Duration; 4],
    ledger: CostLedger,
}

fn flsum_trial(cfg: &BenchConfig, prm: &FpParams, trial: usize) -> anyhow::Result<FlsumTrial> {
    let xs = trial_inputs(cfg, trial);
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.trial_seed(trial) ^ 0x5eed);
    let shares = share_floats(&xs, prm, &mut rng)?;
    let n = cfg.n;
    let s = execute(cfg, cfg.trial_seed(trial), |p| {
        let x = &shares[p.id().index()];
        let (y, times) = p.scope(Protocol::FLSum, prm.k, n, |p| {
            let t0 = Instant::now();
            let acc = fl2sa(p, x, prm)?;
            let t1 = Instant::now();
            let acc = layered_sum(p, acc, &[n], prm)?;
            let t2 = Instant::now();
            let y = sa2fl(p, &acc, prm)?;
            let t3 = Instant::now();
            Ok((y, [t1 - t0, t2 - t1, t3 - t2, t3 - t0]))
        })?;
        let out = open_floats(p, &y, prm)?;
        Ok((out[0], times))
    })?;
    for (got, _) in &s.outputs {
        check_sum(&xs, got, prm)
            .with_context(|| format!("{} w={} n={} trial {trial}", cfg.precision, cfg.w, n))?;
    }
    // The slowest party sets the wall clock of each phase.
    let mut times = [Duration::ZERO; 4];
    for (_, t) in &s.outputs {
        for (a, b) in times.iter_mut().zip(t) {
            *a = (*a).max(*b);
        }
    }
    Ok(FlsumTrial { times, ledger: s.ledger })
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

/// Runs all trials of one configuration. Every trial is checked against
/// the oracles and must produce the same ledger.
pub fn run_flsum_bench(cfg: &BenchConfig) -> anyhow::Result<BenchRecord> {
    cfg.validate()?;
    let prm = params(cfg)?;
    let mut samples: [Vec<f64>; 4] = Default::default();
    let mut ledger: Option<CostLedger> = None;
    for t in 0..cfg.trials {
        let tr = flsum_trial(cfg, &prm, t)?;
        for (s, d) in samples.iter_mut().zip(tr.times) {
            s.push(ms(d));
        }
        match &ledger {
            None => ledger = Some(tr.ledger),
            Some(l) => ensure!(*l == tr.ledger, "trial {t} has a different cost ledger"),
        }
    }
    let ledger = ledger.expect("at least one trial");
    let tags = [Protocol::FL2SA, Protocol::SASum, Protocol::SA2FL, Protocol::FLSum];
    let phases = Phase::FLSUM
        .iter()
        .zip(tags)
        .zip(&samples)
        .map(|((&phase, tag), s)| {
            let (mean_ms, median_ms) = mean_and_median(s);
            let (bits, rounds) = phase_cost(&ledger, tag);
            PhaseStat { phase, mean_ms, median_ms, bits, rounds }
        })
        .collect();
    Ok(BenchRecord {
        schema_version: SCHEMA_VERSION,
        kind: BenchKind::Flsum,
        config: cfg.clone(),
        k: prm.k,
        phases,
        party_view: cfg.party,
        correct: true,
    })
}

/// Times `n` parallel B2A conversions into `Z_2^k`. The ledger must show
/// `3k` bits per conversion and two rounds.
pub fn run_b2a_bench(cfg: &BenchConfig, k: u32) -> anyhow::Result<BenchRecord> {
    cfg.validate()?;
    ensure!((1..=64).contains(&k), "k must be in 1..=64");
    let n = cfg.n;
    let mut ledger: Option<CostLedger> = None;
    let mut samples = Vec::new();
    for t in 0..cfg.trials {
        let mut rng = ChaCha12Rng::seed_from_u64(cfg.trial_seed(t));
        let bits = PackedBits::from_bools((0..n).map(|_| rng.gen::<bool>()));
        let shares = share_bits(&bits, &mut rng);
        let s = execute(cfg, cfg.trial_seed(t), |p| {
            let t0 = Instant::now();
            let a = b2a::<u64>(p, &shares[p.id().index()], k)?;
            let el = t0.elapsed();
            Ok((open(p, &a, k)?, el))
        })?;
        let want: Vec<u64> = bits.iter().map(u64::from).collect();
        for (got, _) in &s.outputs {
            ensure!(*got == want, "B2A opened to wrong bits in trial {t}");
        }
        samples.push(ms(s.outputs.iter().map(|o| o.1).max().unwrap_or_default()));
        let (b, r) = (phase_cost(&s.ledger, Protocol::B2A).0, s.ledger.outermost(Protocol::B2A)[0].rounds);
        let full = cfg.party.is_none();
        ensure!(!full || (b, r) == (3 * k as u64 * n as u64, 2), "B2A cost {b} bits / {r} rounds");
        match &ledger {
            None => ledger = Some(s.ledger),
            Some(l) => ensure!(*l == s.ledger, "trial {t} has a different cost ledger"),
        }
    }
    let ledger = ledger.expect("at least one trial");
    let (mean_ms, median_ms) = mean_and_median(&samples);
    let bits = phase_cost(&ledger, Protocol::B2A).0;
    let rounds = ledger.outermost(Protocol::B2A).iter().map(|r| r.rounds).max().unwrap_or(0);
    Ok(BenchRecord {
        schema_version: SCHEMA_VERSION,
        kind: BenchKind::B2a,
        config: cfg.clone(),
        k,
        phases: vec![PhaseStat { phase: Phase::B2A, mean_ms, median_ms, bits, rounds }],
        party_view: cfg.party,
        correct: true,
    })
}

/// Securely sums explicit inputs over the simulated transport.
pub fn secure_sum(prm: &FpParams, xs: &[PlainFloat], seed: u64) -> anyhow::Result<PlainFloat> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let shares = share_floats(xs, prm, &mut rng)?;
    let out = run(&RunConfig::seeded(seed), |p| {
        let y = fpsum::fp::flsum(p, &shares[p.id().index()], prm)?;
        open_floats(p, &y, prm)
    })?;
    ensure!(out.outputs.iter().all(|o| o == &out.outputs[0]), "parties opened different results");
    Ok(out.outputs[0][0])
}

/// A quick end-to-end suite: every configuration and generator at a few
/// sizes, the cancellation example and a B2A batch.
pub fn selftest(seed: u64) -> Vec<(String, anyhow::Result<()>)> {
    use fpsum::fp::Precision;
    use fpsum::oracle::gen::Generator;
    let mut out = Vec::new();
    for prec in [Precision::Single, Precision::Double] {
        for w in [16, 32] {
            for generator in Generator::ALL {
                for n in [1, 16, 100] {
                    let cfg = BenchConfig { seed, generator, ..BenchConfig::new(prec, w, n) };
                    let name = format!("flsum {prec} w={w} n={n} {}", generator.name());
                    out.push((name, run_flsum_bench(&cfg).map(|_| ())));
                }
            }
        }
    }
    let cancel = (|| {
        let prm = derive_params(Precision::Single, 16)?;
        let f = |v: f32| PlainFloat::from_f32(v);
        let tiny = 2f32.powi(-30);
        let got = secure_sum(&prm, &[f(1.0)?, f(tiny)?, f(-1.0)?], seed)?;
        ensure!(got.to_f32()? == tiny, "cancellation sum gave {got}");
        Ok(())
    })();
    out.push(("cancellation {1, 2^-30, -1}".into(), cancel));
    let cfg = BenchConfig { seed, ..BenchConfig::new(Precision::Single, 32, 16) };
    out.push(("b2a k=60 n=16".into(), run_b2a_bench(&cfg, 60).map(|_| ())));
    out
}

/// One FLSum session of the configuration, compared row by row with the
/// closed-form costs.
pub fn run_cost_report(cfg: &BenchConfig) -> anyhow::Result<CostReport> {
    cfg.validate()?;
    let prm = params(cfg)?;
    let tr = flsum_trial(cfg, &prm, 0)?;
    Ok(compare(&tr.ledger, &prm)?)
}
