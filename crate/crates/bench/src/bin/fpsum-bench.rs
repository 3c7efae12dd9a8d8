use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use fpsum::fp::{derive_params, Precision};
use fpsum::oracle::gen::Generator;
use fpsum::ring::PartyId;
use fpsum_bench::{
    emit_report, parse_endpoints, run_b2a_bench, run_cost_report, run_flsum_bench, selftest, BenchConfig, Format,
    TransportKind,
};

#[derive(Parser)]
#[command(name = "fpsum-bench", version, about = "Three-party secure floating-point summation harness")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Time FLSum per phase and check every result against the oracles.
    Flsum(Common),
    /// Time batches of B2A conversions.
    B2a {
        #[command(flatten)]
        common: Common,
        /// Target ring width; defaults to 2w.
        #[arg(long)]
        k: Option<u32>,
    },
    /// Run a short correctness suite over all configurations.
    Selftest {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Compare one session's measured costs with the closed-form rows.
    Cost(Common),
}

#[derive(Args)]
struct Common {
    /// Comma-separated precisions.
    #[arg(long, value_delimiter = ',', default_value = "single")]
    precision: Vec<Precision>,
    /// Comma-separated block widths.
    #[arg(long, value_delimiter = ',', default_value = "16")]
    w: Vec<u32>,
    /// Comma-separated input counts.
    #[arg(long, value_delimiter = ',', default_value = "16")]
    n: Vec<usize>,
    #[arg(long, default_value_t = 1)]
    trials: usize,
    #[arg(long, default_value = "simulated")]
    transport: TransportKind,
    /// host:port,host:port,host:port for P1, P2, P3.
    #[arg(long)]
    endpoints: Option<String>,
    /// With tcp, run only this party (1, 2 or 3).
    #[arg(long)]
    party_id: Option<u8>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value = "uniform")]
    generator: Generator,
    #[arg(long, default_value = "table")]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn configs(&self) -> anyhow::Result<Vec<BenchConfig>> {
        let endpoints = self.endpoints.as_deref().map(parse_endpoints).transpose()?;
        let party = self.party_id.map(PartyId::new).transpose()?;
        let mut out = Vec::new();
        for &precision in &self.precision {
            for &w in &self.w {
                for &n in &self.n {
                    let cfg = BenchConfig {
                        trials: self.trials,
                        transport: self.transport,
                        endpoints,
                        party,
                        seed: self.seed,
                        generator: self.generator,
                        ..BenchConfig::new(precision, w, n)
                    };
                    cfg.validate()?;
                    out.push(cfg);
                }
            }
        }
        Ok(out)
    }

    fn write(&self, text: &str) -> anyhow::Result<()> {
        match &self.out {
            Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
            None => Ok(std::io::stdout().write_all(text.as_bytes())?),
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    match cli.cmd {
        Cmd::Flsum(c) => {
            let mut records = Vec::new();
            for cfg in c.configs()? {
                records.push(run_flsum_bench(&cfg)?);
            }
            c.write(&emit_report(&records, c.format)?)?;
        }
        Cmd::B2a { common: c, k } => {
            let mut records = Vec::new();
            for cfg in c.configs()? {
                records.push(run_b2a_bench(&cfg, k.unwrap_or(2 * cfg.w))?);
            }
            c.write(&emit_report(&records, c.format)?)?;
        }
        Cmd::Cost(c) => {
            let mut text = String::new();
            for cfg in c.configs()? {
                let prm = derive_params(cfg.precision, cfg.w)?;
                let rep = run_cost_report(&cfg)?;
                match c.format {
                    Format::Json => text.push_str(&rep.to_json()),
                    _ => {
                        text.push_str(&format!(
                            "{} w={} n={} (alpha={}, beta={}, k={})\n",
                            cfg.precision, cfg.w, cfg.n, prm.alpha, prm.beta, prm.k
                        ));
                        text.push_str(&rep.to_text());
                    }
                }
                text.push('\n');
                if rep.mismatches().next().is_some() {
                    c.write(&text)?;
                    anyhow::bail!("measured primitive costs disagree with their closed forms");
                }
            }
            c.write(&text)?;
        }
        Cmd::Selftest { seed } => {
            let results = selftest(seed);
            let mut ok = true;
            for (name, r) in &results {
                match r {
                    Ok(()) => println!("PASS {name}"),
                    Err(e) => {
                        ok = false;
                        println!("FAIL {name}: {e:#}");
                    }
                }
            }
            let failed = results.iter().filter(|r| r.1.is_err()).count();
            println!("{} passed, {failed} failed", results.len() - failed);
            return Ok(ok);
        }
    }
    Ok(true)
}
