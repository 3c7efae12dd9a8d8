use std::fmt;
use std::net::SocketAddr;
use std::str::FromStr;

use anyhow::{bail, Context};
use fpsum::fp::Precision;
use fpsum::oracle::gen::Generator;
use fpsum::ring::PartyId;
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TransportKind {
    Simulated,
    Tcp,
}

impl FromStr for TransportKind {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        match s {
            "simulated" | "sim" => Ok(TransportKind::Simulated),
            "tcp" => Ok(TransportKind::Tcp),
            _ => bail!("unknown transport {s:?} (simulated or tcp)"),
        }
    }
}

impl fmt::Display for TransportKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TransportKind::Simulated => "simulated",
            TransportKind::Tcp => "tcp",
        })
    }
}

/// Parses `host:port,host:port,host:port`.
pub fn parse_endpoints(s: &str) -> anyhow::Result<[SocketAddr; 3]> {
    let addrs = s
        .split(',')
        .map(|a| a.trim().parse::<SocketAddr>().with_context(|| format!("bad endpoint {a:?}")))
        .collect::<anyhow::Result<Vec<_>>>()?;
    addrs
        .try_into()
        .map_err(|v: Vec<_>| anyhow::anyhow!("expected 3 endpoints, got {}", v.len()))
}

/// One benchmark point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchConfig {
    pub precision: Precision,
    pub w: u32,
    pub n: usize,
    pub trials: usize,
    pub transport: TransportKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub endpoints: Option<[SocketAddr; 3]>,
    /// Join a TCP session as this party only. Without it, all three run
    /// in this process.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub party: Option<PartyId>,
    pub seed: u64,
    pub generator: Generator,
}

impl BenchConfig {
    pub fn new(precision: Precision, w: u32, n: usize) -> Self {
        BenchConfig {
            precision,
            w,
            n,
            trials: 1,
            transport: TransportKind::Simulated,
            endpoints: None,
            party: None,
            seed: 0,
            generator: Generator::Uniform,
        }
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.n == 0 {
            bail!("n must be at least 1");
        }
        if self.trials == 0 {
            bail!("trials must be at least 1");
        }
        if !matches!(self.w, 16 | 32) {
            bail!("w must be 16 or 32");
        }
        match (self.transport, self.endpoints.is_some()) {
            (TransportKind::Tcp, false) => bail!("tcp transport needs --endpoints"),
            (TransportKind::Simulated, true) => bail!("--endpoints only applies to tcp"),
            _ => {}
        }
        if self.party.is_some() && self.transport != TransportKind::Tcp {
            bail!("--party-id only applies to tcp");
        }
        Ok(())
    }

    /// Seed of trial `t`.
    pub fn trial_seed(&self, t: usize) -> u64 {
        self.seed.wrapping_add(t as u64)
    }
}
