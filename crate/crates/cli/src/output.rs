use anyhow::{Context, Result};
use serde::Serialize;
use std::path::PathBuf;

#[derive(Debug, Clone)]
pub struct OutputContext {
    pub out: Option<PathBuf>,
    pub csv: bool,
    pub seed: u64,
    pub tol_feas: f64,
    pub tol_gap: f64,
}

/// Report envelope shared by all commands: payload plus enough metadata to
/// reproduce the run.
#[derive(Debug, Serialize)]
pub struct Report<T: Serialize> {
    pub command: &'static str,
    pub version: &'static str,
    pub config_hash: String,
    pub seed: u64,
    #[serde(flatten)]
    pub payload: T,
}

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

impl OutputContext {
    pub fn envelope<T: Serialize>(
        &self,
        command: &'static str,
        config_repr: &str,
        payload: T,
    ) -> Report<T> {
        Report {
            command,
            version: env!("CARGO_PKG_VERSION"),
            config_hash: format!("{:016x}", fnv1a64(config_repr.as_bytes())),
            seed: self.seed,
            payload,
        }
    }

    /// Writes JSON (default) or the caller-rendered CSV, to the configured
    /// path or stdout.
    pub fn emit<T: Serialize>(&self, report: &Report<T>, csv: impl FnOnce() -> String) -> Result<()> {
        let body = if self.csv {
            csv()
        } else {
            let mut s = serde_json::to_string_pretty(report).context("serializing report")?;
            s.push('\n');
            s
        };
        match &self.out {
            Some(path) => std::fs::write(path, body)
                .with_context(|| format!("writing report to {}", path.display()))?,
            None => print!("{body}"),
        }
        Ok(())
    }
}
