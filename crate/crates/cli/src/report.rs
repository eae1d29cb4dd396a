use std::path::PathBuf;
use std::time::Instant;

use grasslearn::Result;
use serde::Serialize;
use serde_json::Value;

/// Run-wide settings shared by every subcommand.
pub struct Context {
    pub seed: u64,
    report: Option<PathBuf>,
    threads: usize,
    started: Instant,
}

#[derive(Serialize)]
struct Report<'a, C: Serialize> {
    tool: &'static str,
    version: &'static str,
    library_version: &'static str,
    command: &'a str,
    seed: u64,
    threads: usize,
    wall_time_s: f64,
    config: &'a C,
    result: Value,
}

impl Context {
    pub fn new(seed: u64, report: Option<PathBuf>, threads: usize) -> Self {
        Self {
            seed,
            report,
            threads,
            started: Instant::now(),
        }
    }

    pub fn has_report_path(&self) -> bool {
        self.report.is_some()
    }

    /// Wraps `result` with the run metadata and writes it out.
    pub fn emit<C: Serialize>(&self, command: &str, config: &C, result: Value) -> Result<()> {
        let report = Report {
            tool: "grasslearn",
            version: env!("CARGO_PKG_VERSION"),
            library_version: grasslearn::VERSION,
            command,
            seed: self.seed,
            threads: self.threads,
            wall_time_s: self.started.elapsed().as_secs_f64(),
            config,
            result,
        };
        let text = serde_json::to_string_pretty(&report)?;
        match &self.report {
            Some(path) => std::fs::write(path, text + "\n")?,
            None => println!("{text}"),
        }
        Ok(())
    }
}
