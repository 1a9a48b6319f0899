//! The `tcens` command-line tool: argument handling, configuration merge,
//! report writing and the subcommands.

use std::path::PathBuf;

use anyhow::{Context, Result};
use log::debug;

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod report;

use args::{Cli, Command};
use config::{pick, FileConfig};

const DEFAULT_OUT: &str = "tcens_out";
/// Default worker count when neither the flag nor the config sets one.
pub const THREADS_ENV: &str = "TCENS_THREADS";

/// How a run ended when it did not fail outright.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    /// Some ensemble members failed; results cover the rest.
    Partial,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Success => 0,
            Outcome::Partial => 2,
        }
    }
}

fn init_threads(n: Option<usize>) {
    #[cfg(feature = "parallel")]
    {
        // a second call in the same process keeps the first pool
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.unwrap_or(0)).build_global() {
            debug!("thread pool already set: {e}");
        }
    }
    #[cfg(not(feature = "parallel"))]
    debug!("built without the parallel feature; ignoring threads = {n:?}");
}

pub fn run(cli: Cli) -> Result<Outcome> {
    let file = match &cli.common.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let env_threads = match std::env::var(THREADS_ENV) {
        Ok(v) => Some(v.trim().parse::<usize>().with_context(|| format!("{THREADS_ENV}='{v}' is not a thread count"))?),
        Err(_) => None,
    };
    init_threads(pick(cli.common.threads, file.threads).or(env_threads));
    let out = pick(cli.common.out.clone(), file.out.clone()).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    match cli.command {
        Command::Track(a) => commands::track::run(a, &file, &out),
        Command::Verify(a) => commands::verify::run(a, &file, &out),
        Command::Skill(a) => commands::skill::run(a, &file, &out),
        Command::Energy(a) => commands::energy::run(a, &file, &out),
        Command::Synth(a) => commands::synth::run(a, &file, &out),
    }
}
