mod args;
mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use serde_json::Value;

use args::{Cli, Command};
use commands::{CliError, Outcome};
use manifest::RunManifest;

const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;

fn default_out_dir(command: &str) -> PathBuf {
    let stamp = chrono::Local::now().format("%Y%m%dT%H%M%S%.3f");
    PathBuf::from("runs").join(format!("{command}-{stamp}-{}", std::process::id()))
}

fn fail(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_USAGE)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    let started_at = chrono::Local::now().to_rfc3339();

    let (mut command, threads, rerun_of) = match cli.command {
        Command::Rerun(r) => {
            let path = std::path::absolute(&r.manifest).unwrap_or(r.manifest);
            match RunManifest::read(&path) {
                Ok(m) => (m.params, cli.threads.or(m.threads), Some(path)),
                Err(e) => return fail(format!("cannot read manifest {}: {e}", path.display())),
            }
        }
        c => (c, cli.threads, None),
    };
    if let Err(e) = command.absolutize() {
        return fail(e);
    }
    if let Some(n) = threads {
        if n == 0 {
            return fail("--threads must be at least 1");
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            return fail(e);
        }
    }
    let out = cli.out.unwrap_or_else(|| default_out_dir(command.name()));
    if let Err(e) = std::fs::create_dir_all(&out) {
        return fail(format!("cannot create {}: {e}", out.display()));
    }
    let out = std::path::absolute(&out).unwrap_or(out);

    let result = command.run(&out);
    let (outcome, code, error) = match result {
        Ok(o) => {
            let code = match o.verdict {
                Some(v) if !v.passed() => EXIT_FAIL,
                _ => 0,
            };
            (o, code, None)
        }
        Err(e) => {
            let outcome = Outcome { summary: Value::Null, ..Outcome::default() };
            (outcome, EXIT_USAGE, Some(e))
        }
    };
    let manifest = RunManifest {
        tool: "diffract".to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        command: command.name().to_string(),
        params: command,
        seeds: outcome.seeds,
        threads,
        inputs: outcome.inputs,
        outputs: outcome.outputs,
        out_dir: out.clone(),
        rerun_of,
        started_at,
        duration_seconds: started.elapsed().as_secs_f64(),
        exit_code: code as i32,
        verdict: outcome.verdict,
        summary: outcome.summary,
        error: error.as_ref().map(CliError::to_string),
    };
    match manifest.write(&out) {
        Ok(path) => {
            if let Some(e) = &error {
                eprintln!("error: {e}");
            } else {
                println!("{}", serde_json::to_string(&manifest.summary).unwrap_or_default());
                if let Some(v) = manifest.verdict {
                    println!("verdict: {}", if v.passed() { "PASS" } else { "FAIL" });
                }
            }
            println!("manifest: {}", path.display());
        }
        Err(e) => return fail(format!("cannot write manifest: {e}")),
    }
    ExitCode::from(code)
}
