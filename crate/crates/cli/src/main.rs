use std::process::ExitCode;

use clap::Parser;
use critband_cli::{run, RunConfig, Threads};

fn main() -> ExitCode {
    let cfg = RunConfig::parse();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Threads::Count(n) = cfg.threads {
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let outcome = match pool.install(|| run(&cfg)) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    match outcome.write(&cfg.out, &cfg.format) {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    }
    for line in &outcome.summary {
        println!("{line}");
    }
    if cfg.check {
        for c in &outcome.checks {
            let mark = if c.passed { "PASS" } else { "FAIL" };
            if c.detail.is_empty() {
                println!("{mark} {}", c.name);
            } else {
                println!("{mark} {} ({})", c.name, c.detail);
            }
        }
        if !outcome.all_passed() {
            return ExitCode::from(1);
        }
    }
    ExitCode::SUCCESS
}
