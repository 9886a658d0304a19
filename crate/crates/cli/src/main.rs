mod args;
mod output;
mod run;
mod space;

use std::process::ExitCode;
use std::time::Instant;

use anyhow::Result;
use clap::Parser;

use args::{Cli, Command};
use output::{emit, strip_wall_time, Report};

fn report_for(cli: &Cli) -> Result<(Report, output::Table)> {
    let start = Instant::now();
    let run = run::execute(cli)?;
    let violation = run.violation();
    let report = Report {
        command: cli.command.name(),
        config: cli.clone(),
        verdict: if violation { "violation" } else { "pass" }.into(),
        results: run.results,
        diagnostics: run.diagnostics,
        wall_time_ms: start.elapsed().as_millis() as u64,
    };
    Ok((report, run.table))
}

fn main_inner(cli: Cli) -> Result<ExitCode> {
    if let Some(n) = cli.common.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    if let Command::Replay { report } = &cli.command {
        let original = std::fs::read_to_string(report)?;
        let mut config = run::config_of(report)?;
        config.common.out = cli.common.out.clone();
        let (fresh, table) = report_for(&config)?;
        emit(&fresh, &table, cli.common.out.as_deref())?;
        let same = strip_wall_time(&original) == strip_wall_time(&fresh.to_json());
        eprintln!("replay: {}", if same { "identical" } else { "differs" });
        return Ok(ExitCode::from(if same { 0 } else { 1 }));
    }
    let (report, table) = report_for(&cli)?;
    emit(&report, &table, cli.common.out.as_deref())?;
    for d in &report.diagnostics {
        eprintln!("{d}");
    }
    eprintln!("verdict: {}", report.verdict);
    Ok(ExitCode::from(if report.violation() { 1 } else { 0 }))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
