mod config;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use dynwalk::estimate::{estimate, summarize, Method};
use dynwalk::moments::{EdgeProb, MomentProfile};
use dynwalk::oracle::oracle_summary;
use dynwalk::sim::{simulate, Init, ObservationSeries, SimConfig};
use dynwalk::study::{curves_from_table, qq_data, run_replications, write_curves_csv, ReplicationTable};

use config::{Common, InitArg};

#[derive(Debug, Parser)]
#[command(name = "dynwalk", version, about = "Random walkers on a dynamic Erdos-Renyi graph")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate one occupation-count series and write it as CSV
    Simulate(Common),
    /// Estimate p from a series CSV and print a JSON report
    Estimate {
        /// Series CSV produced by `simulate`
        input: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Print the closed-form moment profile at p as JSON
    Moments(Common),
    /// Print exact pair-chain quantities (n <= 4) as JSON
    Oracle(Common),
    /// Run replications over a p grid and write the estimate table
    Replicate(Common),
    /// Normal Q-Q data for one estimator at one p
    Qq {
        /// Read estimates from an existing replication table instead of simulating
        #[arg(long)]
        table: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Sensitivity ratios lambda, mu, nu over a p grid
    Curves(Common),
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: serde::Serialize>(value: &T, path: Option<&Path>) -> Result<()> {
    let mut out = output(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn cmd_simulate(c: &Common) -> Result<()> {
    let dims = c.dims()?;
    let init = match c.init {
        None | Some(InitArg::Uniform) => Init::Uniform,
        Some(InitArg::First) => Init::AllAtFirst,
    };
    let cfg = SimConfig::new(dims, EdgeProb::new(c.single_p()?)?, c.t.unwrap_or(4000), c.seed.unwrap_or(1))?
        .with_burn_in(c.burn_in())
        .with_init(init);
    let series = simulate(&cfg)?;
    let mut out = output(c.out.as_deref())?;
    series.write_csv(&mut out)?;
    out.flush()?;
    Ok(())
}

fn cmd_estimate(input: &Path, c: &Common) -> Result<()> {
    let file = File::open(input).with_context(|| format!("opening {}", input.display()))?;
    let series = ObservationSeries::read_csv(io::BufReader::new(file))?;
    let dims = series.dims();
    if c.n.is_some_and(|n| n != dims.n()) || c.m.is_some_and(|m| m != dims.m()) {
        bail!("series has n = {}, M = {}, which disagrees with the given --n/--m", dims.n(), dims.m());
    }
    let method = c.single_method(Method::Mom)?;
    let mut report = estimate(&summarize(&series)?, method, c.tol())?;
    report.burn_in = c.burn_in.or(series.burn_in());
    write_json(&report, c.out.as_deref())
}

fn cmd_moments(c: &Common) -> Result<()> {
    let profile = MomentProfile::evaluate(c.dims()?, EdgeProb::new(c.single_p()?)?)?;
    write_json(&profile, c.out.as_deref())
}

fn cmd_oracle(c: &Common) -> Result<()> {
    let dims = c.dims()?;
    let summary = oracle_summary(dims.n(), dims.m(), EdgeProb::new(c.single_p()?)?)?;
    write_json(&summary, c.out.as_deref())
}

fn cmd_replicate(c: &Common) -> Result<()> {
    let cfg = c.study(None)?;
    let table = run_replications(&cfg)?;
    let mut out = output(c.out.as_deref())?;
    table.write_csv(&mut out)?;
    out.flush()?;
    for &p in &cfg.p_grid {
        for &method in &cfg.methods {
            let s = table.summary(p, method);
            eprintln!(
                "p={p} method={method} mean={:.6} sd={:.6} rmse={:.6} clamped={}",
                s.mean, s.sd, s.rmse, s.n_clamped
            );
        }
    }
    Ok(())
}

fn cmd_qq(table_path: Option<&Path>, c: &Common) -> Result<()> {
    let method = c.single_method(Method::Mom)?;
    let p = match c.p_list()? {
        Some(ps) if ps.len() == 1 => ps[0],
        Some(_) => bail!("--p must be a single value here"),
        None => 0.5,
    };
    let table = match table_path {
        Some(path) => {
            let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
            ReplicationTable::read_csv(io::BufReader::new(f))?
        }
        None => {
            let mut cfg = c.study(Some(vec![p]))?;
            cfg.methods = vec![method];
            run_replications(&cfg)?
        }
    };
    let samples = table.estimates(p, method, true);
    let qq = qq_data(&samples)?;
    let mut out = output(c.out.as_deref())?;
    qq.write_csv(&mut out)?;
    out.flush()?;
    eprintln!(
        "qq correlation={:.6} samples={} clamped_dropped={}",
        qq.correlation,
        samples.len(),
        table.clamped_count(p, method)
    );
    Ok(())
}

fn cmd_curves(c: &Common) -> Result<()> {
    let mut cfg = c.study(c.p_list()?.or_else(|| c.curve_grid()))?;
    cfg.methods = vec![Method::Mom, Method::Ls];
    let table = run_replications(&cfg)?;
    let points = curves_from_table(&table, &cfg)?;
    let mut out = output(c.out.as_deref())?;
    write_curves_csv(&points, &mut out)?;
    out.flush()?;
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Simulate(c) => cmd_simulate(&c.with_file()?),
        Command::Estimate { input, common } => cmd_estimate(&input, &common.with_file()?),
        Command::Moments(c) => cmd_moments(&c.with_file()?),
        Command::Oracle(c) => cmd_oracle(&c.with_file()?),
        Command::Replicate(c) => cmd_replicate(&c.with_file()?),
        Command::Qq { table, common } => cmd_qq(table.as_deref(), &common.with_file()?),
        Command::Curves(c) => cmd_curves(&c.with_file()?),
    }
}
