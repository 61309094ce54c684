// SPDX-License-Identifier: Apache-2.0
//! `ftl`: batch front end for library enumeration, VT training, yield
//! analysis, chain programming, drift sweeps and netlist mapping.
//!
//! Exit status is 0 on success, 1 on usage or input errors and 2 when a
//! run completes but fails its verification (equivalence, yield,
//! convergence or timing).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ftl::flows::{self, Detection};
use ftl::formats::{self, format_weights, parse_weights};
use ftl::io::{header, read, write_atomic};
use ftl::{FlowError, Result, RunConfig};
use ftl_core::synth::{parse_blif_with_library, Policy, TechTable, TimingStage};
use ftl_core::trainer::VtDatabase;
use ftl_core::{Library, ThresholdFunction, TruthTable};

#[derive(Parser, Debug)]
#[command(name = "ftl", version, about = "Flash threshold logic design flow")]
struct Cli {
    /// Config file of `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one config key; may be repeated.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Base seed for Monte-Carlo sampling (the `seed` key).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Print the resolved configuration and exit.
    #[arg(long, global = true)]
    show_config: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Args, Debug)]
struct LibraryArg {
    /// Library file from `enumerate`; the 5-input library when omitted.
    #[arg(long)]
    library: Option<PathBuf>,
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct FunctionArg {
    /// Weights and threshold, e.g. `3,3,2,1,1;8`.
    #[arg(long)]
    function: Option<String>,
    /// Library index.
    #[arg(long)]
    index: Option<usize>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PolicyArg {
    Benefit,
    Exhaustive,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write the library of positive threshold classes.
    Enumerate {
        /// Largest arity to enumerate (1 to 5).
        #[arg(long = "n", default_value_t = 5)]
        n: usize,
        /// Output file; stdout when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Decide whether a truth table is a threshold function.
    Detect {
        /// Lowercase hex, minterm 0 in the least significant bit.
        #[arg(long)]
        table: String,
        /// Number of inputs of the table.
        #[arg(long)]
        arity: usize,
        #[command(flatten)]
        library: LibraryArg,
    },
    /// Train every library function on the nominal cell.
    Train {
        #[command(flatten)]
        library: LibraryArg,
        /// Assignment database to write.
        #[arg(long)]
        db: PathBuf,
        /// Per-function training report (CSV).
        #[arg(long)]
        report: PathBuf,
        /// `max` or a handicap value; overrides `train_handicap`.
        #[arg(long)]
        handicap: Option<String>,
    },
    /// Monte-Carlo yield with error-type database and on-chip fallback.
    Yield {
        #[command(flatten)]
        function: FunctionArg,
        #[command(flatten)]
        library: LibraryArg,
        /// Training population size.
        #[arg(long)]
        n_mc: Option<usize>,
        /// Test population size.
        #[arg(long)]
        n_test: Option<usize>,
        /// VT standard deviation in volts.
        #[arg(long)]
        sigma_vt: Option<f64>,
        /// Seed of the test population; must differ from `--seed`.
        #[arg(long)]
        test_seed: Option<u64>,
        /// Write the resulting database here.
        #[arg(long)]
        db: Option<PathBuf>,
    },
    /// Plan programming of a chain of cells from a database.
    Program {
        /// Database written by `train` or `yield`.
        #[arg(long)]
        db: PathBuf,
        /// Number of cells on the chain; targets repeat round-robin.
        #[arg(long)]
        cells: usize,
        /// Plan file; stdout when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Sweep uniform VT drift over a trained database.
    Drift {
        /// Database written by `train`.
        #[arg(long)]
        db: PathBuf,
        #[command(flatten)]
        library: LibraryArg,
        /// Drifts in millivolts.
        #[arg(long, value_delimiter = ',', default_value = "0,1,2,5,10,20")]
        sweep: Vec<f64>,
    },
    /// Replace flip-flops and their threshold cones by FTL cells.
    Synth {
        /// Input netlist.
        #[arg(long)]
        blif: PathBuf,
        #[command(flatten)]
        library: LibraryArg,
        /// Replace only when area goes down, or every matchable flip-flop.
        #[arg(long, value_enum, default_value_t = PolicyArg::Benefit)]
        policy: PolicyArg,
        /// Technology table; the bundled one when omitted.
        #[arg(long)]
        tech: Option<PathBuf>,
        /// Rewritten netlist.
        #[arg(short, long)]
        output: PathBuf,
        /// JSON summary of the rewrite.
        #[arg(long)]
        report: PathBuf,
    },
    /// Retrain a launch cell to repair a setup or hold violation.
    TimingFix {
        /// Launch cell weights and threshold, e.g. `2,1,1;2`.
        #[arg(long)]
        function: String,
        /// Combinational delay from launch to capture.
        #[arg(long)]
        d2d: f64,
        /// Setup time of the capture flip-flop.
        #[arg(long)]
        setup: f64,
        /// Hold time of the capture flip-flop.
        #[arg(long)]
        hold: f64,
        /// Capture clock lateness relative to launch.
        #[arg(long, default_value_t = 0.0)]
        skew: f64,
        /// Clock period.
        #[arg(long)]
        period: f64,
        /// Handicap of the current assignment; middle of the range if omitted.
        #[arg(long)]
        launch_handicap: Option<f64>,
    },
    /// Compare two netlists for cost and equivalence.
    Report {
        /// Original netlist.
        #[arg(long)]
        before: PathBuf,
        /// Rewritten netlist.
        #[arg(long)]
        after: PathBuf,
        #[command(flatten)]
        library: LibraryArg,
        /// Technology table; the bundled one when omitted.
        #[arg(long)]
        tech: Option<PathBuf>,
    },
}

fn load_library(arg: &LibraryArg) -> Result<Library> {
    match &arg.library {
        Some(p) => formats::parse_library(&read(p)?, p),
        None => flows::enumerate(5),
    }
}

fn load_tech(path: &Option<PathBuf>) -> Result<TechTable> {
    match path {
        Some(p) => Ok(TechTable::parse(&read(p)?)?),
        None => Ok(TechTable::bundled()),
    }
}

fn load_databases(path: &Path, lib: &Library) -> Result<std::collections::BTreeMap<usize, VtDatabase>> {
    let records = formats::parse_database(&read(path)?, path)?;
    formats::assemble_databases(&records, lib, path)
}

fn parse_function(s: &str) -> Result<ThresholdFunction> {
    let (w, t) =
        parse_weights(s).ok_or_else(|| FlowError::Usage(format!("bad function `{s}`, expected w1,..,wn;T")))?;
    ThresholdFunction::new(w, t).map_err(|e| FlowError::Usage(e.to_string()))
}

fn emit(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(p) => write_atomic(p, text),
        None => {
            stdout(text);
            Ok(())
        }
    }
}

/// Prints to stdout, tolerating a closed pipe.
fn stdout(text: &str) {
    use std::io::Write;
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn pct(x: f64) -> String {
    format!("{:.2}%", 100.0 * x)
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cfg.apply_overrides(&cli.overrides)?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(FlowError::Usage("--jobs must be at least 1".into()));
        }
        let _ = rayon::ThreadPoolBuilder::new().num_threads(j).build_global();
    }
    if cli.show_config {
        stdout(&cfg.to_string());
        return Ok(());
    }
    let Some(command) = cli.command else {
        return Err(FlowError::Usage("no subcommand given; see --help".into()));
    };

    match command {
        Command::Enumerate { n, output } => {
            let lib = flows::enumerate(n)?;
            let text = header("enumerate", &cfg.hash()) + &formats::write_library(&lib);
            emit(output.as_deref(), &text)?;
            eprintln!("{} classes", lib.len());
        }
        Command::Detect { table, arity, library } => {
            let tt = TruthTable::from_hex(arity, &table).map_err(|e| FlowError::Usage(e.to_string()))?;
            let Detection { realization, class, .. } = flows::detect(tt, &load_library(&library)?);
            match (realization, class) {
                (Some(f), Some((index, neg, out))) => {
                    println!(
                        "threshold {} class {index} input_negations {neg:#x} output_negated {out}",
                        format_weights(&f)
                    );
                }
                (Some(f), None) => println!("threshold {}", format_weights(&f)),
                (None, _) => println!("not threshold"),
            }
        }
        Command::Train {
            library,
            db,
            report,
            handicap,
        } => {
            if let Some(h) = handicap {
                cfg.set("train_handicap", &h)?;
            }
            let lib = load_library(&library)?;
            let trained = flows::train_library(&lib, &cfg)?;
            let dbs: Vec<VtDatabase> = trained
                .iter()
                .map(|t| VtDatabase::nominal_only(lib.entries()[t.row.index].table, t.vt.clone(), t.row.handicap))
                .collect();
            let pairs: Vec<(usize, &VtDatabase)> = dbs.iter().enumerate().collect();
            let hash = cfg.hash();
            write_atomic(&db, &(header("train", &hash) + &formats::write_databases(&pairs)))?;
            let rows: Vec<_> = trained.iter().map(|t| t.row.clone()).collect();
            write_atomic(&report, &(header("train", &hash) + &formats::write_train_report(&rows)))?;
            let failed: Vec<usize> = rows.iter().filter(|r| !r.converged).map(|r| r.index).collect();
            let mut iters: Vec<u64> = rows.iter().map(|r| r.iterations).collect();
            iters.sort_unstable();
            println!(
                "trained {} functions, {} converged, median iterations {}",
                rows.len(),
                rows.len() - failed.len(),
                iters.get(iters.len() / 2).copied().unwrap_or(0)
            );
            if !failed.is_empty() {
                return Err(FlowError::Verification(format!(
                    "functions {failed:?} did not converge"
                )));
            }
        }
        Command::Yield {
            function,
            library,
            n_mc,
            n_test,
            sigma_vt,
            test_seed,
            db,
        } => {
            if let Some(v) = n_mc {
                cfg.n_mc = v;
            }
            if let Some(v) = n_test {
                cfg.n_test = v;
            }
            if let Some(v) = sigma_vt {
                cfg.sigma_vt = v;
            }
            if let Some(v) = test_seed {
                cfg.test_seed = v;
            }
            cfg.validate()?;
            let lib = load_library(&library)?;
            let f = match (function.function, function.index) {
                (Some(s), _) => parse_function(&s)?,
                (None, Some(i)) => lib
                    .get(i)
                    .ok_or_else(|| FlowError::Usage(format!("no library function {i}")))?
                    .function
                    .clone(),
                (None, None) => unreachable!("clap requires one of the two"),
            };
            // database lines are keyed by library index, so the function
            // must be a library entry in its stored variable order
            let index = lib
                .entries()
                .iter()
                .find(|e| e.table == f.truth_table())
                .map(|e| e.index);
            let (vdb, s) = flows::run_yield(&f.truth_table(), &cfg)?;
            println!("function {} sigma_vt {} V", format_weights(&f), cfg.sigma_vt);
            println!(
                "training: N_MC {} erroneous {} error types stored {} unfixable {}",
                s.n_mc, s.train_errors, s.db_entries, s.unfixable_types
            );
            println!("test instances {}", s.n_test);
            println!("  nominal              {}", pct(s.nominal_yield()));
            println!("  + error-type db      {}", pct(s.error_type_yield()));
            println!("  + on-chip fallback   {}", pct(s.final_yield()));
            println!("db coverage of erroneous test instances {}", pct(s.coverage()));
            println!("mean on-chip updates {:.2}", s.mean_onchip_iterations());
            if let Some(p) = db {
                let index = index.ok_or_else(|| {
                    FlowError::Usage(format!(
                        "{} is not a library entry; cannot key a database",
                        format_weights(&f)
                    ))
                })?;
                let text = header("yield", &cfg.hash()) + &formats::write_databases(&[(index, &vdb)]);
                write_atomic(&p, &text)?;
            }
            if s.final_yield() < cfg.min_yield {
                return Err(FlowError::Verification(format!(
                    "final yield {} below {}",
                    pct(s.final_yield()),
                    pct(cfg.min_yield)
                )));
            }
        }
        Command::Program { db, cells, output } => {
            let records = formats::parse_database(&read(&db)?, &db)?;
            let targets: Vec<_> = records
                .into_iter()
                .filter(|r| r.tag == formats::DbTag::Nominal)
                .map(|r| r.vt)
                .collect();
            let out = flows::run_program(&targets, cells, &cfg)?;
            emit(
                output.as_deref(),
                &(header("program", &cfg.hash()) + &formats::write_plan(&out.plan)),
            )?;
            eprintln!(
                "{} cells, {} pulses, {} us, {} scan clocks, max error {:.4} V",
                cells,
                out.plan.total_pulses(),
                out.plan.estimated_time_us(),
                out.pclk,
                out.max_error
            );
            if out.max_error > cfg.pulse_step + 1e-9 {
                return Err(FlowError::Verification(format!(
                    "programmed VTs off by {:.4} V",
                    out.max_error
                )));
            }
        }
        Command::Drift { db, library, sweep } => {
            let lib = load_library(&library)?;
            let dbs = load_databases(&db, &lib)?;
            let s = flows::run_drift(&lib, &dbs, &sweep, &cfg)?;
            println!("# ftl drift config={}", cfg.hash());
            println!("drift_mv,stored_correct,zero_handicap_correct");
            for ((d, a), b) in s.sweep.iter().zip(s.trained_fraction()).zip(s.baseline_fraction()) {
                println!("{d},{:.2},{:.2}", 100.0 * a, 100.0 * b);
            }
            let v = s.dominance_violations();
            println!(
                "cells tolerating less drift than the zero-handicap cell: {}/{}",
                v.len(),
                s.functions.len()
            );
        }
        Command::Synth {
            blif,
            library,
            policy,
            tech,
            output,
            report,
        } => {
            let lib = load_library(&library)?;
            let nl = parse_blif_with_library(&read(&blif)?, Some(&lib))?;
            let policy = match policy {
                PolicyArg::Benefit => Policy::Benefit,
                PolicyArg::Exhaustive => Policy::Exhaustive,
            };
            let out = flows::run_synth(&nl, &lib, policy, &load_tech(&tech)?, &cfg)?;
            write_atomic(&output, &(header("synth", &cfg.hash()) + &out.blif))?;
            let json = serde_json::to_string_pretty(&out.report).expect("report serializes");
            write_atomic(&report, &(json + "\n"))?;
            println!(
                "replaced {} of {} flip-flops, {} inverters, area {:.2} -> {:.2} um2",
                out.report.replaced.len(),
                out.report.dff.before,
                out.report.inverters_added,
                out.report.area_before,
                out.report.area_after
            );
        }
        Command::TimingFix {
            function,
            d2d,
            setup,
            hold,
            skew,
            period,
            launch_handicap,
        } => {
            let f = parse_function(&function)?;
            let stage = TimingStage {
                d2d,
                setup,
                hold,
                skew,
                period,
            };
            let fix = flows::run_timing(&f, &stage, launch_handicap, &cfg)?;
            println!("action {:?}", fix.action);
            println!(
                "before c2q {:.4} setup slack {:.4} hold slack {:.4}",
                fix.before.c2q, fix.before.setup, fix.before.hold
            );
            println!(
                "after  c2q {:.4} setup slack {:.4} hold slack {:.4}",
                fix.after.c2q, fix.after.setup, fix.after.hold
            );
            if let Some(c) = fix.handicap {
                println!("retrained at handicap {c:.2}");
            }
        }
        Command::Report {
            before,
            after,
            library,
            tech,
        } => {
            let lib = load_library(&library)?;
            let a = parse_blif_with_library(&read(&before)?, Some(&lib))?;
            let b = parse_blif_with_library(&read(&after)?, Some(&lib))?;
            let c = flows::compare(&a, &b, &load_tech(&tech)?, &cfg)?;
            let json = serde_json::json!({
                "config_hash": cfg.hash(),
                "cells_before": c.before.cells,
                "cells_after": c.after.cells,
                "dff": { "before": c.before.dff, "after": c.after.dff },
                "ftl": { "before": c.before.ftl, "after": c.after.ftl },
                "area_before": c.before.area_um2(),
                "area_after": c.after.area_um2(),
                "power_before": c.before.power,
                "power_after": c.after.power,
                "equivalence": if c.equivalence.passed() { "pass" } else { "fail" },
            });
            println!("{}", serde_json::to_string_pretty(&json).expect("report serializes"));
            if let Some(cx) = c.equivalence.counterexample {
                return Err(FlowError::Verification(format!("netlists differ: {cx}")));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;
    use ftl::Handicap;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn handicap_flag_accepts_max() {
        let mut cfg = RunConfig::default();
        cfg.set("train_handicap", "0.1").unwrap();
        assert_eq!(cfg.train_handicap, Handicap::Fixed(0.1));
    }
}
