//! `fiqh` subcommands.
//!
//! Exit status: 0 on success, 1 when a `--check` run finds an invalid,
//! conflicting, incomplete or underivable result, 2 on usage or input errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use fiqh_core::automaton::{parse_log, SessionStatus};
use fiqh_core::logic::{
    check_stratification, derive_detailed_with, parse_document, parse_formula, sat_bruteforce, sat_dpll, DeriveOptions,
    NamedFormula, DEFAULT_INSTANTIATION_CAP,
};
use fiqh_core::qiyas::{validate_analogy, CaseDoc};
use fiqh_core::rulebase::{classify_space_with, gap_report, ClassifyOptions, RuleBase, Status, DEFAULT_QUESTION_CAP};
use fiqh_core::space::QuestionSpace;

use crate::catalog::{self, Catalog, DEFAULT_DATA_DIR};
use crate::{answer_query, session_report};

#[derive(Debug, Parser)]
#[command(name = "fiqh", version, about = "Rule engine for questions of purification law")]
pub struct Cli {
    /// Directory holding spaces/, rules/ and automata/.
    #[arg(long, global = true, env = "FIQH_DATA", default_value = DEFAULT_DATA_DIR)]
    pub data: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Number of questions in a space.
    Count {
        #[arg(long)]
        space: String,
    },
    /// List questions of a space in enumeration order.
    Gen {
        #[arg(long)]
        space: String,
        #[arg(long, default_value_t = 20)]
        limit: u64,
        #[arg(long, default_value_t = 0)]
        offset: u128,
    },
    /// Answer one question against a rulebase.
    Ask(AskArgs),
    /// Classify every question of a space and report gaps.
    Classify(ClassifyArgs),
    /// Derive a detailed formula from a formula file.
    Prove {
        #[arg(long)]
        formulas: PathBuf,
        #[arg(long)]
        query: String,
        #[arg(long, default_value_t = DEFAULT_INSTANTIATION_CAP)]
        cap: u64,
        #[arg(long)]
        json: bool,
        #[arg(long)]
        check: bool,
    },
    /// Report circular dependencies in a formula file.
    Strat {
        #[arg(long)]
        formulas: PathBuf,
        #[arg(long)]
        check: bool,
    },
    /// Decide satisfiability of a formula.
    Sat {
        formula: String,
        /// Enumerate assignments instead of running DPLL.
        #[arg(long)]
        bruteforce: bool,
        #[arg(long)]
        json: bool,
        #[arg(long)]
        check: bool,
    },
    /// Run an analogy case and validate the candidate rule.
    Qiyas {
        #[arg(long)]
        case: PathBuf,
        /// Formula file used both to justify and to validate.
        #[arg(long)]
        rules: Option<PathBuf>,
        #[arg(long)]
        json: bool,
        #[arg(long)]
        check: bool,
    },
    /// Action-sequence automata.
    Fsm {
        #[command(subcommand)]
        command: FsmCommand,
    },
    /// Start the HTTP session service.
    Serve {
        #[arg(long, env = "FIQH_BIND", default_value = "127.0.0.1:8080")]
        bind: String,
        /// Append each session's event log to <dir>/<session>.log.
        #[arg(long, env = "FIQH_LOG_DIR")]
        log_dir: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct AskArgs {
    #[arg(long)]
    pub space: Option<String>,
    #[arg(long)]
    pub rules: Option<String>,
    /// attribute=value, once per attribute.
    #[arg(long = "set", value_name = "ATTR=VALUE")]
    pub set: Vec<String>,
    #[arg(long)]
    pub json: bool,
    #[arg(long)]
    pub check: bool,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub rules: String,
    #[arg(long)]
    pub space: Option<String>,
    #[arg(long, default_value_t = DEFAULT_QUESTION_CAP)]
    pub cap: u128,
    /// Count rules without a primary-rule citation as a consistency breach.
    #[arg(long)]
    pub require_primary_rule: bool,
    #[arg(long)]
    pub json: bool,
    #[arg(long)]
    pub check: bool,
}

#[derive(Debug, Subcommand)]
pub enum FsmCommand {
    /// Step a fresh session through an event log.
    Replay {
        #[arg(long)]
        automaton: String,
        #[arg(long)]
        log: PathBuf,
        /// Treat the log as complete: an unfinished sequence is invalid.
        #[arg(long = "final")]
        finalize: bool,
        #[arg(long)]
        json: bool,
        #[arg(long)]
        check: bool,
    },
    /// Whether the automaton is deterministic.
    Check {
        #[arg(long)]
        automaton: String,
    },
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let rendered = e.render().to_string();
            let _ = if code == 0 { out.write_all(rendered.as_bytes()) } else { err.write_all(rendered.as_bytes()) };
            return code;
        }
    };
    match execute(cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            2
        }
    }
}

fn json_line(out: &mut dyn Write, value: &impl serde::Serialize) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

fn exit(check: bool, ok: bool) -> i32 {
    i32::from(check && !ok)
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn formulas(path: &Path) -> Result<Vec<NamedFormula>> {
    Ok(parse_document(&read(path)?).with_context(|| path.display().to_string())?.formulas)
}

fn query_inputs(data: &Path, space: Option<&str>, rules: Option<&str>) -> Result<(RuleBase, QuestionSpace)> {
    match (rules, space) {
        (Some(r), s) => catalog::load_rulebase(data, r, s),
        (None, Some(s)) => {
            let catalog = Catalog::load(data)?;
            let space = catalog::load_space(data, s)?;
            let rb = catalog.default_rulebase(space.id()).map_err(|ids| {
                anyhow!("space `{}` has rulebases [{}]; choose one with --rules", space.id(), ids.join(", "))
            })?;
            Ok((rb.clone(), space))
        }
        (None, None) => bail!("give --rules, --space or both"),
    }
}

fn execute(cli: Cli, out: &mut dyn Write) -> Result<i32> {
    let data = cli.data.as_path();
    match cli.command {
        Command::Count { space } => {
            let space = catalog::load_space(data, &space)?;
            writeln!(out, "{}", space.question_count())?;
            Ok(0)
        }
        Command::Gen { space, limit, offset } => {
            let space = catalog::load_space(data, &space)?;
            let total = space.question_count();
            let offset = offset.min(total);
            let len = u128::from(limit).min(total - offset);
            for (i, q) in space.enumerate_range(offset, len).enumerate() {
                writeln!(out, "{}\t{}", offset + i as u128, space.describe(&q).join(", "))?;
            }
            Ok(0)
        }
        Command::Ask(args) => {
            let (rb, space) = query_inputs(data, args.space.as_deref(), args.rules.as_deref())?;
            let mut bindings = Vec::new();
            for pair in &args.set {
                let (a, v) = pair.split_once('=').ok_or_else(|| anyhow!("--set expects ATTR=VALUE, got `{pair}`"))?;
                bindings.push((a.trim().to_string(), v.trim().to_string()));
            }
            let response = answer_query(&space, &rb, &bindings).map_err(|errors| {
                let lines: Vec<String> = errors.iter().map(|e| format!("{}: {}", e.field, e.message)).collect();
                anyhow!("invalid question:\n  {}", lines.join("\n  "))
            })?;
            if args.json {
                json_line(out, &response)?;
            } else {
                out.write_all(response.text.as_bytes())?;
            }
            let ok = !matches!(response.verdict.status, Status::Excluded | Status::Conflicting);
            Ok(exit(args.check, ok))
        }
        Command::Classify(args) => {
            let (rb, space) = catalog::load_rulebase(data, &args.rules, args.space.as_deref())?;
            let opts = ClassifyOptions { cap: args.cap, require_primary_rule: args.require_primary_rule };
            let report = classify_space_with(&rb, &space, opts)?;
            if args.json {
                out.write_all(report.to_json().as_bytes())?;
            } else {
                out.write_all(gap_report(&report).as_bytes())?;
            }
            let ok = report.complete == Some(true) && report.consistent == Some(true);
            Ok(exit(args.check, ok))
        }
        Command::Prove { formulas: path, query, cap, json, check } => {
            let rules = formulas(&path)?;
            let query = parse_formula(&query).context("query")?;
            let options = DeriveOptions { instantiation_cap: cap, ..DeriveOptions::default() };
            let trace = derive_detailed_with(&rules, &query, options)?;
            if json {
                json_line(out, &trace)?;
            } else {
                write!(out, "{trace}")?;
            }
            Ok(exit(check, trace.is_derived()))
        }
        Command::Strat { formulas: path, check } => {
            let report = check_stratification(&formulas(&path)?);
            if report.cycles.is_empty() {
                writeln!(out, "stratified: no cycles")?;
            }
            for c in &report.cycles {
                let kind = if c.through_negation { "error" } else { "warning" };
                writeln!(
                    out,
                    "{kind}: cycle {} via rules {}",
                    c.path.join(" -> "),
                    c.rules.join(", ")
                )?;
            }
            Ok(exit(check, report.is_stratified()))
        }
        Command::Sat { formula, bruteforce, json, check } => {
            let f = parse_formula(&formula)?;
            let result = if bruteforce { sat_bruteforce(&f)? } else { sat_dpll(&f)? };
            if json {
                json_line(out, &result)?;
            } else {
                match &result.model {
                    Some(model) => writeln!(out, "satisfiable: {model}")?,
                    None => writeln!(out, "unsatisfiable")?,
                }
            }
            Ok(exit(check, result.is_sat()))
        }
        Command::Qiyas { case, rules, json, check } => {
            let doc = CaseDoc::load(&case)?;
            let rules = match &rules {
                Some(path) => formulas(path)?,
                None => Vec::new(),
            };
            let candidate = doc.run(&rules)?;
            // Without a rule file the candidate is checked against the
            // schemas that justified it.
            let against: Vec<NamedFormula> = if rules.is_empty() {
                candidate.premises.iter().filter(|p| p.id != "secondary").cloned().collect()
            } else {
                rules
            };
            let validity = validate_analogy(&candidate, &against)?;
            if json {
                json_line(out, &serde_json::json!({ "case": doc.id, "candidate": candidate, "validity": validity }))?;
            } else {
                write!(out, "{candidate}{validity}")?;
            }
            Ok(exit(check, validity.is_valid()))
        }
        Command::Fsm { command: FsmCommand::Replay { automaton, log, finalize, json, check } } => {
            let a = catalog::load_automaton(data, &automaton)?;
            let entries = parse_log(&read(&log)?).with_context(|| log.display().to_string())?;
            let mut state = a.replay(&entries)?;
            if finalize {
                state = a.close(&state);
            }
            let report = session_report(&a, &state);
            if json {
                json_line(out, &report)?;
            } else {
                out.write_all(report.text.as_bytes())?;
            }
            Ok(exit(check, report.status == SessionStatus::Valid))
        }
        Command::Fsm { command: FsmCommand::Check { automaton } } => {
            let a = catalog::load_automaton(data, &automaton)?;
            let det = a.check_deterministic();
            writeln!(out, "{} ({}): {}", a.id, a.mode, if det { "deterministic" } else { "not deterministic" })?;
            Ok(0)
        }
        Command::Serve { bind, log_dir } => {
            let catalog = Catalog::load(data)?;
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(crate::service::serve(catalog, &bind, log_dir))?;
            Ok(0)
        }
    }
}
