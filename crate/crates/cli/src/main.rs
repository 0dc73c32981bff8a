//! `vmwe`: run the VMWE pipeline stage by stage or end to end.
//!
//! Exit codes: 0 success, 1 usage, contract or protocol failure, 2 transport
//! failure after retry.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::LevelFilter;
use vmwe_core::extract::Category;
use vmwe_core::mt::Lang;
use vmwe_core::pipeline::{error_exit_code, run_all, run_stage, PipelineConfig, Stage, StageOptions, StageSummary};

#[derive(Parser)]
#[command(name = "vmwe", version, about = "VMWE extraction, disambiguation and MT quality analysis")]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract VID/VPC/LVC candidates and sample control sentences.
    Extract(StageArgs),
    /// Ask the LLM whether each candidate is a true VMWE.
    Classify(StageArgs),
    /// Rewrite sentences with confirmed VMWEs without the expression.
    Paraphrase(StageArgs),
    /// Translate VMWE, control and paraphrased sentences, then validate.
    Translate(StageArgs),
    /// Score valid translations and compute paraphrasing deltas.
    Score(StageArgs),
    /// Write report tables (CSV and JSON) into a directory.
    Report(StageArgs),
    /// Run every stage into one output directory.
    RunAll(StageArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum CategoryArg {
    Vid,
    Vpc,
    Lvc,
    All,
}

#[derive(Args)]
struct StageArgs {
    /// Pipeline configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Upstream stage stream; for extract, a corpus file.
    #[arg(long)]
    stage_in: Option<PathBuf>,
    /// Output stream, or output directory for report and run-all.
    #[arg(long)]
    stage_out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Backend name from the config, replacing the stage's configured backend(s).
    #[arg(long)]
    backend: Option<String>,
    #[arg(long, value_enum)]
    category: Option<CategoryArg>,
    /// Target language code; repeat for several.
    #[arg(long = "target-lang", value_parser = parse_lang)]
    target_lang: Vec<Lang>,
}

fn parse_lang(s: &str) -> Result<Lang, String> {
    s.parse::<Lang>().map_err(|e| e.to_string())
}

impl StageArgs {
    fn options(&self) -> StageOptions {
        let categories = self.category.map(|c| match c {
            CategoryArg::Vid => vec![Category::Vid],
            CategoryArg::Vpc => vec![Category::Vpc],
            CategoryArg::Lvc => vec![Category::Lvc],
            CategoryArg::All => Category::ALL.to_vec(),
        });
        StageOptions {
            stage_in: self.stage_in.clone(),
            stage_out: self.stage_out.clone(),
            seed: self.seed,
            backend: self.backend.clone(),
            categories,
            target_langs: (!self.target_lang.is_empty()).then(|| self.target_lang.clone()),
        }
    }
}

fn report(s: &StageSummary) {
    let stage = s.stage.map_or("?", Stage::as_str);
    let counts: Vec<String> = s.counts.iter().map(|(k, v)| format!("{k}={v}")).collect();
    eprintln!("{stage}: {} [{}]", s.output.display(), counts.join(" "));
    if s.failures > 0 {
        eprintln!("{stage}: {} failures ({} transport)", s.failures, s.transport_failures);
    }
}

fn exit(code: i32) -> ExitCode {
    ExitCode::from(u8::try_from(code).unwrap_or(1))
}

fn main() -> ExitCode {
    // usage errors share exit code 1 with other contract failures; 2 is reserved for transport
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return exit(code);
        }
    };
    let level = match cli.verbose {
        0 => LevelFilter::Warn,
        1 => LevelFilter::Info,
        _ => LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();

    let (stage, args) = match &cli.command {
        Command::Extract(a) => (Some(Stage::Extract), a),
        Command::Classify(a) => (Some(Stage::Classify), a),
        Command::Paraphrase(a) => (Some(Stage::Paraphrase), a),
        Command::Translate(a) => (Some(Stage::Translate), a),
        Command::Score(a) => (Some(Stage::Score), a),
        Command::Report(a) => (Some(Stage::Report), a),
        Command::RunAll(a) => (None, a),
    };
    let config = match PipelineConfig::load(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return exit(error_exit_code(&e));
        }
    };
    let opts = args.options();
    let result = match stage {
        Some(stage) => run_stage(stage, &config, &opts).map(|s| vec![s]),
        None => run_all(&config, &opts),
    };
    match result {
        Ok(summaries) => {
            summaries.iter().for_each(report);
            exit(summaries.last().map_or(0, StageSummary::exit_code))
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit(error_exit_code(&e))
        }
    }
}
