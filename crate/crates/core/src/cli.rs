//! Command-line front end. `run` returns the process exit code.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::batch::{
    cmd_curate, cmd_evaluate, cmd_generate, cmd_stats, cmd_winrate, BatchError, EvalContext, RunConfig,
};
use crate::metrics::{EmbedError, MetricReport};
use crate::model::{ModelClient, Strategy};
use crate::render::{ChromeRenderer, RenderError, Renderer, RendererPool};
use crate::winrate::{fit, AnnotatedPair, FitOptions, DEFAULT_DIMS, UNCALIBRATED};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RENDERER_UNAVAILABLE: i32 = 3;
pub const EXIT_RENDER_TIMEOUT: i32 = 4;
pub const EXIT_EMBEDDER_UNAVAILABLE: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "pagefidelity", version, about = "Score HTML/CSS reproductions of reference webpages")]
pub struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads and renderer instances.
    #[arg(long, global = true)]
    pub parallel: Option<usize>,
    /// Write detected-block overlays into the gallery.
    #[arg(long, global = true)]
    pub debug_blocks: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Make pages standalone, filter and deduplicate them.
    Curate {
        input: PathBuf,
        output: PathBuf,
    },
    /// Generate candidate pages from reference screenshots with a model.
    Generate {
        reference: PathBuf,
        output: PathBuf,
        #[arg(long, value_parser = parse_strategy)]
        strategy: Strategy,
        /// Entry of `[models]` in the config, or a built-in profile.
        #[arg(long, default_value = "default")]
        model: String,
        /// Text-augmented generations used as initial solutions for
        /// self-revision.
        #[arg(long)]
        prior: Option<PathBuf>,
    },
    /// Score candidate pages against reference pages paired by file name.
    Evaluate {
        reference: Option<PathBuf>,
        candidate: Option<PathBuf>,
        /// Output directory; defaults to the config's.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulated win rates and preference-model fitting.
    #[command(subcommand)]
    Winrate(WinrateCommand),
    /// DOM statistics of a directory of pages.
    Stats { input: PathBuf },
}

#[derive(Debug, Subcommand)]
pub enum WinrateCommand {
    /// Fraction of pages on which the candidate run beats the baseline run.
    Simulate {
        candidate: PathBuf,
        baseline: PathBuf,
        /// Fitted model JSON; the published coefficients otherwise.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit a model to annotated pairs (a JSON array of {first, second, win}).
    Fit {
        pairs: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Include the text dimension.
        #[arg(long)]
        with_text: bool,
    },
}

fn parse_strategy(s: &str) -> Result<Strategy, String> {
    s.parse()
}

/// Exit code for an error that aborts a command.
pub fn exit_code(e: &BatchError) -> i32 {
    match e {
        BatchError::Usage(_) | BatchError::Config(_) | BatchError::MissingInitialSolution(_) => EXIT_USAGE,
        BatchError::Render(RenderError::Unavailable(_)) => EXIT_RENDERER_UNAVAILABLE,
        BatchError::Render(RenderError::Timeout(_)) => EXIT_RENDER_TIMEOUT,
        BatchError::Embed(EmbedError::Unavailable(_)) => EXIT_EMBEDDER_UNAVAILABLE,
        _ => EXIT_FAILED,
    }
}

// a closed pipe (`| head`) is not an error
macro_rules! out {
    ($($arg:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout().lock(), $($arg)*);
    }};
}

fn print_json<T: serde::Serialize>(value: &T) {
    out!("{}", serde_json::to_string_pretty(value).expect("serializable"));
}

fn load_config(cli: &Cli) -> Result<RunConfig, BatchError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(n) = cli.parallel {
        cfg.parallel = n;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn renderer_pool(cfg: &RunConfig) -> Result<RendererPool, BatchError> {
    Ok(RendererPool::new(cfg.parallel, || {
        ChromeRenderer::launch(&cfg.renderer).map(|r| Box::new(r) as Box<dyn Renderer>)
    })?)
}

fn require_dir(p: &Path) -> Result<(), BatchError> {
    if p.is_dir() {
        Ok(())
    } else {
        Err(BatchError::Usage(format!("{} is not a directory", p.display())))
    }
}

fn execute(cli: &Cli) -> Result<i32, BatchError> {
    let cfg = load_config(cli)?;
    match &cli.command {
        Command::Curate { input, output } => {
            require_dir(input)?;
            let summary = cmd_curate(input, output, &cfg.curation)?;
            print_json(&summary);
            Ok(EXIT_OK)
        }
        Command::Stats { input } => {
            require_dir(input)?;
            print_json(&cmd_stats(input)?);
            Ok(EXIT_OK)
        }
        Command::Generate {
            reference,
            output,
            strategy,
            model,
            prior,
        } => {
            require_dir(reference)?;
            let gen_cfg = cfg
                .model(model)
                .ok_or_else(|| BatchError::Usage(format!("unknown model {model:?}")))?;
            let client = ModelClient::new(gen_cfg).map_err(|e| BatchError::Config(e.to_string()))?;
            if *strategy == Strategy::SelfRevision && !prior.as_deref().is_some_and(Path::is_dir) {
                return Err(BatchError::MissingInitialSolution(prior.clone().unwrap_or_else(|| "<none>".into())));
            }
            let pool = renderer_pool(&cfg)?;
            let summary = cmd_generate(
                reference,
                output,
                *strategy,
                &client,
                &pool,
                cfg.viewport,
                prior.as_deref(),
                cfg.parallel,
            )?;
            print_json(&summary);
            Ok(if summary.failures.len() * 2 > summary.failures.len() + summary.written.len() {
                EXIT_FAILED
            } else {
                EXIT_OK
            })
        }
        Command::Evaluate { reference, candidate, out } => {
            let reference = reference
                .clone()
                .or_else(|| cfg.reference_dir.clone())
                .ok_or_else(|| BatchError::Usage("reference directory required".into()))?;
            let candidate = candidate
                .clone()
                .or_else(|| cfg.candidate_dir.clone())
                .ok_or_else(|| BatchError::Usage("candidate directory required".into()))?;
            require_dir(&reference)?;
            require_dir(&candidate)?;
            let embedder = cfg.embedder.build()?;
            let pool = renderer_pool(&cfg)?;
            let ctx = EvalContext {
                pool: &pool,
                embedder: embedder.as_ref(),
                viewport: cfg.viewport,
                matching: cfg.matching,
                parallel: cfg.parallel,
                debug_blocks: cli.debug_blocks,
                output_dir: out.clone().unwrap_or_else(|| cfg.output_dir.clone()),
                config: cfg.clone(),
            };
            let report = cmd_evaluate(&reference, &candidate, &ctx)?;
            let m = &report.means;
            out!(
                "{} pages, {} failures; block_match {:.4} text {:.4} position {:.4} color {:.4} visual {:.4}",
                m.pages,
                report.failures.len(),
                m.block_match,
                m.text,
                m.position,
                m.color,
                m.visual
            );
            out!("report: {}", ctx.output_dir.join("report.json").display());
            if report.failures.len() * 2 > report.total() {
                let dominant = |kind: &str| report.failures.iter().filter(|f| f.kind == kind).count() * 2 > report.failures.len();
                return Ok(if dominant("renderer_unavailable") {
                    EXIT_RENDERER_UNAVAILABLE
                } else if dominant("render_timeout") {
                    EXIT_RENDER_TIMEOUT
                } else if dominant("embedder_unavailable") {
                    EXIT_EMBEDDER_UNAVAILABLE
                } else {
                    EXIT_FAILED
                });
            }
            Ok(EXIT_OK)
        }
        Command::Winrate(WinrateCommand::Simulate {
            candidate,
            baseline,
            model,
            out,
        }) => {
            let wr = cmd_winrate(candidate, baseline, model.as_deref())?;
            if wr.flags.iter().any(|f| f == UNCALIBRATED) {
                eprintln!("warning: {UNCALIBRATED}: published coefficients with identity normalization");
            }
            out!("win rate {:.4} ({} of {} pages)", wr.rate, wr.wins, wr.pages);
            if let Some(out) = out {
                crate::batch::write_json(out, &wr)?;
            }
            Ok(EXIT_OK)
        }
        Command::Winrate(WinrateCommand::Fit { pairs, out, with_text }) => {
            let text = std::fs::read_to_string(pairs)
                .map_err(|e| BatchError::Usage(format!("{}: {e}", pairs.display())))?;
            let pairs: Vec<AnnotatedPair> =
                serde_json::from_str(&text).map_err(|e| BatchError::Usage(format!("annotations: {e}")))?;
            let dims: Vec<&str> = if *with_text {
                MetricReport::DIMENSIONS.to_vec()
            } else {
                DEFAULT_DIMS.to_vec()
            };
            let report = fit(&pairs, &dims, &FitOptions::default())?;
            if !report.converged {
                eprintln!("warning: fit did not converge (gradient norm {:.3e})", report.gradient_norm);
            }
            out!(
                "fitted {} pairs in {} iterations, training accuracy {:.4}",
                pairs.len(),
                report.iterations,
                report.training_accuracy
            );
            crate::batch::write_file(out, report.model.to_json())?;
            Ok(EXIT_OK)
        }
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
