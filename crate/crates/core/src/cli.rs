//! `mxsem` command line: compile dictionaries, extract, evaluate.
//!
//! Exit codes: 0 success, 1 some input records skipped, 2 validation
//! error, 3 QA backend unavailable.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};

use crate::corpus::read_records;
use crate::error::{Error, Result};
use crate::evaluation::{
    read_annotations, score_with, sweep_with, EvalOptions, MatchMode, Similarity, DEFAULT_SWEEP,
};
use crate::lexicon::{compile_lexicon, load_lexicon, parse_lexicon_text};
use crate::par::Parallelism;
use crate::pipeline::{Extractor, PipelineMode};
use crate::qa::{HttpBackend, MockBackend, QaBackend, QaConfig, DEFAULT_SCORE_FLOOR, ENDPOINT_ENV};
use crate::rules::{RuleConfig, DEFAULT_K};
use crate::semantics::{serialize_ntriples, to_json_line};

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARTIAL: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_BACKEND: i32 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "mxsem",
    version,
    about = "Entity and relation extraction from maintenance records"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    /// One record instance per line.
    Jsonl,
    /// Sorted N-Triples, one block per record.
    Ntriples,
    /// One line per sentence with typed mentions and relations (scorable).
    Mentions,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MatchArg {
    Strict,
    Fuzzy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SimilarityArg {
    Token,
    CharBigram,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Validate a lexicon source file and write its canonical compiled form.
    CompileDict {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run an extraction pipeline over a records file.
    Extract {
        #[arg(long)]
        dict: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "rules")]
        mode: PipelineMode,
        #[arg(long, default_value_t = DEFAULT_K)]
        k: usize,
        #[arg(long, value_enum, default_value = "jsonl")]
        format: OutputFormat,
        /// Rule configuration JSON (`k`, `stop_words`); `--k` overrides its k.
        #[arg(long)]
        rules_config: Option<PathBuf>,
        #[arg(long)]
        qa_endpoint: Option<String>,
        /// Scripted answers (JSON array or lines) used instead of a service.
        #[arg(long)]
        qa_mock: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_SCORE_FLOOR)]
        score_floor: f64,
        #[arg(long, default_value_t = 30)]
        qa_timeout_secs: u64,
        /// Process records on one thread.
        #[arg(long)]
        sequential: bool,
    },
    /// Score predictions against gold annotations.
    Evaluate {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        predicted: PathBuf,
        #[arg(long = "match", value_enum, default_value = "strict")]
        match_mode: MatchArg,
        #[arg(long, default_value_t = 0.5)]
        dice: f64,
        /// Report fuzzy thresholds 0.5..=1.0 in steps of 0.1, plus strict.
        #[arg(long)]
        sweep: bool,
        #[arg(long, value_enum, default_value = "token")]
        similarity: SimilarityArg,
        /// Write the JSON report here.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

struct Io<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

/// Parse arguments and run; returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_INVALID
            } else {
                EXIT_OK
            };
            let _ = if e.use_stderr() {
                write!(err, "{e}")
            } else {
                write!(out, "{e}")
            };
            return code;
        }
    };
    let mut io = Io { out, err };
    let result = match cli.command {
        Command::CompileDict { input, output } => compile_dict(&input, output.as_deref(), &mut io),
        Command::Extract {
            dict,
            input,
            output,
            mode,
            k,
            format,
            rules_config,
            qa_endpoint,
            qa_mock,
            score_floor,
            qa_timeout_secs,
            sequential,
        } => extract(
            &ExtractArgs {
                dict,
                input,
                output,
                mode,
                k,
                format,
                rules_config,
                qa_endpoint,
                qa_mock,
                score_floor,
                qa_timeout: Duration::from_secs(qa_timeout_secs),
                parallelism: if sequential {
                    Parallelism::Sequential
                } else {
                    Parallelism::Parallel
                },
            },
            &mut io,
        ),
        Command::Evaluate {
            gold,
            predicted,
            match_mode,
            dice,
            sweep,
            similarity,
            output,
        } => evaluate(
            &gold,
            &predicted,
            match_mode,
            dice,
            sweep,
            similarity,
            output.as_deref(),
            &mut io,
        ),
    };
    match result {
        Ok(code) => code,
        Err((code, e)) => {
            let _ = writeln!(io.err, "error: {e}");
            code
        }
    }
}

type CmdResult = std::result::Result<i32, (i32, Error)>;

fn invalid(e: Error) -> (i32, Error) {
    (EXIT_INVALID, e)
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write_output(path: Option<&Path>, text: &str, io: &mut Io<'_>) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::io(p, e)),
        None => io
            .out
            .write_all(text.as_bytes())
            .map_err(|e| Error::io("<stdout>", e)),
    }
}

fn compile_dict(input: &Path, output: Option<&Path>, io: &mut Io<'_>) -> CmdResult {
    let text = read_text(input).map_err(invalid)?;
    let lexicon = parse_lexicon_text(&text)
        .and_then(compile_lexicon)
        .map_err(invalid)?;
    if lexicon.is_empty() {
        let _ = writeln!(io.err, "warning: empty lexicon");
    }
    if let Some(path) = output {
        write_output(Some(path), &lexicon.to_canonical_text(), io).map_err(invalid)?;
    }
    let per_type: Vec<String> = lexicon
        .count_by_type()
        .iter()
        .map(|(t, n)| format!("{t}: {n}"))
        .collect();
    let noun = if lexicon.len() == 1 {
        "concept"
    } else {
        "concepts"
    };
    let _ = if per_type.is_empty() {
        writeln!(io.out, "{} {noun}", lexicon.len())
    } else {
        writeln!(io.out, "{} {noun} ({})", lexicon.len(), per_type.join(", "))
    };
    Ok(EXIT_OK)
}

struct ExtractArgs {
    dict: PathBuf,
    input: PathBuf,
    output: Option<PathBuf>,
    mode: PipelineMode,
    k: usize,
    format: OutputFormat,
    rules_config: Option<PathBuf>,
    qa_endpoint: Option<String>,
    qa_mock: Option<PathBuf>,
    score_floor: f64,
    qa_timeout: Duration,
    parallelism: Parallelism,
}

fn make_backend(args: &ExtractArgs) -> std::result::Result<Box<dyn QaBackend>, (i32, Error)> {
    if let Some(path) = &args.qa_mock {
        return Ok(Box::new(MockBackend::from_path(path).map_err(invalid)?));
    }
    let endpoint = args
        .qa_endpoint
        .clone()
        .or_else(|| std::env::var(ENDPOINT_ENV).ok().filter(|s| !s.is_empty()))
        .ok_or_else(|| {
            invalid(Error::Argument(format!(
                "qa mode needs --qa-endpoint, --qa-mock or {ENDPOINT_ENV}"
            )))
        })?;
    let backend = HttpBackend::new(&endpoint, args.qa_timeout);
    backend.health().map_err(|e| (EXIT_BACKEND, e))?;
    Ok(Box::new(backend))
}

fn extract(args: &ExtractArgs, io: &mut Io<'_>) -> CmdResult {
    let lexicon = load_lexicon(&args.dict).map_err(invalid)?;
    let mut rules = match &args.rules_config {
        Some(path) => RuleConfig::from_json(&read_text(path).map_err(invalid)?).map_err(invalid)?,
        None => RuleConfig::default(),
    };
    rules.k = args.k;

    let file = File::open(&args.input).map_err(|e| invalid(Error::io(&args.input, e)))?;
    let batch = read_records(BufReader::new(file)).map_err(invalid)?;
    for e in &batch.rejected {
        let _ = writeln!(io.err, "skipped: {e}");
    }

    let backend = match args.mode {
        PipelineMode::Qa => Some(make_backend(args)?),
        _ => None,
    };
    let mut extractor = Extractor::new(&lexicon, args.mode, rules.clone());
    if let Some(b) = backend.as_deref() {
        extractor = extractor.with_backend(
            b,
            QaConfig {
                score_floor: args.score_floor,
                rules,
                ..QaConfig::default()
            },
        );
    }
    let results = extractor
        .extract_batch(&batch.records, args.parallelism)
        .map_err(invalid)?;

    let mut text = String::new();
    for r in &results {
        for s in &r.sentences {
            for d in &s.extraction.diagnostics {
                let _ = writeln!(io.err, "{}: {d}", s.sentence_id());
            }
        }
        match args.format {
            OutputFormat::Jsonl => {
                text.push_str(&to_json_line(&r.instance()));
                text.push('\n');
            }
            OutputFormat::Ntriples => text.push_str(&serialize_ntriples(&r.instance())),
            OutputFormat::Mentions => {
                for line in r.mention_lines() {
                    text.push_str(&line);
                    text.push('\n');
                }
            }
        }
    }
    write_output(args.output.as_deref(), &text, io).map_err(invalid)?;
    Ok(if batch.rejected.is_empty() {
        EXIT_OK
    } else {
        EXIT_PARTIAL
    })
}

#[allow(clippy::too_many_arguments)]
fn evaluate(
    gold: &Path,
    predicted: &Path,
    match_mode: MatchArg,
    dice: f64,
    sweep: bool,
    similarity: SimilarityArg,
    output: Option<&Path>,
    io: &mut Io<'_>,
) -> CmdResult {
    let open = |p: &Path| -> Result<_> {
        let f = File::open(p).map_err(|e| Error::io(p, e))?;
        read_annotations(BufReader::new(f))
    };
    let gold = open(gold).map_err(invalid)?;
    let predicted = open(predicted).map_err(invalid)?;
    let options = EvalOptions {
        similarity: match similarity {
            SimilarityArg::Token => Similarity::Token,
            SimilarityArg::CharBigram => Similarity::CharBigram,
        },
        parallelism: Parallelism::Parallel,
    };
    let reports = if sweep {
        sweep_with(&gold, &predicted, &DEFAULT_SWEEP, &options)
    } else {
        let mode = match match_mode {
            MatchArg::Strict => MatchMode::Strict,
            MatchArg::Fuzzy => MatchMode::Fuzzy { threshold: dice },
        };
        score_with(&gold, &predicted, mode, &options).map(|r| vec![r])
    }
    .map_err(invalid)?;

    let tables: Vec<String> = reports.iter().map(|r| r.to_table()).collect();
    let _ = write!(io.out, "{}", tables.join("\n"));
    if let Some(path) = output {
        let json = if sweep {
            serde_json::to_string_pretty(&reports)
        } else {
            serde_json::to_string_pretty(&reports[0])
        }
        .map_err(|e| invalid(e.into()))?;
        write_output(Some(path), &(json + "\n"), io).map_err(invalid)?;
    }
    Ok(EXIT_OK)
}
