//! The `pdadecode` command line.
//!
//! Every subcommand writes one JSON document (or plain text with
//! `--format text`) to standard output. Exit codes: 0 success, 1 usage,
//! 2 grammar error, 3 rejected input, 4 budget, scorer or I/O failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use pdadecode::decode::{
    generate, render, CandidateSource, DecodeConfig, ExternalScorer, Mode, Ngram, Replay, Scorer, Uniform,
    DEFAULT_MAX_STEPS,
};
use pdadecode::eval::{bleu4, em, enumerate_language, gcp, MAX_ENUMERATION_LEN};
use pdadecode::lexer::{LexToken, Lexer};
use pdadecode::lexmap::{build_mask, Vocabulary};
use pdadecode::pda::ValidSetSummary;
use pdadecode::{analyze, compile, grammars, parse_grammar, Grammar, Pda, Recognition, Session, Status, Token};

/// Environment variable overriding the closure budget.
pub const BUDGET_ENV: &str = "PDA_CLOSURE_BUDGET";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_GRAMMAR: i32 = 2;
pub const EXIT_REJECTED: i32 = 3;
pub const EXIT_INTERNAL: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "pdadecode", version, about = "Grammar-constrained decoding with a pushdown automaton")]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse and analyze a grammar file.
    CheckGrammar { grammar: PathBuf },
    /// Compile a grammar into the binary automaton format.
    Compile {
        grammar: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Valid terminals after a token prefix.
    ValidSet {
        /// Compiled automaton or grammar file.
        pda: PathBuf,
        /// JSON array of `[terminal, surface]` pairs.
        #[arg(long, default_value = "[]")]
        prefix_tokens: String,
    },
    /// Recognize a source file or a token stream.
    Recognize {
        pda: PathBuf,
        #[arg(long, conflicts_with = "tokens", required_unless_present = "tokens")]
        source: Option<PathBuf>,
        /// JSON array of `[terminal, surface]` pairs.
        #[arg(long)]
        tokens: Option<String>,
        /// Exit with status 3 unless the input is accepted.
        #[arg(long)]
        strict: bool,
    },
    /// Tokenize a source file.
    Lex {
        source: PathBuf,
        /// Automaton or grammar supplying keywords; the bundled Python 3
        /// grammar by default.
        #[arg(long)]
        pda: Option<PathBuf>,
    },
    /// Vocabulary mask after a token prefix.
    Mask {
        pda: PathBuf,
        /// JSON array of vocabulary entry strings.
        #[arg(long)]
        vocab: PathBuf,
        #[arg(long, default_value = "[]")]
        prefix_tokens: String,
        /// Also write the packed mask to this file.
        #[arg(long)]
        bitset: Option<PathBuf>,
    },
    /// Generate a token stream.
    Generate {
        pda: PathBuf,
        /// uniform | ngram:<corpus.jsonl> | replay:<tokens.json> | extern:<command>
        #[arg(long, default_value = "uniform")]
        scorer: String,
        /// Order of the `ngram` scorer.
        #[arg(long, default_value_t = 2)]
        ngram_order: usize,
        #[arg(long, default_value_t = 0.0)]
        alpha: f64,
        /// greedy | beam:<K> | sample
        #[arg(long, default_value = "greedy")]
        mode: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_MAX_STEPS)]
        max_steps: usize,
        /// Include the rendered source text.
        #[arg(long)]
        render: bool,
        /// Draw candidates from this vocabulary (JSON array of strings).
        #[arg(long)]
        vocab: Option<PathBuf>,
    },
    /// Grammatical correctness over a corpus, plus EM and BLEU-4 when
    /// references are given.
    EvalGcp {
        pda: PathBuf,
        /// JSON lines, each `{"tokens": [...]}` or `{"source": "..."}`.
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        references: Option<PathBuf>,
    },
    /// All sentences of a grammar up to a length.
    Enumerate {
        grammar: PathBuf,
        #[arg(long, default_value_t = 8)]
        max_len: usize,
        /// Enumerate from this non-terminal instead of the start rule.
        #[arg(long)]
        start: Option<String>,
    },
}

/// A failure carrying its exit status.
#[derive(Debug)]
struct Failure {
    code: i32,
    error: anyhow::Error,
}

fn fail(code: i32) -> impl FnOnce(anyhow::Error) -> Failure {
    move |error| Failure { code, error }
}

trait OrExit<T> {
    fn or_exit(self, code: i32) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> OrExit<T> for Result<T, E> {
    fn or_exit(self, code: i32) -> Result<T, Failure> {
        self.map_err(|e| fail(code)(e.into()))
    }
}

/// Runs one invocation; `args` includes the program name.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let sink: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(sink, "{}", e.render());
            return code;
        }
    };
    let mut buf = Vec::new();
    let code = match execute(&cli, &mut buf) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {:#}", f.error);
            f.code
        }
    };
    let _ = out.write_all(&buf);
    let _ = out.flush();
    code
}

struct Output<'a> {
    format: Format,
    buf: &'a mut Vec<u8>,
}

impl Output<'_> {
    /// Writes `value` as JSON, or the text produced by `text`.
    fn emit<T: Serialize>(&mut self, value: &T, text: impl FnOnce() -> String) -> Result<(), Failure> {
        match self.format {
            Format::Json => {
                serde_json::to_writer_pretty(&mut *self.buf, value).or_exit(EXIT_INTERNAL)?;
                self.buf.push(b'\n');
            }
            Format::Text => {
                let mut s = text();
                if !s.is_empty() && !s.ends_with('\n') {
                    s.push('\n');
                }
                self.buf.extend_from_slice(s.as_bytes());
            }
        }
        Ok(())
    }
}

fn execute(cli: &Cli, buf: &mut Vec<u8>) -> Result<i32, Failure> {
    let mut out = Output { format: cli.format, buf };
    match &cli.command {
        Command::CheckGrammar { grammar } => check_grammar(&mut out, grammar),
        Command::Compile { grammar, output } => {
            let pda = compile(&read_grammar(grammar)?).or_exit(EXIT_GRAMMAR)?;
            let bytes = pda.to_bytes();
            std::fs::write(output, &bytes)
                .with_context(|| format!("writing {}", output.display()))
                .or_exit(EXIT_INTERNAL)?;
            let report = CompileReport {
                output: output.display().to_string(),
                bytes: bytes.len(),
                terminals: pda.input_alphabet().count(),
                syntax_strings: pda.literals().count(),
                token_types: pda.token_types().count(),
                states: pda.states().count(),
            };
            out.emit(&report, || {
                format!(
                    "wrote {} bytes to {} ({} terminals: {} syntax-strings, {} token-types; {} states)",
                    report.bytes,
                    report.output,
                    report.terminals,
                    report.syntax_strings,
                    report.token_types,
                    report.states
                )
            })?;
            Ok(EXIT_OK)
        }
        Command::ValidSet { pda, prefix_tokens } => {
            let pda = load_pda(pda)?;
            let prefix = parse_tokens(&pda, prefix_tokens)?;
            let mut session = advance(&pda, &prefix)?;
            let summary = session.valid_set().or_exit(EXIT_INTERNAL)?.summary(&pda);
            out.emit(&summary, || summary_text(&summary))?;
            Ok(EXIT_OK)
        }
        Command::Recognize { pda, source, tokens, strict } => {
            let pda = load_pda(pda)?;
            let stream = match (source, tokens) {
                (Some(path), _) => lex_file(&Lexer::for_pda(&pda), path)?.iter().map(LexToken::to_token).collect(),
                (None, Some(json)) => parse_tokens(&pda, json)?,
                (None, None) => unreachable!("clap requires one input"),
            };
            let outcome = pdadecode::recognize(&pda, &stream).or_exit(EXIT_INTERNAL)?;
            let report = RecognitionReport::new(&pda, &outcome);
            out.emit(&report, || report.text())?;
            Ok(if *strict && !outcome.is_accepted() { EXIT_REJECTED } else { EXIT_OK })
        }
        Command::Lex { source, pda } => {
            let lexer = match pda {
                Some(p) => Lexer::for_pda(&load_pda(p)?),
                None => Lexer::for_grammar(&parse_grammar(grammars::PYTHON3).or_exit(EXIT_GRAMMAR)?),
            };
            let toks = lex_file(&lexer, source)?;
            let wire: Vec<LexedToken> = toks.iter().map(LexedToken::from).collect();
            out.emit(&wire, || {
                toks.iter().map(|t| format!("{}:{}\t{}\t{:?}\n", t.line, t.col, t.terminal, t.surface)).collect()
            })?;
            Ok(EXIT_OK)
        }
        Command::Mask { pda, vocab, prefix_tokens, bitset } => {
            let pda = load_pda(pda)?;
            let vocab = Vocabulary::new(&pda, read_vocab(vocab)?);
            let prefix = parse_tokens(&pda, prefix_tokens)?;
            let mut session = advance(&pda, &prefix)?;
            let mask = build_mask(session.valid_set().or_exit(EXIT_INTERNAL)?, &vocab);
            if let Some(path) = bitset {
                std::fs::write(path, mask.to_bytes())
                    .with_context(|| format!("writing {}", path.display()))
                    .or_exit(EXIT_INTERNAL)?;
            }
            let json = mask.to_json();
            out.emit(&json, || {
                let idx: Vec<String> = json.allowed.iter().map(usize::to_string).collect();
                format!("allowed {}/{}: {}", json.allowed.len(), json.size, idx.join(" "))
            })?;
            Ok(EXIT_OK)
        }
        Command::Generate { pda, scorer, ngram_order, alpha, mode, seed, max_steps, render: want_text, vocab } => {
            let pda = load_pda(pda)?;
            let mut scorer = make_scorer(&pda, scorer, *ngram_order)?;
            let candidates = match vocab {
                Some(path) => CandidateSource::Vocabulary(Vocabulary::new(&pda, read_vocab(path)?)),
                None => CandidateSource::Terminals,
            };
            let cfg = DecodeConfig {
                alpha: *alpha,
                mode: parse_mode(mode)?,
                max_steps: *max_steps,
                seed: *seed,
                candidates,
                budget_aware: true,
            };
            let result = generate(&pda, scorer.as_mut(), &cfg).map_err(|e| {
                let code = match e {
                    pdadecode::decode::DecodeError::InvalidAlpha(_)
                    | pdadecode::decode::DecodeError::InvalidConfig(_) => EXIT_USAGE,
                    _ => EXIT_INTERNAL,
                };
                fail(code)(e.into())
            })?;
            let text = if *want_text { Some(render(&result.tokens).or_exit(EXIT_INTERNAL)?) } else { None };
            let report = GenerateReport { result: &result, text: text.as_deref() };
            out.emit(&report, || match &text {
                Some(t) => t.clone(),
                None => {
                    let surfaces: Vec<String> = result.tokens.iter().map(|t| t.terminal.to_string()).collect();
                    format!("accepted: {}\nsteps: {}\n{}", result.accepted, result.steps, surfaces.join(" "))
                }
            })?;
            Ok(EXIT_OK)
        }
        Command::EvalGcp { pda, corpus, references } => {
            let pda = load_pda(pda)?;
            let hyps = read_corpus(&pda, corpus)?;
            let mut report = gcp(&pda, &hyps).or_exit(EXIT_INTERNAL)?;
            if let Some(path) = references {
                let refs = read_corpus(&pda, path)?;
                let h: Vec<Vec<String>> = hyps.iter().map(|s| words(s)).collect();
                let r: Vec<Vec<String>> = refs.iter().map(|s| words(s)).collect();
                report.em = Some(em(&h, &r).or_exit(EXIT_USAGE)?);
                report.bleu4 = Some(bleu4(&h, &r).or_exit(EXIT_USAGE)?);
            }
            out.emit(&report, || {
                let mut s = format!(
                    "n: {}\ngcp: {}\ntsm: {}\nens: {}\n",
                    report.n, report.gcp, report.error_breakdown.tsm, report.error_breakdown.ens
                );
                if let (Some(e), Some(b)) = (report.em, report.bleu4) {
                    s += &format!("em: {e}\nbleu4: {b}\n");
                }
                s
            })?;
            Ok(EXIT_OK)
        }
        Command::Enumerate { grammar, max_len, start } => {
            let mut g = read_grammar(grammar)?;
            if let Some(start) = start {
                g = g.with_start(start).or_exit(EXIT_GRAMMAR)?;
            }
            if *max_len > MAX_ENUMERATION_LEN {
                return Err(fail(EXIT_USAGE)(anyhow!("--max-len may be at most {MAX_ENUMERATION_LEN}")));
            }
            let lang = enumerate_language(&g, *max_len).map_err(|e| {
                let code = match e {
                    pdadecode::eval::EvalError::LeftRecursive(_) => EXIT_GRAMMAR,
                    _ => EXIT_INTERNAL,
                };
                fail(code)(e.into())
            })?;
            let json = lang.to_json(g.start());
            out.emit(&json, || json.sentences.iter().map(|s| s.join(" ") + "\n").collect())?;
            Ok(EXIT_OK)
        }
    }
}

fn check_grammar(out: &mut Output<'_>, path: &Path) -> Result<i32, Failure> {
    let g = read_grammar(path)?;
    let report = analyze(&g);
    out.emit(&report, || {
        let list = |v: Vec<String>| if v.is_empty() { "none".to_string() } else { v.join(", ") };
        let cycles = report.left_recursive_cycles.iter().map(|c| format!("[{}]", c.join(" "))).collect();
        let violations = report.determinism_violations.iter().map(|v| v.stack_top.clone()).collect();
        format!(
            "left-recursive cycles: {}\nnullable: {}\nunproductive: {}\ndeterministic candidate: {}\nnondeterministic at: {}\n",
            list(cycles),
            list(report.nullable.iter().cloned().collect()),
            list(report.unproductive.clone()),
            if report.is_deterministic_candidate { "yes" } else { "no" },
            list(violations),
        )
    })?;
    Ok(if report.is_left_recursive() { EXIT_GRAMMAR } else { EXIT_OK })
}

#[derive(Serialize)]
struct CompileReport {
    output: String,
    bytes: usize,
    terminals: usize,
    syntax_strings: usize,
    token_types: usize,
    states: usize,
}

#[derive(Serialize)]
#[serde(tag = "result", rename_all = "lowercase")]
enum RecognitionReport {
    Accepted,
    Tsm { position: usize, terminal: String, expected: ValidSetSummary },
    Ens { expected: ValidSetSummary },
}

impl RecognitionReport {
    fn new(pda: &Pda, r: &Recognition) -> Self {
        match r {
            Recognition::Accepted => RecognitionReport::Accepted,
            Recognition::Tsm { position, terminal, expected } => RecognitionReport::Tsm {
                position: *position,
                terminal: terminal.name.clone(),
                expected: expected.summary(pda),
            },
            Recognition::Ens { expected } => RecognitionReport::Ens { expected: expected.summary(pda) },
        }
    }

    fn text(&self) -> String {
        match self {
            RecognitionReport::Accepted => "accepted".into(),
            RecognitionReport::Tsm { position, terminal, expected } => {
                format!("terminal mismatch at token {position}: {terminal}\nexpected:\n{}", summary_text(expected))
            }
            RecognitionReport::Ens { expected } => {
                format!("input ended before acceptance\nexpected:\n{}", summary_text(expected))
            }
        }
    }
}

fn summary_text(s: &ValidSetSummary) -> String {
    format!(
        "syntax-strings ({}): {}\ntoken-types ({}): {}\ncan accept: {}\n",
        s.syntax_strings.len(),
        s.syntax_strings.join(" "),
        s.token_types.len(),
        s.token_types.join(" "),
        s.can_accept
    )
}

#[derive(Serialize)]
struct LexedToken<'a> {
    token: (&'a str, &'a str),
    line: usize,
    col: usize,
}

impl<'a> From<&'a LexToken> for LexedToken<'a> {
    fn from(t: &'a LexToken) -> Self {
        LexedToken { token: (&t.terminal.name, &t.surface), line: t.line, col: t.col }
    }
}

#[derive(Serialize)]
struct GenerateReport<'a> {
    #[serde(flatten)]
    result: &'a pdadecode::decode::DecodeResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    text: Option<&'a str>,
}

fn read_text(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display())).or_exit(EXIT_INTERNAL)
}

fn read_grammar(path: &Path) -> Result<Grammar, Failure> {
    parse_grammar(&read_text(path)?).with_context(|| format!("in {}", path.display())).or_exit(EXIT_GRAMMAR)
}

/// Loads a compiled automaton, or compiles a grammar file. The closure
/// budget comes from the environment when set.
fn load_pda(path: &Path) -> Result<Pda, Failure> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display())).or_exit(EXIT_INTERNAL)?;
    let pda = if bytes.starts_with(b"PDA") {
        Pda::from_bytes(&bytes).with_context(|| format!("in {}", path.display())).or_exit(EXIT_GRAMMAR)?
    } else {
        let text = String::from_utf8(bytes).map_err(|_| fail(EXIT_GRAMMAR)(anyhow!("{} is not UTF-8", path.display())))?;
        let g = parse_grammar(&text).with_context(|| format!("in {}", path.display())).or_exit(EXIT_GRAMMAR)?;
        compile(&g).with_context(|| format!("in {}", path.display())).or_exit(EXIT_GRAMMAR)?
    };
    Ok(match std::env::var(BUDGET_ENV) {
        Ok(v) => {
            let budget: usize = v
                .parse()
                .map_err(|_| fail(EXIT_USAGE)(anyhow!("{BUDGET_ENV} must be a non-negative integer, got `{v}`")))?;
            pda.with_closure_budget(budget)
        }
        Err(_) => pda,
    })
}

/// `[[terminal, surface], ...]`; names resolve against the automaton.
fn parse_tokens(pda: &Pda, json: &str) -> Result<Vec<Token>, Failure> {
    let pairs: Vec<(String, String)> =
        serde_json::from_str(json).context("tokens must be a JSON array of [terminal, surface] pairs").or_exit(EXIT_USAGE)?;
    Ok(pairs.into_iter().map(|(name, surface)| Token::new(pda.resolve_terminal(&name), surface)).collect())
}

/// Steps through `prefix`; an unusable prefix is rejected input.
fn advance<'p>(pda: &'p Pda, prefix: &[Token]) -> Result<Session<'p>, Failure> {
    let mut session = Session::new(pda);
    for (i, t) in prefix.iter().enumerate() {
        if !session.is_active() {
            return Err(fail(EXIT_REJECTED)(anyhow!("prefix continues after acceptance at token {i}")));
        }
        if let Status::FailedTsm { position, terminal } = session.step(t.clone()).or_exit(EXIT_INTERNAL)? {
            return Err(fail(EXIT_REJECTED)(anyhow!("prefix token {position} ({terminal}) is not valid")));
        }
    }
    Ok(session)
}

fn lex_file(lexer: &Lexer, path: &Path) -> Result<Vec<LexToken>, Failure> {
    lexer.lex(&read_text(path)?).with_context(|| format!("lexing {}", path.display())).or_exit(EXIT_REJECTED)
}

fn read_vocab(path: &Path) -> Result<Vec<String>, Failure> {
    serde_json::from_str(&read_text(path)?)
        .with_context(|| format!("{} must be a JSON array of strings", path.display()))
        .or_exit(EXIT_USAGE)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum CorpusLine {
    Tokens { tokens: Vec<(String, String)> },
    Source { source: String },
}

fn read_corpus(pda: &Pda, path: &Path) -> Result<Vec<Vec<Token>>, Failure> {
    let lexer = Lexer::for_pda(pda);
    let mut out = Vec::new();
    for (n, line) in read_text(path)?.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let at = || format!("{}:{}", path.display(), n + 1);
        let entry: CorpusLine = serde_json::from_str(line).with_context(at).or_exit(EXIT_USAGE)?;
        out.push(match entry {
            CorpusLine::Tokens { tokens } => {
                tokens.into_iter().map(|(name, s)| Token::new(pda.resolve_terminal(&name), s)).collect()
            }
            // A source that does not lex becomes an empty stream, which
            // recognition rejects as unfinished.
            CorpusLine::Source { source } => match lexer.lex(&source) {
                Ok(toks) => toks.iter().map(LexToken::to_token).collect(),
                Err(_) => Vec::new(),
            },
        });
    }
    Ok(out)
}

/// Tokens compared by EM and BLEU: the surface, or the terminal name for
/// layout tokens without one.
fn words(stream: &[Token]) -> Vec<String> {
    stream.iter().map(|t| if t.surface.is_empty() { t.terminal.name.clone() } else { t.surface.clone() }).collect()
}

fn parse_mode(s: &str) -> Result<Mode, Failure> {
    match s {
        "greedy" => Ok(Mode::Greedy),
        "sample" => Ok(Mode::Sample),
        _ => match s.strip_prefix("beam:").map(str::parse::<usize>) {
            Some(Ok(k)) if k > 0 => Ok(Mode::Beam(k)),
            _ => Err(fail(EXIT_USAGE)(anyhow!("--mode must be greedy, sample or beam:<K> with K > 0, got `{s}`"))),
        },
    }
}

fn make_scorer(pda: &Pda, spec: &str, order: usize) -> Result<Box<dyn Scorer>, Failure> {
    let (kind, arg) = spec.split_once(':').unwrap_or((spec, ""));
    match (kind, arg) {
        ("uniform", "") => Ok(Box::new(Uniform)),
        ("ngram", path) if !path.is_empty() => {
            let corpus = read_corpus(pda, Path::new(path))?;
            Ok(Box::new(Ngram::train(order, &corpus).or_exit(EXIT_USAGE)?))
        }
        ("replay", path) if !path.is_empty() => {
            let script = parse_tokens(pda, &read_text(Path::new(path))?)?;
            Ok(Box::new(Replay::new(script)))
        }
        ("extern", cmd) if !cmd.is_empty() => Ok(Box::new(ExternalScorer::spawn(cmd).or_exit(EXIT_INTERNAL)?)),
        _ => Err(fail(EXIT_USAGE)(anyhow!(
            "--scorer must be uniform, ngram:<corpus>, replay:<file> or extern:<command>, got `{spec}`"
        ))),
    }
}
