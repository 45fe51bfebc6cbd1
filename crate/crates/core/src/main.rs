use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use tokio::io::{AsyncBufReadExt, BufReader};

use folkrag::abc::{parse_tune, validate};
use folkrag::corpus::{ingest, load_index, save_index, FieldMapping, TagSet};
use folkrag::dialogue::TurnResult;
use folkrag::rational::{decimal_text, ratio_text};
use folkrag::retrieval::{rank, RetrievalConfig};
use folkrag::service::{serve, AppConfig};

/// Folk-tune composition with retrieved examples.
#[derive(Parser)]
#[command(name = "folkrag", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a corpus index from a JSON Lines tune dump.
    Ingest {
        dump: PathBuf,
        /// TOML field mapping; defaults to thesession.org field names.
        #[arg(long)]
        mapping: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Talk to the composer in the terminal.
    Chat {
        #[arg(long)]
        config: PathBuf,
    },
    /// Check an abc file; exits 0 only when there are no errors.
    Validate { file: PathBuf },
    /// Rank corpus entries against a comma-separated tag list.
    Retrieve {
        #[arg(long, value_delimiter = ',', required = true)]
        tags: Vec<String>,
        #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..))]
        k: u64,
        /// Index file to search.
        #[arg(long, conflicts_with = "config")]
        index: Option<PathBuf>,
        /// Take the index path from a service config instead.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

const EXIT_RUNTIME: u8 = 2;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = if matches!(cli.command, Command::Serve { .. }) { "info" } else { "warn" };
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| level.into()),
        )
        .init();

    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}

fn runtime() -> Result<tokio::runtime::Runtime> {
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .context("cannot start async runtime")
}

fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Ingest { dump, mapping, out } => {
            let mapping = match mapping {
                Some(p) => FieldMapping::from_toml(&read(&p)?)?,
                None => FieldMapping::thesession(),
            };
            let file = std::fs::File::open(&dump).with_context(|| format!("cannot open {}", dump.display()))?;
            let (index, report) = ingest(std::io::BufReader::new(file), &mapping)?;
            save_index(&index, &out).with_context(|| format!("cannot write {}", out.display()))?;
            print!("{report}");
            println!("wrote {}", out.display());
        }
        Command::Serve { config } => {
            let cfg = AppConfig::load(&config)?;
            runtime()?.block_on(serve(cfg))?;
        }
        Command::Chat { config } => {
            let cfg = AppConfig::load(&config)?;
            runtime()?.block_on(chat(cfg))?;
        }
        Command::Validate { file } => {
            let text = read(&file)?;
            let tune = parse_tune(&text).with_context(|| format!("cannot parse {}", file.display()))?;
            let issues = validate(&tune);
            if issues.is_empty() {
                println!("no issues");
            }
            for issue in &issues {
                println!("{issue}");
            }
            if issues.iter().any(|i| i.is_error()) {
                return Ok(ExitCode::from(EXIT_RUNTIME));
            }
        }
        Command::Retrieve { tags, k, index, config } => {
            let path = match (index, config) {
                (Some(p), _) => p,
                (None, Some(c)) => AppConfig::load(&c)?.corpus_index,
                (None, None) => PathBuf::from("corpus.idx"),
            };
            let index = load_index(&path).with_context(|| format!("cannot load index {}", path.display()))?;
            let query: TagSet = tags.iter().collect();
            let ranked = rank(&query, &index, &RetrievalConfig::with_k(usize::try_from(k).unwrap_or(usize::MAX)));
            if ranked.is_empty() {
                println!("no matching tunes for {{{query}}}");
            }
            for (i, c) in ranked.iter().enumerate() {
                let title = index.get(&c.entry_id).map(|e| e.title.as_str()).unwrap_or("");
                println!(
                    "{}. {}  {} ({})  {}  [matched: {}]",
                    i + 1,
                    c.entry_id,
                    decimal_text(&c.similarity, 12),
                    ratio_text(&c.similarity),
                    title,
                    c.matched_tags
                );
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

async fn chat(cfg: AppConfig) -> Result<()> {
    let engine = cfg.build_engine()?;
    let session = Arc::new(engine.new_session());
    eprintln!("Describe the tune you want. An empty line or end of input quits.");
    let mut lines = BufReader::new(tokio::io::stdin()).lines();
    loop {
        eprint!("> ");
        let _ = std::io::stderr().flush();
        let Some(line) = lines.next_line().await? else { break };
        if line.trim().is_empty() {
            break;
        }
        match engine.handle_request(&session, &line).await {
            Ok(turn) => print_turn(&turn, &engine),
            Err(e) => eprintln!("turn failed: {e}"),
        }
    }
    Ok(())
}

fn print_turn(turn: &TurnResult, engine: &folkrag::dialogue::DialogueEngine) {
    if !turn.retrieved.is_empty() {
        println!("examples ({}):", turn.extracted_tags);
        for c in &turn.retrieved {
            let title = engine.index().get(&c.entry_id).map(|e| e.title.as_str()).unwrap_or("");
            println!("  {} {} ({})", c.entry_id, title, decimal_text(&c.similarity, 4));
        }
    }
    println!("\n{}\n", turn.commentary);
    match &turn.abc {
        Some(abc) if turn.tune.is_some() => println!("{abc}\n"),
        _ => println!("(no tune in the reply)\n"),
    }
    for issue in &turn.validation {
        println!("! {issue}");
    }
    if let Some(id) = &turn.duplicate_of {
        println!("! this tune is an exact copy of corpus entry {id}");
    }
}
