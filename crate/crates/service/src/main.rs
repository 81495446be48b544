use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};

use hh_core::advise::{AdviceStatus, Event};
use hh_core::knowledge::{duplicate_definitions, ingest, reuse_report, KnowledgeError, Project, ReuseReport};
use hh_service::{Service, ServiceConfig, ServiceError};

#[derive(Parser)]
#[command(name = "hh", version, about = "Premise selection and proof advice for formal corpora")]
struct Cli {
    /// Configuration file (TOML); also read from HH_CONFIG.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory holding the projects.
    #[arg(long, global = true)]
    root: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Create or replace the project at DIR from corpus files.
    Ingest {
        dir: PathBuf,
        #[arg(required = true)]
        corpus: Vec<PathBuf>,
        /// Try the configured provers on every theorem's HOL dependencies.
        #[arg(long)]
        prove: bool,
    },
    /// Run the TCP and HTTP servers.
    Serve {
        #[arg(long)]
        status_trailer: bool,
    },
    /// Answer a goal and print the full transcript.
    Query {
        #[arg(short, long)]
        project: String,
        goal: String,
        /// Seconds.
        #[arg(long)]
        budget: Option<f64>,
    },
    /// Print only the suggested tactic for a goal.
    Advice {
        #[arg(short, long)]
        project: String,
        goal: String,
        #[arg(long)]
        budget: Option<f64>,
    },
    #[command(subcommand)]
    Report(Report),
}

#[derive(Subcommand)]
enum Report {
    /// Theorem and proof reuse of PROJECT relative to PREVIOUS.
    Reuse { project: String, previous: String },
    /// Defined symbols sharing a content name.
    Dupes { project: String },
}

fn missing_project(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        matches!(c.downcast_ref::<ServiceError>(), Some(ServiceError::UnknownProject(_)))
            || matches!(c.downcast_ref::<KnowledgeError>(), Some(KnowledgeError::UnknownProject(_)))
    })
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("warn")),
        )
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("hh: {:#}", e);
            if missing_project(&e) {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let mut config = ServiceConfig::load(cli.config.as_deref())?;
    if let Some(root) = cli.root {
        config.root = root;
    }
    match cli.command {
        Command::Ingest { dir, corpus, prove } => cmd_ingest(config, &dir, &corpus, prove),
        Command::Serve { status_trailer } => {
            config.status_trailer |= status_trailer;
            runtime()?.block_on(serve(config))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Query { project, goal, budget } => {
            runtime()?.block_on(cmd_query(config, &project, &goal, budget, false))
        }
        Command::Advice { project, goal, budget } => {
            runtime()?.block_on(cmd_query(config, &project, &goal, budget, true))
        }
        Command::Report(Report::Reuse { project, previous }) => {
            let p = Project::open(&config.root, &project)?;
            let q = Project::open(&config.root, &previous)?;
            let r = reuse_report(&p, &q);
            println!("{}", ReuseReport::header());
            println!("{}", r.row());
            Ok(ExitCode::SUCCESS)
        }
        Command::Report(Report::Dupes { project }) => {
            let p = Project::open(&config.root, &project)?;
            for group in duplicate_definitions(&p) {
                println!("{}", group.join(" / "));
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn runtime() -> Result<tokio::runtime::Runtime> {
    Ok(tokio::runtime::Builder::new_multi_thread().enable_all().build()?)
}

fn cmd_ingest(mut config: ServiceConfig, dir: &Path, corpus: &[PathBuf], prove: bool) -> Result<ExitCode> {
    let name = dir
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| anyhow!("{} does not name a project directory", dir.display()))?
        .to_string();
    config.root = match dir.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    config.prove_on_ingest |= prove;
    let mut files = Vec::new();
    for path in corpus {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        files.push((path.display().to_string(), text));
    }
    let svc = Service::new(config)?;
    let opts = svc.ingest_options();
    let p = ingest(&svc.config.root, &name, &files, &opts, &mut |s| eprintln!("{}", s.name()))?;
    let s = p.stats();
    println!(
        "{}: {} theorems, {} conjuncts, {} definitions, {} ATP proofs",
        s.name, s.theorems, s.labels, s.definitions, s.atp_proofs
    );
    Ok(ExitCode::SUCCESS)
}

async fn cmd_query(
    config: ServiceConfig,
    project: &str,
    goal: &str,
    budget: Option<f64>,
    tactic_only: bool,
) -> Result<ExitCode> {
    if let Some(b) = budget {
        if !(b > 0.0 && b.is_finite()) {
            bail!("budget must be positive, got {}", b);
        }
    }
    let svc = Service::new(config)?;
    let mut sink = |e: &Event| {
        if tactic_only {
            return;
        }
        let mut out = std::io::stdout().lock();
        let _ = match e {
            Event::Progress => write!(out, "."),
            e => writeln!(out, "{}", e.line()),
        };
        let _ = out.flush();
    };
    let outcome = svc.query(project, goal, budget.map(Duration::from_secs_f64), &mut sink).await?;
    if tactic_only {
        if let Some(t) = &outcome.tactic {
            println!("{}", t);
        }
    }
    Ok(match outcome.status {
        AdviceStatus::Proved => ExitCode::SUCCESS,
        AdviceStatus::NoProof | AdviceStatus::Error => ExitCode::FAILURE,
    })
}

async fn serve(config: ServiceConfig) -> Result<()> {
    let tcp_addr: SocketAddr = format!("{}:{}", config.bind, config.tcp_port).parse().context("bad bind address")?;
    let http_addr: SocketAddr = format!("{}:{}", config.bind, config.http_port).parse().context("bad bind address")?;
    let tcp =
        tokio::net::TcpListener::bind(tcp_addr).await.with_context(|| format!("cannot listen on {}", tcp_addr))?;
    let http =
        tokio::net::TcpListener::bind(http_addr).await.with_context(|| format!("cannot listen on {}", http_addr))?;
    std::fs::create_dir_all(&config.root)?;
    let svc = Arc::new(Service::new(config)?);
    eprintln!("hh: line protocol on {}, HTTP on {}", tcp.local_addr()?, http.local_addr()?);
    hh_service::run(svc, tcp, http, async {
        let _ = tokio::signal::ctrl_c().await;
    })
    .await?;
    Ok(())
}
