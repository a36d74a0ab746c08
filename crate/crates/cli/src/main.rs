use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use adinfer::ad::{select_cutset, CutsetStrategy};
use adinfer::{load_evidence, load_network, Ensemble, Forest, Network};
use adinfer_service::{load_dir, Service};
use adinfer_bench::{export_scatter, generate, run_suite, sample_cases, BenchError, SuiteConfig, SyntheticSpec};
use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "adinfer", version, about = "Exact inference in discrete belief networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Time CTP against AD on sampled cases of a synthetic network.
    Bench {
        /// JSON synthetic spec, or `default`.
        #[arg(long, default_value = "default")]
        spec: String,
        #[arg(long, default_value_t = 20)]
        cases: usize,
        /// Case sampling seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 5)]
        repeat: usize,
        /// Scatter CSV destination.
        #[arg(long)]
        out: PathBuf,
        /// Propagate AD instances on all cores.
        #[arg(long)]
        parallel: bool,
    },
    /// Write the network a synthetic spec describes.
    Generate {
        #[arg(long, default_value = "default")]
        spec: String,
    },
    /// Posterior of every node given an evidence document.
    Posterior {
        network: PathBuf,
        #[arg(long)]
        evidence: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Engine::Ctp)]
        engine: Engine,
        /// Cutset members for the AD engine (comma separated); default picks one.
        #[arg(long, value_delimiter = ',')]
        cutset: Vec<String>,
    },
    /// Print the clique forest built for a network.
    Forest { network: PathBuf },
    /// Serve diagnosis sessions over HTTP.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Directory of network documents (`*.json`, id = file stem).
        #[arg(long)]
        networks: PathBuf,
        /// Keep sessions and uploaded networks in this file across restarts.
        #[arg(long)]
        state: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Engine {
    Ctp,
    Ad,
}

fn read_spec(arg: &str) -> Result<SyntheticSpec> {
    if arg == "default" {
        return Ok(SyntheticSpec::default());
    }
    let text = fs::read_to_string(arg).with_context(|| format!("reading {arg}"))?;
    Ok(SyntheticSpec::from_json(&text)?)
}

fn read_network(path: &PathBuf) -> Result<Network> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    load_network(&text).with_context(|| format!("loading {}", path.display()))
}

fn bench(spec: &str, cases: usize, seed: u64, repeat: usize, out: &PathBuf, parallel: bool) -> Result<ExitCode> {
    let synthetic = generate(&read_spec(spec)?)?;
    let sampled = sample_cases(&synthetic, cases, seed);
    let config = SuiteConfig { repeat, parallel, ..SuiteConfig::default() };
    match run_suite(&synthetic, &sampled, &config) {
        Ok(report) => {
            fs::write(out, export_scatter(&report)).with_context(|| format!("writing {}", out.display()))?;
            print!("{}", report.summary());
            Ok(ExitCode::SUCCESS)
        }
        Err(e @ (BenchError::PosteriorMismatch { .. } | BenchError::Case { .. })) => {
            eprintln!("correctness gate failed: {e}");
            Ok(ExitCode::from(2))
        }
        Err(e) => Err(e.into()),
    }
}

fn posterior(network: &PathBuf, evidence: Option<&PathBuf>, engine: Engine, cutset: &[String]) -> Result<()> {
    let net = read_network(network)?;
    let ev = match evidence {
        Some(p) => load_evidence(&net, &fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?)?,
        None => Default::default(),
    };
    let mut out = serde_json::Map::new();
    let mut put = |id: usize, dist: Vec<f64>| {
        let node = net.node(adinfer::NodeId(id));
        let entry = node.values.iter().cloned().zip(dist.into_iter().map(serde_json::Value::from)).collect();
        out.insert(node.id.clone(), serde_json::Value::Object(entry));
    };
    match engine {
        Engine::Ctp => {
            let mut forest = Forest::from_network(&net)?;
            forest.absorb(&ev)?;
            for n in net.node_ids() {
                put(n.0, forest.node_posterior(n)?);
            }
        }
        Engine::Ad => {
            let strategy = if cutset.is_empty() {
                CutsetStrategy::Auto
            } else {
                CutsetStrategy::Explicit(cutset.to_vec())
            };
            let chosen = select_cutset(&net, &strategy)?;
            let mut ensemble = Ensemble::new(net.clone().into(), chosen)?;
            ensemble.absorb_evidence(&ev)?;
            for n in net.node_ids() {
                let dist = if ensemble.cutset().contains(n) {
                    ensemble.member_marginal(n)?
                } else {
                    ensemble.feature_posterior(n)?
                };
                put(n.0, dist);
            }
        }
    }
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}

fn serve(port: u16, networks: &Path, state: Option<PathBuf>) -> Result<()> {
    let loaded = load_dir(networks).with_context(|| format!("loading networks from {}", networks.display()))?;
    eprintln!("{} networks loaded, listening on port {port}", loaded.len());
    let service = match state {
        Some(path) => Service::with_state_file(loaded, path.clone())
            .with_context(|| format!("restoring {}", path.display()))?,
        None => Service::new(loaded),
    };
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(adinfer_service::serve(service, port))?;
    Ok(())
}

fn main() -> Result<ExitCode> {
    match Cli::parse().command {
        Command::Bench { spec, cases, seed, repeat, out, parallel } => bench(&spec, cases, seed, repeat, &out, parallel),
        Command::Generate { spec } => {
            let synthetic = generate(&read_spec(&spec)?)?;
            println!("{}", synthetic.network.to_document().to_json_pretty());
            Ok(ExitCode::SUCCESS)
        }
        Command::Posterior { network, evidence, engine, cutset } => {
            posterior(&network, evidence.as_ref(), engine, &cutset)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Forest { network } => {
            let net = read_network(&network)?;
            let forest = Forest::from_network(&net)?;
            let names: Vec<&str> = net.nodes().iter().map(|n| n.id.as_str()).collect();
            print!("{}", forest.structure().dump(&names));
            Ok(ExitCode::SUCCESS)
        }
        Command::Serve { port, networks, state } => {
            serve(port, &networks, state)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}
