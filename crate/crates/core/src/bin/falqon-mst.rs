use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use falqon_mst::experiment::{self, Instance, RunSettings, DEFAULT_DT, DEFAULT_LAYERS, DEFAULT_TOP_N, DEFAULT_TR_A};
use falqon_mst::graph::{generate_random_graph, GeneratorParams, WeightedGraph};
use falqon_mst::protocol::{ControlShape, Variant};
use falqon_mst::sim::{DriverSet, DEFAULT_MAX_QUBITS};

#[derive(Parser)]
#[command(name = "falqon-mst", version, about = "MST QUBO encoding solved with feedback-based quantum protocols")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a seeded random connected graph as JSON.
    Generate {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0.5)]
        p: f64,
        #[arg(long, default_value_t = 1.0)]
        wmin: f64,
        #[arg(long, default_value_t = 10.0)]
        wmax: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check that the encoding's ground states reproduce Kruskal's tree.
    Verify {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MAX_QUBITS)]
        max_qubits: usize,
        /// Also write the report as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one protocol variant.
    Run {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, value_enum)]
        variant: VariantArg,
        #[command(flatten)]
        protocol: ProtocolArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run several variants on the same instance and budget.
    Compare {
        #[arg(long)]
        graph: PathBuf,
        /// Variants to compare; repeat the flag or separate with commas.
        #[arg(long, value_enum, value_delimiter = ',', required = true)]
        variant: Vec<VariantArg>,
        #[command(flatten)]
        protocol: ProtocolArgs,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct ProtocolArgs {
    #[arg(long, default_value_t = DEFAULT_DT)]
    dt: f64,
    #[arg(long, default_value_t = DEFAULT_LAYERS)]
    layers: usize,
    #[arg(long = "tr-a", default_value_t = DEFAULT_TR_A)]
    tr_a: f64,
    /// Total time of rescaled runs [default: layers * dt].
    #[arg(long = "tr-tf")]
    tr_tf: Option<f64>,
    /// `identity` or `tanh:<scale>`.
    #[arg(long, default_value = "identity")]
    shape: ControlShape,
    #[arg(long = "top-n", default_value_t = DEFAULT_TOP_N)]
    top_n: usize,
    /// Driver family of multi-drive variants.
    #[arg(long, value_enum, default_value_t = DriverArg::X)]
    drivers: DriverArg,
    #[arg(long, default_value_t = DEFAULT_MAX_QUBITS)]
    max_qubits: usize,
}

#[derive(Clone, Copy, ValueEnum)]
#[allow(clippy::enum_variant_names)]
enum VariantArg {
    OneDrive,
    MultiDrive,
    TrOneDrive,
    TrMultiDrive,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::OneDrive => Variant::OneDrive,
            VariantArg::MultiDrive => Variant::MultiDrive,
            VariantArg::TrOneDrive => Variant::TrOneDrive,
            VariantArg::TrMultiDrive => Variant::TrMultiDrive,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum DriverArg {
    /// One X per qubit.
    X,
    /// One X and one Y per qubit.
    Xy,
}

impl ProtocolArgs {
    fn settings(&self, variant: Variant) -> RunSettings {
        RunSettings {
            variant,
            dt: self.dt,
            layers: self.layers,
            tr_a: self.tr_a,
            tr_tf: self.tr_tf,
            shape: self.shape,
            multi_drivers: match self.drivers {
                DriverArg::X => DriverSet::PerQubitX,
                DriverArg::Xy => DriverSet::PerQubitXY,
            },
            top_n: self.top_n,
        }
    }
}

fn load_instance(path: &PathBuf, max_qubits: usize) -> Result<Instance> {
    let graph =
        WeightedGraph::load(path).with_context(|| format!("loading graph {}", path.display()))?;
    Ok(Instance::with_qubit_limit(graph, max_qubits)?)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate { n, p, wmin, wmax, seed, out } => {
            let params = GeneratorParams { num_vertices: n, edge_probability: p, weight_low: wmin, weight_high: wmax, seed };
            let g = generate_random_graph(&params)?;
            match out {
                Some(path) => g.save(&path).with_context(|| format!("writing {}", path.display()))?,
                None => println!("{}", g.to_json()),
            }
        }
        Command::Verify { graph, max_qubits, out } => {
            let g = WeightedGraph::load(&graph)
                .with_context(|| format!("loading graph {}", graph.display()))?;
            let report = experiment::verify(&g, max_qubits)?;
            print!("{}", report.to_text());
            if let Some(path) = out {
                std::fs::write(&path, serde_json::to_string_pretty(&report)? + "\n")
                    .with_context(|| format!("writing {}", path.display()))?;
            }
        }
        Command::Run { graph, variant, protocol, out } => {
            let settings = protocol.settings(variant.into());
            settings.protocol_config()?;
            let inst = load_instance(&graph, protocol.max_qubits)?;
            let (report, _) = experiment::run_experiment(&inst, &settings, Some(&out))?;
            let v = &report.variants[0];
            println!(
                "{}: layers {} J {:.6} -> {:.6} ground_probability {:.6} mst_rank {}",
                v.label,
                v.num_layers,
                v.initial_energy,
                v.final_energy,
                v.ground_probability,
                v.mst_rank.map_or("-".to_string(), |r| r.to_string())
            );
        }
        Command::Compare { graph, variant, protocol, out } => {
            if variant.len() < 2 {
                bail!("compare needs at least two variants");
            }
            let settings: Vec<RunSettings> =
                variant.iter().map(|&v| protocol.settings(v.into())).collect();
            for s in &settings {
                s.protocol_config()?;
            }
            let inst = load_instance(&graph, protocol.max_qubits)?;
            let (report, _) = experiment::compare(&inst, &settings, Some(&out))?;
            println!("E_min {:.6}  MST cost {:.6}", report.e_min, report.mst_cost);
            for v in &report.variants {
                println!(
                    "{:<16} J {:.6}  ground_probability {:.6}  mst_rank {}",
                    v.label,
                    v.final_energy,
                    v.ground_probability,
                    v.mst_rank.map_or("-".to_string(), |r| r.to_string())
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
