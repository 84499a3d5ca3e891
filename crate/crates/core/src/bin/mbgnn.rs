//! Command-line interface: build-graphs, train, predict, evaluate, and
//! gen-synthetic. Exit codes: 0 success, 2 input/format error, 3 training
//! divergence, 4 checkpoint corruption.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use mbgnn_core::cli::{
    cmd_build_graphs, cmd_evaluate, cmd_gen_synthetic, cmd_predict, cmd_train, BuildGraphsArgs,
    EvaluateArgs, GenSyntheticArgs, PredictArgs, TrainArgs,
};
use mbgnn_core::eval::render_metrics;
use mbgnn_core::parallel::thread_cap_from_env;
use mbgnn_core::trainer::Task;

#[derive(Parser)]
#[command(
    name = "mbgnn",
    version,
    about = "Metal-binding residue and metal-type prediction over co-evolved CHED residue networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum TaskArg {
    Binding,
    Type,
}

impl From<TaskArg> for Task {
    fn from(t: TaskArg) -> Task {
        match t {
            TaskArg::Binding => Task::Binding,
            TaskArg::Type => Task::MetalType,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Build co-evolved residue networks from contact maps and embeddings.
    BuildGraphs {
        /// Directory holding one <chain>.contacts file per chain.
        #[arg(long)]
        contacts: PathBuf,
        /// FASTA file with every chain sequence.
        #[arg(long)]
        fasta: PathBuf,
        /// Directory holding one <chain>.emb file per chain.
        #[arg(long)]
        embeddings: PathBuf,
        /// Optional label file; labeled bundles are trainable.
        #[arg(long)]
        labels: Option<PathBuf>,
        /// Contact score threshold (strict inequality).
        #[arg(long, default_value_t = 0.1)]
        threshold: f64,
        /// Output bundle path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Train an M-fold ensemble from a labeled bundle.
    Train {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long, value_enum)]
        task: TaskArg,
        #[arg(long, default_value_t = 6)]
        folds: usize,
        #[arg(long, default_value_t = 0.001)]
        lr: f64,
        /// Weight decay; defaults to 0.0001 (binding) or 0.0005 (type).
        #[arg(long)]
        wd: Option<f64>,
        /// Hidden width; defaults to 64 (binding) or 512 (type).
        #[arg(long)]
        hidden: Option<usize>,
        #[arg(long, default_value_t = 5)]
        layers: usize,
        #[arg(long, default_value_t = 200)]
        max_epochs: usize,
        #[arg(long, default_value_t = 20)]
        patience: usize,
        #[arg(long, default_value_t = 64)]
        batch_graphs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out_checkpoint: PathBuf,
    },
    /// Predict binding residues and metal types for one chain.
    Predict {
        #[arg(long)]
        contacts: PathBuf,
        #[arg(long)]
        fasta: PathBuf,
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        binding_ck: PathBuf,
        #[arg(long)]
        type_ck: PathBuf,
        #[arg(long, default_value_t = 0.1)]
        threshold: f64,
        #[arg(long)]
        out_report: PathBuf,
    },
    /// Score a prediction report against truth labels.
    Evaluate {
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        out_metrics: PathBuf,
    },
    /// Generate a synthetic corpus for desk-scale validation.
    GenSynthetic {
        #[arg(long)]
        chains: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 32)]
        dim: usize,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

fn run(cli: Cli) -> mbgnn_core::Result<()> {
    match cli.command {
        Command::BuildGraphs {
            contacts,
            fasta,
            embeddings,
            labels,
            threshold,
            out,
        } => {
            let counts = cmd_build_graphs(&BuildGraphsArgs {
                contacts_dir: contacts,
                fasta,
                embeddings_dir: embeddings,
                labels,
                threshold,
                out: out.clone(),
            })?;
            print!("{}", counts.render());
            println!("bundle written to {}", out.display());
        }
        Command::Train {
            bundle,
            task,
            folds,
            lr,
            wd,
            hidden,
            layers,
            max_epochs,
            patience,
            batch_graphs,
            seed,
            out_checkpoint,
        } => {
            let run = cmd_train(&TrainArgs {
                bundle,
                task: task.into(),
                folds,
                lr,
                weight_decay: wd,
                hidden,
                layers,
                max_epochs,
                patience,
                batch_graphs,
                seed,
                out_checkpoint: out_checkpoint.clone(),
                threads: thread_cap_from_env(),
            })?;
            for fold_log in &run.epoch_logs {
                for r in fold_log {
                    println!(
                        "fold {}\tepoch {}\tloss {:.6}\tval_f1 {:.6}",
                        r.fold, r.epoch, r.train_loss, r.val_f1
                    );
                }
            }
            for (fold, stats) in run.checkpoint.fold_stats.iter().enumerate() {
                println!(
                    "fold {fold}\tbest_epoch {}\tbest_val_f1 {:.6}",
                    stats.best_epoch, stats.best_val_f1
                );
            }
            println!("checkpoint written to {}", out_checkpoint.display());
        }
        Command::Predict {
            contacts,
            fasta,
            embeddings,
            binding_ck,
            type_ck,
            threshold,
            out_report,
        } => {
            let report = cmd_predict(&PredictArgs {
                contacts,
                fasta,
                embeddings,
                binding_ck,
                type_ck,
                threshold,
                out_report: out_report.clone(),
            })?;
            println!(
                "chain {}\tnetworks {}\tcalls {}\tpositive {}\ttyped {}",
                report.chain_id,
                report.stage1.len(),
                report.binding_calls.len(),
                report.binding_calls.iter().filter(|c| c.call).count(),
                report.type_calls.len()
            );
            println!("report written to {}", out_report.display());
        }
        Command::Evaluate {
            report,
            labels,
            out_metrics,
        } => {
            let metrics = cmd_evaluate(&EvaluateArgs {
                report,
                labels,
                out_metrics: Some(out_metrics.clone()),
            })?;
            print!("{}", render_metrics(&metrics));
            println!("metrics written to {}", out_metrics.display());
        }
        Command::GenSynthetic {
            chains,
            seed,
            dim,
            out_dir,
        } => {
            let summary = cmd_gen_synthetic(&GenSyntheticArgs {
                chains,
                seed,
                dim,
                out_dir: out_dir.clone(),
            })?;
            println!(
                "chains {}\tlabeled_residues {}\tbinders {}",
                summary.chains, summary.labeled_residues, summary.binders
            );
            println!("corpus written to {}", out_dir.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
