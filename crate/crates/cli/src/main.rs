use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cram_core::data;
use cram_core::knowledge::KnowledgeBase;
use cram_core::neem::{query_neems, replay_neem, NeemQuery, NeemStore};
use cram_core::plan_lang::parse_plan;

use cram_cli::report::{compare_models, run_scenario};
use cram_cli::scenario::{load_world, parse_seeds, train_from, GmKind, ModelInputs, ScenarioSpec, TASK_CONTEXTS};
use cram_cli::CliError;

#[derive(Parser)]
#[command(name = "cram", version, about = "Run, compare and inspect kitchen manipulation episodes")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one scenario under one generative model over a set of seeds.
    Run {
        #[command(flatten)]
        scen: ScenArgs,
        #[arg(long, default_value = "epl")]
        gm: GmKind,
        /// Append every episode to this NEEM store.
        #[arg(long)]
        neem_dir: Option<PathBuf>,
    },
    /// Run a scenario under several models on the same seeds and test the differences.
    Compare {
        #[command(flatten)]
        scen: ScenArgs,
        #[arg(long, value_delimiter = ',', default_value = "epl,prospective")]
        gm: Vec<GmKind>,
    },
    /// Query or replay a NEEM store.
    Neem {
        #[command(subcommand)]
        cmd: NeemCmd,
    },
    /// Check plan files, world files or shipped names.
    Validate {
        #[arg(required = true)]
        inputs: Vec<String>,
    },
}

#[derive(Subcommand)]
enum NeemCmd {
    /// Aggregate query, e.g. `count episodes outcome=failed`.
    Query {
        #[arg(long)]
        neem_dir: PathBuf,
        query: String,
        #[arg(long)]
        json: bool,
    },
    /// Re-execute stored episodes and check them against their recordings.
    Replay {
        #[arg(long)]
        neem_dir: PathBuf,
        /// Only this episode.
        #[arg(long)]
        id: Option<usize>,
    },
}

#[derive(Args)]
struct ScenArgs {
    /// Shipped scenario name or plan file.
    #[arg(long, default_value = "set-table")]
    plan: String,
    /// Shipped world name or world file. Defaults to the scenario's world.
    #[arg(long)]
    world: Option<String>,
    /// Task context for plan files.
    #[arg(long)]
    context: Option<String>,
    /// A seed, a range `a..b` / `a..=b`, or a list `a,b,c`.
    #[arg(long, alias = "seeds", default_value = "0")]
    seed: String,
    /// Override the retry count of every handle-failure.
    #[arg(long)]
    retries: Option<u32>,
    /// Extra facts and rules loaded on top of the kitchen knowledge base.
    #[arg(long)]
    kb: Option<PathBuf>,
    /// NEEM store the experience model is trained on.
    #[arg(long)]
    train_from: Option<PathBuf>,
    /// Joint candidates projected by the prospective model.
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long, default_value_t = default_threads())]
    threads: usize,
    /// NDJSON records instead of tables.
    #[arg(long)]
    json: bool,
}

fn default_threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

impl ScenArgs {
    fn spec(&self, gm: GmKind) -> Result<ScenarioSpec, CliError> {
        let seeds = parse_seeds(&self.seed).map_err(CliError::Usage)?;
        let mut spec = match data::scenario(&self.plan) {
            Some(_) => ScenarioSpec::shipped(&self.plan, gm, seeds)?,
            None => {
                let text = read(Path::new(&self.plan))?;
                let plan = parse_plan(&text).map_err(|e| CliError::Input(format!("{}: {e}", self.plan)))?;
                let world_label = self.world.clone().unwrap_or_else(|| "kitchen".into());
                let name = Path::new(&self.plan).file_stem().map_or(self.plan.clone(), |s| s.to_string_lossy().into());
                ScenarioSpec {
                    name,
                    world: load_world(&world_label)?,
                    world_label,
                    plan,
                    context: TASK_CONTEXTS[0].to_string(),
                    gm,
                    seeds,
                    retry_budget: None,
                    kb: KnowledgeBase::kitchen(),
                }
            }
        };
        if let Some(w) = &self.world {
            spec.world = load_world(w)?;
            spec.world_label = w.clone();
        }
        if let Some(c) = &self.context {
            spec.context = c.clone();
        }
        if let Some(path) = &self.kb {
            spec.kb.load_str(&read(path)?).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        }
        spec.retry_budget = self.retries;
        spec.check()?;
        Ok(spec)
    }

    fn inputs(&self) -> Result<ModelInputs, CliError> {
        let mut inputs = match &self.train_from {
            Some(dir) => train_from(dir)?,
            None => ModelInputs::default(),
        };
        inputs.prospective_budget = self.budget;
        Ok(inputs)
    }
}

fn open_store(dir: &Path) -> Result<NeemStore, CliError> {
    NeemStore::open(dir).map_err(|e| CliError::Input(format!("{}: {e}", dir.display())))
}

fn execute(cmd: Cmd, out: &mut String) -> Result<(), CliError> {
    match cmd {
        Cmd::Run { scen, gm, neem_dir } => {
            let spec = scen.spec(gm)?;
            let inputs = scen.inputs()?;
            let mut store = neem_dir.as_deref().map(open_store).transpose()?;
            let report = run_scenario(&spec, &inputs, store.as_mut(), scen.threads)?;
            out.push_str(&if scen.json { report.to_ndjson() } else { report.to_table() });
            let failed = report.rows.iter().filter(|r| !r.success).count();
            if failed > 0 {
                return Err(CliError::ScenarioFailure { failed, runs: report.rows.len() });
            }
        }
        Cmd::Compare { scen, gm } => {
            let spec = scen.spec(gm.first().copied().unwrap_or(GmKind::Epl))?;
            let c = compare_models(&spec, &gm, &scen.inputs()?, scen.threads)?;
            out.push_str(&if scen.json { c.to_ndjson() } else { c.to_table() });
        }
        Cmd::Neem { cmd: NeemCmd::Query { neem_dir, query, json } } => {
            let store = open_store(&neem_dir)?;
            let q = NeemQuery::parse(&query).map_err(|e| CliError::Usage(e.to_string()))?;
            if store.is_empty() {
                out.push_str("no data\n");
                return Ok(());
            }
            let r = query_neems(store.neems(), &q).map_err(|e| CliError::Input(e.to_string()))?;
            if json {
                out.push_str(&serde_json::to_string(&r).expect("query results serialize"));
                out.push('\n');
            } else {
                out.push_str(&format!("{r}\n"));
            }
        }
        Cmd::Neem { cmd: NeemCmd::Replay { neem_dir, id } } => {
            let store = open_store(&neem_dir)?;
            let ids: Vec<usize> = match id {
                Some(i) if i >= store.len() => {
                    return Err(CliError::Usage(format!("no episode {i}, the store has {}", store.len())))
                }
                Some(i) => vec![i],
                None => (0..store.len()).collect(),
            };
            let mut diverged = Vec::new();
            for i in ids {
                match replay_neem(&store.neems()[i]) {
                    Ok(w) => out.push_str(&format!("{i:>6} ok {:016x}\n", w.fingerprint())),
                    Err(e) => {
                        out.push_str(&format!("{i:>6} diverged: {e}\n"));
                        diverged.push(i);
                    }
                }
            }
            if !diverged.is_empty() {
                return Err(CliError::Invariant(format!("{} episodes diverged on replay", diverged.len())));
            }
        }
        Cmd::Validate { inputs } => {
            for name in inputs {
                validate_one(&name)?;
                out.push_str(&format!("{name}: ok\n"));
            }
        }
    }
    Ok(())
}

fn validate_one(name: &str) -> Result<(), CliError> {
    let is_world = data::world(name).is_some() || name.ends_with(".toml");
    if is_world {
        let w = load_world(name)?;
        return w.check_consistency().map_err(|e| CliError::Input(format!("{name}: {e}")));
    }
    let text = match data::scenario(name) {
        Some(s) => s.plan.to_string(),
        None => read(Path::new(name))?,
    };
    let ast = parse_plan(&text).map_err(|e| CliError::Input(format!("{name}: {e}")))?;
    let diags = data::validate_with_library(&ast);
    if diags.is_empty() {
        Ok(())
    } else {
        let msg: Vec<String> = diags.iter().map(|d| d.to_string()).collect();
        Err(CliError::Input(format!("{name}: {}", msg.join("; "))))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let mut out = String::new();
    let result = execute(cli.cmd, &mut out);
    let _ = std::io::stdout().write_all(out.as_bytes());
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cram: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
