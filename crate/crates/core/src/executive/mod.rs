//! Plan interpreter: cooperative scheduling of task-tree branches, fluents,
//! failure handling and the suspend, reposition and resume behavior of
//! `with-robot-at-location`.

mod goals;
mod runtime;
mod task;

pub use goals::{check_goal, transport_goals, TransportGoal, GOAL_XY_TOLERANCE};

use serde::Serialize;

use crate::contextualizer::{apply_plan_transformations, ActionHierarchy, TransformRule};
use crate::data::library;
use crate::failure::FailureKind;
use crate::knowledge::{GenerativeModel, KnowledgeBase};
use crate::motion_exec::MotionConfig;
use crate::neem::{Neem, NeemFooter, NeemHeader, NodeStatus, Recorder, FORMAT_VERSION};
use crate::plan_lang::{Bindings, PlanAst, PlanDef};
use crate::world::WorldState;

pub const DEFAULT_STEP_BUDGET: u64 = 100_000;
pub const DEFAULT_MAX_REPOSITIONS: u32 = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct ExecConfig {
    /// Scheduler steps before the episode times out.
    pub step_budget: u64,
    /// Repositions one `with-robot-at-location` may make after `Unreachable`.
    pub max_repositions: u32,
    pub motion: MotionConfig,
}

impl Default for ExecConfig {
    fn default() -> Self {
        ExecConfig {
            step_budget: DEFAULT_STEP_BUDGET,
            max_repositions: DEFAULT_MAX_REPOSITIONS,
            motion: MotionConfig::default(),
        }
    }
}

/// A failure travelling up the task tree.
#[derive(Debug, Clone, PartialEq)]
pub struct FailureSignal {
    pub kind: FailureKind,
    /// Narrative node that raised it.
    pub origin: usize,
    pub context: Bindings,
    /// Failures this one summarizes (`try-all`, `try-in-order`).
    pub causes: Vec<FailureSignal>,
}

impl FailureSignal {
    pub fn new(kind: FailureKind, origin: usize) -> Self {
        FailureSignal { kind, origin, context: Bindings::new(), causes: Vec::new() }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Metrics {
    pub repositions: u32,
    /// Repositions plus failure-handler retries.
    pub retries: u32,
    pub projections: u32,
    pub steps: u64,
    pub motions: usize,
}

#[derive(Debug, Clone)]
pub struct EpisodeOutcome {
    pub status: NodeStatus,
    pub failure: Option<FailureSignal>,
    pub world: WorldState,
    pub belief: WorldState,
    pub neem: Neem,
    pub metrics: Metrics,
    /// Transport goals of the plan and whether each holds at the end.
    pub goals: Vec<(TransportGoal, bool)>,
}

impl EpisodeOutcome {
    /// Root succeeded and every transported object sits where it should.
    pub fn success(&self) -> bool {
        self.status == NodeStatus::Succeeded && self.goals.iter().all(|(_, ok)| *ok)
    }
}

/// Names written into the NEEM header.
#[derive(Debug, Clone, Default)]
pub struct Labels {
    pub world: String,
    pub plan: String,
}

#[derive(Debug, Clone)]
pub struct Interpreter {
    pub kb: KnowledgeBase,
    pub hierarchy: ActionHierarchy,
    /// Plan schemas available besides the plan's own definitions.
    pub library: Vec<PlanDef>,
    pub config: ExecConfig,
    /// Transformations applied to the plan before it runs.
    pub transforms: Vec<TransformRule>,
}

impl Interpreter {
    pub fn new(kb: KnowledgeBase) -> Self {
        Interpreter {
            kb,
            hierarchy: ActionHierarchy::reference(),
            library: library(),
            config: ExecConfig::default(),
            transforms: Vec::new(),
        }
    }

    pub fn kitchen() -> Self {
        Self::new(KnowledgeBase::kitchen())
    }

    fn definitions(&self, ast: &PlanAst) -> Vec<PlanDef> {
        let mut defs = ast.definitions.clone();
        for d in &self.library {
            if !defs.iter().any(|x| x.name == d.name) {
                defs.push(d.clone());
            }
        }
        defs
    }

    pub fn run(&self, ast: &PlanAst, world: &WorldState, gm: &GenerativeModel, seed: u64, labels: &Labels) -> EpisodeOutcome {
        let defs = self.definitions(ast);
        let (plan, applied) = if self.transforms.is_empty() {
            (ast.clone(), Vec::new())
        } else {
            apply_plan_transformations(ast, &self.transforms, &defs, world)
        };
        let mut recorder = Recorder::new();
        recorder
            .begin(NeemHeader {
                format: FORMAT_VERSION,
                world: labels.world.clone(),
                plan: labels.plan.clone(),
                seed,
                gm: gm.name().to_string(),
                initial_world: world.to_toml(),
                transformations: applied,
            })
            .expect("fresh recorder");
        let mut ex = runtime::Exec::new(self, &defs, gm.clone(), seed, world.clone(), Some(recorder), false);
        for f in &plan.fluents {
            ex.declare_fluent(&f.name, f.buffer);
        }
        let result = ex.run(&plan.root);
        let status = match &result {
            Ok(()) => NodeStatus::Succeeded,
            Err(f) => NodeStatus::Failed(f.kind),
        };
        let metrics = Metrics {
            repositions: ex.repositions,
            retries: ex.repositions + ex.handled_retries,
            projections: ex.projections,
            steps: ex.step,
            motions: 0,
        };
        let footer = NeemFooter {
            outcome: status,
            final_fingerprint: ex.truth.fingerprint(),
            final_world: ex.truth.to_toml(),
            repositions: metrics.repositions,
            retries: metrics.retries,
            projections: metrics.projections,
        };
        let neem = ex.recorder.take().expect("recorder").end(footer).expect("recorder live");
        let metrics = Metrics { motions: neem.motions().count(), ..metrics };
        let goals = transport_goals(ast, world)
            .into_iter()
            .map(|g| {
                let ok = check_goal(&ex.truth, &g);
                (g, ok)
            })
            .collect();
        EpisodeOutcome { status, failure: result.err(), world: ex.truth, belief: ex.belief, neem, metrics, goals }
    }

    /// Runs `plan` on a copy of `belief` without recording or repositioning.
    pub fn project(&self, ast: &PlanAst, belief: &WorldState, seed: u64) -> Result<WorldState, FailureSignal> {
        let defs = self.definitions(ast);
        let mut ex = runtime::Exec::new(self, &defs, GenerativeModel::Epl, seed, belief.clone(), None, true);
        ex.run(&ast.root).map(|_| ex.truth)
    }
}

/// Runs a plan in the kitchen interpreter with the given knowledge base.
pub fn interpret_plan(
    ast: &PlanAst,
    world: &WorldState,
    kb: &KnowledgeBase,
    gm: &GenerativeModel,
    seed: u64,
) -> EpisodeOutcome {
    Interpreter::new(kb.clone()).run(ast, world, gm, seed, &Labels::default())
}
