//! Scenario specs: a world, a plan, a generative model and the seeds to run.

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use cram_core::data;
use cram_core::knowledge::{
    train_experience_model, ExperienceModel, GenerativeModel, KnowledgeBase, DEFAULT_ALPHA, DEFAULT_PROSPECTIVE_BUDGET,
};
use cram_core::neem::{Neem, NeemStore};
use cram_core::plan_lang::{parse_plan, ControlNode, PlanAst};
use cram_core::world::WorldState;

use crate::CliError;

pub const TASK_CONTEXTS: [&str; 3] = ["set-table", "clean-table", "load-dishwasher"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GmKind {
    Uninformed,
    Epl,
    Prospective,
    Experience,
}

impl GmKind {
    pub const ALL: [GmKind; 4] = [GmKind::Uninformed, GmKind::Epl, GmKind::Prospective, GmKind::Experience];

    pub fn as_str(self) -> &'static str {
        match self {
            GmKind::Uninformed => "uninformed",
            GmKind::Epl => "epl",
            GmKind::Prospective => "prospective",
            GmKind::Experience => "experience",
        }
    }
}

impl fmt::Display for GmKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GmKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        GmKind::ALL
            .into_iter()
            .find(|g| g.as_str() == s)
            .ok_or_else(|| format!("unknown generative model `{s}` (uninformed|epl|prospective|experience)"))
    }
}

/// What a generative model needs besides its kind.
#[derive(Debug, Clone, Default)]
pub struct ModelInputs {
    pub experience: Option<Arc<ExperienceModel>>,
    pub prospective_budget: Option<usize>,
}

impl ModelInputs {
    pub fn trained_on(neems: &[Neem]) -> Self {
        ModelInputs { experience: Some(Arc::new(train_experience_model(neems, DEFAULT_ALPHA))), ..Default::default() }
    }

    pub fn model(&self, kind: GmKind) -> Result<GenerativeModel, CliError> {
        Ok(match kind {
            GmKind::Uninformed => GenerativeModel::Uninformed,
            GmKind::Epl => GenerativeModel::Epl,
            GmKind::Prospective => {
                GenerativeModel::Prospective { budget: self.prospective_budget.unwrap_or(DEFAULT_PROSPECTIVE_BUDGET) }
            }
            GmKind::Experience => match &self.experience {
                Some(m) => GenerativeModel::Experience(m.clone()),
                None => return Err(CliError::Usage("the experience model needs --train-from".into())),
            },
        })
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioSpec {
    pub name: String,
    pub world_label: String,
    pub world: WorldState,
    pub plan: PlanAst,
    pub context: String,
    pub gm: GmKind,
    pub seeds: Vec<u64>,
    /// Overrides the retry count of every handle-failure in the plan.
    pub retry_budget: Option<u32>,
    pub kb: KnowledgeBase,
}

impl ScenarioSpec {
    /// Spec for a shipped scenario with the kitchen knowledge base.
    pub fn shipped(name: &str, gm: GmKind, seeds: Vec<u64>) -> Result<Self, CliError> {
        let s = data::scenario(name).ok_or_else(|| CliError::Usage(format!("unknown scenario `{name}`")))?;
        let world = load_world(s.world)?;
        let plan = parse_plan(s.plan).map_err(|e| CliError::Input(format!("{name}: {e}")))?;
        let spec = ScenarioSpec {
            name: s.name.to_string(),
            world_label: s.world.to_string(),
            world,
            plan,
            context: s.context.to_string(),
            gm,
            seeds,
            retry_budget: None,
            kb: KnowledgeBase::kitchen(),
        };
        spec.check()?;
        Ok(spec)
    }

    pub fn check(&self) -> Result<(), CliError> {
        if self.seeds.is_empty() {
            return Err(CliError::Usage("a scenario needs at least one seed".into()));
        }
        if !TASK_CONTEXTS.contains(&self.context.as_str()) {
            return Err(CliError::Usage(format!("unknown task context `{}`", self.context)));
        }
        let diags = data::validate_with_library(&self.plan);
        if let Some(d) = diags.first() {
            return Err(CliError::Input(format!("{}: {d}", self.name)));
        }
        Ok(())
    }

    /// Plan with the retry budget applied.
    pub fn effective_plan(&self) -> PlanAst {
        let mut plan = self.plan.clone();
        if let Some(n) = self.retry_budget {
            set_retries(&mut plan.root, n);
        }
        plan
    }
}

fn set_retries(node: &mut ControlNode, n: u32) {
    match node {
        ControlNode::Seq(cs)
        | ControlNode::Par(cs)
        | ControlNode::Pursue(cs)
        | ControlNode::TryInOrder(cs)
        | ControlNode::TryAll(cs)
        | ControlNode::WithRobotAtLocation { body: cs, .. }
        | ControlNode::When { body: cs, .. } => cs.iter_mut().for_each(|c| set_retries(c, n)),
        ControlNode::HandleFailure { body, handlers, max_retries } => {
            *max_retries = n;
            set_retries(body, n);
            handlers.iter_mut().flat_map(|h| h.body.iter_mut()).for_each(|c| set_retries(c, n));
        }
        _ => {}
    }
}

/// A shipped world by name, or a world file.
pub fn load_world(name_or_path: &str) -> Result<WorldState, CliError> {
    let r = match data::world(name_or_path) {
        Some(text) => WorldState::load_str(text),
        None => WorldState::load_file(Path::new(name_or_path)),
    };
    r.map_err(|e| CliError::Input(format!("{name_or_path}: {e}")))
}

/// Parses `7`, `0..100`, `0..=99` or `1,5,9`.
pub fn parse_seeds(text: &str) -> Result<Vec<u64>, String> {
    let num = |s: &str| s.trim().parse::<u64>().map_err(|_| format!("bad seed `{s}`"));
    let seeds = if let Some((a, b)) = text.split_once("..=") {
        (num(a)?..=num(b)?).collect()
    } else if let Some((a, b)) = text.split_once("..") {
        (num(a)?..num(b)?).collect()
    } else {
        text.split(',').map(num).collect::<Result<Vec<_>, _>>()?
    };
    Ok(seeds)
}

/// Trains the experience model on every episode of a NEEM store.
pub fn train_from(dir: &Path) -> Result<ModelInputs, CliError> {
    let store = NeemStore::open(dir).map_err(|e| CliError::Input(format!("{}: {e}", dir.display())))?;
    if store.is_empty() {
        return Err(CliError::Input(format!("{}: no episodes to train on", dir.display())));
    }
    Ok(ModelInputs::trained_on(store.neems()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_lists() {
        assert_eq!(parse_seeds("3").unwrap(), vec![3]);
        assert_eq!(parse_seeds("0..3").unwrap(), vec![0, 1, 2]);
        assert_eq!(parse_seeds("0..=3").unwrap(), vec![0, 1, 2, 3]);
        assert_eq!(parse_seeds("4,1").unwrap(), vec![4, 1]);
        assert!(parse_seeds("a..b").is_err());
        assert!(parse_seeds("5..2").unwrap().is_empty());
    }

    #[test]
    fn zero_seeds_is_rejected() {
        assert!(matches!(ScenarioSpec::shipped("set-table", GmKind::Epl, vec![]), Err(CliError::Usage(_))));
    }

    #[test]
    fn retry_budget_reaches_every_handler() {
        let mut spec = ScenarioSpec::shipped("set-table", GmKind::Epl, vec![0]).unwrap();
        spec.retry_budget = Some(2);
        let printed = cram_core::plan_lang::unparse_plan(&spec.effective_plan());
        assert_eq!(printed.matches("(retries 2)").count(), 5);
        assert!(!printed.contains("(retries 10)"));
    }

    #[test]
    fn experience_needs_training() {
        assert!(ModelInputs::default().model(GmKind::Experience).is_err());
        assert!(matches!(
            ModelInputs::default().model(GmKind::Prospective).unwrap(),
            GenerativeModel::Prospective { budget: DEFAULT_PROSPECTIVE_BUDGET }
        ));
    }
}
