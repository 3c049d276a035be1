//! Shipped worlds, plans, scenarios, knowledge and action hierarchy,
//! embedded at build time.

use crate::plan_lang::{parse_plan, validate_plan_with, Diagnostic, PlanAst, PlanDef};
use crate::vocab::COMPOSITE_ACTIONS;

pub const KITCHEN_WORLD: &str = include_str!("../data/worlds/kitchen.toml");
pub const KITCHEN_AFTER_BREAKFAST_WORLD: &str = include_str!("../data/worlds/kitchen-after-breakfast.toml");
pub const KITCHEN_DISHES_WORLD: &str = include_str!("../data/worlds/kitchen-dishes.toml");

pub const PLAN_LIBRARY: &str = include_str!("../data/plans/library.cpl");

pub const WORLDS: &[(&str, &str)] = &[
    ("kitchen", KITCHEN_WORLD),
    ("kitchen-after-breakfast", KITCHEN_AFTER_BREAKFAST_WORLD),
    ("kitchen-dishes", KITCHEN_DISHES_WORLD),
];

/// Example plans exercising every construct of the language.
pub const PLAN_CORPUS: &[(&str, &str)] = &[
    ("01-spoon", include_str!("../data/plans/corpus/01-spoon.cpl")),
    ("02-two-objects", include_str!("../data/plans/corpus/02-two-objects.cpl")),
    ("03-open-fridge", include_str!("../data/plans/corpus/03-open-fridge.cpl")),
    ("04-look-around", include_str!("../data/plans/corpus/04-look-around.cpl")),
    ("05-fallback-grasps", include_str!("../data/plans/corpus/05-fallback-grasps.cpl")),
    ("06-race", include_str!("../data/plans/corpus/06-race.cpl")),
    ("07-par-waits", include_str!("../data/plans/corpus/07-par-waits.cpl")),
    ("08-try-all", include_str!("../data/plans/corpus/08-try-all.cpl")),
    ("09-guarded", include_str!("../data/plans/corpus/09-guarded.cpl")),
    ("10-retry-handler", include_str!("../data/plans/corpus/10-retry-handler.cpl")),
    ("11-schema", include_str!("../data/plans/corpus/11-schema.cpl")),
    ("12-nested-control", include_str!("../data/plans/corpus/12-nested-control.cpl")),
    ("13-strings", include_str!("../data/plans/corpus/13-strings.cpl")),
    ("14-visible-stance", include_str!("../data/plans/corpus/14-visible-stance.cpl")),
    ("15-tray", include_str!("../data/plans/corpus/15-tray.cpl")),
    ("16-dishwasher", include_str!("../data/plans/corpus/16-dishwasher.cpl")),
    ("17-gripper", include_str!("../data/plans/corpus/17-gripper.cpl")),
    ("18-timeout", include_str!("../data/plans/corpus/18-timeout.cpl")),
    ("19-description", include_str!("../data/plans/corpus/19-description.cpl")),
    ("20-repeat-handled", include_str!("../data/plans/corpus/20-repeat-handled.cpl")),
    ("21-when-fluent", include_str!("../data/plans/corpus/21-when-fluent.cpl")),
    ("22-arms-busy", include_str!("../data/plans/corpus/22-arms-busy.cpl")),
];

/// A shipped task: which world it starts in and the plan that solves it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Scenario {
    pub name: &'static str,
    pub world: &'static str,
    pub plan: &'static str,
    /// Task context the scenario belongs to.
    pub context: &'static str,
}

pub const SCENARIOS: &[Scenario] = &[
    Scenario {
        name: "set-table",
        world: "kitchen",
        plan: include_str!("../data/scenarios/set-table.cpl"),
        context: "set-table",
    },
    Scenario {
        name: "milk-from-fridge",
        world: "kitchen",
        plan: include_str!("../data/scenarios/milk-from-fridge.cpl"),
        context: "set-table",
    },
    Scenario {
        name: "tray",
        world: "kitchen",
        plan: include_str!("../data/scenarios/tray.cpl"),
        context: "set-table",
    },
    Scenario {
        name: "clean-table",
        world: "kitchen-after-breakfast",
        plan: include_str!("../data/scenarios/clean-table.cpl"),
        context: "clean-table",
    },
    Scenario {
        name: "load-dishwasher",
        world: "kitchen-dishes",
        plan: include_str!("../data/scenarios/load-dishwasher.cpl"),
        context: "load-dishwasher",
    },
];

/// Looks up a shipped world by name.
pub fn world(name: &str) -> Option<&'static str> {
    WORLDS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

pub fn scenario(name: &str) -> Option<&'static Scenario> {
    SCENARIOS.iter().find(|s| s.name == name)
}

/// Definitions of the shared plan library.
pub fn library() -> Vec<PlanDef> {
    parse_plan(PLAN_LIBRARY).expect("shipped plan library parses").definitions
}

/// Validates a plan that may call the shared library schemas.
pub fn validate_with_library(ast: &PlanAst) -> Vec<Diagnostic> {
    let mut known: Vec<String> = COMPOSITE_ACTIONS.iter().map(|s| s.to_string()).collect();
    known.extend(library().into_iter().map(|d| d.name));
    validate_plan_with(ast, &known)
}
