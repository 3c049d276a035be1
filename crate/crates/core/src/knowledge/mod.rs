//! Knowledge base with computable predicates, and the generative models
//! that answer parameter queries from it.

mod computables;
mod experience;
mod gm;
mod kb;

pub use computables::register_world_computables;
pub use experience::{train_experience_model, Counts, ExperienceModel, TrialKey, DEFAULT_ALPHA};
pub use gm::{
    context_key, epl_grasp, infer_roles, proximity_arm, resolve_designator_parameters, GenerativeModel,
    LocationRole, Projector, QueryContext, Resolution, RoleTarget, Roles, DEFAULT_LIFT, DEFAULT_LOWER,
    DEFAULT_PROSPECTIVE_BUDGET, EXPERIENCE_CANDIDATES, UNINFORMED_SAMPLE_BUDGET,
};
pub use kb::{
    parse_atom, parse_goal, Atom, Clause, Evaluator, KbError, KnowledgeBase, QueryAnswer, Solution, Term,
    DEFAULT_DEPTH_LIMIT,
};

pub const KITCHEN_KB: &str = include_str!("../../data/kb/kitchen.kb");

impl KnowledgeBase {
    /// Shipped kitchen knowledge with the world computables registered.
    pub fn kitchen() -> Self {
        let mut kb = KnowledgeBase::new();
        register_world_computables(&mut kb).expect("fresh knowledge base");
        kb.load_str(KITCHEN_KB).expect("shipped knowledge parses");
        kb
    }
}

#[cfg(test)]
mod tests;
