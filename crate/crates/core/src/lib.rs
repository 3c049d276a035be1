//! Execution stack for underdetermined fetch-and-place actions.
//!
//! Generalized action plans are written in a small s-expression plan
//! language ([`plan_lang`]), contextualized into motion plans by the
//! [`contextualizer`] with parameters answered by a generative model from
//! [`knowledge`], and run by the [`executive`] against a deterministic 2.5D
//! kitchen ([`world`], [`motion_exec`]). Every episode is recorded as a
//! narrative-enabled episodic memory ([`neem`]) that can be queried, learned
//! from and replayed.

pub mod contextualizer;
pub mod data;
pub mod executive;
pub mod failure;
pub mod geom;
pub mod knowledge;
pub mod motion_exec;
pub mod neem;
pub mod plan_lang;
pub mod vocab;
pub mod world;

pub use failure::FailureKind;
