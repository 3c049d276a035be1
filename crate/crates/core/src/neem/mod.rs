//! Narrative-enabled episodic memories: low-level experience records plus a
//! task-tree narrative linked to them.

mod format;
mod query;
mod replay;
mod store;

pub use format::{export_neem, import_neem, FormatError};
pub use query::{action_rows, episode_rows, query_neems, Aggregate, NeemQuery, QueryError, QueryResult, Row, Table};
pub use replay::{replay_neem, ReplayDivergence};
pub use store::{IndexEntry, NeemStore, StoreError};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::contextualizer::AppliedTransform;
use crate::failure::FailureKind;
use crate::geom::Pose;
use crate::motion_exec::MotionCommand;
use crate::world::{ArmSel, Event, Grasp};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct NeemHeader {
    pub format: u32,
    /// Name of the world document the episode started from.
    pub world: String,
    pub plan: String,
    pub seed: u64,
    pub gm: String,
    /// Full initial world document; enough to replay the episode.
    pub initial_world: String,
    #[serde(default)]
    pub transformations: Vec<AppliedTransform>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "kebab-case")]
pub enum ExperienceRecord {
    /// A motion command as issued, with its outcome.
    Motion {
        step: u64,
        node: usize,
        command: MotionCommand,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        failure: Option<FailureKind>,
    },
    Event(Event),
    /// World state summary at a phase boundary.
    Sample { step: u64, base: Pose, fingerprint: u64 },
}

impl ExperienceRecord {
    pub fn is_world_mutating(&self) -> bool {
        matches!(self, ExperienceRecord::Event(e) if e.kind.mutates_world())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "failure", rename_all = "kebab-case")]
pub enum NodeStatus {
    Pending,
    Running,
    Suspended,
    Succeeded,
    Failed(FailureKind),
    Cancelled,
}

impl NodeStatus {
    pub fn is_terminal(self) -> bool {
        matches!(self, NodeStatus::Succeeded | NodeStatus::Failed(_) | NodeStatus::Cancelled)
    }

    pub fn outcome(self) -> &'static str {
        match self {
            NodeStatus::Succeeded => "succeeded",
            NodeStatus::Failed(_) => "failed",
            NodeStatus::Cancelled => "cancelled",
            NodeStatus::Pending => "pending",
            NodeStatus::Running => "running",
            NodeStatus::Suspended => "suspended",
        }
    }
}

/// Experience-model key of a transport: what is moved, from where, to where.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct ContextKey {
    pub category: String,
    pub source: String,
    pub destination: String,
}

/// Discretized parameterization of one pick or place attempt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct Combo {
    pub arm: ArmSel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grasp: Option<Grasp>,
    pub ring: usize,
    pub heading: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct TrialRecord {
    pub action: String,
    pub object: String,
    pub context: ContextKey,
    pub combo: Combo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "annotation", rename_all = "kebab-case")]
pub enum Annotation {
    /// A parameter query issued by this node and the answer it received.
    Query {
        schema: String,
        gm: String,
        variables: Vec<String>,
        answer: BTreeMap<String, String>,
        #[serde(default)]
        samples: u32,
        #[serde(default)]
        projections: u32,
    },
    Trial(TrialRecord),
    Reposition { from: Pose, to: Pose },
    Skipped { guard: String },
    Retry { attempt: u32, failure: FailureKind },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct NarrativeNode {
    pub id: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<usize>,
    /// Control construct keyword, or `perform`/`motion`.
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action_type: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub designator: Option<String>,
    #[serde(flatten)]
    pub status: NodeStatus,
    #[serde(default)]
    pub retries: u32,
    pub start_step: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end_step: Option<u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub annotations: Vec<Annotation>,
}

/// Narrative node → half-open range of experience records it caused.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CausalLink {
    pub node: usize,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct NeemFooter {
    pub outcome: NodeStatus,
    pub final_fingerprint: u64,
    pub final_world: String,
    pub repositions: u32,
    pub retries: u32,
    pub projections: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Neem {
    pub header: NeemHeader,
    pub experience: Vec<ExperienceRecord>,
    pub narrative: Vec<NarrativeNode>,
    pub links: Vec<CausalLink>,
    pub footer: NeemFooter,
}

impl Neem {
    pub fn motions(&self) -> impl Iterator<Item = (&MotionCommand, Option<FailureKind>)> {
        self.experience.iter().filter_map(|r| match r {
            ExperienceRecord::Motion { command, failure, .. } => Some((command, *failure)),
            _ => None,
        })
    }

    pub fn events(&self) -> impl Iterator<Item = &Event> {
        self.experience.iter().filter_map(|r| match r {
            ExperienceRecord::Event(e) => Some(e),
            _ => None,
        })
    }

    pub fn node(&self, id: usize) -> Option<&NarrativeNode> {
        self.narrative.get(id)
    }

    pub fn children(&self, id: usize) -> impl Iterator<Item = &NarrativeNode> {
        self.narrative.iter().filter(move |n| n.parent == Some(id))
    }

    /// Structural checks: links inside the experience, nodes well-parented.
    pub fn check_links(&self) -> Result<(), String> {
        for l in &self.links {
            if l.start > l.end || l.end > self.experience.len() {
                return Err(format!("link {l:?} outside experience of {}", self.experience.len()));
            }
            if l.node >= self.narrative.len() {
                return Err(format!("link {l:?} names unknown node"));
            }
        }
        for (i, n) in self.narrative.iter().enumerate() {
            if n.id != i || n.parent.is_some_and(|p| p >= i) {
                return Err(format!("node {i} badly numbered or parented"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LifecycleViolation {
    #[error("recording before begin")]
    NotStarted,
    #[error("episode already ended")]
    Ended,
    #[error("episode begun twice")]
    AlreadyStarted,
    #[error("unknown narrative node {0}")]
    UnknownNode(usize),
}

#[derive(Debug, Default)]
enum Phase {
    #[default]
    Idle,
    Recording,
    Ended,
}

/// Builds a NEEM incrementally while an episode runs.
#[derive(Debug, Default)]
pub struct Recorder {
    phase: Phase,
    header: Option<NeemHeader>,
    experience: Vec<ExperienceRecord>,
    narrative: Vec<NarrativeNode>,
    links: Vec<CausalLink>,
}

impl Recorder {
    pub fn new() -> Self {
        Self::default()
    }

    fn live(&self) -> Result<(), LifecycleViolation> {
        match self.phase {
            Phase::Idle => Err(LifecycleViolation::NotStarted),
            Phase::Recording => Ok(()),
            Phase::Ended => Err(LifecycleViolation::Ended),
        }
    }

    pub fn begin(&mut self, header: NeemHeader) -> Result<(), LifecycleViolation> {
        match self.phase {
            Phase::Idle => {
                self.phase = Phase::Recording;
                self.header = Some(header);
                Ok(())
            }
            Phase::Recording => Err(LifecycleViolation::AlreadyStarted),
            Phase::Ended => Err(LifecycleViolation::Ended),
        }
    }

    pub fn is_recording(&self) -> bool {
        matches!(self.phase, Phase::Recording)
    }

    pub fn open_node(
        &mut self,
        parent: Option<usize>,
        kind: &str,
        action_type: Option<&str>,
        designator: Option<String>,
        step: u64,
    ) -> Result<usize, LifecycleViolation> {
        self.live()?;
        if let Some(p) = parent {
            if p >= self.narrative.len() {
                return Err(LifecycleViolation::UnknownNode(p));
            }
        }
        let id = self.narrative.len();
        self.narrative.push(NarrativeNode {
            id,
            parent,
            kind: kind.to_string(),
            action_type: action_type.map(str::to_string),
            designator,
            status: NodeStatus::Running,
            retries: 0,
            start_step: step,
            end_step: None,
            annotations: Vec::new(),
        });
        Ok(id)
    }

    fn node_mut(&mut self, id: usize) -> Result<&mut NarrativeNode, LifecycleViolation> {
        self.live()?;
        self.narrative.get_mut(id).ok_or(LifecycleViolation::UnknownNode(id))
    }

    pub fn set_status(&mut self, id: usize, status: NodeStatus, step: u64) -> Result<(), LifecycleViolation> {
        let n = self.node_mut(id)?;
        n.status = status;
        if status.is_terminal() {
            n.end_step = Some(step);
        }
        Ok(())
    }

    pub fn status(&self, id: usize) -> Option<NodeStatus> {
        self.narrative.get(id).map(|n| n.status)
    }

    pub fn set_retries(&mut self, id: usize, retries: u32) -> Result<(), LifecycleViolation> {
        self.node_mut(id)?.retries = retries;
        Ok(())
    }

    pub fn annotate(&mut self, id: usize, a: Annotation) -> Result<(), LifecycleViolation> {
        self.node_mut(id)?.annotations.push(a);
        Ok(())
    }

    /// Records one motion, its events and, on success, a state sample, all
    /// linked to `node`.
    pub fn record_motion(
        &mut self,
        node: usize,
        step: u64,
        command: &MotionCommand,
        events: &[Event],
        failure: Option<FailureKind>,
        sample: Option<(u64, Pose, u64)>,
    ) -> Result<(), LifecycleViolation> {
        self.live()?;
        if node >= self.narrative.len() {
            return Err(LifecycleViolation::UnknownNode(node));
        }
        let start = self.experience.len();
        self.experience.push(ExperienceRecord::Motion { step, node, command: command.clone(), failure });
        self.experience.extend(events.iter().cloned().map(ExperienceRecord::Event));
        if let Some((step, base, fingerprint)) = sample {
            self.experience.push(ExperienceRecord::Sample { step, base, fingerprint });
        }
        self.links.push(CausalLink { node, start, end: self.experience.len() });
        Ok(())
    }

    pub fn narrative(&self) -> &[NarrativeNode] {
        &self.narrative
    }

    pub fn end(&mut self, footer: NeemFooter) -> Result<Neem, LifecycleViolation> {
        self.live()?;
        self.phase = Phase::Ended;
        Ok(Neem {
            header: self.header.take().expect("header set at begin"),
            experience: std::mem::take(&mut self.experience),
            narrative: std::mem::take(&mut self.narrative),
            links: std::mem::take(&mut self.links),
            footer,
        })
    }
}

#[cfg(test)]
mod tests;
