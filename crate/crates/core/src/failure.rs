use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Closed set of failure kinds raised by motions and actions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureKind {
    Unreachable,
    Collision,
    PerceptionFailure,
    ObjectSlipped,
    NoSolution,
    Timeout,
}

impl FailureKind {
    pub const ALL: [FailureKind; 6] = [
        FailureKind::Unreachable,
        FailureKind::Collision,
        FailureKind::PerceptionFailure,
        FailureKind::ObjectSlipped,
        FailureKind::NoSolution,
        FailureKind::Timeout,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FailureKind::Unreachable => "unreachable",
            FailureKind::Collision => "collision",
            FailureKind::PerceptionFailure => "perception-failure",
            FailureKind::ObjectSlipped => "object-slipped",
            FailureKind::NoSolution => "no-solution",
            FailureKind::Timeout => "timeout",
        }
    }
}

impl fmt::Display for FailureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FailureKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FailureKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown failure kind `{s}`"))
    }
}
