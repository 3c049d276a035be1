//! Re-executes the recorded motions of an episode against its initial world.

use thiserror::Error;

use super::{ExperienceRecord, Neem};
use crate::motion_exec::{execute_motion, MotionConfig};
use crate::world::{Event, WorldState};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReplayDivergence {
    #[error("initial world does not load: {0}")]
    InitialWorld(String),
    #[error("record {record}: {detail}")]
    Record { record: usize, detail: String },
    #[error("final fingerprint {actual:016x}, recorded {expected:016x}")]
    FinalWorld { expected: u64, actual: u64 },
}

/// Replays every motion and checks outcomes, events, samples and the final
/// world against the recording. Returns the reproduced final world.
pub fn replay_neem(neem: &Neem) -> Result<WorldState, ReplayDivergence> {
    let mut world =
        WorldState::load_str(&neem.header.initial_world).map_err(|e| ReplayDivergence::InitialWorld(e.to_string()))?;
    let cfg = MotionConfig::default();
    let mut pending: std::vec::IntoIter<Event> = Vec::new().into_iter();
    for (i, rec) in neem.experience.iter().enumerate() {
        let diverge = |detail: String| ReplayDivergence::Record { record: i, detail };
        match rec {
            ExperienceRecord::Motion { command, failure, .. } => {
                if let Some(e) = pending.next() {
                    return Err(diverge(format!("replay produced extra event {}", e.kind.name())));
                }
                let out = execute_motion(&mut world, None, command, &cfg);
                if out.result.err() != *failure {
                    return Err(diverge(format!("motion {:?}: recorded {failure:?}", command.motion)));
                }
                pending = out.events.into_iter();
            }
            ExperienceRecord::Event(e) => match pending.next() {
                Some(actual) if actual == *e => {}
                Some(actual) => return Err(diverge(format!("event {:?}, recorded {:?}", actual, e))),
                None => return Err(diverge(format!("recorded event {} not reproduced", e.kind.name()))),
            },
            ExperienceRecord::Sample { base, fingerprint, .. } => {
                if world.fingerprint() != *fingerprint || !world.robot.base.approx_eq(base, 1e-9) {
                    return Err(diverge("state sample differs".into()));
                }
            }
        }
    }
    if let Some(e) = pending.next() {
        return Err(ReplayDivergence::Record {
            record: neem.experience.len(),
            detail: format!("replay produced extra event {}", e.kind.name()),
        });
    }
    let actual = world.fingerprint();
    if actual != neem.footer.final_fingerprint {
        return Err(ReplayDivergence::FinalWorld { expected: neem.footer.final_fingerprint, actual });
    }
    Ok(world)
}
