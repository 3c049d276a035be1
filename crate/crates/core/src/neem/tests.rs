use std::f64::consts::FRAC_PI_2;

use super::*;
use crate::data::KITCHEN_WORLD;
use crate::motion_exec::{execute_motion, MotionConfig, MotionParams};
use crate::vocab::MotionType;
use crate::world::WorldState;

fn cmd(motion: MotionType, f: impl FnOnce(&mut MotionParams)) -> MotionCommand {
    let mut c = MotionCommand::new(motion);
    f(&mut c.params);
    c
}

fn header(world: &WorldState) -> NeemHeader {
    NeemHeader {
        format: FORMAT_VERSION,
        world: "kitchen".into(),
        plan: "test".into(),
        seed: 7,
        gm: "epl".into(),
        initial_world: world.to_toml(),
        transformations: Vec::new(),
    }
}

/// Drives to the drawer, tries an unreachable tcp target, then opens the drawer.
fn episode() -> Neem {
    let mut world = WorldState::load_str(KITCHEN_WORLD).unwrap();
    let mut rec = Recorder::new();
    rec.begin(header(&world)).unwrap();
    let root = rec.open_node(None, "seq", None, None, 0).unwrap();
    let pick = rec.open_node(Some(root), "perform", Some("picking-up"), Some("(an action (type picking-up))".into()), 0).unwrap();
    rec.annotate(
        pick,
        Annotation::Trial(TrialRecord {
            action: "picking-up".into(),
            object: "spoon-1".into(),
            context: ContextKey { category: "spoon".into(), source: "drawer".into(), destination: "table".into() },
            combo: Combo { arm: ArmSel::Right, grasp: Some(Grasp::Top), ring: 0, heading: 4 },
        }),
    )
    .unwrap();
    let cmds = [
        cmd(MotionType::Going, |p| p.target = Some(Pose::new(0.8, 3.65, 0.0, FRAC_PI_2))),
        cmd(MotionType::MovingTcp, |p| {
            p.arm = Some(ArmSel::Right);
            p.target = Some(Pose::new(5.0, 5.0, 0.9, 0.0));
        }),
        cmd(MotionType::Opening, |p| {
            p.arm = Some(ArmSel::Right);
            p.container = Some("drawer-3".into());
        }),
    ];
    for (i, c) in cmds.iter().enumerate() {
        let node = rec.open_node(Some(pick), "motion", Some(c.motion.as_str()), None, i as u64).unwrap();
        let out = execute_motion(&mut world, None, c, &MotionConfig::default());
        let failure = out.result.err();
        let sample = failure.is_none().then(|| (i as u64, world.robot.base, world.fingerprint()));
        rec.record_motion(node, i as u64, c, &out.events, failure, sample).unwrap();
        let status = failure.map_or(NodeStatus::Succeeded, NodeStatus::Failed);
        rec.set_status(node, status, i as u64).unwrap();
    }
    rec.set_status(pick, NodeStatus::Failed(FailureKind::Unreachable), 3).unwrap();
    rec.set_status(root, NodeStatus::Failed(FailureKind::Unreachable), 3).unwrap();
    rec.end(NeemFooter {
        outcome: NodeStatus::Failed(FailureKind::Unreachable),
        final_fingerprint: world.fingerprint(),
        final_world: world.to_toml(),
        repositions: 1,
        retries: 2,
        projections: 0,
    })
    .unwrap()
}

#[test]
fn recorder_lifecycle() {
    let mut rec = Recorder::new();
    assert_eq!(rec.open_node(None, "seq", None, None, 0), Err(LifecycleViolation::NotStarted));
    let w = WorldState::load_str(KITCHEN_WORLD).unwrap();
    rec.begin(header(&w)).unwrap();
    assert_eq!(rec.begin(header(&w)), Err(LifecycleViolation::AlreadyStarted));
    assert_eq!(rec.open_node(Some(3), "seq", None, None, 0), Err(LifecycleViolation::UnknownNode(3)));
    let footer = NeemFooter {
        outcome: NodeStatus::Succeeded,
        final_fingerprint: 0,
        final_world: String::new(),
        repositions: 0,
        retries: 0,
        projections: 0,
    };
    rec.end(footer.clone()).unwrap();
    assert_eq!(rec.end(footer).unwrap_err(), LifecycleViolation::Ended);
    assert_eq!(rec.annotate(0, Annotation::Skipped { guard: "x".into() }), Err(LifecycleViolation::Ended));
}

#[test]
fn export_import_round_trip() {
    let n = episode();
    let text = export_neem(&n);
    let back = import_neem(&text).unwrap();
    assert_eq!(back, n);
    assert_eq!(export_neem(&back), text);
    assert!(n.motions().any(|(_, f)| f == Some(FailureKind::Unreachable)));
    assert_eq!(n.children(1).count(), 3);
}

#[test]
fn export_is_deterministic() {
    assert_eq!(export_neem(&episode()), export_neem(&episode()));
}

#[test]
fn truncated_documents_are_rejected() {
    let text = export_neem(&episode());
    let lines = text.lines().count();
    let cut = &text[..text.len() - 5];
    assert_eq!(import_neem(cut).unwrap_err().record, lines);
    let without_footer: String = text.split_inclusive('\n').take(lines - 1).collect();
    assert_eq!(import_neem(&without_footer).unwrap_err().record, lines);
    let doubled = format!("{text}{}", text.lines().last().unwrap());
    assert!(import_neem(&format!("{doubled}\n")).is_err());
    let headless: String = text.split_inclusive('\n').skip(1).collect();
    assert_eq!(import_neem(&headless).unwrap_err().record, 1);
}

#[test]
fn replay_reproduces_the_episode() {
    let n = episode();
    let w = replay_neem(&n).unwrap();
    assert_eq!(w.fingerprint(), n.footer.final_fingerprint);
}

#[test]
fn replay_detects_tampering() {
    let mut n = episode();
    if let ExperienceRecord::Motion { command, .. } = &mut n.experience[0] {
        command.params.target = Some(Pose::new(0.8, 3.6, 0.0, FRAC_PI_2));
    }
    assert!(replay_neem(&n).is_err());
    let mut n = episode();
    n.footer.final_fingerprint ^= 1;
    assert!(matches!(replay_neem(&n), Err(ReplayDivergence::FinalWorld { .. })));
}

#[test]
fn queries_over_rows() {
    let neems = vec![episode(), episode()];
    let q = |s: &str| query_neems(&neems, &NeemQuery::parse(s).unwrap()).unwrap();
    assert_eq!(q("count episodes"), QueryResult::Count(2));
    assert_eq!(q("count actions type=picking-up category=spoon"), QueryResult::Count(2));
    assert_eq!(q("count actions category=bowl"), QueryResult::Count(0));
    assert_eq!(q("success-rate actions category=bowl").to_string(), "undefined");
    assert_eq!(q("success-rate actions"), QueryResult::Rate(Some(0.0)));
    assert_eq!(q("mean episodes retries"), QueryResult::Mean(Some(2.0)));
    assert_eq!(q("most-frequent actions grasp"), QueryResult::Mode(Some("top".into())));
    assert_eq!(q("most-frequent actions kind"), QueryResult::Mode(Some("unreachable".into())));
    assert!(matches!(NeemQuery::parse("count actions colour=red"), Err(QueryError::UnknownField { .. })));
    assert!(matches!(NeemQuery::parse("mean episodes"), Err(QueryError::MissingField(_))));
    assert!(matches!(NeemQuery::parse("median episodes retries"), Err(QueryError::UnknownAggregate(_))));
    let nq = NeemQuery::parse("mean actions arm").unwrap();
    assert!(matches!(query_neems(&neems, &nq), Err(QueryError::NotNumeric { .. })));
}

#[test]
fn store_persists_and_indexes() {
    let dir = tempfile::tempdir().unwrap();
    let mut store = NeemStore::open(dir.path()).unwrap();
    assert_eq!(store.append(episode()).unwrap(), 0);
    assert_eq!(store.append(episode()).unwrap(), 1);
    let reopened = NeemStore::open(dir.path()).unwrap();
    assert_eq!(reopened.len(), 2);
    assert_eq!(reopened.neems(), store.neems());
    let ctx = ContextKey { category: "spoon".into(), source: "drawer".into(), destination: "table".into() };
    assert_eq!(reopened.lookup("picking-up", &ctx, "failed"), vec![0, 1]);
    assert!(reopened.lookup("picking-up", &ctx, "succeeded").is_empty());
}
