//! Computable predicates evaluated against the belief world.

use std::sync::Arc;

use super::kb::{Evaluator, KbError, KnowledgeBase, Term};
use crate::geom::Pose;
use crate::motion_exec::MotionConfig;
use crate::world::{ArmSel, WorldState};

/// Candidate values for an argument: itself if bound, else all of `domain`.
fn values(t: &Term, domain: impl Fn() -> Vec<Term>) -> Vec<Term> {
    match t {
        Term::Var(_) => domain(),
        other => vec![other.clone()],
    }
}

fn objects(w: &WorldState) -> Vec<Term> {
    w.objects.iter().map(|o| Term::sym(&o.id)).collect()
}

fn target_pose(w: &WorldState, t: &Term) -> Option<Pose> {
    match t {
        Term::Pose(p) => Some(*p),
        Term::Sym(s) => w.object(s).map(|o| o.pose),
        _ => None,
    }
}

fn visible_from(args: &[Term], w: &WorldState) -> Vec<Vec<Term>> {
    let Some(base) = args[0].as_pose() else { return Vec::new() };
    values(&args[1], || objects(w))
        .into_iter()
        .filter(|o| match o {
            Term::Sym(id) => w.visible_from(&base, id).unwrap_or(false),
            Term::Pose(p) => w.visible_point_from(&base, p.xy()),
            _ => false,
        })
        .map(|o| vec![args[0].clone(), o])
        .collect()
}

fn reachable_from(args: &[Term], w: &WorldState) -> Vec<Vec<Term>> {
    let Some(base) = args[0].as_pose() else { return Vec::new() };
    let arms = values(&args[2], || ArmSel::ALL.iter().map(|a| Term::sym(a.as_str())).collect());
    let mut out = Vec::new();
    for t in values(&args[1], || objects(w)) {
        let Some(p) = target_pose(w, &t) else { continue };
        for a in &arms {
            let Some(arm) = a.as_sym().and_then(|s| s.parse::<ArmSel>().ok()) else { continue };
            if w.reachable_from(&base, &p, arm) {
                out.push(vec![args[0].clone(), t.clone(), a.clone()]);
            }
        }
    }
    out
}

fn stable_at(args: &[Term], w: &WorldState) -> Vec<Vec<Term>> {
    let (Some(id), Some(p)) = (args[0].as_sym(), args[1].as_pose()) else { return Vec::new() };
    match w.support_below(p.xy(), p.z) {
        Some(s) if w.stable_at(id, &p, &s.id) => vec![args.to_vec()],
        _ => Vec::new(),
    }
}

fn inside(args: &[Term], w: &WorldState) -> Vec<Vec<Term>> {
    values(&args[0], || objects(w))
        .into_iter()
        .filter_map(|o| {
            let c = w.container_of(o.as_sym()?)?;
            let c = Term::sym(&c.id);
            (args[1].is_ground().then_some(&args[1]).is_none_or(|want| *want == c)).then(|| vec![o, c])
        })
        .collect()
}

fn on(args: &[Term], w: &WorldState) -> Vec<Vec<Term>> {
    values(&args[0], || objects(w))
        .into_iter()
        .filter_map(|o| {
            let s = w.object(o.as_sym()?)?.support.clone()?;
            if w.container(&s).is_some() {
                return None;
            }
            let s = Term::sym(s);
            (args[1].is_ground().then_some(&args[1]).is_none_or(|want| *want == s)).then(|| vec![o, s])
        })
        .collect()
}

fn object_category(args: &[Term], w: &WorldState) -> Vec<Vec<Term>> {
    values(&args[0], || objects(w))
        .into_iter()
        .filter_map(|o| {
            let c = Term::sym(&w.object(o.as_sym()?)?.category);
            (args[1].is_ground().then_some(&args[1]).is_none_or(|want| *want == c)).then(|| vec![o, c])
        })
        .collect()
}

fn object_test(args: &[Term], w: &WorldState, test: impl Fn(&crate::world::ObjectInstance) -> bool) -> Vec<Vec<Term>> {
    values(&args[0], || objects(w))
        .into_iter()
        .filter(|o| o.as_sym().and_then(|id| w.object(id)).is_some_and(&test))
        .map(|o| vec![o])
        .collect()
}

/// Registers the shipped computables on `kb`.
pub fn register_world_computables(kb: &mut KnowledgeBase) -> Result<(), KbError> {
    let single_hand = MotionConfig::default().single_hand_cog;
    let table: [(&str, usize, Evaluator); 8] = [
        ("visible-from", 2, Arc::new(visible_from)),
        ("reachable-from", 3, Arc::new(reachable_from)),
        ("stable-at", 2, Arc::new(stable_at)),
        ("inside", 2, Arc::new(inside)),
        ("on", 2, Arc::new(on)),
        ("object-category", 2, Arc::new(object_category)),
        ("object-flat", 1, Arc::new(|a: &[Term], w: &WorldState| object_test(a, w, |o| o.flat))),
        (
            "object-off-center",
            1,
            Arc::new(move |a: &[Term], w: &WorldState| object_test(a, w, |o| o.cog_offset() > single_hand)),
        ),
    ];
    for (name, arity, eval) in table {
        kb.register_computable(name, arity, eval)?;
    }
    Ok(())
}
