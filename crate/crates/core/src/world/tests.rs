use super::*;
use crate::data::KITCHEN_WORLD;

fn kitchen() -> WorldState {
    WorldState::load_str(KITCHEN_WORLD).unwrap()
}

#[test]
fn reference_kitchen_inventory() {
    let w = kitchen();
    assert_eq!(w.furniture.len(), 6);
    assert_eq!(w.containers.len(), 4);
    assert!(w.objects.len() >= 5);
}

#[test]
fn save_load_fixpoint() {
    let w = kitchen();
    let text = w.to_toml();
    let again = WorldState::load_str(&text).unwrap();
    assert_eq!(again, w);
    assert_eq!(again.to_toml(), text);
}

#[test]
fn schema_error_names_path() {
    let bad = KITCHEN_WORLD.replace("height = 0.07", "height = \"tall\"");
    match WorldState::load_str(&bad) {
        Err(WorldError::Schema { path, .. }) => assert!(path.starts_with("objects[1].height"), "{path}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn empty_object_list_is_valid() {
    let mut w = kitchen();
    w.objects.clear();
    let text = w.to_toml();
    assert!(WorldState::load_str(&text).unwrap().objects.is_empty());
}

#[test]
fn milk_hidden_until_fridge_opens() {
    let w = kitchen();
    let front = Pose::new(4.45, 3.9, 0.0, std::f64::consts::FRAC_PI_2);
    assert!(!w.visible_from(&front, "milk-1").unwrap());
    let open = w.with_open("fridge");
    assert!(open.visible_from(&front, "milk-1").unwrap());
    assert!(matches!(w.visible_from(&front, "ghost"), Err(WorldError::UnknownObject(_))));
}

#[test]
fn reach_limits_and_open_drawer() {
    let w = kitchen().with_open("drawer-3");
    let spoon = w.object("spoon-1").unwrap().pose;
    let base = Pose::new(spoon.x, spoon.y - 0.55, 0.0, std::f64::consts::FRAC_PI_2);
    assert!(w.standable(base.xy()));
    assert!(w.reachable_from(&base, &spoon, ArmSel::Right));
    let far = Pose::new(spoon.x, spoon.y - 0.85 - 0.1 - 0.03, 0.0, std::f64::consts::FRAC_PI_2);
    assert!(!w.reachable_from(&far, &spoon, ArmSel::Right));
    assert!(!kitchen().reachable_from(&base, &kitchen().object("spoon-1").unwrap().pose, ArmSel::Right));
}

#[test]
fn stability_margin() {
    let w = kitchen();
    let mug = w.object("mug-1").unwrap().pose;
    assert!(w.stable_at("mug-1", &mug, "sideboard-top"));
    let edge = Pose::new(5.4 + STABILITY_MARGIN - 0.01, 2.0, 0.9, 0.0);
    assert!(!w.stable_at("mug-1", &edge, "sideboard-top"));
}

#[test]
fn snapshot_restore_and_unknown_token() {
    let mut store = SnapshotStore::new();
    let mut w = kitchen();
    let t0 = store.snapshot(&w);
    w.set_joint("drawer-3", 0.4);
    let t1 = store.snapshot(&w);
    w.robot.base.x = 1.0;
    assert_eq!(store.restore(t0).unwrap(), kitchen());
    assert_eq!(store.restore(t1).unwrap().container("drawer-3").unwrap().joint, 0.4);
    assert_eq!(store.restore(SnapshotToken(99)), Err(WorldError::UnknownToken(99)));
}

#[test]
fn drawer_carries_contents() {
    let mut w = kitchen();
    w.set_joint("drawer-3", 0.4);
    let spoon = w.object("spoon-1").unwrap().pose;
    assert!((spoon.y - 4.2).abs() < 1e-9);
}
