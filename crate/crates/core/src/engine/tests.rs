use super::*;
use crate::assets::{self, by_label, cabinet_with_drawers, default_joint, table_node};
use crate::scene::{
    extract_relations, ExtractionConfig, NodeId, ObjectNode, Predicate, RelationEdge, RobotState,
    SceneGraph, UnaryState,
};

fn item(label: &str, idx: u32, base: [f64; 3]) -> ObjectNode {
    by_label(label).unwrap().node(idx, base)
}

fn build(nodes: Vec<ObjectNode>) -> SceneGraph {
    extract_relations(nodes, &RobotState::empty(), &ExtractionConfig::default()).unwrap()
}

fn geometric(sg: &SceneGraph) -> SceneGraph {
    extract_relations(
        sg.nodes().values().cloned().collect(),
        sg.robot(),
        &ExtractionConfig::default(),
    )
    .unwrap()
}

fn assert_consistent(sg: &SceneGraph) {
    assert_eq!(geometric(sg).edges(), sg.edges(), "symbolic edges drifted from geometry");
}

fn edge(s: &str, p: Predicate, o: &str) -> RelationEdge {
    RelationEdge::new(s, p, o)
}

/// Table, an open red box, a red cube with a mug stacked on it and a closed
/// lidded yellow box holding a blue cube.
fn scene() -> SceneGraph {
    let cube = item("red_cube", 1, [-0.5, 0.0, 0.0]);
    let mug = item("red_mug", 1, [-0.5, 0.0, 0.05]);
    let yellow = item("yellow_box", 1, [0.5, 0.3, 0.0]).with_articulation(default_joint(false));
    let inner = item("blue_cube", 1, [0.5, 0.3, 0.02]);
    build(vec![
        table_node(),
        item("red_box", 1, [0.0, -0.3, 0.0]),
        cube,
        mug,
        yellow,
        inner,
        item("green_cube", 1, [0.5, -0.3, 0.0]),
    ])
}

#[test]
fn scene_fixture_has_expected_relations() {
    let sg = scene();
    assert!(sg.has_edge(&edge("red_mug_01", Predicate::OnTop, "red_cube_01")));
    assert!(sg.has_edge(&edge("blue_cube_01", Predicate::Inside, "yellow_box_01")));
    assert!(sg.has_edge(&edge("red_box_01", Predicate::OnTop, "table_01")));
}

#[test]
fn pick_inside_closed_container_is_blocked() {
    let v = preconditions(&scene(), &ActionCommand::pick("blue_cube_01")).unwrap();
    assert_eq!(v, Feasibility::Blocked("inside closed container".into()));
}

#[test]
fn pick_occluded_object_is_blocked() {
    let v = preconditions(&scene(), &ActionCommand::pick("red_cube_01")).unwrap();
    assert_eq!(v, Feasibility::Blocked("occluded by red_mug_01".into()));
}

#[test]
fn end_is_always_feasible_and_identity() {
    let sg = scene();
    assert!(preconditions(&sg, &ActionCommand::end()).unwrap().is_ok());
    assert_eq!(transition(&sg, &ActionCommand::end()).unwrap(), sg);
}

#[test]
fn unknown_target_is_an_error_not_a_block() {
    let err = preconditions(&scene(), &ActionCommand::pick("ghost_99")).unwrap_err();
    assert_eq!(err, EngineError::UnknownNode(NodeId::new("ghost_99")));
    let res = execute(&scene(), &ActionCommand::pick("ghost_99"));
    assert!(!res.success && res.log.is_empty());
    assert_eq!(res.graph, scene());
}

#[test]
fn pick_moves_support_edge_to_holding() {
    let sg = scene();
    let res = execute(&sg, &ActionCommand::pick("green_cube_01"));
    assert!(res.success);
    let stages: Vec<_> = res.log.iter().map(|r| (r.stage, r.verdict)).collect();
    assert_eq!(stages, vec![(1, Verdict::Pass), (2, Verdict::Pass), (3, Verdict::Pass)]);
    let g = &res.graph;
    assert!(!g.has_edge(&edge("green_cube_01", Predicate::OnTop, "table_01")));
    assert!(g.has_edge(&RelationEdge::holding("green_cube_01")));
    assert_eq!(g.held(), Some(&NodeId::new("green_cube_01")));
    assert_consistent(g);
}

#[test]
fn blocked_execution_leaves_graph_unchanged() {
    let sg = scene();
    let res = execute(&sg, &ActionCommand::pick("blue_cube_01"));
    assert!(!res.success);
    assert_eq!(res.log.len(), 1);
    assert_eq!(res.log[0].verdict, Verdict::Blocked);
    assert_eq!(res.graph, sg);
}

#[test]
fn place_inside_empties_gripper() {
    let sg = transition(&scene(), &ActionCommand::pick("green_cube_01")).unwrap();
    let sg = transition(&sg, &ActionCommand::place_inside("red_box_01")).unwrap();
    assert!(sg.has_edge(&edge("green_cube_01", Predicate::Inside, "red_box_01")));
    assert!(sg.held().is_none());
    assert!(!sg.robot().is_grasping());
    assert_consistent(&sg);
}

#[test]
fn place_inside_closed_box_is_blocked_until_opened() {
    let sg = transition(&scene(), &ActionCommand::pick("green_cube_01")).unwrap();
    let cmd = ActionCommand::place_inside("yellow_box_01");
    assert!(!preconditions(&sg, &cmd).unwrap().is_ok());
    // lids may be opened with a full gripper
    let sg = transition(&sg, &ActionCommand::open("yellow_box_01")).unwrap();
    let sg = transition(&sg, &cmd).unwrap();
    assert!(sg.has_edge(&edge("green_cube_01", Predicate::Inside, "yellow_box_01")));
    assert_consistent(&sg);
}

#[test]
fn place_on_after_pick_restores_support() {
    let sg = scene();
    let picked = transition(&sg, &ActionCommand::pick("red_mug_01")).unwrap();
    let back = transition(&picked, &ActionCommand::place_on("red_cube_01")).unwrap();
    assert!(back.has_edge(&edge("red_mug_01", Predicate::OnTop, "red_cube_01")));
    assert_consistent(&back);
}

#[test]
fn execute_agrees_with_transition() {
    let sg = scene();
    for cmd in [
        ActionCommand::pick("red_mug_01"),
        ActionCommand::open("yellow_box_01"),
        ActionCommand::pick("green_cube_01"),
    ] {
        let res = execute(&sg, &cmd);
        assert!(res.success, "{cmd}");
        assert_eq!(res.graph, transition(&sg, &cmd).unwrap());
    }
}

fn cabinet_scene(open: [bool; 3]) -> SceneGraph {
    let mut nodes = cabinet_with_drawers([0.5, 0.0, 0.0], open);
    nodes.push(table_node());
    nodes.push(item("milk", 1, [-0.5, 0.0, 0.0]));
    build(nodes)
}

#[test]
fn open_drawer_via_qualified_target() {
    let sg = cabinet_scene([false; 3]);
    let cmd: ActionCommand = "open cabinet_01.drawer_02".parse().unwrap();
    let out = transition(&sg, &cmd).unwrap();
    let d = out.node(&NodeId::new("drawer_02")).unwrap();
    assert!(d.has_state(UnaryState::Open));
    let art = d.articulation.as_ref().unwrap();
    assert!(art.joint_value > art.open_threshold);
    assert_consistent(&out);
}

#[test]
fn close_after_open_restores_states() {
    let sg = cabinet_scene([false; 3]);
    let opened = transition(&sg, &ActionCommand::open("drawer_03")).unwrap();
    let closed = transition(&opened, &ActionCommand::close("drawer_03")).unwrap();
    assert_eq!(closed.facts(), sg.facts());
    let pushed = transition(&opened, &ActionCommand::new(Verb::Push, "drawer_03")).unwrap();
    assert_eq!(pushed.facts(), sg.facts());
}

#[test]
fn open_drawer_above_blocks_lower_drawers() {
    let sg = cabinet_scene([true, false, false]);
    let open_mid = ActionCommand::open("drawer_02");
    assert_eq!(
        preconditions(&sg, &open_mid).unwrap(),
        Feasibility::Blocked("drawer obstructed by open drawer_01".into())
    );
    let sg = transition(&sg, &ActionCommand::close("drawer_01")).unwrap();
    let sg = transition(&sg, &open_mid).unwrap();
    let sg = transition(&sg, &ActionCommand::pick("milk_01")).unwrap();
    let sg = transition(&sg, &ActionCommand::place_inside("drawer_02")).unwrap();
    assert!(sg.has_edge(&edge("milk_01", Predicate::Inside, "drawer_02")));
    assert_consistent(&sg);
    // the top drawer may be reopened, after which the middle one is obstructed
    let sg = transition(&sg, &ActionCommand::open("drawer_01")).unwrap();
    assert!(!preconditions(&sg, &ActionCommand::pick("milk_01")).unwrap().is_ok());
}

#[test]
fn fixed_objects_cannot_be_picked() {
    let sg = cabinet_scene([false; 3]);
    for id in ["table_01", "cabinet_01", "drawer_01"] {
        assert!(!preconditions(&sg, &ActionCommand::pick(id)).unwrap().is_ok(), "{id}");
    }
}

#[test]
fn turn_on_requires_switch() {
    let sg = build(vec![table_node(), item("lamp", 1, [0.0, 0.0, 0.0]), item("book", 1, [0.5, 0.0, 0.0])]);
    let on = transition(&sg, &ActionCommand::new(Verb::TurnOn, "lamp_01")).unwrap();
    assert!(on.node(&NodeId::new("lamp_01")).unwrap().has_state(UnaryState::On));
    assert!(!preconditions(&sg, &ActionCommand::new(Verb::TurnOn, "book_01")).unwrap().is_ok());
    assert!(assets::is_switchable_kind("lamp"));
}

#[test]
fn illegal_transition_reports_reason() {
    let err = transition(&scene(), &ActionCommand::place_on("table_01")).unwrap_err();
    assert_eq!(err, EngineError::IllegalTransition("gripper is empty".into()));
}

#[test]
fn frame_property_on_pick() {
    let sg = scene();
    let out = transition(&sg, &ActionCommand::pick("green_cube_01")).unwrap();
    let target = NodeId::new("green_cube_01");
    for e in sg.edges().symmetric_difference(out.edges()) {
        assert!(e.involves(&target), "{e} changed");
    }
}
