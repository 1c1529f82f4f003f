//! Shared test fixtures: seeded random scenes and a brute-force relation checker.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;
use scenebench_core::assets::{self, AssetGroup, ASSETS};
use scenebench_core::scene::{
    extract_relations, ExtractionConfig, ObjectNode, RobotState, SceneGraph, UnaryState,
};

/// Random tabletop scene with `n` objects drawn from the asset library.
///
/// Placements are biased toward stacking, nesting and near-neighbour
/// layouts so that every rung of the relation ladder is exercised.
pub fn random_scene<R: Rng>(rng: &mut R, n: usize) -> (Vec<ObjectNode>, RobotState) {
    let mut objs: Vec<ObjectNode> = Vec::with_capacity(n);
    let mut counts: BTreeMap<&str, u32> = BTreeMap::new();
    if n >= 6 && rng.gen_bool(0.25) {
        let x = rng.gen_range(-0.6..0.6);
        let open = [rng.gen_bool(0.5), rng.gen_bool(0.5), rng.gen_bool(0.5)];
        objs.extend(assets::cabinet_with_drawers([x, 0.3, 0.0], open));
        counts.insert("cabinet", 1);
        counts.insert("drawer", 3);
    }
    if objs.len() < n && rng.gen_bool(0.5) {
        objs.push(assets::table_node());
    }
    let pool: Vec<_> = ASSETS
        .iter()
        .filter(|a| a.label != "cabinet" && a.label != "drawer")
        .collect();
    while objs.len() < n {
        let a = *pool.choose(rng).expect("non-empty pool");
        let idx = counts.entry(a.label).or_insert(0);
        *idx += 1;
        let base = match (objs.last(), rng.gen_range(0..5)) {
            (Some(prev), 1) => {
                // resting on the previous object, possibly off-center
                let c = prev.aabb.center();
                let s = prev.aabb.size();
                let dz = rng.gen_range(-0.004..0.004);
                [
                    c[0] + rng.gen_range(-0.4..0.4) * s[0],
                    c[1] + rng.gen_range(-0.4..0.4) * s[1],
                    prev.aabb.max[2] + dz,
                ]
            }
            (Some(prev), 2) => {
                // nested in the previous object
                let c = prev.aabb.center();
                [
                    c[0] + rng.gen_range(-0.05..0.05),
                    c[1] + rng.gen_range(-0.05..0.05),
                    prev.aabb.min[2] + rng.gen_range(0.0..0.05),
                ]
            }
            (Some(prev), 3) => {
                let c = prev.aabb.center();
                let r = rng.gen_range(0.05..0.3);
                let t = rng.gen_range(0.0..std::f64::consts::TAU);
                [c[0] + r * t.cos(), c[1] + r * t.sin(), prev.aabb.min[2]]
            }
            (_, 4) => [
                rng.gen_range(-0.9..0.9),
                rng.gen_range(-0.5..0.5),
                rng.gen_range(0.0..0.5),
            ],
            _ => [rng.gen_range(-0.9..0.9), rng.gen_range(-0.5..0.5), 0.0],
        };
        let mut node = a.node(*idx, base);
        if a.group == AssetGroup::Articulated && rng.gen_bool(0.7) {
            let mut j = assets::default_joint(false);
            j.joint_value = rng.gen_range(0.0..0.3);
            node = node.with_articulation(j);
        }
        if a.switchable && rng.gen_bool(0.5) {
            node.states.remove(&UnaryState::Off);
            node.states.insert(UnaryState::On);
        }
        objs.push(node);
    }
    let movable: Vec<&ObjectNode> = objs
        .iter()
        .filter(|o| assets::by_label(o.id.category().unwrap_or("")).is_some_and(|a| a.movable))
        .collect();
    let robot = match movable.choose(rng) {
        Some(o) if rng.gen_bool(0.3) => RobotState {
            gripper_value: rng.gen_range(0.3..1.0),
            gripper_threshold: RobotState::DEFAULT_THRESHOLD,
            held_object: Some(o.id.clone()),
        },
        _ => RobotState::empty(),
    };
    (objs, robot)
}

/// A canonical graph built from a random scene.
pub fn random_graph<R: Rng>(rng: &mut R, n: usize) -> SceneGraph {
    let (objs, robot) = random_scene(rng, n);
    extract_relations(objs, &robot, &ExtractionConfig::default()).expect("random scene extracts")
}

pub type Triple = (String, String, String);

/// Edges and articulation states from a direct evaluation of every ordered pair.
#[derive(Debug, PartialEq)]
pub struct Expected {
    pub edges: BTreeSet<Triple>,
    pub open: BTreeMap<String, bool>,
}

fn vol(min: &[f64; 3], max: &[f64; 3]) -> f64 {
    (max[0] - min[0]) * (max[1] - min[1]) * (max[2] - min[2])
}

fn overlap_1d(a0: f64, a1: f64, b0: f64, b1: f64) -> f64 {
    (a1.min(b1) - a0.max(b0)).max(0.0)
}

/// Vol(A ∩ B) / Vol(A).
fn ioa(a: &ObjectNode, b: &ObjectNode) -> f64 {
    let (am, ax, bm, bx) = (&a.aabb.min, &a.aabb.max, &b.aabb.min, &b.aabb.max);
    let mut shared = 1.0;
    for k in 0..3 {
        shared *= overlap_1d(am[k], ax[k], bm[k], bx[k]);
    }
    shared / vol(am, ax)
}

/// `A` sits directly on `B`: faces within tolerance, A higher, footprints overlapping.
fn sits_on(a: &ObjectNode, b: &ObjectNode, cfg: &ExtractionConfig) -> bool {
    let (am, ax, bm, bx) = (&a.aabb.min, &a.aabb.max, &b.aabb.min, &b.aabb.max);
    if (am[2] - bx[2]).abs() > cfg.contact_tolerance {
        return false;
    }
    if (am[2] + ax[2]) / 2.0 <= (bm[2] + bx[2]) / 2.0 {
        return false;
    }
    let fa = (ax[0] - am[0]) * (ax[1] - am[1]);
    let fb = (bx[0] - bm[0]) * (bx[1] - bm[1]);
    let common = overlap_1d(am[0], ax[0], bm[0], bx[0]) * overlap_1d(am[1], ax[1], bm[1], bx[1]);
    let smaller = fa.min(fb);
    smaller > 0.0 && common / smaller >= cfg.overlap_threshold
}

fn close_by(a: &ObjectNode, b: &ObjectNode, cfg: &ExtractionConfig) -> bool {
    let ca = a.aabb.center();
    let cb = b.aabb.center();
    let d = ((ca[0] - cb[0]).powi(2) + (ca[1] - cb[1]).powi(2)).sqrt();
    d <= cfg.beside_distance
        && overlap_1d(a.aabb.min[2], a.aabb.max[2], b.aabb.min[2], b.aabb.max[2]) > 0.0
}

pub fn brute_force(objs: &[ObjectNode], robot: &RobotState, cfg: &ExtractionConfig) -> Expected {
    let parent: BTreeMap<String, String> = objs
        .iter()
        .flat_map(|o| o.children.iter().map(move |c| (c.to_string(), o.id.to_string())))
        .collect();
    let ancestors = |id: &str| {
        let mut out = Vec::new();
        let mut cur = id.to_string();
        while let Some(p) = parent.get(&cur) {
            if out.contains(p) {
                break;
            }
            out.push(p.clone());
            cur = p.clone();
        }
        out
    };
    let related_parts = |a: &str, b: &str| {
        ancestors(a).iter().any(|x| x == b)
            || ancestors(b).iter().any(|x| x == a)
            || (parent.contains_key(a) && parent.get(a) == parent.get(b))
    };

    let held = robot
        .held_object
        .as_ref()
        .filter(|_| robot.gripper_value > robot.gripper_threshold)
        .map(|h| h.to_string());
    let free: Vec<&ObjectNode> = objs
        .iter()
        .filter(|o| Some(o.id.to_string()) != held)
        .collect();

    let mut edges = BTreeSet::new();
    let mut inside: BTreeSet<(String, String)> = BTreeSet::new();
    for a in &free {
        for b in &free {
            let (ia, ib) = (a.id.to_string(), b.id.to_string());
            if ia == ib || related_parts(&ia, &ib) {
                continue;
            }
            let (ab, ba) = (ioa(a, b), ioa(b, a));
            // ties go to the lexicographically smaller subject
            if ab > cfg.inside_threshold && (ab > ba || (ab == ba && ia < ib)) {
                inside.insert((ia.clone(), ib.clone()));
                continue;
            }
            if ab > cfg.inside_threshold || ba > cfg.inside_threshold {
                continue;
            }
            if sits_on(a, b, cfg) {
                edges.insert((ia.clone(), "ontop".to_string(), ib.clone()));
                continue;
            }
            if sits_on(b, a, cfg) {
                continue;
            }
            if ia < ib && close_by(a, b, cfg) {
                edges.insert((ia, "beside".to_string(), ib));
            }
        }
    }
    // keep only the innermost container of each object
    for (a, b) in &inside {
        let shadowed = inside.iter().any(|(a2, c)| {
            a2 == a && c != b && (ancestors(c).contains(b) || inside.contains(&(c.clone(), b.clone())))
        });
        if !shadowed {
            edges.insert((a.clone(), "inside".to_string(), b.clone()));
        }
    }
    if let Some(h) = held {
        edges.insert(("robot".to_string(), "holding".to_string(), h));
    }
    let open = objs
        .iter()
        .filter_map(|o| {
            o.articulation
                .as_ref()
                .map(|j| (o.id.to_string(), j.joint_value > j.open_threshold))
        })
        .collect();
    Expected { edges, open }
}

/// The same view of an extracted graph.
pub fn observed(sg: &SceneGraph) -> Expected {
    let edges = sg
        .edges()
        .iter()
        .map(|e| (e.subject.to_string(), e.predicate.as_str().to_string(), e.object.to_string()))
        .collect();
    let open = sg
        .nodes()
        .values()
        .filter(|n| n.articulation.is_some())
        .map(|n| {
            let o = n.has_state(UnaryState::Open);
            assert_ne!(o, n.has_state(UnaryState::Closed), "{} needs exactly one of open/closed", n.id);
            (n.id.to_string(), o)
        })
        .collect();
    Expected { edges, open }
}

/// Runs both checkers on one seeded scene. `None` when they agree.
pub fn mismatch(seed: u64, n: usize) -> Option<String> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let (objs, robot) = random_scene(&mut rng, n);
    let cfg = ExtractionConfig::default();
    let want = brute_force(&objs, &robot, &cfg);
    let sg = match extract_relations(objs, &robot, &cfg) {
        Ok(sg) => sg,
        Err(e) => return Some(format!("seed {seed}: extraction failed: {e}")),
    };
    let got = observed(&sg);
    (got != want).then(|| {
        let extra: Vec<_> = got.edges.difference(&want.edges).collect();
        let missing: Vec<_> = want.edges.difference(&got.edges).collect();
        format!("seed {seed} ({n} objects): extra {extra:?}, missing {missing:?}")
    })
}
