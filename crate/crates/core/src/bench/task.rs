//! Procedural generation of the three task suites.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assets::{self, by_label, cabinet_with_drawers, default_joint, table_node, Asset, AssetGroup};
use crate::engine::{transition, ActionCommand, GoalSpec, ObjectFilter, QuantifiedClause};
use crate::scene::{
    extract_relations, Aabb, ExtractionConfig, Fact, NodeId, ObjectNode, Predicate, RelationEdge,
    RobotState, SceneGraph, Vec3,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Sod,
    Sas,
    Gcg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    #[serde(alias = "simple")]
    Easy,
    General,
    Complex,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown {kind} `{value}`")]
pub struct ParseEnumError {
    kind: &'static str,
    value: String,
}

impl Suite {
    pub const ALL: [Suite; 3] = [Suite::Sod, Suite::Sas, Suite::Gcg];

    pub fn as_str(self) -> &'static str {
        match self {
            Suite::Sod => "sod",
            Suite::Sas => "sas",
            Suite::Gcg => "gcg",
        }
    }

    pub(crate) fn tag(self) -> u64 {
        self as u64 + 1
    }
}

impl Level {
    pub const ALL: [Level; 3] = [Level::Easy, Level::General, Level::Complex];

    pub fn as_str(self) -> &'static str {
        match self {
            Level::Easy => "easy",
            Level::General => "general",
            Level::Complex => "complex",
        }
    }

    pub(crate) fn tag(self) -> u64 {
        self as u64 + 1
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Suite {
    type Err = ParseEnumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "sod" => Ok(Suite::Sod),
            "sas" => Ok(Suite::Sas),
            "gcg" => Ok(Suite::Gcg),
            _ => Err(ParseEnumError {
                kind: "suite",
                value: s.to_string(),
            }),
        }
    }
}

impl FromStr for Level {
    type Err = ParseEnumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "easy" | "simple" => Ok(Level::Easy),
            "general" => Ok(Level::General),
            "complex" => Ok(Level::Complex),
            _ => Err(ParseEnumError {
                kind: "level",
                value: s.to_string(),
            }),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub suite: Suite,
    pub level: Level,
    pub seed: u64,
    pub instruction: String,
    pub goal: GoalSpec,
    pub step_budget: u32,
    pub scene: SceneGraph,
}

impl TaskSpec {
    pub fn key(&self) -> String {
        format!("{}-{}-{}", self.suite, self.level, self.seed)
    }
}

/// Mixes a sequence of integers into one seed (splitmix64 finalizer).
pub fn derive_seed(parts: &[u64]) -> u64 {
    let mut h: u64 = 0x243F_6A88_85A3_08D3;
    for p in parts {
        h ^= *p;
        h = h.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = h;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        h = z ^ (z >> 31);
    }
    h
}

pub const SOD_INSTRUCTION: &str =
    "Pick up all cubes that have the same color as the box and put them inside the box.";
pub const SAS_EASY_INSTRUCTION: &str = "Transfer all items from the yellow box to the red box.";
pub const SAS_GENERAL_INSTRUCTION: &str = "Move all objects on the table into the red box.";
pub const SAS_COMPLEX_INSTRUCTION: &str = "Transfer all objects from the box into the middle drawer.";
pub const GCG_EASY_INSTRUCTION: &str =
    "Place the milk, the popcorn, and the book into different drawer layers of the cabinet.";
pub const GCG_GENERAL_INSTRUCTION: &str =
    "Sort all cubes and mugs into the boxes of their corresponding colors.";
pub const GCG_COMPLEX_INSTRUCTION: &str =
    "Store the cubes and mugs into different drawer layers based on their colors.";

pub const BOX_COLORS: [&str; 3] = ["red", "yellow", "blue"];
const CUBE_COLORS: [&str; 5] = ["red", "yellow", "blue", "green", "white"];
const CLEARANCE: f64 = 0.02;
const MAX_ATTEMPTS: u64 = 64;

/// Rejection sampler for tabletop footprints on a 1 cm grid.
struct Tabletop {
    occupied: Vec<Aabb>,
}

impl Tabletop {
    fn new() -> Self {
        Self { occupied: Vec::new() }
    }

    fn place(&mut self, rng: &mut ChaCha8Rng, size: Vec3) -> Option<Vec3> {
        let lo = [assets::TABLE_MIN[0] + size[0] / 2.0 + CLEARANCE, assets::TABLE_MIN[1] + size[1] / 2.0 + CLEARANCE];
        let hi = [assets::TABLE_MAX[0] - size[0] / 2.0 - CLEARANCE, assets::TABLE_MAX[1] - size[1] / 2.0 - CLEARANCE];
        let nx = ((hi[0] - lo[0]) / 0.01).floor() as u32;
        let ny = ((hi[1] - lo[1]) / 0.01).floor() as u32;
        for _ in 0..2000 {
            let x = lo[0] + f64::from(rng.gen_range(0..=nx)) * 0.01;
            let y = lo[1] + f64::from(rng.gen_range(0..=ny)) * 0.01;
            let base = [x, y, assets::TABLE_MAX[2]];
            let fp = Aabb::from_base(base, size).inflated(CLEARANCE, 0.0);
            if self.occupied.iter().all(|o| fp.footprint_overlap(o) <= 0.0) {
                self.occupied.push(Aabb::from_base(base, size));
                return Some(base);
            }
        }
        None
    }
}

/// Hands out `<label>_NN` indices.
#[derive(Default)]
struct Namer(BTreeMap<&'static str, u32>);

impl Namer {
    fn node(&mut self, asset: &Asset, base: Vec3) -> ObjectNode {
        let i = self.0.entry(asset.label).or_insert(0);
        *i += 1;
        asset.node(*i, base)
    }
}

fn asset(label: &str) -> &'static Asset {
    by_label(label).unwrap_or_else(|| panic!("asset `{label}` missing from the library"))
}

fn colored(kind: &str, color: &str) -> &'static Asset {
    asset(&format!("{color}_{kind}"))
}

/// Movable items small enough for a box interior.
fn box_items() -> Vec<&'static Asset> {
    assets::small_items()
        .filter(|a| a.size[0] <= 0.10 && a.size[1] <= 0.10)
        .collect()
}

struct Builder {
    rng: ChaCha8Rng,
    table: Tabletop,
    names: Namer,
    nodes: Vec<ObjectNode>,
}

impl Builder {
    fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            table: Tabletop::new(),
            names: Namer::default(),
            nodes: vec![table_node()],
        }
    }

    fn put(&mut self, a: &Asset) -> Option<NodeId> {
        let base = self.table.place(&mut self.rng, a.size)?;
        let n = self.names.node(a, base);
        let id = n.id.clone();
        self.nodes.push(n);
        Some(id)
    }

    fn count(&mut self, lo: usize, hi: usize) -> usize {
        self.rng.gen_range(lo..=hi)
    }

    fn pick<'a, T>(&mut self, xs: &'a [T]) -> &'a T {
        xs.choose(&mut self.rng).expect("non-empty choice")
    }

    fn scene(&self) -> Option<SceneGraph> {
        extract_relations(self.nodes.clone(), &RobotState::empty(), &ExtractionConfig::default()).ok()
    }
}

fn inside(s: &NodeId, o: &str) -> Fact {
    Fact::Relation(RelationEdge::new(s.clone(), Predicate::Inside, o))
}

fn budget(goal: &GoalSpec, sg: &SceneGraph) -> u32 {
    let n = goal.relevant_objects(sg).map(|s| s.len()).unwrap_or(0);
    3 * n as u32 + 10
}

/// Builds the task for one (suite, level, seed) cell. Pure and deterministic.
pub fn generate_task(suite: Suite, level: Level, seed: u64) -> TaskSpec {
    for attempt in 0..MAX_ATTEMPTS {
        let s = derive_seed(&[suite.tag(), level.tag(), seed, attempt]);
        let made = match suite {
            Suite::Sod => sod(level, s),
            Suite::Sas => sas(level, s),
            Suite::Gcg => gcg(level, s),
        };
        if let Some((scene, goal)) = made {
            let step_budget = budget(&goal, &scene);
            return TaskSpec {
                suite,
                level,
                seed,
                instruction: goal.instruction.clone(),
                goal,
                step_budget,
                scene,
            };
        }
    }
    panic!("no valid layout for {suite}-{level}-{seed} after {MAX_ATTEMPTS} attempts")
}

/// Every task of the full benchmark: suites × levels × seeds `0..seeds`.
pub fn all_tasks(seeds: u64) -> Vec<TaskSpec> {
    let mut out = Vec::new();
    for suite in Suite::ALL {
        for level in Level::ALL {
            for seed in 0..seeds {
                out.push(generate_task(suite, level, seed));
            }
        }
    }
    out
}

fn sod(level: Level, seed: u64) -> Option<(SceneGraph, GoalSpec)> {
    let mut b = Builder::new(seed);
    let color = *b.pick(&BOX_COLORS);
    let bx = b.put(colored("box", color))?;
    let n = match level {
        Level::Easy => b.count(7, 10),
        _ => b.count(9, 12),
    };
    // at least one cube shares the box color
    b.put(colored("cube", color))?;
    for _ in 1..n {
        let a = if level == Level::Easy || b.rng.gen_bool(0.5) {
            colored("cube", b.pick(&CUBE_COLORS))
        } else {
            colored("mug", b.pick(&BOX_COLORS))
        };
        b.put(a)?;
    }
    if level == Level::Complex {
        let others: Vec<&Asset> = assets::small_items()
            .filter(|a| a.group != AssetGroup::BasicPrimitive)
            .chain(["plate", "white_bowl"].into_iter().map(asset))
            .collect();
        for i in index::sample(&mut b.rng, others.len(), 3).into_vec() {
            b.put(others[i])?;
        }
    }
    let goal = GoalSpec::new(SOD_INSTRUCTION).with_clause(QuantifiedClause::inside(
        ObjectFilter::default().with("kind", &["cube"]).with("color", &[color]),
        bx.as_str(),
    ));
    Some((b.scene()?, goal))
}

fn sample_items(b: &mut Builder, lo: usize, hi: usize) -> Vec<&'static Asset> {
    let pool = box_items();
    let n = b.count(lo, hi);
    index::sample(&mut b.rng, pool.len(), n)
        .into_iter()
        .map(|i| pool[i])
        .collect()
}

fn sas(level: Level, seed: u64) -> Option<(SceneGraph, GoalSpec)> {
    let mut b = Builder::new(seed);
    match level {
        Level::Easy => {
            let red = b.table.place(&mut b.rng, assets::BOX_SIZE)?;
            let yellow = b.table.place(&mut b.rng, assets::BOX_SIZE)?;
            b.nodes.push(
                colored("box", "red")
                    .node(1, red)
                    .with_articulation(default_joint(false)),
            );
            b.nodes.push(
                colored("box", "yellow")
                    .node(1, yellow)
                    .with_articulation(default_joint(true)),
            );
            let items = sample_items(&mut b, 5, 8);
            let mut ids = Vec::new();
            for a in items {
                ids.push(b.put(a)?);
            }
            // load the yellow box through the engine, then shut its lid
            let mut sg = b.scene()?;
            for id in &ids {
                sg = transition(&sg, &ActionCommand::pick(id.clone())).ok()?;
                sg = transition(&sg, &ActionCommand::place_inside("yellow_box_01")).ok()?;
            }
            sg = transition(&sg, &ActionCommand::close("yellow_box_01")).ok()?;
            let mut goal = GoalSpec::new(SAS_EASY_INSTRUCTION);
            for id in &ids {
                goal = goal.with_fact(inside(id, "red_box_01"));
            }
            Some((sg, goal))
        }
        Level::General => {
            let base = b.table.place(&mut b.rng, assets::BOX_SIZE)?;
            for (i, c) in BOX_COLORS.iter().enumerate() {
                let z = base[2] + i as f64 * assets::BOX_SIZE[2];
                b.nodes.push(colored("box", c).node(1, [base[0], base[1], z]));
            }
            let items = sample_items(&mut b, 5, 8);
            let mut goal = GoalSpec::new(SAS_GENERAL_INSTRUCTION);
            for a in items {
                let id = b.put(a)?;
                goal = goal.with_fact(inside(&id, "red_box_01"));
            }
            Some((b.scene()?, goal))
        }
        Level::Complex => {
            let base = b.table.place(&mut b.rng, assets::CABINET_SIZE)?;
            b.nodes.extend(cabinet_with_drawers(base, [true, false, false]));
            let items = sample_items(&mut b, 5, 8);
            let mut goal = GoalSpec::new(SAS_COMPLEX_INSTRUCTION);
            for a in items {
                let id = b.put(a)?;
                goal = goal.with_fact(inside(&id, "drawer_02"));
            }
            Some((b.scene()?, goal))
        }
    }
}

fn gcg(level: Level, seed: u64) -> Option<(SceneGraph, GoalSpec)> {
    let mut b = Builder::new(seed);
    let base = b.table.place(&mut b.rng, assets::CABINET_SIZE)?;
    b.nodes.extend(cabinet_with_drawers(base, [false; 3]));
    let mut boxes = Vec::new();
    for c in BOX_COLORS {
        boxes.push(b.put(colored("box", c))?);
    }
    let n = b.count(6, 10);
    for _ in 0..n {
        let kind = if b.rng.gen_bool(0.5) { "cube" } else { "mug" };
        let c = *b.pick(&BOX_COLORS);
        b.put(colored(kind, c))?;
    }
    let milk = b.put(asset("milk"))?;
    let popcorn = b.put(asset("popcorn"))?;
    let book = b.put(asset("book"))?;
    let drawers = ["drawer_01", "drawer_02", "drawer_03"];
    let goal = match level {
        Level::Easy => GoalSpec::new(GCG_EASY_INSTRUCTION)
            .with_fact(inside(&milk, drawers[0]))
            .with_fact(inside(&popcorn, drawers[1]))
            .with_fact(inside(&book, drawers[2])),
        Level::General => {
            let mut g = GoalSpec::new(GCG_GENERAL_INSTRUCTION);
            for (c, bx) in BOX_COLORS.iter().zip(&boxes) {
                g = g.with_clause(QuantifiedClause::inside(
                    ObjectFilter::default().with("kind", &["cube", "mug"]).with("color", &[c]),
                    bx.as_str(),
                ));
            }
            g
        }
        Level::Complex => {
            let mut g = GoalSpec::new(GCG_COMPLEX_INSTRUCTION);
            for (c, d) in BOX_COLORS.iter().zip(drawers) {
                g = g.with_clause(QuantifiedClause::inside(
                    ObjectFilter::default().with("kind", &["cube", "mug"]).with("color", &[c]),
                    d,
                ));
            }
            g
        }
    };
    Some((b.scene()?, goal))
}
