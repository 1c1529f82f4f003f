//! The 63-entry asset library used by the task suites and random scenes.

use crate::scene::{Aabb, Articulation, ObjectNode, Pose, UnaryState, Vec3};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AssetGroup {
    BasicPrimitive,
    Articulated,
    StableHope,
    StableScanned,
    Turbosquid,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Asset {
    /// Node category, e.g. `red_cube`.
    pub label: &'static str,
    pub kind: &'static str,
    pub color: Option<&'static str>,
    pub group: AssetGroup,
    /// Width, depth, height in meters.
    pub size: Vec3,
    pub movable: bool,
    pub container: bool,
    pub switchable: bool,
}

#[allow(clippy::too_many_arguments)]
const fn asset(
    label: &'static str,
    kind: &'static str,
    color: Option<&'static str>,
    group: AssetGroup,
    size: Vec3,
    movable: bool,
    container: bool,
    switchable: bool,
) -> Asset {
    Asset {
        label,
        kind,
        color,
        group,
        size,
        movable,
        container,
        switchable,
    }
}

use AssetGroup::*;

pub const BOX_SIZE: Vec3 = [0.42, 0.42, 0.20];
pub const CUBE_SIZE: Vec3 = [0.05, 0.05, 0.05];
pub const MUG_SIZE: Vec3 = [0.09, 0.08, 0.10];
pub const CABINET_SIZE: Vec3 = [0.60, 0.50, 0.83];

pub static ASSETS: [Asset; 63] = [
    // basic primitives (11)
    asset("red_box", "box", Some("red"), BasicPrimitive, BOX_SIZE, true, true, false),
    asset("yellow_box", "box", Some("yellow"), BasicPrimitive, BOX_SIZE, true, true, false),
    asset("blue_box", "box", Some("blue"), BasicPrimitive, BOX_SIZE, true, true, false),
    asset("red_mug", "mug", Some("red"), BasicPrimitive, MUG_SIZE, true, false, false),
    asset("yellow_mug", "mug", Some("yellow"), BasicPrimitive, MUG_SIZE, true, false, false),
    asset("blue_mug", "mug", Some("blue"), BasicPrimitive, MUG_SIZE, true, false, false),
    asset("red_cube", "cube", Some("red"), BasicPrimitive, CUBE_SIZE, true, false, false),
    asset("yellow_cube", "cube", Some("yellow"), BasicPrimitive, CUBE_SIZE, true, false, false),
    asset("blue_cube", "cube", Some("blue"), BasicPrimitive, CUBE_SIZE, true, false, false),
    asset("green_cube", "cube", Some("green"), BasicPrimitive, CUBE_SIZE, true, false, false),
    asset("white_cube", "cube", Some("white"), BasicPrimitive, CUBE_SIZE, true, false, false),
    // articulated (10)
    asset("cabinet", "cabinet", None, Articulated, CABINET_SIZE, false, false, false),
    asset("drawer", "drawer", None, Articulated, [0.56, 0.46, 0.25], false, true, false),
    asset("refrigerator", "refrigerator", None, Articulated, [0.70, 0.70, 1.60], false, true, false),
    asset("microwave", "microwave", None, Articulated, [0.50, 0.38, 0.30], false, true, true),
    asset("oven", "oven", None, Articulated, [0.60, 0.55, 0.60], false, true, true),
    asset("dishwasher", "dishwasher", None, Articulated, [0.60, 0.55, 0.80], false, true, false),
    asset("storage_box", "storage_box", None, Articulated, [0.40, 0.30, 0.20], true, true, false),
    asset("toolbox", "toolbox", None, Articulated, [0.40, 0.20, 0.18], true, true, false),
    asset("laptop", "laptop", None, Articulated, [0.33, 0.23, 0.02], true, false, true),
    asset("trash_can", "trash_can", None, Articulated, [0.30, 0.30, 0.45], false, true, false),
    // stable HOPE groceries (14)
    asset("milk", "milk", None, StableHope, [0.07, 0.07, 0.19], true, false, false),
    asset("ketchup", "ketchup", None, StableHope, [0.06, 0.04, 0.18], true, false, false),
    asset("mustard", "mustard", None, StableHope, [0.06, 0.04, 0.17], true, false, false),
    asset("popcorn", "popcorn", None, StableHope, [0.10, 0.06, 0.15], true, false, false),
    asset("mayo", "mayo", None, StableHope, [0.06, 0.06, 0.15], true, false, false),
    asset("cookies", "cookies", None, StableHope, [0.10, 0.04, 0.16], true, false, false),
    asset("corn", "corn", None, StableHope, [0.07, 0.07, 0.09], true, false, false),
    asset("butter", "butter", None, StableHope, [0.10, 0.05, 0.04], true, false, false),
    asset("tuna", "tuna", None, StableHope, [0.08, 0.08, 0.04], true, false, false),
    asset("yogurt", "yogurt", None, StableHope, [0.07, 0.07, 0.08], true, false, false),
    asset("orange_juice", "orange_juice", None, StableHope, [0.07, 0.07, 0.19], true, false, false),
    asset("raisins", "raisins", None, StableHope, [0.09, 0.03, 0.12], true, false, false),
    asset("spaghetti", "spaghetti", None, StableHope, [0.08, 0.03, 0.16], true, false, false),
    asset("cherries", "cherries", None, StableHope, [0.07, 0.07, 0.09], true, false, false),
    // stable scanned kitchenware (11)
    asset("plate", "plate", None, StableScanned, [0.22, 0.22, 0.03], true, false, false),
    asset("white_bowl", "bowl", Some("white"), StableScanned, [0.15, 0.15, 0.07], true, true, false),
    asset("red_bowl", "bowl", Some("red"), StableScanned, [0.15, 0.15, 0.07], true, true, false),
    asset("tray", "tray", None, StableScanned, [0.35, 0.25, 0.03], true, false, false),
    asset("cup", "cup", None, StableScanned, [0.07, 0.07, 0.09], true, false, false),
    asset("pan", "pan", None, StableScanned, [0.28, 0.28, 0.06], true, true, false),
    asset("pot", "pot", None, StableScanned, [0.24, 0.24, 0.14], true, true, false),
    asset("colander", "colander", None, StableScanned, [0.22, 0.22, 0.10], true, true, false),
    asset("cutting_board", "cutting_board", None, StableScanned, [0.30, 0.20, 0.02], true, false, false),
    asset("pitcher", "pitcher", None, StableScanned, [0.12, 0.10, 0.20], true, false, false),
    asset("saucer", "saucer", None, StableScanned, [0.14, 0.14, 0.02], true, false, false),
    // commercial models (17)
    asset("coffee_machine", "coffee_machine", None, Turbosquid, [0.25, 0.30, 0.35], false, false, true),
    asset("toaster", "toaster", None, Turbosquid, [0.28, 0.17, 0.19], true, false, true),
    asset("kettle", "kettle", None, Turbosquid, [0.20, 0.15, 0.22], true, false, true),
    asset("blender", "blender", None, Turbosquid, [0.16, 0.16, 0.38], true, false, true),
    asset("book", "book", None, Turbosquid, [0.15, 0.20, 0.03], true, false, false),
    asset("lamp", "lamp", None, Turbosquid, [0.15, 0.15, 0.40], true, false, true),
    asset("vase", "vase", None, Turbosquid, [0.10, 0.10, 0.25], true, false, false),
    asset("plant", "plant", None, Turbosquid, [0.15, 0.15, 0.30], true, false, false),
    asset("clock", "clock", None, Turbosquid, [0.12, 0.05, 0.12], true, false, false),
    asset("speaker", "speaker", None, Turbosquid, [0.10, 0.10, 0.18], true, false, true),
    asset("phone", "phone", None, Turbosquid, [0.07, 0.15, 0.01], true, false, false),
    asset("remote", "remote", None, Turbosquid, [0.05, 0.17, 0.02], true, false, false),
    asset("bottle", "bottle", None, Turbosquid, [0.07, 0.07, 0.25], true, false, false),
    asset("candle", "candle", None, Turbosquid, [0.06, 0.06, 0.10], true, false, false),
    asset("basket", "basket", None, Turbosquid, [0.30, 0.22, 0.15], true, true, false),
    asset("scissors", "scissors", None, Turbosquid, [0.08, 0.18, 0.02], true, false, false),
    asset("stapler", "stapler", None, Turbosquid, [0.04, 0.15, 0.05], true, false, false),
];

/// The work surface every suite is built on. Not part of the asset library.
pub const TABLE_LABEL: &str = "table";
pub const TABLE_MIN: Vec3 = [-1.0, -0.6, -0.05];
pub const TABLE_MAX: Vec3 = [1.0, 0.6, 0.0];

pub fn by_label(label: &str) -> Option<&'static Asset> {
    ASSETS.iter().find(|a| a.label == label)
}

/// First asset of the given kind.
pub fn by_kind(kind: &str) -> Option<&'static Asset> {
    ASSETS.iter().find(|a| a.kind == kind)
}

/// Kinds that cannot be picked up.
pub fn is_fixed_kind(kind: &str) -> bool {
    kind == TABLE_LABEL || by_kind(kind).is_some_and(|a| !a.movable)
}

pub fn is_container_kind(kind: &str) -> bool {
    by_kind(kind).is_some_and(|a| a.container)
}

pub fn is_switchable_kind(kind: &str) -> bool {
    by_kind(kind).is_some_and(|a| a.switchable)
}

/// Small items that fit in a box or drawer.
pub fn small_items() -> impl Iterator<Item = &'static Asset> {
    ASSETS.iter().filter(|a| {
        a.movable && !a.container && a.size[0] <= 0.15 && a.size[1] <= 0.20 && a.size[2] <= 0.19
    })
}

impl Asset {
    /// A node of this asset whose bottom face is centered on `base`.
    pub fn node(&self, index: u32, base: Vec3) -> ObjectNode {
        let aabb = Aabb::from_base(base, self.size);
        let mut n = ObjectNode::new(
            crate::scene::NodeId::from_parts(self.label, index),
            aabb.clone(),
        );
        n.pose = Pose::at(aabb.center());
        n.attributes.insert("kind".into(), self.kind.into());
        if let Some(c) = self.color {
            n.attributes.insert("color".into(), c.into());
        }
        if self.switchable {
            n.states.insert(UnaryState::Off);
        }
        n
    }
}

pub fn table_node() -> ObjectNode {
    let mut n = ObjectNode::new(
        crate::scene::NodeId::from_parts(TABLE_LABEL, 1),
        Aabb::new(TABLE_MIN, TABLE_MAX),
    );
    n.attributes.insert("kind".into(), TABLE_LABEL.into());
    n
}

/// Default lid or slide joint for articulated containers.
pub fn default_joint(open: bool) -> Articulation {
    Articulation {
        joint_value: if open { 0.25 } else { 0.0 },
        joint_min: 0.0,
        joint_max: 0.3,
        open_threshold: 0.05,
    }
}

/// Drawer tiers from top to bottom.
pub const DRAWER_TIERS: [&str; 3] = ["top", "middle", "bottom"];

/// `cabinet_01` on `base` with three drawers, `drawer_01` at the top and
/// `drawer_03` at the bottom. `open[i]` opens drawer `i + 1`.
pub fn cabinet_with_drawers(base: Vec3, open: [bool; 3]) -> Vec<ObjectNode> {
    let cab = by_label("cabinet").expect("cabinet asset");
    let drawer = by_label("drawer").expect("drawer asset");
    let mut cabinet = cab.node(1, base);
    let mut out = Vec::with_capacity(4);
    for (i, tier) in DRAWER_TIERS.iter().enumerate() {
        // bottom drawer starts 2 cm above the cabinet floor, 2 cm gaps between tiers
        let level = (2 - i) as f64;
        let z = base[2] + 0.02 + level * (drawer.size[2] + 0.02);
        let mut d = drawer
            .node(i as u32 + 1, [base[0], base[1], z])
            .with_attr("tier", tier)
            .with_articulation(default_joint(open[i]));
        d.attributes.insert("container".into(), "true".into());
        cabinet.children.push(d.id.clone());
        out.push(d);
    }
    cabinet.attributes.insert("tiers".into(), "3".into());
    out.insert(0, cabinet);
    out
}
