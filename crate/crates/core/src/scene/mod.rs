//! Scene-graph data model, relation extraction, canonicalization and text forms.

mod error;
mod extract;
mod geometry;
mod model;
mod ops;
mod serial;

pub use error::{Result, SceneError};
pub use extract::{extract_relations, reextract, ExtractionConfig};
pub(crate) use extract::{classify_pair, parent_map, same_assembly, PairRelation};
pub use geometry::{horizontal_distance, Aabb, Pose, Vec3};
pub use model::{
    Articulation, Fact, Keypoint, NodeId, ObjectNode, Predicate, RelationEdge, RobotState,
    SceneGraph, UnaryState, ROBOT_ID,
};
pub use ops::{apply_delta, diff, normalize, DeltaSide, EdgeDelta};
pub use serial::{
    from_value, parse, parse_lenient, serialize, to_value, Format, RawSceneGraph, WireEdge,
    WireNode, WireRobot,
};
