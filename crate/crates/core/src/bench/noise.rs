//! Observation noise: random drops and flips of spatial relations.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::scene::{normalize, Predicate, RawSceneGraph, RelationEdge, SceneGraph, WireEdge};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlipMode {
    /// Replace the predicate with another spatial predicate.
    #[default]
    Predicate,
    /// Swap subject and object.
    Direction,
}

/// Number of edges touched at `ratio` over `n` spatial edges.
pub fn perturbed_count(ratio: f64, n: usize) -> usize {
    if ratio <= 0.0 || n == 0 {
        return 0;
    }
    ((ratio * n as f64 - 1e-9).ceil() as usize).min(n)
}

/// Drops or flips `⌈ratio · |spatial edges|⌉` distinct spatial edges.
/// Holding edges and unary states are never touched.
pub fn perturb<R: Rng + ?Sized>(sg: &SceneGraph, ratio: f64, rng: &mut R) -> SceneGraph {
    perturb_with(sg, ratio, FlipMode::Predicate, rng)
}

pub fn perturb_with<R: Rng + ?Sized>(
    sg: &SceneGraph,
    ratio: f64,
    mode: FlipMode,
    rng: &mut R,
) -> SceneGraph {
    let spatial: Vec<_> = sg.edges().iter().filter(|e| e.predicate.is_spatial()).collect();
    let k = perturbed_count(ratio.clamp(0.0, 1.0), spatial.len());
    if k == 0 {
        return sg.clone();
    }
    let chosen = index::sample(rng, spatial.len(), k).into_vec();
    let mut kept: Vec<RelationEdge> = sg
        .edges()
        .iter()
        .filter(|e| e.predicate.is_spatial())
        .cloned()
        .collect();
    for i in chosen {
        let e = spatial[i];
        kept.retain(|x| x != e);
        if rng.gen_bool(0.5) {
            continue;
        }
        let mut flipped = e.clone();
        match mode {
            FlipMode::Predicate => {
                let others: Vec<Predicate> = Predicate::SPATIAL
                    .into_iter()
                    .filter(|p| *p != e.predicate)
                    .collect();
                flipped.predicate = others[rng.gen_range(0..others.len())];
            }
            FlipMode::Direction => std::mem::swap(&mut flipped.subject, &mut flipped.object),
        }
        kept.push(flipped);
    }
    let mut raw = RawSceneGraph::from_graph(sg);
    raw.edges
        .retain(|w| w.object.is_none() || w.predicate == Predicate::Holding.as_str());
    raw.edges.extend(kept.iter().map(|e| WireEdge {
        subject: e.subject.to_string(),
        predicate: e.predicate.as_str().to_string(),
        object: Some(e.object.to_string()),
    }));
    normalize(&raw).expect("perturbed graph stays normalizable")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{Aabb, ObjectNode, RobotState};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// `n` stacked cubes plus a held mug.
    fn chain(n: usize) -> SceneGraph {
        let id = |i: usize| format!("cube_{:02}", i + 1);
        let nodes = (0..=n)
            .map(|i| ObjectNode::new(id(i).as_str(), Aabb::new([0.0; 3], [0.1; 3])))
            .chain([ObjectNode::new("mug_01", Aabb::new([0.0; 3], [0.1; 3]))]);
        let edges = (0..n)
            .map(|i| RelationEdge::new(id(i + 1).as_str(), Predicate::OnTop, id(i).as_str()))
            .chain([RelationEdge::holding("mug_01")]);
        SceneGraph::from_parts(nodes, edges, RobotState::grasping("mug_01")).unwrap()
    }

    fn changed(a: &SceneGraph, b: &SceneGraph) -> usize {
        a.edges().difference(b.edges()).count()
    }

    #[test]
    fn counts_follow_the_ceiling_rule() {
        assert_eq!(perturbed_count(0.10, 10), 1);
        assert_eq!(perturbed_count(0.05, 40), 2);
        assert_eq!(perturbed_count(0.05, 1), 1);
        assert_eq!(perturbed_count(0.0, 40), 0);
    }

    #[test]
    fn zero_ratio_is_identity() {
        let sg = chain(10);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(perturb(&sg, 0.0, &mut rng), sg);
    }

    #[test]
    fn exactly_k_edges_are_modified() {
        let sg = chain(40);
        for seed in 0..50 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let noisy = perturb(&sg, 0.05, &mut rng);
            assert_eq!(changed(&sg, &noisy), 2);
            assert!(noisy.has_edge(&RelationEdge::holding("mug_01")));
            assert_eq!(noisy.nodes().len(), sg.nodes().len());
        }
    }

    #[test]
    fn direction_mode_reverses() {
        let sg = chain(1);
        let mut flipped = 0;
        for seed in 0..40 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let noisy = perturb_with(&sg, 1.0, FlipMode::Direction, &mut rng);
            if noisy.has_edge(&RelationEdge::new("cube_01", Predicate::OnTop, "cube_02")) {
                flipped += 1;
            }
        }
        assert!(flipped > 0);
    }
}
