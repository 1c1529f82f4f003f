//! Multiplicative augmentation: shuffling, synonym swapping, rephrasing and
//! end-state diversification, plus the count audit.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;
use serde_json::{Map, Value};

use super::rephrase::Rephraser;
use super::swap::{SwapMap, SynonymTable};
use super::{DataError, DataRecord, Modality, Side};
use crate::bench::derive_seed;
use crate::scene::{normalize, parse, parse_lenient, serialize, EdgeDelta, Format, RelationEdge};

/// Per-transform multiplicities. Each count includes the original.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AugmentationPlan {
    /// Description paraphrases for grounding pairs.
    pub paraphrase: usize,
    pub shuffle: usize,
    /// 1 disables swapping, 2 adds the synonym pass.
    pub swap: usize,
    /// Instruction rephrasings for trajectory-derived records.
    pub rephrase: usize,
    /// Goal-graph renderings for goal interpretation (at most 4).
    pub end_state: usize,
    pub seed: u64,
}

impl Default for AugmentationPlan {
    fn default() -> Self {
        Self {
            paraphrase: 3,
            shuffle: 3,
            swap: 2,
            rephrase: 2,
            end_state: 4,
            seed: 0,
        }
    }
}

impl AugmentationPlan {
    pub fn validate(&self) -> Result<(), String> {
        let all = [self.paraphrase, self.shuffle, self.swap, self.rephrase, self.end_state];
        if all.contains(&0) {
            return Err("augmentation multiplicities must be at least 1".into());
        }
        if self.swap > 2 {
            return Err("swap multiplicity is 1 or 2".into());
        }
        if self.end_state > 4 {
            return Err("end_state multiplicity is at most 4".into());
        }
        Ok(())
    }

    fn text_variants(&self, m: Modality) -> usize {
        match m {
            Modality::Grounding => self.paraphrase,
            _ => self.rephrase,
        }
    }

    fn end_variants(&self, m: Modality) -> usize {
        match m {
            Modality::GoalInterpretation => self.end_state,
            _ => 1,
        }
    }

    pub fn multiplier(&self, m: Modality) -> usize {
        self.text_variants(m) * self.shuffle * self.swap * self.end_variants(m)
    }
}

/// Counts keyed by audit bucket.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugmentStats {
    pub base: BTreeMap<String, usize>,
    pub emitted: BTreeMap<String, usize>,
    /// Variants withheld because a synonym swap would duplicate ids.
    pub skipped: BTreeMap<String, usize>,
}

impl AugmentStats {
    pub fn merge(&mut self, other: &AugmentStats) {
        for (dst, src) in [
            (&mut self.base, &other.base),
            (&mut self.emitted, &other.emitted),
            (&mut self.skipped, &other.skipped),
        ] {
            for (k, v) in src {
                *dst.entry(k.clone()).or_default() += v;
            }
        }
    }
}

#[derive(Deserialize)]
struct GraphParts<'a> {
    #[serde(borrow)]
    nodes: Vec<&'a RawValue>,
    #[serde(borrow)]
    edges: Vec<&'a RawValue>,
    #[serde(borrow)]
    robot: &'a RawValue,
}

/// Reorders the node and edge arrays of a structured graph text without
/// decoding the entries.
fn reorder_graph(text: &str, mut f: impl FnMut(&mut Vec<&RawValue>)) -> Result<String, DataError> {
    let mut g: GraphParts<'_> = serde_json::from_str(text)?;
    f(&mut g.nodes);
    f(&mut g.edges);
    let join = |xs: &[&RawValue]| xs.iter().map(|x| x.get()).collect::<Vec<_>>().join(",");
    Ok(format!(
        r#"{{"nodes":[{}],"edges":[{}],"robot":{}}}"#,
        join(&g.nodes),
        join(&g.edges),
        g.robot.get()
    ))
}

/// Reverses the entries of each section of a prompt-text graph.
fn reverse_prompt_text(text: &str) -> String {
    let mut out = String::new();
    let mut section: Vec<&str> = Vec::new();
    let flush = |out: &mut String, section: &mut Vec<&str>| {
        for l in section.drain(..).rev() {
            out.push_str(l);
            out.push('\n');
        }
    };
    for line in text.lines() {
        if line.ends_with(':') && !line.starts_with('-') {
            flush(&mut out, &mut section);
            out.push_str(line);
            out.push('\n');
        } else {
            section.push(line);
        }
    }
    flush(&mut out, &mut section);
    out
}

/// The four renderings of a goal graph: canonical and reversed order, each
/// in structured and prompt-text form.
fn end_state_variant(goal: &str, e: usize) -> Result<String, DataError> {
    Ok(match e {
        0 => goal.to_string(),
        1 => reorder_graph(goal, |a| a.reverse())?,
        _ => {
            let text = serialize(&parse(goal)?, Format::PromptText);
            if e == 2 {
                text
            } else {
                reverse_prompt_text(&text)
            }
        }
    })
}

/// Renamed ids can reorder node lists and `beside` pairs; rebuilds the
/// canonical form of every graph-valued field after a swap.
fn recanonicalize(r: &mut DataRecord) -> Result<(), DataError> {
    let mut fields: Vec<(Side, &str)> = r.modality.shuffled_fields().to_vec();
    if r.modality == Modality::GoalInterpretation {
        fields.push((Side::Output, "goal_scene_graph"));
    }
    for (side, field) in fields {
        if let Some(Value::String(g)) = r.side_mut(side).get_mut(field) {
            *g = serialize(&normalize(&parse_lenient(g)?)?, Format::Structured);
        }
    }
    if let Some(d) = r.output.get_mut("delta") {
        let mut delta: EdgeDelta = serde_json::from_value(d.take())?;
        for s in [&mut delta.added, &mut delta.removed] {
            s.edges = std::mem::take(&mut s.edges)
                .into_iter()
                .map(RelationEdge::canonical)
                .collect();
        }
        *d = serde_json::to_value(&delta)?;
    }
    Ok(())
}

/// Streams every augmented variant of `records` into `sink`.
pub fn augment_into<I, F>(
    records: I,
    plan: &AugmentationPlan,
    rephraser: &dyn Rephraser,
    mut sink: F,
) -> Result<AugmentStats, DataError>
where
    I: IntoIterator<Item = DataRecord>,
    F: FnMut(DataRecord) -> Result<(), DataError>,
{
    plan.validate().map_err(DataError::Rephrase)?;
    let table = SynonymTable::builtin();
    let mut stats = AugmentStats::default();
    for (b, base) in records.into_iter().enumerate() {
        base.validate()?;
        let m = base.modality;
        let key = base.audit_key().to_string();
        *stats.base.entry(key.clone()).or_default() += 1;

        let text_key = m.text_field();
        let original_text = base.input.get(text_key).and_then(Value::as_str).unwrap_or("").to_string();
        let texts: Vec<String> = (0..plan.text_variants(m))
            .map(|j| rephraser.rephrase(&original_text, j))
            .collect::<Result<_, _>>()?;
        let ends = plan.end_variants(m);

        for s in 0..plan.swap {
            let (swapped, swapped_texts) = if s == 0 {
                (base.clone(), texts.clone())
            } else {
                let values: Vec<&Value> = base.input.values().chain(base.output.values()).collect();
                let Some(map) = SwapMap::build(table, values) else {
                    *stats.skipped.entry(key.clone()).or_default() +=
                        plan.text_variants(m) * plan.shuffle * ends;
                    continue;
                };
                let mut r = base.clone();
                r.input = apply_map(&map, &r.input);
                r.output = apply_map(&map, &r.output);
                recanonicalize(&mut r)?;
                (r, texts.iter().map(|t| map.apply_str(t)).collect())
            };
            let goal = swapped.output.get("goal_scene_graph").and_then(Value::as_str);
            let end_outputs: Vec<Option<String>> = match (goal, ends) {
                (Some(g), n) if n > 1 => (0..n)
                    .map(|e| end_state_variant(g, e).map(Some))
                    .collect::<Result<_, _>>()?,
                _ => vec![None],
            };
            for k in 0..plan.shuffle {
                let mut shuffled = swapped.clone();
                if k > 0 {
                    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[plan.seed, b as u64, k as u64]));
                    for (side, field) in m.shuffled_fields() {
                        if let Some(Value::String(g)) = shuffled.side_mut(*side).get_mut(*field) {
                            *g = reorder_graph(g, |a| a.shuffle(&mut rng))?;
                        }
                    }
                }
                for (j, text) in swapped_texts.iter().enumerate() {
                    for (e, end) in end_outputs.iter().enumerate() {
                        let mut r = shuffled.clone();
                        r.input.insert(text_key.to_string(), Value::String(text.clone()));
                        if let Some(g) = end {
                            r.output.insert("goal_scene_graph".into(), Value::String(g.clone()));
                        }
                        let text_tag = if m == Modality::Grounding { "paraphrase" } else { "rephrase" };
                        r.meta.augmentation = vec![
                            format!("{text_tag}:{j}"),
                            format!("shuffle:{k}"),
                            format!("swap:{s}"),
                        ];
                        if m == Modality::GoalInterpretation {
                            r.meta.augmentation.push(format!("end_state:{e}"));
                        }
                        *stats.emitted.entry(key.clone()).or_default() += 1;
                        sink(r)?;
                    }
                }
            }
        }
    }
    Ok(stats)
}

fn apply_map(map: &SwapMap, m: &Map<String, Value>) -> Map<String, Value> {
    m.iter().map(|(k, v)| (k.clone(), map.apply(v))).collect()
}

/// Collects augmented records in memory.
pub fn augment(
    records: Vec<DataRecord>,
    plan: &AugmentationPlan,
    rephraser: &dyn Rephraser,
) -> Result<(Vec<DataRecord>, AugmentStats), DataError> {
    let mut out = Vec::new();
    let stats = augment_into(records, plan, rephraser, |r| {
        out.push(r);
        Ok(())
    })?;
    Ok((out, stats))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditRow {
    pub modality: String,
    pub base: usize,
    pub multiplier: usize,
    pub final_count: usize,
    pub skipped: usize,
}

impl AuditRow {
    /// Whether the emitted count equals base × multiplier.
    pub fn is_exact(&self) -> bool {
        self.final_count == self.base * self.multiplier
    }
}

/// One row per bucket, then the combined planning row (one base per
/// state-action pair, three tasks each).
pub fn audit_rows(stats: &AugmentStats, plan: &AugmentationPlan) -> Vec<AuditRow> {
    let get = |m: &BTreeMap<String, usize>, k: &str| m.get(k).copied().unwrap_or(0);
    let mut rows = Vec::new();
    let buckets = [
        ("grounding", Modality::Grounding),
        ("world_modeling", Modality::WorldModeling),
        ("forward_reasoning", Modality::ForwardReasoning),
        ("forward_reasoning_multi", Modality::ForwardReasoning),
        ("goal_planning", Modality::GoalPlanning),
        ("goal_interpretation", Modality::GoalInterpretation),
    ];
    for (key, m) in buckets {
        if get(&stats.base, key) == 0 {
            continue;
        }
        rows.push(AuditRow {
            modality: key.to_string(),
            base: get(&stats.base, key),
            multiplier: plan.multiplier(m),
            final_count: get(&stats.emitted, key),
            skipped: get(&stats.skipped, key),
        });
    }
    let family = ["world_modeling", "forward_reasoning", "goal_planning"];
    let steps = get(&stats.base, "goal_planning");
    if steps > 0 {
        rows.push(AuditRow {
            modality: "planning".into(),
            base: steps,
            multiplier: family.len() * plan.multiplier(Modality::GoalPlanning),
            final_count: family.iter().map(|k| get(&stats.emitted, k)).sum(),
            skipped: family.iter().map(|k| get(&stats.skipped, k)).sum(),
        });
    }
    rows
}

pub fn audit_table(rows: &[AuditRow]) -> String {
    let mut out = String::from(
        "| modality | base | multiplier | final | skipped |\n|---|---|---|---|---|\n",
    );
    for r in rows {
        out.push_str(&format!(
            "| {} | {} | {}x | {} | {} |\n",
            r.modality, r.base, r.multiplier, r.final_count, r.skipped
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::{generate_task, Level, Suite};
    use crate::data::rephrase::TemplateRephraser;
    use crate::data::samples::{grounding_samples, planning_family, DEFAULT_HORIZONS};
    use crate::data::{clean, Trajectory};
    use crate::engine::EngineConfig;

    fn traj() -> Trajectory {
        Trajectory::record_oracle("t0", &generate_task(Suite::Sod, Level::Easy, 4), 3)
    }

    #[test]
    fn counts_multiply_exactly() {
        let t = traj();
        let plan = AugmentationPlan::default();
        let mut base = grounding_samples(std::slice::from_ref(&t));
        base.extend(planning_family(&t, &[1], &EngineConfig::default()).unwrap());
        let (out, stats) = augment(base, &plan, &TemplateRephraser).unwrap();
        let rows = audit_rows(&stats, &plan);
        for r in &rows {
            assert!(r.is_exact(), "{r:?}");
        }
        let planning = rows.iter().find(|r| r.modality == "planning").unwrap();
        assert_eq!(planning.multiplier, 36);
        assert_eq!(
            rows.iter().find(|r| r.modality == "goal_interpretation").unwrap().multiplier,
            48
        );
        assert_eq!(rows[0].multiplier, 18);
        assert!(out.iter().all(|r| r.validate().is_ok()));
    }

    #[test]
    fn shuffles_preserve_semantics() {
        let t = traj();
        let base = planning_family(&t, &DEFAULT_HORIZONS, &EngineConfig::default()).unwrap();
        let plan = AugmentationPlan {
            swap: 1,
            ..Default::default()
        };
        let (out, _) = augment(base.clone(), &plan, &TemplateRephraser).unwrap();
        for r in out {
            let orig = base
                .iter()
                .find(|b| b.modality == r.modality && b.meta.step == r.meta.step && b.meta.horizon == r.meta.horizon)
                .unwrap();
            let a = clean(r.input["scene_graph"].as_str().unwrap()).unwrap();
            let b = clean(orig.input["scene_graph"].as_str().unwrap()).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn end_states_are_equivalent_renderings() {
        let t = traj();
        let base = vec![crate::data::goal_interpretation_samples(&t).unwrap()];
        let plan = AugmentationPlan {
            swap: 1,
            shuffle: 1,
            rephrase: 1,
            ..Default::default()
        };
        let (out, _) = augment(base, &plan, &TemplateRephraser).unwrap();
        assert_eq!(out.len(), 4);
        let graphs: Vec<_> = out
            .iter()
            .map(|r| clean(r.output["goal_scene_graph"].as_str().unwrap()).unwrap())
            .collect();
        for g in &graphs[1..] {
            assert!(g.relationally_equal(&graphs[0]));
        }
    }

    #[test]
    fn swapped_graphs_stay_canonical() {
        // renamed ids can sort the other way round inside a beside pair
        let mut found = false;
        let tasks = [Suite::Sas, Suite::Gcg]
            .into_iter()
            .flat_map(|s| Level::ALL.into_iter().map(move |l| (s, l)))
            .flat_map(|(s, l)| (0..20).map(move |seed| generate_task(s, l, seed)));
        for task in tasks {
            let t = Trajectory::record_oracle("t", &task, 5);
            let base = planning_family(&t, &[1], &EngineConfig::default()).unwrap();
            let plan = AugmentationPlan {
                shuffle: 1,
                rephrase: 1,
                ..Default::default()
            };
            let (out, _) = augment(base, &plan, &TemplateRephraser).unwrap();
            for r in out.iter().filter(|r| r.meta.augmentation.contains(&"swap:1".to_string())) {
                found = true;
                for (_, field) in r.modality.shuffled_fields() {
                    let text = r.input.get(*field).and_then(Value::as_str).unwrap();
                    parse(text).unwrap();
                }
                if let Some(d) = r.output.get("delta") {
                    let d: EdgeDelta = serde_json::from_value(d.clone()).unwrap();
                    for e in d.added.edges.iter().chain(&d.removed.edges) {
                        assert_eq!(e.clone().canonical(), *e);
                    }
                }
            }
        }
        assert!(found);
    }
}
