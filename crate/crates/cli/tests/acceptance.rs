//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and exits non-zero if any fails.

#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use scenebench_core::agent::OracleAgent;
use scenebench_core::bench::{
    all_tasks, derive_seed, episode_seed, generate_task, run_episode, EpisodeConfig, Level, Suite,
    TaskSpec,
};
use scenebench_core::data::{
    audit_rows, augment_into, grounding_samples, planning_family, AugmentStats,
    AugmentationPlan, TemplateRephraser, Trajectory,
};
use scenebench_core::engine::{EngineConfig, GoalSpec};
use scenebench_core::reward::{grade, RewardWeights};
use scenebench_core::scene::{
    apply_delta, diff, extract_relations, parse, reextract, serialize, Aabb, ExtractionConfig, Fact,
    Format, ObjectNode, Predicate, RelationEdge, RobotState,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn secs(d: Duration) -> String {
    format!("{:.2} s", d.as_secs_f64())
}

fn extraction_equivalence() -> Outcome {
    let start = Instant::now();
    let bad: Vec<String> = (0..1000u64)
        .filter_map(|s| support::mismatch(s, 2 + (s % 19) as usize))
        .collect();
    let t = start.elapsed();
    let mut detail = format!("{} mismatches over 1000 scenes in {}", bad.len(), secs(t));
    if let Some(first) = bad.first() {
        detail.push_str(&format!("; first: {first}"));
    }
    outcome(bad.is_empty() && t < Duration::from_secs(10), detail)
}

/// Runs every task once at zero noise and returns `(task, non-end actions, success, tp)`.
fn oracle_sweep(tasks: &[TaskSpec]) -> Vec<(Suite, usize, bool, f64)> {
    tasks
        .iter()
        .map(|t| {
            let mut agent = OracleAgent::default();
            let r = run_episode(t, &mut agent, &EpisodeConfig::default(), 0, episode_seed(0, t, 0));
            let actions = r.record.actions.iter().filter(|a| a.command != "end").count();
            (t.suite, actions, r.record.success, r.record.task_progress)
        })
        .collect()
}

fn benchmark_size(sweep: &mut Vec<(Suite, usize, bool, f64)>) -> Outcome {
    let start = Instant::now();
    let tasks = all_tasks(20);
    *sweep = oracle_sweep(&tasks);
    let t = start.elapsed();
    let n = sweep.len() as f64;
    let success = sweep.iter().filter(|r| r.2).count() as f64 / n;
    let tp = sweep.iter().map(|r| r.3).sum::<f64>() / n;
    outcome(
        tasks.len() == 180 && success == 1.0 && tp == 1.0 && t < Duration::from_secs(60),
        format!("{} tasks, success {success:.3}, mean TP {tp:.3} in {}", tasks.len(), secs(t)),
    )
}

fn horizon(sweep: &[(Suite, usize, bool, f64)]) -> Outcome {
    let long: Vec<usize> = sweep
        .iter()
        .filter(|r| r.0 != Suite::Sod)
        .map(|r| r.1)
        .collect();
    if long.is_empty() {
        return outcome(false, "no SAS/GCG episodes");
    }
    let mean = long.iter().sum::<usize>() as f64 / long.len() as f64;
    outcome(mean > 10.0, format!("mean plan length {mean:.2} over {} SAS/GCG tasks", long.len()))
}

fn augmentation_counts() -> Outcome {
    let start = Instant::now();
    let cfg = EngineConfig::default();
    let plan = AugmentationPlan::default();
    let rephraser = TemplateRephraser;

    // 856 distinct graphs for grounding
    let full: Vec<Trajectory> = all_tasks(20)
        .iter()
        .map(|t| Trajectory::record_oracle(t.key(), t, 64))
        .collect();
    let grounding: Vec<_> = grounding_samples(&full).into_iter().take(856).collect();

    // 6,000 six-step trajectories: 36,000 state-action pairs
    let mut pool: Vec<Trajectory> = Vec::new();
    for suite in [Suite::Sas, Suite::Gcg] {
        for level in Level::ALL {
            for seed in 0..20 {
                let t = Trajectory::record_oracle("p", &generate_task(suite, level, seed), 5);
                if t.len() == 6 {
                    pool.push(t);
                }
            }
        }
    }
    if pool.is_empty() {
        return outcome(false, "no six-step trajectories available");
    }

    let mut stats = AugmentStats::default();
    let mut count = |r| -> Result<(), scenebench_core::data::DataError> {
        drop(r);
        Ok(())
    };
    let gplan = AugmentationPlan {
        seed: derive_seed(&[plan.seed, u64::MAX]),
        ..plan.clone()
    };
    match augment_into(grounding, &gplan, &rephraser, &mut count) {
        Ok(s) => stats.merge(&s),
        Err(e) => return outcome(false, format!("grounding: {e}")),
    }
    for i in 0..6000usize {
        let mut t = pool[i % pool.len()].clone();
        t.id = format!("syn-{i}");
        let base = match planning_family(&t, &[1], &cfg) {
            Ok(b) => b,
            Err(e) => return outcome(false, format!("{}: {e}", t.id)),
        };
        let p = AugmentationPlan {
            seed: derive_seed(&[plan.seed, i as u64]),
            ..plan.clone()
        };
        match augment_into(base, &p, &rephraser, &mut count) {
            Ok(s) => stats.merge(&s),
            Err(e) => return outcome(false, format!("{}: {e}", t.id)),
        }
    }
    let t = start.elapsed();
    let rows: BTreeMap<String, _> = audit_rows(&stats, &plan)
        .into_iter()
        .map(|r| (r.modality.clone(), r))
        .collect();
    let get = |k: &str| rows.get(k).map_or((0, 0), |r| (r.base, r.final_count));
    let (g, p, i) = (get("grounding"), get("planning"), get("goal_interpretation"));
    let pass = g == (856, 15_408)
        && p == (36_000, 1_296_000)
        && i == (6_000, 288_000)
        && t < Duration::from_secs(300);
    outcome(
        pass,
        format!(
            "{}->{}, {}->{}, {}->{} in {}",
            g.0, g.1, p.0, p.1, i.0, i.1,
            secs(t)
        ),
    )
}

fn reward_golden() -> Outcome {
    let node = |id: &str, min: [f64; 3], max: [f64; 3]| ObjectNode::new(id, Aabb::new(min, max));
    let sg = extract_relations(
        vec![
            node("table_01", [-1.0, -1.0, -0.05], [1.0, 1.0, 0.0]),
            node("apple_01", [0.0, 0.0, 0.0], [0.08, 0.08, 0.08]),
            node("bowl_01", [0.5, 0.5, 0.0], [0.7, 0.7, 0.08]),
        ],
        &RobotState::empty(),
        &ExtractionConfig::default(),
    )
    .expect("golden scene");
    let met = GoalSpec::new("leave the apple on the table").with_fact(Fact::Relation(
        RelationEdge::new("apple_01", Predicate::OnTop, "table_01"),
    ));
    let unmet = GoalSpec::new("put the apple in the bowl").with_fact(Fact::Relation(
        RelationEdge::new("apple_01", Predicate::Inside, "bowl_01"),
    ));
    let w = RewardWeights::default();
    // (response, goal, N, r_s, r_g, r_t, r_total)
    let cases: [(&str, &GoalSpec, usize, f64, f64, f64, f64); 12] = [
        ("end", &met, 1, 1.0, 1.0, 1.0, 3.0),
        ("end", &unmet, 1, 0.0, 1.0, -1.0, 0.0),
        ("Task End", &met, 1, 1.0, 1.0, 1.0, 3.0),
        ("pick apple_01", &unmet, 1, 0.0, 1.0, 0.0, 1.0),
        ("pick apple", &unmet, 1, 0.0, 0.0, 0.0, 0.0),
        ("pick apple_01", &met, 1, 0.0, 1.0, 0.0, 1.0),
        ("pick apple_01, place inside bowl_01", &unmet, 2, -0.5, 1.0, 0.0, 0.5),
        ("end, pick apple_01", &met, 2, -0.5, 1.0, 1.0, 1.5),
        ("end then pick apple_01", &unmet, 2, -0.5, 1.0, -1.0, -0.5),
        ("pick apple then place inside bowl", &unmet, 2, -0.5, 0.0, 0.0, -0.5),
        ("I think the goal is done.", &met, 0, 0.0, 1.0, 0.0, 1.0),
        ("LLM: place inside bowl", &met, 1, 0.0, 0.0, 0.0, 0.0),
    ];
    let mut wrong = Vec::new();
    for (i, (text, goal, n, s, g, t, total)) in cases.iter().enumerate() {
        let r = grade(text, &sg, goal, &w);
        let got = (r.n, r.r_s, r.r_g, r.r_t, r.r_total);
        if got != (*n, *s, *g, *t, *total) {
            wrong.push(format!("case {} `{text}`: got {got:?}", i + 1));
        }
    }
    outcome(wrong.is_empty(), format!("{}/12 cases match {}", 12 - wrong.len(), wrong.join("; ")))
}

fn conservation() -> Outcome {
    let tasks = all_tasks(20);
    let cfg = ExtractionConfig::default();
    let (mut steps, mut delta_bad, mut geo_bad) = (0, 0, 0);
    for k in 0..100 {
        let t = &tasks[k * tasks.len() / 100];
        let mut agent = OracleAgent::default();
        let r = run_episode(t, &mut agent, &EpisodeConfig::default(), 0, episode_seed(0, t, 0));
        for pair in r.states.windows(2) {
            steps += 1;
            let d = diff(&pair[0], &pair[1]);
            if !apply_delta(&pair[0], &d).is_ok_and(|g| g.relationally_equal(&pair[1])) {
                delta_bad += 1;
            }
            if !reextract(&pair[1], &cfg).is_ok_and(|g| g.edges() == pair[1].edges()) {
                geo_bad += 1;
            }
        }
    }
    outcome(
        steps > 0 && delta_bad == 0 && geo_bad == 0,
        format!("{steps} transitions, {delta_bad} diff/apply and {geo_bad} geometry violations"),
    )
}

fn noise_monotonicity() -> Outcome {
    let tasks: Vec<TaskSpec> = (0..20).map(|s| generate_task(Suite::Sas, Level::General, s)).collect();
    let mut tp = Vec::new();
    let mut episodes = 0;
    for ratio in [0.0, 0.05, 0.10] {
        let cfg = EpisodeConfig {
            noise_ratio: ratio,
            ..EpisodeConfig::default()
        };
        let mut sum = 0.0;
        let mut n = 0;
        for t in &tasks {
            for trial in 0..5 {
                let mut agent = OracleAgent::default();
                let r = run_episode(t, &mut agent, &cfg, trial, episode_seed(0, t, trial));
                sum += r.record.task_progress;
                n += 1;
            }
        }
        episodes = n;
        tp.push(sum / n as f64);
    }
    let pass = tp[0] == 1.0 && tp[1] <= tp[0] + 0.02 && tp[2] <= tp[1] + 0.02 && episodes >= 100;
    outcome(
        pass,
        format!(
            "{episodes} episodes per level, TP {:.3} / {:.3} / {:.3} at 0 / 5 / 10 %",
            tp[0], tp[1], tp[2]
        ),
    )
}

fn bench_run(out: &Path) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_scenebench"))
        .args(["bench", "--agent", "oracle", "--seed", "42", "--out"])
        .arg(out)
        .env_remove("GSR_CONFIG")
        .output()
        .map_err(|e| e.to_string())?;
    if status.status.success() {
        Ok(())
    } else {
        Err(String::from_utf8_lossy(&status.stderr).into_owned())
    }
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().expect("temp dir");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let start = Instant::now();
    for d in [&a, &b] {
        if let Err(e) = bench_run(d) {
            return outcome(false, format!("bench failed: {e}"));
        }
    }
    let mut files: Vec<_> = std::fs::read_dir(&a)
        .expect("results dir")
        .map(|e| e.expect("entry").file_name())
        .collect();
    files.sort();
    let differing: Vec<String> = files
        .iter()
        .filter(|f| std::fs::read(a.join(f)).ok() != std::fs::read(b.join(f)).ok())
        .map(|f| f.to_string_lossy().into_owned())
        .collect();
    let episodes = std::fs::read_to_string(a.join("episodes.jsonl")).map_or(0, |s| s.lines().count());
    outcome(
        differing.is_empty() && !files.is_empty(),
        format!(
            "{} files, {episodes} episodes, {} differing {:?} in {}",
            files.len(),
            differing.len(),
            differing,
            secs(start.elapsed())
        ),
    )
}

fn round_trip() -> Outcome {
    let mut failures = 0;
    for i in 0..10_000u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[9, i]));
        let sg = support::random_graph(&mut rng, 2 + (i % 19) as usize);
        if parse(&serialize(&sg, Format::Structured)).ok().as_ref() != Some(&sg) {
            failures += 1;
        }
    }
    outcome(failures == 0, format!("{failures} failures over 10000 graphs"))
}

fn main() {
    let mut sweep = Vec::new();
    let results = [
        ("relation extraction matches brute force", extraction_equivalence()),
        ("180 tasks, oracle solves all", benchmark_size(&mut sweep)),
        ("SAS/GCG mean horizon above 10", horizon(&sweep)),
        ("augmentation counts exact", augmentation_counts()),
        ("reward golden cases", reward_golden()),
        ("diff/apply and geometric conservation", conservation()),
        ("noise monotonicity", noise_monotonicity()),
        ("bench output byte-identical", determinism()),
        ("serialization round trip", round_trip()),
    ];
    let mut failed = 0;
    for (i, (name, o)) in results.iter().enumerate() {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("{tag} [{}] {name}: {}", i + 1, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
