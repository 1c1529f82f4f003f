//! Dataset generation: trajectories in, augmented per-modality files out.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{create_dir, io_err, pretty, write_file, HarnessError};
use crate::bench::{derive_seed, generate_task, Level, Suite};
use crate::data::{
    audit_rows, audit_table, augment_into, grounding_samples, planning_family, AugmentStats,
    AugmentationPlan, AuditRow, DataError, HttpRephraser, Modality, Rephraser, TemplateRephraser,
    Trajectory, DEFAULT_HORIZONS,
};
use crate::engine::EngineConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatagenConfig {
    /// Trajectory files to read. When empty, oracle trajectories are
    /// recorded over the selected suites, levels and seeds.
    pub trajectories: Vec<PathBuf>,
    pub suites: Vec<Suite>,
    pub levels: Vec<Level>,
    pub seeds: u64,
    /// Cap on recorded oracle actions per trajectory.
    pub max_actions: usize,
    pub horizons: Vec<usize>,
    pub plan: AugmentationPlan,
    pub rephraser_url: Option<String>,
    #[serde(skip)]
    pub engine: EngineConfig,
}

impl Default for DatagenConfig {
    fn default() -> Self {
        Self {
            trajectories: Vec::new(),
            suites: Suite::ALL.to_vec(),
            levels: Level::ALL.to_vec(),
            seeds: 20,
            max_actions: 64,
            horizons: DEFAULT_HORIZONS.to_vec(),
            plan: AugmentationPlan::default(),
            rephraser_url: None,
            engine: EngineConfig::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct DatagenOutcome {
    pub trajectories: usize,
    pub stats: AugmentStats,
    pub audit: Vec<AuditRow>,
}

fn load(cfg: &DatagenConfig) -> Result<Vec<Trajectory>, HarnessError> {
    if cfg.trajectories.is_empty() {
        let mut out = Vec::new();
        for &suite in &cfg.suites {
            for &level in &cfg.levels {
                for seed in 0..cfg.seeds {
                    let task = generate_task(suite, level, seed);
                    out.push(Trajectory::record_oracle(task.key(), &task, cfg.max_actions));
                }
            }
        }
        return Ok(out);
    }
    let mut out = Vec::new();
    for path in &cfg.trajectories {
        out.extend(Trajectory::read_all(path).map_err(|e| match e {
            DataError::Line { line, message } => HarnessError::Line {
                path: path.clone(),
                line,
                message,
            },
            DataError::Io(source) => HarnessError::Io {
                path: path.clone(),
                source,
            },
            other => HarnessError::Data(other),
        })?);
    }
    Ok(out)
}

struct Writers {
    files: BTreeMap<Modality, (PathBuf, BufWriter<File>)>,
}

impl Writers {
    fn create(out: &Path) -> Result<Self, HarnessError> {
        let mut files = BTreeMap::new();
        for m in Modality::ALL {
            let path = out.join(format!("{}.jsonl", m.as_str()));
            let f = File::create(&path).map_err(io_err(&path))?;
            files.insert(m, (path, BufWriter::new(f)));
        }
        Ok(Self { files })
    }

    fn write(&mut self, r: &crate::data::DataRecord) -> Result<(), DataError> {
        let (_, w) = self.files.get_mut(&r.modality).expect("writer per modality");
        serde_json::to_writer(&mut *w, r)?;
        w.write_all(b"\n")?;
        Ok(())
    }

    fn finish(self) -> Result<(), HarnessError> {
        for (_, (path, mut w)) in self.files {
            w.flush().map_err(io_err(&path))?;
        }
        Ok(())
    }
}

/// Writes one file per modality, the source trajectories, and the
/// `audit.json` / `audit.md` count report under `out`.
pub fn run_datagen(cfg: &DatagenConfig, out: &Path) -> Result<DatagenOutcome, HarnessError> {
    cfg.plan.validate().map_err(HarnessError::Config)?;
    if cfg.horizons.is_empty() {
        return Err(HarnessError::Config("at least one horizon is required".into()));
    }
    create_dir(out)?;
    let trajs = load(cfg)?;
    log::info!("{} trajectories", trajs.len());

    let traj_path = out.join("trajectories.jsonl");
    let mut tw = BufWriter::new(File::create(&traj_path).map_err(io_err(&traj_path))?);
    for t in &trajs {
        serde_json::to_writer(&mut tw, t)?;
        tw.write_all(b"\n").map_err(io_err(&traj_path))?;
    }
    tw.flush().map_err(io_err(&traj_path))?;

    let rephraser: Box<dyn Rephraser> = match &cfg.rephraser_url {
        Some(url) => Box::new(HttpRephraser::new(url.clone(), Duration::from_secs(30))),
        None => Box::new(TemplateRephraser),
    };
    let mut writers = Writers::create(out)?;
    let mut stats = AugmentStats::default();

    let grounding_plan = AugmentationPlan {
        seed: derive_seed(&[cfg.plan.seed, u64::MAX]),
        ..cfg.plan.clone()
    };
    let s = augment_into(grounding_samples(&trajs), &grounding_plan, rephraser.as_ref(), |r| {
        writers.write(&r)
    })?;
    stats.merge(&s);

    for (i, t) in trajs.iter().enumerate() {
        let base = planning_family(t, &cfg.horizons, &cfg.engine)?;
        let plan = AugmentationPlan {
            seed: derive_seed(&[cfg.plan.seed, i as u64]),
            ..cfg.plan.clone()
        };
        let s = augment_into(base, &plan, rephraser.as_ref(), |r| writers.write(&r))?;
        stats.merge(&s);
    }
    writers.finish()?;

    let audit = audit_rows(&stats, &cfg.plan);
    write_file(&out.join("audit.json"), pretty(&audit)?)?;
    write_file(&out.join("audit.md"), audit_table(&audit))?;
    Ok(DatagenOutcome {
        trajectories: trajs.len(),
        stats,
        audit,
    })
}
