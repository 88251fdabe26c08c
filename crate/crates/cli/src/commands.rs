use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use serde::Serialize;

use scenesynth::composer::{build_pools, Generator, Pools, RecipeConfig};
use scenesynth::demo;
use scenesynth::manifest::{self, ManifestHeader};
use scenesynth::metrics::{self, PredMode};

use crate::config::{self, LoadedConfig, Overrides, Seeds};
use crate::preview;

/// Bad invocation or settings (exit 1), as opposed to data or generation
/// failures (exit 2).
#[derive(Debug)]
pub struct UsageError(pub anyhow::Error);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:#}", self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage<E: Into<anyhow::Error>>(e: E) -> anyhow::Error {
    UsageError(e.into()).into()
}

fn usage_msg(msg: impl Into<String>) -> anyhow::Error {
    usage(anyhow::anyhow!(msg.into()))
}

fn print_json<T: Serialize>(v: &T) -> anyhow::Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn worker_pool(workers: usize) -> anyhow::Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .context("starting worker pool")
}

struct Prepared {
    recipe: RecipeConfig,
    seeds: Seeds,
}

fn prepare(cfg: &LoadedConfig, overrides: &Overrides) -> anyhow::Result<Prepared> {
    let recipe = cfg.recipe(overrides).map_err(usage)?;
    let seeds = cfg.seed_assets(&recipe)?;
    Ok(Prepared { recipe, seeds })
}

fn pools_for(p: &Prepared) -> anyhow::Result<Pools> {
    Ok(build_pools(
        &p.seeds.registry,
        &p.seeds.background,
        &p.seeds.foreground,
        &p.recipe.pool,
        p.recipe.resolution,
        p.recipe.master_seed,
    )?)
}

#[derive(Serialize)]
struct GenerateSummary<'a> {
    out: &'a Path,
    total: usize,
    singles: usize,
    doubles: usize,
    imported: usize,
    workers: usize,
    wall_seconds: f64,
    manifest_sha256: String,
}

pub fn generate(
    config_path: Option<&Path>,
    overrides: &Overrides,
    out: Option<&Path>,
    workers: Option<usize>,
    prefix_from: Option<&Path>,
) -> anyhow::Result<()> {
    let started = Instant::now();
    let cfg = config::load(config_path).map_err(usage)?;
    let out = cfg
        .output_dir(out)
        .ok_or_else(|| usage_msg("no output directory: pass --out or set [output].dir"))?;
    let prefix = cfg.prefix_from(prefix_from);
    let workers = cfg.workers(workers);
    let prepared = prepare(&cfg, overrides)?;
    let created = std::env::var("SOURCE_DATE_EPOCH").ok();
    let pool = worker_pool(workers)?;
    let written = pool.install(|| -> anyhow::Result<_> {
        let pools = pools_for(&prepared)?;
        let generator = Generator::new(&prepared.recipe, &prepared.seeds.registry, &pools)?;
        let header = ManifestHeader::new(
            &prepared.recipe,
            &prepared.seeds.registry,
            &prepared.seeds.background,
            &prepared.seeds.foreground,
            created,
        )?;
        Ok(manifest::write_dataset(&out, &header, &generator, prefix.as_deref())?)
    })?;
    print_json(&GenerateSummary {
        out: &out,
        total: written.total,
        singles: written.singles,
        doubles: written.doubles,
        imported: written.imported,
        workers: pool.current_num_threads(),
        wall_seconds: started.elapsed().as_secs_f64(),
        manifest_sha256: written.manifest_sha256,
    })
}

/// `n` indices spread evenly over `0..total`, so sheets show both scene kinds.
fn spread(n: usize, total: usize) -> Vec<usize> {
    (0..n).map(|i| i * total / n).collect()
}

pub fn preview(
    config_path: Option<&Path>,
    overrides: &Overrides,
    n: usize,
    out: &Path,
    workers: Option<usize>,
) -> anyhow::Result<()> {
    if n == 0 {
        return Err(usage_msg("preview needs --n of at least 1"));
    }
    let cfg = config::load(config_path).map_err(usage)?;
    let prepared = prepare(&cfg, overrides)?;
    if n > prepared.recipe.total {
        return Err(usage_msg(format!(
            "preview of {n} scenes exceeds the recipe total {}",
            prepared.recipe.total
        )));
    }
    let indices = spread(n, prepared.recipe.total);
    let pool = worker_pool(cfg.workers(workers))?;
    let sheet = pool.install(|| -> anyhow::Result<_> {
        use rayon::prelude::*;
        let pools = pools_for(&prepared)?;
        let generator = Generator::new(&prepared.recipe, &prepared.seeds.registry, &pools)?;
        let scenes = indices
            .par_iter()
            .map(|&i| generator.scene(i).map(|(s, _)| s))
            .collect::<Result<Vec<_>, _>>()?;
        preview::contact_sheet(&scenes)
    })?;
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    manifest::write_png(out, &sheet)?;
    #[derive(Serialize)]
    struct PreviewSummary<'a> {
        out: &'a Path,
        scenes: &'a [usize],
        tiles: usize,
    }
    print_json(&PreviewSummary {
        out,
        scenes: &indices,
        tiles: 2 * n,
    })
}

/// Exit status 0 only when no violation was found.
pub fn validate(dir: &Path) -> anyhow::Result<bool> {
    let report = manifest::validate(dir)?;
    print_json(&report)?;
    for v in &report.violations {
        eprintln!("violation: {v}");
    }
    Ok(report.is_clean())
}

pub fn stats(dir: &Path) -> anyhow::Result<()> {
    print_json(&manifest::stats(dir)?)
}

pub fn dsc(pred: &Path, gt: &Path, per_image: bool, mode: PredMode) -> anyhow::Result<()> {
    let mut report = metrics::dsc_batch(pred, gt, mode)?;
    for u in &report.unpaired {
        eprintln!("unpaired: {u}");
    }
    for e in &report.errors {
        eprintln!("error: {}: {}", e.file, e.reason);
    }
    if !per_image {
        report.per_image.clear();
    }
    print_json(&report)
}

pub fn demo_assets(out: &Path, seeds_per_class: usize, novel: bool) -> anyhow::Result<()> {
    let kit = demo::demo_kit(seeds_per_class, novel).map_err(usage)?;
    demo::write_kit(out, &kit)?;
    let mut toml = String::from("# Procedural seed set written by `scenesynth demo-assets`.\n\n[assets]\n");
    toml.push_str(&format!("background = {:?}\n", kit.background.id));
    for e in kit.registry.entries() {
        toml.push_str(&format!("\n[[classes]]\nname = {:?}\nassets = {:?}\n", e.name, e.assets));
    }
    toml.push_str("\n[recipe]\nname = \"A\"\n\n[output]\ndir = \"dataset\"\n");
    let path: PathBuf = out.join("scenesynth.toml");
    std::fs::write(&path, toml).with_context(|| format!("writing {}", path.display()))?;
    println!("{}", path.display());
    Ok(())
}
