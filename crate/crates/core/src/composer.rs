//! Augmented pools and dataset recipes.
//!
//! The background pool holds `p` augmented variants of the single background
//! image; the foreground pool holds `q_per_seed` jointly augmented variants of
//! every foreground seed. Pool slots are pure functions of
//! `(master_seed, slot)` and are materialized lazily, so a small run touches
//! only the variants it actually draws while a full run sees exactly the same
//! pixels.
//!
//! A recipe fixes the number of one- and two-instrument scenes exactly and
//! assigns classes round-robin, so per-class counts never differ by more
//! than one.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::OnceLock;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::augmix::{self, MixConfig, MixDraw, OpSet};
use crate::augops::{self, AugPlan, OpDescriptor};
use crate::blend::{self, ForegroundCutout, Placement, Scene};
use crate::error::{Error, Result};
use crate::imgcore::{self, Filter, PixelBuffer};
use crate::seed::{self, domain};

/// Instrument classes of the default registry, in id order starting at 1.
pub const INSTRUMENT_CLASSES: [&str; 8] = [
    "Maryland Bipolar Forceps",
    "Fenestrated Bipolar Forceps",
    "Prograsp Forceps",
    "Large Needle Driver",
    "Monopolar Curved Scissors",
    "Ultrasound Probe",
    "Clip Applier",
    "Suction Instrument",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassEntry {
    pub id: u8,
    pub name: String,
    pub assets: Vec<String>,
}

/// Ordered classes with contiguous ids from 1.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ClassEntry>", into = "Vec<ClassEntry>")]
pub struct ClassRegistry {
    entries: Vec<ClassEntry>,
}

impl TryFrom<Vec<ClassEntry>> for ClassRegistry {
    type Error = Error;

    fn try_from(entries: Vec<ClassEntry>) -> Result<Self> {
        for (i, e) in entries.iter().enumerate() {
            if e.id as usize != i + 1 {
                return Err(Error::invalid(format!("class `{}` has id {}, expected {}", e.name, e.id, i + 1)));
            }
        }
        let named = entries.into_iter().map(|e| (e.name, e.assets)).collect();
        ClassRegistry::new(named)
    }
}

impl From<ClassRegistry> for Vec<ClassEntry> {
    fn from(r: ClassRegistry) -> Self {
        r.entries
    }
}

impl ClassRegistry {
    pub fn new(classes: Vec<(String, Vec<String>)>) -> Result<Self> {
        Self::default().extend(classes)
    }

    pub fn entries(&self) -> &[ClassEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ids(&self) -> Vec<u8> {
        self.entries.iter().map(|e| e.id).collect()
    }

    pub fn get(&self, id: u8) -> Option<&ClassEntry> {
        self.entries.get((id as usize).checked_sub(1)?)
    }

    /// Append classes after the existing ids. Existing ids are untouched.
    pub fn extend(&self, new_classes: Vec<(String, Vec<String>)>) -> Result<Self> {
        let mut entries = self.entries.clone();
        for (name, assets) in new_classes {
            if name.trim().is_empty() {
                return Err(Error::invalid("class names must be nonempty"));
            }
            if entries.iter().any(|e| e.name == name) {
                return Err(Error::invalid(format!("class `{name}` already registered")));
            }
            if assets.is_empty() {
                return Err(Error::invalid(format!("class `{name}` has no seed assets")));
            }
            let id = entries.len() + 1;
            if id > 255 {
                return Err(Error::invalid("at most 255 classes fit in an 8-bit mask"));
            }
            entries.push(ClassEntry {
                id: id as u8,
                name,
                assets,
            });
        }
        Ok(Self { entries })
    }

    /// Keep the first `n` seed assets of every class.
    pub fn limit_seeds(&self, n: usize) -> Result<Self> {
        let mut out = self.clone();
        for e in &mut out.entries {
            if e.assets.len() < n {
                return Err(Error::invalid(format!(
                    "class `{}` has {} seed asset(s), recipe needs {n}",
                    e.name,
                    e.assets.len()
                )));
            }
            e.assets.truncate(n);
        }
        Ok(out)
    }
}

/// Registry with new classes appended (ids continue after the last one).
pub fn extend_registry(registry: &ClassRegistry, new_classes: Vec<(String, Vec<String>)>) -> Result<ClassRegistry> {
    registry.extend(new_classes)
}

/// A decoded source image with its identifier.
#[derive(Debug, Clone)]
pub struct SeedAsset {
    pub id: String,
    pub image: PixelBuffer,
}

fn default_bg_ops() -> (usize, usize) {
    (1, 4)
}

fn default_fg_ops() -> (usize, usize) {
    (1, 3)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoolSpec {
    /// Background variants.
    pub p: usize,
    /// Foreground variants per seed asset.
    pub q_per_seed: usize,
    /// Operator count range for background plans; `[0, 0]` disables augmentation.
    #[serde(default = "default_bg_ops")]
    pub bg_ops: (usize, usize),
    #[serde(default = "default_fg_ops")]
    pub fg_ops: (usize, usize),
    #[serde(default = "augops::catalog_background")]
    pub bg_catalog: Vec<OpDescriptor>,
    #[serde(default = "augops::catalog_foreground")]
    pub fg_catalog: Vec<OpDescriptor>,
}

impl Default for PoolSpec {
    fn default() -> Self {
        Self {
            p: 200,
            q_per_seed: 25,
            bg_ops: default_bg_ops(),
            fg_ops: default_fg_ops(),
            bg_catalog: augops::catalog_background(),
            fg_catalog: augops::catalog_foreground(),
        }
    }
}

impl PoolSpec {
    pub fn validate(&self) -> Result<()> {
        if self.p == 0 || self.q_per_seed == 0 {
            return Err(Error::invalid("pool sizes p and q_per_seed must be at least 1"));
        }
        for (name, (lo, hi), cat) in [
            ("bg_ops", self.bg_ops, &self.bg_catalog),
            ("fg_ops", self.fg_ops, &self.fg_catalog),
        ] {
            if hi < lo || (lo == 0 && hi != 0) {
                return Err(Error::invalid(format!("{name} range [{lo}, {hi}] is invalid")));
            }
            if hi > 0 && cat.is_empty() {
                return Err(Error::invalid(format!("{name} needs a nonempty catalog")));
            }
            for d in cat {
                d.validate()?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackgroundVariant {
    pub image: PixelBuffer,
    pub plan: AugPlan,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForegroundVariant {
    pub cutout: ForegroundCutout,
    pub plan: AugPlan,
}

#[derive(Debug)]
struct ForegroundSource {
    class_id: u8,
    seed_index: usize,
    cutout: ForegroundCutout,
}

/// Background and foreground pools. Slots are computed on first access.
#[derive(Debug)]
pub struct Pools {
    spec: PoolSpec,
    master_seed: u64,
    background: PixelBuffer,
    sources: Vec<ForegroundSource>,
    bg: Vec<OnceLock<BackgroundVariant>>,
    fg: Vec<OnceLock<ForegroundVariant>>,
    by_class: BTreeMap<u8, Vec<usize>>,
}

/// Attempts at a foreground plan that keeps a nonempty silhouette before
/// falling back to the unaugmented cutout.
const FG_PLAN_ATTEMPTS: u64 = 8;

pub fn build_pools(
    registry: &ClassRegistry,
    bg_asset: &SeedAsset,
    fg_assets: &HashMap<String, PixelBuffer>,
    spec: &PoolSpec,
    resolution: (u32, u32),
    master_seed: u64,
) -> Result<Pools> {
    spec.validate()?;
    if registry.is_empty() {
        return Err(Error::invalid("class registry is empty"));
    }
    if bg_asset.image.channels() != 3 {
        return Err(Error::Ingestion {
            asset: bg_asset.id.clone(),
            reason: format!("background must be RGB, got {} channels", bg_asset.image.channels()),
        });
    }
    let background = imgcore::resize(&bg_asset.image, resolution.0, resolution.1, Filter::Bilinear)?;

    let mut sources = Vec::new();
    let mut by_class: BTreeMap<u8, Vec<usize>> = BTreeMap::new();
    for entry in registry.entries() {
        for (seed_index, asset) in entry.assets.iter().enumerate() {
            let image = fg_assets.get(asset).ok_or_else(|| Error::Ingestion {
                asset: asset.clone(),
                reason: "foreground asset not loaded".into(),
            })?;
            let cutout = ForegroundCutout::new(image.clone(), entry.id, asset.clone())
                .and_then(|c| blend::prepare_cutout(&c))?;
            let slot0 = sources.len() * spec.q_per_seed;
            by_class
                .entry(entry.id)
                .or_default()
                .extend(slot0..slot0 + spec.q_per_seed);
            sources.push(ForegroundSource {
                class_id: entry.id,
                seed_index,
                cutout,
            });
        }
    }
    let fg_slots = sources.len() * spec.q_per_seed;
    Ok(Pools {
        spec: spec.clone(),
        master_seed,
        background,
        sources,
        bg: (0..spec.p).map(|_| OnceLock::new()).collect(),
        fg: (0..fg_slots).map(|_| OnceLock::new()).collect(),
        by_class,
    })
}

impl Pools {
    pub fn spec(&self) -> &PoolSpec {
        &self.spec
    }

    pub fn resolution(&self) -> (u32, u32) {
        self.background.dims()
    }

    pub fn background_len(&self) -> usize {
        self.bg.len()
    }

    pub fn foreground_len(&self) -> usize {
        self.fg.len()
    }

    /// Foreground slot indices belonging to `class_id`.
    pub fn foreground_slots(&self, class_id: u8) -> &[usize] {
        self.by_class.get(&class_id).map_or(&[], |v| v.as_slice())
    }

    pub fn background(&self, i: usize) -> &BackgroundVariant {
        self.bg[i].get_or_init(|| self.make_background(i))
    }

    pub fn foreground(&self, i: usize) -> &ForegroundVariant {
        self.fg[i].get_or_init(|| self.make_foreground(i))
    }

    /// Compute every slot now.
    pub fn materialize(&self) {
        (0..self.bg.len()).into_par_iter().for_each(|i| {
            self.background(i);
        });
        (0..self.fg.len()).into_par_iter().for_each(|i| {
            self.foreground(i);
        });
    }

    fn make_background(&self, i: usize) -> BackgroundVariant {
        let s = seed::derive(seed::derive(self.master_seed, domain::BACKGROUND_POOL), i as u64);
        let (lo, hi) = self.spec.bg_ops;
        if hi == 0 {
            return BackgroundVariant {
                image: self.background.clone(),
                plan: AugPlan::identity(s),
            };
        }
        let plan = augops::sample_plan(s, &self.spec.bg_catalog, (lo, hi)).expect("pool spec validated");
        let image = augops::apply_plan(&plan, &self.background).expect("catalog ops apply to RGB");
        BackgroundVariant { image, plan }
    }

    fn make_foreground(&self, i: usize) -> ForegroundVariant {
        let q = self.spec.q_per_seed;
        let src = &self.sources[i / q];
        let base = seed::derive(
            seed::derive(
                seed::derive(self.master_seed, domain::FOREGROUND_POOL),
                src.class_id as u64,
            ),
            src.seed_index as u64,
        );
        let slot_seed = seed::derive(base, (i % q) as u64);
        let (lo, hi) = self.spec.fg_ops;
        if hi > 0 {
            for attempt in 0..FG_PLAN_ATTEMPTS {
                let s = seed::derive(slot_seed, attempt);
                let plan = augops::sample_plan(s, &self.spec.fg_catalog, (lo, hi)).expect("pool spec validated");
                if let Some(cutout) = augment_cutout(&src.cutout, &plan) {
                    return ForegroundVariant { cutout, plan };
                }
            }
        }
        ForegroundVariant {
            cutout: src.cutout.clone(),
            plan: AugPlan::identity(slot_seed),
        }
    }
}

/// Apply a plan jointly to a cutout and its silhouette; the warped silhouette
/// becomes the new alpha. `None` if nothing opaque survives.
fn augment_cutout(cutout: &ForegroundCutout, plan: &AugPlan) -> Option<ForegroundCutout> {
    let (img, mask) = augops::apply_plan_joint(plan, cutout.image(), &cutout.silhouette()).ok()?;
    let mut img = img;
    for (px, &m) in img.data_mut().chunks_exact_mut(4).zip(mask.data()) {
        px[3] = m;
    }
    let out = ForegroundCutout::new(img, cutout.class_id(), cutout.source_asset()).ok()?;
    blend::prepare_cutout(&out).ok()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RecipeName {
    A,
    B,
    C,
    #[serde(rename = "custom")]
    Custom,
}

impl std::str::FromStr for RecipeName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" | "a" => Ok(RecipeName::A),
            "B" | "b" => Ok(RecipeName::B),
            "C" | "c" => Ok(RecipeName::C),
            "custom" => Ok(RecipeName::Custom),
            other => Err(Error::invalid(format!("unknown recipe `{other}` (A|B|C|custom)"))),
        }
    }
}

/// Everything that determines a dataset's bytes, short of the seed images.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecipeConfig {
    pub name: RecipeName,
    pub total: usize,
    pub two_instrument_fraction: f64,
    /// Seeds used per class; `None` uses all registered seeds.
    pub seeds_per_class: Option<usize>,
    pub pool: PoolSpec,
    pub augmix: MixConfig,
    pub master_seed: u64,
    pub resolution: (u32, u32),
    /// Restrict generation to these class ids; `None` means every class.
    pub classes: Option<Vec<u8>>,
}

impl RecipeConfig {
    /// A: 4000 singles. B: 4000 singles + 2000 doubles. C: 8000 with 20% doubles from 3 seeds per class.
    pub fn preset(name: RecipeName) -> Self {
        let (total, fraction, seeds) = match name {
            RecipeName::A => (4000, 0.0, Some(2)),
            RecipeName::B => (6000, 1.0 / 3.0, Some(2)),
            RecipeName::C => (8000, 0.2, Some(3)),
            RecipeName::Custom => (1000, 0.0, None),
        };
        Self {
            name,
            total,
            two_instrument_fraction: fraction,
            seeds_per_class: seeds,
            pool: PoolSpec::default(),
            augmix: MixConfig::default(),
            master_seed: 0,
            resolution: (224, 224),
            classes: None,
        }
    }

    /// Exact `(singles, doubles)` split.
    pub fn split(&self) -> (usize, usize) {
        let doubles = ((self.total as f64 * self.two_instrument_fraction).round() as usize).min(self.total);
        (self.total - doubles, doubles)
    }

    pub fn validate(&self) -> Result<()> {
        if self.total == 0 {
            return Err(Error::invalid("recipe total must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.two_instrument_fraction) {
            return Err(Error::invalid("two_instrument_fraction must lie in [0, 1]"));
        }
        if self.resolution.0 == 0 || self.resolution.1 == 0 {
            return Err(Error::invalid("resolution must be nonzero"));
        }
        if self.seeds_per_class == Some(0) {
            return Err(Error::invalid("seeds_per_class must be at least 1"));
        }
        self.pool.validate()?;
        if self.augmix.op_set != OpSet::None {
            self.augmix.validate()?;
        }
        Ok(())
    }
}

/// Classes pasted into one scene.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Assignment {
    Single(u8),
    Double(u8, u8),
}

impl Assignment {
    pub fn classes(&self) -> Vec<u8> {
        match *self {
            Assignment::Single(a) => vec![a],
            Assignment::Double(a, b) => vec![a, b],
        }
    }
}

/// Singles round-robin over `classes`; doubles pick the two least-used classes,
/// preferring the least-used pair, so per-class counts stay within one.
pub fn class_schedule(classes: &[u8], singles: usize, doubles: usize) -> Result<Vec<Assignment>> {
    if classes.is_empty() {
        return Err(Error::invalid("no classes to schedule"));
    }
    if doubles > 0 && classes.len() < 2 {
        return Err(Error::invalid("two-instrument scenes need at least two classes"));
    }
    let n = classes.len();
    let mut out: Vec<Assignment> = (0..singles).map(|i| Assignment::Single(classes[i % n])).collect();
    let mut used = vec![0usize; n];
    let mut last = vec![0usize; n];
    let mut pairs = vec![vec![0usize; n]; n];
    for step in 1..=doubles {
        let a = (0..n).min_by_key(|&i| (used[i], last[i], i)).expect("n >= 2");
        let b = (0..n)
            .filter(|&i| i != a)
            .min_by_key(|&i| (used[i], pairs[a][i], last[i], i))
            .expect("n >= 2");
        used[a] += 1;
        used[b] += 1;
        last[a] = step;
        last[b] = step;
        pairs[a][b] += 1;
        pairs[b][a] += 1;
        let (x, y) = (classes[a.min(b)], classes[a.max(b)]);
        out.push(Assignment::Double(x, y));
    }
    Ok(out)
}

/// Provenance of the background and foreground plans that fed a scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenePlans {
    pub background: AugPlan,
    pub foreground: Vec<AugPlan>,
}

/// One manifest line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneRecord {
    pub index: usize,
    pub image_path: String,
    pub mask_path: String,
    pub classes: BTreeSet<u8>,
    pub seed: u64,
    pub bg_variant: usize,
    pub fg_variants: Vec<usize>,
    pub placements: Vec<Placement>,
    pub plans: ScenePlans,
    pub mix: Option<MixDraw>,
}

pub fn image_path(index: usize) -> String {
    format!("images/{index:06}.png")
}

pub fn mask_path(index: usize) -> String {
    format!("masks/{index:06}.png")
}

/// Per-index scene generator. `scene(i)` depends only on the recipe, the
/// pools and `i`.
pub struct Generator<'a> {
    recipe: &'a RecipeConfig,
    pools: &'a Pools,
    schedule: Vec<Assignment>,
}

impl<'a> Generator<'a> {
    pub fn new(recipe: &'a RecipeConfig, registry: &ClassRegistry, pools: &'a Pools) -> Result<Self> {
        recipe.validate()?;
        if pools.resolution() != recipe.resolution {
            return Err(Error::invalid("pools were built for a different resolution"));
        }
        let classes = match &recipe.classes {
            Some(ids) => {
                let mut seen = BTreeSet::new();
                for &id in ids {
                    if registry.get(id).is_none() {
                        return Err(Error::invalid(format!("class id {id} is not registered")));
                    }
                    if !seen.insert(id) {
                        return Err(Error::invalid(format!("class id {id} listed twice")));
                    }
                }
                ids.clone()
            }
            None => registry.ids(),
        };
        for &id in &classes {
            if pools.foreground_slots(id).is_empty() {
                return Err(Error::invalid(format!("class id {id} has no foreground variants")));
            }
        }
        let (singles, doubles) = recipe.split();
        let schedule = class_schedule(&classes, singles, doubles)?;
        Ok(Self {
            recipe,
            pools,
            schedule,
        })
    }

    pub fn len(&self) -> usize {
        self.schedule.len()
    }

    pub fn is_empty(&self) -> bool {
        self.schedule.is_empty()
    }

    pub fn assignment(&self, index: usize) -> Assignment {
        self.schedule[index]
    }

    pub fn recipe(&self) -> &RecipeConfig {
        self.recipe
    }

    pub fn pools(&self) -> &Pools {
        self.pools
    }

    pub fn scene(&self, index: usize) -> Result<(Scene, SceneRecord)> {
        if index >= self.len() {
            return Err(Error::invalid(format!("scene index {index} beyond total {}", self.len())));
        }
        let gen_err = |reason: String| Error::Generation { index, reason };
        let scene_seed = seed::scene_seed(self.recipe.master_seed, index);
        let mut rng = seed::rng(seed::derive(scene_seed, domain::SCENE));
        let classes = self.schedule[index].classes();

        let bg_variant = rng.random_range(0..self.pools.background_len());
        let fg_variants: Vec<usize> = classes
            .iter()
            .map(|&c| {
                let slots = self.pools.foreground_slots(c);
                slots[rng.random_range(0..slots.len())]
            })
            .collect();
        let bg = self.pools.background(bg_variant);
        let fgs: Vec<&ForegroundVariant> = fg_variants.iter().map(|&i| self.pools.foreground(i)).collect();

        let placement_root = seed::derive(scene_seed, domain::PLACEMENT);
        let mut found = None;
        for attempt in 0..blend::MAX_PLACEMENT_ATTEMPTS as u64 {
            let mut placements = Vec::with_capacity(fgs.len());
            for (j, fg) in fgs.iter().enumerate() {
                let s = seed::derive(placement_root, attempt * 4 + j as u64);
                let mut pl = blend::sample_placement(s, self.recipe.resolution, &fg.cutout)
                    .map_err(|e| gen_err(e.to_string()))?;
                pl.z_order = j as i32;
                placements.push(pl);
            }
            let result = match fgs.as_slice() {
                [a] => blend::blend_one(&bg.image, &a.cutout, &placements[0]),
                [a, b] => blend::blend_two(&bg.image, [&a.cutout, &b.cutout], [&placements[0], &placements[1]]),
                _ => unreachable!(),
            };
            match result {
                Ok(scene) if scene.classes_present().len() == fgs.len() => {
                    found = Some((scene, placements));
                    break;
                }
                Ok(_) | Err(Error::PlacementRejected { .. }) => continue,
                Err(e) => return Err(gen_err(e.to_string())),
            }
        }
        let (mut scene, placements) = found.ok_or_else(|| {
            gen_err(format!(
                "no placement left every instrument visible in {} attempts",
                blend::MAX_PLACEMENT_ATTEMPTS
            ))
        })?;

        let mix = if self.recipe.augmix.op_set != OpSet::None {
            let draw = augmix::sample_mix(seed::derive(scene_seed, domain::MIX), &self.recipe.augmix)?;
            let mixed = augmix::mix_apply(scene.image(), &draw)?;
            scene = scene.with_image(mixed)?;
            Some(draw)
        } else {
            None
        };

        let record = SceneRecord {
            index,
            image_path: image_path(index),
            mask_path: mask_path(index),
            classes: scene.classes_present().clone(),
            seed: scene_seed,
            bg_variant,
            fg_variants: fg_variants.clone(),
            placements,
            plans: ScenePlans {
                background: bg.plan.clone(),
                foreground: fgs.iter().map(|f| f.plan.clone()).collect(),
            },
            mix,
        };
        Ok((scene, record))
    }

    /// Re-render a scene from its record alone (recorded variants, placements
    /// and mix draw).
    pub fn replay(&self, record: &SceneRecord) -> Result<Scene> {
        if record.bg_variant >= self.pools.background_len()
            || record.fg_variants.iter().any(|&i| i >= self.pools.foreground_len())
            || record.fg_variants.len() != record.placements.len()
        {
            return Err(Error::invalid(format!("record {} references missing pool slots", record.index)));
        }
        let bg = &self.pools.background(record.bg_variant).image;
        let fgs: Vec<&ForegroundCutout> = record
            .fg_variants
            .iter()
            .map(|&i| &self.pools.foreground(i).cutout)
            .collect();
        let scene = match (fgs.as_slice(), record.placements.as_slice()) {
            ([a], [p]) => blend::blend_one(bg, a, p)?,
            ([a, b], [p, q]) => blend::blend_two(bg, [a, b], [p, q])?,
            _ => return Err(Error::invalid("records hold one or two cutouts")),
        };
        match &record.mix {
            Some(draw) => {
                let mixed = augmix::mix_apply(scene.image(), draw)?;
                scene.with_image(mixed)
            }
            None => Ok(scene),
        }
    }

    /// Scenes in index order, generated on the current rayon pool.
    pub fn generate_all(&self) -> Result<Vec<(Scene, SceneRecord)>> {
        (0..self.len()).into_par_iter().map(|i| self.scene(i)).collect()
    }

    /// Lazy in-order stream.
    pub fn stream(&self) -> impl Iterator<Item = Result<(Scene, SceneRecord)>> + '_ {
        (0..self.len()).map(move |i| self.scene(i))
    }
}
