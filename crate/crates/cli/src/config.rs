//! TOML engine configuration and command-line overrides.
//!
//! ```toml
//! [assets]
//! background = "background.png"      # relative paths resolve against this file
//!
//! [[classes]]                        # ids are assigned 1, 2, ... in listing order
//! name = "Prograsp Forceps"
//! assets = ["fg/prograsp_0.png", "fg/prograsp_1.png"]
//!
//! [recipe]                           # every key optional; preset values fill the rest
//! name = "C"                         # A | B | C | custom
//! total = 8000
//! two_instrument_fraction = 0.2
//! seeds_per_class = 3
//! master_seed = 0
//! resolution = [224, 224]
//! classes = [9, 10]                  # restrict generation to these ids
//!
//! [pool]
//! p = 200
//! q_per_seed = 25
//! bg_ops = [1, 4]
//! fg_ops = [1, 3]
//!
//! [augmix]
//! op_set = "none"                    # none | soft | hard
//! n_chains = 3
//!
//! [output]
//! dir = "dataset"
//! workers = 0                        # 0 = all CPUs
//! prefix_from = "synthetic_a"        # reuse a compatible dataset's leading scenes
//! ```
//!
//! Without `[assets]`/`[[classes]]` the built-in procedural seed set is used.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::Deserialize;

use scenesynth::augmix::{MixConfig, OpSet};
use scenesynth::augops::OpDescriptor;
use scenesynth::composer::{ClassRegistry, PoolSpec, RecipeConfig, RecipeName, SeedAsset};
use scenesynth::demo;
use scenesynth::manifest::read_png;
use scenesynth::PixelBuffer;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngineConfig {
    pub assets: Option<AssetsSection>,
    #[serde(default)]
    pub classes: Vec<ClassSection>,
    #[serde(default)]
    pub recipe: RecipeSection,
    #[serde(default)]
    pub pool: PoolSection,
    #[serde(default)]
    pub augmix: AugmixSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssetsSection {
    pub background: PathBuf,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassSection {
    pub name: String,
    pub assets: Vec<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecipeSection {
    pub name: Option<RecipeName>,
    pub total: Option<usize>,
    pub two_instrument_fraction: Option<f64>,
    pub seeds_per_class: Option<usize>,
    pub master_seed: Option<u64>,
    pub resolution: Option<(u32, u32)>,
    pub classes: Option<Vec<u8>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoolSection {
    pub p: Option<usize>,
    pub q_per_seed: Option<usize>,
    pub bg_ops: Option<(usize, usize)>,
    pub fg_ops: Option<(usize, usize)>,
    pub bg_catalog: Option<Vec<OpDescriptor>>,
    pub fg_catalog: Option<Vec<OpDescriptor>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AugmixSection {
    pub op_set: Option<OpSet>,
    pub n_chains: Option<usize>,
    pub depth_choices: Option<Vec<usize>>,
    pub beta_alpha: Option<f64>,
    pub dirichlet_alpha: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    pub workers: Option<usize>,
    pub prefix_from: Option<PathBuf>,
}

/// Command-line values that win over the file.
#[derive(Debug, Default, Clone, clap::Args)]
pub struct Overrides {
    /// Recipe preset: A, B, C or custom.
    #[arg(long)]
    pub recipe: Option<RecipeName>,
    /// Number of scenes.
    #[arg(long)]
    pub total: Option<usize>,
    /// Share of two-instrument scenes.
    #[arg(long)]
    pub fraction: Option<f64>,
    #[arg(long)]
    pub seeds_per_class: Option<usize>,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output resolution, `WxH` or a single side.
    #[arg(long, value_parser = parse_resolution)]
    pub resolution: Option<(u32, u32)>,
    /// Background pool size.
    #[arg(long)]
    pub pool_p: Option<usize>,
    /// Foreground variants per seed image.
    #[arg(long)]
    pub pool_q: Option<usize>,
    /// Mixing operator set: none, soft or hard.
    #[arg(long)]
    pub augmix: Option<OpSet>,
    #[arg(long)]
    pub n_chains: Option<usize>,
    /// Restrict generation to these class ids (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub classes: Option<Vec<u8>>,
}

pub fn parse_resolution(s: &str) -> Result<(u32, u32), String> {
    let parse = |v: &str| v.trim().parse::<u32>().map_err(|e| format!("`{v}`: {e}"));
    let (w, h) = match s.split_once(['x', 'X']) {
        Some((w, h)) => (parse(w)?, parse(h)?),
        None => {
            let v = parse(s)?;
            (v, v)
        }
    };
    if w == 0 || h == 0 {
        return Err("resolution must be nonzero".into());
    }
    Ok((w, h))
}

/// Loaded configuration with paths resolved against the config file.
pub struct LoadedConfig {
    pub file: EngineConfig,
    pub base_dir: PathBuf,
}

pub fn load(path: Option<&Path>) -> anyhow::Result<LoadedConfig> {
    let Some(path) = path else {
        return Ok(LoadedConfig {
            file: EngineConfig::default(),
            base_dir: PathBuf::from("."),
        });
    };
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let file: EngineConfig = toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(LoadedConfig { file, base_dir })
}

impl LoadedConfig {
    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn output_dir(&self, flag: Option<&Path>) -> Option<PathBuf> {
        flag.map(Path::to_path_buf)
            .or_else(|| self.file.output.dir.as_deref().map(|d| self.resolve(d)))
    }

    pub fn prefix_from(&self, flag: Option<&Path>) -> Option<PathBuf> {
        flag.map(Path::to_path_buf)
            .or_else(|| self.file.output.prefix_from.as_deref().map(|d| self.resolve(d)))
    }

    pub fn workers(&self, flag: Option<usize>) -> usize {
        flag.or(self.file.output.workers).unwrap_or(0)
    }

    /// Effective recipe: preset, then file values, then flags.
    pub fn recipe(&self, o: &Overrides) -> anyhow::Result<RecipeConfig> {
        let f = &self.file;
        let name = o.recipe.or(f.recipe.name).unwrap_or(RecipeName::A);
        let mut r = RecipeConfig::preset(name);
        macro_rules! set {
            ($field:expr, $($v:expr),+) => {
                $( if let Some(v) = $v.clone() { $field = v; } )+
            };
        }
        set!(r.total, f.recipe.total, o.total);
        set!(r.two_instrument_fraction, f.recipe.two_instrument_fraction, o.fraction);
        if let Some(n) = o.seeds_per_class.or(f.recipe.seeds_per_class) {
            r.seeds_per_class = Some(n);
        }
        set!(r.master_seed, f.recipe.master_seed, o.seed);
        set!(r.resolution, f.recipe.resolution, o.resolution);
        if let Some(c) = o.classes.clone().or_else(|| f.recipe.classes.clone()) {
            r.classes = Some(c);
        }
        let mut pool = PoolSpec::default();
        set!(pool.p, f.pool.p, o.pool_p);
        set!(pool.q_per_seed, f.pool.q_per_seed, o.pool_q);
        set!(pool.bg_ops, f.pool.bg_ops);
        set!(pool.fg_ops, f.pool.fg_ops);
        set!(pool.bg_catalog, f.pool.bg_catalog);
        set!(pool.fg_catalog, f.pool.fg_catalog);
        r.pool = pool;
        let mut mix = MixConfig::default();
        set!(mix.op_set, f.augmix.op_set, o.augmix);
        set!(mix.n_chains, f.augmix.n_chains, o.n_chains);
        set!(mix.depth_choices, f.augmix.depth_choices);
        set!(mix.beta_alpha, f.augmix.beta_alpha);
        set!(mix.dirichlet_alpha, f.augmix.dirichlet_alpha);
        r.augmix = mix;
        r.validate()?;
        Ok(r)
    }

    /// Registry and decoded seed images, trimmed to the recipe's seeds per class.
    pub fn seed_assets(&self, recipe: &RecipeConfig) -> anyhow::Result<Seeds> {
        let f = &self.file;
        let (background, foreground, registry) = match (&f.assets, f.classes.is_empty()) {
            (None, true) => {
                let seeds = recipe.seeds_per_class.unwrap_or(3);
                let novel = recipe.classes.iter().flatten().any(|&c| c > 8);
                let kit = demo::demo_kit(seeds, novel)?;
                (kit.background, kit.foreground, kit.registry)
            }
            (Some(assets), false) => {
                let bg_path = self.resolve(&assets.background);
                let background = SeedAsset {
                    id: assets.background.to_string_lossy().into_owned(),
                    image: read_asset(&bg_path)?.to_rgb()?,
                };
                let mut foreground = HashMap::new();
                let mut classes = Vec::new();
                for class in &f.classes {
                    let mut ids = Vec::new();
                    let take = recipe.seeds_per_class.unwrap_or(class.assets.len());
                    for a in class.assets.iter().take(take) {
                        let id = a.to_string_lossy().into_owned();
                        let img = read_asset(&self.resolve(a))?;
                        if img.channels() != 4 {
                            bail!(
                                "foreground asset {} needs an alpha channel (RGBA), got {} channel(s)",
                                self.resolve(a).display(),
                                img.channels()
                            );
                        }
                        foreground.insert(id.clone(), img);
                        ids.push(id);
                    }
                    classes.push((class.name.clone(), ids));
                }
                (background, foreground, ClassRegistry::new(classes)?)
            }
            _ => bail!("config needs both [assets] and [[classes]], or neither for the built-in seed set"),
        };
        let registry = match recipe.seeds_per_class {
            Some(n) => registry.limit_seeds(n)?,
            None => registry,
        };
        Ok(Seeds {
            background,
            foreground,
            registry,
        })
    }
}

fn read_asset(path: &Path) -> anyhow::Result<PixelBuffer> {
    if !path.is_file() {
        bail!("seed asset {} not found", path.display());
    }
    read_png(path).with_context(|| format!("decoding seed asset {}", path.display()))
}

pub struct Seeds {
    pub background: SeedAsset,
    pub foreground: HashMap<String, PixelBuffer>,
    pub registry: ClassRegistry,
}
