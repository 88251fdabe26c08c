//! Dataset persistence: PNG I/O, the line-delimited manifest, validation and
//! class statistics.
//!
//! Layout under the dataset root:
//!
//! ```text
//! manifest.jsonl        header object, then one SceneRecord per line in index order
//! images/000000.png     8-bit RGB
//! masks/000000.png      8-bit gray, pixel = class id (0 = background)
//! ```

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Component, Path, PathBuf};

use image::codecs::png::{CompressionType, FilterType, PngEncoder};
use image::{DynamicImage, ExtendedColorType, ImageEncoder};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::blend::{mask_classes, Scene};
use crate::composer::{ClassRegistry, Generator, RecipeConfig, SceneRecord, SeedAsset};
use crate::error::{Error, Result};
use crate::imgcore::PixelBuffer;
use crate::seed;

pub const MANIFEST_FILE: &str = "manifest.jsonl";
pub const FORMAT: &str = "scenesynth-manifest";
pub const FORMAT_VERSION: u32 = 1;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Digest of decoded pixels and dimensions, independent of file encoding.
pub fn pixel_digest(img: &PixelBuffer) -> String {
    let mut h = Sha256::new();
    h.update(img.width().to_le_bytes());
    h.update(img.height().to_le_bytes());
    h.update([img.channels()]);
    h.update(img.data());
    hex::encode(h.finalize())
}

/// PNG bytes with fixed encoder settings.
pub fn encode_png(img: &PixelBuffer) -> Result<Vec<u8>> {
    let color = match img.channels() {
        1 => ExtendedColorType::L8,
        3 => ExtendedColorType::Rgb8,
        4 => ExtendedColorType::Rgba8,
        c => return Err(Error::invalid(format!("cannot encode {c} channels"))),
    };
    let mut out = Vec::new();
    PngEncoder::new_with_quality(&mut out, CompressionType::Default, FilterType::Adaptive)
        .write_image(img.data(), img.width(), img.height(), color)
        .map_err(|e| Error::invalid(format!("png encoding: {e}")))?;
    Ok(out)
}

pub fn write_png(path: &Path, img: &PixelBuffer) -> Result<()> {
    let bytes = encode_png(img)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Decode a PNG (or any enabled format). Gray, RGB and RGBA keep their
/// layout; other color types are converted to RGBA, or gray if they carry no color.
pub fn read_png(path: &Path) -> Result<PixelBuffer> {
    let img = image::ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?
        .decode()
        .map_err(|e| Error::Image {
            path: path.to_path_buf(),
            source: e,
        })?;
    let (w, h) = (img.width(), img.height());
    let (channels, data) = match img {
        DynamicImage::ImageLuma8(b) => (1, b.into_raw()),
        DynamicImage::ImageRgb8(b) => (3, b.into_raw()),
        DynamicImage::ImageRgba8(b) => (4, b.into_raw()),
        other if !other.color().has_color() && !other.color().has_alpha() => (1, other.to_luma8().into_raw()),
        other => (4, other.to_rgba8().into_raw()),
    };
    PixelBuffer::new(w, h, channels, data)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssetDigest {
    pub id: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestHeader {
    pub format: String,
    pub format_version: u32,
    pub master_seed: u64,
    pub seed_derivation: String,
    pub total: usize,
    pub singles: usize,
    pub doubles: usize,
    pub recipe: RecipeConfig,
    pub registry: ClassRegistry,
    pub background_asset: AssetDigest,
    pub foreground_assets: Vec<AssetDigest>,
    /// Taken from the caller (e.g. `SOURCE_DATE_EPOCH`) so reruns stay byte-identical.
    pub created: Option<String>,
}

impl ManifestHeader {
    /// `registry` should be the one the pools were built from.
    pub fn new(
        recipe: &RecipeConfig,
        registry: &ClassRegistry,
        background: &SeedAsset,
        foreground: &HashMap<String, PixelBuffer>,
        created: Option<String>,
    ) -> Result<Self> {
        let mut foreground_assets = Vec::new();
        for entry in registry.entries() {
            for id in &entry.assets {
                let img = foreground.get(id).ok_or_else(|| Error::Ingestion {
                    asset: id.clone(),
                    reason: "foreground asset not loaded".into(),
                })?;
                foreground_assets.push(AssetDigest {
                    id: id.clone(),
                    sha256: pixel_digest(img),
                });
            }
        }
        let (singles, doubles) = recipe.split();
        Ok(Self {
            format: FORMAT.into(),
            format_version: FORMAT_VERSION,
            master_seed: recipe.master_seed,
            seed_derivation: seed::DERIVATION.into(),
            total: recipe.total,
            singles,
            doubles,
            recipe: recipe.clone(),
            registry: registry.clone(),
            background_asset: AssetDigest {
                id: background.id.clone(),
                sha256: pixel_digest(&background.image),
            },
            foreground_assets,
            created,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub header: ManifestHeader,
    pub records: Vec<SceneRecord>,
}

fn manifest_err(path: &Path, reason: impl Into<String>) -> Error {
    Error::Manifest {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

/// Header plus each record line parsed independently (line number, result).
type RawManifest = (ManifestHeader, Vec<(usize, std::result::Result<SceneRecord, String>)>);

fn read_raw(dir: &Path) -> Result<RawManifest> {
    let path = dir.join(MANIFEST_FILE);
    let file = fs::File::open(&path).map_err(|e| manifest_err(&path, e.to_string()))?;
    let mut lines = BufReader::new(file).lines().enumerate();
    let header_line = match lines.next() {
        Some((_, Ok(l))) => l,
        Some((_, Err(e))) => return Err(manifest_err(&path, e.to_string())),
        None => return Err(manifest_err(&path, "empty manifest")),
    };
    let header: ManifestHeader =
        serde_json::from_str(&header_line).map_err(|e| manifest_err(&path, format!("header: {e}")))?;
    if header.format != FORMAT || header.format_version != FORMAT_VERSION {
        return Err(manifest_err(
            &path,
            format!("unsupported format {} v{}", header.format, header.format_version),
        ));
    }
    let mut records = Vec::new();
    for (i, line) in lines {
        let line = line.map_err(|e| manifest_err(&path, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        records.push((i + 1, serde_json::from_str(&line).map_err(|e| e.to_string())));
    }
    Ok((header, records))
}

/// Strict read: any malformed line is an error.
pub fn read_manifest(dir: &Path) -> Result<DatasetManifest> {
    let path = dir.join(MANIFEST_FILE);
    let (header, raw) = read_raw(dir)?;
    let records = raw
        .into_iter()
        .map(|(line, r)| r.map_err(|e| manifest_err(&path, format!("line {line}: {e}"))))
        .collect::<Result<Vec<_>>>()?;
    Ok(DatasetManifest { header, records })
}

fn json_line<T: Serialize>(out: &mut Vec<u8>, v: &T) -> Result<()> {
    serde_json::to_writer(&mut *out, v).map_err(|e| Error::invalid(format!("serializing manifest: {e}")))?;
    out.push(b'\n');
    Ok(())
}

fn manifest_bytes(header: &ManifestHeader, records: &[SceneRecord]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    json_line(&mut out, header)?;
    for r in records {
        json_line(&mut out, r)?;
    }
    Ok(out)
}

fn safe_relative(rel: &str) -> bool {
    let p = Path::new(rel);
    !rel.is_empty() && p.components().all(|c| matches!(c, Component::Normal(_)))
}

pub fn write_scene(dir: &Path, scene: &Scene, record: &SceneRecord) -> Result<()> {
    for (rel, img) in [(&record.image_path, scene.image()), (&record.mask_path, scene.mask())] {
        let path = dir.join(rel);
        let fail = |reason: String| Error::SceneWrite {
            index: record.index,
            path: path.clone(),
            reason,
        };
        if !safe_relative(rel) {
            return Err(fail("record path must be relative and stay inside the dataset".into()));
        }
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| fail(e.to_string()))?;
        }
        let bytes = encode_png(img).map_err(|e| fail(e.to_string()))?;
        fs::write(&path, bytes).map_err(|e| fail(e.to_string()))?;
    }
    Ok(())
}

/// Read a scene back from its record.
pub fn read_scene(dir: &Path, record: &SceneRecord) -> Result<Scene> {
    let image = read_png(&dir.join(&record.image_path))?;
    let mask = read_png(&dir.join(&record.mask_path))?;
    Scene::from_parts(image, mask)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WriteSummary {
    pub total: usize,
    pub singles: usize,
    pub doubles: usize,
    /// Leading scenes copied from a compatible dataset instead of regenerated.
    pub imported: usize,
    pub manifest_sha256: String,
}

fn remove_previous(dir: &Path) -> Result<()> {
    if !dir.join(MANIFEST_FILE).is_file() {
        return Ok(());
    }
    for sub in ["images", "masks"] {
        let p = dir.join(sub);
        if p.is_dir() {
            fs::remove_dir_all(&p).map_err(|e| Error::io(&p, e))?;
        }
    }
    let m = dir.join(MANIFEST_FILE);
    fs::remove_file(&m).map_err(|e| Error::io(&m, e))
}

/// Check that `prefix` was generated under the same settings and that its
/// scenes match this generator's class schedule; return its records.
fn compatible_prefix(prefix: &Path, header: &ManifestHeader, generator: &Generator) -> Result<Vec<SceneRecord>> {
    let theirs = read_manifest(prefix)?;
    let (a, b) = (&theirs.header, header);
    let (ra, rb) = (&a.recipe, &b.recipe);
    let same = a.master_seed == b.master_seed
        && a.registry == b.registry
        && a.background_asset == b.background_asset
        && a.foreground_assets == b.foreground_assets
        && ra.pool == rb.pool
        && ra.augmix == rb.augmix
        && ra.resolution == rb.resolution
        && ra.seeds_per_class == rb.seeds_per_class
        && ra.classes == rb.classes;
    let path = prefix.join(MANIFEST_FILE);
    if !same {
        return Err(manifest_err(
            &path,
            "prefix dataset was generated with different seeds, assets, pools or mixing",
        ));
    }
    if theirs.records.len() > generator.len() {
        return Err(manifest_err(&path, "prefix dataset is larger than the requested total"));
    }
    for (i, r) in theirs.records.iter().enumerate() {
        let expected: BTreeSet<u8> = generator.assignment(i).classes().into_iter().collect();
        if r.index != i || r.classes != expected {
            return Err(manifest_err(
                &path,
                format!("prefix scene {i} does not match this recipe's class schedule"),
            ));
        }
    }
    Ok(theirs.records)
}

/// Generate every scene on the current rayon pool, write images and masks,
/// then the manifest in index order. An existing dataset in `dir` is replaced.
pub fn write_dataset(
    dir: &Path,
    header: &ManifestHeader,
    generator: &Generator,
    prefix: Option<&Path>,
) -> Result<WriteSummary> {
    if header.total != generator.len() {
        return Err(Error::invalid("header total disagrees with the generator"));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let imported = match prefix {
        Some(p) => compatible_prefix(p, header, generator)?,
        None => Vec::new(),
    };
    remove_previous(dir)?;
    for sub in ["images", "masks"] {
        let p = dir.join(sub);
        fs::create_dir_all(&p).map_err(|e| Error::io(&p, e))?;
    }
    let src = prefix.unwrap_or(dir);
    imported.par_iter().try_for_each(|r| -> Result<()> {
        for rel in [&r.image_path, &r.mask_path] {
            let (from, to) = (src.join(rel), dir.join(rel));
            fs::copy(&from, &to).map_err(|e| Error::io(&from, e))?;
        }
        Ok(())
    })?;
    let fresh: Vec<SceneRecord> = (imported.len()..generator.len())
        .into_par_iter()
        .map(|i| {
            let (scene, record) = generator.scene(i)?;
            write_scene(dir, &scene, &record)?;
            Ok(record)
        })
        .collect::<Result<_>>()?;
    let n_imported = imported.len();
    let records: Vec<SceneRecord> = imported.into_iter().chain(fresh).collect();
    let bytes = manifest_bytes(header, &records)?;
    let tmp = dir.join(format!("{MANIFEST_FILE}.tmp"));
    let dst = dir.join(MANIFEST_FILE);
    {
        let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        f.write_all(&bytes).map_err(|e| Error::io(&tmp, e))?;
    }
    fs::rename(&tmp, &dst).map_err(|e| Error::io(&dst, e))?;
    let doubles = records.iter().filter(|r| r.classes.len() == 2).count();
    Ok(WriteSummary {
        total: records.len(),
        singles: records.len() - doubles,
        doubles,
        imported: n_imported,
        manifest_sha256: sha256_hex(&bytes),
    })
}

/// SHA-256 of every dataset file, keyed by path relative to `dir`.
pub fn digest_tree(dir: &Path) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    let mut files = vec![PathBuf::from(MANIFEST_FILE)];
    for sub in ["images", "masks"] {
        let d = dir.join(sub);
        for entry in fs::read_dir(&d).map_err(|e| Error::io(&d, e))? {
            let entry = entry.map_err(|e| Error::io(&d, e))?;
            files.push(Path::new(sub).join(entry.file_name()));
        }
    }
    for rel in files {
        let p = dir.join(&rel);
        let bytes = fs::read(&p).map_err(|e| Error::io(&p, e))?;
        out.insert(rel.to_string_lossy().replace('\\', "/"), sha256_hex(&bytes));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    MalformedRecord,
    IndexGap,
    CountMismatch,
    MissingFile,
    Unreadable,
    WrongDimensions,
    WrongChannels,
    UnknownClass,
    ClassMismatch,
    EmptyMask,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    MalformedRecord { line: usize, reason: String },
    IndexGap { expected: usize, found: usize },
    CountMismatch { expected: usize, found: usize },
    MissingFile { index: usize, path: String },
    Unreadable { index: usize, path: String, reason: String },
    WrongDimensions { index: usize, path: String, expected: (u32, u32), found: (u32, u32) },
    WrongChannels { index: usize, path: String, expected: u8, found: u8 },
    UnknownClass { index: usize, class_id: u8 },
    ClassMismatch { index: usize, declared: BTreeSet<u8>, found: BTreeSet<u8> },
    EmptyMask { index: usize },
}

impl Violation {
    pub fn kind(&self) -> ViolationKind {
        match self {
            Violation::MalformedRecord { .. } => ViolationKind::MalformedRecord,
            Violation::IndexGap { .. } => ViolationKind::IndexGap,
            Violation::CountMismatch { .. } => ViolationKind::CountMismatch,
            Violation::MissingFile { .. } => ViolationKind::MissingFile,
            Violation::Unreadable { .. } => ViolationKind::Unreadable,
            Violation::WrongDimensions { .. } => ViolationKind::WrongDimensions,
            Violation::WrongChannels { .. } => ViolationKind::WrongChannels,
            Violation::UnknownClass { .. } => ViolationKind::UnknownClass,
            Violation::ClassMismatch { .. } => ViolationKind::ClassMismatch,
            Violation::EmptyMask { .. } => ViolationKind::EmptyMask,
        }
    }

    pub fn index(&self) -> Option<usize> {
        match *self {
            Violation::MissingFile { index, .. }
            | Violation::Unreadable { index, .. }
            | Violation::WrongDimensions { index, .. }
            | Violation::WrongChannels { index, .. }
            | Violation::UnknownClass { index, .. }
            | Violation::ClassMismatch { index, .. }
            | Violation::EmptyMask { index } => Some(index),
            _ => None,
        }
    }
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::MalformedRecord { line, reason } => write!(f, "line {line}: malformed record: {reason}"),
            Violation::IndexGap { expected, found } => write!(f, "expected scene {expected}, found {found}"),
            Violation::CountMismatch { expected, found } => {
                write!(f, "header declares {expected} scenes, manifest holds {found}")
            }
            Violation::MissingFile { index, path } => write!(f, "scene {index}: missing {path}"),
            Violation::Unreadable { index, path, reason } => write!(f, "scene {index}: cannot read {path}: {reason}"),
            Violation::WrongDimensions {
                index,
                path,
                expected,
                found,
            } => write!(
                f,
                "scene {index}: {path} is {}x{}, expected {}x{}",
                found.0, found.1, expected.0, expected.1
            ),
            Violation::WrongChannels {
                index,
                path,
                expected,
                found,
            } => write!(f, "scene {index}: {path} has {found} channel(s), expected {expected}"),
            Violation::UnknownClass { index, class_id } => write!(f, "scene {index}: unknown class id {class_id}"),
            Violation::ClassMismatch { index, declared, found } => {
                write!(f, "scene {index}: declares classes {declared:?}, mask holds {found:?}")
            }
            Violation::EmptyMask { index } => write!(f, "scene {index}: mask has no instrument pixels"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub records_checked: usize,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn count(&self, kind: ViolationKind) -> usize {
        self.violations.iter().filter(|v| v.kind() == kind).count()
    }
}

fn check_file(
    dir: &Path,
    index: usize,
    rel: &str,
    channels: u8,
    dims: (u32, u32),
    out: &mut Vec<Violation>,
) -> Option<PixelBuffer> {
    let path = dir.join(rel);
    let rel = rel.to_string();
    if !safe_relative(&rel) {
        out.push(Violation::Unreadable {
            index,
            path: rel,
            reason: "path escapes the dataset root".into(),
        });
        return None;
    }
    if !path.is_file() {
        out.push(Violation::MissingFile { index, path: rel });
        return None;
    }
    let img = match read_png(&path) {
        Ok(img) => img,
        Err(e) => {
            out.push(Violation::Unreadable {
                index,
                path: rel,
                reason: e.to_string(),
            });
            return None;
        }
    };
    let mut ok = true;
    if img.dims() != dims {
        out.push(Violation::WrongDimensions {
            index,
            path: rel.clone(),
            expected: dims,
            found: img.dims(),
        });
        ok = false;
    }
    if img.channels() != channels {
        out.push(Violation::WrongChannels {
            index,
            path: rel,
            expected: channels,
            found: img.channels(),
        });
        ok = false;
    }
    ok.then_some(img)
}

fn check_record(dir: &Path, header: &ManifestHeader, r: &SceneRecord) -> Vec<Violation> {
    let mut out = Vec::new();
    let dims = header.recipe.resolution;
    check_file(dir, r.index, &r.image_path, 3, dims, &mut out);
    let Some(mask) = check_file(dir, r.index, &r.mask_path, 1, dims, &mut out) else {
        return out;
    };
    let known = |c: u8| header.registry.get(c).is_some();
    let found = mask_classes(&mask);
    let mut unknown: BTreeSet<u8> = found.iter().copied().filter(|&c| !known(c)).collect();
    unknown.extend(r.classes.iter().copied().filter(|&c| c == 0 || !known(c)));
    for class_id in unknown {
        out.push(Violation::UnknownClass { index: r.index, class_id });
    }
    if found.is_empty() {
        out.push(Violation::EmptyMask { index: r.index });
        return out;
    }
    let found_known: BTreeSet<u8> = found.into_iter().filter(|&c| known(c)).collect();
    let declared_known: BTreeSet<u8> = r.classes.iter().copied().filter(|&c| c != 0 && known(c)).collect();
    if found_known != declared_known {
        out.push(Violation::ClassMismatch {
            index: r.index,
            declared: r.classes.clone(),
            found: found_known,
        });
    }
    out
}

/// Check every record and report all problems. Only an unreadable manifest
/// or header is an error.
pub fn validate(dir: &Path) -> Result<ValidationReport> {
    let (header, raw) = read_raw(dir)?;
    let mut violations = Vec::new();
    let mut records = Vec::new();
    for (line, r) in raw {
        match r {
            Ok(rec) => records.push(rec),
            Err(reason) => violations.push(Violation::MalformedRecord { line, reason }),
        }
    }
    if records.len() != header.total || header.recipe.total != header.total {
        violations.push(Violation::CountMismatch {
            expected: header.total,
            found: records.len(),
        });
    }
    for (expected, r) in records.iter().enumerate() {
        if r.index != expected {
            violations.push(Violation::IndexGap {
                expected,
                found: r.index,
            });
        }
    }
    let per_record: Vec<Vec<Violation>> = records.par_iter().map(|r| check_record(dir, &header, r)).collect();
    violations.extend(per_record.into_iter().flatten());
    Ok(ValidationReport {
        records_checked: records.len(),
        violations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassCount {
    pub id: u8,
    pub name: String,
    pub scenes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OccupancyBin {
    pub lo: f64,
    pub hi: f64,
    pub scenes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetStats {
    pub total: usize,
    pub singles: usize,
    pub doubles: usize,
    pub empty_masks: usize,
    /// Scenes containing each registered class.
    pub per_class: Vec<ClassCount>,
    pub occupancy_mean: f64,
    /// Fraction of nonzero mask pixels per scene, in tenths.
    pub occupancy_histogram: Vec<OccupancyBin>,
}

pub const OCCUPANCY_BINS: usize = 10;

/// Class and occupancy statistics of a dataset that validates cleanly.
pub fn stats(dir: &Path) -> Result<DatasetStats> {
    let report = validate(dir)?;
    if !report.is_clean() {
        return Err(manifest_err(
            &dir.join(MANIFEST_FILE),
            format!(
                "dataset has {} violation(s); first: {}",
                report.violations.len(),
                report.violations[0]
            ),
        ));
    }
    let m = read_manifest(dir)?;
    let measured: Vec<(BTreeSet<u8>, f64)> = m
        .records
        .par_iter()
        .map(|r| {
            let mask = read_png(&dir.join(&r.mask_path))?;
            let nonzero = mask.data().iter().filter(|&&v| v != 0).count();
            Ok((mask_classes(&mask), nonzero as f64 / mask.pixel_count() as f64))
        })
        .collect::<Result<_>>()?;
    let mut per_class: Vec<ClassCount> = m
        .header
        .registry
        .entries()
        .iter()
        .map(|e| ClassCount {
            id: e.id,
            name: e.name.clone(),
            scenes: 0,
        })
        .collect();
    let mut hist = vec![0usize; OCCUPANCY_BINS];
    let (mut singles, mut doubles, mut empty) = (0, 0, 0);
    for (classes, occ) in &measured {
        match classes.len() {
            0 => empty += 1,
            1 => singles += 1,
            _ => doubles += 1,
        }
        for &c in classes {
            per_class[c as usize - 1].scenes += 1;
        }
        hist[((occ * OCCUPANCY_BINS as f64) as usize).min(OCCUPANCY_BINS - 1)] += 1;
    }
    let occupancy_mean = measured.iter().map(|(_, o)| o).sum::<f64>() / measured.len().max(1) as f64;
    Ok(DatasetStats {
        total: measured.len(),
        singles,
        doubles,
        empty_masks: empty,
        per_class,
        occupancy_mean,
        occupancy_histogram: hist
            .into_iter()
            .enumerate()
            .map(|(i, scenes)| OccupancyBin {
                lo: i as f64 / OCCUPANCY_BINS as f64,
                hi: (i + 1) as f64 / OCCUPANCY_BINS as f64,
                scenes,
            })
            .collect(),
    })
}
