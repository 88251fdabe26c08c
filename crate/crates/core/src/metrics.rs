//! Dice similarity between binary masks.
//!
//! Batch evaluation averages per-image scores (not pooled pixel counts).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgcore::PixelBuffer;
use crate::manifest::read_png;

/// Instrument-vs-background view of a single-channel raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMaskView {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl BinaryMaskView {
    pub fn new(width: u32, height: u32, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width as usize * height as usize {
            return Err(Error::invalid(format!(
                "{} mask bits for a {width}x{height} view",
                bits.len()
            )));
        }
        Ok(Self { width, height, bits })
    }

    /// Positive where the class id is nonzero.
    pub fn from_ids(mask: &PixelBuffer) -> Result<Self> {
        Self::from_pred(mask, |v| v > 0)
    }

    /// Positive where the value is at least 128.
    pub fn from_probability(mask: &PixelBuffer) -> Result<Self> {
        Self::from_pred(mask, |v| v >= 128)
    }

    fn from_pred(mask: &PixelBuffer, pred: impl Fn(u8) -> bool) -> Result<Self> {
        if mask.channels() != 1 {
            return Err(Error::invalid(format!(
                "binary views need a 1-channel raster, got {} channels",
                mask.channels()
            )));
        }
        Self::new(mask.width(), mask.height(), mask.data().iter().map(|&v| pred(v)).collect())
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

/// `2|A∩B| / (|A|+|B|)`, with 1 for two empty masks.
pub fn dsc(a: &BinaryMaskView, b: &BinaryMaskView) -> Result<f64> {
    if a.dims() != b.dims() {
        return Err(Error::invalid(format!(
            "mask dims differ: {:?} vs {:?}",
            a.dims(),
            b.dims()
        )));
    }
    let (mut inter, mut na, mut nb) = (0u64, 0u64, 0u64);
    for (&x, &y) in a.bits.iter().zip(&b.bits) {
        na += x as u64;
        nb += y as u64;
        inter += (x && y) as u64;
    }
    if na + nb == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * inter as f64 / (na + nb) as f64)
}

/// How prediction rasters are binarized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredMode {
    /// Probability if any value reaches 128, otherwise a label map.
    #[default]
    Auto,
    /// Value ≥ 128.
    Prob,
    /// Value > 0.
    Label,
}

impl std::str::FromStr for PredMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(PredMode::Auto),
            "prob" => Ok(PredMode::Prob),
            "label" => Ok(PredMode::Label),
            other => Err(Error::invalid(format!("unknown prediction mode `{other}` (auto|prob|label)"))),
        }
    }
}

pub fn pred_view(pred: &PixelBuffer, mode: PredMode) -> Result<BinaryMaskView> {
    let mode = match mode {
        PredMode::Auto if pred.data().iter().any(|&v| v >= 128) => PredMode::Prob,
        PredMode::Auto => PredMode::Label,
        m => m,
    };
    match mode {
        PredMode::Prob => BinaryMaskView::from_probability(pred),
        _ => BinaryMaskView::from_ids(pred),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageScore {
    pub file: String,
    pub dsc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairError {
    pub file: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DscReport {
    pub pairs: usize,
    pub mean: f64,
    pub per_image: Vec<ImageScore>,
    /// Files present on only one side.
    pub unpaired: Vec<String>,
    /// Paired files that could not be compared.
    pub errors: Vec<PairError>,
}

fn png_files(dir: &Path) -> Result<BTreeMap<String, PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut out = BTreeMap::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let is_png = path.extension().is_some_and(|x| x.eq_ignore_ascii_case("png"));
        if path.is_file() && is_png {
            if let Some(name) = path.file_name().and_then(|n| n.to_str()) {
                out.insert(name.to_string(), path.clone());
            }
        }
    }
    Ok(out)
}

/// Score predictions against ground-truth label masks, pairing files by name.
pub fn dsc_batch(pred_dir: &Path, gt_dir: &Path, mode: PredMode) -> Result<DscReport> {
    let preds = png_files(pred_dir)?;
    let gts = png_files(gt_dir)?;
    let mut unpaired: Vec<String> = preds
        .keys()
        .filter(|k| !gts.contains_key(*k))
        .map(|k| format!("pred/{k}"))
        .collect();
    unpaired.extend(gts.keys().filter(|k| !preds.contains_key(*k)).map(|k| format!("gt/{k}")));
    let paired: Vec<(&String, &PathBuf, &PathBuf)> = preds
        .iter()
        .filter_map(|(k, p)| gts.get(k).map(|g| (k, p, g)))
        .collect();
    if paired.is_empty() {
        return Err(Error::invalid(format!(
            "no prediction/ground-truth pairs between {} and {}",
            pred_dir.display(),
            gt_dir.display()
        )));
    }
    let scored: Vec<std::result::Result<ImageScore, PairError>> = paired
        .par_iter()
        .map(|&(name, p, g)| {
            let score = || -> Result<f64> {
                let pred = pred_view(&read_png(p)?.to_luma()?, mode)?;
                let gt = BinaryMaskView::from_ids(&read_png(g)?.to_luma()?)?;
                dsc(&pred, &gt)
            };
            score()
                .map(|dsc| ImageScore { file: name.clone(), dsc })
                .map_err(|e| PairError {
                    file: name.clone(),
                    reason: e.to_string(),
                })
        })
        .collect();
    let mut per_image = Vec::new();
    let mut errors = Vec::new();
    for s in scored {
        match s {
            Ok(v) => per_image.push(v),
            Err(e) => errors.push(e),
        }
    }
    if per_image.is_empty() {
        return Err(Error::invalid("no image pair could be scored"));
    }
    let mean = per_image.iter().map(|s| s.dsc).sum::<f64>() / per_image.len() as f64;
    Ok(DscReport {
        pairs: per_image.len(),
        mean,
        per_image,
        unpaired,
        errors,
    })
}
