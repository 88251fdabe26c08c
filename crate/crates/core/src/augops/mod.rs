//! Augmentation operator catalog.
//!
//! An operator is identified by [`OpName`]; its numeric parameters live in a
//! name → value map so that plans serialize to plain JSON and catalogs can be
//! overridden from config files. Sampling resolves every parameter up front:
//! an [`AugPlan`] carries everything needed to replay it bit-exactly, and the
//! appliers hold no randomness of their own beyond the explicit seeds.

pub mod noise;
pub mod occlusion;
pub mod photometric;

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgcore::{self, AffineMatrix, Axis, Filter, Homography, PixelBuffer};
use crate::seed;

pub use noise::{noise_alpha_blend, noise_field, NoiseField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpName {
    LinearContrast,
    FrequencyNoiseAlpha,
    AddToHueAndSaturation,
    Multiply,
    PerspectiveTransform,
    Cutout,
    Affine,
    Flip,
    Sharpen,
    Emboss,
    SimplexNoiseAlpha,
    AdditiveGaussianNoise,
    CoarseDropout,
    GaussianBlur,
    MedianBlur,
    // chained-mixing operators
    Autocontrast,
    Equalize,
    Posterize,
    Solarize,
    Color,
    Contrast,
    Brightness,
    Sharpness,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpKind {
    Photometric,
    Geometric,
    Occlusion,
}

impl OpName {
    pub fn kind(self) -> OpKind {
        use OpName::*;
        match self {
            PerspectiveTransform | Affine | Flip => OpKind::Geometric,
            Cutout | CoarseDropout => OpKind::Occlusion,
            _ => OpKind::Photometric,
        }
    }

    pub fn as_str(self) -> &'static str {
        use OpName::*;
        match self {
            LinearContrast => "linear_contrast",
            FrequencyNoiseAlpha => "frequency_noise_alpha",
            AddToHueAndSaturation => "add_to_hue_and_saturation",
            Multiply => "multiply",
            PerspectiveTransform => "perspective_transform",
            Cutout => "cutout",
            Affine => "affine",
            Flip => "flip",
            Sharpen => "sharpen",
            Emboss => "emboss",
            SimplexNoiseAlpha => "simplex_noise_alpha",
            AdditiveGaussianNoise => "additive_gaussian_noise",
            CoarseDropout => "coarse_dropout",
            GaussianBlur => "gaussian_blur",
            MedianBlur => "median_blur",
            Autocontrast => "autocontrast",
            Equalize => "equalize",
            Posterize => "posterize",
            Solarize => "solarize",
            Color => "color",
            Contrast => "contrast",
            Brightness => "brightness",
            Sharpness => "sharpness",
        }
    }
}

impl std::fmt::Display for OpName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Legal range of one parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ParamRange {
    Uniform { lo: f64, hi: f64 },
    Integer { lo: i64, hi: i64 },
    Choice { values: Vec<f64> },
}

impl ParamRange {
    pub fn contains(&self, v: f64) -> bool {
        match self {
            ParamRange::Uniform { lo, hi } => v >= *lo && v <= *hi,
            ParamRange::Integer { lo, hi } => v.fract() == 0.0 && v >= *lo as f64 && v <= *hi as f64,
            ParamRange::Choice { values } => values.contains(&v),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self {
            ParamRange::Uniform { lo, hi } => lo.is_finite() && hi.is_finite() && lo <= hi,
            ParamRange::Integer { lo, hi } => lo <= hi,
            ParamRange::Choice { values } => !values.is_empty() && values.iter().all(|v| v.is_finite()),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("malformed parameter range {self:?}")))
        }
    }

    fn sample(&self, rng: &mut impl Rng) -> f64 {
        match self {
            ParamRange::Uniform { lo, hi } if lo == hi => *lo,
            ParamRange::Uniform { lo, hi } => rng.random_range(*lo..=*hi),
            ParamRange::Integer { lo, hi } => rng.random_range(*lo..=*hi) as f64,
            ParamRange::Choice { values } => values[rng.random_range(0..values.len())],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpDescriptor {
    pub name: OpName,
    pub params: BTreeMap<String, ParamRange>,
}

impl OpDescriptor {
    fn new(name: OpName, params: &[(&str, ParamRange)]) -> Self {
        Self {
            name,
            params: params
                .iter()
                .map(|(k, r)| (k.to_string(), r.clone()))
                .collect(),
        }
    }

    pub fn kind(&self) -> OpKind {
        self.name.kind()
    }

    pub fn validate(&self) -> Result<()> {
        for (k, r) in &self.params {
            r.validate().map_err(|e| Error::invalid(format!("{}.{k}: {e}", self.name)))?;
        }
        Ok(())
    }
}

fn uniform(lo: f64, hi: f64) -> ParamRange {
    ParamRange::Uniform { lo, hi }
}

fn integer(lo: i64, hi: i64) -> ParamRange {
    ParamRange::Integer { lo, hi }
}

fn choice(values: &[f64]) -> ParamRange {
    ParamRange::Choice {
        values: values.to_vec(),
    }
}

const NOISE_SEED_MAX: i64 = u32::MAX as i64;

/// The fifteen background/foreground pool operators with their default ranges.
pub fn catalog_background() -> Vec<OpDescriptor> {
    use OpName::*;
    let corner = |k: &'static str| (k, uniform(-0.1, 0.1));
    vec![
        OpDescriptor::new(LinearContrast, &[("gain", uniform(0.6, 1.4))]),
        OpDescriptor::new(
            FrequencyNoiseAlpha,
            &[
                ("scale", uniform(4.0, 16.0)),
                ("gain", uniform(0.5, 1.5)),
                ("seed", integer(0, NOISE_SEED_MAX)),
            ],
        ),
        OpDescriptor::new(
            AddToHueAndSaturation,
            &[("hue", uniform(-18.0, 18.0)), ("saturation", uniform(-36.0, 36.0))],
        ),
        OpDescriptor::new(Multiply, &[("factor", uniform(0.7, 1.3))]),
        OpDescriptor::new(
            PerspectiveTransform,
            &[
                corner("dx0"),
                corner("dy0"),
                corner("dx1"),
                corner("dy1"),
                corner("dx2"),
                corner("dy2"),
                corner("dx3"),
                corner("dy3"),
            ],
        ),
        OpDescriptor::new(
            Cutout,
            &[
                ("count", integer(1, 3)),
                // side fraction; 0.44² keeps every rectangle under 20% of the area
                ("size", uniform(0.1, 0.44)),
                ("fill", integer(0, 255)),
            ],
        ),
        OpDescriptor::new(
            Affine,
            &[
                ("rotate", uniform(-25.0, 25.0)),
                ("scale", uniform(0.7, 1.3)),
                ("translate_x", uniform(-0.1, 0.1)),
                ("translate_y", uniform(-0.1, 0.1)),
                ("shear", uniform(-8.0, 8.0)),
            ],
        ),
        OpDescriptor::new(Flip, &[("axis", choice(&[0.0, 1.0]))]),
        OpDescriptor::new(Sharpen, &[("strength", uniform(0.0, 1.0))]),
        OpDescriptor::new(Emboss, &[("strength", uniform(0.0, 1.0))]),
        OpDescriptor::new(
            SimplexNoiseAlpha,
            &[
                ("scale", uniform(16.0, 64.0)),
                ("gain", uniform(0.5, 1.5)),
                ("seed", integer(0, NOISE_SEED_MAX)),
            ],
        ),
        OpDescriptor::new(
            AdditiveGaussianNoise,
            &[("sigma", uniform(0.0, 12.0)), ("seed", integer(0, NOISE_SEED_MAX))],
        ),
        OpDescriptor::new(
            CoarseDropout,
            &[("fraction", uniform(0.02, 0.25)), ("block", integer(4, 16))],
        ),
        OpDescriptor::new(GaussianBlur, &[("sigma", uniform(0.5, 3.0))]),
        OpDescriptor::new(MedianBlur, &[("kernel", choice(&[3.0, 5.0]))]),
    ]
}

/// Foreground cutouts get the same operators as the background.
pub fn catalog_foreground() -> Vec<OpDescriptor> {
    catalog_background()
}

pub fn catalog_augmix_soft() -> Vec<OpDescriptor> {
    use OpName::*;
    vec![
        OpDescriptor::new(Autocontrast, &[]),
        OpDescriptor::new(Equalize, &[]),
        OpDescriptor::new(Posterize, &[("bits", integer(2, 5))]),
        OpDescriptor::new(Solarize, &[("threshold", integer(128, 256))]),
    ]
}

pub fn catalog_augmix_hard() -> Vec<OpDescriptor> {
    use OpName::*;
    let mut ops = catalog_augmix_soft();
    for name in [Color, Contrast, Brightness, Sharpness] {
        ops.push(OpDescriptor::new(name, &[("factor", uniform(0.5, 1.5))]));
    }
    ops
}

/// One fully parameterized operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AugOpInstance {
    pub name: OpName,
    pub params: BTreeMap<String, f64>,
}

impl AugOpInstance {
    pub fn new(name: OpName, params: &[(&str, f64)]) -> Self {
        Self {
            name,
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }

    pub fn kind(&self) -> OpKind {
        self.name.kind()
    }

    pub fn param(&self, key: &str) -> Result<f64> {
        self.params
            .get(key)
            .copied()
            .filter(|v| v.is_finite())
            .ok_or_else(|| Error::invalid(format!("{} is missing parameter `{key}`", self.name)))
    }

    fn int_param(&self, key: &str) -> Result<u32> {
        let v = self.param(key)?;
        if v < 0.0 || v.fract() != 0.0 || v > u32::MAX as f64 {
            return Err(Error::invalid(format!("{}.{key} must be a nonnegative integer, got {v}", self.name)));
        }
        Ok(v as u32)
    }

    /// Whether every parameter lies within `desc`'s declared range.
    pub fn within(&self, desc: &OpDescriptor) -> bool {
        desc.name == self.name
            && desc.params.len() == self.params.len()
            && desc
                .params
                .iter()
                .all(|(k, r)| self.params.get(k).is_some_and(|&v| r.contains(v)))
    }
}

/// Ordered operator list plus the seed it was drawn from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AugPlan {
    pub seed: u64,
    pub ops: Vec<AugOpInstance>,
}

impl AugPlan {
    pub fn identity(seed: u64) -> Self {
        Self { seed, ops: Vec::new() }
    }

    /// Seed handed to the occlusion op at position `i`.
    pub fn op_seed(&self, i: usize) -> u64 {
        seed::derive(seed::derive(self.seed, seed::domain::PLAN_OP), i as u64)
    }
}

/// Draw a plan of `count_range.0..=count_range.1` operators, chosen uniformly
/// with replacement from `catalog`.
pub fn sample_plan(rng_seed: u64, catalog: &[OpDescriptor], count_range: (usize, usize)) -> Result<AugPlan> {
    let (lo, hi) = count_range;
    if catalog.is_empty() {
        return Err(Error::invalid("cannot sample from an empty catalog"));
    }
    if lo < 1 || hi < lo {
        return Err(Error::invalid(format!("bad op count range [{lo}, {hi}]")));
    }
    let mut rng = seed::rng(rng_seed);
    let len = rng.random_range(lo..=hi);
    let ops = (0..len)
        .map(|_| {
            let desc = &catalog[rng.random_range(0..catalog.len())];
            AugOpInstance {
                name: desc.name,
                params: desc
                    .params
                    .iter()
                    .map(|(k, r)| (k.clone(), r.sample(&mut rng)))
                    .collect(),
            }
        })
        .collect();
    Ok(AugPlan { seed: rng_seed, ops })
}

fn require_kind(op: &AugOpInstance, kind: OpKind) -> Result<()> {
    if op.kind() != kind {
        return Err(Error::ContractViolation(format!(
            "{} is {:?}, expected {:?}",
            op.name,
            op.kind(),
            kind
        )));
    }
    Ok(())
}

pub fn apply_photometric(op: &AugOpInstance, img: &PixelBuffer) -> Result<PixelBuffer> {
    use photometric as p;
    use OpName::*;
    require_kind(op, OpKind::Photometric)?;
    if !matches!(img.channels(), 3 | 4) {
        return Err(Error::invalid(format!(
            "{} needs an RGB or RGBA image, got {} channel(s)",
            op.name,
            img.channels()
        )));
    }
    Ok(match op.name {
        LinearContrast => p::linear_contrast(img, op.param("gain")?),
        Multiply => p::multiply(img, op.param("factor")?),
        AddToHueAndSaturation => p::add_to_hue_and_saturation(img, op.param("hue")?, op.param("saturation")?),
        FrequencyNoiseAlpha | SimplexNoiseAlpha => {
            let field = noise_field(
                img.width(),
                img.height(),
                op.param("scale")?,
                op.int_param("seed")? as u64,
            )?;
            let overlay = p::multiply(img, op.param("gain")?);
            noise_alpha_blend(img, &overlay, &field)?
        }
        Sharpen => p::sharpen(img, op.param("strength")?.clamp(0.0, 1.0)),
        Emboss => p::emboss(img, op.param("strength")?.clamp(0.0, 1.0)),
        AdditiveGaussianNoise => {
            p::additive_gaussian_noise(img, op.param("sigma")?, op.int_param("seed")? as u64)
        }
        GaussianBlur => p::gaussian_blur(img, op.param("sigma")?),
        MedianBlur => {
            let k = op.int_param("kernel")?;
            if k % 2 == 0 {
                return Err(Error::invalid(format!("median kernel must be odd, got {k}")));
            }
            p::median_blur(img, k)
        }
        Autocontrast => p::autocontrast(img),
        Equalize => p::equalize(img),
        Posterize => p::posterize(img, op.int_param("bits")?),
        Solarize => p::solarize(img, op.int_param("threshold")?),
        Color => p::color(img, op.param("factor")?),
        Contrast => p::contrast(img, op.param("factor")?),
        Brightness => p::brightness(img, op.param("factor")?),
        Sharpness => p::sharpness(img, op.param("factor")?),
        PerspectiveTransform | Affine | Flip | Cutout | CoarseDropout => unreachable!(),
    })
}

/// Inverse coordinate map of a geometric op on a `w`×`h` image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GeometricMap {
    Mirror(Axis),
    Affine(AffineMatrix),
    Perspective(Homography),
}

impl GeometricMap {
    pub fn of(op: &AugOpInstance, w: u32, h: u32) -> Result<Self> {
        require_kind(op, OpKind::Geometric)?;
        let (wf, hf) = (w as f64, h as f64);
        Ok(match op.name {
            OpName::Flip => {
                let axis = if op.param("axis")? == 0.0 {
                    Axis::Horizontal
                } else {
                    Axis::Vertical
                };
                GeometricMap::Mirror(axis)
            }
            OpName::Affine => GeometricMap::Affine(AffineMatrix::about_center(
                w,
                h,
                op.param("rotate")?,
                op.param("scale")?,
                op.param("shear")?,
                op.param("translate_x")? * wf,
                op.param("translate_y")? * hf,
            )?),
            OpName::PerspectiveTransform => {
                let corners = [(0.0, 0.0), (wf, 0.0), (wf, hf), (0.0, hf)];
                let mut moved = corners;
                for (i, c) in moved.iter_mut().enumerate() {
                    c.0 += op.param(&format!("dx{i}"))? * wf;
                    c.1 += op.param(&format!("dy{i}"))? * hf;
                }
                if moved == corners {
                    GeometricMap::Affine(AffineMatrix::IDENTITY)
                } else {
                    // output → input: map the displaced corners back onto the originals
                    GeometricMap::Perspective(Homography::from_points(moved, corners)?)
                }
            }
            _ => unreachable!(),
        })
    }

    pub fn warp(&self, img: &PixelBuffer, filter: Filter, fill: u8) -> Result<PixelBuffer> {
        match self {
            GeometricMap::Mirror(axis) => Ok(imgcore::flip(img, *axis)),
            GeometricMap::Affine(m) => imgcore::warp_affine(img, m, filter, fill),
            GeometricMap::Perspective(h) => imgcore::warp_perspective(img, h, filter, fill),
        }
    }
}

/// Geometric op on an image without a mask (background pool).
pub fn apply_geometric(op: &AugOpInstance, img: &PixelBuffer) -> Result<PixelBuffer> {
    GeometricMap::of(op, img.width(), img.height())?.warp(img, Filter::Bilinear, 0)
}

/// Same geometric transform on image (bilinear) and mask (nearest, fill 0).
pub fn apply_geometric_joint(
    op: &AugOpInstance,
    img: &PixelBuffer,
    mask: &PixelBuffer,
) -> Result<(PixelBuffer, PixelBuffer)> {
    require_kind(op, OpKind::Geometric)?;
    if !img.same_dims(mask) {
        return Err(Error::invalid(format!(
            "image {:?} and mask {:?} differ in size",
            img.dims(),
            mask.dims()
        )));
    }
    if mask.channels() != 1 {
        return Err(Error::invalid("mask must have exactly one channel"));
    }
    let map = GeometricMap::of(op, img.width(), img.height())?;
    Ok((map.warp(img, Filter::Bilinear, 0)?, map.warp(mask, Filter::Nearest, 0)?))
}

pub fn apply_occlusion(op: &AugOpInstance, img: &PixelBuffer, rng_seed: u64) -> Result<PixelBuffer> {
    require_kind(op, OpKind::Occlusion)?;
    Ok(match op.name {
        OpName::Cutout => {
            let fill = op.int_param("fill")?.min(255) as u8;
            occlusion::cutout(img, op.int_param("count")?, op.param("size")?, fill, rng_seed)
        }
        OpName::CoarseDropout => occlusion::coarse_dropout(
            img,
            op.param("fraction")?,
            op.int_param("block")?,
            rng_seed,
        ),
        _ => unreachable!(),
    })
}

/// Replay `plan` on an image that has no mask.
pub fn apply_plan(plan: &AugPlan, img: &PixelBuffer) -> Result<PixelBuffer> {
    let mut cur = img.clone();
    for (i, op) in plan.ops.iter().enumerate() {
        cur = match op.kind() {
            OpKind::Photometric => apply_photometric(op, &cur)?,
            OpKind::Geometric => apply_geometric(op, &cur)?,
            OpKind::Occlusion => apply_occlusion(op, &cur, plan.op_seed(i))?,
        };
    }
    Ok(cur)
}

/// Replay `plan` on an image and its mask. Only geometric ops move the mask.
pub fn apply_plan_joint(
    plan: &AugPlan,
    img: &PixelBuffer,
    mask: &PixelBuffer,
) -> Result<(PixelBuffer, PixelBuffer)> {
    let mut cur = (img.clone(), mask.clone());
    for (i, op) in plan.ops.iter().enumerate() {
        cur = match op.kind() {
            OpKind::Photometric => (apply_photometric(op, &cur.0)?, cur.1),
            OpKind::Geometric => apply_geometric_joint(op, &cur.0, &cur.1)?,
            OpKind::Occlusion => (apply_occlusion(op, &cur.0, plan.op_seed(i))?, cur.1),
        };
    }
    Ok(cur)
}
