//! Convex mixing of an image with chained photometric augmentations.
//!
//! ```text
//! out = m · x + (1 − m) · Σᵢ wᵢ · Hᵢ(x)
//! m ~ Beta(α, α),  w ~ Dirichlet(β, …, β)
//! ```
//!
//! Each chain `Hᵢ` is a short [`AugPlan`] drawn from the soft or hard operator
//! set. Chains only contain photometric operators, so label masks are never
//! involved.

use rand::Rng;
use rand_distr::{Beta, Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::augops::{self, AugPlan, OpDescriptor, OpKind};
use crate::error::{Error, Result};
use crate::imgcore::{quantize, PixelBuffer};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpSet {
    #[default]
    None,
    Soft,
    Hard,
}

impl OpSet {
    pub fn catalog(self) -> Option<Vec<OpDescriptor>> {
        match self {
            OpSet::None => None,
            OpSet::Soft => Some(augops::catalog_augmix_soft()),
            OpSet::Hard => Some(augops::catalog_augmix_hard()),
        }
    }
}

impl std::str::FromStr for OpSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(OpSet::None),
            "soft" => Ok(OpSet::Soft),
            "hard" => Ok(OpSet::Hard),
            other => Err(Error::invalid(format!("unknown augmix set `{other}` (none|soft|hard)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MixConfig {
    pub n_chains: usize,
    pub depth_choices: Vec<usize>,
    pub op_set: OpSet,
    pub beta_alpha: f64,
    pub dirichlet_alpha: f64,
}

impl Default for MixConfig {
    fn default() -> Self {
        Self {
            n_chains: 3,
            depth_choices: vec![1, 2, 3],
            op_set: OpSet::None,
            beta_alpha: 1.0,
            dirichlet_alpha: 1.0,
        }
    }
}

impl MixConfig {
    pub fn with_set(op_set: OpSet) -> Self {
        Self {
            op_set,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_chains == 0 {
            return Err(Error::invalid("augmix needs at least one chain"));
        }
        if self.depth_choices.is_empty() || self.depth_choices.contains(&0) {
            return Err(Error::invalid("augmix depth choices must be nonempty and positive"));
        }
        for (name, v) in [("beta_alpha", self.beta_alpha), ("dirichlet_alpha", self.dirichlet_alpha)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("augmix {name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// One realized mixing draw; recorded in the manifest so a trainer can replay it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixDraw {
    pub m: f64,
    pub weights: Vec<f64>,
    pub chains: Vec<AugPlan>,
}

pub fn sample_mix(rng_seed: u64, cfg: &MixConfig) -> Result<MixDraw> {
    cfg.validate()?;
    let catalog = cfg
        .op_set
        .catalog()
        .ok_or_else(|| Error::invalid("augmix op set is `none`; skip mixing instead"))?;
    let mut rng = seed::rng(rng_seed);
    let beta = Beta::new(cfg.beta_alpha, cfg.beta_alpha).map_err(|e| Error::invalid(e.to_string()))?;
    let m = beta.sample(&mut rng).clamp(0.0, 1.0);
    let gamma = Gamma::new(cfg.dirichlet_alpha, 1.0).map_err(|e| Error::invalid(e.to_string()))?;
    let mut weights: Vec<f64> = (0..cfg.n_chains).map(|_| gamma.sample(&mut rng)).collect();
    let total: f64 = weights.iter().sum();
    if total > 0.0 {
        weights.iter_mut().for_each(|w| *w /= total);
    } else {
        weights.fill(1.0 / cfg.n_chains as f64);
    }
    let chains = (0..cfg.n_chains)
        .map(|_| {
            let depth = cfg.depth_choices[rng.random_range(0..cfg.depth_choices.len())];
            augops::sample_plan(rng.random(), &catalog, (depth, depth))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MixDraw { m, weights, chains })
}

impl MixDraw {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.m) {
            return Err(Error::invalid(format!("mix coefficient {} outside [0, 1]", self.m)));
        }
        if self.weights.len() != self.chains.len() || self.chains.is_empty() {
            return Err(Error::invalid("mix draw needs one weight per chain"));
        }
        let sum: f64 = self.weights.iter().sum();
        if self.weights.iter().any(|&w| !(w >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("chain weights must be nonnegative and sum to 1 (sum {sum})")));
        }
        for op in self.chains.iter().flat_map(|c| &c.ops) {
            if op.kind() != OpKind::Photometric {
                return Err(Error::ContractViolation(format!("{} is not photometric", op.name)));
            }
        }
        Ok(())
    }

    /// Run every chain on `img`.
    pub fn chain_outputs(&self, img: &PixelBuffer) -> Result<Vec<PixelBuffer>> {
        self.chains.iter().map(|c| augops::apply_plan(c, img)).collect()
    }
}

pub fn mix_apply(scene_img: &PixelBuffer, draw: &MixDraw) -> Result<PixelBuffer> {
    if scene_img.channels() != 3 {
        return Err(Error::invalid("augmix expects an RGB scene image"));
    }
    draw.validate()?;
    let outputs = draw.chain_outputs(scene_img)?;
    let mut acc = vec![0.0f64; scene_img.data().len()];
    for (w, out) in draw.weights.iter().zip(&outputs) {
        for (a, &v) in acc.iter_mut().zip(out.data()) {
            *a += w * v as f64;
        }
    }
    let m = draw.m;
    let data = scene_img
        .data()
        .iter()
        .zip(&acc)
        .map(|(&x, &mixed)| quantize(m * x as f64 + (1.0 - m) * mixed))
        .collect();
    PixelBuffer::new(scene_img.width(), scene_img.height(), 3, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::augops::{AugOpInstance, OpName};

    fn photo() -> PixelBuffer {
        PixelBuffer::from_fn(32, 32, 3, |x, y, c| ((x * 8 + y * 3 + c as u32 * 60) % 256) as u8).unwrap()
    }

    #[test]
    fn none_set_is_an_error() {
        assert!(sample_mix(1, &MixConfig::default()).is_err());
    }

    #[test]
    fn draws_are_deterministic_and_convex() {
        let cfg = MixConfig::with_set(OpSet::Hard);
        for s in 0..200 {
            let d = sample_mix(s, &cfg).unwrap();
            assert_eq!(d, sample_mix(s, &cfg).unwrap());
            d.validate().unwrap();
            assert_eq!(d.chains.len(), 3);
            assert!(d.chains.iter().all(|c| (1..=3).contains(&c.ops.len())));
        }
    }

    #[test]
    fn m_one_returns_input() {
        let img = photo();
        let mut d = sample_mix(3, &MixConfig::with_set(OpSet::Hard)).unwrap();
        d.m = 1.0;
        assert_eq!(mix_apply(&img, &d).unwrap(), img);
    }

    #[test]
    fn m_zero_autocontrast_on_full_range() {
        let img = PixelBuffer::from_fn(16, 16, 3, |x, y, _| (y * 16 + x) as u8).unwrap();
        let d = MixDraw {
            m: 0.0,
            weights: vec![1.0],
            chains: vec![AugPlan {
                seed: 0,
                ops: vec![AugOpInstance::new(OpName::Autocontrast, &[])],
            }],
        };
        assert_eq!(mix_apply(&img, &d).unwrap(), img);
    }

    #[test]
    fn rejects_bad_draws() {
        let img = photo();
        let geometric = MixDraw {
            m: 0.5,
            weights: vec![1.0],
            chains: vec![AugPlan {
                seed: 0,
                ops: vec![AugOpInstance::new(OpName::Flip, &[("axis", 0.0)])],
            }],
        };
        assert!(mix_apply(&img, &geometric).is_err());
        let unnormalized = MixDraw {
            m: 0.5,
            weights: vec![0.7],
            chains: vec![AugPlan::identity(0)],
        };
        assert!(mix_apply(&img, &unnormalized).is_err());
        let rgba = PixelBuffer::filled(4, 4, 4, 1).unwrap();
        let ok = MixDraw {
            m: 0.5,
            weights: vec![1.0],
            chains: vec![AugPlan::identity(0)],
        };
        assert!(mix_apply(&rgba, &ok).is_err());
    }

    #[test]
    fn config_validation() {
        let mut cfg = MixConfig::with_set(OpSet::Soft);
        cfg.beta_alpha = 0.0;
        assert!(cfg.validate().is_err());
        cfg.beta_alpha = 1.0;
        cfg.n_chains = 0;
        assert!(cfg.validate().is_err());
    }
}
