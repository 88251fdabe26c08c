//! Procedural stand-ins for real seed images: a tissue-like background and
//! instrument-like RGBA cutouts, one silhouette family per class.
//!
//! Useful for smoke runs, tests and the `demo-assets` command when no
//! annotated frames are at hand.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::augops::noise_field;
use crate::composer::{ClassRegistry, SeedAsset, INSTRUMENT_CLASSES};
use crate::error::{Error, Result};
use crate::imgcore::{quantize, PixelBuffer};
use crate::manifest::write_png;
use crate::seed;

/// Classes appended by the class-incremental workflow.
pub const NOVEL_CLASSES: [&str; 2] = ["Vessel Sealer", "Grasping Retractor"];

pub const BACKGROUND_ID: &str = "background.png";
const BG_SIZE: (u32, u32) = (640, 512);
const CUTOUT_SIZE: u32 = 384;
/// Head and shaft dimensions are authored at this fraction of final size.
const GEOMETRY_SCALE: f64 = 3.6;

pub fn tissue_background(w: u32, h: u32, seed: u64) -> Result<PixelBuffer> {
    let coarse = noise_field(w, h, 96.0, seed::derive(seed, 1))?;
    let fine = noise_field(w, h, 18.0, seed::derive(seed, 2))?;
    PixelBuffer::from_fn(w, h, 3, |x, y, c| {
        let (v, f) = (coarse.at(x, y), fine.at(x, y));
        let glare = if f > 0.88 { (f - 0.88) * 900.0 } else { 0.0 };
        let base = match c {
            0 => 120.0 + 90.0 * v + 25.0 * f,
            1 => 35.0 + 45.0 * v + 15.0 * f,
            _ => 40.0 + 35.0 * v + 10.0 * f,
        };
        quantize(base + glare)
    })
}

#[derive(Clone, Copy)]
struct Seg {
    a: (f64, f64),
    b: (f64, f64),
    r: f64,
}

impl Seg {
    fn dist(&self, p: (f64, f64)) -> f64 {
        let (dx, dy) = (self.b.0 - self.a.0, self.b.1 - self.a.1);
        let len2 = dx * dx + dy * dy;
        let t = if len2 > 0.0 {
            (((p.0 - self.a.0) * dx + (p.1 - self.a.1) * dy) / len2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let (cx, cy) = (self.a.0 + t * dx, self.a.1 + t * dy);
        ((p.0 - cx).powi(2) + (p.1 - cy).powi(2)).sqrt() - self.r
    }
}

enum Part {
    Shaft(Seg),
    Metal(Seg),
    /// Removed from the union (fenestrations, notches).
    Hole(Seg),
}

/// Parts in a frame where the tip points along +x from the origin.
fn head(class_idx: usize, open: f64) -> Vec<Part> {
    let jaw = |len: f64, ang: f64, r: f64| Seg {
        a: (0.0, 0.0),
        b: (len * ang.cos(), len * ang.sin()),
        r,
    };
    let o = open;
    match class_idx {
        0 => vec![Part::Metal(jaw(26.0, o, 2.2)), Part::Metal(jaw(26.0, -o, 2.2))],
        1 => vec![
            Part::Metal(jaw(24.0, o, 4.0)),
            Part::Metal(jaw(24.0, -o, 4.0)),
            Part::Hole(Seg {
                a: (10.0 * o.cos(), 10.0 * o.sin()),
                b: (18.0 * o.cos(), 18.0 * o.sin()),
                r: 1.5,
            }),
            Part::Hole(Seg {
                a: (10.0 * o.cos(), -10.0 * o.sin()),
                b: (18.0 * o.cos(), -18.0 * o.sin()),
                r: 1.5,
            }),
        ],
        2 => vec![Part::Metal(jaw(22.0, o, 5.0)), Part::Metal(jaw(22.0, -o, 5.0))],
        3 => vec![
            Part::Metal(jaw(14.0, 0.5 * o, 4.5)),
            Part::Metal(jaw(14.0, -0.5 * o, 4.5)),
            Part::Metal(Seg {
                a: (-6.0, 0.0),
                b: (2.0, 0.0),
                r: 7.0,
            }),
        ],
        4 => vec![
            Part::Metal(Seg {
                a: (0.0, 0.0),
                b: (16.0, 6.0 + 10.0 * o),
                r: 2.6,
            }),
            Part::Metal(Seg {
                a: (0.0, 0.0),
                b: (18.0, 2.0 - 6.0 * o),
                r: 2.6,
            }),
        ],
        5 => vec![Part::Metal(Seg {
            a: (0.0, 0.0),
            b: (22.0, 0.0),
            r: 9.0,
        })],
        6 => vec![
            Part::Metal(Seg {
                a: (0.0, 0.0),
                b: (20.0, 0.0),
                r: 6.5,
            }),
            Part::Hole(Seg {
                a: (14.0, 0.0),
                b: (30.0, 0.0),
                r: 1.8 + 2.0 * o,
            }),
        ],
        7 => vec![Part::Metal(Seg {
            a: (0.0, 0.0),
            b: (12.0, 0.0),
            r: 4.0,
        })],
        8 => vec![
            Part::Metal(Seg {
                a: (0.0, 0.0),
                b: (30.0, 2.0 * o),
                r: 3.5,
            }),
            Part::Metal(Seg {
                a: (0.0, 0.0),
                b: (30.0, -2.0 * o - 6.0),
                r: 3.5,
            }),
        ],
        _ => (0..3)
            .map(|k| Part::Metal(jaw(20.0, (k as f64 - 1.0) * (0.35 + o), 2.4)))
            .collect(),
    }
}

/// RGBA instrument cutout: dark shaft entering from the frame edge, metallic
/// head whose shape depends on the class. `variant` changes pose and jaw opening.
pub fn instrument_cutout(class_idx: usize, variant: usize) -> Result<PixelBuffer> {
    let s = CUTOUT_SIZE as f64;
    let jitter = |k: u64| {
        let v = seed::fmix(seed::derive(class_idx as u64 * 1000 + variant as u64, k));
        (v >> 11) as f64 / (1u64 << 53) as f64
    };
    let angle = -0.6 + 1.2 * jitter(1) + std::f64::consts::PI * 0.25;
    let open = 0.15 + 0.35 * jitter(2);
    let shaft_r = 5.0 + 2.0 * jitter(3);
    let (ca, sa) = (angle.cos(), angle.sin());
    let tip = (s * 0.62, s * 0.62);
    let to_frame = |p: (f64, f64)| (tip.0 + p.0 * ca - p.1 * sa, tip.1 + p.0 * sa + p.1 * ca);
    let k = GEOMETRY_SCALE;
    let place = |seg: Seg| Seg {
        a: to_frame((seg.a.0 * k, seg.a.1 * k)),
        b: to_frame((seg.b.0 * k, seg.b.1 * k)),
        r: seg.r * k,
    };
    let mut parts: Vec<Part> = vec![Part::Shaft(place(Seg {
        a: (-s, 0.0),
        b: (-4.0, 0.0),
        r: shaft_r,
    }))];
    for p in head(class_idx, open) {
        parts.push(match p {
            Part::Shaft(g) => Part::Shaft(place(g)),
            Part::Metal(g) => Part::Metal(place(g)),
            Part::Hole(g) => Part::Hole(place(g)),
        });
    }
    let shade = 0.6 + 0.4 * jitter(4);
    PixelBuffer::from_fn(CUTOUT_SIZE, CUTOUT_SIZE, 4, |x, y, c| {
        let p = (x as f64 + 0.5, y as f64 + 0.5);
        if parts.iter().any(|q| matches!(q, Part::Hole(g) if g.dist(p) < 0.0)) {
            return 0;
        }
        let mut hit: Option<(bool, f64)> = None;
        for q in &parts {
            let (metal, g) = match q {
                Part::Shaft(g) => (false, g),
                Part::Metal(g) => (true, g),
                Part::Hole(_) => continue,
            };
            let d = g.dist(p);
            if d < 0.0 {
                // depth into the part, 0 at the rim and 1 on the axis
                let depth = (-d / g.r).min(1.0);
                hit = Some((metal, depth));
            }
        }
        let Some((metal, depth)) = hit else {
            return 0;
        };
        if c == 3 {
            return 255;
        }
        let light = 0.55 + 0.45 * depth;
        let v = if metal {
            [200.0, 205.0, 212.0][c] * light * shade + 30.0
        } else {
            [38.0, 40.0, 46.0][c] * light + 10.0 * depth
        };
        quantize(v)
    })
}

fn slug(name: &str) -> String {
    name.to_ascii_lowercase()
        .split(|c: char| !c.is_ascii_alphanumeric())
        .filter(|s| !s.is_empty())
        .collect::<Vec<_>>()
        .join("_")
}

pub fn foreground_id(class_name: &str, k: usize) -> String {
    format!("fg/{}_{k}.png", slug(class_name))
}

/// In-memory seed set with its registry.
pub struct DemoKit {
    pub background: SeedAsset,
    pub foreground: HashMap<String, PixelBuffer>,
    pub registry: ClassRegistry,
}

/// Background plus `seeds_per_class` cutouts for each of the eight instrument
/// classes, and for the two novel classes when `novel` is set (ids 9 and 10).
pub fn demo_kit(seeds_per_class: usize, novel: bool) -> Result<DemoKit> {
    if seeds_per_class == 0 {
        return Err(Error::invalid("seeds_per_class must be at least 1"));
    }
    let mut names: Vec<&str> = INSTRUMENT_CLASSES.to_vec();
    if novel {
        names.extend(NOVEL_CLASSES);
    }
    let mut foreground = HashMap::new();
    let mut classes = Vec::new();
    for (i, name) in names.iter().enumerate() {
        let mut ids = Vec::new();
        for k in 0..seeds_per_class {
            let id = foreground_id(name, k);
            foreground.insert(id.clone(), instrument_cutout(i, k)?);
            ids.push(id);
        }
        classes.push((name.to_string(), ids));
    }
    let (base, extra) = classes.split_at(INSTRUMENT_CLASSES.len());
    let registry = ClassRegistry::new(base.to_vec())?.extend(extra.to_vec())?;
    Ok(DemoKit {
        background: SeedAsset {
            id: BACKGROUND_ID.into(),
            image: tissue_background(BG_SIZE.0, BG_SIZE.1, 0x0071_550E)?,
        },
        foreground,
        registry,
    })
}

/// Write a kit's images under `dir`, at paths equal to their asset ids.
pub fn write_kit(dir: &Path, kit: &DemoKit) -> Result<()> {
    let fg_dir = dir.join("fg");
    fs::create_dir_all(&fg_dir).map_err(|e| Error::io(&fg_dir, e))?;
    write_png(&dir.join(&kit.background.id), &kit.background.image)?;
    let mut ids: Vec<&String> = kit.foreground.keys().collect();
    ids.sort();
    for id in ids {
        write_png(&dir.join(id), &kit.foreground[id])?;
    }
    Ok(())
}
