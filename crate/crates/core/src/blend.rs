//! Hard-alpha copy-paste compositing.
//!
//! A foreground cutout is rendered onto the background through an inverse
//! nearest-neighbour map, so every output pixel is bit-equal to either the
//! background pixel or one source pixel of a cutout. The label mask receives
//! the cutout's class id exactly where its binarized alpha lands.

use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgcore::{self, PixelBuffer};
use crate::seed;

/// Alpha values at or above this count as opaque.
pub const ALPHA_THRESHOLD: u8 = 128;
/// Minimum share of a cutout's silhouette that must land on the canvas.
pub const MIN_ON_CANVAS: f64 = 0.5;
/// Placement draws attempted before giving up.
pub const MAX_PLACEMENT_ATTEMPTS: usize = 100;
/// Scale factor range, relative to the scale that fits the cutout in the canvas.
pub const FIT_SCALE_RANGE: (f64, f64) = (0.5, 1.2);

/// RGBA cutout with a binarized (0/255) silhouette and a class id.
#[derive(Debug, Clone, PartialEq)]
pub struct ForegroundCutout {
    image: PixelBuffer,
    class_id: u8,
    source_asset: String,
    opaque: usize,
}

impl ForegroundCutout {
    /// Binarizes alpha at [`ALPHA_THRESHOLD`] and rejects empty silhouettes.
    pub fn new(image: PixelBuffer, class_id: u8, source_asset: impl Into<String>) -> Result<Self> {
        let source_asset = source_asset.into();
        if image.channels() != 4 {
            return Err(Error::Ingestion {
                asset: source_asset,
                reason: format!("foreground needs 4 channels (RGBA), got {}", image.channels()),
            });
        }
        if class_id == 0 {
            return Err(Error::invalid("class id 0 is reserved for background"));
        }
        let mut image = image;
        let mut opaque = 0;
        for px in image.data_mut().chunks_exact_mut(4) {
            px[3] = if px[3] >= ALPHA_THRESHOLD {
                opaque += 1;
                255
            } else {
                0
            };
        }
        if opaque == 0 {
            return Err(Error::Ingestion {
                asset: source_asset,
                reason: "alpha channel has no opaque pixels".into(),
            });
        }
        Ok(Self {
            image,
            class_id,
            source_asset,
            opaque,
        })
    }

    pub fn image(&self) -> &PixelBuffer {
        &self.image
    }

    pub fn class_id(&self) -> u8 {
        self.class_id
    }

    pub fn source_asset(&self) -> &str {
        &self.source_asset
    }

    /// Number of opaque pixels.
    pub fn opaque_count(&self) -> usize {
        self.opaque
    }

    /// Binarized alpha as a 0/255 mask.
    pub fn silhouette(&self) -> PixelBuffer {
        self.image.channel(3)
    }

    #[inline]
    fn is_opaque(&self, x: u32, y: u32) -> bool {
        self.image.get(x, y, 3) == 255
    }
}

/// Where and how a cutout lands on the canvas.
///
/// The cutout is scaled and rotated about its own center; that center is then
/// placed at the canvas center offset by `(tx, ty)` pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Placement {
    pub tx: f64,
    pub ty: f64,
    pub scale: f64,
    pub rotation: f64,
    pub z_order: i32,
}

impl Placement {
    pub fn identity() -> Self {
        Self {
            tx: 0.0,
            ty: 0.0,
            scale: 1.0,
            rotation: 0.0,
            z_order: 0,
        }
    }
}

/// Canvas ↔ cutout coordinate maps for one placement.
#[derive(Debug, Clone, Copy)]
struct PlacementMap {
    canvas_center: (f64, f64),
    cutout_center: (f64, f64),
    offset: (f64, f64),
    scale: f64,
    cos: f64,
    sin: f64,
}

impl PlacementMap {
    fn new(canvas: (u32, u32), cutout: (u32, u32), pl: &Placement) -> Result<Self> {
        if !(pl.scale > 0.0) || !pl.scale.is_finite() {
            return Err(Error::invalid(format!("placement scale must be positive, got {}", pl.scale)));
        }
        if !(pl.tx.is_finite() && pl.ty.is_finite() && pl.rotation.is_finite()) {
            return Err(Error::invalid("placement has non-finite fields"));
        }
        let (sin, cos) = pl.rotation.to_radians().sin_cos();
        Ok(Self {
            canvas_center: (canvas.0 as f64 / 2.0, canvas.1 as f64 / 2.0),
            cutout_center: (cutout.0 as f64 / 2.0, cutout.1 as f64 / 2.0),
            offset: (pl.tx, pl.ty),
            scale: pl.scale,
            cos,
            sin,
        })
    }

    /// Canvas point → cutout point.
    #[inline]
    fn to_cutout(&self, x: f64, y: f64) -> (f64, f64) {
        let dx = (x - self.canvas_center.0 - self.offset.0) / self.scale;
        let dy = (y - self.canvas_center.1 - self.offset.1) / self.scale;
        (
            self.cos * dx + self.sin * dy + self.cutout_center.0,
            -self.sin * dx + self.cos * dy + self.cutout_center.1,
        )
    }

    /// Cutout point → canvas point.
    #[inline]
    fn to_canvas(&self, u: f64, v: f64) -> (f64, f64) {
        let du = u - self.cutout_center.0;
        let dv = v - self.cutout_center.1;
        (
            self.scale * (self.cos * du - self.sin * dv) + self.canvas_center.0 + self.offset.0,
            self.scale * (self.sin * du + self.cos * dv) + self.canvas_center.1 + self.offset.1,
        )
    }
}

/// Share of the cutout's opaque pixels whose centers land inside the canvas.
pub fn on_canvas_fraction(canvas: (u32, u32), cutout: &ForegroundCutout, pl: &Placement) -> Result<f64> {
    let map = PlacementMap::new(canvas, cutout.image.dims(), pl)?;
    let (cw, ch) = (canvas.0 as f64, canvas.1 as f64);
    let (w, h) = cutout.image.dims();
    let mut inside = 0usize;
    for y in 0..h {
        for x in 0..w {
            if cutout.is_opaque(x, y) {
                let (px, py) = map.to_canvas(x as f64 + 0.5, y as f64 + 0.5);
                if px >= 0.0 && py >= 0.0 && px < cw && py < ch {
                    inside += 1;
                }
            }
        }
    }
    Ok(inside as f64 / cutout.opaque as f64)
}

/// Composited image, label mask and the set of visible classes.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    image: PixelBuffer,
    mask: PixelBuffer,
    classes_present: BTreeSet<u8>,
}

impl Scene {
    pub fn image(&self) -> &PixelBuffer {
        &self.image
    }

    pub fn mask(&self) -> &PixelBuffer {
        &self.mask
    }

    pub fn classes_present(&self) -> &BTreeSet<u8> {
        &self.classes_present
    }

    /// Replace the RGB image, e.g. after augmentation mixing. The mask is kept.
    pub fn with_image(self, image: PixelBuffer) -> Result<Self> {
        if image.dims() != self.image.dims() || image.channels() != 3 {
            return Err(Error::invalid("replacement image must match the scene's RGB dims"));
        }
        Ok(Self { image, ..self })
    }

    /// Rebuild a scene from stored rasters (e.g. files on disk).
    pub fn from_parts(image: PixelBuffer, mask: PixelBuffer) -> Result<Self> {
        if image.channels() != 3 || mask.channels() != 1 || !image.same_dims(&mask) {
            return Err(Error::invalid("scene needs an RGB image and a same-size 1-channel mask"));
        }
        let classes_present = mask_classes(&mask);
        if classes_present.is_empty() {
            return Err(Error::invalid("scene mask is empty"));
        }
        Ok(Self {
            image,
            mask,
            classes_present,
        })
    }

    pub fn into_parts(self) -> (PixelBuffer, PixelBuffer) {
        (self.image, self.mask)
    }
}

/// Distinct nonzero values of a label mask.
pub fn mask_classes(mask: &PixelBuffer) -> BTreeSet<u8> {
    let mut seen = [false; 256];
    for &v in mask.data() {
        seen[v as usize] = true;
    }
    (1..=255u8).filter(|&v| seen[v as usize]).collect()
}

/// Paste one cutout into `image`/`mask` in place.
fn composite(image: &mut PixelBuffer, mask: &mut PixelBuffer, fg: &ForegroundCutout, pl: &Placement) -> Result<()> {
    let fraction = on_canvas_fraction(image.dims(), fg, pl)?;
    if fraction < MIN_ON_CANVAS {
        return Err(Error::PlacementRejected { on_canvas: fraction });
    }
    let map = PlacementMap::new(image.dims(), fg.image.dims(), pl)?;
    let (fw, fh) = (fg.image.width() as f64, fg.image.height() as f64);
    let mut painted = 0usize;
    for y in 0..image.height() {
        for x in 0..image.width() {
            let (u, v) = map.to_cutout(x as f64 + 0.5, y as f64 + 0.5);
            if !(u >= 0.0 && v >= 0.0 && u < fw && v < fh) {
                continue;
            }
            let (ui, vi) = (u.floor() as u32, v.floor() as u32);
            if fg.is_opaque(ui, vi) {
                let src = fg.image.pixel(ui, vi);
                image.pixel_mut(x, y).copy_from_slice(&src[..3]);
                mask.pixel_mut(x, y)[0] = fg.class_id;
                painted += 1;
            }
        }
    }
    if painted == 0 {
        return Err(Error::PlacementRejected { on_canvas: 0.0 });
    }
    Ok(())
}

fn check_background(bg: &PixelBuffer) -> Result<()> {
    if bg.channels() != 3 {
        return Err(Error::invalid(format!("background must be RGB, got {} channels", bg.channels())));
    }
    Ok(())
}

pub fn blend_one(bg: &PixelBuffer, fg: &ForegroundCutout, pl: &Placement) -> Result<Scene> {
    check_background(bg)?;
    let mut image = bg.clone();
    let mut mask = PixelBuffer::filled(bg.width(), bg.height(), 1, 0)?;
    composite(&mut image, &mut mask, fg, pl)?;
    let classes_present = mask_classes(&mask);
    Ok(Scene {
        image,
        mask,
        classes_present,
    })
}

/// Two distinct classes, pasted in ascending `z_order` (ties keep argument order).
pub fn blend_two(bg: &PixelBuffer, fgs: [&ForegroundCutout; 2], pls: [&Placement; 2]) -> Result<Scene> {
    check_background(bg)?;
    if fgs[0].class_id == fgs[1].class_id {
        return Err(Error::invalid(format!(
            "two-instrument scenes need distinct classes, both are {}",
            fgs[0].class_id
        )));
    }
    let mut order = [0usize, 1];
    order.sort_by_key(|&i| pls[i].z_order);
    let mut image = bg.clone();
    let mut mask = PixelBuffer::filled(bg.width(), bg.height(), 1, 0)?;
    for i in order {
        composite(&mut image, &mut mask, fgs[i], pls[i])?;
    }
    let classes_present = mask_classes(&mask);
    Ok(Scene {
        image,
        mask,
        classes_present,
    })
}

/// Scale at which the cutout's bounding box just fits the canvas.
pub fn fit_scale(canvas: (u32, u32), cutout: &ForegroundCutout) -> f64 {
    let (w, h) = cutout.image.dims();
    (canvas.0 as f64 / w as f64).min(canvas.1 as f64 / h as f64)
}

/// Random placement obeying the on-canvas rule; rejection-sampled up to
/// [`MAX_PLACEMENT_ATTEMPTS`] times.
pub fn sample_placement(rng_seed: u64, canvas: (u32, u32), cutout: &ForegroundCutout) -> Result<Placement> {
    if canvas.0 == 0 || canvas.1 == 0 {
        return Err(Error::invalid("canvas has a zero side"));
    }
    let mut rng = seed::rng(rng_seed);
    let fit = fit_scale(canvas, cutout);
    let (hw, hh) = (canvas.0 as f64 / 2.0, canvas.1 as f64 / 2.0);
    let mut best = 0.0f64;
    for _ in 0..MAX_PLACEMENT_ATTEMPTS {
        let pl = Placement {
            scale: fit * rng.random_range(FIT_SCALE_RANGE.0..=FIT_SCALE_RANGE.1),
            rotation: rng.random_range(-180.0..=180.0),
            tx: rng.random_range(-hw..=hw),
            ty: rng.random_range(-hh..=hh),
            z_order: 0,
        };
        let f = on_canvas_fraction(canvas, cutout, &pl)?;
        if f >= MIN_ON_CANVAS {
            return Ok(pl);
        }
        best = best.max(f);
    }
    Err(Error::Generation {
        index: usize::MAX,
        reason: format!(
            "no placement kept half the silhouette on canvas in {MAX_PLACEMENT_ATTEMPTS} attempts (best {best:.3})"
        ),
    })
}

/// Crop a cutout to its silhouette and pad it to a square large enough to
/// rotate without clipping.
pub fn prepare_cutout(cutout: &ForegroundCutout) -> Result<ForegroundCutout> {
    let img = cutout.image();
    let (x0, y0, w, h) = imgcore::bounding_box(img, 3, |a| a == 255)
        .expect("cutout invariant: silhouette is nonempty");
    let cropped = img.crop(x0, y0, w, h)?;
    let side = ((w as f64).hypot(h as f64).ceil() as u32).max(w).max(h) + 2;
    let padded = cropped.pad_to(side, side, (side - w) / 2, (side - h) / 2, 0)?;
    ForegroundCutout::new(padded, cutout.class_id, cutout.source_asset.clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bg(w: u32, h: u32) -> PixelBuffer {
        PixelBuffer::from_fn(w, h, 3, |x, y, c| ((x * 3 + y * 5 + c as u32 * 17) % 200) as u8).unwrap()
    }

    /// Canvas-sized cutout with one opaque pixel.
    fn dot(w: u32, h: u32, x: u32, y: u32, class: u8) -> ForegroundCutout {
        let img = PixelBuffer::from_fn(w, h, 4, |px, py, c| match (px == x && py == y, c) {
            (true, 3) => 255,
            (true, _) => 240 + c as u8,
            (false, 3) => 0,
            _ => 9,
        })
        .unwrap();
        ForegroundCutout::new(img, class, "dot").unwrap()
    }

    fn block(w: u32, h: u32, class: u8, color: [u8; 3]) -> ForegroundCutout {
        let img = PixelBuffer::from_pixel(w, h, &[color[0], color[1], color[2], 255]).unwrap();
        ForegroundCutout::new(img, class, format!("block{class}")).unwrap()
    }

    #[test]
    fn empty_alpha_is_rejected() {
        let img = PixelBuffer::filled(4, 4, 4, 0).unwrap();
        assert!(matches!(ForegroundCutout::new(img, 1, "x"), Err(Error::Ingestion { .. })));
        let almost = PixelBuffer::from_pixel(4, 4, &[9, 9, 9, 127]).unwrap();
        assert!(ForegroundCutout::new(almost, 1, "x").is_err());
        let rgb = PixelBuffer::filled(4, 4, 3, 0).unwrap();
        assert!(ForegroundCutout::new(rgb, 1, "x").is_err());
    }

    #[test]
    fn alpha_is_binarized() {
        let img = PixelBuffer::from_fn(16, 1, 4, |x, _, c| if c == 3 { (x * 16) as u8 } else { 1 }).unwrap();
        let fg = ForegroundCutout::new(img, 2, "ramp").unwrap();
        assert!(fg.silhouette().data().iter().all(|&a| a == 0 || a == 255));
        assert_eq!(fg.opaque_count(), 8);
    }

    #[test]
    fn single_pixel_lands_where_expected() {
        let b = bg(32, 24);
        let fg = dot(32, 24, 10, 10, 3);
        let scene = blend_one(&b, &fg, &Placement::identity()).unwrap();
        for y in 0..24 {
            for x in 0..32 {
                let m = scene.mask().get(x, y, 0);
                if (x, y) == (10, 10) {
                    assert_eq!(m, 3);
                    assert_eq!(scene.image().pixel(x, y), &fg.image().pixel(x, y)[..3]);
                } else {
                    assert_eq!(m, 0);
                    assert_eq!(scene.image().pixel(x, y), b.pixel(x, y));
                }
            }
        }
        assert_eq!(scene.classes_present().iter().copied().collect::<Vec<_>>(), vec![3]);
    }

    #[test]
    fn off_canvas_placement_is_rejected() {
        let b = bg(32, 32);
        let fg = block(10, 10, 1, [200, 0, 0]);
        let pl = Placement {
            tx: 16.0,
            ..Placement::identity()
        };
        // centre on the right edge: exactly half on canvas
        assert!(blend_one(&b, &fg, &pl).is_ok());
        let pl = Placement {
            tx: 19.0,
            ..Placement::identity()
        };
        assert!(matches!(blend_one(&b, &fg, &pl), Err(Error::PlacementRejected { .. })));
    }

    #[test]
    fn two_disjoint_cutouts_add_histograms() {
        let b = bg(40, 20);
        let a = block(8, 8, 1, [255, 0, 0]);
        let c = block(6, 6, 2, [0, 255, 0]);
        let pa = Placement { tx: -10.0, ..Placement::identity() };
        let pc = Placement { tx: 10.0, z_order: 1, ..Placement::identity() };
        let s = blend_two(&b, [&a, &c], [&pa, &pc]).unwrap();
        let count = |v| s.mask().data().iter().filter(|&&m| m == v).count();
        let one = blend_one(&b, &a, &pa).unwrap();
        let two = blend_one(&b, &c, &pc).unwrap();
        assert_eq!(count(1), one.mask().data().iter().filter(|&&m| m == 1).count());
        assert_eq!(count(2), two.mask().data().iter().filter(|&&m| m == 2).count());
        assert_eq!(count(1), 64);
        assert_eq!(count(2), 36);
    }

    #[test]
    fn top_cutout_wins_overlap() {
        let b = bg(20, 20);
        let a = block(10, 10, 1, [255, 0, 0]);
        let c = block(10, 10, 2, [0, 255, 0]);
        let low = Placement::identity();
        let high = Placement { z_order: 1, ..Placement::identity() };
        let s = blend_two(&b, [&a, &c], [&high, &low]).unwrap();
        assert_eq!(s.classes_present().iter().copied().collect::<Vec<_>>(), vec![1]);
        assert_eq!(s.image().pixel(10, 10), &[255, 0, 0]);
    }

    #[test]
    fn same_class_pair_is_rejected() {
        let b = bg(20, 20);
        let a = block(4, 4, 1, [1, 1, 1]);
        let p = Placement::identity();
        assert!(matches!(blend_two(&b, [&a, &a], [&p, &p]), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn blend_two_equals_sequential_blend_one() {
        let b = bg(48, 48);
        let a = prepare_cutout(&block(12, 20, 4, [10, 200, 30])).unwrap();
        let c = prepare_cutout(&block(16, 9, 5, [250, 20, 90])).unwrap();
        for s in 0..30u64 {
            let pa = sample_placement(s, (48, 48), &a).unwrap();
            let mut pc = sample_placement(s + 1000, (48, 48), &c).unwrap();
            pc.z_order = 1;
            let two = blend_two(&b, [&a, &c], [&pa, &pc]).unwrap();
            let first = blend_one(&b, &a, &pa).unwrap();
            let seq = blend_one(first.image(), &c, &pc).unwrap();
            assert_eq!(two.image(), seq.image());
        }
    }

    #[test]
    fn canvas_sized_cutout_at_identity_is_accepted() {
        let fg = block(30, 20, 1, [5, 5, 5]);
        assert_eq!(on_canvas_fraction((30, 20), &fg, &Placement::identity()).unwrap(), 1.0);
        let s = blend_one(&bg(30, 20), &fg, &Placement::identity()).unwrap();
        assert!(s.mask().data().iter().all(|&m| m == 1));
    }

    #[test]
    fn placement_sampling_is_deterministic() {
        let fg = prepare_cutout(&block(30, 8, 1, [0, 0, 0])).unwrap();
        assert_eq!(
            sample_placement(5, (64, 64), &fg).unwrap(),
            sample_placement(5, (64, 64), &fg).unwrap()
        );
        let pl = sample_placement(5, (64, 64), &fg).unwrap();
        let fit = fit_scale((64, 64), &fg);
        assert!(pl.scale >= fit * 0.5 - 1e-12 && pl.scale <= fit * 1.2 + 1e-12);
        assert!((-180.0..=180.0).contains(&pl.rotation));
    }

    #[test]
    fn prepared_cutout_keeps_pixels() {
        let fg = dot(20, 20, 3, 17, 2);
        let p = prepare_cutout(&fg).unwrap();
        assert_eq!(p.opaque_count(), 1);
        assert!(p.image().width() == p.image().height());
    }
}
