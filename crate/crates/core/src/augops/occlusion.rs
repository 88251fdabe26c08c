//! Rectangle and block occluders.

use rand::Rng;

use crate::imgcore::PixelBuffer;
use crate::seed;

fn fill_rect(img: &mut PixelBuffer, x0: u32, y0: u32, w: u32, h: u32, value: u8) {
    let color = (img.channels() as usize).min(3);
    for y in y0..(y0 + h).min(img.height()) {
        for x in x0..(x0 + w).min(img.width()) {
            for v in img.pixel_mut(x, y).iter_mut().take(color) {
                *v = value;
            }
        }
    }
}

/// `count` rectangles of side `size`·(width, height), fully inside the image,
/// filled with `value`.
pub fn cutout(img: &PixelBuffer, count: u32, size: f64, value: u8, rng_seed: u64) -> PixelBuffer {
    let mut out = img.clone();
    if count == 0 || size <= 0.0 {
        return out;
    }
    let (w, h) = img.dims();
    let rw = ((size.min(1.0) * w as f64).round() as u32).clamp(1, w);
    let rh = ((size.min(1.0) * h as f64).round() as u32).clamp(1, h);
    let mut rng = seed::rng(rng_seed);
    for _ in 0..count {
        let x0 = rng.random_range(0..=w - rw);
        let y0 = rng.random_range(0..=h - rh);
        fill_rect(&mut out, x0, y0, rw, rh, value);
    }
    out
}

/// Zero `round(fraction · blocks)` distinct cells of a `block`-pixel grid.
pub fn coarse_dropout(img: &PixelBuffer, fraction: f64, block: u32, rng_seed: u64) -> PixelBuffer {
    let mut out = img.clone();
    let block = block.max(1);
    let (w, h) = img.dims();
    let nx = w.div_ceil(block);
    let ny = h.div_ceil(block);
    let cells = (nx * ny) as usize;
    let k = ((fraction.clamp(0.0, 1.0) * cells as f64).round() as usize).min(cells);
    if k == 0 {
        return out;
    }
    let mut ids: Vec<usize> = (0..cells).collect();
    let mut rng = seed::rng(rng_seed);
    for i in 0..k {
        let j = rng.random_range(i..cells);
        ids.swap(i, j);
    }
    for &id in &ids[..k] {
        let (bx, by) = ((id as u32 % nx) * block, (id as u32 / nx) * block);
        fill_rect(&mut out, bx, by, block, block, 0);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_fraction_is_identity() {
        let img = PixelBuffer::filled(20, 20, 3, 9).unwrap();
        assert_eq!(coarse_dropout(&img, 0.0, 8, 1), img);
        assert_eq!(cutout(&img, 0, 0.3, 0, 1), img);
    }

    #[test]
    fn full_cutout_is_constant() {
        let img = PixelBuffer::from_fn(13, 7, 3, |x, y, c| (x + y + c as u32) as u8).unwrap();
        let out = cutout(&img, 1, 1.0, 42, 5);
        assert!(out.data().iter().all(|&v| v == 42));
    }

    #[test]
    fn dropout_fraction_on_224() {
        let img = PixelBuffer::filled(224, 224, 3, 200).unwrap();
        let out = coarse_dropout(&img, 0.25, 8, 11);
        let occluded = out.data().chunks(3).filter(|p| p[0] == 0).count();
        let frac = occluded as f64 / (224.0 * 224.0);
        assert!((0.20..=0.30).contains(&frac), "{frac}");
    }

    #[test]
    fn cutout_keeps_alpha() {
        let img = PixelBuffer::filled(10, 10, 4, 200).unwrap();
        let out = cutout(&img, 3, 0.4, 0, 2);
        assert!(out.data().chunks(4).all(|p| p[3] == 200));
        assert!(out.data().chunks(4).any(|p| p[0] == 0));
    }
}
