//! Smooth gradient-noise fields used as spatial alpha masks.

use crate::error::{Error, Result};
use crate::imgcore::{quantize, PixelBuffer};
use crate::seed;

/// Per-pixel weights in `[0, 1]`, min-max normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseField {
    pub width: u32,
    pub height: u32,
    pub scale: f64,
    pub seed: u64,
    pub values: Vec<f64>,
}

impl NoiseField {
    /// Field with every value equal to `v`; handy for tests and degenerate blends.
    pub fn constant(width: u32, height: u32, v: f64) -> Self {
        Self {
            width,
            height,
            scale: f64::INFINITY,
            seed: 0,
            values: vec![v.clamp(0.0, 1.0); width as usize * height as usize],
        }
    }

    #[inline]
    pub fn at(&self, x: u32, y: u32) -> f64 {
        self.values[y as usize * self.width as usize + x as usize]
    }
}

// Wavelength multipliers and amplitudes of the octaves. The finest octave sits
// at `scale`; coarser ones add low-frequency structure without raising the
// slope bound.
const OCTAVES: [(f64, f64); 2] = [(1.0, 1.0), (2.0, 1.0)];

#[inline]
fn fade(t: f64) -> f64 {
    t * t * t * (t * (t * 6.0 - 15.0) + 10.0)
}

#[inline]
fn gradient(seed: u64, ix: i64, iy: i64) -> (f64, f64) {
    let h = seed::derive(seed::derive(seed, ix as u64), iy as u64);
    let angle = (h >> 11) as f64 / (1u64 << 53) as f64 * std::f64::consts::TAU;
    let (s, c) = angle.sin_cos();
    (c, s)
}

/// Classic gradient (Perlin) noise on a lattice with unit spacing.
fn perlin(seed: u64, x: f64, y: f64) -> f64 {
    let x0 = x.floor();
    let y0 = y.floor();
    let (fx, fy) = (x - x0, y - y0);
    let (ix, iy) = (x0 as i64, y0 as i64);
    let dot = |gx: i64, gy: i64, dx: f64, dy: f64| {
        let (g0, g1) = gradient(seed, gx, gy);
        g0 * dx + g1 * dy
    };
    let n00 = dot(ix, iy, fx, fy);
    let n10 = dot(ix + 1, iy, fx - 1.0, fy);
    let n01 = dot(ix, iy + 1, fx, fy - 1.0);
    let n11 = dot(ix + 1, iy + 1, fx - 1.0, fy - 1.0);
    let (u, v) = (fade(fx), fade(fy));
    let a = n00 + u * (n10 - n00);
    let b = n01 + u * (n11 - n01);
    a + v * (b - a)
}

/// Smooth noise with feature wavelength `scale` pixels, deterministic in
/// `(w, h, scale, seed)`.
pub fn noise_field(w: u32, h: u32, scale: f64, seed: u64) -> Result<NoiseField> {
    if w == 0 || h == 0 {
        return Err(Error::invalid("noise field needs nonzero dimensions"));
    }
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::invalid(format!("noise scale must be positive, got {scale}")));
    }
    let mut values = Vec::with_capacity(w as usize * h as usize);
    for y in 0..h {
        for x in 0..w {
            let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
            let mut v = 0.0;
            for (k, &(mult, amp)) in OCTAVES.iter().enumerate() {
                let wl = scale * mult;
                v += amp * perlin(seed::derive(seed, k as u64), px / wl, py / wl);
            }
            values.push(v);
        }
    }
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let span = hi - lo;
    for v in values.iter_mut() {
        *v = if span > 1e-12 { (*v - lo) / span } else { 0.5 };
    }
    Ok(NoiseField {
        width: w,
        height: h,
        scale,
        seed,
        values,
    })
}

/// `out = field·overlay + (1 − field)·img` on the color channels; alpha is
/// taken from `img`.
pub fn noise_alpha_blend(img: &PixelBuffer, overlay: &PixelBuffer, field: &NoiseField) -> Result<PixelBuffer> {
    if !img.same_dims(overlay) || img.channels() != overlay.channels() {
        return Err(Error::invalid("noise blend: image and overlay differ in shape"));
    }
    if (field.width, field.height) != img.dims() {
        return Err(Error::invalid("noise blend: field dims differ from image"));
    }
    let c = img.channels() as usize;
    let color = c.min(3);
    let mut out = img.clone();
    let (src, ov) = (img.data(), overlay.data());
    let data = out.data_mut();
    for (p, &f) in field.values.iter().enumerate() {
        for ch in 0..color {
            let i = p * c + ch;
            data[i] = quantize(f * ov[i] as f64 + (1.0 - f) * src[i] as f64);
        }
    }
    Ok(out)
}
