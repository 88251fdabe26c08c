//! Color-only operators. Every function here touches the first three channels
//! and copies alpha through untouched.

use rand_distr::{Distribution, Normal};

use crate::imgcore::{quantize, PixelBuffer};
use crate::seed;

/// Apply `f` to each color sample through a 256-entry lookup table.
pub fn map_lut(img: &PixelBuffer, lut: &[[u8; 256]; 3]) -> PixelBuffer {
    let c = img.channels() as usize;
    let mut out = img.clone();
    for px in out.data_mut().chunks_exact_mut(c) {
        for ch in 0..c.min(3) {
            px[ch] = lut[ch][px[ch] as usize];
        }
    }
    out
}

fn uniform_lut(f: impl Fn(f64) -> f64) -> [[u8; 256]; 3] {
    let mut lut = [0u8; 256];
    for (v, slot) in lut.iter_mut().enumerate() {
        *slot = quantize(f(v as f64));
    }
    [lut; 3]
}

/// Per-pixel color transform evaluated in floating point on RGB triples.
fn map_rgb(img: &PixelBuffer, f: impl Fn([f64; 3]) -> [f64; 3]) -> PixelBuffer {
    let c = img.channels() as usize;
    let mut out = img.clone();
    for px in out.data_mut().chunks_exact_mut(c) {
        let r = f([px[0] as f64, px[1] as f64, px[2] as f64]);
        px[0] = quantize(r[0]);
        px[1] = quantize(r[1]);
        px[2] = quantize(r[2]);
    }
    out
}

pub fn linear_contrast(img: &PixelBuffer, gain: f64) -> PixelBuffer {
    map_lut(img, &uniform_lut(|v| 128.0 + gain * (v - 128.0)))
}

pub fn multiply(img: &PixelBuffer, factor: f64) -> PixelBuffer {
    map_lut(img, &uniform_lut(|v| v * factor))
}

pub fn brightness(img: &PixelBuffer, factor: f64) -> PixelBuffer {
    multiply(img, factor)
}

/// Keep the top `bits` bits of each sample.
pub fn posterize(img: &PixelBuffer, bits: u32) -> PixelBuffer {
    let bits = bits.clamp(1, 8);
    let mask = !((1u16 << (8 - bits)) - 1) as u8;
    let mut lut = [0u8; 256];
    for (v, slot) in lut.iter_mut().enumerate() {
        *slot = v as u8 & mask;
    }
    map_lut(img, &[lut; 3])
}

/// Invert samples at or above `threshold`.
pub fn solarize(img: &PixelBuffer, threshold: u32) -> PixelBuffer {
    let mut lut = [0u8; 256];
    for (v, slot) in lut.iter_mut().enumerate() {
        *slot = if v as u32 >= threshold { 255 - v as u8 } else { v as u8 };
    }
    map_lut(img, &[lut; 3])
}

/// Stretch each channel so its extrema become 0 and 255.
pub fn autocontrast(img: &PixelBuffer) -> PixelBuffer {
    let c = img.channels() as usize;
    let mut lut = [[0u8; 256]; 3];
    for ch in 0..3 {
        let (mut lo, mut hi) = (255u8, 0u8);
        for px in img.data().chunks_exact(c) {
            lo = lo.min(px[ch]);
            hi = hi.max(px[ch]);
        }
        for v in 0..256usize {
            lut[ch][v] = if hi <= lo {
                v as u8
            } else {
                let scale = 255.0 / (hi - lo) as f64;
                quantize((v as f64 - lo as f64) * scale)
            };
        }
    }
    map_lut(img, &lut)
}

/// Per-channel histogram equalization (the classic PIL `ImageOps.equalize` LUT).
pub fn equalize(img: &PixelBuffer) -> PixelBuffer {
    let c = img.channels() as usize;
    let mut lut = [[0u8; 256]; 3];
    for (ch, table) in lut.iter_mut().enumerate() {
        let mut hist = [0usize; 256];
        for px in img.data().chunks_exact(c) {
            hist[px[ch] as usize] += 1;
        }
        let last = hist.iter().rposition(|&n| n > 0).map_or(0, |i| hist[i]);
        let total: usize = hist.iter().sum();
        let step = (total - last) / 255;
        if step == 0 {
            for (v, slot) in table.iter_mut().enumerate() {
                *slot = v as u8;
            }
            continue;
        }
        let mut n = step / 2;
        for (v, slot) in table.iter_mut().enumerate() {
            *slot = (n / step).min(255) as u8;
            n += hist[v];
        }
    }
    map_lut(img, &lut)
}

#[inline]
fn luma(p: [f64; 3]) -> f64 {
    (299.0 * p[0] + 587.0 * p[1] + 114.0 * p[2]) / 1000.0
}

/// Saturation enhance: interpolate between grayscale and the image.
pub fn color(img: &PixelBuffer, factor: f64) -> PixelBuffer {
    map_rgb(img, |p| {
        let g = luma(p);
        p.map(|v| g + factor * (v - g))
    })
}

/// Contrast enhance around the mean gray level.
pub fn contrast(img: &PixelBuffer, factor: f64) -> PixelBuffer {
    let c = img.channels() as usize;
    let n = img.pixel_count().max(1) as f64;
    let mean = img
        .data()
        .chunks_exact(c)
        .map(|px| luma([px[0] as f64, px[1] as f64, px[2] as f64]))
        .sum::<f64>()
        / n;
    let mean = (mean + 0.5).floor();
    map_lut(img, &uniform_lut(|v| mean + factor * (v - mean)))
}

/// 3×3 convolution of the color channels with edge replication, in floating point.
fn convolve3(img: &PixelBuffer, k: &[[f64; 3]; 3]) -> Vec<f64> {
    let (w, h) = img.dims();
    let mut out = vec![0.0; img.pixel_count() * 3];
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            let mut acc = [0.0f64; 3];
            for (ky, krow) in k.iter().enumerate() {
                let sy = (y + ky as i64 - 1).clamp(0, h as i64 - 1) as u32;
                for (kx, &kv) in krow.iter().enumerate() {
                    let sx = (x + kx as i64 - 1).clamp(0, w as i64 - 1) as u32;
                    let px = img.pixel(sx, sy);
                    for ch in 0..3 {
                        acc[ch] += kv * px[ch] as f64;
                    }
                }
            }
            let o = (y as usize * w as usize + x as usize) * 3;
            out[o..o + 3].copy_from_slice(&acc);
        }
    }
    out
}

/// `out = (1 − t)·img + t·effect`, with `effect` given per color sample.
fn blend_effect(img: &PixelBuffer, effect: &[f64], t: f64) -> PixelBuffer {
    let c = img.channels() as usize;
    let mut out = img.clone();
    for (p, px) in out.data_mut().chunks_exact_mut(c).enumerate() {
        for ch in 0..3 {
            let e = effect[p * 3 + ch];
            px[ch] = quantize((1.0 - t) * px[ch] as f64 + t * e);
        }
    }
    out
}

const SHARPEN: [[f64; 3]; 3] = [[-1.0, -1.0, -1.0], [-1.0, 9.0, -1.0], [-1.0, -1.0, -1.0]];
const EMBOSS: [[f64; 3]; 3] = [[-2.0, -1.0, 0.0], [-1.0, 1.0, 1.0], [0.0, 1.0, 2.0]];
const SMOOTH: [[f64; 3]; 3] = [
    [1.0 / 13.0, 1.0 / 13.0, 1.0 / 13.0],
    [1.0 / 13.0, 5.0 / 13.0, 1.0 / 13.0],
    [1.0 / 13.0, 1.0 / 13.0, 1.0 / 13.0],
];

pub fn sharpen(img: &PixelBuffer, strength: f64) -> PixelBuffer {
    if strength == 0.0 {
        return img.clone();
    }
    blend_effect(img, &convolve3(img, &SHARPEN), strength)
}

pub fn emboss(img: &PixelBuffer, strength: f64) -> PixelBuffer {
    if strength == 0.0 {
        return img.clone();
    }
    blend_effect(img, &convolve3(img, &EMBOSS), strength)
}

/// Sharpness enhance: interpolate between a smoothed copy and the image.
/// `factor` 1 is the identity, 0 the smoothed image, above 1 sharpens.
pub fn sharpness(img: &PixelBuffer, factor: f64) -> PixelBuffer {
    if factor == 1.0 {
        return img.clone();
    }
    let smooth = convolve3(img, &SMOOTH);
    blend_effect(img, &smooth, 1.0 - factor)
}

pub fn gaussian_blur(img: &PixelBuffer, sigma: f64) -> PixelBuffer {
    if sigma < 0.05 {
        return img.clone();
    }
    let radius = (3.0 * sigma).ceil() as i64;
    let mut kernel: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|k| *k /= sum);

    let (w, h) = (img.width() as i64, img.height() as i64);
    let c = img.channels() as usize;
    let src = img.data();
    let mut tmp = vec![0.0f64; (w * h) as usize * 3];
    for y in 0..h {
        for x in 0..w {
            let mut acc = [0.0; 3];
            for (k, &kv) in kernel.iter().enumerate() {
                let sx = (x + k as i64 - radius).clamp(0, w - 1);
                let o = ((y * w + sx) as usize) * c;
                for ch in 0..3 {
                    acc[ch] += kv * src[o + ch] as f64;
                }
            }
            let o = ((y * w + x) as usize) * 3;
            tmp[o..o + 3].copy_from_slice(&acc);
        }
    }
    let mut out = img.clone();
    let data = out.data_mut();
    for y in 0..h {
        for x in 0..w {
            let mut acc = [0.0; 3];
            for (k, &kv) in kernel.iter().enumerate() {
                let sy = (y + k as i64 - radius).clamp(0, h - 1);
                let o = ((sy * w + x) as usize) * 3;
                for ch in 0..3 {
                    acc[ch] += kv * tmp[o + ch];
                }
            }
            let o = ((y * w + x) as usize) * c;
            for ch in 0..3 {
                data[o + ch] = quantize(acc[ch]);
            }
        }
    }
    out
}

/// `k`×`k` median per color channel with edge replication. `k` must be odd.
pub fn median_blur(img: &PixelBuffer, k: u32) -> PixelBuffer {
    if k <= 1 {
        return img.clone();
    }
    let r = (k / 2) as i64;
    let (w, h) = (img.width() as i64, img.height() as i64);
    let c = img.channels() as usize;
    let mut out = img.clone();
    let mut window = Vec::with_capacity((k * k) as usize);
    let data = out.data_mut();
    for y in 0..h {
        for x in 0..w {
            for ch in 0..3 {
                window.clear();
                for dy in -r..=r {
                    let sy = (y + dy).clamp(0, h - 1) as u32;
                    for dx in -r..=r {
                        let sx = (x + dx).clamp(0, w - 1) as u32;
                        window.push(img.get(sx, sy, ch));
                    }
                }
                let mid = window.len() / 2;
                let (_, m, _) = window.select_nth_unstable(mid);
                data[(y * w + x) as usize * c + ch] = *m;
            }
        }
    }
    out
}

pub fn additive_gaussian_noise(img: &PixelBuffer, sigma: f64, noise_seed: u64) -> PixelBuffer {
    if sigma <= 0.0 {
        return img.clone();
    }
    let normal = Normal::new(0.0, sigma).expect("sigma is positive and finite");
    let mut rng = seed::rng(noise_seed);
    let c = img.channels() as usize;
    let mut out = img.clone();
    for px in out.data_mut().chunks_exact_mut(c) {
        for v in px.iter_mut().take(3) {
            *v = quantize(*v as f64 + normal.sample(&mut rng));
        }
    }
    out
}

fn rgb_to_hsv([r, g, b]: [f64; 3]) -> [f64; 3] {
    let (r, g, b) = (r / 255.0, g / 255.0, b / 255.0);
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let d = max - min;
    let h = if d == 0.0 {
        0.0
    } else if max == r {
        ((g - b) / d).rem_euclid(6.0) / 6.0
    } else if max == g {
        ((b - r) / d + 2.0) / 6.0
    } else {
        ((r - g) / d + 4.0) / 6.0
    };
    let s = if max == 0.0 { 0.0 } else { d / max };
    [h, s, max]
}

fn hsv_to_rgb([h, s, v]: [f64; 3]) -> [f64; 3] {
    let h6 = h.rem_euclid(1.0) * 6.0;
    let i = h6.floor();
    let f = h6 - i;
    let p = v * (1.0 - s);
    let q = v * (1.0 - s * f);
    let t = v * (1.0 - s * (1.0 - f));
    let (r, g, b) = match i as i64 % 6 {
        0 => (v, t, p),
        1 => (q, v, p),
        2 => (p, v, t),
        3 => (p, q, v),
        4 => (t, p, v),
        _ => (v, p, q),
    };
    [r * 255.0, g * 255.0, b * 255.0]
}

/// Shift hue by `hue/255` of a turn and saturation by `sat/255`.
pub fn add_to_hue_and_saturation(img: &PixelBuffer, hue: f64, sat: f64) -> PixelBuffer {
    if hue == 0.0 && sat == 0.0 {
        return img.clone();
    }
    map_rgb(img, |p| {
        let [h, s, v] = rgb_to_hsv(p);
        hsv_to_rgb([h + hue / 255.0, (s + sat / 255.0).clamp(0.0, 1.0), v])
    })
}
