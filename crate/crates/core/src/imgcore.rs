//! Pixel buffers, geometric warps and resampling.
//!
//! Conventions used throughout the crate:
//!
//! * pixel `(i, j)` has its center at `(i + 0.5, j + 0.5)`;
//! * every warp is an inverse map, from output coordinates to input
//!   coordinates;
//! * arithmetic happens in floating point and is converted back to 8 bits once,
//!   with [`quantize`] (clamp to `[0, 255]`, round half up).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major 8-bit image with 1 (mask), 3 (RGB) or 4 (RGBA) channels.
#[derive(Clone, PartialEq, Eq)]
pub struct PixelBuffer {
    width: u32,
    height: u32,
    channels: u8,
    data: Vec<u8>,
}

impl std::fmt::Debug for PixelBuffer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PixelBuffer")
            .field("width", &self.width)
            .field("height", &self.height)
            .field("channels", &self.channels)
            .finish_non_exhaustive()
    }
}

impl PixelBuffer {
    pub fn new(width: u32, height: u32, channels: u8, data: Vec<u8>) -> Result<Self> {
        if !matches!(channels, 1 | 3 | 4) {
            return Err(Error::invalid(format!(
                "channel count must be 1, 3 or 4, got {channels}"
            )));
        }
        let expected = width as usize * height as usize * channels as usize;
        if data.len() != expected {
            return Err(Error::invalid(format!(
                "buffer of {width}x{height}x{channels} needs {expected} samples, got {}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    /// Buffer where every sample equals `value`.
    pub fn filled(width: u32, height: u32, channels: u8, value: u8) -> Result<Self> {
        let len = width as usize * height as usize * channels as usize;
        Self::new(width, height, channels, vec![value; len])
    }

    /// Buffer where every pixel equals `pixel` (whose length sets the channel count).
    pub fn from_pixel(width: u32, height: u32, pixel: &[u8]) -> Result<Self> {
        let n = width as usize * height as usize;
        let mut data = Vec::with_capacity(n * pixel.len());
        for _ in 0..n {
            data.extend_from_slice(pixel);
        }
        Self::new(width, height, pixel.len() as u8, data)
    }

    pub fn from_fn(
        width: u32,
        height: u32,
        channels: u8,
        mut f: impl FnMut(u32, u32, usize) -> u8,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width as usize * height as usize * channels as usize);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels as usize {
                    data.push(f(x, y, c));
                }
            }
        }
        Self::new(width, height, channels, data)
    }

    #[inline]
    pub fn width(&self) -> u32 {
        self.width
    }

    #[inline]
    pub fn height(&self) -> u32 {
        self.height
    }

    #[inline]
    pub fn channels(&self) -> u8 {
        self.channels
    }

    #[inline]
    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    #[inline]
    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    #[inline]
    fn offset(&self, x: u32, y: u32) -> usize {
        (y as usize * self.width as usize + x as usize) * self.channels as usize
    }

    #[inline]
    pub fn pixel(&self, x: u32, y: u32) -> &[u8] {
        let o = self.offset(x, y);
        &self.data[o..o + self.channels as usize]
    }

    #[inline]
    pub fn pixel_mut(&mut self, x: u32, y: u32) -> &mut [u8] {
        let o = self.offset(x, y);
        let c = self.channels as usize;
        &mut self.data[o..o + c]
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32, c: usize) -> u8 {
        self.data[self.offset(x, y) + c]
    }

    /// Mutable access to the raw samples. Length cannot change, so the
    /// dimension invariant is preserved.
    pub fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn same_dims(&self, other: &PixelBuffer) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Extract one channel as a 1-channel buffer.
    pub fn channel(&self, c: usize) -> PixelBuffer {
        assert!(c < self.channels as usize);
        let data = self
            .data
            .chunks_exact(self.channels as usize)
            .map(|px| px[c])
            .collect();
        PixelBuffer {
            width: self.width,
            height: self.height,
            channels: 1,
            data,
        }
    }

    /// Drop the alpha channel of an RGBA buffer; RGB is returned unchanged.
    pub fn to_rgb(&self) -> Result<PixelBuffer> {
        match self.channels {
            3 => Ok(self.clone()),
            4 => {
                let data = self
                    .data
                    .chunks_exact(4)
                    .flat_map(|px| [px[0], px[1], px[2]])
                    .collect();
                PixelBuffer::new(self.width, self.height, 3, data)
            }
            1 => {
                let data = self.data.iter().flat_map(|&v| [v, v, v]).collect();
                PixelBuffer::new(self.width, self.height, 3, data)
            }
            _ => unreachable!(),
        }
    }

    /// Single-channel luma (ITU-R 601 weights); alpha is ignored.
    pub fn to_luma(&self) -> Result<PixelBuffer> {
        if self.channels == 1 {
            return Ok(self.clone());
        }
        let data = self
            .data
            .chunks_exact(self.channels as usize)
            .map(|px| quantize((299.0 * px[0] as f64 + 587.0 * px[1] as f64 + 114.0 * px[2] as f64) / 1000.0))
            .collect();
        PixelBuffer::new(self.width, self.height, 1, data)
    }

    /// Copy of the `w`×`h` window starting at `(x0, y0)`; must lie inside.
    pub fn crop(&self, x0: u32, y0: u32, w: u32, h: u32) -> Result<PixelBuffer> {
        if w == 0 || h == 0 || x0 + w > self.width || y0 + h > self.height {
            return Err(Error::invalid(format!(
                "crop {w}x{h}+{x0}+{y0} outside {}x{}",
                self.width, self.height
            )));
        }
        let c = self.channels as usize;
        let mut data = Vec::with_capacity(w as usize * h as usize * c);
        for y in y0..y0 + h {
            let start = self.offset(x0, y);
            data.extend_from_slice(&self.data[start..start + w as usize * c]);
        }
        PixelBuffer::new(w, h, self.channels, data)
    }

    /// Place this buffer at `(x0, y0)` inside a new `w`×`h` canvas filled with `fill`.
    pub fn pad_to(&self, w: u32, h: u32, x0: u32, y0: u32, fill: u8) -> Result<PixelBuffer> {
        if x0 + self.width > w || y0 + self.height > h {
            return Err(Error::invalid("padding target smaller than source"));
        }
        let mut out = PixelBuffer::filled(w, h, self.channels, fill)?;
        let c = self.channels as usize;
        let row = self.width as usize * c;
        for y in 0..self.height {
            let src = self.offset(0, y);
            let dst = out.offset(x0, y0 + y);
            out.data[dst..dst + row].copy_from_slice(&self.data[src..src + row]);
        }
        Ok(out)
    }
}

/// Convert a floating-point sample to 8 bits: clamp to `[0, 255]`, round half up.
#[inline]
pub fn quantize(v: f64) -> u8 {
    if v.is_nan() {
        return 0;
    }
    (v + 0.5).floor().clamp(0.0, 255.0) as u8
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Filter {
    Nearest,
    Bilinear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Horizontal,
    Vertical,
}

/// 2×3 affine map from output coordinates to input coordinates:
///
/// ```text
/// x_in = a·x + b·y + tx
/// y_in = c·x + d·y + ty
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineMatrix {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub tx: f64,
    pub ty: f64,
}

impl AffineMatrix {
    pub const IDENTITY: AffineMatrix = AffineMatrix {
        a: 1.0,
        b: 0.0,
        c: 0.0,
        d: 1.0,
        tx: 0.0,
        ty: 0.0,
    };

    pub fn new(a: f64, b: f64, c: f64, d: f64, tx: f64, ty: f64) -> Result<Self> {
        let m = Self { a, b, c, d, tx, ty };
        m.check()?;
        Ok(m)
    }

    pub fn determinant(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    fn check(&self) -> Result<()> {
        let det = self.determinant();
        if !det.is_finite() || det.abs() < 1e-12 {
            return Err(Error::invalid(format!("singular affine matrix (det {det})")));
        }
        Ok(())
    }

    /// Map that moves image content by `(dx, dy)` pixels.
    pub fn shift(dx: f64, dy: f64) -> Self {
        Self {
            tx: -dx,
            ty: -dy,
            ..Self::IDENTITY
        }
    }

    /// Mirror about the vertical (horizontal flip) or horizontal center line
    /// of a `width`×`height` image.
    pub fn mirror(axis: Axis, width: u32, height: u32) -> Self {
        match axis {
            Axis::Horizontal => Self {
                a: -1.0,
                tx: width as f64,
                ..Self::IDENTITY
            },
            Axis::Vertical => Self {
                d: -1.0,
                ty: height as f64,
                ..Self::IDENTITY
            },
        }
    }

    /// Inverse map for a forward transform about the image center: rotate by
    /// `rotation_deg`, scale, shear along x by `shear_deg`, then translate by
    /// `(dx, dy)` pixels.
    pub fn about_center(
        width: u32,
        height: u32,
        rotation_deg: f64,
        scale: f64,
        shear_deg: f64,
        dx: f64,
        dy: f64,
    ) -> Result<Self> {
        if !(scale > 0.0) {
            return Err(Error::invalid(format!("scale must be positive, got {scale}")));
        }
        let (cx, cy) = (width as f64 / 2.0, height as f64 / 2.0);
        let (s, c) = rotation_deg.to_radians().sin_cos();
        let k = shear_deg.to_radians().tan();
        // forward linear part: R · Shear · S
        let fa = scale * c;
        let fb = scale * (c * k - s);
        let fc = scale * s;
        let fd = scale * (s * k + c);
        let forward = AffineMatrix {
            a: fa,
            b: fb,
            c: fc,
            d: fd,
            tx: cx + dx - (fa * cx + fb * cy),
            ty: cy + dy - (fc * cx + fd * cy),
        };
        forward.inverse()
    }

    pub fn inverse(&self) -> Result<Self> {
        self.check()?;
        let det = self.determinant();
        let a = self.d / det;
        let b = -self.b / det;
        let c = -self.c / det;
        let d = self.a / det;
        Ok(Self {
            a,
            b,
            c,
            d,
            tx: -(a * self.tx + b * self.ty),
            ty: -(c * self.tx + d * self.ty),
        })
    }

    #[inline]
    pub fn apply(&self, x: f64, y: f64) -> (f64, f64) {
        (
            self.a * x + self.b * y + self.tx,
            self.c * x + self.d * y + self.ty,
        )
    }

    pub fn to_homography(&self) -> Homography {
        Homography {
            h: [
                self.a, self.b, self.tx, self.c, self.d, self.ty, 0.0, 0.0, 1.0,
            ],
        }
    }
}

/// 3×3 projective map from output to input coordinates, row-major, `h[8] == 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Homography {
    h: [f64; 9],
}

impl Homography {
    pub const IDENTITY: Homography = Homography {
        h: [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0],
    };

    /// Normalizes so the last coefficient is 1.
    pub fn new(h: [f64; 9]) -> Result<Self> {
        if h.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("homography has non-finite coefficients"));
        }
        if h[8].abs() < 1e-12 {
            return Err(Error::invalid("homography h33 is zero"));
        }
        let n = h.map(|v| v / h[8]);
        let m = Self { h: n };
        let det = m.determinant();
        if det.abs() < 1e-12 {
            return Err(Error::invalid(format!("singular homography (det {det})")));
        }
        Ok(m)
    }

    pub fn coefficients(&self) -> &[f64; 9] {
        &self.h
    }

    pub fn determinant(&self) -> f64 {
        let h = &self.h;
        h[0] * (h[4] * h[8] - h[5] * h[7]) - h[1] * (h[3] * h[8] - h[5] * h[6])
            + h[2] * (h[3] * h[7] - h[4] * h[6])
    }

    /// Homography taking the four `src` points onto the four `dst` points
    /// (direct linear solve with h33 fixed to 1).
    pub fn from_points(src: [(f64, f64); 4], dst: [(f64, f64); 4]) -> Result<Self> {
        let mut m = [[0.0f64; 9]; 8];
        for (k, (&(x, y), &(u, v))) in src.iter().zip(dst.iter()).enumerate() {
            m[2 * k] = [x, y, 1.0, 0.0, 0.0, 0.0, -u * x, -u * y, u];
            m[2 * k + 1] = [0.0, 0.0, 0.0, x, y, 1.0, -v * x, -v * y, v];
        }
        let sol = solve8(m).ok_or_else(|| Error::invalid("degenerate point correspondence"))?;
        Self::new([
            sol[0], sol[1], sol[2], sol[3], sol[4], sol[5], sol[6], sol[7], 1.0,
        ])
    }

    #[inline]
    pub fn apply(&self, x: f64, y: f64) -> Option<(f64, f64)> {
        let h = &self.h;
        let w = h[6] * x + h[7] * y + h[8];
        if w <= 1e-12 {
            return None;
        }
        Some((
            (h[0] * x + h[1] * y + h[2]) / w,
            (h[3] * x + h[4] * y + h[5]) / w,
        ))
    }
}

/// Gauss-Jordan with partial pivoting on an 8×9 augmented system.
fn solve8(mut m: [[f64; 9]; 8]) -> Option<[f64; 8]> {
    for col in 0..8 {
        let pivot = (col..8).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[pivot][col].abs() < 1e-12 {
            return None;
        }
        m.swap(col, pivot);
        let p = m[col][col];
        for v in m[col].iter_mut() {
            *v /= p;
        }
        for row in 0..8 {
            if row != col {
                let f = m[row][col];
                if f != 0.0 {
                    for k in col..9 {
                        m[row][k] -= f * m[col][k];
                    }
                }
            }
        }
    }
    let mut out = [0.0; 8];
    for (i, o) in out.iter_mut().enumerate() {
        *o = m[i][8];
    }
    Some(out)
}

/// Sample `img` at continuous input coordinates. Points outside the source
/// rectangle return `None` (the caller substitutes the fill value).
#[inline]
fn sample(img: &PixelBuffer, sx: f64, sy: f64, filter: Filter, out: &mut [u8]) -> bool {
    let (w, h) = (img.width as f64, img.height as f64);
    if !(sx >= 0.0 && sx < w && sy >= 0.0 && sy < h) {
        return false;
    }
    match filter {
        Filter::Nearest => {
            let px = img.pixel(sx.floor() as u32, sy.floor() as u32);
            out.copy_from_slice(px);
        }
        Filter::Bilinear => {
            let u = sx - 0.5;
            let v = sy - 0.5;
            let x0f = u.floor();
            let y0f = v.floor();
            let fx = u - x0f;
            let fy = v - y0f;
            let max_x = img.width as i64 - 1;
            let max_y = img.height as i64 - 1;
            let x0 = (x0f as i64).clamp(0, max_x) as u32;
            let x1 = (x0f as i64 + 1).clamp(0, max_x) as u32;
            let y0 = (y0f as i64).clamp(0, max_y) as u32;
            let y1 = (y0f as i64 + 1).clamp(0, max_y) as u32;
            let (p00, p10) = (img.pixel(x0, y0), img.pixel(x1, y0));
            let (p01, p11) = (img.pixel(x0, y1), img.pixel(x1, y1));
            for c in 0..out.len() {
                let top = p00[c] as f64 * (1.0 - fx) + p10[c] as f64 * fx;
                let bot = p01[c] as f64 * (1.0 - fx) + p11[c] as f64 * fx;
                out[c] = quantize(top * (1.0 - fy) + bot * fy);
            }
        }
    }
    true
}

fn warp_with(
    img: &PixelBuffer,
    filter: Filter,
    fill: u8,
    map: impl Fn(f64, f64) -> Option<(f64, f64)>,
) -> PixelBuffer {
    let c = img.channels as usize;
    let mut data = vec![fill; img.data.len()];
    let mut px = vec![0u8; c];
    for y in 0..img.height {
        for x in 0..img.width {
            let Some((sx, sy)) = map(x as f64 + 0.5, y as f64 + 0.5) else {
                continue;
            };
            if sample(img, sx, sy, filter, &mut px) {
                let o = (y as usize * img.width as usize + x as usize) * c;
                data[o..o + c].copy_from_slice(&px);
            }
        }
    }
    PixelBuffer {
        width: img.width,
        height: img.height,
        channels: img.channels,
        data,
    }
}

/// Resample to `w`×`h`. Nearest picks `floor((i + 0.5)·src/dst)`; bilinear
/// samples at `(i + 0.5)·src/dst` with edge clamping.
pub fn resize(img: &PixelBuffer, w: u32, h: u32, filter: Filter) -> Result<PixelBuffer> {
    if w == 0 || h == 0 {
        return Err(Error::invalid(format!("resize target {w}x{h} has a zero side")));
    }
    if (w, h) == img.dims() {
        return Ok(img.clone());
    }
    let sx = img.width as f64 / w as f64;
    let sy = img.height as f64 / h as f64;
    let c = img.channels as usize;
    let mut data = Vec::with_capacity(w as usize * h as usize * c);
    let mut px = vec![0u8; c];
    for y in 0..h {
        for x in 0..w {
            let fx = ((x as f64 + 0.5) * sx).min(img.width as f64 - 1e-9);
            let fy = ((y as f64 + 0.5) * sy).min(img.height as f64 - 1e-9);
            sample(img, fx, fy, filter, &mut px);
            data.extend_from_slice(&px);
        }
    }
    PixelBuffer::new(w, h, img.channels, data)
}

pub fn warp_affine(img: &PixelBuffer, m: &AffineMatrix, filter: Filter, fill: u8) -> Result<PixelBuffer> {
    m.check()?;
    Ok(warp_with(img, filter, fill, |x, y| Some(m.apply(x, y))))
}

pub fn warp_perspective(
    img: &PixelBuffer,
    h: &Homography,
    filter: Filter,
    fill: u8,
) -> Result<PixelBuffer> {
    if h.determinant().abs() < 1e-12 || (h.h[8] - 1.0).abs() > 1e-12 {
        return Err(Error::invalid("homography is singular or not normalized"));
    }
    Ok(warp_with(img, filter, fill, |x, y| h.apply(x, y)))
}

/// Lossless mirror of the sample grid.
pub fn flip(img: &PixelBuffer, axis: Axis) -> PixelBuffer {
    let (w, h) = (img.width, img.height);
    let c = img.channels as usize;
    let mut data = Vec::with_capacity(img.data.len());
    for y in 0..h {
        let sy = match axis {
            Axis::Horizontal => y,
            Axis::Vertical => h - 1 - y,
        };
        for x in 0..w {
            let sx = match axis {
                Axis::Horizontal => w - 1 - x,
                Axis::Vertical => x,
            };
            let o = img.offset(sx, sy);
            data.extend_from_slice(&img.data[o..o + c]);
        }
    }
    PixelBuffer {
        width: w,
        height: h,
        channels: img.channels,
        data,
    }
}

/// Bounding box `(x0, y0, w, h)` of samples where `pred` holds on channel `c`.
pub fn bounding_box(img: &PixelBuffer, c: usize, pred: impl Fn(u8) -> bool) -> Option<(u32, u32, u32, u32)> {
    let (mut x0, mut y0, mut x1, mut y1) = (u32::MAX, u32::MAX, 0u32, 0u32);
    for y in 0..img.height {
        for x in 0..img.width {
            if pred(img.get(x, y, c)) {
                x0 = x0.min(x);
                y0 = y0.min(y);
                x1 = x1.max(x);
                y1 = y1.max(y);
            }
        }
    }
    (x0 != u32::MAX).then(|| (x0, y0, x1 - x0 + 1, y1 - y0 + 1))
}
