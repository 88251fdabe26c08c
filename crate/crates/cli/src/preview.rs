//! Contact sheets: one row per scene, image on the left, mask overlay on the right.

use scenesynth::blend::Scene;
use scenesynth::PixelBuffer;

/// Tint colors by class id (cycled).
const PALETTE: [[u8; 3]; 10] = [
    [255, 64, 64],
    [64, 255, 64],
    [64, 128, 255],
    [255, 220, 0],
    [255, 0, 255],
    [0, 240, 240],
    [255, 140, 0],
    [160, 80, 255],
    [255, 255, 255],
    [0, 0, 0],
];

/// Half-strength tint over mask-positive pixels only. A pixel the blend would
/// leave unchanged gets its top bit flipped so every tinted pixel differs.
pub fn overlay(scene: &Scene) -> PixelBuffer {
    let mut out = scene.image().clone();
    for (px, &id) in out.data_mut().chunks_exact_mut(3).zip(scene.mask().data()) {
        if id == 0 {
            continue;
        }
        let tint = PALETTE[(id as usize - 1) % PALETTE.len()];
        let before = [px[0], px[1], px[2]];
        for c in 0..3 {
            px[c] = (px[c] as u16 + tint[c] as u16).div_ceil(2) as u8;
        }
        if before == [px[0], px[1], px[2]] {
            px[0] ^= 0x80;
        }
    }
    out
}

/// `n` rows × 2 tiles of the scene resolution.
pub fn contact_sheet(scenes: &[Scene]) -> anyhow::Result<PixelBuffer> {
    let Some(first) = scenes.first() else {
        anyhow::bail!("a contact sheet needs at least one scene");
    };
    let (w, h) = first.image().dims();
    let mut sheet = PixelBuffer::filled(2 * w, h * scenes.len() as u32, 3, 0)?;
    for (row, scene) in scenes.iter().enumerate() {
        let y0 = row as u32 * h;
        for (col, tile) in [scene.image().clone(), overlay(scene)].iter().enumerate() {
            let x0 = col as u32 * w;
            for y in 0..h {
                for x in 0..w {
                    sheet.pixel_mut(x0 + x, y0 + y).copy_from_slice(tile.pixel(x, y));
                }
            }
        }
    }
    Ok(sheet)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tint_touches_exactly_the_mask() {
        let img = PixelBuffer::from_fn(16, 16, 3, |x, y, c| ((x * 16 + y) as u8).wrapping_mul(c as u8 + 1)).unwrap();
        let mut mask = PixelBuffer::filled(16, 16, 1, 0).unwrap();
        for (i, v) in mask.data_mut().iter_mut().enumerate() {
            *v = [0, 1, 2, 9, 10][i % 5];
        }
        // pixels equal to their tint would be unchanged by blending
        let mut img = img;
        img.pixel_mut(1, 0).copy_from_slice(&PALETTE[0]);
        let scene = Scene::from_parts(img.clone(), mask.clone()).unwrap();
        let ov = overlay(&scene);
        for i in 0..256 {
            let changed = ov.data()[i * 3..i * 3 + 3] != img.data()[i * 3..i * 3 + 3];
            assert_eq!(changed, mask.data()[i] > 0, "pixel {i}");
        }
    }

    #[test]
    fn sheet_layout() {
        let img = PixelBuffer::filled(8, 6, 3, 10).unwrap();
        let mut mask = PixelBuffer::filled(8, 6, 1, 0).unwrap();
        mask.data_mut()[0] = 1;
        let s = Scene::from_parts(img, mask).unwrap();
        let sheet = contact_sheet(&[s.clone(), s.clone(), s]).unwrap();
        assert_eq!(sheet.dims(), (16, 18));
        assert!(contact_sheet(&[]).is_err());
    }
}
