use std::path::Path;

use scenesynth::manifest::write_png;
use scenesynth::metrics::{dsc_batch, PredMode};
use scenesynth::PixelBuffer;

fn mask(path: &Path, values: &[u8]) {
    write_png(path, &PixelBuffer::new(values.len() as u32, 1, 1, values.to_vec()).unwrap()).unwrap();
}

#[test]
fn mean_over_pairs_and_unpaired_listing() {
    let (pred, gt) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    // |A|=4, |B|=4, overlap 2 -> 0.5
    mask(&gt.path().join("a.png"), &[1, 1, 1, 1, 0, 0, 0, 0]);
    mask(&pred.path().join("a.png"), &[0, 0, 255, 255, 255, 255, 0, 0]);
    mask(&gt.path().join("b.png"), &[0, 3, 3, 0]);
    mask(&pred.path().join("b.png"), &[0, 200, 200, 0]);
    mask(&pred.path().join("only_pred.png"), &[0]);
    mask(&gt.path().join("only_gt.png"), &[0]);
    let r = dsc_batch(pred.path(), gt.path(), PredMode::Auto).unwrap();
    assert_eq!(r.pairs, 2);
    assert_eq!(r.mean, 0.75);
    assert_eq!(r.per_image[0].dsc, 0.5);
    assert_eq!(r.per_image[1].dsc, 1.0);
    assert_eq!(r.unpaired, vec!["pred/only_pred.png", "gt/only_gt.png"]);
}

#[test]
fn identical_directories_score_one() {
    let dir = tempfile::tempdir().unwrap();
    mask(&dir.path().join("x.png"), &[0, 4, 4, 9]);
    mask(&dir.path().join("y.png"), &[0, 0, 0, 0]);
    let r = dsc_batch(dir.path(), dir.path(), PredMode::Auto).unwrap();
    assert_eq!(r.mean, 1.0);
}

#[test]
fn mismatched_sizes_are_reported_not_averaged() {
    let (pred, gt) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    mask(&gt.path().join("a.png"), &[1, 1]);
    mask(&pred.path().join("a.png"), &[255, 255]);
    mask(&gt.path().join("b.png"), &[1, 1, 1]);
    mask(&pred.path().join("b.png"), &[255]);
    let r = dsc_batch(pred.path(), gt.path(), PredMode::Prob).unwrap();
    assert_eq!((r.pairs, r.mean, r.errors.len()), (1, 1.0, 1));
}

#[test]
fn no_pairs_is_an_error() {
    let (pred, gt) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    mask(&pred.path().join("a.png"), &[1]);
    mask(&gt.path().join("b.png"), &[1]);
    assert!(dsc_batch(pred.path(), gt.path(), PredMode::Auto).is_err());
}
