//! Field names of the manifest are a published format; these goldens pin them.

use std::collections::BTreeSet;

use scenesynth::augmix::MixDraw;
use scenesynth::augops::{AugOpInstance, AugPlan, OpName};
use scenesynth::blend::Placement;
use scenesynth::composer::{RecipeConfig, RecipeName, ScenePlans, SceneRecord};
use scenesynth::demo::demo_kit;
use scenesynth::manifest::ManifestHeader;

fn sample_record() -> SceneRecord {
    SceneRecord {
        index: 7,
        image_path: "images/000007.png".into(),
        mask_path: "masks/000007.png".into(),
        classes: BTreeSet::from([2, 5]),
        seed: 12345,
        bg_variant: 3,
        fg_variants: vec![40, 101],
        placements: vec![
            Placement {
                tx: -12.5,
                ty: 30.0,
                scale: 0.75,
                rotation: 90.0,
                z_order: 0,
            },
            Placement {
                tx: 0.0,
                ty: 0.0,
                scale: 1.0,
                rotation: -45.0,
                z_order: 1,
            },
        ],
        plans: ScenePlans {
            background: AugPlan {
                seed: 1,
                ops: vec![AugOpInstance::new(OpName::Flip, &[("axis", 1.0)])],
            },
            foreground: vec![AugPlan::identity(2), AugPlan::identity(3)],
        },
        mix: Some(MixDraw {
            m: 0.25,
            weights: vec![0.5, 0.5],
            chains: vec![
                AugPlan {
                    seed: 4,
                    ops: vec![AugOpInstance::new(OpName::Posterize, &[("bits", 3.0)])],
                },
                AugPlan {
                    seed: 5,
                    ops: vec![AugOpInstance::new(OpName::Equalize, &[])],
                },
            ],
        }),
    }
}

#[test]
fn record_layout_matches_golden() {
    let json = serde_json::to_string_pretty(&sample_record()).unwrap();
    let golden = include_str!("golden/record.json");
    assert_eq!(json.trim(), golden.trim());
    let back: SceneRecord = serde_json::from_str(golden).unwrap();
    assert_eq!(back, sample_record());
}

#[test]
fn header_keys_match_golden() {
    let kit = demo_kit(1, false).unwrap();
    let recipe = RecipeConfig::preset(RecipeName::A);
    let header = ManifestHeader::new(&recipe, &kit.registry, &kit.background, &kit.foreground, None).unwrap();
    let value = serde_json::to_value(&header).unwrap();
    let mut keys = Vec::new();
    for (k, v) in value.as_object().unwrap() {
        keys.push(k.clone());
        if let Some(obj) = v.as_object() {
            keys.extend(obj.keys().map(|sub| format!("{k}.{sub}")));
        }
    }
    let golden: Vec<&str> = include_str!("golden/header_keys.txt").lines().collect();
    assert_eq!(keys, golden);
}
