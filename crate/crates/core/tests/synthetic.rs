//! Topological signatures of the synthetic classes through the full
//! image -> point cloud -> persistence chain.

use tdacnn::ingest::{generate_synthetic_dataset, image_to_point_cloud, IngestConfig};
use tdacnn::pipeline::{image_diagrams, PipelineConfig};

const LOOP: f64 = 0.1;

fn loop_counts(seed: u64) -> [Vec<usize>; 3] {
    let cfg = PipelineConfig::default();
    let mut counts: [Vec<usize>; 3] = Default::default();
    for item in generate_synthetic_dataset(30, 64, seed).unwrap() {
        let (_, h1) = image_diagrams(&item.image, &cfg.ingest, &cfg.rips, cfg.seed).unwrap();
        counts[item.label].push(h1.count_persistent(LOOP));
    }
    counts
}

#[test]
fn class_loop_counts() {
    let [disks, annuli, pairs] = loop_counts(21);
    let frac = |v: &[usize], f: &dyn Fn(usize) -> bool| {
        v.iter().filter(|&&c| f(c)).count() as f64 / v.len() as f64
    };
    assert!(annuli.iter().all(|&c| c >= 1), "annulus counts {annuli:?}");
    assert!(frac(&disks, &|c| c == 0) >= 0.95, "disk counts {disks:?}");
    assert!(
        frac(&pairs, &|c| c >= 2) >= 0.9,
        "two-annuli counts {pairs:?}"
    );
}

#[test]
fn clouds_stay_in_the_unit_square() {
    let cfg = IngestConfig::default();
    for (i, item) in generate_synthetic_dataset(5, 48, 2)
        .unwrap()
        .iter()
        .enumerate()
    {
        let cloud =
            image_to_point_cloud(&item.image, cfg.threshold, cfg.max_points, i as u64).unwrap();
        let foreground = item
            .image
            .pixels()
            .iter()
            .filter(|&&p| p >= cfg.threshold)
            .count();
        assert!(cloud.len() <= foreground.min(cfg.max_points));
        assert!(cloud
            .points()
            .iter()
            .all(|&(x, y)| (0.0..=1.0).contains(&x) && (0.0..=1.0).contains(&y)));
    }
}
