//! End-to-end glue: image files to persistence diagrams and persistence
//! images (with an on-disk cache), and dataset directories to training samples.

use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::diagram::{to_birth_persistence, BPConfig};
use crate::error::{Error, Result};
use crate::homology::{pairwise_distances, rips_persistence, PersistenceDiagram, RipsConfig};
use crate::ingest::{entry_path, image_to_point_cloud, read_labels, GrayscaleImage, IngestConfig};
use crate::io::write_atomic;
use crate::nn::{InputDims, ModelConfig, Sample, Tensor};
use crate::persistence_image::{assemble_pi, rasterize, MultiChannelPI, PIConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub dataset_dir: PathBuf,
    pub cache_dir: PathBuf,
    pub output_dir: PathBuf,
    pub ingest: IngestConfig,
    pub rips: RipsConfig,
    pub bp: BPConfig,
    pub pi: PIConfig,
    pub model: ModelConfig,
    /// Seeds point-cloud subsampling and the train/validation split.
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            dataset_dir: PathBuf::from("data"),
            cache_dir: PathBuf::from("cache"),
            output_dir: PathBuf::from("out"),
            ingest: IngestConfig::default(),
            rips: RipsConfig::default(),
            bp: BPConfig::default(),
            pi: PIConfig::default(),
            model: ModelConfig::default(),
            seed: 0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.ingest.validate()?;
        self.rips.validate()?;
        self.bp.validate()?;
        self.pi.validate()?;
        self.model.validate()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)
            .map_err(|e| Error::InvalidConfig(format!("config JSON: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes") + "\n"
    }
}

/// Homology of one image: threshold, subsample, Vietoris-Rips persistence.
pub fn image_diagrams(
    img: &GrayscaleImage,
    ingest: &IngestConfig,
    rips: &RipsConfig,
    seed: u64,
) -> Result<(PersistenceDiagram, PersistenceDiagram)> {
    let cloud = image_to_point_cloud(img, ingest.threshold, ingest.max_points, seed)?;
    Ok(rips_persistence(&pairwise_distances(&cloud), rips))
}

/// Birth-persistence transform, rasterization, alignment and max stacking.
pub fn diagrams_to_pi(
    h0: &PersistenceDiagram,
    h1: &PersistenceDiagram,
    bp: &BPConfig,
    pi: &PIConfig,
) -> MultiChannelPI {
    let pi0 = rasterize(&to_birth_persistence(h0, bp), pi);
    let pi1 = rasterize(&to_birth_persistence(h1, bp), pi);
    assemble_pi(&pi0, &pi1)
}

/// Grayscale replicated into the three input channels, `(H, W, 3)`.
pub fn image_tensor(img: &GrayscaleImage) -> Tensor {
    let data = img.pixels().iter().flat_map(|&p| [p, p, p]).collect();
    Tensor::new(vec![img.height(), img.width(), 3], data).expect("shape matches pixels")
}

/// Network input for a persistence image. Dimension-0 planes sum many
/// Gaussians and reach tens, so values are compressed with `ln(1 + v)`.
pub fn pi_tensor(pi: &MultiChannelPI) -> Tensor {
    let data = pi.to_hwc().into_iter().map(f64::ln_1p).collect();
    Tensor::new(vec![pi.height(), pi.width(), 3], data).expect("shape matches planes")
}

fn hex_digest(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Content-addressed store for diagram and persistence-image files.
#[derive(Debug, Clone)]
pub struct Cache {
    dir: PathBuf,
}

/// Where a result came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Computed,
    Cached,
}

impl Cache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn pd_key(content: &[u8], cfg: &PipelineConfig) -> String {
        hex_digest(
            format!(
                "pd|{}|{:?}|{:?}|{}|{}",
                hex_digest(content),
                cfg.rips.epsilon,
                cfg.ingest.threshold,
                cfg.ingest.max_points,
                cfg.seed
            )
            .as_bytes(),
        )
    }

    fn pi_key(content: &[u8], cfg: &PipelineConfig) -> String {
        hex_digest(
            format!(
                "pi|{}|{:?}|{:?}",
                Self::pd_key(content, cfg),
                serde_json::to_string(&cfg.bp).expect("serializable"),
                serde_json::to_string(&cfg.pi).expect("serializable"),
            )
            .as_bytes(),
        )
    }

    fn pd_paths(&self, key: &str) -> [PathBuf; 2] {
        [
            self.dir.join("pd").join(format!("{key}.dim0.csv")),
            self.dir.join("pd").join(format!("{key}.dim1.csv")),
        ]
    }

    fn pi_path(&self, key: &str) -> PathBuf {
        self.dir.join("pi").join(format!("{key}.pimg"))
    }
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn read_cached(path: &Path) -> Option<String> {
    fs::read_to_string(path).ok()
}

/// Persistence diagrams of an image file, served from `cache` when present.
pub fn diagrams_for_file(
    path: &Path,
    cfg: &PipelineConfig,
    cache: Option<&Cache>,
) -> Result<((PersistenceDiagram, PersistenceDiagram), Provenance)> {
    let bytes = read_bytes(path)?;
    if let Some(cache) = cache {
        let [p0, p1] = cache.pd_paths(&Cache::pd_key(&bytes, cfg));
        if let (Some(t0), Some(t1)) = (read_cached(&p0), read_cached(&p1)) {
            let h0 = PersistenceDiagram::from_csv(&t0, 0)?;
            let h1 = PersistenceDiagram::from_csv(&t1, 1)?;
            return Ok(((h0, h1), Provenance::Cached));
        }
    }
    let img = GrayscaleImage::decode(&bytes)?;
    let (h0, h1) = image_diagrams(&img, &cfg.ingest, &cfg.rips, cfg.seed)?;
    if let Some(cache) = cache {
        let [p0, p1] = cache.pd_paths(&Cache::pd_key(&bytes, cfg));
        write_atomic(&p0, h0.to_csv().as_bytes())?;
        write_atomic(&p1, h1.to_csv().as_bytes())?;
    }
    Ok(((h0, h1), Provenance::Computed))
}

/// Three-channel persistence image of an image file, served from `cache`
/// when present. Diagrams are fetched through the same cache.
pub fn pi_for_file(
    path: &Path,
    cfg: &PipelineConfig,
    cache: Option<&Cache>,
) -> Result<(MultiChannelPI, Provenance)> {
    if let Some(cache) = cache {
        let bytes = read_bytes(path)?;
        if let Some(text) = read_cached(&cache.pi_path(&Cache::pi_key(&bytes, cfg))) {
            return Ok((MultiChannelPI::from_text(&text)?, Provenance::Cached));
        }
    }
    let ((h0, h1), _) = diagrams_for_file(path, cfg, cache)?;
    let pi = diagrams_to_pi(&h0, &h1, &cfg.bp, &cfg.pi);
    if let Some(cache) = cache {
        let bytes = read_bytes(path)?;
        write_atomic(
            &cache.pi_path(&Cache::pi_key(&bytes, cfg)),
            pi.to_text().as_bytes(),
        )?;
    }
    Ok((pi, Provenance::Computed))
}

/// Loads every entry of a dataset directory as a training sample. Persistence
/// images are built (in parallel, through the cache) only when `with_pi`.
pub fn load_samples(
    dir: &Path,
    cfg: &PipelineConfig,
    cache: Option<&Cache>,
    with_pi: bool,
) -> Result<Vec<Sample>> {
    let entries = read_labels(dir)?;
    entries
        .par_iter()
        .map(|entry| {
            let path = entry_path(dir, entry);
            let img = GrayscaleImage::load(&path)?;
            let pi = if with_pi {
                let (pi, provenance) = pi_for_file(&path, cfg, cache)?;
                log::info!("{}: persistence image {:?}", path.display(), provenance);
                Some(pi_tensor(&pi))
            } else {
                None
            };
            Ok(Sample {
                image: image_tensor(&img),
                pi,
                label: entry.label,
            })
        })
        .collect()
}

/// Builds samples straight from in-memory images, without touching disk.
pub fn samples_from_images(
    items: &[crate::ingest::LabeledImage],
    cfg: &PipelineConfig,
    with_pi: bool,
) -> Result<Vec<Sample>> {
    items
        .par_iter()
        .map(|item| {
            let pi = if with_pi {
                let (h0, h1) = image_diagrams(&item.image, &cfg.ingest, &cfg.rips, cfg.seed)?;
                Some(pi_tensor(&diagrams_to_pi(&h0, &h1, &cfg.bp, &cfg.pi)))
            } else {
                None
            };
            Ok(Sample {
                image: image_tensor(&item.image),
                pi,
                label: item.label,
            })
        })
        .collect()
}

pub fn input_dims(samples: &[Sample], cfg: &PipelineConfig) -> Result<InputDims> {
    let first = samples
        .first()
        .ok_or_else(|| Error::InvalidConfig("dataset is empty".into()))?;
    let (h, w, _) = first.image.hwc()?;
    Ok(InputDims {
        image_height: h,
        image_width: w,
        pi_resolution: cfg.pi.resolution,
    })
}

/// Seeded 80/20 split of `n` indices into (train, validation).
pub fn split_train_val(n: usize, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2);
    order.shuffle(&mut rng);
    let n_val = n / 5;
    let val = order.split_off(n - n_val);
    (order, val)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{generate_synthetic_dataset, write_dataset};

    #[test]
    fn split_is_deterministic_and_partitions() {
        let (t, v) = split_train_val(50, 3);
        assert_eq!((t.len(), v.len()), (40, 10));
        let mut all: Vec<usize> = t.iter().chain(&v).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..50).collect::<Vec<_>>());
        assert_eq!(split_train_val(50, 3), (t, v));
    }

    #[test]
    fn image_tensor_replicates_gray() {
        let img = GrayscaleImage::new(1, 2, vec![0.25, 1.0]).unwrap();
        assert_eq!(
            image_tensor(&img).data(),
            &[0.25, 0.25, 0.25, 1.0, 1.0, 1.0]
        );
    }

    #[test]
    fn config_json_round_trip_and_rejects_unknown_keys() {
        let cfg = PipelineConfig::default();
        assert_eq!(PipelineConfig::from_json(&cfg.to_json()).unwrap(), cfg);
        assert!(PipelineConfig::from_json(r#"{"sed": 1}"#).is_err());
        let partial = PipelineConfig::from_json(r#"{"seed": 9, "model": {"epochs": 2}}"#).unwrap();
        assert_eq!(
            (partial.seed, partial.model.epochs, partial.model.batch_size),
            (9, 2, 32)
        );
        assert!(PipelineConfig::from_json(
            r#"{"bp": {"tau_x": 0.5, "tau_y": 0.1, "fallback_persistence": 0.5}}"#
        )
        .is_err());
    }

    #[test]
    fn cached_and_fresh_results_agree() {
        let dir = tempfile::tempdir().unwrap();
        let items = generate_synthetic_dataset(1, 32, 2).unwrap();
        write_dataset(dir.path(), &items).unwrap();
        let cfg = PipelineConfig::default();
        let cache = Cache::new(dir.path().join("cache"));
        let path = dir.path().join("img_00001.pgm");
        let (fresh, p1) = pi_for_file(&path, &cfg, Some(&cache)).unwrap();
        let (cached, p2) = pi_for_file(&path, &cfg, Some(&cache)).unwrap();
        let (uncached, _) = pi_for_file(&path, &cfg, None).unwrap();
        assert_eq!((p1, p2), (Provenance::Computed, Provenance::Cached));
        assert_eq!(fresh.to_text(), cached.to_text());
        assert_eq!(fresh, uncached);
        let ((h0, _), p) = diagrams_for_file(&path, &cfg, Some(&cache)).unwrap();
        assert_eq!(p, Provenance::Cached);
        assert!(!h0.is_empty());

        let other = PipelineConfig { seed: 1, ..cfg };
        let (_, p3) = pi_for_file(&path, &other, Some(&cache)).unwrap();
        assert_eq!(p3, Provenance::Computed);
    }
}
