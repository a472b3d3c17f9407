//! Image loading, point-cloud extraction and the synthetic dataset.

mod cloud;
mod dataset;
mod image;
mod synthetic;

pub use cloud::{image_to_point_cloud, IngestConfig, PointCloud};
pub use dataset::{
    entry_path, image_filename, read_dataset, read_labels, write_dataset, DatasetEntry, LABELS_FILE,
};
pub use image::GrayscaleImage;
pub use synthetic::{
    generate_synthetic_dataset, LabeledImage, CLASS_NAMES, NUM_CLASSES, SALT_PROBABILITY,
};
