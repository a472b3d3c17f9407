use std::path::{Path, PathBuf};

use super::{GrayscaleImage, LabeledImage};
use crate::error::{Error, Result};
use crate::io::{read_to_string, write_atomic};

pub const LABELS_FILE: &str = "labels.csv";

/// One entry of `labels.csv`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetEntry {
    pub filename: String,
    pub label: usize,
}

pub fn image_filename(index: usize) -> String {
    format!("img_{index:05}.pgm")
}

/// Writes each image as binary PGM plus `labels.csv` (`filename,label`).
pub fn write_dataset(dir: &Path, items: &[LabeledImage]) -> Result<Vec<DatasetEntry>> {
    let mut csv = String::from("filename,label\n");
    let mut entries = Vec::with_capacity(items.len());
    for (i, item) in items.iter().enumerate() {
        let filename = image_filename(i);
        write_atomic(&dir.join(&filename), &item.image.to_pgm())?;
        csv.push_str(&format!("{filename},{}\n", item.label));
        entries.push(DatasetEntry {
            filename,
            label: item.label,
        });
    }
    write_atomic(&dir.join(LABELS_FILE), csv.as_bytes())?;
    Ok(entries)
}

pub fn read_labels(dir: &Path) -> Result<Vec<DatasetEntry>> {
    let path = dir.join(LABELS_FILE);
    let text = read_to_string(&path)?;
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some("filename,label") {
        return Err(Error::Parse(format!(
            "{}: expected header `filename,label`",
            path.display()
        )));
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|line| {
            let (filename, label) = line
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("bad labels.csv row {line:?}")))?;
            let label = label
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad label in row {line:?}")))?;
            Ok(DatasetEntry {
                filename: filename.trim().to_string(),
                label,
            })
        })
        .collect()
}

pub fn entry_path(dir: &Path, entry: &DatasetEntry) -> PathBuf {
    dir.join(&entry.filename)
}

pub fn read_dataset(dir: &Path) -> Result<Vec<(DatasetEntry, GrayscaleImage)>> {
    read_labels(dir)?
        .into_iter()
        .map(|entry| {
            let img = GrayscaleImage::load(&entry_path(dir, &entry))?;
            Ok((entry, img))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::generate_synthetic_dataset;

    #[test]
    fn write_then_read_back() {
        let dir = tempfile::tempdir().unwrap();
        let items = generate_synthetic_dataset(2, 32, 4).unwrap();
        write_dataset(dir.path(), &items).unwrap();
        let back = read_dataset(dir.path()).unwrap();
        assert_eq!(back.len(), 6);
        for ((entry, img), item) in back.iter().zip(&items) {
            assert_eq!(entry.label, item.label);
            assert_eq!(img, &item.image);
        }
    }
}
