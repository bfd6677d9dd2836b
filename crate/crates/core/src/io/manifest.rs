//! JSON dataset manifest. Paths inside are relative to the manifest file.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::container::{read_container, with_num_classes, ContainerError, Grid};

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{path}: {message}")]
    Json { path: String, message: String },
    #[error("image {id}: {message}")]
    Entry { id: String, message: String },
    #[error("image {id}: {source}")]
    Container { id: String, source: ContainerError },
    #[error("manifest declares no classes")]
    NoClasses,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassInfo {
    pub name: String,
    pub color: [u8; 3],
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageEntry {
    pub id: String,
    pub height: usize,
    pub width: usize,
    /// Predicted edge probabilities, one plane per class.
    pub prob: String,
    /// Annotated (possibly noisy) labels.
    pub labels: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refined: Option<String>,
    /// Single-plane input image for the built-in predictor.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image: Option<String>,
    /// Clean labels, when known (synthetic data).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub classes: Vec<ClassInfo>,
    pub images: Vec<ImageEntry>,
}

impl DatasetManifest {
    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn colors(&self) -> Vec<[u8; 3]> {
        self.classes.iter().map(|c| c.color).collect()
    }

    pub fn load(path: &Path) -> Result<Self, ManifestError> {
        let text = fs::read_to_string(path).map_err(|e| ManifestError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let m: Self = serde_json::from_str(&text).map_err(|e| ManifestError::Json {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        if m.classes.is_empty() {
            return Err(ManifestError::NoClasses);
        }
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<(), ManifestError> {
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        fs::write(path, text).map_err(|e| ManifestError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }

    /// Checks that every referenced file exists and matches the declared
    /// dimensions and class count.
    pub fn validate(&self, base: &Path) -> Result<(), ManifestError> {
        for e in &self.images {
            let mut files = vec![("prob", &e.prob), ("labels", &e.labels)];
            for (name, opt) in [
                ("refined", &e.refined),
                ("image", &e.image),
                ("truth", &e.truth),
            ] {
                if let Some(p) = opt {
                    files.push((name, p));
                }
            }
            for (name, rel) in files {
                let grid = read_container(&resolve(base, rel)).map_err(|source| {
                    ManifestError::Container {
                        id: e.id.clone(),
                        source,
                    }
                })?;
                let entry_err = |message: String| ManifestError::Entry {
                    id: e.id.clone(),
                    message,
                };
                let dims = match (&grid, name) {
                    (Grid::Prob(p), "image") if p.num_classes() == 1 => p.dims(),
                    (Grid::Prob(p), "prob") if p.num_classes() == self.num_classes() => p.dims(),
                    (Grid::Labels(l), "labels" | "refined" | "truth") => {
                        with_num_classes(l.clone(), self.num_classes()).map_err(|source| {
                            ManifestError::Container {
                                id: e.id.clone(),
                                source,
                            }
                        })?;
                        l.dims()
                    }
                    (Grid::Prob(p), _) => {
                        return Err(entry_err(format!(
                            "{name} is an f32 grid with {} planes",
                            p.num_classes()
                        )))
                    }
                    (Grid::Labels(_), _) => {
                        return Err(entry_err(format!("{name} is a label bitfield")))
                    }
                };
                if dims != (e.height, e.width) {
                    return Err(entry_err(format!(
                        "{name} is {}x{}, manifest says {}x{}",
                        dims.0, dims.1, e.height, e.width
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Path of `rel` relative to the directory holding the manifest.
pub fn resolve(base: &Path, rel: &str) -> PathBuf {
    base.join(rel)
}

/// Directory containing `manifest_path`.
pub fn base_dir(manifest_path: &Path) -> PathBuf {
    manifest_path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default()
}

fn palette(entries: &[(&str, [u8; 3])]) -> Vec<ClassInfo> {
    entries
        .iter()
        .map(|&(name, color)| ClassInfo {
            name: name.to_string(),
            color,
        })
        .collect()
}

/// The 20 object classes with the usual VOC colours.
pub fn sbd_palette() -> Vec<ClassInfo> {
    palette(&[
        ("aeroplane", [128, 0, 0]),
        ("bicycle", [0, 128, 0]),
        ("bird", [128, 128, 0]),
        ("boat", [0, 0, 128]),
        ("bottle", [128, 0, 128]),
        ("bus", [0, 128, 128]),
        ("car", [128, 128, 128]),
        ("cat", [64, 0, 0]),
        ("chair", [192, 0, 0]),
        ("cow", [64, 128, 0]),
        ("diningtable", [192, 128, 0]),
        ("dog", [64, 0, 128]),
        ("horse", [192, 0, 128]),
        ("motorbike", [64, 128, 128]),
        ("person", [192, 128, 128]),
        ("pottedplant", [0, 64, 0]),
        ("sheep", [128, 64, 0]),
        ("sofa", [0, 192, 0]),
        ("train", [128, 192, 0]),
        ("tvmonitor", [0, 64, 128]),
    ])
}

/// The 19 evaluated street-scene classes with their standard colours.
pub fn cityscapes_palette() -> Vec<ClassInfo> {
    palette(&[
        ("road", [128, 64, 128]),
        ("sidewalk", [244, 35, 232]),
        ("building", [70, 70, 70]),
        ("wall", [102, 102, 156]),
        ("fence", [190, 153, 153]),
        ("pole", [153, 153, 153]),
        ("traffic light", [250, 170, 30]),
        ("traffic sign", [220, 220, 0]),
        ("vegetation", [107, 142, 35]),
        ("terrain", [152, 251, 152]),
        ("sky", [70, 130, 180]),
        ("person", [220, 20, 60]),
        ("rider", [255, 0, 0]),
        ("car", [0, 0, 142]),
        ("truck", [0, 0, 70]),
        ("bus", [0, 60, 100]),
        ("train", [0, 80, 100]),
        ("motorcycle", [0, 0, 230]),
        ("bicycle", [119, 11, 32]),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{MultiLabelMap, ProbMap};
    use crate::io::container::write_container;

    #[test]
    fn palettes() {
        assert_eq!(sbd_palette().len(), 20);
        assert_eq!(cityscapes_palette().len(), 19);
        assert_eq!(cityscapes_palette()[13].color, [0, 0, 142]);
    }

    #[test]
    fn round_trip_and_validate() {
        let dir = tempfile::tempdir().unwrap();
        let classes = sbd_palette()[..2].to_vec();
        write_container(
            &Grid::Prob(ProbMap::filled(4, 5, 2, 0.5).unwrap()),
            &dir.path().join("p.sebg"),
        )
        .unwrap();
        write_container(
            &Grid::Labels(MultiLabelMap::new(4, 5, 2).unwrap()),
            &dir.path().join("l.sebg"),
        )
        .unwrap();
        let m = DatasetManifest {
            classes,
            images: vec![ImageEntry {
                id: "a".into(),
                height: 4,
                width: 5,
                prob: "p.sebg".into(),
                labels: "l.sebg".into(),
                refined: None,
                image: None,
                truth: None,
            }],
        };
        let path = dir.path().join("m.json");
        m.save(&path).unwrap();
        let back = DatasetManifest::load(&path).unwrap();
        assert_eq!(back, m);
        back.validate(&base_dir(&path)).unwrap();

        let mut bad = m.clone();
        bad.images[0].width = 6;
        assert!(matches!(
            bad.validate(dir.path()),
            Err(ManifestError::Entry { .. })
        ));
        let mut missing = m;
        missing.images[0].labels = "nope.sebg".into();
        assert!(matches!(
            missing.validate(dir.path()),
            Err(ManifestError::Container { .. })
        ));
    }
}
