use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{load_csv, load_idx, Dataset, ImageDataset};
use crate::error::{Error, Result};

/// One named dataset: either a CSV file with target columns, or an IDX
/// image/label pair. Relative paths resolve against the manifest's directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub targets: Option<Vec<isize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub images: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<PathBuf>,
}

/// JSON object mapping dataset name to [`ManifestEntry`], e.g.
///
/// ```json
/// { "boston": { "csv": "housing.csv", "targets": [-1] },
///   "mnist":  { "images": "train-images.idx", "labels": "train-labels.idx" } }
/// ```
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DatasetManifest {
    pub base_dir: PathBuf,
    pub entries: BTreeMap<String, ManifestEntry>,
}

impl DatasetManifest {
    pub fn from_json(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let entries: BTreeMap<String, ManifestEntry> = serde_json::from_str(text)?;
        for (name, e) in &entries {
            let csv = e.csv.is_some();
            let idx = e.images.is_some() && e.labels.is_some();
            if csv == idx || (csv && (e.images.is_some() || e.labels.is_some())) {
                return Err(Error::Config(format!(
                    "manifest entry {name:?} needs either `csv` or both `images` and `labels`"
                )));
            }
        }
        Ok(DatasetManifest {
            base_dir: base_dir.into(),
            entries,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_json(&text, base)
    }

    fn entry(&self, name: &str) -> Result<&ManifestEntry> {
        self.entries
            .get(name)
            .ok_or_else(|| Error::Config(format!("dataset {name:?} is not in the manifest")))
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    /// Loads a CSV entry; the last column is the target unless stated.
    pub fn regression(&self, name: &str) -> Result<Dataset> {
        let e = self.entry(name)?;
        let path = e
            .csv
            .as_ref()
            .ok_or_else(|| Error::Config(format!("dataset {name:?} is not a CSV entry")))?;
        let targets = e.targets.clone().unwrap_or_else(|| vec![-1]);
        let mut d = load_csv(self.resolve(path), &targets)?;
        d.name = name.to_string();
        Ok(d)
    }

    pub fn images(&self, name: &str) -> Result<ImageDataset> {
        let e = self.entry(name)?;
        match (&e.images, &e.labels) {
            (Some(i), Some(l)) => load_idx(self.resolve(i), self.resolve(l)),
            _ => Err(Error::Config(format!("dataset {name:?} is not an IDX entry"))),
        }
    }
}
