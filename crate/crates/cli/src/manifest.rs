//! Versioned JSON manifests.
//!
//! ```json
//! {
//!   "version": 1,
//!   "entries": [
//!     {
//!       "path": "faces/a.ppm",
//!       "boxes": [[10, 12, 90, 100]],
//!       "landmarks": [[31.5, 40.0], ...],
//!       "left_eye": [36, 42],
//!       "right_eye": [42, 48],
//!       "label": 1,
//!       "candidate": "recon/a.imf",
//!       "id": "a"
//!     }
//!   ]
//! }
//! ```
//!
//! Only `path` is required; each command reads the fields it needs. Relative
//! paths resolve against the manifest's directory.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use latentshift::geometry::{BoundingBox, LandmarkSet, Point};
use serde::{Deserialize, Serialize};

use crate::config::resolve;
use crate::error::{CliError, Result};

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Entry {
    pub path: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boxes: Option<Vec<[f64; 4]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub landmarks: Option<Vec<[f64; 2]>>,
    /// Half-open index range `[start, end)` into `landmarks`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub left_eye: Option<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub right_eye: Option<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<u8>,
    /// Second image of an evaluation pair.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidate: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
}

impl Entry {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        Self {
            path: path.into(),
            boxes: None,
            landmarks: None,
            left_eye: None,
            right_eye: None,
            label: None,
            candidate: None,
            id: None,
        }
    }

    pub fn bounding_boxes(&self) -> latentshift::Result<Vec<BoundingBox<f64>>> {
        self.boxes
            .iter()
            .flatten()
            .map(|b| BoundingBox::new(b[0], b[1], b[2], b[3]))
            .collect()
    }

    pub fn landmark_set(&self) -> latentshift::Result<Option<LandmarkSet<f64>>> {
        let Some(points) = &self.landmarks else {
            return Ok(None);
        };
        let points = points.iter().map(|p| Point::new(p[0], p[1])).collect();
        let (dl, dr) = LandmarkSet::<f64>::EYES_68;
        let left = self.left_eye.map_or(dl, |r| r[0]..r[1]);
        let right = self.right_eye.map_or(dr, |r| r[0]..r[1]);
        LandmarkSet::new(points, left, right).map(Some)
    }

    /// File stem used to name this entry's outputs.
    pub fn stem(&self) -> String {
        self.id.clone().unwrap_or_else(|| {
            self.path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "entry".into())
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub version: u32,
    pub entries: Vec<Entry>,
}

impl Manifest {
    pub fn new(entries: Vec<Entry>) -> Self {
        Self {
            version: MANIFEST_VERSION,
            entries,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut m: Manifest = serde_json::from_str(&text).map_err(|source| CliError::Json {
            path: path.to_path_buf(),
            source,
        })?;
        m.validate()?;
        for e in &mut m.entries {
            e.path = resolve(path, &e.path);
            if let Some(c) = &e.candidate {
                e.candidate = Some(resolve(path, c));
            }
        }
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|source| CliError::Json {
            path: path.to_path_buf(),
            source,
        })?;
        fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != MANIFEST_VERSION {
            return Err(CliError::Usage(format!(
                "unsupported manifest version {} (expected {MANIFEST_VERSION})",
                self.version
            )));
        }
        if self.entries.is_empty() {
            return Err(CliError::Usage("manifest has no entries".into()));
        }
        let mut seen = HashSet::new();
        for e in &self.entries {
            if !seen.insert((&e.path, &e.candidate)) {
                return Err(CliError::Usage(format!(
                    "duplicate manifest entry {}",
                    e.path.display()
                )));
            }
            if let Some(l) = e.label {
                if l > 1 {
                    return Err(CliError::Usage(format!(
                        "label {l} is not 0 or 1 ({})",
                        e.path.display()
                    )));
                }
            }
        }
        Ok(())
    }
}
