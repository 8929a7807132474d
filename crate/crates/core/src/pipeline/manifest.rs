//! Dataset manifests and split-audited access.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Mutex;

use crate::raster::{load_image, load_mask};
use crate::{Error, GreyImage, LabelMask, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "train" | "training" => Ok(Split::Train),
            "validation" | "val" | "valid" => Ok(Split::Validation),
            "test" => Ok(Split::Test),
            other => Err(Error::Manifest(format!("unknown split {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub image: PathBuf,
    pub mask: PathBuf,
    pub split: Split,
}

impl ManifestEntry {
    /// File stem of the image, used as the image id in outputs.
    pub fn id(&self) -> String {
        self.image
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| self.image.display().to_string())
    }
}

/// `image,mask,split` rows; relative paths resolve against the manifest's
/// directory. A header row and `#` comments are allowed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut entries = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols.len() != 3 {
                return Err(Error::Manifest(format!("line {}: expected image,mask,split", n + 1)));
            }
            if entries.is_empty() && cols[0].eq_ignore_ascii_case("image") {
                continue;
            }
            let split = cols[2]
                .parse()
                .map_err(|e| Error::Manifest(format!("line {}: {e}", n + 1)))?;
            entries.push(ManifestEntry {
                image: base.join(cols[0]),
                mask: base.join(cols[1]),
                split,
            });
        }
        let m = DatasetManifest { entries };
        m.check_disjoint()?;
        Ok(m)
    }

    /// Relative-path CSV form, as written next to generated data.
    pub fn to_csv(&self, base: &Path) -> String {
        let mut s = String::from("image,mask,split\n");
        for e in &self.entries {
            let rel = |p: &Path| p.strip_prefix(base).unwrap_or(p).to_string_lossy().replace('\\', "/");
            s.push_str(&format!("{},{},{}\n", rel(&e.image), rel(&e.mask), e.split));
        }
        s
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(move |e| e.split == split)
    }

    pub fn count(&self, split: Split) -> usize {
        self.split(split).count()
    }

    /// Fails if an image appears in more than one split.
    pub fn check_disjoint(&self) -> Result<()> {
        let mut seen: BTreeMap<&Path, Split> = BTreeMap::new();
        for e in &self.entries {
            if let Some(prev) = seen.insert(&e.image, e.split) {
                if prev != e.split {
                    return Err(Error::SplitLeakage(format!(
                        "{} is listed in both {prev} and {}",
                        e.image.display(),
                        e.split
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Sample {
    pub id: String,
    pub image: GreyImage,
    pub mask: LabelMask,
}

/// Manifest access that records every split read and refuses the test
/// split until it is explicitly unlocked for the final evaluation.
#[derive(Debug)]
pub struct Dataset {
    manifest: DatasetManifest,
    test_unlocked: Mutex<bool>,
    reads: Mutex<Vec<Split>>,
}

impl Dataset {
    pub fn new(manifest: DatasetManifest) -> Result<Self> {
        manifest.check_disjoint()?;
        Ok(Dataset {
            manifest,
            test_unlocked: Mutex::new(false),
            reads: Mutex::new(Vec::new()),
        })
    }

    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        Self::new(DatasetManifest::load(path)?)
    }

    pub fn manifest(&self) -> &DatasetManifest {
        &self.manifest
    }

    pub(crate) fn unlock_test(&self) {
        *self.test_unlocked.lock().expect("lock") = true;
    }

    /// Splits read so far, in order.
    pub fn reads(&self) -> Vec<Split> {
        self.reads.lock().expect("lock").clone()
    }

    pub fn test_was_read(&self) -> bool {
        self.reads().contains(&Split::Test)
    }

    pub fn load(&self, split: Split) -> Result<Vec<Sample>> {
        if split == Split::Test && !*self.test_unlocked.lock().expect("lock") {
            return Err(Error::SplitLeakage(
                "test split requested before the final evaluation".into(),
            ));
        }
        self.reads.lock().expect("lock").push(split);
        self.manifest
            .split(split)
            .map(|e| {
                let image = load_image(&e.image)?;
                let mask = load_mask(&e.mask)?;
                if !mask.matches(&image) {
                    return Err(Error::Manifest(format!(
                        "{}: mask is {}x{} but image is {}x{}",
                        e.id(),
                        mask.width(),
                        mask.height(),
                        image.width(),
                        image.height()
                    )));
                }
                Ok(Sample {
                    id: e.id(),
                    image,
                    mask,
                })
            })
            .collect()
    }
}
