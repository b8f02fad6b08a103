//! Label taxonomies, palette colors, cross-dataset remap tables and class
//! histograms.
//!
//! Four taxonomies ship built in: `carla12` (12 simulator classes plus
//! unlabelled), `kitti19` (19 urban driving classes plus unlabelled),
//! `semantic3d8` (8 terrestrial-scan classes plus unlabelled) and `common4`
//! (the shared Building/Road/Car/Vegetation target). Remapping is always
//! total: ids without an explicit pair sink to unlabelled (0).

use std::path::Path;

use thiserror::Error;

use crate::cloud::{LabelId, PointCloud, Rgb};

#[derive(Debug, Error)]
pub enum TaxonomyError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("taxonomy '{name}' has no classes")]
    Empty { name: String },
    #[error("taxonomy '{name}': class ids must be contiguous from 0 (found {found} at position {position})")]
    NonContiguousIds {
        name: String,
        found: LabelId,
        position: usize,
    },
    #[error("taxonomy '{name}': id 0 must be named 'unlabelled', found '{found}'")]
    BadUnlabelled { name: String, found: String },
    #[error("taxonomy '{name}': color ({r},{g},{b}) is used by more than one class")]
    DuplicateColor { name: String, r: u8, g: u8, b: u8 },
    #[error("label {id} is not defined in taxonomy '{taxonomy}'")]
    InvalidLabel { taxonomy: String, id: LabelId },
    #[error("cloud is labeled in '{got}' but '{expected}' was required")]
    TaxonomyMismatch { expected: String, got: String },
    #[error("cloud has no labels")]
    MissingLabels,
    #[error("remap pair {from}->{to} is invalid: {reason}")]
    BadRemapPair {
        from: LabelId,
        to: LabelId,
        reason: String,
    },
    #[error("parse error at line {line}: {what}")]
    Parse { line: usize, what: String },
}

/// One class of a taxonomy: id, display name and palette color.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassDef {
    pub id: LabelId,
    pub name: String,
    pub color: Rgb,
}

/// Lowercases and strips non-alphanumerics so that "Side-walk", "sidewalk"
/// and "Sidewalk" all compare equal.
fn normalize(name: &str) -> String {
    name.chars()
        .filter(|c| c.is_ascii_alphanumeric())
        .map(|c| c.to_ascii_lowercase())
        .collect()
}

/// An ordered set of semantic classes with unique palette colors.
#[derive(Debug, Clone, PartialEq)]
pub struct Taxonomy {
    name: String,
    classes: Vec<ClassDef>,
}

impl Taxonomy {
    pub fn new(name: impl Into<String>, classes: Vec<ClassDef>) -> Result<Taxonomy, TaxonomyError> {
        let name = name.into();
        if classes.is_empty() {
            return Err(TaxonomyError::Empty { name });
        }
        for (i, class) in classes.iter().enumerate() {
            if class.id as usize != i {
                return Err(TaxonomyError::NonContiguousIds {
                    name: name.clone(),
                    found: class.id,
                    position: i,
                });
            }
        }
        let zero = normalize(&classes[0].name);
        if zero != "unlabelled" && zero != "unlabeled" {
            return Err(TaxonomyError::BadUnlabelled {
                name,
                found: classes[0].name.clone(),
            });
        }
        for (i, a) in classes.iter().enumerate() {
            for b in &classes[i + 1..] {
                if a.color == b.color {
                    return Err(TaxonomyError::DuplicateColor {
                        name: name.clone(),
                        r: a.color.r,
                        g: a.color.g,
                        b: a.color.b,
                    });
                }
            }
        }
        Ok(Taxonomy { name, classes })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Number of classes including unlabelled.
    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    pub fn classes(&self) -> &[ClassDef] {
        &self.classes
    }

    pub fn class(&self, id: LabelId) -> Option<&ClassDef> {
        self.classes.get(id as usize)
    }

    pub fn contains(&self, id: LabelId) -> bool {
        (id as usize) < self.classes.len()
    }

    /// Case- and punctuation-insensitive name lookup.
    pub fn id_of(&self, name: &str) -> Option<LabelId> {
        let wanted = normalize(name);
        self.classes
            .iter()
            .find(|c| normalize(&c.name) == wanted)
            .map(|c| c.id)
    }

    pub fn color_of(&self, id: LabelId) -> Option<Rgb> {
        self.class(id).map(|c| c.color)
    }

    pub fn validate_labels(&self, labels: &[LabelId]) -> Result<(), TaxonomyError> {
        for &id in labels {
            if !self.contains(id) {
                return Err(TaxonomyError::InvalidLabel {
                    taxonomy: self.name.clone(),
                    id,
                });
            }
        }
        Ok(())
    }

    /// Serializes as `id<TAB>name<TAB>r,g,b` lines.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for c in &self.classes {
            out.push_str(&format!(
                "{}\t{}\t{},{},{}\n",
                c.id, c.name, c.color.r, c.color.g, c.color.b
            ));
        }
        out
    }

    /// Parses the `id<TAB>name<TAB>r,g,b` format; blank lines and `#`
    /// comments are skipped. Lines may appear in any order.
    pub fn from_text(name: impl Into<String>, text: &str) -> Result<Taxonomy, TaxonomyError> {
        let mut parsed: Vec<(LabelId, ClassDef)> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(TaxonomyError::Parse {
                    line: lineno + 1,
                    what: format!("expected 3 tab-separated fields, got {}", fields.len()),
                });
            }
            let id: LabelId = fields[0].parse().map_err(|_| TaxonomyError::Parse {
                line: lineno + 1,
                what: format!("bad id '{}'", fields[0]),
            })?;
            let rgb: Vec<&str> = fields[2].split(',').collect();
            if rgb.len() != 3 {
                return Err(TaxonomyError::Parse {
                    line: lineno + 1,
                    what: format!("bad color '{}'", fields[2]),
                });
            }
            let mut channels = [0u8; 3];
            for (i, part) in rgb.iter().enumerate() {
                channels[i] = part.trim().parse().map_err(|_| TaxonomyError::Parse {
                    line: lineno + 1,
                    what: format!("bad color channel '{part}'"),
                })?;
            }
            parsed.push((
                id,
                ClassDef {
                    id,
                    name: fields[1].to_string(),
                    color: Rgb::new(channels[0], channels[1], channels[2]),
                },
            ));
        }
        parsed.sort_by_key(|(id, _)| *id);
        Taxonomy::new(name, parsed.into_iter().map(|(_, c)| c).collect())
    }

    pub fn load(name: impl Into<String>, path: &Path) -> Result<Taxonomy, TaxonomyError> {
        Taxonomy::from_text(name, &std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), TaxonomyError> {
        crate::io::write_atomic(path, self.to_text().as_bytes())?;
        Ok(())
    }
}

fn class(id: LabelId, name: &str, r: u8, g: u8, b: u8) -> ClassDef {
    ClassDef {
        id,
        name: name.to_string(),
        color: Rgb::new(r, g, b),
    }
}

/// The 12 simulator classes plus unlabelled, with the simulator palette.
pub fn carla12() -> Taxonomy {
    Taxonomy::new(
        "carla12",
        vec![
            class(0, "Unlabeled", 0, 0, 0),
            class(1, "Building", 70, 70, 70),
            class(2, "Fence", 190, 153, 153),
            class(3, "Other", 72, 0, 90),
            class(4, "Pedestrian", 220, 20, 60),
            class(5, "Pole", 153, 153, 153),
            class(6, "Road-line", 157, 234, 50),
            class(7, "Road", 128, 64, 128),
            class(8, "Sidewalk", 244, 35, 232),
            class(9, "Vegetation", 107, 142, 35),
            class(10, "Car", 0, 0, 255),
            class(11, "Wall", 102, 102, 156),
            class(12, "Traffic-sign", 220, 220, 0),
        ],
    )
    .expect("builtin carla12 is valid")
}

/// The 19 urban driving classes plus unlabelled.
pub fn kitti19() -> Taxonomy {
    Taxonomy::new(
        "kitti19",
        vec![
            class(0, "Unlabelled", 0, 0, 0),
            class(1, "Road", 128, 64, 128),
            class(2, "Sidewalk", 244, 35, 232),
            class(3, "Building", 70, 70, 70),
            class(4, "Wall", 102, 102, 156),
            class(5, "Fence", 190, 153, 153),
            class(6, "Pole", 153, 153, 153),
            class(7, "Traffic-light", 250, 170, 30),
            class(8, "Traffic-sign", 220, 220, 0),
            class(9, "Vegetation", 107, 142, 35),
            class(10, "Terrain", 152, 251, 152),
            class(11, "Sky", 70, 130, 180),
            class(12, "Person", 220, 20, 60),
            class(13, "Rider", 255, 0, 0),
            class(14, "Car", 0, 0, 142),
            class(15, "Truck", 0, 0, 70),
            class(16, "Bus", 0, 60, 100),
            class(17, "Train", 0, 80, 100),
            class(18, "Motorcycle", 0, 0, 230),
            class(19, "Bicycle", 119, 11, 32),
        ],
    )
    .expect("builtin kitti19 is valid")
}

/// The 8 terrestrial-laser-scan classes plus unlabelled.
pub fn semantic3d8() -> Taxonomy {
    Taxonomy::new(
        "semantic3d8",
        vec![
            class(0, "Unlabelled", 0, 0, 0),
            class(1, "Man-made Terrain", 0, 0, 255),
            class(2, "Natural Terrain", 128, 0, 0),
            class(3, "High Vegetation", 255, 0, 255),
            class(4, "Low Vegetation", 0, 128, 0),
            class(5, "Buildings", 255, 0, 0),
            class(6, "Hard Scape", 128, 0, 128),
            class(7, "Scanning Artefacts", 0, 0, 128),
            class(8, "Cars", 128, 128, 0),
        ],
    )
    .expect("builtin semantic3d8 is valid")
}

/// The shared 4-class evaluation target plus unlabelled.
pub fn common4() -> Taxonomy {
    Taxonomy::new(
        "common4",
        vec![
            class(0, "Unlabelled", 0, 0, 0),
            class(1, "Building", 70, 70, 70),
            class(2, "Road", 128, 64, 128),
            class(3, "Car", 0, 0, 255),
            class(4, "Vegetation", 107, 142, 35),
        ],
    )
    .expect("builtin common4 is valid")
}

/// All four built-in taxonomies.
pub fn builtin_taxonomies() -> Vec<Taxonomy> {
    vec![carla12(), kitti19(), semantic3d8(), common4()]
}

/// Looks up a built-in taxonomy by name (case-insensitive).
pub fn builtin_taxonomy(name: &str) -> Option<Taxonomy> {
    match normalize(name).as_str() {
        "carla12" => Some(carla12()),
        "kitti19" => Some(kitti19()),
        "semantic3d8" => Some(semantic3d8()),
        "common4" => Some(common4()),
        _ => None,
    }
}

/// A total map from source label ids to target label ids.
///
/// Ids without an explicit pair map to unlabelled (0), and 0 always maps
/// to 0.
#[derive(Debug, Clone)]
pub struct RemapTable {
    source: Taxonomy,
    target: Taxonomy,
    mapping: Vec<LabelId>,
}

impl RemapTable {
    pub fn new(
        source: Taxonomy,
        target: Taxonomy,
        pairs: &[(LabelId, LabelId)],
    ) -> Result<RemapTable, TaxonomyError> {
        let mut mapping = vec![0; source.class_count()];
        for &(from, to) in pairs {
            if !source.contains(from) {
                return Err(TaxonomyError::BadRemapPair {
                    from,
                    to,
                    reason: format!("source id not in '{}'", source.name()),
                });
            }
            if !target.contains(to) {
                return Err(TaxonomyError::BadRemapPair {
                    from,
                    to,
                    reason: format!("target id not in '{}'", target.name()),
                });
            }
            if from == 0 && to != 0 {
                return Err(TaxonomyError::BadRemapPair {
                    from,
                    to,
                    reason: "unlabelled must map to unlabelled".to_string(),
                });
            }
            mapping[from as usize] = to;
        }
        Ok(RemapTable { source, target, mapping })
    }

    /// Identity table over one taxonomy.
    pub fn identity(taxonomy: &Taxonomy) -> RemapTable {
        let pairs: Vec<(LabelId, LabelId)> =
            (0..taxonomy.class_count() as LabelId).map(|i| (i, i)).collect();
        RemapTable::new(taxonomy.clone(), taxonomy.clone(), &pairs)
            .expect("identity table is valid")
    }

    pub fn source(&self) -> &Taxonomy {
        &self.source
    }

    pub fn target(&self) -> &Taxonomy {
        &self.target
    }

    /// Maps one source id. Total over the source taxonomy.
    pub fn remap(&self, id: LabelId) -> Result<LabelId, TaxonomyError> {
        self.mapping
            .get(id as usize)
            .copied()
            .ok_or_else(|| TaxonomyError::InvalidLabel {
                taxonomy: self.source.name().to_string(),
                id,
            })
    }

    /// Replaces every label through the table; positions and colors are
    /// untouched and the output cloud is declared in the target taxonomy.
    pub fn remap_cloud(&self, cloud: &PointCloud) -> Result<PointCloud, TaxonomyError> {
        let labels = cloud.labels().ok_or(TaxonomyError::MissingLabels)?;
        if let Some(declared) = cloud.taxonomy() {
            if normalize(declared) != normalize(self.source.name()) {
                return Err(TaxonomyError::TaxonomyMismatch {
                    expected: self.source.name().to_string(),
                    got: declared.to_string(),
                });
            }
        }
        let mut remapped = Vec::with_capacity(labels.len());
        for &id in labels {
            remapped.push(self.remap(id)?);
        }
        let out = PointCloud::new(
            cloud.positions().to_vec(),
            cloud.colors().map(|c| c.to_vec()),
            Some(remapped),
            Some(self.target.name().to_string()),
        )
        .expect("lengths preserved");
        Ok(out)
    }

    /// Serializes the explicit (non-zero) pairs as `source_id<TAB>target_id`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (from, &to) in self.mapping.iter().enumerate() {
            if to != 0 {
                out.push_str(&format!("{from}\t{to}\n"));
            }
        }
        out
    }

    pub fn from_text(
        source: Taxonomy,
        target: Taxonomy,
        text: &str,
    ) -> Result<RemapTable, TaxonomyError> {
        let mut pairs = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 2 {
                return Err(TaxonomyError::Parse {
                    line: lineno + 1,
                    what: format!("expected 2 tab-separated ids, got '{line}'"),
                });
            }
            let from: LabelId = fields[0].parse().map_err(|_| TaxonomyError::Parse {
                line: lineno + 1,
                what: format!("bad source id '{}'", fields[0]),
            })?;
            let to: LabelId = fields[1].parse().map_err(|_| TaxonomyError::Parse {
                line: lineno + 1,
                what: format!("bad target id '{}'", fields[1]),
            })?;
            pairs.push((from, to));
        }
        RemapTable::new(source, target, &pairs)
    }

    pub fn load(source: Taxonomy, target: Taxonomy, path: &Path) -> Result<RemapTable, TaxonomyError> {
        RemapTable::from_text(source, target, &std::fs::read_to_string(path)?)
    }
}

fn pairs_by_name(
    source: &Taxonomy,
    target: &Taxonomy,
    names: &[(&str, &str)],
) -> Vec<(LabelId, LabelId)> {
    names
        .iter()
        .map(|(from, to)| {
            (
                source.id_of(from).unwrap_or_else(|| panic!("no class '{from}' in {}", source.name())),
                target.id_of(to).unwrap_or_else(|| panic!("no class '{to}' in {}", target.name())),
            )
        })
        .collect()
}

/// semantic3d8 -> common4.
pub fn remap_semantic3d8_to_common4() -> RemapTable {
    let source = semantic3d8();
    let target = common4();
    let pairs = pairs_by_name(
        &source,
        &target,
        &[
            ("Buildings", "Building"),
            ("Man-made Terrain", "Road"),
            ("Cars", "Car"),
            ("High Vegetation", "Vegetation"),
            ("Low Vegetation", "Vegetation"),
        ],
    );
    RemapTable::new(source, target, &pairs).expect("builtin remap is valid")
}

/// carla12 -> common4.
pub fn remap_carla12_to_common4() -> RemapTable {
    let source = carla12();
    let target = common4();
    let pairs = pairs_by_name(
        &source,
        &target,
        &[
            ("Building", "Building"),
            ("Road", "Road"),
            ("Road-line", "Road"),
            ("Car", "Car"),
            ("Vegetation", "Vegetation"),
        ],
    );
    RemapTable::new(source, target, &pairs).expect("builtin remap is valid")
}

/// kitti19 -> common4.
pub fn remap_kitti19_to_common4() -> RemapTable {
    let source = kitti19();
    let target = common4();
    let pairs = pairs_by_name(
        &source,
        &target,
        &[
            ("Building", "Building"),
            ("Road", "Road"),
            ("Car", "Car"),
            ("Motorcycle", "Car"),
            ("Bus", "Car"),
            ("Bicycle", "Car"),
            ("Vegetation", "Vegetation"),
        ],
    );
    RemapTable::new(source, target, &pairs).expect("builtin remap is valid")
}

/// kitti19 -> carla12: same-named classes carry over, Terrain, Sky, Rider,
/// Truck, Bus, Motorcycle, Bicycle and Train sink to unlabelled.
pub fn remap_kitti19_to_carla12() -> RemapTable {
    let source = kitti19();
    let target = carla12();
    let pairs = pairs_by_name(
        &source,
        &target,
        &[
            ("Road", "Road"),
            ("Sidewalk", "Sidewalk"),
            ("Building", "Building"),
            ("Wall", "Wall"),
            ("Fence", "Fence"),
            ("Pole", "Pole"),
            ("Traffic-sign", "Traffic-sign"),
            ("Vegetation", "Vegetation"),
            ("Person", "Pedestrian"),
            ("Car", "Car"),
        ],
    );
    RemapTable::new(source, target, &pairs).expect("builtin remap is valid")
}

/// All built-in remap tables.
pub fn builtin_remaps() -> Vec<RemapTable> {
    vec![
        remap_semantic3d8_to_common4(),
        remap_carla12_to_common4(),
        remap_kitti19_to_common4(),
        remap_kitti19_to_carla12(),
    ]
}

/// Looks up a built-in remap by source/target taxonomy name.
pub fn builtin_remap(source: &str, target: &str) -> Option<RemapTable> {
    let key = (normalize(source), normalize(target));
    match (key.0.as_str(), key.1.as_str()) {
        ("semantic3d8", "common4") => Some(remap_semantic3d8_to_common4()),
        ("carla12", "common4") => Some(remap_carla12_to_common4()),
        ("kitti19", "common4") => Some(remap_kitti19_to_common4()),
        ("kitti19", "carla12") => Some(remap_kitti19_to_carla12()),
        (a, b) if a == b => builtin_taxonomy(source).map(|t| RemapTable::identity(&t)),
        _ => None,
    }
}

/// Per-class point counts over one taxonomy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassHistogram {
    taxonomy: String,
    counts: Vec<u64>,
}

impl ClassHistogram {
    pub fn taxonomy_name(&self) -> &str {
        &self.taxonomy
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Counts labelled points per class over any number of clouds; all clouds
/// must be labeled in `taxonomy`.
pub fn histogram<'a>(
    taxonomy: &Taxonomy,
    clouds: impl IntoIterator<Item = &'a PointCloud>,
) -> Result<ClassHistogram, TaxonomyError> {
    let mut counts = vec![0u64; taxonomy.class_count()];
    for cloud in clouds {
        let labels = cloud.labels().ok_or(TaxonomyError::MissingLabels)?;
        if let Some(declared) = cloud.taxonomy() {
            if normalize(declared) != normalize(taxonomy.name()) {
                return Err(TaxonomyError::TaxonomyMismatch {
                    expected: taxonomy.name().to_string(),
                    got: declared.to_string(),
                });
            }
        }
        for &id in labels {
            if !taxonomy.contains(id) {
                return Err(TaxonomyError::InvalidLabel {
                    taxonomy: taxonomy.name().to_string(),
                    id,
                });
            }
            counts[id as usize] += 1;
        }
    }
    Ok(ClassHistogram {
        taxonomy: taxonomy.name().to_string(),
        counts,
    })
}
