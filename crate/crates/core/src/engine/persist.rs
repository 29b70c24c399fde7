use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layers::EmbeddingTable;
use crate::numkit::Tensor;
use crate::taskmodels::{build_model, Arch, ModelBundle, Task, TaskConfig, FORMAT_VERSION};
use crate::textprep::{PreprocessConfig, Vocabulary};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const WEIGHTS_FILE: &str = "weights.bin";
pub const SUPPORTED_VERSIONS: &[u32] = &[FORMAT_VERSION];

/// One weight tensor inside the blob; `offset` is in bytes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: usize,
    pub count: usize,
}

/// JSON side of a bundle directory. Weights live in `weights_file` as
/// little-endian `f32`, row-major, at the listed byte offsets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleManifest {
    pub format_version: u32,
    pub task: Task,
    pub architecture: Arch,
    pub seed: u64,
    pub config: TaskConfig,
    pub preprocess: PreprocessConfig,
    pub vocabulary: Vocabulary,
    pub label_names: Vec<String>,
    pub embedding_trainable: bool,
    pub layers: Vec<LayerEntry>,
    pub weights_file: String,
    pub weights_bytes: usize,
    pub fingerprint: String,
}

fn layout(bundle: &ModelBundle) -> Result<(Vec<LayerEntry>, Vec<u8>)> {
    let mut entries = Vec::new();
    let mut blob = Vec::new();
    for (name, t) in bundle.network.named_tensors() {
        let count: usize = t.shape().iter().product();
        if count != t.len() {
            return Err(Error::Internal(format!(
                "tensor {name} shape {:?} holds {} values",
                t.shape(),
                t.len()
            )));
        }
        entries.push(LayerEntry {
            name,
            shape: t.shape().to_vec(),
            offset: blob.len(),
            count,
        });
        blob.reserve(count * 4);
        for &v in t.data() {
            blob.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    Ok((entries, blob))
}

/// Write `manifest.json` and `weights.bin` into `dir`, creating it if
/// needed. Returns the manifest path.
pub fn save_bundle(bundle: &ModelBundle, dir: impl AsRef<Path>) -> Result<PathBuf> {
    let dir = dir.as_ref();
    let (layers, blob) = layout(bundle)?;
    let manifest = BundleManifest {
        format_version: FORMAT_VERSION,
        task: bundle.config.task,
        architecture: bundle.config.arch,
        seed: bundle.config.seed,
        config: bundle.config.clone(),
        preprocess: bundle.preprocess.clone(),
        vocabulary: bundle.vocab.clone(),
        label_names: bundle.label_names.clone(),
        embedding_trainable: bundle.network.embedding.trainable(),
        layers,
        weights_file: WEIGHTS_FILE.to_owned(),
        weights_bytes: blob.len(),
        fingerprint: bundle.fingerprint(),
    };
    check_layers(&manifest.layers, blob.len())
        .map_err(|e| Error::Internal(format!("refusing to write: {e}")))?;

    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let weights_path = dir.join(WEIGHTS_FILE);
    fs::write(&weights_path, &blob).map_err(|e| Error::io(&weights_path, e))?;
    let manifest_path = dir.join(MANIFEST_FILE);
    let json =
        serde_json::to_string_pretty(&manifest).map_err(|e| Error::Internal(e.to_string()))?;
    fs::write(&manifest_path, json).map_err(|e| Error::io(&manifest_path, e))?;
    Ok(manifest_path)
}

fn check_layers(layers: &[LayerEntry], blob_len: usize) -> Result<()> {
    let mut spans: Vec<(usize, usize, &str)> = Vec::with_capacity(layers.len());
    for (i, l) in layers.iter().enumerate() {
        let product: usize = l.shape.iter().product();
        if product != l.count || l.shape.contains(&0) {
            return Err(Error::format(
                format!("layers[{i}].shape"),
                format!(
                    "{} declares shape {:?} but {} values",
                    l.name, l.shape, l.count
                ),
            ));
        }
        if l.offset % 4 != 0 {
            return Err(Error::format(
                format!("layers[{i}].offset"),
                format!("{} is not 4-byte aligned", l.offset),
            ));
        }
        let end = l.offset + l.count * 4;
        if end > blob_len {
            return Err(Error::format(
                format!("layers[{i}].offset"),
                format!(
                    "{} needs bytes {}..{end} but the blob has {blob_len}",
                    l.name, l.offset
                ),
            ));
        }
        spans.push((l.offset, end, &l.name));
    }
    spans.sort();
    for w in spans.windows(2) {
        if w[1].0 < w[0].1 {
            return Err(Error::format(
                "layers",
                format!("{} overlaps {}", w[0].2, w[1].2),
            ));
        }
    }
    Ok(())
}

fn read_manifest(path: &Path) -> Result<BundleManifest> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| Error::format("manifest", format!("not valid JSON: {e}")))?;
    let version = value
        .get("format_version")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| Error::format("format_version", "missing or not an integer"))?;
    if !SUPPORTED_VERSIONS.iter().any(|&v| u64::from(v) == version) {
        return Err(Error::format(
            "format_version",
            format!("version {version} is not supported (supported: {SUPPORTED_VERSIONS:?})"),
        ));
    }
    serde_json::from_value(value).map_err(|e| Error::format("manifest", e.to_string()))
}

/// Read and fully validate a bundle directory.
pub fn load_bundle(dir: impl AsRef<Path>) -> Result<ModelBundle> {
    let dir = dir.as_ref();
    let manifest_path = dir.join(MANIFEST_FILE);
    if !manifest_path.is_file() {
        return Err(Error::format(
            "manifest",
            format!("{} not found", manifest_path.display()),
        ));
    }
    let m = read_manifest(&manifest_path)?;
    if m.config.task != m.task || m.config.arch != m.architecture {
        return Err(Error::format(
            "task",
            "manifest task/architecture disagree with its config",
        ));
    }
    if m.vocabulary.is_empty() {
        return Err(Error::format("vocabulary", "empty"));
    }
    if m.label_names.is_empty() {
        return Err(Error::format("label_names", "empty"));
    }
    let weights_path = dir.join(&m.weights_file);
    let blob = fs::read(&weights_path).map_err(|_| {
        Error::format(
            "weights_file",
            format!("{} not readable", weights_path.display()),
        )
    })?;
    if blob.len() != m.weights_bytes {
        return Err(Error::format(
            "weights_bytes",
            format!(
                "manifest declares {} bytes, blob has {}",
                m.weights_bytes,
                blob.len()
            ),
        ));
    }
    check_layers(&m.layers, blob.len())?;

    let mut network = build_model(
        &m.config,
        m.vocabulary.table_size(),
        m.label_names.len(),
        None,
    )
    .map_err(|e| Error::format("config", e.to_string()))?;
    let expected: Vec<(String, Vec<usize>)> = network
        .named_tensors()
        .into_iter()
        .map(|(n, t)| (n, t.shape().to_vec()))
        .collect();
    if expected.len() != m.layers.len() {
        return Err(Error::format(
            "layers",
            format!(
                "architecture has {} tensors, manifest lists {}",
                expected.len(),
                m.layers.len()
            ),
        ));
    }
    for ((i, entry), ((_, slot), (name, shape))) in m
        .layers
        .iter()
        .enumerate()
        .zip(network.named_tensors_mut().into_iter().zip(&expected))
    {
        if &entry.name != name {
            return Err(Error::format(
                format!("layers[{i}].name"),
                format!("expected {name}, found {}", entry.name),
            ));
        }
        if &entry.shape != shape {
            return Err(Error::format(
                format!("layers[{i}].shape"),
                format!(
                    "{name} should be {shape:?}, manifest says {:?}",
                    entry.shape
                ),
            ));
        }
        let bytes = &blob[entry.offset..entry.offset + entry.count * 4];
        let data = bytes
            .chunks_exact(4)
            .map(|b| f64::from(f32::from_le_bytes([b[0], b[1], b[2], b[3]])))
            .collect();
        *slot = Tensor::new(entry.shape.clone(), data)?;
    }
    if !m.embedding_trainable {
        network.embedding = EmbeddingTable::new(network.embedding.weights().clone(), false)?;
    }
    let bundle = ModelBundle::new(m.config, m.preprocess, m.vocabulary, m.label_names, network)
        .map_err(|e| Error::format("bundle", e.to_string()))?;
    if bundle.fingerprint() != m.fingerprint {
        return Err(Error::format(
            "fingerprint",
            "weights do not match the recorded fingerprint",
        ));
    }
    Ok(bundle)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::taskmodels::build_model;

    fn bundle() -> ModelBundle {
        let cfg = TaskConfig {
            embed_dim: 5,
            units: 4,
            hidden_units: Some(3),
            max_len: Some(8),
            ..TaskConfig::for_task(Task::Emotion)
        };
        let docs = vec![vec!["alpha".to_owned(), "beta".to_owned()]];
        let vocab = Vocabulary::fit(&docs, None).unwrap();
        let net = build_model(&cfg, vocab.table_size(), 7, None).unwrap();
        let labels = crate::corpora::EMOTIONS
            .iter()
            .map(|s| s.to_string())
            .collect();
        ModelBundle::new(cfg.clone(), cfg.preprocess().unwrap(), vocab, labels, net).unwrap()
    }

    fn edit_manifest(dir: &Path, f: impl FnOnce(&mut serde_json::Value)) {
        let path = dir.join(MANIFEST_FILE);
        let mut v: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
        f(&mut v);
        fs::write(&path, serde_json::to_string(&v).unwrap()).unwrap();
    }

    #[test]
    fn roundtrip_is_bitwise_on_f32_form() {
        let b = bundle();
        let dir = tempfile::tempdir().unwrap();
        let manifest = save_bundle(&b, dir.path()).unwrap();
        assert!(manifest.ends_with(MANIFEST_FILE));
        let loaded = load_bundle(dir.path()).unwrap();
        assert_eq!(loaded, b.to_f32_precision());
        assert_eq!(loaded.fingerprint(), b.fingerprint());
        let blob = fs::read(dir.path().join(WEIGHTS_FILE)).unwrap();
        let first = f32::from_le_bytes(blob[4 * 5..4 * 6].try_into().unwrap());
        assert_eq!(first, b.network.embedding.weights().data()[5] as f32);
    }

    #[test]
    fn unknown_version_names_supported() {
        let dir = tempfile::tempdir().unwrap();
        save_bundle(&bundle(), dir.path()).unwrap();
        edit_manifest(dir.path(), |v| v["format_version"] = 9.into());
        match load_bundle(dir.path()).unwrap_err() {
            Error::Format { field, message } => {
                assert_eq!(field, "format_version");
                assert!(message.contains("[1]"), "{message}");
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn shape_product_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        save_bundle(&bundle(), dir.path()).unwrap();
        edit_manifest(dir.path(), |v| {
            v["layers"][1]["shape"] = serde_json::json!([3, 3])
        });
        assert!(matches!(
            load_bundle(dir.path()),
            Err(Error::Format { field, .. }) if field == "layers[1].shape"
        ));
    }

    #[test]
    fn truncated_blob() {
        let dir = tempfile::tempdir().unwrap();
        save_bundle(&bundle(), dir.path()).unwrap();
        let path = dir.path().join(WEIGHTS_FILE);
        let mut blob = fs::read(&path).unwrap();
        blob.truncate(blob.len() - 8);
        fs::write(&path, blob).unwrap();
        assert!(matches!(
            load_bundle(dir.path()),
            Err(Error::Format { field, .. }) if field == "weights_bytes"
        ));
    }

    #[test]
    fn overlapping_offsets() {
        let dir = tempfile::tempdir().unwrap();
        save_bundle(&bundle(), dir.path()).unwrap();
        edit_manifest(dir.path(), |v| {
            v["layers"][2]["offset"] = v["layers"][1]["offset"].clone()
        });
        assert!(matches!(load_bundle(dir.path()), Err(Error::Format { .. })));
    }

    #[test]
    fn missing_manifest() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            load_bundle(dir.path()),
            Err(Error::Format { field, .. }) if field == "manifest"
        ));
    }
}
