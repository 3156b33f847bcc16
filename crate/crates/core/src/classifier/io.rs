//! Model serialization.
//!
//! One JSON schema covers all three kinds: `mlp` and `linear` victims store
//! their dense layers; `emotion` extractors store per-group projections plus
//! the joint partition, with `class_count` holding the feature dimension.

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2, Array3};
use serde::{Deserialize, Serialize};

use crate::classifier::mlp::DenseLayer;
use crate::classifier::{
    ClassifierModel, GroupedEmotionExtractor, LinearClassifier, Logits, MlpClassifier,
};
use crate::error::{Error, Result};
use crate::motion::io::write_atomic;
use crate::motion::SkeletonMotion;

/// A trained victim of either architecture.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyClassifier {
    Mlp(MlpClassifier),
    Linear(LinearClassifier),
}

impl ClassifierModel for AnyClassifier {
    fn class_count(&self) -> usize {
        match self {
            AnyClassifier::Mlp(m) => m.class_count(),
            AnyClassifier::Linear(m) => m.class_count(),
        }
    }

    fn input_shape(&self) -> (usize, usize) {
        match self {
            AnyClassifier::Mlp(m) => m.input_shape(),
            AnyClassifier::Linear(m) => m.input_shape(),
        }
    }

    fn forward(&self, motion: &SkeletonMotion) -> Result<Logits> {
        match self {
            AnyClassifier::Mlp(m) => m.forward(motion),
            AnyClassifier::Linear(m) => m.forward(motion),
        }
    }

    fn input_gradient(&self, motion: &SkeletonMotion, cotangent: &[f64]) -> Result<Array3<f64>> {
        match self {
            AnyClassifier::Mlp(m) => m.input_gradient(motion, cotangent),
            AnyClassifier::Linear(m) => m.input_gradient(motion, cotangent),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct LayerFile {
    w: Vec<Vec<f64>>,
    b: Vec<f64>,
    activation: String,
}

#[derive(Serialize, Deserialize)]
struct InputFile {
    frames: usize,
    joints: usize,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    kind: String,
    class_count: usize,
    input: InputFile,
    layers: Vec<LayerFile>,
    groups: Option<Vec<Vec<usize>>>,
    seed: u64,
}

fn parse_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Parse { path: path.to_path_buf(), message: message.into() }
}

fn layer_to_file(layer: &DenseLayer) -> LayerFile {
    LayerFile {
        w: layer.w.rows().into_iter().map(|r| r.to_vec()).collect(),
        b: layer.b.to_vec(),
        activation: if layer.tanh { "tanh".into() } else { "none".into() },
    }
}

fn matrix_from_rows(rows: &[Vec<f64>], path: &Path) -> Result<Array2<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(parse_err(path, "ragged weight matrix"));
    }
    let flat: Vec<f64> = rows.iter().flatten().cloned().collect();
    if flat.iter().any(|v| !v.is_finite()) {
        return Err(parse_err(path, "non-finite weight"));
    }
    Array2::from_shape_vec((nrows, ncols), flat).map_err(|e| parse_err(path, e.to_string()))
}

fn layer_from_file(file: &LayerFile, path: &Path) -> Result<DenseLayer> {
    let tanh = match file.activation.as_str() {
        "tanh" => true,
        "none" => false,
        other => return Err(parse_err(path, format!("unknown activation {other:?}"))),
    };
    let w = matrix_from_rows(&file.w, path)?;
    if w.nrows() != file.b.len() {
        return Err(parse_err(
            path,
            format!("layer has {} weight rows but {} biases", w.nrows(), file.b.len()),
        ));
    }
    Ok(DenseLayer { w, b: Array1::from_vec(file.b.clone()), tanh })
}

fn write_model_file(file: &ModelFile, path: &Path) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(file).map_err(|e| parse_err(path, e.to_string()))?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

fn read_model_file(path: &Path) -> Result<ModelFile> {
    let bytes = fs::read(path).map_err(|e| Error::Io { path: path.to_path_buf(), source: e })?;
    serde_json::from_slice(&bytes).map_err(|e| parse_err(path, e.to_string()))
}

/// Serialize a victim together with the seed it was trained from.
pub fn save_model(model: &AnyClassifier, seed: u64, path: &Path) -> Result<()> {
    let (kind, layers): (&str, Vec<LayerFile>) = match model {
        AnyClassifier::Mlp(m) => ("mlp", m.layers.iter().map(layer_to_file).collect()),
        AnyClassifier::Linear(m) => (
            "linear",
            vec![layer_to_file(&DenseLayer { w: m.weights.clone(), b: m.bias.clone(), tanh: false })],
        ),
    };
    let (frames, joints) = model.input_shape();
    let file = ModelFile {
        kind: kind.into(),
        class_count: model.class_count(),
        input: InputFile { frames, joints },
        layers,
        groups: None,
        seed,
    };
    write_model_file(&file, path)
}

/// Load a victim; returns the model and its recorded seed.
pub fn load_model(path: &Path) -> Result<(AnyClassifier, u64)> {
    let file = read_model_file(path)?;
    let input_shape = (file.input.frames, file.input.joints);
    let layers = file
        .layers
        .iter()
        .map(|l| layer_from_file(l, path))
        .collect::<Result<Vec<_>>>()?;
    let last_out = layers
        .last()
        .map(|l| l.b.len())
        .ok_or_else(|| parse_err(path, "model has no layers"))?;
    if last_out != file.class_count {
        return Err(parse_err(
            path,
            format!("class_count {} but final layer emits {last_out}", file.class_count),
        ));
    }
    let mut in_dim = input_shape.0 * input_shape.1 * 3;
    for (i, l) in layers.iter().enumerate() {
        if l.w.ncols() != in_dim {
            return Err(parse_err(
                path,
                format!("layer {i} expects input {} but gets {in_dim}", l.w.ncols()),
            ));
        }
        in_dim = l.b.len();
    }
    let model = match file.kind.as_str() {
        "mlp" => AnyClassifier::Mlp(MlpClassifier::from_layers(input_shape, layers)),
        "linear" => {
            if layers.len() != 1 || layers[0].tanh {
                return Err(parse_err(path, "linear model must be a single affine layer"));
            }
            let layer = layers.into_iter().next().expect("checked length");
            AnyClassifier::Linear(LinearClassifier::new(input_shape, layer.w, layer.b)?)
        }
        "emotion" => {
            return Err(parse_err(
                path,
                "file holds an emotion extractor; use load_extractor",
            ))
        }
        other => return Err(parse_err(path, format!("unknown model kind {other:?}"))),
    };
    Ok((model, file.seed))
}

/// Serialize an emotion extractor under kind `emotion`.
pub fn save_extractor(extractor: &GroupedEmotionExtractor, seed: u64, path: &Path) -> Result<()> {
    use crate::classifier::EmotionExtractor;
    let layers = extractor
        .weights
        .iter()
        .zip(&extractor.biases)
        .map(|(w, b)| layer_to_file(&DenseLayer { w: w.clone(), b: b.clone(), tanh: false }))
        .collect();
    let (frames, joints) = extractor.input_shape();
    let file = ModelFile {
        kind: "emotion".into(),
        class_count: extractor.feature_dim(),
        input: InputFile { frames, joints },
        layers,
        groups: Some(extractor.groups().to_vec()),
        seed,
    };
    write_model_file(&file, path)
}

pub fn load_extractor(path: &Path) -> Result<(GroupedEmotionExtractor, u64)> {
    let file = read_model_file(path)?;
    if file.kind != "emotion" {
        return Err(parse_err(path, format!("expected kind \"emotion\", got {:?}", file.kind)));
    }
    let groups = file
        .groups
        .clone()
        .ok_or_else(|| parse_err(path, "emotion extractor requires groups"))?;
    let mut weights = Vec::with_capacity(file.layers.len());
    let mut biases = Vec::with_capacity(file.layers.len());
    for l in &file.layers {
        let layer = layer_from_file(l, path)?;
        if layer.tanh {
            return Err(parse_err(path, "emotion projections must be affine"));
        }
        weights.push(layer.w);
        biases.push(layer.b);
    }
    let extractor = GroupedEmotionExtractor::new(
        (file.input.frames, file.input.joints),
        groups,
        weights,
        biases,
    )
    .map_err(|e| parse_err(path, e.to_string()))?;
    use crate::classifier::EmotionExtractor;
    if extractor.feature_dim() != file.class_count {
        return Err(parse_err(
            path,
            format!(
                "class_count {} but projections emit {}",
                file.class_count,
                extractor.feature_dim()
            ),
        ));
    }
    Ok((extractor, file.seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::EmotionExtractor;
    use crate::motion::SkeletonTopology;
    use ndarray::Array3;
    use std::sync::Arc;

    fn probe_motions(t: usize, j: usize, count: usize) -> Vec<SkeletonMotion> {
        let topo = Arc::new(SkeletonTopology::chain(j).unwrap());
        (0..count)
            .map(|k| {
                let pos = Array3::from_shape_fn((t, j, 3), |(a, b, c)| {
                    (((a + 1) * (b + 2) * (c + 3) * (k + 1)) as f64 * 0.013).sin() * 0.5 + 0.5
                });
                SkeletonMotion::new(topo.clone(), pos, None, None).unwrap()
            })
            .collect()
    }

    #[test]
    fn mlp_round_trip_forward_is_bitwise_equal() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mlp.json");
        let model = AnyClassifier::Mlp(MlpClassifier::seeded((3, 4), (8, 8), 5, 21));
        save_model(&model, 21, &path).unwrap();
        let (back, seed) = load_model(&path).unwrap();
        assert_eq!(seed, 21);
        for m in probe_motions(3, 4, 10) {
            assert_eq!(model.forward(&m).unwrap().0, back.forward(&m).unwrap().0);
        }
    }

    #[test]
    fn linear_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("lin.json");
        let w = Array2::from_shape_fn((2, 18), |(r, c)| (r as f64) - (c as f64) * 0.1);
        let model =
            AnyClassifier::Linear(LinearClassifier::new((2, 3), w, Array1::from_vec(vec![0.1, -0.2])).unwrap());
        save_model(&model, 3, &path).unwrap();
        let (back, _) = load_model(&path).unwrap();
        for m in probe_motions(2, 3, 5) {
            assert_eq!(model.forward(&m).unwrap().0, back.forward(&m).unwrap().0);
        }
    }

    #[test]
    fn extractor_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("emo.json");
        let e = GroupedEmotionExtractor::seeded((3, 8), 11);
        save_extractor(&e, 11, &path).unwrap();
        let (back, _) = load_extractor(&path).unwrap();
        for m in probe_motions(3, 8, 5) {
            assert_eq!(e.features(&m).unwrap(), back.features(&m).unwrap());
        }
    }

    #[test]
    fn truncated_model_file_is_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("broken.json");
        fs::write(&path, "{\"kind\":\"mlp\",").unwrap();
        assert!(matches!(load_model(&path), Err(Error::Parse { .. })));
    }

    #[test]
    fn class_count_mismatch_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mlp.json");
        let model = AnyClassifier::Mlp(MlpClassifier::seeded((2, 2), (4, 4), 3, 1));
        save_model(&model, 1, &path).unwrap();
        let mut text = fs::read_to_string(&path).unwrap();
        text = text.replace("\"class_count\": 3", "\"class_count\": 4");
        fs::write(&path, text).unwrap();
        let err = load_model(&path).unwrap_err();
        assert!(err.to_string().contains("class_count"), "{err}");
    }
}
