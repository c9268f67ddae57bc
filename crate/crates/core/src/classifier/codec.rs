//! Model container: `"RIDS"`, format version (u16 LE), model kind (u8),
//! then a kind-specific payload. All integers and floats are little-endian.

use thiserror::Error;

use super::{ForestModel, LogRegModel, Model, ModelKind, Node, TreeModel, CLASSES};
use crate::features::FEATURE_COUNT;

pub const MODEL_MAGIC: [u8; 4] = *b"RIDS";
pub const MODEL_FORMAT_VERSION: u16 = 1;

const LEAF: u8 = 0;
const SPLIT: u8 = 1;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("not a model file (bad magic)")]
    BadMagic,
    #[error("unsupported model format version {0} (expected {MODEL_FORMAT_VERSION})")]
    UnsupportedVersion(u16),
    #[error("unknown model kind {0}")]
    UnknownKind(u8),
    #[error("model file truncated at byte {0}")]
    Truncated(usize),
    #[error("{0} trailing bytes after model")]
    TrailingBytes(usize),
    #[error("invalid model: {0}")]
    Invalid(String),
}

pub fn serialize_model(model: &Model) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&MODEL_MAGIC);
    out.extend_from_slice(&MODEL_FORMAT_VERSION.to_le_bytes());
    out.push(model.kind().code());
    match model {
        Model::Tree(t) => put_tree(&mut out, t),
        Model::Forest(f) => {
            out.push(f.features_per_split);
            out.push(u8::from(f.bootstrap));
            out.extend_from_slice(&f.seed.to_le_bytes());
            out.extend_from_slice(&(f.trees.len() as u32).to_le_bytes());
            for t in &f.trees {
                put_tree(&mut out, t);
            }
        }
        Model::LogReg(m) => {
            let floats = m.mean.iter().chain(&m.std).chain(m.weights.iter().flatten()).chain(&m.bias);
            for x in floats {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
    }
    out
}

fn put_tree(out: &mut Vec<u8>, t: &TreeModel) {
    out.extend_from_slice(&t.max_depth.to_le_bytes());
    out.extend_from_slice(&t.min_samples_leaf.to_le_bytes());
    out.extend_from_slice(&t.seed.to_le_bytes());
    out.extend_from_slice(&t.n_samples.to_le_bytes());
    out.extend_from_slice(&(t.nodes.len() as u32).to_le_bytes());
    for n in &t.nodes {
        match n {
            Node::Leaf { counts } => {
                out.push(LEAF);
                for c in counts {
                    out.extend_from_slice(&c.to_le_bytes());
                }
            }
            Node::Split { feature, threshold, left, right } => {
                out.push(SPLIT);
                out.push(*feature);
                out.extend_from_slice(&threshold.to_le_bytes());
                out.extend_from_slice(&left.to_le_bytes());
                out.extend_from_slice(&right.to_le_bytes());
            }
        }
    }
}

struct Reader<'a> {
    b: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], ModelError> {
        let s = self.b.get(self.pos..self.pos + n).ok_or(ModelError::Truncated(self.b.len()))?;
        self.pos += n;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N], ModelError> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }

    fn u8(&mut self) -> Result<u8, ModelError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, ModelError> {
        self.array().map(u16::from_le_bytes)
    }

    fn u32(&mut self) -> Result<u32, ModelError> {
        self.array().map(u32::from_le_bytes)
    }

    fn u64(&mut self) -> Result<u64, ModelError> {
        self.array().map(u64::from_le_bytes)
    }

    fn f64(&mut self) -> Result<f64, ModelError> {
        self.array().map(f64::from_le_bytes)
    }

    fn finite(&mut self) -> Result<f64, ModelError> {
        let x = self.f64()?;
        if x.is_finite() {
            Ok(x)
        } else {
            Err(ModelError::Invalid(format!("non-finite parameter at byte {}", self.pos - 8)))
        }
    }
}

pub fn deserialize_model(bytes: &[u8]) -> Result<Model, ModelError> {
    let mut r = Reader { b: bytes, pos: 0 };
    if r.take(4).map_err(|_| ModelError::BadMagic)? != MODEL_MAGIC {
        return Err(ModelError::BadMagic);
    }
    let version = r.u16()?;
    if version != MODEL_FORMAT_VERSION {
        return Err(ModelError::UnsupportedVersion(version));
    }
    let code = r.u8()?;
    let kind = ModelKind::from_code(code).ok_or(ModelError::UnknownKind(code))?;
    let model = match kind {
        ModelKind::Tree => Model::Tree(get_tree(&mut r)?),
        ModelKind::Forest => {
            let features_per_split = r.u8()?;
            if features_per_split == 0 || features_per_split as usize > FEATURE_COUNT {
                return Err(ModelError::Invalid(format!("features_per_split {features_per_split}")));
            }
            let bootstrap = match r.u8()? {
                0 => false,
                1 => true,
                b => return Err(ModelError::Invalid(format!("bootstrap flag {b}"))),
            };
            let seed = r.u64()?;
            let n = r.u32()? as usize;
            if n == 0 {
                return Err(ModelError::Invalid("forest with no trees".into()));
            }
            let mut trees = Vec::with_capacity(n.min(4096));
            for _ in 0..n {
                trees.push(get_tree(&mut r)?);
            }
            Model::Forest(ForestModel { trees, features_per_split, bootstrap, seed })
        }
        ModelKind::LogReg => {
            let mut mean = [0.0; FEATURE_COUNT];
            let mut std = [0.0; FEATURE_COUNT];
            let mut weights = [[0.0; FEATURE_COUNT]; CLASSES];
            let mut bias = [0.0; CLASSES];
            for x in mean.iter_mut().chain(std.iter_mut()).chain(weights.iter_mut().flatten()).chain(bias.iter_mut()) {
                *x = r.finite()?;
            }
            if std.iter().any(|&s| s <= 0.0) {
                return Err(ModelError::Invalid("non-positive feature std".into()));
            }
            Model::LogReg(LogRegModel { mean, std, weights, bias })
        }
    };
    if r.pos != bytes.len() {
        return Err(ModelError::TrailingBytes(bytes.len() - r.pos));
    }
    Ok(model)
}

fn get_tree(r: &mut Reader<'_>) -> Result<TreeModel, ModelError> {
    let max_depth = r.u16()?;
    let min_samples_leaf = r.u32()?;
    let seed = r.u64()?;
    let n_samples = r.u64()?;
    let count = r.u32()? as usize;
    // smallest node encoding is a split of 18 bytes; bound the allocation
    let mut nodes = Vec::with_capacity(count.min(r.b.len() / 18 + 1));
    let mut referenced = vec![false; count];
    for i in 0..count {
        let node = match r.u8()? {
            LEAF => {
                let mut counts = [0u32; CLASSES];
                for c in counts.iter_mut() {
                    *c = r.u32()?;
                }
                Node::Leaf { counts }
            }
            SPLIT => {
                let feature = r.u8()?;
                if feature as usize >= FEATURE_COUNT {
                    return Err(ModelError::Invalid(format!("node {i}: feature index {feature}")));
                }
                let threshold = r.f64()?;
                if threshold.is_nan() {
                    return Err(ModelError::Invalid(format!("node {i}: NaN threshold")));
                }
                let (left, right) = (r.u32()?, r.u32()?);
                for child in [left, right] {
                    let c = child as usize;
                    // children after their parent rules out cycles
                    if c <= i || c >= count || std::mem::replace(&mut referenced[c], true) {
                        return Err(ModelError::Invalid(format!("node {i}: bad child {child}")));
                    }
                }
                Node::Split { feature, threshold, left, right }
            }
            t => return Err(ModelError::Invalid(format!("node {i}: tag {t}"))),
        };
        nodes.push(node);
    }
    if let Some(orphan) = referenced.iter().skip(1).position(|&x| !x) {
        return Err(ModelError::Invalid(format!("node {} unreachable", orphan + 1)));
    }
    Ok(TreeModel { nodes, max_depth, min_samples_leaf, seed, n_samples })
}
