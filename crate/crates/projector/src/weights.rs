//! Parameter set of the projector network and the `LPW1` container it is stored in.
//!
//! ```text
//! "LPW1" | version: u32 = 1 | header_len: u32 | header: UTF-8 text | tensor data
//! ```
//!
//! The header holds `key = value` lines for `depth`, `base_channels`,
//! `leaky_slope` and `bn_eps`, followed by one `tensor <name> f32 <rank> <dims...>`
//! line per tensor. Tensor data follows in manifest order as little-endian
//! `f32`, row-major. All integers are little-endian.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{ProjectorError, Result};

pub const MAGIC: &[u8; 4] = b"LPW1";
pub const FORMAT_VERSION: u32 = 1;
pub const INPUT_CHANNELS: usize = 2;
pub const DEFAULT_LEAKY_SLOPE: f32 = 0.01;
pub const DEFAULT_BN_EPS: f32 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub name: String,
    pub dims: Vec<usize>,
    pub data: Vec<f32>,
}

impl Tensor {
    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

/// Architecture hyperparameters; together they fix every tensor shape.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Architecture {
    pub depth: usize,
    pub base_channels: usize,
    pub leaky_slope: f32,
    pub bn_eps: f32,
}

impl Architecture {
    pub fn new(depth: usize, base_channels: usize) -> Self {
        Self {
            depth,
            base_channels,
            leaky_slope: DEFAULT_LEAKY_SLOPE,
            bn_eps: DEFAULT_BN_EPS,
        }
    }

    /// Channel count at encoder level `level` (the bottleneck is level `depth`).
    pub fn channels(&self, level: usize) -> usize {
        self.base_channels << level
    }

    /// Expected `(name, dims)` of every tensor, in file order.
    pub fn manifest(&self) -> Vec<(String, Vec<usize>)> {
        let mut out = Vec::new();
        let block = |prefix: &str, cin: usize, cout: usize, out: &mut Vec<(String, Vec<usize>)>| {
            for (i, input) in [cin, cout].into_iter().enumerate() {
                out.push((format!("{prefix}.conv{i}.weight"), vec![cout, input, 3, 3]));
                out.push((format!("{prefix}.conv{i}.bias"), vec![cout]));
                for stat in ["weight", "bias", "running_mean", "running_var"] {
                    out.push((format!("{prefix}.bn{i}.{stat}"), vec![cout]));
                }
            }
        };
        let mut cin = INPUT_CHANNELS;
        for level in 0..self.depth {
            block(&format!("enc{level}"), cin, self.channels(level), &mut out);
            cin = self.channels(level);
        }
        block("mid", cin, self.channels(self.depth), &mut out);
        for level in (0..self.depth).rev() {
            let (wide, narrow) = (self.channels(level + 1), self.channels(level));
            out.push((format!("dec{level}.up.weight"), vec![wide, narrow, 2, 2]));
            out.push((format!("dec{level}.up.bias"), vec![narrow]));
            block(&format!("dec{level}"), 2 * narrow, narrow, &mut out);
        }
        out.push(("out.weight".into(), vec![1, self.base_channels, 1, 1]));
        out.push(("out.bias".into(), vec![1]));
        out
    }
}

/// Full parameter set of a trained projector.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectorWeights {
    arch: Architecture,
    tensors: Vec<Tensor>,
    index: HashMap<String, usize>,
}

impl ProjectorWeights {
    /// Validates `tensors` against the manifest of `arch` (order, names, shapes, variances).
    pub fn new(arch: Architecture, tensors: Vec<Tensor>) -> Result<Self> {
        if arch.depth == 0 || arch.base_channels == 0 {
            return Err(ProjectorError::Header("depth and base_channels must be positive".into()));
        }
        if !(arch.bn_eps > 0.0) || !arch.leaky_slope.is_finite() {
            return Err(ProjectorError::Header("bn_eps must be positive and leaky_slope finite".into()));
        }
        let manifest = arch.manifest();
        for (i, (name, dims)) in manifest.iter().enumerate() {
            let Some(t) = tensors.get(i) else {
                return Err(ProjectorError::MissingTensor(name.clone()));
            };
            if &t.name != name {
                return Err(match tensors.iter().any(|t| &t.name == name) {
                    true => ProjectorError::Header(format!("tensor {name} out of order")),
                    false => ProjectorError::MissingTensor(name.clone()),
                });
            }
            if &t.dims != dims || t.data.len() != dims.iter().product::<usize>() {
                return Err(ProjectorError::ShapeMismatch {
                    tensor: name.clone(),
                    expected: dims.clone(),
                    found: t.dims.clone(),
                });
            }
            if name.ends_with("running_var") && t.data.iter().any(|v| !(*v >= 0.0)) {
                return Err(ProjectorError::InvalidValue {
                    tensor: name.clone(),
                    reason: "negative running variance".into(),
                });
            }
        }
        if let Some(extra) = tensors.get(manifest.len()) {
            return Err(ProjectorError::UnexpectedTensor(extra.name.clone()));
        }
        let index = tensors.iter().enumerate().map(|(i, t)| (t.name.clone(), i)).collect();
        Ok(Self { arch, tensors, index })
    }

    /// Weights that make every convolution vanish and every batch norm the identity.
    pub fn zeroed(arch: Architecture) -> Self {
        let tensors = arch
            .manifest()
            .into_iter()
            .map(|(name, dims)| {
                let fill = if name.ends_with("bn0.weight")
                    || name.ends_with("bn1.weight")
                    || name.ends_with("running_var")
                {
                    1.0
                } else {
                    0.0
                };
                let len = dims.iter().product();
                Tensor { name, dims, data: vec![fill; len] }
            })
            .collect();
        Self::new(arch, tensors).expect("manifest-shaped tensors")
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn depth(&self) -> usize {
        self.arch.depth
    }

    pub fn base_channels(&self) -> usize {
        self.arch.base_channels
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub fn tensor(&self, name: &str) -> Option<&Tensor> {
        self.index.get(name).map(|&i| &self.tensors[i])
    }

    pub(crate) fn data(&self, name: &str) -> &[f32] {
        &self.tensor(name).unwrap_or_else(|| panic!("validated weights lack {name}")).data
    }
}

pub fn encode_weights(w: &ProjectorWeights) -> Vec<u8> {
    let arch = w.architecture();
    let mut header = String::new();
    let _ = writeln!(header, "depth = {}", arch.depth);
    let _ = writeln!(header, "base_channels = {}", arch.base_channels);
    let _ = writeln!(header, "leaky_slope = {:?}", arch.leaky_slope);
    let _ = writeln!(header, "bn_eps = {:?}", arch.bn_eps);
    for t in w.tensors() {
        let dims: Vec<String> = t.dims.iter().map(|d| d.to_string()).collect();
        let _ = writeln!(header, "tensor {} f32 {} {}", t.name, t.dims.len(), dims.join(" "));
    }
    let payload: usize = w.tensors().iter().map(|t| 4 * t.len()).sum();
    let mut out = Vec::with_capacity(12 + header.len() + payload);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(header.as_bytes());
    for t in w.tensors() {
        for v in &t.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn decode_weights(bytes: &[u8]) -> Result<ProjectorWeights> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(ProjectorError::BadMagic);
    }
    let word = |at: usize| -> Result<u32> {
        bytes
            .get(at..at + 4)
            .map(|b| u32::from_le_bytes(b.try_into().expect("4 bytes")))
            .ok_or_else(|| ProjectorError::TruncatedFile { tensor: "<header>".into() })
    };
    let version = word(4)?;
    if version != FORMAT_VERSION {
        return Err(ProjectorError::UnsupportedVersion(version));
    }
    let header_len = word(8)? as usize;
    let header = bytes
        .get(12..12 + header_len)
        .ok_or_else(|| ProjectorError::TruncatedFile { tensor: "<header>".into() })?;
    let header = std::str::from_utf8(header)
        .map_err(|_| ProjectorError::Header("header is not UTF-8".into()))?;
    let (arch, manifest) = parse_header(header)?;

    let mut pos = 12 + header_len;
    let mut tensors = Vec::with_capacity(manifest.len());
    for (name, dims) in manifest {
        let len: usize = dims.iter().product();
        let raw = bytes
            .get(pos..pos + 4 * len)
            .ok_or_else(|| ProjectorError::TruncatedFile { tensor: name.clone() })?;
        let data = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect();
        pos += 4 * len;
        tensors.push(Tensor { name, dims, data });
    }
    if pos != bytes.len() {
        return Err(ProjectorError::Header(format!("{} trailing bytes after tensor data", bytes.len() - pos)));
    }
    ProjectorWeights::new(arch, tensors)
}

type Manifest = Vec<(String, Vec<usize>)>;

fn parse_header(text: &str) -> Result<(Architecture, Manifest)> {
    let bad = |msg: String| ProjectorError::Header(msg);
    let mut keys: HashMap<&str, &str> = HashMap::new();
    let mut manifest = Vec::new();
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
        if let Some(rest) = line.strip_prefix("tensor ") {
            let fields: Vec<&str> = rest.split_whitespace().collect();
            let [name, dtype, rank, dims @ ..] = fields.as_slice() else {
                return Err(bad(format!("malformed tensor line {line:?}")));
            };
            if *dtype != "f32" {
                return Err(bad(format!("tensor {name}: unsupported dtype {dtype}")));
            }
            let rank: usize = rank.parse().map_err(|_| bad(format!("tensor {name}: bad rank")))?;
            if dims.len() != rank {
                return Err(bad(format!("tensor {name}: rank {rank} but {} dims", dims.len())));
            }
            let dims = dims
                .iter()
                .map(|d| d.parse::<usize>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| bad(format!("tensor {name}: bad dimension")))?;
            manifest.push((name.to_string(), dims));
        } else if let Some((key, value)) = line.split_once('=') {
            keys.insert(key.trim(), value.trim());
        } else {
            return Err(bad(format!("unrecognized header line {line:?}")));
        }
    }
    let get = |key: &str| keys.get(key).copied().ok_or_else(|| bad(format!("missing header key {key}")));
    let parse_usize = |key: &str| -> Result<usize> {
        get(key)?.parse().map_err(|_| bad(format!("header key {key} is not an integer")))
    };
    let parse_f32 = |key: &str| -> Result<f32> {
        get(key)?.parse().map_err(|_| bad(format!("header key {key} is not a number")))
    };
    let arch = Architecture {
        depth: parse_usize("depth")?,
        base_channels: parse_usize("base_channels")?,
        leaky_slope: parse_f32("leaky_slope")?,
        bn_eps: parse_f32("bn_eps")?,
    };
    Ok((arch, manifest))
}

pub fn load_weights(path: &Path) -> Result<ProjectorWeights> {
    let bytes = std::fs::read(path).map_err(|source| ProjectorError::Io {
        path: path.to_owned(),
        source,
    })?;
    decode_weights(&bytes)
}

pub fn write_weights(path: &Path, w: &ProjectorWeights) -> Result<()> {
    std::fs::write(path, encode_weights(w)).map_err(|source| ProjectorError::Io {
        path: path.to_owned(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ProjectorWeights {
        let mut w = ProjectorWeights::zeroed(Architecture::new(2, 4));
        for (i, t) in w.tensors.iter_mut().enumerate() {
            if !t.name.ends_with("running_var") {
                for (j, v) in t.data.iter_mut().enumerate() {
                    *v = ((i * 31 + j * 7) % 13) as f32 / 13.0 - 0.5;
                }
            }
        }
        w
    }

    #[test]
    fn manifest_shapes_for_small_net() {
        let m = Architecture::new(2, 4).manifest();
        assert_eq!(m[0], ("enc0.conv0.weight".into(), vec![4, 2, 3, 3]));
        let up = m.iter().find(|(n, _)| n == "dec1.up.weight").unwrap();
        assert_eq!(up.1, vec![16, 8, 2, 2]);
        let conv = m.iter().find(|(n, _)| n == "dec0.conv0.weight").unwrap();
        assert_eq!(conv.1, vec![4, 8, 3, 3]);
        assert_eq!(m.last().unwrap().0, "out.bias");
        // 3 conv blocks down/mid/up per level: 12 tensors per block.
        assert_eq!(m.len(), 12 * 5 + 2 * 2 + 2);
    }

    #[test]
    fn round_trip_is_byte_exact() {
        let w = small();
        let bytes = encode_weights(&w);
        let back = decode_weights(&bytes).unwrap();
        assert_eq!(back, w);
        assert_eq!(encode_weights(&back), bytes);
    }

    #[test]
    fn rejects_bad_magic() {
        let mut bytes = encode_weights(&small());
        bytes[0] = b'X';
        assert!(matches!(decode_weights(&bytes), Err(ProjectorError::BadMagic)));
    }

    #[test]
    fn truncation_names_the_tensor() {
        let bytes = encode_weights(&small());
        let err = decode_weights(&bytes[..bytes.len() - 2]).unwrap_err();
        match err {
            ProjectorError::TruncatedFile { tensor } => assert_eq!(tensor, "out.bias"),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn shape_mismatch_names_the_tensor() {
        let w = small();
        let mut tensors = w.tensors().to_vec();
        tensors[2].dims = vec![5];
        tensors[2].data.push(0.0);
        match ProjectorWeights::new(*w.architecture(), tensors).unwrap_err() {
            ProjectorError::ShapeMismatch { tensor, .. } => assert_eq!(tensor, "enc0.bn0.weight"),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn rejects_negative_variance() {
        let w = small();
        let mut tensors = w.tensors().to_vec();
        let i = tensors.iter().position(|t| t.name.ends_with("running_var")).unwrap();
        tensors[i].data[0] = -1.0;
        assert!(matches!(
            ProjectorWeights::new(*w.architecture(), tensors),
            Err(ProjectorError::InvalidValue { .. })
        ));
    }
}
