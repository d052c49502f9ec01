//! Portable forward pass for the `cnn3-film-v1` noise predictor.
//!
//! Input planes are the real and imaginary parts of `H̃_t` (`2 × N_R × N_T`).
//! Three 3×3 convolutions with circular padding on both axes; SiLU after the
//! first two. The step index enters as a sinusoidal embedding of `t/T`
//! mapped through two dense layers to a per-channel bias added after the
//! first convolution. The two output planes are `ε̂`.
//!
//! Weight file: `"GDNW"`, u32 LE header length, a JSON header, then a raw
//! little-endian f32 blob. Tensor offsets in the header are byte offsets into
//! the blob. Convolution weights are `[out, in, 3, 3]` applied as
//! cross-correlation; dense weights are `[out, in]`.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Denoiser, NoiseSchedule};
use crate::channel::dataset::{put_matrix, read_header, write_header, ByteReader};
use crate::{ComplexMatrix, Error, Result};

pub const WEIGHT_MAGIC: &[u8; 4] = b"GDNW";
pub const GOLDEN_MAGIC: &[u8; 4] = b"GDGV";
pub const ARCH: &str = "cnn3-film-v1";
pub const EMBED_DIM: usize = 16;

const TENSOR_NAMES: [&str; 10] = [
    "conv1.w",
    "conv1.b",
    "film.fc1.w",
    "film.fc1.b",
    "film.fc2.w",
    "film.fc2.b",
    "conv2.w",
    "conv2.b",
    "conv3.w",
    "conv3.b",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub shape: Vec<usize>,
    pub dtype: String,
    pub offset: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightHeader {
    pub version: u32,
    pub arch: String,
    pub n_r: usize,
    pub n_t: usize,
    pub tensors: BTreeMap<String, TensorEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule_hash: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blob_sha256: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
struct Tensor {
    shape: Vec<usize>,
    data: Vec<f32>,
}

impl Tensor {
    fn check(&self, name: &str, shape: &[usize]) -> Result<()> {
        if self.shape != shape {
            return Err(Error::Format(format!(
                "tensor {name}: shape {:?}, expected {shape:?}",
                self.shape
            )));
        }
        Ok(())
    }
}

/// Loaded network parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct NeuralDenoiser {
    n_r: usize,
    n_t: usize,
    hidden: usize,
    tensors: BTreeMap<String, Tensor>,
    schedule_hash: Option<String>,
}

impl NeuralDenoiser {
    /// Random initialization (uniform fan-in scaling), mostly for tests and
    /// for producing reference goldens.
    pub fn random(n_r: usize, n_t: usize, hidden: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut tensors = BTreeMap::new();
        let shapes = Self::expected_shapes(hidden);
        for name in TENSOR_NAMES {
            let shape = shapes[name].clone();
            let fan_in: usize = shape.iter().skip(1).product::<usize>().max(1);
            let bound = 1.0 / (fan_in as f32).sqrt();
            let len: usize = shape.iter().product();
            let data = (0..len).map(|_| rng.gen_range(-bound..bound)).collect();
            tensors.insert(name.to_string(), Tensor { shape, data });
        }
        Self {
            n_r,
            n_t,
            hidden,
            tensors,
            schedule_hash: None,
        }
    }

    fn expected_shapes(hidden: usize) -> BTreeMap<&'static str, Vec<usize>> {
        BTreeMap::from([
            ("conv1.w", vec![hidden, 2, 3, 3]),
            ("conv1.b", vec![hidden]),
            ("film.fc1.w", vec![hidden, EMBED_DIM]),
            ("film.fc1.b", vec![hidden]),
            ("film.fc2.w", vec![hidden, hidden]),
            ("film.fc2.b", vec![hidden]),
            ("conv2.w", vec![hidden, hidden, 3, 3]),
            ("conv2.b", vec![hidden]),
            ("conv3.w", vec![2, hidden, 3, 3]),
            ("conv3.b", vec![2]),
        ])
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.n_r, self.n_t)
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn schedule_hash(&self) -> Option<&str> {
        self.schedule_hash.as_deref()
    }

    pub fn with_schedule_hash(mut self, hash: impl Into<String>) -> Self {
        self.schedule_hash = Some(hash.into());
        self
    }

    fn t(&self, name: &str) -> &[f32] {
        &self.tensors[name].data
    }

    /// Serializes to the weight-file layout.
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut blob = Vec::new();
        let mut entries = BTreeMap::new();
        for name in TENSOR_NAMES {
            let t = &self.tensors[name];
            entries.insert(
                name.to_string(),
                TensorEntry {
                    shape: t.shape.clone(),
                    dtype: "f32".into(),
                    offset: blob.len(),
                },
            );
            for v in &t.data {
                blob.extend_from_slice(&v.to_le_bytes());
            }
        }
        let header = WeightHeader {
            version: 1,
            arch: ARCH.into(),
            n_r: self.n_r,
            n_t: self.n_t,
            tensors: entries,
            schedule_hash: self.schedule_hash.clone(),
            blob_sha256: Some(hex_sha256(&blob)),
        };
        let json = serde_json::to_vec(&header)?;
        let mut out = Vec::with_capacity(8 + json.len() + blob.len());
        out.extend_from_slice(WEIGHT_MAGIC);
        out.extend_from_slice(&(json.len() as u32).to_le_bytes());
        out.extend_from_slice(&json);
        out.extend_from_slice(&blob);
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader::new(bytes);
        if r.take(4)? != WEIGHT_MAGIC {
            return Err(Error::Format("not a weight file (bad magic)".into()));
        }
        let hlen = r.u32()? as usize;
        let header: WeightHeader = serde_json::from_slice(r.take(hlen)?)?;
        let blob = r.take(r.remaining())?;
        if header.arch != ARCH {
            return Err(Error::Format(format!("unsupported architecture {:?}", header.arch)));
        }
        if let Some(expected) = &header.blob_sha256 {
            let got = hex_sha256(blob);
            if &got != expected {
                return Err(Error::Checksum(format!("weight blob sha256 {got}, header says {expected}")));
            }
        }
        let hidden = header
            .tensors
            .get("conv1.b")
            .and_then(|e| e.shape.first().copied())
            .ok_or_else(|| Error::Format("missing tensor conv1.b".into()))?;
        let shapes = Self::expected_shapes(hidden);
        let mut tensors = BTreeMap::new();
        for name in TENSOR_NAMES {
            let entry = header
                .tensors
                .get(name)
                .ok_or_else(|| Error::Format(format!("missing tensor {name}")))?;
            if entry.dtype != "f32" {
                return Err(Error::Format(format!("tensor {name}: dtype {}", entry.dtype)));
            }
            let len: usize = entry.shape.iter().product();
            let end = entry.offset + 4 * len;
            if end > blob.len() {
                return Err(Error::Format(format!("tensor {name} runs past the blob")));
            }
            let data = blob[entry.offset..end]
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect();
            let t = Tensor {
                shape: entry.shape.clone(),
                data,
            };
            t.check(name, &shapes[name])?;
            tensors.insert(name.to_string(), t);
        }
        Ok(Self {
            n_r: header.n_r,
            n_t: header.n_t,
            hidden,
            tensors,
            schedule_hash: header.schedule_hash,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }

    /// Loads and checks that the file was produced for this schedule (when
    /// the file records a schedule hash).
    pub fn load_for_schedule(path: &Path, schedule_hash: &str) -> Result<Self> {
        let net = Self::load(path)?;
        if let Some(h) = &net.schedule_hash {
            if h != schedule_hash {
                return Err(Error::Config(format!(
                    "weights were trained for schedule {h}, config schedule is {schedule_hash}"
                )));
            }
        }
        Ok(net)
    }

    /// Forward pass on `H̃_t` at step `t` of a `t_max`-step schedule.
    pub fn forward(&self, x: &ComplexMatrix, t: usize, t_max: usize) -> Result<ComplexMatrix> {
        if x.shape() != (self.n_r, self.n_t) {
            return Err(Error::dim(format!(
                "network is {}x{}, input is {}x{}",
                self.n_r,
                self.n_t,
                x.rows(),
                x.cols()
            )));
        }
        let (h, w) = (self.n_r, self.n_t);
        let plane = h * w;
        let mut input = vec![0.0f64; 2 * plane];
        for (i, z) in x.data().iter().enumerate() {
            input[i] = z.re;
            input[plane + i] = z.im;
        }

        let emb = time_embedding(t, t_max);
        let f1 = dense(&emb, self.t("film.fc1.w"), self.t("film.fc1.b"), self.hidden);
        let f1: Vec<f64> = f1.into_iter().map(silu).collect();
        let film = dense(&f1, self.t("film.fc2.w"), self.t("film.fc2.b"), self.hidden);

        let mut a1 = conv3x3(&input, 2, self.hidden, h, w, self.t("conv1.w"), self.t("conv1.b"));
        for (c, bias) in film.iter().enumerate() {
            for v in &mut a1[c * plane..(c + 1) * plane] {
                *v = silu(*v + bias);
            }
        }
        let mut a2 = conv3x3(&a1, self.hidden, self.hidden, h, w, self.t("conv2.w"), self.t("conv2.b"));
        a2.iter_mut().for_each(|v| *v = silu(*v));
        let out = conv3x3(&a2, self.hidden, 2, h, w, self.t("conv3.w"), self.t("conv3.b"));

        let data = (0..plane)
            .map(|i| Complex64::new(out[i], out[plane + i]))
            .collect();
        ComplexMatrix::new(h, w, data)
    }
}

impl Denoiser for NeuralDenoiser {
    fn predict_noise(&self, x: &ComplexMatrix, t: usize, s: &NoiseSchedule) -> Result<ComplexMatrix> {
        self.forward(x, t, s.t_max())
    }
}

/// Sinusoidal embedding of `t/T`: `[sin(1000·s·f_k), cos(1000·s·f_k)]` with
/// `f_k = 10000^(−k/8)`, `k = 0..8`.
pub fn time_embedding(t: usize, t_max: usize) -> [f64; EMBED_DIM] {
    let s = t as f64 / t_max as f64;
    let half = EMBED_DIM / 2;
    let mut out = [0.0; EMBED_DIM];
    for k in 0..half {
        let freq = (-(10000f64.ln()) * k as f64 / half as f64).exp();
        let arg = 1000.0 * s * freq;
        out[k] = arg.sin();
        out[half + k] = arg.cos();
    }
    out
}

fn silu(x: f64) -> f64 {
    x / (1.0 + (-x).exp())
}

fn dense(x: &[f64], w: &[f32], b: &[f32], out: usize) -> Vec<f64> {
    let n_in = x.len();
    (0..out)
        .map(|o| {
            let row = &w[o * n_in..(o + 1) * n_in];
            b[o] as f64 + row.iter().zip(x).map(|(w, x)| *w as f64 * x).sum::<f64>()
        })
        .collect()
}

/// 3×3 cross-correlation with circular padding, channel-major planes.
fn conv3x3(
    input: &[f64],
    c_in: usize,
    c_out: usize,
    h: usize,
    w: usize,
    weight: &[f32],
    bias: &[f32],
) -> Vec<f64> {
    let plane = h * w;
    let mut out = vec![0.0; c_out * plane];
    for o in 0..c_out {
        let dst = &mut out[o * plane..(o + 1) * plane];
        dst.iter_mut().for_each(|v| *v = bias[o] as f64);
        for i in 0..c_in {
            let src = &input[i * plane..(i + 1) * plane];
            let k = &weight[(o * c_in + i) * 9..(o * c_in + i + 1) * 9];
            for r in 0..h {
                for c in 0..w {
                    let mut acc = 0.0;
                    for dr in 0..3 {
                        let rr = (r + h + dr - 1) % h;
                        for dc in 0..3 {
                            let cc = (c + w + dc - 1) % w;
                            acc += k[dr * 3 + dc] as f64 * src[rr * w + cc];
                        }
                    }
                    dst[r * w + c] += acc;
                }
            }
        }
    }
    out
}

fn hex_sha256(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// One golden triple: network output for `input` at step `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Golden {
    pub t: usize,
    pub input: ComplexMatrix,
    pub output: ComplexMatrix,
}

/// Golden file: `"GDGV"`, u16 version, u16 n_r, u16 n_t, u32 count, then per
/// entry a u32 step index followed by input and output matrices as LE f64
/// interleaved (re, im) row-major.
pub fn write_goldens(path: &Path, goldens: &[Golden]) -> Result<()> {
    let (n_r, n_t) = goldens.first().map_or((0, 0), |g| g.input.shape());
    let mut buf = Vec::new();
    write_header(&mut buf, GOLDEN_MAGIC, n_r, n_t, goldens.len())?;
    for g in goldens {
        if g.input.shape() != (n_r, n_t) || g.output.shape() != (n_r, n_t) {
            return Err(Error::dim("golden matrices differ in shape"));
        }
        let t = u32::try_from(g.t).map_err(|_| Error::dim("step index exceeds u32"))?;
        buf.extend_from_slice(&t.to_le_bytes());
        put_matrix(&mut buf, &g.input);
        put_matrix(&mut buf, &g.output);
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn read_goldens(path: &Path) -> Result<Vec<Golden>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut r = ByteReader::new(&bytes);
    let (n_r, n_t, count) = read_header(&mut r, GOLDEN_MAGIC)?;
    let goldens = (0..count)
        .map(|_| {
            let t = r.u32()? as usize;
            Ok(Golden {
                t,
                input: r.matrix(n_r, n_t)?,
                output: r.matrix(n_r, n_t)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if !r.is_at_end() {
        return Err(Error::Format("trailing bytes in golden file".into()));
    }
    Ok(goldens)
}

/// Five seeded unit-variance inputs at five spread-out steps.
pub fn golden_inputs(n_r: usize, n_t: usize, t_max: usize, seed: u64) -> Vec<(usize, ComplexMatrix)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..5)
        .map(|k| {
            let t = (1 + k * (t_max - 1) / 4).clamp(1, t_max);
            (t, crate::rng::complex_normal_matrix(&mut rng, n_r, n_t, 1.0))
        })
        .collect()
}

pub fn emit_goldens(net: &NeuralDenoiser, t_max: usize, seed: u64) -> Result<Vec<Golden>> {
    let (n_r, n_t) = net.dims();
    golden_inputs(n_r, n_t, t_max, seed)
        .into_iter()
        .map(|(t, input)| {
            let output = net.forward(&input, t, t_max)?;
            Ok(Golden { t, input, output })
        })
        .collect()
}

/// Largest absolute deviation between the network and recorded goldens.
pub fn golden_max_abs_error(net: &NeuralDenoiser, goldens: &[Golden], t_max: usize) -> Result<f64> {
    let mut worst = 0.0f64;
    for g in goldens {
        let out = net.forward(&g.input, g.t, t_max)?;
        for (a, b) in out.data().iter().zip(g.output.data()) {
            worst = worst.max((a.re - b.re).abs()).max((a.im - b.im).abs());
        }
    }
    Ok(worst)
}
