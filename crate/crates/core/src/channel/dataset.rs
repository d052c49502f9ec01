use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::ChannelModel;
use crate::rng::stream;
use crate::{ComplexMatrix, Error, Result};

pub const DATASET_MAGIC: &[u8; 4] = b"GDCH";
const DATASET_VERSION: u16 = 1;

/// Sidecar record describing how a dataset file was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format: String,
    pub version: u16,
    pub n_r: usize,
    pub n_t: usize,
    pub count: usize,
    pub seed: u64,
    pub model: ChannelModel,
}

impl DatasetManifest {
    pub fn path_for(dataset: &Path) -> PathBuf {
        let mut s = dataset.as_os_str().to_owned();
        s.push(".json");
        PathBuf::from(s)
    }
}

/// Samples `count` spatial channels (trial `i` uses the stream derived from
/// `(seed, i)`) and writes the dataset plus its manifest.
pub fn generate_dataset(
    model: &ChannelModel,
    count: usize,
    seed: u64,
    path: &Path,
) -> Result<DatasetManifest> {
    if count == 0 {
        return Err(Error::Config("dataset count must be at least 1".into()));
    }
    model.validate()?;
    let (n_r, n_t) = model.dims();
    let matrices: Vec<ComplexMatrix> = (0..count as u64)
        .map(|i| model.sample(&mut stream(seed, &[i])).h)
        .collect();
    write_dataset(path, &matrices)?;
    let manifest = DatasetManifest {
        format: "GDCH".into(),
        version: DATASET_VERSION,
        n_r,
        n_t,
        count,
        seed,
        model: model.clone(),
    };
    let mpath = DatasetManifest::path_for(path);
    let text = serde_json::to_string_pretty(&manifest)?;
    fs::write(&mpath, text).map_err(|e| Error::io(&mpath, e))?;
    Ok(manifest)
}

pub fn write_dataset(path: &Path, matrices: &[ComplexMatrix]) -> Result<()> {
    let (n_r, n_t) = matrices.first().map_or((0, 0), |m| m.shape());
    let mut buf = Vec::with_capacity(14 + matrices.len() * n_r * n_t * 16);
    write_header(&mut buf, DATASET_MAGIC, n_r, n_t, matrices.len())?;
    for m in matrices {
        if m.shape() != (n_r, n_t) {
            return Err(Error::dim("dataset matrices differ in shape"));
        }
        put_matrix(&mut buf, m);
    }
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(&buf).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_dataset(path: &Path) -> Result<Vec<ComplexMatrix>> {
    let mut bytes = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    let mut r = ByteReader::new(&bytes);
    let (n_r, n_t, count) = read_header(&mut r, DATASET_MAGIC)?;
    let matrices = (0..count)
        .map(|_| r.matrix(n_r, n_t))
        .collect::<Result<Vec<_>>>()?;
    if !r.is_at_end() {
        return Err(Error::Format(format!(
            "{} trailing bytes after {count} matrices",
            r.remaining()
        )));
    }
    Ok(matrices)
}

pub(crate) fn write_header(
    buf: &mut Vec<u8>,
    magic: &[u8; 4],
    n_r: usize,
    n_t: usize,
    count: usize,
) -> Result<()> {
    let n_r = u16::try_from(n_r).map_err(|_| Error::dim("n_r exceeds u16"))?;
    let n_t = u16::try_from(n_t).map_err(|_| Error::dim("n_t exceeds u16"))?;
    let count = u32::try_from(count).map_err(|_| Error::dim("count exceeds u32"))?;
    buf.extend_from_slice(magic);
    buf.extend_from_slice(&DATASET_VERSION.to_le_bytes());
    buf.extend_from_slice(&n_r.to_le_bytes());
    buf.extend_from_slice(&n_t.to_le_bytes());
    buf.extend_from_slice(&count.to_le_bytes());
    Ok(())
}

pub(crate) fn read_header(r: &mut ByteReader<'_>, magic: &[u8; 4]) -> Result<(usize, usize, usize)> {
    let got = r.take(4)?;
    if got != magic {
        return Err(Error::Format(format!(
            "bad magic {:?}, expected {:?}",
            String::from_utf8_lossy(got),
            String::from_utf8_lossy(magic)
        )));
    }
    let version = r.u16()?;
    if version != DATASET_VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let n_r = r.u16()? as usize;
    let n_t = r.u16()? as usize;
    let count = r.u32()? as usize;
    Ok((n_r, n_t, count))
}

pub(crate) fn put_matrix(buf: &mut Vec<u8>, m: &ComplexMatrix) {
    for z in m.data() {
        buf.extend_from_slice(&z.re.to_le_bytes());
        buf.extend_from_slice(&z.im.to_le_bytes());
    }
}

pub(crate) struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    pub(crate) fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    pub(crate) fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(Error::Format(format!(
                "truncated file: wanted {n} bytes at offset {}",
                self.pos
            ))),
        }
    }

    pub(crate) fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    pub(crate) fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub(crate) fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub(crate) fn matrix(&mut self, rows: usize, cols: usize) -> Result<ComplexMatrix> {
        let data = (0..rows * cols)
            .map(|_| Ok(Complex64::new(self.f64()?, self.f64()?)))
            .collect::<Result<Vec<_>>>()?;
        ComplexMatrix::new(rows, cols, data)
    }

    pub(crate) fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    pub(crate) fn is_at_end(&self) -> bool {
        self.remaining() == 0
    }
}
