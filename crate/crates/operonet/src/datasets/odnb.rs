use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{DataError, DatasetMeta, OperatorDataset};

const MAGIC: &[u8; 4] = b"ODNB";
const VERSION: u32 = 1;

/// Binary dataset format: magic "ODNB", version u32, then m, d_x, d_y, N, Q
/// as u64, then sensor_locations, query_points, inputs, targets as
/// little-endian f64 arrays, then the meta record as length-prefixed UTF-8.
/// read_dataset(write_dataset(ds)) is bit-exact.
pub fn write_dataset(ds: &OperatorDataset, path: &Path) -> Result<(), DataError> {
    let io_err = |e| DataError::Io {
        path: path.display().to_string(),
        source: e,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
    let mut out = |bytes: &[u8]| w.write_all(bytes).map_err(io_err);
    out(MAGIC)?;
    out(&VERSION.to_le_bytes())?;
    for v in [ds.m, ds.d_x, ds.d_y, ds.n, ds.q] {
        out(&(v as u64).to_le_bytes())?;
    }
    for arr in [&ds.sensor_locations, &ds.query_points, &ds.inputs, &ds.targets] {
        for &v in arr.iter() {
            out(&v.to_le_bytes())?;
        }
    }
    let meta = encode_meta(&ds.meta);
    out(&(meta.len() as u64).to_le_bytes())?;
    out(meta.as_bytes())?;
    w.flush().map_err(io_err)?;
    Ok(())
}

pub fn read_dataset(path: &Path) -> Result<OperatorDataset, DataError> {
    let file = File::open(path).map_err(|e| DataError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let mut r = Reader {
        inner: BufReader::new(file),
        path: path.display().to_string(),
        offset: 0,
    };
    let mut magic = [0u8; 4];
    r.exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(r.format("bad magic"));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(r.format(&format!("unsupported version {version}")));
    }
    let m = r.u64()? as usize;
    let d_x = r.u64()? as usize;
    let d_y = r.u64()? as usize;
    let n = r.u64()? as usize;
    let q = r.u64()? as usize;
    let total = m
        .checked_mul(d_x)
        .and_then(|a| {
            q.checked_mul(d_y)
                .and_then(|b| n.checked_mul(m).and_then(|c| n.checked_mul(q).map(|d| a + b + c + d)))
        })
        .ok_or_else(|| r.format("header sizes overflow"))?;
    if total > (1 << 32) {
        return Err(r.format("header sizes unreasonably large"));
    }
    let sensor_locations = r.f64s(m * d_x)?;
    let query_points = r.f64s(q * d_y)?;
    let inputs = r.f64s(n * m)?;
    let targets = r.f64s(n * q)?;
    let meta_len = r.u64()? as usize;
    let mut meta_bytes = vec![0u8; meta_len];
    r.exact(&mut meta_bytes)?;
    let meta_str =
        String::from_utf8(meta_bytes).map_err(|_| r.format("meta is not valid UTF-8"))?;
    let meta = decode_meta(&meta_str).ok_or_else(|| r.format("malformed meta record"))?;
    let ds = OperatorDataset {
        m,
        d_x,
        d_y,
        n,
        q,
        sensor_locations,
        query_points,
        inputs,
        targets,
        meta,
    };
    ds.validate().map_err(|e| DataError::Format {
        path: path.display().to_string(),
        offset: 0,
        what: e.to_string(),
    })?;
    Ok(ds)
}

fn encode_meta(m: &DatasetMeta) -> String {
    // Newlines in notes are escaped so the record stays line-oriented.
    format!(
        "name={}\nseed={}\nversion={}\nnotes={}",
        m.name,
        m.seed,
        m.version,
        m.notes.replace('\\', "\\\\").replace('\n', "\\n")
    )
}

fn decode_meta(s: &str) -> Option<DatasetMeta> {
    let mut name = None;
    let mut seed = None;
    let mut version = None;
    let mut notes = None;
    for line in s.lines() {
        let (k, v) = line.split_once('=')?;
        match k {
            "name" => name = Some(v.to_string()),
            "seed" => seed = v.parse::<u64>().ok(),
            "version" => version = v.parse::<u32>().ok(),
            "notes" => notes = Some(v.replace("\\n", "\n").replace("\\\\", "\\")),
            _ => return None,
        }
    }
    Some(DatasetMeta {
        name: name?,
        seed: seed?,
        version: version?,
        notes: notes?,
    })
}

struct Reader {
    inner: BufReader<File>,
    path: String,
    offset: u64,
}

impl Reader {
    fn exact(&mut self, buf: &mut [u8]) -> Result<(), DataError> {
        self.inner.read_exact(buf).map_err(|e| DataError::Format {
            path: self.path.clone(),
            offset: self.offset,
            what: if e.kind() == std::io::ErrorKind::UnexpectedEof {
                "truncated file".into()
            } else {
                e.to_string()
            },
        })?;
        self.offset += buf.len() as u64;
        Ok(())
    }

    fn u32(&mut self) -> Result<u32, DataError> {
        let mut b = [0u8; 4];
        self.exact(&mut b)?;
        Ok(u32::from_le_bytes(b))
    }

    fn u64(&mut self) -> Result<u64, DataError> {
        let mut b = [0u8; 8];
        self.exact(&mut b)?;
        Ok(u64::from_le_bytes(b))
    }

    fn f64s(&mut self, count: usize) -> Result<Vec<f64>, DataError> {
        let mut bytes = vec![0u8; count * 8];
        self.exact(&mut bytes)?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    fn format(&self, what: &str) -> DataError {
        DataError::Format {
            path: self.path.clone(),
            offset: self.offset,
            what: what.into(),
        }
    }
}
