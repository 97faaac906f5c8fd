use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::operator::{ModelKind, OperatorModel};
use super::ModelError;

const MAGIC: &[u8; 4] = b"OPNW";
const VERSION: u32 = 1;

/// Write the model's parameters: magic, version, kind tag, then each block
/// as (name length u64, name bytes, value count u64, f64 values), all
/// little-endian. The round trip is bit-exact.
pub fn save_params(model: &OperatorModel, path: &Path) -> Result<(), ModelError> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&[model.kind().tag()])?;
    for block in model.blocks() {
        w.write_all(&(block.name.len() as u64).to_le_bytes())?;
        w.write_all(block.name.as_bytes())?;
        w.write_all(&(block.len as u64).to_le_bytes())?;
        for &v in &model.params[block.offset..block.offset + block.len] {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Load a checkpoint into an already-constructed model. The file's kind,
/// block names, order, and sizes must all match the model.
pub fn load_params(model: &mut OperatorModel, path: &Path) -> Result<(), ModelError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(ModelError::Format(format!(
            "{}: bad magic {:?}",
            path.display(),
            magic
        )));
    }
    let mut v4 = [0u8; 4];
    r.read_exact(&mut v4)?;
    let version = u32::from_le_bytes(v4);
    if version != VERSION {
        return Err(ModelError::Format(format!(
            "{}: unsupported version {version}",
            path.display()
        )));
    }
    let mut tag = [0u8; 1];
    r.read_exact(&mut tag)?;
    let kind = ModelKind::from_tag(tag[0]).ok_or_else(|| {
        ModelError::Format(format!("{}: unknown kind tag {}", path.display(), tag[0]))
    })?;
    if kind != model.kind() {
        return Err(ModelError::Format(format!(
            "{}: checkpoint kind {} does not match model kind {}",
            path.display(),
            kind.name(),
            model.kind().name()
        )));
    }
    let blocks: Vec<_> = model.blocks().to_vec();
    for block in &blocks {
        let mut l8 = [0u8; 8];
        r.read_exact(&mut l8)?;
        let name_len = u64::from_le_bytes(l8) as usize;
        let mut name = vec![0u8; name_len];
        r.read_exact(&mut name)?;
        let name = String::from_utf8(name)
            .map_err(|_| ModelError::Format(format!("{}: non-utf8 block name", path.display())))?;
        if name != block.name {
            return Err(ModelError::Format(format!(
                "{}: expected block '{}', found '{}'",
                path.display(),
                block.name,
                name
            )));
        }
        r.read_exact(&mut l8)?;
        let count = u64::from_le_bytes(l8) as usize;
        if count != block.len {
            return Err(ModelError::Format(format!(
                "{}: block '{}' has {count} values, model expects {}",
                path.display(),
                name,
                block.len
            )));
        }
        let mut f8 = [0u8; 8];
        for i in 0..count {
            r.read_exact(&mut f8)?;
            model.params[block.offset + i] = f64::from_le_bytes(f8);
        }
    }
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(ModelError::Format(format!(
            "{}: trailing bytes after final block",
            path.display()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffcore::Activation;
    use crate::models::mlp::MlpSpec;

    fn sample_model() -> OperatorModel {
        let branch = MlpSpec::new(vec![5, 7, 3], Activation::Prelu { slope: 0.25 }).unwrap();
        let trunk = MlpSpec::new(vec![1, 6, 3], Activation::Tanh).unwrap();
        let mut m = OperatorModel::make_deeponet(5, branch, trunk).unwrap();
        m.init_params(123);
        m
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.opnw");
        let model = sample_model();
        save_params(&model, &path).unwrap();
        let mut loaded = sample_model();
        loaded.init_params(999); // scramble
        load_params(&mut loaded, &path).unwrap();
        let a: Vec<u64> = model.params.iter().map(|v| v.to_bits()).collect();
        let b: Vec<u64> = loaded.params.iter().map(|v| v.to_bits()).collect();
        assert_eq!(a, b);
        // Re-saving produces an identical file.
        let path2 = dir.path().join("m2.opnw");
        save_params(&loaded, &path2).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&path2).unwrap());
    }

    #[test]
    fn rejects_wrong_kind_and_bad_magic() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.opnw");
        let model = sample_model();
        save_params(&model, &path).unwrap();

        let branch = MlpSpec::new(vec![5, 4], Activation::Tanh).unwrap();
        let target = MlpSpec::new(vec![5, 4, 1], Activation::Tanh).unwrap();
        let mut nomad = OperatorModel::make_nomad(5, branch, target).unwrap();
        let err = load_params(&mut nomad, &path).unwrap_err();
        assert!(err.to_string().contains("kind"));

        let garbage = dir.path().join("x.opnw");
        std::fs::write(&garbage, b"NOPE....").unwrap();
        let mut model2 = sample_model();
        let err = load_params(&mut model2, &garbage).unwrap_err();
        assert!(err.to_string().contains("magic"));
    }
}
