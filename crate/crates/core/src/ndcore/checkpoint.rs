//! Parameter checkpoints: a `key=value` text manifest next to a raw
//! little-endian `f64` blob.
//!
//! ```text
//! format=ldseq-checkpoint-v1
//! dtype=f64
//! param.count=2
//! param.0.name=char_emb
//! param.0.shape=40x32
//! param.0.offset=0
//! param.0.len=1280
//! ...
//! meta.model=ld-seq2seq
//! ```
//!
//! Offsets are in bytes from the start of the blob. Metadata keys are free
//! form and sorted, so manifests are byte-stable.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use super::{ParamStore, Tensor};
use crate::error::{Error, Result};

pub const FORMAT: &str = "ldseq-checkpoint-v1";
pub const MANIFEST_FILE: &str = "manifest.txt";
pub const BLOB_FILE: &str = "params.bin";

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Checkpoint {
    pub params: ParamStore,
    pub meta: BTreeMap<String, String>,
}

fn ckpt_err(path: &Path, msg: impl Into<String>) -> Error {
    Error::Checkpoint {
        path: path.to_path_buf(),
        msg: msg.into(),
    }
}

/// Renders the manifest text and blob bytes without touching disk.
pub fn encode(params: &ParamStore, meta: &BTreeMap<String, String>) -> (String, Vec<u8>) {
    let mut manifest = format!("format={FORMAT}\ndtype=f64\nparam.count={}\n", params.len());
    let mut blob = Vec::with_capacity(params.num_values() * 8);
    for (i, (name, t)) in params.iter().enumerate() {
        let shape: Vec<String> = t.shape().iter().map(usize::to_string).collect();
        manifest.push_str(&format!(
            "param.{i}.name={name}\nparam.{i}.shape={}\nparam.{i}.offset={}\nparam.{i}.len={}\n",
            shape.join("x"),
            blob.len(),
            t.numel()
        ));
        for v in t.data() {
            blob.extend_from_slice(&v.to_le_bytes());
        }
    }
    for (k, v) in meta {
        manifest.push_str(&format!("meta.{k}={v}\n"));
    }
    (manifest, blob)
}

pub fn save(dir: &Path, params: &ParamStore, meta: &BTreeMap<String, String>) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let (manifest, blob) = encode(params, meta);
    let mpath = dir.join(MANIFEST_FILE);
    fs::write(&mpath, manifest).map_err(|e| Error::io(&mpath, e))?;
    let bpath = dir.join(BLOB_FILE);
    fs::write(&bpath, blob).map_err(|e| Error::io(&bpath, e))?;
    Ok(())
}

pub fn load(dir: &Path) -> Result<Checkpoint> {
    let mpath = dir.join(MANIFEST_FILE);
    let bpath = dir.join(BLOB_FILE);
    let text = fs::read_to_string(&mpath).map_err(|e| Error::io(&mpath, e))?;
    let blob = fs::read(&bpath).map_err(|e| Error::io(&bpath, e))?;
    decode(&mpath, &text, &blob)
}

pub fn decode(path: &Path, manifest: &str, blob: &[u8]) -> Result<Checkpoint> {
    let mut kv = BTreeMap::new();
    for (n, line) in manifest.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| ckpt_err(path, format!("line {}: expected key=value", n + 1)))?;
        kv.insert(k.to_string(), v.to_string());
    }
    let get = |k: &str| {
        kv.get(k)
            .map(String::as_str)
            .ok_or_else(|| ckpt_err(path, format!("missing key `{k}`")))
    };
    if get("format")? != FORMAT {
        return Err(ckpt_err(path, format!("unsupported format `{}`", get("format")?)));
    }
    if get("dtype")? != "f64" {
        return Err(ckpt_err(path, format!("unsupported dtype `{}`", get("dtype")?)));
    }
    let parse = |k: &str| -> Result<usize> {
        get(k)?
            .parse()
            .map_err(|_| ckpt_err(path, format!("bad integer for `{k}`")))
    };
    let count = parse("param.count")?;
    let mut params = ParamStore::new();
    for i in 0..count {
        let name = get(&format!("param.{i}.name"))?.to_string();
        let shape: Vec<usize> = get(&format!("param.{i}.shape"))?
            .split('x')
            .map(|d| d.parse().map_err(|_| ckpt_err(path, format!("bad shape for `{name}`"))))
            .collect::<Result<_>>()?;
        let offset = parse(&format!("param.{i}.offset"))?;
        let len = parse(&format!("param.{i}.len"))?;
        let bytes = blob
            .get(offset..offset + len * 8)
            .ok_or_else(|| ckpt_err(path, format!("blob too short for `{name}`")))?;
        let data = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let t = Tensor::new(shape, data).map_err(|e| ckpt_err(path, e.to_string()))?;
        params.insert(name, t);
    }
    let meta = kv
        .iter()
        .filter_map(|(k, v)| k.strip_prefix("meta.").map(|k| (k.to_string(), v.clone())))
        .collect();
    Ok(Checkpoint { params, meta })
}

/// Manifest path for a checkpoint directory.
pub fn manifest_path(dir: &Path) -> PathBuf {
    dir.join(MANIFEST_FILE)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(
            a in proptest::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 1..40),
            b in proptest::collection::vec(-1e3f64..1e3, 6),
        ) {
            let mut store = ParamStore::new();
            store.insert("a", Tensor::row(a.clone()).unwrap());
            store.insert("dec.b", Tensor::matrix(2, 3, b.clone()).unwrap());
            let mut meta = BTreeMap::new();
            meta.insert("model".to_string(), "ld-seq2seq".to_string());
            let dir = tempfile::tempdir().unwrap();
            save(dir.path(), &store, &meta).unwrap();
            let back = load(dir.path()).unwrap();
            prop_assert_eq!(back.meta, meta);
            for ((n1, t1), (n2, t2)) in store.iter().zip(back.params.iter()) {
                prop_assert_eq!(n1, n2);
                prop_assert_eq!(t1.shape(), t2.shape());
                let bits1: Vec<u64> = t1.data().iter().map(|v| v.to_bits()).collect();
                let bits2: Vec<u64> = t2.data().iter().map(|v| v.to_bits()).collect();
                prop_assert_eq!(bits1, bits2);
            }
        }
    }

    #[test]
    fn truncated_blob_is_rejected() {
        let mut store = ParamStore::new();
        store.insert("w", Tensor::row(vec![1.0, 2.0]).unwrap());
        let (manifest, blob) = encode(&store, &BTreeMap::new());
        let err = decode(Path::new("x"), &manifest, &blob[..8]).unwrap_err();
        assert!(err.to_string().contains("blob too short"));
    }
}
