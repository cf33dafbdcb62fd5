//! Version-tagged JSON snapshots for the persisted indexes.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const VERSION: u32 = 1;
pub const SPARSE_KIND: &str = "hybridqa.sparse";
pub const DENSE_KIND: &str = "hybridqa.dense";

#[derive(Serialize)]
struct Envelope<'a, T> {
    kind: &'a str,
    version: u32,
    data: &'a T,
}

#[derive(Deserialize)]
struct OwnedEnvelope<T> {
    kind: String,
    version: u32,
    data: T,
}

pub fn write<T: Serialize>(path: &Path, kind: &str, data: &T) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    serde_json::to_writer(
        &mut out,
        &Envelope {
            kind,
            version: VERSION,
            data,
        },
    )
    .map_err(|e| Error::Snapshot(e.to_string()))?;
    out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn read<T: DeserializeOwned>(path: &Path, kind: &str) -> Result<T> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let env: OwnedEnvelope<T> = serde_json::from_reader(BufReader::new(file))
        .map_err(|e| Error::Snapshot(format!("{}: {e}", path.display())))?;
    if env.kind != kind {
        return Err(Error::Snapshot(format!(
            "{}: expected a {kind} snapshot, found {}",
            path.display(),
            env.kind
        )));
    }
    if env.version != VERSION {
        return Err(Error::Snapshot(format!(
            "{}: unsupported snapshot version {} (expected {VERSION})",
            path.display(),
            env.version
        )));
    }
    Ok(env.data)
}
