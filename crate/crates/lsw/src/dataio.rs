//! On-disk formats shared with external exporters.
//!
//! A dataset lives in a directory:
//!
//! * `latents.f32`: magic `LSW3`, version `u32 = 1`, `N: u64`, `D: u64`, then
//!   `N×D` row-major `f32`, all little-endian;
//! * `scores.csv`: header `id,<attr1>,...`, one row per sample, ids `0..N`;
//! * `embeddings.f32` (optional): same layout as the latents with `E` columns;
//! * `meta.json`: space tag, attribute names, optional domain and generator.
//!
//! Readers validate everything and never repair data.

use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use lsw_core::{LatentDataset, Matrix, SpaceTag};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const MAGIC: &[u8; 4] = b"LSW3";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 24;

pub const LATENTS_FILE: &str = "latents.f32";
pub const SCORES_FILE: &str = "scores.csv";
pub const EMBEDDINGS_FILE: &str = "embeddings.f32";
pub const META_FILE: &str = "meta.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Meta {
    pub space_tag: SpaceTag,
    pub attribute_names: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<String>,
    /// Path of the generator spec, relative to the dataset directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<String>,
}

/// Writes `m` in the binary matrix layout, rounding to `f32`.
pub fn write_matrix<W: Write>(mut w: W, m: &Matrix) -> io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(m.rows() as u64).to_le_bytes())?;
    w.write_all(&(m.cols() as u64).to_le_bytes())?;
    for &v in m.as_slice() {
        w.write_all(&(v as f32).to_le_bytes())?;
    }
    w.flush()
}

/// Parses a complete binary matrix; `path` only labels errors.
pub fn decode_matrix(bytes: &[u8], path: &Path) -> Result<Matrix> {
    if bytes.len() < HEADER_LEN {
        return Err(CliError::format(
            path,
            format!("truncated header ({} bytes)", bytes.len()),
        ));
    }
    if &bytes[..4] != MAGIC {
        return Err(CliError::format(
            path,
            format!(
                "bad magic {:?}, expected \"LSW3\"",
                String::from_utf8_lossy(&bytes[..4])
            ),
        ));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(CliError::format(
            path,
            format!("unsupported version {version}, expected {VERSION}"),
        ));
    }
    let n = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let d = u64::from_le_bytes(bytes[16..24].try_into().unwrap());
    let payload = n
        .checked_mul(d)
        .and_then(|c| c.checked_mul(4))
        .and_then(|b| usize::try_from(b).ok())
        .ok_or_else(|| CliError::format(path, format!("shape {n}×{d} overflows")))?;
    if bytes.len() - HEADER_LEN != payload {
        return Err(CliError::format(
            path,
            format!(
                "header declares {n}×{d} ({payload} payload bytes) but file has {}",
                bytes.len() - HEADER_LEN
            ),
        ));
    }
    let data = bytes[HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    Ok(Matrix::from_vec(n as usize, d as usize, data)?)
}

pub fn read_matrix(path: &Path) -> Result<Matrix> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    decode_matrix(&bytes, path)
}

pub fn save_matrix(path: &Path, m: &Matrix) -> Result<()> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    write_matrix(BufWriter::new(file), m).map_err(|e| CliError::io(path, e))
}

fn sibling(path: &Path, name: &str) -> PathBuf {
    path.parent().unwrap_or(Path::new("")).join(name)
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => CliError::io(path, io),
            _ => unreachable!(),
        }
    } else {
        CliError::format(path, e.to_string())
    }
}

pub fn write_scores<W: Write>(w: W, names: &[String], scores: &Matrix) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(std::iter::once("id").chain(names.iter().map(String::as_str)))?;
    for (i, row) in scores.iter_rows().enumerate() {
        out.write_record(std::iter::once(i.to_string()).chain(row.iter().map(|v| v.to_string())))?;
    }
    out.flush()?;
    Ok(())
}

/// Parses `scores.csv`, returning the attribute names (header order) and the
/// N×A score matrix. Values outside `[0, 1]` are rejected with their row
/// and column.
pub fn read_scores<R: Read>(r: R, path: &Path) -> Result<(Vec<String>, Matrix)> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let header = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    if header.get(0) != Some("id") {
        return Err(CliError::format(path, "first header column must be `id`"));
    }
    let names: Vec<String> = header.iter().skip(1).map(str::to_owned).collect();
    let mut data = Vec::new();
    let mut n = 0usize;
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let id = record.get(0).unwrap_or_default();
        if id.trim().parse::<usize>().ok() != Some(n) {
            return Err(CliError::format(
                path,
                format!("row {n}: id `{id}` out of sequence, expected {n}"),
            ));
        }
        for (j, name) in names.iter().enumerate() {
            let field = record.get(j + 1).unwrap_or_default();
            let v: f64 = field.trim().parse().map_err(|_| {
                CliError::format(
                    path,
                    format!("row {n}, column `{name}`: `{field}` is not a number"),
                )
            })?;
            if !(0.0..=1.0).contains(&v) {
                return Err(CliError::format(
                    path,
                    format!("row {n}, column `{name}`: score {v} outside [0, 1]"),
                ));
            }
            data.push(v);
        }
        n += 1;
    }
    Ok((names.clone(), Matrix::from_vec(n, names.len(), data)?))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| CliError::format(path, e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_reader(BufReader::new(file)).map_err(|e| {
        if e.is_io() {
            CliError::io(path, io::Error::other(e))
        } else {
            CliError::format(path, e.to_string())
        }
    })
}

/// Writes the latents to `path` and the scores, embeddings and meta sidecars
/// next to it.
pub fn write_latents(path: &Path, dataset: &LatentDataset, generator: Option<&str>) -> Result<()> {
    save_matrix(path, dataset.latents())?;
    let scores_path = sibling(path, SCORES_FILE);
    let file = File::create(&scores_path).map_err(|e| CliError::io(&scores_path, e))?;
    write_scores(
        BufWriter::new(file),
        dataset.attribute_names(),
        dataset.scores(),
    )
    .map_err(|e| csv_error(&scores_path, e))?;
    let emb_path = sibling(path, EMBEDDINGS_FILE);
    match dataset.embeddings() {
        Some(emb) => save_matrix(&emb_path, emb)?,
        None => match fs::remove_file(&emb_path) {
            Err(e) if e.kind() != io::ErrorKind::NotFound => {
                return Err(CliError::io(&emb_path, e))
            }
            _ => {}
        },
    }
    let meta = Meta {
        space_tag: dataset.space_tag(),
        attribute_names: dataset.attribute_names().to_vec(),
        domain: dataset.domain().map(str::to_owned),
        generator: generator.map(str::to_owned),
    };
    write_json(&sibling(path, META_FILE), &meta)
}

/// Reads a dataset written by [`write_latents`] and checks every invariant.
pub fn read_latents(path: &Path) -> Result<(LatentDataset, Meta)> {
    let latents = read_matrix(path)?;
    let meta: Meta = read_json(&sibling(path, META_FILE))?;
    let scores_path = sibling(path, SCORES_FILE);
    let file = File::open(&scores_path).map_err(|e| CliError::io(&scores_path, e))?;
    let (names, scores) = read_scores(BufReader::new(file), &scores_path)?;
    if names != meta.attribute_names {
        return Err(CliError::format(
            &scores_path,
            format!(
                "header attributes {names:?} disagree with meta.json {:?}",
                meta.attribute_names
            ),
        ));
    }
    if scores.rows() != latents.rows() {
        return Err(CliError::format(
            &scores_path,
            format!(
                "{} score rows but {} latent rows",
                scores.rows(),
                latents.rows()
            ),
        ));
    }
    let emb_path = sibling(path, EMBEDDINGS_FILE);
    let embeddings = if emb_path.exists() {
        let emb = read_matrix(&emb_path)?;
        if emb.rows() != latents.rows() {
            return Err(CliError::format(
                &emb_path,
                format!(
                    "{} embedding rows but {} latent rows",
                    emb.rows(),
                    latents.rows()
                ),
            ));
        }
        Some(emb)
    } else {
        None
    };
    let dataset = LatentDataset::new(meta.space_tag, latents, names, scores, embeddings)?
        .with_domain(meta.domain.clone());
    Ok((dataset, meta))
}

pub fn write_dataset(dir: &Path, dataset: &LatentDataset, generator: Option<&str>) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    write_latents(&dir.join(LATENTS_FILE), dataset, generator)
}

pub fn read_dataset(dir: &Path) -> Result<(LatentDataset, Meta)> {
    read_latents(&dir.join(LATENTS_FILE))
}

/// Rounds every value to `f32`, i.e. what a write/read cycle preserves.
pub fn round_f32(m: &Matrix) -> Matrix {
    Matrix::from_vec(
        m.rows(),
        m.cols(),
        m.as_slice().iter().map(|&v| v as f32 as f64).collect(),
    )
    .unwrap()
}
