use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::sketch::{cleanup_ads, AdsEntry, Sketch};
use super::{hash_rank, SketchSet};
use crate::error::{Error, Result};
use crate::graph::VertexId;

/// On-disk sketch encodings.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SketchFormat {
    /// A header line followed by one `{"vertex", "entries"}` object per line.
    JsonLines,
    /// Little-endian, length-prefixed records.
    Binary,
}

const MAGIC: &[u8; 4] = b"ADS1";

#[derive(Serialize, Deserialize)]
struct Header {
    k: usize,
    seed: u64,
    vertices: usize,
}

#[derive(Serialize, Deserialize)]
struct Record {
    vertex: VertexId,
    entries: Vec<(VertexId, f64)>,
}

/// Writes clean sketches. Ranks are not stored; they are recomputed from the
/// seed on load.
pub fn save_sketches(set: &SketchSet, path: &Path, format: SketchFormat) -> Result<()> {
    if let Some(v) = set.sketches.iter().position(|s| !s.is_clean()) {
        return Err(Error::Contract(format!("sketch of vertex {v} is not clean")));
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let header = Header {
        k: set.k,
        seed: set.seed,
        vertices: set.sketches.len(),
    };
    let result = match format {
        SketchFormat::JsonLines => write_jsonl(&mut out, &header, set),
        SketchFormat::Binary => write_binary(&mut out, &header, set),
    };
    result.and_then(|_| out.flush()).map_err(|e| Error::io(path, e))
}

fn write_jsonl(out: &mut impl Write, header: &Header, set: &SketchSet) -> std::io::Result<()> {
    serde_json::to_writer(&mut *out, header)?;
    writeln!(out)?;
    for (v, s) in set.sketches.iter().enumerate() {
        let record = Record {
            vertex: v as VertexId,
            entries: s.entries().iter().map(|e| (e.vertex, e.distance)).collect(),
        };
        serde_json::to_writer(&mut *out, &record)?;
        writeln!(out)?;
    }
    Ok(())
}

fn write_binary(out: &mut impl Write, header: &Header, set: &SketchSet) -> std::io::Result<()> {
    out.write_all(MAGIC)?;
    out.write_all(&(header.k as u64).to_le_bytes())?;
    out.write_all(&header.seed.to_le_bytes())?;
    out.write_all(&(header.vertices as u64).to_le_bytes())?;
    for (v, s) in set.sketches.iter().enumerate() {
        out.write_all(&(v as u32).to_le_bytes())?;
        out.write_all(&(s.len() as u32).to_le_bytes())?;
        for e in s.entries() {
            out.write_all(&e.vertex.to_le_bytes())?;
            out.write_all(&e.distance.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn load_sketches(path: &Path, format: SketchFormat) -> Result<SketchSet> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let (header, records) = match format {
        SketchFormat::JsonLines => read_jsonl(&mut reader)?,
        SketchFormat::Binary => read_binary(&mut reader).map_err(|e| Error::io(path, e))?,
    };
    let mut sketches = vec![None; header.vertices];
    for record in records {
        let slot = sketches
            .get_mut(record.vertex as usize)
            .ok_or_else(|| Error::Validation(format!("sketch record for unknown vertex {}", record.vertex)))?;
        let entries = record
            .entries
            .into_iter()
            .map(|(u, distance)| AdsEntry {
                vertex: u,
                rank: hash_rank(u, header.seed),
                distance,
            })
            .collect();
        *slot = Some(cleanup_ads(&Sketch::from_raw(header.k, entries), header.k));
    }
    let sketches = sketches
        .into_iter()
        .enumerate()
        .map(|(v, s)| s.ok_or_else(|| Error::Validation(format!("missing sketch for vertex {v}"))))
        .collect::<Result<_>>()?;
    Ok(SketchSet {
        k: header.k,
        seed: header.seed,
        sketches,
    })
}

fn read_jsonl(reader: &mut impl BufRead) -> Result<(Header, Vec<Record>)> {
    let mut lines = reader.lines().enumerate();
    let parse_err = |line: usize, e: &dyn std::fmt::Display| Error::Parse {
        line,
        message: e.to_string(),
    };
    let header: Header = match lines.next() {
        Some((_, line)) => {
            let line = line.map_err(|e| parse_err(1, &e))?;
            serde_json::from_str(&line).map_err(|e| parse_err(1, &e))?
        }
        None => return Err(parse_err(1, &"empty sketch file")),
    };
    let mut records = Vec::with_capacity(header.vertices);
    for (i, line) in lines {
        let line = line.map_err(|e| parse_err(i + 1, &e))?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(serde_json::from_str(&line).map_err(|e| parse_err(i + 1, &e))?);
    }
    Ok((header, records))
}

fn read_binary(reader: &mut impl Read) -> std::io::Result<(Header, Vec<Record>)> {
    fn u32_le(r: &mut impl Read) -> std::io::Result<u32> {
        let mut b = [0; 4];
        r.read_exact(&mut b)?;
        Ok(u32::from_le_bytes(b))
    }
    fn u64_le(r: &mut impl Read) -> std::io::Result<u64> {
        let mut b = [0; 8];
        r.read_exact(&mut b)?;
        Ok(u64::from_le_bytes(b))
    }
    let mut magic = [0; 4];
    reader.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(std::io::Error::new(
            std::io::ErrorKind::InvalidData,
            "not a sketch file",
        ));
    }
    let header = Header {
        k: u64_le(reader)? as usize,
        seed: u64_le(reader)?,
        vertices: u64_le(reader)? as usize,
    };
    let mut records = Vec::with_capacity(header.vertices);
    for _ in 0..header.vertices {
        let vertex = u32_le(reader)?;
        let len = u32_le(reader)? as usize;
        let mut entries = Vec::with_capacity(len);
        for _ in 0..len {
            let u = u32_le(reader)?;
            let d = f64::from_bits(u64_le(reader)?);
            entries.push((u, d));
        }
        records.push(Record { vertex, entries });
    }
    Ok((header, records))
}
