//! Binary snapshot of a [`CitationGraph`].
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "DISP" | version u8 | n_papers u64 | n_edges u64
//! id dictionary        n × (len u32, utf-8 bytes)
//! out offsets          (n + 1) × u64
//! out targets          n_edges × u32
//! years                n × i32
//! doc types            n × u8
//! field offsets        (n + 1) × u64, field values × u32
//! author presence      n × u8
//! author offsets       (n + 1) × u64, authors × (len u32, utf-8 bytes)
//! checksum             CRC-64/XZ of everything above, u64
//! ```
//!
//! Only the out-edge CSR is stored; the in-edge CSR is its transpose.

use std::fs;
use std::io::Write;
use std::path::Path;

use crc::{Crc, CRC_64_XZ};

use crate::error::{Error, Result};
use crate::SNAPSHOT_FORMAT_VERSION;

use super::graph::{CitationGraph, Csr};
use super::record::{DocType, PaperRecord};

pub const SNAPSHOT_MAGIC: [u8; 4] = *b"DISP";

const CRC64: Crc<u64> = Crc::<u64>::new(&CRC_64_XZ);

fn put_str(buf: &mut Vec<u8>, s: &str) {
    buf.extend_from_slice(&(s.len() as u32).to_le_bytes());
    buf.extend_from_slice(s.as_bytes());
}

/// Serializes `graph` into a byte vector.
pub fn write_snapshot(graph: &CitationGraph) -> Vec<u8> {
    let papers = graph.papers();
    let csr = graph.out_csr();
    let mut buf = Vec::with_capacity(32 + papers.len() * 32 + csr.targets.len() * 4);
    buf.extend_from_slice(&SNAPSHOT_MAGIC);
    buf.push(SNAPSHOT_FORMAT_VERSION);
    buf.extend_from_slice(&(papers.len() as u64).to_le_bytes());
    buf.extend_from_slice(&(csr.targets.len() as u64).to_le_bytes());

    for p in papers {
        put_str(&mut buf, &p.id);
    }
    for &o in &csr.offsets {
        buf.extend_from_slice(&o.to_le_bytes());
    }
    for &t in &csr.targets {
        buf.extend_from_slice(&t.to_le_bytes());
    }
    for p in papers {
        buf.extend_from_slice(&p.year.to_le_bytes());
    }
    for p in papers {
        buf.push(p.doc_type.code());
    }

    let mut acc = 0u64;
    buf.extend_from_slice(&acc.to_le_bytes());
    for p in papers {
        acc += p.fields.len() as u64;
        buf.extend_from_slice(&acc.to_le_bytes());
    }
    for p in papers {
        for &f in &p.fields {
            buf.extend_from_slice(&f.to_le_bytes());
        }
    }

    for p in papers {
        buf.push(p.authors.is_some() as u8);
    }
    acc = 0;
    buf.extend_from_slice(&acc.to_le_bytes());
    for p in papers {
        acc += p.authors.as_ref().map_or(0, |a| a.len()) as u64;
        buf.extend_from_slice(&acc.to_le_bytes());
    }
    for p in papers {
        for a in p.authors.iter().flatten() {
            put_str(&mut buf, a);
        }
    }

    let sum = CRC64.checksum(&buf);
    buf.extend_from_slice(&sum.to_le_bytes());
    buf
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::SnapshotIntegrity("unexpected end of data".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn i32(&mut self) -> Result<i32> {
        Ok(i32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn count(&mut self) -> Result<usize> {
        let v = self.u64()?;
        // every counted item occupies at least one byte
        if v > self.bytes.len() as u64 {
            return Err(Error::SnapshotIntegrity(format!("implausible count {v}")));
        }
        Ok(v as usize)
    }

    fn string(&mut self) -> Result<String> {
        let len = self.u32()? as usize;
        let raw = self.take(len)?;
        String::from_utf8(raw.to_vec()).map_err(|_| Error::SnapshotIntegrity("invalid utf-8 string".into()))
    }

    fn offsets(&mut self, n: usize) -> Result<Vec<u64>> {
        let offsets = (0..=n).map(|_| self.u64()).collect::<Result<Vec<_>>>()?;
        if offsets[0] != 0 || offsets.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::SnapshotIntegrity("offsets are not monotone".into()));
        }
        Ok(offsets)
    }
}

/// Deserializes a snapshot produced by [`write_snapshot`].
///
/// The header is checked first so that files from other tools or format
/// versions report [`Error::IncompatibleSnapshot`]; any other damage,
/// including truncation, reports [`Error::SnapshotIntegrity`].
pub fn read_snapshot(bytes: &[u8]) -> Result<CitationGraph> {
    if bytes.len() < 5 || bytes[..4] != SNAPSHOT_MAGIC {
        return Err(Error::IncompatibleSnapshot("missing DISP magic bytes".into()));
    }
    if bytes[4] != SNAPSHOT_FORMAT_VERSION {
        return Err(Error::IncompatibleSnapshot(format!(
            "format version {} (supported: {SNAPSHOT_FORMAT_VERSION})",
            bytes[4]
        )));
    }
    if bytes.len() < 5 + 8 {
        return Err(Error::SnapshotIntegrity("file too short".into()));
    }
    let (body, trailer) = bytes.split_at(bytes.len() - 8);
    let stored = u64::from_le_bytes(trailer.try_into().unwrap());
    if CRC64.checksum(body) != stored {
        return Err(Error::SnapshotIntegrity("checksum mismatch".into()));
    }

    let mut r = Reader { bytes: body, pos: 5 };
    let n = r.count()?;
    let m = r.count()?;
    let ids = (0..n).map(|_| r.string()).collect::<Result<Vec<_>>>()?;
    let offsets = r.offsets(n)?;
    if offsets[n] != m as u64 {
        return Err(Error::SnapshotIntegrity("edge count does not match offsets".into()));
    }
    let targets = (0..m).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
    let years = (0..n).map(|_| r.i32()).collect::<Result<Vec<_>>>()?;
    let doc_types = (0..n)
        .map(|_| {
            let c = r.u8()?;
            DocType::from_code(c).ok_or_else(|| Error::SnapshotIntegrity(format!("unknown doc type code {c}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let field_offsets = r.offsets(n)?;
    let field_values = (0..field_offsets[n])
        .map(|_| r.u32())
        .collect::<Result<Vec<_>>>()?;
    let has_authors = (0..n).map(|_| r.u8()).collect::<Result<Vec<_>>>()?;
    let author_offsets = r.offsets(n)?;
    let authors = (0..author_offsets[n])
        .map(|_| r.string())
        .collect::<Result<Vec<_>>>()?;
    if r.pos != body.len() {
        return Err(Error::SnapshotIntegrity("trailing bytes after metadata".into()));
    }

    let mut papers = Vec::with_capacity(n);
    for (i, id) in ids.into_iter().enumerate() {
        let fields = field_values[field_offsets[i] as usize..field_offsets[i + 1] as usize].to_vec();
        let author_slice = &authors[author_offsets[i] as usize..author_offsets[i + 1] as usize];
        let authors = match has_authors[i] {
            0 if author_slice.is_empty() => None,
            1 => Some(author_slice.to_vec()),
            _ => return Err(Error::SnapshotIntegrity("bad author presence flag".into())),
        };
        papers.push(PaperRecord {
            id,
            year: years[i],
            doc_type: doc_types[i],
            fields,
            authors,
        });
    }
    let csr = Csr { offsets, targets };
    csr.validate(n).map_err(Error::SnapshotIntegrity)?;
    CitationGraph::from_parts(papers, csr).map_err(|e| Error::SnapshotIntegrity(e.to_string()))
}

/// Writes the snapshot atomically (temporary file, then rename).
pub fn save_snapshot(graph: &CitationGraph, path: &Path) -> Result<()> {
    let bytes = write_snapshot(graph);
    let tmp = path.with_extension("tmp-snapshot");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(&bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_snapshot(path: &Path) -> Result<CitationGraph> {
    read_snapshot(&fs::read(path)?)
}
