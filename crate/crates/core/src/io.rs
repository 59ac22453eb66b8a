//! File formats: caps as JSON, JSON lines or a compact binary file,
//! partition records and subgroup listings.

use std::io::{BufRead, Read, Write};

use serde::{Deserialize, Serialize};

use crate::affine::MatrixGroup;
use crate::caps::known_max_cap_size;
use crate::error::{Error, Result};
use crate::finite_group::{matrix_group_fingerprint, GroupFingerprint};
use crate::geometry::{Dimension, Point};
use crate::partition::{pairing_counts, partition_class, Partition, PartitionClass};
use crate::pointset::PointSet;

/// The canonical cap of AG(4,3), as shipped with the crate.
pub const CANONICAL_CAP_FIXTURE: &str = include_str!("../fixtures/canonical_cap.json");

pub const BINARY_MAGIC: [u8; 4] = *b"CAPS";
pub const BINARY_VERSION: u16 = 1;
pub const BINARY_HEADER_LEN: usize = 16;

/// A cap as stored on disk.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CapDocument {
    pub dim: Dimension,
    pub points: PointSet,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor: Option<Point>,
}

/// Parses a cap file: either a bare JSON array of point indices (taken as
/// AG(4,3)) or a [`CapDocument`]. Points are checked against the dimension.
pub fn parse_cap_document(text: &str) -> Result<CapDocument> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    let doc = if value.is_array() {
        CapDocument {
            dim: Dimension::FOUR,
            points: serde_json::from_value(value)?,
            anchor: None,
        }
    } else {
        serde_json::from_value::<CapDocument>(value)?
    };
    if let Some(p) = (doc.points - doc.dim.universe()).min() {
        return Err(Error::InvalidPoint {
            dim: doc.dim.get(),
            index: p.index(),
        });
    }
    Ok(doc)
}

pub fn canonical_cap_fixture() -> Result<CapDocument> {
    parse_cap_document(CANONICAL_CAP_FIXTURE)
}

pub fn write_caps_jsonl<W: Write>(mut w: W, caps: &[PointSet]) -> Result<()> {
    for c in caps {
        serde_json::to_writer(&mut w, c)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_caps_jsonl<R: BufRead>(r: R) -> Result<Vec<PointSet>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let cap = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: i + 1,
            column: e.column(),
            message: e.to_string(),
        })?;
        out.push(cap);
    }
    Ok(out)
}

pub fn write_caps_json<W: Write>(w: W, caps: &[PointSet]) -> Result<()> {
    serde_json::to_writer(w, caps)?;
    Ok(())
}

/// Header: magic `CAPS`, version (u16 LE), n (u8), record length (u8),
/// record count (u64 LE). Each record is the sorted point indices, one
/// byte each.
pub fn write_caps_binary<W: Write>(mut w: W, dim: Dimension, caps: &[PointSet]) -> Result<()> {
    let len = caps.first().map_or(known_max_cap_size(dim), |c| c.len());
    if caps.iter().any(|c| c.len() != len) {
        return Err(Error::Precondition("binary records need caps of one size".into()));
    }
    let mut header = Vec::with_capacity(BINARY_HEADER_LEN);
    header.extend_from_slice(&BINARY_MAGIC);
    header.extend_from_slice(&BINARY_VERSION.to_le_bytes());
    header.push(dim.get());
    header.push(len as u8);
    header.extend_from_slice(&(caps.len() as u64).to_le_bytes());
    w.write_all(&header)?;
    for c in caps {
        let bytes: Vec<u8> = c.iter().map(Point::raw).collect();
        w.write_all(&bytes)?;
    }
    Ok(())
}

pub fn read_caps_binary<R: Read>(mut r: R) -> Result<(Dimension, Vec<PointSet>)> {
    let mut header = [0u8; BINARY_HEADER_LEN];
    r.read_exact(&mut header)?;
    let bad = |column: usize, message: &str| Error::Parse {
        line: 1,
        column,
        message: message.to_string(),
    };
    if header[..4] != BINARY_MAGIC {
        return Err(bad(1, "missing CAPS magic"));
    }
    if u16::from_le_bytes([header[4], header[5]]) != BINARY_VERSION {
        return Err(bad(5, "unsupported binary version"));
    }
    let dim = Dimension::new(header[6])?;
    let len = header[7] as usize;
    let count = u64::from_le_bytes(header[8..16].try_into().expect("8 bytes"));
    let mut body = Vec::new();
    r.read_to_end(&mut body)?;
    if len == 0 || body.len() as u64 != count * len as u64 {
        return Err(bad(BINARY_HEADER_LEN + 1, "record count does not match file size"));
    }
    let mut caps = Vec::with_capacity(count as usize);
    for (i, rec) in body.chunks(len).enumerate() {
        let offset = BINARY_HEADER_LEN + i * len;
        if rec.windows(2).any(|w| w[0] >= w[1]) {
            return Err(bad(offset + 1, "record is not strictly increasing"));
        }
        if let Some(&p) = rec.iter().find(|&&p| p as usize >= dim.size()) {
            return Err(bad(offset + 1, &format!("point {p} out of range")));
        }
        caps.push(rec.iter().map(|&p| Point::new_unchecked(p)).collect());
    }
    Ok((dim, caps))
}

/// A partition of AG(4,3) as stored on disk. `pair_types` lists the number
/// of partitions shared by each pair of blocks, in the order (0,1), (0,2),
/// (0,3), (1,2), (1,3), (2,3).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionRecord {
    #[serde(default = "default_dim")]
    pub dim: Dimension,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor: Option<Point>,
    pub blocks: Vec<PointSet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class: Option<PartitionClass>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pair_types: Vec<usize>,
}

fn default_dim() -> Dimension {
    Dimension::FOUR
}

impl PartitionRecord {
    /// The record of a partition; class and pair types are filled in for
    /// AG(4,3).
    pub fn from_partition(p: &Partition) -> Result<Self> {
        let (class, pair_types) = if p.dim() == Dimension::FOUR {
            let [a, b, c] = pairing_counts(p)?;
            // pairings are (01|23), (02|13), (03|12)
            (Some(partition_class(p)?), vec![a.0, b.0, c.0, c.1, b.1, a.1])
        } else {
            (None, Vec::new())
        };
        Ok(PartitionRecord {
            dim: p.dim(),
            anchor: p.anchor(),
            blocks: p.blocks().to_vec(),
            class,
            pair_types,
        })
    }

    /// Validates the record and returns its partition. A stated anchor or
    /// class must agree with the blocks.
    pub fn to_partition(&self) -> Result<Partition> {
        let p = Partition::new(self.dim, self.blocks.clone())?;
        if self.anchor.is_some() && self.anchor != p.anchor() {
            return Err(Error::Precondition("stated anchor disagrees with the blocks".into()));
        }
        if let Some(class) = self.class {
            if partition_class(&p)? != class {
                return Err(Error::Precondition("stated class disagrees with the blocks".into()));
            }
        }
        Ok(p)
    }
}

pub fn parse_partition_record(text: &str) -> Result<PartitionRecord> {
    Ok(serde_json::from_str(text)?)
}

/// A subgroup listing: sorted trit strings plus its fingerprint.
#[derive(Clone, Debug, Serialize)]
pub struct SubgroupDocument {
    pub elements: MatrixGroup,
    pub fingerprint: GroupFingerprint,
}

impl SubgroupDocument {
    pub fn new(group: &MatrixGroup) -> Result<Self> {
        Ok(SubgroupDocument {
            fingerprint: matrix_group_fingerprint(group)?,
            elements: group.clone(),
        })
    }
}

/// Reads the element list of a subgroup document back.
pub fn parse_subgroup_elements(dim: Dimension, text: &str) -> Result<MatrixGroup> {
    #[derive(Deserialize)]
    struct Doc {
        elements: Vec<String>,
    }
    let doc: Doc = serde_json::from_str(text)?;
    let elements = doc
        .elements
        .iter()
        .map(|s| crate::affine::AffineMap::parse_trit_string(dim, s))
        .collect::<Result<Vec<_>>>()?;
    Ok(MatrixGroup::from_elements(dim, elements))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::caps::{anchor0_caps, canonical_cap};

    #[test]
    fn fixture_matches_search() {
        let doc = canonical_cap_fixture().unwrap();
        assert_eq!(doc.dim, Dimension::FOUR);
        assert_eq!(doc.points, canonical_cap());
        assert_eq!(doc.anchor, Some(Point::ORIGIN));
    }

    #[test]
    fn jsonl_round_trip() {
        let caps = &anchor0_caps()[..50];
        let mut buf = Vec::new();
        write_caps_jsonl(&mut buf, caps).unwrap();
        assert_eq!(read_caps_jsonl(&buf[..]).unwrap(), caps);
        let err = read_caps_jsonl(&b"[1,2]\n[1,1]\n"[..]).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn binary_round_trip() {
        let caps = &anchor0_caps()[..100];
        let mut buf = Vec::new();
        write_caps_binary(&mut buf, Dimension::FOUR, caps).unwrap();
        assert_eq!(buf.len(), 16 + 100 * 20);
        assert_eq!(&buf[..4], b"CAPS");
        let (dim, back) = read_caps_binary(&buf[..]).unwrap();
        assert_eq!(dim, Dimension::FOUR);
        assert_eq!(back, caps);
        let mut broken = buf.clone();
        broken[0] = b'X';
        assert!(read_caps_binary(&broken[..]).is_err());
        assert!(read_caps_binary(&buf[..buf.len() - 1]).is_err());
    }

    #[test]
    fn cap_documents() {
        let bare = parse_cap_document("[0, 1, 80]").unwrap();
        assert_eq!(bare.dim, Dimension::FOUR);
        assert!(parse_cap_document(r#"{"dim": 2, "points": [9]}"#).is_err());
        assert!(matches!(
            parse_cap_document("[0, 1,"),
            Err(Error::Parse { .. })
        ));
    }
}
