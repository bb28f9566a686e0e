use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::CouponInstance;

pub const EVENT_HEADER: &str = "period_id,bin_index,offset_ps";

/// One detector event. `bin_index` is 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EventRecord {
    pub period_id: u64,
    pub bin_index: u32,
    pub offset_ps: u32,
}

/// Run metadata kept next to an event file: what the events alone cannot
/// tell (the hidden set, the number of periods including empty ones).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub n: usize,
    /// 1-based indices of `S̄`.
    pub missing: Vec<usize>,
    pub periods: u64,
    pub intensity: f64,
    pub bin_ps: u32,
}

impl RunMeta {
    pub fn instance(&self) -> Result<CouponInstance> {
        CouponInstance::from_missing(self.n, self.missing.iter().copied())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Parse { line: e.line(), reason: e.to_string() })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("meta serialises") + "\n"
    }
}

/// Events plus metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct EventLog {
    pub meta: RunMeta,
    pub records: Vec<EventRecord>,
}

/// Parses and validates an event CSV. Records come back ordered by
/// `(period_id, bin_index, offset_ps)`.
pub fn ingest<R: Read>(reader: R, n: usize, bin_ps: u32) -> Result<Vec<EventRecord>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers().map_err(|e| csv_error(e, 1))?.clone();
    if !headers.is_empty() && headers.iter().collect::<Vec<_>>().join(",") != EVENT_HEADER {
        return Err(Error::Parse { line: 1, reason: format!("expected header `{EVENT_HEADER}`") });
    }
    let mut out = Vec::new();
    for (row, rec) in rdr.deserialize::<EventRecord>().enumerate() {
        let line = row + 2;
        let rec = rec.map_err(|e| csv_error(e, line))?;
        if rec.bin_index == 0 || rec.bin_index as usize > n {
            return Err(Error::Parse { line, reason: format!("bin_index {} outside 1..={n}", rec.bin_index) });
        }
        if rec.offset_ps >= bin_ps {
            return Err(Error::Parse { line, reason: format!("offset_ps {} outside [0, {bin_ps})", rec.offset_ps) });
        }
        out.push(rec);
    }
    out.sort_unstable();
    Ok(out)
}

pub fn ingest_path(path: &Path, n: usize, bin_ps: u32) -> Result<Vec<EventRecord>> {
    ingest(std::fs::File::open(path)?, n, bin_ps)
}

fn csv_error(e: csv::Error, fallback_line: usize) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(fallback_line);
    Error::Parse { line, reason: e.to_string() }
}

/// Canonical CSV: header, one event per line, LF endings.
pub fn export(records: &[EventRecord]) -> String {
    let mut s = String::with_capacity(EVENT_HEADER.len() + 1 + records.len() * 16);
    s.push_str(EVENT_HEADER);
    s.push('\n');
    for r in records {
        s.push_str(&format!("{},{},{}\n", r.period_id, r.bin_index, r.offset_ps));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file() {
        assert!(ingest("".as_bytes(), 10, 900).unwrap().is_empty());
        assert!(ingest("period_id,bin_index,offset_ps\n".as_bytes(), 10, 900).unwrap().is_empty());
    }

    #[test]
    fn malformed_offset_names_line() {
        let text = "period_id,bin_index,offset_ps\n0,3,120\n1,2,abc\n";
        match ingest(text.as_bytes(), 10, 900) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn range_checks() {
        let bad_bin = "period_id,bin_index,offset_ps\n0,11,5\n";
        assert!(matches!(ingest(bad_bin.as_bytes(), 10, 900), Err(Error::Parse { line: 2, .. })));
        let zero_bin = "period_id,bin_index,offset_ps\n0,0,5\n";
        assert!(ingest(zero_bin.as_bytes(), 10, 900).is_err());
        let bad_offset = "period_id,bin_index,offset_ps\n0,1,5\n0,2,900\n";
        assert!(matches!(ingest(bad_offset.as_bytes(), 10, 900), Err(Error::Parse { line: 3, .. })));
        let bad_header = "a,b,c\n0,1,1\n";
        assert!(matches!(ingest(bad_header.as_bytes(), 10, 900), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn sorted_and_round_trips() {
        let text = "period_id,bin_index,offset_ps\n2,1,5\n0,7,899\n0,3,10\n";
        let recs = ingest(text.as_bytes(), 10, 900).unwrap();
        let canonical = export(&recs);
        assert_eq!(canonical, "period_id,bin_index,offset_ps\n0,3,10\n0,7,899\n2,1,5\n");
        assert_eq!(export(&ingest(canonical.as_bytes(), 10, 900).unwrap()), canonical);
    }

    #[test]
    fn meta_round_trip() {
        let meta = RunMeta { n: 5, missing: vec![2, 4], periods: 10, intensity: 1.5, bin_ps: 900 };
        let back: RunMeta = serde_json::from_str(&meta.to_json()).unwrap();
        assert_eq!(back, meta);
        assert_eq!(back.instance().unwrap().members(), &[1, 3, 5]);
    }
}
