//! Dataset ingestion, report serialization and engine snapshots.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use crate::adaptive::{AdaptiveKind, SparseColumnStore};
use crate::error::{CoreError, Result};
use crate::eval::{AlgoId, CheckpointReport, EngineSnapshot};
use crate::graph::{BipartiteGraph, EdgeEvent, ItemId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetFormat {
    /// user, item, rating, timestamp records; kept when rating > threshold.
    RatingsTsv,
    /// user, item, timestamp records, all kept.
    PairsTsv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    User,
    Item,
    Rating,
    Timestamp,
}

#[derive(Debug, Clone)]
pub struct DatasetSpec {
    pub path: PathBuf,
    pub format: DatasetFormat,
    /// Strictly-greater cutoff applied to ratings-tsv records.
    pub rating_threshold: i64,
    pub delimiter: u8,
    /// Column meanings in file order; defaults depend on the format.
    pub field_order: Vec<Field>,
}

impl DatasetSpec {
    pub fn new(path: impl Into<PathBuf>, format: DatasetFormat) -> Self {
        DatasetSpec {
            path: path.into(),
            format,
            rating_threshold: 2,
            delimiter: b'\t',
            field_order: default_field_order(format),
        }
    }
}

pub fn default_field_order(format: DatasetFormat) -> Vec<Field> {
    match format {
        DatasetFormat::RatingsTsv => vec![Field::User, Field::Item, Field::Rating, Field::Timestamp],
        DatasetFormat::PairsTsv => vec![Field::User, Field::Item, Field::Timestamp],
    }
}

/// Reads a rating/pair log into a deduplicated, time-sorted add-event list.
pub fn parse_ratings(spec: &DatasetSpec) -> Result<Vec<EdgeEvent>> {
    let file = std::fs::File::open(&spec.path)?;
    parse_ratings_reader(BufReader::new(file), spec)
}

pub fn parse_ratings_reader<R: BufRead>(reader: R, spec: &DatasetSpec) -> Result<Vec<EdgeEvent>> {
    let needs_rating = spec.format == DatasetFormat::RatingsTsv;
    if needs_rating && !spec.field_order.contains(&Field::Rating) {
        return Err(CoreError::InvalidParameter(
            "ratings-tsv field order must include the rating column".into(),
        ));
    }
    for f in [Field::User, Field::Item, Field::Timestamp] {
        if !spec.field_order.contains(&f) {
            return Err(CoreError::InvalidParameter(format!(
                "field order is missing {f:?}"
            )));
        }
    }
    let delim = spec.delimiter as char;
    let mut events: Vec<EdgeEvent> = Vec::new();
    // Earliest (timestamp, input order) wins for duplicate pairs.
    let mut best: HashMap<(String, String), usize> = HashMap::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(delim).collect();
        if fields.len() < spec.field_order.len() {
            return Err(CoreError::Parse {
                line: lineno,
                message: format!(
                    "expected {} fields, found {}",
                    spec.field_order.len(),
                    fields.len()
                ),
            });
        }
        let mut user = "";
        let mut item = "";
        let mut rating: Option<i64> = None;
        let mut ts: Option<i64> = None;
        for (pos, field) in spec.field_order.iter().enumerate() {
            let raw = fields[pos].trim();
            match field {
                Field::User => user = raw,
                Field::Item => item = raw,
                Field::Rating => {
                    rating = Some(raw.parse::<i64>().map_err(|_| CoreError::Parse {
                        line: lineno,
                        message: format!("non-integer rating `{raw}`"),
                    })?)
                }
                Field::Timestamp => {
                    ts = Some(raw.parse::<i64>().map_err(|_| CoreError::Parse {
                        line: lineno,
                        message: format!("non-integer timestamp `{raw}`"),
                    })?)
                }
            }
        }
        if user.is_empty() || item.is_empty() {
            return Err(CoreError::Parse {
                line: lineno,
                message: "empty user or item label".into(),
            });
        }
        if needs_rating {
            let rating = rating.expect("field order contains rating");
            if rating <= spec.rating_threshold {
                continue;
            }
        }
        let ts = ts.expect("field order contains timestamp");
        let key = (user.to_owned(), item.to_owned());
        match best.get(&key) {
            Some(&idx) => {
                if ts < events[idx].ts {
                    events[idx].ts = ts;
                }
            }
            None => {
                best.insert(key, events.len());
                events.push(EdgeEvent::add(user, item, ts));
            }
        }
    }
    events.sort_by_key(|e| e.ts);
    Ok(events)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IngestStats {
    pub users: usize,
    pub items: usize,
    pub events: usize,
    pub avg_item_degree: f64,
}

pub fn ingest_stats(events: &[EdgeEvent]) -> IngestStats {
    let mut users = std::collections::HashSet::new();
    let mut items = std::collections::HashSet::new();
    for ev in events {
        users.insert(ev.user.as_str());
        items.insert(ev.item.as_str());
    }
    let items_n = items.len();
    IngestStats {
        users: users.len(),
        items: items_n,
        events: events.len(),
        avg_item_degree: if items_n == 0 {
            0.0
        } else {
            events.len() as f64 / items_n as f64
        },
    }
}

/// CSV header for a report with the given K ladder.
pub fn report_header(ks: &[usize]) -> String {
    let mut cols = vec!["edges_fed".to_owned(), "algorithm".to_owned(), "auc".to_owned()];
    for k in ks {
        cols.push(format!("precision@{k}"));
    }
    for k in ks {
        cols.push(format!("recall@{k}"));
    }
    cols.push("users_evaluated".to_owned());
    cols.push("us_per_event".to_owned());
    cols.join(",")
}

/// Fixed-point metric formatting: 12 significant digits for values in [0,1].
fn fmt_metric(v: f64) -> String {
    format!("{v:.12}")
}

pub fn report_to_csv(reports: &[CheckpointReport], ks: &[usize]) -> String {
    let mut out = report_header(ks);
    out.push('\n');
    for report in reports {
        for m in &report.metrics {
            let mut row = vec![
                report.edges_fed.to_string(),
                m.algo.name().to_owned(),
                fmt_metric(m.auc),
            ];
            for v in &m.precision {
                row.push(fmt_metric(*v));
            }
            for v in &m.recall {
                row.push(fmt_metric(*v));
            }
            row.push(m.users_evaluated.to_string());
            row.push(format!("{:.3}", m.us_per_event));
            out.push_str(&row.join(","));
            out.push('\n');
        }
    }
    out
}

pub fn write_report(reports: &[CheckpointReport], ks: &[usize], path: &Path) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(report_to_csv(reports, ks).as_bytes())?;
    Ok(())
}

const SNAPSHOT_MAGIC: &[u8; 8] = b"ADRECSNP";
const SNAPSHOT_VERSION: u32 = 1;

struct ByteWriter {
    buf: Vec<u8>,
}

impl ByteWriter {
    fn new() -> Self {
        ByteWriter { buf: Vec::new() }
    }

    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn f64(&mut self, v: f64) {
        self.u64(v.to_bits());
    }

    fn str(&mut self, s: &str) {
        self.u32(s.len() as u32);
        self.buf.extend_from_slice(s.as_bytes());
    }
}

struct ByteReader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    fn new(buf: &'a [u8]) -> Self {
        ByteReader { buf, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(CoreError::SnapshotCorrupt("unexpected end of data".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_bits(self.u64()?))
    }

    fn str(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        let bytes = self.take(n)?;
        String::from_utf8(bytes.to_vec())
            .map_err(|_| CoreError::SnapshotCorrupt("label is not UTF-8".into()))
    }
}

fn algo_tag(algo: AlgoId) -> u8 {
    match algo {
        AlgoId::Static => 0,
        AlgoId::Aaf => 1,
        AlgoId::Aas => 2,
    }
}

fn algo_from_tag(tag: u8) -> Result<AlgoId> {
    match tag {
        0 => Ok(AlgoId::Static),
        1 => Ok(AlgoId::Aaf),
        2 => Ok(AlgoId::Aas),
        other => Err(CoreError::SnapshotCorrupt(format!(
            "unknown algorithm tag {other}"
        ))),
    }
}

/// Serializes one engine snapshot into the versioned, checksummed container.
pub fn snapshot_to_bytes(snap: &EngineSnapshot, config_digest: u64) -> Vec<u8> {
    let mut w = ByteWriter::new();
    w.buf.extend_from_slice(SNAPSHOT_MAGIC);
    w.u32(SNAPSHOT_VERSION);
    w.u64(config_digest);
    w.u8(algo_tag(snap.algo));
    w.u64(snap.events_fed);

    let g = &snap.graph;
    w.u32(g.user_count() as u32);
    for u in 0..g.user_count() {
        w.str(g.user_label(crate::graph::UserId(u as u32)));
    }
    w.u32(g.item_count() as u32);
    for i in 0..g.item_count() {
        w.str(g.item_label(ItemId(i as u32)));
    }
    for u in 0..g.user_count() {
        let items = g.items_of(crate::graph::UserId(u as u32));
        w.u32(items.len() as u32);
        for &i in items {
            w.u32(i.0);
        }
    }
    w.u64(g.edge_count());

    match &snap.store {
        None => w.u8(0),
        Some(store) => {
            w.u8(1);
            w.u8(match store.kind() {
                AdaptiveKind::Aaf => 1,
                AdaptiveKind::Aas => 2,
            });
            w.u64(store.event_count());
            w.u32(store.column_count() as u32);
            for c in 0..store.column_count() {
                let entries: Vec<(ItemId, f64)> = store.column(ItemId(c as u32)).collect();
                w.u32(entries.len() as u32);
                for (row, v) in entries {
                    w.u32(row.0);
                    w.f64(v);
                }
            }
        }
    }

    let crc = crc32fast::hash(&w.buf);
    w.u32(crc);
    w.buf
}

/// Parses and validates a snapshot container; `expected_digest` of None skips
/// the configuration check.
pub fn snapshot_from_bytes(bytes: &[u8], expected_digest: Option<u64>) -> Result<EngineSnapshot> {
    if bytes.len() < SNAPSHOT_MAGIC.len() + 8 {
        return Err(CoreError::SnapshotCorrupt("file too short".into()));
    }
    let (payload, crc_bytes) = bytes.split_at(bytes.len() - 4);
    let stored_crc = u32::from_le_bytes(crc_bytes.try_into().unwrap());
    if crc32fast::hash(payload) != stored_crc {
        return Err(CoreError::SnapshotCorrupt(
            "checksum mismatch (truncated or corrupted file)".into(),
        ));
    }
    let mut r = ByteReader::new(payload);
    if r.take(8)? != SNAPSHOT_MAGIC {
        return Err(CoreError::SnapshotCorrupt("bad magic".into()));
    }
    let version = r.u32()?;
    if version != SNAPSHOT_VERSION {
        return Err(CoreError::SnapshotVersion {
            found: version,
            expected: SNAPSHOT_VERSION,
        });
    }
    let digest = r.u64()?;
    if let Some(expected) = expected_digest {
        if digest != expected {
            return Err(CoreError::SnapshotConfigMismatch);
        }
    }
    let algo = algo_from_tag(r.u8()?)?;
    let events_fed = r.u64()?;

    let user_count = r.u32()? as usize;
    let mut user_labels = Vec::with_capacity(user_count);
    for _ in 0..user_count {
        user_labels.push(r.str()?);
    }
    let item_count = r.u32()? as usize;
    let mut item_labels = Vec::with_capacity(item_count);
    for _ in 0..item_count {
        item_labels.push(r.str()?);
    }
    let mut graph = BipartiteGraph::new();
    let mut adjacency: Vec<Vec<u32>> = Vec::with_capacity(user_count);
    for _ in 0..user_count {
        let deg = r.u32()? as usize;
        let mut items = Vec::with_capacity(deg);
        for _ in 0..deg {
            items.push(r.u32()?);
        }
        adjacency.push(items);
    }
    let edge_count = r.u64()?;
    // Rebuild through the normal mutation path so every derived structure
    // (reverse lists, registries) comes out in canonical form. Item ids must
    // be registered in their original order even when an item's first edge
    // comes late, so pre-register labels by touching nothing but the
    // registries is not an option; instead replay edges in id order.
    {
        // Register all nodes first (degree-zero nodes must survive).
        for label in &user_labels {
            graph.register_user(label);
        }
        for label in &item_labels {
            graph.register_item(label);
        }
        for (u, items) in adjacency.iter().enumerate() {
            for &i in items {
                if i as usize >= item_labels.len() {
                    return Err(CoreError::SnapshotCorrupt(format!(
                        "item id {i} out of range"
                    )));
                }
                let out = graph.add_edge(&user_labels[u], &item_labels[i as usize]);
                if out.duplicate {
                    return Err(CoreError::SnapshotCorrupt("duplicate edge".into()));
                }
            }
        }
    }
    if graph.edge_count() != edge_count {
        return Err(CoreError::SnapshotCorrupt(format!(
            "edge count {} disagrees with header {}",
            graph.edge_count(),
            edge_count
        )));
    }
    graph.audit().map_err(|e| {
        CoreError::SnapshotCorrupt(format!("restored graph failed audit: {e}"))
    })?;

    let store = match r.u8()? {
        0 => None,
        1 => {
            let kind = match r.u8()? {
                1 => AdaptiveKind::Aaf,
                2 => AdaptiveKind::Aas,
                other => {
                    return Err(CoreError::SnapshotCorrupt(format!(
                        "unknown store kind {other}"
                    )))
                }
            };
            let events = r.u64()?;
            let column_count = r.u32()? as usize;
            let mut store = SparseColumnStore::new(kind);
            store.restore_begin(column_count, events);
            for c in 0..column_count {
                let len = r.u32()? as usize;
                let mut entries = Vec::with_capacity(len);
                for _ in 0..len {
                    let row = r.u32()?;
                    let v = r.f64()?;
                    entries.push((row, v));
                }
                store.restore_column(ItemId(c as u32), entries);
            }
            Some(store)
        }
        other => {
            return Err(CoreError::SnapshotCorrupt(format!(
                "unknown store flag {other}"
            )))
        }
    };

    Ok(EngineSnapshot {
        algo,
        events_fed,
        graph,
        store,
    })
}

pub fn save_snapshot(path: &Path, snap: &EngineSnapshot, config_digest: u64) -> Result<()> {
    let bytes = snapshot_to_bytes(snap, config_digest);
    let mut f = std::fs::File::create(path)?;
    f.write_all(&bytes)?;
    Ok(())
}

pub fn load_snapshot(path: &Path, expected_digest: Option<u64>) -> Result<EngineSnapshot> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    snapshot_from_bytes(&bytes, expected_digest)
}

/// Reads just the config digest of a snapshot file (after checksum
/// validation).
pub fn snapshot_digest(bytes: &[u8]) -> Result<u64> {
    if bytes.len() < 24 {
        return Err(CoreError::SnapshotCorrupt("file too short".into()));
    }
    let (payload, crc_bytes) = bytes.split_at(bytes.len() - 4);
    let stored_crc = u32::from_le_bytes(crc_bytes.try_into().unwrap());
    if crc32fast::hash(payload) != stored_crc {
        return Err(CoreError::SnapshotCorrupt("checksum mismatch".into()));
    }
    let mut r = ByteReader::new(payload);
    r.take(8)?;
    r.u32()?;
    r.u64()
}

/// FNV-1a over a canonical config string; stable across platforms.
pub fn config_digest(canonical: &str) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for b in canonical.as_bytes() {
        hash ^= *b as u64;
        hash = hash.wrapping_mul(0x1000_0000_01b3);
    }
    hash
}
