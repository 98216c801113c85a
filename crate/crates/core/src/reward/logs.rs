use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One monitoring sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    /// Tick index.
    pub time: u64,
    #[serde(rename = "vms")]
    pub vms_num: u32,
    /// Incoming load in req/s.
    pub load: f64,
    pub latency_ms: f64,
    /// Served requests per second.
    pub throughput: f64,
}

impl MeasurementRecord {
    pub fn check(&self) -> std::result::Result<(), String> {
        if self.vms_num < 1 {
            return Err("vms must be at least 1".into());
        }
        for (name, v) in [
            ("load", self.load),
            ("latency_ms", self.latency_ms),
            ("throughput", self.throughput),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(format!("{name} must be a nonnegative number, got {v}"));
            }
        }
        Ok(())
    }
}

/// Result of a log lookup.
#[derive(Debug, Clone, PartialEq)]
pub struct LogSelection {
    pub records: Vec<MeasurementRecord>,
    /// Records came from a neighbouring bucket or size.
    pub interpolated: bool,
    pub vms_num: u32,
    /// Bucket index (load / bucket width, rounded).
    pub bucket: i64,
}

/// Measurement log indexed by (VM count, load bucket).
///
/// Ingestion needs `&mut self`; lookups take `&self`, so the store can sit
/// behind an `RwLock` for one writer and many readers.
#[derive(Debug, Clone)]
pub struct LogStore {
    bucket_width: f64,
    buckets: BTreeMap<(u32, i64), Vec<MeasurementRecord>>,
    len: usize,
}

impl LogStore {
    pub fn new(bucket_width: f64) -> Result<Self> {
        if !(bucket_width > 0.0) {
            return Err(Error::Config(format!("bucket width must be positive, got {bucket_width}")));
        }
        Ok(LogStore {
            bucket_width,
            buckets: BTreeMap::new(),
            len: 0,
        })
    }

    pub fn from_records(bucket_width: f64, records: impl IntoIterator<Item = MeasurementRecord>) -> Result<Self> {
        let mut store = LogStore::new(bucket_width)?;
        for r in records {
            store.ingest(r)?;
        }
        Ok(store)
    }

    pub fn bucket_width(&self) -> f64 {
        self.bucket_width
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn bucket_of(&self, load: f64) -> i64 {
        (load / self.bucket_width).round() as i64
    }

    pub fn ingest(&mut self, record: MeasurementRecord) -> Result<()> {
        record.check().map_err(Error::Config)?;
        let key = (record.vms_num, self.bucket_of(record.load));
        self.buckets.entry(key).or_default().push(record);
        self.len += 1;
        Ok(())
    }

    /// Distinct VM counts present in the log.
    pub fn sizes(&self) -> Vec<u32> {
        let mut sizes: Vec<u32> = self.buckets.keys().map(|k| k.0).collect();
        sizes.dedup();
        sizes
    }

    pub fn records(&self) -> impl Iterator<Item = &MeasurementRecord> {
        self.buckets.values().flatten()
    }

    /// Records for `vms_num` in the bucket nearest `load`. Without an exact
    /// hit the nearest bucket of the same size is used; a size without any
    /// data borrows from the nearest size that has some. Ties go to the lower
    /// bucket or size.
    pub fn select_logs(&self, vms_num: u32, load: f64) -> Result<LogSelection> {
        if self.buckets.is_empty() {
            return Err(Error::NoData("measurement log is empty".into()));
        }
        let bucket = self.bucket_of(load);
        if let Some(records) = self.buckets.get(&(vms_num, bucket)) {
            return Ok(LogSelection {
                records: records.clone(),
                interpolated: false,
                vms_num,
                bucket,
            });
        }
        let sizes = self.sizes();
        let size = *sizes
            .iter()
            .min_by_key(|&&s| (s.abs_diff(vms_num), s))
            .expect("store is nonempty");
        let (&(_, b), records) = self
            .buckets
            .range((size, i64::MIN)..=(size, i64::MAX))
            .min_by_key(|((_, b), _)| ((b - bucket).unsigned_abs(), *b))
            .expect("size has at least one bucket");
        Ok(LogSelection {
            records: records.clone(),
            interpolated: true,
            vms_num: size,
            bucket: b,
        })
    }

    pub fn read_csv(bucket_width: f64, reader: impl Read) -> Result<Self> {
        let records = read_records(reader)?;
        LogStore::from_records(bucket_width, records)
    }

    pub fn load_csv(bucket_width: f64, path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path.as_ref())?;
        LogStore::read_csv(bucket_width, file)
    }
}

/// Reads `time,vms,load,latency_ms,throughput` rows. Malformed rows fail with
/// their line number.
pub fn read_records(reader: impl Read) -> Result<Vec<MeasurementRecord>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let expected = ["time", "vms", "load", "latency_ms", "throughput"];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(Error::Malformed {
            line: 1,
            message: format!("expected header `{}`", expected.join(",")),
        });
    }
    let mut out = Vec::new();
    for row in rdr.deserialize::<MeasurementRecord>() {
        let record = row.map_err(|e| Error::Malformed {
            line: e.position().map(|p| p.line() as usize).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = out.len() + 2;
        record.check().map_err(|message| Error::Malformed { line, message })?;
        out.push(record);
    }
    Ok(out)
}

pub fn write_records<'a>(writer: impl Write, records: impl IntoIterator<Item = &'a MeasurementRecord>) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    for r in records {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    Ok(())
}
