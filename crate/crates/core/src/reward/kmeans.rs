use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::logs::MeasurementRecord;
use crate::error::{Error, Result};
use crate::model::Center;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Latency,
    Throughput,
}

impl Metric {
    fn read(self, r: &MeasurementRecord) -> f64 {
        match self {
            Metric::Latency => r.latency_ms,
            Metric::Throughput => r.throughput,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusteringConfig {
    pub k: usize,
    /// Dimensions the distance is computed over.
    pub dims: Vec<Metric>,
    pub load_bucket_width: f64,
    pub max_iterations: usize,
    pub seed: u64,
}

impl Default for ClusteringConfig {
    fn default() -> Self {
        ClusteringConfig {
            k: 4,
            dims: vec![Metric::Latency, Metric::Throughput],
            load_bucket_width: 1000.0,
            max_iterations: 100,
            seed: 7,
        }
    }
}

impl ClusteringConfig {
    pub fn check(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::Config("clustering k must be at least 1".into()));
        }
        if self.dims.is_empty() {
            return Err(Error::Config("clustering needs at least one dimension".into()));
        }
        if !(self.load_bucket_width > 0.0) {
            return Err(Error::Config("load_bucket_width must be positive".into()));
        }
        if self.max_iterations < 1 {
            return Err(Error::Config("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

/// One behaviour cluster: the mean of its members in original units and the
/// fraction of points it holds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterSummary {
    pub center: Center,
    pub weight: f64,
    pub members: usize,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Min-max normalised coordinates; a constant dimension maps to 0.
pub(crate) fn normalise(records: &[MeasurementRecord], dims: &[Metric]) -> Vec<Vec<f64>> {
    let bounds: Vec<(f64, f64)> = dims
        .iter()
        .map(|&d| {
            records.iter().map(|r| d.read(r)).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v), hi.max(v))
            })
        })
        .collect();
    records
        .iter()
        .map(|r| {
            dims.iter()
                .zip(&bounds)
                .map(|(&d, &(lo, hi))| if hi > lo { (d.read(r) - lo) / (hi - lo) } else { 0.0 })
                .collect()
        })
        .collect()
}

fn nearest(point: &[f64], centers: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, c) in centers.iter().enumerate() {
        let d = sq_dist(point, c);
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    best
}

/// Groups the records into at most `k` behaviour clusters with Lloyd's
/// algorithm over min-max normalised dimensions.
///
/// The first seed is drawn from the distinct points with the configured seed;
/// each further seed is the point farthest from the seeds chosen so far.
/// Output is ordered by weight (descending), then latency (ascending).
pub fn cluster_behavior(records: &[MeasurementRecord], config: &ClusteringConfig) -> Result<Vec<ClusterSummary>> {
    config.check()?;
    if records.is_empty() {
        return Err(Error::NoData("no records to cluster".into()));
    }
    let points = normalise(records, &config.dims);

    let mut distinct: Vec<usize> = Vec::new();
    for (i, p) in points.iter().enumerate() {
        if !distinct.iter().any(|&j| points[j] == *p) {
            distinct.push(i);
        }
    }
    let k = config.k.min(distinct.len());

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut centers: Vec<Vec<f64>> = vec![points[distinct[rng.random_range(0..distinct.len())]].clone()];
    while centers.len() < k {
        let mut far = distinct[0];
        let mut far_d = -1.0;
        for &i in &distinct {
            let d = centers.iter().map(|c| sq_dist(&points[i], c)).fold(f64::INFINITY, f64::min);
            if d > far_d {
                far = i;
                far_d = d;
            }
        }
        centers.push(points[far].clone());
    }

    let mut assignment: Vec<usize> = points.iter().map(|p| nearest(p, &centers)).collect();
    for _ in 0..config.max_iterations {
        for (c, center) in centers.iter_mut().enumerate() {
            let members: Vec<&Vec<f64>> = points.iter().zip(&assignment).filter(|(_, &a)| a == c).map(|(p, _)| p).collect();
            // an emptied cluster keeps its previous center
            if !members.is_empty() {
                for (d, x) in center.iter_mut().enumerate() {
                    *x = members.iter().map(|p| p[d]).sum::<f64>() / members.len() as f64;
                }
            }
        }
        let next: Vec<usize> = points.iter().map(|p| nearest(p, &centers)).collect();
        if next == assignment {
            break;
        }
        assignment = next;
    }

    let n = records.len() as f64;
    let mut out: Vec<ClusterSummary> = (0..k)
        .filter_map(|c| {
            let members: Vec<&MeasurementRecord> =
                records.iter().zip(&assignment).filter(|(_, &a)| a == c).map(|(r, _)| r).collect();
            if members.is_empty() {
                return None;
            }
            let m = members.len() as f64;
            Some(ClusterSummary {
                center: Center {
                    latency_ms: members.iter().map(|r| r.latency_ms).sum::<f64>() / m,
                    throughput: members.iter().map(|r| r.throughput).sum::<f64>() / m,
                },
                weight: m / n,
                members: members.len(),
            })
        })
        .collect();
    out.sort_by(|a, b| {
        b.members
            .cmp(&a.members)
            .then(a.center.latency_ms.total_cmp(&b.center.latency_ms))
            .then(a.center.throughput.total_cmp(&b.center.throughput))
    });
    Ok(out)
}
