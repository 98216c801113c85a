use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reward::MeasurementRecord;

/// Shape of the synthetic system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticModelParams {
    /// Requests per second one VM serves before saturating.
    pub per_vm_capacity: f64,
    pub base_latency_ms: f64,
    pub saturation_exponent: f64,
    /// Standard deviation of the multiplicative noise.
    pub noise_stddev_fraction: f64,
    pub samples_per_point: usize,
    pub seed: u64,
}

impl Default for SyntheticModelParams {
    fn default() -> Self {
        SyntheticModelParams {
            per_vm_capacity: 4000.0,
            base_latency_ms: 20.0,
            saturation_exponent: 2.0,
            noise_stddev_fraction: 0.05,
            samples_per_point: 10,
            seed: 1,
        }
    }
}

impl SyntheticModelParams {
    pub fn check(&self) -> Result<()> {
        if !(self.per_vm_capacity > 0.0) || !(self.base_latency_ms > 0.0) {
            return Err(Error::Config("capacity and base latency must be positive".into()));
        }
        if !(self.saturation_exponent > 0.0) {
            return Err(Error::Config("saturation exponent must be positive".into()));
        }
        if !(self.noise_stddev_fraction >= 0.0) {
            return Err(Error::Config("noise fraction must be nonnegative".into()));
        }
        if self.samples_per_point < 1 {
            return Err(Error::Config("samples_per_point must be at least 1".into()));
        }
        Ok(())
    }

    /// Noise-free (latency, throughput) at `vms` and `load`.
    pub fn ideal(&self, vms: u32, load: f64) -> (f64, f64) {
        let capacity = vms as f64 * self.per_vm_capacity;
        let u = load / capacity;
        let throughput = load.min(capacity);
        let latency = self.base_latency_ms
            * (1.0 + u.powf(self.saturation_exponent) / (1.0 - u.min(0.999)).max(f64::EPSILON));
        (latency, throughput)
    }
}

/// Evenly spaced loads from `min` to `max` inclusive.
pub fn load_grid(min: f64, max: f64, step: f64) -> Vec<f64> {
    if !(step > 0.0) || max < min {
        return Vec::new();
    }
    let n = ((max - min) / step + 1e-9).floor() as usize;
    (0..=n).map(|i| min + i as f64 * step).collect()
}

/// Multiplicative Normal(1, σ) perturbation clamped at zero.
pub(crate) fn perturb(value: f64, sigma: f64, z: f64) -> f64 {
    (value * (1.0 + sigma * z)).max(0.0)
}

/// Several noisy samples for every (size, load) grid point.
pub fn gen_synthetic_dataset(params: &SyntheticModelParams, sizes: std::ops::RangeInclusive<u32>, loads: &[f64]) -> Result<Vec<MeasurementRecord>> {
    params.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut out = Vec::with_capacity(sizes.clone().count() * loads.len() * params.samples_per_point);
    let mut time = 0;
    for vms in sizes {
        if vms == 0 {
            return Err(Error::Config("dataset sizes must be positive".into()));
        }
        for &load in loads {
            let (latency, throughput) = params.ideal(vms, load);
            for _ in 0..params.samples_per_point {
                let zl: f64 = StandardNormal.sample(&mut rng);
                let zt: f64 = StandardNormal.sample(&mut rng);
                out.push(MeasurementRecord {
                    time,
                    vms_num: vms,
                    load,
                    latency_ms: perturb(latency, params.noise_stddev_fraction, zl),
                    throughput: perturb(throughput, params.noise_stddev_fraction, zt),
                });
                time += 1;
            }
        }
    }
    Ok(out)
}
