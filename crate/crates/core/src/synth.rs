//! Seeded synthetic benchmark datasets drawn from bivariate Gaussians.
//!
//! Three fixed settings, each 10,000 points: 2,500 per (z, y) component with
//! exactly balanced labels and groups. Setting 1 differs across groups only
//! in the negative-class location (one group's negatives overlap the
//! positives), setting 2 shifts both class clouds between groups in opposite
//! directions, and setting 3 makes one group broadly harder to classify.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// One bivariate Gaussian component of a synthetic setting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianSpec {
    pub mean: [f64; 2],
    /// Covariance matrix, row major. Must be symmetric positive-definite.
    pub cov: [[f64; 2]; 2],
    pub count: usize,
    pub label: i8,
    pub sensitive: u8,
}

/// Lower Cholesky factor of a symmetric positive-definite 2×2 matrix.
fn cholesky2(cov: [[f64; 2]; 2]) -> Result<[[f64; 2]; 2]> {
    let [[a, b], [b2, c]] = cov;
    if (b - b2).abs() > 1e-12 {
        return Err(Error::InvalidInput("covariance matrix must be symmetric".into()));
    }
    if !(a > 0.0) {
        return Err(Error::InvalidInput("covariance matrix is not positive-definite".into()));
    }
    let l11 = a.sqrt();
    let l21 = b / l11;
    let rem = c - l21 * l21;
    if !(rem > 0.0) {
        return Err(Error::InvalidInput("covariance matrix is not positive-definite".into()));
    }
    Ok([[l11, 0.0], [l21, rem.sqrt()]])
}

/// Draw `spec.count` rows from the component distribution.
pub fn sample_gaussian(spec: &GaussianSpec, rng: &mut ChaCha8Rng) -> Result<Vec<[f64; 2]>> {
    let l = cholesky2(spec.cov)?;
    Ok((0..spec.count)
        .map(|_| {
            let u1: f64 = rng.sample(StandardNormal);
            let u2: f64 = rng.sample(StandardNormal);
            [spec.mean[0] + l[0][0] * u1, spec.mean[1] + l[1][0] * u1 + l[1][1] * u2]
        })
        .collect())
}

/// The three benchmark settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SyntheticSetting {
    /// Unequal false positive rates only.
    One,
    /// FPR and FNR disparities of opposite sign.
    Two,
    /// FPR and FNR disparities of the same sign.
    Three,
}

impl SyntheticSetting {
    pub fn from_index(i: u8) -> Result<Self> {
        match i {
            1 => Ok(Self::One),
            2 => Ok(Self::Two),
            3 => Ok(Self::Three),
            other => Err(Error::InvalidInput(format!("unknown synthetic setting {other}"))),
        }
    }

    /// The four (z, y) Gaussian components, 2,500 points each.
    pub fn components(self) -> [GaussianSpec; 4] {
        const COUNT: usize = 2_500;
        // Setting 1's z=0 negative component: the asymmetric matrix this
        // benchmark is usually written with is not a covariance; what
        // svd-based samplers actually draw from it has covariance
        // (AᵀA)^{1/2} = [[16,12],[12,24]]/√40.
        let c0n1 = {
            let s = 40.0_f64.sqrt();
            [[16.0 / s, 12.0 / s], [12.0 / s, 24.0 / s]]
        };
        let spec = |mean, cov, label, sensitive| GaussianSpec {
            mean,
            cov,
            count: COUNT,
            label,
            sensitive,
        };
        match self {
            SyntheticSetting::One => [
                spec([2.0, 2.0], [[3.0, 1.0], [1.0, 3.0]], 1, 0),
                spec([2.0, 2.0], [[3.0, 1.0], [1.0, 3.0]], 1, 1),
                spec([-1.0, 0.0], c0n1, -1, 0),
                spec([-2.0, -2.0], [[3.0, 1.0], [1.0, 3.0]], -1, 1),
            ],
            SyntheticSetting::Two => [
                spec([2.0, 0.0], [[5.0, 1.0], [1.0, 5.0]], 1, 0),
                spec([2.0, 3.0], [[5.0, 1.0], [1.0, 5.0]], 1, 1),
                spec([-1.0, -3.0], [[5.0, 1.0], [1.0, 5.0]], -1, 0),
                spec([-1.0, 0.0], [[5.0, 1.0], [1.0, 5.0]], -1, 1),
            ],
            SyntheticSetting::Three => [
                spec([1.0, 2.0], [[5.0, 2.0], [2.0, 5.0]], 1, 0),
                spec([2.0, 3.0], [[10.0, 1.0], [1.0, 4.0]], 1, 1),
                spec([0.0, -1.0], [[7.0, 1.0], [1.0, 7.0]], -1, 0),
                spec([-5.0, 0.0], [[5.0, 1.0], [1.0, 5.0]], -1, 1),
            ],
        }
    }
}

/// Generate one setting: 10,000 rows, shuffled by the seeded generator.
/// Components draw from independent streams of the same seed, so generation
/// is reproducible component by component.
pub fn generate_setting(setting: SyntheticSetting, seed: u64) -> Result<Dataset> {
    let components = setting.components();
    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut sensitive = Vec::new();
    for (idx, comp) in components.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(idx as u64 + 1);
        for row in sample_gaussian(comp, &mut rng)? {
            features.extend_from_slice(&row);
            labels.push(comp.label);
            sensitive.push(comp.sensitive);
        }
    }

    // stream 0 shuffles the assembled rows
    let n = labels.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0);
    order.shuffle(&mut rng);

    let mut sf = Vec::with_capacity(n * 2);
    let mut sl = Vec::with_capacity(n);
    let mut sz = Vec::with_capacity(n);
    for &i in &order {
        sf.extend_from_slice(&features[i * 2..i * 2 + 2]);
        sl.push(labels[i]);
        sz.push(sensitive[i]);
    }
    Dataset::new(sf, n, 2, sl, sz, vec!["x1".into(), "x2".into()])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn component_stats(data: &Dataset, label: i8, z: u8) -> ([f64; 2], [[f64; 2]; 2], usize) {
        let rows: Vec<&[f64]> = (0..data.n())
            .filter(|&i| data.label(i) == label && data.z(i) == z)
            .map(|i| data.row(i))
            .collect();
        let n = rows.len() as f64;
        let mut mean = [0.0; 2];
        for r in &rows {
            mean[0] += r[0] / n;
            mean[1] += r[1] / n;
        }
        let mut cov = [[0.0; 2]; 2];
        for r in &rows {
            let d = [r[0] - mean[0], r[1] - mean[1]];
            for i in 0..2 {
                for j in 0..2 {
                    cov[i][j] += d[i] * d[j] / n;
                }
            }
        }
        (mean, cov, rows.len())
    }

    #[test]
    #[allow(clippy::needless_range_loop)] // 2×2 moment comparison reads best indexed
    fn setting1_component_moments_match_spec() {
        let data = generate_setting(SyntheticSetting::One, 7).unwrap();
        for comp in SyntheticSetting::One.components() {
            let (mean, cov, count) = component_stats(&data, comp.label, comp.sensitive);
            assert_eq!(count, 2_500);
            for i in 0..2 {
                assert!((mean[i] - comp.mean[i]).abs() <= 0.15, "mean[{i}]={}", mean[i]);
                for j in 0..2 {
                    assert!(
                        (cov[i][j] - comp.cov[i][j]).abs() <= 0.35,
                        "cov[{i}][{j}]={}",
                        cov[i][j]
                    );
                }
            }
        }
    }

    #[test]
    fn balances_are_exact() {
        let data = generate_setting(SyntheticSetting::Two, 3).unwrap();
        assert_eq!(data.n(), 10_000);
        let pos = data.labels().iter().filter(|&&y| y == 1).count();
        let z1 = data.sensitive().iter().filter(|&&z| z == 1).count();
        assert_eq!(pos, 5_000);
        assert_eq!(z1, 5_000);
    }

    #[test]
    fn same_seed_reproduces_and_seeds_differ() {
        let a = generate_setting(SyntheticSetting::Three, 11).unwrap();
        let b = generate_setting(SyntheticSetting::Three, 11).unwrap();
        assert_eq!(a, b);
        let c = generate_setting(SyntheticSetting::Three, 12).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn standard_normal_sample_stats() {
        let spec = GaussianSpec {
            mean: [0.0, 0.0],
            cov: [[1.0, 0.0], [0.0, 1.0]],
            count: 2_500,
            label: 1,
            sensitive: 0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rows = sample_gaussian(&spec, &mut rng).unwrap();
        let mean0 = rows.iter().map(|r| r[0]).sum::<f64>() / rows.len() as f64;
        let mean1 = rows.iter().map(|r| r[1]).sum::<f64>() / rows.len() as f64;
        assert!(mean0.abs() <= 0.1 && mean1.abs() <= 0.1);

        let off = GaussianSpec { cov: [[3.0, 1.0], [1.0, 3.0]], ..spec };
        let rows = sample_gaussian(&off, &mut rng).unwrap();
        let n = rows.len() as f64;
        let m: [f64; 2] = [
            rows.iter().map(|r| r[0]).sum::<f64>() / n,
            rows.iter().map(|r| r[1]).sum::<f64>() / n,
        ];
        let c01 = rows.iter().map(|r| (r[0] - m[0]) * (r[1] - m[1])).sum::<f64>() / n;
        assert!((c01 - 1.0).abs() <= 0.3, "off-diagonal {c01}");
    }

    #[test]
    fn non_pd_covariance_rejected() {
        let bad = GaussianSpec {
            mean: [0.0, 0.0],
            cov: [[1.0, 2.0], [2.0, 1.0]], // det < 0
            count: 1,
            label: 1,
            sensitive: 0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(sample_gaussian(&bad, &mut rng).is_err());

        let degenerate = GaussianSpec { cov: [[1.0, 1.0], [1.0, 1.0]], ..bad };
        assert!(sample_gaussian(&degenerate, &mut rng).is_err());

        let asymmetric = GaussianSpec { cov: [[3.0, 3.0], [1.0, 3.0]], ..bad };
        assert!(sample_gaussian(&asymmetric, &mut rng).is_err());
    }
}
