//! Discrete latency distributions.
//!
//! Every latency in the system (computation, transfer, end-to-end completion)
//! is a [`LatencyPmf`]: a probability mass function over equally spaced bin
//! centers `origin, origin + w, origin + 2w, ...`. Binary operations require a
//! shared bin width, which keeps convolution an exact finite sum.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Tolerance on the total mass of a PMF.
pub const MASS_TOLERANCE: f64 = 1e-9;

/// Default number of standard deviations kept when discretizing a normal.
pub const DEFAULT_TRUNCATION: f64 = 4.0;

/// Tail mass below which convolution results are trimmed.
const TRIM_EPS: f64 = 1e-15;

/// Mean and standard deviation of a normally distributed quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalSpec {
    pub mean: f64,
    pub std_dev: f64,
}

impl NormalSpec {
    pub fn new(mean: f64, std_dev: f64) -> Self {
        Self { mean, std_dev }
    }

    pub fn point(mean: f64) -> Self {
        Self { mean, std_dev: 0.0 }
    }

    /// Sum of independent normals: means add, variances add.
    pub fn sum<'a>(specs: impl IntoIterator<Item = &'a NormalSpec>) -> NormalSpec {
        let (mean, var) = specs
            .into_iter()
            .fold((0.0, 0.0), |(m, v), s| (m + s.mean, v + s.std_dev * s.std_dev));
        NormalSpec::new(mean, var.sqrt())
    }

    /// Divides both moments by `factor`.
    pub fn scaled(&self, factor: f64) -> NormalSpec {
        NormalSpec::new(self.mean * factor, self.std_dev * factor)
    }
}

/// A central confidence interval of a latency distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CiInterval {
    pub lo: f64,
    pub hi: f64,
    pub level: f64,
}

/// Fixed-width discrete probability mass function over latency (ms).
#[derive(Debug, Clone, PartialEq)]
pub struct LatencyPmf {
    bin_width: f64,
    origin: f64,
    mass: Vec<f64>,
    cdf: Vec<f64>,
}

impl LatencyPmf {
    /// Builds a PMF, checking every invariant.
    pub fn new(bin_width: f64, origin: f64, mass: Vec<f64>) -> Result<Self> {
        if !(bin_width > 0.0) || !bin_width.is_finite() {
            return Err(Error::InvalidParameter(format!("bin width must be > 0, got {bin_width}")));
        }
        if !(origin >= 0.0) || !origin.is_finite() {
            return Err(Error::InvalidParameter(format!("origin must be >= 0, got {origin}")));
        }
        if mass.is_empty() {
            return Err(Error::InvalidParameter("empty mass vector".into()));
        }
        if let Some(p) = mass.iter().find(|p| !(**p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidParameter(format!("negative or non-finite mass {p}")));
        }
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidParameter(format!("mass sums to {total}, expected 1")));
        }
        Ok(Self::from_parts(bin_width, origin, mass))
    }

    fn from_parts(bin_width: f64, origin: f64, mass: Vec<f64>) -> Self {
        let mut acc = 0.0;
        let cdf = mass
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Self { bin_width, origin, mass, cdf }
    }

    /// Point mass at `at`, snapped to the nearest bin center.
    pub fn point(at: f64, bin_width: f64) -> Result<Self> {
        if !(at >= 0.0) {
            return Err(Error::InvalidParameter(format!("point mass at negative latency {at}")));
        }
        Self::new(bin_width, snap(at, bin_width), vec![1.0])
    }

    /// Discretizes a normal over `[max(0, mean - t*std), mean + t*std]` and
    /// renormalizes. A zero standard deviation yields a point mass.
    pub fn from_normal(spec: NormalSpec, bin_width: f64, truncation: f64) -> Result<Self> {
        if !(spec.mean > 0.0) || !spec.mean.is_finite() {
            return Err(Error::InvalidParameter(format!("normal mean must be > 0, got {}", spec.mean)));
        }
        if !(spec.std_dev >= 0.0) || !spec.std_dev.is_finite() {
            return Err(Error::InvalidParameter(format!("normal std must be >= 0, got {}", spec.std_dev)));
        }
        if !(bin_width > 0.0) {
            return Err(Error::InvalidParameter(format!("bin width must be > 0, got {bin_width}")));
        }
        if !(truncation >= 1.0) {
            return Err(Error::InvalidParameter(format!("truncation must be >= 1, got {truncation}")));
        }
        if spec.std_dev == 0.0 {
            return Self::point(spec.mean, bin_width);
        }
        let lo = (spec.mean - truncation * spec.std_dev).max(0.0);
        let hi = spec.mean + truncation * spec.std_dev;
        let k0 = (lo / bin_width).round() as i64;
        let k1 = (hi / bin_width).round() as i64;
        let cdf = |x: f64| normal_cdf((x - spec.mean) / spec.std_dev);
        let mut mass: Vec<f64> = (k0..=k1)
            .map(|k| {
                let c = k as f64 * bin_width;
                let a = (c - 0.5 * bin_width).max(lo);
                let b = (c + 0.5 * bin_width).min(hi);
                if b > a {
                    cdf(b) - cdf(a)
                } else {
                    0.0
                }
            })
            .collect();
        let total: f64 = mass.iter().sum();
        if !(total > 0.0) {
            return Self::point(spec.mean, bin_width);
        }
        mass.iter_mut().for_each(|p| *p /= total);
        let (origin, mass) = trim(k0 as f64 * bin_width, bin_width, mass);
        Ok(Self::from_parts(bin_width, origin, mass))
    }

    pub fn bin_width(&self) -> f64 {
        self.bin_width
    }

    /// Latency of the first bin center.
    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    pub fn center(&self, k: usize) -> f64 {
        self.origin + k as f64 * self.bin_width
    }

    /// Largest bin center.
    pub fn max_value(&self) -> f64 {
        self.center(self.mass.len() - 1)
    }

    pub fn mean(&self) -> f64 {
        self.mass.iter().enumerate().map(|(k, p)| p * self.center(k)).sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.mass
            .iter()
            .enumerate()
            .map(|(k, p)| {
                let d = self.center(k) - m;
                p * d * d
            })
            .sum()
    }

    pub fn std_dev(&self) -> f64 {
        self.variance().sqrt()
    }

    /// Total mass of bins whose center is `<= t`.
    pub fn cdf(&self, t: f64) -> f64 {
        let rel = (t - self.origin) / self.bin_width;
        if rel < -1e-9 {
            return 0.0;
        }
        let k = (rel + 1e-9).floor() as usize;
        if k >= self.mass.len() {
            1.0
        } else {
            self.cdf[k].min(1.0)
        }
    }

    /// Smallest bin center whose CDF reaches `p`.
    pub fn quantile(&self, p: f64) -> f64 {
        let target = p - 1e-12;
        let k = self.cdf.partition_point(|c| *c < target).min(self.mass.len() - 1);
        self.center(k)
    }

    /// Draws a bin center with probability equal to its mass.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.sample_at(rng.random::<f64>())
    }

    /// Inverse-CDF draw for a uniform variate `u` in `[0, 1)`.
    pub fn sample_at(&self, u: f64) -> f64 {
        let k = self.cdf.partition_point(|c| *c <= u).min(self.mass.len() - 1);
        self.center(k)
    }

    /// Probability of completing within `deadline` (CDF at the deadline).
    pub fn prob_on_time(&self, deadline: f64) -> f64 {
        self.cdf(deadline)
    }

    /// Probability of completing within `deadline` after a fixed delay of
    /// `offset`, without materializing the shifted PMF.
    pub fn prob_on_time_shifted(&self, offset: f64, deadline: f64) -> f64 {
        self.cdf(deadline - snap(offset, self.bin_width))
    }

    pub fn central_ci(&self, level: f64) -> CiInterval {
        let tail = (1.0 - level) / 2.0;
        CiInterval { lo: self.quantile(tail), hi: self.quantile(1.0 - tail), level }
    }

    /// Moves the whole distribution right by `offset` rounded to the nearest
    /// bin multiple.
    pub fn shift(&self, offset: f64) -> LatencyPmf {
        let delta = snap(offset.max(0.0), self.bin_width);
        LatencyPmf {
            bin_width: self.bin_width,
            origin: self.origin + delta,
            mass: self.mass.clone(),
            cdf: self.cdf.clone(),
        }
    }

    /// Exact discrete convolution (distribution of the sum).
    pub fn convolve(&self, other: &LatencyPmf) -> Result<LatencyPmf> {
        if !same_width(self.bin_width, other.bin_width) {
            return Err(Error::IncompatibleDistributions(self.bin_width, other.bin_width));
        }
        let (long, short) = if self.len() >= other.len() { (self, other) } else { (other, self) };
        let mut out = vec![0.0; long.len() + short.len() - 1];
        for (j, &q) in short.mass.iter().enumerate() {
            if q == 0.0 {
                continue;
            }
            for (o, &p) in out[j..j + long.len()].iter_mut().zip(&long.mass) {
                *o += p * q;
            }
        }
        let (origin, mass) = trim(self.origin + other.origin, self.bin_width, out);
        Ok(Self::from_parts(self.bin_width, origin, mass))
    }

    pub fn summary(&self, level: f64) -> PmfSummary {
        PmfSummary {
            mean: self.mean(),
            std_dev: self.std_dev(),
            min: self.origin,
            max: self.max_value(),
            ci: self.central_ci(level),
        }
    }
}

/// Compact description of a PMF for decision logs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PmfSummary {
    pub mean: f64,
    pub std_dev: f64,
    pub min: f64,
    pub max: f64,
    pub ci: CiInterval,
}

/// Discretizes a normal; see [`LatencyPmf::from_normal`].
pub fn pmf_from_normal(spec: NormalSpec, bin_width: f64, truncation: f64) -> Result<LatencyPmf> {
    LatencyPmf::from_normal(spec, bin_width, truncation)
}

pub fn convolve(a: &LatencyPmf, b: &LatencyPmf) -> Result<LatencyPmf> {
    a.convolve(b)
}

/// Left fold of [`convolve`] over a non-empty list.
pub fn convolve_chain<'a, I>(parts: I) -> Result<LatencyPmf>
where
    I: IntoIterator<Item = &'a LatencyPmf>,
{
    let mut iter = parts.into_iter();
    let first = iter
        .next()
        .ok_or_else(|| Error::InvalidArgument("convolve_chain needs at least one PMF".into()))?;
    iter.try_fold(first.clone(), |acc, next| acc.convolve(next))
}

pub fn prob_on_time(d: &LatencyPmf, deadline: f64) -> f64 {
    d.prob_on_time(deadline)
}

pub fn central_ci(d: &LatencyPmf, level: f64) -> CiInterval {
    d.central_ci(level)
}

/// True iff the intervals do not overlap; a shared endpoint counts as overlap.
pub fn ci_disjoint(a: &CiInterval, b: &CiInterval) -> Result<bool> {
    if (a.level - b.level).abs() > 1e-12 {
        return Err(Error::InvalidComparison(format!(
            "confidence levels differ: {} vs {}",
            a.level, b.level
        )));
    }
    Ok(a.hi < b.lo || b.hi < a.lo)
}

pub fn shift(d: &LatencyPmf, offset: f64) -> LatencyPmf {
    d.shift(offset)
}

pub fn sample<R: Rng + ?Sized>(d: &LatencyPmf, rng: &mut R) -> f64 {
    d.sample(rng)
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

fn snap(x: f64, bin_width: f64) -> f64 {
    (x / bin_width).round() * bin_width
}

fn same_width(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

/// Drops negligible tails and renormalizes.
fn trim(origin: f64, bin_width: f64, mut mass: Vec<f64>) -> (f64, Vec<f64>) {
    let mut head = 0;
    let mut acc = 0.0;
    while head + 1 < mass.len() && acc + mass[head] < TRIM_EPS {
        acc += mass[head];
        head += 1;
    }
    let mut tail = mass.len();
    let mut acc_t = 0.0;
    while tail > head + 1 && acc_t + mass[tail - 1] < TRIM_EPS {
        acc_t += mass[tail - 1];
        tail -= 1;
    }
    mass.truncate(tail);
    mass.drain(..head);
    let total: f64 = mass.iter().sum();
    if total > 0.0 && (total - 1.0).abs() > f64::EPSILON {
        mass.iter_mut().for_each(|p| *p /= total);
    }
    (origin + head as f64 * bin_width, mass)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pmf(points: &[(f64, f64)]) -> LatencyPmf {
        let w = 1.0;
        let origin = points[0].0;
        let n = ((points.last().unwrap().0 - origin) / w).round() as usize + 1;
        let mut mass = vec![0.0; n];
        for (x, p) in points {
            mass[((x - origin) / w).round() as usize] += p;
        }
        LatencyPmf::new(w, origin, mass).unwrap()
    }

    #[test]
    fn degenerate_normal_is_point_mass() {
        let d = pmf_from_normal(NormalSpec::new(100.0, 0.0), 1.0, 4.0).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.origin(), 100.0);
        assert_eq!(d.mass(), &[1.0]);
    }

    #[test]
    fn fire_gpu_profile_mean_within_one_bin() {
        let d = pmf_from_normal(NormalSpec::new(1349.5, 418.9), 1.0, 4.0).unwrap();
        assert!((d.mean() - 1349.5).abs() <= 1.0, "mean {}", d.mean());
        assert!(d.origin() >= 0.0);
    }

    #[test]
    fn discretized_cdf_tracks_normal_cdf() {
        let d = pmf_from_normal(NormalSpec::new(50.0, 10.0), 1.0, 4.0).unwrap();
        assert!((d.cdf(50.0) - 0.5).abs() <= 0.02, "cdf {}", d.cdf(50.0));
        for t in [30.0, 40.0, 60.0, 70.0] {
            let exact = normal_cdf((t + 0.5 - 50.0) / 10.0);
            assert!((d.cdf(t) - exact).abs() < 1e-3);
        }
    }

    #[test]
    fn invalid_normal_parameters() {
        assert!(matches!(
            pmf_from_normal(NormalSpec::new(0.0, 1.0), 1.0, 4.0),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            pmf_from_normal(NormalSpec::new(10.0, 1.0), 0.0, 4.0),
            Err(Error::InvalidParameter(_))
        ));
        assert!(pmf_from_normal(NormalSpec::new(10.0, 1.0), 1.0, 0.5).is_err());
    }

    #[test]
    fn new_rejects_bad_mass() {
        assert!(LatencyPmf::new(1.0, 0.0, vec![0.5, 0.4]).is_err());
        assert!(LatencyPmf::new(1.0, 0.0, vec![1.5, -0.5]).is_err());
        assert!(LatencyPmf::new(1.0, -1.0, vec![1.0]).is_err());
    }

    #[test]
    fn delta_convolution() {
        let a = LatencyPmf::point(3.0, 1.0).unwrap();
        let b = LatencyPmf::point(5.0, 1.0).unwrap();
        let c = convolve(&a, &b).unwrap();
        assert_eq!(c.origin(), 8.0);
        assert_eq!(c.mass(), &[1.0]);
    }

    #[test]
    fn shift_by_point_mass() {
        let a = pmf(&[(2.0, 0.5), (4.0, 0.5)]);
        let b = LatencyPmf::point(1.0, 1.0).unwrap();
        let c = convolve(&a, &b).unwrap();
        assert_eq!(c.origin(), 3.0);
        assert!((c.prob_on_time(3.0) - 0.5).abs() < 1e-12);
        assert!((c.prob_on_time(4.0) - 0.5).abs() < 1e-12);
        assert!((c.prob_on_time(5.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bin_width_mismatch_is_rejected() {
        let a = LatencyPmf::point(3.0, 1.0).unwrap();
        let b = LatencyPmf::point(4.0, 2.0).unwrap();
        assert!(matches!(convolve(&a, &b), Err(Error::IncompatibleDistributions(..))));
    }

    #[test]
    fn chain_fold() {
        let p = |x| LatencyPmf::point(x, 1.0).unwrap();
        assert_eq!(convolve_chain([&p(3.0)]).unwrap(), p(3.0));
        let parts = [p(1.0), p(2.0), p(3.0)];
        assert_eq!(convolve_chain(&parts).unwrap().origin(), 6.0);
        assert!(matches!(convolve_chain(std::iter::empty()), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn chain_mean_is_sum_of_means() {
        let specs = [(100.0, 20.0), (250.0, 30.0), (75.0, 5.0), (400.0, 60.0)];
        let parts: Vec<_> = specs
            .iter()
            .map(|&(m, s)| pmf_from_normal(NormalSpec::new(m, s), 1.0, 4.0).unwrap())
            .collect();
        let expected: f64 = parts.iter().map(|p| p.mean()).sum();
        let c = convolve_chain(&parts).unwrap();
        assert!((c.mean() - expected).abs() <= 1.0);
        assert!((c.mean() - 825.0).abs() <= 1.0);
    }

    #[test]
    fn prob_on_time_examples() {
        let d = pmf(&[(8.0, 0.25), (10.0, 0.25), (12.0, 0.5)]);
        assert_eq!(d.prob_on_time(12.0), 1.0);
        assert_eq!(d.prob_on_time(100.0), 1.0);
        assert_eq!(d.prob_on_time(7.0), 0.0);
        assert!((d.prob_on_time(10.0) - 0.5).abs() < 1e-12);
        assert!((d.prob_on_time(11.0) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn ci_examples() {
        let d = LatencyPmf::point(8.0, 1.0).unwrap();
        let ci = d.central_ci(0.95);
        assert_eq!((ci.lo, ci.hi), (8.0, 8.0));

        let uniform = LatencyPmf::new(1.0, 1.0, vec![0.01; 100]).unwrap();
        let ci = uniform.central_ci(0.95);
        // Direct quantiles: CDF(k) = k/100, first k with k/100 >= 0.025 is 3,
        // first with k/100 >= 0.975 is 98.
        assert_eq!((ci.lo, ci.hi), (3.0, 98.0));
        assert!(ci.lo <= 4.0 && ci.hi >= 97.0);

        let n = pmf_from_normal(NormalSpec::new(100.0, 10.0), 1.0, 4.0).unwrap();
        let ci = n.central_ci(0.95);
        let inside = n.cdf(ci.hi) - n.cdf(ci.lo - 1.0);
        assert!(inside >= 0.95, "inside {inside}");
    }

    #[test]
    fn disjointness() {
        let ci = |lo, hi| CiInterval { lo, hi, level: 0.95 };
        assert!(ci_disjoint(&ci(1.0, 2.0), &ci(3.0, 4.0)).unwrap());
        assert!(!ci_disjoint(&ci(1.0, 3.0), &ci(3.0, 4.0)).unwrap());
        assert!(ci_disjoint(&ci(5.0, 9.0), &ci(1.0, 4.0)).unwrap());
        let other = CiInterval { lo: 5.0, hi: 6.0, level: 0.9 };
        assert!(matches!(ci_disjoint(&ci(1.0, 2.0), &other), Err(Error::InvalidComparison(_))));
    }

    #[test]
    fn shift_examples() {
        let p = LatencyPmf::point(3.0, 1.0).unwrap();
        assert_eq!(shift(&p, 5.0).origin(), 8.0);
        assert_eq!(shift(&p, 0.0), p);
        let n = pmf_from_normal(NormalSpec::new(60.0, 7.0), 1.0, 4.0).unwrap();
        let s = shift(&n, 12.4);
        assert!((s.mean() - n.mean() - 12.4).abs() <= 1.0);
        assert_eq!(s.mass(), n.mass());
        assert_eq!(n.prob_on_time_shifted(12.4, 70.0), s.prob_on_time(70.0));
    }

    #[test]
    fn sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let p = LatencyPmf::point(7.0, 1.0).unwrap();
        assert!((0..1000).all(|_| p.sample(&mut rng) == 7.0));

        let two = pmf(&[(2.0, 0.5), (4.0, 0.5)]);
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let n = 1_000_000;
        let twos = (0..n).filter(|_| two.sample(&mut rng) == 2.0).count();
        let freq = twos as f64 / n as f64;
        assert!((0.497..=0.503).contains(&freq), "freq {freq}");

        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..100).map(|_| two.sample(&mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draw(11), draw(11));
    }

    fn arb_pmf() -> impl Strategy<Value = LatencyPmf> {
        (0u32..50, prop::collection::vec(0.0f64..1.0, 1..40)).prop_filter_map("zero mass", |(o, w)| {
            let total: f64 = w.iter().sum();
            (total > 1e-6).then(|| {
                LatencyPmf::new(1.0, o as f64, w.iter().map(|x| x / total).collect()).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn convolution_conserves_mass(a in arb_pmf(), b in arb_pmf()) {
            let c = convolve(&a, &b).unwrap();
            let total: f64 = c.mass().iter().sum();
            prop_assert!((total - 1.0).abs() <= 1e-9);
        }

        #[test]
        fn convolution_adds_means(a in arb_pmf(), b in arb_pmf()) {
            let c = convolve(&a, &b).unwrap();
            prop_assert!((c.mean() - a.mean() - b.mean()).abs() <= 1.0);
        }

        #[test]
        fn convolution_commutes(a in arb_pmf(), b in arb_pmf()) {
            let ab = convolve(&a, &b).unwrap();
            let ba = convolve(&b, &a).unwrap();
            prop_assert_eq!(ab.origin(), ba.origin());
            prop_assert_eq!(ab.len(), ba.len());
            for (x, y) in ab.mass().iter().zip(ba.mass()) {
                prop_assert!((x - y).abs() <= 1e-12);
            }
        }

        #[test]
        fn cdf_is_monotone(d in arb_pmf(), t1 in 0.0f64..120.0, dt in 0.0f64..50.0) {
            prop_assert!(d.prob_on_time(t1) <= d.prob_on_time(t1 + dt));
        }

        #[test]
        fn ci_covers_level(d in arb_pmf(), level in 0.5f64..0.99) {
            let ci = d.central_ci(level);
            prop_assert!(ci.lo <= ci.hi);
            let inside = d.cdf(ci.hi) - d.cdf(ci.lo - d.bin_width());
            prop_assert!(inside >= level - 1e-9);
        }
    }
}
