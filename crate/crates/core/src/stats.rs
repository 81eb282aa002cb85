//! Streaming moment accumulators and the estimate type built from them.

use serde::{Deserialize, Serialize};

/// One-pass mean and centered second moment with an exact merge, so chunk
/// results can be combined without revisiting the data.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Welford {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    /// Combines two accumulators as if their streams had been concatenated.
    pub fn merge(self, other: Welford) -> Welford {
        if self.count == 0 {
            return other;
        }
        if other.count == 0 {
            return self;
        }
        let count = self.count + other.count;
        let d = other.mean - self.mean;
        let na = self.count as f64;
        let nb = other.count as f64;
        let n = count as f64;
        Welford {
            count,
            mean: self.mean + d * (nb / n),
            m2: self.m2 + other.m2 + d * d * (na * nb / n),
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> Option<f64> {
        (self.count > 0).then_some(self.mean)
    }

    /// Unbiased sample variance; needs at least two observations.
    pub fn sample_variance(&self) -> Option<f64> {
        (self.count > 1).then(|| self.m2 / (self.count - 1) as f64)
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> Option<f64> {
        self.sample_variance()
            .map(|v| (v / self.count as f64).sqrt())
    }

    /// Mean with its standard error; available from two observations on.
    pub fn estimate(&self) -> Option<Estimate> {
        Some(Estimate {
            value: self.mean()?,
            std_error: self.std_error()?,
            count: self.count,
        })
    }
}

/// A point estimate with its standard error and the number of
/// observations behind it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    pub count: u64,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_pass(data: &[f64]) -> (f64, f64) {
        let n = data.len() as f64;
        let mean = data.iter().sum::<f64>() / n;
        let var = data.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        (mean, var)
    }

    #[test]
    fn matches_two_pass_moments() {
        let data = [3.1, -0.4, 2.2, 8.9, -5.5, 0.0, 1.25, 7.75];
        let mut w = Welford::default();
        for &x in &data {
            w.push(x);
        }
        let (mean, var) = two_pass(&data);
        assert!((w.mean().unwrap() - mean).abs() < 1e-14);
        assert!((w.sample_variance().unwrap() - var).abs() < 1e-13);
    }

    #[test]
    fn merge_equals_concatenation() {
        let left = [1.0, 2.0, 3.5, -1.25];
        let right = [10.0, -20.0, 0.5, 4.0, 6.0];
        let mut a = Welford::default();
        let mut b = Welford::default();
        let mut whole = Welford::default();
        for &x in &left {
            a.push(x);
            whole.push(x);
        }
        for &x in &right {
            b.push(x);
            whole.push(x);
        }
        let merged = a.merge(b);
        assert_eq!(merged.count(), whole.count());
        assert!((merged.mean().unwrap() - whole.mean().unwrap()).abs() < 1e-14);
        assert!(
            (merged.sample_variance().unwrap() - whole.sample_variance().unwrap()).abs() < 1e-13
        );
    }

    #[test]
    fn empty_sides_are_identity() {
        let mut a = Welford::default();
        a.push(2.0);
        a.push(4.0);
        assert_eq!(Welford::default().merge(a), a);
        assert_eq!(a.merge(Welford::default()), a);
    }

    #[test]
    fn estimate_needs_two_observations() {
        let mut w = Welford::default();
        assert_eq!(w.estimate(), None);
        w.push(1.0);
        assert_eq!(w.estimate(), None);
        w.push(2.0);
        let est = w.estimate().unwrap();
        assert_eq!(est.count, 2);
        assert_eq!(est.value, 1.5);
        assert!((est.std_error - 0.5).abs() < 1e-15);
    }

    #[test]
    fn constant_stream_has_zero_variance() {
        let mut w = Welford::default();
        for _ in 0..100 {
            w.push(7.25);
        }
        assert_eq!(w.mean().unwrap(), 7.25);
        assert_eq!(w.sample_variance().unwrap(), 0.0);
    }
}
