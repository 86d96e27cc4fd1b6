use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Strictly increasing positive radii together with a truncation radius `rho`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiusGrid {
    radii: Vec<f64>,
    rho: f64,
}

impl RadiusGrid {
    pub fn new(radii: Vec<f64>, rho: f64) -> Result<Self> {
        if !(rho.is_finite() && rho > 0.0) {
            return Err(Error::arg(format!(
                "rho must be positive and finite, got {rho}"
            )));
        }
        if radii.is_empty() {
            return Err(Error::arg("radius grid is empty"));
        }
        if radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(Error::arg("radii must be positive and finite"));
        }
        if radii.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::arg("radii must be strictly increasing"));
        }
        Ok(RadiusGrid { radii, rho })
    }

    /// Grid with `rho` set to the largest radius.
    pub fn from_radii(radii: Vec<f64>) -> Result<Self> {
        let rho = radii.last().copied().unwrap_or(f64::NAN);
        Self::new(radii, rho)
    }

    /// `count` log-spaced radii from `lo` to `hi` inclusive, `rho = hi`.
    pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Result<Self> {
        if !(lo > 0.0 && hi > lo) || count < 2 {
            return Err(Error::arg(format!(
                "log-spaced grid needs 0 < lo < hi and at least two points (lo={lo}, hi={hi}, count={count})"
            )));
        }
        let (a, b) = (lo.ln(), hi.ln());
        let step = (b - a) / (count - 1) as f64;
        let mut radii: Vec<f64> = (0..count).map(|i| (a + step * i as f64).exp()).collect();
        radii[0] = lo;
        radii[count - 1] = hi;
        Self::new(radii, hi)
    }

    /// `count` evenly spaced radii `rho/count, 2 rho/count, ..., rho`.
    pub fn linear(rho: f64, count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::arg("radius grid is empty"));
        }
        let radii = (1..=count).map(|i| rho * i as f64 / count as f64).collect();
        Self::new(radii, rho)
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    /// True when no radius exceeds `rho`.
    pub fn within_rho(&self) -> bool {
        self.radii.last().is_some_and(|r| *r <= self.rho)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unsorted() {
        assert!(RadiusGrid::new(vec![0.1, 0.1], 1.0).is_err());
        assert!(RadiusGrid::new(vec![0.2, 0.1], 1.0).is_err());
        assert!(RadiusGrid::new(vec![0.0, 0.1], 1.0).is_err());
        assert!(RadiusGrid::new(vec![0.1], 0.0).is_err());
    }

    #[test]
    fn log_spaced_endpoints() {
        let g = RadiusGrid::log_spaced(1e-3, 10.0, 50).unwrap();
        assert_eq!(g.radii()[0], 1e-3);
        assert_eq!(*g.radii().last().unwrap(), 10.0);
        assert!(g.within_rho());
    }
}
