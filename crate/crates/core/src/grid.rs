//! Screen discretization and the observables sampled on it.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Uniform, origin-symmetric sampling of the screen coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorGrid {
    half_extent: f64,
    count: usize,
}

impl DetectorGrid {
    /// 512 points on [-15 µm, 15 µm].
    pub const DEFAULT_HALF_EXTENT: f64 = 15e-6;
    pub const DEFAULT_COUNT: usize = 512;

    pub fn new(half_extent: f64, count: usize) -> Result<Self> {
        if !(half_extent.is_finite() && half_extent > 0.0) {
            return Err(Error::config(format!(
                "grid half extent must be positive, got {half_extent}"
            )));
        }
        if count < 2 {
            return Err(Error::config(format!(
                "grid needs at least 2 points, got {count}"
            )));
        }
        Ok(DetectorGrid { half_extent, count })
    }

    pub fn half_extent(&self) -> f64 {
        self.half_extent
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_extent / (self.count - 1) as f64
    }

    /// Position of point `i`. Written so that `position(n-1-i) == -position(i)` bit for bit.
    pub fn position(&self, i: usize) -> f64 {
        let m = (self.count - 1) as f64;
        self.half_extent * (2.0 * i as f64 - m) / m
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.position(i)).collect()
    }
}

impl Default for DetectorGrid {
    fn default() -> Self {
        DetectorGrid {
            half_extent: Self::DEFAULT_HALF_EXTENT,
            count: Self::DEFAULT_COUNT,
        }
    }
}

/// Complex far-field amplitude on a grid, with all global prefactors dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveField {
    pub grid: DetectorGrid,
    pub amplitudes: Vec<Complex64>,
}

impl WaveField {
    pub fn zeros(grid: DetectorGrid) -> Self {
        WaveField {
            grid,
            amplitudes: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn intensity(&self) -> IntensityPattern {
        IntensityPattern {
            grid: self.grid,
            values: self.amplitudes.iter().map(|a| a.norm_sqr()).collect(),
            normalization: Normalization::Raw,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    Raw,
    PeakOne,
}

/// `|ψ|²` sampled on a detector grid.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityPattern {
    pub grid: DetectorGrid,
    pub values: Vec<f64>,
    pub normalization: Normalization,
}

impl IntensityPattern {
    /// Validates the sample vector and wraps it with the given normalization tag.
    pub fn new(grid: DetectorGrid, values: Vec<f64>, normalization: Normalization) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::config(format!(
                "pattern has {} samples, grid has {}",
                values.len(),
                grid.len()
            )));
        }
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
        {
            return Err(Error::config(format!("pattern sample {i} is {v}")));
        }
        Ok(IntensityPattern {
            grid,
            values,
            normalization,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn peak(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Rescales so the maximum is one; an all-zero pattern is returned unchanged.
    pub fn normalized(mut self) -> Self {
        let peak = self.peak();
        if peak > 0.0 {
            for v in &mut self.values {
                *v /= peak;
            }
        }
        self.normalization = Normalization::PeakOne;
        self
    }

    pub(crate) fn check_comparable(&self, other: &IntensityPattern) -> Result<()> {
        if self.grid != other.grid || self.values.len() != other.values.len() {
            return Err(Error::config("patterns are sampled on different grids"));
        }
        if self.normalization != other.normalization {
            return Err(Error::config("patterns use different normalizations"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_is_symmetric_and_uniform() {
        for count in [2, 7, 512] {
            let g = DetectorGrid::new(15e-6, count).unwrap();
            let p = g.positions();
            for i in 0..count {
                assert_eq!(p[i], -p[count - 1 - i]);
            }
            for w in p.windows(2) {
                assert!(w[1] > w[0]);
                assert!(((w[1] - w[0]) - g.spacing()).abs() < 1e-12 * g.spacing());
            }
            assert_eq!(p[0], -15e-6);
            assert_eq!(p[count - 1], 15e-6);
        }
    }

    #[test]
    fn odd_grid_has_exact_zero() {
        let g = DetectorGrid::new(1.0, 5).unwrap();
        assert_eq!(g.position(2), 0.0);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(DetectorGrid::new(0.0, 10).is_err());
        assert!(DetectorGrid::new(1.0, 1).is_err());
    }

    #[test]
    fn peak_one_normalization() {
        let g = DetectorGrid::new(1.0, 3).unwrap();
        let p = IntensityPattern::new(g, vec![1.0, 4.0, 2.0], Normalization::Raw)
            .unwrap()
            .normalized();
        assert_eq!(p.values, vec![0.25, 1.0, 0.5]);
        let z = IntensityPattern::new(g, vec![0.0; 3], Normalization::Raw)
            .unwrap()
            .normalized();
        assert_eq!(z.values, vec![0.0; 3]);
        assert!(IntensityPattern::new(g, vec![1.0, -1.0, 0.0], Normalization::Raw).is_err());
    }
}
