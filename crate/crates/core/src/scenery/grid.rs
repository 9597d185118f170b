//! Sampled diffeomorphisms of [0,1] with derivative data.

use serde::Serialize;

use crate::error::{Error, Result};

pub const DEFAULT_GRID_POINTS: usize = 1025;

/// Uniform dyadic grid j/(points − 1); `points − 1` must be a power of two.
pub fn dyadic_grid(points: usize) -> Result<Vec<f64>> {
    if points < 3 || !(points - 1).is_power_of_two() {
        return Err(Error::Resolution(format!("{points} points is not 2^k + 1")));
    }
    let n = (points - 1) as f64;
    Ok((0..points).map(|j| j as f64 / n).collect())
}

/// A monotone map of [0,1] sampled with its derivative and, optionally, its second derivative.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConjugacyGrid {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub dvalues: Vec<f64>,
    pub second: Option<Vec<f64>>,
}

impl ConjugacyGrid {
    pub fn new(grid: Vec<f64>, values: Vec<f64>, dvalues: Vec<f64>, second: Option<Vec<f64>>) -> Result<Self> {
        let n = grid.len();
        if n < 2 || values.len() != n || dvalues.len() != n || second.as_ref().is_some_and(|s| s.len() != n) {
            return Err(Error::Parameter("grid, values and derivatives must have equal length ≥ 2".into()));
        }
        if grid[0] != 0.0 || grid[n - 1] != 1.0 || grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Parameter("grid must increase strictly from 0 to 1".into()));
        }
        Ok(ConjugacyGrid { grid, values, dvalues, second })
    }

    pub fn identity(grid: Vec<f64>) -> Result<Self> {
        let n = grid.len();
        let values = grid.clone();
        ConjugacyGrid::new(grid, values, vec![1.0; n], Some(vec![0.0; n]))
    }

    /// Sample a closed-form map given as x ↦ (f, f', f'').
    pub fn from_fn(grid: Vec<f64>, f: impl Fn(f64) -> (f64, f64, f64)) -> Result<Self> {
        let (mut v, mut d, mut s) = (Vec::new(), Vec::new(), Vec::new());
        for &x in &grid {
            let (a, b, c) = f(x);
            v.push(a);
            d.push(b);
            s.push(c);
        }
        ConjugacyGrid::new(grid, v, d, Some(s))
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Check monotonicity, positivity of the derivative and the end conditions.
    pub fn check(&self, tol: f64) -> Result<()> {
        let n = self.len();
        if self.values[0].abs() > tol || (self.values[n - 1] - 1.0).abs() > tol {
            return Err(Error::Invariant(format!("end values {} and {}", self.values[0], self.values[n - 1])));
        }
        if self.values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Invariant("values are not strictly increasing".into()));
        }
        if self.dvalues.iter().any(|d| !(*d > 0.0)) {
            return Err(Error::Invariant("derivative is not positive".into()));
        }
        Ok(())
    }

    pub fn same_grid(&self, other: &ConjugacyGrid) -> bool {
        self.grid == other.grid
    }

    fn cell(&self, x: f64) -> usize {
        let i = self.grid.partition_point(|&g| g <= x);
        i.clamp(1, self.len() - 1) - 1
    }

    /// Hermite interpolation of the value and the derivative at x.
    pub fn eval(&self, x: f64) -> (f64, f64) {
        let i = self.cell(x);
        let (x0, x1) = (self.grid[i], self.grid[i + 1]);
        let h = x1 - x0;
        let t = (x - x0) / h;
        let value = hermite(t, h, self.values[i], self.values[i + 1], self.dvalues[i], self.dvalues[i + 1]);
        let deriv = match &self.second {
            Some(s) => hermite(t, h, self.dvalues[i], self.dvalues[i + 1], s[i], s[i + 1]),
            None => hermite_slope(t, h, self.values[i], self.values[i + 1], self.dvalues[i], self.dvalues[i + 1]),
        };
        (value, deriv)
    }

    /// Interpolated value, first and second derivative at x.
    pub fn eval_jet(&self, x: f64) -> (f64, f64, f64) {
        let i = self.cell(x);
        let h = self.grid[i + 1] - self.grid[i];
        let t = (x - self.grid[i]) / h;
        let (value, deriv) = self.eval(x);
        let second = match &self.second {
            Some(s) => hermite_slope(t, h, self.dvalues[i], self.dvalues[i + 1], s[i], s[i + 1]),
            None => (self.dvalues[i + 1] - self.dvalues[i]) / h,
        };
        (value, deriv, second)
    }

    /// Resample onto another grid.
    pub fn resample(&self, grid: &[f64]) -> Result<ConjugacyGrid> {
        let (v, d): (Vec<f64>, Vec<f64>) = grid.iter().map(|&x| self.eval(x)).unzip();
        ConjugacyGrid::new(grid.to_vec(), v, d, None)
    }

    /// Crude interpolation error scale: largest derivative jump across a cell.
    pub fn interpolation_slack(&self) -> f64 {
        self.dvalues.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,value,dvalue\n");
        for i in 0..self.len() {
            out.push_str(&format!("{:.17e},{:.17e},{:.17e}\n", self.grid[i], self.values[i], self.dvalues[i]));
        }
        out
    }
}

fn hermite(t: f64, h: f64, p0: f64, p1: f64, m0: f64, m1: f64) -> f64 {
    let t2 = t * t;
    let t3 = t2 * t;
    (2.0 * t3 - 3.0 * t2 + 1.0) * p0 + (t3 - 2.0 * t2 + t) * h * m0 + (-2.0 * t3 + 3.0 * t2) * p1 + (t3 - t2) * h * m1
}

fn hermite_slope(t: f64, h: f64, p0: f64, p1: f64, m0: f64, m1: f64) -> f64 {
    let t2 = t * t;
    ((6.0 * t2 - 6.0 * t) * p0 + (-6.0 * t2 + 6.0 * t) * p1) / h + (3.0 * t2 - 4.0 * t + 1.0) * m0 + (3.0 * t2 - 2.0 * t) * m1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dyadic_grid_shape() {
        let g = dyadic_grid(1025).unwrap();
        assert_eq!(g.len(), 1025);
        assert_eq!(g[512], 0.5);
        assert!(dyadic_grid(1000).is_err());
    }

    #[test]
    fn hermite_reproduces_cubics() {
        let f = |x: f64| (x * x * x / 3.0 + x * x / 3.0 + x / 3.0, x * x + 2.0 * x / 3.0 + 1.0 / 3.0, 2.0 * x + 2.0 / 3.0);
        let g = ConjugacyGrid::from_fn(dyadic_grid(9).unwrap(), f).unwrap();
        g.check(1e-15).unwrap();
        for x in [0.03, 0.31, 0.77, 0.999] {
            let (v, d) = g.eval(x);
            assert!((v - f(x).0).abs() < 1e-14);
            assert!((d - f(x).1).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(ConjugacyGrid::new(vec![0.0, 0.5], vec![0.0, 1.0], vec![1.0, 1.0], None).is_err());
        let g = ConjugacyGrid::new(vec![0.0, 0.5, 1.0], vec![0.0, 0.6, 0.5], vec![1.0, 1.0, 1.0], None).unwrap();
        assert!(g.check(1e-12).is_err());
    }
}
