//! Periodic uniform grids, grid functions, lattice sequences, and the
//! one-sided polynomial weights.

use crate::error::{Error, Result};
use std::io::Write;

/// Periodic uniform grid on `[x_min, x_min + length)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformGrid {
    x_min: f64,
    length: f64,
    n_points: usize,
}

impl UniformGrid {
    pub fn new(x_min: f64, length: f64, n_points: usize) -> Result<Self> {
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::Config(format!("grid length must be > 0, got {length}")));
        }
        if n_points < 16 || !n_points.is_power_of_two() {
            return Err(Error::Config(format!(
                "n_points must be a power of two >= 16, got {n_points}"
            )));
        }
        Ok(UniformGrid {
            x_min,
            length,
            n_points,
        })
    }

    /// Symmetric grid `[-length/2, length/2)`.
    pub fn centered(length: f64, n_points: usize) -> Result<Self> {
        Self::new(-length / 2.0, length, n_points)
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n_points as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx()
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(move |i| self.x(i))
    }
}

/// Real samples of a function on a [`UniformGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub grid: UniformGrid,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn zeros(grid: UniformGrid) -> Self {
        GridFunction {
            grid,
            values: vec![0.0; grid.n_points()],
        }
    }

    pub fn from_fn(grid: UniformGrid, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.points().map(f).collect();
        GridFunction { grid, values }
    }

    pub fn from_values(grid: UniformGrid, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.n_points());
        GridFunction { grid, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64
    }

    /// Pointwise combination with another function on the same grid.
    pub fn zip_with(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> GridFunction {
        assert_eq!(self.grid, other.grid);
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        GridFunction {
            grid: self.grid,
            values,
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: f64, other: &GridFunction) -> GridFunction {
        self.zip_with(other, |x, y| x + a * y)
    }

    pub fn scaled(&self, a: f64) -> GridFunction {
        self.map(|v| a * v)
    }

    /// Writes `# x,value` CSV with 17 significant digits.
    pub fn write_csv(&self, w: &mut impl Write) -> Result<()> {
        writeln!(w, "# x,value")?;
        for (x, v) in self.grid.points().zip(&self.values) {
            writeln!(w, "{:.16e},{:.16e}", x, v)?;
        }
        Ok(())
    }
}

/// Real sequence over a finite window of lattice sites. Entry `j` is the
/// value at site `n_min + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeSeq {
    pub n_min: i64,
    pub values: Vec<f64>,
}

impl LatticeSeq {
    pub fn zeros(n_min: i64, n_max: i64) -> Self {
        assert!(n_max >= n_min);
        LatticeSeq {
            n_min,
            values: vec![0.0; (n_max - n_min + 1) as usize],
        }
    }

    pub fn from_values(n_min: i64, values: Vec<f64>) -> Self {
        LatticeSeq { n_min, values }
    }

    pub fn n_max(&self) -> i64 {
        self.n_min + self.values.len() as i64 - 1
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Site index of entry `j`.
    pub fn site(&self, j: usize) -> i64 {
        self.n_min + j as i64
    }

    pub fn get(&self, n: i64) -> Option<f64> {
        if n < self.n_min || n > self.n_max() {
            None
        } else {
            Some(self.values[(n - self.n_min) as usize])
        }
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn zip_with(&self, other: &LatticeSeq, f: impl Fn(f64, f64) -> f64) -> LatticeSeq {
        assert_eq!(self.n_min, other.n_min);
        assert_eq!(self.len(), other.len());
        LatticeSeq {
            n_min: self.n_min,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn sub(&self, other: &LatticeSeq) -> LatticeSeq {
        self.zip_with(other, |a, b| a - b)
    }

    /// Writes `# n,value` CSV with 17 significant digits.
    pub fn write_csv(&self, w: &mut impl Write) -> Result<()> {
        writeln!(w, "# n,value")?;
        for (j, v) in self.values.iter().enumerate() {
            writeln!(w, "{},{:.16e}", self.site(j), v)?;
        }
        Ok(())
    }
}

/// The polynomial weights of the weighted spaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightKind {
    /// `⟨x⟩ = √(1+x²)`
    Bracket,
    /// `⟨x⟩₊`: 1 on the left half line, `⟨x⟩` beyond 1, smooth in between.
    BracketPlus,
    /// Mirror image of `⟨x⟩₊`.
    BracketMinus,
}

/// `⟨x⟩ = √(1+x²)`.
pub fn bracket(x: f64) -> f64 {
    (1.0 + x * x).sqrt()
}

/// Bump-based smoothstep: 0 for x ≤ 0, 1 for x ≥ 1, C^∞ monotone in between.
fn smoothstep(x: f64) -> f64 {
    fn sigma(x: f64) -> f64 {
        if x > 0.0 {
            (-1.0 / x).exp()
        } else {
            0.0
        }
    }
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        let a = sigma(x);
        a / (a + sigma(1.0 - x))
    }
}

/// One-sided weight `⟨x⟩₊`: equals 1 for x ≤ 0, `⟨x⟩` for x ≥ 1, and the
/// smooth blend `1 + (⟨x⟩-1)·S(x)` on (0,1). Always ≥ 1 and nondecreasing.
pub fn bracket_plus(x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else if x >= 1.0 {
        bracket(x)
    } else {
        1.0 + (bracket(x) - 1.0) * smoothstep(x)
    }
}

/// One-sided weight `⟨x⟩₋ = ⟨-x⟩₊`.
pub fn bracket_minus(x: f64) -> f64 {
    bracket_plus(-x)
}

pub fn weight(kind: WeightKind, x: f64) -> f64 {
    match kind {
        WeightKind::Bracket => bracket(x),
        WeightKind::BracketPlus => bracket_plus(x),
        WeightKind::BracketMinus => bracket_minus(x),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bracket_plus_closed_forms() {
        assert_eq!(bracket_plus(-5.0), 1.0);
        assert_eq!(bracket_plus(0.0), 1.0);
        assert!((bracket_plus(2.0) - 5.0f64.sqrt()).abs() < 1e-15);
        // On the blend: between 1 and ⟨x⟩.
        let v = bracket_plus(0.5);
        assert!(v >= 1.0 && v <= 1.25f64.sqrt(), "blend value {v}");
    }

    #[test]
    fn bracket_plus_monotone_and_at_least_one() {
        let mut prev = 0.0;
        for i in 0..4000 {
            let x = -2.0 + i as f64 * 1e-3;
            let v = bracket_plus(x);
            assert!(v >= 1.0);
            assert!(v + 1e-12 >= prev, "not monotone at x = {x}");
            prev = v;
        }
    }

    #[test]
    fn bracket_plus_smooth_at_junctions() {
        // Second-order one-sided difference derivatives from either side of
        // x = 0 and x = 1 agree to O(h²): no kink at the blend junctions.
        let h = 1e-3;
        let f = bracket_plus;
        for &x0 in &[0.0, 1.0] {
            let left = (3.0 * f(x0) - 4.0 * f(x0 - h) + f(x0 - 2.0 * h)) / (2.0 * h);
            let right = (-3.0 * f(x0) + 4.0 * f(x0 + h) - f(x0 + 2.0 * h)) / (2.0 * h);
            assert!(
                (left - right).abs() < 10.0 * h * h,
                "derivative jump {} at {}",
                (left - right).abs(),
                x0
            );
        }
    }

    #[test]
    fn grid_rejects_bad_shapes() {
        assert!(UniformGrid::new(0.0, 1.0, 12).is_err());
        assert!(UniformGrid::new(0.0, 1.0, 100).is_err());
        assert!(UniformGrid::new(0.0, -1.0, 64).is_err());
        assert!(UniformGrid::new(0.0, 1.0, 64).is_ok());
    }

    #[test]
    fn lattice_seq_indexing() {
        let a = LatticeSeq::from_values(-2, vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(a.n_max(), 2);
        assert_eq!(a.get(-2), Some(1.0));
        assert_eq!(a.get(0), Some(3.0));
        assert_eq!(a.get(3), None);
    }
}
