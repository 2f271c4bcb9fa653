//! Modulation-field states: a smooth analytic carrier plus a periodic,
//! decaying wiggle.
//!
//! Fields with non-zero limits at infinity (the mKdV background `f` and its
//! velocity field `F`) cannot live on a periodic grid directly. Each is split
//! as `field = carrier + wiggle` where the carrier is a [`TanhProfile`]
//! (analytic everywhere, carries the limits) and the wiggle is periodic and
//! decays at the window edges. Spectral calculus acts on the wiggle, closed
//! forms on the carrier, so no periodization error enters. Outside the window
//! the wiggle is clamped to zero, which is exactly the regime the tail
//! tolerance certifies.

use crate::error::{Error, Result};
use crate::grid::{GridFunction, LatticeSeq, UniformGrid};
use crate::spectral;
use crate::tanh_poly::TanhProfile;

/// Default relative tail tolerance for field windows.
pub const TAIL_TOL: f64 = 1e-8;

/// Carrier + periodic wiggle on a uniform grid.
#[derive(Debug, Clone)]
pub struct SplitField {
    pub carrier: TanhProfile,
    pub wiggle: GridFunction,
}

impl SplitField {
    pub fn new(carrier: TanhProfile, wiggle: GridFunction) -> Self {
        SplitField { carrier, wiggle }
    }

    pub fn localized(wiggle: GridFunction) -> Self {
        SplitField {
            carrier: TanhProfile::zero(),
            wiggle,
        }
    }

    pub fn grid(&self) -> UniformGrid {
        self.wiggle.grid
    }

    /// Carrier sampled on the grid.
    pub fn carrier_samples(&self) -> GridFunction {
        GridFunction::from_fn(self.grid(), |x| self.carrier.eval(x))
    }

    /// Total field on the grid.
    pub fn total(&self) -> GridFunction {
        let mut out = self.carrier_samples();
        for (o, w) in out.values.iter_mut().zip(&self.wiggle.values) {
            *o += w;
        }
        out
    }

    /// Limits at (-∞, +∞); the wiggle contributes nothing by construction.
    pub fn limits(&self) -> (f64, f64) {
        self.carrier.limits()
    }

    /// d^order/dx^order, carrier exactly, wiggle spectrally.
    pub fn derivative(&self, order: usize) -> SplitField {
        SplitField {
            carrier: self.carrier.derivative_n(order),
            wiggle: spectral::spectral_derivative(&self.wiggle, order),
        }
    }

    /// Value at an arbitrary point: analytic carrier everywhere, interpolated
    /// wiggle inside the window, zero outside. O(n) per call.
    pub fn eval(&self, x: f64) -> f64 {
        let g = self.grid();
        let mut v = self.carrier.eval(x);
        if x >= g.x_min() && x < g.x_min() + g.length() {
            v += spectral::eval_interpolant(&self.wiggle, x);
        }
        v
    }

    /// Samples `field(eps·n + shift)` for sites `n_min..=n_max`.
    ///
    /// When `eps` is an integer multiple `p` of the grid spacing (how run
    /// geometry is always planned), this costs one fractional translation of
    /// the wiggle plus strided reads, and is spectrally exact. Otherwise it
    /// falls back to per-point trigonometric interpolation.
    pub fn sample(&self, eps: f64, shift: f64, n_min: i64, n_max: i64) -> LatticeSeq {
        assert!(n_max >= n_min);
        let g = self.grid();
        let dx = g.dx();
        let p_real = eps / dx;
        let p = p_real.round();
        let mut out = LatticeSeq::zeros(n_min, n_max);

        if (p_real - p).abs() < 1e-9 * p_real.max(1.0) && p >= 1.0 {
            let p = p as i64;
            let beta = (shift - g.x_min()) / dx;
            let base = beta.floor();
            let frac = beta - base;
            let shifted = if frac.abs() < 1e-13 {
                self.wiggle.clone()
            } else {
                spectral::fractional_shift(&self.wiggle, frac * dx)
            };
            let base = base as i64;
            let n_pts = g.n_points() as i64;
            for (j, v) in out.values.iter_mut().enumerate() {
                let n = n_min + j as i64;
                let idx = p * n + base;
                let mut val = self.carrier.eval(eps * n as f64 + shift);
                if idx >= 0 && idx < n_pts {
                    val += shifted.values[idx as usize];
                }
                *v = val;
            }
        } else {
            for (j, v) in out.values.iter_mut().enumerate() {
                let n = n_min + j as i64;
                *v = self.eval(eps * n as f64 + shift);
            }
        }
        out
    }

    /// Magnitude of the wiggle at the window edges.
    pub fn edge_magnitude(&self) -> f64 {
        let v = &self.wiggle.values;
        v.first().map(|a| a.abs()).unwrap_or(0.0).max(v.last().map(|a| a.abs()).unwrap_or(0.0))
    }
}

/// The left-moving background `f`: fixed limits `f∓`, slow time `τ`.
#[derive(Debug, Clone)]
pub struct BackgroundField {
    pub field: SplitField,
    pub f_minus: f64,
    pub f_plus: f64,
    pub tau: f64,
}

impl BackgroundField {
    pub fn new(field: SplitField, tau: f64) -> Self {
        let (f_minus, f_plus) = field.limits();
        BackgroundField {
            field,
            f_minus,
            f_plus,
            tau,
        }
    }

    /// Exact kink background at slow time 0: carrier is the kink profile,
    /// wiggle vanishes.
    pub fn kink(grid: UniformGrid, v: f64) -> Self {
        let amp = (12.0 * v).sqrt();
        let carrier = TanhProfile::ramp(amp, amp, 0.0, 0.0);
        Self::new(
            SplitField::new(carrier, GridFunction::zeros(grid)),
            0.0,
        )
    }

    pub fn constant(grid: UniformGrid, a: f64) -> Self {
        Self::new(
            SplitField::new(TanhProfile::constant(a), GridFunction::zeros(grid)),
            0.0,
        )
    }

    pub fn grid(&self) -> UniformGrid {
        self.field.grid()
    }

    pub fn total(&self) -> GridFunction {
        self.field.total()
    }

    /// Checks the wiggle decays at the window edges.
    pub fn validate(&self, tail_tol: f64) -> Result<()> {
        let tol = tail_tol * self.f_plus.abs().max(1.0);
        let edge = self.field.edge_magnitude();
        if edge > tol {
            return Err(Error::TailMismatch {
                context: "background field",
                value: edge,
                tol,
            });
        }
        if !self.field.wiggle.all_finite() {
            return Err(Error::StepInstability {
                t: self.tau,
                amp: f64::NAN,
                limit: f64::INFINITY,
            });
        }
        Ok(())
    }
}

/// The right-moving localized field `g` (and friends): decays to zero.
#[derive(Debug, Clone)]
pub struct LocalizedField {
    pub values: GridFunction,
    pub tau: f64,
}

impl LocalizedField {
    pub fn new(values: GridFunction, tau: f64) -> Self {
        LocalizedField { values, tau }
    }

    pub fn zero(grid: UniformGrid) -> Self {
        LocalizedField {
            values: GridFunction::zeros(grid),
            tau: 0.0,
        }
    }

    /// `amp · exp(-(x-center)²/(2 width²))`.
    pub fn gaussian(grid: UniformGrid, amp: f64, width: f64, center: f64) -> Self {
        LocalizedField {
            values: GridFunction::from_fn(grid, |x| {
                amp * (-((x - center) * (x - center)) / (2.0 * width * width)).exp()
            }),
            tau: 0.0,
        }
    }

    /// Solitary wave of the Gardner equation on the `f₊` background:
    /// `a / (1 + b cosh(λ(x - center)))` with `λ = √(24 s)`,
    /// `a = -12 s / f₊`, `b = √(1 - 6 s / f₊²)`, valid for `0 < s < f₊²/6`.
    pub fn gardner_soliton(grid: UniformGrid, f_plus: f64, speed: f64, center: f64) -> Result<Self> {
        if !(f_plus != 0.0 && speed > 0.0 && speed < f_plus * f_plus / 6.0) {
            return Err(Error::Config(format!(
                "gardner soliton needs 0 < speed < f_plus²/6, got speed={speed}, f_plus={f_plus}"
            )));
        }
        let lambda = (24.0 * speed).sqrt();
        let a = -12.0 * speed / f_plus;
        let b = (1.0 - 6.0 * speed / (f_plus * f_plus)).sqrt();
        Ok(LocalizedField {
            values: GridFunction::from_fn(grid, |x| {
                a / (1.0 + b * (lambda * (x - center)).cosh())
            }),
            tau: 0.0,
        })
    }

    pub fn grid(&self) -> UniformGrid {
        self.values.grid
    }

    pub fn as_split(&self) -> SplitField {
        SplitField::localized(self.values.clone())
    }

    pub fn validate(&self, tail_tol: f64) -> Result<()> {
        let edge = self
            .values
            .values
            .first()
            .map(|a| a.abs())
            .unwrap_or(0.0)
            .max(self.values.values.last().map(|a| a.abs()).unwrap_or(0.0));
        if edge > tail_tol {
            return Err(Error::TailMismatch {
                context: "localized field",
                value: edge,
                tol: tail_tol,
            });
        }
        Ok(())
    }
}
