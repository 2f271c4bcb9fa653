//! Fourier-multiplier calculus on periodic grids.
//!
//! All derivatives are exact for band-limited inputs: multiply by `(ik)^m` in
//! Fourier space, with the asymmetric Nyquist mode zeroed for odd orders.
//! `∂₁⁻¹` is the `(ik)⁻¹` multiplier with the zero mode dropped, guarded by a
//! mean-free check. Fractional translations use the `e^{iks}` phase, which is
//! what keeps shifted-argument sampling spectrally exact.

use crate::error::{Error, Result};
use crate::grid::GridFunction;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

/// Relative tolerance on the zero mode for `antiderivative`.
pub const ZERO_MODE_TOL: f64 = 1e-10;

thread_local! {
    static PLANS: RefCell<HashMap<usize, (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>)>> =
        RefCell::new(HashMap::new());
}

fn with_plans<R>(n: usize, f: impl FnOnce(&Arc<dyn Fft<f64>>, &Arc<dyn Fft<f64>>) -> R) -> R {
    PLANS.with(|cell| {
        let mut map = cell.borrow_mut();
        let (fwd, inv) = map.entry(n).or_insert_with(|| {
            let mut planner = FftPlanner::new();
            (planner.plan_fft_forward(n), planner.plan_fft_inverse(n))
        });
        f(fwd, inv)
    })
}

/// Forward FFT of real samples (unnormalized, rustfft convention).
pub fn fft_real(values: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    with_plans(values.len(), |fwd, _| fwd.process(&mut buf));
    buf
}

/// Inverse FFT, returning the real part scaled by 1/n.
pub fn ifft_real(mut spectrum: Vec<Complex64>) -> Vec<f64> {
    let n = spectrum.len();
    with_plans(n, |_, inv| inv.process(&mut spectrum));
    let norm = 1.0 / n as f64;
    spectrum.iter().map(|c| c.re * norm).collect()
}

/// In-place unnormalized inverse FFT on a complex buffer.
pub fn with_inverse(buf: &mut [Complex64]) {
    with_plans(buf.len(), |_, inv| inv.process(buf));
}

/// Signed wavenumbers `2π m / L` in FFT layout. `wavenumber(n/2)` is the
/// Nyquist mode.
pub fn wavenumbers(n: usize, length: f64) -> Vec<f64> {
    let scale = 2.0 * PI / length;
    (0..n)
        .map(|i| {
            let m = if i <= n / 2 { i as i64 } else { i as i64 - n as i64 };
            m as f64 * scale
        })
        .collect()
}

/// Fourier-multiplier derivative `(ik)^order`, Nyquist zeroed for odd orders.
pub fn spectral_derivative(f: &GridFunction, order: usize) -> GridFunction {
    if order == 0 {
        return f.clone();
    }
    let n = f.len();
    let k = wavenumbers(n, f.grid.length());
    let mut spec = fft_real(&f.values);
    for (i, c) in spec.iter_mut().enumerate() {
        let ik = Complex64::new(0.0, k[i]);
        *c *= ik.powu(order as u32);
    }
    if order % 2 == 1 {
        spec[n / 2] = Complex64::new(0.0, 0.0);
    }
    GridFunction::from_values(f.grid, ifft_real(spec))
}

/// `∂₁⁻¹` as the `(ik)⁻¹` multiplier on nonzero modes; the output zero mode
/// is set to 0. Fails with `ZeroMode` when the input mean is not negligible.
pub fn antiderivative(f: &GridFunction) -> Result<GridFunction> {
    antiderivative_with_tol(f, ZERO_MODE_TOL)
}

pub fn antiderivative_with_tol(f: &GridFunction, rel_tol: f64) -> Result<GridFunction> {
    let n = f.len();
    let scale = (f.values.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
    let mean = f.mean();
    let tol = rel_tol * scale.max(f64::MIN_POSITIVE);
    if mean.abs() > tol && scale > 0.0 {
        return Err(Error::ZeroMode {
            mean: mean.abs(),
            tol,
        });
    }
    let k = wavenumbers(n, f.grid.length());
    let mut spec = fft_real(&f.values);
    spec[0] = Complex64::new(0.0, 0.0);
    for (i, c) in spec.iter_mut().enumerate().skip(1) {
        *c /= Complex64::new(0.0, k[i]);
    }
    spec[n / 2] = Complex64::new(0.0, 0.0);
    Ok(GridFunction::from_values(f.grid, ifft_real(spec)))
}

/// Values of `f(x + s)` on the same grid (periodic translation by `s`).
pub fn fractional_shift(f: &GridFunction, s: f64) -> GridFunction {
    if s == 0.0 {
        return f.clone();
    }
    let n = f.len();
    let k = wavenumbers(n, f.grid.length());
    let mut spec = fft_real(&f.values);
    for (i, c) in spec.iter_mut().enumerate() {
        *c *= Complex64::from_polar(1.0, k[i] * s);
    }
    spec[n / 2] = Complex64::new(0.0, 0.0);
    GridFunction::from_values(f.grid, ifft_real(spec))
}

/// Zeroes modes beyond `fraction` of the Nyquist in place.
pub fn dealias_spectrum(spec: &mut [Complex64], fraction: f64) {
    let n = spec.len();
    let cutoff = (fraction * (n / 2) as f64).floor() as i64;
    for (i, c) in spec.iter_mut().enumerate() {
        let m = if i <= n / 2 { i as i64 } else { i as i64 - n as i64 };
        if m.abs() > cutoff {
            *c = Complex64::new(0.0, 0.0);
        }
    }
}

/// Truncates a physical-space product to the dealiased band.
pub fn dealias(f: &GridFunction, fraction: f64) -> GridFunction {
    let mut spec = fft_real(&f.values);
    dealias_spectrum(&mut spec, fraction);
    GridFunction::from_values(f.grid, ifft_real(spec))
}

/// Evaluates the trigonometric interpolant of `f` at one arbitrary point.
/// O(n) per point; the workhorse paths avoid this, it exists as the exact
/// fallback for non-commensurate sampling.
pub fn eval_interpolant(f: &GridFunction, x: f64) -> f64 {
    let n = f.len();
    let k = wavenumbers(n, f.grid.length());
    let spec = fft_real(&f.values);
    let dx = x - f.grid.x_min();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        if i == n / 2 {
            continue; // drop the asymmetric Nyquist mode
        }
        acc += spec[i] * Complex64::from_polar(1.0, k[i] * dx);
    }
    acc.re / n as f64
}
