//! Discrete realizations of the norms: `ℓ²`, `ℓ²₂`, `H^k`, `H^k_n`, `X^k`,
//! and the one-sided weighted `X^k_{n±}`.
//!
//! All `H^k`-type norms use spectral derivatives and periodic trapezoid
//! quadrature. Weighted norms of fields with distinct limits subtract a
//! smooth tanh ramp carrying the plateau before any transform, so the
//! spectral pipeline only ever sees functions that decay at the window edges.

use crate::error::{Error, Result};
use crate::fields::{BackgroundField, SplitField};
use crate::grid::{bracket, bracket_minus, bracket_plus, GridFunction, LatticeSeq};
use crate::spectral::spectral_derivative;
use crate::tanh_poly::TanhProfile;
use std::sync::OnceLock;

/// Zero-sum tolerance (relative to `‖a‖_{ℓ²₂}`) for [`partial_sums`].
pub const PARTIAL_SUM_TOL: f64 = 1e-8;

/// `√(Σ a_n²)`.
pub fn l2_norm(a: &LatticeSeq) -> f64 {
    a.values.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `‖⟨n⟩² a_n‖_{ℓ²}` with `n` the absolute site index.
pub fn l2_weighted_norm(a: &LatticeSeq) -> f64 {
    a.values
        .iter()
        .enumerate()
        .map(|(j, v)| {
            let n = (a.n_min + j as i64) as f64;
            let w = 1.0 + n * n;
            (w * v) * (w * v)
        })
        .sum::<f64>()
        .sqrt()
}

fn l2_grid_sq(f: &GridFunction) -> f64 {
    let dx = f.grid.dx();
    dx * f.values.iter().map(|v| v * v).sum::<f64>()
}

/// Discrete `H^k`: `√(Σ_{j≤k} ‖∂^j f‖²_{L²})`.
pub fn sobolev_norm(f: &GridFunction, k: usize) -> f64 {
    let mut acc = l2_grid_sq(f);
    let mut d = f.clone();
    for _ in 1..=k {
        d = spectral_derivative(&d, 1);
        acc += l2_grid_sq(&d);
    }
    acc.sqrt()
}

/// `H^k_n`: Sobolev norm of `f(x)·⟨x⟩^{n_w}`, derivatives after
/// multiplication.
pub fn weighted_sobolev_norm(f: &GridFunction, k: usize, n_w: i32) -> f64 {
    let weighted = GridFunction::from_fn(f.grid, |x| bracket(x).powi(n_w));
    sobolev_norm(&f.zip_with(&weighted, |a, w| a * w), k)
}

/// `X^k`: `‖f‖_∞ + ‖f'‖_{H^{k-1}}` for periodic-representable `f`.
pub fn xk_norm(f: &GridFunction, k: usize) -> f64 {
    assert!(k >= 1);
    f.max_abs() + sobolev_norm(&spectral_derivative(f, 1), k - 1)
}

/// `X^k` of a carrier + wiggle field: the sup runs over the total field, the
/// derivative decays and is handled exactly.
pub fn xk_norm_split(f: &SplitField, k: usize) -> f64 {
    assert!(k >= 1);
    let sup = f.total().max_abs();
    let d = f.derivative(1);
    // The derivative decays at both ends; collapse it to one grid function.
    sup + sobolev_norm(&d.total(), k - 1)
}

/// One side of the weighted `X^k_{n±}` computation: the `H`-seminorm part of
/// `‖(f - limit)·W‖_{X^k}` with the plateau tamed by a tanh ramp.
fn one_sided_xk(
    f: &BackgroundField,
    limit: f64,
    other_limit: f64,
    weight: impl Fn(f64) -> f64,
    ramp_to_left: bool,
    k: usize,
) -> f64 {
    let grid = f.grid();
    let total = f.total();
    let mut h = GridFunction::zeros(grid);
    for (i, hv) in h.values.iter_mut().enumerate() {
        let x = grid.x(i);
        *hv = (total.values[i] - limit) * weight(x);
    }

    // Plateau value on the non-decaying side and a smooth ramp carrying it.
    let plateau = other_limit - limit;
    let mid = grid.x_min() + grid.length() / 2.0;
    let ramp = if ramp_to_left {
        TanhProfile::ramp(-0.5, 1.0, mid, 0.5) // 1 at -∞, 0 at +∞
    } else {
        TanhProfile::ramp(0.5, 1.0, mid, 0.5) // 0 at -∞, 1 at +∞
    };

    let tamed = GridFunction::from_fn(grid, |x| plateau * ramp.eval(x));
    let h_tilde = h.zip_with(&tamed, |a, b| a - b);

    let sup = h.max_abs();
    let mut seminorm_sq = 0.0;
    let mut ramp_deriv = ramp.clone();
    let mut wiggle_deriv = h_tilde;
    for _ in 1..=k {
        ramp_deriv = ramp_deriv.derivative();
        wiggle_deriv = spectral_derivative(&wiggle_deriv, 1);
        let dj = GridFunction::from_fn(grid, |x| plateau * ramp_deriv.eval(x))
            .zip_with(&wiggle_deriv, |a, b| a + b);
        seminorm_sq += l2_grid_sq(&dj);
    }
    limit.abs() + sup + seminorm_sq.sqrt()
}

/// `‖f‖_{X^k_{n+}} + ‖f‖_{X^k_{n-}}` with
/// `‖f‖_{X^k_{n+}} = |f₊| + ‖(f-f₊)⟨·⟩₊^{n_w}‖_{X^k}` and the mirror image.
pub fn weighted_xk_norm(
    f: &BackgroundField,
    k: usize,
    n_w: i32,
    tail_tol: f64,
) -> Result<f64> {
    assert!(k >= 1);
    let total = f.total();
    let tol = tail_tol * f.f_plus.abs().max(1.0);
    let right_gap = (total.values[total.len() - 1] - f.f_plus).abs();
    let left_gap = (total.values[0] - f.f_minus).abs();
    if right_gap > tol || left_gap > tol {
        return Err(Error::TailMismatch {
            context: "weighted X^k norm",
            value: right_gap.max(left_gap),
            tol,
        });
    }
    let plus = one_sided_xk(
        f,
        f.f_plus,
        f.f_minus,
        |x| bracket_plus(x).powi(n_w),
        true,
        k,
    );
    let minus = one_sided_xk(
        f,
        f.f_minus,
        f.f_plus,
        |x| bracket_minus(x).powi(n_w),
        false,
        k,
    );
    Ok(plus + minus)
}

/// Samples a continuous function on lattice sites: `values[j] = f(ε(n_min+j))`.
pub fn sample_to_lattice(f: impl Fn(f64) -> f64, eps: f64, n_min: i64, n_max: i64) -> LatticeSeq {
    assert!(eps > 0.0 && eps < 1.0, "eps must lie in (0,1)");
    let mut out = LatticeSeq::zeros(n_min, n_max);
    for (j, v) in out.values.iter_mut().enumerate() {
        *v = f(eps * (n_min + j as i64) as f64);
    }
    out
}

/// Cumulative sums `b_n = Σ_{k≤n} a_k` from the left window edge, valid under
/// the zero-sum hypothesis of the `ℓ²₂` summation lemma.
pub fn partial_sums(a: &LatticeSeq) -> Result<LatticeSeq> {
    partial_sums_with_tol(a, PARTIAL_SUM_TOL)
}

pub fn partial_sums_with_tol(a: &LatticeSeq, rel_tol: f64) -> Result<LatticeSeq> {
    let total: f64 = a.values.iter().sum();
    let scale = l2_weighted_norm(a);
    let tol = rel_tol * scale;
    if scale > 0.0 && total.abs() > tol {
        return Err(Error::SumMismatch {
            sum: total.abs(),
            tol,
        });
    }
    let mut out = LatticeSeq::zeros(a.n_min, a.n_max());
    let mut acc = 0.0;
    for (j, v) in a.values.iter().enumerate() {
        acc += v;
        out.values[j] = acc;
    }
    Ok(out)
}

/// The constructive constant of the `ℓ²₂` partial-sum lemma:
/// `C² = Σ_n min(Σ_{k≤n}⟨k⟩⁻⁴, Σ_{k>n}⟨k⟩⁻⁴)`, evaluated by brute force once.
pub fn ell22_bound_constant() -> f64 {
    static C: OnceLock<f64> = OnceLock::new();
    *C.get_or_init(|| {
        const K: i64 = 100_000;
        let w4 = |n: i64| {
            let nn = n as f64;
            let b = 1.0 + nn * nn;
            1.0 / (b * b)
        };
        let total: f64 = (-K..=K).map(w4).sum();
        let mut acc = 0.0;
        let mut left = 0.0;
        for n in -K..=K {
            left += w4(n);
            acc += left.min(total - left);
        }
        acc.sqrt()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::UniformGrid;
    use std::f64::consts::PI;

    #[test]
    fn l2_basics() {
        let unit = LatticeSeq::from_values(3, vec![0.0, 1.0, 0.0]);
        assert_eq!(l2_norm(&unit), 1.0);
        let pyth = LatticeSeq::from_values(0, vec![3.0, 4.0]);
        assert_eq!(l2_norm(&pyth), 5.0);
        assert_eq!(l2_norm(&LatticeSeq::zeros(-5, 5)), 0.0);
    }

    #[test]
    fn weighted_l2_examples() {
        let at0 = LatticeSeq::from_values(0, vec![1.0]);
        assert_eq!(l2_weighted_norm(&at0), 1.0);
        let at1 = LatticeSeq::from_values(1, vec![1.0]);
        assert_eq!(l2_weighted_norm(&at1), 2.0);
        let two = LatticeSeq::from_values(0, vec![1.0, 0.0, 1.0]);
        assert!((l2_weighted_norm(&two) - 26.0f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn sobolev_norm_of_sine() {
        // ∫₀^{2π} sin² = π, so ‖sin‖_{H⁰} = √π on L = 2π.
        let grid = UniformGrid::new(0.0, 2.0 * PI, 128).unwrap();
        let f = GridFunction::from_fn(grid, |x| x.sin());
        assert!((sobolev_norm(&f, 0) - PI.sqrt()).abs() < 1e-12);
        // ∫ sin² + ∫ cos² = 2π.
        assert!((sobolev_norm(&f, 1) - (2.0 * PI).sqrt()).abs() < 1e-12);
        let zero = GridFunction::zeros(grid);
        assert_eq!(sobolev_norm(&zero, 3), 0.0);
    }

    #[test]
    fn weighted_sobolev_reduces_to_plain_at_zero_weight() {
        let grid = UniformGrid::centered(40.0, 256).unwrap();
        let f = GridFunction::from_fn(grid, |x| (-x * x / 2.0).exp());
        let a = weighted_sobolev_norm(&f, 2, 0);
        let b = sobolev_norm(&f, 2);
        assert!((a - b).abs() < 1e-13 * b);
    }

    #[test]
    fn weighted_sobolev_sech_matches_quadrature() {
        // ‖sech·⟨x⟩²‖_{L²}² = ∫ sech²(x)(1+x²)² dx, via fine trapezoid oracle.
        let grid = UniformGrid::centered(80.0, 1024).unwrap();
        let f = GridFunction::from_fn(grid, |x| 1.0 / x.cosh());
        let got = weighted_sobolev_norm(&f, 0, 2);

        // Oracle at 10x resolution over the same window.
        let n = 10240;
        let dx = 80.0 / n as f64;
        let mut acc = 0.0;
        for i in 0..n {
            let x = -40.0 + i as f64 * dx;
            let v = (1.0 + x * x) / x.cosh();
            acc += v * v * dx;
        }
        let expect = acc.sqrt();
        assert!(
            (got - expect).abs() < 1e-8 * expect,
            "got {got}, oracle {expect}"
        );
    }

    #[test]
    fn xk_norm_of_constant_and_zero() {
        let grid = UniformGrid::centered(20.0, 64).unwrap();
        let c = GridFunction::from_fn(grid, |_| -1.75);
        assert!((xk_norm(&c, 3) - 1.75).abs() < 1e-12);
        assert_eq!(xk_norm(&GridFunction::zeros(grid), 2), 0.0);
    }

    #[test]
    fn xk_norm_of_kink_matches_quadrature() {
        // f = √(12v) tanh(√(12v) x), v = 1/24: sup = √(1/2); derivative norms
        // from a fine quadrature of the analytic derivative.
        let v: f64 = 1.0 / 24.0;
        let amp = (12.0 * v).sqrt();
        let grid = UniformGrid::centered(120.0, 2048).unwrap();
        let f = BackgroundField::kink(grid, v);
        let got = xk_norm_split(&f.field, 1);

        let n = 40960;
        let dx = 120.0 / n as f64;
        let mut acc = 0.0;
        for i in 0..n {
            let x = -60.0 + i as f64 * dx;
            let d = amp * amp / (amp * x).cosh().powi(2);
            acc += d * d * dx;
        }
        let expect = amp + acc.sqrt();
        assert!(
            (got - expect).abs() < 1e-9 * expect,
            "got {got}, oracle {expect}"
        );
    }

    #[test]
    fn weighted_xk_of_constant_is_twice_abs() {
        let grid = UniformGrid::centered(60.0, 512).unwrap();
        let f = BackgroundField::constant(grid, -2.5);
        let n = weighted_xk_norm(&f, 2, 2, 1e-8).unwrap();
        assert!((n - 5.0).abs() < 1e-10, "got {n}");
    }

    #[test]
    fn weighted_xk_of_zero() {
        let grid = UniformGrid::centered(60.0, 512).unwrap();
        let f = BackgroundField::constant(grid, 0.0);
        assert!(weighted_xk_norm(&f, 3, 2, 1e-8).unwrap().abs() < 1e-14);
    }

    #[test]
    fn weighted_xk_of_kink_stable_under_box_doubling() {
        let v = 1.0 / 24.0;
        let a = {
            let grid = UniformGrid::centered(80.0, 1024).unwrap();
            weighted_xk_norm(&BackgroundField::kink(grid, v), 1, 2, 1e-8).unwrap()
        };
        let b = {
            let grid = UniformGrid::centered(160.0, 2048).unwrap();
            weighted_xk_norm(&BackgroundField::kink(grid, v), 1, 2, 1e-8).unwrap()
        };
        assert!(
            (a - b).abs() < 0.01 * b,
            "box doubling moved the norm: {a} vs {b}"
        );
    }

    #[test]
    fn sample_to_lattice_examples() {
        let s = sample_to_lattice(|x| x, 0.5, 0, 2);
        assert_eq!(s.values, vec![0.0, 0.5, 1.0]);
        let z = sample_to_lattice(|_| 0.0, 0.3, -4, 4);
        assert!(z.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn partial_sums_examples() {
        let a = LatticeSeq::from_values(0, vec![1.0, -1.0]);
        let b = partial_sums(&a).unwrap();
        assert_eq!(b.values, vec![1.0, 0.0]);
        let z = partial_sums(&LatticeSeq::zeros(0, 5)).unwrap();
        assert!(z.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn partial_sums_rejects_nonzero_total() {
        let a = LatticeSeq::from_values(0, vec![1.0, 1.0]);
        match partial_sums(&a) {
            Err(Error::SumMismatch { .. }) => {}
            other => panic!("expected SumMismatch, got {other:?}"),
        }
    }

    #[test]
    fn ell22_constant_is_finite_and_modest() {
        let c = ell22_bound_constant();
        assert!(c.is_finite() && c > 0.1 && c < 10.0, "C = {c}");
    }
}
