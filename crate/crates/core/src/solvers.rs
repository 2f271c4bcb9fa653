//! Pseudo-spectral evolution of the modulation equations.
//!
//! The background `f` obeys the defocusing mKdV
//! `2∂₂f = -(1/6)∂₁(f³) + (1/12)∂₁³f` with fixed limits `f∓`; the localized
//! `g` obeys the Gardner-type equation
//! `-2∂₂g = -(1/6)∂₁(g³ + 3f₊g²) + (1/12)∂₁³g`.
//!
//! `f` is evolved through its periodic wiggle `w` where `f = κ + w` and `κ`
//! is an analytic tanh carrier: the carrier's contribution to every term is
//! closed-form, so the transforms only ever see decaying data. The third
//! derivative of the wiggle is integrated exactly in Fourier space
//! (integrating factor); the cubic nonlinearity is evaluated physically and
//! dealiased by the 2/3 rule; classical RK4 supplies 4th order in `dt_slow`.

use crate::error::{Error, Result};
use crate::fields::{BackgroundField, LocalizedField, SplitField};
use crate::grid::{GridFunction, UniformGrid};
use crate::spectral::{self, dealias_spectrum, fft_real, ifft_real, wavenumbers};
use crate::tanh_poly::TanhProfile;
use num_complex::Complex64;

/// Pseudo-spectral solver settings.
#[derive(Debug, Clone, Copy)]
pub struct SolverConfig {
    /// Slow-time step.
    pub dt_slow: f64,
    /// Fraction of the spectrum kept when dealiasing products (2/3 rule).
    pub dealias_fraction: f64,
    /// Relative tail tolerance enforced at every checkpoint.
    pub tail_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            dt_slow: 1e-3,
            dealias_fraction: 2.0 / 3.0,
            tail_tol: crate::fields::TAIL_TOL,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt_slow > 0.0 && self.dt_slow < 0.05) {
            return Err(Error::Config(format!(
                "dt_slow must lie in (0, 0.05), got {}",
                self.dt_slow
            )));
        }
        if !(self.dealias_fraction > 0.0 && self.dealias_fraction <= 1.0) {
            return Err(Error::Config(format!(
                "dealias_fraction must lie in (0, 1], got {}",
                self.dealias_fraction
            )));
        }
        Ok(())
    }
}

/// Exact kink solution of the defocusing mKdV:
/// `√(12v) · tanh(√(12v)(X - vT))`.
pub fn kink_profile(v: f64, x: f64, t: f64) -> f64 {
    assert!(v > 0.0);
    let amp = (12.0 * v).sqrt();
    amp * (amp * (x - v * t)).tanh()
}

/// `∂₂f = (1/2)[-(1/6)∂₁(f³) + (1/12)∂₁³f]` for a background field.
///
/// Carrier contributions are analytic; only decaying combinations are
/// transformed, so the result is a plain decaying grid function.
pub fn mkdv_rhs(f: &BackgroundField) -> GridFunction {
    mkdv_rhs_with(f, 2.0 / 3.0)
}

pub fn mkdv_rhs_with(f: &BackgroundField, dealias_fraction: f64) -> GridFunction {
    let grid = f.grid();
    let kappa = &f.field.carrier;
    let w = &f.field.wiggle;

    // Analytic part: (1/24)κ''' - (1/12)(κ³)'.
    let analytic = kappa
        .derivative_n(3)
        .scaled(1.0 / 24.0)
        .sub(&kappa.cube().derivative().scaled(1.0 / 12.0));

    // Decaying cubic remainder (f³ - κ³) = 3κ²w + 3κw² + w³.
    let ks = f.field.carrier_samples();
    let cubic = GridFunction::from_values(
        grid,
        ks.values
            .iter()
            .zip(&w.values)
            .map(|(&k, &wv)| 3.0 * k * k * wv + 3.0 * k * wv * wv + wv * wv * wv)
            .collect(),
    );
    let cubic = spectral::dealias(&cubic, dealias_fraction);
    let d_cubic = spectral::spectral_derivative(&cubic, 1);
    let d3_w = spectral::spectral_derivative(w, 3);

    GridFunction::from_fn(grid, |x| analytic.eval(x))
        .zip_with(&d3_w, |a, d3| a + d3 / 24.0)
        .zip_with(&d_cubic, |a, dc| a - dc / 12.0)
}

/// `∂₂g = -(1/2)[-(1/6)∂₁(g³ + 3f₊g²) + (1/12)∂₁³g]`.
pub fn gardner_rhs(g: &LocalizedField, f_plus: f64) -> GridFunction {
    gardner_rhs_with(g, f_plus, 2.0 / 3.0)
}

pub fn gardner_rhs_with(g: &LocalizedField, f_plus: f64, dealias_fraction: f64) -> GridFunction {
    let v = &g.values;
    let nl = GridFunction::from_values(
        v.grid,
        v.values
            .iter()
            .map(|&x| x * x * x + 3.0 * f_plus * x * x)
            .collect(),
    );
    let nl = spectral::dealias(&nl, dealias_fraction);
    let d_nl = spectral::spectral_derivative(&nl, 1);
    let d3 = spectral::spectral_derivative(v, 3);
    d_nl.zip_with(&d3, |a, b| a / 12.0 - b / 24.0)
}

/// Recorded evolution of one modulation field; states between records are
/// recovered by cubic Hermite interpolation using the stored right-hand
/// sides.
#[derive(Debug, Clone)]
pub struct FieldTrajectory {
    pub grid: UniformGrid,
    pub carrier: TanhProfile,
    pub taus: Vec<f64>,
    pub wiggles: Vec<Vec<f64>>,
    pub rhs: Vec<Vec<f64>>,
}

impl FieldTrajectory {
    pub fn tau_end(&self) -> f64 {
        *self.taus.last().unwrap()
    }

    /// Wiggle at an arbitrary slow time in `[0, tau_end]`.
    fn wiggle_at(&self, tau: f64) -> Vec<f64> {
        let n = self.taus.len();
        assert!(n >= 1);
        if tau <= self.taus[0] {
            return self.wiggles[0].clone();
        }
        if tau >= self.taus[n - 1] {
            return self.wiggles[n - 1].clone();
        }
        let i = match self
            .taus
            .binary_search_by(|t| t.partial_cmp(&tau).unwrap())
        {
            Ok(i) => return self.wiggles[i].clone(),
            Err(i) => i - 1,
        };
        let (t0, t1) = (self.taus[i], self.taus[i + 1]);
        let h = t1 - t0;
        let s = (tau - t0) / h;
        let (h00, h10, h01, h11) = hermite_basis(s);
        let mut out = vec![0.0; self.wiggles[i].len()];
        for (j, o) in out.iter_mut().enumerate() {
            *o = h00 * self.wiggles[i][j]
                + h10 * h * self.rhs[i][j]
                + h01 * self.wiggles[i + 1][j]
                + h11 * h * self.rhs[i + 1][j];
        }
        out
    }

    pub fn split_at(&self, tau: f64) -> SplitField {
        SplitField::new(
            self.carrier.clone(),
            GridFunction::from_values(self.grid, self.wiggle_at(tau)),
        )
    }

    pub fn background_at(&self, tau: f64) -> BackgroundField {
        BackgroundField::new(self.split_at(tau), tau)
    }

    pub fn localized_at(&self, tau: f64) -> LocalizedField {
        debug_assert!(self.carrier.is_zero());
        LocalizedField::new(GridFunction::from_values(self.grid, self.wiggle_at(tau)), tau)
    }
}

fn hermite_basis(s: f64) -> (f64, f64, f64, f64) {
    let s2 = s * s;
    let s3 = s2 * s;
    (
        2.0 * s3 - 3.0 * s2 + 1.0,
        s3 - 2.0 * s2 + s,
        -2.0 * s3 + 3.0 * s2,
        s3 - s2,
    )
}

/// Which modulation equation an integrating-factor run solves.
enum Equation {
    /// mKdV for the wiggle of `f = κ + w`.
    Mkdv { kappa: TanhProfile },
    /// Gardner for localized `g` on the `f₊` background.
    Gardner { f_plus: f64 },
}

struct IfRk4 {
    grid: UniformGrid,
    eq: Equation,
    dealias_fraction: f64,
    /// Analytic forcing samples (mKdV carrier terms), if any.
    forcing: Option<Vec<f64>>,
    /// Carrier samples for the cubic remainder.
    carrier_samples: Option<Vec<f64>>,
    /// Linear symbol per mode.
    lambda: Vec<Complex64>,
}

impl IfRk4 {
    fn new(grid: UniformGrid, eq: Equation, dealias_fraction: f64) -> Self {
        let n = grid.n_points();
        let k = wavenumbers(n, grid.length());
        let sign = match eq {
            Equation::Mkdv { .. } => 1.0,
            Equation::Gardner { .. } => -1.0,
        };
        // (±1/24)(ik)³ = ∓ i k³ / 24
        let lambda = k
            .iter()
            .map(|&ki| Complex64::new(0.0, -sign * ki * ki * ki / 24.0))
            .collect();
        let (forcing, carrier_samples) = match &eq {
            Equation::Mkdv { kappa } => {
                let analytic = kappa
                    .derivative_n(3)
                    .scaled(1.0 / 24.0)
                    .sub(&kappa.cube().derivative().scaled(1.0 / 12.0));
                let f: Vec<f64> = grid.points().map(|x| analytic.eval(x)).collect();
                let ks: Vec<f64> = grid.points().map(|x| kappa.eval(x)).collect();
                (Some(f), Some(ks))
            }
            Equation::Gardner { .. } => (None, None),
        };
        IfRk4 {
            grid,
            eq,
            dealias_fraction,
            forcing,
            carrier_samples,
            lambda,
        }
    }

    /// Nonlinear + forcing part in spectral space.
    fn nonlinear(&self, what: &[Complex64]) -> Vec<Complex64> {
        let n = self.grid.n_points();
        let norm = 1.0 / n as f64;
        let mut phys_spec = what.to_vec();
        crate::spectral::with_inverse(&mut phys_spec);
        let w: Vec<f64> = phys_spec.iter().map(|c| c.re * norm).collect();

        let nl: Vec<f64> = match &self.eq {
            Equation::Mkdv { .. } => {
                let ks = self.carrier_samples.as_ref().unwrap();
                w.iter()
                    .zip(ks)
                    .map(|(&wv, &kv)| 3.0 * kv * kv * wv + 3.0 * kv * wv * wv + wv * wv * wv)
                    .collect()
            }
            Equation::Gardner { f_plus } => w
                .iter()
                .map(|&gv| gv * gv * gv + 3.0 * f_plus * gv * gv)
                .collect(),
        };

        let mut nl_spec = fft_real(&nl);
        dealias_spectrum(&mut nl_spec, self.dealias_fraction);
        let k = wavenumbers(n, self.grid.length());
        let coef = match &self.eq {
            Equation::Mkdv { .. } => -1.0 / 12.0,
            Equation::Gardner { .. } => 1.0 / 12.0,
        };
        for (i, c) in nl_spec.iter_mut().enumerate() {
            *c *= Complex64::new(0.0, coef * k[i]);
        }
        nl_spec[n / 2] = Complex64::new(0.0, 0.0);

        if let Some(f) = &self.forcing {
            let f_spec = fft_real(f);
            for (c, fc) in nl_spec.iter_mut().zip(&f_spec) {
                *c += fc;
            }
        }
        nl_spec
    }

    /// One IFRK4 step of size `h` on the spectral state.
    fn step(&self, state: &mut Vec<Complex64>, h: f64) {
        let e_half: Vec<Complex64> = self.lambda.iter().map(|l| (l * h / 2.0).exp()).collect();
        let e_full: Vec<Complex64> = self.lambda.iter().map(|l| (l * h).exp()).collect();

        let n1 = self.nonlinear(state);

        let mut stage: Vec<Complex64> = state
            .iter()
            .zip(&n1)
            .zip(&e_half)
            .map(|((a, n), e)| (a + n * (h / 2.0)) * e)
            .collect();
        let n2 = self.nonlinear(&stage);

        for ((s, a), (n, e)) in stage
            .iter_mut()
            .zip(state.iter())
            .zip(n2.iter().zip(&e_half))
        {
            *s = a * e + n * (h / 2.0);
        }
        let n3 = self.nonlinear(&stage);

        for (((s, a), n), (ef, eh)) in stage
            .iter_mut()
            .zip(state.iter())
            .zip(n3.iter())
            .zip(e_full.iter().zip(&e_half))
        {
            *s = a * ef + eh * n * h;
        }
        let n4 = self.nonlinear(&stage);

        for i in 0..state.len() {
            state[i] = e_full[i] * state[i]
                + (h / 6.0)
                    * (e_full[i] * n1[i] + 2.0 * e_half[i] * (n2[i] + n3[i]) + n4[i]);
        }
    }
}

fn run_ifrk4(
    grid: UniformGrid,
    carrier: TanhProfile,
    w0: &GridFunction,
    eq: Equation,
    tau_end: f64,
    cfg: &SolverConfig,
    rhs_of: impl Fn(&GridFunction) -> GridFunction,
    tail_scale: f64,
) -> Result<FieldTrajectory> {
    cfg.validate()?;
    assert!(tau_end >= 0.0);
    let stepper = IfRk4::new(grid, eq, cfg.dealias_fraction);

    let n_steps = (tau_end / cfg.dt_slow).ceil().max(1.0) as usize;
    let h = tau_end / n_steps as f64;
    let record_stride = (n_steps / 256).max(1);

    let amp_limit = 1e3 * w0.max_abs().max(tail_scale).max(1e-6);

    let mut state = fft_real(&w0.values);
    let mut traj = FieldTrajectory {
        grid,
        carrier: carrier.clone(),
        taus: Vec::new(),
        wiggles: Vec::new(),
        rhs: Vec::new(),
    };

    let record = |tau: f64, state: &[Complex64], traj: &mut FieldTrajectory| -> Result<()> {
        let w = GridFunction::from_values(grid, ifft_real(state.to_vec()));
        if !w.all_finite() || w.max_abs() > amp_limit {
            return Err(Error::StepInstability {
                t: tau,
                amp: w.max_abs(),
                limit: amp_limit,
            });
        }
        let edge = w.values[0].abs().max(w.values[w.len() - 1].abs());
        let tol = cfg.tail_tol * tail_scale.max(1.0);
        if edge > tol {
            return Err(Error::TailMismatch {
                context: "modulation field evolution",
                value: edge,
                tol,
            });
        }
        let dr = rhs_of(&w);
        traj.taus.push(tau);
        traj.wiggles.push(w.values);
        traj.rhs.push(dr.values);
        Ok(())
    };

    record(0.0, &state, &mut traj)?;
    if tau_end == 0.0 {
        return Ok(traj);
    }
    for step in 1..=n_steps {
        stepper.step(&mut state, h);
        if step % record_stride == 0 || step == n_steps {
            record(step as f64 * h, &state, &mut traj)?;
        }
    }
    Ok(traj)
}

/// Evolves a background field under the defocusing mKdV.
pub fn evolve_mkdv(
    f0: &BackgroundField,
    tau_end: f64,
    cfg: &SolverConfig,
) -> Result<FieldTrajectory> {
    f0.validate(cfg.tail_tol)?;
    let carrier = f0.field.carrier.clone();
    let kappa = carrier.clone();
    let frac = cfg.dealias_fraction;
    run_ifrk4(
        f0.grid(),
        carrier.clone(),
        &f0.field.wiggle,
        Equation::Mkdv { kappa },
        tau_end,
        cfg,
        move |w| {
            let f = BackgroundField::new(
                SplitField::new(carrier.clone(), w.clone()),
                0.0,
            );
            mkdv_rhs_with(&f, frac)
        },
        f0.f_plus.abs().max(f0.f_minus.abs()),
    )
}

/// Evolves a localized field under the Gardner equation on the `f₊`
/// background.
pub fn evolve_gardner(
    g0: &LocalizedField,
    f_plus: f64,
    tau_end: f64,
    cfg: &SolverConfig,
) -> Result<FieldTrajectory> {
    g0.validate(cfg.tail_tol * 1.0_f64.max(g0.values.max_abs()))?;
    let frac = cfg.dealias_fraction;
    run_ifrk4(
        g0.grid(),
        TanhProfile::zero(),
        &g0.values,
        Equation::Gardner { f_plus },
        tau_end,
        cfg,
        move |w| gardner_rhs_with(&LocalizedField::new(w.clone(), 0.0), f_plus, frac),
        g0.values.max_abs(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{BackgroundField, LocalizedField};

    const V: f64 = 1.0 / 24.0;

    fn kink_grid() -> UniformGrid {
        UniformGrid::centered(80.0, 1024).unwrap()
    }

    #[test]
    fn kink_profile_examples() {
        // Zero at the moving center.
        assert_eq!(kink_profile(0.3, 0.3 * 2.0, 2.0), 0.0);
        // Amplitude at v = 1/24 is 1/√2.
        let amp = (12.0 * V).sqrt();
        assert!((amp - 1.0 / 2.0f64.sqrt()).abs() < 1e-15);
        // Limit at +∞.
        assert!((kink_profile(V, 1e3, 0.0) - amp).abs() < 1e-12);
    }

    #[test]
    fn mkdv_rhs_of_exact_kink_matches_analytic_time_derivative() {
        let f = BackgroundField::kink(kink_grid(), V);
        let rhs = mkdv_rhs(&f);
        let amp = (12.0 * V).sqrt();
        // ∂_T kink = -v · amp² · sech²(amp·X) at T = 0.
        let mut worst = 0.0f64;
        for (x, got) in kink_grid().points().zip(&rhs.values) {
            let expect = -V * amp * amp / (amp * x).cosh().powi(2);
            worst = worst.max((got - expect).abs());
        }
        assert!(worst < 1e-8, "sup deviation {worst}");
    }

    #[test]
    fn mkdv_rhs_of_constant_is_zero() {
        let f = BackgroundField::constant(kink_grid(), 0.63);
        assert!(mkdv_rhs(&f).max_abs() < 1e-14);
    }

    fn fd1(v: &[f64], i: usize, h: f64) -> f64 {
        let n = v.len();
        let at = |d: i64| v[((i as i64 + d).rem_euclid(n as i64)) as usize];
        (-at(2) + 8.0 * at(1) - 8.0 * at(-1) + at(-2)) / (12.0 * h)
    }

    fn fd3(v: &[f64], i: usize, h: f64) -> f64 {
        let n = v.len();
        let at = |d: i64| v[((i as i64 + d).rem_euclid(n as i64)) as usize];
        (at(-3) - 8.0 * at(-2) + 13.0 * at(-1) - 13.0 * at(1) + 8.0 * at(2) - at(3))
            / (8.0 * h * h * h)
    }

    #[test]
    fn mkdv_rhs_matches_finite_difference_oracle() {
        // f = a + small sine: constant carrier, periodic wiggle.
        let grid = kink_grid();
        let a = 0.4;
        let k = 2.0 * std::f64::consts::PI / grid.length();
        let wiggle = GridFunction::from_fn(grid, |x| 0.05 * (3.0 * k * x).sin());
        let f = BackgroundField::new(
            SplitField::new(TanhProfile::constant(a), wiggle),
            0.0,
        );
        let rhs = mkdv_rhs(&f);

        let total = f.total();
        let cubed: Vec<f64> = total.values.iter().map(|&v| v * v * v).collect();
        let h = grid.dx();
        let mut worst = 0.0f64;
        for i in 0..grid.n_points() {
            let expect = fd3(&total.values, i, h) / 24.0 - fd1(&cubed, i, h) / 12.0;
            worst = worst.max((rhs.values[i] - expect).abs());
        }
        assert!(worst < 1e-6, "sup deviation from FD oracle: {worst}");
    }

    #[test]
    fn gardner_rhs_trivial_and_reduction() {
        let grid = kink_grid();
        let zero = LocalizedField::zero(grid);
        assert_eq!(gardner_rhs(&zero, 0.7).max_abs(), 0.0);

        // f₊ = 0 reduces to the mKdV right-hand side with flipped sign.
        let g = LocalizedField::gaussian(grid, 0.3, 2.0, 1.0);
        let grhs = gardner_rhs(&g, 0.0);
        let f = BackgroundField::new(SplitField::localized(g.values.clone()), 0.0);
        let mrhs = mkdv_rhs(&f);
        let scale = mrhs.max_abs();
        for (a, b) in grhs.values.iter().zip(&mrhs.values) {
            assert!((a + b).abs() < 1e-12 * scale);
        }
    }

    #[test]
    fn gardner_rhs_matches_finite_difference_oracle() {
        let grid = UniformGrid::centered(80.0, 2048).unwrap();
        let g = LocalizedField::gaussian(grid, 0.35, 1.7, -2.0);
        let f_plus = 0.5;
        let rhs = gardner_rhs(&g, f_plus);
        let v = &g.values.values;
        let nl: Vec<f64> = v.iter().map(|&x| x * x * x + 3.0 * f_plus * x * x).collect();
        let h = grid.dx();
        let mut worst = 0.0f64;
        for i in 0..grid.n_points() {
            let expect = fd1(&nl, i, h) / 12.0 - fd3(v, i, h) / 24.0;
            worst = worst.max((rhs.values[i] - expect).abs());
        }
        assert!(worst < 1e-6, "sup deviation from FD oracle: {worst}");
    }

    #[test]
    fn evolve_mkdv_transports_exact_kink() {
        let f0 = BackgroundField::kink(kink_grid(), V);
        let cfg = SolverConfig::default();
        let traj = evolve_mkdv(&f0, 1.0, &cfg).unwrap();
        let f1 = traj.background_at(1.0);
        let total = f1.total();
        let mut worst = 0.0f64;
        for (x, got) in kink_grid().points().zip(&total.values) {
            worst = worst.max((got - kink_profile(V, x, 1.0)).abs());
        }
        assert!(worst < 1e-6, "kink transport sup error {worst}");
    }

    #[test]
    fn evolve_mkdv_fixed_point_constant() {
        let f0 = BackgroundField::constant(kink_grid(), 0.3);
        let traj = evolve_mkdv(&f0, 1.0, &SolverConfig::default()).unwrap();
        let f1 = traj.background_at(1.0);
        assert!(f1.field.wiggle.max_abs() < 1e-12);
    }

    #[test]
    fn evolve_gardner_zero_stays_zero() {
        let grid = kink_grid();
        let traj = evolve_gardner(&LocalizedField::zero(grid), 0.5, 1.0, &SolverConfig::default())
            .unwrap();
        assert!(traj.localized_at(1.0).values.max_abs() < 1e-14);
    }

    #[test]
    fn evolve_gardner_conserves_mass_and_l2() {
        let grid = UniformGrid::centered(80.0, 1024).unwrap();
        let g0 = LocalizedField::gaussian(grid, 0.2, 2.0, 0.0);
        let traj = evolve_gardner(&g0, 0.0, 1.0, &SolverConfig::default()).unwrap();
        let g1 = traj.localized_at(1.0);
        let dx = grid.dx();
        let mass0: f64 = g0.values.values.iter().sum::<f64>() * dx;
        let mass1: f64 = g1.values.values.iter().sum::<f64>() * dx;
        let l20: f64 = g0.values.values.iter().map(|v| v * v).sum::<f64>() * dx;
        let l21: f64 = g1.values.values.iter().map(|v| v * v).sum::<f64>() * dx;
        assert!(
            (mass1 - mass0).abs() < 1e-8 * mass0.abs(),
            "mass drift {} vs {}",
            mass0,
            mass1
        );
        assert!(
            (l21 - l20).abs() < 1e-8 * l20,
            "L² drift {} vs {}",
            l20,
            l21
        );
    }

    #[test]
    fn evolve_gardner_pure_cubic_is_odd_in_the_field() {
        // With f₊ = 0 the nonlinearity is purely cubic, so the flow commutes
        // with the sign flip g ↦ -g. The quadratic background term would
        // break this.
        let grid = UniformGrid::centered(80.0, 1024).unwrap();
        let g0 = LocalizedField::gaussian(grid, 0.25, 2.0, 1.0);
        let g0_neg = LocalizedField::new(g0.values.scaled(-1.0), 0.0);
        let cfg = SolverConfig::default();
        let a = evolve_gardner(&g0, 0.0, 1.0, &cfg).unwrap().localized_at(1.0);
        let b = evolve_gardner(&g0_neg, 0.0, 1.0, &cfg)
            .unwrap()
            .localized_at(1.0);
        let mut worst = 0.0f64;
        for (x, y) in a.values.values.iter().zip(&b.values.values) {
            worst = worst.max((x + y).abs());
        }
        assert!(worst < 1e-10, "sign-flip symmetry broken by {worst}");
    }

    #[test]
    fn gardner_soliton_is_a_traveling_wave_of_the_rhs() {
        let grid = UniformGrid::centered(80.0, 1024).unwrap();
        let f_plus = 1.0 / 2.0f64.sqrt();
        let speed = f_plus * f_plus / 12.0;
        let g = LocalizedField::gardner_soliton(grid, f_plus, speed, 0.0).unwrap();
        // ∂₂ g = -speed · ∂₁ g for the traveling wave.
        let rhs = gardner_rhs(&g, f_plus);
        let d1 = spectral::spectral_derivative(&g.values, 1);
        let scale = rhs.max_abs();
        let mut worst = 0.0f64;
        for (a, b) in rhs.values.iter().zip(&d1.values) {
            worst = worst.max((a + speed * b).abs());
        }
        assert!(worst < 1e-9 * scale.max(1e-12), "ODE residual {worst}");
    }

    #[test]
    fn ifrk4_self_convergence_is_fourth_order() {
        // Error against a dt/8 reference should drop ~16x per dt halving.
        let grid = UniformGrid::centered(80.0, 512).unwrap();
        let f0 = BackgroundField::kink(grid, V);
        let tau = 0.5;
        let run = |dt: f64| {
            let cfg = SolverConfig {
                dt_slow: dt,
                ..SolverConfig::default()
            };
            evolve_mkdv(&f0, tau, &cfg)
                .unwrap()
                .background_at(tau)
                .field
                .wiggle
        };
        let reference = run(0.04 / 8.0);
        let err = |dt: f64| {
            let w = run(dt);
            w.values
                .iter()
                .zip(&reference.values)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
        };
        let e1 = err(0.04);
        let e2 = err(0.02);
        let ratio = e1 / e2;
        assert!(
            (8.0..32.0).contains(&ratio),
            "expected ~16x error reduction, got {ratio} (e1={e1:.3e}, e2={e2:.3e})"
        );
    }
}
