//! The counter-propagating approximation and its corrected velocity fields.
//!
//! Strain is approximated by `u_n ≈ εf(ε(n+t), ε³t) + εg(ε(n-ct), ε³t)
//! + ε³φ(εn, εt)`; velocity by `q_n ≈ εF + εG + ε³Φ - εF₋` where `F`, `G`,
//! `Φ` are chosen so that one-site differences reproduce the time derivative
//! of the strain ansatz through order ε⁵:
//!
//! ```text
//! εF(·+ε) - εF(·) = ε²∂₁f + ε⁴∂₂f + O(ε⁶)
//! εG(·+ε) - εG(·) = -ε²c∂₁g + ε⁴∂₂g + O(ε⁶)
//! ε³Φ(·+ε) - ε³Φ(·) = ε⁴ψ + O(ε⁶)
//! ```
//!
//! The wave speed of the right-mover is `c = 1 - ε²f₊²/4`: the `f₊`
//! background shifts the state `g` rides on, which renormalizes its speed.

use crate::error::{Error, Result};
use crate::fields::{BackgroundField, LocalizedField, SplitField};
use crate::grid::{GridFunction, LatticeSeq};
use crate::interaction::PhiPsiField;
use crate::lattice::LatticeState;
use crate::solvers::{gardner_rhs, mkdv_rhs};
use crate::spectral::spectral_derivative;

/// `c = 1 - ε²f₊²/4`.
pub fn wave_speed(eps: f64, f_plus: f64) -> f64 {
    assert!(eps > 0.0 && eps < 1.0, "eps must lie in (0,1)");
    1.0 - eps * eps * f_plus * f_plus / 4.0
}

/// `F = f - (ε/2)∂₁f + (ε²/8)∂₁²f - (ε²/12)f³ - (ε³/48)∂₁³f + (ε³/8)f²∂₁f`.
///
/// Carrier terms stay closed-form; every transformed combination decays.
pub fn f_velocity_field(f: &BackgroundField, eps: f64) -> BackgroundField {
    let kappa = &f.field.carrier;
    let w = &f.field.wiggle;

    let k1 = kappa.derivative();
    let carrier = kappa
        .sub(&k1.scaled(eps / 2.0))
        .add(&kappa.derivative_n(2).scaled(eps * eps / 8.0))
        .sub(&kappa.cube().scaled(eps * eps / 12.0))
        .sub(&kappa.derivative_n(3).scaled(eps * eps * eps / 48.0))
        .add(&kappa.mul(kappa).mul(&k1).scaled(eps * eps * eps / 8.0));

    let ks = f.field.carrier_samples();
    let k1s = GridFunction::from_fn(f.grid(), |x| k1.eval(x));
    let w1 = spectral_derivative(w, 1);
    let w2 = spectral_derivative(w, 2);
    let w3 = spectral_derivative(w, 3);

    let mut wig = vec![0.0; w.len()];
    for i in 0..wig.len() {
        let (kv, k1v) = (ks.values[i], k1s.values[i]);
        let (wv, w1v) = (w.values[i], w1.values[i]);
        let cubic_w = 3.0 * kv * kv * wv + 3.0 * kv * wv * wv + wv * wv * wv;
        let ftot = kv + wv;
        let f1tot = k1v + w1v;
        let prod_w = ftot * ftot * f1tot - kv * kv * k1v;
        wig[i] = wv - eps / 2.0 * w1v + eps * eps / 8.0 * w2.values[i]
            - eps * eps / 12.0 * cubic_w
            - eps * eps * eps / 48.0 * w3.values[i]
            + eps * eps * eps / 8.0 * prod_w;
    }
    BackgroundField::new(
        SplitField::new(carrier, GridFunction::from_values(f.grid(), wig)),
        f.tau,
    )
}

/// `∂₂F` by the chain rule, with `∂₂f` taken from the mKdV right-hand side.
pub fn f_velocity_time_derivative(f: &BackgroundField, eps: f64) -> GridFunction {
    let fdot = mkdv_rhs(f);
    let d1 = spectral_derivative(&fdot, 1);
    let d2 = spectral_derivative(&fdot, 2);
    let d3 = spectral_derivative(&fdot, 3);
    let ftot = f.total();
    let f1tot = f.field.derivative(1).total();
    let mut out = vec![0.0; fdot.len()];
    for i in 0..out.len() {
        let (fd, fv, f1v) = (fdot.values[i], ftot.values[i], f1tot.values[i]);
        out[i] = fd - eps / 2.0 * d1.values[i] + eps * eps / 8.0 * d2.values[i]
            - eps * eps / 4.0 * fv * fv * fd
            - eps * eps * eps / 48.0 * d3.values[i]
            + eps * eps * eps / 8.0 * (2.0 * fv * f1v * fd + fv * fv * d1.values[i]);
    }
    GridFunction::from_values(f.grid(), out)
}

/// `G = -g + (ε/2)∂₁g + (ε²f₊²/4)g + (ε²/12)(g³+3f₊g²) - (ε²/8)∂₁²g
///      + (ε³/48)∂₁³g - (ε³/24)∂₁(g³+3f₊g²) - (ε³f₊²/8)∂₁g`.
pub fn g_velocity_field(g: &LocalizedField, f_plus: f64, eps: f64) -> LocalizedField {
    let v = &g.values;
    let g1 = spectral_derivative(v, 1);
    let g2 = spectral_derivative(v, 2);
    let g3 = spectral_derivative(v, 3);
    let cub = v.map(|x| x * x * x + 3.0 * f_plus * x * x);
    let dcub = spectral_derivative(&cub, 1);
    let fp2 = f_plus * f_plus;
    let mut out = vec![0.0; v.len()];
    for i in 0..out.len() {
        out[i] = -v.values[i] + eps / 2.0 * g1.values[i] + eps * eps * fp2 / 4.0 * v.values[i]
            + eps * eps / 12.0 * cub.values[i]
            - eps * eps / 8.0 * g2.values[i]
            + eps * eps * eps / 48.0 * g3.values[i]
            - eps * eps * eps / 24.0 * dcub.values[i]
            - eps * eps * eps * fp2 / 8.0 * g1.values[i];
    }
    LocalizedField::new(GridFunction::from_values(v.grid, out), g.tau)
}

/// `∂₂G` by the chain rule, with `∂₂g` from the Gardner right-hand side.
pub fn g_velocity_time_derivative(g: &LocalizedField, f_plus: f64, eps: f64) -> GridFunction {
    let gdot = gardner_rhs(g, f_plus);
    let d1 = spectral_derivative(&gdot, 1);
    let d2 = spectral_derivative(&gdot, 2);
    let d3 = spectral_derivative(&gdot, 3);
    let cub_dot = g
        .values
        .zip_with(&gdot, |gv, gd| (3.0 * gv * gv + 6.0 * f_plus * gv) * gd);
    let dcub_dot = spectral_derivative(&cub_dot, 1);
    let fp2 = f_plus * f_plus;
    let mut out = vec![0.0; gdot.len()];
    for i in 0..out.len() {
        out[i] = -gdot.values[i] + eps / 2.0 * d1.values[i] + eps * eps * fp2 / 4.0 * gdot.values[i]
            + eps * eps / 12.0 * cub_dot.values[i]
            - eps * eps / 8.0 * d2.values[i]
            + eps * eps * eps / 48.0 * d3.values[i]
            - eps * eps * eps / 24.0 * dcub_dot.values[i]
            - eps * eps * eps * fp2 / 8.0 * d1.values[i];
    }
    GridFunction::from_values(gdot.grid, out)
}

/// `Φ = ∂₁⁻¹ψ - (ε/2)ψ` and `∂₂Φ` from the differentiated quadrature.
pub fn phi_velocity_field(phi: &PhiPsiField, eps: f64) -> (GridFunction, GridFunction) {
    let cap = phi.inv_d_psi.zip_with(&phi.psi, |a, b| a - eps / 2.0 * b);
    let cap_t = phi
        .inv_d_psi_t
        .zip_with(&phi.psi_t, |a, b| a - eps / 2.0 * b);
    (cap, cap_t)
}

/// One consistent snapshot of every ansatz ingredient at lattice time `t`:
/// `f`, `g` at slow time `ε³t`, the interaction pair at `εt`, the wave speed
/// and the corrected fields.
#[derive(Debug, Clone)]
pub struct AnsatzFields {
    pub eps: f64,
    pub c: f64,
    pub t: f64,
    pub f: BackgroundField,
    pub g: LocalizedField,
    pub phi: PhiPsiField,
    pub f_cap: BackgroundField,
    pub g_cap: LocalizedField,
    pub cap_f_plus: f64,
    pub cap_f_minus: f64,
}

impl AnsatzFields {
    pub fn new(
        eps: f64,
        t: f64,
        f: BackgroundField,
        g: LocalizedField,
        phi: PhiPsiField,
    ) -> Result<Self> {
        let c = wave_speed(eps, f.f_plus);
        let f_cap = f_velocity_field(&f, eps);
        let g_cap = g_velocity_field(&g, f.f_plus, eps);
        let cap_f_plus = f.f_plus - eps * eps / 12.0 * f.f_plus.powi(3);
        let cap_f_minus = f.f_minus - eps * eps / 12.0 * f.f_minus.powi(3);
        if (f_cap.f_plus - cap_f_plus).abs() > 1e-12 || (f_cap.f_minus - cap_f_minus).abs() > 1e-12
        {
            return Err(Error::Config(format!(
                "velocity-field limits inconsistent: {} vs {}",
                f_cap.f_plus, cap_f_plus
            )));
        }
        Ok(AnsatzFields {
            eps,
            c,
            t,
            f,
            g,
            phi,
            f_cap,
            g_cap,
            cap_f_plus,
            cap_f_minus,
        })
    }

    /// Snapshot with `g` (and hence `φ`) absent: the single-wave ansatz.
    pub fn kink_only(
        eps: f64,
        t: f64,
        f: BackgroundField,
        phi_grid: crate::grid::UniformGrid,
    ) -> Result<Self> {
        let g = LocalizedField::zero(f.grid());
        let phi = PhiPsiField::zero(phi_grid, eps * t);
        Self::new(eps, t, f, g, phi)
    }

    fn validate(&self, t: f64) -> Result<()> {
        let e3t = self.eps.powi(3) * t;
        if (self.f.tau - e3t).abs() > 1e-6 * (1.0 + e3t.abs()) {
            return Err(Error::Config(format!(
                "snapshot slow time {} inconsistent with lattice time {t}",
                self.f.tau
            )));
        }
        Ok(())
    }

    /// Strain ansatz `εf(ε(n+t)) + εg(ε(n-ct)) + ε³φ(εn)` on the window.
    pub fn assemble_u(&self, t: f64, n_min: i64, n_max: i64) -> Result<LatticeSeq> {
        self.validate(t)?;
        let e = self.eps;
        let fs = self.f.field.sample(e, e * t, n_min, n_max);
        let gs = self.g.as_split().sample(e, -e * self.c * t, n_min, n_max);
        let ps = SplitField::localized(self.phi.phi.clone()).sample(e, 0.0, n_min, n_max);
        let mut out = LatticeSeq::zeros(n_min, n_max);
        for j in 0..out.len() {
            out.values[j] = e * fs.values[j] + e * gs.values[j] + e.powi(3) * ps.values[j];
        }
        Ok(out)
    }

    /// Velocity ansatz `εF(ε(n+t)) + εG(ε(n-ct)) + ε³Φ(εn) - εF₋`.
    pub fn assemble_q(&self, t: f64, n_min: i64, n_max: i64) -> Result<LatticeSeq> {
        self.validate(t)?;
        let e = self.eps;
        let fs = self.f_cap.field.sample(e, e * t, n_min, n_max);
        let gs = self
            .g_cap
            .as_split()
            .sample(e, -e * self.c * t, n_min, n_max);
        let (cap_phi, _) = phi_velocity_field(&self.phi, e);
        let ps = SplitField::localized(cap_phi).sample(e, 0.0, n_min, n_max);
        let mut out = LatticeSeq::zeros(n_min, n_max);
        for j in 0..out.len() {
            out.values[j] = e * fs.values[j] + e * gs.values[j] + e.powi(3) * ps.values[j]
                - e * self.cap_f_minus;
        }
        Ok(out)
    }

    /// Exact time derivative of the strain ansatz:
    /// `ε²∂₁f + ε⁴∂₂f - ε²c∂₁g + ε⁴∂₂g + ε⁴ψ` at the shifted arguments.
    pub fn assemble_udot(&self, t: f64, n_min: i64, n_max: i64) -> Result<LatticeSeq> {
        self.validate(t)?;
        let e = self.eps;
        let e2 = e * e;
        let e4 = e2 * e2;
        let d1f = self.f.field.derivative(1).sample(e, e * t, n_min, n_max);
        let d2f = SplitField::localized(mkdv_rhs(&self.f)).sample(e, e * t, n_min, n_max);
        let gsh = -e * self.c * t;
        let d1g = SplitField::localized(spectral_derivative(&self.g.values, 1))
            .sample(e, gsh, n_min, n_max);
        let d2g = SplitField::localized(gardner_rhs(&self.g, self.f.f_plus))
            .sample(e, gsh, n_min, n_max);
        let psi = SplitField::localized(self.phi.psi.clone()).sample(e, 0.0, n_min, n_max);
        let mut out = LatticeSeq::zeros(n_min, n_max);
        for j in 0..out.len() {
            out.values[j] = e2 * d1f.values[j] + e4 * d2f.values[j]
                - e2 * self.c * d1g.values[j]
                + e4 * d2g.values[j]
                + e4 * psi.values[j];
        }
        Ok(out)
    }

    /// The two-wave part `εf(ε(n+t)) + εg(ε(n-ct))` alone: the comparison
    /// field of the long-time theorem (the ε³φ term is absorbed into its
    /// constant).
    pub fn assemble_u_leading(&self, t: f64, n_min: i64, n_max: i64) -> Result<LatticeSeq> {
        self.validate(t)?;
        let e = self.eps;
        let fs = self.f.field.sample(e, e * t, n_min, n_max);
        let gs = self.g.as_split().sample(e, -e * self.c * t, n_min, n_max);
        let mut out = LatticeSeq::zeros(n_min, n_max);
        for j in 0..out.len() {
            out.values[j] = e * fs.values[j] + e * gs.values[j];
        }
        Ok(out)
    }

    /// Leading-order velocity comparison field of the long-time theorem:
    /// `ε²∂₁f - ε²∂₁g` at the shifted arguments.
    pub fn assemble_udot_leading(&self, t: f64, n_min: i64, n_max: i64) -> Result<LatticeSeq> {
        self.validate(t)?;
        let e = self.eps;
        let e2 = e * e;
        let d1f = self.f.field.derivative(1).sample(e, e * t, n_min, n_max);
        let d1g = SplitField::localized(spectral_derivative(&self.g.values, 1)).sample(
            e,
            -e * self.c * t,
            n_min,
            n_max,
        );
        let mut out = LatticeSeq::zeros(n_min, n_max);
        for j in 0..out.len() {
            out.values[j] = e2 * d1f.values[j] - e2 * d1g.values[j];
        }
        Ok(out)
    }
}

/// Per-site cap on the compatibility correction: beyond this the finite
/// window genuinely violates the zero-sum condition.
fn correction_cap(eps: f64) -> f64 {
    eps.powi(6)
}

/// Builds lattice initial data from the ansatz at `t = 0`.
///
/// `u(0)` is the sampled ansatz (so `U(0) = 0` exactly); `u̇(0)` is the exact
/// ansatz time derivative, corrected by one additive constant so that
/// `Σ u̇_n(0) = ε(F₊ - F₋)` holds to machine precision (the compatibility
/// condition); `q(0)` is its left-to-right prefix sum, which keeps `Q(0)`
/// square-summable. Returns the state and the per-site correction applied.
pub fn initial_lattice_state(
    a: &AnsatzFields,
    n_min: i64,
    n_max: i64,
) -> Result<(LatticeState, f64)> {
    assert!(
        a.t == 0.0 && a.phi.time == 0.0,
        "initial data must be built from the t = 0 snapshot"
    );
    let u0 = a.assemble_u(0.0, n_min, n_max)?;
    let mut udot = a.assemble_udot(0.0, n_min, n_max)?;

    let target = a.eps * (a.cap_f_plus - a.cap_f_minus);
    let actual: f64 = udot.values.iter().sum();
    let delta = (target - actual) / udot.len() as f64;
    if delta.abs() > correction_cap(a.eps) {
        return Err(Error::SumMismatch {
            sum: (target - actual).abs(),
            tol: correction_cap(a.eps) * udot.len() as f64,
        });
    }
    for v in udot.values.iter_mut() {
        *v += delta;
    }

    // q_n = Σ_{k < n} u̇_k with the free constant fixed to zero at the left
    // edge (the true sum from -∞ is exponentially small there).
    let mut q = LatticeSeq::zeros(n_min, n_max);
    let mut acc = 0.0;
    for j in 0..q.len() {
        q.values[j] = acc;
        acc += udot.values[j];
    }

    Ok((
        LatticeState {
            u: u0,
            q,
            t: 0.0,
        },
        delta,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::UniformGrid;
    use crate::norms::l2_norm;
    use crate::slope::fit_log_slope;
    use crate::spectral::antiderivative;

    const V: f64 = 1.0 / 24.0;

    fn grid_for(eps: f64) -> UniformGrid {
        // dx = eps/5 so lattice sampling is stride-exact; L >= 80.
        let dx = eps / 5.0;
        let mut n = 16usize;
        while (n as f64) * dx < 80.0 {
            n *= 2;
        }
        UniformGrid::centered(n as f64 * dx, n).unwrap()
    }

    #[test]
    fn wave_speed_examples() {
        assert_eq!(wave_speed(0.3, 0.0), 1.0);
        assert!((wave_speed(1e-9, 2.0) - 1.0).abs() < 1e-15);
        let c = wave_speed(0.1, 1.0 / 2.0f64.sqrt());
        assert!((c - 0.99875).abs() < 1e-15);
        // Invariant under f₊ ↦ -f₊.
        assert_eq!(wave_speed(0.17, 0.6), wave_speed(0.17, -0.6));
    }

    #[test]
    fn velocity_field_of_constant_background() {
        let eps = 0.1;
        let grid = grid_for(eps);
        let a = 0.8;
        let f = BackgroundField::constant(grid, a);
        let cap = f_velocity_field(&f, eps);
        let expect = a - eps * eps / 12.0 * a * a * a;
        let total = cap.total();
        for v in &total.values {
            assert!((v - expect).abs() < 1e-13);
        }
        assert!((cap.f_plus - expect).abs() < 1e-15);
        assert!((cap.f_minus - expect).abs() < 1e-15);
    }

    #[test]
    fn velocity_fields_of_zero_are_zero() {
        let grid = grid_for(0.1);
        let f = BackgroundField::constant(grid, 0.0);
        assert!(f_velocity_field(&f, 0.1).total().max_abs() < 1e-15);
        let g = LocalizedField::zero(grid);
        assert!(g_velocity_field(&g, 0.5, 0.1).values.max_abs() < 1e-15);
        assert!(g_velocity_time_derivative(&g, 0.5, 0.1).max_abs() < 1e-15);
    }

    #[test]
    fn velocity_fields_approach_leading_order_as_eps_vanishes() {
        let grid = grid_for(0.1);
        let f = BackgroundField::kink(grid, V);
        let g = LocalizedField::gaussian(grid, 0.3, 2.0, 0.0);
        let dev_f = |eps: f64| {
            f_velocity_field(&f, eps)
                .total()
                .zip_with(&f.total(), |a, b| a - b)
                .max_abs()
        };
        let dev_g = |eps: f64| {
            g_velocity_field(&g, 0.7, eps)
                .values
                .zip_with(&g.values, |a, b| a + b)
                .max_abs()
        };
        // O(ε): halving ε roughly halves the deviation.
        assert!(dev_f(0.05) < 0.6 * dev_f(0.1));
        assert!(dev_g(0.05) < 0.6 * dev_g(0.1));
    }

    /// Sup over a site window of the F defining-identity remainder at one ε.
    fn f_identity_remainder(eps: f64) -> f64 {
        let grid = grid_for(eps);
        let f = BackgroundField::kink(grid, V);
        let cap = f_velocity_field(&f, eps);
        let half = (30.0 / eps) as i64;
        let t = 0.37; // arbitrary lattice time; fields are at slow time 0
        let cap_here = cap.field.sample(eps, eps * t, -half, half);
        let cap_next = cap.field.sample(eps, eps * (t + 1.0), -half, half);
        let d1f = f.field.derivative(1).sample(eps, eps * t, -half, half);
        let d2f = SplitField::localized(mkdv_rhs(&f)).sample(eps, eps * t, -half, half);
        let mut worst = 0.0f64;
        for j in 0..cap_here.len() {
            let lhs = eps * (cap_next.values[j] - cap_here.values[j]);
            let rhs = eps * eps * d1f.values[j] + eps.powi(4) * d2f.values[j];
            worst = worst.max((lhs - rhs).abs());
        }
        worst
    }

    /// Same for the G identity (note the -ε²c∂₁g sign).
    fn g_identity_remainder(eps: f64) -> f64 {
        let grid = grid_for(eps);
        let f_plus = (12.0 * V).sqrt();
        let c = wave_speed(eps, f_plus);
        let g = LocalizedField::gaussian(grid, 0.35, 2.0, 0.0);
        let cap = g_velocity_field(&g, f_plus, eps);
        let half = (30.0 / eps) as i64;
        let t = 0.37;
        let shift = -eps * c * t;
        let here = cap.as_split().sample(eps, shift, -half, half);
        let next = cap.as_split().sample(eps, shift + eps, -half, half);
        let d1g =
            SplitField::localized(spectral_derivative(&g.values, 1)).sample(eps, shift, -half, half);
        let d2g = SplitField::localized(gardner_rhs(&g, f_plus)).sample(eps, shift, -half, half);
        let mut worst = 0.0f64;
        for j in 0..here.len() {
            let lhs = eps * (next.values[j] - here.values[j]);
            let rhs = -eps * eps * c * d1g.values[j] + eps.powi(4) * d2g.values[j];
            worst = worst.max((lhs - rhs).abs());
        }
        worst
    }

    /// Φ identity with a synthetic smooth ψ (any mean-zero profile works).
    fn phi_identity_remainder(eps: f64) -> f64 {
        let grid = grid_for(eps);
        // ψ = derivative of a Gaussian: smooth, decaying, mean-zero.
        let psi = spectral_derivative(
            &GridFunction::from_fn(grid, |x| 0.4 * (-x * x / 8.0).exp()),
            1,
        );
        let inv = antiderivative(&psi).unwrap();
        let cap = inv.zip_with(&psi, |a, b| a - eps / 2.0 * b);
        let half = (30.0 / eps) as i64;
        let here = SplitField::localized(cap.clone()).sample(eps, 0.0, -half, half);
        let next = SplitField::localized(cap).sample(eps, eps, -half, half);
        let psi_s = SplitField::localized(psi).sample(eps, 0.0, -half, half);
        let mut worst = 0.0f64;
        for j in 0..here.len() {
            let lhs = eps.powi(3) * (next.values[j] - here.values[j]);
            let rhs = eps.powi(4) * psi_s.values[j];
            worst = worst.max((lhs - rhs).abs());
        }
        worst
    }

    #[test]
    fn defining_identities_have_sixth_order_remainders() {
        let eps_list = [0.2, 0.1, 0.05];
        for (name, rem) in [
            ("F", &f_identity_remainder as &dyn Fn(f64) -> f64),
            ("G", &g_identity_remainder),
            ("Phi", &phi_identity_remainder),
        ] {
            let pts: Vec<(f64, f64)> = eps_list.iter().map(|&e| (e, rem(e))).collect();
            let fit = fit_log_slope(&pts).unwrap();
            assert!(
                (fit.slope - 6.0).abs() < 0.3,
                "{name} identity remainder slope {} (points {:?})",
                fit.slope,
                pts
            );
        }
    }

    fn snapshot(eps: f64, with_g: bool) -> AnsatzFields {
        let grid = grid_for(eps);
        let f = BackgroundField::kink(grid, V);
        let g = if with_g {
            LocalizedField::gaussian(grid, 0.35, 2.0, 0.0)
        } else {
            LocalizedField::zero(grid)
        };
        let phi = PhiPsiField::zero(grid, 0.0);
        AnsatzFields::new(eps, 0.0, f, g, phi).unwrap()
    }

    #[test]
    fn assemble_u_matches_displayed_lattice_kink() {
        let eps = 0.1;
        let a = snapshot(eps, false);
        let u = a.assemble_u(0.0, -400, 400).unwrap();
        let amp = eps / 2.0f64.sqrt();
        for j in 0..u.len() {
            let n = u.site(j) as f64;
            let expect = amp * (amp * n).tanh();
            assert!(
                (u.values[j] - expect).abs() < 1e-10,
                "site {n}: {} vs {expect}",
                u.values[j]
            );
        }
    }

    #[test]
    fn assemble_u_zero_fields() {
        let eps = 0.1;
        let grid = grid_for(eps);
        let f = BackgroundField::constant(grid, 0.0);
        let a = AnsatzFields::new(eps, 0.0, f, LocalizedField::zero(grid), PhiPsiField::zero(grid, 0.0))
            .unwrap();
        assert!(a.assemble_u(0.0, -50, 50).unwrap().max_abs() == 0.0);
        assert!(a.assemble_q(0.0, -50, 50).unwrap().max_abs() == 0.0);
    }

    #[test]
    fn assemble_q_has_the_right_limits() {
        let eps = 0.1;
        let a = snapshot(eps, false);
        let q = a.assemble_q(0.0, -2000, 2000).unwrap();
        // Left limit 0 after the -εF₋ subtraction; right limit ε(F₊-F₋).
        assert!(q.values[0].abs() < 1e-8, "left edge {}", q.values[0]);
        let jump = eps * (a.cap_f_plus - a.cap_f_minus);
        let right = q.values[q.len() - 1];
        assert!((right - jump).abs() < 1e-8, "right edge {right} vs {jump}");
    }

    #[test]
    fn initial_state_has_exactly_zero_u_error() {
        let eps = 0.1;
        let a = snapshot(eps, true);
        let (state, correction) = initial_lattice_state(&a, -900, 900).unwrap();
        let u_ansatz = a.assemble_u(0.0, -900, 900).unwrap();
        assert_eq!(state.u, u_ansatz);
        assert!(correction.abs() < eps.powi(6));
        // Compatibility: Σ u̇ = ε(F₊ - F₋) to 1e-10 after correction.
        let udot = a.assemble_udot(0.0, -900, 900).unwrap();
        let total: f64 = udot.values.iter().map(|v| v + correction).sum();
        let target = eps * (a.cap_f_plus - a.cap_f_minus);
        assert!((total - target).abs() < 1e-10);
    }

    #[test]
    fn initial_q_error_scales_like_eps_five_halves() {
        let mut pts = Vec::new();
        for &eps in &[0.2, 0.14, 0.1] {
            let a = snapshot(eps, false);
            let half = (60.0 / eps) as i64;
            let (state, _) = initial_lattice_state(&a, -half, half).unwrap();
            let q_ansatz = a.assemble_q(0.0, -half, half).unwrap();
            let q_err = l2_norm(&state.q.sub(&q_ansatz));
            pts.push((eps, q_err));
        }
        let fit = fit_log_slope(&pts).unwrap();
        assert!(
            fit.slope >= 2.3,
            "Q(0) slope {} (points {:?})",
            fit.slope,
            fit.points
        );
    }

    #[test]
    fn zero_fields_give_zero_initial_state() {
        let eps = 0.1;
        let grid = grid_for(eps);
        let f = BackgroundField::constant(grid, 0.0);
        let a =
            AnsatzFields::new(eps, 0.0, f, LocalizedField::zero(grid), PhiPsiField::zero(grid, 0.0))
                .unwrap();
        let (state, delta) = initial_lattice_state(&a, -100, 100).unwrap();
        assert!(state.u.max_abs() == 0.0 && state.q.max_abs() == 0.0);
        assert_eq!(delta, 0.0);
    }
}
