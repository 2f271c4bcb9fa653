//! The FPUT lattice window: first-order dynamics, Hamiltonian, residual
//! sequences, and the error energy functional.
//!
//! The first-order system is `u̇_n = q_{n+1} - q_n`,
//! `q̇_n = V'(u_n) - V'(u_{n-1})` with `V(x) = x²/2 - x⁴/24`. The infinite
//! lattice is truncated to a window with clamped ghost cells holding the
//! background values of the ansatz; a boundary-contamination gauge watches
//! the outer 5% of the window so the truncation stays honest.

use crate::ansatz::{
    f_velocity_time_derivative, g_velocity_time_derivative, phi_velocity_field, AnsatzFields,
};
use crate::error::{Error, Result};
use crate::fields::SplitField;
use crate::grid::LatticeSeq;
use crate::norms::l2_norm;
use crate::solvers::{gardner_rhs, mkdv_rhs};
use crate::spectral::spectral_derivative;
use std::io::Write;

/// Interaction potential `V(x) = x²/2 - x⁴/24`.
pub fn potential(x: f64) -> f64 {
    x * x / 2.0 - x * x * x * x / 24.0
}

/// `V'(x) = x - x³/6`.
pub fn potential_prime(x: f64) -> f64 {
    x - x * x * x / 6.0
}

/// Strain/velocity pair over a finite site window at time `t`.
#[derive(Debug, Clone)]
pub struct LatticeState {
    pub u: LatticeSeq,
    pub q: LatticeSeq,
    pub t: f64,
}

impl LatticeState {
    pub fn n_min(&self) -> i64 {
        self.u.n_min
    }

    pub fn n_max(&self) -> i64 {
        self.u.n_max()
    }

    pub fn validate(&self) -> Result<()> {
        if self.u.n_min != self.q.n_min || self.u.len() != self.q.len() {
            return Err(Error::Config("u/q windows differ".into()));
        }
        if !self.u.all_finite() || !self.q.all_finite() {
            return Err(Error::StepInstability {
                t: self.t,
                amp: f64::NAN,
                limit: f64::INFINITY,
            });
        }
        Ok(())
    }

    /// `u̇_n = q_{n+1} - q_n`, using the right ghost at the window edge.
    pub fn udot(&self, ghosts: &GhostValues) -> LatticeSeq {
        let n = self.q.len();
        let mut out = LatticeSeq::zeros(self.n_min(), self.n_max());
        for j in 0..n {
            let next = if j + 1 < n {
                self.q.values[j + 1]
            } else {
                ghosts.q_right
            };
            out.values[j] = next - self.q.values[j];
        }
        out
    }
}

/// Frozen boundary values outside the window (the background the ansatz
/// approaches at ±∞).
#[derive(Debug, Clone, Copy)]
pub struct GhostValues {
    pub u_left: f64,
    pub u_right: f64,
    pub q_left: f64,
    pub q_right: f64,
}

impl GhostValues {
    pub fn zero() -> Self {
        GhostValues {
            u_left: 0.0,
            u_right: 0.0,
            q_left: 0.0,
            q_right: 0.0,
        }
    }

    /// Background limits of the ansatz: `u → εf∓`, `q → 0` on the left and
    /// `ε(F₊ - F₋)` on the right.
    pub fn from_ansatz(a: &AnsatzFields) -> Self {
        GhostValues {
            u_left: a.eps * a.f.f_minus,
            u_right: a.eps * a.f.f_plus,
            q_left: 0.0,
            q_right: a.eps * (a.cap_f_plus - a.cap_f_minus),
        }
    }

    /// Energy flux through the clamped boundaries,
    /// `V'(u_right)·q_right - q_left·V'(u_left)`; the windowed Hamiltonian
    /// grows at exactly this rate when the edges sit at their backgrounds.
    pub fn energy_flux(&self) -> f64 {
        potential_prime(self.u_right) * self.q_right - self.q_left * potential_prime(self.u_left)
    }
}

/// Right-hand side of the first-order system with clamped ghosts.
pub fn lattice_rhs(s: &LatticeState, ghosts: &GhostValues) -> (LatticeSeq, LatticeSeq) {
    let n = s.u.len();
    let mut du = LatticeSeq::zeros(s.n_min(), s.n_max());
    let mut dq = LatticeSeq::zeros(s.n_min(), s.n_max());
    rhs_into(
        &s.u.values,
        &s.q.values,
        ghosts,
        &mut du.values,
        &mut dq.values,
        &mut vec![0.0; n],
    );
    (du, dq)
}

fn rhs_into(
    u: &[f64],
    q: &[f64],
    ghosts: &GhostValues,
    du: &mut [f64],
    dq: &mut [f64],
    vp: &mut [f64],
) {
    let n = u.len();
    for i in 0..n {
        vp[i] = potential_prime(u[i]);
    }
    for i in 0..n - 1 {
        du[i] = q[i + 1] - q[i];
    }
    du[n - 1] = ghosts.q_right - q[n - 1];
    dq[0] = vp[0] - potential_prime(ghosts.u_left);
    for i in 1..n {
        dq[i] = vp[i] - vp[i - 1];
    }
}

/// Windowed Hamiltonian `Σ q²/2 + V(u)` with the frozen step background
/// subtracted termwise, so the value is O(1) and comparable across times.
pub fn hamiltonian(s: &LatticeState, ghosts: &GhostValues) -> f64 {
    let mut acc = 0.0;
    for j in 0..s.u.len() {
        let n = s.u.site(j);
        let (u_bg, q_bg) = if n < 0 {
            (ghosts.u_left, ghosts.q_left)
        } else {
            (ghosts.u_right, ghosts.q_right)
        };
        let q = s.q.values[j];
        acc += q * q / 2.0 - q_bg * q_bg / 2.0 + potential(s.u.values[j]) - potential(u_bg);
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrator {
    /// Classical RK4, order 4: the default for scaling studies.
    Rk4,
    /// Strang-split symplectic update, order 2: for very long runs where
    /// energy drift matters more than per-step order.
    Strang,
}

#[derive(Debug, Clone)]
pub struct LatticeRunConfig {
    pub dt: f64,
    pub integrator: Integrator,
    /// Must be multiples of `dt` (within 1e-9), strictly increasing.
    pub checkpoint_times: Vec<f64>,
    /// Contamination gauge limit factor over the initial gauge.
    pub gauge_factor: f64,
}

impl LatticeRunConfig {
    pub fn new(dt: f64, integrator: Integrator, checkpoint_times: Vec<f64>) -> Self {
        LatticeRunConfig {
            dt,
            integrator,
            checkpoint_times,
            gauge_factor: 10.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LatticeCheckpoint {
    pub state: LatticeState,
    /// Max deviation of `u` from its background over the outer 5% of the
    /// window (each side).
    pub gauge: f64,
}

fn contamination_gauge(u: &[f64], ghosts: &GhostValues) -> f64 {
    let n = u.len();
    let w = (n / 20).max(1);
    let mut g = 0.0f64;
    for i in 0..w {
        g = g.max((u[i] - ghosts.u_left).abs());
        g = g.max((u[n - 1 - i] - ghosts.u_right).abs());
    }
    g
}

/// Integrates the window to `t_end`, returning states at the configured
/// checkpoints. Fails with `BoundaryContaminated` when signal reaches the
/// clamped edges and `StepInstability` on blow-up.
pub fn evolve_lattice(
    s0: &LatticeState,
    t_end: f64,
    cfg: &LatticeRunConfig,
    ghosts: &GhostValues,
) -> Result<Vec<LatticeCheckpoint>> {
    s0.validate()?;
    assert!(cfg.dt > 0.0 && cfg.dt <= 0.1, "dt must lie in (0, 0.1]");
    let n_steps = (t_end / cfg.dt).round().max(0.0) as usize;
    assert!(
        (n_steps as f64 * cfg.dt - t_end).abs() < 1e-6 * (1.0 + t_end),
        "t_end must be a multiple of dt"
    );
    let mut cp_steps: Vec<usize> = Vec::with_capacity(cfg.checkpoint_times.len());
    for &tc in &cfg.checkpoint_times {
        let k = (tc / cfg.dt).round();
        assert!(
            (k * cfg.dt - tc).abs() < 1e-9 * (1.0 + tc.abs()),
            "checkpoint {tc} is not a multiple of dt {}",
            cfg.dt
        );
        cp_steps.push(k as usize);
    }

    let n = s0.u.len();
    let mut u = s0.u.values.clone();
    let mut q = s0.q.values.clone();
    let gauge0 = contamination_gauge(&u, ghosts);
    let gauge_limit = cfg.gauge_factor * (gauge0 + 1e-12);
    let amp_limit = 1e3 * (s0.u.max_abs().max(s0.q.max_abs()) + 1e-3);

    // Workspace for RK4.
    let mut vp = vec![0.0; n];
    let mut k1u = vec![0.0; n];
    let mut k1q = vec![0.0; n];
    let mut k2u = vec![0.0; n];
    let mut k2q = vec![0.0; n];
    let mut k3u = vec![0.0; n];
    let mut k3q = vec![0.0; n];
    let mut k4u = vec![0.0; n];
    let mut k4q = vec![0.0; n];
    let mut tu = vec![0.0; n];
    let mut tq = vec![0.0; n];

    let mut out = Vec::with_capacity(cp_steps.len());
    let emit = |step: usize, u: &[f64], q: &[f64], out: &mut Vec<LatticeCheckpoint>| -> Result<()> {
        let t = step as f64 * cfg.dt;
        let gauge = contamination_gauge(u, ghosts);
        if gauge > gauge_limit {
            return Err(Error::BoundaryContaminated {
                t,
                gauge,
                limit: gauge_limit,
            });
        }
        let max = u.iter().chain(q.iter()).fold(0.0f64, |m, v| m.max(v.abs()));
        if !max.is_finite() || max > amp_limit {
            return Err(Error::StepInstability {
                t,
                amp: max,
                limit: amp_limit,
            });
        }
        if cp_steps.contains(&step) {
            out.push(LatticeCheckpoint {
                state: LatticeState {
                    u: LatticeSeq::from_values(s0.u.n_min, u.to_vec()),
                    q: LatticeSeq::from_values(s0.q.n_min, q.to_vec()),
                    t,
                },
                gauge,
            });
        }
        Ok(())
    };

    emit(0, &u, &q, &mut out)?;
    let monitor_every = (n_steps / 64).max(1);
    for step in 1..=n_steps {
        match cfg.integrator {
            Integrator::Rk4 => {
                let dt = cfg.dt;
                rhs_into(&u, &q, ghosts, &mut k1u, &mut k1q, &mut vp);
                for i in 0..n {
                    tu[i] = u[i] + 0.5 * dt * k1u[i];
                    tq[i] = q[i] + 0.5 * dt * k1q[i];
                }
                rhs_into(&tu, &tq, ghosts, &mut k2u, &mut k2q, &mut vp);
                for i in 0..n {
                    tu[i] = u[i] + 0.5 * dt * k2u[i];
                    tq[i] = q[i] + 0.5 * dt * k2q[i];
                }
                rhs_into(&tu, &tq, ghosts, &mut k3u, &mut k3q, &mut vp);
                for i in 0..n {
                    tu[i] = u[i] + dt * k3u[i];
                    tq[i] = q[i] + dt * k3q[i];
                }
                rhs_into(&tu, &tq, ghosts, &mut k4u, &mut k4q, &mut vp);
                for i in 0..n {
                    u[i] += dt / 6.0 * (k1u[i] + 2.0 * (k2u[i] + k3u[i]) + k4u[i]);
                    q[i] += dt / 6.0 * (k1q[i] + 2.0 * (k2q[i] + k3q[i]) + k4q[i]);
                }
            }
            Integrator::Strang => {
                let dt = cfg.dt;
                // Half drift in u (q frozen), full kick in q, half drift.
                for i in 0..n - 1 {
                    u[i] += 0.5 * dt * (q[i + 1] - q[i]);
                }
                u[n - 1] += 0.5 * dt * (ghosts.q_right - q[n - 1]);
                for i in 0..n {
                    vp[i] = potential_prime(u[i]);
                }
                q[0] += dt * (vp[0] - potential_prime(ghosts.u_left));
                for i in 1..n {
                    q[i] += dt * (vp[i] - vp[i - 1]);
                }
                for i in 0..n - 1 {
                    u[i] += 0.5 * dt * (q[i + 1] - q[i]);
                }
                u[n - 1] += 0.5 * dt * (ghosts.q_right - q[n - 1]);
            }
        }
        if step % monitor_every == 0 || cp_steps.contains(&step) || step == n_steps {
            emit(step, &u, &q, &mut out)?;
        }
    }
    Ok(out)
}

/// First residual
/// `εF(ε(n+1+t)) - εF(ε(n+t)) + εG(ε(n+1-ct)) - εG(ε(n-ct))
///  + ε³Φ(ε(n+1)) - ε³Φ(εn) - ε²∂₁f - ε⁴∂₂f + ε²c∂₁g - ε⁴∂₂g - ε⁴ψ`,
/// everything at the matching scaled arguments.
pub fn residual_res1(a: &AnsatzFields, t: f64, n_min: i64, n_max: i64) -> Result<LatticeSeq> {
    let e = a.eps;
    let c = a.c;
    let fshift = e * t;
    let gshift = -e * c * t;

    let f_next = a.f_cap.field.sample(e, fshift + e, n_min, n_max);
    let f_here = a.f_cap.field.sample(e, fshift, n_min, n_max);
    let g_split = a.g_cap.as_split();
    let g_next = g_split.sample(e, gshift + e, n_min, n_max);
    let g_here = g_split.sample(e, gshift, n_min, n_max);
    let (cap_phi, _) = phi_velocity_field(&a.phi, e);
    let p_split = SplitField::localized(cap_phi);
    let p_next = p_split.sample(e, e, n_min, n_max);
    let p_here = p_split.sample(e, 0.0, n_min, n_max);

    let d1f = a.f.field.derivative(1).sample(e, fshift, n_min, n_max);
    let d2f = SplitField::localized(mkdv_rhs(&a.f)).sample(e, fshift, n_min, n_max);
    let d1g =
        SplitField::localized(spectral_derivative(&a.g.values, 1)).sample(e, gshift, n_min, n_max);
    let d2g =
        SplitField::localized(gardner_rhs(&a.g, a.f.f_plus)).sample(e, gshift, n_min, n_max);
    let psi = SplitField::localized(a.phi.psi.clone()).sample(e, 0.0, n_min, n_max);

    let e2 = e * e;
    let e3 = e2 * e;
    let e4 = e2 * e2;
    let mut out = LatticeSeq::zeros(n_min, n_max);
    for j in 0..out.len() {
        out.values[j] = e * (f_next.values[j] - f_here.values[j])
            + e * (g_next.values[j] - g_here.values[j])
            + e3 * (p_next.values[j] - p_here.values[j])
            - e2 * d1f.values[j]
            - e4 * d2f.values[j]
            + e2 * c * d1g.values[j]
            - e4 * d2g.values[j]
            - e4 * psi.values[j];
    }
    Ok(out)
}

/// Second residual: one-site strain differences minus the time derivative of
/// the velocity ansatz minus the cubic-difference term,
/// `... - ε²∂₁F - ε⁴∂₂F + ε²c∂₁G - ε⁴∂₂G - ε⁴∂₂Φ - (1/6)(a_n³ - a_{n-1}³)`.
pub fn residual_res2(a: &AnsatzFields, t: f64, n_min: i64, n_max: i64) -> Result<LatticeSeq> {
    let e = a.eps;
    let c = a.c;
    let fshift = e * t;
    let gshift = -e * c * t;
    let lo = n_min - 1;

    // Extended windows give both n and n-1 in one sampling pass.
    let f_ext = a.f.field.sample(e, fshift, lo, n_max);
    let g_ext = a.g.as_split().sample(e, gshift, lo, n_max);
    let phi_ext = SplitField::localized(a.phi.phi.clone()).sample(e, 0.0, lo, n_max);

    let d1f_cap = a.f_cap.field.derivative(1).sample(e, fshift, n_min, n_max);
    let d2f_cap =
        SplitField::localized(f_velocity_time_derivative(&a.f, e)).sample(e, fshift, n_min, n_max);
    let d1g_cap = SplitField::localized(spectral_derivative(&a.g_cap.values, 1))
        .sample(e, gshift, n_min, n_max);
    let d2g_cap = SplitField::localized(g_velocity_time_derivative(&a.g, a.f.f_plus, e))
        .sample(e, gshift, n_min, n_max);
    let (_, cap_phi_t) = phi_velocity_field(&a.phi, e);
    let d2p_cap = SplitField::localized(cap_phi_t).sample(e, 0.0, n_min, n_max);

    let e2 = e * e;
    let e3 = e2 * e;
    let e4 = e2 * e2;
    let ansatz = |j_ext: usize| {
        e * f_ext.values[j_ext] + e * g_ext.values[j_ext] + e3 * phi_ext.values[j_ext]
    };
    let mut out = LatticeSeq::zeros(n_min, n_max);
    for j in 0..out.len() {
        let je = j + 1; // index into the extended samples
        let a_here = ansatz(je);
        let a_prev = ansatz(je - 1);
        out.values[j] = e * (f_ext.values[je] - f_ext.values[je - 1])
            + e * (g_ext.values[je] - g_ext.values[je - 1])
            + e3 * (phi_ext.values[je] - phi_ext.values[je - 1])
            - e2 * d1f_cap.values[j]
            - e4 * d2f_cap.values[j]
            + e2 * c * d1g_cap.values[j]
            - e4 * d2g_cap.values[j]
            - e4 * d2p_cap.values[j]
            - (a_here.powi(3) - a_prev.powi(3)) / 6.0;
    }
    Ok(out)
}

/// Error energy
/// `ℰ = ½ Σ Q² + U² - ½(εf + εg + ε³φ)² U²`, evaluated at the state's time.
pub fn energy_functional(a: &AnsatzFields, s: &LatticeState) -> Result<f64> {
    let u_ansatz = a.assemble_u(s.t, s.n_min(), s.n_max())?;
    let q_ansatz = a.assemble_q(s.t, s.n_min(), s.n_max())?;
    let mut acc = 0.0;
    for j in 0..s.u.len() {
        let uu = s.u.values[j] - u_ansatz.values[j];
        let qq = s.q.values[j] - q_ansatz.values[j];
        let amp = u_ansatz.values[j];
        acc += 0.5 * (qq * qq + uu * uu - 0.5 * amp * amp * uu * uu);
    }
    Ok(acc)
}

/// The cubic-difference error nonlinearity
/// `𝓑_n = -(1/6)[3a_nU_n² - 3a_{n-1}U_{n-1}² + U_n³ - U_{n-1}³]`,
/// with `U` treated as zero outside its window.
pub fn nonlinearity_b(a: &AnsatzFields, u_err: &LatticeSeq, t: f64) -> Result<LatticeSeq> {
    let n_min = u_err.n_min;
    let n_max = u_err.n_max();
    let amps = a.assemble_u(t, n_min - 1, n_max)?;
    let mut out = LatticeSeq::zeros(n_min, n_max);
    for j in 0..out.len() {
        let u_here = u_err.values[j];
        let u_prev = if j > 0 { u_err.values[j - 1] } else { 0.0 };
        let a_here = amps.values[j + 1];
        let a_prev = amps.values[j];
        out.values[j] = -(3.0 * a_here * u_here * u_here - 3.0 * a_prev * u_prev * u_prev
            + u_here.powi(3)
            - u_prev.powi(3))
            / 6.0;
    }
    Ok(out)
}

/// One checkpoint row of an error series.
#[derive(Debug, Clone)]
pub struct ErrorRow {
    pub t: f64,
    pub norm_u: f64,
    pub norm_q: f64,
    pub energy: f64,
    pub res1: f64,
    pub res2: f64,
    pub gauge: f64,
}

/// Time-stamped diagnostics of one run; times strictly increase.
#[derive(Debug, Clone, Default)]
pub struct ErrorSeries {
    pub rows: Vec<ErrorRow>,
}

impl ErrorSeries {
    pub fn push(&mut self, row: ErrorRow) {
        if let Some(last) = self.rows.last() {
            assert!(row.t > last.t, "error-series times must strictly increase");
        }
        self.rows.push(row);
    }

    pub fn max_error(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.norm_u + r.norm_q)
            .fold(0.0, f64::max)
    }

    pub fn write_csv(&self, w: &mut impl Write) -> Result<()> {
        writeln!(w, "# t,normU,normQ,energy,res1,res2,gauge")?;
        for r in &self.rows {
            writeln!(
                w,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                r.t, r.norm_u, r.norm_q, r.energy, r.res1, r.res2, r.gauge
            )?;
        }
        Ok(())
    }
}

/// Coercivity check: `‖Q‖² + ‖U‖² ≤ 4ℰ`, zero tolerance.
pub fn coercivity_holds(a: &AnsatzFields, s: &LatticeState) -> Result<bool> {
    let u_ansatz = a.assemble_u(s.t, s.n_min(), s.n_max())?;
    let q_ansatz = a.assemble_q(s.t, s.n_min(), s.n_max())?;
    let nu = l2_norm(&s.u.sub(&u_ansatz));
    let nq = l2_norm(&s.q.sub(&q_ansatz));
    let e = energy_functional(a, s)?;
    Ok(nq * nq + nu * nu <= 4.0 * e)
}
