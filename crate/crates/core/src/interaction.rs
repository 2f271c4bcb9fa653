//! The interaction wave `φ` and its companions.
//!
//! `φ` solves the forced wave equation
//! `∂₂²φ = ∂₁²φ - (1/6)∂₁²[3(f²(ξ+T)-f₊²)g(ξ-cT) + 3(f(ξ+T)-f₊)g²(ξ-cT)]`
//! with `φ(·,0) = ψ(·,0) = 0`, `ψ = ∂₂φ`. Instead of time-stepping, each
//! Fourier mode is integrated by the explicit variation-of-constants form:
//!
//! ```text
//! φ̂(k,T) = (1/2) ∫₀ᵀ k  sin(k(T-τ)) ĥ(k,τ) dτ
//! ψ̂(k,T) = (1/2) ∫₀ᵀ k² cos(k(T-τ)) ĥ(k,τ) dτ
//! ```
//!
//! where `ĥ` is the transform of `(f²-f₊²)g + (f-f₊)g²` at shifted arguments.
//! Writing `sin(k(T-τ)) = sin(kT)cos(kτ) - cos(kT)sin(kτ)` reduces the whole
//! trajectory to two running moments `C(k,T) = ∫cos(kτ)ĥ dτ`,
//! `S(k,T) = ∫sin(kτ)ĥ dτ`, accumulated once by composite Simpson. A coarse
//! Simpson rule embedded on the same nodes provides the resolution guard.
//!
//! The wave radiates at unit speed, so `φ`'s domain must extend `T_end`
//! beyond the modulation-field windows on both sides; callers plan an
//! enlarged grid with the same spacing as the field grids.

use crate::error::{Error, Result};
use crate::fields::{BackgroundField, LocalizedField, SplitField};
use crate::grid::{bracket, bracket_plus, GridFunction, LatticeSeq, UniformGrid};
use crate::norms::sobolev_norm;
use crate::slope::{fit_log_slope, SlopeFit};
use crate::solvers::FieldTrajectory;
use crate::spectral::{fft_real, ifft_real, wavenumbers};
use num_complex::Complex64;
use std::io::Write;

/// Relative tolerance of the quadrature-resolution guard.
pub const QUAD_TOL: f64 = 1e-6;

/// Interaction pair on the slow grid at wave time `T = εt`.
#[derive(Debug, Clone)]
pub struct PhiPsiField {
    pub grid: UniformGrid,
    pub phi: GridFunction,
    pub psi: GridFunction,
    pub inv_d_psi: GridFunction,
    /// `∂_T ψ` from the differentiated quadrature.
    pub psi_t: GridFunction,
    /// `∂_T ∂₁⁻¹ψ` from the differentiated quadrature.
    pub inv_d_psi_t: GridFunction,
    pub time: f64,
}

impl PhiPsiField {
    pub fn zero(grid: UniformGrid, time: f64) -> Self {
        PhiPsiField {
            grid,
            phi: GridFunction::zeros(grid),
            psi: GridFunction::zeros(grid),
            inv_d_psi: GridFunction::zeros(grid),
            psi_t: GridFunction::zeros(grid),
            inv_d_psi_t: GridFunction::zeros(grid),
            time,
        }
    }

    pub fn as_split(&self, which: Part) -> SplitField {
        let f = match which {
            Part::Phi => &self.phi,
            Part::Psi => &self.psi,
            Part::InvDPsi => &self.inv_d_psi,
            Part::PsiT => &self.psi_t,
            Part::InvDPsiT => &self.inv_d_psi_t,
        };
        SplitField::localized(f.clone())
    }

    pub fn sample(&self, which: Part, eps: f64, shift: f64, n_min: i64, n_max: i64) -> LatticeSeq {
        self.as_split(which).sample(eps, shift, n_min, n_max)
    }

    /// Writes `# xi,phi,psi,invdpsi` CSV with 17 significant digits.
    pub fn write_csv(&self, w: &mut impl Write) -> Result<()> {
        writeln!(w, "# xi,phi,psi,invdpsi")?;
        for (i, xi) in self.grid.points().enumerate() {
            writeln!(
                w,
                "{:.16e},{:.16e},{:.16e},{:.16e}",
                xi, self.phi.values[i], self.psi.values[i], self.inv_d_psi.values[i]
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Part {
    Phi,
    Psi,
    InvDPsi,
    PsiT,
    InvDPsiT,
}

/// `(f²-f₊²)g(·-cT) + (f-f₊)g²(·-cT)` sampled on `out_grid` (no 1/6, no 3).
fn interaction_bracket(
    f: &SplitField,
    f_plus: f64,
    g: &SplitField,
    t_wave: f64,
    c: f64,
    out_grid: UniformGrid,
) -> Vec<f64> {
    let n = out_grid.n_points() as i64;
    let fs = f.sample(out_grid.dx(), out_grid.x_min() + t_wave, 0, n - 1);
    let gs = g.sample(out_grid.dx(), out_grid.x_min() - c * t_wave, 0, n - 1);
    fs.values
        .iter()
        .zip(&gs.values)
        .map(|(&fv, &gv)| (fv * fv - f_plus * f_plus) * gv + (fv - f_plus) * gv * gv)
        .collect()
}

/// The full forcing bracket of the wave equation,
/// `-(1/6)∂₁²[3(f²-f₊²)g + 3(f-f₊)g²]`, at wave time `t_wave` on `out_grid`.
pub fn interaction_forcing(
    f: &BackgroundField,
    g: &LocalizedField,
    t_wave: f64,
    eps: f64,
    c: f64,
    out_grid: UniformGrid,
) -> Result<GridFunction> {
    check_box(&[f.grid(), g.grid()], out_grid, t_wave)?;
    debug_assert!((f.tau - eps * eps * t_wave).abs() < 1e-9 + 1e-9 * t_wave.abs());
    let b = interaction_bracket(&f.field, f.f_plus, &g.as_split(), t_wave, c, out_grid);
    let b = GridFunction::from_values(out_grid, b);
    // -(1/6)·∂₁²·(3b) = -(1/2)∂₁²b
    Ok(crate::spectral::spectral_derivative(&b, 2).scaled(-0.5))
}

/// The φ domain must reach `t_wave` beyond both field windows (unit wave
/// speed), with a small safety margin.
fn check_box(field_grids: &[UniformGrid], out: UniformGrid, t_wave: f64) -> Result<()> {
    let margin = 5.0;
    let left = field_grids
        .iter()
        .map(|g| g.x_min())
        .fold(f64::INFINITY, f64::min);
    let right = field_grids
        .iter()
        .map(|g| g.x_min() + g.length())
        .fold(f64::NEG_INFINITY, f64::max);
    let need_left = left - t_wave - margin;
    let need_right = right + t_wave + margin;
    let out_right = out.x_min() + out.length();
    if out.x_min() > need_left || out_right < need_right {
        return Err(Error::TailMismatch {
            context: "interaction wave box",
            value: (out.x_min() - need_left).max(need_right - out_right),
            tol: 0.0,
        });
    }
    Ok(())
}

/// Plans the enlarged φ grid: same spacing as `field_grid`, covering the
/// field window plus `t_end` of radiation on both sides.
pub fn plan_phi_grid(field_grid: UniformGrid, t_end: f64) -> Result<UniformGrid> {
    let dx = field_grid.dx();
    let half_needed = field_grid.length() / 2.0 + t_end + 8.0;
    let mut n = field_grid.n_points();
    while (n as f64) * dx < 2.0 * half_needed {
        n *= 2;
    }
    let length = n as f64 * dx;
    let mid = field_grid.x_min() + field_grid.length() / 2.0;
    UniformGrid::new(mid - length / 2.0, length, n)
}

struct Moments {
    /// Running `∫ cos(kτ) ĥ dτ` per mode.
    c: Vec<Complex64>,
    /// Running `∫ sin(kτ) ĥ dτ` per mode.
    s: Vec<Complex64>,
}

impl Moments {
    fn new(n: usize) -> Self {
        Moments {
            c: vec![Complex64::new(0.0, 0.0); n],
            s: vec![Complex64::new(0.0, 0.0); n],
        }
    }
}

/// Solves for φ, ψ, ∂₁⁻¹ψ (and their T-derivatives) at the requested wave
/// times by cumulative Simpson quadrature of the Duhamel integrals.
///
/// `n_quad_steps` is the total number of τ subintervals across `[0, t_end]`;
/// the embedded half-resolution rule must agree to [`QUAD_TOL`] at the final
/// emission or the run fails with `QuadratureUnresolved`.
pub fn solve_phi_psi(
    f_traj: &FieldTrajectory,
    g_traj: &FieldTrajectory,
    t_end: f64,
    eps: f64,
    c: f64,
    n_quad_steps: usize,
    out_grid: UniformGrid,
    emit_times: &[f64],
) -> Result<Vec<PhiPsiField>> {
    assert!(t_end >= 0.0);
    let slow_needed = eps * eps * t_end;
    assert!(
        f_traj.tau_end() >= slow_needed - 1e-12 && g_traj.tau_end() >= slow_needed - 1e-12,
        "field trajectories do not cover slow time {slow_needed}"
    );
    check_box(&[f_traj.grid, g_traj.grid], out_grid, t_end)?;

    let mut times: Vec<f64> = emit_times.to_vec();
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    times.dedup();
    assert!(times.iter().all(|&t| (0.0..=t_end + 1e-12).contains(&t)));

    let n = out_grid.n_points();
    let k = wavenumbers(n, out_grid.length());
    let (_, f_plus) = f_traj.carrier.limits();

    let node_bracket = |tau: f64| -> Vec<Complex64> {
        let f_state = f_traj.split_at(eps * eps * tau);
        let g_state = g_traj.split_at(eps * eps * tau);
        let b = interaction_bracket(&f_state, f_plus, &g_state, tau, c, out_grid);
        fft_real(&b)
    };

    let density = n_quad_steps.max(8) as f64 / t_end.max(1e-9);

    let mut fine = Moments::new(n);
    let mut coarse = Moments::new(n);
    let mut out = Vec::with_capacity(times.len());
    let mut h_prev = node_bracket(0.0);
    let mut t_prev = 0.0f64;

    // Segment boundaries: emission times (0 handled implicitly).
    let mut final_pair: Option<(PhiPsiField, PhiPsiField)> = None;
    for (ti, &t_emit) in times.iter().enumerate() {
        if t_emit > t_prev + 1e-14 {
            // Subintervals: multiple of 4 so the half-resolution rule embeds.
            let len = t_emit - t_prev;
            let m = (((density * len).ceil() as usize).max(4) + 3) / 4 * 4;
            let h = len / m as f64;

            // Phase rotation per node, re-synced exactly at each segment.
            let mut cos_t: Vec<f64> = k.iter().map(|&ki| (ki * t_prev).cos()).collect();
            let mut sin_t: Vec<f64> = k.iter().map(|&ki| (ki * t_prev).sin()).collect();
            let rot_c: Vec<f64> = k.iter().map(|&ki| (ki * h).cos()).collect();
            let rot_s: Vec<f64> = k.iter().map(|&ki| (ki * h).sin()).collect();

            // Simpson weights over the segment, fine (step h) and coarse
            // (step 2h on even nodes).
            let w_fine = |j: usize| -> f64 {
                if j == 0 || j == m {
                    1.0
                } else if j % 2 == 1 {
                    4.0
                } else {
                    2.0
                }
            };
            let w_coarse = |j: usize| -> f64 {
                let jj = j / 2;
                if jj == 0 || jj == m / 2 {
                    1.0
                } else if jj % 2 == 1 {
                    4.0
                } else {
                    2.0
                }
            };

            let mut h_node = h_prev.clone();
            for j in 0..=m {
                if j > 0 {
                    let tau = t_prev + j as f64 * h;
                    h_node = node_bracket(tau);
                    for i in 0..n {
                        let (ct, st) = (cos_t[i], sin_t[i]);
                        cos_t[i] = ct * rot_c[i] - st * rot_s[i];
                        sin_t[i] = st * rot_c[i] + ct * rot_s[i];
                    }
                }
                let wf = w_fine(j) * h / 3.0;
                for i in 0..n {
                    fine.c[i] += h_node[i] * (wf * cos_t[i]);
                    fine.s[i] += h_node[i] * (wf * sin_t[i]);
                }
                if j % 2 == 0 {
                    let wc = w_coarse(j) * (2.0 * h) / 3.0;
                    for i in 0..n {
                        coarse.c[i] += h_node[i] * (wc * cos_t[i]);
                        coarse.s[i] += h_node[i] * (wc * sin_t[i]);
                    }
                }
            }
            h_prev = h_node;
            t_prev = t_emit;
        }

        let field = emit(&fine, &h_prev, &k, out_grid, t_emit);
        if ti == times.len() - 1 {
            let coarse_field = emit(&coarse, &h_prev, &k, out_grid, t_emit);
            final_pair = Some((field.clone(), coarse_field));
        }
        out.push(field);
    }

    if let Some((f_fine, f_coarse)) = final_pair {
        let num = l2_diff(&f_fine.phi, &f_coarse.phi) + l2_diff(&f_fine.psi, &f_coarse.psi);
        let den = (sobolev_norm(&f_fine.phi, 0) + sobolev_norm(&f_fine.psi, 0)).max(1e-14);
        let change = num / den;
        // The embedded rule halves the resolution; fourth-order Simpson makes
        // the fine-vs-coarse gap ~15x the fine error, so this is conservative
        // for the "doubling changes outputs" contract.
        if change > 16.0 * QUAD_TOL {
            return Err(Error::QuadratureUnresolved {
                change,
                tol: 16.0 * QUAD_TOL,
            });
        }
    }
    Ok(out)
}

fn l2_diff(a: &GridFunction, b: &GridFunction) -> f64 {
    let dx = a.grid.dx();
    (a.values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        * dx)
        .sqrt()
}

fn emit(m: &Moments, h_at_t: &[Complex64], k: &[f64], grid: UniformGrid, t: f64) -> PhiPsiField {
    let n = k.len();
    let mut phi = vec![Complex64::new(0.0, 0.0); n];
    let mut psi = phi.clone();
    let mut inv = phi.clone();
    let mut psi_t = phi.clone();
    let mut inv_t = phi.clone();
    for i in 0..n {
        let ki = k[i];
        let (skt, ckt) = (ki * t).sin_cos();
        let a = m.c[i] * ckt + m.s[i] * skt; // cos-phase moment
        let b = m.c[i] * skt - m.s[i] * ckt; // sin-phase moment
        phi[i] = b * (ki / 2.0);
        psi[i] = a * (ki * ki / 2.0);
        inv[i] = a * Complex64::new(0.0, -ki / 2.0);
        psi_t[i] = h_at_t[i] * (ki * ki / 2.0) - b * (ki * ki * ki / 2.0);
        inv_t[i] =
            h_at_t[i] * Complex64::new(0.0, -ki / 2.0) + b * Complex64::new(0.0, ki * ki / 2.0);
    }
    // Zero mode and Nyquist carry no information here.
    for spec in [&mut phi, &mut psi, &mut inv, &mut psi_t, &mut inv_t] {
        spec[0] = Complex64::new(0.0, 0.0);
        spec[n / 2] = Complex64::new(0.0, 0.0);
    }
    PhiPsiField {
        grid,
        phi: GridFunction::from_values(grid, ifft_real(phi)),
        psi: GridFunction::from_values(grid, ifft_real(psi)),
        inv_d_psi: GridFunction::from_values(grid, ifft_real(inv)),
        psi_t: GridFunction::from_values(grid, ifft_real(psi_t)),
        inv_d_psi_t: GridFunction::from_values(grid, ifft_real(inv_t)),
        time: t,
    }
}

/// Empirical constants of the uniform bounds: max over checkpoints of
/// `‖φ‖_{H⁵} / M³` and `‖ψ‖_{H⁴} / M³` where `M` is the largest field norm.
pub fn phi_uniform_bound_report(traj: &[PhiPsiField], max_field_norm: f64) -> (f64, f64) {
    let cube = max_field_norm.powi(3).max(1e-300);
    let mut c_phi = 0.0f64;
    let mut c_psi = 0.0f64;
    for p in traj {
        c_phi = c_phi.max(sobolev_norm(&p.phi, 5) / cube);
        c_psi = c_psi.max(sobolev_norm(&p.psi, 4) / cube);
    }
    (c_phi, c_psi)
}

/// `sup_x 1/(⟨x+τ⟩₊² ⟨x-cτ⟩²)` by dense scan.
pub fn sup_kernel(c: f64, tau: f64) -> f64 {
    let lo = -tau - 20.0;
    let hi = c * tau + 20.0;
    let steps = ((hi - lo) / 0.05).ceil() as usize;
    let mut best = 0.0f64;
    for i in 0..=steps {
        let x = lo + (hi - lo) * i as f64 / steps as f64;
        let wp = bracket_plus(x + tau);
        let wb = bracket(x - c * tau);
        best = best.max(1.0 / (wp * wp * wb * wb));
    }
    best
}

/// Log-log slope of the kernel sup over a τ range (the integrand of the
/// uniform-bound argument decays like 1/τ²).
pub fn kernel_decay_slope(c: f64, taus: &[f64]) -> Result<SlopeFit> {
    let pts: Vec<(f64, f64)> = taus.iter().map(|&t| (t, sup_kernel(c, t))).collect();
    fit_log_slope(&pts)
}
