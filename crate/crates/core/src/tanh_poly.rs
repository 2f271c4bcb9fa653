//! Closed-form calculus for tanh-shaped reference profiles.
//!
//! Non-decaying parts of the modulation fields (the kink, its velocity field
//! `F`, smooth ramps used to tame weighted norms) are all polynomials in
//! `s = tanh(r(x - c))`. That class is closed under differentiation
//! (`d/dx P(s) = r (1 - s²) P'(s)`), products, and linear combinations, and
//! its members have exact limits `P(±1)` at ±∞. Representing references this
//! way keeps every analytic (non-periodic) contribution exact: no Gibbs error
//! ever enters the spectral pipeline through a carrier.

/// Polynomial in `tanh(rate · (x - center))`.
///
/// `coeffs[i]` multiplies `s^i`. An empty coefficient list is the zero
/// profile; a single coefficient is a constant.
#[derive(Debug, Clone, PartialEq)]
pub struct TanhProfile {
    pub rate: f64,
    pub center: f64,
    pub coeffs: Vec<f64>,
}

impl TanhProfile {
    pub fn zero() -> Self {
        TanhProfile {
            rate: 1.0,
            center: 0.0,
            coeffs: Vec::new(),
        }
    }

    pub fn constant(a: f64) -> Self {
        TanhProfile {
            rate: 1.0,
            center: 0.0,
            coeffs: vec![a],
        }
    }

    /// `amp · tanh(rate (x - center)) + offset`.
    pub fn ramp(amp: f64, rate: f64, center: f64, offset: f64) -> Self {
        TanhProfile {
            rate,
            center,
            coeffs: vec![offset, amp],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    /// True when the profile carries no actual tanh dependence.
    fn is_const(&self) -> bool {
        self.coeffs.len() <= 1
    }

    pub fn eval(&self, x: f64) -> f64 {
        if self.coeffs.is_empty() {
            return 0.0;
        }
        // tanh saturates to ±1 exactly in f64 beyond |arg| = 20.
        let arg = self.rate * (x - self.center);
        let s = if arg >= 20.0 {
            1.0
        } else if arg <= -20.0 {
            -1.0
        } else {
            arg.tanh()
        };
        // Horner
        let mut acc = 0.0;
        for &c in self.coeffs.iter().rev() {
            acc = acc * s + c;
        }
        acc
    }

    /// Limits (at -∞, at +∞), i.e. `P(-1)` and `P(1)`.
    pub fn limits(&self) -> (f64, f64) {
        let at = |s: f64| {
            let mut acc = 0.0;
            for &c in self.coeffs.iter().rev() {
                acc = acc * s + c;
            }
            acc
        };
        (at(-1.0), at(1.0))
    }

    /// d/dx, again a tanh polynomial: `r (1 - s²) P'(s)`.
    pub fn derivative(&self) -> Self {
        if self.is_const() {
            return Self::zero();
        }
        // P'(s)
        let mut dp = vec![0.0; self.coeffs.len() - 1];
        for (i, &c) in self.coeffs.iter().enumerate().skip(1) {
            dp[i - 1] = c * i as f64;
        }
        // r (P' - s² P')
        let mut out = vec![0.0; dp.len() + 2];
        for (i, &c) in dp.iter().enumerate() {
            out[i] += self.rate * c;
            out[i + 2] -= self.rate * c;
        }
        TanhProfile {
            rate: self.rate,
            center: self.center,
            coeffs: trimmed(out),
        }
    }

    pub fn derivative_n(&self, order: usize) -> Self {
        let mut p = self.clone();
        for _ in 0..order {
            p = p.derivative();
        }
        p
    }

    pub fn scaled(&self, a: f64) -> Self {
        TanhProfile {
            rate: self.rate,
            center: self.center,
            coeffs: self.coeffs.iter().map(|c| c * a).collect(),
        }
    }

    /// Sum of two profiles sharing the same tanh argument (constants mix with
    /// anything).
    pub fn add(&self, other: &Self) -> Self {
        let (rate, center) = merged_frame(self, other);
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut coeffs = vec![0.0; n];
        for (i, &c) in self.coeffs.iter().enumerate() {
            coeffs[i] += c;
        }
        for (i, &c) in other.coeffs.iter().enumerate() {
            coeffs[i] += c;
        }
        TanhProfile {
            rate,
            center,
            coeffs: trimmed(coeffs),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scaled(-1.0))
    }

    /// Product of two profiles sharing the same tanh argument.
    pub fn mul(&self, other: &Self) -> Self {
        if self.coeffs.is_empty() || other.coeffs.is_empty() {
            return Self::zero();
        }
        let (rate, center) = merged_frame(self, other);
        let mut coeffs = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        TanhProfile {
            rate,
            center,
            coeffs: trimmed(coeffs),
        }
    }

    pub fn cube(&self) -> Self {
        self.mul(self).mul(self)
    }
}

fn trimmed(mut v: Vec<f64>) -> Vec<f64> {
    while v.last() == Some(&0.0) {
        v.pop();
    }
    v
}

/// Two profiles can be combined when they share (rate, center) or when one of
/// them is constant and therefore frame-free.
fn merged_frame(a: &TanhProfile, b: &TanhProfile) -> (f64, f64) {
    if a.is_const() {
        (b.rate, b.center)
    } else if b.is_const() {
        (a.rate, a.center)
    } else {
        assert!(
            a.rate == b.rate && a.center == b.center,
            "tanh profiles live in different frames: ({}, {}) vs ({}, {})",
            a.rate,
            a.center,
            b.rate,
            b.center
        );
        (a.rate, a.center)
    }
}
