//! Effective three-level models near the resonances ω = 1/2 and ω = 1,
//! their closed-form populations and currents, the exceptional-point
//! solution at λ = 1, and a perturbative builder for T-matrix elements in
//! the extended (momentum, photon) space.

use faer::Mat;

use crate::error::{Error, Result};
use crate::expm::expm;
use crate::propagation::{Recorder, TimeSeries};
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Resonance {
    /// ω = 1/2: first-order coupling of |0⟩ to |±1⟩.
    Half,
    /// ω = 1: second-order coupling of |0⟩ to |±2⟩.
    One,
}

impl Resonance {
    pub fn omega(self) -> f64 {
        match self {
            Resonance::Half => 0.5,
            Resonance::One => 1.0,
        }
    }

    /// Basis `{|n,m⟩}` ordered as the rows of [`build_t_matrix`].
    pub fn basis(self) -> [ExtendedFloquetIndex; 3] {
        let (n, m) = match self {
            Resonance::Half => (1, 1),
            Resonance::One => (2, 2),
        };
        [
            ExtendedFloquetIndex { n, m },
            ExtendedFloquetIndex { n: 0, m: 0 },
            ExtendedFloquetIndex { n: -n, m },
        ]
    }

    pub fn momenta(self) -> [i64; 3] {
        self.basis().map(|b| b.n)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Order {
    First,
    Second,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EffectiveCouplings {
    pub gamma_plus: f64,
    pub gamma_minus: f64,
    /// `Ω = sqrt(2Γ₊Γ₋)`; purely imaginary when the product is negative.
    pub rabi: C64,
    pub order: Order,
}

impl EffectiveCouplings {
    /// `Γ± = K²λ±²/8`.
    pub fn second_order(k: f64, lambda: f64) -> Self {
        let gp = k * k * (lambda + 1.0).powi(2) / 8.0;
        let gm = k * k * (lambda - 1.0).powi(2) / 8.0;
        Self {
            gamma_plus: gp,
            gamma_minus: gm,
            rabi: C64::new((2.0 * gp * gm).sqrt(), 0.0),
            order: Order::Second,
        }
    }

    /// `Γ′± = K(1±λ)/4`.
    pub fn first_order(k: f64, lambda: f64) -> Self {
        let gp = k * (1.0 + lambda) / 4.0;
        let gm = k * (1.0 - lambda) / 4.0;
        Self {
            gamma_plus: gp,
            gamma_minus: gm,
            rabi: C64::new(2.0 * gp * gm, 0.0).sqrt(),
            order: Order::First,
        }
    }

    pub fn for_resonance(k: f64, lambda: f64, resonance: Resonance) -> Self {
        match resonance {
            Resonance::Half => Self::first_order(k, lambda),
            Resonance::One => Self::second_order(k, lambda),
        }
    }
}

/// Extended-space label `|n, m⟩` with unperturbed energy `n²/2 - mω`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ExtendedFloquetIndex {
    pub n: i64,
    pub m: i64,
}

impl ExtendedFloquetIndex {
    pub fn new(n: i64, m: i64) -> Self {
        Self { n, m }
    }

    pub fn energy(self, omega: f64) -> f64 {
        0.5 * (self.n * self.n) as f64 - self.m as f64 * omega
    }

    pub fn is_resonant(self, omega: f64) -> bool {
        self.energy(omega).abs() < 1e-12
    }
}

pub fn build_t_matrix(k: f64, lambda: f64, resonance: Resonance) -> Mat<C64> {
    let c = EffectiveCouplings::for_resonance(k, lambda, resonance);
    let (gp, gm) = (c.gamma_plus, c.gamma_minus);
    let rows = match resonance {
        Resonance::One => [[0.0, gm, 0.0], [gp, 0.0, gm], [0.0, gp, 0.0]],
        Resonance::Half => [[0.0, -gm, 0.0], [-gp, 0.0, gm], [0.0, gp, 0.0]],
    };
    Mat::from_fn(3, 3, |i, j| C64::new(rows[i][j], 0.0))
}

/// First-order matrix element `⟨row|V|col⟩` of the drive in the extended space.
pub fn coupling_element(
    row: ExtendedFloquetIndex,
    col: ExtendedFloquetIndex,
    k: f64,
    lambda: f64,
) -> f64 {
    let (lp, lm) = (lambda + 1.0, lambda - 1.0);
    let (dn, dm) = (row.n - col.n, row.m - col.m);
    let q = 0.25 * k;
    match (dn, dm) {
        (1, 1) => q * lm,
        (1, -1) => -q * lm,
        (-1, 1) => q * lp,
        (-1, -1) => -q * lp,
        _ => 0.0,
    }
}

fn neighbours(s: ExtendedFloquetIndex) -> [ExtendedFloquetIndex; 4] {
    [(1, 1), (1, -1), (-1, 1), (-1, -1)].map(|(a, b)| ExtendedFloquetIndex::new(s.n + a, s.m + b))
}

/// Default cut on intermediate momenta in [`perturbative_t_element`].
pub const DEFAULT_N_MAX: i64 = 8;

/// `⟨row|V|col⟩ + Σ_k ⟨row|V|k⟩⟨k|V|col⟩ / (-ε⁰_k)` over intermediate states
/// with `|n_k| ≤ n_max`.
pub fn perturbative_t_element(
    row: ExtendedFloquetIndex,
    col: ExtendedFloquetIndex,
    k: f64,
    lambda: f64,
    omega: f64,
    n_max: i64,
) -> Result<C64> {
    let mut total = coupling_element(row, col, k, lambda);
    for mid in neighbours(col) {
        if mid.n.abs() > n_max {
            continue;
        }
        let num = coupling_element(row, mid, k, lambda) * coupling_element(mid, col, k, lambda);
        if num == 0.0 {
            continue;
        }
        let e = mid.energy(omega);
        if e.abs() < 1e-12 {
            return Err(Error::DegenerateIntermediate { n: mid.n, m: mid.m });
        }
        total += num / -e;
    }
    Ok(C64::new(total, 0.0))
}

/// Full second-order matrix on the ω = 1 basis, including the diagonal
/// shifts that [`build_t_matrix`] leaves out. At ω = 1/2 the first-order
/// couplings alone are returned.
pub fn effective_t_matrix(
    k: f64,
    lambda: f64,
    resonance: Resonance,
    n_max: i64,
) -> Result<Mat<C64>> {
    let basis = resonance.basis();
    let mut t = Mat::<C64>::zeros(3, 3);
    for i in 0..3 {
        for j in 0..3 {
            t[(i, j)] = match resonance {
                Resonance::One => {
                    perturbative_t_element(basis[i], basis[j], k, lambda, resonance.omega(), n_max)?
                }
                Resonance::Half => C64::new(coupling_element(basis[i], basis[j], k, lambda), 0.0),
            };
        }
    }
    Ok(t)
}

/// `(sin(Ωt)/Ω, cos(Ωt))` for complex `Ω`, with the small-argument series.
fn rabi_factors(rabi: C64, t: f64) -> (C64, C64) {
    let z = rabi * t;
    if z.norm() < 1e-4 {
        let z2 = z * z;
        (C64::new(t, 0.0) * (1.0 - z2 / 6.0), 1.0 - z2 / 2.0)
    } else {
        (z.sin() / rabi, z.cos())
    }
}

/// `(P₂, P₀, P₋₂)` at ω = 1.
pub fn analytic_populations_w1(k: f64, lambda: f64, t: f64) -> (f64, f64, f64) {
    populations(EffectiveCouplings::second_order(k, lambda), t)
}

/// `(P₁, P₀, P₋₁)` of the ω = 1/2 model.
pub fn analytic_populations_w05(k: f64, lambda: f64, t: f64) -> (f64, f64, f64) {
    populations(EffectiveCouplings::first_order(k, lambda), t)
}

fn populations(c: EffectiveCouplings, t: f64) -> (f64, f64, f64) {
    let (s, co) = rabi_factors(c.rabi, t);
    let s2 = s.norm_sqr();
    (
        c.gamma_minus.powi(2) * s2,
        co.norm_sqr(),
        c.gamma_plus.powi(2) * s2,
    )
}

/// `I(t) = -2(Γ₊²-Γ₋²) / [(Γ₊²+Γ₋²) + Ω² cot²(Ωt)]`, written with
/// `sin(Ωt)/Ω` so the zeros of `sin` give 0 rather than a singularity.
pub fn analytic_current_w1(k: f64, lambda: f64, t: f64) -> f64 {
    let c = EffectiveCouplings::second_order(k, lambda);
    let (s, co) = rabi_factors(c.rabi, t);
    let (gp2, gm2) = (c.gamma_plus.powi(2), c.gamma_minus.powi(2));
    let s2 = s.norm_sqr();
    let den = (gp2 + gm2) * s2 + co.norm_sqr();
    if den == 0.0 {
        0.0
    } else {
        -2.0 * (gp2 - gm2) * s2 / den
    }
}

/// `I′(t) = -(Γ′₊²-Γ′₋²) / [(Γ′₊²+Γ′₋²) + |Ω′²| |cot(Ω′t)|²]`; for λ > 1 the
/// argument is imaginary and the cotangent becomes a hyperbolic one.
pub fn analytic_current_w05(k: f64, lambda: f64, t: f64) -> f64 {
    let c = EffectiveCouplings::first_order(k, lambda);
    let (gp2, gm2) = (c.gamma_plus.powi(2), c.gamma_minus.powi(2));
    let z = c.rabi * t;
    if t == 0.0 {
        return 0.0;
    }
    // |C|²/|S|² = |Ω′|²|cot(Ω′t)|², evaluated without overflow.
    let ratio = if z.norm() < 1e-4 {
        let (s, co) = rabi_factors(c.rabi, t);
        co.norm_sqr() / s.norm_sqr()
    } else if z.im.abs() > 20.0 {
        c.rabi.norm_sqr()
    } else {
        let s = z.sin();
        if s.norm() == 0.0 {
            return 0.0;
        }
        c.rabi.norm_sqr() * (z.cos() / s).norm_sqr()
    };
    -(gp2 - gm2) / ((gp2 + gm2) + ratio)
}

pub fn analytic_current(k: f64, lambda: f64, resonance: Resonance, t: f64) -> f64 {
    match resonance {
        Resonance::Half => analytic_current_w05(k, lambda, t),
        Resonance::One => analytic_current_w1(k, lambda, t),
    }
}

/// Period `π/|Ω|` of the analytic current; `None` when Ω is imaginary or zero.
pub fn rabi_period(k: f64, lambda: f64, resonance: Resonance) -> Option<f64> {
    let c = EffectiveCouplings::for_resonance(k, lambda, resonance);
    (c.rabi.im == 0.0 && c.rabi.re > 0.0).then(|| std::f64::consts::PI / c.rabi.re)
}

/// Trapezoidal time average of the analytic current on `samples + 1` points.
pub fn analytic_tac(k: f64, lambda: f64, resonance: Resonance, t_max: f64, samples: usize) -> f64 {
    let samples = samples.max(1);
    let h = t_max / samples as f64;
    let times: Vec<f64> = (0..=samples).map(|i| i as f64 * h).collect();
    let cur: Vec<f64> = times
        .iter()
        .map(|&t| analytic_current(k, lambda, resonance, t))
        .collect();
    crate::observables::trapezoid(&times, &cur) / t_max
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpSolution {
    pub c_minus1: C64,
    pub c0: C64,
    pub c1: C64,
    /// Leading-order `1 + K²t²/4`.
    pub norm_squared: f64,
    /// `-1 / (1 + 4/(K²t²))`.
    pub current: f64,
}

/// Weak-drive solution at λ = 1, ω = 1/2 from `|0⟩`.
pub fn ep_analytic_solution(k: f64, t: f64) -> EpSolution {
    let c_minus1 = C64::new(0.0, 0.5 * k * t) * C64::from_polar(1.0, -0.5 * t)
        - C64::new(0.0, k * (0.5 * t).sin());
    let kt2 = k * k * t * t;
    EpSolution {
        c_minus1,
        c0: C64::new(1.0, 0.0),
        c1: C64::new(0.0, 0.0),
        norm_squared: 1.0 + 0.25 * kt2,
        current: if kt2 == 0.0 {
            0.0
        } else {
            -1.0 / (1.0 + 4.0 / kt2)
        },
    }
}

/// Integrates `i da/dt = T a` from `a = (0, 1, 0)` with exact step
/// exponentials, sampling every `dt`. The basis order of `resonance` sets
/// the momentum weights of the current.
pub fn three_level_ode_evolve(
    t_matrix: &Mat<C64>,
    resonance: Resonance,
    t_max: f64,
    dt: f64,
) -> Result<TimeSeries> {
    if t_matrix.nrows() != 3 || t_matrix.ncols() != 3 {
        return Err(Error::SizeMismatch {
            expected: 3,
            got: t_matrix.nrows(),
        });
    }
    if !(t_max > 0.0 && dt > 0.0) {
        return Err(Error::InvalidParameter("need t_max > 0 and dt > 0".into()));
    }
    let step = expm(Mat::from_fn(3, 3, |i, j| t_matrix[(i, j)] * C64::new(0.0, -dt)).as_ref());
    let period = 2.0 * std::f64::consts::PI / resonance.omega();
    let spp = ((period / dt).round() as usize).max(1);
    let n = (t_max / dt + 1e-9).floor() as usize;
    let mut rec = Recorder::new(resonance.momenta().to_vec(), period, spp, true, n + 1);
    let mut a = faer::Col::<C64>::from_fn(3, |i| C64::new(if i == 1 { 1.0 } else { 0.0 }, 0.0));
    let mut offset = 0.0;
    rec.push(0.0, a.as_ref(), offset)?;
    for i in 1..=n {
        a = &step * &a;
        let n2: f64 = a.iter().map(|c| c.norm_sqr()).sum();
        if !n2.is_finite() {
            return Err(Error::NonFinite {
                time: i as f64 * dt,
            });
        }
        rec.push(i as f64 * dt, a.as_ref(), offset)?;
        if !(1e-100..=1e100).contains(&n2) {
            a *= faer::Scale(C64::new(1.0 / n2.sqrt(), 0.0));
            offset += n2.ln();
        }
    }
    Ok(rec.finish(f64::INFINITY))
}
