//! Model parameters, momentum-ladder states and the Hamiltonian
//! `H(t) = p²/2 + K (sin x + iλ cos x) sin(ωt + φ)` in the basis `|n⟩`.

use std::f64::consts::PI;

use faer::Mat;

use crate::error::{Error, Result};
use crate::C64;

/// Physical parameters of the drive.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DriveParams {
    pub k: f64,
    pub lambda: f64,
    pub omega: f64,
    pub phi: f64,
    /// Nonlinear strength; only the position-grid solver reads it.
    pub g: f64,
}

impl DriveParams {
    pub fn new(k: f64, lambda: f64, omega: f64) -> Result<Self> {
        let p = Self {
            k,
            lambda,
            omega,
            phi: 0.0,
            g: 0.0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_phi(mut self, phi: f64) -> Self {
        self.phi = phi;
        self
    }

    pub fn with_g(mut self, g: f64) -> Self {
        self.g = g;
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Result<Self> {
        self.lambda = lambda;
        self.validate()?;
        Ok(self)
    }

    pub fn with_omega(mut self, omega: f64) -> Result<Self> {
        self.omega = omega;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(what.to_string()));
        if !(self.omega.is_finite() && self.omega > 0.0) {
            return bad("omega must be finite and > 0");
        }
        if !(self.k.is_finite() && self.k >= 0.0) {
            return bad("K must be finite and >= 0");
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return bad("lambda must be finite and >= 0");
        }
        if !self.phi.is_finite() || !self.g.is_finite() {
            return bad("phi and g must be finite");
        }
        Ok(())
    }

    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega
    }

    /// Drive envelope `sin(ωt + φ)`.
    pub fn drive(&self, t: f64) -> f64 {
        (self.omega * t + self.phi).sin()
    }

    pub fn couplings(&self) -> CouplingPair {
        CouplingPair::from_lambda(self.lambda)
    }

    /// Coefficients `(a₊, a₋)` with `H[n,n+1] = i a₊ s(t)` and `H[n,n-1] = i a₋ s(t)`.
    pub fn hopping(&self) -> (f64, f64) {
        let c = self.couplings();
        (0.5 * self.k * c.lambda_plus, 0.5 * self.k * c.lambda_minus)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CouplingPair {
    pub lambda_plus: f64,
    pub lambda_minus: f64,
}

impl CouplingPair {
    pub fn from_lambda(lambda: f64) -> Self {
        Self {
            lambda_plus: lambda + 1.0,
            lambda_minus: lambda - 1.0,
        }
    }
}

/// Amplitudes `c_n` for `n = -M..=M`, stored at index `n + M`.
///
/// `log_norm_offset` holds `ln` of the squared norm divided out by
/// renormalization, so the physical squared norm is
/// `exp(log_norm_offset) * Σ|c_n|²`.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentumState {
    pub amplitudes: Vec<C64>,
    pub truncation: usize,
    pub time: f64,
    pub log_norm_offset: f64,
}

impl MomentumState {
    pub fn from_amplitudes(truncation: usize, amplitudes: Vec<C64>) -> Result<Self> {
        check_truncation(truncation)?;
        let expected = 2 * truncation + 1;
        if amplitudes.len() != expected {
            return Err(Error::SizeMismatch {
                expected,
                got: amplitudes.len(),
            });
        }
        Ok(Self {
            amplitudes,
            truncation,
            time: 0.0,
            log_norm_offset: 0.0,
        })
    }

    /// The plane wave `|n⟩`.
    pub fn basis(truncation: usize, n: i64) -> Result<Self> {
        check_truncation(truncation)?;
        let m = truncation as i64;
        if n.abs() > m {
            return Err(Error::InvalidParameter(format!(
                "momentum {n} outside [-{m}, {m}]"
            )));
        }
        let mut amps = vec![C64::new(0.0, 0.0); 2 * truncation + 1];
        amps[(n + m) as usize] = C64::new(1.0, 0.0);
        Self::from_amplitudes(truncation, amps)
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn momentum(&self, index: usize) -> i64 {
        index as i64 - self.truncation as i64
    }

    pub fn index_of(&self, n: i64) -> Option<usize> {
        let i = n + self.truncation as i64;
        (0..self.dim() as i64).contains(&i).then_some(i as usize)
    }

    pub fn amplitude(&self, n: i64) -> C64 {
        self.index_of(n)
            .map_or(C64::new(0.0, 0.0), |i| self.amplitudes[i])
    }

    /// Σ|c_n|² of the stored amplitudes (ignores the renormalization offset).
    pub fn stored_norm_squared(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum()
    }

    /// `ln N` including everything removed by earlier renormalizations.
    pub fn log_norm(&self) -> f64 {
        self.stored_norm_squared().ln() + self.log_norm_offset
    }

    /// Rescales to unit stored norm, moving the removed factor into the offset.
    pub fn renormalize(&mut self) -> Result<()> {
        let n2 = self.stored_norm_squared();
        if n2 == 0.0 {
            return Err(Error::ZeroNorm);
        }
        if !n2.is_finite() {
            return Err(Error::NonFinite { time: self.time });
        }
        let s = 1.0 / n2.sqrt();
        self.amplitudes.iter_mut().for_each(|c| *c *= s);
        self.log_norm_offset += n2.ln();
        Ok(())
    }

    /// Normalized probabilities `|c_n|² / Σ|c|²`.
    pub fn probabilities(&self) -> Vec<f64> {
        probabilities(&self.amplitudes)
    }

    /// Image under `n → -n`.
    pub fn reflected(&self) -> Self {
        let mut out = self.clone();
        out.amplitudes.reverse();
        out
    }

    /// Population fraction carried by the two outermost shells `|n| ∈ {M-1, M}`.
    pub fn boundary_population(&self) -> f64 {
        boundary_fraction(&self.amplitudes, self.truncation)
    }
}

pub(crate) fn check_truncation(m: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::InvalidParameter("truncation M must be >= 1".into()));
    }
    Ok(())
}

pub(crate) fn probabilities(amps: &[C64]) -> Vec<f64> {
    let total: f64 = amps.iter().map(|c| c.norm_sqr()).sum();
    amps.iter().map(|c| c.norm_sqr() / total).collect()
}

pub(crate) fn boundary_fraction(amps: &[C64], m: usize) -> f64 {
    let total: f64 = amps.iter().map(|c| c.norm_sqr()).sum();
    if total == 0.0 {
        return 0.0;
    }
    let d = amps.len();
    let edge: f64 = if m == 1 {
        total
    } else {
        [0, 1, d - 2, d - 1]
            .iter()
            .map(|&i| amps[i].norm_sqr())
            .sum()
    };
    edge / total
}

/// `|0⟩` on a ladder of size `2M+1`.
pub fn initial_state_zero_momentum(truncation: usize) -> Result<MomentumState> {
    MomentumState::basis(truncation, 0)
}

/// Dense `H(t)` of dimension `2M+1`.
pub fn hamiltonian_matrix(params: &DriveParams, t: f64, truncation: usize) -> Mat<C64> {
    let d = 2 * truncation + 1;
    let m = truncation as i64;
    let s = params.drive(t);
    let (ap, am) = params.hopping();
    let up = C64::new(0.0, ap * s);
    let down = C64::new(0.0, am * s);
    Mat::from_fn(d, d, |i, j| {
        if i == j {
            let n = (i as i64 - m) as f64;
            C64::new(0.5 * n * n, 0.0)
        } else if j == i + 1 {
            up
        } else if i == j + 1 {
            down
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// `H(t)·c` without forming the matrix.
pub fn apply_hamiltonian(state: &MomentumState, params: &DriveParams, t: f64) -> Vec<C64> {
    let c = &state.amplitudes;
    let d = c.len();
    let m = state.truncation as i64;
    let s = params.drive(t);
    let (ap, am) = params.hopping();
    let up = C64::new(0.0, ap * s);
    let down = C64::new(0.0, am * s);
    (0..d)
        .map(|i| {
            let n = (i as i64 - m) as f64;
            let mut v = c[i] * (0.5 * n * n);
            if i + 1 < d {
                v += up * c[i + 1];
            }
            if i > 0 {
                v += down * c[i - 1];
            }
            v
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation_rejects_bad_params() {
        assert!(DriveParams::new(0.1, 0.5, 0.0).is_err());
        assert!(DriveParams::new(-0.1, 0.5, 1.0).is_err());
        assert!(DriveParams::new(0.1, -0.5, 1.0).is_err());
        assert!(DriveParams::new(0.1, 0.5, f64::NAN).is_err());
        assert!(DriveParams::new(0.1, 0.5, 1.0).is_ok());
    }

    #[test]
    fn coupling_pair_differs_by_two() {
        for l in [0.0, 0.3, 1.0, 6.34] {
            let c = CouplingPair::from_lambda(l);
            assert_eq!(c.lambda_plus - c.lambda_minus, 2.0);
        }
    }

    #[test]
    fn initial_state_layout() {
        let s = initial_state_zero_momentum(2).unwrap();
        let re: Vec<f64> = s.amplitudes.iter().map(|c| c.re).collect();
        assert_eq!(re, vec![0.0, 0.0, 1.0, 0.0, 0.0]);
        let s1 = initial_state_zero_momentum(1).unwrap();
        assert_eq!(s1.dim(), 3);
        assert_eq!(s1.amplitude(0), C64::new(1.0, 0.0));
        assert!(initial_state_zero_momentum(0).is_err());
    }

    #[test]
    fn zero_drive_is_diagonal() {
        let p = DriveParams::new(0.0, 0.7, 1.0).unwrap();
        let h = hamiltonian_matrix(&p, 0.3, 3);
        for i in 0..7 {
            for j in 0..7 {
                let n = i as f64 - 3.0;
                let want = if i == j { 0.5 * n * n } else { 0.0 };
                assert_eq!(h[(i, j)], C64::new(want, 0.0));
            }
        }
    }

    #[test]
    fn ep_matrix_has_zero_subdiagonal() {
        let p = DriveParams::new(0.01, 1.0, 0.5).unwrap();
        let t = 0.9;
        let h = hamiltonian_matrix(&p, t, 1);
        let s = (0.5f64 * t).sin();
        assert_eq!(h[(1, 0)], C64::new(0.0, 0.0));
        assert_eq!(h[(2, 1)], C64::new(0.0, 0.0));
        assert!((h[(0, 1)] - C64::new(0.0, 0.01 * s)).norm() < 1e-16);
        assert!((h[(1, 2)] - C64::new(0.0, 0.01 * s)).norm() < 1e-16);
        assert_eq!(h[(0, 0)].re, 0.5);
        assert_eq!(h[(2, 2)].re, 0.5);
        assert_eq!(h[(0, 2)], C64::new(0.0, 0.0));
    }

    #[test]
    fn apply_on_zero_momentum() {
        let s = initial_state_zero_momentum(3).unwrap();
        let p = DriveParams::new(0.0, 0.4, 1.0).unwrap();
        assert!(apply_hamiltonian(&s, &p, 1.0)
            .iter()
            .all(|v| v.norm() == 0.0));

        let p = DriveParams::new(0.3, 1.0, 1.0).unwrap();
        let out = apply_hamiltonian(&s, &p, 1.0);
        for (i, v) in out.iter().enumerate() {
            let n = i as i64 - 3;
            assert_eq!(v.norm() > 0.0, n == -1, "n = {n}");
        }
    }

    #[test]
    fn renormalize_tracks_offset() {
        let amps = vec![C64::new(3.0, 0.0), C64::new(0.0, 4.0), C64::new(0.0, 0.0)];
        let mut s = MomentumState::from_amplitudes(1, amps).unwrap();
        let before = s.log_norm();
        s.renormalize().unwrap();
        assert!((s.stored_norm_squared() - 1.0).abs() < 1e-15);
        assert!((s.log_norm() - before).abs() < 1e-14);
        assert!((before - 25f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn size_mismatch_is_reported() {
        let err = MomentumState::from_amplitudes(2, vec![C64::new(1.0, 0.0); 4]).unwrap_err();
        assert_eq!(
            err,
            Error::SizeMismatch {
                expected: 5,
                got: 4
            }
        );
    }
}
