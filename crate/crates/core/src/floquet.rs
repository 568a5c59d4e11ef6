//! Floquet spectra of `U(T, 0)`: quasienergies, PT-breaking measure ξ,
//! thresholds, state classification, exceptional-point evidence and the
//! broken-phase dominant states.

use faer::linalg::solvers::{DenseSolveCore, Solve};
use faer::Mat;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{probabilities, DriveParams, MomentumState};
use crate::observables::mean_momentum;
use crate::propagation::{one_period_propagator, PropagatorConfig};
use crate::C64;

/// Imaginary parts below this are treated as numerically zero.
pub const UNBROKEN_FLOOR: f64 = 1e-9;
/// Profile L1 distance below which two distributions count as equal.
pub const PROFILE_TOL: f64 = 1e-6;
pub const DEFAULT_DEGENERACY_TOL: f64 = 1e-6;
pub const DEFAULT_EP_OVERLAP_TOL: f64 = 1e-3;

#[derive(Clone, Debug)]
pub struct FloquetSpectrum {
    /// `ε = ε^r + iε^i` with `ε^r ∈ [-ω/2, ω/2)`.
    pub quasienergies: Vec<C64>,
    /// Eigenvalues `μ = e^{-iεT}` of `U`.
    pub multipliers: Vec<C64>,
    /// Unit-norm right eigenvectors as columns, aligned with `quasienergies`.
    pub modes: Mat<C64>,
    pub omega: f64,
    pub truncation: usize,
}

impl FloquetSpectrum {
    pub fn len(&self) -> usize {
        self.quasienergies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.quasienergies.is_empty()
    }

    pub fn period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.omega
    }

    pub fn mode(&self, alpha: usize) -> Vec<C64> {
        self.modes.col(alpha).iter().copied().collect()
    }

    pub fn profile(&self, alpha: usize) -> Vec<f64> {
        probabilities(&self.mode(alpha))
    }

    pub fn mean_momentum(&self, alpha: usize) -> f64 {
        mean_momentum(&self.mode(alpha)).unwrap_or(0.0)
    }

    /// Distance between two quasienergies with the real part taken modulo ω.
    pub fn distance(&self, a: usize, b: usize) -> f64 {
        quasienergy_distance(self.quasienergies[a], self.quasienergies[b], self.omega)
    }
}

/// Folds `x` into `[-ω/2, ω/2)`.
pub fn fold(x: f64, omega: f64) -> f64 {
    let r = x - omega * ((x + 0.5 * omega) / omega).floor();
    if r >= 0.5 * omega {
        r - omega
    } else if r < -0.5 * omega {
        r + omega
    } else {
        r
    }
}

pub fn quasienergy_distance(a: C64, b: C64, omega: f64) -> f64 {
    C64::new(fold(a.re - b.re, omega), a.im - b.im).norm()
}

/// Diagonalizes `U` and maps eigenvalues to quasienergies
/// `ε = (i/T) Log μ`, with `ε^i = ln|μ| / T`.
pub fn floquet_spectrum(u: &Mat<C64>, omega: f64) -> Result<FloquetSpectrum> {
    let n = u.nrows();
    if n != u.ncols() || n == 0 {
        return Err(Error::SizeMismatch {
            expected: n,
            got: u.ncols(),
        });
    }
    if !(omega > 0.0) {
        return Err(Error::InvalidParameter("omega must be > 0".into()));
    }
    let evd = u
        .eigen()
        .map_err(|e| Error::EigenFailure(format!("{e:?}")))?;
    let period = 2.0 * std::f64::consts::PI / omega;
    let values = evd.S().column_vector();
    let vectors = evd.U();

    let mut order: Vec<(C64, C64, usize)> = Vec::with_capacity(n);
    for j in 0..n {
        let mu = values[j];
        if !(mu.norm() > 0.0) || !mu.is_finite() {
            return Err(Error::EigenFailure(format!(
                "eigenvalue {mu} has no logarithm"
            )));
        }
        let eps = C64::new(fold(-mu.arg() / period, omega), mu.norm().ln() / period);
        order.push((eps, mu, j));
    }
    order.sort_by(|a, b| {
        a.0.re
            .total_cmp(&b.0.re)
            .then(a.0.im.total_cmp(&b.0.im))
            .then(a.2.cmp(&b.2))
    });

    let mut modes = Mat::<C64>::zeros(n, n);
    for (k, &(_, _, j)) in order.iter().enumerate() {
        let norm = vectors.col(j).norm_l2();
        for i in 0..n {
            modes[(i, k)] = vectors[(i, j)] / norm;
        }
    }
    Ok(FloquetSpectrum {
        quasienergies: order.iter().map(|o| o.0).collect(),
        multipliers: order.iter().map(|o| o.1).collect(),
        modes,
        omega,
        truncation: (n - 1) / 2,
    })
}

/// Spectrum of the Floquet operator for `params` on `2M+1` modes.
pub fn spectrum_for(
    params: &DriveParams,
    truncation: usize,
    cfg: &PropagatorConfig,
) -> Result<FloquetSpectrum> {
    let u = one_period_propagator(params, truncation, cfg)?;
    floquet_spectrum(&u, params.omega)
}

/// `ξ = Σ_α |ε_α^i|`.
pub fn imag_sum_xi(spec: &FloquetSpectrum) -> f64 {
    spec.quasienergies.iter().map(|e| e.im.abs()).sum()
}

pub fn xi_for(params: &DriveParams, truncation: usize, cfg: &PropagatorConfig) -> Result<f64> {
    Ok(imag_sum_xi(&spectrum_for(params, truncation, cfg)?))
}

/// `Φ diag(μ) Φ⁻¹`.
pub fn reconstruct(spec: &FloquetSpectrum) -> Mat<C64> {
    let n = spec.len();
    let scaled = Mat::from_fn(n, n, |i, j| spec.modes[(i, j)] * spec.multipliers[j]);
    let inv = spec.modes.partial_piv_lu().inverse();
    &scaled * &inv
}

/// 2-norm condition number of the mode matrix.
pub fn condition_number(spec: &FloquetSpectrum) -> f64 {
    match spec.modes.singular_values() {
        Ok(s) => {
            let max = s.iter().cloned().fold(0.0, f64::max);
            let min = s.iter().cloned().fold(f64::INFINITY, f64::min);
            if min == 0.0 {
                f64::INFINITY
            } else {
                max / min
            }
        }
        Err(_) => f64::INFINITY,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Projection {
    /// `C_α = ⟨φ_α|ψ⟩`.
    Plain,
    /// Coefficients of the exact expansion `ψ = Σ C_α φ_α` (left eigenvectors).
    Biorthogonal,
}

pub fn expansion_coefficients(
    spec: &FloquetSpectrum,
    state: &MomentumState,
    mode: Projection,
) -> Result<Vec<C64>> {
    if state.dim() != spec.len() {
        return Err(Error::SizeMismatch {
            expected: spec.len(),
            got: state.dim(),
        });
    }
    let psi = Mat::from_fn(state.dim(), 1, |i, _| state.amplitudes[i]);
    let c = match mode {
        Projection::Plain => spec.modes.adjoint() * &psi,
        Projection::Biorthogonal => spec.modes.partial_piv_lu().solve(&psi),
    };
    Ok((0..spec.len()).map(|i| c[(i, 0)]).collect())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThresholdSearch {
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    pub xi_tol: f64,
    pub resolution: f64,
    pub truncation: usize,
}

impl ThresholdSearch {
    pub fn new(lambda_lo: f64, lambda_hi: f64) -> Self {
        Self {
            lambda_lo,
            lambda_hi,
            xi_tol: 1e-6,
            resolution: 1e-3,
            truncation: 255,
        }
    }
}

/// Bisection for the smallest λ with `ξ(λ) > xi_tol`; returns the midpoint
/// of the final bracket.
pub fn pt_threshold(
    base: &DriveParams,
    search: &ThresholdSearch,
    cfg: &PropagatorConfig,
) -> Result<f64> {
    if !(search.lambda_hi > search.lambda_lo && search.resolution > 0.0) {
        return Err(Error::InvalidParameter(
            "need lambda_hi > lambda_lo and resolution > 0".into(),
        ));
    }
    let xi = |l: f64| -> Result<f64> { xi_for(&base.with_lambda(l)?, search.truncation, cfg) };
    let ends: Vec<Result<f64>> = [search.lambda_lo, search.lambda_hi]
        .par_iter()
        .map(|&l| xi(l))
        .collect();
    let (f_lo, f_hi) = (ends[0].clone()?, ends[1].clone()?);
    if !(f_lo <= search.xi_tol && f_hi > search.xi_tol) {
        return Err(Error::BracketFailure {
            lo: search.lambda_lo,
            hi: search.lambda_hi,
            f_lo,
            f_hi,
            tol: search.xi_tol,
        });
    }
    let (mut lo, mut hi) = (search.lambda_lo, search.lambda_hi);
    while hi - lo > search.resolution {
        let mid = 0.5 * (lo + hi);
        if xi(mid)? > search.xi_tol {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StateTag {
    DegenerateSameDistribution,
    DegenerateSymmetricPair,
    /// Degenerate, but the partner matches neither profile test.
    DegenerateOther,
    NondegenerateAsymmetric,
    NondegenerateSymmetric,
}

impl StateTag {
    pub fn is_degenerate(self) -> bool {
        matches!(
            self,
            StateTag::DegenerateSameDistribution
                | StateTag::DegenerateSymmetricPair
                | StateTag::DegenerateOther
        )
    }

    pub fn label(self) -> &'static str {
        match self {
            StateTag::DegenerateSameDistribution => "degenerate-same-distribution",
            StateTag::DegenerateSymmetricPair => "degenerate-symmetric-pair",
            StateTag::DegenerateOther => "degenerate-other",
            StateTag::NondegenerateAsymmetric => "nondegenerate-asymmetric",
            StateTag::NondegenerateSymmetric => "nondegenerate-symmetric",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StateClass {
    pub tag: StateTag,
    pub partner_index: Option<usize>,
    pub mean_momentum: f64,
    /// `|⟨φ_α|χ⟩| / ‖χ‖` for the reference state `χ`.
    pub overlap: f64,
}

fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

fn l1_reflected(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b.iter().rev())
        .map(|(x, y)| (x - y).abs())
        .sum()
}

/// Groups indices into clusters of (transitively) degenerate quasienergies.
fn degenerate_clusters(spec: &FloquetSpectrum, tol: f64) -> Vec<Vec<usize>> {
    let n = spec.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for a in 0..n {
        for b in a + 1..n {
            if spec.distance(a, b) < tol {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    parent[rb.max(ra)] = rb.min(ra);
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    groups.into_values().collect()
}

/// Orthonormal basis of a cluster's span by modified Gram-Schmidt; vectors
/// that are numerically dependent on earlier ones are left unchanged.
fn orthonormalize(vectors: &mut [Vec<C64>]) {
    let mut basis: Vec<Vec<C64>> = Vec::new();
    for v in vectors.iter_mut() {
        let mut w = v.clone();
        for q in &basis {
            let proj: C64 = q.iter().zip(&w).map(|(a, b)| a.conj() * b).sum();
            w.iter_mut().zip(q).for_each(|(x, y)| *x -= proj * y);
        }
        let norm = w.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-8 {
            w.iter_mut().for_each(|c| *c /= norm);
            *v = w.clone();
            basis.push(w);
        }
    }
}

pub fn classify_floquet_states(
    spec: &FloquetSpectrum,
    degeneracy_tol: f64,
    overlap_state: &MomentumState,
) -> Vec<StateClass> {
    let n = spec.len();
    let mut vectors: Vec<Vec<C64>> = (0..n).map(|a| spec.mode(a)).collect();
    let clusters = degenerate_clusters(spec, degeneracy_tol);
    if clusters.iter().any(|c| c.len() > 1) && condition_number(spec) > 1e8 {
        for c in clusters.iter().filter(|c| c.len() > 1) {
            let mut block: Vec<Vec<C64>> = c.iter().map(|&a| vectors[a].clone()).collect();
            orthonormalize(&mut block);
            for (&a, v) in c.iter().zip(block) {
                vectors[a] = v;
            }
        }
    }
    let profiles: Vec<Vec<f64>> = vectors.iter().map(|v| probabilities(v)).collect();
    let chi_norm = overlap_state.stored_norm_squared().sqrt();
    let mut cluster_of = vec![0usize; n];
    for (k, c) in clusters.iter().enumerate() {
        for &a in c {
            cluster_of[a] = k;
        }
    }

    (0..n)
        .map(|a| {
            let overlap = if chi_norm > 0.0 && overlap_state.dim() == n {
                let ip: C64 = vectors[a]
                    .iter()
                    .zip(&overlap_state.amplitudes)
                    .map(|(p, c)| p.conj() * c)
                    .sum();
                ip.norm() / chi_norm
            } else {
                0.0
            };
            let mean = mean_momentum(&vectors[a]).unwrap_or(0.0);
            let partner = clusters[cluster_of[a]]
                .iter()
                .filter(|&&b| b != a)
                .map(|&b| {
                    let same = l1(&profiles[a], &profiles[b]);
                    let refl = l1_reflected(&profiles[a], &profiles[b]);
                    (b, same, refl)
                })
                .min_by(|x, y| x.1.min(x.2).total_cmp(&y.1.min(y.2)));
            let (tag, partner_index) = match partner {
                Some((b, same, refl)) => {
                    let tag = if same < PROFILE_TOL {
                        StateTag::DegenerateSameDistribution
                    } else if refl < PROFILE_TOL {
                        StateTag::DegenerateSymmetricPair
                    } else {
                        StateTag::DegenerateOther
                    };
                    (tag, Some(b))
                }
                None => {
                    let tag = if l1_reflected(&profiles[a], &profiles[a]) < PROFILE_TOL {
                        StateTag::NondegenerateSymmetric
                    } else {
                        StateTag::NondegenerateAsymmetric
                    };
                    (tag, None)
                }
            };
            StateClass {
                tag,
                partner_index,
                mean_momentum: mean,
                overlap,
            }
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpEvidence {
    pub eigenvalue_gap: f64,
    pub eigenvector_overlap: f64,
    pub indices: (usize, usize),
    pub quasienergies: (C64, C64),
    pub is_ep: bool,
}

fn overlap_of(spec: &FloquetSpectrum, a: usize, b: usize) -> f64 {
    let ip: C64 = spec
        .modes
        .col(a)
        .iter()
        .zip(spec.modes.col(b).iter())
        .map(|(x, y)| x.conj() * y)
        .sum();
    ip.norm()
}

/// Evidence for the closest quasienergy pair of a spectrum (ties broken by
/// the larger eigenvector overlap).
pub fn ep_evidence(spec: &FloquetSpectrum, degeneracy_tol: f64) -> Option<EpEvidence> {
    let n = spec.len();
    let mut best: Option<(f64, f64, usize, usize)> = None;
    for a in 0..n {
        for b in a + 1..n {
            let gap = spec.distance(a, b);
            let better = match best {
                None => true,
                Some((g, o, _, _)) => {
                    gap < g - 1e-14 || (gap <= g + 1e-14 && overlap_of(spec, a, b) > o)
                }
            };
            if better {
                best = Some((gap, overlap_of(spec, a, b), a, b));
            }
        }
    }
    best.map(|(gap, ov, a, b)| EpEvidence {
        eigenvalue_gap: gap,
        eigenvector_overlap: ov,
        indices: (a, b),
        quasienergies: (spec.quasienergies[a], spec.quasienergies[b]),
        is_ep: gap < degeneracy_tol && ov > 1.0 - degeneracy_tol,
    })
}

pub fn detect_ep(
    params: &DriveParams,
    truncation: usize,
    cfg: &PropagatorConfig,
    degeneracy_tol: f64,
) -> Result<EpEvidence> {
    let spec = spectrum_for(params, truncation, cfg)?;
    ep_evidence(&spec, degeneracy_tol).ok_or(Error::InvalidParameter(
        "spectrum has fewer than two states".into(),
    ))
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpPair {
    pub indices: (usize, usize),
    pub gap: f64,
    pub overlap: f64,
    /// Mean of the two quasienergies.
    pub quasienergy: C64,
    pub mean_momentum: f64,
    /// `|⟨φ|χ⟩|` for the reference state, maximized over the pair.
    pub reference_overlap: f64,
}

/// All disjoint pairs with gap `< gap_tol` and overlap `> 1 - overlap_tol`,
/// greedily matched by decreasing overlap.
pub fn ep_pairs(
    spec: &FloquetSpectrum,
    gap_tol: f64,
    overlap_tol: f64,
    reference: &MomentumState,
) -> Vec<EpPair> {
    let n = spec.len();
    let mut cands = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            let gap = spec.distance(a, b);
            if gap < gap_tol {
                let ov = overlap_of(spec, a, b);
                if ov > 1.0 - overlap_tol {
                    cands.push((ov, gap, a, b));
                }
            }
        }
    }
    cands.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.2.cmp(&y.2)).then(x.3.cmp(&y.3)));
    let ref_overlap = |a: usize| -> f64 {
        if reference.dim() != n {
            return 0.0;
        }
        let ip: C64 = spec
            .modes
            .col(a)
            .iter()
            .zip(&reference.amplitudes)
            .map(|(x, y)| x.conj() * y)
            .sum();
        ip.norm() / reference.stored_norm_squared().sqrt()
    };
    let mut used = vec![false; n];
    let mut out = Vec::new();
    for (ov, gap, a, b) in cands {
        if used[a] || used[b] {
            continue;
        }
        used[a] = true;
        used[b] = true;
        let qa = spec.quasienergies[a];
        let qb = spec.quasienergies[b];
        let re = fold(qa.re + 0.5 * fold(qb.re - qa.re, spec.omega), spec.omega);
        out.push(EpPair {
            indices: (a, b),
            gap,
            overlap: ov,
            quasienergy: C64::new(re, 0.5 * (qa.im + qb.im)),
            mean_momentum: spec.mean_momentum(a),
            reference_overlap: ref_overlap(a).max(ref_overlap(b)),
        });
    }
    out
}

/// Coalesced pairs describing the same state, merged.
#[derive(Clone, Debug, PartialEq)]
pub struct EpCluster {
    pub pairs: Vec<EpPair>,
    pub quasienergy: C64,
    pub mean_momentum: f64,
    pub max_gap: f64,
    pub min_overlap: f64,
}

/// Groups [`ep_pairs`] whose eigenvectors coincide (overlap `> 1 - overlap_tol`)
/// at the same quasienergy, ordered by `|mean momentum|`.
pub fn ep_clusters(
    spec: &FloquetSpectrum,
    gap_tol: f64,
    overlap_tol: f64,
    reference: &MomentumState,
) -> Vec<EpCluster> {
    let pairs = ep_pairs(spec, gap_tol, overlap_tol, reference);
    let mut clusters: Vec<EpCluster> = Vec::new();
    for p in pairs {
        let a = p.indices.0;
        let home = clusters.iter_mut().find(|c| {
            let b = c.pairs[0].indices.0;
            spec.distance(a, b) < gap_tol && overlap_of(spec, a, b) > 1.0 - overlap_tol
        });
        match home {
            Some(c) => {
                c.max_gap = c.max_gap.max(p.gap);
                c.min_overlap = c.min_overlap.min(p.overlap);
                c.pairs.push(p);
            }
            None => clusters.push(EpCluster {
                quasienergy: p.quasienergy,
                mean_momentum: p.mean_momentum,
                max_gap: p.gap,
                min_overlap: p.overlap,
                pairs: vec![p],
            }),
        }
    }
    clusters.sort_by(|x, y| x.mean_momentum.abs().total_cmp(&y.mean_momentum.abs()));
    clusters
}

#[derive(Clone, Debug, PartialEq)]
pub struct DominantStates {
    pub indices: Vec<usize>,
    pub max_imag: f64,
    /// False when `max ε^i` is at the numerical floor (unbroken phase).
    pub broken: bool,
}

/// States whose `ε^i` lies within `degeneracy_tol` of the maximum.
pub fn dominant_floquet_state(spec: &FloquetSpectrum, degeneracy_tol: f64) -> DominantStates {
    let max_imag = spec
        .quasienergies
        .iter()
        .map(|e| e.im)
        .fold(f64::NEG_INFINITY, f64::max);
    let indices = (0..spec.len())
        .filter(|&a| spec.quasienergies[a].im >= max_imag - degeneracy_tol)
        .collect();
    DominantStates {
        indices,
        max_imag,
        broken: max_imag > UNBROKEN_FLOOR,
    }
}

/// Eigenvector for the multiplier with the largest `ε^i`, computed as the
/// null vector of `U - μ`. Unlike a column of the mode matrix it stays well
/// defined when the top pair has coalesced and the eigensolver's basis for
/// that pair is arbitrary.
pub fn dominant_eigenvector(u: &Mat<C64>, spec: &FloquetSpectrum) -> Result<Vec<C64>> {
    let n = spec.len();
    if u.nrows() != n || u.ncols() != n || n == 0 {
        return Err(Error::SizeMismatch {
            expected: n,
            got: u.nrows(),
        });
    }
    let top = (0..n)
        .max_by(|&a, &b| {
            spec.quasienergies[a]
                .im
                .total_cmp(&spec.quasienergies[b].im)
                .then(b.cmp(&a))
        })
        .expect("non-empty spectrum");
    let mu = spec.multipliers[top];
    let shifted = Mat::from_fn(n, n, |i, j| if i == j { u[(i, j)] - mu } else { u[(i, j)] });
    let svd = shifted
        .svd()
        .map_err(|e| Error::EigenFailure(format!("{e:?}")))?;
    let sv = svd.S().column_vector();
    let j = (0..n)
        .min_by(|&a, &b| sv[a].re.total_cmp(&sv[b].re))
        .expect("non-empty");
    Ok(svd.V().col(j).iter().cloned().collect())
}

/// L1 distance between the normalized momentum profiles of the two states
/// with the largest `ε^i`.
pub fn separation_metric(spec: &FloquetSpectrum) -> Result<f64> {
    if spec.len() < 2 {
        return Err(Error::InvalidParameter("need at least two states".into()));
    }
    let mut idx: Vec<usize> = (0..spec.len()).collect();
    idx.sort_by(|&a, &b| {
        spec.quasienergies[b]
            .im
            .total_cmp(&spec.quasienergies[a].im)
            .then(a.cmp(&b))
    });
    Ok(l1(&spec.profile(idx[0]), &spec.profile(idx[1])))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OmegaSearch {
    pub omega_lo: f64,
    pub omega_hi: f64,
    pub scan_step: f64,
    pub s_tol: f64,
    pub resolution: f64,
    pub truncation: usize,
}

impl OmegaSearch {
    pub fn new(omega_lo: f64, omega_hi: f64) -> Self {
        Self {
            omega_lo,
            omega_hi,
            scan_step: 0.25,
            s_tol: 0.1,
            resolution: 0.01,
            truncation: 64,
        }
    }
}

pub fn separation_at(
    k: f64,
    lambda: f64,
    omega: f64,
    truncation: usize,
    cfg: &PropagatorConfig,
) -> Result<f64> {
    let p = DriveParams::new(k, lambda, omega)?;
    separation_metric(&spectrum_for(&p, truncation, cfg)?)
}

/// First ω in the range where the separation metric exceeds `s_tol`:
/// coarse grid scan, then bisection inside the first crossing cell.
pub fn separation_threshold_omega_c(
    k: f64,
    lambda: f64,
    search: &OmegaSearch,
    cfg: &PropagatorConfig,
) -> Result<f64> {
    if !(search.omega_hi > search.omega_lo && search.scan_step > 0.0 && search.resolution > 0.0) {
        return Err(Error::InvalidParameter("bad omega search range".into()));
    }
    let cells = ((search.omega_hi - search.omega_lo) / search.scan_step - 1e-9).ceil() as usize;
    let grid: Vec<f64> = (0..=cells)
        .map(|i| (search.omega_lo + i as f64 * search.scan_step).min(search.omega_hi))
        .collect();
    let values: Vec<f64> = grid
        .par_iter()
        .map(|&w| separation_at(k, lambda, w, search.truncation, cfg))
        .collect::<Result<_>>()?;
    let bracket_err = || Error::BracketFailure {
        lo: search.omega_lo,
        hi: search.omega_hi,
        f_lo: values[0],
        f_hi: values[values.len() - 1],
        tol: search.s_tol,
    };
    if values[0] > search.s_tol {
        return Err(bracket_err());
    }
    let first = values
        .iter()
        .position(|&s| s > search.s_tol)
        .ok_or_else(bracket_err)?;
    let (mut lo, mut hi) = (grid[first - 1], grid[first]);
    while hi - lo > search.resolution {
        let mid = 0.5 * (lo + hi);
        if separation_at(k, lambda, mid, search.truncation, cfg)? > search.s_tol {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::initial_state_zero_momentum;

    #[test]
    fn fold_range_and_idempotence() {
        for &w in &[0.5, 1.0, 3.0] {
            for k in -50..50 {
                let x = k as f64 * 0.173;
                let f = fold(x, w);
                assert!((-0.5 * w..0.5 * w).contains(&f), "{x} -> {f}");
                assert_eq!(fold(f, w), f);
                let m = (x - f) / w;
                assert!((m - m.round()).abs() < 1e-9);
            }
        }
        assert_eq!(fold(0.5, 1.0), -0.5);
    }

    #[test]
    fn free_spectrum() {
        let m = 4usize;
        let omega = 1.0;
        let period = 2.0 * std::f64::consts::PI;
        let d = 2 * m + 1;
        let u = Mat::from_fn(d, d, |i, j| {
            if i == j {
                let n = i as f64 - m as f64;
                C64::from_polar(1.0, -0.5 * n * n * period)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let spec = floquet_spectrum(&u, omega).unwrap();
        // Odd n land on the zone edge, where rounding picks either side.
        let mut used = vec![false; d];
        for n in -(m as i64)..=m as i64 {
            let w = C64::new(0.5 * (n * n) as f64, 0.0);
            let hit = (0..d)
                .find(|&a| {
                    !used[a] && quasienergy_distance(spec.quasienergies[a], w, omega) < 1e-12
                })
                .expect("free level present");
            used[hit] = true;
        }
        assert!(imag_sum_xi(&spec) < 1e-12);
    }

    #[test]
    fn multipliers_reproduced_from_quasienergies() {
        let p = DriveParams::new(0.7, 0.4, 1.3).unwrap();
        let cfg = PropagatorConfig {
            steps_per_period: 64,
            ..Default::default()
        };
        let spec = spectrum_for(&p, 10, &cfg).unwrap();
        let period = spec.period();
        for (e, mu) in spec.quasienergies.iter().zip(&spec.multipliers) {
            let back = (C64::new(0.0, -1.0) * e * period).exp();
            assert!((back - mu).norm() < 1e-8);
        }
    }

    #[test]
    fn plain_and_biorthogonal_agree_for_unitary() {
        let p = DriveParams::new(0.6, 0.0, 1.0).unwrap();
        let cfg = PropagatorConfig {
            steps_per_period: 32,
            ..Default::default()
        };
        let spec = spectrum_for(&p, 6, &cfg).unwrap();
        let psi = initial_state_zero_momentum(6).unwrap();
        let a = expansion_coefficients(&spec, &psi, Projection::Plain).unwrap();
        let b = expansion_coefficients(&spec, &psi, Projection::Biorthogonal).unwrap();
        // Degenerate subspaces may rotate, so compare the reconstructed state.
        let rebuild = |c: &[C64]| -> Vec<C64> {
            (0..spec.len())
                .map(|i| (0..spec.len()).map(|a| spec.modes[(i, a)] * c[a]).sum())
                .collect()
        };
        let rb = rebuild(&b);
        for i in 0..spec.len() {
            assert!((rb[i] - psi.amplitudes[i]).norm() < 1e-9);
        }
        let total: f64 = a.iter().map(|c| c.norm_sqr()).sum();
        assert!((total - 1.0).abs() < 1e-8);
    }

    #[test]
    fn bracket_failure_reported() {
        let p = DriveParams::new(0.1, 0.0, 0.5).unwrap();
        let mut s = ThresholdSearch::new(0.1, 0.3);
        s.truncation = 8;
        let cfg = PropagatorConfig {
            steps_per_period: 32,
            ..Default::default()
        };
        assert!(matches!(
            pt_threshold(&p, &s, &cfg),
            Err(Error::BracketFailure { .. })
        ));
    }
}
