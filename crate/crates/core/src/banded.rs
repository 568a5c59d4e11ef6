//! Square band matrices and a band-truncated matrix exponential.
//!
//! For a generator `A = -iτD + C` with `D` real diagonal and `C` banded with
//! row sums `c`, the entries of `exp(A)` decay like `c^d / d!` at distance
//! `d` from the diagonal, so the exponential is numerically banded.

use faer::Mat;

use crate::C64;

const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Clone, Debug, PartialEq)]
pub struct BandMatrix {
    n: usize,
    bw: usize,
    data: Vec<C64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, bw: usize) -> Self {
        let bw = bw.min(n.saturating_sub(1));
        Self {
            n,
            bw,
            data: vec![ZERO; n * (2 * bw + 1)],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, 0);
        m.data.iter_mut().for_each(|v| *v = C64::new(1.0, 0.0));
        m
    }

    /// `upper[i] = A[i, i+1]`, `lower[i] = A[i+1, i]`.
    pub fn tridiagonal(diag: &[C64], upper: &[C64], lower: &[C64]) -> Self {
        let n = diag.len();
        assert!(upper.len() + 1 >= n && lower.len() + 1 >= n);
        let mut m = Self::zeros(n, 1);
        for i in 0..n {
            m.set(i, i, diag[i]);
            if i + 1 < n {
                m.set(i, i + 1, upper[i]);
                m.set(i + 1, i, lower[i]);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    fn width(&self) -> usize {
        2 * self.bw + 1
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        if i.abs_diff(j) > self.bw {
            return ZERO;
        }
        self.data[i * self.width() + (j + self.bw - i)]
    }

    /// Panics if `(i, j)` lies outside the band.
    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        assert!(
            i.abs_diff(j) <= self.bw,
            "({i}, {j}) outside band {}",
            self.bw
        );
        let w = self.width();
        self.data[i * w + (j + self.bw - i)] = v;
    }

    fn cols(&self, i: usize) -> (usize, usize) {
        (i.saturating_sub(self.bw), (i + self.bw).min(self.n - 1))
    }

    /// Induced 1-norm (maximum absolute column sum).
    pub fn norm1(&self) -> f64 {
        let mut sums = vec![0.0; self.n];
        for i in 0..self.n {
            let (lo, hi) = self.cols(i);
            for j in lo..=hi {
                sums[j] += self.get(i, j).norm();
            }
        }
        sums.into_iter().fold(0.0, f64::max)
    }

    /// Largest row sum of off-diagonal magnitudes.
    pub fn offdiag_row_sum(&self) -> f64 {
        (0..self.n)
            .map(|i| {
                let (lo, hi) = self.cols(i);
                (lo..=hi)
                    .filter(|&j| j != i)
                    .map(|j| self.get(i, j).norm())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|v| *v *= s);
    }

    pub fn add_identity(&mut self) {
        let w = self.width();
        for i in 0..self.n {
            self.data[i * w + self.bw] += C64::new(1.0, 0.0);
        }
    }

    /// `self · other`, dropping entries farther than `max_bw` from the diagonal.
    pub fn mul(&self, other: &BandMatrix, max_bw: usize) -> BandMatrix {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = BandMatrix::zeros(n, (self.bw + other.bw).min(max_bw));
        let (wa, wb, wc) = (self.width(), other.width(), out.width());
        let (ba, bb, bc) = (self.bw, other.bw, out.bw);
        for i in 0..n {
            let (jlo, jhi) = out.cols(i);
            let arow = &self.data[i * wa..(i + 1) * wa];
            for j in jlo..=jhi {
                let klo = i.saturating_sub(ba).max(j.saturating_sub(bb));
                let khi = (i + ba).min(j + bb).min(n - 1);
                let mut acc = ZERO;
                for k in klo..=khi {
                    acc += arow[k + ba - i] * other.data[k * wb + (j + bb - k)];
                }
                out.data[i * wc + (j + bc - i)] = acc;
            }
        }
        out
    }

    pub fn apply(&self, x: &[C64], out: &mut [C64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(out.len(), self.n);
        let w = self.width();
        for (i, o) in out.iter_mut().enumerate() {
            let (lo, hi) = self.cols(i);
            let row = &self.data[i * w..(i + 1) * w];
            let mut acc = ZERO;
            for j in lo..=hi {
                acc += row[j + self.bw - i] * x[j];
            }
            *o = acc;
        }
    }

    /// Replaces every column `u_j` of `u` with `self · u_j`.
    pub fn apply_to_columns(&self, u: &mut Mat<C64>) {
        assert_eq!(u.nrows(), self.n);
        let mut scratch = vec![ZERO; self.n];
        for j in 0..u.ncols() {
            let col = u
                .col_mut(j)
                .try_as_col_major_mut()
                .expect("column-major storage");
            let col = col.as_slice_mut();
            self.apply(col, &mut scratch);
            col.copy_from_slice(&scratch);
        }
    }

    pub fn to_dense(&self) -> Mat<C64> {
        Mat::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }
}

/// Smallest `b` with `Σ_{k≥b} c^k/k! < tol` (tail bounded by `c^b/b! · e^c`).
pub fn decay_bandwidth(c: f64, tol: f64) -> usize {
    if c == 0.0 {
        return 0;
    }
    let mut term = 1.0;
    let mut b = 0usize;
    while term * c.exp() >= tol && b < 10_000 {
        b += 1;
        term *= c / b as f64;
    }
    b.max(1)
}

/// `exp(a)` for a band matrix, truncated to the band where entries exceed
/// roughly `1e-18` relative to the diagonal. Scaling-and-squaring with a
/// Taylor kernel; the scaled argument has norm at most 1.
pub fn expm_banded(a: &BandMatrix) -> BandMatrix {
    let n = a.dim();
    let hops = decay_bandwidth(a.offdiag_row_sum(), 1e-18);
    let max_bw = (a.bandwidth() * hops).min(n.saturating_sub(1));

    let norm = a.norm1();
    let squarings = if norm > 1.0 {
        norm.log2().ceil() as u32
    } else {
        0
    };
    let mut x = a.clone();
    x.scale(0.5f64.powi(squarings as i32));
    let xn = norm * 0.5f64.powi(squarings as i32);

    // Taylor degree: remainder xn^(m+1)/(m+1)! * e^xn below 1e-18.
    let mut degree = 1usize;
    let mut term = xn;
    while term * xn.exp() > 1e-18 && degree < 30 {
        degree += 1;
        term *= xn / degree as f64;
    }

    let mut p = BandMatrix::identity(n);
    for k in (1..=degree).rev() {
        let mut q = x.mul(&p, max_bw);
        q.scale(1.0 / k as f64);
        q.add_identity();
        p = q;
    }
    for _ in 0..squarings {
        p = p.mul(&p, max_bw);
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expm::expm;

    fn lcg(seed: &mut u64) -> f64 {
        *seed = seed
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        ((*seed >> 11) as f64) / (1u64 << 53) as f64 - 0.5
    }

    fn random_band(n: usize, bw: usize, seed: u64) -> BandMatrix {
        let mut s = seed;
        let mut m = BandMatrix::zeros(n, bw);
        for i in 0..n {
            for j in i.saturating_sub(bw)..=(i + bw).min(n - 1) {
                m.set(i, j, C64::new(lcg(&mut s), lcg(&mut s)));
            }
        }
        m
    }

    #[test]
    fn mul_matches_dense() {
        let a = random_band(17, 2, 1);
        let b = random_band(17, 3, 2);
        let c = a.mul(&b, 100).to_dense();
        let d = &a.to_dense() * &b.to_dense();
        for i in 0..17 {
            for j in 0..17 {
                assert!((c[(i, j)] - d[(i, j)]).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn apply_matches_dense() {
        let a = random_band(11, 1, 3);
        let mut s = 9;
        let x: Vec<C64> = (0..11)
            .map(|_| C64::new(lcg(&mut s), lcg(&mut s)))
            .collect();
        let mut y = vec![ZERO; 11];
        a.apply(&x, &mut y);
        let d = a.to_dense();
        for i in 0..11 {
            let want: C64 = (0..11).map(|j| d[(i, j)] * x[j]).sum();
            assert!((want - y[i]).norm() < 1e-14);
        }
        let mut u = Mat::from_fn(11, 2, |i, j| if j == 0 { x[i] } else { x[10 - i] });
        a.apply_to_columns(&mut u);
        for i in 0..11 {
            assert!((u[(i, 0)] - y[i]).norm() < 1e-14);
        }
    }

    #[test]
    fn banded_expm_matches_dense_on_rotor_generator() {
        // -iτ(D + σB) with a large diagonal spread, as in the propagator.
        let m = 40usize;
        let n = 2 * m + 1;
        let tau = 0.03;
        let diag: Vec<C64> = (0..n)
            .map(|i| {
                let k = i as f64 - m as f64;
                C64::new(0.0, -tau * 0.5 * k * k)
            })
            .collect();
        let up = vec![C64::new(tau * 0.9, 0.0); n - 1];
        let lo = vec![C64::new(-tau * 0.4, 0.0); n - 1];
        let a = BandMatrix::tridiagonal(&diag, &up, &lo);
        let e = expm_banded(&a);
        let d = expm(a.to_dense().as_ref());
        let mut err: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                err = err.max((e.get(i, j) - d[(i, j)]).norm());
            }
        }
        assert!(err < 1e-12, "err = {err:e}");
        assert!(e.bandwidth() < 20);
    }

    #[test]
    fn decay_bandwidth_is_monotone() {
        assert_eq!(decay_bandwidth(0.0, 1e-18), 0);
        let mut last = 0;
        for c in [1e-3, 1e-2, 0.1, 1.0, 3.0] {
            let b = decay_bandwidth(c, 1e-18);
            assert!(b >= last);
            last = b;
        }
    }
}
