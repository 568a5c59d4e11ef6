//! Dense complex matrix exponential: scaling and squaring with a degree-13
//! Padé approximant (Higham 2005 parameters).

use faer::linalg::solvers::Solve;
use faer::{Mat, MatRef};

use crate::C64;

const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

pub fn norm1(a: MatRef<'_, C64>) -> f64 {
    (0..a.ncols())
        .map(|j| (0..a.nrows()).map(|i| a[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn lin(terms: &[(f64, &Mat<C64>)], n: usize) -> Mat<C64> {
    let mut out = Mat::<C64>::zeros(n, n);
    for &(c, m) in terms {
        if c != 0.0 {
            out += faer::Scale(C64::new(c, 0.0)) * m;
        }
    }
    out
}

pub fn expm(a: MatRef<'_, C64>) -> Mat<C64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm needs a square matrix");
    if n == 0 {
        return Mat::zeros(0, 0);
    }
    let norm = norm1(a);
    let s = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let scale = 0.5f64.powi(s);
    let x = Mat::from_fn(n, n, |i, j| a[(i, j)] * scale);
    let id = Mat::<C64>::identity(n, n);
    let x2 = &x * &x;
    let x4 = &x2 * &x2;
    let x6 = &x4 * &x2;
    let b = &B13;

    let u_inner = lin(&[(b[13], &x6), (b[11], &x4), (b[9], &x2)], n);
    let u_tail = lin(&[(b[7], &x6), (b[5], &x4), (b[3], &x2), (b[1], &id)], n);
    let u = &x * (&x6 * &u_inner + &u_tail);

    let v_inner = lin(&[(b[12], &x6), (b[10], &x4), (b[8], &x2)], n);
    let v_tail = lin(&[(b[6], &x6), (b[4], &x4), (b[2], &x2), (b[0], &id)], n);
    let v = &x6 * &v_inner + &v_tail;

    let p = &v + &u;
    let q = &v - &u;
    let mut r = q.partial_piv_lu().solve(&p);
    for _ in 0..s {
        r = &r * &r;
    }
    r
}
