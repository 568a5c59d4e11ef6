#![no_main]

//! Momentum amplitudes to the position grid and back.

use floquet_ratchet::gpe::{grid_to_momentum, momentum_to_grid, GridState};
use floquet_ratchet::{MomentumState, C64};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let [size_byte, trunc_byte, rest @ ..] = data else {
        return;
    };
    // Arbitrary sizes exercise the validation path; powers of two the transform.
    let grid_size = if size_byte & 0x80 != 0 {
        usize::from(size_byte & 0x7f)
    } else {
        1usize << (size_byte % 11)
    };
    let truncation = usize::from(*trunc_byte % 64);
    let amps: Vec<C64> = rest
        .chunks_exact(4)
        .map(|c| {
            let re = i16::from_le_bytes([c[0], c[1]]);
            let im = i16::from_le_bytes([c[2], c[3]]);
            C64::new(f64::from(re) / 256.0, f64::from(im) / 256.0)
        })
        .chain(std::iter::repeat(C64::new(0.0, 0.0)))
        .take(2 * truncation + 1)
        .collect();
    let Ok(state) = MomentumState::from_amplitudes(truncation, amps) else {
        return;
    };
    let Ok(grid) = momentum_to_grid(&state, grid_size) else {
        assert!(2 * truncation + 2 > grid_size || !grid_size.is_power_of_two() || grid_size < 4);
        let _ = GridState::new(vec![C64::new(0.0, 0.0); grid_size]);
        return;
    };
    assert_eq!(grid.values.len(), grid_size);
    let back = grid_to_momentum(&grid, truncation).expect("sizes already validated");
    let scale = state
        .amplitudes
        .iter()
        .map(|a| a.norm())
        .fold(1.0, f64::max);
    for (a, b) in state.amplitudes.iter().zip(&back.amplitudes) {
        assert!((a - b).norm() <= 1e-10 * scale, "{a} vs {b}");
    }
    let norm_k: f64 = state.amplitudes.iter().map(|a| a.norm_sqr()).sum();
    let norm_x = grid.norm_squared();
    assert!(
        (norm_k - norm_x).abs() <= 1e-9 * norm_k.max(1.0),
        "{norm_k} vs {norm_x}"
    );
});
