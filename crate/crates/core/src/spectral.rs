//! 2D FFT plumbing shared by the Fourier-multiplier operators.
//!
//! All multiplier operators act on the torus obtained by periodizing the
//! grid box. Transforms are row/column passes of a cached 1D FFT plan;
//! multipliers are applied in place on the spectrum and the inverse
//! transform folds the 1/N² normalization in.

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use std::sync::{Arc, Mutex};

/// Signed integer frequency for FFT bin `i` of an `n`-point transform.
#[inline]
pub fn bin_freq(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// Angular wavenumbers 2π·freq/period for an `n`-point transform.
pub fn wavenumbers(n: usize, period: f64) -> Vec<f64> {
    (0..n)
        .map(|i| 2.0 * std::f64::consts::PI * bin_freq(i, n) as f64 / period)
        .collect()
}

struct PlanPair {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

fn plans(n: usize) -> Arc<PlanPair> {
    static CACHE: Mutex<Vec<(usize, Arc<PlanPair>)>> = Mutex::new(Vec::new());
    let mut cache = CACHE.lock().unwrap();
    if let Some((_, p)) = cache.iter().find(|(m, _)| *m == n) {
        return p.clone();
    }
    let mut planner = FftPlanner::new();
    let pair = Arc::new(PlanPair {
        forward: planner.plan_fft_forward(n),
        inverse: planner.plan_fft_inverse(n),
    });
    cache.push((n, pair.clone()));
    pair
}

fn transform_rows(data: &mut [Complex64], n: usize, fft: &Arc<dyn Fft<f64>>) {
    data.par_chunks_mut(n).for_each(|row| fft.process(row));
}

fn transpose(data: &mut Vec<Complex64>, n: usize) {
    let mut out = vec![Complex64::default(); n * n];
    for j in 0..n {
        for k in 0..n {
            out[k * n + j] = data[j * n + k];
        }
    }
    *data = std::mem::take(&mut out);
    drop(out);
}

/// In-place 2D forward FFT of an n×n row-major array.
pub fn fft2(data: &mut Vec<Complex64>, n: usize) {
    let p = plans(n);
    transform_rows(data, n, &p.forward);
    transpose(data, n);
    transform_rows(data, n, &p.forward);
    transpose(data, n);
}

/// In-place 2D inverse FFT, normalized so that `ifft2(fft2(x)) == x`.
pub fn ifft2(data: &mut Vec<Complex64>, n: usize) {
    let p = plans(n);
    transform_rows(data, n, &p.inverse);
    transpose(data, n);
    transform_rows(data, n, &p.inverse);
    transpose(data, n);
    let scale = 1.0 / (n * n) as f64;
    data.iter_mut().for_each(|v| *v *= scale);
}

/// Applies a Fourier multiplier `m(k_row, k_col)` to row-major samples.
///
/// Index `j` (row) carries the first coordinate's wavenumber, index `k`
/// (column) the second's, matching the grid layout.
pub fn apply_multiplier<F>(values: &[Complex64], n: usize, period: f64, mult: F) -> Vec<Complex64>
where
    F: Fn(f64, f64) -> Complex64 + Sync,
{
    let ks = wavenumbers(n, period);
    let mut hat = values.to_vec();
    fft2(&mut hat, n);
    hat.par_chunks_mut(n).enumerate().for_each(|(j, row)| {
        let kj = ks[j];
        for (k, v) in row.iter_mut().enumerate() {
            *v *= mult(kj, ks[k]);
        }
    });
    ifft2(&mut hat, n);
    hat
}

/// Symbol of the Wirtinger derivative ∂ = (∂_x − i∂_y)/2 on the torus.
#[inline]
pub fn d_symbol(kx: f64, ky: f64) -> Complex64 {
    // ∂_x has symbol i·kx, ∂_y has symbol i·ky.
    0.5 * Complex64::new(ky, kx)
}

/// Symbol of ∂̄ = (∂_x + i∂_y)/2 on the torus.
#[inline]
pub fn dbar_symbol(kx: f64, ky: f64) -> Complex64 {
    0.5 * Complex64::new(-ky, kx)
}
