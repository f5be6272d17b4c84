//! Multi-dimensional complex FFTs on cubic grids, built from rustfft line
//! transforms. Axes other than the last are brought to the contiguous
//! position by an axis swap, transformed, and swapped back.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::par;

/// Forward/inverse plans for an `n^d` cube.
pub struct FftNd {
    d: usize,
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

/// Shared plan for `(d, n)`; plans are cached process-wide.
pub fn plan(d: usize, n: usize) -> Arc<FftNd> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<FftNd>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("fft plan cache poisoned");
    guard
        .entry((d, n))
        .or_insert_with(|| Arc::new(FftNd::new(d, n)))
        .clone()
}

impl FftNd {
    pub fn new(d: usize, n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            d,
            n,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Unnormalized forward transform, in place.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, false);
    }

    /// Inverse transform normalized by `1/n^d`, in place.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, true);
        let s = 1.0 / self.len() as f64;
        par::for_each_chunk_mut(data, par::REDUCE_CHUNK, |_, c| {
            for v in c {
                *v *= s;
            }
        });
    }

    fn transform(&self, data: &mut [Complex64], inverse: bool) {
        assert_eq!(data.len(), self.len(), "buffer length does not match plan");
        let plan = if inverse { &self.inv } else { &self.fwd };
        let mut scratch = vec![Complex64::default(); data.len()];
        for axis in (0..self.d).rev() {
            if axis == self.d - 1 {
                self.lines(plan, data);
            } else {
                self.swap_axis_with_last(data, &mut scratch, axis);
                self.lines(plan, &mut scratch);
                self.swap_axis_with_last(&scratch, data, axis);
            }
        }
    }

    fn lines(&self, plan: &Arc<dyn Fft<f64>>, data: &mut [Complex64]) {
        let n = self.n;
        let per_task = (16_384 / n).max(1) * n;
        par::for_each_chunk_mut(data, per_task, |_, chunk| {
            let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
            plan.process_with_scratch(chunk, &mut scratch);
        });
    }

    /// `dst[o] = src[swap(o)]` where `swap` exchanges the indices of `axis`
    /// and the last axis. The map is an involution.
    fn swap_axis_with_last(&self, src: &[Complex64], dst: &mut [Complex64], axis: usize) {
        let n = self.n;
        let stride = n.pow((self.d - 1 - axis) as u32);
        par::for_each_chunk_mut(dst, par::REDUCE_CHUNK, |ci, chunk| {
            let base = ci * par::REDUCE_CHUNK;
            for (k, v) in chunk.iter_mut().enumerate() {
                let o = base + k;
                let ia = (o / stride) % n;
                let il = o % n;
                let s = o - ia * stride - il + il * stride + ia;
                *v = src[s];
            }
        });
    }

    /// Flat index of the frequency `-k`.
    #[inline]
    pub fn neg_index(&self, flat: usize) -> usize {
        let n = self.n;
        let mut rem = flat;
        let mut out = 0;
        let mut mult = 1;
        for _ in 0..self.d {
            let i = rem % n;
            rem /= n;
            out += ((n - i) % n) * mult;
            mult *= n;
        }
        out
    }

    /// Spectrum of a real field.
    pub fn forward_real(&self, a: &[f64]) -> Vec<Complex64> {
        let mut z: Vec<Complex64> = a.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.forward(&mut z);
        z
    }

    /// Spectra of two real fields using one complex transform.
    pub fn forward_real_pair(&self, a: &[f64], b: &[f64]) -> (Vec<Complex64>, Vec<Complex64>) {
        let mut z: Vec<Complex64> = a
            .iter()
            .zip(b)
            .map(|(&x, &y)| Complex64::new(x, y))
            .collect();
        self.forward(&mut z);
        let len = z.len();
        let mut sa = vec![Complex64::default(); len];
        let mut sb = vec![Complex64::default(); len];
        let zr = &z;
        par::for_each_chunk_mut(&mut sa, par::REDUCE_CHUNK, |ci, c| {
            let base = ci * par::REDUCE_CHUNK;
            for (k, v) in c.iter_mut().enumerate() {
                let i = base + k;
                let zc = zr[self.neg_index(i)].conj();
                *v = (zr[i] + zc) * 0.5;
            }
        });
        par::for_each_chunk_mut(&mut sb, par::REDUCE_CHUNK, |ci, c| {
            let base = ci * par::REDUCE_CHUNK;
            for (k, v) in c.iter_mut().enumerate() {
                let i = base + k;
                let zc = zr[self.neg_index(i)].conj();
                let w = (zr[i] - zc) * 0.5;
                // divide by i
                *v = Complex64::new(w.im, -w.re);
            }
        });
        (sa, sb)
    }

    /// Real part of the inverse transform.
    pub fn inverse_real(&self, s: &[Complex64]) -> Vec<f64> {
        let mut z = s.to_vec();
        self.inverse(&mut z);
        z.into_iter().map(|c| c.re).collect()
    }

    /// Inverse transforms of two Hermitian spectra with one complex
    /// transform.
    pub fn inverse_real_pair(&self, a: &[Complex64], b: &[Complex64]) -> (Vec<f64>, Vec<f64>) {
        let i = Complex64::new(0.0, 1.0);
        let mut z: Vec<Complex64> = a.iter().zip(b).map(|(&x, &y)| x + i * y).collect();
        self.inverse(&mut z);
        z.into_iter().map(|c| (c.re, c.im)).unzip()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn naive_dft(d: usize, n: usize, x: &[Complex64]) -> Vec<Complex64> {
        let len = n.pow(d as u32);
        let unravel = |f: usize| -> Vec<usize> {
            let mut r = f;
            let mut v = vec![0; d];
            for a in (0..d).rev() {
                v[a] = r % n;
                r /= n;
            }
            v
        };
        (0..len)
            .map(|k| {
                let kk = unravel(k);
                let mut acc = Complex64::default();
                for (j, xj) in x.iter().enumerate() {
                    let jj = unravel(j);
                    let phase: f64 = kk.iter().zip(&jj).map(|(a, b)| (a * b) as f64).sum();
                    let ang = -2.0 * std::f64::consts::PI * phase / n as f64;
                    acc += xj * Complex64::from_polar(1.0, ang);
                }
                acc
            })
            .collect()
    }

    #[test]
    fn matches_naive_dft_2d_and_3d() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for (d, n) in [(2usize, 8usize), (3, 4)] {
            let len = n.pow(d as u32);
            let x: Vec<Complex64> = (0..len)
                .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let expect = naive_dft(d, n, &x);
            let mut y = x.clone();
            FftNd::new(d, n).forward(&mut y);
            for (a, b) in y.iter().zip(&expect) {
                assert!((a - b).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn real_pair_packing_matches_single_transforms() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p = FftNd::new(2, 16);
        let a: Vec<f64> = (0..256).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..256).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (sa, sb) = p.forward_real_pair(&a, &b);
        let (ea, eb) = (p.forward_real(&a), p.forward_real(&b));
        for k in 0..256 {
            assert!((sa[k] - ea[k]).norm() < 1e-12);
            assert!((sb[k] - eb[k]).norm() < 1e-12);
        }
        let (ra, rb) = p.inverse_real_pair(&sa, &sb);
        for k in 0..256 {
            assert!((ra[k] - a[k]).abs() < 1e-13);
            assert!((rb[k] - b[k]).abs() < 1e-13);
        }
    }
}
