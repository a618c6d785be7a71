//! Dense ELU networks over a flat parameter vector, with batched forward and
//! backward passes on top of `matrixmultiply`.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use rand::Rng;
use rand_distr::StandardNormal;

/// Scalar type of the networks.
pub trait Real:
    Copy
    + Default
    + PartialOrd
    + Debug
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
{
    const ZERO: Self;
    const ONE: Self;
    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
    fn exp(self) -> Self;
    fn sqrt(self) -> Self;
    fn is_finite(self) -> bool;

    /// `C = alpha A B + beta C` with `A: m×k`, `B: k×n`, `C: m×n`, given
    /// row and column strides.
    #[allow(clippy::too_many_arguments)]
    fn gemm(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: &[Self],
        rsa: isize,
        csa: isize,
        b: &[Self],
        rsb: isize,
        csb: isize,
        beta: Self,
        c: &mut [Self],
        rsc: isize,
        csc: isize,
    );
}

macro_rules! real_impl {
    ($t:ty, $gemm:ident) => {
        impl Real for $t {
            const ZERO: Self = 0.0;
            const ONE: Self = 1.0;
            #[inline]
            fn from_f64(x: f64) -> Self {
                x as $t
            }
            #[inline]
            fn to_f64(self) -> f64 {
                self as f64
            }
            #[inline]
            fn exp(self) -> Self {
                <$t>::exp(self)
            }
            #[inline]
            fn sqrt(self) -> Self {
                <$t>::sqrt(self)
            }
            #[inline]
            fn is_finite(self) -> bool {
                <$t>::is_finite(self)
            }
            fn gemm(
                m: usize,
                k: usize,
                n: usize,
                alpha: Self,
                a: &[Self],
                rsa: isize,
                csa: isize,
                b: &[Self],
                rsb: isize,
                csb: isize,
                beta: Self,
                c: &mut [Self],
                rsc: isize,
                csc: isize,
            ) {
                let span = |rows: usize, cols: usize, rs: isize, cs: isize| {
                    if rows == 0 || cols == 0 {
                        0
                    } else {
                        (rows - 1) * rs as usize + (cols - 1) * cs as usize + 1
                    }
                };
                assert!(a.len() >= span(m, k, rsa, csa));
                assert!(b.len() >= span(k, n, rsb, csb));
                assert!(c.len() >= span(m, n, rsc, csc));
                // SAFETY: the asserts above bound every index the kernel
                // touches for these non-negative strides.
                unsafe {
                    matrixmultiply::$gemm(
                        m,
                        k,
                        n,
                        alpha,
                        a.as_ptr(),
                        rsa,
                        csa,
                        b.as_ptr(),
                        rsb,
                        csb,
                        beta,
                        c.as_mut_ptr(),
                        rsc,
                        csc,
                    );
                }
            }
        }
    };
}

real_impl!(f32, sgemm);
real_impl!(f64, dgemm);

#[inline]
fn elu<T: Real>(x: T) -> T {
    if x > T::ZERO {
        x
    } else {
        x.exp() - T::ONE
    }
}

/// Layer sizes and parameter offsets of an MLP whose parameters live in a
/// caller-owned flat slice: per layer the `out × in` row-major weights, then
/// the bias. Hidden layers use ELU, the output layer is linear.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mlp {
    pub sizes: Vec<usize>,
    /// Start of each layer's weights within the network's slice.
    offsets: Vec<usize>,
}

impl Mlp {
    pub fn new(sizes: &[usize]) -> Self {
        assert!(sizes.len() >= 2 && sizes.iter().all(|s| *s > 0), "bad layer sizes {sizes:?}");
        let mut offsets = Vec::with_capacity(sizes.len() - 1);
        let mut at = 0;
        for w in sizes.windows(2) {
            offsets.push(at);
            at += w[0] * w[1] + w[1];
        }
        offsets.push(at);
        Self { sizes: sizes.to_vec(), offsets }
    }

    pub fn n_params(&self) -> usize {
        *self.offsets.last().expect("non-empty")
    }

    pub fn n_layers(&self) -> usize {
        self.sizes.len() - 1
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().expect("non-empty")
    }

    fn layer<'a, T>(&self, params: &'a [T], l: usize) -> (&'a [T], &'a [T]) {
        let (i, o) = (self.sizes[l], self.sizes[l + 1]);
        let w = &params[self.offsets[l]..self.offsets[l] + i * o];
        let b = &params[self.offsets[l] + i * o..self.offsets[l + 1]];
        (w, b)
    }

    /// Scaled normal weights (std `gain / sqrt(fan_in)`), zero biases.
    pub fn init<T: Real, R: Rng + ?Sized>(&self, params: &mut [T], output_gain: f64, rng: &mut R) {
        assert_eq!(params.len(), self.n_params());
        for l in 0..self.n_layers() {
            let (i, o) = (self.sizes[l], self.sizes[l + 1]);
            let gain = if l + 1 == self.n_layers() { output_gain } else { 2f64.sqrt() };
            let std = gain / (i as f64).sqrt();
            let start = self.offsets[l];
            for p in &mut params[start..start + i * o] {
                let z: f64 = rng.sample(StandardNormal);
                *p = T::from_f64(std * z);
            }
            for p in &mut params[start + i * o..self.offsets[l + 1]] {
                *p = T::ZERO;
            }
        }
    }

    /// Batched forward pass; `x` is `batch × input_dim` row-major. The
    /// returned slice (in `cache`) is `batch × output_dim`.
    pub fn forward<'c, T: Real>(&self, params: &[T], x: &[T], batch: usize, cache: &'c mut MlpCache<T>) -> &'c [T] {
        assert_eq!(x.len(), batch * self.input_dim());
        cache.resize(self, batch);
        cache.acts[0].copy_from_slice(x);
        for l in 0..self.n_layers() {
            let (i, o) = (self.sizes[l], self.sizes[l + 1]);
            let (w, b) = self.layer(params, l);
            let (lo, hi) = cache.acts.split_at_mut(l + 1);
            let input = &lo[l];
            let out = &mut hi[0];
            for r in 0..batch {
                out[r * o..(r + 1) * o].copy_from_slice(b);
            }
            T::gemm(batch, i, o, T::ONE, input, i as isize, 1, w, 1, i as isize, T::ONE, out, o as isize, 1);
            if l + 1 < self.n_layers() {
                cache.pre[l].copy_from_slice(out);
                for v in out.iter_mut() {
                    *v = elu(*v);
                }
            }
        }
        &cache.acts[self.n_layers()]
    }

    /// Accumulates the parameter gradient of `sum(dout ∘ output)` into
    /// `grad`, using the activations of the last [`Mlp::forward`].
    pub fn backward<T: Real>(&self, params: &[T], cache: &mut MlpCache<T>, dout: &[T], batch: usize, grad: &mut [T]) {
        assert_eq!(dout.len(), batch * self.output_dim());
        assert_eq!(grad.len(), self.n_params());
        cache.delta.clear();
        cache.delta.extend_from_slice(dout);
        for l in (0..self.n_layers()).rev() {
            let (i, o) = (self.sizes[l], self.sizes[l + 1]);
            let (w, _) = self.layer(params, l);
            let start = self.offsets[l];
            let (gw, gb) = grad[start..self.offsets[l + 1]].split_at_mut(i * o);
            let delta = &cache.delta;
            // dW += delta^T x
            T::gemm(o, batch, i, T::ONE, delta, 1, o as isize, &cache.acts[l], i as isize, 1, T::ONE, gw, i as isize, 1);
            for r in 0..batch {
                for (g, d) in gb.iter_mut().zip(&delta[r * o..(r + 1) * o]) {
                    *g += *d;
                }
            }
            if l == 0 {
                break;
            }
            // delta_prev = (delta W) ∘ elu'(pre)
            cache.next.clear();
            cache.next.resize(batch * i, T::ZERO);
            T::gemm(batch, o, i, T::ONE, delta, o as isize, 1, w, i as isize, 1, T::ZERO, &mut cache.next, i as isize, 1);
            for (d, (z, a)) in cache.next.iter_mut().zip(cache.pre[l - 1].iter().zip(&cache.acts[l])) {
                if *z <= T::ZERO {
                    *d *= *a + T::ONE;
                }
            }
            std::mem::swap(&mut cache.delta, &mut cache.next);
        }
    }
}

/// Activations kept between forward and backward passes.
#[derive(Clone, Debug, Default)]
pub struct MlpCache<T> {
    acts: Vec<Vec<T>>,
    pre: Vec<Vec<T>>,
    delta: Vec<T>,
    next: Vec<T>,
}

impl<T: Real> MlpCache<T> {
    fn resize(&mut self, mlp: &Mlp, batch: usize) {
        self.acts.resize_with(mlp.sizes.len(), Vec::new);
        for (a, s) in self.acts.iter_mut().zip(&mlp.sizes) {
            a.resize(batch * s, T::ZERO);
        }
        self.pre.resize_with(mlp.n_layers() - 1, Vec::new);
        for (p, s) in self.pre.iter_mut().zip(&mlp.sizes[1..]) {
            p.resize(batch * s, T::ZERO);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn naive_forward(mlp: &Mlp, p: &[f64], x: &[f64]) -> Vec<f64> {
        let mut a = x.to_vec();
        for l in 0..mlp.n_layers() {
            let (i, o) = (mlp.sizes[l], mlp.sizes[l + 1]);
            let (w, b) = mlp.layer(p, l);
            let mut y: Vec<f64> = (0..o).map(|r| b[r] + (0..i).map(|c| w[r * i + c] * a[c]).sum::<f64>()).collect();
            if l + 1 < mlp.n_layers() {
                y.iter_mut().for_each(|v| *v = elu(*v));
            }
            a = y;
        }
        a
    }

    #[test]
    fn forward_matches_naive_loops() {
        let mlp = Mlp::new(&[5, 7, 6, 3]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut p = vec![0.0; mlp.n_params()];
        mlp.init(&mut p, 1.0, &mut rng);
        for v in p.iter_mut() {
            *v += rng.gen_range(-0.1..0.1);
        }
        let batch = 4;
        let x: Vec<f64> = (0..batch * 5).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let mut cache = MlpCache::default();
        let y = mlp.forward(&p, &x, batch, &mut cache).to_vec();
        for r in 0..batch {
            let want = naive_forward(&mlp, &p, &x[r * 5..(r + 1) * 5]);
            for c in 0..3 {
                assert!((y[r * 3 + c] - want[c]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_parameters_give_zero_output() {
        let mlp = Mlp::new(&[4, 8, 2]);
        let p = vec![0.0f32; mlp.n_params()];
        let mut cache = MlpCache::default();
        assert!(mlp.forward(&p, &[1.0; 12], 3, &mut cache).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mlp = Mlp::new(&[3, 4, 4, 2]);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut p = vec![0.0; mlp.n_params()];
        mlp.init(&mut p, 1.0, &mut rng);
        let batch = 5;
        let x: Vec<f64> = (0..batch * 3).map(|_| rng.gen_range(-1.5..1.5)).collect();
        let wts: Vec<f64> = (0..batch * 2).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let loss = |p: &[f64]| -> f64 {
            let mut c = MlpCache::default();
            mlp.forward(p, &x, batch, &mut c).iter().zip(&wts).map(|(y, w)| y * w).sum()
        };
        let mut cache = MlpCache::default();
        mlp.forward(&p, &x, batch, &mut cache);
        let mut grad = vec![0.0; mlp.n_params()];
        mlp.backward(&p, &mut cache, &wts, batch, &mut grad);
        let h = 1e-6;
        for k in 0..p.len() {
            let mut a = p.clone();
            a[k] += h;
            let mut b = p.clone();
            b[k] -= h;
            let fd = (loss(&a) - loss(&b)) / (2.0 * h);
            let err = (fd - grad[k]).abs() / fd.abs().max(grad[k].abs()).max(1e-3);
            assert!(err < 1e-4, "param {k}: fd {fd} vs {}", grad[k]);
        }
    }

    #[test]
    fn f32_and_f64_agree() {
        let mlp = Mlp::new(&[6, 16, 16, 2]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut p64 = vec![0.0f64; mlp.n_params()];
        mlp.init(&mut p64, 1.0, &mut rng);
        let p32: Vec<f32> = p64.iter().map(|v| *v as f32).collect();
        let x64: Vec<f64> = (0..6 * 8).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x32: Vec<f32> = x64.iter().map(|v| *v as f32).collect();
        let (mut c64, mut c32) = (MlpCache::default(), MlpCache::default());
        let y64 = mlp.forward(&p64, &x64, 8, &mut c64).to_vec();
        let y32 = mlp.forward(&p32, &x32, 8, &mut c32).to_vec();
        for (a, b) in y64.iter().zip(&y32) {
            assert!((a - *b as f64).abs() < 1e-4);
        }
    }
}
