//! Seeded band-limited test functions with exact derivatives.

use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{Grid, ScalarField};
use crate::error::{Error, Result};
use crate::jet::{Smooth, Taylor2};
use crate::scalar::Real;

/// One-dimensional basis along a grid coordinate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TrigBasis<T> {
    /// `exp(2πi k (u - lo)/period)`, `k = -B..=B`.
    Periodic { lo: T, period: T, bandlimit: usize },
    /// `cos(πks) sin⁴(πs)` with `s = (u - lo)/(hi - lo)`, `k = 0..=B`.
    /// The window and its first three derivatives vanish at both ends.
    Windowed { lo: T, hi: T, bandlimit: usize },
    /// The constant 1.
    Constant,
}

impl<T: Real> TrigBasis<T> {
    pub fn len(&self) -> usize {
        match *self {
            TrigBasis::Periodic { bandlimit, .. } => 2 * bandlimit + 1,
            TrigBasis::Windowed { bandlimit, .. } => bandlimit + 1,
            TrigBasis::Constant => 1,
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Signed frequency label of mode `m`.
    pub fn frequency(&self, m: usize) -> isize {
        match *self {
            TrigBasis::Periodic { bandlimit, .. } => m as isize - bandlimit as isize,
            _ => m as isize,
        }
    }

    /// Value, first and second derivative of mode `m` at `u`.
    pub fn eval(&self, m: usize, u: T) -> [Complex<T>; 3] {
        let re = |x: T| Complex::new(x, T::zero());
        match *self {
            TrigBasis::Periodic { lo, period, .. } => {
                let w = T::two() * T::PI() * T::lit(self.frequency(m) as f64) / period;
                let e = Complex::from_polar(T::one(), w * (u - lo));
                let iw = Complex::new(T::zero(), w);
                [e, e * iw, e * iw * iw]
            }
            TrigBasis::Windowed { lo, hi, .. } => {
                let s = (Taylor2::variable(u, 0) + (-lo)) * (hi - lo).recip();
                let k = T::from_usize_lossy(m);
                let win = Smooth::sin(s * T::PI());
                let w2 = win * win;
                let f = Smooth::cos(s * (T::PI() * k)) * w2 * w2;
                [re(f.val), re(f.grad[0]), re(f.hess[0])]
            }
            TrigBasis::Constant => [re(T::one()), re(T::zero()), re(T::zero())],
        }
    }
}

/// `ψ(ξ, ζ) = Σ c_{jk} B_j(ξ) C_k(ζ)` with known derivatives.
#[derive(Clone, Debug, PartialEq)]
pub struct TrigSeries<T> {
    pub basis: [TrigBasis<T>; 2],
    pub coeffs: Array2<Complex<T>>,
}

/// Value, gradient and packed Hessian `[00, 01, 11]` of a complex function.
pub type ComplexJet<T> = (Complex<T>, [Complex<T>; 2], [Complex<T>; 3]);

impl<T: Real> TrigSeries<T> {
    /// Random coefficients `N(0,1) + iN(0,1)` damped by `1/(1 + j² + k²)`.
    ///
    /// `bandlimit` may not exceed a quarter of the node count along any
    /// periodic coordinate.
    pub fn random(grid: &Grid<T>, seed: u64, bandlimit: usize) -> Result<Self> {
        let shape = grid.shape();
        let mut basis = [TrigBasis::Constant; 2];
        for c in 0..2 {
            if bandlimit == 0 {
                continue;
            }
            basis[c] = if grid.periodic()[c] {
                if 4 * bandlimit > shape[c] {
                    return Err(Error::InvalidArgument(format!(
                        "bandlimit {bandlimit} exceeds n/4 = {} on periodic coordinate {c}",
                        shape[c] / 4
                    )));
                }
                let [lo, hi] = grid.chart().domain()[c];
                TrigBasis::Periodic {
                    lo,
                    period: hi - lo,
                    bandlimit,
                }
            } else {
                TrigBasis::Windowed {
                    lo: grid.coord(c, 0),
                    hi: grid.coord(c, shape[c] - 1),
                    bandlimit,
                }
            };
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coeffs = Array2::from_shape_fn((basis[0].len(), basis[1].len()), |(j, k)| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            let fj = basis[0].frequency(j) as f64;
            let fk = basis[1].frequency(k) as f64;
            let damp = 1.0 / (1.0 + fj * fj + fk * fk);
            Complex::new(T::lit(re * damp), T::lit(im * damp))
        });
        Ok(Self { basis, coeffs })
    }

    /// Exact value, gradient and Hessian at `(u, v)`.
    pub fn jet(&self, u: T, v: T) -> ComplexJet<T> {
        let zero = Complex::new(T::zero(), T::zero());
        let bu: Vec<_> = (0..self.basis[0].len())
            .map(|j| self.basis[0].eval(j, u))
            .collect();
        let bv: Vec<_> = (0..self.basis[1].len())
            .map(|k| self.basis[1].eval(k, v))
            .collect();
        let (mut val, mut grad, mut hess) = (zero, [zero; 2], [zero; 3]);
        for ((j, k), &c) in self.coeffs.indexed_iter() {
            let (a, b) = (bu[j], bv[k]);
            val += c * a[0] * b[0];
            grad[0] += c * a[1] * b[0];
            grad[1] += c * a[0] * b[1];
            hess[0] += c * a[2] * b[0];
            hess[1] += c * a[1] * b[1];
            hess[2] += c * a[0] * b[2];
        }
        (val, grad, hess)
    }

    pub fn sample(&self, grid: &Arc<Grid<T>>) -> ScalarField<T> {
        ScalarField::from_fn(grid, |u, v| self.jet(u, v).0)
    }

    /// Exact `∂_coord ψ` on the grid.
    pub fn sample_partial(&self, grid: &Arc<Grid<T>>, coord: usize) -> ScalarField<T> {
        ScalarField::from_fn(grid, |u, v| self.jet(u, v).1[coord])
    }

    /// Exact Laplace–Beltrami `g^{μν}(∂_μ∂_ν ψ − Γ^γ_{μν} ∂_γ ψ)` on the grid.
    pub fn sample_laplacian(&self, grid: &Arc<Grid<T>>) -> ScalarField<T> {
        let values = Array2::from_shape_fn((grid.shape()[0], grid.shape()[1]), |(i, j)| {
            let (u, v) = grid.coords(i, j);
            let (_, d1, d2) = self.jet(u, v);
            let fr = grid.frame(i, j);
            let mut acc = Complex::new(T::zero(), T::zero());
            for mu in 0..2 {
                for nu in 0..2 {
                    let mut t = d2[mu + nu];
                    for (gamma, d) in d1.iter().enumerate() {
                        t -= *d * fr.christoffel[gamma][mu][nu];
                    }
                    acc += t * fr.metric_inv[mu][nu];
                }
            }
            acc
        });
        ScalarField::new(grid, values).expect("shape matches grid")
    }
}

/// Seeded, reproducible band-limited field; see [`TrigSeries::random`].
pub fn random_test_field<T: Real>(
    grid: &Arc<Grid<T>>,
    seed: u64,
    bandlimit: usize,
) -> Result<ScalarField<T>> {
    Ok(TrigSeries::random(grid, seed, bandlimit)?.sample(grid))
}
