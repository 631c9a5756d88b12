//! Symmetry of the discrete operators under the `√g`-weighted inner product.

use std::fmt;

use ndarray::Array2;
use num_complex::Complex;
use rayon::prelude::*;

use super::Quantizer;
use crate::error::{Error, Result};
use crate::fields::{inner_product, ScalarField, TrigSeries};
use crate::scalar::Real;

/// Largest grid (in nodes) for which dense matrices are assembled.
pub const DENSE_NODE_LIMIT: usize = 48 * 48;

/// Operators whose symmetry can be tested.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OperatorKind {
    /// `p_i`, Cartesian axis 0..3.
    CartesianMomentum(usize),
    /// `-iħ x_i^μ ∂_μ` without the `H n_i` term.
    BareMomentum(usize),
    /// `p_μ`, chart coordinate 0..2.
    GeneralizedMomentum(usize),
    LaplaceBeltrami,
    KineticCurved,
    NaivePSquared,
}

impl OperatorKind {
    pub fn apply<T: Real>(self, q: &Quantizer<T>, psi: &ScalarField<T>) -> Result<ScalarField<T>> {
        match self {
            OperatorKind::CartesianMomentum(i) => q.cartesian_momentum(psi, i),
            OperatorKind::BareMomentum(i) => q.bare_momentum(psi, i),
            OperatorKind::GeneralizedMomentum(mu) => q.generalized_momentum(psi, mu),
            OperatorKind::LaplaceBeltrami => q.laplace_beltrami(psi),
            OperatorKind::KineticCurved => q.kinetic_curved(psi),
            OperatorKind::NaivePSquared => q.naive_p_squared(psi),
        }
    }
}

impl fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        const AXES: [&str; 3] = ["x", "y", "z"];
        match *self {
            OperatorKind::CartesianMomentum(i) => write!(f, "p_{}", AXES[i]),
            OperatorKind::BareMomentum(i) => write!(f, "bare_p_{}", AXES[i]),
            OperatorKind::GeneralizedMomentum(mu) => write!(f, "p_mu{mu}"),
            OperatorKind::LaplaceBeltrami => f.write_str("laplace_beltrami"),
            OperatorKind::KineticCurved => f.write_str("kinetic_curved"),
            OperatorKind::NaivePSquared => f.write_str("naive_p_squared"),
        }
    }
}

/// `max_k |⟨φ_k, A ψ_k⟩ − ⟨A φ_k, ψ_k⟩| / (‖φ_k‖ ‖ψ_k‖)` over `pairs` seeded
/// band-limited field pairs. Pair `k` draws its fields from seeds
/// `seed + 2k` and `seed + 2k + 1`.
pub fn hermiticity_defect<T: Real>(
    q: &Quantizer<T>,
    op: OperatorKind,
    seed: u64,
    pairs: usize,
    bandlimit: usize,
) -> Result<T> {
    let grid = q.grid();
    let defects = (0..pairs as u64)
        .into_par_iter()
        .map(|k| {
            let s = seed.wrapping_add(2 * k);
            let phi = TrigSeries::random(grid, s, bandlimit)?.sample(grid);
            let psi = TrigSeries::random(grid, s.wrapping_add(1), bandlimit)?.sample(grid);
            let lhs = inner_product(&phi, &op.apply(q, &psi)?)?;
            let rhs = inner_product(&op.apply(q, &phi)?, &psi)?;
            Ok((lhs - rhs).norm() / (phi.norm() * psi.norm()))
        })
        .collect::<Result<Vec<T>>>()?;
    Ok(defects
        .into_iter()
        .fold(T::zero(), |m, d| if d.is_nan() || d > m { d } else { m }))
}

/// Matrix of `op` in the nodal basis: column `k` is `op` applied to the
/// indicator of node `k` (row-major node order).
pub fn assemble_dense<T: Real>(q: &Quantizer<T>, op: OperatorKind) -> Result<Array2<Complex<T>>> {
    let grid = q.grid();
    let nodes = grid.len();
    if nodes > DENSE_NODE_LIMIT {
        return Err(Error::DenseTooLarge {
            nodes,
            limit: DENSE_NODE_LIMIT,
        });
    }
    let [n0, n1] = grid.shape();
    let columns = (0..nodes)
        .into_par_iter()
        .map(|k| {
            let mut e = Array2::zeros((n0, n1));
            e[[k / n1, k % n1]] = Complex::new(T::one(), T::zero());
            let col = op.apply(q, &ScalarField::new(grid, e)?)?;
            Ok(col.into_values().into_iter().collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Array2::from_shape_fn((nodes, nodes), |(r, c)| {
        columns[c][r]
    }))
}

/// `max |A − Aᴴ| / max |A|` with `A = W M` and `W` the quadrature weights
/// `√g w_ξ w_ζ`; zero iff `M` is self-adjoint in the discrete inner product.
pub fn dense_symmetry_defect<T: Real>(q: &Quantizer<T>, matrix: &Array2<Complex<T>>) -> T {
    let w: Vec<T> = q.grid().area_weights().into_iter().collect();
    let n = w.len();
    let (mut num, mut den) = (T::zero(), T::zero());
    for r in 0..n {
        for c in 0..n {
            let a = matrix[[r, c]] * w[r];
            let at = (matrix[[c, r]] * w[c]).conj();
            num = num.max((a - at).norm());
            den = den.max(a.norm());
        }
    }
    num / den
}
