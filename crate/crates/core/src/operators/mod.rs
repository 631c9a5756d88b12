//! Discrete momentum and kinetic-energy operators as field-to-field maps.
//!
//! All derivatives are finite differences along the grid coordinates; every
//! geometric coefficient (`√g`, `g^{μν}`, `r^μ`, `H n`, `Γ_μ`) is taken from the
//! exact frames stored on the grid.

mod factors;
mod hermiticity;

use std::sync::Arc;

use ndarray::{Array2, Zip};
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::fields::{FdOrder, Grid, PhysicalParams, ScalarField, Stencil1d};
use crate::scalar::Real;

pub use factors::{
    factor_residual, solve_factors_revolution, FactorOrigin, FactorResidual, OrderingFactors,
    SingularLine,
};
pub use hermiticity::{
    assemble_dense, dense_symmetry_defect, hermiticity_defect, OperatorKind, DENSE_NODE_LIMIT,
};

type CArray<T> = Array2<Complex<T>>;

/// Placement of the ordering factors around the two momenta.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Ordering {
    /// `(1/f) p f² p (1/f)`.
    Symmetric,
    /// `(1/f) p f p`.
    Left,
    /// `p f p (1/f)`.
    Right,
}

impl Ordering {
    pub const ALL: [Ordering; 3] = [Ordering::Symmetric, Ordering::Left, Ordering::Right];

    pub fn name(self) -> &'static str {
        match self {
            Ordering::Symmetric => "T",
            Ordering::Left => "T1",
            Ordering::Right => "T2",
        }
    }
}

/// `H n` sampled on the grid.
#[derive(Clone, Debug)]
pub struct ConstraintTerm<T> {
    pub h_vec: [Array2<T>; 3],
}

impl<T: Real> ConstraintTerm<T> {
    /// `max |H n · r^μ|` over all nodes and both `μ`, with its node.
    pub fn orthogonality_residual(&self, grid: &Grid<T>) -> (T, Option<(usize, usize)>) {
        let mut best = (T::zero(), None);
        for (i, j) in grid.nodes() {
            let fr = grid.frame(i, j);
            for mu in 0..2 {
                let d = (0..3).fold(T::zero(), |acc, k| {
                    acc + self.h_vec[k][[i, j]] * fr.r_contra[mu][k]
                });
                if d.abs() > best.0 {
                    best = (d.abs(), Some((i, j)));
                }
            }
        }
        best
    }
}

/// Operator context: a grid, a stencil order and `(ħ, m)`.
#[derive(Clone, Debug)]
pub struct Quantizer<T> {
    grid: Arc<Grid<T>>,
    order: FdOrder,
    phys: PhysicalParams<T>,
    stencils: [Stencil1d<T>; 2],
    sqrt_g: Array2<T>,
    inv_sqrt_g: Array2<T>,
    quarter_g: Array2<T>,
    inv_quarter_g: Array2<T>,
    /// `g_inv[μ][ν] = g^{μν}`.
    g_inv: [[Array2<T>; 2]; 2],
    /// `x_contra[i][μ]`: Cartesian component `i` of `r^μ`.
    x_contra: [[Array2<T>; 2]; 3],
    h_vec: [Array2<T>; 3],
    gamma: [Array2<T>; 2],
    mean_curv: Array2<T>,
}

impl<T: Real> Quantizer<T> {
    pub fn new(grid: &Arc<Grid<T>>, order: FdOrder, phys: PhysicalParams<T>) -> Result<Self> {
        let stencils = [grid.stencil(0, order)?, grid.stencil(1, order)?];
        let map = |f: &dyn Fn(&crate::geometry::GeomFrame<T>) -> T| grid.frame_map(f);
        let sqrt_g = map(&|fr| fr.sqrt_g);
        Ok(Self {
            grid: Arc::clone(grid),
            order,
            phys,
            stencils,
            inv_sqrt_g: sqrt_g.mapv(|s| s.recip()),
            quarter_g: sqrt_g.mapv(|s| s.sqrt()),
            inv_quarter_g: sqrt_g.mapv(|s| s.sqrt().recip()),
            sqrt_g,
            g_inv: [0, 1].map(|mu| [0, 1].map(|nu| map(&|fr| fr.metric_inv[mu][nu]))),
            x_contra: [0, 1, 2].map(|i| [0, 1].map(|mu| map(&|fr| fr.r_contra[mu][i]))),
            h_vec: [0, 1, 2].map(|i| map(&|fr| fr.mean_curv * fr.normal[i])),
            gamma: [0, 1].map(|mu| map(&|fr| fr.gamma_contracted[mu])),
            mean_curv: map(&|fr| fr.mean_curv),
        })
    }

    /// Fourth-order stencils with `ħ = m = 1`.
    pub fn with_defaults(grid: &Arc<Grid<T>>) -> Result<Self> {
        Self::new(grid, FdOrder::default(), PhysicalParams::default())
    }

    pub fn grid(&self) -> &Arc<Grid<T>> {
        &self.grid
    }

    pub fn order(&self) -> FdOrder {
        self.order
    }

    pub fn phys(&self) -> PhysicalParams<T> {
        self.phys
    }

    /// Nodes whose composite (two-derivative) stencils are all centered.
    pub fn interior(&self) -> Array2<bool> {
        self.grid.interior(2 * self.order.radius())
    }

    pub fn mean_curvature(&self) -> &Array2<T> {
        &self.mean_curv
    }

    pub fn sqrt_g(&self) -> &Array2<T> {
        &self.sqrt_g
    }

    /// `(r^μ)_i` for Cartesian axis `i`.
    pub fn x_contra(&self, axis: usize, mu: usize) -> &Array2<T> {
        &self.x_contra[axis][mu]
    }

    pub fn constraint_term(&self) -> ConstraintTerm<T> {
        ConstraintTerm {
            h_vec: self.h_vec.clone(),
        }
    }

    /// `Σ_i 2 H n_i x_i^μ`: the first-order coefficient that must vanish.
    pub fn first_order_coefficient(&self, mu: usize) -> Array2<T> {
        let mut out = Array2::zeros(self.sqrt_g.raw_dim());
        for i in 0..3 {
            Zip::from(&mut out)
                .and(&self.h_vec[i])
                .and(&self.x_contra[i][mu])
                .for_each(|o, &h, &x| *o += T::two() * h * x);
        }
        out
    }

    fn minus_i_hbar(&self) -> Complex<T> {
        Complex::new(T::zero(), -self.phys.hbar)
    }

    fn inv_two_m(&self) -> T {
        (T::two() * self.phys.mass).recip()
    }

    fn check(&self, psi: &ScalarField<T>) -> Result<()> {
        if Arc::ptr_eq(psi.grid(), &self.grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// `∂_μ` of raw samples.
    pub fn d_raw(&self, values: &CArray<T>, mu: usize) -> CArray<T> {
        self.stencils[mu].apply(values, mu)
    }

    /// `∂_μ` of a real nodal quantity.
    pub fn d_real(&self, values: &Array2<T>, mu: usize) -> Array2<T> {
        self.stencils[mu].apply(values, mu)
    }

    /// `Σ_μ x_i^μ ∂_μ ψ`.
    fn directional(&self, values: &CArray<T>, axis: usize) -> CArray<T> {
        let d0 = self.d_raw(values, 0);
        let d1 = self.d_raw(values, 1);
        let mut out = d0;
        Zip::from(&mut out)
            .and(&d1)
            .and(&self.x_contra[axis][0])
            .and(&self.x_contra[axis][1])
            .for_each(|o, &b, &x0, &x1| *o = *o * x0 + b * x1);
        out
    }

    /// `-iħ (x_i^μ ∂_μ + H n_i)` on raw samples.
    fn p_raw(&self, values: &CArray<T>, axis: usize) -> CArray<T> {
        let mut out = self.directional(values, axis);
        let c = self.minus_i_hbar();
        Zip::from(&mut out)
            .and(values)
            .and(&self.h_vec[axis])
            .for_each(|o, &v, &h| *o = (*o + v * h) * c);
        out
    }

    /// `(1/√g) ∂_μ (g^{μν} √g ∂_ν ψ)`.
    pub fn laplace_beltrami(&self, psi: &ScalarField<T>) -> Result<ScalarField<T>> {
        self.check(psi)?;
        let v = psi.values();
        let grad = [self.d_raw(v, 0), self.d_raw(v, 1)];
        let mut acc = CArray::<T>::zeros(v.raw_dim());
        for mu in 0..2 {
            let mut flux = CArray::<T>::zeros(v.raw_dim());
            Zip::from(&mut flux)
                .and(&grad[0])
                .and(&grad[1])
                .and(&self.g_inv[mu][0])
                .and(&self.g_inv[mu][1])
                .and(&self.sqrt_g)
                .for_each(|f, &d0, &d1, &g0, &g1, &s| *f = (d0 * g0 + d1 * g1) * s);
            acc = acc + self.d_raw(&flux, mu);
        }
        Zip::from(&mut acc)
            .and(&self.inv_sqrt_g)
            .for_each(|a, &w| *a *= w);
        Ok(psi.with_values(acc))
    }

    /// `p_i ψ = -iħ (x_i^μ ∂_μ ψ + H n_i ψ)`.
    pub fn cartesian_momentum(&self, psi: &ScalarField<T>, axis: usize) -> Result<ScalarField<T>> {
        self.check(psi)?;
        Ok(psi.with_values(self.p_raw(psi.values(), axis)))
    }

    /// `-iħ x_i^μ ∂_μ ψ`, without the constraint term.
    pub fn bare_momentum(&self, psi: &ScalarField<T>, axis: usize) -> Result<ScalarField<T>> {
        self.check(psi)?;
        let c = self.minus_i_hbar();
        Ok(psi.with_values(self.directional(psi.values(), axis).mapv(|z| z * c)))
    }

    /// `p_μ ψ = -iħ (∂_μ ψ + ½ Γ_μ ψ)`.
    pub fn generalized_momentum(&self, psi: &ScalarField<T>, mu: usize) -> Result<ScalarField<T>> {
        self.check(psi)?;
        Ok(psi.with_values(self.p_mu_raw(psi.values(), mu)))
    }

    fn p_mu_raw(&self, values: &CArray<T>, mu: usize) -> CArray<T> {
        let mut out = self.d_raw(values, mu);
        let c = self.minus_i_hbar();
        Zip::from(&mut out)
            .and(values)
            .and(&self.gamma[mu])
            .for_each(|o, &v, &g| *o = (*o + v * (g * T::half())) * c);
        out
    }

    /// `(1/2m) g^{-1/4} p_μ g^{1/4} g^{μν} g^{1/4} p_ν g^{-1/4} ψ`, composed literally.
    pub fn kinetic_curved(&self, psi: &ScalarField<T>) -> Result<ScalarField<T>> {
        self.check(psi)?;
        let inner = mul(psi.values(), &self.inv_quarter_g);
        let p_nu = [self.p_mu_raw(&inner, 0), self.p_mu_raw(&inner, 1)];
        let mut acc = CArray::<T>::zeros(inner.raw_dim());
        for mu in 0..2 {
            let mut mid = CArray::<T>::zeros(inner.raw_dim());
            Zip::from(&mut mid)
                .and(&p_nu[0])
                .and(&p_nu[1])
                .and(&self.g_inv[mu][0])
                .and(&self.g_inv[mu][1])
                .and(&self.quarter_g)
                .for_each(|m, &a, &b, &g0, &g1, &q| *m = ((a * q) * g0 + (b * q) * g1) * q);
            acc = acc + self.p_mu_raw(&mid, mu);
        }
        let scale = self.inv_two_m();
        Zip::from(&mut acc)
            .and(&self.inv_quarter_g)
            .for_each(|a, &w| *a *= w * scale);
        Ok(psi.with_values(acc))
    }

    /// `(1/2m) Σ_i p_i p_i ψ`.
    pub fn naive_p_squared(&self, psi: &ScalarField<T>) -> Result<ScalarField<T>> {
        self.check(psi)?;
        let mut acc = CArray::<T>::zeros(psi.values().raw_dim());
        for axis in 0..3 {
            acc = acc + self.p_raw(&self.p_raw(psi.values(), axis), axis);
        }
        let scale = self.inv_two_m();
        Ok(psi.with_values(acc.mapv(|z| z * scale)))
    }

    /// `(1/2m) Σ_i` of the chosen ordering of `f_i` around `p_i p_i`.
    ///
    /// Fails with [`Error::FactorNonpositive`] if some `f_i ≤ 0` on the factors'
    /// support.
    pub fn kinetic(
        &self,
        psi: &ScalarField<T>,
        ordering: Ordering,
        f: &OrderingFactors<T>,
    ) -> Result<ScalarField<T>> {
        self.check(psi)?;
        f.ensure_positive(&self.grid)?;
        let v = psi.values();
        let mut acc = CArray::<T>::zeros(v.raw_dim());
        for axis in 0..3 {
            let fi = f.factor(axis);
            let inv = f.inverse(axis);
            let term = match ordering {
                Ordering::Symmetric => {
                    let f2 = fi.mapv(|x| x * x);
                    let inner = self.p_raw(&mul(v, inv), axis);
                    mul(&self.p_raw(&mul(&inner, &f2), axis), inv)
                }
                Ordering::Left => {
                    let inner = self.p_raw(v, axis);
                    mul(&self.p_raw(&mul(&inner, fi), axis), inv)
                }
                Ordering::Right => {
                    let inner = self.p_raw(&mul(v, inv), axis);
                    self.p_raw(&mul(&inner, fi), axis)
                }
            };
            acc = acc + term;
        }
        let scale = self.inv_two_m();
        Ok(psi.with_values(acc.mapv(|z| z * scale)))
    }

    pub fn kinetic_t(
        &self,
        psi: &ScalarField<T>,
        f: &OrderingFactors<T>,
    ) -> Result<ScalarField<T>> {
        self.kinetic(psi, Ordering::Symmetric, f)
    }

    pub fn kinetic_t1(
        &self,
        psi: &ScalarField<T>,
        f: &OrderingFactors<T>,
    ) -> Result<ScalarField<T>> {
        self.kinetic(psi, Ordering::Left, f)
    }

    pub fn kinetic_t2(
        &self,
        psi: &ScalarField<T>,
        f: &OrderingFactors<T>,
    ) -> Result<ScalarField<T>> {
        self.kinetic(psi, Ordering::Right, f)
    }

    /// `-(ħ²/2m) ∇² ψ`.
    pub fn kinetic_reference(&self, psi: &ScalarField<T>) -> Result<ScalarField<T>> {
        let c = -self.phys.kinetic_prefactor();
        Ok(self
            .laplace_beltrami(psi)?
            .scale(Complex::new(c, T::zero())))
    }
}

fn mul<T: Real>(a: &CArray<T>, w: &Array2<T>) -> CArray<T> {
    let mut out = a.clone();
    Zip::from(&mut out).and(w).for_each(|z, &r| *z *= r);
    out
}

/// `max_mask |a − b| / max_mask |b|` and the node of the largest difference.
pub fn relative_max_error<T: Real>(
    a: &ScalarField<T>,
    b: &ScalarField<T>,
    mask: Option<&Array2<bool>>,
) -> (T, Option<(usize, usize)>) {
    let (num, at) = crate::fields::max_abs_masked(&(a - b).into_values(), mask);
    let den = b.max_abs(mask);
    (num / den, at)
}

#[cfg(test)]
mod tests;
