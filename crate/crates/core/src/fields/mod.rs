//! Structured grids over chart domains and complex scalar fields on them.

mod stencil;
mod testfield;

use std::io::Write;
use std::ops::{Add, Mul, Sub};
use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{frame_at, GeomFrame};
use crate::scalar::Real;
use crate::surfaces::Surface;

pub use stencil::{fornberg_weights, FdOrder, Stencil1d};
pub use testfield::{random_test_field, TrigBasis, TrigSeries};

/// Minimum number of nodes per coordinate.
pub const MIN_POINTS: usize = 16;

/// Endpoint weights of the sixth-order Gregory rule; interior weights are 1.
const GREGORY6: [f64; 5] = [
    95.0 / 288.0,
    317.0 / 240.0,
    23.0 / 30.0,
    793.0 / 720.0,
    157.0 / 160.0,
];

/// ħ and m.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhysicalParams<T> {
    pub hbar: T,
    pub mass: T,
}

impl<T: Real> PhysicalParams<T> {
    pub fn new(hbar: T, mass: T) -> Result<Self> {
        if !(hbar > T::zero() && hbar.is_finite()) || !(mass > T::zero() && mass.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "hbar and mass must be positive and finite (hbar = {hbar}, mass = {mass})"
            )));
        }
        Ok(Self { hbar, mass })
    }

    /// `ħ² / 2m`.
    pub fn kinetic_prefactor(&self) -> T {
        self.hbar * self.hbar / (T::two() * self.mass)
    }
}

impl<T: Real> Default for PhysicalParams<T> {
    fn default() -> Self {
        Self {
            hbar: T::one(),
            mass: T::one(),
        }
    }
}

/// Tensor-product grid over a chart with the geometric frame at every node.
///
/// Periodic coordinates use `n` nodes spaced `period / n`. Non-periodic
/// coordinates span `[lo + margin, hi - margin]` with both ends included.
#[derive(Debug)]
pub struct Grid<T> {
    chart: Surface<T>,
    n: [usize; 2],
    origin: [T; 2],
    spacing: [T; 2],
    periodic: [bool; 2],
    margin: T,
    frames: Vec<GeomFrame<T>>,
    quadrature: [Vec<T>; 2],
}

impl<T: Real> Grid<T> {
    /// Builds the grid with the chart's default margin.
    pub fn new(chart: &Surface<T>, n_xi: usize, n_zeta: usize) -> Result<Arc<Self>> {
        Self::with_margin(chart, n_xi, n_zeta, chart.default_margin())
    }

    pub fn with_margin(
        chart: &Surface<T>,
        n_xi: usize,
        n_zeta: usize,
        margin: T,
    ) -> Result<Arc<Self>> {
        let n = [n_xi, n_zeta];
        for (coord, &points) in n.iter().enumerate() {
            if points < MIN_POINTS {
                return Err(Error::GridTooCoarse {
                    coord,
                    points,
                    width: MIN_POINTS,
                });
            }
        }
        if !(margin >= T::zero()) {
            return Err(Error::InvalidArgument(format!(
                "margin must be non-negative, got {margin}"
            )));
        }
        let periodic = chart.periodic();
        let domain = chart.domain();
        let mut origin = [T::zero(); 2];
        let mut spacing = [T::zero(); 2];
        for c in 0..2 {
            let [lo, hi] = domain[c];
            if periodic[c] {
                origin[c] = lo;
                spacing[c] = (hi - lo) / T::from_usize_lossy(n[c]);
            } else {
                let (lo, hi) = (lo + margin, hi - margin);
                if !(hi > lo) {
                    return Err(Error::InvalidArgument(format!(
                        "margin {margin} leaves an empty range for coordinate {c}"
                    )));
                }
                origin[c] = lo;
                spacing[c] = (hi - lo) / T::from_usize_lossy(n[c] - 1);
            }
        }
        let coord = |c: usize, i: usize| origin[c] + spacing[c] * T::from_usize_lossy(i);
        let frames = (0..n[0] * n[1])
            .into_par_iter()
            .map(|k| frame_at(chart, (coord(0, k / n[1]), coord(1, k % n[1]))))
            .collect::<Result<Vec<_>>>()?;
        let quadrature = [0, 1].map(|c| {
            let mut w = vec![spacing[c]; n[c]];
            if !periodic[c] {
                for (k, g) in GREGORY6.iter().enumerate() {
                    w[k] = spacing[c] * T::lit(*g);
                    w[n[c] - 1 - k] = spacing[c] * T::lit(*g);
                }
            }
            w
        });
        Ok(Arc::new(Self {
            chart: chart.clone(),
            n,
            origin,
            spacing,
            periodic,
            margin,
            frames,
            quadrature,
        }))
    }

    pub fn chart(&self) -> &Surface<T> {
        &self.chart
    }

    pub fn shape(&self) -> [usize; 2] {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n[0] * self.n[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self) -> [T; 2] {
        self.spacing
    }

    pub fn periodic(&self) -> [bool; 2] {
        self.periodic
    }

    pub fn margin(&self) -> T {
        self.margin
    }

    #[inline]
    pub fn coord(&self, c: usize, i: usize) -> T {
        self.origin[c] + self.spacing[c] * T::from_usize_lossy(i)
    }

    #[inline]
    pub fn coords(&self, i: usize, j: usize) -> (T, T) {
        (self.coord(0, i), self.coord(1, j))
    }

    #[inline]
    pub fn frame(&self, i: usize, j: usize) -> &GeomFrame<T> {
        &self.frames[i * self.n[1] + j]
    }

    pub fn frames(&self) -> &[GeomFrame<T>] {
        &self.frames
    }

    /// Node indices in row-major order.
    pub fn nodes(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n1 = self.n[1];
        (0..self.len()).map(move |k| (k / n1, k % n1))
    }

    /// Samples a real quantity of the frame at every node.
    pub fn frame_map<F: Fn(&GeomFrame<T>) -> T>(&self, f: F) -> Array2<T> {
        Array2::from_shape_fn((self.n[0], self.n[1]), |(i, j)| f(self.frame(i, j)))
    }

    /// Samples a function of the chart coordinates at every node.
    pub fn coord_map<S, F: Fn(T, T) -> S>(&self, f: F) -> Array2<S> {
        Array2::from_shape_fn((self.n[0], self.n[1]), |(i, j)| {
            let (u, v) = self.coords(i, j);
            f(u, v)
        })
    }

    pub fn stencil(&self, coord: usize, order: FdOrder) -> Result<Stencil1d<T>> {
        Stencil1d::new(
            self.n[coord],
            self.spacing[coord],
            self.periodic[coord],
            order,
            coord,
        )
    }

    /// Nodes at least `trim` points away from every non-periodic edge.
    pub fn interior(&self, trim: usize) -> Array2<bool> {
        Array2::from_shape_fn((self.n[0], self.n[1]), |(i, j)| {
            [i, j]
                .iter()
                .enumerate()
                .all(|(c, &k)| self.periodic[c] || (k >= trim && k + trim < self.n[c]))
        })
    }

    /// Quadrature weight (without √g) of node `(i, j)`.
    #[inline]
    pub fn cell_weight(&self, i: usize, j: usize) -> T {
        self.quadrature[0][i] * self.quadrature[1][j]
    }

    /// Area element `√g dξ dζ` per node.
    pub fn area_weights(&self) -> Array2<T> {
        Array2::from_shape_fn((self.n[0], self.n[1]), |(i, j)| {
            self.cell_weight(i, j) * self.frame(i, j).sqrt_g
        })
    }
}

/// Complex samples of a wavefunction, one per grid node.
#[derive(Clone, Debug)]
pub struct ScalarField<T> {
    values: Array2<Complex<T>>,
    grid: Arc<Grid<T>>,
}

impl<T: Real> ScalarField<T> {
    pub fn new(grid: &Arc<Grid<T>>, values: Array2<Complex<T>>) -> Result<Self> {
        let [n0, n1] = grid.shape();
        if values.dim() != (n0, n1) {
            return Err(Error::GridMismatch);
        }
        Ok(Self {
            values,
            grid: Arc::clone(grid),
        })
    }

    pub fn from_fn<F: Fn(T, T) -> Complex<T>>(grid: &Arc<Grid<T>>, f: F) -> Self {
        Self {
            values: grid.coord_map(f),
            grid: Arc::clone(grid),
        }
    }

    pub fn from_real(grid: &Arc<Grid<T>>, values: &Array2<T>) -> Result<Self> {
        Self::new(grid, values.mapv(|x| Complex::new(x, T::zero())))
    }

    pub fn constant(grid: &Arc<Grid<T>>, c: Complex<T>) -> Self {
        let [n0, n1] = grid.shape();
        Self {
            values: Array2::from_elem((n0, n1), c),
            grid: Arc::clone(grid),
        }
    }

    pub fn zeros(grid: &Arc<Grid<T>>) -> Self {
        Self::constant(grid, Complex::new(T::zero(), T::zero()))
    }

    pub fn values(&self) -> &Array2<Complex<T>> {
        &self.values
    }

    pub fn into_values(self) -> Array2<Complex<T>> {
        self.values
    }

    pub fn grid(&self) -> &Arc<Grid<T>> {
        &self.grid
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid)
    }

    pub fn with_values(&self, values: Array2<Complex<T>>) -> Self {
        debug_assert_eq!(values.dim(), self.values.dim());
        Self {
            values,
            grid: Arc::clone(&self.grid),
        }
    }

    pub fn map<F: Fn(Complex<T>) -> Complex<T>>(&self, f: F) -> Self {
        self.with_values(self.values.mapv(f))
    }

    /// Pointwise product with a real field.
    pub fn mul_real(&self, w: &Array2<T>) -> Self {
        let mut v = self.values.clone();
        v.zip_mut_with(w, |z, &r| *z *= r);
        self.with_values(v)
    }

    pub fn scale(&self, c: Complex<T>) -> Self {
        self.map(|z| z * c)
    }

    pub fn is_finite(&self) -> bool {
        self.values
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Maximum modulus over the nodes where `mask` is set.
    pub fn max_abs(&self, mask: Option<&Array2<bool>>) -> T {
        max_abs_masked(&self.values, mask).0
    }

    /// `⟨self, self⟩^{1/2}`.
    pub fn norm(&self) -> T {
        inner_product(self, self)
            .map(|z| z.re.sqrt())
            .unwrap_or_else(|_| T::nan())
    }

    /// Writes `coord0, coord1, re, im` rows with 17 significant digits.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let names = self.grid.chart().coord_names();
        let mut w = csv::Writer::from_writer(out);
        w.write_record([names[0], names[1], "re", "im"])?;
        for (i, j) in self.grid.nodes() {
            let (u, v) = self.grid.coords(i, j);
            let z = self.values[[i, j]];
            w.write_record([fmt17(u), fmt17(v), fmt17(z.re), fmt17(z.im)])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Writes one row per node: both chart coordinates, then each named column.
pub fn write_columns_csv<T: Real, W: Write>(
    grid: &Grid<T>,
    columns: &[(&str, &Array2<T>)],
    out: W,
) -> Result<()> {
    let names = grid.chart().coord_names();
    let mut w = csv::Writer::from_writer(out);
    let header: Vec<&str> = names
        .iter()
        .copied()
        .chain(columns.iter().map(|c| c.0))
        .collect();
    w.write_record(&header)?;
    for (i, j) in grid.nodes() {
        let (u, v) = grid.coords(i, j);
        let row: Vec<String> = [fmt17(u), fmt17(v)]
            .into_iter()
            .chain(columns.iter().map(|c| fmt17(c.1[[i, j]])))
            .collect();
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// `{:.16e}`: 17 significant digits.
pub fn fmt17<T: Real>(x: T) -> String {
    format!("{:.16e}", x.as_f64())
}

/// Largest modulus over masked nodes and its index.
pub fn max_abs_masked<T: Real>(
    values: &Array2<Complex<T>>,
    mask: Option<&Array2<bool>>,
) -> (T, Option<(usize, usize)>) {
    let mut best = (T::zero(), None);
    for ((i, j), z) in values.indexed_iter() {
        if mask.is_some_and(|m| !m[[i, j]]) {
            continue;
        }
        let a = z.norm();
        if a.is_nan() || a > best.0 {
            best = (a, Some((i, j)));
            if a.is_nan() {
                break;
            }
        }
    }
    best
}

impl<T: Real> Add for &ScalarField<T> {
    type Output = ScalarField<T>;
    fn add(self, rhs: Self) -> ScalarField<T> {
        assert!(self.same_grid(rhs), "fields live on different grids");
        self.with_values(&self.values + &rhs.values)
    }
}

impl<T: Real> Sub for &ScalarField<T> {
    type Output = ScalarField<T>;
    fn sub(self, rhs: Self) -> ScalarField<T> {
        assert!(self.same_grid(rhs), "fields live on different grids");
        self.with_values(&self.values - &rhs.values)
    }
}

impl<T: Real> Mul<Complex<T>> for &ScalarField<T> {
    type Output = ScalarField<T>;
    fn mul(self, c: Complex<T>) -> ScalarField<T> {
        self.scale(c)
    }
}

/// `∂_coord ψ` by finite differences; periodic coordinates wrap, non-periodic
/// edges use one-sided stencils of the same order.
pub fn partial<T: Real>(
    field: &ScalarField<T>,
    coord: usize,
    order: FdOrder,
) -> Result<ScalarField<T>> {
    let stencil = field.grid.stencil(coord, order)?;
    Ok(field.with_values(stencil.apply(&field.values, coord)))
}

/// `∂_coord` of a real nodal quantity.
pub fn partial_real<T: Real>(
    grid: &Grid<T>,
    data: &Array2<T>,
    coord: usize,
    order: FdOrder,
) -> Result<Array2<T>> {
    Ok(grid.stencil(coord, order)?.apply(data, coord))
}

/// `Σ conj(φ) ψ √g w_ξ w_ζ`: trapezoidal weights on periodic coordinates,
/// sixth-order Gregory end corrections on non-periodic ones.
pub fn inner_product<T: Real>(phi: &ScalarField<T>, psi: &ScalarField<T>) -> Result<Complex<T>> {
    if !phi.same_grid(psi) {
        return Err(Error::GridMismatch);
    }
    let grid = &phi.grid;
    let mut acc = Complex::new(T::zero(), T::zero());
    for ((i, j), p) in phi.values.indexed_iter() {
        let w = grid.cell_weight(i, j) * grid.frame(i, j).sqrt_g;
        acc += p.conj() * psi.values[[i, j]] * w;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI, TAU};

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    fn torus_grid(n: usize) -> Arc<Grid<f64>> {
        Grid::new(&Surface::torus(2.0, 1.0).unwrap(), n, n).unwrap()
    }

    #[test]
    fn grid_rejects_fewer_than_sixteen_points() {
        let t = Surface::<f64>::torus(2.0, 1.0).unwrap();
        assert!(matches!(
            Grid::new(&t, 8, 32),
            Err(Error::GridTooCoarse { coord: 0, .. })
        ));
    }

    #[test]
    fn periodic_spacing_times_count_is_period() {
        let g = torus_grid(64);
        assert_eq!(g.spacing()[0] * 64.0, TAU);
        let s = Grid::new(&Surface::<f64>::spheroid(1.0, 2.0).unwrap(), 33, 64).unwrap();
        assert!((s.coord(0, 0) - 0.05).abs() < 1e-15);
        assert!((s.coord(0, 32) - (PI - 0.05)).abs() < 1e-14);
    }

    #[test]
    fn spheroid_without_margin_hits_the_pole() {
        let s = Surface::<f64>::spheroid(1.0, 2.0).unwrap();
        assert!(matches!(
            Grid::with_margin(&s, 16, 16, 0.0),
            Err(Error::DegenerateChart { .. })
        ));
    }

    #[test]
    fn derivative_of_fourier_mode_sixth_order() {
        let g = torus_grid(128);
        let psi = ScalarField::from_fn(&g, |_, p| Complex::from_polar(1.0, 3.0 * p));
        let d = partial(&psi, 1, FdOrder::Sixth).unwrap();
        let mut err: f64 = 0.0;
        for ((i, j), z) in d.values().indexed_iter() {
            let p = g.coord(1, j);
            let exact = c(0.0, 3.0) * Complex::from_polar(1.0, 3.0 * p);
            err = err.max((z - exact).norm());
            let _ = i;
        }
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn fourth_order_error_matches_stencil_symbol() {
        // D e^{ikx} = i (8 sin kh - sin 2kh)/(6h) e^{ikx}
        let g = torus_grid(128);
        let h = g.spacing()[1];
        let k = 3.0;
        let psi = ScalarField::from_fn(&g, |_, p| Complex::from_polar(1.0, k * p));
        let d = partial(&psi, 1, FdOrder::Fourth).unwrap();
        let symbol = (8.0 * (k * h).sin() - (2.0 * k * h).sin()) / (6.0 * h);
        let predicted = k - symbol;
        let err = (&d - &psi.scale(c(0.0, k))).max_abs(None);
        assert!((err - predicted).abs() < 1e-12, "{err} vs {predicted}");
        assert!(predicted > 4e-5 && predicted < 5e-5);
    }

    #[test]
    fn constant_field_has_zero_derivative() {
        let g = Grid::new(&Surface::<f64>::spheroid(1.0, 2.0).unwrap(), 32, 32).unwrap();
        let psi = ScalarField::constant(&g, c(1.5, -0.5));
        for coord in 0..2 {
            assert!(partial(&psi, coord, FdOrder::Fourth).unwrap().max_abs(None) < 1e-12);
        }
    }

    #[test]
    fn derivative_of_sine_vanishes_at_equator() {
        let s = Surface::<f64>::sphere(1.0).unwrap();
        let g = Grid::new(&s, 65, 16).unwrap();
        assert!((g.coord(0, 32) - FRAC_PI_2).abs() < 1e-15);
        let psi = ScalarField::from_fn(&g, |t, _| c(t.sin(), 0.0));
        let d = partial(&psi, 0, FdOrder::Fourth).unwrap();
        assert!(d.values()[[32, 3]].norm() < 1e-8);
    }

    #[test]
    fn torus_area() {
        let g = torus_grid(64);
        let one = ScalarField::constant(&g, c(1.0, 0.0));
        let area = inner_product(&one, &one).unwrap();
        let exact = 4.0 * PI * PI * 2.0;
        assert!(((area.re - exact) / exact).abs() < 1e-10);
        assert!(area.im.abs() < 1e-12);
    }

    #[test]
    fn fourier_modes_orthogonal_on_torus() {
        let g = torus_grid(64);
        let a = ScalarField::from_fn(&g, |_, p| Complex::from_polar(1.0, 2.0 * p));
        let b = ScalarField::from_fn(&g, |_, p| Complex::from_polar(1.0, 5.0 * p));
        assert!(inner_product(&a, &b).unwrap().norm() < 1e-12);
    }

    #[test]
    fn unit_sphere_area_without_polar_caps() {
        let delta = 0.05;
        let s = Surface::<f64>::spheroid(1.0, 1.0).unwrap();
        let g = Grid::with_margin(&s, 128, 128, delta).unwrap();
        let one = ScalarField::constant(&g, c(1.0, 0.0));
        let area = inner_product(&one, &one).unwrap().re;
        let exact = 4.0 * PI * delta.cos();
        assert!(
            ((area - exact) / exact).abs() < 1e-8,
            "{}",
            (area - exact) / exact
        );
    }

    #[test]
    fn gregory_weights_integrate_quintics_exactly() {
        let n = 21;
        let h = 1.0 / (n - 1) as f64;
        let mut w = vec![h; n];
        for (k, g) in GREGORY6.iter().enumerate() {
            w[k] = h * g;
            w[n - 1 - k] = h * g;
        }
        for p in 0..6 {
            let q: f64 = (0..n).map(|i| w[i] * (i as f64 * h).powi(p)).sum();
            assert!((q - 1.0 / (p as f64 + 1.0)).abs() < 1e-13, "degree {p}");
        }
    }

    #[test]
    fn mismatched_grids_rejected() {
        let a = ScalarField::constant(&torus_grid(32), c(1.0, 0.0));
        let b = ScalarField::constant(&torus_grid(32), c(1.0, 0.0));
        assert_eq!(inner_product(&a, &b).unwrap_err(), Error::GridMismatch);
    }

    #[test]
    fn csv_export_has_header_and_full_precision() {
        let g = torus_grid(16);
        let psi = ScalarField::from_fn(&g, |t, p| c(t.sin(), p.cos()));
        let mut buf = Vec::new();
        psi.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("theta,phi,re,im"));
        let row: Vec<&str> = lines.nth(17).unwrap().split(',').collect();
        assert_eq!(row.len(), 4);
        let theta: f64 = row[0].parse().unwrap();
        assert_eq!(theta, g.coord(0, 1));
        assert_eq!(row[2].parse::<f64>().unwrap(), g.coord(0, 1).sin());
        assert!(row[2].contains('e'));
    }

    #[test]
    fn physical_params_validated() {
        assert!(PhysicalParams::new(0.0, 1.0).is_err());
        assert!(PhysicalParams::new(1.0, -1.0).is_err());
        assert_eq!(
            PhysicalParams::new(2.0, 0.5).unwrap().kinetic_prefactor(),
            4.0
        );
    }
}
