//! Ordering factors `f_i`, their residual `R_i − H n_i`, and the per-axis
//! ODE solver on surfaces of revolution.

use std::sync::Arc;

use ndarray::{Array2, Zip};

use super::Quantizer;
use crate::error::{Error, Result};
use crate::fields::Grid;
use crate::geometry::frame_at;
use crate::jet::Taylor2;
use crate::ode::{solve_at, OdeOptions};
use crate::scalar::Real;
use crate::surfaces::{Reference, Surface};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FactorOrigin {
    ClosedForm,
    OdeSolved,
    Constant,
}

impl FactorOrigin {
    pub fn name(self) -> &'static str {
        match self {
            FactorOrigin::ClosedForm => "closed_form",
            FactorOrigin::OdeSolved => "ode_solved",
            FactorOrigin::Constant => "constant",
        }
    }
}

/// A coordinate line on which some `f_i` vanishes or blows up.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SingularLine<T> {
    pub axis: usize,
    pub coord: usize,
    pub at: T,
}

/// The triple `(f_x, f_y, f_z)` sampled on a grid.
#[derive(Clone, Debug)]
pub struct OrderingFactors<T> {
    grid: Arc<Grid<T>>,
    f: [Array2<T>; 3],
    inv: [Array2<T>; 3],
    origin: FactorOrigin,
    singular: Vec<SingularLine<T>>,
    support: Array2<bool>,
    /// Exact `∂_μ ln f_i`, when the factors are known in closed form.
    log_grad: Option<[[Array2<T>; 2]; 3]>,
}

/// Relative floor below which a factor is treated as zero.
const SUPPORT_FLOOR: f64 = 1e-6;

impl<T: Real> OrderingFactors<T> {
    /// `f_i ≡ 1`.
    pub fn constant(grid: &Arc<Grid<T>>) -> Self {
        let [n0, n1] = grid.shape();
        let ones = Array2::from_elem((n0, n1), T::one());
        let zeros = Array2::zeros((n0, n1));
        Self::assemble(
            grid,
            [ones.clone(), ones.clone(), ones],
            FactorOrigin::Constant,
            Vec::new(),
            Some([0, 1, 2].map(|_| [zeros.clone(), zeros.clone()])),
        )
    }

    /// Factors given as nodal samples. The support is every node where all
    /// three are finite and at least `1e-6 · max f_i`.
    pub fn from_values(
        grid: &Arc<Grid<T>>,
        f: [Array2<T>; 3],
        origin: FactorOrigin,
        singular: Vec<SingularLine<T>>,
    ) -> Result<Self> {
        let [n0, n1] = grid.shape();
        if f.iter().any(|a| a.dim() != (n0, n1)) {
            return Err(Error::GridMismatch);
        }
        Ok(Self::assemble(grid, f, origin, singular, None))
    }

    /// The chart's closed-form factors, with exact log-derivatives.
    pub fn closed_form(grid: &Arc<Grid<T>>) -> Result<Self> {
        let chart = grid.chart();
        let reference = chart
            .reference()
            .ok_or_else(|| Error::MissingReference(chart.name().into()))?;
        let [n0, n1] = grid.shape();
        let mut f = [0, 1, 2].map(|_| Array2::zeros((n0, n1)));
        let mut lg = [0, 1, 2].map(|_| [Array2::zeros((n0, n1)), Array2::zeros((n0, n1))]);
        for (i, j) in grid.nodes() {
            let (u, v) = grid.coords(i, j);
            for axis in 0..3 {
                let jet = reference.factor(axis, Taylor2::variable(u, 0), Taylor2::variable(v, 1));
                f[axis][[i, j]] = jet.val;
                for mu in 0..2 {
                    lg[axis][mu][[i, j]] = jet.grad[mu] / jet.val;
                }
            }
        }
        let singular = if chart.is_revolution() {
            (0..3)
                .map(|axis| revolution_axis_plan(chart, axis).map(|p| p.lines))
                .collect::<Result<Vec<_>>>()?
                .concat()
        } else {
            Vec::new()
        };
        let origin = if matches!(reference, Reference::Flat | Reference::Catenoid { .. }) {
            FactorOrigin::Constant
        } else {
            FactorOrigin::ClosedForm
        };
        Ok(Self::assemble(grid, f, origin, singular, Some(lg)))
    }

    fn assemble(
        grid: &Arc<Grid<T>>,
        f: [Array2<T>; 3],
        origin: FactorOrigin,
        singular: Vec<SingularLine<T>>,
        log_grad: Option<[[Array2<T>; 2]; 3]>,
    ) -> Self {
        let floors = f.clone().map(|a| {
            let max = a
                .iter()
                .filter(|x| x.is_finite())
                .fold(T::zero(), |m, &x| m.max(x.abs()));
            max * T::lit(SUPPORT_FLOOR)
        });
        let support = Array2::from_shape_fn(f[0].raw_dim(), |(i, j)| {
            (0..3).all(|k| {
                let x = f[k][[i, j]];
                x.is_finite() && x.abs() >= floors[k] && x != T::zero()
            })
        });
        let inv = [0, 1, 2].map(|k| {
            Array2::from_shape_fn(f[k].raw_dim(), |(i, j)| {
                let x = f[k][[i, j]];
                if x.is_finite() && x.abs() >= floors[k] && x != T::zero() {
                    x.recip()
                } else {
                    T::zero()
                }
            })
        });
        let f = f.map(|a| a.mapv(|x| if x.is_finite() { x } else { T::zero() }));
        Self {
            grid: Arc::clone(grid),
            f,
            inv,
            origin,
            singular,
            support,
            log_grad,
        }
    }

    pub fn grid(&self) -> &Arc<Grid<T>> {
        &self.grid
    }

    pub fn factor(&self, axis: usize) -> &Array2<T> {
        &self.f[axis]
    }

    /// `1/f_i` on the support, 0 elsewhere.
    pub fn inverse(&self, axis: usize) -> &Array2<T> {
        &self.inv[axis]
    }

    pub fn origin(&self) -> FactorOrigin {
        self.origin
    }

    pub fn singular_lines(&self) -> &[SingularLine<T>] {
        &self.singular
    }

    /// Nodes where every `f_i` is finite and non-negligible.
    pub fn support(&self) -> &Array2<bool> {
        &self.support
    }

    pub fn has_exact_log_gradient(&self) -> bool {
        self.log_grad.is_some()
    }

    pub(crate) fn ensure_positive(&self, grid: &Arc<Grid<T>>) -> Result<()> {
        if !Arc::ptr_eq(grid, &self.grid) {
            return Err(Error::GridMismatch);
        }
        for axis in 0..3 {
            for ((i, j), &x) in self.f[axis].indexed_iter() {
                if self.support[[i, j]] && !(x > T::zero()) {
                    return Err(Error::FactorNonpositive {
                        axis: ['x', 'y', 'z'][axis],
                        i,
                        j,
                        value: x.as_f64(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Support nodes at least `band` (in coordinate units) from every
    /// singular line and `trim` nodes from non-periodic edges.
    pub fn comparison_mask(&self, band: T, trim: usize) -> Array2<bool> {
        let grid = &self.grid;
        let mut mask = grid.interior(trim);
        Zip::indexed(&mut mask).for_each(|(i, j), m| {
            if !*m || !self.support[[i, j]] {
                *m = false;
                return;
            }
            let p = [grid.coord(0, i), grid.coord(1, j)];
            *m = self
                .singular
                .iter()
                .all(|l| coordinate_distance(grid.chart(), l.coord, p[l.coord], l.at) >= band);
        });
        mask
    }
}

/// Distance along one coordinate, wrapping on periodic coordinates.
fn coordinate_distance<T: Real>(chart: &Surface<T>, coord: usize, a: T, b: T) -> T {
    let d = (a - b).abs();
    if chart.periodic()[coord] {
        let period = chart.period(coord);
        let d = d % period;
        d.min(period - d)
    } else {
        d
    }
}

/// Residual fields of the factor conditions.
#[derive(Clone, Debug)]
pub struct FactorResidual<T> {
    /// `R_i = x_i^μ ∂_μ ln f_i`.
    pub r: [Array2<T>; 3],
    /// `R_i − H n_i`.
    pub axis: [Array2<T>; 3],
    /// `r^μ·(∂_μ H − ∂_μ R) + H·H − R·R`.
    pub nonlinear: Array2<T>,
    /// `R · r^μ`, the common first equation of both two-equation sets.
    pub tangential: [Array2<T>; 2],
    /// `−H² + R·H`.
    pub set_left: Array2<T>,
    /// `r^μ·(∂_μ H − ∂_μ R) + H·(H − R)`.
    pub set_right: Array2<T>,
}

/// Evaluates every factor condition. `∂_μ ln f_i` is exact for closed-form
/// factors and a finite difference otherwise; `∂_μ R` and `∂_μ (H n)` are
/// always finite differences. Values off the factors' support are 0.
pub fn factor_residual<T: Real>(
    q: &Quantizer<T>,
    f: &OrderingFactors<T>,
) -> Result<FactorResidual<T>> {
    if !Arc::ptr_eq(q.grid(), &f.grid) {
        return Err(Error::GridMismatch);
    }
    let shape = f.support.raw_dim();
    let h_vec = q.constraint_term().h_vec;
    let log_grad = match &f.log_grad {
        Some(lg) => lg.clone(),
        None => [0, 1, 2].map(|axis| {
            let ln = Array2::from_shape_fn(shape, |(i, j)| {
                if f.support[[i, j]] {
                    f.f[axis][[i, j]].ln()
                } else {
                    T::zero()
                }
            });
            [q.d_real(&ln, 0), q.d_real(&ln, 1)]
        }),
    };
    let r = [0, 1, 2].map(|axis| {
        let mut out = Array2::zeros(shape);
        Zip::indexed(&mut out).for_each(|(i, j), o| {
            if f.support[[i, j]] {
                *o = q.x_contra(axis, 0)[[i, j]] * log_grad[axis][0][[i, j]]
                    + q.x_contra(axis, 1)[[i, j]] * log_grad[axis][1][[i, j]];
            }
        });
        out
    });
    let axis = [0, 1, 2].map(|k| {
        let mut out = &r[k] - &h_vec[k];
        Zip::from(&mut out).and(&f.support).for_each(|o, &s| {
            if !s {
                *o = T::zero()
            }
        });
        out
    });
    // r^μ·∂_μ(H − R), summed over Cartesian components
    let mut divergence = Array2::zeros(shape);
    for k in 0..3 {
        let diff = &h_vec[k] - &r[k];
        for mu in 0..2 {
            let d = q.d_real(&diff, mu);
            Zip::from(&mut divergence)
                .and(&d)
                .and(q.x_contra(k, mu))
                .for_each(|o, &dv, &x| *o += x * dv);
        }
    }
    let dot = |a: &[Array2<T>; 3], b: &[Array2<T>; 3]| {
        let mut out = Array2::zeros(shape);
        for k in 0..3 {
            Zip::from(&mut out)
                .and(&a[k])
                .and(&b[k])
                .for_each(|o, &x, &y| *o += x * y);
        }
        out
    };
    let hh = dot(&h_vec, &h_vec);
    let rr = dot(&r, &r);
    let rh = dot(&r, &h_vec);
    let masked = |mut a: Array2<T>| {
        Zip::from(&mut a).and(&f.support).for_each(|o, &s| {
            if !s {
                *o = T::zero()
            }
        });
        a
    };
    let nonlinear = masked(&(&divergence + &hh) - &rr);
    let set_left = masked(&rh - &hh);
    let set_right = masked(&(&divergence + &hh) - &rh);
    let grid = q.grid();
    let tangential = [0, 1].map(|mu| {
        masked(Array2::from_shape_fn(shape, |(i, j)| {
            let rc = grid.frame(i, j).r_contra[mu];
            (0..3).fold(T::zero(), |acc, k| acc + r[k][[i, j]] * rc[k])
        }))
    });
    Ok(FactorResidual {
        r,
        axis,
        nonlinear,
        tangential,
        set_left,
        set_right,
    })
}

/// How one axis of the factor ODE is integrated.
#[derive(Clone, Debug)]
struct AxisPlan<T> {
    /// Coordinate the ODE runs along (0 meridian, 1 azimuth).
    coord: usize,
    /// Value of the other coordinate at which coefficients are sampled.
    fixed: T,
    /// Genuine zeros of the coefficient, sorted.
    zeros: Vec<T>,
    lines: Vec<SingularLine<T>>,
}

const SCAN_POINTS: usize = 4096;

/// Evaluation point on the chart with `coord = s` and the other coordinate
/// `fixed`, wrapped into the domain.
fn chart_point<T: Real>(chart: &Surface<T>, coord: usize, s: T, fixed: T) -> (T, T) {
    let wrap = |c: usize, x: T| {
        if chart.periodic()[c] {
            let lo = chart.domain()[c][0];
            let p = chart.period(c);
            let r = (x - lo) % p;
            lo + if r < T::zero() { r + p } else { r }
        } else {
            x
        }
    };
    if coord == 0 {
        (wrap(0, s), wrap(1, fixed))
    } else {
        (wrap(0, fixed), wrap(1, s))
    }
}

/// `(x_i^coord, H n_i)` along the ODE line.
fn coefficients<T: Real>(
    chart: &Surface<T>,
    axis: usize,
    coord: usize,
    fixed: T,
    s: T,
) -> Result<(T, T)> {
    let fr = frame_at(chart, chart_point(chart, coord, s, fixed))?;
    Ok((fr.r_contra[coord][axis], fr.mean_curv * fr.normal[axis]))
}

/// Sample range of a coordinate, stopping just short of singular endpoints.
fn scan_range<T: Real>(chart: &Surface<T>, coord: usize) -> (T, T) {
    let [lo, hi] = chart.domain()[coord];
    if chart.periodic()[coord] {
        (lo, hi)
    } else {
        let eps = (hi - lo) * T::lit(1e-9);
        (lo + eps, hi - eps)
    }
}

fn bisect<T: Real, F: Fn(T) -> Result<T>>(c: &F, mut a: T, mut b: T) -> Result<T> {
    let mut fa = c(a)?;
    for _ in 0..200 {
        let m = (a + b) * T::half();
        if m <= a || m >= b {
            break;
        }
        let fm = c(m)?;
        if fm == T::zero() {
            return Ok(m);
        }
        if (fm > T::zero()) == (fa > T::zero()) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok((a + b) * T::half())
}

fn revolution_axis_plan<T: Real>(chart: &Surface<T>, axis: usize) -> Result<AxisPlan<T>> {
    let phi_ref = if axis == 1 { T::FRAC_PI_2() } else { T::zero() };
    let [lo0, hi0] = chart.domain()[0];
    let theta_mid = (lo0 + hi0) * T::half();
    let scan = |coord: usize, fixed: T| -> Result<Vec<(T, T, T)>> {
        let (lo, hi) = scan_range(chart, coord);
        let n = SCAN_POINTS;
        let denom = if chart.periodic()[coord] { n } else { n - 1 };
        (0..n)
            .map(|k| {
                let s = lo + (hi - lo) * T::from_usize_lossy(k) / T::from_usize_lossy(denom);
                coefficients(chart, axis, coord, fixed, s).map(|(c, r)| (s, c, r))
            })
            .collect()
    };
    let meridian = scan(0, phi_ref)?;
    let azimuth = scan(1, theta_mid)?;
    let max_abs = |v: &[(T, T, T)]| v.iter().fold(T::zero(), |m, x| m.max(x.1.abs()));
    let (coord, fixed, samples) = if max_abs(&meridian) > T::lit(1e-8) * max_abs(&azimuth) {
        (0, phi_ref, meridian)
    } else {
        (1, theta_mid, azimuth)
    };
    let c_max = max_abs(&samples);
    let rhs_max = samples.iter().fold(T::zero(), |m, x| m.max(x.2.abs()));
    if c_max == T::zero() {
        return Err(Error::SingularOde {
            axis: ['x', 'y', 'z'][axis],
            location: fixed.as_f64(),
        });
    }
    let coef = |s: T| coefficients(chart, axis, coord, fixed, s).map(|x| x.0);
    let genuine = |z: T| -> Result<bool> {
        let (_, rhs) = coefficients(chart, axis, coord, fixed, z)?;
        Ok(rhs_max > T::zero() && rhs.abs() > T::lit(1e-8) * rhs_max)
    };
    let mut zeros = Vec::new();
    let mut brackets: Vec<(T, T)> = samples.windows(2).map(|w| (w[0].0, w[1].0)).collect();
    if chart.periodic()[coord] {
        let last = samples[samples.len() - 1].0;
        brackets.push((last, samples[0].0 + chart.period(coord)));
    }
    for (a, b) in brackets {
        let (ca, cb) = (coef(a)?, coef(b)?);
        let z = if ca == T::zero() {
            a
        } else if cb == T::zero() || (ca > T::zero()) == (cb > T::zero()) {
            continue;
        } else {
            bisect(&coef, a, b)?
        };
        let z = chart_point(chart, coord, z, fixed);
        let z = if coord == 0 { z.0 } else { z.1 };
        if genuine(z)? && !zeros.iter().any(|&w: &T| (w - z).abs() < T::lit(1e-9)) {
            zeros.push(z);
        }
    }
    zeros.sort_by(|a, b| a.partial_cmp(b).expect("finite zero"));
    let mut lines: Vec<SingularLine<T>> = zeros
        .iter()
        .map(|&at| SingularLine { axis, coord, at })
        .collect();
    // chart singular values where the coefficient degenerates too
    for &(c, at) in chart.singular_values() {
        if c != coord {
            continue;
        }
        let (lo, hi) = scan_range(chart, coord);
        let near = if (at - lo).abs() < (at - hi).abs() {
            lo
        } else {
            hi
        };
        if coef(near)?.abs() < T::lit(1e-6) * c_max {
            lines.push(SingularLine { axis, coord, at });
        }
    }
    Ok(AxisPlan {
        coord,
        fixed,
        zeros,
        lines,
    })
}

/// Solves `x_i^μ ∂_μ ln f_i = H n_i` axis by axis on a surface of revolution
/// about `z`.
///
/// Each axis is integrated along the meridian (or, where the meridian
/// coefficient vanishes identically, along the azimuth) with Dormand–Prince
/// 5(4). The line is split at zeros of the coefficient; each piece starts
/// from `f = 1` at its midpoint. Nodes on a zero get `f = 0`.
pub fn solve_factors_revolution<T: Real>(
    chart: &Surface<T>,
    grid: &Arc<Grid<T>>,
) -> Result<OrderingFactors<T>> {
    if !chart.is_revolution() {
        return Err(Error::NotRevolution(chart.name().into()));
    }
    if grid.chart().kind() != chart.kind()
        || grid.chart().a() != chart.a()
        || grid.chart().b() != chart.b()
    {
        return Err(Error::GridMismatch);
    }
    let [n0, n1] = grid.shape();
    let opts = OdeOptions::default();
    let mut factors = Vec::with_capacity(3);
    let mut singular = Vec::new();
    for axis in 0..3 {
        let plan = revolution_axis_plan(chart, axis)?;
        let coord = plan.coord;
        let periodic = chart.periodic()[coord];
        let period = chart.period(coord);
        let (lo, hi) = scan_range(chart, coord);
        let span = hi - lo;
        let c_scale = {
            let mut m = T::zero();
            for k in 0..64 {
                let s = lo + span * T::from_usize_lossy(k) / T::lit(63.0);
                m = m.max(coefficients(chart, axis, coord, plan.fixed, s)?.0.abs());
            }
            m
        };
        let raw = |s: T| -> Result<T> {
            let (c, rhs) = coefficients(chart, axis, coord, plan.fixed, s)?;
            Ok(if rhs == T::zero() { T::zero() } else { rhs / c })
        };
        let delta = span * T::lit(1e-7);
        let integrand = |s: T| -> Result<T> {
            let (c, _) = coefficients(chart, axis, coord, plan.fixed, s)?;
            if c.abs() < T::lit(1e-9) * c_scale {
                Ok((raw(s - delta)? + raw(s + delta)?) * T::half())
            } else {
                raw(s)
            }
        };
        // piece boundaries in unwrapped coordinates
        let mut pieces: Vec<(T, T)> = Vec::new();
        let z = &plan.zeros;
        if periodic {
            if z.is_empty() {
                pieces.push((lo, lo + period));
            } else {
                for k in 0..z.len() {
                    let next = if k + 1 < z.len() {
                        z[k + 1]
                    } else {
                        z[0] + period
                    };
                    pieces.push((z[k], next));
                }
            }
        } else {
            // outer edges are widened so nodes on the domain ends are kept
            let [dlo, dhi] = chart.domain()[coord];
            let mut edges = vec![dlo - span];
            edges.extend(z.iter().copied());
            edges.push(dhi + span);
            pieces.extend(edges.windows(2).map(|w| (w[0], w[1])));
        }
        let n_line = [n0, n1][coord];
        let tol = span * T::lit(1e-12);
        let mut line = vec![T::zero(); n_line];
        for (a, b) in pieces {
            let mid = if periodic {
                (a + b) * T::half()
            } else {
                (a.max(lo) + b.min(hi)) * T::half()
            };
            let mut idx = Vec::new();
            let mut pts = Vec::new();
            for k in 0..n_line {
                let mut s = grid.coord(coord, k);
                if periodic {
                    while s < a - tol {
                        s += period;
                    }
                    while s > b + tol {
                        s -= period;
                    }
                }
                if z.iter()
                    .any(|&w| coordinate_distance(chart, coord, s, w) < tol)
                {
                    continue;
                }
                if s > a && s < b {
                    idx.push(k);
                    pts.push(s);
                }
            }
            if pts.is_empty() {
                continue;
            }
            let mut failure = None;
            let ln_f = solve_at(
                |s, _| match integrand(s) {
                    Ok(v) => v,
                    Err(e) => {
                        failure.get_or_insert(e);
                        T::nan()
                    }
                },
                mid,
                T::zero(),
                &pts,
                &opts,
            );
            if let Some(e) = failure {
                return Err(e);
            }
            let ln_f = ln_f.map_err(|_| Error::SingularOde {
                axis: ['x', 'y', 'z'][axis],
                location: mid.as_f64(),
            })?;
            for (k, v) in idx.into_iter().zip(ln_f) {
                line[k] = v.exp();
            }
        }
        factors.push(Array2::from_shape_fn((n0, n1), |(i, j)| {
            line[if coord == 0 { i } else { j }]
        }));
        singular.extend(plan.lines);
    }
    let f: [Array2<T>; 3] = factors.try_into().expect("three axes");
    Ok(OrderingFactors::assemble(
        grid,
        f,
        FactorOrigin::OdeSolved,
        singular,
        None,
    ))
}
