//! Finite-difference first-derivative stencils along one grid coordinate.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, Axis};
use num_traits::Zero;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Formal accuracy order of the derivative stencils.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, Serialize)]
pub enum FdOrder {
    Second,
    #[default]
    Fourth,
    Sixth,
}

impl FdOrder {
    pub fn order(self) -> usize {
        match self {
            FdOrder::Second => 2,
            FdOrder::Fourth => 4,
            FdOrder::Sixth => 6,
        }
    }

    pub fn radius(self) -> usize {
        self.order() / 2
    }

    pub fn width(self) -> usize {
        self.order() + 1
    }

    pub fn from_order(order: usize) -> Result<Self> {
        match order {
            2 => Ok(FdOrder::Second),
            4 => Ok(FdOrder::Fourth),
            6 => Ok(FdOrder::Sixth),
            other => Err(Error::InvalidArgument(format!(
                "finite-difference order must be 2, 4 or 6, got {other}"
            ))),
        }
    }
}

impl fmt::Display for FdOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.order())
    }
}

impl FromStr for FdOrder {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let n: usize = s
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("not an integer: `{s}`")))?;
        Self::from_order(n)
    }
}

/// Fornberg's recursion: weights of derivatives `0..=m` at `z` from nodes `x`.
///
/// Returns `w[k][j]`, the weight of node `j` for the `k`-th derivative.
pub fn fornberg_weights<T: Real>(z: T, x: &[T], m: usize) -> Vec<Vec<T>> {
    let n = x.len();
    let mut c = vec![vec![T::zero(); n]; m + 1];
    let mut c1 = T::one();
    let mut c4 = x[0] - z;
    c[0][0] = T::one();
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = T::one();
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    let kk = T::from_usize_lossy(k);
                    c[k][i] = c1 * (kk * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                let kk = T::from_usize_lossy(k);
                c[k][j] = (c4 * c[k][j] - kk * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// Per-node first-derivative weights along one coordinate.
#[derive(Clone, Debug)]
pub struct Stencil1d<T> {
    n: usize,
    periodic: bool,
    /// For each node: first stencil index (may be negative when periodic) and weights.
    rows: Vec<(isize, Vec<T>)>,
}

impl<T: Real> Stencil1d<T> {
    pub fn new(n: usize, spacing: T, periodic: bool, order: FdOrder, coord: usize) -> Result<Self> {
        let width = order.width();
        if n < width {
            return Err(Error::GridTooCoarse {
                coord,
                points: n,
                width,
            });
        }
        let r = order.radius();
        let inv_h = spacing.recip();
        let offsets = |start: isize, at: usize| -> Vec<T> {
            let x: Vec<T> = (0..width)
                .map(|k| T::from_f64((start + k as isize) as f64 - at as f64).unwrap())
                .collect();
            fornberg_weights(T::zero(), &x, 1)[1]
                .iter()
                .map(|&w| w * inv_h)
                .collect()
        };
        let centered = offsets(-(r as isize), 0);
        let rows = (0..n)
            .map(|i| {
                if periodic {
                    (i as isize - r as isize, centered.clone())
                } else {
                    let start = i.saturating_sub(r).min(n - width);
                    (start as isize, offsets(start as isize, i))
                }
            })
            .collect();
        Ok(Self { n, periodic, rows })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn periodic(&self) -> bool {
        self.periodic
    }

    pub fn weights(&self, i: usize) -> (isize, &[T]) {
        let (s, w) = &self.rows[i];
        (*s, w)
    }

    #[inline]
    fn index(&self, start: isize, k: usize) -> usize {
        let idx = start + k as isize;
        if self.periodic {
            idx.rem_euclid(self.n as isize) as usize
        } else {
            idx as usize
        }
    }

    /// Differentiates `data` along `axis` of a 2-D array.
    pub fn apply<S>(&self, data: &Array2<S>, axis: usize) -> Array2<S>
    where
        S: Copy + Zero + std::ops::Mul<T, Output = S>,
    {
        let mut out = Array2::<S>::zeros(data.raw_dim());
        for (lane_in, mut lane_out) in data
            .lanes(Axis(axis))
            .into_iter()
            .zip(out.lanes_mut(Axis(axis)))
        {
            for (i, o) in lane_out.iter_mut().enumerate() {
                let (start, w) = self.weights(i);
                let mut acc = S::zero();
                for (k, &wk) in w.iter().enumerate() {
                    acc = acc + lane_in[self.index(start, k)] * wk;
                }
                *o = acc;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centered_fourth_order_coefficients() {
        let s = Stencil1d::<f64>::new(16, 1.0, true, FdOrder::Fourth, 0).unwrap();
        let (start, w) = s.weights(5);
        assert_eq!(start, 3);
        let expect = [1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0];
        for (a, b) in w.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn one_sided_rows_are_exact_on_polynomials() {
        for order in [FdOrder::Second, FdOrder::Fourth, FdOrder::Sixth] {
            let h = 0.1;
            let n = 20;
            let s = Stencil1d::<f64>::new(n, h, false, order, 0).unwrap();
            let p = order.order();
            let data = Array2::from_shape_fn((n, 1), |(i, _)| (i as f64 * h).powi(p as i32));
            let d = s.apply(&data, 0);
            for i in 0..n {
                let x = i as f64 * h;
                let exact = p as f64 * x.powi(p as i32 - 1);
                assert!((d[[i, 0]] - exact).abs() < 1e-9, "order {p} node {i}");
            }
        }
    }

    #[test]
    fn coarse_grid_rejected() {
        let e = Stencil1d::<f64>::new(4, 0.1, true, FdOrder::Fourth, 1).unwrap_err();
        assert_eq!(
            e,
            Error::GridTooCoarse {
                coord: 1,
                points: 4,
                width: 5
            }
        );
    }

    #[test]
    fn order_parsing() {
        assert_eq!("6".parse::<FdOrder>().unwrap(), FdOrder::Sixth);
        assert!("3".parse::<FdOrder>().is_err());
        assert!("x".parse::<FdOrder>().is_err());
    }
}
