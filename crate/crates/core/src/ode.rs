//! Adaptive Dormand–Prince 5(4) integration of scalar ODEs `y' = f(t, y)`.

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-12,
            atol: 1e-14,
            max_steps: 200_000,
        }
    }
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
/// Fifth-order weights (equal to the last row of `A`: first-same-as-last).
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
/// Fifth- minus fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrates from `(t0, y0)` to `t1` (either direction).
pub fn solve_to<T: Real, F: FnMut(T, T) -> T>(
    mut f: F,
    t0: T,
    y0: T,
    t1: T,
    opts: &OdeOptions,
) -> Result<T> {
    let span = t1 - t0;
    if span == T::zero() {
        return Ok(y0);
    }
    let dir = span.signum();
    let (rtol, atol) = (T::lit(opts.rtol), T::lit(opts.atol));
    let mut t = t0;
    let mut y = y0;
    let mut h = span.abs() * T::lit(1e-3);
    let h_min = span.abs() * T::epsilon() * T::lit(16.0);
    let mut k = [T::zero(); 7];
    k[0] = f(t, y);
    for _ in 0..opts.max_steps {
        let remaining = (t1 - t).abs();
        if remaining <= h_min {
            return Ok(y);
        }
        h = h.min(remaining);
        let hs = h * dir;
        for s in 1..7 {
            let mut acc = y;
            for (r, &a) in A[s].iter().enumerate().take(s) {
                acc += hs * T::lit(a) * k[r];
            }
            k[s] = f(t + hs * T::lit(C[s]), acc);
        }
        let mut y5 = y;
        let mut err = T::zero();
        for s in 0..7 {
            y5 += hs * T::lit(B5[s]) * k[s];
            err += hs * T::lit(E[s]) * k[s];
        }
        if !y5.is_finite() || !err.is_finite() {
            return Err(Error::Integration(format!(
                "non-finite state near t = {}",
                (t + hs).as_f64()
            )));
        }
        let scale = atol + rtol * y.abs().max(y5.abs());
        let ratio = (err / scale).abs();
        if ratio <= T::one() {
            t = if h == remaining { t1 } else { t + hs };
            y = y5;
            k[0] = k[6];
        }
        let grow = if ratio == T::zero() {
            T::lit(5.0)
        } else {
            (T::lit(0.9) * ratio.powf(T::lit(-0.2)))
                .max(T::lit(0.2))
                .min(T::lit(5.0))
        };
        h *= grow;
        if h < h_min {
            return Err(Error::Integration(format!(
                "step size underflow near t = {}",
                t.as_f64()
            )));
        }
    }
    Err(Error::Integration(format!(
        "exceeded {} steps between t = {} and t = {}",
        opts.max_steps,
        t0.as_f64(),
        t1.as_f64()
    )))
}

/// Solution at each of `points`, integrating outward from `t0` in both
/// directions and restarting exactly at every output point.
pub fn solve_at<T: Real, F: FnMut(T, T) -> T>(
    mut f: F,
    t0: T,
    y0: T,
    points: &[T],
    opts: &OdeOptions,
) -> Result<Vec<T>> {
    let mut out = vec![T::zero(); points.len()];
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        points[a]
            .partial_cmp(&points[b])
            .expect("finite output points")
    });
    let split = order.partition_point(|&i| points[i] < t0);
    let (below, above) = order.split_at(split);
    let (mut t, mut y) = (t0, y0);
    for &i in above {
        y = solve_to(&mut f, t, y, points[i], opts)?;
        t = points[i];
        out[i] = y;
    }
    let (mut t, mut y) = (t0, y0);
    for &i in below.iter().rev() {
        y = solve_to(&mut f, t, y, points[i], opts)?;
        t = points[i];
        out[i] = y;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_growth() {
        let y = solve_to(|_, y: f64| y, 0.0, 1.0, 2.0, &OdeOptions::default()).unwrap();
        assert!((y - 2f64.exp()).abs() < 1e-11);
    }

    #[test]
    fn backward_integration() {
        let y = solve_to(
            |t: f64, _| t.cos(),
            1.0,
            1f64.sin(),
            -2.0,
            &OdeOptions::default(),
        )
        .unwrap();
        assert!((y - (-2f64).sin()).abs() < 1e-12);
    }

    #[test]
    fn outputs_on_both_sides() {
        let pts = [-1.0, 0.5, 0.0, 2.0, -0.25];
        let ys = solve_at(|t: f64, _| 2.0 * t, 0.0, 1.0, &pts, &OdeOptions::default()).unwrap();
        for (t, y) in pts.iter().zip(ys) {
            assert!((y - (1.0 + t * t)).abs() < 1e-12);
        }
    }

    #[test]
    fn blow_up_is_reported() {
        // y = 1/(1 - t) blows up at t = 1.
        let r = solve_to(|_, y: f64| y * y, 0.0, 1.0, 2.0, &OdeOptions::default());
        assert!(matches!(r, Err(Error::Integration(_))));
    }
}
