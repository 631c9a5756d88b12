//! Pointwise differential geometry of an embedded surface.
//!
//! A [`GeomFrame`] is assembled from the second-order jet of the embedding:
//!
//! * `g_{μν} = r_μ · r_ν`, `r^μ = g^{μν} r_ν` (so `r^μ · r_ν = δ^μ_ν`),
//! * `n = (r_ξ × r_ζ) / |r_ξ × r_ζ|`,
//! * `b_{μν} = n · ∂_μ∂_ν r` and `Γ^γ_{μν} = r^γ · ∂_μ∂_ν r`,
//! * `H = ½ g^{μν} b_{μν}`, `K = det b / det g`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{cross3, dot3, norm3, scale3, Real, Vec3};
use crate::surfaces::Surface;

/// Embedding value with all first and second partial derivatives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet2<T> {
    pub value: Vec3<T>,
    /// `d1[μ] = ∂_μ r`.
    pub d1: [Vec3<T>; 2],
    /// Packed second derivatives `[∂_ξ∂_ξ r, ∂_ξ∂_ζ r, ∂_ζ∂_ζ r]`.
    pub d2: [Vec3<T>; 3],
}

impl<T: Real> Jet2<T> {
    pub(crate) fn from_components(r: [crate::jet::Taylor2<T>; 3]) -> Self {
        Self {
            value: [r[0].val, r[1].val, r[2].val],
            d1: [
                [r[0].grad[0], r[1].grad[0], r[2].grad[0]],
                [r[0].grad[1], r[1].grad[1], r[2].grad[1]],
            ],
            d2: [0, 1, 2].map(|k| [r[0].hess[k], r[1].hess[k], r[2].hess[k]]),
        }
    }

    /// `∂_μ∂_ν r`, symmetric in `μ, ν`.
    pub fn d2(&self, mu: usize, nu: usize) -> Vec3<T> {
        self.d2[mu + nu]
    }
}

/// Full pointwise geometric dictionary at a chart point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GeomFrame<T> {
    pub position: Vec3<T>,
    /// `r_μ`.
    pub r_cov: [Vec3<T>; 2],
    /// `r^μ`.
    pub r_contra: [Vec3<T>; 2],
    pub metric: [[T; 2]; 2],
    pub metric_inv: [[T; 2]; 2],
    pub det_g: T,
    pub sqrt_g: T,
    pub normal: Vec3<T>,
    pub second_form: [[T; 2]; 2],
    /// `christoffel[γ][μ][ν] = Γ^γ_{μν}`.
    pub christoffel: [[[T; 2]; 2]; 2],
    /// `Γ_μ = Γ^ν_{μν}`.
    pub gamma_contracted: [T; 2],
    pub mean_curv: T,
    pub gauss_curv: T,
}

impl<T: Real> GeomFrame<T> {
    /// Builds the frame from a jet. `regularity` is the smallest admissible
    /// `|r_ξ × r_ζ|`.
    pub fn from_jet(jet: &Jet2<T>, regularity: T) -> Option<Self> {
        let r_cov = jet.d1;
        let cross = cross3(&r_cov[0], &r_cov[1]);
        let cross_norm = norm3(&cross);
        if !(cross_norm >= regularity) || !cross_norm.is_finite() {
            return None;
        }
        let normal = scale3(&cross, cross_norm.recip());

        let mut metric = [[T::zero(); 2]; 2];
        for mu in 0..2 {
            for nu in 0..2 {
                metric[mu][nu] = dot3(&r_cov[mu], &r_cov[nu]);
            }
        }
        let det_g = metric[0][0] * metric[1][1] - metric[0][1] * metric[1][0];
        let inv_det = det_g.recip();
        let metric_inv = [
            [metric[1][1] * inv_det, -metric[0][1] * inv_det],
            [-metric[1][0] * inv_det, metric[0][0] * inv_det],
        ];
        let mut r_contra = [[T::zero(); 3]; 2];
        for mu in 0..2 {
            for k in 0..3 {
                r_contra[mu][k] = metric_inv[mu][0] * r_cov[0][k] + metric_inv[mu][1] * r_cov[1][k];
            }
        }

        let mut second_form = [[T::zero(); 2]; 2];
        let mut christoffel = [[[T::zero(); 2]; 2]; 2];
        for mu in 0..2 {
            for nu in 0..2 {
                let r_mn = jet.d2(mu, nu);
                second_form[mu][nu] = dot3(&normal, &r_mn);
                for gamma in 0..2 {
                    christoffel[gamma][mu][nu] = dot3(&r_contra[gamma], &r_mn);
                }
            }
        }
        let gamma_contracted = [0, 1].map(|mu| christoffel[0][mu][0] + christoffel[1][mu][1]);
        let trace_b = (0..2)
            .flat_map(|mu| (0..2).map(move |nu| (mu, nu)))
            .map(|(mu, nu)| metric_inv[mu][nu] * second_form[mu][nu])
            .sum::<T>();
        let det_b = second_form[0][0] * second_form[1][1] - second_form[0][1] * second_form[1][0];

        Some(Self {
            position: jet.value,
            r_cov,
            r_contra,
            metric,
            metric_inv,
            det_g,
            sqrt_g: det_g.sqrt(),
            normal,
            second_form,
            christoffel,
            gamma_contracted,
            mean_curv: T::half() * trace_b,
            gauss_curv: det_b / det_g,
        })
    }

    /// `g^{μν} b_{μν}`.
    pub fn trace_second_form(&self) -> T {
        let mut t = T::zero();
        for mu in 0..2 {
            for nu in 0..2 {
                t += self.metric_inv[mu][nu] * self.second_form[mu][nu];
            }
        }
        t
    }

    /// `x_i^μ`: the Cartesian component `axis` of `r^μ`.
    #[inline]
    pub fn contra(&self, axis: usize, mu: usize) -> T {
        self.r_contra[mu][axis]
    }
}

/// Second-order jet of the embedding at a chart point: the chart's analytic
/// derivatives when it supplies them, forward AD otherwise.
pub fn jet_at<T: Real>(chart: &Surface<T>, point: (T, T)) -> Result<Jet2<T>> {
    let (xi, zeta) = point;
    if !chart.contains(xi, zeta) {
        return Err(Error::OutOfDomain {
            chart: chart.name().into(),
            xi: xi.as_f64(),
            zeta: zeta.as_f64(),
        });
    }
    Ok(chart
        .analytic_jet(xi, zeta)
        .unwrap_or_else(|| chart.jet_ad(xi, zeta)))
}

/// Geometric frame of `chart` at `point`.
pub fn frame_at<T: Real>(chart: &Surface<T>, point: (T, T)) -> Result<GeomFrame<T>> {
    let jet = jet_at(chart, point)?;
    GeomFrame::from_jet(&jet, chart.regularity_threshold()).ok_or_else(|| Error::DegenerateChart {
        chart: chart.name().into(),
        xi: point.0.as_f64(),
        zeta: point.1.as_f64(),
        cross_norm: norm3(&cross3(&jet.d1[0], &jet.d1[1])).as_f64(),
    })
}

/// The mean curvature vector `H n`.
pub fn mean_curvature_vector<T: Real>(frame: &GeomFrame<T>) -> Vec3<T> {
    scale3(&frame.normal, frame.mean_curv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surfaces::{make_surface, SurfaceKind, SurfaceParams};
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_6, PI};

    fn torus() -> Surface<f64> {
        Surface::torus(2.0, 1.0).unwrap()
    }

    #[test]
    fn torus_outer_equator() {
        for phi in [0.0, 0.4, 2.5] {
            let f = frame_at(&torus(), (FRAC_PI_2, phi)).unwrap();
            assert!((f.mean_curv + 2.0 / 3.0).abs() < 1e-14);
            let expect = [phi.cos(), phi.sin(), 0.0];
            for k in 0..3 {
                assert!((f.normal[k] - expect[k]).abs() < 1e-14);
            }
            let hn = mean_curvature_vector(&f);
            assert!((hn[0] + 2.0 / 3.0 * phi.cos()).abs() < 1e-14);
            assert!((hn[1] + 2.0 / 3.0 * phi.sin()).abs() < 1e-14);
            assert!(hn[2].abs() < 1e-14);
        }
    }

    #[test]
    fn torus_mean_curvature_from_principal_curvatures() {
        // κ₁ = sinθ/(a + b sinθ) around the axis, κ₂ = 1/b around the tube.
        for th in [0.1, FRAC_PI_6, 1.3, 2.9, 4.0, 5.5] {
            let f = frame_at(&torus(), (th, 0.3)).unwrap();
            let k1 = th.sin() / (2.0 + th.sin());
            let k2 = 1.0;
            assert!((f.mean_curv + 0.5 * (k1 + k2)).abs() < 1e-14);
            assert!((f.gauss_curv - k1 * k2).abs() < 1e-14);
        }
        let f = frame_at(&torus(), (FRAC_PI_6, 1.0)).unwrap();
        assert!((f.mean_curv + 0.6).abs() < 1e-14);
    }

    #[test]
    fn unit_sphere() {
        let s = Surface::<f64>::spheroid(1.0, 1.0).unwrap();
        for (th, ph) in [(0.3, 0.1), (FRAC_PI_2, 0.0), (2.5, 4.0)] {
            let f = frame_at(&s, (th, ph)).unwrap();
            assert!((f.mean_curv + 1.0).abs() < 1e-14);
            assert!((f.gauss_curv - f.mean_curv * f.mean_curv).abs() < 1e-14);
        }
        let f = frame_at(&s, (FRAC_PI_2, 0.0)).unwrap();
        let hn = mean_curvature_vector(&f);
        assert!((hn[0] + 1.0).abs() < 1e-15 && hn[1].abs() < 1e-15 && hn[2].abs() < 1e-15);
    }

    #[test]
    fn plane_is_flat() {
        let p = Surface::<f64>::plane();
        let f = frame_at(&p, (0.2, -0.7)).unwrap();
        assert_eq!(f.mean_curv, 0.0);
        assert_eq!(f.gauss_curv, 0.0);
        assert_eq!(f.metric, [[1.0, 0.0], [0.0, 1.0]]);
        assert_eq!(f.normal, [0.0, 0.0, 1.0]);
        assert_eq!(mean_curvature_vector(&f), [0.0, 0.0, 0.0]);
        let j = jet_at(&p, (0.2, -0.7)).unwrap();
        assert_eq!(j.d1, [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]);
        assert_eq!(j.d2, [[0.0; 3]; 3]);
    }

    #[test]
    fn torus_jet_at_origin() {
        let j = jet_at(&torus(), (0.0, 0.0)).unwrap();
        assert_eq!(j.value, [2.0, 0.0, 1.0]);
        assert_eq!(j.d1[0], [1.0, 0.0, 0.0]);
        assert_eq!(j.d1[1], [0.0, 2.0, 0.0]);
    }

    #[test]
    fn spheroid_jet_on_equator() {
        let s = Surface::<f64>::spheroid(1.5, 0.7).unwrap();
        let j = jet_at(&s, (FRAC_PI_2, 0.0)).unwrap();
        assert!(
            (j.value[0] - 1.5).abs() < 1e-15
                && j.value[1].abs() < 1e-15
                && j.value[2].abs() < 1e-15
        );
        assert!(j.d1[1][0].abs() < 1e-15 && (j.d1[1][1] - 1.5).abs() < 1e-15 && j.d1[1][2] == 0.0);
    }

    #[test]
    fn analytic_jets_match_automatic_differentiation() {
        for chart in [
            torus(),
            Surface::spheroid(1.0, 2.0).unwrap(),
            Surface::plane(),
        ] {
            for (u, v) in [(0.3, 0.2), (1.1, 5.0), (0.7, -0.4)] {
                let exact = chart.analytic_jet(u, v).unwrap();
                let ad = chart.jet_ad(u, v);
                for k in 0..3 {
                    assert!((exact.value[k] - ad.value[k]).abs() < 1e-14);
                    for mu in 0..2 {
                        assert!((exact.d1[mu][k] - ad.d1[mu][k]).abs() < 1e-14);
                    }
                    for m in 0..3 {
                        assert!((exact.d2[m][k] - ad.d2[m][k]).abs() < 1e-14);
                    }
                }
            }
        }
    }

    #[test]
    fn spheroid_pole_is_degenerate() {
        let s = Surface::<f64>::spheroid(1.0, 2.0).unwrap();
        assert!(matches!(
            frame_at(&s, (0.0, 0.3)),
            Err(Error::DegenerateChart { .. })
        ));
        assert!(matches!(
            frame_at(&s, (PI, 0.3)),
            Err(Error::DegenerateChart { .. })
        ));
        assert!(matches!(
            frame_at(&s, (3.5, 0.3)),
            Err(Error::OutOfDomain { .. })
        ));
    }

    #[test]
    fn duality_and_normal_on_every_chart() {
        for kind in SurfaceKind::ALL {
            let chart = make_surface::<f64>(kind.name(), &SurfaceParams::new()).unwrap();
            let [[u0, u1], [v0, v1]] = chart.domain();
            for i in 1..8 {
                for j in 0..8 {
                    let u = u0 + (u1 - u0) * i as f64 / 8.0;
                    let v = v0 + (v1 - v0) * j as f64 / 8.0;
                    let f = frame_at(&chart, (u, v)).unwrap();
                    for mu in 0..2 {
                        for nu in 0..2 {
                            let d = dot3(&f.r_contra[mu], &f.r_cov[nu]);
                            let delta = if mu == nu { 1.0 } else { 0.0 };
                            assert!((d - delta).abs() < 1e-12, "{kind}");
                        }
                        assert!(dot3(&f.normal, &f.r_cov[mu]).abs() < 1e-12);
                        let hn = mean_curvature_vector(&f);
                        assert!(dot3(&hn, &f.r_contra[mu]).abs() < 1e-12);
                    }
                    assert!((norm3(&f.normal) - 1.0).abs() < 1e-12);
                    assert!((f.trace_second_form() - 2.0 * f.mean_curv).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn catenoid_is_minimal_with_negative_curvature() {
        let c = Surface::<f64>::catenoid(1.0, 1.0).unwrap();
        for t in [-0.9, -0.3, 0.0, 0.5, 1.0] {
            let f = frame_at(&c, (t, 0.8)).unwrap();
            assert!(f.mean_curv.abs() < 1e-12);
            assert!(f.gauss_curv < 0.0);
        }
    }

    #[test]
    fn single_precision_torus() {
        let t = Surface::<f32>::torus(2.0, 1.0).unwrap();
        let f = frame_at(&t, (0.5_f32, 0.1)).unwrap();
        let h = -(2.0 + 2.0 * 0.5_f32.sin()) / (2.0 * (2.0 + 0.5_f32.sin()));
        assert!((f.mean_curv - h).abs() < 1e-5);
    }
}
