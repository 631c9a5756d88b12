//! Built-in surface charts and their closed-form reference quantities.
//!
//! Every chart maps `(ξ, ζ)` to a point of R³. Parameter order is fixed so
//! that `r_ξ × r_ζ` points away from the enclosed region (or the z axis for
//! surfaces of revolution); with that orientation the mean curvature of a
//! sphere of radius `a` is `-1/a`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::Grid;
use crate::geometry::Jet2;
use crate::jet::{Smooth, Taylor2};
use crate::report::{Check, Report};
use crate::scalar::{norm3, sub3, Real, Vec3};

/// Named real parameters of a chart (`a`, `b`).
pub type SurfaceParams<T> = BTreeMap<String, T>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SurfaceKind {
    Plane,
    MongeBump,
    MongeSine,
    Sphere,
    Spheroid,
    Torus,
    Cylinder,
    Catenoid,
}

impl SurfaceKind {
    pub const ALL: [SurfaceKind; 8] = [
        SurfaceKind::Plane,
        SurfaceKind::MongeBump,
        SurfaceKind::MongeSine,
        SurfaceKind::Sphere,
        SurfaceKind::Spheroid,
        SurfaceKind::Torus,
        SurfaceKind::Cylinder,
        SurfaceKind::Catenoid,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SurfaceKind::Plane => "plane",
            SurfaceKind::MongeBump => "monge",
            SurfaceKind::MongeSine => "monge-sine",
            SurfaceKind::Sphere => "sphere",
            SurfaceKind::Spheroid => "spheroid",
            SurfaceKind::Torus => "torus",
            SurfaceKind::Cylinder => "cylinder",
            SurfaceKind::Catenoid => "catenoid",
        }
    }

    /// Default `(a, b)`.
    fn defaults(self) -> (f64, f64) {
        match self {
            SurfaceKind::Plane => (1.0, 1.0),
            SurfaceKind::MongeBump => (0.6, 0.3),
            SurfaceKind::MongeSine => (0.2, 2.0),
            SurfaceKind::Sphere => (1.0, 1.0),
            SurfaceKind::Spheroid => (1.0, 2.0),
            SurfaceKind::Torus => (2.0, 1.0),
            SurfaceKind::Cylinder => (1.0, 1.0),
            SurfaceKind::Catenoid => (1.0, 1.0),
        }
    }

    fn accepts(self, key: &str) -> bool {
        match self {
            SurfaceKind::Plane | SurfaceKind::Sphere => key == "a",
            _ => key == "a" || key == "b",
        }
    }
}

impl fmt::Display for SurfaceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SurfaceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "plane" => SurfaceKind::Plane,
            "monge" | "monge-bump" => SurfaceKind::MongeBump,
            "monge-sine" => SurfaceKind::MongeSine,
            "sphere" => SurfaceKind::Sphere,
            "spheroid" => SurfaceKind::Spheroid,
            "torus" => SurfaceKind::Torus,
            "cylinder" => SurfaceKind::Cylinder,
            "catenoid" => SurfaceKind::Catenoid,
            other => return Err(Error::UnknownSurface(other.to_string())),
        })
    }
}

/// A parametrized surface `(ξ, ζ) ↦ r ∈ R³`.
///
/// Plane `(ξ, ζ, 0)` on `[-a, a]²`. Monge patches `z = (aξ² + bζ²)/2` and
/// `z = a sin(bξ) sin(bζ)` on `[-1, 1]²`. Spheroid
/// `(a sinθ cosφ, a sinθ sinφ, b cosθ)`, `θ ∈ (0, π)`. Torus
/// `((a + b sinθ) cosφ, (a + b sinθ) sinφ, b cosθ)`, both angles periodic.
/// Cylinder `(a cosφ, a sinφ, -t)` and catenoid
/// `(a cosh(t/a) cosφ, a cosh(t/a) sinφ, -t)` with `t ∈ [-b, b]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Surface<T> {
    kind: SurfaceKind,
    a: T,
    b: T,
    domain: [[T; 2]; 2],
    periodic: [bool; 2],
    /// Coordinate values where the chart degenerates, as `(coord, value)`.
    singular: Vec<(usize, T)>,
    default_margin: T,
}

/// Builds a built-in chart from its name and parameter map.
///
/// Missing parameters take the chart's defaults; unknown keys are rejected.
pub fn make_surface<T: Real>(name: &str, params: &SurfaceParams<T>) -> Result<Surface<T>> {
    let kind: SurfaceKind = name.parse()?;
    for key in params.keys() {
        if !kind.accepts(key) {
            return Err(Error::InvalidParams {
                surface: kind.name().into(),
                constraint: format!("unknown parameter `{key}`"),
            });
        }
    }
    let (da, db) = kind.defaults();
    let a = params.get("a").copied().unwrap_or_else(|| T::lit(da));
    let b = params.get("b").copied().unwrap_or_else(|| T::lit(db));
    Surface::new(kind, a, b)
}

impl<T: Real> Surface<T> {
    pub fn new(kind: SurfaceKind, a: T, b: T) -> Result<Self> {
        let invalid = |constraint: &str| Error::InvalidParams {
            surface: kind.name().into(),
            constraint: constraint.into(),
        };
        if !a.is_finite() || !b.is_finite() {
            return Err(invalid("parameters must be finite"));
        }
        match kind {
            SurfaceKind::Torus => {
                if !(b > T::zero()) {
                    return Err(invalid("b > 0"));
                }
                if !(a > b) {
                    return Err(invalid("a > b"));
                }
            }
            SurfaceKind::MongeBump => {}
            SurfaceKind::MongeSine => {
                if !(b > T::zero()) {
                    return Err(invalid("b > 0"));
                }
            }
            SurfaceKind::Sphere | SurfaceKind::Plane => {
                if !(a > T::zero()) {
                    return Err(invalid("a > 0"));
                }
            }
            _ => {
                if !(a > T::zero()) {
                    return Err(invalid("a > 0"));
                }
                if !(b > T::zero()) {
                    return Err(invalid("b > 0"));
                }
            }
        }
        let b = if kind == SurfaceKind::Sphere { a } else { b };
        Ok(Self::build(kind, a, b))
    }

    fn build(kind: SurfaceKind, a: T, b: T) -> Self {
        let zero = T::zero();
        let pi = T::PI();
        let two_pi = T::TAU();
        let (domain, periodic, singular, default_margin) = match kind {
            SurfaceKind::Plane => ([[-a, a], [-a, a]], [false, false], vec![], zero),
            SurfaceKind::MongeBump | SurfaceKind::MongeSine => (
                [[-T::one(), T::one()], [-T::one(), T::one()]],
                [false, false],
                vec![],
                zero,
            ),
            SurfaceKind::Sphere | SurfaceKind::Spheroid => (
                [[zero, pi], [zero, two_pi]],
                [false, true],
                vec![(0, zero), (0, pi)],
                T::lit(0.05),
            ),
            SurfaceKind::Torus => ([[zero, two_pi], [zero, two_pi]], [true, true], vec![], zero),
            SurfaceKind::Cylinder | SurfaceKind::Catenoid => {
                ([[-b, b], [zero, two_pi]], [false, true], vec![], zero)
            }
        };
        Self {
            kind,
            a,
            b,
            domain,
            periodic,
            singular,
            default_margin,
        }
    }

    pub fn torus(a: T, b: T) -> Result<Self> {
        Self::new(SurfaceKind::Torus, a, b)
    }

    pub fn spheroid(a: T, b: T) -> Result<Self> {
        Self::new(SurfaceKind::Spheroid, a, b)
    }

    pub fn sphere(radius: T) -> Result<Self> {
        Self::new(SurfaceKind::Sphere, radius, radius)
    }

    pub fn plane() -> Self {
        Self::build(SurfaceKind::Plane, T::one(), T::one())
    }

    pub fn cylinder(radius: T, half_height: T) -> Result<Self> {
        Self::new(SurfaceKind::Cylinder, radius, half_height)
    }

    pub fn catenoid(waist: T, half_height: T) -> Result<Self> {
        Self::new(SurfaceKind::Catenoid, waist, half_height)
    }

    /// Torus chart without the `a > b` ring condition, for studying the
    /// `a → 0` limit. Only `a > 0, b > 0` is required; the chart degenerates
    /// where `a + b sinθ = 0`.
    pub fn spindle_torus(a: T, b: T) -> Result<Self> {
        if !(a > T::zero() && b > T::zero()) {
            return Err(Error::InvalidParams {
                surface: "torus".into(),
                constraint: "a > 0 and b > 0".into(),
            });
        }
        Ok(Self::build(SurfaceKind::Torus, a, b))
    }

    pub fn kind(&self) -> SurfaceKind {
        self.kind
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    pub fn a(&self) -> T {
        self.a
    }

    pub fn b(&self) -> T {
        self.b
    }

    pub fn params(&self) -> SurfaceParams<T> {
        let mut p = BTreeMap::new();
        p.insert("a".to_string(), self.a);
        if self.kind.accepts("b") {
            p.insert("b".to_string(), self.b);
        }
        p
    }

    /// Closed coordinate interval for each chart coordinate.
    pub fn domain(&self) -> [[T; 2]; 2] {
        self.domain
    }

    pub fn periodic(&self) -> [bool; 2] {
        self.periodic
    }

    pub fn period(&self, coord: usize) -> T {
        self.domain[coord][1] - self.domain[coord][0]
    }

    pub fn singular_values(&self) -> &[(usize, T)] {
        &self.singular
    }

    /// Margin kept from the boundary of non-periodic coordinates by default.
    pub fn default_margin(&self) -> T {
        self.default_margin
    }

    pub fn coord_names(&self) -> [&'static str; 2] {
        match self.kind {
            SurfaceKind::Plane | SurfaceKind::MongeBump | SurfaceKind::MongeSine => ["xi", "zeta"],
            SurfaceKind::Cylinder | SurfaceKind::Catenoid => ["t", "phi"],
            _ => ["theta", "phi"],
        }
    }

    /// max(|a|, |b|, 1).
    pub fn length_scale(&self) -> T {
        self.a.abs().max(self.b.abs()).max(T::one())
    }

    /// Regularity threshold on `|r_ξ × r_ζ|`.
    pub fn regularity_threshold(&self) -> T {
        let s = self.length_scale();
        T::lit(1e-12) * s * s
    }

    /// Surfaces of revolution about z, with coordinate 0 the meridian and
    /// coordinate 1 the azimuth.
    pub fn is_revolution(&self) -> bool {
        matches!(
            self.kind,
            SurfaceKind::Sphere
                | SurfaceKind::Spheroid
                | SurfaceKind::Torus
                | SurfaceKind::Cylinder
                | SurfaceKind::Catenoid
        )
    }

    pub fn contains(&self, xi: T, zeta: T) -> bool {
        [xi, zeta].iter().enumerate().all(|(c, &u)| {
            if self.periodic[c] {
                u.is_finite()
            } else {
                let [lo, hi] = self.domain[c];
                let slack = T::lit(1e-12) * (hi - lo);
                u >= lo - slack && u <= hi + slack
            }
        })
    }

    /// The embedding, evaluable in plain or jet arithmetic.
    pub fn embed<S: Smooth<T>>(&self, u: S, v: S) -> [S; 3] {
        let (a, b) = (self.a, self.b);
        let half = T::half();
        match self.kind {
            SurfaceKind::Plane => [u, v, S::constant(T::zero())],
            SurfaceKind::MongeBump => [u, v, (u * u * a + v * v * b) * half],
            SurfaceKind::MongeSine => [u, v, (u * b).sin() * (v * b).sin() * a],
            SurfaceKind::Sphere | SurfaceKind::Spheroid => {
                let s = u.sin();
                [s * v.cos() * a, s * v.sin() * a, u.cos() * b]
            }
            SurfaceKind::Torus => {
                let rho = u.sin() * b + a;
                [rho * v.cos(), rho * v.sin(), u.cos() * b]
            }
            SurfaceKind::Cylinder => [v.cos() * a, v.sin() * a, -u],
            SurfaceKind::Catenoid => {
                let rho = (u * a.recip()).cosh() * a;
                [rho * v.cos(), rho * v.sin(), -u]
            }
        }
    }

    pub fn point(&self, xi: T, zeta: T) -> Vec3<T> {
        self.embed(xi, zeta)
    }

    /// Second-order jet by forward automatic differentiation.
    pub fn jet_ad(&self, xi: T, zeta: T) -> Jet2<T> {
        let r = self.embed(Taylor2::variable(xi, 0), Taylor2::variable(zeta, 1));
        Jet2::from_components(r)
    }

    /// Hand-differentiated jets, where the chart provides them.
    pub fn analytic_jet(&self, xi: T, zeta: T) -> Option<Jet2<T>> {
        let (a, b) = (self.a, self.b);
        let zero = T::zero();
        match self.kind {
            SurfaceKind::Plane => Some(Jet2 {
                value: [xi, zeta, zero],
                d1: [[T::one(), zero, zero], [zero, T::one(), zero]],
                d2: [[zero; 3]; 3],
            }),
            SurfaceKind::Torus => {
                let (st, ct) = xi.sin_cos();
                let (sp, cp) = zeta.sin_cos();
                let rho = a + b * st;
                Some(Jet2 {
                    value: [rho * cp, rho * sp, b * ct],
                    d1: [
                        [b * ct * cp, b * ct * sp, -b * st],
                        [-rho * sp, rho * cp, zero],
                    ],
                    d2: [
                        [-b * st * cp, -b * st * sp, -b * ct],
                        [-b * ct * sp, b * ct * cp, zero],
                        [-rho * cp, -rho * sp, zero],
                    ],
                })
            }
            SurfaceKind::Sphere | SurfaceKind::Spheroid => {
                let (st, ct) = xi.sin_cos();
                let (sp, cp) = zeta.sin_cos();
                Some(Jet2 {
                    value: [a * st * cp, a * st * sp, b * ct],
                    d1: [
                        [a * ct * cp, a * ct * sp, -b * st],
                        [-a * st * sp, a * st * cp, zero],
                    ],
                    d2: [
                        [-a * st * cp, -a * st * sp, -b * ct],
                        [-a * ct * sp, a * ct * cp, zero],
                        [-a * st * cp, -a * st * sp, zero],
                    ],
                })
            }
            _ => None,
        }
    }

    /// Closed-form reference data, where known.
    pub fn reference(&self) -> Option<Reference<T>> {
        let (a, b) = (self.a, self.b);
        match self.kind {
            SurfaceKind::Plane => Some(Reference::Flat),
            SurfaceKind::Sphere | SurfaceKind::Spheroid => {
                Some(Reference::Spheroid(SpheroidReference { a, b }))
            }
            SurfaceKind::Torus => Some(Reference::Torus(TorusReference { a, b })),
            SurfaceKind::Cylinder => Some(Reference::Cylinder { radius: a }),
            SurfaceKind::Catenoid => Some(Reference::Catenoid { waist: a }),
            SurfaceKind::MongeBump | SurfaceKind::MongeSine => None,
        }
    }
}

/// Spheroid closed forms; `ε = b/a`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpheroidReference<T> {
    pub a: T,
    pub b: T,
}

impl<T: Real> SpheroidReference<T> {
    pub fn epsilon(&self) -> T {
        self.b / self.a
    }

    fn e2(&self) -> T {
        self.epsilon() * self.epsilon()
    }

    /// `G = 2 / (1 + ε² + (1 - ε²) cos 2θ)`.
    pub fn g<S: Smooth<T>>(&self, theta: S) -> S {
        let e2 = self.e2();
        let denom = (theta * T::two()).cos() * (T::one() - e2) + (T::one() + e2);
        S::constant(T::two()) / denom
    }

    /// `F = ε² (3 + ε² + (1 - ε²) cos 2θ) G² / 4`.
    pub fn f(&self, theta: T) -> T {
        let e2 = self.e2();
        let g = self.g(theta);
        e2 * (T::lit(3.0) + e2 + (T::one() - e2) * (T::two() * theta).cos()) * g * g / T::lit(4.0)
    }

    pub fn mean_curvature(&self, theta: T) -> T {
        let e2 = self.e2();
        let g = self.g(theta);
        -self.b / (T::lit(4.0) * self.a * self.a)
            * (T::lit(3.0) + e2 + (T::one() - e2) * (T::two() * theta).cos())
            * g.powf(T::lit(1.5))
    }

    pub fn normal(&self, theta: T, phi: T) -> Vec3<T> {
        let sg = self.g(theta).sqrt();
        let eps = self.epsilon();
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        [sg * eps * st * cp, sg * eps * st * sp, sg * ct]
    }

    /// `f_x = f_y = G^{1/4} |cos θ|^{(a² + b²)/(2a²)}`, `f_z = G^{1/4} sin θ`.
    pub fn factor<S: Smooth<T>>(&self, axis: usize, theta: S) -> S {
        let g4 = self.g(theta).powf(T::lit(0.25));
        if axis == 2 {
            g4 * theta.sin()
        } else {
            let p = (self.a * self.a + self.b * self.b) / (T::two() * self.a * self.a);
            g4 * theta.cos().abs().powf(p)
        }
    }
}

/// Ring-torus closed forms (`a > b`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TorusReference<T> {
    pub a: T,
    pub b: T,
}

impl<T: Real> TorusReference<T> {
    /// `H = -(a + 2b sinθ) / (2b (a + b sinθ))`.
    pub fn mean_curvature(&self, theta: T) -> T {
        let (a, b) = (self.a, self.b);
        let s = theta.sin();
        -(a + T::two() * b * s) / (T::two() * b * (a + b * s))
    }

    pub fn normal(&self, theta: T, phi: T) -> Vec3<T> {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        [st * cp, st * sp, ct]
    }

    /// `f_x = f_y = (a + b s)^{a²/(2(a²-b²))} (1 + s)^{(a-2b)/(4(a-b))} |s - 1|^{(a+2b)/(4(a+b))}`
    /// and `f_z = √((a + b s)|s|)` with `s = sin θ`.
    pub fn factor<S: Smooth<T>>(&self, axis: usize, theta: S) -> S {
        let (a, b) = (self.a, self.b);
        let s = theta.sin();
        let rho = s * b + a;
        if axis == 2 {
            return (rho * s.abs()).sqrt();
        }
        let p_rho = a * a / (T::two() * (a * a - b * b));
        let p_plus = (a - T::two() * b) / (T::lit(4.0) * (a - b));
        let p_minus = (a + T::two() * b) / (T::lit(4.0) * (a + b));
        let mut f = rho.powf(p_rho) * (-s + T::one()).powf(p_minus);
        // a = 2b drops the (1 + s) factor; skipping it keeps θ = 3π/2 finite.
        if p_plus != T::zero() {
            f = f * (s + T::one()).powf(p_plus);
        }
        f
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Reference<T> {
    Flat,
    Spheroid(SpheroidReference<T>),
    Torus(TorusReference<T>),
    Cylinder { radius: T },
    Catenoid { waist: T },
}

impl<T: Real> Reference<T> {
    pub fn mean_curvature(&self, xi: T, _zeta: T) -> T {
        match self {
            Reference::Flat | Reference::Catenoid { .. } => T::zero(),
            Reference::Spheroid(s) => s.mean_curvature(xi),
            Reference::Torus(t) => t.mean_curvature(xi),
            Reference::Cylinder { radius } => -T::one() / (T::two() * *radius),
        }
    }

    pub fn normal(&self, xi: T, zeta: T) -> Vec3<T> {
        match self {
            Reference::Flat => [T::zero(), T::zero(), T::one()],
            Reference::Spheroid(s) => s.normal(xi, zeta),
            Reference::Torus(t) => t.normal(xi, zeta),
            Reference::Cylinder { .. } => {
                let (sp, cp) = zeta.sin_cos();
                [cp, sp, T::zero()]
            }
            Reference::Catenoid { waist } => {
                let c = (xi / *waist).cosh();
                let (sp, cp) = zeta.sin_cos();
                [cp / c, sp / c, (xi / *waist).tanh()]
            }
        }
    }

    /// Closed-form ordering factor for `axis` (0, 1, 2 = x, y, z), where one
    /// is known. Torus and spheroid factors depend on θ only; cylinder
    /// factors on φ only.
    pub fn factor<S: Smooth<T>>(&self, axis: usize, xi: S, zeta: S) -> S {
        match self {
            Reference::Flat | Reference::Catenoid { .. } => S::constant(T::one()),
            Reference::Spheroid(s) => s.factor(axis, xi),
            Reference::Torus(t) => t.factor(axis, xi),
            Reference::Cylinder { .. } => match axis {
                0 => zeta.sin().abs().sqrt(),
                1 => zeta.cos().abs().sqrt(),
                _ => S::constant(T::one()),
            },
        }
    }

    /// Whether the factors come from the literature rather than a derivation
    /// done here.
    pub fn factors_are_published(&self) -> bool {
        matches!(self, Reference::Spheroid(_) | Reference::Torus(_))
    }
}

/// Compares frame-derived `H`, `n` (and, for spheroids, `G` and `F`) against
/// the chart's closed forms at every grid node.
pub fn reference_check<T: Real>(
    chart: &Surface<T>,
    grid: &Grid<T>,
    tolerance: f64,
) -> Result<Report> {
    let reference = chart
        .reference()
        .ok_or_else(|| Error::MissingReference(chart.name().into()))?;
    let mut dh = Check::below("reference.mean_curvature", tolerance);
    let mut dn = Check::below("reference.normal", tolerance);
    let mut dg = Check::below("reference.spheroid_G", tolerance);
    let mut df = Check::below("reference.spheroid_F", tolerance);
    for (i, j) in grid.nodes() {
        let (u, v) = grid.coords(i, j);
        let frame = grid.frame(i, j);
        let loc = Some([u.as_f64(), v.as_f64()]);
        let h_ref = reference.mean_curvature(u, v);
        dh.observe((frame.mean_curv - h_ref).abs().as_f64(), loc);
        let n_ref = reference.normal(u, v);
        dn.observe(norm3(&sub3(&frame.normal, &n_ref)).as_f64(), loc);
        if let Reference::Spheroid(s) = reference {
            // g^{θθ} = G/a² and H n_z = -F cos θ / b
            let g_frame = s.a * s.a * frame.metric_inv[0][0];
            dg.observe((g_frame - s.g(u)).abs().as_f64(), loc);
            let f_frame = -s.b * frame.mean_curv * g_frame.sqrt();
            df.observe((f_frame - s.f(u)).abs().as_f64(), loc);
        }
    }
    let mut report = Report::new("reference");
    report.push(dh);
    report.push(dn);
    if matches!(reference, Reference::Spheroid(_)) {
        report.push(dg);
        report.push(df);
    }
    Ok(report)
}
