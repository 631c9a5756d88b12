use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;

use super::*;
use crate::fields::{partial, random_test_field, FdOrder, Grid, PhysicalParams, ScalarField};
use crate::surfaces::Surface;

fn torus_grid(n: usize) -> Arc<Grid<f64>> {
    Grid::new(&Surface::torus(2.0, 1.0).unwrap(), n, n).unwrap()
}

fn max_diff(a: &ScalarField<f64>, b: &ScalarField<f64>, mask: Option<&Array2<bool>>) -> f64 {
    crate::fields::max_abs_masked(&(a - b).into_values(), mask).0
}

#[test]
fn laplacian_of_azimuthal_mode_on_torus() {
    let grid = torus_grid(128);
    let psi = ScalarField::from_fn(&grid, |_, phi| Complex64::from_polar(1.0, 2.0 * phi));
    let expected = ScalarField::from_fn(&grid, |th, phi| {
        Complex64::from_polar(1.0, 2.0 * phi) * (-4.0 / (2.0 + th.sin()).powi(2))
    });
    // the 4th-order stencil maps e^{2iφ} to iσ e^{2iφ}; worst error where a + b sinθ = 1
    let h = 2.0 * PI / 128.0;
    let sigma = (8.0 * (2.0 * h).sin() - (4.0 * h).sin()) / (6.0 * h);
    let q = Quantizer::with_defaults(&grid).unwrap();
    let err = max_diff(&q.laplace_beltrami(&psi).unwrap(), &expected, None);
    assert!((err - (4.0 - sigma * sigma)).abs() < 1e-12, "{err}");
    let q6 = Quantizer::new(&grid, FdOrder::Sixth, PhysicalParams::default()).unwrap();
    let err = max_diff(&q6.laplace_beltrami(&psi).unwrap(), &expected, None);
    assert!(err < 1e-5, "{err}");
}

#[test]
fn zonal_harmonic_is_eigenfunction_on_sphere() {
    let grid = Grid::new(&Surface::sphere(1.0).unwrap(), 128, 64).unwrap();
    let q = Quantizer::with_defaults(&grid).unwrap();
    let psi = ScalarField::from_fn(&grid, |th: f64, _| Complex64::new(th.cos(), 0.0));
    let lap = q.laplace_beltrami(&psi).unwrap();
    let err = max_diff(
        &lap,
        &psi.scale(Complex64::new(-2.0, 0.0)),
        Some(&q.interior()),
    );
    assert!(err < 1e-5, "{err}");
}

#[test]
fn constraint_term_on_constant_field() {
    let grid = torus_grid(64);
    let q = Quantizer::with_defaults(&grid).unwrap();
    let one = ScalarField::constant(&grid, Complex64::new(1.0, 0.0));
    let pz = q.cartesian_momentum(&one, 2).unwrap();
    // θ = 0 is the top circle: H = -1/2, n = e_z
    for j in 0..64 {
        let z = pz.values()[[0, j]];
        assert!((z - Complex64::new(0.0, 0.5)).norm() < 1e-12, "{z}");
    }
}

#[test]
fn torus_p_x_matches_explicit_form() {
    let (a, b) = (2.0, 1.0);
    let grid = torus_grid(64);
    let q = Quantizer::with_defaults(&grid).unwrap();
    let psi = random_test_field(&grid, 7, 3).unwrap();
    let d_th = partial(&psi, 0, FdOrder::Fourth).unwrap();
    let d_ph = partial(&psi, 1, FdOrder::Fourth).unwrap();
    let minus_i = Complex64::new(0.0, -1.0);
    let explicit = Array2::from_shape_fn((64, 64), |(i, j)| {
        let (th, ph) = grid.coords(i, j);
        let h = -(a + 2.0 * b * th.sin()) / (2.0 * b * (a + b * th.sin()));
        minus_i
            * (d_th.values()[[i, j]] * (th.cos() * ph.cos() / b)
                - d_ph.values()[[i, j]] * (ph.sin() / (a + b * th.sin()))
                + psi.values()[[i, j]] * (h * th.sin() * ph.cos()))
    });
    let err = max_diff(
        &q.cartesian_momentum(&psi, 0).unwrap(),
        &psi.with_values(explicit),
        None,
    );
    assert!(err < 1e-12, "{err}");
}

#[test]
fn generalized_momenta_on_torus() {
    let grid = torus_grid(64);
    let q = Quantizer::with_defaults(&grid).unwrap();
    let psi = random_test_field(&grid, 3, 4).unwrap();
    let d_ph = partial(&psi, 1, FdOrder::Fourth).unwrap();
    let expected = d_ph.scale(Complex64::new(0.0, -1.0));
    assert!(max_diff(&q.generalized_momentum(&psi, 1).unwrap(), &expected, None) < 1e-14);

    let one = ScalarField::constant(&grid, Complex64::new(1.0, 0.0));
    let p_th = q.generalized_momentum(&one, 0).unwrap();
    let expected = ScalarField::from_fn(&grid, |th, _| {
        Complex64::new(0.0, -0.5 * th.cos() / (2.0 + th.sin()))
    });
    assert!(max_diff(&p_th, &expected, None) < 1e-14);
}

#[test]
fn unit_factors_reduce_every_ordering_to_naive() {
    let grid = torus_grid(32);
    let q = Quantizer::with_defaults(&grid).unwrap();
    let psi = random_test_field(&grid, 11, 4).unwrap();
    let f = OrderingFactors::constant(&grid);
    let naive = q.naive_p_squared(&psi).unwrap();
    for o in Ordering::ALL {
        let t = q.kinetic(&psi, o, &f).unwrap();
        assert_eq!(t.values(), naive.values(), "{}", o.name());
    }
}

#[test]
fn hbar_scaling_is_exact() {
    let grid = torus_grid(32);
    let q1 = Quantizer::new(
        &grid,
        FdOrder::Fourth,
        PhysicalParams::new(1.0, 1.0).unwrap(),
    )
    .unwrap();
    let q2 = Quantizer::new(
        &grid,
        FdOrder::Fourth,
        PhysicalParams::new(2.0, 1.0).unwrap(),
    )
    .unwrap();
    let psi = random_test_field(&grid, 5, 3).unwrap();
    let two = Complex64::new(2.0, 0.0);
    let four = Complex64::new(4.0, 0.0);
    for axis in 0..3 {
        let p1 = q1.cartesian_momentum(&psi, axis).unwrap();
        assert_eq!(
            q2.cartesian_momentum(&psi, axis).unwrap().values(),
            p1.scale(two).values()
        );
    }
    for mu in 0..2 {
        let p1 = q1.generalized_momentum(&psi, mu).unwrap();
        assert_eq!(
            q2.generalized_momentum(&psi, mu).unwrap().values(),
            p1.scale(two).values()
        );
    }
    let n1 = q1.naive_p_squared(&psi).unwrap();
    assert_eq!(
        q2.naive_p_squared(&psi).unwrap().values(),
        n1.scale(four).values()
    );
    let k1 = q1.kinetic_reference(&psi).unwrap();
    assert_eq!(
        q2.kinetic_reference(&psi).unwrap().values(),
        k1.scale(four).values()
    );
    let c1 = q1.kinetic_curved(&psi).unwrap();
    assert_eq!(
        q2.kinetic_curved(&psi).unwrap().values(),
        c1.scale(four).values()
    );
}

#[test]
fn mass_divides_kinetic_terms() {
    let grid = torus_grid(32);
    let q1 = Quantizer::with_defaults(&grid).unwrap();
    let q2 = Quantizer::new(
        &grid,
        FdOrder::Fourth,
        PhysicalParams::new(1.0, 2.0).unwrap(),
    )
    .unwrap();
    let psi = random_test_field(&grid, 5, 3).unwrap();
    let half = Complex64::new(0.5, 0.0);
    let n1 = q1.naive_p_squared(&psi).unwrap();
    assert_eq!(
        q2.naive_p_squared(&psi).unwrap().values(),
        n1.scale(half).values()
    );
}

#[test]
fn dense_matrix_reproduces_matrix_free_application() {
    let grid = torus_grid(24);
    let q = Quantizer::with_defaults(&grid).unwrap();
    let psi = random_test_field(&grid, 9, 3).unwrap();
    for op in [
        OperatorKind::LaplaceBeltrami,
        OperatorKind::CartesianMomentum(0),
    ] {
        let m = assemble_dense(&q, op).unwrap();
        let flat: Vec<Complex64> = psi.values().iter().copied().collect();
        let applied = op.apply(&q, &psi).unwrap();
        for (r, want) in applied.values().iter().enumerate() {
            let got: Complex64 = (0..flat.len()).map(|c| m[[r, c]] * flat[c]).sum();
            assert!((got - want).norm() < 1e-12);
        }
    }
}

#[test]
fn dense_laplacian_is_symmetric_and_bare_derivative_is_not() {
    let grid = torus_grid(24);
    let q = Quantizer::with_defaults(&grid).unwrap();
    let lb = assemble_dense(&q, OperatorKind::LaplaceBeltrami).unwrap();
    assert!(dense_symmetry_defect(&q, &lb) < 1e-12);
    let bare = assemble_dense(&q, OperatorKind::BareMomentum(0)).unwrap();
    assert!(dense_symmetry_defect(&q, &bare) > 1e-2);
}

#[test]
fn dense_assembly_refuses_large_grids() {
    let grid = Grid::new(&Surface::torus(2.0, 1.0).unwrap(), 49, 48).unwrap();
    let q = Quantizer::with_defaults(&grid).unwrap();
    assert!(matches!(
        assemble_dense(&q, OperatorKind::LaplaceBeltrami),
        Err(crate::Error::DenseTooLarge { nodes: 2352, .. })
    ));
}

#[test]
fn nonpositive_factor_is_rejected() {
    let grid = torus_grid(16);
    let q = Quantizer::with_defaults(&grid).unwrap();
    let mut f = [
        Array2::ones((16, 16)),
        Array2::ones((16, 16)),
        Array2::ones((16, 16)),
    ];
    f[1][[3, 4]] = -0.5;
    let factors = OrderingFactors::from_values(&grid, f, FactorOrigin::OdeSolved, vec![]).unwrap();
    let psi = ScalarField::constant(&grid, Complex64::new(1.0, 0.0));
    match q.kinetic(&psi, Ordering::Symmetric, &factors) {
        Err(crate::Error::FactorNonpositive { axis, i, j, .. }) => {
            assert_eq!((axis, i, j), ('y', 3, 4))
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn catenoid_factors_are_constant() {
    let chart = Surface::<f64>::catenoid(1.0, 1.0).unwrap();
    let grid = Grid::new(&chart, 64, 64).unwrap();
    let f = solve_factors_revolution(&chart, &grid).unwrap();
    assert!(f.singular_lines().is_empty());
    for k in 0..3 {
        assert!(f.factor(k).iter().all(|&x| (x - 1.0).abs() < 1e-12));
    }
}

#[test]
fn solver_rejects_charts_without_rotational_symmetry() {
    let chart = Surface::<f64>::plane();
    let grid = Grid::new(&chart, 16, 16).unwrap();
    assert!(matches!(
        solve_factors_revolution(&chart, &grid),
        Err(crate::Error::NotRevolution(_))
    ));
}

#[test]
fn solver_rejects_a_grid_of_another_chart() {
    let grid = torus_grid(32);
    let other = Surface::torus(3.0, 1.0).unwrap();
    assert!(matches!(
        solve_factors_revolution(&other, &grid),
        Err(crate::Error::GridMismatch)
    ));
}

#[test]
fn torus_singular_lines() {
    let grid = torus_grid(64);
    let f = solve_factors_revolution(grid.chart(), &grid).unwrap();
    let at = |axis: usize| -> Vec<f64> {
        let mut v: Vec<f64> = f
            .singular_lines()
            .iter()
            .filter(|l| l.axis == axis)
            .map(|l| l.at)
            .collect();
        v.sort_by(f64::total_cmp);
        v
    };
    for axis in 0..2 {
        let lines = at(axis);
        assert_eq!(lines.len(), 1);
        assert!((lines[0] - PI / 2.0).abs() < 1e-9);
    }
    let z = at(2);
    assert_eq!(z.len(), 2);
    assert!(z[0].abs() < 1e-9 && (z[1] - PI).abs() < 1e-9, "{z:?}");
}

#[test]
fn single_precision_smoke() {
    let chart = Surface::<f32>::torus(2.0, 1.0).unwrap();
    let grid = Grid::new(&chart, 32, 32).unwrap();
    let q = Quantizer::with_defaults(&grid).unwrap();
    let psi = ScalarField::from_fn(&grid, |_, phi| num_complex::Complex32::from_polar(1.0, phi));
    let lap = q.laplace_beltrami(&psi).unwrap();
    let expected = ScalarField::from_fn(&grid, |th, phi| {
        num_complex::Complex32::from_polar(1.0, phi) * (-1.0 / (2.0 + th.sin()).powi(2))
    });
    let err = crate::fields::max_abs_masked(&(&lap - &expected).into_values(), None).0;
    assert!(err < 1e-3, "{err}");
}
