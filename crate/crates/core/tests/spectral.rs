//! Frequency-domain assembly checks: block sums, conjugate mirroring,
//! Hermiticity of densities, and the commutation identity of the closed loop.

mod common;

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

use common::{degenerate_spec, random_spec};
use tinet_core::model::{b_from_coupling, coupling_drift, drift_blocks, OffsetFamily};
use tinet_core::spectral::{
    cesaro_sigma, sigma_of_z, symbol_a, symbol_grid_columns, symbol_grid_rows, symbol_noise,
    write_grid_csv, FrequencyGrid, LoopBlocks,
};

fn unit(phi: f64) -> Complex64 {
    Complex64::from_polar(1.0, phi)
}

#[test]
fn symbol_equals_manual_block_assembly() {
    let spec = random_spec(5);
    let b1 = b_from_coupling(spec.theta1(), spec.m1()).unwrap();
    let b2 = b_from_coupling(spec.theta2(), spec.m2()).unwrap();
    let plant = drift_blocks(spec.theta1(), spec.plant_energy(), &b1, &spec.noise1()).unwrap();
    let ctrl = drift_blocks(
        spec.theta2(),
        spec.controller().r2(),
        &b2,
        &spec.noise2(),
    )
    .unwrap();
    let coupling = OffsetFamily::from_center(spec.controller().rt0().clone()).unwrap();
    let (onto_plant, onto_ctrl) =
        coupling_drift(spec.theta1(), spec.theta2(), &coupling).unwrap();

    for z in [unit(0.0), unit(1.1), unit(-2.4)] {
        let a = symbol_a(&spec, z).unwrap();
        let mut manual = DMatrix::<Complex64>::zeros(4, 4);
        let mut block11 = DMatrix::<Complex64>::zeros(2, 2);
        let mut block22 = DMatrix::<Complex64>::zeros(2, 2);
        for l in -1i64..=1 {
            let w = z.powi(-(l as i32));
            block11 += plant.block(l).map(|x| w.scale(x));
            block22 += ctrl.block(l).map(|x| w.scale(x));
        }
        manual.view_mut((0, 0), (2, 2)).copy_from(&block11);
        manual.view_mut((2, 2), (2, 2)).copy_from(&block22);
        manual
            .view_mut((0, 2), (2, 2))
            .copy_from(&onto_plant.block(0).map(|x| Complex64::new(x, 0.0)));
        manual
            .view_mut((2, 0), (2, 2))
            .copy_from(&onto_ctrl.block(0).map(|x| Complex64::new(x, 0.0)));
        assert!((a - manual).norm() < 1e-14, "z = {z}");
    }
}

#[test]
fn degenerate_noise_symbol_is_uniform() {
    let v = symbol_noise(&degenerate_spec()).unwrap();
    let mut expected = DMatrix::<Complex64>::zeros(4, 4);
    for b in 0..2 {
        let o = 2 * b;
        expected[(o, o)] = Complex64::new(4.0, 0.0);
        expected[(o + 1, o + 1)] = Complex64::new(4.0, 0.0);
        expected[(o, o + 1)] = Complex64::new(0.0, 4.0);
        expected[(o + 1, o)] = Complex64::new(0.0, -4.0);
    }
    assert_eq!(v, expected);
}

#[test]
fn closed_loop_obeys_commutation_identity() {
    // A_z Theta + Theta A_z^* + B J B^T = 0 on the circle: the drift moves
    // the commutation structure exactly as the field couplings inject it.
    for seed in [3u64, 4, 5] {
        let spec = random_spec(seed);
        let blocks = LoopBlocks::from_spec(&spec).unwrap();
        let theta = blocks.theta_c().clone();
        let bjb = blocks.noise_intensity().map(|x| Complex64::new(x.im, 0.0));
        for &z in FrequencyGrid::uniform(17).points() {
            let a = blocks.symbol(z).unwrap();
            let residue = &a * &theta + &theta * a.adjoint() + &bjb;
            assert!(
                residue.norm() <= 1e-12 * (1.0 + a.norm() * theta.norm()),
                "seed {seed}, z = {z}: residue {}",
                residue.norm()
            );
        }
    }
}

#[test]
fn grids_mirror_conjugates_bitwise() {
    for n in [8usize, 12, 16, 64] {
        let grid = FrequencyGrid::roots_of_unity(n);
        let points = grid.points();
        assert_eq!(points.len(), n);
        assert_eq!(points[0], Complex64::new(1.0, 0.0));
        for j in 1..n {
            let mirror = points[n - j];
            assert_eq!(points[j].re, mirror.re, "n {n}, j {j}");
            assert_eq!(points[j].im, -mirror.im, "n {n}, j {j}");
        }
    }
    // Quarter-turn points land exactly on the axes.
    let g8 = FrequencyGrid::roots_of_unity(8);
    assert_eq!(g8.points()[2], Complex64::new(0.0, 1.0));
    assert_eq!(g8.points()[4], Complex64::new(-1.0, 0.0));
    assert_eq!(g8.points()[6], Complex64::new(0.0, -1.0));
}

#[test]
fn symbol_mirrors_conjugate_arguments_bitwise() {
    let spec = random_spec(6);
    for phi in [0.37, 1.9, 2.6] {
        let z = unit(phi);
        let a = symbol_a(&spec, z).unwrap();
        let a_bar = symbol_a(&spec, z.conj()).unwrap();
        for r in 0..4 {
            for c in 0..4 {
                assert_eq!(a_bar[(r, c)].re, a[(r, c)].re);
                assert_eq!(a_bar[(r, c)].im, -a[(r, c)].im);
            }
        }
    }
}

#[test]
fn cesaro_partial_sums_approach_the_symbol() {
    let spec = random_spec(7);
    let w = spec.weights();
    // One-sided tail bound: the damped sum differs from the full symbol by
    // at most sum_k (k/n) * 2 ||sigma_k||.
    let mut coeff = 0.0;
    for k in 1..=w.lag() {
        coeff += 2.0 * k as f64 * w.sigma(k).norm();
    }
    for n in [4usize, 16, 64, 256] {
        let z = unit(0.9);
        let full = sigma_of_z(w, z).unwrap();
        let damped = cesaro_sigma(w, n, z).unwrap();
        let gap = (&full - &damped).norm();
        assert!(
            gap <= coeff / n as f64 + 1e-14,
            "n {n}: gap {gap} exceeds {}",
            coeff / n as f64
        );
    }
}

#[test]
fn grid_csv_round_trips_full_precision() {
    let spec = random_spec(8);
    let grid = FrequencyGrid::roots_of_unity(4);
    let rows = symbol_grid_rows(&spec, &grid).unwrap();
    let names = symbol_grid_columns(4);
    let name_refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let mut out = Vec::new();
    write_grid_csv(&mut out, &name_refs, &rows).unwrap();
    let text = String::from_utf8(out).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("re_z,im_z,re_a_0_0,im_a_0_0"));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first.len(), 2 + names.len());
    // Parsing back must reproduce the samples bit for bit.
    let a0 = symbol_a(&spec, grid.points()[0]).unwrap();
    assert_eq!(first[0].parse::<f64>().unwrap(), 1.0);
    assert_eq!(first[2].parse::<f64>().unwrap(), a0[(0, 0)].re);
    assert_eq!(first[3].parse::<f64>().unwrap(), a0[(0, 0)].im);
}

proptest! {
    #[test]
    fn weight_density_is_exactly_hermitian(seed in 0u64..256, phi in 0.0..std::f64::consts::TAU) {
        let spec = random_spec(seed);
        let z = unit(phi);
        let sigma = sigma_of_z(spec.weights(), z).unwrap();
        for r in 0..4 {
            for c in 0..4 {
                let a = sigma[(r, c)];
                let b = sigma[(c, r)];
                prop_assert_eq!(a.re, b.re);
                prop_assert_eq!(a.im, -b.im);
            }
        }
    }

    #[test]
    fn energy_symbol_is_exactly_hermitian(seed in 0u64..256, phi in 0.0..std::f64::consts::TAU) {
        let spec = random_spec(seed);
        let z = unit(phi);
        let r = spec.plant_energy().symbol(z);
        for i in 0..2 {
            for j in 0..2 {
                prop_assert_eq!(r[(i, j)].re, r[(j, i)].re);
                prop_assert_eq!(r[(i, j)].im, -r[(j, i)].im);
            }
        }
    }

    #[test]
    fn off_circle_arguments_are_rejected(radius in 0.5f64..0.99) {
        let spec = random_spec(1);
        let z = Complex64::from_polar(radius, 1.0);
        prop_assert!(symbol_a(&spec, z).is_err());
    }
}
