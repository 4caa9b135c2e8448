mod common;

use perovsim_core::assembly::{
    bernoulli, edge_coefficient, edge_flux, two_point_flux, FluxNode, FluxScheme, State,
};
use perovsim_core::statistics::{ShiftedStatistics, StatisticsKind};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Classical Scharfetter–Gummel flux written out from scratch.
fn classical_sg(mu_t: f64, z: f64, psi: [f64; 2], u: [f64; 2]) -> f64 {
    let b = |x: f64| {
        if x.abs() < 1e-4 {
            1.0 - x / 2.0 + x * x / 12.0
        } else {
            x / x.exp_m1()
        }
    };
    let x = z * (psi[1] - psi[0]);
    mu_t * (b(x) * u[0] - b(-x) * u[1])
}

fn node(st: &ShiftedStatistics, psi: f64, u: f64) -> FluxNode {
    FluxNode::new(psi, u, &st.local(u).unwrap())
}

#[test]
fn excess_potential_flux_matches_classical_on_boltzmann_edges() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let st = ShiftedStatistics::new(
            StatisticsKind::Boltzmann,
            rng.gen_range(-5.0..0.0),
            rng.gen_range(0.1..10.0),
        )
        .unwrap();
        let z = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let psi = [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)];
        let u = [
            10f64.powf(rng.gen_range(-8.0..1.0)),
            10f64.powf(rng.gen_range(-8.0..1.0)),
        ];
        let mu_t = rng.gen_range(0.01..100.0);
        let f = two_point_flux(mu_t, z, &node(&st, psi[0], u[0]), &node(&st, psi[1], u[1])).flux;
        let c = classical_sg(mu_t, z, psi, u);
        let scale = mu_t * (u[0].abs() + u[1].abs()) * (1.0 + (psi[1] - psi[0]).abs());
        worst = worst.max((f - c).abs() / scale);
    }
    assert!(worst <= 1e-12, "worst relative deviation {worst:e}");
}

#[test]
fn device_flux_schemes_agree_for_boltzmann_species() {
    let device = common::boltzmann_device(30);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let psi: Vec<f64> = (0..device.n_cells())
        .map(|_| rng.gen_range(-2.0..2.0))
        .collect();
    let densities = device
        .layout
        .region
        .iter()
        .enumerate()
        .map(|(i, cells)| {
            let cap = if device.species[i].is_carrier() {
                1.0
            } else {
                0.9
            };
            cells.iter().map(|_| rng.gen_range(0.01..cap)).collect()
        })
        .collect();
    let state = State {
        t: 0.0,
        psi,
        densities,
    };
    for (i, sp) in device.species.iter().enumerate() {
        for e in 0..device.mesh.edges.len() {
            let ecp =
                edge_flux(&device, i, e, &state, FluxScheme::ExcessChemicalPotential).unwrap();
            match edge_flux(&device, i, e, &state, FluxScheme::ClassicalSg) {
                Ok(c) => assert!((ecp - c).abs() <= 1e-12 * c.abs().max(1e-300)),
                Err(_) => assert!(!sp.is_carrier()),
            }
        }
    }
}

#[test]
fn flux_vanishes_at_constant_quasi_fermi_potential() {
    let device = common::pin_device(40);
    let phi = 0.3;
    let psi: Vec<f64> = device
        .mesh
        .centers
        .iter()
        .map(|c| 4.0 * (3.0 * c[0]).sin())
        .collect();
    let densities = device
        .species
        .iter()
        .zip(&device.layout.region)
        .map(|(sp, cells)| {
            cells
                .iter()
                .map(|&k| {
                    sp.statistics
                        .carrier_density(sp.z() * (phi - psi[k]))
                        .unwrap()
                })
                .collect()
        })
        .collect();
    let state = State {
        t: 0.0,
        psi,
        densities,
    };
    for i in 0..device.species.len() {
        for e in 0..device.mesh.edges.len() {
            let f = edge_flux(&device, i, e, &state, FluxScheme::ExcessChemicalPotential).unwrap();
            assert!(f.abs() <= 1e-14, "species {i} edge {e}: {f:e}");
        }
    }
}

proptest! {
    #[test]
    fn flux_is_antisymmetric(
        psi in prop::array::uniform2(-10.0f64..10.0),
        u in prop::array::uniform2(1e-8f64..0.99),
        zeta in -6.0f64..0.0,
        mu_t in 1e-3f64..1e3,
        z in prop::sample::select(vec![-1.0, 1.0, 2.0]),
        fd in any::<bool>(),
    ) {
        let kind = if fd { StatisticsKind::FermiDiracHalf } else { StatisticsKind::Blakemore { gamma: 1.0 } };
        let st = ShiftedStatistics::new(kind, zeta, 1.0).unwrap();
        let (k, l) = (node(&st, psi[0], u[0]), node(&st, psi[1], u[1]));
        let fwd = two_point_flux(mu_t, z, &k, &l);
        let bwd = two_point_flux(mu_t, z, &l, &k);
        prop_assert_eq!(fwd.flux, -bwd.flux);
        prop_assert_eq!(fwd.d_uk, -bwd.d_ul);
        prop_assert_eq!(fwd.d_psik, -bwd.d_psil);
    }

    #[test]
    fn flux_derivatives_match_differences(
        psi in prop::array::uniform2(-3.0f64..3.0),
        u in prop::array::uniform2(1e-3f64..2.0),
        zeta in -4.0f64..0.0,
    ) {
        let st = ShiftedStatistics::new(StatisticsKind::FermiDiracHalf, zeta, 1.0).unwrap();
        let f = |p: [f64; 2], v: [f64; 2]| two_point_flux(1.0, -1.0, &node(&st, p[0], v[0]), &node(&st, p[1], v[1])).flux;
        let exact = two_point_flux(1.0, -1.0, &node(&st, psi[0], u[0]), &node(&st, psi[1], u[1]));
        let h = 1e-6;
        let du = h * u[0];
        let fd_uk = (f(psi, [u[0] + du, u[1]]) - f(psi, [u[0] - du, u[1]])) / (2.0 * du);
        let fd_psil = (f([psi[0], psi[1] + h], u) - f([psi[0], psi[1] - h], u)) / (2.0 * h);
        prop_assert!((fd_uk - exact.d_uk).abs() <= 1e-5 * exact.d_uk.abs().max(1.0));
        prop_assert!((fd_psil - exact.d_psil).abs() <= 1e-5 * exact.d_psil.abs().max(1.0));
    }

    #[test]
    fn bernoulli_identity(x in -50.0f64..50.0) {
        // B(−x) = B(x) + x
        prop_assert!((bernoulli(-x) - bernoulli(x) - x).abs() <= 4.0 * f64::EPSILON * x.abs().max(1.0));
    }

    #[test]
    fn harmonic_edge_coefficient_is_bounded(a in prop::array::uniform2(1e-3f64..1e3), h in prop::array::uniform2(1e-3f64..1.0)) {
        let c = edge_coefficient(1.0, h, a);
        let (lo, hi) = (a[0].min(a[1]), a[0].max(a[1]));
        prop_assert!(c >= lo / (h[0] + h[1]) * (1.0 - 1e-12));
        prop_assert!(c <= hi / (h[0] + h[1]) * (1.0 + 1e-12));
    }
}
