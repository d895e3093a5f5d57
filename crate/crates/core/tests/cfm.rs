mod common;

use common::fixtures::*;
use common::PolyWave;
use htcfm::exact::{ExactSolution, MaterialParams};
use htcfm::material::Materials;
use htcfm::mesh::Domain;
use std::sync::Arc;
use htcfm::cfm::{assemble_rhs, factorize, precompute_map, solve_and_apply, unknown_count};
use htcfm::hermite::{cell_polynomial, gather_corners, project_with, FieldState};
use htcfm::mesh::Parity;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn unknown_counts() {
    assert_eq!(unknown_count(1, 2, false), 18);
    assert_eq!(unknown_count(2, 2, false), 81);
    assert_eq!(unknown_count(1, 4, true), 100);
    assert_eq!(unknown_count(2, 4, true), 750);

    let s = setup(2, 24, 1, boundary_2d(), Materials::default());
    let (class, jobs) = all_jobs(&s);
    assert_eq!(system(&s, &class, jobs[0].0, false).unknowns(), 81);
    let s = setup(1, 40, 2, interface_1d(), dielectric());
    let (class, jobs) = all_jobs(&s);
    let sizes: Vec<usize> = jobs.iter().map(|&(id, b)| system(&s, &class, id, b).unknowns()).collect();
    assert!(sizes.contains(&100), "{sizes:?}");
}

#[test]
fn matrices_symmetric_positive_definite() {
    let n = spd_sweep(&mut ChaCha8Rng::seed_from_u64(7)).unwrap();
    assert_eq!(n, 4 * 2 * 2 * 20);
}

#[test]
fn manufactured_solutions_reproduced_through_full_step() {
    for (label, e) in reproduction_cases() {
        assert!(e < 1e-9, "{label}: {e:e}");
    }
}

/// Assemble-rhs + solve on explicit cell polynomials agrees with the
/// precomputed map applied to the same node data (derivatives compared as
/// f^(a,b) h^(a+b)).
#[test]
fn direct_solve_matches_precomputed_map() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let wave = PolyWave { dims: 2, coeffs: vec![0.2, 0.5, -0.3, 0.1, 0.05, 0.02], dir: [0.8, 0.6], mat: MaterialParams { mu: 1.0, eps: 1.0 } };
    let cases: Vec<(usize, usize, Domain, Materials, Arc<dyn ExactSolution>)> = vec![
        (1, 40, interface_1d(), dielectric(), Arc::new(PolyWave { dims: 1, ..wave.clone() })),
        (2, 20, boundary_2d(), Materials::default(), Arc::new(wave.clone())),
        (2, 20, interface_2d_circle(), dielectric(), Arc::new(wave.clone())),
    ];
    for (dims, n, domain, mats, driver) in cases {
        for m in [1, 2] {
            let s = setup(dims, n, m, domain.clone(), mats);
            let (class, jobs) = all_jobs(&s);
            let cell_maps = s.cell_maps().unwrap();
            let t_target = 0.37;
            // smooth, non-solution node data on both parities
            let ph: [f64; 3] = [rng.random_range(0.0..6.0), rng.random_range(0.0..6.0), rng.random_range(0.0..6.0)];
            let smooth = |k: f64| move |_: htcfm::mesh::Subdomain, x: [f64; 2]| {
                [(3.0 * x[0] + 1.3 * x[1] + k * ph[0]).sin(), (2.0 * x[0] - x[1] + k * ph[1]).cos(), (x[0] + 2.0 * x[1] + k * ph[2]).sin() + 0.3]
            };
            let recent_p = project_with(&s.mesh, &class, m, Parity::Primal, 0.0, smooth(1.0)).unwrap();
            let recent_d = project_with(&s.mesh, &class, m, Parity::Dual, 0.0, smooth(2.0)).unwrap();
            let nd = recent_p.n_derivs();
            let w: Vec<f64> = (0..recent_p.block()).map(|j| s.mesh.h.powi(((j % nd) % (m + 1) + (j % nd) / (m + 1)) as i32)).collect();
            for &(id, boot) in jobs.iter().step_by(3) {
                let mut sys = system(&s, &class, id, boot);
                factorize(&mut sys).unwrap();
                // source for a region: the opposite parity of the cell's node
                let (recent, old) = match id.parity {
                    Parity::Dual => (&recent_p, &recent_d),
                    Parity::Primal => (&recent_d, &recent_p),
                };
                let mut corners = vec![];
                let polys: Vec<_> = sys
                    .patch
                    .regions
                    .iter()
                    .map(|r| {
                        let src = if r.cell.parity == id.parity { recent } else { old };
                        gather_corners(&s.mesh, src, r.cell, &mut corners).unwrap();
                        let mat = if r.subdomain.index() == 0 { mats.plus } else { mats.minus };
                        cell_polynomial(dims, m, s.mesh.h, s.mesh.dt, mat, r.center, t_target + r.launch, &corners).unwrap()
                    })
                    .collect();
                let b = assemble_rhs(&sys, &polys, Some(driver.as_ref()), t_target).unwrap();
                let mut direct = FieldState::zeros(&s.mesh, m, id.parity, t_target);
                solve_and_apply(&sys, &b, &mut direct).unwrap();

                let map = precompute_map(&sys, &s.mesh, &cell_maps, Some(driver.as_ref())).unwrap();
                let mut via_map = vec![0.0; direct.block()];
                map.apply(recent, old, Some(driver.as_ref()), t_target, &mut via_map);
                let want = direct.node(id.index);
                let scale = want.iter().zip(&w).fold(1.0f64, |a, (v, s)| a.max((v * s).abs()));
                let rel = via_map.iter().zip(want).zip(&w).fold(0.0f64, |acc, ((a, b), sc)| acc.max((a - b).abs() * sc / scale));
                // both paths carry rounding amplified by the condition number
                let tol = 1e-9 + 0.1 * sys.cond * f64::EPSILON;
                assert!(rel <= tol, "dims {dims} m {m} {id:?} boot {boot}: rel {rel:e}, cond {:e}", sys.cond);
            }
        }
    }
}

