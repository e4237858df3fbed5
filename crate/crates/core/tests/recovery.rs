use loewner::analysis::{error_sweep, relative_error, response_table};
use loewner::data::log_grid;
use loewner::pencil::{reduce, select_order, svd_pencil, OrderPolicy, Shift};
use loewner::pipeline::{assemble, fit, ReductionOptions};
use loewner::{
    generate_modal_system, sample_frequency_response, DescriptorSystem, ModalSpec,
    TransferFunction, C64,
};

fn siso_system(order: usize, seed: u64) -> DescriptorSystem {
    generate_modal_system(&ModalSpec {
        modes: order / 2,
        omega: (0.5, 50.0),
        damping: (0.05, 0.2),
        inputs: 1,
        outputs: 1,
        seed,
    })
    .unwrap()
}

fn rel(a: C64, b: C64) -> f64 {
    (a - b).norm() / b.norm()
}

#[test]
fn tolerance_policy_recovers_true_order() {
    for (n, seed) in [(4, 1), (10, 2), (20, 3)] {
        let sys = siso_system(n, seed);
        let ds =
            sample_frequency_response(&sys, &log_grid(0.1, 100.0, 2 * n + 10).unwrap()).unwrap();
        let opts = ReductionOptions {
            order: OrderPolicy::Tolerance(1e-10),
            ..Default::default()
        };
        let red = fit(&ds, &opts).unwrap();
        assert_eq!(red.selection.order, n, "order for n = {n}");

        let held_out =
            sample_frequency_response(&sys, &log_grid(0.13, 87.0, 100).unwrap()).unwrap();
        let rep = relative_error(&held_out, &red.model).unwrap();
        assert!(rep.epsilon <= 1e-6, "n = {n}: epsilon {}", rep.epsilon);
    }
}

#[test]
fn full_rank_model_interpolates_tangential_data() {
    // 2x2 system, complex pencil without closure.
    let sys = generate_modal_system(&ModalSpec {
        modes: 3,
        omega: (1.0, 10.0),
        damping: (0.1, 0.3),
        inputs: 2,
        outputs: 2,
        seed: 5,
    })
    .unwrap();
    let ds = sample_frequency_response(&sys, &log_grid(0.5, 20.0, 24).unwrap()).unwrap();
    for real in [false, true] {
        let opts = ReductionOptions {
            conjugate_close: real,
            real,
            ..Default::default()
        };
        let red = fit(&ds, &opts).unwrap();
        assert_eq!(red.selection.order, 6);
        let td = red.pencil.source();
        for pt in td.right() {
            let got = red.model.eval_transfer(pt.lambda).unwrap() * &pt.direction;
            assert!((got - &pt.value).norm() <= 1e-8 * pt.value.norm());
        }
        for pt in td.left() {
            let got = &pt.direction * red.model.eval_transfer(pt.mu).unwrap();
            assert!((got - &pt.value).norm() <= 1e-8 * pt.value.norm());
        }
    }
}

#[test]
fn square_full_rank_reproduces_samples() {
    // nu = rho = n: r = min(nu, rho) interpolates every sample.
    let sys = siso_system(6, 9);
    let ds = sample_frequency_response(&sys, &log_grid(0.3, 30.0, 12).unwrap()).unwrap();
    let opts = ReductionOptions {
        conjugate_close: false,
        real: false,
        order: OrderPolicy::Explicit(6),
        ..Default::default()
    };
    let red = fit(&ds, &opts).unwrap();
    for smp in ds.samples() {
        let got = red.model.eval_transfer(smp.s).unwrap()[(0, 0)];
        assert!(rel(got, smp.h[(0, 0)]) <= 1e-8);
    }
}

#[test]
fn shift_choice_does_not_change_the_model() {
    let sys = siso_system(10, 4);
    let ds = sample_frequency_response(&sys, &log_grid(0.1, 100.0, 30).unwrap()).unwrap();
    for real in [true, false] {
        let base = ReductionOptions {
            real,
            order: OrderPolicy::Explicit(10),
            ..Default::default()
        };
        let shifts = if real {
            [
                Shift::Value(C64::new(0.7, 0.0)),
                Shift::Value(C64::new(12.0, 0.0)),
            ]
        } else {
            [
                Shift::Value(C64::new(0.0, 0.1)),
                Shift::Value(C64::new(0.0, 3.3)),
            ]
        };
        let a = fit(
            &ds,
            &ReductionOptions {
                shift: shifts[0],
                ..base
            },
        )
        .unwrap();
        let b = fit(
            &ds,
            &ReductionOptions {
                shift: shifts[1],
                ..base
            },
        )
        .unwrap();
        for smp in ds.samples() {
            let ga = a.model.eval_transfer(smp.s).unwrap()[(0, 0)];
            let gb = b.model.eval_transfer(smp.s).unwrap()[(0, 0)];
            assert!(rel(ga, gb) <= 1e-10, "real = {real}: {ga} vs {gb}");
        }
    }
}

#[test]
fn real_models_are_real_and_conjugate_symmetric() {
    let sys = siso_system(8, 12);
    let ds = sample_frequency_response(&sys, &log_grid(0.1, 100.0, 40).unwrap()).unwrap();
    let red = fit(&ds, &ReductionOptions::default()).unwrap();
    let m = &red.model;
    assert!(m.is_real());
    for mat in [m.et(), m.at(), m.bt(), m.ct(), m.dt()] {
        assert!(mat.iter().all(|z| z.im == 0.0));
    }
    for smp in ds.samples() {
        let g = m.eval_transfer(smp.s).unwrap()[(0, 0)];
        let g_conj = m.eval_transfer(smp.s.conj()).unwrap()[(0, 0)];
        assert!((g_conj - g.conj()).norm() <= 1e-12 * g.norm());
    }
    let json = m.to_json().unwrap();
    assert!(!json.contains("_im"));
    let sys_back = DescriptorSystem::from_json(&json).unwrap();
    assert_eq!(sys_back.states(), m.order());
}

#[test]
fn complex_models_round_trip_through_json() {
    let sys = siso_system(4, 2);
    let ds = sample_frequency_response(&sys, &log_grid(0.1, 100.0, 20).unwrap()).unwrap();
    let opts = ReductionOptions {
        conjugate_close: false,
        real: false,
        ..Default::default()
    };
    let red = fit(&ds, &opts).unwrap();
    assert!(!red.model.is_real());
    let json = red.model.to_json().unwrap();
    assert!(json.contains("A_im"));
    let back = loewner::ReducedModel::from_json(&json).unwrap();
    assert_eq!(back.at(), red.model.at());
    assert_eq!(back.to_json().unwrap(), json);
}

#[test]
fn sweep_improves_with_order() {
    let sys = siso_system(20, 7);
    let ds = sample_frequency_response(&sys, &log_grid(0.1, 100.0, 50).unwrap()).unwrap();
    let pencil = assemble(&ds, &ReductionOptions::default()).unwrap();
    let svd = svd_pencil(&pencil, Shift::Auto);
    let entries = error_sweep(&pencil, &svd, &ds, &[5, 10, 20]);
    let eps: Vec<f64> = entries
        .iter()
        .map(|e| *e.outcome.as_ref().unwrap())
        .collect();
    assert!(eps[2] < eps[0]);
    assert!(eps[2] <= 1e-8);

    let single = error_sweep(&pencil, &svd, &ds, &[10]);
    let direct = relative_error(&ds, &reduce(&pencil, &svd, 10).unwrap()).unwrap();
    assert_eq!(single[0].outcome, Ok(direct.epsilon));

    // Beyond the true order Et loses rank: recorded, not fatal.
    let wide = error_sweep(&pencil, &svd, &ds, &[20, 40, 50]);
    assert_eq!(wide.len(), 3);
    assert!(wide[0].outcome.is_ok());
}

#[test]
fn exact_model_response_table_matches() {
    let one = |x| nalgebra::DMatrix::from_element(1, 1, x);
    let sys = DescriptorSystem::new(one(1.0), one(-1.0), one(1.0), one(1.0)).unwrap();
    let ds = sample_frequency_response(&sys, &log_grid(0.1, 100.0, 10).unwrap()).unwrap();
    let red = fit(&ds, &ReductionOptions::default()).unwrap();
    assert_eq!(red.selection.order, 1);
    let rows = response_table(&ds, &red.model).unwrap();
    for r in rows {
        assert!((r.mag_h - r.mag_g).abs() <= 1e-8 * r.mag_h);
    }
    assert!(relative_error(&ds, &red.model).unwrap().epsilon <= 1e-8);
}

#[test]
fn rank_detection_matches_system_order() {
    let sys = siso_system(12, 21);
    let ds = sample_frequency_response(&sys, &log_grid(0.1, 100.0, 40).unwrap()).unwrap();
    let pencil = assemble(&ds, &ReductionOptions::default()).unwrap();
    let svd = svd_pencil(&pencil, Shift::Auto);
    let above = svd.normalized().iter().filter(|&&s| s > 1e-10).count();
    assert_eq!(above, 12);
    assert_eq!(
        select_order(&svd, OrderPolicy::Tolerance(1e-10))
            .unwrap()
            .order,
        12
    );
}
