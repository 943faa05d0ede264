use nalgebra::{DMatrix, DVector, Vector3};
use phygital_core::dynamics::{
    conservation_diagnostic, simulate, CouplingGraph, ExternalEvent, ExternalSchedule, Integrator, IntrinsicSpec,
    World,
};
use phygital_core::{Block, DimensionLayout, Entity, EntityKind, MassTensor, PhygitalState};
use proptest::prelude::*;

fn entity(id: &str, layout: DimensionLayout, coords: &[f64], mass: MassTensor, kind: EntityKind) -> Entity {
    Entity::new(id, PhygitalState::new(layout, coords.to_vec()).unwrap(), mass, kind).unwrap()
}

fn single(coords: &[f64], spec: IntrinsicSpec, schedule: ExternalSchedule, dt: f64, integ: Integrator) -> World {
    let layout = DimensionLayout::new(coords.len() / 3).unwrap();
    World::new(
        layout,
        vec![entity("e", layout, coords, MassTensor::identity(), EntityKind::Biological)],
        CouplingGraph::new(1),
        vec![spec],
        schedule,
        dt,
        integ,
    )
    .unwrap()
}

#[test]
fn rk4_decay_matches_closed_form() {
    let dim = 3;
    let spec = IntrinsicSpec::reactive(DMatrix::identity(dim, dim) * -1.0, DVector::zeros(dim));
    let w = single(&[1.0, -2.0, 0.5], spec, ExternalSchedule::default(), 0.01, Integrator::Rk4);
    let traj = simulate(&w, 1.0, 10).unwrap();
    let fin = &traj.final_states()[0];
    let decay = (-1.0f64).exp();
    for (got, x0) in fin.iter().zip([1.0, -2.0, 0.5]) {
        assert!((got - x0 * decay).abs() < 1e-6);
    }
    assert_eq!(traj.rows.last().unwrap().t, 1.0);
}

#[test]
fn euler_is_first_order() {
    let spec = IntrinsicSpec::reactive(DMatrix::identity(3, 3) * -1.0, DVector::zeros(3));
    let err = |dt: f64| {
        let w = single(&[1.0, 0.0, 0.0], spec.clone(), ExternalSchedule::default(), dt, Integrator::Euler);
        (simulate(&w, 1.0, 1000).unwrap().final_states()[0][0] - (-1.0f64).exp()).abs()
    };
    let ratio = err(0.02) / err(0.01);
    assert!((1.8..2.2).contains(&ratio), "{ratio}");
}

fn two_body(x0: &[f64], y0: &[f64], w: f64, layout: DimensionLayout) -> World {
    let mut g = CouplingGraph::new(2);
    g.add(0, 1, w).unwrap();
    g.add(1, 0, w).unwrap();
    World::new(
        layout,
        vec![
            entity("a", layout, x0, MassTensor::identity(), EntityKind::Biological),
            entity("b", layout, y0, MassTensor::identity(), EntityKind::Platform),
        ],
        g,
        vec![IntrinsicSpec::zero(layout.dim()); 2],
        ExternalSchedule::default(),
        0.01,
        Integrator::Rk4,
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn symmetric_diffusion_conserves_the_mean(
        x in prop::collection::vec(-10.0f64..10.0, 6),
        y in prop::collection::vec(-10.0f64..10.0, 6),
        w in 0.01f64..2.0,
    ) {
        let layout = DimensionLayout::new(2).unwrap();
        let world = two_body(&x, &y, w, layout);
        let traj = simulate(&world, 2.0, 1).unwrap();
        let report = conservation_diagnostic(&traj, &world).unwrap();
        let scale = x.iter().chain(&y).map(|v| v.abs()).fold(1.0, f64::max);
        for d in &report.per_step {
            prop_assert!(*d < 1e-9 * scale);
        }
        prop_assert!(!report.flagged);
        // and the bodies approach each other
        let fin = traj.final_states();
        prop_assert!((&fin[0] - &fin[1]).norm() <= (DVector::from_vec(x) - DVector::from_vec(y)).norm());
    }

    #[test]
    fn equilibrium_is_a_fixed_point(set in prop::collection::vec(-5.0f64..5.0, 3), kappa in 0.1f64..3.0) {
        let spec = IntrinsicSpec::reactive(DMatrix::identity(3, 3) * -kappa, DVector::from_vec(set.clone()));
        let w = single(&set, spec, ExternalSchedule::default(), 0.05, Integrator::Rk4);
        let next = w.step(0.0).unwrap();
        let states = next.states();
        prop_assert_eq!(states[0].as_slice(), set.as_slice());
    }

    #[test]
    fn anticipation_with_an_exact_model_never_hurts(kappa in 0.1f64..2.0, gain in 0.0f64..3.0, h in 0.0f64..1.0) {
        let k = DMatrix::identity(3, 3) * -kappa;
        let mut spec = IntrinsicSpec::reactive(k.clone(), DVector::zeros(3));
        let base = single(&[1.0, -1.0, 2.0], spec.clone(), ExternalSchedule::default(), 0.01, Integrator::Rk4);
        spec.anticipatory_gain = DMatrix::identity(3, 3) * gain;
        spec.predictor = k;
        spec.horizon = h;
        let ant = single(&[1.0, -1.0, 2.0], spec, ExternalSchedule::default(), 0.01, Integrator::Rk4);
        let e0 = simulate(&base, 5.0, 100).unwrap().final_states()[0].norm();
        let e1 = simulate(&ant, 5.0, 100).unwrap().final_states()[0].norm();
        prop_assert!(e1 <= e0);
    }

    #[test]
    fn synthetic_agents_ignore_physical_forcing(
        f in -100.0f64..100.0,
        x0 in prop::collection::vec(-3.0f64..3.0, 6),
        t_end in 0.1f64..2.0,
    ) {
        let layout = DimensionLayout::new(2).unwrap();
        let sa = MassTensor::from_parts([0.0, 1.0, 2.0], 0.0, 0.0, 0.5).unwrap();
        let k = DMatrix::from_fn(6, 6, |i, j| if i == j { -0.5 } else if i + 1 == j { 0.2 } else { 0.0 });
        let run = |events: Vec<ExternalEvent>| {
            let w = World::new(
                layout,
                vec![entity("sa", layout, &x0, sa.clone(), EntityKind::Synthetic)],
                CouplingGraph::new(1),
                vec![IntrinsicSpec::reactive(k.clone(), DVector::zeros(6))],
                ExternalSchedule::new(events).unwrap(),
                0.01,
                Integrator::Rk4,
            )
            .unwrap();
            simulate(&w, 2.0, 10).unwrap()
        };
        let free = run(vec![]);
        let forced = run(vec![ExternalEvent::per_dimension(0.0, t_end, 0, Vector3::new(f, 0.0, 0.0), layout)]);
        let phys = layout.block_range(Block::Physical);
        for (a, b) in free.rows.iter().zip(&forced.rows) {
            for i in phys.clone() {
                prop_assert!((a.state[i] - b.state[i]).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn zeroed_terms_reproduce_the_reduced_system_bitwise() {
    let layout = DimensionLayout::new(1).unwrap();
    let k = DMatrix::from_row_slice(3, 3, &[-1.0, 0.3, 0.0, 0.0, -0.5, 0.2, 0.1, 0.0, -0.8]);
    let set = DVector::from_column_slice(&[0.5, -0.5, 1.0]);
    let mass = MassTensor::from_parts([2.0, 1.0, 1.5], 0.3, 0.0, 0.2).unwrap();
    let ents = || {
        vec![
            entity("a", layout, &[1.0, 2.0, 3.0], mass.clone(), EntityKind::Biological),
            entity("b", layout, &[-1.0, 0.0, 0.5], mass.clone(), EntityKind::Platform),
        ]
    };
    let graph = |w: f64| {
        let mut g = CouplingGraph::new(2);
        g.add(0, 1, w).unwrap();
        g.add(1, 0, 2.0 * w).unwrap();
        g
    };
    let spec = |on: bool| {
        if on {
            IntrinsicSpec::reactive(k.clone(), set.clone())
        } else {
            IntrinsicSpec::reactive(DMatrix::zeros(3, 3), set.clone())
        }
    };
    let events = |f: f64| {
        ExternalSchedule::new(vec![ExternalEvent::per_dimension(0.2, 0.7, 1, Vector3::new(f, -f, 0.5 * f), layout)])
            .unwrap()
    };
    let run = |g: CouplingGraph, s: Vec<IntrinsicSpec>, e: ExternalSchedule| {
        let w = World::new(layout, ents(), g, s, e, 0.01, Integrator::Rk4).unwrap();
        simulate(&w, 1.0, 1).unwrap().to_csv()
    };
    // intrinsic zeroed vs omitted
    assert_eq!(
        run(graph(0.4), vec![spec(false), spec(false)], events(1.0)),
        run(graph(0.4), vec![IntrinsicSpec::zero(3), IntrinsicSpec::zero(3)], events(1.0))
    );
    // coupling zeroed vs omitted
    assert_eq!(
        run(graph(0.0), vec![spec(true), spec(true)], events(1.0)),
        run(CouplingGraph::new(2), vec![spec(true), spec(true)], events(1.0))
    );
    // external zeroed vs omitted
    assert_eq!(
        run(graph(0.4), vec![spec(true), spec(true)], events(0.0)),
        run(graph(0.4), vec![spec(true), spec(true)], ExternalSchedule::default())
    );
}
