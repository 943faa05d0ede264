//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::collections::BTreeMap;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use phygital::output::TableData;
use phygital::{load_config, parse_config, run_experiment, run_to_dir};
use phygital_core::bundle::{glue, holonomy, BaseCover, BasePoint, ConnectionPreset, GlobalSection, GlueOutcome};
use phygital_core::dynamics::{
    conservation_diagnostic, simulate, CouplingGraph, ExternalEvent, ExternalSchedule, Integrator, IntrinsicSpec, World,
};
use phygital_core::ecology::{
    flash_crash_scenario, mass_convergence_experiment, trust_accrual, verification_threshold, ConvergenceScenario,
    CostCurve, FlashCrashSpec, SyntheticAgentSpec, VerificationModel, REFERENCE_PROFILES,
};
use phygital_core::finsler::{Conformal, RandersMetric};
use phygital_core::temporal::{lie_bracket, sync_cost, FlowField, TabulatedField};
use phygital_core::thermo::{EnergyLedger, Pool, Pools, TransductionSpec};
use phygital_core::{Block, DimensionLayout, Entity, EntityKind, Error, MassTensor, PhygitalState};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(started: Instant, budget: Duration) -> Result<(), String> {
    let took = started.elapsed();
    ensure(took < budget, || format!("took {:.2} s, budget {} s", took.as_secs_f64(), budget.as_secs()))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

/// SPD `A = LLᵀ + 0.1·I` with a drift at `bᵀA⁻¹b = s²`.
fn random_metric(rng: &mut ChaCha8Rng, n: usize) -> RandersMetric {
    let l = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let a = &l * l.transpose() + DMatrix::identity(n, n) * 0.1;
    let d = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
    let q = a.clone().cholesky().unwrap().solve(&d).dot(&d);
    let s: f64 = rng.random_range(0.0..0.95);
    RandersMetric::new(a, d * (s / q.sqrt()), Conformal::Constant { value: 1.0 })
}

fn finsler_axioms() -> Check {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut worst_h, mut worst_r, mut min_eig) = (0.0f64, 0.0f64, f64::INFINITY);
    for i in 0..1000 {
        let n = 3 * (1 + i % 3);
        let m = random_metric(&mut rng, n);
        let diag = m.validate().map_err(|e| e.to_string())?;
        ensure(diag.ok, || format!("metric {i} rejected: {:?}", diag.violations))?;
        let x = vec![0.0; n];
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let lam: f64 = rng.random_range(0.01..100.0);
        let f = m.eval(&x, &v);
        let scaled: Vec<f64> = v.iter().map(|c| c * lam).collect();
        worst_h = worst_h.max((m.eval(&x, &scaled) - lam * f).abs() / (lam * f).max(1.0));
        let g = m.fundamental_tensor(&x, &v).map_err(|e| e.to_string())?;
        min_eig = min_eig.min(g.symmetric_eigen().eigenvalues.min());
        let r = RandersMetric::riemannian(m.a.clone()).fundamental_tensor(&x, &v).map_err(|e| e.to_string())?;
        worst_r = worst_r.max((r - &m.a).amax());
    }
    ensure(worst_h <= 1e-12, || format!("homogeneity error {worst_h:e}"))?;
    ensure(min_eig > 0.0, || format!("fundamental tensor eigenvalue {min_eig:e}"))?;
    ensure(worst_r < 1e-9, || format!("Riemannian reduction gap {worst_r:e}"))?;
    within(started, Duration::from_secs(10))?;
    Ok(format!(
        "homogeneity {worst_h:.1e}, min eig {min_eig:.3}, reduction gap {worst_r:.1e}, {:.2} s",
        started.elapsed().as_secs_f64()
    ))
}

fn json_table(res: &phygital::RunResult, name: &str) -> Result<serde_json::Value, String> {
    match res.tables.iter().find(|t| t.name == name).map(|t| &t.data) {
        Some(TableData::Json(v)) => Ok(v.clone()),
        _ => Err(format!("no {name} in the output")),
    }
}

fn geodesic_oracle() -> Check {
    let started = Instant::now();
    let cfg = load_config(&configs().join("geodesic_oracle.toml")).map_err(|e| e.to_string())?;
    let res = run_experiment(&cfg).map_err(|e| e.to_string())?;
    let s = json_table(&res, "summary.json")?;
    let (instances, hits) = (s["instances"].as_u64().unwrap_or(0), s["within_tolerance"].as_u64().unwrap_or(0));
    let max_gap = s["max_rel_gap"].as_f64().unwrap_or(f64::NAN);
    let gap_err = s["max_gap_error"].as_f64().unwrap_or(f64::NAN);
    ensure(instances == 20 && hits == 20, || format!("{hits}/{instances} instances within 2%, worst {max_gap:.4}"))?;
    ensure(gap_err < 1e-6, || format!("constant-coefficient gap error {gap_err:e}"))?;
    within(started, Duration::from_secs(60))?;
    Ok(format!(
        "{hits}/{instances} within 2% (worst {:.2}%), gap error {gap_err:.1e}, {:.2} s",
        100.0 * max_gap,
        started.elapsed().as_secs_f64()
    ))
}

fn mass() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..500 {
        let rank = rng.random_range(0..=3usize);
        let mut m = Matrix3::zeros();
        for _ in 0..rank {
            let c = Vector3::from_fn(|_, _| rng.random_range(-2.0..2.0));
            m += c * c.transpose();
        }
        let t = MassTensor::new(m).map_err(|e| e.to_string())?;
        let (a, p) = (t.matrix(), t.pseudoinverse());
        let scale = (1.0 + a.norm()) * (1.0 + p.norm()).powi(2);
        for r in [a * p * a - a, p * a * p - p, (a * p).transpose() - a * p, (p * a).transpose() - p * a] {
            worst = worst.max(r.amax() / scale);
        }
    }
    ensure(worst < 1e-10, || format!("Penrose residual {worst:e}"))?;

    let mut worst_kernel = 0.0f64;
    for _ in 0..500 {
        let u = Vector3::from_fn(|_, _| rng.random_range(-1.0..1.0));
        if u.norm() < 1e-3 {
            continue;
        }
        let n1 = u.cross(&Vector3::from_fn(|_, _| rng.random_range(-1.0..1.0))).normalize();
        let n2 = u.cross(&n1).normalize();
        let t = MassTensor::new(n1 * n1.transpose() * rng.random_range(0.1..5.0) + n2 * n2.transpose() * 0.5)
            .map_err(|e| e.to_string())?;
        let force = u * rng.random_range(0.1..10.0);
        worst_kernel = worst_kernel.max(t.respond(&force).norm() / force.norm());
        ensure(t.is_transparent_to(&force), || "kernel force not reported transparent".into())?;
    }
    ensure(worst_kernel < 1e-9, || format!("kernel response {worst_kernel:e}·|Φ|"))?;

    let mut last = -1.0;
    for i in 0..10 {
        let c = i as f64 / 10.0;
        let t = MassTensor::from_parts([1.0, 1.0, 1.0], c, 0.0, 0.0).map_err(|e| e.to_string())?;
        let cross = t.respond(&Vector3::new(0.0, 1.0, 0.0))[0].abs();
        ensure(cross > last, || format!("lock-in not increasing at c = {c}"))?;
        last = cross;
    }
    Ok(format!("Penrose {worst:.1e}, kernel {worst_kernel:.1e}, lock-in increasing"))
}

fn entity(id: &str, layout: DimensionLayout, coords: &[f64], mass: MassTensor, kind: EntityKind) -> Result<Entity, String> {
    let state = PhygitalState::new(layout, coords.to_vec()).map_err(|e| e.to_string())?;
    Entity::new(id, state, mass, kind).map_err(|e| e.to_string())
}

fn dynamics() -> Check {
    let l1 = DimensionLayout::new(1).map_err(|e| e.to_string())?;
    let err = |e: Error| e.to_string();

    // exponential decay
    let w = World::new(
        l1,
        vec![entity("e", l1, &[1.0, -2.0, 0.5], MassTensor::identity(), EntityKind::Biological)?],
        CouplingGraph::new(1),
        vec![IntrinsicSpec::reactive(-DMatrix::identity(3, 3), DVector::zeros(3))],
        ExternalSchedule::default(),
        0.01,
        Integrator::Rk4,
    )
    .map_err(err)?;
    let fin = simulate(&w, 1.0, 100).map_err(err)?.final_states()[0].clone();
    let decay_err = fin.iter().zip([1.0, -2.0, 0.5]).map(|(g, x0)| (g - x0 * (-1.0f64).exp()).abs()).fold(0.0, f64::max);
    ensure(decay_err < 1e-6, || format!("decay error {decay_err:e}"))?;

    // symmetric diffusion
    let l2 = DimensionLayout::new(2).map_err(err)?;
    let mut g = CouplingGraph::new(2);
    g.add(0, 1, 0.7).map_err(err)?;
    g.add(1, 0, 0.7).map_err(err)?;
    let w = World::new(
        l2,
        vec![
            entity("a", l2, &[3.0, -1.0, 2.0, 0.0, 5.0, 1.0], MassTensor::identity(), EntityKind::Biological)?,
            entity("b", l2, &[-2.0, 4.0, 0.5, 1.0, -3.0, 2.0], MassTensor::identity(), EntityKind::Platform)?,
        ],
        g,
        vec![IntrinsicSpec::zero(6); 2],
        ExternalSchedule::default(),
        0.01,
        Integrator::Rk4,
    )
    .map_err(err)?;
    let traj = simulate(&w, 2.0, 1).map_err(err)?;
    let drift = conservation_diagnostic(&traj, &w).map_err(err)?.per_step.iter().copied().fold(0.0, f64::max);
    ensure(drift < 1e-9, || format!("mean drift {drift:e} per step"))?;

    // zeroed vs omitted terms
    let k = DMatrix::from_row_slice(3, 3, &[-1.0, 0.3, 0.0, 0.0, -0.5, 0.2, 0.1, 0.0, -0.8]);
    let set = DVector::from_column_slice(&[0.5, -0.5, 1.0]);
    let mass = MassTensor::from_parts([2.0, 1.0, 1.5], 0.3, 0.0, 0.2).map_err(err)?;
    let graph = |w: f64| {
        let mut g = CouplingGraph::new(2);
        g.add(0, 1, w).unwrap();
        g.add(1, 0, 2.0 * w).unwrap();
        g
    };
    let events = |f: f64| {
        ExternalSchedule::new(vec![ExternalEvent::per_dimension(0.2, 0.7, 1, Vector3::new(f, -f, 0.5 * f), l1)]).unwrap()
    };
    let run = |g: CouplingGraph, s: Vec<IntrinsicSpec>, e: ExternalSchedule| -> Result<String, String> {
        let ents = vec![
            entity("a", l1, &[1.0, 2.0, 3.0], mass.clone(), EntityKind::Biological)?,
            entity("b", l1, &[-1.0, 0.0, 0.5], mass.clone(), EntityKind::Platform)?,
        ];
        let w = World::new(l1, ents, g, s, e, 0.01, Integrator::Rk4).map_err(|e| e.to_string())?;
        Ok(simulate(&w, 1.0, 1).map_err(|e| e.to_string())?.to_csv())
    };
    let on = || vec![IntrinsicSpec::reactive(k.clone(), set.clone()); 2];
    let off = || vec![IntrinsicSpec::reactive(DMatrix::zeros(3, 3), set.clone()); 2];
    ensure(run(graph(0.4), off(), events(1.0))? == run(graph(0.4), vec![IntrinsicSpec::zero(3); 2], events(1.0))?, || {
        "zeroed intrinsic term changes the trajectory".into()
    })?;
    ensure(run(graph(0.0), on(), events(1.0))? == run(CouplingGraph::new(2), on(), events(1.0))?, || {
        "zeroed coupling changes the trajectory".into()
    })?;
    ensure(run(graph(0.4), on(), events(0.0))? == run(graph(0.4), on(), ExternalSchedule::default())?, || {
        "zeroed forcing changes the trajectory".into()
    })?;

    // synthetic agents under physical forcing
    let sa = MassTensor::from_parts([0.0, 1.0, 2.0], 0.0, 0.0, 0.5).map_err(err)?;
    let kk = DMatrix::from_fn(6, 6, |i, j| if i == j { -0.5 } else if i + 1 == j { 0.2 } else { 0.0 });
    let sim = |events: Vec<ExternalEvent>| -> Result<_, String> {
        let w = World::new(
            l2,
            vec![entity("sa", l2, &[0.3, -1.0, 0.5, 2.0, -0.7, 1.1], sa.clone(), EntityKind::Synthetic)?],
            CouplingGraph::new(1),
            vec![IntrinsicSpec::reactive(kk.clone(), DVector::zeros(6))],
            ExternalSchedule::new(events).map_err(|e| e.to_string())?,
            0.01,
            Integrator::Rk4,
        )
        .map_err(|e| e.to_string())?;
        simulate(&w, 2.0, 1).map_err(|e| e.to_string())
    };
    let free = sim(vec![])?;
    let forced = sim(vec![ExternalEvent::per_dimension(0.0, 1.5, 0, Vector3::new(80.0, 0.0, 0.0), l2)])?;
    let phys = l2.block_range(Block::Physical);
    let sa_dev = free
        .rows
        .iter()
        .zip(&forced.rows)
        .flat_map(|(a, b)| phys.clone().map(move |i| (a.state[i] - b.state[i]).abs()))
        .fold(0.0, f64::max);
    ensure(sa_dev < 1e-12, || format!("synthetic physical deviation {sa_dev:e}"))?;
    Ok(format!("decay {decay_err:.1e}, mean drift {drift:.1e}, isolation bitwise, SA deviation {sa_dev:.1e}"))
}

fn thermo() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut l = EnergyLedger::new();
    l.open_account("a", Pools::new(100.0, 50.0, 25.0)).map_err(|e| e.to_string())?;
    l.open_account("b", Pools::new(10.0, 80.0, 40.0)).map_err(|e| e.to_string())?;
    let active = [Pool::Phy, Pool::Dig, Pool::Soc];
    let total = l.total();
    let mut s_env = l.s_env();
    let mut worst = 0.0f64;
    for i in 0..10_000 {
        let entity = if rng.random_bool(0.5) { "a" } else { "b" };
        let src = rng.random_range(0..3usize);
        let (source, destination) = (active[src], active[(src + rng.random_range(1..3usize)) % 3]);
        let amount = rng.random_range(0.0..1.0) * l.account(entity).map_err(|e| e.to_string())?.omega.get(source);
        let friction = rng.random_range(0.0..2.0);
        l.transduce(&TransductionSpec { entity: entity.into(), source, destination, amount, friction })
            .map_err(|e| format!("op {i}: {e}"))?;
        worst = worst.max((l.total() - total).abs() / total);
        ensure(l.s_env() >= s_env, || format!("S_env decreased at op {i}"))?;
        s_env = l.s_env();
    }
    ensure(worst <= 1e-12, || format!("conservation error {worst:e}"))?;

    let mut rejected = 0;
    for _ in 0..1000 {
        let drop = rng.random_range(1e-6..100.0);
        let overhead = rng.random_range(0.0..2.0) * drop;
        let before = l.clone();
        match l.record_order_creation("a", -drop, overhead) {
            Ok(_) => ensure(overhead >= drop, || format!("accepted overhead {overhead} < {drop}"))?,
            Err(Error::SecondLaw { .. }) => {
                rejected += 1;
                ensure(overhead < drop && l == before, || "guard rejected a valid case or left side effects".into())?;
            }
            Err(e) => return Err(e.to_string()),
        }
    }
    Ok(format!("conservation {worst:.1e}, S_env monotone, guard rejected {rejected}/1000 violating cases"))
}

fn analytic_x(p: &[f64]) -> Vec<f64> {
    vec![p[0].sin() * p[1], p[1].cos() + p[0] * p[0]]
}

fn analytic_y(p: &[f64]) -> Vec<f64> {
    vec![p[0] * p[1], (-p[0]).exp()]
}

fn exact_bracket(p: &[f64]) -> DVector<f64> {
    let (x, y) = (p[0], p[1]);
    let jx = DMatrix::from_row_slice(2, 2, &[x.cos() * y, x.sin(), 2.0 * x, -y.sin()]);
    let jy = DMatrix::from_row_slice(2, 2, &[y, x, -(-x).exp(), 0.0]);
    jy * DVector::from_vec(analytic_x(p)) - jx * DVector::from_vec(analytic_y(p))
}

fn temporal() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let err = |e: Error| e.to_string();
    let (mut comm, mut anti) = (0.0f64, 0.0f64);
    for _ in 0..500 {
        let a = DMatrix::from_fn(3, 3, |_, _| rng.random_range(-3.0..3.0));
        let b = DMatrix::from_fn(3, 3, |_, _| rng.random_range(-3.0..3.0));
        let x: Vec<f64> = (0..3).map(|_| rng.random_range(-5.0..5.0)).collect();
        let (fa, fb) = (FlowField::linear(a.clone()), FlowField::linear(b.clone()));
        let xy = lie_bracket(&fa, &fb, &x).map_err(err)?;
        let expect = (&b * &a - &a * &b) * DVector::from_column_slice(&x);
        comm = comm.max((&xy - &expect).amax() / (1.0 + expect.amax()));
        anti = anti.max((xy + lie_bracket(&fb, &fa, &x).map_err(err)?).amax());
    }
    ensure(comm <= 1e-12, || format!("commutator error {comm:e}"))?;
    ensure(anti < 1e-10, || format!("antisymmetry error {anti:e}"))?;

    let spacing = 1.0 / 32.0;
    let axis: Vec<f64> = (-32..=32).map(|i| i as f64 * spacing).collect();
    let tx = TabulatedField::sample(vec![axis.clone(), axis.clone()], analytic_x).map_err(err)?;
    let ty = TabulatedField::sample(vec![axis.clone(), axis], analytic_y).map_err(err)?;
    let probes = [[0.25, -0.5], [-0.375, 0.125], [0.5, 0.5]];
    let mut errs = Vec::new();
    for m in [4.0, 2.0, 1.0] {
        let fx = FlowField::Tabulated(tx.clone().with_fd_step(m * spacing));
        let fy = FlowField::Tabulated(ty.clone().with_fd_step(m * spacing));
        let mut e = 0.0f64;
        for p in &probes {
            e = e.max((lie_bracket(&fx, &fy, p).map_err(err)? - exact_bracket(p)).norm());
        }
        errs.push(e);
    }
    let ratios: Vec<f64> = errs.windows(2).map(|w| w[0] / w[1]).collect();
    ensure(ratios.iter().all(|r| (3.0..=5.0).contains(r)), || format!("FD ratios {ratios:?}"))?;

    let series: Vec<(f64, f64)> = (0..=100).map(|i| (i as f64 / 100.0, i as f64 / 100.0)).collect();
    let cost = sync_cost(&series, 2.0).map_err(err)?;
    ensure((cost - 1.0).abs() < 1e-6, || format!("sync cost {cost}"))?;
    Ok(format!("commutator {comm:.1e}, antisymmetry {anti:.1e}, FD ratios {ratios:.2?}, sync cost {cost}"))
}

fn ecology() -> Check {
    let err = |e: Error| e.to_string();
    let model = VerificationModel::new(1.0, CostCurve::Affine { intercept: 0.0, slope: 1.0 }).map_err(err)?;
    let rho = verification_threshold(&model).map_err(err)?.ok_or("no threshold found")?;
    ensure((rho - 0.5).abs() < 1e-9, || format!("ρ* = {rho}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for i in 0..10_000 {
        let n = rng.random_range(1..100_000u64);
        let mut sa = SyntheticAgentSpec::new(rng.random_range(0.01..5.0), rng.random_range(0.01..5.0), 0.0, n).map_err(err)?;
        if rng.random_bool(0.5) {
            sa.accrual_rate = Some(rng.random_range(0.0..100.0));
        }
        let (trust, dt) = (rng.random_range(0.0..1.0), rng.random_range(1e-4..10.0));
        let got = trust_accrual(&sa, trust, dt).map_err(err)?;
        ensure((0.0..=trust * n as f64 * dt).contains(&got), || format!("draw {i}: accrual {got} over bound"))?;
    }

    let results = mass_convergence_experiment(&ConvergenceScenario::reference(0.5, 10.0).map_err(err)?).map_err(err)?;
    for (r, p) in results.iter().zip(REFERENCE_PROFILES.iter()) {
        let ok = (0..3).all(|i| if p.rising[i] { r.initial_signs[i] > 0 } else { r.initial_signs[i] < 0 });
        ensure(ok, || format!("{}: signs {:?} vs rising {:?}", r.name, r.initial_signs, p.rising))?;
    }

    let mut checked = 0;
    for ratio in [10u32, 50, 100, 400] {
        for frac in [0.05, 0.3, 0.6, 0.95] {
            let dt_phy = ratio as f64 * 1e-3;
            let rep = flash_crash_scenario(&FlashCrashSpec::new(1e-3, ratio, frac * dt_phy, 5.0)).map_err(err)?;
            ensure(rep.detection_lag >= rep.crash_duration, || {
                format!("ratio {ratio}: lag {} < duration {}", rep.detection_lag, rep.crash_duration)
            })?;
            checked += 1;
        }
    }
    Ok(format!("ρ* = {rho}, trust bound held over 10⁴ draws, {} platforms match, {checked} crash cases", results.len()))
}

fn tree(root: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(root).unwrap().to_path_buf(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn determinism() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut files = 0;
    for name in ["forcing.toml", "thermo.toml", "sweep.toml", "bundle.toml", "flash_crash.toml"] {
        let text = fs::read_to_string(configs().join(name)).map_err(|e| e.to_string())?;
        let mut trees = Vec::new();
        for run in ["a", "b"] {
            let cfg = parse_config(&text).map_err(|e| e.to_string())?;
            let dir = tmp.path().join(name).join(run);
            run_to_dir(&cfg, &dir).map_err(|e| e.to_string())?;
            trees.push(tree(&dir));
        }
        ensure(trees[0] == trees[1], || format!("{name}: output trees differ"))?;
        files += trees[0].len();
    }
    Ok(format!("5 configs, {files} files byte-identical across runs"))
}

fn bundle() -> Check {
    let err = |e: Error| e.to_string();
    let square = |side: f64| -> Vec<DVector<f64>> {
        [[0.0, 0.0], [side, 0.0], [side, side], [0.0, side], [0.0, 0.0]]
            .iter()
            .map(|p| DVector::from_column_slice(p))
            .collect()
    };
    let h = holonomy(&square(2.3), &ConnectionPreset::Zero { k: 2 }, 1000).map_err(err)?;
    ensure(h == DMatrix::identity(4, 4), || "zero-connection holonomy is not the identity".into())?;

    let mut worst = 0.0f64;
    for (c, side) in [(0.7, 1.0), (0.3, 1.5), (-1.2, 0.8)] {
        let h = holonomy(&square(side), &ConnectionPreset::Curvature { k: 2, c }, 1000).map_err(err)?;
        // exp(−aJ) in the first digital/social plane
        let angle = (-h[(2, 0)]).atan2(h[(0, 0)]);
        worst = worst.max((angle - c * side * side).abs());
    }
    ensure(worst < 1e-4, || format!("holonomy angle error {worst:e}"))?;

    let points: Vec<BasePoint> = (0..4)
        .flat_map(|i| (0..4).map(move |j| BasePoint::new(vec![i as f64, j as f64]).unwrap()))
        .collect();
    let global = GlobalSection {
        values: points
            .iter()
            .enumerate()
            .map(|(i, p)| (p.clone(), DVector::from_column_slice(&[i as f64 * 0.5, -(i as f64)])))
            .collect::<BTreeMap<_, _>>(),
    };
    let cover = BaseCover::new(vec![points[..10].to_vec(), points[6..].to_vec(), points.iter().step_by(3).cloned().collect()]);
    let locals = global.restrict(&cover).map_err(err)?;
    let GlueOutcome::Glued(g) = glue(&cover, &locals, 0.0).map_err(err)? else {
        return Err("consistent sections reported as obstructed".into());
    };
    ensure(g == global, || "glued section differs from the original".into())?;
    let again = glue(&cover, &g.restrict(&cover).map_err(err)?, 0.0).map_err(err)?;
    ensure(again == GlueOutcome::Glued(g), || "gluing is not idempotent".into())?;

    let mut broken = locals;
    for v in broken[1].values.values_mut().take(3) {
        v[0] += 0.25;
    }
    let conflicts = match glue(&cover, &broken, 1e-9).map_err(err)? {
        GlueOutcome::Obstructed(r) => r.conflicts.len(),
        GlueOutcome::Glued(_) => return Err("conflicting sections were glued".into()),
    };
    ensure(conflicts >= 3, || format!("only {conflicts} conflicts reported"))?;
    Ok(format!("identity exact, angle error {worst:.1e}, glue idempotent, {conflicts} conflicts detected"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("finsler axioms", finsler_axioms),
        ("geodesic oracle", geodesic_oracle),
        ("mass tensor", mass),
        ("dynamics", dynamics),
        ("thermodynamics", thermo),
        ("temporal shear", temporal),
        ("ecology", ecology),
        ("determinism", determinism),
        ("bundle", bundle),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS {} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {} {name}: {why}", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
