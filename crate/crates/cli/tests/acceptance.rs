//! Exit criteria. Each criterion prints one PASS/FAIL line; the test fails if
//! any criterion fails. Run with `--nocapture` to see the lines.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::{DVector, RowDVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use loewner::analysis::{error_sweep, relative_error, response_table};
use loewner::data::log_grid;
use loewner::partition::{LeftPoint, RightPoint};
use loewner::pencil::{reduce, svd_pencil, OrderPolicy, Shift};
use loewner::pipeline::{assemble, fit, ReductionOptions};
use loewner::{
    build_pencil, generate_modal_system, read_dataset, sample_frequency_response,
    sylvester_residual, DescriptorSystem, FrequencyResponseDataset, LoewnerPencil, ModalSpec,
    PartitionScheme, PencilSVD, ReducedModel, TangentialDataset, TransferFunction, C64,
};

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(start: Instant, limit: Duration) -> Result<(), String> {
    let took = start.elapsed();
    ensure(took < limit, format!("took {took:.2?}, limit {limit:?}"))
}

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_loewner")
}

fn run_cli(args: &[&str]) -> Result<(), String> {
    let out = Command::new(bin())
        .args(args)
        .env_remove("LOEWNER_SEED")
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!(
            "`loewner {}` failed: {}",
            args.join(" "),
            String::from_utf8_lossy(&out.stderr)
        ))
    }
}

fn p(path: &Path) -> &str {
    path.to_str().expect("utf-8 temp path")
}

/// The synthetic ISS-like benchmark: 270 states, 3x3, 400 samples on
/// [0.1, 100] rad/s, first node.
struct IssNode {
    data: FrequencyResponseDataset,
    pencil: LoewnerPencil,
    svd: PencilSVD,
    prepared_in: Duration,
}

fn iss_node() -> IssNode {
    let start = Instant::now();
    let sys = generate_modal_system(&ModalSpec::iss_like(1)).unwrap();
    assert_eq!((sys.states(), sys.inputs(), sys.outputs()), (270, 3, 3));
    let grid = log_grid(0.1, 100.0, 400).unwrap();
    let data = sample_frequency_response(&sys, &grid)
        .unwrap()
        .extract_node(0, 0)
        .unwrap();
    let pencil = assemble(&data, &ReductionOptions::default()).unwrap();
    let svd = svd_pencil(&pencil, Shift::Auto);
    IssNode {
        data,
        pencil,
        svd,
        prepared_in: start.elapsed(),
    }
}

fn sylvester_identity() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut worst: f64 = 0.0;
    for k in 0..50 {
        let mimo = k % 2 == 1;
        let (m, p) = if mimo { (3, 3) } else { (1, 1) };
        let n_samples = rng.random_range(4..=200);
        let sys = generate_modal_system(&ModalSpec {
            modes: rng.random_range(1..=30),
            omega: (0.5, 50.0),
            damping: (0.01, 0.3),
            inputs: m,
            outputs: p,
            seed: rng.random(),
        })
        .unwrap();
        let ds =
            sample_frequency_response(&sys, &log_grid(0.1, 100.0, n_samples).unwrap()).unwrap();
        let real = rng.random_bool(0.5);
        let opts = ReductionOptions {
            scheme: if rng.random_bool(0.5) {
                PartitionScheme::Interleave
            } else {
                PartitionScheme::HalfSplit
            },
            conjugate_close: real,
            real,
            ..Default::default()
        };
        let pencil = assemble(&ds, &opts).map_err(|e| e.to_string())?;
        let (r1, r2) = sylvester_residual(&pencil);
        worst = worst.max(r1).max(r2);
        ensure(
            r1 <= 1e-10 && r2 <= 1e-10,
            format!("dataset {k}: residuals {r1:e}, {r2:e}"),
        )?;
    }
    within(start, Duration::from_secs(10))?;
    Ok(format!(
        "50 datasets, worst residual {worst:.2e}, {:.2?}",
        start.elapsed()
    ))
}

fn single_point_oracle() -> Outcome {
    let one = |x: C64| DVector::from_element(1, x);
    let row = |x: C64| RowDVector::from_element(1, x);
    let c = |x: f64| C64::new(x, 0.0);
    let td = TangentialDataset::new(
        1,
        1,
        vec![RightPoint {
            lambda: c(1.0),
            direction: one(c(1.0)),
            value: one(c(0.5)),
        }],
        vec![LeftPoint {
            mu: c(2.0),
            direction: row(c(1.0)),
            value: row(c(1.0 / 3.0)),
        }],
    )
    .map_err(|e| e.to_string())?;
    let pencil = build_pencil(&td, false).map_err(|e| e.to_string())?;
    let l = pencil.loewner()[(0, 0)];
    let ls = pencil.shifted()[(0, 0)];
    ensure((l - c(-1.0 / 6.0)).norm() <= 1e-15, format!("L = {l}"))?;
    ensure((ls - c(1.0 / 6.0)).norm() <= 1e-15, format!("Ls = {ls}"))?;

    let svd = svd_pencil(&pencil, Shift::Value(c(1.0)));
    let model = reduce(&pencil, &svd, 1).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let s = C64::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
        let want = c(1.0) / (s + 1.0);
        let got = model.eval_transfer(s).map_err(|e| e.to_string())?[(0, 0)];
        worst = worst.max((got - want).norm() / want.norm());
    }
    ensure(worst <= 1e-12, format!("transfer mismatch {worst:e}"))?;
    Ok(format!("L = {l}, Ls = {ls}, max rel err {worst:.2e}"))
}

fn exact_recovery() -> Outcome {
    let start = Instant::now();
    let mut summary = Vec::new();
    for (n, seed) in [(4usize, 11u64), (10, 12), (20, 13)] {
        let sys = generate_modal_system(&ModalSpec {
            modes: n / 2,
            omega: (0.5, 50.0),
            damping: (0.05, 0.2),
            inputs: 1,
            outputs: 1,
            seed,
        })
        .unwrap();
        let train =
            sample_frequency_response(&sys, &log_grid(0.1, 100.0, 2 * n + 10).unwrap()).unwrap();
        let opts = ReductionOptions {
            scheme: PartitionScheme::Interleave,
            conjugate_close: true,
            order: OrderPolicy::Tolerance(1e-10),
            ..Default::default()
        };
        let red = fit(&train, &opts).map_err(|e| e.to_string())?;
        ensure(
            red.selection.order == n,
            format!("n = {n}: selected {}", red.selection.order),
        )?;
        let held_out =
            sample_frequency_response(&sys, &log_grid(0.117, 93.0, 100).unwrap()).unwrap();
        let eps = relative_error(&held_out, &red.model)
            .map_err(|e| e.to_string())?
            .epsilon;
        ensure(eps <= 1e-6, format!("n = {n}: epsilon {eps:e}"))?;
        summary.push(format!("n={n}: eps {eps:.1e}"));
    }
    within(start, Duration::from_secs(30))?;
    Ok(summary.join(", "))
}

fn rank_plateau(iss: &IssNode) -> Outcome {
    let sigma = iss.svd.normalized();
    ensure(sigma.len() == 400, format!("pencil size {}", sigma.len()))?;
    let tail = sigma[270..].iter().fold(0.0f64, |a, &s| a.max(s));
    ensure(tail <= 1e-10, format!("sigma_271/sigma_1 = {tail:e}"))?;
    let rank = sigma.iter().filter(|&&s| s > 1e-10).count();
    Ok(format!(
        "numerical rank {rank} of 400, max tail {tail:.1e}, sigma_100 {:.1e}",
        sigma[99]
    ))
}

fn replication(iss: &IssNode) -> Outcome {
    let start = Instant::now();
    let m10 = reduce(&iss.pencil, &iss.svd, 10).map_err(|e| e.to_string())?;
    let m100 = reduce(&iss.pencil, &iss.svd, 100).map_err(|e| e.to_string())?;
    let e10 = relative_error(&iss.data, &m10)
        .map_err(|e| e.to_string())?
        .epsilon;
    let e100 = relative_error(&iss.data, &m100)
        .map_err(|e| e.to_string())?
        .epsilon;
    ensure(
        e100 < e10,
        format!("eps(100) = {e100:e} not below eps(10) = {e10:e}"),
    )?;
    let rows = response_table(&iss.data, &m100).map_err(|e| e.to_string())?;
    let good = rows
        .iter()
        .filter(|r| (r.mag_g - r.mag_h).abs() <= 1e-3 * r.mag_h)
        .count();
    let frac = good as f64 / rows.len() as f64;
    ensure(
        frac >= 0.95,
        format!("only {:.1}% of frequencies within 1e-3", 100.0 * frac),
    )?;
    let total = iss.prepared_in + start.elapsed();
    ensure(
        total < Duration::from_secs(60),
        format!("took {total:.2?} including sampling and SVD"),
    )?;
    Ok(format!(
        "eps(10) {e10:.2e}, eps(100) {e100:.2e}, {:.1}% within 1e-3",
        100.0 * frac
    ))
}

fn sweep_completes(iss: &IssNode) -> Outcome {
    let orders: Vec<usize> = (10..=200).step_by(10).collect();
    let entries = error_sweep(&iss.pencil, &iss.svd, &iss.data, &orders);
    ensure(entries.len() == 20, format!("{} entries", entries.len()))?;
    ensure(
        entries.iter().map(|e| e.r).eq(orders.iter().copied()),
        "entries out of order",
    )?;
    let ok: Vec<(usize, f64)> = entries
        .iter()
        .filter_map(|e| e.outcome.as_ref().ok().map(|&x| (e.r, x)))
        .collect();
    ensure(!ok.is_empty(), "every order failed")?;
    let (best_r, best) = ok
        .iter()
        .copied()
        .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
    ensure(
        best_r > 10,
        format!("minimum error at the smallest order {best_r}"),
    )?;
    Ok(format!(
        "{} ok, {} skipped, min eps {best:.1e} at r = {best_r}",
        ok.len(),
        entries.len() - ok.len()
    ))
}

struct Workspace {
    _dir: tempfile::TempDir,
    root: PathBuf,
}

impl Workspace {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().to_path_buf();
        Self { _dir: dir, root }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }
}

fn realness() -> Outcome {
    let ws = Workspace::new();
    let (sys, siso, mimo) = (
        ws.path("sys.json"),
        ws.path("node.csv"),
        ws.path("mimo.json"),
    );
    run_cli(&[
        "generate",
        "--modes",
        "10",
        "--inputs",
        "2",
        "--outputs",
        "2",
        "--seed",
        "3",
        "-o",
        p(&sys),
    ])?;
    run_cli(&[
        "sample",
        "--system",
        p(&sys),
        "--freqs",
        "60",
        "--node",
        "1,0",
        "-o",
        p(&siso),
    ])?;
    run_cli(&[
        "sample",
        "--system",
        p(&sys),
        "--freqs",
        "60",
        "-o",
        p(&mimo),
    ])?;
    let mut checked = 0;
    for (data, r) in [(&siso, "12"), (&siso, "20"), (&mimo, "20")] {
        let model_path = ws.path("model.json");
        run_cli(&[
            "reduce",
            "--data",
            p(data),
            "--r",
            r,
            "--real",
            "true",
            "-o",
            p(&model_path),
        ])?;
        let text = std::fs::read_to_string(&model_path).map_err(|e| e.to_string())?;
        ensure(!text.contains("_im"), "model file carries imaginary parts")?;
        let model = ReducedModel::from_json(&text).map_err(|e| e.to_string())?;
        ensure(model.is_real(), "model not real")?;
        DescriptorSystem::from_json(&text).map_err(|e| e.to_string())?;
        let ds = read_dataset(data).map_err(|e| e.to_string())?;
        for smp in ds.samples() {
            let g = model.eval_transfer(smp.s).map_err(|e| e.to_string())?;
            let g_neg = model
                .eval_transfer(smp.s.conj())
                .map_err(|e| e.to_string())?;
            let err = (&g_neg - g.map(|z| z.conj())).norm();
            ensure(
                err <= 1e-12 * g.norm(),
                format!("conjugate symmetry off by {err:e} at {}", smp.s),
            )?;
            checked += 1;
        }
    }
    Ok(format!("3 model files real, {checked} conjugate checks"))
}

fn gauge_invariance() -> Outcome {
    let ws = Workspace::new();
    let (sys, data) = (ws.path("sys.json"), ws.path("node.csv"));
    run_cli(&[
        "generate",
        "--modes",
        "10",
        "--inputs",
        "1",
        "--outputs",
        "1",
        "--seed",
        "8",
        "-o",
        p(&sys),
    ])?;
    run_cli(&[
        "sample",
        "--system",
        p(&sys),
        "--freqs",
        "50",
        "-o",
        p(&data),
    ])?;
    let ds = read_dataset(&data).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for (real, shifts) in [("true", ["0.35", "20"]), ("false", ["0.2i", "7.5i"])] {
        let mut models = Vec::new();
        for (k, shift) in shifts.iter().enumerate() {
            let out = ws.path(&format!("m{k}.json"));
            run_cli(&[
                "reduce",
                "--data",
                p(&data),
                "--tol",
                "1e-10",
                "--real",
                real,
                "--shift",
                shift,
                "-o",
                p(&out),
            ])?;
            models.push(ReducedModel::read(&out).map_err(|e| e.to_string())?);
        }
        ensure(
            models[0].order() == 20 && models[1].order() == 20,
            "order is not the numerical rank",
        )?;
        for smp in ds.samples() {
            let a = models[0].eval_transfer(smp.s).map_err(|e| e.to_string())?;
            let b = models[1].eval_transfer(smp.s).map_err(|e| e.to_string())?;
            worst = worst.max((&a - &b).norm() / b.norm());
        }
    }
    ensure(
        worst <= 1e-10,
        format!("transfer functions differ by {worst:e}"),
    )?;
    Ok(format!("max relative difference {worst:.1e}"))
}

fn determinism() -> Outcome {
    let runs: Vec<Vec<(String, Vec<u8>)>> = (0..2)
        .map(|_| {
            let ws = Workspace::new();
            let f = |n: &str| ws.path(n);
            let steps: Vec<Vec<String>> = vec![
                vec![
                    "generate",
                    "--modes",
                    "135",
                    "--inputs",
                    "3",
                    "--outputs",
                    "3",
                    "--seed",
                    "1",
                    "-o",
                ]
                .into_iter()
                .map(String::from)
                .chain([p(&f("sys.json")).to_string()])
                .collect(),
                vec![
                    "sample",
                    "--system",
                    p(&f("sys.json")),
                    "--freqs",
                    "400",
                    "--omega",
                    "0.1:100",
                    "--node",
                    "0,0",
                    "-o",
                    p(&f("node.csv")),
                ]
                .into_iter()
                .map(String::from)
                .collect(),
                vec![
                    "sample",
                    "--system",
                    p(&f("sys.json")),
                    "--freqs",
                    "50",
                    "-o",
                    p(&f("mimo.json")),
                ]
                .into_iter()
                .map(String::from)
                .collect(),
                vec![
                    "reduce",
                    "--data",
                    p(&f("node.csv")),
                    "--r",
                    "100",
                    "-o",
                    p(&f("model.json")),
                    "--sv",
                    p(&f("sv.csv")),
                ]
                .into_iter()
                .map(String::from)
                .collect(),
                vec![
                    "sweep",
                    "--data",
                    p(&f("node.csv")),
                    "--orders",
                    "10:200:10",
                    "-o",
                    p(&f("sweep.csv")),
                ]
                .into_iter()
                .map(String::from)
                .collect(),
                vec![
                    "report",
                    "--data",
                    p(&f("node.csv")),
                    "--model",
                    p(&f("model.json")),
                    "-o",
                    p(&f("response.csv")),
                    "--json",
                    p(&f("report.json")),
                ]
                .into_iter()
                .map(String::from)
                .collect(),
            ];
            for step in &steps {
                let args: Vec<&str> = step.iter().map(String::as_str).collect();
                run_cli(&args)?;
            }
            let names = [
                "sys.json",
                "node.csv",
                "mimo.json",
                "model.json",
                "sv.csv",
                "sweep.csv",
                "response.csv",
                "report.json",
            ];
            names
                .iter()
                .map(|n| {
                    Ok((
                        n.to_string(),
                        std::fs::read(f(n)).map_err(|e| e.to_string())?,
                    ))
                })
                .collect::<Result<Vec<_>, String>>()
        })
        .collect::<Result<_, String>>()?;
    for ((name, a), (_, b)) in runs[0].iter().zip(&runs[1]) {
        ensure(a == b, format!("{name} differs between runs"))?;
    }
    Ok(format!(
        "{} output files byte-identical across runs",
        runs[0].len()
    ))
}

#[test]
fn acceptance_criteria() {
    let iss = iss_node();
    eprintln!("ISS-like node prepared in {:.2?}", iss.prepared_in);

    let criteria: Vec<Criterion> = vec![
        ("sylvester-identity", Box::new(sylvester_identity)),
        ("single-point-oracle", Box::new(single_point_oracle)),
        ("exact-recovery", Box::new(exact_recovery)),
        ("rank-plateau", Box::new(|| rank_plateau(&iss))),
        ("replication-r100", Box::new(|| replication(&iss))),
        ("sweep-nonmonotone", Box::new(|| sweep_completes(&iss))),
        ("realness", Box::new(realness)),
        ("gauge-invariance", Box::new(gauge_invariance)),
        ("determinism", Box::new(determinism)),
    ];

    let mut failed = Vec::new();
    for (name, check) in &criteria {
        let t = Instant::now();
        match check() {
            Ok(detail) => println!("PASS {name} ({:.2?}): {detail}", t.elapsed()),
            Err(why) => {
                println!("FAIL {name} ({:.2?}): {why}", t.elapsed());
                failed.push(*name);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
