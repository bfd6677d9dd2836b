//! Acceptance suite: one line per criterion, non-zero exit if any fails.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use seal_core::align::{
    align_labels, assignment_discontinuity, precision_matrix, unary_cost_biased,
    unary_cost_isotropic, AlignConfig, AlignMode,
};
use seal_core::bench::{
    average_precision, dilate_gt, evaluate_dataset, label_agreement, mf_ods, BenchConfig,
    BenchMode, LabelAgreement, TOLERANCE_CITYSCAPES, TOLERANCE_STANDARD, TOLERANCE_STRICT,
};
use seal_core::grid::extract_class;
use seal_core::io::synth::{synth_dataset, SynthImage, SynthSpec};
use seal_core::loss::loss_gradient;
use seal_core::oracle::{assign_step_suite, lemma_suite, theorem1_suite};
use seal_core::train::{train, SealConfig, ToyPredictor, TrainSample, TrainSchedule};
use seal_core::{MultiLabelMap, PixelCoord, ProbMap};

const SEED: u64 = 20180907;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn theorem1() -> Outcome {
    let start = Instant::now();
    let reports = theorem1_suite(SEED, 500);
    let elapsed = start.elapsed();
    let total: usize = reports.iter().map(|r| r.instances).sum();
    let passed: usize = reports.iter().map(|r| r.passed).sum();
    outcome(
        passed == total && total >= 500 && elapsed < Duration::from_secs(60),
        format!(
            "{passed}/{total} instances (isotropic + biased, lambda 0) in {:.2}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn assign_step() -> Outcome {
    let r = assign_step_suite(SEED, 250);
    outcome(
        r.ok() && r.instances >= 200,
        format!("{}/{} instances, lambda > 0", r.passed, r.instances),
    )
}

fn lemmas() -> Outcome {
    let reports = lemma_suite(SEED, 300);
    let detail = reports
        .iter()
        .map(|r| format!("{} {}/{}", r.name, r.passed, r.instances))
        .collect::<Vec<_>>()
        .join(", ");
    outcome(reports.iter().all(|r| r.ok()), detail)
}

fn isotropic_reduction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = 0.0f64;
    for _ in 0..100_000 {
        let q = PixelCoord::new(rng.gen_range(10..200), rng.gen_range(10..200));
        let p = PixelCoord::new(
            q.row + rng.gen_range(0..21) - 10,
            q.col + rng.gen_range(0..21) - 10,
        );
        let prob = rng.gen_range(1e-4..1.0 - 1e-4);
        let sigma = rng.gen_range(0.5..8.0);
        let theta = rng.gen_range(0.0..std::f64::consts::PI);
        let iso = unary_cost_isotropic(p, q, prob, sigma).unwrap();
        let bg = unary_cost_biased(p, q, prob, &precision_matrix(theta, sigma, sigma)).unwrap();
        worst = worst.max((iso - bg).abs());
    }
    outcome(
        worst < 1e-9,
        format!("max |delta| {worst:.3e} over 100000 triples"),
    )
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn gradient_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (h, w, k) = (8, 8, 3);
    let n = h * w;
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let z: Vec<f64> = (0..n * k).map(|_| rng.gen_range(-4.0..4.0)).collect();
        let mut labels = MultiLabelMap::new(h, w, k).unwrap();
        for i in 0..n {
            for c in 0..k {
                if rng.gen_bool(0.3) {
                    labels.set(PixelCoord::new(i / w, i % w), c, true);
                }
            }
        }
        let prob =
            ProbMap::from_values(h, w, k, z.iter().map(|&v| sigmoid(v) as f32).collect()).unwrap();
        let g = loss_gradient(&prob, &labels, None).unwrap();
        // Loss of the whole grid as a function of one logit; the other
        // terms cancel in the central difference.
        let eps = 1e-5;
        for (i, &zi) in z.iter().enumerate() {
            let y = if labels.fields()[i % n] >> (i / n) & 1 == 1 {
                1.0
            } else {
                0.0
            };
            let l = |v: f64| -(y * sigmoid(v).ln() + (1.0 - y) * (1.0 - sigmoid(v)).ln());
            let fd = (l(zi + eps) - l(zi - eps)) / (2.0 * eps);
            worst = worst.max((g.values()[i] - fd).abs() / fd.abs());
        }
    }
    outcome(
        worst < 1e-4,
        format!("max relative error {worst:.3e} over 100 instances of 8x8x3"),
    )
}

/// Two classes: a horizontal line and a vertical line, each shifted
/// perpendicular to itself by `d` in the prediction.
fn line_pair(h: usize, w: usize, d: usize) -> (ProbMap, MultiLabelMap) {
    let mut gt = MultiLabelMap::new(h, w, 2).unwrap();
    let mut v = vec![0.0f32; 2 * h * w];
    let (r0, c0) = (h / 2, w / 2);
    for c in c0 - 60..c0 + 60 {
        gt.set(PixelCoord::new(r0, c), 0, true);
        v[(r0 + d) * w + c] = 1.0;
    }
    for r in r0 - 60..r0 + 60 {
        gt.set(PixelCoord::new(r, c0), 1, true);
        v[h * w + r * w + c0 + d] = 1.0;
    }
    (ProbMap::from_values(h, w, 2, v).unwrap(), gt)
}

fn benchmark_identities(data: &[SynthImage], k: usize) -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;
    for mode in [BenchMode::Thin, BenchMode::Raw] {
        let cfg = BenchConfig {
            mode,
            ..BenchConfig::default()
        };
        let items: Vec<_> = data
            .iter()
            .map(|d| {
                let (h, w) = d.truth.dims();
                let mut v = vec![0.0f32; h * w * k];
                for c in 0..k {
                    let plane = extract_class(&d.truth, c).unwrap();
                    let plane = match mode {
                        BenchMode::Thin => plane,
                        BenchMode::Raw => dilate_gt(&plane, cfg.raw_gt_dilation),
                    };
                    for (i, &b) in plane.bits().iter().enumerate() {
                        v[c * h * w + i] = if b { 1.0 } else { 0.0 };
                    }
                }
                (ProbMap::from_values(h, w, k, v).unwrap(), d.truth.clone())
            })
            .collect();
        let acc = evaluate_dataset(&items, k, &cfg).unwrap();
        let mf = mf_ods(&acc).mean;
        pass &= mf == 1.0;
        notes.push(format!("{mode:?} GT-vs-GT MF {mf}"));
        if mode == BenchMode::Raw {
            let aps: Vec<f64> = (0..k)
                .filter(|&c| acc.has_ground_truth(c))
                .map(|c| average_precision(&acc.curve(c)).unwrap())
                .collect();
            pass &= aps.iter().all(|&a| a == 1.0);
            notes.push(format!("AP {:?}", aps));
        }
    }
    for (tol, h, w) in [
        (TOLERANCE_STANDARD, 200, 200),
        (TOLERANCE_STRICT, 400, 400),
        (TOLERANCE_CITYSCAPES, 1024, 2048),
    ] {
        let cfg = BenchConfig {
            tolerance: tol,
            thresholds: vec![0.5],
            ..BenchConfig::default()
        };
        let max = cfg.max_dist(h, w);
        let inside = 0..=max.floor() as usize;
        let beyond = (max + 1.0).floor() as usize + 1;
        let mut ok = true;
        for d in inside.clone().chain([beyond, beyond + 1]) {
            let (prob, gt) = line_pair(h, w, d);
            let mf = mf_ods(&evaluate_dataset(&[(prob, gt)], 2, &cfg).unwrap()).mean;
            let want = if (d as f64) <= max { 1.0 } else { 0.0 };
            ok &= mf == want;
        }
        pass &= ok;
        notes.push(format!(
            "tol {tol} on {h}x{w} (max_dist {max:.3}): shifts {:?} -> 1, {{{beyond},{}}} -> 0 {}",
            inside,
            beyond + 1,
            if ok { "ok" } else { "WRONG" }
        ));
    }
    outcome(pass, notes.join("; "))
}

fn agreement(labels: &[MultiLabelMap], data: &[SynthImage], tol: f64) -> LabelAgreement {
    let mut acc = LabelAgreement::default();
    for (l, d) in labels.iter().zip(data) {
        acc.add(&label_agreement(l, &d.truth, tol).unwrap());
    }
    acc
}

fn alignment_run(data: &[SynthImage], cfg: &AlignConfig, mode: AlignMode) -> (f64, f64) {
    let mut aligned = Vec::new();
    let mut disc = 0.0;
    for d in data {
        let out = align_labels(&d.noisy, &d.prob, cfg, mode).unwrap();
        for k in 0..d.noisy.num_classes() {
            let y = extract_class(&d.noisy, k).unwrap();
            disc += assignment_discontinuity(&y, &out.mappings[k], cfg.geodesic_radius).unwrap();
        }
        aligned.push(out.labels);
    }
    (agreement(&aligned, data, 1.0).f_measure(), disc)
}

fn alignment_recovery(data: &[SynthImage]) -> Outcome {
    let noisy: Vec<_> = data.iter().map(|d| d.noisy.clone()).collect();
    let f_noisy = agreement(&noisy, data, 1.0).f_measure();
    let base = AlignConfig::default();
    let (f_iso, d_iso) = alignment_run(data, &base, AlignMode::Isotropic);
    let strong = AlignConfig {
        lambda: 2.0,
        ..base.clone()
    };
    let (f_bg, d_bg) = alignment_run(data, &strong, AlignMode::BiasedMrf);
    let (_, d_default) = alignment_run(data, &base, AlignMode::BiasedMrf);
    let gain = 100.0 * (f_iso.min(f_bg) - f_noisy);
    outcome(
        gain >= 20.0 && d_bg < d_iso,
        format!(
            "F@1px noisy {:.1}, isotropic {:.1}, bg-mrf {:.1}; discontinuity isotropic {d_iso:.0}, bg-mrf (lambda 2) {d_bg:.0} [lambda 0.02: {d_default:.0}]",
            100.0 * f_noisy,
            100.0 * f_iso,
            100.0 * f_bg
        ),
    )
}

fn toy_training(data: &[SynthImage]) -> Outcome {
    let start = Instant::now();
    let k = data[0].noisy.num_classes();
    let mut samples: Vec<_> = data
        .iter()
        .map(|d| TrainSample::new(d.image.clone(), d.noisy.clone()))
        .collect();
    let dist = |s: &[TrainSample<_>]| {
        let l: Vec<_> = s.iter().map(|s| s.latent.clone()).collect();
        agreement(&l, data, 6.0).mean_distance().unwrap()
    };
    let before = dist(&samples);
    let mut predictor = ToyPredictor::new(k, SEED);
    let schedule = TrainSchedule::default();
    let losses = train(
        &mut predictor,
        &mut samples,
        &SealConfig::default(),
        &schedule,
        |_, _| {},
    )
    .unwrap();
    let after = dist(&samples);
    let elapsed = start.elapsed();
    outcome(
        after < before && losses.len() == 200 && elapsed < Duration::from_secs(600),
        format!(
            "{} steps: latent-to-truth distance {before:.4} -> {after:.4}, loss {:.4} -> {:.4}, {:.1}s",
            losses.len(),
            losses[0],
            losses[losses.len() - 1],
            elapsed.as_secs_f64()
        ),
    )
}

fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(
                    p.strip_prefix(dir).unwrap().to_path_buf(),
                    std::fs::read(&p).unwrap(),
                );
            }
        }
    }
    out
}

fn cli_determinism() -> Outcome {
    let exe = env!("CARGO_BIN_EXE_seal");
    let work = tempfile::tempdir().unwrap();
    let root = work.path();
    let data = root.join("data");
    let manifest = data.join("manifest.json");
    let m = manifest.to_str().unwrap();
    let commands: Vec<Vec<&str>> = vec![
        vec!["synth", "--out", "OUT", "--images", "6", "--seed", "5"],
        vec!["align", "--manifest", m, "--out", "OUT"],
        vec!["align", "--manifest", m, "--out", "OUT", "--mode", "iso"],
        vec!["refine", "--manifest", m, "--out", "OUT"],
        vec![
            "train",
            "--manifest",
            m,
            "--out",
            "OUT",
            "--steps",
            "30",
            "--warmup",
            "10",
            "--seed",
            "3",
        ],
        vec!["eval", "--manifest", m, "--out", "OUT"],
        vec![
            "eval",
            "--manifest",
            m,
            "--out",
            "OUT",
            "--mode",
            "raw",
            "--gt",
            "truth",
        ],
        vec!["viz", "--manifest", m, "--out", "OUT", "--field", "labels"],
        vec![
            "oracle",
            "--count",
            "40",
            "--assign-count",
            "20",
            "--lemma-count",
            "20",
            "--out",
            "OUT/report.json",
        ],
    ];
    let run = |args: &[&str], out: &Path| {
        let args: Vec<String> = args
            .iter()
            .map(|a| a.replace("OUT", out.to_str().unwrap()))
            .collect();
        Command::new(exe).args(&args).output().unwrap()
    };
    // The dataset everything else reads.
    let first = run(&commands[0], &data);
    if !first.status.success() {
        return outcome(
            false,
            format!("synth failed: {}", String::from_utf8_lossy(&first.stderr)),
        );
    }
    let mut failures = Vec::new();
    for (i, args) in commands.iter().enumerate() {
        let out = root.join(format!("run{i}"));
        let a = run(args, &out);
        let snap_a = snapshot(&out);
        std::fs::rename(&out, root.join(format!("run{i}_first"))).unwrap();
        let b = run(args, &out);
        let snap_b = snapshot(&out);
        if !a.status.success()
            || a.status.code() != b.status.code()
            || a.stdout != b.stdout
            || snap_a != snap_b
        {
            failures.push(args[0]);
        }
    }
    let names: Vec<&str> = commands.iter().map(|c| c[0]).collect();
    outcome(
        failures.is_empty(),
        if failures.is_empty() {
            format!(
                "{} invocations byte-identical across two runs ({})",
                commands.len(),
                names.join(", ")
            )
        } else {
            format!("differences in {failures:?}")
        },
    )
}

fn main() {
    let spec = SynthSpec {
        num_images: 50,
        jitter: 3.0,
        seed: SEED,
        ..SynthSpec::default()
    };
    let data = synth_dataset(&spec).expect("synthetic set");

    type Check<'a> = Box<dyn Fn() -> Outcome + 'a>;
    let criteria: Vec<(&str, Check)> = vec![
        ("1 exact alignment vs brute force", Box::new(theorem1)),
        ("2 assign-step exactness", Box::new(assign_step)),
        ("3 surjectivity and flip-cost identity", Box::new(lemmas)),
        ("4 isotropic reduction", Box::new(isotropic_reduction)),
        ("5 gradient check", Box::new(gradient_check)),
        (
            "6 benchmark identities",
            Box::new(|| benchmark_identities(&data, spec.num_classes)),
        ),
        (
            "7 alignment recovery",
            Box::new(|| alignment_recovery(&data)),
        ),
        (
            "8 toy end-to-end training",
            Box::new(|| toy_training(&data)),
        ),
        ("9 CLI determinism", Box::new(cli_determinism)),
    ];
    let mut failed = 0;
    for (name, check) in &criteria {
        let o = check();
        println!(
            "[{}] {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        if !o.pass {
            failed += 1;
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
