//! Acceptance checks, one line per criterion.
//!
//! Runs without the libtest harness so the report is always printed. The
//! process fails if a criterion outside `KNOWN_RED` fails, or if a known-red
//! criterion starts passing (so the list and the README stay honest).

use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use ndarray::Array2;
use voldiff::datagen::{default_suite, DisparityModel, SceneSpec, SuiteConfig};
use voldiff::io::{decode_pfm, encode_pfm};
use voldiff::metrics::{bad_p, d1, epe};
use voldiff::pipeline::{decreasing_fraction, evaluate_scene, evaluate_suite, mean_entropy_maps, SceneRun, SuiteSummary};
use voldiff::sampler::{ddim_step, ddpm_mean};
use voldiff::volume::{discretize_two_hot, soft_argmin};
use voldiff::{ClassicalMatcher, DisparityMap, MatcherConfig, NoiseSchedule, NoiseSource, RenewalPolicy, SamplerConfig};

/// Criteria this classical, untrained analog does not meet; see README.
const KNOWN_RED: &[usize] = &[5, 7];

/// Slack on the EPE orderings.
const SLACK: f64 = 0.02;

struct Outcome {
    id: usize,
    name: &'static str,
    pass: bool,
    detail: String,
}

fn c1_discretization() -> Outcome {
    let n = 10_000;
    let u = NoiseSource::new(11).uniform_field(0, 1, n);
    let d = Array2::from_shape_vec((1, n), u.iter().map(|v| v * 191.0).collect()).unwrap();
    let map = DisparityMap::dense(d.clone()).unwrap();
    let back = soft_argmin(&discretize_two_hot(&map, 192).unwrap()).unwrap();
    let worst = d.iter().zip(back.values().iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Outcome {
        id: 1,
        name: "two-hot round trip",
        pass: worst < 1e-6,
        detail: format!("max |err| {worst:.2e} over {n} draws (< 1e-6)"),
    }
}

fn c2_algebra() -> Outcome {
    let s = NoiseSchedule::cosine(1000).unwrap();
    let src = NoiseSource::new(12);
    let n = 1000;
    let x = src.gaussian_field(0, 1, n);
    let e = src.gaussian_field(1, 1, n);
    let ts = src.uniform_field(2, 1, n);
    let (mut worst_eps, mut worst_x) = (0.0f64, 0.0f64);
    for i in 0..n {
        let t = 1 + (ts[i] * 1000.0) as usize % 1000;
        let xt = s.q_sample(&[x[i]], t, &[e[i]]).unwrap();
        worst_eps = worst_eps.max((s.recover_noise(&xt, &[x[i]], t).unwrap()[0] - e[i]).abs());
        worst_x = worst_x.max((s.predict_x0(&xt, &[e[i]], t).unwrap()[0] - x[i]).abs());
    }
    Outcome {
        id: 2,
        name: "diffusion algebra identities",
        pass: worst_eps < 1e-5 && worst_x < 1e-5,
        detail: format!("noise {worst_eps:.2e}, clean {worst_x:.2e} over {n} draws (< 1e-5)"),
    }
}

fn c3_sigma() -> Outcome {
    let s = NoiseSchedule::cosine(1000).unwrap();
    let src = NoiseSource::new(13);
    let n = 1000;
    let a = src.gaussian_field(0, 1, n);
    let b = src.uniform_field(1, 1, n);
    let z = src.gaussian_field(2, 1, 2 * n);
    let ts = src.uniform_field(3, 1, n);
    let mut deterministic = true;
    let mut worst = 0.0f64;
    for i in 0..n {
        let t = 2 + (ts[i] * 998.0) as usize;
        let (xt, x0) = (a[i], 2.0 * b[i] - 1.0);
        let eps = s.recover_noise(&[xt], &[x0], t).unwrap();
        let p = ddim_step(&s, &[x0], &eps, t, t / 2, 0.0, &[z[2 * i]]).unwrap();
        let q = ddim_step(&s, &[x0], &eps, t, t / 2, 0.0, &[z[2 * i + 1]]).unwrap();
        deterministic &= p[0].to_bits() == q[0].to_bits();
        let m = ddim_step(&s, &[x0], &eps, t, t - 1, 1.0, &[0.0]).unwrap();
        worst = worst.max((m[0] - ddpm_mean(&s, &[xt], &[x0], t).unwrap()[0]).abs());
    }
    Outcome {
        id: 3,
        name: "sigma formula",
        pass: deterministic && worst < 1e-9,
        detail: format!("eta=0 deterministic: {deterministic}; eta=1 vs posterior mean {worst:.2e} (< 1e-9)"),
    }
}

fn c4_schedule() -> Outcome {
    let s = NoiseSchedule::cosine(1000).unwrap();
    let ab = s.alpha_bars();
    let first = ab[0];
    let decreasing = ab.windows(2).all(|p| p[1] < p[0]);
    let last = ab[1000];
    Outcome {
        id: 4,
        name: "cosine schedule sanity",
        pass: first == 1.0 && decreasing && last < 1e-3,
        detail: format!("alpha_bar(0) = {first}, strictly decreasing: {decreasing}, alpha_bar(1000) = {last:.2e}"),
    }
}

struct SuiteRuns {
    five: Vec<SceneRun>,
    one: SuiteSummary,
    no_renewal: SuiteSummary,
}

fn suite_matcher() -> ClassicalMatcher {
    let suite = SuiteConfig::default();
    ClassicalMatcher::new(MatcherConfig { max_disparity: suite.max_disparity, ..MatcherConfig::default() }).unwrap()
}

fn run_suite() -> SuiteRuns {
    let specs = default_suite(&SuiteConfig::default()).unwrap();
    let m = suite_matcher();
    let summary = |cfg: &SamplerConfig| {
        let reports: Vec<_> = evaluate_suite(&specs, &m, cfg).unwrap().into_iter().map(|r| r.report).collect();
        SuiteSummary::from_reports(&reports).unwrap()
    };
    SuiteRuns {
        five: evaluate_suite(&specs, &m, &SamplerConfig::default()).unwrap(),
        one: summary(&SamplerConfig::with_steps(1)),
        no_renewal: summary(&SamplerConfig { renewal: RenewalPolicy::disabled(), ..SamplerConfig::default() }),
    }
}

fn five_summary(runs: &SuiteRuns) -> SuiteSummary {
    let reports: Vec<_> = runs.five.iter().map(|r| r.report.clone()).collect();
    SuiteSummary::from_reports(&reports).unwrap()
}

fn c5_entropy(runs: &SuiteRuns) -> Outcome {
    // Every pixel is probed; its entropy is averaged over the scenes.
    let maps = mean_entropy_maps(&runs.five).unwrap();
    let frac = decreasing_fraction(&maps, None);
    let trace: Vec<String> = maps.iter().map(|m| format!("{:.3}", m.mean().unwrap())).collect();
    Outcome {
        id: 5,
        name: "entropy decreases across steps",
        pass: frac >= 0.9,
        detail: format!("{:.1}% of pixels strictly decreasing (>= 90%); mean trace {}", 100.0 * frac, trace.join(" ")),
    }
}

fn c6_renewal(runs: &SuiteRuns) -> Outcome {
    let five = five_summary(runs);
    let c = &five.outlier_counts;
    let monotone = c.windows(2).skip(1).all(|p| p[1] <= p[0]);
    let (on, off) = (five.diffusion.epe, runs.no_renewal.diffusion.epe);
    Outcome {
        id: 6,
        name: "renewal trend",
        pass: monotone && on <= off + SLACK,
        detail: format!("counts {c:?} non-increasing from step 2: {monotone}; EPE on {on:.4} vs off {off:.4}"),
    }
}

fn c7_improvement(runs: &SuiteRuns) -> Outcome {
    let five = five_summary(runs);
    let (e5, e1, eb) = (five.diffusion.epe, runs.one.diffusion.epe, five.baseline.epe);
    let rel = five.mean_relative_improvement;
    let (a, b, c) = (e5 <= e1 + SLACK, e1 <= eb + SLACK, rel >= 0.02);
    Outcome {
        id: 7,
        name: "end-to-end improvement",
        pass: a && b && c,
        detail: format!(
            "EPE 5-step {e5:.4} <= 1-step {e1:.4}: {a}; 1-step <= baseline {eb:.4}: {b}; relative improvement {:.2}% (>= 2%): {c}",
            100.0 * rel
        ),
    }
}

fn c8_gt_filter(runs: &SuiteRuns) -> Outcome {
    let bad: Vec<usize> = runs
        .five
        .iter()
        .filter(|r| r.report.gt_filter.epe > r.report.baseline.epe)
        .map(|r| r.report.index)
        .collect();
    let margin = runs
        .five
        .iter()
        .map(|r| r.report.gt_filter.epe - r.report.baseline.epe)
        .fold(f64::MIN, f64::max);
    Outcome {
        id: 8,
        name: "ground-truth filter sanity",
        pass: bad.is_empty(),
        detail: format!("scenes worse than unfiltered: {bad:?}; worst gt-minus-base EPE {margin:+.4}"),
    }
}

fn c9_oracle() -> Outcome {
    let m = suite_matcher();
    let margin = m.config().census_radius + m.config().aggregation_radius + 1;
    let mut worst = 0.0f64;
    for (k, &d) in [0.0, 2.5, 5.0, 9.75, 14.0, 21.3, 28.0].iter().enumerate() {
        let spec = SceneSpec {
            width: 64,
            height: 48,
            max_disparity: 32,
            model: DisparityModel::Constant { disparity: d },
            texture_density: 1.0,
            noise_sigma: 0.0,
            seed: 100 + k as u64,
        };
        let run = evaluate_scene(k, &spec, &m, &SamplerConfig::default()).unwrap();
        let gt = &run.ground_truth;
        let (h, w) = gt.dim();
        let interior = Array2::from_shape_fn((h, w), |(y, x)| {
            y >= margin && y + margin < h && x + margin < w && (x as f64 - d) >= margin as f64
        });
        worst = worst.max(epe(&run.run.baseline, gt, &interior).unwrap());
    }
    Outcome {
        id: 9,
        name: "oracle matcher on clean constant scenes",
        pass: worst < 0.5,
        detail: format!("worst interior baseline EPE {worst:.4} (< 0.5)"),
    }
}

fn c10_determinism() -> Outcome {
    let demo = || {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = voldiff_cli::cli_run_with(["voldiff", "demo", "--seed", "7"], &mut out, &mut err);
        (code, out)
    };
    let (ca, a) = demo();
    let (cb, b) = demo();
    let same = ca == 0 && cb == 0 && a == b && !a.is_empty();
    let src = NoiseSource::new(14);
    let mut exact = 0;
    for k in 0..1000u64 {
        let (h, w) = (1 + (k % 9) as usize, 1 + (k % 13) as usize);
        let v = src.gaussian_field(k, 1, h * w);
        let scale = 10f64.powi((k % 7) as i32 - 3);
        let g = Array2::from_shape_vec((h, w), v.iter().map(|x| (x * scale) as f32).collect()).unwrap();
        let back = decode_pfm(&encode_pfm(&g), Path::new("grid.pfm")).unwrap();
        exact += g.iter().zip(back.iter()).all(|(p, q)| p.to_bits() == q.to_bits()) as usize;
    }
    Outcome {
        id: 10,
        name: "determinism",
        pass: same && exact == 1000,
        detail: format!("demo --seed 7 twice byte-identical: {same}; PFM bit-exact grids {exact}/1000"),
    }
}

fn c11_metrics() -> Outcome {
    let map = |v: Vec<f64>, w: usize| DisparityMap::dense(Array2::from_shape_vec((v.len() / w, w), v).unwrap()).unwrap();
    let all = |h: usize, w: usize| Array2::from_elem((h, w), true);
    let gt = map(vec![1.0, 2.0, 3.0, 4.0], 2);
    let mut ok = epe(&gt, &gt, &all(2, 2)).unwrap() == 0.0;
    ok &= epe(&map(vec![1.0, 2.0, 3.0, 6.0], 2), &gt, &all(2, 2)).unwrap() == 0.5;
    let five = map(vec![5.0; 4], 2);
    ok &= bad_p(&five, &five, 1.0, &all(2, 2)).unwrap() == 0.0;
    ok &= bad_p(&map(vec![7.0, 5.0, 3.0, 5.0], 2), &five, 1.0, &all(2, 2)).unwrap() == 50.0;
    let gt = map(vec![100.0, 10.0], 2);
    let pred = map(vec![104.0, 14.0], 2);
    let only = |x: usize| Array2::from_shape_fn((1, 2), |(_, c)| c == x);
    ok &= d1(&pred, &gt, &only(0)).unwrap() == 0.0;
    ok &= d1(&pred, &gt, &only(1)).unwrap() == 100.0;
    let src = NoiseSource::new(15);
    let mut ordered = true;
    for k in 0..200u64 {
        let g = src.uniform_field(2 * k, 1, 64);
        let e = src.gaussian_field(2 * k + 1, 1, 64);
        let gt = map(g.iter().map(|v| 60.0 * v).collect(), 8);
        let pred = map(g.iter().zip(&e).map(|(v, n)| 60.0 * v + 4.0 * n).collect(), 8);
        ordered &= d1(&pred, &gt, &all(8, 8)).unwrap() <= bad_p(&pred, &gt, 3.0, &all(8, 8)).unwrap();
    }
    Outcome {
        id: 11,
        name: "metric conventions",
        pass: ok && ordered,
        detail: format!("unit cases: {ok}; d1 <= bad_3 on 200 random maps: {ordered}"),
    }
}

fn main() -> ExitCode {
    let start = Instant::now();
    let mut outcomes = vec![c1_discretization(), c2_algebra(), c3_sigma(), c4_schedule()];
    let runs = run_suite();
    outcomes.extend([c5_entropy(&runs), c6_renewal(&runs), c7_improvement(&runs), c8_gt_filter(&runs)]);
    outcomes.extend([c9_oracle(), c10_determinism(), c11_metrics()]);

    let mut unexpected = Vec::new();
    for o in &outcomes {
        let known = KNOWN_RED.contains(&o.id);
        let tag = match (o.pass, known) {
            (true, false) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => "FAIL",
            (true, true) => "PASS (listed as known red)",
        };
        println!("criterion {:>2} {tag}: {} | {}", o.id, o.name, o.detail);
        if o.pass == known {
            unexpected.push(o.id);
        }
    }
    let passed = outcomes.iter().filter(|o| o.pass).count();
    println!("acceptance: {passed}/{} criteria pass in {:.1?}", outcomes.len(), start.elapsed());
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("acceptance: outcome differs from KNOWN_RED for criteria {unexpected:?}");
        ExitCode::FAILURE
    }
}
