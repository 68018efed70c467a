//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

mod common;

use std::path::Path;
use std::time::{Duration, Instant};

use pdhp::cli;
use pdhp::datagen::GenerationSpec;
use pdhp::evaluation::{nmi, run_sweep, Normalization, SweepAggregate, SweepGrid};
use pdhp::inference::FitConfig;
use pdhp::language_model::{dm_log_predictive, ClusterWordCounts, DmParams, DocCounts};
use pdhp::point_process::{sample_candidates, ClusterDynamics, KernelBasis};
use pdhp::prior::{pdhp_prior, PriorParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(id: u32, name: &str, budget: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = f();
    let elapsed = start.elapsed();
    let in_time = elapsed <= budget;
    let pass = out.pass && in_time;
    println!(
        "{} criterion {id} ({name}): {}; {:.2}s of {}s budget{}",
        if pass { "PASS" } else { "FAIL" },
        out.detail,
        elapsed.as_secs_f64(),
        budget.as_secs(),
        if in_time { "" } else { " (over budget)" },
    );
    pass
}

fn reductions() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let k = rng.random_range(1..12);
        let ls: Vec<f64> = (0..k)
            .map(|_| {
                if rng.random::<f64>() < 0.1 {
                    0.0
                } else {
                    rng.random_range(0.0..5.0)
                }
            })
            .collect();
        let lambda0 = rng.random_range(1e-3..3.0);
        let dhp = pdhp_prior(&ls, &PriorParams::new(1.0, 1.0, lambda0).unwrap()).unwrap();
        let z = lambda0 + ls.iter().sum::<f64>();
        for (c, &l) in ls.iter().enumerate() {
            worst = worst.max((dhp[c] - l / z).abs());
        }
        worst = worst.max((dhp[k] - lambda0 / z).abs());

        let up = pdhp_prior(&ls, &PriorParams::new(0.0, 1.0, lambda0).unwrap()).unwrap();
        let z = lambda0 + k as f64;
        for &p in &up[..k] {
            worst = worst.max((p - 1.0 / z).abs());
            // exactly uniform among existing clusters
            if p != up[0] {
                worst = f64::INFINITY;
            }
        }
        worst = worst.max((up[k] - lambda0 / z).abs());
    }
    Outcome {
        pass: worst <= 1e-12,
        detail: format!("max deviation {worst:.2e} over 10^4 vectors (limit 1e-12)"),
    }
}

fn urn_check() -> f64 {
    // every cluster count vector and document with V <= 3 and at most 3 tokens each
    let mut worst: f64 = 0.0;
    for v in 1..=3usize {
        let vectors: Vec<Vec<u64>> = (0..4u64.pow(v as u32))
            .map(|code| {
                (0..v)
                    .map(|i| (code / 4u64.pow(i as u32)) % 4)
                    .collect::<Vec<u64>>()
            })
            .filter(|c| c.iter().sum::<u64>() <= 3)
            .collect();
        for theta in [0.01, 0.5, 2.0] {
            let params: DmParams<f64> = DmParams::new(theta, v).unwrap();
            for cl in &vectors {
                let mut cluster = ClusterWordCounts::new();
                cluster.add(&DocCounts::from_counts(
                    cl.iter().enumerate().map(|(w, &c)| (w, c)),
                ));
                for d in &vectors {
                    let doc = DocCounts::from_counts(d.iter().enumerate().map(|(w, &c)| (w, c)));
                    let got = dm_log_predictive(&cluster, &doc, &params).unwrap().exp();
                    let want = common::urn_log_prob(cl, d, theta).exp();
                    worst = worst.max((got - want).abs());
                }
            }
        }
    }
    worst
}

fn compensator_check(rng: &mut ChaCha8Rng) -> f64 {
    let b = KernelBasis::default_basis();
    let mut worst: f64 = 0.0;
    for _ in 0..30 {
        let n = rng.random_range(1..10);
        let mut t = 0.0;
        let times: Vec<f64> = (0..n)
            .map(|_| {
                t += rng.random_range(0.0..15.0);
                t
            })
            .collect();
        let w: Vec<f64> = (0..3).map(|_| rng.random_range(0.0..1.5)).collect();
        let mut d = ClusterDynamics::with_weights(w.clone()).unwrap();
        times.iter().for_each(|&x| d.update(&b, x).unwrap());
        let t_end = t + rng.random_range(0.0..30.0);
        let closed = d.integrated_intensity(&b, &w, t_end).unwrap();
        let quad =
            common::compensator_oracle(&times, &[3.0, 7.0, 11.0], &[2.0; 3], 21.0, &w, t_end);
        worst = worst.max((closed - quad).abs());
    }
    worst
}

fn incremental_check(rng: &mut ChaCha8Rng) -> f64 {
    let b = KernelBasis::default_basis();
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let mut t = 0.0;
        let times: Vec<f64> = (0..50)
            .map(|_| {
                t += if rng.random::<f64>() < 0.1 {
                    rng.random_range(20.0..40.0)
                } else {
                    rng.random_range(0.0..6.0)
                };
                t
            })
            .collect();
        let cands = sample_candidates((0.1, 2.0), 8, 3, rng).unwrap();
        let mut d = ClusterDynamics::new(cands.clone()).unwrap();
        times.iter().for_each(|&x| d.update(&b, x).unwrap());
        for (m, c) in cands.iter().enumerate() {
            let batch = d.hawkes_log_likelihood(&b, c, t).unwrap();
            let rel = (batch - d.candidate_loglik()[m]).abs() / (1.0 + batch.abs());
            worst = worst.max(rel);
        }
    }
    worst
}

fn nmi_check(rng: &mut ChaCha8Rng) -> f64 {
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let n = rng.random_range(1..=8);
        let ka = rng.random_range(1..=4);
        let kb = rng.random_range(1..=4);
        let a: Vec<usize> = (0..n).map(|_| rng.random_range(0..ka)).collect();
        let b: Vec<usize> = (0..n).map(|_| rng.random_range(0..kb)).collect();
        let got: f64 = nmi(&a, &b).unwrap();
        worst = worst.max((got - common::nmi_oracle(&a, &b)).abs());
    }
    worst
}

fn oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let urn = urn_check();
    let comp = compensator_check(&mut rng);
    let inc = incremental_check(&mut rng);
    let nm = nmi_check(&mut rng);
    Outcome {
        pass: urn <= 1e-12 && comp <= 1e-6 && inc <= 1e-9 && nm <= 1e-12,
        detail: format!(
            "urn {urn:.1e} (1e-12), compensator {comp:.1e} (1e-6), incremental {inc:.1e} (1e-9), nmi {nm:.1e} (1e-12)"
        ),
    }
}

fn sweep(r: &[f64], textual: f64, decorrelation: f64) -> Vec<SweepAggregate> {
    let grid = SweepGrid {
        r: r.to_vec(),
        textual_overlap: vec![textual],
        intensity_overlap: vec![0.0],
        decorrelation: vec![decorrelation],
        seeds: 10,
        base_seed: 0,
    };
    let res = run_sweep(
        &grid,
        &GenerationSpec::default(),
        &FitConfig::default(),
        Normalization::Geometric,
    )
    .expect("sweep runs");
    assert!(
        res.rows.iter().all(|row| row.error.is_none()),
        "a sweep run failed"
    );
    res.aggregates
}

fn textual_overlap_direction() -> Outcome {
    let agg = sweep(&[0.0, 2.0], 0.7, 0.0);
    let at = |r: f64| {
        agg.iter()
            .find(|a| a.r == r)
            .unwrap()
            .mean_nmi_textual
            .unwrap()
    };
    let (r0, r2) = (at(0.0), at(2.0));
    Outcome {
        pass: r2 - r0 >= 0.1,
        detail: format!(
            "mean NMI r=0 {r0:.3}, r=2 {r2:.3}, gain {:.3} (need >= 0.1)",
            r2 - r0
        ),
    }
}

fn decorrelation_flip() -> Outcome {
    let agg = sweep(&[0.0, 4.0, 8.0], 0.0, 0.5);
    let diff = |r: f64| {
        agg.iter()
            .find(|a| a.r == r)
            .unwrap()
            .mean_nmi_diff
            .unwrap()
    };
    let (d0, d4, d8) = (diff(0.0), diff(4.0), diff(8.0));
    Outcome {
        pass: d0 < 0.0 && d4 > 0.0 && d8 > 0.0,
        detail: format!(
            "mean nmi_temporal - nmi_textual: r=0 {d0:+.3}, r=4 {d4:+.3}, r=8 {d8:+.3}"
        ),
    }
}

fn easy_regime() -> Outcome {
    let agg = sweep(&[1.0], 0.0, 0.0);
    let m = agg[0].mean_nmi_textual.unwrap();
    Outcome {
        pass: m > 0.9,
        detail: format!("mean NMI {m:.3} over 10 seeds (need > 0.9)"),
    }
}

fn generator_statistics() -> Outcome {
    let b = KernelBasis::default_basis();
    let mu = 1.0;
    let (_, mut gaps) = common::simulate_many(mu, &[0.0; 3], &b, 100.0, 200, 3);
    let n = gaps.len();
    let ks = common::ks_statistic(&mut gaps, |x| 1.0 - (-mu * x).exp());
    let crit = common::ks_critical_001(n);

    let (end, runs, branching) = (10_000.0, 200, 0.5);
    let w: Vec<f64> = (0..3).map(|l| branching / 3.0 / b.mass(l)).collect();
    let (counts, _) = common::simulate_many(mu, &w, &b, end, runs, 4);
    let expected = mu * end / (1.0 - branching);
    let se = common::sample_sd(&counts) / (runs as f64).sqrt();
    let z = (common::mean(&counts) - expected) / se;
    Outcome {
        pass: ks < crit && z.abs() < 3.0,
        detail: format!(
            "KS D={ks:.4} vs critical {crit:.4} on {n} gaps; self-exciting mean {:.1} vs {expected:.0} ({z:+.2} sigma)",
            common::mean(&counts)
        ),
    }
}

fn pipeline(dir: &Path, threads: usize) -> Vec<Vec<u8>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap();
    let p = |x: &Path| x.to_str().unwrap().to_owned();
    let (g, f, m) = (dir.join("g"), dir.join("f"), dir.join("metrics.json"));
    let runs: [Vec<String>; 3] = [
        vec![
            "generate".into(),
            "--seed".into(),
            "13".into(),
            "--out".into(),
            p(&g),
        ],
        vec![
            "fit".into(),
            "--seed".into(),
            "13".into(),
            "--corpus".into(),
            p(&g.join("corpus.tsv")),
            "--out".into(),
            p(&f),
        ],
        vec![
            "evaluate".into(),
            "--assignments".into(),
            p(&f.join("assignments.tsv")),
            "--labels".into(),
            p(&g.join("labels.tsv")),
            "--out".into(),
            p(&m),
        ],
    ];
    for args in runs {
        let code = pool.install(|| cli::run(std::iter::once("pdhp".to_owned()).chain(args)));
        assert_eq!(code, 0);
    }
    let mut files = Vec::new();
    for name in ["corpus.tsv", "labels.tsv", "generation.json"] {
        files.push(std::fs::read(g.join(name)).unwrap());
    }
    for name in [
        "assignments.tsv",
        "clusters.json",
        "intensity.csv",
        "top_words.csv",
        "metadata.json",
    ] {
        files.push(std::fs::read(f.join(name)).unwrap());
    }
    files.push(std::fs::read(m).unwrap());
    files
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let a = pipeline(&tmp.path().join("a"), 1);
    let b = pipeline(&tmp.path().join("b"), 1);
    let c = pipeline(&tmp.path().join("c"), 4);
    let bytes: usize = a.iter().map(Vec::len).sum();
    Outcome {
        pass: a == b && a == c,
        detail: format!(
            "{} files, {bytes} bytes; repeat identical: {}, 1 vs 4 threads identical: {}",
            a.len(),
            a == b,
            a == c
        ),
    }
}

fn intensity_export() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let (g, f) = (tmp.path().join("g"), tmp.path().join("f"));
    let arg = |x: &Path| x.to_str().unwrap().to_owned();
    assert_eq!(
        cli::run(["pdhp".into(), "generate".into(), "--out".into(), arg(&g)]),
        0
    );
    let corpus_path = g.join("corpus.tsv");
    assert_eq!(
        cli::run([
            "pdhp".into(),
            "fit".into(),
            "--corpus".into(),
            arg(&corpus_path),
            "--out".into(),
            arg(&f)
        ]),
        0
    );
    let cfg = FitConfig::default();
    let corpus = cli::formats::read_corpus(&corpus_path).unwrap();
    let result = pdhp::inference::fit(&corpus, &cfg).unwrap();
    let mut rdr = csv::Reader::from_path(f.join("intensity.csv")).unwrap();
    let (mut worst, mut n): (f64, usize) = (0.0, 0);
    for rec in rdr.records() {
        let rec = rec.unwrap();
        let t: f64 = rec[0].parse().unwrap();
        let id: u64 = rec[1].parse().unwrap();
        let lambda: f64 = rec[2].parse().unwrap();
        worst = worst.max((lambda - result.clusters[&id].dynamics.intensity(&cfg.basis, t)).abs());
        n += 1;
    }
    Outcome {
        pass: n > 0 && worst <= 1e-9,
        detail: format!("{n} grid values, max deviation {worst:.1e} (limit 1e-9)"),
    }
}

fn main() {
    let s = Duration::from_secs;
    let results = [
        check(1, "reduction exactness", s(1), reductions),
        check(2, "oracle equivalence", s(30), oracles),
        check(
            3,
            "textual overlap direction",
            s(600),
            textual_overlap_direction,
        ),
        check(4, "decorrelation flip", s(600), decorrelation_flip),
        check(5, "easy regime", s(300), easy_regime),
        check(6, "generator statistics", s(60), generator_statistics),
        check(7, "determinism", s(600), determinism),
    ];
    let export = intensity_export();
    println!(
        "{} intensity export: {}",
        if export.pass { "PASS" } else { "FAIL" },
        export.detail
    );
    let failed = results.iter().filter(|&&p| !p).count() + usize::from(!export.pass);
    println!(
        "{} of {} checks passed",
        results.len() + 1 - failed,
        results.len() + 1
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
