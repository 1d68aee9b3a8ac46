//! Acceptance checks. Each check prints one PASS/FAIL line; the process
//! exits non-zero if any check fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use ndarray::{s, Array2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use scal_core::datagen::{generate, SyntheticSpec};
use scal_core::harness::{run_experiment, ExperimentConfig, GroundTruthOracle};
use scal_core::influence::score_all;
use scal_core::ksc::{fit_models, random_assignment, run_ksc, KscOptions};
use scal_core::kscc::{hungarian, run_kscc_observed};
use scal_core::metrics::{auc, nmi, queries_to_perfect};
use scal_core::model::total_loss;
use scal_core::numkit::{cov_after_add, cov_after_add_batch, cov_after_add_single, cov_after_delete, sym_eigen, MeanCov};
use scal_core::spectral::{spectral_active_step, spectral_cluster};
use scal_core::strategies::select;
use scal_core::{Centering, Clustering, Dataset, LabelStore, Strategy};

use common::*;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.sample::<f64, _>(StandardNormal))
}

fn covariance_identities() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let n = rng.random_range(10..=200);
        let p = rng.random_range(3..=20);
        let l = rng.random_range(1..=5usize).min(n - 2);
        let shift = rng.random_range(-3.0..3.0);
        let x = gaussian(&mut rng, n, p) + shift;
        let (mean, cov) = brute_covariance(x.view());
        let summary = MeanCov { mean, cov };

        // Deletion of the last l rows.
        let kept = x.slice(s![..n - l, ..]);
        let del = cov_after_delete(&summary, n, x.slice(s![n - l.., ..])).map_err(|e| e.to_string())?;
        let (m_ref, c_ref) = brute_covariance(kept);
        worst = worst
            .max(max_abs_diff(del.cov.view(), c_ref.view()))
            .max(max_abs_diff(del.mean.view().insert_axis(Axis(0)), m_ref.view().insert_axis(Axis(0))));

        // Addition of l fresh rows, batch and single-point forms.
        let extra = gaussian(&mut rng, l, p) * 2.0 + shift;
        let mut union = x.clone();
        union.append(Axis(0), extra.view()).unwrap();
        let (m_ref, c_ref) = brute_covariance(union.view());
        for added in [
            cov_after_add(&summary, n, extra.view()),
            cov_after_add_batch(&summary, n, extra.view()),
        ] {
            let added = added.map_err(|e| e.to_string())?;
            worst = worst
                .max(max_abs_diff(added.cov.view(), c_ref.view()))
                .max(max_abs_diff(added.mean.view().insert_axis(Axis(0)), m_ref.view().insert_axis(Axis(0))));
        }
        let one = cov_after_add_single(&summary, n, extra.row(0)).map_err(|e| e.to_string())?;
        let mut plus_one = x.clone();
        plus_one.push_row(extra.row(0)).unwrap();
        let (_, c1) = brute_covariance(plus_one.view());
        worst = worst.max(max_abs_diff(one.cov.view(), c1.view()));
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        worst <= 1e-10 && secs < 10.0,
        format!("200 configurations, max abs error {worst:.2e}, {secs:.2} s"),
    )
}

fn trailing(cov: &Array2<f64>, q: usize) -> f64 {
    sym_eigen(cov.view()).unwrap().eigenvalues.iter().skip(q).sum()
}

fn perturbation_accuracy() -> Outcome {
    const Q: usize = 10;
    let mut rel_u1 = Vec::new();
    let mut rel_u2 = Vec::new();
    let mut rel_u1_spectral = Vec::new();
    let mut agree = 0;
    for trial in 0..50u64 {
        let data = generate(&SyntheticSpec::noise_sweep(0.2, 1000 + trial)).unwrap();
        let clustering = Clustering::new(data.true_classes.clone().unwrap(), 5).unwrap();
        let models = fit_models(&data, &clustering, Q, Centering::On).unwrap();
        let scores = score_all(&data, &models, &clustering, &LabelStore::new()).unwrap();
        let losses: Vec<f64> = scores.points.iter().map(|p| p.loss).collect();
        let pick = select(Strategy::Scal, &scores, &losses, &mut ChaCha8Rng::seed_from_u64(trial)).unwrap();

        let moments: Vec<Moments> = (0..5)
            .map(|k| Moments::of(data.points.select(Axis(0), &clustering.members(k)).view()))
            .collect();
        let t0: Vec<f64> = moments.iter().map(|m| trailing(&m.covariance(), Q)).collect();

        let mut best = (usize::MAX, f64::NEG_INFINITY);
        for p in &scores.points {
            let x = data.points.row(p.id).to_owned();
            let (a, b) = (p.assigned, p.runner_up);
            let (na, nb) = (moments[a].n as f64, moments[b].n as f64);

            let mut without = moments[a].clone();
            without.push(x.clone(), -1.0);
            let t1 = trailing(&without.covariance(), Q);
            let del_spectral = t0[a] - t1;
            let del_loss = na * t0[a] - (na - 1.0) * t1;

            let mut with = moments[b].clone();
            with.push(x, 1.0);
            let t1 = trailing(&with.covariance(), Q);
            let add_spectral = t1 - t0[b];
            let add_loss = (nb + 1.0) * t1 - nb * t0[b];

            // The first-order scores approximate the change in the trailing
            // eigenvalue sum; Σloss = n·(trailing sum) converts them.
            let u1_loss = t0[a] + (na - 1.0) * p.u1;
            let u2_loss = t0[b] + (nb + 1.0) * p.u2;
            if trial < 10 {
                rel_u1.push((u1_loss - del_loss).abs() / (del_loss.abs() + 1e-12));
                rel_u2.push((u2_loss - add_loss).abs() / (add_loss.abs() + 1e-12));
                rel_u1_spectral.push((p.u1 - del_spectral).abs() / (del_spectral.abs() + 1e-12));
            }
            let exact = del_spectral - add_spectral;
            if exact > best.1 {
                best = (p.id, exact);
            }
        }
        if best.0 == pick {
            agree += 1;
        }
    }
    let (m1, m2) = (median(rel_u1), median(rel_u2));
    check(
        m1 <= 0.10 && m2 <= 0.10 && agree >= 45,
        format!(
            "median rel error U1 {:.1}%, U2 {:.1}% (U1 on eigenvalue scale {:.1}%); SCAL pick = exact argmax in {agree}/50",
            100.0 * m1,
            100.0 * m2,
            100.0 * median(rel_u1_spectral)
        ),
    )
}

fn monotone(trace: &[f64], tol: f64) -> bool {
    trace.windows(2).all(|w| w[1] <= w[0] + tol * trace[0].abs())
}

fn objective_monotonicity() -> Outcome {
    let opts = KscOptions::new(4);
    let mut kscc_bad = Vec::new();
    let mut ksc_bad = Vec::new();
    for seed in 0..50u64 {
        let data = generate(&SyntheticSpec {
            k: 3,
            q: 4,
            p: 12,
            points_per_cluster: 200,
            ..SyntheticSpec::noise_sweep(0.3, 7000 + seed)
        })
        .unwrap();
        let truth = data.true_classes.clone().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fraction = (seed % 11) as f64 * 0.05;
        let mut ids: Vec<usize> = (0..data.len()).collect();
        ids.shuffle(&mut rng);
        let mut labels = LabelStore::new();
        let mut pairs = Vec::new();
        for &id in &ids[..(fraction * data.len() as f64) as usize] {
            labels.insert(id, truth[id]).unwrap();
            pairs.push((id, truth[id]));
        }
        let init = random_assignment(data.len(), 3, &mut rng).unwrap();
        let mut constrained = true;
        let run = run_kscc_observed(&data, &init, &labels, &opts, |a, _| {
            constrained &= constraints_hold(a, &pairs);
        })
        .unwrap();
        if !constrained || !monotone(&run.trace, 1e-9) || !constraints_hold(&run.clustering.assignment, &pairs) {
            kscc_bad.push(seed);
        }

        let init = random_assignment(data.len(), 3, &mut rng).unwrap();
        let run = run_ksc(&data, &init, &opts).unwrap();
        if !monotone(&run.trace, 1e-9) {
            ksc_bad.push(seed);
        }
    }
    check(
        kscc_bad.is_empty() && ksc_bad.is_empty(),
        format!(
            "50 constrained runs (0-50% labelled), failures {kscc_bad:?}; 50 unconstrained runs, failures {ksc_bad:?}"
        ),
    )
}

fn hungarian_matches_brute_force() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut mismatches = 0;
    for k in 2..=6 {
        for trial in 0..100 {
            let cost = if trial % 4 == 0 {
                // Small integers produce many ties.
                Array2::from_shape_fn((k, k), |_| rng.random_range(0..4) as f64)
            } else {
                Array2::from_shape_fn((k, k), |_| rng.random_range(-5.0..10.0))
            };
            let got = hungarian(cost.view()).unwrap();
            let mut cols = got.row_to_col.clone();
            cols.sort_unstable();
            let direct: f64 = got.row_to_col.iter().enumerate().map(|(r, &c)| cost[[r, c]]).sum();
            let best = brute_min_assignment(cost.view());
            if cols != (0..k).collect::<Vec<_>>() || (direct - best).abs() > 1e-9 || (got.total_cost - best).abs() > 1e-9 {
                mismatches += 1;
            }
        }
    }
    check(mismatches == 0, format!("500 matrices (K = 2..6), {mismatches} mismatches"))
}

fn mean_queries_to_perfect(strategy: Strategy, make: impl Fn(u64) -> SyntheticSpec, k: usize, q: usize) -> f64 {
    let total: f64 = (0..10u64)
        .map(|seed| {
            let data = generate(&make(seed)).unwrap();
            let cfg = ExperimentConfig {
                seed,
                ..ExperimentConfig::new(strategy, k, q)
            };
            let curve = run_experiment(&cfg, &data, GroundTruthOracle::new(&data).unwrap()).unwrap();
            curve.summary().unwrap().queries_to_perfect_pct
        })
        .sum();
    total / 10.0
}

fn strategy_ranking() -> Outcome {
    let start = Instant::now();
    let noise = |seed| SyntheticSpec::noise_sweep(0.2, seed);
    let scal = mean_queries_to_perfect(Strategy::Scal, noise, 5, 10);
    let margin = mean_queries_to_perfect(Strategy::MinMargin, noise, 5, 10);
    let random = mean_queries_to_perfect(Strategy::Random, noise, 5, 10);
    let narrow = mean_queries_to_perfect(Strategy::Scal, |seed| SyntheticSpec::angle_sweep(30.0, seed), 3, 2);
    let wide = mean_queries_to_perfect(Strategy::Scal, |seed| SyntheticSpec::angle_sweep(70.0, seed), 3, 2);
    check(
        scal < margin && margin < random && scal <= 5.0 && wide < narrow,
        format!(
            "sigma=0.2 mean queries-to-perfect: SCAL {scal:.2}%, MinMargin {margin:.2}%, Random {random:.2}%; \
             SCAL at theta=30 {narrow:.2}%, theta=70 {wide:.2}% ({:.0} s)",
            start.elapsed().as_secs_f64()
        ),
    )
}

fn degenerate_data() -> Outcome {
    let mut worst: f64 = 0.0;
    for seed in 0..3 {
        for (spec, q) in [
            (SyntheticSpec::noise_sweep(0.0, seed), 10),
            (
                SyntheticSpec {
                    sigma: 0.0,
                    ..SyntheticSpec::angle_sweep(50.0, seed)
                },
                2,
            ),
        ] {
            let data = generate(&spec).unwrap();
            let truth = Clustering::new(data.true_classes.clone().unwrap(), spec.k).unwrap();
            let models = fit_models(&data, &truth, q, Centering::On).unwrap();
            let run = run_ksc(&data, &truth, &KscOptions::new(q)).unwrap();
            worst = worst.max(total_loss(&data, &models, &truth)).max(run.clustering.objective);
        }
    }

    let mut not_perfect = Vec::new();
    for seed in 0..3u64 {
        let data = generate(&SyntheticSpec {
            k: 3,
            q: 2,
            p: 6,
            points_per_cluster: 30,
            ..SyntheticSpec::noise_sweep(0.4, seed)
        })
        .unwrap();
        for strategy in [Strategy::Scal, Strategy::MinMargin, Strategy::Random] {
            let cfg = ExperimentConfig {
                seed,
                stop_at_perfect: false,
                budget: Some(data.len()),
                ..ExperimentConfig::new(strategy, 3, 2)
            };
            let curve = run_experiment(&cfg, &data, GroundTruthOracle::new(&data).unwrap()).unwrap();
            if curve.final_nmi() != Some(1.0) || curve.labels.len() != data.len() {
                not_perfect.push((seed, strategy.name()));
            }
        }
    }
    check(
        worst <= 1e-10 && not_perfect.is_empty(),
        format!(
            "noise-free objective from truth max {worst:.1e}; full labelling runs not ending at NMI 1: {not_perfect:?}"
        ),
    )
}

fn metric_fixtures() -> Outcome {
    let ha = 2f64.ln();
    let hb = -(0.75 * 0.75f64.ln() + 0.25 * 0.25f64.ln());
    let mi = 0.5 * (4.0f64 / 3.0).ln() + 0.25 * (2.0f64 / 3.0).ln() + 0.25 * 2f64.ln();
    let expected = 2.0 * mi / (ha + hb);
    let derived = nmi(&[0, 0, 1, 1], &[0, 0, 0, 1]).unwrap();
    let ok = nmi(&[0, 1, 1, 2, 2, 2], &[0, 1, 1, 2, 2, 2]).unwrap() == 1.0
        && nmi(&[0, 1, 1, 2, 2, 2], &[5, 3, 3, 4, 4, 4]).unwrap() == 1.0
        && nmi(&[0, 0, 1, 1], &[0, 1, 0, 1]).unwrap().abs() < 1e-12
        && (derived - expected).abs() < 1e-12
        && (derived - 0.344).abs() < 1e-3
        && auc(&[(0.0, 0.5), (0.5, 1.0), (1.0, 1.0)]) == 87.5
        && auc(&[(0.0, 1.0)]) == 100.0
        && queries_to_perfect(&[(0.0, 1.0)]) == 0.0
        && auc(&[(0.0, 0.0), (0.2, 0.0), (0.7, 0.0)]) == 0.0
        && queries_to_perfect(&[(0.0, 0.5), (0.4, 0.9)]) == 100.0;
    check(ok, format!("NMI identity/independence/derived case ({derived:.4}), AUC and queries-to-perfect fixtures"))
}

fn block_affinity(truth: &[usize], rng: &mut ChaCha8Rng) -> Array2<f64> {
    let n = truth.len();
    let mut w = Array2::zeros((n, n));
    for i in 0..n {
        for j in i + 1..n {
            let p = if truth[i] == truth[j] { 0.25 } else { 0.12 };
            if rng.random::<f64>() < p {
                let v = rng.random::<f64>();
                w[[i, j]] = v;
                w[[j, i]] = v;
            }
        }
    }
    w
}

fn spectral_path() -> Outcome {
    let mut bad = Vec::new();
    let mut gains = 0;
    for seed in 0..20u64 {
        let data: Dataset = generate(&SyntheticSpec {
            k: 3,
            q: 3,
            p: 10,
            points_per_cluster: 50,
            ..SyntheticSpec::noise_sweep(0.1, 300 + seed)
        })
        .unwrap();
        let truth = data.true_classes.clone().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = block_affinity(&truth, &mut rng);
        let mut ids: Vec<usize> = (0..data.len()).collect();
        ids.shuffle(&mut rng);
        let mut labels = LabelStore::new();
        let mut pairs = Vec::new();
        for &id in &ids[..data.len() / 10] {
            labels.insert(id, truth[id]).unwrap();
            pairs.push((id, truth[id]));
        }
        let plain = nmi(&spectral_cluster(w.view(), 3, seed).unwrap().assignment, &truth).unwrap();
        let step = spectral_active_step(&data, w.view(), &labels, 3, &KscOptions::new(3), seed).unwrap();
        let edited = nmi(&step.clustering.assignment, &truth).unwrap();
        if !constraints_hold(&step.clustering.assignment, &pairs) || edited < plain - 1e-12 {
            bad.push(seed);
        }
        if edited > plain + 1e-12 {
            gains += 1;
        }
    }
    check(
        bad.is_empty(),
        format!("20 seeds with 10% labels, constraint or NMI failures {bad:?}; NMI improved on {gains}"),
    )
}

fn main() -> ExitCode {
    let checks: [(&str, fn() -> Outcome); 8] = [
        ("covariance update identities", covariance_identities),
        ("perturbation accuracy", perturbation_accuracy),
        ("constrained and unconstrained monotonicity", objective_monotonicity),
        ("hungarian vs brute force", hungarian_matches_brute_force),
        ("query strategy ranking on synthetic sweeps", strategy_ranking),
        ("degenerate data", degenerate_data),
        ("metric fixtures", metric_fixtures),
        ("spectral path", spectral_path),
    ];
    let mut failed = 0;
    for (name, f) in checks {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
