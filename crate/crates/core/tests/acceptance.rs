//! End-to-end acceptance checks at desk scale (128 x 32 ULA, 200 trials per point).
//!
//! Runs as a plain binary so every criterion prints one PASS/FAIL line. Criteria
//! listed in `KNOWN_GAPS` still print FAIL when they fail but do not fail the run;
//! any other failure exits non-zero.

use std::process::ExitCode;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mmwave_mc::frontend::{
    build_sampling_pattern, default_receive_block, default_transmit_exponents, design_receive_step,
    design_transmit_stage, selection_matrix, simulate_training, PhaseShifterSet,
};
use mmwave_mc::gcg_alt::{
    altmin_flops_closed, altmin_flops_sum, descent_atom, estimate, estimate_sampled, flop_count,
    gcg_flops, line_search_theta, omp_flops, SampledMatrix, SolverConfig,
};
use mmwave_mc::harness::{
    prepare_trial, rank_distribution, run_sweep, summarize, sweep_points, trial_seed, Angle, Axis, AxisValue,
    ExperimentConfig, ResultRecord, SweepAxis,
};
use mmwave_mc::imc::generate_features;
use mmwave_mc::linalg::{complex_gaussian_matrix, frobenius_sq, mix_seed, singular_values, sorted_svd, CMatrix};

const SEED: u64 = 2024;

/// Criteria that do not hold for this implementation at desk scale; see the project notes.
const KNOWN_GAPS: &[&str] = &["trend reproduction", "se ordering"];

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn low_rank<R: Rng>(rng: &mut R, n_r: usize, n_t: usize, r: usize) -> CMatrix {
    let a = complex_gaussian_matrix(rng, n_r, r, 1.0);
    let b = complex_gaussian_matrix(rng, n_t, r, 1.0);
    a * b.adjoint()
}

fn base(estimators: &[&str]) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::ula();
    cfg.seed = SEED;
    cfg.trials = 200;
    cfg.estimators = estimators.iter().map(|s| s.to_string()).collect();
    cfg
}

fn sweep_over(mut cfg: ExperimentConfig, axis: Axis, values: &[f64]) -> Vec<ResultRecord> {
    cfg.sweep = vec![SweepAxis { axis, values: values.iter().map(|&v| AxisValue(Angle(v))).collect() }];
    run_sweep(&cfg).expect("sweep")
}

/// Mean NMSE in dB of one estimator at one value of `axis`.
fn mean_db(records: &[ResultRecord], estimator: &str, axis: &str, value: f64) -> f64 {
    let group: Vec<ResultRecord> = records
        .iter()
        .filter(|r| r.estimator == estimator && r.coord(axis).is_some_and(|v| (v - value).abs() < 1e-12))
        .cloned()
        .collect();
    let s = summarize(&group);
    assert_eq!(s.len(), 1, "{estimator} at {axis}={value}");
    assert_eq!(s[0].failures, 0, "{estimator} at {axis}={value} had failures");
    s[0].mean_nmse_db
}

fn fmt_list(xs: &[f64]) -> String {
    xs.iter().map(|x| format!("{x:.2}")).collect::<Vec<_>>().join(", ")
}

fn strictly_decreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] < w[0])
}

fn training_exactness() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (n_t, n_r) = (128, 32);
    let mut cases = 0;
    let mut worst_tx: f64 = 0.0;
    let mut worst_rx: f64 = 0.0;
    let mut off_grid = 0;
    for bits in [1, 6] {
        let shifter = PhaseShifterSet::new(bits).unwrap();
        let on_grid = |m: &CMatrix| m.iter().all(|&z| shifter.contains(z));
        for k_t in [2, 16] {
            for k_r in [2, 4] {
                let (n1, n2) = default_transmit_exponents(&shifter, k_t);
                let block = default_receive_block(&shifter, k_r).unwrap();
                for _ in 0..125 {
                    let j = rng.random_range(0..n_t);
                    let tx = design_transmit_stage(j, n_t, k_t, &shifter, n1, n2).unwrap();
                    let mut e = tx.realized();
                    e[j] -= c(1.0);
                    worst_tx = worst_tx.max(e.iter().map(|z| z.norm()).fold(0.0, f64::max));
                    off_grid += usize::from(!on_grid(&tx.g.unscaled()));

                    let len = rng.random_range(1..k_r);
                    let mut rows: Vec<usize> = (0..n_r).collect();
                    for i in 0..len {
                        let k = rng.random_range(i..n_r);
                        rows.swap(i, k);
                    }
                    rows.truncate(len);
                    let rx = design_receive_step(&rows, n_r, k_r, &shifter, &block).unwrap();
                    worst_rx = worst_rx.max(max_abs(&(rx.realized() - selection_matrix(&rows, n_r))));
                    off_grid += usize::from(!on_grid(&rx.q.unscaled()));
                    cases += 1;
                }
            }
        }
    }
    verdict(
        worst_tx < 1e-12 && worst_rx < 1e-12 && off_grid == 0,
        format!("{cases} cases, max|Gb-e|={worst_tx:.1e}, max|QD-W|={worst_rx:.1e}, off-grid entries={off_grid}"),
    )
}

fn line_search_oracle() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    let (n_r, n_t) = (16, 48);
    let mut worst = f64::NEG_INFINITY;
    let mut states = 0;
    while states < 500 {
        let r = rng.random_range(1..=4);
        let h = low_rank(&mut rng, n_r, n_t, r);
        let pattern = build_sampling_pattern(n_t, n_r, 0.375, rng.random()).unwrap();
        let noise = complex_gaussian_matrix(&mut rng, n_r, n_t, 0.01);
        let obs = SampledMatrix::from_pattern(&(h + noise), &pattern).unwrap();
        let k = rng.random_range(0..4);
        let u = complex_gaussian_matrix(&mut rng, n_r, k, 0.5);
        let v = complex_gaussian_matrix(&mut rng, n_t, k, 0.5);
        let eta = 2.0 / (k as f64 + 2.0);
        let mu = rng.random_range(0.0..2.0);
        let Some(atom) = descent_atom(&obs, &u, &v, 2, 10, &mut rng).unwrap() else { continue };
        let theta = line_search_theta(&obs, &u, &v, &atom, eta, mu).unwrap();

        // h(theta) on the samples, from dense matrices.
        let prev = &u * v.adjoint();
        let z = &atom.u * atom.v.adjoint();
        let mut a = Vec::new();
        let mut b = Vec::new();
        for (t, col) in obs.by_col.iter().enumerate() {
            for &(i, y) in col {
                a.push(prev[(i, t)] * (1.0 - eta) - y);
                b.push(z[(i, t)]);
            }
        }
        let h_of = |th: f64| {
            0.5 * a.iter().zip(&b).map(|(x, y)| (x + y * th).norm_sqr()).sum::<f64>() + mu * th
        };
        let hi = if theta > 0.0 { 2.0 * theta } else { 1.0 };
        let best = (0..10_000).map(|g| h_of(hi * g as f64 / 9_999.0)).fold(f64::INFINITY, f64::min);
        worst = worst.max(h_of(theta) - best);
        states += 1;
    }
    verdict(worst <= 1e-10, format!("{states} states, max h(theta_k) - grid min = {worst:.2e}"))
}

fn solver_cfg(seed: u64) -> SolverConfig {
    SolverConfig { seed, ..SolverConfig::default() }
}

/// Returns the verdict plus the half-step objective sequences it produced.
fn noiseless_recovery() -> (Verdict, Vec<Vec<f64>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 2);
    let mut good = 0;
    let mut traces = Vec::new();
    let mut worst = 0.0f64;
    for trial in 0..100 {
        let h = low_rank(&mut rng, 32, 128, 3);
        let pattern = build_sampling_pattern(128, 32, 0.375, mix_seed(SEED, trial)).unwrap();
        let obs = SampledMatrix::from_pattern(&h, &pattern).unwrap();
        let est = estimate_sampled(&obs, 0.0, &solver_cfg(trial)).unwrap();
        let n = frobenius_sq(&(est.h_hat() - &h)) / frobenius_sq(&h);
        worst = worst.max(n);
        good += usize::from(n < 1e-4 && est.rank() == 3);
        traces.extend(est.trace.into_iter().map(|r| r.half_steps));
    }
    (verdict(good >= 95, format!("{good}/100 trials with NMSE < 1e-4 and rank 3 (worst NMSE {worst:.1e})")), traces)
}

fn monotone_descent(mut traces: Vec<Vec<f64>>) -> Verdict {
    // Add traces from noisy end-to-end training at the default link.
    let cfg = base(&["gcg-alt"]);
    let setup = &sweep_points(&cfg)[0].setup;
    for trial in 0..100 {
        let inputs = prepare_trial(&cfg, setup, trial_seed(cfg.seed, trial)).unwrap();
        let obs = simulate_training(
            &inputs.h_eff,
            &inputs.profile.rx,
            &inputs.plan,
            setup.pnr_db,
            inputs.seeds.noise,
            cfg.training.processor,
        )
        .unwrap();
        let est = estimate(&obs, &solver_cfg(inputs.seeds.solver)).unwrap();
        traces.extend(est.trace.into_iter().map(|r| r.half_steps));
    }
    let mut steps = 0;
    let mut violations = 0;
    for t in &traces {
        for w in t.windows(2) {
            steps += 1;
            // Allow only floating-point round-off relative to the objective scale.
            violations += usize::from(w[1] > w[0] + 1e-12 * w[0].abs());
        }
    }
    verdict(violations == 0, format!("{} traces, {steps} half-steps, {violations} increases", traces.len()))
}

/// `(||U||^2 + ||V||^2) / 2`.
fn half_norms(u: &CMatrix, v: &CMatrix) -> f64 {
    0.5 * (frobenius_sq(u) + frobenius_sq(v))
}

fn nuclear_norm_identity() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 3);
    let mut worst_gap: f64 = 0.0;
    let mut below = 0;
    let mut min_excess = f64::INFINITY;
    for _ in 0..100 {
        let r = rng.random_range(1..=6);
        let h = low_rank(&mut rng, 20, 30, r);
        let svd = sorted_svd(&h);
        let nuc: f64 = svd.singular_values.iter().sum();
        let sqrt_s = CMatrix::from_fn(r, r, |i, j| if i == j { c(svd.singular_values[i].sqrt()) } else { c(0.0) });
        let u = svd.u.columns(0, r) * &sqrt_s;
        let v = svd.v.columns(0, r) * &sqrt_s;
        worst_gap = worst_gap.max((half_norms(&u, &v) - nuc).abs() / nuc);

        // U R, V R^{-H} still factor H.
        // Redraw R until the pair reproduces H (rejects ill-conditioned draws).
        let (u2, v2) = loop {
            let mix = complex_gaussian_matrix(&mut rng, r, r, 1.0);
            let Some(inv) = mix.clone().try_inverse() else { continue };
            let (u2, v2) = (&u * &mix, &v * inv.adjoint());
            if max_abs(&(&u2 * v2.adjoint() - &h)) < 1e-8 * nuc {
                break (u2, v2);
            }
        };
        let excess = half_norms(&u2, &v2) - nuc;
        min_excess = min_excess.min(excess / nuc);
        below += usize::from(excess < -1e-9 * nuc);
    }
    verdict(
        worst_gap < 1e-8 && below == 0,
        format!("balanced max rel gap {worst_gap:.1e}; unbalanced below ||H||_*: {below}, min rel excess {min_excess:.2e}"),
    )
}

fn flop_model() -> Verdict {
    let reference = gcg_flops(128, 32, 0.375, 1, 2, 10);
    let mut worst: f64 = 0.0;
    for r in 0..=10 {
        for q in 0..=5 {
            let a = altmin_flops_sum(128, 32, 0.375, r, q);
            let b = altmin_flops_closed(128, 32, 0.375, r, q);
            worst = worst.max((a - b).abs() / a.max(1.0));
        }
    }
    // GCG-Alt trains on p = 0.375 with q = 2, g = 3 and up to 5 AltMin sweeps;
    // OMP sounds p = 0.5 against a 256 x 64 grid.
    let ordered = (1..=20).all(|r| {
        let (n_t, n_r) = (128, 32);
        flop_count(n_t, n_r, 0.375, r, 5, 2, 3).total < omp_flops(n_t, n_r, 0.5, r, 2 * n_t, 2 * n_r)
    });
    verdict(
        reference == 3_096_576.0 && worst < 1e-12 && ordered,
        format!("reference row {reference}, closed-vs-sum max rel diff {worst:.1e}, GCG < OMP for r <= 20: {ordered}"),
    )
}

struct Shared {
    baseline: Vec<ResultRecord>,
    steps: Vec<ResultRecord>,
}

fn baseline() -> Vec<ResultRecord> {
    let mut cfg = base(&["gcg-alt", "omp"]);
    cfg.trials = 500;
    run_sweep(&cfg).unwrap()
}

fn impairment_immunity(shared: &Shared) -> Verdict {
    let pi = std::f64::consts::PI;
    let phases: Vec<f64> = [0.0, 0.125, 0.25, 0.375, 0.5].iter().map(|f| f * pi).collect();
    let gains = [0.0, 0.1, 0.2, 0.3];
    let ph = sweep_over(base(&["gcg-alt"]), Axis::PhaseLevel, &phases);
    let gn = sweep_over(base(&["gcg-alt"]), Axis::GainLevel, &gains);
    let ph_db: Vec<f64> = phases.iter().map(|&v| mean_db(&ph, "gcg-alt", "phase_level", v)).collect();
    let gn_db: Vec<f64> = gains.iter().map(|&v| mean_db(&gn, "gcg-alt", "gain_level", v)).collect();
    let spread = |xs: &[f64]| {
        xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - xs.iter().cloned().fold(f64::INFINITY, f64::min)
    };

    let omp = sweep_over(base(&["omp"]), Axis::PhaseLevel, &[0.25 * pi]);
    let first: Vec<ResultRecord> = shared.baseline.iter().filter(|r| r.trial < 200).cloned().collect();
    let omp0 = mean_db(&first, "omp", "pnr_db", 20.0);
    let omp1 = mean_db(&omp, "omp", "phase_level", 0.25 * pi);
    let (sp, sg, rise) = (spread(&ph_db), spread(&gn_db), omp1 - omp0);
    verdict(
        sp < 0.5 && sg < 0.5 && rise >= 3.0,
        format!(
            "GCG-Alt phase [{}] dB (spread {sp:.2}), gain [{}] dB (spread {sg:.2}); OMP {omp0:.2} -> {omp1:.2} dB (+{rise:.2})",
            fmt_list(&ph_db),
            fmt_list(&gn_db)
        ),
    )
}

fn trend_reproduction(shared: &Shared) -> Verdict {
    let gcg_steps: Vec<f64> = (1..=8).map(|s| mean_db(&shared.steps, "gcg-alt", "steps", s as f64)).collect();
    let pnrs = [0.0, 5.0, 10.0, 15.0, 20.0];
    let pnr = sweep_over(base(&["gcg-alt"]), Axis::PnrDb, &pnrs);
    let gcg_pnr: Vec<f64> = pnrs.iter().map(|&v| mean_db(&pnr, "gcg-alt", "pnr_db", v)).collect();

    let omp = sweep_over(base(&["omp"]), Axis::Steps, &[4.0, 5.0, 6.0, 7.0, 8.0]);
    let omp_steps: Vec<f64> = (4..=8).map(|s| mean_db(&omp, "omp", "steps", s as f64)).collect();
    let beats = gcg_steps[3..].iter().zip(&omp_steps).all(|(g, o)| g <= o);
    verdict(
        strictly_decreasing(&gcg_steps) && strictly_decreasing(&gcg_pnr) && beats,
        format!(
            "GCG-Alt vs steps [{}] dB, vs PNR [{}] dB; S=4..8 GCG-Alt [{}] vs OMP [{}] dB",
            fmt_list(&gcg_steps),
            fmt_list(&gcg_pnr),
            fmt_list(&gcg_steps[3..]),
            fmt_list(&omp_steps)
        ),
    )
}

fn rank_statistics(shared: &Shared) -> Verdict {
    let dist = rank_distribution(&shared.baseline).unwrap();
    let low = dist.r_sub.cdf(5);
    let (m_omp, m_gcg) = (dist.omp.median().unwrap(), dist.gcg.median().unwrap());
    verdict(
        low >= 0.7 && m_omp >= m_gcg,
        format!("P(r_sub <= 5) = {low:.3} over {} trials; median r_OMP {m_omp}, median r_GCG {m_gcg}", dist.r_sub.samples),
    )
}

fn imc_equivalence(shared: &Shared) -> Verdict {
    let diffs: Vec<f64> = (1..=8)
        .map(|s| {
            let s = s as f64;
            (mean_db(&shared.steps, "gcg-alt", "steps", s) - mean_db(&shared.steps, "imc", "steps", s)).abs()
        })
        .collect();
    let worst = diffs.iter().cloned().fold(0.0, f64::max);

    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 4);
    let mut unitary: f64 = 0.0;
    let mut cond_err: f64 = 0.0;
    for seed in 0..20 {
        let f = generate_features(32, 128, seed).unwrap();
        unitary = unitary.max(max_abs(&(f.x_l.adjoint() * &f.x_l - CMatrix::identity(32, 32))));
        unitary = unitary.max(max_abs(&(f.x_r.adjoint() * &f.x_r - CMatrix::identity(128, 128))));
        let h = low_rank(&mut rng, 32, 128, 4);
        let transformed = f.x_l.adjoint() * &h * &f.x_r;
        let (a, b) = (singular_values(&h), singular_values(&transformed));
        let cond = |s: &[f64]| s[0] / s[3];
        cond_err = cond_err.max((cond(&a) - cond(&b)).abs() / cond(&a));
    }
    verdict(
        worst < 1.0 && unitary < 1e-8 && cond_err < 1e-8,
        format!(
            "|MC - IMC| per step [{}] dB; unitarity err {unitary:.1e}; rel condition-number err {cond_err:.1e}",
            fmt_list(&diffs)
        ),
    )
}

fn se_ordering() -> Verdict {
    let pi = std::f64::consts::PI;
    let snr: Vec<f64> = (0..=10).map(|k| -10.0 + 2.0 * k as f64).collect();
    let run = |impaired: bool| {
        let mut cfg = base(&["gcg-alt", "omp", "perfect-csi"]);
        cfg.training.pnr_db = mmwave_mc::harness::OneOrMany::One(10.0);
        cfg.se.snr_db = snr.clone();
        if impaired {
            cfg.impairments.phase_tx = Angle(0.25 * pi);
            cfg.impairments.phase_rx = Angle(0.25 * pi);
            cfg.impairments.gain_tx = 0.2;
            cfg.impairments.gain_rx = 0.2;
        }
        let s = summarize(&run_sweep(&cfg).unwrap());
        let get = |name: &str| s.iter().find(|g| g.estimator == name).unwrap().mean_se.clone();
        (get("gcg-alt"), get("omp"), get("perfect-csi"))
    };
    let (g, o, _) = run(true);
    let ordered = g.iter().zip(&o).all(|(a, b)| a >= b);
    let (gc, oc, pc) = run(false);
    let loss = |x: f64| (pc[0] - x) / pc[0];
    let close = loss(gc[0]).abs() <= 0.05 && loss(oc[0]).abs() <= 0.05;
    verdict(
        ordered && close,
        format!(
            "impaired GCG-Alt [{}] vs OMP [{}]; calibrated at -10 dB: GCG-Alt {:.2}, OMP {:.2}, perfect {:.2} (losses {:.1}%, {:.1}%)",
            fmt_list(&g),
            fmt_list(&o),
            gc[0],
            oc[0],
            pc[0],
            100.0 * loss(gc[0]),
            100.0 * loss(oc[0])
        ),
    )
}

fn main() -> ExitCode {
    let start = Instant::now();
    let mut results: Vec<(&str, Verdict)> = Vec::new();
    let mut record = |name: &'static str, v: Verdict| {
        println!("{} {name}: {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        results.push((name, v));
    };

    record("training exactness", training_exactness());
    record("line-search oracle", line_search_oracle());
    let (v, traces) = noiseless_recovery();
    record("noiseless recovery", v);
    record("monotone descent", monotone_descent(traces));
    record("nuclear-norm identity", nuclear_norm_identity());
    record("flop model", flop_model());

    let shared = Shared {
        baseline: baseline(),
        steps: sweep_over(base(&["gcg-alt", "imc"]), Axis::Steps, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]),
    };
    record("impairment immunity", impairment_immunity(&shared));
    record("trend reproduction", trend_reproduction(&shared));
    record("rank statistics", rank_statistics(&shared));
    record("imc equivalence", imc_equivalence(&shared));
    record("se ordering", se_ordering());

    let failed: Vec<&str> = results.iter().filter(|(_, v)| !v.pass).map(|(n, _)| *n).collect();
    let unexpected: Vec<&str> = failed.iter().copied().filter(|n| !KNOWN_GAPS.contains(n)).collect();
    println!(
        "acceptance: {} passed, {} failed ({} known gaps) in {:.0} s",
        results.len() - failed.len(),
        failed.len(),
        failed.len() - unexpected.len(),
        start.elapsed().as_secs_f64()
    );
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("unexpected failures: {}", unexpected.join(", "));
        ExitCode::FAILURE
    }
}
