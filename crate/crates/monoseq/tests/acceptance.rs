//! Acceptance suite: one test per shipping criterion, each printing a
//! single `criterion NN PASS/FAIL` line with its measured numbers (run
//! with `--nocapture` to see the lines for passing tests too).
//!
//! Every tolerance is asserted exactly as stated, even where the
//! measurement is known to sit above it; a red line here is a finding,
//! not a skipped check.

use std::sync::OnceLock;
use std::time::Instant;

use monoseq::{
    build_value_table, build_variance_table, clt_statistic, coupled_invariance_check,
    critical_value, drift_at, ks_to_standard_normal, offline_lis, property_report, simulate_batch,
    simulate_batch_with_series, simulate_episode, simulate_poisson_batch, summarize, threshold_at,
    value_at, variance_at, GridSpec, RngStream, ValueTable, VarianceTable,
};

const G: usize = 4097;

fn grid(points: usize) -> GridSpec {
    GridSpec::new(points).unwrap()
}

/// Deep table shared by the bound criteria: every horizon up to 2000.
fn deep_tables() -> &'static (ValueTable, VarianceTable) {
    static T: OnceLock<(ValueTable, VarianceTable)> = OnceLock::new();
    T.get_or_init(|| {
        let vt = build_value_table(2000, grid(G)).unwrap();
        let wt = build_variance_table(&vt);
        (vt, wt)
    })
}

fn table_400() -> &'static ValueTable {
    static T: OnceLock<ValueTable> = OnceLock::new();
    T.get_or_init(|| build_value_table(400, grid(G)).unwrap())
}

fn table_100() -> &'static ValueTable {
    static T: OnceLock<ValueTable> = OnceLock::new();
    T.get_or_init(|| build_value_table(100, grid(G)).unwrap())
}

fn verdict(id: u32, pass: bool, detail: &str) {
    let word = if pass { "PASS" } else { "FAIL" };
    println!("criterion {id:02} {word}  {detail}");
}

#[test]
fn criterion_01_closed_form_oracle() {
    let started = Instant::now();
    let vt = build_value_table(3, grid(G)).unwrap();
    let e_v2 = (value_at(&vt, 2, 0.0).unwrap() - 1.5).abs();
    let e_v3 = (value_at(&vt, 3, 0.0).unwrap() - 1.898717).abs();
    let e_h3 = (threshold_at(&vt, 3, 0.0).unwrap() - (3f64.sqrt() - 1.0)).abs();
    let e_s2 = (critical_value(&vt, 2).unwrap() - (2f64.sqrt() - 1.0)).abs();
    let elapsed = started.elapsed().as_secs_f64();
    let pass = e_v2 <= 1e-9 && e_v3 <= 1e-5 && e_h3 <= 1e-6 && e_s2 <= 1e-6 && elapsed < 1.0;
    verdict(
        1,
        pass,
        &format!(
            "closed-form anchors: |dv2|={e_v2:.2e} |dv3|={e_v3:.2e} |dh3|={e_h3:.2e} \
             |ds2|={e_s2:.2e} in {elapsed:.3}s"
        ),
    );
    assert!(e_v2 <= 1e-9, "v_2(0) error {e_v2}");
    assert!(e_v3 <= 1e-5, "v_3(0) error {e_v3}");
    assert!(e_h3 <= 1e-6, "h_3(0) error {e_h3}");
    assert!(e_s2 <= 1e-6, "s_2* error {e_s2}");
    assert!(elapsed < 1.0, "took {elapsed}s");
}

#[test]
fn criterion_02_mean_strictly_below_crisp_bound() {
    let started = Instant::now();
    let (vt, _) = deep_tables();
    let mut worst_margin = f64::INFINITY;
    let mut violations = 0usize;
    for k in 1..=2000 {
        let v = vt.values_at_stage(k).unwrap()[0];
        let bound = (2.0 * k as f64).sqrt();
        worst_margin = worst_margin.min(bound - v);
        if v >= bound {
            violations += 1;
        }
    }
    let elapsed = started.elapsed().as_secs_f64();
    let pass = violations == 0 && elapsed < 120.0;
    verdict(
        2,
        pass,
        &format!("v_n(0) < sqrt(2n) for n <= 2000: min margin {worst_margin:.4} in {elapsed:.1}s"),
    );
    assert_eq!(violations, 0);
    assert!(elapsed < 120.0, "took {elapsed}s");
}

#[test]
fn criterion_03_gap_ratio_is_bounded() {
    let (vt, _) = deep_tables();
    let ratios: Vec<f64> = [50usize, 200, 800, 2000]
        .iter()
        .map(|&n| {
            let v = vt.values_at_stage(n).unwrap()[0];
            ((2.0 * n as f64).sqrt() - v) / (n as f64).ln()
        })
        .collect();
    let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let pass = hi / lo < 3.0 && hi < 5.0;
    verdict(
        3,
        pass,
        &format!(
            "gap/log n at {{50,200,800,2000}}: [{lo:.4}, {hi:.4}], spread x{:.2}",
            hi / lo
        ),
    );
    assert!(hi / lo < 3.0, "ratio spread {}", hi / lo);
    assert!(hi < 5.0, "largest ratio {hi}");
}

#[test]
fn criterion_04_variance_sandwich_from_tables() {
    let (vt, wt) = deep_tables();
    let mut worst_low = f64::INFINITY;
    let mut worst_high = f64::INFINITY;
    let mut violations = 0usize;
    for n in 1..=2000usize {
        let v = vt.values_at_stage(n).unwrap()[0];
        let w = wt.values_at_stage(n).unwrap()[0];
        let lower = v / 3.0 - 2.0;
        let upper = v / 3.0 + 2.0 / 3.0 * (1.0 + (n as f64).ln());
        worst_low = worst_low.min(w - lower);
        worst_high = worst_high.min(upper - w);
        if w < lower || w > upper {
            violations += 1;
        }
    }
    let pass = violations == 0;
    verdict(
        4,
        pass,
        &format!(
            "v/3 - 2 <= w <= v/3 + (2/3)(1 + log n) for n <= 2000: \
             slack {worst_low:.3} below, {worst_high:.3} above"
        ),
    );
    assert_eq!(violations, 0);
}

#[test]
fn criterion_05_tower_consistency_at_200() {
    let started = Instant::now();
    let reps = 100_000;
    let vt = build_value_table(200, grid(G)).unwrap();
    let wt = build_variance_table(&vt);
    let lengths = simulate_batch(&vt, reps, 20_240_205).unwrap();
    let summary = summarize(&lengths, 200).unwrap();
    let v0 = value_at(&vt, 200, 0.0).unwrap();
    let w0 = variance_at(&wt, 200, 0.0).unwrap();
    let mean_gap = (summary.mean - v0).abs();
    let mean_tol = 3.0 * summary.stderr_mean;
    let var_gap = (summary.variance - w0).abs();
    let var_tol = 4.0 * summary.variance * (2.0 / reps as f64).sqrt();
    let elapsed = started.elapsed().as_secs_f64();
    let pass = mean_gap <= mean_tol && var_gap <= var_tol && elapsed < 60.0;
    verdict(
        5,
        pass,
        &format!(
            "n=200, 1e5 reps: |mean-v|={mean_gap:.4} (tol {mean_tol:.4}), \
             |var-w|={var_gap:.4} (tol {var_tol:.4}) in {elapsed:.1}s"
        ),
    );
    assert!(mean_gap <= mean_tol, "mean gap {mean_gap} > {mean_tol}");
    assert!(var_gap <= var_tol, "variance gap {var_gap} > {var_tol}");
    assert!(elapsed < 60.0, "took {elapsed}s");
}

#[test]
fn criterion_06_normal_approximation_distance() {
    let started = Instant::now();
    let reps = 100_000;

    let measure = |vt: &ValueTable| {
        let n = vt.horizon();
        let lengths = simulate_batch(vt, reps, 20_240_206).unwrap();
        let zs: Vec<f64> = lengths.iter().map(|&l| clt_statistic(l, n)).collect();
        let ks = ks_to_standard_normal(&zs).unwrap();
        // diagnostic only: same statistic recentered at the table mean
        let v0 = value_at(vt, n, 0.0).unwrap();
        let zc: Vec<f64> = lengths
            .iter()
            .map(|&l| monoseq::centered_statistic(l, v0, n))
            .collect();
        (ks, ks_to_standard_normal(&zc).unwrap())
    };

    let (ks_400, ks_400_centered) = measure(table_400());
    let big = build_value_table(10_000, grid(G)).unwrap();
    let (ks_large, ks_large_centered) = measure(&big);
    drop(big);

    let elapsed = started.elapsed().as_secs_f64();
    let pass = ks_large <= 0.02 && ks_400 <= 0.05 && elapsed < 600.0;
    verdict(
        6,
        pass,
        &format!(
            "KS to normal, 1e5 reps: n=1e4 {ks_large:.4} (tol 0.02, mean-centered \
             {ks_large_centered:.4}), n=400 {ks_400:.4} (tol 0.05, mean-centered \
             {ks_400_centered:.4}) in {elapsed:.0}s"
        ),
    );
    assert!(
        ks_large <= 0.02,
        "KS at n=10^4 is {ks_large:.4} (mean-centered {ks_large_centered:.4}); \
         the integer lattice of L and the (2n)^(1/2) centering offset keep the \
         empirical CDF at least ~0.03 from the normal even at these sizes"
    );
    assert!(ks_400 <= 0.05, "KS at n=400 is {ks_400:.4}");
    assert!(elapsed < 600.0, "took {elapsed}s");
}

#[test]
fn criterion_07_property_suite_and_traces() {
    // finer grid than the default: the off-node drift of the martingale
    // needs interpolation error below 1e-8 at the states episodes visit
    let n = 50;
    let vt = build_value_table(n, grid(16_385)).unwrap();
    let wt = build_variance_table(&vt);
    let report = property_report(&vt, &wt).unwrap();
    let failed: Vec<&str> = report
        .iter()
        .filter(|r| !r.pass)
        .map(|r| r.name.as_str())
        .collect();

    let mut worst_diff = 0.0f64;
    let mut worst_drift = 0.0f64;
    for r in 0..1000u64 {
        let trace = simulate_episode(&vt, &mut RngStream::new(20_240_207, r)).unwrap();
        for j in 1..=n {
            worst_diff = worst_diff.max(trace.diffs[j - 1].abs());
            let drift = drift_at(&vt, n - j + 1, trace.running_max[j - 1]).unwrap();
            worst_drift = worst_drift.max(drift.abs());
        }
    }
    let pass = failed.is_empty() && worst_diff <= 1.0 && worst_drift <= 1e-8;
    verdict(
        7,
        pass,
        &format!(
            "{}/{} properties pass; over 1e3 traces max |d|={worst_diff:.6}, \
             max |drift|={worst_drift:.2e}",
            report.len() - failed.len(),
            report.len()
        ),
    );
    assert!(failed.is_empty(), "failing properties: {failed:?}");
    assert!(worst_diff <= 1.0);
    assert!(worst_drift <= 1e-8, "drift {worst_drift}");
}

#[test]
fn criterion_08_random_horizon_mean_comparison() {
    let vt = table_100();
    let reps = 100_000;
    let lengths = simulate_poisson_batch(vt, 100.0, reps, 20_240_208).unwrap();
    let summary = summarize(&lengths, 100).unwrap();
    let v0 = value_at(vt, 100, 0.0).unwrap();
    let limit = v0 + 3.0 * summary.stderr_mean;
    let pass = summary.mean <= limit;
    verdict(
        8,
        pass,
        &format!(
            "Poisson horizon nu=n=100, 1e5 reps: mean {:.4} <= fixed-horizon value \
             {v0:.4} + 3 stderr",
            summary.mean
        ),
    );
    assert!(pass, "mean {} > {limit}", summary.mean);
}

#[test]
fn criterion_09_coordinate_coupling_is_exact() {
    let vt = table_100();
    let mut agreed = 0usize;
    for r in 0..1000u64 {
        if coupled_invariance_check(vt, &mut RngStream::new(20_240_209, r)).unwrap() {
            agreed += 1;
        }
    }
    let pass = agreed == 1000;
    verdict(
        9,
        pass,
        &format!("uniform/exponential acceptance sequences identical on {agreed}/1000 episodes"),
    );
    assert_eq!(agreed, 1000);
}

#[test]
fn criterion_10_conditional_variance_dispersion() {
    let started = Instant::now();
    let reps = 100_000;
    // no grid is pinned here; 1025 nodes keep the per-episode quadrature
    // walks fast and the V samples well inside the envelope
    let mut results = Vec::new();
    let mut pass = true;
    for n in [100usize, 400] {
        let vt = build_value_table(n, grid(1025)).unwrap();
        let wt = build_variance_table(&vt);
        let (_, series) = simulate_batch_with_series(&vt, &wt, reps, 20_240_210).unwrap();
        let mean = series.iter().sum::<f64>() / reps as f64;
        let var = series.iter().map(|&v| (v - mean) * (v - mean)).sum::<f64>() / (reps - 1) as f64;
        let envelope = (18.0 + (n as f64).ln().powi(2)) * (2.0 * n as f64).sqrt();
        pass &= var <= envelope;
        results.push((n, var, envelope));
    }
    let elapsed = started.elapsed().as_secs_f64();
    let detail: Vec<String> = results
        .iter()
        .map(|(n, var, env)| format!("n={n}: var(V)={var:.2} <= {env:.0}"))
        .collect();
    verdict(10, pass, &format!("{} in {elapsed:.0}s", detail.join(", ")));
    for (n, var, env) in results {
        assert!(var <= env, "n={n}: var(V)={var} > {env}");
    }
}

#[test]
fn criterion_11_offline_baseline() {
    // exhaustive cross-check on short sequences
    fn brute_force(draws: &[f64]) -> usize {
        let mut best = 0;
        for mask in 0u32..(1 << draws.len()) {
            let picked: Vec<f64> = (0..draws.len())
                .filter(|&i| mask & (1 << i) != 0)
                .map(|i| draws[i])
                .collect();
            if picked.windows(2).all(|p| p[0] <= p[1]) {
                best = best.max(picked.len());
            }
        }
        best
    }
    let mut mismatches = 0usize;
    for r in 0..500u64 {
        let mut rng = RngStream::new(20_240_211, r);
        let len = (r % 13) as usize;
        let draws: Vec<f64> = (0..len).map(|_| rng.next_unit()).collect();
        if offline_lis(&draws) != brute_force(&draws) {
            mismatches += 1;
        }
    }

    // the offline optimum sees the whole sequence and should clearly beat
    // the online policy on the same draws
    let vt = table_400();
    let reps = 2000;
    let online = simulate_batch(vt, reps, 20_240_212).unwrap();
    let online_mean = online.iter().sum::<u64>() as f64 / reps as f64;
    let offline_mean = (0..reps as u64)
        .map(|r| {
            let mut rng = RngStream::new(20_240_212, r);
            let draws: Vec<f64> = (0..400).map(|_| rng.next_unit()).collect();
            offline_lis(&draws) as f64
        })
        .sum::<f64>()
        / reps as f64;
    let pass = mismatches == 0 && offline_mean > online_mean;
    verdict(
        11,
        pass,
        &format!(
            "brute-force agreement 500/500 minus {mismatches}; at n=400 offline mean \
             {offline_mean:.2} vs online mean {online_mean:.2}"
        ),
    );
    assert_eq!(mismatches, 0);
    assert!(
        offline_mean > online_mean,
        "offline {offline_mean} <= online {online_mean}"
    );
}
