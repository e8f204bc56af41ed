//! End-to-end acceptance suite. Runs every criterion, prints one PASS/FAIL
//! line each and exits nonzero if any failed.

use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use qpresponse::bifurcation::{even_order_probe, slope, solve_bifurcation, sweep_curve};
use qpresponse::dynamics::{attraction_check_with, AttractionSettings};
use qpresponse::freq::{standard_frequency, DivisorTable};
use qpresponse::index::for_each_in_l1_ball;
use qpresponse::model::{linear_exact, range_residual};
use qpresponse::series::{expand, partial_sum_to};
use qpresponse::solver::solve_range;
use qpresponse::trees::{
    counting_sweep, counting_sweep_with, series_from_trees, CutoffFamily, QUARTER_FACTOR,
};
use qpresponse::{Complex64, FourierSeries, MultiIndex, Polynomial, ProbeGrid, Problem};

struct Outcome {
    ok: bool,
    detail: String,
}

type Check = fn() -> Outcome;

fn outcome(ok: bool, detail: String) -> Outcome {
    Outcome { ok, detail }
}

fn golden() -> qpresponse::FrequencyVector {
    standard_frequency("golden").unwrap()
}

fn cos1(trunc: u64) -> FourierSeries {
    FourierSeries::cosine(2, trunc, &MultiIndex::from([1, 0]), 1.0).unwrap()
}

fn cubic_benchmark() -> Problem {
    Problem::new(golden(), Polynomial::monomial(3, 1.0), cos1(8), 8).unwrap()
}

/// Convergents of φ = [1; 1, 1, …] give ν = (p_k, −q_k) with
/// |p_k − q_k φ| = φ^{−(k+1)}, starting from p/q = 1/0.
fn golden_oracle(n: usize) -> (MultiIndex, f64) {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let bound = 1i64 << n;
    let (mut p, mut q, mut j) = (1i64, 0i64, 0i32);
    let (mut p1, mut q1) = (1i64, 1i64);
    while p1 + q1 <= bound {
        (p, q, p1, q1) = (p1, q1, p1 + p, q1 + q);
        j += 1;
    }
    (MultiIndex::from([p as i32, -(q as i32)]), phi.powi(-j))
}

/// Plain scan of the whole ball |ν|₁ ≤ 2^n.
fn brute_alpha(omega: &[f64], n: usize) -> (MultiIndex, f64) {
    let mut best = (MultiIndex::from([1, 0]), f64::INFINITY);
    for_each_in_l1_ball(2, 1 << n, |nu, _| {
        if nu.iter().all(|&v| v == 0) || !(nu[0] > 0 || (nu[0] == 0 && nu[1] > 0)) {
            return;
        }
        let x = (nu[0] as f64 * omega[0] + nu[1] as f64 * omega[1]).abs();
        if x < best.1 {
            best = (MultiIndex::new(nu.to_vec()), x);
        }
    });
    best
}

fn c1_frequency() -> Outcome {
    let start = Instant::now();
    let omega = golden();
    let table = DivisorTable::compute(&omega, 10).unwrap();
    let mut bad = Vec::new();
    for e in &table.entries {
        let (nu, a) = golden_oracle(e.n);
        let (bnu, ba) = brute_alpha(omega.components(), e.n);
        // α is |ω·ν| in floating point, so it can sit |ν|₁ roundings away from φ^{−j}
        let slack = 8.0 * nu.l1() as f64 * f64::EPSILON;
        let same = e.minimizer == nu && bnu == nu && e.alpha == ba && (e.alpha - a).abs() <= slack;
        if !same {
            bad.push(e.n);
        }
    }
    let monotone = table.entries.windows(2).all(|w| w[1].alpha <= w[0].alpha);
    let secs = start.elapsed().as_secs_f64();
    outcome(
        bad.is_empty() && monotone && secs < 10.0,
        format!(
            "n <= 10 mismatches {bad:?}, monotone {monotone}, alpha_10 = {:.6e}, {secs:.2}s",
            table.entries[10].alpha
        ),
    )
}

fn c2_partition() -> Outcome {
    let fam = CutoffFamily::new(&golden()).unwrap();
    let (lo, hi) = (fam.table().alpha(6).unwrap(), 4.0);
    let mut worst = 0.0f64;
    for j in 0..=2 {
        for i in 0..100 {
            let x = lo * (hi / lo).powf(i as f64 / 99.0);
            worst = worst.max((fam.partition_sum(j, x).unwrap() - 1.0).abs());
        }
    }
    outcome(
        worst <= 1e-12,
        format!("max deviation {worst:.3e} over 300 samples"),
    )
}

fn c3_linear() -> Outcome {
    let start = Instant::now();
    let f = FourierSeries::from_modes(
        2,
        10,
        [
            (MultiIndex::from([0, 0]), Complex64::new(0.5, 0.0)),
            (MultiIndex::from([1, 0]), Complex64::new(1.0, 0.0)),
            (MultiIndex::from([-1, 0]), Complex64::new(1.0, 0.0)),
            (MultiIndex::from([1, -1]), Complex64::new(0.2, 0.3)),
            (MultiIndex::from([-1, 1]), Complex64::new(0.2, -0.3)),
        ],
    )
    .unwrap();
    let p = Problem::new(golden(), Polynomial::new(vec![0.0, 2.0]), f, 10).unwrap();
    let mut worst = 0.0f64;
    for eps in [0.01, 0.05, 0.1] {
        let (c, exact) = linear_exact(&p, eps).unwrap();
        let sol = solve_range(&p, eps, c, None).unwrap();
        worst = worst.max(sol.x.max_abs_diff(&exact));
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-10 && secs < 5.0,
        format!("sup error {worst:.3e}, {secs:.2}s"),
    )
}

fn c4_series_order() -> Outcome {
    let p = cubic_benchmark();
    let s = expand(&p, 0.0, 4, 8).unwrap();
    let mut slopes = Vec::new();
    for k in 1..=3 {
        let pts: Vec<(f64, f64)> = [1e-2, 5e-3, 2.5e-3]
            .iter()
            .map(|&eps| {
                let x = partial_sum_to(&s, eps, k).unwrap();
                let r = range_residual(&p, &x, 0.0, eps).unwrap().weighted_norm(0.0);
                (f64::ln(eps), r.ln())
            })
            .collect();
        slopes.push(slope(&pts).unwrap());
    }
    let ok = slopes
        .iter()
        .enumerate()
        .all(|(i, m)| *m >= (i + 1) as f64 + 0.8);
    outcome(ok, format!("slopes for K = 1, 2, 3: {slopes:.3?}"))
}

fn c5_trees() -> Outcome {
    let generic_f = FourierSeries::from_modes(
        2,
        8,
        [
            (MultiIndex::from([1, 0]), Complex64::new(1.0, 0.0)),
            (MultiIndex::from([-1, 0]), Complex64::new(1.0, 0.0)),
            (MultiIndex::from([0, 1]), Complex64::new(0.3, -0.4)),
            (MultiIndex::from([0, -1]), Complex64::new(0.3, 0.4)),
        ],
    )
    .unwrap();
    let generic = Problem::new(
        golden(),
        Polynomial::new(vec![0.2, -1.0, 0.5, 1.0]),
        generic_f,
        8,
    )
    .unwrap();
    let cases = [
        (cubic_benchmark(), 0.0),
        (cubic_benchmark(), 0.3),
        (generic, -0.4),
    ];
    let mut worst = 0.0f64;
    for (p, c) in &cases {
        let s = expand(p, *c, 4, p.trunc).unwrap();
        for k in 1..=4 {
            let x = s.order(k).unwrap();
            let t = series_from_trees(p, *c, k).unwrap();
            worst = worst.max(t.max_abs_diff(x) / x.max_abs());
        }
    }
    outcome(
        worst <= 1e-12,
        format!("max relative error {worst:.3e}, k <= 4, 3 cases"),
    )
}

fn unit_support() -> Vec<MultiIndex> {
    vec![
        MultiIndex::from([1, 0]),
        MultiIndex::from([-1, 0]),
        MultiIndex::from([0, 1]),
        MultiIndex::from([0, -1]),
    ]
}

fn c6_line_bound() -> Outcome {
    let start = Instant::now();
    let rep = counting_sweep(&golden(), &unit_support(), 5, 3).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let first = rep
        .trees
        .iter()
        .find(|t| t.counting.as_ref().is_some_and(|c| !c.ok))
        .map(|t| t.text.clone())
        .unwrap_or_default();
    let quarter = counting_sweep_with(&golden(), &unit_support(), 5, 3, QUARTER_FACTOR).unwrap();
    outcome(
        rep.line_bound_violations == 0 && secs < 120.0,
        format!(
            "{} violations in {} renormalised trees (first: {first}), {secs:.2}s; \
             with scales min{{n : |x| > alpha_n/4}}: {} violations",
            rep.line_bound_violations, rep.renormalised, quarter.line_bound_violations
        ),
    )
}

fn c7_cluster_mass() -> Outcome {
    let rep = counting_sweep(&golden(), &unit_support(), 5, 3).unwrap();
    outcome(
        rep.mass_bound_violations == 0,
        format!(
            "{} violations over {} self-energy clusters",
            rep.mass_bound_violations, rep.clusters_checked
        ),
    )
}

fn c8_curve() -> Outcome {
    let p = cubic_benchmark();
    let grid: Vec<f64> = (0..10).map(|i| 1e-3 * 10f64.powf(i as f64 / 9.0)).collect();
    let curve = match sweep_curve(&p, &grid, 0.0, 0.1) {
        Ok(c) => c,
        Err(e) => return outcome(false, format!("sweep failed: {e}")),
    };
    let complete = curve.failure.is_none() && curve.points.len() == grid.len();
    let gmax = curve
        .points
        .iter()
        .map(|q| q.gamma.abs())
        .fold(0.0, f64::max);
    // points are ascending in ε, so |c| must not increase towards the start
    let monotone = curve
        .points
        .windows(2)
        .all(|w| w[0].c.abs() <= w[1].c.abs());
    let at = |e: f64| {
        curve
            .points
            .iter()
            .find(|q| (q.eps - e).abs() < 1e-15)
            .map(|q| q.c.abs())
    };
    let c2 = curve
        .points
        .iter()
        .min_by(|a, b| (a.eps - 2e-3).abs().total_cmp(&(b.eps - 2e-3).abs()))
        .map(|q| q.c.abs())
        .unwrap_or(f64::NAN);
    let c1 = at(grid[0]).unwrap_or(f64::NAN);
    let limit = c1 <= 10.0 * c2 + 1e-14;
    outcome(
        complete && gmax <= 1e-10 && monotone && limit,
        format!(
            "{} points on [1e-3, 1e-2], max |Gamma| {gmax:.3e}, |c| monotone {monotone}, |c(1e-3)| = {c1:.3e}, |c(2e-3)| = {c2:.3e}",
            curve.points.len()
        ),
    )
}

fn c9_probe() -> Outcome {
    let p = Problem::new(golden(), Polynomial::monomial(2, 1.0), cos1(8), 8).unwrap();
    let rep = even_order_probe(&p, &[0.04, 0.02, 0.01], &ProbeGrid::scaled(0.0, 41)).unwrap();
    let positive =
        rep.excluded.is_empty() && rep.sign == 1 && rep.min_signed_gamma.iter().all(|&g| g > 0.0);
    let exp = rep.fitted_exponent.unwrap_or(f64::NAN);
    outcome(
        positive && (1.7..=2.3).contains(&exp),
        format!(
            "min sigma0*Gamma [{}], fitted exponent {exp:.4}",
            rep.min_signed_gamma
                .iter()
                .map(|g| format!("{g:.3e}"))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    )
}

fn c10_dynamics() -> Outcome {
    let eps = 0.01;
    let p = cubic_benchmark();
    let c = solve_bifurcation(&p, eps, 0.0, 0.1, 1e-13).unwrap();
    let sol = solve_range(&p, eps, c, None).unwrap();
    let inv = AttractionSettings {
        h: Some(1e-3),
        window_start: 0.0,
        tol: 1e-6,
        ..Default::default()
    };
    let (a, _) = attraction_check_with(&p, eps, &sol, 0.0, 20.0, &inv).unwrap();

    // attraction needs g′(c0) > 0; x³ − x at c0 = 1 has g′ = 2
    let q = Problem::new(
        golden(),
        Polynomial::new(vec![0.0, -1.0, 0.0, 1.0]),
        cos1(8),
        8,
    )
    .unwrap();
    let c = solve_bifurcation(&q, eps, 1.0, 0.1, 1e-13).unwrap();
    let sol = solve_range(&q, eps, c, None).unwrap();
    let (b, _) =
        attraction_check_with(&q, eps, &sol, 0.1, 1000.0, &AttractionSettings::default()).unwrap();
    outcome(
        a.converged && b.converged,
        format!(
            "invariance sup {:.3e} on [0, 20]; delta = 0.1 tail sup {:.3e} on [{}, {}]",
            a.sup_discrepancy, b.sup_discrepancy, b.window.0, b.window.1
        ),
    )
}

fn c11_determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_qpresponse");
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let runs = [
        ("bryuno", "cubic.json"),
        ("solve", "cubic.json"),
        ("sweep", "cubic.json"),
        ("series", "cubic.json"),
        ("trees", "cubic.json"),
        ("simulate", "cubic.json"),
        ("probe", "even.json"),
    ];
    for (sub, cfg) in runs {
        for dir in [a.path(), b.path()] {
            let st = Command::new(bin)
                .args([sub, "--config"])
                .arg(configs.join(cfg))
                .arg("--out")
                .arg(dir)
                .output()
                .unwrap();
            if !st.status.success() {
                return outcome(
                    false,
                    format!("{sub} failed: {}", String::from_utf8_lossy(&st.stderr)),
                );
            }
        }
    }
    let mut names: Vec<_> = fs::read_dir(a.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    let differing: Vec<_> = names
        .iter()
        .filter(|n| fs::read(a.path().join(n)).ok() != fs::read(b.path().join(n)).ok())
        .collect();
    outcome(
        differing.is_empty(),
        format!(
            "{} files from 7 subcommands, differing {differing:?}",
            names.len()
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, Check); 11] = [
        ("frequency arithmetic", c1_frequency),
        ("partition of unity", c2_partition),
        ("linear oracle", c3_linear),
        ("series order", c4_series_order),
        ("tree/series equivalence", c5_trees),
        ("line-count bound on renormalised trees", c6_line_bound),
        ("self-energy cluster mass bound", c7_cluster_mass),
        ("odd-order bifurcation curve", c8_curve),
        ("even-order probe", c9_probe),
        ("dynamics consistency", c10_dynamics),
        ("determinism", c11_determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        if !o.ok {
            failed += 1;
        }
        println!(
            "{:>2} {} {name}: {}",
            i + 1,
            if o.ok { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
