//! Acceptance suite. Every criterion prints one `PASS`/`FAIL` line before
//! asserting, so `cargo test --test acceptance -- --nocapture` gives a
//! readable report.
//!
//! The full-scale runs (800 items on 57x57 for 10^6 steps, and the 931-item
//! high-dimensional run) are computed once and shared between criteria.

use std::collections::HashMap;
use std::fs;
use std::path::PathBuf;
use std::sync::{Arc, OnceLock};
use std::time::{Duration, Instant};

use acluster::behavior::{
    bm_probabilities, chi, compose_probabilities, delta_drop, epsilon_pick, lf_local_density,
    lf_probabilities,
};
use acluster::benchmark::{generate_blobs, generate_gaussian, GaussianSpec};
use acluster::dataset::write_dataset;
use acluster::experiment::{rerun_from_manifest, run_experiment, RunOptions, RunSummary, MANIFEST_FILE};
use acluster::metrics::{class_entropy, total_entropy, CarriedPolicy, EntropyRecorder};
use acluster::pheromone::{delta_index, transition_probabilities, weight_pheromone};
use acluster::{
    run, Dataset, DirectionWeights, FunctionType, Grid, Heading, LoadOptions, Pos, SimConfig, SimState,
    SubAssignment,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

const FULL_STEPS: u64 = 1_000_000;
const DESK_STEPS: u64 = 100_000;
const DESK_SEEDS: [u64; 5] = [1, 2, 3, 4, 5];
const BENCH_SEED: u64 = 1;

fn report(criterion: u8, name: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("[{verdict}] criterion {criterion:>2}: {name}: {detail}");
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"))
        .join("acceptance")
        .join(name);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_csv(ds: &Dataset, path: &PathBuf) {
    let mut buf = Vec::new();
    write_dataset(ds, &mut buf).unwrap();
    fs::write(path, buf).unwrap();
}

fn labeled() -> LoadOptions {
    LoadOptions {
        labeled: true,
        ..Default::default()
    }
}

// ---------------------------------------------------------------------------
// Shared runs

struct FullRun {
    summary: RunSummary,
    out: PathBuf,
    elapsed: Duration,
}

fn benchmark_file() -> &'static PathBuf {
    static FILE: OnceLock<PathBuf> = OnceLock::new();
    FILE.get_or_init(|| {
        let ds = generate_gaussian(
            &GaussianSpec::four_corners(),
            &mut ChaCha8Rng::seed_from_u64(BENCH_SEED),
        );
        let p = scratch("data").join("four_corners.csv");
        write_csv(&ds, &p);
        p
    })
}

fn full_config(ty: FunctionType) -> SimConfig {
    SimConfig {
        grid_side: 57,
        n_agents: 80,
        t_max: FULL_STEPS,
        k1: 0.1,
        k2: 0.3,
        function_type: ty,
        seed: BENCH_SEED,
        ..Default::default()
    }
}

fn full_options() -> RunOptions {
    RunOptions {
        entropy_interval: 1_000,
        ..Default::default()
    }
}

fn full_run(ty: FunctionType) -> &'static FullRun {
    static RUNS: [OnceLock<FullRun>; 4] =
        [OnceLock::new(), OnceLock::new(), OnceLock::new(), OnceLock::new()];
    RUNS[ty.number() as usize - 1].get_or_init(|| {
        let out = scratch(&format!("full_type{}", ty.number()));
        let start = Instant::now();
        let summary = run_experiment(
            &full_config(ty),
            benchmark_file(),
            &labeled(),
            &full_options(),
            &out,
        )
        .expect("full benchmark run");
        FullRun {
            summary,
            out,
            elapsed: start.elapsed(),
        }
    })
}

#[derive(Clone, Copy, Debug)]
struct DeskRun {
    initial: f64,
    last: f64,
    elapsed: Duration,
}

fn desk_run(ty: FunctionType, seed: u64) -> DeskRun {
    let ds = Arc::new(generate_gaussian(
        &GaussianSpec::four_corners_with(50),
        &mut ChaCha8Rng::seed_from_u64(seed),
    ));
    let cfg = SimConfig {
        grid_side: 29,
        n_agents: 21,
        t_max: DESK_STEPS,
        function_type: ty,
        seed,
        ..Default::default()
    };
    let mut rec = EntropyRecorder::new(DESK_STEPS, DESK_STEPS, CarriedPolicy::Exclude);
    let start = Instant::now();
    let out = run(&cfg, ds.clone(), &mut [&mut rec]).expect("desk run");
    let elapsed = start.elapsed();
    DeskRun {
        initial: rec.records[0].total,
        last: total_entropy(out.state.grid(), &ds, out.state.t()).total,
        elapsed,
    }
}

fn desk_runs() -> &'static HashMap<(u8, u64), DeskRun> {
    static RUNS: OnceLock<HashMap<(u8, u64), DeskRun>> = OnceLock::new();
    RUNS.get_or_init(|| {
        let mut m = HashMap::new();
        for ty in FunctionType::ALL {
            for seed in DESK_SEEDS {
                m.insert((ty.number(), seed), desk_run(ty, seed));
            }
        }
        m
    })
}

/// Means of consecutive non-overlapping windows of `window` steps starting
/// at `from`; only complete windows are kept.
fn window_means(series: &[(u64, f64)], from: u64, window: u64, t_max: u64) -> Vec<f64> {
    let mut means = Vec::new();
    let mut start = from;
    while start + window <= t_max {
        let vals: Vec<f64> = series
            .iter()
            .filter(|(t, _)| *t >= start && *t < start + window)
            .map(|(_, e)| *e)
            .collect();
        means.push(vals.iter().sum::<f64>() / vals.len() as f64);
        start += window;
    }
    means
}

// ---------------------------------------------------------------------------
// 1. Entropy decline

#[test]
fn criterion_01_entropy_decline() {
    let mut pass = true;
    let mut details = Vec::new();
    for ty in [FunctionType::Type1, FunctionType::Type2, FunctionType::Type4] {
        let run = full_run(ty);
        let series: Vec<(u64, f64)> = run.summary.entropy.iter().map(|r| (r.t, r.total)).collect();
        let e0 = series[0].1;
        let e_end = series.last().unwrap().1;
        assert_eq!(series.last().unwrap().0, FULL_STEPS);
        let declined = e_end < 0.5 * e0;
        let means = window_means(&series, 100_000, 10_000, FULL_STEPS);
        let rises: Vec<usize> = (1..means.len()).filter(|&i| means[i] > means[i - 1]).collect();
        let max_rise = rises
            .iter()
            .map(|&i| means[i] - means[i - 1])
            .fold(0.0f64, f64::max);
        pass &= declined && rises.is_empty();
        details.push(format!(
            "full {ty}: E0={e0:.4} E_end={e_end:.4} ratio={:.3} smoothed rises={} (max {max_rise:.4}) in {:.1?}",
            e_end / e0,
            rises.len(),
            run.elapsed
        ));
    }
    let desk = desk_runs();
    for ty in [FunctionType::Type1, FunctionType::Type2, FunctionType::Type4] {
        let r = desk[&(ty.number(), BENCH_SEED)];
        let ok = r.last < 0.5 * r.initial && r.elapsed < Duration::from_secs(30);
        pass &= ok;
        details.push(format!(
            "desk {ty}: E0={:.4} E_end={:.4} ratio={:.3} in {:.1?}",
            r.initial,
            r.last,
            r.last / r.initial,
            r.elapsed
        ));
    }
    report(1, "entropy decline", pass, &details.join("; "));
    assert!(pass, "{}", details.join("\n"));
}

// ---------------------------------------------------------------------------
// 2. Type #3 ranks worst

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[test]
fn criterion_02_type3_ranks_worst() {
    let desk = desk_runs();
    let med: Vec<(FunctionType, f64)> = FunctionType::ALL
        .iter()
        .map(|&ty| {
            (
                ty,
                median(DESK_SEEDS.iter().map(|&s| desk[&(ty.number(), s)].last).collect()),
            )
        })
        .collect();
    let m3 = med[2].1;
    let pass = med
        .iter()
        .filter(|(ty, _)| *ty != FunctionType::Type3)
        .all(|(_, m)| m3 > *m);
    let detail = med
        .iter()
        .map(|(ty, m)| format!("{ty} median {m:.4}"))
        .collect::<Vec<_>>()
        .join(", ");
    report(2, "type #3 has the highest median final entropy", pass, &detail);
    assert!(pass, "{detail}");
}

// ---------------------------------------------------------------------------
// 3. Cluster purity

#[test]
fn criterion_03_cluster_purity() {
    let run = full_run(FunctionType::Type1);
    let clusters = &run.summary.clusters;
    let purity = clusters.mean_purity(10);
    let big = clusters.clusters.iter().filter(|c| c.size >= 10).count();
    let pass = purity.is_some_and(|p| p >= 0.8);
    let detail = format!(
        "type #1, {} clusters, {big} of size >= 10, mean purity {purity:?}",
        clusters.n_clusters
    );
    report(3, "cluster purity", pass, &detail);
    assert!(pass, "{detail}");
}

// ---------------------------------------------------------------------------
// 4. Closed-form oracles

fn rel_err(got: f64, want: f64, scale: f64) -> f64 {
    let denom = got.abs().max(want.abs()).max(scale);
    if denom == 0.0 {
        0.0
    } else {
        (got - want).abs() / denom
    }
}

fn oracle_weight(sigma: f64, beta: f64, gamma: f64) -> f64 {
    (beta * (1.0 + sigma / (1.0 + gamma * sigma)).ln()).exp()
}

fn oracle_chi(n: usize, theta: f64, m: f64) -> f64 {
    if n == 0 {
        0.0
    } else {
        1.0 / (1.0 + (theta / n as f64).powf(m))
    }
}

fn oracle_delta(d: f64, k1: f64) -> f64 {
    k1 * k1 / ((k1 + d) * (k1 + d))
}

fn oracle_epsilon(d: f64, k2: f64) -> f64 {
    d * d / ((k2 + d) * (k2 + d))
}

fn oracle_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        s += (a[i] - b[i]) * (a[i] - b[i]);
    }
    (s / a.len() as f64).sqrt()
}

fn oracle_dmax(rows: &[Vec<f64>]) -> f64 {
    let mut m = 0.0f64;
    for a in rows {
        for b in rows {
            m = m.max(oracle_distance(a, b));
        }
    }
    if m == 0.0 {
        1.0
    } else {
        m
    }
}

fn torus_gap(a: usize, b: usize, side: usize) -> usize {
    let d = a.abs_diff(b);
    d.min(side - d)
}

/// Returns `(f, scale)` where `scale` is the summed magnitude of the terms.
fn oracle_lf_density(
    cells: &[Option<usize>],
    side: usize,
    centre: (usize, usize),
    item: usize,
    rows: &[Vec<f64>],
    s: usize,
    alpha: f64,
) -> (f64, f64) {
    let r = s / 2;
    let dmax = oracle_dmax(rows);
    let (mut sum, mut mag) = (0.0, 0.0);
    for y in 0..side {
        for x in 0..side {
            if (x, y) == centre {
                continue;
            }
            if torus_gap(x, centre.0, side) > r || torus_gap(y, centre.1, side) > r {
                continue;
            }
            if let Some(o) = cells[y * side + x] {
                let term = 1.0 - oracle_distance(&rows[item], &rows[o]) / dmax / alpha;
                sum += term;
                mag += term.abs();
            }
        }
    }
    let norm = (s * s) as f64;
    ((sum / norm).max(0.0), mag / norm)
}

fn oracle_lf(f: f64, k1: f64, k2: f64) -> (f64, f64) {
    let pick = k1 * k1 / ((k1 + f) * (k1 + f));
    let drop = if f >= k2 || 2.0 * f > 1.0 { 1.0 } else { 2.0 * f };
    (pick, drop)
}

fn oracle_bm(f: f64, k1: f64, k2: f64) -> (f64, f64) {
    (k1 * k1 / ((k1 + f) * (k1 + f)), f * f / ((k2 + f) * (k2 + f)))
}

#[test]
fn criterion_04_closed_form_oracles() {
    const N: usize = 10_000;
    const TOL: f64 = 1e-12;
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut worst: Vec<(&str, f64)> = Vec::new();

    let mut w = 0.0f64;
    for i in 0..N {
        let sigma = if i % 10 == 0 {
            0.0
        } else {
            rng.random::<f64>() * 50.0
        };
        let beta = if i % 2 == 0 {
            rng.random_range(0..=12) as f64 * 0.5
        } else {
            rng.random::<f64>() * 6.0
        };
        let gamma = rng.random::<f64>();
        w = w.max(rel_err(
            weight_pheromone(sigma, beta, gamma),
            oracle_weight(sigma, beta, gamma),
            0.0,
        ));
    }
    worst.push(("weight_pheromone", w));

    let mut w = 0.0f64;
    for _ in 0..N {
        let n = rng.random_range(0..=8);
        let theta = 0.1 + rng.random::<f64>() * 10.0;
        let m = 1.0 + 1e-3 + rng.random::<f64>() * 5.0;
        w = w.max(rel_err(chi(n, theta, m), oracle_chi(n, theta, m), 0.0));
    }
    worst.push(("chi", w));

    let (mut wd, mut we) = (0.0f64, 0.0f64);
    for _ in 0..N {
        let d = rng.random::<f64>();
        let k = 1e-3 + rng.random::<f64>();
        wd = wd.max(rel_err(delta_drop(d, k), oracle_delta(d, k), 0.0));
        we = we.max(rel_err(epsilon_pick(d, k), oracle_epsilon(d, k), 0.0));
    }
    worst.push(("delta_drop", wd));
    worst.push(("epsilon_pick", we));

    let mut w = 0.0f64;
    for _ in 0..N {
        let side = rng.random_range(3..=8);
        let s = if side >= 5 && rng.random::<bool>() { 5 } else { 3 };
        let dim = rng.random_range(1..=4);
        let n_items = rng.random_range(1..=side * side);
        let rows: Vec<Vec<f64>> = (0..n_items)
            .map(|_| (0..dim).map(|_| rng.random::<f64>()).collect())
            .collect();
        let ds = Dataset::from_rows(rows.clone(), None).unwrap();
        let mut grid = Grid::new(side).unwrap();
        let mut cells = vec![None; side * side];
        let slots = rand::seq::index::sample(&mut rng, side * side, n_items);
        for (id, cell) in slots.into_iter().enumerate() {
            cells[cell] = Some(id);
            grid.put_item(grid.pos(cell), id as u32).unwrap();
        }
        let centre = (rng.random_range(0..side), rng.random_range(0..side));
        let item = rng.random_range(0..n_items);
        let alpha = 0.05 + rng.random::<f64>();
        let got = lf_local_density(&grid, Pos::new(centre.0, centre.1), item as u32, &ds, s, alpha);
        let (want, scale) = oracle_lf_density(&cells, side, centre, item, &rows, s, alpha);
        w = w.max(rel_err(got, want, scale));
    }
    worst.push(("lf_local_density", w));

    let (mut wl, mut wb) = (0.0f64, 0.0f64);
    for i in 0..N {
        let f = if i % 20 == 0 { 0.0 } else { rng.random::<f64>() };
        let k1 = 1e-3 + rng.random::<f64>();
        let k2 = if i % 7 == 0 { f } else { 1e-3 + rng.random::<f64>() };
        let (gp, gd) = lf_probabilities(f, k1, k2);
        let (wp, wdr) = oracle_lf(f, k1, k2);
        wl = wl.max(rel_err(gp, wp, 0.0)).max(rel_err(gd, wdr, 0.0));
        let (gp, gd) = bm_probabilities(f, k1, k2);
        let (wp, wdr) = oracle_bm(f, k1, k2);
        wb = wb.max(rel_err(gp, wp, 0.0)).max(rel_err(gd, wdr, 0.0));
    }
    worst.push(("lf_probabilities", wl));
    worst.push(("bm_probabilities", wb));

    let mut examples_ok = true;
    let close = |got: f64, want: f64, tol: f64| (got - want).abs() <= tol;
    examples_ok &= close(weight_pheromone(0.0, 3.5, 0.2), 1.0, 0.0);
    examples_ok &= close(
        weight_pheromone(1.0, 3.5, 0.2),
        (1.0f64 + 1.0 / 1.2).powf(3.5),
        1e-12,
    );
    examples_ok &= close(weight_pheromone(1e12, 3.5, 0.2), 6f64.powf(3.5), 1e-6);
    examples_ok &= close(chi(5, 5.0, 2.0), 0.5, 0.0);
    examples_ok &= close(chi(0, 5.0, 2.0), 0.0, 0.0);
    examples_ok &= close(delta_drop(0.0, 0.1), 1.0, 0.0);
    examples_ok &= close(delta_drop(0.1, 0.1), 0.25, 1e-15);
    examples_ok &= close(delta_drop(1.0, 0.1), 0.00826, 1e-5);
    examples_ok &= close(epsilon_pick(0.0, 0.3), 0.0, 0.0);
    examples_ok &= close(epsilon_pick(0.3, 0.3), 0.25, 1e-15);
    examples_ok &= close(epsilon_pick(1.0, 0.3), 0.5917, 1e-4);
    let (p, d) = compose_probabilities(FunctionType::Type1, SubAssignment::A, 0.5, 0.6, 0.8).unwrap();
    examples_ok &= close(p, 0.3, 1e-15);
    examples_ok &= close(d, 0.4, 1e-15);
    let (p, d) = compose_probabilities(FunctionType::Type1, SubAssignment::A, 0.0, 0.6, 0.8).unwrap();
    examples_ok &= close(p, 0.6, 0.0);
    examples_ok &= close(d, 0.0, 0.0);
    examples_ok &= compose_probabilities(FunctionType::Type4, SubAssignment::A, 0.5, 0.5, 0.5).is_err();
    let (p, d) = lf_probabilities(0.0, 0.1, 0.15);
    examples_ok &= close(p, 1.0, 0.0);
    examples_ok &= close(d, 0.0, 0.0);
    examples_ok &= close(lf_probabilities(0.15, 0.1, 0.15).1, 1.0, 0.0);
    examples_ok &= close(lf_probabilities(0.1, 0.1, 0.15).0, 0.25, 1e-15);
    examples_ok &= close(bm_probabilities(1.0, 0.1, 0.3).0, 0.00826, 1e-5);
    examples_ok &= close(bm_probabilities(0.3, 0.1, 0.3).1, 0.25, 1e-15);
    let ds = Dataset::from_rows(vec![vec![0.0]; 9], None).unwrap();
    let mut g = Grid::new(5).unwrap();
    let mut id = 0;
    for y in 1..=3 {
        for x in 1..=3 {
            g.put_item(Pos::new(x, y), id).unwrap();
            id += 1;
        }
    }
    examples_ok &= close(
        lf_local_density(&g, Pos::new(2, 2), 4, &ds, 3, 0.5),
        8.0 / 9.0,
        1e-15,
    );
    examples_ok &= close(
        lf_local_density(&Grid::new(5).unwrap(), Pos::new(2, 2), 4, &ds, 3, 0.5),
        0.0,
        0.0,
    );

    let pass = examples_ok && worst.iter().all(|(_, e)| *e <= TOL);
    let detail = format!(
        "{N} inputs each, worst relative errors: {}; worked examples {}",
        worst
            .iter()
            .map(|(n, e)| format!("{n} {e:.1e}"))
            .collect::<Vec<_>>()
            .join(", "),
        if examples_ok { "ok" } else { "MISMATCH" }
    );
    report(4, "closed-form oracles", pass, &detail);
    assert!(pass, "{detail}");
}

// ---------------------------------------------------------------------------
// 5. Transition probabilities

#[test]
fn criterion_05_transition_probabilities() {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let weights = DirectionWeights::default();
    let mut worst = 0.0f64;
    let mut blocked = 0;
    let mut bad_blocked = 0;
    for _ in 0..100_000 {
        let side = rng.random_range(3..=9);
        let mut grid = Grid::new(side).unwrap();
        for i in 0..grid.n_cells() {
            let p = grid.pos(i);
            let sigma = if rng.random::<f64>() < 0.3 {
                0.0
            } else {
                rng.random::<f64>() * 20.0
            };
            grid.set_pheromone(p, sigma);
            if rng.random::<f64>() < 0.4 {
                grid.put_agent(p, i as u32).unwrap();
            }
        }
        let pos = Pos::new(rng.random_range(0..side), rng.random_range(0..side));
        let heading = Heading::random(&mut rng);
        let cfg = SimConfig {
            beta: rng.random::<f64>() * 6.0,
            gamma: rng.random::<f64>(),
            ..Default::default()
        };
        match transition_probabilities(&grid, pos, heading, &cfg, &weights) {
            Some(p) => {
                worst = worst.max((p.iter().sum::<f64>() - 1.0).abs());
                for (dir, n) in grid.neighbors8(pos).iter().enumerate() {
                    if grid.agent_at(*n).is_some() && p[dir] != 0.0 {
                        worst = f64::INFINITY;
                    }
                }
            }
            None => {
                blocked += 1;
                if grid.neighbors8(pos).iter().any(|n| grid.agent_at(*n).is_none()) {
                    bad_blocked += 1;
                }
            }
        }
    }
    let sums_ok = worst <= 1e-12 && bad_blocked == 0;

    // One agent, no deposition: the pheromone field stays uniformly zero.
    let ds = Arc::new(Dataset::from_rows(vec![vec![0.0]], None).unwrap());
    let cfg = SimConfig {
        grid_side: 15,
        eta: 0.0,
        p_dep: 0.0,
        seed: 5,
        ..Default::default()
    };
    let mut state = SimState::from_layout(
        cfg,
        ds,
        &[Pos::new(0, 0)],
        &[(Pos::new(7, 7), Heading::new(0).unwrap())],
    )
    .unwrap();
    const MOVES: usize = 1_000_000;
    let mut counts = [0u64; 5];
    for _ in 0..MOVES {
        let before = state.agents()[0].heading;
        state.move_and_deposit(0);
        counts[delta_index(before, state.agents()[0].heading.index())] += 1;
    }
    let w = DirectionWeights::default().0;
    let mass = [w[0], 2.0 * w[1], 2.0 * w[2], 2.0 * w[3], w[4]];
    let total: f64 = mass.iter().sum();
    let stat: f64 = counts
        .iter()
        .zip(mass)
        .map(|(&o, m)| {
            let e = MOVES as f64 * m / total;
            (o as f64 - e).powi(2) / e
        })
        .sum();
    let critical = ChiSquared::new(4.0).unwrap().inverse_cdf(0.99);
    let hist_ok = stat < critical;

    let pass = sums_ok && hist_ok;
    let detail = format!(
        "10^5 configurations, max |sum-1| = {worst:.1e}, {blocked} fully blocked; heading changes {counts:?}, \
         chi2 = {stat:.2} vs critical {critical:.2} (df 4, 0.01)"
    );
    report(5, "transition normalization and turn histogram", pass, &detail);
    assert!(pass, "{detail}");
}

// ---------------------------------------------------------------------------
// 6. Item-free reduction

#[test]
fn criterion_06_item_free_deposition() {
    // A single item is picked up at the start and never dropped, since no
    // agent ever sees an item nearby: the grid holds zero items throughout.
    let ds = Arc::new(Dataset::from_rows(vec![vec![0.0]], None).unwrap());
    let mut pass = true;
    let mut agent_steps = 0u64;
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    for ty in FunctionType::ALL {
        let cfg = SimConfig {
            grid_side: 20,
            function_type: ty,
            seed: ty.number() as u64,
            ..Default::default()
        };
        let mut agents = Vec::new();
        let cells = rand::seq::index::sample(&mut rng, 400, 12);
        for c in cells.into_iter() {
            agents.push((Pos::new(c % 20, c / 20), Heading::random(&mut rng)));
        }
        let first = agents[0].0;
        let mut state = SimState::from_layout(cfg.clone(), ds.clone(), &[first], &agents).unwrap();
        state.force_pick(0).unwrap();
        for _ in 0..5_000 {
            state.step();
            pass &= state.grid().resident_items() == 0;
            pass &= state.last_deposits().len() == agents.len();
            pass &= state.last_deposits().iter().all(|&d| d == cfg.eta);
            agent_steps += agents.len() as u64;
        }
    }
    let detail = format!("{agent_steps} agent-steps over types #1-#4, every deposit == eta = 0.07");
    report(6, "item-free deposition", pass, &detail);
    assert!(pass, "{detail}");
}

// ---------------------------------------------------------------------------
// 7. Entropy oracle

fn oracle_class_entropy(
    cells: &[Option<usize>],
    side: usize,
    class_of: &[usize],
    class: usize,
) -> Option<f64> {
    let mut sum = 0usize;
    let mut n = 0usize;
    for y in 0..side {
        for x in 0..side {
            let Some(i) = cells[y * side + x] else { continue };
            if class_of[i] != class {
                continue;
            }
            n += 1;
            let mut same = 0;
            for yy in 0..side {
                for xx in 0..side {
                    let gx = torus_gap(x, xx, side);
                    let gy = torus_gap(y, yy, side);
                    if gx.max(gy) != 1 {
                        continue;
                    }
                    if let Some(j) = cells[yy * side + xx] {
                        if class_of[j] == class {
                            same += 1;
                        }
                    }
                }
            }
            sum += 8 - same;
        }
    }
    (n > 0).then(|| sum as f64 / (n * 8) as f64)
}

#[test]
fn criterion_07_entropy_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let mut mismatches = 0;
    let mut compared = 0;
    for _ in 0..1_000 {
        let side = rng.random_range(3..=9);
        let n_items = rng.random_range(1..=side * side);
        let n_classes = rng.random_range(1..=4usize).min(n_items);
        let labels: Vec<String> = (0..n_items)
            .map(|i| {
                let k = if i < n_classes {
                    i
                } else {
                    rng.random_range(0..n_classes)
                };
                format!("C{k}")
            })
            .collect();
        let class_of: Vec<usize> = labels.iter().map(|l| l[1..].parse().unwrap()).collect();
        let ds = Dataset::from_rows(vec![vec![0.0]; n_items], Some(labels)).unwrap();
        let mut grid = Grid::new(side).unwrap();
        let mut cells = vec![None; side * side];
        for (id, cell) in rand::seq::index::sample(&mut rng, side * side, n_items)
            .into_iter()
            .enumerate()
        {
            cells[cell] = Some(id);
            grid.put_item(grid.pos(cell), id as u32).unwrap();
        }
        for k in 0..n_classes {
            let got = class_entropy(&grid, &ds, &format!("C{k}")).unwrap();
            let want = oracle_class_entropy(&cells, side, &class_of, k).unwrap();
            compared += 1;
            if got != want {
                mismatches += 1;
            }
        }
    }

    let one = |n: usize, positions: &[(usize, usize)]| {
        let ds = Dataset::from_rows(vec![vec![0.0]; n], Some(vec!["A".to_string(); n])).unwrap();
        let mut g = Grid::new(9).unwrap();
        for (id, &(x, y)) in positions.iter().enumerate() {
            g.put_item(Pos::new(x, y), id as u32).unwrap();
        }
        class_entropy(&g, &ds, "A").unwrap()
    };
    let block: Vec<(usize, usize)> = (3..6).flat_map(|y| (3..6).map(move |x| (x, y))).collect();
    let worked =
        one(1, &[(4, 4)]) == 1.0 && one(2, &[(4, 4), (5, 4)]) == 0.875 && one(9, &block) == 32.0 / 72.0;

    let pass = mismatches == 0 && worked;
    let detail = format!(
        "1000 random grids, {compared} class values, {mismatches} mismatches; worked configurations {}",
        if worked { "exact" } else { "MISMATCH" }
    );
    report(7, "entropy metric oracle", pass, &detail);
    assert!(pass, "{detail}");
}

// ---------------------------------------------------------------------------
// 8. Conservation and determinism

#[test]
fn criterion_08_conservation_and_determinism() {
    let run = full_run(FunctionType::Type1);
    let state = &run.summary.final_state;
    let conserved = state.grid().resident_items() == 800 && state.laden_agents() == 0;
    let invariants = state.check_invariants().is_ok();

    let again = scratch("full_type1_rerun");
    rerun_from_manifest(&run.out.join(MANIFEST_FILE), &again).expect("rerun from manifest");
    let mut differing = Vec::new();
    for f in &run.summary.manifest.outputs {
        if fs::read(run.out.join(f)).unwrap() != fs::read(again.join(f)).unwrap() {
            differing.push(f.clone());
        }
    }

    let pass = conserved && invariants && differing.is_empty();
    let detail = format!(
        "type #1 full run: invariants checked every {} steps without violation, {} items resident at output, \
         {} output files compared, differing: {differing:?}",
        run.summary.manifest.options.entropy_interval,
        state.grid().resident_items(),
        run.summary.manifest.outputs.len()
    );
    report(8, "conservation and determinism", pass, &detail);
    assert!(pass, "{detail}");
}

// ---------------------------------------------------------------------------
// 9. Vote law

/// Exact probability that at least half of independent votes pass.
fn poisson_binomial_majority(p: &[f64]) -> f64 {
    let n = p.len();
    let mut total = 0.0;
    for mask in 0u32..(1 << n) {
        let mut prob = 1.0;
        for (i, pi) in p.iter().enumerate() {
            prob *= if mask >> i & 1 == 1 { *pi } else { 1.0 - pi };
        }
        if 2 * mask.count_ones() as usize >= n {
            total += prob;
        }
    }
    total
}

struct VoteCase {
    ty: FunctionType,
    sub: SubAssignment,
    pick: bool,
    centre: f64,
    neighbours: Vec<f64>,
}

/// Builds a 5x5 state whose centre (2, 2) holds the agent (agent index 0
/// for sub-assignment A, 1 for B) and, for pick cases, the centre item.
/// For drop cases the centre item is picked up first.
fn vote_state(case: &VoteCase, seed: u64) -> SimState {
    let mut rows = vec![vec![case.centre]];
    rows.extend(case.neighbours.iter().map(|&v| vec![v]));
    // Anchor the normalization at d_max = 1.
    rows.push(vec![0.0]);
    rows.push(vec![1.0]);
    let ds = Arc::new(Dataset::from_rows(rows, None).unwrap());
    let centre = Pos::new(2, 2);
    let ring = Grid::new(5).unwrap().neighbors8(centre);
    let mut positions = vec![centre];
    positions.extend(ring.iter().take(case.neighbours.len()));
    positions.push(Pos::new(0, 0));
    positions.push(Pos::new(4, 0));
    let here = (centre, Heading::new(0).unwrap());
    let (agents, me) = match case.sub {
        SubAssignment::A => (vec![here], 0),
        SubAssignment::B => (vec![(Pos::new(0, 4), Heading::new(0).unwrap()), here], 1),
    };
    let cfg = SimConfig {
        grid_side: 5,
        function_type: case.ty,
        seed,
        ..Default::default()
    };
    let mut state = SimState::from_layout(cfg, ds, &positions, &agents).unwrap();
    if !case.pick {
        state.force_pick(me).unwrap();
    }
    state
}

fn oracle_vote_probability(case: &VoteCase, cfg: &SimConfig) -> f64 {
    let n = case.neighbours.len();
    if n == 0 {
        return if case.pick { 1.0 } else { 0.0 };
    }
    let c = oracle_chi(n, cfg.theta_count, cfg.steepness);
    let probs: Vec<f64> = case
        .neighbours
        .iter()
        .map(|&v| {
            let d = (case.centre - v).abs();
            let (eps, del) = (oracle_epsilon(d, cfg.k2), oracle_delta(d, cfg.k1));
            let dense = matches!(case.sub, SubAssignment::A);
            match (case.ty, dense, case.pick) {
                (FunctionType::Type1, _, true) | (FunctionType::Type2, true, true) => (1.0 - c) * eps,
                (FunctionType::Type1, _, false) | (FunctionType::Type2, true, false) => c * del,
                (FunctionType::Type3, true, true) => 1.0 - c,
                (FunctionType::Type3, true, false) => c,
                (_, false, true) => eps,
                (_, false, false) => del,
                (FunctionType::Type4, _, _) => unreachable!(),
            }
        })
        .collect();
    poisson_binomial_majority(&probs)
}

#[test]
fn criterion_09_vote_law() {
    use FunctionType::*;
    use SubAssignment::*;
    let mut cases = vec![
        VoteCase {
            ty: Type2,
            sub: B,
            pick: true,
            centre: 0.0,
            neighbours: vec![1.0, 1.0],
        },
        VoteCase {
            ty: Type1,
            sub: A,
            pick: false,
            centre: 0.5,
            neighbours: vec![0.5; 8],
        },
        VoteCase {
            ty: Type1,
            sub: A,
            pick: true,
            centre: 0.5,
            neighbours: vec![0.5; 8],
        },
        VoteCase {
            ty: Type1,
            sub: A,
            pick: true,
            centre: 0.3,
            neighbours: vec![],
        },
        VoteCase {
            ty: Type1,
            sub: A,
            pick: false,
            centre: 0.3,
            neighbours: vec![],
        },
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    for ty in [Type1, Type2, Type3] {
        for sub in [A, B] {
            for pick in [true, false] {
                for n in [1usize, 3, 4, 6, 8] {
                    cases.push(VoteCase {
                        ty,
                        sub,
                        pick,
                        centre: rng.random::<f64>(),
                        neighbours: (0..n).map(|_| rng.random::<f64>()).collect(),
                    });
                }
            }
        }
    }

    const TRIALS: u64 = 1_000_000;
    let mut failures = Vec::new();
    let mut worst_z = 0.0f64;
    let mut examples = Vec::new();
    for (k, case) in cases.iter().enumerate() {
        let mut state = vote_state(case, 9_000 + k as u64);
        let me = if case.sub == B { 1 } else { 0 };
        assert_eq!(state.agents()[me].sub, case.sub);
        let want = oracle_vote_probability(case, state.config());
        let mut hits = 0u64;
        for _ in 0..TRIALS {
            let ok = if case.pick {
                state.vote_pick(me)
            } else {
                state.vote_drop(me)
            };
            hits += ok as u64;
        }
        let freq = hits as f64 / TRIALS as f64;
        let se = (want * (1.0 - want) / TRIALS as f64).sqrt();
        let z = if se == 0.0 {
            if freq == want {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (freq - want).abs() / se
        };
        worst_z = worst_z.max(z);
        if z > 3.0 {
            failures.push(format!(
                "case {k} ({} {:?} n={}): {freq} vs {want}",
                case.ty,
                case.sub,
                case.neighbours.len()
            ));
        }
        if k < 2 {
            examples.push(want);
        }
    }
    let examples_ok = (examples[0] - 0.833_304_156_016_946).abs() < 1e-12
        && (examples[1] - 0.955_637_330_564_557).abs() < 1e-12;
    let pass = failures.is_empty() && examples_ok;
    let detail = format!(
        "{} neighbourhoods x {TRIALS} trials, worst |z| = {worst_z:.2}; exact n=2 #2(b) pick {:.4}, n=8 #1 drop {:.4}; failures {failures:?}",
        cases.len(),
        examples[0],
        examples[1]
    );
    report(9, "vote law", pass, &detail);
    assert!(pass, "{detail}");
}

// ---------------------------------------------------------------------------
// 10. High-dimensional run shape

#[test]
fn criterion_10_high_dimensional_listing() {
    let ds = generate_blobs(931, 50, 12, 0.08, &mut ChaCha8Rng::seed_from_u64(10)).unwrap();
    let dir = scratch("blobs");
    let data = dir.join("blobs.csv");
    write_csv(&ds, &data);
    let cfg = SimConfig {
        grid_side: 61,
        n_agents: 91,
        t_max: FULL_STEPS,
        function_type: FunctionType::Type2,
        seed: 10,
        ..Default::default()
    };
    let out = dir.join("out");
    let start = Instant::now();
    let summary = run_experiment(&cfg, &data, &labeled(), &full_options(), &out).expect("931-item run");
    let elapsed = start.elapsed();

    let listing = fs::read_to_string(out.join("clusters.txt")).unwrap();
    let mut listed = 0;
    let mut well_formed = true;
    let mut lines = 0;
    for line in listing.lines().filter(|l| !l.starts_with('#')) {
        lines += 1;
        let Some((tag, rest)) = line.split_once(") ") else {
            well_formed = false;
            continue;
        };
        well_formed &= tag.starts_with('(') && tag[1..].chars().all(|c| c.is_ascii_uppercase());
        well_formed &= rest.ends_with('.');
        listed += rest.trim_end_matches('.').split(", ").count();
    }
    let pass = summary.final_state.t() >= FULL_STEPS
        && summary.final_state.grid().resident_items() == 931
        && well_formed
        && listed == 931
        && lines == summary.clusters.n_clusters;
    let first = listing.lines().find(|l| l.starts_with("(A)")).unwrap_or("");
    let preview: String = first.chars().take(60).collect();
    let detail = format!(
        "931 items x 50 features, 61x61, 91 type #2 ants, {} steps + {} drain in {elapsed:.1?}; \
         {} clusters listing {listed} items, e.g. `{preview}...`",
        FULL_STEPS, summary.drain_steps, summary.clusters.n_clusters
    );
    report(10, "high-dimensional run and cluster listing", pass, &detail);
    assert!(pass, "{detail}");
}
