//! Acceptance gate. Each test prints one `[PASS]` / `[FAIL]` line for its
//! criterion, straight to stderr so it shows without `--nocapture`.
//!
//! Criteria 3 and 8 contain checks that an exact implementation fails for
//! statistical or mathematical reasons; their lines report the literal
//! outcome, while the assertions check the attainable form (see the notes at
//! each test).

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Mutex;
use std::time::Instant;

use cascade_core::{
    calibrate_general, calibrate_tree, cascade_sample_into, exact_err_l2, exact_err_worst_expected,
    general_tree_sample, max_range_variance, mc_errors, mc_errors_at, perturb, range_decompose,
    run_scaling, sample_2d, variance_by_level, Children, CholeskySampler, DataVector, DenseOracle,
    ExactMatrix, GeneralTree, McConfig, MechanismTag, NoiseSpec, PrivacyBudget, RangeQuery,
    RangeRelease, Rational, SeededRng, StreamState, TreeDepth, Workload,
};
use cascade_core::correlation::alternating_prefix_len;
use cascade_core::depth::heap;
use cascade_core::stats::{linear_fit, log_log_fit, Moments, SecondMoments};

static GATE: Mutex<()> = Mutex::new(());

fn gate() -> std::sync::MutexGuard<'static, ()> {
    GATE.lock().unwrap_or_else(|e| e.into_inner())
}

fn report(id: u32, name: &str, pass: bool, detail: &str) {
    let tag = if pass { "PASS" } else { "FAIL" };
    let mut err = std::io::stderr().lock();
    writeln!(err, "[{tag}] criterion {id:>2} {name}: {detail}").unwrap();
}

fn d(k: u32) -> TreeDepth {
    TreeDepth::new(k).unwrap()
}

/// Per-coordinate `mean(x²)` with its standard error (mean known to be zero).
struct SquareStats {
    s2: Vec<f64>,
    s4: Vec<f64>,
    count: f64,
}

impl SquareStats {
    fn new(dim: usize) -> Self {
        Self { s2: vec![0.0; dim], s4: vec![0.0; dim], count: 0.0 }
    }

    fn push(&mut self, x: &[f64]) {
        self.count += 1.0;
        for ((a, b), &v) in self.s2.iter_mut().zip(self.s4.iter_mut()).zip(x) {
            let v2 = v * v;
            *a += v2;
            *b += v2 * v2;
        }
    }

    /// `(estimate, standard error)` per coordinate.
    fn estimates(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.s2.iter().zip(&self.s4).map(|(&a, &b)| {
            let m2 = a / self.count;
            let m4 = b / self.count;
            (m2, ((m4 - m2 * m2).max(0.0) / self.count).sqrt())
        })
    }
}

/// Counts `|est - target| > z·se` over every coordinate; returns `(exceed, total, worst rel err)`.
fn count_exceed(stats: &SquareStats, target: f64, z: f64) -> (usize, usize, f64) {
    let mut exceed = 0;
    let mut worst = 0.0f64;
    for (est, se) in stats.estimates() {
        if (est - target).abs() > z * se {
            exceed += 1;
        }
        worst = worst.max((est - target).abs() / target);
    }
    (exceed, stats.s2.len(), worst)
}

// ---------------------------------------------------------------------------

#[test]
fn criterion_01_matrix_identities() {
    let _g = gate();
    let t = Instant::now();
    let oracle = DenseOracle::default();
    let half = Rational::new(1, 2);
    let c1: ExactMatrix = oracle.correlation(d(1)).unwrap();
    let p1: ExactMatrix = oracle.precision(d(1)).unwrap();
    let mut ok = c1.entries() == [Rational::from(1), -half, -half, Rational::from(1)];
    ok &= p1.entries() == [Rational::new(4, 3), Rational::new(2, 3), Rational::new(2, 3), Rational::new(4, 3)];
    let mut worst_diag = 0.0f64;
    let mut worst_inv = 0.0f64;
    let mut worst_row = 0.0f64;
    for k in 1..=10 {
        let c = oracle.correlation::<f64>(d(k)).unwrap();
        let p = oracle.precision::<f64>(d(k)).unwrap();
        for v in p.diagonal() {
            worst_diag = worst_diag.max((v - (1.0 + k as f64 / 3.0)).abs());
        }
        let prod = c.matmul(&p).unwrap();
        worst_inv = worst_inv.max(prod.max_abs_diff(&cascade_core::DenseMatrix::identity(c.dim())));
        let target = (0.5f64).powi(k as i32);
        for s in c.row_sums() {
            worst_row = worst_row.max((s - target).abs());
        }
    }
    ok &= worst_diag < 1e-12 && worst_inv < 1e-9 && worst_row < 1e-12;
    report(
        1,
        "matrix identities",
        ok,
        &format!(
            "C_1 and C_1^-1 exact; k=1..10 diag err {worst_diag:.1e}, |C P - I| {worst_inv:.1e}, row-sum err {worst_row:.1e} ({:.2}s)",
            t.elapsed().as_secs_f64()
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_02_sampler_covariance() {
    let _g = gate();
    const REPS: usize = 1_000_000;
    let mut rng = SeededRng::new(2001);
    let mut buf = Vec::new();
    let mut worst_cascade = 0.0f64;
    let mut worst_chol = 0.0f64;
    for k in 1..=6 {
        let depth = d(k);
        let n = depth.leaves();
        let c = DenseOracle::default().correlation::<f64>(depth).unwrap();
        let mut acc = SecondMoments::new(n);
        for _ in 0..REPS {
            cascade_sample_into(depth, 1.0, &mut rng, &mut buf).unwrap();
            acc.push(&buf[depth.internal_nodes()..]);
        }
        worst_cascade = worst_cascade.max(acc.max_abs_error(|i, j| *c.get(i, j)));

        let mut chol = CholeskySampler::new(&c).unwrap();
        let mut out = vec![0.0; n];
        let mut acc = SecondMoments::new(n);
        for _ in 0..REPS {
            chol.sample_into(1.0, &mut rng, &mut out).unwrap();
            acc.push(&out);
        }
        worst_chol = worst_chol.max(acc.max_abs_error(|i, j| *c.get(i, j)));
    }
    let ok = worst_cascade < 0.01 && worst_chol < 0.01;
    report(
        2,
        "sampler covariance",
        ok,
        &format!("k=1..6, 10^6 reps: cascade max entry err {worst_cascade:.4}, Cholesky reference {worst_chol:.4} (bound 0.01)"),
    );
    assert!(ok);
}

fn mixed_tree() -> GeneralTree {
    use Children::*;
    // root splits; left side is a unary chain into a split, right side is a
    // split with one unary child
    GeneralTree::new(vec![
        Two(1, 2),
        One(3),
        Two(4, 5),
        Two(6, 7),
        One(8),
        Leaf { slot: 0 },
        Leaf { slot: 1 },
        One(9),
        Leaf { slot: 2 },
        Leaf { slot: 3 },
    ])
    .unwrap()
}

/// Literal check: every node within 3 SE at 10^5 replicates.
///
/// With ~4,200 simultaneous comparisons at a 0.27% two-sided rate an exact
/// sampler is expected to exceed about 11 times, so the literal line is
/// reported as-is. The assertions check what is attainable: the exceedance
/// count is consistent with the Binomial(m, 0.0027) null (at most mean + 4
/// sd), and, at 10^6 replicates, every node of every k ≤ 10 is within 1% of
/// σ².
#[test]
fn criterion_03_equal_node_variance() {
    let _g = gate();
    const REPS: usize = 100_000;
    const SIGMA: f64 = 2.0;
    let target = SIGMA * SIGMA;
    let mut rng = SeededRng::new(3001);
    let mut buf = Vec::new();
    let mut exceed = 0;
    let mut total = 0;
    let mut parts = Vec::new();

    for k in 1..=10 {
        let depth = d(k);
        let mut st = SquareStats::new(depth.nodes());
        for _ in 0..REPS {
            cascade_sample_into(depth, SIGMA, &mut rng, &mut buf).unwrap();
            st.push(&buf);
        }
        let (e, m, _) = count_exceed(&st, target, 3.0);
        exceed += e;
        total += m;
    }
    parts.push(format!("cascade k=1..10 {exceed}/{total} nodes beyond 3 SE"));

    let trees = [("caterpillar(6)", GeneralTree::caterpillar(6)), ("balanced(11)", GeneralTree::balanced(11)), ("mixed", mixed_tree())];
    for (name, tree) in &trees {
        let mut st = SquareStats::new(tree.len());
        for _ in 0..REPS {
            let v = general_tree_sample(tree, SIGMA, &mut rng).unwrap();
            st.push(&v);
        }
        let (e, m, _) = count_exceed(&st, target, 3.0);
        exceed += e;
        total += m;
        parts.push(format!("{name} {e}/{m}"));
    }

    let mut st = SquareStats::new(9);
    for _ in 0..REPS {
        let g = sample_2d(d(1), d(1), SIGMA, &mut rng).unwrap();
        let cells: Vec<f64> = (0..3).flat_map(|r| (0..3).map(move |c| (r, c))).map(|(r, c)| g.get(r, c)).collect();
        st.push(&cells);
    }
    let (e, m, _) = count_exceed(&st, target, 3.0);
    exceed += e;
    total += m;
    parts.push(format!("2x2 grid cells/row/col/total sums {e}/{m}"));

    let p = 2.0 * (1.0 - 0.998_650_101_968_369_9); // two-sided tail beyond 3 SE
    let mean = total as f64 * p;
    let sd = (total as f64 * p * (1.0 - p)).sqrt();
    let literal = exceed == 0;
    report(
        3,
        "equal node variance (literal)",
        literal,
        &format!("{}; {exceed} of {total} beyond 3 SE (exact-sampler expectation {mean:.1} ± {sd:.1})", parts.join(", ")),
    );

    // 10^6-replicate companion
    let mut worst = 0.0f64;
    for k in 1..=10 {
        let depth = d(k);
        let mut st = SquareStats::new(depth.nodes());
        for _ in 0..10 * REPS {
            cascade_sample_into(depth, SIGMA, &mut rng, &mut buf).unwrap();
            st.push(&buf);
        }
        worst = worst.max(count_exceed(&st, target, 3.0).2);
    }
    let consistent = (exceed as f64) <= mean + 4.0 * sd;
    let companion = worst < 0.01 && consistent;
    report(
        3,
        "equal node variance (multiplicity-aware)",
        companion,
        &format!("exceedances within null mean + 4 sd: {consistent}; 10^6 reps k=1..10 worst node rel err {:.3}% (bound 1%)", 100.0 * worst),
    );
    assert!(companion);
}

#[test]
fn criterion_04_streaming() {
    let _g = gate();
    const REPS: usize = 1_000_000;
    const CORR_TRIALS: usize = 100_000;
    let mut rng = SeededRng::new(4001);
    let c4 = DenseOracle::default().correlation::<f64>(d(4)).unwrap();
    let mut acc = SecondMoments::new(16);
    let mut leaves = [0.0; 16];
    for _ in 0..REPS {
        let mut s = StreamState::new(1.0).unwrap();
        for v in leaves.iter_mut() {
            *v = s.next_noise(&mut rng);
        }
        acc.push(&leaves);
    }
    // the first 2^k stream leaves form a depth-k tree; its covariance is the
    // leading block of C_4, which is C_k
    let mut worst = 0.0f64;
    for k in 1..=4u32 {
        let n = 1usize << k;
        let ck = DenseOracle::default().correlation::<f64>(d(k)).unwrap();
        for i in 0..n {
            for j in 0..n {
                assert_eq!(ck.get(i, j), c4.get(i, j));
                worst = worst.max((acc.get(i, j) - ck.get(i, j)).abs());
            }
        }
    }

    // corr(X0, X1) at doublings 1->2, 2->4, 4->8, 8->16
    let mut xy = [[0.0f64; 3]; 4];
    for _ in 0..CORR_TRIALS {
        let mut s = StreamState::new(1.0).unwrap();
        let mut step = 0;
        for i in 0..16u64 {
            let full = s.root().filter(|_| i == s.capacity());
            s.next_noise(&mut rng);
            if let Some(x0) = full {
                let x1 = s.root().unwrap() - x0;
                xy[step][0] += x0 * x1;
                xy[step][1] += x0 * x0;
                xy[step][2] += x1 * x1;
                step += 1;
            }
        }
        assert_eq!(step, 4);
    }
    let corrs: Vec<f64> = xy.iter().map(|a| a[0] / (a[1] * a[2]).sqrt()).collect();
    let corr_ok = corrs.iter().all(|&r| (-0.53..=-0.47).contains(&r));
    let ok = worst < 0.01 && corr_ok;
    report(
        4,
        "streaming equivalence",
        ok,
        &format!(
            "k=1..4 max cov err {worst:.4} (bound 0.01); doubling corr {}",
            corrs.iter().map(|r| format!("{r:.4}")).collect::<Vec<_>>().join(", ")
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_05_calibration() {
    let _g = gate();
    let b = PrivacyBudget::new(0.1, 1e-9).unwrap();
    let tree = calibrate_tree(1 << 10, &b).unwrap();
    let want = (200.0 + 2000.0 / 3.0) * (2e9f64).ln();
    let rel = (tree.sigma_squared - want).abs() / want;
    let general = calibrate_general(1.0 + 10.0 / 3.0, &b).unwrap();
    let ok = rel < 1e-9 && general.sigma_squared == tree.sigma_squared;
    report(
        5,
        "calibration regression",
        ok,
        &format!(
            "sigma^2 {:.6} vs {want:.6} (rel {rel:.1e}); general form {:.6}",
            tree.sigma_squared, general.sigma_squared
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_06_nodal_utility() {
    let _g = gate();
    let sigma = 3.0;
    let mut worst_l2 = 0.0f64;
    let mut worst_w = 0.0f64;
    for k in 1..=10 {
        let n = 1usize << k;
        let w = Workload::nodal(n);
        let l2 = exact_err_l2(&w, d(k), sigma).unwrap();
        let want = (2 * n - 1) as f64 * sigma * sigma;
        worst_l2 = worst_l2.max((l2 - want).abs() / want);
        let we = exact_err_worst_expected(&w, d(k), sigma).unwrap();
        let want = (2.0 / PI).sqrt() * sigma;
        worst_w = worst_w.max((we - want).abs() / want);
    }
    let exact_ok = worst_l2 < 1e-12 && worst_w < 1e-12;

    let b = PrivacyBudget::new(0.5, 1e-6).unwrap();
    let cfg = McConfig { replicates: 4000, ..Default::default() };
    let mut mc_ok = true;
    let mut zs = Vec::new();
    for k in 1..=4 {
        let n = 1usize << k;
        let r = mc_errors(MechanismTag::Correlated, &Workload::nodal(n), &b, &cfg, 6000 + k as u64).unwrap();
        let l2 = (2 * n - 1) as f64 * r.sigma * r.sigma;
        let we = (2.0 / PI).sqrt() * r.sigma;
        let z1 = (r.err_l2 - l2) / r.std_err.err_l2;
        let z2 = (r.err_worst_expected - we) / r.std_err.err_worst_expected;
        mc_ok &= z1.abs() <= 3.0 && z2.abs() <= 3.0;
        zs.push(format!("k={k} z=({z1:+.2}, {z2:+.2})"));
    }
    let ok = exact_ok && mc_ok;
    report(
        6,
        "nodal utility",
        ok,
        &format!("exact rel err l2 {worst_l2:.1e}, worst-expected {worst_w:.1e} for k<=10; MC {}", zs.join(" ")),
    );
    assert!(ok);
}

struct ContinuousRun {
    ns: Vec<usize>,
    correlated: Vec<cascade_core::ErrorReport>,
    iid: Vec<cascade_core::ErrorReport>,
}

fn continuous_run() -> &'static ContinuousRun {
    static RUN: std::sync::OnceLock<ContinuousRun> = std::sync::OnceLock::new();
    RUN.get_or_init(|| {
        let b = PrivacyBudget::new(0.1, 1e-9).unwrap();
        let cfg = McConfig { replicates: 1000, ..Default::default() };
        let ns: Vec<usize> = (4..=10).map(|k| 1usize << k).collect();
        let run = |m| {
            ns.iter()
                .map(|&n| mc_errors(m, &Workload::continuous(n), &b, &cfg, 7000 + n as u64).unwrap())
                .collect::<Vec<_>>()
        };
        ContinuousRun { correlated: run(MechanismTag::Correlated), iid: run(MechanismTag::Iid), ns }
    })
}

#[test]
fn criterion_07_continuous_scaling() {
    let _g = gate();
    let run = continuous_run();
    let log_n: Vec<f64> = run.ns.iter().map(|&n| (n as f64).log2()).collect();
    let corr: Vec<f64> = run.correlated.iter().map(|r| r.err_worst_expected).collect();
    let iid: Vec<f64> = run.iid.iter().map(|r| r.err_worst_expected).collect();
    let fit_c = linear_fit(&log_n, &corr);
    let ns: Vec<f64> = run.ns.iter().map(|&n| n as f64).collect();
    let fit_i = log_log_fit(&ns, &iid);
    let below = run.ns.iter().zip(corr.iter().zip(&iid)).filter(|(&n, _)| n >= 64).all(|(_, (c, i))| c < i);
    let ok = fit_c.r_squared > 0.95 && (0.45..=0.55).contains(&fit_i.slope) && below;
    report(
        7,
        "continuous-query scaling",
        ok,
        &format!(
            "correlated err vs log2 n R^2 {:.4}; iid log-log slope {:.3}; correlated < iid for n>=64: {below} (n=1024: {:.1} vs {:.1})",
            fit_c.r_squared,
            fit_i.slope,
            corr.last().unwrap(),
            iid.last().unwrap()
        ),
    );
    assert!(ok);
}

/// The first inequality needs `E|Z| ≥ √(E Z²)`, which is backwards for a
/// Gaussian; for the continuous workload it is false in exact arithmetic
/// from depth 7 (k = 10: √(mean range var) = 2.180σ vs √(2/π)·√(max) =
/// 2.128σ). The line reports the literal chain with its slack; the assertion
/// is the second inequality, which holds for any distribution.
#[test]
fn criterion_08_error_chain() {
    let _g = gate();
    let run = continuous_run();
    let mut first = true;
    let mut second = true;
    let mut worst_margin = f64::INFINITY;
    for r in run.correlated.iter().chain(&run.iid) {
        let rms = r.rms_error();
        let a = r.err_worst_expected + 3.0 * r.std_err.err_worst_expected;
        let bnd = r.err_expected_worst + 6.0 * r.std_err.err_expected_worst;
        first &= rms <= a;
        second &= a <= bnd;
        worst_margin = worst_margin.min((a - rms) / r.sigma);
    }
    let ok = first && second;
    report(
        8,
        "error-metric chain",
        ok,
        &format!(
            "14 reports: rms <= worst-expected + 3 SE: {first} (tightest margin {worst_margin:+.3} sigma); worst-expected + 3 SE <= expected-worst + 6 SE: {second}"
        ),
    );
    assert!(second);
}

#[test]
fn criterion_09_max_range_variance() {
    let _g = gate();
    let mut ok = true;
    let mut vals = Vec::new();
    for k in 2..=10 {
        let v = max_range_variance(d(k)).unwrap();
        ok &= v <= (2 * k - 2) as f64;
        vals.push(format!("{v:.3}"));
    }
    let oracle = DenseOracle::default();
    let prefix_var = |kk: u32| {
        let len = alternating_prefix_len(kk).unwrap();
        oracle.range_variance::<f64>(d(kk)).unwrap().variance(0, len - 1)
    };
    let mut gaps = Vec::new();
    for kk in [3u32, 5, 7] {
        let gap = prefix_var(kk) - prefix_var(kk - 2);
        ok &= gap >= 2.0 / 3.0 - 1e-9;
        gaps.push(format!("{gap:.4}"));
    }
    report(
        9,
        "max range variance",
        ok,
        &format!("k=2..10 max {} (<= 2k-2); V_K - V_(K-2) for K=3,5,7: {}", vals.join(" "), gaps.join(" ")),
    );
    assert!(ok);
}

#[test]
fn criterion_10_range_decomposition() {
    let _g = gate();
    let k = d(4);
    let mut ok = true;
    let mut max_nodes = 0;
    let mut count = 0;
    for q in RangeQuery::all(k.leaves()) {
        let nodes = range_decompose(k, q).unwrap();
        max_nodes = max_nodes.max(nodes.len());
        let mut covered = vec![0u32; k.leaves()];
        for &m in &nodes {
            let (lo, hi) = heap::leaf_span(k.get(), m);
            for c in &mut covered[lo..=hi] {
                *c += 1;
            }
        }
        ok &= covered.iter().enumerate().all(|(i, &c)| c == u32::from(i >= q.lo && i <= q.hi));
        ok &= nodes.len() <= 2 * 4 - 2;
        count += 1;
    }
    report(
        10,
        "range decomposition",
        ok,
        &format!("{count} ranges at k=4 covered exactly and disjointly; max {max_nodes} nodes (bound 6)"),
    );
    assert!(ok);
}

#[test]
fn criterion_11_runtime() {
    let _g = gate();
    let rep = run_scaling(10, 20, 3, 1101).unwrap();
    let t17 = rep.rows.iter().find(|r| r.k == 17).unwrap().seconds;
    let t20 = rep.rows.last().unwrap().seconds;
    let ok = (0.9..=1.2).contains(&rep.slope()) && t17 < 1.0;
    report(
        11,
        "runtime linearity",
        ok,
        &format!("log-log slope k=10..20 {:.3} (r^2 {:.4}); k=17 {:.4}s; k=20 {:.4}s", rep.slope(), rep.fit.r_squared, t17, t20),
    );
    assert!(ok);
}

#[test]
fn criterion_12_consistency_unbiasedness() {
    let _g = gate();
    let b = PrivacyBudget::new(0.5, 1e-6).unwrap();
    let mut rng = SeededRng::new(1201);

    // disjoint-union additivity of the vector releases; the binary-tree
    // baseline answers from unreconciled node noise, so its gap is reported
    // for contrast only
    let mut worst_gap = 0.0f64;
    let mut bt_gap = 0.0f64;
    for mech in MechanismTag::ALL {
        for n in [16usize, 64, 256] {
            let x = DataVector::synthetic(n, &mut rng).unwrap();
            let spec = NoiseSpec::calibrated(mech, n, &b).unwrap();
            let release: Box<dyn RangeRelease> = match mech {
                MechanismTag::Correlated => Box::new(perturb(&x, &spec.sigma, &mut rng).unwrap()),
                MechanismTag::Iid => Box::new(cascade_core::iid_perturb_with(&x, &spec.sigma, &mut rng).unwrap()),
                MechanismTag::BinaryTree => Box::new(cascade_core::bt_perturb_with(&x, &spec.sigma, &mut rng).unwrap()),
            };
            let gap = if mech == MechanismTag::BinaryTree { &mut bt_gap } else { &mut worst_gap };
            for _ in 0..2000 {
                let q = cascade_core::sample_uniform_range(n, &mut rng);
                if q.lo == q.hi {
                    continue;
                }
                let mid = q.lo + rng.index(q.hi - q.lo);
                let whole = release.answer_range(q).unwrap();
                let parts = release.answer_range(RangeQuery { lo: q.lo, hi: mid }).unwrap()
                    + release.answer_range(RangeQuery { lo: mid + 1, hi: q.hi }).unwrap();
                *gap = gap.max((whole - parts).abs() / whole.abs().max(1.0));
            }
        }
    }

    // componentwise unbiasedness of the correlated release
    const REPS: usize = 100_000;
    let n = 16;
    let x = DataVector::synthetic(n, &mut rng).unwrap();
    let spec = NoiseSpec::calibrated(MechanismTag::Correlated, n, &b).unwrap();
    let mut stats = vec![Moments::default(); n];
    for _ in 0..REPS {
        let rel = perturb(&x, &spec.sigma, &mut rng).unwrap();
        for (i, st) in stats.iter_mut().enumerate() {
            st.push(rel.values()[i] - x.values()[i]);
        }
    }
    let zs: Vec<f64> = stats.iter().map(|s| s.mean() / s.std_err()).collect();
    let max_z = zs.iter().fold(0.0f64, |a, z| a.max(z.abs()));
    let ok = worst_gap < 1e-9 && max_z <= 3.0;
    report(
        12,
        "consistency and unbiasedness",
        ok,
        &format!("additivity worst rel gap {worst_gap:.1e} (bound 1e-9; unreconciled binary tree {bt_gap:.1e}); n=16, 10^5 reps, max |mean/SE| {max_z:.2} (bound 3)"),
    );
    assert!(ok);
}

#[test]
fn criterion_13_level_profiles() {
    let _g = gate();
    let b = PrivacyBudget::new(0.5, 1e-6).unwrap();
    let reps = 4000;
    let mut ok = true;
    let mut parts = Vec::new();
    for k in [5u32, 10] {
        for mech in [MechanismTag::Correlated, MechanismTag::BinaryTree] {
            let spec = NoiseSpec::calibrated(mech, 1 << k, &b).unwrap();
            let target = spec.sigma.sigma_squared;
            let prof = cascade_core::variance_by_level_at(&spec, d(k), reps, 1300 + k as u64).unwrap();
            let max_z = prof.iter().fold(0.0f64, |a, l| a.max(((l.mean_variance - target) / l.std_err).abs()));
            ok &= max_z <= 3.0;
            parts.push(format!("{} k={k} max|z| {max_z:.2}", mech.name()));
        }
        let prof = variance_by_level(MechanismTag::Iid, d(k), &b, reps, 1310 + k as u64).unwrap();
        let leaf = prof.last().unwrap().mean_variance;
        let worst = prof
            .iter()
            .map(|l| ((l.mean_variance / leaf) / 2f64.powi((k - l.level) as i32) - 1.0).abs())
            .fold(0.0f64, f64::max);
        ok &= worst <= 0.10;
        parts.push(format!("iid k={k} worst ratio err {:.1}%", 100.0 * worst));
    }
    report(13, "per-level variance profiles", ok, &parts.join("; "));
    assert!(ok);
}

#[test]
fn exhaustive_mc_matches_exact_at_small_depth() {
    // not a numbered criterion: sanity link between the exact and MC paths
    let _g = gate();
    let spec = NoiseSpec { mechanism: MechanismTag::Correlated, sigma: cascade_core::CalibratedSigma::manual(1.0).unwrap() };
    let cfg = McConfig { replicates: 4000, exhaustive: true, ..Default::default() };
    let r = mc_errors_at(&spec, &Workload::continuous(32), &cfg, 99).unwrap();
    let l2 = exact_err_l2(&Workload::continuous(32), d(5), 1.0).unwrap();
    assert!((r.err_l2 - l2).abs() < 4.0 * r.std_err.err_l2, "{} vs {l2}", r.err_l2);
    assert_eq!(r.queries_sampled, 528);
}
