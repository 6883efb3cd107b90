use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::json;

use cascade_core::{
    bt_perturb_with, calibrate_general, calibrate_iid, calibrate_tree, cascade_sample, iid_perturb_with,
    mc_errors, perturb, run_scaling, variance_by_level, DataVector, ErrorReport, McConfig,
    MechanismTag, NoiseSpec, NoiseTreeRecord, PrivacyBudget, RangeQuery, RangeRelease, SeededRng,
    TreeDepth, Workload,
};

use crate::args::{
    BudgetArgs, CalibrateArgs, CalibrationMode, Cli, Command, ErrorsArgs, LevelsArgs, PerturbArgs,
    SampleArgs, ScalingArgs, TreeFormat, WorkloadArg,
};
use crate::output::{csv_bytes, emit, Failure, Outcome};

pub fn dispatch(cli: &Cli) -> Outcome<()> {
    let out = cli.out.as_deref();
    let seed = cli.seed;
    let cmd = &cli.command;
    match cmd {
        Command::Sample(a) => sample(a, seed, out, cmd),
        Command::Calibrate(a) => calibrate(a, seed, out, cmd),
        Command::Perturb(a) => perturb_cmd(a, seed, out, cmd),
        Command::Errors(a) => errors(a, seed, out, cmd),
        Command::Scaling(a) => scaling(a, seed, out, cmd),
        Command::Levels(a) => levels(a, seed, out, cmd),
    }
}

fn budget(b: &BudgetArgs) -> Outcome<PrivacyBudget> {
    Ok(PrivacyBudget::new(b.epsilon, b.delta)?)
}

fn sample(a: &SampleArgs, seed: u64, out: Option<&Path>, cmd: &Command) -> Outcome<()> {
    let k = TreeDepth::new(a.k)?;
    let tree = cascade_sample(k, a.sigma, &mut SeededRng::new(seed))?;
    let rec = NoiseTreeRecord::new(&tree, seed);
    let bytes = match a.format {
        TreeFormat::Json => {
            let mut s = rec.to_json();
            s.push('\n');
            s.into_bytes()
        }
        TreeFormat::Bin if out.is_none() => {
            return Err(Failure::Usage("--format bin needs --out".into()));
        }
        TreeFormat::Bin => rec.to_bytes(),
    };
    let summary = json!({ "depth": a.k, "sigma": a.sigma, "nodes": k.nodes() });
    emit(out, &bytes, seed, cmd, vec![], summary)
}

#[derive(Serialize)]
struct CalibrationOut {
    n: usize,
    epsilon: f64,
    delta: f64,
    mode: CalibrationMode,
    sigma: f64,
    sigma_squared: f64,
    source: cascade_core::CalibrationSource,
}

fn calibrate(a: &CalibrateArgs, seed: u64, out: Option<&Path>, cmd: &Command) -> Outcome<()> {
    let b = budget(&a.budget)?;
    let s = match a.mode {
        CalibrationMode::Tree => calibrate_tree(a.n, &b)?,
        CalibrationMode::Iid => calibrate_iid(&b)?,
        CalibrationMode::General(diag) => calibrate_general(diag, &b)?,
    };
    let res = CalibrationOut {
        n: a.n,
        epsilon: b.epsilon(),
        delta: b.delta(),
        mode: a.mode,
        sigma: s.sigma,
        sigma_squared: s.sigma_squared,
        source: s.source,
    };
    let mut text = serde_json::to_string_pretty(&res)?;
    text.push('\n');
    let summary = serde_json::to_value(&res)?;
    emit(out, text.as_bytes(), seed, cmd, vec![], summary)
}

fn read_vector(path: &Path) -> Outcome<DataVector> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut values = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let field = rec.get(0).unwrap_or("");
        let v: f64 = field
            .parse()
            .map_err(|_| Failure::Invalid(format!("line {}: not a number: {field:?}", line + 1)))?;
        values.push(v);
    }
    Ok(DataVector::new(values)?)
}

fn perturb_cmd(a: &PerturbArgs, seed: u64, out: Option<&Path>, cmd: &Command) -> Outcome<()> {
    let b = budget(&a.budget)?;
    let x = match &a.input {
        Some(p) => read_vector(p)?,
        None => DataVector::synthetic(a.n, &mut SeededRng::derive(seed, 0))?,
    };
    let spec = NoiseSpec::calibrated(a.mechanism, x.len(), &b)?;
    let mut rng = SeededRng::derive(seed, 1);
    let values: Vec<f64> = match a.mechanism {
        MechanismTag::Correlated => perturb(&x, &spec.sigma, &mut rng)?.values().to_vec(),
        MechanismTag::Iid => iid_perturb_with(&x, &spec.sigma, &mut rng)?.values().to_vec(),
        MechanismTag::BinaryTree => {
            let rel = bt_perturb_with(&x, &spec.sigma, &mut rng)?;
            (0..x.len())
                .map(|i| rel.answer_range(RangeQuery { lo: i, hi: i }))
                .collect::<Result<_, _>>()?
        }
    };
    let mut text = String::new();
    for v in &values {
        writeln!(text, "{v}").expect("write to string");
    }
    let summary = json!({
        "n": x.len(),
        "mechanism": a.mechanism,
        "sigma": spec.sigma.sigma,
        "sigma_squared": spec.sigma.sigma_squared,
        "synthetic": a.input.is_none(),
    });
    emit(out, text.as_bytes(), seed, cmd, vec![], summary)
}

#[derive(Serialize)]
struct MetricRow<'a> {
    n: usize,
    mechanism: &'a str,
    metric: &'static str,
    value: f64,
    stderr: f64,
}

fn metric_rows(r: &ErrorReport) -> [MetricRow<'_>; 3] {
    let mech = r.mechanism.name();
    [
        ("err_l2", r.err_l2, r.std_err.err_l2),
        ("err_worst_expected", r.err_worst_expected, r.std_err.err_worst_expected),
        ("err_expected_worst", r.err_expected_worst, r.std_err.err_expected_worst),
    ]
    .map(|(metric, value, stderr)| MetricRow { n: r.n, mechanism: mech, metric, value, stderr })
}

fn error_gnuplot(reports: &[ErrorReport], mechs: &[MechanismTag]) -> String {
    let mut s = String::from("# bars are +/- 0.25 sd over replicates\n");
    for m in mechs {
        writeln!(s, "# {}\n# n err_l2 bar err_worst_expected bar err_expected_worst bar", m.name()).unwrap();
        for r in reports.iter().filter(|r| r.mechanism == *m) {
            let bar = |se| 0.25 * r.sd_of(se);
            writeln!(
                s,
                "{} {} {} {} {} {} {}",
                r.n,
                r.err_l2,
                bar(r.std_err.err_l2),
                r.err_worst_expected,
                bar(r.std_err.err_worst_expected),
                r.err_expected_worst,
                bar(r.std_err.err_expected_worst)
            )
            .unwrap();
        }
        s.push_str("\n\n");
    }
    s
}

fn errors(a: &ErrorsArgs, seed: u64, out: Option<&Path>, cmd: &Command) -> Outcome<()> {
    let b = budget(&a.budget)?;
    if a.mechanism.is_empty() || a.n.is_empty() {
        return Err(Failure::Usage("need at least one mechanism and one n".into()));
    }
    let cfg = McConfig {
        replicates: a.replicates,
        queries: a.queries,
        exhaustive: a.exhaustive,
        ..Default::default()
    };
    let mut reports = Vec::new();
    for &n in &a.n {
        let workload = match a.workload {
            WorkloadArg::Continuous => Workload::continuous(n),
            WorkloadArg::Nodal => Workload::nodal(n),
            WorkloadArg::Random => Workload::random(n, a.random_rows, seed),
        };
        for &m in &a.mechanism {
            reports.push(mc_errors(m, &workload, &b, &cfg, seed)?);
        }
    }
    let bytes = csv_bytes(reports.iter().flat_map(metric_rows))?;
    let mut extra = Vec::new();
    if let Some(p) = &a.gnuplot {
        fs::write(p, error_gnuplot(&reports, &a.mechanism))?;
        extra.push(p.display().to_string());
    }
    let summary = json!({ "reports": reports });
    emit(out, &bytes, seed, cmd, extra, summary)
}

fn scaling(a: &ScalingArgs, seed: u64, out: Option<&Path>, cmd: &Command) -> Outcome<()> {
    let rep = run_scaling(a.k_min, a.k_max, a.repeats, seed)?;
    eprintln!("log-log slope {:.3} (r² {:.4})", rep.fit.slope, rep.fit.r_squared);
    let bytes = csv_bytes(&rep.rows)?;
    let summary = json!({ "fit": rep.fit, "timings_are_wall_clock": true });
    emit(out, &bytes, seed, cmd, vec![], summary)
}

fn levels(a: &LevelsArgs, seed: u64, out: Option<&Path>, cmd: &Command) -> Outcome<()> {
    let b = budget(&a.budget)?;
    let k = TreeDepth::new(a.k)?;
    let prof = variance_by_level(a.mechanism, k, &b, a.replicates, seed)?;
    let bytes = csv_bytes(&prof)?;
    let mut extra = Vec::new();
    if let Some(p) = &a.gnuplot {
        let mut s = String::from("# level mean_variance bar (+/- 0.25 sd)\n");
        for l in &prof {
            writeln!(s, "{} {} {}", l.level, l.mean_variance, 0.25 * l.sd).unwrap();
        }
        fs::write(p, s)?;
        extra.push(p.display().to_string());
    }
    let summary = json!({ "mechanism": a.mechanism, "levels": prof });
    emit(out, &bytes, seed, cmd, extra, summary)
}
