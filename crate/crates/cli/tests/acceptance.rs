//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criteria listed in `KNOWN_UNMET` are reported but do not fail the run;
//! any other failure exits nonzero.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use diffbot::color::{
    rule_matrix_rank, simulate_sensor, simulate_sensor_with, ColorCalibration, ColorClass, ColorClassifier,
    ColorRuleSet,
};
use diffbot::control::{GainScales, GainScheduler};
use diffbot::fuzzy::{defuzzify_centroid, kd_rules, ki_rules, kp_rules, LinguisticVariable, Term, TermDegrees};
use diffbot::kinematics::{
    ddof, forward_kinematics, inverse_kinematics, sliding_constraint_residual, ChassisGeometry, WheelMount,
    WheelSpeeds, WorldVelocity,
};
use diffbot::sim::{MissionResult, Outcome};
use diffbot::tuning::{
    effects_check, new_method_tune, zn_gains, GainKind, NewMethodConfig, StepScenario, UltimateGain, ZnKind,
};
use diffbot_cli::config::{ControllerKind, ScenarioConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

const KNOWN_UNMET: [u32; 3] = [11, 12, 13];

const ROUND_TRIP_TOL: f64 = 1e-12;
const ROUND_TRIP_BUDGET: Duration = Duration::from_secs(1);
const CONSTRAINT_TOL: f64 = 1e-12;
/// Relative to `max(1, |gain|)`.
const ZN_TOL: f64 = 1e-12;
const DECAY_TARGET: f64 = 0.25;
const DECAY_BAND: f64 = 0.1;
const SSE_FRACTION: f64 = 0.01;
const TUNE_BUDGET: Duration = Duration::from_secs(30);
const ZERO_POINT_TOL: f64 = 0.5;
/// Fraction of the output universe width.
const CENTROID_TOL: f64 = 1e-6;
const CENTROID_SAMPLES: usize = 60_001;
const HILL_BUDGET: Duration = Duration::from_secs(10);
const MIN_EQUIVALENCE_STEPS: usize = 10_000;
const MIN_SELF_CLASSIFIED: usize = 12;
const EXPECTED_RANK: usize = 6;
const NOISE_TRIALS: u64 = 1000;
const NOISE_SIGMA: f64 = 0.02;
const MIN_NOISE_ACCURACY: f64 = 0.95;
const NOISE_BUDGET: Duration = Duration::from_secs(5);

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn scenario(name: &str) -> ScenarioConfig {
    let path = repo_root().join("scenarios").join(name);
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let cfg = ScenarioConfig::parse(&text).unwrap();
    cfg.validate().unwrap();
    cfg
}

fn c1_round_trip() -> Verdict {
    let g = ChassisGeometry::reference();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let ws = WheelSpeeds::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let back = inverse_kinematics(forward_kinematics(ws, &g), &g);
        worst = worst.max((back.v_l - ws.v_l).abs()).max((back.v_r - ws.v_r).abs());
    }
    let took = start.elapsed();
    verdict(
        worst <= ROUND_TRIP_TOL && took < ROUND_TRIP_BUDGET,
        format!("max error {worst:.3e} (tol {ROUND_TRIP_TOL:e}), {took:.2?}"),
    )
}

fn c2_constraints() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for m in [WheelMount::left(0.1), WheelMount::right(0.1)] {
        for _ in 0..1000 {
            let theta = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
            let (v, w) = (rng.random_range(-2.0..2.0), rng.random_range(-5.0..5.0));
            let world = WorldVelocity::new(v * theta.cos(), v * theta.sin(), w);
            worst = worst.max(sliding_constraint_residual(&m, theta, world).abs());
        }
    }
    let d = ddof(3, 1);
    verdict(
        worst <= CONSTRAINT_TOL && d == Ok(2),
        format!("max residual {worst:.3e} (tol {CONSTRAINT_TOL:e}), ddof(3,1) = {d:?}"),
    )
}

fn c3_zn() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    let mut rel = |a: f64, b: f64| worst = worst.max((a - b).abs() / b.abs().max(1.0));
    for _ in 0..1000 {
        let ku = rng.random_range(0.01..100.0);
        let pu = rng.random_range(0.01..10.0);
        let u = UltimateGain { ku, pu, kp_below: ku };
        let p = zn_gains(u, ZnKind::P);
        rel(p.kp, ku / 2.0);
        rel(p.ki, 0.0);
        rel(p.kd, 0.0);
        let pi = zn_gains(u, ZnKind::Pi);
        let ti = pu / 1.2;
        rel(pi.kp, 0.45 * ku);
        rel(pi.ki, 0.45 * ku / ti);
        rel(pi.kd, 0.0);
        let pid = zn_gains(u, ZnKind::Pid);
        let (ti, td) = (pu / 2.0, pu / 8.0);
        rel(pid.kp, 0.6 * ku);
        rel(pid.ki, 0.6 * ku / ti);
        rel(pid.kd, 0.6 * ku * td);
    }
    verdict(
        worst <= ZN_TOL,
        format!("max relative error {worst:.3e} (tol {ZN_TOL:e})"),
    )
}

fn c4_new_method(report: &diffbot::tuning::NewMethodReport, took: Duration) -> Verdict {
    let scn = StepScenario::reference();
    let decay = report.halved_decay_ratio;
    let sse = report
        .log
        .iter()
        .rev()
        .find(|e| e.accepted)
        .map(|e| e.metrics.steady_state_error);
    let decay_ok = decay.is_some_and(|d| (d - DECAY_TARGET).abs() <= DECAY_BAND);
    let sse_ok = sse.is_some_and(|s| s < SSE_FRACTION * scn.setpoint);
    verdict(
        decay_ok && sse_ok && took < TUNE_BUDGET,
        format!(
            "step 2 decay ratio {decay:?} (target {DECAY_TARGET} +/- {DECAY_BAND}), final SSE {sse:?} counts (limit {}), gains ({}, {}, {}), {took:.2?}",
            SSE_FRACTION * scn.setpoint,
            report.gains.kp,
            report.gains.ki,
            report.gains.kd
        ),
    )
}

fn c5_effects(report: &diffbot::tuning::NewMethodReport) -> Verdict {
    let scn = StepScenario::reference();
    let base = report.gains;
    let kp = effects_check(&scn, base, GainKind::Kp, 2.0).unwrap();
    let ki = effects_check(&scn, base, GainKind::Ki, 2.0).unwrap();
    let kd = effects_check(&scn, base, GainKind::Kd, 2.0).unwrap();
    let pass = kp.rise_time_decreased == Some(true) && kp.overshoot_increased && ki.sse_decreased;
    let kd_note = if base.kd == 0.0 {
        "kd cells skipped (tuned kd is 0)".to_string()
    } else {
        format!(
            "kd cells skipped, measured overshoot {:.4} -> {:.4}, settling {:?} -> {:?}",
            kd.before.overshoot, kd.after.overshoot, kd.before.settling_time, kd.after.settling_time
        )
    };
    verdict(
        pass,
        format!(
            "kp x2: rise {:?} -> {:?}, overshoot {:.4} -> {:.4}; ki x2: SSE {} -> {}; {kd_note}",
            kp.before.rise_time,
            kp.after.rise_time,
            kp.before.overshoot,
            kp.after.overshoot,
            ki.before.steady_state_error,
            ki.after.steady_state_error
        ),
    )
}

/// Rule tables as published, rows EC = NB..PB, columns E = NB..PB.
const PUBLISHED_KP: &str = "\
PB PB PM PM PS ZO ZO
PB PB PM PS PS ZO NS
PM PM PM PS ZO NS NS
PM PM PS ZO NS NM NM
PS PS ZO NS NS NM NM
PS ZO NS NM NM NM NB
ZO ZO NM NM NM NB NB";
const PUBLISHED_KI: &str = "\
NB NB NB NB NM ZO ZO
NB NB NB NB NM ZO ZO
NM NM NM NM ZO PS PS
NM NM NS ZO PS PM PM
NS NS ZO PM PM PM PM
ZO ZO PM PB PB PB PB
ZO ZO PM PB PB PB PB";
const PUBLISHED_KD: &str = "\
PS NS NB NB NB NM PS
PS NS NB NM NM NS ZO
ZO NS NM NM NS NS ZO
ZO NS NS NS NS NS ZO
ZO ZO ZO ZO ZO ZO ZO
PB NS PS PS PS PS PB
PB PM PM PM PS PS PB";

const GRID_SHA256: [(&str, &str); 3] = [
    (
        "kp_rules.txt",
        "5fec10fa2f6e42d38dc739856f54f1fa410a0c942ce94e276f407639369ef617",
    ),
    (
        "ki_rules.txt",
        "9fb6116aa1f6e8d36817a7a6259cece2e487797e86c4cb69d283c1d6653e180f",
    ),
    (
        "kd_rules.txt",
        "2a7decc29ee4aeea03747cb90e4365d6d47be2a46edfc0d97a4a314bac0eb218",
    ),
];

fn c6_rule_tables() -> Verdict {
    let mut checked = 0;
    let mut mismatches = Vec::new();
    for (name, text, table) in [
        ("kp", PUBLISHED_KP, kp_rules()),
        ("ki", PUBLISHED_KI, ki_rules()),
        ("kd", PUBLISHED_KD, kd_rules()),
    ] {
        for (r, line) in text.lines().enumerate() {
            for (c, code) in line.split_whitespace().enumerate() {
                let want: Term = code.parse().unwrap();
                let got = table.get(Term::ALL[r], Term::ALL[c]);
                checked += 1;
                if got != want {
                    mismatches.push(format!("{name}[{r}][{c}]"));
                }
            }
        }
    }
    let data = repo_root().join("crates/core/data");
    let mut bad_sums = Vec::new();
    for (file, want) in GRID_SHA256 {
        let bytes = std::fs::read(data.join(file)).unwrap();
        if hex::encode(Sha256::digest(&bytes)) != want {
            bad_sums.push(file);
        }
    }
    verdict(
        checked == 147 && mismatches.is_empty() && bad_sums.is_empty(),
        format!("{checked} cells checked, mismatches {mismatches:?}, checksum failures {bad_sums:?}"),
    )
}

fn c7_zero_point() -> Verdict {
    let d = GainScheduler::default().evaluate(0.0, 0.0).unwrap();
    let pass = [d.kp, d.ki, d.kd].iter().all(|v| v.abs() <= ZERO_POINT_TOL);
    verdict(
        pass,
        format!(
            "(dKp, dKi, dKd) = ({:.6}, {:.6}, {:.6}), tol {ZERO_POINT_TOL}",
            d.kp, d.ki, d.kd
        ),
    )
}

/// Triangle of term `k` built from the peaks alone.
fn oracle_membership(peaks: &[f64; 7], k: usize, x: f64) -> f64 {
    let p = peaks[k];
    if x <= p {
        if k == 0 {
            return 1.0;
        }
        let left = peaks[k - 1];
        ((x - left) / (p - left)).max(0.0)
    } else {
        if k == 6 {
            return 1.0;
        }
        let right = peaks[k + 1];
        ((right - x) / (right - p)).max(0.0)
    }
}

fn c8_centroid() -> Verdict {
    let v = LinguisticVariable::standard_output();
    let peaks: [f64; 7] = std::array::from_fn(|k| v.peak(Term::ALL[k]));
    let (lo, hi) = (v.lo(), v.hi());
    let width = hi - lo;
    let h = width / (CENTROID_SAMPLES - 1) as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    for _ in 0..500 {
        let mut deg = TermDegrees([0.0; 7]);
        for k in 0..7 {
            if rng.random_bool(0.5) {
                deg.0[k] = rng.random_range(0.0..=1.0);
            }
        }
        if deg.is_zero() {
            deg.0[rng.random_range(0..7)] = rng.random_range(0.01..=1.0);
        }
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..CENTROID_SAMPLES {
            let x = lo + i as f64 * h;
            let mu = (0..7)
                .map(|k| oracle_membership(&peaks, k, x).min(deg.0[k]))
                .fold(0.0, f64::max);
            let wgt = if i == 0 || i == CENTROID_SAMPLES - 1 { 0.5 } else { 1.0 };
            num += wgt * mu * x;
            den += wgt * mu;
        }
        let got = defuzzify_centroid(&v, &deg).unwrap();
        worst = worst.max((got - num / den).abs() / width);
    }
    verdict(
        worst <= CENTROID_TOL,
        format!("max deviation {worst:.3e} of universe width (tol {CENTROID_TOL:e}), {CENTROID_SAMPLES} samples"),
    )
}

fn outcome_name(r: &MissionResult) -> String {
    match r.outcome {
        Outcome::Completed { time } => format!("completed at {time:.2} s"),
        Outcome::Disconnected { time, .. } => format!("disconnected at {time:.2} s"),
        Outcome::TimedOut { .. } => "timed out".into(),
    }
}

fn c9_hill(report: &diffbot::tuning::NewMethodReport) -> Verdict {
    let start = Instant::now();
    let plain = scenario("hill_pid.conf");
    let fuzzy = scenario("hill_fuzzy.conf");
    let same_base = plain.controller.forward == fuzzy.controller.forward && plain.controller.forward == report.gains;
    let kinds = plain.controller.kind == ControllerKind::Pid && fuzzy.controller.kind == ControllerKind::FuzzyPid;
    let rp = plain.mission().unwrap().run().unwrap();
    let rf = fuzzy.mission().unwrap().run().unwrap();
    let took = start.elapsed();
    let pass = same_base
        && kinds
        && matches!(rp.outcome, Outcome::Disconnected { .. })
        && rf.outcome.is_completed()
        && took < HILL_BUDGET;
    verdict(
        pass,
        format!(
            "plain PID {}, fuzzy-PID {}, base gains shared with tuned flat-ground gains: {same_base}, {took:.2?}",
            outcome_name(&rp),
            outcome_name(&rf)
        ),
    )
}

fn bits(r: &MissionResult) -> Vec<Vec<u64>> {
    r.rows
        .iter()
        .map(|row| {
            let mut v: Vec<u64> = [
                row.time,
                row.pose.x,
                row.pose.y,
                row.pose.theta,
                row.v_c,
                row.w,
                row.v_l,
                row.v_r,
                row.gains.kp,
                row.gains.ki,
                row.gains.kd,
                row.slope,
            ]
            .iter()
            .map(|f| f.to_bits())
            .collect();
            v.extend([row.enc_l as u64, row.enc_r as u64, row.pwm_l as u64, row.pwm_r as u64]);
            v
        })
        .collect()
}

fn c10_zero_scale() -> Verdict {
    let plain = scenario("hill_pid.conf");
    let mut fuzzy = plain.clone();
    fuzzy.controller.kind = ControllerKind::FuzzyPid;
    fuzzy.controller.scales = GainScales::default();
    let a = plain.mission().unwrap().run().unwrap();
    let b = fuzzy.mission().unwrap().run().unwrap();
    let steps = a.rows.len() * plain.timing.control_every as usize;
    let identical = bits(&a) == bits(&b)
        && a.rows.iter().zip(&b.rows).all(|(x, y)| x.phase == y.phase)
        && a.outcome == b.outcome
        && a.final_pose.x.to_bits() == b.final_pose.x.to_bits();
    verdict(
        identical && steps >= MIN_EQUIVALENCE_STEPS,
        format!("{} rows, {steps} plant steps, bit-identical: {identical}", a.rows.len()),
    )
}

/// Calibration rows as published: far (8 cm) then near (2 cm), R G B.
const PUBLISHED_CALIBRATION: [(ColorClass, [f64; 6]); 7] = [
    (ColorClass::Black, [571.0, 527.0, 364.0, 433.0, 390.0, 263.0]),
    (ColorClass::Green, [355.0, 296.0, 258.0, 199.0, 125.0, 138.0]),
    (ColorClass::Red, [252.0, 399.0, 258.0, 92.0, 234.0, 170.0]),
    (ColorClass::Orange, [197.0, 302.0, 253.0, 80.0, 166.0, 151.0]),
    (ColorClass::Blue, [367.0, 286.0, 191.0, 186.0, 94.0, 52.0]),
    (ColorClass::Purple, [294.0, 306.0, 202.0, 128.0, 112.0, 60.0]),
    (ColorClass::White, [85.0, 80.0, 59.0, 51.0, 41.0, 34.0]),
];

fn c11_color_calibration() -> Verdict {
    let clf = ColorClassifier::reference();
    let mut exact = 0;
    let mut own = 0;
    let mut misses = Vec::new();
    let mut gw_flagged = true;
    for (c, v) in PUBLISHED_CALIBRATION {
        for (d, vals) in [(8.0, &v[..3]), (2.0, &v[3..])] {
            let r = simulate_sensor(c, d, &clf.calibration, 0.0, 0).unwrap();
            exact += [r.r, r.g, r.b].iter().zip(vals).filter(|(a, b)| a == b).count();
            let k = clf.classify(&r);
            let gw = matches!(c, ColorClass::Green | ColorClass::White);
            match k {
                Ok(k) if k.winner == c || (gw && k.tied.contains(&c)) => {
                    own += 1;
                    if gw && !k.is_ambiguous() {
                        gw_flagged = false;
                    }
                }
                Ok(k) => {
                    if gw {
                        gw_flagged = false;
                    }
                    misses.push(format!("{c}@{d}->{}", k.winner));
                }
                Err(e) => {
                    if gw {
                        gw_flagged = false;
                    }
                    misses.push(format!("{c}@{d}->{e}"));
                }
            }
        }
    }
    verdict(
        exact == 42 && own >= MIN_SELF_CLASSIFIED && gw_flagged,
        format!(
            "{exact}/42 values exact, {own}/14 rows self-classified (need {MIN_SELF_CLASSIFIED}), Green/White flagged: {gw_flagged}, misses {}",
            misses.join(" ")
        ),
    )
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Gauss-Jordan over reduced fractions.
fn rational_rank(m: &[[u8; 9]; 7]) -> usize {
    let mut a: Vec<Vec<(i128, i128)>> = m.iter().map(|r| r.iter().map(|&v| (v as i128, 1)).collect()).collect();
    let norm = |(n, d): (i128, i128)| {
        let g = gcd(n, d).max(1);
        let s = if d < 0 { -1 } else { 1 };
        (s * n / g, s * d / g)
    };
    let mut rank = 0;
    for c in 0..9 {
        let Some(p) = (rank..7).find(|&r| a[r][c].0 != 0) else {
            continue;
        };
        a.swap(rank, p);
        let (pn, pd) = a[rank][c];
        for r in 0..7 {
            if r == rank || a[r][c].0 == 0 {
                continue;
            }
            let (fnum, fden) = norm((a[r][c].0 * pd, a[r][c].1 * pn));
            for k in 0..9 {
                let (xn, xd) = a[r][k];
                let (yn, yd) = a[rank][k];
                a[r][k] = norm((xn * yd * fden - fnum * yn * xd, xd * yd * fden));
            }
        }
        rank += 1;
    }
    rank
}

fn c12_rank() -> Verdict {
    let m = ColorRuleSet::reference().matrix();
    let rank = rule_matrix_rank(&m);
    let oracle = rational_rank(&m);
    let distinct = diffbot::color::distinct_rule_rows(&ColorRuleSet::reference());
    verdict(
        rank == EXPECTED_RANK && rank == oracle,
        format!("rank {rank}, rational oracle {oracle}, expected {EXPECTED_RANK}; distinct rows {distinct}"),
    )
}

fn c13_noise() -> Verdict {
    let clf = ColorClassifier::reference();
    let cal = ColorCalibration::reference();
    let colors = [
        ColorClass::Black,
        ColorClass::Red,
        ColorClass::Orange,
        ColorClass::Blue,
        ColorClass::Purple,
    ];
    let start = Instant::now();
    let mut correct = 0;
    let mut per_color = [0u32; 5];
    for seed in 0..NOISE_TRIALS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = rng.random_range(0..colors.len());
        let d = rng.random_range(2.0..=8.0);
        let r = simulate_sensor_with(colors[k], d, &cal, NOISE_SIGMA, &mut rng).unwrap();
        if clf
            .classify(&r)
            .is_ok_and(|c| c.winner == colors[k] && !c.is_ambiguous())
        {
            correct += 1;
            per_color[k] += 1;
        }
    }
    let took = start.elapsed();
    let acc = correct as f64 / NOISE_TRIALS as f64;
    verdict(
        acc >= MIN_NOISE_ACCURACY && took < NOISE_BUDGET,
        format!(
            "{correct}/{NOISE_TRIALS} correct ({:.1}%, need {:.0}%), per color {per_color:?}, {took:.2?}",
            acc * 100.0,
            MIN_NOISE_ACCURACY * 100.0
        ),
    )
}

fn run_cli(args: &[&str], out_file: Option<&Path>) -> (i32, Vec<u8>, Vec<u8>) {
    let mut argv: Vec<String> = std::iter::once("diffbot")
        .chain(args.iter().copied())
        .map(String::from)
        .collect();
    if let Some(p) = out_file {
        argv.push("--out".into());
        argv.push(p.display().to_string());
    }
    let (mut so, mut se) = (Vec::new(), Vec::new());
    let code = diffbot_cli::run(argv, &mut so, &mut se);
    let file = out_file.map(|p| std::fs::read(p).unwrap()).unwrap_or_default();
    (code, so, file)
}

fn c14_determinism() -> Verdict {
    let root = repo_root().join("scenarios");
    let cfg = |n: &str| root.join(n).display().to_string();
    let (flat, tour, hill, tune) = (
        cfg("flat.conf"),
        cfg("tour.conf"),
        cfg("hill_fuzzy.conf"),
        cfg("tuning.conf"),
    );
    let cases: Vec<(&str, Vec<&str>)> = vec![
        ("sim flat", vec!["sim", "--config", &flat]),
        ("sim tour seeded", vec!["sim", "--config", &tour, "--seed", "11"]),
        ("sim hill", vec!["sim", "--config", &hill, "--format", "csv"]),
        ("tune zn", vec!["tune", "--config", &tune, "--method", "zn"]),
        ("tune new", vec!["tune", "--config", &tune, "--method", "new"]),
        (
            "color",
            vec![
                "color",
                "--color",
                "blue",
                "--distance",
                "5",
                "--noise",
                "0.02",
                "--seed",
                "4",
            ],
        ),
        ("fuzzy", vec!["fuzzy", "--e", "1.3", "--ec", "-0.4"]),
        ("kin", vec!["kin", "--v-l", "0.1", "--v-r", "0.25", "--duration", "2"]),
    ];
    let dir = tempfile::tempdir().unwrap();
    let mut differing = Vec::new();
    for (name, args) in &cases {
        let a = run_cli(args, Some(&dir.path().join("a.csv")));
        let b = run_cli(args, Some(&dir.path().join("b.csv")));
        let c = run_cli(args, None);
        if a != (b.0, b.1.clone(), b.2.clone()) || a.2.is_empty() || c.1 != a.2 {
            differing.push(*name);
        }
    }
    verdict(
        differing.is_empty(),
        format!("{} invocations run twice, differing: {differing:?}", cases.len()),
    )
}

fn main() {
    let start = Instant::now();
    let tune_start = Instant::now();
    let report = new_method_tune(&StepScenario::reference(), &NewMethodConfig::default());
    let tune_took = tune_start.elapsed();
    let report = report.expect("new method completes on the reference scenario");

    let results: Vec<(u32, &str, Verdict)> = vec![
        (1, "kinematic round trip", c1_round_trip()),
        (2, "sliding constraint and ddof", c2_constraints()),
        (3, "Ziegler-Nichols table", c3_zn()),
        (4, "new-method shape", c4_new_method(&report, tune_took)),
        (5, "gain effect directions", c5_effects(&report)),
        (6, "rule table fidelity", c6_rule_tables()),
        (7, "zero-point deltas", c7_zero_point()),
        (8, "centroid oracle", c8_centroid()),
        (9, "fuzzy vs plain on the hill", c9_hill(&report)),
        (10, "zero-scale equivalence", c10_zero_scale()),
        (11, "color calibration fidelity", c11_color_calibration()),
        (12, "rule matrix rank", c12_rank()),
        (13, "color noise robustness", c13_noise()),
        (14, "CLI determinism", c14_determinism()),
    ];

    let mut unexpected = Vec::new();
    for (n, name, v) in &results {
        let tag = if v.pass { "PASS" } else { "FAIL" };
        let note = match (v.pass, KNOWN_UNMET.contains(n)) {
            (false, true) => " [known unmet]",
            (true, true) => " [known unmet now passes]",
            _ => "",
        };
        println!("{tag} {n:>2} {name}: {}{note}", v.detail);
        if !v.pass && !KNOWN_UNMET.contains(n) {
            unexpected.push(*n);
        }
    }
    let passed = results.iter().filter(|r| r.2.pass).count();
    println!("{passed}/{} criteria pass in {:.2?}", results.len(), start.elapsed());
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
