//! Batch scenario runner behind the `diffbot` binary.
//!
//! Exit status: 0 on success, 1 when an output file cannot be written, 2 for
//! usage, configuration or argument errors, 3 when a run fails at runtime
//! (mission disconnect or timeout, no ultimate gain, unrecognized color).

pub mod config;
pub mod format;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use diffbot::color::{simulate_sensor, ChannelReading, ColorClass, ColorClassifier};
use diffbot::control::{GainScheduler, PidGains};
use diffbot::kinematics::{
    forward_kinematics, icr_radius, integrate_pose, inverse_kinematics, BodyTwist, ChassisGeometry, IcrRadius, Pose,
    WheelSpeeds,
};
use diffbot::sim::{MissionResult, Outcome, TraceRow};
use diffbot::tuning::{new_method_tune, ultimate_gain_search, zn_gains, Axis, GainProbe};
use diffbot::Error;

pub use config::ScenarioConfig;
use format::{g9, opt};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "diffbot",
    version,
    about = "Differential-drive robot simulator, tuner and color classifier"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a mission and write its per-period trace.
    Sim(SimArgs),
    /// Tune a PID loop on a step scenario.
    Tune(TuneArgs),
    /// Classify a simulated or raw color sensor reading.
    Color(ColorArgs),
    /// Evaluate the fuzzy gain scheduler at one (e, ec) point.
    Fuzzy(FuzzyArgs),
    /// Evaluate differential-drive kinematics once.
    Kin(KinArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
}

#[derive(Debug, Args)]
pub struct Output {
    /// Write the main output here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct SimArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the plant noise seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Zn,
    New,
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, value_enum)]
    pub method: Method,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct ColorArgs {
    #[arg(long, requires = "distance", conflicts_with = "raw")]
    pub color: Option<String>,
    /// Sensor distance in cm.
    #[arg(long, requires = "color")]
    pub distance: Option<f64>,
    /// Relative standard deviation of multiplicative noise.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Raw periods as `r,g,b`.
    #[arg(long, required_unless_present = "color")]
    pub raw: Option<String>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct FuzzyArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub e: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub ec: f64,
    #[arg(long, default_value_t = 1.0)]
    pub k_e: f64,
    #[arg(long, default_value_t = 1.0)]
    pub k_ec: f64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct KinArgs {
    /// Reads `[chassis]` from a scenario file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub track: Option<f64>,
    #[arg(long)]
    pub wheel_radius: Option<f64>,
    #[arg(long, allow_hyphen_values = true, requires = "v_r", conflicts_with_all = ["v_c", "w"])]
    pub v_l: Option<f64>,
    #[arg(long, allow_hyphen_values = true, requires = "v_l")]
    pub v_r: Option<f64>,
    #[arg(long, allow_hyphen_values = true, requires = "w")]
    pub v_c: Option<f64>,
    #[arg(long, allow_hyphen_values = true, requires = "v_c", required_unless_present = "v_l")]
    pub w: Option<f64>,
    /// Time to integrate the pose from the origin, s.
    #[arg(long, default_value_t = 1.0)]
    pub duration: f64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Runtime(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Config(_) => EXIT_CONFIG,
            Failure::Runtime(_) => EXIT_RUNTIME,
            Failure::Io(_) => EXIT_IO,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Runtime(m) | Failure::Io(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Config(e.to_string())
    }
}

/// What a subcommand produced: the main document and an optional summary.
struct Report {
    body: String,
    summary: Option<String>,
    code: i32,
}

/// Parses `args` (program name first) and runs the subcommand.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let sink: &mut dyn Write = if code == 0 { stdout } else { stderr };
            let _ = sink.write_all(text.as_bytes());
            return code;
        }
    };
    let (result, output) = match &cli.command {
        Command::Sim(a) => (cmd_sim(a), &a.output),
        Command::Tune(a) => (cmd_tune(a), &a.output),
        Command::Color(a) => (cmd_color(a), &a.output),
        Command::Fuzzy(a) => (cmd_fuzzy(a), &a.output),
        Command::Kin(a) => (cmd_kin(a), &a.output),
    };
    let report = match result {
        Ok(r) => r,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message());
            return f.code();
        }
    };
    let written = match &output.out {
        Some(path) => std::fs::write(path, &report.body)
            .map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))
            .and_then(|()| emit(stdout, report.summary.as_deref().unwrap_or(""))),
        None => emit(stdout, &report.body).and_then(|()| emit(stderr, report.summary.as_deref().unwrap_or(""))),
    };
    match written {
        Ok(()) => report.code,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message());
            f.code()
        }
    }
}

fn emit(w: &mut dyn Write, s: &str) -> Result<(), Failure> {
    w.write_all(s.as_bytes()).map_err(|e| Failure::Io(e.to_string()))
}

fn load_config(path: &Path) -> Result<ScenarioConfig, Failure> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
    let cfg = ScenarioConfig::parse(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    cfg.validate()
        .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    Ok(cfg)
}

fn key_values(pairs: &[(&str, String)]) -> String {
    let mut s = String::from("key,value\n");
    for (k, v) in pairs {
        let _ = writeln!(s, "{k},{v}");
    }
    s
}

/// The trace as CSV with the fixed header.
pub fn trace_csv(result: &MissionResult, legs: &[diffbot::control::SetpointId]) -> String {
    let mut s = TraceRow::HEADER.join(",");
    s.push('\n');
    for (row, &leg) in result.rows.iter().zip(&result.row_legs) {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            g9(row.time),
            g9(row.pose.x),
            g9(row.pose.y),
            g9(row.pose.theta),
            g9(row.v_c),
            g9(row.w),
            g9(row.v_l),
            g9(row.v_r),
            row.enc_l,
            row.enc_r,
            row.pwm_l,
            row.pwm_r,
            g9(row.gains.kp),
            g9(row.gains.ki),
            g9(row.gains.kd),
            row.phase.name(),
            g9(row.slope),
            legs[leg].code(),
        );
    }
    s
}

fn cmd_sim(a: &SimArgs) -> Result<Report, Failure> {
    let mut cfg = load_config(&a.config)?;
    if let Some(seed) = a.seed {
        cfg.plant.seed = seed;
    }
    let mission = cfg.mission()?;
    let result = mission.run()?;
    let (outcome, time, leg) = match result.outcome {
        Outcome::Completed { time } => ("completed", g9(time), mission.legs.len() - 1),
        Outcome::Disconnected { time, leg } => ("disconnected", g9(time), leg),
        Outcome::TimedOut { leg } => ("timed_out", String::new(), leg),
    };
    let (f, e) = (result.final_pose, result.expected_pose);
    let summary = key_values(&[
        ("outcome", outcome.into()),
        ("time", time),
        ("leg", mission.legs[leg].code().into()),
        ("rows", result.rows.len().to_string()),
        ("final_x", g9(f.x)),
        ("final_y", g9(f.y)),
        ("final_theta", g9(f.theta)),
        ("expected_x", g9(e.x)),
        ("expected_y", g9(e.y)),
        ("expected_theta", g9(e.theta)),
        ("position_error", g9(result.position_error())),
        ("heading_error", g9(result.heading_error())),
    ]);
    Ok(Report {
        body: trace_csv(&result, &mission.legs),
        summary: Some(summary),
        code: if result.outcome.is_completed() {
            EXIT_OK
        } else {
            EXIT_RUNTIME
        },
    })
}

fn probe_table(probes: &[GainProbe]) -> String {
    let mut s = String::from("probe,kp,sustained,decay_ratio,period\n");
    for (i, p) in probes.iter().enumerate() {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            i + 1,
            g9(p.kp),
            p.sustained,
            opt(p.decay_ratio),
            opt(p.period)
        );
    }
    s
}

/// Gains as a `[controller]` section, at full precision so it can be pasted
/// into a scenario file.
fn gains_block(axis: Axis, g: PidGains) -> String {
    let prefix = match axis {
        Axis::Forward => "",
        Axis::Steering => "steer_",
    };
    format!(
        "[controller]\n{prefix}kp = {}\n{prefix}ki = {}\n{prefix}kd = {}\n",
        g.kp, g.ki, g.kd
    )
}

fn cmd_tune(a: &TuneArgs) -> Result<Report, Failure> {
    let mut cfg = load_config(&a.config)?;
    if let Some(seed) = a.seed {
        cfg.plant.seed = seed;
    }
    let scn = cfg.step_scenario();
    let m = &cfg.tune.method;
    let no_gain = |table: String, e: &Error| Report {
        body: format!(
            "{table}\n{}",
            key_values(&[("method", "zn".into()), ("error", e.to_string())])
        ),
        summary: None,
        code: EXIT_RUNTIME,
    };
    match a.method {
        Method::Zn => {
            let mut probes = Vec::new();
            let u = match ultimate_gain_search(&scn, m.kp_start, m.kp_factor, m.kp_max, &mut probes) {
                Ok(u) => u,
                Err(e @ Error::NoUltimateGain { .. }) => return Ok(no_gain(probe_table(&probes), &e)),
                Err(e) => return Err(e.into()),
            };
            let g = zn_gains(u, cfg.tune.zn_kind);
            let kind = match cfg.tune.zn_kind {
                diffbot::tuning::ZnKind::P => "p",
                diffbot::tuning::ZnKind::Pi => "pi",
                diffbot::tuning::ZnKind::Pid => "pid",
            };
            let result = key_values(&[
                ("method", "zn".into()),
                ("kind", kind.into()),
                ("ku", g9(u.ku)),
                ("pu", g9(u.pu)),
                ("kp_below", g9(u.kp_below)),
                ("kp", g9(g.kp)),
                ("ki", g9(g.ki)),
                ("kd", g9(g.kd)),
            ]);
            Ok(Report {
                body: format!("{}\n{result}\n{}", probe_table(&probes), gains_block(cfg.tune.axis, g)),
                summary: None,
                code: EXIT_OK,
            })
        }
        Method::New => {
            let r = match new_method_tune(&scn, m) {
                Ok(r) => r,
                Err(e @ Error::NoUltimateGain { .. }) => {
                    let mut probes = Vec::new();
                    let _ = ultimate_gain_search(&scn, m.kp_start, m.kp_factor, m.kp_max, &mut probes);
                    let mut rep = no_gain(probe_table(&probes), &e);
                    rep.body = rep.body.replace("method,zn", "method,new");
                    return Ok(rep);
                }
                Err(e) => return Err(e.into()),
            };
            let mut s = String::from(
                "row,step,name,kp,ki,kd,rise_time,overshoot,settling_time,steady_state_error,decay_ratio,accepted\n",
            );
            for (i, e) in r.log.iter().enumerate() {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{},{},{},{},{},{}",
                    i + 1,
                    e.step.number(),
                    e.step.name(),
                    g9(e.gains.kp),
                    g9(e.gains.ki),
                    g9(e.gains.kd),
                    opt(e.metrics.rise_time),
                    g9(e.metrics.overshoot),
                    opt(e.metrics.settling_time),
                    g9(e.metrics.steady_state_error),
                    opt(e.decay_ratio),
                    e.accepted
                );
            }
            let result = key_values(&[
                ("method", "new".into()),
                ("ku", g9(r.ultimate.ku)),
                ("pu", g9(r.ultimate.pu)),
                ("halved_kp", g9(r.halved.kp)),
                ("halved_decay_ratio", opt(r.halved_decay_ratio)),
                ("kp", g9(r.gains.kp)),
                ("ki", g9(r.gains.ki)),
                ("kd", g9(r.gains.kd)),
            ]);
            Ok(Report {
                body: format!("{s}\n{result}\n{}", gains_block(cfg.tune.axis, r.gains)),
                summary: None,
                code: EXIT_OK,
            })
        }
    }
}

fn parse_raw(s: &str) -> Result<ChannelReading, Failure> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| Failure::Config(format!("--raw {s:?}: {e}")))?;
    match v[..] {
        [r, g, b] => Ok(ChannelReading::new(r, g, b)?),
        _ => Err(Failure::Config(format!("--raw needs three values, got {}", v.len()))),
    }
}

fn cmd_color(a: &ColorArgs) -> Result<Report, Failure> {
    let clf = ColorClassifier::reference();
    let reading = match (&a.raw, &a.color, a.distance) {
        (Some(raw), _, _) => parse_raw(raw)?,
        (None, Some(c), Some(d)) => {
            let c: ColorClass = c.parse()?;
            simulate_sensor(c, d, &clf.calibration, a.noise, a.seed)?
        }
        _ => return Err(Failure::Config("give --raw or both --color and --distance".into())),
    };
    let c = match clf.classify(&reading) {
        Ok(c) => c,
        Err(Error::UnrecognizedColor) => return Err(Failure::Runtime(Error::UnrecognizedColor.to_string())),
        Err(e) => return Err(e.into()),
    };
    let mut pairs = vec![
        ("raw_r", g9(reading.r)),
        ("raw_g", g9(reading.g)),
        ("raw_b", g9(reading.b)),
        ("winner", c.winner.name().into()),
        ("activation", g9(c.activation)),
        ("ambiguous", c.is_ambiguous().to_string()),
        ("tied", c.tied.iter().map(|t| t.name()).collect::<Vec<_>>().join("|")),
    ];
    let names: Vec<String> = ColorClass::ALL
        .iter()
        .map(|k| format!("activation_{}", k.name()))
        .collect();
    for (k, name) in ColorClass::ALL.iter().zip(&names) {
        pairs.push((name, g9(c.activations[k.index()])));
    }
    Ok(Report {
        body: key_values(&pairs),
        summary: None,
        code: EXIT_OK,
    })
}

fn cmd_fuzzy(a: &FuzzyArgs) -> Result<Report, Failure> {
    let d = GainScheduler::standard(a.k_e, a.k_ec).evaluate(a.e, a.ec)?;
    Ok(Report {
        body: key_values(&[
            ("e", g9(a.e)),
            ("ec", g9(a.ec)),
            ("dkp", g9(d.kp)),
            ("dki", g9(d.ki)),
            ("dkd", g9(d.kd)),
        ]),
        summary: None,
        code: EXIT_OK,
    })
}

fn cmd_kin(a: &KinArgs) -> Result<Report, Failure> {
    let base = match &a.config {
        Some(p) => load_config(p)?.plant.geometry,
        None => ChassisGeometry::reference(),
    };
    let g = ChassisGeometry::new(
        a.track.unwrap_or(base.track()),
        a.wheel_radius.unwrap_or(base.wheel_radius()),
    )?;
    if !(a.duration >= 0.0 && a.duration.is_finite()) {
        return Err(Failure::Config(format!("--duration must be >= 0, got {}", a.duration)));
    }
    let (ws, tw) = match (a.v_l, a.v_r, a.v_c, a.w) {
        (Some(l), Some(r), _, _) => {
            let ws = WheelSpeeds::new(l, r);
            (ws, forward_kinematics(ws, &g))
        }
        (_, _, Some(v), Some(w)) => {
            let tw = BodyTwist::new(v, w);
            (inverse_kinematics(tw, &g), tw)
        }
        _ => return Err(Failure::Config("give --v-l/--v-r or --v-c/--w".into())),
    };
    let radius = match icr_radius(ws, &g) {
        IcrRadius::Straight => String::new(),
        IcrRadius::Radius(r) => g9(r),
    };
    let p = integrate_pose(Pose::default(), tw, a.duration);
    Ok(Report {
        body: key_values(&[
            ("v_l", g9(ws.v_l)),
            ("v_r", g9(ws.v_r)),
            ("v_c", g9(tw.v_c)),
            ("w", g9(tw.w)),
            ("icr_radius", radius),
            ("x", g9(p.x)),
            ("y", g9(p.y)),
            ("theta", g9(p.theta)),
        ]),
        summary: None,
        code: EXIT_OK,
    })
}
