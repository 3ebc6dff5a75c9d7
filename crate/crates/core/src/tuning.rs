//! Closed-loop tuning: oscillation and step-response analytics, ultimate
//! gain search, Ziegler–Nichols gains, the halve-then-refine procedure and
//! one-gain-at-a-time effects checks.

use crate::control::{pwm_saturate, PidController, PidGains};
use crate::error::{Error, Result};
use crate::plant::{Plant, PlantConfig};
use crate::sim::{advance_period, Actuator, Timing};

/// Uniformly sampled `(time, error)` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorTrace {
    pub t0: f64,
    pub dt: f64,
    pub errors: Vec<f64>,
}

impl ErrorTrace {
    pub fn new(t0: f64, dt: f64, errors: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::NonPositiveStep(dt));
        }
        Ok(Self { t0, dt, errors })
    }

    pub fn from_fn(dt: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(0.0, dt, (0..n).map(|k| f(k as f64 * dt)).collect())
    }

    pub fn len(&self) -> usize {
        self.errors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.errors.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OscillationAnalysis {
    pub peak_indices: Vec<usize>,
    pub peak_times: Vec<f64>,
    pub peak_values: Vec<f64>,
    /// Swings between successive alternating extrema.
    pub amplitudes: Vec<f64>,
    /// Ratio of each swing to the one a full period later.
    pub ratios: Vec<f64>,
    /// First ratio, if defined.
    pub decay_ratio: Option<f64>,
    /// Mean peak spacing, if two peaks exist.
    pub period: Option<f64>,
    pub sustained: bool,
}

pub const SUSTAINED_BAND: (f64, f64) = (0.9, 1.1);
const MIN_PEAK_SEPARATION: usize = 3;
const MIN_PROMINENCE_FRACTION: f64 = 0.01;

/// Interior local maxima (plateaus reported at their left edge) whose
/// prominence reaches `min_prominence`, thinned to `min_sep` samples by
/// keeping the higher peak.
fn find_peaks(x: &[f64], min_prominence: f64, min_sep: usize) -> Vec<usize> {
    let n = x.len();
    let mut cands = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        if x[i] > x[i - 1] {
            let mut j = i;
            while j + 1 < n && x[j + 1] == x[i] {
                j += 1;
            }
            if j + 1 < n && x[j + 1] < x[i] {
                cands.push(i);
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }

    let prominence = |p: usize| {
        let h = x[p];
        let mut left_min = h;
        for k in (0..p).rev() {
            if x[k] > h {
                break;
            }
            left_min = left_min.min(x[k]);
        }
        let mut right_min = h;
        for &v in &x[p + 1..] {
            if v > h {
                break;
            }
            right_min = right_min.min(v);
        }
        h - left_min.max(right_min)
    };
    cands.retain(|&p| prominence(p) >= min_prominence);

    let mut by_height = cands.clone();
    by_height.sort_by(|&a, &b| x[b].total_cmp(&x[a]).then(a.cmp(&b)));
    let mut keep = vec![false; n];
    let mut blocked = vec![false; n];
    for p in by_height {
        if blocked[p] {
            continue;
        }
        keep[p] = true;
        let lo = p.saturating_sub(min_sep - 1);
        let hi = (p + min_sep).min(n);
        blocked[lo..hi].iter_mut().for_each(|b| *b = true);
    }
    cands.into_iter().filter(|&p| keep[p]).collect()
}

pub fn analyze_oscillation(trace: &ErrorTrace) -> Result<OscillationAnalysis> {
    let x = &trace.errors;
    if x.len() < 3 {
        return Err(Error::TraceTooShort(x.len()));
    }
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let min_prom = MIN_PROMINENCE_FRACTION * scale;
    let peaks = if scale > 0.0 {
        find_peaks(x, min_prom, MIN_PEAK_SEPARATION)
    } else {
        Vec::new()
    };
    let neg: Vec<f64> = x.iter().map(|v| -v).collect();
    let troughs = if scale > 0.0 {
        find_peaks(&neg, min_prom, MIN_PEAK_SEPARATION)
    } else {
        Vec::new()
    };

    let mut extrema: Vec<(usize, bool)> = peaks
        .iter()
        .map(|&p| (p, true))
        .chain(troughs.iter().map(|&t| (t, false)))
        .collect();
    extrema.sort_unstable();
    let mut alternating: Vec<(usize, bool)> = Vec::with_capacity(extrema.len());
    for (i, is_peak) in extrema {
        match alternating.last_mut() {
            Some(last) if last.1 == is_peak => {
                let more_extreme = if is_peak { x[i] > x[last.0] } else { x[i] < x[last.0] };
                if more_extreme {
                    *last = (i, is_peak);
                }
            }
            _ => alternating.push((i, is_peak)),
        }
    }
    let amplitudes: Vec<f64> = alternating.windows(2).map(|w| (x[w[1].0] - x[w[0].0]).abs()).collect();
    let ratios: Vec<f64> = amplitudes.windows(3).map(|w| w[2] / w[0]).collect();
    let in_band = |r: &f64| (SUSTAINED_BAND.0..=SUSTAINED_BAND.1).contains(r);
    let sustained = ratios.windows(3).any(|w| w.iter().all(in_band));
    let period =
        (peaks.len() >= 2).then(|| (peaks[peaks.len() - 1] - peaks[0]) as f64 * trace.dt / (peaks.len() - 1) as f64);

    Ok(OscillationAnalysis {
        peak_times: peaks.iter().map(|&p| trace.time(p)).collect(),
        peak_values: peaks.iter().map(|&p| x[p]).collect(),
        peak_indices: peaks,
        amplitudes,
        decay_ratio: ratios.first().copied(),
        ratios,
        period,
        sustained,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResponseMetrics {
    /// 10% to 90% rise time; `None` if the response never reaches 90%.
    pub rise_time: Option<f64>,
    /// Peak excursion beyond the setpoint as a fraction of it.
    pub overshoot: f64,
    /// Time after which the response stays within ±2%; `None` unless it
    /// stays inside for at least the last 10% of the trace.
    pub settling_time: Option<f64>,
    /// Magnitude of the mean error over the last 10% of the trace.
    pub steady_state_error: f64,
}

pub const SETTLING_BAND: f64 = 0.02;

/// Metrics of the response `y = setpoint − error`, measured from the first sample.
pub fn response_metrics(trace: &ErrorTrace, setpoint: f64) -> Result<ResponseMetrics> {
    let n = trace.len();
    if n == 0 {
        return Err(Error::TraceTooShort(0));
    }
    if setpoint == 0.0 || !setpoint.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "setpoint must be nonzero, got {setpoint}"
        )));
    }
    let sgn = setpoint.signum();
    let sp = setpoint.abs();
    let y: Vec<f64> = trace.errors.iter().map(|e| sgn * (setpoint - e)).collect();

    let crossing = |level: f64| -> Option<f64> {
        if y[0] >= level {
            return Some(0.0);
        }
        y.windows(2)
            .enumerate()
            .find_map(|(k, w)| (w[1] >= level).then(|| (k as f64 + (level - w[0]) / (w[1] - w[0])) * trace.dt))
    };
    let rise_time = match (crossing(0.1 * sp), crossing(0.9 * sp)) {
        (Some(a), Some(b)) => Some(b - a),
        _ => None,
    };

    let peak = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let overshoot = ((peak - sp) / sp).max(0.0);

    let band = SETTLING_BAND * sp;
    let tail = (n / 10).max(1);
    let settling_time = match y.iter().rposition(|v| (v - sp).abs() > band) {
        None => Some(0.0),
        Some(k) if k < n - tail => Some((k + 1) as f64 * trace.dt),
        Some(_) => None,
    };

    let mean = trace.errors[n - tail..].iter().sum::<f64>() / tail as f64;

    Ok(ResponseMetrics {
        rise_time,
        overshoot,
        settling_time,
        steady_state_error: mean.abs(),
    })
}

/// Which wheel pattern a step scenario drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    /// Both wheels forward; feedback from the left encoder.
    Forward,
    /// Wheels opposed; feedback from the right encoder.
    Steering,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::Forward => "forward",
            Axis::Steering => "steering",
        }
    }
}

/// Step-setpoint run of a single PID loop on a fresh plant.
#[derive(Debug, Clone, PartialEq)]
pub struct StepScenario {
    pub plant: PlantConfig,
    pub timing: Timing,
    pub axis: Axis,
    /// Target in encoder counts.
    pub setpoint: f64,
    /// Simulated time per run, s.
    pub duration: f64,
}

impl StepScenario {
    /// Flat-ground forward step used as the tuning reference.
    pub fn reference() -> Self {
        Self {
            plant: PlantConfig {
                rolling_resistance: REFERENCE_ROLLING_RESISTANCE,
                ..PlantConfig::reference()
            },
            timing: Timing::default(),
            axis: Axis::Forward,
            setpoint: 300.0,
            duration: 4.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.plant.validate()?;
        self.timing.validate()?;
        if !(self.setpoint != 0.0 && self.setpoint.is_finite()) {
            return Err(Error::InvalidArgument("step setpoint must be nonzero".into()));
        }
        if self.timing.periods(self.duration) < 3 {
            return Err(Error::InvalidArgument(
                "step duration shorter than three control periods".into(),
            ));
        }
        Ok(())
    }

    /// Error trace, one sample per control period.
    pub fn run(&self, gains: PidGains) -> Result<ErrorTrace> {
        self.validate()?;
        let mut plant = Plant::new(self.plant.clone())?;
        let mut pid = PidController::pwm(gains);
        let mut act = Actuator::new(self.timing.latency);
        let dt = self.timing.dt_control();
        let n = self.timing.periods(self.duration);
        let mut errors = Vec::with_capacity(n);
        for _ in 0..n {
            let (l, r) = plant.state().encoders();
            let e = match self.axis {
                Axis::Forward => self.setpoint - l as f64,
                Axis::Steering => self.setpoint - r as f64,
            };
            errors.push(e);
            let p = pwm_saturate(pid.update(e, dt)?);
            let cmd = match self.axis {
                Axis::Forward => (p, p),
                Axis::Steering => (-p, p),
            };
            advance_period(&mut plant, &self.timing, act.push(cmd))?;
        }
        ErrorTrace::new(0.0, dt, errors)
    }

    pub fn metrics(&self, gains: PidGains) -> Result<ResponseMetrics> {
        response_metrics(&self.run(gains)?, self.setpoint)
    }
}

/// Rolling-resistance coefficient of the reference tuning scenario.
pub const REFERENCE_ROLLING_RESISTANCE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UltimateGain {
    pub ku: f64,
    pub pu: f64,
    /// Largest gain found not to sustain oscillation.
    pub kp_below: f64,
}

/// One proportional-only run made during the ultimate-gain search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainProbe {
    pub kp: f64,
    pub sustained: bool,
    pub decay_ratio: Option<f64>,
    pub period: Option<f64>,
}

/// Geometric sweep of proportional gain from `kp_start`, then bisection
/// until the bracket is narrower than 1% of the sustained gain.
pub fn find_ultimate_gain(scn: &StepScenario, kp_start: f64, kp_factor: f64, kp_max: f64) -> Result<UltimateGain> {
    ultimate_gain_search(scn, kp_start, kp_factor, kp_max, &mut Vec::new())
}

/// As `find_ultimate_gain`, appending every probe in run order to `probes`,
/// including when the search fails.
pub fn ultimate_gain_search(
    scn: &StepScenario,
    kp_start: f64,
    kp_factor: f64,
    kp_max: f64,
    probes: &mut Vec<GainProbe>,
) -> Result<UltimateGain> {
    if !(kp_start > 0.0 && kp_factor > 1.0 && kp_max.is_finite()) {
        return Err(Error::InvalidArgument(
            "ultimate gain search needs kp_start > 0, kp_factor > 1 and finite kp_max".into(),
        ));
    }
    let mut probe = |kp: f64| -> Result<OscillationAnalysis> {
        let a = analyze_oscillation(&scn.run(PidGains::new(kp, 0.0, 0.0)?)?)?;
        probes.push(GainProbe {
            kp,
            sustained: a.sustained,
            decay_ratio: a.decay_ratio,
            period: a.period,
        });
        Ok(a)
    };

    let mut lo = 0.0;
    let mut kp = kp_start;
    let mut hi_analysis;
    loop {
        if kp > kp_max {
            return Err(Error::NoUltimateGain { kp_max });
        }
        let a = probe(kp)?;
        if a.sustained {
            hi_analysis = a;
            break;
        }
        lo = kp;
        kp *= kp_factor;
    }
    let mut hi = kp;
    while hi - lo >= 0.01 * hi {
        let mid = 0.5 * (lo + hi);
        let a = probe(mid)?;
        if a.sustained {
            hi = mid;
            hi_analysis = a;
        } else {
            lo = mid;
        }
    }
    let pu = hi_analysis
        .period
        .expect("a sustained oscillation has at least two peaks");
    Ok(UltimateGain {
        ku: hi,
        pu,
        kp_below: lo,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZnKind {
    P,
    Pi,
    Pid,
}

impl std::str::FromStr for ZnKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "p" => Ok(ZnKind::P),
            "pi" => Ok(ZnKind::Pi),
            "pid" => Ok(ZnKind::Pid),
            _ => Err(Error::InvalidArgument(format!("unknown controller kind {s}"))),
        }
    }
}

pub fn zn_gains(u: UltimateGain, kind: ZnKind) -> PidGains {
    match kind {
        ZnKind::P => PidGains {
            kp: 0.5 * u.ku,
            ki: 0.0,
            kd: 0.0,
        },
        ZnKind::Pi => {
            let kp = 0.45 * u.ku;
            PidGains {
                kp,
                ki: 1.2 * kp / u.pu,
                kd: 0.0,
            }
        }
        ZnKind::Pid => {
            let kp = 0.6 * u.ku;
            PidGains {
                kp,
                ki: 2.0 * kp / u.pu,
                kd: kp * u.pu / 8.0,
            }
        }
    }
}

/// Search schedule of the four-step procedure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewMethodConfig {
    pub kp_start: f64,
    pub kp_factor: f64,
    pub kp_max: f64,
    pub ki_start: f64,
    pub ki_max: f64,
    pub kd_start: f64,
    pub kd_max: f64,
    /// Target steady-state error as a fraction of the setpoint.
    pub sse_fraction: f64,
    /// Skip the integral step (steering loops).
    pub skip_ki: bool,
}

impl Default for NewMethodConfig {
    fn default() -> Self {
        Self {
            kp_start: 0.05,
            kp_factor: 1.5,
            kp_max: 1000.0,
            ki_start: 1e-4,
            ki_max: 100.0,
            kd_start: 1e-3,
            kd_max: 10.0,
            sse_fraction: 0.01,
            skip_ki: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum TuneStep {
    Oscillate,
    HalveKp,
    RaiseKi,
    RaiseKd,
}

impl TuneStep {
    pub fn number(self) -> u8 {
        self as u8 + 1
    }

    pub fn name(self) -> &'static str {
        match self {
            TuneStep::Oscillate => "oscillate",
            TuneStep::HalveKp => "halve_kp",
            TuneStep::RaiseKi => "raise_ki",
            TuneStep::RaiseKd => "raise_kd",
        }
    }
}

/// One candidate evaluated by the procedure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TuneLogEntry {
    pub step: TuneStep,
    pub gains: PidGains,
    pub metrics: ResponseMetrics,
    pub decay_ratio: Option<f64>,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewMethodReport {
    pub ultimate: UltimateGain,
    pub halved: PidGains,
    pub halved_decay_ratio: Option<f64>,
    pub log: Vec<TuneLogEntry>,
    pub gains: PidGains,
}

fn slower(a: Option<f64>, b: Option<f64>) -> bool {
    a.unwrap_or(f64::INFINITY) > b.unwrap_or(f64::INFINITY)
}

pub fn new_method_tune(scn: &StepScenario, cfg: &NewMethodConfig) -> Result<NewMethodReport> {
    let mut log = Vec::new();
    let eval = |step: TuneStep, g: PidGains, log: &mut Vec<TuneLogEntry>| -> Result<TuneLogEntry> {
        let trace = scn.run(g)?;
        let entry = TuneLogEntry {
            step,
            gains: g,
            metrics: response_metrics(&trace, scn.setpoint)?,
            decay_ratio: analyze_oscillation(&trace)?.decay_ratio,
            accepted: false,
        };
        log.push(entry);
        Ok(entry)
    };
    let accept = |log: &mut Vec<TuneLogEntry>| {
        if let Some(e) = log.last_mut() {
            e.accepted = true;
        }
    };

    let ultimate = find_ultimate_gain(scn, cfg.kp_start, cfg.kp_factor, cfg.kp_max)?;
    eval(TuneStep::Oscillate, PidGains::new(ultimate.ku, 0.0, 0.0)?, &mut log)?;
    accept(&mut log);

    let mut gains = PidGains::new(ultimate.ku / 2.0, 0.0, 0.0)?;
    let halved_entry = eval(TuneStep::HalveKp, gains, &mut log)?;
    accept(&mut log);
    let halved = gains;
    let mut current = halved_entry.metrics;

    let sse_target = cfg.sse_fraction * scn.setpoint.abs();
    if !cfg.skip_ki && current.steady_state_error >= sse_target {
        let mut ki = cfg.ki_start;
        while ki <= cfg.ki_max {
            let cand = PidGains { ki, ..gains };
            let e = eval(TuneStep::RaiseKi, cand, &mut log)?;
            if e.metrics.steady_state_error < sse_target {
                accept(&mut log);
                gains = cand;
                current = e.metrics;
                break;
            }
            ki *= 2.0;
        }
    }

    let mut kd = cfg.kd_start;
    while kd <= cfg.kd_max {
        let cand = PidGains { kd, ..gains };
        let e = eval(TuneStep::RaiseKd, cand, &mut log)?;
        let keeps_sse = e.metrics.steady_state_error < sse_target || current.steady_state_error >= sse_target;
        if !slower(current.settling_time, e.metrics.settling_time) || !keeps_sse {
            break;
        }
        accept(&mut log);
        gains = cand;
        current = e.metrics;
        kd *= 2.0;
    }

    Ok(NewMethodReport {
        ultimate,
        halved,
        halved_decay_ratio: halved_entry.decay_ratio,
        log,
        gains,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GainKind {
    Kp,
    Ki,
    Kd,
}

impl std::str::FromStr for GainKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "kp" => Ok(GainKind::Kp),
            "ki" => Ok(GainKind::Ki),
            "kd" => Ok(GainKind::Kd),
            _ => Err(Error::InvalidArgument(format!("unknown gain {s}"))),
        }
    }
}

/// Metrics before and after scaling one gain, with directional verdicts.
/// A verdict is `None` when either side leaves the metric undefined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectsReport {
    pub which: GainKind,
    pub before_gains: PidGains,
    pub after_gains: PidGains,
    pub before: ResponseMetrics,
    pub after: ResponseMetrics,
    pub rise_time_decreased: Option<bool>,
    pub overshoot_increased: bool,
    pub overshoot_decreased: bool,
    pub settling_time_decreased: Option<bool>,
    pub sse_decreased: bool,
}

pub fn effects_check(scn: &StepScenario, base: PidGains, which: GainKind, factor: f64) -> Result<EffectsReport> {
    if !(factor > 1.0 && factor.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "effects factor must be > 1, got {factor}"
        )));
    }
    let after_gains = match which {
        GainKind::Kp => PidGains {
            kp: base.kp * factor,
            ..base
        },
        GainKind::Ki => PidGains {
            ki: base.ki * factor,
            ..base
        },
        GainKind::Kd => PidGains {
            kd: base.kd * factor,
            ..base
        },
    };
    let before = scn.metrics(base)?;
    let after = scn.metrics(after_gains)?;
    let both = |a: Option<f64>, b: Option<f64>| a.zip(b).map(|(a, b)| b < a);
    Ok(EffectsReport {
        which,
        before_gains: base,
        after_gains,
        before,
        after,
        rise_time_decreased: both(before.rise_time, after.rise_time),
        overshoot_increased: after.overshoot > before.overshoot,
        overshoot_decreased: after.overshoot < before.overshoot,
        settling_time_decreased: both(before.settling_time, after.settling_time),
        sse_decreased: after.steady_state_error < before.steady_state_error,
    })
}
