//! Fuzzy color recognition from a period-output RGB light sensor.
//!
//! Raw readings are periods: a brighter channel gives a smaller value.
//! Readings are inverted into normalized intensities, fuzzified into
//! LOW/MED/HIGH per channel, and matched against one rule row per color
//! with a min-AND.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

pub const CALIBRATION_CSV: &str = include_str!("../data/color_calibration.csv");
pub const RULES_CSV: &str = include_str!("../data/color_rules.csv");

pub const NEAR_CM: f64 = 2.0;
pub const FAR_CM: f64 = 8.0;

/// Activations closer than this to the winner's are reported as ties.
pub const AMBIGUITY_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ColorClass {
    Black,
    Green,
    Red,
    Orange,
    Blue,
    Purple,
    White,
}

impl ColorClass {
    pub const ALL: [ColorClass; 7] = [
        ColorClass::Black,
        ColorClass::Green,
        ColorClass::Red,
        ColorClass::Orange,
        ColorClass::Blue,
        ColorClass::Purple,
        ColorClass::White,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            ColorClass::Black => "Black",
            ColorClass::Green => "Green",
            ColorClass::Red => "Red",
            ColorClass::Orange => "Orange",
            ColorClass::Blue => "Blue",
            ColorClass::Purple => "Purple",
            ColorClass::White => "White",
        }
    }
}

impl fmt::Display for ColorClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ColorClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ColorClass::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown color {s}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    R,
    G,
    B,
}

impl Channel {
    pub const ALL: [Channel; 3] = [Channel::R, Channel::G, Channel::B];

    pub fn name(self) -> &'static str {
        match self {
            Channel::R => "R",
            Channel::G => "G",
            Channel::B => "B",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelReading {
    pub r: f64,
    pub g: f64,
    pub b: f64,
}

impl ChannelReading {
    pub fn new(r: f64, g: f64, b: f64) -> Result<Self> {
        for v in [r, g, b] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("raw readings must be > 0, got {v}")));
            }
        }
        Ok(Self { r, g, b })
    }

    pub fn get(&self, ch: Channel) -> f64 {
        match ch {
            Channel::R => self.r,
            Channel::G => self.g,
            Channel::B => self.b,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColorCalibration {
    /// Indexed by `ColorClass::index`: `(near, far)`.
    rows: [(ChannelReading, ChannelReading); 7],
}

fn split_csv(line: &str) -> Vec<&str> {
    line.split(',').map(str::trim).collect()
}

/// Data lines of a CSV with the given header; blank lines are skipped.
fn csv_rows<'a>(text: &'a str, header: &str) -> Result<Vec<(usize, Vec<&'a str>)>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.trim() == header => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                msg: format!("expected header `{header}`"),
            })
        }
    }
    Ok(lines.map(|(i, l)| (i + 1, split_csv(l))).collect())
}

fn color_keyed<T, F>(text: &str, header: &str, width: usize, mut parse: F) -> Result<[T; 7]>
where
    T: Copy + Default,
    F: FnMut(usize, &[&str]) -> Result<T>,
{
    let mut out = [None; 7];
    for (line, fields) in csv_rows(text, header)? {
        if fields.len() != width + 1 {
            return Err(Error::Parse {
                line,
                msg: format!("expected {} fields, found {}", width + 1, fields.len()),
            });
        }
        let c: ColorClass = fields[0].parse().map_err(|e: Error| Error::Parse {
            line,
            msg: e.to_string(),
        })?;
        if out[c.index()].is_some() {
            return Err(Error::Parse {
                line,
                msg: format!("duplicate color {c}"),
            });
        }
        out[c.index()] = Some(parse(line, &fields[1..])?);
    }
    let mut rows = [T::default(); 7];
    for c in ColorClass::ALL {
        rows[c.index()] = out[c.index()].ok_or_else(|| Error::Parse {
            line: 0,
            msg: format!("missing color {c}"),
        })?;
    }
    Ok(rows)
}

impl Default for ChannelReading {
    fn default() -> Self {
        Self { r: 1.0, g: 1.0, b: 1.0 }
    }
}

impl ColorCalibration {
    pub const HEADER: &'static str = "color,far_r,far_g,far_b,near_r,near_g,near_b";

    /// The shipped calibration table.
    pub fn reference() -> Self {
        Self::parse_csv(CALIBRATION_CSV).expect("shipped calibration parses")
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let pairs = color_keyed(text, Self::HEADER, 6, |line, f| {
            let mut v = [0.0; 6];
            for (k, s) in f.iter().enumerate() {
                v[k] = s.parse::<f64>().map_err(|e| Error::Parse {
                    line,
                    msg: format!("field `{s}`: {e}"),
                })?;
            }
            let far = ChannelReading::new(v[0], v[1], v[2]).map_err(|e| Error::Parse {
                line,
                msg: e.to_string(),
            })?;
            let near = ChannelReading::new(v[3], v[4], v[5]).map_err(|e| Error::Parse {
                line,
                msg: e.to_string(),
            })?;
            Ok((near, far))
        })?;
        Ok(Self { rows: pairs })
    }

    pub fn near(&self, c: ColorClass) -> ChannelReading {
        self.rows[c.index()].0
    }

    pub fn far(&self, c: ColorClass) -> ChannelReading {
        self.rows[c.index()].1
    }

    /// All 14 calibration points as `(color, reading)`.
    pub fn points(&self) -> impl Iterator<Item = (ColorClass, ChannelReading)> + '_ {
        ColorClass::ALL
            .into_iter()
            .flat_map(move |c| [(c, self.far(c)), (c, self.near(c))])
    }

    /// Smallest and largest raw value in a channel.
    pub fn channel_range(&self, ch: Channel) -> (f64, f64) {
        self.points()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, r)| {
                (lo.min(r.get(ch)), hi.max(r.get(ch)))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Level {
    #[default]
    Low,
    Med,
    High,
}

impl Level {
    pub const ALL: [Level; 3] = [Level::Low, Level::Med, Level::High];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Level::Low => "LOW",
            Level::Med => "MED",
            Level::High => "HIGH",
        }
    }
}

/// One LOW/MED/HIGH label per channel for each color.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColorRuleSet {
    rows: [[Level; 3]; 7],
}

impl ColorRuleSet {
    pub const HEADER: &'static str = "color,r_low,r_med,r_high,g_low,g_med,g_high,b_low,b_med,b_high";

    pub fn new(rows: [[Level; 3]; 7]) -> Self {
        Self { rows }
    }

    /// The shipped rule table.
    pub fn reference() -> Self {
        Self::parse_csv(RULES_CSV).expect("shipped rules parse")
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let rows = color_keyed(text, Self::HEADER, 9, |line, f| {
            let mut labels = [Level::Low; 3];
            for (ch, triple) in f.chunks(3).enumerate() {
                let bits: Vec<u8> = triple
                    .iter()
                    .map(|s| match *s {
                        "0" => Ok(0),
                        "1" => Ok(1),
                        _ => Err(Error::Parse {
                            line,
                            msg: format!("expected 0 or 1, found `{s}`"),
                        }),
                    })
                    .collect::<Result<_>>()?;
                if bits.iter().sum::<u8>() != 1 {
                    return Err(Error::Parse {
                        line,
                        msg: format!("channel {} needs exactly one 1", Channel::ALL[ch].name()),
                    });
                }
                labels[ch] = Level::ALL[bits.iter().position(|&b| b == 1).expect("one bit set")];
            }
            Ok(labels)
        })?;
        Ok(Self { rows })
    }

    pub fn label(&self, c: ColorClass, ch: Channel) -> Level {
        self.rows[c.index()][ch as usize]
    }

    /// The 7×9 one-hot matrix, rows in color order.
    pub fn matrix(&self) -> [[u8; 9]; 7] {
        let mut m = [[0u8; 9]; 7];
        for (i, row) in self.rows.iter().enumerate() {
            for (ch, l) in row.iter().enumerate() {
                m[i][3 * ch + l.index()] = 1;
            }
        }
        m
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("{}\n", Self::HEADER);
        for c in ColorClass::ALL {
            let bits: Vec<String> = self.matrix()[c.index()].iter().map(|b| b.to_string()).collect();
            s += &format!("{},{}\n", c.name(), bits.join(","));
        }
        s
    }
}

/// Rank over the rationals, by fraction-free elimination.
pub fn rule_matrix_rank<const R: usize, const C: usize>(m: &[[u8; C]; R]) -> usize {
    let mut a: Vec<Vec<i128>> = m.iter().map(|r| r.iter().map(|&v| v as i128).collect()).collect();
    let mut rank = 0;
    let mut prev = 1i128;
    for col in 0..C {
        let Some(p) = (rank..R).find(|&r| a[r][col] != 0) else {
            continue;
        };
        a.swap(rank, p);
        for r in rank + 1..R {
            for k in col + 1..C {
                a[r][k] = (a[rank][col] * a[r][k] - a[r][col] * a[rank][k]) / prev;
            }
            a[r][col] = 0;
        }
        prev = a[rank][col];
        rank += 1;
        if rank == R {
            break;
        }
    }
    rank
}

/// Number of colors with pairwise different rule rows.
pub fn distinct_rule_rows(rules: &ColorRuleSet) -> usize {
    let m = rules.matrix();
    (0..m.len()).filter(|&i| !m[..i].contains(&m[i])).count()
}

/// Reading at `distance_cm`, interpolated linearly between the near and far
/// calibration rows, with each channel scaled by `1 + N(0, noise)`.
pub fn simulate_sensor_with(
    c: ColorClass,
    distance_cm: f64,
    cal: &ColorCalibration,
    noise: f64,
    rng: &mut impl rand::Rng,
) -> Result<ChannelReading> {
    if !(NEAR_CM..=FAR_CM).contains(&distance_cm) {
        return Err(Error::DistanceOutOfRange(distance_cm));
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(Error::InvalidArgument(format!("noise must be >= 0, got {noise}")));
    }
    let t = (distance_cm - NEAR_CM) / (FAR_CM - NEAR_CM);
    let (near, far) = (cal.near(c), cal.far(c));
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut ch = |n: f64, f: f64| {
        let v = n + (f - n) * t;
        if noise == 0.0 {
            v
        } else {
            let z: f64 = normal.sample(rng);
            (v * (1.0 + noise * z)).max(f64::MIN_POSITIVE)
        }
    };
    let r = ch(near.r, far.r);
    let g = ch(near.g, far.g);
    let b = ch(near.b, far.b);
    ChannelReading::new(r, g, b)
}

pub fn simulate_sensor(
    c: ColorClass,
    distance_cm: f64,
    cal: &ColorCalibration,
    noise: f64,
    seed: u64,
) -> Result<ChannelReading> {
    simulate_sensor_with(c, distance_cm, cal, noise, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Inverse-period intensity, min-max normalized to the channel's
/// calibration extremes and clamped to `[0, 1]`.
pub fn raw_to_intensity(raw: f64, ch: Channel, cal: &ColorCalibration) -> Result<f64> {
    if !(raw > 0.0) {
        return Err(Error::InvalidArgument(format!("raw reading must be > 0, got {raw}")));
    }
    let (lo, hi) = cal.channel_range(ch);
    let x = (1.0 / raw - 1.0 / hi) / (1.0 / lo - 1.0 / hi);
    Ok(x.clamp(0.0, 1.0))
}

/// LOW/MED/HIGH partition of one channel. With no HIGH peak MED is the
/// right shoulder and HIGH is identically zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelMfs {
    pub low: f64,
    pub med: f64,
    pub high: Option<f64>,
}

impl ChannelMfs {
    pub fn new(low: f64, med: f64, high: Option<f64>) -> Result<Self> {
        let ordered = low < med && high.is_none_or(|h| med < h);
        if !ordered || !(0.0..=1.0).contains(&low) || high.is_some_and(|h| h > 1.0) || med > 1.0 {
            return Err(Error::InvalidArgument(format!(
                "membership peaks must increase within [0, 1]: {low}, {med}, {high:?}"
            )));
        }
        Ok(Self { low, med, high })
    }

    /// Degrees `[low, med, high]`, summing to 1.
    pub fn degrees(&self, x: f64) -> [f64; 3] {
        let x = x.clamp(0.0, 1.0);
        if x <= self.low {
            return [1.0, 0.0, 0.0];
        }
        if x <= self.med {
            let m = (x - self.low) / (self.med - self.low);
            return [1.0 - m, m, 0.0];
        }
        match self.high {
            None => [0.0, 1.0, 0.0],
            Some(h) if x < h => {
                let hi = (x - self.med) / (h - self.med);
                [0.0, 1.0 - hi, hi]
            }
            Some(_) => [0.0, 0.0, 1.0],
        }
    }
}

/// Per-channel membership partitions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColorMfs {
    pub channels: [ChannelMfs; 3],
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Peaks at the median intensity of the calibration points carrying each
/// label. HIGH may be unused; LOW and MED may not.
pub fn calibrate_memberships(cal: &ColorCalibration, rules: &ColorRuleSet) -> Result<ColorMfs> {
    let mut channels = [ChannelMfs {
        low: 0.0,
        med: 1.0,
        high: None,
    }; 3];
    for (k, ch) in Channel::ALL.into_iter().enumerate() {
        let mut groups: [Vec<f64>; 3] = Default::default();
        for (c, reading) in cal.points() {
            groups[rules.label(c, ch).index()].push(raw_to_intensity(reading.get(ch), ch, cal)?);
        }
        let [low, med, high] = groups;
        let unused = |l: Level| Error::UnusedRuleLabel {
            channel: ch.name().into(),
            label: l.name().into(),
        };
        if low.is_empty() {
            return Err(unused(Level::Low));
        }
        if med.is_empty() {
            return Err(unused(Level::Med));
        }
        let high = (!high.is_empty()).then(|| median(high));
        channels[k] = ChannelMfs::new(median(low), median(med), high)?;
    }
    Ok(ColorMfs { channels })
}

pub fn fuzzify_channel(intensity: f64, mfs: &ColorMfs, ch: Channel) -> [f64; 3] {
    mfs.channels[ch as usize].degrees(intensity)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub winner: ColorClass,
    pub activation: f64,
    /// Indexed by `ColorClass::index`.
    pub activations: [f64; 7],
    /// Every color tied with the winner, the winner included.
    pub tied: Vec<ColorClass>,
}

impl Classification {
    pub fn is_ambiguous(&self) -> bool {
        self.tied.len() > 1
    }
}

pub fn classify(
    reading: &ChannelReading,
    mfs: &ColorMfs,
    rules: &ColorRuleSet,
    cal: &ColorCalibration,
) -> Result<Classification> {
    let mut degrees = [[0.0; 3]; 3];
    for ch in Channel::ALL {
        degrees[ch as usize] = fuzzify_channel(raw_to_intensity(reading.get(ch), ch, cal)?, mfs, ch);
    }
    let mut activations = [0.0; 7];
    for c in ColorClass::ALL {
        activations[c.index()] = Channel::ALL
            .into_iter()
            .map(|ch| degrees[ch as usize][rules.label(c, ch).index()])
            .fold(1.0, f64::min);
    }
    let mut winner = ColorClass::Black;
    for c in ColorClass::ALL {
        if activations[c.index()] > activations[winner.index()] {
            winner = c;
        }
    }
    let activation = activations[winner.index()];
    if activation <= 0.0 {
        return Err(Error::UnrecognizedColor);
    }
    let tied = ColorClass::ALL
        .into_iter()
        .filter(|c| activation - activations[c.index()] <= AMBIGUITY_EPS)
        .collect();
    Ok(Classification {
        winner,
        activation,
        activations,
        tied,
    })
}

/// The shipped calibration, rules and derived memberships together.
#[derive(Debug, Clone, PartialEq)]
pub struct ColorClassifier {
    pub calibration: ColorCalibration,
    pub rules: ColorRuleSet,
    pub mfs: ColorMfs,
}

impl ColorClassifier {
    pub fn new(calibration: ColorCalibration, rules: ColorRuleSet) -> Result<Self> {
        let mfs = calibrate_memberships(&calibration, &rules)?;
        Ok(Self {
            calibration,
            rules,
            mfs,
        })
    }

    pub fn reference() -> Self {
        Self::new(ColorCalibration::reference(), ColorRuleSet::reference()).expect("shipped color data is consistent")
    }

    pub fn classify(&self, reading: &ChannelReading) -> Result<Classification> {
        classify(reading, &self.mfs, &self.rules, &self.calibration)
    }
}
