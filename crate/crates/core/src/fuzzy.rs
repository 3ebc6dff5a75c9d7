//! Mamdani fuzzy machinery: seven-term partitions, 7×7 rule tables,
//! min/max inference and centroid defuzzification.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// The seven linguistic terms, ordered from most negative to most positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    NB,
    NM,
    NS,
    ZO,
    PS,
    PM,
    PB,
}

impl Term {
    pub const ALL: [Term; 7] = [Term::NB, Term::NM, Term::NS, Term::ZO, Term::PS, Term::PM, Term::PB];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn code(self) -> &'static str {
        match self {
            Term::NB => "NB",
            Term::NM => "NM",
            Term::NS => "NS",
            Term::ZO => "ZO",
            Term::PS => "PS",
            Term::PM => "PM",
            Term::PB => "PB",
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Term {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Term::ALL
            .into_iter()
            .find(|t| t.code() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown term code {s:?}")))
    }
}

/// Piecewise-linear membership function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MembershipFunction {
    /// Zero outside `(a, c)`, one at `b`.
    Triangular { a: f64, b: f64, c: f64 },
    /// One up to `b`, falling to zero at `c`.
    LeftShoulder { b: f64, c: f64 },
    /// Zero up to `a`, rising to one at `b` and staying there.
    RightShoulder { a: f64, b: f64 },
}

impl MembershipFunction {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            MembershipFunction::Triangular { a, b, c } => {
                if x <= a || x >= c {
                    if x == b {
                        1.0
                    } else {
                        0.0
                    }
                } else if x <= b {
                    (x - a) / (b - a)
                } else {
                    (c - x) / (c - b)
                }
            }
            MembershipFunction::LeftShoulder { b, c } => {
                if x <= b {
                    1.0
                } else if x >= c {
                    0.0
                } else {
                    (c - x) / (c - b)
                }
            }
            MembershipFunction::RightShoulder { a, b } => {
                if x >= b {
                    1.0
                } else if x <= a {
                    0.0
                } else {
                    (x - a) / (b - a)
                }
            }
        }
    }

    fn vertices(&self) -> Vec<f64> {
        match *self {
            MembershipFunction::Triangular { a, b, c } => vec![a, b, c],
            MembershipFunction::LeftShoulder { b, c } => vec![b, c],
            MembershipFunction::RightShoulder { a, b } => vec![a, b],
        }
    }
}

/// Degree per linguistic term.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TermDegrees(pub [f64; 7]);

impl TermDegrees {
    pub fn single(t: Term, d: f64) -> Self {
        let mut out = Self::default();
        out.0[t.index()] = d;
        out
    }

    pub fn get(&self, t: Term) -> f64 {
        self.0[t.index()]
    }

    pub fn set(&mut self, t: Term, d: f64) {
        self.0[t.index()] = d;
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(0.0, f64::max)
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|d| *d <= 0.0)
    }
}

/// A seven-term Ruspini partition over `[lo, hi]`: triangles between
/// adjacent peaks, shoulders for NB and PB.
#[derive(Debug, Clone, PartialEq)]
pub struct LinguisticVariable {
    peaks: [f64; 7],
    mfs: [MembershipFunction; 7],
}

impl LinguisticVariable {
    /// Builds the partition from strictly increasing peaks; `peaks[0]` and
    /// `peaks[6]` become the universe bounds.
    pub fn from_peaks(peaks: [f64; 7]) -> Result<Self> {
        if peaks.iter().any(|p| !p.is_finite()) || peaks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(format!(
                "term peaks must be finite and strictly increasing: {peaks:?}"
            )));
        }
        let mfs = std::array::from_fn(|i| match i {
            0 => MembershipFunction::LeftShoulder {
                b: peaks[0],
                c: peaks[1],
            },
            6 => MembershipFunction::RightShoulder {
                a: peaks[5],
                b: peaks[6],
            },
            _ => MembershipFunction::Triangular {
                a: peaks[i - 1],
                b: peaks[i],
                c: peaks[i + 1],
            },
        });
        Ok(Self { peaks, mfs })
    }

    /// Evenly spaced peaks from `lo` to `hi`.
    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        let step = (hi - lo) / 6.0;
        Self::from_peaks(std::array::from_fn(|i| if i == 6 { hi } else { lo + step * i as f64 }))
    }

    /// Symmetric partition on `[-half, half]` with peaks at
    /// `±half·(k/3)^power`; `power > 1` packs the inner terms toward zero.
    pub fn graded(half: f64, power: f64) -> Result<Self> {
        if !(half > 0.0) || !(power > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "graded partition needs half > 0 and power > 0, got {half}, {power}"
            )));
        }
        Self::from_peaks(std::array::from_fn(|i| {
            let k = i as f64 - 3.0;
            k.signum() * half * (k.abs() / 3.0).powf(power)
        }))
    }

    /// The error / error-rate universe: `[-3, 3]` with integer peaks.
    pub fn standard_input() -> Self {
        Self::from_peaks([-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0]).expect("static peaks")
    }

    /// The gain-increment universe: `[-3, 3]` with cubic-graded peaks.
    pub fn standard_output() -> Self {
        Self::graded(3.0, 3.0).expect("static parameters")
    }

    pub fn lo(&self) -> f64 {
        self.peaks[0]
    }

    pub fn hi(&self) -> f64 {
        self.peaks[6]
    }

    pub fn peak(&self, t: Term) -> f64 {
        self.peaks[t.index()]
    }

    pub fn membership(&self, t: Term) -> &MembershipFunction {
        &self.mfs[t.index()]
    }

    /// Aggregated output membership: pointwise max of each term clipped at its degree.
    pub fn aggregate_at(&self, agg: &TermDegrees, x: f64) -> f64 {
        self.mfs
            .iter()
            .zip(agg.0)
            .filter(|(_, d)| *d > 0.0)
            .map(|(mf, d)| mf.eval(x).min(d))
            .fold(0.0, f64::max)
    }
}

/// Degrees of `x` (clamped into the universe) in every term.
pub fn fuzzify(v: &LinguisticVariable, x: f64) -> TermDegrees {
    let x = if x.is_nan() { 0.0 } else { x.clamp(v.lo(), v.hi()) };
    TermDegrees(std::array::from_fn(|i| v.mfs[i].eval(x)))
}

/// A 7×7 rule grid indexed by (EC term, E term).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleTable {
    cells: [[Term; 7]; 7],
}

impl RuleTable {
    pub fn new(cells: [[Term; 7]; 7]) -> Self {
        Self { cells }
    }

    pub fn get(&self, ec: Term, e: Term) -> Term {
        self.cells[ec.index()][e.index()]
    }

    /// Plain-text grid: one line per EC term (NB first), seven space-separated
    /// codes per line, one per E term, each line newline-terminated.
    pub fn to_grid(&self) -> String {
        let mut out = String::with_capacity(7 * 21);
        for row in &self.cells {
            let line: Vec<&str> = row.iter().map(|t| t.code()).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn parse_grid(s: &str) -> Result<Self> {
        let rows: Vec<(usize, &str)> = s
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| (i + 1, l))
            .collect();
        if rows.len() != 7 {
            return Err(Error::Parse {
                line: rows.last().map_or(1, |r| r.0),
                msg: format!("expected 7 rows, found {}", rows.len()),
            });
        }
        let mut cells = [[Term::ZO; 7]; 7];
        for (r, (line_no, line)) in rows.into_iter().enumerate() {
            let codes: Vec<&str> = line.split_whitespace().collect();
            if codes.len() != 7 {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("expected 7 terms, found {}", codes.len()),
                });
            }
            for (c, code) in codes.into_iter().enumerate() {
                cells[r][c] = code.parse().map_err(|_| Error::Parse {
                    line: line_no,
                    msg: format!("unknown term {code:?}"),
                })?;
            }
        }
        Ok(Self { cells })
    }
}

/// Min for AND, max for aggregation.
pub fn infer(rules: &RuleTable, e: &TermDegrees, ec: &TermDegrees) -> TermDegrees {
    let mut out = TermDegrees::default();
    for ec_t in Term::ALL {
        let dec = ec.get(ec_t);
        if dec <= 0.0 {
            continue;
        }
        for e_t in Term::ALL {
            let s = dec.min(e.get(e_t));
            if s > 0.0 {
                let t = rules.get(ec_t, e_t);
                out.set(t, out.get(t).max(s));
            }
        }
    }
    out
}

/// Centroid of the aggregated output set.
///
/// The aggregate is piecewise linear, so the integral is evaluated exactly
/// between its breakpoints: membership vertices, clip levels and crossings
/// between clipped terms.
pub fn defuzzify_centroid(v: &LinguisticVariable, agg: &TermDegrees) -> Result<f64> {
    if agg.is_zero() {
        return Err(Error::NoRuleFired);
    }
    let mut verts: Vec<f64> = v.mfs.iter().flat_map(|m| m.vertices()).collect();
    verts.push(v.lo());
    verts.push(v.hi());
    verts.sort_by(f64::total_cmp);
    verts.dedup();

    let active: Vec<(usize, f64)> = agg
        .0
        .iter()
        .enumerate()
        .filter(|(_, d)| **d > 0.0)
        .map(|(i, d)| (i, d.min(1.0)))
        .collect();

    let mut area = 0.0;
    let mut moment = 0.0;
    let mut pts: Vec<f64> = Vec::new();
    for w in verts.windows(2) {
        let (x0, x1) = (w[0], w[1]);
        // Each membership is linear on [x0, x1]: y = y0 + s (x - x0).
        let lines: Vec<(f64, f64, f64)> = active
            .iter()
            .map(|&(i, d)| {
                let y0 = v.mfs[i].eval(x0);
                let y1 = v.mfs[i].eval(x1);
                (y0, (y1 - y0) / (x1 - x0), d)
            })
            .collect();
        pts.clear();
        pts.push(x0);
        pts.push(x1);
        let mut cand = |x: f64| {
            if x > x0 && x < x1 {
                pts.push(x);
            }
        };
        for (k, &(y0, s, d)) in lines.iter().enumerate() {
            if s != 0.0 {
                cand(x0 + (d - y0) / s);
            }
            for &(z0, t, e) in &lines[k + 1..] {
                if s != t {
                    cand(x0 + (z0 - y0) / (s - t));
                }
                if s != 0.0 {
                    cand(x0 + (e - y0) / s);
                }
                if t != 0.0 {
                    cand(x0 + (d - z0) / t);
                }
            }
        }
        pts.sort_by(f64::total_cmp);
        let mu = |x: f64| {
            lines
                .iter()
                .map(|&(y0, s, d)| (y0 + s * (x - x0)).clamp(0.0, 1.0).min(d))
                .fold(0.0, f64::max)
        };
        for seg in pts.windows(2) {
            let (a, b) = (seg[0], seg[1]);
            let h = b - a;
            if h <= 0.0 {
                continue;
            }
            let (ma, mb) = (mu(a), mu(b));
            area += h * (ma + mb) / 2.0;
            moment += h / 6.0 * (ma * (2.0 * a + b) + mb * (a + 2.0 * b));
        }
    }
    if area <= 0.0 {
        return Err(Error::NoRuleFired);
    }
    Ok((moment / area).clamp(v.lo(), v.hi()))
}

use Term::*;

const KP_RULES: [[Term; 7]; 7] = [
    [PB, PB, PM, PM, PS, ZO, ZO],
    [PB, PB, PM, PS, PS, ZO, NS],
    [PM, PM, PM, PS, ZO, NS, NS],
    [PM, PM, PS, ZO, NS, NM, NM],
    [PS, PS, ZO, NS, NS, NM, NM],
    [PS, ZO, NS, NM, NM, NM, NB],
    [ZO, ZO, NM, NM, NM, NB, NB],
];

const KI_RULES: [[Term; 7]; 7] = [
    [NB, NB, NB, NB, NM, ZO, ZO],
    [NB, NB, NB, NB, NM, ZO, ZO],
    [NM, NM, NM, NM, ZO, PS, PS],
    [NM, NM, NS, ZO, PS, PM, PM],
    [NS, NS, ZO, PM, PM, PM, PM],
    [ZO, ZO, PM, PB, PB, PB, PB],
    [ZO, ZO, PM, PB, PB, PB, PB],
];

const KD_RULES: [[Term; 7]; 7] = [
    [PS, NS, NB, NB, NB, NM, PS],
    [PS, NS, NB, NM, NM, NS, ZO],
    [ZO, NS, NM, NM, NS, NS, ZO],
    [ZO, NS, NS, NS, NS, NS, ZO],
    [ZO, ZO, ZO, ZO, ZO, ZO, ZO],
    [PB, NS, PS, PS, PS, PS, PB],
    [PB, PM, PM, PM, PS, PS, PB],
];

/// Proportional-gain increment rules.
pub fn kp_rules() -> RuleTable {
    RuleTable::new(KP_RULES)
}

/// Integral-gain increment rules.
pub fn ki_rules() -> RuleTable {
    RuleTable::new(KI_RULES)
}

/// Derivative-gain increment rules.
pub fn kd_rules() -> RuleTable {
    RuleTable::new(KD_RULES)
}
