//! PID whose gains are adjusted online from fuzzy rules over the error and
//! its rate of change.

use crate::control::pid::{PidController, PidGains};
use crate::error::{check_dt, Result};
use crate::fuzzy::{self, LinguisticVariable, RuleTable, TermDegrees};

/// Increments of the three gains, in output-universe units.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GainDeltas {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
}

/// Physical gain change per output-universe unit.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GainScales {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
}

impl GainScales {
    pub fn is_zero(&self) -> bool {
        self.kp == 0.0 && self.ki == 0.0 && self.kd == 0.0
    }
}

/// The fuzzy part on its own: maps crisp `(e, ec)` to gain increments.
#[derive(Debug, Clone, PartialEq)]
pub struct GainScheduler {
    pub e_var: LinguisticVariable,
    pub ec_var: LinguisticVariable,
    pub out_vars: [LinguisticVariable; 3],
    pub tables: [RuleTable; 3],
    /// Quantization gain taking raw error into the E universe.
    pub k_e: f64,
    /// Quantization gain taking raw error rate into the EC universe.
    pub k_ec: f64,
}

impl Default for GainScheduler {
    fn default() -> Self {
        Self::standard(1.0, 1.0)
    }
}

impl GainScheduler {
    /// Standard universes and the three shipped rule tables.
    pub fn standard(k_e: f64, k_ec: f64) -> Self {
        let out = LinguisticVariable::standard_output();
        Self {
            e_var: LinguisticVariable::standard_input(),
            ec_var: LinguisticVariable::standard_input(),
            out_vars: [out.clone(), out.clone(), out],
            tables: [fuzzy::kp_rules(), fuzzy::ki_rules(), fuzzy::kd_rules()],
            k_e,
            k_ec,
        }
    }

    /// Inputs are scaled and then clamped into their universes.
    pub fn evaluate(&self, e: f64, ec: f64) -> Result<GainDeltas> {
        let de = fuzzy::fuzzify(&self.e_var, self.k_e * e);
        let dec = fuzzy::fuzzify(&self.ec_var, self.k_ec * ec);
        let out = |i: usize| -> Result<f64> {
            let agg: TermDegrees = fuzzy::infer(&self.tables[i], &de, &dec);
            fuzzy::defuzzify_centroid(&self.out_vars[i], &agg)
        };
        Ok(GainDeltas {
            kp: out(0)?,
            ki: out(1)?,
            kd: out(2)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FuzzyPidController {
    base: PidGains,
    scales: GainScales,
    scheduler: GainScheduler,
    inner: PidController,
    prev_error: f64,
    first_step: bool,
    last_deltas: GainDeltas,
}

impl FuzzyPidController {
    pub fn new(base: PidGains, scales: GainScales, scheduler: GainScheduler, output_limit: f64) -> Self {
        Self {
            base,
            scales,
            scheduler,
            inner: PidController::new(base, output_limit),
            prev_error: 0.0,
            first_step: true,
            last_deltas: GainDeltas::default(),
        }
    }

    pub fn base_gains(&self) -> PidGains {
        self.base
    }

    pub fn scales(&self) -> GainScales {
        self.scales
    }

    pub fn effective_gains(&self) -> PidGains {
        self.inner.gains()
    }

    pub fn last_deltas(&self) -> GainDeltas {
        self.last_deltas
    }

    pub fn reset(&mut self) {
        self.inner.reset();
        self.inner.set_gains(self.base);
        self.prev_error = 0.0;
        self.first_step = true;
        self.last_deltas = GainDeltas::default();
    }

    /// One control period. `ec` is the backward difference of the raw error
    /// (zero on the first step), scaled by `k_ec` only inside the scheduler.
    pub fn update(&mut self, error: f64, dt: f64) -> Result<(f64, PidGains)> {
        check_dt(dt)?;
        let ec = if self.first_step {
            0.0
        } else {
            (error - self.prev_error) / dt
        };
        self.prev_error = error;
        self.first_step = false;

        let d = self.scheduler.evaluate(error, ec)?;
        self.last_deltas = d;
        let s = self.scales;
        let eff = PidGains {
            kp: f64::max(0.0, self.base.kp + s.kp * d.kp),
            ki: f64::max(0.0, self.base.ki + s.ki * d.ki),
            kd: f64::max(0.0, self.base.kd + s.kd * d.kd),
        };
        self.inner.set_gains(eff);
        let u = self.inner.update(error, dt)?;
        Ok((u, eff))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ctrl(scales: GainScales) -> FuzzyPidController {
        FuzzyPidController::new(
            PidGains::new(2.0, 0.5, 0.1).unwrap(),
            scales,
            GainScheduler::standard(0.05, 0.01),
            255.0,
        )
    }

    #[test]
    fn zero_point_is_near_zero() {
        let d = GainScheduler::default().evaluate(0.0, 0.0).unwrap();
        assert_eq!(d.kp, 0.0);
        assert_eq!(d.ki, 0.0);
        assert!(d.kd < 0.0 && d.kd.abs() <= 0.5, "{d:?}");
    }

    #[test]
    fn large_positive_error_and_rate_lowers_kp() {
        let s = GainScheduler::default();
        let d = s.evaluate(3.0, 3.0).unwrap();
        assert!(d.kp < -2.0, "{d:?}");
        let d = s.evaluate(-3.0, -3.0).unwrap();
        assert!(d.kp > 2.0, "{d:?}");

        let mut c = FuzzyPidController::new(
            PidGains::new(2.0, 0.0, 0.0).unwrap(),
            GainScales {
                kp: 0.5,
                ki: 0.0,
                kd: 0.0,
            },
            GainScheduler::standard(1.0, 1.0),
            255.0,
        );
        c.update(0.0, 1.0).unwrap();
        let (_, eff) = c.update(3.0, 1.0).unwrap();
        assert!(eff.kp < 2.0);
    }

    #[test]
    fn zero_scales_reproduce_plain_pid() {
        let mut f = ctrl(GainScales::default());
        let mut p = PidController::new(PidGains::new(2.0, 0.5, 0.1).unwrap(), 255.0);
        for k in 0..500 {
            let e = 300.0 * (k as f64 * 0.037).sin() - 40.0;
            let (u, g) = f.update(e, 0.01).unwrap();
            assert_eq!(u.to_bits(), p.update(e, 0.01).unwrap().to_bits());
            assert_eq!(g, p.gains());
        }
    }

    #[test]
    fn rejects_bad_step() {
        assert!(ctrl(GainScales::default()).update(1.0, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn effective_gains_never_negative(
            errs in prop::collection::vec(-1e4f64..1e4, 1..100),
            sp in 0.0f64..50.0, si in 0.0f64..50.0, sd in 0.0f64..50.0,
        ) {
            let mut c = ctrl(GainScales { kp: sp, ki: si, kd: sd });
            for e in errs {
                let (u, g) = c.update(e, 0.01).unwrap();
                prop_assert!(g.kp >= 0.0 && g.ki >= 0.0 && g.kd >= 0.0);
                prop_assert!(u.abs() <= 255.0);
            }
        }
    }
}
