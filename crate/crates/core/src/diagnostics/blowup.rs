use serde::{Deserialize, Serialize};

use super::DiagnosticsConfig;
use crate::stepper::State;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlowupReason {
    /// `sup u` exceeded the configured threshold.
    Threshold,
    /// A cell value became NaN or infinite.
    NonFinite,
    /// The accepted step size fell below the configured floor.
    DtCollapse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlowupCheck {
    pub flagged: bool,
    pub reason: Option<BlowupReason>,
}

impl BlowupCheck {
    fn flag(reason: BlowupReason) -> Self {
        BlowupCheck {
            flagged: true,
            reason: Some(reason),
        }
    }
}

/// Numerical stand-in for the loss of boundedness at a finite time.
pub fn detect_blowup(s: &State, d: &DiagnosticsConfig, last_dt: f64) -> BlowupCheck {
    if !s.u.all_finite() || !s.v.all_finite() {
        return BlowupCheck::flag(BlowupReason::NonFinite);
    }
    if s.u.max() > d.blowup_max_u {
        return BlowupCheck::flag(BlowupReason::Threshold);
    }
    if last_dt < d.blowup_dt_floor {
        return BlowupCheck::flag(BlowupReason::DtCollapse);
    }
    BlowupCheck {
        flagged: false,
        reason: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Field, Grid};

    fn state_with_peak(g: &Grid, peak: f64) -> State {
        let u = Field::from_fn(g, |x, y| if x < 0.2 && y < 0.2 { peak } else { 1.0 });
        State::new(u, Field::constant(g, 1.0)).unwrap()
    }

    #[test]
    fn threshold_and_healthy_cases() {
        let g = Grid::unit_square(8).unwrap();
        let cfg = DiagnosticsConfig::new(1.0, 1.0, 0.1);
        let hot = detect_blowup(&state_with_peak(&g, 1e7), &cfg, 1e-3);
        assert_eq!(hot.reason, Some(BlowupReason::Threshold));
        let calm = detect_blowup(&state_with_peak(&g, 10.0), &cfg, 1e-3);
        assert!(!calm.flagged);
        let collapsed = detect_blowup(&state_with_peak(&g, 10.0), &cfg, 1e-13);
        assert_eq!(collapsed.reason, Some(BlowupReason::DtCollapse));
    }

    #[test]
    fn nan_is_flagged() {
        let g = Grid::unit_square(8).unwrap();
        let mut s = state_with_peak(&g, 2.0);
        s.u.values_mut()[5] = f64::NAN;
        let cfg = DiagnosticsConfig::new(1.0, 1.0, 0.1);
        assert_eq!(detect_blowup(&s, &cfg, 1e-3).reason, Some(BlowupReason::NonFinite));
    }
}
