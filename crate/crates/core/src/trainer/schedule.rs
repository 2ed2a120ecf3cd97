use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AlphaMode {
    #[default]
    Fixed,
    LinearDecay,
}

/// Blend weight over training iterations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlphaSchedule {
    pub mode: AlphaMode,
    pub alpha_start: f64,
    pub alpha_end: f64,
    pub total_iters: u64,
}

impl Default for AlphaSchedule {
    fn default() -> Self {
        AlphaSchedule::fixed(0.7)
    }
}

impl AlphaSchedule {
    pub fn fixed(alpha: f64) -> Self {
        AlphaSchedule {
            mode: AlphaMode::Fixed,
            alpha_start: alpha,
            alpha_end: alpha,
            total_iters: 0,
        }
    }

    pub fn linear_decay(alpha_start: f64, alpha_end: f64, total_iters: u64) -> Self {
        AlphaSchedule {
            mode: AlphaMode::LinearDecay,
            alpha_start,
            alpha_end,
            total_iters,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (key, a) in [("alpha", self.alpha_start), ("alpha_end", self.alpha_end)] {
            if !(0.0..=1.0).contains(&a) {
                return Err(Error::invalid(key, format!("{a} is outside [0, 1]")));
            }
        }
        if self.mode == AlphaMode::Fixed && self.alpha_start != self.alpha_end {
            return Err(Error::invalid("alpha_end", "a fixed schedule needs alpha_end = alpha"));
        }
        Ok(())
    }

    /// Blend weight at `iter`; iterations past the end hold `alpha_end`.
    pub fn alpha_at(&self, iter: u64) -> f64 {
        match self.mode {
            AlphaMode::Fixed => self.alpha_start,
            AlphaMode::LinearDecay => {
                if self.total_iters == 0 || iter >= self.total_iters {
                    return self.alpha_end;
                }
                let frac = iter as f64 / self.total_iters as f64;
                self.alpha_start + (self.alpha_end - self.alpha_start) * frac
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_and_decay() {
        let f = AlphaSchedule::fixed(0.7);
        assert_eq!(f.alpha_at(0), 0.7);
        assert_eq!(f.alpha_at(12345), 0.7);
        let d = AlphaSchedule::linear_decay(1.0, 0.7, 200);
        assert_eq!(d.alpha_at(0), 1.0);
        assert!((d.alpha_at(100) - 0.85).abs() < 1e-15);
        assert_eq!(d.alpha_at(200), 0.7);
        assert_eq!(d.alpha_at(900), 0.7);
    }

    #[test]
    fn validation() {
        assert!(AlphaSchedule::fixed(1.3).validate().is_err());
        let mut s = AlphaSchedule::fixed(0.7);
        s.alpha_end = 0.5;
        assert!(s.validate().is_err());
        assert!(AlphaSchedule::linear_decay(1.0, 0.7, 10).validate().is_ok());
    }
}
