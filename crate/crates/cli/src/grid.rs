//! Sweep axes written as `start:stop:step`, a comma list, or a single value.

use std::fmt;
use std::str::FromStr;

/// Upper bound on the number of points one axis may expand to.
pub const MAX_GRID_POINTS: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid grid `{input}`: {reason}")]
pub struct GridError {
    pub input: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GridSpec {
    /// Inclusive range; the last point is the largest `start + i·step ≤ stop`.
    Range {
        start: f64,
        stop: f64,
        step: f64,
    },
    List(Vec<f64>),
}

impl GridSpec {
    pub fn range(start: f64, stop: f64, step: f64) -> Result<Self, GridError> {
        let spec = GridSpec::Range { start, stop, step };
        spec.check().map_err(|reason| GridError {
            input: spec.to_string(),
            reason,
        })?;
        Ok(spec)
    }

    fn check(&self) -> Result<(), String> {
        match self {
            GridSpec::Range { start, stop, step } => {
                if !(start.is_finite() && stop.is_finite() && step.is_finite()) {
                    return Err("bounds and step must be finite".into());
                }
                if *step <= 0.0 {
                    return Err("step must be > 0".into());
                }
                if stop < start {
                    return Err("stop must not be below start".into());
                }
                let cells = (stop - start) / step;
                if !(cells.is_finite() && cells < MAX_GRID_POINTS as f64) {
                    return Err(format!("more than {MAX_GRID_POINTS} points"));
                }
                Ok(())
            }
            GridSpec::List(v) => {
                if v.is_empty() {
                    return Err("empty list".into());
                }
                if v.len() > MAX_GRID_POINTS {
                    return Err(format!("more than {MAX_GRID_POINTS} points"));
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return Err("values must be finite".into());
                }
                Ok(())
            }
        }
    }

    pub fn len(&self) -> usize {
        match self {
            GridSpec::Range { start, stop, step } => {
                ((stop - start) / step + 1e-9).floor() as usize + 1
            }
            GridSpec::List(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn values(&self) -> Vec<f64> {
        match self {
            GridSpec::Range { start, step, .. } => {
                (0..self.len()).map(|i| start + i as f64 * step).collect()
            }
            GridSpec::List(v) => v.clone(),
        }
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridSpec::Range { start, stop, step } => write!(f, "{start}:{stop}:{step}"),
            GridSpec::List(v) => {
                let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                f.write_str(&parts.join(","))
            }
        }
    }
}

impl FromStr for GridSpec {
    type Err = GridError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let fail = |reason: String| GridError {
            input: s.to_string(),
            reason,
        };
        let number = |t: &str| -> Result<f64, GridError> {
            t.trim()
                .parse::<f64>()
                .map_err(|_| fail(format!("`{}` is not a number", t.trim())))
        };
        let spec = if s.contains(':') {
            let parts: Vec<&str> = s.split(':').collect();
            if parts.len() != 3 {
                return Err(fail("expected start:stop:step".into()));
            }
            GridSpec::Range {
                start: number(parts[0])?,
                stop: number(parts[1])?,
                step: number(parts[2])?,
            }
        } else {
            GridSpec::List(s.split(',').map(number).collect::<Result<_, _>>()?)
        };
        spec.check().map_err(fail)?;
        Ok(spec)
    }
}
