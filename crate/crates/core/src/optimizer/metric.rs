use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::problems::{ProblemDef, Vector};
use crate::theory::QuadraticGap;

/// Progress measure used for stopping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Metric {
    /// The exact suboptimality error `G`; needs both closed-form inner
    /// optimizers.
    #[serde(rename = "g")]
    Gap,
    /// The quadratic approximation `G̃` around the known saddle.
    #[serde(rename = "gtilde")]
    ApproxGap,
    /// The most recent oracle gap `F = f(x, ŷ) - f(x̂, y)`.
    #[serde(rename = "f")]
    FGap,
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Gap => "g",
            Metric::ApproxGap => "gtilde",
            Metric::FGap => "f",
        })
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "g" | "gap" => Ok(Metric::Gap),
            "gtilde" | "g_tilde" | "approx" => Ok(Metric::ApproxGap),
            "f" | "fgap" => Ok(Metric::FGap),
            other => Err(invalid("metric", format!("unknown metric `{other}` (expected g, gtilde or f)"))),
        }
    }
}

/// A metric prepared for repeated evaluation on one problem.
#[derive(Debug, Clone)]
pub(crate) enum MetricEval {
    Gap,
    ApproxGap(QuadraticGap),
    FGap,
}

impl MetricEval {
    pub(crate) fn new(problem: &ProblemDef, metric: Metric) -> Result<Self> {
        match metric {
            Metric::Gap => {
                if !problem.has_closed_form_gap() {
                    return Err(Error::MissingCapability {
                        problem: problem.name().to_string(),
                        what: "closed-form inner optimizers for the gap G",
                    });
                }
                Ok(MetricEval::Gap)
            }
            Metric::ApproxGap => Ok(MetricEval::ApproxGap(QuadraticGap::new(problem)?)),
            Metric::FGap => Ok(MetricEval::FGap),
        }
    }

    /// `None` for the F-gap before any step has produced one.
    pub(crate) fn value(&self, problem: &ProblemDef, x: &Vector, y: &Vector, last_f: Option<f64>) -> Option<f64> {
        match self {
            MetricEval::Gap => problem.gap(x, y).ok(),
            MetricEval::ApproxGap(q) => Some(q.eval(x, y)),
            MetricEval::FGap => last_f,
        }
    }
}

/// Evaluates a progress metric at `(x, y)`. `last_f` is the most recent
/// oracle gap, required for [`Metric::FGap`].
pub fn progress_metric(problem: &ProblemDef, x: &Vector, y: &Vector, metric: Metric, last_f: Option<f64>) -> Result<f64> {
    problem.check_dims(x, y)?;
    MetricEval::new(problem, metric)?
        .value(problem, x, y, last_f)
        .ok_or_else(|| Error::Degenerate("the F-gap metric needs at least one step".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{make_f1, make_f2, make_f3};
    use approx::assert_relative_eq;

    #[test]
    fn examples() {
        let p = make_f1(1, 1, 1.0).unwrap();
        let one = Vector::from_element(1, 1.0);
        assert_relative_eq!(progress_metric(&p, &one, &one, Metric::Gap, None).unwrap(), 2.0);

        for p in [make_f1(3, 3, 2.0).unwrap(), make_f2(3, 3, 10.0).unwrap(), make_f3()] {
            let (xs, ys) = p.known_saddle().unwrap();
            assert_eq!(progress_metric(&p, xs, ys, Metric::ApproxGap, None).unwrap(), 0.0);
        }

        let p = make_f2(10, 10, 10.0).unwrap();
        let mut x = Vector::zeros(10);
        x[0] = 0.1;
        let g = progress_metric(&p, &x, &Vector::zeros(10), Metric::ApproxGap, None).unwrap();
        assert_relative_eq!(g, 0.26, epsilon = 1e-12);
    }

    #[test]
    fn unavailable_metrics() {
        let p = make_f2(2, 2, 1.0).unwrap();
        let z = Vector::zeros(2);
        assert!(matches!(progress_metric(&p, &z, &z, Metric::Gap, None), Err(Error::MissingCapability { .. })));
        assert!(progress_metric(&p, &z, &z, Metric::FGap, None).is_err());
        assert_eq!(progress_metric(&p, &z, &z, Metric::FGap, Some(0.5)).unwrap(), 0.5);
        let plain = ProblemDef::new("plain", 2, 2, |x, y| x.dot(y)).unwrap();
        assert!(progress_metric(&plain, &z, &z, Metric::ApproxGap, None).is_err());
    }
}
