use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transport::Point2;

const DENOISE_ATTRACTOR: f64 = 1.2;
const EMERGE_OFFSET: f64 = 0.15;

/// Energy functionals on diagram measures, evaluated as empirical means
/// over the diagram points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum EnergyFunctional {
    Zero,
    /// `1/2 E[min(x^2 + (y - 1.2)^2, (x - y)^2 / 2)]`: points close to the
    /// diagonal are pulled onto it, the others towards `(0, 1.2)`.
    DenoiseCircle,
    /// `1/4 E[(y - x - 0.15)^2 + x^2]`.
    EmergeCircle,
    /// `1/2 E[(p - c)^T A (p - c)]`.
    Quadratic { a: [[f64; 2]; 2], c: Point2 },
}

impl EnergyFunctional {
    /// Looks up a parameter-free functional by name.
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "zero" => Ok(Self::Zero),
            "denoise_circle" | "denoise-circle" => Ok(Self::DenoiseCircle),
            "emerge_circle" | "emerge-circle" => Ok(Self::EmergeCircle),
            other => Err(Error::Config(format!("unknown energy functional {other:?}"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Zero => "zero",
            Self::DenoiseCircle => "denoise_circle",
            Self::EmergeCircle => "emerge_circle",
            Self::Quadratic { .. } => "quadratic",
        }
    }

    /// Value and gradient of the single-point integrand.
    fn pointwise(&self, p: Point2) -> (f64, Point2) {
        let [x, y] = p;
        match self {
            Self::Zero => (0.0, [0.0, 0.0]),
            Self::DenoiseCircle => {
                let far = x * x + (y - DENOISE_ATTRACTOR).powi(2);
                let near = 0.5 * (x - y).powi(2);
                if near <= far {
                    (0.5 * near, [0.5 * (x - y), 0.5 * (y - x)])
                } else {
                    (0.5 * far, [x, y - DENOISE_ATTRACTOR])
                }
            }
            Self::EmergeCircle => {
                let gap = y - x - EMERGE_OFFSET;
                (0.25 * (gap * gap + x * x), [0.5 * (x - gap), 0.5 * gap])
            }
            Self::Quadratic { a, c } => {
                let d = [x - c[0], y - c[1]];
                let ad = [a[0][0] * d[0] + a[0][1] * d[1], a[1][0] * d[0] + a[1][1] * d[1]];
                let atd = [a[0][0] * d[0] + a[1][0] * d[1], a[0][1] * d[0] + a[1][1] * d[1]];
                (0.5 * (d[0] * ad[0] + d[1] * ad[1]), [0.5 * (ad[0] + atd[0]), 0.5 * (ad[1] + atd[1])])
            }
        }
    }
}

/// Empirical mean of the functional over `points` and its gradient with
/// respect to each point (which carries the `1/n` weight).
pub fn eval_energy(functional: &EnergyFunctional, points: &[Point2]) -> (f64, Vec<Point2>) {
    if points.is_empty() {
        return (0.0, Vec::new());
    }
    let w = 1.0 / points.len() as f64;
    let mut value = 0.0;
    let grad = points
        .iter()
        .map(|&p| {
            let (v, g) = functional.pointwise(p);
            value += v;
            [w * g[0], w * g[1]]
        })
        .collect();
    (w * value, grad)
}
