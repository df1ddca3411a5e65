use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

type Fn1 = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// User-supplied one-dimensional convex function.
#[derive(Clone)]
pub struct CustomFunction {
    pub name: String,
    value: Fn1,
    derivative: Option<Fn1>,
}

impl CustomFunction {
    pub fn new(name: impl Into<String>, value: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        CustomFunction {
            name: name.into(),
            value: Arc::new(value),
            derivative: None,
        }
    }

    pub fn with_derivative(mut self, d: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.derivative = Some(Arc::new(d));
        self
    }
}

impl fmt::Debug for CustomFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomFunction")
            .field("name", &self.name)
            .field("has_derivative", &self.derivative.is_some())
            .finish()
    }
}

/// Convex scalar function used for node costs and constraint terms.
#[derive(Debug, Clone)]
pub enum ScalarFunction {
    /// `c·x`
    Linear { c: f64 },
    /// `−c·log(1 + x)` with `c ≥ 0`
    NegLog { c: f64 },
    /// `a·x + b`
    Affine { a: f64, b: f64 },
    Custom(CustomFunction),
}

/// Closed-form shape `slope·x + offset − weight·log(1 + x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Shape {
    pub slope: f64,
    pub offset: f64,
    pub log_weight: f64,
}

impl Shape {
    /// `self + s·other`
    pub fn combine(self, s: f64, other: Shape) -> Shape {
        Shape {
            slope: self.slope + s * other.slope,
            offset: self.offset + s * other.offset,
            log_weight: self.log_weight + s * other.log_weight,
        }
    }
}

impl ScalarFunction {
    pub fn linear(c: f64) -> Self {
        ScalarFunction::Linear { c }
    }

    pub fn neg_log(c: f64) -> Self {
        ScalarFunction::NegLog { c }
    }

    pub fn affine(a: f64, b: f64) -> Self {
        ScalarFunction::Affine { a, b }
    }

    pub fn zero() -> Self {
        ScalarFunction::Linear { c: 0.0 }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            ScalarFunction::Linear { c } => c * x,
            ScalarFunction::NegLog { c } => -c * x.ln_1p(),
            ScalarFunction::Affine { a, b } => a * x + b,
            ScalarFunction::Custom(cf) => (cf.value)(x),
        }
    }

    pub fn derivative(&self, x: f64) -> Option<f64> {
        match self {
            ScalarFunction::Linear { c } => Some(*c),
            ScalarFunction::NegLog { c } => Some(-c / (1.0 + x)),
            ScalarFunction::Affine { a, .. } => Some(*a),
            ScalarFunction::Custom(cf) => cf.derivative.as_ref().map(|d| d(x)),
        }
    }

    pub(crate) fn shape(&self) -> Option<Shape> {
        match *self {
            ScalarFunction::Linear { c } => Some(Shape {
                slope: c,
                offset: 0.0,
                log_weight: 0.0,
            }),
            ScalarFunction::NegLog { c } => Some(Shape {
                slope: 0.0,
                offset: 0.0,
                log_weight: c,
            }),
            ScalarFunction::Affine { a, b } => Some(Shape {
                slope: a,
                offset: b,
                log_weight: 0.0,
            }),
            ScalarFunction::Custom(_) => None,
        }
    }

    /// True when the function is monotone on any interval, so `|f|` peaks
    /// at an endpoint.
    pub fn is_monotone(&self) -> bool {
        !matches!(self, ScalarFunction::Custom(_))
    }

    pub fn is_custom(&self) -> bool {
        matches!(self, ScalarFunction::Custom(_))
    }

    pub(crate) fn validate(&self, lo: f64, hi: f64) -> Result<(), String> {
        match *self {
            ScalarFunction::Linear { c } if !c.is_finite() => Err("non-finite linear coefficient".into()),
            ScalarFunction::Affine { a, b } if !(a.is_finite() && b.is_finite()) => {
                Err("non-finite affine coefficient".into())
            }
            ScalarFunction::NegLog { c } => {
                if !(c.is_finite() && c >= 0.0) {
                    Err(format!("negLog coefficient must be finite and nonnegative, got {c}"))
                } else if lo <= -1.0 {
                    Err(format!("negLog is undefined on a box starting at {lo}"))
                } else {
                    Ok(())
                }
            }
            ScalarFunction::Custom(ref cf) => {
                for x in [lo, 0.5 * (lo + hi), hi] {
                    if !(cf.value)(x).is_finite() {
                        return Err(format!("custom function '{}' is not finite at {x}", cf.name));
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
enum FunctionRepr {
    Linear { c: f64 },
    NegLog { c: f64 },
    Affine { a: f64, b: f64 },
}

impl Serialize for ScalarFunction {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let repr = match *self {
            ScalarFunction::Linear { c } => FunctionRepr::Linear { c },
            ScalarFunction::NegLog { c } => FunctionRepr::NegLog { c },
            ScalarFunction::Affine { a, b } => FunctionRepr::Affine { a, b },
            ScalarFunction::Custom(ref cf) => {
                return Err(serde::ser::Error::custom(format!(
                    "custom function '{}' cannot be serialized",
                    cf.name
                )))
            }
        };
        repr.serialize(s)
    }
}

impl<'de> Deserialize<'de> for ScalarFunction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        Ok(match FunctionRepr::deserialize(d)? {
            FunctionRepr::Linear { c } => ScalarFunction::Linear { c },
            FunctionRepr::NegLog { c } => ScalarFunction::NegLog { c },
            FunctionRepr::Affine { a, b } => ScalarFunction::Affine { a, b },
        })
    }
}
