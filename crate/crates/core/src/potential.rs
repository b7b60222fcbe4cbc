//! Bounded real potentials on the closed disk.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// The potentials the laboratory knows how to assemble. All are real, bounded
/// and even under `θ ↦ −θ`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Potential {
    #[default]
    Zero,
    /// `V ≡ value`
    Constant { value: f64 },
    /// `V(z) = coef·|z|²`
    Quadratic { coef: f64 },
    /// `V(z) = coef·x`
    LinearX { coef: f64 },
    /// `V(z) = coef·(x² − y²)`
    Quadrupole { coef: f64 },
    /// `inside` for `|z| < radius`, `outside` otherwise. Discontinuous.
    Step { radius: f64, inside: f64, outside: f64 },
}

impl Potential {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match *self {
            Potential::Zero => 0.0,
            Potential::Constant { value } => value,
            Potential::Quadratic { coef } => coef * (x * x + y * y),
            Potential::LinearX { coef } => coef * x,
            Potential::Quadrupole { coef } => coef * (x * x - y * y),
            Potential::Step {
                radius,
                inside,
                outside,
            } => {
                if (x * x + y * y).sqrt() < radius {
                    inside
                } else {
                    outside
                }
            }
        }
    }

    pub fn eval_polar(&self, r: f64, theta: f64) -> f64 {
        self.eval(r * theta.cos(), r * theta.sin())
    }

    /// Short stable descriptor used in file headers and manifests.
    pub fn name(&self) -> String {
        match *self {
            Potential::Zero => "zero".to_string(),
            Potential::Constant { value } => format!("constant({value})"),
            Potential::Quadratic { coef } => format!("quadratic({coef})"),
            Potential::LinearX { coef } => format!("linear_x({coef})"),
            Potential::Quadrupole { coef } => format!("quadrupole({coef})"),
            Potential::Step {
                radius,
                inside,
                outside,
            } => format!("step({radius},{inside},{outside})"),
        }
    }

    pub fn is_zero(&self) -> bool {
        match *self {
            Potential::Zero => true,
            Potential::Constant { value } => value == 0.0,
            Potential::Quadratic { coef } | Potential::LinearX { coef } | Potential::Quadrupole { coef } => coef == 0.0,
            Potential::Step { inside, outside, .. } => inside == 0.0 && outside == 0.0,
        }
    }

    /// `Some(c)` when `V ≡ c`.
    pub fn constant_value(&self) -> Option<f64> {
        match *self {
            _ if self.is_zero() => Some(0.0),
            Potential::Constant { value } => Some(value),
            Potential::Step { inside, outside, .. } if inside == outside => Some(inside),
            Potential::Step { radius, inside, .. } if radius >= 1.0 => Some(inside),
            Potential::Step { radius, outside, .. } if radius <= 0.0 => Some(outside),
            _ => None,
        }
    }

    pub fn is_radial(&self) -> bool {
        !matches!(self, Potential::LinearX { coef } | Potential::Quadrupole { coef } if *coef != 0.0)
    }

    pub fn is_even_in_theta(&self) -> bool {
        true
    }

    pub fn is_continuous(&self) -> bool {
        !matches!(self, Potential::Step { inside, outside, .. } if inside != outside)
    }

    /// Radii where the potential jumps; radial quadratures split there.
    pub fn radial_breakpoints(&self) -> Vec<f64> {
        match *self {
            Potential::Step {
                radius,
                inside,
                outside,
            } if inside != outside && radius > 0.0 && radius < 1.0 => vec![radius],
            _ => Vec::new(),
        }
    }

    /// `sup |V|` over the closed disk.
    pub fn sup_abs(&self) -> f64 {
        match *self {
            Potential::Zero => 0.0,
            Potential::Constant { value } => value.abs(),
            Potential::Quadratic { coef } | Potential::LinearX { coef } | Potential::Quadrupole { coef } => coef.abs(),
            Potential::Step { inside, outside, .. } => inside.abs().max(outside.abs()),
        }
    }
}

/// Inverse of [`Potential::name`]; floats print in shortest round-trip form so
/// parsing a name is exact.
impl FromStr for Potential {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let bad = || Error::Parse(format!("unknown potential {s:?}"));
        let s = s.trim();
        if s == "zero" {
            return Ok(Potential::Zero);
        }
        let (head, rest) = s.split_once('(').ok_or_else(bad)?;
        let args: Vec<f64> = rest
            .strip_suffix(')')
            .ok_or_else(bad)?
            .split(',')
            .map(|a| a.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<_, _>>()?;
        match (head, args.as_slice()) {
            ("constant", &[value]) => Ok(Potential::Constant { value }),
            ("quadratic", &[coef]) => Ok(Potential::Quadratic { coef }),
            ("linear_x", &[coef]) => Ok(Potential::LinearX { coef }),
            ("quadrupole", &[coef]) => Ok(Potential::Quadrupole { coef }),
            ("step", &[radius, inside, outside]) => Ok(Potential::Step {
                radius,
                inside,
                outside,
            }),
            _ => Err(bad()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classification() {
        assert!(Potential::Zero.is_zero());
        assert_eq!(Potential::Constant { value: 2.0 }.constant_value(), Some(2.0));
        assert!(Potential::Quadratic { coef: 1.0 }.is_radial());
        assert!(!Potential::LinearX { coef: 1.0 }.is_radial());
        assert!(!Potential::Step { radius: 0.5, inside: 1.0, outside: 0.0 }.is_continuous());
        assert_eq!(Potential::Quadratic { coef: 1.0 }.eval(0.6, 0.8), 1.0);
    }

    #[test]
    fn names_parse_back() {
        for v in [
            Potential::Zero,
            Potential::Constant { value: 0.1 + 0.2 },
            Potential::Quadratic { coef: 1.0 },
            Potential::LinearX { coef: -3.5e-7 },
            Potential::Quadrupole { coef: 2.0 },
            Potential::Step { radius: 0.5, inside: 1.0, outside: -1.0 },
        ] {
            assert_eq!(v.name().parse::<Potential>().unwrap(), v);
        }
        assert!("cubic(1)".parse::<Potential>().is_err());
    }

    #[test]
    fn json_shape() {
        let v: Potential = serde_json::from_str(r#"{"kind":"quadratic","coef":1.0}"#).unwrap();
        assert_eq!(v, Potential::Quadratic { coef: 1.0 });
        assert_eq!(serde_json::to_string(&Potential::Zero).unwrap(), r#"{"kind":"zero"}"#);
    }
}
