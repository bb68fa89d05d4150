use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{eigh, eigvalsh, HermitianMatrix};
use crate::error::{Error, Result};
use crate::tolerances::Tolerances;

/// Schatten / ℓ_p order: a finite real r ≥ 1 or ∞.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SchattenOrder {
    Finite(f64),
    Infinity,
}

impl SchattenOrder {
    pub const ONE: SchattenOrder = SchattenOrder::Finite(1.0);
    pub const TWO: SchattenOrder = SchattenOrder::Finite(2.0);

    pub fn new(r: f64) -> Result<Self> {
        if r.is_nan() || r < 1.0 {
            return Err(Error::InvalidOrder(r));
        }
        if r.is_infinite() {
            Ok(SchattenOrder::Infinity)
        } else {
            Ok(SchattenOrder::Finite(r))
        }
    }

    /// 1/r with 1/∞ = 0.
    pub fn reciprocal(self) -> f64 {
        match self {
            SchattenOrder::Finite(r) => 1.0 / r,
            SchattenOrder::Infinity => 0.0,
        }
    }

    pub fn value(self) -> f64 {
        match self {
            SchattenOrder::Finite(r) => r,
            SchattenOrder::Infinity => f64::INFINITY,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, SchattenOrder::Infinity)
    }

    pub fn dual(self) -> SchattenOrder {
        dual_order(self)
    }

    fn check(self) -> Result<()> {
        match self {
            SchattenOrder::Finite(r) if r.is_nan() || r < 1.0 => Err(Error::InvalidOrder(r)),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for SchattenOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SchattenOrder::Finite(r) => write!(f, "{r}"),
            SchattenOrder::Infinity => write!(f, "inf"),
        }
    }
}

impl FromStr for SchattenOrder {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "∞" => Ok(SchattenOrder::Infinity),
            other => {
                let r: f64 = other
                    .parse()
                    .map_err(|_| Error::InvalidParameter(format!("cannot parse order '{s}'")))?;
                SchattenOrder::new(r)
            }
        }
    }
}

impl Serialize for SchattenOrder {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            SchattenOrder::Finite(r) => s.serialize_f64(*r),
            SchattenOrder::Infinity => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for SchattenOrder {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        let parsed = match Raw::deserialize(d)? {
            Raw::Num(r) => SchattenOrder::new(r),
            Raw::Text(t) => t.parse(),
        };
        parsed.map_err(serde::de::Error::custom)
    }
}

/// Hölder conjugate r/(r−1), with 1 ↔ ∞.
pub fn dual_order(r: SchattenOrder) -> SchattenOrder {
    match r {
        SchattenOrder::Infinity => SchattenOrder::Finite(1.0),
        SchattenOrder::Finite(x) if x == 1.0 => SchattenOrder::Infinity,
        SchattenOrder::Finite(x) => SchattenOrder::Finite(x / (x - 1.0)),
    }
}

/// Schatten norm from a spectrum (eigenvalues or singular values).
pub fn schatten_norm_of_eigs(eigs: &[f64], r: SchattenOrder) -> f64 {
    let max = eigs.iter().fold(0.0f64, |m, l| m.max(l.abs()));
    match r {
        SchattenOrder::Infinity => max,
        _ if max == 0.0 => 0.0,
        SchattenOrder::Finite(x) if x == 1.0 => eigs.iter().map(|l| l.abs()).sum(),
        SchattenOrder::Finite(x) => {
            // scale by the max to keep |λ|^r in range
            let s: f64 = eigs.iter().map(|l| (l.abs() / max).powf(x)).sum();
            max * s.powf(1.0 / x)
        }
    }
}

pub fn schatten_norm(m: &HermitianMatrix, r: SchattenOrder) -> Result<f64> {
    r.check()?;
    Ok(schatten_norm_of_eigs(&eigvalsh(m)?, r))
}

/// √λ for the spectrum of a PSD matrix; eigenvalues in (−clamp, 0) are
/// treated as rounding noise and mapped to 0.
pub fn psd_sqrt_eigenvalues(eigs: &[f64], clamp: f64) -> Result<Vec<f64>> {
    eigs.iter()
        .map(|&l| {
            if l < -clamp {
                Err(Error::PsdViolation { magnitude: -l })
            } else {
                Ok(l.max(0.0).sqrt())
            }
        })
        .collect()
}

/// Observable A with ‖A‖_r = b that attains Hölder equality
/// Tr(A·M) = b·‖M‖_{r/(r−1)}.
pub fn holder_extremizer(m: &HermitianMatrix, r: SchattenOrder, b: f64) -> Result<HermitianMatrix> {
    r.check()?;
    if !(b > 0.0) {
        return Err(Error::InvalidParameter(format!("norm budget b = {b} must be positive")));
    }
    let fro = m.frobenius_norm();
    if fro < Tolerances::default().zero_norm {
        return Err(Error::ZeroMatrix(fro));
    }
    let e = eigh(m)?;
    let lam = &e.values;
    let weights: Vec<f64> = match r {
        SchattenOrder::Infinity => lam.iter().map(|&l| b * sign(l)).collect(),
        SchattenOrder::Finite(x) if x == 1.0 => {
            let top = lam.iter().fold(0.0f64, |a, l| a.max(l.abs()));
            let tie = 1e-12 * top;
            let count = lam.iter().filter(|l| l.abs() >= top - tie).count() as f64;
            lam.iter()
                .map(|&l| if l.abs() >= top - tie { b * sign(l) / count } else { 0.0 })
                .collect()
        }
        SchattenOrder::Finite(x) => {
            let raw: Vec<f64> = lam.iter().map(|&l| sign(l) * l.abs().powf(1.0 / (x - 1.0))).collect();
            let norm = schatten_norm_of_eigs(&raw, r);
            raw.iter().map(|w| b * w / norm).collect()
        }
    };
    Ok(e.map_spectrum_indexed(|k| weights[k]))
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}
