//! Closed-form Rademacher and adversarial-complexity bounds.
//!
//! Monte-Carlo estimates of the bounded quantities live in [`mc`].

pub mod mc;

use std::f64::consts::{E, PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::embeddings::Family;
use crate::error::{Error, Result};
use crate::qmath::{eigh, eigvalsh, psd_sqrt_eigenvalues, schatten_norm_of_eigs, CMatrix, DensityMatrix, SchattenOrder, C64};
use crate::sim::QState;
use crate::tolerances::Tolerances;

pub use mc::{mc_arc_estimate_small, mc_rc_estimate, mc_rc_exact, McEstimate};

/// Which set of excess constants to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    #[default]
    Prop1,
    Appendix,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Prop1 => "prop1",
            Variant::Appendix => "appendix",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "prop1" => Ok(Variant::Prop1),
            "appendix" => Ok(Variant::Appendix),
            _ => Err(Error::InvalidParameter(format!("unknown variant '{s}' (expected prop1 or appendix)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Theorem {
    Thm2,
    Thm3,
    Thm4,
    Thm5,
    Lemma1,
    Pac,
}

impl Theorem {
    pub fn id(self) -> &'static str {
        match self {
            Theorem::Thm2 => "thm2",
            Theorem::Thm3 => "thm3",
            Theorem::Thm4 => "thm4",
            Theorem::Thm5 => "thm5",
            Theorem::Lemma1 => "lemma1",
            Theorem::Pac => "pac",
        }
    }
}

/// Shared inputs of every bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoundConfig {
    pub r: SchattenOrder,
    pub b: f64,
    pub p: SchattenOrder,
    pub epsilon: f64,
    pub m: usize,
    pub d: usize,
    pub d_h: usize,
    pub layers: usize,
    pub num_classes: usize,
    pub gamma: f64,
    pub min_x_norm: f64,
    pub delta_conf: f64,
    pub b_loss: f64,
    pub eta: f64,
    /// δ of the covering-number evaluation.
    pub cover_delta: f64,
    pub variant: Variant,
    pub theorems: Vec<Theorem>,
    pub n_draws: usize,
}

impl Default for BoundConfig {
    fn default() -> Self {
        Self {
            r: SchattenOrder::Infinity,
            b: 1.0,
            p: SchattenOrder::Infinity,
            epsilon: 0.0,
            m: 1,
            d: 1,
            d_h: 2,
            layers: 1,
            num_classes: 2,
            gamma: 1.0,
            min_x_norm: 1.0,
            delta_conf: 0.05,
            b_loss: 1.0,
            eta: 2.5,
            cover_delta: 1.0,
            variant: Variant::Prop1,
            theorems: vec![Theorem::Thm2, Theorem::Thm3],
            n_draws: 200,
        }
    }
}

impl BoundConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
            }
        };
        pos("b", self.b)?;
        pos("gamma", self.gamma)?;
        pos("min_x_norm", self.min_x_norm)?;
        pos("b_loss", self.b_loss)?;
        pos("eta", self.eta)?;
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!("epsilon must be >= 0, got {}", self.epsilon)));
        }
        if self.m == 0 || self.d == 0 || self.d_h == 0 || self.layers == 0 {
            return Err(Error::InvalidParameter("m, d, d_h and layers must be positive".into()));
        }
        if self.num_classes < 2 {
            return Err(Error::InvalidParameter("num_classes must be at least 2".into()));
        }
        if !(self.delta_conf > 0.0 && self.delta_conf < 1.0) {
            return Err(Error::InvalidParameter(format!("delta_conf must lie in (0, 1), got {}", self.delta_conf)));
        }
        SchattenOrder::new(self.r.value())?;
        SchattenOrder::new(self.p.value())?;
        Ok(())
    }
}

/// B_β = 2^{−1/4}·√(πβ/e)
pub fn b_beta(beta: f64) -> f64 {
    2f64.powf(-0.25) * (PI * beta / E).sqrt()
}

/// A dataset of embedded states in a form suited to spectral sums.
///
/// Pure datasets are held through the square root of their Gram matrix
/// G = Ψ†Ψ: the nonzero spectrum of Σ wᵢ|ψᵢ⟩⟨ψᵢ| equals that of G^{1/2} W G^{1/2},
/// which is m×m instead of d_H×d_H.
#[derive(Debug, Clone)]
pub struct StateSet {
    dim: usize,
    repr: Repr,
}

#[derive(Debug, Clone)]
enum Repr {
    Gram(CMatrix),
    Mixed(Vec<CMatrix>),
}

impl StateSet {
    pub fn from_states(states: &[QState]) -> Result<Self> {
        let Some(first) = states.first() else {
            return Err(Error::InvalidParameter("dataset is empty".into()));
        };
        let dim = first.dim();
        if let Some(s) = states.iter().find(|s| s.dim() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, got: s.dim() });
        }
        let pure: Option<Vec<&Vec<C64>>> = states
            .iter()
            .map(|s| match s {
                QState::Pure(v) => Some(v),
                QState::Mixed(_) => None,
            })
            .collect();
        let repr = match pure {
            Some(vs) if vs.len() < dim => {
                let m = vs.len();
                let g = CMatrix::from_fn(m, |i, j| vs[i].iter().zip(vs[j]).map(|(a, b)| a.conj() * b).sum());
                let e = eigh(&g.symmetrize())?;
                let clamp = Tolerances::default().psd_clamp;
                let sq = psd_sqrt_eigenvalues(&e.values, clamp)?;
                Repr::Gram(e.map_spectrum_indexed(|k| sq[k]).into_matrix())
            }
            _ => Repr::Mixed(states.iter().map(|s| s.density_matrix()).collect()),
        };
        Ok(Self { dim, repr })
    }

    pub fn from_density(states: &[DensityMatrix]) -> Result<Self> {
        let Some(first) = states.first() else {
            return Err(Error::InvalidParameter("dataset is empty".into()));
        };
        let dim = first.dim();
        if let Some(s) = states.iter().find(|s| s.dim() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, got: s.dim() });
        }
        Ok(Self {
            dim,
            repr: Repr::Mixed(states.iter().map(|s| s.as_matrix().clone()).collect()),
        })
    }

    pub fn len(&self) -> usize {
        match &self.repr {
            Repr::Gram(r) => r.dim(),
            Repr::Mixed(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn hilbert_dim(&self) -> usize {
        self.dim
    }

    /// Spectrum of Σᵢ wᵢρᵢ (zeros from the null space may be omitted).
    pub fn weighted_sum_eigs(&self, w: &[f64]) -> Result<Vec<f64>> {
        assert_eq!(w.len(), self.len());
        match &self.repr {
            Repr::Gram(r) => {
                let m = r.dim();
                let rw = CMatrix::from_fn(m, |i, j| r[(i, j)] * w[j]);
                eigvalsh(&rw.matmul(r).symmetrize())
            }
            Repr::Mixed(v) => {
                let mut acc = CMatrix::zeros(self.dim);
                for (rho, &wi) in v.iter().zip(w) {
                    for (a, b) in acc.data_mut().iter_mut().zip(rho.data()) {
                        *a += b * wi;
                    }
                }
                eigvalsh(&acc.symmetrize())
            }
        }
    }

    /// Spectrum of S₂ = Σᵢ ρᵢ².
    pub fn second_moment_eigs(&self) -> Result<Vec<f64>> {
        match &self.repr {
            Repr::Gram(_) => self.weighted_sum_eigs(&vec![1.0; self.len()]),
            Repr::Mixed(v) => {
                let mut acc = CMatrix::zeros(self.dim);
                for rho in v {
                    let sq = rho.matmul(rho);
                    for (a, b) in acc.data_mut().iter_mut().zip(sq.data()) {
                        *a += b;
                    }
                }
                eigvalsh(&acc.symmetrize())
            }
        }
    }

    /// Smallest eigenvalue of each state (0 for pure states when d_H ≥ 2).
    pub fn min_eigenvalues(&self) -> Result<Vec<f64>> {
        match &self.repr {
            Repr::Gram(r) => Ok(vec![if self.dim >= 2 { 0.0 } else { 1.0 }; r.dim()]),
            Repr::Mixed(v) => v.iter().map(|m| Ok(eigvalsh(&m.symmetrize())?[0])).collect(),
        }
    }

    pub(crate) fn matrices(&self) -> Option<&[CMatrix]> {
        match &self.repr {
            Repr::Mixed(v) => Some(v),
            Repr::Gram(_) => None,
        }
    }
}

/// RC bound for the Schatten-r observable ball of radius b.
pub fn rc_bound_thm2(states: &StateSet, r: SchattenOrder, b: f64) -> Result<f64> {
    let m = states.len() as f64;
    let eigs = states.second_moment_eigs()?;
    let clamp = Tolerances::default().psd_clamp;
    match r {
        SchattenOrder::Finite(x) if x == 1.0 => {
            let top = eigs.iter().fold(0.0f64, |a, v| a.max(*v));
            Ok(b / m * (2.0 * (states.hilbert_dim() as f64).ln() * top).sqrt())
        }
        SchattenOrder::Finite(x) if x < 2.0 => Err(Error::UnsupportedOrder(format!(
            "r = {x}: the RC bound covers r = 1 and r >= 2 only"
        ))),
        SchattenOrder::Finite(x) => {
            let beta = x / (x - 1.0);
            let sq = psd_sqrt_eigenvalues(&eigs, clamp)?;
            Ok(b / m * b_beta(beta) * schatten_norm_of_eigs(&sq, SchattenOrder::Finite(beta)))
        }
        SchattenOrder::Infinity => {
            let sq = psd_sqrt_eigenvalues(&eigs, clamp)?;
            Ok(b / m * sq.iter().sum::<f64>())
        }
    }
}

/// Excess constant for classical ℓ_p attacks on a classical embedding family.
pub fn excess_classical(variant: Variant, family: Family, d: usize, layers: usize, p: SchattenOrder, epsilon: f64, min_x_norm: f64) -> Result<f64> {
    if family == Family::Amplitude && !(min_x_norm > 0.0) {
        return Err(Error::InvalidParameter(format!("min_x_norm must be positive, got {min_x_norm}")));
    }
    if epsilon == 0.0 {
        return Ok(0.0);
    }
    let df = d as f64;
    let ip = p.reciprocal();
    let l = layers as f64;
    let angle_scale = df.powf(-df * ip);
    let dense_scale = df.powf(-df / 4.0).max(df.powf(-df * ip / 2.0));
    let value = match (variant, family) {
        (Variant::Prop1, Family::Amplitude) => {
            let pref = 2f64.powi(1 + d.next_power_of_two().trailing_zeros() as i32);
            pref * (epsilon * 1f64.max(df.powf(0.5 - ip)) / min_x_norm).min(1.0)
        }
        (Variant::Appendix, Family::Amplitude) => 2.0 * (epsilon * df.max(df.powf(1.5 - ip)) / min_x_norm).min(df),
        (Variant::Prop1, Family::Angle | Family::LlayerAngle) => 2.0 * l * (2.0 * epsilon).powf(df) * angle_scale,
        (Variant::Appendix, Family::Angle | Family::LlayerAngle) => 2.0 * l * epsilon.powf(df) * angle_scale,
        (Variant::Prop1, Family::Dense | Family::LlayerDense) => 2.0 * l * (2.0 * SQRT_2 * epsilon).powf(df / 2.0) * dense_scale,
        (Variant::Appendix, Family::Dense | Family::LlayerDense) => 2.0 * l * (SQRT_2 * epsilon).powf(df / 2.0) * dense_scale,
    };
    Ok(value)
}

/// Excess constant for Schatten-p quantum attacks: ε·max{d_H, d_H^{2−1/r−1/p}}.
pub fn excess_quantum(epsilon: f64, d_h: usize, r: SchattenOrder, p: SchattenOrder) -> f64 {
    let dh = d_h as f64;
    epsilon * dh.max(dh.powf(2.0 - r.reciprocal() - p.reciprocal()))
}

/// Error function by the rational approximation with |error| ≤ 1.5e−7.
pub fn erf(x: f64) -> f64 {
    const P: f64 = 0.3275911;
    const A: [f64; 5] = [0.254829592, -0.284496736, 1.421413741, -1.453152027, 1.061405429];
    let s = x.signum();
    let x = x.abs();
    let t = 1.0 / (1.0 + P * x);
    let poly = t * (A[0] + t * (A[1] + t * (A[2] + t * (A[3] + t * A[4]))));
    s * (1.0 - poly * (-x * x).exp())
}

/// Entropy-integral constant J(r).
pub fn j_of_r(r: SchattenOrder) -> f64 {
    let c = 2f64.powf(r.reciprocal());
    let u = (6.0 * c).ln().sqrt();
    36.0 * c * ((1.0 / c) / 6.0 * u + PI.sqrt() / 2.0 * (1.0 - erf(u)))
}

/// rc + b·S·J(r)/√m
pub fn arc_bound_thm3(rc: f64, b: f64, excess: f64, r: SchattenOrder, m: usize) -> f64 {
    rc + b * excess * j_of_r(r) / (m as f64).sqrt()
}

/// Indices of states whose smallest eigenvalue is below ε.
pub fn assumption_violations(states: &StateSet, epsilon: f64) -> Result<Vec<usize>> {
    Ok(states
        .min_eigenvalues()?
        .iter()
        .enumerate()
        .filter(|&(_, &l)| l < epsilon - 1e-12)
        .map(|(i, _)| i)
        .collect())
}

/// (reference RC bound, rc + b·ε·max{1, d_H^{1−1/p−1/r}}/√m) under the
/// minimum-eigenvalue assumption.
pub fn noisy_bounds_thm4(states: &StateSet, r: SchattenOrder, p: SchattenOrder, b: f64, epsilon: f64) -> Result<(f64, f64)> {
    let bad = assumption_violations(states, epsilon)?;
    if !bad.is_empty() {
        return Err(Error::AssumptionViolation { indices: bad });
    }
    let rc = rc_bound_thm2(states, r, b)?;
    Ok((rc, rc + noisy_excess(states.hilbert_dim(), r, p, b, epsilon, states.len())))
}

/// b·ε·max{1, d_H^{1−1/p−1/r}}/√m
pub fn noisy_excess(d_h: usize, r: SchattenOrder, p: SchattenOrder, b: f64, epsilon: f64, m: usize) -> f64 {
    let f = 1f64.max((d_h as f64).powf(1.0 - p.reciprocal() - r.reciprocal()));
    b * epsilon * f / (m as f64).sqrt()
}

/// Natural log of the covering-number bound d_H²·ln(3·2^{1/r}·b/δ).
pub fn covering_number_lemma1(r: SchattenOrder, b: f64, delta: f64, d_h: usize) -> Result<f64> {
    let top = 2f64.powf(r.reciprocal()) * b;
    if !(delta > 0.0 && delta <= top * (1.0 + 1e-15)) {
        return Err(Error::InvalidParameter(format!("delta = {delta} outside (0, {top}]")));
    }
    Ok((d_h * d_h) as f64 * (3.0 * top / delta).ln())
}

/// (2K/γ)·rc + K·b·S·2J(r)/(γ√m)
pub fn multiclass_bound_thm5(rc: f64, k: usize, gamma: f64, b: f64, excess: f64, r: SchattenOrder, m: usize) -> Result<f64> {
    if k < 2 || !(gamma > 0.0) {
        return Err(Error::InvalidParameter(format!("need K >= 2 and gamma > 0, got K = {k}, gamma = {gamma}")));
    }
    let kf = k as f64;
    Ok(2.0 * kf / gamma * rc + kf * b * excess * 2.0 * j_of_r(r) / (gamma * (m as f64).sqrt()))
}

/// 3B·√(ln(2/δ)/(2m))
pub fn pac_slack(b_loss: f64, delta: f64, m: usize) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!("delta_conf must lie in (0, 1), got {delta}")));
    }
    Ok(3.0 * b_loss * ((2.0 / delta).ln() / (2.0 * m as f64)).sqrt())
}

/// empirical + 2η·complexity + 3B·√(ln(2/δ)/(2m))
pub fn pac_assemble_thm1(empirical_risk: f64, complexity: f64, cfg: &BoundConfig) -> Result<f64> {
    Ok(empirical_risk + 2.0 * cfg.eta * complexity + pac_slack(cfg.b_loss, cfg.delta_conf, cfg.m)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub rc_bound: f64,
    pub excess_scaled: f64,
    pub arc_bound: f64,
    pub pac_slack: f64,
    pub assembled_generalization_bound: f64,
    pub provenance: Vec<(String, String)>,
}

/// Excess constant matching the attack space of `cfg`.
pub fn excess_for(cfg: &BoundConfig, family: Option<Family>, quantum: bool) -> Result<f64> {
    if quantum {
        return Ok(excess_quantum(cfg.epsilon, cfg.d_h, cfg.r, cfg.p));
    }
    let family = family.ok_or_else(|| Error::InvalidParameter("a classical excess needs an embedding family".into()))?;
    excess_classical(cfg.variant, family, cfg.d, cfg.layers, cfg.p, cfg.epsilon, cfg.min_x_norm)
}

/// RC, ARC and PAC assembly for one dataset.
pub fn bound_report(states: &StateSet, cfg: &BoundConfig, excess: f64, empirical_risk: f64) -> Result<BoundReport> {
    let rc = rc_bound_thm2(states, cfg.r, cfg.b)?;
    let arc = arc_bound_thm3(rc, cfg.b, excess, cfg.r, states.len());
    let slack = pac_slack(cfg.b_loss, cfg.delta_conf, states.len())?;
    let assembled = empirical_risk + 2.0 * cfg.eta * arc + slack;
    Ok(BoundReport {
        rc_bound: rc,
        excess_scaled: excess,
        arc_bound: arc,
        pac_slack: slack,
        assembled_generalization_bound: assembled,
        provenance: vec![
            ("thm2".into(), rc_formula(cfg.r).into()),
            ("thm3".into(), "rc + b*S*J(r)/sqrt(m)".into()),
            ("thm1".into(), "emp + 2*eta*arc + 3*B*sqrt(ln(2/delta)/(2m))".into()),
        ],
    })
}

pub fn rc_formula(r: SchattenOrder) -> &'static str {
    match r {
        SchattenOrder::Infinity => "(b/m)*||sqrt(S2)||_1",
        SchattenOrder::Finite(x) if x == 1.0 => "(b/m)*sqrt(2 ln(d_H) ||S2||_inf)",
        SchattenOrder::Finite(_) => "(b/m)*B_{r/(r-1)}*||sqrt(S2)||_{r/(r-1)}",
    }
}

/// Pure state with the given real amplitudes.
pub fn pure(v: &[f64]) -> QState {
    QState::Pure(v.iter().map(|&x| C64::new(x, 0.0)).collect())
}
