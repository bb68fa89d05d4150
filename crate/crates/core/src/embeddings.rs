//! Quantum feature maps x ↦ ρ(x) and the global depolarizing channel.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qmath::{trace_product, CMatrix, DensityMatrix, HermitianMatrix, C64, ONE, ZERO};
use crate::random::{random_unitary, rng};
use crate::sim::{matmul2, ry, rz, Gate, QState};
use crate::tolerances::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    #[serde(alias = "Amplitude")]
    Amplitude,
    #[serde(alias = "Angle")]
    Angle,
    #[serde(alias = "Dense")]
    Dense,
    #[serde(alias = "LLayerAngle", alias = "l_layer_angle")]
    LlayerAngle,
    #[serde(alias = "LLayerDense", alias = "l_layer_dense")]
    LlayerDense,
}

impl Family {
    pub fn is_rotation(self) -> bool {
        self != Family::Amplitude
    }

    pub fn is_dense(self) -> bool {
        matches!(self, Family::Dense | Family::LlayerDense)
    }

    pub fn is_layered(self) -> bool {
        matches!(self, Family::LlayerAngle | Family::LlayerDense)
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Amplitude => "amplitude",
            Family::Angle => "angle",
            Family::Dense => "dense",
            Family::LlayerAngle => "llayer_angle",
            Family::LlayerDense => "llayer_dense",
        }
    }
}

impl std::str::FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| Error::InvalidParameter(format!("unknown embedding family '{s}'")))
    }
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingSpec {
    pub family: Family,
    pub input_dim: usize,
    #[serde(default = "one")]
    pub layers: usize,
    #[serde(default)]
    pub fixed_unitary_seed: u64,
    #[serde(default)]
    pub depolarize_lambda: f64,
}

impl EmbeddingSpec {
    pub fn new(family: Family, input_dim: usize) -> Self {
        Self {
            family,
            input_dim,
            layers: 1,
            fixed_unitary_seed: 0,
            depolarize_lambda: 0.0,
        }
    }

    pub fn with_layers(mut self, layers: usize, seed: u64) -> Self {
        self.layers = layers;
        self.fixed_unitary_seed = seed;
        self
    }

    pub fn with_depolarizing(mut self, lambda: f64) -> Self {
        self.depolarize_lambda = lambda;
        self
    }

    /// Input length after padding (odd d gains one zero for dense families).
    pub fn padded_dim(&self) -> usize {
        if self.family.is_dense() && self.input_dim % 2 == 1 {
            self.input_dim + 1
        } else {
            self.input_dim
        }
    }

    pub fn n_qubits(&self) -> usize {
        match self.family {
            Family::Amplitude => self.input_dim.next_power_of_two().trailing_zeros() as usize,
            Family::Angle | Family::LlayerAngle => self.input_dim,
            Family::Dense | Family::LlayerDense => self.padded_dim() / 2,
        }
    }

    pub fn hilbert_dim(&self) -> usize {
        1 << self.n_qubits()
    }

    /// Number of times each feature is uploaded.
    pub fn effective_layers(&self) -> usize {
        if self.family.is_layered() {
            self.layers
        } else {
            1
        }
    }

    pub fn validate(&self, tol: &Tolerances) -> Result<()> {
        if self.input_dim == 0 {
            return Err(Error::InvalidParameter("input_dim must be positive".into()));
        }
        if self.layers == 0 {
            return Err(Error::InvalidParameter("layers must be positive".into()));
        }
        if !self.family.is_layered() && self.layers != 1 {
            return Err(Error::InvalidParameter(format!(
                "family {} takes layers = 1, got {}",
                self.family.name(),
                self.layers
            )));
        }
        let n = self.n_qubits();
        if n > tol.qubit_cap {
            return Err(Error::DimensionCap {
                dim: 1usize.checked_shl(n as u32).unwrap_or(usize::MAX),
                cap: 1 << tol.qubit_cap,
            });
        }
        let lam = self.depolarize_lambda;
        if !lam.is_finite() || lam < 0.0 || lam * self.hilbert_dim() as f64 > 1.0 + 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "depolarize_lambda {lam} outside [0, 1/{}]",
                self.hilbert_dim()
            )));
        }
        Ok(())
    }
}

/// Shift of one upload of one feature, used by the input parameter-shift rule.
#[derive(Debug, Clone, Copy)]
pub struct InputShift {
    pub feature: usize,
    pub layer: usize,
    pub delta: f64,
}

/// A validated spec together with its fixed inter-layer unitaries.
#[derive(Debug, Clone)]
pub struct Embedding {
    spec: EmbeddingSpec,
    fixed: Vec<CMatrix>,
    tol: Tolerances,
}

impl Embedding {
    pub fn new(spec: EmbeddingSpec) -> Result<Self> {
        Self::with_tolerances(spec, Tolerances::default())
    }

    pub fn with_tolerances(spec: EmbeddingSpec, tol: Tolerances) -> Result<Self> {
        spec.validate(&tol)?;
        let fixed = if spec.family.is_layered() && spec.layers >= 2 {
            fixed_unitaries(spec.fixed_unitary_seed, spec.hilbert_dim(), spec.layers)
        } else {
            Vec::new()
        };
        Ok(Self { spec, fixed, tol })
    }

    pub fn spec(&self) -> &EmbeddingSpec {
        &self.spec
    }

    pub fn hilbert_dim(&self) -> usize {
        self.spec.hilbert_dim()
    }

    pub fn n_qubits(&self) -> usize {
        self.spec.n_qubits()
    }

    pub fn fixed_unitaries(&self) -> &[CMatrix] {
        &self.fixed
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.spec.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.spec.input_dim,
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("feature vector has a non-finite entry".into()));
        }
        Ok(())
    }

    /// Embedded state; pure unless depolarization is configured.
    pub fn state(&self, x: &[f64]) -> Result<QState> {
        self.state_shifted(x, None)
    }

    pub fn state_shifted(&self, x: &[f64], shift: Option<InputShift>) -> Result<QState> {
        self.check_input(x)?;
        let psi = match self.spec.family {
            Family::Amplitude => {
                debug_assert!(shift.is_none(), "amplitude embedding has no rotation angles");
                amplitude_vector(x, self.tol.zero_norm)?
            }
            _ => self.rotation_vector(x, shift),
        };
        let lam = self.spec.depolarize_lambda;
        if lam == 0.0 {
            return Ok(QState::Pure(psi));
        }
        Ok(QState::Mixed(depolarize_matrix(&CMatrix::outer(&psi), lam)))
    }

    /// ρ(x). Valid by construction, so the eigen-check is skipped.
    pub fn embed(&self, x: &[f64]) -> Result<DensityMatrix> {
        Ok(self.state(x)?.into_density_unchecked())
    }

    fn rotation_vector(&self, x: &[f64], shift: Option<InputShift>) -> Vec<C64> {
        let n = self.n_qubits();
        let mut state = QState::zero(n);
        let mut xs = x.to_vec();
        xs.resize(self.spec.padded_dim(), 0.0);
        for layer in 0..self.spec.effective_layers() {
            let mut xl = xs.clone();
            if let Some(s) = shift.filter(|s| s.layer == layer) {
                xl[s.feature] += s.delta;
            }
            for (q, g) in rotation_gates(self.spec.family, &xl).iter().enumerate() {
                state.apply(q, g);
            }
            if let Some(v) = self.fixed.get(layer) {
                state.apply_unitary(v);
            }
        }
        match state {
            QState::Pure(v) => v,
            QState::Mixed(_) => unreachable!("started from a pure state"),
        }
    }
}

/// Per-qubit data-upload gates: e^{−i x σ_Y} for angle, e^{−i x₂ σ_Z}e^{−i x₁ σ_Y} for dense.
fn rotation_gates(family: Family, x: &[f64]) -> Vec<Gate> {
    if family.is_dense() {
        x.chunks(2).map(|p| matmul2(&rz(2.0 * p[1]), &ry(2.0 * p[0]))).collect()
    } else {
        x.iter().map(|&v| ry(2.0 * v)).collect()
    }
}

/// Seeded unitaries V^(1..L) drawn in order from one stream.
pub fn fixed_unitaries(seed: u64, dim: usize, layers: usize) -> Vec<CMatrix> {
    let mut r = rng(seed);
    (0..layers).map(|_| random_unitary(&mut r, dim)).collect()
}

fn amplitude_vector(x: &[f64], zero_norm: f64) -> Result<Vec<C64>> {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm <= zero_norm.max(1e-12) {
        return Err(Error::ZeroVector);
    }
    let mut psi: Vec<C64> = x.iter().map(|&v| C64::new(v / norm, 0.0)).collect();
    psi.resize(x.len().next_power_of_two(), ZERO);
    Ok(psi)
}

pub fn amplitude_embed(x: &[f64]) -> Result<DensityMatrix> {
    Embedding::new(EmbeddingSpec::new(Family::Amplitude, x.len()))?.embed(x)
}

pub fn angle_embed(x: &[f64]) -> Result<DensityMatrix> {
    Embedding::new(EmbeddingSpec::new(Family::Angle, x.len()))?.embed(x)
}

pub fn dense_embed(x: &[f64]) -> Result<DensityMatrix> {
    Embedding::new(EmbeddingSpec::new(Family::Dense, x.len()))?.embed(x)
}

pub fn llayer_embed(x: &[f64], spec: &EmbeddingSpec) -> Result<DensityMatrix> {
    if !spec.family.is_layered() {
        return Err(Error::InvalidParameter(format!(
            "llayer_embed needs a layered family, got {}",
            spec.family.name()
        )));
    }
    Embedding::new(spec.clone())?.embed(x)
}

fn depolarize_matrix(rho: &CMatrix, lambda: f64) -> CMatrix {
    let d = rho.dim();
    let mut out = rho.scale(1.0 - lambda * d as f64);
    for i in 0..d {
        out[(i, i)] += lambda;
    }
    out
}

/// ρ' = (1 − λ·d_H)ρ + λI.
pub fn depolarize(rho: &DensityMatrix, lambda: f64) -> Result<DensityMatrix> {
    let d = rho.dim() as f64;
    if !lambda.is_finite() || lambda < 0.0 || lambda * d > 1.0 + 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "lambda_min {lambda} outside [0, 1/{d}]"
        )));
    }
    let m = depolarize_matrix(rho.as_matrix(), lambda);
    Ok(DensityMatrix::from_hermitian_unchecked(m.symmetrize()))
}

fn purity_defect(rho: &CMatrix) -> f64 {
    (1.0 - trace_product(rho, rho).re).abs()
}

/// ‖ρ − ρ'‖₁ = 2√(1 − |⟨ψ|ψ'⟩|²) for pure inputs.
pub fn pure_trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    let tol = Tolerances::default().purity;
    for m in [a, b] {
        let defect = purity_defect(m.as_matrix());
        if defect > tol {
            return Err(Error::NotPure(defect));
        }
    }
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    let overlap = trace_product(a.as_matrix(), b.as_matrix()).re.clamp(0.0, 1.0);
    Ok(2.0 * (1.0 - overlap).sqrt())
}

/// Same distance from state vectors.
pub fn pure_trace_distance_vec(a: &[C64], b: &[C64]) -> f64 {
    let ov: C64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
    2.0 * (1.0 - ov.norm_sqr().clamp(0.0, 1.0)).sqrt()
}

/// Computational basis vector |k⟩.
pub fn basis_state(dim: usize, k: usize) -> Vec<C64> {
    let mut v = vec![ZERO; dim];
    v[k] = ONE;
    v
}

/// αa + (1 − α)b.
pub fn mix(a: &DensityMatrix, b: &DensityMatrix, alpha: f64) -> DensityMatrix {
    let h: HermitianMatrix = a.as_hermitian().scale(alpha).add(&b.as_hermitian().scale(1.0 - alpha));
    DensityMatrix::from_hermitian_unchecked(h)
}
