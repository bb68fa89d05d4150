//! Variational quantum classifier built from strongly entangling layers.
//!
//! The circuit U_θ acts after the embedding and the score is
//! f(x) = Tr(M U_θ ρ(x) U_θ†) = Tr(A ρ(x)) with A = U_θ† M U_θ.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, TAU};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::embeddings::{Embedding, EmbeddingSpec, InputShift};
use crate::error::{Error, Result};
use crate::qmath::{CMatrix, DensityMatrix, HermitianMatrix, C64, ONE, ZERO};
use crate::sim::{rot, z_diagonal, QState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measurement {
    /// Σ_q Z_q
    #[serde(alias = "ZAll", alias = "zall")]
    ZAll,
    /// Z on qubit 0
    #[serde(alias = "ZFirst", alias = "zfirst")]
    ZFirst,
}

/// Angles of shape (layers, n_qubits, 3), stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitParams {
    pub layers: usize,
    pub n_qubits: usize,
    pub angles: Vec<f64>,
}

impl CircuitParams {
    pub fn zeros(layers: usize, n_qubits: usize) -> Self {
        Self {
            layers,
            n_qubits,
            angles: vec![0.0; layers * n_qubits * 3],
        }
    }

    /// I.i.d. uniform angles in [0, 2π).
    pub fn random<R: Rng + ?Sized>(layers: usize, n_qubits: usize, rng: &mut R) -> Self {
        let angles = (0..layers * n_qubits * 3).map(|_| rng.random::<f64>() * TAU).collect();
        Self {
            layers,
            n_qubits,
            angles,
        }
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    pub fn index(&self, layer: usize, qubit: usize, k: usize) -> usize {
        (layer * self.n_qubits + qubit) * 3 + k
    }

    fn validate(&self) -> Result<()> {
        if self.angles.len() != self.layers * self.n_qubits * 3 {
            return Err(Error::DimensionMismatch {
                expected: self.layers * self.n_qubits * 3,
                got: self.angles.len(),
            });
        }
        if self.angles.iter().any(|a| !a.is_finite()) {
            return Err(Error::NonFinite("circuit angles"));
        }
        Ok(())
    }
}

/// Applies the strongly entangling circuit; `shift` offsets one angle.
pub fn apply_circuit(params: &CircuitParams, state: &mut QState, shift: Option<(usize, f64)>) {
    let n = params.n_qubits;
    let a = &params.angles;
    for l in 0..params.layers {
        for q in 0..n {
            let base = params.index(l, q, 0);
            let mut t = [a[base], a[base + 1], a[base + 2]];
            if let Some((idx, delta)) = shift {
                if (base..base + 3).contains(&idx) {
                    t[idx - base] += delta;
                }
            }
            state.apply(q, &rot(t[0], t[1], t[2]));
        }
        entangle(state, n);
    }
}

fn entangle(state: &mut QState, n: usize) {
    if n >= 2 {
        for i in 0..n {
            state.apply_cnot(i, (i + 1) % n);
        }
    }
}

/// Full unitary of the circuit, column by column.
pub fn circuit_unitary(params: &CircuitParams) -> CMatrix {
    let dim = 1 << params.n_qubits;
    let mut u = CMatrix::zeros(dim);
    for j in 0..dim {
        let mut v = vec![ZERO; dim];
        v[j] = ONE;
        let mut st = QState::Pure(v);
        apply_circuit(params, &mut st, None);
        let QState::Pure(col) = st else { unreachable!() };
        for (i, z) in col.into_iter().enumerate() {
            u[(i, j)] = z;
        }
    }
    u
}

/// φ(t) = 1/(1 + e^{αt}), evaluated without overflow.
pub fn sigmoid_loss(alpha: f64, t: f64) -> f64 {
    let z = alpha * t;
    if z >= 0.0 {
        let e = (-z).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + z.exp())
    }
}

/// dφ/dt = −α·φ·(1 − φ)
pub fn sigmoid_loss_derivative(alpha: f64, t: f64) -> f64 {
    let s = sigmoid_loss(alpha, t);
    -alpha * s * (1.0 - s)
}

/// Ramp φ_γ: 1 below 0, linear on (0, γ), 0 above γ.
pub fn ramp_loss(gamma: f64, t: f64) -> f64 {
    if t <= 0.0 {
        1.0
    } else if t >= gamma {
        0.0
    } else {
        1.0 - t / gamma
    }
}

fn ramp_derivative(gamma: f64, t: f64) -> f64 {
    if t > 0.0 && t < gamma {
        -1.0 / gamma
    } else {
        0.0
    }
}

/// ỹ = 1 − 2y
pub fn signed_label(y: usize) -> f64 {
    1.0 - 2.0 * y as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSample {
    pub x: Vec<f64>,
    pub y: usize,
}

impl LabeledSample {
    pub fn new(x: Vec<f64>, y: usize) -> Self {
        Self { x, y }
    }
}

/// Everything needed to rebuild a classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelCheckpoint {
    pub embedding: EmbeddingSpec,
    pub params: CircuitParams,
    pub measurement: Measurement,
    pub num_classes: usize,
    pub alpha: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone)]
pub struct ClassifierModel {
    embedding: Embedding,
    pub params: CircuitParams,
    measurement: Measurement,
    num_classes: usize,
    alpha: f64,
    gamma: f64,
    diagonals: Vec<Vec<f64>>,
}

impl ClassifierModel {
    pub fn new(
        embedding: Embedding,
        params: CircuitParams,
        measurement: Measurement,
        num_classes: usize,
        alpha: f64,
        gamma: f64,
    ) -> Result<Self> {
        let n = embedding.n_qubits();
        if n == 0 {
            return Err(Error::InvalidParameter("the classifier needs at least one qubit".into()));
        }
        if params.n_qubits != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: params.n_qubits,
            });
        }
        params.validate()?;
        if num_classes < 2 {
            return Err(Error::InvalidParameter("num_classes must be at least 2".into()));
        }
        if num_classes > 2 && num_classes > n {
            return Err(Error::InvalidParameter(format!(
                "{num_classes} classes need at least as many qubits, have {n}"
            )));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
        }
        if !(gamma > 0.0) {
            return Err(Error::InvalidParameter(format!("gamma must be positive, got {gamma}")));
        }
        let diagonals = if num_classes == 2 {
            let qubits: Vec<usize> = match measurement {
                Measurement::ZAll => (0..n).collect(),
                Measurement::ZFirst => vec![0],
            };
            vec![z_diagonal(n, &qubits)]
        } else {
            (0..num_classes).map(|k| z_diagonal(n, &[k])).collect()
        };
        Ok(Self {
            embedding,
            params,
            measurement,
            num_classes,
            alpha,
            gamma,
            diagonals,
        })
    }

    /// Binary model with parameters drawn uniformly from `rng`.
    pub fn random_binary<R: Rng + ?Sized>(
        spec: EmbeddingSpec,
        layers: usize,
        measurement: Measurement,
        alpha: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let embedding = Embedding::new(spec)?;
        let params = CircuitParams::random(layers, embedding.n_qubits(), rng);
        Self::new(embedding, params, measurement, 2, alpha, 1.0)
    }

    pub fn from_checkpoint(c: &ModelCheckpoint) -> Result<Self> {
        Self::new(Embedding::new(c.embedding.clone())?, c.params.clone(), c.measurement, c.num_classes, c.alpha, c.gamma)
    }

    pub fn checkpoint(&self) -> ModelCheckpoint {
        ModelCheckpoint {
            embedding: self.embedding.spec().clone(),
            params: self.params.clone(),
            measurement: self.measurement,
            num_classes: self.num_classes,
            alpha: self.alpha,
            gamma: self.gamma,
        }
    }

    pub fn embedding(&self) -> &Embedding {
        &self.embedding
    }

    pub fn measurement(&self) -> Measurement {
        self.measurement
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn n_qubits(&self) -> usize {
        self.embedding.n_qubits()
    }

    pub fn is_binary(&self) -> bool {
        self.num_classes == 2
    }

    /// ‖M‖_∞ of the measured observable; bounds |f|.
    pub fn observable_norm(&self) -> f64 {
        match (self.is_binary(), self.measurement) {
            (true, Measurement::ZAll) => self.n_qubits() as f64,
            _ => 1.0,
        }
    }

    /// Binary: one score. Multiclass: K scores.
    pub fn n_scores(&self) -> usize {
        self.diagonals.len()
    }

    /// Diagonal M_k; for K = 2, class 1 uses −M so that f₁ = −f₀.
    fn class_diagonal(&self, k: usize) -> Vec<f64> {
        if self.is_binary() {
            let s = signed_label(k);
            self.diagonals[0].iter().map(|v| s * v).collect()
        } else {
            self.diagonals[k].clone()
        }
    }

    /// A_k = U_θ† M_k U_θ.
    pub fn effective_observable(&self, k: usize) -> Result<HermitianMatrix> {
        if k >= self.num_classes {
            return Err(Error::InvalidParameter(format!("class {k} >= K = {}", self.num_classes)));
        }
        let u = circuit_unitary(&self.params);
        let m = CMatrix::from_real_diag(&self.class_diagonal(k));
        Ok(u.adjoint().matmul(&m).matmul(&u).symmetrize())
    }

    fn evolved(&self, state: &QState, shift: Option<(usize, f64)>) -> Vec<f64> {
        let mut st = state.clone();
        apply_circuit(&self.params, &mut st, shift);
        let probs = st.probabilities();
        self.diagonals.iter().map(|d| probs.iter().zip(d).map(|(p, v)| p * v).sum()).collect()
    }

    /// Raw scores for an embedded state.
    pub fn scores_state(&self, state: &QState) -> Vec<f64> {
        self.evolved(state, None)
    }

    pub fn scores_state_shifted(&self, state: &QState, param: usize, delta: f64) -> Vec<f64> {
        self.evolved(state, Some((param, delta)))
    }

    fn check_dim(&self, dim: usize) -> Result<()> {
        if dim != self.embedding.hilbert_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.embedding.hilbert_dim(),
                got: dim,
            });
        }
        Ok(())
    }

    /// f = Tr(Aρ) for the binary model, f₀ otherwise.
    pub fn score(&self, rho: &DensityMatrix) -> Result<f64> {
        Ok(self.scores(rho)?[0])
    }

    /// Per-class scores f_k = Tr(A_k ρ).
    pub fn scores(&self, rho: &DensityMatrix) -> Result<Vec<f64>> {
        self.check_dim(rho.dim())?;
        let raw = self.scores_state(&QState::Mixed(rho.as_matrix().clone()));
        Ok(self.expand(&raw))
    }

    fn expand(&self, raw: &[f64]) -> Vec<f64> {
        if self.is_binary() {
            vec![raw[0], -raw[0]]
        } else {
            raw.to_vec()
        }
    }

    /// Loss and its derivative with respect to each raw score.
    pub fn loss_from_scores(&self, raw: &[f64], y: usize) -> (f64, Vec<f64>) {
        if self.is_binary() {
            let s = signed_label(y);
            let t = s * raw[0];
            (sigmoid_loss(self.alpha, t), vec![s * sigmoid_loss_derivative(self.alpha, t)])
        } else {
            let (k_star, f_other) = raw
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != y)
                .fold((usize::MAX, f64::NEG_INFINITY), |acc, (k, &f)| if f > acc.1 { (k, f) } else { acc });
            let t = raw[y] - f_other;
            let dphi = ramp_derivative(self.gamma, t);
            let mut g = vec![0.0; raw.len()];
            g[y] = dphi;
            g[k_star] -= dphi;
            (ramp_loss(self.gamma, t), g)
        }
    }

    pub fn loss_state(&self, state: &QState, y: usize) -> f64 {
        self.loss_from_scores(&self.scores_state(state), y).0
    }

    /// Loss at a density-matrix input.
    pub fn loss_density(&self, rho: &DensityMatrix, y: usize) -> Result<f64> {
        self.check_dim(rho.dim())?;
        Ok(self.loss_state(&QState::Mixed(rho.as_matrix().clone()), y))
    }

    pub fn state(&self, x: &[f64]) -> Result<QState> {
        self.embedding.state(x)
    }

    pub fn loss(&self, x: &[f64], y: usize) -> Result<f64> {
        Ok(self.loss_state(&self.state(x)?, y))
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        let raw = self.scores_state(&self.state(x)?);
        if self.is_binary() {
            return Ok(if raw[0] >= 0.0 { 0 } else { 1 });
        }
        Ok(raw
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (k, &f)| if f > acc.1 { (k, f) } else { acc })
            .0)
    }

    /// ∂loss/∂θ for every circuit angle by the ±π/2 parameter-shift rule.
    pub fn grad_params_state(&self, state: &QState, y: usize) -> Vec<f64> {
        let raw = self.scores_state(state);
        let (_, dl) = self.loss_from_scores(&raw, y);
        if dl.iter().all(|v| *v == 0.0) {
            return vec![0.0; self.params.len()];
        }
        (0..self.params.len())
            .map(|j| {
                let plus = self.scores_state_shifted(state, j, FRAC_PI_2);
                let minus = self.scores_state_shifted(state, j, -FRAC_PI_2);
                dl.iter().zip(plus.iter().zip(&minus)).map(|(d, (p, m))| d * 0.5 * (p - m)).sum()
            })
            .collect()
    }

    pub fn grad_params(&self, sample: &LabeledSample) -> Result<Vec<f64>> {
        Ok(self.grad_params_state(&self.state(&sample.x)?, sample.y))
    }

    /// ∂loss/∂x. Rotation families use the ±π/4 shift on every upload;
    /// amplitude uses central differences.
    pub fn grad_input(&self, x: &[f64], y: usize) -> Result<Vec<f64>> {
        let d = x.len();
        if !self.embedding.spec().family.is_rotation() {
            let mut g = vec![0.0; d];
            let mut xp = x.to_vec();
            for j in 0..d {
                let h = 1e-6 * x[j].abs().max(1.0);
                xp[j] = x[j] + h;
                let lp = self.loss(&xp, y)?;
                xp[j] = x[j] - h;
                let lm = self.loss(&xp, y)?;
                xp[j] = x[j];
                g[j] = (lp - lm) / (2.0 * h);
            }
            return Ok(g);
        }
        let raw = self.scores_state(&self.state(x)?);
        let (_, dl) = self.loss_from_scores(&raw, y);
        if dl.iter().all(|v| *v == 0.0) {
            return Ok(vec![0.0; d]);
        }
        let layers = self.embedding.spec().effective_layers();
        let mut g = vec![0.0; d];
        for (j, gj) in g.iter_mut().enumerate() {
            let mut df = vec![0.0; raw.len()];
            for layer in 0..layers {
                let at = |delta| {
                    let st = self.embedding.state_shifted(x, Some(InputShift { feature: j, layer, delta }))?;
                    Ok::<_, Error>(self.scores_state(&st))
                };
                let p = at(FRAC_PI_4)?;
                let m = at(-FRAC_PI_4)?;
                for k in 0..df.len() {
                    df[k] += p[k] - m[k];
                }
            }
            *gj = dl.iter().zip(&df).map(|(a, b)| a * b).sum();
        }
        Ok(g)
    }
}

/// Amplitudes of a pure state with a global phase applied.
pub fn with_global_phase(v: &[C64], phase: f64) -> Vec<C64> {
    let p = C64::from_polar(1.0, phase);
    v.iter().map(|z| z * p).collect()
}
