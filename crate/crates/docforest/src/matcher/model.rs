//! Two-role encoder model and its on-disk JSON format.
//!
//! Each encoder maps a feature vector x (dim D) through affine → tanh →
//! affine (D → H → E) and renormalizes the output to unit length. The
//! child encoder embeds an entity seeking a parent; the parent encoder
//! embeds an entity acting as a candidate. Scores are cosines of these
//! role embeddings.

use crate::error::{Error, Result};
use crate::matcher::features::FeatureConfig;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

pub const MODEL_VERSION: u32 = 1;

/// Pre-normalization norms below this threshold trigger the fixed e_1
/// output (degenerate-input guard).
pub const NORM_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    /// Feature dimension.
    #[serde(rename = "D")]
    pub d: usize,
    /// Hidden width.
    #[serde(rename = "H")]
    pub h: usize,
    /// Embedding dimension.
    #[serde(rename = "E")]
    pub e: usize,
}

/// One affine → tanh → affine stack. Weights are row-major: `w1` is H×D,
/// `w2` is E×H.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderParams {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl EncoderParams {
    fn zeros(dims: Dims) -> Self {
        EncoderParams {
            w1: vec![0.0; dims.h * dims.d],
            b1: vec![0.0; dims.h],
            w2: vec![0.0; dims.e * dims.h],
            b2: vec![0.0; dims.e],
        }
    }

    /// Symmetric uniform fan-in init, U(−1/√fan_in, 1/√fan_in), filled in
    /// declaration order (w1, b1, w2, b2) so the byte layout of a fresh
    /// model is a pure function of the seed.
    fn init(dims: Dims, rng: &mut ChaCha8Rng) -> Self {
        let mut p = Self::zeros(dims);
        let bound1 = 1.0 / (dims.d as f64).sqrt();
        let bound2 = 1.0 / (dims.h as f64).sqrt();
        for w in &mut p.w1 {
            *w = rng.gen_range(-bound1..bound1);
        }
        for b in &mut p.b1 {
            *b = rng.gen_range(-bound1..bound1);
        }
        for w in &mut p.w2 {
            *w = rng.gen_range(-bound2..bound2);
        }
        for b in &mut p.b2 {
            *b = rng.gen_range(-bound2..bound2);
        }
        p
    }

    fn check_dims(&self, dims: Dims, role: &str) -> Result<()> {
        let want = [
            ("w1", self.w1.len(), dims.h * dims.d),
            ("b1", self.b1.len(), dims.h),
            ("w2", self.w2.len(), dims.e * dims.h),
            ("b2", self.b2.len(), dims.e),
        ];
        for (name, got, expect) in want {
            if got != expect {
                return Err(Error::Validation(format!(
                    "{role} encoder {name} has {got} values, dims require {expect}"
                )));
            }
        }
        if self
            .w1
            .iter()
            .chain(&self.b1)
            .chain(&self.w2)
            .chain(&self.b2)
            .any(|v| !v.is_finite())
        {
            return Err(Error::Validation(format!(
                "{role} encoder contains non-finite parameters"
            )));
        }
        Ok(())
    }
}

/// Intermediate activations of one encode pass, kept for backprop.
pub struct EncodeTrace {
    /// tanh activations, length H.
    pub hidden: Vec<f64>,
    /// Pre-normalization output, length E.
    pub raw: Vec<f64>,
    /// ‖raw‖; below [`NORM_EPS`] the output is the fixed e_1 vector.
    pub norm: f64,
    /// Unit embedding, length E.
    pub out: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchModel {
    pub version: u32,
    pub dims: Dims,
    /// Logit scale, > 0.
    pub s: f64,
    /// Additive angle margin in radians, in [0, π/2).
    pub m: f64,
    pub feature_config: FeatureConfig,
    pub child_encoder: EncoderParams,
    pub parent_encoder: EncoderParams,
}

impl MatchModel {
    /// Fresh model with seeded init. The child encoder consumes the
    /// generator stream first, then the parent encoder.
    pub fn new_random(
        feature_config: FeatureConfig,
        h: usize,
        e: usize,
        s: f64,
        m: f64,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        feature_config.validate()?;
        let dims = Dims {
            d: feature_config.dim(),
            h,
            e,
        };
        if h == 0 || e == 0 {
            return Err(Error::Config("hidden and embedding dims must be positive".into()));
        }
        let model = MatchModel {
            version: MODEL_VERSION,
            dims,
            s,
            m,
            feature_config,
            child_encoder: EncoderParams::init(dims, rng),
            parent_encoder: EncoderParams::init(dims, rng),
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != MODEL_VERSION {
            return Err(Error::Parse(format!(
                "model version {} unsupported (expected {MODEL_VERSION})",
                self.version
            )));
        }
        check_hyperparams(self.s, self.m)?;
        self.feature_config.validate()?;
        if self.dims.d != self.feature_config.dim() {
            return Err(Error::Config(format!(
                "model dimension D={} disagrees with feature config dimension {}",
                self.dims.d,
                self.feature_config.dim()
            )));
        }
        self.child_encoder.check_dims(self.dims, "child")?;
        self.parent_encoder.check_dims(self.dims, "parent")?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut json = serde_json::to_string(self).expect("model serializes");
        json.push('\n');
        fs::write(path, json)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let raw = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let model: MatchModel = serde_json::from_str(&raw)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        model.validate()?;
        Ok(model)
    }
}

pub fn check_hyperparams(s: f64, m: f64) -> Result<()> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::Config(format!("scale s must be positive, got {s}")));
    }
    if !(0.0..std::f64::consts::FRAC_PI_2).contains(&m) {
        return Err(Error::Config(format!(
            "margin m must lie in [0, pi/2), got {m}"
        )));
    }
    Ok(())
}

/// x ↦ normalize(w2 · tanh(w1 x + b1) + b2), with the degenerate guard.
pub fn encode(p: &EncoderParams, dims: Dims, x: &[f64]) -> Vec<f64> {
    encode_trace(p, dims, x).out
}

pub fn encode_trace(p: &EncoderParams, dims: Dims, x: &[f64]) -> EncodeTrace {
    debug_assert_eq!(x.len(), dims.d);
    let mut hidden = vec![0.0; dims.h];
    for (i, h) in hidden.iter_mut().enumerate() {
        let row = &p.w1[i * dims.d..(i + 1) * dims.d];
        let z: f64 = row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + p.b1[i];
        *h = z.tanh();
    }
    let mut raw = vec![0.0; dims.e];
    for (i, r) in raw.iter_mut().enumerate() {
        let row = &p.w2[i * dims.h..(i + 1) * dims.h];
        *r = row.iter().zip(&hidden).map(|(w, v)| w * v).sum::<f64>() + p.b2[i];
    }
    let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
    let out = if norm < NORM_EPS {
        let mut e1 = vec![0.0; dims.e];
        e1[0] = 1.0;
        e1
    } else {
        raw.iter().map(|v| v / norm).collect()
    };
    EncodeTrace {
        hidden,
        raw,
        norm,
        out,
    }
}

/// Gradient buffers shaped like one encoder.
pub struct EncoderGrads {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl EncoderGrads {
    pub fn zeros(dims: Dims) -> Self {
        let z = EncoderParams::zeros(dims);
        EncoderGrads {
            w1: z.w1,
            b1: z.b1,
            w2: z.w2,
            b2: z.b2,
        }
    }
}

/// Accumulate parameter gradients for one encode pass given the gradient
/// `d_out` at the unit embedding.
///
/// The unit-normalization Jacobian is (I − u·uᵀ)/‖raw‖; a degenerate pass
/// (‖raw‖ < [`NORM_EPS`]) emitted a constant, so nothing flows.
pub fn encode_backward(
    p: &EncoderParams,
    dims: Dims,
    x: &[f64],
    trace: &EncodeTrace,
    d_out: &[f64],
    grads: &mut EncoderGrads,
) {
    if trace.norm < NORM_EPS {
        return;
    }
    let dot: f64 = d_out.iter().zip(&trace.out).map(|(g, u)| g * u).sum();
    let d_raw: Vec<f64> = d_out
        .iter()
        .zip(&trace.out)
        .map(|(g, u)| (g - dot * u) / trace.norm)
        .collect();

    let mut d_hidden = vec![0.0; dims.h];
    for (i, &dr) in d_raw.iter().enumerate() {
        let row = &p.w2[i * dims.h..(i + 1) * dims.h];
        let grow = &mut grads.w2[i * dims.h..(i + 1) * dims.h];
        for j in 0..dims.h {
            grow[j] += dr * trace.hidden[j];
            d_hidden[j] += dr * row[j];
        }
        grads.b2[i] += dr;
    }
    for (j, dh) in d_hidden.iter_mut().enumerate() {
        *dh *= 1.0 - trace.hidden[j] * trace.hidden[j];
    }
    for (j, &dh) in d_hidden.iter().enumerate() {
        let grow = &mut grads.w1[j * dims.d..(j + 1) * dims.d];
        for (k, &xv) in x.iter().enumerate() {
            grow[k] += dh * xv;
        }
        grads.b1[j] += dh;
    }
}
