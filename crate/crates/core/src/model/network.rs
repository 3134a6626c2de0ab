//! The two-headed network `h(x) = (h1(x), h2(x))` over a shared ReLU trunk.

use serde::{Deserialize, Serialize};

use super::subset::{extract_subset, ExplanationLayout, GroupHead, Grouping, SubsetMask};
use crate::error::{Error, Result};
use crate::masking::RandomSource;
use crate::numerics::{
    affine_forward, affine_input_grad, affine_param_grads, relu, relu_backward, sigmoid,
    sigmoid_backward, Tensor2D,
};

/// Shape of a self-explaining network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Architecture {
    pub inputs: usize,
    pub classes: usize,
    #[serde(default = "default_hidden")]
    pub hidden: Vec<usize>,
    /// `(height, width)` when the features are an image.
    #[serde(default)]
    pub image_shape: Option<(usize, usize)>,
    /// Patch side for grouped explanations.
    #[serde(default)]
    pub group_side: Option<usize>,
    #[serde(default)]
    pub group_head: GroupHead,
    /// Number of trunk layers the explanation head sits on; defaults to all of them.
    #[serde(default)]
    pub explanation_tap: Option<usize>,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}

fn default_hidden() -> Vec<usize> {
    vec![128, 64]
}

fn default_threshold() -> f64 {
    0.5
}

impl Architecture {
    pub fn new(inputs: usize, classes: usize, hidden: Vec<usize>) -> Self {
        Self {
            inputs,
            classes,
            hidden,
            image_shape: None,
            group_side: None,
            group_head: GroupHead::MeanPool,
            explanation_tap: None,
            threshold: default_threshold(),
        }
    }

    pub fn tap(&self) -> usize {
        self.explanation_tap.unwrap_or(self.hidden.len())
    }

    pub fn validate(&self) -> Result<()> {
        if self.inputs == 0 || self.classes == 0 {
            return Err(Error::Config("network needs at least one input and one class".into()));
        }
        if self.hidden.contains(&0) {
            return Err(Error::Config("hidden layer widths must be positive".into()));
        }
        if self.tap() > self.hidden.len() {
            return Err(Error::Config(format!(
                "explanation tap {} exceeds the {} trunk layers",
                self.tap(),
                self.hidden.len()
            )));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::Config(format!(
                "threshold must lie in (0, 1), got {}",
                self.threshold
            )));
        }
        if let Some((h, w)) = self.image_shape {
            if h * w != self.inputs {
                return Err(Error::Config(format!(
                    "image shape {h}x{w} does not cover {} inputs",
                    self.inputs
                )));
            }
        }
        if self.group_side.is_some() && self.image_shape.is_none() {
            return Err(Error::Config("grouped explanations need an image shape".into()));
        }
        Ok(())
    }

    pub fn layout(&self) -> Result<ExplanationLayout> {
        self.validate()?;
        match (self.group_side, self.image_shape) {
            (Some(side), Some((h, w))) => Ok(ExplanationLayout::Grouped {
                grouping: Grouping::new(h, w, side)?,
                head: self.group_head,
            }),
            _ => Ok(ExplanationLayout::PerFeature),
        }
    }
}

/// One affine layer; `w` is `fan_in × fan_out`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub w: Tensor2D,
    pub b: Vec<f64>,
}

impl Dense {
    fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Self {
            w: Tensor2D::zeros(fan_in, fan_out),
            b: vec![0.0; fan_out],
        }
    }

    fn uniform(fan_in: usize, fan_out: usize, zero_bias: bool, rng: &mut RandomSource) -> Self {
        let bound = 1.0 / (fan_in as f64).sqrt();
        let mut layer = Self::zeros(fan_in, fan_out);
        for v in layer.w.data_mut() {
            *v = rng.uniform_in(-bound, bound);
        }
        if !zero_bias {
            for v in &mut layer.b {
                *v = rng.uniform_in(-bound, bound);
            }
        }
        layer
    }

    pub fn fan_in(&self) -> usize {
        self.w.rows()
    }

    pub fn fan_out(&self) -> usize {
        self.w.cols()
    }
}

/// Parameters of the self-explaining network.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    arch: Architecture,
    layout: ExplanationLayout,
    pub(crate) trunk: Vec<Dense>,
    pub(crate) prediction: Dense,
    pub(crate) explanation: Dense,
}

/// Activations kept from a forward pass for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    /// `acts[0]` is the input, `acts[k]` the output of trunk layer `k`.
    acts: Vec<Tensor2D>,
    pres: Vec<Tensor2D>,
    pub logits: Tensor2D,
    /// Sigmoid explanation scores; absent for prediction-only passes.
    pub scores: Option<Tensor2D>,
}

impl ForwardPass {
    pub fn input(&self) -> &Tensor2D {
        &self.acts[0]
    }

    pub fn predictions(&self) -> Vec<usize> {
        self.logits.argmax_rows()
    }
}

/// Gradients in parameter declaration order, one flat block per weight or bias.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub blocks: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.blocks.iter_mut().zip(&other.blocks) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn global_norm(&self) -> f64 {
        self.blocks
            .iter()
            .flat_map(|b| b.iter())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    pub fn scale(&mut self, alpha: f64) {
        for v in self.blocks.iter_mut().flat_map(|b| b.iter_mut()) {
            *v *= alpha;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.blocks.iter().flatten().all(|v| v.is_finite())
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.blocks.concat()
    }
}

/// Result of a backward pass.
#[derive(Debug, Clone)]
pub struct Backward {
    pub params: Option<Gradients>,
    pub input: Option<Tensor2D>,
}

impl ModelParams {
    /// Uniform `±1/sqrt(fan_in)` initialisation; the explanation bias starts at zero.
    pub fn init(arch: Architecture, rng: &mut RandomSource) -> Result<Self> {
        let layout = arch.layout()?;
        let mut trunk = Vec::with_capacity(arch.hidden.len());
        let mut width = arch.inputs;
        for &h in &arch.hidden {
            trunk.push(Dense::uniform(width, h, false, rng));
            width = h;
        }
        let prediction = Dense::uniform(width, arch.classes, false, rng);
        let tap_width = tap_width(&arch);
        let explanation = Dense::uniform(tap_width, layout.head_width(arch.inputs), true, rng);
        Ok(Self {
            arch,
            layout,
            trunk,
            prediction,
            explanation,
        })
    }

    /// All weights and biases zero.
    pub fn zeros(arch: Architecture) -> Result<Self> {
        let layout = arch.layout()?;
        let mut trunk = Vec::new();
        let mut width = arch.inputs;
        for &h in &arch.hidden {
            trunk.push(Dense::zeros(width, h));
            width = h;
        }
        let prediction = Dense::zeros(width, arch.classes);
        let explanation = Dense::zeros(tap_width(&arch), layout.head_width(arch.inputs));
        Ok(Self {
            arch,
            layout,
            trunk,
            prediction,
            explanation,
        })
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn layout(&self) -> &ExplanationLayout {
        &self.layout
    }

    pub fn inputs(&self) -> usize {
        self.arch.inputs
    }

    pub fn classes(&self) -> usize {
        self.arch.classes
    }

    pub fn threshold(&self) -> f64 {
        self.arch.threshold
    }

    pub fn set_threshold(&mut self, tau: f64) -> Result<()> {
        if !(tau > 0.0 && tau < 1.0) {
            return Err(Error::Config(format!("threshold must lie in (0, 1), got {tau}")));
        }
        self.arch.threshold = tau;
        Ok(())
    }

    pub fn trunk(&self) -> &[Dense] {
        &self.trunk
    }

    pub fn prediction_head(&self) -> &Dense {
        &self.prediction
    }

    pub fn explanation_head(&self) -> &Dense {
        &self.explanation
    }

    pub fn explanation_head_mut(&mut self) -> &mut Dense {
        &mut self.explanation
    }

    pub fn prediction_head_mut(&mut self) -> &mut Dense {
        &mut self.prediction
    }

    pub fn trunk_mut(&mut self) -> &mut [Dense] {
        &mut self.trunk
    }

    fn layers(&self) -> impl Iterator<Item = &Dense> {
        self.trunk
            .iter()
            .chain(std::iter::once(&self.prediction))
            .chain(std::iter::once(&self.explanation))
    }

    /// Parameter blocks in declaration order: each trunk layer's weights then
    /// bias, then the prediction head, then the explanation head.
    pub fn blocks(&self) -> Vec<&[f64]> {
        self.layers()
            .flat_map(|l| [l.w.data(), l.b.as_slice()])
            .collect()
    }

    pub fn blocks_mut(&mut self) -> Vec<&mut [f64]> {
        self.trunk
            .iter_mut()
            .chain(std::iter::once(&mut self.prediction))
            .chain(std::iter::once(&mut self.explanation))
            .flat_map(|l| [l.w.data_mut(), l.b.as_mut_slice()])
            .collect()
    }

    /// Index of the first explanation-head block within [`Self::blocks`].
    pub fn explanation_block_start(&self) -> usize {
        2 * (self.trunk.len() + 1)
    }

    pub fn parameter_count(&self) -> usize {
        self.blocks().iter().map(|b| b.len()).sum()
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.blocks().concat()
    }

    pub fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        let total = self.parameter_count();
        if flat.len() != total {
            return Err(Error::Dimension {
                op: "set_flat",
                left: (total, 1),
                right: (flat.len(), 1),
            });
        }
        let mut offset = 0;
        for block in self.blocks_mut() {
            block.copy_from_slice(&flat[offset..offset + block.len()]);
            offset += block.len();
        }
        Ok(())
    }

    pub fn zero_gradients(&self) -> Gradients {
        Gradients {
            blocks: self.blocks().iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    fn check_input(&self, x: &Tensor2D) -> Result<()> {
        if x.cols() != self.arch.inputs {
            return Err(Error::Dimension {
                op: "forward",
                left: x.shape(),
                right: (x.rows(), self.arch.inputs),
            });
        }
        Ok(())
    }

    fn trunk_pass(&self, x: &Tensor2D) -> Result<(Vec<Tensor2D>, Vec<Tensor2D>)> {
        self.check_input(x)?;
        let mut acts = Vec::with_capacity(self.trunk.len() + 1);
        let mut pres = Vec::with_capacity(self.trunk.len());
        acts.push(x.clone());
        for layer in &self.trunk {
            let pre = affine_forward(acts.last().expect("input pushed"), &layer.w, &layer.b)?;
            acts.push(relu(&pre));
            pres.push(pre);
        }
        Ok((acts, pres))
    }

    /// Both heads: logits `h1(x)` and sigmoid scores `h2(x)`.
    pub fn forward(&self, x: &Tensor2D) -> Result<ForwardPass> {
        let (acts, pres) = self.trunk_pass(x)?;
        let top = acts.last().expect("input pushed");
        let logits = affine_forward(top, &self.prediction.w, &self.prediction.b)?;
        let tap = &acts[self.arch.tap()];
        let scores = sigmoid(&affine_forward(tap, &self.explanation.w, &self.explanation.b)?);
        Ok(ForwardPass {
            acts,
            pres,
            logits,
            scores: Some(scores),
        })
    }

    /// Prediction head only.
    pub fn forward_logits(&self, x: &Tensor2D) -> Result<ForwardPass> {
        let (acts, pres) = self.trunk_pass(x)?;
        let top = acts.last().expect("input pushed");
        let logits = affine_forward(top, &self.prediction.w, &self.prediction.b)?;
        Ok(ForwardPass {
            acts,
            pres,
            logits,
            scores: None,
        })
    }

    pub fn logits(&self, x: &Tensor2D) -> Result<Tensor2D> {
        Ok(self.forward_logits(x)?.logits)
    }

    /// Lowest-index argmax of the prediction logits for each row.
    pub fn predict(&self, x: &Tensor2D) -> Result<Vec<usize>> {
        Ok(self.logits(x)?.argmax_rows())
    }

    pub fn predict_one(&self, x: &[f64]) -> Result<usize> {
        Ok(self.predict(&Tensor2D::row_vector(x))?[0])
    }

    /// Explanation scores and the thresholded subset for each row.
    pub fn explain(&self, x: &Tensor2D) -> Result<(Tensor2D, Vec<SubsetMask>)> {
        let pass = self.forward(x)?;
        let scores = pass.scores.expect("full forward carries scores");
        let masks = self.subsets_from_scores(&scores);
        Ok((scores, masks))
    }

    pub fn subsets_from_scores(&self, scores: &Tensor2D) -> Vec<SubsetMask> {
        scores
            .iter_rows()
            .map(|row| extract_subset(row, self.arch.threshold, &self.layout))
            .collect()
    }

    /// Backpropagates upstream gradients on the logits and/or the sigmoid scores.
    ///
    /// `d_scores` is the gradient with respect to the post-sigmoid scores and
    /// requires a pass produced by [`Self::forward`].
    pub fn backward(
        &self,
        pass: &ForwardPass,
        d_logits: Option<&Tensor2D>,
        d_scores: Option<&Tensor2D>,
        want_params: bool,
        want_input: bool,
    ) -> Result<Backward> {
        let depth = self.trunk.len();
        let batch = pass.acts[0].rows();
        let mut grads = want_params.then(|| self.zero_gradients());
        let expl_start = self.explanation_block_start();

        // Gradient flowing into each trunk activation.
        let mut d_acts: Vec<Option<Tensor2D>> = vec![None; depth + 1];

        if let Some(dl) = d_logits {
            if dl.shape() != pass.logits.shape() {
                return Err(Error::Dimension {
                    op: "backward logits",
                    left: pass.logits.shape(),
                    right: dl.shape(),
                });
            }
            if let Some(g) = grads.as_mut() {
                let (dw, db) = affine_param_grads(&pass.acts[depth], dl);
                g.blocks[2 * depth] = dw.into_vec();
                g.blocks[2 * depth + 1] = db;
            }
            accumulate(&mut d_acts[depth], affine_input_grad(&self.prediction.w, dl));
        }

        if let Some(ds) = d_scores {
            let scores = pass.scores.as_ref().ok_or_else(|| {
                Error::Config("score gradient supplied for a prediction-only pass".into())
            })?;
            let d_pre = sigmoid_backward(scores, ds)?;
            let tap = self.arch.tap();
            if let Some(g) = grads.as_mut() {
                let (dw, db) = affine_param_grads(&pass.acts[tap], &d_pre);
                g.blocks[expl_start] = dw.into_vec();
                g.blocks[expl_start + 1] = db;
            }
            accumulate(&mut d_acts[tap], affine_input_grad(&self.explanation.w, &d_pre));
        }

        for k in (1..=depth).rev() {
            let Some(upstream) = d_acts[k].take() else {
                continue;
            };
            let d_pre = relu_backward(&pass.pres[k - 1], &upstream)?;
            if let Some(g) = grads.as_mut() {
                let (dw, db) = affine_param_grads(&pass.acts[k - 1], &d_pre);
                g.blocks[2 * (k - 1)] = dw.into_vec();
                g.blocks[2 * (k - 1) + 1] = db;
            }
            if k > 1 || want_input {
                accumulate(&mut d_acts[k - 1], affine_input_grad(&self.trunk[k - 1].w, &d_pre));
            }
        }

        let input = if want_input {
            Some(d_acts[0].take().unwrap_or_else(|| Tensor2D::zeros(batch, self.arch.inputs)))
        } else {
            None
        };
        Ok(Backward {
            params: grads,
            input,
        })
    }
}

fn tap_width(arch: &Architecture) -> usize {
    match arch.tap() {
        0 => arch.inputs,
        t => arch.hidden[t - 1],
    }
}

fn accumulate(slot: &mut Option<Tensor2D>, g: Tensor2D) {
    match slot {
        Some(acc) => {
            for (a, b) in acc.data_mut().iter_mut().zip(g.data()) {
                *a += b;
            }
        }
        None => *slot = Some(g),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_arch() -> Architecture {
        Architecture::new(5, 3, vec![4, 3])
    }

    #[test]
    fn zero_weight_model() {
        let params = ModelParams::zeros(small_arch()).unwrap();
        let pass = params.forward(&Tensor2D::filled(2, 5, 0.7)).unwrap();
        assert!(pass.logits.data().iter().all(|&v| v == 0.0));
        assert!(pass.scores.unwrap().data().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn width_mismatch_is_an_error() {
        let params = ModelParams::zeros(small_arch()).unwrap();
        assert!(matches!(
            params.forward(&Tensor2D::zeros(1, 4)),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn init_is_deterministic() {
        let a = ModelParams::init(small_arch(), &mut RandomSource::new(3)).unwrap();
        let b = ModelParams::init(small_arch(), &mut RandomSource::new(3)).unwrap();
        assert_eq!(a, b);
        assert!(a.explanation.b.iter().all(|&v| v == 0.0));
        let bound = 1.0 / 5f64.sqrt();
        assert!(a.trunk[0].w.data().iter().all(|v| v.abs() <= bound));
    }

    #[test]
    fn flat_round_trip() {
        let a = ModelParams::init(small_arch(), &mut RandomSource::new(9)).unwrap();
        let mut b = ModelParams::zeros(small_arch()).unwrap();
        b.set_flat(&a.to_flat()).unwrap();
        assert_eq!(a, b);
        assert!(b.set_flat(&[0.0]).is_err());
    }

    #[test]
    fn invalid_architectures() {
        let mut a = small_arch();
        a.explanation_tap = Some(3);
        assert!(a.validate().is_err());
        let mut a = small_arch();
        a.group_side = Some(2);
        assert!(a.validate().is_err());
        let mut a = small_arch();
        a.threshold = 1.0;
        assert!(a.validate().is_err());
    }

    #[test]
    fn tap_on_input_layer() {
        let mut arch = small_arch();
        arch.explanation_tap = Some(0);
        let params = ModelParams::init(arch, &mut RandomSource::new(1)).unwrap();
        assert_eq!(params.explanation.fan_in(), 5);
        let pass = params.forward(&Tensor2D::filled(1, 5, 0.2)).unwrap();
        assert_eq!(pass.scores.unwrap().shape(), (1, 5));
    }
}
