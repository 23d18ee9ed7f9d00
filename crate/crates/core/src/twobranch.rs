//! Two-branch projection network.
//!
//! Each modality gets its own small MLP: a fully connected layer, ReLU, a
//! second fully connected layer, then L2 normalization onto the unit
//! sphere. The two branches share no weights; what ties them together is
//! the common output dimension and the loss applied across both outputs.
//! Forward passes cache enough intermediate state for an exact analytic
//! backward pass, including the Jacobian of the normalization step.

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::Modality;
use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::util::fmt_f64;

/// Pre-normalization vectors with L2 norm at or below this are mapped to
/// the zero vector and contribute zero gradient. Dividing by such a norm
/// would amplify noise by twelve orders of magnitude or more.
pub const NORM_EPSILON: f64 = 1e-12;

/// First line of the checkpoint text format.
pub const CHECKPOINT_MAGIC: &str = "XMODAL-MODEL v1";

/// Weights and biases of one branch: `w1` is `hidden x in`, `w2` is
/// `out x hidden`, both row-major. The same struct doubles as a gradient
/// container since gradients share the parameter shapes.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchParams {
    pub w1: Mat,
    pub b1: Vec<f64>,
    pub w2: Mat,
    pub b2: Vec<f64>,
}

/// Intermediate activations of one forward pass, kept for backprop.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    inputs: Mat,
    pre_act: Mat,
    hidden: Mat,
    pre_norm: Mat,
    norms: Vec<f64>,
}

impl ForwardCache {
    pub fn batch_size(&self) -> usize {
        self.norms.len()
    }

    /// How many samples in the batch hit the zero-norm degenerate case.
    pub fn degenerate_count(&self) -> usize {
        self.norms.iter().filter(|n| **n <= NORM_EPSILON).count()
    }
}

impl BranchParams {
    /// All-zero parameters of the given shape.
    pub fn zeros(in_dim: usize, hidden_dim: usize, out_dim: usize) -> Self {
        BranchParams {
            w1: Mat::zeros(hidden_dim, in_dim),
            b1: vec![0.0; hidden_dim],
            w2: Mat::zeros(out_dim, hidden_dim),
            b2: vec![0.0; out_dim],
        }
    }

    pub fn in_dim(&self) -> usize {
        self.w1.cols()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w1.rows()
    }

    pub fn out_dim(&self) -> usize {
        self.w2.rows()
    }

    /// Runs `inputs` (one sample per row) through the branch. Returns the
    /// unit-norm output rows and the cache needed by [`BranchParams::backward`].
    pub fn forward(&self, inputs: &Mat) -> Result<(Mat, ForwardCache)> {
        if inputs.cols() != self.in_dim() {
            return Err(Error::Shape(format!(
                "input has {} columns but the branch expects {}",
                inputs.cols(),
                self.in_dim()
            )));
        }
        if !inputs.is_finite() {
            return Err(Error::Numeric("forward input contains a non-finite value".into()));
        }

        let batch = inputs.rows();
        let (hidden_dim, out_dim) = (self.hidden_dim(), self.out_dim());
        let mut pre_act = Mat::zeros(batch, hidden_dim);
        let mut hidden = Mat::zeros(batch, hidden_dim);
        let mut pre_norm = Mat::zeros(batch, out_dim);
        let mut outputs = Mat::zeros(batch, out_dim);
        let mut norms = vec![0.0; batch];

        for i in 0..batch {
            let x = inputs.row(i);
            {
                let z1 = pre_act.row_mut(i);
                for k in 0..hidden_dim {
                    let wrow = self.w1.row(k);
                    let mut acc = self.b1[k];
                    for (w, xv) in wrow.iter().zip(x) {
                        acc += w * xv;
                    }
                    z1[k] = acc;
                }
            }
            for k in 0..hidden_dim {
                hidden[(i, k)] = pre_act[(i, k)].max(0.0);
            }
            let h = hidden.row(i);
            let mut sq = 0.0;
            {
                let z2 = pre_norm.row_mut(i);
                for j in 0..out_dim {
                    let wrow = self.w2.row(j);
                    let mut acc = self.b2[j];
                    for (w, hv) in wrow.iter().zip(h) {
                        acc += w * hv;
                    }
                    z2[j] = acc;
                    sq += acc * acc;
                }
            }
            let n = sq.sqrt();
            norms[i] = n;
            if n > NORM_EPSILON {
                let out = outputs.row_mut(i);
                let z2 = pre_norm.row(i);
                for j in 0..out_dim {
                    out[j] = z2[j] / n;
                }
            }
        }

        let cache = ForwardCache {
            inputs: inputs.clone(),
            pre_act,
            hidden,
            pre_norm,
            norms,
        };
        Ok((outputs, cache))
    }

    /// Backpropagates `grad_outputs` (gradient of some scalar with respect
    /// to the forward outputs) through the branch. Returns parameter
    /// gradients and the gradient with respect to the inputs.
    ///
    /// The normalization step `u = z / |z|` contributes the Jacobian
    /// `(I - u uᵀ) / |z|`; samples that hit the zero-norm case contribute
    /// nothing, matching the forward definition.
    pub fn backward(&self, cache: &ForwardCache, grad_outputs: &Mat) -> Result<(BranchParams, Mat)> {
        let batch = cache.batch_size();
        let (in_dim, hidden_dim, out_dim) = (self.in_dim(), self.hidden_dim(), self.out_dim());
        if grad_outputs.rows() != batch || grad_outputs.cols() != out_dim {
            return Err(Error::Shape(format!(
                "output gradient is {}x{} but the cached batch is {}x{}",
                grad_outputs.rows(),
                grad_outputs.cols(),
                batch,
                out_dim
            )));
        }
        if cache.inputs.cols() != in_dim || cache.pre_act.cols() != hidden_dim {
            return Err(Error::Shape(
                "forward cache does not match this branch's shapes".into(),
            ));
        }

        let mut grads = BranchParams::zeros(in_dim, hidden_dim, out_dim);
        let mut grad_inputs = Mat::zeros(batch, in_dim);
        let mut g2 = vec![0.0; out_dim];
        let mut gz1 = vec![0.0; hidden_dim];

        for i in 0..batch {
            let n = cache.norms[i];
            if n <= NORM_EPSILON {
                continue;
            }
            let g = grad_outputs.row(i);
            let z2 = cache.pre_norm.row(i);
            let mut gdot = 0.0;
            for j in 0..out_dim {
                gdot += g[j] * z2[j] / n;
            }
            for j in 0..out_dim {
                let u = z2[j] / n;
                g2[j] = (g[j] - gdot * u) / n;
            }

            let h = cache.hidden.row(i);
            for k in 0..hidden_dim {
                gz1[k] = 0.0;
            }
            for j in 0..out_dim {
                let gj = g2[j];
                grads.b2[j] += gj;
                let gw2 = grads.w2.row_mut(j);
                for (slot, hv) in gw2.iter_mut().zip(h) {
                    *slot += gj * hv;
                }
                let w2row = self.w2.row(j);
                for (acc, w) in gz1.iter_mut().zip(w2row) {
                    *acc += gj * w;
                }
            }

            let z1 = cache.pre_act.row(i);
            let x = cache.inputs.row(i);
            let gin = grad_inputs.row_mut(i);
            for k in 0..hidden_dim {
                // ReLU subgradient: zero at and below the kink.
                if z1[k] <= 0.0 {
                    continue;
                }
                let gk = gz1[k];
                if gk == 0.0 {
                    continue;
                }
                grads.b1[k] += gk;
                let gw1 = grads.w1.row_mut(k);
                for (slot, xv) in gw1.iter_mut().zip(x) {
                    *slot += gk * xv;
                }
                let w1row = self.w1.row(k);
                for (slot, w) in gin.iter_mut().zip(w1row) {
                    *slot += gk * w;
                }
            }
        }

        Ok((grads, grad_inputs))
    }

    /// True when every parameter is finite.
    pub fn is_finite(&self) -> bool {
        self.w1.is_finite()
            && self.w2.is_finite()
            && self.b1.iter().all(|v| v.is_finite())
            && self.b2.iter().all(|v| v.is_finite())
    }
}

/// The full model: one branch per modality, sharing hidden and output
/// widths.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoBranchModel {
    pub face: BranchParams,
    pub voice: BranchParams,
}

impl TwoBranchModel {
    pub fn face_in_dim(&self) -> usize {
        self.face.in_dim()
    }

    pub fn voice_in_dim(&self) -> usize {
        self.voice.in_dim()
    }

    pub fn hidden_dim(&self) -> usize {
        self.face.hidden_dim()
    }

    pub fn out_dim(&self) -> usize {
        self.face.out_dim()
    }

    /// Forward pass through the branch matching `modality`.
    pub fn project(&self, modality: Modality, inputs: &Mat) -> Result<(Mat, ForwardCache)> {
        match modality {
            Modality::Face => self.face.forward(inputs),
            Modality::Voice => self.voice.forward(inputs),
        }
    }
}

/// Fresh model with uniform `±1/sqrt(fan_in)` weights and zero biases.
/// The draw order is fixed (face w1, face w2, voice w1, voice w2, row-major
/// within each matrix), so a seed pins the model bit for bit.
pub fn init_model(
    face_in: usize,
    voice_in: usize,
    hidden_dim: usize,
    out_dim: usize,
    seed: u64,
) -> Result<TwoBranchModel> {
    for (name, value) in [
        ("face_in", face_in),
        ("voice_in", voice_in),
        ("hidden_dim", hidden_dim),
        ("out_dim", out_dim),
    ] {
        if value == 0 {
            return Err(Error::Argument(format!("{name} must be at least 1")));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let face = init_branch(face_in, hidden_dim, out_dim, &mut rng);
    let voice = init_branch(voice_in, hidden_dim, out_dim, &mut rng);
    Ok(TwoBranchModel { face, voice })
}

fn init_branch(in_dim: usize, hidden_dim: usize, out_dim: usize, rng: &mut ChaCha8Rng) -> BranchParams {
    let mut params = BranchParams::zeros(in_dim, hidden_dim, out_dim);
    fill_uniform(&mut params.w1, in_dim, rng);
    fill_uniform(&mut params.w2, hidden_dim, rng);
    params
}

fn fill_uniform(m: &mut Mat, fan_in: usize, rng: &mut ChaCha8Rng) {
    let bound = 1.0 / (fan_in as f64).sqrt();
    let dist = Uniform::new(-bound, bound);
    for v in m.as_mut_slice() {
        *v = dist.sample(rng);
    }
}

// ── checkpoint format ───────────────────────────────────────────────────
//
// Line-oriented text:
//
//   XMODAL-MODEL v1
//   dims <face_in> <voice_in> <hidden> <out>
//   block face.w1
//   <hidden rows of face_in space-separated values>
//   block face.b1
//   <1 row of hidden values>
//   ... face.w2, face.b2, then the voice blocks in the same order
//
// Values use 17 significant digits so a load reproduces the saved model
// exactly.

/// Serializes a model to the checkpoint text format.
pub fn save_model(model: &TwoBranchModel) -> String {
    let mut out = String::new();
    out.push_str(CHECKPOINT_MAGIC);
    out.push('\n');
    out.push_str(&format!(
        "dims {} {} {} {}\n",
        model.face_in_dim(),
        model.voice_in_dim(),
        model.hidden_dim(),
        model.out_dim()
    ));
    for (name, branch) in [("face", &model.face), ("voice", &model.voice)] {
        push_mat_block(&mut out, &format!("{name}.w1"), &branch.w1);
        push_vec_block(&mut out, &format!("{name}.b1"), &branch.b1);
        push_mat_block(&mut out, &format!("{name}.w2"), &branch.w2);
        push_vec_block(&mut out, &format!("{name}.b2"), &branch.b2);
    }
    out
}

fn push_row(out: &mut String, row: &[f64]) {
    for (i, v) in row.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(&fmt_f64(*v));
    }
    out.push('\n');
}

fn push_mat_block(out: &mut String, name: &str, m: &Mat) {
    out.push_str("block ");
    out.push_str(name);
    out.push('\n');
    for r in 0..m.rows() {
        push_row(out, m.row(r));
    }
}

fn push_vec_block(out: &mut String, name: &str, v: &[f64]) {
    out.push_str("block ");
    out.push_str(name);
    out.push('\n');
    push_row(out, v);
}

/// Parses the checkpoint text format, rejecting anything malformed or
/// truncated rather than returning a partial model.
pub fn load_model(text: &str) -> Result<TwoBranchModel> {
    let mut lines = text.lines().enumerate();
    let ck = |msg: String| Error::Checkpoint(msg);

    let (_, magic) = lines
        .next()
        .ok_or_else(|| ck("empty checkpoint".into()))?;
    if magic != CHECKPOINT_MAGIC {
        return Err(ck(format!(
            "unsupported format line `{magic}`, expected `{CHECKPOINT_MAGIC}`"
        )));
    }

    let (_, dims_line) = lines
        .next()
        .ok_or_else(|| ck("truncated checkpoint: missing dims line".into()))?;
    let dims: Vec<&str> = dims_line.split(' ').collect();
    if dims.len() != 5 || dims[0] != "dims" {
        return Err(ck(format!("malformed dims line `{dims_line}`")));
    }
    let mut parsed = [0usize; 4];
    for (slot, raw) in parsed.iter_mut().zip(&dims[1..]) {
        *slot = raw
            .parse()
            .map_err(|_| ck(format!("invalid dimension `{raw}` in dims line")))?;
        if *slot == 0 {
            return Err(ck("dimensions must be positive".into()));
        }
    }
    let [face_in, voice_in, hidden, out_dim] = parsed;

    let mut read_block = |name: &str, rows: usize, cols: usize| -> Result<Vec<f64>> {
        let (line_no, marker) = lines
            .next()
            .ok_or_else(|| ck(format!("truncated checkpoint: expected block `{name}`")))?;
        let expected = format!("block {name}");
        if marker != expected {
            return Err(ck(format!(
                "line {}: expected `{expected}`, found `{marker}`",
                line_no + 1
            )));
        }
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            let (line_no, row) = lines.next().ok_or_else(|| {
                ck(format!("truncated checkpoint: block `{name}` ends after {r} of {rows} rows"))
            })?;
            let mut count = 0;
            for raw in row.split(' ') {
                let v: f64 = raw.parse().map_err(|_| {
                    ck(format!("line {}: invalid number `{raw}`", line_no + 1))
                })?;
                if !v.is_finite() {
                    return Err(ck(format!("line {}: non-finite value", line_no + 1)));
                }
                data.push(v);
                count += 1;
            }
            if count != cols {
                return Err(ck(format!(
                    "line {}: block `{name}` row has {count} values, expected {cols}",
                    line_no + 1
                )));
            }
        }
        Ok(data)
    };

    let mut branch = |name: &str, in_dim: usize| -> Result<BranchParams> {
        let w1 = read_block(&format!("{name}.w1"), hidden, in_dim)?;
        let b1 = read_block(&format!("{name}.b1"), 1, hidden)?;
        let w2 = read_block(&format!("{name}.w2"), out_dim, hidden)?;
        let b2 = read_block(&format!("{name}.b2"), 1, out_dim)?;
        Ok(BranchParams {
            w1: Mat::from_vec(hidden, in_dim, w1),
            b1,
            w2: Mat::from_vec(out_dim, hidden, w2),
            b2,
        })
    };

    let face = branch("face", face_in)?;
    let voice = branch("voice", voice_in)?;

    if let Some((line_no, extra)) = lines.next() {
        return Err(ck(format!(
            "unexpected trailing content at line {}: `{extra}`",
            line_no + 1
        )));
    }

    Ok(TwoBranchModel { face, voice })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn tiny_model(seed: u64) -> TwoBranchModel {
        init_model(5, 4, 7, 3, seed).unwrap()
    }

    fn random_inputs(rows: usize, cols: usize, seed: u64) -> Mat {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Mat::from_fn(rows, cols, |_, _| rng.gen_range(-1.5..1.5))
    }

    #[test]
    fn init_is_deterministic_and_in_bounds() {
        let a = tiny_model(9);
        let b = tiny_model(9);
        assert_eq!(a, b);
        let c = tiny_model(10);
        assert_ne!(a, c);

        let bound = 1.0 / (5.0_f64).sqrt();
        assert!(a.face.w1.as_slice().iter().all(|w| w.abs() <= bound));
        assert!(a.face.b1.iter().all(|b| *b == 0.0));
        assert!(a.face.b2.iter().all(|b| *b == 0.0));
    }

    #[test]
    fn init_rejects_zero_dims() {
        assert!(matches!(init_model(0, 4, 7, 3, 0), Err(Error::Argument(_))));
        assert!(matches!(init_model(5, 4, 0, 3, 0), Err(Error::Argument(_))));
    }

    #[test]
    fn forward_outputs_have_unit_norm() {
        let m = tiny_model(1);
        let inputs = random_inputs(6, 5, 2);
        let (out, cache) = m.face.forward(&inputs).unwrap();
        assert_eq!(out.rows(), 6);
        assert_eq!(out.cols(), 3);
        assert_eq!(cache.degenerate_count(), 0);
        for i in 0..out.rows() {
            let norm: f64 = out.row(i).iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-9, "row {i} norm {norm}");
        }
    }

    #[test]
    fn forward_is_deterministic() {
        let m = tiny_model(3);
        let inputs = random_inputs(4, 5, 4);
        let (a, _) = m.face.forward(&inputs).unwrap();
        let (b, _) = m.face.forward(&inputs).unwrap();
        assert_eq!(a.as_slice(), b.as_slice());
    }

    #[test]
    fn forward_checks_shapes_and_values() {
        let m = tiny_model(5);
        let bad = Mat::zeros(2, 4);
        assert!(matches!(m.face.forward(&bad), Err(Error::Shape(_))));

        let mut nan_in = Mat::zeros(1, 5);
        nan_in[(0, 2)] = f64::NAN;
        assert!(matches!(m.face.forward(&nan_in), Err(Error::Numeric(_))));
    }

    #[test]
    fn zero_params_hit_the_degenerate_case() {
        let zero = BranchParams::zeros(5, 7, 3);
        let inputs = random_inputs(3, 5, 6);
        let (out, cache) = zero.forward(&inputs).unwrap();
        assert_eq!(cache.degenerate_count(), 3);
        assert!(out.as_slice().iter().all(|v| *v == 0.0));

        // Gradients through the degenerate samples vanish too.
        let g = Mat::from_fn(3, 3, |_, _| 1.0);
        let (grads, grad_in) = zero.backward(&cache, &g).unwrap();
        assert!(grads.w1.as_slice().iter().all(|v| *v == 0.0));
        assert!(grads.b2.iter().all(|v| *v == 0.0));
        assert!(grad_in.as_slice().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn backward_rejects_mismatched_gradient() {
        let m = tiny_model(7);
        let inputs = random_inputs(2, 5, 8);
        let (_, cache) = m.face.forward(&inputs).unwrap();
        let bad = Mat::zeros(2, 4);
        assert!(matches!(m.face.backward(&cache, &bad), Err(Error::Shape(_))));
    }

    fn param_slot(branch: &mut BranchParams, which: usize, idx: usize) -> &mut f64 {
        match which {
            0 => &mut branch.w1.as_mut_slice()[idx],
            1 => &mut branch.b1[idx],
            2 => &mut branch.w2.as_mut_slice()[idx],
            _ => &mut branch.b2[idx],
        }
    }

    fn param_get(branch: &BranchParams, which: usize, idx: usize) -> f64 {
        match which {
            0 => branch.w1.as_slice()[idx],
            1 => branch.b1[idx],
            2 => branch.w2.as_slice()[idx],
            _ => branch.b2[idx],
        }
    }

    #[test]
    fn analytic_gradients_match_finite_differences() {
        // Scalar objective: sum of c[i][j] * out[i][j] for fixed random c.
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        let c = Mat::from_fn(3, 3, |_, _| rng.gen_range(-1.0..1.0));
        let inputs = random_inputs(3, 5, 41);
        let model = tiny_model(42);

        let objective = |branch: &BranchParams, inputs: &Mat| -> f64 {
            let (out, _) = branch.forward(inputs).unwrap();
            out.as_slice()
                .iter()
                .zip(c.as_slice())
                .map(|(o, cv)| o * cv)
                .sum()
        };

        let (_, cache) = model.face.forward(&inputs).unwrap();
        let (grads, grad_in) = model.face.backward(&cache, &c).unwrap();

        let h = 1e-5;
        let mut max_rel = 0.0_f64;
        let mut check = |analytic: f64, numeric: f64| {
            let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6);
            max_rel = max_rel.max(rel);
        };

        // Parameter gradients, every coordinate of the tiny branch.
        let mut scratch = model.face.clone();
        for which in 0..4 {
            let n_slots = match which {
                0 => scratch.w1.as_slice().len(),
                1 => scratch.b1.len(),
                2 => scratch.w2.as_slice().len(),
                _ => scratch.b2.len(),
            };
            for idx in 0..n_slots {
                let analytic = param_get(&grads, which, idx);
                let orig = param_get(&scratch, which, idx);
                *param_slot(&mut scratch, which, idx) = orig + h;
                let up = objective(&scratch, &inputs);
                *param_slot(&mut scratch, which, idx) = orig - h;
                let down = objective(&scratch, &inputs);
                *param_slot(&mut scratch, which, idx) = orig;
                check(analytic, (up - down) / (2.0 * h));
            }
        }

        // Input gradients.
        let mut scratch_in = inputs.clone();
        for idx in 0..grad_in.as_slice().len() {
            let analytic = grad_in.as_slice()[idx];
            let orig = scratch_in.as_slice()[idx];
            scratch_in.as_mut_slice()[idx] = orig + h;
            let up = objective(&model.face, &scratch_in);
            scratch_in.as_mut_slice()[idx] = orig - h;
            let down = objective(&model.face, &scratch_in);
            scratch_in.as_mut_slice()[idx] = orig;
            check(analytic, (up - down) / (2.0 * h));
        }

        assert!(max_rel <= 1e-4, "max relative error {max_rel}");
    }

    #[test]
    fn checkpoint_round_trip_is_a_fixpoint() {
        let m = tiny_model(11);
        let text = save_model(&m);
        let back = load_model(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(save_model(&back), text);
    }

    #[test]
    fn round_trip_preserves_outputs_exactly() {
        let m = tiny_model(12);
        let inputs = random_inputs(5, 5, 13);
        let (before, _) = m.face.forward(&inputs).unwrap();
        let back = load_model(&save_model(&m)).unwrap();
        let (after, _) = back.face.forward(&inputs).unwrap();
        for (a, b) in before.as_slice().iter().zip(after.as_slice()) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn load_rejects_bad_inputs() {
        let m = tiny_model(14);
        let text = save_model(&m);

        assert!(matches!(load_model(""), Err(Error::Checkpoint(_))));
        assert!(matches!(
            load_model("XMODAL-MODEL v2\n"),
            Err(Error::Checkpoint(_))
        ));

        // Truncation anywhere must fail, never yield a partial model.
        let lines: Vec<&str> = text.lines().collect();
        for cut in [1, 2, 3, lines.len() / 2, lines.len() - 1] {
            let truncated = lines[..cut].join("\n");
            assert!(
                matches!(load_model(&truncated), Err(Error::Checkpoint(_))),
                "cut at {cut} lines"
            );
        }

        // Trailing junk is rejected.
        let mut extra = text.clone();
        extra.push_str("tail\n");
        assert!(matches!(load_model(&extra), Err(Error::Checkpoint(_))));

        // Corrupt a value.
        let corrupted = text.replacen("e-", "x-", 1);
        assert!(matches!(load_model(&corrupted), Err(Error::Checkpoint(_))));

        // Wrong dims for the data that follows.
        let wrong_dims = text.replacen("dims 5 4 7 3", "dims 5 4 7 4", 1);
        assert!(matches!(load_model(&wrong_dims), Err(Error::Checkpoint(_))));
    }
}
