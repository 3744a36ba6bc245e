//! Adam with decoupled weight decay, gradient clipping and the triangular learning-rate
//! profile.

use std::collections::BTreeMap;

use crate::model::{EncoderModel, GradientSet, GroupId, Scalar};

/// Linear warmup to `peak` over the first `warmup_steps`, then linear decay towards zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TriangularSchedule {
    pub peak: f64,
    pub total_steps: usize,
    pub warmup_steps: usize,
}

impl TriangularSchedule {
    pub fn new(peak: f64, total_steps: usize, warmup_fraction: f64) -> Self {
        let warmup_steps = ((warmup_fraction * total_steps as f64).round() as usize).min(total_steps);
        TriangularSchedule {
            peak,
            total_steps,
            warmup_steps,
        }
    }

    /// Rate for 0-based step `s`. The last warmup step runs at exactly `peak`.
    pub fn lr(&self, s: usize) -> f64 {
        let (w, n) = (self.warmup_steps, self.total_steps);
        if s < w {
            self.peak * ((s + 1) as f64 / w as f64)
        } else if s < n {
            self.peak * ((n - s) as f64 / (n - w) as f64)
        } else {
            0.0
        }
    }
}

/// Scales `grads` so their global L2 norm is at most `max_norm`; returns the norm before
/// clipping.
pub fn clip_grad_norm<F: Scalar>(grads: &mut GradientSet<F>, max_norm: f64) -> f64 {
    let norm = grads.global_norm().to_f64().unwrap();
    if norm > max_norm && norm > 0.0 {
        grads.scale(F::from_f64(max_norm / norm).unwrap());
    }
    norm
}

#[derive(Clone, Debug)]
struct Moments<F> {
    m: Vec<F>,
    v: Vec<F>,
    t: i32,
}

/// Per-tensor state with its own step count, so a group unfrozen late starts its bias
/// correction from scratch.
#[derive(Clone, Debug)]
pub struct AdamW<F> {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    state: BTreeMap<(GroupId, &'static str), Moments<F>>,
}

impl<F: Scalar> AdamW<F> {
    pub fn new(weight_decay: f64) -> Self {
        AdamW {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay,
            state: BTreeMap::new(),
        }
    }

    /// Updates exactly the groups present in `grads`; every other parameter is untouched.
    /// Weight decay applies to tensors of rank two or more.
    pub fn step(&mut self, model: &mut EncoderModel<F>, grads: &GradientSet<F>, lr: f64) {
        let c = |x: f64| F::from_f64(x).unwrap();
        let (b1, b2) = (c(self.beta1), c(self.beta2));
        let (one_b1, one_b2) = (c(1.0 - self.beta1), c(1.0 - self.beta2));
        let eps = c(self.eps);
        let lr_f = c(lr);
        let decay = c(1.0 - lr * self.weight_decay);
        for g in grads.groups() {
            let gt = grads.group_tensors(g).expect("listed group");
            for ((name, p), (_, gr)) in model.group_tensors_mut(g).into_iter().zip(gt) {
                let st = self.state.entry((g, name)).or_insert_with(|| Moments {
                    m: vec![F::zero(); p.data.len()],
                    v: vec![F::zero(); p.data.len()],
                    t: 0,
                });
                st.t += 1;
                let bc1 = c(1.0 - self.beta1.powi(st.t));
                let bc2 = c(1.0 - self.beta2.powi(st.t));
                let decayed = p.shape.len() >= 2;
                for (((w, &d), m), v) in p.data.iter_mut().zip(&gr.data).zip(&mut st.m).zip(&mut st.v) {
                    *m = b1 * *m + one_b1 * d;
                    *v = b2 * *v + one_b2 * d * d;
                    let mhat = *m / bc1;
                    let vhat = *v / bc2;
                    if decayed {
                        *w = *w * decay;
                    }
                    *w = *w - lr_f * mhat / (vhat.sqrt() + eps);
                }
            }
        }
    }
}
