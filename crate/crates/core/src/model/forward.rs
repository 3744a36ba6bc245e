//! Forward passes, the cached tape, and reverse-mode gradients.
//!
//! Documents in a batch are processed one after another and their gradients are summed in
//! batch order, so results do not depend on thread scheduling.

use super::kernels::{
    add_assign, col_sum_acc, dot, gelu, gelu_grad, layer_norm, layer_norm_backward, linear,
    matmul_nt, matmul_tn_acc, sigmoid, bce_with_logits, LnTrace,
};
use super::{
    Batch, ClsHead, EncoderLayer, EncoderModel, GradientSet, ModelError, Result, Scalar,
    TrainableSet,
};
use crate::tokenizer::MaskTargets;

struct LayerTrace<F> {
    input: Vec<F>,
    q: Vec<F>,
    k: Vec<F>,
    v: Vec<F>,
    /// `[heads × T × T]`, rows are queries; masked keys hold exactly zero.
    probs: Vec<F>,
    ctx: Vec<F>,
    ln1: LnTrace<F>,
    h1: Vec<F>,
    f: Vec<F>,
    g: Vec<F>,
    ln2: LnTrace<F>,
}

struct DocTrace<F> {
    ids: Vec<u32>,
    emb_ln: LnTrace<F>,
    layers: Vec<LayerTrace<F>>,
    output: Vec<F>,
}

enum HeadTrace<F> {
    Mlm {
        /// Per document: masked positions in ascending order.
        positions: Vec<Vec<usize>>,
        x: Vec<F>,
        t: Vec<F>,
        ln: LnTrace<F>,
        z: Vec<F>,
        /// `∂loss/∂logits`, `[M × V]`.
        dlogits: Vec<F>,
    },
    Cls {
        c: Vec<F>,
        p: Vec<F>,
        /// `∂loss/∂logits`, `[N × L]`.
        dlogits: Vec<F>,
    },
}

/// Activations cached by a forward pass for the following `backward`.
pub struct Tape<F> {
    docs: Vec<DocTrace<F>>,
    head: Option<HeadTrace<F>>,
}

impl<F> Default for Tape<F> {
    fn default() -> Self {
        Tape {
            docs: Vec::new(),
            head: None,
        }
    }
}

impl<F> Tape<F> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.head.is_none()
    }

    pub fn clear(&mut self) {
        self.docs.clear();
        self.head = None;
    }
}

#[derive(Clone, Debug)]
pub struct MlmOutput<F> {
    /// Mean cross-entropy over masked positions; zero when nothing is masked.
    pub loss: F,
    pub masked: usize,
    /// One row of vocabulary logits per masked position, documents in batch order and
    /// positions ascending.
    pub logits: Vec<Vec<F>>,
}

#[derive(Clone, Debug)]
pub struct ClassifyOutput<F> {
    /// Mean over documents of the summed per-label binary cross-entropy.
    pub loss: F,
    pub logits: Vec<Vec<F>>,
}

impl<F: Scalar> EncoderModel<F> {
    fn layer_forward(&self, l: &EncoderLayer<F>, input: Vec<F>, t: usize, len: usize) -> LayerTrace<F> {
        let h = self.config.hidden;
        let heads = self.config.heads;
        let dh = self.config.head_dim();
        let ff = self.config.ff_dim;
        let q = linear(&input, &l.query_w.data, &l.query_b.data, t, h, h);
        let k = linear(&input, &l.key_w.data, &l.key_b.data, t, h, h);
        let v = linear(&input, &l.value_w.data, &l.value_b.data, t, h, h);
        let scale = F::one() / F::from_usize(dh).unwrap().sqrt();
        let mut probs = vec![F::zero(); heads * t * t];
        let mut ctx = vec![F::zero(); t * h];
        for hd in 0..heads {
            let off = hd * dh;
            for i in 0..t {
                let qi = &q[i * h + off..i * h + off + dh];
                let row = &mut probs[(hd * t + i) * t..(hd * t + i + 1) * t];
                let mut max = F::neg_infinity();
                for j in 0..len {
                    let s = dot(qi, &k[j * h + off..j * h + off + dh]) * scale;
                    row[j] = s;
                    max = max.max(s);
                }
                let mut sum = F::zero();
                for r in row.iter_mut().take(len) {
                    *r = (*r - max).exp();
                    sum = sum + *r;
                }
                for r in row.iter_mut().take(len) {
                    *r = *r / sum;
                }
                let out = &mut ctx[i * h + off..i * h + off + dh];
                for j in 0..len {
                    let p = row[j];
                    for (o, &vv) in out.iter_mut().zip(&v[j * h + off..j * h + off + dh]) {
                        *o = *o + p * vv;
                    }
                }
            }
        }
        let mut r1 = linear(&ctx, &l.attn_out_w.data, &l.attn_out_b.data, t, h, h);
        add_assign(&mut r1, &input);
        let (h1, ln1) = layer_norm(&r1, &l.attn_ln_gain.data, &l.attn_ln_shift.data);
        let f = linear(&h1, &l.ff_in_w.data, &l.ff_in_b.data, t, h, ff);
        let g: Vec<F> = f.iter().map(|&x| gelu(x)).collect();
        let mut r2 = linear(&g, &l.ff_out_w.data, &l.ff_out_b.data, t, ff, h);
        add_assign(&mut r2, &h1);
        let (_, ln2) = layer_norm(&r2, &l.ff_ln_gain.data, &l.ff_ln_shift.data);
        LayerTrace {
            input,
            q,
            k,
            v,
            probs,
            ctx,
            ln1,
            h1,
            f,
            g,
            ln2,
        }
    }

    fn layer_output(&self, l: &EncoderLayer<F>, tr: &LayerTrace<F>) -> Vec<F> {
        let h = self.config.hidden;
        let mut y = tr.ln2.xhat.clone();
        for row in y.chunks_mut(h) {
            for ((v, &g), &s) in row.iter_mut().zip(&l.ff_ln_gain.data).zip(&l.ff_ln_shift.data) {
                *v = g * *v + s;
            }
        }
        y
    }

    fn encode_doc(&self, ids: &[u32], len: usize) -> DocTrace<F> {
        let h = self.config.hidden;
        let t = ids.len();
        let mut x = vec![F::zero(); t * h];
        for (i, &id) in ids.iter().enumerate() {
            let tok = &self.emb.token.data[id as usize * h..(id as usize + 1) * h];
            let pos = &self.emb.position.data[i * h..(i + 1) * h];
            for ((o, &a), &b) in x[i * h..(i + 1) * h].iter_mut().zip(tok).zip(pos) {
                *o = a + b;
            }
        }
        let (mut cur, emb_ln) = layer_norm(&x, &self.emb.ln_gain.data, &self.emb.ln_shift.data);
        let mut layers = Vec::with_capacity(self.layers.len());
        for l in &self.layers {
            let tr = self.layer_forward(l, cur, t, len);
            cur = self.layer_output(l, &tr);
            layers.push(tr);
        }
        DocTrace {
            ids: ids.to_vec(),
            emb_ln,
            layers,
            output: cur,
        }
    }

    fn encode_batch(&self, batch: &Batch) -> Result<Vec<DocTrace<F>>> {
        batch.check(&self.config)?;
        Ok(batch
            .ids
            .iter()
            .zip(&batch.lengths)
            .map(|(ids, &len)| self.encode_doc(ids, len))
            .collect())
    }

    /// Final hidden states, one `[T × H]` row-major block per document.
    pub fn hidden_states(&self, batch: &Batch) -> Result<Vec<Vec<F>>> {
        Ok(self.encode_batch(batch)?.into_iter().map(|d| d.output).collect())
    }

    /// Final hidden vector at the `[CLS]` position of each document.
    pub fn cls_vectors(&self, batch: &Batch) -> Result<Vec<Vec<F>>> {
        let h = self.config.hidden;
        Ok(self
            .encode_batch(batch)?
            .into_iter()
            .map(|d| d.output[..h].to_vec())
            .collect())
    }

    /// Attention probabilities of layer `layer` (1-based): per document, per head, a
    /// `[T × T]` matrix whose padded key columns are exactly zero.
    pub fn attention_weights(&self, batch: &Batch, layer: usize) -> Result<Vec<Vec<Vec<F>>>> {
        if layer == 0 || layer > self.config.layers {
            return Err(ModelError::BadBatch(format!("no layer {layer}")));
        }
        let t = batch.width();
        Ok(self
            .encode_batch(batch)?
            .into_iter()
            .map(|mut d| {
                let probs = std::mem::take(&mut d.layers[layer - 1].probs);
                probs.chunks(t * t).map(<[F]>::to_vec).collect()
            })
            .collect())
    }

    /// Masked-language-model loss over the positions in `targets` (one map per document).
    pub fn forward_mlm(
        &self,
        batch: &Batch,
        targets: &[MaskTargets],
        tape: Option<&mut Tape<F>>,
    ) -> Result<MlmOutput<F>> {
        if targets.len() != batch.len() {
            return Err(ModelError::BadBatch(format!(
                "{} target maps for {} documents",
                targets.len(),
                batch.len()
            )));
        }
        for (tg, &len) in targets.iter().zip(&batch.lengths) {
            for (&pos, &id) in tg {
                if pos >= len || id as usize >= self.config.vocab_size {
                    return Err(ModelError::BadBatch(format!(
                        "mask target {id} at position {pos} is out of range"
                    )));
                }
            }
        }
        let docs = self.encode_batch(batch)?;
        let h = self.config.hidden;
        let vsz = self.config.vocab_size;
        let positions: Vec<Vec<usize>> = targets.iter().map(|t| t.keys().copied().collect()).collect();
        let gold: Vec<u32> = targets.iter().flat_map(|t| t.values().copied()).collect();
        let m = gold.len();
        let mut x = Vec::with_capacity(m * h);
        for (d, pos) in docs.iter().zip(&positions) {
            for &p in pos {
                x.extend_from_slice(&d.output[p * h..(p + 1) * h]);
            }
        }
        let head = &self.mlm;
        let t = linear(&x, &head.transform_w.data, &head.transform_b.data, m, h, h);
        let u: Vec<F> = t.iter().map(|&v| gelu(v)).collect();
        let (z, ln) = layer_norm(&u, &head.ln_gain.data, &head.ln_shift.data);
        let logits = linear(&z, &head.decoder_w.data, &head.decoder_b.data, m, h, vsz);
        let mut loss = F::zero();
        let mut dlogits = vec![F::zero(); m * vsz];
        let inv_m = if m > 0 { F::one() / F::from_usize(m).unwrap() } else { F::zero() };
        for (r, &g) in gold.iter().enumerate() {
            let row = &logits[r * vsz..(r + 1) * vsz];
            let max = row.iter().fold(F::neg_infinity(), |a, &b| a.max(b));
            let sum = row.iter().fold(F::zero(), |a, &b| a + (b - max).exp());
            let lse = max + sum.ln();
            loss = loss + (lse - row[g as usize]);
            let drow = &mut dlogits[r * vsz..(r + 1) * vsz];
            for (dv, &lv) in drow.iter_mut().zip(row) {
                *dv = (lv - lse).exp() * inv_m;
            }
            drow[g as usize] = drow[g as usize] - inv_m;
        }
        let loss = loss * inv_m;
        let out_logits = logits.chunks(vsz.max(1)).map(<[F]>::to_vec).collect();
        if let Some(tape) = tape {
            tape.docs = docs;
            tape.head = Some(HeadTrace::Mlm {
                positions,
                x,
                t,
                ln,
                z,
                dlogits,
            });
        }
        Ok(MlmOutput {
            loss,
            masked: m,
            logits: out_logits,
        })
    }

    fn cls_forward(&self, docs: &[DocTrace<F>]) -> (Vec<F>, Vec<F>, Vec<F>) {
        let h = self.config.hidden;
        let nl = self.config.label_count;
        let n = docs.len();
        let mut c = Vec::with_capacity(n * h);
        for d in docs {
            c.extend_from_slice(&d.output[..h]);
        }
        let ClsHead {
            pooler_w,
            pooler_b,
            out_w,
            out_b,
        } = &self.cls;
        let mut p = linear(&c, &pooler_w.data, &pooler_b.data, n, h, h);
        for v in &mut p {
            *v = v.tanh();
        }
        let z = linear(&p, &out_w.data, &out_b.data, n, h, nl);
        (c, p, z)
    }

    /// Label logits for every document.
    pub fn classify_logits(&self, batch: &Batch) -> Result<Vec<Vec<F>>> {
        let docs = self.encode_batch(batch)?;
        let (_, _, z) = self.cls_forward(&docs);
        Ok(z.chunks(self.config.label_count).map(<[F]>::to_vec).collect())
    }

    /// Per-label sigmoid probabilities for every document.
    pub fn predict_proba(&self, batch: &Batch) -> Result<Vec<Vec<F>>> {
        Ok(self
            .classify_logits(batch)?
            .into_iter()
            .map(|row| row.into_iter().map(sigmoid).collect())
            .collect())
    }

    /// Multi-label loss; `gold` holds the label indices of each document.
    pub fn forward_classify(
        &self,
        batch: &Batch,
        gold: &[Vec<usize>],
        tape: Option<&mut Tape<F>>,
    ) -> Result<ClassifyOutput<F>> {
        let nl = self.config.label_count;
        if gold.len() != batch.len() {
            return Err(ModelError::BadBatch(format!(
                "{} label sets for {} documents",
                gold.len(),
                batch.len()
            )));
        }
        if let Some(&bad) = gold.iter().flatten().find(|&&j| j >= nl) {
            return Err(ModelError::BadBatch(format!("label index {bad} outside {nl} labels")));
        }
        let docs = self.encode_batch(batch)?;
        let (c, p, z) = self.cls_forward(&docs);
        let n = docs.len();
        let inv_n = F::one() / F::from_usize(n).unwrap();
        let mut loss = F::zero();
        let mut dlogits = vec![F::zero(); n * nl];
        for (r, labels) in gold.iter().enumerate() {
            let mut y = vec![F::zero(); nl];
            for &j in labels {
                y[j] = F::one();
            }
            for j in 0..nl {
                let zv = z[r * nl + j];
                loss = loss + bce_with_logits(zv, y[j]);
                dlogits[r * nl + j] = (sigmoid(zv) - y[j]) * inv_n;
            }
        }
        let logits = z.chunks(nl).map(<[F]>::to_vec).collect();
        if let Some(tape) = tape {
            tape.docs = docs;
            tape.head = Some(HeadTrace::Cls { c, p, dlogits });
        }
        Ok(ClassifyOutput {
            loss: loss * inv_n,
            logits,
        })
    }

    /// Gradients of the loss cached in `tape` with respect to the groups in `trainable`.
    /// The tape is consumed. Propagation stops below the lowest trainable encoder group.
    pub fn backward(&self, tape: &mut Tape<F>, trainable: &TrainableSet) -> Result<GradientSet<F>> {
        let head = tape.head.take().ok_or(ModelError::NoCachedForward)?;
        let docs = std::mem::take(&mut tape.docs);
        for g in trainable {
            if !self.has_group(*g) {
                return Err(ModelError::BadBatch(format!("model has no group {g}")));
            }
        }
        let mut grads = GradientSet::zeros_for(self, trainable);
        let h = self.config.hidden;
        let lowest = trainable.iter().filter_map(|g| g.depth()).min();

        // Gradient w.r.t. each document's final hidden states, only the rows that feed the head.
        let mut d_out: Vec<Vec<(usize, Vec<F>)>> = vec![Vec::new(); docs.len()];
        match head {
            HeadTrace::Cls { c, p, dlogits } => {
                let n = docs.len();
                let nl = self.config.label_count;
                let cls = &self.cls;
                if let Some(gc) = grads.cls.as_mut() {
                    matmul_tn_acc(&p, &dlogits, n, h, nl, &mut gc.out_w.data);
                    col_sum_acc(&dlogits, &mut gc.out_b.data);
                }
                let mut dp = matmul_nt(&dlogits, &cls.out_w.data, n, nl, h);
                for (d, &pv) in dp.iter_mut().zip(&p) {
                    *d = *d * (F::one() - pv * pv);
                }
                if let Some(gc) = grads.cls.as_mut() {
                    matmul_tn_acc(&c, &dp, n, h, h, &mut gc.pooler_w.data);
                    col_sum_acc(&dp, &mut gc.pooler_b.data);
                }
                if lowest.is_some() {
                    let dc = matmul_nt(&dp, &cls.pooler_w.data, n, h, h);
                    for (r, rows) in d_out.iter_mut().enumerate() {
                        rows.push((0, dc[r * h..(r + 1) * h].to_vec()));
                    }
                }
            }
            HeadTrace::Mlm {
                positions,
                x,
                t,
                ln,
                z,
                dlogits,
            } => {
                let m = x.len() / h;
                let vsz = self.config.vocab_size;
                let head = &self.mlm;
                if m > 0 {
                    if let Some(gm) = grads.mlm.as_mut() {
                        matmul_tn_acc(&z, &dlogits, m, h, vsz, &mut gm.decoder_w.data);
                        col_sum_acc(&dlogits, &mut gm.decoder_b.data);
                    }
                    let dz = matmul_nt(&dlogits, &head.decoder_w.data, m, vsz, h);
                    let mut du = layer_norm_backward(
                        &dz,
                        &ln,
                        &head.ln_gain.data,
                        grads
                            .mlm
                            .as_mut()
                            .map(|gm| (gm.ln_gain.data.as_mut_slice(), gm.ln_shift.data.as_mut_slice())),
                    );
                    for (d, &tv) in du.iter_mut().zip(&t) {
                        *d = *d * gelu_grad(tv);
                    }
                    if let Some(gm) = grads.mlm.as_mut() {
                        matmul_tn_acc(&x, &du, m, h, h, &mut gm.transform_w.data);
                        col_sum_acc(&du, &mut gm.transform_b.data);
                    }
                    if lowest.is_some() {
                        let dx = matmul_nt(&du, &head.transform_w.data, m, h, h);
                        let mut r = 0;
                        for (rows, pos) in d_out.iter_mut().zip(&positions) {
                            for &p in pos {
                                rows.push((p, dx[r * h..(r + 1) * h].to_vec()));
                                r += 1;
                            }
                        }
                    }
                }
            }
        }

        let Some(lowest) = lowest else {
            return Ok(grads);
        };
        for (doc, rows) in docs.iter().zip(d_out) {
            let t = doc.ids.len();
            let mut dcur = vec![F::zero(); t * h];
            for (p, g) in rows {
                add_assign(&mut dcur[p * h..(p + 1) * h], &g);
            }
            for li in (1..=self.config.layers).rev() {
                if li < lowest {
                    break;
                }
                let need_input = li > lowest;
                let lg = grads.layers[li - 1].as_mut();
                dcur = self.layer_backward(&self.layers[li - 1], &doc.layers[li - 1], dcur, lg, need_input);
                if !need_input {
                    break;
                }
            }
            if lowest == 0 {
                let ge = grads.emb.as_mut().expect("EMB is trainable");
                let dx = layer_norm_backward(
                    &dcur,
                    &doc.emb_ln,
                    &self.emb.ln_gain.data,
                    Some((ge.ln_gain.data.as_mut_slice(), ge.ln_shift.data.as_mut_slice())),
                );
                for (i, &id) in doc.ids.iter().enumerate() {
                    let row = &dx[i * h..(i + 1) * h];
                    add_assign(&mut ge.token.data[id as usize * h..(id as usize + 1) * h], row);
                    add_assign(&mut ge.position.data[i * h..(i + 1) * h], row);
                }
            }
        }
        Ok(grads)
    }

    /// Backpropagates `dout` through one layer. Returns the input gradient when
    /// `need_input`, otherwise an empty vector.
    fn layer_backward(
        &self,
        l: &EncoderLayer<F>,
        tr: &LayerTrace<F>,
        dout: Vec<F>,
        mut lg: Option<&mut EncoderLayer<F>>,
        need_input: bool,
    ) -> Vec<F> {
        let h = self.config.hidden;
        let ff = self.config.ff_dim;
        let heads = self.config.heads;
        let dh = self.config.head_dim();
        let t = tr.input.len() / h;

        let dr2 = layer_norm_backward(
            &dout,
            &tr.ln2,
            &l.ff_ln_gain.data,
            lg.as_deref_mut()
                .map(|g| (g.ff_ln_gain.data.as_mut_slice(), g.ff_ln_shift.data.as_mut_slice())),
        );
        if let Some(g) = lg.as_deref_mut() {
            matmul_tn_acc(&tr.g, &dr2, t, ff, h, &mut g.ff_out_w.data);
            col_sum_acc(&dr2, &mut g.ff_out_b.data);
        }
        let mut df = matmul_nt(&dr2, &l.ff_out_w.data, t, h, ff);
        for (d, &fv) in df.iter_mut().zip(&tr.f) {
            *d = *d * gelu_grad(fv);
        }
        if let Some(g) = lg.as_deref_mut() {
            matmul_tn_acc(&tr.h1, &df, t, h, ff, &mut g.ff_in_w.data);
            col_sum_acc(&df, &mut g.ff_in_b.data);
        }
        let mut dh1 = matmul_nt(&df, &l.ff_in_w.data, t, ff, h);
        add_assign(&mut dh1, &dr2);

        let dr1 = layer_norm_backward(
            &dh1,
            &tr.ln1,
            &l.attn_ln_gain.data,
            lg.as_deref_mut()
                .map(|g| (g.attn_ln_gain.data.as_mut_slice(), g.attn_ln_shift.data.as_mut_slice())),
        );
        if let Some(g) = lg.as_deref_mut() {
            matmul_tn_acc(&tr.ctx, &dr1, t, h, h, &mut g.attn_out_w.data);
            col_sum_acc(&dr1, &mut g.attn_out_b.data);
        }
        let dctx = matmul_nt(&dr1, &l.attn_out_w.data, t, h, h);

        let scale = F::one() / F::from_usize(dh).unwrap().sqrt();
        let mut dq = vec![F::zero(); t * h];
        let mut dk = vec![F::zero(); t * h];
        let mut dv = vec![F::zero(); t * h];
        let mut dp = vec![F::zero(); t];
        for hd in 0..heads {
            let off = hd * dh;
            for i in 0..t {
                let prow = &tr.probs[(hd * t + i) * t..(hd * t + i + 1) * t];
                let dci = &dctx[i * h + off..i * h + off + dh];
                let mut weighted = F::zero();
                for j in 0..t {
                    let p = prow[j];
                    if p == F::zero() {
                        dp[j] = F::zero();
                        continue;
                    }
                    dp[j] = dot(dci, &tr.v[j * h + off..j * h + off + dh]);
                    weighted = weighted + p * dp[j];
                    for (o, &c) in dv[j * h + off..j * h + off + dh].iter_mut().zip(dci) {
                        *o = *o + p * c;
                    }
                }
                for j in 0..t {
                    let p = prow[j];
                    if p == F::zero() {
                        continue;
                    }
                    let ds = p * (dp[j] - weighted) * scale;
                    for e in 0..dh {
                        dq[i * h + off + e] = dq[i * h + off + e] + ds * tr.k[j * h + off + e];
                        dk[j * h + off + e] = dk[j * h + off + e] + ds * tr.q[i * h + off + e];
                    }
                }
            }
        }
        if let Some(g) = lg {
            matmul_tn_acc(&tr.input, &dq, t, h, h, &mut g.query_w.data);
            col_sum_acc(&dq, &mut g.query_b.data);
            matmul_tn_acc(&tr.input, &dk, t, h, h, &mut g.key_w.data);
            col_sum_acc(&dk, &mut g.key_b.data);
            matmul_tn_acc(&tr.input, &dv, t, h, h, &mut g.value_w.data);
            col_sum_acc(&dv, &mut g.value_b.data);
        }
        if !need_input {
            return Vec::new();
        }
        let mut dinput = dr1;
        add_assign(&mut dinput, &matmul_nt(&dq, &l.query_w.data, t, h, h));
        add_assign(&mut dinput, &matmul_nt(&dk, &l.key_w.data, t, h, h));
        add_assign(&mut dinput, &matmul_nt(&dv, &l.value_w.data, t, h, h));
        dinput
    }
}
