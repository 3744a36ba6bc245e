//! Dense row-major kernels with a fixed summation order.

use super::Scalar;

/// `a[m×k] · b[k×n]`.
pub fn matmul<F: Scalar>(a: &[F], b: &[F], m: usize, k: usize, n: usize) -> Vec<F> {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    let mut out = vec![F::zero(); m * n];
    for i in 0..m {
        let row = &mut out[i * n..(i + 1) * n];
        for p in 0..k {
            let av = a[i * k + p];
            let brow = &b[p * n..(p + 1) * n];
            for (o, &bv) in row.iter_mut().zip(brow) {
                *o = *o + av * bv;
            }
        }
    }
    out
}

/// `a[m×k] · b[n×k]ᵀ`.
pub fn matmul_nt<F: Scalar>(a: &[F], b: &[F], m: usize, k: usize, n: usize) -> Vec<F> {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), n * k);
    let mut out = vec![F::zero(); m * n];
    for i in 0..m {
        let arow = &a[i * k..(i + 1) * k];
        for j in 0..n {
            out[i * n + j] = dot(arow, &b[j * k..(j + 1) * k]);
        }
    }
    out
}

/// `out[k×n] += a[m×k]ᵀ · b[m×n]`.
pub fn matmul_tn_acc<F: Scalar>(a: &[F], b: &[F], m: usize, k: usize, n: usize, out: &mut [F]) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), m * n);
    debug_assert_eq!(out.len(), k * n);
    for i in 0..m {
        let brow = &b[i * n..(i + 1) * n];
        for p in 0..k {
            let av = a[i * k + p];
            if av == F::zero() {
                continue;
            }
            let orow = &mut out[p * n..(p + 1) * n];
            for (o, &bv) in orow.iter_mut().zip(brow) {
                *o = *o + av * bv;
            }
        }
    }
}

pub fn dot<F: Scalar>(a: &[F], b: &[F]) -> F {
    let mut s = F::zero();
    for (&x, &y) in a.iter().zip(b) {
        s = s + x * y;
    }
    s
}

/// Adds `bias[n]` to every row of `x[m×n]`.
pub fn add_bias<F: Scalar>(x: &mut [F], bias: &[F]) {
    let n = bias.len();
    for row in x.chunks_mut(n) {
        for (v, &b) in row.iter_mut().zip(bias) {
            *v = *v + b;
        }
    }
}

/// `out[n] += Σ_rows x[m×n]`.
pub fn col_sum_acc<F: Scalar>(x: &[F], out: &mut [F]) {
    let n = out.len();
    for row in x.chunks(n) {
        for (o, &v) in out.iter_mut().zip(row) {
            *o = *o + v;
        }
    }
}

pub fn add_assign<F: Scalar>(x: &mut [F], y: &[F]) {
    for (a, &b) in x.iter_mut().zip(y) {
        *a = *a + b;
    }
}

/// `x·W + b` for `x[m×in]`, `W[in×out]`.
pub fn linear<F: Scalar>(x: &[F], w: &[F], b: &[F], m: usize, inp: usize, out: usize) -> Vec<F> {
    let mut y = matmul(x, w, m, inp, out);
    add_bias(&mut y, b);
    y
}

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)
const GELU_A: f64 = 0.044_715;

/// Tanh approximation of GELU.
pub fn gelu<F: Scalar>(x: F) -> F {
    let c = F::from_f64(GELU_C).unwrap();
    let a = F::from_f64(GELU_A).unwrap();
    let half = F::from_f64(0.5).unwrap();
    half * x * (F::one() + (c * (x + a * x * x * x)).tanh())
}

pub fn gelu_grad<F: Scalar>(x: F) -> F {
    let c = F::from_f64(GELU_C).unwrap();
    let a = F::from_f64(GELU_A).unwrap();
    let half = F::from_f64(0.5).unwrap();
    let three = F::from_f64(3.0).unwrap();
    let t = (c * (x + a * x * x * x)).tanh();
    half * (F::one() + t) + half * x * (F::one() - t * t) * c * (F::one() + three * a * x * x)
}

pub fn sigmoid<F: Scalar>(z: F) -> F {
    if z >= F::zero() {
        F::one() / (F::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (F::one() + e)
    }
}

/// Binary cross-entropy with logits, stable for large |z|.
pub fn bce_with_logits<F: Scalar>(z: F, y: F) -> F {
    z.max(F::zero()) - z * y + (F::one() + (-z.abs()).exp()).ln()
}

/// Per-row normalisation statistics kept for the backward pass.
#[derive(Clone, Debug)]
pub struct LnTrace<F> {
    pub xhat: Vec<F>,
    pub inv_std: Vec<F>,
}

pub const LN_EPS: f64 = 1e-5;

pub fn layer_norm<F: Scalar>(x: &[F], gain: &[F], shift: &[F]) -> (Vec<F>, LnTrace<F>) {
    let n = gain.len();
    let nf = F::from_usize(n).unwrap();
    let eps = F::from_f64(LN_EPS).unwrap();
    let rows = x.len() / n;
    let mut y = vec![F::zero(); x.len()];
    let mut xhat = vec![F::zero(); x.len()];
    let mut inv_std = vec![F::zero(); rows];
    for r in 0..rows {
        let row = &x[r * n..(r + 1) * n];
        let mean = row.iter().fold(F::zero(), |s, &v| s + v) / nf;
        let var = row.iter().fold(F::zero(), |s, &v| s + (v - mean) * (v - mean)) / nf;
        let is = F::one() / (var + eps).sqrt();
        inv_std[r] = is;
        for j in 0..n {
            let h = (row[j] - mean) * is;
            xhat[r * n + j] = h;
            y[r * n + j] = gain[j] * h + shift[j];
        }
    }
    (y, LnTrace { xhat, inv_std })
}

/// Returns `dx`; accumulates parameter gradients when `param_grads` is given.
pub fn layer_norm_backward<F: Scalar>(
    dy: &[F],
    trace: &LnTrace<F>,
    gain: &[F],
    param_grads: Option<(&mut [F], &mut [F])>,
) -> Vec<F> {
    let n = gain.len();
    let nf = F::from_usize(n).unwrap();
    let rows = dy.len() / n;
    if let Some((dgain, dshift)) = param_grads {
        for r in 0..rows {
            for j in 0..n {
                let g = dy[r * n + j];
                dgain[j] = dgain[j] + g * trace.xhat[r * n + j];
                dshift[j] = dshift[j] + g;
            }
        }
    }
    let mut dx = vec![F::zero(); dy.len()];
    for r in 0..rows {
        let xh = &trace.xhat[r * n..(r + 1) * n];
        let mut sum = F::zero();
        let mut sum_xh = F::zero();
        for j in 0..n {
            let d = dy[r * n + j] * gain[j];
            sum = sum + d;
            sum_xh = sum_xh + d * xh[j];
        }
        let scale = trace.inv_std[r] / nf;
        for j in 0..n {
            let d = dy[r * n + j] * gain[j];
            dx[r * n + j] = scale * (nf * d - sum - xh[j] * sum_xh);
        }
    }
    dx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matmul_variants_agree() {
        let a: Vec<f64> = (0..6).map(|x| x as f64).collect(); // 2×3
        let b: Vec<f64> = (0..12).map(|x| (x as f64) * 0.5).collect(); // 3×4
        let c = matmul(&a, &b, 2, 3, 4);
        assert_eq!(c, vec![10.0, 11.5, 13.0, 14.5, 28.0, 34.0, 40.0, 46.0]);
        // bᵀ is 4×3; a·(bᵀ)ᵀ == a·b
        let mut bt = vec![0.0; 12];
        for i in 0..3 {
            for j in 0..4 {
                bt[j * 3 + i] = b[i * 4 + j];
            }
        }
        assert_eq!(matmul_nt(&a, &bt, 2, 3, 4), c);
        // aᵀ·c with a 2×3, c 2×4 -> 3×4
        let mut out = vec![0.0; 12];
        matmul_tn_acc(&a, &c, 2, 3, 4, &mut out);
        let mut at = vec![0.0; 6];
        for i in 0..2 {
            for j in 0..3 {
                at[j * 2 + i] = a[i * 3 + j];
            }
        }
        assert_eq!(out, matmul(&at, &c, 3, 2, 4));
    }

    #[test]
    fn gelu_grad_matches_difference() {
        for &x in &[-3.0f64, -0.7, 0.0, 0.4, 2.5] {
            let h = 1e-6;
            let fd = (gelu(x + h) - gelu(x - h)) / (2.0 * h);
            assert!((fd - gelu_grad(x)).abs() < 1e-8);
        }
    }

    #[test]
    fn bce_is_stable() {
        assert!((bce_with_logits(0.0f64, 1.0) - std::f64::consts::LN_2).abs() < 1e-12);
        assert!(bce_with_logits(1000.0f64, 1.0) < 1e-12);
        assert!((bce_with_logits(-1000.0f64, 1.0) - 1000.0).abs() < 1e-9);
        assert!(sigmoid(-1000.0f64) >= 0.0 && sigmoid(1000.0f64) <= 1.0);
    }

    #[test]
    fn layer_norm_rows_are_standardised() {
        let x = vec![1.0f64, 2.0, 3.0, 4.0, -1.0, 0.0, 5.0, 2.0];
        let (y, _) = layer_norm(&x, &[1.0; 4], &[0.0; 4]);
        for row in y.chunks(4) {
            let mean: f64 = row.iter().sum::<f64>() / 4.0;
            let var: f64 = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 4.0;
            assert!(mean.abs() < 1e-12);
            assert!((var - 1.0).abs() < 1e-4);
        }
    }
}
