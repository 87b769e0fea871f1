//! Scalar `f64` reference implementations used as independent oracles.
//! Nothing here calls into the library's numeric kernels.
#![allow(dead_code)]

pub mod grad_suite;

pub fn sig(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

/// One LSTM layer over one sequence. `x` is `[T, n_in]`; returns `[T, h]`.
pub fn lstm_ref(
    w: &[f64],
    u: &[f64],
    b: &[f64],
    x: &[f64],
    n_in: usize,
    h: usize,
    h0: &[f64],
    c0: &[f64],
) -> Vec<f64> {
    let steps = x.len() / n_in;
    let mut hp = h0.to_vec();
    let mut cp = c0.to_vec();
    let mut out = Vec::with_capacity(steps * h);
    for t in 0..steps {
        let xt = &x[t * n_in..(t + 1) * n_in];
        let mut a = vec![0.0; 4 * h];
        for (r, ar) in a.iter_mut().enumerate() {
            let mut acc = b[r];
            for k in 0..n_in {
                acc += w[r * n_in + k] * xt[k];
            }
            for k in 0..h {
                acc += u[r * h + k] * hp[k];
            }
            *ar = acc;
        }
        for j in 0..h {
            let i = sig(a[j]);
            let f = sig(a[h + j]);
            let g = a[2 * h + j].tanh();
            let o = sig(a[3 * h + j]);
            cp[j] = f * cp[j] + i * g;
            hp[j] = o * cp[j].tanh();
        }
        out.extend_from_slice(&hp);
    }
    out
}

/// Generator parameters in the library's order:
/// `[lstm0.w, lstm0.u, lstm0.b, ..., out.w, out.b]`.
pub fn gen_ref(params: &[Vec<f64>], latent: usize, hidden: &[usize], steps: usize, z: &[f64]) -> Vec<f64> {
    let mut x: Vec<f64> = (0..steps).flat_map(|_| z.iter().copied()).collect();
    let mut n_in = latent;
    for (l, &h) in hidden.iter().enumerate() {
        let zeros = vec![0.0; h];
        x = lstm_ref(&params[3 * l], &params[3 * l + 1], &params[3 * l + 2], &x, n_in, h, &zeros, &zeros);
        n_in = h;
    }
    let ow = &params[3 * hidden.len()];
    let ob = params[3 * hidden.len() + 1][0];
    (0..steps)
        .map(|t| {
            let ht = &x[t * n_in..(t + 1) * n_in];
            (ob + ht.iter().zip(ow).map(|(a, b)| a * b).sum::<f64>()).tanh()
        })
        .collect()
}

/// Discriminator parameters `[lstm.w, lstm.u, lstm.b, out.w, out.b]`.
/// Returns `(logit, features [T, h])`.
pub fn disc_ref(params: &[Vec<f64>], hidden: usize, x: &[f64]) -> (f64, Vec<f64>) {
    let zeros = vec![0.0; hidden];
    let feats = lstm_ref(&params[0], &params[1], &params[2], x, 1, hidden, &zeros, &zeros);
    let steps = x.len();
    let last = &feats[(steps - 1) * hidden..];
    let logit = params[4][0] + last.iter().zip(&params[3]).map(|(a, b)| a * b).sum::<f64>();
    (logit, feats)
}

/// Dense layer over stacked rows: `w` is `[out, in]`, `x` is `[rows, in]`.
pub fn dense_ref(w: &[f64], b: &[f64], x: &[f64], n_in: usize, n_out: usize) -> Vec<f64> {
    x.chunks(n_in)
        .flat_map(|row| (0..n_out).map(move |o| b[o] + (0..n_in).map(|k| w[o * n_in + k] * row[k]).sum::<f64>()))
        .collect()
}

pub fn bce_ref(p: f64, target: f64) -> f64 {
    let p = p.clamp(1e-7, 1.0 - 1e-7);
    -(target * p.ln() + (1.0 - target) * (1.0 - p).ln())
}

pub fn to64(xs: &[f32]) -> Vec<f64> {
    xs.iter().map(|&v| v as f64).collect()
}

/// Finite-difference gradient of `f` with respect to tensor `which` of `params`.
pub fn fd_tensor(
    params: &[Vec<f64>],
    which: usize,
    step: f64,
    f: &dyn Fn(&[Vec<f64>]) -> f64,
) -> Vec<f64> {
    let mut p = params.to_vec();
    (0..params[which].len())
        .map(|i| {
            let orig = p[which][i];
            p[which][i] = orig + step;
            let up = f(&p);
            p[which][i] = orig - step;
            let down = f(&p);
            p[which][i] = orig;
            (up - down) / (2.0 * step)
        })
        .collect()
}

/// Pass when each entry's relative error is within `rel` or its absolute
/// error within `abs_floor`; returns the worst relative error among entries
/// outside the floor.
pub fn worst_rel(analytic: &[f32], numeric: &[f64], abs_floor: f64) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    analytic
        .iter()
        .zip(numeric)
        .filter_map(|(&a, &n)| {
            let a = a as f64;
            let abs = (a - n).abs();
            (abs > abs_floor).then(|| abs / a.abs().max(n.abs()))
        })
        .fold(0.0, f64::max)
}
