//! Analytic gradients of every differentiable op against `f64` central
//! differences of the scalar oracles in the parent module.

use mguard_core::model::{Discriminator, Generator};
use mguard_core::nn::activation::{sigmoid, sigmoid_grad_from_output, tanh, tanh_grad_from_output};
use mguard_core::nn::gradcheck::GradCheck;
use mguard_core::nn::loss::{bce_loss, bce_with_logits, l1_loss};
use mguard_core::nn::{BackwardOptions, Dense, LstmParams, Rng, SeqInput, Tensor};

use super::*;

pub const REL: f64 = 1e-3;
pub const FLOOR: f64 = 1e-5;
const STEP: f64 = 1e-3;

fn fd(params: &[Vec<f64>], which: usize, f: &dyn Fn(&[Vec<f64>]) -> f64) -> Vec<f64> {
    fd_tensor(params, which, STEP, f)
}

pub fn lstm_layer() -> GradCheck {
    let mut rng = Rng::new(21);
    let (steps, n_in, h) = (3, 2, 4);
    let p = LstmParams::init(n_in, h, &mut rng);
    let x = rng.uniform(-1.0, 1.0, &[steps, n_in]);
    let h0 = rng.uniform(-0.5, 0.5, &[h]);
    let c0 = rng.uniform(-0.5, 0.5, &[h]);
    let weights = rng.uniform(-1.0, 1.0, &[steps, h]);

    let (_, cache) = p.forward(&x, &h0, &c0).unwrap();
    let (grads, gx, gh0, gc0) = p.backward(&cache, &weights).unwrap();

    let cw = to64(weights.data());
    let loss = |v: &[Vec<f64>]| -> f64 {
        let hs = lstm_ref(&v[0], &v[1], &v[2], &v[3], n_in, h, &v[4], &v[5]);
        hs.iter().zip(&cw).map(|(a, b)| a * b).sum()
    };
    let base = vec![
        to64(p.w.data()),
        to64(p.u.data()),
        to64(p.b.data()),
        to64(x.data()),
        to64(h0.data()),
        to64(c0.data()),
    ];
    let mut report = GradCheck::default();
    for (i, (name, an)) in [
        ("w", grads.w.data()),
        ("u", grads.u.data()),
        ("b", grads.b.data()),
        ("x", gx.data()),
        ("h0", gh0.data()),
        ("c0", gc0.data()),
    ]
    .into_iter()
    .enumerate()
    {
        report.compare(name, an, &fd(&base, i, &loss));
    }
    report
}

pub fn lstm_stacked() -> GradCheck {
    let mut rng = Rng::new(22);
    let (steps, n_in, h1, h2) = (4, 3, 5, 4);
    let l1 = LstmParams::init(n_in, h1, &mut rng);
    let l2 = LstmParams::init(h1, h2, &mut rng);
    let x = rng.uniform(-1.0, 1.0, &[steps * n_in]);

    let c1 = l1.forward_batch(SeqInput::PerStep(x.data()), steps, 1, None, None).unwrap();
    let c2 = l2.forward_batch(SeqInput::PerStep(c1.hidden_seq()), steps, 1, None, None).unwrap();
    let ones = vec![1.0f32; steps * h2];
    let b2 = l2.backward_batch(&c2, &ones, BackwardOptions::ALL).unwrap();
    let b1 = l1.backward_batch(&c1, &b2.grad_input, BackwardOptions::ALL).unwrap();
    let (g1, g2) = (b1.grads.unwrap(), b2.grads.unwrap());

    let loss = |v: &[Vec<f64>]| -> f64 {
        let z1 = vec![0.0; h1];
        let z2 = vec![0.0; h2];
        let hs1 = lstm_ref(&v[0], &v[1], &v[2], &v[6], n_in, h1, &z1, &z1);
        lstm_ref(&v[3], &v[4], &v[5], &hs1, h1, h2, &z2, &z2).iter().sum()
    };
    let base = vec![
        to64(l1.w.data()),
        to64(l1.u.data()),
        to64(l1.b.data()),
        to64(l2.w.data()),
        to64(l2.u.data()),
        to64(l2.b.data()),
        to64(x.data()),
    ];
    let mut report = GradCheck::default();
    let analytic: [(&str, &[f32]); 7] = [
        ("l1.w", g1.w.data()),
        ("l1.u", g1.u.data()),
        ("l1.b", g1.b.data()),
        ("l2.w", g2.w.data()),
        ("l2.u", g2.u.data()),
        ("l2.b", g2.b.data()),
        ("x", &b1.grad_input),
    ];
    for (i, (name, an)) in analytic.iter().enumerate() {
        report.compare(name, an, &fd(&base, i, &loss));
    }
    report
}

pub fn dense() -> GradCheck {
    let mut rng = Rng::new(26);
    let (rows, n_in, n_out) = (3, 4, 3);
    let layer = Dense::init(n_in, n_out, &mut rng);
    let x = rng.uniform(-1.0, 1.0, &[rows, n_in]);
    let weights = rng.uniform(-1.0, 1.0, &[rows, n_out]);
    let (grads, gx) = layer.backward_rows(x.data(), weights.data(), rows, true);
    let grads = grads.unwrap();

    let cw = to64(weights.data());
    let loss = |v: &[Vec<f64>]| -> f64 {
        dense_ref(&v[0], &v[1], &v[2], n_in, n_out)
            .iter()
            .zip(&cw)
            .map(|(a, b)| a * b)
            .sum()
    };
    let base = vec![to64(layer.w.data()), to64(layer.b.data()), to64(x.data())];
    let mut report = GradCheck::default();
    for (i, (name, an)) in [("w", grads.w.data()), ("b", grads.b.data()), ("x", &gx[..])]
        .into_iter()
        .enumerate()
    {
        report.compare(name, an, &fd(&base, i, &loss));
    }
    report
}

pub fn activations() -> GradCheck {
    let xs: Vec<f64> = (0..41).map(|i| -6.0 + 0.3 * i as f64).collect();
    let sig_an: Vec<f32> = xs.iter().map(|&x| sigmoid_grad_from_output(sigmoid(x as f32))).collect();
    let tanh_an: Vec<f32> = xs.iter().map(|&x| tanh_grad_from_output(tanh(x as f32))).collect();
    let sig_fd: Vec<f64> = xs.iter().map(|&x| (sig(x + STEP) - sig(x - STEP)) / (2.0 * STEP)).collect();
    let tanh_fd: Vec<f64> = xs
        .iter()
        .map(|&x| ((x + STEP).tanh() - (x - STEP).tanh()) / (2.0 * STEP))
        .collect();
    let mut report = GradCheck::default();
    report.compare("sigmoid", &sig_an, &sig_fd);
    report.compare("tanh", &tanh_an, &tanh_fd);
    report
}

pub fn bce() -> GradCheck {
    let mut rng = Rng::new(27);
    let n = 8;
    let p = rng.uniform(0.05, 0.95, &[n]);
    let logits = rng.uniform(-4.0, 4.0, &[n]);
    let targets: Vec<f32> = (0..n).map(|i| (i % 2) as f32).collect();
    let t64 = to64(&targets);

    let (_, g_prob) = bce_loss(p.data(), &targets).unwrap();
    let (_, g_logit, _) = bce_with_logits(logits.data(), &targets).unwrap();

    let mean = |v: &[f64], f: &dyn Fn(f64) -> f64| -> f64 {
        v.iter().zip(&t64).map(|(&x, &t)| bce_ref(f(x), t)).sum::<f64>() / v.len() as f64
    };
    let mut report = GradCheck::default();
    report.compare(
        "bce(p)",
        &g_prob,
        &fd(&[to64(p.data())], 0, &|v| mean(&v[0], &|x| x)),
    );
    report.compare(
        "bce(logit)",
        &g_logit,
        &fd(&[to64(logits.data())], 0, &|v| mean(&v[0], &sig)),
    );
    report
}

pub fn l1() -> GradCheck {
    let mut rng = Rng::new(28);
    let a = rng.uniform(-1.0, 1.0, &[16]);
    // keep every pair well away from the kink
    let b: Vec<f32> = a
        .data()
        .iter()
        .enumerate()
        .map(|(i, v)| v + if i % 2 == 0 { 0.3 } else { -0.3 })
        .collect();
    let (_, g) = l1_loss(a.data(), &b).unwrap();
    let b64 = to64(&b);
    let loss = |v: &[Vec<f64>]| -> f64 { v[0].iter().zip(&b64).map(|(x, y)| (x - y).abs()).sum() };
    let mut report = GradCheck::default();
    report.compare("l1(a)", &g, &fd(&[to64(a.data())], 0, &loss));
    report
}

pub struct Tiny {
    pub gen: Generator,
    pub disc: Discriminator,
    pub z: Tensor,
}

pub const LATENT: usize = 4;
pub const WINDOW: usize = 6;
pub const GEN_HIDDEN: [usize; 3] = [3, 4, 5];
pub const DISC_HIDDEN: usize = 4;

pub fn tiny(seed: u64) -> Tiny {
    let mut rng = Rng::new(seed);
    let gen = Generator::init(LATENT, &GEN_HIDDEN, WINDOW, &mut rng);
    let disc = Discriminator::init(DISC_HIDDEN, &mut rng);
    let z = rng.gaussian(0.0, 0.5, &[LATENT]);
    Tiny { gen, disc, z }
}

fn params64(ts: Vec<&Tensor>) -> Vec<Vec<f64>> {
    ts.into_iter().map(|t| to64(t.data())).collect()
}

/// BCE(D(G(z)), target) with gradients w.r.t. every G and D parameter and z.
pub fn composite(target: f32) -> GradCheck {
    let t = tiny(23);
    let gcache = t.gen.forward_batch(t.z.data(), 1).unwrap();
    let fake = gcache.windows();
    let dcache = t.disc.forward_batch(&fake, WINDOW, 1).unwrap();
    let p = dcache.probabilities()[0];
    let dlogit = [p - target];
    let (dgrads, gx) = t
        .disc
        .backward_batch(&dcache, &dlogit, None, BackwardOptions::ALL)
        .unwrap();
    let (ggrads, gz) = t.gen.backward_batch(&gcache, &gx, true).unwrap();
    let (dgrads, ggrads) = (dgrads.unwrap(), ggrads.unwrap());

    let n_gen = t.gen.params().len();
    let mut base = params64(t.gen.params());
    base.extend(params64(t.disc.params()));
    base.push(to64(t.z.data()));
    let target = target as f64;
    let loss = move |v: &[Vec<f64>]| -> f64 {
        let x = gen_ref(&v[..n_gen], LATENT, &GEN_HIDDEN, WINDOW, &v[v.len() - 1]);
        let (logit, _) = disc_ref(&v[n_gen..n_gen + 5], DISC_HIDDEN, &x);
        bce_ref(sig(logit), target)
    };
    let mut names = t.gen.param_names();
    names.extend(t.disc.param_names());
    names.push("z".into());
    let mut analytic: Vec<&[f32]> = ggrads.tensors().iter().map(|t| t.data()).collect();
    analytic.extend(dgrads.tensors().iter().map(|t| t.data()));
    analytic.push(&gz);
    let mut report = GradCheck::default();
    for (i, an) in analytic.iter().enumerate() {
        report.compare(&names[i], an, &fd(&base, i, &loss));
    }
    report
}

/// Gradient of the inversion objective `(1-λ)|x - G(z)| + λ|f(x) - f(G(z))|`
/// with respect to z.
pub fn inversion_objective() -> GradCheck {
    let t = tiny(24);
    let lambda = 0.1f64;
    let mut rng = Rng::new(25);
    let x = rng.uniform(-0.8, 0.8, &[WINDOW]);
    let (_, fx) = t.disc.discriminate(&x).unwrap();

    let gcache = t.gen.forward_batch(t.z.data(), 1).unwrap();
    let gz_out = gcache.windows();
    let dcache = t.disc.forward_batch(&gz_out, WINDOW, 1).unwrap();
    // time-major features for batch 1 coincide with [T, H]
    let d_feat: Vec<f32> = dcache
        .features()
        .iter()
        .zip(fx.data())
        .map(|(a, b)| (lambda as f32) * (a - b).signum() * ((a - b) != 0.0) as u8 as f32)
        .collect();
    let (_, gx_feat) = t
        .disc
        .backward_batch(
            &dcache,
            &[0.0],
            Some(&d_feat),
            BackwardOptions {
                param_grads: false,
                input_grads: true,
            },
        )
        .unwrap();
    let d_out: Vec<f32> = gz_out
        .iter()
        .zip(x.data())
        .zip(&gx_feat)
        .map(|((g, xv), f)| (1.0 - lambda as f32) * (g - xv).signum() + f)
        .collect();
    let (_, gz) = t.gen.backward_batch(&gcache, &d_out, false).unwrap();

    let gp = params64(t.gen.params());
    let dp = params64(t.disc.params());
    let x64 = to64(x.data());
    let fx64 = to64(fx.data());
    let objective = |v: &[Vec<f64>]| -> f64 {
        let g = gen_ref(&gp, LATENT, &GEN_HIDDEN, WINDOW, &v[0]);
        let (_, fg) = disc_ref(&dp, DISC_HIDDEN, &g);
        let r: f64 = g.iter().zip(&x64).map(|(a, b)| (a - b).abs()).sum();
        let f: f64 = fg.iter().zip(&fx64).map(|(a, b)| (a - b).abs()).sum();
        (1.0 - lambda) * r + lambda * f
    };
    let mut report = GradCheck::default();
    report.compare("z", &gz, &fd_tensor(&[to64(t.z.data())], 0, 1e-6, &objective));
    report
}

/// Every check, labelled.
pub fn all() -> Vec<(&'static str, GradCheck)> {
    vec![
        ("lstm layer", lstm_layer()),
        ("stacked lstm", lstm_stacked()),
        ("dense", dense()),
        ("sigmoid/tanh", activations()),
        ("bce", bce()),
        ("l1", l1()),
        ("G/D composite, target 0", composite(0.0)),
        ("G/D composite, target 1", composite(1.0)),
        ("inversion objective", inversion_objective()),
    ]
}
