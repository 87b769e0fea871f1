//! Elementwise hot loops, compiled twice: once for the baseline target and
//! once with AVX2 enabled, picked at runtime. Both builds perform the same
//! IEEE operations in the same order (no FMA contraction), so they produce
//! identical bits.

macro_rules! dispatch {
    ($(#[$m:meta])* pub fn $name:ident($($arg:ident: $ty:ty),* $(,)?) $body:block) => {
        $(#[$m])*
        pub fn $name($($arg: $ty),*) {
            #[cfg(target_arch = "x86_64")]
            {
                if std::is_x86_feature_detected!("avx2") {
                    #[target_feature(enable = "avx2")]
                    unsafe fn wide($($arg: $ty),*) $body
                    // SAFETY: AVX2 support was just detected.
                    return unsafe { wide($($arg),*) };
                }
            }
            #[allow(unreachable_code)]
            {
                fn narrow($($arg: $ty),*) $body
                narrow($($arg),*)
            }
        }
    };
}

/// `exp(x)` with ~1e-7 relative error, branch-free so it vectorizes.
/// Inputs are clamped to `[-87, 88]`; NaN passes through.
#[inline(always)]
pub fn fast_exp(input: f32) -> f32 {
    const MAGIC: f32 = 12_582_912.0; // 1.5 * 2^23
    let x = input.max(-87.0).min(88.0);
    let shifted = x * std::f32::consts::LOG2_E + MAGIC;
    let n = shifted.to_bits().wrapping_sub(MAGIC.to_bits());
    let fx = shifted - MAGIC;
    let r = x - fx * 0.693_359_4 + fx * 2.121_944_4e-4;
    let mut y = 1.987_569_1e-4f32;
    y = y * r + 1.398_199_9e-3;
    y = y * r + 8.333_452e-3;
    y = y * r + 4.166_579_6e-2;
    y = y * r + 1.666_666_5e-1;
    y = y * r + 5.000_000_1e-1;
    y = y * r * r + r + 1.0;
    let out = y * f32::from_bits(n.wrapping_add(127) << 23);
    if input.is_nan() {
        input
    } else {
        out
    }
}

#[inline(always)]
pub fn sigmoid(x: f32) -> f32 {
    1.0 / (1.0 + fast_exp(-x))
}

#[inline(always)]
pub fn tanh(x: f32) -> f32 {
    2.0 / (1.0 + fast_exp(-2.0 * x)) - 1.0
}

dispatch! {
    pub fn sigmoid_slice(xs: &mut [f32]) {
        for v in xs.iter_mut() {
            *v = sigmoid(*v);
        }
    }
}

dispatch! {
    pub fn tanh_slice(xs: &mut [f32]) {
        for v in xs.iter_mut() {
            *v = tanh(*v);
        }
    }
}

dispatch! {
    /// Activates one row of gate pre-activations in place and advances the
    /// cell: `gates` is `[i | f | g | o]`, each `h` wide.
    pub fn lstm_cell_forward(
        gates: &mut [f32],
        c_prev: &[f32],
        c_next: &mut [f32],
        tanh_c: &mut [f32],
        h_next: &mut [f32],
    ) {
        let h = c_prev.len();
        let (ifg, o) = gates.split_at_mut(3 * h);
        let (i_f, g) = ifg.split_at_mut(2 * h);
        for v in i_f.iter_mut() {
            *v = sigmoid(*v);
        }
        for v in g.iter_mut() {
            *v = tanh(*v);
        }
        for v in o.iter_mut() {
            *v = sigmoid(*v);
        }
        let (i, f) = i_f.split_at(h);
        for j in 0..h {
            c_next[j] = f[j] * c_prev[j] + i[j] * g[j];
        }
        for j in 0..h {
            let t = tanh(c_next[j]);
            tanh_c[j] = t;
            h_next[j] = o[j] * t;
        }
    }
}

dispatch! {
    /// Gate-gradient step for one row. `dh` is the total gradient reaching
    /// `h_t`; `dc` carries `dL/dc_t` from later steps in and `dL/dc_{t-1}` out.
    pub fn lstm_cell_backward(
        gates: &[f32],
        c_prev: &[f32],
        tanh_c: &[f32],
        dh: &[f32],
        dc: &mut [f32],
        d_pre: &mut [f32],
    ) {
        let h = c_prev.len();
        let (i, rest) = gates.split_at(h);
        let (f, rest) = rest.split_at(h);
        let (g, o) = rest.split_at(h);
        let (di, rest) = d_pre.split_at_mut(h);
        let (df, rest) = rest.split_at_mut(h);
        let (dg, d_o) = rest.split_at_mut(h);
        for j in 0..h {
            let t = tanh_c[j];
            let dcj = dc[j] + dh[j] * o[j] * (1.0 - t * t);
            di[j] = dcj * g[j] * i[j] * (1.0 - i[j]);
            df[j] = dcj * c_prev[j] * f[j] * (1.0 - f[j]);
            dg[j] = dcj * i[j] * (1.0 - g[j] * g[j]);
            d_o[j] = dh[j] * t * o[j] * (1.0 - o[j]);
            dc[j] = dcj * f[j];
        }
    }
}
