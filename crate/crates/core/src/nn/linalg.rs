//! Thin wrapper over `matrixmultiply::sgemm` for row-major slices.
//!
//! Every output element is accumulated over `k` in the same order regardless
//! of `m`, so a row of the result does not depend on which other rows were
//! computed in the same call.

/// `c[m,n] = op(a)[m,k] * op(b)[k,n] + beta * c`.
///
/// `a` is stored row-major as `[m,k]` (or `[k,m]` when `trans_a`), likewise
/// `b` as `[k,n]` (or `[n,k]` when `trans_b`).
#[allow(clippy::too_many_arguments)]
pub fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f32],
    trans_a: bool,
    b: &[f32],
    trans_b: bool,
    beta: f32,
    c: &mut [f32],
) {
    assert!(a.len() >= m * k, "gemm: lhs too short");
    assert!(b.len() >= k * n, "gemm: rhs too short");
    assert!(c.len() >= m * n, "gemm: output too short");
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        if beta == 0.0 {
            c[..m * n].iter_mut().for_each(|v| *v = 0.0);
        } else {
            c[..m * n].iter_mut().for_each(|v| *v *= beta);
        }
        return;
    }
    let (rsa, csa) = if trans_a { (1, m as isize) } else { (k as isize, 1) };
    let (rsb, csb) = if trans_b { (1, k as isize) } else { (n as isize, 1) };
    // SAFETY: the asserts above guarantee every strided access stays inside
    // the three slices, and `c` does not alias `a` or `b` (distinct borrows).
    unsafe {
        matrixmultiply::sgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// Adds the column sums of the row-major `[rows, cols]` matrix `m` into `out`.
pub fn add_column_sums(m: &[f32], rows: usize, cols: usize, out: &mut [f32]) {
    for r in 0..rows {
        let row = &m[r * cols..(r + 1) * cols];
        out.iter_mut().zip(row).for_each(|(o, v)| *o += v);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(m: usize, k: usize, n: usize, a: &[f32], ta: bool, b: &[f32], tb: bool) -> Vec<f64> {
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                let mut acc = 0.0f64;
                for l in 0..k {
                    let av = if ta { a[l * m + i] } else { a[i * k + l] };
                    let bv = if tb { b[j * k + l] } else { b[l * n + j] };
                    acc += av as f64 * bv as f64;
                }
                out[i * n + j] = acc;
            }
        }
        out
    }

    #[test]
    fn matches_naive_for_all_transpose_combinations() {
        let (m, k, n) = (5, 7, 3);
        let a: Vec<f32> = (0..m * k).map(|i| (i as f32 * 0.37).sin()).collect();
        let b: Vec<f32> = (0..k * n).map(|i| (i as f32 * 0.11).cos()).collect();
        for &ta in &[false, true] {
            for &tb in &[false, true] {
                let mut c = vec![0.0f32; m * n];
                gemm(m, k, n, &a, ta, &b, tb, 0.0, &mut c);
                let expect = naive(m, k, n, &a, ta, &b, tb);
                for (x, y) in c.iter().zip(&expect) {
                    assert!((*x as f64 - y).abs() < 1e-5, "{ta} {tb}: {x} vs {y}");
                }
            }
        }
    }

    #[test]
    fn rows_do_not_depend_on_batch_composition() {
        let (k, n) = (100, 512);
        let b: Vec<f32> = (0..k * n).map(|i| ((i * 7919) % 1000) as f32 / 1000.0 - 0.5).collect();
        let rows: Vec<f32> = (0..37 * k).map(|i| ((i * 104729) % 997) as f32 / 997.0 - 0.5).collect();
        let mut full = vec![0.0f32; 37 * n];
        gemm(37, k, n, &rows, false, &b, false, 0.0, &mut full);
        for r in [0usize, 13, 36] {
            let mut single = vec![0.0f32; n];
            gemm(1, k, n, &rows[r * k..(r + 1) * k], false, &b, false, 0.0, &mut single);
            assert_eq!(&full[r * n..(r + 1) * n], &single[..]);
        }
    }
}
