//! Central finite differences in `f64` for checking analytic gradients.

/// Gradient of `f` at `x` by central differences with step `h`.
pub fn central_differences(x: &[f64], h: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let up = f(&probe);
            probe[i] = x[i] - h;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Relative error with an absolute floor: `|a - b| / max(|a|, |b|, floor)`.
pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamReport {
    pub name: String,
    pub count: usize,
    pub max_abs_error: f64,
    pub max_rel_error: f64,
    /// Largest relative error among entries whose absolute error exceeds the
    /// absolute floor; these are the entries a tolerance check looks at.
    worst: Vec<(f64, f64)>,
}

/// Per-parameter comparison of analytic against numeric gradients.
#[derive(Debug, Default, Clone)]
pub struct GradCheck {
    pub params: Vec<ParamReport>,
}

impl GradCheck {
    pub fn compare(&mut self, name: &str, analytic: &[f32], numeric: &[f64]) {
        assert_eq!(analytic.len(), numeric.len(), "{name}: length mismatch");
        let mut max_abs = 0.0f64;
        let mut max_rel = 0.0f64;
        let mut worst = Vec::new();
        for (&a, &n) in analytic.iter().zip(numeric) {
            let a = a as f64;
            let abs = (a - n).abs();
            let rel = relative_error(a, n, 1e-12);
            max_abs = max_abs.max(abs);
            max_rel = max_rel.max(rel);
            worst.push((abs, rel));
        }
        self.params.push(ParamReport {
            name: name.to_string(),
            count: analytic.len(),
            max_abs_error: max_abs,
            max_rel_error: max_rel,
            worst,
        });
    }

    /// Entries pass when their relative error is within `rel_tol` or their
    /// absolute error is within `abs_floor`. Returns the failing parameter
    /// names with the worst offending relative error.
    pub fn failures(&self, rel_tol: f64, abs_floor: f64) -> Vec<(String, f64)> {
        self.params
            .iter()
            .filter_map(|p| {
                let bad = p
                    .worst
                    .iter()
                    .filter(|(abs, rel)| *abs > abs_floor && *rel > rel_tol)
                    .map(|&(_, rel)| rel)
                    .fold(None, |acc: Option<f64>, r| Some(acc.map_or(r, |a| a.max(r))));
                bad.map(|r| (p.name.clone(), r))
            })
            .collect()
    }

    pub fn assert_within(&self, rel_tol: f64, abs_floor: f64) {
        let failures = self.failures(rel_tol, abs_floor);
        assert!(failures.is_empty(), "gradient check failed: {failures:?}\n{self:#?}");
    }

    pub fn total_checked(&self) -> usize {
        self.params.iter().map(|p| p.count).sum()
    }
}
