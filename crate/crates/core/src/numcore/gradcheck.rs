//! Central-difference gradient checker over a flat parameter vector.

use crate::rng::Rng;

/// Outcome of a gradient check.
#[derive(Clone, Copy, Debug)]
pub struct GradCheck {
    pub max_rel_err: f64,
    pub coords_checked: usize,
}

/// Compares `analytic` against central finite differences of `f` at `x0`.
///
/// `segments` lists (offset, len) of each named parameter inside the flat
/// vector; from each segment up to `max_per_segment` coordinates are sampled
/// (all of them when the segment is smaller). The relative error of one
/// coordinate is |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
pub fn gradcheck<F: FnMut(&[f64]) -> f64>(
    f: &mut F,
    x0: &[f64],
    analytic: &[f64],
    segments: &[(usize, usize)],
    h: f64,
    max_per_segment: usize,
    seed: u64,
) -> GradCheck {
    assert_eq!(x0.len(), analytic.len());
    let mut x = x0.to_vec();
    let mut max_rel_err = 0.0f64;
    let mut coords_checked = 0usize;

    for (seg_id, &(offset, len)) in segments.iter().enumerate() {
        let mut rng = Rng::stream(seed, &[seg_id as u64]);
        let picks = rng.sample_indices(len, max_per_segment);
        for local in picks {
            let idx = offset + local;
            let orig = x[idx];
            x[idx] = orig + h;
            let fp = f(&x);
            x[idx] = orig - h;
            let fm = f(&x);
            x[idx] = orig;
            let numeric = (fp - fm) / (2.0 * h);
            let ana = analytic[idx];
            let rel = (ana - numeric).abs() / ana.abs().max(numeric.abs()).max(1e-8);
            if rel > max_rel_err {
                max_rel_err = rel;
            }
            coords_checked += 1;
        }
    }
    GradCheck {
        max_rel_err,
        coords_checked,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    #[test]
    fn linear_model_with_quadratic_loss_is_exact() {
        // loss(w) = 0.5 * ||w . x||^2 for fixed x; grad = (w . x) * x
        let x = [0.3, -1.2, 2.0, 0.7];
        let mut rng = Rng::new(5);
        let w0: Vec<f64> = (0..4).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let dot: f64 = w0.iter().zip(&x).map(|(a, b)| a * b).sum();
        let analytic: Vec<f64> = x.iter().map(|&xi| dot * xi).collect();
        let mut f = |w: &[f64]| {
            let d: f64 = w.iter().zip(&x).map(|(a, b)| a * b).sum();
            0.5 * d * d
        };
        let report = gradcheck(&mut f, &w0, &analytic, &[(0, 4)], 1e-5, 200, 0);
        assert_eq!(report.coords_checked, 4);
        assert!(report.max_rel_err < 1e-8, "err = {}", report.max_rel_err);
    }

    #[test]
    fn corrupted_gradient_is_detected() {
        let x = [1.0, 2.0];
        let w0 = [0.5, 0.25];
        let dot: f64 = w0.iter().zip(&x).map(|(a, b)| a * b).sum();
        // gradient doubled on purpose
        let corrupted: Vec<f64> = x.iter().map(|&xi| 2.0 * dot * xi).collect();
        let mut f = |w: &[f64]| {
            let d: f64 = w.iter().zip(&x).map(|(a, b)| a * b).sum();
            0.5 * d * d
        };
        let report = gradcheck(&mut f, &w0, &corrupted, &[(0, 2)], 1e-5, 200, 0);
        // |2g - g| / max(|2g|, |g|) = 0.5
        assert!((report.max_rel_err - 0.5).abs() < 1e-6);
        assert!(report.max_rel_err > 0.3, "corruption must be detected");
    }

    #[test]
    fn sampling_caps_large_segments() {
        let n = 1000;
        let x0 = vec![0.5; n];
        let analytic = vec![1.0; n]; // loss = sum(w) has gradient 1 everywhere
        let mut f = |w: &[f64]| w.iter().sum::<f64>();
        let report = gradcheck(&mut f, &x0, &analytic, &[(0, n)], 1e-5, 200, 7);
        assert_eq!(report.coords_checked, 200);
        // cancellation in f(x±h) around sum ≈ 500 leaves a few 1e-9 of noise
        assert!(report.max_rel_err < 1e-6);
    }
}
