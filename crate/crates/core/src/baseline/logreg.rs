//! Objective, gradient, training and scoring.
//!
//! Objective for weights `w`, bias `b` and inverse regularization `C`:
//!
//! ```text
//! f(w, b) = ||w||^2 / (2C) + sum_i log(1 + exp(-y_i (w . x_i + b)))
//! ```
//!
//! The bias is not penalized.

use rayon::prelude::*;

use super::{BaselineError, LabeledPoint, SparseVector};
use crate::pairs::Label;

/// Points per parallel chunk. Partial sums are combined in chunk order so
/// results do not depend on the thread count.
const CHUNK: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub objective: f64,
    pub grad_w: Vec<f64>,
    pub grad_b: f64,
}

/// log(1 + exp(t)) without overflow.
fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// 1 / (1 + exp(-t)) without overflow.
pub(crate) fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

fn check_c(c: f64) -> Result<(), BaselineError> {
    if c > 0.0 && c.is_finite() {
        Ok(())
    } else {
        Err(BaselineError::BadC(c))
    }
}

fn check_dims(w: &[f64], data: &[LabeledPoint]) -> Result<(), BaselineError> {
    match data.iter().find(|p| p.x.dim != w.len()) {
        Some(p) => Err(BaselineError::DimensionMismatch {
            expected: w.len(),
            got: p.x.dim,
        }),
        None => Ok(()),
    }
}

fn data_term(w: &[f64], b: f64, data: &[LabeledPoint]) -> f64 {
    let partial: Vec<f64> = data
        .par_chunks(CHUNK)
        .map(|chunk| chunk.iter().map(|p| softplus(-p.y * (p.x.dot(w) + b))).sum())
        .collect();
    partial.into_iter().sum()
}

fn objective(w: &[f64], b: f64, data: &[LabeledPoint], c: f64) -> f64 {
    let norm2: f64 = w.iter().map(|v| v * v).sum();
    norm2 / (2.0 * c) + data_term(w, b, data)
}

/// Objective value and its exact gradient.
pub fn objective_and_gradient(
    w: &[f64],
    b: f64,
    data: &[LabeledPoint],
    c: f64,
) -> Result<Gradient, BaselineError> {
    check_c(c)?;
    check_dims(w, data)?;
    let dim = w.len();
    let partial: Vec<(f64, Vec<f64>, f64)> = data
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut loss = 0.0;
            let mut gw = vec![0.0; dim];
            let mut gb = 0.0;
            for p in chunk {
                let z = p.y * (p.x.dot(w) + b);
                loss += softplus(-z);
                // d/dz log(1 + e^-z) = -sigmoid(-z)
                let coef = -p.y * sigmoid(-z);
                for (i, v) in p.x.iter() {
                    gw[i] += coef * v;
                }
                gb += coef;
            }
            (loss, gw, gb)
        })
        .collect();

    let mut objective: f64 = w.iter().map(|v| v * v).sum::<f64>() / (2.0 * c);
    let mut grad_w: Vec<f64> = w.iter().map(|v| v / c).collect();
    let mut grad_b = 0.0;
    for (loss, gw, gb) in partial {
        objective += loss;
        for (g, d) in grad_w.iter_mut().zip(gw) {
            *g += d;
        }
        grad_b += gb;
    }
    if !objective.is_finite() {
        return Err(BaselineError::NonFinite("objective"));
    }
    if !grad_b.is_finite() || grad_w.iter().any(|g| !g.is_finite()) {
        return Err(BaselineError::NonFinite("gradient"));
    }
    Ok(Gradient {
        objective,
        grad_w,
        grad_b,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOptions {
    /// Stop once the Euclidean norm of the full gradient is at most this.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-6,
            max_iterations: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogRegModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub c: f64,
    pub iterations: usize,
    pub final_objective: f64,
    pub converged: bool,
}

impl LogRegModel {
    pub fn weight_norm(&self) -> f64 {
        self.weights.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn decision(&self, x: &SparseVector) -> Result<f64, BaselineError> {
        if x.dim != self.weights.len() {
            return Err(BaselineError::DimensionMismatch {
                expected: self.weights.len(),
                got: x.dim,
            });
        }
        Ok(x.dot(&self.weights) + self.bias)
    }
}

/// Probability of interaction and the thresholded label (>= 0.5 is an
/// interaction).
pub fn predict(model: &LogRegModel, x: &SparseVector) -> Result<(f64, Label), BaselineError> {
    let p = sigmoid(model.decision(x)?);
    let label = if p >= 0.5 {
        Label::Interaction
    } else {
        Label::NoInteraction
    };
    Ok((p, label))
}

/// Diagonal curvature bound per coordinate: `1/C + 0.25 * sum_i x_ij^2`
/// for weights and `0.25 * m` for the bias.
fn diagonal_scale(dim: usize, data: &[LabeledPoint], c: f64) -> (Vec<f64>, f64) {
    let mut d = vec![0.0; dim];
    for p in data {
        for (i, v) in p.x.iter() {
            d[i] += 0.25 * v * v;
        }
    }
    for v in &mut d {
        *v += 1.0 / c;
    }
    (d, 0.25 * data.len() as f64)
}

/// Gradient descent with a diagonal (Jacobi) scaling of the gradient and
/// Armijo backtracking, starting from the origin. Every accepted step
/// lowers the objective, so the result is never worse than `w = 0, b = 0`.
pub fn train(data: &[LabeledPoint], c: f64, opts: &TrainOptions) -> Result<LogRegModel, BaselineError> {
    check_c(c)?;
    let first = data.first().ok_or(BaselineError::EmptyData)?;
    let dim = first.x.dim;
    let has_pos = data.iter().any(|p| p.y > 0.0);
    let has_neg = data.iter().any(|p| p.y < 0.0);
    if !(has_pos && has_neg) {
        return Err(BaselineError::SingleClass);
    }

    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    let (scale_w, scale_b) = diagonal_scale(dim, data, c);
    let mut g = objective_and_gradient(&w, b, data, c)?;
    let mut step = 1.0;
    let mut iterations = 0;
    let mut converged = false;

    const ARMIJO: f64 = 1e-4;
    const MIN_STEP: f64 = 1e-20;

    while iterations < opts.max_iterations {
        let gnorm = (g.grad_w.iter().map(|v| v * v).sum::<f64>() + g.grad_b * g.grad_b).sqrt();
        if gnorm <= opts.tolerance {
            converged = true;
            break;
        }
        let dir_w: Vec<f64> = g.grad_w.iter().zip(&scale_w).map(|(gi, si)| -gi / si).collect();
        let dir_b = -g.grad_b / scale_b;
        let slope: f64 =
            g.grad_w.iter().zip(&dir_w).map(|(a, d)| a * d).sum::<f64>() + g.grad_b * dir_b;

        let mut accepted = None;
        let mut t = step;
        while t >= MIN_STEP {
            let w_new: Vec<f64> = w.iter().zip(&dir_w).map(|(wi, di)| wi + t * di).collect();
            let b_new = b + t * dir_b;
            let f_new = objective(&w_new, b_new, data, c);
            if f_new.is_finite() && f_new <= g.objective + ARMIJO * t * slope {
                accepted = Some((w_new, b_new, t));
                break;
            }
            t *= 0.5;
        }
        let Some((w_new, b_new, t)) = accepted else {
            // No representable decrease along the descent direction.
            log::debug!("line search stalled at iteration {iterations}, gradient norm {gnorm:e}");
            break;
        };
        w = w_new;
        b = b_new;
        g = objective_and_gradient(&w, b, data, c)?;
        step = (2.0 * t).min(1.0);
        iterations += 1;
    }
    if !converged {
        let gnorm = (g.grad_w.iter().map(|v| v * v).sum::<f64>() + g.grad_b * g.grad_b).sqrt();
        converged = gnorm <= opts.tolerance;
    }

    Ok(LogRegModel {
        weights: w,
        bias: b,
        c,
        iterations,
        final_objective: g.objective,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(x: &[f64], y: f64) -> LabeledPoint {
        LabeledPoint {
            x: SparseVector::from_dense(x),
            y,
        }
    }

    #[test]
    fn origin_objective_is_m_log2() {
        let data: Vec<_> = (0..7).map(|i| point(&[i as f64, 1.0], if i % 2 == 0 { 1.0 } else { -1.0 })).collect();
        let g = objective_and_gradient(&[0.0, 0.0], 0.0, &data, 3.0).unwrap();
        assert!((g.objective - 7.0 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn single_point_gradient_by_hand() {
        let g = objective_and_gradient(&[0.0], 0.0, &[point(&[1.0], 1.0)], 1.0).unwrap();
        assert!((g.grad_w[0] + 0.5).abs() < 1e-15);
        assert!((g.grad_b + 0.5).abs() < 1e-15);
    }

    #[test]
    fn extreme_margins_stay_finite() {
        let data = [point(&[1.0], 1.0), point(&[1.0], -1.0)];
        let g = objective_and_gradient(&[800.0], 0.0, &data, 1e16).unwrap();
        assert!((g.objective - 800.0).abs() < 1e-9);
    }

    #[test]
    fn bad_inputs() {
        let data = [point(&[1.0], 1.0)];
        assert!(matches!(objective_and_gradient(&[0.0], 0.0, &data, 0.0), Err(BaselineError::BadC(_))));
        assert!(matches!(
            objective_and_gradient(&[0.0, 0.0], 0.0, &data, 1.0),
            Err(BaselineError::DimensionMismatch { .. })
        ));
        assert!(matches!(train(&data, 1.0, &TrainOptions::default()), Err(BaselineError::SingleClass)));
        assert!(matches!(train(&[], 1.0, &TrainOptions::default()), Err(BaselineError::EmptyData)));
    }

    #[test]
    fn symmetric_data_gives_zero_bias() {
        let data = [point(&[1.0], 1.0), point(&[-1.0], -1.0)];
        let m = train(&data, 1.0, &TrainOptions::default()).unwrap();
        assert!(m.converged);
        assert!(m.bias.abs() <= 1e-6);
        assert!(m.weights[0] > 0.0);
    }

    #[test]
    fn extreme_c_values_train() {
        let data = [
            point(&[1.0, 0.0], 1.0),
            point(&[0.0, 1.0], -1.0),
            point(&[1.0, 1.0], 1.0),
            point(&[1.0, 1.0], -1.0),
        ];
        for c in [1e-16, 1e-3, 1.0, 1e3, 1e16] {
            let m = train(&data, c, &TrainOptions::default()).unwrap();
            let origin = objective_and_gradient(&[0.0, 0.0], 0.0, &data, c).unwrap().objective;
            assert!(m.final_objective <= origin, "C={c}");
            assert!(m.weights.iter().all(|w| w.is_finite()));
            if c == 1e-16 {
                assert!(m.weight_norm() < 1e-12);
            }
        }
    }

    #[test]
    fn predict_threshold_and_saturation() {
        let model = LogRegModel {
            weights: vec![0.0],
            bias: 0.0,
            c: 1.0,
            iterations: 0,
            final_objective: 0.0,
            converged: true,
        };
        let x = SparseVector::from_dense(&[1.0]);
        assert_eq!(predict(&model, &x).unwrap(), (0.5, Label::Interaction));
        let hot = LogRegModel { bias: 50.0, ..model.clone() };
        assert!(predict(&hot, &x).unwrap().0 > 0.999999);
        let cold = LogRegModel { bias: -1e-9, ..model.clone() };
        assert_eq!(predict(&cold, &x).unwrap().1, Label::NoInteraction);
        assert!(predict(&model, &SparseVector::from_dense(&[1.0, 2.0])).is_err());
    }

    use proptest::prelude::*;

    fn instance() -> impl Strategy<Value = (Vec<f64>, f64, Vec<LabeledPoint>, f64)> {
        (1usize..=20, 1usize..=50).prop_flat_map(|(d, m)| {
            (
                prop::collection::vec(-2.0..2.0f64, d),
                -2.0..2.0f64,
                prop::collection::vec(
                    (prop::collection::vec(prop_oneof![Just(0.0), Just(1.0), -1.5..1.5f64], d), any::<bool>()),
                    m,
                ),
                prop::sample::select(vec![0.1, 1.0, 10.0]),
            )
                .prop_map(|(w, b, pts, c)| {
                    let data = pts
                        .into_iter()
                        .map(|(x, pos)| point(&x, if pos { 1.0 } else { -1.0 }))
                        .collect();
                    (w, b, data, c)
                })
        })
    }

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(1.0)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn gradient_matches_central_differences((w, b, data, c) in instance()) {
            let g = objective_and_gradient(&w, b, &data, c).unwrap();
            let h = 1e-5;
            for j in 0..w.len() {
                let mut wp = w.clone();
                let mut wm = w.clone();
                wp[j] += h;
                wm[j] -= h;
                let fd = (objective(&wp, b, &data, c) - objective(&wm, b, &data, c)) / (2.0 * h);
                prop_assert!(rel_err(g.grad_w[j], fd) < 1e-6, "w[{j}]: {} vs {fd}", g.grad_w[j]);
            }
            let fd = (objective(&w, b + h, &data, c) - objective(&w, b - h, &data, c)) / (2.0 * h);
            prop_assert!(rel_err(g.grad_b, fd) < 1e-6);
        }

        #[test]
        fn objective_is_convex(
            (w1, b1, data, c) in instance(),
            shift in prop::collection::vec(-3.0..3.0f64, 20),
            db in -3.0..3.0f64,
        ) {
            let w2: Vec<f64> = w1.iter().zip(&shift).map(|(a, s)| a + s).collect();
            let b2 = b1 + db;
            let mid: Vec<f64> = w1.iter().zip(&w2).map(|(a, b)| 0.5 * (a + b)).collect();
            let f1 = objective(&w1, b1, &data, c);
            let f2 = objective(&w2, b2, &data, c);
            let fm = objective(&mid, 0.5 * (b1 + b2), &data, c);
            prop_assert!(fm <= 0.5 * (f1 + f2) + 1e-9);
        }

    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn stronger_regularization_never_grows_weights((_, _, data, _) in instance()) {
            prop_assume!(data.iter().any(|p| p.y > 0.0) && data.iter().any(|p| p.y < 0.0));
            let opts = TrainOptions { tolerance: 1e-9, max_iterations: 20_000 };
            let mut prev = f64::INFINITY;
            for c in [1.0, 0.1, 0.01, 0.001] {
                let m = train(&data, c, &opts).unwrap();
                let n = m.weight_norm();
                prop_assert!(n <= prev + 1e-6, "C={c}: {n} > {prev}");
                prev = n;
            }
        }

        #[test]
        fn probability_monotone_in_margin(
            w in prop::collection::vec(-3.0..3.0f64, 4),
            b in -3.0..3.0f64,
            xs in prop::collection::vec(prop::collection::vec(-2.0..2.0f64, 4), 2..10),
        ) {
            let model = LogRegModel { weights: w, bias: b, c: 1.0, iterations: 0, final_objective: 0.0, converged: true };
            let mut scored: Vec<(f64, f64, Label)> = xs
                .iter()
                .map(|x| {
                    let v = SparseVector::from_dense(x);
                    let (p, l) = predict(&model, &v).unwrap();
                    (model.decision(&v).unwrap(), p, l)
                })
                .collect();
            scored.sort_by(|a, b| a.0.total_cmp(&b.0));
            for pair in scored.windows(2) {
                prop_assert!(pair[0].1 <= pair[1].1);
            }
            let flips = scored.windows(2).filter(|p| p[0].2 != p[1].2).count();
            prop_assert!(flips <= 1);
        }
    }
}
