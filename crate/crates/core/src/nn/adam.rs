use crate::error::{Error, Result};

pub const DEFAULT_LEARNING_RATE: f64 = 1e-4;

/// Adam optimizer state for a list of parameter tensors, each viewed as a
/// flat slice.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(shapes: &[usize], learning_rate: f64) -> Self {
        AdamState {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            m: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            v: shapes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }
}

/// One bias-corrected Adam update of `params` in place.
pub fn adam_step(params: &mut [&mut [f64]], grads: &[&[f64]], state: &mut AdamState) -> Result<()> {
    if params.len() != state.m.len() || grads.len() != state.m.len() {
        return Err(Error::DimensionMismatch {
            context: "adam tensor count",
            expected: state.m.len(),
            found: params.len().min(grads.len()),
        });
    }
    for (i, (p, g)) in params.iter().zip(grads).enumerate() {
        if p.len() != state.m[i].len() || g.len() != state.m[i].len() {
            return Err(Error::DimensionMismatch {
                context: "adam tensor shape",
                expected: state.m[i].len(),
                found: if p.len() != state.m[i].len() { p.len() } else { g.len() },
            });
        }
    }

    state.step += 1;
    let t = state.step as i32;
    let (b1, b2) = (state.beta1, state.beta2);
    let c1 = 1.0 - b1.powi(t);
    let c2 = 1.0 - b2.powi(t);
    for (i, (p, g)) in params.iter_mut().zip(grads).enumerate() {
        let (m, v) = (&mut state.m[i], &mut state.v[i]);
        for j in 0..p.len() {
            m[j] = b1 * m[j] + (1.0 - b1) * g[j];
            v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
            let m_hat = m[j] / c1;
            let v_hat = v[j] / c2;
            p[j] -= state.learning_rate * m_hat / (v_hat.sqrt() + state.epsilon);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_params() {
        let mut w = vec![1.0, -2.0];
        let mut st = AdamState::new(&[2], 1e-3);
        adam_step(&mut [&mut w], &[&[0.0, 0.0]], &mut st).unwrap();
        assert_eq!(w, vec![1.0, -2.0]);
        assert_eq!(st.step_count(), 1);
    }

    #[test]
    fn constant_gradient_moves_by_learning_rate() {
        // Scalar simulation: with a constant gradient the bias-corrected
        // moments equal g and g^2, so each step is lr * g / (|g| + eps).
        let lr = 1e-3;
        let g = 0.37;
        let mut w = vec![0.0];
        let mut st = AdamState::new(&[1], lr);
        let mut last = 0.0;
        for _ in 0..200 {
            let before = w[0];
            adam_step(&mut [&mut w], &[&[g]], &mut st).unwrap();
            last = before - w[0];
        }
        let expected = lr * g / (g + 1e-8);
        assert!((last - expected).abs() < 1e-12);
    }

    #[test]
    fn step_on_square_decreases_magnitude() {
        let mut w = vec![1.0];
        let mut st = AdamState::new(&[1], 1e-2);
        let g = 2.0 * w[0];
        adam_step(&mut [&mut w], &[&[g]], &mut st).unwrap();
        assert!(w[0].abs() < 1.0);
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let mut w = vec![1.0, 2.0];
        let mut st = AdamState::new(&[3], 1e-3);
        assert!(adam_step(&mut [&mut w], &[&[0.0, 0.0]], &mut st).is_err());
    }
}
