/// Adam with bias correction. Moments are allocated lazily on the first
/// step, one buffer per parameter slice.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub first_moment: Vec<Vec<f64>>,
    pub second_moment: Vec<Vec<f64>>,
    pub step_count: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamState {
    fn default() -> Self {
        Self::new(0.9, 0.999, 1e-8)
    }
}

impl AdamState {
    pub fn new(beta1: f64, beta2: f64, epsilon: f64) -> Self {
        Self {
            first_moment: Vec::new(),
            second_moment: Vec::new(),
            step_count: 0,
            beta1,
            beta2,
            epsilon,
        }
    }

    /// One update over every `(parameters, gradient)` pair. The pairs must
    /// arrive in the same order and with the same sizes on every call.
    pub fn step(&mut self, pairs: &mut [(&mut [f64], &[f64])], lr: f64) {
        if self.first_moment.is_empty() {
            self.first_moment = pairs.iter().map(|(p, _)| vec![0.0; p.len()]).collect();
            self.second_moment = self.first_moment.clone();
        }
        assert_eq!(pairs.len(), self.first_moment.len(), "parameter list changed between steps");
        self.step_count += 1;
        let t = self.step_count as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        let (b1, b2, eps) = (self.beta1, self.beta2, self.epsilon);

        for ((params, grads), (m, v)) in pairs
            .iter_mut()
            .zip(self.first_moment.iter_mut().zip(self.second_moment.iter_mut()))
        {
            assert_eq!(params.len(), grads.len());
            for i in 0..params.len() {
                let g = grads[i];
                m[i] = b1 * m[i] + (1.0 - b1) * g;
                v[i] = b2 * v[i] + (1.0 - b2) * g * g;
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                params[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_by_hand() {
        let mut adam = AdamState::default();
        let mut p = [0.0];
        adam.step(&mut [(&mut p[..], &[1.0][..])], 0.001);
        // m̂ = 1, v̂ = 1 → Δ = −0.001 / (1 + 1e-8)
        assert!((p[0] - (-0.001 / (1.0 + 1e-8))).abs() < 1e-18);
        assert!(p[0] > -0.001);
    }

    #[test]
    fn zero_gradient_is_a_no_op() {
        let mut adam = AdamState::default();
        let mut p = [1.5, -2.0];
        adam.step(&mut [(&mut p[..], &[0.0, 0.0][..])], 0.01);
        assert_eq!(p, [1.5, -2.0]);
        assert!(adam.second_moment[0].iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn bias_corrected_second_step() {
        // recurrence evaluated by hand for g = (1, 2)
        let mut adam = AdamState::default();
        let mut p = [0.0];
        adam.step(&mut [(&mut p[..], &[1.0][..])], 0.1);
        adam.step(&mut [(&mut p[..], &[2.0][..])], 0.1);
        let m = 0.9 * 0.1 + 0.1 * 2.0;
        let v = 0.999 * 0.001 + 0.001 * 4.0;
        let m_hat = m / (1.0 - 0.81);
        let v_hat = v / (1.0 - 0.999f64.powi(2));
        let expected = -0.1 / (1.0 + 1e-8) - 0.1 * m_hat / (v_hat.sqrt() + 1e-8);
        assert!((p[0] - expected).abs() < 1e-15);
    }
}
