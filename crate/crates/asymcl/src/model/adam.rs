//! Adam optimizer state and update rule.

use super::ModelError;
use crate::autodiff::Tensor;

/// First/second-moment accumulators for one ordered parameter group, plus
/// the shared step counter. Coefficients follow the common defaults
/// β₁ = 0.9, β₂ = 0.999, ε = 1e-8.
#[derive(Debug, Clone)]
pub struct AdamState {
    first_moment: Vec<Tensor>,
    second_moment: Vec<Tensor>,
    step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    /// Zero-initialized accumulators shaped like the given parameters.
    pub fn new(params: &[&Tensor]) -> Self {
        Self {
            first_moment: params.iter().map(|p| p.zeros_like()).collect(),
            second_moment: params.iter().map(|p| p.zeros_like()).collect(),
            step: 0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One bias-corrected Adam update applied in place, in parameter order.
    pub fn step(
        &mut self,
        params: &mut [&mut Tensor],
        grads: &[Tensor],
        learning_rate: f64,
    ) -> Result<(), ModelError> {
        if params.len() != grads.len() || params.len() != self.first_moment.len() {
            return Err(ModelError::ParamGroupMismatch {
                params: params.len(),
                grads: grads.len(),
                state: self.first_moment.len(),
            });
        }
        self.step += 1;
        let bias1 = 1.0 - self.beta1.powi(self.step as i32);
        let bias2 = 1.0 - self.beta2.powi(self.step as i32);
        for ((param, grad), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.first_moment.iter_mut().zip(&mut self.second_moment))
        {
            if param.shape() != grad.shape() {
                return Err(ModelError::GradientShapeMismatch {
                    param: param.shape().to_vec(),
                    grad: grad.shape().to_vec(),
                });
            }
            let g = grad.data();
            let md = m.data_mut();
            let vd = v.data_mut();
            let pd = param.data_mut();
            for i in 0..g.len() {
                md[i] = self.beta1 * md[i] + (1.0 - self.beta1) * g[i];
                vd[i] = self.beta2 * vd[i] + (1.0 - self.beta2) * g[i] * g[i];
                let m_hat = md[i] / bias1;
                let v_hat = vd[i] / bias2;
                pd[i] -= learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
            }
        }
        Ok(())
    }
}
