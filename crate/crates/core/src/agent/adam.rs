use super::mlp::Mlp;

/// Adam state for one network.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    step: u64,
    m: Mlp,
    v: Mlp,
}

impl Adam {
    pub fn new(shape_of: &Mlp, lr: f64, beta1: f64, beta2: f64, epsilon: f64) -> Self {
        let sizes = shape_of.sizes();
        Self {
            lr,
            beta1,
            beta2,
            epsilon,
            step: 0,
            m: Mlp::zeros(&sizes),
            v: Mlp::zeros(&sizes),
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// One descent step `θ ← θ − lr · m̂ / (√v̂ + ε)`.
    pub fn apply(&mut self, params: &mut Mlp, grads: &Mlp) {
        self.step += 1;
        let (b1, b2) = (self.beta1, self.beta2);
        let c1 = 1.0 - b1.powi(self.step as i32);
        let c2 = 1.0 - b2.powi(self.step as i32);
        let lr = self.lr;
        let eps = self.epsilon;
        for (((p, g), m), v) in params
            .params_mut()
            .zip(grads.params())
            .zip(self.m.params_mut())
            .zip(self.v.params_mut())
        {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
}
