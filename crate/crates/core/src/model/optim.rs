//! Adam with bias correction and stepped learning-rate decay.

/// Optimizer state: first/second moment accumulators sized like the
/// parameter vector, a step counter and the decay schedule. The base
/// learning rate is multiplied by `lr_decay` once per `decay_interval`
/// epochs (set the current epoch with [`AdamState::set_epoch`]).
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    learning_rate: f64,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
    lr_decay: f64,
    decay_interval: u32,
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
    epoch: u32,
}

impl AdamState {
    pub fn new(param_count: usize) -> AdamState {
        AdamState {
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            lr_decay: 0.7,
            decay_interval: 10,
            m: vec![0.0; param_count],
            v: vec![0.0; param_count],
            step: 0,
            epoch: 0,
        }
    }

    pub fn with_learning_rate(mut self, lr: f64) -> AdamState {
        self.learning_rate = lr;
        self
    }

    pub fn with_betas(mut self, beta1: f64, beta2: f64) -> AdamState {
        self.beta1 = beta1;
        self.beta2 = beta2;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> AdamState {
        self.epsilon = epsilon;
        self
    }

    pub fn with_decay(mut self, factor: f64, interval: u32) -> AdamState {
        self.lr_decay = factor;
        self.decay_interval = interval.max(1);
        self
    }

    /// Marks the current epoch for the decay schedule.
    pub fn set_epoch(&mut self, epoch: u32) {
        self.epoch = epoch;
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// Base learning rate after decay for the current epoch.
    pub fn effective_lr(&self) -> f64 {
        let decays = (self.epoch / self.decay_interval) as i32;
        self.learning_rate * self.lr_decay.powi(decays)
    }

    /// One bias-corrected Adam update in place.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        assert_eq!(params.len(), self.m.len(), "parameter shape mismatch");
        assert_eq!(grads.len(), self.m.len(), "gradient shape mismatch");
        self.step += 1;
        let lr = self.effective_lr();
        let bias1 = 1.0 - self.beta1.powi(self.step as i32);
        let bias2 = 1.0 - self.beta2.powi(self.step as i32);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grads[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grads[i] * grads[i];
            let m_hat = self.m[i] / bias1;
            let v_hat = self.v[i] / bias2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + self.epsilon);
        }
    }
}
