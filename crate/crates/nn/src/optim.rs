//! Adam optimizer over named parameter tensors.

use std::collections::BTreeMap;

use seamgnn_core::linalg::Matrix;

#[derive(Debug, Clone)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    m: BTreeMap<String, Matrix>,
    v: BTreeMap<String, Matrix>,
}

impl Adam {
    pub fn new(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: BTreeMap::new(),
            v: BTreeMap::new(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// One bias-corrected update of every parameter that has a gradient.
    pub fn step(
        &mut self,
        params: &mut BTreeMap<String, Matrix>,
        grads: &BTreeMap<String, Matrix>,
    ) {
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for (name, g) in grads {
            let Some(p) = params.get_mut(name) else {
                continue;
            };
            let m = self
                .m
                .entry(name.clone())
                .or_insert_with(|| Matrix::zeros(g.rows(), g.cols()));
            let v = self
                .v
                .entry(name.clone())
                .or_insert_with(|| Matrix::zeros(g.rows(), g.cols()));
            let pd = p.data_mut();
            let (md, vd) = (m.data_mut(), v.data_mut());
            for i in 0..pd.len() {
                let gi = g.data()[i];
                md[i] = self.beta1 * md[i] + (1.0 - self.beta1) * gi;
                vd[i] = self.beta2 * vd[i] + (1.0 - self.beta2) * gi * gi;
                let mh = md[i] / c1;
                let vh = vd[i] / c2;
                pd[i] -= self.learning_rate * mh / (vh.sqrt() + self.eps);
            }
        }
    }
}
