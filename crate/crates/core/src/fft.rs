//! Multi-dimensional FFTs over row-major arrays (last axis fastest).

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::{Fft, FftPlanner};

use crate::linalg::C64;

pub struct NdFft {
    shape: Vec<usize>,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
}

impl NdFft {
    fn new(shape: &[usize]) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            shape: shape.to_vec(),
            forward: shape.iter().map(|&m| planner.plan_fft_forward(m)).collect(),
            inverse: shape.iter().map(|&m| planner.plan_fft_inverse(m)).collect(),
        }
    }

    /// Cached plan for a given shape.
    pub fn for_shape(shape: &[usize]) -> Arc<NdFft> {
        static CACHE: OnceLock<Mutex<HashMap<Vec<usize>, Arc<NdFft>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("fft plan cache poisoned");
        guard
            .entry(shape.to_vec())
            .or_insert_with(|| Arc::new(NdFft::new(shape)))
            .clone()
    }

    pub fn points(&self) -> usize {
        self.shape.iter().product()
    }

    /// Unnormalized forward transform (kernel `e^{-ikx}`).
    pub fn forward(&self, data: &mut [C64]) {
        self.transform(data, &self.forward);
    }

    /// Inverse transform including the `1/M` normalization.
    pub fn inverse(&self, data: &mut [C64]) {
        self.transform(data, &self.inverse);
        let scale = 1.0 / self.points() as f64;
        data.iter_mut().for_each(|v| *v *= scale);
    }

    fn transform(&self, data: &mut [C64], plans: &[Arc<dyn Fft<f64>>]) {
        assert_eq!(data.len(), self.points());
        let dims = self.shape.len();
        for axis in 0..dims {
            let m = self.shape[axis];
            if m == 1 {
                continue;
            }
            let stride: usize = self.shape[axis + 1..].iter().product();
            let plan = &plans[axis];
            if stride == 1 {
                plan.process(data);
                continue;
            }
            let outer: usize = self.shape[..axis].iter().product();
            let mut line = vec![C64::new(0.0, 0.0); m];
            for o in 0..outer {
                let base = o * m * stride;
                for inner in 0..stride {
                    for (k, slot) in line.iter_mut().enumerate() {
                        *slot = data[base + k * stride + inner];
                    }
                    plan.process(&mut line);
                    for (k, slot) in line.iter().enumerate() {
                        data[base + k * stride + inner] = *slot;
                    }
                }
            }
        }
    }
}
