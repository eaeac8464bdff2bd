/// Warm-up schedule `d^-0.5 * min(t^-0.5, t * warmup^-1.5)`: linear growth
/// until `warmup`, inverse square-root decay afterwards.
pub fn noam_lr(t: u64, d_embedding: u64, warmup: u64) -> f64 {
    let t = t.max(1) as f64;
    let decay = t.powf(-0.5);
    let ramp = t * (warmup.max(1) as f64).powf(-1.5);
    (d_embedding.max(1) as f64).powf(-0.5) * decay.min(ramp)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LearningRate {
    Constant(f64),
    /// `scale * noam_lr(t + 1, d_embedding, warmup)` at zero-based step `t`.
    Noam {
        scale: f64,
        d_embedding: u64,
        warmup: u64,
    },
}

impl LearningRate {
    pub fn at(&self, step: u64) -> f64 {
        match *self {
            LearningRate::Constant(lr) => lr,
            LearningRate::Noam {
                scale,
                d_embedding,
                warmup,
            } => scale * noam_lr(step + 1, d_embedding, warmup),
        }
    }
}
