use serde::{Deserialize, Serialize};

/// Real-multiplication count of one equalizer run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplexityReport {
    /// Multiplications actually performed, by the per-edge accounting
    /// `2Q` (means) + `4Q + 1` (variances) + `5Q` (symbol probabilities).
    pub multiplications: u64,
    /// Message-passing iterations run, summed over passes.
    pub iterations: usize,
    /// Graph edges per iteration (largest pass).
    pub edges: usize,
}

impl ComplexityReport {
    pub fn merge(self, other: ComplexityReport) -> ComplexityReport {
        ComplexityReport {
            multiplications: self.multiplications + other.multiplications,
            iterations: self.iterations + other.iterations,
            edges: self.edges.max(other.edges),
        }
    }
}

/// `n_iter · M · N · G · D · (11Q + 1)`, with `D` the row support (or the
/// trimmed support `R`).
pub fn predicted_complexity(n_iter: usize, m: usize, n: usize, g: usize, d: usize, q: usize) -> u64 {
    (n_iter * m * n * g * d) as u64 * (11 * q + 1) as u64
}
