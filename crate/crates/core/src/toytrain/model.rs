use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::Corpus;
use crate::sampler::Batch;

/// One categorical distribution over target tokens per source token,
/// parameterized by unnormalized scores.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyModel {
    rows: usize,
    cols: usize,
    scores: Vec<f64>,
    pub learning_rate: f64,
}

/// Gradient restricted to the rows a batch touched.
#[derive(Debug, Clone, PartialEq)]
pub struct RowGradient {
    pub rows: Vec<(usize, Vec<f64>)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub accuracy: f64,
    /// Mean negative log-likelihood per token, in nats.
    pub nll: f64,
}

impl ToyModel {
    pub fn uniform(rows: usize, cols: usize, learning_rate: f64) -> Self {
        Self {
            rows,
            cols,
            scores: vec![0.0; rows * cols],
            learning_rate,
        }
    }

    /// Scores drawn uniformly from `[-scale, scale]`.
    pub fn random(rows: usize, cols: usize, learning_rate: f64, scale: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scores = (0..rows * cols)
            .map(|_| scale * (2.0 * rng.random::<f64>() - 1.0))
            .collect();
        Self {
            rows,
            cols,
            scores,
            learning_rate,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn scores_mut(&mut self) -> &mut [f64] {
        &mut self.scores
    }

    fn row(&self, r: usize) -> &[f64] {
        &self.scores[r * self.cols..(r + 1) * self.cols]
    }

    fn log_softmax(&self, r: usize) -> Vec<f64> {
        let row = self.row(r);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let log_z = max + row.iter().map(|&x| (x - max).exp()).sum::<f64>().ln();
        row.iter().map(|&x| x - log_z).collect()
    }

    pub fn row_distribution(&self, r: usize) -> Vec<f64> {
        self.log_softmax(r).into_iter().map(f64::exp).collect()
    }

    /// Mean cross-entropy over `(source, target)` pairs.
    pub fn loss(&self, pairs: &[(usize, usize)]) -> f64 {
        self.loss_and_gradient(pairs).0
    }

    /// Mean cross-entropy and its gradient with respect to the scores.
    pub fn loss_and_gradient(&self, pairs: &[(usize, usize)]) -> (f64, RowGradient) {
        if pairs.is_empty() {
            return (0.0, RowGradient { rows: Vec::new() });
        }
        // per-row target histograms
        let mut slot = vec![usize::MAX; self.rows];
        let mut touched: Vec<(usize, Vec<u32>)> = Vec::new();
        for &(s, y) in pairs {
            if slot[s] == usize::MAX {
                slot[s] = touched.len();
                touched.push((s, vec![0; self.cols]));
            }
            touched[slot[s]].1[y] += 1;
        }
        touched.sort_unstable_by_key(|(r, _)| *r);

        let n = pairs.len() as f64;
        let mut loss = 0.0;
        let rows = touched
            .into_iter()
            .map(|(r, hist)| {
                let row = self.row(r);
                let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let exps: Vec<f64> = row.iter().map(|&x| (x - max).exp()).collect();
                let z: f64 = exps.iter().sum();
                let log_z = max + z.ln();
                let count: u32 = hist.iter().sum();
                let grad = exps
                    .iter()
                    .zip(row)
                    .zip(&hist)
                    .map(|((&e, &x), &h)| {
                        if h > 0 {
                            loss += h as f64 * (log_z - x);
                        }
                        (count as f64 * e / z - h as f64) / n
                    })
                    .collect();
                (r, grad)
            })
            .collect();
        (loss / n, RowGradient { rows })
    }

    pub fn apply(&mut self, grad: &RowGradient, learning_rate: f64) {
        for (r, g) in &grad.rows {
            let start = r * self.cols;
            for (s, gi) in self.scores[start..start + self.cols].iter_mut().zip(g) {
                *s -= learning_rate * gi;
            }
        }
    }

    /// Token accuracy of the argmax prediction (ties resolve to the lowest
    /// index) and mean NLL over every aligned pair of `corpus`.
    pub fn evaluate(&self, corpus: &Corpus) -> Evaluation {
        let mut cache: Vec<Option<(usize, Vec<f64>)>> = vec![None; self.rows];
        let mut correct = 0usize;
        let mut nll = 0.0;
        let mut total = 0usize;
        for sample in corpus.samples() {
            for (s, t) in sample.source.iter().zip(&sample.target) {
                let (argmax, log_p) = cache[s.index()].get_or_insert_with(|| {
                    let log_p = self.log_softmax(s.index());
                    let argmax =
                        log_p
                            .iter()
                            .enumerate()
                            .fold(0, |best, (i, &v)| if v > log_p[best] { i } else { best });
                    (argmax, log_p)
                });
                correct += usize::from(*argmax == t.index());
                nll -= log_p[t.index()];
                total += 1;
            }
        }
        Evaluation {
            accuracy: correct as f64 / total as f64,
            nll: nll / total as f64,
        }
    }
}

/// Position-aligned `(source, target)` index pairs of the given samples.
pub fn aligned_pairs(corpus: &Corpus, ids: &[usize]) -> Vec<(usize, usize)> {
    ids.iter()
        .flat_map(|&id| {
            let s = corpus.sample(id);
            s.source
                .iter()
                .zip(&s.target)
                .map(|(a, b)| (a.index(), b.index()))
        })
        .collect()
}

/// One step of plain SGD on the batch's mean token cross-entropy. Returns the
/// loss before the update.
pub fn sgd_step(model: &mut ToyModel, batch: &Batch, corpus: &Corpus) -> f64 {
    let pairs = aligned_pairs(corpus, &batch.sample_ids);
    let (loss, grad) = model.loss_and_gradient(&pairs);
    let lr = model.learning_rate;
    model.apply(&grad, lr);
    loss
}
