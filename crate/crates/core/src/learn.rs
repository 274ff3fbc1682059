//! Linear soft-margin SVM that predicts whether a user accepts a bid.
//!
//! Features are the bid triple `(rate, price, bandwidth)`, standardised to
//! zero mean and unit scale with statistics from the training set. The
//! dual problem
//!
//! ```text
//! min_a  1/2 a'Qa - sum(a)   s.t.  0 <= a_i <= C_i,  sum(y_i a_i) = 0
//! ```
//!
//! is solved by sequential minimal optimisation with second-order working
//! set selection. With a linear kernel the primal weights are kept
//! explicitly, so every gradient entry is a three-term dot product.
//! Training stops once the maximal KKT violation drops below the
//! configured tolerance.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::Bid;

pub const FEATURES: usize = 3;

pub type Features = [f64; FEATURES];

/// One labelled bid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    /// `(rate, price, bandwidth)`.
    pub x: Features,
    /// +1 accepted, -1 rejected.
    pub y: i8,
}

impl Sample {
    pub fn from_bid(bid: &Bid, accepted: bool) -> Self {
        Sample {
            x: [bid.rate, bid.price, bid.bandwidth],
            y: if accepted { 1 } else { -1 },
        }
    }
}

/// Turns an offer history into training samples.
pub fn collect_samples(history: &[(Bid, bool)]) -> Vec<Sample> {
    history.iter().map(|(bid, acc)| Sample::from_bid(bid, *acc)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmConfig {
    /// Misclassification penalty `C`.
    pub c: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Recorded in the model fingerprint. The solver itself is
    /// deterministic.
    pub seed: u64,
    /// Scale `C` per class by `n / (2 n_class)`.
    pub balanced: bool,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            tolerance: 1e-6,
            max_iterations: 100_000,
            seed: 0,
            balanced: false,
        }
    }
}

impl SvmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::invalid("svm.c", "must be positive"));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::invalid("svm.tolerance", "must be positive"));
        }
        if self.max_iterations == 0 {
            return Err(Error::invalid("svm.max_iterations", "must be positive"));
        }
        Ok(())
    }

    pub fn fingerprint(&self) -> String {
        format!(
            "c={};tolerance={};max_iterations={};seed={};balanced={}",
            self.c, self.tolerance, self.max_iterations, self.seed, self.balanced
        )
    }
}

/// Per-feature affine map fitted on the training set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Features,
    pub scale: Features,
}

impl Standardizer {
    pub fn fit(samples: &[Sample]) -> Self {
        let n = samples.len().max(1) as f64;
        let mut mean = [0.0; FEATURES];
        for s in samples {
            for (m, v) in mean.iter_mut().zip(s.x) {
                *m += v / n;
            }
        }
        let mut scale = [0.0; FEATURES];
        for s in samples {
            for k in 0..FEATURES {
                scale[k] += (s.x[k] - mean[k]).powi(2) / n;
            }
        }
        for v in &mut scale {
            *v = v.sqrt();
            // constant features carry no information
            if !(*v > 1e-12 && v.is_finite()) {
                *v = 1.0;
            }
        }
        Self { mean, scale }
    }

    pub fn apply(&self, x: &Features) -> Features {
        std::array::from_fn(|k| (x[k] - self.mean[k]) / self.scale[k])
    }
}

/// A trained classifier: `score(x) = w . standardize(x) + bias`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub weights: Features,
    pub bias: f64,
    pub standardizer: Standardizer,
    pub fingerprint: String,
}

impl SvmModel {
    pub fn score(&self, x: &Features) -> f64 {
        dot(&self.weights, &self.standardizer.apply(x)) + self.bias
    }

    /// Writes the model as a TOML record. Field order: `weights`, `bias`,
    /// `fingerprint`, then the `[standardizer]` table with `mean` and
    /// `scale`.
    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        let record = ModelRecord {
            weights: self.weights,
            bias: self.bias,
            fingerprint: self.fingerprint.clone(),
            standardizer: self.standardizer,
        };
        toml::to_string(&record).expect("model record is always serialisable")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let r: ModelRecord = toml::from_str(text).map_err(|e| Error::InvalidData(format!("model file: {e}")))?;
        if r.standardizer.scale.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::InvalidData(
                "model file: standardizer scale must be positive".into(),
            ));
        }
        Ok(SvmModel {
            weights: r.weights,
            bias: r.bias,
            standardizer: r.standardizer,
            fingerprint: r.fingerprint,
        })
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelRecord {
    weights: Features,
    bias: f64,
    fingerprint: String,
    standardizer: Standardizer,
}

/// Predicted decision: accepted iff the score is non-negative.
pub fn classify(model: &SvmModel, x: &Features) -> (f64, bool) {
    let s = model.score(x);
    (s, s >= 0.0)
}

/// Convergence diagnostics from one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingReport {
    pub iterations: usize,
    pub converged: bool,
    /// Final maximal KKT violation.
    pub kkt_gap: f64,
    /// Dual objective `1/2 |w|^2 - sum(a)` sampled once per pass over the
    /// data (every `n` updates) and at exit. Non-increasing.
    pub dual_objective: Vec<f64>,
    /// Primal objective `1/2 |w|^2 + sum(C_i * hinge_i)` at exit.
    pub primal_objective: f64,
    pub training_accuracy: f64,
    pub support_vectors: usize,
}

impl TrainingReport {
    /// Primal minus dual optimum bound; non-negative and zero at optimality.
    pub fn duality_gap(&self) -> f64 {
        self.primal_objective + self.dual_objective.last().copied().unwrap_or(0.0)
    }
}

impl fmt::Display for TrainingReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} iterations (converged: {}), KKT gap {:.3e}, primal {:.6}, accuracy {:.4}, {} support vectors",
            self.iterations,
            self.converged,
            self.kkt_gap,
            self.primal_objective,
            self.training_accuracy,
            self.support_vectors
        )
    }
}

pub fn train_svm(samples: &[Sample], config: &SvmConfig) -> Result<SvmModel> {
    train_svm_with_report(samples, config).map(|(m, _)| m)
}

pub fn train_svm_with_report(samples: &[Sample], config: &SvmConfig) -> Result<(SvmModel, TrainingReport)> {
    config.validate()?;
    if samples.iter().any(|s| s.x.iter().any(|v| !v.is_finite())) {
        return Err(Error::InvalidData("non-finite feature".into()));
    }
    if let Some(s) = samples.iter().find(|s| s.y != 1 && s.y != -1) {
        return Err(Error::InvalidData(format!("label must be +1 or -1, got {}", s.y)));
    }
    let positives = samples.iter().filter(|s| s.y == 1).count();
    let negatives = samples.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::DegenerateData(format!(
            "need both classes, got {positives} accepted and {negatives} rejected"
        )));
    }

    let standardizer = Standardizer::fit(samples);
    let xs: Vec<Features> = samples.iter().map(|s| standardizer.apply(&s.x)).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.y as f64).collect();
    let n = samples.len() as f64;
    let bounds: Vec<f64> = ys
        .iter()
        .map(|&y| {
            if config.balanced {
                let class = if y > 0.0 { positives } else { negatives } as f64;
                config.c * n / (2.0 * class)
            } else {
                config.c
            }
        })
        .collect();

    let mut solver = Smo::new(&xs, &ys, &bounds);
    let report_inner = solver.solve(config.tolerance, config.max_iterations);
    let (weights, bias) = (solver.w, solver.bias());

    let model = SvmModel {
        weights,
        bias,
        standardizer,
        fingerprint: config.fingerprint(),
    };
    let hinge: f64 = xs
        .iter()
        .zip(&ys)
        .zip(&bounds)
        .map(|((x, y), c)| c * (1.0 - y * (dot(&weights, x) + bias)).max(0.0))
        .sum();
    let correct = samples
        .iter()
        .filter(|s| classify(&model, &s.x).1 == (s.y == 1))
        .count();
    let report = TrainingReport {
        iterations: report_inner.iterations,
        converged: report_inner.converged,
        kkt_gap: report_inner.gap,
        dual_objective: report_inner.dual_trace,
        primal_objective: 0.5 * dot(&weights, &weights) + hinge,
        training_accuracy: correct as f64 / samples.len() as f64,
        support_vectors: solver.alpha.iter().filter(|a| **a > 0.0).count(),
    };
    Ok((model, report))
}

/// Fraction of samples whose predicted decision matches the label.
pub fn accuracy(model: &SvmModel, samples: &[Sample]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let hits = samples.iter().filter(|s| classify(model, &s.x).1 == (s.y == 1)).count();
    hits as f64 / samples.len() as f64
}

fn dot(a: &Features, b: &Features) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

const TAU: f64 = 1e-12;

struct SmoOutcome {
    iterations: usize,
    converged: bool,
    gap: f64,
    dual_trace: Vec<f64>,
}

struct Smo<'a> {
    x: &'a [Features],
    y: &'a [f64],
    c: &'a [f64],
    alpha: Vec<f64>,
    w: Features,
    diag: Vec<f64>,
}

impl<'a> Smo<'a> {
    fn new(x: &'a [Features], y: &'a [f64], c: &'a [f64]) -> Self {
        Smo {
            x,
            y,
            c,
            alpha: vec![0.0; x.len()],
            w: [0.0; FEATURES],
            diag: x.iter().map(|v| dot(v, v)).collect(),
        }
    }

    /// Gradient of the dual objective: `y_t (w . x_t) - 1`.
    fn grad(&self, t: usize) -> f64 {
        self.y[t] * dot(&self.w, &self.x[t]) - 1.0
    }

    fn in_up(&self, t: usize) -> bool {
        (self.y[t] > 0.0 && self.alpha[t] < self.c[t]) || (self.y[t] < 0.0 && self.alpha[t] > 0.0)
    }

    fn in_low(&self, t: usize) -> bool {
        (self.y[t] < 0.0 && self.alpha[t] < self.c[t]) || (self.y[t] > 0.0 && self.alpha[t] > 0.0)
    }

    fn dual_objective(&self) -> f64 {
        0.5 * dot(&self.w, &self.w) - self.alpha.iter().sum::<f64>()
    }

    /// Second-order working set selection. Returns `None` once the maximal
    /// violation is below `tol`, together with the violation.
    #[allow(clippy::needless_range_loop)]
    fn select(&self, grads: &[f64], tol: f64) -> (Option<(usize, usize)>, f64) {
        let mut i = usize::MAX;
        let mut g_max = f64::NEG_INFINITY;
        for t in 0..self.x.len() {
            if self.in_up(t) {
                let v = -self.y[t] * grads[t];
                if v > g_max {
                    g_max = v;
                    i = t;
                }
            }
        }
        let mut j = usize::MAX;
        let mut g_min = f64::INFINITY;
        let mut best = f64::INFINITY;
        if i != usize::MAX {
            let xi = self.x[i];
            for t in 0..self.x.len() {
                if !self.in_low(t) {
                    continue;
                }
                let v = -self.y[t] * grads[t];
                g_min = g_min.min(v);
                let b = g_max - v;
                if b > 0.0 {
                    let mut a = self.diag[i] + self.diag[t] - 2.0 * dot(&xi, &self.x[t]);
                    if a <= 0.0 {
                        a = TAU;
                    }
                    let score = -(b * b) / a;
                    if score < best {
                        best = score;
                        j = t;
                    }
                }
            }
        }
        let gap = g_max - g_min;
        if i == usize::MAX || j == usize::MAX || gap < tol {
            (None, gap.max(0.0))
        } else {
            (Some((i, j)), gap)
        }
    }

    fn update_pair(&mut self, i: usize, j: usize, gi: f64, gj: f64) {
        let (ci, cj) = (self.c[i], self.c[j]);
        let (old_i, old_j) = (self.alpha[i], self.alpha[j]);
        let kij = dot(&self.x[i], &self.x[j]);
        let (mut ai, mut aj) = (old_i, old_j);
        if self.y[i] != self.y[j] {
            let mut quad = self.diag[i] + self.diag[j] + 2.0 * kij * self.y[i] * self.y[j];
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-gi - gj) / quad;
            let diff = ai - aj;
            ai += delta;
            aj += delta;
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = -diff;
            }
            if diff > ci - cj {
                if ai > ci {
                    ai = ci;
                    aj = ci - diff;
                }
            } else if aj > cj {
                aj = cj;
                ai = cj + diff;
            }
        } else {
            let mut quad = self.diag[i] + self.diag[j] - 2.0 * kij * self.y[i] * self.y[j];
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (gi - gj) / quad;
            let sum = ai + aj;
            ai -= delta;
            aj += delta;
            if sum > ci {
                if ai > ci {
                    ai = ci;
                    aj = sum - ci;
                }
            } else if aj < 0.0 {
                aj = 0.0;
                ai = sum;
            }
            if sum > cj {
                if aj > cj {
                    aj = cj;
                    ai = sum - cj;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = sum;
            }
        }
        let (di, dj) = ((ai - old_i) * self.y[i], (aj - old_j) * self.y[j]);
        for k in 0..FEATURES {
            self.w[k] += di * self.x[i][k] + dj * self.x[j][k];
        }
        self.alpha[i] = ai;
        self.alpha[j] = aj;
    }

    fn solve(&mut self, tol: f64, max_iterations: usize) -> SmoOutcome {
        let n = self.x.len();
        let mut grads: Vec<f64> = (0..n).map(|t| self.grad(t)).collect();
        let mut dual_trace = vec![self.dual_objective()];
        let mut iterations = 0;
        let (converged, gap) = loop {
            let (pair, gap) = self.select(&grads, tol);
            let Some((i, j)) = pair else { break (true, gap) };
            if iterations >= max_iterations {
                break (false, gap);
            }
            self.update_pair(i, j, grads[i], grads[j]);
            for (t, g) in grads.iter_mut().enumerate() {
                *g = self.y[t] * dot(&self.w, &self.x[t]) - 1.0;
            }
            iterations += 1;
            if iterations % n == 0 {
                dual_trace.push(self.dual_objective());
            }
        };
        dual_trace.push(self.dual_objective());
        SmoOutcome {
            iterations,
            converged,
            gap,
            dual_trace,
        }
    }

    /// Bias from the free multipliers, or the midpoint of the feasible
    /// interval when every multiplier sits at a bound.
    fn bias(&self) -> f64 {
        let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut free, mut sum) = (0usize, 0.0);
        for t in 0..self.x.len() {
            let yg = self.y[t] * self.grad(t);
            if self.alpha[t] >= self.c[t] {
                if self.y[t] < 0.0 {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else if self.alpha[t] <= 0.0 {
                if self.y[t] > 0.0 {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else {
                free += 1;
                sum += yg;
            }
        }
        let rho = if free > 0 { sum / free as f64 } else { (ub + lb) / 2.0 };
        -rho
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn s(x: Features, y: i8) -> Sample {
        Sample { x, y }
    }

    fn strict() -> SvmConfig {
        SvmConfig {
            c: 1e4,
            ..SvmConfig::default()
        }
    }

    #[test]
    fn collect_maps_labels() {
        assert!(collect_samples(&[]).is_empty());
        let bid = Bid {
            sp_id: 0,
            rate: 5.0,
            price: 25.0,
            bandwidth: 2.0,
            guarantee: 0.9,
        };
        let out = collect_samples(&[(bid, true), (bid, false)]);
        assert_eq!(out, vec![s([5.0, 25.0, 2.0], 1), s([5.0, 25.0, 2.0], -1)]);
    }

    #[test]
    fn two_point_max_margin() {
        // standardised features are (-1, 0, 0) and (1, 0, 0); the analytic
        // solution is w = (1, 0, 0), b = 0
        let data = [s([-1.0, 0.0, 0.0], -1), s([1.0, 0.0, 0.0], 1)];
        let (m, rep) = train_svm_with_report(&data, &strict()).unwrap();
        assert!(rep.converged);
        assert!((m.weights[0] - 1.0).abs() < 1e-6, "{:?}", m.weights);
        assert!(m.weights[1].abs() < 1e-12 && m.weights[2].abs() < 1e-12);
        assert!(m.bias.abs() < 1e-6);
        assert!(m.score(&[1.0, 0.0, 0.0]) >= 1.0 - 1e-6);
        assert!(m.score(&[-1.0, 0.0, 0.0]) <= -1.0 + 1e-6);
        assert!(classify(&m, &[0.5, 0.0, 0.0]).1);
        assert!(!classify(&m, &[-0.5, 0.0, 0.0]).1);
    }

    #[test]
    fn zero_score_is_accepted() {
        let m = SvmModel {
            weights: [1.0, 0.0, 0.0],
            bias: 0.0,
            standardizer: Standardizer {
                mean: [0.0; 3],
                scale: [1.0; 3],
            },
            fingerprint: String::new(),
        };
        assert_eq!(classify(&m, &[0.0, 5.0, 5.0]), (0.0, true));
        assert_eq!(classify(&m, &[0.3, 1.0, 2.0]), classify(&m, &[0.3, 1.0, 2.0]));
    }

    #[test]
    fn degenerate_and_invalid_data() {
        let one = [s([1.0, 2.0, 3.0], 1), s([2.0, 2.0, 3.0], 1)];
        assert!(matches!(
            train_svm(&one, &SvmConfig::default()),
            Err(Error::DegenerateData(_))
        ));
        let nan = [s([f64::NAN, 2.0, 3.0], 1), s([2.0, 2.0, 3.0], -1)];
        assert!(matches!(
            train_svm(&nan, &SvmConfig::default()),
            Err(Error::InvalidData(_))
        ));
        let bad = SvmConfig {
            c: 0.0,
            ..SvmConfig::default()
        };
        assert!(train_svm(&[s([0.0; 3], 1), s([1.0; 3], -1)], &bad).is_err());
    }

    fn separable(seed: u64, n: usize) -> Vec<Sample> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = [
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        ];
        let mut out = Vec::new();
        while out.len() < n {
            let x: Features = [
                rng.random_range(0.0..10.0),
                rng.random_range(0.0..100.0),
                rng.random_range(0.0..5.0),
            ];
            let margin = normal[0] * (x[0] - 5.0) + normal[1] * (x[1] - 50.0) / 10.0 + normal[2] * (x[2] - 2.5) * 2.0;
            if margin.abs() < 0.3 {
                continue;
            }
            out.push(s(x, if margin > 0.0 { 1 } else { -1 }));
        }
        out
    }

    #[test]
    fn separable_data_is_fit_exactly() {
        for seed in 0..3 {
            let data = separable(seed, 200);
            let (m, rep) = train_svm_with_report(&data, &strict()).unwrap();
            assert_eq!(rep.training_accuracy, 1.0, "seed {seed}: {rep}");
            assert!(data.iter().all(|d| d.y as f64 * m.score(&d.x) > 0.0));
        }
    }

    #[test]
    fn flipped_labels_negate_scores() {
        let mut data = separable(11, 120);
        // some label noise so that the solution has bounded multipliers
        for d in data.iter_mut().step_by(17) {
            d.y = -d.y;
        }
        let cfg = SvmConfig::default();
        let m = train_svm(&data, &cfg).unwrap();
        let flipped: Vec<Sample> = data.iter().map(|d| s(d.x, -d.y)).collect();
        let mf = train_svm(&flipped, &cfg).unwrap();
        for d in &data {
            let (a, b) = (m.score(&d.x), mf.score(&d.x));
            assert!((a + b).abs() < 1e-4 * (1.0 + a.abs()), "{a} vs {b}");
        }
    }

    #[test]
    fn deterministic_and_monotone() {
        let mut data = separable(5, 300);
        for d in data.iter_mut().step_by(7) {
            d.y = -d.y;
        }
        let cfg = SvmConfig::default();
        let (a, ra) = train_svm_with_report(&data, &cfg).unwrap();
        let (b, rb) = train_svm_with_report(&data, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(ra, rb);
        assert!(ra.converged);
        for w in ra.dual_objective.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "{} -> {}", w[0], w[1]);
        }
        // certified optimality: tiny duality gap relative to the objective
        assert!(ra.duality_gap() >= -1e-9);
        assert!(
            ra.duality_gap() <= 1e-3 * ra.primal_objective.abs().max(1.0),
            "{}",
            ra.duality_gap()
        );
    }

    #[test]
    fn model_round_trips_through_toml() {
        let data = separable(3, 50);
        let m = train_svm(&data, &SvmConfig::default()).unwrap();
        let back = SvmModel::from_toml(&m.to_toml()).unwrap();
        assert_eq!(m, back);
        assert!(SvmModel::from_toml("weights = [1.0]").is_err());
    }

    #[test]
    fn balanced_weights_change_bounds() {
        let mut data = separable(9, 200);
        for d in data.iter_mut().step_by(5) {
            d.y = -d.y;
        }
        let plain = train_svm(&data, &SvmConfig::default()).unwrap();
        let balanced = train_svm(
            &data,
            &SvmConfig {
                balanced: true,
                ..SvmConfig::default()
            },
        )
        .unwrap();
        assert_ne!(plain.fingerprint, balanced.fingerprint);
    }
}
