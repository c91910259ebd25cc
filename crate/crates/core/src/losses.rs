//! Multiclass surrogate losses `ℓ: ℝ^c × {0..c−1} → ℝ₊`.
//!
//! Four standard choices, each with values, (sub)gradients in the score
//! vector, and the ∞-norm Lipschitz constant used by the bound module:
//!
//! | kind                 | ℓ(a, y)                          | L  | ℓ(0, y) |
//! |----------------------|----------------------------------|----|---------|
//! | Crammer–Singer       | max_{j≠y}(1 − a_y + a_j)₊        | 1  | 1       |
//! | multinomial logistic | log Σ_j exp(a_j − a_y)           | 1  | ln c    |
//! | Weston–Watkins       | Σ_{j≠y}(1 − a_y + a_j)₊          | c  | c − 1   |
//! | Lee                  | Σ_{j≠y}(1 + a_j)₊                | c  | c − 1   |
//!
//! All four are convex in the scores. Subgradient conventions: the
//! Crammer–Singer argmax breaks ties toward the lowest class index, and the
//! hinge losses count every violating class.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Loss family tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    CrammerSinger,
    MultinomialLogistic,
    WestonWatkins,
    Lee,
}

impl LossKind {
    /// ∞-norm Lipschitz constant of the loss in its first argument, as a
    /// function of the class count.
    pub fn lipschitz(self, c: usize) -> f64 {
        match self {
            LossKind::CrammerSinger | LossKind::MultinomialLogistic => 1.0,
            LossKind::WestonWatkins | LossKind::Lee => c as f64,
        }
    }

    /// `ℓ(0, y)`, constant over y (the quantity `B_Y = sup_y ℓ(0, y)`).
    pub fn loss_at_zero(self, c: usize) -> f64 {
        match self {
            LossKind::CrammerSinger => 1.0,
            LossKind::MultinomialLogistic => (c as f64).ln(),
            LossKind::WestonWatkins | LossKind::Lee => (c - 1) as f64,
        }
    }

    /// Whether the loss is differentiable everywhere.
    pub fn is_smooth(self) -> bool {
        matches!(self, LossKind::MultinomialLogistic)
    }
}

impl std::fmt::Display for LossKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            LossKind::CrammerSinger => "crammer_singer",
            LossKind::MultinomialLogistic => "multinomial_logistic",
            LossKind::WestonWatkins => "weston_watkins",
            LossKind::Lee => "lee",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "crammer_singer" | "cs" => Ok(LossKind::CrammerSinger),
            "multinomial_logistic" | "mlr" | "logistic" => Ok(LossKind::MultinomialLogistic),
            "weston_watkins" | "ww" => Ok(LossKind::WestonWatkins),
            "lee" => Ok(LossKind::Lee),
            other => Err(Error::InvalidParam(format!("unknown loss kind '{other}'"))),
        }
    }
}

fn check(a: &[f64], y: usize) -> Result<()> {
    if a.len() < 2 {
        return Err(Error::InvalidParam(format!("need at least 2 classes, got {}", a.len())));
    }
    if y >= a.len() {
        return Err(Error::LabelOutOfRange { label: y, classes: a.len() });
    }
    Ok(())
}

/// Loss value at score vector `a` for true class `y`.
pub fn loss_value(kind: LossKind, a: &[f64], y: usize) -> Result<f64> {
    check(a, y)?;
    Ok(value_unchecked(kind, a, y))
}

/// A valid subgradient in the first argument (the exact gradient for the
/// multinomial logistic loss).
pub fn loss_grad(kind: LossKind, a: &[f64], y: usize) -> Result<Vec<f64>> {
    check(a, y)?;
    let mut g = vec![0.0; a.len()];
    grad_unchecked(kind, a, y, &mut g);
    Ok(g)
}

/// Value and subgradient in one pass (the solver's hot path).
pub fn loss_value_grad(kind: LossKind, a: &[f64], y: usize, grad: &mut [f64]) -> Result<f64> {
    check(a, y)?;
    if grad.len() != a.len() {
        return Err(Error::DimensionMismatch(grad.len(), a.len()));
    }
    let v = value_unchecked(kind, a, y);
    grad_unchecked(kind, a, y, grad);
    Ok(v)
}

pub(crate) fn value_unchecked(kind: LossKind, a: &[f64], y: usize) -> f64 {
    match kind {
        LossKind::CrammerSinger => {
            let mut best = 0.0f64;
            for (j, &aj) in a.iter().enumerate() {
                if j != y {
                    best = best.max(1.0 - a[y] + aj);
                }
            }
            best
        }
        LossKind::MultinomialLogistic => {
            let m = a.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = m + a.iter().map(|&v| (v - m).exp()).sum::<f64>().ln();
            lse - a[y]
        }
        LossKind::WestonWatkins => a
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != y)
            .map(|(_, &aj)| (1.0 - a[y] + aj).max(0.0))
            .sum(),
        LossKind::Lee => a
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != y)
            .map(|(_, &aj)| (1.0 + aj).max(0.0))
            .sum(),
    }
}

pub(crate) fn grad_unchecked(kind: LossKind, a: &[f64], y: usize, g: &mut [f64]) {
    g.fill(0.0);
    match kind {
        LossKind::CrammerSinger => {
            let mut best = f64::NEG_INFINITY;
            let mut best_j = usize::MAX;
            for (j, &aj) in a.iter().enumerate() {
                if j != y && aj > best {
                    best = aj;
                    best_j = j;
                }
            }
            if 1.0 - a[y] + best > 0.0 {
                g[best_j] = 1.0;
                g[y] = -1.0;
            }
        }
        LossKind::MultinomialLogistic => {
            let m = a.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut sum = 0.0;
            for (gj, &aj) in g.iter_mut().zip(a) {
                let e = (aj - m).exp();
                *gj = e;
                sum += e;
            }
            for gj in g.iter_mut() {
                *gj /= sum;
            }
            g[y] -= 1.0;
        }
        LossKind::WestonWatkins => {
            let mut violators = 0.0;
            for (j, &aj) in a.iter().enumerate() {
                if j != y && 1.0 - a[y] + aj > 0.0 {
                    g[j] = 1.0;
                    violators += 1.0;
                }
            }
            g[y] = -violators;
        }
        LossKind::Lee => {
            for (j, &aj) in a.iter().enumerate() {
                if j != y && 1.0 + aj > 0.0 {
                    g[j] = 1.0;
                }
            }
        }
    }
}

/// All loss kinds, in a fixed order (handy for iterating in tests and CLI
/// listings).
pub const ALL_KINDS: [LossKind; 4] = [
    LossKind::CrammerSinger,
    LossKind::MultinomialLogistic,
    LossKind::WestonWatkins,
    LossKind::Lee,
];
