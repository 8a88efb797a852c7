//! Shared numerical policy: compensated summation, normalization, and
//! tolerance-aware ranking.
//!
//! Every probability vector in the crate passes through [`normalize`], and every
//! argmax or super-level set goes through [`argmax_set`] / [`ranked_groups`], so
//! rounding and tie handling are decided in exactly one place.

use crate::error::{Error, Result};

/// Tolerance on the sum of a probability vector.
pub const SUM_TOL: f64 = 1e-12;

/// Relative tolerance under which two ranking keys are treated as tied.
pub const TIE_RTOL: f64 = 1e-12;

/// Neumaier compensated summation accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    /// Merge another partial sum, keeping both compensation terms.
    pub fn merge(&mut self, other: KahanSum) {
        self.add(other.sum);
        self.add(other.comp);
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = KahanSum::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

pub fn sum(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().collect::<KahanSum>().value()
}

/// Normalize nonnegative weights to a probability vector, returning the total.
pub fn normalize(weights: &[f64]) -> Result<(Vec<f64>, f64)> {
    if let Some(bad) = weights.iter().position(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::model("weights", format!("entry {bad} is negative or not finite")));
    }
    let total = sum(weights.iter().copied());
    if total <= 0.0 {
        return Err(Error::ZeroEvidence);
    }
    Ok((weights.iter().map(|w| w / total).collect(), total))
}

/// Indices whose value is within `TIE_RTOL` (relative to the maximum) of the maximum.
pub fn argmax_set(values: &[f64]) -> Vec<usize> {
    let Some(max) = values.iter().copied().reduce(f64::max) else {
        return Vec::new();
    };
    let tol = TIE_RTOL * max.abs().max(f64::MIN_POSITIVE);
    values
        .iter()
        .enumerate()
        .filter(|(_, v)| max - **v <= tol)
        .map(|(i, _)| i)
        .collect()
}

/// Indices whose value is within tolerance of the minimum.
pub fn argmin_set(values: &[f64]) -> Vec<usize> {
    let Some(min) = values.iter().copied().reduce(f64::min) else {
        return Vec::new();
    };
    let scale = values.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let tol = TIE_RTOL * scale;
    values
        .iter()
        .enumerate()
        .filter(|(_, v)| **v - min <= tol)
        .map(|(i, _)| i)
        .collect()
}

/// Sort order for [`ranked_groups`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    Descending,
    Ascending,
}

/// Group indices by key in rank order; keys within `TIE_RTOL * max|key|` of a
/// group's leading key join that group.
pub fn ranked_groups(keys: &[f64], order: Order) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..keys.len()).collect();
    idx.sort_by(|&i, &j| {
        let c = keys[i].total_cmp(&keys[j]);
        let c = match order {
            Order::Descending => c.reverse(),
            Order::Ascending => c,
        };
        c.then(i.cmp(&j))
    });
    let scale = keys.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let tol = TIE_RTOL * scale;
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut leader = f64::NAN;
    for i in idx {
        if groups.is_empty() || (keys[i] - leader).abs() > tol {
            leader = keys[i];
            groups.push(vec![i]);
        } else {
            groups.last_mut().expect("nonempty").push(i);
        }
    }
    for g in &mut groups {
        g.sort_unstable();
    }
    groups
}

/// Format with 12 significant digits, plain decimal where reasonable.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        let s = format!("{x:.11e}");
        let (mantissa, exponent) = s.split_once('e').expect("exponent form");
        let mantissa = mantissa.trim_end_matches('0').trim_end_matches('.');
        format!("{mantissa}e{exponent}")
    }
}
