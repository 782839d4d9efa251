//! Classification metrics and the paired Student t-test.

use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Binary metrics with label 1 as the positive class. A zero denominator
/// yields 0 for precision, recall and F1.
pub fn compute_metrics(predictions: &[Label], truth: &[Label]) -> Result<Metrics> {
    if predictions.len() != truth.len() {
        return Err(Error::LengthMismatch(format!(
            "{} predictions for {} labels",
            predictions.len(),
            truth.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::Config("cannot compute metrics of zero predictions".into()));
    }
    let (mut tp, mut fp, mut fn_, mut correct) = (0usize, 0usize, 0usize, 0usize);
    for (&p, &t) in predictions.iter().zip(truth) {
        correct += usize::from(p == t);
        match (p, t) {
            (Label::Target, Label::Target) => tp += 1,
            (Label::Target, Label::Control) => fp += 1,
            (Label::Control, Label::Target) => fn_ += 1,
            (Label::Control, Label::Control) => {}
        }
    }
    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(Metrics {
        accuracy: ratio(correct, truth.len()),
        precision,
        recall,
        f1,
    })
}

/// 1.0 where the prediction is right, 0.0 elsewhere.
pub fn correctness(predictions: &[Label], truth: &[Label]) -> Vec<f64> {
    predictions
        .iter()
        .zip(truth)
        .map(|(p, t)| if p == t { 1.0 } else { 0.0 })
        .collect()
}

/// Two conditions measured on the same examples, aligned by id.
#[derive(Clone, Debug, PartialEq)]
pub struct PairedSeries {
    ids: Vec<String>,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl PairedSeries {
    /// Fails unless both sides list the same ids in the same order.
    pub fn new(ids_a: &[String], a: Vec<f64>, ids_b: &[String], b: Vec<f64>) -> Result<Self> {
        if ids_a.len() != a.len() || ids_b.len() != b.len() || a.len() != b.len() {
            return Err(Error::LengthMismatch(format!(
                "paired series of unequal length ({} vs {})",
                a.len(),
                b.len()
            )));
        }
        if let Some(k) = ids_a.iter().zip(ids_b).position(|(x, y)| x != y) {
            return Err(Error::LengthMismatch(format!(
                "paired series misaligned at position {k}: {:?} vs {:?}",
                ids_a[k], ids_b[k]
            )));
        }
        Ok(PairedSeries {
            ids: ids_a.to_vec(),
            a,
            b,
        })
    }

    /// Pair two unlabeled series positionally.
    pub fn from_values(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        let ids: Vec<String> = (0..a.len()).map(|i| i.to_string()).collect();
        let ids_b: Vec<String> = (0..b.len()).map(|i| i.to_string()).collect();
        Self::new(&ids, a, &ids_b, b)
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn swapped(&self) -> Self {
        PairedSeries {
            ids: self.ids.clone(),
            a: self.b.clone(),
            b: self.a.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    /// `±inf` when all differences are equal and nonzero.
    #[serde(with = "crate::stats::float_repr")]
    pub t: f64,
    pub df: usize,
    pub p: f64,
    pub mean_diff: f64,
}

/// Paired t-test on `d = a - b`. All-zero differences give `t = 0, p = 1`;
/// constant nonzero differences give `t = ±inf, p = 0`.
pub fn paired_t_test(series: &PairedSeries) -> Result<TTestResult> {
    let n = series.len();
    if n < 2 {
        return Err(Error::TooFewPairs(n));
    }
    let diffs: Vec<f64> = series.a.iter().zip(&series.b).map(|(a, b)| a - b).collect();
    let nf = n as f64;
    let mean = diffs.iter().sum::<f64>() / nf;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    let sd = var.sqrt();
    let df = n - 1;
    let (t, p) = if sd == 0.0 {
        if mean == 0.0 {
            (0.0, 1.0)
        } else {
            (f64::INFINITY.copysign(mean), 0.0)
        }
    } else {
        let t = mean / (sd / nf.sqrt());
        (t, student_t_two_sided_p(t, df))
    };
    Ok(TTestResult {
        t,
        df,
        p,
        mean_diff: mean,
    })
}

/// Two-sided tail probability of Student's t distribution,
/// `I_{df/(df+t^2)}(df/2, 1/2)`.
pub fn student_t_two_sided_p(t: f64, df: usize) -> f64 {
    assert!(df >= 1, "degrees of freedom must be at least 1");
    if t == 0.0 {
        return 1.0;
    }
    if t.is_nan() {
        return f64::NAN;
    }
    let nu = df as f64;
    let t2 = t * t;
    if !t2.is_finite() {
        return 0.0;
    }
    let x = nu / (nu + t2);
    let y = t2 / (nu + t2);
    regularized_incomplete_beta(0.5 * nu, 0.5, x, y).clamp(0.0, 1.0)
}

/// `I_x(a, b)` with `y = 1 - x` supplied by the caller so no precision is lost
/// forming it.
pub fn regularized_incomplete_beta(a: f64, b: f64, x: f64, y: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if y <= 0.0 {
        return 1.0;
    }
    let ln_front = a * x.ln() + b * y.ln() - ln_beta(a, b);
    if x < (a + 1.0) / (a + b + 2.0) {
        ln_front.exp() * beta_continued_fraction(a, b, x) / a
    } else {
        1.0 - ln_front.exp() * beta_continued_fraction(b, a, y) / b
    }
}

/// Modified Lentz evaluation of the incomplete beta continued fraction.
fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    const MAX_ITER: usize = 10_000;
    const EPS: f64 = 1e-16;
    const TINY: f64 = 1e-300;
    let guard = |v: f64| if v.abs() < TINY { TINY } else { v };

    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 / guard(1.0 - qab * x / qap);
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let even = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 / guard(1.0 + even * d);
        c = guard(1.0 + even / c);
        h *= d * c;
        let odd = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 / guard(1.0 + odd * d);
        c = guard(1.0 + odd / c);
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Lanczos approximation (g = 7, 9 terms) with reflection below 1/2.
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut sum = COEF[0];
    for (i, c) in COEF.iter().enumerate().skip(1) {
        sum += c / (x + i as f64);
    }
    let t = x + G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + sum.ln()
}

/// Serialize floats as JSON numbers, with the non-finite values as the
/// strings `"inf"`, `"-inf"` and `"nan"`.
pub(crate) mod float_repr {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Str(s) => match s.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(de::Error::custom(format!("invalid float {other:?}"))),
            },
        }
    }

    pub mod option {
        use serde::{Deserialize, Deserializer, Serializer};

        pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
            match v {
                Some(v) => super::serialize(v, s),
                None => s.serialize_none(),
            }
        }

        #[derive(Deserialize)]
        struct Wrapped(#[serde(with = "super")] f64);

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
            Ok(Option::<Wrapped>::deserialize(d)?.map(|w| w.0))
        }
    }
}
