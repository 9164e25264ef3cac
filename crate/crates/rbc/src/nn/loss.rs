//! Triplet loss over Euclidean embedding distances, plus binary cross
//! entropy for the CNN baseline.

use super::scalar::Scalar;

pub fn euclidean_distance<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum::<S>()
        .sqrt()
}

#[derive(Debug, Clone)]
pub struct TripletGrads<S> {
    pub loss: S,
    pub d_pos: S,
    pub d_neg: S,
    pub danchor: Vec<S>,
    pub dpositive: Vec<S>,
    pub dnegative: Vec<S>,
}

/// max(d_p - d_n + margin, 0) with gradients w.r.t. all three embeddings.
pub fn triplet_loss<S: Scalar>(
    anchor: &[S],
    positive: &[S],
    negative: &[S],
    margin: S,
) -> TripletGrads<S> {
    debug_assert!(anchor.len() == positive.len() && anchor.len() == negative.len());
    let d_pos = euclidean_distance(anchor, positive);
    let d_neg = euclidean_distance(anchor, negative);
    let raw = d_pos - d_neg + margin;
    let dim = anchor.len();
    if raw <= S::ZERO {
        return TripletGrads {
            loss: S::ZERO,
            d_pos,
            d_neg,
            danchor: vec![S::ZERO; dim],
            dpositive: vec![S::ZERO; dim],
            dnegative: vec![S::ZERO; dim],
        };
    }
    // d||a-p||/da = (a-p)/||a-p||; zero distance gets the zero subgradient.
    let unit = |x: &[S], y: &[S], d: S| -> Vec<S> {
        if d.is_zero() {
            vec![S::ZERO; dim]
        } else {
            x.iter().zip(y).map(|(&xv, &yv)| (xv - yv) / d).collect()
        }
    };
    let pos_dir = unit(anchor, positive, d_pos);
    let neg_dir = unit(anchor, negative, d_neg);
    let danchor = pos_dir
        .iter()
        .zip(&neg_dir)
        .map(|(&p, &n)| p - n)
        .collect();
    let dpositive = pos_dir.iter().map(|&p| -p).collect();
    let dnegative = neg_dir.to_vec();
    TripletGrads {
        loss: raw,
        d_pos,
        d_neg,
        danchor,
        dpositive,
        dnegative,
    }
}

/// Binary cross entropy on a raw logit; returns (loss, dlogit).
pub fn bce_with_logit<S: Scalar>(logit: S, target: S) -> (S, S) {
    let p = super::layers::sigmoid(logit);
    let eps = S::from_f64(1e-12);
    let clamp = |v: S| {
        if v < eps {
            eps
        } else {
            v
        }
    };
    let loss = -(target * ln(clamp(p)) + (S::ONE - target) * ln(clamp(S::ONE - p)));
    (loss, p - target)
}

fn ln<S: Scalar>(x: S) -> S {
    S::from_f64(x.to_f64().ln())
}
