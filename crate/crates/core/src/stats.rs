//! Numeric helpers shared by the models: normal and Student-t distribution
//! functions, one-sided truncated normal sampling and sample summaries.

use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use statrs::function::beta::beta_reg;
use statrs::function::erf::{erfc, erfc_inv};

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

pub fn normal_quantile(p: f64) -> f64 {
    assert!((0.0..=1.0).contains(&p), "probability out of range: {p}");
    -std::f64::consts::SQRT_2 * erfc_inv(2.0 * p)
}

/// Student-t CDF for possibly non-integer degrees of freedom.
pub fn t_cdf(t: f64, df: f64) -> f64 {
    if df.is_infinite() {
        return normal_cdf(t);
    }
    let x = df / (df + t * t);
    let tail = 0.5 * beta_reg(0.5 * df, 0.5, x);
    if t >= 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// Student-t quantile by bracketing and bisection on the regularized
/// incomplete beta representation of the CDF. Infinite `df` gives the normal
/// quantile.
pub fn t_quantile(p: f64, df: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "probability out of range: {p}");
    assert!(df > 0.0, "degrees of freedom must be positive");
    if df.is_infinite() {
        return normal_quantile(p);
    }
    if df > 1e5 {
        // Cornish-Fisher expansion; the bisection loses digits out here as
        // the beta function flattens
        let z = normal_quantile(p);
        let z3 = z * z * z;
        let z5 = z3 * z * z;
        return z + (z3 + z) / (4.0 * df) + (5.0 * z5 + 16.0 * z3 + 3.0 * z) / (96.0 * df * df);
    }
    if p == 0.5 {
        return 0.0;
    }
    if p < 0.5 {
        return -t_quantile(1.0 - p, df);
    }
    let mut lo = 0.0;
    let mut hi = normal_quantile(p).max(1.0);
    while t_cdf(hi, df) < p {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if t_cdf(mid, df) < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi.max(1.0) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Draws `x ~ N(0, 1)` conditioned on `x >= lower`.
///
/// Plain rejection when the bound is at or below zero (acceptance >= 1/2),
/// otherwise the translated-exponential proposal with the optimal rate.
pub fn std_normal_above<R: Rng + ?Sized>(lower: f64, rng: &mut R) -> f64 {
    if lower <= 0.0 {
        loop {
            let x: f64 = StandardNormal.sample(rng);
            if x >= lower {
                return x;
            }
        }
    }
    let rate = 0.5 * (lower + (lower * lower + 4.0).sqrt());
    let exp = Exp::new(rate).expect("positive rate");
    loop {
        let z = lower + exp.sample(rng);
        let rho = (-0.5 * (z - rate) * (z - rate)).exp();
        if rng.random::<f64>() <= rho {
            return z;
        }
    }
}

/// Latent draw for probit augmentation: `N(mean, 1)` truncated to the
/// positive half-line when `positive`, to the negative one otherwise.
pub fn truncated_normal_by_sign<R: Rng + ?Sized>(mean: f64, positive: bool, rng: &mut R) -> f64 {
    if positive {
        mean + std_normal_above(-mean, rng)
    } else {
        mean - std_normal_above(mean, rng)
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance (denominator `n - 1`); zero for fewer than two values.
pub fn sample_variance(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64
}

/// Linear-interpolation quantile of already sorted data (the usual "type 7").
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn quantile(xs: &[f64], p: f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    quantile_sorted(&v, p)
}

pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
