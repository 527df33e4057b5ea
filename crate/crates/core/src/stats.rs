//! Small estimators used by the experiments: binomial confidence intervals,
//! least-squares fits, and plug-in information and distance estimates.

use std::collections::BTreeMap;

/// Wilson score interval for `successes` out of `trials` at normal quantile `z`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearFit {
    pub intercept: f64,
    pub slope: f64,
    pub r_squared: f64,
}

/// Ordinary least squares of `y` on `x`. Needs two distinct `x` values.
pub fn linear_fit(points: &[(f64, f64)]) -> Option<LinearFit> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return None;
    }
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Some(LinearFit { intercept, slope, r_squared })
}

fn entropy<K: Ord>(counts: &BTreeMap<K, u64>, total: f64) -> f64 {
    counts
        .values()
        .map(|&c| {
            let p = c as f64 / total;
            -p * p.log2()
        })
        .sum()
}

/// Plug-in mutual information, in bits, between paired samples.
pub fn mutual_information<A: Ord + Clone, B: Ord + Clone>(samples: &[(A, B)]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let total = samples.len() as f64;
    let mut a = BTreeMap::new();
    let mut b = BTreeMap::new();
    let mut joint = BTreeMap::new();
    for (x, y) in samples {
        *a.entry(x.clone()).or_insert(0) += 1;
        *b.entry(y.clone()).or_insert(0) += 1;
        *joint.entry((x.clone(), y.clone())).or_insert(0) += 1;
    }
    (entropy(&a, total) + entropy(&b, total) - entropy(&joint, total)).max(0.0)
}

/// Total-variation distance between two empirical distributions.
pub fn total_variation<K: Ord + Clone>(left: &[K], right: &[K]) -> f64 {
    if left.is_empty() || right.is_empty() {
        return if left.len() == right.len() { 0.0 } else { 1.0 };
    }
    let mut mass: BTreeMap<K, (f64, f64)> = BTreeMap::new();
    for k in left {
        mass.entry(k.clone()).or_default().0 += 1.0 / left.len() as f64;
    }
    for k in right {
        mass.entry(k.clone()).or_default().1 += 1.0 / right.len() as f64;
    }
    0.5 * mass.values().map(|(p, q)| (p - q).abs()).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_contains_estimate() {
        let (lo, hi) = wilson_interval(50, 100, 1.96);
        assert!(lo < 0.5 && hi > 0.5);
        assert!((lo - 0.4038).abs() < 1e-3 && (hi - 0.5962).abs() < 1e-3);
        let (lo0, hi0) = wilson_interval(0, 1000, 1.96);
        assert_eq!(lo0, 0.0);
        assert!(hi0 > 0.0 && hi0 < 0.005);
    }

    #[test]
    fn exact_line_fits_perfectly() {
        let pts: Vec<(f64, f64)> = (0..5).map(|i| (i as f64, 2.0 - 0.5 * i as f64)).collect();
        let fit = linear_fit(&pts).unwrap();
        assert!((fit.slope + 0.5).abs() < 1e-12);
        assert!((fit.intercept - 2.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert!(linear_fit(&[(1.0, 1.0)]).is_none());
    }

    #[test]
    fn information_extremes() {
        let copy: Vec<(u8, u8)> = (0..1000).map(|i| ((i % 2) as u8, (i % 2) as u8)).collect();
        assert!((mutual_information(&copy) - 1.0).abs() < 1e-12);
        let independent: Vec<(u8, u8)> = (0..1000).map(|i| ((i % 2) as u8, ((i / 2) % 2) as u8)).collect();
        assert!(mutual_information(&independent) < 1e-12);
    }

    #[test]
    fn total_variation_extremes() {
        assert_eq!(total_variation(&[1, 2, 3], &[3, 2, 1]), 0.0);
        assert_eq!(total_variation(&[1, 1], &[2, 2]), 1.0);
    }
}
