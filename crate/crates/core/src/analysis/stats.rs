//! Small statistics helpers for Monte-Carlo comparisons.

/// One-sided 95% normal quantile.
pub const Z_95_ONE_SIDED: f64 = 1.6449;
/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.96;

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Unbiased sample variance.
pub fn variance(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64
}

/// Normal-approximation 95% confidence interval of the mean.
pub fn mean_ci(v: &[f64]) -> (f64, f64, f64) {
    let m = mean(v);
    let h = Z_95 * (variance(v) / v.len() as f64).sqrt();
    (m, m - h, m + h)
}

pub fn intervals_overlap(a: (f64, f64, f64), b: (f64, f64, f64)) -> bool {
    a.1 <= b.2 && b.1 <= a.2
}

/// Paired z statistic of `mean(a - b)`; large positive values mean `a > b`.
pub fn paired_z(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let se = (variance(&d) / d.len() as f64).sqrt();
    let m = mean(&d);
    if se == 0.0 {
        return if m > 0.0 { f64::INFINITY } else if m < 0.0 { f64::NEG_INFINITY } else { 0.0 };
    }
    m / se
}

/// Average ranks, ties sharing the mean rank.
pub fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    pearson(&ranks(x), &ranks(y))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_correlation() {
        assert!((spearman(&[1.0, 2.0, 3.0, 4.0], &[10.0, 20.0, 25.0, 100.0]) - 1.0).abs() < 1e-12);
        assert!((spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]) + 1.0).abs() < 1e-12);
        assert_eq!(ranks(&[5.0, 1.0, 5.0]), vec![2.5, 1.0, 2.5]);
    }

    #[test]
    fn paired() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let b = [0.5, 1.4, 2.6, 3.3];
        assert!(paired_z(&a, &b) > Z_95_ONE_SIDED);
        assert!(paired_z(&b, &a) < 0.0);
        let (m, lo, hi) = mean_ci(&a);
        assert!(lo < m && m < hi && (m - 2.5).abs() < 1e-12);
    }
}
