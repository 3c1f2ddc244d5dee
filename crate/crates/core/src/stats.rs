//! Kolmogorov-Smirnov statistics.

/// Asymptotic one-sample KS critical value `1.63 / sqrt(n)`.
pub fn ks_critical(n: usize) -> f64 {
    1.63 / (n as f64).sqrt()
}

/// Two-sample analogue of [`ks_critical`].
pub fn ks_critical_two_sample(n: usize, m: usize) -> f64 {
    let (n, m) = (n as f64, m as f64);
    1.63 * ((n + m) / (n * m)).sqrt()
}

fn sorted(samples: &[f64]) -> Vec<f64> {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

/// One-sample statistic `D = sup |F_n - F|` against the continuous CDF `cdf`.
pub fn ks_one_sample(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let s = sorted(samples);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            ((i + 1) as f64 / n - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

/// Two-sample statistic `D = sup |F_a - F_b|`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let (a, b) = (sorted(a), sorted(b));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}
