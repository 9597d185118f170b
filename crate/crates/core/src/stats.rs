//! Small statistics helpers.

/// Compensated (Neumaier) sum.
pub fn sum(v: impl IntoIterator<Item = f64>) -> f64 {
    let mut s = 0.0f64;
    let mut c = 0.0f64;
    for x in v {
        let t = s + x;
        if s.abs() >= x.abs() {
            c += (s - t) + x;
        } else {
            c += (x - t) + s;
        }
        s = t;
    }
    s + c
}

pub fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    sum(v.iter().copied()) / v.len() as f64
}

/// Sample standard deviation.
pub fn std_dev(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

/// Least-squares slope of y against x.
pub fn slope(x: &[f64], y: &[f64]) -> f64 {
    let mx = mean(x);
    let my = mean(y);
    let mut num = 0.0;
    let mut den = 0.0;
    for (a, b) in x.iter().zip(y) {
        num += (a - mx) * (b - my);
        den += (a - mx) * (a - mx);
    }
    num / den
}

/// Standard error of the mean of a correlated series, by non-overlapping batch means.
pub fn batch_standard_error(v: &[f64], batches: usize) -> f64 {
    let size = v.len() / batches.max(1);
    if size == 0 || batches < 2 {
        return std_dev(v) / (v.len() as f64).sqrt();
    }
    let means: Vec<f64> = v.chunks_exact(size).take(batches).map(mean).collect();
    std_dev(&means) / (means.len() as f64).sqrt()
}
