use statrs::distribution::{Binomial, DiscreteCDF};

/// Mean and population standard deviation; `(NaN, NaN)` when empty.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    (m, v.sqrt())
}

pub fn median(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[k] } else { 0.5 * (v[k - 1] + v[k]) })
}

/// Pearson correlation; `None` if either side is constant up to rounding.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    let (ma, _) = mean_std(a);
    let (mb, _) = mean_std(b);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    let n = a.len() as f64;
    let flat = |ss: f64, m: f64| (ss / n).sqrt() <= 1e-12 * m.abs().max(1.0);
    if flat(saa, ma) || flat(sbb, mb) {
        return None;
    }
    Some((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

/// Average ranks (1-based), ties sharing the mean of their positions.
fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&i, &j| xs[i].total_cmp(&xs[j]));
    let mut r = vec![0.0; xs.len()];
    let mut s = 0;
    while s < idx.len() {
        let mut e = s;
        while e + 1 < idx.len() && xs[idx[e + 1]] == xs[idx[s]] {
            e += 1;
        }
        let avg = (s + e) as f64 / 2.0 + 1.0;
        for &i in &idx[s..=e] {
            r[i] = avg;
        }
        s = e + 1;
    }
    r
}

pub fn spearman(a: &[f64], b: &[f64]) -> Option<f64> {
    pearson(&ranks(a), &ranks(b))
}

/// One-sided sign test: probability of at least `wins` successes out of
/// `trials` fair coin flips.
pub fn sign_test(wins: usize, trials: usize) -> f64 {
    if trials == 0 || wins == 0 {
        return 1.0;
    }
    let b = Binomial::new(0.5, trials as u64).expect("valid binomial");
    1.0 - b.cdf(wins as u64 - 1)
}
