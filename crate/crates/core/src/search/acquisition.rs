use statrs::function::erf::erfc;

/// Expected improvement over `incumbent` for a Gaussian prediction
/// (maximisation form). With `sigma = 0` this is `max(mu - incumbent, 0)`.
pub fn expected_improvement(mu: f64, sigma: f64, incumbent: f64) -> f64 {
    let gap = mu - incumbent;
    if sigma <= 0.0 {
        return gap.max(0.0);
    }
    let u = gap / sigma;
    let cdf = 0.5 * erfc(-u / std::f64::consts::SQRT_2);
    let pdf = (-0.5 * u * u).exp() / (2.0 * std::f64::consts::PI).sqrt();
    (gap * cdf + sigma * pdf).max(0.0)
}
