//! Likelihood, marginal likelihood, conditional moments, and the normalized
//! marginal posterior of the heterogeneity.
//!
//! Conditional on `tau` the effect posterior is normal, so the marginal
//! likelihood `p(y | tau)` has a closed form under both supported effect
//! priors. Multiplying by the heterogeneity prior gives the unnormalized
//! `tau` posterior; only its normalizing constant requires quadrature.

use crate::effects::EffectEstimate;
use crate::error::{Error, Result};
use crate::numerics::{
    find_root, integrate, integrate_cells, minimize_scalar, Cell, Interval, RngStream,
};
use crate::priors::{EffectPrior, HeterogeneityPrior, StandardErrorContext};

const LN_2PI: f64 = 1.837877066409345483560659472811;

/// The study estimates entering an analysis.
#[derive(Clone, Debug)]
pub struct Dataset {
    estimates: Vec<EffectEstimate>,
}

impl Dataset {
    pub fn new(estimates: Vec<EffectEstimate>) -> Result<Self> {
        if estimates.is_empty() {
            return Err(Error::domain("dataset needs at least one estimate"));
        }
        Ok(Dataset { estimates })
    }

    /// Convenience constructor from parallel slices; labels are generated.
    pub fn from_values(ys: &[f64], sigmas: &[f64]) -> Result<Self> {
        if ys.len() != sigmas.len() {
            return Err(Error::domain("y and sigma slices differ in length"));
        }
        let estimates = ys
            .iter()
            .zip(sigmas)
            .enumerate()
            .map(|(i, (&y, &s))| EffectEstimate::new(format!("study {}", i + 1), y, s))
            .collect::<Result<Vec<_>>>()?;
        Dataset::new(estimates)
    }

    pub fn k(&self) -> usize {
        self.estimates.len()
    }

    pub fn estimates(&self) -> &[EffectEstimate] {
        &self.estimates
    }

    pub fn ys(&self) -> impl Iterator<Item = f64> + '_ {
        self.estimates.iter().map(|e| e.y)
    }

    pub fn sigmas(&self) -> impl Iterator<Item = f64> + '_ {
        self.estimates.iter().map(|e| e.sigma)
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.estimates.iter().map(|e| e.label.as_str())
    }

    pub fn index_of_label(&self, label: &str) -> Option<usize> {
        self.estimates.iter().position(|e| e.label == label)
    }

    pub fn std_error_context(&self) -> StandardErrorContext {
        StandardErrorContext::new(self.sigmas().collect())
            .expect("dataset sigmas are validated at construction")
    }

    /// Largest plausible heterogeneity scale for bracketing optimizers:
    /// ten times the larger of the biggest standard error and the sample
    /// range of the estimates.
    pub(crate) fn tau_scale(&self) -> f64 {
        let max_sigma = self.sigmas().fold(0.0_f64, f64::max);
        let (lo, hi) = self
            .ys()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), y| {
                (lo.min(y), hi.max(y))
            });
        10.0 * max_sigma.max(hi - lo)
    }
}

/// Mean and standard deviation of a conditional normal posterior.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConditionalMoments {
    pub mean: f64,
    pub sd: f64,
}

/// Joint log-likelihood
/// `-(k/2) log(2 pi) - 1/2 sum_i [log(sigma_i^2 + tau^2) + (y_i - mu)^2/(sigma_i^2 + tau^2)]`.
pub fn log_likelihood(data: &Dataset, mu: f64, tau: f64) -> f64 {
    debug_assert!(tau >= 0.0);
    let t2 = tau * tau;
    let mut acc = 0.0;
    for e in data.estimates() {
        let v = e.sigma * e.sigma + t2;
        let r = e.y - mu;
        acc += v.ln() + r * r / v;
    }
    -0.5 * (data.k() as f64 * LN_2PI + acc)
}

/// Conditional posterior mean and standard deviation of the effect given
/// `tau`. Under the normal prior, the prior enters exactly like one more
/// study with variance `sd^2` (and no `tau` contribution); `tau = 0`
/// reproduces the classical fixed-effect estimate.
pub fn conditional_moments(data: &Dataset, prior: &EffectPrior, tau: f64) -> ConditionalMoments {
    debug_assert!(tau >= 0.0);
    let t2 = tau * tau;
    let (mut wsum, mut wysum) = match prior {
        EffectPrior::Uniform => (0.0, 0.0),
        EffectPrior::Normal { mean, sd } => {
            let w = 1.0 / (sd * sd);
            (w, w * mean)
        }
    };
    for e in data.estimates() {
        let w = 1.0 / (e.sigma * e.sigma + t2);
        wsum += w;
        wysum += w * e.y;
    }
    ConditionalMoments {
        mean: wysum / wsum,
        sd: (1.0 / wsum).sqrt(),
    }
}

/// Weighted sum of squared residuals about the conditional mean,
/// `Delta(tau) = sum_i (y_i - mu_cond)^2 / (sigma_i^2 + tau^2)`.
///
/// Always computed in this centered form; the algebraically equivalent
/// `a - b^2/(4c)` expression cancels catastrophically for large |y|.
fn weighted_residual_sum(data: &Dataset, cond_mean: f64, tau: f64) -> f64 {
    let t2 = tau * tau;
    data.estimates()
        .iter()
        .map(|e| {
            let r = e.y - cond_mean;
            r * r / (e.sigma * e.sigma + t2)
        })
        .sum()
}

/// Log marginal likelihood `log p(y | tau)` with the effect integrated out
/// under its prior.
///
/// Uniform prior (defined up to a constant):
/// `-1/2 [ (k-1) log(2 pi) + sum_i(log v_i + (y_i - mu_cond)^2/v_i) + log(sum_i 1/v_i) ]`.
///
/// Normal prior `N(m, s^2)`:
/// `-1/2 [ k log(2 pi) + log s^2 + sum_i log v_i + (m - mu_cond)^2/s^2
///         + sum_i (y_i - mu_cond)^2/v_i + log(1/s^2 + sum_i 1/v_i) ]`.
pub fn log_marginal_likelihood(data: &Dataset, prior: &EffectPrior, tau: f64) -> f64 {
    debug_assert!(tau >= 0.0);
    let t2 = tau * tau;
    let k = data.k() as f64;
    let cond = conditional_moments(data, prior, tau);
    let mut log_det = 0.0;
    let mut wsum = 0.0;
    for e in data.estimates() {
        let v = e.sigma * e.sigma + t2;
        log_det += v.ln();
        wsum += 1.0 / v;
    }
    let delta = weighted_residual_sum(data, cond.mean, tau);
    match prior {
        EffectPrior::Uniform => {
            -0.5 * ((k - 1.0) * LN_2PI + log_det + delta + wsum.ln())
        }
        EffectPrior::Normal { mean, sd } => {
            let s2 = sd * sd;
            let rp = mean - cond.mean;
            -0.5 * (k * LN_2PI
                + s2.ln()
                + log_det
                + rp * rp / s2
                + delta
                + (1.0 / s2 + wsum).ln())
        }
    }
}

/// Conditional moments of a study-specific mean `theta_j` given `tau`, with
/// the effect integrated out:
/// mean `(tau^2 y_j + sigma_j^2 mu_cond) / (sigma_j^2 + tau^2)`,
/// variance `sigma_j^2 tau^2/(sigma_j^2 + tau^2) + (sigma_j^2/(sigma_j^2 + tau^2))^2 sd_cond^2`.
///
/// These are the shrinkage estimates: `tau = 0` collapses onto the common
/// mean, `tau -> inf` returns the study's own `(y_j, sigma_j)`.
pub fn shrinkage_moments(
    data: &Dataset,
    prior: &EffectPrior,
    index: usize,
    tau: f64,
) -> ConditionalMoments {
    assert!(index < data.k(), "shrinkage index out of range");
    let cond = conditional_moments(data, prior, tau);
    let e = &data.estimates()[index];
    let s2 = e.sigma * e.sigma;
    let t2 = tau * tau;
    let denom = s2 + t2;
    let mean = (t2 * e.y + s2 * cond.mean) / denom;
    let var = s2 * t2 / denom + (s2 / denom) * (s2 / denom) * cond.sd * cond.sd;
    ConditionalMoments {
        mean,
        sd: var.sqrt(),
    }
}

/// Unnormalized log posterior of the heterogeneity:
/// `log p(y | tau) + log p(tau)`.
pub fn tau_log_posterior_unnorm(
    data: &Dataset,
    effect_prior: &EffectPrior,
    heterogeneity_prior: &HeterogeneityPrior,
    tau: f64,
) -> f64 {
    if tau < 0.0 {
        return f64::NEG_INFINITY;
    }
    log_marginal_likelihood(data, effect_prior, tau) + heterogeneity_prior.log_density(tau)
}

/// The normalized marginal posterior of `tau`: density, CDF, quantile,
/// sampler, moments and the log normalizing constant (the model evidence
/// when both priors are proper).
///
/// The CDF is backed by the final subdivision of the adaptive quadrature run
/// that normalized the density, refined locally by one fixed Gauss-Kronrod
/// pass per evaluation.
#[derive(Clone, Debug)]
pub struct TauMarginal {
    data: Dataset,
    effect_prior: EffectPrior,
    heterogeneity_prior: HeterogeneityPrior,
    log_scale: f64,
    mode: f64,
    upper: f64,
    cells: Vec<Cell>,
    cum: Vec<f64>,
    total: f64,
    mean: f64,
    sd: f64,
}

/// Check the minimum-`k` propriety rules for a prior pairing and build the
/// normalized `tau` posterior.
pub fn tau_marginal(
    data: &Dataset,
    effect_prior: &EffectPrior,
    heterogeneity_prior: &HeterogeneityPrior,
) -> Result<TauMarginal> {
    let k = data.k();
    check_propriety(k, effect_prior, heterogeneity_prior)?;

    let log_post = |tau: f64| {
        tau_log_posterior_unnorm(data, effect_prior, heterogeneity_prior, tau)
    };

    // Locate the mode (finite reference point for scaling). Scan a grid of
    // candidate points — linear over the data scale, plus prior quantiles so
    // that sharply concentrated priors are not stepped over — then refine by
    // golden section between the best point's neighbours.
    let scan_upper = data.tau_scale();
    let mut points: Vec<f64> = (0..=400)
        .map(|i| scan_upper * i as f64 / 400.0)
        .collect();
    if heterogeneity_prior.is_proper() {
        for i in 1..=60 {
            let p = i as f64 / 61.0;
            if let Ok(q) = heterogeneity_prior.quantile(p) {
                points.push(q);
            }
        }
        if let Ok(q) = heterogeneity_prior.quantile(0.99999) {
            points.push(q);
        }
    }
    points.sort_by(f64::total_cmp);
    points.dedup();
    let mut best_idx = 0;
    let mut best_val = f64::NEG_INFINITY;
    let mut pole_at_zero = false;
    for (i, &tau) in points.iter().enumerate() {
        let v = log_post(tau);
        if v == f64::INFINITY {
            // Integrable pole (power priors with negative exponent).
            pole_at_zero = true;
            continue;
        }
        if v > best_val {
            best_val = v;
            best_idx = i;
        }
    }
    if !best_val.is_finite() {
        return Err(Error::propriety(format!(
            "posterior for tau is degenerate under the {} prior",
            heterogeneity_prior.name()
        )));
    }
    let bracket_lo = if best_idx == 0 {
        0.0
    } else {
        points[best_idx - 1]
    };
    let bracket_hi = if best_idx + 1 < points.len() {
        points[best_idx + 1]
    } else {
        points[best_idx] * 2.0 + scan_upper / 400.0
    };
    let (mode, neg_max) = minimize_scalar(
        |t| -log_post(t),
        Interval::new(bracket_lo, bracket_hi)?,
        1e-10,
    )?;
    let mut mode = mode;
    let mut log_scale = -neg_max;
    // Ties resolve toward the boundary: monotone decreasing posteriors have
    // their mode exactly at zero.
    let at_zero = log_post(0.0);
    if (pole_at_zero && at_zero == f64::INFINITY) || at_zero >= log_scale - 1e-9 {
        mode = 0.0;
        if at_zero.is_finite() {
            log_scale = log_scale.max(at_zero);
        }
    }

    // Extend the integration bound until the density is negligible relative
    // to the mode and the remaining tail mass is provably small. Start from
    // the largest candidate with non-negligible density so that posteriors
    // far tighter than the data scale keep a well-resolved domain.
    let mut upper = points
        .iter()
        .copied()
        .filter(|&t| t > mode && log_post(t) - log_scale > (1e-12_f64).ln())
        .fold(mode, f64::max)
        .max(mode * 2.0);
    if upper <= 0.0 {
        upper = scan_upper.max(1e-12);
    }
    let mut doublings = 0;
    while (log_post(upper) - log_scale) > (1e-12_f64).ln() {
        upper *= 2.0;
        doublings += 1;
        if doublings > 200 {
            return Err(Error::propriety(format!(
                "tau posterior does not decay: the {} prior apparently yields an \
                 improper posterior for k = {k}",
                heterogeneity_prior.name()
            )));
        }
    }

    let scaled = |t: f64| (log_post(t) - log_scale).exp();
    let (mut cells, mut total);
    loop {
        let (result, cs) = integrate_cells(scaled, 0.0, upper, 1e-10, 0.0).map_err(|e| {
            match e {
                Error::Accuracy { message, .. } => Error::propriety(format!(
                    "could not normalize the tau posterior under the {} prior: {message}",
                    heterogeneity_prior.name()
                )),
                other => other,
            }
        })?;
        cells = cs;
        total = result.value;
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::propriety(format!(
                "tau posterior normalization is not finite under the {} prior",
                heterogeneity_prior.name()
            )));
        }
        // Tail mass estimate beyond the cutoff.
        let tail = integrate(
            scaled,
            Interval::new(upper, f64::INFINITY)?,
            1e-4,
            1e-14 * total,
        )
        .map(|r| r.value)
        .unwrap_or(f64::INFINITY);
        if tail < 1e-10 * total {
            break;
        }
        upper *= 4.0;
        doublings += 1;
        if doublings > 210 {
            return Err(Error::propriety(format!(
                "tau posterior tail does not vanish under the {} prior",
                heterogeneity_prior.name()
            )));
        }
    }

    let mut cum = Vec::with_capacity(cells.len() + 1);
    let mut acc = 0.0;
    cum.push(0.0);
    for c in &cells {
        acc += c.value;
        cum.push(acc);
    }

    // Moments over the cached cells.
    let mean_num: f64 = cells
        .iter()
        .map(|c| crate::numerics::gk15_cell(&|t: f64| t * scaled(t), c.lo, c.hi))
        .sum();
    let mean = mean_num / total;
    let var_num: f64 = cells
        .iter()
        .map(|c| {
            crate::numerics::gk15_cell(&|t: f64| (t - mean) * (t - mean) * scaled(t), c.lo, c.hi)
        })
        .sum();
    let sd = (var_num / total).sqrt();

    Ok(TauMarginal {
        data: data.clone(),
        effect_prior: effect_prior.clone(),
        heterogeneity_prior: heterogeneity_prior.clone(),
        log_scale,
        mode,
        upper,
        cells,
        cum,
        total,
        mean,
        sd,
    })
}

fn check_propriety(
    k: usize,
    effect_prior: &EffectPrior,
    heterogeneity_prior: &HeterogeneityPrior,
) -> Result<()> {
    if !effect_prior.is_proper() && k < 2 {
        return Err(Error::propriety(
            "the improper uniform effect prior needs k >= 2 studies",
        ));
    }
    match heterogeneity_prior.min_studies(effect_prior.is_proper()) {
        None => Err(Error::propriety(format!(
            "the {} prior never yields a proper posterior",
            heterogeneity_prior.name()
        ))),
        Some(min_k) if k < min_k => Err(Error::propriety(format!(
            "{} tau prior needs k >= {min_k} with {} effect prior, got k = {k}",
            heterogeneity_prior.name(),
            if effect_prior.is_proper() {
                "a proper"
            } else {
                "an improper"
            },
        ))),
        Some(_) => Ok(()),
    }
}

impl TauMarginal {
    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn effect_prior(&self) -> &EffectPrior {
        &self.effect_prior
    }

    pub fn heterogeneity_prior(&self) -> &HeterogeneityPrior {
        &self.heterogeneity_prior
    }

    /// Posterior density at `tau`.
    pub fn density(&self, tau: f64) -> f64 {
        if tau < 0.0 {
            return 0.0;
        }
        let lp = tau_log_posterior_unnorm(
            &self.data,
            &self.effect_prior,
            &self.heterogeneity_prior,
            tau,
        );
        (lp - self.log_scale).exp() / self.total
    }

    fn scaled_density(&self, tau: f64) -> f64 {
        let lp = tau_log_posterior_unnorm(
            &self.data,
            &self.effect_prior,
            &self.heterogeneity_prior,
            tau,
        );
        (lp - self.log_scale).exp()
    }

    /// Posterior CDF at `tau`.
    pub fn cdf(&self, tau: f64) -> f64 {
        if tau <= 0.0 {
            return 0.0;
        }
        if tau >= self.upper {
            return 1.0;
        }
        let idx = self
            .cells
            .partition_point(|c| c.hi <= tau)
            .min(self.cells.len() - 1);
        let cell = &self.cells[idx];
        let partial = crate::numerics::gk15_cell(&|t: f64| self.scaled_density(t), cell.lo, tau);
        ((self.cum[idx] + partial) / self.total).clamp(0.0, 1.0)
    }

    /// Posterior quantile; inverts the CDF by bracketed root search inside
    /// the quadrature cell containing the target mass.
    pub fn quantile(&self, p: f64) -> f64 {
        assert!(p > 0.0 && p < 1.0, "quantile: p must lie in (0, 1), got {p}");
        let target = p * self.total;
        let idx = match self.cum.binary_search_by(|c| c.total_cmp(&target)) {
            Ok(i) => i.min(self.cells.len() - 1),
            Err(i) => (i.max(1) - 1).min(self.cells.len() - 1),
        };
        let cell = &self.cells[idx];
        let f = |t: f64| self.cdf(t) - p;
        let tol = 1e-11 * self.upper.max(1.0);
        match find_root(f, Interval::new(cell.lo, cell.hi).expect("cell is an interval"), tol) {
            Ok(root) => root,
            // CDF is flat at the tolerance level inside this cell.
            Err(_) => 0.5 * (cell.lo + cell.hi),
        }
    }

    /// Draw from the posterior by inverse CDF.
    pub fn sample(&self, rng: &mut RngStream) -> f64 {
        self.quantile(rng.uniform())
    }

    /// Posterior mode (ties toward smaller `tau`).
    pub fn mode(&self) -> f64 {
        self.mode
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn sd(&self) -> f64 {
        self.sd
    }

    /// Log of the normalizing constant `integral of p(y|tau) p(tau) dtau`.
    /// With proper effect and heterogeneity priors this is the log model
    /// evidence `log p(y)`.
    pub fn log_normalization(&self) -> f64 {
        self.log_scale + self.total.ln()
    }

    /// Upper end of the numerical support (CDF is 1 beyond this point).
    pub fn upper_bound(&self) -> f64 {
        self.upper
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    pub(crate) fn crins_dataset() -> Dataset {
        use crate::effects::{escalc, ContingencyTable, EffectMeasure};
        let tables = [
            ("Heffron (2003)", 14, 61, 15, 20),
            ("Gibelli (2004)", 16, 28, 19, 28),
            ("Schuller (2005)", 3, 18, 8, 12),
            ("Ganschow (2005)", 9, 54, 29, 54),
            ("Spada (2006)", 4, 36, 11, 36),
            ("Gras (2008)", 0, 50, 3, 34),
        ];
        let estimates = tables
            .iter()
            .map(|&(label, et, nt, ec, nc)| {
                let t = ContingencyTable::from_totals(label, et, nt, ec, nc).unwrap();
                escalc(&t, EffectMeasure::log_or()).unwrap()
            })
            .collect();
        Dataset::new(estimates).unwrap()
    }

    #[test]
    fn log_likelihood_single_study() {
        let data = Dataset::from_values(&[0.0], &[1.0]).unwrap();
        assert_abs_diff_eq!(
            log_likelihood(&data, 0.0, 0.0),
            -0.9189385,
            epsilon = 1e-7
        );
    }

    #[test]
    fn log_likelihood_translation_invariance() {
        let data = Dataset::from_values(&[0.3, -1.2, 0.8], &[0.5, 0.7, 1.1]).unwrap();
        let shifted =
            Dataset::from_values(&[0.3 + 5.0, -1.2 + 5.0, 0.8 + 5.0], &[0.5, 0.7, 1.1]).unwrap();
        for tau in [0.0, 0.4, 2.0] {
            assert_abs_diff_eq!(
                log_likelihood(&data, 0.1, tau),
                log_likelihood(&shifted, 0.1 + 5.0, tau),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn conditional_moments_single_study() {
        let data = Dataset::from_values(&[1.7], &[0.6]).unwrap();
        for tau in [0.0, 0.5, 2.0] {
            let m = conditional_moments(&data, &EffectPrior::Uniform, tau);
            assert_abs_diff_eq!(m.mean, 1.7, epsilon = 1e-14);
            assert_abs_diff_eq!(m.sd, (0.36 + tau * tau).sqrt(), epsilon = 1e-14);
        }
    }

    #[test]
    fn vague_normal_prior_approaches_uniform() {
        let data = crins_dataset();
        let vague = EffectPrior::normal(0.0, 1e6).unwrap();
        for tau in [0.0, 0.3, 1.0] {
            let a = conditional_moments(&data, &EffectPrior::Uniform, tau);
            let b = conditional_moments(&data, &vague, tau);
            assert_abs_diff_eq!(a.mean, b.mean, epsilon = 1e-6);
            assert_abs_diff_eq!(a.sd, b.sd, epsilon = 1e-6);
        }
    }

    #[test]
    fn crins_conditional_moments_at_reml() {
        let data = crins_dataset();
        let m = conditional_moments(&data, &EffectPrior::Uniform, 0.4670268);
        assert_abs_diff_eq!(m.mean, -1.591513, epsilon = 1e-6);
        assert_abs_diff_eq!(m.sd, 0.3340882, epsilon = 1e-6);
    }

    #[test]
    fn marginal_likelihood_argmax_matches_reml() {
        let data = crins_dataset();
        let (tau, _) = minimize_scalar(
            |t| -log_marginal_likelihood(&data, &EffectPrior::Uniform, t),
            Interval::new(0.0, 3.0).unwrap(),
            1e-10,
        )
        .unwrap();
        assert_abs_diff_eq!(tau, 0.4670268, epsilon = 1e-4);

        let prior = EffectPrior::normal(0.0, 4.0).unwrap();
        let (tau, _) = minimize_scalar(
            |t| -log_marginal_likelihood(&data, &prior, t),
            Interval::new(0.0, 3.0).unwrap(),
            1e-10,
        )
        .unwrap();
        assert_abs_diff_eq!(tau, 0.46441292, epsilon = 1e-4);
    }

    #[test]
    fn marginal_likelihood_against_quadrature_oracle() {
        // Direct numerical marginalization of the likelihood over mu must
        // match the closed form.
        let data = crins_dataset();
        let prior = EffectPrior::normal(0.5, 2.0).unwrap();
        for tau in [0.0, 0.3, 1.1] {
            let direct = integrate(
                |mu| {
                    (log_likelihood(&data, mu, tau)
                        + crate::numerics::normal_log_pdf(mu, 0.5, 2.0))
                    .exp()
                },
                Interval::new(f64::NEG_INFINITY, f64::INFINITY).unwrap(),
                1e-10,
                0.0,
            )
            .unwrap();
            let closed = log_marginal_likelihood(&data, &prior, tau).exp();
            assert_abs_diff_eq!(direct.value / closed, 1.0, epsilon = 1e-6);
        }
    }

    #[test]
    fn uniform_is_large_sd_limit_of_normal_marginal() {
        let data = crins_dataset();
        let vague = EffectPrior::normal(0.0, 1e6).unwrap();
        let offset = log_marginal_likelihood(&data, &vague, 0.2)
            - log_marginal_likelihood(&data, &EffectPrior::Uniform, 0.2);
        for tau in [0.0, 0.1, 0.5, 1.5, 4.0] {
            let d = log_marginal_likelihood(&data, &vague, tau)
                - log_marginal_likelihood(&data, &EffectPrior::Uniform, tau);
            assert_abs_diff_eq!(d, offset, epsilon = 1e-6);
        }
    }

    #[test]
    fn homogeneous_two_studies_marginal_decreases() {
        let data = Dataset::from_values(&[0.7, 0.7], &[0.4, 0.4]).unwrap();
        let mut prev = log_marginal_likelihood(&data, &EffectPrior::Uniform, 0.0);
        for i in 1..60 {
            let tau = i as f64 * 0.05;
            let v = log_marginal_likelihood(&data, &EffectPrior::Uniform, tau);
            assert!(v < prev, "marginal should strictly decrease, tau = {tau}");
            prev = v;
        }
    }

    #[test]
    fn shrinkage_limits() {
        let data = crins_dataset();
        let prior = EffectPrior::normal(0.0, 4.0).unwrap();
        let at_zero = shrinkage_moments(&data, &prior, 0, 0.0);
        let cond = conditional_moments(&data, &prior, 0.0);
        assert_abs_diff_eq!(at_zero.mean, cond.mean, epsilon = 1e-12);
        assert_abs_diff_eq!(at_zero.sd, cond.sd, epsilon = 1e-12);

        let far = shrinkage_moments(&data, &prior, 0, 1e8);
        let e = &data.estimates()[0];
        assert_abs_diff_eq!(far.mean, e.y, epsilon = 1e-6);
        assert_abs_diff_eq!(far.sd, e.sigma, epsilon = 1e-6);
    }

    #[test]
    fn crins_tau_marginal_summaries() {
        let data = crins_dataset();
        let eprior = EffectPrior::normal(0.0, 4.0).unwrap();
        let hprior = HeterogeneityPrior::half_normal(0.5).unwrap();
        let marg = tau_marginal(&data, &eprior, &hprior).unwrap();
        assert_abs_diff_eq!(marg.mode(), 0.2453139, epsilon = 1e-4);
        assert_abs_diff_eq!(marg.quantile(0.5), 0.3445022, epsilon = 1e-4);
        assert_abs_diff_eq!(marg.mean(), 0.3810562, epsilon = 1e-4);
        assert_abs_diff_eq!(marg.sd(), 0.2593672, epsilon = 1e-4);
        assert_abs_diff_eq!(marg.quantile(0.99), 1.109186, epsilon = 1e-3);
        assert_abs_diff_eq!(1.0 - marg.cdf(1.0), 0.02097488, epsilon = 5e-4);
    }

    #[test]
    fn tau_marginal_cdf_quantile_consistency() {
        let data = crins_dataset();
        let eprior = EffectPrior::normal(0.0, 4.0).unwrap();
        let hprior = HeterogeneityPrior::half_normal(0.5).unwrap();
        let marg = tau_marginal(&data, &eprior, &hprior).unwrap();
        assert_eq!(marg.cdf(0.0), 0.0);
        assert_eq!(marg.cdf(1e9), 1.0);
        let mut prev = 0.0;
        for i in 1..40 {
            let t = i as f64 * 0.05;
            let c = marg.cdf(t);
            assert!(c >= prev);
            prev = c;
        }
        for p in [0.01, 0.1, 0.5, 0.9, 0.99] {
            assert_abs_diff_eq!(marg.cdf(marg.quantile(p)), p, epsilon = 1e-6);
        }
        // density integrates to one
        let total = integrate(
            |t| marg.density(t),
            Interval::new(0.0, marg.upper_bound()).unwrap(),
            1e-9,
            0.0,
        )
        .unwrap();
        assert_abs_diff_eq!(total.value, 1.0, epsilon = 1e-7);
    }

    #[test]
    fn tau_marginal_translation_equivariance() {
        let data = crins_dataset();
        let shifted = Dataset::new(
            data.estimates()
                .iter()
                .map(|e| EffectEstimate::new(e.label.clone(), e.y + 3.0, e.sigma).unwrap())
                .collect(),
        )
        .unwrap();
        let eprior = EffectPrior::normal(0.0, 4.0).unwrap();
        let eprior_shift = EffectPrior::normal(3.0, 4.0).unwrap();
        let hprior = HeterogeneityPrior::half_normal(0.5).unwrap();
        let a = tau_marginal(&data, &eprior, &hprior).unwrap();
        let b = tau_marginal(&shifted, &eprior_shift, &hprior).unwrap();
        for t in [0.1, 0.4, 0.9] {
            assert_abs_diff_eq!(a.density(t), b.density(t), epsilon = 1e-8);
        }
        let ca = conditional_moments(&data, &eprior, 0.5);
        let cb = conditional_moments(&shifted, &eprior_shift, 0.5);
        assert_abs_diff_eq!(cb.mean - ca.mean, 3.0, epsilon = 1e-10);
    }

    #[test]
    fn propriety_rules_are_enforced() {
        let two = Dataset::from_values(&[0.1, 0.5], &[0.4, 0.6]).unwrap();
        // uniform tau prior needs k >= 3 with improper effect prior
        let err = tau_marginal(&two, &EffectPrior::Uniform, &HeterogeneityPrior::uniform());
        assert!(matches!(err, Err(Error::Propriety(_))), "{err:?}");
        // log-uniform never yields a proper posterior
        let err = tau_marginal(
            &two,
            &EffectPrior::normal(0.0, 4.0).unwrap(),
            &HeterogeneityPrior::power(-1.0),
        );
        assert!(matches!(err, Err(Error::Propriety(_))));
        // single study with improper effect prior
        let one = Dataset::from_values(&[0.1], &[0.4]).unwrap();
        let err = tau_marginal(
            &one,
            &EffectPrior::Uniform,
            &HeterogeneityPrior::half_normal(0.5).unwrap(),
        );
        assert!(matches!(err, Err(Error::Propriety(_))));
    }

    #[test]
    fn uniform_prior_posterior_works_for_three_studies() {
        let data = Dataset::from_values(&[0.1, 0.6, -0.4], &[0.3, 0.5, 0.4]).unwrap();
        let marg = tau_marginal(&data, &EffectPrior::Uniform, &HeterogeneityPrior::uniform())
            .unwrap();
        assert!(marg.quantile(0.5) > 0.0);
    }

    #[test]
    fn sqrt_power_prior_pole_is_integrable() {
        let data = crins_dataset();
        let marg = tau_marginal(
            &data,
            &EffectPrior::normal(0.0, 4.0).unwrap(),
            &HeterogeneityPrior::power(-0.5),
        )
        .unwrap();
        assert_eq!(marg.mode(), 0.0);
        assert!(marg.cdf(0.2) > 0.0);
    }
}
