//! Discrete normal-mixture approximation of the continuous posterior
//! mixtures, with adaptive grid construction.
//!
//! The effect, shrinkage and predictive posteriors are all continuous
//! mixtures of normal conditionals over the heterogeneity `tau`. A finite
//! grid of `tau` support points is built so that every `tau` in the bulk of
//! the mixing distribution stays within a symmetrized Kullback-Leibler
//! divergence `delta` of its cell's node — simultaneously for the effect
//! conditional, all `k` shrinkage conditionals and the predictive
//! conditional (whose variance grows fastest in the upper tail); the grid
//! stops once the remaining tail mass falls below `epsilon`. One shared grid
//! serves every target.

use crate::error::{Error, Result};
use crate::model::{conditional_moments, shrinkage_moments, TauMarginal};
use crate::numerics::{find_root, normal_pdf, std_normal_cdf, Interval, RngStream};
use crate::priors::HeterogeneityPrior;

/// Accuracy control of the grid builder: `delta` bounds the divergence
/// between neighbouring conditionals, `epsilon` the ignored tail mass.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DirectConfig {
    pub delta: f64,
    pub epsilon: f64,
}

impl Default for DirectConfig {
    fn default() -> Self {
        DirectConfig {
            delta: 0.01,
            epsilon: 1e-4,
        }
    }
}

impl DirectConfig {
    pub fn new(delta: f64, epsilon: f64) -> Result<Self> {
        if !(delta > 0.0) || !(epsilon > 0.0) || !(epsilon < 1.0) {
            return Err(Error::domain(format!(
                "grid accuracy parameters need delta > 0 and 0 < epsilon < 1, \
                 got delta = {delta}, epsilon = {epsilon}"
            )));
        }
        Ok(DirectConfig { delta, epsilon })
    }
}

/// Symmetrized Kullback-Leibler divergence between two normal distributions:
/// `(mu_A - mu_B)^2 * (1/sigma_A^2 + 1/sigma_B^2)/2
///  + (sigma_A^2 - sigma_B^2)^2 / (2 sigma_A^2 sigma_B^2)`.
pub fn symmetrized_divergence(mean_a: f64, sd_a: f64, mean_b: f64, sd_b: f64) -> f64 {
    assert!(
        sd_a > 0.0 && sd_b > 0.0,
        "symmetrized_divergence: standard deviations must be positive"
    );
    let va = sd_a * sd_a;
    let vb = sd_b * sd_b;
    let dm = mean_a - mean_b;
    let dv = va - vb;
    dm * dm * 0.5 * (1.0 / va + 1.0 / vb) + dv * dv / (2.0 * va * vb)
}

/// One component of a discrete normal mixture. `sd == 0` marks a point
/// mass, which contributes a step to the CDF and nothing to the density.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MixtureComponent {
    pub weight: f64,
    pub mean: f64,
    pub sd: f64,
}

/// A finite weighted mixture of normal components; the engine's universal
/// posterior representation. Weights are normalized to sum to one at
/// construction.
#[derive(Clone, Debug)]
pub struct NormalMixture {
    components: Vec<MixtureComponent>,
    support_tau: Option<Vec<f64>>,
}

impl NormalMixture {
    pub fn new(components: Vec<MixtureComponent>) -> Result<Self> {
        Self::with_support(components, None)
    }

    fn with_support(
        mut components: Vec<MixtureComponent>,
        support_tau: Option<Vec<f64>>,
    ) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::domain("mixture needs at least one component"));
        }
        if components
            .iter()
            .any(|c| !(c.weight > 0.0) || !c.weight.is_finite() || !(c.sd >= 0.0) || !c.mean.is_finite())
        {
            return Err(Error::domain(
                "mixture components need positive finite weights, finite means and sd >= 0",
            ));
        }
        let sum: f64 = components.iter().map(|c| c.weight).sum();
        if !((sum - 1.0).abs() < 1e-6) {
            return Err(Error::domain(format!(
                "mixture weights must sum to one (got {sum})"
            )));
        }
        for c in &mut components {
            c.weight /= sum;
        }
        Ok(NormalMixture {
            components,
            support_tau,
        })
    }

    pub fn components(&self) -> &[MixtureComponent] {
        &self.components
    }

    /// The `tau` grid the mixture was built on, if grid-derived.
    pub fn support_tau(&self) -> Option<&[f64]> {
        self.support_tau.as_deref()
    }

    /// Mixture density (point-mass components carry no density).
    pub fn density(&self, x: f64) -> f64 {
        self.components
            .iter()
            .filter(|c| c.sd > 0.0)
            .map(|c| c.weight * normal_pdf(x, c.mean, c.sd))
            .sum()
    }

    /// Mixture CDF; point masses contribute a step.
    pub fn cdf(&self, x: f64) -> f64 {
        self.components
            .iter()
            .map(|c| {
                if c.sd > 0.0 {
                    c.weight * std_normal_cdf((x - c.mean) / c.sd)
                } else if x >= c.mean {
                    c.weight
                } else {
                    0.0
                }
            })
            .sum()
    }

    /// Quantile by bracketed root search on the CDF.
    pub fn quantile(&self, p: f64) -> f64 {
        assert!(p > 0.0 && p < 1.0, "quantile: p must lie in (0, 1), got {p}");
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for c in &self.components {
            lo = lo.min(c.mean - 10.0 * c.sd);
            hi = hi.max(c.mean + 10.0 * c.sd);
        }
        if lo == hi {
            return lo;
        }
        // Guard against mass just outside the 10-sigma envelope.
        while self.cdf(lo) > p {
            lo -= (hi - lo).max(1.0);
        }
        while self.cdf(hi) < p {
            hi += (hi - lo).max(1.0);
        }
        let scale = (hi - lo).abs().max(1.0);
        find_root(
            |x| self.cdf(x) - p,
            Interval::new(lo, hi).expect("bracket is ordered"),
            1e-12 * scale,
        )
        .expect("mixture CDF is monotone with a valid bracket")
    }

    /// Mean and standard deviation of the mixture.
    pub fn moments(&self) -> (f64, f64) {
        let mean: f64 = self.components.iter().map(|c| c.weight * c.mean).sum();
        let second: f64 = self
            .components
            .iter()
            .map(|c| c.weight * (c.sd * c.sd + c.mean * c.mean))
            .sum();
        (mean, (second - mean * mean).max(0.0).sqrt())
    }

    /// Draw one value: pick a component by weight, then sample it.
    pub fn sample(&self, rng: &mut RngStream) -> f64 {
        let u = rng.uniform();
        let mut acc = 0.0;
        let mut chosen = &self.components[self.components.len() - 1];
        for c in &self.components {
            acc += c.weight;
            if u <= acc {
                chosen = c;
                break;
            }
        }
        if chosen.sd > 0.0 {
            rng.normal(chosen.mean, chosen.sd)
        } else {
            chosen.mean
        }
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }
}

const MAX_GRID_POINTS: usize = 100_000;

/// Shared support grid over `tau` with cell-mass weights.
#[derive(Clone, Debug)]
pub(crate) struct TauGrid {
    pub taus: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Build the shared grid. `cdf`/`quantile` describe the mixing distribution
/// over `tau`; `tracked` returns the conditional (mean, sd) pairs whose
/// divergence is controlled.
pub(crate) fn build_tau_grid(
    cdf: &dyn Fn(f64) -> f64,
    quantile: &dyn Fn(f64) -> f64,
    tracked: &dyn Fn(f64) -> Vec<(f64, f64)>,
    cfg: &DirectConfig,
) -> Result<TauGrid> {
    let far_quantile = quantile(1.0 - 0.5 * cfg.epsilon.min(0.5));
    let scale = far_quantile.max(f64::MIN_POSITIVE);
    let cap = 16.0 * scale;

    // Nodes and cell boundaries alternate: each boundary sits at divergence
    // delta from the node before it, and each node at divergence delta from
    // the boundary before it. Both edges of a cell are then within delta of
    // the cell's node. The first node is placed at the lower epsilon/2
    // quantile; together with the stop rule this neglects at most epsilon of
    // tail mass on the divergence control.
    let mut taus: Vec<f64> = vec![quantile(0.5 * cfg.epsilon.min(0.5))];
    let mut boundaries: Vec<f64> = vec![0.0];
    loop {
        let node = *taus.last().expect("grid never empty");
        if cdf(node) >= 1.0 - 0.5 * cfg.epsilon {
            break;
        }
        if taus.len() >= MAX_GRID_POINTS {
            return Err(Error::Accuracy {
                message: format!(
                    "grid exceeded {MAX_GRID_POINTS} points before reaching the tail \
                     mass target; accuracy parameters unreachable"
                ),
                best: taus.len() as f64,
            });
        }
        let node_conds = tracked(node);
        let boundary = match divergence_step(node, &node_conds, tracked, cfg.delta, scale, cap)? {
            Some(b) => b,
            // Divergence never reaches delta before far outside the support:
            // the current node already represents the whole tail.
            None => break,
        };
        let boundary_conds = tracked(boundary);
        match divergence_step(boundary, &boundary_conds, tracked, cfg.delta, scale, cap)? {
            Some(next) => {
                boundaries.push(boundary);
                taus.push(next);
            }
            None => break,
        }
    }

    // Cell weights from the boundary masses; first cell starts at zero, the
    // last cell extends to infinity.
    let n = taus.len();
    let mut weights = Vec::with_capacity(n);
    let mut prev_cdf = 0.0;
    for i in 0..n {
        let hi_cdf = if i + 1 < boundaries.len() {
            cdf(boundaries[i + 1])
        } else {
            1.0
        };
        weights.push((hi_cdf - prev_cdf).max(0.0));
        prev_cdf = hi_cdf;
    }
    // Degenerate cells (zero mass) can appear in regions the mixing
    // distribution assigns nothing to; drop them.
    let kept: Vec<(f64, f64)> = taus
        .into_iter()
        .zip(weights)
        .filter(|&(_, w)| w > 0.0)
        .collect();
    if kept.is_empty() {
        return Err(Error::domain(
            "grid construction produced no cells with positive mass",
        ));
    }
    let total: f64 = kept.iter().map(|&(_, w)| w).sum();
    Ok(TauGrid {
        taus: kept.iter().map(|&(t, _)| t).collect(),
        weights: kept.iter().map(|&(_, w)| w / total).collect(),
    })
}

/// Largest `tau > last` with max tracked divergence still below `delta`;
/// `None` when the bound is not reached this side of `cap`.
fn divergence_step(
    last: f64,
    conds_at_last: &[(f64, f64)],
    tracked: &dyn Fn(f64) -> Vec<(f64, f64)>,
    delta: f64,
    scale: f64,
    cap: f64,
) -> Result<Option<f64>> {
    let gap = |tau: f64| -> f64 {
        let conds = tracked(tau);
        conds_at_last
            .iter()
            .zip(&conds)
            .map(|(&(m1, s1), &(m2, s2))| symmetrized_divergence(m1, s1, m2, s2))
            .fold(0.0_f64, f64::max)
            - delta
    };
    let mut step = (scale / 256.0).min(last.max(scale * 1e-9));
    let mut lo = last;
    let mut hi = last + step;
    while gap(hi) <= 0.0 {
        lo = hi;
        step *= 2.0;
        hi = last + step;
        if hi > cap {
            return Ok(None);
        }
    }
    let root = find_root(gap, Interval::new(lo, hi)?, 1e-9 * (hi - lo))?;
    Ok(Some(root))
}

/// Mixtures for every posterior target, sharing one grid.
#[derive(Clone, Debug)]
pub struct PosteriorMixtures {
    pub effect: NormalMixture,
    pub shrinkage: Vec<NormalMixture>,
    pub predictive: NormalMixture,
}

/// Build the shared grid from a normalized `tau` posterior and materialize
/// the effect, shrinkage and predictive mixtures on it.
pub fn posterior_mixtures(marginal: &TauMarginal, cfg: &DirectConfig) -> Result<PosteriorMixtures> {
    let data = marginal.data().clone();
    let eprior = marginal.effect_prior().clone();
    let k = data.k();

    let tracked = |tau: f64| -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(k + 2);
        let cond = conditional_moments(&data, &eprior, tau);
        out.push((cond.mean, cond.sd));
        out.push((cond.mean, (cond.sd * cond.sd + tau * tau).sqrt()));
        for i in 0..k {
            let m = shrinkage_moments(&data, &eprior, i, tau);
            out.push((m.mean, m.sd));
        }
        out
    };
    let cdf = |tau: f64| marginal.cdf(tau);
    let quantile = |p: f64| marginal.quantile(p);

    let grid = build_tau_grid(&cdf, &quantile, &tracked, cfg)?;

    let component = |tau: f64, weight: f64, which: Option<usize>| {
        let m = match which {
            None => conditional_moments(&data, &eprior, tau),
            Some(i) => shrinkage_moments(&data, &eprior, i, tau),
        };
        MixtureComponent {
            weight,
            mean: m.mean,
            sd: m.sd,
        }
    };

    let effect = NormalMixture::with_support(
        grid.taus
            .iter()
            .zip(&grid.weights)
            .map(|(&t, &w)| component(t, w, None))
            .collect(),
        Some(grid.taus.clone()),
    )?;

    let predictive = NormalMixture::with_support(
        grid.taus
            .iter()
            .zip(&grid.weights)
            .map(|(&t, &w)| {
                let cond = conditional_moments(&data, &eprior, t);
                MixtureComponent {
                    weight: w,
                    mean: cond.mean,
                    sd: (cond.sd * cond.sd + t * t).sqrt(),
                }
            })
            .collect(),
        Some(grid.taus.clone()),
    )?;

    let shrinkage = (0..k)
        .map(|i| {
            NormalMixture::with_support(
                grid.taus
                    .iter()
                    .zip(&grid.weights)
                    .map(|(&t, &w)| component(t, w, Some(i)))
                    .collect(),
                Some(grid.taus.clone()),
            )
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(PosteriorMixtures {
        effect,
        shrinkage,
        predictive,
    })
}

/// Mixture of `N(mean, tau^2)` with `tau` drawn from a proper prior — the
/// prior predictive distribution of a study-specific true effect.
pub fn scale_normal_mixture(
    mixing: &HeterogeneityPrior,
    mean: f64,
    cfg: &DirectConfig,
) -> Result<NormalMixture> {
    if !mixing.is_proper() {
        return Err(Error::capability(format!(
            "{} prior is improper and cannot serve as a mixing distribution",
            mixing.name()
        )));
    }
    let cdf = |tau: f64| mixing.cdf(tau).unwrap_or(f64::NAN);
    let quantile = |p: f64| {
        mixing
            .quantile(p)
            .expect("proper prior has a quantile function")
    };
    let tracked = |tau: f64| vec![(mean, tau)];
    let grid = build_tau_grid(&cdf, &quantile, &tracked, cfg)?;
    NormalMixture::with_support(
        grid.taus
            .iter()
            .zip(&grid.weights)
            .map(|(&t, &w)| MixtureComponent {
                weight: w,
                mean,
                sd: t,
            })
            .collect(),
        Some(grid.taus.clone()),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{tau_marginal, Dataset};
    use crate::priors::EffectPrior;
    use approx::assert_abs_diff_eq;

    fn crins() -> Dataset {
        use crate::effects::{escalc, ContingencyTable, EffectMeasure};
        let tables = [
            ("Heffron (2003)", 14u64, 61u64, 15u64, 20u64),
            ("Gibelli (2004)", 16, 28, 19, 28),
            ("Schuller (2005)", 3, 18, 8, 12),
            ("Ganschow (2005)", 9, 54, 29, 54),
            ("Spada (2006)", 4, 36, 11, 36),
            ("Gras (2008)", 0, 50, 3, 34),
        ];
        Dataset::new(
            tables
                .iter()
                .map(|&(l, et, nt, ec, nc)| {
                    escalc(
                        &ContingencyTable::from_totals(l, et, nt, ec, nc).unwrap(),
                        EffectMeasure::log_or(),
                    )
                    .unwrap()
                })
                .collect(),
        )
        .unwrap()
    }

    fn crins_marginal() -> crate::model::TauMarginal {
        tau_marginal(
            &crins(),
            &EffectPrior::normal(0.0, 4.0).unwrap(),
            &HeterogeneityPrior::half_normal(0.5).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn divergence_reference_values() {
        assert_eq!(symmetrized_divergence(0.0, 1.0, 0.0, 1.0), 0.0);
        assert_abs_diff_eq!(
            symmetrized_divergence(0.0, 1.0, 1.0, 1.0),
            1.0,
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(
            symmetrized_divergence(0.0, 1.0, 0.0, 2.0),
            1.125,
            epsilon = 1e-14
        );
        // symmetry
        assert_eq!(
            symmetrized_divergence(0.3, 0.7, -0.2, 1.4),
            symmetrized_divergence(-0.2, 1.4, 0.3, 0.7)
        );
    }

    #[test]
    fn single_component_collapses_to_normal() {
        let m = NormalMixture::new(vec![MixtureComponent {
            weight: 1.0,
            mean: 0.0,
            sd: 1.0,
        }])
        .unwrap();
        assert_abs_diff_eq!(m.cdf(1.959964), 0.975, epsilon = 1e-6);
        let (mean, sd) = m.moments();
        assert_eq!(mean, 0.0);
        assert_eq!(sd, 1.0);
    }

    #[test]
    fn point_mass_component_steps_the_cdf() {
        let m = NormalMixture::new(vec![
            MixtureComponent {
                weight: 0.25,
                mean: 1.0,
                sd: 0.0,
            },
            MixtureComponent {
                weight: 0.75,
                mean: 0.0,
                sd: 1.0,
            },
        ])
        .unwrap();
        assert!(m.cdf(0.999) < m.cdf(1.0));
        assert_abs_diff_eq!(m.cdf(1.0) - m.cdf(0.999), 0.25, epsilon = 1e-3);
        assert_eq!(m.density(1.0), 0.75 * crate::numerics::normal_pdf(1.0, 0.0, 1.0));
        let (mean, _) = m.moments();
        assert_abs_diff_eq!(mean, 0.25, epsilon = 1e-15);
    }

    #[test]
    fn two_equal_components_moments() {
        let m = NormalMixture::new(vec![
            MixtureComponent {
                weight: 0.5,
                mean: -1.0,
                sd: 1.0,
            },
            MixtureComponent {
                weight: 0.5,
                mean: 1.0,
                sd: 1.0,
            },
        ])
        .unwrap();
        let (mean, sd) = m.moments();
        assert_abs_diff_eq!(mean, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(sd * sd, 2.0, epsilon = 1e-14);
    }

    #[test]
    fn crins_effect_mixture_component_count() {
        let marg = crins_marginal();
        let mixtures = posterior_mixtures(&marg, &DirectConfig::default()).unwrap();
        let n = mixtures.effect.len();
        assert!(
            (12..=25).contains(&n),
            "expected roughly 17 components, got {n}"
        );
        // quantile round trip on the effect mixture
        for p in [0.025, 0.5, 0.975] {
            let q = mixtures.effect.quantile(p);
            assert_abs_diff_eq!(mixtures.effect.cdf(q), p, epsilon = 1e-8);
        }
    }

    #[test]
    fn grid_weights_and_ordering() {
        let marg = crins_marginal();
        let mixtures = posterior_mixtures(&marg, &DirectConfig::default()).unwrap();
        let taus = mixtures.effect.support_tau().unwrap();
        for pair in taus.windows(2) {
            assert!(pair[0] < pair[1]);
        }
        let total: f64 = mixtures
            .effect
            .components()
            .iter()
            .map(|c| c.weight)
            .sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
        // predictive sd dominates effect sd componentwise
        for (e, p) in mixtures
            .effect
            .components()
            .iter()
            .zip(mixtures.predictive.components())
        {
            assert!(p.sd >= e.sd);
            assert_eq!(p.mean, e.mean);
        }
    }

    #[test]
    fn infinite_delta_gives_single_component() {
        let marg = crins_marginal();
        let cfg = DirectConfig {
            delta: f64::INFINITY,
            epsilon: 1e-4,
        };
        let mixtures = posterior_mixtures(&marg, &cfg).unwrap();
        assert_eq!(mixtures.effect.len(), 1);
        // the mixture is exactly the conditional at the retained node
        let tau0 = mixtures.effect.support_tau().unwrap()[0];
        let cond = conditional_moments(marg.data(), marg.effect_prior(), tau0);
        let c = &mixtures.effect.components()[0];
        assert_eq!(c.mean, cond.mean);
        assert_eq!(c.sd, cond.sd);
    }

    #[test]
    fn halving_delta_does_not_reduce_components() {
        let marg = crins_marginal();
        let mut prev = 0;
        for delta in [0.04, 0.02, 0.01, 0.005] {
            let cfg = DirectConfig {
                delta,
                epsilon: 1e-4,
            };
            let n = posterior_mixtures(&marg, &cfg).unwrap().effect.len();
            assert!(
                n >= prev,
                "component count dropped from {prev} to {n} at delta {delta}"
            );
            prev = n;
        }
    }

    #[test]
    fn effect_mixture_cdf_matches_quadrature_oracle() {
        use crate::numerics::{integrate, normal_cdf, Interval};
        let marg = crins_marginal();
        let mixtures = posterior_mixtures(&marg, &DirectConfig::default()).unwrap();
        let data = crins();
        let eprior = EffectPrior::normal(0.0, 4.0).unwrap();
        let oracle_cdf = |x: f64| {
            integrate(
                |t| {
                    let c = conditional_moments(&data, &eprior, t);
                    normal_cdf(x, c.mean, c.sd) * marg.density(t)
                },
                Interval::new(0.0, marg.upper_bound()).unwrap(),
                1e-9,
                1e-12,
            )
            .unwrap()
            .value
        };
        for i in 0..21 {
            let x = -3.5 + i as f64 * (1.0 - -3.5) / 20.0;
            assert_abs_diff_eq!(mixtures.effect.cdf(x), oracle_cdf(x), epsilon = 0.005);
        }
    }

    #[test]
    fn prior_predictive_quantiles() {
        let cfg = DirectConfig::default();
        let hn05 = scale_normal_mixture(
            &HeterogeneityPrior::half_normal(0.5).unwrap(),
            0.0,
            &cfg,
        )
        .unwrap();
        assert_abs_diff_eq!(hn05.quantile(0.975), 1.092287, epsilon = 5e-3);
        let hn10 = scale_normal_mixture(
            &HeterogeneityPrior::half_normal(1.0).unwrap(),
            0.0,
            &cfg,
        )
        .unwrap();
        assert_abs_diff_eq!(hn10.quantile(0.975), 2.184573, epsilon = 5e-3);
        let hc05 = scale_normal_mixture(
            &HeterogeneityPrior::half_cauchy(0.5).unwrap(),
            0.0,
            &cfg,
        )
        .unwrap();
        assert_abs_diff_eq!(hc05.quantile(0.975), 5.050571, epsilon = 5e-3);
    }

    #[test]
    fn improper_mixing_distribution_is_rejected() {
        let err = scale_normal_mixture(
            &HeterogeneityPrior::uniform(),
            0.0,
            &DirectConfig::default(),
        );
        assert!(matches!(err, Err(Error::Capability(_))));
    }

    #[test]
    fn sampling_tracks_cdf() {
        let marg = crins_marginal();
        let mixtures = posterior_mixtures(&marg, &DirectConfig::default()).unwrap();
        let mut rng = RngStream::new(5);
        let n = 10_000;
        let mut draws: Vec<f64> = (0..n).map(|_| mixtures.effect.sample(&mut rng)).collect();
        draws.sort_by(f64::total_cmp);
        let mut d: f64 = 0.0;
        for (i, x) in draws.iter().enumerate() {
            let f = mixtures.effect.cdf(*x);
            d = d
                .max((f - (i + 1) as f64 / n as f64).abs())
                .max((f - i as f64 / n as f64).abs());
        }
        assert!(d < 0.02, "Kolmogorov distance {d}");
    }
}
