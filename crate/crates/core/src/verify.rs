//! Checks of the interval inequalities on random configurations, of the
//! Schwarz and Koebe bounds on the branches of a built nest, decay fits for
//! the nest geometry, and consistency of orders and ranks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{sampled_distortion, QuadraticMap, DEFAULT_SAMPLES};
use crate::error::{Error, Result};
use crate::geometry::{dynamic_rank, orders, LevelGeometry, ReturnGraph};
use crate::hyperbolic::{
    asymmetric_length, composition_bound, composition_bound_star, cross_ratio_length, poincare_length,
    quadratic_pullback_config, random_configuration, random_positive_configuration, GapConfiguration, Interval,
    Side,
};
use crate::nest::{NestResult, ReturnClass, Termination};
use crate::precision::PrecisionContext;
use crate::scalar::Real;

/// A single evaluated inequality `lhs <= rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub inputs: Vec<String>,
    pub lhs: String,
    pub rhs: String,
    /// `rhs - lhs`; negative for a violation.
    pub margin: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Positive,
    Negative,
}

/// A least-squares line `quantity ≈ slope · regressor + intercept`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    pub quantity: String,
    pub regressor: String,
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual.
    pub residual: f64,
    pub points: usize,
    pub required: Sign,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub trials: usize,
    pub violations: usize,
    /// The trial with the smallest margin (the first violation found, if any).
    pub worst: Option<Witness>,
    pub fits: Vec<Fit>,
    /// Trials that could not be evaluated.
    pub skipped: usize,
    pub notes: Vec<String>,
    pub pass: bool,
}

impl SuiteReport {
    fn new(suite: &str) -> Self {
        Self {
            suite: suite.to_string(),
            trials: 0,
            violations: 0,
            worst: None,
            fits: Vec::new(),
            skipped: 0,
            notes: Vec::new(),
            pass: false,
        }
    }

    fn record(&mut self, outcome: Option<Witness>) {
        self.trials += 1;
        let Some(w) = outcome else {
            self.skipped += 1;
            return;
        };
        if w.margin < 0.0 {
            self.violations += 1;
        }
        if self.worst.as_ref().is_none_or(|b| w.margin < b.margin) {
            self.worst = Some(w);
        }
    }

    fn finish(mut self) -> Self {
        self.pass = self.violations == 0 && self.fits.iter().all(|f| f.ok);
        self
    }

    /// Folds another report's trials into this one.
    pub fn absorb(&mut self, other: SuiteReport) {
        self.trials += other.trials;
        self.violations += other.violations;
        self.skipped += other.skipped;
        if let Some(w) = other.worst {
            if self.worst.as_ref().is_none_or(|b| w.margin < b.margin) {
                self.worst = Some(w);
            }
        }
        self.fits.extend(other.fits);
        self.notes.extend(other.notes);
        self.pass = self.violations == 0 && self.fits.iter().all(|f| f.ok);
    }
}

fn witness<T: Real>(inputs: &[&T], lhs: &T, rhs: &T, slack: &T) -> Witness {
    let margin = rhs.clone() + slack.clone() - lhs.clone();
    Witness {
        inputs: inputs.iter().map(|x| x.to_decimal(24)).collect(),
        lhs: lhs.to_decimal(24),
        rhs: rhs.to_decimal(24),
        margin: margin.to_f64(),
    }
}

fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

/// Runs `trial` for `0..trials` in parallel and folds the outcomes in
/// trial order, so the report does not depend on scheduling.
fn run_trials<F>(suite: &str, trials: usize, trial: F) -> SuiteReport
where
    F: Fn(usize) -> Vec<Option<Witness>> + Sync + Send,
{
    let outcomes: Vec<Vec<Option<Witness>>> = (0..trials).into_par_iter().map(trial).collect();
    let mut report = SuiteReport::new(suite);
    for o in outcomes.into_iter().flatten() {
        report.record(o);
    }
    report.finish()
}

/// Places a copy of `cfg` affinely onto `[outer.u, outer.v]`.
fn inside_gap<T: Real>(cfg: &GapConfiguration<T>, outer: &GapConfiguration<T>) -> Result<GapConfiguration<T>> {
    let s = (outer.v.clone() - outer.u.clone()) / (cfg.b.clone() - cfg.a.clone());
    let q = outer.u.clone() - s.clone() * cfg.a.clone();
    GapConfiguration::new(
        outer.u.clone(),
        s.clone() * cfg.u.clone() + q.clone(),
        s * cfg.v.clone() + q,
        outer.v.clone(),
    )
}

fn composition_trial<T: Real>(inner: &GapConfiguration<T>, outer: &GapConfiguration<T>, slack: &T) -> Vec<Option<Witness>> {
    let inputs = [&outer.a, &inner.u, &inner.v, &outer.b, &outer.u, &outer.v];
    let plain = composition_bound(inner, outer)
        .ok()
        .map(|(l, r)| witness(&inputs, &l, &r, slack));
    let star = composition_bound_star(inner, outer)
        .ok()
        .map(|(l, r)| witness(&inputs, &l, &r, slack));
    vec![plain, star]
}

/// `P(I|L) <= P(I|T) P(T|L) / 2` and `P(I|L) <= P(I|T) P*(T|L)` on random
/// nested triples `I ⊂ T ⊂ L`, with additive slack `2^-(bits-16)`.
pub fn check_composition_lemma<T: Real>(trials: usize, seed: u64, ctx: PrecisionContext) -> SuiteReport {
    let slack: T = ctx.slack(16);
    let mut report = run_trials("composition", trials, |i| {
        let mut rng = trial_rng(seed, i);
        let outer: GapConfiguration<T> = random_configuration(&mut rng, ctx.bits, 6.0);
        let raw: GapConfiguration<T> = random_configuration(&mut rng, ctx.bits, 6.0);
        match inside_gap(&raw, &outer) {
            Ok(inner) => composition_trial(&inner, &outer, &slack),
            Err(_) => vec![None, None],
        }
    });
    report.absorb(composition_sweep::<T>(ctx));
    report.notes.push("each trial checks both the plain and the P* form".into());
    report
}

/// Symmetric triples with `P(T|L)` approaching 1 from below, where the two
/// forms of the composition bound meet.
pub fn composition_sweep<T: Real>(ctx: PrecisionContext) -> SuiteReport {
    let bits = ctx.bits;
    let slack: T = ctx.slack(16);
    let one = T::from_f64_at(1.0, bits);
    let mut report = SuiteReport::new("composition_sweep");
    for k in 1..=40 {
        // P([-t, t] | [-1, 1]) = 4 artanh t, so t = tanh(P / 4).
        let p = one.clone() - T::pow2(-k, bits);
        let e = (p / T::from_f64_at(2.0, bits)).exp();
        let t = (e.clone() - one.clone()) / (e + one.clone());
        for s in [0.1, 0.5, 0.9, 0.99] {
            for shift in [0.0, 0.5] {
                let s = T::from_f64_at(s, bits);
                let w = t.clone() * s;
                let centre = (t.clone() - w.clone()) * T::from_f64_at(shift, bits);
                let outer = GapConfiguration::new(-one.clone(), -t.clone(), t.clone(), one.clone());
                let inner = outer.as_ref().ok().and_then(|o| {
                    GapConfiguration::new(
                        o.u.clone(),
                        centre.clone() - w.clone(),
                        centre.clone() + w.clone(),
                        o.v.clone(),
                    )
                    .ok()
                });
                match (outer, inner) {
                    (Ok(o), Some(i)) => {
                        for w in composition_trial(&i, &o, &slack) {
                            report.record(w);
                        }
                    }
                    _ => {
                        report.record(None);
                        report.record(None);
                    }
                }
            }
        }
    }
    report.finish()
}

/// `Q(√cfg) > P(cfg) / 2` for one-sided configurations, with the near flank
/// of the square-root pullback (the one adjacent to 0) taking full weight.
pub fn sqrt_trial<T: Real>(cfg: &GapConfiguration<T>, slack: &T) -> Option<Witness> {
    let pre = quadratic_pullback_config(cfg).ok()?;
    let q = asymmetric_length(&pre, Side::Left).ok()?;
    let half = poincare_length(cfg).ok()? * cfg.a.lit(0.5);
    Some(witness(&[&cfg.a, &cfg.u, &cfg.v, &cfg.b], &half, &q, slack))
}

/// The square-root pullback divides Poincaré length by at most 2, on random
/// configurations with `a >= 0`.
pub fn check_sqrt_lemma<T: Real>(trials: usize, seed: u64, ctx: PrecisionContext) -> SuiteReport {
    let slack: T = ctx.slack(16);
    run_trials("sqrt_pullback", trials, |i| {
        let mut rng = trial_rng(seed, i);
        let cfg: GapConfiguration<T> = random_positive_configuration(&mut rng, ctx.bits, 6.0);
        vec![sqrt_trial(&cfg, &slack)]
    })
}

/// `P` against the log cross-ratio evaluated at twice the precision;
/// violations are relative errors above `2^-(bits-8)`.
pub fn check_cross_ratio<T: Real>(trials: usize, seed: u64, ctx: PrecisionContext) -> SuiteReport {
    let bits = ctx.bits;
    let tol = T::pow2(-(bits as i32 - 8), bits);
    run_trials("cross_ratio", trials, |i| {
        let mut rng = trial_rng(seed, i);
        let cfg: GapConfiguration<T> = random_configuration(&mut rng, bits, 6.0);
        let p = poincare_length(&cfg).ok();
        let x = cross_ratio_length(&cfg.at_bits(2 * bits)).ok();
        vec![match (p, x) {
            (Some(p), Some(x)) => {
                let rel = ((p.at_bits(2 * bits) - x.clone()) / x.clone()).abs().at_bits(bits);
                Some(witness(&[&cfg.a, &cfg.u, &cfg.v, &cfg.b], &rel, &tol, &T::zero()))
            }
            _ => None,
        }]
    })
}

/// `|P - 4μ| <= 8μ²` for `I = [-μ, μ]` centred in `[-1, 1]`, for each `μ`.
/// A doubled-precision evaluation of `4 artanh μ` is reported alongside.
pub fn check_leading_order<T: Real>(mus: &[f64], ctx: PrecisionContext) -> SuiteReport {
    let bits = ctx.bits;
    let mut report = SuiteReport::new("leading_order");
    for &m in mus {
        let mu = T::parse_decimal(&format!("{m:e}"), bits).unwrap_or_else(|_| T::from_f64_at(m, bits));
        let one = T::from_f64_at(1.0, bits);
        let cfg = GapConfiguration::new(-one.clone(), -mu.clone(), mu.clone(), one.clone());
        let Ok(cfg) = cfg else {
            report.record(None);
            continue;
        };
        let Ok(p) = poincare_length(&cfg) else {
            report.record(None);
            continue;
        };
        let four = T::from_f64_at(4.0, bits);
        let err = (p.clone() - four.clone() * mu.clone()).abs();
        let bound = T::from_f64_at(8.0, bits) * mu.clone() * mu.clone();
        // 4 artanh μ = 2 ln((1 + μ)/(1 - μ)), at twice the precision.
        let wide = mu.at_bits(2 * bits);
        let one_w = one.at_bits(2 * bits);
        if let Ok(oracle) = ((one_w.clone() + wide.clone()) / (one_w - wide)).try_ln() {
            let gap = (oracle * T::from_f64_at(2.0, 2 * bits) - p.at_bits(2 * bits)).abs();
            report.notes.push(format!("mu={m:e}: |P - 4 artanh mu| = {:.3e}", gap.to_f64()));
        }
        report.record(Some(witness(&[&mu], &err, &bound, &T::zero())));
    }
    report.finish()
}

fn push<T: Real>(map: &QuadraticMap<T>, y: &T, shift: bool, l: usize) -> Result<T> {
    let x = if shift { y.clone() + map.c.clone() } else { y.clone() };
    Ok(map.iterate(&x, l)?.0)
}

/// A diffeomorphic branch of a level: `f^l` on a non-central interval, or
/// `y ↦ f^{l-1}(y + c)` on `φ(Iⁿ)` for the central one.
struct Branch<T> {
    domain: Interval<T>,
    shift: bool,
    iterates: usize,
}

fn branches<T: Real>(nest: &NestResult<T>) -> Vec<(usize, i64, Branch<T>)> {
    let mut out = Vec::new();
    for level in &nest.levels {
        for iv in level.intervals() {
            let b = if iv.signed_index == 0 {
                let r = T::max_of(&iv.interval.lo.abs(), &iv.interval.hi.abs());
                match Interval::new(T::zero(), r.clone() * r) {
                    Ok(d) => Branch {
                        domain: d,
                        shift: true,
                        iterates: iv.return_time - 1,
                    },
                    Err(_) => continue,
                }
            } else {
                Branch {
                    domain: iv.interval.clone(),
                    shift: false,
                    iterates: iv.return_time,
                }
            };
            out.push((level.n, iv.signed_index, b));
        }
    }
    out
}

const FRACTIONS: [f64; 7] = [0.0625, 0.125, 0.25, 0.5, 0.75, 0.875, 0.9375];

/// For every branch of the nest and the sub-gaps of its domain cut at
/// fixed fractions, the Poincaré length of the domain configuration is at
/// most that of its image.
pub fn check_schwarz_on_nest<T: Real>(nest: &NestResult<T>) -> SuiteReport {
    let Some(map) = nest.map.as_ref() else {
        let mut r = SuiteReport::new("schwarz");
        r.notes.push("nest carries no map".into());
        return r.finish();
    };
    let slack: T = map.ctx.slack(16);
    let all = branches(nest);
    let outcomes: Vec<Vec<Option<Witness>>> = all
        .par_iter()
        .map(|(_, _, b)| {
            let d = &b.domain;
            let w = d.length();
            let mut res = Vec::new();
            for (i, s) in FRACTIONS.iter().enumerate() {
                for t in &FRACTIONS[i + 1..] {
                    let u = d.lo.clone() + w.clone() * d.lo.lit(*s);
                    let v = d.lo.clone() + w.clone() * d.lo.lit(*t);
                    res.push(schwarz_trial(map, b, &u, &v, &slack));
                }
            }
            res
        })
        .collect();
    let mut report = SuiteReport::new("schwarz");
    for o in outcomes.into_iter().flatten() {
        report.record(o);
    }
    report.notes.push(format!("{} branches", all.len()));
    report.finish()
}

fn schwarz_trial<T: Real>(map: &QuadraticMap<T>, b: &Branch<T>, u: &T, v: &T, slack: &T) -> Option<Witness> {
    let d = &b.domain;
    let pre = GapConfiguration::new(d.lo.clone(), u.clone(), v.clone(), d.hi.clone()).ok()?;
    let img: Vec<T> = [&d.lo, u, v, &d.hi]
        .iter()
        .map(|y| push(map, y, b.shift, b.iterates))
        .collect::<Result<_>>()
        .ok()?;
    let post = if img[0] < img[3] {
        GapConfiguration::new(img[0].clone(), img[1].clone(), img[2].clone(), img[3].clone())
    } else {
        GapConfiguration::new(img[3].clone(), img[2].clone(), img[1].clone(), img[0].clone())
    }
    .ok()?;
    let lhs = poincare_length(&pre).ok()?;
    let rhs = poincare_length(&post).ok()?;
    Some(witness(&[&pre.a, &pre.u, &pre.v, &pre.b], &lhs, &rhs, slack))
}

/// Ceiling for distortion / Poincaré length in the Koebe suite.
pub const KOEBE_CEILING: f64 = 10.0;
/// Only sub-intervals with Poincaré length at most this enter the fit.
pub const KOEBE_RANGE: f64 = 0.2;

/// Distortion of each branch on sub-intervals `J` of its domain against
/// `r = P(h(J) | h(domain))`; the largest ratio over `r <= 0.2` must stay
/// below `ceiling`.
pub fn check_koebe_fit<T: Real>(nest: &NestResult<T>, ceiling: f64) -> SuiteReport {
    let mut report = SuiteReport::new("koebe");
    let Some(map) = nest.map.as_ref() else {
        report.notes.push("nest carries no map".into());
        return report.finish();
    };
    let all = branches(nest);
    let pairs: Vec<Vec<Option<(f64, f64, Witness)>>> = all
        .par_iter()
        .map(|(_, _, b)| koebe_pairs(map, b))
        .collect();
    let mut best: Option<(f64, Witness)> = None;
    let mut used = 0;
    for p in pairs.into_iter().flatten() {
        report.trials += 1;
        let Some((r, dist, w)) = p else {
            report.skipped += 1;
            continue;
        };
        if r > KOEBE_RANGE || r <= 0.0 {
            continue;
        }
        used += 1;
        let ratio = dist / r;
        if best.as_ref().is_none_or(|(b, _)| ratio > *b) {
            best = Some((ratio, w));
        }
    }
    if let Some((ratio, mut w)) = best {
        w.margin = ceiling - ratio;
        if w.margin < 0.0 {
            report.violations += 1;
        }
        report.notes.push(format!("max distortion/r = {ratio:.4} over {used} pairs (ceiling {ceiling})"));
        report.worst = Some(w);
    }
    report.finish()
}

fn koebe_pairs<T: Real>(map: &QuadraticMap<T>, b: &Branch<T>) -> Vec<Option<(f64, f64, Witness)>> {
    let d = &b.domain;
    let w = d.length();
    let mut out = Vec::new();
    for centre in [0.25, 0.5, 0.75] {
        for k in 2..=7 {
            let half = 0.5f64.powi(k + 1);
            let j = Interval::new(
                d.lo.clone() + w.clone() * d.lo.lit(centre - half),
                d.lo.clone() + w.clone() * d.lo.lit(centre + half),
            );
            out.push(j.ok().and_then(|j| koebe_pair(map, b, &j)));
        }
    }
    out
}

fn koebe_pair<T: Real>(map: &QuadraticMap<T>, b: &Branch<T>, j: &Interval<T>) -> Option<(f64, f64, Witness)> {
    let d = &b.domain;
    let img: Vec<T> = [&d.lo, &j.lo, &j.hi, &d.hi]
        .iter()
        .map(|y| push(map, y, b.shift, b.iterates))
        .collect::<Result<_>>()
        .ok()?;
    let cfg = if img[0] < img[3] {
        GapConfiguration::new(img[0].clone(), img[1].clone(), img[2].clone(), img[3].clone())
    } else {
        GapConfiguration::new(img[3].clone(), img[2].clone(), img[1].clone(), img[0].clone())
    }
    .ok()?;
    let r = poincare_length(&cfg).ok()?;
    let shift = b.shift;
    let l = b.iterates;
    let dist = sampled_distortion(
        |y| {
            let x = if shift { y.clone() + map.c.clone() } else { y.clone() };
            map.log_derivative(&x, l)
        },
        j,
        DEFAULT_SAMPLES,
    )
    .ok()?;
    let w = witness(&[&j.lo, &j.hi], &dist.value, &r, &T::zero());
    Some((r.to_f64(), dist.value.to_f64(), w))
}

/// Ordinary least squares; `None` with fewer than two distinct abscissae.
pub fn least_squares(xs: &[f64], ys: &[f64]) -> Option<(f64, f64, f64)> {
    let n = xs.len();
    if n < 2 || n != ys.len() {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let e = y - (slope * x + intercept);
            e * e
        })
        .sum();
    Some((slope, intercept, (rss / n as f64).sqrt()))
}

fn fit(quantity: &str, regressor: &str, pts: &[(f64, f64)], required: Sign) -> Fit {
    let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    match least_squares(&xs, &ys) {
        Some((slope, intercept, residual)) => Fit {
            quantity: quantity.into(),
            regressor: regressor.into(),
            slope,
            intercept,
            residual,
            points: pts.len(),
            required,
            ok: match required {
                Sign::Positive => slope > 0.0,
                Sign::Negative => slope < 0.0,
            },
        },
        None => Fit {
            quantity: quantity.into(),
            regressor: regressor.into(),
            slope: f64::NAN,
            intercept: f64::NAN,
            residual: f64::NAN,
            points: pts.len(),
            required,
            ok: false,
        },
    }
}

/// Levels needed beyond the fit start.
pub const MIN_FIT_LEVELS: usize = 6;

/// Slopes over levels `n >= n0`: `K_n` against `κ(n)` must rise,
/// `log μ_{n+1}` against `κ(n)` on 𝓛 and `log ρ_n` against `κ(n)` must fall.
pub fn check_theorem_b<T: Real>(
    nest: &NestResult<T>,
    geometry: &[LevelGeometry<T>],
    n0: usize,
) -> Result<SuiteReport> {
    match nest.termination {
        Termination::MaxDepth | Termination::PrecisionExhausted { .. } => {}
        ref t => {
            return Err(Error::TerminatedEarly(format!(
                "nest stopped at depth {} ({}); the decay fits need a non-renormalizable recurrent nest",
                nest.depth(),
                t.name()
            )))
        }
    }
    let have = geometry.iter().filter(|g| g.n >= n0).count();
    if have < MIN_FIT_LEVELS {
        return Err(Error::InsufficientLevels {
            needed: MIN_FIT_LEVELS,
            have,
        });
    }
    let rows: Vec<&LevelGeometry<T>> = geometry.iter().filter(|g| g.n >= n0).collect();
    let k_pts: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|g| g.k.as_ref().map(|k| (g.kappa as f64, k.value.to_f64())))
        .collect();
    let mu_pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|g| g.in_l)
        .filter_map(|g| {
            let next = geometry.iter().find(|h| h.n == g.n + 1)?;
            next.mu.try_ln().ok().map(|l| (g.kappa as f64, l.to_f64()))
        })
        .collect();
    let rho_pts: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|g| {
            let r = g.rho.as_ref()?;
            if r.value.sign() <= 0 {
                return None;
            }
            Some((g.kappa as f64, r.value.try_ln().ok()?.to_f64()))
        })
        .collect();
    let mut report = SuiteReport::new("decay_fits");
    report.fits.push(fit("K", "kappa", &k_pts, Sign::Positive));
    report.fits.push(fit("log mu_next", "kappa", &mu_pts, Sign::Negative));
    report.fits.push(fit("log rho", "kappa", &rho_pts, Sign::Negative));
    report.notes.push(format!("fit start n0 = {n0}"));
    Ok(report.finish())
}

/// Engineering ceilings for [`check_a_priori_bounds`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Ceilings {
    pub rho: f64,
    pub mu: f64,
    pub lambda: f64,
    /// Band for the lengths of observed intervals and gaps relative to `|Iⁿ⁻¹|`.
    pub band: (f64, f64),
}

impl Default for Ceilings {
    fn default() -> Self {
        Self {
            rho: 1.0,
            mu: 0.9,
            lambda: 4.0,
            band: (1e-4, 1.0),
        }
    }
}

fn gate<T: Real>(name: &str, level: usize, value: &T, limit: f64) -> Witness {
    let value_f = value.to_f64();
    Witness {
        inputs: vec![name.to_string(), format!("n={level}")],
        lhs: value.to_decimal(24),
        rhs: format!("{limit}"),
        margin: limit - value_f,
    }
}

/// `max ρ_n`, `max μ_n`, `max λ_n` under their ceilings, and every observed
/// interval and gap of level `n` commensurable with `Iⁿ⁻¹`.
pub fn check_a_priori_bounds<T: Real>(
    nest: &NestResult<T>,
    geometry: &[LevelGeometry<T>],
    ceilings: &Ceilings,
) -> SuiteReport {
    let mut report = SuiteReport::new("a_priori");
    for g in geometry {
        if let Some(r) = &g.rho {
            report.record(Some(gate("rho", g.n, &r.value, ceilings.rho)));
        }
        report.record(Some(gate("mu", g.n, &g.mu, ceilings.mu)));
        if let Some(l) = &g.lambda {
            report.record(Some(gate("lambda", g.n, l, ceilings.lambda)));
        }
    }
    let (lo, hi) = ceilings.band;
    let mut ratios: Vec<f64> = Vec::new();
    for level in &nest.levels {
        let Ok(outer) = nest.central(level.n - 1) else { continue };
        let scale = outer.length();
        let mut ivs: Vec<&Interval<T>> = level.intervals().map(|iv| &iv.interval).collect();
        ivs.sort_by(|a, b| a.lo.partial_cmp(&b.lo).expect("ordered endpoints"));
        for iv in &ivs {
            ratios.push((iv.length() / scale.clone()).to_f64());
        }
        for w in ivs.windows(2) {
            if w[0].hi < w[1].lo {
                ratios.push(((w[1].lo.clone() - w[0].hi.clone()) / scale.clone()).to_f64());
            }
        }
    }
    let (rmin, rmax) = ratios
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
    report.notes.push(format!(
        "interval and gap lengths relative to the enclosing level: min {rmin:.3e}, max {rmax:.3e}, band [{lo:e}, {hi}]"
    ));
    for r in ratios {
        let inside = r >= lo && r <= hi;
        report.trials += 1;
        if !inside {
            report.violations += 1;
        }
    }
    report.notes.push(format!(
        "ceilings: rho {}, mu {}, lambda {}",
        ceilings.rho, ceilings.mu, ceilings.lambda
    ));
    report.finish()
}

/// `κ(n) - κ(n-1)` is 0 or 1, and 1 exactly on the non-central levels.
pub fn kappa_invariant<T: Real>(nest: &NestResult<T>) -> bool {
    if nest.kappa.len() != nest.depth() + 1 || nest.kappa.first() != Some(&0) {
        return false;
    }
    nest.levels.iter().all(|level| {
        let n = level.n;
        let step = nest.kappa[n] as i64 - nest.kappa[n - 1] as i64;
        let noncentral = level.return_class == ReturnClass::NonCentral;
        (step == 1) == noncentral && (step == 0 || step == 1) && nest.in_l(n) == noncentral
    })
}

/// Largest graph on which ranks are also cross-checked by path enumeration.
pub const ENUMERATION_LIMIT: usize = 1000;

/// `ordⁿ₀` from the orbit against the out-degree of `Iⁿ⁺¹`, and ranks from
/// the orbit against shortest paths in the return graph.
pub fn check_graph<T: Real>(nest: &NestResult<T>) -> Result<SuiteReport> {
    let graph = ReturnGraph::from_nest(nest)?;
    let mut report = SuiteReport::new("graph");
    let mismatch = |what: String, a: String, b: String| Witness {
        inputs: vec![what],
        lhs: a,
        rhs: b,
        margin: -1.0,
    };
    let agree = |what: String, a: String| Witness {
        inputs: vec![what],
        lhs: a.clone(),
        rhs: a,
        margin: 0.0,
    };
    for n in 1..nest.depth() {
        let Some(id) = graph.id(n + 1, 0) else { continue };
        if !graph.complete[id] {
            report.record(None);
            continue;
        }
        let dynamic = orders(nest, n, 0)?;
        let degree = graph.out_degree(id);
        let what = format!("ord^{n}_0");
        report.record(Some(if dynamic == degree {
            agree(what, dynamic.to_string())
        } else {
            mismatch(what, dynamic.to_string(), degree.to_string())
        }));
    }
    let bfs = graph.ranks();
    let enumerated = (graph.nodes.len() <= ENUMERATION_LIMIT).then(|| graph.ranks_by_enumeration());
    let all_complete = graph.complete.iter().all(|c| *c);
    for (i, node) in graph.nodes.iter().enumerate() {
        let what = format!("rank({}, {})", node.level, node.index);
        if let Some(e) = &enumerated {
            if e[i] != bfs[i] {
                report.record(Some(mismatch(what.clone(), format!("{:?}", bfs[i]), format!("{:?}", e[i]))));
                continue;
            }
        }
        // A rank-k path from level n runs through level n + k, so shortest
        // paths only see ranks up to depth - n.
        let visible = |k: usize| node.level + k <= nest.depth();
        let dynamic = dynamic_rank(nest, node.level, node.index)?;
        match (dynamic, bfs[i]) {
            (Some(d), Some(g)) if d == g => report.record(Some(agree(what, d.to_string()))),
            (Some(d), Some(g)) => report.record(Some(mismatch(what, d.to_string(), g.to_string()))),
            (Some(d), None) if visible(d) && all_complete => {
                report.record(Some(mismatch(what, d.to_string(), "none".into())))
            }
            (None, Some(g)) => report.record(Some(mismatch(what, "none".into(), g.to_string()))),
            _ => report.record(None),
        }
    }
    if enumerated.is_none() {
        report
            .notes
            .push(format!("{} nodes: enumeration cross-check skipped", graph.nodes.len()));
    }
    Ok(report.finish())
}

/// Composition, square-root, cross-ratio and leading-order suites.
pub fn geometry_suites<T: Real>(trials: usize, seed: u64, ctx: PrecisionContext) -> Vec<SuiteReport> {
    vec![
        check_composition_lemma::<T>(trials, seed, ctx),
        check_sqrt_lemma::<T>(trials, seed, ctx),
        check_cross_ratio::<T>(trials, seed, ctx),
        check_leading_order::<T>(&[1e-2, 1e-3, 1e-4], ctx),
    ]
}

/// Schwarz, Koebe, graph and (when the nest is deep enough) decay fits
/// and a-priori gates for one nest.
pub fn nest_suites<T: Real>(nest: &NestResult<T>, geometry: &[LevelGeometry<T>], n0: usize) -> Vec<SuiteReport> {
    let mut out = vec![check_schwarz_on_nest(nest), check_koebe_fit(nest, KOEBE_CEILING)];
    match check_graph(nest) {
        Ok(r) => out.push(r),
        Err(e) => {
            let mut r = SuiteReport::new("graph");
            r.notes.push(e.to_string());
            out.push(r.finish());
        }
    }
    match check_theorem_b(nest, geometry, n0) {
        Ok(r) => out.push(r),
        Err(e) => {
            let mut r = SuiteReport::new("decay_fits");
            r.notes.push(format!("not run: {e}"));
            r.pass = true;
            out.push(r);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::default_geometry;
    use crate::nest::{build_nest, NestConfig};
    use crate::precision::BigReal;

    fn ctx() -> PrecisionContext {
        PrecisionContext::new(256, 32, 1).unwrap()
    }

    fn b(x: f64) -> BigReal {
        BigReal::with_bits(x, 256)
    }

    fn nest(c: &str, depth: usize, bits: u32) -> NestResult<BigReal> {
        let ctx = PrecisionContext::new(bits, 32, 1).unwrap();
        let map = QuadraticMap::from_decimal(c, ctx).unwrap();
        build_nest(
            &map,
            &NestConfig {
                depth,
                ..NestConfig::default()
            },
        )
    }

    const FIB: &str = "-1.8705286321646448888906174192698158530716";

    #[test]
    fn composition_worked_triple() {
        let outer = GapConfiguration::new(b(-1.0), b(-0.5), b(0.5), b(1.0)).unwrap();
        let inner = GapConfiguration::new(b(-0.5), b(-0.25), b(0.25), b(0.5)).unwrap();
        let (l, r) = composition_bound(&inner, &outer).unwrap();
        assert!((l.to_f64() - 2.0 * (5.0f64 / 3.0).ln()).abs() < 1e-15);
        assert!((r.to_f64() - 2.0 * 3f64.ln().powi(2)).abs() < 1e-14);
        let w = composition_trial(&inner, &outer, &b(0.0));
        assert!(w.iter().all(|w| w.as_ref().unwrap().margin > 0.0));
    }

    #[test]
    fn composition_small_run() {
        let r = check_composition_lemma::<BigReal>(500, 1, ctx());
        assert!(r.pass, "{r:?}");
        assert_eq!(r.trials, 1000 + 40 * 8 * 2);
        assert_eq!(r.skipped, 0);
        assert_eq!(r, check_composition_lemma::<BigReal>(500, 1, ctx()));
    }

    #[test]
    fn sqrt_perfect_squares() {
        let cfg = GapConfiguration::new(b(0.0), b(1.0), b(4.0), b(9.0)).unwrap();
        let w = sqrt_trial(&cfg, &b(0.0)).unwrap();
        // Q(0,1,2,3) = 1.5 ln 2 against P(0,1,4,9)/2 = (ln 4 + ln 1.6)/2.
        assert!((w.margin - (1.5 * 2f64.ln() - 0.5 * (4f64.ln() + 1.6f64.ln()))).abs() < 1e-14);
        assert!(check_sqrt_lemma::<BigReal>(500, 3, ctx()).pass);
    }

    #[test]
    fn sqrt_margin_far_from_zero() {
        // Far from 0 the root is nearly affine: Q -> 1.5 ln 2, P/2 -> ln 2.
        let mut margins = Vec::new();
        for k in 0..8 {
            let a = 10f64.powi(k);
            let cfg = GapConfiguration::new(b(a), b(a + 1.0), b(a + 2.0), b(a + 3.0)).unwrap();
            margins.push(sqrt_trial(&cfg, &b(0.0)).unwrap().margin);
        }
        assert!(margins.iter().all(|m| *m > 0.0));
        assert!((margins[7] - 0.5 * 2f64.ln()).abs() < 1e-6, "{margins:?}");
    }

    #[test]
    fn cross_ratio_and_leading_order() {
        assert!(check_cross_ratio::<BigReal>(300, 2, ctx()).pass);
        let r = check_leading_order::<BigReal>(&[1e-2, 1e-3, 1e-4], ctx());
        assert!(r.pass && r.trials == 3, "{r:?}");
    }

    #[test]
    fn schwarz_on_affine_branch_is_equality() {
        // l = 0 on the shifted central branch is a translation.
        let ctx = PrecisionContext::new(256, 32, 1).unwrap();
        let map = QuadraticMap::from_decimal("-1.5", ctx).unwrap();
        let br = Branch {
            domain: Interval::new(b(0.0), b(1.0)).unwrap(),
            shift: true,
            iterates: 0,
        };
        let w = schwarz_trial(&map, &br, &b(0.25), &b(0.5), &b(0.0)).unwrap();
        assert!(w.margin.abs() < 1e-60);
        let p = koebe_pair(&map, &br, &Interval::new(b(0.4), b(0.6)).unwrap()).unwrap();
        assert_eq!(p.1, 0.0);
    }

    #[test]
    fn fibonacci_nest_suites() {
        let r = nest(FIB, 10, 256);
        let schwarz = check_schwarz_on_nest(&r);
        assert!(schwarz.pass && schwarz.trials == 20 * 21, "{schwarz:?}");
        let koebe = check_koebe_fit(&r, KOEBE_CEILING);
        assert!(koebe.pass, "{koebe:?}");
        let graph = check_graph(&r).unwrap();
        assert!(graph.pass && graph.violations == 0, "{graph:?}");
        assert!(kappa_invariant(&r));
        let geo = default_geometry(&r).unwrap();
        let tb = check_theorem_b(&r, &geo, 4).unwrap();
        assert!(tb.pass, "{tb:?}");
        let ap = check_a_priori_bounds(&r, &geo, &Ceilings::default());
        assert!(ap.pass, "{ap:?}");
    }

    #[test]
    fn decay_fit_refusals() {
        let short = nest(FIB, 3, 256);
        let geo = default_geometry(&short).unwrap();
        assert!(matches!(
            check_theorem_b(&short, &geo, 0),
            Err(Error::InsufficientLevels { .. })
        ));
        let renorm = nest("-1", 10, 256);
        let geo = default_geometry(&renorm).unwrap();
        assert!(matches!(check_theorem_b(&renorm, &geo, 0), Err(Error::TerminatedEarly(_))));
    }

    #[test]
    fn a_priori_gate_reports_witness() {
        let r = nest(FIB, 8, 256);
        let geo = default_geometry(&r).unwrap();
        let tight = Ceilings {
            mu: 0.1,
            ..Ceilings::default()
        };
        let rep = check_a_priori_bounds(&r, &geo, &tight);
        assert!(!rep.pass);
        assert!(rep.worst.unwrap().margin < 0.0);
    }

    #[test]
    fn least_squares_line() {
        let (s, i, res) = least_squares(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]).unwrap();
        assert!((s - 2.0).abs() < 1e-15 && (i - 1.0).abs() < 1e-15 && res < 1e-15);
        assert!(least_squares(&[1.0, 1.0], &[0.0, 1.0]).is_none());
    }

    #[test]
    fn cascade_nest_keeps_kappa_invariant() {
        let r = nest("-1.76", 10, 256);
        assert!(kappa_invariant(&r));
        assert!(r.classes().contains(&ReturnClass::Central));
    }
}
