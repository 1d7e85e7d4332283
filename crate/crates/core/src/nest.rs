//! The principal nest `I⁰ ⊃ I¹ ⊃ ...` of a quadratic map, the intervals of
//! the first-return maps `g_n`, and central-cascade bookkeeping.
//!
//! `I⁰ = [α, -α]` is bounded by the orientation-reversing fixed point and its
//! preimage. `Iⁿ` is the component of `f^{-r_n}(Iⁿ⁻¹)` containing 0, where
//! `r_n` is the first return time of the critical point to `Iⁿ⁻¹`. Level `n`
//! is a central return when `g_n(0) = x_{r_n}` lies in `Iⁿ`.

use serde::{Deserialize, Serialize};

use crate::dynamics::{monotone_pullback, CriticalOrbit, QuadraticMap};
use crate::error::{Error, Result};
use crate::hyperbolic::Interval;
use crate::precision::DEFAULT_MAX_BITS;
use crate::scalar::Real;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NestConfig {
    pub depth: usize,
    /// Non-central intervals are enumerated up to this multiple of the next
    /// return time.
    pub horizon_mult: usize,
    /// Maximum orbit length searched for a single return.
    pub iterate_cap: usize,
    /// Central cascades longer than this are reported as possibly renormalizable.
    pub cascade_cap: usize,
    /// Precision ceiling for automatic escalation.
    pub max_bits: u32,
    /// Enumerate non-central intervals (disable for fast classification).
    pub enumerate: bool,
}

impl Default for NestConfig {
    fn default() -> Self {
        Self {
            depth: 12,
            horizon_mult: 2,
            iterate_cap: 100_000,
            cascade_cap: 64,
            max_bits: DEFAULT_MAX_BITS,
            enumerate: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReturnClass {
    Central,
    NonCentral,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum Termination {
    MaxDepth,
    /// `Iⁿ` coincides with `Iⁿ⁻¹`: a restrictive interval of period `r_n`.
    Renormalizable { level: usize, period: usize },
    /// A central cascade longer than the cap; possibly renormalizable.
    CascadeCapExceeded { level: usize, period: usize },
    NonRecurrent { level: usize },
    Escape,
    Degenerate,
    PrecisionExhausted { level: usize, bits: u32 },
}

impl Termination {
    pub fn name(&self) -> &'static str {
        match self {
            Termination::MaxDepth => "max_depth",
            Termination::Renormalizable { .. } => "renormalizable",
            Termination::CascadeCapExceeded { .. } => "cascade_cap_exceeded",
            Termination::NonRecurrent { .. } => "non_recurrent",
            Termination::Escape => "escape",
            Termination::Degenerate => "degenerate",
            Termination::PrecisionExhausted { .. } => "precision_exhausted",
        }
    }
}

/// One interval of a level: the central `Iⁿ` (index 0) or a non-central
/// `Iⁿ_k` (index sign = side of 0, magnitude = order of first visit).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelInterval<T> {
    pub interval: Interval<T>,
    pub signed_index: i64,
    /// `f^{return_time}` maps the interval onto `Iⁿ⁻¹`.
    pub return_time: usize,
    /// Orbit index of the first critical-orbit point inside.
    pub first_visit_time: usize,
}

/// An entry of the critical orbit into `Iⁿ⁻¹`, labelled by the level-`n`
/// interval it lands in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Visit {
    pub time: usize,
    pub index: i64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NestLevel<T> {
    pub n: usize,
    pub central: LevelInterval<T>,
    pub noncentral: Vec<LevelInterval<T>>,
    pub return_class: ReturnClass,
    /// First return time of the critical point to `Iⁿ⁻¹`.
    pub r_n: usize,
    /// First return time of the critical point to `Iⁿ` (that is, `r_{n+1}`).
    pub next_return: usize,
    /// Entries into `Iⁿ⁻¹` at times `r_n ..= horizon` (the `g_n`-orbit of 0).
    pub visits: Vec<Visit>,
    pub horizon: usize,
}

impl<T: Real> NestLevel<T> {
    pub fn intervals(&self) -> impl Iterator<Item = &LevelInterval<T>> {
        std::iter::once(&self.central).chain(self.noncentral.iter())
    }

    pub fn interval_count(&self) -> usize {
        1 + self.noncentral.len()
    }

    pub fn by_index(&self, index: i64) -> Option<&LevelInterval<T>> {
        self.intervals().find(|iv| iv.signed_index == index)
    }
}

/// A maximal run of central-return levels `start .. start + length`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cascade {
    pub start: usize,
    pub length: usize,
    /// Return time shared by every level of the run.
    pub period: usize,
    /// A non-central level follows the run.
    pub closed: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NestResult<T> {
    pub c: T,
    pub bits: u32,
    pub initial: Option<Interval<T>>,
    pub levels: Vec<NestLevel<T>>,
    pub termination: Termination,
    pub cascades: Vec<Cascade>,
    /// `kappa[n]` for `n = 0 ..= depth`.
    pub kappa: Vec<usize>,
    /// Levels with a non-central return.
    pub l_set: Vec<usize>,
    #[serde(skip)]
    pub map: Option<QuadraticMap<T>>,
    #[serde(skip)]
    pub orbit: Option<CriticalOrbit<T>>,
}

impl<T: Real> NestResult<T> {
    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    /// Level `n >= 1`.
    pub fn level(&self, n: usize) -> Result<&NestLevel<T>> {
        if n == 0 {
            return Err(Error::MissingLevel(0));
        }
        self.levels.get(n - 1).ok_or(Error::MissingLevel(n))
    }

    /// `Iⁿ`, with `I⁰` for `n = 0`.
    pub fn central(&self, n: usize) -> Result<&Interval<T>> {
        if n == 0 {
            return self.initial.as_ref().ok_or(Error::MissingLevel(0));
        }
        Ok(&self.level(n)?.central.interval)
    }

    pub fn classes(&self) -> Vec<ReturnClass> {
        self.levels.iter().map(|l| l.return_class).collect()
    }

    pub fn return_times(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.r_n).collect()
    }

    pub fn in_l(&self, n: usize) -> bool {
        self.l_set.binary_search(&n).is_ok()
    }
}

/// `I⁰ = [α, -α]`; errors when the critical value leaves `[-β, β]` or lands on
/// its boundary.
pub fn initial_interval<T: Real>(map: &QuadraticMap<T>) -> Result<Interval<T>> {
    let cv = map.c.clone();
    let beta = map.beta.clone();
    if cv == -beta.clone() || cv == beta {
        return Err(Error::Degenerate);
    }
    if cv < -beta.clone() || cv > beta {
        return Err(Error::Escape);
    }
    if map.alpha.sign() >= 0 {
        // Attracting fixed point at or right of 0: the critical orbit
        // converges without ever returning.
        return Err(Error::NonRecurrent(0));
    }
    Interval::new(map.alpha.clone(), -map.alpha.clone())
}

/// First `k >= from` with `x_k` in the interior of `iv`.
pub fn next_entry<T: Real>(
    map: &QuadraticMap<T>,
    orbit: &mut CriticalOrbit<T>,
    iv: &Interval<T>,
    from: usize,
    cap: usize,
) -> Result<usize> {
    let mut k = from;
    loop {
        if k > cap {
            return Err(Error::NonRecurrent(cap));
        }
        if iv.contains_interior(orbit.get(map, k)?) {
            return Ok(k);
        }
        k += 1;
    }
}

/// Level-`n` intervals visited by the critical orbit at entry times into
/// `prev` in `from ..= horizon`, together with the labelled visits.
///
/// `known` seeds the list (the central interval first); new intervals are
/// appended with the next signed index.
pub fn enumerate_intervals<T: Real>(
    map: &QuadraticMap<T>,
    orbit: &mut CriticalOrbit<T>,
    prev: &Interval<T>,
    known: &mut Vec<LevelInterval<T>>,
    from: usize,
    horizon: usize,
    cap: usize,
) -> Result<Vec<Visit>> {
    let mut visits = Vec::new();
    let mut k = next_entry(map, orbit, prev, from, cap)?;
    while k <= horizon {
        let x = orbit.get(map, k)?.clone();
        let next = next_entry(map, orbit, prev, k + 1, cap)?;
        let index = match known.iter().find(|iv| iv.interval.contains(&x)) {
            Some(iv) => iv.signed_index,
            None => {
                let branch = monotone_pullback(map, prev, orbit, k, next - k)?;
                if branch.folding {
                    return Err(Error::Bookkeeping(format!(
                        "non-central pullback at time {k} folds"
                    )));
                }
                // An interval abutting ∂Iⁿ⁻¹ may come back an ulp outside it.
                let domain = Interval::new(
                    T::max_of(&branch.domain.lo, &prev.lo),
                    T::min_of(&branch.domain.hi, &prev.hi),
                )?;
                if let Some(other) = known.iter().find(|iv| iv.interval.overlaps(&domain)) {
                    return Err(Error::Bookkeeping(format!(
                        "interval at time {k} overlaps interval {}",
                        other.signed_index
                    )));
                }
                let order = known.iter().filter(|iv| iv.signed_index != 0).count() as i64 + 1;
                let index = if x.sign() < 0 { -order } else { order };
                known.push(LevelInterval {
                    interval: domain,
                    signed_index: index,
                    return_time: next - k,
                    first_visit_time: k,
                });
                index
            }
        };
        visits.push(Visit { time: k, index });
        k = next;
    }
    Ok(visits)
}

enum Attempt<T> {
    Done(NestResult<T>),
    NeedsPrecision(NestResult<T>, usize),
}

/// Builds levels `1 ..= cfg.depth`, doubling the precision (up to
/// `cfg.max_bits`) whenever the orbit or the intervals outrun it.
pub fn build_nest<T: Real>(map: &QuadraticMap<T>, cfg: &NestConfig) -> NestResult<T> {
    let mut current = map.clone();
    loop {
        match try_build(&current, cfg) {
            Attempt::Done(result) => return result,
            Attempt::NeedsPrecision(mut partial, level) => {
                let bits = current.ctx.bits * 2;
                let can_grow = T::from_f64_at(0.0, bits).bits() == bits;
                if bits > cfg.max_bits || !can_grow {
                    partial.termination = Termination::PrecisionExhausted {
                        level,
                        bits: current.ctx.bits,
                    };
                    return partial;
                }
                current = match current.escalated(bits) {
                    Ok(m) => m,
                    Err(_) => return partial,
                };
            }
        }
    }
}

fn try_build<T: Real>(map: &QuadraticMap<T>, cfg: &NestConfig) -> Attempt<T> {
    let mut result = NestResult {
        c: map.c.clone(),
        bits: map.ctx.bits,
        initial: None,
        levels: Vec::new(),
        termination: Termination::MaxDepth,
        cascades: Vec::new(),
        kappa: vec![0],
        l_set: Vec::new(),
        map: Some(map.clone()),
        orbit: None,
    };
    let i0 = match initial_interval(map) {
        Ok(iv) => iv,
        Err(e) => {
            result.termination = match e {
                Error::Degenerate => Termination::Degenerate,
                Error::NonRecurrent(_) => Termination::NonRecurrent { level: 0 },
                _ => Termination::Escape,
            };
            return Attempt::Done(result);
        }
    };
    result.initial = Some(i0.clone());
    let floor = i0.length() * map.ctx.tolerance::<T>();
    let mut orbit = CriticalOrbit::new(map);
    let mut prev = i0;
    let mut run = 0usize;

    for n in 1..=cfg.depth {
        let step = build_level(map, &mut orbit, &prev, n, cfg);
        let level = match step {
            Ok(level) => level,
            Err(Error::PrecisionExhausted(_)) => {
                finish(&mut result, orbit);
                return Attempt::NeedsPrecision(result, n);
            }
            Err(Error::NonRecurrent(_)) => {
                result.termination = Termination::NonRecurrent { level: n };
                break;
            }
            Err(_) => {
                // A fold or overlap means the working precision no longer
                // resolves the combinatorics.
                finish(&mut result, orbit);
                return Attempt::NeedsPrecision(result, n);
            }
        };
        let width = level.central.interval.length();
        if prev.length() - width.clone() <= floor {
            result.termination = Termination::Renormalizable {
                level: n,
                period: level.r_n,
            };
            break;
        }
        if width < floor {
            result.levels.push(level);
            finish(&mut result, orbit);
            return Attempt::NeedsPrecision(result, n + 1);
        }
        run = if level.return_class == ReturnClass::Central {
            run + 1
        } else {
            0
        };
        prev = level.central.interval.clone();
        let period = level.r_n;
        result.levels.push(level);
        if run > cfg.cascade_cap {
            result.termination = Termination::CascadeCapExceeded { level: n, period };
            break;
        }
    }
    finish(&mut result, orbit);
    Attempt::Done(result)
}

fn finish<T: Real>(result: &mut NestResult<T>, orbit: CriticalOrbit<T>) {
    result.orbit = Some(orbit);
    let (kappa, l_set) = kappa_and_l(&result.classes());
    result.kappa = kappa;
    result.l_set = l_set;
    result.cascades = cascades(&result.levels);
}

/// Builds level `n` from `prev = Iⁿ⁻¹`.
pub fn build_level<T: Real>(
    map: &QuadraticMap<T>,
    orbit: &mut CriticalOrbit<T>,
    prev: &Interval<T>,
    n: usize,
    cfg: &NestConfig,
) -> Result<NestLevel<T>> {
    let r = next_entry(map, orbit, prev, 1, cfg.iterate_cap)?;
    let branch = monotone_pullback(map, prev, orbit, 0, r)?;
    if !branch.folding {
        return Err(Error::Bookkeeping(format!("central pullback at level {n} does not fold")));
    }
    let central_iv = branch.domain;
    if !prev.contains_interval(&central_iv) {
        return Err(Error::Bookkeeping(format!("level {n} is not nested")));
    }
    let x_r = orbit.get(map, r)?.clone();
    let class = if central_iv.contains_interior(&x_r) {
        ReturnClass::Central
    } else {
        ReturnClass::NonCentral
    };
    // A restrictive interval: report before searching for further returns.
    let floor = prev.length() * map.ctx.tolerance::<T>();
    let central = LevelInterval {
        interval: central_iv.clone(),
        signed_index: 0,
        return_time: r,
        first_visit_time: 0,
    };
    if prev.length() - central_iv.length() <= floor {
        return Ok(NestLevel {
            n,
            central,
            noncentral: Vec::new(),
            return_class: class,
            r_n: r,
            next_return: r,
            visits: vec![Visit { time: r, index: 0 }],
            horizon: r,
        });
    }
    let next_return = next_entry(map, orbit, &central_iv, 1, cfg.iterate_cap)?;
    let horizon = if cfg.enumerate {
        cfg.horizon_mult.max(1) * next_return
    } else {
        r
    };
    let mut known = vec![central];
    let visits = if cfg.enumerate {
        enumerate_intervals(map, orbit, prev, &mut known, r, horizon, cfg.iterate_cap)?
    } else {
        Vec::new()
    };
    let central = known.remove(0);
    Ok(NestLevel {
        n,
        central,
        noncentral: known,
        return_class: class,
        r_n: r,
        next_return,
        visits,
        horizon,
    })
}

/// `κ(n)` counts the non-central levels up to `n`; 𝓛 is the set of those levels.
pub fn kappa_and_l(classes: &[ReturnClass]) -> (Vec<usize>, Vec<usize>) {
    let mut kappa = vec![0];
    let mut l_set = Vec::new();
    for (i, class) in classes.iter().enumerate() {
        let n = i + 1;
        let inc = usize::from(*class == ReturnClass::NonCentral);
        if inc == 1 {
            l_set.push(n);
        }
        kappa.push(kappa[i] + inc);
    }
    (kappa, l_set)
}

/// Maximal runs of central levels.
pub fn cascades<T: Real>(levels: &[NestLevel<T>]) -> Vec<Cascade> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < levels.len() {
        if levels[i].return_class != ReturnClass::Central {
            i += 1;
            continue;
        }
        let start = i;
        while i < levels.len() && levels[i].return_class == ReturnClass::Central {
            i += 1;
        }
        out.push(Cascade {
            start: levels[start].n,
            length: i - start,
            period: levels[start].r_n,
            closed: i < levels.len(),
        });
    }
    out
}

/// Checks every closed cascade: the return time is constant across the run
/// and `x_{r_m}` lands in `I^{m+q-1} \ I^{m+q}`.
pub fn check_cascades<T: Real>(nest: &NestResult<T>) -> Result<()> {
    let orbit = nest.orbit.as_ref().ok_or(Error::MissingLevel(0))?;
    for cas in nest.cascades.iter().filter(|c| c.closed) {
        let m = cas.start;
        let q = cas.length;
        for j in m..m + q {
            if nest.level(j)?.r_n != cas.period {
                return Err(Error::Bookkeeping(format!(
                    "return time changes inside the cascade starting at {m}"
                )));
            }
        }
        let x = &orbit.points()[cas.period];
        let outer = nest.central(m + q - 1)?;
        let inner = nest.central(m + q)?;
        if !(outer.contains(x) && !inner.contains_interior(x)) {
            return Err(Error::Bookkeeping(format!(
                "cascade starting at {m} does not exit after {q} levels"
            )));
        }
    }
    Ok(())
}

/// `Σ_j ulp(y_j) |Df^{p-j}(y_j)|` along `y_0 = x, y_{j+1} = f(y_j)`: a
/// bound on how far rounding at each step can move `f^p(x)`.
fn rounding_growth<T: Real>(map: &QuadraticMap<T>, x: &T, p: usize) -> T {
    let bits = map.ctx.bits;
    let ulp = T::pow2(-(bits as i32) + 4, bits);
    let one = T::from_f64_at(1.0, bits);
    let mut ys = Vec::with_capacity(p + 1);
    let mut y = x.clone();
    for _ in 0..p {
        ys.push(y.clone());
        y = map.apply(&y);
    }
    let mut total = T::max_of(&y.abs(), &one) * ulp.clone();
    let mut d = one.clone();
    for y in ys.iter().rev() {
        d = d * y.abs() * T::from_f64_at(2.0, bits);
        total = total + T::max_of(&y.abs(), &one) * ulp.clone() * d.clone();
    }
    total
}

/// Checks strict nesting, symmetry, disjointness and that every interval
/// maps onto its parent under `f^{return_time}` (at doubled precision).
pub fn check_nest<T: Real>(nest: &NestResult<T>) -> Result<()> {
    let map = nest.map.as_ref().ok_or(Error::MissingLevel(0))?;
    let orbit = nest.orbit.as_ref().ok_or(Error::MissingLevel(0))?;
    let fine = map.escalated(map.ctx.bits * 2)?;
    let rel = T::pow2(-(map.ctx.reliable_bits() as i32) + 8, map.ctx.bits);
    for n in 1..=nest.depth() {
        let level = nest.level(n)?;
        let parent = nest.central(n - 1)?;
        let cen = &level.central.interval;
        if !parent.strictly_contains(cen) {
            return Err(Error::NotNested);
        }
        if (cen.lo.clone() + cen.hi.clone()).abs() > cen.length() * rel.clone() {
            return Err(Error::Bookkeeping(format!("I^{n} is not symmetric")));
        }
        let all: Vec<_> = level.intervals().collect();
        for (i, a) in all.iter().enumerate() {
            if !parent.contains_interval(&a.interval) {
                return Err(Error::Bookkeeping(format!("interval {} of level {n} leaves its parent", a.signed_index)));
            }
            for b in &all[i + 1..] {
                if a.interval.overlaps(&b.interval) {
                    return Err(Error::Bookkeeping(format!("level {n} intervals overlap")));
                }
            }
            let x = &orbit.points()[a.first_visit_time];
            if !a.interval.contains(x) {
                return Err(Error::Bookkeeping(format!("interval {} of level {n} misses its orbit point", a.signed_index)));
            }
            let (lo, _) = fine.iterate(&a.interval.lo.at_bits(fine.ctx.bits), a.return_time)?;
            let (hi, _) = fine.iterate(&a.interval.hi.at_bits(fine.ctx.bits), a.return_time)?;
            let p_lo = parent.lo.at_bits(fine.ctx.bits);
            let p_hi = parent.hi.at_bits(fine.ctx.bits);
            let scale = parent.length().at_bits(fine.ctx.bits);
            // Endpoints and their pullbacks were rounded at working
            // precision; every such error grows along the rest of the orbit.
            let grown = T::max_of(
                &rounding_growth(map, &a.interval.lo, a.return_time),
                &rounding_growth(map, &a.interval.hi, a.return_time),
            )
            .at_bits(fine.ctx.bits);
            let tol = scale * rel.at_bits(fine.ctx.bits) * T::from_f64_at(1e6, fine.ctx.bits) + grown;
            let fits = |u: &T, v: &T| {
                ((u.clone() - p_lo.clone()).abs() <= tol.clone() && (v.clone() - p_hi.clone()).abs() <= tol.clone())
                    || ((u.clone() - p_hi.clone()).abs() <= tol.clone()
                        && (v.clone() - p_lo.clone()).abs() <= tol.clone())
            };
            let ok = if a.signed_index == 0 {
                // The folded central branch maps both endpoints to one end.
                let top = T::max_of(&lo, &hi);
                (top.clone() - p_lo.clone()).abs() <= tol.clone() || (top - p_hi.clone()).abs() <= tol.clone()
            } else {
                fits(&lo, &hi)
            };
            if !ok {
                return Err(Error::Bookkeeping(format!(
                    "f^{} does not map interval {} of level {n} onto its parent",
                    a.return_time, a.signed_index
                )));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::precision::{BigReal, PrecisionContext};

    pub(crate) const FIB_C: &str = "-1.8705286321646448888906174192698158530716";

    fn map(c: &str, bits: u32) -> QuadraticMap<BigReal> {
        QuadraticMap::from_decimal(c, PrecisionContext::new(bits, 32, 1).unwrap()).unwrap()
    }

    fn cfg(depth: usize) -> NestConfig {
        NestConfig {
            depth,
            ..NestConfig::default()
        }
    }

    #[test]
    fn initial_interval_examples() {
        assert_eq!(initial_interval(&map("-2", 256)), Err(Error::Degenerate));
        assert_eq!(initial_interval(&map("-2.1", 256)), Err(Error::Escape));
        let m = map("-1", 256);
        let i0 = initial_interval(&m).unwrap();
        // 1/φ = (√5 - 1)/2.
        let inv_phi = (BigReal::with_bits(5.0, 256).try_sqrt().unwrap() - BigReal::with_bits(1.0, 256))
            * BigReal::with_bits(0.5, 256);
        assert!((i0.hi.clone() - inv_phi).abs() <= BigReal::pow2(-250, 256));
        let m = map("-1.5", 256);
        let i0 = initial_interval(&m).unwrap();
        assert!(!i0.contains_interior(&m.c));
        assert!(m.c > -m.beta.clone());
    }

    #[test]
    fn special_parameters_terminate() {
        let r = build_nest(&map("-2", 256), &cfg(10));
        assert_eq!(r.termination, Termination::Degenerate);
        assert!(r.levels.is_empty());
        let r = build_nest(&map("-1", 256), &cfg(10));
        assert!(matches!(r.termination, Termination::Renormalizable { level, .. } if level <= 2));
    }

    #[test]
    fn fibonacci_prefix() {
        let r = build_nest(&map(FIB_C, 256), &cfg(9));
        assert_eq!(r.termination, Termination::MaxDepth);
        assert_eq!(r.return_times(), vec![3, 5, 8, 13, 21, 34, 55, 89, 144]);
        assert!(r.classes().iter().all(|c| *c == ReturnClass::NonCentral));
        assert_eq!(r.kappa, (0..=9).collect::<Vec<_>>());
        for level in &r.levels {
            assert_eq!(level.noncentral.len(), 1, "level {}", level.n);
        }
        check_nest(&r).unwrap();
        let mu: Vec<f64> = (1..=9)
            .map(|n| (r.central(n).unwrap().length() / r.central(n - 1).unwrap().length()).to_f64())
            .collect();
        assert!((mu[0] - 0.455).abs() < 0.01, "{mu:?}");
        assert!(mu[5] < mu[4]);
    }

    #[test]
    fn period_three_cascade_hits_cap() {
        let c = NestConfig {
            depth: 80,
            cascade_cap: 20,
            ..NestConfig::default()
        };
        let r = build_nest(&map("-1.76", 256), &c);
        assert!(
            matches!(
                r.termination,
                Termination::CascadeCapExceeded { period: 3, .. } | Termination::Renormalizable { period: 3, .. }
            ),
            "{:?}",
            r.termination
        );
    }

    #[test]
    fn kappa_bookkeeping() {
        use ReturnClass::*;
        let (k, l) = kappa_and_l(&[NonCentral, Central, Central, NonCentral]);
        assert_eq!(k, vec![0, 1, 1, 1, 2]);
        assert_eq!(l, vec![1, 4]);
    }
}
