//! Geometric parameters of a built nest (`μ`, `λ`, `α`, `K`, `ρ`, `ω`),
//! orders of returns, and the return graph with its ranks.

use std::collections::{BTreeSet, HashMap, VecDeque};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{phi_image, sampled_distortion, CriticalOrbit, Distortion, QuadraticMap, DEFAULT_SAMPLES};
use crate::error::{Error, Result};
use crate::hyperbolic::{asymmetric_length, poincare_length, GapConfiguration, Interval, Side};
use crate::nest::{LevelInterval, NestLevel, NestResult};
use crate::scalar::Real;

/// `μ_n = |Iⁿ| / |Iⁿ⁻¹|`.
pub fn scaling_factor<T: Real>(nest: &NestResult<T>, n: usize) -> Result<T> {
    if n == 0 {
        return Err(Error::MissingLevel(0));
    }
    Ok(nest.central(n)?.length() / nest.central(n - 1)?.length())
}

/// `λ` and `λ* = min(λ, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lambda<T> {
    pub lambda: T,
    pub lambda_star: T,
}

/// Largest Poincaré length of the given intervals inside `line`.
pub fn lambda_of<T: Real>(line: &Interval<T>, intervals: &[&Interval<T>]) -> Result<Lambda<T>> {
    let mut best: Option<T> = None;
    for iv in intervals {
        let p = poincare_length(&GapConfiguration::nested(iv, line)?)?;
        if best.as_ref().is_none_or(|b| p > *b) {
            best = Some(p);
        }
    }
    let lambda = best.ok_or(Error::NoNonCentral(0))?;
    let one = lambda.lit(1.0);
    Ok(Lambda {
        lambda_star: T::min_of(&lambda, &one),
        lambda,
    })
}

/// `λ_n = max_{i≠0} P(Iⁿ_i | Iⁿ⁻¹)` over the observed non-central intervals.
pub fn lambda_param<T: Real>(nest: &NestResult<T>, n: usize) -> Result<Lambda<T>> {
    let level = nest.level(n)?;
    let ivs: Vec<&Interval<T>> = level.noncentral.iter().map(|iv| &iv.interval).collect();
    if ivs.is_empty() {
        return Err(Error::NoNonCentral(n));
    }
    lambda_of(nest.central(n - 1)?, &ivs)
}

/// `max |I| / dist(I, 0)`; errors with `DistanceZero` if an interval reaches 0.
pub fn alpha_of<T: Real>(intervals: &[&Interval<T>]) -> Result<T> {
    let zero = T::zero();
    let mut best: Option<T> = None;
    for iv in intervals {
        let d = iv.distance_to(&zero);
        if d.sign() <= 0 {
            return Err(Error::DistanceZero);
        }
        let a = iv.length() / d;
        if best.as_ref().is_none_or(|b| a > *b) {
            best = Some(a);
        }
    }
    best.ok_or(Error::NoNonCentral(0))
}

/// `α_n = max_{k≠0} |Iⁿ_k| / dist(Iⁿ_k, 0)`.
pub fn alpha_param<T: Real>(nest: &NestResult<T>, n: usize) -> Result<T> {
    let level = nest.level(n)?;
    let ivs: Vec<&Interval<T>> = level.noncentral.iter().map(|iv| &iv.interval).collect();
    if ivs.is_empty() {
        return Err(Error::NoNonCentral(n));
    }
    alpha_of(&ivs)
}

/// `K_n` as a minimum over the observed intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KParam<T> {
    pub value: T,
    /// Signed indices of the minimizing pair, left interval first.
    pub pair: (i64, i64),
    /// Number of admissible pairs compared.
    pub pairs: usize,
    /// The level may hold intervals that were not observed, in which case
    /// the true infimum can only be smaller.
    pub observed_only: bool,
}

/// Minimum of `Q` over the gaps between pairs `s, t` with `st >= 0` whose
/// gap misses 0. The flank nearer 0 gets full weight.
pub fn k_of<T: Real>(intervals: &[(i64, Interval<T>)]) -> Result<KParam<T>> {
    let zero = T::zero();
    let mut best: Option<KParam<T>> = None;
    let mut pairs = 0;
    for (i, (s, a)) in intervals.iter().enumerate() {
        for (t, b) in intervals.iter().skip(i + 1) {
            if s * t < 0 {
                continue;
            }
            let (left, right, ls, rs) = if a.lo < b.lo { (a, b, *s, *t) } else { (b, a, *t, *s) };
            if left.hi >= right.lo {
                continue;
            }
            if left.hi < zero && zero < right.lo {
                continue;
            }
            let cfg = GapConfiguration::between(left, right)?;
            let near = if right.distance_to(&zero) < left.distance_to(&zero) {
                Side::Right
            } else {
                Side::Left
            };
            let q = asymmetric_length(&cfg, near)?;
            pairs += 1;
            if best.as_ref().is_none_or(|k| q < k.value) {
                best = Some(KParam {
                    value: q,
                    pair: (ls, rs),
                    pairs: 0,
                    observed_only: false,
                });
            }
        }
    }
    let mut k = best.ok_or(Error::NoAdmissiblePair(0))?;
    k.pairs = pairs;
    Ok(k)
}

/// `K_n`, flagged as observed-only when the enumeration was still finding
/// new intervals in the second half of its horizon.
pub fn k_param<T: Real>(nest: &NestResult<T>, n: usize) -> Result<KParam<T>> {
    let level = nest.level(n)?;
    let ivs: Vec<(i64, Interval<T>)> = level
        .intervals()
        .map(|iv| (iv.signed_index, iv.interval.clone()))
        .collect();
    let mut k = k_of(&ivs).map_err(|e| match e {
        Error::NoAdmissiblePair(_) => Error::NoAdmissiblePair(n),
        e => e,
    })?;
    k.observed_only = still_discovering(level);
    Ok(k)
}

fn still_discovering<T: Real>(level: &NestLevel<T>) -> bool {
    let late = level.r_n + (level.horizon.saturating_sub(level.r_n)) / 2;
    level.noncentral.iter().any(|iv| iv.first_visit_time > late)
}

fn nest_map<T: Real>(nest: &NestResult<T>) -> Result<&QuadraticMap<T>> {
    nest.map
        .as_ref()
        .ok_or_else(|| Error::Bookkeeping("nest carries no map".into()))
}

/// Distortion of `h` in `f^l = h ∘ φ` on an interval, `h = f^{l-1} ∘ (y ↦ y + c)`.
pub fn h_distortion<T: Real>(
    map: &QuadraticMap<T>,
    iv: &Interval<T>,
    l: usize,
    samples: usize,
) -> Result<Distortion<T>> {
    sampled_distortion(|y| map.h_log_derivative(y, l), &phi_image(iv)?, samples)
}

/// `ρ_n`: the largest distortion of `h_{n,i}` over the level's intervals.
pub fn rho_param<T: Real>(nest: &NestResult<T>, n: usize, samples: usize) -> Result<Distortion<T>> {
    let map = nest_map(nest)?;
    let level = nest.level(n)?;
    let mut best: Option<Distortion<T>> = None;
    for iv in level.intervals() {
        let d = h_distortion(map, &iv.interval, iv.return_time, samples)?;
        if best.as_ref().is_none_or(|b| d.value > b.value) {
            best = Some(d);
        }
    }
    best.ok_or(Error::MissingLevel(n))
}

/// `Σ_{m=1}^{p-1} |f^m(I)|` for one interval with return time `p`.
pub fn image_lengths<T: Real>(map: &QuadraticMap<T>, iv: &Interval<T>, p: usize) -> Result<T> {
    let zero = T::zero();
    // f is even, so a symmetric interval has the images of its right half.
    let mut cur = if iv.contains_interior(&zero) {
        Interval::new(zero.clone(), T::max_of(&iv.lo.abs(), &iv.hi.abs()))?
    } else {
        iv.clone()
    };
    let mut total = zero;
    for _ in 1..p {
        cur = map.forward_image(&cur, 1)?;
        total = total + cur.length();
    }
    Ok(total)
}

/// `ω_n = Σ_j Σ_{m=1}^{p(n,j)-1} |f^m(Iⁿ_j)|` over the observed intervals.
pub fn omega_total<T: Real>(nest: &NestResult<T>, n: usize) -> Result<T> {
    let map = nest_map(nest)?;
    let level = nest.level(n)?;
    let mut total = T::zero();
    for iv in level.intervals() {
        total = total + image_lengths(map, &iv.interval, iv.return_time)?;
    }
    Ok(total)
}

fn orbit_upto<T: Real>(nest: &NestResult<T>, k: usize) -> Result<CriticalOrbit<T>> {
    let map = nest_map(nest)?;
    let mut orbit = match &nest.orbit {
        Some(o) => o.clone(),
        None => CriticalOrbit::new(map),
    };
    orbit.extend_to(map, k)?;
    Ok(orbit)
}

/// `ordⁿ_l`: iterates of `g_{n-l}` the critical orbit needs to re-enter
/// `Iⁿ`, counted as entries into `Iⁿ⁻ˡ⁻¹` at times `1 ..= r_{n+1}`.
pub fn orders<T: Real>(nest: &NestResult<T>, n: usize, l: usize) -> Result<usize> {
    if n == 0 || l >= n {
        return Err(Error::MissingLevel(n.saturating_sub(l + 1)));
    }
    let level = nest.level(n)?;
    let outer = nest.central(n - l - 1)?;
    let next = level.next_return;
    let orbit = orbit_upto(nest, next)?;
    Ok((1..=next)
        .filter(|&k| outer.contains_interior(&orbit.points()[k]))
        .count())
}

/// Rank from the orbit: `0` for central intervals, otherwise the least
/// `k >= 1` with the first visit before `r_{n+k}`. `None` when the nest is
/// too shallow to tell.
pub fn dynamic_rank<T: Real>(nest: &NestResult<T>, n: usize, index: i64) -> Result<Option<usize>> {
    let level = nest.level(n)?;
    if index == 0 {
        return Ok(Some(0));
    }
    let iv = level.by_index(index).ok_or(Error::MissingLevel(n))?;
    let returns = nest.return_times();
    let last = nest.levels.last().map(|l| l.next_return);
    for k in 1.. {
        let r = match returns.get(n + k - 1) {
            Some(&r) => r,
            None if n + k == nest.depth() + 1 => match last {
                Some(r) => r,
                None => return Ok(None),
            },
            None => return Ok(None),
        };
        if iv.first_visit_time < r {
            return Ok(Some(k));
        }
    }
    unreachable!()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GraphNode {
    pub level: usize,
    pub index: i64,
}

/// Nodes are the level intervals; each level-`(n+1)` node has one edge per
/// `g_n` step of its return to `Iⁿ`, to the level-`n` interval landed in
/// (repeated visits give parallel edges).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnGraph {
    pub nodes: Vec<GraphNode>,
    pub edges: Vec<Vec<usize>>,
    /// Every step of the node's return landed in an observed interval.
    pub complete: Vec<bool>,
}

impl ReturnGraph {
    /// Builds the graph from a nest's observed intervals and orbit.
    pub fn from_nest<T: Real>(nest: &NestResult<T>) -> Result<Self> {
        let mut nodes = Vec::new();
        for level in &nest.levels {
            for iv in level.intervals() {
                nodes.push(GraphNode {
                    level: level.n,
                    index: iv.signed_index,
                });
            }
        }
        let horizon = nest
            .levels
            .iter()
            .flat_map(|l| l.intervals().map(|iv| iv.first_visit_time + iv.return_time))
            .max()
            .unwrap_or(0);
        let orbit = if nest.levels.is_empty() {
            None
        } else {
            Some(orbit_upto(nest, horizon)?)
        };
        let id: HashMap<GraphNode, usize> = nodes.iter().enumerate().map(|(i, n)| (*n, i)).collect();
        let mut edges = vec![Vec::new(); nodes.len()];
        let mut complete = vec![true; nodes.len()];
        for (i, node) in nodes.iter().enumerate() {
            if node.level < 2 {
                continue;
            }
            let n = node.level - 1;
            let here = nest.level(node.level)?.by_index(node.index).expect("node of the nest");
            let below = nest.level(n)?;
            let outer = nest.central(n - 1)?;
            let pts = orbit.as_ref().expect("orbit of a non-empty nest").points();
            let (t, p) = (here.first_visit_time, here.return_time);
            for x in &pts[t + 1..=t + p] {
                if !outer.contains_interior(x) {
                    continue;
                }
                match landing(below, x) {
                    Some(j) => edges[i].push(id[&GraphNode { level: n, index: j }]),
                    None => {
                        complete[i] = false;
                        break;
                    }
                }
            }
        }
        Ok(Self { nodes, edges, complete })
    }

    pub fn id(&self, level: usize, index: i64) -> Option<usize> {
        self.nodes.iter().position(|n| n.level == level && n.index == index)
    }

    pub fn out_degree(&self, id: usize) -> usize {
        self.edges[id].len()
    }

    /// Number of edge paths of length `len` starting at `id`, parallel
    /// edges counted separately.
    pub fn paths(&self, id: usize, len: usize) -> u128 {
        let mut counts: HashMap<usize, u128> = HashMap::from([(id, 1)]);
        for _ in 0..len {
            let mut next = HashMap::new();
            for (&v, &c) in &counts {
                for &w in &self.edges[v] {
                    *next.entry(w).or_insert(0u128) += c;
                }
            }
            counts = next;
        }
        counts.values().sum()
    }

    /// Shortest path length from any central node to each node, by
    /// breadth-first search; `None` for unreachable nodes.
    pub fn ranks(&self) -> Vec<Option<usize>> {
        let mut rank = vec![None; self.nodes.len()];
        let mut queue = VecDeque::new();
        for (i, n) in self.nodes.iter().enumerate() {
            if n.index == 0 {
                rank[i] = Some(0);
                queue.push_back(i);
            }
        }
        while let Some(v) = queue.pop_front() {
            let d = rank[v].expect("queued nodes are ranked");
            for &w in &self.edges[v] {
                if rank[w].is_none() {
                    rank[w] = Some(d + 1);
                    queue.push_back(w);
                }
            }
        }
        rank
    }

    /// Ranks by walking every path out of every central node, keeping the
    /// shortest arrival at each node. Exponential; meant as a cross-check
    /// on small graphs.
    pub fn ranks_by_enumeration(&self) -> Vec<Option<usize>> {
        let simple: Vec<BTreeSet<usize>> = self.edges.iter().map(|e| e.iter().copied().collect()).collect();
        let mut rank = vec![None; self.nodes.len()];
        let mut stack: Vec<(usize, usize)> = Vec::new();
        for (i, n) in self.nodes.iter().enumerate() {
            if n.index == 0 {
                stack.push((i, 0));
            }
        }
        while let Some((v, d)) = stack.pop() {
            if rank[v].is_some_and(|r: usize| r <= d) && d > 0 {
                continue;
            }
            if rank[v].is_none_or(|r| d < r) {
                rank[v] = Some(d);
            }
            for &w in &simple[v] {
                stack.push((w, d + 1));
            }
        }
        rank
    }
}

fn landing<T: Real>(level: &NestLevel<T>, x: &T) -> Option<i64> {
    level
        .intervals()
        .find(|iv: &&LevelInterval<T>| iv.interval.contains(x))
        .map(|iv| iv.signed_index)
}

/// Every parameter of one level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelGeometry<T> {
    pub n: usize,
    pub mu: T,
    pub lambda: Option<T>,
    pub lambda_star: Option<T>,
    pub alpha: Option<T>,
    /// Some non-central interval reaches 0, so `α` is infinite.
    pub alpha_unbounded: bool,
    #[serde(rename = "K")]
    pub k: Option<KParam<T>>,
    pub rho: Option<Distortion<T>>,
    pub kappa: usize,
    pub in_l: bool,
    pub r_n: usize,
    pub interval_count: usize,
    pub omega: Option<T>,
}

pub fn level_geometry<T: Real>(nest: &NestResult<T>, n: usize, samples: usize) -> Result<LevelGeometry<T>> {
    let level = nest.level(n)?;
    let lambda = lambda_param(nest, n).ok();
    let (alpha, alpha_unbounded) = match alpha_param(nest, n) {
        Ok(a) => (Some(a), false),
        Err(Error::DistanceZero) => (None, true),
        Err(_) => (None, false),
    };
    Ok(LevelGeometry {
        n,
        mu: scaling_factor(nest, n)?,
        lambda_star: lambda.as_ref().map(|l| l.lambda_star.clone()),
        lambda: lambda.map(|l| l.lambda),
        alpha,
        alpha_unbounded,
        k: k_param(nest, n).ok(),
        rho: rho_param(nest, n, samples).ok(),
        kappa: nest.kappa.get(n).copied().unwrap_or(0),
        in_l: nest.in_l(n),
        r_n: level.r_n,
        interval_count: level.interval_count(),
        omega: omega_total(nest, n).ok(),
    })
}

/// Geometry of every built level, computed in parallel.
pub fn nest_geometry<T: Real>(nest: &NestResult<T>, samples: usize) -> Result<Vec<LevelGeometry<T>>> {
    (1..=nest.depth())
        .into_par_iter()
        .map(|n| level_geometry(nest, n, samples))
        .collect()
}

/// [`nest_geometry`] on the default sample grid.
pub fn default_geometry<T: Real>(nest: &NestResult<T>) -> Result<Vec<LevelGeometry<T>>> {
    nest_geometry(nest, DEFAULT_SAMPLES)
}

/// Where the critical orbit lands inside a non-central interval `I_t` on
/// its way back to `Iⁿ`: `U ⊂ I_t` is the pullback of `Iⁿ` along the orbit
/// from `r_n` to `r_{n+1}`, and `L`, `R` are the pieces of `I_t ∖ U`, `L`
/// nearer 0. Diagnostic only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandingRatios<T> {
    pub n: usize,
    pub index: i64,
    /// Returns to `Iⁿ⁻¹` needed to reach `Iⁿ`.
    pub l: usize,
    pub u_over_l: T,
    pub u_over_r: T,
    pub mu: T,
    pub lambda_star: Option<T>,
}

/// `None` when `x_{r_n}` returns centrally or the level is the last one.
pub fn landing_ratios<T: Real>(nest: &NestResult<T>, n: usize) -> Result<Option<LandingRatios<T>>> {
    let map = nest_map(nest)?;
    let level = nest.level(n)?;
    let (r, next) = (level.r_n, level.next_return);
    if next <= r {
        return Ok(None);
    }
    let mut orbit = orbit_upto(nest, next)?;
    let x = orbit.points()[r].clone();
    let Some(index) = landing(level, &x).filter(|i| *i != 0) else {
        return Ok(None);
    };
    let it = level.by_index(index).ok_or(Error::MissingLevel(n))?.interval.clone();
    let outer = nest.central(n - 1)?;
    let l = (r + 1..=next)
        .filter(|&k| outer.contains_interior(&orbit.points()[k]))
        .count();
    let u = crate::dynamics::monotone_pullback(map, nest.central(n)?, &mut orbit, r, next - r)?.domain;
    if u.lo < it.lo || u.hi > it.hi {
        return Err(Error::Bookkeeping(format!("landing interval leaves I_{index} at level {n}")));
    }
    let left = u.lo.clone() - it.lo.clone();
    let right = it.hi.clone() - u.hi.clone();
    let (near, far) = if it.lo.sign() > 0 { (left, right) } else { (right, left) };
    Ok(Some(LandingRatios {
        n,
        index,
        l,
        u_over_l: u.length() / near,
        u_over_r: u.length() / far,
        mu: scaling_factor(nest, n)?,
        lambda_star: lambda_param(nest, n).ok().map(|x| x.lambda_star),
    }))
}
