//! Parameters with prescribed principal-nest combinatorics: itineraries,
//! probes, the bracket search, and parameter scans.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{monotone_pullback, CriticalOrbit, QuadraticMap};
use crate::error::{Error, Result};
use crate::hyperbolic::Interval;
use crate::nest::{build_nest, initial_interval, next_entry, NestConfig, NestResult, ReturnClass};
use crate::precision::{BigReal, PrecisionContext};
use crate::scalar::Real;

/// Target behaviour of one level `n`.
///
/// `order` pins `ordⁿ₀`, the number of entries into `Iⁿ⁻¹` up to the next
/// central return. `shortest` asks that `g_n(0)` land in an interval whose
/// return time is the smallest possible one, `r_{n-1}`. `side` fixes the
/// sign of `g_n(0)`. Written `C`, `N`, `N2`, `N2s`, `N2s-`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Symbol {
    pub class: ReturnClass,
    pub order: Option<usize>,
    pub shortest: bool,
    pub side: Option<i8>,
}

/// What one level of a nest actually did.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Observed {
    pub class: ReturnClass,
    pub order: Option<usize>,
    pub shortest: Option<bool>,
    pub side: i8,
}

impl Symbol {
    pub fn matches(&self, obs: &Observed) -> bool {
        if self.class != obs.class {
            return false;
        }
        if self.order.is_some() && obs.order != self.order {
            return false;
        }
        if self.shortest && obs.shortest != Some(true) {
            return false;
        }
        self.side.is_none_or(|s| s == obs.side)
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self.class {
            ReturnClass::Central => "C",
            ReturnClass::NonCentral => "N",
        };
        f.write_str(s)?;
        if let Some(k) = self.order {
            write!(f, "{k}")?;
        }
        if self.shortest {
            f.write_str("s")?;
        }
        match self.side {
            Some(s) if s > 0 => f.write_str("+"),
            Some(_) => f.write_str("-"),
            None => Ok(()),
        }
    }
}

impl FromStr for Symbol {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Parse(format!("bad level symbol `{s}`"));
        let mut rest = s;
        let class = match rest.chars().next() {
            Some('C') | Some('c') => ReturnClass::Central,
            Some('N') | Some('n') => ReturnClass::NonCentral,
            _ => return Err(bad()),
        };
        rest = &rest[1..];
        let side = if let Some(r) = rest.strip_suffix('+') {
            rest = r;
            Some(1)
        } else if let Some(r) = rest.strip_suffix('-') {
            rest = r;
            Some(-1)
        } else {
            None
        };
        let shortest = match rest.strip_suffix('s') {
            Some(r) => {
                rest = r;
                true
            }
            None => false,
        };
        let order = if rest.is_empty() {
            None
        } else {
            Some(rest.parse::<usize>().map_err(|_| bad())?)
        };
        if order == Some(0) || (shortest && class == ReturnClass::Central) {
            return Err(bad());
        }
        Ok(Symbol {
            class,
            order,
            shortest,
            side,
        })
    }
}

/// A finite prefix of level symbols followed by an optional block that
/// repeats forever. Starred symbols form the block: `C,N2,N*` and
/// `N2+,N2s-*,N2s+*`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReturnItinerary {
    pub prefix: Vec<Symbol>,
    pub tail: Vec<Symbol>,
}

impl ReturnItinerary {
    /// Non-central returns of order 2 on every level, each landing in the
    /// interval with return time `r_{n-1}` (so `r_{n+1} = r_n + r_{n-1}`),
    /// with the landing sides of the real Fibonacci map.
    pub fn fibonacci() -> Self {
        let n2 = |shortest, side| Symbol {
            class: ReturnClass::NonCentral,
            order: Some(2),
            shortest,
            side: Some(side),
        };
        Self {
            prefix: vec![n2(false, 1)],
            tail: vec![n2(true, -1), n2(true, -1), n2(true, 1), n2(true, 1)],
        }
    }

    /// Symbol for level `n >= 1`.
    pub fn at(&self, n: usize) -> Option<Symbol> {
        if n == 0 {
            return None;
        }
        if let Some(s) = self.prefix.get(n - 1) {
            return Some(*s);
        }
        if self.tail.is_empty() {
            return None;
        }
        Some(self.tail[(n - 1 - self.prefix.len()) % self.tail.len()])
    }

    /// Number of specified levels; `None` when a block repeats.
    pub fn len(&self) -> Option<usize> {
        if self.tail.is_empty() {
            Some(self.prefix.len())
        } else {
            None
        }
    }

    pub fn is_empty(&self) -> bool {
        self.prefix.is_empty() && self.tail.is_empty()
    }

    /// The itinerary with its last symbol repeated forever.
    pub fn extended(&self) -> Self {
        if !self.tail.is_empty() || self.prefix.is_empty() {
            return self.clone();
        }
        let mut prefix = self.prefix.clone();
        let last = prefix.pop().into_iter().collect();
        Self { prefix, tail: last }
    }
}

impl fmt::Display for ReturnItinerary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .prefix
            .iter()
            .map(|s| s.to_string())
            .chain(self.tail.iter().map(|t| format!("{t}*")))
            .collect();
        f.write_str(&parts.join(","))
    }
}

impl FromStr for ReturnItinerary {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("fibonacci") {
            return Ok(Self::fibonacci());
        }
        let mut prefix = Vec::new();
        let mut tail = Vec::new();
        for p in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            if let Some(body) = p.strip_suffix('*') {
                tail.push(body.parse()?);
            } else if !tail.is_empty() {
                return Err(Error::Parse(format!("`{p}` follows the repeated block")));
            } else {
                prefix.push(p.parse()?);
            }
        }
        if prefix.is_empty() && tail.is_empty() {
            return Err(Error::Parse(format!("empty itinerary `{s}`")));
        }
        Ok(Self { prefix, tail })
    }
}

/// How far a parameter follows an itinerary.
#[derive(Debug, Clone)]
pub struct Probe<T> {
    pub c: T,
    /// Number of leading levels that match.
    pub agreement: usize,
    /// Return times `r_1, r_2, ...` as far as built.
    pub returns: Vec<usize>,
    /// `x_{r_m} / halfwidth(I^{m-1})` for each built level `m`.
    pub positions: Vec<T>,
}

impl<T: Real> Probe<T> {
    /// Return time on the first deviating level.
    pub fn mismatch_return(&self) -> Option<usize> {
        self.returns.get(self.agreement).copied()
    }

    /// Landing position on the first deviating level.
    pub fn z(&self) -> Option<&T> {
        self.positions.get(self.agreement)
    }
}

struct Trace<T> {
    probe: Probe<T>,
    map: Option<QuadraticMap<T>>,
    orbit: Option<CriticalOrbit<T>>,
    /// `I^0, ..., I^{agreement}`.
    centrals: Vec<Interval<T>>,
}

fn trace<T: Real>(c: &T, target: &ReturnItinerary, depth: usize, ctx: PrecisionContext, cap: usize) -> Trace<T> {
    let mut tr = Trace {
        probe: Probe {
            c: c.clone(),
            agreement: 0,
            returns: Vec::new(),
            positions: Vec::new(),
        },
        map: None,
        orbit: None,
        centrals: Vec::new(),
    };
    let Ok(map) = QuadraticMap::new(c.clone(), ctx) else {
        return tr;
    };
    let Ok(i0) = initial_interval(&map) else {
        return tr;
    };
    let mut orbit = CriticalOrbit::new(&map);
    tr.centrals.push(i0);
    for n in 1..=depth {
        let Some(sym) = target.at(n) else { break };
        let prev = tr.centrals[n - 1].clone();
        match follow_level(&map, &mut orbit, &prev, n, &sym, &mut tr.probe, cap) {
            Some(central) => {
                tr.probe.agreement = n;
                tr.centrals.push(central);
            }
            None => break,
        }
    }
    tr.map = Some(map);
    tr.orbit = Some(orbit);
    tr
}

/// Builds level `n` from `prev = I^{n-1}` and returns `I^n` if the level
/// matches `sym`.
fn follow_level<T: Real>(
    map: &QuadraticMap<T>,
    orbit: &mut CriticalOrbit<T>,
    prev: &Interval<T>,
    n: usize,
    sym: &Symbol,
    out: &mut Probe<T>,
    cap: usize,
) -> Option<Interval<T>> {
    let r = next_entry(map, orbit, prev, 1, cap).ok()?;
    out.returns.push(r);
    let x_r = orbit.points()[r].clone();
    out.positions.push(x_r.clone() / prev.half_width());
    let central = monotone_pullback(map, prev, orbit, 0, r).ok()?.domain;
    let floor = prev.length() * map.ctx.tolerance::<T>();
    if prev.length() - central.length() <= floor {
        return None;
    }
    let class = if central.contains_interior(&x_r) {
        ReturnClass::Central
    } else {
        ReturnClass::NonCentral
    };
    let order = if sym.order.is_some() {
        next_entry(map, orbit, &central, 1, cap).ok().map(|next| {
            (1..=next)
                .filter(|&k| prev.contains_interior(&orbit.points()[k]))
                .count()
        })
    } else {
        None
    };
    let shortest = if sym.shortest {
        if n >= 2 && class == ReturnClass::NonCentral {
            next_entry(map, orbit, prev, r + 1, cap)
                .ok()
                .map(|t| t - r == out.returns[n - 2])
        } else {
            Some(false)
        }
    } else {
        None
    };
    let obs = Observed {
        class,
        order,
        shortest,
        side: if x_r.sign() < 0 { -1 } else { 1 },
    };
    sym.matches(&obs).then_some(central)
}

/// Follows the nest of `c` level by level until it leaves `target` or
/// reaches `depth` matching levels.
pub fn probe<T: Real>(c: &T, target: &ReturnItinerary, depth: usize, ctx: PrecisionContext, cap: usize) -> Probe<T> {
    trace(c, target, depth, ctx, cap).probe
}

/// Quantities that sweep monotonically across a parameter window whose
/// points all realize `a` levels; zeros and level crossings locate the
/// sub-windows realizing level `a + 1`.
#[derive(Debug, Clone, Copy)]
enum Disc {
    /// `x_t / halfwidth(I^a)` at the first entry `t` into `I^a`.
    Center,
    /// Position of that entry relative to the interval of return time
    /// `r_a` on the given side, rescaled so the interval is `[-1, 1]`.
    Landing(i8),
    /// `x_{t + r_a} / halfwidth(I^a)`.
    Next,
}

fn discriminant<T: Real>(tr: &mut Trace<T>, a: usize, kind: Disc, cap: usize) -> Option<T> {
    let prev = tr.centrals.get(a)?.clone();
    let map = tr.map.as_ref()?;
    let orbit = tr.orbit.as_mut()?;
    let t = next_entry(map, orbit, &prev, 1, cap).ok()?;
    let x = orbit.points()[t].clone();
    match kind {
        Disc::Center => Some(x / prev.half_width()),
        Disc::Landing(side) => {
            let r_a = *tr.probe.returns.get(a.checked_sub(1)?)?;
            // Points of I^a reaching I^a after r_a iterates: pull I^a back
            // along x_1, ..., x_{r_a}, then take both square roots.
            let v = if r_a > 1 {
                monotone_pullback(map, &prev, orbit, 1, r_a - 1).ok()?.domain
            } else {
                prev.clone()
            };
            let lo = v.lo.clone() - map.c.clone();
            if lo.sign() <= 0 {
                return None;
            }
            let a0 = lo.try_sqrt().ok()?;
            let b0 = (v.hi.clone() - map.c.clone()).try_sqrt().ok()?;
            let half = T::from_f64_at(0.5, map.ctx.bits);
            let mut mid = (a0.clone() + b0.clone()) * half.clone();
            if side < 0 {
                mid = -mid;
            }
            Some((x - mid) / ((b0 - a0) * half))
        }
        Disc::Next => {
            let r_a = *tr.probe.returns.get(a.checked_sub(1)?)?;
            let y = orbit.get(map, t + r_a).ok()?.clone();
            Some(y / prev.half_width())
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LocateConfig {
    pub digits: usize,
    pub max_depth: usize,
    /// Grid points per zoom cell of the fallback search.
    pub grid: usize,
    /// Maximum nesting of zoom cells per level.
    pub max_zoom: usize,
    /// Probes one level's fallback grid search may spend.
    pub zoom_probes: usize,
    /// Total probe budget.
    pub budget: usize,
    /// Keep narrowing past `max_depth` with the tail (or the last symbol)
    /// repeated, until the bracket is `10^-digits` wide.
    pub extend: bool,
}

impl Default for LocateConfig {
    fn default() -> Self {
        Self {
            digits: 40,
            max_depth: 10,
            grid: 24,
            max_zoom: 6,
            zoom_probes: 4000,
            budget: 400_000,
            extend: true,
        }
    }
}

/// One accepted narrowing step.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BracketStep {
    pub level: usize,
    pub lo: BigReal,
    pub hi: BigReal,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LocateResult {
    pub lo: BigReal,
    pub hi: BigReal,
    /// Levels realized by both endpoints.
    pub depth: usize,
    pub history: Vec<BracketStep>,
    pub probes: usize,
    pub bits: u32,
}

impl LocateResult {
    pub fn width(&self) -> BigReal {
        self.hi.clone() - self.lo.clone()
    }

    pub fn midpoint(&self) -> BigReal {
        (self.lo.clone() + self.hi.clone()) * BigReal::with_bits(0.5, self.bits)
    }
}

struct Searcher<'a> {
    /// The itinerary being searched, with each settled level pinned to
    /// the refined symbol its bracket actually realizes.
    target: ReturnItinerary,
    ctx: PrecisionContext,
    cfg: &'a LocateConfig,
    probes: usize,
    cap: usize,
    /// Probe count after which the current fallback search gives up.
    zoom_limit: usize,
}

impl Searcher<'_> {
    fn spend(&mut self, n: usize) -> Result<()> {
        if self.probes + n > self.cfg.budget {
            return Err(Error::NotRealized("probe budget exhausted".into()));
        }
        self.probes += n;
        Ok(())
    }

    fn trace(&mut self, c: &BigReal, depth: usize) -> Result<Trace<BigReal>> {
        self.spend(1)?;
        Ok(trace(c, &self.target, depth, self.ctx, self.cap))
    }

    fn realizes(&mut self, c: &BigReal, goal: usize) -> Result<bool> {
        Ok(self.trace(c, goal)?.probe.agreement >= goal)
    }

    fn pin(&mut self, n: usize, sym: Symbol) {
        while self.target.prefix.len() < n {
            let k = self.target.prefix.len() + 1;
            let next = self.target.at(k).expect("pinned level within the itinerary");
            self.target.prefix.push(next);
        }
        self.target.prefix[n - 1] = sym;
    }

    fn num(&self, x: f64) -> BigReal {
        BigReal::with_bits(x, self.ctx.bits)
    }

    fn eval(&mut self, c: &BigReal, goal: usize, kind: Disc) -> Result<(Option<BigReal>, bool)> {
        let mut tr = self.trace(c, goal)?;
        let ok = tr.probe.agreement >= goal;
        Ok((discriminant(&mut tr, goal - 1, kind, self.cap), ok))
    }

    /// Bisects `disc = value` on `[a, b]`. With `stop` set, returns the
    /// first midpoint realizing `goal` levels.
    fn solve(
        &mut self,
        a: &BigReal,
        b: &BigReal,
        goal: usize,
        kind: Disc,
        value: f64,
        stop: bool,
    ) -> Result<Option<BigReal>> {
        let v = self.num(value);

        let (Some(da), _) = self.eval(a, goal, kind)? else {
            return Ok(None);
        };
        let (Some(db), _) = self.eval(b, goal, kind)? else {
            return Ok(None);
        };
        let sa = (da - v.clone()).sign();
        let sb = (db - v.clone()).sign();
        if sa == 0 {
            return Ok(Some(a.clone()));
        }
        if sb == 0 {
            return Ok(Some(b.clone()));
        }
        if sa == sb {
            return Ok(None);
        }
        let (mut a, mut b) = (a.clone(), b.clone());
        let tol = self.resolution(&a, &b, 48);
        let half = self.num(0.5);
        while (b.clone() - a.clone()).abs() > tol {
            let m = (a.clone() + b.clone()) * half.clone();
            let (dm, ok) = self.eval(&m, goal, kind)?;
            if stop && ok {
                return Ok(Some(m));
            }
            let Some(dm) = dm else { return Ok(None) };
            let sm = (dm - v.clone()).sign();
            if sm == 0 {
                return Ok(Some(m));
            }
            if sm == sa {
                a = m;
            } else {
                b = m;
            }
        }
        Ok(Some((a + b) * half))
    }

    /// `|b - a| 2^-k`, floored at the working resolution.
    fn resolution(&self, a: &BigReal, b: &BigReal, k: i32) -> BigReal {
        let rel = (b.clone() - a.clone()).abs() * BigReal::pow2(-k, self.ctx.bits);
        BigReal::max_of(&rel, &self.floor(a, b))
    }

    /// Smallest separation the working precision resolves near `a` and `b`.
    fn floor(&self, a: &BigReal, b: &BigReal) -> BigReal {
        let scale = BigReal::max_of(&a.abs(), &b.abs());
        scale * self.ctx.tolerance::<BigReal>() * self.num(16.0)
    }

    /// A parameter in `[lo, hi]` realizing `goal` levels, found by following
    /// monotone discriminants. Only central symbols and order-2 shortest
    /// landings have one.
    fn directed(&mut self, lo: &BigReal, hi: &BigReal, goal: usize, sym: &Symbol) -> Result<Option<BigReal>> {
        let found = match sym.class {
            ReturnClass::Central => self.solve(lo, hi, goal, Disc::Center, 0.0, true)?,
            // An order-2 return landing in a shortest-return interval is one
            // way to realize a non-central symbol of order 2 or of any order.
            ReturnClass::NonCentral if sym.order.is_none_or(|k| k == 2) && goal >= 2 => {
                let sides = match sym.side {
                    Some(s) => vec![s],
                    None => vec![1, -1],
                };
                let mut found = None;
                for side in sides {
                    let refined = Symbol {
                        class: ReturnClass::NonCentral,
                        order: Some(2),
                        shortest: true,
                        side: Some(side),
                    };
                    self.pin(goal, refined);
                    let e1 = self.solve(lo, hi, goal, Disc::Landing(side), -1.0, false)?;
                    let e2 = self.solve(lo, hi, goal, Disc::Landing(side), 1.0, false)?;
                    let (Some(e1), Some(e2)) = (e1, e2) else { continue };
                    let (a, b) = if e1 < e2 { (e1, e2) } else { (e2, e1) };
                    if let Some(p) = self.solve(&a, &b, goal, Disc::Next, 0.0, true)? {
                        found = Some(p);
                        break;
                    }
                }
                found
            }
            _ => None,
        };
        match found {
            Some(p) if self.realizes(&p, goal)? => Ok(Some(p)),
            _ => {
                self.pin(goal, *sym);
                Ok(None)
            }
        }
    }

    fn grid(&mut self, lo: &BigReal, hi: &BigReal, depth: usize) -> Result<Vec<Probe<BigReal>>> {
        let n = self.cfg.grid.max(2);
        let step = (hi.clone() - lo.clone()) / self.num(n as f64);
        let pts: Vec<BigReal> = (0..=n)
            .map(|i| lo.clone() + step.clone() * self.num(i as f64))
            .collect();
        self.spend(pts.len())?;
        let (target, ctx, cap) = (&self.target, self.ctx, self.cap);
        Ok(pts
            .par_iter()
            .map(|c| probe(c, target, depth, ctx, cap))
            .collect())
    }

    /// Grid search with recursive zoom, for symbols without a directed
    /// route. Cells are refined where the landing position changes sign
    /// or where the deviating return time changes.
    fn find(&mut self, lo: &BigReal, hi: &BigReal, goal: usize, zoom: usize) -> Result<Option<BigReal>> {
        let pts = self.grid(lo, hi, goal)?;
        // Middle of the longest run of realizing grid points: wide
        // components leave more room for the levels below.
        let mut best_run = (0, 0);
        let mut start = 0;
        for i in 0..=pts.len() {
            if i < pts.len() && pts[i].agreement >= goal {
                continue;
            }
            if i - start > best_run.1 - best_run.0 {
                best_run = (start, i);
            }
            start = i + 1;
        }
        if best_run.1 > best_run.0 {
            return Ok(Some(pts[(best_run.0 + best_run.1 - 1) / 2].c.clone()));
        }
        if zoom >= self.cfg.max_zoom || self.probes >= self.zoom_limit {
            return Ok(None);
        }
        if (hi.clone() - lo.clone()).abs() <= self.floor(lo, hi) {
            return Ok(None);
        }
        let best = pts.iter().map(|p| p.agreement).max().unwrap_or(0);
        let mut cells: Vec<(u8, usize)> = Vec::new();
        for i in 0..pts.len() - 1 {
            let (a, b) = (&pts[i], &pts[i + 1]);
            if a.agreement != best && b.agreement != best {
                continue;
            }
            if a.agreement == b.agreement && a.mismatch_return() == b.mismatch_return() {
                if let (Some(za), Some(zb)) = (a.z(), b.z()) {
                    if za.sign() * zb.sign() < 0 {
                        cells.push((0, i));
                    }
                }
            } else {
                cells.push((1, i));
            }
        }
        cells.sort();
        for (_, i) in cells.into_iter().take(8) {
            if let Some(c) = self.find(&pts[i].c, &pts[i + 1].c, goal, zoom + 1)? {
                return Ok(Some(c));
            }
        }
        Ok(None)
    }

    /// Boundary of the set `{agreement >= goal}` between a realizing point
    /// `inside` and a failing point `outside`; returns the realizing side.
    fn edge(&mut self, inside: &BigReal, outside: &BigReal, goal: usize, tol: &BigReal) -> Result<BigReal> {
        let mut a = inside.clone();
        let mut b = outside.clone();
        let half = self.num(0.5);
        while (b.clone() - a.clone()).abs() > *tol {
            let m = (a.clone() + b.clone()) * half.clone();
            if m == a || m == b {
                break;
            }
            if self.realizes(&m, goal)? {
                a = m;
            } else {
                b = m;
            }
        }
        Ok(a)
    }

    /// Walks from the realizing point `p` toward `bound` with doubling steps
    /// until a failing point turns up, then bisects to the edge of the
    /// component of `p`.
    fn expand(&mut self, p: &BigReal, bound: &BigReal, goal: usize) -> Result<BigReal> {
        let span = bound.clone() - p.clone();
        let mut h = span.clone() * BigReal::pow2(-40, self.ctx.bits);
        let mut inside = p.clone();
        let outside = loop {
            let last = h.abs() >= span.abs();
            let q = if last { bound.clone() } else { p.clone() + h.clone() };
            if !self.realizes(&q, goal)? {
                break q;
            }
            if last {
                return Ok(q);
            }
            inside = q;
            h = h * self.num(2.0);
        };
        let tol = self.resolution(p, &outside, 24);
        self.edge(&inside, &outside, goal, &tol)
    }
}

/// Brackets the parameters in `window` whose nest follows `target` for
/// `cfg.max_depth` levels, narrowing to `10^-cfg.digits`.
pub fn locate_itinerary(
    target: &ReturnItinerary,
    window: &Interval<BigReal>,
    ctx: PrecisionContext,
    cfg: &LocateConfig,
) -> Result<LocateResult> {
    let bits = ctx
        .bits
        .max((cfg.digits as f64 * std::f64::consts::LOG2_10).ceil() as u32 + 96);
    let ctx = PrecisionContext { bits, ..ctx };
    let extended = if cfg.extend { target.extended() } else { target.clone() };
    let mut s = Searcher {
        target: extended.clone(),
        ctx,
        cfg,
        probes: 0,
        cap: 4096,
        zoom_limit: 0,
    };
    let want = BigReal::parse(&format!("1e-{}", cfg.digits), bits)?;
    let mut lo = window.lo.at_bits(bits);
    let mut hi = window.hi.at_bits(bits);
    let mut history = Vec::new();
    let mut level = 0;
    let limit = extended.len().unwrap_or(usize::MAX);
    loop {
        let goal = level + 1;
        if goal > limit || (level >= cfg.max_depth && hi.clone() - lo.clone() <= want) {
            break;
        }
        let sym = extended.at(goal).expect("goal within the itinerary");
        s.pin(goal, sym);
        let mut found = s.directed(&lo, &hi, goal, &sym)?;
        if found.is_none() {
            s.zoom_limit = s.probes + cfg.zoom_probes;
            found = s.find(&lo, &hi, goal, 0)?;
        }
        let Some(p) = found else {
            if level >= cfg.max_depth {
                break;
            }
            return Err(Error::NotRealized(format!(
                "no parameter in the window follows the first {goal} levels"
            )));
        };
        let new_lo = s.expand(&p, &lo, goal)?;
        let new_hi = s.expand(&p, &hi, goal)?;
        let shrink = (hi.clone() - lo.clone()) / (new_hi.clone() - new_lo.clone());
        lo = new_lo;
        hi = new_hi;
        level = goal;
        // Levels that leave the bracket (nearly) unchanged are not steps.
        if shrink >= BigReal::with_bits(1.9, bits) {
            history.push(BracketStep {
                level,
                lo: lo.clone(),
                hi: hi.clone(),
            });
        }
        let r = s.trace(&p, goal)?.probe.returns.last().copied().unwrap_or(1);
        s.cap = s.cap.max(16 * r);
        if hi.clone() - lo.clone() <= s.floor(&lo, &hi) {
            break;
        }
    }
    if level < cfg.max_depth {
        return Err(Error::NotRealized(format!("only {level} levels realized")));
    }
    if hi.clone() - lo.clone() > want {
        // The itinerary stops constraining the parameter: settle for a
        // sub-bracket of the requested width around the midpoint.
        let mid = (lo.clone() + hi.clone()) * BigReal::with_bits(0.5, bits);
        let half = want.clone() * BigReal::with_bits(0.5, bits);
        let a = mid.clone() - half.clone();
        let b = mid + half;
        for e in [&a, &b] {
            if !s.realizes(e, cfg.max_depth)? {
                return Err(Error::NotRealized("midpoint sub-bracket fails".into()));
            }
        }
        let shrink = (hi.clone() - lo.clone()) / want.clone();
        lo = a;
        hi = b;
        if shrink >= BigReal::with_bits(1.9, bits) {
            history.push(BracketStep {
                level,
                lo: lo.clone(),
                hi: hi.clone(),
            });
        }
    }
    Ok(LocateResult {
        lo,
        hi,
        depth: level,
        history,
        probes: s.probes,
        bits,
    })
}

/// Builds both endpoints of a bracket at `factor` times the precision and
/// returns the number of target levels each realizes.
pub fn verify_bracket(
    result: &LocateResult,
    target: &ReturnItinerary,
    depth: usize,
    factor: u32,
) -> (usize, usize) {
    let bits = result.bits * factor;
    let ctx = PrecisionContext {
        bits,
        guard_bits: 32,
        rng_seed: 1,
    };
    let a = probe(&result.lo.at_bits(bits), target, depth, ctx, 1 << 20);
    let b = probe(&result.hi.at_bits(bits), target, depth, ctx, 1 << 20);
    (a.agreement, b.agreement)
}

/// One classified parameter.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanRow {
    pub c: String,
    pub termination: String,
    pub depth: usize,
    /// Per-level classes, `C` or `N`.
    pub classes: String,
    pub mu_last: Option<f64>,
    pub k_last: Option<f64>,
    pub kappa_ok: bool,
}

/// Builds the nest of `c` and summarizes it.
pub fn classify_parameter<T: Real>(c: &T, ctx: PrecisionContext, cfg: &NestConfig) -> ScanRow {
    let digits = c.full_digits().min(40);
    match QuadraticMap::new(c.clone(), ctx) {
        Ok(map) => {
            let nest = build_nest(&map, cfg);
            row_from_nest(&nest, digits)
        }
        Err(e) => ScanRow {
            c: c.to_decimal(digits),
            termination: format!("invalid: {e}"),
            depth: 0,
            classes: String::new(),
            mu_last: None,
            k_last: None,
            kappa_ok: true,
        },
    }
}

fn row_from_nest<T: Real>(nest: &NestResult<T>, digits: usize) -> ScanRow {
    let classes: String = nest
        .classes()
        .iter()
        .map(|c| match c {
            ReturnClass::Central => 'C',
            ReturnClass::NonCentral => 'N',
        })
        .collect();
    let d = nest.depth();
    let mu_last = if d >= 1 {
        match (nest.central(d), nest.central(d - 1)) {
            (Ok(a), Ok(b)) => Some((a.length() / b.length()).to_f64()),
            _ => None,
        }
    } else {
        None
    };
    let k_last = if d >= 1 {
        crate::geometry::k_param(nest, d).ok().map(|k| k.value.to_f64())
    } else {
        None
    };
    ScanRow {
        c: nest.c.to_decimal(digits),
        termination: nest.termination.name().to_string(),
        depth: d,
        classes,
        mu_last,
        k_last,
        kappa_ok: crate::verify::kappa_invariant(nest),
    }
}

/// `steps` cell midpoints of `window`, classified in parallel on the
/// current rayon pool; row order follows the parameter order.
pub fn scan<T: Real>(window: &Interval<T>, steps: usize, ctx: PrecisionContext, cfg: &NestConfig) -> Vec<ScanRow> {
    let steps = steps.max(1);
    let width = window.length();
    let n = T::from_f64_at(steps as f64, ctx.bits);
    let params: Vec<T> = (0..steps)
        .map(|i| {
            let t = T::from_f64_at(i as f64 + 0.5, ctx.bits);
            window.lo.at_bits(ctx.bits) + width.clone() * t / n.clone()
        })
        .collect();
    params
        .par_iter()
        .map(|c| classify_parameter(c, ctx, cfg))
        .collect()
}
