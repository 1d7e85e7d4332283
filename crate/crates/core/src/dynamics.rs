//! The quadratic family `x -> x² + c`: orbits with precision-loss tracking,
//! Schwarzian derivatives of iterates, monotone pullbacks and distortion.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hyperbolic::{GapConfiguration, Interval};
use crate::precision::{eval_sqrt_branch, Branch, PrecisionContext};
use crate::scalar::Real;

/// Default number of Chebyshev-Lobatto sample points for distortion.
pub const DEFAULT_SAMPLES: usize = 33;

/// `f(x) = x² + c` with critical point 0.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuadraticMap<T> {
    pub c: T,
    /// Orientation-reversing fixed point `(1 - √(1 - 4c)) / 2`.
    pub alpha: T,
    /// Orientation-preserving fixed point `(1 + √(1 - 4c)) / 2`.
    pub beta: T,
    pub ctx: PrecisionContext,
}

impl<T: Real> QuadraticMap<T> {
    /// `c` is re-rounded to the context precision; it must satisfy `c < 1/4`.
    pub fn new(c: T, ctx: PrecisionContext) -> Result<Self> {
        let c = c.at_bits(ctx.bits);
        let disc = c.lit(1.0) - c.lit(4.0) * c.clone();
        if disc.sign() <= 0 {
            return Err(Error::InvalidParameter(c.to_decimal(20)));
        }
        let root = disc.try_sqrt()?;
        let half = c.lit(0.5);
        let alpha = (c.lit(1.0) - root.clone()) * half.clone();
        let beta = (c.lit(1.0) + root) * half;
        Ok(Self {
            c,
            alpha,
            beta,
            ctx,
        })
    }

    pub fn from_decimal(c: &str, ctx: PrecisionContext) -> Result<Self> {
        Self::new(T::parse_decimal(c, ctx.bits)?, ctx)
    }

    /// The same parameter at a higher precision; `c` is extended exactly.
    pub fn escalated(&self, bits: u32) -> Result<Self> {
        Self::new(self.c.at_bits(bits), self.ctx.escalated(bits))
    }

    pub fn apply(&self, x: &T) -> T {
        x.clone() * x.clone() + self.c.clone()
    }

    /// `f^n(x)` and the accumulated precision loss in bits.
    pub fn iterate(&self, x: &T, n: usize) -> Result<(T, f64)> {
        let mut y = x.at_bits(self.ctx.bits);
        let mut loss = 0.0;
        for _ in 0..n {
            loss = step_loss(loss, &y);
            y = self.apply(&y);
        }
        if loss > self.ctx.reliable_bits() as f64 {
            return Err(Error::PrecisionExhausted(format!(
                "{loss:.1} bits lost over {n} iterates"
            )));
        }
        Ok((y, loss))
    }

    /// `S(f^l)(x)` through the cocycle `S(f∘g) = (Sf∘g)·(g')² + Sg`.
    pub fn schwarzian_of_iterate(&self, x: &T, l: usize) -> Result<T> {
        let mut y = x.at_bits(self.ctx.bits);
        let mut s = T::zero();
        let mut d = y.lit(1.0);
        let neg_three_halves = y.lit(-1.5);
        for step in 0..l {
            if y.is_zero() {
                return Err(Error::CriticalOrbitPoint(step));
            }
            let sf = neg_three_halves.clone() / (y.clone() * y.clone());
            s = sf * d.clone() * d.clone() + s;
            d = d * y.lit(2.0) * y.clone();
            y = self.apply(&y);
        }
        Ok(s)
    }

    /// `ln |D f^l (x)|`, folding the running product into a log-sum so that
    /// `f64` does not overflow.
    pub fn log_derivative(&self, x: &T, l: usize) -> Result<T> {
        let mut y = x.clone();
        let mut prod = y.lit(1.0);
        let mut acc = T::zero();
        for step in 0..l {
            if y.is_zero() {
                return Err(Error::CriticalOrbitPoint(step));
            }
            prod = prod * y.lit(2.0) * y.clone();
            if step % 16 == 15 {
                acc = acc + prod.abs().try_ln()?;
                prod = y.lit(1.0);
            }
            y = self.apply(&y);
        }
        Ok(acc + prod.abs().try_ln()?)
    }

    /// `ln |D h (y)|` for `h = f^{l-1} ∘ (y ↦ y + c)`, the diffeomorphic part of
    /// `f^l = h ∘ φ` with `φ(x) = x²`.
    pub fn h_log_derivative(&self, y: &T, l: usize) -> Result<T> {
        if l == 0 {
            return Err(Error::OutsideDomain);
        }
        self.log_derivative(&(y.clone() + self.c.clone()), l - 1)
    }

    /// The component of `f^{-1}(target)` on the side of 0 given by `branch`.
    pub fn preimage(&self, target: &Interval<T>, branch: Branch) -> Result<Interval<T>> {
        let p = target.lo.clone() - self.c.clone();
        let q = target.hi.clone() - self.c.clone();
        if p.sign() <= 0 {
            return Err(Error::OutsideDomain);
        }
        let sp = p.try_sqrt()?;
        let sq = q.try_sqrt()?;
        match branch {
            Branch::Plus => Interval::new(sp, sq),
            Branch::Minus => Interval::new(-sq, -sp),
        }
    }

    /// `f^m` applied to both endpoints; exact image while `f^m` is monotone.
    pub fn forward_image(&self, iv: &Interval<T>, m: usize) -> Result<Interval<T>> {
        let mut a = iv.lo.clone();
        let mut b = iv.hi.clone();
        for _ in 0..m {
            a = self.apply(&a);
            b = self.apply(&b);
        }
        if a <= b {
            Interval::new(a, b)
        } else {
            Interval::new(b, a)
        }
    }
}

fn step_loss<T: Real>(loss: f64, y: &T) -> f64 {
    let g = (2.0 * y.to_f64().abs()).log2();
    (loss + g).max(0.0)
}

/// The forward orbit of the critical point, `x_0 = 0, x_{m+1} = f(x_m)`.
#[derive(Debug, Clone)]
pub struct CriticalOrbit<T> {
    points: Vec<T>,
    loss: Vec<f64>,
    reliable_bits: f64,
}

impl<T: Real> CriticalOrbit<T> {
    pub fn new(map: &QuadraticMap<T>) -> Self {
        Self {
            points: vec![T::from_f64_at(0.0, map.ctx.bits)],
            loss: vec![0.0],
            reliable_bits: map.ctx.reliable_bits() as f64,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[T] {
        &self.points
    }

    /// Ensures `x_k` exists, failing once the tracked loss leaves too few
    /// reliable bits.
    pub fn extend_to(&mut self, map: &QuadraticMap<T>, k: usize) -> Result<()> {
        while self.points.len() <= k {
            let last = self.points.last().expect("orbit starts at 0");
            let loss = step_loss(*self.loss.last().unwrap(), last);
            if loss > self.reliable_bits {
                return Err(Error::PrecisionExhausted(format!(
                    "critical orbit lost {loss:.1} bits by step {}",
                    self.points.len()
                )));
            }
            let next = map.apply(last);
            self.points.push(next);
            self.loss.push(loss);
        }
        Ok(())
    }

    pub fn get(&mut self, map: &QuadraticMap<T>, k: usize) -> Result<&T> {
        self.extend_to(map, k)?;
        Ok(&self.points[k])
    }

    pub fn loss_at(&self, k: usize) -> Option<f64> {
        self.loss.get(k).copied()
    }
}

/// A branch of `f^l` mapping `domain` onto `target`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MonotoneBranch<T> {
    pub domain: Interval<T>,
    pub target: Interval<T>,
    /// Number of iterates `l`.
    pub iterates: usize,
    /// Orbit index of the point the branch is anchored at.
    pub anchor: usize,
    /// The first step passes through the critical point; then `domain` is
    /// symmetric about 0 and `f^l = h ∘ φ`.
    pub folding: bool,
}

/// Pulls `target` back along `x_start, ..., x_{start+l}`, choosing at every
/// step the square-root branch on the side of the orbit point.
///
/// Only the last backward step (the one producing the domain) may fold over
/// the critical point; a fold anywhere else is a bookkeeping error.
pub fn monotone_pullback<T: Real>(
    map: &QuadraticMap<T>,
    target: &Interval<T>,
    orbit: &mut CriticalOrbit<T>,
    start: usize,
    l: usize,
) -> Result<MonotoneBranch<T>> {
    orbit.extend_to(map, start + l)?;
    let pts = orbit.points();
    let mut cur = target.clone();
    let mut folding = false;
    for j in (start..start + l).rev() {
        let p = cur.lo.clone() - map.c.clone();
        if p.sign() <= 0 {
            if j != start {
                return Err(Error::FoldEncountered { step: j - start });
            }
            let q = cur.hi.clone() - map.c.clone();
            cur = Interval::symmetric(eval_sqrt_branch(&q, Branch::Plus)?)?;
            folding = true;
        } else {
            cur = map.preimage(&cur, Branch::of(&pts[j]))?;
        }
        check_resolved(map, &cur)?;
    }
    Ok(MonotoneBranch {
        domain: cur,
        target: target.clone(),
        iterates: l,
        anchor: start,
        folding,
    })
}

fn check_resolved<T: Real>(map: &QuadraticMap<T>, iv: &Interval<T>) -> Result<()> {
    let scale = T::max_of(&iv.lo.abs(), &iv.hi.abs());
    if iv.length() <= scale * map.ctx.tolerance::<T>() {
        return Err(Error::PrecisionExhausted(
            "pullback interval below working resolution".into(),
        ));
    }
    Ok(())
}

/// A sampled distortion value together with the grid it was measured on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distortion<T> {
    pub value: T,
    pub samples: usize,
}

/// Chebyshev-Lobatto nodes on `iv`; the 33-point grid is a subset of the
/// 129-point grid (and in general `n` nests into `4n - 3`).
pub fn chebyshev_lobatto<T: Real>(iv: &Interval<T>, samples: usize) -> Vec<T> {
    let n = samples.max(2);
    let mid = iv.midpoint();
    let half = iv.half_width();
    (0..n)
        .map(|i| {
            let t = (std::f64::consts::PI * i as f64 / (n - 1) as f64).cos();
            if i == 0 {
                iv.hi.clone()
            } else if i == n - 1 {
                iv.lo.clone()
            } else {
                mid.clone() + half.clone() * mid.lit(t)
            }
        })
        .collect()
}

/// `max ln|DF| - min ln|DF|` over the sample grid, given `ln|DF|`.
pub fn sampled_distortion<T, F>(log_abs_df: F, iv: &Interval<T>, samples: usize) -> Result<Distortion<T>>
where
    T: Real,
    F: Fn(&T) -> Result<T>,
{
    let mut lo: Option<T> = None;
    let mut hi: Option<T> = None;
    for x in chebyshev_lobatto(iv, samples) {
        let v = log_abs_df(&x)?;
        lo = Some(match lo {
            Some(m) => T::min_of(&m, &v),
            None => v.clone(),
        });
        hi = Some(match hi {
            Some(m) => T::max_of(&m, &v),
            None => v,
        });
    }
    let (lo, hi) = (lo.unwrap(), hi.unwrap());
    Ok(Distortion {
        value: hi - lo,
        samples: samples.max(2),
    })
}

/// Distortion of the branch on `sub`; for a folding branch, the distortion of
/// its diffeomorphic part `h` on `φ(sub)`.
pub fn branch_distortion<T: Real>(
    map: &QuadraticMap<T>,
    branch: &MonotoneBranch<T>,
    sub: &Interval<T>,
    samples: usize,
) -> Result<Distortion<T>> {
    if !branch.domain.contains_interval(sub) {
        return Err(Error::OutsideDomain);
    }
    if branch.folding {
        let phi = phi_image(sub)?;
        sampled_distortion(|y| map.h_log_derivative(y, branch.iterates), &phi, samples)
    } else {
        sampled_distortion(|x| map.log_derivative(x, branch.iterates), sub, samples)
    }
}

/// `φ(iv)` for `φ(x) = x²`.
pub fn phi_image<T: Real>(iv: &Interval<T>) -> Result<Interval<T>> {
    let a = iv.lo.clone() * iv.lo.clone();
    let b = iv.hi.clone() * iv.hi.clone();
    if iv.contains(&T::zero()) {
        Interval::new(T::zero(), T::max_of(&a, &b))
    } else if a < b {
        Interval::new(a, b)
    } else {
        Interval::new(b, a)
    }
}

/// Pushes a configuration inside a non-folding branch domain forward by
/// `f^l`, reordering endpoints if the branch reverses orientation.
pub fn push_forward_config<T: Real>(
    map: &QuadraticMap<T>,
    branch: &MonotoneBranch<T>,
    cfg: &GapConfiguration<T>,
) -> Result<GapConfiguration<T>> {
    let l = branch.iterates;
    let img = |x: &T| -> T {
        let mut y = x.clone();
        for _ in 0..l {
            y = map.apply(&y);
        }
        y
    };
    let (a, u, v, b) = (img(&cfg.a), img(&cfg.u), img(&cfg.v), img(&cfg.b));
    if a < b {
        GapConfiguration::new(a, u, v, b)
    } else {
        GapConfiguration::new(b, v, u, a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyperbolic::poincare_length;
    use crate::precision::BigReal;
    use num_traits::Zero;
    use proptest::prelude::*;

    fn ctx(bits: u32) -> PrecisionContext {
        PrecisionContext::new(bits, 32, 1).unwrap()
    }

    fn map(c: &str, bits: u32) -> QuadraticMap<BigReal> {
        QuadraticMap::from_decimal(c, ctx(bits)).unwrap()
    }

    fn b(v: f64) -> BigReal {
        BigReal::with_bits(v, 256)
    }

    #[test]
    fn fixed_points() {
        let m = map("-2", 256);
        assert_eq!(m.beta, b(2.0));
        assert_eq!(m.alpha, b(-1.0));
        assert!(QuadraticMap::<BigReal>::from_decimal("0.25", ctx(256)).is_err());
        let m = map("-1.3", 256);
        let err = (m.apply(&m.alpha) - m.alpha.clone()).abs();
        assert!(err <= BigReal::pow2(-250, 256));
    }

    #[test]
    fn iterate_examples() {
        let m = map("-2", 256);
        assert_eq!(m.iterate(&b(2.0), 5).unwrap().0, b(2.0));
        let m = map("-1", 256);
        assert!(m.iterate(&b(0.0), 2).unwrap().0.is_zero());
        let lo = map("-1.5", 256).iterate(&BigReal::zero(), 10).unwrap().0;
        let hi = map("-1.5", 512).iterate(&BigReal::zero(), 10).unwrap().0;
        assert_eq!(lo.to_decimal(50), hi.at_bits(256).to_decimal(50));
    }

    #[test]
    fn iterate_reports_exhaustion() {
        let m = map("-2", 64);
        // Near the repelling fixed point every step loses two bits.
        let x = BigReal::with_bits(1.9, 64);
        assert!(matches!(m.iterate(&x, 200), Err(Error::PrecisionExhausted(_))));
    }

    #[test]
    fn schwarzian_single_step() {
        let m = map("-1.5", 256);
        for x in [0.3, -1.1, 2.0] {
            let s = m.schwarzian_of_iterate(&b(x), 1).unwrap();
            let closed = b(-1.5) / (b(x) * b(x));
            assert!((s - closed).abs() <= BigReal::pow2(-250, 256));
        }
        assert_eq!(
            m.schwarzian_of_iterate(&b(0.0), 3),
            Err(Error::CriticalOrbitPoint(0))
        );
    }

    /// `F = f∘f` written out: F' = 4x(x² + c), F'' = 12x² + 4c, F''' = 24x.
    fn schwarzian_two_closed(x: f64, c: f64) -> f64 {
        let d1 = 4.0 * x * (x * x + c);
        let d2 = 12.0 * x * x + 4.0 * c;
        let d3 = 24.0 * x;
        d3 / d1 - 1.5 * (d2 / d1).powi(2)
    }

    #[test]
    fn schwarzian_two_steps_matches_closed_form_and_differences() {
        let c = -1.5;
        let m = map("-1.5", 256);
        for x in [0.4, 0.9, -0.7] {
            let s = m.schwarzian_of_iterate(&b(x), 2).unwrap().to_f64();
            let closed = schwarzian_two_closed(x, c);
            assert!((s - closed).abs() <= 1e-12 * closed.abs());
            assert!(s < 0.0);
            // Fourth-order central differences at 256 bits.
            let h = BigReal::parse("1e-12", 256).unwrap();
            let f2 = |t: &BigReal| m.apply(&m.apply(t));
            let xb = b(x);
            let at = |k: f64| f2(&(xb.clone() + h.clone() * b(k)));
            let d1 = (at(-2.0) - b(8.0) * at(-1.0) + b(8.0) * at(1.0) - at(2.0)) / (b(12.0) * h.clone());
            let d2 = (-at(-2.0) + b(16.0) * at(-1.0) - b(30.0) * at(0.0) + b(16.0) * at(1.0) - at(2.0))
                / (b(12.0) * h.clone() * h.clone());
            let d3 = (-at(-2.0) + b(2.0) * at(-1.0) - b(2.0) * at(1.0) + at(2.0))
                / (b(2.0) * h.clone() * h.clone() * h.clone());
            let fd = (d3 / d1.clone() - b(1.5) * (d2.clone() / d1.clone()) * (d2 / d1)).to_f64();
            assert!((fd - s).abs() <= 1e-8 * s.abs(), "fd {fd} cocycle {s}");
        }
    }

    #[test]
    fn schwarzian_cocycle_splits() {
        let m = map("-1.7", 256);
        let x = b(0.37);
        let (y, _) = m.iterate(&x, 3).unwrap();
        let s5 = m.schwarzian_of_iterate(&x, 5).unwrap();
        let s3 = m.schwarzian_of_iterate(&x, 3).unwrap();
        let s2 = m.schwarzian_of_iterate(&y, 2).unwrap();
        let d3 = m.log_derivative(&x, 3).unwrap().exp();
        let combined = s2 * d3.clone() * d3 + s3;
        assert!((combined - s5.clone()).abs() <= s5.abs() * BigReal::pow2(-200, 256));
    }

    #[test]
    fn one_step_pullback_closed_form() {
        let m = map("-1.5", 256);
        let target = Interval::new(m.alpha.clone(), -m.alpha.clone()).unwrap();
        let mut orbit = CriticalOrbit::new(&m);
        // x_1 = c < 0, so the left branch is chosen.
        let br = monotone_pullback(&m, &target, &mut orbit, 1, 1).unwrap();
        let lo = -(target.hi.clone() - m.c.clone()).try_sqrt().unwrap();
        let hi = -(target.lo.clone() - m.c.clone()).try_sqrt().unwrap();
        assert_eq!(br.domain, Interval::new(lo, hi).unwrap());
        assert!(!br.folding);
    }

    #[test]
    fn full_interval_folds_at_final_step_only() {
        let m = map("-2", 256);
        let target = Interval::new(b(-2.0), b(2.0)).unwrap();
        let mut orbit = CriticalOrbit::new(&m);
        // x_2 = 2: pulling [-2, 2] back once folds, and that is the final step.
        let br = monotone_pullback(&m, &target, &mut orbit, 2, 1).unwrap();
        assert!(br.folding);
        assert_eq!(br.domain, Interval::new(b(-2.0), b(2.0)).unwrap());
        let err = monotone_pullback(&m, &target, &mut orbit, 1, 2);
        assert_eq!(err.unwrap_err(), Error::FoldEncountered { step: 1 });
    }

    #[test]
    fn pullback_maps_onto_target() {
        let m = map("-1.75", 256);
        let target = Interval::new(m.alpha.clone(), -m.alpha.clone()).unwrap();
        let mut orbit = CriticalOrbit::new(&m);
        let br = monotone_pullback(&m, &target, &mut orbit, 1, 2).unwrap();
        let m512 = m.escalated(512).unwrap();
        let img = m512.forward_image(&br.domain.at_bits(512), 2).unwrap();
        let tol = BigReal::pow2(-200, 512);
        assert!((img.lo - target.lo.at_bits(512)).abs() <= tol.clone());
        assert!((img.hi - target.hi.at_bits(512)).abs() <= tol);
    }

    #[test]
    fn distortion_examples() {
        let m = map("-1.5", 256);
        let iv = Interval::new(b(1.0), b(2.0)).unwrap();
        let d = sampled_distortion(|x| m.log_derivative(x, 1), &iv, 33).unwrap();
        assert!((d.value - b(2.0).try_ln().unwrap()).abs() <= BigReal::pow2(-250, 256));
        let d = sampled_distortion(|_| Ok(b(0.3)), &iv, 33).unwrap();
        assert!(d.value.is_zero());
        // One-step folding branch: h is the identity shift, so distortion 0.
        let br = MonotoneBranch {
            domain: Interval::symmetric(b(1.0)).unwrap(),
            target: Interval::new(b(-1.5), b(-0.5)).unwrap(),
            iterates: 1,
            anchor: 0,
            folding: true,
        };
        let d = branch_distortion(&m, &br, &br.domain, 33).unwrap();
        assert!(d.value.is_zero());
        let outside = Interval::new(b(0.5), b(1.5)).unwrap();
        assert_eq!(
            branch_distortion(&m, &br, &outside, 33),
            Err(Error::OutsideDomain)
        );
    }

    #[test]
    fn mobius_distortion_oracle() {
        // M(x) = x / (1 + kx), |M'| = 1/(1+kx)², distortion 2 ln((1+kq)/(1+kp)).
        let k = 0.7;
        let iv = Interval::new(b(0.2), b(1.3)).unwrap();
        let d = sampled_distortion(
            |x: &BigReal| Ok(b(-2.0) * (b(1.0) + b(k) * x.clone()).try_ln()?),
            &iv,
            33,
        )
        .unwrap();
        let closed = b(2.0) * ((b(1.0) + b(k) * b(1.3)) / (b(1.0) + b(k) * b(0.2))).try_ln().unwrap();
        assert!((d.value - closed).abs() <= BigReal::pow2(-240, 256));
    }

    #[test]
    fn nested_grids() {
        let iv = Interval::new(b(-0.3), b(0.8)).unwrap();
        let coarse = chebyshev_lobatto(&iv, 33);
        let fine = chebyshev_lobatto(&iv, 129);
        for (i, x) in coarse.iter().enumerate() {
            assert!((x.clone() - fine[4 * i].clone()).abs() <= BigReal::pow2(-50, 256));
        }
    }

    #[test]
    fn log_derivative_survives_f64_overflow() {
        let m = QuadraticMap::<f64>::new(-2.0, ctx(64)).unwrap();
        let v = m.log_derivative(&1.99, 1500).unwrap();
        assert!(v.is_finite() && v > 500.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn schwarzian_negative(x in -1.9f64..1.9, l in 1usize..12, c in -1.99f64..-1.0) {
            let m = QuadraticMap::<BigReal>::new(BigReal::with_bits(c, 256), ctx(256)).unwrap();
            prop_assume!(x.abs() > 1e-6);
            match m.schwarzian_of_iterate(&b(x), l) {
                Ok(s) => prop_assert!(s.sign() < 0),
                Err(Error::CriticalOrbitPoint(_)) => {}
                Err(e) => prop_assert!(false, "{e}"),
            }
        }

        #[test]
        fn sqrt_branch_squares_back(y in 1e-30f64..1e30) {
            let y = b(y);
            let r = eval_sqrt_branch(&y, Branch::Plus).unwrap();
            prop_assert!((r.clone() * r - y.clone()).abs() <= y * BigReal::pow2(-252, 256));
        }

        #[test]
        fn pullback_contracts_poincare_length(
            c in -1.99f64..-1.4,
            start in 1usize..6,
            l in 1usize..5,
            cut in prop::array::uniform3(0.01f64..0.99),
        ) {
            let m = QuadraticMap::<BigReal>::new(BigReal::with_bits(c, 256), ctx(256)).unwrap();
            let mut orbit = CriticalOrbit::new(&m);
            orbit.extend_to(&m, start + l).unwrap();
            let y = orbit.points()[start + l].clone();
            let w = b(0.05);
            let target = Interval::new(y.clone() - w.clone(), y + w).unwrap();
            let br = match monotone_pullback(&m, &target, &mut orbit, start, l) {
                Ok(br) if !br.folding => br,
                _ => return Ok(()),
            };
            let mut t = cut.to_vec();
            t.sort_by(|a, b| a.partial_cmp(b).unwrap());
            prop_assume!(t[0] < t[1] && t[1] < t[2]);
            let d = br.domain.clone();
            let at = |s: f64| d.lo.clone() + d.length() * b(s);
            let cfg = GapConfiguration::new(d.lo.clone(), at(t[0]), at(t[1]), at(t[2])).unwrap();
            let img = push_forward_config(&m, &br, &cfg).unwrap();
            let slack = BigReal::pow2(-240, 256);
            prop_assert!(poincare_length(&cfg).unwrap() <= poincare_length(&img).unwrap() + slack);
        }
    }
}
