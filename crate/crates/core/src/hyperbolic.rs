//! Intervals as hyperbolic lines: the Poincaré density, the symmetric and
//! asymmetric Poincaré lengths of a gap, and the two exact pullback bounds.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// A closed interval `[lo, hi]` with `lo < hi`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interval<T> {
    pub lo: T,
    pub hi: T,
}

impl<T: Real> Interval<T> {
    pub fn new(lo: T, hi: T) -> Result<Self> {
        if lo < hi {
            Ok(Self { lo, hi })
        } else {
            Err(Error::EmptyInterval)
        }
    }

    /// `[-r, r]`.
    pub fn symmetric(r: T) -> Result<Self> {
        Self::new(-r.clone(), r)
    }

    pub fn length(&self) -> T {
        self.hi.clone() - self.lo.clone()
    }

    pub fn half_width(&self) -> T {
        self.length() * self.lo.lit(0.5)
    }

    pub fn midpoint(&self) -> T {
        (self.lo.clone() + self.hi.clone()) * self.lo.lit(0.5)
    }

    pub fn contains(&self, x: &T) -> bool {
        self.lo <= *x && *x <= self.hi
    }

    pub fn contains_interior(&self, x: &T) -> bool {
        self.lo < *x && *x < self.hi
    }

    pub fn contains_interval(&self, other: &Self) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    /// `other` lies in the interior of `self`.
    pub fn strictly_contains(&self, other: &Self) -> bool {
        self.lo < other.lo && other.hi < self.hi
    }

    pub fn overlaps(&self, other: &Self) -> bool {
        self.lo < other.hi && other.lo < self.hi
    }

    /// Distance from the interval to the point `x` (zero when `x` is inside).
    pub fn distance_to(&self, x: &T) -> T {
        if *x < self.lo {
            self.lo.clone() - x.clone()
        } else if *x > self.hi {
            x.clone() - self.hi.clone()
        } else {
            T::zero()
        }
    }

    /// Sign of the side of 0 the interval lies on; 0 when it contains 0.
    pub fn side(&self) -> i32 {
        let zero = T::zero();
        if self.lo > zero {
            1
        } else if self.hi < zero {
            -1
        } else {
            0
        }
    }

    pub fn map_endpoints(&self, f: impl Fn(&T) -> T) -> Result<Self> {
        let a = f(&self.lo);
        let b = f(&self.hi);
        if a <= b {
            Self::new(a, b)
        } else {
            Self::new(b, a)
        }
    }

    pub fn at_bits(&self, bits: u32) -> Self {
        Self {
            lo: self.lo.at_bits(bits),
            hi: self.hi.at_bits(bits),
        }
    }
}

/// Which flank of a gap configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    /// `U = [a, u]`.
    Left,
    /// `V = [v, b]`.
    Right,
}

/// Four ordered endpoints `a < u < v < b`: flanks `U = [a, u]`, `V = [v, b]`,
/// gap `G = [u, v]`, line `L = [a, b]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapConfiguration<T> {
    pub a: T,
    pub u: T,
    pub v: T,
    pub b: T,
}

impl<T: Real> GapConfiguration<T> {
    pub fn new(a: T, u: T, v: T, b: T) -> Result<Self> {
        if a == u || v == b {
            return Err(Error::DegenerateFlank);
        }
        if !(a < u && u < v && v < b) {
            return Err(Error::Unordered);
        }
        Ok(Self { a, u, v, b })
    }

    /// The configuration of `gap` inside `line`.
    pub fn nested(gap: &Interval<T>, line: &Interval<T>) -> Result<Self> {
        if !line.strictly_contains(gap) {
            return Err(Error::NotNested);
        }
        Self::new(
            line.lo.clone(),
            gap.lo.clone(),
            gap.hi.clone(),
            line.hi.clone(),
        )
    }

    /// The two intervals `left`, `right` with the gap between them as `G`.
    pub fn between(left: &Interval<T>, right: &Interval<T>) -> Result<Self> {
        Self::new(
            left.lo.clone(),
            left.hi.clone(),
            right.lo.clone(),
            right.hi.clone(),
        )
    }

    pub fn left_flank(&self) -> T {
        self.u.clone() - self.a.clone()
    }

    pub fn right_flank(&self) -> T {
        self.b.clone() - self.v.clone()
    }

    pub fn gap_length(&self) -> T {
        self.v.clone() - self.u.clone()
    }

    pub fn gap(&self) -> Interval<T> {
        Interval {
            lo: self.u.clone(),
            hi: self.v.clone(),
        }
    }

    pub fn line(&self) -> Interval<T> {
        Interval {
            lo: self.a.clone(),
            hi: self.b.clone(),
        }
    }

    /// Applies `x -> p x + q` to every endpoint, flipping the order when `p < 0`.
    pub fn affine(&self, p: &T, q: &T) -> Result<Self> {
        let m = |x: &T| p.clone() * x.clone() + q.clone();
        if p.sign() > 0 {
            Self::new(m(&self.a), m(&self.u), m(&self.v), m(&self.b))
        } else {
            Self::new(m(&self.b), m(&self.v), m(&self.u), m(&self.a))
        }
    }

    pub fn at_bits(&self, bits: u32) -> Self {
        Self {
            a: self.a.at_bits(bits),
            u: self.u.at_bits(bits),
            v: self.v.at_bits(bits),
            b: self.b.at_bits(bits),
        }
    }

    /// Mirror image under `x -> -x`.
    pub fn reflected(&self) -> Self {
        Self {
            a: -self.b.clone(),
            u: -self.v.clone(),
            v: -self.u.clone(),
            b: -self.a.clone(),
        }
    }
}

/// Density of the Poincaré metric of `line` at `x`: `2 / ((x - a)(b - x))`.
pub fn poincare_density<T: Real>(line: &Interval<T>, x: &T) -> Result<T> {
    if !line.contains_interior(x) {
        return Err(Error::OutsideLine);
    }
    let two = x.lit(2.0);
    Ok(two / ((x.clone() - line.lo.clone()) * (line.hi.clone() - x.clone())))
}

/// `P(G|L) = ln(1 + |G|/|U|) + ln(1 + |G|/|V|)`.
pub fn poincare_length<T: Real>(cfg: &GapConfiguration<T>) -> Result<T> {
    let g = cfg.gap_length();
    let left = (g.clone() / cfg.left_flank()).try_ln_1p()?;
    let right = (g / cfg.right_flank()).try_ln_1p()?;
    Ok(left + right)
}

/// `min(P(G|L), 1)`.
pub fn poincare_length_star<T: Real>(cfg: &GapConfiguration<T>) -> Result<T> {
    let p = poincare_length(cfg)?;
    let one = p.lit(1.0);
    Ok(T::min_of(&p, &one))
}

/// The hyperbolic distance between `u` and `v` in `L`, as the log of a
/// cross-ratio.
pub fn cross_ratio_length<T: Real>(cfg: &GapConfiguration<T>) -> Result<T> {
    let num = (cfg.v.clone() - cfg.a.clone()) * (cfg.b.clone() - cfg.u.clone());
    let den = (cfg.u.clone() - cfg.a.clone()) * (cfg.b.clone() - cfg.v.clone());
    (num / den).try_ln()
}

/// Full weight on the flank nearer the critical point, half weight on the
/// other. Configurations whose open gap contains 0 are rejected.
pub fn asymmetric_length<T: Real>(cfg: &GapConfiguration<T>, near: Side) -> Result<T> {
    let zero = T::zero();
    if cfg.u < zero && zero < cfg.v {
        return Err(Error::GapContainsCritical);
    }
    let g = cfg.gap_length();
    let left = (g.clone() / cfg.left_flank()).try_ln_1p()?;
    let right = (g / cfg.right_flank()).try_ln_1p()?;
    let half = left.lit(0.5);
    Ok(match near {
        Side::Left => left + half * right,
        Side::Right => right + half * left,
    })
}

/// Both sides of the composition bound `P(I|L) <= P(I|T) P(T|L) / 2` for
/// `I` in `T` (`inner`) and `T` in `L` (`outer`).
pub fn composition_bound<T: Real>(
    inner: &GapConfiguration<T>,
    outer: &GapConfiguration<T>,
) -> Result<(T, T)> {
    let (p_it, p_tl, p_il) = composition_parts(inner, outer)?;
    let half = p_it.lit(0.5);
    Ok((p_il, half * p_it * p_tl))
}

/// The weaker form `P(I|L) <= P(I|T) P*(T|L)`.
pub fn composition_bound_star<T: Real>(
    inner: &GapConfiguration<T>,
    outer: &GapConfiguration<T>,
) -> Result<(T, T)> {
    let (p_it, p_tl, p_il) = composition_parts(inner, outer)?;
    let one = p_tl.lit(1.0);
    Ok((p_il, p_it * T::min_of(&p_tl, &one)))
}

fn composition_parts<T: Real>(
    inner: &GapConfiguration<T>,
    outer: &GapConfiguration<T>,
) -> Result<(T, T, T)> {
    if inner.a != outer.u || inner.b != outer.v {
        return Err(Error::NotNested);
    }
    let il = GapConfiguration::new(
        outer.a.clone(),
        inner.u.clone(),
        inner.v.clone(),
        outer.b.clone(),
    )?;
    Ok((
        poincare_length(inner)?,
        poincare_length(outer)?,
        poincare_length(&il)?,
    ))
}

/// Composition bound from three nested intervals `i ⊂ t ⊂ l`.
pub fn composition_bound_intervals<T: Real>(
    i: &Interval<T>,
    t: &Interval<T>,
    l: &Interval<T>,
) -> Result<(T, T)> {
    let inner = GapConfiguration::nested(i, t)?;
    let outer = GapConfiguration::nested(t, l)?;
    composition_bound(&inner, &outer)
}

/// The preimage configuration `(√a, √u, √v, √b)` under `x -> x²`.
///
/// Configurations left of 0 are reflected first. The near flank of the
/// result is always the left one, adjacent to `√a`.
pub fn quadratic_pullback_config<T: Real>(cfg: &GapConfiguration<T>) -> Result<GapConfiguration<T>> {
    let zero = T::zero();
    let cfg = if cfg.b <= zero {
        cfg.reflected()
    } else {
        cfg.clone()
    };
    if cfg.a < zero {
        return Err(Error::NegativeCoordinate);
    }
    GapConfiguration::new(
        cfg.a.try_sqrt()?,
        cfg.u.try_sqrt()?,
        cfg.v.try_sqrt()?,
        cfg.b.try_sqrt()?,
    )
}

/// `e^λ / (1 + e^λ)`.
pub fn sigma_bar<T: Real>(lambda_bar: &T) -> T {
    let e = lambda_bar.exp();
    e.clone() / (e + lambda_bar.lit(1.0))
}

/// A random configuration whose three sub-lengths are log-uniform over
/// `decades` decades, placed at a random offset of comparable scale.
pub fn random_configuration<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    bits: u32,
    decades: f64,
) -> GapConfiguration<T> {
    let draw = |rng: &mut R| -> T {
        let e: f64 = rng.gen_range(-decades / 2.0..decades / 2.0);
        let m: f64 = rng.gen_range(1.0..10.0);
        T::from_f64_at(m, bits) * T::from_f64_at(10f64.powf(e.floor()), bits)
    };
    let lu = draw(rng);
    let lg = draw(rng);
    let lv = draw(rng);
    let a = draw(rng) * T::from_f64_at(if rng.gen::<bool>() { 1.0 } else { -1.0 }, bits);
    let u = a.clone() + lu;
    let v = u.clone() + lg;
    let b = v.clone() + lv;
    GapConfiguration { a, u, v, b }
}

/// A random configuration with `0 <= a`, for the square-root pullback.
pub fn random_positive_configuration<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    bits: u32,
    decades: f64,
) -> GapConfiguration<T> {
    let cfg: GapConfiguration<T> = random_configuration(rng, bits, decades);
    let shift = if rng.gen_range(0..8) == 0 {
        // Pin a = 0 now and then: the flank then touches the critical point.
        -cfg.a.clone()
    } else {
        cfg.a.abs() - cfg.a.clone()
    };
    GapConfiguration {
        a: cfg.a + shift.clone(),
        u: cfg.u + shift.clone(),
        v: cfg.v + shift.clone(),
        b: cfg.b + shift,
    }
}
