//! Polynomial representatives of elements of `Λ = Z_p[[T]]`.
//!
//! Coefficients are exact integers. Reduction modulo `p^prec` only happens
//! when a canonical representative is needed (twisting, preparation, and
//! equality of generic factors).

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Pow, Signed, Zero};

use crate::error::{Error, Result};
use crate::integer_linalg::{p_valuation, Valuation};

/// The ambient prime, coefficient precision and tower depth bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PrecisionContext {
    p: u64,
    n_cap: u32,
    prec: u32,
}

impl PrecisionContext {
    pub fn new(p: u64, n_cap: u32, prec: u32) -> Result<Self> {
        if p < 3 || !is_prime(p) {
            return Err(Error::InvalidContext(format!("p = {p} must be an odd prime")));
        }
        if n_cap < 1 {
            return Err(Error::InvalidContext("n_cap must be at least 1".into()));
        }
        if prec < 2 {
            return Err(Error::InvalidContext("prec must be at least 2".into()));
        }
        Ok(Self { p, n_cap, prec })
    }

    /// Desk-scale defaults: `prec = 8`, `n_cap = 4` for `p = 3`, `3` for `p = 5`, `2` above.
    pub fn desk(p: u64) -> Result<Self> {
        Self::new(p, default_n_cap(p), 8)
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn n_cap(&self) -> u32 {
        self.n_cap
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    pub fn with_n_cap(self, n_cap: u32) -> Result<Self> {
        Self::new(self.p, n_cap, self.prec)
    }

    pub fn with_prec(self, prec: u32) -> Result<Self> {
        Self::new(self.p, self.n_cap, prec)
    }

    /// `p^prec`.
    pub fn modulus(&self) -> BigInt {
        BigInt::from(self.p).pow(self.prec)
    }

    pub(crate) fn check_level(&self, level: u32) -> Result<()> {
        if level > self.n_cap {
            Err(Error::LevelOutOfRange { level, n_cap: self.n_cap })
        } else {
            Ok(())
        }
    }
}

pub fn default_n_cap(p: u64) -> u32 {
    match p {
        3 => 4,
        5 => 3,
        _ => 2,
    }
}

fn is_prime(n: u64) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| !n.is_multiple_of(d))
}

/// Integer polynomial, coefficients in ascending degree.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct IntPoly {
    coeffs: Vec<BigInt>,
}

impl IntPoly {
    pub fn new(mut coeffs: Vec<BigInt>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn from_i64(coeffs: &[i64]) -> Self {
        Self::new(coeffs.iter().map(|&c| BigInt::from(c)).collect())
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Self::constant(BigInt::one())
    }

    pub fn constant(c: BigInt) -> Self {
        Self::new(vec![c])
    }

    /// The variable `T`.
    pub fn t() -> Self {
        Self::from_i64(&[0, 1])
    }

    pub fn monomial(c: BigInt, deg: usize) -> Self {
        let mut coeffs = vec![BigInt::zero(); deg + 1];
        coeffs[deg] = c;
        Self::new(coeffs)
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> BigInt {
        self.coeffs.get(i).cloned().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Option<&BigInt> {
        self.coeffs.last()
    }

    pub fn is_monic(&self) -> bool {
        self.leading().is_some_and(One::is_one)
    }

    pub fn scale(&self, c: &BigInt) -> Self {
        Self::new(self.coeffs.iter().map(|x| x * c).collect())
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = IntPoly::one();
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    /// Division with remainder by a monic polynomial, exact over the integers.
    pub fn div_rem_monic(&self, b: &IntPoly) -> Result<(IntPoly, IntPoly)> {
        if !b.is_monic() {
            return Err(Error::NotMonic);
        }
        let db = b.degree().expect("monic implies nonzero");
        let mut rem = self.coeffs.clone();
        if rem.len() <= db {
            return Ok((IntPoly::zero(), self.clone()));
        }
        let mut quot = vec![BigInt::zero(); rem.len() - db];
        for i in (db..rem.len()).rev() {
            let c = std::mem::take(&mut rem[i]);
            if c.is_zero() {
                continue;
            }
            for (j, bj) in b.coeffs[..db].iter().enumerate() {
                rem[i - db + j] -= &c * bj;
            }
            quot[i - db] = c;
        }
        rem.truncate(db);
        Ok((IntPoly::new(quot), IntPoly::new(rem)))
    }

    /// Remainder modulo a monic polynomial.
    pub fn rem_monic(&self, b: &IntPoly) -> Result<IntPoly> {
        Ok(self.div_rem_monic(b)?.1)
    }

    /// Coefficients reduced into `[0, modulus)`.
    pub fn reduce_mod(&self, modulus: &BigInt) -> IntPoly {
        IntPoly::new(self.coeffs.iter().map(|c| c.mod_floor(modulus)).collect())
    }

    /// Coefficients reduced into `(-modulus/2, modulus/2]`.
    pub fn reduce_symmetric(&self, modulus: &BigInt) -> IntPoly {
        let half = modulus / 2u32;
        IntPoly::new(
            self.coeffs
                .iter()
                .map(|c| {
                    let r = c.mod_floor(modulus);
                    if r > half {
                        r - modulus
                    } else {
                        r
                    }
                })
                .collect(),
        )
    }

    /// Minimal p-adic valuation of the coefficients.
    pub fn content_valuation(&self, p: u64) -> Valuation {
        self.coeffs.iter().map(|c| p_valuation(c, p)).min().unwrap_or(Valuation::Infinite)
    }
}

impl fmt::Display for IntPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let sign = if c.is_negative() { "-" } else { "+" };
            let mag = c.abs();
            if first {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            first = false;
            let show_coeff = i == 0 || !mag.is_one();
            if show_coeff {
                write!(f, "{mag}")?;
            }
            match i {
                0 => {}
                1 => write!(f, "T")?,
                _ => write!(f, "T^{i}")?,
            }
        }
        Ok(())
    }
}

impl<'a> Add<&'a IntPoly> for &'a IntPoly {
    type Output = IntPoly;

    fn add(self, rhs: &IntPoly) -> IntPoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        IntPoly::new((0..n).map(|i| self.coeff(i) + rhs.coeff(i)).collect())
    }
}

impl<'a> Sub<&'a IntPoly> for &'a IntPoly {
    type Output = IntPoly;

    fn sub(self, rhs: &IntPoly) -> IntPoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        IntPoly::new((0..n).map(|i| self.coeff(i) - rhs.coeff(i)).collect())
    }
}

impl<'a> Mul<&'a IntPoly> for &'a IntPoly {
    type Output = IntPoly;

    fn mul(self, rhs: &IntPoly) -> IntPoly {
        if self.is_zero() || rhs.is_zero() {
            return IntPoly::zero();
        }
        let mut out = vec![BigInt::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        IntPoly::new(out)
    }
}

impl Neg for &IntPoly {
    type Output = IntPoly;

    fn neg(self) -> IntPoly {
        IntPoly::new(self.coeffs.iter().map(|c| -c).collect())
    }
}

/// Monic polynomial whose lower coefficients are all divisible by `p`.
///
/// Degree 0 is the constant `1`, used as an empty factor.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DistinguishedPoly {
    poly: IntPoly,
}

impl DistinguishedPoly {
    pub fn new(poly: IntPoly, ctx: &PrecisionContext) -> Result<Self> {
        if is_distinguished(&poly, ctx) {
            Ok(Self { poly })
        } else {
            Err(Error::NotDistinguished(poly.to_string()))
        }
    }

    pub(crate) fn new_unchecked(poly: IntPoly) -> Self {
        Self { poly }
    }

    pub fn one() -> Self {
        Self { poly: IntPoly::one() }
    }

    pub fn poly(&self) -> &IntPoly {
        &self.poly
    }

    pub fn into_poly(self) -> IntPoly {
        self.poly
    }

    pub fn degree(&self) -> usize {
        self.poly.degree().expect("distinguished polynomials are monic")
    }

    /// Coefficients reduced to symmetric residues modulo `p^prec`.
    pub fn normalized(&self, ctx: &PrecisionContext) -> DistinguishedPoly {
        Self { poly: self.poly.reduce_symmetric(&ctx.modulus()) }
    }
}

impl fmt::Display for DistinguishedPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.poly.fmt(f)
    }
}

/// `ω_n = (1 + T)^{p^n} - 1`.
pub fn omega(n: u32, ctx: &PrecisionContext) -> Result<IntPoly> {
    ctx.check_level(n)?;
    Ok(omega_unchecked(n, ctx.p))
}

pub(crate) fn omega_unchecked(n: u32, p: u64) -> IntPoly {
    let deg = p.pow(n) as usize;
    let mut coeffs = Vec::with_capacity(deg + 1);
    let mut binom = BigInt::one();
    coeffs.push(BigInt::zero());
    for k in 1..=deg {
        binom = binom * BigInt::from(deg - k + 1) / BigInt::from(k);
        coeffs.push(binom.clone());
    }
    IntPoly::new(coeffs)
}

/// Cyclotomic factor `ν_k`: `ν_0 = T` and `ν_k = ω_k / ω_{k-1}` for `k ≥ 1`.
pub fn nu(k: u32, ctx: &PrecisionContext) -> Result<DistinguishedPoly> {
    ctx.check_level(k)?;
    Ok(nu_unchecked(k, ctx.p))
}

pub(crate) fn nu_unchecked(k: u32, p: u64) -> DistinguishedPoly {
    if k == 0 {
        return DistinguishedPoly::new_unchecked(IntPoly::t());
    }
    // ν_k(T) = Φ_p((1 + T)^{p^{k-1}}) = Σ_{i<p} (1 + T)^{i p^{k-1}}
    let x = omega_unchecked(k - 1, p);
    let x = &x + &IntPoly::one();
    let mut acc = IntPoly::zero();
    let mut power = IntPoly::one();
    for _ in 0..p {
        acc = &acc + &power;
        power = &power * &x;
    }
    DistinguishedPoly::new_unchecked(acc)
}

/// `deg ν_k`: `1` for `k = 0`, `p^{k-1}(p - 1)` otherwise.
pub fn nu_degree(k: u32, p: u64) -> usize {
    if k == 0 {
        1
    } else {
        (p.pow(k - 1) * (p - 1)) as usize
    }
}

/// Exact quotient `a / b` over the integers, `None` if `b` does not divide `a`.
pub fn divide_exact(a: &IntPoly, b: &IntPoly) -> Result<Option<IntPoly>> {
    let (q, r) = a.div_rem_monic(b)?;
    Ok(r.is_zero().then_some(q))
}

pub fn is_distinguished(f: &IntPoly, ctx: &PrecisionContext) -> bool {
    let p = BigInt::from(ctx.p);
    f.is_monic() && f.coeffs()[..f.coeffs().len() - 1].iter().all(|c| c.is_multiple_of(&p))
}

/// Whether `g` has no common factor with any `ω_n`.
///
/// Any common factor with some `ω_n` is a product of the `ν_k`, and the `ν_k`
/// have strictly increasing degree, so only those with `deg ν_k ≤ deg g`
/// need trial division.
pub fn is_coprime_to_all_omega(g: &DistinguishedPoly, ctx: &PrecisionContext) -> bool {
    let d = g.degree();
    (0..)
        .take_while(|&k| nu_degree(k, ctx.p) <= d)
        .all(|k| matches!(divide_exact(g.poly(), nu_unchecked(k, ctx.p).poly()), Ok(None)))
}

/// If `g` equals some `ν_k` exactly, returns `k`.
pub fn cyclotomic_level(g: &IntPoly, p: u64) -> Option<u32> {
    let d = g.degree()?;
    (0..).take_while(|&k| nu_degree(k, p) <= d).find(|&k| nu_unchecked(k, p).poly() == g)
}

/// `f ≡ p^mu_exp · unit · dist (mod p^prec)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PreparedForm {
    pub mu_exp: u32,
    pub unit: IntPoly,
    pub dist: DistinguishedPoly,
}

impl PreparedForm {
    /// `p^mu_exp · unit · dist`, exact.
    pub fn recombine(&self, p: u64) -> IntPoly {
        let scale = BigInt::from(p).pow(self.mu_exp);
        (&self.unit * self.dist.poly()).scale(&scale)
    }
}

/// Weierstrass preparation of a polynomial at precision `p^prec`.
///
/// After dividing out the content `p^mu`, the first coefficient that is a
/// `p`-unit fixes the degree `s` of the distinguished part. Starting from
/// `T^s`, the factor is lifted one `p`-adic digit at a time: if
/// `f = g·h + r` with `r ≡ 0 (mod p^k)`, adding `p^k · (τ · r/p^k mod T^s)`
/// to `g` kills the next digit of the remainder, where `τ` inverts `h` modulo
/// `(p, T^s)`. The unit part is then the exact quotient by `g`.
pub fn weierstrass_prepare(f: &IntPoly, ctx: &PrecisionContext) -> Result<PreparedForm> {
    let p = ctx.p;
    let pb = BigInt::from(p);
    let modulus = ctx.modulus();
    let mu = match f.content_valuation(p) {
        Valuation::Finite(k) if k < ctx.prec => k,
        _ => return Err(Error::PrecisionExhausted { prec: ctx.prec }),
    };
    let content = Pow::pow(&pb, mu);
    let f1 = IntPoly::new(f.coeffs().iter().map(|c| c / &content).collect()).reduce_mod(&modulus);
    let s =
        f1.coeffs().iter().position(|c| !c.is_multiple_of(&pb)).expect("content removed, some coefficient is a unit");

    if s == 0 {
        return Ok(PreparedForm { mu_exp: mu, unit: f1, dist: DistinguishedPoly::one() });
    }

    // τ = (f1 / T^s)^{-1} mod (p, T^s)
    let hbar: Vec<BigInt> = f1.coeffs()[s..].iter().map(|c| c.mod_floor(&pb)).collect();
    let tau = series_inverse_mod_p(&hbar, s, &pb);

    let mut g = IntPoly::monomial(BigInt::one(), s);
    loop {
        let (_, r) = f1.div_rem_monic(&g)?;
        let r = r.reduce_mod(&modulus);
        let k = match r.content_valuation(p) {
            Valuation::Finite(k) => k,
            Valuation::Infinite => break,
        };
        debug_assert!(k >= 1);
        let pk = Pow::pow(&pb, k);
        let digit: Vec<BigInt> = r.coeffs().iter().map(|c| (c / &pk).mod_floor(&pb)).collect();
        let mut delta = vec![BigInt::zero(); s];
        for (i, di) in digit.iter().enumerate().filter(|(_, d)| !d.is_zero()) {
            for (j, tj) in tau.iter().enumerate().take(s - i) {
                delta[i + j] += di * tj;
            }
        }
        let delta = IntPoly::new(delta.into_iter().map(|c| c.mod_floor(&pb) * &pk).collect());
        g = (&g + &delta).reduce_mod(&modulus);
    }
    let (unit, r) = f1.div_rem_monic(&g)?;
    debug_assert!(r.reduce_mod(&modulus).is_zero());
    Ok(PreparedForm {
        mu_exp: mu,
        unit: unit.reduce_symmetric(&modulus),
        dist: DistinguishedPoly::new_unchecked(g.reduce_symmetric(&modulus)),
    })
}

/// Inverse of a power series with unit constant term, modulo `(p, T^len)`.
fn series_inverse_mod_p(h: &[BigInt], len: usize, p: &BigInt) -> Vec<BigInt> {
    let h0_inv = h[0].extended_gcd(p).x.mod_floor(p);
    let mut inv = vec![BigInt::zero(); len];
    inv[0] = h0_inv.clone();
    for n in 1..len {
        let mut acc = BigInt::zero();
        for k in 1..=n.min(h.len() - 1) {
            acc += &h[k] * &inv[n - k];
        }
        inv[n] = (-acc * &h0_inv).mod_floor(p);
    }
    inv
}

/// Inverse of `a` modulo `m`, when it exists.
pub(crate) fn mod_inverse(a: &BigInt, m: &BigInt) -> Option<BigInt> {
    let e = a.mod_floor(m).extended_gcd(m);
    e.gcd.is_one().then(|| e.x.mod_floor(m))
}

/// The involution `ι: T ↦ (1 + T)^{-1} - 1` applied to a distinguished polynomial.
///
/// `(1 + T)^d · g((1 + T)^{-1} - 1) = Σ c_i (-T)^i (1 + T)^{d-i}` is a
/// polynomial of degree `d` whose leading coefficient is a `p`-unit; dividing by
/// it modulo `p^prec` gives the distinguished representative.
pub fn iota_twist_poly(g: &DistinguishedPoly, ctx: &PrecisionContext) -> Result<DistinguishedPoly> {
    let d = g.degree();
    let one_plus_t = IntPoly::from_i64(&[1, 1]);
    let minus_t = IntPoly::from_i64(&[0, -1]);
    let mut h = IntPoly::zero();
    for (i, c) in g.poly().coeffs().iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let term = &minus_t.pow(i as u32) * &one_plus_t.pow((d - i) as u32);
        h = &h + &term.scale(c);
    }
    let modulus = ctx.modulus();
    let lead = h.coeff(d);
    let inv = mod_inverse(&lead, &modulus).ok_or(Error::DegeneratePrecision)?;
    let twisted = h.scale(&inv).reduce_symmetric(&modulus);
    debug_assert!(twisted.is_monic());
    Ok(DistinguishedPoly::new_unchecked(twisted))
}
