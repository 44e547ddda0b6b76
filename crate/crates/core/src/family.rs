//! Seeded random generators for the desk-scale module families used by the
//! verification suites.

use num_bigint::BigInt;
use rand::Rng;

use crate::elementary_module::{ElementaryModule, PrimeFactor};
use crate::error::Result;
use crate::lambda_poly::{cyclotomic_level, DistinguishedPoly, IntPoly, PrecisionContext};

/// The generic building blocks `T - p`, `T + p`, `T^2 + p`, `T^2 + pT + p`.
///
/// For `p = 3` the last one is `ν_1` itself and is returned as the cyclotomic
/// factor rather than as a generic prime.
pub fn desk_polynomials(ctx: &PrecisionContext) -> Vec<PrimeFactor> {
    let p = ctx.p() as i64;
    [vec![-p, 1], vec![p, 1], vec![p, 0, 1], vec![p, p, 1]]
        .into_iter()
        .map(|c| classify(IntPoly::from_i64(&c), ctx))
        .collect()
}

/// `Cyclotomic(k)` when `poly = ν_k`, otherwise `Generic(poly)`.
pub fn classify(poly: IntPoly, ctx: &PrecisionContext) -> PrimeFactor {
    match cyclotomic_level(&poly, ctx.p()) {
        Some(k) => PrimeFactor::Cyclotomic(k),
        None => PrimeFactor::Generic(DistinguishedPoly::new(poly, ctx).expect("desk polynomials are distinguished")),
    }
}

/// One summand of the desk family: `p^f` (`f ≤ 3`), `ν_k^e` (`k ≤ 2`, `e ≤ 3`),
/// or a desk polynomial to an exponent `≤ 3`.
pub fn random_factor<R: Rng>(rng: &mut R, ctx: &PrecisionContext) -> (PrimeFactor, u32) {
    let exp = rng.gen_range(1..=3);
    match rng.gen_range(0..3) {
        0 => (PrimeFactor::MuPrime, exp),
        1 => (PrimeFactor::Cyclotomic(rng.gen_range(0..=2.min(ctx.n_cap()))), exp),
        _ => {
            let polys = desk_polynomials(ctx);
            (polys[rng.gen_range(0..polys.len())].clone(), exp)
        }
    }
}

/// Rank `≤ 2` plus at most four desk-family summands.
pub fn random_module<R: Rng>(rng: &mut R, ctx: &PrecisionContext) -> ElementaryModule {
    let rank = rng.gen_range(0..=2);
    let count = rng.gen_range(0..=4);
    let factors = (0..count).map(|_| random_factor(rng, ctx)).collect();
    ElementaryModule::new(*ctx, rank, factors).expect("desk family is valid")
}

/// Desk-family module without cyclotomic summands.
pub fn random_coprime_module<R: Rng>(rng: &mut R, ctx: &PrecisionContext) -> ElementaryModule {
    let rank = rng.gen_range(0..=2);
    let count = rng.gen_range(0..=4);
    let polys: Vec<PrimeFactor> =
        desk_polynomials(ctx).into_iter().filter(|f| matches!(f, PrimeFactor::Generic(_))).collect();
    let factors = (0..count)
        .map(|_| {
            let exp = rng.gen_range(1..=3);
            if rng.gen_bool(0.3) {
                (PrimeFactor::MuPrime, exp)
            } else {
                (polys[rng.gen_range(0..polys.len())].clone(), exp)
            }
        })
        .collect();
    ElementaryModule::new(*ctx, rank, factors).expect("desk family is valid")
}

/// Selmer-shaped module `Λ^r ⊕ ⊕Λ/g^l ⊕ ⊕Λ/ν_a^e (e ≥ 2) ⊕ ⊕Λ/ν_b` with
/// `a, b ≥ 1`, where the `g` range over `p` and the generic desk polynomials.
pub fn random_selmer<R: Rng>(rng: &mut R, ctx: &PrecisionContext) -> ElementaryModule {
    let rank = rng.gen_range(0..=2);
    let max_level = 2.min(ctx.n_cap());
    let mut coprime: Vec<PrimeFactor> =
        desk_polynomials(ctx).into_iter().filter(|f| matches!(f, PrimeFactor::Generic(_))).collect();
    coprime.push(PrimeFactor::MuPrime);
    let mut factors = Vec::new();
    for _ in 0..rng.gen_range(0..=2) {
        factors.push((coprime[rng.gen_range(0..coprime.len())].clone(), rng.gen_range(1..=3)));
    }
    for _ in 0..rng.gen_range(0..=2) {
        factors.push((PrimeFactor::Cyclotomic(rng.gen_range(1..=max_level)), rng.gen_range(2..=3)));
    }
    for _ in 0..rng.gen_range(0..=2) {
        factors.push((PrimeFactor::Cyclotomic(rng.gen_range(1..=max_level)), 1));
    }
    ElementaryModule::new(*ctx, rank, factors).expect("selmer family is valid")
}

/// Mordell-Weil shaped module `Λ^r ⊕ ⊕Λ/ν_b` with `1 ≤ b ≤ n_cap - 1`.
pub fn random_mw<R: Rng>(rng: &mut R, ctx: &PrecisionContext) -> ElementaryModule {
    let rank = rng.gen_range(0..=2);
    let top = ctx.n_cap() - 1;
    let factors = if top == 0 {
        Vec::new()
    } else {
        (0..rng.gen_range(0..=3)).map(|_| (PrimeFactor::Cyclotomic(rng.gen_range(1..=top)), 1)).collect()
    };
    ElementaryModule::new(*ctx, rank, factors).expect("mw family is valid")
}

/// Monic polynomial of degree `1..=4` with lower coefficients in `p·[-p^2, p^2]`.
pub fn random_distinguished<R: Rng>(rng: &mut R, ctx: &PrecisionContext) -> DistinguishedPoly {
    let p = ctx.p() as i64;
    let deg = rng.gen_range(1..=4);
    let mut coeffs: Vec<BigInt> = (0..deg).map(|_| BigInt::from(p * rng.gen_range(-p * p..=p * p))).collect();
    coeffs.push(BigInt::from(1));
    DistinguishedPoly::new(IntPoly::new(coeffs), ctx).expect("constructed distinguished")
}

/// Polynomial of degree `≤ 5` with a random content `p^k`, `k ≤ 2`, that does
/// not vanish modulo `p^prec`.
pub fn random_preparable<R: Rng>(rng: &mut R, ctx: &PrecisionContext) -> IntPoly {
    let p = ctx.p() as i64;
    loop {
        let deg = rng.gen_range(0..=5);
        let content = p.pow(rng.gen_range(0..=2));
        let coeffs: Vec<BigInt> =
            (0..=deg).map(|_| BigInt::from(content * rng.gen_range(-p.pow(3)..=p.pow(3)))).collect();
        let f = IntPoly::new(coeffs);
        if !f.reduce_mod(&ctx.modulus()).is_zero() {
            return f;
        }
    }
}

/// A module from [`random_module`] or its twist-stable variants, used by the
/// functional-equation suite.
pub fn random_any<R: Rng>(rng: &mut R, ctx: &PrecisionContext) -> Result<ElementaryModule> {
    let mut e = random_module(rng, ctx);
    if rng.gen_bool(0.5) {
        let g = random_distinguished(rng, ctx);
        let g = classify(g.into_poly(), ctx);
        if g.validate(ctx).is_ok() {
            e = e.with_factor(g, rng.gen_range(1..=2))?;
        }
    }
    Ok(e)
}
