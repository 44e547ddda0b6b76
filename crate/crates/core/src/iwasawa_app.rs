//! Arithmetic consequences expressed on elementary-module data: Selmer
//! disassembly, growth exponents, Mordell-Weil rank sequences and the
//! `ι`-twisted functional equation.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::elementary_module::{ElementaryModule, PrimeFactor};
use crate::error::{Error, Result};
use crate::finite_level::torsion_log_size;
use crate::functors::{fit_growth, g_closed, LevelRow};
use crate::lambda_poly::{nu_degree, PrecisionContext};

/// `e_n = p^n μ + n λ + ν` for `n0 ≤ n ≤ n_cap`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GrowthFit {
    pub mu: u32,
    pub lambda: usize,
    pub nu: i64,
    pub n0: u32,
    pub per_level: Vec<LevelRow>,
}

/// `rank_Z A(F_n)` for `n = 0, 1, …`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RankSequence {
    pub p: u64,
    pub ranks: Vec<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DisassemblyMode {
    /// Only `ν_k` with `k ≥ 1` are accepted.
    Strict,
    /// `T = ν_0` is processed by the same rule as the other `ν_k`.
    Extended,
}

impl FromStr for DisassemblyMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "strict" => Ok(Self::Strict),
            "extended" => Ok(Self::Extended),
            other => Err(Error::Parse(format!("unknown mode `{other}`"))),
        }
    }
}

impl fmt::Display for DisassemblyMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Strict => "strict",
            Self::Extended => "extended",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DisassemblyResult {
    pub e_mw: ElementaryModule,
    pub e_sha: ElementaryModule,
    pub mode: DisassemblyMode,
}

/// Splits the Selmer elementary module into its Sha and Mordell-Weil parts.
///
/// Sha is `G(Sel)`. Mordell-Weil keeps the free rank and one copy of `ν_k`
/// for every cyclotomic summand `ν_k^e` of the Selmer module.
pub fn disassemble_selmer(e_sel: &ElementaryModule, mode: DisassemblyMode) -> Result<DisassemblyResult> {
    if mode == DisassemblyMode::Strict && e_sel.uses_level_zero() {
        return Err(Error::StrictModeViolation);
    }
    let mw_factors = e_sel
        .factors()
        .iter()
        .filter(|(f, _)| matches!(f, PrimeFactor::Cyclotomic(_)))
        .map(|(f, _)| (f.clone(), 1))
        .collect();
    let e_mw = ElementaryModule::new(*e_sel.ctx(), e_sel.rank(), mw_factors)?.canonical_form();
    Ok(DisassemblyResult { e_mw, e_sha: g_closed(e_sel), mode })
}

/// `char(Sel_tors) = char(Sha) · char(MW_tors)`.
pub fn char_ideal_consistent(e_sel: &ElementaryModule, result: &DisassemblyResult) -> Result<bool> {
    let sel = e_sel.torsion_part().char_ideal_symbolic()?;
    let merged = result.e_sha.char_ideal_symbolic()?.multiply(&result.e_mw.torsion_part().char_ideal_symbolic()?);
    Ok(sel == merged)
}

/// Outcome of [`validate_mw_structure`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MwShape {
    Valid,
    /// Valid except for level-0 factors `Λ/T`, whose admissibility is not settled.
    ExtensionAmbiguous,
    Invalid,
}

pub fn mw_shape(e: &ElementaryModule) -> MwShape {
    let mut ambiguous = false;
    for (f, exp) in e.factors() {
        match (f, exp) {
            (PrimeFactor::Cyclotomic(0), 1) => ambiguous = true,
            (PrimeFactor::Cyclotomic(_), 1) => {}
            _ => return MwShape::Invalid,
        }
    }
    if ambiguous {
        MwShape::ExtensionAmbiguous
    } else {
        MwShape::Valid
    }
}

/// Every torsion factor is some `Λ/ν_k` with `k ≥ 1`.
pub fn validate_mw_structure(e: &ElementaryModule) -> bool {
    mw_shape(e) == MwShape::Valid
}

pub fn is_cotorsion(e: &ElementaryModule) -> bool {
    e.rank() == 0
}

/// Fits the growth law with `μ`, `λ` from `G(E)` and `ν`, `n0` from the oracle.
pub fn growth_fit(e: &ElementaryModule) -> Result<GrowthFit> {
    growth_fit_to(e, e.ctx().n_cap())
}

/// As [`growth_fit`] but only using levels `0..=n_max`.
pub fn growth_fit_to(e: &ElementaryModule, n_max: u32) -> Result<GrowthFit> {
    let ctx = e.ctx();
    ctx.check_level(n_max)?;
    if n_max < 2 {
        return Err(Error::InvalidContext("growth fit needs at least levels 0..=2".into()));
    }
    let g = g_closed(e);
    let (mu, lambda) = (g.mu_invariant(), g.lambda_invariant());
    let observed = (0..=n_max).map(|n| torsion_log_size(e, n)).collect::<Result<Vec<_>>>()?;
    let (nu, n0, per_level) = fit_growth(&observed, ctx.p(), mu, lambda);
    if n0 >= n_max {
        return Err(Error::NoFit(format!(
            "observed {observed:?} does not follow p^n*{mu} + n*{lambda} + const on two consecutive levels"
        )));
    }
    Ok(GrowthFit { mu, lambda, nu, n0, per_level })
}

/// Ranks `r p^n + Σ_{ν_j ⊂ E, j ≤ n} deg ν_j` for `n = 0..=n_cap`.
pub fn rank_sequence_from_mw(e_mw: &ElementaryModule) -> Result<RankSequence> {
    if mw_shape(e_mw) == MwShape::Invalid {
        return Err(Error::InvalidMwShape(e_mw.to_string()));
    }
    let ctx = e_mw.ctx();
    let p = ctx.p();
    let ranks = (0..=ctx.n_cap())
        .map(|n| {
            let torsion: usize = e_mw
                .factors()
                .iter()
                .filter_map(|(f, _)| match f {
                    PrimeFactor::Cyclotomic(j) if *j <= n => Some(nu_degree(*j, p)),
                    _ => None,
                })
                .sum();
            e_mw.rank() as u64 * p.pow(n) + torsion as u64
        })
        .collect();
    Ok(RankSequence { p, ranks })
}

/// Inverts [`rank_sequence_from_mw`].
///
/// `r` is read from the last step, `r = (rank_N - rank_{N-1}) / (p^{N-1}(p-1))`,
/// so factors at the deepest level are not recoverable. Then
/// `a_n = (rank_n - rank_{n-1}) / (p^{n-1}(p-1)) - r` counts the `Λ/ν_n`.
/// An excess `rank_0 - r` is read as copies of `Λ/T`.
pub fn mw_from_rank_sequence(rs: &RankSequence, ctx: &PrecisionContext) -> Result<ElementaryModule> {
    let p = ctx.p();
    if rs.p != p {
        return Err(Error::ContextMismatch);
    }
    let ranks = &rs.ranks;
    if ranks.len() < 2 {
        return Err(Error::UnrealizableRankSequence("need at least two levels".into()));
    }
    if ranks.len() - 1 > ctx.n_cap() as usize + 1 {
        return Err(Error::LevelOutOfRange { level: ranks.len() as u32 - 1, n_cap: ctx.n_cap() });
    }
    let step = |n: usize| -> Result<BigInt> {
        let diff = BigInt::from(ranks[n]) - BigInt::from(ranks[n - 1]);
        let den = BigInt::from(p.pow(n as u32 - 1) * (p - 1));
        let (q, r) = diff.div_rem(&den);
        if !r.is_zero() || diff.is_negative() {
            return Err(Error::UnrealizableRankSequence(format!(
                "rank difference {diff} at level {n} is not a nonnegative multiple of {den}"
            )));
        }
        Ok(q)
    };
    let top = ranks.len() - 1;
    let r = step(top)?;
    let mut factors = Vec::new();
    let zero_count = BigInt::from(ranks[0]) - &r;
    if zero_count.is_negative() {
        return Err(Error::UnrealizableRankSequence(format!("rank_0 = {} is below r = {r}", ranks[0])));
    }
    let zero_count = zero_count.to_usize().expect("bounded by rank_0");
    factors.extend(std::iter::repeat_n((PrimeFactor::Cyclotomic(0), 1), zero_count));
    for n in 1..top {
        let a = step(n)? - &r;
        if a.is_negative() {
            return Err(Error::UnrealizableRankSequence(format!("negative multiplicity at level {n}")));
        }
        let a = a.to_usize().expect("bounded by the rank");
        factors.extend(std::iter::repeat_n((PrimeFactor::Cyclotomic(n as u32), 1), a));
    }
    let r = r.to_usize().expect("bounded by the rank");
    Ok(ElementaryModule::new(*ctx, r, factors)?.canonical_form())
}

/// `E(Sel(A)) ≅ E(Sel(A^t))^ι`.
pub fn functional_equation_check(e_a: &ElementaryModule, e_at: &ElementaryModule) -> Result<bool> {
    if e_a.ctx() != e_at.ctx() {
        return Err(Error::ContextMismatch);
    }
    Ok(e_a.same_class(&e_at.iota_twist()?))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ShaComparison {
    pub invariants_equal: bool,
    /// The ratio of orders is at most `p^ratio_bound_exp` from the fitted thresholds on.
    pub ratio_bound_exp: u64,
    pub per_level_delta: Vec<i64>,
    /// `max(n0_A, n0_At)`.
    pub from_level: u32,
}

impl ShaComparison {
    /// Whether the deltas are constant from `from_level` on.
    pub fn eventually_constant(&self) -> bool {
        let tail = &self.per_level_delta[self.from_level as usize..];
        tail.windows(2).all(|w| w[0] == w[1])
    }
}

/// Compares the growth of two Sha modules level by level.
pub fn sha_comparison(e_sha_a: &ElementaryModule, e_sha_at: &ElementaryModule) -> Result<ShaComparison> {
    if e_sha_a.ctx() != e_sha_at.ctx() {
        return Err(Error::ContextMismatch);
    }
    for e in [e_sha_a, e_sha_at] {
        if e.rank() > 0 {
            return Err(Error::NotTorsion(e.rank()));
        }
    }
    let fit_a = growth_fit(e_sha_a)?;
    let fit_at = growth_fit(e_sha_at)?;
    let invariants_equal = fit_a.mu == fit_at.mu && fit_a.lambda == fit_at.lambda;
    let per_level_delta: Vec<i64> =
        fit_a.per_level.iter().zip(&fit_at.per_level).map(|(a, b)| a.observed as i64 - b.observed as i64).collect();
    let from_level = fit_a.n0.max(fit_at.n0);
    let ratio_bound_exp = per_level_delta[from_level as usize..].iter().map(|d| d.unsigned_abs()).max().unwrap_or(0);
    Ok(ShaComparison { invariants_equal, ratio_bound_exp, per_level_delta, from_level })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lambda_poly::{DistinguishedPoly, IntPoly};

    fn ctx3() -> PrecisionContext {
        PrecisionContext::desk(3).unwrap()
    }

    fn generic(c: &[i64], ctx: &PrecisionContext) -> PrimeFactor {
        PrimeFactor::Generic(DistinguishedPoly::new(IntPoly::from_i64(c), ctx).unwrap())
    }

    fn module(ctx: PrecisionContext, rank: usize, f: Vec<(PrimeFactor, u32)>) -> ElementaryModule {
        ElementaryModule::new(ctx, rank, f).unwrap()
    }

    #[test]
    fn disassembly_examples() {
        let ctx = ctx3();
        let g = generic(&[3, 0, 1], &ctx);
        let sel =
            module(ctx, 1, vec![(g.clone(), 1), (PrimeFactor::Cyclotomic(2), 3), (PrimeFactor::Cyclotomic(1), 1)]);
        let d = disassemble_selmer(&sel, DisassemblyMode::Strict).unwrap();
        assert!(d.e_sha.same_class(&module(ctx, 0, vec![(g, 1), (PrimeFactor::Cyclotomic(2), 2)])));
        assert!(d.e_mw.same_class(&module(
            ctx,
            1,
            vec![(PrimeFactor::Cyclotomic(2), 1), (PrimeFactor::Cyclotomic(1), 1)]
        )));
        assert!(char_ideal_consistent(&sel, &d).unwrap());

        let d = disassemble_selmer(&ElementaryModule::zero(ctx), DisassemblyMode::Strict).unwrap();
        assert!(d.e_sha.same_class(&ElementaryModule::zero(ctx)));
        assert!(d.e_mw.same_class(&ElementaryModule::zero(ctx)));

        let sel = module(ctx, 0, vec![(PrimeFactor::MuPrime, 2)]);
        let d = disassemble_selmer(&sel, DisassemblyMode::Strict).unwrap();
        assert!(d.e_sha.same_class(&sel));
        assert!(d.e_mw.same_class(&ElementaryModule::zero(ctx)));

        let sel = module(ctx, 0, vec![(PrimeFactor::Cyclotomic(0), 2)]);
        assert_eq!(disassemble_selmer(&sel, DisassemblyMode::Strict), Err(Error::StrictModeViolation));
        let d = disassemble_selmer(&sel, DisassemblyMode::Extended).unwrap();
        assert_eq!(d.mode, DisassemblyMode::Extended);
        assert_eq!(mw_shape(&d.e_mw), MwShape::ExtensionAmbiguous);
    }

    #[test]
    fn mw_structure() {
        let ctx = ctx3();
        assert!(validate_mw_structure(&module(
            ctx,
            2,
            vec![(PrimeFactor::Cyclotomic(1), 1), (PrimeFactor::Cyclotomic(3), 1)]
        )));
        assert!(!validate_mw_structure(&module(ctx, 0, vec![(PrimeFactor::Cyclotomic(1), 2)])));
        assert!(!validate_mw_structure(&module(ctx, 0, vec![(generic(&[-3, 1], &ctx), 1)])));
        assert!(is_cotorsion(&module(ctx, 0, vec![(PrimeFactor::Cyclotomic(1), 1)])));
        assert!(!is_cotorsion(&ElementaryModule::free(ctx, 1)));
        assert!(is_cotorsion(&ElementaryModule::zero(ctx)));
    }

    #[test]
    fn growth_examples() {
        let ctx = ctx3();
        let e = module(ctx, 0, vec![(PrimeFactor::MuPrime, 1), (generic(&[-3, 1], &ctx), 1)]);
        let f = growth_fit(&e).unwrap();
        assert_eq!((f.mu, f.lambda, f.nu, f.n0), (1, 1, 1, 0));
        let e = module(ctx, 0, vec![(PrimeFactor::Cyclotomic(1), 2)]);
        let f = growth_fit(&e).unwrap();
        assert_eq!((f.mu, f.lambda, f.nu, f.n0), (0, 2, -1, 1));
        let f = growth_fit(&ElementaryModule::free(ctx, 1)).unwrap();
        assert_eq!((f.mu, f.lambda, f.nu, f.n0), (0, 0, 0, 0));
    }

    /// Independent oracle: sum `deg ν_j` over the `ν_j | ω_n`, i.e. over `j ≤ n`,
    /// using `deg ω_n = p^n` and `deg ν_j = deg ω_j - deg ω_{j-1}`.
    fn corank_oracle(r: u64, levels: &[u32], p: u64, n: u32) -> u64 {
        let deg_omega = |k: u32| p.pow(k);
        let deg_nu = |j: u32| if j == 0 { 1 } else { deg_omega(j) - deg_omega(j - 1) };
        r * deg_omega(n) + levels.iter().filter(|&&j| j <= n).map(|&j| deg_nu(j)).sum::<u64>()
    }

    #[test]
    fn rank_sequences() {
        let ctx = ctx3();
        let e = module(ctx, 1, vec![(PrimeFactor::Cyclotomic(1), 1)]);
        let rs = rank_sequence_from_mw(&e).unwrap();
        assert_eq!(rs.ranks, vec![1, 5, 11, 29, 83]);
        assert_eq!(rs.ranks, (0..=4).map(|n| corank_oracle(1, &[1], 3, n)).collect::<Vec<_>>());

        let e = module(ctx, 0, vec![(PrimeFactor::Cyclotomic(1), 1), (PrimeFactor::Cyclotomic(2), 1)]);
        let rs = rank_sequence_from_mw(&e).unwrap();
        assert_eq!(rs.ranks, vec![0, 2, 8, 8, 8]);
        assert_eq!(*rs.ranks.last().unwrap(), e.lambda_invariant() as u64);

        let rs = rank_sequence_from_mw(&ElementaryModule::free(ctx, 2)).unwrap();
        assert_eq!(rs.ranks, vec![2, 6, 18, 54, 162]);

        assert!(rank_sequence_from_mw(&module(ctx, 0, vec![(PrimeFactor::Cyclotomic(1), 2)])).is_err());
    }

    #[test]
    fn rank_sequence_inversion() {
        let ctx = ctx3();
        let rs = RankSequence { p: 3, ranks: vec![1, 5, 11] };
        let e = mw_from_rank_sequence(&rs, &ctx).unwrap();
        assert!(e.same_class(&module(ctx, 1, vec![(PrimeFactor::Cyclotomic(1), 1)])));

        let rs = RankSequence { p: 3, ranks: vec![0, 0, 0] };
        assert!(mw_from_rank_sequence(&rs, &ctx).unwrap().same_class(&ElementaryModule::zero(ctx)));

        let rs = RankSequence { p: 3, ranks: vec![1, 2, 3] };
        assert!(matches!(mw_from_rank_sequence(&rs, &ctx), Err(Error::UnrealizableRankSequence(_))));

        let rs = RankSequence { p: 3, ranks: vec![5] };
        assert!(mw_from_rank_sequence(&rs, &ctx).is_err());
    }

    #[test]
    fn functional_equation() {
        let ctx = ctx3();
        let e = module(ctx, 0, vec![(PrimeFactor::Cyclotomic(1), 2)]);
        assert!(functional_equation_check(&e, &e).unwrap());
        let c2 = PrecisionContext::new(3, 4, 2).unwrap();
        let a = module(c2, 0, vec![(generic(&[-3, 1], &c2), 1)]);
        let at = module(c2, 0, vec![(generic(&[3, 1], &c2), 1)]);
        assert!(functional_equation_check(&a, &at).unwrap());
        let a = module(ctx, 0, vec![(PrimeFactor::MuPrime, 1)]);
        let at = module(ctx, 0, vec![(PrimeFactor::MuPrime, 2)]);
        assert!(!functional_equation_check(&a, &at).unwrap());
    }

    #[test]
    fn sha_comparisons() {
        let ctx = ctx3();
        let nu1 = module(ctx, 0, vec![(PrimeFactor::Cyclotomic(1), 1)]);
        let c = sha_comparison(&nu1, &nu1).unwrap();
        assert!(c.invariants_equal);
        assert_eq!(c.ratio_bound_exp, 0);

        let a = module(ctx, 0, vec![(generic(&[-3, 1], &ctx), 1)]);
        let at = module(ctx, 0, vec![(generic(&[3, 1], &ctx), 1)]);
        let c = sha_comparison(&a, &at).unwrap();
        assert!(c.invariants_equal);
        assert_eq!(c.per_level_delta, vec![0; 5]);
        assert!(c.eventually_constant());

        let mu = module(ctx, 0, vec![(PrimeFactor::MuPrime, 1)]);
        assert!(!sha_comparison(&mu, &nu1).unwrap().invariants_equal);
        assert_eq!(sha_comparison(&ElementaryModule::free(ctx, 1), &nu1), Err(Error::NotTorsion(1)));
    }
}
