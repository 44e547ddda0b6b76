//! Elementary modules `Λ^r ⊕ ⊕ Λ/g_i^{e_i} ⊕ ⊕ Λ/p^{f_j}`.

use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};
use crate::lambda_poly::{
    iota_twist_poly, is_coprime_to_all_omega, nu, nu_degree, DistinguishedPoly, PrecisionContext,
};

/// A prime element of `Λ` up to units.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum PrimeFactor {
    /// The uniformizer `p`.
    MuPrime,
    /// The cyclotomic factor `ν_k` dividing `ω_k`. Level 0 is `T`.
    Cyclotomic(u32),
    /// A distinguished polynomial coprime to every `ω_n`; irreducibility is
    /// the caller's responsibility.
    Generic(DistinguishedPoly),
}

impl PrimeFactor {
    /// Degree as a polynomial; `MuPrime` contributes nothing to `λ`.
    pub fn degree(&self, p: u64) -> usize {
        match self {
            PrimeFactor::MuPrime => 0,
            PrimeFactor::Cyclotomic(k) => nu_degree(*k, p),
            PrimeFactor::Generic(g) => g.degree(),
        }
    }

    pub fn validate(&self, ctx: &PrecisionContext) -> Result<()> {
        match self {
            PrimeFactor::MuPrime => Ok(()),
            PrimeFactor::Cyclotomic(k) => ctx.check_level(*k),
            PrimeFactor::Generic(g) => {
                if g.degree() == 0 {
                    return Err(Error::NotDistinguished("constant factor".into()));
                }
                DistinguishedPoly::new(g.poly().clone(), ctx)?;
                if !is_coprime_to_all_omega(&g.normalized(ctx), ctx) || !is_coprime_to_all_omega(g, ctx) {
                    return Err(Error::NotCoprimeToOmega(g.to_string()));
                }
                Ok(())
            }
        }
    }

    /// The distinguished generator (`ν_k` expanded); `None` for `MuPrime`.
    pub fn polynomial(&self, ctx: &PrecisionContext) -> Result<Option<DistinguishedPoly>> {
        Ok(match self {
            PrimeFactor::MuPrime => None,
            PrimeFactor::Cyclotomic(k) => Some(nu(*k, ctx)?),
            PrimeFactor::Generic(g) => Some(g.clone()),
        })
    }

    fn kind_rank(&self) -> u8 {
        match self {
            PrimeFactor::MuPrime => 0,
            PrimeFactor::Cyclotomic(_) => 1,
            PrimeFactor::Generic(_) => 2,
        }
    }

    /// Order used by canonical forms: kind, then level, then degree, then coefficients.
    fn canonical_cmp(&self, other: &Self) -> Ordering {
        self.kind_rank().cmp(&other.kind_rank()).then_with(|| match (self, other) {
            (PrimeFactor::Cyclotomic(a), PrimeFactor::Cyclotomic(b)) => a.cmp(b),
            (PrimeFactor::Generic(a), PrimeFactor::Generic(b)) => {
                a.degree().cmp(&b.degree()).then_with(|| a.poly().coeffs().cmp(b.poly().coeffs()))
            }
            _ => Ordering::Equal,
        })
    }
}

impl fmt::Display for PrimeFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PrimeFactor::MuPrime => write!(f, "p"),
            PrimeFactor::Cyclotomic(k) => write!(f, "nu_{k}"),
            PrimeFactor::Generic(g) => write!(f, "({g})"),
        }
    }
}

/// An elementary `Λ`-module: free rank plus a multiset of `(prime, exponent)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ElementaryModule {
    ctx: PrecisionContext,
    rank: usize,
    factors: Vec<(PrimeFactor, u32)>,
}

impl ElementaryModule {
    pub fn new(ctx: PrecisionContext, rank: usize, factors: Vec<(PrimeFactor, u32)>) -> Result<Self> {
        for (f, e) in &factors {
            if *e == 0 {
                return Err(Error::ZeroExponent);
            }
            f.validate(&ctx)?;
        }
        Ok(Self { ctx, rank, factors })
    }

    pub fn zero(ctx: PrecisionContext) -> Self {
        Self { ctx, rank: 0, factors: Vec::new() }
    }

    pub fn free(ctx: PrecisionContext, rank: usize) -> Self {
        Self { ctx, rank, factors: Vec::new() }
    }

    /// Adds one summand `Λ/f^e`.
    pub fn with_factor(mut self, f: PrimeFactor, e: u32) -> Result<Self> {
        if e == 0 {
            return Err(Error::ZeroExponent);
        }
        f.validate(&self.ctx)?;
        self.factors.push((f, e));
        Ok(self)
    }

    pub fn ctx(&self) -> &PrecisionContext {
        &self.ctx
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn factors(&self) -> &[(PrimeFactor, u32)] {
        &self.factors
    }

    pub fn is_torsion(&self) -> bool {
        self.rank == 0
    }

    /// Whether a level-0 cyclotomic factor `T` is present.
    pub fn uses_level_zero(&self) -> bool {
        self.factors.iter().any(|(f, _)| *f == PrimeFactor::Cyclotomic(0))
    }

    pub fn has_cyclotomic(&self) -> bool {
        self.factors.iter().any(|(f, _)| matches!(f, PrimeFactor::Cyclotomic(_)))
    }

    /// The torsion part (rank dropped).
    pub fn torsion_part(&self) -> Self {
        Self { ctx: self.ctx, rank: 0, factors: self.factors.clone() }
    }

    pub(crate) fn from_parts(ctx: PrecisionContext, rank: usize, factors: Vec<(PrimeFactor, u32)>) -> Self {
        Self { ctx, rank, factors }
    }

    pub fn lambda_invariant(&self) -> usize {
        self.factors.iter().map(|(f, e)| *e as usize * f.degree(self.ctx.p())).sum()
    }

    pub fn mu_invariant(&self) -> u32 {
        self.factors.iter().filter(|(f, _)| *f == PrimeFactor::MuPrime).map(|(_, e)| e).sum()
    }

    /// Sorted factor list with generic coefficients reduced into `[0, p^prec)`.
    pub fn canonical_form(&self) -> Self {
        let mut factors: Vec<(PrimeFactor, u32)> = self
            .factors
            .iter()
            .map(|(f, e)| match f {
                PrimeFactor::Generic(g) => (PrimeFactor::Generic(g.normalized(&self.ctx)), *e),
                other => (other.clone(), *e),
            })
            .collect();
        factors.sort_by(|(a, ea), (b, eb)| a.canonical_cmp(b).then(ea.cmp(eb)));
        Self { ctx: self.ctx, rank: self.rank, factors }
    }

    /// Isomorphism of elementary modules: equal canonical forms.
    pub fn same_class(&self, other: &Self) -> bool {
        self.ctx == other.ctx
            && self.canonical_form().factors == other.canonical_form().factors
            && self.rank == other.rank
    }

    pub fn direct_sum(&self, other: &Self) -> Result<Self> {
        if self.ctx != other.ctx {
            return Err(Error::ContextMismatch);
        }
        let mut factors = self.factors.clone();
        factors.extend(other.factors.iter().cloned());
        Ok(Self { ctx: self.ctx, rank: self.rank + other.rank, factors })
    }

    /// `M^ι`: generic factors twisted by `ι`; `p` and every `ν_k` are `ι`-stable.
    pub fn iota_twist(&self) -> Result<Self> {
        let factors = self
            .factors
            .iter()
            .map(|(f, e)| {
                Ok(match f {
                    PrimeFactor::Generic(g) => (PrimeFactor::Generic(iota_twist_poly(g, &self.ctx)?), *e),
                    other => (other.clone(), *e),
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self { ctx: self.ctx, rank: self.rank, factors }.canonical_form())
    }

    /// Generator `p^μ · ∏ g^e` of the characteristic ideal of a torsion module.
    pub fn char_ideal_symbolic(&self) -> Result<CharIdeal> {
        if self.rank > 0 {
            return Err(Error::NotTorsion(self.rank));
        }
        let mut factors = Vec::new();
        for (f, e) in &self.factors {
            if let Some(g) = f.polynomial(&self.ctx)? {
                factors.push((g.normalized(&self.ctx), *e));
            }
        }
        Ok(CharIdeal { mu_total: self.mu_invariant(), factors }.normalized())
    }
}

impl fmt::Display for ElementaryModule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if self.rank > 0 {
            parts.push(if self.rank == 1 { "Λ".to_string() } else { format!("Λ^{}", self.rank) });
        }
        for (fac, e) in &self.factors {
            if *e == 1 {
                parts.push(format!("Λ/{fac}"));
            } else {
                parts.push(format!("Λ/{fac}^{e}"));
            }
        }
        if parts.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", parts.join(" ⊕ "))
        }
    }
}

/// Characteristic ideal generator, with factors merged and sorted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CharIdeal {
    pub mu_total: u32,
    pub factors: Vec<(DistinguishedPoly, u32)>,
}

impl CharIdeal {
    /// Merges repeated polynomials and sorts; makes the generator comparable.
    pub fn normalized(mut self) -> Self {
        self.factors.sort_by(|a, b| a.0.cmp(&b.0));
        let mut merged: Vec<(DistinguishedPoly, u32)> = Vec::new();
        for (g, e) in self.factors {
            match merged.last_mut() {
                Some((h, acc)) if *h == g => *acc += e,
                _ => merged.push((g, e)),
            }
        }
        self.factors = merged;
        self
    }

    /// Product of two generators.
    pub fn multiply(&self, other: &Self) -> Self {
        let mut factors = self.factors.clone();
        factors.extend(other.factors.iter().cloned());
        CharIdeal { mu_total: self.mu_total + other.mu_total, factors }.normalized()
    }
}
