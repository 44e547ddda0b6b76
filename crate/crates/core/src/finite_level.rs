//! Finite-level oracle: `E/ω_n E` as an explicit integer cokernel.
//!
//! A summand `Λ/g^e` with `g` distinguished is `Z_p`-free of rank
//! `e·deg g`, and `ω_n` acts on it through the companion matrix of `g^e`.
//! Summands `Λ/p^f` are not `Z_p`-free and are handled in closed form:
//! `Λ/(p^f, ω_n) ≅ (Z/p^f)^{p^n}`.

use num_bigint::BigInt;
use num_traits::Zero;

use crate::elementary_module::{ElementaryModule, PrimeFactor};
use crate::error::Result;
use crate::integer_linalg::{cokernel_invariants, smith_decomposition, IntMatrix};
use crate::lambda_poly::{omega, IntPoly, PrecisionContext};

/// Free rank and p-power torsion exponents of a finitely generated `Z_p`-module.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct FiniteLevelInvariants {
    pub free_rank: usize,
    /// Exponents `a` of the cyclic summands `Z/p^a`, sorted ascending.
    pub torsion_exponents: Vec<u32>,
}

impl FiniteLevelInvariants {
    pub fn new(free_rank: usize, mut torsion_exponents: Vec<u32>) -> Self {
        torsion_exponents.sort_unstable();
        Self { free_rank, torsion_exponents }
    }

    /// `log_p` of the order of the torsion subgroup.
    pub fn log_size(&self) -> u64 {
        self.torsion_exponents.iter().map(|&a| u64::from(a)).sum()
    }

    pub fn merge(&mut self, other: &FiniteLevelInvariants) {
        self.free_rank += other.free_rank;
        self.torsion_exponents.extend_from_slice(&other.torsion_exponents);
        self.torsion_exponents.sort_unstable();
    }

    /// Whether a group with torsion exponents `self` can embed into one with
    /// exponents `other`: after sorting both descending, `self` is no longer
    /// and is dominated entry by entry.
    pub fn torsion_dominated_by(&self, other: &FiniteLevelInvariants) -> bool {
        if self.torsion_exponents.len() > other.torsion_exponents.len() {
            return false;
        }
        self.torsion_exponents.iter().rev().zip(other.torsion_exponents.iter().rev()).all(|(a, b)| a <= b)
    }
}

/// Result of following the images of `torsion(E/ω_m E)` in `torsion(E/ω_n E)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StabilizationReport {
    pub level: u32,
    pub stable_invariants: FiniteLevelInvariants,
    pub stabilized_at: u32,
    pub converged: bool,
}

/// How `ω_n` acts on one summand.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FactorAction {
    /// Matrix of multiplication by `ω_n` on the `Z_p`-basis `1, T, …` of `Λ/f^e`.
    Matrix(IntMatrix),
    /// `Λ/p^f` is not `Z_p`-free; its quotients are known in closed form.
    Analytic,
}

/// Multiplication by `ω_n` on `Λ/f^e`, i.e. `ω_n` evaluated at the companion
/// matrix of `f^e`. Column `j` holds `T^j · ω_n mod f^e`.
pub fn factor_action_matrix(f: &PrimeFactor, exp: u32, n: u32, ctx: &PrecisionContext) -> Result<FactorAction> {
    let w = omega(n, ctx)?;
    let Some(g) = f.polynomial(ctx)? else {
        return Ok(FactorAction::Analytic);
    };
    let modulus = g.poly().pow(exp);
    let d = modulus.degree().expect("monic");
    let mut v = w.rem_monic(&modulus)?;
    let mut columns = Vec::with_capacity(d);
    for _ in 0..d {
        columns.push((0..d).map(|i| v.coeff(i)).collect::<Vec<BigInt>>());
        v = shift_mod(&v, &modulus);
    }
    Ok(FactorAction::Matrix(IntMatrix::from_columns(d, &columns)))
}

/// `T · v mod m` for monic `m` and `deg v < deg m`.
fn shift_mod(v: &IntPoly, m: &IntPoly) -> IntPoly {
    let d = m.degree().expect("monic");
    let mut coeffs = vec![BigInt::zero(); d + 1];
    for (i, c) in v.coeffs().iter().enumerate() {
        coeffs[i + 1] = c.clone();
    }
    let top = std::mem::take(&mut coeffs[d]);
    coeffs.truncate(d);
    if !top.is_zero() {
        for (i, mi) in m.coeffs()[..d].iter().enumerate() {
            coeffs[i] -= &top * mi;
        }
    }
    IntPoly::new(coeffs)
}

fn summand_invariants(f: &PrimeFactor, exp: u32, n: u32, ctx: &PrecisionContext) -> Result<FiniteLevelInvariants> {
    Ok(match factor_action_matrix(f, exp, n, ctx)? {
        FactorAction::Matrix(m) => cokernel_invariants(&m, ctx.p()),
        FactorAction::Analytic => FiniteLevelInvariants::new(0, vec![exp; ctx.p().pow(n) as usize]),
    })
}

/// Free rank and p-primary invariants of `E/ω_n E`.
pub fn omega_quotient_invariants(e: &ElementaryModule, n: u32) -> Result<FiniteLevelInvariants> {
    let ctx = e.ctx();
    ctx.check_level(n)?;
    let mut out = FiniteLevelInvariants::new(e.rank() * ctx.p().pow(n) as usize, Vec::new());
    for (f, exp) in e.factors() {
        out.merge(&summand_invariants(f, *exp, n, ctx)?);
    }
    Ok(out)
}

/// `e_n = log_p |(E/ω_n E)[p^∞]|`.
pub fn torsion_log_size(e: &ElementaryModule, n: u32) -> Result<u64> {
    Ok(omega_quotient_invariants(e, n)?.log_size())
}

/// Invariants of the image of `torsion(Z^d / M_m)` in `Z^d / M_n`, where the
/// column lattice of `m_deep` sits inside that of `m_level`.
///
/// The torsion of `Z^d / M_m` is `sat(M_m) / M_m`, and `sat(M_m)` is spanned by
/// the first `rank` columns of `U^{-1}` from the Smith decomposition. The image
/// is `(sat(M_m) + M_n) / M_n`, computed by writing `M_n` in a basis of the sum.
fn torsion_image(m_deep: &IntMatrix, m_level: &IntMatrix, p: u64) -> FiniteLevelInvariants {
    let d = m_level.rows();
    let sat = if m_deep.cols() == d && !m_deep.determinant().is_zero() {
        // full rank: the saturation is all of Z^d
        IntMatrix::identity(d)
    } else {
        let deep = smith_decomposition(m_deep);
        let sat_cols: Vec<Vec<BigInt>> = (0..deep.rank).map(|j| deep.u_inv.column(j)).collect();
        IntMatrix::from_columns(d, &sat_cols)
    };
    let sum = smith_decomposition(&sat.hconcat(m_level));
    let coords = sum.u.mul(m_level);
    let s = sum.rank;
    // Relations of the image group Z^s / (coordinates of M_n), one row per column of M_n.
    let mut rel = IntMatrix::zeros(m_level.cols(), s);
    for i in 0..s {
        for j in 0..m_level.cols() {
            let c = &coords[(i, j)];
            debug_assert!((c % &sum.divisors[i]).is_zero());
            rel[(j, i)] = c / &sum.divisors[i];
        }
    }
    debug_assert!((s..d).all(|i| (0..m_level.cols()).all(|j| coords[(i, j)].is_zero())));
    cokernel_invariants(&rel, p)
}

/// Follows the descending chain of images of `torsion(E/ω_m E)` in
/// `torsion(E/ω_n E)` for `m = n, n+1, …, n_cap` and stops once two
/// consecutive depths give the same invariants. Nested finite groups with
/// equal invariants are equal, so the chain is constant from there on.
pub fn stabilized_limit_invariants(e: &ElementaryModule, n: u32) -> Result<StabilizationReport> {
    let ctx = e.ctx();
    let n_cap = ctx.n_cap();
    if n >= n_cap {
        return Err(crate::error::Error::LevelOutOfRange { level: n, n_cap: n_cap.saturating_sub(1) });
    }
    let p = ctx.p();

    let mut analytic = FiniteLevelInvariants::default();
    let mut summands: Vec<(IntMatrix, Vec<IntMatrix>)> = Vec::new();
    for (f, exp) in e.factors() {
        match factor_action_matrix(f, *exp, n, ctx)? {
            FactorAction::Analytic => analytic.merge(&FiniteLevelInvariants::new(0, vec![*exp; p.pow(n) as usize])),
            FactorAction::Matrix(level) => {
                let deeper = (n..=n_cap)
                    .map(|m| match factor_action_matrix(f, *exp, m, ctx)? {
                        FactorAction::Matrix(x) => Ok(x),
                        FactorAction::Analytic => unreachable!("same factor, same branch"),
                    })
                    .collect::<Result<Vec<_>>>()?;
                summands.push((level, deeper));
            }
        }
    }

    let image_at = |m: u32| {
        let mut inv = analytic.clone();
        for (level, deeper) in &summands {
            inv.merge(&torsion_image(&deeper[(m - n) as usize], level, p));
        }
        inv
    };

    let mut prev = image_at(n);
    for m in n + 1..=n_cap {
        let cur = image_at(m);
        if cur == prev {
            return Ok(StabilizationReport { level: n, stable_invariants: cur, stabilized_at: m - 1, converged: true });
        }
        prev = cur;
    }
    Ok(StabilizationReport { level: n, stable_invariants: prev, stabilized_at: n_cap, converged: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lambda_poly::DistinguishedPoly;

    fn ctx3() -> PrecisionContext {
        PrecisionContext::desk(3).unwrap()
    }

    fn t_minus_3(ctx: &PrecisionContext) -> PrimeFactor {
        PrimeFactor::Generic(DistinguishedPoly::new(IntPoly::from_i64(&[-3, 1]), ctx).unwrap())
    }

    #[test]
    fn action_matrices() {
        let ctx = ctx3();
        assert_eq!(
            factor_action_matrix(&t_minus_3(&ctx), 1, 0, &ctx).unwrap(),
            FactorAction::Matrix(IntMatrix::from_rows(&[vec![3]]))
        );
        assert_eq!(
            factor_action_matrix(&PrimeFactor::Cyclotomic(1), 1, 1, &ctx).unwrap(),
            FactorAction::Matrix(IntMatrix::zeros(2, 2))
        );
        assert_eq!(factor_action_matrix(&PrimeFactor::MuPrime, 2, 3, &ctx).unwrap(), FactorAction::Analytic);
        assert!(factor_action_matrix(&PrimeFactor::MuPrime, 2, 5, &ctx).is_err());
    }

    #[test]
    fn companion_evaluation_matches_matrix_power() {
        // ω_1(C) for the companion matrix C of g = T^2 + 3, computed by plain matrix powers
        let ctx = ctx3();
        let g = PrimeFactor::Generic(DistinguishedPoly::new(IntPoly::from_i64(&[3, 0, 1]), &ctx).unwrap());
        let c = IntMatrix::from_rows(&[vec![0, -3], vec![1, 0]]);
        let c2 = c.mul(&c);
        let c3 = c2.mul(&c);
        let mut expect = IntMatrix::zeros(2, 2);
        for i in 0..2 {
            for j in 0..2 {
                expect[(i, j)] = &c3[(i, j)] + BigInt::from(3) * &c2[(i, j)] + BigInt::from(3) * &c[(i, j)];
            }
        }
        assert_eq!(factor_action_matrix(&g, 1, 1, &ctx).unwrap(), FactorAction::Matrix(expect));
    }

    #[test]
    fn quotient_examples() {
        let ctx = ctx3();
        let free = ElementaryModule::free(ctx, 1);
        assert_eq!(omega_quotient_invariants(&free, 1).unwrap(), FiniteLevelInvariants::new(3, vec![]));

        let mu = ElementaryModule::zero(ctx).with_factor(PrimeFactor::MuPrime, 1).unwrap();
        assert_eq!(omega_quotient_invariants(&mu, 2).unwrap(), FiniteLevelInvariants::new(0, vec![1; 9]));

        let lin = ElementaryModule::zero(ctx).with_factor(t_minus_3(&ctx), 1).unwrap();
        assert_eq!(omega_quotient_invariants(&lin, 1).unwrap(), FiniteLevelInvariants::new(0, vec![2]));
    }

    #[test]
    fn log_sizes() {
        let ctx = ctx3();
        assert_eq!(torsion_log_size(&ElementaryModule::free(ctx, 2), 3).unwrap(), 0);
        let e = ElementaryModule::zero(ctx)
            .with_factor(PrimeFactor::MuPrime, 1)
            .unwrap()
            .with_factor(t_minus_3(&ctx), 1)
            .unwrap();
        assert_eq!(torsion_log_size(&e, 2).unwrap(), 12);
        let e = ElementaryModule::zero(ctx).with_factor(PrimeFactor::Cyclotomic(1), 2).unwrap();
        let sizes: Vec<u64> = (1..=3).map(|n| torsion_log_size(&e, n).unwrap()).collect();
        assert_eq!(sizes, vec![1, 3, 5]);
    }

    #[test]
    fn stabilization_examples() {
        let ctx = ctx3();
        let lin = ElementaryModule::zero(ctx).with_factor(t_minus_3(&ctx), 1).unwrap();
        let r = stabilized_limit_invariants(&lin, 1).unwrap();
        assert!(r.converged);
        assert_eq!(r.stable_invariants.torsion_exponents, vec![2]);

        let nu1 = ElementaryModule::zero(ctx).with_factor(PrimeFactor::Cyclotomic(1), 1).unwrap();
        let r = stabilized_limit_invariants(&nu1, 2).unwrap();
        assert!(r.converged);
        assert!(r.stable_invariants.torsion_exponents.is_empty());

        let free = ElementaryModule::free(ctx, 1);
        let r = stabilized_limit_invariants(&free, 0).unwrap();
        assert!(r.converged);
        assert!(r.stable_invariants.torsion_exponents.is_empty());

        assert!(stabilized_limit_invariants(&free, 4).is_err());
    }

    #[test]
    fn cyclotomic_summand_drops_at_its_level() {
        // 0 -> Λ/(ν_1^{e-1}, T) -> Λ/(ν_1^e, ω_1) -> Λ/ν_1 -> 0 with Λ/ν_1 free over Z_p
        let ctx = ctx3();
        let e = ElementaryModule::zero(ctx).with_factor(PrimeFactor::Cyclotomic(1), 3).unwrap();
        assert_eq!(torsion_log_size(&e, 0).unwrap(), 3);
        assert_eq!(torsion_log_size(&e, 1).unwrap(), 2);
        let e = ElementaryModule::zero(ctx).with_factor(PrimeFactor::Cyclotomic(1), 1).unwrap();
        assert_eq!(torsion_log_size(&e, 0).unwrap(), 1);
        assert_eq!(torsion_log_size(&e, 1).unwrap(), 0);
    }

    #[test]
    fn domination() {
        let a = FiniteLevelInvariants::new(0, vec![1, 2]);
        let b = FiniteLevelInvariants::new(0, vec![1, 1, 3]);
        assert!(a.torsion_dominated_by(&b));
        assert!(!b.torsion_dominated_by(&a));
    }
}
