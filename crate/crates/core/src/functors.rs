//! Closed forms of `F` and `G` on elementary modules, and their
//! cross-validation against the finite-level oracle.
//!
//! On a single summand:
//!
//! | summand          | `G`                  | `F`                     |
//! |------------------|----------------------|-------------------------|
//! | `Λ`              | `0`                  | `0`                     |
//! | `Λ/p^f`          | `Λ/p^f`              | `Λ/p^f`                 |
//! | `Λ/g^l`, coprime | `Λ/g^l`              | `Λ/ι(g)^l`              |
//! | `Λ/ν_k^e`, e ≥ 2 | `Λ/ν_k^{e-1}`        | `Λ/ν_k^{e-1}`           |
//! | `Λ/ν_k`          | `0`                  | `0`                     |
//!
//! Both functors preserve finite direct sums, so the table determines them.
//! The level-0 factor `T` follows the same rule as the other `ν_k`.

use serde::Serialize;

use crate::elementary_module::{ElementaryModule, PrimeFactor};
use crate::error::{Error, Result};
use crate::finite_level::{omega_quotient_invariants, stabilized_limit_invariants, torsion_log_size};
use crate::lambda_poly::iota_twist_poly;

fn drop_one_cyclotomic(e: &ElementaryModule) -> Vec<(PrimeFactor, u32)> {
    e.factors()
        .iter()
        .filter_map(|(f, exp)| match f {
            PrimeFactor::Cyclotomic(_) if *exp == 1 => None,
            PrimeFactor::Cyclotomic(_) => Some((f.clone(), exp - 1)),
            _ => Some((f.clone(), *exp)),
        })
        .collect()
}

/// `G(E)` in closed form.
pub fn g_closed(e: &ElementaryModule) -> ElementaryModule {
    ElementaryModule::from_parts(*e.ctx(), 0, drop_one_cyclotomic(e)).canonical_form()
}

/// `F(E)` in closed form.
pub fn f_closed(e: &ElementaryModule) -> Result<ElementaryModule> {
    let ctx = *e.ctx();
    let factors = drop_one_cyclotomic(e)
        .into_iter()
        .map(|(f, exp)| {
            Ok(match f {
                PrimeFactor::Generic(g) => (PrimeFactor::Generic(iota_twist_poly(&g, &ctx)?), exp),
                other => (other, exp),
            })
        })
        .collect::<Result<_>>()?;
    Ok(ElementaryModule::from_parts(ctx, 0, factors).canonical_form())
}

/// `Ext^1_Λ(E, Λ)`: `Ext^1(Λ/f^l, Λ) ≅ Λ/f^l` and `Ext^1(Λ, Λ) = 0`.
pub fn ext1_closed(e: &ElementaryModule) -> ElementaryModule {
    e.torsion_part().canonical_form()
}

/// `F(E)^ι` and `G(E)` agree.
pub fn check_f_iota_g(e: &ElementaryModule) -> Result<bool> {
    Ok(f_closed(e)?.iota_twist()?.same_class(&g_closed(e)))
}

/// `E ≅ Λ^rank ⊕ F(E)^ι` when every torsion factor is coprime to all `ω_n`.
pub fn check_reconstruction(e: &ElementaryModule) -> Result<bool> {
    if e.has_cyclotomic() {
        return Err(Error::CyclotomicFactorPresent);
    }
    let rebuilt = ElementaryModule::free(*e.ctx(), e.rank()).direct_sum(&f_closed(e)?.iota_twist()?)?;
    Ok(rebuilt.same_class(e))
}

/// One row of a growth table.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LevelRow {
    pub n: u32,
    pub observed: u64,
    pub predicted: i64,
}

/// Outcome of checking `e_n = p^n μ + n λ + ν` against the oracle.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleReport {
    pub subject: ElementaryModule,
    pub mu: u32,
    pub lambda: usize,
    pub law_holds: bool,
    pub fitted_nu: i64,
    pub threshold_n0: u32,
    pub per_level: Vec<LevelRow>,
    /// `Some` when every torsion factor is coprime to all `ω_n` and the rank is 0.
    pub coprime_exact_ok: Option<bool>,
    /// The level-0 factor `T` was involved.
    pub extension: bool,
}

/// `p^n μ + n λ` without the constant term.
pub(crate) fn growth_main_term(p: u64, n: u32, mu: u32, lambda: usize) -> i64 {
    (p.pow(n) * u64::from(mu)) as i64 + i64::from(n) * lambda as i64
}

/// Fits `ν` from the deepest level and walks down while the law keeps holding.
///
/// Returns `(ν, n0, rows)`; the law is considered established when it holds
/// on at least the two deepest levels.
pub(crate) fn fit_growth(observed: &[u64], p: u64, mu: u32, lambda: usize) -> (i64, u32, Vec<LevelRow>) {
    let top = observed.len() as u32 - 1;
    let nu = observed[top as usize] as i64 - growth_main_term(p, top, mu, lambda);
    let rows: Vec<LevelRow> = observed
        .iter()
        .enumerate()
        .map(|(n, &obs)| LevelRow {
            n: n as u32,
            observed: obs,
            predicted: growth_main_term(p, n as u32, mu, lambda) + nu,
        })
        .collect();
    let n0 = rows.iter().rev().take_while(|r| r.observed as i64 == r.predicted).last().map_or(top, |r| r.n);
    (nu, n0, rows)
}

/// Checks the growth law for `E` with `μ`, `λ` read off `G(E)`.
pub fn validate_g_against_oracle(e: &ElementaryModule) -> Result<OracleReport> {
    let ctx = e.ctx();
    let n_cap = ctx.n_cap();
    if n_cap < 2 {
        return Err(Error::InvalidContext("growth validation needs n_cap >= 2".into()));
    }
    let g = g_closed(e);
    let (mu, lambda) = (g.mu_invariant(), g.lambda_invariant());
    let observed = (0..=n_cap).map(|n| torsion_log_size(e, n)).collect::<Result<Vec<_>>>()?;
    let (fitted_nu, threshold_n0, per_level) = fit_growth(&observed, ctx.p(), mu, lambda);

    let coprime_exact_ok = if e.rank() == 0 && !e.has_cyclotomic() {
        let mut ok = true;
        for n in 0..n_cap {
            let report = stabilized_limit_invariants(e, n)?;
            let full = omega_quotient_invariants(e, n)?;
            ok &= report.converged && report.stable_invariants.torsion_exponents == full.torsion_exponents;
        }
        Some(ok)
    } else {
        None
    };

    Ok(OracleReport {
        subject: e.clone(),
        mu,
        lambda,
        law_holds: threshold_n0 < n_cap,
        fitted_nu,
        threshold_n0,
        per_level,
        coprime_exact_ok,
        extension: e.uses_level_zero(),
    })
}
