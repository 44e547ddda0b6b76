//! End-to-end acceptance checks. Runs without the libtest harness so that every
//! criterion prints exactly one PASS/FAIL line; exits nonzero on any failure.

use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use iwasawa_core::elementary_module::{ElementaryModule, PrimeFactor};
use iwasawa_core::family;
use iwasawa_core::finite_level::{omega_quotient_invariants, stabilized_limit_invariants, torsion_log_size};
use iwasawa_core::functors::{check_f_iota_g, check_reconstruction, g_closed};
use iwasawa_core::iwasawa_app::{
    char_ideal_consistent, disassemble_selmer, functional_equation_check, mw_from_rank_sequence, rank_sequence_from_mw,
    sha_comparison, DisassemblyMode,
};
use iwasawa_core::lambda_poly::{
    iota_twist_poly, is_distinguished, weierstrass_prepare, DistinguishedPoly, IntPoly, PrecisionContext,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20_240_601;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ctx(p: u64) -> PrecisionContext {
    PrecisionContext::desk(p).unwrap()
}

fn generic(coeffs: &[i64], ctx: &PrecisionContext) -> PrimeFactor {
    PrimeFactor::Generic(DistinguishedPoly::new(IntPoly::from_i64(coeffs), ctx).unwrap())
}

fn module(ctx: PrecisionContext, rank: usize, factors: Vec<(PrimeFactor, u32)>) -> ElementaryModule {
    ElementaryModule::new(ctx, rank, factors).unwrap()
}

/// Counts failures over `samples` draws and reports the first offender.
fn sweep<T: std::fmt::Display>(
    samples: usize,
    mut draw: impl FnMut() -> T,
    mut check: impl FnMut(&T) -> bool,
) -> Result<usize, String> {
    for i in 0..samples {
        let x = draw();
        if !check(&x) {
            return Err(format!("sample {i} failed: {x}"));
        }
    }
    Ok(samples)
}

/// Smallest `n0` with `observed[n] == p^n mu + n lambda + nu` for all `n ≥ n0`,
/// `nu` read off the deepest level.
fn threshold(observed: &[u64], p: u64, mu: u32, lambda: usize) -> usize {
    let main = |n: usize| (p.pow(n as u32) * u64::from(mu) + (n * lambda) as u64) as i64;
    let top = observed.len() - 1;
    let nu = observed[top] as i64 - main(top);
    let mut n0 = top;
    while n0 > 0 && observed[n0 - 1] as i64 == main(n0 - 1) + nu {
        n0 -= 1;
    }
    n0
}

fn growth_law() -> Outcome {
    let start = Instant::now();
    let mut total = 0;
    for (p, n_max) in [(3u64, 4u32), (5, 3)] {
        let c = ctx(p).with_n_cap(n_max).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(SEED);
        for i in 0..120 {
            let e = family::random_module(&mut rng, &c);
            let g = g_closed(&e);
            let observed: Vec<u64> = (0..=n_max).map(|n| torsion_log_size(&e, n).unwrap()).collect();
            let n0 = threshold(&observed, p, g.mu_invariant(), g.lambda_invariant());
            if n0 > 2 {
                return Err(format!("p={p} sample {i} {e}: observed {observed:?}, n0 = {n0}"));
            }
            total += 1;
        }
    }
    let elapsed = start.elapsed();
    if elapsed > Duration::from_secs(120) {
        return Err(format!("{total} modules took {elapsed:.1?}"));
    }
    Ok(format!("{total} modules, n0 <= 2 throughout, {elapsed:.1?}"))
}

fn pinned_linear() -> Outcome {
    let c = ctx(3);
    let e = module(c, 0, vec![(PrimeFactor::MuPrime, 1), (generic(&[-3, 1], &c), 1)]);
    let got: Vec<u64> = (0..=4).map(|n| torsion_log_size(&e, n).unwrap()).collect();
    let want: Vec<u64> = (0..=4).map(|n| 3u64.pow(n) + u64::from(n) + 1).collect();
    if got == want {
        Ok(format!("e_n = {got:?}"))
    } else {
        Err(format!("e_n = {got:?}, expected {want:?}"))
    }
}

fn pinned_cyclotomic_square() -> Outcome {
    let c = ctx(3);
    let e = module(c, 0, vec![(PrimeFactor::Cyclotomic(1), 2)]);
    let got: Vec<u64> = (1..=4).map(|n| torsion_log_size(&e, n).unwrap()).collect();
    let want: Vec<u64> = (1..=4).map(|n| 2 * n - 1).collect();
    let g = g_closed(&e);
    let g_want = module(c, 0, vec![(PrimeFactor::Cyclotomic(1), 1)]);
    if got != want {
        return Err(format!("e_n = {got:?}, expected {want:?}"));
    }
    if !g.same_class(&g_want) {
        return Err(format!("G = {g}, expected {g_want}"));
    }
    Ok(format!("e_1..e_4 = {got:?}, G = {g}"))
}

fn coprime_exact_limit() -> Outcome {
    let c = ctx(3);
    for e in [module(c, 0, vec![(generic(&[-3, 1], &c), 1)]), module(c, 0, vec![(PrimeFactor::MuPrime, 2)])] {
        for n in 0..=3 {
            let report = stabilized_limit_invariants(&e, n).map_err(|err| format!("{e} n={n}: {err}"))?;
            let full = omega_quotient_invariants(&e, n).unwrap();
            if !report.converged || report.stable_invariants.torsion_exponents != full.torsion_exponents {
                return Err(format!("{e} n={n}: {report:?} vs {full:?}"));
            }
        }
    }
    Ok("Λ/(T - 3) and Λ/p^2 at n = 0..3".into())
}

fn f_iota_g() -> Outcome {
    let mut count = 0;
    for p in [3, 5] {
        let c = ctx(p);
        let mut rng = ChaCha8Rng::seed_from_u64(SEED);
        count += sweep(200, || family::random_any(&mut rng, &c).unwrap(), |e| check_f_iota_g(e).unwrap())?;
    }
    Ok(format!("{count} modules"))
}

fn reconstruction() -> Outcome {
    let mut count = 0;
    for p in [3, 5] {
        let c = ctx(p);
        let mut rng = ChaCha8Rng::seed_from_u64(SEED);
        count += sweep(100, || family::random_coprime_module(&mut rng, &c), |e| check_reconstruction(e).unwrap())?;
    }
    Ok(format!("{count} modules"))
}

/// Selmer-shaped input assembled from its three blocks, with the Sha and
/// Mordell-Weil modules the disassembly must produce.
fn selmer_case<R: Rng>(rng: &mut R, c: &PrecisionContext) -> (ElementaryModule, ElementaryModule, ElementaryModule) {
    let coprime = [PrimeFactor::MuPrime, generic(&[-(c.p() as i64), 1], c), generic(&[c.p() as i64, 0, 1], c)];
    let rank = rng.gen_range(0..=2);
    let plain: Vec<(PrimeFactor, u32)> =
        (0..rng.gen_range(0..=2)).map(|_| (coprime[rng.gen_range(0..3)].clone(), rng.gen_range(1..=3))).collect();
    let squares: Vec<(u32, u32)> =
        (0..rng.gen_range(0..=2)).map(|_| (rng.gen_range(1..=2), rng.gen_range(2..=3))).collect();
    let simple: Vec<u32> = (0..rng.gen_range(0..=2)).map(|_| rng.gen_range(1..=2)).collect();

    let mut sel = plain.clone();
    sel.extend(squares.iter().map(|&(k, e)| (PrimeFactor::Cyclotomic(k), e)));
    sel.extend(simple.iter().map(|&k| (PrimeFactor::Cyclotomic(k), 1)));
    let mut sha = plain;
    sha.extend(squares.iter().map(|&(k, e)| (PrimeFactor::Cyclotomic(k), e - 1)));
    let mut mw: Vec<(PrimeFactor, u32)> = squares.iter().map(|&(k, _)| (PrimeFactor::Cyclotomic(k), 1)).collect();
    mw.extend(simple.iter().map(|&k| (PrimeFactor::Cyclotomic(k), 1)));
    (module(*c, rank, sel), module(*c, 0, sha), module(*c, rank, mw))
}

fn disassembly_shape() -> Outcome {
    let mut count = 0;
    for p in [3, 5] {
        let c = ctx(p);
        let mut rng = ChaCha8Rng::seed_from_u64(SEED);
        for i in 0..100 {
            let (sel, sha, mw) = selmer_case(&mut rng, &c);
            let out = disassemble_selmer(&sel, DisassemblyMode::Strict).map_err(|e| format!("{sel}: {e}"))?;
            if !out.e_sha.same_class(&sha) || !out.e_mw.same_class(&mw) {
                return Err(format!("p={p} sample {i} {sel}: Sha {} / MW {}", out.e_sha, out.e_mw));
            }
            if !char_ideal_consistent(&sel, &out).unwrap() {
                return Err(format!("p={p} sample {i} {sel}: characteristic ideals disagree"));
            }
            let random = family::random_selmer(&mut rng, &c);
            let out = disassemble_selmer(&random, DisassemblyMode::Strict).unwrap();
            if !char_ideal_consistent(&random, &out).unwrap() {
                return Err(format!("p={p} {random}: characteristic ideals disagree"));
            }
            count += 2;
        }
    }
    Ok(format!("{count} Selmer-shaped modules"))
}

fn round_trips() -> Outcome {
    let mut lines = Vec::new();
    for p in [3, 5] {
        let c = ctx(p);
        let mut rng = ChaCha8Rng::seed_from_u64(SEED);
        sweep(
            100,
            || family::random_distinguished(&mut rng, &c),
            |g| {
                let back = iota_twist_poly(&iota_twist_poly(g, &c).unwrap(), &c).unwrap();
                back == g.normalized(&c)
            },
        )
        .map_err(|e| format!("iota p={p}: {e}"))?;
        sweep(
            50,
            || family::random_mw(&mut rng, &c),
            |e| {
                let rs = rank_sequence_from_mw(e).unwrap();
                mw_from_rank_sequence(&rs, &c).unwrap().same_class(e)
            },
        )
        .map_err(|e| format!("rank sequence p={p}: {e}"))?;
        let modulus = c.modulus();
        sweep(
            100,
            || family::random_preparable(&mut rng, &c),
            |f| {
                let pf = weierstrass_prepare(f, &c).unwrap();
                pf.recombine(p).reduce_mod(&modulus) == f.reduce_mod(&modulus) && is_distinguished(pf.dist.poly(), &c)
            },
        )
        .map_err(|e| format!("weierstrass p={p}: {e}"))?;
        lines.push(format!("p={p}"));
    }
    Ok(format!("iota 100, rank sequences 50, preparation 100 for {}", lines.join(", ")))
}

fn functional_equation() -> Outcome {
    let mut feq = 0;
    let mut pairs = 0;
    for p in [3, 5] {
        let c = ctx(p);
        let mut rng = ChaCha8Rng::seed_from_u64(SEED);
        for i in 0..100 {
            let e = family::random_any(&mut rng, &c).unwrap();
            let twisted = e.iota_twist().unwrap();
            if !functional_equation_check(&e, &twisted).unwrap() {
                return Err(format!("p={p} sample {i}: {e} vs {twisted}"));
            }
            feq += 1;
            let sha = e.torsion_part();
            let sha_t = sha.iota_twist().unwrap();
            let cmp = sha_comparison(&sha, &sha_t).map_err(|err| format!("{sha}: {err}"))?;
            if !cmp.invariants_equal || !cmp.eventually_constant() {
                return Err(format!("p={p} sample {i} {sha}: {cmp:?}"));
            }
            pairs += 1;
        }
    }
    Ok(format!("{feq} functional equations, {pairs} Sha pairs eventually constant"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("growth law on the desk family", growth_law),
        ("pinned Λ/3 ⊕ Λ/(T - 3)", pinned_linear),
        ("pinned Λ/nu_1^2", pinned_cyclotomic_square),
        ("coprime exact limit", coprime_exact_limit),
        ("F^iota = G", f_iota_g),
        ("reconstruction without cyclotomic factors", reconstruction),
        ("Selmer disassembly shape", disassembly_shape),
        ("round trips", round_trips),
        ("functional equation", functional_equation),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|payload| {
            let msg = payload
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("[PASS] criterion {}: {name} ({detail})", i + 1),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] criterion {}: {name} ({detail})", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
