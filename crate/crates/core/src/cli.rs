//! File formats and the command implementations behind the `iwasawa` binary.
//!
//! Module description files are JSON:
//!
//! ```json
//! { "p": 3, "prec": 8, "rank": 1, "mu_parts": [2],
//!   "lambda_parts": [ {"kind": "nu", "level": 1, "exp": 2},
//!                     {"kind": "poly", "coeffs": [-3, 1], "exp": 1} ] }
//! ```
//!
//! `p` and `prec` default to 3 and 8; `n_cap` may be given as well and
//! otherwise defaults per prime. Integers are decimal
//! and unbounded. Reports are JSON objects with sorted keys, so identical
//! inputs produce byte-identical output.

use std::fmt::Write as _;

use num_bigint::BigInt;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Number, Value};
use sha2::{Digest, Sha256};

use crate::elementary_module::{ElementaryModule, PrimeFactor};
use crate::error::Error;
use crate::family;
use crate::functors::{check_f_iota_g, check_reconstruction, f_closed, g_closed, validate_g_against_oracle, LevelRow};
use crate::iwasawa_app::{
    char_ideal_consistent, disassemble_selmer, functional_equation_check, growth_fit_to, mw_from_rank_sequence,
    mw_shape, rank_sequence_from_mw, sha_comparison, DisassemblyMode,
};
use crate::lambda_poly::{
    default_n_cap, iota_twist_poly, weierstrass_prepare, DistinguishedPoly, IntPoly, PrecisionContext,
};

pub const DEFAULT_P: u64 = 3;
pub const DEFAULT_PREC: u32 = 8;
pub const DEFAULT_SEED: u64 = 1729;

/// Process exit codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitCode {
    Success = 0,
    Validation = 1,
    SuiteFailure = 2,
    Internal = 3,
}

#[derive(Debug)]
pub struct CliError {
    pub code: ExitCode,
    pub message: String,
}

impl CliError {
    fn validation(message: impl Into<String>) -> Self {
        Self { code: ExitCode::Validation, message: message.into() }
    }

    fn internal(message: impl Into<String>) -> Self {
        Self { code: ExitCode::Internal, message: message.into() }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::NoFit(_) => CliError::internal(e.to_string()),
            other => CliError::validation(other.to_string()),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

/// Context overrides from the command line.
#[derive(Clone, Copy, Debug, Default)]
pub struct Overrides {
    pub p: Option<u64>,
    pub prec: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum LambdaPart {
    Nu { level: u32, exp: u32 },
    Poly { coeffs: Vec<Number>, exp: u32 },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModuleDescriptionFile {
    #[serde(default = "default_p")]
    pub p: u64,
    #[serde(default = "default_prec")]
    pub prec: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_cap: Option<u32>,
    #[serde(default)]
    pub rank: usize,
    #[serde(default)]
    pub mu_parts: Vec<u32>,
    #[serde(default)]
    pub lambda_parts: Vec<LambdaPart>,
}

fn default_p() -> u64 {
    DEFAULT_P
}

fn default_prec() -> u32 {
    DEFAULT_PREC
}

fn number_to_bigint(n: &Number) -> Result<BigInt, CliError> {
    n.to_string().parse::<BigInt>().map_err(|_| CliError::validation(format!("coefficient `{n}` is not an integer")))
}

fn bigint_to_number(x: &BigInt) -> Number {
    x.to_string().parse().expect("decimal integers are valid JSON numbers")
}

impl ModuleDescriptionFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::validation(format!("malformed module file: {e}")))
    }

    pub fn context(&self, ov: Overrides) -> Result<PrecisionContext, CliError> {
        let p = ov.p.unwrap_or(self.p);
        let prec = ov.prec.unwrap_or(self.prec);
        let n_cap = self.n_cap.unwrap_or_else(|| default_n_cap(p));
        Ok(PrecisionContext::new(p, n_cap, prec)?)
    }

    /// Builds the module, naming the offending entry on failure.
    pub fn to_module(&self, ov: Overrides) -> Result<ElementaryModule, CliError> {
        let ctx = self.context(ov)?;
        let mut e = ElementaryModule::free(ctx, self.rank);
        for (i, f) in self.mu_parts.iter().enumerate() {
            e = e
                .with_factor(PrimeFactor::MuPrime, *f)
                .map_err(|err| CliError::validation(format!("mu_parts[{i}] = {f}: {err}")))?;
        }
        for (i, part) in self.lambda_parts.iter().enumerate() {
            let (factor, exp, label) = match part {
                LambdaPart::Nu { level, exp } => (Ok(PrimeFactor::Cyclotomic(*level)), *exp, format!("nu_{level}")),
                LambdaPart::Poly { coeffs, exp } => {
                    let coeffs = coeffs.iter().map(number_to_bigint).collect::<Result<Vec<_>, _>>()?;
                    let poly = IntPoly::new(coeffs);
                    let label = format!("poly {poly}");
                    (DistinguishedPoly::new(poly, &ctx).map(PrimeFactor::Generic), *exp, label)
                }
            };
            e = factor
                .and_then(|f| e.clone().with_factor(f, exp))
                .map_err(|err| CliError::validation(format!("lambda_parts[{i}] ({label}): {err}")))?;
        }
        Ok(e)
    }

    pub fn from_module(e: &ElementaryModule) -> Self {
        let ctx = e.ctx();
        let mut mu_parts = Vec::new();
        let mut lambda_parts = Vec::new();
        for (f, exp) in e.canonical_form().factors() {
            match f {
                PrimeFactor::MuPrime => mu_parts.push(*exp),
                PrimeFactor::Cyclotomic(k) => lambda_parts.push(LambdaPart::Nu { level: *k, exp: *exp }),
                PrimeFactor::Generic(g) => lambda_parts.push(LambdaPart::Poly {
                    coeffs: g.poly().coeffs().iter().map(bigint_to_number).collect(),
                    exp: *exp,
                }),
            }
        }
        Self { p: ctx.p(), prec: ctx.prec(), n_cap: Some(ctx.n_cap()), rank: e.rank(), mu_parts, lambda_parts }
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("module files serialize")
    }
}

/// Output of one command.
#[derive(Clone, Debug)]
pub struct Report {
    pub command: String,
    pub input_digest: Option<String>,
    pub payload: Value,
    pub human: String,
    pub exit: ExitCode,
}

impl Report {
    pub fn to_json(&self) -> Value {
        json!({
            "command": self.command,
            "input_digest": self.input_digest,
            "result": self.payload,
            "exit_code": self.exit as i32,
        })
    }

    pub fn render(&self, json_output: bool) -> String {
        if json_output {
            let mut s = serde_json::to_string_pretty(&self.to_json()).expect("reports serialize");
            s.push('\n');
            s
        } else {
            self.human.clone()
        }
    }
}

pub fn digest(inputs: &[&str]) -> String {
    let mut h = Sha256::new();
    for input in inputs {
        h.update(input.as_bytes());
        h.update([0u8]);
    }
    hex::encode(h.finalize())
}

fn module_summary(e: &ElementaryModule) -> Value {
    json!({
        "module": ModuleDescriptionFile::from_module(e).to_json(),
        "display": e.canonical_form().to_string(),
        "rank": e.rank(),
        "lambda": e.lambda_invariant(),
        "mu": e.mu_invariant(),
        "uses_level_zero": e.uses_level_zero(),
    })
}

fn rows_json(rows: &[LevelRow]) -> Value {
    serde_json::to_value(rows).expect("rows serialize")
}

fn rows_table(rows: &[LevelRow], out: &mut String) {
    let _ = writeln!(out, "{:>3} {:>10} {:>10}", "n", "e_n", "predicted");
    for r in rows {
        let _ = writeln!(out, "{:>3} {:>10} {:>10}", r.n, r.observed, r.predicted);
    }
}

pub fn cmd_invariants(text: &str, ov: Overrides) -> Result<Report, CliError> {
    let e = ModuleDescriptionFile::parse(text)?.to_module(ov)?;
    let mut payload = module_summary(&e);
    let mut human = String::new();
    let _ = writeln!(human, "module : {}", e.canonical_form());
    let _ = writeln!(human, "rank   : {}", e.rank());
    let _ = writeln!(human, "lambda : {}", e.lambda_invariant());
    let _ = writeln!(human, "mu     : {}", e.mu_invariant());
    if e.is_torsion() {
        let ci = e.char_ideal_symbolic()?;
        let mut gen = if ci.mu_total > 0 { format!("p^{}", ci.mu_total) } else { String::new() };
        for (g, exp) in &ci.factors {
            if !gen.is_empty() {
                gen.push_str(" * ");
            }
            let _ = write!(gen, "({g})^{exp}");
        }
        if gen.is_empty() {
            gen.push('1');
        }
        let _ = writeln!(human, "char   : {gen}");
        payload["char_ideal"] = json!({
            "mu_total": ci.mu_total,
            "factors": ci.factors.iter().map(|(g, exp)| json!({
                "coeffs": g.poly().coeffs().iter().map(bigint_to_number).collect::<Vec<_>>(),
                "exp": exp,
            })).collect::<Vec<_>>(),
            "generator": gen,
        });
    }
    Ok(Report {
        command: "invariants".into(),
        input_digest: Some(digest(&[text])),
        payload,
        human,
        exit: ExitCode::Success,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Functor {
    F,
    G,
}

pub fn cmd_functor(text: &str, which: Functor, ov: Overrides) -> Result<Report, CliError> {
    let e = ModuleDescriptionFile::parse(text)?.to_module(ov)?;
    let (name, image) = match which {
        Functor::F => ("F", f_closed(&e)?),
        Functor::G => ("G", g_closed(&e)),
    };
    let human = format!("{name}({}) = {}\n", e.canonical_form(), image);
    Ok(Report {
        command: format!("functor --which {}", name.to_lowercase()),
        input_digest: Some(digest(&[text])),
        payload: json!({
            "functor": name,
            "input": module_summary(&e),
            "image": ModuleDescriptionFile::from_module(&image).to_json(),
            "extension": e.uses_level_zero(),
        }),
        human,
        exit: ExitCode::Success,
    })
}

pub fn cmd_disassemble(text: &str, mode: DisassemblyMode, ov: Overrides) -> Result<Report, CliError> {
    let e = ModuleDescriptionFile::parse(text)?.to_module(ov)?;
    let d = disassemble_selmer(&e, mode)?;
    let consistent = char_ideal_consistent(&e, &d)?;
    let shape = mw_shape(&d.e_mw);
    let mut human = String::new();
    let _ = writeln!(human, "selmer : {}", e.canonical_form());
    let _ = writeln!(human, "sha    : {}", d.e_sha);
    let _ = writeln!(human, "mw     : {}", d.e_mw);
    let _ = writeln!(human, "mode   : {}", d.mode);
    let _ = writeln!(human, "char-ideal multiplicativity: {}", if consistent { "ok" } else { "FAILED" });
    Ok(Report {
        command: format!("disassemble --mode {mode}"),
        input_digest: Some(digest(&[text])),
        payload: json!({
            "mode": d.mode,
            "e_sha": ModuleDescriptionFile::from_module(&d.e_sha).to_json(),
            "e_mw": ModuleDescriptionFile::from_module(&d.e_mw).to_json(),
            "mw_shape": shape,
            "char_ideal_consistent": consistent,
        }),
        human,
        exit: if consistent { ExitCode::Success } else { ExitCode::Internal },
    })
}

pub fn cmd_growth(text: &str, n_max: Option<u32>, ov: Overrides) -> Result<Report, CliError> {
    let e = ModuleDescriptionFile::parse(text)?.to_module(ov)?;
    let n_max = n_max.unwrap_or(e.ctx().n_cap());
    let fit = growth_fit_to(&e, n_max)?;
    let mut human = String::new();
    let _ = writeln!(human, "module : {}", e.canonical_form());
    rows_table(&fit.per_level, &mut human);
    let _ = writeln!(human, "mu = {}, lambda = {}, nu = {}, from n0 = {}", fit.mu, fit.lambda, fit.nu, fit.n0);
    Ok(Report {
        command: format!("growth --n-max {n_max}"),
        input_digest: Some(digest(&[text])),
        payload: json!({
            "fit": { "mu": fit.mu, "lambda": fit.lambda, "nu": fit.nu, "n0": fit.n0 },
            "per_level": rows_json(&fit.per_level),
            "extension": e.uses_level_zero(),
        }),
        human,
        exit: ExitCode::Success,
    })
}

pub fn cmd_feq(text_a: &str, text_at: &str, ov: Overrides) -> Result<Report, CliError> {
    let a = ModuleDescriptionFile::parse(text_a)?.to_module(ov)?;
    let at = ModuleDescriptionFile::parse(text_at)?.to_module(ov)?;
    let verdict = functional_equation_check(&a, &at)?;
    let mut human = String::new();
    let _ = writeln!(human, "A      : {}", a.canonical_form());
    let _ = writeln!(human, "A^t    : {}", at.canonical_form());
    let _ = writeln!(human, "E(A) = E(A^t)^iota : {verdict}");
    let mut payload = json!({ "functional_equation": verdict });
    if a.is_torsion() && at.is_torsion() {
        let cmp = sha_comparison(&a, &at)?;
        let _ = writeln!(human, "lambda/mu equal    : {}", cmp.invariants_equal);
        let _ = writeln!(human, "per-level delta    : {:?}", cmp.per_level_delta);
        let _ = writeln!(
            human,
            "ratio bound        : p^{} from n = {} (witness |delta| on the fitted range)",
            cmp.ratio_bound_exp, cmp.from_level
        );
        payload["sha_comparison"] = serde_json::to_value(&cmp).expect("comparison serializes");
        payload["sha_comparison"]["eventually_constant"] = json!(cmp.eventually_constant());
        payload["sha_comparison"]["bound_kind"] =
            json!("derived witness: max |e_n(A) - e_n(A^t)| past the fitted thresholds");
    }
    Ok(Report {
        command: "feq".into(),
        input_digest: Some(digest(&[text_a, text_at])),
        payload,
        human,
        exit: ExitCode::Success,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Functors,
    Growth,
    Roundtrip,
    All,
}

/// Pass/fail tally of one named check.
#[derive(Clone, Debug, Serialize)]
pub struct CheckTally {
    pub name: String,
    pub passed: usize,
    pub failed: usize,
    pub first_failure: Option<String>,
}

impl CheckTally {
    fn new(name: &str) -> Self {
        Self { name: name.into(), passed: 0, failed: 0, first_failure: None }
    }

    fn record(&mut self, ok: bool, describe: impl FnOnce() -> String) {
        if ok {
            self.passed += 1;
        } else {
            self.failed += 1;
            if self.first_failure.is_none() {
                self.first_failure = Some(describe());
            }
        }
    }
}

fn suite_contexts(ov: Overrides) -> Result<Vec<PrecisionContext>, CliError> {
    let prec = ov.prec.unwrap_or(DEFAULT_PREC);
    let ps = match ov.p {
        Some(p) => vec![p],
        None => vec![3, 5],
    };
    ps.into_iter().map(|p| PrecisionContext::new(p, default_n_cap(p), prec).map_err(CliError::from)).collect()
}

/// `F(X)^ι = G(X)` and the reconstruction `X = Λ^r ⊕ F(X)^ι` on random modules.
pub fn functors_suite(ctx: &PrecisionContext, seed: u64, samples: usize) -> Vec<CheckTally> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fig = CheckTally::new(&format!("F^iota = G (p={})", ctx.p()));
    for _ in 0..samples {
        let e = family::random_module(&mut rng, ctx);
        fig.record(check_f_iota_g(&e).unwrap_or(false), || e.to_string());
    }
    let mut recon = CheckTally::new(&format!("reconstruction (p={})", ctx.p()));
    for _ in 0..samples {
        let e = family::random_coprime_module(&mut rng, ctx);
        recon.record(check_reconstruction(&e).unwrap_or(false), || e.to_string());
    }
    vec![fig, recon]
}

/// Growth law against the oracle with `n0 ≤ 2`.
pub fn growth_suite(ctx: &PrecisionContext, seed: u64, samples: usize) -> Vec<CheckTally> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut law = CheckTally::new(&format!("growth law (p={})", ctx.p()));
    let mut coprime = CheckTally::new(&format!("coprime exact limit (p={})", ctx.p()));
    for _ in 0..samples {
        let e = family::random_module(&mut rng, ctx);
        match validate_g_against_oracle(&e) {
            Ok(r) => {
                law.record(r.law_holds && r.threshold_n0 <= 2, || format!("{e}: {:?}", r.per_level));
                if let Some(ok) = r.coprime_exact_ok {
                    coprime.record(ok, || e.to_string());
                }
            }
            Err(err) => law.record(false, || format!("{e}: {err}")),
        }
    }
    vec![law, coprime]
}

/// ι-involution, rank-sequence inversion and Weierstrass reconstruction.
pub fn roundtrip_suite(ctx: &PrecisionContext, seed: u64, samples: usize) -> Vec<CheckTally> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut iota = CheckTally::new(&format!("iota involution (p={})", ctx.p()));
    for _ in 0..samples {
        let g = family::random_distinguished(&mut rng, ctx);
        let ok =
            iota_twist_poly(&g, ctx).and_then(|h| iota_twist_poly(&h, ctx)).is_ok_and(|back| back == g.normalized(ctx));
        iota.record(ok, || g.to_string());
    }
    let mut ranks = CheckTally::new(&format!("rank sequence inversion (p={})", ctx.p()));
    for _ in 0..samples {
        let e = family::random_mw(&mut rng, ctx);
        let ok = rank_sequence_from_mw(&e)
            .and_then(|rs| mw_from_rank_sequence(&rs, ctx))
            .is_ok_and(|back| back.same_class(&e));
        ranks.record(ok, || e.to_string());
    }
    let mut prep = CheckTally::new(&format!("weierstrass reconstruction (p={})", ctx.p()));
    let modulus = ctx.modulus();
    for _ in 0..samples {
        let f = family::random_preparable(&mut rng, ctx);
        let ok = weierstrass_prepare(&f, ctx).is_ok_and(|pf| {
            pf.recombine(ctx.p()).reduce_mod(&modulus) == f.reduce_mod(&modulus)
                && crate::lambda_poly::is_distinguished(pf.dist.poly(), ctx)
        });
        prep.record(ok, || f.to_string());
    }
    vec![iota, ranks, prep]
}

pub fn cmd_verify(suite: Suite, seed: u64, samples: usize, ov: Overrides) -> Result<Report, CliError> {
    let mut tallies = Vec::new();
    for ctx in suite_contexts(ov)? {
        if matches!(suite, Suite::Functors | Suite::All) {
            tallies.extend(functors_suite(&ctx, seed, samples));
        }
        if matches!(suite, Suite::Growth | Suite::All) {
            tallies.extend(growth_suite(&ctx, seed, samples));
        }
        if matches!(suite, Suite::Roundtrip | Suite::All) {
            tallies.extend(roundtrip_suite(&ctx, seed, samples));
        }
    }
    let failed = tallies.iter().any(|t| t.failed > 0);
    let mut human = String::new();
    for t in &tallies {
        let status = if t.failed == 0 { "PASS" } else { "FAIL" };
        let _ = writeln!(human, "[{status}] {:<40} {:>5} passed {:>5} failed", t.name, t.passed, t.failed);
        if let Some(f) = &t.first_failure {
            let _ = writeln!(human, "       first failure: {f}");
        }
    }
    let suite_name = match suite {
        Suite::Functors => "functors",
        Suite::Growth => "growth",
        Suite::Roundtrip => "roundtrip",
        Suite::All => "all",
    };
    Ok(Report {
        command: format!("verify --suite {suite_name} --seed {seed} --samples {samples}"),
        input_digest: None,
        payload: json!({ "checks": tallies, "all_passed": !failed }),
        human,
        exit: if failed { ExitCode::SuiteFailure } else { ExitCode::Success },
    })
}
