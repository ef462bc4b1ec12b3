//! Verification suites: exact identities from the operator, subspace and
//! moment modules, run at desk-scale parameters.

use std::fmt;

use anyhow::Result;
use clap::ValueEnum;
use num_traits::Signed;
use quasinil::coeffs::CoefficientSpec;
use quasinil::moments::{
    mixed_moment_check, moment_charfn, moment_combinatorial, moment_dense_oracle,
    rademacher_moment, MomentReport,
};
use quasinil::operators::{
    a_trunc, check_commutator_realization, check_generation_identities, check_invariance,
    check_nilpotency, check_similarity, s_operator, CheckReport,
};
use quasinil::scalar::{fmt_rational, rat, real, to_f64, CRational, Rational};
use quasinil::subspace::{
    hyperinvariance_report, lower_bound_check, ratio_profile, rm_trace, rm_truncated, PQWord,
};
use quasinil::{Caps, Letter, MomentTarget, OperatorSum, TensorWord};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Algebra,
    Subspace,
    Similarity,
    MomentsCrosscheck,
    All,
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(
            self.to_possible_value()
                .expect("no skipped variants")
                .get_name(),
        )
    }
}

/// Deliberate defects used to check that the harness notices failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fault {
    /// Flips the sign of the `V*⊗V` term of every `S(n,m)`.
    SSign,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteEntry {
    pub suite: Suite,
    pub spec: Option<String>,
    #[serde(flatten)]
    pub check: CheckReport,
}

impl SuiteEntry {
    pub fn label(&self) -> String {
        match &self.spec {
            Some(s) => format!("{} [{s}]", self.check.name),
            None => self.check.name.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub suite: Suite,
    pub fault: Option<Fault>,
    pub total: usize,
    pub failed: usize,
    pub pass: bool,
    pub first_failure: Option<String>,
    pub checks: Vec<SuiteEntry>,
}

impl VerifyReport {
    pub fn text(&self) -> String {
        let mut out = String::new();
        for e in &self.checks {
            if e.check.pass {
                out.push_str(&format!("{}: pass\n", e.label()));
            } else {
                out.push_str(&format!(
                    "{}: FAIL (residual {})\n",
                    e.label(),
                    e.check.residual
                ));
            }
        }
        out.push_str(&format!("{} checks, {} failed\n", self.total, self.failed));
        out
    }
}

struct Collector {
    suite: Suite,
    spec: Option<String>,
    entries: Vec<SuiteEntry>,
}

impl Collector {
    fn push(&mut self, check: CheckReport) {
        self.entries.push(SuiteEntry {
            suite: self.suite,
            spec: self.spec.clone(),
            check,
        });
    }

    fn extend(&mut self, checks: impl IntoIterator<Item = CheckReport>) {
        for c in checks {
            self.push(c);
        }
    }
}

/// A check whose residual is a number rather than an operator.
fn scalar_check(
    name: String,
    statement: &str,
    level: usize,
    residual: String,
    pass: bool,
) -> CheckReport {
    CheckReport {
        name,
        statement: statement.into(),
        level,
        residual,
        pass,
        witness: None,
    }
}

fn geom(p: i64, q: i64) -> CoefficientSpec {
    CoefficientSpec::geometric(rat(p, q)).expect("ratio in (0,1)")
}

fn list(s: &str) -> CoefficientSpec {
    CoefficientSpec::parse(&format!("list:{s}")).expect("literal list")
}

fn spec_label(spec: &CoefficientSpec) -> String {
    match spec {
        CoefficientSpec::Geometric { ratio } => format!("geometric:{}", fmt_rational(ratio)),
        CoefficientSpec::Explicit { values } => {
            format!(
                "list:{}",
                values
                    .iter()
                    .map(quasinil::scalar::fmt_crational)
                    .collect::<Vec<_>>()
                    .join(",")
            )
        }
    }
}

fn s_op(spec: &CoefficientSpec, n: usize, m: usize, fault: Option<Fault>) -> Result<OperatorSum> {
    let mut s = s_operator(spec, n, m)?;
    if fault == Some(Fault::SSign) {
        let word = TensorWord::placed(&[(n, Letter::Vstar), (m, Letter::V)]);
        let w = s.weight(&word);
        s.add_term(-(w.clone() + w), word);
    }
    Ok(s)
}

fn p_power(n: usize) -> OperatorSum {
    OperatorSum::word(TensorWord::repeat(Letter::P, n))
}

pub const ALGEBRA_LIST: &str = "1/2,1/3,1/5,2/7,1/11,3/13";

fn algebra(c: &mut Collector, fault: Option<Fault>) -> Result<()> {
    for spec in [geom(1, 2), list(ALGEBRA_LIST)] {
        c.spec = Some(spec_label(&spec));
        for level in 4..=6 {
            let a = a_trunc(&spec, level);
            for m in 2..=4 {
                for n in 1..m {
                    let s = s_op(&spec, n, m, fault)?;
                    c.push(CheckReport::vanishing(
                        format!("[S({n},{m}), A_{level}] = 0"),
                        "S A - A S = 0",
                        level,
                        &s.commutator(&a),
                    ));
                }
            }
        }
        for level in 1..=6 {
            c.extend(check_nilpotency(&spec, level)?);
        }
        for level in 2..=6 {
            c.extend(check_generation_identities(&spec, level)?);
        }
        for level in 1..=6 {
            let a = a_trunc(&spec, level);
            for n in 1..=level {
                let v = check_invariance(&p_power(n), &a)?;
                c.push(CheckReport::vanishing(
                    format!("A_{level}P^⊗{n} = P^⊗{n}A_{level}P^⊗{n}"),
                    "range of P⊗...⊗P is invariant under A",
                    level,
                    &v.residual,
                ));
            }
        }
        for n in 1..=5 {
            let s = s_op(&spec, n, n + 1, fault)?;
            let p = p_power(n);
            let verdict = check_invariance(&p, &s)?;
            let ratio: CRational = spec.coeff(n + 1) / spec.coeff(n);
            let mut letters = vec![Letter::P; n - 1];
            letters.extend([Letter::Vstar, Letter::V]);
            let expected = OperatorSum::term(-ratio, TensorWord::new(letters));
            c.push(CheckReport::identity(
                format!(
                    "S({n},{})P^⊗{n} - P^⊗{n}S({n},{})P^⊗{n} = -(c_{}/c_{n})P^⊗{}⊗V*⊗V",
                    n + 1,
                    n + 1,
                    n + 1,
                    n - 1
                ),
                "S_{n,n+1} moves the range of P⊗...⊗P by exactly one term",
                n + 1,
                &verdict.residual,
                &expected,
            ));
            let mut pq = vec![Letter::P; n];
            pq.push(Letter::Q);
            c.push(CheckReport::identity(
                format!("P^⊗{n}S({n},{})P^⊗{n} = P^⊗{n}⊗Q", n + 1),
                "compression of S_{n,n+1} to P⊗...⊗P",
                n + 1,
                &(&(&p * &s) * &p),
                &OperatorSum::word(TensorWord::new(pq)),
            ));
        }
    }
    c.spec = None;
    Ok(())
}

fn similarity(c: &mut Collector) -> Result<()> {
    let pairs = [
        (
            list("1/2,1/4,1/8,1/16,1/32,1/64"),
            list("1/3,1/9,1/27,1/81,1/243,1/729"),
        ),
        (geom(1, 2), geom(1, 3)),
        (list(ALGEBRA_LIST), geom(2, 3)),
    ];
    for (a, b) in &pairs {
        c.spec = Some(format!("a={}, b={}", spec_label(a), spec_label(b)));
        for level in 1..=5 {
            for n in 1..=level {
                c.push(check_similarity(a, b, n, level)?);
            }
        }
        for level in 1..=6 {
            c.push(check_commutator_realization(a, b, level)?);
        }
    }
    c.spec = None;
    Ok(())
}

fn subspace(c: &mut Collector) -> Result<()> {
    let half = rat(1, 2);
    let g = geom(1, 2);
    c.spec = Some("geometric:1/2".into());
    let words: Vec<PQWord> = (0..=3).flat_map(PQWord::all).collect();
    for w in &words {
        for m in 0..=8 {
            let exact = rm_trace(w, &g, m)?;
            let t = rm_truncated(w, &half, m, 60)?;
            let gap = &exact - &t.value;
            let pass = !gap.is_negative() && gap <= t.tail_bound;
            c.push(scalar_check(
                format!(
                    "τ(R_{m}·{}) recursion = truncated sum (N=60)",
                    word_label(w)
                ),
                "0 ≤ recursion - truncated sum ≤ tail bound",
                60,
                fmt_rational(&gap),
                pass,
            ));
        }
        let mut prepended = vec![Letter::P];
        prepended.extend_from_slice(w.letters());
        let pw = PQWord::new(prepended)?;
        for m in 0..=8 {
            let lhs = rm_trace(&pw, &g, m)?;
            let rhs = &half * num_traits::pow(&half * &half, m) * rm_trace(w, &g, m)?;
            let r = &lhs - &rhs;
            c.push(scalar_check(
                format!(
                    "τ(R_{m}·P⊗{}) = (1/2)α^{}·τ(R_{m}·{})",
                    word_label(w),
                    2 * m,
                    word_label(w)
                ),
                "τ(R_m (P⊗w)) = (1/2) α^(2m) τ(R_m w)",
                pw.len(),
                fmt_rational(&r),
                r == Rational::from_integer(0.into()),
            ));
        }
        let profile = ratio_profile(w, &half, 60)?;
        let root = profile.row(60).expect("row 60").root;
        let dev = (root - profile.limit()).abs();
        c.push(scalar_check(
            format!("|root_60({}) - α^{}| ≤ 0.06", word_label(w), w.p_count()),
            "(τ(R_m w)/τ(R_m))^(1/2m) approaches α^#P(w)",
            60,
            dev.to_string(),
            dev <= 0.06,
        ));
    }
    let caps = Caps::default();
    for w in words.iter().filter(|w| !w.is_empty()) {
        let r = hyperinvariance_report(w, &g, 5, &caps)?;
        c.push(CheckReport {
            name: format!(
                "S({},{}) moves range(p_{})",
                r.witness.0,
                r.witness.1,
                word_label(w)
            ),
            statement: "S p_w ≠ p_w S p_w with the predicted term, and the range join grows".into(),
            level: 5,
            residual: r.residual.clone(),
            pass: r.pass,
            witness: Some(format!(
                "{} (rank {} -> {})",
                r.expected_term, r.rank_before, r.rank_after
            )),
        });
    }
    let mut xi = OperatorSum::term(real(rat(2, 3)), TensorWord::new(vec![Letter::Q, Letter::P]));
    xi.add_term(real(rat(1, 3)), TensorWord::new(vec![Letter::P]));
    let lb = lower_bound_check(&xi, &half, 10, 8, &caps)?;
    c.push(scalar_check(
        "(‖A^mξ‖/‖A^m1‖)^(1/m) ≥ α^r/√2 for ξ = (2/3)Q⊗P + (1/3)P".into(),
        "growth-rate lower bound at truncation, margin reported",
        8,
        lb.min_margin.to_string(),
        lb.holds && lb.min_margin > 0.0,
    ));
    c.spec = None;
    Ok(())
}

/// `|a − b|`, from the exact values when both routes have them.
pub fn route_gap(a: &MomentReport, b: &MomentReport) -> f64 {
    match (&a.exact, &b.exact) {
        (Some(x), Some(y)) => to_f64(&(x - y).abs()),
        _ => (a.value - b.value).abs(),
    }
}

/// Exact equality when both routes evaluate the same finite model exactly,
/// otherwise agreement within the sum of their certified bounds.
fn moment_pair(name: String, level: usize, a: &MomentReport, b: &MomentReport) -> CheckReport {
    if let (Some(x), Some(y)) = (&a.exact, &b.exact) {
        if a.level == b.level && a.error_bound == 0.0 && b.error_bound == 0.0 {
            let d = x - y;
            let pass = d == Rational::from_integer(0.into());
            return scalar_check(name, "routes agree exactly", level, fmt_rational(&d), pass);
        }
    }
    let diff = route_gap(a, b);
    let allowed = a.total_bound() + b.total_bound() + 1e-12;
    scalar_check(
        name,
        "routes agree within their certified bounds",
        level,
        diff.to_string(),
        diff <= allowed,
    )
}

pub const MOMENT_LIST: &str = "1/2,1/3,1/5,2/7";

fn moments_crosscheck(c: &mut Collector) -> Result<()> {
    let caps = Caps::default();
    for spec in [geom(1, 2), list(MOMENT_LIST)] {
        c.spec = Some(spec_label(&spec));
        let level = 4;
        let mut targets: Vec<MomentTarget> = Vec::new();
        for order in 1..=8 {
            targets.push(MomentTarget::XPower { order });
            targets.push(MomentTarget::YPower { order });
        }
        for order in 1..=6 {
            targets.push(MomentTarget::RePower { order });
            targets.push(MomentTarget::ImPower { order });
        }
        for p in 1..=4 {
            targets.push(MomentTarget::AstarAPower { p });
        }
        for t in targets {
            let comb = moment_combinatorial(&spec, t, Some(level), &caps)?;
            let dense = moment_dense_oracle(&spec, t, level, true, &caps)?;
            c.push(moment_pair(
                format!("τ({t}) combinatorial = dense (N={level})"),
                level,
                &comb,
                &dense,
            ));
        }
        for total in 2..=6 {
            for n in 1..total {
                let r = mixed_moment_check(&spec, n, total - n, level, &caps)?;
                c.push(scalar_check(
                    format!(
                        "τ(a^{n}b^{}) = τ(a^{n})τ(b^{}) (N={level})",
                        total - n,
                        total - n
                    ),
                    "mixed moments of the real and imaginary parts factor",
                    level,
                    fmt_rational(&(&r.joint - &r.product)),
                    r.equal,
                ));
            }
        }
    }
    for (p, q) in [(1, 2), (1, 3)] {
        let spec = geom(p, q);
        c.spec = Some(spec_label(&spec));
        for order in [2, 4, 6, 8] {
            let t = MomentTarget::XPower { order };
            let comb = moment_combinatorial(&spec, t, None, &caps)?;
            let charfn = moment_charfn(&spec, t, 1e-12, &caps)?;
            c.push(moment_pair(
                format!("τ({t}) combinatorial = charfn"),
                0,
                &comb,
                &charfn,
            ));
            let dense = moment_dense_oracle(&spec, t, 10, false, &caps)?;
            c.push(moment_pair(
                format!("τ({t}) combinatorial ≈ dense (N=10)"),
                10,
                &comb,
                &dense,
            ));
            let comb12 = moment_combinatorial(&spec, t, Some(12), &caps)?;
            let dyadic = rademacher_moment(&spec, t, 12)?;
            c.push(moment_pair(
                format!("τ({t}) combinatorial = dyadic integral (N=12)"),
                12,
                &comb12,
                &dyadic,
            ));
        }
    }
    c.spec = None;
    Ok(())
}

fn word_label(w: &PQWord) -> String {
    if w.is_empty() {
        "1".into()
    } else {
        w.to_string()
    }
}

pub fn run_suite(suite: Suite, fault: Option<Fault>) -> Result<VerifyReport> {
    let mut c = Collector {
        suite,
        spec: None,
        entries: Vec::new(),
    };
    let all = suite == Suite::All;
    if all || suite == Suite::Algebra {
        c.suite = Suite::Algebra;
        algebra(&mut c, fault)?;
    }
    if all || suite == Suite::Similarity {
        c.suite = Suite::Similarity;
        similarity(&mut c)?;
    }
    if all || suite == Suite::Subspace {
        c.suite = Suite::Subspace;
        subspace(&mut c)?;
    }
    if all || suite == Suite::MomentsCrosscheck {
        c.suite = Suite::MomentsCrosscheck;
        moments_crosscheck(&mut c)?;
    }
    let failed = c.entries.iter().filter(|e| !e.check.pass).count();
    let first_failure = c
        .entries
        .iter()
        .find(|e| !e.check.pass)
        .map(SuiteEntry::label);
    Ok(VerifyReport {
        suite,
        fault,
        total: c.entries.len(),
        failed,
        pass: failed == 0,
        first_failure,
        checks: c.entries,
    })
}
