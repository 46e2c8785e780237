//! Canonical scoring rules and the rule-spec text format.
//!
//! The catalog supplies the log, Brier, and spherical rules as independent
//! oracles; the constructors must reproduce their companions. Rule-spec
//! documents are a line-oriented text format with explicit interval
//! closures; half-open versus closed boundaries are load-bearing for
//! step rules, so closure is data, never convention.
//!
//! Grammar (one directive per line, blank lines ignored):
//!
//! ```text
//! rule <name>
//! T [nondecreasing|nonincreasing|unconstrained]
//! segment <lo> <hi> <lo_closed:0|1> <hi_closed:0|1> <form> <params...>
//! at0 <value|-inf>
//! at1 <value|-inf>
//! F [direction]          # optional section; derived on load when absent
//! segment ...
//! at0 ...
//! at1 ...
//! C <real>               # optional, defaults to 0 on load
//! c <real>               # optional, >= 0, defaults to 0 on load
//! notes <free text>      # optional
//! ```
//!
//! A declared direction is validated at parse time and a mismatch is a
//! schema error; without one the section loads unconstrained and only the
//! runtime checks judge it. (That permits deliberately improper pairs,
//! which the checker must be able to load in order to refute.)
//!
//! Forms: `constant c`, `affine a b` (a*u + b), `logform a b c`
//! (a*ln u + b*ln(1-u) + c), `quadratic a b c` (a*u^2 + b*u + c), and
//! `mixed a b c d e f g` (quadratic a,b,c plus d*ln u + e*ln(1-u) + f/u +
//! g/(1-u)). Numbers are decimal with up to 17 significant digits and
//! round-trip at full binary precision; `-inf` is the only non-finite
//! token and is valid only for endpoint values.

use std::fmt::Write as _;

use crate::extreal::{ExtReal, Extended};
use crate::represent::{derive_false_score, Provenance, ScoringRule};
use crate::scorefn::{Direction, MixedCoeffs, OpaqueSeg, ScoreFn, Segment, SegmentForm};

/// The built-in oracle rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CatalogName {
    Log,
    Brier,
    Spherical,
}

/// Canonical rules used as independent oracles.
///
/// * `Log`: `(ln x, ln(1-x))` with `-inf` endpoint values.
/// * `Brier`: `(-(1-x)^2, -x^2)`.
/// * `Spherical`: `(x/r - 1, (1-x)/r - 1)` with `r = sqrt(x^2 + (1-x)^2)`,
///   shifted by `-1` so both components are non-positive; adding a common
///   constant to both components changes no expected-score comparison, so
///   propriety is unaffected. The components are opaque segments.
///
/// The stored constant is pinned by the base-point identity
/// `C = T(1/2) + F(1/2)`, which is the `C` that re-derives the catalog
/// companion from the catalog truth-score.
pub fn catalog_rule(name: CatalogName) -> ScoringRule {
    match name {
        CatalogName::Log => {
            let truth = ScoreFn::single(
                SegmentForm::LogForm { log_u: 1.0, log_omu: 0.0, cst: 0.0 },
                ExtReal::NegInf,
                ExtReal::finite(0.0),
                Direction::NonDecreasing,
            )
            .unwrap();
            let falsity = ScoreFn::single(
                SegmentForm::LogForm { log_u: 0.0, log_omu: 1.0, cst: 0.0 },
                ExtReal::finite(0.0),
                ExtReal::NegInf,
                Direction::NonIncreasing,
            )
            .unwrap();
            ScoringRule {
                truth_score: truth,
                false_score: falsity,
                offset: -2.0 * std::f64::consts::LN_2,
                drop_at_one: 0.0,
                provenance: Provenance::Catalog,
            }
        }
        CatalogName::Brier => {
            let truth = ScoreFn::single(
                SegmentForm::Quadratic { sq: -1.0, lin: 2.0, cst: -1.0 },
                ExtReal::finite(-1.0),
                ExtReal::finite(0.0),
                Direction::NonDecreasing,
            )
            .unwrap();
            let falsity = ScoreFn::single(
                SegmentForm::Quadratic { sq: -1.0, lin: 0.0, cst: 0.0 },
                ExtReal::finite(0.0),
                ExtReal::finite(-1.0),
                Direction::NonIncreasing,
            )
            .unwrap();
            ScoringRule {
                truth_score: truth,
                false_score: falsity,
                offset: -0.5,
                drop_at_one: 0.0,
                provenance: Provenance::Catalog,
            }
        }
        CatalogName::Spherical => {
            let radius = |x: f64| (x * x + (1.0 - x) * (1.0 - x)).sqrt();
            let truth = ScoreFn::single(
                SegmentForm::Opaque(OpaqueSeg::new(
                    std::sync::Arc::new(move |x| x / radius(x) - 1.0),
                    Some(Direction::NonDecreasing),
                    Extended::Finite(-1.0),
                    Extended::Finite(0.0),
                )),
                ExtReal::finite(-1.0),
                ExtReal::finite(0.0),
                Direction::NonDecreasing,
            )
            .unwrap();
            let falsity = ScoreFn::single(
                SegmentForm::Opaque(OpaqueSeg::new(
                    std::sync::Arc::new(move |x| (1.0 - x) / radius(x) - 1.0),
                    Some(Direction::NonIncreasing),
                    Extended::Finite(0.0),
                    Extended::Finite(-1.0),
                )),
                ExtReal::finite(0.0),
                ExtReal::finite(-1.0),
                Direction::NonIncreasing,
            )
            .unwrap();
            ScoringRule {
                truth_score: truth,
                false_score: falsity,
                offset: std::f64::consts::SQRT_2 - 2.0,
                drop_at_one: 0.0,
                provenance: Provenance::Catalog,
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Documents
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, thiserror::Error)]
pub enum CatalogError {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("value error: {0}")]
    Value(String),
}

/// Syntactic form of one segment formula in a document. Opaque segments
/// have no serial representation, so they never appear here.
#[derive(Debug, Clone, PartialEq)]
pub enum FormSpec {
    Constant(f64),
    Affine(f64, f64),
    LogForm(f64, f64, f64),
    Quadratic(f64, f64, f64),
    Mixed([f64; 7]),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegSpec {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
    pub form: FormSpec,
}

/// One function section of a document: segments, explicit endpoint values,
/// and an optional declared direction.
#[derive(Debug, Clone, PartialEq)]
pub struct FnSpec {
    pub segments: Vec<SegSpec>,
    pub at0: ExtReal,
    pub at1: ExtReal,
    pub direction: Direction,
}

/// A parsed rule-spec document. When `falsity` is absent, loading derives
/// it through the representation formula with `offset`/`drop` defaulting
/// to zero.
///
/// `name` and `notes` are single-line with token-separating whitespace
/// normalized to single spaces, so parse and serialize are mutually
/// inverse on canonical text.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleSpecDocument {
    pub name: String,
    pub truth: FnSpec,
    pub falsity: Option<FnSpec>,
    pub offset: Option<f64>,
    pub drop_at_one: Option<f64>,
    pub notes: String,
}

impl FormSpec {
    fn to_form(&self) -> SegmentForm {
        match *self {
            FormSpec::Constant(c) => SegmentForm::Constant(c),
            FormSpec::Affine(a, b) => SegmentForm::Affine { slope: a, intercept: b },
            FormSpec::LogForm(a, b, c) => SegmentForm::LogForm { log_u: a, log_omu: b, cst: c },
            FormSpec::Quadratic(a, b, c) => SegmentForm::Quadratic { sq: a, lin: b, cst: c },
            FormSpec::Mixed([sq, lin, cst, log_u, log_omu, inv_u, inv_omu]) => {
                SegmentForm::Mixed(MixedCoeffs { sq, lin, cst, log_u, log_omu, inv_u, inv_omu })
            }
        }
    }

    fn from_form(form: &SegmentForm) -> Result<FormSpec, CatalogError> {
        Ok(match form {
            SegmentForm::Constant(c) => FormSpec::Constant(*c),
            SegmentForm::Affine { slope, intercept } => FormSpec::Affine(*slope, *intercept),
            SegmentForm::LogForm { log_u, log_omu, cst } => {
                FormSpec::LogForm(*log_u, *log_omu, *cst)
            }
            SegmentForm::Quadratic { sq, lin, cst } => FormSpec::Quadratic(*sq, *lin, *cst),
            SegmentForm::Mixed(m) => FormSpec::Mixed([
                m.sq, m.lin, m.cst, m.log_u, m.log_omu, m.inv_u, m.inv_omu,
            ]),
            SegmentForm::Opaque(_) => {
                return Err(CatalogError::Schema(
                    "opaque segments have no serial representation".into(),
                ))
            }
        })
    }
}

impl FnSpec {
    /// Validated conversion to a score function; a declared direction that
    /// the segments contradict is a schema error.
    pub fn to_score_fn(&self) -> Result<ScoreFn, CatalogError> {
        let segments: Vec<Segment> = self
            .segments
            .iter()
            .map(|s| Segment::new(s.lo, s.hi, s.lo_closed, s.hi_closed, s.form.to_form()))
            .collect();
        ScoreFn::new(segments, self.at0, self.at1, self.direction)
            .map_err(|e| CatalogError::Schema(e.to_string()))
    }

    /// Syntactic image of a score function; fails on opaque segments.
    pub fn from_score_fn(f: &ScoreFn) -> Result<FnSpec, CatalogError> {
        let segments = f
            .segments()
            .iter()
            .map(|s| {
                Ok(SegSpec {
                    lo: s.lo,
                    hi: s.hi,
                    lo_closed: s.lo_closed,
                    hi_closed: s.hi_closed,
                    form: FormSpec::from_form(&s.form)?,
                })
            })
            .collect::<Result<Vec<_>, CatalogError>>()?;
        Ok(FnSpec {
            segments,
            at0: f.value_at_0(),
            at1: f.value_at_1(),
            direction: f.direction(),
        })
    }
}

impl RuleSpecDocument {
    /// Builds the executable rule: validates both components and derives
    /// the false-score when the document omits it.
    pub fn load(&self) -> Result<ScoringRule, CatalogError> {
        let offset = self.offset.unwrap_or(0.0);
        let drop = self.drop_at_one.unwrap_or(0.0);
        if drop < 0.0 {
            return Err(CatalogError::Value(format!("c must be >= 0, got {drop}")));
        }
        let truth = self.truth.to_score_fn()?;
        match &self.falsity {
            Some(fspec) => {
                let falsity = fspec.to_score_fn()?;
                Ok(ScoringRule {
                    truth_score: truth,
                    false_score: falsity,
                    offset,
                    drop_at_one: drop,
                    provenance: Provenance::UserSupplied,
                })
            }
            None => derive_false_score(&truth, offset, drop)
                .map_err(|e| CatalogError::Schema(e.to_string())),
        }
    }

    /// Document form of a rule; fails when a component carries opaque
    /// segments.
    pub fn from_rule(rule: &ScoringRule, name: &str, notes: &str) -> Result<Self, CatalogError> {
        Ok(RuleSpecDocument {
            name: name.to_string(),
            truth: FnSpec::from_score_fn(&rule.truth_score)?,
            falsity: Some(FnSpec::from_score_fn(&rule.false_score)?),
            offset: Some(rule.offset),
            drop_at_one: Some(rule.drop_at_one),
            notes: notes.to_string(),
        })
    }
}

// ---------------------------------------------------------------------------
// Parse / serialize
// ---------------------------------------------------------------------------

fn fmt_num(v: f64) -> String {
    // Shortest decimal that round-trips to the same bits; never more than
    // 17 significant digits.
    format!("{v}")
}

fn fmt_ext(v: ExtReal) -> String {
    match v {
        ExtReal::NegInf => "-inf".to_string(),
        ExtReal::Finite(x) => fmt_num(x),
    }
}

/// Canonical text of a document: fixed section order, one directive per
/// line, numbers in shortest round-trip decimal. `parse` of the output
/// reproduces the document field-for-field, and serializing a parsed
/// canonical file reproduces it byte-for-byte.
pub fn serialize_rule_spec(doc: &RuleSpecDocument) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "rule {}", doc.name);
    write_fn_spec(&mut out, "T", &doc.truth);
    if let Some(f) = &doc.falsity {
        write_fn_spec(&mut out, "F", f);
    }
    if let Some(c) = doc.offset {
        let _ = writeln!(out, "C {}", fmt_num(c));
    }
    if let Some(c) = doc.drop_at_one {
        let _ = writeln!(out, "c {}", fmt_num(c));
    }
    if !doc.notes.is_empty() {
        let _ = writeln!(out, "notes {}", doc.notes);
    }
    out
}

fn write_fn_spec(out: &mut String, header: &str, f: &FnSpec) {
    match f.direction {
        Direction::NonDecreasing => {
            let _ = writeln!(out, "{header} nondecreasing");
        }
        Direction::NonIncreasing => {
            let _ = writeln!(out, "{header} nonincreasing");
        }
        Direction::Unconstrained => {
            let _ = writeln!(out, "{header}");
        }
    }
    for s in &f.segments {
        let closure = |b: bool| if b { "1" } else { "0" };
        let form = match &s.form {
            FormSpec::Constant(c) => format!("constant {}", fmt_num(*c)),
            FormSpec::Affine(a, b) => format!("affine {} {}", fmt_num(*a), fmt_num(*b)),
            FormSpec::LogForm(a, b, c) => {
                format!("logform {} {} {}", fmt_num(*a), fmt_num(*b), fmt_num(*c))
            }
            FormSpec::Quadratic(a, b, c) => {
                format!("quadratic {} {} {}", fmt_num(*a), fmt_num(*b), fmt_num(*c))
            }
            FormSpec::Mixed(p) => {
                let body: Vec<String> = p.iter().map(|v| fmt_num(*v)).collect();
                format!("mixed {}", body.join(" "))
            }
        };
        let _ = writeln!(
            out,
            "segment {} {} {} {} {form}",
            fmt_num(s.lo),
            fmt_num(s.hi),
            closure(s.lo_closed),
            closure(s.hi_closed),
        );
    }
    let _ = writeln!(out, "at0 {}", fmt_ext(f.at0));
    let _ = writeln!(out, "at1 {}", fmt_ext(f.at1));
}

struct SectionAcc {
    segments: Vec<SegSpec>,
    at0: Option<ExtReal>,
    at1: Option<ExtReal>,
    direction: Direction,
    start_line: usize,
}

/// Parses a rule-spec document, validating the schema: both sections must
/// describe monotone functions of the right direction, and `c` must be
/// non-negative.
pub fn parse_rule_spec(text: &str) -> Result<RuleSpecDocument, CatalogError> {
    let mut name: Option<String> = None;
    let mut sections: Vec<(char, SectionAcc)> = Vec::new();
    let mut offset: Option<f64> = None;
    let mut drop: Option<f64> = None;
    let mut notes = String::new();

    let err = |line: usize, msg: String| CatalogError::Parse { line, msg };
    let num = |line: usize, tok: &str| -> Result<f64, CatalogError> {
        let v: f64 = tok
            .parse()
            .map_err(|_| err(line, format!("expected a number, got {tok:?}")))?;
        if !v.is_finite() {
            return Err(err(line, format!("non-finite number {tok:?}")));
        }
        Ok(v)
    };
    let ext = |line: usize, tok: &str| -> Result<ExtReal, CatalogError> {
        if tok == "-inf" {
            Ok(ExtReal::NegInf)
        } else {
            Ok(ExtReal::Finite(num(line, tok)?))
        }
    };

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        let mut tokens = trimmed.split_whitespace();
        let keyword = tokens.next().unwrap();
        match keyword {
            "rule" => {
                let n: Vec<&str> = tokens.collect();
                if n.is_empty() {
                    return Err(err(line, "rule needs a name".into()));
                }
                if name.replace(n.join(" ")).is_some() {
                    return Err(err(line, "duplicate rule line".into()));
                }
            }
            "T" | "F" => {
                let tag = keyword.chars().next().unwrap();
                if sections.iter().any(|(t, _)| *t == tag) {
                    return Err(err(line, format!("duplicate section {keyword}")));
                }
                let direction = match tokens.next() {
                    None => Direction::Unconstrained,
                    Some("nondecreasing") => Direction::NonDecreasing,
                    Some("nonincreasing") => Direction::NonIncreasing,
                    Some("unconstrained") => Direction::Unconstrained,
                    Some(other) => {
                        return Err(err(line, format!("unknown direction {other:?}")))
                    }
                };
                sections.push((
                    tag,
                    SectionAcc {
                        segments: Vec::new(),
                        at0: None,
                        at1: None,
                        direction,
                        start_line: line,
                    },
                ));
            }
            "segment" => {
                let sec = sections
                    .last_mut()
                    .ok_or_else(|| err(line, "segment before any T/F section".into()))?;
                let mut next =
                    |what: &str| -> Result<&str, CatalogError> {
                        tokens.next().ok_or_else(|| err(line, format!("missing {what}")))
                    };
                let lo = num(line, next("lo")?)?;
                let hi = num(line, next("hi")?)?;
                let parse_closed = |tok: &str| match tok {
                    "0" => Ok(false),
                    "1" => Ok(true),
                    other => Err(err(line, format!("closure flag must be 0 or 1, got {other:?}"))),
                };
                let lo_closed = parse_closed(next("lo_closed")?)?;
                let hi_closed = parse_closed(next("hi_closed")?)?;
                let form_name = next("form")?.to_string();
                let params: Vec<f64> = tokens
                    .map(|t| num(line, t))
                    .collect::<Result<Vec<_>, _>>()?;
                let arity = |n: usize| -> Result<(), CatalogError> {
                    if params.len() == n {
                        Ok(())
                    } else {
                        Err(err(
                            line,
                            format!("form {form_name} takes {n} parameters, got {}", params.len()),
                        ))
                    }
                };
                let form = match form_name.as_str() {
                    "constant" => {
                        arity(1)?;
                        FormSpec::Constant(params[0])
                    }
                    "affine" => {
                        arity(2)?;
                        FormSpec::Affine(params[0], params[1])
                    }
                    "logform" => {
                        arity(3)?;
                        FormSpec::LogForm(params[0], params[1], params[2])
                    }
                    "quadratic" => {
                        arity(3)?;
                        FormSpec::Quadratic(params[0], params[1], params[2])
                    }
                    "mixed" => {
                        arity(7)?;
                        let mut p = [0.0; 7];
                        p.copy_from_slice(&params);
                        FormSpec::Mixed(p)
                    }
                    other => return Err(err(line, format!("unknown form {other:?}"))),
                };
                sec.1.segments.push(SegSpec { lo, hi, lo_closed, hi_closed, form });
            }
            "at0" | "at1" => {
                let sec = sections
                    .last_mut()
                    .ok_or_else(|| err(line, format!("{keyword} before any T/F section")))?;
                let tok = tokens
                    .next()
                    .ok_or_else(|| err(line, format!("{keyword} needs a value")))?;
                let v = ext(line, tok)?;
                let slot = if keyword == "at0" { &mut sec.1.at0 } else { &mut sec.1.at1 };
                if slot.replace(v).is_some() {
                    return Err(err(line, format!("duplicate {keyword}")));
                }
            }
            "C" => {
                let tok = tokens.next().ok_or_else(|| err(line, "C needs a value".into()))?;
                if offset.replace(num(line, tok)?).is_some() {
                    return Err(err(line, "duplicate C".into()));
                }
            }
            "c" => {
                let tok = tokens.next().ok_or_else(|| err(line, "c needs a value".into()))?;
                let v = num(line, tok)?;
                if v < 0.0 {
                    return Err(CatalogError::Value(format!("c must be >= 0, got {v}")));
                }
                if drop.replace(v).is_some() {
                    return Err(err(line, "duplicate c".into()));
                }
            }
            "notes" => {
                let rest = trimmed.strip_prefix("notes").unwrap().trim_start();
                notes = rest.to_string();
            }
            other => return Err(err(line, format!("unknown directive {other:?}"))),
        }
    }

    let name = name.ok_or_else(|| err(1, "missing rule line".into()))?;
    let mut truth: Option<FnSpec> = None;
    let mut falsity: Option<FnSpec> = None;
    for (tag, acc) in sections {
        let fspec = FnSpec {
            segments: acc.segments,
            at0: acc.at0.ok_or_else(|| err(acc.start_line, format!("section {tag} missing at0")))?,
            at1: acc.at1.ok_or_else(|| err(acc.start_line, format!("section {tag} missing at1")))?,
            direction: acc.direction,
        };
        if fspec.segments.is_empty() {
            return Err(err(acc.start_line, format!("section {tag} has no segments")));
        }
        match tag {
            'T' => truth = Some(fspec),
            _ => falsity = Some(fspec),
        }
    }
    let truth = truth.ok_or_else(|| err(1, "missing T section".into()))?;

    let doc = RuleSpecDocument { name, truth, falsity, offset, drop_at_one: drop, notes };
    // Schema validation: partitions must be clean and any declared
    // direction must actually hold.
    doc.truth.to_score_fn()?;
    if let Some(f) = &doc.falsity {
        f.to_score_fn()?;
    }
    Ok(doc)
}
