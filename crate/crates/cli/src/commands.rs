//! The subcommands. Each fills in a [`Report`] and returns its exit status.

use serde_json::{json, Value};
use thiserror::Error;

use odeq::equiv::{contact_equivalent, point_equivalent_on, signature_at, EquivError, MatchConfig, Verdict};
use odeq::expr::{eval_num, is_identically_zero, parse, zero_test, ParseError, SampleBox, ZeroTestConfig, ZeroTestError, ABC, XYP};
use odeq::jet::{JetError, Jets, Ode2, BARRED_NAMES};
use odeq::quad::{char_field, dual_pair, verify_closed_form, verify_integrals, AssocOde, Classification, Integrals, QuadError, QuadOde};

use crate::report::{Exit, Outcome, Report};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Undecided(String),
}

impl CliError {
    pub fn exit(&self) -> Exit {
        match self {
            CliError::Input(_) => Exit::Input,
            CliError::Undecided(_) => Exit::Inconclusive,
        }
    }
}

fn input(what: &str, e: impl std::fmt::Display) -> CliError {
    CliError::Input(format!("{what}: {e}"))
}

impl From<ParseError> for CliError {
    fn from(e: ParseError) -> Self {
        input("parse error", e)
    }
}

impl From<ZeroTestError> for CliError {
    fn from(e: ZeroTestError) -> Self {
        match e {
            ZeroTestError::InvalidConfig(_) => input("bad configuration", e),
            other => CliError::Undecided(other.to_string()),
        }
    }
}

impl From<JetError> for CliError {
    fn from(e: JetError) -> Self {
        match e {
            JetError::Parse(p) => p.into(),
            JetError::ForeignVariable(_) => input("bad input", e),
            JetError::ZeroTest(z) => z.into(),
            other => CliError::Undecided(other.to_string()),
        }
    }
}

impl From<QuadError> for CliError {
    fn from(e: QuadError) -> Self {
        match e {
            QuadError::Parse(p) => p.into(),
            QuadError::ZeroTest(z) => z.into(),
            QuadError::Jet(j) => j.into(),
            QuadError::ForeignVariable(_) | QuadError::BadIntegrals(_) | QuadError::NotHyperbolic(_) | QuadError::WrongRole => input("bad input", e),
            other => CliError::Undecided(other.to_string()),
        }
    }
}

impl From<EquivError> for CliError {
    fn from(e: EquivError) -> Self {
        match e {
            EquivError::Quad(q) => q.into(),
            EquivError::Jet(j) => j.into(),
            EquivError::ZeroTest(z) => z.into(),
            other => CliError::Undecided(other.to_string()),
        }
    }
}

/// Options shared by every subcommand.
#[derive(Debug, Clone)]
pub struct Settings {
    pub seed: u64,
    pub trials: usize,
    pub tol: f64,
    pub sample_box: SampleBox,
}

impl Settings {
    pub fn zero(&self) -> ZeroTestConfig {
        ZeroTestConfig { trials: self.trials, tolerance: self.tol, seed: self.seed, sample_box: self.sample_box.clone(), ..ZeroTestConfig::default() }
    }

    pub fn matching(&self) -> MatchConfig {
        MatchConfig { sample_box: self.sample_box.clone(), seed: self.seed, trials: self.trials, zero_tol: self.tol, ..MatchConfig::default() }
    }
}

/// `x:-1..1,y:0..2` over the default box; unnamed variables keep theirs.
pub fn parse_box(spec: &str) -> Result<SampleBox, CliError> {
    let mut b = SampleBox::default();
    for part in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let bad = || CliError::Input(format!("bad box entry `{part}`, expected var:lo..hi"));
        let (var, range) = part.split_once(':').ok_or_else(bad)?;
        let (lo, hi) = range.split_once("..").ok_or_else(bad)?;
        let (lo, hi) = (lo.trim().parse::<f64>().map_err(|_| bad())?, hi.trim().parse::<f64>().map_err(|_| bad())?);
        let var = var.trim();
        if !XYP.contains(&var) && !ABC.contains(&var) {
            return Err(CliError::Input(format!("box variable `{var}` is not one of x, y, p, a, b, c")));
        }
        b.set(var, lo, hi);
    }
    b.validate()?;
    Ok(b)
}

pub fn parse_point(spec: &str) -> Result<[f64; 3], CliError> {
    let v: Vec<f64> = spec.split(',').map(|s| s.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|e| input("bad point", e))?;
    v.try_into().map_err(|_| CliError::Input("a point needs three values x,y,p".into()))
}

fn integrals(list: &[String]) -> Result<Integrals, CliError> {
    match list {
        [a, b, f, g] => Ok(Integrals::parse(a, b, f, g)?),
        _ => Err(CliError::Input(format!("expected four integrals a,b,f,g, got {}", list.len()))),
    }
}

fn finish(report: &mut Report, kind: &'static str, payload: Value, exit: Exit) -> Exit {
    report.result = Outcome { kind, payload };
    exit
}

pub fn classify(report: &mut Report, a: &str, b: &str, s: &Settings) -> Result<Exit, CliError> {
    let q = QuadOde::parse(a, b)?;
    let cfg = s.zero();
    let class = q.classify(&cfg)?;
    let mut payload = json!({ "classification": class, "discriminant": q.discriminant().to_string() });
    if class == Classification::Hyperbolic {
        let (l1, l2) = q.factor_roots(&cfg)?;
        payload["roots"] = json!([l1.to_string(), l2.to_string()]);
    }
    Ok(finish(report, "classification", payload, Exit::Ok))
}

pub fn invariants(report: &mut Report, f: &str, at: Option<[f64; 3]>, barred: bool, s: &Settings) -> Result<Exit, CliError> {
    let ode = Ode2::parse(f)?;
    let jets = Jets::of(&ode);
    let (i, h) = (jets.i().value, jets.h().value);
    let cfg = s.zero();
    let i_zero = is_identically_zero(&i, &cfg)?;
    let h_zero = is_identically_zero(&h, &cfg)?;
    let mut payload = json!({ "I": i.to_string(), "H": h.to_string(), "generic": !(i_zero || h_zero) });
    if let Some(pt) = at {
        let bind = [("x", pt[0]), ("y", pt[1]), ("p", pt[2])];
        let value = |e| eval_num(e, &bind).map_err(|err| CliError::Undecided(format!("cannot evaluate at {pt:?}: {err}")));
        payload["at"] = json!(pt);
        payload["values"] = json!({ "I": value(&i)?, "H": value(&h)? });
    }
    if i_zero || h_zero {
        let which = if i_zero { "I" } else { "H" };
        payload["notice"] = json!(format!("non-generic: {which} vanishes identically"));
        return Ok(finish(report, "non-generic", payload, Exit::Inconclusive));
    }
    if barred {
        let pt = at.ok_or_else(|| CliError::Input("--barred needs --at".into()))?;
        match signature_at(&ode, pt) {
            Ok(sig) => {
                let values = sig.coords.iter().chain(&sig.derived);
                payload["barred"] = Value::Object(BARRED_NAMES.iter().zip(values).map(|(n, v)| (n.to_string(), json!(v))).collect());
            }
            Err(e) => {
                payload["notice"] = json!(format!("barred invariants undefined at this point (plain powers of I and H): {e}"));
                return Ok(finish(report, "undefined", payload, Exit::Inconclusive));
            }
        }
    }
    Ok(finish(report, "invariants", payload, Exit::Ok))
}

fn describe(assoc: &AssocOde) -> Value {
    json!({ "order": assoc.order, "c": assoc.chart.c.to_string(), "G": assoc.g.to_string() })
}

pub fn associated(report: &mut Report, a: &str, b: &str, ints: &[String], ghat: Option<&str>, swap: bool, s: &Settings) -> Result<Exit, CliError> {
    let q = QuadOde::parse(a, b)?;
    let mut ints = integrals(ints)?;
    if swap {
        ints = ints.swapped();
    }
    let cfg = s.zero();
    let (first, second) = dual_pair(&q, &ints, &cfg)?;
    let mut payload = json!({ "first": describe(&first), "second": describe(&second) });
    let mut exit = Exit::Ok;
    if let Some(src) = ghat {
        let g = parse(src, ABC)?;
        let certified = verify_closed_form(&first, &g, &cfg)?;
        let residual = zero_test(&(&first.g - first.chart.pull_back(&g)), &cfg)?;
        payload["ghat"] = json!({ "expr": g.to_string(), "certified": certified });
        report.certificates.push(json!({ "closed_form": g.to_string(), "zero_test": residual }));
        if !certified {
            exit = Exit::Negative;
        }
    }
    Ok(finish(report, "associated", payload, exit))
}

pub fn verify(report: &mut Report, root: &str, u: &str, v: &str, s: &Settings) -> Result<Exit, CliError> {
    let lambda = parse(root, XYP)?;
    let (u, v) = (parse(u, XYP)?, parse(v, XYP)?);
    let field = char_field(&lambda);
    let cfg = s.zero();
    let ok = verify_integrals(&field, &u, &v, &cfg)?;
    for e in [&u, &v] {
        report.certificates.push(json!({ "integral": e.to_string(), "zero_test": zero_test(&field.apply(e), &cfg)? }));
    }
    let exit = if ok { Exit::Ok } else { Exit::Negative };
    Ok(finish(report, "integrals", json!({ "verified": ok }), exit))
}

/// Matched pairs go to the certificates; the payload keeps their number.
fn count_matches(v: &mut Value) {
    match v {
        Value::Object(map) => {
            for (k, item) in map.iter_mut() {
                match item {
                    Value::Array(list) if k == "matched" => *item = json!(list.len()),
                    _ => count_matches(item),
                }
            }
        }
        Value::Array(list) => list.iter_mut().for_each(count_matches),
        _ => {}
    }
}

fn verdict(report: &mut Report, v: &Verdict, legs: Option<Value>) -> Exit {
    match v {
        Verdict::Equivalent { certificate } => report.certificates.extend(certificate.matched.iter().map(|m| json!(m))),
        Verdict::NotEquivalent { witness } => report.certificates.push(json!(witness)),
        Verdict::Inconclusive { .. } => {}
    }
    let mut payload = json!(v);
    if let Some(legs) = legs {
        payload["legs"] = legs;
    }
    count_matches(&mut payload);
    let exit = match v.exit_code() {
        0 => Exit::Ok,
        1 => Exit::Negative,
        _ => Exit::Inconclusive,
    };
    finish(report, "verdict", payload, exit)
}

pub fn equiv_point(report: &mut Report, f1: &str, f2: &str, box2: Option<&SampleBox>, s: &Settings) -> Result<Exit, CliError> {
    let (e1, e2) = (Ode2::parse(f1)?, Ode2::parse(f2)?);
    let cfg = s.matching();
    let v = point_equivalent_on(&e1, &cfg.sample_box, &e2, box2.unwrap_or(&cfg.sample_box), &cfg)?;
    Ok(verdict(report, &v, None))
}

pub struct QuadInput<'a> {
    pub a: &'a str,
    pub b: &'a str,
    pub ints: &'a [String],
}

pub fn equiv_contact(report: &mut Report, first: QuadInput, second: QuadInput, box2: Option<&SampleBox>, s: &Settings) -> Result<Exit, CliError> {
    let (q1, q2) = (QuadOde::parse(first.a, first.b)?, QuadOde::parse(second.a, second.b)?);
    let (i1, i2) = (integrals(first.ints)?, integrals(second.ints)?);
    let cfg = s.matching();
    let cv = contact_equivalent(&q1, &i1, &cfg.sample_box, &q2, &i2, box2.unwrap_or(&cfg.sample_box), &cfg)?;
    let legs: Vec<Value> = cv.legs.iter().map(|l| json!({ "first": l.first + 1, "second": l.second + 1, "verdict": l.verdict })).collect();
    Ok(verdict(report, &cv.verdict, Some(Value::Array(legs))))
}
