//! Corpus files: a structured key/value text format for identity entries,
//! and the runner that proves, verifies or numerically checks each entry
//! (optionally replaying a recorded derivation and comparing its output
//! against an expected target).
//!
//! Format, one block per entry:
//!
//! ```text
//! [entry]
//! id = fibonacci.double_angle
//! source = sec2.remark
//! tags = prove, derive
//! families = F, L
//! identity = F[2k] = L[k]*F[k]
//! derive = wrt=k component=real
//! expect = 2*L[2k] = L[k]^2 + 5*F[k]^2
//! ```
//!
//! Optional fields: p, q (defaults 1, -1), samples (parameter sweeps:
//! "p=2 q=-1; p=3 q=-2"), constraints ("m even; n >= 0"), grid
//! ("k=-5..5,n=0..4"), precision (digits for numeric entries), shift,
//! combine and pivot for derivations. Tags select the checking mode: prove,
//! verify, numeric; derive adds a derivation replay; sigma marks entries in
//! tau/sigma power form (skipped by differentiation-based meta tests).

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{Constraint, Identity};
use crate::family::{FamilyEnv, FamilyRole};
use crate::parser::{parse_identity, parse_subscript};
use crate::pipeline::{check_identity, run_derive, ComponentKind, DeriveConfig, Verdict};
use crate::rational::{parse_rational, rat, Rational};
use crate::verify::Grid;

#[derive(Clone, Debug)]
pub struct CorpusEntry {
    pub id: String,
    pub source: String,
    pub tags: Vec<String>,
    pub families: Vec<(String, FamilyRole)>,
    pub p: Rational,
    pub q: Rational,
    pub samples: Vec<(Rational, Rational)>,
    pub constraints: Vec<Constraint>,
    pub identity: String,
    pub grid: Option<String>,
    pub precision: u32,
    pub derive: Option<DeriveSpec>,
    pub file: String,
}

#[derive(Clone, Debug)]
pub struct DeriveSpec {
    pub wrt: String,
    pub component: ComponentKind,
    pub shift: Option<String>,
    pub pivot: Option<String>,
    pub combine: Option<String>,
    pub expect: Option<String>,
}

impl CorpusEntry {
    pub fn has_tag(&self, tag: &str) -> bool {
        self.tags.iter().any(|t| t == tag)
    }

    /// The checking mode: prove, verify or numeric.
    pub fn mode(&self) -> &str {
        for t in ["prove", "verify", "numeric"] {
            if self.has_tag(t) {
                return t;
            }
        }
        "prove"
    }

    pub fn build_env(&self, p: &Rational, q: &Rational) -> Result<FamilyEnv> {
        let mut env = FamilyEnv::new(p.clone(), q.clone())?;
        for (name, role) in &self.families {
            env.declare(name, *role)?;
        }
        Ok(env)
    }

    pub fn parameter_sets(&self) -> Vec<(Rational, Rational)> {
        if self.samples.is_empty() {
            vec![(self.p.clone(), self.q.clone())]
        } else {
            self.samples.clone()
        }
    }
}

fn parse_families(s: &str) -> Result<Vec<(String, FamilyRole)>> {
    let mut out = Vec::new();
    for part in s.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let (name, role) = match part.split_once('=') {
            Some((n, r)) => {
                let role = FamilyRole::parse(r.trim())
                    .ok_or_else(|| Error::Config(format!("unknown family role '{r}'")))?;
                (n.trim().to_string(), role)
            }
            None => {
                let name = part.to_string();
                let role = match name.as_str() {
                    "F" => FamilyRole::Fibonacci,
                    "L" => FamilyRole::Lucas,
                    "U" => FamilyRole::LucasU,
                    "V" => FamilyRole::LucasV,
                    "W" | "Z" => FamilyRole::Horadam,
                    _ => FamilyRole::Gibonacci,
                };
                (name, role)
            }
        };
        out.push((name, role));
    }
    Ok(out)
}

fn parse_samples(s: &str) -> Result<Vec<(Rational, Rational)>> {
    let mut out = Vec::new();
    for group in s.split(';') {
        let group = group.trim();
        if group.is_empty() {
            continue;
        }
        let mut p = None;
        let mut q = None;
        for kv in group.split_whitespace() {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("bad sample component '{kv}'")))?;
            let val = parse_rational(v).ok_or_else(|| Error::Config(format!("bad rational '{v}'")))?;
            match k {
                "p" => p = Some(val),
                "q" => q = Some(val),
                other => return Err(Error::Config(format!("unknown sample key '{other}'"))),
            }
        }
        out.push((
            p.ok_or_else(|| Error::Config("sample missing p".into()))?,
            q.ok_or_else(|| Error::Config("sample missing q".into()))?,
        ));
    }
    Ok(out)
}

fn parse_derive(s: &str) -> Result<DeriveSpec> {
    let mut wrt = None;
    let mut component = None;
    let mut shift = None;
    let mut pivot = None;
    let mut combine = None;
    for kv in s.split_whitespace() {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("bad derive component '{kv}'")))?;
        match k {
            "wrt" => wrt = Some(v.to_string()),
            "component" => {
                component = Some(match v {
                    "real" => ComponentKind::Real,
                    "imag" => ComponentKind::Imag,
                    other => return Err(Error::Config(format!("unknown component '{other}'"))),
                })
            }
            "shift" => shift = Some(v.to_string()),
            "pivot" => pivot = Some(v.to_string()),
            "combine" => combine = Some(v.to_string()),
            other => return Err(Error::Config(format!("unknown derive key '{other}'"))),
        }
    }
    Ok(DeriveSpec {
        wrt: wrt.ok_or_else(|| Error::Config("derive missing wrt".into()))?,
        component: component.ok_or_else(|| Error::Config("derive missing component".into()))?,
        shift,
        pivot,
        combine,
        expect: None,
    })
}

pub fn parse_corpus_text(text: &str, file: &str) -> Result<Vec<CorpusEntry>> {
    let mut entries = Vec::new();
    let mut current: Option<CorpusEntry> = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if line == "[entry]" {
            if let Some(e) = current.take() {
                entries.push(e);
            }
            current = Some(CorpusEntry {
                id: String::new(),
                source: String::new(),
                tags: Vec::new(),
                families: Vec::new(),
                p: rat(1),
                q: rat(-1),
                samples: Vec::new(),
                constraints: Vec::new(),
                identity: String::new(),
                grid: None,
                precision: 30,
                derive: None,
                file: file.to_string(),
            });
            continue;
        }
        let entry = current.as_mut().ok_or_else(|| Error::Corpus {
            file: file.to_string(),
            msg: format!("line {}: field outside an [entry] block", lineno + 1),
        })?;
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Corpus {
            file: file.to_string(),
            msg: format!("line {}: expected key = value", lineno + 1),
        })?;
        let key = key.trim();
        let value = value.trim();
        let fail = |msg: String| Error::Corpus { file: file.to_string(), msg };
        match key {
            "id" => entry.id = value.to_string(),
            "source" => entry.source = value.to_string(),
            "tags" => entry.tags = value.split(',').map(|t| t.trim().to_string()).collect(),
            "families" => entry.families = parse_families(value).map_err(|e| fail(e.to_string()))?,
            "p" => entry.p = parse_rational(value).ok_or_else(|| fail(format!("bad p '{value}'")))?,
            "q" => entry.q = parse_rational(value).ok_or_else(|| fail(format!("bad q '{value}'")))?,
            "samples" => entry.samples = parse_samples(value).map_err(|e| fail(e.to_string()))?,
            "constraints" => {
                entry.constraints = value
                    .split(';')
                    .filter(|s| !s.trim().is_empty())
                    .map(Constraint::parse)
                    .collect::<Result<Vec<_>>>()
                    .map_err(|e| fail(e.to_string()))?;
            }
            // the identity line contains '='; rejoin it
            "identity" => entry.identity = raw.trim().strip_prefix("identity").unwrap().trim().strip_prefix('=').unwrap().trim().to_string(),
            "expect" => {
                let text = raw.trim().strip_prefix("expect").unwrap().trim().strip_prefix('=').unwrap().trim();
                match &mut entry.derive {
                    Some(d) => d.expect = Some(text.to_string()),
                    None => return Err(fail("expect before derive".into())),
                }
            }
            "derive" => entry.derive = Some(parse_derive(value).map_err(|e| fail(e.to_string()))?),
            "grid" => entry.grid = Some(value.to_string()),
            "precision" => {
                entry.precision = value.parse().map_err(|_| fail(format!("bad precision '{value}'")))?
            }
            other => return Err(fail(format!("unknown field '{other}'"))),
        }
    }
    if let Some(e) = current.take() {
        entries.push(e);
    }
    for e in &entries {
        if e.id.is_empty() || e.identity.is_empty() {
            return Err(Error::Corpus {
                file: file.to_string(),
                msg: "entry missing id or identity".into(),
            });
        }
    }
    Ok(entries)
}

pub fn load_corpus_dir(dir: &Path) -> Result<Vec<CorpusEntry>> {
    let mut entries = Vec::new();
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| Error::Corpus { file: dir.display().to_string(), msg: e.to_string() })?
        .filter_map(|d| d.ok().map(|d| d.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "idc"))
        .collect();
    files.sort();
    for f in files {
        let text = std::fs::read_to_string(&f)
            .map_err(|e| Error::Corpus { file: f.display().to_string(), msg: e.to_string() })?;
        let name = f.file_name().unwrap().to_string_lossy().to_string();
        entries.extend(parse_corpus_text(&text, &name)?);
    }
    let mut seen = std::collections::BTreeSet::new();
    for e in &entries {
        if !seen.insert(e.id.clone()) {
            return Err(Error::Corpus { file: e.file.clone(), msg: format!("duplicate id '{}'", e.id) });
        }
    }
    entries.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(entries)
}

#[derive(Clone, Debug, Serialize)]
pub struct EntryReport {
    pub id: String,
    pub source: String,
    pub mode: String,
    pub status: String,
    pub detail: Vec<String>,
    pub elapsed_ms: u128,
}

impl EntryReport {
    pub fn passed(&self) -> bool {
        self.status == "pass"
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CorpusReport {
    pub entries: Vec<EntryReport>,
    pub pass: usize,
    pub fail: usize,
    pub elapsed_ms: u128,
}

/// Runs one entry across its parameter sets. Degenerate parameter samples
/// (square discriminant) are noted and skipped rather than failed.
pub fn run_entry(entry: &CorpusEntry) -> EntryReport {
    let start = Instant::now();
    let mut detail = Vec::new();
    let mut ok = true;
    for (p, q) in entry.parameter_sets() {
        let label = format!("p={p}, q={q}");
        let env = match entry.build_env(&p, &q) {
            Ok(env) => env,
            Err(Error::DegenerateDiscriminant(d)) => {
                detail.push(format!("[{label}] skipped: discriminant {d} is degenerate"));
                continue;
            }
            Err(e) => {
                detail.push(format!("[{label}] environment error: {e}"));
                ok = false;
                continue;
            }
        };
        match run_entry_in_env(entry, &env) {
            Ok(mut lines) => detail.append(&mut lines),
            Err(e) => {
                detail.push(format!("[{label}] {e}"));
                ok = false;
            }
        }
    }
    // every run must have produced a positive line
    if detail.iter().any(|l| l.contains("FAIL")) {
        ok = false;
    }
    EntryReport {
        id: entry.id.clone(),
        source: entry.source.clone(),
        mode: entry.mode().to_string(),
        status: if ok { "pass" } else { "fail" }.to_string(),
        detail,
        elapsed_ms: start.elapsed().as_millis(),
    }
}

fn run_entry_in_env(entry: &CorpusEntry, env: &FamilyEnv) -> Result<Vec<String>> {
    let mut lines = Vec::new();
    let label = format!("p={}, q={}", env.p(), env.q());
    let id = parse_identity(&entry.identity, env)?.with_constraints(entry.constraints.clone());
    let grid = match &entry.grid {
        Some(g) => Some(Grid::parse(g)?),
        None => None,
    };
    // route by mode tag, bypassing auto-dispatch so tags stay data
    let verdict = match entry.mode() {
        "verify" => {
            let default_grid = Grid::default_for(&id);
            let g = grid.clone().unwrap_or(default_grid);
            let r = crate::verify::verify_instances(&id, &g, env)?;
            if r.all_pass() {
                Verdict::Verified { points: r.points, pass: r.pass, skipped: r.skipped }
            } else {
                Verdict::Falsified {
                    points: r.points,
                    fail: r.fail,
                    counterexample: r
                        .first_counterexample
                        .map(|c| format!("{:?}", c.assignment))
                        .unwrap_or_default(),
                }
            }
        }
        "numeric" => {
            let default_grid = Grid::default_for(&id);
            let g = grid.clone().unwrap_or(default_grid);
            let r = crate::numeric::numeric_verify(&id, entry.precision, &g, env)?;
            if r.all_pass() {
                Verdict::NumericPass { points: r.points, digits: entry.precision }
            } else {
                Verdict::NumericFail {
                    points: r.points,
                    fail: r.fail,
                    mismatch: r.first_mismatch.map(|m| format!("{:?}", m.assignment)).unwrap_or_default(),
                }
            }
        }
        _ => check_identity(&id, grid.as_ref(), entry.precision, env)?,
    };
    let status = if verdict.is_positive() { "ok" } else { "FAIL" };
    lines.push(format!("[{label}] {}: {status}: {}", entry.mode(), verdict.describe()));
    if !verdict.is_positive() {
        return Ok(lines);
    }
    if let Some(dspec) = &entry.derive {
        let mut denv = env.clone();
        let pivot = match &dspec.pivot {
            Some(text) => Some(parse_subscript(text, env)?),
            None => None,
        };
        let cfg = DeriveConfig {
            wrt: dspec.wrt.clone(),
            component: dspec.component,
            shift: dspec.shift.clone(),
            pivot,
            combine: dspec.combine.clone(),
            heavy_simplify: false,
        };
        let out = run_derive(&id, &cfg, &mut denv, grid.as_ref(), entry.precision)?;
        let dstatus = if out.verdict.is_positive() { "ok" } else { "FAIL" };
        lines.push(format!(
            "[{label}] derive d/d{} {:?} -> {}: {dstatus}: {}",
            dspec.wrt,
            dspec.component,
            out.output,
            out.verdict.describe()
        ));
        if let Some(expect_text) = &dspec.expect {
            let expect = parse_identity(expect_text, &denv)?.with_constraints(entry.constraints.clone());
            // equivalence: lhs_out - rhs_out = lhs_exp - rhs_exp, decided by
            // the same prove/verify machinery
            let eq = Identity::with_provenance(
                out.identity.difference(),
                expect.difference(),
                format!("{}.expect", entry.id),
            )
            .with_constraints(entry.constraints.clone());
            let v = check_identity(&eq, grid.as_ref(), entry.precision, &denv)?;
            let estatus = if v.is_positive() { "ok" } else { "FAIL" };
            lines.push(format!(
                "[{label}] derived output matches expected target: {estatus}: {}",
                v.describe()
            ));
        }
    }
    Ok(lines)
}

/// Runs entries (optionally filtered by tag) in parallel; output order is
/// fixed by entry id.
pub fn run_corpus(entries: &[CorpusEntry], tag_filter: Option<&str>) -> Result<CorpusReport> {
    let start = Instant::now();
    let selected: Vec<&CorpusEntry> = entries
        .iter()
        .filter(|e| tag_filter.is_none_or(|t| e.has_tag(t)))
        .collect();
    if selected.is_empty() {
        return Err(Error::Config("no entries match the filter".into()));
    }
    let mut reports: Vec<EntryReport> = selected.par_iter().map(|e| run_entry(e)).collect();
    reports.sort_by(|a, b| a.id.cmp(&b.id));
    let pass = reports.iter().filter(|r| r.passed()).count();
    let fail = reports.len() - pass;
    Ok(CorpusReport { entries: reports, pass, fail, elapsed_ms: start.elapsed().as_millis() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_minimal_entry() {
        let text = "\
# comment
[entry]
id = t.one
source = sec2
tags = prove
families = F, L
identity = F[2k] = L[k]*F[k]
";
        let entries = parse_corpus_text(text, "t.idc").unwrap();
        assert_eq!(entries.len(), 1);
        assert_eq!(entries[0].id, "t.one");
        assert_eq!(entries[0].mode(), "prove");
        let r = run_entry(&entries[0]);
        assert!(r.passed(), "{:?}", r.detail);
    }

    #[test]
    fn derive_entry_with_expect() {
        let text = "\
[entry]
id = t.two
tags = prove, derive
families = F, L
identity = F[2k] = L[k]*F[k]
derive = wrt=k component=real
expect = 2*L[2k] = L[k]^2 + 5*F[k]^2
";
        let entries = parse_corpus_text(text, "t.idc").unwrap();
        let r = run_entry(&entries[0]);
        assert!(r.passed(), "{:?}", r.detail);
        assert_eq!(r.detail.len(), 3);
    }

    #[test]
    fn degenerate_sample_is_skipped() {
        let text = "\
[entry]
id = t.three
tags = prove
families = U, V, W, Z
samples = p=1 q=-2; p=2 q=-1
identity = U[k+1]*U[k-1] - U[k]^2 = -q^(k-1)
";
        // p=1, q=-2 gives D = 9, a square: skipped; p=2, q=-1 proves
        let entries = parse_corpus_text(text, "t.idc").unwrap();
        let r = run_entry(&entries[0]);
        assert!(r.passed(), "{:?}", r.detail);
        assert!(r.detail.iter().any(|l| l.contains("skipped")));
    }

    #[test]
    fn unknown_field_is_an_error() {
        let text = "[entry]\nid = x\nbogus = 1\n";
        assert!(parse_corpus_text(text, "t.idc").is_err());
    }

    #[test]
    fn failing_entry_reports_fail() {
        let text = "\
[entry]
id = t.bad
tags = prove
families = F, L
identity = F[2k] = L[k]*F[k] + 1
";
        let entries = parse_corpus_text(text, "t.idc").unwrap();
        let r = run_entry(&entries[0]);
        assert!(!r.passed());
    }
}
