//! Text output for the command-line front end.

use std::collections::BTreeMap;
use std::fmt::{Display, Write as _};
use std::fs;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context};

use crnkit::equilibria::{all_branches, conservation_equations, EquilibriumOptions};
use crnkit::format::{parse_crn_line, serialize_crn_line};
use crnkit::linexpr::{var_name, LinExpr};
use crnkit::pwl::{PwlFunction, RailMode, Rejection, TargetFunction, TestFailure};
use crnkit::search::{CandidateVerdict, Hit, ScopeReport};
use crnkit::Crn;

use crate::{target, Status};

/// Machine-readable `key=value` results, written once at exit.
pub struct Sidecar {
    path: Option<PathBuf>,
    lines: Vec<(String, String)>,
}

impl Sidecar {
    pub fn new(path: Option<PathBuf>) -> Self {
        Sidecar { path, lines: Vec::new() }
    }

    /// Sets a key, replacing an earlier value.
    pub fn set(&mut self, key: &str, value: impl Display) {
        let value = value.to_string();
        match self.lines.iter_mut().find(|(k, _)| k == key) {
            Some(slot) => slot.1 = value,
            None => self.lines.push((key.to_string(), value)),
        }
    }

    /// Appends a repeated key.
    pub fn push(&mut self, key: &str, value: impl Display) {
        self.lines.push((key.to_string(), value.to_string()));
    }

    pub fn write(&self) -> anyhow::Result<()> {
        let Some(path) = &self.path else { return Ok(()) };
        let mut text = String::new();
        for (k, v) in &self.lines {
            writeln!(text, "{k}={v}").unwrap();
        }
        fs::write(path, text).with_context(|| format!("cannot write sidecar {}", path.display()))
    }
}

/// Counts with species down the side and reactions across the top.
pub fn grid_table(reactions: &[usize], species: &[usize], grid: &BTreeMap<(usize, usize), u64>, col: &str) -> String {
    let cells: Vec<Vec<String>> = species
        .iter()
        .map(|&s| reactions.iter().map(|&r| grid[&(r, s)].to_string()).collect())
        .collect();
    let head = format!("Species \\ {col}s");
    let first = species.iter().map(|s| s.to_string().len()).max().unwrap_or(1).max(head.len());
    let widths: Vec<usize> = reactions
        .iter()
        .enumerate()
        .map(|(j, r)| cells.iter().map(|row| row[j].len()).max().unwrap_or(1).max(r.to_string().len()))
        .collect();
    let mut out = String::new();
    write!(out, "{head:<first$}").unwrap();
    for (r, w) in reactions.iter().zip(&widths) {
        write!(out, "  {r:>w$}").unwrap();
    }
    out.push('\n');
    for (s, row) in species.iter().zip(&cells) {
        write!(out, "{s:<first$}").unwrap();
        for (c, w) in row.iter().zip(&widths) {
            write!(out, "  {c:>w$}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn seesaw_table(domains: usize, rows: &[(usize, u64)]) -> String {
    let mut out = String::new();
    writeln!(out, "domains  reactions  count").unwrap();
    for (r, n) in rows {
        writeln!(out, "{domains:>7}  {r:>9}  {n:>5}").unwrap();
    }
    out
}

pub fn print_scopes(scopes: &[ScopeReport], sidecar: &mut Sidecar) {
    for s in scopes {
        println!(
            "scope {}: {} networks, {} analyzed{}",
            s.scope,
            s.enumerated,
            s.analyzed,
            if s.hit { ", HIT" } else { "" }
        );
        sidecar.push("scope", s);
    }
}

pub fn indent(text: &str) -> String {
    text.lines().map(|l| format!("  {l}")).collect::<Vec<_>>().join("\n")
}

pub fn pwl_text(crn: &Crn, f: &PwlFunction) -> String {
    let name = |v| var_name(crn, v);
    let text = f.display(&name).to_string();
    text
}

fn expr(crn: &Crn, e: &LinExpr) -> String {
    e.display(crn).to_string()
}

/// Conservation equations followed by one block per equilibrium branch.
pub fn equilibrium_report(crn: &Crn) -> String {
    let mut out = String::new();
    writeln!(out, "network:").unwrap();
    writeln!(out, "{}", indent(&crn.to_string())).unwrap();
    writeln!(out, "conservation:").unwrap();
    for (s, e) in conservation_equations(crn) {
        writeln!(out, "  {} = {}", crn.name(s), expr(crn, &e)).unwrap();
    }
    writeln!(out, "branches:").unwrap();
    for (k, b) in all_branches(crn, EquilibriumOptions::default()).iter().enumerate() {
        let zero: Vec<String> = b.cover.zero_set.iter().map(|&s| crn.name(s)).collect();
        let tag = if b.is_trivially_infeasible() { "  (never applies)" } else { "" };
        writeln!(out, "  branch {}: zero {{{}}}{tag}", k + 1, zero.join(", ")).unwrap();
        for s in crn.species() {
            writeln!(out, "    {} = {}", crn.name(s), expr(crn, &b.species_value[s.index()])).unwrap();
        }
        for (i, f) in b.flux_value.iter().enumerate() {
            writeln!(out, "    flux{} = {}", i + 1, expr(crn, f)).unwrap();
        }
        let conds: Vec<String> = b.feasibility.iter().map(|e| format!("{} >= 0", expr(crn, e))).collect();
        if conds.is_empty() {
            writeln!(out, "    applies everywhere").unwrap();
        } else {
            writeln!(out, "    applies if {}", conds.join(" and ")).unwrap();
        }
    }
    out
}

const REFUTATIONS_SHOWN: usize = 20;

fn point_text(crn: &Crn, vars: &[crnkit::linexpr::Var], point: &[crnkit::linexpr::Q]) -> String {
    vars.iter().zip(point).map(|(v, x)| format!("{}={x}", var_name(crn, *v))).collect::<Vec<_>>().join(" ")
}

fn list(xs: &[crnkit::linexpr::Q]) -> String {
    xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
}

/// Prints COMPUTED with the io and piecewise function, or NOT COMPUTED with
/// one reason per rejected io assignment.
pub fn print_verdict(crn: &Crn, target: &TargetFunction, verdict: &CandidateVerdict, sidecar: &mut Sidecar) -> Status {
    match verdict {
        CandidateVerdict::Certificate { io, pwl } => {
            println!("COMPUTED: {target}");
            println!("io: {}", io.display(crn));
            println!("computed function:");
            println!("{}", indent(&pwl_text(crn, &pwl.simplified())));
            sidecar.set("verdict", "computed");
            sidecar.set("io", io.display(crn));
            Status::Success
        }
        CandidateVerdict::Refutation { refutations } => {
            println!("NOT COMPUTED: {target}");
            if refutations.is_empty() {
                println!("no admissible io assignment");
            }
            for (io, why) in refutations.iter().take(REFUTATIONS_SHOWN) {
                let vars = io.input_vars();
                let reason = match why {
                    Rejection::Screen { point } => {
                        format!("equilibrium disagrees at {}", point_text(crn, &vars, point))
                    }
                    Rejection::Prefilter(TestFailure::Mismatch { point, got, expected }) => format!(
                        "at {}: got ({}) but should be ({})",
                        point_text(crn, &vars, point),
                        list(got),
                        list(expected)
                    ),
                    Rejection::Prefilter(TestFailure::Uncovered { point }) => {
                        format!("no equilibrium branch applies at {}", point_text(crn, &vars, point))
                    }
                    Rejection::SumIdentity(w) => format!("outputs do not sum to the inputs: {}", w.display(&vars, crn)),
                    Rejection::Counterexample(w) => w.display(&vars, crn),
                };
                println!("  {}: {reason}", io.display(crn));
            }
            if refutations.len() > REFUTATIONS_SHOWN {
                println!("  ... and {} more", refutations.len() - REFUTATIONS_SHOWN);
            }
            sidecar.set("verdict", "not_computed");
            sidecar.set("refutations", refutations.len());
            Status::NotFound
        }
    }
}

const CERTIFICATE_MAGIC: &str = "# crnkit-certificate v1";

pub fn certificate(target: &TargetFunction, hit: &Hit) -> String {
    let rail = match target.rail() {
        RailMode::Single => "single",
        RailMode::Dual => "dual",
    };
    format!(
        "{CERTIFICATE_MAGIC}\nfunction={}\nrail={rail}\nreactions={}\nspecies={}\ncrn={}\nio={}\n",
        target.kind,
        hit.scope.reactions,
        hit.scope.species,
        serialize_crn_line(&hit.crn),
        hit.io.display(&hit.crn)
    )
}

/// Network and target from a certificate. The io line is informational;
/// verification searches all assignments again.
pub fn parse_certificate(text: &str) -> anyhow::Result<(Crn, TargetFunction)> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(CERTIFICATE_MAGIC) {
        bail!("not a crnkit certificate");
    }
    let mut fields = BTreeMap::new();
    for line in lines {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| anyhow!("expected key=value, got `{line}`"))?;
        fields.insert(k.trim(), v.trim());
    }
    let get = |k: &str| fields.get(k).copied().ok_or_else(|| anyhow!("certificate is missing `{k}`"));
    let dual = match get("rail")? {
        "single" => false,
        "dual" => true,
        other => bail!("unknown rail `{other}`"),
    };
    let crn = parse_crn_line(get("crn")?)?;
    let t = target(get("function")?, dual)?;
    for (k, n) in [("reactions", crn.reaction_count()), ("species", crn.species_count())] {
        if get(k)?.parse::<usize>().ok() != Some(n) {
            bail!("certificate `{k}` does not match its network");
        }
    }
    Ok((crn, t))
}
