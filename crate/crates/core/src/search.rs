//! Iterative-deepening search for the smallest network computing a target.

use std::fmt;
use std::fs;
use std::ops::ControlFlow;
use std::path::PathBuf;
use std::str::FromStr;

use crate::cache::ScopeCache;
use crate::constraints::ClassSpec;
use crate::crn::Crn;
use crate::enumerate::{deepening_order, enumerate_scope_with, EnumError, EnumOptions, Scope};
use crate::format::{parse_crn_line, serialize_crn_line};
use crate::par;
use crate::pwl::{analyze, AnalysisOptions, IoAssignment, PwlFunction, Rejection, TargetFunction};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopMode {
    /// Stop at the first hit in deepening order.
    First,
    /// Find a hit in every scope on the Pareto frontier of (reactions, species).
    Frontier,
}

impl FromStr for StopMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "first" => Ok(StopMode::First),
            "frontier" => Ok(StopMode::Frontier),
            _ => Err(format!("unknown stop mode `{s}` (expected first or frontier)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SearchSpec {
    pub target: TargetFunction,
    pub class: ClassSpec,
    pub max_scope: Scope,
    pub stop: StopMode,
}

#[derive(Debug, Clone)]
pub struct SearchOptions {
    pub analysis: AnalysisOptions,
    /// Networks analyzed per parallel batch.
    pub chunk: usize,
    /// Log progress every this many networks.
    pub progress_every: u64,
    /// Stop with a partial result after analyzing this many networks.
    pub analysis_limit: Option<u64>,
    /// Skip scopes before this one, and this many networks within it.
    pub resume: Option<(Scope, u64)>,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            analysis: AnalysisOptions::default(),
            chunk: 2048,
            progress_every: 100_000,
            analysis_limit: None,
            resume: None,
        }
    }
}

/// A network that computes the target.
#[derive(Debug, Clone)]
pub struct Hit {
    pub crn: Crn,
    pub io: IoAssignment,
    pub pwl: PwlFunction,
    pub scope: Scope,
    /// Position of the network in its scope's stream.
    pub index: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScopeReport {
    pub scope: Scope,
    pub enumerated: u64,
    pub analyzed: u64,
    pub hit: bool,
}

#[derive(Debug, Clone, Default)]
pub struct SearchResult {
    /// First hit in deepening order.
    pub found: Option<Hit>,
    /// Hits at Pareto-minimal scopes (frontier mode; the first hit otherwise).
    pub frontier: Vec<Hit>,
    pub scopes: Vec<ScopeReport>,
}

#[derive(Debug, thiserror::Error)]
pub enum SearchError {
    #[error(transparent)]
    Enumerate(#[from] EnumError),
    #[error("analysis limit reached in scope {scope} after {analyzed} networks; resume with that scope and offset")]
    Partial { result: Box<SearchResult>, scope: Scope, analyzed: u64 },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Outcome of checking a single network.
#[derive(Debug, Clone)]
pub enum CandidateVerdict {
    Certificate { io: IoAssignment, pwl: PwlFunction },
    Refutation { refutations: Vec<(IoAssignment, Rejection)> },
}

/// Full analysis of one network, keeping a reason for every rejected assignment.
pub fn verify_candidate(crn: &Crn, target: &TargetFunction) -> CandidateVerdict {
    let opts = AnalysisOptions { collect_refutations: true, ..AnalysisOptions::default() };
    let a = analyze(crn, target, &opts);
    match a.found {
        Some((io, pwl)) => CandidateVerdict::Certificate { io, pwl },
        None => CandidateVerdict::Refutation { refutations: a.refutations },
    }
}

/// Per-scope search summary kept next to the enumeration cache.
#[derive(Debug, Clone, PartialEq, Eq)]
struct ScopeSummary {
    enumerated: u64,
    analyzed: u64,
    hit: Option<(u64, String)>,
}

fn summary_path(cache: &ScopeCache, spec: &SearchSpec, opts: &AnalysisOptions, scope: Scope) -> PathBuf {
    let rail = if spec.target.dual_rail_inputs { "dual" } else { "single" };
    let tag = format!(
        "{}-{}-screen{}-seed{}",
        spec.target.kind, rail, opts.screen as u8, opts.seed
    );
    cache
        .dir(&spec.class)
        .join("search")
        .join(tag.replace('/', "_"))
        .join(format!("{}r_{}s.result", scope.reactions, scope.species))
}

impl ScopeSummary {
    fn render(&self) -> String {
        let mut s = format!("# crnkit-search v1\nenumerated={}\nanalyzed={}\n", self.enumerated, self.analyzed);
        if let Some((i, line)) = &self.hit {
            s.push_str(&format!("hit_index={i}\nhit={line}\n"));
        }
        s
    }

    fn parse(text: &str) -> Option<Self> {
        let mut lines = text.lines();
        if lines.next()? != "# crnkit-search v1" {
            return None;
        }
        let (mut enumerated, mut analyzed, mut idx, mut hit) = (None, None, None, None);
        for l in lines {
            let (k, v) = l.split_once('=')?;
            match k {
                "enumerated" => enumerated = v.parse().ok(),
                "analyzed" => analyzed = v.parse().ok(),
                "hit_index" => idx = v.parse().ok(),
                "hit" => hit = Some(v.to_string()),
                _ => return None,
            }
        }
        let hit = match (idx, hit) {
            (Some(i), Some(h)) => Some((i, h)),
            (None, None) => None,
            _ => return None,
        };
        Some(ScopeSummary { enumerated: enumerated?, analyzed: analyzed?, hit })
    }
}

struct ScopeRun {
    report: ScopeReport,
    hit: Option<Hit>,
}

/// Analyzes networks in stream order, batched; keeps the first hit.
struct Analyzer<'a> {
    spec: &'a SearchSpec,
    opts: &'a SearchOptions,
    scope: Scope,
    skip: u64,
    batch: Vec<Crn>,
    batch_start: u64,
    seen: u64,
    analyzed: u64,
    budget: Option<u64>,
    hit: Option<Hit>,
    exhausted_budget: bool,
}

impl Analyzer<'_> {
    fn push(&mut self, crn: &Crn) {
        let index = self.seen;
        self.seen += 1;
        if self.hit.is_some() || self.exhausted_budget || index < self.skip {
            return;
        }
        if self.batch.is_empty() {
            self.batch_start = index;
        }
        self.batch.push(crn.clone());
        if self.batch.len() >= self.opts.chunk {
            self.flush();
        }
    }

    fn flush(&mut self) {
        if self.batch.is_empty() {
            return;
        }
        let mut batch = std::mem::take(&mut self.batch);
        if let Some(b) = self.budget {
            let room = b.saturating_sub(self.analyzed) as usize;
            if room < batch.len() {
                batch.truncate(room);
                self.exhausted_budget = true;
            }
        }
        let target = &self.spec.target;
        let aopts = &self.opts.analysis;
        let pos = par::position_first(&batch, |c| analyze(c, target, aopts).found.is_some());
        let before = self.analyzed;
        match pos {
            Some(k) => {
                self.analyzed += k as u64 + 1;
                let crn = batch.swap_remove(k);
                let (io, pwl) = analyze(&crn, target, aopts).found.expect("hit re-verifies");
                self.hit = Some(Hit { crn, io, pwl, scope: self.scope, index: self.batch_start + k as u64 });
            }
            None => self.analyzed += batch.len() as u64,
        }
        let every = self.opts.progress_every.max(1);
        if before / every != self.analyzed / every {
            log::info!("scope {}: analyzed {} networks", self.scope, self.analyzed);
        }
    }
}

fn run_scope(
    spec: &SearchSpec,
    opts: &SearchOptions,
    cache: Option<&ScopeCache>,
    scope: Scope,
    skip: u64,
    budget: Option<u64>,
) -> Result<ScopeRun, SearchError> {
    if let Some(c) = cache {
        let path = summary_path(c, spec, &opts.analysis, scope);
        if skip == 0 {
            if let Some(s) = fs::read_to_string(&path).ok().and_then(|t| ScopeSummary::parse(&t)) {
                let hit = match &s.hit {
                    Some((index, line)) => {
                        let crn = parse_crn_line(line).ok();
                        let found = crn.as_ref().and_then(|c| analyze(c, &spec.target, &opts.analysis).found);
                        match (crn, found) {
                            (Some(crn), Some((io, pwl))) => Some(Hit { crn, io, pwl, scope, index: *index }),
                            _ => {
                                log::warn!("cached search hit in {} does not re-verify; re-running", path.display());
                                None
                            }
                        }
                    }
                    None => None,
                };
                if hit.is_some() == s.hit.is_some() {
                    let report = ScopeReport { scope, enumerated: s.enumerated, analyzed: s.analyzed, hit: hit.is_some() };
                    return Ok(ScopeRun { report, hit });
                }
            }
        }
    }

    let mut an = Analyzer {
        spec,
        opts,
        scope,
        skip,
        batch: Vec::new(),
        batch_start: 0,
        seen: 0,
        analyzed: 0,
        budget,
        hit: None,
        exhausted_budget: false,
    };
    let enumerated = match cache {
        Some(c) => {
            c.stream(&spec.class, scope, None, |crn| {
                an.push(crn);
                ControlFlow::Continue(())
            })?
            .0
        }
        None => enumerate_scope_with(scope, &spec.class, &EnumOptions::default(), |crn| {
            an.push(crn);
            ControlFlow::Continue(())
        })?,
    };
    an.flush();
    let report = ScopeReport { scope, enumerated, analyzed: an.analyzed, hit: an.hit.is_some() };
    if an.exhausted_budget && an.hit.is_none() {
        return Err(SearchError::Partial {
            result: Box::new(SearchResult { found: None, frontier: Vec::new(), scopes: vec![report] }),
            scope,
            analyzed: skip + an.analyzed,
        });
    }
    if let (Some(c), 0) = (cache, skip) {
        let summary = ScopeSummary {
            enumerated,
            analyzed: an.analyzed,
            hit: an.hit.as_ref().map(|h| (h.index, serialize_crn_line(&h.crn))),
        };
        let path = summary_path(c, spec, &opts.analysis, scope);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        fs::write(&path, summary.render())?;
    }
    Ok(ScopeRun { report, hit: an.hit })
}

/// Deepening search over scopes up to `spec.max_scope`.
pub fn exhaustive_search(
    spec: &SearchSpec,
    cache: Option<&ScopeCache>,
    opts: &SearchOptions,
) -> Result<SearchResult, SearchError> {
    let mut result = SearchResult::default();
    let mut budget = opts.analysis_limit;
    for scope in deepening_order(spec.max_scope) {
        let mut skip = 0;
        if let Some((start, offset)) = opts.resume {
            if scope < start {
                continue;
            }
            if scope == start {
                skip = offset;
            }
        }
        if spec.stop == StopMode::Frontier
            && result.frontier.iter().any(|h| h.scope.reactions <= scope.reactions && h.scope.species <= scope.species)
        {
            continue;
        }
        let run = match run_scope(spec, opts, cache, scope, skip, budget) {
            Ok(run) => run,
            Err(SearchError::Partial { result: partial, scope, analyzed }) => {
                result.scopes.extend(partial.scopes);
                return Err(SearchError::Partial { result: Box::new(result), scope, analyzed });
            }
            Err(e) => return Err(e),
        };
        if let Some(b) = budget.as_mut() {
            *b = b.saturating_sub(run.report.analyzed);
        }
        log::info!(
            "scope {}: {} enumerated, {} analyzed, {}",
            scope,
            run.report.enumerated,
            run.report.analyzed,
            if run.report.hit { "hit" } else { "no hit" }
        );
        result.scopes.push(run.report);
        if let Some(hit) = run.hit {
            if result.found.is_none() {
                result.found = Some(hit.clone());
            }
            result.frontier.push(hit);
            if spec.stop == StopMode::First {
                break;
            }
        }
    }
    Ok(result)
}

impl fmt::Display for ScopeReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "reactions={} species={} enumerated={} analyzed={} hit={}",
            self.scope.reactions, self.scope.species, self.enumerated, self.analyzed, self.hit
        )
    }
}
