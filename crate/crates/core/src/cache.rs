//! On-disk persistence of enumerated scopes.
//!
//! Layout under the cache root:
//!
//! ```text
//! <spec-hash>/<R>r_<S>s.crns      header line + one network per line
//! <spec-hash>/<R>r_<S>s.done      sha256 of the .crns file
//! <spec-hash>/<R>r_<S>s.partial   networks of an interrupted run
//! <spec-hash>/<R>r_<S>s.resume    resume token for the .partial file
//! ```

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::ops::ControlFlow;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::constraints::ClassSpec;
use crate::crn::Crn;
use crate::enumerate::{enumerate_scope_with, EnumError, EnumOptions, ResumeToken, Scope};
use crate::format::{parse_crn_line, serialize_crn_line};

const MAGIC: &str = "# crnkit-cache v1";

/// Short stable hash of a class spec, used as the cache directory name.
pub fn spec_hash(spec: &ClassSpec) -> String {
    let digest = Sha256::digest(spec.fingerprint().as_bytes());
    hex::encode(&digest[..8])
}

fn checksum(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Where a scope stream came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Cache,
    Generated,
}

#[derive(Debug, Clone)]
pub struct ScopeCache {
    root: PathBuf,
}

impl ScopeCache {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        ScopeCache { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn dir(&self, spec: &ClassSpec) -> PathBuf {
        self.root.join(spec_hash(spec))
    }

    fn stem(&self, spec: &ClassSpec, scope: Scope) -> PathBuf {
        self.dir(spec).join(format!("{}r_{}s", scope.reactions, scope.species))
    }

    pub fn data_path(&self, spec: &ClassSpec, scope: Scope) -> PathBuf {
        self.stem(spec, scope).with_extension("crns")
    }

    fn done_path(&self, spec: &ClassSpec, scope: Scope) -> PathBuf {
        self.stem(spec, scope).with_extension("done")
    }

    fn partial_path(&self, spec: &ClassSpec, scope: Scope) -> PathBuf {
        self.stem(spec, scope).with_extension("partial")
    }

    fn resume_path(&self, spec: &ClassSpec, scope: Scope) -> PathBuf {
        self.stem(spec, scope).with_extension("resume")
    }

    fn header(spec: &ClassSpec, scope: Scope, count: u64) -> String {
        format!(
            "{MAGIC} spec={} reactions={} species={} count={count}\n",
            spec.fingerprint(),
            scope.reactions,
            scope.species
        )
    }

    /// True when a complete, checksummed file exists for the scope.
    pub fn is_complete(&self, spec: &ClassSpec, scope: Scope) -> bool {
        self.done_path(spec, scope).exists() && self.data_path(spec, scope).exists()
    }

    /// Reads a completed scope. `Ok(None)` when absent; a checksum or format
    /// failure is an error (callers usually regenerate).
    pub fn load(&self, spec: &ClassSpec, scope: Scope) -> Result<Option<Vec<Crn>>, EnumError> {
        let mut out = Vec::new();
        match self.replay(spec, scope, |c| {
            out.push(c.clone());
            ControlFlow::Continue(())
        })? {
            Some(_) => Ok(Some(out)),
            None => Ok(None),
        }
    }

    fn verify(&self, spec: &ClassSpec, scope: Scope) -> Result<Option<u64>, EnumError> {
        if !self.is_complete(spec, scope) {
            return Ok(None);
        }
        let data = self.data_path(spec, scope);
        let bytes = fs::read(&data)?;
        let expected = fs::read_to_string(self.done_path(spec, scope))?;
        if checksum(&bytes) != expected.trim() {
            return Err(EnumError::Checksum { path: data.display().to_string() });
        }
        let first = bytes.split(|&b| b == b'\n').next().unwrap_or_default();
        let first = String::from_utf8_lossy(first);
        let corrupt = |message: &str| EnumError::CorruptCache {
            path: data.display().to_string(),
            message: message.to_string(),
        };
        if !first.starts_with(MAGIC) {
            return Err(corrupt("missing header"));
        }
        let field = |name: &str| {
            first.split_whitespace().find_map(|t| t.strip_prefix(name).map(str::to_string))
        };
        if field("spec=").as_deref() != Some(spec.fingerprint().as_str())
            || field("reactions=") != Some(scope.reactions.to_string())
            || field("species=") != Some(scope.species.to_string())
        {
            return Err(corrupt("header does not match the requested scope"));
        }
        let count = field("count=").and_then(|c| c.parse().ok()).ok_or_else(|| corrupt("bad count"))?;
        Ok(Some(count))
    }

    /// Streams a completed scope from disk. Returns the number of networks
    /// delivered, or `None` when the scope is not cached.
    pub fn replay(
        &self,
        spec: &ClassSpec,
        scope: Scope,
        mut sink: impl FnMut(&Crn) -> ControlFlow<()>,
    ) -> Result<Option<u64>, EnumError> {
        let Some(count) = self.verify(spec, scope)? else {
            return Ok(None);
        };
        let data = self.data_path(spec, scope);
        let reader = BufReader::new(fs::File::open(&data)?);
        let mut n = 0u64;
        for (i, line) in reader.lines().enumerate().skip(1) {
            let line = line?;
            let crn = parse_crn_line(&line).map_err(|e| EnumError::CorruptCache {
                path: data.display().to_string(),
                message: format!("line {}: {e}", i + 1),
            })?;
            n += 1;
            if sink(&crn).is_break() {
                return Ok(Some(n));
            }
        }
        if n != count {
            return Err(EnumError::CorruptCache {
                path: data.display().to_string(),
                message: format!("header says {count} networks, file has {n}"),
            });
        }
        Ok(Some(n))
    }

    fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
        let tmp = path.with_extension("tmp");
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(tmp, path)
    }

    fn clear(&self, spec: &ClassSpec, scope: Scope) {
        for p in [
            self.data_path(spec, scope),
            self.done_path(spec, scope),
            self.partial_path(spec, scope),
            self.resume_path(spec, scope),
        ] {
            let _ = fs::remove_file(p);
        }
    }

    /// Streams a scope, replaying it from disk when cached and otherwise
    /// generating it and persisting the result. A sink that stops early
    /// leaves the cache untouched. With a `limit`, a generated run that hits
    /// it is saved as a partial file plus resume token; the next call picks
    /// up from there.
    pub fn stream(
        &self,
        spec: &ClassSpec,
        scope: Scope,
        limit: Option<u64>,
        mut sink: impl FnMut(&Crn) -> ControlFlow<()>,
    ) -> Result<(u64, Source), EnumError> {
        match self.replay(spec, scope, &mut sink) {
            Ok(Some(n)) => return Ok((n, Source::Cache)),
            Ok(None) => {}
            Err(e) => {
                log::warn!("discarding cached scope {scope}: {e}; regenerating");
                self.clear(spec, scope);
            }
        }
        fs::create_dir_all(self.dir(spec))?;

        // Pick up an interrupted run.
        let mut body = String::new();
        let mut resume_after = None;
        let partial = self.partial_path(spec, scope);
        let resume = self.resume_path(spec, scope);
        if partial.exists() && resume.exists() {
            let token: Option<ResumeToken> = fs::read_to_string(&resume)?.parse().ok();
            if let Some(token) = token {
                let text = fs::read_to_string(&partial)?;
                for line in text.lines().skip(1) {
                    let crn = parse_crn_line(line).map_err(|e| EnumError::CorruptCache {
                        path: partial.display().to_string(),
                        message: e.to_string(),
                    })?;
                    if sink(&crn).is_break() {
                        return Ok((0, Source::Cache));
                    }
                    body.push_str(line);
                    body.push('\n');
                }
                resume_after = Some(token);
            }
        }
        let prior = body.lines().count() as u64;

        let opts = EnumOptions { limit, resume_after };
        let mut stopped = false;
        let result = enumerate_scope_with(scope, spec, &opts, |crn| {
            body.push_str(&serialize_crn_line(crn));
            body.push('\n');
            let flow = sink(crn);
            stopped |= flow.is_break();
            flow
        });
        match result {
            Ok(n) if !stopped => {
                let count = prior + n;
                let mut bytes = Self::header(spec, scope, count).into_bytes();
                bytes.extend_from_slice(body.as_bytes());
                let data = self.data_path(spec, scope);
                Self::write_atomic(&data, &bytes)?;
                Self::write_atomic(&self.done_path(spec, scope), checksum(&bytes).as_bytes())?;
                let _ = fs::remove_file(&partial);
                let _ = fs::remove_file(&resume);
                Ok((count, Source::Generated))
            }
            Ok(n) => Ok((prior + n, Source::Generated)),
            Err(EnumError::Partial { count, token }) => {
                let total = prior + count;
                let mut bytes = format!("{MAGIC} partial spec={} count={total}\n", spec.fingerprint()).into_bytes();
                bytes.extend_from_slice(body.as_bytes());
                Self::write_atomic(&partial, &bytes)?;
                Self::write_atomic(&resume, token.to_string().as_bytes())?;
                Err(EnumError::Partial { count: total, token })
            }
            Err(e) => Err(e),
        }
    }

    /// Streams every scope up to `max` in deepening order, replaying cached
    /// scopes. Returns per-scope counts.
    pub fn enumerate_up_to(
        &self,
        spec: &ClassSpec,
        max: Scope,
        mut sink: impl FnMut(Scope, &Crn),
    ) -> Result<Vec<(Scope, u64)>, EnumError> {
        let mut counts = Vec::new();
        for scope in crate::enumerate::deepening_order(max) {
            let (n, _) = self.stream(spec, scope, None, |c| {
                sink(scope, c);
                ControlFlow::Continue(())
            })?;
            counts.push((scope, n));
        }
        Ok(counts)
    }

    /// Count of a scope, from the cache header when available.
    pub fn count(&self, spec: &ClassSpec, scope: Scope) -> Result<u64, EnumError> {
        match self.verify(spec, scope) {
            Ok(Some(n)) => return Ok(n),
            Ok(None) => {}
            Err(e) => {
                log::warn!("discarding cached scope {scope}: {e}; regenerating");
                self.clear(spec, scope);
            }
        }
        self.stream(spec, scope, None, |_| ControlFlow::Continue(())).map(|(n, _)| n)
    }
}
