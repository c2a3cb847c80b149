//! Text format for explicit path distributions: metadata lines, then one
//! `probability,path` row per path with the vertices separated by spaces.

use std::path::Path;
use std::sync::Arc;

use rcdnet::{Network, PathDistribution, PathSet};

use crate::csvio::write_atomic;
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct DistFile {
    pub n: usize,
    pub tau: usize,
    pub name: String,
    pub entries: Vec<(f64, Vec<usize>)>,
}

impl DistFile {
    pub fn from_distribution(name: &str, dist: &PathDistribution) -> Result<Self, CliError> {
        let (paths, p) = match (dist.pathset(), dist.probabilities()) {
            (Some(ps), Some(p)) => (ps, p),
            _ => {
                return Err(CliError::Config(
                    "only explicit path distributions can be written".into(),
                ))
            }
        };
        Ok(DistFile {
            n: dist.n_nodes(),
            tau: dist.tau(),
            name: name.to_string(),
            entries: p.iter().zip(paths.paths()).map(|(&p, path)| (p, path.clone())).collect(),
        })
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "# rcdnet path distribution\n# n = {}\n# tau = {}\n# name = {}\nprobability,path\n",
            self.n, self.tau, self.name
        );
        for (p, path) in &self.entries {
            let verts: Vec<String> = path.iter().map(|v| v.to_string()).collect();
            s.push_str(&format!("{p},{}\n", verts.join(" ")));
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let err = |line: usize, msg: &str| CliError::Config(format!("distribution file line {line}: {msg}"));
        let (mut n, mut tau, mut name) = (None, None, String::new());
        let mut entries = Vec::new();
        let mut header_seen = false;
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            let lineno = i + 1;
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some((k, v)) = rest.split_once('=') {
                    match k.trim() {
                        "n" => n = Some(v.trim().parse().map_err(|_| err(lineno, "bad n"))?),
                        "tau" => tau = Some(v.trim().parse().map_err(|_| err(lineno, "bad tau"))?),
                        "name" => name = v.trim().to_string(),
                        _ => {}
                    }
                }
                continue;
            }
            if !header_seen {
                if line != "probability,path" {
                    return Err(err(lineno, "expected header `probability,path`"));
                }
                header_seen = true;
                continue;
            }
            let (p, path) = line.split_once(',').ok_or_else(|| err(lineno, "missing comma"))?;
            let p: f64 = p.trim().parse().map_err(|_| err(lineno, "bad probability"))?;
            let path = path
                .split_whitespace()
                .map(|v| v.parse::<usize>().map_err(|_| err(lineno, "bad vertex")))
                .collect::<Result<Vec<_>, _>>()?;
            entries.push((p, path));
        }
        Ok(DistFile {
            n: n.ok_or_else(|| err(0, "missing `# n = ...`"))?,
            tau: tau.ok_or_else(|| err(0, "missing `# tau = ...`"))?,
            name,
            entries,
        })
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        write_atomic(path, self.to_text().as_bytes())
    }

    /// Rebuilds the distribution on `g`, checking every path against it.
    pub fn to_distribution(&self, g: &Network) -> Result<PathDistribution, CliError> {
        if g.n_nodes() != self.n {
            return Err(CliError::Config(format!(
                "distribution file is for {} nodes, network has {}",
                self.n,
                g.n_nodes()
            )));
        }
        let paths = PathSet::from_paths(g, self.tau, self.entries.iter().map(|(_, p)| p.clone()).collect())?;
        // from_paths stores canonical orientations; keep p aligned with them
        let p = self.entries.iter().map(|(p, _)| *p).collect();
        Ok(PathDistribution::from_probabilities(Arc::new(paths), p)?)
    }
}
