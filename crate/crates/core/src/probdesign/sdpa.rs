//! Export of the probability-design SDPs in SDPA sparse format (`.dat-s`).
//!
//! SDPA form: minimize `c^T x` subject to `sum_k x_k F_k - F_0 >= 0`, with
//! block-diagonal symmetric `F_k`. Entries are written as
//! `matno block i j value` with 1-based indices and `i <= j`; a negative block
//! size marks a diagonal (linear) block.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;

use super::spectral::{assemble_matrix, g_path, lambda2_pair};
use crate::error::{Error, Result};
use crate::graph::PathSet;
use crate::linalg::sorted_eigen;

/// One nonzero of a constraint matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdpaEntry {
    pub matno: usize,
    pub block: usize,
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

/// An SDP in SDPA sparse form.
#[derive(Debug, Clone, PartialEq)]
pub struct SdpaProblem {
    pub block_struct: Vec<i64>,
    pub c: Vec<f64>,
    pub entries: Vec<SdpaEntry>,
}

/// Which design problem to export.
#[derive(Debug, Clone, PartialEq)]
pub enum SdpKind {
    /// `min <nu, R^2>` over `(p, zeta, nu)` with
    /// `[[G(p) + zeta e e^T, I], [I, diag(nu)]] >= 0`.
    RadiusBound { radii: Vec<f64> },
    /// `max t` over `(p, t)` with `G(p) + e e^T/N >= t (I - e e^T/N)`; the
    /// `e e^T/N` shift gives the constraint a nonempty interior.
    MaxLambda2,
}

impl SdpaProblem {
    pub fn n_vars(&self) -> usize {
        self.c.len()
    }

    fn push(&mut self, matno: usize, block: usize, i: usize, j: usize, value: f64) {
        if value != 0.0 {
            let (i, j) = (i.min(j), i.max(j));
            self.entries.push(SdpaEntry {
                matno,
                block,
                i,
                j,
                value,
            });
        }
    }

    fn sort(&mut self) {
        self.entries
            .sort_by_key(|e| (e.matno, e.block, e.i, e.j));
    }

    /// Writes the problem in `.dat-s` syntax.
    pub fn to_sdpa_string(&self, comments: &[String]) -> String {
        let mut s = String::new();
        for c in comments {
            let _ = writeln!(s, "* {c}");
        }
        let _ = writeln!(s, "{}", self.n_vars());
        let _ = writeln!(s, "{}", self.block_struct.len());
        let blocks: Vec<String> = self.block_struct.iter().map(|b| b.to_string()).collect();
        let _ = writeln!(s, "{}", blocks.join(" "));
        let c: Vec<String> = self.c.iter().map(|v| format!("{v:e}")).collect();
        let _ = writeln!(s, "{}", c.join(" "));
        for e in &self.entries {
            let _ = writeln!(s, "{} {} {} {} {:e}", e.matno, e.block, e.i, e.j, e.value);
        }
        s
    }

    /// Parses `.dat-s` text. Leading `*` or `"` lines are comments; braces,
    /// parentheses and commas in the header are treated as separators.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| {
                let t = l.trim();
                !t.is_empty() && !t.starts_with('*') && !t.starts_with('"')
            })
            .map(|(no, l)| (no + 1, l.replace([',', '{', '}', '(', ')'], " ")));
        let mut next = |what: &str| {
            lines.next().ok_or(Error::Parse {
                line: 0,
                msg: format!("missing {what}"),
            })
        };
        let parse_err = |line: usize, msg: String| Error::Parse { line, msg };
        let (ln, m_line) = next("variable count")?;
        let m: usize = m_line
            .split_whitespace()
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| parse_err(ln, "bad variable count".into()))?;
        let (ln, nb_line) = next("block count")?;
        let nb: usize = nb_line
            .split_whitespace()
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| parse_err(ln, "bad block count".into()))?;
        let (ln, bs_line) = next("block structure")?;
        let block_struct: Vec<i64> = bs_line
            .split_whitespace()
            .take(nb)
            .map(|t| t.parse())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| parse_err(ln, format!("bad block size: {e}")))?;
        if block_struct.len() != nb {
            return Err(parse_err(ln, "too few block sizes".into()));
        }
        let (ln, c_line) = next("objective")?;
        let c: Vec<f64> = c_line
            .split_whitespace()
            .take(m)
            .map(|t| t.parse())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| parse_err(ln, format!("bad objective entry: {e}")))?;
        if c.len() != m {
            return Err(parse_err(ln, "too few objective entries".into()));
        }
        let mut entries = Vec::new();
        for (ln, l) in lines {
            let t: Vec<&str> = l.split_whitespace().collect();
            if t.len() != 5 {
                return Err(parse_err(ln, "expected 5 fields".into()));
            }
            let idx = |k: usize| -> Result<usize> {
                t[k].parse()
                    .map_err(|e| parse_err(ln, format!("bad index {}: {e}", t[k])))
            };
            let e = SdpaEntry {
                matno: idx(0)?,
                block: idx(1)?,
                i: idx(2)?,
                j: idx(3)?,
                value: t[4]
                    .parse()
                    .map_err(|e| parse_err(ln, format!("bad value: {e}")))?,
            };
            if e.matno > m || e.block == 0 || e.block > nb {
                return Err(parse_err(ln, "entry out of range".into()));
            }
            let size = block_struct[e.block - 1].unsigned_abs() as usize;
            if e.i == 0 || e.j == 0 || e.i > size || e.j > size {
                return Err(parse_err(ln, "entry index outside its block".into()));
            }
            entries.push(e);
        }
        let mut p = SdpaProblem {
            block_struct,
            c,
            entries,
        };
        p.sort();
        Ok(p)
    }

    /// `c^T x`.
    pub fn objective(&self, x: &[f64]) -> f64 {
        self.c.iter().zip(x).map(|(c, x)| c * x).sum()
    }

    /// Dense blocks of `sum_k x_k F_k - F_0`.
    pub fn slack_blocks(&self, x: &[f64]) -> Vec<DMatrix<f64>> {
        let mut blocks: Vec<DMatrix<f64>> = self
            .block_struct
            .iter()
            .map(|&b| {
                let s = b.unsigned_abs() as usize;
                DMatrix::zeros(s, s)
            })
            .collect();
        for e in &self.entries {
            let coef = if e.matno == 0 { -1.0 } else { x[e.matno - 1] };
            let m = &mut blocks[e.block - 1];
            m[(e.i - 1, e.j - 1)] += coef * e.value;
            if e.i != e.j {
                m[(e.j - 1, e.i - 1)] += coef * e.value;
            }
        }
        blocks
    }

    /// Smallest eigenvalue over all blocks of the slack matrix at `x`.
    pub fn min_slack_eigenvalue(&self, x: &[f64]) -> f64 {
        self.slack_blocks(x)
            .iter()
            .map(|b| sorted_eigen(b).0[0])
            .fold(f64::INFINITY, f64::min)
    }
}

/// Builds the SDPA problem and its human-readable variable map.
pub fn build_sdp(paths: &PathSet, lipschitz: &[f64], kind: &SdpKind) -> Result<(SdpaProblem, String)> {
    let n = paths.n_nodes();
    if lipschitz.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: lipschitz.len(),
        });
    }
    let np = paths.len();
    let mut map = String::new();
    for (k, p) in paths.paths().iter().enumerate() {
        let verts: Vec<String> = p.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(map, "var {} p path={} vertices={}", k + 1, k, verts.join("-"));
    }
    let mut prob = match kind {
        SdpKind::RadiusBound { radii } => {
            if radii.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: radii.len(),
                });
            }
            if radii.iter().any(|&r| !(r > 0.0)) {
                return Err(Error::InvalidArgument("radii must be positive".into()));
            }
            let zeta = np + 1;
            let _ = writeln!(map, "var {zeta} zeta");
            for i in 0..n {
                let _ = writeln!(map, "var {} nu node={i}", zeta + 1 + i);
            }
            let diag = np + 1 + n + 2;
            let _ = writeln!(
                map,
                "block 1 size {}: [[G(p) + zeta*e*e^T, I], [I, diag(nu)]] >= 0",
                2 * n
            );
            let _ = writeln!(
                map,
                "block 2 size -{diag}: rows 1..{np} p >= 0; row {} zeta >= 0; rows {}..{} nu >= 0; row {} sum(p) - 1 >= 0; row {} 1 - sum(p) >= 0",
                np + 1,
                np + 2,
                np + 1 + n,
                np + n + 2,
                np + n + 3
            );
            let mut c = vec![0.0; np + 1 + n];
            for (i, r) in radii.iter().enumerate() {
                c[np + 1 + i] = r * r;
            }
            let mut prob = SdpaProblem {
                block_struct: vec![2 * n as i64, -(diag as i64)],
                c,
                entries: Vec::new(),
            };
            for i in 1..=n {
                prob.push(0, 1, i, n + i, -1.0);
            }
            prob.push(0, 2, np + n + 2, np + n + 2, 1.0);
            prob.push(0, 2, np + n + 3, np + n + 3, -1.0);
            push_path_matrices(&mut prob, paths, lipschitz, 1, np + n + 2);
            for i in 1..=n {
                for j in i..=n {
                    prob.push(zeta, 1, i, j, 1.0);
                }
            }
            prob.push(zeta, 2, np + 1, np + 1, 1.0);
            for i in 1..=n {
                prob.push(zeta + i, 1, n + i, n + i, 1.0);
                prob.push(zeta + i, 2, np + 1 + i, np + 1 + i, 1.0);
            }
            prob
        }
        SdpKind::MaxLambda2 => {
            let t = np + 1;
            let _ = writeln!(map, "var {t} t (objective: minimize -t)");
            let _ = writeln!(
                map,
                "block 1 size {n}: G(p) + e*e^T/N - t*(I - e*e^T/N) >= 0"
            );
            let _ = writeln!(
                map,
                "block 2 size -{}: rows 1..{np} p >= 0; row {} sum(p) - 1 >= 0; row {} 1 - sum(p) >= 0",
                np + 2,
                np + 1,
                np + 2
            );
            let mut c = vec![0.0; np + 1];
            c[np] = -1.0;
            let mut prob = SdpaProblem {
                block_struct: vec![n as i64, -((np + 2) as i64)],
                c,
                entries: Vec::new(),
            };
            let inv_n = 1.0 / n as f64;
            for i in 1..=n {
                for j in i..=n {
                    prob.push(0, 1, i, j, -inv_n);
                    let center = if i == j { 1.0 } else { 0.0 } - inv_n;
                    prob.push(t, 1, i, j, -center);
                }
            }
            prob.push(0, 2, np + 1, np + 1, 1.0);
            prob.push(0, 2, np + 2, np + 2, -1.0);
            push_path_matrices(&mut prob, paths, lipschitz, 1, np + 1);
            prob
        }
    };
    prob.sort();
    Ok((prob, map))
}

/// `F_{p_k}`: `G_N` in the LMI block, a unit on the `p_k >= 0` row and the
/// two simplex rows starting at `simplex_row`.
fn push_path_matrices(
    prob: &mut SdpaProblem,
    paths: &PathSet,
    lipschitz: &[f64],
    first_var: usize,
    simplex_row: usize,
) {
    for (k, path) in paths.paths().iter().enumerate() {
        let var = first_var + k;
        let local = g_path(lipschitz, path);
        for (a, &i) in path.iter().enumerate() {
            for (b, &j) in path.iter().enumerate() {
                if i <= j {
                    prob.push(var, 1, i + 1, j + 1, local[(a, b)]);
                }
            }
        }
        prob.push(var, 2, k + 1, k + 1, 1.0);
        prob.push(var, 2, simplex_row, simplex_row, 1.0);
        prob.push(var, 2, simplex_row + 1, simplex_row + 1, -1.0);
    }
}

/// Writes `<out>` (SDPA) and the sidecar `<out stem>.map.txt`; returns the
/// sidecar path.
pub fn export_sdp(paths: &PathSet, lipschitz: &[f64], kind: &SdpKind, out: &Path) -> Result<PathBuf> {
    let (prob, map) = build_sdp(paths, lipschitz, kind)?;
    let label = match kind {
        SdpKind::RadiusBound { .. } => "radius-bound probability design",
        SdpKind::MaxLambda2 => "algebraic-connectivity probability design",
    };
    let comments = vec![
        format!("{label}: N = {}, tau = {}, paths = {}", paths.n_nodes(), paths.tau(), paths.len()),
        "variable ordering documented in the .map.txt sidecar".to_string(),
    ];
    fs::write(out, prob.to_sdpa_string(&comments))?;
    let sidecar = sidecar_path(out);
    fs::write(&sidecar, map)?;
    Ok(sidecar)
}

/// `foo.dat-s` -> `foo.map.txt`.
pub fn sidecar_path(out: &Path) -> PathBuf {
    let name = out
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let stem = name.strip_suffix(".dat-s").unwrap_or(&name);
    out.with_file_name(format!("{stem}.map.txt"))
}

/// Feasible point of the radius-bound SDP built from a distribution `p`:
/// `t = lambda_2(G(p))`, `zeta = t / N`, `nu_i = 1 / t`. Its objective is
/// `sum_i R_i^2 / lambda_2`.
pub fn lambda2_feasible_point(paths: &PathSet, lipschitz: &[f64], p: &[f64]) -> Vec<f64> {
    let n = paths.n_nodes();
    let g = assemble_matrix(lipschitz, paths.paths(), p);
    let (t, _) = lambda2_pair(&g);
    let mut x = p.to_vec();
    x.push(t / n as f64);
    x.extend(std::iter::repeat_n(1.0 / t, n));
    x
}
