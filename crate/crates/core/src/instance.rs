//! Ising problem instances.
//!
//! An instance is the classical Hamiltonian
//!
//! ```text
//! H(s) = sum_{i<j} J_ij s_i s_j + sum_i h_i s_i,     s_i = +-1
//! ```
//!
//! stored as a sparse edge list plus one field per spin. Couplings and fields
//! are bounded by one in magnitude, which fixes the energy (and time) unit.
//!
//! # File format
//!
//! ```text
//! # free-form comments start with '#'
//! #@ geometry grid 4 4
//! 16 25
//! 0 1 -0.25
//! 0 0 0.1
//! ...
//! ```
//!
//! The first non-comment line is `n m`, followed by `m` lines `i j value`.
//! A line with `i == j` sets the local field `h_i`. Lines starting with `#@`
//! carry the site geometry; other readers may treat them as comments.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Magnitude bound on every coupling and field.
pub const MAX_COUPLING: f64 = 1.0;

/// Local fields of the 2D ensemble are drawn from `[-FIELD_2D, FIELD_2D]`.
pub const FIELD_2D: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub coupling: f64,
}

/// Site coordinates used for cluster centres and front distances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Geometry {
    /// Site `i` sits at `(i, 0)`.
    Chain { len: usize },
    /// Site `r * cols + c` sits at `(r, c)`.
    Grid { rows: usize, cols: usize },
    /// Arbitrary planar coordinates, one per site.
    Points(Vec<[f64; 2]>),
}

impl Geometry {
    pub fn num_sites(&self) -> usize {
        match self {
            Geometry::Chain { len } => *len,
            Geometry::Grid { rows, cols } => rows * cols,
            Geometry::Points(p) => p.len(),
        }
    }

    pub fn coord(&self, site: usize) -> [f64; 2] {
        match self {
            Geometry::Chain { .. } => [site as f64, 0.0],
            Geometry::Grid { cols, .. } => [(site / cols) as f64, (site % cols) as f64],
            Geometry::Points(p) => p[site],
        }
    }
}

#[derive(Debug, Clone)]
pub struct Instance {
    n: usize,
    edges: Vec<Edge>,
    fields: Vec<f64>,
    geometry: Option<Geometry>,
    adjacency: Vec<Vec<(usize, f64)>>,
}

impl PartialEq for Instance {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
            && self.edges == other.edges
            && self.fields == other.fields
            && self.geometry == other.geometry
    }
}

impl Instance {
    /// Builds and validates an instance. Edges must satisfy `i < j < n` with no
    /// duplicate pairs, and every value must be bounded by one in magnitude.
    pub fn new(
        n: usize,
        edges: Vec<Edge>,
        fields: Vec<f64>,
        geometry: Option<Geometry>,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("instance must have at least one spin"));
        }
        if fields.len() != n {
            return Err(Error::invalid(format!(
                "expected {n} fields, got {}",
                fields.len()
            )));
        }
        if let Some(g) = &geometry {
            if g.num_sites() != n {
                return Err(Error::invalid(format!(
                    "geometry describes {} sites but the instance has {n}",
                    g.num_sites()
                )));
            }
        }
        let mut adjacency = vec![Vec::new(); n];
        for e in &edges {
            if e.i >= e.j || e.j >= n {
                return Err(Error::invalid(format!(
                    "edge ({}, {}) must satisfy i < j < {n}",
                    e.i, e.j
                )));
            }
            if !e.coupling.is_finite() || e.coupling.abs() > MAX_COUPLING {
                return Err(Error::invalid(format!(
                    "coupling J_{},{} = {} exceeds |J| <= 1",
                    e.i, e.j, e.coupling
                )));
            }
            if adjacency[e.i].iter().any(|&(k, _)| k == e.j) {
                return Err(Error::invalid(format!("duplicate edge ({}, {})", e.i, e.j)));
            }
            adjacency[e.i].push((e.j, e.coupling));
            adjacency[e.j].push((e.i, e.coupling));
        }
        for (i, h) in fields.iter().enumerate() {
            if !h.is_finite() || h.abs() > MAX_COUPLING {
                return Err(Error::invalid(format!("field h_{i} = {h} exceeds |h| <= 1")));
            }
        }
        Ok(Instance {
            n,
            edges,
            fields,
            geometry,
            adjacency,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn fields(&self) -> &[f64] {
        &self.fields
    }

    pub fn geometry(&self) -> Option<&Geometry> {
        self.geometry.as_ref()
    }

    /// Neighbours of `site` with the coupling on the connecting edge.
    pub fn neighbors(&self, site: usize) -> &[(usize, f64)] {
        &self.adjacency[site]
    }

    pub fn has_fields(&self) -> bool {
        self.fields.iter().any(|&h| h != 0.0)
    }

    /// `sum |J| + sum |h|`, an upper bound on `|H(s)|` for every configuration.
    pub fn abs_bound(&self) -> f64 {
        self.edges.iter().map(|e| e.coupling.abs()).sum::<f64>()
            + self.fields.iter().map(|h| h.abs()).sum::<f64>()
    }

    /// The instance with every coupling and field negated; its ground energy is
    /// minus the maximum energy of `self`.
    pub fn negated(&self) -> Instance {
        let edges = self
            .edges
            .iter()
            .map(|e| Edge {
                coupling: -e.coupling,
                ..*e
            })
            .collect();
        let fields = self.fields.iter().map(|h| -h).collect();
        Instance::new(self.n, edges, fields, self.geometry.clone())
            .expect("negation preserves validity")
    }

    fn check(&self, s: &SpinConfig) -> Result<()> {
        if s.len() != self.n {
            return Err(Error::invalid(format!(
                "configuration has {} spins, instance has {}",
                s.len(),
                self.n
            )));
        }
        Ok(())
    }

    /// Classical energy `sum_{i<j} J_ij s_i s_j + sum_i h_i s_i`.
    pub fn energy(&self, s: &SpinConfig) -> Result<f64> {
        self.check(s)?;
        Ok(self.energy_unchecked(s.spins()))
    }

    pub(crate) fn energy_unchecked(&self, s: &[i8]) -> f64 {
        let mut e = 0.0;
        for edge in &self.edges {
            e += edge.coupling * f64::from(s[edge.i] * s[edge.j]);
        }
        for (h, &si) in self.fields.iter().zip(s) {
            e += h * f64::from(si);
        }
        e
    }

    /// Quasi-1D chain with couplings for every pair `1 <= |i - j| <= range`,
    /// drawn uniformly from `[-1, 1]`, and no local fields.
    pub fn generate_quasi_1d(n: usize, range: usize, seed: u64) -> Result<Self> {
        if n < 2 || range < 1 {
            return Err(Error::invalid(format!(
                "quasi-1D generator needs n >= 2 and r >= 1 (got n={n}, r={range})"
            )));
        }
        let mut rng = rng::stream(seed, 0);
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..=(i + range).min(n - 1) {
                edges.push(Edge {
                    i,
                    j,
                    coupling: rng.random_range(-MAX_COUPLING..=MAX_COUPLING),
                });
            }
        }
        Instance::new(n, edges, vec![0.0; n], Some(Geometry::Chain { len: n }))
    }

    /// `side x side` open-boundary square lattice with nearest-neighbour
    /// couplings in `[-1, 1]` and fields in `[-0.1, 0.1]`.
    pub fn generate_2d(side: usize, seed: u64) -> Result<Self> {
        if side < 2 {
            return Err(Error::invalid(format!("2D generator needs L >= 2 (got {side})")));
        }
        Self::generate_grid(side, side, seed)
    }

    /// Rectangular variant of [`Instance::generate_2d`].
    pub fn generate_grid(rows: usize, cols: usize, seed: u64) -> Result<Self> {
        if rows == 0 || cols == 0 || rows * cols < 2 {
            return Err(Error::invalid("grid needs at least two sites"));
        }
        let mut rng = rng::stream(seed, 0);
        let n = rows * cols;
        let mut edges = Vec::with_capacity(2 * n);
        for r in 0..rows {
            for c in 0..cols {
                let i = r * cols + c;
                if c + 1 < cols {
                    edges.push(Edge {
                        i,
                        j: i + 1,
                        coupling: rng.random_range(-MAX_COUPLING..=MAX_COUPLING),
                    });
                }
                if r + 1 < rows {
                    edges.push(Edge {
                        i,
                        j: i + cols,
                        coupling: rng.random_range(-MAX_COUPLING..=MAX_COUPLING),
                    });
                }
            }
        }
        let fields = (0..n)
            .map(|_| rng.random_range(-FIELD_2D..=FIELD_2D))
            .collect();
        Instance::new(n, edges, fields, Some(Geometry::Grid { rows, cols }))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        parse_instance(&text, &path.display().to_string())
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_string()).map_err(|e| Error::io(path, e))
    }
}

impl fmt::Display for Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.geometry {
            Some(Geometry::Chain { len }) => writeln!(f, "#@ geometry chain {len}")?,
            Some(Geometry::Grid { rows, cols }) => writeln!(f, "#@ geometry grid {rows} {cols}")?,
            Some(Geometry::Points(points)) => {
                writeln!(f, "#@ geometry points")?;
                for (i, [x, y]) in points.iter().enumerate() {
                    writeln!(f, "#@ coord {i} {x} {y}")?;
                }
            }
            None => {}
        }
        let nonzero = self.fields.iter().filter(|&&h| h != 0.0).count();
        writeln!(f, "{} {}", self.n, self.edges.len() + nonzero)?;
        for e in &self.edges {
            writeln!(f, "{} {} {}", e.i, e.j, e.coupling)?;
        }
        for (i, h) in self.fields.iter().enumerate() {
            if *h != 0.0 {
                writeln!(f, "{i} {i} {h}")?;
            }
        }
        Ok(())
    }
}

impl FromStr for Instance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_instance(s, "<string>")
    }
}

fn parse_instance(text: &str, origin: &str) -> Result<Instance> {
    let err = |line: usize, msg: String| Error::Parse {
        path: origin.to_string(),
        line,
        msg,
    };
    let mut geometry_kind: Option<(usize, Vec<String>)> = None;
    let mut coords: Vec<(usize, usize, [f64; 2])> = Vec::new();
    let mut header: Option<(usize, usize)> = None;
    let mut edges = Vec::new();
    let mut fields: Vec<Option<f64>> = Vec::new();
    let mut entries = 0usize;

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if let Some(pragma) = line.strip_prefix("#@") {
            let toks: Vec<&str> = pragma.split_whitespace().collect();
            match toks.first().copied() {
                Some("geometry") => {
                    geometry_kind = Some((lineno, toks[1..].iter().map(|t| t.to_string()).collect()))
                }
                Some("coord") => {
                    if toks.len() != 4 {
                        return Err(err(lineno, "expected '#@ coord i x y'".into()));
                    }
                    let i = parse_num::<usize>(toks[1]).map_err(|m| err(lineno, m))?;
                    let x = parse_num::<f64>(toks[2]).map_err(|m| err(lineno, m))?;
                    let y = parse_num::<f64>(toks[3]).map_err(|m| err(lineno, m))?;
                    coords.push((lineno, i, [x, y]));
                }
                _ => {}
            }
            continue;
        }
        let line = match line.find('#') {
            Some(p) => line[..p].trim(),
            None => line,
        };
        if line.is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        match header {
            None => {
                if toks.len() != 2 {
                    return Err(err(lineno, format!("expected header 'n m', got '{line}'")));
                }
                let n = parse_num::<usize>(toks[0]).map_err(|m| err(lineno, m))?;
                let m = parse_num::<usize>(toks[1]).map_err(|m| err(lineno, m))?;
                if n == 0 {
                    return Err(err(lineno, "n must be positive".into()));
                }
                header = Some((n, m));
                fields = vec![None; n];
            }
            Some((n, m)) => {
                if toks.len() != 3 {
                    return Err(err(lineno, format!("expected 'i j value', got '{line}'")));
                }
                if entries == m {
                    return Err(err(lineno, format!("more than the declared {m} entries")));
                }
                let a = parse_num::<usize>(toks[0]).map_err(|m| err(lineno, m))?;
                let b = parse_num::<usize>(toks[1]).map_err(|m| err(lineno, m))?;
                let v = parse_num::<f64>(toks[2]).map_err(|m| err(lineno, m))?;
                if a >= n || b >= n {
                    return Err(err(lineno, format!("index out of range for n = {n}")));
                }
                if !v.is_finite() || v.abs() > MAX_COUPLING {
                    return Err(err(lineno, format!("value {v} exceeds magnitude 1")));
                }
                if a == b {
                    if fields[a].replace(v).is_some() {
                        return Err(err(lineno, format!("duplicate field for spin {a}")));
                    }
                } else {
                    let (i, j) = if a < b { (a, b) } else { (b, a) };
                    edges.push((lineno, Edge { i, j, coupling: v }));
                }
                entries += 1;
            }
        }
    }
    let (n, m) = header.ok_or_else(|| err(0, "missing 'n m' header".into()))?;
    if entries != m {
        return Err(err(
            text.lines().count(),
            format!("header declares {m} entries, found {entries}"),
        ));
    }
    let mut seen = std::collections::HashSet::new();
    for (lineno, e) in &edges {
        if !seen.insert((e.i, e.j)) {
            return Err(err(*lineno, format!("duplicate edge ({}, {})", e.i, e.j)));
        }
    }

    let geometry = match geometry_kind {
        None => None,
        Some((lineno, toks)) => {
            let toks: Vec<&str> = toks.iter().map(String::as_str).collect();
            match toks.as_slice() {
                ["chain", len] => Some(Geometry::Chain {
                    len: parse_num(len).map_err(|m| err(lineno, m))?,
                }),
                ["grid", rows, cols] => Some(Geometry::Grid {
                    rows: parse_num(rows).map_err(|m| err(lineno, m))?,
                    cols: parse_num(cols).map_err(|m| err(lineno, m))?,
                }),
                ["points"] => {
                    let mut pts = vec![None; n];
                    for (ln, i, xy) in &coords {
                        if *i >= n {
                            return Err(err(*ln, format!("coordinate index {i} out of range")));
                        }
                        pts[*i] = Some(*xy);
                    }
                    let pts = pts
                        .into_iter()
                        .enumerate()
                        .map(|(i, p)| p.ok_or_else(|| err(lineno, format!("missing coordinate for site {i}"))))
                        .collect::<Result<Vec<_>>>()?;
                    Some(Geometry::Points(pts))
                }
                _ => return Err(err(lineno, format!("unknown geometry '{}'", toks.join(" ")))),
            }
        }
    };
    Instance::new(
        n,
        edges.into_iter().map(|(_, e)| e).collect(),
        fields.into_iter().map(|h| h.unwrap_or(0.0)).collect(),
        geometry,
    )
    .map_err(|e| err(0, e.to_string()))
}

fn parse_num<T: FromStr>(tok: &str) -> std::result::Result<T, String> {
    tok.parse()
        .map_err(|_| format!("cannot parse '{tok}' as a number"))
}

/// A classical spin configuration, one `+1`/`-1` entry per site.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SpinConfig(Vec<i8>);

impl SpinConfig {
    pub fn new(spins: Vec<i8>) -> Result<Self> {
        if let Some(bad) = spins.iter().find(|&&s| s != 1 && s != -1) {
            return Err(Error::invalid(format!("spin value {bad} is not +1 or -1")));
        }
        Ok(SpinConfig(spins))
    }

    pub(crate) fn from_vec_unchecked(spins: Vec<i8>) -> Self {
        debug_assert!(spins.iter().all(|&s| s == 1 || s == -1));
        SpinConfig(spins)
    }

    pub fn all_up(n: usize) -> Self {
        SpinConfig(vec![1; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn spins(&self) -> &[i8] {
        &self.0
    }

    /// The global spin flip `-s`.
    pub fn flipped(&self) -> Self {
        SpinConfig(self.0.iter().map(|s| -s).collect())
    }

    /// Flips the listed sites.
    pub fn with_flipped(&self, sites: &[usize]) -> Self {
        let mut v = self.0.clone();
        for &i in sites {
            v[i] = -v[i];
        }
        SpinConfig(v)
    }

    /// Sites where `self` and `other` differ. Lengths must match.
    pub fn diff_sites(&self, other: &SpinConfig) -> Vec<usize> {
        self.0
            .iter()
            .zip(&other.0)
            .enumerate()
            .filter(|(_, (a, b))| a != b)
            .map(|(i, _)| i)
            .collect()
    }

    /// Plain Hamming distance.
    pub fn hamming(&self, other: &SpinConfig) -> usize {
        self.0.iter().zip(&other.0).filter(|(a, b)| a != b).count()
    }
}

impl fmt::Display for SpinConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &s in &self.0 {
            f.write_str(if s > 0 { "+" } else { "-" })?;
        }
        Ok(())
    }
}

impl FromStr for SpinConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '+' => Ok(1),
                '-' => Ok(-1),
                other => Err(Error::invalid(format!("unexpected spin character '{other}'"))),
            })
            .collect::<Result<Vec<i8>>>()
            .map(SpinConfig)
    }
}

/// Overlap `q_ab = (1/N) sum_i a_i b_i`.
pub fn overlap(a: &SpinConfig, b: &SpinConfig) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::invalid(format!(
            "overlap needs equal non-zero lengths (got {} and {})",
            a.len(),
            b.len()
        )));
    }
    let dot: i64 = a.0.iter().zip(&b.0).map(|(x, y)| i64::from(x * y)).sum();
    Ok(dot as f64 / a.len() as f64)
}
