//! Path-flow traffic equilibrium with affine link costs `T(f) = C f + d`.
//!
//! With link-route incidence `L` (links x paths) the VI operator is
//! `F(h) = L^T (C L h + d)` over the product of per-OD scaled simplices
//! `{h >= 0, sum of path flows = demand}`.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::problem::{Mapping, ProblemMeta, VIProblem};
use crate::set::{FeasibleSet, SimplexProduct};

/// Cap on simple paths enumerated per OD pair.
pub const PATH_CAP: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct OdPair {
    pub origin: usize,
    pub dest: usize,
    pub demand: f64,
}

/// Directed network with 1-based node ids. Links and paths are stored
/// 0-based internally; link `i` is `LINK i+1` in the text format.
#[derive(Debug, Clone, PartialEq)]
pub struct TrafficNetwork {
    nodes: usize,
    links: Vec<(usize, usize)>,
    od_pairs: Vec<OdPair>,
    paths: Vec<Vec<Vec<usize>>>,
    cost_matrix: DMatrix<f64>,
    cost_offset: DVector<f64>,
}

impl TrafficNetwork {
    /// Validates the network. When `paths` is `None`, simple paths are
    /// enumerated depth-first in link order.
    pub fn new(
        nodes: usize,
        links: Vec<(usize, usize)>,
        od_pairs: Vec<OdPair>,
        paths: Option<Vec<Vec<Vec<usize>>>>,
        cost_matrix: DMatrix<f64>,
        cost_offset: DVector<f64>,
    ) -> Result<Self> {
        for (i, &(tail, head)) in links.iter().enumerate() {
            if !(1..=nodes).contains(&tail) || !(1..=nodes).contains(&head) {
                return Err(Error::Validation(format!("link {} references an unknown node", i + 1)));
            }
        }
        for (k, od) in od_pairs.iter().enumerate() {
            if !(od.demand > 0.0) || !od.demand.is_finite() {
                return Err(Error::Validation(format!("demand must be positive (OD pair {})", k + 1)));
            }
            if !(1..=nodes).contains(&od.origin) || !(1..=nodes).contains(&od.dest) || od.origin == od.dest {
                return Err(Error::Validation(format!("OD pair {} has invalid endpoints", k + 1)));
            }
        }
        let n = links.len();
        if cost_matrix.shape() != (n, n) || cost_offset.len() != n {
            return Err(Error::Validation(format!(
                "cost must be {n}x{n} with a length-{n} offset, got {:?} and {}",
                cost_matrix.shape(),
                cost_offset.len()
            )));
        }
        let mut network = Self {
            nodes,
            links,
            od_pairs,
            paths: Vec::new(),
            cost_matrix,
            cost_offset,
        };
        network.paths = match paths {
            Some(paths) => paths,
            None => (0..network.od_pairs.len())
                .map(|k| network.enumerate_paths(k))
                .collect::<Result<_>>()?,
        };
        network.validate_paths()?;
        Ok(network)
    }

    fn validate_paths(&self) -> Result<()> {
        if self.paths.len() != self.od_pairs.len() {
            return Err(Error::Validation("every OD pair needs a path list".into()));
        }
        for (k, (od, paths)) in self.od_pairs.iter().zip(&self.paths).enumerate() {
            if paths.is_empty() {
                return Err(Error::Validation(format!("OD pair {} has no path", k + 1)));
            }
            for path in paths {
                let mut at = od.origin;
                for &link in path {
                    let &(tail, head) = self
                        .links
                        .get(link)
                        .ok_or_else(|| Error::Validation(format!("unknown link {}", link + 1)))?;
                    if tail != at {
                        return Err(Error::Validation(format!(
                            "path of OD pair {} is not connected at link {}",
                            k + 1,
                            link + 1
                        )));
                    }
                    at = head;
                }
                if at != od.dest {
                    return Err(Error::Validation(format!("path of OD pair {} misses its destination", k + 1)));
                }
            }
        }
        Ok(())
    }

    fn enumerate_paths(&self, od: usize) -> Result<Vec<Vec<usize>>> {
        let OdPair { origin, dest, .. } = self.od_pairs[od];
        let mut found = Vec::new();
        let mut visited = vec![false; self.nodes + 1];
        let mut stack = Vec::new();
        visited[origin] = true;
        self.dfs(origin, dest, &mut visited, &mut stack, &mut found, od)?;
        Ok(found)
    }

    fn dfs(
        &self,
        at: usize,
        dest: usize,
        visited: &mut [bool],
        stack: &mut Vec<usize>,
        found: &mut Vec<Vec<usize>>,
        od: usize,
    ) -> Result<()> {
        if at == dest {
            if found.len() == PATH_CAP {
                return Err(Error::PathEnumerationOverflow { od, cap: PATH_CAP });
            }
            found.push(stack.clone());
            return Ok(());
        }
        for (link, &(tail, head)) in self.links.iter().enumerate() {
            if tail == at && !visited[head] {
                visited[head] = true;
                stack.push(link);
                self.dfs(head, dest, visited, stack, found, od)?;
                stack.pop();
                visited[head] = false;
            }
        }
        Ok(())
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn links(&self) -> &[(usize, usize)] {
        &self.links
    }

    pub fn od_pairs(&self) -> &[OdPair] {
        &self.od_pairs
    }

    pub fn paths(&self) -> &[Vec<Vec<usize>>] {
        &self.paths
    }

    pub fn cost_matrix(&self) -> &DMatrix<f64> {
        &self.cost_matrix
    }

    pub fn cost_offset(&self) -> &DVector<f64> {
        &self.cost_offset
    }

    pub fn demands(&self) -> DVector<f64> {
        DVector::from_iterator(self.od_pairs.len(), self.od_pairs.iter().map(|od| od.demand))
    }

    pub fn path_count(&self) -> usize {
        self.paths.iter().map(Vec::len).sum()
    }

    /// Link-route incidence, one column per path in OD order.
    pub fn incidence(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.links.len(), self.path_count());
        for (col, path) in self.paths.iter().flatten().enumerate() {
            for &link in path {
                m[(link, col)] = 1.0;
            }
        }
        m
    }

    /// Link flows `f = L h`.
    pub fn link_flows(&self, h: &DVector<f64>) -> DVector<f64> {
        self.incidence() * h
    }

    /// Per-OD total path flow.
    pub fn od_flows(&self, h: &DVector<f64>) -> DVector<f64> {
        let mut start = 0;
        DVector::from_iterator(
            self.paths.len(),
            self.paths.iter().map(|paths| {
                let total = h.rows(start, paths.len()).sum();
                start += paths.len();
                total
            }),
        )
    }

    pub fn to_problem(&self, name: &str) -> VIProblem {
        let l = self.incidence();
        let matrix = l.transpose() * &self.cost_matrix * &l;
        let offset = l.tr_mul(&self.cost_offset);
        let mapping = Mapping::affine(matrix, offset).expect("consistent shapes");
        let blocks: Vec<(usize, f64)> = self.paths.iter().zip(&self.od_pairs).map(|(p, od)| (p.len(), od.demand)).collect();
        let set = SimplexProduct::from_sizes(&blocks).expect("positive demands and nonempty path sets");
        VIProblem::new(name, mapping, FeasibleSet::SimplexProduct(set)).expect("dimensions agree")
    }

    /// Parses the line-oriented TEP format:
    ///
    /// ```text
    /// NODES n
    /// LINK id tail head          (ids 1..=links, any order)
    /// OD origin dest demand
    /// PATH od_index link_ids...  (optional; 1-based OD index)
    /// COST DIAG v_1 .. v_links   or   COST DENSE followed by one row per link
    /// COSTD v_1 .. v_links
    /// ```
    ///
    /// `#` starts a comment. Paths are enumerated when no `PATH` line is given.
    pub fn parse_tep(text: &str) -> Result<Self> {
        let mut nodes = None;
        let mut links: Vec<(usize, usize, usize)> = Vec::new();
        let mut od_pairs = Vec::new();
        let mut raw_paths: Vec<(usize, usize, Vec<usize>)> = Vec::new();
        let mut cost: Option<DMatrix<f64>> = None;
        let mut offset: Option<Vec<f64>> = None;

        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        while let Some((line, content)) = lines.next() {
            let fields: Vec<&str> = content.split_whitespace().collect();
            let err = |message: String| Error::Parse { line, message };
            let int = |s: &str| s.parse::<usize>().map_err(|_| err(format!("expected an integer, found `{s}`")));
            let num = |s: &str| s.parse::<f64>().map_err(|_| err(format!("expected a number, found `{s}`")));
            let arity = |n: usize| {
                if fields.len() == n {
                    Ok(())
                } else {
                    Err(err(format!("`{}` takes {} fields, found {}", fields[0], n - 1, fields.len() - 1)))
                }
            };
            match fields[0] {
                "NODES" => {
                    arity(2)?;
                    nodes = Some(int(fields[1])?);
                }
                "LINK" => {
                    arity(4)?;
                    links.push((int(fields[1])?, int(fields[2])?, int(fields[3])?));
                }
                "OD" => {
                    arity(4)?;
                    od_pairs.push(OdPair {
                        origin: int(fields[1])?,
                        dest: int(fields[2])?,
                        demand: num(fields[3])?,
                    });
                }
                "PATH" => {
                    if fields.len() < 3 {
                        return Err(err("`PATH` needs an OD index and at least one link".into()));
                    }
                    let ids = fields[2..].iter().map(|s| int(s)).collect::<Result<Vec<_>>>()?;
                    raw_paths.push((line, int(fields[1])?, ids));
                }
                "COST" if fields.get(1) == Some(&"DIAG") => {
                    let values = fields[2..].iter().map(|s| num(s)).collect::<Result<Vec<_>>>()?;
                    cost = Some(DMatrix::from_diagonal(&DVector::from_vec(values)));
                }
                "COST" if fields.get(1) == Some(&"DENSE") => {
                    arity(2)?;
                    let n = links.len();
                    if n == 0 {
                        return Err(err("`COST DENSE` must follow the LINK lines".into()));
                    }
                    let mut values = Vec::with_capacity(n * n);
                    for _ in 0..n {
                        let (row_line, row) = lines.next().ok_or_else(|| err("dense cost ends early".into()))?;
                        let row_err = |s: &str| Error::Parse {
                            line: row_line,
                            message: format!("expected a number, found `{s}`"),
                        };
                        let cells = row
                            .split_whitespace()
                            .map(|s| s.parse::<f64>().map_err(|_| row_err(s)))
                            .collect::<Result<Vec<_>>>()?;
                        if cells.len() != n {
                            return Err(Error::Parse {
                                line: row_line,
                                message: format!("expected {n} entries, found {}", cells.len()),
                            });
                        }
                        values.extend(cells);
                    }
                    cost = Some(DMatrix::from_row_slice(n, n, &values));
                }
                "COSTD" => {
                    offset = Some(fields[1..].iter().map(|s| num(s)).collect::<Result<Vec<_>>>()?);
                }
                other => return Err(err(format!("unknown directive `{other}`"))),
            }
        }

        let nodes = nodes.ok_or_else(|| Error::Validation("missing NODES line".into()))?;
        links.sort_by_key(|&(id, _, _)| id);
        for (i, &(id, _, _)) in links.iter().enumerate() {
            if id != i + 1 {
                return Err(Error::Validation(format!("link ids must be 1..={} without gaps or repeats", links.len())));
            }
        }
        let links: Vec<(usize, usize)> = links.into_iter().map(|(_, t, h)| (t, h)).collect();
        let paths = if raw_paths.is_empty() {
            None
        } else {
            let mut paths = vec![Vec::new(); od_pairs.len()];
            for (line, od, ids) in raw_paths {
                let slot = od.checked_sub(1).and_then(|k| paths.get_mut(k)).ok_or(Error::Parse {
                    line,
                    message: format!("PATH references unknown OD pair {od}"),
                })?;
                let ids = ids
                    .into_iter()
                    .map(|id| {
                        id.checked_sub(1)
                            .filter(|&i| i < links.len())
                            .ok_or_else(|| Error::Validation(format!("unknown link {id}")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                slot.push(ids);
            }
            Some(paths)
        };
        let cost = cost.ok_or_else(|| Error::Validation("missing COST section".into()))?;
        let offset = DVector::from_vec(offset.ok_or_else(|| Error::Validation("missing COSTD line".into()))?);
        Self::new(nodes, links, od_pairs, paths, cost, offset)
    }

    pub fn to_tep(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "NODES {}", self.nodes);
        for (i, (tail, head)) in self.links.iter().enumerate() {
            let _ = writeln!(out, "LINK {} {tail} {head}", i + 1);
        }
        for od in &self.od_pairs {
            let _ = writeln!(out, "OD {} {} {}", od.origin, od.dest, od.demand);
        }
        for (k, paths) in self.paths.iter().enumerate() {
            for path in paths {
                let ids: Vec<String> = path.iter().map(|l| (l + 1).to_string()).collect();
                let _ = writeln!(out, "PATH {} {}", k + 1, ids.join(" "));
            }
        }
        let _ = writeln!(out, "COST DENSE");
        for row in self.cost_matrix.row_iter() {
            let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            let _ = writeln!(out, "{}", cells.join(" "));
        }
        let cells: Vec<String> = self.cost_offset.iter().map(|v| format!("{v}")).collect();
        let _ = writeln!(out, "COSTD {}", cells.join(" "));
        out
    }
}

pub fn load_tep_network(path: impl AsRef<Path>) -> Result<TrafficNetwork> {
    TrafficNetwork::parse_tep(&std::fs::read_to_string(path)?)
}

/// The bundled Nguyen-Dupuis network file (uniform unit costs).
pub const NGUYEN_DUPUIS_TEP: &str = include_str!("../../data/nguyen_dupuis.tep");

const ND_LINKS: [(usize, usize); 19] = [
    (1, 5),
    (1, 12),
    (4, 5),
    (4, 9),
    (5, 6),
    (5, 9),
    (6, 7),
    (6, 10),
    (7, 8),
    (7, 11),
    (8, 2),
    (9, 10),
    (9, 13),
    (10, 11),
    (11, 2),
    (11, 3),
    (12, 6),
    (12, 8),
    (13, 3),
];

const MIDDLE_SCALES: [f64; 18] = [
    0.125, 0.1, 0.1, 0.05, 0.075, 0.075, 0.125, 0.05, 0.125, 0.125, 0.05, 0.05, 0.025, 0.05, 0.1, 0.025, 0.1, 0.1,
];
const MIDDLE_OFFSET: [f64; 19] = [7.0, 9.0, 9.0, 12.0, 3.0, 9.0, 5.0, 13.0, 5.0, 9.0, 9.0, 10.0, 9.0, 6.0, 9.0, 8.0, 7.0, 14.0, 11.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostPreset {
    /// `C = J`, `d = 1`, with `J` the anti-diagonal permutation.
    UniformOnes,
    /// `C = J diag(s)` with the published scales (padded to 19) and offsets.
    PaperMiddle,
    /// `C = J (Y + Z)`, `Y ~ U(0, 0.1)`, `Z ~ U(0, 1)` entrywise, `d ~ U(0, 10)`.
    Random(u64),
}

impl std::str::FromStr for CostPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform_ones" => Ok(CostPreset::UniformOnes),
            "paper_middle" => Ok(CostPreset::PaperMiddle),
            _ => match s.strip_prefix("random") {
                Some("") => Ok(CostPreset::Random(0)),
                Some(rest) => rest
                    .trim_start_matches(['(', ':'])
                    .trim_end_matches(')')
                    .parse()
                    .map(CostPreset::Random)
                    .map_err(|_| Error::BadParameters(format!("bad random seed in `{s}`"))),
                None => Err(Error::BadParameters(format!("unknown cost preset `{s}`"))),
            },
        }
    }
}

fn anti_diagonal(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| if i + j == n - 1 { 1.0 } else { 0.0 })
}

pub fn nguyen_dupuis_network(preset: CostPreset) -> TrafficNetwork {
    let n = ND_LINKS.len();
    let j = anti_diagonal(n);
    let (cost, offset) = match preset {
        CostPreset::UniformOnes => (j, DVector::from_element(n, 1.0)),
        CostPreset::PaperMiddle => {
            let scales = DVector::from_iterator(n, (0..n).map(|i| MIDDLE_SCALES[i.min(MIDDLE_SCALES.len() - 1)]));
            (j * DMatrix::from_diagonal(&scales), DVector::from_column_slice(&MIDDLE_OFFSET))
        }
        CostPreset::Random(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let y = DMatrix::from_fn(n, n, |_, _| rng.gen_range(0.0..0.1));
            let z = DMatrix::from_fn(n, n, |_, _| rng.gen_range(0.0..1.0));
            let d = DVector::from_fn(n, |_, _| rng.gen_range(0.0..10.0));
            (j * (y + z), d)
        }
    };
    let od_pairs = [(1, 2, 400.0), (1, 3, 800.0), (4, 2, 600.0), (4, 3, 200.0)]
        .into_iter()
        .map(|(origin, dest, demand)| OdPair { origin, dest, demand })
        .collect();
    TrafficNetwork::new(13, ND_LINKS.to_vec(), od_pairs, None, cost, offset).expect("Nguyen-Dupuis network is valid")
}

pub fn make_nguyen_dupuis(preset: CostPreset) -> VIProblem {
    let mut notes = Vec::new();
    if preset == CostPreset::PaperMiddle {
        notes.push("published scale list has 18 entries for 19 links; the last scale is repeated".to_string());
    }
    let network = nguyen_dupuis_network(preset);
    let problem = network.to_problem("nguyen_dupuis");
    problem.with_meta(ProblemMeta {
        recommended_lambda: Some(1.0),
        notes,
        ..ProblemMeta::default()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn topology_and_demands() {
        let net = nguyen_dupuis_network(CostPreset::UniformOnes);
        assert_eq!(net.nodes(), 13);
        assert_eq!(net.links().len(), 19);
        assert_eq!(net.od_pairs().len(), 4);
        assert_eq!(net.demands().as_slice(), &[400.0, 800.0, 600.0, 200.0]);
        let counts: Vec<usize> = net.paths().iter().map(Vec::len).collect();
        assert_eq!(counts, vec![8, 6, 5, 6]);
        let inc = net.incidence();
        assert!(inc.iter().all(|&v| v == 0.0 || v == 1.0));
    }

    #[test]
    fn barycentric_start_is_feasible() {
        let p = make_nguyen_dupuis(CostPreset::Random(3));
        let net = nguyen_dupuis_network(CostPreset::Random(3));
        let h0 = p.feasible_set().reference_point();
        assert!(h0.iter().all(|&v| v >= 0.0));
        assert!((net.od_flows(&h0) - net.demands()).amax() <= 1e-10);
        assert!(p.feasible_set().contains(&h0, 1e-10));
    }

    #[test]
    fn bundled_file_matches_constructor() {
        assert_eq!(
            TrafficNetwork::parse_tep(NGUYEN_DUPUIS_TEP).unwrap(),
            nguyen_dupuis_network(CostPreset::UniformOnes)
        );
        let net = nguyen_dupuis_network(CostPreset::PaperMiddle);
        assert_eq!(TrafficNetwork::parse_tep(&net.to_tep()).unwrap(), net);
    }

    #[test]
    fn tep_validation_errors() {
        let base = "NODES 3\nLINK 1 1 2\nLINK 2 2 3\nCOST DIAG 1 1\nCOSTD 0 0\n";
        assert!(TrafficNetwork::parse_tep(&format!("{base}OD 1 3 5\n")).is_ok());
        match TrafficNetwork::parse_tep(&format!("{base}OD 1 3 -1\n")) {
            Err(Error::Validation(msg)) => assert!(msg.contains("demand must be positive")),
            other => panic!("unexpected {other:?}"),
        }
        match TrafficNetwork::parse_tep(&format!("{base}OD 1 3 5\nPATH 1 1 7\n")) {
            Err(Error::Validation(msg)) => assert!(msg.contains("unknown link")),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            TrafficNetwork::parse_tep("NODES 3\nLINK 1 1 x\n"),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn preset_parsing() {
        assert_eq!("random(7)".parse::<CostPreset>().unwrap(), CostPreset::Random(7));
        assert_eq!("random:7".parse::<CostPreset>().unwrap(), CostPreset::Random(7));
        assert_eq!("paper_middle".parse::<CostPreset>().unwrap(), CostPreset::PaperMiddle);
        assert!("bpr".parse::<CostPreset>().is_err());
    }
}
