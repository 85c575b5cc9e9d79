use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use super::system::{distance, System};
use crate::error::arg_err;
use crate::Result;

/// Where a node sits in space.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Anchor {
    /// At the position of one atom: leaves, and the per-atom
    /// neighbourhood nodes centred on that atom.
    Atom(usize),
    /// At the centroid of the node's part (the root).
    Centroid,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SchemeNode {
    pub id: usize,
    /// Indices of the atoms this subsystem contains.
    pub part: BTreeSet<usize>,
    pub level: usize,
    pub anchor: Anchor,
    pub position: [f64; 3],
}

/// A DAG of subsystems. Edges are stored as `(child, parent)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CompositionScheme {
    pub nodes: Vec<SchemeNode>,
    pub edges: Vec<(usize, usize)>,
    pub root: usize,
}

impl CompositionScheme {
    /// Children of every node, in edge order.
    pub fn children(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.nodes.len()];
        for &(c, p) in &self.edges {
            if p < out.len() {
                out[p].push(c);
            }
        }
        out
    }

    pub fn depth(&self) -> usize {
        self.nodes.iter().map(|n| n.level).max().unwrap_or(0)
    }
}

/// A broken composition-scheme invariant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    /// An edge names a node id that does not exist.
    UnknownNode {
        child: usize,
        parent: usize,
    },
    Cycle {
        nodes: Vec<usize>,
    },
    /// Zero or several parentless nodes, or the declared root has parents.
    UniqueRoot {
        roots: Vec<usize>,
    },
    RootNotWhole {
        root: usize,
    },
    LeafNotSingleton {
        node: usize,
    },
    /// The child's part is not contained in the parent's.
    DescendantSubset {
        child: usize,
        parent: usize,
    },
    /// An internal node's part differs from the union of its children's.
    PartNotUnion {
        node: usize,
    },
}

impl Violation {
    pub fn name(&self) -> &'static str {
        match self {
            Self::UnknownNode { .. } => "unknown node",
            Self::Cycle { .. } => "acyclic",
            Self::UniqueRoot { .. } => "unique root",
            Self::RootNotWhole { .. } => "root covers system",
            Self::LeafNotSingleton { .. } => "leaf singleton",
            Self::DescendantSubset { .. } => "descendant subset",
            Self::PartNotUnion { .. } => "part union",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: ", self.name())?;
        match self {
            Self::UnknownNode { child, parent } => write!(f, "edge {child} -> {parent}"),
            Self::Cycle { nodes } => write!(f, "nodes {nodes:?}"),
            Self::UniqueRoot { roots } => write!(f, "roots {roots:?}"),
            Self::RootNotWhole { root }
            | Self::LeafNotSingleton { node: root }
            | Self::PartNotUnion { node: root } => {
                write!(f, "node {root}")
            }
            Self::DescendantSubset { child, parent } => {
                write!(f, "child {child} of parent {parent}")
            }
        }
    }
}

/// Checks every composition-scheme invariant and reports all violations.
pub fn validate_scheme(scheme: &CompositionScheme) -> std::result::Result<(), Vec<Violation>> {
    let n = scheme.nodes.len();
    let mut violations = Vec::new();
    let edges: Vec<(usize, usize)> = scheme
        .edges
        .iter()
        .copied()
        .filter(|&(c, p)| {
            let ok = c < n && p < n;
            if !ok {
                violations.push(Violation::UnknownNode {
                    child: c,
                    parent: p,
                });
            }
            ok
        })
        .collect();

    let mut children = vec![Vec::new(); n];
    let mut parents = vec![0usize; n];
    for &(c, p) in &edges {
        children[p].push(c);
        parents[c] += 1;
    }

    // Kahn's algorithm from the leaves up.
    let mut pending: Vec<usize> = children.iter().map(Vec::len).collect();
    let mut parents_of = vec![Vec::new(); n];
    for &(c, p) in &edges {
        parents_of[c].push(p);
    }
    let mut queue: VecDeque<usize> = (0..n).filter(|&i| pending[i] == 0).collect();
    let mut seen = 0;
    while let Some(i) = queue.pop_front() {
        seen += 1;
        for &p in &parents_of[i] {
            pending[p] -= 1;
            if pending[p] == 0 {
                queue.push_back(p);
            }
        }
    }
    if seen < n {
        violations.push(Violation::Cycle {
            nodes: (0..n).filter(|&i| pending[i] > 0).collect(),
        });
    }

    let roots: Vec<usize> = (0..n).filter(|&i| parents[i] == 0).collect();
    if roots.len() != 1 || roots[0] != scheme.root {
        violations.push(Violation::UniqueRoot { roots });
    }
    let whole: BTreeSet<usize> = scheme
        .nodes
        .iter()
        .flat_map(|nd| nd.part.iter().copied())
        .collect();
    if scheme.root < n && scheme.nodes[scheme.root].part != whole {
        violations.push(Violation::RootNotWhole { root: scheme.root });
    }

    for (i, node) in scheme.nodes.iter().enumerate() {
        if children[i].is_empty() {
            if node.part.len() != 1 {
                violations.push(Violation::LeafNotSingleton { node: i });
            }
        } else {
            let union: BTreeSet<usize> = children[i]
                .iter()
                .flat_map(|&c| scheme.nodes[c].part.iter().copied())
                .collect();
            if union != node.part {
                violations.push(Violation::PartNotUnion { node: i });
            }
        }
    }
    for &(c, p) in &edges {
        if !scheme.nodes[c].part.is_subset(&scheme.nodes[p].part) {
            violations.push(Violation::DescendantSubset {
                child: c,
                parent: p,
            });
        }
    }

    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

fn centroid(positions: &[[f64; 3]], part: &BTreeSet<usize>) -> [f64; 3] {
    let mut c = [0.0; 3];
    for &i in part {
        for k in 0..3 {
            c[k] += positions[i][k];
        }
    }
    let m = part.len() as f64;
    c.map(|x| x / m)
}

/// Neighbourhood scheme: leaves are atoms; the level-`k` node of atom `i`
/// unites the level-`(k-1)` parts of every atom within `cutoff` of `i`
/// (including `i`); the root unites the top level. Per-atom nodes sit on
/// their atom, the root at the centroid.
pub fn build_scheme(system: &System, cutoff: f64, depth: usize) -> Result<CompositionScheme> {
    if depth == 0 {
        return arg_err("scheme depth must be at least 1");
    }
    if !(cutoff > 0.0) {
        return arg_err(format!("cutoff must be positive, got {cutoff}"));
    }
    system.validate()?;
    let n = system.len();
    let pos = &system.positions;
    let neighbours: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| distance(pos[i], pos[j]) <= cutoff)
                .collect()
        })
        .collect();

    let mut nodes = Vec::with_capacity(n * (depth + 1) + 1);
    let mut edges = Vec::new();
    for i in 0..n {
        nodes.push(SchemeNode {
            id: i,
            part: BTreeSet::from([i]),
            level: 0,
            anchor: Anchor::Atom(i),
            position: pos[i],
        });
    }
    for level in 1..=depth {
        let below = (level - 1) * n;
        for i in 0..n {
            let id = level * n + i;
            let mut part = BTreeSet::new();
            for &j in &neighbours[i] {
                part.extend(nodes[below + j].part.iter().copied());
                edges.push((below + j, id));
            }
            nodes.push(SchemeNode {
                id,
                part,
                level,
                anchor: Anchor::Atom(i),
                position: pos[i],
            });
        }
    }
    let root = (depth + 1) * n;
    let top = depth * n;
    let part: BTreeSet<usize> = (0..n).collect();
    edges.extend((0..n).map(|i| (top + i, root)));
    let (anchor, position) = if n == 1 {
        (Anchor::Atom(0), pos[0])
    } else {
        (Anchor::Centroid, centroid(pos, &part))
    };
    nodes.push(SchemeNode {
        id: root,
        part,
        level: depth + 1,
        anchor,
        position,
    });
    Ok(CompositionScheme { nodes, edges, root })
}
