//! Plain-text serialization of a full bisection forest.
//!
//! ```text
//! avem-mesh 1
//! nodes <N>
//! <id> <x> <y> <proper|hanging> <parent1|-> <parent2|-> <lambda>
//! elements <M>
//! <id> <nv> <c1> <c2> <level> <parent|-> <child1|-> <child2|-> <alive 0|1>
//! ```
//!
//! Dead elements are kept so the file describes the whole forest. Coordinates
//! are written in shortest round-trip form.

use std::fmt::Write as _;

use super::{CoordFrame, ElementRecord, MeshForest, NodeRecord, NodeStatus};
use crate::error::{AvemError, Result};

pub const MESH_FORMAT_VERSION: u32 = 1;

pub fn write_mesh(mesh: &MeshForest) -> String {
    let mut s = String::new();
    let opt = |v: Option<usize>| v.map_or_else(|| "-".to_string(), |x| x.to_string());
    writeln!(s, "avem-mesh {MESH_FORMAT_VERSION}").unwrap();
    writeln!(s, "nodes {}", mesh.nodes.len()).unwrap();
    for n in &mesh.nodes {
        let status = match n.status {
            NodeStatus::Proper => "proper",
            NodeStatus::Hanging => "hanging",
        };
        let [p, q] = n.parents.map_or([None, None], |[p, q]| [Some(p), Some(q)]);
        writeln!(s, "{} {:?} {:?} {status} {} {} {}", n.id, n.xy[0], n.xy[1], opt(p), opt(q), n.lambda).unwrap();
    }
    writeln!(s, "elements {}", mesh.elements.len()).unwrap();
    for e in &mesh.elements {
        let [c1, c2] = e.children.map_or([None, None], |[a, b]| [Some(a), Some(b)]);
        writeln!(
            s,
            "{} {} {} {} {} {} {} {} {}",
            e.id,
            e.corners[0],
            e.corners[1],
            e.corners[2],
            e.level,
            opt(e.parent),
            opt(c1),
            opt(c2),
            u8::from(e.alive)
        )
        .unwrap();
    }
    s
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn next_fields(&mut self) -> Result<(usize, Vec<&'a str>)> {
        for (i, line) in self.inner.by_ref() {
            let line = line.trim();
            if !line.is_empty() && !line.starts_with('#') {
                return Ok((i + 1, line.split_whitespace().collect()));
            }
        }
        Err(AvemError::Parse { line: 0, msg: "unexpected end of input".into() })
    }
}

fn perr(line: usize, msg: impl Into<String>) -> AvemError {
    AvemError::Parse { line, msg: msg.into() }
}

fn num<T: std::str::FromStr>(line: usize, s: &str) -> Result<T> {
    s.parse().map_err(|_| perr(line, format!("cannot parse `{s}`")))
}

fn opt_num(line: usize, s: &str) -> Result<Option<usize>> {
    if s == "-" {
        Ok(None)
    } else {
        num(line, s).map(Some)
    }
}

fn header(lines: &mut Lines, key: &str) -> Result<usize> {
    let (ln, f) = lines.next_fields()?;
    if f.len() != 2 || f[0] != key {
        return Err(perr(ln, format!("expected `{key} <count>`")));
    }
    num(ln, f[1])
}

pub fn parse_mesh(text: &str) -> Result<MeshForest> {
    let mut lines = Lines { inner: text.lines().enumerate() };
    let (ln, f) = lines.next_fields()?;
    if f.len() != 2 || f[0] != "avem-mesh" {
        return Err(perr(ln, "missing `avem-mesh` header"));
    }
    let version: u32 = num(ln, f[1])?;
    if version != MESH_FORMAT_VERSION {
        return Err(perr(ln, format!("unsupported format version {version}")));
    }

    let n_nodes = header(&mut lines, "nodes")?;
    let mut nodes = Vec::with_capacity(n_nodes);
    for id in 0..n_nodes {
        let (ln, f) = lines.next_fields()?;
        if f.len() != 7 {
            return Err(perr(ln, "node lines have 7 fields"));
        }
        if num::<usize>(ln, f[0])? != id {
            return Err(perr(ln, format!("expected node id {id}")));
        }
        let status = match f[3] {
            "proper" => NodeStatus::Proper,
            "hanging" => NodeStatus::Hanging,
            other => return Err(perr(ln, format!("unknown node status `{other}`"))),
        };
        let parents = match (opt_num(ln, f[4])?, opt_num(ln, f[5])?) {
            (None, None) => None,
            (Some(p), Some(q)) if p < id && q < id && p != q => Some([p, q]),
            _ => return Err(perr(ln, "parents must be two distinct earlier nodes or `- -`")),
        };
        nodes.push(NodeRecord {
            id,
            xy: [num(ln, f[1])?, num(ln, f[2])?],
            status,
            parents,
            lambda: num(ln, f[6])?,
            on_boundary: false,
            ixy: [0, 0],
        });
    }
    let roots: Vec<_> = nodes.iter().filter(|n| n.parents.is_none()).map(|n| n.xy).collect();
    if roots.len() < 3 {
        return Err(AvemError::InvalidMesh("fewer than three root nodes".into()));
    }
    let frame = CoordFrame::from_points(&roots)?;
    for id in 0..nodes.len() {
        nodes[id].ixy = match nodes[id].parents {
            None => frame.snap(nodes[id].xy),
            Some([p, q]) => {
                let (a, b) = (nodes[p].ixy, nodes[q].ixy);
                if (a[0] + b[0]) % 2 != 0 || (a[1] + b[1]) % 2 != 0 {
                    return Err(AvemError::ResolutionExhausted(p, q));
                }
                [(a[0] + b[0]) / 2, (a[1] + b[1]) / 2]
            }
        };
    }

    let n_elems = header(&mut lines, "elements")?;
    let mut elements = Vec::with_capacity(n_elems);
    for id in 0..n_elems {
        let (ln, f) = lines.next_fields()?;
        if f.len() != 9 {
            return Err(perr(ln, "element lines have 9 fields"));
        }
        if num::<usize>(ln, f[0])? != id {
            return Err(perr(ln, format!("expected element id {id}")));
        }
        let corners = [num(ln, f[1])?, num(ln, f[2])?, num(ln, f[3])?];
        if corners.iter().any(|&c: &usize| c >= n_nodes) {
            return Err(perr(ln, "corner refers to a missing node"));
        }
        let children = match (opt_num(ln, f[6])?, opt_num(ln, f[7])?) {
            (None, None) => None,
            (Some(a), Some(b)) if a < n_elems && b < n_elems => Some([a, b]),
            _ => return Err(perr(ln, "children must be two element ids or `- -`")),
        };
        let alive = match f[8] {
            "1" => true,
            "0" => false,
            other => return Err(perr(ln, format!("alive flag must be 0 or 1, got `{other}`"))),
        };
        if alive == children.is_some() {
            return Err(perr(ln, "an element is alive exactly when it has no children"));
        }
        elements.push(ElementRecord {
            id,
            corners,
            level: num(ln, f[4])?,
            parent: opt_num(ln, f[5])?,
            children,
            alive,
        });
    }
    if lines.next_fields().is_ok() {
        return Err(AvemError::Parse { line: 0, msg: "trailing content after elements".into() });
    }
    for e in &elements {
        if let Some(p) = e.parent {
            if p >= elements.len() || !elements[p].children.is_some_and(|k| k.contains(&e.id)) {
                return Err(AvemError::InvalidMesh(format!("element {} has inconsistent parent", e.id)));
            }
        }
    }

    let mesh = MeshForest::from_parts(nodes, elements, frame)?;
    let mut lambda = vec![0u32; mesh.nodes.len()];
    for id in 0..mesh.nodes.len() {
        let expected = match mesh.nodes[id].parents {
            Some([p, q]) if mesh.covered(super::seg(p, q), None) => {
                lambda[id] = lambda[p].max(lambda[q]) + 1;
                NodeStatus::Hanging
            }
            _ => NodeStatus::Proper,
        };
        let node = &mesh.nodes[id];
        if node.status != expected || node.lambda != lambda[id] {
            return Err(AvemError::InvalidMesh(format!("node {id} has inconsistent status or index")));
        }
    }
    Ok(mesh)
}
