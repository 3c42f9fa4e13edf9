use std::collections::VecDeque;

use super::{ElemId, MeshForest};
use crate::error::{AvemError, Result};

/// The coarsest common refinement of two meshes grown from the same root
/// partition: every element refined in either input is refined in the result.
pub fn overlay(a: &MeshForest, b: &MeshForest) -> Result<MeshForest> {
    let n_root = root_node_count(a);
    if a.roots().len() != b.roots().len() || n_root != root_node_count(b) {
        return Err(AvemError::RootMismatch);
    }
    if (0..n_root).any(|i| a.node(i).xy != b.node(i).xy) {
        return Err(AvemError::RootMismatch);
    }
    for (&ra, &rb) in a.roots().iter().zip(b.roots()) {
        let (ea, eb) = (a.element(ra), b.element(rb));
        let pa = ea.corners.map(|n| a.node(n).xy);
        let pb = eb.corners.map(|n| b.node(n).xy);
        if pa != pb {
            return Err(AvemError::RootMismatch);
        }
    }
    if a.frame() != b.frame() {
        return Err(AvemError::RootMismatch);
    }

    let mut out = root_copy(a)?;
    // Each queue entry pairs an element of the result with its counterparts.
    let mut queue: VecDeque<(ElemId, Option<ElemId>, Option<ElemId>)> =
        a.roots().iter().zip(b.roots()).map(|(&ra, &rb)| (ra, Some(ra), Some(rb))).collect();
    while let Some((c, ea, eb)) = queue.pop_front() {
        let ka = ea.and_then(|e| a.element(e).children);
        let kb = eb.and_then(|e| b.element(e).children);
        if ka.is_none() && kb.is_none() {
            continue;
        }
        let kids = out.bisect(c)?;
        for i in 0..2 {
            queue.push_back((kids[i], ka.map(|k| k[i]), kb.map(|k| k[i])));
        }
    }
    Ok(out)
}

fn root_node_count(m: &MeshForest) -> usize {
    m.nodes().iter().take_while(|n| n.parents.is_none()).count()
}

fn root_copy(m: &MeshForest) -> Result<MeshForest> {
    let n_root = root_node_count(m);
    let nodes = m.nodes()[..n_root].to_vec();
    let elements = m
        .roots()
        .iter()
        .map(|&r| {
            let mut e = m.element(r).clone();
            e.alive = true;
            e.children = None;
            e
        })
        .collect();
    let mut out = MeshForest::from_parts(nodes, elements, m.frame())?;
    for node in 0..n_root {
        out.nodes[node].status = super::NodeStatus::Proper;
        out.nodes[node].lambda = 0;
    }
    Ok(out)
}
