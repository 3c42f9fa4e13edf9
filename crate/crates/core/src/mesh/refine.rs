//! Refinement that keeps the global index bounded.
//!
//! Bisecting a single element may push the index of the new midpoint above
//! the admissible bound `Λ`. In that case the element facing the refinement
//! edge has to be refined first, which may in turn require refining the
//! element facing *its* refinement edge, and so on. The resulting sequence of
//! elements is the refinement chain of the marked element.

use super::{ElemId, MeshForest};
use crate::error::{AvemError, Result};

/// Marker for an unbounded global index: every bisection is admissible.
pub const UNBOUNDED: u32 = u32::MAX;

/// What happened while refining one marked element.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChainReport {
    pub marked: ElemId,
    /// Levels of the chain elements, starting with the marked one.
    pub levels: Vec<u32>,
    pub bisections: usize,
    /// Largest level among the elements created.
    pub max_new_level: u32,
}

impl ChainReport {
    pub fn chain_len(&self) -> usize {
        self.levels.len()
    }

    pub fn marked_level(&self) -> u32 {
        self.levels[0]
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RefineReport {
    pub chains: Vec<ChainReport>,
}

impl RefineReport {
    pub fn bisections(&self) -> usize {
        self.chains.iter().map(|c| c.bisections).sum()
    }
}

/// One link of a chain: the element and whether it is compatible with its
/// predecessor (always `true` for the first link).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ChainLink {
    pub element: ElemId,
    pub compatible: bool,
}

impl MeshForest {
    /// The refinement chain of `e` for the admissibility bound `max_index`.
    pub fn chain(&self, e: ElemId, max_index: u32) -> Result<Vec<ChainLink>> {
        let mut links = vec![ChainLink { element: e, compatible: true }];
        let guard = self.num_alive() + 1;
        let mut cur = e;
        loop {
            let lambda = self.prospective_lambda(cur)?;
            if lambda <= max_index {
                break;
            }
            if lambda > max_index.saturating_add(1) {
                return Err(AvemError::ChainInvariant {
                    element: cur,
                    reason: format!("prospective index {lambda} exceeds bound {max_index} by more than one"),
                });
            }
            let next = self.facing_element(cur)?.ok_or_else(|| AvemError::ChainInvariant {
                element: cur,
                reason: "no element faces the refinement edge".into(),
            })?;
            let compatible = self.compatible(cur, next)?;
            links.push(ChainLink { element: next, compatible });
            if compatible {
                break;
            }
            if links.len() > guard {
                return Err(AvemError::ChainInvariant {
                    element: e,
                    reason: "chain does not terminate".into(),
                });
            }
            cur = next;
        }
        Ok(links)
    }

    /// Refines `e` together with its chain, last link first, so that the
    /// global index never exceeds `max_index` afterwards.
    pub fn create_admissible_chain(&mut self, e: ElemId, max_index: u32) -> Result<ChainReport> {
        let links = self.chain(e, max_index)?;
        let levels: Vec<u32> = links.iter().map(|l| self.element(l.element).level).collect();
        let mut bisections = 0;
        let mut max_new_level = 0;
        let mut record = |mesh: &MeshForest, kids: [ElemId; 2]| {
            bisections += 1;
            max_new_level = max_new_level.max(mesh.element(kids[0]).level);
        };
        for k in (1..links.len()).rev() {
            let link = links[k];
            let kids = self.bisect(link.element)?;
            record(self, kids);
            if !link.compatible {
                let prev = links[k - 1].element;
                let child = self
                    .facing_element(prev)?
                    .filter(|c| kids.contains(c))
                    .ok_or_else(|| AvemError::ChainInvariant {
                        element: link.element,
                        reason: format!("no child faces the refinement edge of element {prev}"),
                    })?;
                let grandkids = self.bisect(child)?;
                record(self, grandkids);
            }
        }
        let kids = self.bisect(e)?;
        record(self, kids);
        Ok(ChainReport { marked: e, levels, bisections, max_new_level })
    }

    /// Refines every marked element that is still alive when its turn comes,
    /// in increasing id order.
    pub fn refine(&mut self, marked: &[ElemId], max_index: u32) -> Result<RefineReport> {
        let mut order = marked.to_vec();
        order.sort_unstable();
        order.dedup();
        let mut report = RefineReport::default();
        for e in order {
            if e >= self.elements().len() {
                return Err(AvemError::UnknownElement(e));
            }
            if self.is_alive(e) {
                report.chains.push(self.create_admissible_chain(e, max_index)?);
            }
        }
        Ok(report)
    }

    /// Bisects every element of the partition once, closing with conforming refinement.
    pub fn refine_uniform(&mut self) -> Result<RefineReport> {
        let all: Vec<ElemId> = self.alive_elements().collect();
        self.refine(&all, 0)
    }
}
