//! Eager greedy best-first search with FIFO tie-breaking.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::time::Instant;

use rustc_hash::FxHashMap;

use super::heuristic::HAdd;
use super::{PlanError, SearchStats};
use crate::fact::State;
use crate::task::{ActionId, GroundTask};

const NO_PARENT: u32 = u32::MAX;
const CLOCK_CHECK_EVERY: u64 = 64;

struct Node {
    state: State,
    parent: u32,
    action: u32,
}

fn unmet(task: &GroundTask, s: &State) -> usize {
    task.goals.iter().filter(|&&g| !s.contains(g)).count()
}

fn path(nodes: &[Node], mut i: u32) -> Vec<ActionId> {
    let mut steps = Vec::new();
    while nodes[i as usize].parent != NO_PARENT {
        steps.push(nodes[i as usize].action as ActionId);
        i = nodes[i as usize].parent;
    }
    steps.reverse();
    steps
}

/// Runs GBFS over `actions` (in that successor order) from `s0`.
///
/// Goals are tested when a node is generated. Duplicate states are never
/// re-opened. Ties on h go to the state with fewer unmet goals, then to the
/// earlier-generated node.
pub fn gbfs(
    task: &GroundTask,
    actions: &[ActionId],
    s0: &State,
    deadline: Option<Instant>,
    stats: &mut SearchStats,
) -> Result<Vec<ActionId>, PlanError> {
    let s0 = s0.resized(task.num_facts());
    stats.generated += 1;
    if task.goal_reached(&s0) {
        return Ok(Vec::new());
    }
    let mut h = HAdd::new(task, actions.to_vec());
    stats.evaluated += 1;
    let Some(h0) = h.eval(&s0) else {
        return Err(PlanError::Unsolvable);
    };

    let mut nodes = vec![Node {
        state: s0.clone(),
        parent: NO_PARENT,
        action: 0,
    }];
    let mut seen: FxHashMap<Box<[usize]>, ()> = FxHashMap::default();
    seen.insert(s0.blocks().into(), ());
    let mut open = BinaryHeap::new();
    let mut counter = 0u64;
    open.push(Reverse((h0, unmet(task, &s0), counter, 0u32)));

    while let Some(Reverse((_, _, _, idx))) = open.pop() {
        stats.expanded += 1;
        if stats.expanded.is_multiple_of(CLOCK_CHECK_EVERY) && deadline.is_some_and(|d| Instant::now() >= d) {
            return Err(PlanError::Timeout);
        }
        for &a in actions {
            let act = task.action(a);
            let parent = &nodes[idx as usize].state;
            if !act.applicable(parent) {
                continue;
            }
            let mut child = parent.clone();
            act.progress(&mut child);
            stats.generated += 1;
            if seen.contains_key(child.blocks()) {
                continue;
            }
            seen.insert(child.blocks().into(), ());
            let goal = task.goal_reached(&child);
            nodes.push(Node {
                state: child,
                parent: idx,
                action: a as u32,
            });
            let child_idx = (nodes.len() - 1) as u32;
            if goal {
                return Ok(path(&nodes, child_idx));
            }
            stats.evaluated += 1;
            let child = &nodes[child_idx as usize].state;
            if let Some(hv) = h.eval(child) {
                counter += 1;
                open.push(Reverse((hv, unmet(task, child), counter, child_idx)));
            }
        }
    }
    Err(PlanError::Unsolvable)
}
