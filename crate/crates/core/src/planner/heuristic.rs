//! Additive delete-relaxation heuristic.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::fact::{FactId, State};
use crate::task::{ActionId, GroundTask};

const INF: u64 = u64::MAX;
/// Costs below this go to bucket queues; larger ones to a binary heap.
const BUCKETS: u64 = 1 << 20;

/// Precomputed relaxation over a subset of a task's actions.
pub struct HAdd<'t> {
    task: &'t GroundTask,
    actions: Vec<ActionId>,
    /// fact -> positions in `actions` that need it.
    consumers: Vec<Vec<u32>>,
    no_pre: Vec<u32>,
    cost: Vec<u64>,
    remaining: Vec<u32>,
    accum: Vec<u64>,
    buckets: Vec<Vec<FactId>>,
    overflow: BinaryHeap<Reverse<(u64, FactId)>>,
    is_goal: Vec<bool>,
}

impl<'t> HAdd<'t> {
    pub fn new(task: &'t GroundTask, actions: Vec<ActionId>) -> Self {
        let n = task.num_facts();
        let mut consumers = vec![Vec::new(); n];
        let mut no_pre = Vec::new();
        for (i, &a) in actions.iter().enumerate() {
            let pre = &task.action(a).pre;
            if pre.is_empty() {
                no_pre.push(i as u32);
            }
            for &f in pre {
                consumers[f].push(i as u32);
            }
        }
        let mut is_goal = vec![false; n];
        for &g in &task.goals {
            is_goal[g] = true;
        }
        HAdd {
            task,
            remaining: vec![0; actions.len()],
            accum: vec![0; actions.len()],
            actions,
            consumers,
            no_pre,
            cost: vec![INF; n],
            buckets: Vec::new(),
            overflow: BinaryHeap::new(),
            is_goal,
        }
    }

    pub fn for_all_actions(task: &'t GroundTask) -> Self {
        HAdd::new(task, (0..task.actions.len()).collect())
    }

    /// `None` when some goal is unreachable in the relaxation.
    pub fn eval(&mut self, s: &State) -> Option<u64> {
        let task = self.task;
        self.cost.fill(INF);
        for b in &mut self.buckets {
            b.clear();
        }
        self.overflow.clear();
        for (i, &a) in self.actions.iter().enumerate() {
            self.remaining[i] = task.action(a).pre.len() as u32;
            self.accum[i] = 0;
        }
        let n = self.cost.len();
        for f in s.iter().take_while(|&f| f < n) {
            self.cost[f] = 0;
            self.push(0, f);
        }
        for k in 0..self.no_pre.len() {
            let i = self.no_pre[k] as usize;
            self.relax(i, 0);
        }
        let mut goals_left = task.goals.len();
        if goals_left == 0 {
            return Some(0);
        }
        let mut b = 0;
        'outer: loop {
            let (c, f) = if b < self.buckets.len() {
                match self.buckets[b].pop() {
                    Some(f) => (b as u64, f),
                    None => {
                        b += 1;
                        continue;
                    }
                }
            } else {
                match self.overflow.pop() {
                    Some(Reverse(e)) => e,
                    None => break 'outer,
                }
            };
            if c > self.cost[f] {
                continue;
            }
            if self.is_goal[f] {
                goals_left -= 1;
                if goals_left == 0 {
                    break;
                }
            }
            for k in 0..self.consumers[f].len() {
                let i = self.consumers[f][k] as usize;
                self.accum[i] = self.accum[i].saturating_add(c);
                self.remaining[i] -= 1;
                if self.remaining[i] == 0 {
                    let base = self.accum[i];
                    self.relax(i, base);
                }
            }
        }
        if goals_left > 0 {
            return None;
        }
        Some(task.goals.iter().map(|&g| self.cost[g]).fold(0u64, u64::saturating_add))
    }

    fn push(&mut self, c: u64, f: FactId) {
        if c < BUCKETS {
            let c = c as usize;
            if c >= self.buckets.len() {
                self.buckets.resize_with(c + 1, Vec::new);
            }
            self.buckets[c].push(f);
        } else {
            self.overflow.push(Reverse((c, f)));
        }
    }

    fn relax(&mut self, i: usize, base: u64) {
        let a = self.task.action(self.actions[i]);
        let c = base.saturating_add(a.cost as u64);
        for &g in &a.add {
            if c < self.cost[g] {
                self.cost[g] = c;
                self.push(c, g);
            }
        }
    }
}

/// h_add of `s` over all of the task's actions; `None` means infinite.
pub fn heuristic(s: &State, task: &GroundTask) -> Option<u64> {
    HAdd::for_all_actions(task).eval(s)
}
