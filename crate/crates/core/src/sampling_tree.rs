//! Balanced binary tree over exponentiated preferences.
//!
//! Each node holds one action's weight `e^θ` plus the total weight of its
//! left subtree, which is enough to draw from the softmax distribution and to
//! change a single preference in time proportional to the depth.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::numerics::{softmax_into, sample_index, RngStream};

/// Preferences are clamped to this magnitude before exponentiation.
pub const PREF_CLAMP: f64 = 700.0;

#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode {
    pub act: usize,
    pub val: f64,
    pub agg: f64,
    pub parent: Option<usize>,
    pub left: Option<usize>,
    pub right: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct SamplingTree {
    // Arena slot i holds the i-th action in build order, so slot order is
    // the inorder traversal.
    nodes: Vec<TreeNode>,
    root: usize,
    index: HashMap<usize, usize>,
    last_visits: usize,
}

fn weight(theta: f64) -> f64 {
    theta.clamp(-PREF_CLAMP, PREF_CLAMP).exp()
}

impl SamplingTree {
    /// Builds a tree whose even-sized subtrees pick their head at random.
    pub fn build(actions: &[usize], prefs: &[f64], rng: &mut RngStream) -> Result<Self> {
        Self::build_with(actions, prefs, || rng.uniform() < 0.5)
    }

    /// Builds a tree, asking `upper_head` for each even-sized subtree whether
    /// its head is the upper (`n/2`) or lower (`n/2 − 1`) middle element.
    /// Subtrees are visited head first, then left, then right.
    pub fn build_with(
        actions: &[usize],
        prefs: &[f64],
        mut upper_head: impl FnMut() -> bool,
    ) -> Result<Self> {
        if actions.is_empty() {
            return Err(Error::Dimension("sampling tree needs at least one action".into()));
        }
        if actions.len() != prefs.len() {
            return Err(Error::Dimension(format!(
                "{} actions but {} preferences",
                actions.len(),
                prefs.len()
            )));
        }
        let mut index = HashMap::with_capacity(actions.len());
        for (slot, &act) in actions.iter().enumerate() {
            if index.insert(act, slot).is_some() {
                return Err(Error::Domain(format!("duplicate action id {act}")));
            }
        }
        let mut nodes: Vec<TreeNode> = actions
            .iter()
            .zip(prefs)
            .map(|(&act, &theta)| TreeNode {
                act,
                val: weight(theta),
                agg: 0.0,
                parent: None,
                left: None,
                right: None,
            })
            .collect();
        let root = link(&mut nodes, 0, actions.len(), None, &mut upper_head)
            .expect("non-empty range has a head");
        let mut tree = SamplingTree {
            nodes,
            root,
            index,
            last_visits: 0,
        };
        tree.recompute_aggregates();
        Ok(tree)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root(&self) -> &TreeNode {
        &self.nodes[self.root]
    }

    pub fn node(&self, act: usize) -> Result<&TreeNode> {
        let slot = *self.index.get(&act).ok_or(Error::Lookup(act))?;
        Ok(&self.nodes[slot])
    }

    pub fn node_at(&self, slot: usize) -> &TreeNode {
        &self.nodes[slot]
    }

    /// Actions in inorder, which is also the build order.
    pub fn inorder(&self) -> impl Iterator<Item = &TreeNode> {
        self.nodes.iter()
    }

    /// Number of levels on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        let mut deepest = 0;
        let mut stack = vec![(self.root, 1)];
        while let Some((slot, d)) = stack.pop() {
            deepest = deepest.max(d);
            let n = &self.nodes[slot];
            stack.extend(n.left.map(|c| (c, d + 1)));
            stack.extend(n.right.map(|c| (c, d + 1)));
        }
        deepest
    }

    /// Sum of all weights, read off the right spine of aggregates.
    pub fn total_weight(&self) -> f64 {
        let mut total = 0.0;
        let mut cur = Some(self.root);
        while let Some(slot) = cur {
            let n = &self.nodes[slot];
            total += n.agg + n.val;
            cur = n.right;
        }
        total
    }

    /// Recomputes every left-subtree aggregate from scratch in one
    /// post-order pass. Updates keep aggregates current incrementally; this
    /// is only needed to shed accumulated rounding after very many updates.
    pub fn recompute_aggregates(&mut self) {
        fn subtree_sum(nodes: &mut [TreeNode], slot: Option<usize>) -> f64 {
            let Some(slot) = slot else { return 0.0 };
            let (left, right) = (nodes[slot].left, nodes[slot].right);
            let l = subtree_sum(nodes, left);
            let r = subtree_sum(nodes, right);
            nodes[slot].agg = l;
            l + nodes[slot].val + r
        }
        subtree_sum(&mut self.nodes, Some(self.root));
    }

    /// The action whose cumulative bucket `[Σ_{i<k} val_i, Σ_{i≤k} val_i)`
    /// contains `x`.
    pub fn select(&self, x: f64) -> Result<usize> {
        let total = self.total_weight();
        if !(0.0..total).contains(&x) {
            return Err(Error::Domain(format!("x = {x} outside [0, {total})")));
        }
        Ok(self.descend(x).0)
    }

    fn descend(&self, mut x: f64) -> (usize, usize) {
        let mut slot = self.root;
        let mut visits = 1;
        loop {
            let n = &self.nodes[slot];
            let next = if x < n.agg {
                n.left
            } else if x < n.agg + n.val {
                return (n.act, visits);
            } else {
                x -= n.agg + n.val;
                n.right
            };
            match next {
                Some(child) => {
                    slot = child;
                    visits += 1;
                }
                // Only reachable through rounding at a bucket edge; the
                // current node is the nearest bucket.
                None => return (n.act, visits),
            }
        }
    }

    pub fn sample(&mut self, rng: &mut RngStream) -> usize {
        let x = rng.uniform() * self.total_weight();
        let (act, visits) = self.descend(x);
        self.last_visits = visits;
        act
    }

    /// Sets `θ_act` and repairs the aggregates on the path to the root.
    pub fn update_preference(&mut self, act: usize, theta: f64) -> Result<()> {
        let mut slot = *self.index.get(&act).ok_or(Error::Lookup(act))?;
        let new_val = weight(theta);
        let delta = new_val - self.nodes[slot].val;
        self.nodes[slot].val = new_val;
        let mut visits = 1;
        while let Some(parent) = self.nodes[slot].parent {
            visits += 1;
            if self.nodes[parent].left == Some(slot) {
                self.nodes[parent].agg += delta;
            }
            slot = parent;
        }
        self.last_visits = visits;
        Ok(())
    }

    /// Nodes touched by the most recent `sample` or `update_preference`.
    pub fn last_visits(&self) -> usize {
        self.last_visits
    }
}

fn link(
    nodes: &mut [TreeNode],
    lo: usize,
    hi: usize,
    parent: Option<usize>,
    upper_head: &mut impl FnMut() -> bool,
) -> Option<usize> {
    let n = hi - lo;
    if n == 0 {
        return None;
    }
    let m = if n % 2 == 1 {
        (n - 1) / 2
    } else if upper_head() {
        n / 2
    } else {
        n / 2 - 1
    };
    let head = lo + m;
    nodes[head].parent = parent;
    nodes[head].left = link(nodes, lo, head, Some(head), upper_head);
    nodes[head].right = link(nodes, head + 1, hi, Some(head), upper_head);
    Some(head)
}

/// Baseline sampler: recomputes the softmax and scans it on every draw.
#[derive(Debug, Clone)]
pub struct LinearScanSampler {
    prefs: Vec<f64>,
    probs: Vec<f64>,
    last_visits: usize,
}

impl LinearScanSampler {
    pub fn new(prefs: &[f64]) -> Result<Self> {
        if prefs.is_empty() {
            return Err(Error::Dimension("sampler needs at least one action".into()));
        }
        Ok(LinearScanSampler {
            prefs: prefs.to_vec(),
            probs: vec![0.0; prefs.len()],
            last_visits: 0,
        })
    }

    pub fn sample(&mut self, rng: &mut RngStream) -> usize {
        softmax_into(&self.prefs, &mut self.probs);
        self.last_visits = self.prefs.len();
        sample_index(&self.probs, rng)
    }

    pub fn update_preference(&mut self, act: usize, theta: f64) -> Result<()> {
        let len = self.prefs.len();
        let slot = self.prefs.get_mut(act).ok_or(Error::Index { index: act, len })?;
        *slot = theta;
        self.last_visits = 1;
        Ok(())
    }

    pub fn last_visits(&self) -> usize {
        self.last_visits
    }
}
