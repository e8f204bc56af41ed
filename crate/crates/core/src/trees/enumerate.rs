use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::index::MultiIndex;

use super::tree::{Shape, Tree};

/// Largest order accepted by the enumerator.
pub const MAX_ORDER: usize = 6;

/// Cap on the number of interned subtrees.
pub const MAX_SUBTREES: usize = 5_000_000;

#[derive(Clone, Debug, PartialEq)]
pub struct EnumerationOptions {
    /// Smallest branching allowed at internal nodes.
    pub min_branch: usize,
    /// Largest branching, the degree of g.
    pub max_branch: usize,
    /// Drop trees with a line momentum of ℓ¹ norm above this.
    pub max_momentum: Option<u64>,
}

impl EnumerationOptions {
    pub fn new(max_branch: usize) -> Self {
        EnumerationOptions {
            min_branch: 1,
            max_branch,
            max_momentum: None,
        }
    }
}

struct Entry {
    size: usize,
    momentum: MultiIndex,
    mode: Option<usize>,
    children: Vec<u32>,
}

/// All inequivalent trees up to a given order, interned by subtree: an internal
/// node is a nondecreasing list of child ids, so each unordered tree appears once.
pub struct TreeCatalogue {
    support: Vec<MultiIndex>,
    entries: Vec<Entry>,
    /// (size, momentum) → ids.
    index: BTreeMap<(usize, MultiIndex), Vec<u32>>,
    max_order: usize,
}

impl TreeCatalogue {
    pub fn build(
        max_order: usize,
        support: &[MultiIndex],
        opts: &EnumerationOptions,
    ) -> Result<Self> {
        if max_order > MAX_ORDER {
            return Err(Error::BudgetExceeded {
                needed: max_order as u128,
                cap: MAX_ORDER as u128,
            });
        }
        if opts.min_branch == 0 || opts.min_branch > opts.max_branch.max(1) {
            return Err(Error::Precondition(format!(
                "branching range [{}, {}] is empty",
                opts.min_branch, opts.max_branch
            )));
        }
        let mut support: Vec<MultiIndex> =
            support.iter().filter(|nu| !nu.is_zero()).cloned().collect();
        support.sort();
        support.dedup();
        let mut cat = TreeCatalogue {
            support,
            entries: Vec::new(),
            index: BTreeMap::new(),
            max_order,
        };
        if max_order == 0 {
            return Ok(cat);
        }
        let fits = |nu: &MultiIndex| opts.max_momentum.is_none_or(|n| nu.l1() <= n);

        for i in 0..cat.support.len() {
            let nu = cat.support[i].clone();
            if fits(&nu) {
                cat.push(Entry {
                    size: 1,
                    momentum: nu,
                    mode: Some(i),
                    children: Vec::new(),
                });
            }
        }
        for size in 2..=max_order {
            let pool: Vec<u32> = (0..cat.entries.len() as u32).collect();
            let mut fresh = Vec::new();
            let mut stack = Vec::new();
            cat.children_multisets(&pool, 0, size - 1, opts, &mut stack, &mut fresh)?;
            for children in fresh {
                let mut momentum = cat.entries[children[0] as usize].momentum.clone();
                for &c in &children[1..] {
                    momentum = &momentum + &cat.entries[c as usize].momentum;
                }
                if momentum.is_zero() || !fits(&momentum) {
                    continue;
                }
                cat.push(Entry {
                    size,
                    momentum,
                    mode: None,
                    children,
                });
                if cat.entries.len() > MAX_SUBTREES {
                    return Err(Error::BudgetExceeded {
                        needed: cat.entries.len() as u128,
                        cap: MAX_SUBTREES as u128,
                    });
                }
            }
        }
        Ok(cat)
    }

    fn push(&mut self, e: Entry) {
        let id = self.entries.len() as u32;
        self.index
            .entry((e.size, e.momentum.clone()))
            .or_default()
            .push(id);
        self.entries.push(e);
    }

    /// Nondecreasing child-id lists from `pool[from..]` with total size `remaining`.
    fn children_multisets(
        &self,
        pool: &[u32],
        from: usize,
        remaining: usize,
        opts: &EnumerationOptions,
        stack: &mut Vec<u32>,
        out: &mut Vec<Vec<u32>>,
    ) -> Result<()> {
        if remaining == 0 {
            if stack.len() >= opts.min_branch {
                out.push(stack.clone());
            }
            return Ok(());
        }
        if stack.len() == opts.max_branch {
            return Ok(());
        }
        for (i, &id) in pool.iter().enumerate().skip(from) {
            let size = self.entries[id as usize].size;
            if size > remaining {
                continue;
            }
            stack.push(id);
            self.children_multisets(pool, i, remaining - size, opts, stack, out)?;
            stack.pop();
            if out.len() > MAX_SUBTREES {
                return Err(Error::BudgetExceeded {
                    needed: out.len() as u128,
                    cap: MAX_SUBTREES as u128,
                });
            }
        }
        Ok(())
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    fn shape(&self, id: u32) -> Shape {
        let e = &self.entries[id as usize];
        match e.mode {
            Some(i) => Shape::End(self.support[i].clone()),
            None => Shape::Node(e.children.iter().map(|&c| self.shape(c)).collect()),
        }
    }

    /// Number of trees of order `k` with root momentum `nu`.
    pub fn count(&self, k: usize, nu: &MultiIndex) -> usize {
        self.index.get(&(k, nu.clone())).map_or(0, Vec::len)
    }

    /// Trees of order `k` with root momentum `nu`, in canonical text order.
    pub fn trees(&self, k: usize, nu: &MultiIndex) -> Result<Vec<Tree>> {
        let ids = self
            .index
            .get(&(k, nu.clone()))
            .cloned()
            .unwrap_or_default();
        self.materialise(&ids)
    }

    /// All trees of order `k`, ordered by root momentum and then text.
    pub fn trees_of_order(&self, k: usize) -> Result<Vec<Tree>> {
        let mut out = Vec::new();
        for ((size, _), ids) in self.index.range((k, MultiIndex::new(Vec::new()))..) {
            if *size != k {
                break;
            }
            out.extend(self.materialise(ids)?);
        }
        Ok(out)
    }

    fn materialise(&self, ids: &[u32]) -> Result<Vec<Tree>> {
        let mut trees = ids
            .iter()
            .map(|&id| Tree::from_shape(&self.shape(id)))
            .collect::<Result<Vec<Tree>>>()?;
        let mut keyed: Vec<(String, Tree)> = trees.drain(..).map(|t| (t.to_text(), t)).collect();
        keyed.sort_by(|a, b| a.0.cmp(&b.0));
        Ok(keyed.into_iter().map(|(_, t)| t).collect())
    }
}

/// All inequivalent trees with `k` nodes, end-node modes from `support`,
/// branching at most `max_branch` and root momentum `root`.
pub fn enumerate_trees(
    k: usize,
    support: &[MultiIndex],
    root: &MultiIndex,
    max_branch: usize,
) -> Result<Vec<Tree>> {
    let cat = TreeCatalogue::build(k, support, &EnumerationOptions::new(max_branch))?;
    cat.trees(k, root)
}
