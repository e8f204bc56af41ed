use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::freq::{DivisorTable, FrequencyVector};
use crate::index::MultiIndex;

use super::enumerate::{EnumerationOptions, TreeCatalogue};
use super::scales::{assign_scales_factor, CutoffFamily, DEFAULT_SCALE_DEPTH, SUPPORT_FACTOR};
use super::tree::Tree;

/// A cluster on scale n: a maximal connected set of nodes whose internal lines
/// all have scale ≤ n, at least one of them exactly n.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub scale: usize,
    /// Sorted node ids.
    pub nodes: Vec<usize>,
    /// Nodes outside the cluster whose lines enter it.
    pub entering: Vec<usize>,
    /// The cluster node whose line leaves it (the top node's line is the root line).
    pub exit: usize,
}

/// A self-energy cluster: one entering line, one exiting line, end-node modes
/// summing to zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelfEnergy {
    pub cluster: Cluster,
    /// Node whose line ℓ²_T enters.
    pub entering: usize,
    /// Lines of L(T) on the path from ℓ²_T to ℓ¹_T, by the node they leave.
    pub path: Vec<usize>,
    /// x_T = ω·ν of the entering line.
    pub x: f64,
    /// M(T) = Σ_{v ∈ E(T)} |ν_v|.
    pub mass: u64,
}

fn require_scales(theta: &Tree) -> Result<&[usize]> {
    theta
        .scales()
        .ok_or_else(|| Error::Precondition("tree has no scale labels".into()))
}

/// All clusters of a scaled tree, by increasing scale and then smallest node.
pub fn clusters(theta: &Tree) -> Result<Vec<Cluster>> {
    let scales = require_scales(theta)?;
    let n_nodes = theta.order();
    let mut levels: Vec<usize> = (1..n_nodes).map(|v| scales[v]).collect();
    levels.sort_unstable();
    levels.dedup();

    let mut out = Vec::new();
    for &n in &levels {
        // union-find over lines ℓ_v (v ≠ 0) of scale ≤ n
        let mut parent: Vec<usize> = (0..n_nodes).collect();
        fn find(p: &mut [usize], mut a: usize) -> usize {
            while p[a] != a {
                p[a] = p[p[a]];
                a = p[a];
            }
            a
        }
        for v in 1..n_nodes {
            if scales[v] <= n {
                let u = theta.node(v).parent.expect("non-top node has a parent");
                let (ra, rb) = (find(&mut parent, v), find(&mut parent, u));
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
        let roots: Vec<usize> = (0..n_nodes).map(|v| find(&mut parent, v)).collect();
        let mut reps: Vec<usize> = (1..n_nodes)
            .filter(|&v| scales[v] == n)
            .map(|v| roots[v])
            .collect();
        reps.sort_unstable();
        reps.dedup();
        for r in reps {
            let nodes: Vec<usize> = (0..n_nodes).filter(|&v| roots[v] == r).collect();
            let inside = |v: usize| roots[v] == r;
            let entering: Vec<usize> = (1..n_nodes)
                .filter(|&w| !inside(w) && theta.node(w).parent.is_some_and(inside))
                .collect();
            let exit = *nodes
                .iter()
                .find(|&&v| theta.node(v).parent.is_none_or(|u| !inside(u)))
                .expect("a cluster has a top node");
            out.push(Cluster {
                scale: n,
                nodes,
                entering,
                exit,
            });
        }
    }
    Ok(out)
}

/// Self-energy clusters of a scaled tree.
pub fn detect_self_energy(theta: &Tree, omega: &FrequencyVector) -> Result<Vec<SelfEnergy>> {
    let mut out = Vec::new();
    for cl in clusters(theta)? {
        if cl.entering.len() != 1 {
            continue;
        }
        let mut sum = MultiIndex::zero(theta.dim());
        let mut mass = 0;
        for &v in &cl.nodes {
            if let Some(nu) = &theta.node(v).mode {
                sum = &sum + nu;
                mass += nu.l1();
            }
        }
        if !sum.is_zero() {
            continue;
        }
        let entering = cl.entering[0];
        let mut path = Vec::new();
        let mut w = theta
            .node(entering)
            .parent
            .expect("entering line has a target");
        while w != cl.exit {
            path.push(w);
            w = theta.node(w).parent.expect("path reaches the exit node");
        }
        out.push(SelfEnergy {
            x: omega.divisor(&theta.node(entering).momentum),
            cluster: cl,
            entering,
            path,
            mass,
        });
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleCount {
    pub n: usize,
    /// 𝔑_n(θ) = #{ℓ : n_ℓ ≥ n}.
    pub count: usize,
    /// 2^{−(n−2)} M(θ).
    pub bound: f64,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountingReport {
    pub mass: u64,
    /// One entry for each n from 0 to the largest scale in the tree.
    pub counts: Vec<ScaleCount>,
    pub ok: bool,
}

/// Checks 𝔑_n(θ) ≤ 2^{−(n−2)} M(θ) for every n on a renormalised scaled tree.
pub fn counting_check(theta: &Tree, omega: &FrequencyVector) -> Result<CountingReport> {
    let scales = require_scales(theta)?;
    if !detect_self_energy(theta, omega)?.is_empty() {
        return Err(Error::Precondition(format!(
            "{} contains a self-energy cluster",
            theta.to_text()
        )));
    }
    let mass = theta.mode_mass();
    let top = scales.iter().copied().max().unwrap_or(0);
    let counts: Vec<ScaleCount> = (0..=top)
        .map(|n| {
            let count = scales.iter().filter(|&&s| s >= n).count();
            let bound = mass as f64 * 2f64.powi(2 - n as i32);
            ScaleCount {
                n,
                count,
                bound,
                ok: count as f64 <= bound,
            }
        })
        .collect();
    let ok = counts.iter().all(|c| c.ok);
    Ok(CountingReport { mass, counts, ok })
}

/// Per-tree outcome of a [`counting_sweep`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepTree {
    pub k: usize,
    pub tree_id: usize,
    pub text: String,
    /// `None` when the tree contains a self-energy cluster.
    pub counting: Option<CountingReport>,
    pub self_energies: Vec<SelfEnergyCheck>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelfEnergyCheck {
    pub scale: usize,
    pub mass: u64,
    pub x: f64,
    /// Ξ_n(x_T) ≠ 0.
    pub in_support: bool,
    /// Contains no smaller self-energy cluster.
    pub renormalised: bool,
    /// M(T) ≥ 2^{n−1}.
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub trees: Vec<SweepTree>,
    pub trees_checked: usize,
    pub renormalised: usize,
    pub line_bound_violations: usize,
    pub clusters_checked: usize,
    pub mass_bound_violations: usize,
}

impl SweepReport {
    /// Rows `k,tree_id,M,n,count,bound,ok`, one per renormalised tree and scale.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,tree_id,M,n,count,bound,ok\n");
        for t in &self.trees {
            if let Some(rep) = &t.counting {
                for c in &rep.counts {
                    out += &format!(
                        "{},{},{},{},{},{},{}\n",
                        t.k,
                        t.tree_id,
                        rep.mass,
                        c.n,
                        c.count,
                        crate::fmt::float(c.bound),
                        c.ok
                    );
                }
            }
        }
        out
    }

    /// Bracketed text of every tree, one per line, prefixed by order and id.
    pub fn to_text(&self) -> String {
        self.trees
            .iter()
            .map(|t| format!("{} {} {}\n", t.k, t.tree_id, t.text))
            .collect()
    }
}

/// Enumerates all trees of order ≤ `k_max` whose internal nodes have between
/// 2 and `max_branch` children, assigns sharp scales, checks the line-count
/// bound on the renormalised ones and the mass bound M(T) ≥ 2^{n−1} on every
/// self-energy cluster with Ξ_n(x_T) ≠ 0.
///
/// Nodes with a single entering line are left out: in the renormalised
/// expansion their factor εg₁(c) is carried by the propagator.
pub fn counting_sweep(
    omega: &FrequencyVector,
    support: &[MultiIndex],
    k_max: usize,
    max_branch: usize,
) -> Result<SweepReport> {
    counting_sweep_with(omega, support, k_max, max_branch, SUPPORT_FACTOR)
}

/// [`counting_sweep`] with scales n_ℓ = min{n : |x_ℓ| > factor·α_n}.
pub fn counting_sweep_with(
    omega: &FrequencyVector,
    support: &[MultiIndex],
    k_max: usize,
    max_branch: usize,
    factor: f64,
) -> Result<SweepReport> {
    let table = DivisorTable::compute(omega, DEFAULT_SCALE_DEPTH)?;
    let family = CutoffFamily::from_table(table.clone());
    let mut opts = EnumerationOptions::new(max_branch.max(2));
    opts.min_branch = 2;
    let cat = TreeCatalogue::build(k_max, support, &opts)?;

    let mut jobs = Vec::new();
    for k in 1..=k_max {
        for (i, t) in cat.trees_of_order(k)?.into_iter().enumerate() {
            jobs.push((k, i, t));
        }
    }
    let trees = jobs
        .into_par_iter()
        .map(|(k, tree_id, t)| sweep_one(k, tree_id, &t, omega, &table, &family, factor))
        .collect::<Result<Vec<SweepTree>>>()?;

    let renormalised = trees.iter().filter(|t| t.counting.is_some()).count();
    let line_bound_violations = trees
        .iter()
        .filter(|t| t.counting.as_ref().is_some_and(|c| !c.ok))
        .count();
    let checked: Vec<&SelfEnergyCheck> = trees
        .iter()
        .flat_map(|t| &t.self_energies)
        .filter(|s| s.in_support)
        .collect();
    Ok(SweepReport {
        trees_checked: trees.len(),
        renormalised,
        line_bound_violations,
        clusters_checked: checked.len(),
        mass_bound_violations: checked.iter().filter(|s| !s.ok).count(),
        trees,
    })
}

fn sweep_one(
    k: usize,
    tree_id: usize,
    t: &Tree,
    omega: &FrequencyVector,
    table: &DivisorTable,
    family: &CutoffFamily,
    factor: f64,
) -> Result<SweepTree> {
    let scaled = assign_scales_factor(t, table, factor)?;
    let ses = detect_self_energy(&scaled, omega)?;
    let counting = if ses.is_empty() {
        Some(counting_check(&scaled, omega)?)
    } else {
        None
    };
    let mut checks = Vec::with_capacity(ses.len());
    for se in &ses {
        let renormalised = !ses.iter().any(|other| {
            other.cluster.nodes.len() < se.cluster.nodes.len()
                && other
                    .cluster
                    .nodes
                    .iter()
                    .all(|v| se.cluster.nodes.contains(v))
        });
        let n = se.cluster.scale;
        checks.push(SelfEnergyCheck {
            scale: n,
            mass: se.mass,
            x: se.x,
            in_support: family.xi_nonzero(n, se.x)?,
            renormalised,
            ok: se.mass as f64 >= 2f64.powi(n as i32 - 1),
        });
    }
    Ok(SweepTree {
        k,
        tree_id,
        text: t.to_text(),
        counting,
        self_energies: checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::freq::standard_frequency;

    fn golden() -> FrequencyVector {
        standard_frequency("golden").unwrap()
    }

    fn scaled(text: &str) -> Tree {
        let omega = golden();
        super::super::scales::assign_scales(&Tree::parse(text).unwrap(), &omega).unwrap()
    }

    /// Clusters straight from the definition: every node subset that is
    /// connected through its internal lines, has all internal scales ≤ n with
    /// one equal to n, and has no line of scale ≤ n to an outside node.
    fn brute_clusters(t: &Tree) -> Vec<(usize, Vec<usize>)> {
        let scales = t.scales().unwrap();
        let n_nodes = t.order();
        let mut out = Vec::new();
        let levels: std::collections::BTreeSet<usize> = scales.iter().copied().collect();
        for mask in 1u32..(1 << n_nodes) {
            let inside = |v: usize| mask & (1 << v) != 0;
            let nodes: Vec<usize> = (0..n_nodes).filter(|&v| inside(v)).collect();
            let internal: Vec<usize> = (1..n_nodes)
                .filter(|&v| inside(v) && inside(t.node(v).parent.unwrap()))
                .collect();
            if internal.len() + 1 != nodes.len() {
                continue; // a forest, not connected
            }
            for &n in &levels {
                if !internal.iter().all(|&v| scales[v] <= n)
                    || !internal.iter().any(|&v| scales[v] == n)
                {
                    continue;
                }
                let leaks = (1..n_nodes).any(|v| {
                    let u = t.node(v).parent.unwrap();
                    inside(v) != inside(u) && scales[v] <= n
                });
                if !leaks {
                    out.push((n, nodes.clone()));
                }
            }
        }
        out.sort();
        out
    }

    fn brute_self_energy(t: &Tree) -> Vec<(usize, Vec<usize>)> {
        brute_clusters(t)
            .into_iter()
            .filter(|(_, nodes)| {
                let entering = (1..t.order())
                    .filter(|&w| !nodes.contains(&w) && nodes.contains(&t.node(w).parent.unwrap()))
                    .count();
                let sum = nodes
                    .iter()
                    .filter_map(|&v| t.node(v).mode.clone())
                    .fold(MultiIndex::zero(2), |a, b| &a + &b);
                entering == 1 && sum.is_zero()
            })
            .collect()
    }

    #[test]
    fn single_node_has_none() {
        let t = scaled("e(1,0)");
        assert!(detect_self_energy(&t, &golden()).unwrap().is_empty());
        let rep = counting_check(&t, &golden()).unwrap();
        assert_eq!(rep.mass, 1);
        assert_eq!(
            rep.counts[2],
            ScaleCount {
                n: 2,
                count: 1,
                bound: 1.0,
                ok: true
            }
        );
        assert!(rep.ok);
    }

    #[test]
    fn hand_built_witness() {
        // lines of e(1,0), e(-1,0) sit on scale 2, the entering line e(1,-1) on scale 3
        let t = scaled("v[e(1,0),e(-1,0),e(1,-1)]");
        let ses = detect_self_energy(&t, &golden()).unwrap();
        assert_eq!(ses.len(), 1);
        let se = &ses[0];
        assert_eq!(se.cluster.scale, 2);
        assert_eq!(se.mass, 2);
        assert_eq!(t.node(se.entering).mode, Some(MultiIndex::from([1, -1])));
        assert!(se.path.is_empty());
        assert!((se.x - golden().divisor(&MultiIndex::from([1, -1]))).abs() == 0.0);
        assert!(matches!(
            counting_check(&t, &golden()),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn agrees_with_subset_scan() {
        let sup = vec![
            MultiIndex::from([1, 0]),
            MultiIndex::from([-1, 0]),
            MultiIndex::from([0, 1]),
            MultiIndex::from([0, -1]),
        ];
        let omega = golden();
        let table = DivisorTable::compute(&omega, DEFAULT_SCALE_DEPTH).unwrap();
        let cat = TreeCatalogue::build(5, &sup, &EnumerationOptions::new(3)).unwrap();
        let mut seen_any = false;
        for k in 1..=5 {
            for t in cat.trees_of_order(k).unwrap() {
                let t = super::super::scales::assign_scales_with(&t, &table).unwrap();
                let mut fast: Vec<(usize, Vec<usize>)> = clusters(&t)
                    .unwrap()
                    .into_iter()
                    .map(|c| (c.scale, c.nodes))
                    .collect();
                fast.sort();
                assert_eq!(fast, brute_clusters(&t), "{}", t.to_text());
                let mut se: Vec<(usize, Vec<usize>)> = detect_self_energy(&t, &omega)
                    .unwrap()
                    .into_iter()
                    .map(|s| (s.cluster.scale, s.cluster.nodes))
                    .collect();
                se.sort();
                seen_any |= !se.is_empty();
                assert_eq!(se, brute_self_energy(&t), "{}", t.to_text());
            }
        }
        assert!(seen_any);
    }

    #[test]
    fn all_scales_zero_trivial() {
        let t = Tree::parse("v[e(1,0),e(0,1),e(1,1)]")
            .unwrap()
            .with_scales(vec![0; 4])
            .unwrap();
        let rep = counting_check(&t, &golden()).unwrap();
        assert!(rep.ok);
        assert_eq!(rep.counts.len(), 1);
        assert_eq!(rep.counts[0].count, 4);
    }

    #[test]
    fn sharp_scales_break_the_line_bound() {
        // all four lines carry |x| = 1 > 2α_2, hence scale 2, while M = 3
        let t = scaled("v[e(-1,0),e(1,0),e(1,0)]");
        assert_eq!(t.scales(), Some(&[2, 2, 2, 2][..]));
        let rep = counting_check(&t, &golden()).unwrap();
        assert_eq!(
            rep.counts[2],
            ScaleCount {
                n: 2,
                count: 4,
                bound: 3.0,
                ok: false
            }
        );
    }

    #[test]
    fn sweep_small() {
        let sup = vec![
            MultiIndex::from([1, 0]),
            MultiIndex::from([-1, 0]),
            MultiIndex::from([0, 1]),
            MultiIndex::from([0, -1]),
        ];
        let rep = counting_sweep(&golden(), &sup, 4, 3).unwrap();
        assert_eq!(rep.line_bound_violations, 2);
        assert_eq!(rep.clusters_checked, 2);
        assert_eq!(rep.mass_bound_violations, 0);
        assert!(rep
            .trees
            .iter()
            .any(|t| t.text == "v[e(-1,0),e(1,0),e(1,0)]"
                && t.counting.as_ref().is_some_and(|c| !c.ok)));
        assert!(rep.to_csv().starts_with("k,tree_id,M,n,count,bound,ok\n"));
        assert!(rep.to_text().lines().count() == rep.trees_checked);

        let rep = counting_sweep_with(&golden(), &sup, 4, 3, super::super::scales::QUARTER_FACTOR)
            .unwrap();
        assert_eq!(rep.line_bound_violations, 0);
        assert_eq!(rep.mass_bound_violations, 0);
    }
}
