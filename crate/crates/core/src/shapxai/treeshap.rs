//! Path-dependent TreeSHAP for a single tree.
//!
//! Features absent from the coalition follow both children with weights
//! proportional to the children's training cover. The recursion keeps, for
//! every feature on the current root-to-node path, the fraction of cover that
//! flows through when the feature is absent (`zero`) and whether the row
//! itself flows through (`one`), plus the permutation weights of each
//! coalition size.

use crate::modelzoo::Tree;

#[derive(Debug, Clone, Copy)]
struct PathElement {
    feature: Option<usize>,
    zero: f64,
    one: f64,
    weight: f64,
}

fn extend(path: &mut Vec<PathElement>, zero: f64, one: f64, feature: Option<usize>) {
    let depth = path.len();
    path.push(PathElement {
        feature,
        zero,
        one,
        weight: if depth == 0 { 1.0 } else { 0.0 },
    });
    let d1 = (depth + 1) as f64;
    for i in (0..depth).rev() {
        path[i + 1].weight += one * path[i].weight * (i + 1) as f64 / d1;
        path[i].weight = zero * path[i].weight * (depth - i) as f64 / d1;
    }
}

fn unwind(path: &mut Vec<PathElement>, index: usize) {
    let depth = path.len() - 1;
    let PathElement { zero, one, .. } = path[index];
    let d1 = (depth + 1) as f64;
    let mut next = path[depth].weight;
    for i in (0..depth).rev() {
        if one != 0.0 {
            let tmp = path[i].weight;
            path[i].weight = next * d1 / ((i + 1) as f64 * one);
            next = tmp - path[i].weight * zero * (depth - i) as f64 / d1;
        } else {
            path[i].weight = path[i].weight * d1 / (zero * (depth - i) as f64);
        }
    }
    for i in index..depth {
        path[i].feature = path[i + 1].feature;
        path[i].zero = path[i + 1].zero;
        path[i].one = path[i + 1].one;
    }
    path.pop();
}

/// Total permutation weight of the path with element `index` removed.
fn unwound_sum(path: &[PathElement], index: usize) -> f64 {
    let depth = path.len() - 1;
    let PathElement { zero, one, .. } = path[index];
    let d1 = (depth + 1) as f64;
    let mut next = path[depth].weight;
    let mut total = 0.0;
    for i in (0..depth).rev() {
        if one != 0.0 {
            let tmp = next * d1 / ((i + 1) as f64 * one);
            total += tmp;
            next = path[i].weight - tmp * zero * (depth - i) as f64 / d1;
        } else if zero != 0.0 {
            total += path[i].weight / zero * d1 / (depth - i) as f64;
        }
    }
    total
}

fn recurse(
    tree: &Tree,
    node: usize,
    row: &[f64],
    phi: &mut [f64],
    mut path: Vec<PathElement>,
    zero: f64,
    one: f64,
    feature: Option<usize>,
) {
    extend(&mut path, zero, one, feature);
    let n = &tree.nodes[node];
    if n.is_leaf() {
        for i in 1..path.len() {
            let w = unwound_sum(&path, i);
            let el = path[i];
            if let Some(f) = el.feature {
                phi[f] += w * (el.one - el.zero) * n.value;
            }
        }
        return;
    }
    let (hot, cold) = if row[n.feature] < n.threshold {
        (n.left as usize, n.right as usize)
    } else {
        (n.right as usize, n.left as usize)
    };
    let (mut in_zero, mut in_one) = (1.0, 1.0);
    if let Some(k) = (1..path.len()).find(|&k| path[k].feature == Some(n.feature)) {
        in_zero = path[k].zero;
        in_one = path[k].one;
        unwind(&mut path, k);
    }
    let hot_frac = tree.nodes[hot].cover / n.cover;
    let cold_frac = tree.nodes[cold].cover / n.cover;
    recurse(
        tree,
        hot,
        row,
        phi,
        path.clone(),
        hot_frac * in_zero,
        in_one,
        Some(n.feature),
    );
    recurse(
        tree,
        cold,
        row,
        phi,
        path,
        cold_frac * in_zero,
        0.0,
        Some(n.feature),
    );
}

/// Adds the tree's attributions for `row`, times `scale`, into `phi`.
pub(crate) fn add_tree_shap(tree: &Tree, row: &[f64], scale: f64, phi: &mut [f64]) {
    let mut local = vec![0.0; phi.len()];
    recurse(
        tree,
        0,
        row,
        &mut local,
        Vec::with_capacity(tree.depth() + 2),
        1.0,
        1.0,
        None,
    );
    for (p, l) in phi.iter_mut().zip(local) {
        *p += scale * l;
    }
}

/// Cover-weighted mean of the leaf values: the output with no feature known.
pub(crate) fn expected_value(tree: &Tree) -> f64 {
    fn go(t: &Tree, i: usize) -> f64 {
        let n = &t.nodes[i];
        if n.is_leaf() {
            return n.value;
        }
        let (l, r) = (&t.nodes[n.left as usize], &t.nodes[n.right as usize]);
        (l.cover * go(t, n.left as usize) + r.cover * go(t, n.right as usize)) / n.cover
    }
    go(tree, 0)
}
