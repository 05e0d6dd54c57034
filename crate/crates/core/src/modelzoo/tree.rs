//! Exact greedy regression trees shared by the forest and the booster.
//!
//! Each row carries a gradient `g` and hessian `h`; rows with `h = 0` are out
//! of the sample. A node's value is `−G/(H+λ)` and a split scores
//! `G_L²/(H_L+λ) + G_R²/(H_R+λ) − G²/(H+λ)`. With `g = −y`, `h = 1`, `λ = 0`
//! this is the reduction in squared error and the value is the node mean.
//! Trees grow level by level over per-feature presorted row orders.

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::seeding::Rng;

const NO_CHILD: u32 = 0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub feature: usize,
    pub threshold: f64,
    /// Index of the left child; 0 marks a leaf.
    pub left: u32,
    pub right: u32,
    pub value: f64,
    /// Hessian mass of training rows reaching the node.
    pub cover: f64,
}

impl Node {
    pub fn is_leaf(&self) -> bool {
        self.left == NO_CHILD
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            let n = &self.nodes[i];
            if n.is_leaf() {
                return n.value;
            }
            i = if row[n.feature] < n.threshold {
                n.left
            } else {
                n.right
            } as usize;
        }
    }

    pub fn depth(&self) -> usize {
        fn go(t: &Tree, i: usize) -> usize {
            let n = &t.nodes[i];
            if n.is_leaf() {
                0
            } else {
                1 + go(t, n.left as usize).max(go(t, n.right as usize))
            }
        }
        go(self, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_leaf()).count()
    }

    /// Features used by at least one split.
    pub fn split_features(&self) -> impl Iterator<Item = usize> + '_ {
        self.nodes
            .iter()
            .filter(|n| !n.is_leaf())
            .map(|n| n.feature)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct GrowParams {
    pub max_depth: usize,
    /// Nodes with hessian mass below this are not split.
    pub min_split: f64,
    /// Each child needs at least this hessian mass.
    pub min_child: f64,
    pub lambda: f64,
    /// Subtracted from half the split score; a split needs a positive result.
    /// `None` accepts any split of an impure node, including zero-gain ones.
    pub gamma: Option<f64>,
    /// Fraction of features drawn at each node.
    pub col_fraction: f64,
}

/// Row order of every feature, ascending by value.
pub(crate) struct Presorted {
    pub order: Vec<Vec<u32>>,
}

impl Presorted {
    pub fn new(x: &[Vec<f64>]) -> Presorted {
        let p = x.first().map_or(0, Vec::len);
        let order = (0..p)
            .map(|f| {
                let mut o: Vec<u32> = (0..x.len() as u32).collect();
                o.sort_by(|&a, &b| x[a as usize][f].total_cmp(&x[b as usize][f]));
                o
            })
            .collect();
        Presorted { order }
    }
}

#[derive(Clone, Copy)]
struct Best {
    gain: f64,
    feature: usize,
    threshold: f64,
}

#[derive(Clone, Copy, Default)]
struct Scan {
    gl: f64,
    hl: f64,
    last: Option<f64>,
}

fn score(g: f64, h: f64, lambda: f64) -> f64 {
    if h + lambda > 0.0 {
        g * g / (h + lambda)
    } else {
        0.0
    }
}

pub(crate) fn grow(
    x: &[Vec<f64>],
    sorted: &Presorted,
    g: &[f64],
    h: &[f64],
    params: &GrowParams,
    rng: &mut Rng,
) -> Tree {
    let n = x.len();
    let p = sorted.order.len();
    const OUT: u32 = u32::MAX;
    let mut node_of: Vec<u32> = (0..n).map(|i| if h[i] > 0.0 { 0 } else { OUT }).collect();
    // per-node sums: G, H and Σ g²/h (for impurity)
    let mut sums: Vec<(f64, f64, f64)> = vec![(0.0, 0.0, 0.0)];
    for i in 0..n {
        if h[i] > 0.0 {
            sums[0].0 += g[i];
            sums[0].1 += h[i];
            sums[0].2 += g[i] * g[i] / h[i];
        }
    }
    let mut nodes = vec![Node {
        feature: 0,
        threshold: 0.0,
        left: NO_CHILD,
        right: NO_CHILD,
        value: 0.0,
        cover: sums[0].1,
    }];
    let n_cols = ((params.col_fraction * p as f64).ceil() as usize).clamp(1, p.max(1));
    let mut frontier: Vec<u32> = vec![0];
    let mut depth = 0;
    while !frontier.is_empty() && depth < params.max_depth && p > 0 {
        // nodes eligible for splitting and their candidate features
        let mut slot_of = vec![usize::MAX; nodes.len()];
        let mut active: Vec<u32> = Vec::new();
        let mut allowed: Vec<Vec<bool>> = Vec::new();
        for &nd in &frontier {
            let (gs, hs, qs) = sums[nd as usize];
            let impure = qs - gs * gs / hs > 1e-12 * qs.abs().max(1.0);
            if hs < params.min_split
                || hs < 2.0 * params.min_child
                || (params.gamma.is_none() && !impure)
            {
                continue;
            }
            let mut mask = vec![false; p];
            if n_cols >= p {
                mask.fill(true);
            } else {
                for f in sample(rng, p, n_cols) {
                    mask[f] = true;
                }
            }
            slot_of[nd as usize] = active.len();
            active.push(nd);
            allowed.push(mask);
        }
        if active.is_empty() {
            break;
        }
        let mut best: Vec<Option<Best>> = vec![None; active.len()];
        for f in 0..p {
            if !allowed.iter().any(|m| m[f]) {
                continue;
            }
            let mut scan = vec![Scan::default(); active.len()];
            for &r in &sorted.order[f] {
                let nd = node_of[r as usize];
                if nd == OUT {
                    continue;
                }
                let s = slot_of[nd as usize];
                if s == usize::MAX || !allowed[s][f] {
                    continue;
                }
                let v = x[r as usize][f];
                let st = &mut scan[s];
                if let Some(last) = st.last {
                    if v > last {
                        let (gs, hs, _) = sums[nd as usize];
                        let (gl, hl) = (st.gl, st.hl);
                        let (gr, hr) = (gs - gl, hs - hl);
                        if hl >= params.min_child && hr >= params.min_child && hl > 0.0 && hr > 0.0
                        {
                            let raw = score(gl, hl, params.lambda) + score(gr, hr, params.lambda)
                                - score(gs, hs, params.lambda);
                            let gain = match params.gamma {
                                Some(gamma) => 0.5 * raw - gamma,
                                None => raw,
                            };
                            let ok = match params.gamma {
                                Some(_) => gain > 0.0,
                                None => gain > -1e-9 * (score(gs, hs, params.lambda) + 1.0),
                            };
                            if ok && best[s].is_none_or(|b| gain > b.gain) {
                                best[s] = Some(Best {
                                    gain,
                                    feature: f,
                                    threshold: last + (v - last) / 2.0,
                                });
                            }
                        }
                    }
                }
                st.gl += g[r as usize];
                st.hl += h[r as usize];
                st.last = Some(v);
            }
        }
        // create children
        let mut next = Vec::new();
        let mut child_of: Vec<Option<(u32, u32, usize, f64)>> = vec![None; nodes.len()];
        for (s, &nd) in active.iter().enumerate() {
            if let Some(b) = best[s] {
                let l = nodes.len() as u32;
                for _ in 0..2 {
                    nodes.push(Node {
                        feature: 0,
                        threshold: 0.0,
                        left: NO_CHILD,
                        right: NO_CHILD,
                        value: 0.0,
                        cover: 0.0,
                    });
                    sums.push((0.0, 0.0, 0.0));
                }
                let node = &mut nodes[nd as usize];
                node.feature = b.feature;
                node.threshold = b.threshold;
                node.left = l;
                node.right = l + 1;
                child_of[nd as usize] = Some((l, l + 1, b.feature, b.threshold));
                next.push(l);
                next.push(l + 1);
            }
        }
        for i in 0..n {
            let nd = node_of[i];
            if nd == OUT {
                continue;
            }
            if let Some((l, r, f, t)) = child_of[nd as usize] {
                let c = if x[i][f] < t { l } else { r };
                node_of[i] = c;
                let e = &mut sums[c as usize];
                e.0 += g[i];
                e.1 += h[i];
                e.2 += g[i] * g[i] / h[i];
            }
        }
        for &c in &next {
            nodes[c as usize].cover = sums[c as usize].1;
        }
        frontier = next;
        depth += 1;
    }
    // leaf values summed in row order
    let mut gsum = vec![0.0; nodes.len()];
    let mut hsum = vec![0.0; nodes.len()];
    for i in 0..n {
        if node_of[i] != OUT {
            gsum[node_of[i] as usize] += g[i];
            hsum[node_of[i] as usize] += h[i];
        }
    }
    for (k, node) in nodes.iter_mut().enumerate() {
        if node.is_leaf() {
            node.value = if hsum[k] + params.lambda > 0.0 {
                -gsum[k] / (hsum[k] + params.lambda)
            } else {
                0.0
            };
        }
    }
    // internal values: cover-weighted child average, for inspection
    for k in (0..nodes.len()).rev() {
        if !nodes[k].is_leaf() {
            let (l, r) = (nodes[k].left as usize, nodes[k].right as usize);
            let (cl, cr) = (nodes[l].cover, nodes[r].cover);
            nodes[k].value = (cl * nodes[l].value + cr * nodes[r].value) / (cl + cr);
        }
    }
    Tree { nodes }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::rng_from;

    fn cart_params(depth: usize) -> GrowParams {
        GrowParams {
            max_depth: depth,
            min_split: 1.0,
            min_child: 0.0,
            lambda: 0.0,
            gamma: None,
            col_fraction: 1.0,
        }
    }

    fn fit(x: &[Vec<f64>], y: &[f64], p: &GrowParams) -> Tree {
        let g: Vec<f64> = y.iter().map(|v| -v).collect();
        let h = vec![1.0; y.len()];
        grow(x, &Presorted::new(x), &g, &h, p, &mut rng_from(0))
    }

    #[test]
    fn xor_needs_two_levels() {
        let x = vec![
            vec![0.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 0.0],
            vec![1.0, 1.0],
        ];
        let y = [0.0, 1.0, 1.0, 0.0];
        let deep = fit(&x, &y, &cart_params(2));
        for (r, v) in x.iter().zip(y) {
            assert_eq!(deep.predict(r), v);
        }
        let stump = fit(&x, &y, &cart_params(1));
        for r in &x {
            assert_eq!(stump.predict(r), 0.5);
        }
    }

    #[test]
    fn pure_node_is_a_leaf() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let t = fit(&x, &[2.5; 10], &cart_params(8));
        assert_eq!(t.nodes.len(), 1);
        assert_eq!(t.predict(&[3.0]), 2.5);
    }

    #[test]
    fn covers_add_up() {
        let x: Vec<Vec<f64>> = (0..50)
            .map(|i| vec![(i * 7 % 13) as f64, (i % 5) as f64])
            .collect();
        let y: Vec<f64> = x.iter().map(|r| r[0] * 0.3 - r[1]).collect();
        let t = fit(&x, &y, &cart_params(4));
        assert_eq!(t.nodes[0].cover, 50.0);
        for n in t.nodes.iter().filter(|n| !n.is_leaf()) {
            assert_eq!(
                n.cover,
                t.nodes[n.left as usize].cover + t.nodes[n.right as usize].cover
            );
        }
        assert!(t.depth() <= 4);
    }

    #[test]
    fn threshold_is_midpoint() {
        let x = vec![vec![1.0], vec![3.0]];
        let t = fit(&x, &[0.0, 1.0], &cart_params(1));
        assert_eq!(t.nodes[0].threshold, 2.0);
    }

    #[test]
    fn min_split_stops_growth() {
        let x: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = (0..6).map(|i| i as f64).collect();
        let t = fit(
            &x,
            &y,
            &GrowParams {
                min_split: 7.0,
                ..cart_params(5)
            },
        );
        assert_eq!(t.nodes.len(), 1);
    }
}
