use std::collections::{BTreeMap, HashMap, VecDeque};

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::IndexPairError;
use crate::cubical::{Cube, CubeSet, Grid};
use crate::flow::{box_from_bounds, time_h_image, FlowModel, IntervalBox};

/// Combinatorial outer approximation of `φ^h` on top cubes.
#[derive(Clone, Debug, PartialEq)]
pub struct MultivaluedCubeMap {
    pub grid: Grid,
    pub images: BTreeMap<Cube, Vec<Cube>>,
    /// Validated image box of each domain cube (model units).
    pub image_boxes: BTreeMap<Cube, Vec<(f64, f64)>>,
}

impl MultivaluedCubeMap {
    pub fn domain(&self) -> impl Iterator<Item = &Cube> {
        self.images.keys()
    }

    pub fn contains(&self, q: &Cube) -> bool {
        self.images.contains_key(q)
    }

    pub fn image(&self, q: &Cube) -> &[Cube] {
        self.images.get(q).map_or(&[], Vec::as_slice)
    }

    pub fn image_box(&self, q: &Cube) -> Option<&[(f64, f64)]> {
        self.image_boxes.get(q).map(Vec::as_slice)
    }

    /// Builds a map from explicit images (no boxes); used for purely
    /// combinatorial experiments.
    pub fn from_images(grid: Grid, images: BTreeMap<Cube, Vec<Cube>>) -> MultivaluedCubeMap {
        MultivaluedCubeMap {
            grid,
            images,
            image_boxes: BTreeMap::new(),
        }
    }

    /// Rebuilds the map from stored validated image boxes.
    pub fn from_image_boxes(grid: Grid, image_boxes: BTreeMap<Cube, Vec<(f64, f64)>>) -> MultivaluedCubeMap {
        let images = image_boxes
            .iter()
            .map(|(q, b)| (*q, grid.tops_meeting(b).into_iter().collect()))
            .collect();
        MultivaluedCubeMap {
            grid,
            images,
            image_boxes,
        }
    }

    /// Adjacency lists over canonical domain indices.
    pub fn to_json(&self) -> MapJson {
        let order: Vec<Cube> = self.images.keys().copied().collect();
        let index: HashMap<Cube, usize> = order.iter().enumerate().map(|(i, c)| (*c, i)).collect();
        MapJson {
            dim: self.grid.dim,
            scale: self.grid.scale,
            angular_axis: self.grid.angular_axis,
            domain: order.iter().map(Into::into).collect(),
            adjacency: order
                .iter()
                .map(|q| self.image(q).iter().filter_map(|r| index.get(r).copied()).collect())
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MapJson {
    pub dim: usize,
    pub scale: u32,
    pub angular_axis: Option<usize>,
    pub domain: Vec<crate::cubical::CubeJson>,
    pub adjacency: Vec<Vec<usize>>,
}

fn to_bounds(b: &IntervalBox) -> Vec<(f64, f64)> {
    b.iter().map(|i| (i.lo, i.hi)).collect()
}

/// `ℱ(Q)` = top cubes whose closed box meets the validated closed image box
/// of `Q`. The union of these cubes contains the box in its interior, and a
/// box edge lying exactly on a grid plane pulls in the cubes on both sides.
pub fn outer_approximation(grid: &Grid, domain: &CubeSet, m: &FlowModel) -> Result<MultivaluedCubeMap, IndexPairError> {
    let results: Vec<(Cube, Result<Vec<(f64, f64)>, String>)> = domain
        .par_iter()
        .filter(|q| q.is_top())
        .map(|q| {
            let b = box_from_bounds(&q.bounds(grid.scale));
            let r = time_h_image(m, &b, m.substeps)
                .map(|e| to_bounds(&e.image))
                .map_err(|e| e.to_string());
            (*q, r)
        })
        .collect();
    let mut images = BTreeMap::new();
    let mut image_boxes = BTreeMap::new();
    let mut failed = Vec::new();
    let mut reason = String::new();
    for (q, r) in results {
        match r {
            Ok(b) => {
                images.insert(q, grid.tops_meeting(&b).into_iter().collect());
                image_boxes.insert(q, b);
            }
            Err(e) => {
                if failed.is_empty() {
                    reason = e;
                }
                failed.push(q);
            }
        }
    }
    if !failed.is_empty() {
        return Err(IndexPairError::Unvalidated { cubes: failed, reason });
    }
    Ok(MultivaluedCubeMap {
        grid: *grid,
        images,
        image_boxes,
    })
}

/// Cubes of `s` lying on a bi-infinite path of the transition graph of `f`
/// restricted to `s`: those that reach a cycle and are reached from one.
pub fn invariant_part(s: &CubeSet, f: &MultivaluedCubeMap) -> CubeSet {
    let nodes: Vec<Cube> = s.iter().filter(|q| f.contains(q)).copied().collect();
    let index: HashMap<Cube, NodeIndex> = nodes.iter().enumerate().map(|(i, c)| (*c, NodeIndex::new(i))).collect();
    let mut g: DiGraph<(), ()> = DiGraph::with_capacity(nodes.len(), nodes.len() * 8);
    for _ in &nodes {
        g.add_node(());
    }
    for (i, q) in nodes.iter().enumerate() {
        for r in f.image(q) {
            if let Some(&j) = index.get(r) {
                g.add_edge(NodeIndex::new(i), j, ());
            }
        }
    }
    let mut on_cycle = vec![false; nodes.len()];
    for comp in tarjan_scc(&g) {
        let cyclic = comp.len() > 1 || g.contains_edge(comp[0], comp[0]);
        if cyclic {
            for n in comp {
                on_cycle[n.index()] = true;
            }
        }
    }
    let reach = |dir: petgraph::Direction| -> Vec<bool> {
        let mut seen = on_cycle.clone();
        let mut queue: VecDeque<NodeIndex> = (0..nodes.len()).filter(|&i| on_cycle[i]).map(NodeIndex::new).collect();
        while let Some(n) = queue.pop_front() {
            for m in g.neighbors_directed(n, dir) {
                if !seen[m.index()] {
                    seen[m.index()] = true;
                    queue.push_back(m);
                }
            }
        }
        seen
    };
    // Reached from a cycle: follow edges forward; reaching a cycle: backward.
    let from_cycle = reach(petgraph::Direction::Outgoing);
    let to_cycle = reach(petgraph::Direction::Incoming);
    nodes
        .iter()
        .enumerate()
        .filter(|(i, _)| from_cycle[*i] && to_cycle[*i])
        .map(|(_, c)| *c)
        .collect()
}

/// Top cubes of `n` whose closed box meets a top cube outside `n`.
pub fn combinatorial_boundary(grid: &Grid, n: &CubeSet) -> CubeSet {
    n.iter()
        .filter(|q| q.is_top() && grid.tops_meeting(&q.bounds(grid.scale)).iter().any(|r| !n.contains(r)))
        .copied()
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IsolationCheck {
    pub isolating: bool,
    pub invariant_part: usize,
    /// Cubes of the invariant part touching the boundary.
    pub offending: Vec<Cube>,
}

/// Whether the combinatorial invariant part of `n` avoids its boundary.
pub fn isolating_check(n: &CubeSet, f: &MultivaluedCubeMap) -> IsolationCheck {
    let inv = invariant_part(n, f);
    let boundary = combinatorial_boundary(&f.grid, n);
    let offending: Vec<Cube> = inv.intersection(&boundary).copied().collect();
    IsolationCheck {
        isolating: offending.is_empty(),
        invariant_part: inv.len(),
        offending,
    }
}
