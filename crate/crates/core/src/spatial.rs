//! Exact k-nearest-neighbour queries over a static 3D point set.
//!
//! The index is a median-split kd-tree with per-node bounding boxes. Results
//! are ordered by distance, with ties broken by ascending point id, so every
//! query is deterministic and identical to a brute-force scan.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use glam::DVec3;
use thiserror::Error;

const LEAF_SIZE: usize = 8;

#[derive(Debug, Error, PartialEq)]
pub enum SpatialError {
    #[error("cannot build an index over zero points")]
    Empty,
    #[error("requested {requested} neighbours but only {available} are available")]
    TooManyRequested { requested: usize, available: usize },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Neighbor {
    pub id: usize,
    pub distance: f64,
}

#[derive(Clone, Copy, Debug)]
struct Candidate {
    dist2: f64,
    id: usize,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Candidate {}
impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist2.total_cmp(&other.dist2).then(self.id.cmp(&other.id))
    }
}

#[derive(Clone, Debug)]
struct Node {
    lo: DVec3,
    hi: DVec3,
    kind: NodeKind,
}

#[derive(Clone, Debug)]
enum NodeKind {
    Leaf { start: usize, end: usize },
    Split { left: usize, right: usize },
}

#[derive(Clone, Debug)]
pub struct PointIndex {
    points: Vec<DVec3>,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

impl PointIndex {
    pub fn build(points: &[DVec3]) -> Result<Self, SpatialError> {
        if points.is_empty() {
            return Err(SpatialError::Empty);
        }
        let mut index = Self {
            points: points.to_vec(),
            order: (0..points.len()).collect(),
            nodes: Vec::new(),
        };
        index.build_node(0, points.len());
        Ok(index)
    }

    fn build_node(&mut self, start: usize, end: usize) -> usize {
        let (lo, hi) = self.order[start..end].iter().fold(
            (DVec3::splat(f64::INFINITY), DVec3::splat(f64::NEG_INFINITY)),
            |(lo, hi), &i| (lo.min(self.points[i]), hi.max(self.points[i])),
        );
        let id = self.nodes.len();
        self.nodes.push(Node {
            lo,
            hi,
            kind: NodeKind::Leaf { start, end },
        });
        if end - start > LEAF_SIZE {
            let extent = hi - lo;
            let axis = if extent.x >= extent.y && extent.x >= extent.z {
                0
            } else if extent.y >= extent.z {
                1
            } else {
                2
            };
            let mid = (start + end) / 2;
            let points = &self.points;
            self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
                points[a][axis].total_cmp(&points[b][axis]).then(a.cmp(&b))
            });
            let left = self.build_node(start, mid);
            let right = self.build_node(mid, end);
            self.nodes[id].kind = NodeKind::Split { left, right };
        }
        id
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, id: usize) -> DVec3 {
        self.points[id]
    }

    /// The `k` points nearest to `q`, optionally skipping point `exclude`.
    pub fn knn(&self, q: DVec3, k: usize, exclude: Option<usize>) -> Result<Vec<Neighbor>, SpatialError> {
        let available = self.points.len() - usize::from(exclude.is_some_and(|e| e < self.points.len()));
        if k > available {
            return Err(SpatialError::TooManyRequested {
                requested: k,
                available,
            });
        }
        if k == 0 {
            return Ok(Vec::new());
        }
        let mut heap = BinaryHeap::with_capacity(k + 1);
        self.knn_node(0, q, k, exclude, &mut heap);
        Ok(into_sorted(heap))
    }

    fn knn_node(
        &self,
        node: usize,
        q: DVec3,
        k: usize,
        exclude: Option<usize>,
        heap: &mut BinaryHeap<Candidate>,
    ) {
        match self.nodes[node].kind {
            NodeKind::Leaf { start, end } => {
                for &id in &self.order[start..end] {
                    if Some(id) == exclude {
                        continue;
                    }
                    let cand = Candidate {
                        dist2: q.distance_squared(self.points[id]),
                        id,
                    };
                    if heap.len() < k {
                        heap.push(cand);
                    } else if cand < *heap.peek().expect("heap is full") {
                        heap.pop();
                        heap.push(cand);
                    }
                }
            }
            NodeKind::Split { left, right } => {
                let dl = self.box_dist2(left, q);
                let dr = self.box_dist2(right, q);
                let order = if dl <= dr {
                    [(left, dl), (right, dr)]
                } else {
                    [(right, dr), (left, dl)]
                };
                for (child, d2) in order {
                    // Equal distances must still be visited: a tie may win on id.
                    if heap.len() == k && d2 > heap.peek().expect("heap is full").dist2 {
                        continue;
                    }
                    self.knn_node(child, q, k, exclude, heap);
                }
            }
        }
    }

    /// All points within distance `radius` of `q` (inclusive), sorted.
    pub fn within_radius(&self, q: DVec3, radius: f64) -> Vec<Neighbor> {
        let r2 = radius * radius;
        let mut found = Vec::new();
        let mut stack = vec![0usize];
        while let Some(node) = stack.pop() {
            if self.box_dist2(node, q) > r2 {
                continue;
            }
            match self.nodes[node].kind {
                NodeKind::Leaf { start, end } => {
                    for &id in &self.order[start..end] {
                        let dist2 = q.distance_squared(self.points[id]);
                        if dist2 <= r2 {
                            found.push(Candidate { dist2, id });
                        }
                    }
                }
                NodeKind::Split { left, right } => {
                    stack.push(left);
                    stack.push(right);
                }
            }
        }
        found.sort_unstable();
        found.into_iter().map(to_neighbor).collect()
    }

    pub fn nearest(&self, q: DVec3) -> Neighbor {
        self.knn(q, 1, None).expect("index is non-empty")[0]
    }

    fn box_dist2(&self, node: usize, q: DVec3) -> f64 {
        let n = &self.nodes[node];
        let d = (n.lo - q).max(DVec3::ZERO).max(q - n.hi);
        d.length_squared()
    }
}

fn to_neighbor(c: Candidate) -> Neighbor {
    Neighbor {
        id: c.id,
        distance: c.dist2.sqrt(),
    }
}

fn into_sorted(heap: BinaryHeap<Candidate>) -> Vec<Neighbor> {
    heap.into_sorted_vec().into_iter().map(to_neighbor).collect()
}
