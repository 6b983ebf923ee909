//! Static kd-tree over a column-group subspace, max-norm metric.
//!
//! Points are the sample rows restricted to one subspace; queries are always
//! by sample index against the same set. Every node keeps its bounding box
//! and its contiguous range of point ids, so range counting can absorb whole
//! subtrees and neighbor queries prune on the box distance. Results are
//! exact: candidate selection uses the same `f64` max-norm values a direct
//! scan would compute, and k-nearest ties are broken by `(distance, index)`.

const LEAF_SIZE: usize = 16;
const NO_CHILD: u32 = u32::MAX;

#[derive(Debug, Clone, Copy)]
struct Node {
    /// Child node ids; `NO_CHILD` marks a leaf.
    left: u32,
    right: u32,
    /// Range of this subtree in `order`.
    start: u32,
    end: u32,
}

#[derive(Debug)]
pub(crate) struct KdTree {
    dims: usize,
    /// Point-major coordinates indexed by original sample id.
    pts: Vec<f64>,
    /// Permutation of sample ids, contiguous per subtree.
    order: Vec<u32>,
    nodes: Vec<Node>,
    /// Per node: `dims` lows then `dims` highs.
    boxes: Vec<f64>,
}

impl KdTree {
    pub fn build(cols: &[&[f64]]) -> KdTree {
        let dims = cols.len();
        let n = cols[0].len();
        let mut pts = Vec::with_capacity(n * dims);
        for i in 0..n {
            for col in cols {
                pts.push(col[i]);
            }
        }
        let mut tree = KdTree {
            dims,
            pts,
            order: (0..n as u32).collect(),
            nodes: Vec::new(),
            boxes: Vec::new(),
        };
        tree.build_node(0, n);
        tree
    }

    fn build_node(&mut self, start: usize, end: usize) -> u32 {
        let dims = self.dims;
        let id = self.nodes.len() as u32;
        self.nodes.push(Node {
            left: NO_CHILD,
            right: NO_CHILD,
            start: start as u32,
            end: end as u32,
        });
        let box_at = self.boxes.len();
        self.boxes.extend(std::iter::repeat(f64::INFINITY).take(dims));
        self.boxes
            .extend(std::iter::repeat(f64::NEG_INFINITY).take(dims));
        for &p in &self.order[start..end] {
            for d in 0..dims {
                let value = self.pts[p as usize * dims + d];
                if value < self.boxes[box_at + d] {
                    self.boxes[box_at + d] = value;
                }
                if value > self.boxes[box_at + dims + d] {
                    self.boxes[box_at + dims + d] = value;
                }
            }
        }
        if end - start <= LEAF_SIZE {
            return id;
        }
        // Split on the widest box dimension, ties to the lowest dimension.
        let mut split_dim = 0;
        let mut best = f64::NEG_INFINITY;
        for d in 0..dims {
            let spread = self.boxes[box_at + dims + d] - self.boxes[box_at + d];
            if spread > best {
                best = spread;
                split_dim = d;
            }
        }
        let mid = (start + end) / 2;
        let pts = &self.pts;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            pts[a as usize * dims + split_dim]
                .total_cmp(&pts[b as usize * dims + split_dim])
                .then(a.cmp(&b))
        });
        let left = self.build_node(start, mid);
        let right = self.build_node(mid, end);
        self.nodes[id as usize].left = left;
        self.nodes[id as usize].right = right;
        id
    }

    #[inline]
    pub fn dist(&self, a: u32, b: u32) -> f64 {
        let pa = a as usize * self.dims;
        let pb = b as usize * self.dims;
        let mut best = 0.0f64;
        for d in 0..self.dims {
            let diff = (self.pts[pa + d] - self.pts[pb + d]).abs();
            if diff > best {
                best = diff;
            }
        }
        best
    }

    /// Max-norm distance from the query point to a node's bounding box
    /// (zero inside the box).
    #[inline]
    fn box_min_dist(&self, query: usize, node: u32) -> f64 {
        let base = node as usize * 2 * self.dims;
        let q = query * self.dims;
        let mut best = 0.0f64;
        for d in 0..self.dims {
            let lo = self.boxes[base + d] - self.pts[q + d];
            let hi = self.pts[q + d] - self.boxes[base + self.dims + d];
            let gap = lo.max(hi);
            if gap > best {
                best = gap;
            }
        }
        best
    }

    /// Max-norm distance from the query point to the farthest corner of a
    /// node's bounding box.
    #[inline]
    fn box_max_dist(&self, query: usize, node: u32) -> f64 {
        let base = node as usize * 2 * self.dims;
        let q = query * self.dims;
        let mut best = 0.0f64;
        for d in 0..self.dims {
            let lo = (self.pts[q + d] - self.boxes[base + d]).abs();
            let hi = (self.pts[q + d] - self.boxes[base + self.dims + d]).abs();
            let far = lo.max(hi);
            if far > best {
                best = far;
            }
        }
        best
    }

    /// The `k` nearest neighbors of sample `query` (itself excluded), sorted
    /// ascending by `(distance, index)`. Requires `k` < point count.
    pub fn k_nearest(&self, query: u32, k: usize) -> Vec<(f64, u32)> {
        debug_assert!(k < self.order.len());
        let mut heap: Vec<(f64, u32)> = Vec::with_capacity(k + 1);
        self.knn_node(0, query, k, &mut heap);
        heap.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        heap
    }

    fn knn_node(&self, node: u32, query: u32, k: usize, heap: &mut Vec<(f64, u32)>) {
        let info = self.nodes[node as usize];
        if heap.len() == k {
            let worst = heap[0];
            let bound = self.box_min_dist(query as usize, node);
            if bound > worst.0 {
                return;
            }
        }
        if info.left == NO_CHILD {
            for &p in &self.order[info.start as usize..info.end as usize] {
                if p == query {
                    continue;
                }
                let d = self.dist(query, p);
                let candidate = (d, p);
                if heap.len() < k {
                    heap_push(heap, candidate);
                } else if candidate_less(candidate, heap[0]) {
                    heap_replace_top(heap, candidate);
                }
            }
            return;
        }
        // Nearer child first.
        let (first, second) = {
            let dl = self.box_min_dist(query as usize, info.left);
            let dr = self.box_min_dist(query as usize, info.right);
            if dl <= dr {
                (info.left, info.right)
            } else {
                (info.right, info.left)
            }
        };
        self.knn_node(first, query, k, heap);
        self.knn_node(second, query, k, heap);
    }

    /// Number of points within `radius` of sample `query`, the query point
    /// included. Strict comparison by default; with `include_equal` the
    /// boundary counts (used with radius zero to count exact duplicates).
    pub fn count_within(&self, query: u32, radius: f64, include_equal: bool) -> usize {
        self.count_node(0, query, radius, include_equal)
    }

    fn count_node(&self, node: u32, query: u32, radius: f64, include_equal: bool) -> usize {
        let info = self.nodes[node as usize];
        let min_dist = self.box_min_dist(query as usize, node);
        if min_dist > radius || (!include_equal && min_dist >= radius) {
            return 0;
        }
        let max_dist = self.box_max_dist(query as usize, node);
        if max_dist < radius || (include_equal && max_dist <= radius) {
            return (info.end - info.start) as usize;
        }
        if info.left == NO_CHILD {
            let mut count = 0;
            for &p in &self.order[info.start as usize..info.end as usize] {
                let d = self.dist(query, p);
                if d < radius || (include_equal && d <= radius) {
                    count += 1;
                }
            }
            return count;
        }
        self.count_node(info.left, query, radius, include_equal)
            + self.count_node(info.right, query, radius, include_equal)
    }

    /// Visits every point within `radius` of sample `query` (query point
    /// included), for union counting across several trees.
    pub fn visit_within<F: FnMut(u32)>(
        &self,
        query: u32,
        radius: f64,
        include_equal: bool,
        f: &mut F,
    ) {
        self.visit_node(0, query, radius, include_equal, f);
    }

    fn visit_node<F: FnMut(u32)>(
        &self,
        node: u32,
        query: u32,
        radius: f64,
        include_equal: bool,
        f: &mut F,
    ) {
        let info = self.nodes[node as usize];
        let min_dist = self.box_min_dist(query as usize, node);
        if min_dist > radius || (!include_equal && min_dist >= radius) {
            return;
        }
        let max_dist = self.box_max_dist(query as usize, node);
        if max_dist < radius || (include_equal && max_dist <= radius) {
            for &p in &self.order[info.start as usize..info.end as usize] {
                f(p);
            }
            return;
        }
        if info.left == NO_CHILD {
            for &p in &self.order[info.start as usize..info.end as usize] {
                let d = self.dist(query, p);
                if d < radius || (include_equal && d <= radius) {
                    f(p);
                }
            }
            return;
        }
        self.visit_node(info.left, query, radius, include_equal, f);
        self.visit_node(info.right, query, radius, include_equal, f);
    }
}

#[inline]
fn candidate_less(a: (f64, u32), b: (f64, u32)) -> bool {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).is_lt()
}

/// Binary max-heap on `(distance, index)` kept in a plain vector.
fn heap_push(heap: &mut Vec<(f64, u32)>, item: (f64, u32)) {
    heap.push(item);
    let mut child = heap.len() - 1;
    while child > 0 {
        let parent = (child - 1) / 2;
        if candidate_less(heap[parent], heap[child]) {
            heap.swap(parent, child);
            child = parent;
        } else {
            break;
        }
    }
}

fn heap_replace_top(heap: &mut Vec<(f64, u32)>, item: (f64, u32)) {
    heap[0] = item;
    let mut parent = 0;
    loop {
        let left = 2 * parent + 1;
        if left >= heap.len() {
            break;
        }
        let right = left + 1;
        let bigger = if right < heap.len() && candidate_less(heap[left], heap[right]) {
            right
        } else {
            left
        };
        if candidate_less(heap[parent], heap[bigger]) {
            heap.swap(parent, bigger);
            parent = bigger;
        } else {
            break;
        }
    }
}
