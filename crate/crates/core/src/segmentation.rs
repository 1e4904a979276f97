//! SLIC superpixels and the region structure derived from them: centroids,
//! the image-border set and the 2-hop neighbor sets used by the random walk.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use crate::color::{rgb_to_lab, Lab};
use crate::error::{Error, Result};
use crate::image::RgbImage;

/// SLIC tuning knobs. The defaults are the classic values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlicParams {
    pub compactness: f64,
    pub iterations: usize,
}

impl Default for SlicParams {
    fn default() -> Self {
        Self { compactness: 10.0, iterations: 10 }
    }
}

/// A pixel-to-superpixel labeling together with its derived structure.
#[derive(Debug, Clone, PartialEq)]
pub struct Segmentation {
    width: usize,
    height: usize,
    labels: Vec<usize>,
    sizes: Vec<usize>,
    centroids: Vec<(f64, f64)>,
    boundary: Vec<usize>,
    adjacency: Vec<Vec<usize>>,
    neighbors: Vec<Vec<usize>>,
}

impl Segmentation {
    /// Validates a raw label map and derives centroids, the border set and
    /// neighbor sets. Labels must cover `0..N` with 4-connected regions.
    pub fn from_labels(width: usize, height: usize, labels: Vec<usize>) -> Result<Self> {
        if width == 0 || height == 0 || labels.len() != width * height {
            return Err(Error::invalid("label map does not match the image size"));
        }
        let n = labels.iter().copied().max().map_or(0, |m| m + 1);
        let mut sizes = vec![0usize; n];
        let mut sum_x = vec![0.0f64; n];
        let mut sum_y = vec![0.0f64; n];
        for (p, &l) in labels.iter().enumerate() {
            sizes[l] += 1;
            sum_x[l] += (p % width) as f64;
            sum_y[l] += (p / width) as f64;
        }
        if let Some(empty) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::invalid(alloc::format!("superpixel {empty} has no pixels")));
        }
        if let Some(split) = first_disconnected(width, height, &labels, n) {
            return Err(Error::invalid(alloc::format!(
                "superpixel {split} is not 4-connected"
            )));
        }
        let centroids = (0..n).map(|i| (sum_x[i] / sizes[i] as f64, sum_y[i] / sizes[i] as f64)).collect();
        let boundary = scan_boundary(width, height, &labels, n);
        let adjacency = edge_adjacency(width, height, &labels, n);
        let neighbors = two_hop_neighbors(&adjacency, &boundary);
        Ok(Self { width, height, labels, sizes, centroids, boundary, adjacency, neighbors })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Number of superpixels.
    pub fn len(&self) -> usize {
        self.sizes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sizes.is_empty()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, x: usize, y: usize) -> usize {
        self.labels[y * self.width + x]
    }

    /// Pixel count of every superpixel.
    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Mean pixel coordinate `(x, y)` of every superpixel.
    pub fn centroids(&self) -> &[(f64, f64)] {
        &self.centroids
    }

    /// Sorted indices of superpixels touching the image border.
    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    pub fn is_boundary(&self, i: usize) -> bool {
        self.boundary.binary_search(&i).is_ok()
    }

    /// Superpixels sharing at least one pixel edge with `i`, sorted.
    pub fn adjacent(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    /// Full neighbor set of `i`: adjacency, 2-hop, and the border clique.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn neighbor_sets(&self) -> &[Vec<usize>] {
        &self.neighbors
    }

    /// Spreads one value per superpixel over its pixels.
    pub fn paint(&self, per_superpixel: &[f64]) -> Vec<f64> {
        self.labels.iter().map(|&l| per_superpixel[l]).collect()
    }
}

/// Per-superpixel neighbor sets `adjacent ∪ 2-hop ∪ border clique`.
pub fn compute_neighbors(seg: &Segmentation) -> Vec<Vec<usize>> {
    seg.neighbors.clone()
}

/// Superpixels with at least one pixel on the outermost rows or columns.
pub fn boundary_set(seg: &Segmentation) -> Vec<usize> {
    seg.boundary.clone()
}

fn first_disconnected(width: usize, height: usize, labels: &[usize], n: usize) -> Option<usize> {
    let mut seen = vec![false; labels.len()];
    let mut visited_label = vec![false; n];
    let mut queue = VecDeque::new();
    for start in 0..labels.len() {
        if seen[start] {
            continue;
        }
        let l = labels[start];
        if visited_label[l] {
            return Some(l);
        }
        visited_label[l] = true;
        seen[start] = true;
        queue.push_back(start);
        while let Some(p) = queue.pop_front() {
            for q in four_neighbors(p, width, height) {
                if !seen[q] && labels[q] == l {
                    seen[q] = true;
                    queue.push_back(q);
                }
            }
        }
    }
    None
}

fn four_neighbors(p: usize, width: usize, height: usize) -> impl Iterator<Item = usize> {
    let (x, y) = (p % width, p / width);
    let left = (x > 0).then(|| p - 1);
    let right = (x + 1 < width).then(|| p + 1);
    let up = (y > 0).then(|| p - width);
    let down = (y + 1 < height).then(|| p + width);
    [left, right, up, down].into_iter().flatten()
}

fn scan_boundary(width: usize, height: usize, labels: &[usize], n: usize) -> Vec<usize> {
    let mut on_border = vec![false; n];
    for x in 0..width {
        on_border[labels[x]] = true;
        on_border[labels[(height - 1) * width + x]] = true;
    }
    for y in 0..height {
        on_border[labels[y * width]] = true;
        on_border[labels[y * width + width - 1]] = true;
    }
    (0..n).filter(|&i| on_border[i]).collect()
}

fn edge_adjacency(width: usize, height: usize, labels: &[usize], n: usize) -> Vec<Vec<usize>> {
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut link = |a: usize, b: usize| {
        if a != b {
            adj[a].push(b);
            adj[b].push(a);
        }
    };
    for y in 0..height {
        for x in 0..width {
            let p = y * width + x;
            if x + 1 < width {
                link(labels[p], labels[p + 1]);
            }
            if y + 1 < height {
                link(labels[p], labels[p + width]);
            }
        }
    }
    for list in adj.iter_mut() {
        list.sort_unstable();
        list.dedup();
    }
    adj
}

fn two_hop_neighbors(adjacency: &[Vec<usize>], boundary: &[usize]) -> Vec<Vec<usize>> {
    let n = adjacency.len();
    let mut mark = vec![usize::MAX; n];
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut set = Vec::new();
        let mut add = |j: usize, set: &mut Vec<usize>| {
            if j != i && mark[j] != i {
                mark[j] = i;
                set.push(j);
            }
        };
        for &k in &adjacency[i] {
            add(k, &mut set);
            for &j in &adjacency[k] {
                add(j, &mut set);
            }
        }
        if boundary.binary_search(&i).is_ok() {
            for &j in boundary {
                add(j, &mut set);
            }
        }
        set.sort_unstable();
        out.push(set);
    }
    out
}

/// SLIC superpixels with default parameters.
pub fn slic_segment(img: &RgbImage, target_count: usize) -> Result<Segmentation> {
    slic_segment_with(img, target_count, SlicParams::default())
}

/// SLIC clustering in Lab + image coordinates, followed by connectivity
/// enforcement that folds stray fragments into their largest adjacent region.
pub fn slic_segment_with(img: &RgbImage, target_count: usize, params: SlicParams) -> Result<Segmentation> {
    let lab = rgb_to_lab(img);
    slic_on_lab(img.width(), img.height(), &lab, target_count, params)
}

/// SLIC on a precomputed Lab raster.
pub fn slic_on_lab(
    width: usize,
    height: usize,
    lab: &[Lab],
    target_count: usize,
    params: SlicParams,
) -> Result<Segmentation> {
    if target_count == 0 {
        return Err(Error::invalid("target superpixel count must be positive"));
    }
    if target_count > width * height / 4 {
        return Err(Error::invalid(alloc::format!(
            "{width}x{height} image is too small for {target_count} superpixels"
        )));
    }
    if lab.len() != width * height {
        return Err(Error::invalid("Lab raster does not match the image size"));
    }
    let k = target_count as f64;
    let (w, h) = (width as f64, height as f64);
    let step = libm::sqrt(w * h / k);
    let nx = (libm::round(libm::sqrt(k * w / h)) as usize).clamp(1, width);
    let ny = (libm::round(k / nx as f64) as usize).clamp(1, height);

    // center: [l, a, b, x, y]
    let mut centers: Vec<[f64; 5]> = Vec::with_capacity(nx * ny);
    for gy in 0..ny {
        for gx in 0..nx {
            // pixel-index frame: pixel p spans [p - 0.5, p + 0.5]
            let cx = (gx as f64 + 0.5) * w / nx as f64 - 0.5;
            let cy = (gy as f64 + 0.5) * h / ny as f64 - 0.5;
            let px = (libm::round(cx) as usize).min(width - 1);
            let py = (libm::round(cy) as usize).min(height - 1);
            let c = lab[py * width + px];
            centers.push([c.l, c.a, c.b, cx, cy]);
        }
    }

    let mut labels: Vec<usize> = (0..width * height)
        .map(|p| {
            let gx = (p % width) * nx / width;
            let gy = (p / width) * ny / height;
            gy * nx + gx
        })
        .collect();
    let mut dist = vec![f64::INFINITY; width * height];
    let radius = libm::ceil(step.max(w / nx as f64).max(h / ny as f64)) as isize + 1;
    let spatial_weight = (params.compactness / step) * (params.compactness / step);

    for _ in 0..params.iterations {
        dist.iter_mut().for_each(|d| *d = f64::INFINITY);
        for (ci, c) in centers.iter().enumerate() {
            let (cx, cy) = (libm::round(c[3]) as isize, libm::round(c[4]) as isize);
            let x0 = (cx - radius).max(0) as usize;
            let x1 = ((cx + radius) as usize).min(width - 1);
            let y0 = (cy - radius).max(0) as usize;
            let y1 = ((cy + radius) as usize).min(height - 1);
            for y in y0..=y1 {
                for x in x0..=x1 {
                    let p = y * width + x;
                    let px = lab[p];
                    let dc = (px.l - c[0]) * (px.l - c[0])
                        + (px.a - c[1]) * (px.a - c[1])
                        + (px.b - c[2]) * (px.b - c[2]);
                    let dx = x as f64 - c[3];
                    let dy = y as f64 - c[4];
                    let d = dc + (dx * dx + dy * dy) * spatial_weight;
                    if d < dist[p] {
                        dist[p] = d;
                        labels[p] = ci;
                    }
                }
            }
        }
        let mut sums = vec![[0.0f64; 6]; centers.len()];
        for (p, &l) in labels.iter().enumerate() {
            let s = &mut sums[l];
            let px = lab[p];
            s[0] += px.l;
            s[1] += px.a;
            s[2] += px.b;
            s[3] += (p % width) as f64;
            s[4] += (p / width) as f64;
            s[5] += 1.0;
        }
        for (c, s) in centers.iter_mut().zip(&sums) {
            if s[5] > 0.0 {
                for d in 0..5 {
                    c[d] = s[d] / s[5];
                }
            }
        }
    }

    let labels = enforce_connectivity(width, height, &labels, centers.len());
    Segmentation::from_labels(width, height, labels)
}

struct DisjointSets {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl DisjointSets {
    fn new(sizes: Vec<usize>) -> Self {
        Self { parent: (0..sizes.len()).collect(), size: sizes }
    }

    fn find(&mut self, mut a: usize) -> usize {
        while self.parent[a] != a {
            self.parent[a] = self.parent[self.parent[a]];
            a = self.parent[a];
        }
        a
    }

    fn absorb(&mut self, into: usize, from: usize) {
        let (into, from) = (self.find(into), self.find(from));
        if into != from {
            self.parent[from] = into;
            self.size[into] += self.size[from];
        }
    }
}

/// Splits every cluster into 4-connected components; the largest component
/// of each cluster keeps its identity and every other component is merged
/// into an adjacent region. Output labels are compact and numbered in raster
/// order.
fn enforce_connectivity(width: usize, height: usize, labels: &[usize], clusters: usize) -> Vec<usize> {
    let total = width * height;
    let mut comp = vec![usize::MAX; total];
    let mut comp_size: Vec<usize> = Vec::new();
    let mut comp_label: Vec<usize> = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..total {
        if comp[start] != usize::MAX {
            continue;
        }
        let id = comp_size.len();
        let l = labels[start];
        comp[start] = id;
        queue.push_back(start);
        let mut size = 0;
        while let Some(p) = queue.pop_front() {
            size += 1;
            for q in four_neighbors(p, width, height) {
                if comp[q] == usize::MAX && labels[q] == l {
                    comp[q] = id;
                    queue.push_back(q);
                }
            }
        }
        comp_size.push(size);
        comp_label.push(l);
    }

    let m = comp_size.len();
    let mut largest = vec![usize::MAX; clusters];
    for c in 0..m {
        let l = comp_label[c];
        if largest[l] == usize::MAX || comp_size[c] > comp_size[largest[l]] {
            largest[l] = c;
        }
    }

    let mut comp_adj: Vec<Vec<usize>> = vec![Vec::new(); m];
    for p in 0..total {
        let (x, y) = (p % width, p / width);
        if x + 1 < width && comp[p] != comp[p + 1] {
            comp_adj[comp[p]].push(comp[p + 1]);
            comp_adj[comp[p + 1]].push(comp[p]);
        }
        if y + 1 < height && comp[p] != comp[p + width] {
            comp_adj[comp[p]].push(comp[p + width]);
            comp_adj[comp[p + width]].push(comp[p]);
        }
    }
    for list in comp_adj.iter_mut() {
        list.sort_unstable();
        list.dedup();
    }

    // Grow the anchors (largest component of each cluster) over the
    // component graph: every stray fragment joins the largest anchored
    // region it touches. Anchors never merge, so no region can snowball.
    let mut sets = DisjointSets::new(comp_size.clone());
    let mut anchored: Vec<bool> = (0..m).map(|c| largest[comp_label[c]] == c).collect();
    loop {
        let mut changed = false;
        for c in 0..m {
            if anchored[c] {
                continue;
            }
            let mut best: Option<(usize, usize)> = None;
            for &d in &comp_adj[c] {
                if !anchored[d] {
                    continue;
                }
                let root = sets.find(d);
                let size = sets.size[root];
                if best.map_or(true, |(s, r)| size > s || (size == s && root < r)) {
                    best = Some((size, root));
                }
            }
            if let Some((_, root)) = best {
                sets.absorb(root, c);
                anchored[c] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    let mut remap = vec![usize::MAX; m];
    let mut next = 0;
    let mut out = vec![0usize; total];
    for p in 0..total {
        let root = sets.find(comp[p]);
        if remap[root] == usize::MAX {
            remap[root] = next;
            next += 1;
        }
        out[p] = remap[root];
    }
    out
}
