//! Connected-component labeling of binary rasters.

use std::collections::VecDeque;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Connectivity {
    Four,
    Eight,
}

impl Connectivity {
    fn offsets(self) -> &'static [(isize, isize)] {
        match self {
            Connectivity::Four => &[(1, 0), (-1, 0), (0, 1), (0, -1)],
            Connectivity::Eight => &[(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)],
        }
    }
}

/// Component labels: `0` for unset pixels, `1..=count` in raster order of
/// each component's first pixel.
#[derive(Debug, Clone)]
pub struct Components {
    pub labels: Vec<u32>,
    pub count: usize,
    pub sizes: Vec<usize>,
}

pub fn label_components(mask: &[bool], width: usize, height: usize, conn: Connectivity) -> Components {
    debug_assert_eq!(mask.len(), width * height);
    let mut labels = vec![0u32; mask.len()];
    let mut sizes = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..mask.len() {
        if !mask[start] || labels[start] != 0 {
            continue;
        }
        sizes.push(0);
        let id = sizes.len() as u32;
        labels[start] = id;
        queue.push_back(start);
        while let Some(p) = queue.pop_front() {
            sizes[id as usize - 1] += 1;
            let (x, y) = ((p % width) as isize, (p / width) as isize);
            for &(dx, dy) in conn.offsets() {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= width as isize || ny >= height as isize {
                    continue;
                }
                let q = ny as usize * width + nx as usize;
                if mask[q] && labels[q] == 0 {
                    labels[q] = id;
                    queue.push_back(q);
                }
            }
        }
    }
    Components {
        labels,
        count: sizes.len(),
        sizes,
    }
}

/// Disjoint-set forest with union by size.
#[derive(Debug, Clone)]
pub(crate) struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut a: usize) -> usize {
        while self.parent[a] as usize != a {
            let grand = self.parent[self.parent[a] as usize];
            self.parent[a] = grand;
            a = grand as usize;
        }
        a
    }

    /// Merges the sets of `a` and `b`; returns the new root.
    pub fn union(&mut self, a: usize, b: usize) -> usize {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return ra;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra as u32;
        self.size[ra] += self.size[rb];
        ra
    }

    pub fn size(&self, root: usize) -> usize {
        self.size[root] as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mask(rows: &[&str]) -> (Vec<bool>, usize, usize) {
        let w = rows[0].len();
        (
            rows.iter().flat_map(|r| r.chars().map(|c| c == '#')).collect(),
            w,
            rows.len(),
        )
    }

    #[test]
    fn diagonal_connectivity() {
        let (m, w, h) = mask(&["#..", ".#.", "..#"]);
        assert_eq!(label_components(&m, w, h, Connectivity::Four).count, 3);
        let c8 = label_components(&m, w, h, Connectivity::Eight);
        assert_eq!(c8.count, 1);
        assert_eq!(c8.sizes, vec![3]);
    }

    #[test]
    fn labels_in_raster_order() {
        let (m, w, h) = mask(&["#.##", "....", "##.#"]);
        let c = label_components(&m, w, h, Connectivity::Four);
        assert_eq!(c.count, 4);
        assert_eq!(c.labels[0], 1);
        assert_eq!(c.labels[2], 2);
        assert_eq!(c.labels[8], 3);
        assert_eq!(c.sizes, vec![1, 2, 2, 1]);
    }

    #[test]
    fn union_find_sizes() {
        let mut uf = UnionFind::new(5);
        uf.union(0, 1);
        uf.union(3, 4);
        let r = uf.union(1, 4);
        assert_eq!(uf.size(r), 4);
        assert_eq!(uf.find(0), uf.find(3));
        assert_ne!(uf.find(2), uf.find(0));
    }
}
