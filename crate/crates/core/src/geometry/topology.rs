use std::collections::BTreeMap;

use super::{Cells, GeometryError};

/// Adjacency derived once from validated cells and shared by every snapshot
/// of a trajectory.
#[derive(Debug)]
pub struct Topology {
    cells: Cells,
    num_vertices: usize,
    /// Unique edges. Curves keep the loop orientation; surfaces store `[lo, hi]`.
    edges: Vec<[usize; 2]>,
    /// Surfaces only: the vertex opposite each edge in its two triangles.
    edge_opposite: Vec<[usize; 2]>,
    adj_offsets: Vec<usize>,
    adj: Vec<(usize, usize)>,
    face_offsets: Vec<usize>,
    faces: Vec<usize>,
    prev: Vec<usize>,
    next: Vec<usize>,
}

impl Topology {
    pub(crate) fn build(cells: Cells, num_vertices: usize) -> Result<Self, GeometryError> {
        let mut edges = Vec::new();
        let mut edge_opposite = Vec::new();
        let mut prev = Vec::new();
        let mut next = Vec::new();
        match &cells {
            Cells::Edges(list) => {
                prev = vec![usize::MAX; num_vertices];
                next = vec![usize::MAX; num_vertices];
                for e in list {
                    next[e[0]] = e[1];
                    prev[e[1]] = e[0];
                    edges.push(*e);
                }
            }
            Cells::Triangles(tris) => {
                let mut map: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
                for t in tris {
                    for i in 0..3 {
                        let (a, b, c) = (t[i], t[(i + 1) % 3], t[(i + 2) % 3]);
                        map.entry((a.min(b), a.max(b))).or_default().push(c);
                    }
                }
                for ((a, b), opp) in map {
                    if opp.len() != 2 {
                        return Err(GeometryError::NonManifold {
                            vertex: a,
                            detail: format!("edge ({a}, {b}) has {} triangles", opp.len()),
                        });
                    }
                    edges.push([a, b]);
                    edge_opposite.push([opp[0], opp[1]]);
                }
            }
        }

        let mut degree = vec![0usize; num_vertices];
        for e in &edges {
            degree[e[0]] += 1;
            degree[e[1]] += 1;
        }
        let adj_offsets = prefix_sum(&degree);
        let mut adj = vec![(0, 0); adj_offsets[num_vertices]];
        let mut fill = adj_offsets.clone();
        for (k, e) in edges.iter().enumerate() {
            adj[fill[e[0]]] = (e[1], k);
            fill[e[0]] += 1;
            adj[fill[e[1]]] = (e[0], k);
            fill[e[1]] += 1;
        }

        let (face_offsets, faces) = match &cells {
            Cells::Triangles(tris) => {
                let mut count = vec![0usize; num_vertices];
                for t in tris {
                    for &v in t {
                        count[v] += 1;
                    }
                }
                let offsets = prefix_sum(&count);
                let mut faces = vec![0; offsets[num_vertices]];
                let mut fill = offsets.clone();
                for (k, t) in tris.iter().enumerate() {
                    for &v in t {
                        faces[fill[v]] = k;
                        fill[v] += 1;
                    }
                }
                (offsets, faces)
            }
            Cells::Edges(_) => (vec![0; num_vertices + 1], Vec::new()),
        };

        Ok(Self {
            cells,
            num_vertices,
            edges,
            edge_opposite,
            adj_offsets,
            adj,
            face_offsets,
            faces,
            prev,
            next,
        })
    }

    pub fn dim(&self) -> usize {
        self.cells.dim()
    }

    pub fn cells(&self) -> &Cells {
        &self.cells
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub(crate) fn edge_opposite(&self) -> &[[usize; 2]] {
        &self.edge_opposite
    }

    /// `(neighbor, edge index)` pairs of vertex `v`.
    pub fn neighbors(&self, v: usize) -> &[(usize, usize)] {
        &self.adj[self.adj_offsets[v]..self.adj_offsets[v + 1]]
    }

    /// Triangles incident to `v` (empty for curves).
    pub fn vertex_faces(&self, v: usize) -> &[usize] {
        &self.faces[self.face_offsets[v]..self.face_offsets[v + 1]]
    }

    /// Predecessor and successor of `v` along its loop (curves only).
    pub fn loop_neighbors(&self, v: usize) -> (usize, usize) {
        (self.prev[v], self.next[v])
    }

    /// Euler characteristic `V − E + F`.
    pub fn euler_characteristic(&self) -> i64 {
        let f = match &self.cells {
            Cells::Edges(_) => 0,
            Cells::Triangles(t) => t.len() as i64,
        };
        self.num_vertices as i64 - self.edges.len() as i64 + f
    }
}

fn prefix_sum(count: &[usize]) -> Vec<usize> {
    let mut offsets = Vec::with_capacity(count.len() + 1);
    offsets.push(0);
    let mut acc = 0;
    for c in count {
        acc += c;
        offsets.push(acc);
    }
    offsets
}
