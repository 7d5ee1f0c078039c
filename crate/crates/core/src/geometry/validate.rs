use std::collections::{BTreeMap, HashMap};

use super::{triangle_area, Cells, GeometryError, Vec3, DEGENERATE_AREA_FRACTION};

/// A closedness or orientation condition that the input fails.
pub type Violation = GeometryError;

/// Outcome of [`validate`]: empty when the mesh is a valid closed hypersurface.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    /// First violation as an error, if any.
    pub fn into_result(self) -> Result<(), GeometryError> {
        match self.violations.into_iter().next() {
            None => Ok(()),
            Some(v) => Err(v),
        }
    }
}

/// Checks that `cells` describe a closed, consistently oriented manifold
/// without degenerate elements.
pub fn validate(positions: &[Vec3], cells: &Cells) -> ValidationReport {
    let mut violations = Vec::new();
    let nv = positions.len();
    let out_of_range = match cells {
        Cells::Edges(e) => e.iter().flatten().any(|&i| i >= nv),
        Cells::Triangles(t) => t.iter().flatten().any(|&i| i >= nv),
    };
    if out_of_range {
        violations.push(GeometryError::InvalidData("vertex index out of range".into()));
        return ValidationReport { violations };
    }
    if cells.is_empty() {
        violations.push(GeometryError::InvalidData("no cells".into()));
        return ValidationReport { violations };
    }
    match cells {
        Cells::Edges(edges) => validate_loops(positions, edges, &mut violations),
        Cells::Triangles(tris) => validate_triangles(positions, tris, &mut violations),
    }
    ValidationReport { violations }
}

fn validate_loops(positions: &[Vec3], edges: &[[usize; 2]], out: &mut Vec<Violation>) {
    let nv = positions.len();
    let mut outgoing = vec![0usize; nv];
    let mut incoming = vec![0usize; nv];
    let mut first_edge = vec![usize::MAX; nv];
    for (k, e) in edges.iter().enumerate() {
        outgoing[e[0]] += 1;
        incoming[e[1]] += 1;
        for &v in e {
            if first_edge[v] == usize::MAX {
                first_edge[v] = k;
            }
        }
        if e[0] == e[1] || (positions[e[1]] - positions[e[0]]).norm() == 0.0 {
            out.push(GeometryError::DegenerateElement {
                element: k,
                detail: "zero-length edge".into(),
            });
        }
    }
    for v in 0..nv {
        let degree = outgoing[v] + incoming[v];
        match degree {
            0 => out.push(GeometryError::NonManifold {
                vertex: v,
                detail: "isolated vertex".into(),
            }),
            1 => {
                let e = edges[first_edge[v]];
                out.push(GeometryError::OpenBoundary(e[0], e[1]));
            }
            2 if outgoing[v] != 1 => {
                let e = edges[first_edge[v]];
                out.push(GeometryError::InconsistentOrientation(e[0], e[1]));
            }
            2 => {}
            d => out.push(GeometryError::NonManifold {
                vertex: v,
                detail: format!("{d} incident edges"),
            }),
        }
    }
}

fn validate_triangles(positions: &[Vec3], tris: &[[usize; 3]], out: &mut Vec<Violation>) {
    let nv = positions.len();
    let areas: Vec<f64> = tris
        .iter()
        .map(|t| triangle_area(&positions[t[0]], &positions[t[1]], &positions[t[2]]))
        .collect();
    let mean_area = areas.iter().sum::<f64>() / areas.len() as f64;
    for (k, (t, a)) in tris.iter().zip(&areas).enumerate() {
        if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
            out.push(GeometryError::DegenerateElement {
                element: k,
                detail: "repeated vertex".into(),
            });
        } else if !(*a >= DEGENERATE_AREA_FRACTION * mean_area) || *a == 0.0 {
            out.push(GeometryError::DegenerateElement {
                element: k,
                detail: format!("area {a:e} below threshold"),
            });
        }
    }

    // Directed half-edge multiplicities, keyed deterministically.
    let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
    for t in tris {
        for i in 0..3 {
            *directed.entry((t[i], t[(i + 1) % 3])).or_default() += 1;
        }
    }
    let mut undirected: BTreeMap<(usize, usize), (usize, usize)> = BTreeMap::new();
    for (&(a, b), &c) in &directed {
        let key = (a.min(b), a.max(b));
        let slot = undirected.entry(key).or_default();
        if a < b {
            slot.0 += c;
        } else {
            slot.1 += c;
        }
    }
    let mut edges_ok = true;
    for (&(a, b), &(fwd, bwd)) in &undirected {
        match fwd + bwd {
            1 => {
                edges_ok = false;
                out.push(GeometryError::OpenBoundary(a, b));
            }
            2 if fwd != 1 => {
                edges_ok = false;
                out.push(GeometryError::InconsistentOrientation(a, b));
            }
            2 => {}
            _ => {
                edges_ok = false;
                out.push(GeometryError::NonManifold {
                    vertex: a,
                    detail: format!("edge ({a}, {b}) shared by {} triangles", fwd + bwd),
                });
            }
        }
    }

    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); nv];
    for (k, t) in tris.iter().enumerate() {
        for &v in t {
            incident[v].push(k);
        }
    }
    for (v, faces) in incident.iter().enumerate() {
        if faces.is_empty() {
            out.push(GeometryError::NonManifold {
                vertex: v,
                detail: "isolated vertex".into(),
            });
        }
    }
    if !edges_ok {
        return;
    }
    // With every edge shared by exactly two triangles, each vertex link is a
    // union of cycles; a manifold vertex has exactly one.
    for (v, faces) in incident.iter().enumerate() {
        if faces.is_empty() {
            continue;
        }
        let mut next: HashMap<usize, usize> = HashMap::new();
        for &k in faces {
            let t = tris[k];
            let i = t.iter().position(|&x| x == v).unwrap();
            next.insert(t[(i + 1) % 3], t[(i + 2) % 3]);
        }
        let start = *next.keys().min().unwrap();
        let mut cur = start;
        let mut steps = 0;
        loop {
            cur = next[&cur];
            steps += 1;
            if cur == start || steps > faces.len() {
                break;
            }
        }
        if steps != faces.len() {
            out.push(GeometryError::NonManifold {
                vertex: v,
                detail: "vertex link is not a single cycle".into(),
            });
        }
    }
}
