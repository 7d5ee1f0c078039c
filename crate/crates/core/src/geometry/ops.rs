use super::{Cells, GeometryError, Hypersurface, Vec3};

fn check_len(mesh: &Hypersurface, field: &[f64]) -> Result<(), GeometryError> {
    if field.len() != mesh.len() {
        return Err(GeometryError::InvalidData(format!(
            "field has {} values for {} vertices",
            field.len(),
            mesh.len()
        )));
    }
    Ok(())
}

/// Discrete Laplace–Beltrami operator: cotangent weights for surfaces,
/// inverse edge lengths for curves, both normalized by the lumped area.
///
/// Symmetric in the `dμ`-weighted inner product and zero on constants.
pub fn laplace_beltrami(mesh: &Hypersurface, field: &[f64]) -> Result<Vec<f64>, GeometryError> {
    check_len(mesh, field)?;
    let mut out = vec![0.0; mesh.len()];
    for (e, w) in mesh.topology().edges().iter().zip(mesh.edge_weights()) {
        let d = w * (field[e[1]] - field[e[0]]);
        out[e[0]] += d;
        out[e[1]] -= d;
    }
    for (o, a) in out.iter_mut().zip(mesh.area_weights()) {
        *o /= a;
    }
    Ok(out)
}

/// Per-vertex tangential gradient: element gradients of the piecewise-affine
/// interpolant, averaged with element measures.
pub fn tangential_gradient(mesh: &Hypersurface, field: &[f64]) -> Result<Vec<Vec3>, GeometryError> {
    check_len(mesh, field)?;
    let x = mesh.positions();
    let mut acc = vec![Vec3::zeros(); mesh.len()];
    let mut weight = vec![0.0; mesh.len()];
    match mesh.cells() {
        Cells::Edges(edges) => {
            for e in edges {
                let d = x[e[1]] - x[e[0]];
                let len = d.norm();
                let grad = d * ((field[e[1]] - field[e[0]]) / (len * len));
                for &v in e {
                    acc[v] += grad * len;
                    weight[v] += len;
                }
            }
        }
        Cells::Triangles(tris) => {
            for t in tris {
                let (a, b, c) = (x[t[0]], x[t[1]], x[t[2]]);
                let cross = (b - a).cross(&(c - a));
                let double_area = cross.norm();
                let n = cross / double_area;
                let grad = (n.cross(&(c - b)) * field[t[0]]
                    + n.cross(&(a - c)) * field[t[1]]
                    + n.cross(&(b - a)) * field[t[2]])
                    / double_area;
                let area = 0.5 * double_area;
                for &v in t {
                    acc[v] += grad * area;
                    weight[v] += area;
                }
            }
        }
    }
    Ok(acc.into_iter().zip(weight).map(|(g, w)| g / w).collect())
}

/// `|∇f|` per vertex.
pub fn tangential_gradient_norm(mesh: &Hypersurface, field: &[f64]) -> Result<Vec<f64>, GeometryError> {
    Ok(tangential_gradient(mesh, field)?.iter().map(|g| g.norm()).collect())
}
