use nalgebra::{Matrix5, Vector5};

use super::{GeometryError, Topology, Vec3, DEGENERATE_AREA_FRACTION};

pub(super) struct Computed {
    pub normals: Vec<Vec3>,
    pub mean_curvature: Vec<f64>,
    pub principal: Vec<f64>,
    pub area: Vec<f64>,
    pub edge_weights: Vec<f64>,
    pub fit_residual: Vec<f64>,
}

pub(super) fn compute(positions: &[Vec3], topo: &Topology) -> Result<Computed, GeometryError> {
    match topo.dim() {
        1 => compute_curve(positions, topo),
        _ => compute_surface(positions, topo),
    }
}

fn compute_curve(x: &[Vec3], topo: &Topology) -> Result<Computed, GeometryError> {
    let nv = x.len();
    let lengths: Vec<f64> = topo.edges().iter().map(|e| (x[e[1]] - x[e[0]]).norm()).collect();
    let mean_len = lengths.iter().sum::<f64>() / lengths.len() as f64;
    for (k, &l) in lengths.iter().enumerate() {
        if !(l > DEGENERATE_AREA_FRACTION * mean_len) {
            return Err(GeometryError::DegenerateElement {
                element: k,
                detail: format!("edge length {l:e}"),
            });
        }
    }

    let mut normals = Vec::with_capacity(nv);
    let mut mean_curvature = Vec::with_capacity(nv);
    let mut area = Vec::with_capacity(nv);
    for v in 0..nv {
        let (p, n) = topo.loop_neighbors(v);
        let t_in = x[v] - x[p];
        let t_out = x[n] - x[v];
        let (l_in, l_out) = (t_in.norm(), t_out.norm());
        let dual = 0.5 * (l_in + l_out);
        let cross = t_in.x * t_out.y - t_in.y * t_out.x;
        let turning = cross.atan2(t_in.dot(&t_out));
        // Outward normal of a counter-clockwise edge direction (tx, ty) is (ty, −tx).
        let n_in = Vec3::new(t_in.y, -t_in.x, 0.0) / l_in;
        let n_out = Vec3::new(t_out.y, -t_out.x, 0.0) / l_out;
        let sum = n_in + n_out;
        let norm = sum.norm();
        if norm < 1e-12 {
            return Err(GeometryError::DegenerateElement {
                element: v,
                detail: "curve folds back on itself".into(),
            });
        }
        normals.push(sum / norm);
        mean_curvature.push(turning / dual);
        area.push(dual);
    }
    let edge_weights = lengths.iter().map(|l| 1.0 / l).collect();
    Ok(Computed {
        normals,
        principal: mean_curvature.clone(),
        mean_curvature,
        area,
        edge_weights,
        fit_residual: vec![0.0; nv],
    })
}

fn compute_surface(x: &[Vec3], topo: &Topology) -> Result<Computed, GeometryError> {
    let nv = x.len();
    let tris = match topo.cells() {
        super::Cells::Triangles(t) => t,
        super::Cells::Edges(_) => unreachable!(),
    };
    let crosses: Vec<Vec3> = tris
        .iter()
        .map(|t| (x[t[1]] - x[t[0]]).cross(&(x[t[2]] - x[t[0]])))
        .collect();
    let areas: Vec<f64> = crosses.iter().map(|c| 0.5 * c.norm()).collect();
    let mean_area = areas.iter().sum::<f64>() / areas.len() as f64;
    for (k, &a) in areas.iter().enumerate() {
        if !(a >= DEGENERATE_AREA_FRACTION * mean_area) || a == 0.0 {
            return Err(GeometryError::DegenerateElement {
                element: k,
                detail: format!("triangle area {a:e}"),
            });
        }
    }

    let mut area = vec![0.0; nv];
    let mut normal_sum = vec![Vec3::zeros(); nv];
    for (k, t) in tris.iter().enumerate() {
        let share = mixed_area_shares(x, t, areas[k]);
        for (i, &v) in t.iter().enumerate() {
            area[v] += share[i];
            // Max's weights: exact when the one-ring lies on a sphere.
            let e1 = x[t[(i + 1) % 3]] - x[v];
            let e2 = x[t[(i + 2) % 3]] - x[v];
            normal_sum[v] += crosses[k] / (e1.norm_squared() * e2.norm_squared());
        }
    }
    let mut normals = Vec::with_capacity(nv);
    for (v, s) in normal_sum.iter().enumerate() {
        let n = s.norm();
        if !(n > 0.0) {
            return Err(GeometryError::DegenerateElement {
                element: v,
                detail: "vertex normal undefined".into(),
            });
        }
        normals.push(s / n);
    }

    let mut edge_weights = Vec::with_capacity(topo.edges().len());
    for (k, e) in topo.edges().iter().enumerate() {
        let [c1, c2] = topo.edge_opposite()[k];
        let w = 0.5 * (cotangent(&x[c1], &x[e[0]], &x[e[1]]) + cotangent(&x[c2], &x[e[0]], &x[e[1]]));
        edge_weights.push(w);
    }

    let mut lap = vec![Vec3::zeros(); nv];
    for (k, e) in topo.edges().iter().enumerate() {
        let d = (x[e[1]] - x[e[0]]) * edge_weights[k];
        lap[e[0]] += d;
        lap[e[1]] -= d;
    }
    let mean_curvature: Vec<f64> = (0..nv)
        .map(|v| -(lap[v] / area[v]).dot(&normals[v]))
        .collect();

    let mut principal = Vec::with_capacity(2 * nv);
    let mut fit_residual = Vec::with_capacity(nv);
    for v in 0..nv {
        let (trace, aniso) = fit_shape_operator(x, topo, v, &normals[v]);
        let h = mean_curvature[v];
        principal.push(0.5 * h - aniso);
        principal.push(0.5 * h + aniso);
        fit_residual.push((trace - h).abs());
    }

    Ok(Computed {
        normals,
        mean_curvature,
        principal,
        area,
        edge_weights,
        fit_residual,
    })
}

/// Split of a triangle's area among its corners: Voronoi regions when the
/// triangle is non-obtuse, otherwise half to the obtuse corner and a quarter
/// to each of the others. The shares always sum to the triangle area.
fn mixed_area_shares(x: &[Vec3], t: &[usize; 3], area: f64) -> [f64; 3] {
    let p = [x[t[0]], x[t[1]], x[t[2]]];
    let mut cots = [0.0; 3];
    for i in 0..3 {
        cots[i] = cotangent(&p[i], &p[(i + 1) % 3], &p[(i + 2) % 3]);
    }
    if let Some(obtuse) = (0..3).find(|&i| cots[i] < 0.0) {
        let mut s = [0.25 * area; 3];
        s[obtuse] = 0.5 * area;
        return s;
    }
    let mut s = [0.0; 3];
    for i in 0..3 {
        // Edge opposite corner i joins corners i+1 and i+2.
        let (a, b) = ((i + 1) % 3, (i + 2) % 3);
        let part = 0.125 * cots[i] * (p[b] - p[a]).norm_squared();
        s[a] += part;
        s[b] += part;
    }
    s
}

/// Cotangent of the angle at `apex` in triangle (apex, a, b).
fn cotangent(apex: &Vec3, a: &Vec3, b: &Vec3) -> f64 {
    let u = a - apex;
    let w = b - apex;
    u.dot(&w) / u.cross(&w).norm()
}

/// Least-squares fit of the height function `h(u) = −½ uᵀ S u + g·u` over
/// the one-ring in the tangent plane at `v`; the linear term absorbs normal
/// tilt. Vertices with fewer than five neighbors drop the linear term.
/// Returns `(tr S, (κ_max − κ_min)/2)`.
fn fit_shape_operator(x: &[Vec3], topo: &Topology, v: usize, normal: &Vec3) -> (f64, f64) {
    let (e1, e2) = tangent_basis(normal);
    let mut ata = Matrix5::zeros();
    let mut atb = Vector5::zeros();
    let ring = topo.neighbors(v);
    let linear = ring.len() >= 5;
    for &(j, _) in ring {
        let d = x[j] - x[v];
        let (u, w, h) = (d.dot(&e1), d.dot(&e2), d.dot(normal));
        let row = if linear {
            Vector5::new(-0.5 * u * u, -u * w, -0.5 * w * w, u, w)
        } else {
            Vector5::new(-0.5 * u * u, -u * w, -0.5 * w * w, 0.0, 0.0)
        };
        ata += row * row.transpose();
        atb += row * h;
    }
    if !linear {
        ata[(3, 3)] = 1.0;
        ata[(4, 4)] = 1.0;
    }
    match ata.cholesky() {
        Some(ch) => {
            let s = ch.solve(&atb);
            let (a, b, c) = (s[0], s[1], s[2]);
            (a + c, (0.25 * (a - c) * (a - c) + b * b).sqrt())
        }
        None => (f64::NAN, 0.0),
    }
}

fn tangent_basis(n: &Vec3) -> (Vec3, Vec3) {
    let helper = if n.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let e1 = (helper - n * n.dot(&helper)).normalize();
    let e2 = n.cross(&e1);
    (e1, e2)
}
