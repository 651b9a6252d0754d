//! Airfoil geometry: the NACA-0012 baseline, a 2-D Bernstein free-form
//! deformation lattice, and analytic shape sensitivities.
//!
//! Shapes are stored as a closed counterclockwise polyline starting at the
//! trailing edge, running over the upper surface to the leading edge and back
//! along the lower surface. Both surfaces share the same chordwise stations,
//! and FFD only moves points vertically, so stations never change.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest accepted number of panels per surface.
pub const MIN_PANELS: usize = 50;
pub const DEFAULT_PANELS: usize = 200;
pub const NACA0012_THICKNESS: f64 = 0.12;

/// Half-thickness of a symmetric 4-digit section with a closed trailing edge.
pub fn naca4_half_thickness(x: f64, t: f64) -> f64 {
    5.0 * t
        * (0.2969 * x.sqrt() - 0.1260 * x - 0.3516 * x * x + 0.2843 * x * x * x
            - 0.1036 * x * x * x * x)
}

#[derive(Clone, Debug, PartialEq)]
pub struct AirfoilShape {
    n_per_surface: usize,
    points: Vec<[f64; 2]>,
    area: f64,
    perimeter: f64,
}

impl AirfoilShape {
    fn from_points(n_per_surface: usize, points: Vec<[f64; 2]>) -> Self {
        let area = shoelace_area(&points);
        let perimeter = polyline_perimeter(&points);
        Self { n_per_surface, points, area, perimeter }
    }

    pub fn n_per_surface(&self) -> usize {
        self.n_per_surface
    }

    /// Closed loop without the repeated first point.
    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    pub fn perimeter(&self) -> f64 {
        self.perimeter
    }

    /// Loop index of the upper-surface point at station `i` (0 = LE, n = TE).
    pub fn upper_index(&self, i: usize) -> usize {
        self.n_per_surface - i
    }

    /// Loop index of the lower-surface point at station `i`. Stations 0 and n
    /// are shared with the upper surface.
    pub fn lower_index(&self, i: usize) -> usize {
        let n = self.n_per_surface;
        match i {
            0 => n,
            i if i == n => 0,
            i => n + i,
        }
    }

    pub fn leading_edge_index(&self) -> usize {
        self.n_per_surface
    }

    pub fn trailing_edge_index(&self) -> usize {
        0
    }

    pub fn station_x(&self, i: usize) -> f64 {
        self.points[self.upper_index(i)][0]
    }

    pub fn upper_y(&self, i: usize) -> f64 {
        self.points[self.upper_index(i)][1]
    }

    pub fn lower_y(&self, i: usize) -> f64 {
        self.points[self.lower_index(i)][1]
    }

    /// Errors if the upper surface touches or dips below the lower surface
    /// at any interior station.
    pub fn check_valid(&self) -> Result<()> {
        for i in 1..self.n_per_surface {
            let gap = self.upper_y(i) - self.lower_y(i);
            if !(gap > 0.0) {
                return Err(Error::DegenerateGeometry { x: self.station_x(i) });
            }
        }
        Ok(())
    }

    /// Two-column `x y` listing of the full closed loop.
    pub fn write_dat<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for p in self.points.iter().chain(std::iter::once(&self.points[0])) {
            writeln!(out, "{:.17e} {:.17e}", p[0], p[1])?;
        }
        Ok(())
    }
}

pub fn baseline_naca0012(n_per_surface: usize) -> Result<AirfoilShape> {
    if n_per_surface < MIN_PANELS {
        return Err(Error::InvalidArgument(format!(
            "n_per_surface = {n_per_surface} is below the minimum of {MIN_PANELS}"
        )));
    }
    let n = n_per_surface;
    let stations: Vec<f64> = (0..=n)
        .map(|i| 0.5 * (1.0 - (std::f64::consts::PI * i as f64 / n as f64).cos()))
        .collect();
    let half = |i: usize| {
        if i == 0 || i == n {
            0.0
        } else {
            naca4_half_thickness(stations[i], NACA0012_THICKNESS)
        }
    };

    let mut points = Vec::with_capacity(2 * n);
    for i in (0..=n).rev() {
        points.push([stations[i], half(i)]);
    }
    for i in 1..n {
        points.push([stations[i], -half(i)]);
    }
    // Pin the edges exactly; cos(pi) rounding must not leak into them.
    points[0] = [1.0, 0.0];
    points[n] = [0.0, 0.0];
    Ok(AirfoilShape::from_points(n, points))
}

pub fn shoelace_area(points: &[[f64; 2]]) -> f64 {
    let m = points.len();
    let mut twice = 0.0;
    for k in 0..m {
        let a = points[k];
        let b = points[(k + 1) % m];
        twice += a[0] * b[1] - b[0] * a[1];
    }
    0.5 * twice
}

pub fn polyline_perimeter(points: &[[f64; 2]]) -> f64 {
    let m = points.len();
    (0..m)
        .map(|k| {
            let a = points[k];
            let b = points[(k + 1) % m];
            (b[0] - a[0]).hypot(b[1] - a[1])
        })
        .sum()
}

/// d(area)/d(y_k) for each loop point.
fn area_point_gradient(points: &[[f64; 2]]) -> Vec<f64> {
    let m = points.len();
    (0..m)
        .map(|k| 0.5 * (points[(k + m - 1) % m][0] - points[(k + 1) % m][0]))
        .collect()
}

/// d(perimeter)/d(y_k) for each loop point.
fn perimeter_point_gradient(points: &[[f64; 2]]) -> Vec<f64> {
    let m = points.len();
    (0..m)
        .map(|k| {
            let p = points[k];
            let prev = points[(k + m - 1) % m];
            let next = points[(k + 1) % m];
            let l_prev = (p[0] - prev[0]).hypot(p[1] - prev[1]);
            let l_next = (next[0] - p[0]).hypot(next[1] - p[1]);
            (p[1] - prev[1]) / l_prev + (p[1] - next[1]) / l_next
        })
        .collect()
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

/// Bernstein basis polynomial `B_{i,degree}(t)`.
pub fn bernstein(degree: usize, i: usize, t: f64) -> f64 {
    binomial(degree, i) * t.powi(i as i32) * (1.0 - t).powi((degree - i) as i32)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeBox {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl LatticeBox {
    fn contains_strictly(&self, p: [f64; 2]) -> bool {
        p[0] > self.x_min && p[0] < self.x_max && p[1] > self.y_min && p[1] < self.y_max
    }

    fn normalize(&self, p: [f64; 2]) -> (f64, f64) {
        (
            (p[0] - self.x_min) / (self.x_max - self.x_min),
            (p[1] - self.y_min) / (self.y_max - self.y_min),
        )
    }
}

/// Tensor-product Bernstein lattice with vertical-only node motion.
///
/// Nodes are indexed `column * ny + row`, row 0 at the bottom of the box.
/// Design variables are the nodes of the unlocked columns, in that order.
#[derive(Clone, Debug)]
pub struct FfdLattice {
    nx: usize,
    ny: usize,
    bbox: LatticeBox,
    locked_columns: Vec<usize>,
    free_nodes: Vec<usize>,
    /// Per loop point, per lattice node.
    weights: Vec<Vec<f64>>,
    /// Loop points that never move (leading and trailing edge).
    pinned: Vec<usize>,
}

pub const DEFAULT_NX: usize = 10;
pub const DEFAULT_NY: usize = 2;
pub const DEFAULT_MARGIN: f64 = 0.02;

impl FfdLattice {
    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn bbox(&self) -> LatticeBox {
        self.bbox
    }

    pub fn locked_columns(&self) -> &[usize] {
        &self.locked_columns
    }

    pub fn n_nodes(&self) -> usize {
        self.nx * self.ny
    }

    pub fn n_free(&self) -> usize {
        self.free_nodes.len()
    }

    /// Lattice node index of design variable `v`.
    pub fn free_node(&self, v: usize) -> usize {
        self.free_nodes[v]
    }

    pub fn node_index(&self, column: usize, row: usize) -> usize {
        column * self.ny + row
    }

    /// Weights of loop point `p` over all lattice nodes, locked ones included.
    pub fn weights(&self, p: usize) -> &[f64] {
        &self.weights[p]
    }

    pub fn is_pinned(&self, p: usize) -> bool {
        self.pinned.contains(&p)
    }
}

pub fn build_lattice(
    baseline: &AirfoilShape,
    nx: usize,
    ny: usize,
    margin: f64,
) -> Result<FfdLattice> {
    if nx < 3 || ny < 2 {
        return Err(Error::InvalidArgument(format!(
            "lattice needs nx >= 3 and ny >= 2, got {nx} x {ny}"
        )));
    }
    if !(margin > 0.0) {
        return Err(Error::InvalidArgument(format!("margin must be positive, got {margin}")));
    }
    let (lo, hi) = baseline
        .points()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p[1]), hi.max(p[1])));
    let bbox = LatticeBox {
        x_min: -margin,
        x_max: 1.0 + margin,
        y_min: lo - margin,
        y_max: hi + margin,
    };
    lattice_with_box(baseline, nx, ny, bbox, vec![0, nx - 1])
}

/// Lattice over an explicit box and locked column set.
pub fn lattice_with_box(
    baseline: &AirfoilShape,
    nx: usize,
    ny: usize,
    bbox: LatticeBox,
    locked_columns: Vec<usize>,
) -> Result<FfdLattice> {
    let mut weights = Vec::with_capacity(baseline.points().len());
    for &p in baseline.points() {
        if !bbox.contains_strictly(p) {
            return Err(Error::OutsideLattice { x: p[0], y: p[1] });
        }
        weights.push(bernstein_weights(nx, ny, &bbox, p));
    }
    let free_nodes = (0..nx)
        .filter(|c| !locked_columns.contains(c))
        .flat_map(|c| (0..ny).map(move |r| c * ny + r))
        .collect();
    Ok(FfdLattice {
        nx,
        ny,
        bbox,
        locked_columns,
        free_nodes,
        weights,
        pinned: vec![baseline.trailing_edge_index(), baseline.leading_edge_index()],
    })
}

fn bernstein_weights(nx: usize, ny: usize, bbox: &LatticeBox, p: [f64; 2]) -> Vec<f64> {
    let (u, v) = bbox.normalize(p);
    let bu: Vec<f64> = (0..nx).map(|i| bernstein(nx - 1, i, u)).collect();
    let bv: Vec<f64> = (0..ny).map(|j| bernstein(ny - 1, j, v)).collect();
    let mut w = Vec::with_capacity(nx * ny);
    for a in &bu {
        for b in &bv {
            w.push(a * b);
        }
    }
    w
}

/// Box bounds on the design variables.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignBounds {
    pub dy_max: f64,
    pub alpha_min: f64,
    pub alpha_max: f64,
}

impl Default for DesignBounds {
    fn default() -> Self {
        Self { dy_max: 0.05, alpha_min: -5.0, alpha_max: 10.0 }
    }
}

impl DesignBounds {
    /// Per-component (lower, upper) bounds on the flattened design.
    pub fn flattened(&self, n_free: usize) -> (Vec<f64>, Vec<f64>) {
        let mut lo = vec![-self.dy_max; n_free];
        let mut hi = vec![self.dy_max; n_free];
        lo.push(self.alpha_min);
        hi.push(self.alpha_max);
        (lo, hi)
    }
}

/// FFD node displacements plus angle of attack (degrees).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignVector {
    pub ffd_dy: Vec<f64>,
    pub alpha_deg: f64,
}

impl DesignVector {
    pub fn baseline(n_free: usize) -> Self {
        Self { ffd_dy: vec![0.0; n_free], alpha_deg: 0.0 }
    }

    pub fn len(&self) -> usize {
        self.ffd_dy.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `[ffd_dy..., alpha_deg]`
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = self.ffd_dy.clone();
        v.push(self.alpha_deg);
        v
    }

    pub fn from_flat(theta: &[f64]) -> Self {
        let (dy, alpha) = theta.split_at(theta.len() - 1);
        Self { ffd_dy: dy.to_vec(), alpha_deg: alpha[0] }
    }

    pub fn validate(&self, n_free: usize, bounds: &DesignBounds) -> Result<()> {
        if self.ffd_dy.len() != n_free {
            return Err(Error::InvalidArgument(format!(
                "design has {} displacements, lattice has {n_free} free nodes",
                self.ffd_dy.len()
            )));
        }
        if let Some((i, d)) = self
            .ffd_dy
            .iter()
            .enumerate()
            .find(|(_, d)| !d.is_finite() || d.abs() > bounds.dy_max)
        {
            return Err(Error::InvalidArgument(format!(
                "ffd_dy[{i}] = {d} violates |dy| <= {}",
                bounds.dy_max
            )));
        }
        if !self.alpha_deg.is_finite()
            || self.alpha_deg < bounds.alpha_min
            || self.alpha_deg > bounds.alpha_max
        {
            return Err(Error::InvalidArgument(format!(
                "alpha_deg = {} outside [{}, {}]",
                self.alpha_deg, bounds.alpha_min, bounds.alpha_max
            )));
        }
        Ok(())
    }
}

/// Applies the lattice displacements to the baseline. `x` is untouched and the
/// leading- and trailing-edge points stay put.
pub fn deform(
    baseline: &AirfoilShape,
    lattice: &FfdLattice,
    design: &DesignVector,
) -> Result<AirfoilShape> {
    if design.ffd_dy.len() != lattice.n_free() {
        return Err(Error::InvalidArgument(format!(
            "design has {} displacements, lattice has {} free nodes",
            design.ffd_dy.len(),
            lattice.n_free()
        )));
    }
    if design.ffd_dy.iter().any(|d| !d.is_finite()) {
        return Err(Error::InvalidArgument("non-finite FFD displacement".into()));
    }
    let mut points = baseline.points().to_vec();
    for (p, point) in points.iter_mut().enumerate() {
        if lattice.is_pinned(p) {
            continue;
        }
        let w = lattice.weights(p);
        let dy: f64 = design
            .ffd_dy
            .iter()
            .enumerate()
            .map(|(v, d)| w[lattice.free_node(v)] * d)
            .sum();
        point[1] += dy;
    }
    let shape = AirfoilShape::from_points(baseline.n_per_surface(), points);
    shape.check_valid()?;
    Ok(shape)
}

/// Derivatives of the shape with respect to each free FFD displacement.
#[derive(Clone, Debug)]
pub struct ShapeSensitivities {
    /// `dy[p][v]` = d(y of loop point p)/d(ffd_dy[v]); zero rows for pinned points.
    pub dy: Vec<Vec<f64>>,
    pub d_area: Vec<f64>,
    pub d_perimeter: Vec<f64>,
}

/// Sensitivities evaluated at `shape`, which must share the lattice's loop
/// layout. Point and area derivatives are constant; the perimeter
/// derivative depends on the current shape.
pub fn shape_sensitivities(lattice: &FfdLattice, shape: &AirfoilShape) -> ShapeSensitivities {
    let n_free = lattice.n_free();
    let dy: Vec<Vec<f64>> = (0..shape.points().len())
        .map(|p| {
            if lattice.is_pinned(p) {
                vec![0.0; n_free]
            } else {
                let w = lattice.weights(p);
                (0..n_free).map(|v| w[lattice.free_node(v)]).collect()
            }
        })
        .collect();
    let ga = area_point_gradient(shape.points());
    let d_area = chain_to_design(lattice, &ga);
    let d_perimeter = perimeter_sensitivity(lattice, shape);
    ShapeSensitivities { dy, d_area, d_perimeter }
}

/// Maps a per-point y-gradient onto the free design variables.
fn chain_to_design(lattice: &FfdLattice, point_grad: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; lattice.n_free()];
    for (p, g) in point_grad.iter().enumerate() {
        if lattice.is_pinned(p) {
            continue;
        }
        let w = lattice.weights(p);
        for (v, o) in out.iter_mut().enumerate() {
            *o += w[lattice.free_node(v)] * g;
        }
    }
    out
}

/// d(perimeter)/d(ffd_dy) at `shape`.
pub fn perimeter_sensitivity(lattice: &FfdLattice, shape: &AirfoilShape) -> Vec<f64> {
    chain_to_design(lattice, &perimeter_point_gradient(shape.points()))
}

/// d(area)/d(ffd_dy); the same for every shape on the lattice.
pub fn area_sensitivity(lattice: &FfdLattice, shape: &AirfoilShape) -> Vec<f64> {
    chain_to_design(lattice, &area_point_gradient(shape.points()))
}

/// Chordwise sampling of the camber line at cosine-spaced nodes
/// `x = (1 - cos t)/2`, `t` at midpoints of `n_quad` equal intervals of (0, pi).
#[derive(Clone, Debug)]
pub struct CamberSampler {
    pub theta: Vec<f64>,
    /// Per node: lower station of the bracketing interval and 1/dx.
    stencil: Vec<(usize, f64)>,
}

pub const MIN_QUAD: usize = 16;
pub const DEFAULT_QUAD: usize = 64;

impl CamberSampler {
    pub fn new(shape: &AirfoilShape, n_quad: usize) -> Result<Self> {
        if n_quad < MIN_QUAD {
            return Err(Error::InvalidArgument(format!(
                "n_quad = {n_quad} is below the minimum of {MIN_QUAD}"
            )));
        }
        let n = shape.n_per_surface();
        let xs: Vec<f64> = (0..=n).map(|i| shape.station_x(i)).collect();
        let mut theta = Vec::with_capacity(n_quad);
        let mut stencil = Vec::with_capacity(n_quad);
        for q in 0..n_quad {
            let t = (q as f64 + 0.5) * std::f64::consts::PI / n_quad as f64;
            let x = 0.5 * (1.0 - t.cos());
            // first station strictly greater than x, minus one
            let i = xs.partition_point(|&s| s <= x).clamp(1, n) - 1;
            theta.push(t);
            stencil.push((i, 1.0 / (xs[i + 1] - xs[i])));
        }
        Ok(Self { theta, stencil })
    }

    pub fn n_quad(&self) -> usize {
        self.theta.len()
    }

    pub fn slopes(&self, shape: &AirfoilShape) -> Vec<f64> {
        let zc = |i: usize| 0.5 * (shape.upper_y(i) + shape.lower_y(i));
        self.stencil.iter().map(|&(i, inv_dx)| (zc(i + 1) - zc(i)) * inv_dx).collect()
    }

    /// d(slope_q)/d(ffd_dy[v]); constant because FFD is linear.
    pub fn slope_jacobian(&self, shape: &AirfoilShape, sens: &ShapeSensitivities) -> Vec<Vec<f64>> {
        let n_free = sens.d_area.len();
        let dzc = |i: usize, v: usize| {
            0.5 * (sens.dy[shape.upper_index(i)][v] + sens.dy[shape.lower_index(i)][v])
        };
        self.stencil
            .iter()
            .map(|&(i, inv_dx)| {
                (0..n_free).map(|v| (dzc(i + 1, v) - dzc(i, v)) * inv_dx).collect()
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CamberThickness {
    pub camber_slopes: Vec<f64>,
    pub t_over_c: f64,
    /// Station achieving the maximum thickness.
    pub thickness_station: usize,
    pub perimeter: f64,
}

pub fn max_thickness(shape: &AirfoilShape) -> (f64, usize) {
    (0..=shape.n_per_surface())
        .map(|i| (shape.upper_y(i) - shape.lower_y(i), i))
        .fold((f64::NEG_INFINITY, 0), |best, cur| if cur.0 > best.0 { cur } else { best })
}

pub fn camber_thickness(shape: &AirfoilShape, n_quad: usize) -> Result<CamberThickness> {
    let sampler = CamberSampler::new(shape, n_quad)?;
    camber_thickness_with(shape, &sampler)
}

pub fn camber_thickness_with(shape: &AirfoilShape, sampler: &CamberSampler) -> Result<CamberThickness> {
    shape.check_valid()?;
    let (t_over_c, thickness_station) = max_thickness(shape);
    Ok(CamberThickness {
        camber_slopes: sampler.slopes(shape),
        t_over_c,
        thickness_station,
        perimeter: shape.perimeter(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (AirfoilShape, FfdLattice) {
        let base = baseline_naca0012(DEFAULT_PANELS).unwrap();
        let lat = build_lattice(&base, DEFAULT_NX, DEFAULT_NY, DEFAULT_MARGIN).unwrap();
        (base, lat)
    }

    #[test]
    fn thickness_polynomial_closes_at_both_ends() {
        assert_eq!(naca4_half_thickness(0.0, 0.12), 0.0);
        assert!(naca4_half_thickness(1.0, 0.12).abs() < 1e-12);
    }

    #[test]
    fn rejects_too_few_panels() {
        assert!(baseline_naca0012(MIN_PANELS - 1).is_err());
        assert!(baseline_naca0012(MIN_PANELS).is_ok());
    }

    #[test]
    fn baseline_edges_and_orientation() {
        let (base, _) = setup();
        assert_eq!(base.points()[base.leading_edge_index()], [0.0, 0.0]);
        assert_eq!(base.points()[base.trailing_edge_index()], [1.0, 0.0]);
        assert!(base.area() > 0.0);
        for i in 0..=base.n_per_surface() {
            assert_eq!(base.upper_y(i), -base.lower_y(i));
        }
    }

    #[test]
    fn baseline_area_matches_quadrature() {
        // Composite Simpson in s = sqrt(x), which removes the sqrt singularity.
        let m = 20_000;
        let f = |s: f64| 2.0 * naca4_half_thickness(s * s, 0.12) * 2.0 * s;
        let h = 1.0 / m as f64;
        let mut acc = f(0.0) + f(1.0);
        for k in 1..m {
            acc += if k % 2 == 1 { 4.0 } else { 2.0 } * f(k as f64 * h);
        }
        let reference = acc * h / 3.0;
        let (base, _) = setup();
        assert!((reference - 0.0817).abs() < 1e-3, "reference {reference}");
        assert!((base.area() - reference).abs() < 1e-3);
    }

    #[test]
    fn bilinear_center_weights() {
        let base = baseline_naca0012(60).unwrap();
        let bbox = LatticeBox { x_min: -1.0, x_max: 1.0, y_min: -1.0, y_max: 1.0 };
        let w = bernstein_weights(2, 2, &bbox, [0.0, 0.0]);
        assert_eq!(w, vec![0.25; 4]);
        // building on a box that misses points fails
        let tight = LatticeBox { x_min: 0.1, x_max: 1.1, y_min: -1.0, y_max: 1.0 };
        assert!(matches!(
            lattice_with_box(&base, 3, 2, tight, vec![0, 2]),
            Err(Error::OutsideLattice { .. })
        ));
    }

    #[test]
    fn partition_of_unity_includes_locked_nodes() {
        let (base, lat) = setup();
        for p in 0..base.points().len() {
            let w = lat.weights(p);
            assert_eq!(w.len(), lat.n_nodes());
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        // column 0 nodes carry weight near the leading edge
        let near_le = base.upper_index(1);
        assert!(lat.weights(near_le)[lat.node_index(0, 0)] > 0.0);
        assert_eq!(lat.n_free(), 16);
    }

    #[test]
    fn zero_design_is_identity() {
        let (base, lat) = setup();
        let s = deform(&base, &lat, &DesignVector::baseline(lat.n_free())).unwrap();
        assert_eq!(s, base);
    }

    #[test]
    fn single_node_displacement_is_weight_times_delta() {
        let (base, lat) = setup();
        let delta = 0.013;
        let v = 5;
        let mut d = DesignVector::baseline(lat.n_free());
        d.ffd_dy[v] = delta;
        let s = deform(&base, &lat, &d).unwrap();
        for p in 0..base.points().len() {
            let expect = if lat.is_pinned(p) { 0.0 } else { lat.weights(p)[lat.free_node(v)] * delta };
            let got = s.points()[p][1] - base.points()[p][1];
            assert!((got - expect).abs() < 1e-15);
            assert_eq!(s.points()[p][0], base.points()[p][0]);
        }
    }

    #[test]
    fn crossing_surfaces_are_degenerate() {
        let (base, lat) = setup();
        let mut d = DesignVector::baseline(lat.n_free());
        for (v, dy) in d.ffd_dy.iter_mut().enumerate() {
            // row 0 (bottom) up, row 1 (top) down
            *dy = if v % 2 == 0 { 0.1 } else { -0.1 };
        }
        assert!(matches!(deform(&base, &lat, &d), Err(Error::DegenerateGeometry { .. })));
    }

    #[test]
    fn area_sensitivity_matches_fd_and_is_antisymmetric() {
        let (base, lat) = setup();
        let sens = shape_sensitivities(&lat, &base);
        let h = 1e-6;
        for v in 0..lat.n_free() {
            let mut plus = DesignVector::baseline(lat.n_free());
            let mut minus = plus.clone();
            plus.ffd_dy[v] = h;
            minus.ffd_dy[v] = -h;
            let fd = (deform(&base, &lat, &plus).unwrap().area()
                - deform(&base, &lat, &minus).unwrap().area())
                / (2.0 * h);
            assert!((fd - sens.d_area[v]).abs() <= 1e-6 * sens.d_area[v].abs());
        }
        for c in 0..lat.n_free() / 2 {
            let lower = sens.d_area[2 * c];
            let upper = sens.d_area[2 * c + 1];
            assert!((upper + lower).abs() < 1e-14, "{upper} vs {lower}");
            assert!(upper > 0.0);
        }
    }

    #[test]
    fn baseline_camber_and_thickness() {
        let (base, _) = setup();
        let ct = camber_thickness(&base, DEFAULT_QUAD).unwrap();
        assert!(ct.camber_slopes.iter().all(|s| s.abs() < 1e-10));
        // dense search on the polynomial itself
        let dense = (0..=1_000_000)
            .map(|k| 2.0 * naca4_half_thickness(k as f64 / 1e6, 0.12))
            .fold(0.0, f64::max);
        assert!((ct.t_over_c - dense).abs() < 2e-3);
        assert!((ct.t_over_c - 0.12).abs() < 2e-3);
        assert!(camber_thickness(&base, MIN_QUAD - 1).is_err());
    }

    #[test]
    fn uniform_shift_changes_camber_not_thickness() {
        let (base, lat) = setup();
        let mut d = DesignVector::baseline(lat.n_free());
        // same displacement on both rows of a column moves both surfaces together
        d.ffd_dy[6] = 0.02;
        d.ffd_dy[7] = 0.02;
        let s = deform(&base, &lat, &d).unwrap();
        let ct0 = camber_thickness(&base, DEFAULT_QUAD).unwrap();
        let ct1 = camber_thickness(&s, DEFAULT_QUAD).unwrap();
        assert!(ct1.camber_slopes.iter().any(|v| v.abs() > 1e-4));
        // the two rows' weights differ pointwise, so thickness is only nearly preserved
        assert!((ct1.t_over_c - ct0.t_over_c).abs() < 5e-3);

        // same field on both surfaces at each station
        let mut shifted = base.points().to_vec();
        let n = base.n_per_surface();
        for i in 1..n {
            let dy = 0.01 * (3.0 * base.station_x(i)).sin() * base.station_x(i) * (1.0 - base.station_x(i));
            shifted[base.upper_index(i)][1] = base.upper_y(i) + dy;
            shifted[base.lower_index(i)][1] = base.lower_y(i) + dy;
        }
        let s2 = AirfoilShape::from_points(n, shifted);
        let ct2 = camber_thickness(&s2, DEFAULT_QUAD).unwrap();
        assert_eq!(ct2.t_over_c, ct0.t_over_c);
        assert!(ct2.camber_slopes.iter().any(|v| v.abs() > 1e-4));
    }

    #[test]
    fn dat_export_closes_loop() {
        let (base, _) = setup();
        let mut buf = Vec::new();
        base.write_dat(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), base.points().len() + 1);
        assert_eq!(lines.first(), lines.last());
    }
}
