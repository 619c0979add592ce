//! Skeleton (medial axis) of a rooms-and-passages domain with its fibre
//! coordinates `(sigma, s)` and coarea weights
//!
//! `alpha(sigma) = int J ds`, `beta(sigma) = int 1/J ds` over the fibre
//! `|s| < l(sigma)`, where `J = |d(x, y)/d(sigma, s)|`.
//!
//! Every room edge lives in a corner chart (see [`corner`]) placed on one
//! of the room's two end walls and reflected into the upper or lower half.

pub mod corner;

use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

pub use corner::{CornerGeometry, JacobianInv};

use crate::domain::{PieceKind, RpDomain};
use crate::error::{Error, Result};
use crate::quadrature::{integrate, integrate_gl};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EdgeGroup {
    G1Room,
    G1Passage,
    G2Diagonal,
    G3Parabolic,
    G3Segment,
}

impl EdgeGroup {
    pub fn is_singular(self) -> bool {
        matches!(self, EdgeGroup::G3Parabolic | EdgeGroup::G3Segment)
    }

    pub fn number(self) -> u8 {
        match self {
            EdgeGroup::G1Room | EdgeGroup::G1Passage => 1,
            EdgeGroup::G2Diagonal => 2,
            EdgeGroup::G3Parabolic | EdgeGroup::G3Segment => 3,
        }
    }
}

/// Placement of a corner chart in global coordinates:
/// `X = x_wall + dir * x`, `Y = vsign * y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Chart {
    pub geom: CornerGeometry,
    pub x_wall: f64,
    pub dir: f64,
    pub vsign: f64,
}

impl Chart {
    fn to_global(&self, p: [f64; 2]) -> [f64; 2] {
        [self.x_wall + self.dir * p[0], self.vsign * p[1]]
    }

    fn to_local(&self, x: f64, y: f64) -> [f64; 2] {
        [self.dir * (x - self.x_wall), self.vsign * y]
    }

    fn grad_to_global(&self, g: [f64; 2]) -> [f64; 2] {
        [self.dir * g[0], self.vsign * g[1]]
    }

    /// Mirror image through the vertical line `x = c`.
    fn mirrored(&self, c: f64) -> Self {
        Self {
            x_wall: 2.0 * c - self.x_wall,
            dir: -self.dir,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EdgeShape {
    /// Horizontal centre line `[x_lo, x_hi] x {0}` with vertical fibres of
    /// half-length `half`.
    Centre { x_lo: f64, x_hi: f64, half: f64 },
    /// Diagonal from the room corner `(0, h/2)` to `B`.
    Diagonal(Chart),
    /// Parabola from `B` to `E`.
    Parabolic(Chart),
    /// Segment `OE` on the axis; `s > 0` towards the chart's corner.
    Segment(Chart),
}

/// Point of an edge's preimage in fibre coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Located {
    pub edge: usize,
    pub sigma: f64,
    pub s: f64,
    /// Gradient of `sigma` as a function of `(x, y)`.
    pub grad_sigma: [f64; 2],
}

/// `beta` value; on Group 3 edges it is a truncated integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Beta {
    pub value: f64,
    /// The untruncated integral diverges.
    pub divergent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkeletonEdge {
    pub id: usize,
    pub group: EdgeGroup,
    pub length: f64,
    pub singular: bool,
    /// 1-based index of the piece the edge lies in.
    pub piece: usize,
    pub shape: EdgeShape,
}

const QUAD_TOL: f64 = 1e-13;

impl SkeletonEdge {
    fn new(group: EdgeGroup, piece: usize, shape: EdgeShape) -> Self {
        let length = match shape {
            EdgeShape::Centre { x_lo, x_hi, .. } => x_hi - x_lo,
            EdgeShape::Diagonal(c) => c.geom.diagonal_length(),
            EdgeShape::Parabolic(c) => c.geom.edge_length(),
            EdgeShape::Segment(c) => c.geom.x_intercept(),
        };
        Self {
            id: 0,
            group,
            length,
            singular: group.is_singular(),
            piece,
            shape,
        }
    }

    /// Point `t(sigma)` on the edge.
    pub fn point(&self, sigma: f64) -> [f64; 2] {
        self.map(sigma, 0.0)
    }

    /// Fibre half-length `l(sigma)`.
    pub fn fiber_halflength(&self, sigma: f64) -> f64 {
        match self.shape {
            EdgeShape::Centre { half, .. } => half,
            EdgeShape::Diagonal(_) => sigma / SQRT_2,
            EdgeShape::Parabolic(c) => c.geom.fiber_halflength(c.geom.t_from_sigma(sigma)),
            EdgeShape::Segment(c) => (sigma * sigma + 0.25 * c.geom.delta * c.geom.delta).sqrt(),
        }
    }

    /// `x(sigma, s)` in global coordinates.
    pub fn map(&self, sigma: f64, s: f64) -> [f64; 2] {
        match self.shape {
            EdgeShape::Centre { x_lo, .. } => [x_lo + sigma, s],
            EdgeShape::Diagonal(c) => {
                let h = c.geom.h;
                let p = if s <= 0.0 {
                    [sigma / SQRT_2 + s, h / 2.0 - sigma / SQRT_2]
                } else {
                    [sigma / SQRT_2, h / 2.0 - sigma / SQRT_2 + s]
                };
                c.to_global(p)
            }
            EdgeShape::Parabolic(c) => {
                let g = c.geom;
                let t0 = g.t_from_sigma(sigma);
                let q = g.q_point(t0);
                let p = if s >= 0.0 {
                    let l = g.fiber_halflength(t0);
                    let a = g.corner();
                    let f = s / l;
                    [q[0] + f * (a[0] - q[0]), q[1] + f * (a[1] - q[1])]
                } else {
                    [q[0], q[1] - s]
                };
                c.to_global(p)
            }
            EdgeShape::Segment(c) => {
                let half = c.geom.delta / 2.0;
                let l = (sigma * sigma + half * half).sqrt();
                let f = s.abs() / l;
                let target = if s >= 0.0 { half } else { -half };
                c.to_global([sigma * (1.0 - f), f * target])
            }
        }
    }

    /// `J(sigma, s) = |d(x, y)/d(sigma, s)|`. Zero at a re-entrant corner.
    pub fn jacobian(&self, sigma: f64, s: f64) -> f64 {
        match self.shape {
            EdgeShape::Centre { .. } => 1.0,
            EdgeShape::Diagonal(_) => 1.0 / SQRT_2,
            EdgeShape::Parabolic(c) => {
                let g = c.geom;
                let t0 = g.t_from_sigma(sigma);
                if s < 0.0 {
                    return 1.0 / (1.0 + t0 * t0).sqrt();
                }
                let q = g.q_point(t0);
                let f = s / g.fiber_halflength(t0);
                let a = g.corner();
                let p = [q[0] + f * (a[0] - q[0]), q[1] + f * (a[1] - q[1])];
                match g.jacobian_inv(p[0], p[1]) {
                    JacobianInv::Finite(v) => 1.0 / v,
                    JacobianInv::Infinite => 0.0,
                }
            }
            EdgeShape::Segment(c) => {
                let half = c.geom.delta / 2.0;
                let l2 = sigma * sigma + half * half;
                let l = l2.sqrt();
                half * (l - s.abs()).max(0.0) / l2
            }
        }
    }

    /// `alpha(sigma)`: closed form on Groups 1 and 2, fibre quadrature of
    /// `J` on Group 3.
    pub fn alpha(&self, sigma: f64) -> Result<f64> {
        match self.shape {
            EdgeShape::Centre { half, .. } => Ok(2.0 * half),
            EdgeShape::Diagonal(_) => Ok(sigma),
            _ => self.alpha_quadrature(sigma),
        }
    }

    /// `alpha(sigma)` by adaptive quadrature of `J` along the fibre, split at
    /// the skeleton point.
    pub fn alpha_quadrature(&self, sigma: f64) -> Result<f64> {
        let l = self.fiber_halflength(sigma);
        let j = |s: f64| self.jacobian(sigma, s);
        let lower = integrate(j, -l, 0.0, 0.0, QUAD_TOL)?.value;
        let upper = integrate(j, 0.0, l, 0.0, QUAD_TOL)?.value;
        Ok(lower + upper)
    }

    /// `beta(sigma)`. Group 3 edges need a truncation radius `eps`: the
    /// fibre integral of `1/J` is taken over points at distance `> eps` from
    /// the corner and diverges logarithmically as `eps -> 0`.
    pub fn beta(&self, sigma: f64, eps: Option<f64>) -> Result<Beta> {
        match self.shape {
            EdgeShape::Centre { half, .. } => Ok(Beta {
                value: 2.0 * half,
                divergent: false,
            }),
            EdgeShape::Diagonal(_) => Ok(Beta {
                value: 2.0 * sigma,
                divergent: false,
            }),
            _ => {
                let eps = eps.ok_or_else(|| {
                    Error::InvalidParameter(format!(
                        "beta on Group 3 edge {} diverges; pass a truncation radius",
                        self.id
                    ))
                })?;
                if !(eps > 0.0) {
                    return Err(Error::InvalidParameter(format!("truncation eps = {eps} must be positive")));
                }
                Ok(Beta {
                    value: self.beta_truncated(sigma, eps)?,
                    divergent: true,
                })
            }
        }
    }

    fn beta_truncated(&self, sigma: f64, eps: f64) -> Result<f64> {
        let l = self.fiber_halflength(sigma);
        let inv = |s: f64| 1.0 / self.jacobian(sigma, s);
        let (wall_side, corner_sides) = match self.shape {
            EdgeShape::Parabolic(_) => (integrate(inv, -l, 0.0, 0.0, QUAD_TOL)?.value, 1.0),
            _ => (0.0, 2.0),
        };
        if eps >= l {
            return Ok(wall_side);
        }
        // 1/J ~ c/r in the distance r = l - s from the corner: integrate on
        // panels of geometrically shrinking width towards r = eps.
        let mut total = 0.0;
        let mut hi = l;
        while hi > eps {
            let lo = (0.5 * hi).max(eps);
            total += integrate(|r| inv(l - r), lo, hi, 0.0, 1e-11)?.value;
            hi = lo;
        }
        Ok(wall_side + corner_sides * total)
    }

    /// `int_e alpha dsigma` by quadrature.
    pub fn alpha_mass(&self) -> Result<f64> {
        match self.shape {
            EdgeShape::Centre { half, .. } => Ok(2.0 * half * self.length),
            EdgeShape::Diagonal(_) => Ok(0.5 * self.length * self.length),
            _ => {
                let err = std::cell::Cell::new(None);
                let v = integrate(
                    |sg| match self.alpha(sg) {
                        Ok(a) => a,
                        Err(e) => {
                            err.set(Some(e));
                            0.0
                        }
                    },
                    0.0,
                    self.length,
                    0.0,
                    1e-12,
                );
                if let Some(e) = err.take() {
                    return Err(e);
                }
                Ok(v?.value)
            }
        }
    }

    /// Area of `tau^{-1}(e)` from the region's geometry.
    pub fn region_area(&self) -> f64 {
        match self.shape {
            EdgeShape::Centre { x_lo, x_hi, half } => (x_hi - x_lo) * 2.0 * half,
            EdgeShape::Diagonal(c) => c.geom.diagonal_region_area(),
            EdgeShape::Parabolic(c) => c.geom.parabolic_region_area(),
            EdgeShape::Segment(c) => c.geom.segment_region_area(),
        }
    }

    /// Fibre coordinates of `(x, y)` if it lies in `tau^{-1}(e)`.
    pub fn preimage(&self, x: f64, y: f64) -> Option<Located> {
        const TOL: f64 = 1e-14;
        let out = |sigma, s, g| {
            Some(Located {
                edge: self.id,
                sigma,
                s,
                grad_sigma: g,
            })
        };
        match self.shape {
            EdgeShape::Centre { x_lo, x_hi, half } => {
                if x >= x_lo - TOL && x <= x_hi + TOL && y.abs() <= half + TOL {
                    out(x - x_lo, y, [1.0, 0.0])
                } else {
                    None
                }
            }
            EdgeShape::Diagonal(c) => {
                let [xc, yc] = c.to_local(x, y);
                let g = c.geom;
                if xc < -TOL || xc > g.gap() / 2.0 + TOL || yc < g.delta / 2.0 - TOL || yc > g.h / 2.0 + TOL {
                    return None;
                }
                let s = xc + yc - g.h / 2.0;
                if s <= 0.0 {
                    out(SQRT_2 * (g.h / 2.0 - yc), s, c.grad_to_global([0.0, -SQRT_2]))
                } else {
                    out(SQRT_2 * xc, s, c.grad_to_global([SQRT_2, 0.0]))
                }
            }
            EdgeShape::Parabolic(c) => {
                let [xc, yc] = c.to_local(x, y);
                let g = c.geom;
                let e = g.x_intercept();
                if g.is_closed() || xc <= 0.0 || xc > e + TOL || yc < -TOL || yc > g.h / 2.0 + TOL {
                    return None;
                }
                let in_diag = xc <= g.gap() / 2.0 && yc >= g.delta / 2.0;
                let in_segment = yc < g.delta / 2.0 * (1.0 - xc / e);
                if in_diag || in_segment {
                    return None;
                }
                let y0 = g.parabola_point(xc);
                if xc >= g.gap() / 2.0 && yc >= y0 {
                    // wall side: vertical fibre
                    let t0 = 2.0 * xc / g.gap();
                    let sigma = g.arclength(t0.max(1.0)).ok()?;
                    return out(sigma, -(yc - y0), c.grad_to_global([(1.0 + t0 * t0).sqrt(), 0.0]));
                }
                let (sigma, s) = g.tau_parabolic(xc, yc).ok()?;
                let q = (g.delta / 2.0 - yc) / xc;
                let root = (q * q + 1.0).sqrt();
                let t0 = q + root;
                let dsig_dt = 0.5 * g.gap() * (1.0 + t0 * t0).sqrt();
                let dt_dq = t0 / root;
                let grad = [dsig_dt * dt_dq * (-q / xc), dsig_dt * dt_dq * (-1.0 / xc)];
                out(sigma, s, c.grad_to_global(grad))
            }
            EdgeShape::Segment(c) => {
                let [xc, yc] = c.to_local(x, y);
                let g = c.geom;
                let e = g.x_intercept();
                let half = g.delta / 2.0;
                if g.is_closed() || xc < -TOL || xc > e + TOL || yc.abs() > half * (1.0 - xc / e) + TOL {
                    return None;
                }
                let f = (yc.abs() / half).min(1.0 - 1e-15);
                let sigma = xc / (1.0 - f);
                let l = (sigma * sigma + half * half).sqrt();
                let s = f * l * yc.signum();
                let gy = xc / (half * (1.0 - f).powi(2)) * yc.signum();
                out(sigma, s, c.grad_to_global([1.0 / (1.0 - f), gy]))
            }
        }
    }

    /// Sampled polyline of the edge.
    pub fn polyline(&self, samples: usize) -> Vec<[f64; 2]> {
        let n = samples.max(2);
        (0..n)
            .map(|i| self.point(self.length * i as f64 / (n - 1) as f64))
            .collect()
    }
}

/// Room edges for one room occupying `[x_lo, x_lo + h] x [-h/2, h/2]`.
/// A passage height of zero denotes a closed end wall.
fn room_edges(x_lo: f64, h: f64, delta_left: f64, delta_right: f64, piece: usize) -> Result<Vec<SkeletonEdge>> {
    let left = CornerGeometry::new(h, delta_left)?;
    let right = CornerGeometry::new(h, delta_right)?;
    let e_left = if left.is_closed() { h / 2.0 } else { left.x_intercept() };
    let e_right = if right.is_closed() { h / 2.0 } else { right.x_intercept() };
    if e_left + e_right > h * (1.0 + 1e-12) {
        return Err(Error::Unsupported(format!(
            "parabolic regions overlap in room {piece}: E_left + E_right = {} > h = {h}",
            e_left + e_right
        )));
    }
    let mut edges = Vec::new();
    for (geom, x_wall, dir) in [(left, x_lo, 1.0), (right, x_lo + h, -1.0)] {
        for vsign in [1.0, -1.0] {
            let c = Chart {
                geom,
                x_wall,
                dir,
                vsign,
            };
            edges.push(SkeletonEdge::new(EdgeGroup::G2Diagonal, piece, EdgeShape::Diagonal(c)));
            if !geom.is_closed() {
                edges.push(SkeletonEdge::new(EdgeGroup::G3Parabolic, piece, EdgeShape::Parabolic(c)));
            }
        }
        if !geom.is_closed() {
            let c = Chart {
                geom,
                x_wall,
                dir,
                vsign: 1.0,
            };
            edges.push(SkeletonEdge::new(EdgeGroup::G3Segment, piece, EdgeShape::Segment(c)));
        }
    }
    let (c_lo, c_hi) = (x_lo + e_left, x_lo + h - e_right);
    if c_hi - c_lo > 1e-14 * h {
        edges.push(SkeletonEdge::new(
            EdgeGroup::G1Room,
            piece,
            EdgeShape::Centre {
                x_lo: c_lo,
                x_hi: c_hi,
                half: h / 2.0,
            },
        ));
    }
    Ok(edges)
}

/// Skeleton edges of a single room `[0, h] x [-h/2, h/2]` whose end walls
/// open into passages of heights `delta_left`, `delta_right` (zero for a
/// closed wall).
pub fn build_room_skeleton(h: f64, delta_left: f64, delta_right: f64) -> Result<Vec<SkeletonEdge>> {
    let mut edges = room_edges(0.0, h, delta_left, delta_right, 1)?;
    for (i, e) in edges.iter_mut().enumerate() {
        e.id = i;
    }
    Ok(edges)
}

/// Skeleton of a whole (truncated) domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Skeleton {
    pub edges: Vec<SkeletonEdge>,
}

impl Skeleton {
    /// Rooms get corner charts on both end walls; passages a centre edge.
    /// Room 1's left wall and the last passage's right end are closed; the
    /// latter gets two diagonal end-cap edges.
    pub fn from_domain(domain: &RpDomain) -> Result<Self> {
        let mut edges = Vec::new();
        let n = domain.n_pieces();
        for p in &domain.pieces {
            match p.kind {
                PieceKind::Room => {
                    let dl = domain.passage_height(p.index.wrapping_sub(1));
                    let dr = domain.passage_height(p.index + 1);
                    edges.extend(room_edges(p.x_lo, p.width(), dl, dr, p.index)?);
                }
                PieceKind::Passage => {
                    let d = p.height();
                    let closed = p.index == n;
                    let x_hi = if closed { p.x_hi - d / 2.0 } else { p.x_hi };
                    if closed && d / 2.0 >= p.width() {
                        return Err(Error::Unsupported(format!(
                            "passage {} shorter than its end cap",
                            p.index
                        )));
                    }
                    edges.push(SkeletonEdge::new(
                        EdgeGroup::G1Passage,
                        p.index,
                        EdgeShape::Centre {
                            x_lo: p.x_lo,
                            x_hi,
                            half: d / 2.0,
                        },
                    ));
                    if closed {
                        let geom = CornerGeometry::new(d, 0.0)?;
                        for vsign in [1.0, -1.0] {
                            let c = Chart {
                                geom,
                                x_wall: p.x_hi,
                                dir: -1.0,
                                vsign,
                            };
                            edges.push(SkeletonEdge::new(EdgeGroup::G2Diagonal, p.index, EdgeShape::Diagonal(c)));
                        }
                    }
                }
            }
        }
        for (i, e) in edges.iter_mut().enumerate() {
            e.id = i;
        }
        Ok(Self { edges })
    }

    pub fn from_edges(mut edges: Vec<SkeletonEdge>) -> Self {
        for (i, e) in edges.iter_mut().enumerate() {
            e.id = i;
        }
        Self { edges }
    }

    /// `tau` in fibre coordinates: the first edge whose preimage holds the
    /// point.
    pub fn locate(&self, x: f64, y: f64) -> Result<Located> {
        self.edges
            .iter()
            .find_map(|e| e.preimage(x, y))
            .ok_or_else(|| Error::OutOfRange(format!("point ({x}, {y}) is outside every chart")))
    }

    pub fn regular(&self) -> impl Iterator<Item = &SkeletonEdge> {
        self.edges.iter().filter(|e| !e.singular)
    }

    pub fn singular(&self) -> impl Iterator<Item = &SkeletonEdge> {
        self.edges.iter().filter(|e| e.singular)
    }

    /// JSON export: per edge its group, length, a sampled polyline and
    /// weight samples (`beta` only on regular edges).
    pub fn to_json(&self, samples: usize) -> Result<String> {
        let mut out = Vec::with_capacity(self.edges.len());
        for e in &self.edges {
            let n = samples.max(2);
            let sig: Vec<f64> = (0..n).map(|i| e.length * (i as f64 + 0.5) / n as f64).collect();
            let alpha = sig.iter().map(|&s| e.alpha(s)).collect::<Result<Vec<_>>>()?;
            let beta = if e.singular {
                None
            } else {
                Some(sig.iter().map(|&s| e.beta(s, None).map(|b| b.value)).collect::<Result<Vec<_>>>()?)
            };
            out.push(EdgeDump {
                id: e.id,
                group: e.group,
                piece: e.piece,
                length: e.length,
                singular: e.singular,
                polyline: e.polyline(n),
                sigma: sig,
                alpha,
                beta,
            });
        }
        Ok(serde_json::to_string_pretty(&SkeletonDump { edges: out })?)
    }

    /// Whitespace-separated polylines, one block per edge.
    pub fn to_gnuplot(&self, samples: usize) -> String {
        let mut s = String::new();
        for e in &self.edges {
            s.push_str(&format!("# edge {} {:?}\n", e.id, e.group));
            for p in e.polyline(samples) {
                s.push_str(&format!("{:.12} {:.12}\n", p[0], p[1]));
            }
            s.push_str("\n\n");
        }
        s
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdgeDump {
    pub id: usize,
    pub group: EdgeGroup,
    pub piece: usize,
    pub length: f64,
    pub singular: bool,
    pub polyline: Vec<[f64; 2]>,
    pub sigma: Vec<f64>,
    pub alpha: Vec<f64>,
    pub beta: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SkeletonDump {
    pub edges: Vec<EdgeDump>,
}

/// `int_e alpha dsigma` with a fixed composite Gauss–Legendre rule over
/// `panels` equal pieces; used to cross-check [`SkeletonEdge::alpha_mass`].
pub fn alpha_mass_gl(edge: &SkeletonEdge, panels: usize, order: usize) -> Result<f64> {
    let mut total = 0.0;
    let w = edge.length / panels as f64;
    for k in 0..panels {
        let err = std::cell::Cell::new(None);
        total += integrate_gl(
            |s| match edge.alpha(s) {
                Ok(v) => v,
                Err(e) => {
                    err.set(Some(e));
                    0.0
                }
            },
            k as f64 * w,
            (k + 1) as f64 * w,
            order,
        );
        if let Some(e) = err.take() {
            return Err(e);
        }
    }
    Ok(total)
}

impl Chart {
    /// Mirror a chart through the room centre, for symmetry checks.
    pub fn mirror_through(&self, centre: f64) -> Self {
        self.mirrored(centre)
    }
}
