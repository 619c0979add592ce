//! Weighted spaces on the skeleton, the edgewise operator
//! `H u = -(1/alpha) (beta u')'`, and the transfer maps between functions on
//! the domain and functions on the skeleton.
//!
//! Regular-edge functions are polynomials stored by their values at the
//! Gauss–Legendre nodes of the edge; singular-edge functions are scalars.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::domain::RpDomain;
use crate::error::{Error, Result};
use crate::linalg::tridiagonal_lowest;
use crate::quadrature::gauss_legendre;
use crate::skeleton::{EdgeGroup, EdgeShape, Located, Skeleton, SkeletonEdge};

/// `(x, w)` of the `n`-point Gauss–Legendre rule on `[a, b]`.
fn rule(a: f64, b: f64, n: usize) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(n);
    let (m, r) = (0.5 * (a + b), 0.5 * (b - a));
    x.iter().zip(&w).map(|(t, wt)| (m + r * t, r * wt)).collect()
}

/// `P_0..P_{n-1}` and their derivatives at `t` in `[-1, 1]`.
fn legendre_basis(n: usize, t: f64) -> (Vec<f64>, Vec<f64>) {
    let mut p = vec![0.0; n];
    let mut d = vec![0.0; n];
    if n == 0 {
        return (p, d);
    }
    p[0] = 1.0;
    if n > 1 {
        p[1] = t;
        d[1] = 1.0;
    }
    for k in 1..n.saturating_sub(1) {
        let kf = k as f64;
        p[k + 1] = ((2.0 * kf + 1.0) * t * p[k] - kf * p[k - 1]) / (kf + 1.0);
        d[k + 1] = d[k - 1] + (2.0 * kf + 1.0) * p[k];
    }
    (p, d)
}

/// Polynomial on `[0, length]` of degree `< q`, held by its values at the
/// `q` Gauss–Legendre nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgePoly {
    pub length: f64,
    pub samples: Vec<f64>,
    coeffs: Vec<f64>,
}

impl EdgePoly {
    pub fn nodes(length: f64, q: usize) -> Vec<f64> {
        rule(0.0, length, q).into_iter().map(|(x, _)| x).collect()
    }

    pub fn from_samples(length: f64, samples: Vec<f64>) -> Self {
        let q = samples.len();
        if samples.windows(2).all(|w| w[0] == w[1]) {
            let mut coeffs = vec![0.0; q];
            if q > 0 {
                coeffs[0] = samples[0];
            }
            return Self {
                length,
                samples,
                coeffs,
            };
        }
        let (t, w) = gauss_legendre(q);
        let mut coeffs = vec![0.0; q];
        for (i, (&ti, &wi)) in t.iter().zip(&w).enumerate() {
            let (p, _) = legendre_basis(q, ti);
            for k in 0..q {
                coeffs[k] += (2.0 * k as f64 + 1.0) / 2.0 * wi * samples[i] * p[k];
            }
        }
        Self {
            length,
            samples,
            coeffs,
        }
    }

    pub fn from_fn(length: f64, q: usize, f: impl Fn(f64) -> f64) -> Self {
        Self::from_samples(length, Self::nodes(length, q).into_iter().map(f).collect())
    }

    fn from_coeffs(length: f64, coeffs: Vec<f64>) -> Self {
        let q = coeffs.len();
        let samples = Self::nodes(length, q)
            .into_iter()
            .map(|s| {
                let (p, _) = legendre_basis(q, 2.0 * s / length - 1.0);
                p.iter().zip(&coeffs).map(|(a, b)| a * b).sum()
            })
            .collect();
        Self {
            length,
            samples,
            coeffs,
        }
    }

    pub fn degree_bound(&self) -> usize {
        self.samples.len()
    }

    pub fn value(&self, sigma: f64) -> f64 {
        let (p, _) = legendre_basis(self.coeffs.len(), 2.0 * sigma / self.length - 1.0);
        p.iter().zip(&self.coeffs).map(|(a, b)| a * b).sum()
    }

    pub fn derivative(&self, sigma: f64) -> f64 {
        let (_, d) = legendre_basis(self.coeffs.len(), 2.0 * sigma / self.length - 1.0);
        2.0 / self.length * d.iter().zip(&self.coeffs).map(|(a, b)| a * b).sum::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum EdgeValue {
    Regular(EdgePoly),
    Singular(f64),
}

/// Function on the skeleton: one entry per edge, in edge-id order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkeletonFunction {
    pub edges: Vec<EdgeValue>,
}

impl SkeletonFunction {
    /// `reg(edge, sigma)` on regular edges, `sing(edge)` on singular ones.
    pub fn from_fns(
        skeleton: &Skeleton,
        q: usize,
        reg: impl Fn(&SkeletonEdge, f64) -> f64,
        sing: impl Fn(&SkeletonEdge) -> f64,
    ) -> Self {
        let edges = skeleton
            .edges
            .iter()
            .map(|e| {
                if e.singular {
                    EdgeValue::Singular(sing(e))
                } else {
                    EdgeValue::Regular(EdgePoly::from_fn(e.length, q, |s| reg(e, s)))
                }
            })
            .collect();
        Self { edges }
    }

    pub fn constant(skeleton: &Skeleton, q: usize, c: f64) -> Self {
        Self::from_fns(skeleton, q, |_, _| c, |_| c)
    }

    pub fn value(&self, edge: usize, sigma: f64) -> f64 {
        match &self.edges[edge] {
            EdgeValue::Regular(p) => p.value(sigma),
            EdgeValue::Singular(c) => *c,
        }
    }

    /// `du/dsigma`; zero on singular edges.
    pub fn derivative(&self, edge: usize, sigma: f64) -> f64 {
        match &self.edges[edge] {
            EdgeValue::Regular(p) => p.derivative(sigma),
            EdgeValue::Singular(_) => 0.0,
        }
    }
}

/// A skeleton together with the cached `alpha`-masses of its edges.
#[derive(Debug, Clone)]
pub struct SkeletonSpace {
    pub skeleton: Skeleton,
    /// `int_e alpha dsigma` per edge.
    pub alpha_mass: Vec<f64>,
    /// Nodes per regular edge for [`SkeletonFunction`]s built by this space.
    pub q: usize,
}

impl SkeletonSpace {
    pub fn new(skeleton: Skeleton, q: usize) -> Result<Self> {
        if q == 0 {
            return Err(Error::InvalidParameter("q must be positive".into()));
        }
        let alpha_mass = skeleton.edges.iter().map(SkeletonEdge::alpha_mass).collect::<Result<_>>()?;
        Ok(Self {
            skeleton,
            alpha_mass,
            q,
        })
    }

    pub fn from_domain(domain: &RpDomain, q: usize) -> Result<Self> {
        Self::new(Skeleton::from_domain(domain)?, q)
    }

    fn check(&self, f: &SkeletonFunction) -> Result<()> {
        if f.edges.len() != self.skeleton.edges.len() {
            return Err(Error::InvalidParameter(format!(
                "function has {} edges, skeleton has {}",
                f.edges.len(),
                self.skeleton.edges.len()
            )));
        }
        for (e, v) in self.skeleton.edges.iter().zip(&f.edges) {
            let ok = match v {
                EdgeValue::Regular(p) => !e.singular && (p.length - e.length).abs() <= 1e-14 * e.length,
                EdgeValue::Singular(_) => e.singular,
            };
            if !ok {
                return Err(Error::InvalidParameter(format!("mismatched grid on edge {}", e.id)));
            }
        }
        Ok(())
    }

    fn quad_order(f: &SkeletonFunction, g: &SkeletonFunction, edge: usize) -> usize {
        let d = |u: &SkeletonFunction| match &u.edges[edge] {
            EdgeValue::Regular(p) => p.degree_bound(),
            EdgeValue::Singular(_) => 1,
        };
        // alpha and beta are at most linear on regular edges
        (d(f) + d(g)) / 2 + 2
    }

    /// `sum_e int f g alpha dsigma`.
    pub fn l2_inner(&self, f: &SkeletonFunction, g: &SkeletonFunction) -> Result<f64> {
        self.check(f)?;
        self.check(g)?;
        let mut total = 0.0;
        for e in &self.skeleton.edges {
            match (&f.edges[e.id], &g.edges[e.id]) {
                (EdgeValue::Singular(a), EdgeValue::Singular(b)) => total += a * b * self.alpha_mass[e.id],
                (EdgeValue::Regular(a), EdgeValue::Regular(b)) => {
                    for (s, w) in rule(0.0, e.length, Self::quad_order(f, g, e.id)) {
                        total += w * a.value(s) * b.value(s) * e.alpha(s)?;
                    }
                }
                _ => unreachable!("checked"),
            }
        }
        Ok(total)
    }

    /// `sum_{e regular} int f' g' beta dsigma`.
    pub fn energy_inner(&self, f: &SkeletonFunction, g: &SkeletonFunction) -> Result<f64> {
        self.check(f)?;
        self.check(g)?;
        let mut total = 0.0;
        for e in self.skeleton.regular() {
            if let (EdgeValue::Regular(a), EdgeValue::Regular(b)) = (&f.edges[e.id], &g.edges[e.id]) {
                for (s, w) in rule(0.0, e.length, Self::quad_order(f, g, e.id)) {
                    total += w * a.derivative(s) * b.derivative(s) * e.beta(s, None)?.value;
                }
            }
        }
        Ok(total)
    }

    pub fn h1_inner(&self, f: &SkeletonFunction, g: &SkeletonFunction) -> Result<f64> {
        Ok(self.l2_inner(f, g)? + self.energy_inner(f, g)?)
    }

    /// `(T_0 F)(x, y) = F(tau(x, y))`.
    pub fn apply_t0(&self, f: &SkeletonFunction, x: f64, y: f64) -> Result<f64> {
        let loc = self.skeleton.locate(x, y)?;
        Ok(f.value(loc.edge, loc.sigma))
    }

    /// `(1/alpha) int g J ds` over the fibre at `sigma` on a regular edge.
    fn fibre_mean(&self, e: &SkeletonEdge, sigma: f64, g: &dyn Fn(f64, f64) -> f64, order: usize) -> Result<f64> {
        let l = e.fiber_halflength(sigma);
        let mut num = 0.0;
        for (a, b) in [(-l, 0.0), (0.0, l)] {
            for (s, w) in rule(a, b, order) {
                let p = e.map(sigma, s);
                num += w * g(p[0], p[1]) * e.jacobian(sigma, s);
            }
        }
        Ok(num / e.alpha(sigma)?)
    }

    /// `int int g J ds dsigma` over `tau^{-1}(e)`.
    fn region_integral(e: &SkeletonEdge, g: &dyn Fn(f64, f64) -> f64, panels: usize, order: usize) -> f64 {
        let mut num = 0.0;
        let w_sig = e.length / panels as f64;
        for k in 0..panels {
            for (sigma, ws) in rule(k as f64 * w_sig, (k + 1) as f64 * w_sig, order) {
                let l = e.fiber_halflength(sigma);
                for (a, b) in [(-l, 0.0), (0.0, l)] {
                    for (s, w) in rule(a, b, order) {
                        let p = e.map(sigma, s);
                        num += ws * w * g(p[0], p[1]) * e.jacobian(sigma, s);
                    }
                }
            }
        }
        num
    }

    /// Mean of `g` over `tau^{-1}(e)`, `int int g J / int int J`. A sample
    /// set that is constant returns that constant without rounding.
    fn region_mean(e: &SkeletonEdge, g: &dyn Fn(f64, f64) -> f64, panels: usize, order: usize) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        let mut first = None;
        let mut uniform = true;
        let w_sig = e.length / panels as f64;
        for k in 0..panels {
            for (sigma, ws) in rule(k as f64 * w_sig, (k + 1) as f64 * w_sig, order) {
                let l = e.fiber_halflength(sigma);
                for (a, b) in [(-l, 0.0), (0.0, l)] {
                    for (s, w) in rule(a, b, order) {
                        let p = e.map(sigma, s);
                        let j = e.jacobian(sigma, s);
                        let v = g(p[0], p[1]);
                        uniform &= *first.get_or_insert(v) == v;
                        num += ws * w * v * j;
                        den += ws * w * j;
                    }
                }
            }
        }
        match first {
            Some(v) if uniform => v,
            _ => num / den,
        }
    }

    /// `T_0^* g`: fibre averages on regular edges, region means on singular
    /// edges.
    pub fn apply_t0_star(&self, g: &dyn Fn(f64, f64) -> f64) -> Result<SkeletonFunction> {
        let mut edges = Vec::with_capacity(self.skeleton.edges.len());
        for e in &self.skeleton.edges {
            if e.singular {
                edges.push(EdgeValue::Singular(Self::region_mean(e, g, 8, 16)));
            } else {
                let samples = EdgePoly::nodes(e.length, self.q)
                    .into_iter()
                    .map(|s| self.fibre_mean(e, s, g, 24))
                    .collect::<Result<Vec<_>>>()?;
                edges.push(EdgeValue::Regular(EdgePoly::from_samples(e.length, samples)));
            }
        }
        Ok(SkeletonFunction { edges })
    }

    /// Galerkin matrices `(K, M)` for the Legendre basis of size `q` on a
    /// regular edge, with the nodes and weights used.
    fn galerkin(&self, e: &SkeletonEdge, q: usize) -> Result<(DMatrix<f64>, DMatrix<f64>, Vec<(f64, f64)>)> {
        let nodes = rule(0.0, e.length, q + 2);
        let mut k = DMatrix::zeros(q, q);
        let mut m = DMatrix::zeros(q, q);
        for &(s, w) in &nodes {
            let (p, d) = legendre_basis(q, 2.0 * s / e.length - 1.0);
            let a = e.alpha(s)?;
            let b = e.beta(s, None)?.value;
            let sc = 2.0 / e.length;
            for i in 0..q {
                for j in 0..q {
                    m[(i, j)] += w * a * p[i] * p[j];
                    k[(i, j)] += w * b * sc * sc * d[i] * d[j];
                }
            }
        }
        Ok((k, m, nodes))
    }

    /// `(H + I)^{-1} f`: a Legendre–Galerkin solve on each regular edge; on
    /// singular edges `H` is zero and the resolvent is the identity.
    pub fn resolvent(&self, f: &SkeletonFunction) -> Result<SkeletonFunction> {
        self.check(f)?;
        let mut edges = Vec::with_capacity(f.edges.len());
        for e in &self.skeleton.edges {
            match &f.edges[e.id] {
                EdgeValue::Singular(c) => edges.push(EdgeValue::Singular(*c)),
                EdgeValue::Regular(p) => {
                    let q = p.degree_bound();
                    let (k, m, nodes) = self.galerkin(e, q)?;
                    let mut rhs = DVector::zeros(q);
                    for &(s, w) in &nodes {
                        let (b, _) = legendre_basis(q, 2.0 * s / e.length - 1.0);
                        let fa = w * p.value(s) * e.alpha(s)?;
                        for i in 0..q {
                            rhs[i] += fa * b[i];
                        }
                    }
                    let c = solve_spd(k + m, rhs)?;
                    edges.push(EdgeValue::Regular(EdgePoly::from_coeffs(e.length, c.iter().copied().collect())));
                }
            }
        }
        Ok(SkeletonFunction { edges })
    }

    /// `T_1^* g` for the `H^1` inner products: on regular edges the Riesz
    /// representer of `f -> int_Omega (grad(f o tau) . grad g + (f o tau) g)`.
    pub fn apply_t1_star(
        &self,
        g: &dyn Fn(f64, f64) -> f64,
        grad_g: &dyn Fn(f64, f64) -> [f64; 2],
    ) -> Result<SkeletonFunction> {
        let mut edges = Vec::with_capacity(self.skeleton.edges.len());
        for e in &self.skeleton.edges {
            if e.singular {
                let num = Self::region_integral(e, g, 8, 16);
                edges.push(EdgeValue::Singular(num / self.alpha_mass[e.id]));
                continue;
            }
            let q = self.q;
            let (k, m, nodes) = self.galerkin(e, q)?;
            let mut rhs = DVector::zeros(q);
            for &(sigma, w) in &nodes {
                let l = e.fiber_halflength(sigma);
                let (mut g0, mut g1) = (0.0, 0.0);
                for (a, b) in [(-l, 0.0), (0.0, l)] {
                    for (s, ws) in rule(a, b, 24) {
                        let p = e.map(sigma, s);
                        let j = e.jacobian(sigma, s);
                        let loc = self.preimage_on(e, p)?;
                        let gg = grad_g(p[0], p[1]);
                        g0 += ws * g(p[0], p[1]) * j;
                        g1 += ws * (gg[0] * loc.grad_sigma[0] + gg[1] * loc.grad_sigma[1]) * j;
                    }
                }
                let (b, d) = legendre_basis(q, 2.0 * sigma / e.length - 1.0);
                let sc = 2.0 / e.length;
                for i in 0..q {
                    rhs[i] += w * (g1 * sc * d[i] + g0 * b[i]);
                }
            }
            let c = solve_spd(k + m, rhs)?;
            edges.push(EdgeValue::Regular(EdgePoly::from_coeffs(e.length, c.iter().copied().collect())));
        }
        Ok(SkeletonFunction { edges })
    }

    fn preimage_on(&self, e: &SkeletonEdge, p: [f64; 2]) -> Result<Located> {
        e.preimage(p[0], p[1])
            .ok_or_else(|| Error::OutOfRange(format!("fibre point {p:?} left the region of edge {}", e.id)))
    }

    /// `||g||^2_{H^1}` over the union of the edge regions, by the coarea
    /// rule in `(sigma, s)`.
    pub fn domain_h1_norm_sq(&self, g: &dyn Fn(f64, f64) -> f64, grad_g: &dyn Fn(f64, f64) -> [f64; 2]) -> f64 {
        let integrand = |x: f64, y: f64| {
            let d = grad_g(x, y);
            g(x, y).powi(2) + d[0] * d[0] + d[1] * d[1]
        };
        self.skeleton
            .edges
            .iter()
            .map(|e| Self::region_integral(e, &integrand, 8, 16))
            .sum()
    }

    /// `<(T_1 T_1^* - I) g, g>_{H^1} = ||T_1^* g||^2 - ||g||^2`.
    pub fn t1_diagnostic(
        &self,
        g: &dyn Fn(f64, f64) -> f64,
        grad_g: &dyn Fn(f64, f64) -> [f64; 2],
    ) -> Result<T1Diagnostic> {
        let u = self.apply_t1_star(g, grad_g)?;
        let skeleton_sq = self.h1_inner(&u, &u)?;
        let domain_sq = self.domain_h1_norm_sq(g, grad_g);
        Ok(T1Diagnostic {
            domain_h1_sq: domain_sq,
            t1_star_h1_sq: skeleton_sq,
            value: skeleton_sq - domain_sq,
        })
    }

    /// Isometry defects of `T_0` for `F`, with the domain side integrated
    /// over the physical regions (rectangles and triangles) of the regular
    /// edges; singular edges carry constants over their exact region areas.
    pub fn check_isometry(&self, f: &SkeletonFunction, order: usize) -> Result<IsometryReport> {
        self.check(f)?;
        let mut dom_l2 = 0.0;
        let mut dom_h1 = 0.0;
        for e in &self.skeleton.edges {
            match &f.edges[e.id] {
                EdgeValue::Singular(c) => dom_l2 += c * c * e.region_area(),
                EdgeValue::Regular(p) => {
                    for (pt, w) in physical_rule(e, order) {
                        let loc = self.preimage_on(e, pt)?;
                        let v = p.value(loc.sigma);
                        let d = p.derivative(loc.sigma);
                        let g2 = loc.grad_sigma[0].powi(2) + loc.grad_sigma[1].powi(2);
                        dom_l2 += w * v * v;
                        dom_h1 += w * d * d * g2;
                    }
                }
            }
        }
        let sk_l2 = self.l2_inner(f, f)?;
        let sk_h1 = self.energy_inner(f, f)?;
        Ok(IsometryReport {
            l2_domain: dom_l2,
            l2_skeleton: sk_l2,
            l2_defect: (dom_l2 - sk_l2).abs(),
            h1_domain: dom_h1,
            h1_skeleton: sk_h1,
            h1_defect: (dom_h1 - sk_h1).abs(),
        })
    }

    /// `||T_0^* T_0 F - F||` in the weighted norm.
    pub fn t0_star_t0_defect(&self, f: &SkeletonFunction) -> Result<f64> {
        let g = |x: f64, y: f64| self.apply_t0(f, x, y).unwrap_or(f64::NAN);
        let back = self.apply_t0_star(&g)?;
        let diff = SkeletonFunction {
            edges: back
                .edges
                .iter()
                .zip(&f.edges)
                .map(|(a, b)| match (a, b) {
                    (EdgeValue::Singular(x), EdgeValue::Singular(y)) => EdgeValue::Singular(x - y),
                    (EdgeValue::Regular(x), EdgeValue::Regular(y)) => EdgeValue::Regular(EdgePoly::from_samples(
                        x.length,
                        EdgePoly::nodes(x.length, y.degree_bound().max(x.degree_bound()))
                            .into_iter()
                            .map(|s| x.value(s) - y.value(s))
                            .collect(),
                    )),
                    _ => unreachable!("same skeleton"),
                })
                .collect(),
        };
        let d = self.l2_inner(&diff, &diff)?;
        if !d.is_finite() {
            return Err(Error::OutOfRange("T0 F evaluated outside every chart".into()));
        }
        Ok(d.sqrt())
    }

    /// A small-scale non-compactness witness: for every
    /// singular edge, the normalized indicator `phi` satisfies
    /// `(H + I)^{-1} phi = phi`. Returns `(edge, ||R phi - phi||)` pairs.
    pub fn singular_resolvent_witness(&self) -> Result<Vec<(usize, f64)>> {
        let mut out = Vec::new();
        for e in self.skeleton.singular() {
            let phi = SkeletonFunction::from_fns(
                &self.skeleton,
                self.q,
                |_, _| 0.0,
                |x| if x.id == e.id { 1.0 / self.alpha_mass[e.id].sqrt() } else { 0.0 },
            );
            let r = self.resolvent(&phi)?;
            let defect = match (&r.edges[e.id], &phi.edges[e.id]) {
                (EdgeValue::Singular(a), EdgeValue::Singular(b)) => (a - b).abs(),
                _ => unreachable!("singular edge"),
            };
            out.push((e.id, defect));
        }
        Ok(out)
    }
}

fn solve_spd(a: DMatrix<f64>, b: DVector<f64>) -> Result<DVector<f64>> {
    let chol = a
        .cholesky()
        .ok_or_else(|| Error::Eigen("Galerkin matrix is not positive definite".into()))?;
    Ok(chol.solve(&b))
}

/// Tensor Gauss–Legendre rule on the physical region of a regular edge:
/// the centre rectangle, or the two triangles either side of the
/// diagonal's crease (collapsed-square rule).
fn physical_rule(e: &SkeletonEdge, order: usize) -> Vec<([f64; 2], f64)> {
    let mut out = Vec::new();
    match e.shape {
        EdgeShape::Centre { x_lo, x_hi, half } => {
            for (x, wx) in rule(x_lo, x_hi, order) {
                for (y, wy) in rule(-half, half, order) {
                    out.push(([x, y], wx * wy));
                }
            }
        }
        EdgeShape::Diagonal(_) => {
            // chart vertices, mapped through e.map at the region's corners
            let lo = e.map(e.length, -e.fiber_halflength(e.length)); // (0, delta/2)
            let b = e.point(e.length); // ((h-delta)/2, delta/2)
            let top = e.map(e.length, e.fiber_halflength(e.length)); // ((h-delta)/2, h/2)
            let corner = e.point(0.0); // (0, h/2)
            for tri in [[lo, b, corner], [b, top, corner]] {
                let [v0, v1, v2] = tri;
                let det = ((v1[0] - v0[0]) * (v2[1] - v1[1]) - (v1[1] - v0[1]) * (v2[0] - v1[0])).abs();
                for (u, wu) in rule(0.0, 1.0, order) {
                    for (v, wv) in rule(0.0, 1.0, order) {
                        let p = [
                            v0[0] + u * (v1[0] - v0[0]) + u * v * (v2[0] - v1[0]),
                            v0[1] + u * (v1[1] - v0[1]) + u * v * (v2[1] - v1[1]),
                        ];
                        out.push((p, wu * wv * u * det));
                    }
                }
            }
        }
        _ => {}
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsometryReport {
    pub l2_domain: f64,
    pub l2_skeleton: f64,
    pub l2_defect: f64,
    pub h1_domain: f64,
    pub h1_skeleton: f64,
    pub h1_defect: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct T1Diagnostic {
    pub domain_h1_sq: f64,
    pub t1_star_h1_sq: f64,
    /// `<(T_1 T_1^* - I) g, g>`; non-positive up to quadrature error.
    pub value: f64,
}

/// Finite-volume discretization of `-(1/alpha)(beta u')'` on one regular
/// edge: `n` cells, `alpha`-mass per cell, `beta / h` conductance per
/// interior face, no flux through the ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedSlSystem {
    pub edge_id: usize,
    pub group: EdgeGroup,
    pub length: f64,
    pub n: usize,
    pub mass: Vec<f64>,
    pub conductance: Vec<f64>,
}

pub fn assemble_sl(edge: &SkeletonEdge, n: usize) -> Result<WeightedSlSystem> {
    if edge.singular {
        return Err(Error::SingularEdge(edge.id));
    }
    if n < 8 {
        return Err(Error::InvalidParameter(format!("need at least 8 cells, got {n}")));
    }
    let h = edge.length / n as f64;
    let mut mass = Vec::with_capacity(n);
    for i in 0..n {
        let mut m = 0.0;
        for (s, w) in rule(i as f64 * h, (i + 1) as f64 * h, 4) {
            m += w * edge.alpha(s)?;
        }
        mass.push(m);
    }
    let conductance = (1..n)
        .map(|i| edge.beta(i as f64 * h, None).map(|b| b.value / h))
        .collect::<Result<Vec<_>>>()?;
    Ok(WeightedSlSystem {
        edge_id: edge.id,
        group: edge.group,
        length: edge.length,
        n,
        mass,
        conductance,
    })
}

impl WeightedSlSystem {
    /// Stiffness `K u` (so that `H u = M^{-1} K u`).
    pub fn stiffness_apply(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (f, &k) in self.conductance.iter().enumerate() {
            let flux = k * (u[f + 1] - u[f]);
            out[f] -= flux;
            out[f + 1] += flux;
        }
        out
    }

    /// `H u = M^{-1} K u`.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        self.stiffness_apply(u).iter().zip(&self.mass).map(|(k, m)| k / m).collect()
    }

    /// `<u, v>_alpha = sum m_i u_i v_i`.
    pub fn weighted_inner(&self, u: &[f64], v: &[f64]) -> f64 {
        u.iter().zip(v).zip(&self.mass).map(|((a, b), m)| a * b * m).sum()
    }

    /// Lowest `count` eigenvalues of `M^{-1} K`. The constant vector spans
    /// the kernel exactly, so `0` is returned as is; the rest are the
    /// eigenvalues of the flux-side matrix `C^{1/2} D M^{-1} D^T C^{1/2}`
    /// (`D` the difference operator, `C` the face conductances), which is
    /// tridiagonal and positive definite. This keeps the zero eigenvalue
    /// free of the `eps ||K||` bisection error.
    pub fn eigenvalues(&self, count: usize) -> Result<Vec<f64>> {
        if count > self.n {
            return Err(Error::OutOfRange(format!("asked for {count} eigenvalues of {} cells", self.n)));
        }
        if count == 0 {
            return Ok(vec![]);
        }
        let k = &self.conductance;
        let m = &self.mass;
        let diag: Vec<f64> = (0..k.len()).map(|f| k[f] * (1.0 / m[f] + 1.0 / m[f + 1])).collect();
        let off: Vec<f64> = (0..k.len().saturating_sub(1))
            .map(|f| -(k[f] * k[f + 1]).sqrt() / m[f + 1])
            .collect();
        let mut out = vec![0.0];
        out.extend(tridiagonal_lowest(&diag, &off, count - 1)?);
        Ok(out)
    }
}

pub fn sl_eigenvalues(system: &WeightedSlSystem, count: usize) -> Result<Vec<f64>> {
    system.eigenvalues(count)
}

/// Row of the `sl-spectrum` CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlRow {
    pub edge_id: usize,
    pub group: String,
    pub eigen_index: usize,
    pub value: f64,
    pub n_grid: usize,
}

pub fn group_name(g: EdgeGroup) -> &'static str {
    match g {
        EdgeGroup::G1Room => "G1_room",
        EdgeGroup::G1Passage => "G1_passage",
        EdgeGroup::G2Diagonal => "G2_diagonal",
        EdgeGroup::G3Parabolic => "G3_parabolic",
        EdgeGroup::G3Segment => "G3_segment",
    }
}

/// Eigenvalues of every regular edge of `skeleton`, in parallel.
pub fn skeleton_spectrum(skeleton: &Skeleton, n: usize, count: usize) -> Result<Vec<SlRow>> {
    use rayon::prelude::*;
    let per_edge: Vec<Result<Vec<SlRow>>> = skeleton
        .edges
        .par_iter()
        .filter(|e| !e.singular)
        .map(|e| {
            let sys = assemble_sl(e, n)?;
            Ok(sys
                .eigenvalues(count.min(n))?
                .into_iter()
                .enumerate()
                .map(|(k, v)| SlRow {
                    edge_id: e.id,
                    group: group_name(e.group).to_string(),
                    eigen_index: k,
                    value: v,
                    n_grid: n,
                })
                .collect())
        })
        .collect();
    let mut rows = Vec::new();
    for r in per_edge {
        rows.extend(r?);
    }
    Ok(rows)
}

/// Eigenvalue `k` on grids `n, 2n, 4n` with the two Richardson
/// extrapolants (order 2) and the observed order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Refinement {
    pub values: [f64; 3],
    pub extrapolants: [f64; 2],
    pub observed_order: f64,
}

pub fn refine_eigenvalue(edge: &SkeletonEdge, n: usize, k: usize) -> Result<Refinement> {
    let v = |m: usize| -> Result<f64> { Ok(assemble_sl(edge, m)?.eigenvalues(k + 1)?[k]) };
    let values = [v(n)?, v(2 * n)?, v(4 * n)?];
    let r = |a: f64, b: f64| (4.0 * b - a) / 3.0;
    let observed_order = ((values[0] - values[1]) / (values[1] - values[2])).abs().log2();
    Ok(Refinement {
        values,
        extrapolants: [r(values[0], values[1]), r(values[1], values[2])],
        observed_order,
    })
}

/// `chi_{tau^{-1}(e)} / sqrt|tau^{-1}(e)|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZeroMode {
    pub edge: usize,
    pub area: f64,
    pub amplitude: f64,
}

impl ZeroMode {
    pub fn value(&self, skeleton: &Skeleton, x: f64, y: f64) -> Result<f64> {
        let loc = skeleton.locate(x, y)?;
        Ok(if loc.edge == self.edge { self.amplitude } else { 0.0 })
    }

    /// `<phi_m, phi_n>_{L^2}`: the supports are disjoint preimages.
    pub fn inner(&self, other: &ZeroMode) -> f64 {
        if self.edge == other.edge {
            self.amplitude * other.amplitude * self.area
        } else {
            0.0
        }
    }

    /// Piecewise `H^1` Rayleigh quotient in the decoupled form: the mode is
    /// constant on its region, so the gradient vanishes there.
    pub fn rayleigh(&self) -> f64 {
        let grad = [0.0f64, 0.0];
        let energy = (grad[0] * grad[0] + grad[1] * grad[1]) * self.amplitude.powi(2) * self.area;
        energy / self.inner(self)
    }
}

/// `n` zero modes on distinct edges, singular edges first.
pub fn zero_modes(domain: &RpDomain, n: usize) -> Result<Vec<ZeroMode>> {
    let sk = Skeleton::from_domain(domain)?;
    if n > sk.edges.len() {
        return Err(Error::OutOfRange(format!(
            "asked for {n} zero modes, skeleton has {} edges",
            sk.edges.len()
        )));
    }
    let order = sk.singular().chain(sk.regular());
    Ok(order
        .take(n)
        .map(|e| {
            let area = e.region_area();
            ZeroMode {
                edge: e.id,
                area,
                amplitude: 1.0 / area.sqrt(),
            }
        })
        .collect())
}

/// Seeded piecewise-cubic test set on the regular edges, with random
/// constants on singular edges.
pub fn cubic_test_set(space: &SkeletonSpace, count: usize, seed: u64) -> Vec<SkeletonFunction> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let coeffs: Vec<[f64; 4]> = space
                .skeleton
                .edges
                .iter()
                .map(|_| std::array::from_fn(|_| rng.gen_range(-1.0..1.0)))
                .collect();
            SkeletonFunction::from_fns(
                &space.skeleton,
                space.q,
                |e, s| {
                    let c = coeffs[e.id];
                    let t = s / e.length;
                    c[0] + t * (c[1] + t * (c[2] + t * c[3]))
                },
                |e| coeffs[e.id][0],
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::skeleton::build_room_skeleton;
    use std::f64::consts::PI;

    fn room_space() -> SkeletonSpace {
        SkeletonSpace::new(Skeleton::from_edges(build_room_skeleton(1.0, 0.25, 0.25).unwrap()), 8).unwrap()
    }

    fn domain_space() -> SkeletonSpace {
        let d = RpDomain::build_geometric(0.5, 2.0, 0.25, 4).unwrap();
        SkeletonSpace::from_domain(&d, 8).unwrap()
    }

    #[test]
    fn edge_poly_reproduces_cubics() {
        let p = EdgePoly::from_fn(2.0, 6, |s| 1.0 - s + 0.5 * s * s * s);
        for s in [0.0, 0.3, 1.7, 2.0] {
            assert!((p.value(s) - (1.0 - s + 0.5 * s.powi(3))).abs() < 1e-13);
            assert!((p.derivative(s) - (-1.0 + 1.5 * s * s)).abs() < 1e-12);
        }
    }

    #[test]
    fn inner_products() {
        let sp = domain_space();
        let passage = sp.skeleton.edges.iter().find(|e| e.group == EdgeGroup::G1Passage).unwrap();
        let one = SkeletonFunction::from_fns(&sp.skeleton, 4, |e, _| (e.id == passage.id) as u8 as f64, |_| 0.0);
        let l2 = sp.l2_inner(&one, &one).unwrap();
        assert!((l2 - passage.length / 64.0).abs() < 1e-15);

        let diag = sp.skeleton.edges.iter().find(|e| e.group == EdgeGroup::G2Diagonal).unwrap();
        let f = SkeletonFunction::from_fns(&sp.skeleton, 4, |e, s| if e.id == diag.id { s } else { 0.0 }, |_| 0.0);
        assert!((sp.l2_inner(&f, &f).unwrap() - diag.length.powi(4) / 4.0).abs() < 1e-15);
        let h1 = sp.h1_inner(&f, &f).unwrap();
        assert!(h1 >= sp.energy_inner(&f, &f).unwrap() && sp.energy_inner(&f, &f).unwrap() >= 0.0);

        let other = SkeletonSpace::new(Skeleton::from_edges(build_room_skeleton(1.0, 0.25, 0.25).unwrap()), 4).unwrap();
        assert!(other.l2_inner(&f, &f).is_err());
    }

    #[test]
    fn sl_g1_converges_at_order_two() {
        let sp = room_space();
        let e = sp.skeleton.edges.iter().find(|e| e.group == EdgeGroup::G1Room).unwrap();
        let sys = assemble_sl(e, 64).unwrap();
        let ev = sys.eigenvalues(4).unwrap();
        assert!(ev[0].abs() < 1e-10);
        for m in 1..4 {
            let r = refine_eigenvalue(e, 32, m).unwrap();
            assert!(r.observed_order > 1.8 && r.observed_order < 2.2, "{}", r.observed_order);
            let exact = (m as f64 * PI / e.length).powi(2);
            assert!((r.extrapolants[1] - exact).abs() < 1e-4 * exact);
        }
    }

    #[test]
    fn sl_g2_matches_bessel_zeros() {
        // -(1/s)(2 s u')' has eigenfunctions J0(sqrt(lambda/2) s); the no-flux
        // end at L gives J1(sqrt(lambda/2) L) = 0.
        let j1 = [3.831_705_970_207_512, 7.015_586_669_815_619, 10.173_468_135_062_722];
        let sp = room_space();
        let e = sp.skeleton.edges.iter().find(|e| e.group == EdgeGroup::G2Diagonal).unwrap();
        for (k, z) in j1.iter().enumerate() {
            let r = refine_eigenvalue(e, 512, k + 1).unwrap();
            let exact = 2.0 * (z / e.length).powi(2);
            assert!((r.extrapolants[1] - r.extrapolants[0]).abs() < 1e-6 * exact);
            assert!((r.extrapolants[1] - exact).abs() < 1e-6 * exact, "{} vs {exact}", r.extrapolants[1]);
        }
    }

    #[test]
    fn sl_symmetry_kernel_and_errors() {
        let sp = room_space();
        for e in sp.skeleton.edges.iter() {
            if e.singular {
                assert!(matches!(assemble_sl(e, 16), Err(Error::SingularEdge(_))));
                continue;
            }
            let sys = assemble_sl(e, 40).unwrap();
            let u: Vec<f64> = (0..40).map(|i| (0.3 * i as f64).sin()).collect();
            let v: Vec<f64> = (0..40).map(|i| (0.11 * i as f64 * i as f64).cos()).collect();
            let a = sys.weighted_inner(&sys.apply(&u), &v);
            let b = sys.weighted_inner(&u, &sys.apply(&v));
            assert!((a - b).abs() <= 1e-12 * a.abs().max(b.abs()));
            assert!(sys.apply(&[1.0; 40]).iter().all(|x| x.abs() < 1e-12));
            assert!(sys.eigenvalues(10).unwrap().iter().all(|&x| x >= -1e-10));
        }
        assert!(assemble_sl(&sp.skeleton.edges[0], 4).is_err());
    }

    #[test]
    fn t0_constants_and_means() {
        let sp = domain_space();
        let one = SkeletonFunction::constant(&sp.skeleton, sp.q, 1.0);
        assert_eq!(sp.apply_t0(&one, 0.3, 0.1).unwrap(), 1.0);
        let back = sp.apply_t0_star(&|_, _| 1.0).unwrap();
        for v in &back.edges {
            match v {
                EdgeValue::Singular(c) => assert!((c - 1.0).abs() < 1e-15),
                EdgeValue::Regular(p) => assert!(p.samples.iter().all(|s| (s - 1.0).abs() < 1e-13)),
            }
        }
        assert!(sp.apply_t0(&one, 10.0, 0.0).is_err());
    }

    #[test]
    fn t0_star_inverts_t0_on_linear_g1() {
        let sp = domain_space();
        let f = SkeletonFunction::from_fns(&sp.skeleton, sp.q, |_, s| s, |_| 0.5);
        assert!(sp.t0_star_t0_defect(&f).unwrap() < 1e-8);
    }

    #[test]
    fn isometry_on_cubics() {
        for sp in [room_space(), domain_space()] {
            for f in cubic_test_set(&sp, 4, 3) {
                let r = sp.check_isometry(&f, 8).unwrap();
                assert!(r.l2_defect < 1e-6, "{r:?}");
                assert!(r.h1_defect < 1e-6 * r.h1_skeleton.max(1.0), "{r:?}");
            }
        }
        let sp = room_space();
        let c = SkeletonFunction::constant(&sp.skeleton, sp.q, 2.0);
        let r = sp.check_isometry(&c, 8).unwrap();
        assert_eq!(r.h1_defect, 0.0);
        assert!(r.l2_defect < 1e-8);
    }

    #[test]
    fn resolvent_identity_on_singular_edges() {
        let sp = domain_space();
        let w = sp.singular_resolvent_witness().unwrap();
        assert!(!w.is_empty());
        assert!(w.iter().all(|&(_, d)| d == 0.0));
        // constants are fixed by (H + I)^{-1} on regular edges too
        let one = SkeletonFunction::constant(&sp.skeleton, sp.q, 1.0);
        let r = sp.resolvent(&one).unwrap();
        for v in &r.edges {
            if let EdgeValue::Regular(p) = v {
                assert!(p.samples.iter().all(|s| (s - 1.0).abs() < 1e-10));
            }
        }
    }

    #[test]
    fn t1_diagnostic_vanishes_on_pullbacks() {
        let sp = room_space();
        let f = SkeletonFunction::from_fns(&sp.skeleton, sp.q, |e, s| (s / e.length).powi(2), |_| 0.3);
        let g = |x: f64, y: f64| sp.apply_t0(&f, x, y).unwrap();
        let grad = |x: f64, y: f64| {
            let loc = sp.skeleton.locate(x, y).unwrap();
            let d = f.derivative(loc.edge, loc.sigma);
            [d * loc.grad_sigma[0], d * loc.grad_sigma[1]]
        };
        let u = sp.apply_t1_star(&g, &grad).unwrap();
        for (a, b) in u.edges.iter().zip(&f.edges) {
            match (a, b) {
                (EdgeValue::Regular(x), EdgeValue::Regular(y)) => {
                    for s in EdgePoly::nodes(x.length, 5) {
                        assert!((x.value(s) - y.value(s)).abs() < 1e-8);
                    }
                }
                (EdgeValue::Singular(x), EdgeValue::Singular(y)) => assert!((x - y).abs() < 1e-8),
                _ => unreachable!(),
            }
        }
        let diag = sp.t1_diagnostic(&|x, y| (x + y).sin(), &|x, y| [(x + y).cos(), (x + y).cos()]).unwrap();
        assert!(diag.value <= 1e-8 * diag.domain_h1_sq, "{diag:?}");
    }

    #[test]
    fn zero_modes_are_orthonormal() {
        let d = RpDomain::build_geometric(0.5, 2.0, 0.25, 20).unwrap();
        let modes = zero_modes(&d, 10).unwrap();
        assert_eq!(modes.len(), 10);
        let mut edges: Vec<_> = modes.iter().map(|m| m.edge).collect();
        edges.dedup();
        assert_eq!(edges.len(), 10);
        for (i, a) in modes.iter().enumerate() {
            for (j, b) in modes.iter().enumerate() {
                let v = a.inner(b);
                if i == j {
                    assert!((v - 1.0).abs() <= 4.0 * f64::EPSILON);
                } else {
                    assert_eq!(v, 0.0);
                }
            }
            assert_eq!(a.rayleigh(), 0.0);
        }
        assert!(zero_modes(&d, 100_000).is_err());
    }
}
