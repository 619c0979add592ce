//! Finite-difference (cell-centred finite-volume, 5-point) oracle for the
//! Neumann and Dirichlet spectra of `Omega_2M`, and the sandwich check
//! against the bracketing bounds.
//!
//! Grids are tensor products of x and y breakpoints with every piece
//! boundary on a grid line, so the geometry is exact. [`rasterize`] builds
//! the uniform grid; [`conforming_grid`] a graded one that resolves thin
//! passages without a uniformly fine mesh.

use serde::{Deserialize, Serialize};

use crate::bracketing::{assemble_bounds, BoundaryCondition, Scope};
use crate::domain::{Piece, RpDomain};
use crate::error::{Error, Result};
use crate::linalg::{lowest_eigenpairs, SymBand};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FaceKind {
    Interior,
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    West,
    East,
    South,
    North,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDomain {
    /// `nx + 1` increasing x breakpoints.
    pub xs: Vec<f64>,
    /// `ny + 1` increasing y breakpoints.
    pub ys: Vec<f64>,
    /// Cell `(i, j)` is active iff `active[i * ny + j]`.
    pub active: Vec<bool>,
    /// Cell width of a uniform grid; `None` for graded grids.
    pub spacing: Option<f64>,
    /// Nominal resolution (cells per unit length away from thin pieces).
    pub n_per_unit: usize,
}

impl GridDomain {
    pub fn nx(&self) -> usize {
        self.xs.len() - 1
    }

    pub fn ny(&self) -> usize {
        self.ys.len() - 1
    }

    pub fn is_active(&self, i: usize, j: usize) -> bool {
        self.active[i * self.ny() + j]
    }

    pub fn n_active(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }

    pub fn cell_area(&self, i: usize, j: usize) -> f64 {
        (self.xs[i + 1] - self.xs[i]) * (self.ys[j + 1] - self.ys[j])
    }

    pub fn active_area(&self) -> f64 {
        let mut a = 0.0;
        for i in 0..self.nx() {
            for j in 0..self.ny() {
                if self.is_active(i, j) {
                    a += self.cell_area(i, j);
                }
            }
        }
        a
    }

    /// Largest cell side.
    pub fn max_cell(&self) -> f64 {
        let m = |v: &[f64]| v.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
        m(&self.xs).max(m(&self.ys))
    }

    fn neighbour(&self, i: usize, j: usize, side: Side) -> Option<(usize, usize)> {
        let (ni, nj) = match side {
            Side::West => (i.checked_sub(1)?, j),
            Side::East => (i + 1, j),
            Side::South => (i, j.checked_sub(1)?),
            Side::North => (i, j + 1),
        };
        (ni < self.nx() && nj < self.ny() && self.is_active(ni, nj)).then_some((ni, nj))
    }

    /// Whether a face of an active cell lies on the domain boundary.
    pub fn face_kind(&self, i: usize, j: usize, side: Side) -> FaceKind {
        if self.neighbour(i, j, side).is_some() {
            FaceKind::Interior
        } else {
            FaceKind::Boundary
        }
    }

    /// A single `a x b` rectangle on a uniform grid of `n_per_unit`.
    pub fn rectangle(a: f64, b: f64, n_per_unit: usize) -> Result<Self> {
        let nx = grid_cells(a, n_per_unit, "rectangle width")?;
        let ny = grid_cells(b, n_per_unit, "rectangle height")?;
        let h = 1.0 / n_per_unit as f64;
        Ok(Self {
            xs: (0..=nx).map(|i| i as f64 * h).collect(),
            ys: (0..=ny).map(|j| j as f64 * h).collect(),
            active: vec![true; nx * ny],
            spacing: Some(h),
            n_per_unit,
        })
    }

    /// Number of connected components of the active cells.
    pub fn components(&self) -> usize {
        let (nx, ny) = (self.nx(), self.ny());
        let mut seen = vec![false; nx * ny];
        let mut count = 0;
        for start in 0..nx * ny {
            if !self.active[start] || seen[start] {
                continue;
            }
            count += 1;
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(c) = stack.pop() {
                let (i, j) = (c / ny, c % ny);
                for s in [Side::West, Side::East, Side::South, Side::North] {
                    if let Some((a, b)) = self.neighbour(i, j, s) {
                        let k = a * ny + b;
                        if !seen[k] {
                            seen[k] = true;
                            stack.push(k);
                        }
                    }
                }
            }
        }
        count
    }
}

fn grid_cells(v: f64, n: usize, what: &str) -> Result<usize> {
    let t = v * n as f64;
    let r = t.round();
    if (t - r).abs() > 1e-9 * t.abs().max(1.0) {
        return Err(Error::NotRepresentable {
            what: what.to_string(),
            value: v,
        });
    }
    Ok(r as usize)
}

fn pieces_for(domain: &RpDomain, m: usize) -> Result<&[Piece]> {
    if m == 0 || 2 * m > domain.n_pieces() {
        return Err(Error::OutOfRange(format!(
            "Omega_{} needs {} pieces, domain has {}",
            2 * m,
            2 * m,
            domain.n_pieces()
        )));
    }
    Ok(&domain.pieces[..2 * m])
}

fn mark_active(xs: &[f64], ys: &[f64], pieces: &[Piece]) -> Vec<bool> {
    let (nx, ny) = (xs.len() - 1, ys.len() - 1);
    let mut active = vec![false; nx * ny];
    for i in 0..nx {
        let xc = 0.5 * (xs[i] + xs[i + 1]);
        for j in 0..ny {
            let yc = 0.5 * (ys[j] + ys[j + 1]);
            active[i * ny + j] = pieces
                .iter()
                .any(|p| xc > p.x_lo && xc < p.x_hi && yc.abs() < p.half_height);
        }
    }
    active
}

/// Uniform grid of spacing `1/n_per_unit` covering `Omega_2M` exactly.
pub fn rasterize(domain: &RpDomain, m: usize, n_per_unit: usize) -> Result<GridDomain> {
    if n_per_unit == 0 {
        return Err(Error::InvalidParameter("n_per_unit must be positive".into()));
    }
    let pieces = pieces_for(domain, m)?;
    for p in pieces {
        grid_cells(p.x_lo, n_per_unit, &format!("piece {} x_lo", p.index))?;
        grid_cells(p.x_hi, n_per_unit, &format!("piece {} x_hi", p.index))?;
        grid_cells(p.half_height, n_per_unit, &format!("piece {} half height", p.index))?;
    }
    let nx = grid_cells(pieces.last().expect("non-empty").x_hi, n_per_unit, "length")?;
    let half = pieces.iter().map(|p| p.half_height).fold(0.0, f64::max);
    let nyh = grid_cells(half, n_per_unit, "half height")?;
    let h = 1.0 / n_per_unit as f64;
    let xs: Vec<f64> = (0..=nx).map(|i| i as f64 * h).collect();
    let ys: Vec<f64> = (0..=2 * nyh).map(|j| (j as f64 - nyh as f64) * h).collect();
    let active = mark_active(&xs, &ys, pieces);
    Ok(GridDomain {
        xs,
        ys,
        active,
        spacing: Some(h),
        n_per_unit,
    })
}

/// Splits each interval between consecutive `breaks` into
/// `max(1, ceil(len * base))` equal cells, then bisects `level` times.
fn graded_axis(breaks: &[f64], base: usize, level: u32) -> Vec<f64> {
    let mut out = vec![breaks[0]];
    for w in breaks.windows(2) {
        let len = w[1] - w[0];
        let cells = ((len * base as f64 - 1e-9).ceil().max(1.0) as usize) << level;
        for k in 1..=cells {
            out.push(if k == cells { w[1] } else { w[0] + len * k as f64 / cells as f64 });
        }
    }
    out
}

/// Piece-conforming graded grid for `Omega_2M`: every piece boundary and
/// every passage half-height is a grid line, intervals get about
/// `base_per_unit` cells per unit length (at least one), and each level
/// bisects every cell.
pub fn conforming_grid(domain: &RpDomain, m: usize, base_per_unit: usize, level: u32) -> Result<GridDomain> {
    if base_per_unit == 0 {
        return Err(Error::InvalidParameter("base_per_unit must be positive".into()));
    }
    let pieces = pieces_for(domain, m)?;
    let mut xb: Vec<f64> = pieces.iter().map(|p| p.x_lo).collect();
    xb.push(pieces.last().expect("non-empty").x_hi);
    let mut yb: Vec<f64> = pieces.iter().flat_map(|p| [p.half_height, -p.half_height]).collect();
    yb.sort_by(f64::total_cmp);
    yb.dedup();
    let xs = graded_axis(&xb, base_per_unit, level);
    let ys = graded_axis(&yb, base_per_unit, level);
    let active = mark_active(&xs, &ys, pieces);
    Ok(GridDomain {
        xs,
        ys,
        active,
        spacing: None,
        n_per_unit: base_per_unit << level,
    })
}

/// `V^{-1/2} A V^{-1/2}` for the cell-centred operator `A u = lambda V u`.
/// Dirichlet boundary faces use the face-placed ghost (distance half a
/// cell); Neumann boundary faces carry no flux.
pub fn assemble(grid: &GridDomain, bc: BoundaryCondition) -> SymBand {
    let (nx, ny) = (grid.nx(), grid.ny());
    let mut index = vec![usize::MAX; nx * ny];
    let mut n = 0;
    for k in 0..nx * ny {
        if grid.active[k] {
            index[k] = n;
            n += 1;
        }
    }
    let mut bw = 0;
    for i in 0..nx {
        for j in 0..ny {
            if !grid.is_active(i, j) {
                continue;
            }
            for s in [Side::East, Side::North] {
                if let Some((a, b)) = grid.neighbour(i, j, s) {
                    bw = bw.max(index[a * ny + b] - index[i * ny + j]);
                }
            }
        }
    }
    let mut mat = SymBand::zeros(n, bw);
    let vol = |i: usize, j: usize| grid.cell_area(i, j);
    let dx = |i: usize| grid.xs[i + 1] - grid.xs[i];
    let dy = |j: usize| grid.ys[j + 1] - grid.ys[j];
    for i in 0..nx {
        for j in 0..ny {
            if !grid.is_active(i, j) {
                continue;
            }
            let p = index[i * ny + j];
            let vp = vol(i, j);
            for s in [Side::West, Side::East, Side::South, Side::North] {
                let (face, half_width) = match s {
                    Side::West | Side::East => (dy(j), 0.5 * dx(i)),
                    Side::South | Side::North => (dx(i), 0.5 * dy(j)),
                };
                match grid.neighbour(i, j, s) {
                    Some((a, b)) => {
                        let q = index[a * ny + b];
                        if q < p {
                            continue;
                        }
                        let other_half = match s {
                            Side::West | Side::East => 0.5 * dx(a),
                            Side::South | Side::North => 0.5 * dy(b),
                        };
                        let k = face / (half_width + other_half);
                        let vq = vol(a, b);
                        mat.add(p, p, k / vp);
                        mat.add(q, q, k / vq);
                        mat.add(p, q, -k / (vp * vq).sqrt());
                    }
                    None => {
                        if bc == BoundaryCondition::Dirichlet {
                            mat.add(p, p, face / half_width / vp);
                        }
                    }
                }
            }
        }
    }
    mat
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FdSpectrum {
    pub bc: BoundaryCondition,
    pub eigenvalues: Vec<f64>,
    pub residuals: Vec<f64>,
    pub n_cells: usize,
    pub n_per_unit: usize,
}

/// Lowest `count` eigenvalues of the 5-point operator on `grid`.
pub fn fd_eigenvalues(grid: &GridDomain, bc: BoundaryCondition, count: usize) -> Result<FdSpectrum> {
    let n_cells = grid.n_active();
    if count > n_cells {
        return Err(Error::OutOfRange(format!("asked for {count} eigenvalues of {n_cells} cells")));
    }
    let a = assemble(grid, bc);
    let pairs = lowest_eigenpairs(&a, count, -1.0)?;
    Ok(FdSpectrum {
        bc,
        eigenvalues: pairs.values,
        residuals: pairs.residuals,
        n_cells,
        n_per_unit: grid.n_per_unit,
    })
}

/// Order-2 Richardson extrapolation over successive halvings:
/// `(value, error bar)` per index from the last three levels (the error
/// bar is the difference of the last two extrapolants).
pub fn richardson(levels: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<f64>)> {
    if levels.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "Richardson needs three refinement levels, got {}",
            levels.len()
        )));
    }
    let l = levels.len();
    let (a, b, c) = (&levels[l - 3], &levels[l - 2], &levels[l - 1]);
    let n = a.len().min(b.len()).min(c.len());
    let mut val = Vec::with_capacity(n);
    let mut err = Vec::with_capacity(n);
    for k in 0..n {
        let r1 = (4.0 * b[k] - a[k]) / 3.0;
        let r2 = (4.0 * c[k] - b[k]) / 3.0;
        val.push(r2);
        err.push((r2 - r1).abs());
    }
    Ok((val, err))
}

/// Observed convergence order `log2 |(a - b)/(b - c)|` per index.
pub fn observed_orders(levels: &[Vec<f64>]) -> Vec<f64> {
    let l = levels.len();
    if l < 3 {
        return vec![];
    }
    let (a, b, c) = (&levels[l - 3], &levels[l - 2], &levels[l - 1]);
    (0..a.len().min(b.len()).min(c.len()))
        .map(|k| ((a[k] - b[k]) / (b[k] - c[k])).abs().log2())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtrapolatedSpectrum {
    pub bc: BoundaryCondition,
    pub n_per_unit: Vec<usize>,
    pub per_level: Vec<Vec<f64>>,
    pub extrapolated: Vec<f64>,
    pub error_bar: Vec<f64>,
}

impl ExtrapolatedSpectrum {
    pub fn count_below(&self, lambda: f64) -> usize {
        self.extrapolated.iter().filter(|&&v| v < lambda).count()
    }
}

/// FD spectra on conforming grids `base << level` for each level, with the
/// Richardson estimate.
pub fn extrapolated_spectrum(
    domain: &RpDomain,
    m: usize,
    bc: BoundaryCondition,
    count: usize,
    base_per_unit: usize,
    levels: u32,
) -> Result<ExtrapolatedSpectrum> {
    let mut per_level = Vec::new();
    let mut n_per_unit = Vec::new();
    for level in 0..levels {
        let grid = conforming_grid(domain, m, base_per_unit, level)?;
        per_level.push(fd_eigenvalues(&grid, bc, count)?.eigenvalues);
        n_per_unit.push(grid.n_per_unit);
    }
    let (extrapolated, error_bar) = richardson(&per_level)?;
    Ok(ExtrapolatedSpectrum {
        bc,
        n_per_unit,
        per_level,
        extrapolated,
        error_bar,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichRow {
    pub lambda: f64,
    pub bc: BoundaryCondition,
    pub bracket_lower: u64,
    pub fd_count: usize,
    pub bracket_upper: u64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilonovRow {
    pub n: usize,
    pub neumann_next: f64,
    pub dirichlet: f64,
    pub error_bar: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub m: usize,
    pub neumann: ExtrapolatedSpectrum,
    pub dirichlet: ExtrapolatedSpectrum,
    pub rows: Vec<SandwichRow>,
    /// `N_D(lambda) <= N_N(lambda)` at every tested lambda.
    pub monotone: bool,
    pub filonov: Vec<FilonovRow>,
    /// Lambdas skipped as unresolvable, with the reason.
    pub skipped: Vec<(f64, String)>,
}

impl SandwichReport {
    pub fn all_hold(&self) -> bool {
        self.monotone && self.rows.iter().all(|r| r.holds) && self.filonov.iter().all(|r| r.holds)
    }
}

/// Safety factor on the Richardson error bar when deciding whether a
/// lambda is too close to an eigenvalue to count unambiguously.
const SEPARATION: f64 = 3.0;

/// Sandwich and interlacing checks on `Omega_2M` against the extrapolated
/// FD spectra. `lambda * h^2 <= 0.1` is required on the finest grid.
pub fn sandwich_check(
    domain: &RpDomain,
    m: usize,
    lambdas: &[f64],
    count: usize,
    base_per_unit: usize,
    levels: u32,
) -> Result<SandwichReport> {
    let neumann = extrapolated_spectrum(domain, m, BoundaryCondition::Neumann, count, base_per_unit, levels)?;
    let dirichlet = extrapolated_spectrum(domain, m, BoundaryCondition::Dirichlet, count, base_per_unit, levels)?;
    let h = conforming_grid(domain, m, base_per_unit, levels - 1)?.max_cell();
    sandwich_with_spectra(domain, m, neumann, dirichlet, lambdas, h)
}

/// [`sandwich_check`] on precomputed spectra; `finest_cell` is the largest
/// cell side of the finest grid.
pub fn sandwich_with_spectra(
    domain: &RpDomain,
    m: usize,
    neumann: ExtrapolatedSpectrum,
    dirichlet: ExtrapolatedSpectrum,
    lambdas: &[f64],
    finest_cell: f64,
) -> Result<SandwichReport> {
    let params = domain
        .geometric_params()
        .ok_or_else(|| Error::Unsupported("bracketing needs the geometric family".into()))?;
    let count = neumann.extrapolated.len().min(dirichlet.extrapolated.len());
    let h = finest_cell;
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    let mut monotone = true;
    for &lambda in lambdas {
        if lambda * h * h > 0.1 {
            skipped.push((lambda, format!("lambda h^2 = {:.3} > 0.1", lambda * h * h)));
            continue;
        }
        let mut counts = Vec::new();
        for spec in [&neumann, &dirichlet] {
            let (v, e) = (spec.extrapolated[count - 1], spec.error_bar[count - 1]);
            if lambda >= v - SEPARATION * e {
                skipped.push((lambda, format!("above the {count} computed {} eigenvalues", spec.bc.as_str())));
                break;
            }
            if spec.extrapolated.iter().zip(&spec.error_bar).any(|(&v, &e)| near(v, e, lambda)) {
                skipped.push((lambda, format!("within the error bar of a {} eigenvalue", spec.bc.as_str())));
                break;
            }
            counts.push(spec.count_below(lambda));
        }
        if counts.len() < 2 {
            continue;
        }
        monotone &= counts[1] <= counts[0];
        for (spec, &fd_count) in [&neumann, &dirichlet].into_iter().zip(&counts) {
            let b = assemble_bounds(params, spec.bc, m, lambda, Scope::Omega2M)?;
            rows.push(SandwichRow {
                lambda,
                bc: spec.bc,
                bracket_lower: b.lower_count,
                fd_count,
                bracket_upper: b.upper_count,
                holds: b.lower_count as usize <= fd_count && fd_count <= b.upper_count as usize,
            });
        }
    }
    let filonov = (1..count)
        .map(|n| {
            let nn = neumann.extrapolated[n];
            let dd = dirichlet.extrapolated[n - 1];
            let err = neumann.error_bar[n] + dirichlet.error_bar[n - 1];
            FilonovRow {
                n,
                neumann_next: nn,
                dirichlet: dd,
                error_bar: err,
                holds: nn <= dd + err,
            }
        })
        .collect();
    Ok(SandwichReport {
        m,
        neumann,
        dirichlet,
        rows,
        monotone,
        filonov,
        skipped,
    })
}

fn window(v: f64, e: f64) -> f64 {
    SEPARATION * e + 1e-9 * v.abs()
}

fn near(v: f64, e: f64, lambda: f64) -> bool {
    (v - lambda).abs() <= window(v, e)
}

/// `count` lambdas in `(0, top)`, where `top` is the lower edge of the
/// window around the last computed eigenvalue of either spectrum, placed
/// evenly (by length) in the gaps left after removing a window of
/// `3 x error bar` around every extrapolated eigenvalue.
pub fn generic_lambdas(neumann: &ExtrapolatedSpectrum, dirichlet: &ExtrapolatedSpectrum, count: usize) -> Vec<f64> {
    let mut windows: Vec<(f64, f64)> = neumann
        .extrapolated
        .iter()
        .zip(&neumann.error_bar)
        .chain(dirichlet.extrapolated.iter().zip(&dirichlet.error_bar))
        .map(|(&v, &e)| (v - window(v, e), v + window(v, e)))
        .collect();
    windows.sort_by(|a, b| a.0.total_cmp(&b.0));
    let last = |s: &ExtrapolatedSpectrum| {
        let k = s.extrapolated.len() - 1;
        s.extrapolated[k] - window(s.extrapolated[k], s.error_bar[k])
    };
    let top = last(neumann).min(last(dirichlet));
    // free gaps in (0, top)
    let mut gaps = Vec::new();
    let mut lo = 0.0f64;
    for &(a, b) in &windows {
        if a > lo {
            gaps.push((lo, a.min(top)));
        }
        lo = lo.max(b);
        if lo >= top {
            break;
        }
    }
    if lo < top {
        gaps.push((lo, top));
    }
    gaps.retain(|g| g.1 > g.0);
    let total: f64 = gaps.iter().map(|g| g.1 - g.0).sum();
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        // irrational offset keeps the points off any lattice
        let mut t = total * (i as f64 + 0.5 / std::f64::consts::SQRT_2) / count as f64;
        for &(a, b) in &gaps {
            if t <= b - a {
                out.push(a + t);
                break;
            }
            t -= b - a;
        }
    }
    out
}

/// Row of the oracle CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FdCsvRow {
    pub bc: String,
    pub index: usize,
    pub eigenvalue: f64,
    pub grid_n: usize,
    pub extrapolated: bool,
}

pub fn csv_rows(spec: &ExtrapolatedSpectrum) -> Vec<FdCsvRow> {
    let mut rows = Vec::new();
    for (level, values) in spec.per_level.iter().enumerate() {
        for (k, &v) in values.iter().enumerate() {
            rows.push(FdCsvRow {
                bc: spec.bc.as_str().to_string(),
                index: k + 1,
                eigenvalue: v,
                grid_n: spec.n_per_unit[level],
                extrapolated: false,
            });
        }
    }
    for (k, &v) in spec.extrapolated.iter().enumerate() {
        rows.push(FdCsvRow {
            bc: spec.bc.as_str().to_string(),
            index: k + 1,
            eigenvalue: v,
            grid_n: *spec.n_per_unit.last().unwrap_or(&0),
            extrapolated: true,
        });
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn dyadic() -> RpDomain {
        RpDomain::build_geometric(0.5, 2.0, 0.25, 4).unwrap()
    }

    #[test]
    fn rasterize_counts_cells_exactly() {
        let d = dyadic();
        let g = rasterize(&d, 1, 128).unwrap();
        assert_eq!(g.n_active(), 4096 + 64);
        let g2 = rasterize(&d, 1, 256).unwrap();
        assert_eq!(g2.n_active(), 4 * g.n_active());
        assert!((g.active_area() - d.area_upto(2).unwrap()).abs() < 1e-15);
        match rasterize(&d, 1, 64) {
            Err(Error::NotRepresentable { what, value }) => {
                assert!(what.contains("piece 2"), "{what}");
                assert_eq!(value, 1.0 / 128.0);
            }
            other => panic!("{other:?}"),
        }
        let irr = RpDomain::build_geometric(1.0 / 3.0, 2.0, 0.25, 4).unwrap();
        assert!(matches!(rasterize(&irr, 1, 1 << 12), Err(Error::NotRepresentable { .. })));
        assert_eq!(g.components(), 1);
        assert_eq!(g.face_kind(0, g.ny() / 2, Side::West), FaceKind::Boundary);
        assert_eq!(g.face_kind(0, g.ny() / 2, Side::East), FaceKind::Interior);
    }

    #[test]
    fn conforming_grid_is_exact() {
        let d = dyadic();
        for level in 0..3 {
            let g = conforming_grid(&d, 2, 64, level).unwrap();
            assert!((g.active_area() - d.area_upto(4).unwrap()).abs() < 1e-14);
            assert_eq!(g.components(), 1);
            for p in &d.pieces {
                assert!(g.xs.iter().any(|&x| x == p.x_lo));
                assert!(g.ys.iter().any(|&y| y == p.half_height));
            }
        }
    }

    fn square_levels(bc: BoundaryCondition, count: usize) -> Vec<Vec<f64>> {
        [8, 16, 32]
            .iter()
            .map(|&n| fd_eigenvalues(&GridDomain::rectangle(1.0, 1.0, n).unwrap(), bc, count).unwrap().eigenvalues)
            .collect()
    }

    #[test]
    fn unit_square_neumann_converges_at_order_two() {
        let levels = square_levels(BoundaryCondition::Neumann, 4);
        for l in &levels {
            assert!(l[0].abs() < 1e-10);
        }
        let orders = observed_orders(&levels);
        for k in 1..3 {
            assert!(orders[k] > 1.8 && orders[k] < 2.2, "{orders:?}");
        }
        let (v, _) = richardson(&levels).unwrap();
        assert!((v[1] - PI * PI).abs() < 1e-4);
    }

    #[test]
    fn unit_square_dirichlet_limit() {
        let levels = square_levels(BoundaryCondition::Dirichlet, 3);
        let orders = observed_orders(&levels);
        assert!(orders[0] > 1.8 && orders[0] < 2.2, "{orders:?}");
        let (v, _) = richardson(&levels).unwrap();
        assert!((v[0] - 2.0 * PI * PI).abs() < 1e-3);
        // Filonov on the square: lambda^N_2 = pi^2 <= lambda^D_1 = 2 pi^2
        let n = square_levels(BoundaryCondition::Neumann, 2);
        assert!(richardson(&n).unwrap().0[1] <= v[0]);
    }

    #[test]
    fn dense_and_iterative_paths_agree() {
        // 900 cells: above the dense limit, so this runs block Lanczos
        let g = GridDomain::rectangle(1.0, 1.0, 30).unwrap();
        let s = fd_eigenvalues(&g, BoundaryCondition::Neumann, 6).unwrap();
        let exact = |m: usize, n: usize| {
            let h = 1.0 / 30.0;
            let e = |k: usize| 4.0 / (h * h) * (PI * k as f64 * h / 2.0).sin().powi(2);
            e(m) + e(n)
        };
        let mut want = vec![exact(0, 0), exact(1, 0), exact(0, 1), exact(1, 1), exact(2, 0), exact(0, 2)];
        want.sort_by(f64::total_cmp);
        for (a, b) in s.eigenvalues.iter().zip(&want) {
            assert!((a - b).abs() < 1e-9 * b.max(1.0), "{a} vs {b}");
        }
        assert!(s.eigenvalues[0].abs() < 1e-10);
    }

    #[test]
    fn richardson_needs_three_levels() {
        assert!(richardson(&[vec![1.0], vec![1.0]]).is_err());
    }
}
