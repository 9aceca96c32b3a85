//! Dirichlet sine eigenbasis of the Laplacian on the box `(0, π)^dim`.
//!
//! All fields are represented by their coefficients against the orthonormal
//! eigenfunctions `e_k(x) = Π_i sqrt(2/π) sin(k_i x_i)` with eigenvalues
//! `λ_k = Σ_i k_i²`. Grid synthesis/analysis uses the interior uniform nodes
//! `x_j = jπ/(M+1)` with quadrature weight `π/(M+1)` per axis, which makes
//! the two transforms an exact orthogonal pair for `M ≥ N`.
//!
//! The default collocation grid uses `M = 3N` points per axis: products of
//! five band-limited sine series carry frequencies up to `5N`, and on the
//! odd-extended grid those alias to `2(M+1) − m > N` only when `M ≥ 3N`, so
//! the analysis of a quintic term is the exact band projection.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("dim must be 1, 2 or 3 (got {0})")]
    InvalidDim(usize),
    #[error("modes_per_axis must be >= 1 (got {0})")]
    InvalidModes(usize),
    #[error("padding_factor {0} < 3 aliases quintic products; pass allow_aliasing to override")]
    PaddingTooSmall(f64),
    #[error("coefficient/grid length mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("non-finite entry at position {0}")]
    NonFinite(usize),
    #[error("projector band {k} out of range 1..={n}")]
    ProjectorOutOfRange { k: usize, n: usize },
}

/// Modal coefficients of a real field against the sine eigenbasis.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub coeffs: Vec<f64>,
}

impl Field {
    pub fn zeros(domain: &SpectralDomain) -> Self {
        Field {
            coeffs: vec![0.0; domain.modes_total()],
        }
    }

    /// The eigenfunction with the given 1-based axis indices.
    pub fn basis(domain: &SpectralDomain, index: &[usize]) -> Self {
        let mut f = Field::zeros(domain);
        let flat = domain
            .flat_index(index)
            .expect("basis index outside the resolved band");
        f.coeffs[flat] = 1.0;
        f
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    pub fn scale(&mut self, s: f64) {
        for c in &mut self.coeffs {
            *c *= s;
        }
    }

    pub fn scaled(&self, s: f64) -> Field {
        let mut out = self.clone();
        out.scale(s);
        out
    }

    /// `self += s * other`
    pub fn axpy(&mut self, s: f64, other: &Field) {
        debug_assert_eq!(self.coeffs.len(), other.coeffs.len());
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += s * b;
        }
    }

    pub fn add(&self, other: &Field) -> Field {
        let mut out = self.clone();
        out.axpy(1.0, other);
        out
    }

    pub fn sub(&self, other: &Field) -> Field {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    /// Modal (L²) inner product.
    pub fn dot(&self, other: &Field) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn norm_l2(&self) -> f64 {
        self.dot(self).sqrt()
    }
}

/// The pair `(u, ∂_t u)` as modal coefficient vectors at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalState {
    pub u: Field,
    pub v: Field,
    pub t: f64,
}

impl ModalState {
    pub fn new(u: Field, v: Field, t: f64) -> Self {
        ModalState { u, v, t }
    }

    pub fn zeros(domain: &SpectralDomain) -> Self {
        ModalState {
            u: Field::zeros(domain),
            v: Field::zeros(domain),
            t: 0.0,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.is_finite() && self.t.is_finite()
    }
}

/// Discrete substrate: eigenbasis, spectrum, collocation grid and transforms.
#[derive(Debug, Clone)]
pub struct SpectralDomain {
    pub dim: usize,
    pub modes_per_axis: usize,
    pub grid_per_axis: usize,
    pub padding_factor: f64,
    pub allow_aliasing: bool,
    /// 1-based multi-indices, row-major over axes.
    pub index_set: Vec<[usize; 3]>,
    /// `λ_k = Σ_i k_i²` in index_set order.
    pub eigenvalues: Vec<f64>,
    /// Per-axis synthesis matrix, `M x N`: `S[j,k] = sqrt(2/π) sin((j+1)(k+1)π/(M+1))`.
    synthesis: Vec<f64>,
    /// Per-axis analysis matrix, `N x M`: the quadrature-weighted transpose of `synthesis`.
    analysis: Vec<f64>,
}

/// Builds the discrete domain. `padding_factor < 3` is rejected because a
/// quintic nonlinearity would alias back into the resolved band.
pub fn build_domain(dim: usize, n: usize, padding_factor: f64) -> Result<SpectralDomain, SpectralError> {
    build_domain_with(dim, n, padding_factor, false)
}

/// As [`build_domain`] but lets the caller opt into an aliased grid.
pub fn build_domain_with(
    dim: usize,
    n: usize,
    padding_factor: f64,
    allow_aliasing: bool,
) -> Result<SpectralDomain, SpectralError> {
    if !(1..=3).contains(&dim) {
        return Err(SpectralError::InvalidDim(dim));
    }
    if n < 1 {
        return Err(SpectralError::InvalidModes(n));
    }
    if padding_factor < 3.0 && !allow_aliasing {
        return Err(SpectralError::PaddingTooSmall(padding_factor));
    }
    let m = ((padding_factor * n as f64).ceil() as usize).max(n);

    let mut index_set = Vec::with_capacity(n.pow(dim as u32));
    let mut eigenvalues = Vec::with_capacity(index_set.capacity());
    let mut idx = [0usize; 3];
    fill_indices(dim, n, 0, &mut idx, &mut index_set, &mut eigenvalues);

    let w = std::f64::consts::PI / (m as f64 + 1.0);
    let amp = (2.0 / std::f64::consts::PI).sqrt();
    let mut synthesis = vec![0.0; m * n];
    let mut analysis = vec![0.0; n * m];
    for j in 0..m {
        for k in 0..n {
            let s = amp * (((j + 1) * (k + 1)) as f64 * w).sin();
            synthesis[j * n + k] = s;
            analysis[k * m + j] = w * s;
        }
    }

    Ok(SpectralDomain {
        dim,
        modes_per_axis: n,
        grid_per_axis: m,
        padding_factor: m as f64 / n as f64,
        allow_aliasing,
        index_set,
        eigenvalues,
        synthesis,
        analysis,
    })
}

fn fill_indices(
    dim: usize,
    n: usize,
    axis: usize,
    idx: &mut [usize; 3],
    out: &mut Vec<[usize; 3]>,
    lam: &mut Vec<f64>,
) {
    if axis == dim {
        out.push(*idx);
        lam.push(idx[..dim].iter().map(|&k| (k * k) as f64).sum());
        return;
    }
    for k in 1..=n {
        idx[axis] = k;
        fill_indices(dim, n, axis + 1, idx, out, lam);
    }
}

impl SpectralDomain {
    pub fn modes_total(&self) -> usize {
        self.modes_per_axis.pow(self.dim as u32)
    }

    pub fn grid_total(&self) -> usize {
        self.grid_per_axis.pow(self.dim as u32)
    }

    /// Smallest Laplacian eigenvalue; equals `dim` on the unit box.
    pub fn lambda1(&self) -> f64 {
        self.dim as f64
    }

    /// Quadrature weight of one grid cell, `(π/(M+1))^dim`.
    pub fn quad_weight(&self) -> f64 {
        (std::f64::consts::PI / (self.grid_per_axis as f64 + 1.0)).powi(self.dim as i32)
    }

    /// Flat position of a 1-based multi-index, if inside the band.
    pub fn flat_index(&self, index: &[usize]) -> Option<usize> {
        if index.len() != self.dim {
            return None;
        }
        let n = self.modes_per_axis;
        let mut flat = 0usize;
        for &k in index {
            if k < 1 || k > n {
                return None;
            }
            flat = flat * n + (k - 1);
        }
        Some(flat)
    }

    fn check_field(&self, f: &Field) -> Result<(), SpectralError> {
        if f.coeffs.len() != self.modes_total() {
            return Err(SpectralError::SizeMismatch {
                expected: self.modes_total(),
                got: f.coeffs.len(),
            });
        }
        Ok(())
    }

    /// Pointwise values of `Σ c_k e_k` at the interior collocation nodes.
    pub fn to_grid(&self, f: &Field) -> Result<Vec<f64>, SpectralError> {
        self.check_field(f)?;
        let mut out = vec![0.0; self.grid_total()];
        self.to_grid_into(f, &mut out);
        Ok(out)
    }

    pub(crate) fn to_grid_into(&self, f: &Field, out: &mut [f64]) {
        let n = self.modes_per_axis;
        let m = self.grid_per_axis;
        apply_tensor(&self.synthesis, m, n, self.dim, &f.coeffs, out);
    }

    /// Modal coefficients of the L²-projection onto the resolved band.
    ///
    /// Acts as the Galerkin projector on band-limited grid data and truncates
    /// higher content.
    pub fn from_grid(&self, grid: &[f64]) -> Result<Field, SpectralError> {
        if grid.len() != self.grid_total() {
            return Err(SpectralError::SizeMismatch {
                expected: self.grid_total(),
                got: grid.len(),
            });
        }
        if let Some(pos) = grid.iter().position(|g| !g.is_finite()) {
            return Err(SpectralError::NonFinite(pos));
        }
        let mut out = vec![0.0; self.modes_total()];
        self.from_grid_into(grid, &mut out);
        Ok(Field { coeffs: out })
    }

    pub(crate) fn from_grid_into(&self, grid: &[f64], out: &mut [f64]) {
        let n = self.modes_per_axis;
        let m = self.grid_per_axis;
        apply_tensor(&self.analysis, n, m, self.dim, grid, out);
    }

    /// Tensor truncation: zeroes every coefficient with an axis index above `k`.
    pub fn project(&self, f: &Field, k: usize) -> Result<Field, SpectralError> {
        self.check_field(f)?;
        if k < 1 || k > self.modes_per_axis {
            return Err(SpectralError::ProjectorOutOfRange {
                k,
                n: self.modes_per_axis,
            });
        }
        let mut out = f.clone();
        for (c, idx) in out.coeffs.iter_mut().zip(&self.index_set) {
            if idx[..self.dim].iter().any(|&ki| ki > k) {
                *c = 0.0;
            }
        }
        Ok(out)
    }

    /// Sobolev-scale norm `(Σ λ_k^s c_k²)^{1/2}`.
    pub fn hs_norm(&self, f: &Field, s: f64) -> f64 {
        debug_assert_eq!(f.coeffs.len(), self.modes_total());
        let mut acc = 0.0;
        for (c, &lam) in f.coeffs.iter().zip(&self.eigenvalues) {
            acc += lam.powf(s) * c * c;
        }
        acc.sqrt()
    }

    /// Phase-space norm `(‖u‖_{H¹}² + ‖v‖²)^{1/2}`.
    pub fn energy_norm(&self, state: &ModalState) -> f64 {
        self.energy_norm_sq(state).sqrt()
    }

    pub fn energy_norm_sq(&self, state: &ModalState) -> f64 {
        let mut acc = 0.0;
        for ((cu, cv), &lam) in state
            .u
            .coeffs
            .iter()
            .zip(&state.v.coeffs)
            .zip(&self.eigenvalues)
        {
            acc += lam * cu * cu + cv * cv;
        }
        acc
    }

    /// Strong-space norm `(‖u‖_{H²}² + ‖v‖_{H¹}²)^{1/2}`.
    pub fn e1_norm(&self, state: &ModalState) -> f64 {
        let mut acc = 0.0;
        for ((cu, cv), &lam) in state
            .u
            .coeffs
            .iter()
            .zip(&state.v.coeffs)
            .zip(&self.eigenvalues)
        {
            acc += lam * lam * cu * cu + lam * cv * cv;
        }
        acc.sqrt()
    }

    /// ℰ-distance between two states.
    pub fn state_distance(&self, a: &ModalState, b: &ModalState) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.modes_total() {
            let du = a.u.coeffs[i] - b.u.coeffs[i];
            let dv = a.v.coeffs[i] - b.v.coeffs[i];
            acc += self.eigenvalues[i] * du * du + dv * dv;
        }
        acc.sqrt()
    }

    /// Applies `Λ^power` diagonally.
    pub fn apply_eigenvalues(&self, f: &Field, power: f64) -> Field {
        let coeffs = f
            .coeffs
            .iter()
            .zip(&self.eigenvalues)
            .map(|(c, &lam)| c * lam.powf(power))
            .collect();
        Field { coeffs }
    }

    /// Embeds a field from a coarser domain (same dim) by zero-padding.
    pub fn embed_from(&self, coarse: &SpectralDomain, f: &Field) -> Result<Field, SpectralError> {
        coarse.check_field(f)?;
        if coarse.dim != self.dim || coarse.modes_per_axis > self.modes_per_axis {
            return Err(SpectralError::SizeMismatch {
                expected: self.modes_total(),
                got: f.coeffs.len(),
            });
        }
        let mut out = Field::zeros(self);
        for (c, idx) in f.coeffs.iter().zip(&coarse.index_set) {
            let flat = self
                .flat_index(&idx[..self.dim])
                .expect("coarse index fits in fine band");
            out.coeffs[flat] = *c;
        }
        Ok(out)
    }
}

/// Applies the per-axis matrix `mat` (`rows x cols`) along every axis of a
/// row-major `cols^dim` tensor, producing `rows^dim`.
fn apply_tensor(mat: &[f64], rows: usize, cols: usize, dim: usize, input: &[f64], out: &mut [f64]) {
    match dim {
        1 => {
            matvec(mat, rows, cols, input, out);
        }
        _ => {
            let mut cur = input.to_vec();
            let mut shape = [cols; 3];
            for axis in 0..dim {
                let pre: usize = shape[..axis].iter().product();
                let post: usize = shape[axis + 1..dim].iter().product();
                let mut next = vec![0.0; pre * rows * post];
                for p in 0..pre {
                    for r in 0..rows {
                        let row = &mat[r * cols..(r + 1) * cols];
                        let dst = (p * rows + r) * post;
                        for (c, &mrc) in row.iter().enumerate() {
                            let src = (p * cols + c) * post;
                            if mrc != 0.0 {
                                for q in 0..post {
                                    next[dst + q] += mrc * cur[src + q];
                                }
                            }
                        }
                    }
                }
                shape[axis] = rows;
                cur = next;
            }
            out.copy_from_slice(&cur);
        }
    }
}

fn matvec(mat: &[f64], rows: usize, cols: usize, x: &[f64], out: &mut [f64]) {
    for r in 0..rows {
        let row = &mat[r * cols..(r + 1) * cols];
        let mut acc = 0.0;
        for (m, v) in row.iter().zip(x) {
            acc += m * v;
        }
        out[r] = acc;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn eigenvalues_1d() {
        let d = build_domain(1, 4, 3.0).unwrap();
        assert_eq!(d.eigenvalues, vec![1.0, 4.0, 9.0, 16.0]);
        assert_eq!(d.lambda1(), 1.0);
    }

    #[test]
    fn eigenvalues_2d() {
        let d = build_domain(2, 2, 3.0).unwrap();
        let pairs: Vec<(Vec<usize>, f64)> = d
            .index_set
            .iter()
            .zip(&d.eigenvalues)
            .map(|(i, &l)| (i[..2].to_vec(), l))
            .collect();
        assert_eq!(
            pairs,
            vec![
                (vec![1, 1], 2.0),
                (vec![1, 2], 5.0),
                (vec![2, 1], 5.0),
                (vec![2, 2], 8.0),
            ]
        );
    }

    #[test]
    fn eigenvalues_3d_single_mode() {
        let d = build_domain(3, 1, 3.0).unwrap();
        assert_eq!(d.eigenvalues, vec![3.0]);
        assert_eq!(d.lambda1(), 3.0);
    }

    #[test]
    fn padding_guard() {
        assert!(matches!(
            build_domain(1, 8, 2.0),
            Err(SpectralError::PaddingTooSmall(_))
        ));
        let d = build_domain_with(1, 8, 2.0, true).unwrap();
        assert!(d.allow_aliasing);
    }

    #[test]
    fn single_mode_synthesis() {
        let d = build_domain(1, 4, 3.0).unwrap();
        let f = Field::basis(&d, &[1]);
        let grid = d.to_grid(&f).unwrap();
        let amp = (2.0 / std::f64::consts::PI).sqrt();
        let w = std::f64::consts::PI / (d.grid_per_axis as f64 + 1.0);
        for (j, g) in grid.iter().enumerate() {
            let x = (j + 1) as f64 * w;
            assert!(close(*g, amp * x.sin(), 1e-14));
        }
    }

    #[test]
    fn zero_round_trips() {
        let d = build_domain(1, 4, 3.0).unwrap();
        let f = Field::zeros(&d);
        let grid = d.to_grid(&f).unwrap();
        assert!(grid.iter().all(|&g| g == 0.0));
        let back = d.from_grid(&grid).unwrap();
        assert!(back.coeffs.iter().all(|&c| c == 0.0));
    }

    #[test]
    fn above_band_content_projects_to_zero() {
        // sin((N+1)x) is orthogonal to the whole band; its analytic projection
        // onto span{e_1..e_N} vanishes identically.
        let n = 5;
        let d = build_domain(1, n, 3.0).unwrap();
        let w = std::f64::consts::PI / (d.grid_per_axis as f64 + 1.0);
        let grid: Vec<f64> = (0..d.grid_per_axis)
            .map(|j| (((j + 1) as f64) * w * (n as f64 + 1.0)).sin())
            .collect();
        let f = d.from_grid(&grid).unwrap();
        for c in &f.coeffs {
            assert!(c.abs() < 1e-12);
        }
    }

    #[test]
    fn projector_examples() {
        let d = build_domain(1, 4, 3.0).unwrap();
        let mut f = Field::basis(&d, &[1]);
        f.axpy(1.0, &Field::basis(&d, &[3]));
        let p = d.project(&f, 2).unwrap();
        assert_eq!(p.coeffs, vec![1.0, 0.0, 0.0, 0.0]);
        // idempotence and identity at k = N
        let p2 = d.project(&p, 2).unwrap();
        assert_eq!(p.coeffs, p2.coeffs);
        let full = d.project(&f, 4).unwrap();
        assert_eq!(full.coeffs, f.coeffs);
        assert!(d.project(&f, 5).is_err());
    }

    #[test]
    fn hs_norm_examples() {
        let d = build_domain(1, 4, 3.0).unwrap();
        let e1 = Field::basis(&d, &[1]);
        let e2 = Field::basis(&d, &[2]);
        assert!(close(d.hs_norm(&e1, 1.0), 1.0, 1e-15));
        assert!(close(d.hs_norm(&e2, -1.0), 0.5, 1e-15));
        let mut f = e1.clone();
        f.axpy(1.0, &e2);
        assert!(close(d.hs_norm(&f, 2.0), 17f64.sqrt(), 1e-14));
    }

    #[test]
    fn energy_norm_examples() {
        let d = build_domain(1, 4, 3.0).unwrap();
        let e1 = Field::basis(&d, &[1]);
        let e2 = Field::basis(&d, &[2]);
        let z = Field::zeros(&d);
        assert!(close(
            d.energy_norm(&ModalState::new(e1.clone(), z.clone(), 0.0)),
            1.0,
            1e-15
        ));
        assert!(close(
            d.energy_norm(&ModalState::new(z.clone(), e1.clone(), 0.0)),
            1.0,
            1e-15
        ));
        assert!(close(
            d.energy_norm(&ModalState::new(e2, e1, 0.0)),
            5f64.sqrt(),
            1e-15
        ));
    }

    #[test]
    fn e1_norm_examples() {
        let d = build_domain(1, 4, 3.0).unwrap();
        let e1 = Field::basis(&d, &[1]);
        let e2 = Field::basis(&d, &[2]);
        let z = Field::zeros(&d);
        assert!(close(d.e1_norm(&ModalState::new(e1, z.clone(), 0.0)), 1.0, 1e-15));
        assert!(close(
            d.e1_norm(&ModalState::new(e2.clone(), z.clone(), 0.0)),
            4.0,
            1e-15
        ));
        assert!(close(d.e1_norm(&ModalState::new(z, e2, 0.0)), 2.0, 1e-15));
    }

    #[test]
    fn poincare_is_exact() {
        let d = build_domain(2, 4, 3.0).unwrap();
        let mut f = Field::zeros(&d);
        for (i, c) in f.coeffs.iter_mut().enumerate() {
            *c = ((i * 7 + 3) % 11) as f64 / 11.0 - 0.4;
        }
        let lhs = d.hs_norm(&f, 0.0);
        let rhs = d.hs_norm(&f, 1.0) / d.lambda1().sqrt();
        assert!(lhs <= rhs * (1.0 + 1e-15));
    }

    #[test]
    fn embed_preserves_coefficients() {
        let coarse = build_domain(2, 2, 3.0).unwrap();
        let fine = build_domain(2, 4, 3.0).unwrap();
        let mut f = Field::zeros(&coarse);
        f.coeffs = vec![1.0, 2.0, 3.0, 4.0];
        let g = fine.embed_from(&coarse, &f).unwrap();
        assert_eq!(g.coeffs[fine.flat_index(&[1, 1]).unwrap()], 1.0);
        assert_eq!(g.coeffs[fine.flat_index(&[1, 2]).unwrap()], 2.0);
        assert_eq!(g.coeffs[fine.flat_index(&[2, 1]).unwrap()], 3.0);
        assert_eq!(g.coeffs[fine.flat_index(&[2, 2]).unwrap()], 4.0);
        assert!(close(coarse.hs_norm(&f, 1.0), fine.hs_norm(&g, 1.0), 1e-14));
    }
}
