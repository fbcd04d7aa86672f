//! Finite-window model of the Sato Grassmannian GR_n.
//!
//! The ambient space C((z^-1))^n is cut to the window z^lo..z^hi; a
//! d-lattice is presented by basis columns in window coordinates, with the
//! full tail below z^lo implicit (it always belongs to the subspace).
//! Under z <-> d, the t = 0 fiber of W.(D^n/D^n t) gives the lattice of a
//! wave operator; the big cell is where the projection onto the polynomial
//! rows is bijective, and there the wave operator is recovered by flag
//! triangulation.

use crate::error::SatoError;
use crate::kp::WaveOperator;
use crate::matrix::Matrix;
use crate::microdiff::TruncationPolicy;
use crate::scalar::{Backend, Scalar};
use crate::series::TruncatedSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub lo: i32,
    pub hi: i32,
}

impl Window {
    pub fn new(lo: i32, hi: i32) -> Self {
        assert!(lo <= 0 && 0 <= hi, "window must contain degree 0");
        Window { lo, hi }
    }

    /// Ambient dimension for n components.
    pub fn dim(&self, n: usize) -> usize {
        (self.hi - self.lo + 1) as usize * n
    }

    /// Row index of z^j e_a.
    pub fn row(&self, j: i32, a: usize, n: usize) -> usize {
        debug_assert!(self.lo <= j && j <= self.hi);
        (j - self.lo) as usize * n + a
    }

    /// Inverse of `row`.
    pub fn coords(&self, row: usize, n: usize) -> (i32, usize) {
        (self.lo + (row / n) as i32, row % n)
    }
}

/// A d-lattice presented by explicit generators; everything below z^lo is
/// implicitly inside the subspace.
#[derive(Debug, Clone)]
pub struct DLatticeBasis {
    pub window: Window,
    pub n: usize,
    pub backend: Backend,
    /// Generator columns, each of length window.dim(n).
    pub cols: Vec<Vec<Scalar>>,
}

fn is_pivotable(x: &Scalar) -> bool {
    match x.backend() {
        Backend::Exact => !x.is_zero(),
        Backend::Float => x.abs() > 1e-12,
    }
}

impl DLatticeBasis {
    pub fn new(
        window: Window,
        n: usize,
        backend: Backend,
        cols: Vec<Vec<Scalar>>,
    ) -> Result<Self, SatoError> {
        let dim = window.dim(n);
        for c in &cols {
            if c.len() != dim {
                return Err(SatoError::Core(crate::error::CoreError::DimensionMismatch {
                    expected: dim,
                    got: c.len(),
                }));
            }
        }
        Ok(DLatticeBasis {
            window,
            n,
            backend,
            cols,
        })
    }

    /// The standard lattice spanned by {z^j e_a : 0 <= j <= hi}.
    pub fn standard(window: Window, n: usize, backend: Backend) -> Self {
        let dim = window.dim(n);
        let mut cols = Vec::new();
        for j in 0..=window.hi {
            for a in 0..n {
                let mut c = vec![Scalar::zero(backend); dim];
                c[window.row(j, a, n)] = Scalar::one(backend);
                cols.push(c);
            }
        }
        DLatticeBasis {
            window,
            n,
            backend,
            cols,
        }
    }

    /// Pivot row order: z-degree descending, component ascending.
    fn pivot_row_order(&self) -> Vec<usize> {
        let mut rows = Vec::with_capacity(self.window.dim(self.n));
        for j in (self.window.lo..=self.window.hi).rev() {
            for a in 0..self.n {
                rows.push(self.window.row(j, a, self.n));
            }
        }
        rows
    }

    /// Column-echelon reduction against the standard flag. Returns reduced
    /// columns and, per pivot row, the column index holding it.
    fn echelonize(&self) -> (Vec<Vec<Scalar>>, Vec<Option<usize>>) {
        let dim = self.window.dim(self.n);
        let mut cols = self.cols.clone();
        let mut pivot_of_row: Vec<Option<usize>> = vec![None; dim];
        let mut used = vec![false; cols.len()];
        for r in self.pivot_row_order() {
            // Deterministic pivot: first unused column with a usable entry
            // (exact), or the unused column with the largest entry (float).
            let mut pick: Option<usize> = None;
            match self.backend {
                Backend::Exact => {
                    for (c, col) in cols.iter().enumerate() {
                        if !used[c] && is_pivotable(&col[r]) {
                            pick = Some(c);
                            break;
                        }
                    }
                }
                Backend::Float => {
                    let mut best = 1e-12;
                    for (c, col) in cols.iter().enumerate() {
                        if !used[c] && col[r].abs() > best {
                            best = col[r].abs();
                            pick = Some(c);
                        }
                    }
                }
            }
            let Some(c) = pick else { continue };
            used[c] = true;
            pivot_of_row[r] = Some(c);
            let inv = cols[c][r].inv().expect("pivot entry is invertible");
            for x in cols[c].iter_mut() {
                *x = &*x * &inv;
            }
            let pivot_col = cols[c].clone();
            for (k, col) in cols.iter_mut().enumerate() {
                if k == c || !is_pivotable(&col[r]) {
                    continue;
                }
                let f = col[r].clone();
                for (x, p) in col.iter_mut().zip(&pivot_col) {
                    *x = &*x - &(&f * p);
                }
            }
        }
        (cols, pivot_of_row)
    }

    /// Rank of the projection onto the polynomial rows (j >= 0).
    fn polynomial_rank(&self) -> usize {
        let dim = self.window.dim(self.n);
        let poly_rows: Vec<usize> = (0..dim)
            .filter(|&r| self.window.coords(r, self.n).0 >= 0)
            .collect();
        // Gaussian elimination on the projected columns.
        let mut cols: Vec<Vec<Scalar>> = self
            .cols
            .iter()
            .map(|c| poly_rows.iter().map(|&r| c[r].clone()).collect())
            .collect();
        let mut rank = 0usize;
        for r in 0..poly_rows.len() {
            let mut pick = None;
            for (i, col) in cols.iter().enumerate().skip(rank) {
                if is_pivotable(&col[r]) {
                    pick = Some(i);
                    break;
                }
            }
            let Some(i) = pick else { continue };
            cols.swap(rank, i);
            let inv = cols[rank][r].inv().expect("pivot entry is invertible");
            for x in cols[rank].iter_mut() {
                *x = &*x * &inv;
            }
            let pc = cols[rank].clone();
            for col in cols.iter_mut().skip(rank + 1) {
                if is_pivotable(&col[r]) {
                    let f = col[r].clone();
                    for (x, p) in col.iter_mut().zip(&pc) {
                        *x = &*x - &(&f * p);
                    }
                }
            }
            rank += 1;
        }
        rank
    }

    /// CSV dump: row = z-power and component, column = generator.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("z_power,component");
        for c in 0..self.cols.len() {
            out.push_str(&format!(",gen_{c}"));
        }
        out.push('\n');
        for r in 0..self.window.dim(self.n) {
            let (j, a) = self.window.coords(r, self.n);
            out.push_str(&format!("{j},{a}"));
            for col in &self.cols {
                out.push_str(&format!(",{}", col[r]));
            }
            out.push('\n');
        }
        out
    }
}

/// The t = 0 lattice of W: columns are W.d^j e_a for 0 <= j <= hi,
/// expressed in powers of z via z <-> d.
pub fn lattice_from_wave(
    w: &WaveOperator,
    window: Window,
) -> Result<DLatticeBasis, SatoError> {
    let policy = w.op.policy;
    let n = policy.n;
    if window.hi < 0 || window.lo > -(policy.depth as i32) {
        return Err(SatoError::WindowTooShallow);
    }
    let dim = window.dim(n);
    let mut cols = Vec::new();
    for j in 0..=window.hi {
        // W d^j = sum_k w_k d^{k+j}: pure order shift since d^j has
        // constant coefficients.
        let mut eval: Vec<Option<Matrix<Scalar>>> = Vec::new();
        for m in window.lo..=window.hi {
            let k = m - j;
            let coeff = if k > 0 {
                Some(policy.zero_matrix_scalar(w.op.backend))
            } else {
                w.op
                    .coeff(k)
                    .map(|mat| mat.eval_at_zero())
                    .map(|o| o.ok_or(SatoError::WindowTooShallow))
                    .transpose()?
            };
            eval.push(coeff);
        }
        for a in 0..n {
            let mut col = vec![Scalar::zero(w.op.backend); dim];
            for (mi, m) in (window.lo..=window.hi).enumerate() {
                match &eval[mi] {
                    Some(mat) => {
                        for b in 0..n {
                            col[window.row(m, b, n)] = mat.get(b, a).clone();
                        }
                    }
                    None => return Err(SatoError::WindowTooShallow),
                }
            }
            cols.push(col);
        }
    }
    DLatticeBasis::new(window, n, w.op.backend, cols)
}

/// dim ker - dim coker of the projection onto the polynomial rows.
pub fn lattice_index(b: &DLatticeBasis) -> i64 {
    let poly_dim = (b.window.hi + 1) as usize * b.n;
    let rank = b.polynomial_rank();
    let ker = b.cols.len() as i64 - rank as i64;
    let coker = poly_dim as i64 - rank as i64;
    ker - coker
}

/// True when the projection onto the polynomial rows is bijective.
pub fn in_big_cell(b: &DLatticeBasis) -> bool {
    let poly_dim = (b.window.hi + 1) as usize * b.n;
    b.cols.len() == poly_dim && b.polynomial_rank() == poly_dim
}

/// The unique constant-coefficient W with lattice_from_wave(W) = B, for B
/// in the big cell. The window model is the t = 0 fiber, so only the t = 0
/// values of the w_i are recoverable; W is returned with constant
/// coefficients (the canonical representative of that fiber).
pub fn wave_from_lattice(
    b: &DLatticeBasis,
    policy: TruncationPolicy,
) -> Result<WaveOperator, SatoError> {
    if policy.n != b.n {
        return Err(SatoError::Core(crate::error::CoreError::DimensionMismatch {
            expected: b.n,
            got: policy.n,
        }));
    }
    if b.window.lo > -(policy.depth as i32) {
        return Err(SatoError::WindowTooShallow);
    }
    if !in_big_cell(b) {
        return Err(SatoError::NotGeneric);
    }
    let (cols, pivot_of_row) = b.echelonize();
    // Every polynomial row must hold a pivot (flag triangulation against
    // the standard flag succeeded).
    for j in 0..=b.window.hi {
        for a in 0..b.n {
            if pivot_of_row[b.window.row(j, a, b.n)].is_none() {
                return Err(SatoError::NotGeneric);
            }
        }
    }
    // In the fully reduced form the polynomial part of each pivot column is
    // a single z^j e_a; the column pivoted at (0, a) is then exactly
    // W e_a = e_a + sum_i w_i(0) z^{-i} e, so w_i(0) sits at row (-i, b).
    let order = policy.series_order as i32;
    let mut terms = vec![(0, policy.identity_matrix(b.backend))];
    for i in 1..=policy.depth as i32 {
        let mut mat = Matrix::from_fn(policy.n, |_, _| TruncatedSeries::zero(order, b.backend));
        for a in 0..b.n {
            let c = pivot_of_row[b.window.row(0, a, b.n)].expect("checked above");
            for bb in 0..b.n {
                let v = cols[c][b.window.row(-i, bb, b.n)].clone();
                mat.set(bb, a, TruncatedSeries::constant(v, order));
            }
        }
        terms.push((-i, mat));
    }
    WaveOperator::try_new(crate::microdiff::MicroOp::from_terms(
        policy, b.backend, terms,
    ))
    .map_err(SatoError::Micro)
}

/// Result of an infinitesimal Gamma_+ deformation by P(z).
#[derive(Debug, Clone)]
pub struct GammaDeformation {
    /// Per generator, the class of P(z).v modulo the modeled subspace, in
    /// window coordinates (rows below z^lo are zero by convention).
    pub tangent: Vec<Vec<Scalar>>,
    /// First-order deformed basis: columns v + eps.P(z).v.
    pub deformed: DLatticeBasis,
}

impl GammaDeformation {
    pub fn is_zero(&self) -> bool {
        self.tangent
            .iter()
            .all(|c| c.iter().all(|x| !is_pivotable(x)))
    }
}

/// Tangent vector of the Gamma_+ action by P(z) at B, plus the first-order
/// deformed basis. Products that overflow the window above z^hi are
/// dropped: in the infinite big-cell picture those rows are lattice
/// content, so dropping them matches the quotient by the modeled subspace.
pub fn gamma_deform(
    b: &DLatticeBasis,
    p: &[Scalar],
    eps: &Scalar,
) -> Result<GammaDeformation, SatoError> {
    if p.len() as i32 - 1 > b.window.hi - b.window.lo {
        return Err(SatoError::WindowTooShallow);
    }
    let dim = b.window.dim(b.n);
    let n = b.n;
    let mult = |v: &[Scalar]| -> Vec<Scalar> {
        let mut out = vec![Scalar::zero(b.backend); dim];
        for (r, x) in v.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            let (j, a) = b.window.coords(r, n);
            for (k, pk) in p.iter().enumerate() {
                let jj = j + k as i32;
                if jj > b.window.hi {
                    continue; // overflow: lattice content in the big cell
                }
                let slot = b.window.row(jj, a, n);
                out[slot] = &out[slot] + &(pk * x);
            }
        }
        out
    };
    let (ech, pivot_of_row) = b.echelonize();
    let reduce = |v: &[Scalar]| -> Vec<Scalar> {
        let mut w = v.to_vec();
        for r in (0..dim).rev() {
            if !is_pivotable(&w[r]) {
                continue;
            }
            if let Some(c) = pivot_of_row[r] {
                let f = w[r].clone();
                for (x, p) in w.iter_mut().zip(&ech[c]) {
                    *x = &*x - &(&f * p);
                }
            }
        }
        w
    };
    let mut tangent = Vec::new();
    let mut deformed_cols = Vec::new();
    for col in &b.cols {
        let pv = mult(col);
        tangent.push(reduce(&pv));
        let newcol: Vec<Scalar> = col
            .iter()
            .zip(&pv)
            .map(|(x, y)| x + &(eps * y))
            .collect();
        deformed_cols.push(newcol);
    }
    Ok(GammaDeformation {
        tangent,
        deformed: DLatticeBasis::new(b.window, b.n, b.backend, deformed_cols)?,
    })
}

impl TruncationPolicy {
    fn zero_matrix_scalar(&self, backend: Backend) -> Matrix<Scalar> {
        Matrix::from_fn(self.n, |_, _| Scalar::zero(backend))
    }
}
