//! Cone geometry and logarithmically homogeneous self-concordant barriers.
//!
//! Supported blocks are the nonnegative orthant with `B(x) = -Σ ln xᵢ`
//! (parameter `dim`) and the second-order cone `{(t, u) : t ≥ ‖u‖}` with
//! `B(t, u) = -ln(t² - ‖u‖²)` (parameter 2). Product cones are handled
//! blockwise: values, gradients, Hessians and parameters add up.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::counters::OpCounters;
use crate::dense::{backward_subst_transpose, cholesky_lower, forward_subst};
use crate::error::{Error, Result};

/// Margin used by solver-internal interiority guards.
pub const INTERNAL_MARGIN: f64 = 1e-12;

/// One block of a product cone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ConeBlock {
    Orthant { dim: usize },
    Soc { dim: usize },
}

impl ConeBlock {
    pub fn dim(&self) -> usize {
        match *self {
            ConeBlock::Orthant { dim } | ConeBlock::Soc { dim } => dim,
        }
    }

    /// Barrier parameter contributed by this block.
    pub fn theta(&self) -> f64 {
        match *self {
            ConeBlock::Orthant { dim } => dim as f64,
            ConeBlock::Soc { .. } => 2.0,
        }
    }
}

/// A closed pointed convex cone given as a product of blocks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ConeBlock>", into = "Vec<ConeBlock>")]
pub struct Cone {
    blocks: Vec<ConeBlock>,
    offsets: Vec<usize>,
    total_dim: usize,
}

impl TryFrom<Vec<ConeBlock>> for Cone {
    type Error = Error;

    fn try_from(blocks: Vec<ConeBlock>) -> Result<Self> {
        Cone::new(blocks)
    }
}

impl From<Cone> for Vec<ConeBlock> {
    fn from(c: Cone) -> Self {
        c.blocks
    }
}

impl Cone {
    pub fn new(blocks: Vec<ConeBlock>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::Schema("cone must have at least one block".into()));
        }
        let mut offsets = Vec::with_capacity(blocks.len());
        let mut total_dim = 0;
        for (i, b) in blocks.iter().enumerate() {
            match *b {
                ConeBlock::Orthant { dim: 0 } => {
                    return Err(Error::Schema(format!(
                        "cone block {i}: orthant dim must be >= 1"
                    )))
                }
                ConeBlock::Soc { dim } if dim < 2 => {
                    return Err(Error::Schema(format!(
                        "cone block {i}: soc dim must be >= 2"
                    )))
                }
                _ => {}
            }
            offsets.push(total_dim);
            total_dim += b.dim();
        }
        Ok(Self {
            blocks,
            offsets,
            total_dim,
        })
    }

    pub fn orthant(n: usize) -> Self {
        Self::new(vec![ConeBlock::Orthant { dim: n }]).expect("orthant dim must be >= 1")
    }

    pub fn soc(n: usize) -> Self {
        Self::new(vec![ConeBlock::Soc { dim: n }]).expect("soc dim must be >= 2")
    }

    pub fn blocks(&self) -> &[ConeBlock] {
        &self.blocks
    }

    pub fn dim(&self) -> usize {
        self.total_dim
    }

    /// Barrier parameter ϑ.
    pub fn theta(&self) -> f64 {
        self.blocks.iter().map(ConeBlock::theta).sum()
    }

    /// Iterates `(block index, block, slice of x)`.
    fn split<'a>(
        &'a self,
        x: &'a [f64],
    ) -> impl Iterator<Item = (usize, &'a ConeBlock, &'a [f64])> + 'a {
        self.blocks
            .iter()
            .zip(&self.offsets)
            .enumerate()
            .map(move |(i, (b, &o))| (i, b, &x[o..o + b.dim()]))
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.total_dim {
            return Err(Error::Dimension {
                what: "cone point",
                expected: self.total_dim,
                got: len,
            });
        }
        Ok(())
    }

    pub fn barrier_value(&self, x: &DVector<f64>) -> Result<f64> {
        self.check_len(x.len())?;
        let mut total = 0.0;
        for (i, block, xb) in self.split(x.as_slice()) {
            total += match block {
                ConeBlock::Orthant { .. } => {
                    let mut s = 0.0;
                    for &v in xb {
                        if !(v > 0.0) {
                            return Err(Error::Boundary { block: i });
                        }
                        s -= v.ln();
                    }
                    s
                }
                ConeBlock::Soc { .. } => -soc_gap(xb, i)?.ln(),
            };
        }
        Ok(total)
    }

    pub fn barrier_gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_len(x.len())?;
        let mut g = DVector::zeros(self.total_dim);
        for (i, block, xb) in self.split(x.as_slice()) {
            let o = self.offsets[i];
            match block {
                ConeBlock::Orthant { .. } => {
                    for (j, &v) in xb.iter().enumerate() {
                        if !(v > 0.0) {
                            return Err(Error::Boundary { block: i });
                        }
                        g[o + j] = -1.0 / v;
                    }
                }
                ConeBlock::Soc { .. } => {
                    let s = soc_gap(xb, i)?;
                    g[o] = -2.0 * xb[0] / s;
                    for j in 1..xb.len() {
                        g[o + j] = 2.0 * xb[j] / s;
                    }
                }
            }
        }
        Ok(g)
    }

    /// Dense barrier Hessian. Intended for oracles and small problems; the
    /// solver works with [`BarrierFactor`] instead.
    pub fn barrier_hessian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check_len(x.len())?;
        let mut h = DMatrix::zeros(self.total_dim, self.total_dim);
        for (i, block, xb) in self.split(x.as_slice()) {
            let o = self.offsets[i];
            let hb = block_hessian(block, xb, i)?;
            h.view_mut((o, o), (xb.len(), xb.len())).copy_from(&hb);
        }
        Ok(h)
    }

    /// Cholesky factor of the barrier Hessian at `x`. Counts one Cholesky
    /// factorization.
    pub fn barrier_factor(&self, x: &DVector<f64>, counters: &OpCounters) -> Result<BarrierFactor> {
        self.check_len(x.len())?;
        let mut blocks = Vec::with_capacity(self.blocks.len());
        for (i, block, xb) in self.split(x.as_slice()) {
            let fb = match block {
                ConeBlock::Orthant { .. } => {
                    let mut d = DVector::zeros(xb.len());
                    for (j, &v) in xb.iter().enumerate() {
                        if !(v > 0.0) {
                            return Err(Error::Boundary { block: i });
                        }
                        d[j] = 1.0 / v;
                    }
                    FactorBlock::Diagonal(d)
                }
                ConeBlock::Soc { .. } => {
                    let hb = block_hessian(block, xb, i)?;
                    let l = cholesky_lower(&hb).map_err(|e| match e {
                        Error::Factorization { row, pivot } => Error::Factorization {
                            row: row + self.offsets[i],
                            pivot,
                        },
                        other => other,
                    })?;
                    FactorBlock::Lower(l)
                }
            };
            blocks.push(fb);
        }
        counters.add_cholesky(1);
        Ok(BarrierFactor {
            point: x.clone(),
            blocks,
            offsets: self.offsets.clone(),
        })
    }

    /// True iff every orthant entry exceeds `margin` and every second-order
    /// block has `t - ‖u‖ > margin`.
    pub fn interior_membership(&self, x: &DVector<f64>, margin: f64) -> bool {
        if x.len() != self.total_dim || x.iter().any(|v| !v.is_finite()) {
            return false;
        }
        self.split(x.as_slice()).all(|(_, block, xb)| match block {
            ConeBlock::Orthant { .. } => xb.iter().all(|&v| v > margin),
            ConeBlock::Soc { .. } => xb[0] - tail_norm(xb) > margin,
        })
    }

    /// Membership in the dual cone up to `tol` per block. Both block types
    /// are self-dual.
    pub fn dual_membership(&self, s: &DVector<f64>, tol: f64) -> bool {
        if s.len() != self.total_dim || s.iter().any(|v| !v.is_finite()) {
            return false;
        }
        self.split(s.as_slice()).all(|(_, block, sb)| match block {
            ConeBlock::Orthant { .. } => sb.iter().all(|&v| v >= -tol),
            ConeBlock::Soc { .. } => sb[0] - tail_norm(sb) >= -tol,
        })
    }
}

fn tail_norm(xb: &[f64]) -> f64 {
    xb[1..].iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn soc_gap(xb: &[f64], block: usize) -> Result<f64> {
    let t = xb[0];
    let u2: f64 = xb[1..].iter().map(|v| v * v).sum();
    if !(t > 0.0) || !(t > u2.sqrt()) {
        return Err(Error::Boundary { block });
    }
    Ok(t * t - u2)
}

fn block_hessian(block: &ConeBlock, xb: &[f64], i: usize) -> Result<DMatrix<f64>> {
    let k = xb.len();
    match block {
        ConeBlock::Orthant { .. } => {
            let mut d = DVector::zeros(k);
            for (j, &v) in xb.iter().enumerate() {
                if !(v > 0.0) {
                    return Err(Error::Boundary { block: i });
                }
                d[j] = 1.0 / (v * v);
            }
            Ok(DMatrix::from_diagonal(&d))
        }
        ConeBlock::Soc { .. } => {
            // -2J/s + 4 (Jx)(Jx)ᵀ / s², J = diag(1, -1, ..., -1)
            let s = soc_gap(xb, i)?;
            let mut jx = DVector::from_column_slice(xb);
            for j in 1..k {
                jx[j] = -jx[j];
            }
            let mut h = &jx * jx.transpose() * (4.0 / (s * s));
            h[(0, 0)] -= 2.0 / s;
            for j in 1..k {
                h[(j, j)] += 2.0 / s;
            }
            Ok(h)
        }
    }
}

#[derive(Debug, Clone)]
enum FactorBlock {
    Diagonal(DVector<f64>),
    Lower(DMatrix<f64>),
}

/// Lower Cholesky factor `L` of `∇²B(x)` at an interior point, stored
/// blockwise. `M = L⁻ᵀ` satisfies `[∇²B(x)]⁻¹ = M Mᵀ`.
#[derive(Debug, Clone)]
pub struct BarrierFactor {
    point: DVector<f64>,
    blocks: Vec<FactorBlock>,
    offsets: Vec<usize>,
}

impl BarrierFactor {
    pub fn point(&self) -> &DVector<f64> {
        &self.point
    }

    pub fn dim(&self) -> usize {
        self.point.len()
    }

    /// Dense copy of `L`.
    pub fn lower_factor(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut l = DMatrix::zeros(n, n);
        for (b, &o) in self.blocks.iter().zip(&self.offsets) {
            match b {
                FactorBlock::Diagonal(d) => {
                    for (j, &v) in d.iter().enumerate() {
                        l[(o + j, o + j)] = v;
                    }
                }
                FactorBlock::Lower(lb) => {
                    l.view_mut((o, o), lb.shape()).copy_from(lb);
                }
            }
        }
        l
    }

    /// `Lᵀ v`.
    pub fn mul_lt(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut out = v.clone();
        for (b, &o) in self.blocks.iter().zip(&self.offsets) {
            match b {
                FactorBlock::Diagonal(d) => {
                    for (j, &dj) in d.iter().enumerate() {
                        out[o + j] *= dj;
                    }
                }
                FactorBlock::Lower(lb) => {
                    let k = lb.nrows();
                    let seg = v.rows(o, k).clone_owned();
                    out.rows_mut(o, k).copy_from(&(lb.transpose() * seg));
                }
            }
        }
        out
    }

    /// `L⁻¹ v` (forward substitution).
    pub fn solve_lower(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut out = v.clone();
        for (b, &o) in self.blocks.iter().zip(&self.offsets) {
            match b {
                FactorBlock::Diagonal(d) => {
                    for (j, &dj) in d.iter().enumerate() {
                        out[o + j] /= dj;
                    }
                }
                FactorBlock::Lower(lb) => {
                    let k = lb.nrows();
                    let mut seg = out.rows(o, k).clone_owned();
                    forward_subst(lb, &mut seg);
                    out.rows_mut(o, k).copy_from(&seg);
                }
            }
        }
        out
    }

    /// `L⁻ᵀ v` (backward substitution).
    pub fn solve_lower_transpose(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut out = v.clone();
        for (b, &o) in self.blocks.iter().zip(&self.offsets) {
            match b {
                FactorBlock::Diagonal(d) => {
                    for (j, &dj) in d.iter().enumerate() {
                        out[o + j] /= dj;
                    }
                }
                FactorBlock::Lower(lb) => {
                    let k = lb.nrows();
                    let mut seg = out.rows(o, k).clone_owned();
                    backward_subst_transpose(lb, &mut seg);
                    out.rows_mut(o, k).copy_from(&seg);
                }
            }
        }
        out
    }

    /// Primal local norm `‖v‖ₓ = ‖Lᵀv‖`.
    pub fn local_norm_primal(&self, v: &DVector<f64>) -> f64 {
        self.mul_lt(v).norm()
    }

    /// Dual local norm `‖v‖ₓ* = ‖L⁻¹v‖`.
    pub fn local_norm_dual(&self, v: &DVector<f64>) -> f64 {
        self.solve_lower(v).norm()
    }
}
