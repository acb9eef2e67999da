//! Linear operators with forward and adjoint application.
//!
//! [`LinearMap`] is a cheap-to-clone handle over a closed set of operator
//! kinds. All kinds are immutable after construction, so one map can be
//! shared between threads and applied concurrently.

mod bernoulli;
mod descriptor;
mod integration;

use std::sync::Arc;

use rand::Rng;

pub use bernoulli::BernoulliSensing;
pub use integration::IntegrationOp;

use crate::basis::WaveletBasis;
use crate::error::{check_len, Error, Result};
use crate::index_set::IndexSet;
use crate::{Matrix, Vector};

/// Default cap on `rows · cols` for [`LinearMap::materialize`].
pub const DEFAULT_MATERIALIZE_BUDGET: usize = 1 << 24;

/// Power-iteration cap for [`LinearMap::operator_norm`].
pub const POWER_ITERATION_MAX_ITERS: usize = 10_000;

const POWER_ITERATION_SEED: u64 = 0x5EED_0F_A11;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OperatorKind {
    Dense,
    Identity,
    Integration,
    Bernoulli,
    Composed,
    Product,
    Restricted,
}

#[derive(Clone, Debug)]
pub enum LinearMap {
    Dense(Arc<Matrix>),
    Identity(usize),
    Integration(IntegrationOp),
    Bernoulli(Arc<BernoulliSensing>),
    Composed(Arc<ComposedMap>),
    Product(Arc<ProductMap>),
    Restricted(Arc<RestrictedMap>),
}

/// `outer ∘ inner`.
#[derive(Clone, Debug)]
pub struct ComposedMap {
    outer: LinearMap,
    inner: LinearMap,
}

impl ComposedMap {
    pub fn outer(&self) -> &LinearMap {
        &self.outer
    }

    pub fn inner(&self) -> &LinearMap {
        &self.inner
    }
}

/// `M(x, h) = (Wx − h, Ah)` acting on stacked vectors `(x, h)`.
#[derive(Clone, Debug)]
pub struct ProductMap {
    w: LinearMap,
    a: LinearMap,
}

impl ProductMap {
    pub fn w(&self) -> &LinearMap {
        &self.w
    }

    pub fn a(&self) -> &LinearMap {
        &self.a
    }

    /// Dimension of the `x` block.
    pub fn x_dim(&self) -> usize {
        self.w.domain_dim()
    }

    /// Dimension of the `h` block.
    pub fn h_dim(&self) -> usize {
        self.w.codomain_dim()
    }

    /// Dimension of the measurement block.
    pub fn y_dim(&self) -> usize {
        self.a.codomain_dim()
    }

    fn apply_raw(&self, z: &Vector) -> Vector {
        let (dx, dh) = (self.x_dim(), self.h_dim());
        let x = z.rows(0, dx).into_owned();
        let h = z.rows(dx, dh).into_owned();
        let wx = self.w.apply_raw(&x);
        let ah = self.a.apply_raw(&h);
        let mut out = Vector::zeros(dh + self.y_dim());
        out.rows_mut(0, dh).copy_from(&(wx - &h));
        out.rows_mut(dh, self.y_dim()).copy_from(&ah);
        out
    }

    fn adjoint_raw(&self, rs: &Vector) -> Vector {
        let (dx, dh) = (self.x_dim(), self.h_dim());
        let r = rs.rows(0, dh).into_owned();
        let s = rs.rows(dh, self.y_dim()).into_owned();
        let wr = self.w.adjoint_raw(&r);
        let as_ = self.a.adjoint_raw(&s);
        let mut out = Vector::zeros(dx + dh);
        out.rows_mut(0, dx).copy_from(&wr);
        out.rows_mut(dx, dh).copy_from(&(as_ - r));
        out
    }
}

/// `A_Ω = A ∘ i_Ω`: acts on coordinates indexed by `Ω`, either in the
/// standard basis or, when a wavelet basis is attached, in wavelet coordinates.
#[derive(Clone, Debug)]
pub struct RestrictedMap {
    inner: LinearMap,
    omega: IndexSet,
    basis: Option<WaveletBasis>,
}

impl RestrictedMap {
    pub fn inner(&self) -> &LinearMap {
        &self.inner
    }

    pub fn omega(&self) -> &IndexSet {
        &self.omega
    }

    pub fn basis(&self) -> Option<&WaveletBasis> {
        self.basis.as_ref()
    }

    fn embed(&self, c: &Vector) -> Vector {
        let mut full = Vector::zeros(self.inner.domain_dim());
        for (k, i) in self.omega.iter().enumerate() {
            full[i] = c[k];
        }
        if let Some(b) = &self.basis {
            b.synthesize_in_place(full.as_mut_slice());
        }
        full
    }

    fn apply_raw(&self, c: &Vector) -> Vector {
        self.inner.apply_raw(&self.embed(c))
    }

    fn adjoint_raw(&self, y: &Vector) -> Vector {
        let mut full = self.inner.adjoint_raw(y);
        if let Some(b) = &self.basis {
            b.analyze_in_place(full.as_mut_slice());
        }
        Vector::from_iterator(self.omega.len(), self.omega.iter().map(|i| full[i]))
    }
}

impl LinearMap {
    pub fn dense(matrix: Matrix) -> Self {
        LinearMap::Dense(Arc::new(matrix))
    }

    pub fn identity(n: usize) -> Self {
        LinearMap::Identity(n)
    }

    pub fn integration(n: usize) -> Self {
        LinearMap::Integration(IntegrationOp::new(n))
    }

    pub fn integration_scaled(n: usize, scale: f64) -> Self {
        LinearMap::Integration(IntegrationOp::with_scale(n, scale))
    }

    pub fn bernoulli(m: usize, n: usize, seed: u64) -> Self {
        LinearMap::Bernoulli(Arc::new(BernoulliSensing::new(m, n, seed)))
    }

    /// `outer ∘ inner`; requires `inner.codomain_dim() == outer.domain_dim()`.
    pub fn compose(outer: LinearMap, inner: LinearMap) -> Result<Self> {
        check_len("compose", outer.domain_dim(), inner.codomain_dim())?;
        Ok(LinearMap::Composed(Arc::new(ComposedMap { outer, inner })))
    }

    /// Product operator `M(x, h) = (Wx − h, Ah)`.
    pub fn product(w: LinearMap, a: LinearMap) -> Result<Self> {
        check_len("product map", w.codomain_dim(), a.domain_dim())?;
        Ok(LinearMap::Product(Arc::new(ProductMap { w, a })))
    }

    /// `A_Ω`. With `basis = Some(b)` the columns are `A·synthesize(e_λ)`,
    /// otherwise `A·e_λ`. `Ω = ∅` yields a zero-dimensional domain.
    pub fn restrict(a: &LinearMap, omega: &IndexSet, basis: Option<&WaveletBasis>) -> Result<Self> {
        let n = a.domain_dim();
        if let Some(max) = omega.max() {
            if max >= n {
                return Err(Error::IndexOutOfRange { index: max, dim: n });
            }
        }
        if let Some(b) = basis {
            check_len("restrict basis", n, b.dim())?;
        }
        Ok(LinearMap::Restricted(Arc::new(RestrictedMap {
            inner: a.clone(),
            omega: omega.clone(),
            basis: basis.cloned(),
        })))
    }

    pub fn kind(&self) -> OperatorKind {
        match self {
            LinearMap::Dense(_) => OperatorKind::Dense,
            LinearMap::Identity(_) => OperatorKind::Identity,
            LinearMap::Integration(_) => OperatorKind::Integration,
            LinearMap::Bernoulli(_) => OperatorKind::Bernoulli,
            LinearMap::Composed(_) => OperatorKind::Composed,
            LinearMap::Product(_) => OperatorKind::Product,
            LinearMap::Restricted(_) => OperatorKind::Restricted,
        }
    }

    pub fn domain_dim(&self) -> usize {
        match self {
            LinearMap::Dense(m) => m.ncols(),
            LinearMap::Identity(n) => *n,
            LinearMap::Integration(op) => op.dim(),
            LinearMap::Bernoulli(b) => b.cols(),
            LinearMap::Composed(c) => c.inner.domain_dim(),
            LinearMap::Product(p) => p.x_dim() + p.h_dim(),
            LinearMap::Restricted(r) => r.omega.len(),
        }
    }

    pub fn codomain_dim(&self) -> usize {
        match self {
            LinearMap::Dense(m) => m.nrows(),
            LinearMap::Identity(n) => *n,
            LinearMap::Integration(op) => op.dim(),
            LinearMap::Bernoulli(b) => b.rows(),
            LinearMap::Composed(c) => c.outer.codomain_dim(),
            LinearMap::Product(p) => p.h_dim() + p.y_dim(),
            LinearMap::Restricted(r) => r.inner.codomain_dim(),
        }
    }

    pub fn as_product(&self) -> Option<&ProductMap> {
        match self {
            LinearMap::Product(p) => Some(p),
            _ => None,
        }
    }

    /// `op · x`.
    pub fn apply(&self, x: &Vector) -> Result<Vector> {
        check_len("apply", self.domain_dim(), x.len())?;
        Ok(self.apply_raw(x))
    }

    /// `op* · y`.
    pub fn adjoint_apply(&self, y: &Vector) -> Result<Vector> {
        check_len("adjoint apply", self.codomain_dim(), y.len())?;
        Ok(self.adjoint_raw(y))
    }

    pub(crate) fn apply_raw(&self, x: &Vector) -> Vector {
        match self {
            LinearMap::Dense(m) => m.as_ref() * x,
            LinearMap::Identity(_) => x.clone(),
            LinearMap::Integration(op) => op.apply_raw(x.as_slice()),
            LinearMap::Bernoulli(b) => b.entries() * x,
            LinearMap::Composed(c) => c.outer.apply_raw(&c.inner.apply_raw(x)),
            LinearMap::Product(p) => p.apply_raw(x),
            LinearMap::Restricted(r) => r.apply_raw(x),
        }
    }

    pub(crate) fn adjoint_raw(&self, y: &Vector) -> Vector {
        match self {
            LinearMap::Dense(m) => m.tr_mul(y),
            LinearMap::Identity(_) => y.clone(),
            LinearMap::Integration(op) => op.adjoint_raw(y.as_slice()),
            LinearMap::Bernoulli(b) => b.entries().tr_mul(y),
            LinearMap::Composed(c) => c.inner.adjoint_raw(&c.outer.adjoint_raw(y)),
            LinearMap::Product(p) => p.adjoint_raw(y),
            LinearMap::Restricted(r) => r.adjoint_raw(y),
        }
    }

    /// Dense matrix `D` with `D·x = apply(x)`, within the default budget.
    pub fn materialize(&self) -> Result<Matrix> {
        self.materialize_with_budget(DEFAULT_MATERIALIZE_BUDGET)
    }

    pub fn materialize_with_budget(&self, budget: usize) -> Result<Matrix> {
        let (rows, cols) = (self.codomain_dim(), self.domain_dim());
        if rows.saturating_mul(cols) > budget {
            return Err(Error::BudgetExceeded { rows, cols, budget });
        }
        Ok(match self {
            LinearMap::Dense(m) => m.as_ref().clone(),
            LinearMap::Identity(n) => Matrix::identity(*n, *n),
            LinearMap::Integration(op) => {
                Matrix::from_fn(rows, cols, |i, j| if j <= i { op.scale() } else { 0.0 })
            }
            LinearMap::Bernoulli(b) => b.entries().clone(),
            LinearMap::Composed(c) => {
                c.outer.materialize_with_budget(budget)?
                    * c.inner.materialize_with_budget(budget)?
            }
            LinearMap::Product(_) | LinearMap::Restricted(_) => self.probe_columns(),
        })
    }

    fn probe_columns(&self) -> Matrix {
        let (rows, cols) = (self.codomain_dim(), self.domain_dim());
        let mut out = Matrix::zeros(rows, cols);
        let mut e = Vector::zeros(cols);
        for j in 0..cols {
            e[j] = 1.0;
            out.set_column(j, &self.apply_raw(&e));
            e[j] = 0.0;
        }
        out
    }

    /// Largest singular value by power iteration on `op*op` from a fixed
    /// seeded start, stopping when the relative change drops below `tol`.
    /// Falls back to a dense SVD if the iteration cap is hit and the
    /// operator fits the materialization budget.
    pub fn operator_norm(&self, tol: f64) -> f64 {
        let n = self.domain_dim();
        if n == 0 || self.codomain_dim() == 0 {
            return 0.0;
        }
        let mut rng = crate::rng::seeded(POWER_ITERATION_SEED);
        let mut v = Vector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        v /= v.norm();
        let mut sigma = 0.0;
        for _ in 0..POWER_ITERATION_MAX_ITERS {
            let w = self.adjoint_raw(&self.apply_raw(&v));
            let wn = w.norm();
            if wn == 0.0 {
                return 0.0;
            }
            let next = wn.sqrt();
            v = w / wn;
            if (next - sigma).abs() <= tol * next {
                return next;
            }
            sigma = next;
        }
        self.operator_norm_dense().unwrap_or(sigma)
    }

    /// Largest singular value from a dense SVD of the materialization.
    pub fn operator_norm_dense(&self) -> Result<f64> {
        if self.domain_dim() == 0 || self.codomain_dim() == 0 {
            return Ok(0.0);
        }
        let m = self.materialize()?;
        Ok(m.singular_values().max())
    }
}
