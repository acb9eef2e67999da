//! Source-condition certificates, restricted injectivity, rate constants and
//! runtime checks of the auxiliary error bounds.
//!
//! Everything here works on dense materializations, so it is meant for
//! desk-scale instances.

use nalgebra::SymmetricEigen;

use crate::basis::WaveletBasis;
use crate::error::{check_len, Error, Result};
use crate::index_set::IndexSet;
use crate::operators::LinearMap;
use crate::regularizers::{saturation, Subgradient, WeightedL1, SIGN_TOLERANCE};
use crate::{Matrix, Vector};

/// `σ_min(A_Ω) > INJECTIVITY_TOLERANCE·‖A‖` counts as injective.
pub const INJECTIVITY_TOLERANCE: f64 = 1e-10;

/// Acceptance threshold for `‖W*u − x⋆‖ / ‖x⋆‖` and for the strict split residual.
pub const SOURCE_TOLERANCE: f64 = 1e-8;

/// Alternation cap and stopping tolerance of the strict certificate search.
pub const STRICT_MAX_ALTERNATIONS: usize = 200;
pub const STRICT_ALTERNATION_TOL: f64 = 1e-10;

/// Iteration cap of the ℓ∞ (Lawson) refinement of `v`.
pub const LAWSON_MAX_ITERS: usize = 2000;

/// Relative slack of the bound checks, on top of `BOUND_ABS_SLACK`.
pub const BOUND_REL_SLACK: f64 = 1e-6;
pub const BOUND_ABS_SLACK: f64 = 1e-12;

/// Relative tolerance for the closure check of [`RateConstants::recompute`].
pub const CLOSURE_TOLERANCE: f64 = 1e-12;

/// Off-support energy of `h⋆` above which `h⋆ ∉ H_Ω`.
pub const OFF_SUPPORT_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct InjectivityReport {
    pub omega: IndexSet,
    /// `+∞` for `Ω = ∅`, `0` when `|Ω|` exceeds the number of measurements.
    pub sigma_min: f64,
    /// `1/σ_min` when injective, `0` for `Ω = ∅`, `+∞` otherwise.
    pub a_omega_inv_norm: f64,
    pub a_norm: f64,
    pub injective: bool,
}

impl InjectivityReport {
    pub fn summary(&self) -> Vec<(&'static str, String)> {
        vec![
            ("omega", self.omega.to_string()),
            ("sigma_min", format!("{:?}", self.sigma_min)),
            ("a_omega_inv_norm", format!("{:?}", self.a_omega_inv_norm)),
            ("a_norm", format!("{:?}", self.a_norm)),
            ("injective", self.injective.to_string()),
        ]
    }
}

/// Largest singular value of `a`, from a dense SVD when it fits the
/// materialization budget.
pub fn spectral_norm(a: &LinearMap) -> f64 {
    a.operator_norm_dense()
        .unwrap_or_else(|_| a.operator_norm(1e-12))
}

/// Materializes `A_Ω` in wavelet coordinates and reads off its smallest
/// singular value.
pub fn check_restricted_injectivity(
    a: &LinearMap,
    basis: &WaveletBasis,
    omega: &IndexSet,
) -> Result<InjectivityReport> {
    let a_norm = spectral_norm(a);
    let restricted = LinearMap::restrict(a, omega, Some(basis))?;
    if omega.is_empty() {
        return Ok(InjectivityReport {
            omega: omega.clone(),
            sigma_min: f64::INFINITY,
            a_omega_inv_norm: 0.0,
            a_norm,
            injective: true,
        });
    }
    let mat = restricted.materialize()?;
    let sigma_min = if omega.len() > a.codomain_dim() {
        0.0
    } else {
        mat.singular_values().min()
    };
    let injective = sigma_min > INJECTIVITY_TOLERANCE * a_norm;
    Ok(InjectivityReport {
        omega: omega.clone(),
        sigma_min,
        a_omega_inv_norm: if injective {
            1.0 / sigma_min
        } else {
            f64::INFINITY
        },
        a_norm,
        injective,
    })
}

/// Certificate `(u, v)` for the relaxed model: `W*u = x⋆` and
/// `η = A*v − u ∈ ∂‖h⋆‖₁,κ`.
#[derive(Clone, Debug)]
pub struct SourceCertificateRelaxed {
    pub u: Vector,
    pub v: Vector,
    /// Wavelet coefficients of `A*v − u`, with support entries snapped to
    /// `κ_λ sign⟨φ_λ, h⋆⟩` when they match to [`SIGN_TOLERANCE`].
    pub eta_coeffs: Vector,
    /// Present iff `eta_coeffs` is an admissible subgradient with a margin.
    pub eta: Option<Subgradient>,
    pub support: IndexSet,
    pub residual_u: f64,
    /// `max_{λ∈supp} |η_λ − κ_λ sign⟨φ_λ,h⋆⟩|` before snapping.
    pub support_residual: f64,
    /// `min_{λ∉supp} κ_λ − |η_λ|`; `+∞` when the support is everything.
    pub saturation_margin: f64,
    pub strictly_complementary: bool,
    pub refined: bool,
    pub valid: bool,
}

impl SourceCertificateRelaxed {
    /// `‖(u, v)‖`.
    pub fn norm(&self) -> f64 {
        (self.u.norm_squared() + self.v.norm_squared()).sqrt()
    }

    /// `(u, v)` stacked as an element of `H × Y`.
    pub fn stacked(&self) -> Vector {
        let mut out = Vector::zeros(self.u.len() + self.v.len());
        out.rows_mut(0, self.u.len()).copy_from(&self.u);
        out.rows_mut(self.u.len(), self.v.len()).copy_from(&self.v);
        out
    }

    pub fn omega(&self) -> Option<&IndexSet> {
        self.eta.as_ref().map(|e| e.omega())
    }

    pub fn summary(&self) -> Vec<(&'static str, String)> {
        vec![
            ("valid", self.valid.to_string()),
            ("support", self.support.to_string()),
            ("residual_u", format!("{:?}", self.residual_u)),
            ("support_residual", format!("{:?}", self.support_residual)),
            ("saturation_margin", format!("{:?}", self.saturation_margin)),
            (
                "strictly_complementary",
                self.strictly_complementary.to_string(),
            ),
            ("refined", self.refined.to_string()),
            ("norm_uv", format!("{:?}", self.norm())),
        ]
    }
}

/// Certificate `ν` for the strict model: `W*A*ν = ξ + W*η` with `ξ = x⋆`.
#[derive(Clone, Debug)]
pub struct SourceCertificateStrict {
    pub nu: Vector,
    pub xi: Vector,
    pub eta_coeffs: Vector,
    pub eta: Option<Subgradient>,
    pub support: IndexSet,
    pub split_residual: f64,
    pub saturation_margin: f64,
    pub strictly_complementary: bool,
    pub alternations: usize,
    pub valid: bool,
}

impl SourceCertificateStrict {
    pub fn omega(&self) -> Option<&IndexSet> {
        self.eta.as_ref().map(|e| e.omega())
    }

    pub fn summary(&self) -> Vec<(&'static str, String)> {
        vec![
            ("valid", self.valid.to_string()),
            ("support", self.support.to_string()),
            ("split_residual", format!("{:?}", self.split_residual)),
            ("saturation_margin", format!("{:?}", self.saturation_margin)),
            (
                "strictly_complementary",
                self.strictly_complementary.to_string(),
            ),
            ("alternations", self.alternations.to_string()),
            ("norm_nu", format!("{:?}", self.nu.norm())),
        ]
    }
}

fn lstsq(m: &Matrix, b: &Vector, context: &'static str) -> Result<Vector> {
    if m.ncols() == 0 {
        return Ok(Vector::zeros(0));
    }
    if m.nrows() == 0 {
        return Ok(Vector::zeros(m.ncols()));
    }
    let svd = m.clone().svd(true, true);
    let cutoff = 1e-12 * svd.singular_values.max();
    svd.solve(b, cutoff).map_err(|_| Error::LinearSolve {
        context,
        residual: f64::NAN,
        iterations: 0,
    })
}

/// `Φᵀ M` for a dense `M` whose rows live in `H`.
fn analyze_columns(basis: &WaveletBasis, m: &Matrix) -> Matrix {
    let mut out = m.clone();
    for mut col in out.column_iter_mut() {
        let mut c: Vec<f64> = col.iter().copied().collect();
        basis.analyze_in_place(&mut c);
        col.copy_from_slice(&c);
    }
    out
}

fn select_rows(m: &Matrix, rows: &[usize]) -> Matrix {
    Matrix::from_fn(rows.len(), m.ncols(), |i, j| m[(rows[i], j)])
}

fn null_space(c: &Matrix) -> Matrix {
    let n = c.ncols();
    if c.nrows() == 0 {
        return Matrix::identity(n, n);
    }
    let gram = c.tr_mul(c);
    let eig = SymmetricEigen::new(gram);
    let top = eig.eigenvalues.iter().copied().fold(0.0_f64, f64::max);
    let cols: Vec<usize> = (0..n)
        .filter(|&j| eig.eigenvalues[j] <= 1e-20 * top.max(f64::MIN_POSITIVE) + 1e-300)
        .collect();
    Matrix::from_fn(n, cols.len(), |i, k| eig.eigenvectors[(i, cols[k])])
}

/// Approximate `argmin_z ‖r0 + G z‖∞` by Lawson's iteratively reweighted
/// least squares.
fn lawson_minimax(g: &Matrix, r0: &Vector) -> Result<Vector> {
    let (rows, cols) = (g.nrows(), g.ncols());
    let mut best = Vector::zeros(cols);
    let mut best_val = r0.amax();
    if rows == 0 || cols == 0 {
        return Ok(best);
    }
    let mut w = Vector::from_element(rows, 1.0 / rows as f64);
    let mut last_improvement = 0;
    for it in 0..LAWSON_MAX_ITERS {
        let sw = w.map(f64::sqrt);
        let lhs = Matrix::from_fn(rows, cols, |i, j| sw[i] * g[(i, j)]);
        let rhs = -sw.component_mul(r0);
        let z = lstsq(&lhs, &rhs, "certificate refinement")?;
        let r = r0 + g * &z;
        let val = r.amax();
        if val < best_val * (1.0 - 1e-9) {
            best_val = val;
            best = z;
            last_improvement = it;
        } else if it - last_improvement > 100 {
            break;
        }
        w = w.component_mul(&r.abs());
        let total = w.sum();
        if !(total > 0.0) {
            break;
        }
        w /= total;
    }
    Ok(best)
}

struct Assembled {
    eta_coeffs: Vector,
    eta: Option<Subgradient>,
    support_residual: f64,
    saturation_margin: f64,
    box_ok: bool,
}

/// Snap support entries, check the box and build the subgradient.
fn assemble(l1: &WeightedL1, raw: &Vector, support: &IndexSet, signs: &Vector) -> Assembled {
    let kappa = l1.kappa();
    let mut eta = raw.clone();
    let mut support_residual: f64 = 0.0;
    for i in support.iter() {
        let want = kappa[i] * signs[i];
        support_residual = support_residual.max((raw[i] - want).abs() / kappa[i]);
        eta[i] = want;
    }
    let mut saturation_margin = f64::INFINITY;
    for i in 0..eta.len() {
        if !support.contains(i) {
            saturation_margin = saturation_margin.min(kappa[i] - eta[i].abs());
        }
    }
    let box_ok = support_residual <= SIGN_TOLERANCE
        && eta.iter().zip(kappa.iter()).all(|(e, k)| {
            e.is_finite() && e.abs() <= k * (1.0 + crate::regularizers::SATURATION_TOLERANCE)
        });
    let subgradient = if box_ok && saturation(&eta, kappa).1.is_some() {
        l1.subgradient(eta.clone()).ok()
    } else {
        None
    };
    Assembled {
        eta_coeffs: eta,
        eta: subgradient,
        support_residual,
        saturation_margin,
        box_ok,
    }
}

fn support_and_signs(basis: &WaveletBasis, h_star: &Vector) -> Result<(IndexSet, Vector)> {
    let c = basis.analyze(h_star)?;
    let support = c.support();
    let signs = Vector::from_fn(c.len(), |i, _| {
        if support.contains(i) {
            c.values()[i].signum()
        } else {
            0.0
        }
    });
    Ok((support, signs))
}

fn check_dims(
    w: &LinearMap,
    a: &LinearMap,
    basis: &WaveletBasis,
    l1: &WeightedL1,
    x_star: &Vector,
) -> Result<()> {
    check_len("certificate W vs A", w.codomain_dim(), a.domain_dim())?;
    check_len("certificate basis", w.codomain_dim(), basis.dim())?;
    check_len("certificate weights", w.codomain_dim(), l1.dim())?;
    check_len("certificate x*", w.domain_dim(), x_star.len())
}

/// Least-squares `u`, then the minimum-norm `v` meeting the support
/// equalities. When that `v` violates the off-support box, `v` is moved
/// within the affine solution set to minimize `max_{λ∉supp} |η_λ|/κ_λ`.
pub fn find_certificate_relaxed(
    w: &LinearMap,
    a: &LinearMap,
    basis: &WaveletBasis,
    l1: &WeightedL1,
    x_star: &Vector,
) -> Result<SourceCertificateRelaxed> {
    check_dims(w, a, basis, l1, x_star)?;
    let h_star = w.apply(x_star)?;
    let (support, signs) = support_and_signs(basis, &h_star)?;

    let wm = w.materialize()?;
    let wt = wm.transpose();
    let u = lstsq(&wt, x_star, "least-squares source element u")?;
    let residual_u = (&wt * &u - x_star).norm();
    let u_ok = residual_u <= SOURCE_TOLERANCE * x_star.norm();

    let b_mat = analyze_columns(basis, &a.materialize()?.transpose());
    let b_u = basis.analyze(&u)?.into_values();
    let s = support.as_slice();
    let c_mat = select_rows(&b_mat, s);
    let kappa = l1.kappa();
    let d = Vector::from_fn(s.len(), |k, _| kappa[s[k]] * signs[s[k]] + b_u[s[k]]);
    let mut v = lstsq(&c_mat, &d, "minimum-norm source element v")?;

    let mut assembled = assemble(l1, &(&b_mat * &v - &b_u), &support, &signs);
    let mut refined = false;
    if !(assembled.box_ok && assembled.saturation_margin > 0.0) && support.len() < b_mat.nrows() {
        let off: Vec<usize> = support.complement(b_mat.nrows()).iter().collect();
        let n_mat = null_space(&c_mat);
        if n_mat.ncols() > 0 {
            let b_off = select_rows(&b_mat, &off);
            let inv_k = Vector::from_fn(off.len(), |i, _| 1.0 / kappa[off[i]]);
            let b_u_off = Vector::from_fn(off.len(), |i, _| b_u[off[i]]);
            let r0 = (&b_off * &v - b_u_off).component_mul(&inv_k);
            let bn = &b_off * &n_mat;
            let g = Matrix::from_fn(bn.nrows(), bn.ncols(), |i, j| bn[(i, j)] * inv_k[i]);
            let z = lawson_minimax(&g, &r0)?;
            let candidate = &v + &n_mat * z;
            let next = assemble(l1, &(&b_mat * &candidate - &b_u), &support, &signs);
            if next.saturation_margin > assembled.saturation_margin
                && next.support_residual <= SIGN_TOLERANCE
            {
                v = candidate;
                assembled = next;
                refined = true;
            }
        }
    }

    let strictly_complementary = assembled.saturation_margin > 0.0;
    let valid = u_ok && assembled.box_ok && assembled.eta.is_some();
    Ok(SourceCertificateRelaxed {
        u,
        v,
        eta_coeffs: assembled.eta_coeffs,
        eta: assembled.eta,
        support,
        residual_u,
        support_residual: assembled.support_residual,
        saturation_margin: assembled.saturation_margin,
        strictly_complementary,
        refined,
        valid,
    })
}

/// Searches `ν` with `W*A*ν = x⋆ + W*η`, `η ∈ ∂‖h⋆‖₁,κ`.
///
/// For invertible `W` the relaxed certificate gives `ν = v` directly.
/// Otherwise a least-squares step in `ν` alternates with a box-projected
/// least-squares step in the off-support entries of `η`.
pub fn find_certificate_strict(
    w: &LinearMap,
    a: &LinearMap,
    basis: &WaveletBasis,
    l1: &WeightedL1,
    x_star: &Vector,
) -> Result<SourceCertificateStrict> {
    check_dims(w, a, basis, l1, x_star)?;
    let h_star = w.apply(x_star)?;
    let (support, signs) = support_and_signs(basis, &h_star)?;
    let wm = w.materialize()?;
    let am = a.materialize()?;
    // K = W*A*, P = W*Φ.
    let k_mat = wm.tr_mul(&am.transpose());
    let p_mat = {
        let mut phi = Matrix::identity(basis.dim(), basis.dim());
        for mut col in phi.column_iter_mut() {
            let mut c: Vec<f64> = col.iter().copied().collect();
            basis.synthesize_in_place(&mut c);
            col.copy_from_slice(&c);
        }
        wm.tr_mul(&phi)
    };
    let kappa = l1.kappa();
    let split = |nu: &Vector, eta: &Vector| (&k_mat * nu - x_star - &p_mat * eta).norm();

    let square = wm.nrows() == wm.ncols();
    let invertible = square && {
        let sv = wm.singular_values();
        sv.min() > INJECTIVITY_TOLERANCE * sv.max()
    };

    let (nu, raw_eta, alternations) = if invertible {
        let relaxed = find_certificate_relaxed(w, a, basis, l1, x_star)?;
        let eta = relaxed.eta_coeffs.clone();
        (relaxed.v, eta, 0)
    } else {
        let off: Vec<usize> = support.complement(basis.dim()).iter().collect();
        let p_off = Matrix::from_fn(p_mat.nrows(), off.len(), |i, j| p_mat[(i, off[j])]);
        let mut eta = Vector::from_fn(basis.dim(), |i, _| kappa[i] * signs[i]);
        let mut nu = lstsq(
            &k_mat,
            &(x_star + &p_mat * &eta),
            "strict source element nu",
        )?;
        let mut res = split(&nu, &eta);
        let mut count = 0;
        for it in 1..=STRICT_MAX_ALTERNATIONS {
            count = it;
            if off.is_empty() {
                break;
            }
            let mut fixed = eta.clone();
            for &i in &off {
                fixed[i] = 0.0;
            }
            let target = &k_mat * &nu - x_star - &p_mat * &fixed;
            let e_off = lstsq(&p_off, &target, "strict subgradient fill")?;
            for (k, &i) in off.iter().enumerate() {
                eta[i] = e_off[k].clamp(-kappa[i], kappa[i]);
            }
            nu = lstsq(
                &k_mat,
                &(x_star + &p_mat * &eta),
                "strict source element nu",
            )?;
            let next = split(&nu, &eta);
            let done =
                (res - next).abs() <= STRICT_ALTERNATION_TOL || next <= STRICT_ALTERNATION_TOL;
            res = next;
            if done {
                break;
            }
        }
        (nu, eta, count)
    };

    let assembled = assemble(l1, &raw_eta, &support, &signs);
    let split_residual = split(&nu, &assembled.eta_coeffs);
    let strictly_complementary = assembled.saturation_margin > 0.0;
    let valid = split_residual <= SOURCE_TOLERANCE && assembled.box_ok && assembled.eta.is_some();
    Ok(SourceCertificateStrict {
        nu,
        xi: x_star.clone(),
        eta_coeffs: assembled.eta_coeffs,
        eta: assembled.eta,
        support,
        split_residual,
        saturation_margin: assembled.saturation_margin,
        strictly_complementary,
        alternations,
        valid,
    })
}

/// Constants of the linear error estimates under `α = Cδ`.
#[derive(Clone, Debug, PartialEq)]
pub struct RateConstants {
    pub c: f64,
    pub d: f64,
    pub big_c: f64,
    /// `‖(u, v)‖` in the relaxed case, `‖ν‖` in the strict case.
    pub norm_uv_or_nu: f64,
    pub m_eta: f64,
    pub a_norm: f64,
    pub a_inv_norm: f64,
}

impl RateConstants {
    /// `c = (1 + C‖s‖)²/(2C)` and
    /// `d = 2‖A_Ω⁻¹‖(1 + C‖s‖) + (1 + ‖A_Ω⁻¹‖‖A‖)/m[η]·c`.
    pub fn from_ingredients(
        norm: f64,
        m_eta: f64,
        a_inv_norm: f64,
        a_norm: f64,
        big_c: f64,
    ) -> Result<Self> {
        if !(big_c > 0.0 && big_c.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "C must be positive, got {big_c}"
            )));
        }
        if !(m_eta > 0.0) {
            return Err(Error::UndefinedConstants(format!(
                "margin m[eta] = {m_eta} is not positive"
            )));
        }
        if !a_inv_norm.is_finite() {
            return Err(Error::UndefinedConstants(
                "restricted operator is not injective".into(),
            ));
        }
        let (c, d) = Self::formulas(norm, m_eta, a_inv_norm, a_norm, big_c);
        Ok(RateConstants {
            c,
            d,
            big_c,
            norm_uv_or_nu: norm,
            m_eta,
            a_norm,
            a_inv_norm,
        })
    }

    fn formulas(norm: f64, m_eta: f64, a_inv_norm: f64, a_norm: f64, big_c: f64) -> (f64, f64) {
        let lin = 1.0 + big_c * norm;
        let c = lin * lin / (2.0 * big_c);
        let d = 2.0 * a_inv_norm * lin + (1.0 + a_inv_norm * a_norm) / m_eta * c;
        (c, d)
    }

    /// `(c, d)` recomputed from the stored ingredients.
    pub fn recompute(&self) -> (f64, f64) {
        Self::formulas(
            self.norm_uv_or_nu,
            self.m_eta,
            self.a_inv_norm,
            self.a_norm,
            self.big_c,
        )
    }

    pub fn is_closed(&self) -> bool {
        let (c, d) = self.recompute();
        (c - self.c).abs() <= CLOSURE_TOLERANCE * self.c.abs()
            && (d - self.d).abs() <= CLOSURE_TOLERANCE * self.d.abs()
    }

    pub fn summary(&self) -> Vec<(&'static str, String)> {
        vec![
            ("c", format!("{:?}", self.c)),
            ("d", format!("{:?}", self.d)),
            ("C", format!("{:?}", self.big_c)),
            ("norm", format!("{:?}", self.norm_uv_or_nu)),
            ("m_eta", format!("{:?}", self.m_eta)),
            ("a_norm", format!("{:?}", self.a_norm)),
            ("a_inv_norm", format!("{:?}", self.a_inv_norm)),
        ]
    }
}

fn constants_for(
    eta: Option<&Subgradient>,
    valid: bool,
    norm: f64,
    inj: &InjectivityReport,
    big_c: f64,
    a_norm: f64,
) -> Result<RateConstants> {
    let eta = match (valid, eta) {
        (true, Some(e)) => e,
        _ => return Err(Error::UndefinedConstants("certificate is not valid".into())),
    };
    if &inj.omega != eta.omega() {
        return Err(Error::UndefinedConstants(format!(
            "injectivity report is for {} but the saturated set is {}",
            inj.omega,
            eta.omega()
        )));
    }
    if !inj.injective {
        return Err(Error::UndefinedConstants(
            "restricted operator is not injective".into(),
        ));
    }
    RateConstants::from_ingredients(norm, eta.margin(), inj.a_omega_inv_norm, a_norm, big_c)
}

pub fn rate_constants_relaxed(
    cert: &SourceCertificateRelaxed,
    inj: &InjectivityReport,
    big_c: f64,
    a_norm: f64,
) -> Result<RateConstants> {
    constants_for(
        cert.eta.as_ref(),
        cert.valid,
        cert.norm(),
        inj,
        big_c,
        a_norm,
    )
}

pub fn rate_constants_strict(
    cert: &SourceCertificateStrict,
    inj: &InjectivityReport,
    big_c: f64,
    a_norm: f64,
) -> Result<RateConstants> {
    constants_for(
        cert.eta.as_ref(),
        cert.valid,
        cert.nu.norm(),
        inj,
        big_c,
        a_norm,
    )
}

fn slack(rhs: f64) -> f64 {
    BOUND_REL_SLACK * rhs.abs() + BOUND_ABS_SLACK
}

/// Both sides of the residual and Bregman estimates for Tikhonov
/// regularization with a source element.
#[derive(Clone, Debug, PartialEq)]
pub struct VariationalReport {
    pub delta: f64,
    pub residual: f64,
    pub residual_bound: f64,
    pub bregman: f64,
    pub bregman_bound: f64,
    pub pass_residual: bool,
    pub pass_bregman: bool,
}

impl VariationalReport {
    pub fn passed(&self) -> bool {
        self.pass_residual && self.pass_bregman
    }
}

/// `‖Mx − yδ‖ ≤ δ + 2α‖w‖` and `D ≤ (δ + α‖w‖)²/(2α)` with
/// `δ = ‖yδ − y⋆‖`, `w = source_elem` and `D = q_bregman`. Each comparison
/// allows `1e-6·rhs + 1e-12`.
pub fn check_variational_bounds(
    m: &LinearMap,
    source_elem: &Vector,
    x_sol: &Vector,
    y_delta: &Vector,
    y_star: &Vector,
    alpha: f64,
    q_bregman: f64,
) -> Result<VariationalReport> {
    check_len("source element", m.codomain_dim(), source_elem.len())?;
    check_len("exact data", m.codomain_dim(), y_star.len())?;
    if !(alpha > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    let delta = (y_delta - y_star).norm();
    let residual = (m.apply(x_sol)? - y_delta).norm();
    let w = source_elem.norm();
    let residual_bound = delta + 2.0 * alpha * w;
    let bregman_bound = (delta + alpha * w).powi(2) / (2.0 * alpha);
    Ok(VariationalReport {
        delta,
        residual,
        residual_bound,
        bregman: q_bregman,
        bregman_bound,
        pass_residual: residual <= residual_bound + slack(residual_bound),
        pass_bregman: q_bregman <= bregman_bound + slack(bregman_bound),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct NormBoundReport {
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

fn norm_bound_common(
    a: &LinearMap,
    basis: &WaveletBasis,
    omega: &IndexSet,
    h: &Vector,
    h_star: &Vector,
    inj: &InjectivityReport,
) -> Result<(f64, f64, f64)> {
    check_len("norm bound h", a.domain_dim(), h.len())?;
    check_len("norm bound h*", a.domain_dim(), h_star.len())?;
    if &inj.omega != omega || !inj.injective {
        return Err(Error::InvalidParameter(format!(
            "injectivity report for {} does not certify {}",
            inj.omega, omega
        )));
    }
    let cs = basis.analyze(h_star)?;
    let off_energy: f64 = cs
        .values()
        .iter()
        .enumerate()
        .filter(|(i, _)| !omega.contains(*i))
        .map(|(_, v)| v * v)
        .sum::<f64>()
        .sqrt();
    if off_energy > OFF_SUPPORT_TOLERANCE * cs.norm().max(1.0) {
        return Err(Error::InvalidParameter(format!(
            "h* has off-support energy {off_energy:e} outside {omega}"
        )));
    }
    let lhs = (h - h_star).norm();
    let data = (a.apply(&(h - h_star))?).norm();
    Ok((
        lhs,
        inj.a_omega_inv_norm * data,
        1.0 + inj.a_omega_inv_norm * inj.a_norm,
    ))
}

/// `‖h − h⋆‖ ≤ ‖A_Ω⁻¹‖‖Ah − Ah⋆‖ + (1 + ‖A_Ω⁻¹‖‖A‖) Σ_{λ∉Ω} |⟨φ_λ, h⟩|`.
pub fn check_norm_bound(
    a: &LinearMap,
    basis: &WaveletBasis,
    omega: &IndexSet,
    h: &Vector,
    h_star: &Vector,
    inj: &InjectivityReport,
) -> Result<NormBoundReport> {
    let (lhs, data_term, factor) = norm_bound_common(a, basis, omega, h, h_star, inj)?;
    let ch = basis.analyze(h)?;
    let off_l1: f64 = ch
        .values()
        .iter()
        .enumerate()
        .filter(|(i, _)| !omega.contains(*i))
        .map(|(_, v)| v.abs())
        .sum();
    let rhs = data_term + factor * off_l1;
    Ok(NormBoundReport {
        lhs,
        rhs,
        pass: lhs <= rhs * (1.0 + 1e-12) + BOUND_ABS_SLACK,
    })
}

/// `‖h − h⋆‖ ≤ ‖A_Ω⁻¹‖‖Ah − Ah⋆‖ + (1 + ‖A_Ω⁻¹‖‖A‖)/m[η] · D_η(h, h⋆)`
/// with `Ω = Ω[η]`.
pub fn check_norm_bound_bregman(
    a: &LinearMap,
    l1: &WeightedL1,
    eta: &Subgradient,
    h: &Vector,
    h_star: &Vector,
    inj: &InjectivityReport,
) -> Result<NormBoundReport> {
    let (lhs, data_term, factor) = norm_bound_common(a, l1.basis(), eta.omega(), h, h_star, inj)?;
    let bregman = l1.bregman(eta, h, h_star)?;
    let rhs = data_term + factor / eta.margin() * bregman;
    Ok(NormBoundReport {
        lhs,
        rhs,
        pass: lhs <= rhs * (1.0 + 1e-12) + BOUND_ABS_SLACK,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_constant_unit_example() {
        let rc = RateConstants::from_ingredients(1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(rc.c, 2.0);
        assert_eq!(rc.d, 8.0);
        assert!(rc.is_closed());
    }

    #[test]
    fn zero_margin_is_rejected() {
        assert!(matches!(
            RateConstants::from_ingredients(1.0, 0.0, 1.0, 1.0, 1.0),
            Err(Error::UndefinedConstants(_))
        ));
    }

    #[test]
    fn null_space_is_orthogonal() {
        let c = Matrix::from_row_slice(1, 3, &[1.0, 1.0, 0.0]);
        let n = null_space(&c);
        assert_eq!(n.ncols(), 2);
        assert!((&c * &n).amax() < 1e-12);
        assert!((n.tr_mul(&n) - Matrix::identity(2, 2)).amax() < 1e-12);
    }

    #[test]
    fn lawson_reaches_minimax() {
        // min_z max(|1 + z|, |1 - z|, |z|) = 1 at z = 0; shifted: |2 + z|, |z|.
        let g = Matrix::from_column_slice(2, 1, &[1.0, 1.0]);
        let r0 = Vector::from_vec(vec![2.0, 0.0]);
        let z = lawson_minimax(&g, &r0).unwrap();
        assert!((z[0] + 1.0).abs() < 1e-6);
    }
}
