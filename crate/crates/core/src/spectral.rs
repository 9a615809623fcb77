//! Spectral feature bases of transition operators and subspace geometry.
//!
//! Eigen-basis functions (EBFs) are right eigenvectors of a transition matrix.
//! Resolvent singular basis functions (RSBFs) are the leading eigenvectors of
//! `ΨΣΨᵀ` with `Ψ = (I - γP)⁻¹`. Subspaces are compared through principal
//! angles.

use std::cmp::Ordering;
use std::io::Write;

use log::warn;
use nalgebra::{Complex, DMatrix, DVector};
use serde_json::json;

use crate::error::{config, Error, Result};
use crate::linalg::{canonical_basis, check_row_stochastic, fix_sign, psd_sqrt, require_finite, require_square};

pub type Complex64 = Complex<f64>;

/// Default tolerance for treating two eigenvalues or magnitudes as equal.
pub const DEFAULT_GAP_TOL: f64 = 1e-8;

const IMAG_TOL: f64 = 1e-10;
const RANK_TOL: f64 = 1e-10;

/// Orthonormal basis of a subspace of `R^n`.
#[derive(Clone, Debug, PartialEq)]
pub struct Subspace {
    basis: DMatrix<f64>,
}

impl Subspace {
    /// Wraps a matrix whose columns are already orthonormal within `1e-10`.
    pub fn new(basis: DMatrix<f64>) -> Result<Self> {
        require_finite(&basis, "subspace basis")?;
        let k = basis.ncols();
        let gram = basis.transpose() * &basis;
        let err = (gram - DMatrix::identity(k, k)).amax();
        if err > 1e-10 {
            return Err(config(format!("basis columns are not orthonormal (error {err:e})")));
        }
        Ok(Subspace { basis })
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    /// Orthogonal projection `Π_S v`.
    pub fn project(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.basis * (self.basis.transpose() * v)
    }

    pub fn projector(&self) -> DMatrix<f64> {
        &self.basis * self.basis.transpose()
    }

    /// Span of this subspace together with `v`.
    pub fn extend(&self, v: &DVector<f64>) -> Result<Subspace> {
        let mut m = self.basis.clone().insert_column(self.dim(), 0.0);
        m.set_column(self.dim(), v);
        orthonormalize(&m)
    }

    /// CSV with one basis vector per column (`b0, b1, ...`).
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record((0..self.dim()).map(|j| format!("b{j}")))?;
        for row in self.basis.row_iter() {
            w.write_record(row.iter().map(|x| format!("{x:e}")))?;
        }
        w.flush().map_err(|source| Error::Io {
            path: "<csv>".into(),
            source,
        })?;
        Ok(())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    pub fn from_csv(text: &str) -> Result<Subspace> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let k = r.headers()?.len();
        let mut data = Vec::new();
        let mut n = 0;
        for rec in r.records() {
            let rec = rec?;
            for field in rec.iter() {
                data.push(
                    field
                        .trim()
                        .parse::<f64>()
                        .map_err(|e| config(format!("bad number {field:?}: {e}")))?,
                );
            }
            n += 1;
        }
        Subspace::new(DMatrix::from_row_slice(n, k, &data))
    }
}

/// Principal angles between two subspaces, ascending.
#[derive(Clone, Debug, PartialEq)]
pub struct PrincipalAngles {
    pub angles: Vec<f64>,
    pub distance: f64,
}

/// Eigen-decomposition of a square real matrix.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    /// Ordered by descending real part, ties by descending imaginary part.
    pub eigenvalues: Vec<Complex64>,
    /// Unit-norm right eigenvectors as columns, matching `eigenvalues`.
    pub right_vectors: DMatrix<Complex64>,
    /// Real spectrum with pairwise distinct magnitudes.
    pub assumption_ok: bool,
    pub diagnostics: Vec<String>,
}

impl SpectralDecomposition {
    /// `{eigenvalues: [[re, im]], vectors: rows of [re, im] pairs, warnings}`.
    pub fn to_json(&self) -> Result<String> {
        let eig: Vec<[f64; 2]> = self.eigenvalues.iter().map(|z| [z.re, z.im]).collect();
        let vectors: Vec<Vec<[f64; 2]>> = self
            .right_vectors
            .row_iter()
            .map(|row| row.iter().map(|z| [z.re, z.im]).collect())
            .collect();
        let doc = json!({
            "eigenvalues": eig,
            "vectors": vectors,
            "warnings": self.diagnostics,
        });
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn is_real(&self, i: usize) -> bool {
        self.eigenvalues[i].im.abs() <= IMAG_TOL
    }
}

fn order_eigenvalues(a: &Complex64, b: &Complex64) -> Ordering {
    b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im))
}

/// Unit norm, first entry above the noise floor made real and positive.
fn normalize_phase(v: &mut DVector<Complex64>) {
    let norm = v.norm();
    if norm > 0.0 {
        v.unscale_mut(norm);
    }
    let cutoff = 1e-10 * v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if let Some(first) = v.iter().find(|z| z.norm() > cutoff).copied() {
        let phase = first.conj() / first.norm();
        for z in v.iter_mut() {
            *z *= phase;
        }
    }
}

/// Orthonormal basis of the `dim`-dimensional numerical null space of `m`.
fn null_space_real(m: &DMatrix<f64>, dim: usize) -> (DMatrix<f64>, Vec<f64>) {
    let n = m.ncols();
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested v_t");
    let sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    let rows: Vec<usize> = (n - dim..n).collect();
    let basis = v_t.select_rows(&rows).transpose();
    (basis, sv)
}

fn null_space_complex(m: &DMatrix<Complex64>, dim: usize) -> (DMatrix<Complex64>, Vec<f64>) {
    let n = m.ncols();
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested v_t");
    let sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    let rows: Vec<usize> = (n - dim..n).collect();
    let basis = v_t.select_rows(&rows).adjoint();
    (basis, sv)
}

fn count_small(sv: &[f64], tol: f64) -> usize {
    sv.iter().filter(|s| **s <= tol).count()
}

/// Full eigen-decomposition of `p`.
///
/// Eigenvalues within `gap_tol` of each other are grouped and the group's
/// vectors are taken as an orthonormal basis of the null space of `P - λ̄I`.
/// A group whose null space is too small is reported as not diagonalisable
/// and represented by its generalized eigenspace instead.
pub fn eigen_decompose(p: &DMatrix<f64>, gap_tol: f64) -> Result<SpectralDecomposition> {
    let n = require_square(p, "transition matrix")?;
    require_finite(p, "transition matrix")?;
    if n == 0 {
        return Err(config("empty matrix"));
    }
    let scale = p.norm().max(1.0);
    let cluster_tol = gap_tol.max(1e-12 * scale);
    let null_tol = 1e-7 * scale;

    let mut eigenvalues: Vec<Complex64> = p.complex_eigenvalues().iter().copied().collect();
    eigenvalues.sort_by(order_eigenvalues);

    let mut clusters: Vec<(usize, usize)> = Vec::new();
    let mut start = 0;
    for i in 1..=n {
        if i == n || (eigenvalues[i] - eigenvalues[i - 1]).norm() > cluster_tol {
            clusters.push((start, i));
            start = i;
        }
    }

    let mut diagnostics = Vec::new();
    let mut vectors = DMatrix::<Complex64>::zeros(n, n);
    let mut worst_residual = 0.0f64;
    let pc = p.map(|x| Complex64::new(x, 0.0));
    let mut done: Vec<(Complex64, usize, usize)> = Vec::new();

    for &(lo, hi) in &clusters {
        let m = hi - lo;
        let mean: Complex64 = eigenvalues[lo..hi].iter().sum::<Complex64>() / m as f64;
        if m > 1 {
            diagnostics.push(format!(
                "eigenvalue {:.6}{:+.6}i has multiplicity {m}",
                mean.re, mean.im
            ));
        }
        if mean.im.abs() <= IMAG_TOL {
            let shifted = p - DMatrix::identity(n, n) * mean.re;
            let (mut basis, sv) = null_space_real(&shifted, m);
            let defective = count_small(&sv, null_tol) < m;
            if defective {
                diagnostics.push(format!(
                    "not diagonalisable: eigenvalue {:.6} has a {}-dimensional eigenspace but multiplicity {m}",
                    mean.re,
                    count_small(&sv, null_tol)
                ));
                let mut power = shifted.clone();
                for _ in 1..m {
                    power = &power * &shifted;
                }
                basis = null_space_real(&power, m).0;
            }
            let basis = if m > 1 {
                canonical_basis(&basis)
            } else {
                let mut v = basis.column(0).clone_owned();
                fix_sign(&mut v);
                DMatrix::from_column_slice(n, 1, v.as_slice())
            };
            if !defective {
                let restricted = basis.transpose() * p * &basis;
                worst_residual = worst_residual.max((p * &basis - &basis * restricted).norm() / scale);
            }
            for j in 0..m {
                vectors.set_column(lo + j, &basis.column(j).map(|x| Complex64::new(x, 0.0)));
            }
        } else {
            let partner = done
                .iter()
                .find(|(z, size, _)| *size == m && (z.conj() - mean).norm() <= cluster_tol);
            let basis = if let Some(&(_, _, plo)) = partner {
                vectors.columns(plo, m).map(|z| z.conj())
            } else {
                let shifted = &pc - DMatrix::<Complex64>::identity(n, n) * mean;
                let (mut basis, sv) = null_space_complex(&shifted, m);
                let defective = count_small(&sv, null_tol) < m;
                if defective {
                    diagnostics.push(format!(
                        "not diagonalisable: complex eigenvalue {:.6}{:+.6}i is defective",
                        mean.re, mean.im
                    ));
                    let mut power = shifted.clone();
                    for _ in 1..m {
                        power = &power * &shifted;
                    }
                    basis = null_space_complex(&power, m).0;
                } else {
                    let restricted = basis.adjoint() * &pc * &basis;
                    worst_residual = worst_residual.max((&pc * &basis - &basis * restricted).norm() / scale);
                }
                for j in 0..m {
                    let mut v = basis.column(j).clone_owned();
                    normalize_phase(&mut v);
                    basis.set_column(j, &v);
                }
                basis
            };
            for j in 0..m {
                vectors.set_column(lo + j, &basis.column(j));
            }
        }
        done.push((mean, m, lo));
    }

    if worst_residual > 1e-8 {
        return Err(Error::Numerical {
            context: "eigenvector residual ||PU - UΛ||".into(),
            residual: worst_residual,
        });
    }

    let complex_count = eigenvalues.iter().filter(|z| z.im.abs() > IMAG_TOL).count();
    if complex_count > 0 {
        diagnostics.push(format!("{complex_count} eigenvalues are complex"));
    }
    let mut mags: Vec<f64> = eigenvalues.iter().map(|z| z.norm()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    let repeated = mags.windows(2).filter(|w| w[0] - w[1] <= gap_tol).count();
    if repeated > 0 {
        diagnostics.push(format!(
            "{repeated} consecutive eigenvalue magnitudes coincide within {gap_tol:e}"
        ));
    }
    let cond = vectors.clone().svd(false, false).singular_values;
    let smallest = cond.iter().copied().fold(f64::INFINITY, f64::min);
    if smallest < 1e-6 {
        diagnostics.push(format!(
            "eigenvector matrix is nearly singular (smallest singular value {smallest:e}); P may not be diagonalisable"
        ));
    }
    Ok(SpectralDecomposition {
        eigenvalues,
        right_vectors: vectors,
        assumption_ok: complex_count == 0 && repeated == 0,
        diagnostics,
    })
}

/// Span of the leading `k` eigenvectors of `p`, logging any diagnostics.
pub fn ebf(p: &DMatrix<f64>, k: usize) -> Result<Subspace> {
    let (s, warnings) = ebf_with_diagnostics(p, k, DEFAULT_GAP_TOL)?;
    for w in warnings {
        warn!("ebf: {w}");
    }
    Ok(s)
}

/// Like [`ebf`] but returns the warnings instead of logging them.
///
/// Complex pairs contribute their real and imaginary parts. When `k` cuts a
/// complex pair or a repeated eigenvalue, the first vectors of that group are
/// used and a warning is added.
pub fn ebf_with_diagnostics(p: &DMatrix<f64>, k: usize, gap_tol: f64) -> Result<(Subspace, Vec<String>)> {
    let n = require_square(p, "transition matrix")?;
    if k == 0 || k > n {
        return Err(config(format!("feature count {k} outside 1..={n}")));
    }
    let dec = eigen_decompose(p, gap_tol)?;
    let mut warnings = Vec::new();
    if !dec.assumption_ok {
        warnings.extend(dec.diagnostics.iter().cloned());
    }
    let mut cols: Vec<DVector<f64>> = Vec::with_capacity(k);
    let mut i = 0;
    while cols.len() < k {
        let u = dec.right_vectors.column(i);
        if dec.is_real(i) {
            cols.push(u.map(|z| z.re));
            i += 1;
        } else {
            cols.push(u.map(|z| z.re));
            if cols.len() < k {
                cols.push(u.map(|z| z.im));
            } else {
                warnings.push(format!("K = {k} splits a complex conjugate pair; kept its real part"));
            }
            // skip the conjugate partner, which spans the same real plane
            i += 2;
        }
    }
    if k < n {
        let a = dec.eigenvalues[k - 1];
        let b = dec.eigenvalues[k];
        if (a - b).norm() <= gap_tol.max(1e-12) {
            warnings.push(format!("K = {k} cuts through a repeated eigenvalue {:.6}", a.re));
        }
    }
    let m = DMatrix::from_columns(&cols);
    Ok((orthonormalize(&m)?, warnings))
}

/// `Ψ = (I - γP)⁻¹` for a row-stochastic `p`.
pub fn resolvent(p: &DMatrix<f64>, gamma: f64) -> Result<DMatrix<f64>> {
    let n = require_square(p, "transition matrix")?;
    check_row_stochastic(p, 1e-12)?;
    crate::mdp::check_discount(gamma)?;
    let a = DMatrix::identity(n, n) - p * gamma;
    let psi = a
        .clone()
        .lu()
        .solve(&DMatrix::identity(n, n))
        .ok_or_else(|| Error::Numerical {
            context: "resolvent solve".into(),
            residual: f64::INFINITY,
        })?;
    let residual = (&psi * &a - DMatrix::identity(n, n)).norm();
    if residual.is_nan() || residual > 1e-10 {
        return Err(Error::Numerical {
            context: "resolvent Ψ(I - γP) = I".into(),
            residual,
        });
    }
    Ok(psi)
}

/// Leading `k` resolvent singular basis functions, logging any warnings.
pub fn rsbf(p: &DMatrix<f64>, gamma: f64, k: usize, sigma: &DMatrix<f64>) -> Result<Subspace> {
    let (s, warnings) = rsbf_with_diagnostics(p, gamma, k, sigma)?;
    for w in warnings {
        warn!("rsbf: {w}");
    }
    Ok(s)
}

/// Top-`k` eigenvectors of `ΨΣΨᵀ`, i.e. left singular vectors of `ΨΣ^{1/2}`.
///
/// Tied singular values are resolved by taking the canonical basis of the
/// tied eigenspace, so a fully degenerate spectrum yields `e_1..e_k`.
pub fn rsbf_with_diagnostics(
    p: &DMatrix<f64>,
    gamma: f64,
    k: usize,
    sigma: &DMatrix<f64>,
) -> Result<(Subspace, Vec<String>)> {
    let n = require_square(p, "transition matrix")?;
    if k == 0 || k > n {
        return Err(config(format!("feature count {k} outside 1..={n}")));
    }
    if sigma.shape() != (n, n) {
        return Err(config(format!(
            "covariance is {}x{}, expected {n}x{n}",
            sigma.nrows(),
            sigma.ncols()
        )));
    }
    let root = psd_sqrt(sigma)?;
    let psi = resolvent(p, gamma)?;
    let factor = &psi * root;
    let cov = &factor * factor.transpose();
    let cov = (&cov + cov.transpose()) * 0.5;
    let eig = cov.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let tie_tol = DEFAULT_GAP_TOL * values[0].abs().max(1.0);

    let mut warnings = Vec::new();
    let mut cols: Vec<DVector<f64>> = Vec::with_capacity(k);
    let mut lo = 0;
    while cols.len() < k {
        let mut hi = lo + 1;
        while hi < n && values[hi - 1] - values[hi] <= tie_tol {
            hi += 1;
        }
        let group = DMatrix::from_columns(
            &order[lo..hi]
                .iter()
                .map(|&i| eig.eigenvectors.column(i).clone_owned())
                .collect::<Vec<_>>(),
        );
        let group = canonical_basis(&group);
        let take = (hi - lo).min(k - cols.len());
        if take < hi - lo {
            warnings.push(format!(
                "singular value {:.6e} is repeated {} times across the cut at K = {k}; using canonical directions",
                values[lo].max(0.0).sqrt(),
                hi - lo
            ));
        }
        for j in 0..take {
            cols.push(group.column(j).clone_owned());
        }
        lo = hi;
    }
    let m = DMatrix::from_columns(&cols);
    Ok((orthonormalize(&m)?, warnings))
}

/// Orthonormal basis of the column span of `m`.
pub fn orthonormalize(m: &DMatrix<f64>) -> Result<Subspace> {
    require_finite(m, "matrix")?;
    let k = m.ncols();
    if k == 0 || m.nrows() < k {
        return Err(Error::Rank {
            rank: m.nrows().min(k),
            expected: k,
        });
    }
    let svd = m.clone().svd(true, false);
    let sv = &svd.singular_values;
    let top = sv[0];
    let rank = sv.iter().filter(|s| **s > RANK_TOL * top && **s > 0.0).count();
    if rank < k {
        return Err(Error::Rank { rank, expected: k });
    }
    let u = svd.u.expect("requested u").columns(0, k).clone_owned();
    Ok(Subspace { basis: u })
}

fn lexicographic(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Ordering {
    a.ncols().cmp(&b.ncols()).then_with(|| {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| *o != Ordering::Equal)
            .unwrap_or(Ordering::Equal)
    })
}

/// Principal angles between subspaces of possibly different dimension.
///
/// Returns `min(dim1, dim2)` angles. Small angles come from the sines
/// (singular values of `(I - B₁B₁ᵀ)B₂`), large ones from the cosines
/// (singular values of `B₁ᵀB₂`, clamped to `[0, 1]`), which keeps both ends
/// accurate. The computation is ordered canonically so that swapping the
/// arguments gives bit-identical results.
pub fn principal_angles(s1: &Subspace, s2: &Subspace) -> Result<PrincipalAngles> {
    if s1.ambient_dim() != s2.ambient_dim() {
        return Err(config(format!(
            "subspaces live in R^{} and R^{}",
            s1.ambient_dim(),
            s2.ambient_dim()
        )));
    }
    // the larger subspace plays B₁
    let (big, small) = match lexicographic(&s1.basis, &s2.basis) {
        Ordering::Less => (s2, s1),
        _ => (s1, s2),
    };
    let k = small.dim();
    let b1 = &big.basis;
    let b2 = &small.basis;
    let cross = b1.transpose() * b2;
    let mut cosines: Vec<f64> = cross
        .svd(false, false)
        .singular_values
        .iter()
        .map(|s| s.clamp(0.0, 1.0))
        .collect();
    cosines.sort_by(|a, b| b.total_cmp(a));
    let residual = b2 - b1 * (b1.transpose() * b2);
    let mut sines: Vec<f64> = residual
        .svd(false, false)
        .singular_values
        .iter()
        .map(|s| s.clamp(0.0, 1.0))
        .collect();
    sines.sort_by(|a, b| a.total_cmp(b));
    let angles: Vec<f64> = (0..k)
        .map(|i| {
            if cosines[i] * cosines[i] >= 0.5 {
                sines[i].asin()
            } else {
                cosines[i].acos()
            }
        })
        .collect();
    let mut angles = angles;
    angles.sort_by(|a, b| a.total_cmp(b));
    let distance = angles.iter().map(|a| a * a).sum::<f64>().sqrt();
    Ok(PrincipalAngles { angles, distance })
}

/// Grassmann distance between equal-dimension subspaces.
pub fn grassmann_distance(s1: &Subspace, s2: &Subspace) -> Result<PrincipalAngles> {
    if s1.dim() != s2.dim() {
        return Err(config(format!(
            "Grassmann distance needs equal dimensions, got {} and {}",
            s1.dim(),
            s2.dim()
        )));
    }
    principal_angles(s1, s2)
}

/// Angle between a vector and a subspace, in `[0, π/2]`.
pub fn vector_subspace_angle(v: &DVector<f64>, s: &Subspace) -> Result<f64> {
    if v.len() != s.ambient_dim() {
        return Err(config(format!(
            "vector has length {}, subspace lives in R^{}",
            v.len(),
            s.ambient_dim()
        )));
    }
    if v.iter().all(|x| *x == 0.0) {
        return Err(Error::Domain(
            "angle to a subspace is undefined for the zero vector".into(),
        ));
    }
    if !v.iter().all(|x| x.is_finite()) {
        return Err(Error::Domain("vector has non-finite entries".into()));
    }
    let inside = s.project(v);
    let outside = v - &inside;
    Ok(outside.norm().atan2(inside.norm()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridworld::build_four_rooms;
    use crate::mdp::{build_chain_mdp, induce, Policy};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random_matrix(rng: &mut ChaCha8Rng, n: usize, k: usize) -> DMatrix<f64> {
        DMatrix::from_fn(n, k, |_, _| rng.sample(StandardNormal))
    }

    fn span(cols: &[&[f64]]) -> Subspace {
        let vs: Vec<DVector<f64>> = cols.iter().map(|c| DVector::from_column_slice(c)).collect();
        orthonormalize(&DMatrix::from_columns(&vs)).unwrap()
    }

    fn chain_p(n: usize) -> DMatrix<f64> {
        let mdp = build_chain_mdp(n, 0.01, 2.0, 1.0).unwrap();
        induce(&mdp, &Policy::uniform(n, 2), 0.9).unwrap().transition().clone()
    }

    #[test]
    fn identity_is_degenerate() {
        let dec = eigen_decompose(&DMatrix::identity(4, 4), DEFAULT_GAP_TOL).unwrap();
        assert!(dec
            .eigenvalues
            .iter()
            .all(|z| (z - Complex64::new(1.0, 0.0)).norm() < 1e-14));
        assert!(!dec.assumption_ok);
        assert!(!dec.diagnostics.is_empty());
    }

    #[test]
    fn averaging_matrix() {
        let p = DMatrix::from_element(2, 2, 0.5);
        let dec = eigen_decompose(&p, DEFAULT_GAP_TOL).unwrap();
        assert!((dec.eigenvalues[0].re - 1.0).abs() < 1e-14);
        assert!(dec.eigenvalues[1].norm() < 1e-14);
        let u1 = dec.right_vectors.column(0).map(|z| z.re);
        let expect = DVector::from_element(2, 1.0 / 2f64.sqrt());
        assert!((u1 - expect).amax() < 1e-12);
        assert!(dec.assumption_ok);
    }

    #[test]
    fn four_rooms_leading_pair() {
        let (mdp, pi) = build_four_rooms();
        let p = induce(&mdp, &pi, 0.9).unwrap().transition().clone();
        let dec = eigen_decompose(&p, DEFAULT_GAP_TOL).unwrap();
        assert!((dec.eigenvalues[0] - Complex64::new(1.0, 0.0)).norm() < 1e-10);
        let u1 = dec.right_vectors.column(0).map(|z| z.re);
        let c = 1.0 / (105f64).sqrt();
        assert!(u1.iter().all(|x| (x - c).abs() < 1e-10));
    }

    #[test]
    fn eigen_residuals_hold() {
        let p = chain_p(30);
        let dec = eigen_decompose(&p, DEFAULT_GAP_TOL).unwrap();
        let pc = p.map(|x| Complex64::new(x, 0.0));
        for i in 0..30 {
            let u = dec.right_vectors.column(i);
            let r = &pc * u - u * dec.eigenvalues[i];
            assert!(r.norm() <= 1e-8, "pair {i}: {}", r.norm());
        }
    }

    #[test]
    fn rotation_matrix_has_complex_pair() {
        let p = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0]);
        let dec = eigen_decompose(&p, DEFAULT_GAP_TOL).unwrap();
        assert!(!dec.assumption_ok);
        let pc = p.map(|x| Complex64::new(x, 0.0));
        for i in 0..3 {
            let u = dec.right_vectors.column(i);
            assert!((&pc * u - u * dec.eigenvalues[i]).norm() < 1e-10);
        }
        assert!((dec.right_vectors.column(1).map(|z| z.conj()) - dec.right_vectors.column(2)).norm() < 1e-12);
        let (s, warnings) = ebf_with_diagnostics(&p, 3, DEFAULT_GAP_TOL).unwrap();
        assert_eq!(s.dim(), 3);
        assert!(!warnings.is_empty());
    }

    #[test]
    fn jordan_block_is_flagged() {
        let p = DMatrix::from_row_slice(3, 3, &[0.5, 0.5, 0.0, 0.0, 0.5, 0.5, 0.0, 0.0, 1.0]);
        let dec = eigen_decompose(&p, 1e-6).unwrap();
        assert!(dec.diagnostics.iter().any(|d| d.contains("not diagonalisable")));
    }

    #[test]
    fn ebf_k1_is_constant() {
        let s = ebf(&chain_p(30), 1).unwrap();
        let ones = DVector::from_element(30, 1.0);
        assert!(vector_subspace_angle(&ones, &s).unwrap() < 1e-10);
    }

    #[test]
    fn ebf_matches_symmetric_solver() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_matrix(&mut rng, 12, 12).map(f64::abs);
        let sym = (&a + a.transpose()) * 0.5;
        // doubly stochastic symmetric matrix by scaling into a lazy walk
        let d = sym.row_sum().max();
        let mut p = sym / d;
        for i in 0..12 {
            let row: f64 = p.row(i).sum();
            p[(i, i)] += 1.0 - row;
        }
        let eig = p.clone().symmetric_eigen();
        let mut idx: Vec<usize> = (0..12).collect();
        idx.sort_by(|&x, &y| eig.eigenvalues[y].total_cmp(&eig.eigenvalues[x]));
        for k in 1..6 {
            let oracle = Subspace::new(eig.eigenvectors.select_columns(&idx[..k])).unwrap();
            let d = grassmann_distance(&ebf(&p, k).unwrap(), &oracle).unwrap().distance;
            assert!(d < 1e-8, "k = {k}: {d}");
        }
    }

    #[test]
    fn ebf_rejects_large_k() {
        assert!(matches!(ebf(&chain_p(5), 6), Err(Error::Config(_))));
    }

    #[test]
    fn resolvent_properties() {
        let p = chain_p(30);
        assert!((resolvent(&p, 0.0).unwrap() - DMatrix::identity(30, 30)).amax() < 1e-15);
        let psi = resolvent(&p, 0.9).unwrap();
        let row_sums = &psi * DVector::from_element(30, 1.0);
        assert!(row_sums.iter().all(|r| (r - 10.0).abs() < 1e-10));
        let mut neumann = DMatrix::identity(30, 30);
        let mut term = DMatrix::identity(30, 30);
        for _ in 1..=200 {
            term = &term * &p * 0.9;
            neumann += &term;
        }
        assert!((psi - neumann).amax() < 1e-8);
    }

    #[test]
    fn resolvent_rejects_non_stochastic() {
        let p = DMatrix::from_element(3, 3, 0.5);
        assert!(resolvent(&p, 0.9).is_err());
        assert!(resolvent(&DMatrix::identity(3, 3), 1.0).is_err());
    }

    #[test]
    fn rsbf_equals_ebf_for_symmetric_p() {
        let p = crate::mdp::build_chain_mdp(20, 0.0, 0.0, 0.0)
            .and_then(|m| induce(&m, &Policy::uniform(20, 2), 0.9))
            .unwrap()
            .transition()
            .clone();
        assert!((&p - p.transpose()).amax() < 1e-15);
        for k in 1..=6 {
            let r = rsbf(&p, 0.9, k, &DMatrix::identity(20, 20)).unwrap();
            let e = ebf(&p, k).unwrap();
            assert!(grassmann_distance(&r, &e).unwrap().distance < 1e-6);
        }
    }

    #[test]
    fn rsbf_degenerate_returns_canonical_directions() {
        let p = chain_p(6);
        let (s, warnings) = rsbf_with_diagnostics(&p, 0.0, 2, &DMatrix::identity(6, 6)).unwrap();
        assert!(!warnings.is_empty());
        let e = span(&[&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0], &[0.0, 1.0, 0.0, 0.0, 0.0, 0.0]]);
        assert!(grassmann_distance(&s, &e).unwrap().distance < 1e-12);
    }

    #[test]
    fn rsbf_rejects_indefinite_covariance() {
        let p = chain_p(3);
        let mut sigma = DMatrix::identity(3, 3);
        sigma[(2, 2)] = -1.0;
        assert!(matches!(rsbf(&p, 0.9, 1, &sigma), Err(Error::Config(_))));
    }

    #[test]
    fn rsbf_beats_random_subspaces() {
        let p = chain_p(30);
        let psi = resolvent(&p, 0.9).unwrap();
        let trace = |s: &Subspace| (psi.transpose() * s.projector() * &psi).trace();
        let best = trace(&rsbf(&p, 0.9, 4, &DMatrix::identity(30, 30)).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let s = orthonormalize(&random_matrix(&mut rng, 30, 4)).unwrap();
            assert!(trace(&s) <= best);
        }
    }

    #[test]
    fn grassmann_basic_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = orthonormalize(&random_matrix(&mut rng, 10, 3)).unwrap();
        assert!(grassmann_distance(&s, &s).unwrap().distance < 1e-7);
        let e1 = span(&[&[1.0, 0.0]]);
        let e2 = span(&[&[0.0, 1.0]]);
        let d = grassmann_distance(&e1, &e2).unwrap().distance;
        assert!((d - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert!(grassmann_distance(&e1, &span(&[&[1.0, 0.0], &[0.0, 1.0]])).is_err());
    }

    #[test]
    fn grassmann_self_distance_is_tiny() {
        let s = span(&[&[1.0, 2.0, 3.0], &[0.0, 1.0, -1.0]]);
        let d = grassmann_distance(&s, &s).unwrap();
        assert!(d.distance < 1e-15);
    }

    #[test]
    fn rotated_plane_distance() {
        for &theta in &[1e-9, 1e-4, 0.3, 1.2, 1.5] {
            let (c, s) = (f64::cos(theta), f64::sin(theta));
            // rotate the xy-plane about the x axis
            let a = span(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]]);
            let b = span(&[&[1.0, 0.0, 0.0], &[0.0, c, s]]);
            let d = grassmann_distance(&a, &b).unwrap();
            assert!((d.distance - theta).abs() < 1e-14, "{theta}: {}", d.distance);
            assert!(d.angles[0] < 1e-15);
        }
    }

    #[test]
    fn unequal_dimensions() {
        let plane = span(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]]);
        let line = span(&[&[1.0, 0.0, 1.0]]);
        let pa = principal_angles(&plane, &line).unwrap();
        assert_eq!(pa.angles.len(), 1);
        assert!((pa.angles[0] - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
        assert_eq!(principal_angles(&line, &plane).unwrap(), pa);
    }

    #[test]
    fn vector_angles() {
        let s = span(&[&[1.0, 0.0]]);
        let v = DVector::from_vec(vec![1.0, 1.0]);
        assert!((vector_subspace_angle(&v, &s).unwrap() - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
        assert_eq!(
            vector_subspace_angle(&DVector::from_vec(vec![3.0, 0.0]), &s).unwrap(),
            0.0
        );
        let perp = vector_subspace_angle(&DVector::from_vec(vec![0.0, 2.0]), &s).unwrap();
        assert!((perp - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert!(matches!(
            vector_subspace_angle(&DVector::zeros(2), &s),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn orthonormalize_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let m = random_matrix(&mut rng, 30, 4);
        let s = orthonormalize(&m).unwrap();
        let oracle = &m * (m.transpose() * &m).try_inverse().unwrap() * m.transpose();
        assert!((oracle - s.projector()).amax() < 1e-8);
        let scaled = orthonormalize(&(&m * 7.0)).unwrap();
        assert!(grassmann_distance(&s, &scaled).unwrap().distance < 1e-10);
        let again = orthonormalize(s.basis()).unwrap();
        assert!(grassmann_distance(&s, &again).unwrap().distance < 1e-10);
        let mut dup = m.clone();
        dup.set_column(3, &(m.column(0) * 2.0));
        assert!(matches!(
            orthonormalize(&dup),
            Err(Error::Rank { rank: 3, expected: 4 })
        ));
    }

    #[test]
    fn subspace_csv_roundtrip() {
        let s = span(&[&[1.0, 2.0, 3.0], &[0.0, 1.0, -1.0]]);
        let text = s.to_csv().unwrap();
        assert!(text.starts_with("b0,b1\n"));
        let back = Subspace::from_csv(&text).unwrap();
        assert!((back.basis() - s.basis()).amax() < 1e-15);
    }

    #[test]
    fn decomposition_json_shape() {
        let dec = eigen_decompose(&DMatrix::from_element(2, 2, 0.5), DEFAULT_GAP_TOL).unwrap();
        let v: serde_json::Value = serde_json::from_str(&dec.to_json().unwrap()).unwrap();
        assert_eq!(v["eigenvalues"].as_array().unwrap().len(), 2);
        assert_eq!(v["vectors"][0].as_array().unwrap().len(), 2);
        assert!(v["warnings"].is_array());
    }
}
