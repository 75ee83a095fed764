//! Ground-truth engine in the truncated photon-number basis: state
//! construction, the loss Lindbladian, the symmetric logarithmic derivative
//! and Fisher-information functionals.
//!
//! States are assembled at a padded working dimension and truncated back to
//! the requested one, so the reported `trace_deficit` measures the photon
//! mass leaking past the cutoff. Squeeze and displacement unitaries are exact
//! exponentials of the truncated generators, obtained from cached Hermitian
//! eigendecompositions: S(r) = exp(r(a² − a†²)/2) and D(s) = exp(s(a† − a)),
//! with phase rotations supplying arbitrary displacement phases and squeezing
//! angles.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use once_cell::sync::Lazy;
use thiserror::Error;

use crate::gaussian::{self, ChannelPoint, GaussianError, GaussianState, ProbeSpec};
use crate::linalg::{self, hermitian_eigen, hermitize, matmul, matmul_adjoint, HermEig};

#[derive(Debug, Error)]
pub enum FockError {
    #[error("Fock dimension {dim} too small (need at least 2)")]
    DimTooSmall { dim: usize },
    #[error(
        "trace deficit {deficit:.3e} exceeds tail budget {budget:.3e} at dim {dim}; \
         retry with dim >= {suggested}"
    )]
    InsufficientDimension {
        deficit: f64,
        budget: f64,
        dim: usize,
        suggested: usize,
    },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("phi = {phi} outside [0, pi/2)")]
    PhiOutOfDomain { phi: f64 },
    #[error(
        "oracle QFI did not converge: reached dim {dim} (cap {cap}) with \
         h = {last:.12e}, relative change {rel_change:.3e}"
    )]
    NonConvergence {
        dim: usize,
        cap: usize,
        last: f64,
        rel_change: f64,
    },
    #[error("measurement basis is not orthonormal (max deviation {deviation:.3e})")]
    NonOrthonormalBasis { deviation: f64 },
    #[error("probability {value:.3e} more negative than tolerated")]
    NegativeProbability { value: f64 },
    #[error("basis-projected pmf requires sq_angle = 0, got {sq_angle}")]
    UnsupportedSqueezeAngle { sq_angle: f64 },
    #[error(transparent)]
    Gaussian(#[from] GaussianError),
}

pub type FockResult<T> = Result<T, FockError>;

/// Default tail budget for [`StateBuilder::build`].
pub const DEFAULT_TAIL_BUDGET: f64 = 1e-6;
/// Default relative eigenvalue floor for [`solve_sld`].
pub const DEFAULT_EIGEN_FLOOR: f64 = 1e-12;
/// Default probability floor for [`classical_fisher`].
pub const DEFAULT_PMF_FLOOR: f64 = 1e-14;
/// Dimension cap for [`qfi_oracle`] auto-escalation.
pub const ORACLE_DIM_CAP: usize = 2048;

/// Density matrix in the photon-number basis.
#[derive(Debug, Clone)]
pub struct FockDensity {
    pub dim: usize,
    pub elements: DMatrix<C64>,
    /// Photon mass beyond the cutoff before renormalization.
    pub trace_deficit: f64,
}

/// Hermitian operator in the photon-number basis.
#[derive(Debug, Clone)]
pub struct FockOperator {
    pub dim: usize,
    pub elements: DMatrix<C64>,
}

impl FockDensity {
    /// Tr[ρ²].
    pub fn purity(&self) -> f64 {
        self.elements
            .iter()
            .map(|c| c.norm_sqr())
            .sum::<f64>()
    }

    /// Photon-number distribution (the matrix diagonal, clipped at zero).
    pub fn photon_pmf(&self) -> Vec<f64> {
        (0..self.dim)
            .map(|n| self.elements[(n, n)].re.max(0.0))
            .collect()
    }

    /// Tr[a†a ρ].
    pub fn mean_photon(&self) -> f64 {
        (0..self.dim)
            .map(|n| n as f64 * self.elements[(n, n)].re)
            .sum()
    }
}

/// Truncated annihilation operator, ⟨n−1|a|n⟩ = √n.
pub fn annihilation(dim: usize) -> DMatrix<C64> {
    DMatrix::from_fn(dim, dim, |i, j| {
        if j == i + 1 {
            C64::new((j as f64).sqrt(), 0.0)
        } else {
            C64::ZERO
        }
    })
}

/// Cached eigendecompositions of the squeeze and displacement generators at
/// one working dimension.
struct ModeGenerators {
    /// i(a² − a†²)/2, Hermitian.
    sq: HermEig,
    /// i(a† − a), Hermitian.
    disp: HermEig,
    /// V_disp† · V_sq, reused by the phase-free fast path.
    disp_to_sq: DMatrix<C64>,
}

impl ModeGenerators {
    fn compute(w: usize) -> Self {
        let mut hs = DMatrix::<C64>::zeros(w, w);
        for n in 0..w.saturating_sub(2) {
            let v = 0.5 * (((n + 1) * (n + 2)) as f64).sqrt();
            hs[(n, n + 2)] = C64::new(0.0, v);
            hs[(n + 2, n)] = C64::new(0.0, -v);
        }
        let mut hd = DMatrix::<C64>::zeros(w, w);
        for n in 0..w - 1 {
            let v = ((n + 1) as f64).sqrt();
            hd[(n + 1, n)] = C64::new(0.0, v);
            hd[(n, n + 1)] = C64::new(0.0, -v);
        }
        let sq = hermitian_eigen(hs);
        let disp = hermitian_eigen(hd);
        let disp_to_sq = matmul(&disp.vectors.adjoint(), &sq.vectors);
        ModeGenerators {
            sq,
            disp,
            disp_to_sq,
        }
    }
}

static GENERATOR_CACHE: Lazy<Mutex<HashMap<usize, Arc<ModeGenerators>>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

fn generators(w: usize) -> Arc<ModeGenerators> {
    if let Some(g) = GENERATOR_CACHE.lock().unwrap().get(&w) {
        return g.clone();
    }
    let fresh = Arc::new(ModeGenerators::compute(w));
    GENERATOR_CACHE
        .lock()
        .unwrap()
        .entry(w)
        .or_insert(fresh)
        .clone()
}

fn thermal_weights(mu: f64, w: usize) -> DVector<f64> {
    let q = (1.0 - mu) / (1.0 + mu);
    let head = 1.0 - q;
    DVector::from_fn(w, |n, _| head * q.powi(n as i32))
}

/// Builds Fock-space realizations of Gaussian states at a fixed truncation.
#[derive(Clone)]
pub struct StateBuilder {
    dim: usize,
    w: usize,
    tail_budget: f64,
    gens: Arc<ModeGenerators>,
}

impl StateBuilder {
    pub fn new(dim: usize) -> FockResult<Self> {
        if dim < 2 {
            return Err(FockError::DimTooSmall { dim });
        }
        let w = dim + dim / 2 + 8;
        Ok(StateBuilder {
            dim,
            w,
            tail_budget: DEFAULT_TAIL_BUDGET,
            gens: generators(w),
        })
    }

    pub fn with_tail_budget(mut self, budget: f64) -> Self {
        self.tail_budget = budget;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Padded dimension the unitaries are exponentiated at.
    pub fn working_dim(&self) -> usize {
        self.w
    }

    /// S(r·e^{-2i·sq_angle}) at the working dimension.
    fn squeeze_op(&self, r: f64, sq_angle: f64) -> DMatrix<C64> {
        let mut v = self.gens.sq.vectors.clone();
        linalg::scale_cols(&mut v, |n| (-C64::i() * (r * self.gens.sq.values[n])).exp());
        let mut s = matmul_adjoint(&v, &self.gens.sq.vectors);
        if sq_angle != 0.0 {
            let rot = C64::i() * sq_angle;
            linalg::scale_rows(&mut s, |n| (-rot * n as f64).exp());
            linalg::scale_cols(&mut s, |n| (rot * n as f64).exp());
        }
        s
    }

    /// D(s·e^{iθ}) at the working dimension.
    fn displacement_op(&self, s: f64, theta: f64) -> DMatrix<C64> {
        let mut v = self.gens.disp.vectors.clone();
        linalg::scale_cols(&mut v, |n| {
            (-C64::i() * (s * self.gens.disp.values[n])).exp()
        });
        let mut d = matmul_adjoint(&v, &self.gens.disp.vectors);
        if theta != 0.0 {
            let rot = C64::i() * theta;
            linalg::scale_rows(&mut d, |n| (rot * n as f64).exp());
            linalg::scale_cols(&mut d, |n| (-rot * n as f64).exp());
        }
        d
    }

    /// D·S at the working dimension.
    fn probe_unitary(&self, state: &GaussianState) -> DMatrix<C64> {
        if state.theta == 0.0 && state.sq_angle == 0.0 {
            // D(s)S(r) = V_d E_d (V_d†V_sq) E_sq V_sq†
            let mut x = self.gens.disp_to_sq.clone();
            linalg::scale_rows(&mut x, |n| {
                (-C64::i() * (state.s * self.gens.disp.values[n])).exp()
            });
            linalg::scale_cols(&mut x, |n| {
                (-C64::i() * (state.r * self.gens.sq.values[n])).exp()
            });
            let left = matmul(&self.gens.disp.vectors, &x);
            matmul_adjoint(&left, &self.gens.sq.vectors)
        } else {
            matmul(
                &self.displacement_op(state.s, state.theta),
                &self.squeeze_op(state.r, state.sq_angle),
            )
        }
    }

    /// Realize the state, truncate to `dim` and renormalize.
    pub fn build(&self, state: &GaussianState) -> FockResult<FockDensity> {
        let u = self.probe_unitary(state);
        let weights = thermal_weights(state.mu, self.w);
        let mut scaled = u.clone();
        linalg::scale_cols(&mut scaled, |n| C64::new(weights[n], 0.0));
        let rho_w = matmul_adjoint(&scaled, &u);
        let block = rho_w.view((0, 0), (self.dim, self.dim)).into_owned();
        let trace: f64 = (0..self.dim).map(|n| block[(n, n)].re).sum();
        let deficit = 1.0 - trace;
        if deficit > self.tail_budget {
            return Err(FockError::InsufficientDimension {
                deficit,
                budget: self.tail_budget,
                dim: self.dim,
                suggested: self.dim * 2,
            });
        }
        let elements = hermitize(&block.scale(1.0 / trace));
        Ok(FockDensity {
            dim: self.dim,
            elements,
            trace_deficit: deficit,
        })
    }

    /// ⟨v_k|ρ|v_k⟩ for the columns of a fixed basis, without materializing ρ.
    ///
    /// Equivalent to [`measurement_pmf`] on [`StateBuilder::build`] output up
    /// to the trace renormalization (the returned values sum to
    /// 1 − tail mass). Requires `sq_angle = 0`.
    pub fn pmf_in_basis(&self, state: &GaussianState, model: &BasisPmfModel) -> FockResult<Vec<f64>> {
        if state.sq_angle != 0.0 {
            return Err(FockError::UnsupportedSqueezeAngle {
                sq_angle: state.sq_angle,
            });
        }
        if model.basis_w.nrows() != self.w {
            return Err(FockError::DimensionMismatch {
                left: model.basis_w.nrows(),
                right: self.w,
            });
        }
        let gens = &self.gens;
        // M = S(r)† D(α)† V, staged right to left.
        let displaced: DMatrix<C64> = if state.s != 0.0 {
            let mut p = if state.theta == 0.0 {
                model.disp_projected.clone()
            } else {
                let mut x0 = model.basis_w.clone();
                let rot = C64::i() * state.theta;
                linalg::scale_rows(&mut x0, |n| (-rot * n as f64).exp());
                matmul(&gens.disp.vectors.adjoint(), &x0)
            };
            linalg::scale_rows(&mut p, |n| {
                (C64::i() * (state.s * gens.disp.values[n])).exp()
            });
            let mut x1 = matmul(&gens.disp.vectors, &p);
            if state.theta != 0.0 {
                let rot = C64::i() * state.theta;
                linalg::scale_rows(&mut x1, |n| (rot * n as f64).exp());
            }
            x1
        } else {
            model.basis_w.clone()
        };
        let m = if state.r != 0.0 {
            let mut y = if state.s == 0.0 {
                model.sq_projected.clone()
            } else {
                matmul(&gens.sq.vectors.adjoint(), &displaced)
            };
            linalg::scale_rows(&mut y, |n| (C64::i() * (state.r * gens.sq.values[n])).exp());
            matmul(&gens.sq.vectors, &y)
        } else {
            displaced
        };
        let weights = thermal_weights(state.mu, self.w);
        let mut pmf = vec![0.0; model.k];
        for (k, p) in pmf.iter_mut().enumerate() {
            let col = m.column(k);
            *p = col
                .iter()
                .enumerate()
                .map(|(n, c)| weights[n] * c.norm_sqr())
                .sum();
        }
        Ok(pmf)
    }
}

/// A fixed measurement basis prepared for repeated [`StateBuilder::pmf_in_basis`]
/// calls; checks orthonormality once and caches the generator projections.
pub struct BasisPmfModel {
    basis_w: DMatrix<C64>,
    disp_projected: DMatrix<C64>,
    sq_projected: DMatrix<C64>,
    k: usize,
}

impl BasisPmfModel {
    pub fn new(builder: &StateBuilder, basis: &DMatrix<C64>) -> FockResult<Self> {
        if basis.nrows() != builder.dim {
            return Err(FockError::DimensionMismatch {
                left: basis.nrows(),
                right: builder.dim,
            });
        }
        check_orthonormal(basis)?;
        let k = basis.ncols();
        let mut basis_w = DMatrix::<C64>::zeros(builder.w, k);
        basis_w
            .view_mut((0, 0), (builder.dim, k))
            .copy_from(basis);
        let disp_projected = matmul(&builder.gens.disp.vectors.adjoint(), &basis_w);
        let sq_projected = matmul(&builder.gens.sq.vectors.adjoint(), &basis_w);
        Ok(BasisPmfModel {
            basis_w,
            disp_projected,
            sq_projected,
            k,
        })
    }
}

/// Spec'd convenience form of [`StateBuilder::build`].
pub fn build_fock_state(state: &GaussianState, dim: usize) -> FockResult<FockDensity> {
    StateBuilder::new(dim)?.build(state)
}

/// Truncation heuristic: 8·(⟨n⟩ + 3σ + 1), at least 16.
pub fn suggested_dim(state: &GaussianState) -> usize {
    let mean = gaussian::mean_photon(state);
    let sigma = state.photon_variance().max(0.0).sqrt();
    let eff = mean + 3.0 * sigma;
    ((8.0 * (eff + 1.0)).ceil() as usize).max(16)
}

/// Loss generator L[a]ρ = 2aρa† − a†aρ − ρa†a.
pub fn lindblad_apply(rho: &FockDensity) -> FockResult<FockOperator> {
    let d = rho.dim;
    if rho.elements.nrows() != d || rho.elements.ncols() != d {
        return Err(FockError::DimensionMismatch {
            left: rho.elements.nrows(),
            right: d,
        });
    }
    let r = &rho.elements;
    let out = DMatrix::from_fn(d, d, |n, m| {
        let jump = if n + 1 < d && m + 1 < d {
            2.0 * (((n + 1) * (m + 1)) as f64).sqrt() * r[(n + 1, m + 1)]
        } else {
            C64::ZERO
        };
        jump - ((n + m) as f64) * r[(n, m)]
    });
    Ok(FockOperator {
        dim: d,
        elements: out,
    })
}

/// Exact derivative dρ/dφ = tanφ · L[a]ρ.
pub fn drho_dphi(rho: &FockDensity, phi: f64) -> FockResult<FockOperator> {
    if !(0.0..std::f64::consts::FRAC_PI_2).contains(&phi) {
        return Err(FockError::PhiOutOfDomain { phi });
    }
    let mut l = lindblad_apply(rho)?;
    l.elements.scale_mut(phi.tan());
    Ok(l)
}

/// SLD solution with the floor-dropped derivative mass (relative Frobenius).
#[derive(Debug, Clone)]
pub struct SldSolution {
    pub lambda: FockOperator,
    pub dropped_mass: f64,
}

/// Solve 2·dρ = ρΛ + Λρ in ρ's eigenbasis: Λ_pq = 2(dρ)_pq/(ρ_p + ρ_q) where
/// ρ_p + ρ_q ≥ eigen_floor·max_p, else 0.
pub fn solve_sld(rho: &FockDensity, drho: &FockOperator, eigen_floor: f64) -> FockResult<SldSolution> {
    if rho.dim != drho.dim {
        return Err(FockError::DimensionMismatch {
            left: rho.dim,
            right: drho.dim,
        });
    }
    let eig = hermitian_eigen(rho.elements.clone());
    let p: Vec<f64> = eig.values.iter().map(|v| v.max(0.0)).collect();
    let pmax = p.iter().cloned().fold(0.0, f64::max);
    let threshold = eigen_floor * pmax;
    let d_tilde = matmul(&matmul(&eig.vectors.adjoint(), &drho.elements), &eig.vectors);
    let n = rho.dim;
    let mut lam_tilde = DMatrix::<C64>::zeros(n, n);
    let mut dropped = 0.0;
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            let dv = d_tilde[(i, j)];
            total += dv.norm_sqr();
            let denom = p[i] + p[j];
            if denom >= threshold && denom > 0.0 {
                lam_tilde[(i, j)] = 2.0 * dv / denom;
            } else {
                dropped += dv.norm_sqr();
            }
        }
    }
    let lambda = hermitize(&matmul_adjoint(&matmul(&eig.vectors, &lam_tilde), &eig.vectors));
    let dropped_mass = if total > 0.0 {
        (dropped / total).sqrt()
    } else {
        0.0
    };
    Ok(SldSolution {
        lambda: FockOperator {
            dim: n,
            elements: lambda,
        },
        dropped_mass,
    })
}

/// Tr[ρ Λ²].
pub fn qfi_from_sld(rho: &FockDensity, lambda: &FockOperator) -> f64 {
    let rl = matmul(&rho.elements, &lambda.elements);
    let mut acc = 0.0;
    for i in 0..rho.dim {
        for j in 0..rho.dim {
            acc += (rl[(i, j)] * lambda.elements[(j, i)]).re;
        }
    }
    acc
}

/// Eigenvalues (ascending) and orthonormal eigenvectors of an SLD.
pub fn sld_eigenbasis(lambda: &FockOperator) -> (Vec<f64>, DMatrix<C64>) {
    let eig = hermitian_eigen(lambda.elements.clone());
    (eig.values.iter().cloned().collect(), eig.vectors)
}

fn sld_qfi_at(evolved: &GaussianState, phi: f64, dim: usize) -> FockResult<f64> {
    let rho = StateBuilder::new(dim)?.build(evolved)?;
    let drho = drho_dphi(&rho, phi)?;
    let sld = solve_sld(&rho, &drho, DEFAULT_EIGEN_FLOOR)?;
    Ok(qfi_from_sld(&rho, &sld.lambda))
}

/// Ground-truth QFI with dimension auto-escalation: doubles the truncation
/// until the value changes by less than 1e−8 relative, starting from the
/// larger of `dim` and the [`suggested_dim`] heuristic.
pub fn qfi_oracle(probe: &ProbeSpec, point: &ChannelPoint, dim: usize) -> FockResult<f64> {
    let probe_state = gaussian::make_probe(probe)?;
    let evolved = gaussian::evolve(&probe_state, point)?;
    let mut current = dim.max(suggested_dim(&evolved));
    let mut prev: Option<f64> = None;
    let mut rel_change = f64::INFINITY;
    loop {
        match sld_qfi_at(&evolved, point.phi, current) {
            Ok(h) => {
                if let Some(hp) = prev {
                    rel_change = (h - hp).abs() / h.abs().max(1e-300);
                    if rel_change <= 1e-8 {
                        return Ok(h);
                    }
                }
                prev = Some(h);
            }
            Err(FockError::InsufficientDimension { .. }) => {
                prev = None;
            }
            Err(e) => return Err(e),
        }
        if current >= ORACLE_DIM_CAP {
            return Err(FockError::NonConvergence {
                dim: current,
                cap: ORACLE_DIM_CAP,
                last: prev.unwrap_or(f64::NAN),
                rel_change,
            });
        }
        current = (current * 2).min(ORACLE_DIM_CAP);
    }
}

fn check_orthonormal(basis: &DMatrix<C64>) -> FockResult<()> {
    let gram = matmul(&basis.adjoint(), basis);
    let k = basis.ncols();
    let mut dev = 0.0f64;
    for i in 0..k {
        for j in 0..k {
            let target = if i == j { C64::ONE } else { C64::ZERO };
            dev = dev.max((gram[(i, j)] - target).norm());
        }
    }
    if dev > 1e-10 {
        return Err(FockError::NonOrthonormalBasis { deviation: dev });
    }
    Ok(())
}

/// Born-rule probabilities p_k = ⟨v_k|ρ|v_k⟩ for an orthonormal basis.
pub fn measurement_pmf(rho: &FockDensity, basis: &DMatrix<C64>) -> FockResult<Vec<f64>> {
    if basis.nrows() != rho.dim {
        return Err(FockError::DimensionMismatch {
            left: basis.nrows(),
            right: rho.dim,
        });
    }
    check_orthonormal(basis)?;
    let raw = expectation_diagonal(&rho.elements, basis);
    let mut pmf = Vec::with_capacity(raw.len());
    for v in raw {
        if v < -1e-10 {
            return Err(FockError::NegativeProbability { value: v });
        }
        pmf.push(v.max(0.0));
    }
    Ok(pmf)
}

/// Re ⟨v_k|M|v_k⟩ for each basis column (no orthonormality check).
pub fn expectation_diagonal(matrix: &DMatrix<C64>, basis: &DMatrix<C64>) -> Vec<f64> {
    let mv = matmul(matrix, basis);
    (0..basis.ncols())
        .map(|k| {
            basis
                .column(k)
                .iter()
                .zip(mv.column(k).iter())
                .map(|(v, m)| (v.conj() * m).re)
                .sum()
        })
        .collect()
}

/// Classical Fisher information with the floor-dropped |dp| mass reported.
#[derive(Debug, Clone, Copy)]
pub struct ClassicalFisher {
    pub value: f64,
    pub dropped_mass: f64,
}

/// F = Σ_k (dp_k)²/p_k over outcomes with p_k ≥ floor.
pub fn classical_fisher(pmf: &[f64], dpmf: &[f64], floor: f64) -> ClassicalFisher {
    let mut value = 0.0;
    let mut dropped = 0.0;
    for (&p, &dp) in pmf.iter().zip(dpmf) {
        if p >= floor {
            value += dp * dp / p;
        } else {
            dropped += dp.abs();
        }
    }
    ClassicalFisher {
        value,
        dropped_mass: dropped,
    }
}

/// Plain-text dump (row, col, re, im), one element per line.
pub fn density_to_csv(rho: &FockDensity) -> String {
    let mut out = String::from("row,col,re,im\n");
    for i in 0..rho.dim {
        for j in 0..rho.dim {
            let c = rho.elements[(i, j)];
            out.push_str(&format!("{},{},{:.16e},{:.16e}\n", i, j, c.re, c.im));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{evolve, make_probe, mean_photon, ChannelPoint, ProbeSpec};
    use approx::assert_abs_diff_eq;

    fn probe(nbar: f64, x: f64) -> GaussianState {
        make_probe(&ProbeSpec::new(nbar, x, 0.0).unwrap()).unwrap()
    }

    fn evolved(nbar: f64, x: f64, z: f64) -> (GaussianState, ChannelPoint) {
        let point = ChannelPoint::from_z(z).unwrap();
        (evolve(&probe(nbar, x), &point).unwrap(), point)
    }

    #[test]
    fn annihilation_matrix_elements() {
        let a = annihilation(5);
        for n in 1..5 {
            assert_eq!(a[(n - 1, n)], C64::new((n as f64).sqrt(), 0.0));
        }
        assert_eq!(a[(2, 1)], C64::ZERO);
        assert_eq!(a[(0, 2)], C64::ZERO);
    }

    #[test]
    fn vacuum_build() {
        let rho = build_fock_state(&GaussianState::vacuum(), 10).unwrap();
        assert_abs_diff_eq!(rho.elements[(0, 0)].re, 1.0, epsilon = 1e-14);
        let off: f64 = rho
            .elements
            .iter()
            .skip(1)
            .map(|c| c.norm())
            .fold(0.0, f64::max);
        assert!(off < 1e-14);
        assert!(rho.trace_deficit.abs() < 1e-14);
    }

    #[test]
    fn coherent_diagonal_is_poisson() {
        let state = probe(1.0, 0.0); // s = 1
        let rho = build_fock_state(&state, 24).unwrap();
        let mut factorial = 1.0;
        for n in 0..8 {
            if n > 0 {
                factorial *= n as f64;
            }
            let expect = (-1.0f64).exp() / factorial;
            assert_abs_diff_eq!(rho.elements[(n, n)].re, expect, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(rho.elements[(0, 0)].re, 0.36787944117144233, epsilon = 1e-12);
    }

    #[test]
    fn squeezed_vacuum_even_support() {
        let state = probe(1.0, 1.0);
        let rho = build_fock_state(&state, 32).unwrap();
        for n in (1..32).step_by(2) {
            assert!(rho.elements[(n, n)].re.abs() < 1e-14);
        }
        assert!(rho.elements[(2, 2)].re > 1e-3);
    }

    #[test]
    fn purity_and_mean_photon_match_gaussian_parameters() {
        for &(nbar, x, z) in &[(1.0, 1.0, 1.0), (2.0, 0.5, 0.1), (0.5, 0.25, 5.0)] {
            let (state, _) = evolved(nbar, x, z);
            let rho = build_fock_state(&state, 64).unwrap();
            assert_abs_diff_eq!(rho.purity(), state.mu, epsilon = 1e-8);
            assert_abs_diff_eq!(rho.mean_photon(), mean_photon(&state), epsilon = 1e-8);
        }
    }

    #[test]
    fn truncated_unitaries_are_unitary() {
        let b = StateBuilder::new(24).unwrap();
        for op in [b.squeeze_op(0.9, 0.3), b.displacement_op(1.3, -0.7)] {
            let gram = matmul(&op.adjoint(), &op);
            let id = DMatrix::<C64>::identity(b.w, b.w);
            assert!((gram - id).norm() < 1e-11);
        }
    }

    #[test]
    fn insufficient_dimension_reported() {
        let state = probe(25.0, 0.0); // s = 5, Poisson mean 25
        match build_fock_state(&state, 8) {
            Err(FockError::InsufficientDimension { deficit, suggested, .. }) => {
                assert!(deficit > 0.5);
                assert_eq!(suggested, 16);
            }
            other => panic!("expected InsufficientDimension, got {other:?}"),
        }
    }

    #[test]
    fn lindblad_vacuum_fixed_point() {
        let rho = build_fock_state(&GaussianState::vacuum(), 8).unwrap();
        let l = lindblad_apply(&rho).unwrap();
        assert!(l.elements.norm() < 1e-14);
    }

    #[test]
    fn lindblad_traceless_and_number_identity() {
        let (state, _) = evolved(1.5, 0.5, 1.0);
        let rho = build_fock_state(&state, 48).unwrap();
        let l = lindblad_apply(&rho).unwrap();
        let trace: f64 = (0..l.dim).map(|n| l.elements[(n, n)].re).sum();
        assert!(trace.abs() < 1e-12);
        // Tr[a†a · L[a]ρ] = −2 Tr[a†a ρ]
        let weighted: f64 = (0..l.dim).map(|n| n as f64 * l.elements[(n, n)].re).sum();
        assert_abs_diff_eq!(weighted, -2.0 * rho.mean_photon(), epsilon = 1e-10);
    }

    #[test]
    fn derivative_matches_central_difference() {
        let nbar = 1.0;
        let x = 1.0;
        let phi = ChannelPoint::from_z(1.0).unwrap().phi;
        let h = 1e-5;
        let dim = 48;
        let p = probe(nbar, x);
        let state = evolve(&p, &ChannelPoint::from_phi(phi).unwrap()).unwrap();
        let rho = build_fock_state(&state, dim).unwrap();
        let exact = drho_dphi(&rho, phi).unwrap();
        let plus = build_fock_state(
            &evolve(&p, &ChannelPoint::from_phi(phi + h).unwrap()).unwrap(),
            dim,
        )
        .unwrap();
        let minus = build_fock_state(
            &evolve(&p, &ChannelPoint::from_phi(phi - h).unwrap()).unwrap(),
            dim,
        )
        .unwrap();
        let fd = (plus.elements - minus.elements).scale(1.0 / (2.0 * h));
        let rel = (&fd - &exact.elements).norm() / exact.elements.norm();
        assert!(rel < 1e-7, "finite-difference mismatch: rel = {rel:.3e}");
        let trace: f64 = (0..dim).map(|n| exact.elements[(n, n)].re).sum();
        assert!(trace.abs() < 1e-12);
    }

    #[test]
    fn derivative_zero_at_identity_point() {
        let rho = build_fock_state(&probe(1.0, 1.0), 32).unwrap();
        let d = drho_dphi(&rho, 0.0).unwrap();
        assert!(d.elements.norm() < 1e-14);
        assert!(drho_dphi(&rho, 2.0).is_err());
    }

    fn sld_checks(nbar: f64, x: f64, z: f64, h_expect: f64) {
        let (state, point) = evolved(nbar, x, z);
        let dim = suggested_dim(&state).max(48);
        let rho = build_fock_state(&state, dim).unwrap();
        let drho = drho_dphi(&rho, point.phi).unwrap();
        let sld = solve_sld(&rho, &drho, DEFAULT_EIGEN_FLOOR).unwrap();
        let lam = &sld.lambda;
        let lyap = (matmul(&rho.elements, &lam.elements) + matmul(&lam.elements, &rho.elements)
            - drho.elements.scale(2.0))
        .norm()
            / drho.elements.norm();
        assert!(lyap <= 1e-8, "Lyapunov residual {lyap:.3e}");
        let expectation: f64 = {
            let rl = matmul(&rho.elements, &lam.elements);
            (0..dim).map(|n| rl[(n, n)].re).sum()
        };
        assert!(expectation.abs() <= 1e-9, "Tr[rho Lambda] = {expectation:.3e}");
        let h = qfi_from_sld(&rho, lam);
        assert!(
            (h - h_expect).abs() / h_expect <= 1e-6,
            "H = {h}, expected {h_expect}"
        );
    }

    #[test]
    fn sld_pure_coherent_state() {
        // evolved coherent state stays pure; Λ reduces to 2dρ on the support
        sld_checks(2.0, 0.0, 1.0, 4.0);
    }

    #[test]
    fn sld_mixed_squeezed_vacuum() {
        sld_checks(1.0, 1.0, 1.0, 4.0 / 3.0);
    }

    #[test]
    fn oracle_qfi_reference_points() {
        let point = ChannelPoint::from_z(1.0).unwrap();
        let h = qfi_oracle(&ProbeSpec::new(1.0, 1.0, 0.0).unwrap(), &point, 32).unwrap();
        assert!((h - 4.0 / 3.0).abs() * 3.0 / 4.0 < 1e-6);
        let h = qfi_oracle(&ProbeSpec::new(2.0, 0.0, 0.0).unwrap(), &point, 32).unwrap();
        assert!((h - 4.0).abs() / 4.0 < 1e-6);
        let point = ChannelPoint::from_z(0.1).unwrap();
        let h = qfi_oracle(&ProbeSpec::new(1.0, 0.5, 0.0).unwrap(), &point, 32).unwrap();
        assert!(
            (h - 2.0855380384655).abs() / 2.0855380384655 < 1e-6,
            "h = {h:.13}"
        );
    }

    #[test]
    fn oracle_qfi_zero_loss() {
        let h = qfi_oracle(
            &ProbeSpec::new(1.0, 1.0, 0.0).unwrap(),
            &ChannelPoint::identity(),
            16,
        )
        .unwrap();
        assert_eq!(h, 0.0);
    }

    #[test]
    fn pmf_in_fock_basis_is_poisson() {
        let state = probe(1.0, 0.0);
        let rho = build_fock_state(&state, 24).unwrap();
        let basis = DMatrix::<C64>::identity(24, 24);
        let pmf = measurement_pmf(&rho, &basis).unwrap();
        assert_abs_diff_eq!(pmf[0], 0.36787944117144233, epsilon = 1e-12);
        assert_abs_diff_eq!(pmf.iter().sum::<f64>(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn pmf_rejects_nonorthonormal_basis() {
        let rho = build_fock_state(&GaussianState::vacuum(), 8).unwrap();
        let mut basis = DMatrix::<C64>::identity(8, 8);
        basis[(0, 0)] = C64::new(0.5, 0.0);
        assert!(matches!(
            measurement_pmf(&rho, &basis),
            Err(FockError::NonOrthonormalBasis { .. })
        ));
    }

    #[test]
    fn pmf_model_matches_measurement_pmf() {
        let (state, point) = evolved(1.0, 1.0, 1.0);
        let dim = 40;
        let builder = StateBuilder::new(dim).unwrap();
        let rho = builder.build(&state).unwrap();
        let drho = drho_dphi(&rho, point.phi).unwrap();
        let sld = solve_sld(&rho, &drho, DEFAULT_EIGEN_FLOOR).unwrap();
        let (_, basis) = sld_eigenbasis(&sld.lambda);
        let model = BasisPmfModel::new(&builder, &basis).unwrap();
        let direct = measurement_pmf(&rho, &basis).unwrap();
        let fast = builder.pmf_in_basis(&state, &model).unwrap();
        let scale = 1.0 - rho.trace_deficit;
        for (d, f) in direct.iter().zip(&fast) {
            assert_abs_diff_eq!(d * scale, *f, epsilon = 1e-10);
        }
    }

    #[test]
    fn classical_fisher_coherent_photon_counting() {
        let nbar = 2.0;
        let z = 1.0;
        let (state, point) = evolved(nbar, 0.0, z);
        let dim = 48;
        let rho = build_fock_state(&state, dim).unwrap();
        let drho = drho_dphi(&rho, point.phi).unwrap();
        let basis = DMatrix::<C64>::identity(dim, dim);
        let pmf = measurement_pmf(&rho, &basis).unwrap();
        let dpmf = expectation_diagonal(&drho.elements, &basis);
        let f = classical_fisher(&pmf, &dpmf, DEFAULT_PMF_FLOOR);
        let expect = 4.0 * nbar * z / (1.0 + z);
        assert!(
            (f.value - expect).abs() / expect < 1e-6,
            "F = {}, expected {expect}",
            f.value
        );
    }

    #[test]
    fn suggested_dim_grows_with_energy() {
        let small = suggested_dim(&GaussianState::vacuum());
        let big = suggested_dim(&probe(10.0, 0.5));
        assert!(small >= 16);
        assert!(big > small);
    }

    #[test]
    fn density_csv_layout() {
        let rho = build_fock_state(&GaussianState::vacuum(), 2).unwrap();
        let csv = density_to_csv(&rho);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("row,col,re,im"));
        assert!(lines.next().unwrap().starts_with("0,0,1.0000000000000000e0"));
        assert_eq!(csv.lines().count(), 5);
    }
}
