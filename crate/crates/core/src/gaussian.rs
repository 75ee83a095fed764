//! Single-mode Gaussian states and their closed-form evolution through the
//! loss channel.
//!
//! A state is kept in the displaced-squeezed-thermal decomposition
//! ρ = D(α) S(ζ) ρ_μ S†(ζ) D†(α) with α = s·e^{iθ}, ζ = r·e^{-2i·sq_angle}
//! and ρ_μ the thermal state of purity μ. The squeezing operator follows the
//! convention S(ζ) = exp((ζ* a² − ζ a†²)/2), so for real ζ = r > 0 the
//! quadrature x = (a + a†)/√2 is squeezed and a displacement with θ = 0 lies
//! along the squeezed axis.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GaussianError {
    #[error("{name} = {value} outside its domain ({requirement})")]
    OutOfDomain {
        name: &'static str,
        value: f64,
        requirement: &'static str,
    },
    /// The closed-form channel evolution is only stated for pure probes.
    #[error("evolve requires a pure probe (mu = 1), got mu = {mu}")]
    NonPureProbe { mu: f64 },
}

pub type GaussianResult<T> = Result<T, GaussianError>;

/// Displaced-squeezed-thermal state of a single bosonic mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianState {
    /// Displacement magnitude s = |α| ≥ 0.
    pub s: f64,
    /// Displacement phase θ = arg α (radians).
    pub theta: f64,
    /// Squeezing magnitude r ≥ 0.
    pub r: f64,
    /// Squeezing angle (radians); the main pipeline keeps it at 0.
    pub sq_angle: f64,
    /// Purity μ = Tr[ρ²], in (0, 1].
    pub mu: f64,
}

impl GaussianState {
    pub fn new(s: f64, theta: f64, r: f64, sq_angle: f64, mu: f64) -> GaussianResult<Self> {
        if !(s >= 0.0) || !s.is_finite() {
            return Err(GaussianError::OutOfDomain {
                name: "s",
                value: s,
                requirement: "s >= 0",
            });
        }
        if !(r >= 0.0) || !r.is_finite() {
            return Err(GaussianError::OutOfDomain {
                name: "r",
                value: r,
                requirement: "r >= 0",
            });
        }
        if !(mu > 0.0 && mu <= 1.0) {
            return Err(GaussianError::OutOfDomain {
                name: "mu",
                value: mu,
                requirement: "0 < mu <= 1",
            });
        }
        Ok(Self {
            s,
            theta,
            r,
            sq_angle,
            mu,
        })
    }

    /// Vacuum state.
    pub fn vacuum() -> Self {
        Self {
            s: 0.0,
            theta: 0.0,
            r: 0.0,
            sq_angle: 0.0,
            mu: 1.0,
        }
    }

    /// Mean photon number of the thermal core, n_th = (1 − μ)/(2μ).
    pub fn thermal_photons(&self) -> f64 {
        (1.0 - self.mu) / (2.0 * self.mu)
    }

    /// Variance of the photon number distribution.
    pub fn photon_variance(&self) -> f64 {
        let mu2 = self.mu * self.mu;
        let c2r = (2.0 * self.r).cosh();
        let s2r = (2.0 * self.r).sinh();
        let core = ((1.0 - mu2) * c2r * c2r + (1.0 + mu2) * s2r * s2r) / (4.0 * mu2);
        // Displacement term: |cosh(r)·α − sinh(r)·α*|² / μ in this squeezing
        // convention, i.e. s²(cosh 2r − cos 2θ · sinh 2r)/μ.
        let disp = self.s * self.s * (c2r - (2.0 * self.theta).cos() * s2r) / self.mu;
        core + disp
    }
}

/// Energy-constrained pure probe: sinh²r₀ = x·n̄ in squeezing, s₀² = (1−x)·n̄
/// in displacement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeSpec {
    /// Mean photon number n̄ ≥ 0.
    pub nbar: f64,
    /// Squeezing energy fraction x ∈ [0, 1].
    pub x: f64,
    /// Displacement phase θ (radians).
    pub theta: f64,
}

impl ProbeSpec {
    pub fn new(nbar: f64, x: f64, theta: f64) -> GaussianResult<Self> {
        if !(nbar >= 0.0) || !nbar.is_finite() {
            return Err(GaussianError::OutOfDomain {
                name: "nbar",
                value: nbar,
                requirement: "nbar >= 0",
            });
        }
        if !(0.0..=1.0).contains(&x) {
            return Err(GaussianError::OutOfDomain {
                name: "x",
                value: x,
                requirement: "0 <= x <= 1",
            });
        }
        Ok(Self { nbar, x, theta })
    }

    /// Probe squeezing magnitude r₀ = asinh(√(x·n̄)).
    pub fn r0(&self) -> f64 {
        (self.x * self.nbar).sqrt().asinh()
    }

    /// Probe displacement magnitude s₀ = √((1−x)·n̄).
    pub fn s0(&self) -> f64 {
        ((1.0 - self.x) * self.nbar).sqrt()
    }
}

/// One loss operating point under the three equivalent parametrizations
/// exp(−γt) = cos²φ and z = e^{γt} − 1 = tan²φ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelPoint {
    /// Channel angle φ ∈ [0, π/2).
    pub phi: f64,
    /// z = tan²φ ≥ 0.
    pub z: f64,
    /// Loss-rate × time product γt ≥ 0.
    pub gamma_t: f64,
}

/// Which parametrization a [`ChannelPoint`] is entered through.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelParam {
    Phi,
    Z,
    GammaT,
}

/// Build the mutually consistent (φ, z, γt) triple from any one of the three.
pub fn make_channel_point(value: f64, which: ChannelParam) -> GaussianResult<ChannelPoint> {
    match which {
        ChannelParam::Phi => {
            if !(value >= 0.0 && value < std::f64::consts::FRAC_PI_2) {
                return Err(GaussianError::OutOfDomain {
                    name: "phi",
                    value,
                    requirement: "0 <= phi < pi/2",
                });
            }
            let t = value.tan();
            let z = t * t;
            Ok(ChannelPoint {
                phi: value,
                z,
                gamma_t: z.ln_1p(),
            })
        }
        ChannelParam::Z => {
            if !(value >= 0.0) || !value.is_finite() {
                return Err(GaussianError::OutOfDomain {
                    name: "z",
                    value,
                    requirement: "z >= 0",
                });
            }
            Ok(ChannelPoint {
                phi: value.sqrt().atan(),
                z: value,
                gamma_t: value.ln_1p(),
            })
        }
        ChannelParam::GammaT => {
            if !(value >= 0.0) || !value.is_finite() {
                return Err(GaussianError::OutOfDomain {
                    name: "gamma_t",
                    value,
                    requirement: "gamma_t >= 0",
                });
            }
            let z = value.exp_m1();
            Ok(ChannelPoint {
                phi: z.sqrt().atan(),
                z,
                gamma_t: value,
            })
        }
    }
}

impl ChannelPoint {
    /// Lossless identity point (φ = z = γt = 0).
    pub fn identity() -> Self {
        ChannelPoint {
            phi: 0.0,
            z: 0.0,
            gamma_t: 0.0,
        }
    }

    pub fn from_phi(phi: f64) -> GaussianResult<Self> {
        make_channel_point(phi, ChannelParam::Phi)
    }

    pub fn from_z(z: f64) -> GaussianResult<Self> {
        make_channel_point(z, ChannelParam::Z)
    }

    pub fn from_gamma_t(gamma_t: f64) -> GaussianResult<Self> {
        make_channel_point(gamma_t, ChannelParam::GammaT)
    }
}

/// Realize an energy-constrained probe as a pure Gaussian state.
pub fn make_probe(spec: &ProbeSpec) -> GaussianResult<GaussianState> {
    // Re-validate so raw struct literals cannot smuggle bad values through.
    let spec = ProbeSpec::new(spec.nbar, spec.x, spec.theta)?;
    Ok(GaussianState {
        s: spec.s0(),
        theta: spec.theta,
        r: spec.r0(),
        sq_angle: 0.0,
        mu: 1.0,
    })
}

/// Evolve a pure probe through the loss channel in closed form.
///
/// The evolved decomposition parameters are
/// μ_φ = 1/√(cos⁴φ + sin⁴φ + 2cos²φ·sin²φ·cosh 2r₀),
/// r_φ = ½·acosh[μ_φ(cos²φ·cosh 2r₀ + sin²φ)],
/// s_φ = s₀·cos φ, with θ unchanged.
pub fn evolve(probe: &GaussianState, point: &ChannelPoint) -> GaussianResult<GaussianState> {
    if probe.mu < 1.0 {
        return Err(GaussianError::NonPureProbe { mu: probe.mu });
    }
    let c2 = probe_cos2(point.phi);
    let s2 = 1.0 - c2;
    let ch = (2.0 * probe.r).cosh();
    let mu = 1.0 / (c2 * c2 + s2 * s2 + 2.0 * c2 * s2 * ch).sqrt();
    let arg = mu * (c2 * ch + s2);
    // arg dips below 1 by rounding at phi = 0 or r = 0.
    let r = 0.5 * arg.max(1.0).acosh();
    Ok(GaussianState {
        s: probe.s * point.phi.cos(),
        theta: probe.theta,
        r,
        sq_angle: probe.sq_angle,
        mu,
    })
}

fn probe_cos2(phi: f64) -> f64 {
    let c = phi.cos();
    c * c
}

/// Mean photon number ⟨a†a⟩ = s² + cosh(2r)/(2μ) − 1/2.
pub fn mean_photon(state: &GaussianState) -> f64 {
    state.s * state.s + (2.0 * state.r).cosh() / (2.0 * state.mu) - 0.5
}
