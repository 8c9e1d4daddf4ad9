//! Balanced sub-Gaussian mixtures: model description, sampling and the
//! ground-truth matrices.
//!
//! A point is `h_i = μ_{σ*(i)} + g_i` where the noise `g_i` is either spherical
//! Gaussian or drawn from a rotationally invariant law on the unit ball (the
//! stochastic ball model). Every cluster has exactly `n/k` points.

use std::fmt;

use crate::assignment::{Assignment, AssignmentMatrix};
use crate::error::{Error, Result};
use crate::linalg::SymMatrix;
use crate::rng::SeededRng;

/// Noise family of the mixture.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Noise {
    /// `g ~ N(0, σ² I_d)`.
    SphericalGaussian { sigma: f64 },
    /// `g = r·u` with `u` uniform on the unit sphere and `r = U^{1/d}`.
    UniformBall,
    /// `g = u` uniform on the unit sphere.
    UniformSphere,
}

impl Noise {
    /// Sub-Gaussian scale τ implied by the noise. For ball noise this is
    /// `ball_constant / √d`; only its order is pinned down by theory, so the
    /// constant is a configuration choice.
    pub fn default_tau(&self, d: usize, ball_constant: f64) -> f64 {
        match *self {
            Noise::SphericalGaussian { sigma } => sigma,
            Noise::UniformBall | Noise::UniformSphere => ball_constant / (d as f64).sqrt(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Noise::SphericalGaussian { .. } => "gaussian",
            Noise::UniformBall => "ball",
            Noise::UniformSphere => "sphere",
        }
    }
}

impl fmt::Display for Noise {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Noise::SphericalGaussian { sigma } => write!(f, "gaussian(sigma={sigma})"),
            other => f.write_str(other.name()),
        }
    }
}

/// Placement of the true centers.
#[derive(Clone, Debug, PartialEq)]
pub enum CenterLayout {
    /// `k` mutually equidistant centers at separation Δ: `μ_a = (Δ/√2)·e_a`
    /// (requires `d ≥ k`; for `k = 2` any `d ≥ 1` works via the two-point layout).
    Simplex { delta: f64 },
    /// `μ_1 = 0`, `μ_2 = Δ·e_1`. Only for `k = 2`.
    TwoPoint { delta: f64 },
    Explicit(Vec<Vec<f64>>),
}

impl CenterLayout {
    pub fn centers(&self, k: usize, d: usize) -> Result<Vec<Vec<f64>>> {
        if d == 0 {
            return Err(Error::input("dimension d must be at least 1"));
        }
        match self {
            CenterLayout::TwoPoint { delta } => {
                if k != 2 {
                    return Err(Error::input(format!("two-point layout needs k = 2, got {k}")));
                }
                let mut far = vec![0.0; d];
                far[0] = *delta;
                Ok(vec![vec![0.0; d], far])
            }
            CenterLayout::Simplex { delta } => {
                if k == 2 {
                    return CenterLayout::TwoPoint { delta: *delta }.centers(k, d);
                }
                if d < k {
                    return Err(Error::input(format!(
                        "simplex layout with k = {k} needs d >= k, got d = {d}"
                    )));
                }
                let scale = delta / 2f64.sqrt();
                Ok((0..k)
                    .map(|a| {
                        let mut c = vec![0.0; d];
                        c[a] = scale;
                        c
                    })
                    .collect())
            }
            CenterLayout::Explicit(centers) => {
                if centers.len() != k {
                    return Err(Error::input(format!(
                        "expected {k} explicit centers, got {}",
                        centers.len()
                    )));
                }
                if let Some(a) = centers.iter().position(|c| c.len() != d) {
                    return Err(Error::input(format!(
                        "center {} has dimension {}, expected {d}",
                        a + 1,
                        centers[a].len()
                    )));
                }
                Ok(centers.clone())
            }
        }
    }
}

/// Ground-truth generative model.
#[derive(Clone, Debug, PartialEq)]
pub struct MixtureSpec {
    pub k: usize,
    pub d: usize,
    pub n: usize,
    pub centers: Vec<Vec<f64>>,
    pub noise: Noise,
    /// Sub-Gaussian scale proxy τ used for the SNR.
    pub tau: f64,
}

impl MixtureSpec {
    /// Builds and validates a spec; τ defaults to [`Noise::default_tau`] with
    /// `ball_constant`.
    pub fn new(n: usize, centers: Vec<Vec<f64>>, noise: Noise, ball_constant: f64) -> Result<Self> {
        let k = centers.len();
        let d = centers.first().map_or(0, Vec::len);
        let spec = MixtureSpec {
            k,
            d,
            n,
            centers,
            noise,
            tau: noise.default_tau(d, ball_constant),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_layout(
        n: usize,
        k: usize,
        d: usize,
        layout: &CenterLayout,
        noise: Noise,
        ball_constant: f64,
    ) -> Result<Self> {
        Self::new(n, layout.centers(k, d)?, noise, ball_constant)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::input(format!("need k >= 2 clusters, got {}", self.k)));
        }
        if self.n < 4 {
            return Err(Error::input(format!("need n >= 4 points, got {}", self.n)));
        }
        if self.n % self.k != 0 {
            return Err(Error::input(format!(
                "n = {} is not a multiple of k = {}",
                self.n, self.k
            )));
        }
        if self.d == 0 {
            return Err(Error::input("dimension d must be at least 1"));
        }
        if self.centers.len() != self.k || self.centers.iter().any(|c| c.len() != self.d) {
            return Err(Error::input("centers must be k vectors of dimension d"));
        }
        if self.centers.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::input("center coordinates must be finite"));
        }
        if !(self.tau.is_finite() && self.tau >= 0.0) {
            return Err(Error::input(format!("tau must be finite and >= 0, got {}", self.tau)));
        }
        if let Noise::SphericalGaussian { sigma } = self.noise {
            if !(sigma.is_finite() && sigma >= 0.0) {
                return Err(Error::input(format!("sigma must be finite and >= 0, got {sigma}")));
            }
        }
        let table = center_distances(&self.centers);
        for a in 0..self.k {
            for b in (a + 1)..self.k {
                if table[a][b] == 0.0 {
                    return Err(Error::input(format!(
                        "centers {} and {} coincide",
                        a + 1,
                        b + 1
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn cluster_size(&self) -> usize {
        self.n / self.k
    }
}

/// Pairwise center distances `Δ_ab = ‖μ_a − μ_b‖₂`.
pub fn center_distances(centers: &[Vec<f64>]) -> Vec<Vec<f64>> {
    centers
        .iter()
        .map(|a| centers.iter().map(|b| dist(a, b)).collect())
        .collect()
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    sq_dist(a, b).sqrt()
}

/// Separation and signal-to-noise ratio of a mixture.
#[derive(Clone, Debug, PartialEq)]
pub struct SnrReport {
    /// Δ = min over `a ≠ b` of `Δ_ab`.
    pub delta: f64,
    pub tau: f64,
    /// `s = Δ/τ` (infinite when τ = 0).
    pub snr: f64,
    pub pairwise: Vec<Vec<f64>>,
}

pub fn snr(spec: &MixtureSpec) -> Result<SnrReport> {
    if spec.centers.len() < 2 {
        return Err(Error::input("SNR needs at least two centers"));
    }
    let pairwise = center_distances(&spec.centers);
    let mut delta = f64::INFINITY;
    for a in 0..pairwise.len() {
        for b in (a + 1)..pairwise.len() {
            delta = delta.min(pairwise[a][b]);
        }
    }
    if delta == 0.0 {
        return Err(Error::input("coincident centers give zero separation"));
    }
    let snr = if spec.tau == 0.0 {
        f64::INFINITY
    } else {
        delta / spec.tau
    };
    Ok(SnrReport {
        delta,
        tau: spec.tau,
        snr,
        pairwise,
    })
}

/// Points with their true labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub points: Vec<Vec<f64>>,
    /// True labels σ*, 0-based.
    pub labels: Vec<usize>,
    /// Generating model, when known.
    pub spec: Option<MixtureSpec>,
    pub seed: Option<u64>,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn d(&self) -> usize {
        self.points.first().map_or(0, Vec::len)
    }

    /// Noise realization `g_i = h_i − μ_{σ*(i)}`; needs the generating spec.
    pub fn noise(&self, i: usize) -> Option<Vec<f64>> {
        let spec = self.spec.as_ref()?;
        let mu = &spec.centers[self.labels[i]];
        Some(self.points[i].iter().zip(mu).map(|(h, m)| h - m).collect())
    }
}

/// Draws a dataset. Identical `(spec, seed)` pairs give bit-identical output.
///
/// Draw order: the balanced label vector `(0,…,0,1,…,1,…)` is shuffled first,
/// then noise vectors are drawn for points `0..n` in order. Gaussian noise
/// draws `d` normals per point; ball noise draws the direction (`d` normals,
/// normalized) and then, for the uniform ball only, one uniform `U` giving the
/// radius `U^{1/d}`.
pub fn sample_dataset(spec: &MixtureSpec, seed: u64) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = SeededRng::new(seed);
    let ell = spec.cluster_size();
    let mut labels: Vec<usize> = (0..spec.n).map(|i| i / ell).collect();
    rng.shuffle(&mut labels);

    let d = spec.d;
    let points = labels
        .iter()
        .map(|&a| {
            let g: Vec<f64> = match spec.noise {
                Noise::SphericalGaussian { sigma } => (0..d).map(|_| sigma * rng.normal()).collect(),
                Noise::UniformSphere => rng.unit_vector(d),
                Noise::UniformBall => {
                    let u = rng.unit_vector(d);
                    let r = rng.uniform().powf(1.0 / d as f64);
                    u.into_iter().map(|x| r * x).collect()
                }
            };
            spec.centers[a].iter().zip(g).map(|(m, x)| m + x).collect()
        })
        .collect();

    Ok(Dataset {
        points,
        labels,
        spec: Some(spec.clone()),
        seed: Some(seed),
    })
}

/// Ground-truth cluster matrix `Y*` and assignment matrix `F*`.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruth {
    pub cluster_matrix: SymMatrix,
    pub assignment_matrix: AssignmentMatrix,
}

pub fn ground_truth(labels: &[usize], k: usize) -> Result<GroundTruth> {
    let a = Assignment::balanced(labels.to_vec(), k)?;
    Ok(GroundTruth {
        cluster_matrix: a.cluster_matrix(),
        assignment_matrix: a.assignment_matrix(),
    })
}
