//! Random low-rank plus sparse problem instances with their ground truth.

use serde::{Deserialize, Serialize};

use crate::error::{PcpError, Result};
use crate::matrix::{sign, DenseMatrix, SupportMask};
use crate::prox;
use crate::rng::{self, RngState};

/// Signs of the sparse component.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignModel {
    /// Independent symmetric `+-1`.
    Random,
    /// `S0 = P_Omega sgn(L0)`.
    Coherent,
}

/// How the support of `S0` is drawn.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupportModel {
    /// Each entry independently with probability `rho`.
    #[default]
    Bernoulli,
    /// Exactly this many entries, uniformly at random (`rho` is ignored).
    FixedCount(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub n1: usize,
    pub n2: usize,
    pub r: usize,
    pub rho: f64,
    pub sign_model: SignModel,
    #[serde(default)]
    pub support: SupportModel,
    pub seed: RngState,
}

impl ProblemSpec {
    pub fn square(n: usize, r: usize, rho: f64, sign_model: SignModel, seed: u64) -> Self {
        Self {
            n1: n,
            n2: n,
            r,
            rho,
            sign_model,
            support: SupportModel::Bernoulli,
            seed: RngState::new(seed),
        }
    }

    pub fn validate(&self) -> Result<()> {
        rng::check_probability("rho", self.rho)?;
        if self.r > self.n1.min(self.n2) {
            return Err(PcpError::InvalidArgument(format!(
                "rank {} exceeds min({}, {})",
                self.r, self.n1, self.n2
            )));
        }
        if let SupportModel::FixedCount(k) = self.support {
            if k > self.n1 * self.n2 {
                return Err(PcpError::InvalidArgument(format!(
                    "support size {k} exceeds {}x{}",
                    self.n1, self.n2
                )));
            }
        }
        Ok(())
    }
}

/// `m = l0 + s0` with `s0` supported on `omega`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemInstance {
    pub l0: DenseMatrix,
    pub s0: DenseMatrix,
    pub m: DenseMatrix,
    pub omega: SupportMask,
    pub spec: ProblemSpec,
}

// Substream purposes.
const FACTOR_X: u64 = 1;
const FACTOR_Y: u64 = 2;
const SUPPORT: u64 = 3;
const SIGNS: u64 = 4;
const OBSERVED: u64 = 5;
const CORRUPTED: u64 = 6;
const CORRUPTION_SIGNS: u64 = 7;

/// `L0 = X Y^T` with i.i.d. `N(0, 1/max(n1, n2))` factors of width `r`.
pub fn gen_low_rank(n1: usize, n2: usize, r: usize, seed: RngState) -> Result<DenseMatrix> {
    if r == 0 {
        return Ok(DenseMatrix::zeros(n1, n2));
    }
    let stddev = 1.0 / (n1.max(n2) as f64).sqrt();
    let x = rng::gen_gaussian(seed.substream(FACTOR_X), n1, r, stddev)?;
    let y = rng::gen_gaussian(seed.substream(FACTOR_Y), n2, r, stddev)?;
    Ok(x.matmul_t(&y))
}

pub fn gen_problem(spec: &ProblemSpec) -> Result<ProblemInstance> {
    spec.validate()?;
    let (n1, n2) = (spec.n1, spec.n2);
    let l0 = gen_low_rank(n1, n2, spec.r, spec.seed)?;
    let support_seed = spec.seed.substream(SUPPORT);
    let omega = match spec.support {
        SupportModel::Bernoulli => rng::gen_bernoulli_mask(support_seed, n1, n2, spec.rho)?,
        SupportModel::FixedCount(k) => rng::gen_fixed_count_mask(support_seed, n1, n2, k)?,
    };
    let s0 = match spec.sign_model {
        SignModel::Random => rng::gen_signs_on(spec.seed.substream(SIGNS), &omega),
        SignModel::Coherent => prox::proj_support(&l0.map(sign), &omega)?,
    };
    let m = l0.add(&s0);
    Ok(ProblemInstance {
        l0,
        s0,
        m,
        omega,
        spec: spec.clone(),
    })
}

/// A robust completion instance: `y_obs = P_obs(l0 + s0)` with `s0` the corruptions.
#[derive(Clone, Debug, PartialEq)]
pub struct CompletionProblem {
    pub instance: ProblemInstance,
    pub obs: SupportMask,
    pub y_obs: DenseMatrix,
}

/// Observes each entry with probability `p_obs` and adds an independent `+-1`
/// corruption to each observed entry with probability `tau`.
///
/// The low-rank part comes from `spec` (its `rho`, support and sign model are
/// unused); the observation and corruption draws come from `rng`.
pub fn gen_completion_problem(
    spec: &ProblemSpec,
    p_obs: f64,
    tau: f64,
    rng: RngState,
) -> Result<CompletionProblem> {
    spec.validate()?;
    if !(p_obs > 0.0 && p_obs <= 1.0) {
        return Err(PcpError::InvalidArgument(format!(
            "p_obs must lie in (0, 1], got {p_obs}"
        )));
    }
    if !(0.0..1.0).contains(&tau) {
        return Err(PcpError::InvalidArgument(format!(
            "tau must lie in [0, 1), got {tau}"
        )));
    }
    let (n1, n2) = (spec.n1, spec.n2);
    let l0 = gen_low_rank(n1, n2, spec.r, spec.seed)?;
    let obs = rng::gen_bernoulli_mask(rng.substream(OBSERVED), n1, n2, p_obs)?;
    let omega = rng::thin_mask(rng.substream(CORRUPTED), &obs, tau)?;
    let s0 = rng::gen_signs_on(rng.substream(CORRUPTION_SIGNS), &omega);
    let m = l0.add(&s0);
    let y_obs = prox::proj_support(&m, &obs)?;
    Ok(CompletionProblem {
        instance: ProblemInstance {
            l0,
            s0,
            m,
            omega,
            spec: ProblemSpec {
                rho: tau,
                sign_model: SignModel::Random,
                support: SupportModel::Bernoulli,
                ..spec.clone()
            },
        },
        obs,
        y_obs,
    })
}

/// The same instance with half of the sparse support (rounded down) zeroed at random.
pub fn trim_support(instance: &ProblemInstance, rng: RngState) -> Result<ProblemInstance> {
    let keep = instance.omega.len() - instance.omega.len() / 2;
    let omega = rng::subsample_mask(rng, &instance.omega, keep)?;
    let s0 = prox::proj_support(&instance.s0, &omega)?;
    let m = instance.l0.add(&s0);
    Ok(ProblemInstance {
        l0: instance.l0.clone(),
        s0,
        m,
        omega,
        spec: instance.spec.clone(),
    })
}
