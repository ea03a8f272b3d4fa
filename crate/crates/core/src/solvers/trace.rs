use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Bounded,
    Dynamic,
    FiniteSum,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    HitEpsilon,
    /// Deployment mode: the gradient-norm surrogate certified the target.
    GradientSurrogate,
    /// The gradient estimate was exactly zero.
    Stationary,
    MaxIters,
    NumericalFailure,
}

/// Function-value errors injected at the two evaluation points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseRecord {
    pub incumbent_error: f64,
    pub trial_error: f64,
    /// `eps_f` for bounded noise, `-theta t s'g` for dynamic noise.
    pub bound: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingRecord {
    pub gradient_sample: usize,
    pub hessian_sample: usize,
    pub gamma_loops: usize,
    pub gamma_final: f64,
    /// Component gradients evaluated over all accuracy-loop passes.
    pub component_gradients: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    pub t: f64,
    pub eta: f64,
    pub successful: bool,
    /// `||g - grad f|| <= t eta ||g||`
    pub true_iteration: bool,
    /// `||H - hess f|| <= C eta`, when an accuracy constant is defined.
    pub hessian_true: Option<bool>,
    pub cg_iters: usize,
    /// `f(x_k) - f*`
    pub gap: f64,
    /// `log(gap_0 / gap_k)`; absent when either gap is zero.
    pub z: Option<f64>,
    pub grad_norm_true: f64,
    /// `||g_k||`
    pub grad_norm: f64,
    pub step_norm: f64,
    /// `s_k' g_k`
    pub slope: f64,
    pub dist_to_min: Option<f64>,
    pub noise: Option<NoiseRecord>,
    pub sampling: Option<SamplingRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub variant: Variant,
    pub seed: u64,
    pub epsilon: f64,
    pub initial_gap: f64,
    pub records: Vec<IterationRecord>,
    pub final_x: Vec<f64>,
    /// Gap at the state after the last record.
    pub final_gap: f64,
    pub final_dist_to_min: Option<f64>,
    pub stop_reason: StopReason,
    /// First iteration whose gradient estimate met the surrogate test.
    pub surrogate_hit: Option<usize>,
    pub failure: Option<String>,
}

impl Trace {
    /// Gap at every visited state: one per record followed by the final one.
    pub fn gaps(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.gap).chain(std::iter::once(self.final_gap)).collect()
    }

    /// Distance to the minimizer at every visited state, when known.
    pub fn distances(&self) -> Option<Vec<f64>> {
        self.records
            .iter()
            .map(|r| r.dist_to_min)
            .chain(std::iter::once(self.final_dist_to_min))
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "k,t,eta,successful,true_iteration,hessian_true,cg_iters,gap,z,grad_norm_true,grad_norm,step_norm,slope,\
             dist_to_min,gradient_sample,hessian_sample,gamma_loops,gamma_final"
        )?;
        let opt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
        for r in &self.records {
            let (gs, hs, gl, gf) = match &r.sampling {
                Some(s) => (
                    s.gradient_sample.to_string(),
                    s.hessian_sample.to_string(),
                    s.gamma_loops.to_string(),
                    format!("{:e}", s.gamma_final),
                ),
                None => Default::default(),
            };
            writeln!(
                w,
                "{},{:e},{:e},{},{},{},{},{:e},{},{:e},{:e},{:e},{:e},{},{},{},{},{}",
                r.k,
                r.t,
                r.eta,
                r.successful as u8,
                r.true_iteration as u8,
                r.hessian_true.map(|b| (b as u8).to_string()).unwrap_or_default(),
                r.cg_iters,
                r.gap,
                opt(r.z),
                r.grad_norm_true,
                r.grad_norm,
                r.step_norm,
                r.slope,
                opt(r.dist_to_min),
                gs,
                hs,
                gl,
                gf
            )?;
        }
        Ok(())
    }
}
