//! JSON and hex file formats.

use serde::{Deserialize, Serialize};

use sepqma_core::bellqma::{AcceptanceEstimate, BellProtocol, Stage2Acceptor, VerificationOutcome};
use sepqma_core::encoding::{ClassicalStateDescription, PreparationPlan};
use sepqma_core::product::{OptimizationResult, ProductState};
use sepqma_core::repetition::RepetitionReport;
use sepqma_core::separable::SeparableOperator;
use sepqma_core::{CMatrix, HermitianOperator, MultipartiteShape, PureState, C64};

use crate::error::{CliError, CliResult};

/// `{"dims": [..], "re": [[..]], "im": [[..]]}`; a missing `im` means a real matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorDoc {
    pub dims: Vec<usize>,
    pub re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<Vec<f64>>>,
}

impl OperatorDoc {
    pub fn from_operator(a: &HermitianOperator) -> Self {
        let n = a.dim();
        let re = (0..n).map(|i| (0..n).map(|j| a.get(i, j).re).collect()).collect();
        let im = (0..n).map(|i| (0..n).map(|j| a.get(i, j).im).collect()).collect();
        Self { dims: a.shape().dims().to_vec(), re, im: Some(im) }
    }

    pub fn to_operator(&self) -> CliResult<HermitianOperator> {
        let shape = MultipartiteShape::new(self.dims.clone())?;
        let n = shape.total();
        let rows_ok = |m: &Vec<Vec<f64>>| m.len() == n && m.iter().all(|r| r.len() == n);
        if !rows_ok(&self.re) || self.im.as_ref().is_some_and(|im| !rows_ok(im)) {
            return Err(CliError::Parse(format!("operator matrix must be {n}x{n} for dims {:?}", self.dims)));
        }
        let m = CMatrix::from_fn(n, n, |i, j| {
            C64::new(self.re[i][j], self.im.as_ref().map_or(0.0, |im| im[i][j]))
        });
        Ok(HermitianOperator::new(shape, m)?)
    }
}

/// `{"dims": [..], "terms": [[factor, ...], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeparableDoc {
    pub dims: Vec<usize>,
    pub terms: Vec<Vec<OperatorDoc>>,
}

impl SeparableDoc {
    pub fn from_separable(s: &SeparableOperator) -> Self {
        Self {
            dims: s.shape().dims().to_vec(),
            terms: s.terms().iter().map(|t| t.iter().map(OperatorDoc::from_operator).collect()).collect(),
        }
    }

    pub fn to_separable(&self) -> CliResult<SeparableOperator> {
        let shape = MultipartiteShape::new(self.dims.clone())?;
        let terms = self
            .terms
            .iter()
            .map(|t| t.iter().map(OperatorDoc::to_operator).collect::<CliResult<Vec<_>>>())
            .collect::<CliResult<Vec<_>>>()?;
        Ok(SeparableOperator::new(shape, terms)?)
    }
}

/// Either operator format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AnyOperatorDoc {
    Separable(SeparableDoc),
    Dense(OperatorDoc),
}

impl AnyOperatorDoc {
    pub fn dims(&self) -> &[usize] {
        match self {
            AnyOperatorDoc::Separable(s) => &s.dims,
            AnyOperatorDoc::Dense(d) => &d.dims,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorDoc {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl VectorDoc {
    pub fn from_amplitudes(v: &[C64]) -> Self {
        Self { re: v.iter().map(|z| z.re).collect(), im: v.iter().map(|z| z.im).collect() }
    }

    pub fn to_amplitudes(&self) -> CliResult<Vec<C64>> {
        if self.re.len() != self.im.len() {
            return Err(CliError::Parse("re and im must have the same length".into()));
        }
        Ok(self.re.iter().zip(&self.im).map(|(&a, &b)| C64::new(a, b)).collect())
    }

    pub fn to_state(&self) -> CliResult<PureState> {
        let amps = self.to_amplitudes()?;
        if amps.is_empty() {
            return Err(CliError::Parse("state needs at least one amplitude".into()));
        }
        Ok(PureState::normalized(MultipartiteShape::single(amps.len())?, amps)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductStateDoc {
    pub dims: Vec<usize>,
    pub locals: Vec<VectorDoc>,
}

impl ProductStateDoc {
    pub fn from_state(s: &ProductState) -> Self {
        Self { dims: s.shape().dims().to_vec(), locals: s.locals().iter().map(|v| VectorDoc::from_amplitudes(v)).collect() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationDoc {
    pub value: f64,
    pub converged: bool,
    pub iterations: usize,
    pub state: ProductStateDoc,
    pub trace: Vec<f64>,
}

impl OptimizationDoc {
    pub fn from_result(r: &OptimizationResult) -> Self {
        Self {
            value: r.value,
            converged: r.converged,
            iterations: r.iterations,
            state: ProductStateDoc::from_state(&r.state),
            trace: r.trace.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepetitionDoc {
    pub v1: f64,
    pub v2: f64,
    pub v: f64,
    pub t1t2: f64,
    pub witness_min: f64,
    pub verdict: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub violator: Option<ProductStateDoc>,
}

impl RepetitionDoc {
    pub fn from_report(r: &RepetitionReport) -> Self {
        Self {
            v1: r.v1,
            v2: r.v2,
            v: r.v,
            t1t2: r.t1t2,
            witness_min: r.witness.min,
            verdict: r.verdict.as_str().to_string(),
            violator: r.violator().map(ProductStateDoc::from_state),
        }
    }
}

/// Protocol instance: Stage-1 POVMs per prover, the Stage-2 table over
/// `[r]^m` (prover 0 most significant) and optional honest proofs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolDoc {
    pub n: u64,
    pub povms: Vec<Vec<OperatorDoc>>,
    pub stage2: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub proofs: Option<Vec<OperatorDoc>>,
}

impl ProtocolDoc {
    pub fn from_protocol(p: &BellProtocol, proofs: Option<&[HermitianOperator]>) -> Self {
        Self {
            n: p.n,
            povms: p.povms().iter().map(|povm| povm.iter().map(OperatorDoc::from_operator).collect()).collect(),
            stage2: p.stage2().table().to_vec(),
            proofs: proofs.map(|ps| ps.iter().map(OperatorDoc::from_operator).collect()),
        }
    }

    pub fn to_protocol(&self) -> CliResult<(BellProtocol, Option<Vec<HermitianOperator>>)> {
        let m = self.povms.len();
        let r = self.povms.first().map_or(0, Vec::len);
        let stage2 = Stage2Acceptor::new(m, r, self.stage2.clone())?;
        let povms = self
            .povms
            .iter()
            .map(|povm| povm.iter().map(OperatorDoc::to_operator).collect::<CliResult<Vec<_>>>())
            .collect::<CliResult<Vec<_>>>()?;
        let protocol = BellProtocol::new(self.n, povms, stage2)?;
        let proofs = self
            .proofs
            .as_ref()
            .map(|ps| ps.iter().map(OperatorDoc::to_operator).collect::<CliResult<Vec<_>>>())
            .transpose()?;
        Ok((protocol, proofs))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateDoc {
    pub trials: u64,
    pub accepted: u64,
    pub mean: f64,
    pub ci95: f64,
    pub lower: f64,
    pub upper: f64,
    pub rejections: RejectionCounts,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RejectionCounts {
    pub step3: u64,
    pub step4: u64,
    pub step5: u64,
}

impl EstimateDoc {
    pub fn from_estimate(e: &AcceptanceEstimate) -> Self {
        let mut rejections = RejectionCounts::default();
        for o in &e.outcomes {
            match o.rejection_stage.map(|s| s.as_str()) {
                Some("step3") => rejections.step3 += 1,
                Some("step4") => rejections.step4 += 1,
                Some("step5") => rejections.step5 += 1,
                _ => {}
            }
        }
        Self {
            trials: e.trials,
            accepted: e.accepted,
            mean: e.mean,
            ci95: e.ci95,
            lower: e.lower,
            upper: e.upper,
            rejections,
        }
    }
}

/// One row of the per-trial CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub trial: u64,
    pub accepted: bool,
    pub rejection_stage: String,
    pub j: Option<usize>,
    pub i: Option<usize>,
    pub n_ji: Option<u64>,
}

impl TrialRow {
    pub fn new(trial: u64, o: &VerificationOutcome) -> Self {
        Self {
            trial,
            accepted: o.accepted,
            rejection_stage: o.rejection_stage.map_or("none", |s| s.as_str()).to_string(),
            j: o.step4_pick.map(|p| p.0),
            i: o.step4_pick.map(|p| p.1),
            n_ji: o.step4_count,
        }
    }
}

/// `{"phases": [..], "rotations": [[i, j, angle], ..]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanDoc {
    pub phases: Vec<f64>,
    pub rotations: Vec<(usize, usize, f64)>,
}

impl PlanDoc {
    pub fn from_plan(p: &PreparationPlan) -> Self {
        Self { phases: p.phases.clone(), rotations: p.rotations.iter().map(|g| (g.i, g.j, g.angle)).collect() }
    }
}

pub fn description_to_hex(d: &ClassicalStateDescription) -> CliResult<String> {
    Ok(hex::encode(d.to_bytes()?))
}

pub fn description_from_hex(s: &str) -> CliResult<ClassicalStateDescription> {
    let bytes = hex::decode(s.trim()).map_err(|e| CliError::Parse(format!("invalid hex: {e}")))?;
    ClassicalStateDescription::from_bytes(&bytes).map_err(|e| CliError::Parse(e.to_string()))
}

pub fn parse_json<T: for<'de> Deserialize<'de>>(text: &str, what: &str) -> CliResult<T> {
    serde_json::from_str(text).map_err(|e| CliError::Parse(format!("{what}: {e}")))
}
