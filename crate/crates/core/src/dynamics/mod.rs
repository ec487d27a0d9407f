//! Flow drivers that move data so its persistence diagrams follow a
//! prescribed dynamic: McCann interpolation towards a target diagram, or a
//! minimizing-movement (JKO) flow of an energy functional.
//!
//! Each outer step computes the current diagrams, derives a target diagram
//! per driven degree, then runs a fixed number of gradient steps that pull
//! the diagrams onto those targets through the filtration.

mod energy;
mod jko;

pub use energy::{eval_energy, EnergyFunctional};
pub use jko::{jko_step, JkoOptions, JkoResult, ProximalTerm};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize, Serializer};

use crate::complex::{build_rips, default_max_radius, rips_filtration_values, FilteredComplex, PointCloud, SimplexId};
use crate::diffph::{
    denoised_points, diagonal_denoise_loss, diagram_matching_loss, diagram_to_filtration_grad,
    filtration_to_points_grad, match_by_provenance, repulsion_loss, FiltrationGradient,
};
use crate::error::{Error, Result};
use crate::persistence::{compute_pairing, extract_diagram, PersistenceDiagram};
use crate::transport::{
    barycenter_targets, clamp_above_diagonal, exact_plan, mccann_interpolate, sinkhorn_plan, DiagramMeasure, Point2,
    TransportPlan, SINKHORN_MAX_ITERS, SINKHORN_TOL,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlanMethod {
    Sinkhorn,
    Exact,
}

/// What drives one homology degree.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Driver {
    /// Displacement interpolation towards a fixed target diagram.
    McCann { target: Vec<Point2> },
    /// One JKO step of the functional per outer step.
    Jko { functional: EnergyFunctional },
    /// Pull all but the `keep_top` most persistent points to the diagonal.
    Denoise { keep_top: usize },
    /// Record the diagram only.
    None,
}

impl Driver {
    pub fn name(&self) -> &'static str {
        match self {
            Self::McCann { .. } => "mccann",
            Self::Jko { .. } => "jko",
            Self::Denoise { .. } => "denoise",
            Self::None => "none",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegreeDriver {
    pub degree: usize,
    pub driver: Driver,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowConfig {
    /// Outer steps.
    pub k: usize,
    /// Inner descent steps per outer step.
    pub s: usize,
    /// Inner learning rate.
    pub eta: f64,
    /// JKO step size.
    pub tau: f64,
    pub sinkhorn_reg: f64,
    pub plan: PlanMethod,
    pub n_projections: usize,
    pub jko_inner_iters: usize,
    pub jko_lr: f64,
    pub seed: u64,
    pub lambda_rep: f64,
    pub repulsion_eps: f64,
    /// Rips construction; `None` radius means the default for the cloud.
    pub max_dim: usize,
    pub max_radius: Option<f64>,
    pub drivers: Vec<DegreeDriver>,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            k: 20,
            s: 50,
            eta: 0.01,
            tau: 0.1,
            sinkhorn_reg: 0.01,
            plan: PlanMethod::Sinkhorn,
            n_projections: 64,
            jko_inner_iters: 200,
            jko_lr: 0.05,
            seed: 0,
            lambda_rep: 1e-4,
            repulsion_eps: 0.01,
            max_dim: 2,
            max_radius: None,
            drivers: Vec::new(),
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.k == 0 || self.s == 0 {
            return bad(format!("K and S must be at least 1, got {} and {}", self.k, self.s));
        }
        for (name, v) in [("eta", self.eta), ("tau", self.tau), ("sinkhorn_reg", self.sinkhorn_reg), ("jko_lr", self.jko_lr), ("repulsion_eps", self.repulsion_eps)] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.lambda_rep >= 0.0) {
            return bad(format!("lambda_rep must be nonnegative, got {}", self.lambda_rep));
        }
        if self.n_projections == 0 {
            return bad("n_projections must be at least 1".into());
        }
        if let Some(r) = self.max_radius {
            if !(r > 0.0) {
                return bad(format!("max_radius must be positive, got {r}"));
            }
        }
        for (i, d) in self.drivers.iter().enumerate() {
            if d.degree > 1 || d.degree + 1 > self.max_dim {
                return bad(format!("cannot drive degree {} with max_dim {}", d.degree, self.max_dim));
            }
            if self.drivers[..i].iter().any(|e| e.degree == d.degree) {
                return bad(format!("degree {} driven twice", d.degree));
            }
        }
        Ok(())
    }
}

/// The optimized quantity: point coordinates pushed through Rips, or the
/// filtration values of a fixed complex directly.
#[derive(Debug, Clone, PartialEq)]
pub enum FlowState {
    Cloud(PointCloud),
    Filtration(FilteredComplex),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Snapshot {
    Points { dim: usize, coords: Vec<f64> },
    Filtration { values: Vec<f64> },
}

impl FlowState {
    pub fn snapshot(&self) -> Snapshot {
        match self {
            Self::Cloud(c) => Snapshot::Points { dim: c.dim(), coords: c.coords().to_vec() },
            Self::Filtration(k) => Snapshot::Filtration { values: k.values().to_vec() },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegreeRecord {
    pub degree: usize,
    pub driver: &'static str,
    /// `X^(k)`.
    pub diagram: PersistenceDiagram,
    /// `Y^(k)`, aligned with the diagram points.
    pub target: Vec<Point2>,
    /// Interpolation time of a McCann step.
    pub t: Option<f64>,
    /// `J(X^(k))` and `J(Y^(k))` of a JKO step.
    pub energy_before: Option<f64>,
    pub energy_after: Option<f64>,
    pub jko_seed: Option<u64>,
    pub jko_objective: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRecord {
    pub step: usize,
    /// State at the start of the step, the one `X^(k)` is computed from.
    pub state: Snapshot,
    pub degrees: Vec<DegreeRecord>,
    /// Inner objective before each descent step.
    pub losses: Vec<f64>,
    /// Simplices whose gradient was dropped because their longest edge had
    /// zero length, summed over inner steps.
    pub singular_gradients: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowTrajectory {
    pub steps: Vec<StepRecord>,
    /// State after the last completed step and its diagrams.
    pub final_state: Snapshot,
    pub final_diagrams: Vec<PersistenceDiagram>,
    /// Set when the flow aborted; the steps before the failure are kept.
    #[serde(serialize_with = "error_message")]
    pub error: Option<Error>,
}

fn error_message<S: Serializer>(e: &Option<Error>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match e {
        Some(e) => s.serialize_some(&e.to_string()),
        None => s.serialize_none(),
    }
}

impl FlowTrajectory {
    pub fn final_diagram(&self, degree: usize) -> Option<&PersistenceDiagram> {
        self.final_diagrams.iter().find(|d| d.degree == degree)
    }

    pub fn record(&self, step: usize, degree: usize) -> Option<&DegreeRecord> {
        self.steps.get(step)?.degrees.iter().find(|d| d.degree == degree)
    }
}

/// Seed of the `counter`-th sliced-W2 evaluation of a run.
pub fn derive_seed(seed: u64, counter: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(counter + 1);
    rng.next_u64()
}

fn transport_plan(x: &DiagramMeasure, z: &DiagramMeasure, config: &FlowConfig) -> Result<TransportPlan> {
    match config.plan {
        PlanMethod::Sinkhorn => sinkhorn_plan(x, z, config.sinkhorn_reg, SINKHORN_MAX_ITERS, SINKHORN_TOL),
        PlanMethod::Exact => exact_plan(x, z),
    }
}

fn current_complex(state: &FlowState, config: &FlowConfig) -> Result<FilteredComplex> {
    match state {
        FlowState::Cloud(c) => build_rips(c, config.max_dim, config.max_radius.unwrap_or_else(|| default_max_radius(c))),
        FlowState::Filtration(k) => Ok(k.clone()),
    }
}

fn diagrams_of(complex: &FilteredComplex, config: &FlowConfig) -> Result<Vec<PersistenceDiagram>> {
    let pairing = compute_pairing(complex)?;
    config.drivers.iter().map(|d| extract_diagram(&pairing, complex, d.degree)).collect()
}

/// Runs every configured driver for `config.k` outer steps.
///
/// An invalid configuration is an error. Failures once the flow is under way
/// (an empty diagram that still has a target, a transport failure) abort it
/// and are reported in [`FlowTrajectory::error`] next to the completed steps.
pub fn run_flow(initial: FlowState, config: &FlowConfig) -> Result<FlowTrajectory> {
    config.validate()?;
    let mut state = initial;
    let mut steps = Vec::with_capacity(config.k);
    let mut sliced_calls = 0u64;
    let mut error = None;
    for k in 1..=config.k {
        match outer_step(&mut state, config, k, &mut sliced_calls) {
            Ok(record) => steps.push(record),
            Err(e) => {
                error = Some(e);
                break;
            }
        }
    }
    let final_diagrams = current_complex(&state, config).and_then(|c| diagrams_of(&c, config));
    let final_diagrams = match final_diagrams {
        Ok(d) => d,
        Err(e) => {
            error.get_or_insert(e);
            Vec::new()
        }
    };
    Ok(FlowTrajectory { steps, final_state: state.snapshot(), final_diagrams, error })
}

fn outer_step(state: &mut FlowState, config: &FlowConfig, k: usize, sliced_calls: &mut u64) -> Result<StepRecord> {
    let complex = current_complex(state, config)?;
    let snapshot = state.snapshot();
    let xs = diagrams_of(&complex, config)?;
    let mut degrees = Vec::with_capacity(xs.len());
    for (dd, x) in config.drivers.iter().zip(xs) {
        let pts = x.coords();
        let mut rec = DegreeRecord {
            degree: dd.degree,
            driver: dd.driver.name(),
            diagram: x,
            target: Vec::new(),
            t: None,
            energy_before: None,
            energy_after: None,
            jko_seed: None,
            jko_objective: Vec::new(),
        };
        match &dd.driver {
            Driver::McCann { target } => {
                if target.is_empty() {
                    return Err(Error::InvalidInput("McCann driver needs a nonempty target".into()));
                }
                if pts.is_empty() {
                    return Err(Error::EmptyDiagram { degree: dd.degree, step: k });
                }
                let t = 1.0 / (config.k - k + 1) as f64;
                let (xm, zm) = (DiagramMeasure::new(pts.clone())?, DiagramMeasure::new(target.clone())?);
                let plan = transport_plan(&xm, &zm, config)?;
                let x1 = barycenter_targets(&plan, &zm)?;
                rec.target = mccann_interpolate(&pts, &x1, t)?;
                rec.t = Some(t);
            }
            Driver::Jko { functional } => {
                if pts.is_empty() {
                    return Err(Error::EmptyDiagram { degree: dd.degree, step: k });
                }
                let seed = derive_seed(config.seed, *sliced_calls);
                *sliced_calls += 1;
                let opts = JkoOptions {
                    tau: config.tau,
                    inner_iters: config.jko_inner_iters,
                    lr: config.jko_lr,
                    proximal: ProximalTerm::Sliced { n_projections: config.n_projections, seed },
                };
                let out = jko_step(&pts, functional, &opts)?;
                rec.target = out.points.into_iter().map(clamp_above_diagonal).collect();
                rec.energy_before = Some(eval_energy(functional, &pts).0);
                rec.energy_after = Some(eval_energy(functional, &rec.target).0);
                rec.jko_seed = Some(seed);
                rec.jko_objective = out.objective;
            }
            Driver::Denoise { keep_top } => {
                rec.target = pts.clone();
                for i in denoised_points(&rec.diagram, *keep_top) {
                    let mid = 0.5 * (pts[i][0] + pts[i][1]);
                    rec.target[i] = [mid, mid];
                }
            }
            Driver::None => {}
        }
        degrees.push(rec);
    }

    let provenance: Vec<Vec<(SimplexId, SimplexId)>> =
        degrees.iter().map(|r| r.diagram.points.iter().map(|p| p.provenance()).collect()).collect();
    let mut losses = Vec::with_capacity(config.s);
    let mut singular_gradients = 0;
    let mut complex = complex;
    for _ in 0..config.s {
        if let FlowState::Cloud(cloud) = &*state {
            complex = rips_filtration_values(cloud, &complex)?;
        }
        let pairing = compute_pairing(&complex)?;
        let mut total = 0.0;
        let mut fgrad = FiltrationGradient::zeros(complex.len());
        for ((dd, rec), prov) in config.drivers.iter().zip(&degrees).zip(&provenance) {
            let dgm = extract_diagram(&pairing, &complex, dd.degree)?;
            let (value, grad) = match &dd.driver {
                Driver::McCann { .. } | Driver::Jko { .. } => {
                    let matching = match_by_provenance(&dgm, prov, &rec.target)?;
                    diagram_matching_loss(&dgm, &rec.target, &matching)?
                }
                Driver::Denoise { keep_top } => diagonal_denoise_loss(&dgm, *keep_top),
                Driver::None => continue,
            };
            total += value;
            fgrad.accumulate(&diagram_to_filtration_grad(&grad, &dgm, &complex)?)?;
        }
        match state {
            FlowState::Cloud(cloud) => {
                let mut pg = filtration_to_points_grad(&fgrad, &complex, cloud)?;
                singular_gradients += pg.singular.len();
                if config.lambda_rep > 0.0 {
                    let (rv, rg) = repulsion_loss(cloud, config.repulsion_eps)?;
                    total += config.lambda_rep * rv;
                    for (g, r) in pg.grad.iter_mut().zip(rg) {
                        *g += config.lambda_rep * r;
                    }
                }
                cloud.descend(&pg.grad, config.eta)?;
            }
            FlowState::Filtration(_) => {
                let mut values: Vec<f64> =
                    complex.values().iter().zip(fgrad.values()).map(|(v, g)| v - config.eta * g).collect();
                complex.monotone_closure(&mut values);
                complex = complex.with_values(values)?;
                *state = FlowState::Filtration(complex.clone());
            }
        }
        losses.push(total);
    }
    Ok(StepRecord { step: k, state: snapshot, degrees, losses, singular_gradients })
}

/// McCann interpolation flow of degree `p` towards `target`, no other
/// degree driven.
pub fn mccann_flow(initial: FlowState, config: &FlowConfig, target: Vec<Point2>, p: usize) -> Result<FlowTrajectory> {
    let config = FlowConfig { drivers: vec![DegreeDriver { degree: p, driver: Driver::McCann { target } }], ..config.clone() };
    run_flow(initial, &config)
}

/// JKO flow of `functional` on the degree-`p` diagram, no other degree
/// driven.
pub fn energy_flow(
    initial: FlowState,
    config: &FlowConfig,
    functional: EnergyFunctional,
    p: usize,
) -> Result<FlowTrajectory> {
    let config = FlowConfig { drivers: vec![DegreeDriver { degree: p, driver: Driver::Jko { functional } }], ..config.clone() };
    run_flow(initial, &config)
}
