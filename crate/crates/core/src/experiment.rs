//! Fidelity averaging, γ sweeps, crossover detection and the shot sampler.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::DampingParam;
use crate::code::Syndrome;
use crate::error::{Error, Result};
use crate::noise::{combine, pipeline_branches, NoiseModel, PipelineBranch, Weighting};
use crate::qmat::{c, gates, hermitian_eigen, CMatrix, DensityMatrix, PureState};
use crate::recovery::{recovered_state, SchemeKind};

const BOOTSTRAP_RESAMPLES: usize = 200;

/// |0⟩, |1⟩, |+⟩, |−⟩, |+i⟩, |−i⟩: three mutually unbiased bases.
#[derive(Clone, Debug)]
pub struct TestStateSet {
    states: Vec<PureState>,
}

impl TestStateSet {
    pub const NAMES: [&'static str; 6] = ["0", "1", "+", "-", "+i", "-i"];

    pub fn six() -> Self {
        Self {
            states: vec![
                PureState::zero(),
                PureState::one(),
                PureState::plus(),
                PureState::minus(),
                PureState::plus_i(),
                PureState::minus_i(),
            ],
        }
    }

    pub fn states(&self) -> &[PureState] {
        &self.states
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub gamma: f64,
    pub scheme: SchemeKind,
    pub fidelity: f64,
    pub stderr: f64,
    /// Shots per input state; 0 for exact evaluation.
    pub shots: u64,
    pub noise_preset: String,
}

fn output_state(
    kind: SchemeKind,
    gamma: DampingParam,
    model: Option<&NoiseModel>,
    psi: &PureState,
    weighting: Weighting,
) -> Result<DensityMatrix> {
    match model {
        None => recovered_state(kind, gamma, &psi.density()),
        Some(m) => combine(&pipeline_branches(kind, gamma, m, psi)?, weighting),
    }
}

/// Six-state average of `⟨ψ|ρ_out|ψ⟩`.
pub fn channel_fidelity(kind: SchemeKind, gamma: DampingParam, model: Option<&NoiseModel>) -> Result<f64> {
    channel_fidelity_weighted(kind, gamma, model, Weighting::Measured)
}

pub fn channel_fidelity_weighted(
    kind: SchemeKind,
    gamma: DampingParam,
    model: Option<&NoiseModel>,
    weighting: Weighting,
) -> Result<f64> {
    let set = TestStateSet::six();
    let mut total = 0.0;
    for psi in set.states() {
        total += output_state(kind, gamma, model, psi, weighting)?.fidelity(psi);
    }
    Ok((total / 6.0).clamp(0.0, 1.0))
}

/// Inclusive grid of `points` values from `start` to `stop`.
pub fn gamma_grid(start: f64, stop: f64, points: usize) -> Result<Vec<f64>> {
    if points == 0 {
        return Err(Error::Grid("grid needs at least one point".into()));
    }
    for x in [start, stop] {
        DampingParam::new(x)?;
    }
    if points == 1 {
        return Ok(vec![start]);
    }
    let step = (stop - start) / (points - 1) as f64;
    let mut g: Vec<f64> = (0..points).map(|k| start + step * k as f64).collect();
    g[points - 1] = stop;
    Ok(g)
}

/// Sweep configuration. `shots == 0` selects exact evaluation.
#[derive(Clone, Debug)]
pub struct SweepSpec<'a> {
    pub gammas: Vec<f64>,
    pub schemes: Vec<SchemeKind>,
    pub model: Option<&'a NoiseModel>,
    pub shots: u64,
    pub seed: u64,
    pub weighting: Weighting,
}

impl<'a> SweepSpec<'a> {
    pub fn exact(gammas: Vec<f64>, schemes: Vec<SchemeKind>, model: Option<&'a NoiseModel>) -> Self {
        Self {
            gammas,
            schemes,
            model,
            shots: 0,
            seed: 0,
            weighting: Weighting::Measured,
        }
    }
}

pub fn sweep(gammas: &[f64], schemes: &[SchemeKind], model: Option<&NoiseModel>) -> Result<Vec<SweepRecord>> {
    run_sweep(&SweepSpec::exact(gammas.to_vec(), schemes.to_vec(), model))
}

/// Evaluates every (γ, scheme) cell in parallel; rows come back in grid order.
pub fn run_sweep(spec: &SweepSpec<'_>) -> Result<Vec<SweepRecord>> {
    if spec.gammas.is_empty() {
        return Err(Error::Grid("empty γ grid".into()));
    }
    if spec.schemes.is_empty() {
        return Err(Error::Config("no schemes selected".into()));
    }
    let params = spec
        .gammas
        .iter()
        .map(|&g| DampingParam::new(g))
        .collect::<Result<Vec<_>>>()?;
    let preset = spec.model.map(|m| m.name.clone()).unwrap_or_else(|| "none".into());
    let cells: Vec<(usize, usize)> = (0..params.len())
        .flat_map(|gi| (0..spec.schemes.len()).map(move |si| (gi, si)))
        .collect();
    cells
        .par_iter()
        .map(|&(gi, si)| {
            let kind = spec.schemes[si];
            let gamma = params[gi];
            let (fidelity, stderr) = if spec.shots == 0 {
                (channel_fidelity_weighted(kind, gamma, spec.model, spec.weighting)?, 0.0)
            } else {
                let cell = (gi as u64) << 8 | scheme_index(kind);
                let r = shot_experiment_cell(kind, gamma, spec.model, spec.shots, spec.seed, cell, spec.weighting)?;
                (r.fidelity, r.stderr)
            };
            Ok(SweepRecord {
                gamma: gamma.value(),
                scheme: kind,
                fidelity,
                stderr,
                shots: spec.shots,
                noise_preset: preset.clone(),
            })
        })
        .collect()
}

fn scheme_index(kind: SchemeKind) -> u64 {
    SchemeKind::ALL.iter().position(|&k| k == kind).unwrap_or(0) as u64
}

/// Smallest γ where `corrected − uncorrected` goes from negative to
/// nonnegative, linearly interpolated between the bracketing grid points.
pub fn crossover(gammas: &[f64], corrected: &[f64], uncorrected: &[f64]) -> Result<Option<f64>> {
    if gammas.len() != corrected.len() || gammas.len() != uncorrected.len() {
        return Err(Error::Grid(format!(
            "{} grid points, {} corrected, {} uncorrected",
            gammas.len(),
            corrected.len(),
            uncorrected.len()
        )));
    }
    const NEG: f64 = -1e-12;
    let diff: Vec<f64> = corrected.iter().zip(uncorrected).map(|(a, b)| a - b).collect();
    for k in 1..diff.len() {
        if diff[k - 1] < NEG && diff[k] >= NEG {
            let (g0, g1) = (gammas[k - 1], gammas[k]);
            let (d0, d1) = (diff[k - 1], diff[k]);
            return Ok(Some(g0 + (g1 - g0) * (-d0) / (d1 - d0)));
        }
    }
    Ok(None)
}

/// Crossover between two sweep curves that must share a grid.
pub fn crossover_records(corrected: &[SweepRecord], uncorrected: &[SweepRecord]) -> Result<Option<f64>> {
    if corrected.len() != uncorrected.len()
        || corrected.iter().zip(uncorrected).any(|(a, b)| (a.gamma - b.gamma).abs() > 1e-12)
    {
        return Err(Error::Grid("curves are on different γ grids".into()));
    }
    let g: Vec<f64> = corrected.iter().map(|r| r.gamma).collect();
    let a: Vec<f64> = corrected.iter().map(|r| r.fidelity).collect();
    let b: Vec<f64> = uncorrected.iter().map(|r| r.fidelity).collect();
    crossover(&g, &a, &b)
}

/// Exact crossover of `kind` against the uncorrected channel on `gammas`.
pub fn find_crossover(kind: SchemeKind, model: Option<&NoiseModel>, gammas: &[f64]) -> Result<Option<f64>> {
    let recs = sweep(gammas, &[kind, SchemeKind::NoCorrection], model)?;
    let corr: Vec<SweepRecord> = recs.iter().filter(|r| r.scheme == kind).cloned().collect();
    let unc: Vec<SweepRecord> = recs.iter().filter(|r| r.scheme == SchemeKind::NoCorrection).cloned().collect();
    crossover_records(&corr, &unc)
}

/// Outcome counts of X, Y, Z measurements (`[plus, minus]` per basis) for one
/// post-selected branch.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct BasisCounts {
    pub counts: [[u64; 2]; 3],
}

impl BasisCounts {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BranchCounts {
    pub syndrome: Option<Syndrome>,
    pub tomography: BasisCounts,
}

/// Tomography counts for one input state, split by syndrome.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TomographyCounts {
    pub branches: Vec<BranchCounts>,
}

impl TomographyCounts {
    pub fn accepted(&self) -> Vec<u64> {
        self.branches.iter().map(|b| b.tomography.total()).collect()
    }
}

/// Linear inversion `(I + ⟨X⟩X + ⟨Y⟩Y + ⟨Z⟩Z)/2`, then negative eigenvalues are
/// clipped and the trace renormalized.
pub fn tomography_reconstruct(counts: &BasisCounts) -> Result<DensityMatrix> {
    let mut bloch = [0.0; 3];
    for (k, [plus, minus]) in counts.counts.iter().enumerate() {
        let n = plus + minus;
        if n == 0 {
            return Err(Error::Distribution(format!("no counts in basis {}", ["X", "Y", "Z"][k])));
        }
        bloch[k] = (*plus as f64 - *minus as f64) / n as f64;
    }
    Ok(project_bloch(bloch))
}

fn project_bloch(b: [f64; 3]) -> DensityMatrix {
    let lin = &(&(&CMatrix::identity(2) + &gates::x().scale_real(b[0])) + &gates::y().scale_real(b[1]))
        + &gates::z().scale_real(b[2]);
    let lin = lin.scale_real(0.5);
    let (vals, vecs) = hermitian_eigen(&lin).expect("Hermitian by construction");
    let clipped: Vec<f64> = vals.iter().map(|&v| v.max(0.0)).collect();
    let total: f64 = clipped.iter().sum();
    let diag: Vec<_> = clipped.iter().map(|&v| c(v / total, 0.0)).collect();
    let m = &(&vecs * &CMatrix::from_diag(&diag)) * &vecs.adjoint();
    DensityMatrix::from_matrix_unchecked(m)
}

#[derive(Clone, Debug, Serialize)]
pub struct StateShots {
    pub input: &'static str,
    pub counts: TomographyCounts,
    #[serde(skip)]
    pub rho: Option<DensityMatrix>,
    pub fidelity: f64,
    /// Branches whose tomography had an empty basis and were dropped.
    pub missing: Vec<Option<Syndrome>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ShotResult {
    pub per_state: Vec<StateShots>,
    pub fidelity: f64,
    /// Bootstrap root-mean-square error: spread plus estimated bias.
    pub stderr: f64,
}

/// Samples `shots` accepted shots per test state (split evenly over the X, Y
/// and Z bases), reconstructs the output by post-selected tomography and
/// bootstraps the standard error of the six-state average fidelity.
pub fn shot_experiment(
    kind: SchemeKind,
    gamma: DampingParam,
    model: Option<&NoiseModel>,
    shots: u64,
    seed: u64,
    weighting: Weighting,
) -> Result<ShotResult> {
    shot_experiment_cell(kind, gamma, model, shots, seed, scheme_index(kind), weighting)
}

// Exact sampling model for one input: per branch, its acceptance weight and
// the probability of reading +1 in each basis.
struct SamplingModel {
    branches: Vec<PipelineBranch>,
    accept: Vec<f64>,
    plus: Vec<[f64; 3]>,
}

impl SamplingModel {
    fn new(branches: Vec<PipelineBranch>) -> Result<Self> {
        let raw: Vec<f64> = branches
            .iter()
            .map(|b| if b.state.is_some() { b.weight(Weighting::Measured) } else { 0.0 })
            .collect();
        let total: f64 = raw.iter().sum();
        if total <= 0.0 {
            return Err(Error::ZeroProbability);
        }
        let plus = branches
            .iter()
            .map(|b| match b.state.as_ref().and_then(|s| s.bloch()) {
                Some(v) => v.map(|x| ((1.0 + x) / 2.0).clamp(0.0, 1.0)),
                None => [0.5; 3],
            })
            .collect();
        Ok(Self {
            accept: raw.iter().map(|x| x / total).collect(),
            branches,
            plus,
        })
    }

    // Cell probabilities over (branch, outcome) for one basis.
    fn cells(&self, basis: usize) -> Vec<f64> {
        self.accept
            .iter()
            .zip(&self.plus)
            .flat_map(|(a, p)| [a * p[basis], a * (1.0 - p[basis])])
            .collect()
    }
}

fn multinomial<R: Rng>(rng: &mut R, n: u64, probs: &[f64]) -> Vec<u64> {
    let mut out = vec![0; probs.len()];
    let mut left = n;
    let mut mass = 1.0;
    for (k, &p) in probs.iter().enumerate() {
        if left == 0 {
            break;
        }
        if k == probs.len() - 1 {
            out[k] = left;
            break;
        }
        let q = if mass > 0.0 { (p / mass).clamp(0.0, 1.0) } else { 0.0 };
        let draw = Binomial::new(left, q).map(|b| b.sample(rng)).unwrap_or(0);
        out[k] = draw;
        left -= draw;
        mass -= p;
    }
    out
}

fn basis_shots(total: u64) -> [u64; 3] {
    let base = total / 3;
    let extra = total % 3;
    [0, 1, 2].map(|b| base + u64::from((b as u64) < extra))
}

// cells[basis] holds counts over (branch, outcome) pairs.
fn counts_from_cells(model: &SamplingModel, cells: &[Vec<u64>; 3]) -> TomographyCounts {
    let branches = model
        .branches
        .iter()
        .enumerate()
        .map(|(k, b)| {
            let mut t = BasisCounts::default();
            for basis in 0..3 {
                t.counts[basis] = [cells[basis][2 * k], cells[basis][2 * k + 1]];
            }
            BranchCounts {
                syndrome: b.syndrome,
                tomography: t,
            }
        })
        .collect();
    TomographyCounts { branches }
}

fn reconstruct(
    model: &SamplingModel,
    counts: &TomographyCounts,
    weighting: Weighting,
) -> (Option<DensityMatrix>, Vec<Option<Syndrome>>) {
    let mut acc = CMatrix::zeros(2, 2);
    let mut total = 0.0;
    let mut missing = Vec::new();
    for (branch, bc) in model.branches.iter().zip(&counts.branches) {
        let n = bc.tomography.total();
        if n == 0 {
            continue;
        }
        match tomography_reconstruct(&bc.tomography) {
            Ok(rho) => {
                let w = match weighting {
                    Weighting::Measured => n as f64,
                    Weighting::Ideal => branch.prob,
                };
                acc = &acc + &rho.matrix().scale_real(w);
                total += w;
            }
            Err(_) => missing.push(branch.syndrome),
        }
    }
    let rho = (total > 0.0).then(|| DensityMatrix::from_matrix_unchecked(acc.scale_real(1.0 / total)));
    (rho, missing)
}

pub(crate) fn shot_experiment_cell(
    kind: SchemeKind,
    gamma: DampingParam,
    model: Option<&NoiseModel>,
    shots: u64,
    seed: u64,
    cell: u64,
    weighting: Weighting,
) -> Result<ShotResult> {
    if shots == 0 {
        return Err(Error::Config("shot count must be at least 1".into()));
    }
    let ideal = NoiseModel::ideal();
    let noise = model.unwrap_or(&ideal);
    let set = TestStateSet::six();
    let split = basis_shots(shots);

    let mut models = Vec::with_capacity(6);
    let mut per_state = Vec::with_capacity(6);
    let mut observed: Vec<[Vec<f64>; 3]> = Vec::with_capacity(6);
    for (si, psi) in set.states().iter().enumerate() {
        let sm = SamplingModel::new(pipeline_branches(kind, gamma, noise, psi)?)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(cell * 8 + si as u64);
        let cells: [Vec<u64>; 3] = [0, 1, 2].map(|b| multinomial(&mut rng, split[b], &sm.cells(b)));
        let counts = counts_from_cells(&sm, &cells);
        let (rho, missing) = reconstruct(&sm, &counts, weighting);
        let fidelity = rho.as_ref().map(|r| r.fidelity(psi)).unwrap_or(0.0);
        observed.push([0, 1, 2].map(|b| {
            let n = split[b].max(1) as f64;
            cells[b].iter().map(|&x| x as f64 / n).collect()
        }));
        per_state.push(StateShots {
            input: TestStateSet::NAMES[si],
            counts,
            rho,
            fidelity,
            missing,
        });
        models.push(sm);
    }
    let fidelity = per_state.iter().map(|s| s.fidelity).sum::<f64>() / 6.0;

    // Stratified bootstrap: resample each (state, basis) block from its
    // empirical cell frequencies.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(cell * 8 + 7);
    let mut samples = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
    for _ in 0..BOOTSTRAP_RESAMPLES {
        let mut f = 0.0;
        for (si, psi) in set.states().iter().enumerate() {
            let cells: [Vec<u64>; 3] = [0, 1, 2].map(|b| multinomial(&mut rng, split[b], &observed[si][b]));
            let counts = counts_from_cells(&models[si], &cells);
            let (rho, _) = reconstruct(&models[si], &counts, weighting);
            f += rho.map(|r| r.fidelity(psi)).unwrap_or(0.0);
        }
        samples.push(f / 6.0);
    }
    // Clipping the reconstructed Bloch vector biases fidelities of nearly
    // pure branches low, so the bootstrap bias estimate is folded in.
    let mean = samples.iter().sum::<f64>() / samples.len() as f64;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (samples.len() - 1) as f64;
    let bias = mean - fidelity;

    Ok(ShotResult {
        per_state,
        fidelity: fidelity.clamp(0.0, 1.0),
        stderr: (var + bias * bias).sqrt(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HaarEstimate {
    pub mean: f64,
    pub stderr: f64,
}

/// Monte Carlo average fidelity over Haar-random pure inputs.
pub fn haar_average_check(
    kind: SchemeKind,
    gamma: DampingParam,
    model: Option<&NoiseModel>,
    samples: usize,
    seed: u64,
) -> Result<HaarEstimate> {
    if samples == 0 {
        return Err(Error::Config("need at least one sample".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(samples);
    for _ in 0..samples {
        let z: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
        let psi = PureState::normalized(vec![c(z[0], z[1]), c(z[2], z[3])])?;
        values.push(output_state(kind, gamma, model, &psi, Weighting::Measured)?.fidelity(&psi));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 {
        values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Ok(HaarEstimate {
        mean,
        stderr: (var / n).sqrt(),
    })
}
