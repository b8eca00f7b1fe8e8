//! Path ensembles and the statistics built on them: moment estimates with
//! jackknife intervals, bound checks, hitting probabilities of truncation
//! levels, blow-up fractions, and structure-function Hölder exponents.
//!
//! Every path draws its noise from `RandomStream::new(seed, path_id)`, and
//! results are collected and reduced in path order, so reports do not depend on
//! the number of worker threads.

use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;

use crate::bounds::{BoundPart, MomentBoundInputs};
use crate::coefficient::{growth_rate_constant, Coefficient, Evaluate, Family};
use crate::error::{invalid, Error, Result};
use crate::lattice::{sup_abs, Lattice};
use crate::rng::RandomStream;
use crate::solver::{field_checksum, InitialData, PathStatus, Solver, StopRule};

/// Normal quantile for two-sided 95% intervals.
pub const Z95: f64 = 1.96;

/// Smallest ensemble for which intervals are reported.
pub const MIN_PATHS_FOR_CI: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeSite {
    /// A flat lattice index.
    Site(usize),
    /// The supremum over the lattice.
    Sup,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Probe {
    pub t: f64,
    pub site: ProbeSite,
}

/// What each path should record.
pub struct PathPlan<'a> {
    pub solver: &'a Solver,
    pub init: InitialData,
    pub b: &'a dyn Evaluate,
    pub sigma: &'a dyn Evaluate,
    pub probes: Vec<Probe>,
    pub snapshot_times: Vec<f64>,
    pub stop: StopRule,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathRecord {
    pub path_id: u64,
    pub status: PathStatus,
    pub sup_history: Vec<(f64, f64)>,
    /// Probe values; `None` once the path stopped or hit its truncation level.
    pub probes: Vec<Option<f64>>,
    #[serde(skip)]
    pub snapshots: Vec<Option<Vec<f64>>>,
    pub final_field_checksum: String,
}

impl PathRecord {
    pub fn tau(&self) -> Option<f64> {
        match self.status {
            PathStatus::HitTruncation { tau } => Some(tau),
            _ => None,
        }
    }
}

/// Maps `f` over `0..n` on a pool of `workers` threads, keeping index order.
pub fn par_map<T, F>(n: usize, workers: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Send + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| invalid(format!("cannot start worker pool: {e}")))?;
    pool.install(|| (0..n as u64).into_par_iter().map(&f).collect())
}

pub fn simulate_path(plan: &PathPlan, seed: u64, path_id: u64) -> Result<PathRecord> {
    let cfg = plan.solver.config();
    let probe_steps: Vec<u64> = plan.probes.iter().map(|p| cfg.step_of(p.t)).collect();
    let snap_steps: Vec<u64> = plan
        .snapshot_times
        .iter()
        .map(|&t| cfg.step_of(t))
        .collect();
    let mut probes = vec![None; plan.probes.len()];
    let mut snapshots = vec![None; plan.snapshot_times.len()];
    let stream = RandomStream::new(seed, path_id);
    let state = plan.solver.solve_path_observed(
        &plan.init,
        plan.b,
        plan.sigma,
        &stream,
        plan.stop,
        &mut |s| {
            if s.status != PathStatus::Running {
                return;
            }
            for (k, probe) in plan.probes.iter().enumerate() {
                if probe_steps[k] == s.step {
                    probes[k] = Some(match probe.site {
                        ProbeSite::Site(i) => s.u.values[i],
                        ProbeSite::Sup => sup_abs(&s.u.values),
                    });
                }
            }
            for (k, &step) in snap_steps.iter().enumerate() {
                if step == s.step {
                    snapshots[k] = Some(s.u.values.clone());
                }
            }
        },
    )?;
    Ok(PathRecord {
        path_id,
        status: state.status,
        final_field_checksum: field_checksum(&state.u.values),
        sup_history: state.sup_history,
        probes,
        snapshots,
    })
}

pub fn run_ensemble(
    plan: &PathPlan,
    seed: u64,
    n_paths: usize,
    workers: usize,
) -> Result<Vec<PathRecord>> {
    let cfg = plan.solver.config();
    let last = cfg.steps() as f64 * cfg.dt;
    for &t in plan.probes.iter().map(|p| &p.t).chain(&plan.snapshot_times) {
        if !(t >= 0.0) || t > last + 0.5 * cfg.dt {
            return Err(invalid(format!("probe time {t} lies outside [0, {last}]")));
        }
    }
    for p in &plan.probes {
        if let ProbeSite::Site(i) = p.site {
            if i >= cfg.lattice.sites() {
                return Err(invalid(format!("probe site {i} is not on the lattice")));
            }
        }
    }
    par_map(n_paths, workers, |path| simulate_path(plan, seed, path))
}

/// Sample mean and its jackknife standard error.
pub fn jackknife_mean(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let total: f64 = values.iter().sum();
    let mean = total / n;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    // Leave-one-out means differ from the full mean by (mean - v)/(n - 1);
    // working with offsets from the first value keeps constant data exact.
    let offsets: Vec<f64> = values.iter().map(|v| v - values[0]).collect();
    let centre = offsets.iter().sum::<f64>() / n;
    let var = offsets
        .iter()
        .map(|d| ((centre - d) / (n - 1.0)).powi(2))
        .sum::<f64>()
        * (n - 1.0)
        / n;
    (mean, var.sqrt())
}

/// Wilson score interval for `hits` successes out of `n`.
pub fn wilson_interval(hits: usize, n: usize) -> (f64, f64) {
    let nf = n as f64;
    let p = hits as f64 / nf;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / nf;
    let centre = (p + z2 / (2.0 * nf)) / denom;
    let half = Z95 * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentEstimate {
    pub t: f64,
    pub site: ProbeSite,
    pub p: f64,
    /// `((1/n) Σ |u_j|^p)^{1/p}`.
    pub estimate: f64,
    pub ci_lo: Option<f64>,
    pub ci_hi: Option<f64>,
    pub n_used: usize,
    pub excluded: usize,
}

/// `Lᵖ(Ω)` norms at every probe, excluding paths without a value there.
pub fn estimate_moments(
    records: &[PathRecord],
    probes: &[Probe],
    p: f64,
) -> Result<Vec<MomentEstimate>> {
    if !(p >= 2.0) || !p.is_finite() {
        return Err(invalid(format!("moment order must be >= 2, got {p}")));
    }
    let mut out = Vec::with_capacity(probes.len());
    for (k, probe) in probes.iter().enumerate() {
        let powers: Vec<f64> = records
            .iter()
            .filter_map(|r| r.probes.get(k).copied().flatten())
            .map(|v| v.abs().powf(p))
            .collect();
        let n_used = powers.len();
        if n_used == 0 {
            return Err(Error::TooFewSamples { needed: 1, got: 0 });
        }
        let (mean, se) = jackknife_mean(&powers);
        let root = |m: f64| m.max(0.0).powf(1.0 / p);
        let (ci_lo, ci_hi) = if n_used >= MIN_PATHS_FOR_CI {
            (Some(root(mean - Z95 * se)), Some(root(mean + Z95 * se)))
        } else {
            (None, None)
        };
        out.push(MomentEstimate {
            t: probe.t,
            site: probe.site,
            p,
            estimate: root(mean),
            ci_lo,
            ci_hi,
            n_used,
            excluded: records.len() - n_used,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundCheck {
    pub t: f64,
    pub site: ProbeSite,
    pub p: f64,
    pub estimate: f64,
    pub ci_hi: f64,
    pub bound: f64,
    pub ln_bound: f64,
    /// `ln(bound / ci_hi)`; negative means a violation.
    pub ln_margin: f64,
    pub pass: bool,
}

/// Bound inputs at one probe: `t` and `p` come from the estimate, the norms of
/// the initial data from `init`, everything else from `base`.
pub fn inputs_at(
    base: &MomentBoundInputs,
    init: &InitialData,
    t: f64,
    p: f64,
) -> MomentBoundInputs {
    let mut inp = base.clone();
    inp.t = t;
    inp.p = p;
    inp.u0_sup = init.sup_norm();
    inp.u0_lp = init.lp_norm(p, inp.dimension);
    inp.j_plus = init.j_plus(t, inp.dimension);
    inp
}

/// Compares each estimate's upper interval end against the bound at the
/// estimate's `t` and `p`.
pub fn check_bound(
    estimates: &[MomentEstimate],
    base: &MomentBoundInputs,
    init: &InitialData,
    part: BoundPart,
) -> Result<Vec<BoundCheck>> {
    estimates
        .iter()
        .map(|e| {
            let inp = inputs_at(base, init, e.t, e.p);
            let bound = inp.evaluate(part)?;
            let ci_hi = e.ci_hi.unwrap_or(e.estimate);
            let ln_margin = bound.ln_value - ci_hi.ln();
            Ok(BoundCheck {
                t: e.t,
                site: e.site,
                p: e.p,
                estimate: e.estimate,
                ci_hi,
                bound: bound.value,
                ln_bound: bound.ln_value,
                ln_margin,
                pass: ln_margin >= 0.0,
            })
        })
        .collect()
}

/// Smallest constant `C` for which every estimate passes, found by bisection
/// in `ln C` over `[1e-9, 1e9]`.
pub fn calibrate_constant(
    estimates: &[MomentEstimate],
    base: &MomentBoundInputs,
    init: &InitialData,
    part: BoundPart,
) -> Result<f64> {
    if part == BoundPart::A {
        return Err(invalid("part (a) has an explicit constant"));
    }
    let passes = |c: f64| -> Result<bool> {
        let mut inp = base.clone();
        inp.constant = Some(c);
        Ok(check_bound(estimates, &inp, init, part)?
            .iter()
            .all(|b| b.pass))
    };
    let (mut lo, mut hi) = (1e-9f64.ln(), 1e9f64.ln());
    if passes(lo.exp())? {
        return Ok(lo.exp());
    }
    if !passes(hi.exp())? {
        return Err(Error::Unbounded { limit: hi.exp() });
    }
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if passes(mid.exp())? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi.exp())
}

/// Inputs for the Chebyshev reference `min(1, (bound_c / N)^p)`.
#[derive(Debug, Clone)]
pub struct ChebyshevReference {
    /// Part (c) inputs; `l_b` and `l_sigma` are replaced per level.
    pub inputs: MomentBoundInputs,
    pub samples: usize,
}

impl ChebyshevReference {
    pub fn at_level(&self, b: &Coefficient, sigma: &Coefficient, level: f64) -> Result<f64> {
        let mut inp = self.inputs.clone();
        inp.l_b = growth_rate_constant(&b.truncate(level)?, level, self.samples)?;
        inp.l_sigma = growth_rate_constant(&sigma.truncate(level)?, level, self.samples)?;
        let bound = inp.evaluate(BoundPart::C)?;
        Ok((inp.p * (bound.ln_value - level.ln())).exp().min(1.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SurvivalPoint {
    pub level: f64,
    pub hits: usize,
    pub n_paths: usize,
    /// Estimated `P(τ_N < T)`.
    pub p_hat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub chebyshev_ref: Option<f64>,
    /// Whether `p_hat ≤ reference + 3 stderr` wherever the reference is below 1.
    pub consistent_with_reference: bool,
}

/// Hitting statistics for each truncation level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StoppingStats {
    pub survival: Vec<SurvivalPoint>,
    /// `taus[path][level]`.
    pub taus: Vec<Vec<Option<f64>>>,
}

/// Runs every path once per level on shared noise and counts `τ_N < T`.
#[allow(clippy::too_many_arguments)]
pub fn stopping_time_stats(
    solver: &Solver,
    init: &InitialData,
    b: &Coefficient,
    sigma: &Coefficient,
    levels: &[f64],
    n_paths: usize,
    seed: u64,
    workers: usize,
    reference: Option<&ChebyshevReference>,
) -> Result<StoppingStats> {
    if levels.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(invalid("truncation levels must be strictly increasing"));
    }
    let solvers: Vec<Solver> = levels
        .iter()
        .map(|&n| solver.truncated(n))
        .collect::<Result<_>>()?;
    let truncated: Vec<_> = levels
        .iter()
        .map(|&n| Ok((b.truncate(n)?, sigma.truncate(n)?)))
        .collect::<Result<_>>()?;
    let horizon = solver.config().steps() as f64 * solver.config().dt;
    let taus = par_map(n_paths, workers, |path| {
        let stream = RandomStream::new(seed, path);
        solvers
            .iter()
            .zip(&truncated)
            .map(|(s, (bn, sn))| Ok(s.solve_path(init, bn, sn, &stream)?.tau()))
            .collect::<Result<Vec<_>>>()
    })?;
    let mut survival = Vec::with_capacity(levels.len());
    for (k, &level) in levels.iter().enumerate() {
        let hits = taus
            .iter()
            .filter(|t| t[k].is_some_and(|tau| tau < horizon))
            .count();
        let p_hat = hits as f64 / n_paths as f64;
        let (ci_lo, ci_hi) = wilson_interval(hits, n_paths);
        let chebyshev_ref = reference.map(|r| r.at_level(b, sigma, level)).transpose()?;
        let stderr = (p_hat * (1.0 - p_hat) / n_paths as f64).sqrt();
        let consistent = chebyshev_ref.is_none_or(|r| r >= 1.0 || p_hat <= r + 3.0 * stderr);
        survival.push(SurvivalPoint {
            level,
            hits,
            n_paths,
            p_hat,
            ci_lo,
            ci_hi,
            chebyshev_ref,
            consistent_with_reference: consistent,
        });
    }
    Ok(StoppingStats { survival, taus })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlowupPoint {
    pub horizon: f64,
    pub exploded: usize,
    pub n_paths: usize,
    pub fraction: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

/// Fraction of paths that overflow (or reach the solver's truncation level)
/// by each horizon. Each path is run once to the largest horizon; the status at
/// a smaller horizon is read off its explosion time.
#[allow(clippy::too_many_arguments)]
pub fn blowup_fraction(
    solver: &Solver,
    init: &InitialData,
    b: &Coefficient,
    sigma: &Coefficient,
    horizons: &[f64],
    n_paths: usize,
    seed: u64,
    workers: usize,
) -> Result<Vec<BlowupPoint>> {
    if !(sigma.is_zero() || matches!(sigma.family, Family::Constant { .. })) {
        return Err(Error::HypothesisViolation(format!(
            "blow-up experiments need additive noise, got diffusion {sigma}"
        )));
    }
    let longest = horizons.iter().copied().fold(f64::NAN, f64::max);
    if !(longest > 0.0) {
        return Err(invalid("need at least one positive horizon"));
    }
    let solver = solver.with_horizon(longest)?;
    let ends = par_map(n_paths, workers, |path| {
        let st = solver.solve_path(init, b, sigma, &RandomStream::new(seed, path))?;
        Ok(match st.status {
            PathStatus::Exploded { t } => Some(t),
            PathStatus::HitTruncation { tau } => Some(tau),
            _ => None,
        })
    })?;
    Ok(horizons
        .iter()
        .map(|&h| {
            let exploded = ends
                .iter()
                .filter(|e| e.is_some_and(|t| t <= h + 1e-12))
                .count();
            let (ci_lo, ci_hi) = wilson_interval(exploded, n_paths);
            BlowupPoint {
                horizon: h,
                exploded,
                n_paths,
                fraction: exploded as f64 / n_paths as f64,
                ci_lo,
                ci_hi,
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum HolderAxis {
    Space,
    Time,
}

/// Ensemble means of `|u(·+h) − u(·)|` per anchor and lag.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StructureFunction {
    pub axis: HolderAxis,
    pub lags: Vec<f64>,
    pub anchors: Vec<usize>,
    /// `values[anchor][lag]`.
    pub values: Vec<Vec<f64>>,
}

/// Spatial structure function along the first axis from one field per path.
pub fn spatial_structure(
    fields: &[&[f64]],
    lattice: &Lattice,
    lag_cells: &[usize],
    anchors: &[usize],
) -> StructureFunction {
    let n = fields.len() as f64;
    let values = anchors
        .iter()
        .map(|&a| {
            lag_cells
                .iter()
                .map(|&l| {
                    let j = lattice.shift(a, [l as isize, 0]);
                    fields.iter().map(|f| (f[j] - f[a]).abs()).sum::<f64>() / n
                })
                .collect()
        })
        .collect();
    StructureFunction {
        axis: HolderAxis::Space,
        lags: lag_cells
            .iter()
            .map(|&l| l as f64 * lattice.spacing(0))
            .collect(),
        anchors: anchors.to_vec(),
        values,
    }
}

/// Temporal structure function; `series[path][k]` is the field at the base
/// time for `k = 0` and at base time plus `lags[k-1]` otherwise.
pub fn temporal_structure(
    series: &[Vec<&[f64]>],
    lags: &[f64],
    anchors: &[usize],
) -> StructureFunction {
    let n = series.len() as f64;
    let values = anchors
        .iter()
        .map(|&a| {
            (1..=lags.len())
                .map(|k| {
                    series
                        .iter()
                        .map(|s| (s[k][a] - s[0][a]).abs())
                        .sum::<f64>()
                        / n
                })
                .collect()
        })
        .collect();
    StructureFunction {
        axis: HolderAxis::Time,
        lags: lags.to_vec(),
        anchors: anchors.to_vec(),
        values,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HolderEstimate {
    pub axis: HolderAxis,
    /// Median over anchors of the log-log slope.
    pub exponent: f64,
    /// Median over anchors of the slope's regression standard error.
    pub stderr: f64,
    pub anchors_used: usize,
    pub lags: Vec<f64>,
}

/// Least-squares slope and its standard error.
pub fn ols_slope(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let ssr: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - my - slope * (a - mx)).powi(2))
        .sum();
    let se = if x.len() > 2 {
        (ssr / (n - 2.0) / sxx).sqrt()
    } else {
        f64::NAN
    };
    (slope, se)
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

pub fn holder_exponent(sf: &StructureFunction) -> Result<HolderEstimate> {
    const MIN_LAGS: usize = 4;
    if sf.lags.len() < MIN_LAGS {
        return Err(Error::TooFewSamples {
            needed: MIN_LAGS,
            got: sf.lags.len(),
        });
    }
    let x: Vec<f64> = sf.lags.iter().map(|h| h.ln()).collect();
    let mut slopes = Vec::new();
    let mut errors = Vec::new();
    for row in &sf.values {
        if row.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            continue;
        }
        let y: Vec<f64> = row.iter().map(|v| v.ln()).collect();
        let (s, e) = ols_slope(&x, &y);
        slopes.push(s);
        errors.push(e);
    }
    if slopes.is_empty() {
        return Err(invalid("structure function vanishes at every anchor"));
    }
    Ok(HolderEstimate {
        axis: sf.axis,
        anchors_used: slopes.len(),
        exponent: median(&mut slopes),
        stderr: median(&mut errors),
        lags: sf.lags.clone(),
    })
}

/// Everything an ensemble experiment reports.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct EnsembleReport {
    pub n_paths: usize,
    pub seed: u64,
    pub config_hash: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub moment_estimates: Vec<MomentEstimate>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub bound_checks: Vec<BoundCheck>,
    /// Bound constants fitted on the run, keyed by bound part.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub calibrated_constants: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub tau_survival: Vec<SurvivalPoint>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub blowup_fraction: Vec<BlowupPoint>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub holder_estimates: Vec<HolderEstimate>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficient::Role;
    use crate::kernel::CorrelationKernel;
    use crate::solver::SolverConfig;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    fn solver(horizon: f64) -> Solver {
        let lat = Lattice::cube(1, 16.0, 64).unwrap();
        Solver::new(
            SolverConfig::new(lat, 0.01, horizon).unwrap(),
            &CorrelationKernel::white(1),
        )
        .unwrap()
    }

    #[test]
    fn wilson_and_jackknife_basics() {
        let (lo, hi) = wilson_interval(0, 100);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.05);
        let (m, se) = jackknife_mean(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        // The jackknife error of a mean equals s/√n.
        let s = (5.0f64 / 3.0).sqrt();
        assert!((se - s / 2.0).abs() < 1e-14);
    }

    #[test]
    fn jackknife_interval_coverage() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let mut covered = 0;
        for _ in 0..1000 {
            let v: Vec<f64> = (0..200)
                .map(|_| {
                    let g: f64 = StandardNormal.sample(&mut rng);
                    3.0 + g
                })
                .collect();
            let (m, se) = jackknife_mean(&v);
            if (m - 3.0).abs() <= Z95 * se {
                covered += 1;
            }
        }
        assert!((930..=970).contains(&covered), "{covered}");
    }

    #[test]
    fn deterministic_paths_have_zero_width() {
        let s = solver(0.5);
        let z = Coefficient::constant(0.0, Role::Drift);
        let init = InitialData::GaussianBump {
            height: 1.0,
            width: 1.0,
        };
        let origin = s.config().lattice.origin();
        let probes = vec![Probe {
            t: 0.5,
            site: ProbeSite::Site(origin),
        }];
        let plan = PathPlan {
            solver: &s,
            init,
            b: &z,
            sigma: &z,
            probes: probes.clone(),
            snapshot_times: vec![],
            stop: StopRule::AtTruncation,
        };
        let recs = run_ensemble(&plan, 1, 120, 2).unwrap();
        let est = estimate_moments(&recs, &probes, 2.0).unwrap();
        let exact = (1.0f64 / 1.5).sqrt();
        assert!((est[0].estimate - exact).abs() < 1e-8);
        assert_eq!(est[0].ci_lo, est[0].ci_hi);
        let inputs = MomentBoundInputs {
            l_b: 0.0,
            l_sigma: 0.0,
            b0_abs: 0.0,
            sigma0_abs: 0.0,
            tau: None,
            p: 2.0,
            alpha: 0.25,
            upsilon_alpha: 1.0,
            u0_sup: 1.0,
            u0_lp: 1.0,
            j_plus: 1.0,
            t: 0.5,
            dimension: 1,
            constant: None,
        };
        let checks = check_bound(&est, &inputs, &init, BoundPart::A).unwrap();
        assert!(checks[0].pass);
    }

    #[test]
    fn reports_do_not_depend_on_workers() {
        let s = solver(0.2);
        let z = Coefficient::constant(0.0, Role::Drift);
        let sig = Coefficient::linear(1.0, Role::Diffusion);
        let init = InitialData::GaussianBump {
            height: 1.0,
            width: 1.0,
        };
        let probes = vec![Probe {
            t: 0.2,
            site: ProbeSite::Sup,
        }];
        let plan = PathPlan {
            solver: &s,
            init,
            b: &z,
            sigma: &sig,
            probes: probes.clone(),
            snapshot_times: vec![0.1],
            stop: StopRule::AtTruncation,
        };
        let a = run_ensemble(&plan, 7, 40, 1).unwrap();
        let b = run_ensemble(&plan, 7, 40, 4).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|r| r.snapshots[0].is_some()));
    }

    #[test]
    fn stopping_levels_below_initial_sup_are_hit_at_zero() {
        let s = solver(0.3);
        let b = Coefficient::parse("zsinz", Role::Drift).unwrap();
        let sig = Coefficient::parse("zsinz", Role::Diffusion).unwrap();
        let init = InitialData::GaussianBump {
            height: 1.0,
            width: 1.0,
        };
        let st =
            stopping_time_stats(&s, &init, &b, &sig, &[0.5, 1.5, 3.0], 30, 3, 2, None).unwrap();
        assert_eq!(st.survival[0].p_hat, 1.0);
        assert!(st.taus.iter().all(|t| t[0] == Some(0.0)));
        for t in &st.taus {
            for w in t.windows(2) {
                if let Some(hi) = w[1] {
                    assert!(w[0].is_some_and(|lo| lo <= hi));
                }
            }
        }
        assert!(st.survival.windows(2).all(|w| w[0].p_hat >= w[1].p_hat));
    }

    #[test]
    fn blowup_needs_additive_noise_and_is_zero_without_forcing() {
        let s = solver(1.0);
        let z = Coefficient::constant(0.0, Role::Drift);
        let lin = Coefficient::linear(1.0, Role::Diffusion);
        let init = InitialData::GaussianBump {
            height: 1.0,
            width: 1.0,
        };
        assert!(matches!(
            blowup_fraction(&s, &init, &z, &lin, &[1.0], 10, 0, 1),
            Err(Error::HypothesisViolation(_))
        ));
        let pts = blowup_fraction(&s, &init, &z, &z, &[0.5, 1.0], 10, 0, 1).unwrap();
        assert!(pts.iter().all(|p| p.exploded == 0));
    }

    #[test]
    fn smooth_field_has_unit_spatial_slope() {
        let lat = Lattice::cube(1, 16.0, 1024).unwrap();
        let f = InitialData::GaussianBump {
            height: 1.0,
            width: 1.0,
        }
        .field(lat);
        let anchors: Vec<usize> = (0..lat.sites()).step_by(16).collect();
        let sf = spatial_structure(&[&f.values], &lat, &[1, 2, 4, 8], &anchors);
        let est = holder_exponent(&sf).unwrap();
        assert!(est.exponent >= 0.99, "{}", est.exponent);
        let short = StructureFunction {
            lags: sf.lags[..3].to_vec(),
            values: sf.values.iter().map(|r| r[..3].to_vec()).collect(),
            ..sf
        };
        assert!(matches!(
            holder_exponent(&short),
            Err(Error::TooFewSamples { .. })
        ));
    }

    #[test]
    fn ols_recovers_exact_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 1.5, 2.0, 2.5];
        let (s, e) = ols_slope(&x, &y);
        assert!((s - 0.5).abs() < 1e-15);
        assert!(e < 1e-14);
    }
}
