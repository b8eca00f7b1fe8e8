//! Exponential-Euler integration of the mild equation on a periodic lattice.
//!
//! One step maps `u ↦ S_dt[u + dt b(u) + σ(u) dW]`, where `S_dt` is the exact
//! periodic heat flow `exp(-dt|ξ|²/2)` applied mode by mode and the
//! nonlinearities are evaluated at the left endpoint (Itô coupling). With a
//! truncation level `N` the coefficient inputs are clamped to `[-N, N]`, and the
//! stopping time `τ_N` is recorded as the first grid time at which the sup-norm
//! reaches `N`.

use std::f64::consts::PI;
use std::io::{self, Read, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coefficient::Evaluate;
use crate::error::{invalid, Error, Result};
use crate::kernel::CorrelationKernel;
use crate::lattice::{sup_abs, FftPlan, Lattice, LatticeField};
use crate::noise::{NoiseIncrement, NoiseWorkspace, SpectralSynthesizer};
use crate::quadrature::{integrate, Tolerance};
use crate::rng::RandomStream;
use crate::spectral::sphere_area;

/// Default overflow guard.
pub const DEFAULT_BLOWUP_THRESHOLD: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverConfig {
    pub lattice: Lattice,
    pub dt: f64,
    pub horizon: f64,
    pub truncation_level: Option<f64>,
    pub blowup_threshold: f64,
}

impl SolverConfig {
    pub fn new(lattice: Lattice, dt: f64, horizon: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(invalid(format!("dt must be positive, got {dt}")));
        }
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(invalid(format!("horizon must be positive, got {horizon}")));
        }
        Ok(SolverConfig {
            lattice,
            dt,
            horizon,
            truncation_level: None,
            blowup_threshold: DEFAULT_BLOWUP_THRESHOLD,
        })
    }

    pub fn with_truncation(mut self, level: f64) -> Result<Self> {
        if !(level > 0.0) {
            return Err(invalid(format!(
                "truncation level must be positive, got {level}"
            )));
        }
        self.truncation_level = Some(level);
        Ok(self)
    }

    pub fn with_blowup_threshold(mut self, threshold: f64) -> Result<Self> {
        if !(threshold > 0.0) {
            return Err(invalid(format!(
                "blow-up threshold must be positive, got {threshold}"
            )));
        }
        self.blowup_threshold = threshold;
        Ok(self)
    }

    /// Number of steps needed to reach the horizon.
    pub fn steps(&self) -> u64 {
        (self.horizon / self.dt - 1e-9).ceil().max(1.0) as u64
    }

    /// Grid step nearest to time `t`.
    pub fn step_of(&self, t: f64) -> u64 {
        (t / self.dt).round() as u64
    }

    /// Advisory diagnostics; none of them prevents a run.
    pub fn warnings(&self, init: &InitialData) -> Vec<String> {
        let mut out = Vec::new();
        let need = 8.0 * self.horizon.sqrt() + init.support_radius();
        if self.lattice.min_extent() < need {
            out.push(format!(
                "box side {} is below 8*sqrt(T) + support radius = {need}; periodization may be visible",
                self.lattice.min_extent()
            ));
        }
        let dx = self.lattice.min_spacing();
        if self.dt > 0.5 * dx * dx {
            out.push(format!(
                "dt = {} exceeds dx^2/2 = {}",
                self.dt,
                0.5 * dx * dx
            ));
        }
        out
    }
}

/// Initial profiles, all radially symmetric about the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    /// `height · exp(-|x|² / (2 width²))`.
    GaussianBump {
        height: f64,
        width: f64,
    },
    /// `height · exp(1 - 1/(1 - |x|²/radius²))` inside the ball.
    CompactBump {
        height: f64,
        radius: f64,
    },
    /// All mass in the origin cell; a rough datum outside `L^∞`.
    PointMass {
        mass: f64,
    },
    Zero,
}

impl InitialData {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            InitialData::GaussianBump { height, width } => {
                height.is_finite() && width > 0.0 && width.is_finite()
            }
            InitialData::CompactBump { height, radius } => {
                height.is_finite() && radius > 0.0 && radius.is_finite()
            }
            InitialData::PointMass { mass } => mass.is_finite(),
            InitialData::Zero => true,
        };
        if ok {
            Ok(())
        } else {
            Err(invalid(format!("invalid initial data {self:?}")))
        }
    }

    /// Bounded data in every `L^p`; point masses are not.
    pub fn is_bounded(&self) -> bool {
        !matches!(self, InitialData::PointMass { .. })
    }

    pub fn support_radius(&self) -> f64 {
        match *self {
            InitialData::GaussianBump { width, .. } => 4.0 * width,
            InitialData::CompactBump { radius, .. } => radius,
            InitialData::PointMass { .. } | InitialData::Zero => 0.0,
        }
    }

    /// Profile value at distance `r` from the origin (point masses excluded).
    fn radial(&self, r: f64) -> f64 {
        match *self {
            InitialData::GaussianBump { height, width } => {
                height * (-r * r / (2.0 * width * width)).exp()
            }
            InitialData::CompactBump { height, radius } => {
                let s = r / radius;
                if s < 1.0 {
                    height * (1.0 - 1.0 / (1.0 - s * s)).exp()
                } else {
                    0.0
                }
            }
            InitialData::PointMass { .. } | InitialData::Zero => 0.0,
        }
    }

    pub fn field(&self, lattice: Lattice) -> LatticeField {
        match *self {
            InitialData::PointMass { mass } => {
                let mut f = LatticeField::zeros(lattice);
                f.values[lattice.origin()] = mass / lattice.cell_volume();
                f
            }
            _ => {
                LatticeField::from_fn(lattice, |x| self.radial((x[0] * x[0] + x[1] * x[1]).sqrt()))
            }
        }
    }

    pub fn sup_norm(&self) -> f64 {
        match *self {
            InitialData::GaussianBump { height, .. } | InitialData::CompactBump { height, .. } => {
                height.abs()
            }
            InitialData::PointMass { mass } if mass != 0.0 => f64::INFINITY,
            _ => 0.0,
        }
    }

    /// `‖u₀‖_{L^p(ℝᵈ)}`.
    pub fn lp_norm(&self, p: f64, d: usize) -> f64 {
        match *self {
            InitialData::GaussianBump { height, width } => {
                height.abs() * (2.0 * PI * width * width / p).powf(d as f64 / (2.0 * p))
            }
            InitialData::CompactBump { radius, .. } => {
                let tol = Tolerance {
                    abs: 0.0,
                    rel: 1e-12,
                    max_intervals: 500,
                };
                let m = integrate(
                    |r| self.radial(r).abs().powf(p) * r.powi(d as i32 - 1),
                    0.0,
                    radius,
                    tol,
                )
                .value;
                (sphere_area(d) * m).powf(1.0 / p)
            }
            InitialData::PointMass { mass } if mass != 0.0 => f64::INFINITY,
            _ => 0.0,
        }
    }

    /// `sup_x (p_t * |u₀|)(x)`, attained at the origin.
    pub fn j_plus(&self, t: f64, d: usize) -> f64 {
        if t <= 0.0 {
            return self.sup_norm();
        }
        let df = d as f64;
        match *self {
            InitialData::GaussianBump { height, width } => {
                let s2 = width * width;
                height.abs() * (s2 / (s2 + t)).powf(df / 2.0)
            }
            InitialData::CompactBump { radius, .. } => {
                let tol = Tolerance {
                    abs: 0.0,
                    rel: 1e-12,
                    max_intervals: 500,
                };
                let kernel = |r: f64| (2.0 * PI * t).powf(-df / 2.0) * (-r * r / (2.0 * t)).exp();
                let m = integrate(
                    |r| kernel(r) * self.radial(r).abs() * r.powi(d as i32 - 1),
                    0.0,
                    radius,
                    tol,
                )
                .value;
                sphere_area(d) * m
            }
            InitialData::PointMass { mass } => mass.abs() * (2.0 * PI * t).powf(-df / 2.0),
            InitialData::Zero => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum PathStatus {
    Running,
    HitTruncation { tau: f64 },
    Exploded { t: f64 },
    Completed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathState {
    pub u: LatticeField,
    pub step: u64,
    pub t: f64,
    /// `(t, sup_x |u(t, x)|)` for every state visited.
    pub sup_history: Vec<(f64, f64)>,
    pub status: PathStatus,
}

impl PathState {
    pub fn new(u: LatticeField) -> Self {
        let sup = u.sup_norm();
        PathState {
            u,
            step: 0,
            t: 0.0,
            sup_history: vec![(0.0, sup)],
            status: PathStatus::Running,
        }
    }

    /// Recorded `τ_N`, if the truncation level was reached.
    pub fn tau(&self) -> Option<f64> {
        match self.status {
            PathStatus::HitTruncation { tau } => Some(tau),
            _ => None,
        }
    }

    pub fn is_finished(&self) -> bool {
        !matches!(self.status, PathStatus::Running)
    }
}

/// What to do once `τ_N` is reached.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopRule {
    AtTruncation,
    Horizon,
}

/// Comparison of two truncated runs on one noise realization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairReport {
    pub level_n: f64,
    pub level_m: f64,
    pub tau_n: Option<f64>,
    pub tau_m: Option<f64>,
    /// `max |u_N − u_M|` over all states with `t < τ_N`.
    pub max_discrepancy: f64,
    pub compared_states: u64,
}

/// Scratch buffers reused across steps.
#[derive(Debug, Default, Clone)]
pub struct StepWorkspace {
    noise: NoiseWorkspace,
    dw: Vec<f64>,
    modes: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

#[inline]
fn clamp(z: f64, level: Option<f64>) -> f64 {
    match level {
        Some(n) if z.abs() > n => n.copysign(z),
        _ => z,
    }
}

fn heat_multipliers(lattice: &Lattice, dt: f64) -> Vec<f64> {
    let norm = 1.0 / lattice.sites() as f64;
    (0..lattice.sites())
        .map(|idx| {
            let xi = lattice.frequency(idx);
            norm * (-0.5 * dt * (xi[0] * xi[0] + xi[1] * xi[1])).exp()
        })
        .collect()
}

fn apply_multipliers(
    plan: &FftPlan,
    mult: &[f64],
    u: &mut [f64],
    modes: &mut Vec<Complex64>,
    scratch: &mut Vec<Complex64>,
) {
    modes.clear();
    modes.extend(u.iter().map(|&v| Complex64::new(v, 0.0)));
    plan.forward(modes, scratch);
    for (m, k) in modes.iter_mut().zip(mult) {
        *m *= *k;
    }
    plan.inverse(modes, scratch);
    for (v, m) in u.iter_mut().zip(modes.iter()) {
        *v = m.re;
    }
}

/// `e^{(dt/2)Δ} u` on the periodic lattice.
pub fn heat_semigroup_step(u: &LatticeField, dt: f64) -> LatticeField {
    let plan = FftPlan::new(u.lattice);
    let mult = heat_multipliers(&u.lattice, dt);
    let mut out = u.clone();
    apply_multipliers(
        &plan,
        &mult,
        &mut out.values,
        &mut Vec::new(),
        &mut Vec::new(),
    );
    out
}

/// A planned solver for one lattice, time step, and noise kernel.
#[derive(Debug, Clone)]
pub struct Solver {
    cfg: SolverConfig,
    plan: FftPlan,
    decay: Vec<f64>,
    synth: SpectralSynthesizer,
}

impl Solver {
    pub fn new(cfg: SolverConfig, kernel: &CorrelationKernel) -> Result<Self> {
        let synth = SpectralSynthesizer::plan(kernel, cfg.lattice)?;
        Ok(Solver {
            plan: FftPlan::new(cfg.lattice),
            decay: heat_multipliers(&cfg.lattice, cfg.dt),
            cfg,
            synth,
        })
    }

    /// The same plans with a different truncation level.
    pub fn truncated(&self, level: f64) -> Result<Solver> {
        let mut out = self.clone();
        out.cfg = self.cfg.with_truncation(level)?;
        Ok(out)
    }

    /// The same plans with a different horizon.
    pub fn with_horizon(&self, horizon: f64) -> Result<Solver> {
        let mut out = self.clone();
        SolverConfig::new(self.cfg.lattice, self.cfg.dt, horizon)?;
        out.cfg.horizon = horizon;
        Ok(out)
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    pub fn synthesizer(&self) -> &SpectralSynthesizer {
        &self.synth
    }

    pub fn initial_state(&self, init: &InitialData) -> PathState {
        PathState::new(init.field(self.cfg.lattice))
    }

    /// One exponential-Euler step with an explicit noise increment.
    pub fn step(
        &self,
        state: &mut PathState,
        b: &dyn Evaluate,
        sigma: &dyn Evaluate,
        dw: &NoiseIncrement,
        ws: &mut StepWorkspace,
    ) -> Result<()> {
        if state.u.lattice != self.cfg.lattice || dw.field.lattice != self.cfg.lattice {
            return Err(invalid("state, noise, and solver lattices differ"));
        }
        if dw.dt != self.cfg.dt {
            return Err(invalid(format!(
                "noise dt {} differs from solver dt {}",
                dw.dt, self.cfg.dt
            )));
        }
        self.advance(
            state,
            b,
            sigma,
            Some(&dw.field.values),
            self.cfg.truncation_level,
            ws,
        );
        Ok(())
    }

    fn advance(
        &self,
        state: &mut PathState,
        b: &dyn Evaluate,
        sigma: &dyn Evaluate,
        dw: Option<&[f64]>,
        level: Option<f64>,
        ws: &mut StepWorkspace,
    ) {
        let dt = self.cfg.dt;
        let drift = !b.vanishes();
        match dw {
            Some(dw) => {
                for (v, w) in state.u.values.iter_mut().zip(dw) {
                    let z = clamp(*v, level);
                    let bz = if drift { b.eval(z) } else { 0.0 };
                    *v += dt * bz + sigma.eval(z) * w;
                }
            }
            None if drift => {
                for v in state.u.values.iter_mut() {
                    *v += dt * b.eval(clamp(*v, level));
                }
            }
            None => {}
        }
        apply_multipliers(
            &self.plan,
            &self.decay,
            &mut state.u.values,
            &mut ws.modes,
            &mut ws.scratch,
        );
        state.step += 1;
        state.t = state.step as f64 * dt;
        let sup = sup_abs(&state.u.values);
        state.sup_history.push((state.t, sup));
        if !(sup <= self.cfg.blowup_threshold) {
            state.status = PathStatus::Exploded { t: state.t };
        }
    }

    // Marks τ_N if the current state has reached the level.
    fn check_level(state: &mut PathState, level: Option<f64>) {
        if let (PathStatus::Running, Some(n)) = (state.status, level) {
            if state.sup_history.last().map(|s| s.1).unwrap_or(0.0) >= n {
                state.status = PathStatus::HitTruncation { tau: state.t };
            }
        }
    }

    fn noise_for(
        &self,
        sigma: &dyn Evaluate,
        stream: &RandomStream,
        step: u64,
        ws: &mut StepWorkspace,
    ) -> bool {
        if sigma.vanishes() {
            return false;
        }
        ws.dw.resize(self.cfg.lattice.sites(), 0.0);
        self.synth
            .sample_into(self.cfg.dt, stream, step, &mut ws.noise, &mut ws.dw);
        true
    }

    /// Runs to the horizon or the stopping time, calling `observer` on every state.
    pub fn solve_path_observed(
        &self,
        init: &InitialData,
        b: &dyn Evaluate,
        sigma: &dyn Evaluate,
        stream: &RandomStream,
        stop: StopRule,
        observer: &mut dyn FnMut(&PathState),
    ) -> Result<PathState> {
        init.validate()?;
        let level = self.cfg.truncation_level;
        let steps = self.cfg.steps();
        let mut ws = StepWorkspace::default();
        let mut state = self.initial_state(init);
        loop {
            Self::check_level(&mut state, level);
            observer(&state);
            let stopped = matches!(state.status, PathStatus::Exploded { .. })
                || (stop == StopRule::AtTruncation
                    && matches!(state.status, PathStatus::HitTruncation { .. }));
            if stopped {
                break;
            }
            if state.step >= steps {
                if state.status == PathStatus::Running {
                    state.status = PathStatus::Completed;
                }
                break;
            }
            let noisy = self.noise_for(sigma, stream, state.step, &mut ws);
            let mut dw = std::mem::take(&mut ws.dw);
            self.advance(
                &mut state,
                b,
                sigma,
                noisy.then_some(&dw[..]),
                level,
                &mut ws,
            );
            std::mem::swap(&mut ws.dw, &mut dw);
        }
        Ok(state)
    }

    pub fn solve_path(
        &self,
        init: &InitialData,
        b: &dyn Evaluate,
        sigma: &dyn Evaluate,
        stream: &RandomStream,
    ) -> Result<PathState> {
        self.solve_path_observed(init, b, sigma, stream, StopRule::AtTruncation, &mut |_| {})
    }

    /// Runs the truncations at `n` and `m ≥ n` in lockstep on shared noise.
    pub fn solve_truncated_pair(
        &self,
        init: &InitialData,
        b: &dyn Evaluate,
        sigma: &dyn Evaluate,
        n: f64,
        m: f64,
        stream: &RandomStream,
    ) -> Result<PairReport> {
        init.validate()?;
        if !(n > 0.0) || !(m >= n) {
            return Err(Error::InvalidParameter(format!(
                "need 0 < N <= M, got N = {n}, M = {m}"
            )));
        }
        let steps = self.cfg.steps();
        let mut ws = StepWorkspace::default();
        let mut lo = self.initial_state(init);
        let mut hi = lo.clone();
        let mut report = PairReport {
            level_n: n,
            level_m: m,
            tau_n: None,
            tau_m: None,
            max_discrepancy: 0.0,
            compared_states: 0,
        };
        loop {
            Self::check_level(&mut lo, Some(n));
            Self::check_level(&mut hi, Some(m));
            if lo.status == PathStatus::Running {
                let d =
                    lo.u.values
                        .iter()
                        .zip(&hi.u.values)
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max);
                report.max_discrepancy = report.max_discrepancy.max(d);
                report.compared_states += 1;
            }
            let done = |s: &PathState| matches!(s.status, PathStatus::Exploded { .. });
            if lo.step >= steps || done(&lo) || done(&hi) {
                break;
            }
            let noisy = self.noise_for(sigma, stream, lo.step, &mut ws);
            let dw = std::mem::take(&mut ws.dw);
            let dw_ref = noisy.then_some(&dw[..]);
            self.advance(&mut lo, b, sigma, dw_ref, Some(n), &mut ws);
            self.advance(&mut hi, b, sigma, dw_ref, Some(m), &mut ws);
            ws.dw = dw;
        }
        report.tau_n = lo.tau();
        report.tau_m = hi.tau();
        Ok(report)
    }
}

/// FNV-1a digest of the bit patterns of a field.
pub fn field_checksum(values: &[f64]) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for v in values {
        for byte in v.to_bits().to_le_bytes() {
            h ^= byte as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01B3);
        }
    }
    format!("{h:016x}")
}

const SNAPSHOT_MAGIC: &[u8; 8] = b"SHEFIELD";

/// Writes a 32-byte header (magic, d, n per axis, reserved, t) and the values
/// as little-endian `f64` in row-major order.
pub fn write_snapshot(w: &mut impl Write, field: &LatticeField, t: f64) -> io::Result<()> {
    let l = field.lattice;
    w.write_all(SNAPSHOT_MAGIC)?;
    w.write_all(&(l.dim() as u32).to_le_bytes())?;
    w.write_all(&(l.points(0) as u32).to_le_bytes())?;
    w.write_all(&(l.points(1) as u32).to_le_bytes())?;
    w.write_all(&0u32.to_le_bytes())?;
    w.write_all(&t.to_le_bytes())?;
    for v in &field.values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Reads a snapshot back as `(d, points per axis, t, values)`.
pub fn read_snapshot(r: &mut impl Read) -> io::Result<(usize, [usize; 2], f64, Vec<f64>)> {
    let mut header = [0u8; 32];
    r.read_exact(&mut header)?;
    if &header[..8] != SNAPSHOT_MAGIC {
        return Err(io::Error::new(
            io::ErrorKind::InvalidData,
            "bad snapshot magic",
        ));
    }
    let word = |i: usize| u32::from_le_bytes(header[i..i + 4].try_into().unwrap()) as usize;
    let (d, n0, n1) = (word(8), word(12), word(16));
    let t = f64::from_le_bytes(header[24..32].try_into().unwrap());
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != 8 * n0 * n1 {
        return Err(io::Error::new(
            io::ErrorKind::InvalidData,
            "snapshot length does not match header",
        ));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((d, [n0, n1], t, values))
}
