//! Lattice moments are stable under enlarging the box and halving the time step.

use she_core::coefficient::{Coefficient, Role};
use she_core::kernel::CorrelationKernel;
use she_core::lattice::Lattice;
use she_core::montecarlo::{
    estimate_moments, run_ensemble, MomentEstimate, PathPlan, Probe, ProbeSite,
};
use she_core::solver::{InitialData, Solver, SolverConfig, StopRule};

fn second_moment(extent: f64, points: usize, dt: f64, seed: u64) -> MomentEstimate {
    let kernel: CorrelationKernel = "white,dim=1".parse().unwrap();
    let lattice = Lattice::cube(1, extent, points).unwrap();
    let solver = Solver::new(SolverConfig::new(lattice, dt, 0.25).unwrap(), &kernel).unwrap();
    let b = Coefficient::parse("linear:lambda=1", Role::Drift).unwrap();
    let sigma = Coefficient::parse("linear:lambda=0.5", Role::Diffusion).unwrap();
    let probes = vec![Probe {
        t: 0.25,
        site: ProbeSite::Site(lattice.origin()),
    }];
    let plan = PathPlan {
        solver: &solver,
        init: InitialData::GaussianBump {
            height: 1.0,
            width: 1.0,
        },
        b: &b,
        sigma: &sigma,
        probes: probes.clone(),
        snapshot_times: vec![],
        stop: StopRule::AtTruncation,
    };
    let records = run_ensemble(&plan, seed, 1000, 4).unwrap();
    estimate_moments(&records, &probes, 2.0).unwrap()[0]
}

fn assert_consistent(a: &MomentEstimate, b: &MomentEstimate) {
    // The CI half-width is 1.96 standard errors.
    let se = |e: &MomentEstimate| (e.ci_hi.unwrap() - e.ci_lo.unwrap()) / (2.0 * 1.96);
    let z = (a.estimate - b.estimate).abs() / (se(a).powi(2) + se(b).powi(2)).sqrt();
    assert!(z < 3.0, "{} vs {}: z = {z}", a.estimate, b.estimate);
}

#[test]
fn doubling_the_box_leaves_moments_unchanged() {
    assert_consistent(
        &second_moment(16.0, 128, 0.005, 1),
        &second_moment(32.0, 256, 0.005, 2),
    );
}

#[test]
fn halving_the_time_step_leaves_moments_unchanged() {
    assert_consistent(
        &second_moment(16.0, 128, 0.005, 3),
        &second_moment(16.0, 128, 0.0025, 4),
    );
}
