use std::f64::consts::PI;

use rendezvous_core::closed_loop::{Channel, ClosedLoop, FullState, Subsystem, Thresholds};
use rendezvous_core::controllers::DwellThreshold;
use rendezvous_core::hcw::{hcw_stm, OrbitParams, RelativeState};
use rendezvous_core::hybrid::{rk4_step, Integrator};
use rendezvous_core::matrix::mul_vec;

fn params() -> OrbitParams {
    OrbitParams::new(0.0011, 0.2).unwrap()
}

/// Hill's equations written out independently of the library.
fn hill(s: &[f64; 6], n: f64) -> [f64; 6] {
    let [rx, _, rz, vx, vy, vz] = *s;
    [vx, vy, vz, 3.0 * n * n * rx + 2.0 * n * vy, -2.0 * n * vx, -n * n * rz]
}

fn rk4_orbit(x0: [f64; 6], steps: usize) -> [f64; 6] {
    let p = params();
    let h = p.period() / steps as f64;
    let mut x = x0;
    for _ in 0..steps {
        x = rk4_step(&x, |s| hill(s, p.n), h).unwrap();
    }
    x
}

#[test]
fn stm_matches_rk4_over_one_period() {
    let p = params();
    let cases = [
        [-60.0, 1000.0, 10.0, 0.0, 0.0, 0.0],
        [1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [12.0, -40.0, 200.0, 0.3, -0.05, 0.55],
    ];
    for x0 in cases {
        let exact = mul_vec(&hcw_stm(&p, p.period()), &x0);
        let oracle = rk4_orbit(x0, 100_000);
        let scale = oracle.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        for (a, b) in exact.iter().zip(oracle.iter()) {
            assert!((a - b).abs() <= 1e-6 * scale, "{exact:?} vs {oracle:?}");
        }
    }
}

#[test]
fn along_track_drift_per_orbit() {
    let oracle = rk4_orbit([1.0, 0.0, 0.0, 0.0, 0.0, 0.0], 100_000);
    assert!((oracle[1] + 12.0 * PI).abs() < 1e-6 * 12.0 * PI, "{}", oracle[1]);
    let exact = mul_vec(&hcw_stm(&params(), params().period()), &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    assert!((exact[1] + 12.0 * PI).abs() < 1e-9);
}

#[test]
fn closed_loop_integrators_agree() {
    let p = params();
    let th = Thresholds {
        z: DwellThreshold::new(0.25).unwrap(),
        beta: DwellThreshold::new(0.02).unwrap(),
        alpha: DwellThreshold::new(0.01).unwrap(),
    };
    let cl = ClosedLoop::new(p, th, Subsystem::Z);
    let x0 = FullState::ready(RelativeState::new([0.0, 0.0, 200.0], [0.0, 0.0, 0.55]), &th);
    let mut opts = cl.default_options();
    opts.t_max = 3.0 * p.period();
    opts.step_h = p.period() / 1e4;
    let exact = cl.simulate(&x0, &opts).unwrap();
    opts.integrator = Integrator::Rk4;
    let approx = cl.simulate(&x0, &opts).unwrap();

    let z = |sol: &rendezvous_core::Trajectory| -> Vec<(f64, f64)> {
        sol.events.iter().filter(|e| e.channel == Channel::Z).map(|e| (e.time.t, e.record.applied)).collect()
    };
    let (ze, za) = (z(&exact), z(&approx));
    assert_eq!(ze.len(), za.len());
    for ((te, ue), (ta, ua)) in ze.iter().zip(za.iter()) {
        assert!((te - ta).abs() < 1e-3, "{te} vs {ta}");
        assert!((ue - ua).abs() < 1e-8, "{ue} vs {ua}");
    }
}
