use lvswitch::model::{EnvCoeffs, FaceId, Prey, SwitchLaw, SwitchedSystem, SystemParams};
use lvswitch::rng::stream_rng;
use lvswitch::sim::{
    flow_step, sample_holding_time, simulate, simulate_ensemble, simulate_stream, EnvTime, IntegrationMode, SimConfig,
    Simulator,
};
use lvswitch::Error;

fn logistic(r: f64, x0: f64, t: f64) -> f64 {
    r * x0 * (r * t).exp() / (r + x0 * ((r * t).exp() - 1.0))
}

fn frozen(params: SystemParams) -> SwitchedSystem {
    SwitchedSystem::new(params, SwitchLaw::two_state(0.0, 0.0).unwrap()).unwrap()
}

fn logistic_error(h: f64) -> f64 {
    let p = SystemParams::example_51();
    let (x0, t_end) = (0.05, 4.0);
    let mut x = [x0, 0.0, 0.0];
    let n = (t_end / h).round() as usize;
    for _ in 0..n {
        x = flow_step(&x, 0, &p, h).unwrap();
    }
    (x[0] - logistic(p.r, x0, t_end)).abs()
}

#[test]
fn flow_step_keeps_equilibria_and_faces() {
    let p = SystemParams::example_51();
    for h in [1e-3, 0.1, 1.0, 3.0] {
        assert_eq!(flow_step(&[1.0, 0.0, 0.0], 1, &p, h).unwrap(), [1.0, 0.0, 0.0]);
        let x = flow_step(&[0.3, 0.0, 0.7], 0, &p, h).unwrap();
        assert_eq!(x[1], 0.0);
    }
    assert!(flow_step(&[0.3, 0.2, 0.1], 0, &p, 0.0).is_err());
    assert!(matches!(flow_step(&[0.3, 0.2, 0.1], 5, &p, 0.1), Err(Error::EnvOutOfRange { .. })));
}

#[test]
fn logistic_closed_form_and_fourth_order() {
    let e1 = logistic_error(0.1);
    let e2 = logistic_error(0.05);
    let e3 = logistic_error(0.025);
    assert!(e1 < 1e-5, "{e1}");
    let (r1, r2) = (e1 / e2, e2 / e3);
    assert!((13.0..19.0).contains(&r1), "ratio {r1}");
    assert!((13.0..19.0).contains(&r2), "ratio {r2}");
}

#[test]
fn holding_time_mean_and_successor() {
    let law = SwitchLaw::two_state(2.0, 5.0).unwrap();
    let mut rng = stream_rng(11, 0);
    let n = 1_000_000;
    let mut sum = 0.0;
    let mut sum2 = 0.0;
    for _ in 0..n {
        let (dt, next) = sample_holding_time(&mut rng, 0, &law).unwrap();
        assert_eq!(next, 1);
        sum += dt;
        sum2 += dt * dt;
    }
    let mean = sum / n as f64;
    let se = ((sum2 / n as f64 - mean * mean) / n as f64).sqrt();
    assert!((mean - 0.5).abs() < 3.0 * se, "mean {mean} se {se}");
}

#[test]
fn successor_follows_rates() {
    let law = SwitchLaw::new(vec![vec![0.0, 1.0, 3.0], vec![1.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]]).unwrap();
    let mut rng = stream_rng(3, 2);
    let n = 200_000;
    let to2 = (0..n).filter(|_| sample_holding_time(&mut rng, 0, &law).unwrap().1 == 2).count();
    let p = to2 as f64 / n as f64;
    let se = (0.75 * 0.25 / n as f64).sqrt();
    assert!((p - 0.75).abs() < 4.0 * se, "{p}");
}

#[test]
fn absorbing_environment_is_structural() {
    let law = SwitchLaw::two_state(0.0, 1.0).unwrap();
    let mut rng = stream_rng(1, 0);
    assert!(matches!(sample_holding_time(&mut rng, 0, &law), Err(Error::Structural(_))));
    assert!(sample_holding_time(&mut rng, 1, &law).is_ok());
}

#[test]
fn environment_occupancy_converges_to_stationary() {
    let sys = SwitchedSystem::new(SystemParams::example_51(), SwitchLaw::two_state(1.0, 3.0).unwrap()).unwrap();
    let cfg = SimConfig::new(&sys.params, 1e4, 5).with_dt(0.01).with_sample_every(100.0);
    let mut occ = EnvTime::new(2);
    simulate(&sys, [0.5, 0.5, 0.5], None, &cfg, &mut occ).unwrap();
    let f = occ.fractions();
    assert!((f[0] - 0.75).abs() < 0.01, "{f:?}");
    assert!((f.iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

#[test]
fn zero_rates_reduce_to_flow_composition() {
    let sys = frozen(SystemParams::example_52());
    let cfg = SimConfig::new(&sys.params, 10.0, 0).with_dt(0.25).with_sample_every(0.25);
    let x0 = [0.4, 0.3, 0.9];
    let traj = simulate(&sys, x0, Some(1), &cfg, &mut ()).unwrap();
    assert!(traj.switches.is_empty());
    let mut x = x0;
    for s in &traj.samples[1..] {
        x = flow_step(&x, 1, &sys.params, 0.25).unwrap();
        assert_eq!(s.x, x);
    }
}

#[test]
fn fixed_environment_face_converges_to_planar_equilibrium() {
    let sys = frozen(SystemParams::example_51());
    let cfg = SimConfig::new(&sys.params, 500.0, 0).with_face(FaceId::Prey1Predator);
    let traj = simulate(&sys, [0.5, 0.0, 0.5], Some(0), &cfg, &mut ()).unwrap();
    let (u, v) = sys.params.prey_predator_equilibrium(0, Prey::One).unwrap();
    let x = traj.last().x;
    assert_eq!(x[1], 0.0);
    assert!((x[0] - u).abs() < 1e-6 && (x[2] - v).abs() < 1e-6, "{x:?}");
}

#[test]
fn switch_times_replay_from_the_stream() {
    let sys = SwitchedSystem::new(SystemParams::example_51(), SwitchLaw::two_state(3.0, 1.5).unwrap()).unwrap();
    let cfg = SimConfig::new(&sys.params, 50.0, 99);
    let traj = simulate(&sys, [0.5, 0.5, 0.5], Some(0), &cfg, &mut ()).unwrap();
    let mut rng = stream_rng(99, 0);
    let (mut t, mut env) = (0.0, 0);
    for ev in &traj.switches {
        let (dt, next) = sample_holding_time(&mut rng, env, &sys.law).unwrap();
        t += dt;
        assert_eq!(ev.t, t);
        assert_eq!((ev.from, ev.to), (env, next));
        env = next;
    }
    assert!(traj.switches.len() > 50);
}

#[test]
fn samples_are_ordered_and_match_switch_log() {
    let sys = SwitchedSystem::new(SystemParams::example_52(), SwitchLaw::two_state(2.0, 2.0).unwrap()).unwrap();
    let cfg = SimConfig::new(&sys.params, 100.0, 4).with_sample_every(0.5);
    let traj = simulate(&sys, [0.5, 0.5, 0.5], None, &cfg, &mut ()).unwrap();
    assert!(traj.env0_sampled);
    assert!(traj.samples.windows(2).all(|w| w[0].t < w[1].t));
    assert_eq!(traj.last().t, 100.0);
    for s in &traj.samples {
        let env = traj.switches.iter().take_while(|e| e.t <= s.t).last().map_or(traj.env0, |e| e.to);
        assert_eq!(s.env, env, "t = {}", s.t);
    }
}

#[test]
fn identical_seed_identical_trajectory() {
    let sys = SwitchedSystem::new(SystemParams::example_51(), SwitchLaw::two_state(10.0, 10.0).unwrap()).unwrap();
    let cfg = SimConfig::new(&sys.params, 200.0, 42);
    let a = simulate(&sys, [0.3, 0.3, 1.0], None, &cfg, &mut ()).unwrap();
    let b = simulate(&sys, [0.3, 0.3, 1.0], None, &cfg, &mut ()).unwrap();
    assert_eq!(a, b);
    let c = simulate_stream(&sys, [0.3, 0.3, 1.0], None, &cfg, 1, &mut ()).unwrap();
    assert_ne!(a.samples, c.samples);
}

#[test]
fn ensemble_is_independent_of_thread_count() {
    let sys = SwitchedSystem::new(SystemParams::example_52(), SwitchLaw::two_state(10.0, 10.0).unwrap()).unwrap();
    let cfg = SimConfig::new(&sys.params, 20.0, 8).with_dt(0.01);
    let run = |threads| {
        let finals =
            simulate_ensemble(&sys, [0.5, 0.5, 1.0], None, &cfg, 100, threads, |_| (), |_, t, _| Ok(t.last().x[2]))
                .unwrap();
        let finals: Vec<f64> = finals.into_iter().map(|r| r.unwrap()).collect();
        finals.iter().sum::<f64>() / finals.len() as f64
    };
    assert_eq!(run(Some(1)).to_bits(), run(Some(4)).to_bits());

    let one = simulate_ensemble(&sys, [0.5, 0.5, 1.0], None, &cfg, 1, None, |_| (), |_, t, _| Ok(t)).unwrap();
    let single = simulate(&sys, [0.5, 0.5, 1.0], None, &cfg, &mut ()).unwrap();
    assert_eq!(one.into_iter().next().unwrap().unwrap(), single);
}

#[test]
fn ensemble_errors_carry_replicate_index() {
    let sys = SwitchedSystem::new(SystemParams::example_52(), SwitchLaw::two_state(1.0, 1.0).unwrap()).unwrap();
    let cfg = SimConfig::new(&sys.params, 1.0, 8).with_dt(0.1);
    let out = simulate_ensemble(
        &sys,
        [0.5, 0.5, 1.0],
        None,
        &cfg,
        5,
        Some(2),
        |_| (),
        |i, t, _| {
            if i == 3 {
                Err(Error::Precondition("boom".into()))
            } else {
                Ok(t.last().x)
            }
        },
    )
    .unwrap();
    assert!(out.iter().enumerate().all(|(i, r)| r.is_ok() == (i != 3)));
    assert!(matches!(&out[3], Err(Error::Replicate { index: 3, .. })));
    assert!(simulate_ensemble(&sys, [0.5, 0.5, 1.0], None, &cfg, 0, None, |_| (), |_, _, _| Ok(())).is_err());
}

#[test]
fn log_mode_matches_linear_mode() {
    let sys = SwitchedSystem::new(SystemParams::example_51(), SwitchLaw::two_state(5.0, 5.0).unwrap()).unwrap();
    let cfg = SimConfig::new(&sys.params, 30.0, 3);
    let lin = simulate(&sys, [0.4, 0.2, 1.1], None, &cfg, &mut ()).unwrap();
    let log = simulate(&sys, [0.4, 0.2, 1.1], None, &cfg.clone().with_mode(IntegrationMode::Log), &mut ()).unwrap();
    assert_eq!(lin.switches, log.switches);
    for (a, b) in lin.samples.iter().zip(&log.samples) {
        for i in 0..3 {
            assert!((a.x[i] - b.x[i]).abs() <= 1e-9 * a.x[i], "{:?} vs {:?}", a.x, b.x);
        }
    }
}

#[test]
fn log_mode_follows_decay_below_underflow() {
    // prey 2 is excluded in environment 1 of example 51 at rate about 0.147
    let sys = frozen(SystemParams::example_51());
    let cfg =
        SimConfig::new(&sys.params, 6000.0, 0).with_dt(0.01).with_sample_every(100.0).with_mode(IntegrationMode::Log);
    let traj = simulate(&sys, [0.5, 0.5, 0.5], Some(0), &cfg, &mut ()).unwrap();
    let last = traj.last();
    assert!(last.ln_x[1].is_finite() && last.ln_x[1] < -745.0, "{:?}", last.ln_x);
    assert_eq!(last.x[1], 0.0);
    let rate = sys.params.fixed_env_invasion_rate(0, Prey::Two).unwrap();
    let s = &traj.samples;
    let slope = (s[s.len() - 1].ln_x[1] - s[s.len() - 11].ln_x[1]) / (s[s.len() - 1].t - s[s.len() - 11].t);
    assert!((slope - rate).abs() < 1e-6, "{slope} vs {rate}");
}

#[test]
fn initial_state_must_lie_on_face() {
    let sys = frozen(SystemParams::example_51());
    let cfg = SimConfig::new(&sys.params, 1.0, 0).with_face(FaceId::Prey1Predator);
    assert!(matches!(Simulator::new(&sys, [0.5, 0.1, 0.5], Some(0), &cfg, 0), Err(Error::Precondition(_))));
    assert!(matches!(Simulator::new(&sys, [0.5, 0.0, 0.5], Some(2), &cfg, 0), Err(Error::EnvOutOfRange { .. })));
    // a frozen chain has no stationary distribution to draw env0 from
    assert!(Simulator::new(&sys, [0.5, 0.0, 0.5], None, &cfg, 0).is_err());
}

#[test]
fn config_validation() {
    let p = SystemParams::example_51();
    assert!(SimConfig::new(&p, 0.0, 0).validate().is_err());
    assert!(SimConfig::new(&p, 1.0, 0).with_dt(-1.0).validate().is_err());
    assert!(SimConfig::new(&p, 1.0, 0).with_dt(0.1).with_sample_every(0.01).validate().is_err());
    let e = EnvCoeffs::new(0.2, 0.2, 0.3, 0.3).unwrap();
    let q = SystemParams::new(4.0, 0.1, 0.5, 0.5, vec![e, e]).unwrap();
    assert_eq!(SimConfig::new(&q, 1.0, 0).dt_max, 2.5e-4);
}
