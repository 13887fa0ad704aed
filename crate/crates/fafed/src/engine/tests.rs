use super::*;
use crate::optim::EtaMode;
use crate::problems::{make_counterexample, make_quadratic, make_quadratic_explicit};

fn quick_cfg(algorithm: Algorithm, t: u64) -> RunConfig {
    let mut cfg = RunConfig::new(algorithm);
    cfg.total_steps = t;
    cfg.record_every = 1;
    cfg.seed = 7;
    cfg
}

#[test]
fn zero_steps_is_rejected_at_validation() {
    let p = make_counterexample();
    let mut cfg = quick_cfg(Algorithm::FedAvg, 1);
    cfg.total_steps = 0;
    assert!(run_experiment(&p, &cfg).is_err());
    let mut cfg = quick_cfg(Algorithm::FedAvg, 5);
    cfg.record_every = 10;
    assert!(run_experiment(&p, &cfg).is_err());
}

#[test]
fn homogeneous_fedavg_has_identically_zero_consensus() {
    let p = make_quadratic(4, 3, 0.0, (1.0, 1.0), 0.0, 3).unwrap();
    let mut cfg = quick_cfg(Algorithm::FedAvg, 40);
    cfg.hp.eta_mode = EtaMode::Constant;
    cfg.hp.eta = 0.05;
    cfg.hp.q = 5;
    cfg.x0 = Some(1.0);
    let rec = run_experiment(&p, &cfg).unwrap();
    assert!(rec.diverged_at.is_none());
    for row in &rec.rows {
        assert_eq!(row.consensus_err, 0.0, "t = {}", row.t);
    }
}

#[test]
fn identical_configs_give_identical_records_serial_and_parallel() {
    let p = make_quadratic(5, 4, 1.0, (0.5, 2.0), 0.4, 11).unwrap();
    let mut cfg = quick_cfg(Algorithm::Fafed, 60);
    cfg.hp.q = 6;
    cfg.hp.rho_hbar = 0.05;
    let a = run_experiment(&p, &cfg).unwrap();
    let b = run_experiment(&p, &cfg).unwrap();
    assert_eq!(a.rows, b.rows);
    let mut par = cfg.clone();
    par.workers = 0;
    let c = run_experiment(&p, &par).unwrap();
    assert_eq!(a.rows, c.rows);
}

#[test]
fn accounting_matches_closed_form() {
    let p = make_quadratic(4, 2, 1.0, (0.5, 1.0), 0.1, 5).unwrap();
    let mut hp = HyperParams::default();
    hp.batch = 5;
    assert_eq!(step_evals(Algorithm::Fafed, &p, &hp), 40);
    assert_eq!(step_evals(Algorithm::FedAvg, &p, &hp), 20);

    hp.q = 10;
    let (_, comms) = sample_accounting(Algorithm::FedAvg, &p, &hp, 100);
    assert_eq!(comms, 11); // 10 syncs plus the initial broadcast

    let mut cfg = quick_cfg(Algorithm::Fafed, 30);
    cfg.hp.batch = 5;
    cfg.hp.init_batch = 12;
    cfg.hp.q = 10;
    let rec = run_experiment(&p, &cfg).unwrap();
    let last = rec.rows.last().unwrap();
    let (samples, comms) = sample_accounting(Algorithm::Fafed, &p, &cfg.hp, 30);
    assert_eq!(last.samples, samples);
    assert_eq!(last.comms, comms);
    assert_eq!(last.samples, 4 * 12 + 30 * 40);
}

#[test]
fn fafed_consensus_is_exactly_zero_on_sync_rows() {
    let p = make_quadratic(3, 4, 2.0, (0.5, 2.0), 0.3, 13).unwrap();
    let mut cfg = quick_cfg(Algorithm::Fafed, 40);
    cfg.hp.q = 8;
    let rec = run_experiment(&p, &cfg).unwrap();
    for row in &rec.rows {
        if row.t > 0 && row.t % 8 == 0 {
            assert_eq!(row.consensus_err, 0.0, "sync row t = {}", row.t);
        }
    }
}

#[test]
fn runaway_step_size_flags_divergence() {
    let p = make_quadratic_explicit(vec![vec![1.0]], vec![vec![0.0]], 0.0, 17).unwrap();
    let mut cfg = quick_cfg(Algorithm::FedAvg, 200);
    cfg.hp.eta_mode = EtaMode::Constant;
    cfg.hp.eta = 1e7;
    cfg.x0 = Some(1.0);
    let rec = run_experiment(&p, &cfg).unwrap();
    assert!(rec.diverged_at.is_some());
    assert!(rec.rows.last().unwrap().t == rec.diverged_at.unwrap());
}

#[test]
fn last_recorded_row_drops_its_metric() {
    let p = make_counterexample();
    let mut cfg = quick_cfg(Algorithm::NaiveAdaptive, 10);
    cfg.hp.eta_mode = EtaMode::Constant;
    cfg.hp.eta = 0.1;
    cfg.hp.beta = 0.5;
    cfg.hp.q = 1;
    cfg.hp.batch = 1;
    let rec = run_experiment(&p, &cfg).unwrap();
    let last = rec.rows.last().unwrap();
    assert!(last.metric_mt.is_nan());
    for row in &rec.rows[..rec.rows.len() - 1] {
        assert!(row.metric_mt.is_finite(), "t = {}", row.t);
    }
}

#[test]
fn fafed_settles_on_the_counterexample_with_per_step_sync() {
    let p = make_counterexample();
    let mut cfg = quick_cfg(Algorithm::Fafed, 2000);
    cfg.hp.q = 1;
    cfg.record_every = 2000;
    let rec = run_experiment(&p, &cfg).unwrap();
    assert!(rec.diverged_at.is_none());
    // At |x| <= 1 the global loss is x^2 / 3.
    assert!(rec.final_x[0].abs() <= 1e-2, "final x {}", rec.final_x[0]);
    assert!(rec.final_loss() <= 1e-4 / 3.0 + 1e-12);
}

#[test]
fn single_point_grid_equals_direct_run() {
    let p = make_quadratic(3, 3, 1.0, (0.5, 1.5), 0.2, 19).unwrap();
    let mut cfg = quick_cfg(Algorithm::FedAvg, 50);
    cfg.hp.eta_mode = EtaMode::Constant;
    cfg.hp.q = 5;
    let axes = vec![GridAxis {
        name: "eta".into(),
        values: vec![0.05],
    }];
    let out = grid_search(&p, &cfg, &axes).unwrap();
    let mut direct = cfg.clone();
    direct.hp.eta = 0.05;
    let rec = run_experiment(&p, &direct).unwrap();
    assert_eq!(out.best().rows, rec.rows);
    assert_eq!(out.table.len(), 1);
}

#[test]
fn grid_ties_keep_the_earliest_combination() {
    let p = make_quadratic(2, 2, 1.0, (0.5, 1.5), 0.0, 23).unwrap();
    let mut cfg = quick_cfg(Algorithm::FedAvg, 20);
    cfg.hp.eta_mode = EtaMode::Constant;
    cfg.hp.eta = 0.05;
    // Constant mode ignores rho_hbar entirely: all losses tie.
    let axes = vec![GridAxis {
        name: "rho_hbar".into(),
        values: vec![0.5, 0.7, 0.9],
    }];
    let out = grid_search(&p, &cfg, &axes).unwrap();
    assert_eq!(out.best_assignment, vec![("rho_hbar".to_string(), 0.5)]);
    assert!(grid_search(&p, &cfg, &[]).is_err());
}

#[test]
fn unknown_grid_parameter_is_rejected() {
    let p = make_counterexample();
    let cfg = quick_cfg(Algorithm::FedAvg, 5);
    let axes = vec![GridAxis {
        name: "learning_rate".into(),
        values: vec![0.1],
    }];
    assert!(grid_search(&p, &cfg, &axes).is_err());
}
