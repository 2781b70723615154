use fdee::experiments::{run_convergence_experiment, run_oracle_comparison, run_to_dir, CampaignSpec, Experiment, SchemeSet};
use fdee::oracle::GridSpec;

fn scalar_spec(trials: usize) -> CampaignSpec {
    let mut spec = CampaignSpec { trials, schemes: SchemeSet::Harvest, ..Default::default() };
    spec.cfg = spec.cfg.with_users(1, 1);
    spec.grid = GridSpec { alpha_points: 60, dl_points: 60, ul_points: 30, ..Default::default() };
    spec
}

#[test]
fn convergence_traces_rise_and_differ_between_channels() {
    let data = run_convergence_experiment(&scalar_spec(2)).unwrap();
    assert_eq!(data.runs.len(), 2);
    for r in &data.runs {
        assert_eq!(r.status, "converged");
        assert!(r.iterations() <= 50, "{}", r.iterations());
        assert!(r.max_drop() <= 1e-7);
    }
    assert_ne!(data.runs[0].objectives, data.runs[1].objectives);
    let csv = data.traces_csv();
    assert!(csv.starts_with("channel,scheme,iteration,objective,ee\n"));
    assert_eq!(csv.lines().count(), 1 + data.runs.iter().map(|r| r.iterations()).sum::<usize>());
}

#[test]
fn oracle_ratios_stay_below_grid_slack() {
    let data = run_oracle_comparison(&scalar_spec(3)).unwrap();
    for r in &data.rows {
        assert_eq!(r.status, "ok");
        assert!(r.ratio <= 1.02 && r.ratio >= 0.9, "{r:?}");
    }
}

#[test]
fn reruns_write_identical_files() {
    let spec = CampaignSpec { sweep_dbm: vec![20.0, 30.0], ..scalar_spec(2) };
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let fa = run_to_dir(&spec, Experiment::Aee, a.path()).unwrap();
    let fb = run_to_dir(&spec, Experiment::Aee, b.path()).unwrap();
    assert_eq!(fa.len(), 3);
    for (x, y) in fa.iter().zip(&fb) {
        assert_eq!(std::fs::read(x).unwrap(), std::fs::read(y).unwrap(), "{}", x.display());
    }
    let meta = std::fs::read_to_string(a.path().join("metadata.json")).unwrap();
    assert!(meta.contains("assumed_defaults") && meta.contains("\"M_T\""));
}
