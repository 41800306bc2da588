//! Grid-exploration probe: runs the headline simulation cells (settings 1,
//! 2, 5) and both bottleneck sweeps for a candidate grid pair and prints
//! the measured rates and stopping times next to the bands the default
//! configuration is expected to hit. Useful when tuning alternative grids.
//!
//! Usage: calibrate [delta0] [lcb_k_min] [lcb_k_max] [lcb_decay] [extra_pw_point]
//! where the pairwise grid is geometric(delta0) plus the optional extra
//! point, and the LCB grid is {2^-k : k_min <= k <= k_max} with weights
//! proportional to decay^k (decay = 1 gives uniform weights).

use modecert::certifier::CertifierConfig;
use modecert::grid::GridSpec;
use modecert::sim::{
    bottleneck_sweep, build_setting, run_trials, Method, RunConfig, SettingSpec, SweepVariable,
    TrialCase,
};
use modecert::BudgetSplit;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    // bare invocation probes the shipped default configuration
    let delta0: f64 = args.get(1).map_or(0.125, |s| s.parse().unwrap());
    let k_min: i32 = args.get(2).map_or(0, |s| s.parse().unwrap());
    let k_max: i32 = args.get(3).map_or(9, |s| s.parse().unwrap());
    let decay: f64 = args.get(4).map_or(1.15, |s| s.parse().unwrap());
    let extra: f64 = args.get(5).map_or(0.75, |s| s.parse().unwrap());

    let raw: Vec<f64> = (k_min..=k_max).map(|k| decay.powi(k - k_min)).collect();
    let total: f64 = raw.iter().sum();
    let mut weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
    weights.reverse(); // points are ascending; largest lambda last
    let lcb = GridSpec::lcb(
        (k_min..=k_max).rev().map(|k| 0.5f64.powi(k)).collect(),
        weights,
    )
    .unwrap();
    let geo = GridSpec::geometric_pairwise(delta0).unwrap();
    let pairwise_grid = if extra > 0.0 {
        let mut pts: Vec<f64> = geo.points().to_vec();
        pts.push(extra);
        let w = vec![1.0 / pts.len() as f64; pts.len()];
        GridSpec::pairwise(pts, w).unwrap()
    } else {
        geo
    };
    let certifier = CertifierConfig {
        budget: BudgetSplit::equal_split(0.05).unwrap(),
        pairwise_grid,
        lcb_grid: lcb,
    };
    println!(
        "pairwise delta0={delta0} (K={}, extra={extra}), lcb grid 2^-{k_min}..2^-{k_max} decay={decay}",
        certifier.pairwise_grid.len()
    );

    let cfg = |budgets: Vec<u64>| RunConfig {
        budgets,
        reps: 500,
        seed: 20260810,
        certifier: certifier.clone(),
        weight_gamma: 0.0,
    };

    let run = |id: u8, budgets: Vec<u64>| {
        let dist = build_setting(&SettingSpec::preset(id).unwrap()).unwrap();
        let rows = run_trials(
            &dist,
            &format!("setting{id}"),
            Method::Cite,
            TrialCase::A,
            &cfg(budgets),
        )
        .unwrap();
        for r in &rows {
            println!(
                "  setting{id} N={:4}  rate={:.3}  tau={:6.1}  tau_pw={:6.1}  tau_lu={:6.1}",
                r.budget,
                r.rate,
                r.tau_mean.unwrap_or(f64::NAN),
                r.tau_pw_mean.unwrap_or(f64::NAN),
                r.tau_lu_mean.unwrap_or(f64::NAN),
            );
        }
    };

    println!("targets: S1 .188/.892/1.00 tau90±10 | S2 .890 tau36±6, ≥.99 tau41±6 | S5 .544/.932 tau234±25");
    run(1, vec![64, 128, 256]);
    run(2, vec![64, 128]);
    run(5, vec![256, 512]);

    println!("p_r sweep at gap 0.05 (band: tau_lu*p_r in [10,25]):");
    let rows = bottleneck_sweep(
        SweepVariable::TargetMass,
        &[0.12, 0.18, 0.24, 0.36, 0.48],
        0.05,
        400,
        4000,
        99,
        &certifier,
    )
    .unwrap();
    for r in &rows {
        let lu = r.tau_lu_mean.unwrap_or(f64::NAN);
        println!(
            "  p_r={:.2}  tau_lu={:7.1}  tau_lu*p_r={:5.1}  tau_pw={:7.1}",
            r.p_r,
            lu,
            lu * r.p_r,
            r.tau_pw_mean.unwrap_or(f64::NAN)
        );
    }

    println!("delta sweep at p_r=0.24 (band: CV(tau_lu) < 0.25):");
    let rows = bottleneck_sweep(
        SweepVariable::Gap,
        &[0.02, 0.05, 0.10, 0.15, 0.215],
        0.24,
        400,
        4000,
        77,
        &certifier,
    )
    .unwrap();
    let lus: Vec<f64> = rows.iter().map(|r| r.tau_lu_mean.unwrap()).collect();
    for r in &rows {
        println!(
            "  delta={:.3}  tau_lu={:7.1}  tau_pw={:8.1}",
            r.delta,
            r.tau_lu_mean.unwrap_or(f64::NAN),
            r.tau_pw_mean.unwrap_or(f64::NAN)
        );
    }
    let mean = lus.iter().sum::<f64>() / lus.len() as f64;
    let var = lus.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / lus.len() as f64;
    println!("  tau_lu mean={mean:.1} cv={:.4}", var.sqrt() / mean);
}
