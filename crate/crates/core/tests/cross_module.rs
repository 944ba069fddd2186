use maxagg::boxmodel::{self, RunOptions};
use maxagg::diagnostics::{cross_check_l1, l1_distance};
use maxagg::mildsolver::{picard_solve, PicardOptions};
use maxagg::selfsimilar::{find_branches, BranchSearch};
use maxagg::{make_gaussian_initial, DiscreteDensity, Params};

/// The box model is first order in the cell width, so its distance to the
/// mild solution at a fixed time should roughly halve with `M_b`.
#[test]
fn box_model_converges_to_mild_solution() {
    let k0 = 3.0;
    let mild = {
        let g0 = make_gaussian_initial(0.5, 0.3, 800).unwrap();
        let opts = PicardOptions {
            t_final: 1.1,
            cells_per_unit: 800,
            ..Default::default()
        };
        picard_solve(&g0, k0, &opts).unwrap().0
    };
    let dist = |m_b: usize| {
        let g0 = make_gaussian_initial(0.5, 0.3, m_b).unwrap();
        let opts = RunOptions {
            steps: m_b / 10,
            ..Default::default()
        };
        let r = boxmodel::run(&g0, &Params::new(k0).unwrap(), &opts).unwrap();
        cross_check_l1(&mild, r.final_state()).unwrap()
    };
    let (d100, d200, d400) = (dist(100), dist(200), dist(400));
    assert!(d200 < 0.65 * d100 && d400 < 0.65 * d200, "{d100:e} {d200:e} {d400:e}");
}

#[test]
fn supercritical_profile_is_nearly_invariant_under_the_box_model() {
    let pair = find_branches(3.0, &BranchSearch::default()).unwrap();
    let p = &pair.supercritical.profile;
    let seed = DiscreteDensity::from_samples_normalized(200, &p.ys, &p.g_vals).unwrap();
    let target = p.to_sampled();
    let opts = RunOptions {
        steps: 5000,
        snapshot_schedule: vec![0, 5000],
        ..Default::default()
    };
    let r = boxmodel::run(&seed, &Params::new(3.0).unwrap(), &opts).unwrap();
    for (step, s) in &r.snapshots {
        let d = l1_distance(&boxmodel::rescaled_profile(s, 512), &target).unwrap();
        assert!(d < 0.05, "step {step}: {d}");
    }
}

#[test]
fn branch_rate_constants_match_their_moments() {
    for k0 in [2.5, 3.0, 5.0] {
        let pair = find_branches(k0, &BranchSearch::default()).unwrap();
        for b in [&pair.subcritical, &pair.supercritical] {
            // normalized: D N = k0 with unit mass
            assert!((b.profile.d * b.profile.n - k0).abs() < 1e-6);
            assert!((b.profile.g1 - b.profile.n).abs() / b.profile.n < 1e-3);
        }
        assert!(pair.subcritical.g_half < 2.0 && pair.supercritical.g_half > 2.0);
    }
}
