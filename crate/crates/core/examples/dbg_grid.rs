use hawkes_rkhs::evaluate::{l1_error};
use hawkes_rkhs::fit::{fit_rkhs_with_matrices, FitOptions};
use hawkes_rkhs::kernel::KernelConfig;
use hawkes_rkhs::model::{Criterion, IntensityModel, LinkSpec, Model};
use hawkes_rkhs::objective::default_grid_size;
use hawkes_rkhs::precompute::build_matrices;
use hawkes_rkhs::simulate::{simulate_thinning, Curve, GroundTruthModel};

fn main() {
    // univariate refractory truth, plentiful data
    let g = Curve::Sum { terms: vec![
        Curve::Truncate { upto: 0.5, inner: Box::new(Curve::Constant { value: -1.0 }) },
        Curve::After { from: 0.5, inner: Box::new(Curve::Shift { delay: 0.5, inner: Box::new(Curve::ExpDecay { amplitude: 0.8, rate: 1.0 }) }) },
    ]};
    let truth = GroundTruthModel::new(vec![0.5], vec![vec![g]], 5.0).unwrap();
    let train = simulate_thinning(&truth, 2000.0, 50.0, 3).unwrap();
    println!("univariate N = {}", train.count(0));
    let m = default_grid_size(&train);
    let link = LinkSpec { omega: 100.0, criterion: Criterion::Mle };
    for gamma in [10.0, 100.0] {
        let kernel = KernelConfig::new(gamma, 5.0).unwrap();
        let mats = build_matrices(&train, &kernel, m).unwrap();
        for eta in [0.1, 1.0, 10.0, 100.0] {
            let out = fit_rkhs_with_matrices(&train, &mats, eta, &link, &FitOptions::default(), None).unwrap();
            let model = Model::Rkhs(out.params);
            let l1 = l1_error(&truth, &model, 0, 0, 2001);
            print!("g={gamma:<4} e={eta:<5} l1={l1:5.3} mu={:.3} curve:", match &model { Model::Rkhs(t) => t.mu[0], _ => 0.0 });
            for lag in [0.0, 0.25, 0.5, 0.75, 1.0, 2.0, 4.0] {
                print!(" {:5.2}", model.interaction(0, 0, lag));
            }
            println!();
        }
    }
    println!("truth:                         -1.00 -1.00  *0.80  0.62  0.49  0.18  0.02 (mu 0.5)");
}
