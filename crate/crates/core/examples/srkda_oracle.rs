//! Spectral-regression KDA against the dense generalized eigenproblem on a
//! small random three-class problem.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use flyact::srkda::{
    build_kernel, direct_kda_oracle, response_vectors, solve_projection, span_correlations, KernelConfig,
    ProjectionModel,
};

fn main() -> flyact::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let labels: Vec<usize> = (0..18).map(|i| i % 3).collect();
    let x = DMatrix::from_fn(18, 5, |i, j| if j == labels[i] { 2.0 } else { 0.0 } + rng.random_range(-1.0..1.0));

    for kernel in [KernelConfig::linear(0.01), KernelConfig::default()] {
        let kernel = kernel.resolve(&x)?;
        let k = build_kernel(&x, &kernel)?;
        let responses = response_vectors(&labels, 3)?;
        let omega = solve_projection(&k, &responses, kernel.regularization)?;
        let direct = direct_kda_oracle(&k, &labels, 3, kernel.regularization)?;
        let corr = span_correlations(&(&k * &omega), &(&k * &direct))?;
        println!("{} kernel (gamma {:?}): correlation per direction {corr:.9?}", kernel.kind, kernel.gamma);
    }

    let names = vec!["a".to_string(), "b".to_string(), "c".to_string()];
    let model = ProjectionModel::fit(&x, &labels, names, &KernelConfig::default())?;
    let projected = model.project(&x)?;
    println!("\nprojected training set (class: coordinates)");
    for (i, row) in projected.row_iter().enumerate().take(6) {
        println!("{}: {:8.4} {:8.4}", labels[i], row[0], row[1]);
    }
    Ok(())
}
