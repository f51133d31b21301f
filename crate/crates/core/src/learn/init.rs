use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::bn::{Cpd, Network};

/// Draws fresh parameters for every non-fixed distribution. Table rows come
/// from a symmetric Dirichlet(1) (normalized unit exponentials); noisy-OR
/// links and leak are uniform in (0.05, 0.95). Deterministic in `seed`.
pub fn initialize_parameters(structure: &Network, seed: u64) -> Network {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = structure.clone();
    for cpd in out.cpds.iter_mut().filter(|c| !c.is_fixed()) {
        match cpd {
            Cpd::Table(t) => {
                for row in t.rows.iter_mut() {
                    let draws: Vec<f64> = row
                        .iter()
                        .map(|_| rng.sample::<f64, _>(Exp1).max(f64::MIN_POSITIVE))
                        .collect();
                    let total: f64 = draws.iter().sum();
                    *row = draws.into_iter().map(|d| d / total).collect();
                }
            }
            Cpd::NoisyOr(n) => {
                for p in n.link_probs.iter_mut() {
                    *p = rng.random_range(0.05..0.95);
                }
                n.leak = rng.random_range(0.05..0.95);
            }
        }
    }
    out
}
