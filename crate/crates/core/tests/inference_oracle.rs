//! Variable elimination checked against full-joint enumeration.

mod common;

use common::{assert_close, random_evidence, random_network, rng};
use dca_core::bn::{
    enumerate_posterior, expand_noisy_or, posterior, posterior_with_order, Cpd, EvidenceSet,
    Network,
};
use proptest::prelude::*;
use rand::seq::SliceRandom;

fn ids(net: &Network) -> Vec<String> {
    net.variables.iter().map(|v| v.id.clone()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn elimination_matches_enumeration(seed in any::<u64>(), n in 1usize..=12) {
        let mut r = rng(seed);
        let net = random_network(&mut r, n, 3, 0.3, n <= 8);
        let ev = random_evidence(&mut r, &net, 4);
        let targets = ids(&net);
        let post = posterior(&net, &ev, &targets).unwrap();
        for t in &targets {
            let oracle = enumerate_posterior(&net, &ev, t).unwrap();
            let got = &post[t];
            prop_assert!((got.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            for (a, b) in got.iter().zip(&oracle) {
                prop_assert!((a - b).abs() < 1e-9, "{t}: {got:?} vs {oracle:?}");
                prop_assert!(*a >= -1e-12 && *a <= 1.0 + 1e-12);
            }
        }
    }

    #[test]
    fn observed_variable_is_certain(seed in any::<u64>()) {
        let mut r = rng(seed);
        let net = random_network(&mut r, 8, 3, 0.3, true);
        let ev = random_evidence(&mut r, &net, 5);
        for (var, state) in ev.iter() {
            let p = &posterior(&net, &ev, &[var]).unwrap()[var];
            let s = net.variable(var).unwrap().state_index(state).unwrap();
            prop_assert_eq!(p[s], 1.0);
        }
    }

    #[test]
    fn elimination_order_does_not_change_posteriors(seed in any::<u64>()) {
        let mut r = rng(seed);
        let net = random_network(&mut r, 9, 3, 0.3, true);
        let ev = random_evidence(&mut r, &net, 3);
        let all = ids(&net);
        for target in all.iter().take(3) {
            let reference = &posterior(&net, &ev, &[target]).unwrap()[target];
            for _ in 0..3 {
                let mut order: Vec<String> = all.iter().filter(|v| *v != target).cloned().collect();
                order.shuffle(&mut r);
                let (p, _) = posterior_with_order(&net, &ev, target, &order).unwrap();
                for (a, b) in p.iter().zip(reference) {
                    prop_assert!((a - b).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn native_noisy_or_equals_expanded_table(seed in any::<u64>()) {
        let mut r = rng(seed);
        let net = random_network(&mut r, 10, 4, 0.8, false);
        let mut expanded = net.clone();
        for cpd in expanded.cpds.iter_mut() {
            if let Cpd::NoisyOr(n) = cpd {
                *cpd = Cpd::Table(expand_noisy_or(n).unwrap());
            }
        }
        let ev = random_evidence(&mut r, &net, 4);
        let targets = ids(&net);
        let a = posterior(&net, &ev, &targets).unwrap();
        let b = posterior(&expanded, &ev, &targets).unwrap();
        for t in &targets {
            for (x, y) in a[t].iter().zip(&b[t]) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn chain_diagnosis_value() {
    use dca_core::bn::{Cpt, Variable};
    let net = Network::new(
        "chain",
        vec![Variable::binary("A", "A"), Variable::binary("B", "B")],
        vec![
            Cpt::prior("A", vec![0.5, 0.5]).into(),
            Cpt::new("B", &["A"], vec![vec![0.8, 0.2], vec![0.1, 0.9]]).into(),
        ],
    );
    let ev = EvidenceSet::new().with("B", "true");
    let ve = &posterior(&net, &ev, &["A"]).unwrap()["A"];
    assert_close(ve, &[0.1818181818, 0.8181818182], 1e-10);
    assert_close(ve, &enumerate_posterior(&net, &ev, "A").unwrap(), 1e-12);
}
