//! Randomized invariants for the measure substrate and the wave-speed models.

use nvw_core::measures::{push_forward, Atom, MonotoneMap, RadonMeasure, FLAT_TOL};
use nvw_core::WaveSpeedModel;
use proptest::prelude::*;

fn measure_strategy() -> impl Strategy<Value = RadonMeasure> {
    (
        2usize..40,
        proptest::collection::vec(0.0f64..3.0, 40),
        proptest::collection::vec((-5.0f64..5.0, 0.01f64..2.0), 0..4),
    )
        .prop_map(|(n, dens, raw_atoms)| {
            let grid: Vec<f64> = (0..n).map(|i| -5.0 + 10.0 * i as f64 / (n - 1) as f64).collect();
            let density: Vec<f64> = (0..n).map(|i| dens[i % dens.len()]).collect();
            let mut atoms: Vec<Atom> = Vec::new();
            let mut seen: Vec<f64> = Vec::new();
            for (p, m) in raw_atoms {
                if seen.iter().all(|&q: &f64| (q - p).abs() > 1e-3) {
                    seen.push(p);
                    atoms.push(Atom { pos: p, mass: m });
                }
            }
            RadonMeasure::from_density(grid, density, atoms, 0.0).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cumulative_is_monotone(m in measure_strategy(), xs in proptest::collection::vec(-8.0f64..8.0, 2..20)) {
        let mut sorted = xs.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for w in sorted.windows(2) {
            prop_assert!(m.cumulative(w[1]) >= m.cumulative(w[0]) - 1e-12);
        }
        prop_assert!(m.cumulative(-1e9) <= 1e-12);
        prop_assert!((m.cumulative(1e9) - m.total()).abs() <= 1e-9 * (1.0 + m.total()));
    }

    #[test]
    fn id_plus_cumulative_expands(m in measure_strategy(), a in -6.0f64..6.0, d in 0.001f64..3.0) {
        let f = m.id_plus_cumulative();
        // slope at least one between atoms, jumps exactly the atom masses
        prop_assert!(f.eval(a + d) - f.eval(a) >= d - 1e-12);
        for atom in m.atoms() {
            let jump = f.eval_right(atom.pos) - f.eval(atom.pos);
            prop_assert!((jump - atom.mass).abs() <= 1e-12);
        }
    }

    #[test]
    fn inverse_round_trips_on_increasing_stretches(m in measure_strategy(), y in -4.0f64..4.0) {
        let f = m.id_plus_cumulative();
        let target = f.eval(y);
        // only test away from jumps: there the inverse is a true inverse
        if m.atoms().iter().all(|a| (a.pos - y).abs() > 1e-6) {
            let back = f.generalized_inverse(target).unwrap();
            prop_assert!((back - y).abs() <= 1e-9, "round trip {y} -> {target} -> {back}");
        }
    }

    #[test]
    fn push_forward_preserves_mass(
        n in 3usize..40,
        w in proptest::collection::vec(0.0f64..2.0, 40),
        squash in 0.0f64..1.0,
    ) {
        // map with a flat stretch in the middle
        let xs: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let ys: Vec<f64> = xs
            .iter()
            .map(|&x| {
                if x < 0.4 {
                    x
                } else if x < 0.6 {
                    0.4 + (x - 0.4) * (1.0 - squash)
                } else {
                    x - 0.2 * squash
                }
            })
            .collect();
        let f = MonotoneMap::with_slopes(xs.clone(), ys, 1.0, 1.0);
        let weights: Vec<f64> = (0..n).map(|i| w[i % w.len()]).collect();
        let total_in: f64 = (1..n)
            .map(|i| 0.5 * (weights[i] + weights[i - 1]) * (xs[i] - xs[i - 1]))
            .sum();
        let m = push_forward(&f, &weights, FLAT_TOL).unwrap();
        prop_assert!((m.total() - total_in).abs() <= 1e-10 * (1.0 + total_in));
    }

    #[test]
    fn wave_speed_bounds_hold(a in 1.0f64..3.0, frac in 0.01f64..1.0, us in proptest::collection::vec(-50.0f64..50.0, 32)) {
        let model = WaveSpeedModel::smooth(a, a * frac).unwrap();
        for &u in &us {
            let c = model.eval(u);
            prop_assert!(c >= 1.0 / model.kappa - 1e-12 && c <= model.kappa + 1e-12);
            prop_assert!(model.eval_derivative(u, 1).unwrap().abs() <= model.k1 + 1e-12);
            prop_assert!(model.eval_derivative(u, 2).unwrap().abs() <= model.k2 + 1e-12);
        }
    }
}
