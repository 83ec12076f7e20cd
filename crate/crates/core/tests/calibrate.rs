//! Parameter scan used to pick the bundled smooth-bump scenario; run manually.

use nvw_core::goursat::{check_h, tile_solve_curve, SolverParams};
use nvw_core::lagrangian::{map_c, map_l};
use nvw_core::{EulerianState, WaveSpeedModel};

fn bump(amp: f64, half: f64, n: usize, model: &WaveSpeedModel) -> EulerianState {
    let g: Vec<f64> = (0..n).map(|i| -half + 2.0 * half * i as f64 / (n - 1) as f64).collect();
    let u: Vec<f64> = g.iter().map(|&x| amp * (-x * x).exp()).collect();
    let ux: Vec<f64> = g.iter().map(|&x| -2.0 * x * amp * (-x * x).exp()).collect();
    let ut: Vec<f64> = g.iter().map(|&x| 0.5 * amp * (-x * x / 1.5).exp()).collect();
    let m = g.len();
    EulerianState::from_primitives(g, u, ut, ux, vec![0.0; m], vec![0.0; m], vec![], vec![], model).unwrap()
}

#[test]
#[ignore]
fn scan_h_residuals() {
    for (amp, b, half) in [
        (0.06, 0.12, 4.0),
        (0.05, 0.12, 4.0),
        (0.05, 0.1, 4.0),
    ] {
        let model = WaveSpeedModel::smooth(1.0, b).unwrap();
        let st = bump(amp, half, 4001, &model);
        let psi = map_l(&st, &model).unwrap();
        let curve = map_c(&psi, &model).unwrap();
        for grid in [129usize, 257] {
            let params = SolverParams { grid, ..SolverParams::default() };
            let sol = tile_solve_curve(&curve, &model, &params).unwrap();
            let rep = check_h(&sol, &model);
            let worst = ["speed-ratio-x","speed-ratio-y","energy-ratio-x","energy-ratio-y","energy-quadratic-x","energy-quadratic-y"]
                .iter().map(|n| rep.get(n).unwrap().relative).fold(0.0f64, f64::max);
            println!("amp={amp} b={b} half={half} grid={grid}: worst H-residual {worst:.3e}  E={:.4}", st.total_energy());
        }
    }
}

#[test]
#[ignore]
fn scan_conservation_drift() {
    use nvw_core::evolution::{evolve, EvolveParams};
    for (amp, b, half) in [(0.1, 0.15, 3.5), (0.08, 0.12, 4.0), (0.06, 0.12, 4.0)] {
        let model = WaveSpeedModel::smooth(1.0, b).unwrap();
        let st = bump(amp, half, 4001, &model);
        let e0 = st.total_energy();
        for grid in [257usize, 513, 769] {
            let params = EvolveParams {
                solver: SolverParams { grid, ..SolverParams::default() },
                ..EvolveParams::default()
            };
            match evolve(&st, 0.5, &model, &params) {
                Ok(out) => {
                    let drift = (out.total_energy() - e0).abs() / e0;
                    println!("amp={amp} b={b} half={half} grid={grid}: drift {drift:.3e} (E0={e0:.4})");
                }
                Err(e) => println!("amp={amp} b={b} grid={grid}: ERROR {e}"),
            }
        }
    }
}

#[test]
#[ignore]
fn drift_anatomy() {
    use nvw_core::evolution::{evolve_full, EvolveParams};
    let (amp, b, half) = (0.08, 0.12, 4.0);
    let model = WaveSpeedModel::smooth(1.0, b).unwrap();
    let st = bump(amp, half, 4001, &model);
    let e0 = st.total_energy();
    for grid in [257usize, 385, 513, 641, 769] {
        let params = EvolveParams {
            solver: SolverParams { grid, ..SolverParams::default() },
            ..EvolveParams::default()
        };
        let out = evolve_full(&st, 0.5, &model, &params).unwrap();
        let sc = &out.slice_curve;
        let js = sc.z[3][0];
        let je = sc.z[3][sc.s.len() - 1];
        let corner = {
            let gs = &out.solution;
            gs.z[3].at(gs.xg.len() - 1, gs.yg.len() - 1)
        };
        let psi_e = out.psi.total_energy();
        let rec = out.state.total_energy();
        println!(
            "grid={grid}: E0={e0:.9e} slice j=[{js:.3e},{je:.9e}] corner J={corner:.9e} psi={psi_e:.9e} rec={rec:.9e} drift={:.3e}",
            (rec - e0).abs() / e0
        );
    }
}

#[test]
#[ignore]
fn atom_anatomy() {
    use nvw_core::evolution::{evolve_full, EvolveParams};
    use nvw_core::measures::Atom;
    let model = WaveSpeedModel::constant(1.0).unwrap();
    let g: Vec<f64> = (0..81).map(|i| -2.0 + 4.0 * i as f64 / 80.0).collect();
    let n = g.len();
    let st = EulerianState::from_primitives(
        g, vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n],
        vec![Atom { pos: 0.0, mass: 1.0 }], vec![Atom { pos: 0.0, mass: 1.0 }], &model,
    ).unwrap();
    let params = EvolveParams {
        solver: SolverParams { grid: 129, ..SolverParams::default() },
        ..EvolveParams::default()
    };
    let out = evolve_full(&st, 0.0, &model, &params).unwrap();
    let sc = &out.slice_curve;
    println!("slice s range [{:.4},{:.4}], nverts {}", sc.s[0], sc.s[sc.s.len()-1], sc.s.len());
    for k in 0..sc.s.len() {
        if sc.s[k] > -0.3 && sc.s[k] < 1.3 {
            println!("  s={:+.4} X={:+.4} Y={:+.4} x={:+.4} J={:.6}", sc.s[k], sc.cx[k], sc.cy[k], sc.z[1][k], sc.z[3][k]);
        }
    }
    println!("psi one: j_last={:.9}", out.psi.one.j.last().unwrap());
    println!("psi two: j_last={:.9}", out.psi.two.j.last().unwrap());
    for a in out.state.mu.atoms() { println!("mu atom pos={:.6} mass={:.9}", a.pos, a.mass); }
    for a in out.state.nu.atoms() { println!("nu atom pos={:.6} mass={:.9}", a.pos, a.mass); }
    println!("E = {:.9}", out.state.total_energy());
}
