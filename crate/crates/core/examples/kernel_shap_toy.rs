//! KernelSHAP on small games where the answer is known.
//!
//! cargo run --example kernel_shap_toy

use xpb::attrib::{exact_shapley, kernel_shap, FnGame, ShapConfig, TabularGame};

fn main() -> xpb::Result<()> {
    // Linear model against a zero background: phi_j = w_j * x_j.
    let w = [2.0, -1.0, 0.5, 0.0];
    let x = [1.0, 3.0, -2.0, 7.0];
    let background = vec![vec![0.0; 4]];
    let game = TabularGame::new(|v: &[f64]| Ok(v.iter().zip(&w).map(|(a, b)| a * b).sum()), &x, &background)?;
    let shap = kernel_shap(&game, &ShapConfig::default())?;
    println!("linear: phi {:?}, baseline {}, output {}", shap.phi, shap.baseline, shap.output);

    // An AND gate splits its payoff evenly.
    let and = FnGame::new(2, |s: &[bool]| if s[0] && s[1] { 1.0 } else { 0.0 });
    println!("and gate: {:?}", kernel_shap(&and, &ShapConfig::default())?.phi);

    // Sixteen players with a saturating payoff: sampled estimate against
    // exact enumeration.
    let weights: Vec<f64> = (0..16).map(|j| (j as f64 - 7.5) / 4.0).collect();
    let f = |s: &[bool]| {
        let lin: f64 = s.iter().zip(&weights).filter(|(p, _)| **p).map(|(_, w)| w).sum();
        let present = s.iter().filter(|p| **p).count() as f64;
        lin.tanh() * 3.0 + (present - 8.0).max(0.0).sqrt()
    };
    let game = FnGame::new(16, f);
    let exact = exact_shapley(&game)?;
    for samples in [256, 1024, 4096] {
        let cfg = ShapConfig { coalition_samples: samples, exact_up_to: 0, seed: 1, ..ShapConfig::default() };
        let est = kernel_shap(&game, &cfg)?;
        let err = est.phi.iter().zip(&exact.phi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let gap = est.phi.iter().sum::<f64>() + est.baseline - est.output;
        println!("16 players, {samples:>4} coalitions: max error {err:.4}, efficiency gap {gap:.1e}");
    }
    Ok(())
}
