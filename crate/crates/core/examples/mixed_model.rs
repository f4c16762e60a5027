//! Random-intercept trend model over 9 participants x 12 sessions, compared
//! with an ordinary least-squares line through the pooled data.
//!
//! cargo run --example mixed_model

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use scomo::stats::{fit_random_intercept, ols, summarize_selections};
use scomo::synthesis::ViewingAngle;

fn main() -> scomo::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let between = Normal::new(0.0, 1.0).expect("valid sd");
    let within = Normal::new(0.0, 0.5).expect("valid sd");
    let (mut y, mut x, mut g) = (vec![], vec![], vec![]);
    for p in 0..9 {
        let u = between.sample(&mut rng);
        for s in 1..=12 {
            x.push(s as f64);
            y.push(1.0 + 0.1 * s as f64 + u + within.sample(&mut rng));
            g.push(format!("P{:02}", p + 1));
        }
    }
    let fit = fit_random_intercept(&y, &x, &g)?;
    println!(
        "slope {:.4} (SE {:.4}), t = {:.3}, p = {:.2e}",
        fit.fixed_slope,
        fit.slope_se,
        fit.t_stat,
        fit.p_value.unwrap_or(f64::NAN)
    );
    println!("sigma_between {:.3}, sigma_within {:.3}", fit.sigma_between, fit.sigma_within);
    for (p, u) in &fit.random_intercepts {
        println!("  {p}: {u:+.3}");
    }
    let (b0, b1) = ols(&y, &x);
    println!("pooled OLS: intercept {b0:.4}, slope {b1:.4}");

    let s = summarize_selections(&[0.5, 0.7, 0.6, 0.5, 0.6, 0.7], ViewingAngle::Contralateral45)?;
    println!("six selections: mean {:.3}, sd {:.4}", s.mean_scomo, s.sd_scomo);
    println!("{}", serde_json::to_string_pretty(&fit.meta)?);
    Ok(())
}
