//! Exact variance of Gaussian polynomials, order by order, and the
//! per-coordinate lower bound.
use spinchaos::analysis::{gaussian_variance_oracle, hermite_variance, variance_lower_bound_general, Polynomial};

fn main() -> spinchaos::Result<()> {
    // f = g1^2 g2 + 3 g1 g3 - g2^3 + g1^2 + 0.5
    let f = Polynomial::from_terms(
        3,
        [
            (vec![2, 1, 0], 1.0),
            (vec![1, 0, 1], 3.0),
            (vec![0, 3, 0], -1.0),
            (vec![2, 0, 0], 1.0),
            (vec![0, 0, 0], 0.5),
        ],
    )?;
    let h = hermite_variance(&f)?;
    for (k, c) in &h.terms {
        println!("order {k}: {c:.4}");
    }
    println!("Var f = {:.6} (moments: {:.6})", h.variance, gaussian_variance_oracle(&f));
    let b = variance_lower_bound_general(&f);
    println!("lower bounds: per-coordinate {:.4}, gradient form {:.4}", b.per_coordinate, b.gradient_form);
    Ok(())
}
