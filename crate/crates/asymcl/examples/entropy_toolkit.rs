//! Tour of the discrete information-theory toolkit: entropy, joint and
//! conditional entropy, mutual information, KL divergence, and
//! cross-entropy, all in bits.
//!
//! ```bash
//! cargo run --example entropy_toolkit
//! ```

use asymcl::infotheory::{
    conditional_cross_entropy, conditional_entropy, cross_entropy, entropy, joint_entropy,
    kl_divergence, mutual_information, uniform_entropy, JointPmf, Pmf,
};

fn main() -> anyhow::Result<()> {
    // A fair coin carries exactly one bit; a certain outcome carries none.
    let fair = Pmf::new(vec![0.5, 0.5])?;
    let certain = Pmf::new(vec![1.0, 0.0])?;
    let skewed = Pmf::new(vec![0.25, 0.75])?;
    println!("H(fair coin)    = {} bits", entropy(&fair));
    println!("H(certain coin) = {} bits", entropy(&certain));
    println!("H(0.25, 0.75)   = {:.10} bits", entropy(&skewed));

    // Uniform distributions: H = log2(n), even for non-powers of two.
    for n in [2usize, 3, 1024] {
        println!("L({n:4}) = {:.10} bits", uniform_entropy(n)?);
    }

    // A correlated joint distribution, rows indexing X, columns Y.
    let joint = JointPmf::new(&[vec![0.5, 0.25], vec![0.125, 0.125]])?;
    println!("\njoint = [[0.5, 0.25], [0.125, 0.125]]");
    println!("H(X,Y)  = {:.10}", joint_entropy(&joint));
    println!("H(X)    = {:.10}", entropy(&joint.row_marginal()));
    println!("H(Y|X)  = {:.10}", conditional_entropy(&joint));
    println!(
        "additivity check: H(X) + H(Y|X) − H(X,Y) = {:+.3e}",
        entropy(&joint.row_marginal()) + conditional_entropy(&joint) - joint_entropy(&joint)
    );
    println!("I(X;Y)  = {:.10}", mutual_information(&joint));

    // Divergence and cross-entropy between two coins.
    let p = Pmf::new(vec![0.9, 0.1])?;
    let q = Pmf::new(vec![0.5, 0.5])?;
    println!("\nD(p‖q) = {:.10}", kl_divergence(&p, &q)?);
    println!(
        "D(q‖p) = {:.10}  (KL is asymmetric)",
        kl_divergence(&q, &p)?
    );
    println!(
        "H(p;q) = {:.10} = H(p) + D(p‖q) = {:.10}",
        cross_entropy(&p, &q)?,
        entropy(&p) + kl_divergence(&p, &q)?
    );

    // Estimating one joint with another: the conditional cross-entropy
    // collapses to H(Y|X) when the estimate is exact.
    let estimate = JointPmf::new(&[vec![0.4, 0.3], vec![0.2, 0.1]])?;
    println!(
        "\nH(Y;Ŷ|X) against a rough estimate = {:.10}",
        conditional_cross_entropy(&joint, &estimate)?
    );
    println!(
        "H(Y;Ŷ|X) against itself           = {:.10} (= H(Y|X))",
        conditional_cross_entropy(&joint, &joint)?
    );

    // Division of mass where the estimate has none is undefined, not ∞.
    let impossible = Pmf::new(vec![0.0, 1.0])?;
    match kl_divergence(&fair, &impossible) {
        Err(error) => println!("\nsupport violation is an error: {error}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
