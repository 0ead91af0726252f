//! The contrastive loss family on a hand-built mini-batch: CL, FCL, the
//! asymmetric ACL/AFCL, the reduction lattice connecting them, and why the
//! asymmetric variants matter when a class has a lone representative.
//!
//! ```bash
//! cargo run --example contrastive_losses
//! ```

use asymcl::autodiff::Tensor;
use asymcl::losses::{
    acl, afcl, contrastive_loss, focal_contrastive_loss, naive, pairwise_probs, FeatureBatch,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TAU: f64 = 0.07;

fn main() -> anyhow::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);

    // A balanced batch of eight 4-dimensional features, two classes.
    let data: Vec<f64> = (0..8 * 4).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let labels = vec![0, 1, 0, 1, 0, 1, 0, 1];
    let batch = FeatureBatch::normalize(Tensor::new(vec![8, 4], data)?, labels)?;

    // Pairwise same-class probabilities: each row is a softmax over the
    // temperature-scaled similarities to every other feature.
    let probs = pairwise_probs(&batch, TAU)?;
    println!(
        "row 0 of p_ij: {:?}",
        probs
            .row(0)
            .iter()
            .map(|p| (p * 1e4).round() / 1e4)
            .collect::<Vec<_>>()
    );
    println!(
        "row 0 sums to {:.12} over j ≠ 0\n",
        probs.row(0).iter().sum::<f64>()
    );

    println!(
        "CL                   = {:.6}",
        contrastive_loss(&batch, TAU)?
    );
    println!(
        "FCL                  = {:.6}",
        focal_contrastive_loss(&batch, TAU)?
    );
    println!("ACL  (η = 120)       = {:.6}", acl(&batch, TAU, 120.0)?);
    println!(
        "AFCL (η = 120, γ = 7) = {:.6}",
        afcl(&batch, TAU, 120.0, 7.0)?
    );

    // The reduction lattice.
    println!("\nreductions:");
    println!(
        "  AFCL(η=0, γ=1) − FCL = {:+.3e}",
        afcl(&batch, TAU, 0.0, 1.0)? - focal_contrastive_loss(&batch, TAU)?
    );
    println!(
        "  AFCL(γ=0) − ACL      = {:+.3e}",
        afcl(&batch, TAU, 120.0, 0.0)? - acl(&batch, TAU, 120.0)?
    );
    println!(
        "  ACL(η=0) − CL        = {:+.3e}",
        acl(&batch, TAU, 0.0)? - contrastive_loss(&batch, TAU)?
    );

    // The imbalanced story: eleven majority samples and one minority sample.
    // The lone anchor has no positive pair, so the plain CL never contrasts
    // it; the asymmetric losses push its negatives away via the η-term.
    let data: Vec<f64> = (0..12 * 4).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut labels = vec![0usize; 12];
    labels[11] = 1;
    let lone = FeatureBatch::normalize(Tensor::new(vec![12, 4], data)?, labels)?;
    let terms = naive::per_anchor_terms(&lone, TAU, 0.0);
    println!("\n11-vs-1 batch, the minority anchor:");
    println!(
        "  positive term: {:?}  (no positive pairs)",
        terms[11].positive
    );
    println!("  negative term: {:+.6}", terms[11].negative.unwrap());
    println!(
        "  CL  = {:.6}  (anchor contributes nothing)",
        contrastive_loss(&lone, TAU)?
    );
    println!(
        "  ACL = {:.6}  (η = 120 activates the negative term)",
        acl(&lone, TAU, 120.0)?
    );
    Ok(())
}
