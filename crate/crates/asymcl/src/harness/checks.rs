//! Self-contained invariant and oracle suites behind the `check` CLI
//! command. Each suite prints-friendly outcome mirrors an acceptance
//! criterion at a size that finishes in seconds.

use crate::autodiff::{Tape, Tensor};
use crate::infotheory::{self, JointPmf, Pmf};
use crate::losses::{self, graph, naive, FeatureBatch};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Result of one named check.
#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Self {
            name,
            passed,
            detail,
        }
    }
}

fn random_batch(rng: &mut ChaCha8Rng, n: usize, d: usize) -> FeatureBatch {
    let data: Vec<f64> = (0..n * d).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..2)).collect();
    labels[0] = 0;
    labels[1] = 1; // both classes always present
    FeatureBatch::normalize(Tensor::from_parts(vec![n, d], data), labels)
        .expect("random rows have nonzero norm")
}

fn relative_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// Reduction lattice: AFCL(0,1)=FCL, AFCL(γ=0)=ACL, ACL(0)=CL, FL(0)=CE.
fn reduction_identities(seed: u64) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..300 {
        let n = rng.gen_range(2..=24);
        let d = rng.gen_range(2..=8);
        let batch = random_batch(&mut rng, n, d);
        let eta = rng.gen_range(0.0..300.0);
        let pairs = [
            (
                losses::afcl(&batch, 0.07, 0.0, 1.0).unwrap(),
                losses::focal_contrastive_loss(&batch, 0.07).unwrap(),
            ),
            (
                losses::afcl(&batch, 0.07, eta, 0.0).unwrap(),
                losses::acl(&batch, 0.07, eta).unwrap(),
            ),
            (
                losses::acl(&batch, 0.07, 0.0).unwrap(),
                losses::contrastive_loss(&batch, 0.07).unwrap(),
            ),
        ];
        for (a, b) in pairs {
            worst = worst.max(relative_gap(a, b));
        }
        let y = rng.gen_range(0..2) as u8;
        let p = rng.gen_range(0.0..1.0);
        worst = worst.max(relative_gap(
            losses::focal_loss(y, p, 0.0).unwrap(),
            losses::ce_loss(y, p).unwrap(),
        ));
    }
    CheckOutcome::new(
        "reduction-identities",
        worst <= 1e-12,
        format!("worst relative deviation {worst:.3e} over 300 batches (tolerance 1e-12)"),
    )
}

/// Stable implementations against the naive double-loop references.
#[allow(clippy::needless_range_loop)]
fn oracle_equivalence(seed: u64) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6f72_6163);
    let mut worst: f64 = 0.0;
    for _ in 0..60 {
        let n = rng.gen_range(2..=32);
        let batch = random_batch(&mut rng, n, 6);
        let probs = losses::pairwise_probs(&batch, 0.07).unwrap();
        let reference = naive::pairwise_probs(&batch, 0.07);
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((probs.get2(i, j) - reference[i][j]).abs());
            }
        }
        let eta = rng.gen_range(0.0..300.0);
        let gamma = rng.gen_range(0.0..10.0);
        worst = worst.max(relative_gap(
            losses::contrastive_loss(&batch, 0.07).unwrap(),
            naive::contrastive_loss(&batch, 0.07),
        ));
        worst = worst.max(relative_gap(
            losses::focal_contrastive_loss(&batch, 0.07).unwrap(),
            naive::focal_contrastive_loss(&batch, 0.07),
        ));
        worst = worst.max(relative_gap(
            losses::acl(&batch, 0.07, eta).unwrap(),
            naive::acl(&batch, 0.07, eta),
        ));
        worst = worst.max(relative_gap(
            losses::afcl(&batch, 0.07, eta, gamma).unwrap(),
            naive::afcl(&batch, 0.07, eta, gamma),
        ));
    }
    CheckOutcome::new(
        "oracle-equivalence",
        worst <= 1e-6,
        format!(
            "worst deviation {worst:.3e} from naive references over 60 batches (tolerance 1e-6)"
        ),
    )
}

fn central_difference(f: impl Fn(&[f64]) -> f64, x: &[f64], step: f64) -> Vec<f64> {
    let mut grad = vec![0.0; x.len()];
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        probe[i] = x[i] + step;
        let plus = f(&probe);
        probe[i] = x[i] - step;
        let minus = f(&probe);
        probe[i] = x[i];
        grad[i] = (plus - minus) / (2.0 * step);
    }
    grad
}

/// Backpropagated gradients of the contrastive losses (through row
/// normalization) against central finite differences.
fn gradient_spot_checks(seed: u64) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6772_6164);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let n = 6;
        let d = 4;
        let raw: Vec<f64> = (0..n * d).map(|_| rng.gen_range(0.25..1.75)).collect();
        let mut labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..2)).collect();
        labels[0] = 0;
        labels[1] = 1;
        let eta = rng.gen_range(0.0..200.0);
        let gamma = rng.gen_range(0.0..5.0);

        let mut tape = Tape::new();
        let x = tape.leaf(Tensor::from_parts(vec![n, d], raw.clone()), true);
        let z = tape.l2_normalize_rows(x).unwrap();
        let loss = graph::afcl_node(&mut tape, z, &labels, 0.07, eta, gamma).unwrap();
        let grads = tape.backward(loss).unwrap();
        let analytic = grads.get(x).unwrap().data().to_vec();

        let labels_fd = labels.clone();
        let numeric = central_difference(
            |values| {
                let batch = FeatureBatch::normalize(
                    Tensor::from_parts(vec![n, d], values.to_vec()),
                    labels_fd.clone(),
                )
                .unwrap();
                losses::afcl(&batch, 0.07, eta, gamma).unwrap()
            },
            &raw,
            1e-6,
        );
        for (a, g) in analytic.iter().zip(&numeric) {
            worst = worst.max((a - g).abs() / a.abs().max(g.abs()).max(1.0));
        }
    }
    CheckOutcome::new(
        "gradient-checks",
        worst <= 1e-5,
        format!("worst relative gradient error {worst:.3e} over 20 AFCL batches (tolerance 1e-5)"),
    )
}

/// Entropy axioms and the cross-entropy / KL identity.
fn entropy_axioms(seed: u64) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x656e_7472);
    let mut failures = Vec::new();

    if (infotheory::entropy(&Pmf::new(vec![0.5, 0.5]).unwrap()) - 1.0).abs() > 1e-12 {
        failures.push("normalization".to_string());
    }
    for n in 2..=16 {
        for _ in 0..50 {
            let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(1e-6..1.0)).collect();
            let total: f64 = raw.iter().sum();
            let p = Pmf::new(raw.iter().map(|v| v / total).collect()).unwrap();
            if infotheory::entropy(&p) > (n as f64).log2() + 1e-12 {
                failures.push(format!("maximality at n={n}"));
            }
            let mut padded = p.probs().to_vec();
            padded.push(0.0);
            let q = Pmf::new(padded).unwrap();
            if (infotheory::entropy(&p) - infotheory::entropy(&q)).abs() > 1e-15 {
                failures.push(format!("extensibility at n={n}"));
            }
        }
    }
    for _ in 0..200 {
        let raw: Vec<f64> = (0..12).map(|_| rng.gen_range(1e-6..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let j = JointPmf::from_flat(3, 4, raw.iter().map(|v| v / total).collect()).unwrap();
        let lhs = infotheory::joint_entropy(&j);
        let rhs = infotheory::entropy(&j.row_marginal()) + infotheory::conditional_entropy(&j);
        if (lhs - rhs).abs() > 1e-9 {
            failures.push("additivity".to_string());
        }
        let p = random_pmf(&mut rng, 6);
        let q = random_pmf(&mut rng, 6);
        let cross = infotheory::cross_entropy(&p, &q).unwrap();
        let identity = infotheory::entropy(&p) + infotheory::kl_divergence(&p, &q).unwrap();
        if (cross - identity).abs() > 1e-12 {
            failures.push("cross-entropy identity".to_string());
        }
    }
    for n in 1..=4096 {
        let level = infotheory::uniform_entropy(n).unwrap();
        if (level - (n as f64).log2()).abs() > 1e-12 {
            failures.push(format!("uniform entropy at n={n}"));
            break;
        }
    }
    let passed = failures.is_empty();
    let detail = if passed {
        "axioms 1/3/4/5, L(n)=log2 n for n<=4096, and the KL identity all hold".to_string()
    } else {
        format!("violations: {}", failures.join(", "))
    };
    CheckOutcome::new("entropy-axioms", passed, detail)
}

fn random_pmf(rng: &mut ChaCha8Rng, n: usize) -> Pmf {
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(1e-6..1.0)).collect();
    let total: f64 = raw.iter().sum();
    Pmf::new(raw.iter().map(|v| v / total).collect()).unwrap()
}

/// Degenerate-input behavior: empty positive sets and lone-class anchors.
fn degenerate_inputs(seed: u64) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6465_6765);
    let mut ok = true;
    let mut detail = String::from("empty-P anchors contribute 0 to CL/FCL and η·L⁻ to ACL/AFCL");

    let data: Vec<f64> = (0..12 * 4).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut labels = vec![0usize; 12];
    labels[11] = 1;
    let batch = FeatureBatch::normalize(Tensor::from_parts(vec![12, 4], data), labels).unwrap();
    let terms = naive::per_anchor_terms(&batch, 0.07, 0.0);
    if terms[11].positive.is_some() || terms[11].negative.is_none() {
        ok = false;
        detail = "singleton anchor has wrong positive/negative terms".into();
    }
    let cl = losses::contrastive_loss(&batch, 0.07).unwrap();
    let with_eta = losses::acl(&batch, 0.07, 150.0).unwrap();
    let eta_term: f64 = terms.iter().filter_map(|t| t.negative).sum();
    if relative_gap(with_eta, cl - 150.0 * eta_term) > 1e-9 {
        ok = false;
        detail = "ACL does not decompose into CL plus the η-weighted negative term".into();
    }
    CheckOutcome::new("degenerate-inputs", ok, detail)
}

/// Runs every suite; the caller prints one line per outcome.
pub fn run_all_checks(seed: u64) -> Vec<CheckOutcome> {
    vec![
        reduction_identities(seed),
        oracle_equivalence(seed),
        gradient_spot_checks(seed),
        entropy_axioms(seed),
        degenerate_inputs(seed),
    ]
}
