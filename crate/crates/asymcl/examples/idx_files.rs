//! IDX image files: write a fixture, load it back with class filtering and
//! binary remapping, and apply seeded horizontal-flip augmentation.
//!
//! Point the loader at real FMNIST files to build the T-shirt/shirt task:
//! classes 0 and 6 under the standard labeling.
//!
//! ```bash
//! cargo run --example idx_files
//! ```

use asymcl::data::{augment_flip, hflip, load_idx, write_idx_images, write_idx_labels};

fn main() -> anyhow::Result<()> {
    let dir = std::env::temp_dir().join("asymcl_idx_example");
    std::fs::create_dir_all(&dir)?;
    let images_path = dir.join("images.idx");
    let labels_path = dir.join("labels.idx");

    // Six 3×3 images across three classes; only 0 and 6 will be kept.
    let images: Vec<Vec<u8>> = vec![
        vec![0, 64, 128, 0, 64, 128, 0, 64, 128],
        vec![255, 0, 0, 255, 0, 0, 255, 0, 0],
        vec![9, 9, 9, 9, 9, 9, 9, 9, 9],
        vec![10, 20, 30, 40, 50, 60, 70, 80, 90],
        vec![1, 2, 3, 4, 5, 6, 7, 8, 9],
        vec![200, 100, 50, 200, 100, 50, 200, 100, 50],
    ];
    let labels: Vec<u8> = vec![0, 6, 3, 0, 6, 3];
    write_idx_images(&images_path, &images, 3, 3)?;
    write_idx_labels(&labels_path, &labels)?;
    println!(
        "wrote {} and {}",
        images_path.display(),
        labels_path.display()
    );

    // Load, keeping classes 0 and 6, remapped to binary labels 0 and 1.
    let dataset = load_idx(&images_path, &labels_path, 0, 6)?;
    println!(
        "loaded {} samples of dimension {} (filtered from {})",
        dataset.len(),
        dataset.dim(),
        images.len()
    );
    println!("binary labels: {:?}", dataset.labels());
    println!("first row, pixels rescaled to [0,1]: {:?}", dataset.row(0));

    // Horizontal flips: an involution per image row.
    let first = dataset.row(0).to_vec();
    let flipped = hflip(&first, 3);
    println!("\nflipped once : {flipped:?}");
    println!("flipped twice = original: {}", hflip(&flipped, 3) == first);

    // Seeded augmentation mirrors each sample with probability 1/2.
    let augmented = augment_flip(&dataset, 3, 99)?;
    let changed = (0..dataset.len())
        .filter(|&i| augmented.row(i) != dataset.row(i))
        .count();
    println!(
        "augmentation flipped {changed} of {} samples (seed 99)",
        dataset.len()
    );
    Ok(())
}
