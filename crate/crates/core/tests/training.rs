use ptycho::harness::synth_dataset;
use ptycho::prior::{fit_latent, train_decoder, TrainConfig};
use ptycho::tensor::RealImage;

fn mse(a: &RealImage, b: &RealImage) -> f64 {
    a.data().iter().zip(b.data()).map(|(p, q)| (p - q).powi(2)).sum::<f64>() / a.len() as f64
}

#[test]
fn shape_decoder_generalizes_to_held_out_images() {
    let images = synth_dataset(220, 16, 1).unwrap();
    let (train, held_out) = images.split_at(200);
    let cfg = TrainConfig {
        epochs: 200,
        seed: 5,
        ..TrainConfig::default()
    };
    let report = train_decoder(train, &[16, 128, 256], &cfg).unwrap();
    assert!(report.final_loss < report.initial_loss);
    // Reconstruction error of the decoder alone: best fit within its range.
    let total: f64 = held_out
        .iter()
        .map(|img| {
            let z = fit_latent(&report.decoder, img, 500, 0.05).unwrap();
            mse(&report.decoder.generate(&z).unwrap(), img)
        })
        .sum();
    let mean = total / held_out.len() as f64;
    assert!(mean < 0.02, "held-out mse {mean}");
}

#[test]
fn identical_images_are_reproduced_from_mean_latent() {
    let img = synth_dataset(1, 16, 8).unwrap().remove(0);
    let data = vec![img.clone(); 64];
    let cfg = TrainConfig {
        epochs: 300,
        batch_size: 16,
        seed: 2,
        ..TrainConfig::default()
    };
    let report = train_decoder(&data, &[4, 32, 256], &cfg).unwrap();
    let latents: Vec<Vec<f64>> = data.iter().map(|x| report.encode(x)).collect();
    let k = latents[0].len();
    let mean: Vec<f64> = (0..k)
        .map(|j| latents.iter().map(|z| z[j]).sum::<f64>() / latents.len() as f64)
        .collect();
    let err = mse(&report.decoder.generate(&mean).unwrap(), &img);
    assert!(err < 1e-4, "mse {err}");
}

#[test]
fn fixed_seed_gives_identical_weights() {
    let data = synth_dataset(40, 16, 3).unwrap();
    let cfg = TrainConfig {
        epochs: 3,
        seed: 9,
        ..TrainConfig::default()
    };
    let a = train_decoder(&data, &[8, 32, 256], &cfg).unwrap();
    let b = train_decoder(&data, &[8, 32, 256], &cfg).unwrap();
    assert_eq!(a.decoder, b.decoder);
}
