use latentshift::generator::{Generator, LinearGenerator, MlpGenerator, ReferenceGenerator};
use latentshift::io::*;
use latentshift::rng::sample_latent;
use latentshift::{Direction, Direction32, Error, Image, Latent, Latent32, World};
use proptest::prelude::*;

fn bytes<F: FnOnce(&mut Vec<u8>)>(f: F) -> Vec<u8> {
    let mut out = Vec::new();
    f(&mut out);
    out
}

fn generator(
    kind: u8,
    seed: u64,
    l: usize,
    d: usize,
    n: usize,
    c: usize,
) -> ReferenceGenerator<f64> {
    let world = World::new(seed, l, d, n, c).unwrap();
    match kind {
        0 => ReferenceGenerator::Linear(LinearGenerator::new(world)),
        _ => ReferenceGenerator::Mlp(MlpGenerator::new(world, 5).unwrap()),
    }
}

#[test]
fn generator_file_reproduces_images() {
    let dir = std::env::temp_dir().join(format!("latentshift-io-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    for kind in [0u8, 1] {
        let g = generator(kind, 17, 4, 16, 16, 3);
        let path = dir.join(format!("g{kind}.gen"));
        save_generator(&path, &g).unwrap();
        let back: ReferenceGenerator<f64> = load_generator(&path).unwrap();
        let w: Latent = sample_latent(3, 4, 16);
        assert_eq!(g.generate(&w).unwrap(), back.generate(&w).unwrap());
        assert_eq!(back, g);
    }
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn corrupted_files_are_rejected() {
    let w: Latent32 = sample_latent(1, 2, 3);
    let mut b = bytes(|o| write_latent(o, &w).unwrap());
    b.push(0);
    assert!(matches!(
        read_latent::<f32>(&mut b.as_slice()),
        Err(Error::Format(_))
    ));
    let mut bad = bytes(|o| write_latent(o, &w).unwrap());
    bad[0] = b'X';
    assert!(read_latent::<f32>(&mut bad.as_slice()).is_err());
    let short = bytes(|o| write_latent(o, &w).unwrap());
    assert!(read_latent::<f32>(&mut &short[..short.len() - 1]).is_err());
    let d = bytes(|o| write_latent(o, &w).unwrap());
    assert!(read_direction::<f32>(&mut d.as_slice()).is_err());
}

#[test]
fn pnm_quantizes_to_eight_bits() {
    let img = Image::from_fn(3, 5, 3, |y, x, c| ((y * 5 + x) * 3 + c) as f64 / 44.0).unwrap();
    let b = bytes(|o| write_pnm(o, &img).unwrap());
    assert!(b.starts_with(b"P6\n5 3\n255\n"));
    let back: Image = read_pnm(&mut b.as_slice()).unwrap();
    for (x, y) in img.as_slice().iter().zip(back.as_slice()) {
        assert!((x - y).abs() <= 0.5 / 255.0 + 1e-12);
    }
    let again = bytes(|o| write_pnm(o, &back).unwrap());
    assert_eq!(again, b);
    let gray = Image::filled(2, 2, 1, 1.0).unwrap();
    assert!(bytes(|o| write_pnm(o, &gray).unwrap()).starts_with(b"P5\n"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn latent_round_trip(l in 1usize..6, d in 1usize..20, values in prop::collection::vec(-1e6f32..1e6, 120)) {
        let w = Latent32::new(l, d, values[..l * d].to_vec()).unwrap();
        let b = bytes(|o| write_latent(o, &w).unwrap());
        let back: Latent32 = read_latent(&mut b.as_slice()).unwrap();
        prop_assert_eq!(&back, &w);
        prop_assert_eq!(bytes(|o| write_latent(o, &back).unwrap()), b);
        let wide: Latent = read_latent(&mut bytes(|o| write_latent(o, &w.cast::<f64>()).unwrap()).as_slice()).unwrap();
        prop_assert_eq!(wide.cast::<f32>(), w);
    }

    #[test]
    fn direction_round_trip(seed in 0u64..10_000, b in -10.0f32..10.0, name in "[a-z_]{0,24}") {
        let dir = Direction32::from_raw(sample_latent(seed, 3, 9), b, name).unwrap();
        let bytes1 = bytes(|o| write_direction(o, &dir).unwrap());
        let back: Direction32 = read_direction(&mut bytes1.as_slice()).unwrap();
        prop_assert_eq!(back.vector(), dir.vector());
        prop_assert_eq!(back.bias.to_bits(), dir.bias.to_bits());
        prop_assert_eq!(&back.name, &dir.name);
        prop_assert_eq!(bytes(|o| write_direction(o, &back).unwrap()), bytes1.clone());

        let wide: Direction = read_direction(&mut bytes1.as_slice()).unwrap();
        prop_assert_eq!(bytes(|o| write_direction(o, &wide).unwrap()), bytes1);
    }

    #[test]
    fn generator_round_trip(kind in 0u8..2, seed in 0u64..1000, l in 1usize..4, d in 1usize..6, k in 3u32..5, c in prop::sample::select(vec![1usize, 3])) {
        let g = generator(kind, seed, l, d, 1 << k, c);
        let b = bytes(|o| write_generator(o, &g).unwrap());
        let back: ReferenceGenerator<f64> = read_generator(&mut b.as_slice()).unwrap();
        prop_assert_eq!(&back, &g);
        prop_assert_eq!(bytes(|o| write_generator(o, &back).unwrap()), b);
    }

    #[test]
    fn raw_image_round_trip(h in 1usize..9, w in 1usize..9, c in prop::sample::select(vec![1usize, 3]), values in prop::collection::vec(0.0f32..=1.0, 243)) {
        let img = latentshift::ImageBuf::<f32>::new(h, w, c, values[..h * w * c].to_vec()).unwrap();
        let b = bytes(|o| write_image_raw(o, &img).unwrap());
        let back: latentshift::ImageBuf<f32> = read_image_raw(&mut b.as_slice()).unwrap();
        prop_assert_eq!(&back, &img);
        prop_assert_eq!(bytes(|o| write_image_raw(o, &back).unwrap()), b);
    }
}
