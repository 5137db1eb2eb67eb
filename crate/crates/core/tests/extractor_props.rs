use proptest::prelude::*;
use qrng_core::extractor::*;
use qrng_core::rng::CounterRng;
use rand::{Rng, RngCore};

fn random_bits(rng: &mut CounterRng, n: usize) -> Vec<bool> {
    (0..n).map(|_| rng.random::<bool>()).collect()
}

fn xor(a: &[bool], b: &[bool]) -> Vec<bool> {
    a.iter().zip(b).map(|(x, y)| x ^ y).collect()
}

#[test]
fn exhaustive_small_instances() {
    let mut rng = CounterRng::new(8);
    for _ in 0..32 {
        let t = Toeplitz::from_seed_bits(8, 4, &random_bits(&mut rng, 11)).unwrap();
        for x in 0u32..256 {
            let input: Vec<bool> = (0..8).map(|j| x >> j & 1 == 1).collect();
            assert_eq!(toeplitz_fast(&t, &input).unwrap(), toeplitz_reference(&t, &input).unwrap());
        }
    }
}

#[test]
fn diagonals_are_constant() {
    let mut rng = CounterRng::new(9);
    let t = Toeplitz::from_seed_bits(13, 7, &random_bits(&mut rng, 19)).unwrap();
    let m = t.matrix();
    for i in 0..6 {
        for j in 0..12 {
            assert_eq!(m[i][j], m[i + 1][j + 1]);
        }
    }
}

#[test]
fn zero_input_gives_zero_output() {
    let mut rng = CounterRng::new(10);
    let t = Toeplitz::from_seed_bits(1280, 640, &random_bits(&mut rng, 1919)).unwrap();
    assert_eq!(t.hash(&[0; 20]).unwrap(), vec![0; 10]);
}

#[test]
fn golden_block() {
    let mut rng = CounterRng::new(0x5eed);
    let mut seed = vec![0u8; 240];
    rng.fill_bytes(&mut seed);
    seed[239] &= 0x7f;
    let cfg = ExtractorConfig::from_seed_bytes(1280, 640, &seed, 1e-33).unwrap();
    let samples: Vec<i16> = (0..80).map(|k: i32| (k * 7919 - 20000) as i16).collect();
    let out = stream_extract(&cfg, &samples).unwrap();
    let hex: String = out.iter().map(|b| format!("{b:02x}")).collect();
    assert_eq!(hex, GOLDEN);

    let bits: Vec<bool> = unpack_bits(&pack_samples(&samples), 1280);
    let reference = toeplitz_reference(&cfg.toeplitz, &bits).unwrap();
    assert_eq!(words_to_bytes(&pack_bits(&reference), 640), out);
}

const GOLDEN: &str = "818679c5812b934b4b5c7eacac39f74662fa53075ad4f589c4e8f70d63db2b46d620732a34da9de7b9ee6856d226b6505f274050830b869e05096346b727e9514bb0b12ef236dbed88cd8026bda45965";

#[test]
fn stream_drops_incomplete_tail() {
    let seed = vec![0xa5u8; 240];
    let seed = {
        let mut s = seed;
        s[239] &= 0x7f;
        s
    };
    let cfg = ExtractorConfig::from_seed_bytes(1280, 640, &seed, 1e-33).unwrap();
    let samples: Vec<i16> = (0..239).map(|k| k as i16).collect();
    let out = stream_extract(&cfg, &samples).unwrap();
    assert_eq!(out.len(), 2 * 80);
    assert_eq!(&out[..80], &stream_extract(&cfg, &samples[..80]).unwrap()[..]);
    assert_eq!(
        stream_extract(&ExtractorConfig::from_seed_bytes(1280, 640, &[0; 240], 1e-33).unwrap(), &[0; 80]).unwrap(),
        vec![0; 80]
    );
}

#[test]
fn config_rules() {
    let t = Toeplitz::new(1280, 600, &[0; 30]).unwrap();
    assert!(matches!(ExtractorConfig::new(t, 1e-33), Err(ExtractorError::ConfigMismatch(_))));
    let t = Toeplitz::new(1272, 640, &[0; 30]).unwrap();
    assert!(matches!(ExtractorConfig::new(t, 1e-33), Err(ExtractorError::ConfigMismatch(_))));
    assert!(matches!(
        ExtractorConfig::from_seed_bytes(1280, 640, &[0; 239], 1e-33),
        Err(ExtractorError::SeedLength { expected: 240, got: 239 })
    ));
}

#[test]
fn output_bits_are_balanced() {
    let mut rng = CounterRng::new(77);
    let mut seed = vec![0u64; 30];
    rng.fill(&mut seed[..]);
    let t = Toeplitz::new(1280, 640, &seed).unwrap();
    let blocks = 1_000_000u32;
    let mut counts = vec![0u32; 640];
    let mut input = [0u64; 20];
    for _ in 0..blocks {
        rng.fill(&mut input[..]);
        let out = t.hash(&input).unwrap();
        for (i, c) in counts.iter_mut().enumerate() {
            *c += get_bit(&out, i) as u32;
        }
    }
    for (i, &c) in counts.iter().enumerate() {
        let mean = c as f64 / blocks as f64;
        assert!((0.498..=0.502).contains(&mean), "bit {i}: {mean}");
    }
}

proptest! {
    #[test]
    fn fast_matches_reference(n in 1usize..400, m in 1usize..300, seed in any::<u64>()) {
        let mut rng = CounterRng::new(seed);
        let t = Toeplitz::from_seed_bits(n, m, &random_bits(&mut rng, n + m - 1)).unwrap();
        let input = random_bits(&mut rng, n);
        prop_assert_eq!(toeplitz_fast(&t, &input).unwrap(), toeplitz_reference(&t, &input).unwrap());
    }

    #[test]
    fn linear_in_input_and_seed(n in 1usize..300, m in 1usize..200, seed in any::<u64>()) {
        let mut rng = CounterRng::new(seed);
        let (s1, s2) = (random_bits(&mut rng, n + m - 1), random_bits(&mut rng, n + m - 1));
        let (a, b) = (random_bits(&mut rng, n), random_bits(&mut rng, n));
        let t1 = Toeplitz::from_seed_bits(n, m, &s1).unwrap();
        let t2 = Toeplitz::from_seed_bits(n, m, &s2).unwrap();
        let t12 = Toeplitz::from_seed_bits(n, m, &xor(&s1, &s2)).unwrap();
        let e = |t: &Toeplitz, x: &[bool]| toeplitz_fast(t, x).unwrap();
        prop_assert_eq!(e(&t1, &xor(&a, &b)), xor(&e(&t1, &a), &e(&t1, &b)));
        prop_assert_eq!(e(&t12, &a), xor(&e(&t1, &a), &e(&t2, &a)));
    }

    #[test]
    fn seed_bytes_round_trip(bytes in proptest::collection::vec(any::<u8>(), 1..64), cut in 0usize..8) {
        let len = bytes.len() * 8 - cut;
        let mut bytes = bytes;
        let last = bytes.len() - 1;
        bytes[last] &= (0xffu16 >> cut) as u8;
        let words = seed_from_bytes(&bytes, len).unwrap();
        prop_assert_eq!(words_to_bytes(&words, len), bytes);
    }
}
