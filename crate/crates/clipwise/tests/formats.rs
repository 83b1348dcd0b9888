use clipwise::bundle::{self, Sidecar};
use clipwise::formats::checkpoint;
use clipwise::formats::fvec::FeatureMatrix;
use clipwise::formats::pnm::Image;
use clipwise::AppError;
use clipwise_core::datapipe::EmbeddingTable;
use clipwise_core::headline::{HeadlineConfig, HeadlineModel};
use clipwise_core::nnkern::{Parameterized, Tensor};
use clipwise_core::visual::{FrameClassifier, OpeningModel, ThumbnailHead};
use proptest::prelude::*;

/// FVEC bytes assembled field by field.
fn fvec_oracle(dim: u32, values: &[f32]) -> Vec<u8> {
    let count = (values.len() as u32).checked_div(dim).unwrap_or(0);
    let mut out = b"FVC1".to_vec();
    out.extend(dim.to_le_bytes());
    out.extend(count.to_le_bytes());
    for v in values {
        out.extend(v.to_bits().to_le_bytes());
    }
    out
}

fn same_params<M: Parameterized>(a: &M, b: &M) -> bool {
    let (pa, pb) = (a.params(), b.params());
    pa.len() == pb.len()
        && pa.iter().zip(&pb).all(|((na, ta), (nb, tb))| {
            na == nb && ta.shape() == tb.shape() && ta.data().iter().zip(tb.data()).all(|(x, y)| x.to_bits() == y.to_bits())
        })
}

#[test]
fn fvec_examples() {
    let m = FeatureMatrix::new(4, (0..12).map(|i| i as f32 * 0.1).collect()).unwrap();
    assert_eq!(FeatureMatrix::from_bytes(&m.to_bytes()).unwrap(), m);
    let empty = FeatureMatrix::from_bytes(&fvec_oracle(4, &[])).unwrap();
    assert_eq!((empty.dim(), empty.count()), (4, 0));
    let mut bad = m.to_bytes();
    bad[0] = b'X';
    assert!(matches!(FeatureMatrix::from_bytes(&bad), Err(AppError::Format(_))));
    let full = m.to_bytes();
    for cut in 0..full.len() {
        assert!(matches!(FeatureMatrix::from_bytes(&full[..cut]), Err(AppError::Format(_))), "cut {cut}");
    }
}

#[test]
fn bundles_roundtrip_every_kind() {
    let dir = tempfile::tempdir().unwrap();
    let mut emb = EmbeddingTable::new(4).unwrap();
    emb.insert("cat", vec![0.1, 0.2, 0.3, 0.4]).unwrap();

    let headline = HeadlineModel::new(HeadlineConfig::new(4), 3);
    let stem = dir.path().join("headline");
    let sum = bundle::save(&stem, &headline, &bundle::headline_sidecar(&headline, &emb)).unwrap();
    let loaded = bundle::load_headline(&stem, &emb).unwrap();
    assert!(same_params(&loaded.model, &headline));
    assert_eq!(loaded.checksum, sum);
    emb.insert("dog", vec![0.0; 4]).unwrap();
    assert!(matches!(bundle::load_headline(&stem, &emb), Err(AppError::Config(_))));

    let thumb = ThumbnailHead::new(6, 4);
    let stem = dir.path().join("thumbnail");
    bundle::save(&stem, &thumb, &Sidecar::Thumbnail { feature_dim: 6 }).unwrap();
    assert!(same_params(&bundle::load_thumbnail(&stem).unwrap().model, &thumb));
    assert!(matches!(bundle::load_opening(&stem), Err(AppError::Config(_))));

    let opening = OpeningModel::new(6, 5, 3, 5);
    let stem = dir.path().join("opening");
    bundle::save(&stem, &opening, &bundle::opening_sidecar(&opening)).unwrap();
    assert!(same_params(&bundle::load_opening(&stem).unwrap().model, &opening));

    let frame = FrameClassifier::new(3, 6);
    let stem = dir.path().join("frame");
    bundle::save(&stem, &frame, &Sidecar::Frame { channels: 3 }).unwrap();
    let loaded = bundle::load_frame(&stem).unwrap();
    assert!(same_params(&loaded.model, &frame));
    assert_eq!(loaded.sidecar, Sidecar::Frame { channels: 3 });

    std::fs::remove_file(dir.path().join("frame.nnk")).unwrap();
    assert!(matches!(bundle::load_frame(dir.path().join("frame")), Err(AppError::Io { .. })));
}

#[test]
fn checkpoint_rejects_mismatched_shapes() {
    let bytes = checkpoint::model_bytes(&ThumbnailHead::new(6, 0));
    let mut other = ThumbnailHead::new(5, 0);
    assert!(checkpoint::load_into(&mut other, &bytes).is_err());
}

#[test]
fn pnm_header_comments_and_errors() {
    let img = Image::from_bytes(b"P5\n# made by hand\n2 1\n255\n\x00\xff").unwrap();
    assert_eq!((img.width, img.height, img.channels, img.pixels.clone()), (2, 1, 1, vec![0, 255]));
    assert!(matches!(Image::from_bytes(b"P5\n2 1\n255\n\x00"), Err(AppError::Format(_))));
    assert!(matches!(Image::from_bytes(b"P3\n1 1\n255\n0 0 0"), Err(AppError::Format(_))));
    assert!(matches!(Image::from_bytes(b"P5\n1 1\n65535\n\x00\x00"), Err(AppError::Format(_))));
}

proptest! {
    #[test]
    fn fvec_roundtrip_is_bit_exact(dim in 1u32..9, rows in 0usize..9, bits in prop::collection::vec(any::<u32>(), 0..81)) {
        let values: Vec<f32> = bits.iter().take(dim as usize * rows).map(|&b| f32::from_bits(b)).collect();
        let usable = values.len() / dim as usize * dim as usize;
        let values = &values[..usable];
        let m = FeatureMatrix::new(dim as usize, values.to_vec()).unwrap();
        let bytes = m.to_bytes();
        prop_assert_eq!(&bytes, &fvec_oracle(dim, values));
        let back = FeatureMatrix::from_bytes(&bytes).unwrap();
        prop_assert_eq!(back.to_bytes(), bytes);
        let mut extra = m.to_bytes();
        extra.push(0);
        prop_assert!(FeatureMatrix::from_bytes(&extra).is_err());
    }

    #[test]
    fn checkpoint_roundtrip_is_bit_exact(shape in prop::collection::vec(1usize..4, 1..4), seed in any::<u64>()) {
        let n: usize = shape.iter().product();
        let data: Vec<f64> = (0..n).map(|i| f64::from_bits(seed.wrapping_mul(i as u64 + 1))).collect();
        let t = Tensor::from_vec(&shape, data).unwrap();
        let bytes = checkpoint::encode([("layer.w", &t)]);
        let back = checkpoint::decode(&bytes).unwrap();
        prop_assert_eq!(back.len(), 1);
        prop_assert_eq!(&back[0].0, "layer.w");
        prop_assert_eq!(back[0].1.shape(), t.shape());
        prop_assert!(back[0].1.data().iter().zip(t.data()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn pnm_roundtrip(w in 1usize..12, h in 1usize..12, color in any::<bool>(), seed in any::<u8>()) {
        let c = if color { 3 } else { 1 };
        let pixels: Vec<u8> = (0..w * h * c).map(|i| (i as u8).wrapping_mul(31).wrapping_add(seed)).collect();
        let img = Image::new(w, h, c, pixels).unwrap();
        prop_assert_eq!(&Image::from_bytes(&img.to_bytes()).unwrap(), &img);
        let t = img.to_tensor();
        prop_assert_eq!(t.shape(), &[h, w, c]);
        prop_assert!(t.data().iter().all(|v| (-1.0..=1.0).contains(v)));
        prop_assert_eq!(Image::from_tensor(&t).unwrap(), img);
    }
}
