//! Random mask corpora, FFT features and the `MWLD` container.
//!
//! `MWLD` layout (little-endian):
//!
//! | offset | size | field                                          |
//! |--------|------|------------------------------------------------|
//! | 0      | 4    | magic `MWLD`                                   |
//! | 4      | 4    | version (u32, currently 1)                     |
//! | 8      | 4    | n_sections (u32)                               |
//! | 12     | 4    | n_det, grid point count (u32)                  |
//! | 16     | 4    | mode (u32: 0 matter, 1 em)                     |
//! | 20     | 4    | flags (u32; bit 0: feature block present)      |
//! | 24     | 32   | setup fingerprint (same hash as `MWST`)        |
//! | 56     | 8    | grid half extent (f64)                         |
//! | 64     | 8    | record count (u64)                             |
//! | 72     | ...  | records                                        |
//!
//! A record is `n_sections` bytes (0/1), then `n_det` f64 pattern samples,
//! then, if flagged, `n_det/2 + 1` f64 FFT moduli and as many FFT angles.

use std::f64::consts::PI;
use std::io::{self, Write};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::forward::Propagator;
use crate::geometry::Mode;
use crate::grid::{DetectorGrid, IntensityPattern, Normalization};
use crate::mask::Mask;
use crate::table::{Fingerprint, Reader};

pub const DATASET_MAGIC: [u8; 4] = *b"MWLD";
pub const DATASET_VERSION: u32 = 1;
pub const DATASET_HEADER_LEN: usize = 72;
const FLAG_FEATURES: u32 = 1;
const CHUNK: usize = 256;

/// Uniform random mask: each section open with probability ½.
pub fn random_mask<R: Rng + ?Sized>(rng: &mut R, n_sections: usize) -> Mask {
    Mask::new((0..n_sections).map(|_| rng.gen::<bool>()).collect())
}

/// Independent generator for record `index` of a corpus seeded with `seed`.
pub fn record_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// One-sided spectrum of a real pattern.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FftFeatures {
    pub modulus: Vec<f64>,
    /// Principal value in (-π, π].
    pub angle: Vec<f64>,
}

/// Real-input DFT `X_k = Σ_j x_j e^{-2πijk/N}` for `k = 0..=N/2`.
pub fn compute_fft_features(pattern: &IntensityPattern) -> Result<FftFeatures> {
    let n = pattern.len();
    if n < 2 {
        return Err(Error::config("FFT features need at least 2 samples"));
    }
    let mut buf: Vec<Complex64> = pattern
        .values
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let half = n / 2 + 1;
    let modulus = buf[..half].iter().map(|c| c.norm()).collect();
    let angle = buf[..half]
        .iter()
        .map(|c| {
            let a = c.im.atan2(c.re);
            if a <= -PI {
                PI
            } else {
                a
            }
        })
        .collect();
    Ok(FftFeatures { modulus, angle })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRecord {
    pub mask: Mask,
    pub pattern: IntensityPattern,
    pub features: Option<FftFeatures>,
}

impl DatasetRecord {
    fn encode(&self, out: &mut Vec<u8>) {
        out.extend(self.mask.bits());
        for v in &self.pattern.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        if let Some(f) = &self.features {
            for v in f.modulus.iter().chain(&f.angle) {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
}

/// Fixed description of a corpus, written before any record.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetHeader {
    pub n_sections: usize,
    pub grid: DetectorGrid,
    pub mode: Mode,
    pub features: bool,
    pub fingerprint: Fingerprint,
    pub count: u64,
}

impl DatasetHeader {
    pub fn record_len(&self) -> usize {
        let feature_len = if self.features {
            2 * (self.grid.len() / 2 + 1) * 8
        } else {
            0
        };
        self.n_sections + self.grid.len() * 8 + feature_len
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(DATASET_HEADER_LEN);
        out.extend_from_slice(&DATASET_MAGIC);
        out.extend_from_slice(&DATASET_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.n_sections as u32).to_le_bytes());
        out.extend_from_slice(&(self.grid.len() as u32).to_le_bytes());
        out.extend_from_slice(&self.mode.code().to_le_bytes());
        let flags = if self.features { FLAG_FEATURES } else { 0 };
        out.extend_from_slice(&flags.to_le_bytes());
        out.extend_from_slice(&self.fingerprint);
        out.extend_from_slice(&self.grid.half_extent().to_le_bytes());
        out.extend_from_slice(&self.count.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let header = bytes.get(..DATASET_HEADER_LEN).ok_or(Error::Truncated {
            expected: DATASET_HEADER_LEN as u64,
            found: bytes.len() as u64,
        })?;
        let mut r = Reader::new(header);
        let magic = r.array::<4>();
        if magic != DATASET_MAGIC {
            return Err(Error::BadMagic {
                expected: DATASET_MAGIC,
                found: magic,
            });
        }
        let version = r.u32();
        if version != DATASET_VERSION {
            return Err(Error::BadVersion {
                expected: DATASET_VERSION,
                found: version,
            });
        }
        let n_sections = r.u32() as usize;
        let n_det = r.u32() as usize;
        let mode_code = r.u32();
        let mode = Mode::from_code(mode_code)
            .ok_or_else(|| Error::Parse(format!("unknown mode code {mode_code}")))?;
        let flags = r.u32();
        let fingerprint = r.array::<32>();
        let half_extent = r.f64();
        let count = r.u64();
        let grid = DetectorGrid::new(half_extent, n_det)
            .map_err(|e| Error::Parse(format!("invalid grid in header: {e}")))?;
        Ok(DatasetHeader {
            n_sections,
            grid,
            mode,
            features: flags & FLAG_FEATURES != 0,
            fingerprint,
            count,
        })
    }
}

/// Destination for generated records, called in index order.
pub trait RecordSink {
    fn begin(&mut self, header: &DatasetHeader) -> io::Result<()>;
    fn record(&mut self, record: &DatasetRecord) -> io::Result<()>;
    fn finish(&mut self) -> io::Result<()>;
}

/// Writes the binary `MWLD` container.
pub struct MwldWriter<W: Write> {
    inner: W,
    buf: Vec<u8>,
}

impl<W: Write> MwldWriter<W> {
    pub fn new(inner: W) -> Self {
        MwldWriter {
            inner,
            buf: Vec::new(),
        }
    }

    pub fn into_inner(self) -> W {
        self.inner
    }
}

impl<W: Write> RecordSink for MwldWriter<W> {
    fn begin(&mut self, header: &DatasetHeader) -> io::Result<()> {
        self.inner.write_all(&header.to_bytes())
    }

    fn record(&mut self, record: &DatasetRecord) -> io::Result<()> {
        self.buf.clear();
        record.encode(&mut self.buf);
        self.inner.write_all(&self.buf)
    }

    fn finish(&mut self) -> io::Result<()> {
        self.inner.flush()
    }
}

#[derive(Serialize, Deserialize)]
struct TextRecord {
    mask: Vec<u8>,
    pattern: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    fft_modulus: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    fft_angle: Option<Vec<f64>>,
}

/// Line-oriented text export: one JSON object per record with `mask` and
/// `pattern` arrays (plus `fft_modulus`/`fft_angle` when present).
pub struct JsonLinesWriter<W: Write> {
    inner: W,
}

impl<W: Write> JsonLinesWriter<W> {
    pub fn new(inner: W) -> Self {
        JsonLinesWriter { inner }
    }
}

impl<W: Write> RecordSink for JsonLinesWriter<W> {
    fn begin(&mut self, _header: &DatasetHeader) -> io::Result<()> {
        Ok(())
    }

    fn record(&mut self, record: &DatasetRecord) -> io::Result<()> {
        let text = TextRecord {
            mask: record.mask.bits().collect(),
            pattern: record.pattern.values.clone(),
            fft_modulus: record.features.as_ref().map(|f| f.modulus.clone()),
            fft_angle: record.features.as_ref().map(|f| f.angle.clone()),
        };
        serde_json::to_writer(&mut self.inner, &text)?;
        self.inner.write_all(b"\n")
    }

    fn finish(&mut self) -> io::Result<()> {
        self.inner.flush()
    }
}

/// Parses one line of the text export.
pub fn parse_text_record(line: &str) -> Result<(Mask, Vec<f64>)> {
    let rec: TextRecord =
        serde_json::from_str(line).map_err(|e| Error::Parse(format!("text record: {e}")))?;
    Ok((Mask::from_bits(&rec.mask)?, rec.pattern))
}

impl<A: RecordSink, B: RecordSink> RecordSink for (A, B) {
    fn begin(&mut self, header: &DatasetHeader) -> io::Result<()> {
        self.0.begin(header)?;
        self.1.begin(header)
    }

    fn record(&mut self, record: &DatasetRecord) -> io::Result<()> {
        self.0.record(record)?;
        self.1.record(record)
    }

    fn finish(&mut self) -> io::Result<()> {
        self.0.finish()?;
        self.1.finish()
    }
}

/// Outcome of a generation run.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSummary {
    pub count: usize,
    /// All-closed masks drawn and discarded.
    pub resampled: usize,
    pub open_sections: usize,
    /// SHA-256 over the encoded record bytes, in order.
    pub checksum: [u8; 32],
}

impl DatasetSummary {
    pub fn checksum_hex(&self) -> String {
        self.checksum.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Draws the mask of record `index`, rejecting all-closed masks.
pub fn record_mask(seed: u64, index: u64, n_sections: usize) -> (Mask, usize) {
    let mut rng = record_rng(seed, index);
    let mut rejected = 0;
    loop {
        let mask = random_mask(&mut rng, n_sections);
        if !mask.is_all_closed() {
            return (mask, rejected);
        }
        rejected += 1;
    }
}

/// Generates `count` records with the propagator's setup and streams them to `sink`.
///
/// Records are computed in parallel chunks and written in index order, so the
/// output depends only on `seed` and the setup.
pub fn generate_dataset<S: RecordSink + ?Sized>(
    count: usize,
    propagator: &Propagator,
    seed: u64,
    with_features: bool,
    sink: &mut S,
) -> Result<DatasetSummary> {
    let geometry = propagator.geometry();
    let header = DatasetHeader {
        n_sections: geometry.n_sections,
        grid: propagator.grid(),
        mode: propagator.mode(),
        features: with_features,
        fingerprint: *propagator.table().fingerprint(),
        count: count as u64,
    };
    let partial =
        |written: usize| move |source: io::Error| Error::PartialOutput { written, source };
    sink.begin(&header).map_err(partial(0))?;

    let mut hasher = Sha256::new();
    let mut bytes = Vec::with_capacity(header.record_len());
    let mut summary = DatasetSummary {
        count: 0,
        resampled: 0,
        open_sections: 0,
        checksum: [0; 32],
    };
    for start in (0..count).step_by(CHUNK) {
        let end = (start + CHUNK).min(count);
        let chunk = (start..end)
            .into_par_iter()
            .map(|i| {
                let (mask, rejected) = record_mask(seed, i as u64, geometry.n_sections);
                let pattern = propagator.pattern(&mask)?;
                let features = if with_features {
                    Some(compute_fft_features(&pattern)?)
                } else {
                    None
                };
                Ok((
                    DatasetRecord {
                        mask,
                        pattern,
                        features,
                    },
                    rejected,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        for (record, rejected) in chunk {
            sink.record(&record).map_err(partial(summary.count))?;
            bytes.clear();
            record.encode(&mut bytes);
            hasher.update(&bytes);
            summary.count += 1;
            summary.resampled += rejected;
            summary.open_sections += record.mask.count_open();
        }
    }
    sink.finish().map_err(partial(summary.count))?;
    summary.checksum = hasher.finalize().into();
    Ok(summary)
}

/// Decodes an entire `MWLD` buffer.
pub fn read_dataset(bytes: &[u8]) -> Result<(DatasetHeader, Vec<DatasetRecord>)> {
    let header = DatasetHeader::from_bytes(bytes)?;
    let record_len = header.record_len();
    let expected = DATASET_HEADER_LEN as u64 + header.count * record_len as u64;
    if bytes.len() as u64 != expected {
        return Err(Error::Truncated {
            expected,
            found: bytes.len() as u64,
        });
    }
    let n_det = header.grid.len();
    let half = n_det / 2 + 1;
    let records = bytes[DATASET_HEADER_LEN..]
        .chunks_exact(record_len)
        .map(|chunk| {
            let mask = Mask::from_bits(&chunk[..header.n_sections])?;
            let mut r = Reader::new(&chunk[header.n_sections..]);
            let values = (0..n_det).map(|_| r.f64()).collect();
            let pattern = IntensityPattern::new(header.grid, values, Normalization::PeakOne)?;
            let features = header.features.then(|| FftFeatures {
                modulus: (0..half).map(|_| r.f64()).collect(),
                angle: (0..half).map(|_| r.f64()).collect(),
            });
            Ok(DatasetRecord {
                mask,
                pattern,
                features,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((header, records))
}

/// Re-runs the forward model on every `stride`-th record and returns the largest
/// absolute deviation from the stored pattern.
pub fn spot_check(
    records: &[DatasetRecord],
    propagator: &Propagator,
    stride: usize,
) -> Result<f64> {
    let stride = stride.max(1);
    records
        .par_iter()
        .step_by(stride)
        .map(|rec| {
            let fresh = propagator.pattern(&rec.mask)?;
            Ok(fresh
                .values
                .iter()
                .zip(&rec.pattern.values)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs())))
        })
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
}

/// Train/validation/test partition of record indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

/// Shuffled 81/9/10 partition; the test part takes the rounding remainder.
pub fn split_indices(count: usize, seed: u64) -> Split {
    use rand::seq::SliceRandom;
    let mut idx: Vec<usize> = (0..count).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = count * 81 / 100;
    let n_val = count * 9 / 100;
    let test = idx.split_off(n_train + n_val);
    let validation = idx.split_off(n_train);
    Split {
        train: idx,
        validation,
        test,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::GeometryConfig;

    fn propagator(n: usize) -> Propagator {
        let mut g = GeometryConfig::helium_sin_membrane(1e-48, 6.646_477e-27);
        g.n_sections = n;
        Propagator::new(&g, DetectorGrid::new(15e-6, 64).unwrap(), Mode::Matter).unwrap()
    }

    fn pattern(values: Vec<f64>) -> IntensityPattern {
        let grid = DetectorGrid::new(1.0, values.len()).unwrap();
        IntensityPattern::new(grid, values, Normalization::PeakOne).unwrap()
    }

    #[test]
    fn random_masks_are_reproducible_and_balanced() {
        let a = random_mask(&mut record_rng(7, 3), 50);
        let b = random_mask(&mut record_rng(7, 3), 50);
        assert_eq!(a, b);
        assert_ne!(a, random_mask(&mut record_rng(7, 4), 50));
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let open: usize = (0..10_000)
            .map(|_| random_mask(&mut rng, 50).count_open())
            .sum();
        let frac = open as f64 / 500_000.0;
        assert!((0.45..=0.55).contains(&frac), "{frac}");
    }

    #[test]
    fn constant_pattern_has_only_dc() {
        let f = compute_fft_features(&pattern(vec![0.5; 16])).unwrap();
        assert_eq!(f.modulus.len(), 9);
        assert!((f.modulus[0] - 8.0).abs() < 1e-12);
        assert!(f.modulus[1..].iter().all(|m| m.abs() < 1e-12));
    }

    #[test]
    fn cosine_peaks_at_its_bin() {
        let n = 64;
        let k = 5;
        let values: Vec<f64> = (0..n)
            .map(|j| 1.0 + 0.5 * (2.0 * PI * (k * j) as f64 / n as f64).cos())
            .collect();
        let f = compute_fft_features(&pattern(values.clone())).unwrap();
        // direct DFT oracle
        for (bin, m) in f.modulus.iter().enumerate() {
            let direct: Complex64 = values
                .iter()
                .enumerate()
                .map(|(j, v)| Complex64::from_polar(*v, -2.0 * PI * (bin * j) as f64 / n as f64))
                .sum();
            assert!((direct.norm() - m).abs() < 1e-10);
        }
        let peak = (1..f.modulus.len())
            .max_by(|&a, &b| f.modulus[a].total_cmp(&f.modulus[b]))
            .unwrap();
        assert_eq!(peak, k);
        assert!((f.modulus[k] - 16.0).abs() < 1e-10);
    }

    #[test]
    fn parseval_and_angle_range() {
        for n in [15usize, 16] {
            let values: Vec<f64> = (0..n).map(|j| ((j * 7 % 5) as f64 + 0.3) / 5.0).collect();
            let f = compute_fft_features(&pattern(values.clone())).unwrap();
            let energy: f64 = values.iter().map(|v| v * v).sum();
            let mut spectral = f.modulus[0].powi(2);
            for k in 1..f.modulus.len() {
                let doubled = !(n % 2 == 0 && k == n / 2);
                spectral += if doubled { 2.0 } else { 1.0 } * f.modulus[k].powi(2);
            }
            spectral /= n as f64;
            assert!((energy - spectral).abs() < 1e-10 * energy);
            assert!(f.angle.iter().all(|a| *a > -PI && *a <= PI));
        }
    }

    #[test]
    fn split_proportions() {
        let s = split_indices(1000, 3);
        assert_eq!(
            (s.train.len(), s.validation.len(), s.test.len()),
            (810, 90, 100)
        );
        let mut all: Vec<usize> = s
            .train
            .iter()
            .chain(&s.validation)
            .chain(&s.test)
            .copied()
            .collect();
        all.sort_unstable();
        assert_eq!(all, (0..1000).collect::<Vec<_>>());
    }

    #[test]
    fn empty_dataset() {
        let p = propagator(8);
        let mut w = MwldWriter::new(Vec::new());
        let s = generate_dataset(0, &p, 1, false, &mut w).unwrap();
        assert_eq!(s.count, 0);
        let empty: [u8; 32] = Sha256::digest([]).into();
        assert_eq!(s.checksum, empty);
        let bytes = w.into_inner();
        assert_eq!(bytes.len(), DATASET_HEADER_LEN);
        let (h, recs) = read_dataset(&bytes).unwrap();
        assert_eq!(h.count, 0);
        assert!(recs.is_empty());
    }

    #[test]
    fn records_satisfy_forward_model() {
        let p = propagator(8);
        let mut w = MwldWriter::new(Vec::new());
        let s = generate_dataset(300, &p, 5, true, &mut w).unwrap();
        // 8 sections: all-closed has probability 1/256, expect some rejections
        assert_eq!(s.count, 300);
        let bytes = w.into_inner();
        let (h, recs) = read_dataset(&bytes).unwrap();
        assert!(h.features);
        assert_eq!(recs.len(), 300);
        assert!(recs.iter().all(|r| !r.mask.is_all_closed()));
        assert_eq!(spot_check(&recs, &p, 1).unwrap(), 0.0);
        for r in recs.iter().take(5) {
            assert_eq!(
                r.features.as_ref().unwrap(),
                &compute_fft_features(&r.pattern).unwrap()
            );
        }
        // checksum covers exactly the record bytes
        let digest: [u8; 32] = Sha256::digest(&bytes[DATASET_HEADER_LEN..]).into();
        assert_eq!(s.checksum, digest);
    }

    #[test]
    fn generation_is_deterministic() {
        let p = propagator(8);
        let run = || {
            let mut w = (
                MwldWriter::new(Vec::new()),
                JsonLinesWriter::new(Vec::new()),
            );
            generate_dataset(50, &p, 9, false, &mut w).unwrap();
            (w.0.into_inner(), w.1.inner)
        };
        let (a_bin, a_txt) = run();
        let (b_bin, b_txt) = run();
        assert_eq!(a_bin, b_bin);
        assert_eq!(a_txt, b_txt);
        let text = String::from_utf8(a_txt).unwrap();
        assert_eq!(text.lines().count(), 50);
        let (_, recs) = read_dataset(&a_bin).unwrap();
        let (mask, pattern) = parse_text_record(text.lines().next().unwrap()).unwrap();
        assert_eq!(mask, recs[0].mask);
        assert_eq!(pattern, recs[0].pattern.values);
    }

    struct FailingSink {
        accepted: usize,
    }

    impl RecordSink for FailingSink {
        fn begin(&mut self, _: &DatasetHeader) -> io::Result<()> {
            Ok(())
        }
        fn record(&mut self, _: &DatasetRecord) -> io::Result<()> {
            if self.accepted == 3 {
                return Err(io::Error::other("disk full"));
            }
            self.accepted += 1;
            Ok(())
        }
        fn finish(&mut self) -> io::Result<()> {
            Ok(())
        }
    }

    #[test]
    fn sink_failure_reports_progress() {
        let p = propagator(8);
        let err = generate_dataset(10, &p, 1, false, &mut FailingSink { accepted: 0 }).unwrap_err();
        assert!(matches!(err, Error::PartialOutput { written: 3, .. }));
    }

    #[test]
    fn truncated_dataset_is_rejected() {
        let p = propagator(8);
        let mut w = MwldWriter::new(Vec::new());
        generate_dataset(4, &p, 1, false, &mut w).unwrap();
        let bytes = w.into_inner();
        assert!(matches!(
            read_dataset(&bytes[..bytes.len() - 1]),
            Err(Error::Truncated { .. })
        ));
    }
}
