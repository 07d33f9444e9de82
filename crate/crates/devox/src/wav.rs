//! RIFF/WAVE reading and writing: PCM 16-bit and IEEE float32,
//! little-endian. Files are written with the canonical 44-byte header;
//! readers accept extra chunks (LIST, fact, ...) and the extensible format
//! tag, skipping what they do not need.

use std::io::{Read, Seek, SeekFrom};
use std::path::Path;

use devox_core::AudioClip;

use crate::error::{Error, Result};

/// On-disk sample encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleFormat {
    /// PCM 16-bit; amplitudes scale by 1/32768, writes saturate.
    Int16,
    /// IEEE 754 float32; lossless round trip.
    Float32,
}

impl SampleFormat {
    fn bytes_per_sample(self) -> usize {
        match self {
            SampleFormat::Int16 => 2,
            SampleFormat::Float32 => 4,
        }
    }

    fn format_code(self) -> u16 {
        match self {
            SampleFormat::Int16 => 1,
            SampleFormat::Float32 => 3,
        }
    }
}

impl std::str::FromStr for SampleFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "int16" => Ok(SampleFormat::Int16),
            "float32" => Ok(SampleFormat::Float32),
            other => Err(format!("unknown sample format `{other}` (int16|float32)")),
        }
    }
}

/// Header facts without decoding the payload.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WavInfo {
    pub channels: u16,
    pub sample_rate: u32,
    pub frames: u64,
}

pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioClip> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_wav(&bytes)
}

pub fn write_wav(path: impl AsRef<Path>, clip: &AudioClip, format: SampleFormat) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_wav(clip, format);
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

struct FmtChunk {
    format: SampleFormat,
    channels: u16,
    sample_rate: u32,
}

fn parse_fmt(payload: &[u8]) -> Result<FmtChunk> {
    if payload.len() < 16 {
        return Err(Error::MalformedWav("fmt chunk shorter than 16 bytes".into()));
    }
    let mut code = u16::from_le_bytes([payload[0], payload[1]]);
    let channels = u16::from_le_bytes([payload[2], payload[3]]);
    let sample_rate = u32::from_le_bytes(payload[4..8].try_into().unwrap());
    let bits = u16::from_le_bytes([payload[14], payload[15]]);
    if code == 0xFFFE {
        // WAVE_FORMAT_EXTENSIBLE: the real code leads the SubFormat GUID.
        if payload.len() < 40 {
            return Err(Error::MalformedWav("extensible fmt chunk shorter than 40 bytes".into()));
        }
        code = u16::from_le_bytes([payload[24], payload[25]]);
    }
    let format = match (code, bits) {
        (1, 16) => SampleFormat::Int16,
        (3, 32) => SampleFormat::Float32,
        _ => {
            return Err(Error::UnsupportedFormat(format!(
                "format code {code} with {bits} bits per sample (PCM int16 and IEEE float32 only)"
            )))
        }
    };
    if channels == 0 || channels > 2 {
        return Err(Error::UnsupportedFormat(format!(
            "{channels} channels (mono or stereo only)"
        )));
    }
    if sample_rate == 0 {
        return Err(Error::MalformedWav("sample rate of zero".into()));
    }
    Ok(FmtChunk { format, channels, sample_rate })
}

pub(crate) fn decode_wav(bytes: &[u8]) -> Result<AudioClip> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(Error::MalformedWav("missing RIFF/WAVE header".into()));
    }
    let mut fmt: Option<FmtChunk> = None;
    let mut data: Option<&[u8]> = None;
    let mut at = 12usize;
    while at + 8 <= bytes.len() {
        let id = &bytes[at..at + 4];
        let size = u32::from_le_bytes(bytes[at + 4..at + 8].try_into().unwrap()) as usize;
        let start = at + 8;
        let end = start
            .checked_add(size)
            .ok_or_else(|| Error::MalformedWav("chunk size overflows".into()))?;
        if end > bytes.len() {
            return Err(Error::MalformedWav(format!(
                "chunk `{}` of {size} bytes extends past end of file",
                String::from_utf8_lossy(id)
            )));
        }
        match id {
            b"fmt " => fmt = Some(parse_fmt(&bytes[start..end])?),
            b"data" => {
                data = Some(&bytes[start..end]);
            }
            _ => {} // skip LIST, fact, cue, ...
        }
        at = end + (size & 1); // chunks are word-aligned
    }
    let fmt = fmt.ok_or_else(|| Error::MalformedWav("no fmt chunk".into()))?;
    let data = data.ok_or_else(|| Error::MalformedWav("no data chunk".into()))?;

    let sample_bytes = fmt.format.bytes_per_sample();
    let block = sample_bytes * fmt.channels as usize;
    if data.len() % block != 0 {
        return Err(Error::MalformedWav(format!(
            "data chunk of {} bytes is not a whole number of {}-byte frames",
            data.len(),
            block
        )));
    }
    let frames = data.len() / block;
    let mut channels = vec![Vec::with_capacity(frames); fmt.channels as usize];
    match fmt.format {
        SampleFormat::Int16 => {
            for frame in data.chunks_exact(block) {
                for (c, sample) in frame.chunks_exact(2).enumerate() {
                    let v = i16::from_le_bytes([sample[0], sample[1]]);
                    channels[c].push(v as f32 / 32768.0);
                }
            }
        }
        SampleFormat::Float32 => {
            for frame in data.chunks_exact(block) {
                for (c, sample) in frame.chunks_exact(4).enumerate() {
                    channels[c].push(f32::from_le_bytes(sample.try_into().unwrap()));
                }
            }
        }
    }
    Ok(AudioClip::new(channels, fmt.sample_rate)?)
}

pub(crate) fn encode_wav(clip: &AudioClip, format: SampleFormat) -> Vec<u8> {
    let channels = clip.channels() as u16;
    let bits = (format.bytes_per_sample() * 8) as u16;
    let block_align = channels * format.bytes_per_sample() as u16;
    let byte_rate = clip.sample_rate() * block_align as u32;
    let data_len = clip.frames() * block_align as usize;

    let mut out = Vec::with_capacity(44 + data_len);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len as u32).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&format.format_code().to_le_bytes());
    out.extend_from_slice(&channels.to_le_bytes());
    out.extend_from_slice(&clip.sample_rate().to_le_bytes());
    out.extend_from_slice(&byte_rate.to_le_bytes());
    out.extend_from_slice(&block_align.to_le_bytes());
    out.extend_from_slice(&bits.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    for t in 0..clip.frames() {
        for c in 0..clip.channels() {
            let v = clip.channel(c)[t];
            match format {
                SampleFormat::Int16 => {
                    let scaled = (v as f64 * 32768.0).round().clamp(-32768.0, 32767.0);
                    out.extend_from_slice(&(scaled as i16).to_le_bytes());
                }
                SampleFormat::Float32 => out.extend_from_slice(&v.to_le_bytes()),
            }
        }
    }
    out
}

/// Reads channel count, rate and frame count from the header alone.
pub fn read_info(path: impl AsRef<Path>) -> Result<WavInfo> {
    let path = path.as_ref();
    let mut file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut head = [0u8; 12];
    file.read_exact(&mut head).map_err(|e| Error::io(path, e))?;
    if &head[0..4] != b"RIFF" || &head[8..12] != b"WAVE" {
        return Err(Error::MalformedWav("missing RIFF/WAVE header".into()));
    }
    let mut fmt: Option<FmtChunk> = None;
    let mut data_len: Option<u64> = None;
    loop {
        let mut chunk_head = [0u8; 8];
        match file.read_exact(&mut chunk_head) {
            Ok(()) => {}
            Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => break,
            Err(e) => return Err(Error::io(path, e)),
        }
        let size = u32::from_le_bytes(chunk_head[4..8].try_into().unwrap()) as u64;
        match &chunk_head[0..4] {
            b"fmt " => {
                let take = size.min(64) as usize;
                let mut payload = vec![0u8; take];
                file.read_exact(&mut payload).map_err(|e| Error::io(path, e))?;
                fmt = Some(parse_fmt(&payload)?);
                file.seek(SeekFrom::Current((size - take as u64 + (size & 1)) as i64))
                    .map_err(|e| Error::io(path, e))?;
            }
            b"data" => {
                data_len = Some(size);
                file.seek(SeekFrom::Current((size + (size & 1)) as i64))
                    .map_err(|e| Error::io(path, e))?;
            }
            _ => {
                file.seek(SeekFrom::Current((size + (size & 1)) as i64))
                    .map_err(|e| Error::io(path, e))?;
            }
        }
    }
    let fmt = fmt.ok_or_else(|| Error::MalformedWav("no fmt chunk".into()))?;
    let data_len = data_len.ok_or_else(|| Error::MalformedWav("no data chunk".into()))?;
    let block = (fmt.format.bytes_per_sample() as u64) * fmt.channels as u64;
    Ok(WavInfo {
        channels: fmt.channels,
        sample_rate: fmt.sample_rate,
        frames: data_len / block,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_fields_echo_back() {
        let clip = AudioClip::silence(2, 441, 44_100).unwrap();
        let bytes = encode_wav(&clip, SampleFormat::Int16);
        let back = decode_wav(&bytes).unwrap();
        assert_eq!(back.channels(), 2);
        assert_eq!(back.frames(), 441);
        assert_eq!(back.sample_rate(), 44_100);
    }

    #[test]
    fn int16_full_scale_negative_maps_to_minus_one() {
        let mut bytes = encode_wav(&AudioClip::silence(1, 1, 8_000).unwrap(), SampleFormat::Int16);
        let n = bytes.len();
        bytes[n - 2..].copy_from_slice(&(-32768i16).to_le_bytes());
        let clip = decode_wav(&bytes).unwrap();
        assert_eq!(clip.channel(0)[0], -1.0);
    }

    #[test]
    fn int16_write_saturates_out_of_range() {
        let clip = AudioClip::mono(vec![1.5, -1.5, 0.9999], 8_000).unwrap();
        let bytes = encode_wav(&clip, SampleFormat::Int16);
        let data = &bytes[44..];
        assert_eq!(i16::from_le_bytes([data[0], data[1]]), 32767);
        assert_eq!(i16::from_le_bytes([data[2], data[3]]), -32768);
    }

    #[test]
    fn float32_round_trip_is_byte_identical() {
        let clip = AudioClip::stereo(
            vec![0.1, -0.25, 1.0e-7, 0.999_999],
            vec![-1.0, 0.5, 3.25e-3, 0.0],
            48_000,
        )
        .unwrap();
        let bytes = encode_wav(&clip, SampleFormat::Float32);
        let back = decode_wav(&bytes).unwrap();
        assert_eq!(back, clip);
        assert_eq!(encode_wav(&back, SampleFormat::Float32), bytes);
    }

    #[test]
    fn int16_round_trip_within_one_lsb() {
        let samples: Vec<f32> = (-32768..=32767)
            .step_by(97)
            .map(|v| v as f32 / 32768.0)
            .collect();
        let clip = AudioClip::mono(samples.clone(), 8_000).unwrap();
        let back = decode_wav(&encode_wav(&clip, SampleFormat::Int16)).unwrap();
        for (a, b) in back.channel(0).iter().zip(&samples) {
            assert!((a - b).abs() <= 1.0 / 32768.0);
        }
    }

    #[test]
    fn zero_length_clip_round_trips() {
        let clip = AudioClip::silence(2, 0, 44_100).unwrap();
        let bytes = encode_wav(&clip, SampleFormat::Float32);
        assert_eq!(bytes.len(), 44);
        let back = decode_wav(&bytes).unwrap();
        assert_eq!(back.frames(), 0);
        assert_eq!(back.channels(), 2);
    }

    #[test]
    fn unknown_chunks_are_skipped() {
        let clip = AudioClip::mono(vec![0.5, -0.5], 8_000).unwrap();
        let body = encode_wav(&clip, SampleFormat::Float32);
        // splice a LIST chunk (odd size, needs pad byte) between header and fmt
        let mut bytes = body[..12].to_vec();
        bytes.extend_from_slice(b"LIST");
        bytes.extend_from_slice(&5u32.to_le_bytes());
        bytes.extend_from_slice(b"INFOx\0");
        bytes.extend_from_slice(&body[12..]);
        let riff_len = (bytes.len() - 8) as u32;
        bytes[4..8].copy_from_slice(&riff_len.to_le_bytes());
        let back = decode_wav(&bytes).unwrap();
        assert_eq!(back, clip);
    }

    #[test]
    fn extensible_fmt_is_accepted() {
        let clip = AudioClip::mono(vec![0.25, -0.125], 8_000).unwrap();
        let plain = encode_wav(&clip, SampleFormat::Float32);
        // rebuild with a 40-byte extensible fmt chunk
        let mut bytes = plain[..12].to_vec();
        bytes.extend_from_slice(b"fmt ");
        bytes.extend_from_slice(&40u32.to_le_bytes());
        let mut fmt = plain[20..36].to_vec(); // original 16-byte fmt payload
        fmt[0..2].copy_from_slice(&0xFFFEu16.to_le_bytes());
        fmt.extend_from_slice(&22u16.to_le_bytes()); // cbSize
        fmt.extend_from_slice(&32u16.to_le_bytes()); // valid bits
        fmt.extend_from_slice(&0u32.to_le_bytes()); // channel mask
        let mut guid = [0u8; 16];
        guid[0..2].copy_from_slice(&3u16.to_le_bytes()); // IEEE float
        fmt.extend_from_slice(&guid);
        bytes.extend_from_slice(&fmt);
        bytes.extend_from_slice(&plain[36..]);
        let riff_len = (bytes.len() - 8) as u32;
        bytes[4..8].copy_from_slice(&riff_len.to_le_bytes());
        assert_eq!(decode_wav(&bytes).unwrap(), clip);
    }

    #[test]
    fn unsupported_depths_are_rejected() {
        let clip = AudioClip::mono(vec![0.0; 4], 8_000).unwrap();
        let mut bytes = encode_wav(&clip, SampleFormat::Int16);
        bytes[34..36].copy_from_slice(&24u16.to_le_bytes()); // claim 24-bit
        assert!(matches!(
            decode_wav(&bytes),
            Err(Error::UnsupportedFormat(_))
        ));
    }

    #[test]
    fn truncated_data_chunk_is_malformed() {
        let clip = AudioClip::mono(vec![0.0; 4], 8_000).unwrap();
        let bytes = encode_wav(&clip, SampleFormat::Int16);
        assert!(matches!(
            decode_wav(&bytes[..bytes.len() - 3]),
            Err(Error::MalformedWav(_))
        ));
    }

    #[test]
    fn garbage_is_malformed() {
        assert!(matches!(
            decode_wav(b"not a wav file at all"),
            Err(Error::MalformedWav(_))
        ));
    }
}
